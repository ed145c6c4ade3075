#include <bit>
#include <iomanip>
#include <sstream>

#include "oppred/corpus/corpus.hpp"
#include "oppred/mir/interp.hpp"
#include "oppred/parallel.hpp"
#include "oppred/rng.hpp"

namespace oppred::corpus {

using mir::BasicBlock;
using mir::Cond;
using mir::Function;
using mir::Imm;
using mir::Instruction;
using mir::MemRef;
using mir::Opcode;
using mir::Program;

namespace {

Instruction ins(Opcode op, std::initializer_list<mir::Operand> ops) {
    return Instruction{op, std::vector<mir::Operand>(ops)};
}

// Base-program register convention: r0..r1 params (r0 doubles as the
// accumulator), r2 loop counter, r3/r4 temps, r5 data base. r6..r15 and
// f2..f7 stay free for the obfuscator.
constexpr uint8_t kAcc = 0;
constexpr uint8_t kCounter = 2;
constexpr uint8_t kTmp1 = 3;
constexpr uint8_t kTmp2 = 4;
constexpr uint8_t kDataBase = 5;

struct FnBuilder {
    Function fn;
    int next_label = 0;
    bool has_data = false;
    std::vector<int64_t> data_cells; // displacements off kDataBase

    std::string fresh() { return "L" + std::to_string(next_label++); }

    BasicBlock& block(const std::string& label) {
        fn.blocks.push_back(BasicBlock{label, {}, mir::Ret{mir::r(kAcc)}});
        return fn.blocks.back();
    }
};

// A couple of accumulator updates; optionally touches a data cell. Real
// code reassigns registers often, so some choices replace the value instead
// of extending it.
void emit_acc_ops(FnBuilder& b, BasicBlock& blk, Rng& rng, int count) {
    for (int i = 0; i < count; ++i) {
        if (rng.chance(25)) {
            // value-killing update
            if (b.has_data && !b.data_cells.empty() && rng.chance(50)) {
                int64_t cell = b.data_cells[rng.below(b.data_cells.size())];
                blk.instructions.push_back(
                    ins(Opcode::Load, {mir::r(kAcc), MemRef{mir::r(kDataBase), cell}}));
            } else if (b.fn.arity > 1 && rng.chance(60)) {
                blk.instructions.push_back(ins(Opcode::Mov, {mir::r(kAcc), mir::r(1)}));
                blk.instructions.push_back(ins(Opcode::Add, {mir::r(kAcc), Imm{rng.range(1, 255)}}));
            } else {
                blk.instructions.push_back(ins(Opcode::Mov, {mir::r(kAcc), mir::r(0)}));
                blk.instructions.push_back(ins(Opcode::Shr, {mir::r(kAcc), Imm{rng.range(1, 5)}}));
            }
            continue;
        }
        switch (rng.below(8)) {
            case 0: blk.instructions.push_back(ins(Opcode::Add, {mir::r(kAcc), Imm{rng.range(1, 4096)}})); break;
            case 1: blk.instructions.push_back(ins(Opcode::Xor, {mir::r(kAcc), Imm{rng.next() & 0xffffff}})); break;
            case 2: blk.instructions.push_back(ins(Opcode::Mul, {mir::r(kAcc), Imm{rng.range(3, 63) | 1}})); break;
            case 3: blk.instructions.push_back(ins(Opcode::Shr, {mir::r(kAcc), Imm{rng.range(1, 7)}})); break;
            case 4: blk.instructions.push_back(ins(Opcode::Sub, {mir::r(kAcc), Imm{rng.range(1, 999)}})); break;
            case 5:
                if (b.fn.arity > 1) {
                    blk.instructions.push_back(ins(Opcode::Add, {mir::r(kAcc), mir::r(1)}));
                    break;
                }
                [[fallthrough]];
            case 6:
                if (b.has_data && !b.data_cells.empty()) {
                    int64_t cell = b.data_cells[rng.below(b.data_cells.size())];
                    blk.instructions.push_back(
                        ins(Opcode::Load, {mir::r(kTmp1), MemRef{mir::r(kDataBase), cell}}));
                    blk.instructions.push_back(ins(Opcode::Xor, {mir::r(kAcc), mir::r(kTmp1)}));
                    break;
                }
                [[fallthrough]];
            default:
                blk.instructions.push_back(ins(Opcode::Or, {mir::r(kAcc), Imm{rng.range(1, 255)}}));
                break;
        }
    }
}

// A natural two-way condition; flips within the probe grid for the listed
// menus (verified afterwards anyway).
void emit_condition(FnBuilder& b, BasicBlock& blk, Rng& rng, Cond& cond_out) {
    switch (rng.below(b.fn.arity > 1 ? 6 : 5)) {
        case 0: {
            blk.instructions.push_back(ins(Opcode::Cmp, {mir::r(kAcc), Imm{rng.range(1, 200)}}));
            cond_out = rng.chance(50) ? Cond::Ult : Cond::Uge;
            break;
        }
        case 1: {
            blk.instructions.push_back(ins(Opcode::Mov, {mir::r(kTmp1), mir::r(kAcc)}));
            uint64_t mask = rng.chance(50) ? 7 : 15;
            blk.instructions.push_back(ins(Opcode::And, {mir::r(kTmp1), Imm{mask}}));
            blk.instructions.push_back(
                ins(Opcode::Cmp, {mir::r(kTmp1), Imm{rng.below(mask + 1)}}));
            cond_out = rng.chance(40) ? Cond::Eq : (rng.chance(50) ? Cond::Ne : Cond::Ult);
            break;
        }
        case 2: {
            uint64_t div = rng.chance(50) ? 5 : 9;
            blk.instructions.push_back(ins(Opcode::Mov, {mir::r(kTmp1), mir::r(0)}));
            blk.instructions.push_back(ins(Opcode::Urem, {mir::r(kTmp1), Imm{div}}));
            blk.instructions.push_back(ins(Opcode::Cmp, {mir::r(kTmp1), Imm{rng.below(div)}}));
            cond_out = rng.chance(50) ? Cond::Eq : Cond::Ult;
            break;
        }
        case 3: {
            if (b.has_data && !b.data_cells.empty()) {
                int64_t cell = b.data_cells[rng.below(b.data_cells.size())];
                blk.instructions.push_back(
                    ins(Opcode::Load, {mir::r(kTmp1), MemRef{mir::r(kDataBase), cell}}));
                blk.instructions.push_back(ins(Opcode::Mov, {mir::r(kTmp2), mir::r(kTmp1)}));
                blk.instructions.push_back(ins(Opcode::And, {mir::r(kTmp2), Imm{31}}));
                blk.instructions.push_back(ins(Opcode::Cmp, {mir::r(kTmp2), Imm{rng.below(32)}}));
                cond_out = rng.chance(50) ? Cond::Ult : Cond::Ne;
                break;
            }
            [[fallthrough]];
        }
        case 4: {
            // float compare against zero: flips exactly at input 0
            blk.instructions.push_back(ins(Opcode::Mov, {mir::f(0), mir::r(0)}));
            blk.instructions.push_back(
                ins(Opcode::MovImm, {mir::f(1), Imm{std::bit_cast<uint64_t>(0.0)}}));
            blk.instructions.push_back(ins(Opcode::Fcmp, {mir::f(0), mir::f(1)}));
            cond_out = rng.chance(50) ? Cond::Eq : Cond::Ne;
            break;
        }
        default: {
            blk.instructions.push_back(ins(Opcode::Cmp, {mir::r(0), mir::r(1)}));
            cond_out = rng.chance(40) ? Cond::Eq : (rng.chance(50) ? Cond::Ult : Cond::Ne);
            break;
        }
    }
}

Function make_helper(Rng& rng, const std::string& name) {
    FnBuilder b;
    b.fn.name = name;
    b.fn.arity = 1;
    b.fn.entry_block = "H0";
    BasicBlock& e = b.block("H0");
    int n = 1 + static_cast<int>(rng.below(3));
    for (int i = 0; i < n; ++i) {
        switch (rng.below(3)) {
            case 0: e.instructions.push_back(ins(Opcode::Mul, {mir::r(0), Imm{rng.range(3, 31) | 1}})); break;
            case 1: e.instructions.push_back(ins(Opcode::Xor, {mir::r(0), Imm{rng.range(1, 0xffff)}})); break;
            default: e.instructions.push_back(ins(Opcode::Add, {mir::r(0), Imm{rng.range(1, 512)}})); break;
        }
    }
    if (rng.chance(50)) {
        // one natural predicate inside the helper
        e.instructions.push_back(ins(Opcode::Mov, {mir::r(3), mir::r(0)}));
        e.instructions.push_back(ins(Opcode::And, {mir::r(3), Imm{7}}));
        e.instructions.push_back(ins(Opcode::Cmp, {mir::r(3), Imm{rng.below(8)}}));
        e.terminator = mir::CondJump{rng.chance(50) ? Cond::Ult : Cond::Ne, "H1", "H2", {}};
        BasicBlock& t = b.block("H1");
        t.instructions.push_back(ins(Opcode::Add, {mir::r(0), Imm{rng.range(1, 99)}}));
        t.terminator = mir::Jump{"H3"};
        BasicBlock& f2 = b.block("H2");
        f2.instructions.push_back(ins(Opcode::Xor, {mir::r(0), Imm{rng.range(1, 99)}}));
        f2.terminator = mir::Jump{"H3"};
        BasicBlock& j = b.block("H3");
        j.terminator = mir::Ret{mir::r(0)};
    } else {
        e.terminator = mir::Ret{mir::r(0)};
    }
    return b.fn;
}

Program build_candidate(uint64_t seed, const std::string& name) {
    Rng rng(seed);
    Program prog;
    prog.base_address = 0x400000;
    prog.entry_function = name;

    FnBuilder b;
    b.fn.name = name;
    b.fn.arity = rng.chance(55) ? 2 : 1;
    b.fn.entry_block = "L0";

    bool want_loop = rng.chance(45);
    bool want_helper = rng.chance(20);
    int diamonds = 1 + static_cast<int>(rng.below(3));
    b.has_data = rng.chance(50);

    BasicBlock* cur = &b.block(b.fresh());
    if (b.has_data) {
        cur->instructions.push_back(ins(Opcode::MovImm, {mir::r(kDataBase), Imm{mir::kDataBase}}));
        int cells = 1 + static_cast<int>(rng.below(3));
        for (int i = 0; i < cells; ++i) {
            int64_t disp = static_cast<int64_t>(8 * rng.below(32));
            b.data_cells.push_back(disp);
            if (rng.chance(60)) {
                cur->instructions.push_back(
                    ins(Opcode::Store, {MemRef{mir::r(kDataBase), disp}, mir::r(rng.below(b.fn.arity))}));
            } else {
                cur->instructions.push_back(ins(Opcode::Mov, {mir::r(kTmp1), mir::r(0)}));
                cur->instructions.push_back(ins(Opcode::Mul, {mir::r(kTmp1), Imm{rng.range(3, 12)}}));
                cur->instructions.push_back(
                    ins(Opcode::Store, {MemRef{mir::r(kDataBase), disp}, mir::r(kTmp1)}));
            }
        }
    }
    emit_acc_ops(b, *cur, rng, 1 + static_cast<int>(rng.below(2)));

    if (want_loop) {
        std::string header = b.fresh(), body = b.fresh(), exit = b.fresh();
        cur->instructions.push_back(ins(Opcode::MovImm, {mir::r(kCounter), Imm{0}}));
        cur->terminator = mir::Jump{header};
        BasicBlock& h = b.block(header);
        h.instructions.push_back(
            ins(Opcode::Cmp, {mir::r(kCounter), Imm{rng.range(2, 6)}}));
        h.terminator = mir::CondJump{Cond::Ult, body, exit, {}};
        BasicBlock& bd = b.block(body);
        emit_acc_ops(b, bd, rng, 1 + static_cast<int>(rng.below(2)));
        bd.instructions.push_back(ins(Opcode::Add, {mir::r(kCounter), Imm{1}}));
        bd.terminator = mir::Jump{header};
        cur = &b.block(exit);
    }

    for (int d = 0; d < diamonds; ++d) {
        Cond cond;
        emit_condition(b, *cur, rng, cond);
        std::string a = b.fresh(), c = b.fresh(), j = b.fresh();
        cur->terminator = mir::CondJump{cond, a, c, {}};
        BasicBlock& arm_a = b.block(a);
        emit_acc_ops(b, arm_a, rng, 1);
        arm_a.terminator = mir::Jump{j};
        BasicBlock& arm_b = b.block(c);
        emit_acc_ops(b, arm_b, rng, 1 + static_cast<int>(rng.below(2)));
        arm_b.terminator = mir::Jump{j};
        cur = &b.block(j);
    }

    if (want_helper) {
        std::string cont = b.fresh();
        cur->terminator = mir::Call{"h0", cont};
        cur = &b.block(cont);
    }

    if (rng.chance(50)) {
        cur->instructions.push_back(
            ins(Opcode::MovImm, {mir::r(kTmp2), Imm{mir::kOutputBase + 8 * rng.below(8)}}));
        cur->instructions.push_back(ins(Opcode::Store, {MemRef{mir::r(kTmp2), 0}, mir::r(kAcc)}));
    }
    cur->terminator = mir::Ret{mir::r(kAcc)};

    prog.functions.push_back(std::move(b.fn));
    if (want_helper) prog.functions.push_back(make_helper(rng, "h0"));
    return prog;
}

// Every CondJump must take both directions across the probe set; otherwise a
// "normal" predicate would be invariant on the oracle domain and break the
// FP accounting downstream.
bool probes_flip_all_sites(const Program& p) {
    mir::Machine m(p);
    if (m.num_sites() == 0) return true;
    std::vector<unsigned> seen(m.num_sites(), 0);
    mir::Machine::BranchHook hook = [&](int s, bool taken) {
        seen[s] |= taken ? 1u : 2u;
    };
    const Function* entry = p.find_function(p.entry_function);
    auto probes = obf::make_probe_inputs(entry ? entry->arity : 0);
    mir::Machine::RunState st;
    mir::Env env = mir::default_env();
    for (const auto& in : probes)
        m.run_with_state(in, env, mir::kDefaultStepBudget, st, &hook);
    for (unsigned s : seen)
        if (s != 3u) return false;
    return true;
}

} // namespace

Program make_base_program(uint64_t seed, const std::string& name) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        uint64_t s = seed ^ (0xa5a5ULL * attempt);
        Program p = build_candidate(s, name);
        if (!validate(p).empty()) continue;
        if (probes_flip_all_sites(p)) return p;
    }
    // Minimal guaranteed shape: one masked compare.
    Program p;
    p.entry_function = name;
    Function f;
    f.name = name;
    f.arity = 1;
    f.entry_block = "L0";
    BasicBlock e{"L0", {}, mir::Ret{mir::r(0)}};
    e.instructions.push_back(ins(Opcode::Mov, {mir::r(3), mir::r(0)}));
    e.instructions.push_back(ins(Opcode::And, {mir::r(3), Imm{7}}));
    e.instructions.push_back(ins(Opcode::Cmp, {mir::r(3), Imm{3}}));
    e.terminator = mir::CondJump{Cond::Ult, "L1", "L2", {}};
    BasicBlock t{"L1", {ins(Opcode::Add, {mir::r(0), Imm{13}})}, mir::Jump{"L3"}};
    BasicBlock g{"L2", {ins(Opcode::Xor, {mir::r(0), Imm{29}})}, mir::Jump{"L3"}};
    BasicBlock j{"L3", {}, mir::Ret{mir::r(0)}};
    f.blocks = {e, t, g, j};
    p.functions.push_back(std::move(f));
    return p;
}

Program make_tiny_program(uint64_t seed, const std::string& name) {
    Rng rng(seed);
    Program prog;
    prog.entry_function = name;
    FnBuilder b;
    b.fn.name = name;
    b.fn.arity = 1 + static_cast<int>(rng.below(2));
    b.fn.entry_block = "L0";
    b.has_data = false;

    BasicBlock* cur = &b.block(b.fresh());
    emit_acc_ops(b, *cur, rng, 1);
    bool loop = rng.chance(40);
    if (loop) {
        std::string header = b.fresh(), body = b.fresh(), exit = b.fresh();
        cur->instructions.push_back(ins(Opcode::MovImm, {mir::r(kCounter), Imm{0}}));
        cur->terminator = mir::Jump{header};
        BasicBlock& h = b.block(header);
        h.instructions.push_back(ins(Opcode::Cmp, {mir::r(kCounter), Imm{rng.range(2, 4)}}));
        h.terminator = mir::CondJump{Cond::Ult, body, exit, {}};
        BasicBlock& bd = b.block(body);
        bd.instructions.push_back(ins(Opcode::Add, {mir::r(kAcc), Imm{rng.range(1, 60)}}));
        bd.instructions.push_back(ins(Opcode::Add, {mir::r(kCounter), Imm{1}}));
        bd.terminator = mir::Jump{header};
        cur = &b.block(exit);
    }
    // pure register condition (no memory, no floats)
    uint64_t mask = rng.chance(50) ? 7 : 15;
    cur->instructions.push_back(ins(Opcode::Mov, {mir::r(kTmp1), mir::r(kAcc)}));
    cur->instructions.push_back(ins(Opcode::And, {mir::r(kTmp1), Imm{mask}}));
    cur->instructions.push_back(ins(Opcode::Cmp, {mir::r(kTmp1), Imm{rng.below(mask + 1)}}));
    Cond cond = rng.chance(50) ? Cond::Ult : Cond::Ne;
    std::string a = b.fresh(), c = b.fresh(), j = b.fresh();
    cur->terminator = mir::CondJump{cond, a, c, {}};
    BasicBlock& arm_a = b.block(a);
    arm_a.instructions.push_back(ins(Opcode::Add, {mir::r(kAcc), Imm{rng.range(1, 30)}}));
    arm_a.terminator = mir::Jump{j};
    BasicBlock& arm_b = b.block(c);
    arm_b.instructions.push_back(ins(Opcode::Xor, {mir::r(kAcc), Imm{rng.range(1, 30)}}));
    arm_b.terminator = mir::Jump{j};
    BasicBlock& join = b.block(j);
    join.terminator = mir::Ret{mir::r(kAcc)};
    prog.functions.push_back(std::move(b.fn));
    return prog;
}

std::string GenConfig::canonical() const {
    std::ostringstream os;
    os << "seed=" << seed << ";size=" << size << ";alpha_loop=" << budget.alpha_loop
       << ";alpha_paths=" << budget.alpha_paths << ";recipes=";
    for (size_t i = 0; i < recipes.size(); ++i) os << (i ? "|" : "") << recipes[i];
    return os.str();
}

uint64_t GenConfig::hash() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : canonical()) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::optional<ProgramBundle> make_bundle(const GenConfig& cfg, int index) {
    ProgramBundle bundle;
    bundle.seed_index = index;
    {
        std::ostringstream os;
        os << "s" << std::hex << cfg.seed << std::dec << "p" << std::setw(5)
           << std::setfill('0') << index;
        bundle.id = os.str();
    }
    uint64_t mix = cfg.seed ^ (0x9e37ULL * (static_cast<uint64_t>(index) + 1));
    uint64_t pseed = splitmix64(mix);
    bundle.original = make_base_program(pseed, "main");

    const std::string& recipe_text = cfg.recipes[index % cfg.recipes.size()];
    try {
        obf::Recipe recipe = obf::parse_recipe(recipe_text);
        Rng rng(pseed ^ 0x0bf5ULL);
        obf::RecipeResult r = obf::apply_recipe(bundle.original, "main", recipe, rng);
        bundle.obfuscated = std::move(r.program);
        bundle.log = std::move(r.log);
        bundle.recipe = recipe_text;
    } catch (const obf::TransformError&) {
        return std::nullopt;
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
    return bundle;
}

std::vector<rawdata::Sample> bundle_samples(const ProgramBundle& bundle,
                                            const symex::PathBudget& budget,
                                            int* truncated_sets) {
    std::vector<rawdata::Sample> out;
    const Program& p = bundle.obfuscated;
    for (const auto& fn : p.functions) {
        for (const auto& pid : enumerate_predicates(fn)) {
            auto states = symex::collect_states(p, fn, pid, budget);
            if (!states.empty() && states.front().truncated && truncated_sets)
                ++*truncated_sets;
            auto log_it = bundle.log.find(pid);
            rawdata::Label label =
                log_it != bundle.log.end() ? log_it->second.label : rawdata::Label::Normal;
            for (size_t pi = 0; pi < states.size(); ++pi) {
                for (rawdata::SetKind set :
                     {rawdata::SetKind::Set1, rawdata::SetKind::Set2, rawdata::SetKind::Set3}) {
                    rawdata::DocMeta meta;
                    meta.program = bundle.id;
                    meta.function = fn.name;
                    meta.predicate = pid;
                    meta.path_index = static_cast<int>(pi);
                    rawdata::Sample s;
                    s.document = rawdata::normalize(
                        rawdata::render_state(p, states[pi], set, std::move(meta)));
                    s.label = label;
                    s.recipe = bundle.recipe;
                    out.push_back(std::move(s));
                }
            }
        }
    }
    return out;
}

GeneratedCorpus generate_corpus(const GenConfig& cfg) {
    if (cfg.size < 1000 || cfg.size > 100000)
        throw std::invalid_argument("corpus size out of range [1000, 100000]");
    GeneratedCorpus out;
    for (const auto& r : cfg.recipes) obf::parse_recipe(r); // config validation

    const int op_total = cfg.size / 2;
    const int quota_true = op_total / 2;
    const int quota_false = op_total - op_total / 2;
    const int quota_normal = cfg.size - op_total;
    int need_true = quota_true, need_false = quota_false, need_normal = quota_normal;

    int max_programs = cfg.max_programs > 0 ? cfg.max_programs : std::max(cfg.size, 2000);
    const int batch = std::max(4 * max_threads(), 8);

    struct Made {
        std::optional<ProgramBundle> bundle;
        std::vector<rawdata::Sample> samples;
        int truncated = 0;
    };

    for (int base = 0; base < max_programs; base += batch) {
        int count = std::min(batch, max_programs - base);
        std::vector<Made> made(count);
        parallel_for(
            static_cast<size_t>(count),
            [&](size_t i) {
                made[i].bundle = make_bundle(cfg, base + static_cast<int>(i));
                if (made[i].bundle)
                    made[i].samples =
                        bundle_samples(*made[i].bundle, cfg.budget, &made[i].truncated);
            },
            cfg.parallel);

        for (int i = 0; i < count; ++i) {
            if (need_true == 0 && need_false == 0 && need_normal == 0) break;
            if (!made[i].bundle) {
                ++out.stats.programs_failed;
                continue;
            }
            out.stats.truncated_path_sets += made[i].truncated;
            // Units arrive as consecutive triples (set1, set2, set3).
            bool contributed = false;
            auto& samples = made[i].samples;
            for (size_t u = 0; u + 2 < samples.size(); u += 3) {
                int* need = nullptr;
                switch (samples[u].label) {
                    case rawdata::Label::Normal: need = &need_normal; break;
                    case rawdata::Label::OpTrue: need = &need_true; break;
                    case rawdata::Label::OpFalse: need = &need_false; break;
                }
                if (*need == 0) continue;
                --*need;
                contributed = true;
                out.stats.label_counts[rawdata::label_name(samples[u].label)] += 1;
                for (size_t k = 0; k < 3; ++k) out.samples.push_back(samples[u + k]);
            }
            if (contributed) {
                out.bundles.push_back(std::move(*made[i].bundle));
                ++out.stats.programs_used;
            }
        }
        if (need_true == 0 && need_false == 0 && need_normal == 0) break;
    }

    if (need_true != 0 || need_false != 0 || need_normal != 0) {
        std::ostringstream os;
        os << "corpus generation exhausted " << max_programs << " programs with quotas left"
           << " (normal " << need_normal << ", true " << need_true << ", false " << need_false
           << ")";
        throw std::runtime_error(os.str());
    }
    return out;
}

} // namespace oppred::corpus
