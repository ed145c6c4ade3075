#include <algorithm>
#include <set>
#include <sstream>

#include "oppred/obf/obfuscate.hpp"
#include "templates.hpp"

#include <cstdlib>

namespace oppred::obf {

using mir::BasicBlock;
using mir::CondJump;
using mir::Function;
using mir::Imm;
using mir::Instruction;
using mir::MemRef;
using mir::Opcode;
using mir::Program;

const char* kind_name(OpaqueKind k) {
    switch (k) {
        case OpaqueKind::Arithmetic: return "Arithmetic";
        case OpaqueKind::MBA: return "MBA";
        case OpaqueKind::Alias: return "Alias";
        case OpaqueKind::Environment: return "Environment";
        case OpaqueKind::BiOpaqueFloat: return "BiOpaqueFloat";
        case OpaqueKind::BiOpaqueSymMem: return "BiOpaqueSymMem";
    }
    return "?";
}

bool parse_kind(const std::string& s, OpaqueKind& out) {
    if (s == "Arithmetic") out = OpaqueKind::Arithmetic;
    else if (s == "MBA") out = OpaqueKind::MBA;
    else if (s == "Alias") out = OpaqueKind::Alias;
    else if (s == "Environment") out = OpaqueKind::Environment;
    else if (s == "BiOpaqueFloat") out = OpaqueKind::BiOpaqueFloat;
    else if (s == "BiOpaqueSymMem") out = OpaqueKind::BiOpaqueSymMem;
    else return false;
    return true;
}

namespace {

Instruction ins(Opcode op, std::initializer_list<mir::Operand> ops) {
    return Instruction{op, std::vector<mir::Operand>(ops)};
}

} // namespace

// ---- Recipe text -----------------------------------------------------------

Recipe parse_recipe(const std::string& text) {
    Recipe out;
    // split on commas at paren depth zero
    std::vector<std::string> parts;
    std::string cur;
    int depth = 0;
    for (char c : text) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == ',' && depth == 0) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) parts.push_back(cur);

    for (auto& raw : parts) {
        std::string t;
        for (char c : raw)
            if (!std::isspace(static_cast<unsigned char>(c))) t.push_back(c);
        if (t.empty()) continue;
        if (t.rfind("AddOpaque(", 0) == 0 && t.back() == ')') {
            std::string inner = t.substr(10, t.size() - 11);
            size_t comma = inner.find(',');
            std::string kind_s = comma == std::string::npos ? inner : inner.substr(0, comma);
            int count = 1;
            if (comma != std::string::npos) count = std::stoi(inner.substr(comma + 1));
            OpaqueKind kind;
            if (!parse_kind(kind_s, kind))
                throw std::invalid_argument("unknown opaque kind: " + kind_s);
            if (count < 1 || count > 64)
                throw std::invalid_argument("AddOpaque count out of range");
            out.transforms.push_back(AddOpaque{kind, count});
        } else if (t == "EncodeArithmetic") {
            out.transforms.push_back(EncodeArithmetic{});
        } else if (t == "EncodeLiterals") {
            out.transforms.push_back(EncodeLiterals{});
        } else if (t == "EncodeData") {
            out.transforms.push_back(EncodeData{});
        } else if (t == "Flatten") {
            out.transforms.push_back(Flatten{});
        } else {
            throw std::invalid_argument("unknown transform: " + t);
        }
    }
    if (out.transforms.empty()) throw std::invalid_argument("empty recipe");
    return out;
}

std::string recipe_to_string(const Recipe& r) {
    std::string out;
    for (size_t i = 0; i < r.transforms.size(); ++i) {
        if (i) out += ",";
        const Transform& t = r.transforms[i];
        if (const auto* a = std::get_if<AddOpaque>(&t)) {
            out += std::string("AddOpaque(") + kind_name(a->kind) + "," +
                   std::to_string(a->count) + ")";
        } else if (std::holds_alternative<EncodeArithmetic>(t)) {
            out += "EncodeArithmetic";
        } else if (std::holds_alternative<EncodeLiterals>(t)) {
            out += "EncodeLiterals";
        } else if (std::holds_alternative<EncodeData>(t)) {
            out += "EncodeData";
        } else {
            out += "Flatten";
        }
    }
    return out;
}

// ---- Context ---------------------------------------------------------------

std::vector<std::vector<uint64_t>> make_probe_inputs(int arity) {
    std::vector<std::vector<uint64_t>> out;
    if (arity == 0) {
        out.push_back({});
        return out;
    }
    static const uint64_t singles[] = {0, 1, 2, 3, 4, 5, 7, 9, 16, 17, 63, 100, 128, 200, 255};
    if (arity == 1) {
        for (uint64_t v : singles) out.push_back({v});
        return out;
    }
    // arity >= 2: axis values plus a small grid on the first two inputs
    static const uint64_t grid[] = {0, 1, 2, 3, 5, 8, 13, 255};
    for (uint64_t a : grid)
        for (uint64_t b : grid) {
            std::vector<uint64_t> v(arity, 0);
            v[0] = a;
            v[1] = b;
            out.push_back(std::move(v));
        }
    for (uint64_t s : singles) out.push_back(std::vector<uint64_t>(arity, s));
    return out;
}

ObfContext ObfContext::for_function(const Program& p, const std::string& fn) {
    ObfContext ctx;
    const Function* f = p.find_function(fn);
    if (!f) throw TransformError("function not found: " + fn);
    ctx.live_int = mir::int_regs_used(*f);
    ctx.live_float = mir::float_regs_used(*f);
    ctx.probe_inputs = make_probe_inputs(f->arity);
    for (const auto& b : f->blocks) {
        if (b.label.rfind("ob", 0) == 0) {
            int n = atoi(b.label.c_str() + 2);
            ctx.next_label = std::max(ctx.next_label, n + 1);
        }
    }
    return ctx;
}

std::string ObfContext::fresh_label() { return "ob" + std::to_string(next_label++); }

uint32_t ObfContext::alloc_scratch_cell(uint32_t bytes) {
    uint32_t at = next_scratch;
    next_scratch += (bytes + 7) & ~7u;
    if (next_scratch > mir::kOutputBase)
        throw TransformError("scratch region exhausted");
    return at;
}

namespace {

std::vector<uint8_t> free_int_regs(const std::array<bool, mir::kIntRegs>& live) {
    std::vector<uint8_t> out;
    for (int i = 0; i < mir::kIntRegs; ++i)
        if (!live[i]) out.push_back(static_cast<uint8_t>(i));
    return out;
}

std::vector<uint8_t> free_float_regs(const std::array<bool, mir::kFloatRegs>& live) {
    std::vector<uint8_t> out;
    for (int i = 0; i < mir::kFloatRegs; ++i)
        if (!live[i]) out.push_back(static_cast<uint8_t>(i));
    return out;
}

// Labels of blocks of `fn` executed under at least one probe input. Probe
// inputs live inside the 8-bit sweep domain, so any site found here is also
// observed by the oracle.
std::set<std::string> probe_reachable(const Program& p, const std::string& fn,
                                      const ObfContext& ctx) {
    mir::Machine m(p);
    std::set<std::string> reached;
    int fn_idx = -1;
    for (size_t i = 0; i < p.functions.size(); ++i)
        if (p.functions[i].name == fn) fn_idx = static_cast<int>(i);
    if (fn_idx < 0) return reached;
    mir::Machine::BlockHook hook = [&](int fi, int bi) {
        if (fi == fn_idx) reached.insert(m.block_label(fi, bi));
    };
    mir::Machine::RunState st;
    for (const auto& in : ctx.probe_inputs)
        m.run_with_state(in, ctx.env, mir::kDefaultStepBudget, st, nullptr, &hook);
    return reached;
}

std::vector<Instruction> make_bogus_body(Rng& rng, const std::vector<uint8_t>& scratch,
                                         ObfContext& ctx) {
    std::vector<Instruction> body;
    if (scratch.empty()) return body;
    // Corrupt some live registers: the block is unreachable in the
    // obfuscated program, and a wrongly resolved predicate must not go
    // unnoticed downstream.
    std::vector<uint8_t> live;
    for (int i = 0; i < mir::kIntRegs; ++i)
        if (ctx.live_int[i] && !ctx.reserved_int[i]) live.push_back(static_cast<uint8_t>(i));
    if (!live.empty()) {
        // r0 carries the return value by convention; hitting it makes a
        // wrongly resolved predicate visible to the differential check
        uint8_t victim = ctx.live_int[0] && rng.chance(60) ? 0 : live[rng.below(live.size())];
        body.push_back(ins(Opcode::Xor, {mir::r(victim), Imm{rng.next() | 1}}));
        if (rng.chance(50)) {
            uint8_t v2 = live[rng.below(live.size())];
            body.push_back(ins(Opcode::Add, {mir::r(v2), Imm{rng.range(1, 0xffff)}}));
        }
    }
    uint8_t a = scratch[rng.below(scratch.size())];
    uint8_t b = scratch[rng.below(scratch.size())];
    body.push_back(ins(Opcode::MovImm, {mir::r(a), Imm{rng.next()}}));
    body.push_back(ins(Opcode::MovImm, {mir::r(b), Imm{rng.next()}}));
    int n = 2 + static_cast<int>(rng.below(3));
    for (int i = 0; i < n; ++i) {
        switch (rng.below(5)) {
            case 0: body.push_back(ins(Opcode::Add, {mir::r(a), mir::r(b)})); break;
            case 1: body.push_back(ins(Opcode::Xor, {mir::r(a), Imm{rng.next()}})); break;
            case 2: body.push_back(ins(Opcode::Mul, {mir::r(b), Imm{rng.below(255) | 1}})); break;
            case 3: body.push_back(ins(Opcode::Shr, {mir::r(a), Imm{rng.below(31)}})); break;
            case 4: body.push_back(ins(Opcode::Sub, {mir::r(b), mir::r(a)})); break;
        }
    }
    if (rng.chance(40)) {
        uint32_t cell = ctx.alloc_scratch_cell(8);
        uint8_t pr = scratch[rng.below(scratch.size())];
        body.push_back(ins(Opcode::MovImm, {mir::r(pr), Imm{cell}}));
        body.push_back(ins(Opcode::Store, {MemRef{mir::r(pr), 0}, mir::r(a)}));
    }
    return body;
}

} // namespace

// ---- inject_opaque ---------------------------------------------------------

mir::PredicateId inject_opaque(Program& p, const std::string& fn, OpaqueKind kind,
                               Label polarity, Rng& rng, ObfContext& ctx) {
    if (polarity == Label::Normal) throw TransformError("polarity must be OP_TRUE or OP_FALSE");
    Function* f = p.find_function(fn);
    if (!f || f->blocks.empty()) throw TransformError("cannot inject into " + fn);

    auto reachable = probe_reachable(p, fn, ctx);
    std::vector<std::string> candidates;
    for (const auto& b : f->blocks)
        if (reachable.count(b.label)) candidates.push_back(b.label);
    if (candidates.empty()) throw TransformError("no probe-reachable injection site");
    // Bias toward early blocks: short entry-to-predicate paths keep the
    // analysis cheap, which is also where real obfuscators put most of
    // their predicates.
    std::string site;
    if (rng.chance(70)) {
        size_t third = std::max<size_t>(1, candidates.size() / 3);
        site = candidates[rng.below(third)];
    } else {
        site = candidates[rng.below(candidates.size())];
    }

    detail::TemplateRequest req;
    req.polarity = polarity;
    req.scratch_int = free_int_regs(ctx.live_int);
    req.scratch_float = free_float_regs(ctx.live_float);
    for (int i = 0; i < f->arity; ++i) req.param_regs.push_back(static_cast<uint8_t>(i));
    req.env = &ctx.env;
    req.ctx = &ctx;
    detail::PredicateTemplate tmpl = detail::build_template(kind, req, rng);

    // Split at the block start: the head keeps the original label (so all
    // inbound edges route through the predicate), the tail gets a fresh one.
    std::string tail_label = ctx.fresh_label();
    std::string bogus_label = ctx.fresh_label();
    int site_idx = f->block_index(site);

    BasicBlock tail;
    tail.label = tail_label;
    tail.instructions = std::move(f->blocks[site_idx].instructions);
    tail.terminator = std::move(f->blocks[site_idx].terminator);

    BasicBlock bogus;
    bogus.label = bogus_label;
    bogus.instructions = make_bogus_body(rng, req.scratch_int, ctx);
    bogus.terminator = mir::Jump{tail_label};

    BasicBlock& head = f->blocks[site_idx];
    head.instructions = std::move(tmpl.code);
    uint32_t tag = ctx.next_tag++;
    CondJump cj;
    cj.cond = tmpl.cond;
    cj.tag = tag;
    if (polarity == Label::OpTrue) {
        cj.taken = tail_label;
        cj.fallthrough = bogus_label;
    } else {
        cj.taken = bogus_label;
        cj.fallthrough = tail_label;
    }
    head.terminator = cj;

    f->blocks.insert(f->blocks.begin() + site_idx + 1, std::move(tail));
    f->blocks.insert(f->blocks.begin() + site_idx + 2, std::move(bogus));

    LogEntry entry;
    entry.label = polarity;
    entry.kind = kind;
    entry.template_id = tmpl.id;
    ctx.tagged[tag] = entry;

    // Light verification on the probe set: the new site must be observed and
    // must always branch with the declared polarity.
    mir::Machine m(p);
    mir::PredicateId pid;
    bool found = false;
    for (const auto& id : enumerate_predicates(*f)) {
        if (id.block == site) {
            const BasicBlock* blk = f->find_block(id.block);
            const auto* c = std::get_if<CondJump>(&blk->terminator);
            if (c && c->tag == tag) {
                pid = id;
                found = true;
            }
        }
    }
    if (!found) throw TransformError("internal: injected predicate not enumerable");
    int site_no = m.site_index(pid);
    bool observed = false, wrong = false;
    mir::Machine::BranchHook hook = [&](int s, bool taken) {
        if (s != site_no) return;
        observed = true;
        if (taken != (polarity == Label::OpTrue)) wrong = true;
    };
    mir::Machine::RunState st;
    for (const auto& in : ctx.probe_inputs)
        m.run_with_state(in, ctx.env, mir::kDefaultStepBudget, st, &hook, nullptr);
    if (!observed) throw TransformError("injected predicate not observed by probes");
    if (wrong) throw TransformError("injected predicate violated its polarity");
    return pid;
}

// ---- encode_arithmetic -----------------------------------------------------

namespace {

std::vector<uint8_t> pick_unused(const Function& f, const ObfContext& ctx, size_t want) {
    auto used = mir::int_regs_used(f);
    std::vector<uint8_t> out;
    for (int i = 0; i < mir::kIntRegs && out.size() < want; ++i)
        if (!used[i] && !ctx.live_int[i]) out.push_back(static_cast<uint8_t>(i));
    if (out.size() < want) throw TransformError("no unused registers left for encoding");
    return out;
}

} // namespace

void encode_arithmetic(Program& p, const std::string& fn, Rng& rng, ObfContext& ctx) {
    (void)rng;
    Function* f = p.find_function(fn);
    if (!f) throw TransformError("function not found: " + fn);
    auto temps = pick_unused(*f, ctx, 2);
    uint8_t t1 = temps[0], t2 = temps[1];

    for (auto& b : f->blocks) {
        std::vector<Instruction> out;
        out.reserve(b.instructions.size() * 4);
        for (auto& insn : b.instructions) {
            bool eligible = (insn.op == Opcode::Add || insn.op == Opcode::Sub ||
                             insn.op == Opcode::Xor) &&
                            std::holds_alternative<mir::Reg>(insn.operands[0]) &&
                            !std::get<mir::Reg>(insn.operands[0]).is_float;
            if (!eligible) {
                out.push_back(std::move(insn));
                continue;
            }
            mir::Reg dst = std::get<mir::Reg>(insn.operands[0]);
            // Do not rewrite an op whose source is one of our own temps
            // (cannot happen for fresh temps, but keep the guard cheap).
            const mir::Operand& src = insn.operands[1];
            if (insn.op == Opcode::Add) {
                // x + y == (x ^ y) + 2*(x & y)
                out.push_back(ins(Opcode::Mov, {mir::r(t1), dst}));
                out.push_back(ins(Opcode::Xor, {mir::r(t1), src}));
                out.push_back(ins(Opcode::Mov, {mir::r(t2), dst}));
                out.push_back(ins(Opcode::And, {mir::r(t2), src}));
                out.push_back(ins(Opcode::Shl, {mir::r(t2), Imm{1}}));
                out.push_back(ins(Opcode::Mov, {dst, mir::r(t1)}));
                out.push_back(ins(Opcode::Add, {dst, mir::r(t2)}));
            } else if (insn.op == Opcode::Sub) {
                // x - y == (x ^ y) - 2*(~x & y)
                out.push_back(ins(Opcode::Mov, {mir::r(t1), dst}));
                out.push_back(ins(Opcode::Xor, {mir::r(t1), src}));
                out.push_back(ins(Opcode::Mov, {mir::r(t2), dst}));
                out.push_back(ins(Opcode::Not, {mir::r(t2)}));
                out.push_back(ins(Opcode::And, {mir::r(t2), src}));
                out.push_back(ins(Opcode::Shl, {mir::r(t2), Imm{1}}));
                out.push_back(ins(Opcode::Mov, {dst, mir::r(t1)}));
                out.push_back(ins(Opcode::Sub, {dst, mir::r(t2)}));
            } else {
                // x ^ y == (x | y) - (x & y)
                out.push_back(ins(Opcode::Mov, {mir::r(t1), dst}));
                out.push_back(ins(Opcode::Or, {mir::r(t1), src}));
                out.push_back(ins(Opcode::Mov, {mir::r(t2), dst}));
                out.push_back(ins(Opcode::And, {mir::r(t2), src}));
                out.push_back(ins(Opcode::Mov, {dst, mir::r(t1)}));
                out.push_back(ins(Opcode::Sub, {dst, mir::r(t2)}));
            }
        }
        b.instructions = std::move(out);
    }
}

// ---- encode_literals -------------------------------------------------------

void encode_literals(Program& p, const std::string& fn, Rng& rng, ObfContext& ctx) {
    (void)ctx;
    Function* f = p.find_function(fn);
    if (!f) throw TransformError("function not found: " + fn);
    for (auto& b : f->blocks) {
        std::vector<Instruction> out;
        out.reserve(b.instructions.size() * 2);
        for (auto& insn : b.instructions) {
            bool eligible = insn.op == Opcode::MovImm &&
                            std::holds_alternative<mir::Reg>(insn.operands[0]) &&
                            !std::get<mir::Reg>(insn.operands[0]).is_float;
            if (!eligible) {
                out.push_back(std::move(insn));
                continue;
            }
            mir::Reg dst = std::get<mir::Reg>(insn.operands[0]);
            uint64_t k = std::get<Imm>(insn.operands[1]).value;
            switch (rng.below(3)) {
                case 0: {
                    uint64_t m = rng.next();
                    out.push_back(ins(Opcode::MovImm, {dst, Imm{k ^ m}}));
                    out.push_back(ins(Opcode::Xor, {dst, Imm{m}}));
                    break;
                }
                case 1: {
                    uint64_t d = rng.next();
                    out.push_back(ins(Opcode::MovImm, {dst, Imm{k - d}}));
                    out.push_back(ins(Opcode::Add, {dst, Imm{d}}));
                    break;
                }
                default: {
                    uint64_t d = rng.next();
                    out.push_back(ins(Opcode::MovImm, {dst, Imm{k + d}}));
                    out.push_back(ins(Opcode::Sub, {dst, Imm{d}}));
                    break;
                }
            }
        }
        b.instructions = std::move(out);
    }
}

// ---- encode_data -----------------------------------------------------------

namespace {

// Constant values of registers at the end of the entry block's straight-line
// prefix (up to its terminator), considering movimm/add/sub/xor/shl with
// immediate operands only.
std::array<std::optional<uint64_t>, mir::kIntRegs> entry_constants(const Function& f) {
    std::array<std::optional<uint64_t>, mir::kIntRegs> vals;
    const mir::BasicBlock* entry = f.find_block(f.entry_block);
    if (!entry) return vals;
    for (const auto& insn : entry->instructions) {
        if (insn.operands.empty()) continue;
        const mir::Reg* dst = std::get_if<mir::Reg>(&insn.operands[0]);
        auto imm_src = [&]() -> std::optional<uint64_t> {
            if (insn.operands.size() < 2) return std::nullopt;
            if (const Imm* im = std::get_if<Imm>(&insn.operands[1])) return im->value;
            return std::nullopt;
        };
        if (!dst || dst->is_float) {
            // stores and fcmp do not touch integer registers
            continue;
        }
        int d = dst->index;
        std::optional<uint64_t> s = imm_src();
        switch (insn.op) {
            case Opcode::MovImm: vals[d] = s; break;
            case Opcode::Add: vals[d] = (vals[d] && s) ? std::optional(*vals[d] + *s) : std::nullopt; break;
            case Opcode::Sub: vals[d] = (vals[d] && s) ? std::optional(*vals[d] - *s) : std::nullopt; break;
            case Opcode::Xor: vals[d] = (vals[d] && s) ? std::optional(*vals[d] ^ *s) : std::nullopt; break;
            case Opcode::Shl: vals[d] = (vals[d] && s) ? std::optional(*vals[d] << (*s & 63)) : std::nullopt; break;
            default: vals[d] = std::nullopt; break;
        }
    }
    return vals;
}

} // namespace

void encode_data(Program& p, const std::string& fn, Rng& rng, ObfContext& ctx) {
    Function* f = p.find_function(fn);
    if (!f) throw TransformError("function not found: " + fn);
    auto consts = entry_constants(*f);

    // Candidate cells: data-region addresses reachable only through
    // constant-valued bases, whose first entry-block access is a store.
    struct Access { int block; int index; bool is_store; uint64_t addr; };
    std::vector<Access> accesses;
    std::set<uint64_t> resolvable, tainted;
    for (size_t bi = 0; bi < f->blocks.size(); ++bi) {
        const auto& b = f->blocks[bi];
        for (size_t ii = 0; ii < b.instructions.size(); ++ii) {
            const auto& insn = b.instructions[ii];
            const MemRef* m = nullptr;
            bool is_store = false;
            if (insn.op == Opcode::Load) m = std::get_if<MemRef>(&insn.operands[1]);
            else if (insn.op == Opcode::Store) {
                m = std::get_if<MemRef>(&insn.operands[0]);
                is_store = true;
            }
            if (!m) continue;
            auto base = consts[m->base.index];
            if (!base) continue; // template pointers live in the scratch region
            uint64_t addr = *base + static_cast<uint64_t>(m->disp);
            if (addr < mir::kDataBase || addr >= mir::kScratchBase) continue;
            accesses.push_back({static_cast<int>(bi), static_cast<int>(ii), is_store, addr});
            resolvable.insert(addr);
        }
    }
    (void)tainted;
    // first access must be a store (cells start zeroed; decoding a zero that
    // was never encoded would change behavior)
    std::set<uint64_t> seen_store;
    std::set<uint64_t> bad;
    for (const auto& a : accesses) {
        if (a.is_store) seen_store.insert(a.addr);
        else if (!seen_store.count(a.addr)) bad.insert(a.addr);
    }
    std::vector<uint64_t> candidates;
    for (uint64_t addr : resolvable)
        if (!bad.count(addr)) candidates.push_back(addr);
    if (candidates.empty()) return; // nothing encodable; leave the function alone

    uint64_t target = candidates[rng.below(candidates.size())];
    uint64_t key = rng.next();
    bool use_xor = rng.chance(60);
    auto temps = pick_unused(*f, ctx, 1);
    uint8_t t = temps[0];

    for (auto& b : f->blocks) {
        std::vector<Instruction> out;
        out.reserve(b.instructions.size() * 2);
        for (auto& insn : b.instructions) {
            const MemRef* m = nullptr;
            if (insn.op == Opcode::Load) m = std::get_if<MemRef>(&insn.operands[1]);
            else if (insn.op == Opcode::Store) m = std::get_if<MemRef>(&insn.operands[0]);
            uint64_t addr = 0;
            bool hit = false;
            if (m && consts[m->base.index]) {
                addr = *consts[m->base.index] + static_cast<uint64_t>(m->disp);
                hit = addr == target;
            }
            if (!hit) {
                out.push_back(std::move(insn));
                continue;
            }
            if (insn.op == Opcode::Store) {
                const mir::Operand& src = insn.operands[1];
                if (const Imm* im = std::get_if<Imm>(&src)) {
                    uint64_t enc = use_xor ? (im->value ^ key) : (im->value + key);
                    out.push_back(ins(Opcode::Store, {insn.operands[0], Imm{enc}}));
                } else {
                    out.push_back(ins(Opcode::Mov, {mir::r(t), src}));
                    out.push_back({use_xor ? Opcode::Xor : Opcode::Add, {mir::r(t), Imm{key}}});
                    out.push_back(ins(Opcode::Store, {insn.operands[0], mir::r(t)}));
                }
            } else {
                out.push_back(insn);
                mir::Reg dst = std::get<mir::Reg>(insn.operands[0]);
                out.push_back({use_xor ? Opcode::Xor : Opcode::Sub, {dst, Imm{key}}});
            }
        }
        b.instructions = std::move(out);
    }
}

// ---- flatten ----------------------------------------------------------------

void flatten(Program& p, const std::string& fn, Rng& rng, ObfContext& ctx) {
    Function* f = p.find_function(fn);
    if (!f) throw TransformError("function not found: " + fn);
    if (f->blocks.size() < 2) return; // nothing to flatten

    auto temps = pick_unused(*f, ctx, 1);
    uint8_t state = temps[0];
    ctx.live_int[state] = true; // live across the whole dispatch loop
    ctx.reserved_int[state] = true;

    // Distinct state ids per original block.
    std::vector<uint64_t> ids(f->blocks.size());
    std::set<uint64_t> taken_ids;
    for (auto& id : ids) {
        uint64_t v;
        do v = 0x10 + rng.below(0xffff);
        while (!taken_ids.insert(v).second);
        id = v;
    }

    std::string entry_label = f->entry_block;
    std::vector<BasicBlock> old_blocks = std::move(f->blocks);
    f->blocks.clear();

    auto id_of = [&](const std::string& label) -> uint64_t {
        for (size_t i = 0; i < old_blocks.size(); ++i)
            if (old_blocks[i].label == label) return ids[i];
        throw TransformError("flatten: unknown label " + label);
    };

    // Flattened body labels.
    std::vector<std::string> body_labels(old_blocks.size());
    for (size_t i = 0; i < old_blocks.size(); ++i) body_labels[i] = ctx.fresh_label();
    std::vector<std::string> disp_labels(old_blocks.size());
    for (size_t i = 0; i < old_blocks.size(); ++i) disp_labels[i] = ctx.fresh_label();

    // New entry keeps the function's entry label.
    BasicBlock new_entry;
    new_entry.label = entry_label;
    new_entry.instructions.push_back(ins(Opcode::MovImm, {mir::r(state), Imm{id_of(entry_label)}}));
    new_entry.terminator = mir::Jump{disp_labels[0]};
    f->blocks.push_back(std::move(new_entry));

    // Dispatcher chain: block i tests for original block i. The final test
    // falls through to the last body, which keeps the chain total.
    for (size_t i = 0; i + 1 < old_blocks.size(); ++i) {
        BasicBlock d;
        d.label = disp_labels[i];
        d.instructions.push_back(ins(Opcode::Cmp, {mir::r(state), Imm{ids[i]}}));
        std::string next = i + 2 < old_blocks.size() ? disp_labels[i + 1] : body_labels.back();
        d.terminator = CondJump{mir::Cond::Eq, body_labels[i], next, std::nullopt};
        f->blocks.push_back(std::move(d));
    }
    if (old_blocks.size() == 1) {
        BasicBlock d;
        d.label = disp_labels[0];
        d.terminator = mir::Jump{body_labels[0]};
        f->blocks.push_back(std::move(d));
    }

    for (size_t i = 0; i < old_blocks.size(); ++i) {
        BasicBlock body;
        body.label = body_labels[i];
        // The original entry label now names the state-init block, so the
        // body must be renamed; all control flow goes through the dispatcher
        // by state id, so only the terminators need rewriting.
        body.instructions = std::move(old_blocks[i].instructions);
        const mir::Terminator& t = old_blocks[i].terminator;
        if (const auto* j = std::get_if<mir::Jump>(&t)) {
            body.instructions.push_back(ins(Opcode::MovImm, {mir::r(state), Imm{id_of(j->target)}}));
            body.terminator = mir::Jump{disp_labels[0]};
        } else if (const auto* cj = std::get_if<CondJump>(&t)) {
            body.instructions.push_back(ins(Opcode::MovImm, {mir::r(state), Imm{id_of(cj->fallthrough)}}));
            std::string set_label = ctx.fresh_label();
            CondJump rewritten{cj->cond, set_label, disp_labels[0], cj->tag};
            body.terminator = rewritten;
            BasicBlock setter;
            setter.label = set_label;
            setter.instructions.push_back(ins(Opcode::MovImm, {mir::r(state), Imm{id_of(cj->taken)}}));
            setter.terminator = mir::Jump{disp_labels[0]};
            f->blocks.push_back(std::move(body));
            f->blocks.push_back(std::move(setter));
            continue;
        } else if (const auto* rt = std::get_if<mir::Ret>(&t)) {
            body.terminator = *rt;
        } else if (const auto* c = std::get_if<mir::Call>(&t)) {
            std::string resume_label = ctx.fresh_label();
            body.terminator = mir::Call{c->callee, resume_label};
            BasicBlock resume;
            resume.label = resume_label;
            resume.instructions.push_back(ins(Opcode::MovImm, {mir::r(state), Imm{id_of(c->then)}}));
            resume.terminator = mir::Jump{disp_labels[0]};
            f->blocks.push_back(std::move(body));
            f->blocks.push_back(std::move(resume));
            continue;
        }
        f->blocks.push_back(std::move(body));
    }
}

// ---- apply_recipe ----------------------------------------------------------

namespace {

std::vector<std::vector<uint64_t>> random_check_inputs(int arity, Rng& rng, int n) {
    std::vector<std::vector<uint64_t>> out;
    for (int i = 0; i < n; ++i) {
        std::vector<uint64_t> v(arity);
        for (auto& x : v) x = rng.next();
        out.push_back(std::move(v));
    }
    return out;
}

} // namespace

RecipeResult apply_recipe(const Program& p, const std::string& fn, const Recipe& recipe,
                          Rng& rng) {
    const Function* orig_fn = p.find_function(fn);
    if (!orig_fn) throw TransformError("function not found: " + fn);

    RecipeResult result;
    result.program = p;
    ObfContext ctx = ObfContext::for_function(p, fn);

    for (const auto& t : recipe.transforms) {
        if (const auto* add = std::get_if<AddOpaque>(&t)) {
            for (int i = 0; i < add->count; ++i) {
                Label polarity = rng.chance(50) ? Label::OpTrue : Label::OpFalse;
                inject_opaque(result.program, fn, add->kind, polarity, rng, ctx);
            }
        } else if (std::holds_alternative<EncodeArithmetic>(t)) {
            encode_arithmetic(result.program, fn, rng, ctx);
        } else if (std::holds_alternative<EncodeLiterals>(t)) {
            encode_literals(result.program, fn, rng, ctx);
        } else if (std::holds_alternative<EncodeData>(t)) {
            encode_data(result.program, fn, rng, ctx);
        } else {
            flatten(result.program, fn, rng, ctx);
        }
    }

    auto problems = validate(result.program);
    if (!problems.empty()) throw TransformError("recipe produced invalid IR: " + problems[0]);

    // Differential behavior check: probes plus 32 random 64-bit inputs.
    mir::Machine before(p);
    mir::Machine after(result.program);
    auto inputs = ctx.probe_inputs;
    for (auto& v : random_check_inputs(orig_fn->arity, rng, 32)) inputs.push_back(std::move(v));
    mir::Machine::RunState st_a, st_b;
    for (const auto& in : inputs) {
        mir::Outcome a = before.run_with_state(in, ctx.env, mir::kDefaultStepBudget, st_a, nullptr);
        mir::Outcome b = after.run_with_state(in, ctx.env, mir::kDefaultStepBudget, st_b, nullptr);
        if (!a.observably_equal(b))
            throw TransformError("recipe changed observable behavior");
    }

    // Final ground-truth log over every CondJump in the program.
    std::string recipe_str = recipe_to_string(recipe);
    for (const auto& func : result.program.functions) {
        for (const auto& id : enumerate_predicates(func)) {
            const BasicBlock* blk = func.find_block(id.block);
            const auto* cj = std::get_if<CondJump>(&blk->terminator);
            LogEntry entry;
            entry.recipe = recipe_str;
            if (cj && cj->tag && ctx.tagged.count(*cj->tag)) {
                entry = ctx.tagged[*cj->tag];
                entry.recipe = recipe_str;
            }
            result.log[id] = entry;
        }
    }
    return result;
}

} // namespace oppred::obf
