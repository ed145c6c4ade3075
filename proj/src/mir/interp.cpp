#include "oppred/mir/interp.hpp"

#include <bit>
#include <cmath>

namespace oppred::mir {

namespace {

enum SrcKind : uint8_t { SRC_REG = 0, SRC_IMM = 1 };

inline double as_double(uint64_t bits) { return std::bit_cast<double>(bits); }
inline uint64_t as_bits(double d) { return std::bit_cast<uint64_t>(d); }

} // namespace

struct Machine::DecodedInsn {
    Opcode op;
    uint8_t a = 0;        // dst / cmp-lhs register index
    bool a_float = false;
    uint8_t b_kind = SRC_REG;
    uint8_t b_reg = 0;
    bool b_float = false;
    uint64_t imm = 0;     // immediate / env slot
    int64_t disp = 0;     // memory displacement (load: base in b_reg; store: base in a)
};

struct Machine::DecodedTerm {
    enum Kind : uint8_t { JMP, JCC, RET, CALL } kind = RET;
    Cond cond = Cond::Eq;
    int taken = 0;      // block index
    int fall = 0;       // block index / call-then
    int callee = 0;     // function index
    uint8_t ret_reg = 0;
    int site = -1;      // dense CondJump site index
};

struct Machine::DecodedBlock {
    std::vector<DecodedInsn> insns;
    DecodedTerm term;
};

struct Machine::DecodedFn {
    int arity = 0;
    int entry = 0;
    std::vector<DecodedBlock> blocks;
};

Machine::~Machine() = default;
Machine::Machine(Machine&&) noexcept = default;
Machine& Machine::operator=(Machine&&) noexcept = default;

Machine::Machine(const Program& p) {
    // Dense site numbering must match enumerate_predicates order.
    sites_ = enumerate_predicates(p);
    site_count_ = sites_.size();

    std::vector<std::pair<std::string, int>> fn_index;
    for (size_t i = 0; i < p.functions.size(); ++i)
        fn_index.emplace_back(p.functions[i].name, static_cast<int>(i));
    auto fn_of = [&](const std::string& n) {
        for (auto& [name, idx] : fn_index)
            if (name == n) return idx;
        return -1;
    };
    entry_fn_ = fn_of(p.entry_function);

    int next_site = 0;
    for (const auto& f : p.functions) {
        DecodedFn df;
        df.arity = f.arity;
        df.entry = f.block_index(f.entry_block);
        fn_names_.push_back(f.name);
        std::vector<std::string> labels;
        for (const auto& b : f.blocks) labels.push_back(b.label);
        block_labels_.push_back(std::move(labels));
        for (const auto& b : f.blocks) {
            DecodedBlock db;
            for (const auto& ins : b.instructions) {
                DecodedInsn d;
                d.op = ins.op;
                const auto& ops = ins.operands;
                switch (ins.op) {
                    case Opcode::Load: {
                        d.a = std::get<Reg>(ops[0]).index;
                        const MemRef& m = std::get<MemRef>(ops[1]);
                        d.b_reg = m.base.index;
                        d.disp = m.disp;
                        break;
                    }
                    case Opcode::Store: {
                        const MemRef& m = std::get<MemRef>(ops[0]);
                        d.a = m.base.index;
                        d.disp = m.disp;
                        if (const Reg* rg = std::get_if<Reg>(&ops[1])) {
                            d.b_kind = SRC_REG;
                            d.b_reg = rg->index;
                        } else {
                            d.b_kind = SRC_IMM;
                            d.imm = std::get<Imm>(ops[1]).value;
                        }
                        break;
                    }
                    default: {
                        const Reg& dst = std::get<Reg>(ops[0]);
                        d.a = dst.index;
                        d.a_float = dst.is_float;
                        if (ops.size() > 1) {
                            if (const Reg* rg = std::get_if<Reg>(&ops[1])) {
                                d.b_kind = SRC_REG;
                                d.b_reg = rg->index;
                                d.b_float = rg->is_float;
                            } else {
                                d.b_kind = SRC_IMM;
                                d.imm = std::get<Imm>(ops[1]).value;
                            }
                        }
                        break;
                    }
                }
                db.insns.push_back(d);
            }
            DecodedTerm t;
            if (const auto* j = std::get_if<Jump>(&b.terminator)) {
                t.kind = DecodedTerm::JMP;
                t.taken = f.block_index(j->target);
            } else if (const auto* cj = std::get_if<CondJump>(&b.terminator)) {
                t.kind = DecodedTerm::JCC;
                t.cond = cj->cond;
                t.taken = f.block_index(cj->taken);
                t.fall = f.block_index(cj->fallthrough);
                t.site = next_site++;
            } else if (const auto* rt = std::get_if<Ret>(&b.terminator)) {
                t.kind = DecodedTerm::RET;
                t.ret_reg = rt->reg.index;
            } else if (const auto* c = std::get_if<Call>(&b.terminator)) {
                t.kind = DecodedTerm::CALL;
                t.callee = fn_of(c->callee);
                t.fall = f.block_index(c->then);
            }
            db.term = t;
            df.blocks.push_back(std::move(db));
        }
        fns_.push_back(std::move(df));
    }
}

int Machine::site_index(const PredicateId& id) const {
    for (size_t i = 0; i < sites_.size(); ++i)
        if (sites_[i] == id) return static_cast<int>(i);
    return -1;
}

int Machine::entry_arity() const {
    return entry_fn_ >= 0 ? fns_[entry_fn_].arity : 0;
}

namespace {

struct Frame {
    std::array<uint64_t, kIntRegs> r{};
    std::array<uint64_t, kFloatRegs> f{};
    bool zf = false, sf = false, cf = false, of = false;
    int fn = 0;
    int block = 0;
    uint8_t retreg_into = 0; // unused; return always lands in caller r0
};

inline bool cond_holds(Cond c, bool zf, bool sf, bool cf, bool of) {
    switch (c) {
        case Cond::Eq: return zf;
        case Cond::Ne: return !zf;
        case Cond::Ult: return cf;
        case Cond::Uge: return !cf;
        case Cond::Slt: return sf != of;
        case Cond::Sge: return sf == of;
    }
    return false;
}

} // namespace

Outcome Machine::run_with_state(std::span<const uint64_t> inputs, const Env& env,
                                uint64_t step_budget, RunState& state, const BranchHook* hook,
                                const BlockHook* block_hook) const {
    Outcome out;
    if (entry_fn_ < 0) {
        out.status = RunStatus::RuntimeFault;
        out.fault = "no entry function";
        return out;
    }

    // Clear only the cells touched by the previous run.
    for (uint32_t w : state.dirty_words)
        std::memset(state.memory.data() + w, 0, 8);
    state.dirty_words.clear();
    uint8_t* mem = state.memory.data();

    std::vector<Frame> stack;
    stack.reserve(8);
    stack.emplace_back();
    Frame* fr = &stack.back();
    fr->fn = entry_fn_;
    fr->block = fns_[entry_fn_].entry;
    for (int i = 0; i < fns_[entry_fn_].arity && i < static_cast<int>(inputs.size()); ++i)
        fr->r[i] = inputs[i];

    auto fault = [&](const char* why) {
        out.status = RunStatus::RuntimeFault;
        out.fault = why;
        return out;
    };

    uint64_t steps = 0;
    for (;;) {
        if (block_hook) (*block_hook)(fr->fn, fr->block);
        const DecodedBlock& blk = fns_[fr->fn].blocks[fr->block];
        for (const DecodedInsn& d : blk.insns) {
            if (++steps > step_budget) {
                out.status = RunStatus::BudgetExhausted;
                return out;
            }
            uint64_t b = d.b_kind == SRC_IMM
                             ? d.imm
                             : (d.b_float ? fr->f[d.b_reg] : fr->r[d.b_reg]);
            switch (d.op) {
                case Opcode::Add: fr->r[d.a] += b; break;
                case Opcode::Sub: fr->r[d.a] -= b; break;
                case Opcode::Mul: fr->r[d.a] *= b; break;
                case Opcode::Udiv:
                    if (b == 0) return fault("division by zero");
                    fr->r[d.a] /= b;
                    break;
                case Opcode::Urem:
                    if (b == 0) return fault("remainder by zero");
                    fr->r[d.a] %= b;
                    break;
                case Opcode::And: fr->r[d.a] &= b; break;
                case Opcode::Or: fr->r[d.a] |= b; break;
                case Opcode::Xor: fr->r[d.a] ^= b; break;
                case Opcode::Shl: fr->r[d.a] <<= (b & 63); break;
                case Opcode::Shr: fr->r[d.a] >>= (b & 63); break;
                case Opcode::Not: fr->r[d.a] = ~fr->r[d.a]; break;
                case Opcode::Neg: fr->r[d.a] = ~fr->r[d.a] + 1; break;
                case Opcode::Mov:
                    if (d.a_float) fr->f[d.a] = b;
                    else fr->r[d.a] = b;
                    break;
                case Opcode::MovImm:
                    if (d.a_float) fr->f[d.a] = d.imm;
                    else fr->r[d.a] = d.imm;
                    break;
                case Opcode::Cmp: {
                    uint64_t a = fr->r[d.a];
                    uint64_t diff = a - b;
                    fr->zf = a == b;
                    fr->sf = diff >> 63;
                    fr->cf = a < b;
                    fr->of = ((a ^ b) & (a ^ diff)) >> 63;
                    break;
                }
                case Opcode::Load: {
                    uint64_t addr = fr->r[d.b_reg] + static_cast<uint64_t>(d.disp);
                    if (addr > kMemBytes - 8) return fault("load out of range");
                    uint64_t v;
                    std::memcpy(&v, mem + addr, 8);
                    fr->r[d.a] = v;
                    break;
                }
                case Opcode::Store: {
                    uint64_t addr = fr->r[d.a] + static_cast<uint64_t>(d.disp);
                    if (addr > kMemBytes - 8) return fault("store out of range");
                    std::memcpy(mem + addr, &b, 8);
                    state.dirty_words.push_back(static_cast<uint32_t>(addr));
                    if (addr >= kOutputBase)
                        out.output_trace.emplace_back(static_cast<uint32_t>(addr), b);
                    break;
                }
                case Opcode::Fadd:
                    fr->f[d.a] = as_bits(as_double(fr->f[d.a]) + as_double(b));
                    break;
                case Opcode::Fmul:
                    fr->f[d.a] = as_bits(as_double(fr->f[d.a]) * as_double(b));
                    break;
                case Opcode::Fcmp: {
                    double x = as_double(fr->f[d.a]);
                    double y = as_double(b);
                    if (std::isnan(x) || std::isnan(y)) {
                        fr->zf = true;
                        fr->cf = true;
                    } else {
                        fr->zf = x == y;
                        fr->cf = x < y;
                    }
                    fr->sf = false;
                    fr->of = false;
                    break;
                }
                case Opcode::GetEnv:
                    fr->r[d.a] = env[d.imm & (kEnvSlots - 1)];
                    break;
            }
        }

        const DecodedTerm& t = blk.term;
        if (++steps > step_budget) {
            out.status = RunStatus::BudgetExhausted;
            return out;
        }
        switch (t.kind) {
            case DecodedTerm::JMP:
                fr->block = t.taken;
                break;
            case DecodedTerm::JCC: {
                bool take = cond_holds(t.cond, fr->zf, fr->sf, fr->cf, fr->of);
                if (hook) (*hook)(t.site, take);
                fr->block = take ? t.taken : t.fall;
                break;
            }
            case DecodedTerm::RET: {
                uint64_t rv = fr->r[t.ret_reg];
                stack.pop_back();
                if (stack.empty()) {
                    out.return_value = rv;
                    return out;
                }
                fr = &stack.back();
                fr->r[0] = rv;
                break;
            }
            case DecodedTerm::CALL: {
                if (t.callee < 0) return fault("call target missing");
                if (stack.size() >= 64) return fault("call depth exceeded");
                int resume = t.fall;
                Frame callee;
                callee.fn = t.callee;
                callee.block = fns_[t.callee].entry;
                for (int i = 0; i < fns_[t.callee].arity; ++i) callee.r[i] = fr->r[i];
                fr->block = resume;
                stack.push_back(callee);
                fr = &stack.back();
                break;
            }
        }
    }
}

Outcome Machine::run(std::span<const uint64_t> inputs, const Env& env,
                     uint64_t step_budget) const {
    RunState st;
    return run_with_state(inputs, env, step_budget, st, nullptr);
}

Outcome Machine::run(std::span<const uint64_t> inputs, const Env& env, uint64_t step_budget,
                     const BranchHook& hook) const {
    RunState st;
    return run_with_state(inputs, env, step_budget, st, &hook);
}

Outcome concrete_run(const Program& p, std::span<const uint64_t> inputs, const Env& env,
                     uint64_t step_budget) {
    Machine m(p);
    return m.run(inputs, env, step_budget);
}

} // namespace oppred::mir
