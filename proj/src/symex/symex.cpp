#include "oppred/symex/symex.hpp"

#include <map>
#include <set>
#include <stdexcept>

namespace oppred::symex {

using mir::BasicBlock;
using mir::Cond;
using mir::Function;
using mir::Opcode;
using mir::Program;

namespace {

std::vector<std::string> successors(const BasicBlock& b) {
    if (const auto* j = std::get_if<mir::Jump>(&b.terminator)) return {j->target};
    if (const auto* cj = std::get_if<mir::CondJump>(&b.terminator))
        return {cj->taken, cj->fallthrough};
    if (const auto* c = std::get_if<mir::Call>(&b.terminator)) return {c->then};
    return {};
}

} // namespace

// Back edges relative to a DFS tree rooted at the entry, children in
// taken-then-fallthrough order. Deterministic for a given function.
std::set<std::pair<int, int>> back_edges(const Function& f) {
    std::set<std::pair<int, int>> out;
    std::vector<int> color(f.blocks.size(), 0); // 0 white, 1 on stack, 2 done
    // Iterative DFS with explicit successor cursors.
    std::vector<std::pair<int, size_t>> stack;
    int entry = f.block_index(f.entry_block);
    if (entry < 0) return out;
    stack.push_back({entry, 0});
    color[entry] = 1;
    while (!stack.empty()) {
        auto& [idx, cursor] = stack.back();
        auto succ = successors(f.blocks[idx]);
        if (cursor >= succ.size()) {
            color[idx] = 2;
            stack.pop_back();
            continue;
        }
        int next = f.block_index(succ[cursor++]);
        if (next < 0) continue;
        if (color[next] == 1) {
            out.insert({idx, next});
        } else if (color[next] == 0) {
            color[next] = 1;
            stack.push_back({next, 0});
        }
    }
    return out;
}

namespace {

// Blocks from which the target block is reachable; exploring anything else
// cannot produce a path.
std::vector<bool> can_reach(const Function& f, int target) {
    std::vector<bool> reach(f.blocks.size(), false);
    reach[target] = true;
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 0; i < f.blocks.size(); ++i) {
            if (reach[i]) continue;
            for (const auto& s : successors(f.blocks[i])) {
                int si = f.block_index(s);
                if (si >= 0 && reach[si]) {
                    reach[i] = true;
                    changed = true;
                    break;
                }
            }
        }
    }
    return reach;
}

} // namespace

PathSet enumerate_paths(const Function& f, const mir::PredicateId& target,
                        const PathBudget& budget) {
    PathSet out;
    int target_block = -1;
    int ordinal = 0;
    for (const auto& b : f.blocks) {
        if (std::holds_alternative<mir::CondJump>(b.terminator)) {
            if (ordinal == target.ordinal && b.label == target.block)
                target_block = f.block_index(b.label);
            ++ordinal;
        }
    }
    if (target_block < 0) return out;

    int entry = f.block_index(f.entry_block);
    if (entry < 0) return out;
    auto backs = back_edges(f);
    auto reach = can_reach(f, target_block);
    if (!reach[entry]) return out;

    std::map<std::pair<int, int>, int> back_count;
    Path cur;

    // Recursive DFS; depth is bounded by |blocks| * (alpha_loop+1) in
    // practice. Emits a path at every arrival at the target block and keeps
    // exploring so loops produce their unrolled variants.
    struct Walker {
        const Function& f;
        const PathBudget& budget;
        const std::set<std::pair<int, int>>& backs;
        const std::vector<bool>& reach;
        int target_block;
        std::map<std::pair<int, int>, int>& back_count;
        Path& cur;
        PathSet& out;

        bool visit(int block) { // returns false once alpha_paths is hit
            cur.push_back(f.blocks[block].label);
            if (block == target_block) {
                if (static_cast<int>(out.paths.size()) >= budget.alpha_paths) {
                    out.truncated = true;
                    cur.pop_back();
                    return false;
                }
                out.paths.push_back(cur);
            }
            for (const auto& s : successors(f.blocks[block])) {
                int next = f.block_index(s);
                if (next < 0 || !reach[next]) continue;
                auto edge = std::make_pair(block, next);
                bool is_back = backs.count(edge) > 0;
                if (is_back) {
                    int& c = back_count[edge];
                    if (c >= budget.alpha_loop) continue;
                    ++c;
                    bool go_on = visit(next);
                    --c;
                    if (!go_on) { cur.pop_back(); return false; }
                } else {
                    if (!visit(next)) { cur.pop_back(); return false; }
                }
            }
            cur.pop_back();
            return true;
        }
    };

    Walker w{f, budget, backs, reach, target_block, back_count, cur, out};
    w.visit(entry);
    return out;
}

namespace {

struct SymState {
    const Program& prog;
    const Function& fn;
    std::vector<Assignment> assignments;

    std::array<ExprRef, mir::kIntRegs> ints;
    std::array<ExprRef, mir::kFloatRegs> floats;
    std::array<int, mir::kIntRegs> int_version{};
    std::array<int, mir::kFloatRegs> float_version{};
    ExprRef zf, sf, cf, of;          // fully substituted values
    ExprRef zf_ref, sf_ref, cf_ref, of_ref; // SSA id (or folded Int) views
    int zf_v = 0, sf_v = 0, cf_v = 0, of_v = 0;
    int call_counter = 0;

    // Store journal for structural read matching.
    std::vector<std::pair<ExprRef, ExprRef>> stores;

    explicit SymState(const Program& p, const Function& f) : prog(p), fn(f) {
        for (int i = 0; i < mir::kIntRegs; ++i)
            ints[i] = i < f.arity ? Expr::id("r" + std::to_string(i), 64)
                                  : Expr::integer(0, 64);
        for (int i = 0; i < mir::kFloatRegs; ++i) floats[i] = Expr::integer(0, 64);
        zf = sf = cf = of = Expr::integer(0, 1);
        zf_ref = sf_ref = cf_ref = of_ref = Expr::integer(0, 1);
    }

    // Destinations are SSA-indexed; values are fully substituted over the
    // initial state, like the states a lifted-IR engine reports.
    ExprRef record_int_write(int reg, ExprRef value) {
        int v = ++int_version[reg];
        auto dest = Expr::id("r" + std::to_string(reg) + "_" + std::to_string(v), 64);
        assignments.push_back({dest, value});
        ints[reg] = value;
        return dest;
    }

    void record_float_write(int reg, ExprRef value) {
        int v = ++float_version[reg];
        auto dest = Expr::id("f" + std::to_string(reg) + "_" + std::to_string(v), 64);
        assignments.push_back({dest, value});
        floats[reg] = value;
    }

    void record_flag_write(const char* flag, ExprRef& slot, ExprRef& ref, int& version,
                           ExprRef value) {
        int v = ++version;
        auto dest = Expr::id(std::string(flag) + "_" + std::to_string(v), 1);
        assignments.push_back({dest, value});
        slot = value;
        ref = value->is_int() ? value : dest;
    }

    ExprRef src_value(const mir::Operand& o) {
        if (const mir::Reg* rg = std::get_if<mir::Reg>(&o))
            return rg->is_float ? floats[rg->index] : ints[rg->index];
        if (const mir::Imm* im = std::get_if<mir::Imm>(&o)) return Expr::integer(im->value, 64);
        throw std::runtime_error("src_value: memory operand");
    }

    ExprRef address_of(const mir::MemRef& m) {
        ExprRef base = ints[m.base.index];
        if (m.disp == 0) return base;
        return fold_op(ops::Add, {base, Expr::integer(static_cast<uint64_t>(m.disp), 64)}, 64);
    }

    ExprRef load_from(const ExprRef& addr) {
        for (auto it = stores.rbegin(); it != stores.rend(); ++it)
            if (equal(it->first, addr)) return it->second;
        return Expr::mem(addr, 64);
    }

    void exec_instruction(const mir::Instruction& ins) {
        const auto& ops_v = ins.operands;
        auto binop = [&](const char* op) {
            const mir::Reg& dst = std::get<mir::Reg>(ops_v[0]);
            ExprRef v = fold_op(op, {ints[dst.index], src_value(ops_v[1])}, 64);
            record_int_write(dst.index, v);
        };
        switch (ins.op) {
            case Opcode::Add: binop(ops::Add); break;
            case Opcode::Sub: binop(ops::Sub); break;
            case Opcode::Mul: binop(ops::Mul); break;
            case Opcode::Udiv: binop(ops::Udiv); break;
            case Opcode::Urem: binop(ops::Urem); break;
            case Opcode::And: binop(ops::And); break;
            case Opcode::Or: binop(ops::Or); break;
            case Opcode::Xor: binop(ops::Xor); break;
            case Opcode::Shl: binop(ops::Shl); break;
            case Opcode::Shr: binop(ops::Shr); break;
            case Opcode::Not: {
                int d = std::get<mir::Reg>(ops_v[0]).index;
                record_int_write(d, fold_op(ops::Not, {ints[d]}, 64));
                break;
            }
            case Opcode::Neg: {
                int d = std::get<mir::Reg>(ops_v[0]).index;
                record_int_write(d, fold_op(ops::Neg, {ints[d]}, 64));
                break;
            }
            case Opcode::Mov: {
                const mir::Reg& dst = std::get<mir::Reg>(ops_v[0]);
                ExprRef v = src_value(ops_v[1]);
                if (dst.is_float) record_float_write(dst.index, v);
                else record_int_write(dst.index, v);
                break;
            }
            case Opcode::MovImm: {
                const mir::Reg& dst = std::get<mir::Reg>(ops_v[0]);
                ExprRef v = Expr::integer(std::get<mir::Imm>(ops_v[1]).value, 64);
                if (dst.is_float) record_float_write(dst.index, v);
                else record_int_write(dst.index, v);
                break;
            }
            case Opcode::Cmp: {
                ExprRef a = ints[std::get<mir::Reg>(ops_v[0]).index];
                ExprRef b = src_value(ops_v[1]);
                record_flag_write("ZF", zf, zf_ref, zf_v, fold_op(ops::CmpEq, {a, b}, 1));
                record_flag_write("SF", sf, sf_ref, sf_v, fold_op(ops::CmpSign, {a, b}, 1));
                record_flag_write("CF", cf, cf_ref, cf_v, fold_op(ops::CmpUlt, {a, b}, 1));
                record_flag_write("OF", of, of_ref, of_v, fold_op(ops::CmpSovf, {a, b}, 1));
                break;
            }
            case Opcode::Fcmp: {
                ExprRef a = floats[std::get<mir::Reg>(ops_v[0]).index];
                ExprRef b = floats[std::get<mir::Reg>(ops_v[1]).index];
                record_flag_write("ZF", zf, zf_ref, zf_v, fold_op(ops::FcmpEq, {a, b}, 1));
                record_flag_write("SF", sf, sf_ref, sf_v, Expr::integer(0, 1));
                record_flag_write("CF", cf, cf_ref, cf_v, fold_op(ops::FcmpLt, {a, b}, 1));
                record_flag_write("OF", of, of_ref, of_v, Expr::integer(0, 1));
                break;
            }
            case Opcode::Fadd:
            case Opcode::Fmul: {
                const mir::Reg& dst = std::get<mir::Reg>(ops_v[0]);
                const mir::Reg& src = std::get<mir::Reg>(ops_v[1]);
                const char* op = ins.op == Opcode::Fadd ? ops::Fadd : ops::Fmul;
                record_float_write(dst.index,
                                   fold_op(op, {floats[dst.index], floats[src.index]}, 64));
                break;
            }
            case Opcode::Load: {
                const mir::Reg& dst = std::get<mir::Reg>(ops_v[0]);
                ExprRef addr = address_of(std::get<mir::MemRef>(ops_v[1]));
                record_int_write(dst.index, load_from(addr));
                break;
            }
            case Opcode::Store: {
                ExprRef addr = address_of(std::get<mir::MemRef>(ops_v[0]));
                ExprRef v = src_value(ops_v[1]);
                assignments.push_back({Expr::mem(addr, 64), v});
                stores.emplace_back(addr, v);
                break;
            }
            case Opcode::GetEnv: {
                const mir::Reg& dst = std::get<mir::Reg>(ops_v[0]);
                uint64_t slot = std::get<mir::Imm>(ops_v[1]).value;
                record_int_write(dst.index,
                                 Expr::mkop(ops::GetEnv, {Expr::integer(slot, 64)}, 64));
                break;
            }
        }
    }

    // The branch-target expression names the flags (their latest SSA ids)
    // rather than inlining their definitions; constant-fed predicates still
    // fold all the way down to an address.
    ExprRef condition_expr(Cond c) const {
        auto inv = [](const ExprRef& e) {
            return fold_op(ops::Xor, {e, Expr::integer(1, 1)}, 1);
        };
        switch (c) {
            case Cond::Eq: return zf_ref;
            case Cond::Ne: return inv(zf_ref);
            case Cond::Ult: return cf_ref;
            case Cond::Uge: return inv(cf_ref);
            case Cond::Slt: return fold_op(ops::Xor, {sf_ref, of_ref}, 1);
            case Cond::Sge: return inv(fold_op(ops::Xor, {sf_ref, of_ref}, 1));
        }
        return zf_ref;
    }
};

} // namespace

SymbolicState exec_path(const Program& p, const Function& f, const Path& path) {
    if (path.empty()) throw std::runtime_error("exec_path: empty path");
    SymState st(p, f);
    for (size_t i = 0; i < path.size(); ++i) {
        const BasicBlock* b = f.find_block(path[i]);
        if (!b) throw std::runtime_error("exec_path: unknown block " + path[i]);
        for (const auto& ins : b->instructions) st.exec_instruction(ins);
        bool last = i + 1 == path.size();
        if (last) break;
        if (std::get_if<mir::Call>(&b->terminator)) {
            // Intra-procedural summary: the callee's effect is a fresh value
            // in r0.
            ExprRef havoc =
                Expr::id("call" + std::to_string(++st.call_counter) + "_ret", 64);
            st.record_int_write(0, havoc);
        }
    }

    const BasicBlock* final_block = f.find_block(path.back());
    const auto* cj = std::get_if<mir::CondJump>(&final_block->terminator);
    if (!cj) throw std::runtime_error("exec_path: path does not end at a predicate");

    SymbolicState out;
    uint64_t taken_addr = mir::block_address(p, f.name, cj->taken);
    uint64_t fall_addr = mir::block_address(p, f.name, cj->fallthrough);
    out.predicate_dst = fold_cond(st.condition_expr(cj->cond),
                                  Expr::integer(taken_addr, 64),
                                  Expr::integer(fall_addr, 64));
    out.assignments = std::move(st.assignments);
    out.path = path;
    return out;
}

std::vector<SymbolicState> collect_states(const Program& p, const Function& f,
                                          const mir::PredicateId& target,
                                          const PathBudget& budget) {
    PathSet ps = enumerate_paths(f, target, budget);
    std::vector<SymbolicState> out;
    out.reserve(ps.paths.size());
    for (const auto& path : ps.paths) {
        SymbolicState s = exec_path(p, f, path);
        s.truncated = ps.truncated;
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace oppred::symex
