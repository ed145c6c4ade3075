#pragma once

// Test-side evaluator for symbolic states: executes the SSA assignment trace
// under a concrete valuation of the free terms and checks it against the
// concrete interpreter. Kept out of the library so the consistency checks
// stay independent of the execution engine under test.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "oppred/mir/interp.hpp"
#include "oppred/symex/symex.hpp"

namespace oppred::testsupport {

struct Valuation {
    std::map<std::string, uint64_t> free_ids; // parameters, call havocs
    mir::Env env = mir::default_env();
    // Initial memory is all zeroes; Mem terms over it evaluate to 0.
};

inline uint64_t eval_expr(const symex::ExprRef& e,
                          const std::map<std::string, uint64_t>& ssa,
                          const Valuation& val) {
    using symex::ExprKind;
    switch (e->kind) {
        case ExprKind::Int:
            return e->value;
        case ExprKind::Id: {
            auto it = ssa.find(e->name);
            if (it != ssa.end()) return it->second;
            auto fit = val.free_ids.find(e->name);
            if (fit != val.free_ids.end()) return fit->second;
            throw std::runtime_error("eval_expr: unbound id " + e->name);
        }
        case ExprKind::Mem:
            return 0; // zero-initialized initial memory
        case ExprKind::Op: {
            if (e->op == symex::ops::GetEnv) {
                uint64_t slot = eval_expr(e->args[0], ssa, val);
                return val.env[slot & (mir::kEnvSlots - 1)];
            }
            std::vector<uint64_t> args;
            args.reserve(e->args.size());
            for (const auto& a : e->args) args.push_back(eval_expr(a, ssa, val));
            return symex::eval_op(e->op, args, e->size_bits);
        }
        case ExprKind::Cond:
            return eval_expr(e->cond, ssa, val) != 0 ? eval_expr(e->then_e, ssa, val)
                                                     : eval_expr(e->else_e, ssa, val);
    }
    throw std::runtime_error("eval_expr: bad expr");
}

// Evaluates the assignment trace in order, binding each SSA destination.
// Returns the bound environment; memory destinations are skipped (reads of
// matched stores were substituted during execution).
inline std::map<std::string, uint64_t> eval_state(const symex::SymbolicState& state,
                                                  const Valuation& val) {
    std::map<std::string, uint64_t> ssa;
    for (const auto& a : state.assignments) {
        uint64_t v = eval_expr(a.value, ssa, val);
        if (a.dest->kind == symex::ExprKind::Id) ssa[a.dest->name] = v;
    }
    return ssa;
}

// Concrete trace of register writes along a run, tagged with the executed
// block sequence of the entry function, for comparing against a symbolic
// state path by path.
struct ConcreteTrace {
    std::vector<std::string> blocks; // entry-function blocks in order
    bool ok = false;
    uint64_t return_value = 0;
};

inline ConcreteTrace run_entry_trace(const mir::Program& p,
                                     const std::vector<uint64_t>& inputs, const mir::Env& env) {
    ConcreteTrace trace;
    mir::Machine m(p);
    int entry_fn = -1;
    for (size_t i = 0; i < p.functions.size(); ++i)
        if (p.functions[i].name == p.entry_function) entry_fn = static_cast<int>(i);
    mir::Machine::BlockHook hook = [&](int fn, int block) {
        if (fn == entry_fn) trace.blocks.push_back(m.block_label(fn, block));
    };
    mir::Machine::RunState st;
    mir::Outcome out = m.run_with_state(inputs, env, mir::kDefaultStepBudget, st, nullptr, &hook);
    trace.ok = out.status == mir::RunStatus::Ok;
    trace.return_value = out.return_value;
    return trace;
}

} // namespace oppred::testsupport
