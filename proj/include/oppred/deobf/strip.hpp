#pragma once

#include <map>
#include <optional>
#include <vector>

#include "oppred/mir/interp.hpp"
#include "oppred/mir/ir.hpp"

namespace oppred::deobf {

// direction true = the predicate always takes the taken edge.
using VerdictMap = std::map<mir::PredicateId, bool>;

// Replaces each verdict's CondJump by an unconditional jump to its live edge
// and removes blocks that become unreachable from their function's entry.
// Verdicts whose site no longer exists are ignored, which makes strip
// idempotent.
mir::Program strip(const mir::Program& p, const VerdictMap& verdicts);

struct EquivalenceResult {
    bool pass = true;
    std::vector<uint64_t> witness; // first diverging input when !pass
    std::string detail;
};

// Differential run over the given inputs; outcomes must match on return
// value, fault/budget status and the ordered output-region store trace.
EquivalenceResult verify_equivalence(const mir::Program& p, const mir::Program& q,
                                     const std::vector<std::vector<uint64_t>>& inputs,
                                     const mir::Env& env);

// 64 seeded random 64-bit input vectors for the entry arity.
std::vector<std::vector<uint64_t>> equivalence_inputs(int arity, uint64_t seed, int n = 64);

} // namespace oppred::deobf
