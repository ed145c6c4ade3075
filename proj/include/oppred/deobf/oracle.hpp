#pragma once

#include <optional>
#include <vector>

#include "oppred/mir/interp.hpp"

namespace oppred::deobf {

// Bounded brute-force ground truth: exhaustive 8-bit sweep per input,
// 64-bit random trials on top, each run instrumented at the target
// predicate.
struct OracleDomain {
    int n_random = 10000;
    uint64_t seed = 1;
    // Inputs beyond the first two are held at zero during the sweep; the
    // generator never emits more than two parameters.
    int max_exhaustive_dims = 2;
};

enum class VerdictKind { AlwaysTrue, AlwaysFalse, TwoWay, Unobserved };

const char* verdict_name(VerdictKind k);

struct OracleVerdict {
    VerdictKind kind = VerdictKind::Unobserved;
    std::optional<std::vector<uint64_t>> witness_taken;
    std::optional<std::vector<uint64_t>> witness_fallthrough;
    uint64_t planned_runs = 0;
    uint64_t fault_runs = 0;    // runs that faulted or ran out of budget
};

// Machine-level entry point; compile once, sweep many. Parallel and serial
// paths return the same verdict kind; TwoWay witnesses may differ when the
// parallel sweep ends early.
OracleVerdict oracle(const mir::Machine& m, const mir::PredicateId& target,
                     const OracleDomain& domain, const std::vector<mir::Env>& envs,
                     bool parallel = true);

OracleVerdict oracle(const mir::Program& p, const mir::PredicateId& target,
                     const OracleDomain& domain, const std::vector<mir::Env>& envs,
                     bool parallel = true);

// Serial reference implementation kept for testing and benchmarking.
OracleVerdict oracle_serial(const mir::Machine& m, const mir::PredicateId& target,
                            const OracleDomain& domain, const std::vector<mir::Env>& envs);

} // namespace oppred::deobf
