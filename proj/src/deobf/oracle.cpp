#include "oppred/deobf/oracle.hpp"

#include <atomic>

#include "oppred/parallel.hpp"
#include "oppred/rng.hpp"

namespace oppred::deobf {

const char* verdict_name(VerdictKind k) {
    switch (k) {
        case VerdictKind::AlwaysTrue: return "AlwaysTrue";
        case VerdictKind::AlwaysFalse: return "AlwaysFalse";
        case VerdictKind::TwoWay: return "TwoWay";
        case VerdictKind::Unobserved: return "Unobserved";
    }
    return "?";
}

namespace {

// Input vector for run index i: the exhaustive block first (row-major over
// the swept dimensions), then seeded 64-bit random trials.
struct RunPlan {
    int arity = 0;
    int swept_dims = 0;
    uint64_t exhaustive = 1; // 256^swept_dims
    uint64_t total = 0;
    uint64_t seed = 0;
    size_t n_envs = 1;

    std::vector<uint64_t> inputs_for(uint64_t i) const {
        std::vector<uint64_t> v(arity, 0);
        if (i < exhaustive) {
            uint64_t rem = i;
            for (int d = 0; d < swept_dims; ++d) {
                v[d] = rem & 0xff;
                rem >>= 8;
            }
        } else {
            uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (i - exhaustive + 1));
            for (int d = 0; d < arity; ++d) v[d] = splitmix64(s);
        }
        return v;
    }
};

RunPlan make_plan(int arity, const OracleDomain& domain, size_t n_envs) {
    RunPlan plan;
    plan.arity = arity;
    plan.swept_dims = std::min(arity, domain.max_exhaustive_dims);
    plan.exhaustive = 1;
    for (int d = 0; d < plan.swept_dims; ++d) plan.exhaustive *= 256;
    plan.total = plan.exhaustive + static_cast<uint64_t>(domain.n_random);
    plan.seed = domain.seed;
    plan.n_envs = n_envs == 0 ? 1 : n_envs;
    return plan;
}

struct SweepResult {
    uint64_t first_taken = UINT64_MAX;  // lowest run index per direction
    uint64_t first_fall = UINT64_MAX;
    uint64_t faults = 0;

    void merge(const SweepResult& o) {
        first_taken = std::min(first_taken, o.first_taken);
        first_fall = std::min(first_fall, o.first_fall);
        faults += o.faults;
    }
};

void run_range(const mir::Machine& m, int site, const RunPlan& plan,
               const std::vector<mir::Env>& envs, uint64_t begin, uint64_t end,
               mir::Machine::RunState& state, SweepResult& acc) {
    bool taken_seen = false, fall_seen = false;
    mir::Machine::BranchHook hook = [&](int s, bool taken) {
        if (s != site) return;
        if (taken) taken_seen = true;
        else fall_seen = true;
    };
    for (uint64_t i = begin; i < end; ++i) {
        taken_seen = fall_seen = false;
        std::vector<uint64_t> in = plan.inputs_for(i);
        const mir::Env& env = envs[i % plan.n_envs];
        mir::Outcome out = m.run_with_state(in, env, mir::kDefaultStepBudget, state, &hook);
        if (out.status != mir::RunStatus::Ok) ++acc.faults;
        if (taken_seen && i < acc.first_taken) acc.first_taken = i;
        if (fall_seen && i < acc.first_fall) acc.first_fall = i;
    }
}

OracleVerdict finish(const mir::Machine& m, int site, const RunPlan& plan,
                     const std::vector<mir::Env>& envs, const SweepResult& r) {
    (void)m;
    (void)site;
    OracleVerdict v;
    v.planned_runs = plan.total;
    v.fault_runs = r.faults;
    bool taken = r.first_taken != UINT64_MAX;
    bool fall = r.first_fall != UINT64_MAX;
    if (!taken && !fall) {
        v.kind = VerdictKind::Unobserved;
        return v;
    }
    if (taken) v.witness_taken = plan.inputs_for(r.first_taken);
    if (fall) v.witness_fallthrough = plan.inputs_for(r.first_fall);
    if (taken && fall) v.kind = VerdictKind::TwoWay;
    else if (taken) v.kind = VerdictKind::AlwaysTrue;
    else v.kind = VerdictKind::AlwaysFalse;
    return v;
}

} // namespace

OracleVerdict oracle_serial(const mir::Machine& m, const mir::PredicateId& target,
                            const OracleDomain& domain, const std::vector<mir::Env>& envs) {
    std::vector<mir::Env> env_set = envs.empty() ? std::vector<mir::Env>{mir::default_env()} : envs;
    RunPlan plan = make_plan(m.entry_arity(), domain, env_set.size());
    int site = m.site_index(target);
    OracleVerdict v;
    v.planned_runs = plan.total;
    if (site < 0) return v;
    SweepResult acc;
    mir::Machine::RunState state;
    run_range(m, site, plan, env_set, 0, plan.total, state, acc);
    return finish(m, site, plan, env_set, acc);
}

OracleVerdict oracle(const mir::Machine& m, const mir::PredicateId& target,
                     const OracleDomain& domain, const std::vector<mir::Env>& envs,
                     bool parallel) {
    std::vector<mir::Env> env_set = envs.empty() ? std::vector<mir::Env>{mir::default_env()} : envs;
    RunPlan plan = make_plan(m.entry_arity(), domain, env_set.size());
    int site = m.site_index(target);
    OracleVerdict v;
    v.planned_runs = plan.total;
    if (site < 0) return v;

    if (!parallel || !parallel_enabled() || plan.total < 2048) {
        SweepResult acc;
        mir::Machine::RunState state;
        run_range(m, site, plan, env_set, 0, plan.total, state, acc);
        return finish(m, site, plan, env_set, acc);
    }

    // Chunked sweep with an early-out once both directions are seen; the
    // verdict and witnesses (lowest run index per direction) are identical
    // to the serial result.
    const uint64_t chunk = 4096;
    uint64_t n_chunks = (plan.total + chunk - 1) / chunk;
    std::vector<SweepResult> partial(n_chunks);
    std::atomic<bool> both{false};
    std::vector<mir::Machine::RunState> states(static_cast<size_t>(max_threads()));

    parallel_for(n_chunks, [&](size_t ci) {
        if (both.load(std::memory_order_relaxed)) return;
#if defined(_OPENMP)
        int tid = omp_get_thread_num();
#else
        int tid = 0;
#endif
        uint64_t begin = ci * chunk;
        uint64_t end = std::min(plan.total, begin + chunk);
        run_range(m, site, plan, env_set, begin, end, states[tid], partial[ci]);
        if (partial[ci].first_taken != UINT64_MAX && partial[ci].first_fall != UINT64_MAX)
            both.store(true, std::memory_order_relaxed);
    });

    SweepResult acc;
    bool taken = false, fall = false;
    for (const auto& p : partial) acc.merge(p);
    taken = acc.first_taken != UINT64_MAX;
    fall = acc.first_fall != UINT64_MAX;
    // The early-out can skip chunks only when the verdict is already TwoWay;
    // Always*/Unobserved verdicts always come from a complete sweep.
    if ((taken && fall) || !both.load()) return finish(m, site, plan, env_set, acc);
    // A racing early-out with an incomplete picture: redo serially.
    SweepResult full;
    mir::Machine::RunState state;
    run_range(m, site, plan, env_set, 0, plan.total, state, full);
    return finish(m, site, plan, env_set, full);
}

OracleVerdict oracle(const mir::Program& p, const mir::PredicateId& target,
                     const OracleDomain& domain, const std::vector<mir::Env>& envs,
                     bool parallel) {
    mir::Machine m(p);
    return oracle(m, target, domain, envs, parallel);
}

} // namespace oppred::deobf
