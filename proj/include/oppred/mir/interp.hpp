#pragma once

#include <cstring>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "oppred/mir/ir.hpp"

namespace oppred::mir {

enum class RunStatus { Ok, RuntimeFault, BudgetExhausted };

// Observable behavior of a run: the returned value plus the ordered trace of
// 64-bit stores into the output region. Faulting and budget exhaustion are
// outcomes of their own.
struct Outcome {
    RunStatus status = RunStatus::Ok;
    uint64_t return_value = 0;
    std::vector<std::pair<uint32_t, uint64_t>> output_trace;
    std::string fault; // set when status == RuntimeFault

    bool observably_equal(const Outcome& o) const {
        if (status != o.status) return false;
        if (status == RunStatus::Ok && return_value != o.return_value) return false;
        return output_trace == o.output_trace;
    }
};

inline constexpr uint64_t kDefaultStepBudget = 200000;

// Pre-decoded program. Building one is cheap but not free; oracle sweeps
// compile once and run many times. A Machine is immutable after construction
// and safe to share across threads; each run uses caller-owned RunState.
class Machine {
public:
    explicit Machine(const Program& p);
    ~Machine();
    Machine(Machine&&) noexcept;
    Machine& operator=(Machine&&) noexcept;
    Machine(const Machine&) = delete;
    Machine& operator=(const Machine&) = delete;

    // Branch observer: called for every executed CondJump with this site
    // index (dense over the whole program, block order) and the direction.
    using BranchHook = std::function<void(int site, bool taken)>;
    // Block observer: called on entry to every executed block.
    using BlockHook = std::function<void(int fn, int block)>;

    Outcome run(std::span<const uint64_t> inputs, const Env& env, uint64_t step_budget) const;
    Outcome run(std::span<const uint64_t> inputs, const Env& env, uint64_t step_budget,
                const BranchHook& hook) const;

    // Site index for a predicate, -1 if absent.
    int site_index(const PredicateId& id) const;
    int num_sites() const { return static_cast<int>(site_count_); }
    int entry_arity() const;

    // Scratch reused across runs so a 65k-input sweep does not re-zero 64 KiB
    // per run. Not thread-safe; one per thread.
    struct RunState {
        std::vector<uint8_t> memory;
        std::vector<uint32_t> dirty_words;
        RunState() : memory(kMemBytes, 0) { dirty_words.reserve(256); }
    };

    Outcome run_with_state(std::span<const uint64_t> inputs, const Env& env,
                           uint64_t step_budget, RunState& state, const BranchHook* hook,
                           const BlockHook* block_hook = nullptr) const;

    const std::string& function_name(int fn) const { return fn_names_[fn]; }
    const std::string& block_label(int fn, int block) const { return block_labels_[fn][block]; }

private:
    struct DecodedInsn;
    struct DecodedTerm;
    struct DecodedBlock;
    struct DecodedFn;

    std::vector<DecodedFn> fns_;
    std::vector<std::string> fn_names_;
    std::vector<std::vector<std::string>> block_labels_;
    int entry_fn_ = 0;
    size_t site_count_ = 0;
    std::vector<PredicateId> sites_;

public:
    const std::vector<PredicateId>& sites() const { return sites_; }
};

// Convenience one-shot entry point; deterministic in (p, inputs, env, budget).
Outcome concrete_run(const Program& p, std::span<const uint64_t> inputs, const Env& env,
                     uint64_t step_budget = kDefaultStepBudget);

} // namespace oppred::mir
