#pragma once

#include <string>
#include <vector>

#include "oppred/deobf/oracle.hpp"
#include "oppred/deobf/strip.hpp"
#include "oppred/learn/cv.hpp"
#include "oppred/obf/obfuscate.hpp"
#include "oppred/symex/symex.hpp"

namespace oppred::deobf {

enum class PipelineMode { Model, Oracle };

struct PipelineOptions {
    PipelineMode mode = PipelineMode::Model;
    symex::PathBudget budget;
    const learn::TrainedModel* detector = nullptr; // Model mode
    const learn::TrainedModel* resolver = nullptr; // Model mode, TRUE/FALSE
    mir::Env env = mir::default_env();
    OracleDomain oracle_domain;                    // Oracle mode
    int guard_inputs = 32;                         // polarity sanity check, Model mode
    int equivalence_inputs = 64;
    uint64_t seed = 1;
    bool parallel = true;
};

enum class Action { Kept, Removed };

struct PredicateRow {
    mir::PredicateId id;
    rawdata::Label truth = rawdata::Label::Normal;
    std::string predicted;  // model/oracle outcome summary
    Action action = Action::Kept;
    bool error = false;
    std::string note;
};

struct DeobfReport {
    std::vector<PredicateRow> rows;
    int total_opaque = 0;
    int removed_opaque = 0;
    int false_positives = 0; // normal predicates removed
    int false_negatives = 0; // opaque predicates kept
    int errors = 0;
    double removal_rate = 0.0; // percent
    bool equivalence_pass = false;
    std::vector<uint64_t> equivalence_witness;
    double wall_seconds = 0.0;
};

struct PipelineResult {
    mir::Program program;
    DeobfReport report;
};

// Full per-predicate flow: collect states -> render Set3 -> normalize ->
// vectorize -> majority-vote detection -> majority-vote polarity -> strip ->
// verify. Ground truth for the report comes from the injection log.
PipelineResult run_pipeline(const mir::Program& p, const obf::InjectionLog& log,
                            const PipelineOptions& options);

// Corpus soundness gate: every injected predicate must receive the oracle
// verdict matching its logged polarity.
struct GateOptions {
    OracleDomain domain;
    mir::Env env = mir::default_env();
    bool parallel = true;
};

struct GateResult {
    int checked = 0;
    int matched = 0;
    std::vector<std::string> mismatches;
    double wall_seconds = 0.0;
    bool pass() const { return checked == matched; }
};

GateResult soundness_gate(
    const std::vector<std::pair<const mir::Program*, const obf::InjectionLog*>>& items,
    const GateOptions& options);

} // namespace oppred::deobf
