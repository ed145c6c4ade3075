#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oppred/mir/ir.hpp"
#include "oppred/obf/obfuscate.hpp"
#include "oppred/rawdata/rawdata.hpp"
#include "oppred/symex/symex.hpp"

namespace oppred::corpus {

struct GenConfig {
    uint64_t seed = 1;
    int size = 5000; // sample units per set kind; [1000, 100000]
    std::vector<std::string> recipes = {"AddOpaque(Arithmetic,2)"};
    symex::PathBudget budget;
    bool parallel = true;
    int max_programs = 0; // 0: derived from size

    std::string canonical() const;
    uint64_t hash() const;
};

// One generated program before/after obfuscation, with its ground truth.
struct ProgramBundle {
    std::string id;
    int seed_index = 0;
    mir::Program original;
    mir::Program obfuscated;
    obf::InjectionLog log;
    std::string recipe;
};

// Random base program: 1-2 inputs, straight-line spine with diamonds and an
// optional bounded loop, data-region variables, an occasional helper call or
// float compare. Every conditional branch is probe-verified to take both
// directions within the 8-bit sweep domain.
mir::Program make_base_program(uint64_t seed, const std::string& name);

// Smaller memory-free variant used by the symbolic-consistency checks.
mir::Program make_tiny_program(uint64_t seed, const std::string& name);

std::optional<ProgramBundle> make_bundle(const GenConfig& cfg, int index);

struct GenStats {
    int programs_used = 0;
    int programs_failed = 0;
    int truncated_path_sets = 0;
    std::map<std::string, int> label_counts;
};

struct GeneratedCorpus {
    std::vector<rawdata::Sample> samples; // all three set kinds, unit-aligned
    std::vector<ProgramBundle> bundles;   // programs that contributed samples
    GenStats stats;
    mir::Env env = mir::default_env();
};

// Deterministic in (config.seed, config): generates programs until the
// per-label quotas (size/2 normal, size/4 each polarity) are filled for
// every set kind. Parallel and serial generation produce identical corpora.
GeneratedCorpus generate_corpus(const GenConfig& cfg);

// Samples of one program bundle (all sets), unit order: function, predicate,
// path.
std::vector<rawdata::Sample> bundle_samples(const ProgramBundle& bundle,
                                            const symex::PathBudget& budget,
                                            int* truncated_sets = nullptr);

} // namespace oppred::corpus
