#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "oppred/corpus/corpus.hpp"

namespace oppred::corpus {

// On-disk layout of a corpus directory:
//   corpus.jsonl     one record per sample: doc, label, program, function,
//                    block, ordinal, path, set, recipe
//   manifest.json    config echo + hash, env table, per-program ground truth
//   programs/<id>.asm, programs/<id>.orig.asm
void write_corpus(const std::filesystem::path& dir, const GeneratedCorpus& corpus,
                  const GenConfig& cfg);

struct LoadedCorpus {
    std::vector<rawdata::Sample> samples;
    uint64_t config_hash = 0;
    uint64_t seed = 0;
    mir::Env env = mir::default_env();
    std::vector<std::string> program_ids;
};

LoadedCorpus load_corpus(const std::filesystem::path& dir);

struct LoadedProgram {
    std::string id;
    mir::Program original;
    mir::Program obfuscated;
    obf::InjectionLog log;
    std::string recipe;
};

// The evaluation side: programs plus ground truth, no samples needed.
std::vector<LoadedProgram> load_programs(const std::filesystem::path& dir);

std::vector<std::string> manifest_program_ids(const std::filesystem::path& dir);
uint64_t manifest_config_hash(const std::filesystem::path& dir);

} // namespace oppred::corpus
