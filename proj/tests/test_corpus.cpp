#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "oppred/corpus/corpus.hpp"
#include "oppred/mir/asm_text.hpp"
#include "oppred/corpus/corpus_io.hpp"
#include "oppred/mir/interp.hpp"
#include "oppred/obf/obfuscate.hpp"

using namespace oppred;
using namespace oppred::corpus;

namespace {

GenConfig small_config(uint64_t seed = 7) {
    GenConfig cfg;
    cfg.seed = seed;
    cfg.size = 1000;
    cfg.recipes = {"AddOpaque(Arithmetic,2)", "AddOpaque(MBA,2)",
                   "AddOpaque(Environment,1),EncodeLiterals"};
    return cfg;
}

std::string corpus_fingerprint(const GeneratedCorpus& c) {
    std::string out;
    for (const auto& s : c.samples) {
        out += s.document.joined();
        out += '\x1f';
        out += rawdata::label_name(s.label);
        out += s.document.meta.program;
        out += '\x1e';
    }
    return out;
}

} // namespace

TEST_CASE("base programs have only two-way natural predicates") {
    for (uint64_t seed = 0; seed < 25; ++seed) {
        mir::Program p = make_base_program(seed * 31, "main");
        REQUIRE(validate(p).empty());
        mir::Machine m(p);
        if (m.num_sites() == 0) continue;
        std::vector<unsigned> seen(m.num_sites(), 0);
        mir::Machine::BranchHook hook = [&](int s, bool taken) { seen[s] |= taken ? 1u : 2u; };
        const mir::Function* entry = p.find_function("main");
        mir::Machine::RunState st;
        for (const auto& in : obf::make_probe_inputs(entry->arity))
            m.run_with_state(in, mir::default_env(), mir::kDefaultStepBudget, st, &hook);
        for (unsigned dirs : seen) CHECK(dirs == 3u);
    }
}

TEST_CASE("tiny programs are memory- and float-free") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        mir::Program p = make_tiny_program(seed, "main");
        REQUIRE(validate(p).empty());
        for (const auto& f : p.functions)
            for (const auto& b : f.blocks)
                for (const auto& insn : b.instructions) {
                    CHECK(insn.op != mir::Opcode::Load);
                    CHECK(insn.op != mir::Opcode::Store);
                    CHECK(insn.op != mir::Opcode::Fcmp);
                    CHECK(insn.op != mir::Opcode::GetEnv);
                }
    }
}

TEST_CASE("corpus generation fills exact label quotas") {
    GeneratedCorpus c = generate_corpus(small_config());
    CHECK(c.stats.label_counts["NORMAL"] == 500);
    CHECK(c.stats.label_counts["OP_TRUE"] == 250);
    CHECK(c.stats.label_counts["OP_FALSE"] == 250);
    CHECK(c.samples.size() == 3000); // three sets per unit

    // per-set breakdown is balanced identically
    std::map<std::string, int> set3;
    for (const auto& s : c.samples)
        if (s.document.meta.set == rawdata::SetKind::Set3)
            ++set3[rawdata::label_name(s.label)];
    CHECK(set3["NORMAL"] == 500);
    CHECK(set3["OP_TRUE"] == 250);
    CHECK(set3["OP_FALSE"] == 250);
}

TEST_CASE("same seed twice gives byte-identical corpora") {
    GeneratedCorpus a = generate_corpus(small_config());
    GeneratedCorpus b = generate_corpus(small_config());
    CHECK(corpus_fingerprint(a) == corpus_fingerprint(b));
    REQUIRE(a.bundles.size() == b.bundles.size());
    for (size_t i = 0; i < a.bundles.size(); ++i)
        CHECK(mir::emit_asm(a.bundles[i].obfuscated) == mir::emit_asm(b.bundles[i].obfuscated));
}

TEST_CASE("different seeds give different corpora") {
    GeneratedCorpus a = generate_corpus(small_config(7));
    GeneratedCorpus b = generate_corpus(small_config(8));
    CHECK(corpus_fingerprint(a) != corpus_fingerprint(b));
}

TEST_CASE("size bounds are enforced") {
    GenConfig cfg = small_config();
    cfg.size = 10;
    CHECK_THROWS_AS(generate_corpus(cfg), std::invalid_argument);
    cfg.size = 10000000;
    CHECK_THROWS_AS(generate_corpus(cfg), std::invalid_argument);
}

TEST_CASE("bad recipes are a config error") {
    GenConfig cfg = small_config();
    cfg.recipes = {"AddOpaque(Quantum,1)"};
    CHECK_THROWS_AS(generate_corpus(cfg), std::invalid_argument);
}

TEST_CASE("corpus write/load round-trips samples and manifest") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "oppred_test_corpus";
    fs::remove_all(dir);
    GenConfig cfg = small_config();
    GeneratedCorpus c = generate_corpus(cfg);
    write_corpus(dir, c, cfg);

    LoadedCorpus loaded = load_corpus(dir);
    REQUIRE(loaded.samples.size() == c.samples.size());
    for (size_t i = 0; i < c.samples.size(); ++i) {
        CHECK(loaded.samples[i].document.joined() == c.samples[i].document.joined());
        CHECK(loaded.samples[i].label == c.samples[i].label);
        CHECK(loaded.samples[i].document.meta.program == c.samples[i].document.meta.program);
        CHECK(loaded.samples[i].document.meta.set == c.samples[i].document.meta.set);
    }
    CHECK(loaded.config_hash == cfg.hash());
    CHECK(loaded.program_ids.size() == c.bundles.size());

    auto programs = load_programs(dir);
    REQUIRE(programs.size() == c.bundles.size());
    for (size_t i = 0; i < programs.size(); ++i) {
        CHECK(programs[i].obfuscated == c.bundles[i].obfuscated);
        CHECK(programs[i].original == c.bundles[i].original);
        CHECK(programs[i].log.size() == c.bundles[i].log.size());
        for (const auto& [pid, entry] : c.bundles[i].log) {
            REQUIRE(programs[i].log.count(pid) == 1);
            CHECK(programs[i].log.at(pid).label == entry.label);
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("clean recipes alone cannot fill opaque quotas") {
    GenConfig cfg = small_config();
    cfg.recipes = {"Flatten"};
    cfg.max_programs = 64;
    CHECK_THROWS_AS(generate_corpus(cfg), std::runtime_error);
}

TEST_CASE("path budgets hold across a generated corpus") {
    GenConfig cfg = small_config();
    cfg.size = 1000;
    GeneratedCorpus c = generate_corpus(cfg);
    std::set<std::pair<std::string, int>> seen_units;
    for (const auto& s : c.samples) {
        CHECK(s.document.meta.path_index < cfg.budget.alpha_paths);
    }
}
