#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oppred/corpus/corpus.hpp"
#include "oppred/deobf/pipeline.hpp"
#include "oppred/learn/cv.hpp"
#include "oppred/mir/asm_text.hpp"
#include "oppred/parallel.hpp"

using namespace oppred;

namespace {

corpus::GenConfig config(bool parallel) {
    corpus::GenConfig cfg;
    cfg.seed = 99;
    cfg.size = 1000;
    cfg.recipes = {"AddOpaque(Arithmetic,2)", "AddOpaque(MBA,1),Flatten"};
    cfg.parallel = parallel;
    return cfg;
}

} // namespace

TEST_CASE("parallel corpus generation equals the serial reference") {
    corpus::GeneratedCorpus serial = corpus::generate_corpus(config(false));
    corpus::GeneratedCorpus parallel = corpus::generate_corpus(config(true));
    REQUIRE(serial.samples.size() == parallel.samples.size());
    for (size_t i = 0; i < serial.samples.size(); ++i) {
        CHECK(serial.samples[i].document.joined() == parallel.samples[i].document.joined());
        CHECK(serial.samples[i].label == parallel.samples[i].label);
    }
    REQUIRE(serial.bundles.size() == parallel.bundles.size());
    for (size_t i = 0; i < serial.bundles.size(); ++i)
        CHECK(mir::emit_asm(serial.bundles[i].obfuscated) ==
              mir::emit_asm(parallel.bundles[i].obfuscated));
}

TEST_CASE("parallel oracle agrees with the serial reference") {
    corpus::GeneratedCorpus c = corpus::generate_corpus(config(true));
    deobf::OracleDomain domain;
    domain.n_random = 3000;
    int compared = 0;
    for (size_t bi = 0; bi < c.bundles.size() && compared < 8; ++bi) {
        mir::Machine m(c.bundles[bi].obfuscated);
        for (const auto& [pid, entry] : c.bundles[bi].log) {
            if (compared >= 8) break;
            deobf::OracleVerdict s = deobf::oracle_serial(m, pid, domain, {});
            deobf::OracleVerdict p = deobf::oracle(m, pid, domain, {}, true);
            CHECK(s.kind == p.kind);
            CHECK(s.planned_runs == p.planned_runs);
            ++compared;
        }
    }
    CHECK(compared == 8);
}

TEST_CASE("parallel cross-validation equals the serial reference") {
    corpus::GeneratedCorpus c = corpus::generate_corpus(config(true));
    std::vector<rawdata::Sample> set3;
    for (const auto& s : c.samples)
        if (s.document.meta.set == rawdata::SetKind::Set3) set3.push_back(s);
    learn::CvOptions opt;
    opt.k = 10;
    opt.parallel = false;
    learn::CvReport serial = learn::kfold_cv(set3, opt);
    opt.parallel = true;
    learn::CvReport parallel = learn::kfold_cv(set3, opt);
    REQUIRE(serial.fold_accuracy.size() == parallel.fold_accuracy.size());
    for (size_t i = 0; i < serial.fold_accuracy.size(); ++i) {
        CHECK(serial.fold_accuracy[i] == parallel.fold_accuracy[i]);
        CHECK(serial.fold_f1[i] == parallel.fold_f1[i]);
    }
}

TEST_CASE("parallel soundness gate equals the serial reference") {
    corpus::GeneratedCorpus c = corpus::generate_corpus(config(true));
    std::vector<std::pair<const mir::Program*, const obf::InjectionLog*>> items;
    for (size_t i = 0; i < std::min<size_t>(6, c.bundles.size()); ++i)
        items.push_back({&c.bundles[i].obfuscated, &c.bundles[i].log});
    deobf::GateOptions opt;
    opt.domain.n_random = 1000;
    opt.parallel = false;
    deobf::GateResult serial = deobf::soundness_gate(items, opt);
    opt.parallel = true;
    deobf::GateResult parallel = deobf::soundness_gate(items, opt);
    CHECK(serial.checked == parallel.checked);
    CHECK(serial.matched == parallel.matched);
    CHECK(serial.pass());
    CHECK(parallel.pass());
}
