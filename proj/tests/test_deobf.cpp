#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <sstream>

#include "oppred/corpus/corpus.hpp"
#include "oppred/deobf/pipeline.hpp"
#include "oppred/mir/asm_text.hpp"

using namespace oppred;
using namespace oppred::deobf;

namespace {

const char* kParityPredicate = R"(
fn main(1 args)
entry:
  mov r2, r0
  add r2, 1
  mul r2, r0
  and r2, 1
  cmp r2, 0
  jcc eq live dead
dead:
  movimm r0, 666
  jmp live
live:
  ret r0
)";

const char* kTwoWayEq = R"(
fn main(1 args)
entry:
  cmp r0, 5
  jcc eq a b
a:
  movimm r0, 1
  ret r0
b:
  movimm r0, 0
  ret r0
)";

mir::PredicateId first_pred(const mir::Program& p) {
    auto preds = mir::enumerate_predicates(p);
    REQUIRE(!preds.empty());
    return preds[0];
}

OracleDomain domain(int n = 10000) {
    OracleDomain d;
    d.n_random = n;
    d.seed = 11;
    return d;
}

// Trains detector/resolver on the program's own samples: a memorizing,
// effectively perfect pair of models for that program.
std::pair<learn::TrainedModel, learn::TrainedModel> perfect_models(
    const corpus::ProgramBundle& bundle) {
    auto samples = corpus::bundle_samples(bundle, {});
    learn::TrainedModel det = learn::train_model(samples, learn::Task::Detection,
                                                 feat::FeatureKind::Tf, rawdata::SetKind::Set3);
    learn::TrainedModel res = learn::train_model(samples, learn::Task::Deobfuscation,
                                                 feat::FeatureKind::Tf, rawdata::SetKind::Set3);
    return {std::move(det), std::move(res)};
}

corpus::ProgramBundle obfuscated_bundle(uint64_t seed, const char* recipe) {
    mir::Program base = corpus::make_base_program(seed, "main");
    obf::Recipe r = obf::parse_recipe(recipe);
    Rng rng(seed ^ 0xbeefULL);
    obf::RecipeResult rr = obf::apply_recipe(base, "main", r, rng);
    corpus::ProgramBundle b;
    b.id = "t" + std::to_string(seed);
    b.original = std::move(base);
    b.obfuscated = std::move(rr.program);
    b.log = std::move(rr.log);
    b.recipe = recipe;
    return b;
}

} // namespace

TEST_CASE("parity predicate is AlwaysTrue over the full sweep") {
    mir::Program p = mir::parse_asm(kParityPredicate);
    OracleVerdict v = oracle(p, first_pred(p), domain(), {}, false);
    CHECK(v.kind == VerdictKind::AlwaysTrue);
    CHECK(v.fault_runs == 0);
    CHECK(v.witness_taken.has_value());
    CHECK(!v.witness_fallthrough.has_value());
}

TEST_CASE("eq against 5 is TwoWay with witnesses 5 and 0") {
    mir::Program p = mir::parse_asm(kTwoWayEq);
    OracleVerdict v = oracle(p, first_pred(p), domain(), {}, false);
    CHECK(v.kind == VerdictKind::TwoWay);
    REQUIRE(v.witness_taken.has_value());
    REQUIRE(v.witness_fallthrough.has_value());
    CHECK((*v.witness_taken)[0] == 5);
    CHECK((*v.witness_fallthrough)[0] == 0);
}

TEST_CASE("pell-like inequality is AlwaysFalse under eq") {
    const char* src = R"(
fn main(2 args)
entry:
  mov r2, r0
  mul r2, r0
  mul r2, 7
  sub r2, 1
  mov r3, r1
  mul r3, r1
  cmp r2, r3
  jcc eq dead live
dead:
  movimm r0, 1
  ret r0
live:
  ret r0
)";
    mir::Program p = mir::parse_asm(src);
    OracleVerdict v = oracle(p, first_pred(p), domain(10000), {}, false);
    CHECK(v.kind == VerdictKind::AlwaysFalse);
    CHECK(v.planned_runs == 65536 + 10000);
}

TEST_CASE("unobserved predicates are reported as such") {
    const char* src = R"(
fn main(1 args)
entry:
  jmp exit
exit:
  ret r0
never:
  cmp r0, 1
  jcc eq exit exit
)";
    mir::Program p = mir::parse_asm(src);
    OracleVerdict v = oracle(p, first_pred(p), domain(100), {}, false);
    CHECK(v.kind == VerdictKind::Unobserved);
}

TEST_CASE("strip removes the dead branch and unreachable blocks") {
    mir::Program p = mir::parse_asm(kParityPredicate);
    VerdictMap verdicts{{first_pred(p), true}};
    mir::Program q = strip(p, verdicts);
    CHECK(mir::enumerate_predicates(q).empty());
    CHECK(q.functions[0].find_block("dead") == nullptr);
    CHECK(q.functions[0].find_block("live") != nullptr);

    // stripping is idempotent
    mir::Program q2 = strip(q, verdicts);
    CHECK(q == q2);
}

TEST_CASE("strip with an empty verdict map is the identity") {
    mir::Program p = mir::parse_asm(kParityPredicate);
    CHECK(strip(p, {}) == p);
}

TEST_CASE("stripping all injected predicates restores the predicate count") {
    corpus::ProgramBundle b = obfuscated_bundle(5, "AddOpaque(Arithmetic,2),AddOpaque(MBA,1)");
    VerdictMap verdicts;
    for (const auto& [pid, entry] : b.log) {
        if (entry.label == rawdata::Label::Normal) continue;
        verdicts[pid] = entry.label == rawdata::Label::OpTrue;
    }
    CHECK(verdicts.size() == 3);
    mir::Program stripped = strip(b.obfuscated, verdicts);
    CHECK(mir::enumerate_predicates(stripped).size() ==
          mir::enumerate_predicates(b.original).size());
}

TEST_CASE("verify_equivalence distinguishes stripped from misdirected programs") {
    corpus::ProgramBundle b = obfuscated_bundle(8, "AddOpaque(Environment,2)");
    VerdictMap good;
    for (const auto& [pid, entry] : b.log) {
        if (entry.label == rawdata::Label::Normal) continue;
        good[pid] = entry.label == rawdata::Label::OpTrue;
    }
    auto inputs = equivalence_inputs(b.obfuscated.find_function("main")->arity, 77);
    mir::Env env = mir::default_env();
    CHECK(verify_equivalence(b.obfuscated, strip(b.obfuscated, good), inputs, env).pass);
    CHECK(verify_equivalence(b.obfuscated, b.obfuscated, inputs, env).pass);

    // swapping the live edge routes through the dead branch, which is
    // observable by construction
    mir::Program p = mir::parse_asm(kParityPredicate);
    VerdictMap swapped_verdict{{first_pred(p), false}};
    EquivalenceResult swapped =
        verify_equivalence(p, strip(p, swapped_verdict), equivalence_inputs(1, 5), env);
    CHECK(!swapped.pass);
    CHECK(!swapped.witness.empty());
}

TEST_CASE("oracle-mode pipeline removes everything with no mistakes") {
    corpus::ProgramBundle b = obfuscated_bundle(13, "AddOpaque(MBA,2),AddOpaque(Alias,1)");
    PipelineOptions opt;
    opt.mode = PipelineMode::Oracle;
    opt.oracle_domain = domain(2000);
    opt.parallel = false;
    PipelineResult res = run_pipeline(b.obfuscated, b.log, opt);
    CHECK(res.report.total_opaque == 3);
    CHECK(res.report.removed_opaque == 3);
    CHECK(res.report.false_positives == 0);
    CHECK(res.report.false_negatives == 0);
    CHECK(res.report.errors == 0);
    CHECK(res.report.removal_rate == doctest::Approx(100.0));
    CHECK(res.report.equivalence_pass);
}

TEST_CASE("perfect models give a clean model-mode run") {
    corpus::ProgramBundle b =
        obfuscated_bundle(21, "AddOpaque(Arithmetic,2),AddOpaque(Environment,2)");
    auto [det, res_model] = perfect_models(b);
    PipelineOptions opt;
    opt.detector = &det;
    opt.resolver = &res_model;
    opt.parallel = false;
    PipelineResult res = run_pipeline(b.obfuscated, b.log, opt);
    CHECK(res.report.total_opaque == 4);
    CHECK(res.report.removed_opaque == 4);
    CHECK(res.report.false_positives == 0);
    CHECK(res.report.false_negatives == 0);
    CHECK(res.report.equivalence_pass);
}

TEST_CASE("a detector that flags everything produces one FP per normal predicate") {
    corpus::ProgramBundle b = obfuscated_bundle(34, "AddOpaque(Arithmetic,1)");
    int normals = 0;
    for (const auto& [pid, e] : b.log)
        if (e.label == rawdata::Label::Normal) ++normals;
    REQUIRE(normals > 0);

    // all-opaque training data gives single-leaf trees that flag everything
    auto samples = corpus::bundle_samples(b, {});
    std::vector<rawdata::Sample> all_op;
    for (auto s : samples) {
        if (s.document.meta.set != rawdata::SetKind::Set3) continue;
        s.label = rawdata::Label::OpTrue;
        all_op.push_back(std::move(s));
    }
    learn::TrainedModel det = learn::train_model(all_op, learn::Task::Detection,
                                                 feat::FeatureKind::Tf, rawdata::SetKind::Set3);
    learn::TrainedModel res_model = learn::train_model(
        all_op, learn::Task::Deobfuscation, feat::FeatureKind::Tf, rawdata::SetKind::Set3);

    PipelineOptions opt;
    opt.detector = &det;
    opt.resolver = &res_model;
    opt.guard_inputs = 0; // count the raw bookkeeping without the safety net
    opt.parallel = false;
    PipelineResult r0 = run_pipeline(b.obfuscated, b.log, opt);
    CHECK(r0.report.false_positives == normals);

    // with the probabilistic guard on, two-way normals stay in place
    opt.guard_inputs = 32;
    PipelineResult r1 = run_pipeline(b.obfuscated, b.log, opt);
    CHECK(r1.report.false_positives < normals);
    CHECK(r1.report.equivalence_pass);
}

TEST_CASE("per-predicate errors never abort the run") {
    // alpha budget of zero paths forces an analysis error on every predicate
    corpus::ProgramBundle b = obfuscated_bundle(55, "AddOpaque(MBA,1)");
    auto [det, res_model] = perfect_models(b);
    PipelineOptions opt;
    opt.detector = &det;
    opt.resolver = &res_model;
    opt.budget.alpha_paths = 1;
    opt.budget.alpha_loop = 1;
    opt.parallel = false;
    PipelineResult res = run_pipeline(b.obfuscated, b.log, opt);
    CHECK(res.report.rows.size() == mir::enumerate_predicates(b.obfuscated).size());
    CHECK(res.report.equivalence_pass); // whatever was stripped stayed sound
}

TEST_CASE("soundness gate matches every injected predicate") {
    std::vector<corpus::ProgramBundle> bundles;
    for (uint64_t s = 0; s < 4; ++s)
        bundles.push_back(obfuscated_bundle(        100 + s, "AddOpaque(Arithmetic,1),AddOpaque(BiOpaqueFloat,1)"));
    std::vector<std::pair<const mir::Program*, const obf::InjectionLog*>> items;
    for (const auto& b : bundles) items.push_back({&b.obfuscated, &b.log});
    GateOptions gopt;
    gopt.domain = domain(1000);
    gopt.parallel = false;
    GateResult gate = soundness_gate(items, gopt);
    CHECK(gate.checked == 8);
    CHECK(gate.matched == 8);
    CHECK(gate.pass());
}
