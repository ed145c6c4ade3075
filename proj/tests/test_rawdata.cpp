#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oppred/mir/asm_text.hpp"
#include "oppred/rawdata/rawdata.hpp"

using namespace oppred;
using namespace oppred::rawdata;

namespace {

RawDocument doc_of(std::vector<std::string> lines) {
    RawDocument d;
    d.lines = std::move(lines);
    return d;
}

Sample sample_of(std::string text, Label label) {
    Sample s;
    s.document = doc_of({std::move(text)});
    s.label = label;
    return s;
}

std::vector<symex::SymbolicState> states_for(const mir::Program& p, int pred_ordinal_in_fn0) {
    const mir::Function& f = p.functions[0];
    auto preds = mir::enumerate_predicates(f);
    REQUIRE(static_cast<int>(preds.size()) > pred_ordinal_in_fn0);
    return symex::collect_states(p, f, preds[pred_ordinal_in_fn0], {});
}

} // namespace

TEST_CASE("normalization matches the constant-target shape") {
    std::vector<std::string> ids;
    std::vector<uint64_t> vals;
    std::string line = "ExprId('IRDst', size=64) = ExprInt(0x402b36, 64)";
    CHECK(normalize_line(line, ids, vals) == "ExprId(id1, size=64) = ExprInt(v1, 64)");
}

TEST_CASE("true and false variants normalize to the same line") {
    std::vector<std::string> ids1, ids2;
    std::vector<uint64_t> vals1, vals2;
    std::string t = "ExprId('IRDst', size=64) = ExprInt(0x402b36, 64)";
    std::string f = "ExprId('IRDst', size=64) = ExprInt(0x402209, 64)";
    CHECK(normalize_line(t, ids1, vals1) == normalize_line(f, ids2, vals2));
}

TEST_CASE("normalize is idempotent") {
    RawDocument d = doc_of({
        "ExprId('IRDst', size=64) = ExprCond(ExprId('ZF_1', size=1), ExprInt(0x10, 64), ExprInt(0x20, 64))",
        "ExprId('r3_1', size=64) = ExprOp('+', ExprId('r0', size=64), ExprInt(0x1, 64))",
    });
    RawDocument once = normalize(d);
    RawDocument twice = normalize(once);
    CHECK(once.lines == twice.lines);
}

TEST_CASE("identifier and value counters run in first-occurrence order") {
    RawDocument d = doc_of({
        "ExprId('r5_1', size=64) = ExprInt(0xbeef, 64)",
        "ExprId('r6_1', size=64) = ExprOp('+', ExprId('r5_1', size=64), ExprInt(0xbeef, 64))",
    });
    RawDocument n = normalize(d);
    CHECK(n.lines[0] == "ExprId(id1, size=64) = ExprInt(v1, 64)");
    CHECK(n.lines[1] == "ExprId(id2, size=64) = ExprOp(add, ExprId(id1, size=64), ExprInt(v1, 64))");
}

TEST_CASE("operator spellings become alphanumeric words") {
    std::vector<std::string> ids;
    std::vector<uint64_t> vals;
    CHECK(normalize_line("ExprOp('<<', ExprId('x', size=64), ExprInt(0x2, 64))", ids, vals) ==
          "ExprOp(shl, ExprId(id1, size=64), ExprInt(v1, 64))");
    CHECK(normalize_line("ExprOp('cmpult', ExprId('x', size=64), ExprId('x', size=64))", ids,
                         vals) == "ExprOp(cmpult, ExprId(id1, size=64), ExprId(id1, size=64))");
}

TEST_CASE("set shapes: set1 single line, set2 flags, set3 everything") {
    const char* src = R"(
fn main(2 args)
entry:
  add r0, r1
  movimm r2, 7
  cmp r0, r2
  jcc ult t f
t:
  ret r0
f:
  ret r0
)";
    mir::Program p = mir::parse_asm(src);
    auto states = states_for(p, 0);
    REQUIRE(states.size() == 1);
    DocMeta meta;
    meta.program = "p0";

    RawDocument s1 = render_state(p, states[0], SetKind::Set1, meta);
    REQUIRE(s1.lines.size() == 1);
    CHECK(s1.lines[0].rfind("ExprId('IRDst', size=64) = ", 0) == 0);

    RawDocument s2 = render_state(p, states[0], SetKind::Set2, meta);
    CHECK(s2.lines.size() == 5); // four flags + IRDst
    CHECK(s2.lines.back() == s1.lines[0]);

    RawDocument s3 = render_state(p, states[0], SetKind::Set3, meta);
    CHECK(s3.lines.size() == states[0].assignments.size() + 1);
    CHECK(s3.lines.back() == s1.lines[0]);

    // set monotonicity: set1 lines within set2 lines within set3 lines
    for (const auto& l : s1.lines)
        CHECK(std::count(s3.lines.begin(), s3.lines.end(), l) > 0);
    for (const auto& l : s2.lines)
        CHECK(std::count(s3.lines.begin(), s3.lines.end(), l) > 0);
}

TEST_CASE("folded predicate renders as a constant IRDst line") {
    const char* src = R"(
fn main(1 args)
entry:
  movimm r2, 4
  mov r3, r2
  mul r3, r2
  and r3, 3
  cmp r3, 2
  jcc ult t f
t:
  ret r0
f:
  ret r0
)";
    mir::Program p = mir::parse_asm(src);
    auto states = states_for(p, 0);
    REQUIRE(states.size() == 1);
    DocMeta meta;
    RawDocument s1 = normalize(render_state(p, states[0], SetKind::Set1, meta));
    CHECK(s1.lines[0] == "ExprId(id1, size=64) = ExprInt(v1, 64)");
}

TEST_CASE("address-shift invariance of normalized set3 documents") {
    const char* src = R"(
fn main(2 args)
entry:
  cmp r0, r1
  jcc eq t f
t:
  add r0, 1
  jmp j
f:
  add r0, 2
  jmp j
j:
  cmp r0, 5
  jcc ult a b
a:
  ret r0
b:
  ret r0
)";
    mir::Program p = mir::parse_asm(src);
    mir::Program shifted = p;
    shifted.base_address += 0x30000;
    for (int pred = 0; pred < 2; ++pred) {
        auto sa = states_for(p, pred);
        auto sb = states_for(shifted, pred);
        REQUIRE(sa.size() == sb.size());
        for (size_t i = 0; i < sa.size(); ++i) {
            DocMeta meta;
            RawDocument da = normalize(render_state(p, sa[i], SetKind::Set3, meta));
            RawDocument db = normalize(render_state(shifted, sb[i], SetKind::Set3, meta));
            CHECK(da.lines == db.lines);
            // pre-normalization documents must actually differ (addresses)
            RawDocument ra = render_state(p, sa[i], SetKind::Set1, meta);
            RawDocument rb = render_state(shifted, sb[i], SetKind::Set1, meta);
            CHECK(ra.lines != rb.lines);
        }
    }
}

TEST_CASE("similarity: forced collision is 100 percent") {
    std::vector<Sample> samples;
    samples.push_back(sample_of("ExprId(id1, size=64) = ExprInt(v1, 64)", Label::OpTrue));
    samples.push_back(sample_of("ExprId(id1, size=64) = ExprInt(v1, 64)", Label::OpFalse));
    CHECK(cross_label_similarity(samples, SimilarityTask::Deobfuscation) == 100.0);
    CHECK(cross_label_similarity(samples, SimilarityTask::Detection) == 0.0); // both opaque
}

TEST_CASE("similarity: pairwise distinct corpus is 0 percent") {
    std::vector<Sample> samples;
    samples.push_back(sample_of("a", Label::Normal));
    samples.push_back(sample_of("b", Label::OpTrue));
    samples.push_back(sample_of("c", Label::OpFalse));
    CHECK(cross_label_similarity(samples, SimilarityTask::Detection) == 0.0);
    CHECK(cross_label_similarity(samples, SimilarityTask::Deobfuscation) == 0.0);
}

TEST_CASE("similarity counts collisions across projected labels only") {
    std::vector<Sample> samples;
    samples.push_back(sample_of("same", Label::Normal));
    samples.push_back(sample_of("same", Label::OpTrue));
    samples.push_back(sample_of("other", Label::OpFalse));
    // detection: NORMAL vs OPAQUE collide -> 2 of 3
    CHECK(cross_label_similarity(samples, SimilarityTask::Detection) ==
          doctest::Approx(100.0 * 2 / 3));
    // deobfuscation: only the two opaque samples count, contents differ
    CHECK(cross_label_similarity(samples, SimilarityTask::Deobfuscation) == 0.0);
}

TEST_CASE("renaming source registers keeps the normalized token multiset") {
    const char* src_a = R"(
fn main(2 args)
entry:
  mov r3, r0
  add r3, r1
  cmp r3, 9
  jcc ult t f
t:
  ret r0
f:
  ret r0
)";
    // same computation through different register names
    const char* src_b = R"(
fn main(2 args)
entry:
  mov r5, r0
  add r5, r1
  cmp r5, 9
  jcc ult t f
t:
  ret r0
f:
  ret r0
)";
    mir::Program a = mir::parse_asm(src_a);
    mir::Program b = mir::parse_asm(src_b);
    DocMeta meta;
    auto da = normalize(render_state(a, states_for(a, 0)[0], SetKind::Set3, meta));
    auto db = normalize(render_state(b, states_for(b, 0)[0], SetKind::Set3, meta));
    CHECK(da.lines == db.lines);
}
