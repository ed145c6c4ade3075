#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "oppred/deobf/oracle.hpp"
#include "oppred/mir/asm_text.hpp"
#include "oppred/obf/obfuscate.hpp"
#include "obf/templates.hpp"

using namespace oppred;
using namespace oppred::obf;

namespace {

const char* kTwoParam = R"(
fn main(2 args)
entry:
  add r0, r1
  xor r0, 0x55
  jmp next
next:
  mul r0, 3
  cmp r0, 100
  jcc ult low high
low:
  add r0, 7
  jmp exit
high:
  sub r0, 7
  jmp exit
exit:
  ret r0
)";

mir::Program two_param() { return mir::parse_asm(kTwoParam); }

deobf::OracleDomain quick_domain(int n_random = 10000) {
    deobf::OracleDomain d;
    d.n_random = n_random;
    d.seed = 7;
    return d;
}

// Differential equality oracle over all 2^16 8-bit pairs plus randoms.
void check_same_behavior(const mir::Program& a, const mir::Program& b, int n_random = 64) {
    mir::Machine ma(a), mb(b);
    mir::Machine::RunState sa, sb;
    mir::Env env = mir::default_env();
    Rng rng(3);
    int arity = ma.entry_arity();
    auto run_both = [&](const std::vector<uint64_t>& in) {
        mir::Outcome oa = ma.run_with_state(in, env, mir::kDefaultStepBudget, sa, nullptr);
        mir::Outcome ob = mb.run_with_state(in, env, mir::kDefaultStepBudget, sb, nullptr);
        CHECK(oa.observably_equal(ob));
    };
    for (uint64_t x = 0; x < 256; x += 5)
        for (uint64_t y = 0; y < 256; y += 7) {
            std::vector<uint64_t> in;
            for (int i = 0; i < arity; ++i) in.push_back(i == 0 ? x : y);
            run_both(in);
        }
    for (int i = 0; i < n_random; ++i) {
        std::vector<uint64_t> in;
        for (int j = 0; j < arity; ++j) in.push_back(rng.next());
        run_both(in);
    }
}

} // namespace

TEST_CASE("every kind has at least 4 distinct templates") {
    for (OpaqueKind k : {OpaqueKind::Arithmetic, OpaqueKind::MBA, OpaqueKind::Alias,
                         OpaqueKind::Environment, OpaqueKind::BiOpaqueFloat,
                         OpaqueKind::BiOpaqueSymMem})
        CHECK(detail::pool_size(k) >= 4);
}

TEST_CASE("injected predicates hold their polarity on the oracle domain") {
    // all kinds, both polarities, a few seeds; exhaustive 8-bit sweep plus
    // random 64-bit trials every time
    for (OpaqueKind kind : {OpaqueKind::Arithmetic, OpaqueKind::MBA, OpaqueKind::Alias,
                            OpaqueKind::Environment, OpaqueKind::BiOpaqueFloat,
                            OpaqueKind::BiOpaqueSymMem}) {
        for (Label polarity : {Label::OpTrue, Label::OpFalse}) {
            for (uint64_t seed = 0; seed < 3; ++seed) {
                mir::Program p = two_param();
                ObfContext ctx = ObfContext::for_function(p, "main");
                Rng rng(seed * 977 + static_cast<int>(kind) * 13 +
                        (polarity == Label::OpTrue ? 1 : 0));
                mir::PredicateId pid = inject_opaque(p, "main", kind, polarity, rng, ctx);
                CHECK(validate(p).empty());
                deobf::OracleVerdict v =
                    deobf::oracle(p, pid, quick_domain(2000), {ctx.env}, false);
                deobf::VerdictKind want = polarity == Label::OpTrue
                                              ? deobf::VerdictKind::AlwaysTrue
                                              : deobf::VerdictKind::AlwaysFalse;
                INFO("kind ", kind_name(kind), " polarity ", rawdata::label_name(polarity),
                     " seed ", seed);
                CHECK(v.kind == want);
                CHECK(v.fault_runs == 0);
            }
        }
    }
}

TEST_CASE("parity template verdict holds under full randomized trials") {
    // the classic product-of-consecutive-integers template
    for (uint64_t seed = 0; seed < 12; ++seed) {
        mir::Program p = two_param();
        ObfContext ctx = ObfContext::for_function(p, "main");
        Rng rng(seed);
        mir::PredicateId pid = inject_opaque(p, "main", OpaqueKind::Arithmetic, Label::OpTrue,
                                             rng, ctx);
        deobf::OracleVerdict v = deobf::oracle(p, pid, quick_domain(10000), {ctx.env}, false);
        CHECK(v.kind == deobf::VerdictKind::AlwaysTrue);
    }
}

TEST_CASE("alias pool provides a same-cell AlwaysTrue and a disjoint AlwaysFalse") {
    std::set<std::string> seen;
    for (uint64_t seed = 0; seed < 40 && seen.size() < 2; ++seed) {
        mir::Program p = two_param();
        ObfContext ctx = ObfContext::for_function(p, "main");
        Rng rng(seed);
        detail::TemplateRequest req;
        req.polarity = Label::OpTrue;
        for (int i = 8; i < 14; ++i) req.scratch_int.push_back(static_cast<uint8_t>(i));
        req.param_regs = {0, 1};
        req.env = &ctx.env;
        req.ctx = &ctx;
        detail::PredicateTemplate t = detail::build_template(OpaqueKind::Alias, req, rng);
        if (t.id == "alias.same_cell" || t.id == "alias.disjoint_cells") seen.insert(t.id);
    }
    CHECK(seen.count("alias.same_cell") == 1);
    CHECK(seen.count("alias.disjoint_cells") == 1);
}

TEST_CASE("recipe text round-trips") {
    Recipe r = parse_recipe("AddOpaque(MBA,2),EncodeArithmetic,Flatten");
    CHECK(r.transforms.size() == 3);
    CHECK(recipe_to_string(r) == "AddOpaque(MBA,2),EncodeArithmetic,Flatten");
    CHECK_THROWS_AS(parse_recipe("AddOpaque(Nope,1)"), std::invalid_argument);
    CHECK_THROWS_AS(parse_recipe(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_recipe("AddOpaque(MBA,0)"), std::invalid_argument);
}

TEST_CASE("AddOpaque(Arithmetic,2) adds two logged predicates") {
    mir::Program p = two_param();
    Rng rng(5);
    RecipeResult r = apply_recipe(p, "main", parse_recipe("AddOpaque(Arithmetic,2)"), rng);
    int op = 0, normal = 0;
    for (const auto& [pid, entry] : r.log) {
        if (entry.label == Label::Normal) ++normal;
        else ++op;
    }
    CHECK(op == 2);
    CHECK(normal >= 1); // the original predicate
    // the log covers exactly the post-transform predicates
    auto preds = enumerate_predicates(r.program);
    CHECK(preds.size() == r.log.size());
    for (const auto& pid : preds) CHECK(r.log.count(pid) == 1);
}

TEST_CASE("flatten-only recipes are clean samples") {
    mir::Program p = two_param();
    Rng rng(11);
    RecipeResult r = apply_recipe(p, "main", parse_recipe("Flatten"), rng);
    CHECK(enumerate_predicates(r.program).size() > enumerate_predicates(p).size());
    for (const auto& [pid, entry] : r.log) CHECK(entry.label == Label::Normal);
    check_same_behavior(p, r.program);
}

TEST_CASE("deep recipe preserves behavior") {
    mir::Program p = two_param();
    Rng rng(23);
    RecipeResult r =
        apply_recipe(p, "main", parse_recipe("AddOpaque(MBA,1),EncodeArithmetic,Flatten"), rng);
    check_same_behavior(p, r.program);
    int op = 0;
    for (const auto& [pid, entry] : r.log)
        if (entry.label != Label::Normal) ++op;
    CHECK(op == 1);
}

TEST_CASE("encode_arithmetic rewrites the three identities exhaustively") {
    const char* src = R"(
fn main(2 args)
entry:
  add r0, r1
  sub r0, 17
  xor r0, r1
  ret r0
)";
    mir::Program p = mir::parse_asm(src);
    mir::Program q = p;
    ObfContext ctx = ObfContext::for_function(q, "main");
    Rng rng(1);
    encode_arithmetic(q, "main", rng, ctx);
    // no add/sub/xor disappears semantically: exhaustive 8-bit differential
    mir::Machine ma(p), mb(q);
    mir::Machine::RunState sa, sb;
    for (uint64_t x = 0; x < 256; ++x)
        for (uint64_t y = 0; y < 256; y += 3) {
            std::vector<uint64_t> in{x, y};
            mir::Outcome oa = ma.run_with_state(in, ctx.env, mir::kDefaultStepBudget, sa, nullptr);
            mir::Outcome ob = mb.run_with_state(in, ctx.env, mir::kDefaultStepBudget, sb, nullptr);
            REQUIRE(oa.observably_equal(ob));
        }
    // and the rewritten body is actually different
    CHECK(mir::emit_asm(p) != mir::emit_asm(q));
}

TEST_CASE("encode_literals decodes back to the original constant") {
    const char* src = R"(
fn main(1 args)
entry:
  movimm r2, 0
  mov r0, r2
  ret r0
)";
    mir::Program p = mir::parse_asm(src);
    for (uint64_t seed = 0; seed < 8; ++seed) {
        mir::Program q = p;
        ObfContext ctx = ObfContext::for_function(q, "main");
        Rng rng(seed);
        encode_literals(q, "main", rng, ctx);
        std::vector<uint64_t> in{9};
        CHECK(mir::concrete_run(q, in, ctx.env).return_value == 0);
        CHECK(q.functions[0].blocks[0].instructions.size() >= 3);
    }
}

TEST_CASE("encode_data keeps loads consistent with encoded stores") {
    const char* src = R"(
fn main(2 args)
entry:
  movimm r5, 0xd000
  store [r5+8], r0
  store [r5+16], r1
  load r3, [r5+8]
  load r4, [r5+16]
  add r3, r4
  mov r0, r3
  ret r0
)";
    mir::Program p = mir::parse_asm(src);
    bool changed = false;
    for (uint64_t seed = 0; seed < 6; ++seed) {
        mir::Program q = p;
        ObfContext ctx = ObfContext::for_function(q, "main");
        Rng rng(seed);
        encode_data(q, "main", rng, ctx);
        check_same_behavior(p, q, 16);
        if (mir::emit_asm(q) != mir::emit_asm(p)) changed = true;
    }
    CHECK(changed);
}

TEST_CASE("flatten rewrites a multi-block function into a dispatcher") {
    mir::Program p = two_param();
    mir::Program q = p;
    ObfContext ctx = ObfContext::for_function(q, "main");
    Rng rng(4);
    flatten(q, "main", rng, ctx);
    CHECK(validate(q).empty());
    CHECK(q.functions[0].blocks.size() > p.functions[0].blocks.size());
    check_same_behavior(p, q);
    // entry label is preserved so callers do not change
    CHECK(q.functions[0].entry_block == p.functions[0].entry_block);
}

TEST_CASE("injection into a flattened function stays sound") {
    mir::Program p = two_param();
    Rng rng(31);
    RecipeResult r = apply_recipe(p, "main", parse_recipe("Flatten,AddOpaque(MBA,2)"), rng);
    check_same_behavior(p, r.program);
    for (const auto& [pid, entry] : r.log) {
        if (entry.label == Label::Normal) continue;
        deobf::OracleVerdict v = deobf::oracle(r.program, pid, quick_domain(1000), {}, false);
        deobf::VerdictKind want = entry.label == Label::OpTrue ? deobf::VerdictKind::AlwaysTrue
                                                               : deobf::VerdictKind::AlwaysFalse;
        CHECK(v.kind == want);
    }
}

TEST_CASE("polarity balance is rng-driven but both polarities occur") {
    int t = 0, f = 0;
    for (uint64_t seed = 0; seed < 10; ++seed) {
        mir::Program p = two_param();
        Rng rng(seed);
        RecipeResult r = apply_recipe(p, "main", parse_recipe("AddOpaque(Environment,2)"), rng);
        for (const auto& [pid, e] : r.log) {
            if (e.label == Label::OpTrue) ++t;
            if (e.label == Label::OpFalse) ++f;
        }
    }
    CHECK(t > 0);
    CHECK(f > 0);
    CHECK(t + f == 20);
}
