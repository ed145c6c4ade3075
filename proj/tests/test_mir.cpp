#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oppred/mir/asm_text.hpp"
#include "oppred/mir/interp.hpp"
#include "oppred/mir/ir.hpp"
#include "oppred/rng.hpp"

using namespace oppred;
using namespace oppred::mir;

namespace {

const char* kIdentitySrc = R"(
fn main(1 args)
entry:
  ret r0
)";

const char* kParitySrc = R"(
; returns x*(x+1) mod 2
fn main(1 args)
entry:
  mov r1, r0
  add r1, 1
  mul r1, r0
  and r1, 1
  mov r0, r1
  ret r0
)";

const char* kLoopSrc = R"(
fn main(1 args)
entry:
  jmp spin
spin:
  jmp spin
)";

} // namespace

TEST_CASE("minimal program parses to one function with one block") {
    Program p = parse_asm(kIdentitySrc);
    CHECK(p.functions.size() == 1);
    CHECK(p.functions[0].blocks.size() == 1);
    CHECK(p.entry_function == "main");
    CHECK(validate(p).empty());
}

TEST_CASE("undefined branch label is a parse error") {
    const char* src = R"(
fn main(1 args)
entry:
  cmp r0, 1
  jcc eq L9 exit
exit:
  ret r0
)";
    CHECK_THROWS_AS(parse_asm(src), ParseError);
}

TEST_CASE("syntax errors carry line information") {
    try {
        parse_asm("fn main(1 args)\nentry:\n  frob r0\n  ret r0\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
        CHECK(std::string(e.what()).find("frob") != std::string::npos);
    }
}

TEST_CASE("arity mismatch is rejected") {
    CHECK_THROWS_AS(parse_asm("fn main(1 args)\nentry:\n  add r0\n  ret r0\n"), ParseError);
    CHECK_THROWS_AS(parse_asm("fn main(1 args)\nentry:\n  getenv r0, 99\n  ret r0\n"),
                    ParseError);
}

TEST_CASE("emit is deterministic and round-trips") {
    Program p = parse_asm(kParitySrc);
    std::string text1 = emit_asm(p);
    std::string text2 = emit_asm(p);
    CHECK(text1 == text2);
    Program q = parse_asm(text1);
    CHECK(p == q);
    CHECK(emit_asm(q) == text1);
}

TEST_CASE("two structurally equal programs emit identical text") {
    Program a = parse_asm(kParitySrc);
    Program b = parse_asm(kParitySrc);
    CHECK(emit_asm(a) == emit_asm(b));
}

TEST_CASE("functions are emitted in declaration order") {
    const char* src = R"(
program base 0x400000 entry main
fn main(1 args)
entry:
  call helper done
done:
  ret r0
fn helper(1 args)
h:
  ret r0
)";
    Program p = parse_asm(src);
    std::string text = emit_asm(p);
    CHECK(text.find("fn main") < text.find("fn helper"));
}

TEST_CASE("identity function returns its input") {
    Program p = parse_asm(kIdentitySrc);
    std::vector<uint64_t> in{7};
    Outcome out = concrete_run(p, in, default_env());
    CHECK(out.status == RunStatus::Ok);
    CHECK(out.return_value == 7);
}

TEST_CASE("x*(x+1) mod 2 is zero for every input") {
    Program p = parse_asm(kParitySrc);
    Rng rng(99);
    for (int i = 0; i < 200; ++i) {
        std::vector<uint64_t> in{i < 64 ? static_cast<uint64_t>(i) : rng.next()};
        Outcome out = concrete_run(p, in, default_env());
        CHECK(out.status == RunStatus::Ok);
        CHECK(out.return_value == 0);
    }
}

TEST_CASE("infinite loop exhausts the step budget") {
    Program p = parse_asm(kLoopSrc);
    std::vector<uint64_t> in{1};
    Outcome out = concrete_run(p, in, default_env(), 1000);
    CHECK(out.status == RunStatus::BudgetExhausted);
}

TEST_CASE("memory faults and division by zero are runtime faults") {
    Program p = parse_asm(R"(
fn main(1 args)
entry:
  movimm r1, 0xffff
  load r2, [r1+8]
  ret r2
)");
    std::vector<uint64_t> in{0};
    CHECK(concrete_run(p, in, default_env()).status == RunStatus::RuntimeFault);

    Program q = parse_asm(R"(
fn main(1 args)
entry:
  movimm r1, 0
  udiv r0, r1
  ret r0
)");
    CHECK(concrete_run(q, in, default_env()).status == RunStatus::RuntimeFault);
}

TEST_CASE("output-region stores are traced in order") {
    Program p = parse_asm(R"(
fn main(1 args)
entry:
  movimm r1, 0xf000
  store [r1+0], r0
  store [r1+8], 42
  ret r0
)");
    std::vector<uint64_t> in{5};
    Outcome out = concrete_run(p, in, default_env());
    REQUIRE(out.output_trace.size() == 2);
    CHECK(out.output_trace[0] == std::pair<uint32_t, uint64_t>{0xf000, 5});
    CHECK(out.output_trace[1] == std::pair<uint32_t, uint64_t>{0xf008, 42});
}

TEST_CASE("concrete_run is deterministic") {
    Program p = parse_asm(kParitySrc);
    std::vector<uint64_t> in{123456789};
    Outcome a = concrete_run(p, in, default_env());
    Outcome b = concrete_run(p, in, default_env());
    CHECK(a.observably_equal(b));
}

TEST_CASE("environment slots are readable and are pure inputs") {
    Program p = parse_asm(R"(
fn main(1 args)
entry:
  getenv r1, 3
  mov r0, r1
  ret r0
)");
    Env env = default_env();
    env[3] = 0xdeadbeef;
    std::vector<uint64_t> in{0};
    CHECK(concrete_run(p, in, env).return_value == 0xdeadbeef);
}

TEST_CASE("calls copy parameters and return into r0 only") {
    Program p = parse_asm(R"(
fn main(2 args)
entry:
  add r0, r1
  call twice done
done:
  add r0, r1
  ret r0
fn twice(1 args)
t:
  add r0, r0
  ret r0
)");
    // main: r0 = (a+b)*2 + b
    std::vector<uint64_t> in{3, 4};
    CHECK(concrete_run(p, in, default_env()).return_value == (3 + 4) * 2 + 4);
}

TEST_CASE("enumerate_predicates: none, several, ordinals dense") {
    Program p = parse_asm(kParitySrc);
    CHECK(enumerate_predicates(p.functions[0]).empty());

    Program q = parse_asm(R"(
fn main(1 args)
entry:
  cmp r0, 1
  jcc eq a b
a:
  cmp r0, 2
  jcc ult c b
b:
  ret r0
c:
  cmp r0, 3
  jcc ne b exit
exit:
  ret r0
)");
    auto preds = enumerate_predicates(q.functions[0]);
    REQUIRE(preds.size() == 3);
    CHECK(preds[0].ordinal == 0);
    CHECK(preds[1].ordinal == 1);
    CHECK(preds[2].ordinal == 2);
    CHECK(preds[0].block == "entry");
    CHECK(preds[1].block == "a");
    CHECK(preds[2].block == "c");
}

TEST_CASE("flag semantics match two's-complement compare") {
    Program p = parse_asm(R"(
fn main(2 args)
entry:
  cmp r0, r1
  jcc slt less geq
less:
  movimm r0, 1
  ret r0
geq:
  movimm r0, 0
  ret r0
)");
    auto run = [&](uint64_t a, uint64_t b) {
        std::vector<uint64_t> in{a, b};
        return concrete_run(p, in, default_env()).return_value;
    };
    CHECK(run(1, 2) == 1);
    CHECK(run(2, 1) == 0);
    CHECK(run(static_cast<uint64_t>(-5), 3) == 1); // signed: -5 < 3
    CHECK(run(3, static_cast<uint64_t>(-5)) == 0);
    CHECK(run(7, 7) == 0);
}

TEST_CASE("block addresses shift with the base address") {
    Program p = parse_asm(kParitySrc);
    uint64_t a = block_address(p, "main", "entry");
    p.base_address += 0x10000;
    uint64_t b = block_address(p, "main", "entry");
    CHECK(b == a + 0x10000);
}
