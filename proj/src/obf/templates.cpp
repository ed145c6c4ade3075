#include "templates.hpp"

#include <bit>

namespace oppred::obf::detail {

using mir::Imm;
using mir::Instruction;
using mir::MemRef;
using mir::Opcode;
using mir::Reg;

namespace {

Instruction ins(Opcode op, std::initializer_list<mir::Operand> ops) {
    return Instruction{op, std::vector<mir::Operand>(ops)};
}

uint64_t dbits(double d) { return std::bit_cast<uint64_t>(d); }

// Helper bundle handed to each template builder.
struct Builder {
    const TemplateRequest& req;
    Rng& rng;
    std::vector<Instruction> code;
    size_t next_int = 0;
    size_t next_float = 0;

    uint8_t scratch() {
        if (next_int >= req.scratch_int.size())
            throw TransformError("template exhaustion: out of scratch registers");
        return req.scratch_int[next_int++];
    }
    uint8_t scratchf() {
        if (next_float >= req.scratch_float.size())
            throw TransformError("template exhaustion: out of float scratch registers");
        return req.scratch_float[next_float++];
    }

    // A 64-bit "input" value: usually a parameter, sometimes a constant or a
    // derived mix. Constant-fed instances are the ones whose branch target
    // folds during symbolic execution.
    uint8_t value_source() {
        uint8_t t = scratch();
        bool have_params = !req.param_regs.empty();
        uint64_t roll = rng.below(100);
        if (have_params && roll < 50) {
            uint8_t p = req.param_regs[rng.below(req.param_regs.size())];
            code.push_back(ins(Opcode::Mov, {mir::r(t), mir::r(p)}));
        } else if (have_params && roll < 92) {
            // a derived value; opaque computations tend to chew on their
            // inputs before testing them
            uint8_t p = req.param_regs[rng.below(req.param_regs.size())];
            code.push_back(ins(Opcode::Mov, {mir::r(t), mir::r(p)}));
            int steps = 1 + static_cast<int>(rng.below(2));
            for (int i = 0; i < steps; ++i) {
                switch (rng.below(4)) {
                    case 0: code.push_back(ins(Opcode::Add, {mir::r(t), Imm{rng.below(100000)}})); break;
                    case 1: code.push_back(ins(Opcode::Xor, {mir::r(t), Imm{rng.next()}})); break;
                    case 2: code.push_back(ins(Opcode::Mul, {mir::r(t), Imm{rng.range(3, 97) | 1}})); break;
                    case 3: code.push_back(ins(Opcode::Shl, {mir::r(t), Imm{rng.range(1, 4)}})); break;
                }
            }
        } else {
            code.push_back(ins(Opcode::MovImm, {mir::r(t), Imm{rng.next()}}));
        }
        return t;
    }

    void emit(Instruction i) { code.push_back(std::move(i)); }
};

// Polarity realization for a predicate whose computed condition (cond over
// the final cmp) is always TRUE: either keep it for OP_TRUE or invert the
// jcc condition for OP_FALSE.
mir::Cond polarize(mir::Cond true_cond, Label polarity) {
    return polarity == Label::OpTrue ? true_cond : mir::cond_invert(true_cond);
}

// ---- Arithmetic pool -------------------------------------------------------
// True and false predicates come from different number-theoretic facts, the
// way obfuscators ship separate always-true and never-true formula lists.

PredicateTemplate arith_parity_product(Builder& b) {
    // x*x + x == x*(x+1) is even for every x.
    uint8_t x = b.value_source();
    uint8_t t = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t), mir::r(x)}));
    b.emit(ins(Opcode::Mul, {mir::r(t), mir::r(x)}));
    b.emit(ins(Opcode::Add, {mir::r(t), mir::r(x)}));
    b.emit(ins(Opcode::And, {mir::r(t), Imm{1}}));
    b.emit(ins(Opcode::Cmp, {mir::r(t), Imm{0}}));
    return {std::move(b.code), mir::Cond::Eq, "arith.parity_product"};
}

PredicateTemplate arith_square_mod4(Builder& b) {
    // x*x mod 4 equals the low bit of x.
    uint8_t x = b.value_source();
    uint8_t t = b.scratch();
    uint8_t u = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t), mir::r(x)}));
    b.emit(ins(Opcode::Mul, {mir::r(t), mir::r(x)}));
    b.emit(ins(Opcode::And, {mir::r(t), Imm{3}}));
    b.emit(ins(Opcode::Mov, {mir::r(u), mir::r(x)}));
    b.emit(ins(Opcode::And, {mir::r(u), Imm{1}}));
    b.emit(ins(Opcode::Cmp, {mir::r(t), mir::r(u)}));
    return {std::move(b.code), mir::Cond::Eq, "arith.square_mod4"};
}

PredicateTemplate arith_shifted_parity(Builder& b) {
    // x*x + 3x == x*(x+3) is even: x and x+3 have opposite parity.
    uint8_t x = b.value_source();
    uint8_t t = b.scratch();
    uint8_t u = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t), mir::r(x)}));
    b.emit(ins(Opcode::Mul, {mir::r(t), mir::r(x)}));
    b.emit(ins(Opcode::Mov, {mir::r(u), mir::r(x)}));
    b.emit(ins(Opcode::Mul, {mir::r(u), Imm{3}}));
    b.emit(ins(Opcode::Add, {mir::r(t), mir::r(u)}));
    b.emit(ins(Opcode::And, {mir::r(t), Imm{1}}));
    b.emit(ins(Opcode::Cmp, {mir::r(t), Imm{0}}));
    return {std::move(b.code), mir::Cond::Eq, "arith.shifted_parity"};
}

PredicateTemplate arith_odd_or(Builder& b) {
    // x|1 is odd, so its low bit is set.
    uint8_t x = b.value_source();
    uint8_t t = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t), mir::r(x)}));
    b.emit(ins(Opcode::Or, {mir::r(t), Imm{1}}));
    b.emit(ins(Opcode::And, {mir::r(t), Imm{1}}));
    b.emit(ins(Opcode::Cmp, {mir::r(t), Imm{1}}));
    return {std::move(b.code), mir::Cond::Eq, "arith.odd_or"};
}

PredicateTemplate arith_double_even(Builder& b) {
    // x + x == x << 1, so their xor is zero.
    uint8_t x = b.value_source();
    uint8_t t1 = b.scratch();
    uint8_t t2 = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t1), mir::r(x)}));
    b.emit(ins(Opcode::Add, {mir::r(t1), mir::r(x)}));
    b.emit(ins(Opcode::Mov, {mir::r(t2), mir::r(x)}));
    b.emit(ins(Opcode::Shl, {mir::r(t2), Imm{1}}));
    b.emit(ins(Opcode::Xor, {mir::r(t1), mir::r(t2)}));
    b.emit(ins(Opcode::Cmp, {mir::r(t1), Imm{0}}));
    return {std::move(b.code), mir::Cond::Eq, "arith.double_even"};
}

PredicateTemplate arith_pell_like(Builder& b) {
    // 7*x*x - 1 == y*y has no solution (squares are 0 or 1 mod 4).
    uint8_t x = b.value_source();
    uint8_t y = b.value_source();
    uint8_t t1 = b.scratch();
    uint8_t t2 = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t1), mir::r(x)}));
    b.emit(ins(Opcode::Mul, {mir::r(t1), mir::r(x)}));
    b.emit(ins(Opcode::Mul, {mir::r(t1), Imm{7}}));
    b.emit(ins(Opcode::Sub, {mir::r(t1), Imm{1}}));
    b.emit(ins(Opcode::Mov, {mir::r(t2), mir::r(y)}));
    b.emit(ins(Opcode::Mul, {mir::r(t2), mir::r(y)}));
    b.emit(ins(Opcode::Cmp, {mir::r(t1), mir::r(t2)}));
    return {std::move(b.code), mir::Cond::Eq, "arith.pell_like"};
}

PredicateTemplate arith_odd_vs_even(Builder& b) {
    // (x|1) - 2x is odd minus even, never zero.
    uint8_t x = b.value_source();
    uint8_t t1 = b.scratch();
    uint8_t t2 = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t1), mir::r(x)}));
    b.emit(ins(Opcode::Or, {mir::r(t1), Imm{1}}));
    b.emit(ins(Opcode::Mov, {mir::r(t2), mir::r(x)}));
    b.emit(ins(Opcode::Shl, {mir::r(t2), Imm{1}}));
    b.emit(ins(Opcode::Sub, {mir::r(t1), mir::r(t2)}));
    b.emit(ins(Opcode::Cmp, {mir::r(t1), Imm{0}}));
    return {std::move(b.code), mir::Cond::Eq, "arith.odd_vs_even"};
}

PredicateTemplate arith_square_minus_two(Builder& b) {
    // (x*x mod 4) - 2 is never zero: squares are 0 or 1 mod 4.
    uint8_t x = b.value_source();
    uint8_t t = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t), mir::r(x)}));
    b.emit(ins(Opcode::Mul, {mir::r(t), mir::r(x)}));
    b.emit(ins(Opcode::And, {mir::r(t), Imm{3}}));
    b.emit(ins(Opcode::Sub, {mir::r(t), Imm{2}}));
    b.emit(ins(Opcode::Cmp, {mir::r(t), Imm{0}}));
    return {std::move(b.code), mir::Cond::Eq, "arith.square_minus_two"};
}

PredicateTemplate arith_odd_zero(Builder& b) {
    // 3*((x|1) - x) is 0 or 3, never 5.
    uint8_t x = b.value_source();
    uint8_t t = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t), mir::r(x)}));
    b.emit(ins(Opcode::Or, {mir::r(t), Imm{1}}));
    b.emit(ins(Opcode::Sub, {mir::r(t), mir::r(x)}));
    b.emit(ins(Opcode::Mul, {mir::r(t), Imm{3}}));
    b.emit(ins(Opcode::Cmp, {mir::r(t), Imm{5}}));
    return {std::move(b.code), mir::Cond::Eq, "arith.odd_zero"};
}

PredicateTemplate arith_successor(Builder& b) {
    // x-1 == x never holds.
    uint8_t x = b.value_source();
    uint8_t t = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t), mir::r(x)}));
    b.emit(ins(Opcode::Sub, {mir::r(t), Imm{1}}));
    b.emit(ins(Opcode::Cmp, {mir::r(t), mir::r(x)}));
    return {std::move(b.code), mir::Cond::Eq, "arith.successor"};
}

// ---- MBA pool --------------------------------------------------------------
// True predicates are rewriting identities; false ones are bitwise
// dominance facts or identities pushed off by one.

PredicateTemplate mba_add_xor_and(Builder& b) {
    // x + y == (x ^ y) + 2*(x & y)
    uint8_t x = b.value_source();
    uint8_t y = b.value_source();
    uint8_t t1 = b.scratch();
    uint8_t t2 = b.scratch();
    uint8_t t3 = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t1), mir::r(x)}));
    b.emit(ins(Opcode::Xor, {mir::r(t1), mir::r(y)}));
    b.emit(ins(Opcode::Mov, {mir::r(t2), mir::r(x)}));
    b.emit(ins(Opcode::And, {mir::r(t2), mir::r(y)}));
    b.emit(ins(Opcode::Shl, {mir::r(t2), Imm{1}}));
    b.emit(ins(Opcode::Add, {mir::r(t1), mir::r(t2)}));
    b.emit(ins(Opcode::Mov, {mir::r(t3), mir::r(x)}));
    b.emit(ins(Opcode::Add, {mir::r(t3), mir::r(y)}));
    b.emit(ins(Opcode::Cmp, {mir::r(t1), mir::r(t3)}));
    return {std::move(b.code), mir::Cond::Eq, "mba.add_xor_and"};
}

PredicateTemplate mba_xor_or_and(Builder& b) {
    // x ^ y == (x | y) - (x & y)
    uint8_t x = b.value_source();
    uint8_t y = b.value_source();
    uint8_t t1 = b.scratch();
    uint8_t t2 = b.scratch();
    uint8_t t3 = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t1), mir::r(x)}));
    b.emit(ins(Opcode::Or, {mir::r(t1), mir::r(y)}));
    b.emit(ins(Opcode::Mov, {mir::r(t2), mir::r(x)}));
    b.emit(ins(Opcode::And, {mir::r(t2), mir::r(y)}));
    b.emit(ins(Opcode::Sub, {mir::r(t1), mir::r(t2)}));
    b.emit(ins(Opcode::Mov, {mir::r(t3), mir::r(x)}));
    b.emit(ins(Opcode::Xor, {mir::r(t3), mir::r(y)}));
    b.emit(ins(Opcode::Cmp, {mir::r(t1), mir::r(t3)}));
    return {std::move(b.code), mir::Cond::Eq, "mba.xor_or_and"};
}

PredicateTemplate mba_sub_xor_nand(Builder& b) {
    // x - y == (x ^ y) - 2*(~x & y)
    uint8_t x = b.value_source();
    uint8_t y = b.value_source();
    uint8_t t1 = b.scratch();
    uint8_t t2 = b.scratch();
    uint8_t t3 = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t1), mir::r(x)}));
    b.emit(ins(Opcode::Xor, {mir::r(t1), mir::r(y)}));
    b.emit(ins(Opcode::Mov, {mir::r(t2), mir::r(x)}));
    b.emit(ins(Opcode::Not, {mir::r(t2)}));
    b.emit(ins(Opcode::And, {mir::r(t2), mir::r(y)}));
    b.emit(ins(Opcode::Shl, {mir::r(t2), Imm{1}}));
    b.emit(ins(Opcode::Sub, {mir::r(t1), mir::r(t2)}));
    b.emit(ins(Opcode::Mov, {mir::r(t3), mir::r(x)}));
    b.emit(ins(Opcode::Sub, {mir::r(t3), mir::r(y)}));
    b.emit(ins(Opcode::Cmp, {mir::r(t1), mir::r(t3)}));
    return {std::move(b.code), mir::Cond::Eq, "mba.sub_xor_nand"};
}

PredicateTemplate mba_or_disjoint(Builder& b) {
    // x | y == (x & ~y) + y
    uint8_t x = b.value_source();
    uint8_t y = b.value_source();
    uint8_t t1 = b.scratch();
    uint8_t t2 = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t1), mir::r(y)}));
    b.emit(ins(Opcode::Not, {mir::r(t1)}));
    b.emit(ins(Opcode::And, {mir::r(t1), mir::r(x)}));
    b.emit(ins(Opcode::Add, {mir::r(t1), mir::r(y)}));
    b.emit(ins(Opcode::Mov, {mir::r(t2), mir::r(x)}));
    b.emit(ins(Opcode::Or, {mir::r(t2), mir::r(y)}));
    b.emit(ins(Opcode::Cmp, {mir::r(t1), mir::r(t2)}));
    return {std::move(b.code), mir::Cond::Eq, "mba.or_disjoint"};
}

PredicateTemplate mba_add_or_and(Builder& b) {
    // x + y == (x | y) + (x & y)
    uint8_t x = b.value_source();
    uint8_t y = b.value_source();
    uint8_t t1 = b.scratch();
    uint8_t t2 = b.scratch();
    uint8_t t3 = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t1), mir::r(x)}));
    b.emit(ins(Opcode::Or, {mir::r(t1), mir::r(y)}));
    b.emit(ins(Opcode::Mov, {mir::r(t2), mir::r(x)}));
    b.emit(ins(Opcode::And, {mir::r(t2), mir::r(y)}));
    b.emit(ins(Opcode::Add, {mir::r(t1), mir::r(t2)}));
    b.emit(ins(Opcode::Mov, {mir::r(t3), mir::r(x)}));
    b.emit(ins(Opcode::Add, {mir::r(t3), mir::r(y)}));
    b.emit(ins(Opcode::Cmp, {mir::r(t1), mir::r(t3)}));
    return {std::move(b.code), mir::Cond::Eq, "mba.add_or_and"};
}

PredicateTemplate mba_or_below_and(Builder& b) {
    // x|y < -(-(x&y)): or dominates and bitwise, double negation is a noise
    // wrapper MBA rewriters like.
    uint8_t x = b.value_source();
    uint8_t y = b.value_source();
    uint8_t t1 = b.scratch();
    uint8_t t2 = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t1), mir::r(x)}));
    b.emit(ins(Opcode::Or, {mir::r(t1), mir::r(y)}));
    b.emit(ins(Opcode::Mov, {mir::r(t2), mir::r(x)}));
    b.emit(ins(Opcode::And, {mir::r(t2), mir::r(y)}));
    b.emit(ins(Opcode::Neg, {mir::r(t2)}));
    b.emit(ins(Opcode::Neg, {mir::r(t2)}));
    b.emit(ins(Opcode::Cmp, {mir::r(t1), mir::r(t2)}));
    return {std::move(b.code), mir::Cond::Ult, "mba.or_below_and"};
}

PredicateTemplate mba_x_below_and(Builder& b) {
    // x < -(-(x & y)) never holds.
    uint8_t x = b.value_source();
    uint8_t y = b.value_source();
    uint8_t t = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t), mir::r(x)}));
    b.emit(ins(Opcode::And, {mir::r(t), mir::r(y)}));
    b.emit(ins(Opcode::Neg, {mir::r(t)}));
    b.emit(ins(Opcode::Neg, {mir::r(t)}));
    b.emit(ins(Opcode::Cmp, {mir::r(x), mir::r(t)}));
    return {std::move(b.code), mir::Cond::Ult, "mba.x_below_and"};
}

PredicateTemplate mba_or_below_x(Builder& b) {
    // (x | y) < neg(~x) - 1 never holds: neg(~x) - 1 is x itself.
    uint8_t x = b.value_source();
    uint8_t y = b.value_source();
    uint8_t t1 = b.scratch();
    uint8_t t2 = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t1), mir::r(x)}));
    b.emit(ins(Opcode::Or, {mir::r(t1), mir::r(y)}));
    b.emit(ins(Opcode::Mov, {mir::r(t2), mir::r(x)}));
    b.emit(ins(Opcode::Not, {mir::r(t2)}));
    b.emit(ins(Opcode::Neg, {mir::r(t2)}));
    b.emit(ins(Opcode::Sub, {mir::r(t2), Imm{1}}));
    b.emit(ins(Opcode::Cmp, {mir::r(t1), mir::r(t2)}));
    return {std::move(b.code), mir::Cond::Ult, "mba.or_below_x"};
}

PredicateTemplate mba_xor_off_one(Builder& b) {
    // x ^ y == (x | y) - (x & y) + 1 never holds.
    uint8_t x = b.value_source();
    uint8_t y = b.value_source();
    uint8_t t1 = b.scratch();
    uint8_t t2 = b.scratch();
    uint8_t t3 = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t1), mir::r(x)}));
    b.emit(ins(Opcode::Or, {mir::r(t1), mir::r(y)}));
    b.emit(ins(Opcode::Mov, {mir::r(t2), mir::r(x)}));
    b.emit(ins(Opcode::And, {mir::r(t2), mir::r(y)}));
    b.emit(ins(Opcode::Sub, {mir::r(t1), mir::r(t2)}));
    // adding 1 spelled as subtracting a negated unit
    b.emit(ins(Opcode::MovImm, {mir::r(t2), Imm{1}}));
    b.emit(ins(Opcode::Neg, {mir::r(t2)}));
    b.emit(ins(Opcode::Sub, {mir::r(t1), mir::r(t2)}));
    b.emit(ins(Opcode::Mov, {mir::r(t3), mir::r(x)}));
    b.emit(ins(Opcode::Xor, {mir::r(t3), mir::r(y)}));
    b.emit(ins(Opcode::Cmp, {mir::r(t1), mir::r(t3)}));
    return {std::move(b.code), mir::Cond::Eq, "mba.xor_off_one"};
}

PredicateTemplate mba_sum_off_one(Builder& b) {
    // x + y == (x ^ y) + 2*(x & y) - 1 never holds.
    uint8_t x = b.value_source();
    uint8_t y = b.value_source();
    uint8_t t1 = b.scratch();
    uint8_t t2 = b.scratch();
    uint8_t t3 = b.scratch();
    b.emit(ins(Opcode::Mov, {mir::r(t1), mir::r(x)}));
    b.emit(ins(Opcode::Xor, {mir::r(t1), mir::r(y)}));
    b.emit(ins(Opcode::Mov, {mir::r(t2), mir::r(x)}));
    b.emit(ins(Opcode::And, {mir::r(t2), mir::r(y)}));
    b.emit(ins(Opcode::Shl, {mir::r(t2), Imm{1}}));
    b.emit(ins(Opcode::Add, {mir::r(t1), mir::r(t2)}));
    // subtracting 1 spelled as adding a negated unit
    b.emit(ins(Opcode::MovImm, {mir::r(t2), Imm{1}}));
    b.emit(ins(Opcode::Neg, {mir::r(t2)}));
    b.emit(ins(Opcode::Add, {mir::r(t1), mir::r(t2)}));
    b.emit(ins(Opcode::Mov, {mir::r(t3), mir::r(x)}));
    b.emit(ins(Opcode::Add, {mir::r(t3), mir::r(y)}));
    b.emit(ins(Opcode::Cmp, {mir::r(t1), mir::r(t3)}));
    return {std::move(b.code), mir::Cond::Eq, "mba.sum_off_one"};
}

// ---- Alias pool ------------------------------------------------------------

PredicateTemplate alias_same_cell(Builder& b) {
    // Two pointers to the same cell; loads through both always agree.
    uint32_t cell = b.req.ctx->alloc_scratch_cell(8);
    uint8_t p1 = b.scratch();
    uint8_t p2 = b.scratch();
    uint8_t v1 = b.scratch();
    uint8_t v2 = b.scratch();
    b.emit(ins(Opcode::MovImm, {mir::r(p1), Imm{cell}}));
    b.emit(ins(Opcode::Mov, {mir::r(p2), mir::r(p1)}));
    b.emit(ins(Opcode::Store, {MemRef{mir::r(p1), 0}, Imm{b.rng.next()}}));
    b.emit(ins(Opcode::Load, {mir::r(v1), MemRef{mir::r(p1), 0}}));
    b.emit(ins(Opcode::Load, {mir::r(v2), MemRef{mir::r(p2), 0}}));
    b.emit(ins(Opcode::Cmp, {mir::r(v1), mir::r(v2)}));
    return {std::move(b.code), polarize(mir::Cond::Eq, b.req.polarity), "alias.same_cell"};
}

PredicateTemplate alias_disjoint_cells(Builder& b) {
    // Two distinct cells holding distinct constants never compare equal.
    uint32_t c1 = b.req.ctx->alloc_scratch_cell(8);
    uint32_t c2 = b.req.ctx->alloc_scratch_cell(8);
    uint64_t k1 = b.rng.next();
    uint64_t k2 = k1 ^ (1 + b.rng.below(0xffff));
    uint8_t p1 = b.scratch();
    uint8_t p2 = b.scratch();
    uint8_t v1 = b.scratch();
    uint8_t v2 = b.scratch();
    b.emit(ins(Opcode::MovImm, {mir::r(p1), Imm{c1}}));
    b.emit(ins(Opcode::MovImm, {mir::r(p2), Imm{c2}}));
    b.emit(ins(Opcode::Store, {MemRef{mir::r(p1), 0}, Imm{k1}}));
    b.emit(ins(Opcode::Store, {MemRef{mir::r(p2), 0}, Imm{k2}}));
    b.emit(ins(Opcode::Load, {mir::r(v1), MemRef{mir::r(p1), 0}}));
    b.emit(ins(Opcode::Load, {mir::r(v2), MemRef{mir::r(p2), 0}}));
    b.emit(ins(Opcode::Cmp, {mir::r(v1), mir::r(v2)}));
    mir::Cond cond = b.req.polarity == Label::OpTrue ? mir::Cond::Ne : mir::Cond::Eq;
    return {std::move(b.code), cond, "alias.disjoint_cells"};
}

PredicateTemplate alias_obscured_copy(Builder& b) {
    // p2 = p1 + (x ^ x): an input-routed zero hides the aliasing.
    uint32_t cell = b.req.ctx->alloc_scratch_cell(8);
    uint8_t x = b.value_source();
    uint8_t p1 = b.scratch();
    uint8_t p2 = b.scratch();
    uint8_t v1 = b.scratch();
    uint8_t v2 = b.scratch();
    b.emit(ins(Opcode::MovImm, {mir::r(p1), Imm{cell}}));
    b.emit(ins(Opcode::Mov, {mir::r(p2), mir::r(x)}));
    b.emit(ins(Opcode::Xor, {mir::r(p2), mir::r(x)}));
    b.emit(ins(Opcode::Add, {mir::r(p2), mir::r(p1)}));
    b.emit(ins(Opcode::Store, {MemRef{mir::r(p1), 0}, Imm{b.rng.next()}}));
    b.emit(ins(Opcode::Load, {mir::r(v1), MemRef{mir::r(p1), 0}}));
    b.emit(ins(Opcode::Load, {mir::r(v2), MemRef{mir::r(p2), 0}}));
    b.emit(ins(Opcode::Cmp, {mir::r(v1), mir::r(v2)}));
    return {std::move(b.code), polarize(mir::Cond::Eq, b.req.polarity), "alias.obscured_copy"};
}

PredicateTemplate alias_last_store_wins(Builder& b) {
    // Store through both aliases; the second store is the one observed.
    uint32_t cell = b.req.ctx->alloc_scratch_cell(8);
    uint64_t k1 = b.rng.next();
    uint64_t k2 = k1 + 1 + b.rng.below(0xffff);
    uint8_t p1 = b.scratch();
    uint8_t p2 = b.scratch();
    uint8_t v = b.scratch();
    uint8_t c = b.scratch();
    b.emit(ins(Opcode::MovImm, {mir::r(p1), Imm{cell}}));
    b.emit(ins(Opcode::Mov, {mir::r(p2), mir::r(p1)}));
    b.emit(ins(Opcode::Store, {MemRef{mir::r(p1), 0}, Imm{k1}}));
    b.emit(ins(Opcode::Store, {MemRef{mir::r(p2), 0}, Imm{k2}}));
    b.emit(ins(Opcode::Load, {mir::r(v), MemRef{mir::r(p1), 0}}));
    bool expect_last = b.rng.chance(60);
    b.emit(ins(Opcode::MovImm, {mir::r(c), Imm{expect_last ? k2 : k1}}));
    b.emit(ins(Opcode::Cmp, {mir::r(v), mir::r(c)}));
    mir::Cond true_cond = expect_last ? mir::Cond::Eq : mir::Cond::Ne;
    return {std::move(b.code), polarize(true_cond, b.req.polarity), "alias.last_store_wins"};
}

PredicateTemplate alias_offset_view(Builder& b) {
    // The same cell addressed as [p1+0] and [p2+8] with p2 = p1 - 8.
    uint32_t cell = b.req.ctx->alloc_scratch_cell(16) + 8;
    uint8_t p1 = b.scratch();
    uint8_t p2 = b.scratch();
    uint8_t v1 = b.scratch();
    uint8_t v2 = b.scratch();
    b.emit(ins(Opcode::MovImm, {mir::r(p1), Imm{cell}}));
    b.emit(ins(Opcode::Mov, {mir::r(p2), mir::r(p1)}));
    b.emit(ins(Opcode::Sub, {mir::r(p2), Imm{8}}));
    b.emit(ins(Opcode::Store, {MemRef{mir::r(p1), 0}, Imm{b.rng.next()}}));
    b.emit(ins(Opcode::Load, {mir::r(v1), MemRef{mir::r(p1), 0}}));
    b.emit(ins(Opcode::Load, {mir::r(v2), MemRef{mir::r(p2), 8}}));
    b.emit(ins(Opcode::Cmp, {mir::r(v1), mir::r(v2)}));
    return {std::move(b.code), polarize(mir::Cond::Eq, b.req.polarity), "alias.offset_view"};
}

// ---- Environment pool ------------------------------------------------------
// Anchored to the declared table: true predicates restate a table fact,
// false ones contradict one structurally.

PredicateTemplate env_slot_equals(Builder& b) {
    uint64_t slot = b.rng.below(mir::kEnvSlots);
    uint64_t k = (*b.req.env)[slot];
    uint8_t g = b.scratch();
    uint8_t c = b.scratch();
    b.emit(ins(Opcode::GetEnv, {mir::r(g), Imm{slot}}));
    b.emit(ins(Opcode::MovImm, {mir::r(c), Imm{k}}));
    b.emit(ins(Opcode::Cmp, {mir::r(g), mir::r(c)}));
    return {std::move(b.code), mir::Cond::Eq, "env.slot_equals"};
}

PredicateTemplate env_slot_parity(Builder& b) {
    uint64_t slot = b.rng.below(mir::kEnvSlots);
    uint64_t k = (*b.req.env)[slot];
    uint8_t g = b.scratch();
    b.emit(ins(Opcode::GetEnv, {mir::r(g), Imm{slot}}));
    b.emit(ins(Opcode::And, {mir::r(g), Imm{1}}));
    b.emit(ins(Opcode::Cmp, {mir::r(g), Imm{k & 1}}));
    return {std::move(b.code), mir::Cond::Eq, "env.slot_parity"};
}

PredicateTemplate env_slot_bound(Builder& b) {
    uint64_t slot = b.rng.below(mir::kEnvSlots);
    uint64_t k = (*b.req.env)[slot];
    uint64_t bound = k + 1 + b.rng.below(0xffff); // table values stay far from 2^64
    uint8_t g = b.scratch();
    b.emit(ins(Opcode::GetEnv, {mir::r(g), Imm{slot}}));
    b.emit(ins(Opcode::Cmp, {mir::r(g), Imm{bound}}));
    return {std::move(b.code), mir::Cond::Ult, "env.slot_bound"};
}

PredicateTemplate env_slot_xor_zero(Builder& b) {
    uint64_t slot = b.rng.below(mir::kEnvSlots);
    uint64_t k = (*b.req.env)[slot];
    uint8_t g = b.scratch();
    b.emit(ins(Opcode::GetEnv, {mir::r(g), Imm{slot}}));
    b.emit(ins(Opcode::Xor, {mir::r(g), Imm{k}}));
    b.emit(ins(Opcode::Cmp, {mir::r(g), Imm{0}}));
    return {std::move(b.code), mir::Cond::Eq, "env.slot_xor_zero"};
}

PredicateTemplate env_double_read(Builder& b) {
    // The same slot read twice always agrees.
    uint64_t slot = b.rng.below(mir::kEnvSlots);
    uint8_t g1 = b.scratch();
    uint8_t g2 = b.scratch();
    b.emit(ins(Opcode::GetEnv, {mir::r(g1), Imm{slot}}));
    b.emit(ins(Opcode::GetEnv, {mir::r(g2), Imm{slot}}));
    b.emit(ins(Opcode::Cmp, {mir::r(g1), mir::r(g2)}));
    return {std::move(b.code), mir::Cond::Eq, "env.double_read"};
}

PredicateTemplate env_plus_nonzero(Builder& b) {
    // g + (-g) is zero, never J != 0.
    uint64_t slot = b.rng.below(mir::kEnvSlots);
    uint64_t j = 1 + b.rng.below(0xfffffff);
    uint8_t g = b.scratch();
    uint8_t t = b.scratch();
    b.emit(ins(Opcode::GetEnv, {mir::r(g), Imm{slot}}));
    b.emit(ins(Opcode::Mov, {mir::r(t), mir::r(g)}));
    b.emit(ins(Opcode::Neg, {mir::r(t)}));
    b.emit(ins(Opcode::Add, {mir::r(t), mir::r(g)}));
    b.emit(ins(Opcode::Cmp, {mir::r(t), Imm{j}}));
    return {std::move(b.code), mir::Cond::Eq, "env.plus_nonzero"};
}

PredicateTemplate env_complement_xor(Builder& b) {
    // g ^ ~g is all ones, never zero.
    uint64_t slot = b.rng.below(mir::kEnvSlots);
    uint8_t g = b.scratch();
    uint8_t t = b.scratch();
    b.emit(ins(Opcode::GetEnv, {mir::r(g), Imm{slot}}));
    b.emit(ins(Opcode::Mov, {mir::r(t), mir::r(g)}));
    b.emit(ins(Opcode::Not, {mir::r(t)}));
    b.emit(ins(Opcode::Xor, {mir::r(t), mir::r(g)}));
    b.emit(ins(Opcode::Cmp, {mir::r(t), Imm{0}}));
    return {std::move(b.code), mir::Cond::Eq, "env.complement_xor"};
}

PredicateTemplate env_double_read_diff(Builder& b) {
    // ~(g1 - g2) over one slot is all ones, never zero.
    uint64_t slot = b.rng.below(mir::kEnvSlots);
    uint8_t g1 = b.scratch();
    uint8_t g2 = b.scratch();
    b.emit(ins(Opcode::GetEnv, {mir::r(g1), Imm{slot}}));
    b.emit(ins(Opcode::GetEnv, {mir::r(g2), Imm{slot}}));
    b.emit(ins(Opcode::Sub, {mir::r(g1), mir::r(g2)}));
    b.emit(ins(Opcode::Not, {mir::r(g1)}));
    b.emit(ins(Opcode::Cmp, {mir::r(g1), Imm{0}}));
    return {std::move(b.code), mir::Cond::Eq, "env.double_read_diff"};
}

PredicateTemplate env_odd_vs_even(Builder& b) {
    // -(g|1) is odd and 2g is even; negation keeps parity.
    uint64_t slot = b.rng.below(mir::kEnvSlots);
    uint8_t g = b.scratch();
    uint8_t t1 = b.scratch();
    uint8_t t2 = b.scratch();
    b.emit(ins(Opcode::GetEnv, {mir::r(g), Imm{slot}}));
    b.emit(ins(Opcode::Mov, {mir::r(t1), mir::r(g)}));
    b.emit(ins(Opcode::Or, {mir::r(t1), Imm{1}}));
    b.emit(ins(Opcode::Neg, {mir::r(t1)}));
    b.emit(ins(Opcode::Mov, {mir::r(t2), mir::r(g)}));
    b.emit(ins(Opcode::Shl, {mir::r(t2), Imm{1}}));
    b.emit(ins(Opcode::Cmp, {mir::r(t1), mir::r(t2)}));
    return {std::move(b.code), mir::Cond::Eq, "env.odd_vs_even"};
}

PredicateTemplate env_scaled_parity(Builder& b) {
    // ~(2g | 1) is even, never odd.
    uint64_t slot = b.rng.below(mir::kEnvSlots);
    uint8_t g = b.scratch();
    b.emit(ins(Opcode::GetEnv, {mir::r(g), Imm{slot}}));
    b.emit(ins(Opcode::Shl, {mir::r(g), Imm{1}}));
    b.emit(ins(Opcode::Or, {mir::r(g), Imm{1}}));
    b.emit(ins(Opcode::Not, {mir::r(g)}));
    b.emit(ins(Opcode::And, {mir::r(g), Imm{1}}));
    b.emit(ins(Opcode::Cmp, {mir::r(g), Imm{1}}));
    return {std::move(b.code), mir::Cond::Eq, "env.scaled_parity"};
}

// ---- Bi-opaque float pool --------------------------------------------------

// Routes an input through a value that is exactly +0.0, so the predicate
// looks data-dependent while the float result is untouched.
void add_zero_noise(Builder& b, uint8_t target_float) {
    if (b.req.param_regs.empty()) return;
    uint8_t p = b.req.param_regs[b.rng.below(b.req.param_regs.size())];
    uint8_t t = b.scratch();
    uint8_t fz = b.scratchf();
    b.emit(ins(Opcode::Mov, {mir::r(t), mir::r(p)}));
    b.emit(ins(Opcode::And, {mir::r(t), Imm{0}}));
    b.emit(ins(Opcode::Mov, {mir::f(fz), mir::r(t)}));
    b.emit(ins(Opcode::Fadd, {mir::f(target_float), mir::f(fz)}));
}

PredicateTemplate float_decimal_product(Builder& b) {
    // 0.1 * 3.0 != 0.3 in binary floating point.
    uint8_t fa = b.scratchf();
    uint8_t fb = b.scratchf();
    uint8_t fc = b.scratchf();
    b.emit(ins(Opcode::MovImm, {mir::f(fa), Imm{dbits(0.1)}}));
    b.emit(ins(Opcode::MovImm, {mir::f(fb), Imm{dbits(3.0)}}));
    b.emit(ins(Opcode::Fmul, {mir::f(fa), mir::f(fb)}));
    add_zero_noise(b, fa);
    b.emit(ins(Opcode::MovImm, {mir::f(fc), Imm{dbits(0.3)}}));
    b.emit(ins(Opcode::Fcmp, {mir::f(fa), mir::f(fc)}));
    mir::Cond cond = b.req.polarity == Label::OpTrue ? mir::Cond::Ne : mir::Cond::Eq;
    return {std::move(b.code), cond, "float.decimal_product"};
}

PredicateTemplate float_decimal_sum(Builder& b) {
    // 0.1 + 0.2 != 0.3
    uint8_t fa = b.scratchf();
    uint8_t fb = b.scratchf();
    uint8_t fc = b.scratchf();
    b.emit(ins(Opcode::MovImm, {mir::f(fa), Imm{dbits(0.1)}}));
    b.emit(ins(Opcode::MovImm, {mir::f(fb), Imm{dbits(0.2)}}));
    b.emit(ins(Opcode::Fadd, {mir::f(fa), mir::f(fb)}));
    add_zero_noise(b, fa);
    b.emit(ins(Opcode::MovImm, {mir::f(fc), Imm{dbits(0.3)}}));
    b.emit(ins(Opcode::Fcmp, {mir::f(fa), mir::f(fc)}));
    mir::Cond cond = b.req.polarity == Label::OpTrue ? mir::Cond::Ne : mir::Cond::Eq;
    return {std::move(b.code), cond, "float.decimal_sum"};
}

PredicateTemplate float_absorption(Builder& b) {
    // 1e16 + 1 == 1e16: the unit is absorbed by the large magnitude.
    uint8_t fa = b.scratchf();
    uint8_t fb = b.scratchf();
    uint8_t fc = b.scratchf();
    b.emit(ins(Opcode::MovImm, {mir::f(fa), Imm{dbits(1e16)}}));
    b.emit(ins(Opcode::MovImm, {mir::f(fb), Imm{dbits(1.0)}}));
    b.emit(ins(Opcode::Fadd, {mir::f(fa), mir::f(fb)}));
    add_zero_noise(b, fa);
    b.emit(ins(Opcode::MovImm, {mir::f(fc), Imm{dbits(1e16)}}));
    b.emit(ins(Opcode::Fcmp, {mir::f(fa), mir::f(fc)}));
    return {std::move(b.code), polarize(mir::Cond::Eq, b.req.polarity), "float.absorption"};
}

PredicateTemplate float_dyadic_exact(Builder& b) {
    // 0.5 + 0.25 == 0.75 exactly (dyadic rationals are representable).
    uint8_t fa = b.scratchf();
    uint8_t fb = b.scratchf();
    uint8_t fc = b.scratchf();
    b.emit(ins(Opcode::MovImm, {mir::f(fa), Imm{dbits(0.5)}}));
    b.emit(ins(Opcode::MovImm, {mir::f(fb), Imm{dbits(0.25)}}));
    b.emit(ins(Opcode::Fadd, {mir::f(fa), mir::f(fb)}));
    add_zero_noise(b, fa);
    b.emit(ins(Opcode::MovImm, {mir::f(fc), Imm{dbits(0.75)}}));
    b.emit(ins(Opcode::Fcmp, {mir::f(fa), mir::f(fc)}));
    return {std::move(b.code), polarize(mir::Cond::Eq, b.req.polarity), "float.dyadic_exact"};
}

PredicateTemplate float_scaling_identity(Builder& b) {
    // 2.0 * 0.5 == 1.0 exactly.
    uint8_t fa = b.scratchf();
    uint8_t fb = b.scratchf();
    uint8_t fc = b.scratchf();
    b.emit(ins(Opcode::MovImm, {mir::f(fa), Imm{dbits(2.0)}}));
    b.emit(ins(Opcode::MovImm, {mir::f(fb), Imm{dbits(0.5)}}));
    b.emit(ins(Opcode::Fmul, {mir::f(fa), mir::f(fb)}));
    add_zero_noise(b, fa);
    b.emit(ins(Opcode::MovImm, {mir::f(fc), Imm{dbits(1.0)}}));
    b.emit(ins(Opcode::Fcmp, {mir::f(fa), mir::f(fc)}));
    return {std::move(b.code), polarize(mir::Cond::Eq, b.req.polarity), "float.scaling_identity"};
}

// ---- Bi-opaque symbolic-memory pool ----------------------------------------

PredicateTemplate symmem_uniform_table(Builder& b, int log2_slots) {
    // A table whose every slot holds the same constant, indexed by the input.
    int slots = 1 << log2_slots;
    uint32_t base = b.req.ctx->alloc_scratch_cell(8 * slots);
    uint64_t k = b.rng.next();
    uint8_t x = b.value_source();
    uint8_t idx = b.scratch();
    uint8_t p = b.scratch();
    uint8_t v = b.scratch();
    uint8_t c = b.scratch();
    b.emit(ins(Opcode::MovImm, {mir::r(p), Imm{base}}));
    for (int i = 0; i < slots; ++i)
        b.emit(ins(Opcode::Store, {MemRef{mir::r(p), 8 * i}, Imm{k}}));
    b.emit(ins(Opcode::Mov, {mir::r(idx), mir::r(x)}));
    b.emit(ins(Opcode::And, {mir::r(idx), Imm{static_cast<uint64_t>(slots - 1)}}));
    b.emit(ins(Opcode::Shl, {mir::r(idx), Imm{3}}));
    b.emit(ins(Opcode::Add, {mir::r(p), mir::r(idx)}));
    b.emit(ins(Opcode::Load, {mir::r(v), MemRef{mir::r(p), 0}}));
    b.emit(ins(Opcode::MovImm, {mir::r(c), Imm{k}}));
    b.emit(ins(Opcode::Cmp, {mir::r(v), mir::r(c)}));
    std::string id = "symmem.uniform_table" + std::to_string(slots);
    return {std::move(b.code), polarize(mir::Cond::Eq, b.req.polarity), id};
}

PredicateTemplate symmem_two_tables(Builder& b) {
    // Two tables filled with the same constant, indexed independently.
    uint32_t base1 = b.req.ctx->alloc_scratch_cell(32);
    uint32_t base2 = b.req.ctx->alloc_scratch_cell(32);
    uint64_t k = b.rng.next();
    uint8_t x = b.value_source();
    uint8_t y = b.value_source();
    uint8_t p1 = b.scratch();
    uint8_t p2 = b.scratch();
    uint8_t v1 = b.scratch();
    uint8_t v2 = b.scratch();
    b.emit(ins(Opcode::MovImm, {mir::r(p1), Imm{base1}}));
    b.emit(ins(Opcode::MovImm, {mir::r(p2), Imm{base2}}));
    for (int i = 0; i < 4; ++i) {
        b.emit(ins(Opcode::Store, {MemRef{mir::r(p1), 8 * i}, Imm{k}}));
        b.emit(ins(Opcode::Store, {MemRef{mir::r(p2), 8 * i}, Imm{k}}));
    }
    b.emit(ins(Opcode::And, {mir::r(x), Imm{3}}));
    b.emit(ins(Opcode::Shl, {mir::r(x), Imm{3}}));
    b.emit(ins(Opcode::Add, {mir::r(p1), mir::r(x)}));
    b.emit(ins(Opcode::And, {mir::r(y), Imm{3}}));
    b.emit(ins(Opcode::Shl, {mir::r(y), Imm{3}}));
    b.emit(ins(Opcode::Add, {mir::r(p2), mir::r(y)}));
    b.emit(ins(Opcode::Load, {mir::r(v1), MemRef{mir::r(p1), 0}}));
    b.emit(ins(Opcode::Load, {mir::r(v2), MemRef{mir::r(p2), 0}}));
    b.emit(ins(Opcode::Cmp, {mir::r(v1), mir::r(v2)}));
    return {std::move(b.code), polarize(mir::Cond::Eq, b.req.polarity), "symmem.two_tables"};
}

PredicateTemplate symmem_odd_table(Builder& b) {
    // Distinct values, all odd; the loaded value's parity is forced.
    uint32_t base = b.req.ctx->alloc_scratch_cell(32);
    uint8_t x = b.value_source();
    uint8_t p = b.scratch();
    uint8_t v = b.scratch();
    b.emit(ins(Opcode::MovImm, {mir::r(p), Imm{base}}));
    for (int i = 0; i < 4; ++i)
        b.emit(ins(Opcode::Store, {MemRef{mir::r(p), 8 * i}, Imm{b.rng.next() | 1}}));
    b.emit(ins(Opcode::And, {mir::r(x), Imm{3}}));
    b.emit(ins(Opcode::Shl, {mir::r(x), Imm{3}}));
    b.emit(ins(Opcode::Add, {mir::r(p), mir::r(x)}));
    b.emit(ins(Opcode::Load, {mir::r(v), MemRef{mir::r(p), 0}}));
    b.emit(ins(Opcode::And, {mir::r(v), Imm{1}}));
    b.emit(ins(Opcode::Cmp, {mir::r(v), Imm{1}}));
    return {std::move(b.code), polarize(mir::Cond::Eq, b.req.polarity), "symmem.odd_table"};
}

PredicateTemplate symmem_overwrite(Builder& b) {
    // An input-dependent store is overwritten before the load.
    uint32_t base = b.req.ctx->alloc_scratch_cell(32);
    uint64_t k = b.rng.next();
    uint8_t x = b.value_source();
    uint8_t p = b.scratch();
    uint8_t q = b.scratch();
    uint8_t v = b.scratch();
    b.emit(ins(Opcode::MovImm, {mir::r(p), Imm{base}}));
    b.emit(ins(Opcode::And, {mir::r(x), Imm{3}}));
    b.emit(ins(Opcode::Shl, {mir::r(x), Imm{3}}));
    b.emit(ins(Opcode::Mov, {mir::r(q), mir::r(p)}));
    b.emit(ins(Opcode::Add, {mir::r(q), mir::r(x)}));
    b.emit(ins(Opcode::Store, {MemRef{mir::r(q), 0}, mir::r(x)}));
    for (int i = 0; i < 4; ++i)
        b.emit(ins(Opcode::Store, {MemRef{mir::r(p), 8 * i}, Imm{k}}));
    b.emit(ins(Opcode::Load, {mir::r(v), MemRef{mir::r(q), 0}}));
    b.emit(ins(Opcode::Cmp, {mir::r(v), Imm{k}}));
    return {std::move(b.code), polarize(mir::Cond::Eq, b.req.polarity), "symmem.overwrite"};
}

} // namespace

int pool_size(OpaqueKind kind) {
    switch (kind) {
        case OpaqueKind::Arithmetic: return 10;
        case OpaqueKind::MBA: return 10;
        case OpaqueKind::Alias: return 5;
        case OpaqueKind::Environment: return 10;
        case OpaqueKind::BiOpaqueFloat: return 5;
        case OpaqueKind::BiOpaqueSymMem: return 5;
    }
    return 0;
}

PredicateTemplate build_template(OpaqueKind kind, const TemplateRequest& req, Rng& rng) {
    Builder b{req, rng, {}, 0, 0};
    bool want_true = req.polarity == Label::OpTrue;
    int pick = static_cast<int>(rng.below(5));
    switch (kind) {
        case OpaqueKind::Arithmetic:
            if (want_true) switch (pick) {
                case 0: return arith_parity_product(b);
                case 1: return arith_square_mod4(b);
                case 2: return arith_shifted_parity(b);
                case 3: return arith_odd_or(b);
                default: return arith_double_even(b);
            }
            switch (pick) {
                case 0: return arith_pell_like(b);
                case 1: return arith_odd_vs_even(b);
                case 2: return arith_square_minus_two(b);
                case 3: return arith_odd_zero(b);
                default: return arith_successor(b);
            }
        case OpaqueKind::MBA:
            if (want_true) switch (pick) {
                case 0: return mba_add_xor_and(b);
                case 1: return mba_xor_or_and(b);
                case 2: return mba_sub_xor_nand(b);
                case 3: return mba_or_disjoint(b);
                default: return mba_add_or_and(b);
            }
            switch (pick) {
                case 0: return mba_or_below_and(b);
                case 1: return mba_x_below_and(b);
                case 2: return mba_or_below_x(b);
                case 3: return mba_xor_off_one(b);
                default: return mba_sum_off_one(b);
            }
        case OpaqueKind::Environment:
            if (want_true) switch (pick) {
                case 0: return env_slot_equals(b);
                case 1: return env_slot_parity(b);
                case 2: return env_slot_bound(b);
                case 3: return env_slot_xor_zero(b);
                default: return env_double_read(b);
            }
            switch (pick) {
                case 0: return env_plus_nonzero(b);
                case 1: return env_complement_xor(b);
                case 2: return env_double_read_diff(b);
                case 3: return env_odd_vs_even(b);
                default: return env_scaled_parity(b);
            }
        case OpaqueKind::Alias:
            switch (pick) {
                case 0: return alias_same_cell(b);
                case 1: return alias_disjoint_cells(b);
                case 2: return alias_obscured_copy(b);
                case 3: return alias_last_store_wins(b);
                default: return alias_offset_view(b);
            }
        case OpaqueKind::BiOpaqueFloat:
            switch (pick) {
                case 0: return float_decimal_product(b);
                case 1: return float_decimal_sum(b);
                case 2: return float_absorption(b);
                case 3: return float_dyadic_exact(b);
                default: return float_scaling_identity(b);
            }
        case OpaqueKind::BiOpaqueSymMem:
            switch (pick) {
                case 0: return symmem_uniform_table(b, 2);
                case 1: return symmem_uniform_table(b, 3);
                case 2: return symmem_two_tables(b);
                case 3: return symmem_odd_table(b);
                default: return symmem_overwrite(b);
            }
    }
    throw TransformError("template exhaustion: unknown kind");
}

} // namespace oppred::obf::detail
