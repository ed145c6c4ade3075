#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace oppred::symex {

// Symbolic expression node. Immutable; shared subtrees are fine. Structural
// equality is the only equality.
class Expr;
using ExprRef = std::shared_ptr<const Expr>;

enum class ExprKind { Id, Int, Mem, Op, Cond };

// Operator names are the rendered tokens; all alphanumeric so they survive
// normalization and tokenization as themselves.
namespace ops {
inline constexpr const char* Add = "+";
inline constexpr const char* Sub = "-";
inline constexpr const char* Mul = "*";
inline constexpr const char* Udiv = "udiv";
inline constexpr const char* Urem = "umod";
inline constexpr const char* And = "&";
inline constexpr const char* Or = "|";
inline constexpr const char* Xor = "^";
inline constexpr const char* Shl = "<<";
inline constexpr const char* Shr = ">>";
inline constexpr const char* Not = "~";
inline constexpr const char* Neg = "neg";
inline constexpr const char* Fadd = "fadd";
inline constexpr const char* Fmul = "fmul";
inline constexpr const char* GetEnv = "getenv";
inline constexpr const char* CmpEq = "cmpeq";    // ZF of cmp a,b
inline constexpr const char* CmpUlt = "cmpult";  // CF
inline constexpr const char* CmpSign = "cmpsign"; // SF
inline constexpr const char* CmpSovf = "cmpsovf"; // OF
inline constexpr const char* FcmpEq = "fcmpeq";
inline constexpr const char* FcmpLt = "fcmplt";
} // namespace ops

class Expr {
public:
    ExprKind kind;
    int size_bits;

    // Id
    std::string name;
    // Int
    uint64_t value = 0;
    // Mem
    ExprRef address;
    // Op
    std::string op;
    std::vector<ExprRef> args;
    // Cond
    ExprRef cond, then_e, else_e;

    static ExprRef id(std::string name, int size);
    static ExprRef integer(uint64_t value, int size); // value reduced mod 2^size
    static ExprRef mem(ExprRef addr, int size);
    static ExprRef mkop(std::string op, std::vector<ExprRef> args, int size);
    static ExprRef cond_expr(ExprRef c, ExprRef t, ExprRef e);

    bool is_int() const { return kind == ExprKind::Int; }

private:
    Expr() : kind(ExprKind::Int), size_bits(64) {}
    friend struct ExprFactory;
};

bool equal(const ExprRef& a, const ExprRef& b);
uint64_t hash(const ExprRef& e);

// Folds an Op/Cond whose operands are all Int (and the compare family when
// both operands are structurally equal). Non-foldable expressions are
// returned as built.
ExprRef fold_op(const std::string& op, std::vector<ExprRef> args, int size);
ExprRef fold_cond(ExprRef c, ExprRef t, ExprRef e);

// Semantics of one operator over concrete values; shared by folding and by
// test-side state evaluation.
uint64_t eval_op(const std::string& op, const std::vector<uint64_t>& vals, int size);

} // namespace oppred::symex
