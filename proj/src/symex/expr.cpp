#include "oppred/symex/expr.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace oppred::symex {

namespace {

uint64_t mask_to(uint64_t v, int size) {
    if (size >= 64) return v;
    return v & ((1ULL << size) - 1);
}

double as_double(uint64_t bits) { return std::bit_cast<double>(bits); }
uint64_t as_bits(double d) { return std::bit_cast<uint64_t>(d); }

} // namespace

struct ExprFactory {
    static std::shared_ptr<Expr> make() { return std::shared_ptr<Expr>(new Expr()); }
};

ExprRef Expr::id(std::string name, int size) {
    auto e = ExprFactory::make();
    e->kind = ExprKind::Id;
    e->name = std::move(name);
    e->size_bits = size;
    return e;
}

ExprRef Expr::integer(uint64_t value, int size) {
    auto e = ExprFactory::make();
    e->kind = ExprKind::Int;
    e->value = mask_to(value, size);
    e->size_bits = size;
    return e;
}

ExprRef Expr::mem(ExprRef addr, int size) {
    auto e = ExprFactory::make();
    e->kind = ExprKind::Mem;
    e->address = std::move(addr);
    e->size_bits = size;
    return e;
}

ExprRef Expr::mkop(std::string op, std::vector<ExprRef> args, int size) {
    auto e = ExprFactory::make();
    e->kind = ExprKind::Op;
    e->op = std::move(op);
    e->args = std::move(args);
    e->size_bits = size;
    return e;
}

ExprRef Expr::cond_expr(ExprRef c, ExprRef t, ExprRef e2) {
    auto e = ExprFactory::make();
    e->kind = ExprKind::Cond;
    e->size_bits = t->size_bits;
    e->cond = std::move(c);
    e->then_e = std::move(t);
    e->else_e = std::move(e2);
    return e;
}

bool equal(const ExprRef& a, const ExprRef& b) {
    if (a.get() == b.get()) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind || a->size_bits != b->size_bits) return false;
    switch (a->kind) {
        case ExprKind::Id: return a->name == b->name;
        case ExprKind::Int: return a->value == b->value;
        case ExprKind::Mem: return equal(a->address, b->address);
        case ExprKind::Op: {
            if (a->op != b->op || a->args.size() != b->args.size()) return false;
            for (size_t i = 0; i < a->args.size(); ++i)
                if (!equal(a->args[i], b->args[i])) return false;
            return true;
        }
        case ExprKind::Cond:
            return equal(a->cond, b->cond) && equal(a->then_e, b->then_e) &&
                   equal(a->else_e, b->else_e);
    }
    return false;
}

uint64_t hash(const ExprRef& e) {
    if (!e) return 0;
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ULL;
    };
    mix(static_cast<uint64_t>(e->kind));
    mix(static_cast<uint64_t>(e->size_bits));
    switch (e->kind) {
        case ExprKind::Id:
            for (char c : e->name) mix(static_cast<uint64_t>(c));
            break;
        case ExprKind::Int: mix(e->value); break;
        case ExprKind::Mem: mix(hash(e->address)); break;
        case ExprKind::Op:
            for (char c : e->op) mix(static_cast<uint64_t>(c));
            for (const auto& a : e->args) mix(hash(a));
            break;
        case ExprKind::Cond:
            mix(hash(e->cond));
            mix(hash(e->then_e));
            mix(hash(e->else_e));
            break;
    }
    return h;
}

uint64_t eval_op(const std::string& op, const std::vector<uint64_t>& v, int size) {
    auto m = [&](uint64_t x) { return mask_to(x, size); };
    if (op == ops::Add) return m(v[0] + v[1]);
    if (op == ops::Sub) return m(v[0] - v[1]);
    if (op == ops::Mul) return m(v[0] * v[1]);
    if (op == ops::Udiv) return v[1] == 0 ? 0 : m(v[0] / v[1]);
    if (op == ops::Urem) return v[1] == 0 ? 0 : m(v[0] % v[1]);
    if (op == ops::And) return m(v[0] & v[1]);
    if (op == ops::Or) return m(v[0] | v[1]);
    if (op == ops::Xor) return m(v[0] ^ v[1]);
    if (op == ops::Shl) return m(v[0] << (v[1] & 63));
    if (op == ops::Shr) return m(v[0] >> (v[1] & 63));
    if (op == ops::Not) return m(~v[0]);
    if (op == ops::Neg) return m(~v[0] + 1);
    if (op == ops::Fadd) return as_bits(as_double(v[0]) + as_double(v[1]));
    if (op == ops::Fmul) return as_bits(as_double(v[0]) * as_double(v[1]));
    if (op == ops::CmpEq) return v[0] == v[1] ? 1 : 0;
    if (op == ops::CmpUlt) return v[0] < v[1] ? 1 : 0;
    if (op == ops::CmpSign) return (v[0] - v[1]) >> 63;
    if (op == ops::CmpSovf) return ((v[0] ^ v[1]) & (v[0] ^ (v[0] - v[1]))) >> 63;
    if (op == ops::FcmpEq) {
        double a = as_double(v[0]), b = as_double(v[1]);
        return (std::isnan(a) || std::isnan(b)) ? 1 : (a == b ? 1 : 0);
    }
    if (op == ops::FcmpLt) {
        double a = as_double(v[0]), b = as_double(v[1]);
        return (std::isnan(a) || std::isnan(b)) ? 1 : (a < b ? 1 : 0);
    }
    throw std::runtime_error("eval_op: unknown operator " + op);
}

namespace {

bool is_compare(const std::string& op) {
    return op == ops::CmpEq || op == ops::CmpUlt || op == ops::CmpSign || op == ops::CmpSovf;
}

} // namespace

ExprRef fold_op(const std::string& op, std::vector<ExprRef> args, int size) {
    bool all_int = true;
    for (const auto& a : args)
        if (!a->is_int()) { all_int = false; break; }
    if (all_int && op != ops::GetEnv) {
        std::vector<uint64_t> vals;
        vals.reserve(args.size());
        for (const auto& a : args) vals.push_back(a->value);
        return Expr::integer(eval_op(op, vals, size), size);
    }
    // cmp x,x resolves without a valuation: x-x is zero for every x.
    if (is_compare(op) && args.size() == 2 && equal(args[0], args[1]))
        return Expr::integer(op == ops::CmpEq ? 1 : 0, size);
    return Expr::mkop(op, std::move(args), size);
}

ExprRef fold_cond(ExprRef c, ExprRef t, ExprRef e) {
    if (c->is_int()) return c->value != 0 ? t : e;
    return Expr::cond_expr(std::move(c), std::move(t), std::move(e));
}

} // namespace oppred::symex
