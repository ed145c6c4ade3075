#pragma once

#include "oppred/obf/obfuscate.hpp"

namespace oppred::obf::detail {

// One instantiated opaque-predicate computation: straight-line instructions
// ending in a cmp/fcmp, plus the branch condition whose runtime truth is
// constant with the requested polarity (true forever for OP_TRUE, false
// forever for OP_FALSE).
struct PredicateTemplate {
    std::vector<mir::Instruction> code;
    mir::Cond cond;
    std::string id;
};

struct TemplateRequest {
    Label polarity = Label::OpTrue;
    std::vector<uint8_t> scratch_int;   // usable int regs, write-before-read
    std::vector<uint8_t> scratch_float; // usable float regs
    std::vector<uint8_t> param_regs;    // the function's input registers
    const mir::Env* env = nullptr;
    ObfContext* ctx = nullptr; // for scratch-cell allocation
};

// Builds a randomized instance from the kind's pool. Throws TransformError
// when the request cannot be satisfied (scratch exhaustion).
PredicateTemplate build_template(OpaqueKind kind, const TemplateRequest& req, Rng& rng);

// Number of distinct templates per kind, for tests.
int pool_size(OpaqueKind kind);

} // namespace oppred::obf::detail
