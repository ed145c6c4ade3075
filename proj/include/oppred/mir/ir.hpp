#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace oppred::mir {

// Flat memory layout shared by the interpreter, the program generator and
// the obfuscator. The output region carries the observable store trace; the
// data region holds generator-owned variables; the scratch region holds
// obfuscation tables and bogus stores. Keeping them disjoint is what makes
// "behavior preserved" checkable.
inline constexpr uint32_t kMemBytes = 64 * 1024;
inline constexpr uint32_t kDataBase = 0xD000;
inline constexpr uint32_t kScratchBase = 0xE000;
inline constexpr uint32_t kOutputBase = 0xF000;

inline constexpr int kIntRegs = 16;
inline constexpr int kFloatRegs = 8;
inline constexpr int kEnvSlots = 16;

using Env = std::array<uint64_t, kEnvSlots>;

// Built-in environment table modeling constants lifted from the host
// (library addresses, version words, and similar). Analyses may supply a
// different table; corpora record the one they were generated under.
inline Env default_env() {
    return Env{0x00007f21aa400000ULL, 0x0000000000000022ULL, 0x00005a82f1c03e10ULL,
               0x000000000001f4c3ULL, 0x00007ffd4c2a9b60ULL, 0x0000000000000006ULL,
               0x00000000c0681fd2ULL, 0x0000000000401000ULL, 0x000000005f3759dfULL,
               0x0000000000000e4bULL, 0x00007f21aa61c490ULL, 0x0000000000000190ULL,
               0x00000000075bcd15ULL, 0x000000000000002aULL, 0x0000babecafe4000ULL,
               0x0000000000010000ULL};
}

struct Reg {
    uint8_t index = 0;
    bool is_float = false;

    bool operator==(const Reg&) const = default;
};

inline Reg r(uint8_t i) { return Reg{i, false}; }
inline Reg f(uint8_t i) { return Reg{i, true}; }

// Address operand: [base + disp], base is always an integer register.
struct MemRef {
    Reg base;
    int64_t disp = 0;

    bool operator==(const MemRef&) const = default;
};

struct Imm {
    uint64_t value = 0;

    bool operator==(const Imm&) const = default;
};

using Operand = std::variant<Reg, Imm, MemRef>;

enum class Opcode {
    Add, Sub, Mul, Udiv, Urem, And, Or, Xor, Shl, Shr,
    Not, Neg, Mov, MovImm, Cmp,
    Load, Store,
    Fadd, Fmul, Fcmp,
    GetEnv,
};

const char* opcode_name(Opcode op);

// Instructions are two-address: `add r0, r1` is r0 <- r0 + r1. Cmp and Fcmp
// are the only flag writers.
struct Instruction {
    Opcode op;
    std::vector<Operand> operands;

    bool operator==(const Instruction&) const = default;
};

enum class Cond { Eq, Ne, Ult, Slt, Uge, Sge };

const char* cond_name(Cond c);
Cond cond_invert(Cond c);

struct Jump {
    std::string target;
    bool operator==(const Jump&) const = default;
};

struct CondJump {
    Cond cond;
    std::string taken;
    std::string fallthrough;
    // Transform-internal marker used to carry injection identity through
    // later rewrites. Not part of the textual format and ignored by
    // structural equality.
    std::optional<uint32_t> tag;

    bool operator==(const CondJump& o) const {
        return cond == o.cond && taken == o.taken && fallthrough == o.fallthrough;
    }
};

struct Ret {
    Reg reg;
    bool operator==(const Ret&) const = default;
};

struct Call {
    std::string callee;
    std::string then;
    bool operator==(const Call&) const = default;
};

using Terminator = std::variant<Jump, CondJump, Ret, Call>;

struct BasicBlock {
    std::string label;
    std::vector<Instruction> instructions;
    Terminator terminator = Ret{r(0)};

    bool operator==(const BasicBlock&) const = default;
};

struct Function {
    std::string name;
    int arity = 0; // params arrive in r0..r(arity-1)
    std::string entry_block;
    std::vector<BasicBlock> blocks;

    bool operator==(const Function&) const = default;

    const BasicBlock* find_block(const std::string& label) const;
    BasicBlock* find_block(const std::string& label);
    int block_index(const std::string& label) const; // -1 if absent
};

struct Program {
    std::vector<Function> functions;
    uint64_t base_address = 0x400000;
    std::string entry_function = "main";

    bool operator==(const Program&) const = default;

    const Function* find_function(const std::string& name) const;
    Function* find_function(const std::string& name);
};

// Identifies one CondJump site: the n-th conditional branch of a function,
// counting in block order. Stable across emit/parse round trips.
struct PredicateId {
    std::string function;
    std::string block;
    int ordinal = 0;

    bool operator==(const PredicateId&) const = default;
    bool operator<(const PredicateId& o) const {
        if (function != o.function) return function < o.function;
        if (ordinal != o.ordinal) return ordinal < o.ordinal;
        return block < o.block;
    }
    std::string str() const;
};

std::vector<PredicateId> enumerate_predicates(const Function& f);
std::vector<PredicateId> enumerate_predicates(const Program& p);

// Structural validation of the type invariants (unique names/labels, entry
// existence, resolvable branch targets, operand shapes). Returns a list of
// human-readable problems; empty means valid.
std::vector<std::string> validate(const Program& p);

// Concrete code address of each block, derived from base_address and the
// declaration order (4 bytes per instruction and per terminator). Only used
// when rendering branch targets in symbolic states.
struct AddressMap {
    // function name -> block label -> address
    uint64_t block_address(const Program& p, const std::string& fn,
                           const std::string& label) const;
};
uint64_t block_address(const Program& p, const std::string& fn, const std::string& label);

// Registers referenced anywhere in the function body (reads or writes).
// Used by transforms to pick scratch registers that cannot clobber live
// state.
std::array<bool, kIntRegs> int_regs_used(const Function& f);
std::array<bool, kFloatRegs> float_regs_used(const Function& f);

} // namespace oppred::mir
