#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "oppred/mir/interp.hpp"
#include "oppred/mir/ir.hpp"
#include "oppred/rawdata/rawdata.hpp"
#include "oppred/rng.hpp"

namespace oppred::obf {

using rawdata::Label;

enum class OpaqueKind { Arithmetic, MBA, Alias, Environment, BiOpaqueFloat, BiOpaqueSymMem };

const char* kind_name(OpaqueKind k);
bool parse_kind(const std::string& s, OpaqueKind& out);

struct AddOpaque {
    OpaqueKind kind;
    int count = 1;
    bool operator==(const AddOpaque&) const = default;
};
struct EncodeArithmetic { bool operator==(const EncodeArithmetic&) const = default; };
struct EncodeLiterals { bool operator==(const EncodeLiterals&) const = default; };
struct EncodeData { bool operator==(const EncodeData&) const = default; };
struct Flatten { bool operator==(const Flatten&) const = default; };

using Transform = std::variant<AddOpaque, EncodeArithmetic, EncodeLiterals, EncodeData, Flatten>;

// Ordered transform list; order is significant and preserved.
struct Recipe {
    std::vector<Transform> transforms;
    bool operator==(const Recipe&) const = default;
};

Recipe parse_recipe(const std::string& text); // throws std::invalid_argument
std::string recipe_to_string(const Recipe& r);

struct LogEntry {
    Label label = Label::Normal;
    std::optional<OpaqueKind> kind;
    std::string template_id;
    std::string recipe;
};

// Ground truth for every CondJump present after all transforms.
using InjectionLog = std::map<mir::PredicateId, LogEntry>;

struct TransformError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Carries allocation state across the transforms of one recipe application.
struct ObfContext {
    std::array<bool, mir::kIntRegs> live_int{};    // regs that hold live values across blocks
    std::array<bool, mir::kFloatRegs> live_float{};
    std::array<bool, mir::kIntRegs> reserved_int{}; // flatten state registers
    uint32_t next_tag = 1;
    uint32_t next_scratch = mir::kScratchBase; // bump allocator for template cells
    int next_label = 0;
    mir::Env env = mir::default_env();
    std::vector<std::vector<uint64_t>> probe_inputs; // all within the 8-bit sweep domain
    std::map<uint32_t, LogEntry> tagged; // tag -> ground truth

    static ObfContext for_function(const mir::Program& p, const std::string& fn);
    std::string fresh_label();
    uint32_t alloc_scratch_cell(uint32_t bytes);
};

// Deterministic probe vectors inside {0..255}^arity; used for reachability
// and for light polarity checks during injection.
std::vector<std::vector<uint64_t>> make_probe_inputs(int arity);

// Injects one opaque predicate of the requested kind and polarity at a
// probe-reachable block of `fn`. The dead edge leads to a fresh bogus block.
// Throws TransformError on template exhaustion or failed verification.
mir::PredicateId inject_opaque(mir::Program& p, const std::string& fn, OpaqueKind kind,
                               Label polarity, Rng& rng, ObfContext& ctx);

void encode_arithmetic(mir::Program& p, const std::string& fn, Rng& rng, ObfContext& ctx);
void encode_literals(mir::Program& p, const std::string& fn, Rng& rng, ObfContext& ctx);
void encode_data(mir::Program& p, const std::string& fn, Rng& rng, ObfContext& ctx);
void flatten(mir::Program& p, const std::string& fn, Rng& rng, ObfContext& ctx);

struct RecipeResult {
    mir::Program program;
    InjectionLog log;
};

// Applies the transforms in order to `fn` inside a copy of `p`, verifies
// behavior preservation on 32 random inputs, and derives the complete
// injection log for every post-transform CondJump of the program.
RecipeResult apply_recipe(const mir::Program& p, const std::string& fn, const Recipe& recipe,
                          Rng& rng);

} // namespace oppred::obf
