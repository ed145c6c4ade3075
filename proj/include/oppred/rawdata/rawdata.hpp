#pragma once

#include <string>
#include <vector>

#include "oppred/mir/ir.hpp"
#include "oppred/symex/symex.hpp"

namespace oppred::rawdata {

enum class SetKind { Set1, Set2, Set3 };

const char* set_name(SetKind k);
bool parse_set_kind(const std::string& s, SetKind& out);

enum class Label { Normal, OpTrue, OpFalse };

const char* label_name(Label l);
bool parse_label(const std::string& s, Label& out);

struct DocMeta {
    std::string program;
    std::string function;
    mir::PredicateId predicate;
    int path_index = 0;
    SetKind set = SetKind::Set3;
};

struct RawDocument {
    std::vector<std::string> lines;
    DocMeta meta;

    std::string joined() const;
};

struct Sample {
    RawDocument document;
    Label label = Label::Normal;
    std::string recipe;
};

// Renders one symbolic state in the constructor grammar
// (ExprId/ExprInt/ExprMem/ExprOp/ExprCond with size annotations), one
// assignment per line, branch-target line last. Pre-normalization text.
RawDocument render_state(const mir::Program& p, const symex::SymbolicState& state,
                         SetKind kind, DocMeta meta);

// Rendering of a single expression; exposed for tests.
std::string render_expr(const symex::ExprRef& e);

// Replaces quoted identifiers by id1, id2, ... and value constants by v1,
// v2, ... in first-occurrence order (per document), keeps size annotations,
// and rewrites non-alphanumeric operator spellings to word tokens.
// Idempotent.
RawDocument normalize(const RawDocument& doc);
std::string normalize_line(const std::string& line, std::vector<std::string>& id_order,
                           std::vector<uint64_t>& value_order);

// Compact infix rendering of the same states; an alternative raw-data
// language kept behind the same interface for comparison runs.
std::string render_expr_infix(const symex::ExprRef& e);

enum class SimilarityTask { Detection, Deobfuscation };

// Percentage of samples whose normalized document text coincides with that
// of at least one sample carrying a different label under the task's
// projection. Detection: NORMAL vs OPAQUE; Deobfuscation: OP_TRUE vs
// OP_FALSE over opaque samples only.
double cross_label_similarity(const std::vector<Sample>& samples, SimilarityTask task);

} // namespace oppred::rawdata
