#include "oppred/rawdata/rawdata.hpp"

#include <cctype>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace oppred::rawdata {

using symex::Expr;
using symex::ExprKind;
using symex::ExprRef;

const char* set_name(SetKind k) {
    switch (k) {
        case SetKind::Set1: return "set1";
        case SetKind::Set2: return "set2";
        case SetKind::Set3: return "set3";
    }
    return "?";
}

bool parse_set_kind(const std::string& s, SetKind& out) {
    if (s == "set1" || s == "1") out = SetKind::Set1;
    else if (s == "set2" || s == "2") out = SetKind::Set2;
    else if (s == "set3" || s == "3") out = SetKind::Set3;
    else return false;
    return true;
}

const char* label_name(Label l) {
    switch (l) {
        case Label::Normal: return "NORMAL";
        case Label::OpTrue: return "OP_TRUE";
        case Label::OpFalse: return "OP_FALSE";
    }
    return "?";
}

bool parse_label(const std::string& s, Label& out) {
    if (s == "NORMAL") out = Label::Normal;
    else if (s == "OP_TRUE") out = Label::OpTrue;
    else if (s == "OP_FALSE") out = Label::OpFalse;
    else return false;
    return true;
}

std::string RawDocument::joined() const {
    std::string out;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (i) out += '\n';
        out += lines[i];
    }
    return out;
}

namespace {

std::string hex_int(uint64_t v) {
    std::ostringstream os;
    os << "0x" << std::hex << v;
    return os.str();
}

} // namespace

std::string render_expr(const ExprRef& e) {
    switch (e->kind) {
        case ExprKind::Id:
            return "ExprId('" + e->name + "', size=" + std::to_string(e->size_bits) + ")";
        case ExprKind::Int:
            return "ExprInt(" + hex_int(e->value) + ", " + std::to_string(e->size_bits) + ")";
        case ExprKind::Mem:
            return "ExprMem(" + render_expr(e->address) +
                   ", size=" + std::to_string(e->size_bits) + ")";
        case ExprKind::Op: {
            std::string out = "ExprOp('" + e->op + "'";
            for (const auto& a : e->args) out += ", " + render_expr(a);
            out += ")";
            return out;
        }
        case ExprKind::Cond:
            return "ExprCond(" + render_expr(e->cond) + ", " + render_expr(e->then_e) + ", " +
                   render_expr(e->else_e) + ")";
    }
    return "?";
}

std::string render_expr_infix(const ExprRef& e) {
    switch (e->kind) {
        case ExprKind::Id: return e->name;
        case ExprKind::Int: return hex_int(e->value);
        case ExprKind::Mem: return "@[" + render_expr_infix(e->address) + "]";
        case ExprKind::Op: {
            if (e->args.size() == 1) return e->op + "(" + render_expr_infix(e->args[0]) + ")";
            std::string out = "(";
            for (size_t i = 0; i < e->args.size(); ++i) {
                if (i) out += " " + e->op + " ";
                out += render_expr_infix(e->args[i]);
            }
            return out + ")";
        }
        case ExprKind::Cond:
            return "(" + render_expr_infix(e->cond) + " ? " + render_expr_infix(e->then_e) +
                   " : " + render_expr_infix(e->else_e) + ")";
    }
    return "?";
}

namespace {

std::string render_assignment(const symex::Assignment& a) {
    return render_expr(a.dest) + " = " + render_expr(a.value);
}

bool is_flag_dest(const ExprRef& dest) {
    if (dest->kind != ExprKind::Id) return false;
    const std::string& n = dest->name;
    return n.rfind("ZF_", 0) == 0 || n.rfind("SF_", 0) == 0 || n.rfind("CF_", 0) == 0 ||
           n.rfind("OF_", 0) == 0;
}

std::string flag_prefix(const ExprRef& dest) { return dest->name.substr(0, 2); }

// Location key for final-state rendering: registers and flags by their bare
// name (version suffix dropped), memory by the rendered address.
std::string location_key(const ExprRef& dest) {
    if (dest->kind == ExprKind::Id) {
        const std::string& n = dest->name;
        size_t us = n.rfind('_');
        return us == std::string::npos ? n : n.substr(0, us);
    }
    return "@" + render_expr(dest->address);
}

} // namespace

RawDocument render_state(const mir::Program& p, const symex::SymbolicState& state,
                         SetKind kind, DocMeta meta) {
    (void)p;
    meta.set = kind;
    RawDocument doc;
    doc.meta = std::move(meta);

    std::string irdst_line =
        "ExprId('IRDst', size=64) = " + render_expr(state.predicate_dst);

    if (kind == SetKind::Set3) {
        // The state of the path: the final expression of every modified
        // location, in the order of those final writes.
        std::map<std::string, size_t> latest;
        for (size_t i = 0; i < state.assignments.size(); ++i)
            latest[location_key(state.assignments[i].dest)] = i;
        std::vector<size_t> picks;
        picks.reserve(latest.size());
        for (const auto& [key, idx] : latest) picks.push_back(idx);
        std::sort(picks.begin(), picks.end());
        for (size_t idx : picks) doc.lines.push_back(render_assignment(state.assignments[idx]));
    } else if (kind == SetKind::Set2) {
        // Latest assignment of each of the four flags, in assignment order.
        std::map<std::string, int> latest;
        for (size_t i = 0; i < state.assignments.size(); ++i)
            if (is_flag_dest(state.assignments[i].dest))
                latest[flag_prefix(state.assignments[i].dest)] = static_cast<int>(i);
        std::vector<int> picks;
        for (const auto& [flag, idx] : latest) picks.push_back(idx);
        std::sort(picks.begin(), picks.end());
        for (int idx : picks) doc.lines.push_back(render_assignment(state.assignments[idx]));
    }
    doc.lines.push_back(std::move(irdst_line));
    return doc;
}

namespace {

// Operator spellings that normalization rewrites to alphanumeric words.
// Quoted tokens matching this table are operators, not identifiers.
const std::unordered_map<std::string, std::string>& op_words() {
    static const std::unordered_map<std::string, std::string> words = {
        {"+", "add"}, {"-", "sub"}, {"*", "mul"}, {"udiv", "udiv"}, {"umod", "umod"},
        {"&", "and"}, {"|", "or"}, {"^", "xor"}, {"<<", "shl"}, {">>", "shr"},
        {"~", "not"}, {"neg", "neg"}, {"fadd", "fadd"}, {"fmul", "fmul"},
        {"getenv", "getenv"}, {"cmpeq", "cmpeq"}, {"cmpult", "cmpult"},
        {"cmpsign", "cmpsign"}, {"cmpsovf", "cmpsovf"}, {"fcmpeq", "fcmpeq"},
        {"fcmplt", "fcmplt"},
    };
    return words;
}

bool all_digits(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

bool parse_number(const std::string& s, uint64_t& out) {
    if (s.empty()) return false;
    try {
        size_t pos = 0;
        if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
            out = std::stoull(s.substr(2), &pos, 16);
            pos += 2;
        } else if (all_digits(s)) {
            out = std::stoull(s, &pos, 10);
        } else {
            return false;
        }
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

std::string sym_for_id(const std::string& name, std::vector<std::string>& order) {
    for (size_t i = 0; i < order.size(); ++i)
        if (order[i] == name) return "id" + std::to_string(i + 1);
    order.push_back(name);
    return "id" + std::to_string(order.size());
}

std::string sym_for_value(uint64_t v, std::vector<uint64_t>& order) {
    for (size_t i = 0; i < order.size(); ++i)
        if (order[i] == v) return "v" + std::to_string(i + 1);
    order.push_back(v);
    return "v" + std::to_string(order.size());
}

} // namespace

std::string normalize_line(const std::string& line, std::vector<std::string>& id_order,
                           std::vector<uint64_t>& value_order) {
    std::string out;
    out.reserve(line.size());
    size_t i = 0;
    // Constructor-argument tracking: after "ExprInt(" the first argument is a
    // value; every other numeral in the grammar is a size and is kept.
    std::vector<int> ctor_stack; // 1 when inside ExprInt's first argument
    auto in_int_value = [&]() { return !ctor_stack.empty() && ctor_stack.back() == 1; };

    while (i < line.size()) {
        char c = line[i];
        if (c == '\'') {
            size_t end = line.find('\'', i + 1);
            if (end == std::string::npos) { out += c; ++i; continue; }
            std::string token = line.substr(i + 1, end - i - 1);
            auto it = op_words().find(token);
            if (it != op_words().end()) out += it->second;
            else out += sym_for_id(token, id_order);
            i = end + 1;
            continue;
        }
        if (std::isalnum(static_cast<unsigned char>(c))) {
            size_t start = i;
            while (i < line.size() &&
                   (std::isalnum(static_cast<unsigned char>(line[i])) || line[i] == '_'))
                ++i;
            std::string word = line.substr(start, i - start);
            bool followed_by_paren = i < line.size() && line[i] == '(';
            if (followed_by_paren) {
                out += word;
                ctor_stack.push_back(word == "ExprInt" ? 1 : 0);
                out += '(';
                ++i;
                continue;
            }
            uint64_t v;
            if (word.rfind("size", 0) == 0 && i < line.size() && line[i] == '=') {
                out += word; // size annotations stay verbatim
            } else if (parse_number(word, v)) {
                if (in_int_value()) out += sym_for_value(v, value_order);
                else out += word; // a size argument
            } else {
                // Unquoted word: already-normalized symbol or structural
                // token; kept as-is (underscores dropped for alnum purity).
                for (char wc : word)
                    if (wc != '_') out += wc;
            }
            continue;
        }
        if (c == '(') {
            ctor_stack.push_back(0);
            out += c;
            ++i;
            continue;
        }
        if (c == ')') {
            if (!ctor_stack.empty()) ctor_stack.pop_back();
            out += c;
            ++i;
            continue;
        }
        if (c == ',') {
            if (!ctor_stack.empty() && ctor_stack.back() == 1) ctor_stack.back() = 2;
            out += c;
            ++i;
            continue;
        }
        if (c == ' ' || c == '=') {
            out += c;
            ++i;
            continue;
        }
        // Any other punctuation is dropped; the kept set is alphanumerics,
        // parentheses, commas, equals and spaces.
        ++i;
    }
    return out;
}

RawDocument normalize(const RawDocument& doc) {
    RawDocument out;
    out.meta = doc.meta;
    std::vector<std::string> id_order;
    std::vector<uint64_t> value_order;
    out.lines.reserve(doc.lines.size());
    for (const auto& line : doc.lines)
        out.lines.push_back(normalize_line(line, id_order, value_order));
    return out;
}

double cross_label_similarity(const std::vector<Sample>& samples, SimilarityTask task) {
    // Projected label per sample; -1 excludes the sample from the task.
    auto project = [&](Label l) -> int {
        if (task == SimilarityTask::Detection) return l == Label::Normal ? 0 : 1;
        if (l == Label::OpTrue) return 0;
        if (l == Label::OpFalse) return 1;
        return -1;
    };

    std::unordered_map<std::string, unsigned> label_sets;
    std::vector<std::pair<const std::string*, int>> population;
    std::vector<std::string> texts;
    texts.reserve(samples.size());
    for (const auto& s : samples) {
        int lbl = project(s.label);
        if (lbl < 0) continue;
        texts.push_back(s.document.joined());
    }
    size_t t = 0;
    for (const auto& s : samples) {
        int lbl = project(s.label);
        if (lbl < 0) continue;
        label_sets[texts[t]] |= 1u << lbl;
        population.emplace_back(&texts[t], lbl);
        ++t;
    }
    if (population.size() < 2) return 0.0;

    size_t hits = 0;
    for (const auto& [text, lbl] : population) {
        unsigned seen = label_sets[*text];
        if ((seen & ~(1u << lbl)) != 0) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(population.size());
}

} // namespace oppred::rawdata
