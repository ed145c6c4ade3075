#include "oppred/mir/asm_text.hpp"

#include <cctype>
#include <map>
#include <sstream>
#include <vector>

namespace oppred::mir {

namespace {

struct Token {
    std::string text;
};

std::vector<std::string> split_tokens(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ';') break;
        if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
            if (!cur.empty()) { out.push_back(cur); cur.clear(); }
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

bool parse_u64(const std::string& s, uint64_t& out) {
    if (s.empty()) return false;
    bool neg = s[0] == '-';
    std::string body = neg ? s.substr(1) : s;
    if (body.empty()) return false;
    uint64_t v = 0;
    try {
        size_t pos = 0;
        if (body.size() > 2 && body[0] == '0' && (body[1] == 'x' || body[1] == 'X'))
            v = std::stoull(body.substr(2), &pos, 16), pos += 2;
        else
            v = std::stoull(body, &pos, 10);
        if (pos != body.size()) return false;
    } catch (...) {
        return false;
    }
    out = neg ? ~v + 1 : v;
    return true;
}

bool parse_reg(const std::string& s, Reg& out) {
    if (s.size() < 2) return false;
    bool fl = s[0] == 'f';
    if (s[0] != 'r' && s[0] != 'f') return false;
    uint64_t idx;
    if (!parse_u64(s.substr(1), idx)) return false;
    if (fl ? idx >= kFloatRegs : idx >= kIntRegs) return false;
    out = Reg{static_cast<uint8_t>(idx), fl};
    return true;
}

// [rB+disp] / [rB-disp] / [rB]
bool parse_mem(const std::string& s, MemRef& out) {
    if (s.size() < 3 || s.front() != '[' || s.back() != ']') return false;
    std::string body = s.substr(1, s.size() - 2);
    size_t sep = body.find_first_of("+-", 1);
    std::string regpart = sep == std::string::npos ? body : body.substr(0, sep);
    Reg base;
    if (!parse_reg(regpart, base) || base.is_float) return false;
    int64_t disp = 0;
    if (sep != std::string::npos) {
        uint64_t mag;
        if (!parse_u64(body.substr(sep + 1), mag)) return false;
        disp = static_cast<int64_t>(mag);
        if (body[sep] == '-') disp = -disp;
    }
    out = MemRef{base, disp};
    return true;
}

Operand parse_operand(const std::string& s, int line) {
    Reg rg;
    if (parse_reg(s, rg)) return rg;
    MemRef m;
    if (parse_mem(s, m)) return m;
    uint64_t v;
    if (parse_u64(s, v)) return Imm{v};
    throw ParseError(line, "bad operand '" + s + "'");
}

const std::map<std::string, Opcode>& opcode_table() {
    static const std::map<std::string, Opcode> table = {
        {"add", Opcode::Add}, {"sub", Opcode::Sub}, {"mul", Opcode::Mul},
        {"udiv", Opcode::Udiv}, {"urem", Opcode::Urem}, {"and", Opcode::And},
        {"or", Opcode::Or}, {"xor", Opcode::Xor}, {"shl", Opcode::Shl},
        {"shr", Opcode::Shr}, {"not", Opcode::Not}, {"neg", Opcode::Neg},
        {"mov", Opcode::Mov}, {"movimm", Opcode::MovImm}, {"cmp", Opcode::Cmp},
        {"load", Opcode::Load}, {"store", Opcode::Store}, {"fadd", Opcode::Fadd},
        {"fmul", Opcode::Fmul}, {"fcmp", Opcode::Fcmp}, {"getenv", Opcode::GetEnv},
    };
    return table;
}

bool parse_cond(const std::string& s, Cond& out) {
    if (s == "eq") out = Cond::Eq;
    else if (s == "ne") out = Cond::Ne;
    else if (s == "ult") out = Cond::Ult;
    else if (s == "slt") out = Cond::Slt;
    else if (s == "uge") out = Cond::Uge;
    else if (s == "sge") out = Cond::Sge;
    else return false;
    return true;
}

} // namespace

Program parse_asm(const std::string& text) {
    Program prog;
    prog.functions.clear();
    Function* cur_fn = nullptr;
    BasicBlock* cur_block = nullptr;
    bool entry_set = false;
    bool block_terminated = true;

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto toks = split_tokens(line);
        if (toks.empty()) continue;

        if (toks[0] == "program") {
            // program base <addr> entry <name>
            for (size_t i = 1; i + 1 < toks.size(); i += 2) {
                if (toks[i] == "base") {
                    uint64_t v;
                    if (!parse_u64(toks[i + 1], v)) throw ParseError(lineno, "bad base address");
                    prog.base_address = v;
                } else if (toks[i] == "entry") {
                    prog.entry_function = toks[i + 1];
                    entry_set = true;
                } else {
                    throw ParseError(lineno, "bad program header field '" + toks[i] + "'");
                }
            }
            continue;
        }

        if (toks[0] == "fn") {
            // fn name(K args)
            if (toks.size() < 2) throw ParseError(lineno, "fn wants a name");
            std::string rest;
            for (size_t i = 1; i < toks.size(); ++i) rest += (i > 1 ? " " : "") + toks[i];
            size_t lp = rest.find('(');
            size_t rp = rest.find(')');
            if (lp == std::string::npos || rp == std::string::npos || rp < lp)
                throw ParseError(lineno, "fn header wants '(<k> args)'");
            std::string name = rest.substr(0, lp);
            std::string inner = rest.substr(lp + 1, rp - lp - 1);
            std::istringstream is(inner);
            int k = 0;
            std::string word;
            if (!(is >> k >> word) || (word != "args" && word != "arg"))
                throw ParseError(lineno, "fn header wants '(<k> args)'");
            if (name.empty()) throw ParseError(lineno, "empty function name");
            if (cur_fn && !block_terminated)
                throw ParseError(lineno, "previous block not terminated");
            prog.functions.push_back(Function{name, k, "", {}});
            cur_fn = &prog.functions.back();
            cur_block = nullptr;
            block_terminated = true;
            continue;
        }

        if (toks.size() == 1 && toks[0].back() == ':') {
            if (!cur_fn) throw ParseError(lineno, "label outside function");
            if (cur_block && !block_terminated)
                throw ParseError(lineno, "block " + cur_block->label + " not terminated");
            std::string label = toks[0].substr(0, toks[0].size() - 1);
            if (label.empty()) throw ParseError(lineno, "empty label");
            cur_fn->blocks.push_back(BasicBlock{label, {}, Ret{r(0)}});
            cur_block = &cur_fn->blocks.back();
            if (cur_fn->entry_block.empty()) cur_fn->entry_block = label;
            block_terminated = false;
            continue;
        }

        if (!cur_block || block_terminated)
            throw ParseError(lineno, "instruction outside a block");

        const std::string& head = toks[0];
        if (head == "jmp") {
            if (toks.size() != 2) throw ParseError(lineno, "jmp wants one label");
            cur_block->terminator = Jump{toks[1]};
            block_terminated = true;
        } else if (head == "jcc") {
            if (toks.size() != 4) throw ParseError(lineno, "jcc wants cond, taken, fallthrough");
            Cond c;
            if (!parse_cond(toks[1], c)) throw ParseError(lineno, "bad condition '" + toks[1] + "'");
            cur_block->terminator = CondJump{c, toks[2], toks[3], std::nullopt};
            block_terminated = true;
        } else if (head == "ret") {
            if (toks.size() != 2) throw ParseError(lineno, "ret wants a register");
            Reg rg;
            if (!parse_reg(toks[1], rg) || rg.is_float)
                throw ParseError(lineno, "ret wants an int register");
            cur_block->terminator = Ret{rg};
            block_terminated = true;
        } else if (head == "call") {
            if (toks.size() != 3) throw ParseError(lineno, "call wants function, then-label");
            cur_block->terminator = Call{toks[1], toks[2]};
            block_terminated = true;
        } else {
            auto it = opcode_table().find(head);
            if (it == opcode_table().end())
                throw ParseError(lineno, "unknown opcode '" + head + "'");
            Instruction ins{it->second, {}};
            for (size_t i = 1; i < toks.size(); ++i)
                ins.operands.push_back(parse_operand(toks[i], lineno));
            cur_block->instructions.push_back(std::move(ins));
        }
    }
    if (cur_block && !block_terminated)
        throw ParseError(lineno, "last block not terminated");
    if (!entry_set && !prog.functions.empty())
        prog.entry_function = prog.functions.front().name;

    auto problems = validate(prog);
    if (!problems.empty()) throw ParseError(0, problems.front());

    // parse keeps entry blocks first; an explicit non-first entry is rejected
    // to keep emit/parse canonical.
    for (const auto& fn : prog.functions)
        if (!fn.blocks.empty() && fn.entry_block != fn.blocks.front().label)
            throw ParseError(0, fn.name + ": entry block must be the first block");
    return prog;
}

namespace {

std::string imm_text(uint64_t v) {
    std::ostringstream os;
    if (v < 4096) os << v;
    else os << "0x" << std::hex << v;
    return os.str();
}

std::string operand_text(const Operand& o) {
    if (const Reg* rg = std::get_if<Reg>(&o)) {
        return std::string(rg->is_float ? "f" : "r") + std::to_string(rg->index);
    }
    if (const Imm* im = std::get_if<Imm>(&o)) return imm_text(im->value);
    const MemRef& m = std::get<MemRef>(o);
    std::ostringstream os;
    os << "[r" << int(m.base.index);
    if (m.disp >= 0) os << "+" << m.disp;
    else os << "-" << -m.disp;
    os << "]";
    return os.str();
}

} // namespace

std::string emit_asm(const Program& p) {
    std::ostringstream os;
    os << "program base " << imm_text(p.base_address) << " entry " << p.entry_function << "\n";
    for (const auto& fn : p.functions) {
        os << "\nfn " << fn.name << "(" << fn.arity << " args)\n";
        for (const auto& b : fn.blocks) {
            os << b.label << ":\n";
            for (const auto& ins : b.instructions) {
                os << "  " << opcode_name(ins.op);
                for (size_t i = 0; i < ins.operands.size(); ++i)
                    os << (i == 0 ? " " : ", ") << operand_text(ins.operands[i]);
                os << "\n";
            }
            if (const auto* j = std::get_if<Jump>(&b.terminator)) {
                os << "  jmp " << j->target << "\n";
            } else if (const auto* cj = std::get_if<CondJump>(&b.terminator)) {
                os << "  jcc " << cond_name(cj->cond) << " " << cj->taken << " "
                   << cj->fallthrough << "\n";
            } else if (const auto* rt = std::get_if<Ret>(&b.terminator)) {
                os << "  ret r" << int(rt->reg.index) << "\n";
            } else if (const auto* c = std::get_if<Call>(&b.terminator)) {
                os << "  call " << c->callee << " " << c->then << "\n";
            }
        }
    }
    return os.str();
}

} // namespace oppred::mir
