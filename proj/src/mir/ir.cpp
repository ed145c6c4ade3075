#include "oppred/mir/ir.hpp"

#include <set>
#include <sstream>

namespace oppred::mir {

const char* opcode_name(Opcode op) {
    switch (op) {
        case Opcode::Add: return "add";
        case Opcode::Sub: return "sub";
        case Opcode::Mul: return "mul";
        case Opcode::Udiv: return "udiv";
        case Opcode::Urem: return "urem";
        case Opcode::And: return "and";
        case Opcode::Or: return "or";
        case Opcode::Xor: return "xor";
        case Opcode::Shl: return "shl";
        case Opcode::Shr: return "shr";
        case Opcode::Not: return "not";
        case Opcode::Neg: return "neg";
        case Opcode::Mov: return "mov";
        case Opcode::MovImm: return "movimm";
        case Opcode::Cmp: return "cmp";
        case Opcode::Load: return "load";
        case Opcode::Store: return "store";
        case Opcode::Fadd: return "fadd";
        case Opcode::Fmul: return "fmul";
        case Opcode::Fcmp: return "fcmp";
        case Opcode::GetEnv: return "getenv";
    }
    return "?";
}

const char* cond_name(Cond c) {
    switch (c) {
        case Cond::Eq: return "eq";
        case Cond::Ne: return "ne";
        case Cond::Ult: return "ult";
        case Cond::Slt: return "slt";
        case Cond::Uge: return "uge";
        case Cond::Sge: return "sge";
    }
    return "?";
}

Cond cond_invert(Cond c) {
    switch (c) {
        case Cond::Eq: return Cond::Ne;
        case Cond::Ne: return Cond::Eq;
        case Cond::Ult: return Cond::Uge;
        case Cond::Uge: return Cond::Ult;
        case Cond::Slt: return Cond::Sge;
        case Cond::Sge: return Cond::Slt;
    }
    return c;
}

const BasicBlock* Function::find_block(const std::string& label) const {
    for (const auto& b : blocks)
        if (b.label == label) return &b;
    return nullptr;
}

BasicBlock* Function::find_block(const std::string& label) {
    for (auto& b : blocks)
        if (b.label == label) return &b;
    return nullptr;
}

int Function::block_index(const std::string& label) const {
    for (size_t i = 0; i < blocks.size(); ++i)
        if (blocks[i].label == label) return static_cast<int>(i);
    return -1;
}

const Function* Program::find_function(const std::string& name) const {
    for (const auto& f : functions)
        if (f.name == name) return &f;
    return nullptr;
}

Function* Program::find_function(const std::string& name) {
    for (auto& f : functions)
        if (f.name == name) return &f;
    return nullptr;
}

std::string PredicateId::str() const {
    std::ostringstream os;
    os << function << ":" << block << "#" << ordinal;
    return os.str();
}

std::vector<PredicateId> enumerate_predicates(const Function& f) {
    std::vector<PredicateId> out;
    int n = 0;
    for (const auto& b : f.blocks) {
        if (std::holds_alternative<CondJump>(b.terminator))
            out.push_back(PredicateId{f.name, b.label, n++});
    }
    return out;
}

std::vector<PredicateId> enumerate_predicates(const Program& p) {
    std::vector<PredicateId> out;
    for (const auto& f : p.functions) {
        auto part = enumerate_predicates(f);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

namespace {

bool is_int_reg(const Operand& o) {
    const Reg* rg = std::get_if<Reg>(&o);
    return rg && !rg->is_float && rg->index < kIntRegs;
}

bool is_float_reg(const Operand& o) {
    const Reg* rg = std::get_if<Reg>(&o);
    return rg && rg->is_float && rg->index < kFloatRegs;
}

bool is_imm(const Operand& o) { return std::holds_alternative<Imm>(o); }

bool is_mem(const Operand& o) {
    const MemRef* m = std::get_if<MemRef>(&o);
    return m && !m->base.is_float && m->base.index < kIntRegs;
}

void check_instruction(const Function& f, const BasicBlock& b, const Instruction& ins,
                       std::vector<std::string>& problems) {
    auto bad = [&](const std::string& why) {
        problems.push_back(f.name + ":" + b.label + ": " + std::string(opcode_name(ins.op)) +
                           ": " + why);
    };
    const auto& ops = ins.operands;
    auto need = [&](size_t n) {
        if (ops.size() != n) {
            bad("expected " + std::to_string(n) + " operands, got " + std::to_string(ops.size()));
            return false;
        }
        return true;
    };
    switch (ins.op) {
        case Opcode::Add: case Opcode::Sub: case Opcode::Mul: case Opcode::Udiv:
        case Opcode::Urem: case Opcode::And: case Opcode::Or: case Opcode::Xor:
        case Opcode::Shl: case Opcode::Shr:
            if (need(2) && (!is_int_reg(ops[0]) || (!is_int_reg(ops[1]) && !is_imm(ops[1]))))
                bad("wants int reg, then int reg or imm");
            break;
        case Opcode::Not: case Opcode::Neg:
            if (need(1) && !is_int_reg(ops[0])) bad("wants one int reg");
            break;
        case Opcode::Mov:
            if (need(2) && (!std::holds_alternative<Reg>(ops[0]) ||
                            !std::holds_alternative<Reg>(ops[1])))
                bad("wants two registers");
            break;
        case Opcode::MovImm:
            if (need(2) && (!std::holds_alternative<Reg>(ops[0]) || !is_imm(ops[1])))
                bad("wants register, imm");
            break;
        case Opcode::Cmp:
            if (need(2) && (!is_int_reg(ops[0]) || (!is_int_reg(ops[1]) && !is_imm(ops[1]))))
                bad("wants int reg, then int reg or imm");
            break;
        case Opcode::Load:
            if (need(2) && (!is_int_reg(ops[0]) || !is_mem(ops[1])))
                bad("wants int reg, mem");
            break;
        case Opcode::Store:
            if (need(2) && (!is_mem(ops[0]) || (!is_int_reg(ops[1]) && !is_imm(ops[1]))))
                bad("wants mem, then int reg or imm");
            break;
        case Opcode::Fadd: case Opcode::Fmul:
            if (need(2) && (!is_float_reg(ops[0]) || !is_float_reg(ops[1])))
                bad("wants two float regs");
            break;
        case Opcode::Fcmp:
            if (need(2) && (!is_float_reg(ops[0]) || !is_float_reg(ops[1])))
                bad("wants two float regs");
            break;
        case Opcode::GetEnv:
            if (need(2)) {
                const Imm* slot = std::get_if<Imm>(&ops[1]);
                if (!is_int_reg(ops[0]) || !slot) bad("wants int reg, slot imm");
                else if (slot->value >= kEnvSlots) bad("env slot out of range");
            }
            break;
    }
}

} // namespace

std::vector<std::string> validate(const Program& p) {
    std::vector<std::string> problems;
    std::set<std::string> fn_names;
    for (const auto& f : p.functions) {
        if (!fn_names.insert(f.name).second)
            problems.push_back("duplicate function name: " + f.name);
    }
    if (!p.find_function(p.entry_function))
        problems.push_back("entry function not found: " + p.entry_function);

    for (const auto& f : p.functions) {
        std::set<std::string> labels;
        for (const auto& b : f.blocks) {
            if (!labels.insert(b.label).second)
                problems.push_back(f.name + ": duplicate label " + b.label);
        }
        if (f.blocks.empty()) {
            problems.push_back(f.name + ": function has no blocks");
            continue;
        }
        if (!labels.count(f.entry_block))
            problems.push_back(f.name + ": entry block " + f.entry_block + " not found");
        if (f.arity < 0 || f.arity > kIntRegs)
            problems.push_back(f.name + ": bad arity");

        auto check_label = [&](const std::string& l) {
            if (!labels.count(l))
                problems.push_back(f.name + ": undefined label " + l);
        };
        for (const auto& b : f.blocks) {
            for (const auto& ins : b.instructions) check_instruction(f, b, ins, problems);
            if (const auto* j = std::get_if<Jump>(&b.terminator)) {
                check_label(j->target);
            } else if (const auto* cj = std::get_if<CondJump>(&b.terminator)) {
                check_label(cj->taken);
                check_label(cj->fallthrough);
            } else if (const auto* rt = std::get_if<Ret>(&b.terminator)) {
                if (rt->reg.is_float || rt->reg.index >= kIntRegs)
                    problems.push_back(f.name + ": ret wants an int reg");
            } else if (const auto* c = std::get_if<Call>(&b.terminator)) {
                if (!p.find_function(c->callee))
                    problems.push_back(f.name + ": call target not found: " + c->callee);
                check_label(c->then);
            }
        }
    }
    return problems;
}

uint64_t block_address(const Program& p, const std::string& fn, const std::string& label) {
    uint64_t addr = p.base_address;
    for (const auto& f : p.functions) {
        for (const auto& b : f.blocks) {
            if (f.name == fn && b.label == label) return addr;
            addr += 4ULL * (b.instructions.size() + 1);
        }
        addr += 16; // inter-function padding
    }
    return 0;
}

uint64_t AddressMap::block_address(const Program& p, const std::string& fn,
                                   const std::string& label) const {
    return mir::block_address(p, fn, label);
}

namespace {

template <typename Mark>
void mark_operand(const Operand& o, Mark&& mark) {
    if (const Reg* rg = std::get_if<Reg>(&o)) mark(*rg);
    else if (const MemRef* m = std::get_if<MemRef>(&o)) mark(m->base);
}

} // namespace

std::array<bool, kIntRegs> int_regs_used(const Function& f) {
    std::array<bool, kIntRegs> used{};
    auto mark = [&](const Reg& rg) {
        if (!rg.is_float && rg.index < kIntRegs) used[rg.index] = true;
    };
    for (int i = 0; i < f.arity; ++i) used[i] = true;
    for (const auto& b : f.blocks) {
        for (const auto& ins : b.instructions)
            for (const auto& o : ins.operands) mark_operand(o, mark);
        if (const auto* rt = std::get_if<Ret>(&b.terminator)) mark(rt->reg);
    }
    return used;
}

std::array<bool, kFloatRegs> float_regs_used(const Function& f) {
    std::array<bool, kFloatRegs> used{};
    auto mark = [&](const Reg& rg) {
        if (rg.is_float && rg.index < kFloatRegs) used[rg.index] = true;
    };
    for (const auto& b : f.blocks)
        for (const auto& ins : b.instructions)
            for (const auto& o : ins.operands) mark_operand(o, mark);
    return used;
}

} // namespace oppred::mir
