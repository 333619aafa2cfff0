#include "ircount/isa.hpp"

#include <array>
#include <cctype>
#include <climits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ircount::isa {

namespace {

struct OpInfo {
    Opcode op;
    const char* name;
    enum Kind { R3, I, LOAD, STORE, BR, JMP, LIK, NONE } kind;
};

constexpr OpInfo kOps[] = {
    {Opcode::LW, "LW", OpInfo::LOAD},     {Opcode::LB, "LB", OpInfo::LOAD},
    {Opcode::LBU, "LBU", OpInfo::LOAD},   {Opcode::SW, "SW", OpInfo::STORE},
    {Opcode::SB, "SB", OpInfo::STORE},    {Opcode::ADD, "ADD", OpInfo::R3},
    {Opcode::SUB, "SUB", OpInfo::R3},     {Opcode::MUL, "MUL", OpInfo::R3},
    {Opcode::MULH, "MULH", OpInfo::R3},   {Opcode::AND, "AND", OpInfo::R3},
    {Opcode::OR, "OR", OpInfo::R3},       {Opcode::XOR, "XOR", OpInfo::R3},
    {Opcode::SLL, "SLL", OpInfo::R3},     {Opcode::SRL, "SRL", OpInfo::R3},
    {Opcode::SRA, "SRA", OpInfo::R3},     {Opcode::SLT, "SLT", OpInfo::R3},
    {Opcode::SLTU, "SLTU", OpInfo::R3},   {Opcode::ADDI, "ADDI", OpInfo::I},
    {Opcode::ANDI, "ANDI", OpInfo::I},    {Opcode::ORI, "ORI", OpInfo::I},
    {Opcode::XORI, "XORI", OpInfo::I},    {Opcode::SLLI, "SLLI", OpInfo::I},
    {Opcode::SRLI, "SRLI", OpInfo::I},    {Opcode::SRAI, "SRAI", OpInfo::I},
    {Opcode::SLTI, "SLTI", OpInfo::I},    {Opcode::LI, "LI", OpInfo::LIK},
    {Opcode::BEQ, "BEQ", OpInfo::BR},     {Opcode::BNE, "BNE", OpInfo::BR},
    {Opcode::BLT, "BLT", OpInfo::BR},     {Opcode::BGE, "BGE", OpInfo::BR},
    {Opcode::J, "J", OpInfo::JMP},        {Opcode::HALT, "HALT", OpInfo::NONE},
    {Opcode::SDOTP8, "SDOTP8", OpInfo::R3},
    {Opcode::SDOTP4, "SDOTP4", OpInfo::R3},
};

const OpInfo* find_op(const std::string& name) {
    for (const auto& o : kOps) {
        if (name == o.name) return &o;
    }
    return nullptr;
}

const OpInfo& info_of(Opcode op) {
    for (const auto& o : kOps) {
        if (o.op == op) return o;
    }
    throw std::logic_error("unknown opcode");
}

int32_t sext8(uint32_t v) { return static_cast<int8_t>(v & 0xFF); }

int32_t sext4(uint32_t v) {
    int32_t x = static_cast<int32_t>(v & 0xF);
    return x >= 8 ? x - 16 : x;
}

}  // namespace

const char* opcode_name(Opcode op) { return info_of(op).name; }

uint32_t sdotp8(uint32_t rs1, uint32_t rs2, uint32_t rd_in) {
    uint32_t acc = rd_in;
    for (int i = 0; i < 4; ++i) {
        const int32_t a = sext8(rs1 >> (8 * i));
        const int32_t b = sext8(rs2 >> (8 * i));
        acc += static_cast<uint32_t>(a * b);
    }
    return acc;
}

uint32_t sdotp4(uint32_t rs1, uint32_t rs2, uint32_t rd_in) {
    uint32_t acc = rd_in;
    for (int i = 0; i < 8; ++i) {
        const int32_t a = sext4(rs1 >> (4 * i));
        const int32_t b = sext4(rs2 >> (4 * i));
        acc += static_cast<uint32_t>(a * b);
    }
    return acc;
}

uint32_t pack_lanes(const std::vector<int>& values, int width) {
    if (width != 4 && width != 8) throw std::invalid_argument("pack_lanes: width must be 4 or 8");
    const size_t lanes = width == 8 ? 4 : 8;
    if (values.size() != lanes) throw std::invalid_argument("pack_lanes: wrong value count");
    const int lo = width == 8 ? -128 : -8;
    const int hi = width == 8 ? 127 : 7;
    uint32_t word = 0;
    for (size_t i = 0; i < lanes; ++i) {
        if (values[i] < lo || values[i] > hi) throw std::invalid_argument("pack_lanes: value out of lane range");
        const uint32_t mask = width == 8 ? 0xFFu : 0xFu;
        word |= (static_cast<uint32_t>(values[i]) & mask) << (width * i);
    }
    return word;
}

std::vector<int> unpack_lanes(uint32_t word, int width) {
    if (width != 4 && width != 8) throw std::invalid_argument("unpack_lanes: width must be 4 or 8");
    const size_t lanes = width == 8 ? 4 : 8;
    std::vector<int> out(lanes);
    for (size_t i = 0; i < lanes; ++i) {
        out[i] = width == 8 ? sext8(word >> (8 * i)) : sext4(word >> (4 * i));
    }
    return out;
}

void Machine::store_word(uint32_t addr, uint32_t v) {
    mem[addr] = static_cast<uint8_t>(v);
    mem[addr + 1] = static_cast<uint8_t>(v >> 8);
    mem[addr + 2] = static_cast<uint8_t>(v >> 16);
    mem[addr + 3] = static_cast<uint8_t>(v >> 24);
}

uint32_t Machine::load_word(uint32_t addr) const {
    return static_cast<uint32_t>(mem[addr]) | (static_cast<uint32_t>(mem[addr + 1]) << 8) |
           (static_cast<uint32_t>(mem[addr + 2]) << 16) | (static_cast<uint32_t>(mem[addr + 3]) << 24);
}

void Machine::store_byte(uint32_t addr, uint8_t v) { mem[addr] = v; }

namespace {

bool check_mem(Machine& m, uint32_t addr, uint32_t size, bool word_aligned, const Instruction& ins) {
    if (addr + size > m.mem.size() || addr + size < addr) {
        std::ostringstream os;
        os << "memory access out of bounds at pc=" << m.pc << " (" << disassemble(ins) << ", addr=" << addr << ")";
        m.fault = os.str();
        return false;
    }
    if (word_aligned && (addr & 3u) != 0) {
        std::ostringstream os;
        os << "misaligned word access at pc=" << m.pc << " (" << disassemble(ins) << ", addr=" << addr << ")";
        m.fault = os.str();
        return false;
    }
    return true;
}

}  // namespace

void execute(Machine& m, const Program& prog, const ExecOptions& opts) {
    uint64_t steps = 0;
    while (!m.halted && m.fault.empty() && m.pc < prog.size()) {
        if (steps++ >= opts.max_steps) {
            m.fault = "instruction budget exceeded";
            break;
        }
        const Instruction& ins = prog[m.pc];
        size_t next_pc = m.pc + 1;
        const uint32_t a = m.reg(ins.rs1);
        const uint32_t b = m.reg(ins.rs2);
        bool faulted = false;
        switch (ins.op) {
            case Opcode::LW: {
                const uint32_t addr = a + static_cast<uint32_t>(ins.imm);
                if (!check_mem(m, addr, 4, true, ins)) { faulted = true; break; }
                m.set_reg(ins.rd, m.load_word(addr));
                break;
            }
            case Opcode::LB:
            case Opcode::LBU: {
                const uint32_t addr = a + static_cast<uint32_t>(ins.imm);
                if (!check_mem(m, addr, 1, false, ins)) { faulted = true; break; }
                const uint8_t v = m.mem[addr];
                m.set_reg(ins.rd, ins.op == Opcode::LB
                                      ? static_cast<uint32_t>(static_cast<int32_t>(static_cast<int8_t>(v)))
                                      : static_cast<uint32_t>(v));
                break;
            }
            case Opcode::SW: {
                const uint32_t addr = a + static_cast<uint32_t>(ins.imm);
                if (!check_mem(m, addr, 4, true, ins)) { faulted = true; break; }
                m.store_word(addr, b);
                break;
            }
            case Opcode::SB: {
                const uint32_t addr = a + static_cast<uint32_t>(ins.imm);
                if (!check_mem(m, addr, 1, false, ins)) { faulted = true; break; }
                m.store_byte(addr, static_cast<uint8_t>(b));
                break;
            }
            case Opcode::ADD: m.set_reg(ins.rd, a + b); break;
            case Opcode::SUB: m.set_reg(ins.rd, a - b); break;
            case Opcode::MUL: m.set_reg(ins.rd, a * b); break;
            case Opcode::MULH: {
                const int64_t p = static_cast<int64_t>(static_cast<int32_t>(a)) * static_cast<int32_t>(b);
                m.set_reg(ins.rd, static_cast<uint32_t>(static_cast<uint64_t>(p) >> 32));
                break;
            }
            case Opcode::AND: m.set_reg(ins.rd, a & b); break;
            case Opcode::OR: m.set_reg(ins.rd, a | b); break;
            case Opcode::XOR: m.set_reg(ins.rd, a ^ b); break;
            case Opcode::SLL: m.set_reg(ins.rd, a << (b & 31u)); break;
            case Opcode::SRL: m.set_reg(ins.rd, a >> (b & 31u)); break;
            case Opcode::SRA: m.set_reg(ins.rd, static_cast<uint32_t>(static_cast<int32_t>(a) >> (b & 31u))); break;
            case Opcode::SLT: m.set_reg(ins.rd, static_cast<int32_t>(a) < static_cast<int32_t>(b) ? 1u : 0u); break;
            case Opcode::SLTU: m.set_reg(ins.rd, a < b ? 1u : 0u); break;
            case Opcode::ADDI: m.set_reg(ins.rd, a + static_cast<uint32_t>(ins.imm)); break;
            case Opcode::ANDI: m.set_reg(ins.rd, a & static_cast<uint32_t>(ins.imm)); break;
            case Opcode::ORI: m.set_reg(ins.rd, a | static_cast<uint32_t>(ins.imm)); break;
            case Opcode::XORI: m.set_reg(ins.rd, a ^ static_cast<uint32_t>(ins.imm)); break;
            case Opcode::SLLI: m.set_reg(ins.rd, a << (ins.imm & 31)); break;
            case Opcode::SRLI: m.set_reg(ins.rd, a >> (ins.imm & 31)); break;
            case Opcode::SRAI: m.set_reg(ins.rd, static_cast<uint32_t>(static_cast<int32_t>(a) >> (ins.imm & 31))); break;
            case Opcode::SLTI: m.set_reg(ins.rd, static_cast<int32_t>(a) < ins.imm ? 1u : 0u); break;
            case Opcode::LI: m.set_reg(ins.rd, static_cast<uint32_t>(ins.imm)); break;
            case Opcode::BEQ: if (a == b) next_pc = static_cast<size_t>(ins.imm); break;
            case Opcode::BNE: if (a != b) next_pc = static_cast<size_t>(ins.imm); break;
            case Opcode::BLT: if (static_cast<int32_t>(a) < static_cast<int32_t>(b)) next_pc = static_cast<size_t>(ins.imm); break;
            case Opcode::BGE: if (static_cast<int32_t>(a) >= static_cast<int32_t>(b)) next_pc = static_cast<size_t>(ins.imm); break;
            case Opcode::J: next_pc = static_cast<size_t>(ins.imm); break;
            case Opcode::HALT: m.halted = true; break;
            case Opcode::SDOTP8: m.set_reg(ins.rd, sdotp8(a, b, m.reg(ins.rd))); break;
            case Opcode::SDOTP4: m.set_reg(ins.rd, sdotp4(a, b, m.reg(ins.rd))); break;
        }
        if (faulted) break;
        m.cycles += 1;
        m.energy_units += opts.energy.cost(ins.op);
        if (opts.trace != nullptr) {
            (*opts.trace) << m.cycles << " pc=" << m.pc << " " << disassemble(ins) << "\n";
        }
        if (next_pc > prog.size()) {
            m.fault = "branch target out of program at pc=" + std::to_string(m.pc);
            break;
        }
        m.pc = next_pc;
    }
    if (!m.fault.empty()) m.halted = true;
}

void execute_or_throw(Machine& m, const Program& prog, const ExecOptions& opts) {
    execute(m, prog, opts);
    if (!m.fault.empty()) throw std::runtime_error("execution fault: " + m.fault);
}

namespace {

std::vector<std::string> split_operands(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    for (auto& t : out) {
        const size_t b = t.find_first_not_of(" \t");
        const size_t e = t.find_last_not_of(" \t");
        t = (b == std::string::npos) ? "" : t.substr(b, e - b + 1);
    }
    while (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

[[noreturn]] void asm_error(int line, const std::string& msg) {
    throw std::runtime_error("asm line " + std::to_string(line) + ": " + msg);
}

int parse_reg(const std::string& t, int line) {
    if (t.size() < 2 || (t[0] != 'x' && t[0] != 'X')) asm_error(line, "expected register, got '" + t + "'");
    int v = 0;
    for (size_t i = 1; i < t.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(t[i]))) asm_error(line, "bad register '" + t + "'");
        v = v * 10 + (t[i] - '0');
    }
    if (v > 31) asm_error(line, "register out of range '" + t + "'");
    return v;
}

int64_t parse_imm(const std::string& t, int line) {
    if (t.empty()) asm_error(line, "missing immediate");
    size_t pos = 0;
    int64_t v = 0;
    try {
        v = std::stoll(t, &pos, 0);
    } catch (const std::exception&) {
        asm_error(line, "bad immediate '" + t + "'");
    }
    if (pos != t.size()) asm_error(line, "bad immediate '" + t + "'");
    return v;
}

bool is_identifier(const std::string& t) {
    if (t.empty() || (!std::isalpha(static_cast<unsigned char>(t[0])) && t[0] != '_' && t[0] != '.')) return false;
    for (char c : t) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.') return false;
    }
    return true;
}

}  // namespace

Program assemble(const std::string& text) {
    struct Pending {
        size_t instr;
        std::string label;
        int line;
    };
    Program prog;
    std::map<std::string, size_t> labels;
    std::vector<Pending> fixups;

    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        for (const char* c : {"#", ";"}) {
            const size_t p = line.find(c);
            if (p != std::string::npos) line = line.substr(0, p);
        }
        size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const size_t e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);

        const size_t colon = line.find(':');
        if (colon != std::string::npos && is_identifier(line.substr(0, colon))) {
            const std::string label = line.substr(0, colon);
            if (labels.count(label) != 0) asm_error(line_no, "duplicate label '" + label + "'");
            labels[label] = prog.size();
            line = line.substr(colon + 1);
            b = line.find_first_not_of(" \t");
            if (b == std::string::npos) continue;
            line = line.substr(b);
        }

        std::string mnem;
        size_t i = 0;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) mnem += line[i++];
        for (auto& c : mnem) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        const OpInfo* op = find_op(mnem);
        if (op == nullptr) asm_error(line_no, "unknown mnemonic '" + mnem + "'");
        const std::string rest = i < line.size() ? line.substr(i) : "";
        auto ops = split_operands(rest);

        Instruction ins;
        ins.op = op->op;
        switch (op->kind) {
            case OpInfo::R3:
                if (ops.size() != 3) asm_error(line_no, mnem + " expects rd, rs1, rs2");
                ins.rd = static_cast<uint8_t>(parse_reg(ops[0], line_no));
                ins.rs1 = static_cast<uint8_t>(parse_reg(ops[1], line_no));
                ins.rs2 = static_cast<uint8_t>(parse_reg(ops[2], line_no));
                break;
            case OpInfo::I: {
                if (ops.size() != 3) asm_error(line_no, mnem + " expects rd, rs1, imm");
                ins.rd = static_cast<uint8_t>(parse_reg(ops[0], line_no));
                ins.rs1 = static_cast<uint8_t>(parse_reg(ops[1], line_no));
                const int64_t v = parse_imm(ops[2], line_no);
                const bool shift = op->op == Opcode::SLLI || op->op == Opcode::SRLI || op->op == Opcode::SRAI;
                if (shift && (v < 0 || v > 31)) asm_error(line_no, "shift amount must be 0..31");
                if (v < INT32_MIN || v > INT32_MAX) asm_error(line_no, "immediate out of 32-bit range");
                ins.imm = static_cast<int32_t>(v);
                break;
            }
            case OpInfo::LIK: {
                if (ops.size() != 2) asm_error(line_no, "LI expects rd, imm");
                ins.rd = static_cast<uint8_t>(parse_reg(ops[0], line_no));
                const int64_t v = parse_imm(ops[1], line_no);
                if (v < INT32_MIN || v > static_cast<int64_t>(UINT32_MAX)) asm_error(line_no, "immediate out of range");
                ins.imm = static_cast<int32_t>(static_cast<uint32_t>(v));
                break;
            }
            case OpInfo::LOAD:
            case OpInfo::STORE: {
                if (ops.size() != 2) asm_error(line_no, mnem + " expects reg, imm(rs1)");
                const int data_reg = parse_reg(ops[0], line_no);
                const std::string& mem = ops[1];
                const size_t lp = mem.find('(');
                const size_t rp = mem.find(')');
                if (lp == std::string::npos || rp == std::string::npos || rp < lp) {
                    asm_error(line_no, "expected imm(rs1) operand");
                }
                const std::string off = mem.substr(0, lp);
                const int64_t v = off.empty() ? 0 : parse_imm(off, line_no);
                if (v < INT32_MIN || v > INT32_MAX) asm_error(line_no, "offset out of range");
                ins.imm = static_cast<int32_t>(v);
                ins.rs1 = static_cast<uint8_t>(parse_reg(mem.substr(lp + 1, rp - lp - 1), line_no));
                if (op->kind == OpInfo::LOAD) {
                    ins.rd = static_cast<uint8_t>(data_reg);
                } else {
                    ins.rs2 = static_cast<uint8_t>(data_reg);
                }
                break;
            }
            case OpInfo::BR: {
                if (ops.size() != 3) asm_error(line_no, mnem + " expects rs1, rs2, target");
                ins.rs1 = static_cast<uint8_t>(parse_reg(ops[0], line_no));
                ins.rs2 = static_cast<uint8_t>(parse_reg(ops[1], line_no));
                if (is_identifier(ops[2])) {
                    fixups.push_back({prog.size(), ops[2], line_no});
                } else {
                    ins.imm = static_cast<int32_t>(parse_imm(ops[2], line_no));
                }
                break;
            }
            case OpInfo::JMP: {
                if (ops.size() != 1) asm_error(line_no, "J expects a target");
                if (is_identifier(ops[0])) {
                    fixups.push_back({prog.size(), ops[0], line_no});
                } else {
                    ins.imm = static_cast<int32_t>(parse_imm(ops[0], line_no));
                }
                break;
            }
            case OpInfo::NONE:
                if (!ops.empty()) asm_error(line_no, mnem + " takes no operands");
                break;
        }
        prog.push_back(ins);
    }
    for (const auto& f : fixups) {
        const auto it = labels.find(f.label);
        if (it == labels.end()) asm_error(f.line, "undefined label '" + f.label + "'");
        prog[f.instr].imm = static_cast<int32_t>(it->second);
    }
    for (size_t pi = 0; pi < prog.size(); ++pi) {
        const Instruction& ins = prog[pi];
        const auto kind = info_of(ins.op).kind;
        if ((kind == OpInfo::BR || kind == OpInfo::JMP) &&
            (ins.imm < 0 || static_cast<size_t>(ins.imm) > prog.size())) {
            throw std::runtime_error("asm: branch target out of program at instruction " + std::to_string(pi));
        }
    }
    return prog;
}

std::string disassemble(const Instruction& ins) {
    const OpInfo& o = info_of(ins.op);
    std::ostringstream os;
    os << o.name;
    auto reg = [](int r) { return "x" + std::to_string(r); };
    switch (o.kind) {
        case OpInfo::R3: os << " " << reg(ins.rd) << ", " << reg(ins.rs1) << ", " << reg(ins.rs2); break;
        case OpInfo::I: os << " " << reg(ins.rd) << ", " << reg(ins.rs1) << ", " << ins.imm; break;
        case OpInfo::LIK: os << " " << reg(ins.rd) << ", " << ins.imm; break;
        case OpInfo::LOAD: os << " " << reg(ins.rd) << ", " << ins.imm << "(" << reg(ins.rs1) << ")"; break;
        case OpInfo::STORE: os << " " << reg(ins.rs2) << ", " << ins.imm << "(" << reg(ins.rs1) << ")"; break;
        case OpInfo::BR: os << " " << reg(ins.rs1) << ", " << reg(ins.rs2) << ", " << ins.imm; break;
        case OpInfo::JMP: os << " " << ins.imm; break;
        case OpInfo::NONE: break;
    }
    return os.str();
}

std::string disassemble(const Program& prog) {
    std::string out;
    for (const auto& ins : prog) {
        out += disassemble(ins);
        out += "\n";
    }
    return out;
}

}  // namespace ircount::isa
