#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ircount::isa {

enum class Opcode {
    LW, LB, LBU, SW, SB,
    ADD, SUB, MUL, MULH, AND, OR, XOR, SLL, SRL, SRA, SLT, SLTU,
    ADDI, ANDI, ORI, XORI, SLLI, SRLI, SRAI, SLTI,
    LI,
    BEQ, BNE, BLT, BGE, J,
    HALT,
    SDOTP8, SDOTP4,
};

const char* opcode_name(Opcode op);

struct Instruction {
    Opcode op = Opcode::HALT;
    uint8_t rd = 0;
    uint8_t rs1 = 0;
    uint8_t rs2 = 0;
    int32_t imm = 0;  // immediate / memory offset / branch target (instruction index)
};

using Program = std::vector<Instruction>;

/// Packed multiply-accumulate over four signed 8-bit lanes.
/// Lane 0 is the least-significant byte; the 32-bit accumulator wraps.
uint32_t sdotp8(uint32_t rs1, uint32_t rs2, uint32_t rd_in);
/// As sdotp8 with eight signed 4-bit lanes in [-8, 7].
uint32_t sdotp4(uint32_t rs1, uint32_t rs2, uint32_t rd_in);

/// Little-endian lane packing. Expects 4 values in [-128,127] for width 8
/// or 8 values in [-8,7] for width 4; throws otherwise.
uint32_t pack_lanes(const std::vector<int>& values, int width);
std::vector<int> unpack_lanes(uint32_t word, int width);

struct EnergyModel {
    double base = 1.0;
    double sdotp = 1.8;
    double cost(Opcode op) const { return (op == Opcode::SDOTP8 || op == Opcode::SDOTP4) ? sdotp : base; }
};

/// Register machine state. x0 always reads as zero; every executed
/// instruction costs exactly one cycle.
struct Machine {
    std::array<uint32_t, 32> regs{};
    std::vector<uint8_t> mem;
    size_t pc = 0;
    uint64_t cycles = 0;
    double energy_units = 0.0;
    bool halted = false;
    std::string fault;  // empty while no fault

    explicit Machine(size_t mem_bytes = 1 << 16) : mem(mem_bytes, 0) {}

    uint32_t reg(int i) const { return i == 0 ? 0u : regs[i]; }
    void set_reg(int i, uint32_t v) {
        if (i != 0) regs[i] = v;
    }

    void store_word(uint32_t addr, uint32_t v);
    uint32_t load_word(uint32_t addr) const;
    void store_byte(uint32_t addr, uint8_t v);
};

struct ExecOptions {
    EnergyModel energy;
    std::ostream* trace = nullptr;  // one line per retired instruction
    uint64_t max_steps = 1ull << 33;
};

/// Runs until HALT, falling off the end, an execution fault, or the step
/// budget. Returns the machine (fault is recorded in-state, not thrown).
void execute(Machine& m, const Program& prog, const ExecOptions& opts = {});

/// Throws if execution ended with a fault.
void execute_or_throw(Machine& m, const Program& prog, const ExecOptions& opts = {});

/// Parses the textual listing: one instruction per line, '#'/';' comments,
/// `label:` definitions, registers x0..x31. Throws with the line number on
/// malformed input or unknown mnemonics.
Program assemble(const std::string& text);

std::string disassemble(const Instruction& ins);
std::string disassemble(const Program& prog);

}  // namespace ircount::isa
