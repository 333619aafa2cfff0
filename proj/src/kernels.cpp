#include "ircount/kernels.hpp"

#include <algorithm>
#include <stdexcept>

namespace ircount::kern {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::runtime_error(msg);
}

int clamp_to_lane(int v, int width) {
    const int lo = width == 8 ? -128 : -8;
    const int hi = width == 8 ? 127 : 7;
    return std::min(std::max(v, lo), hi);
}

int lane_value(uint32_t word, int lane, int width) {
    if (width == 8) {
        return static_cast<int8_t>(word >> (8 * lane));
    }
    const int v = static_cast<int>((word >> (4 * lane)) & 0xF);
    return v >= 8 ? v - 16 : v;
}

uint32_t with_lane(uint32_t word, int lane, int width, int value) {
    const uint32_t mask = width == 8 ? 0xFFu : 0xFu;
    const int sh = width * lane;
    word &= ~(mask << sh);
    word |= (static_cast<uint32_t>(value) & mask) << sh;
    return word;
}

}  // namespace

uint32_t pad_word(int width, int8_t pad_code) {
    uint32_t w = 0;
    const int lanes = 32 / width;
    for (int i = 0; i < lanes; ++i) w = with_lane(w, i, width, pad_code);
    return w;
}

int PackedTensor::code(int ci, int y, int x) const {
    const int lpw = lanes_per_word();
    return lane_value(words[word_index(y, x, ci / lpw)], ci % lpw, width);
}

void PackedTensor::set_code(int ci, int y, int x, int v) {
    const int lpw = lanes_per_word();
    uint32_t& w = words[word_index(y, x, ci / lpw)];
    w = with_lane(w, ci % lpw, width, v);
}

PackedTensor pack_codes(const std::vector<int8_t>& logical, int c, int h, int w, int width, int8_t pad_code) {
    require(width == 4 || width == 8, "pack_codes: width must be 4 or 8");
    require(logical.size() == static_cast<size_t>(c) * h * w, "pack_codes: size mismatch");
    PackedTensor t;
    t.c = c;
    t.h = h;
    t.w = w;
    t.width = width;
    t.pad_code = pad_code;
    t.words.assign(t.word_count(), pad_word(width, pad_code));
    for (int ci = 0; ci < c; ++ci) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                t.set_code(ci, y, x, logical[(static_cast<size_t>(ci) * h + y) * w + x]);
            }
        }
    }
    return t;
}

std::vector<int8_t> unpack_codes(const PackedTensor& t) {
    std::vector<int8_t> out(static_cast<size_t>(t.c) * t.h * t.w);
    for (int ci = 0; ci < t.c; ++ci) {
        for (int y = 0; y < t.h; ++y) {
            for (int x = 0; x < t.w; ++x) {
                out[(static_cast<size_t>(ci) * t.h + y) * t.w + x] = static_cast<int8_t>(t.code(ci, y, x));
            }
        }
    }
    return out;
}

int in_lanes(const QuantLayerInt& layer) {
    const int lpw = 32 / layer.width;
    if (layer.kind == QuantLayerInt::Kind::kFc && layer.up_spatial > 1) {
        const int cpad = ((layer.up_channels + lpw - 1) / lpw) * lpw;
        return layer.up_spatial * cpad;
    }
    return layer.cin;
}

std::vector<int8_t> weight_lanes(const QuantLayerInt& layer) {
    const int il = in_lanes(layer);
    if (layer.kind == QuantLayerInt::Kind::kConv) {
        std::vector<int8_t> lanes(static_cast<size_t>(layer.cout) * layer.k * layer.k * il);
        for (int oc = 0; oc < layer.cout; ++oc) {
            for (int ky = 0; ky < layer.k; ++ky) {
                for (int kx = 0; kx < layer.k; ++kx) {
                    const size_t base =
                        ((static_cast<size_t>(oc) * layer.k + ky) * layer.k + kx) * il;
                    for (int ci = 0; ci < layer.cin; ++ci) {
                        const size_t wi = ((static_cast<size_t>(oc) * layer.cin + ci) * layer.k + ky) * layer.k + kx;
                        lanes[base + ci] = layer.w[wi];
                    }
                }
            }
        }
        return lanes;
    }
    std::vector<int8_t> lanes(static_cast<size_t>(layer.cout) * il, 0);
    const int lpw = 32 / layer.width;
    const int cpad = layer.up_spatial > 1 ? ((layer.up_channels + lpw - 1) / lpw) * lpw : layer.cin;
    for (int oc = 0; oc < layer.cout; ++oc) {
        for (int j = 0; j < il; ++j) {
            int logical;
            if (layer.up_spatial > 1) {
                const int p = j / cpad;
                const int cc = j % cpad;
                if (cc >= layer.up_channels) continue;  // padding lane pairs with weight 0
                logical = cc * layer.up_spatial + p;
            } else {
                logical = j;
            }
            lanes[static_cast<size_t>(oc) * il + j] = layer.w[static_cast<size_t>(oc) * layer.cin + logical];
        }
    }
    return lanes;
}

std::vector<uint32_t> pack_weight_blob(const QuantLayerInt& layer) {
    const int il = in_lanes(layer);
    const int lpw = 32 / layer.width;
    const int wpp = (il + lpw - 1) / lpw;
    const int kk = layer.kind == QuantLayerInt::Kind::kConv ? layer.k * layer.k : 1;
    const std::vector<int8_t> lanes = weight_lanes(layer);
    std::vector<uint32_t> blob(static_cast<size_t>(layer.cout) * kk * wpp, 0);
    for (int oc = 0; oc < layer.cout; ++oc) {
        for (int ki = 0; ki < kk; ++ki) {
            const size_t lane_base = (static_cast<size_t>(oc) * kk + ki) * il;
            const size_t word_base = (static_cast<size_t>(oc) * kk + ki) * wpp;
            for (int j = 0; j < il; ++j) {
                blob[word_base + j / lpw] = with_lane(blob[word_base + j / lpw], j % lpw, layer.width, lanes[lane_base + j]);
            }
        }
    }
    return blob;
}

PackedTensor flatten_view(const PackedTensor& t) {
    PackedTensor v = t;
    v.c = t.h * t.w * t.words_per_pos() * t.lanes_per_word();
    v.h = 1;
    v.w = 1;
    return v;
}

namespace {

struct Geom {
    int h, w, k, pad;
};

Geom geom_of(const QuantLayerInt& layer) {
    if (layer.kind == QuantLayerInt::Kind::kConv) return {layer.h_in, layer.w_in, layer.k, layer.pad};
    return {1, 1, 1, 0};
}

int64_t requant_acc(int64_t acc, const QuantLayerInt& layer) {
    if (layer.relu && acc < 0) acc = 0;
    const int64_t t = acc * layer.mult + (1ll << (layer.shift - 1));
    int64_t r = t >> layer.shift;
    r += layer.zp_out;
    return std::min<int64_t>(std::max<int64_t>(r, layer.out_lane_lo()), layer.out_lane_hi());
}

/// sum of weight lanes per (oc, kernel position) for the zero-point fold
std::vector<int64_t> weight_position_sums(const std::vector<int8_t>& lanes, int cout, int kk, int il) {
    std::vector<int64_t> sums(static_cast<size_t>(cout) * kk, 0);
    for (int oc = 0; oc < cout; ++oc) {
        for (int ki = 0; ki < kk; ++ki) {
            int64_t s = 0;
            const size_t base = (static_cast<size_t>(oc) * kk + ki) * il;
            for (int j = 0; j < il; ++j) s += lanes[base + j];
            sums[static_cast<size_t>(oc) * kk + ki] = s;
        }
    }
    return sums;
}

}  // namespace

PackedTensor conv2d_int(const PackedTensor& in, const QuantLayerInt& layer) {
    require(in.width == layer.width, "conv2d_int: lane width mismatch");
    const Geom g = geom_of(layer);
    const int il = in_lanes(layer);
    require(in.c == (layer.kind == QuantLayerInt::Kind::kConv ? layer.cin : il) && in.h == g.h && in.w == g.w,
            "conv2d_int: input geometry mismatch");
    const int lpw = in.lanes_per_word();
    const int full = il / lpw;
    const int left = il % lpw;
    const int kk = g.k * g.k;
    const std::vector<int8_t> lanes = weight_lanes(layer);
    const std::vector<int64_t> sumw = weight_position_sums(lanes, layer.cout, kk, il);

    PackedTensor out;
    out.c = layer.cout;
    out.h = g.h;
    out.w = g.w;
    out.width = layer.out_width;
    out.pad_code = static_cast<int8_t>(clamp_to_lane(layer.zp_out, layer.out_width));
    out.words.assign(out.word_count(), pad_word(out.width, out.pad_code));

    for (int oy = 0; oy < g.h; ++oy) {
        for (int ox = 0; ox < g.w; ++ox) {
            for (int oc = 0; oc < layer.cout; ++oc) {
                int64_t acc = layer.bias_q[oc];
                for (int ky = 0; ky < g.k; ++ky) {
                    const int iy = oy - g.pad + ky;
                    if (iy < 0 || iy >= g.h) continue;
                    for (int kx = 0; kx < g.k; ++kx) {
                        const int ix = ox - g.pad + kx;
                        if (ix < 0 || ix >= g.w) continue;
                        const int ki = ky * g.k + kx;
                        acc -= static_cast<int64_t>(layer.zp_in) * sumw[static_cast<size_t>(oc) * kk + ki];
                        const size_t lane_base = (static_cast<size_t>(oc) * kk + ki) * il;
                        const size_t in_word = in.word_index(iy, ix, 0);
                        // SIMD-equivalent word loop over full chunks
                        for (int chunk = 0; chunk < full; ++chunk) {
                            for (int l = 0; l < lpw; ++l) {
                                const int xv = lane_value(in.words[in_word + chunk], l, in.width);
                                acc += static_cast<int64_t>(lanes[lane_base + chunk * lpw + l]) * xv;
                            }
                        }
                        // scalar leftover lanes in the final partial word
                        for (int l = 0; l < left; ++l) {
                            const int xv = lane_value(in.words[in_word + full], l, in.width);
                            acc += static_cast<int64_t>(lanes[lane_base + full * lpw + l]) * xv;
                        }
                    }
                }
                out.set_code(oc, oy, ox, static_cast<int>(requant_acc(acc, layer)));
            }
        }
    }
    return out;
}

PackedTensor maxpool_int(const PackedTensor& in) {
    require(in.h % 2 == 0 && in.w % 2 == 0, "maxpool_int: input extent must be even");
    PackedTensor out;
    out.c = in.c;
    out.h = in.h / 2;
    out.w = in.w / 2;
    out.width = in.width;
    out.pad_code = in.pad_code;
    out.words.assign(out.word_count(), pad_word(out.width, out.pad_code));
    for (int ci = 0; ci < in.c; ++ci) {
        for (int oy = 0; oy < out.h; ++oy) {
            for (int ox = 0; ox < out.w; ++ox) {
                int best = in.code(ci, 2 * oy, 2 * ox);
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        best = std::max(best, in.code(ci, 2 * oy + dy, 2 * ox + dx));
                    }
                }
                out.set_code(ci, oy, ox, best);
            }
        }
    }
    return out;
}

PackedTensor linear_int(const PackedTensor& in, const QuantLayerInt& layer) {
    require(layer.kind == QuantLayerInt::Kind::kFc, "linear_int: not a linear layer");
    if (in.h != 1 || in.w != 1) return conv2d_int(flatten_view(in), layer);
    return conv2d_int(in, layer);
}

// ---------------------------------------------------------------------------
// program generation
// ---------------------------------------------------------------------------

namespace {

using isa::Instruction;
using isa::Opcode;

// register allocation for generated code
constexpr int ACC = 5, RW = 6, RX = 7, T0 = 8, T1 = 9, T2 = 10, RHI = 11, RLO = 12, T3 = 13;
constexpr int BIN = 20, BW = 21, BOUT = 22;

struct Emitter {
    isa::Program prog;
    uint64_t sdotp = 0;

    void op(Opcode o, int rd, int rs1, int rs2, int32_t imm = 0) {
        Instruction i;
        i.op = o;
        i.rd = static_cast<uint8_t>(rd);
        i.rs1 = static_cast<uint8_t>(rs1);
        i.rs2 = static_cast<uint8_t>(rs2);
        i.imm = imm;
        prog.push_back(i);
    }
    void li(int rd, int64_t v) { op(Opcode::LI, rd, 0, 0, static_cast<int32_t>(v)); }
    void lw(int rd, int rs1, int32_t off) { op(Opcode::LW, rd, rs1, 0, off); }
    void lb(int rd, int rs1, int32_t off) { op(Opcode::LB, rd, rs1, 0, off); }
    void lbu(int rd, int rs1, int32_t off) { op(Opcode::LBU, rd, rs1, 0, off); }
    void sb(int rs2, int rs1, int32_t off) { op(Opcode::SB, 0, rs1, rs2, off); }

    void sdotp_acc(int width, int rd, int rs1, int rs2) {
        op(width == 8 ? Opcode::SDOTP8 : Opcode::SDOTP4, rd, rs1, rs2);
        ++sdotp;
    }

    /// rd = max(rd, 0) without branches
    void relu(int rd) {
        op(Opcode::SRAI, T0, rd, 0, 31);
        op(Opcode::XORI, T0, T0, 0, -1);
        op(Opcode::AND, rd, rd, T0);
    }

    /// rd = max(rd, value)
    void clamp_low(int rd, int32_t value) {
        li(T0, value);
        op(Opcode::SLT, T1, rd, T0);
        op(Opcode::SUB, T1, 0, T1);
        op(Opcode::XOR, T2, rd, T0);
        op(Opcode::AND, T2, T2, T1);
        op(Opcode::XOR, rd, rd, T2);
    }

    /// rd = min(rd, value)
    void clamp_high(int rd, int32_t value) {
        li(T0, value);
        op(Opcode::SLT, T1, T0, rd);
        op(Opcode::SUB, T1, 0, T1);
        op(Opcode::XOR, T2, rd, T0);
        op(Opcode::AND, T2, T2, T1);
        op(Opcode::XOR, rd, rd, T2);
    }

    /// Nibble/byte load with sign extension into rd.
    void load_lane(int rd, int base, int width, int64_t byte_off, int lane_parity) {
        if (width == 8) {
            lb(rd, base, static_cast<int32_t>(byte_off));
            return;
        }
        lbu(rd, base, static_cast<int32_t>(byte_off));
        op(Opcode::SLLI, rd, rd, 0, lane_parity == 0 ? 28 : 24);
        op(Opcode::SRAI, rd, rd, 0, 28);
    }

    /// ACC = clamp(round_half_up(ACC * mult / 2^shift) + zp, [lo, hi])
    void requant(const QuantLayerInt& L) {
        li(T0, L.mult);
        op(Opcode::MULH, RHI, ACC, T0);
        op(Opcode::MUL, RLO, ACC, T0);
        const int s = L.shift;
        if (s - 1 < 32) {
            li(T1, static_cast<int32_t>(1u << (s - 1)));
            op(Opcode::ADD, RLO, RLO, T1);
            op(Opcode::SLTU, T2, RLO, T1);
            op(Opcode::ADD, RHI, RHI, T2);
        } else {
            li(T1, 1 << (s - 33));
            op(Opcode::ADD, RHI, RHI, T1);
        }
        if (s < 32) {
            op(Opcode::SRLI, RLO, RLO, 0, s);
            op(Opcode::SLLI, T1, RHI, 0, 32 - s);
            op(Opcode::OR, ACC, RLO, T1);
        } else if (s == 32) {
            op(Opcode::ADD, ACC, RHI, 0);
        } else {
            op(Opcode::SRAI, ACC, RHI, 0, s - 32);
        }
        op(Opcode::ADDI, ACC, ACC, 0, L.zp_out);
        clamp_low(ACC, L.out_lane_lo());
        clamp_high(ACC, L.out_lane_hi());
    }

    /// Stores the code in ACC for output channel oc at output position pos.
    /// INT4 outputs pair adjacent channels into one byte via T3.
    void store_out(int out_width, int cout, int oc, int64_t pos_byte_base, int8_t pad_code) {
        if (out_width == 8) {
            sb(ACC, BOUT, static_cast<int32_t>(pos_byte_base + oc));
            return;
        }
        const int64_t byte_off = pos_byte_base + oc / 2;
        if (oc % 2 == 0) {
            if (oc == cout - 1) {
                op(Opcode::ANDI, ACC, ACC, 0, 15);
                op(Opcode::ORI, ACC, ACC, 0, (pad_code & 0xF) << 4);
                sb(ACC, BOUT, static_cast<int32_t>(byte_off));
            } else {
                op(Opcode::ANDI, T3, ACC, 0, 15);
            }
        } else {
            op(Opcode::ANDI, ACC, ACC, 0, 15);
            op(Opcode::SLLI, ACC, ACC, 0, 4);
            op(Opcode::OR, ACC, ACC, T3);
            sb(ACC, BOUT, static_cast<int32_t>(byte_off));
        }
    }
};

void emit_conv(Emitter& e, const QuantLayerInt& L, uint32_t in_addr, uint32_t w_addr, uint32_t out_addr) {
    const Geom g = geom_of(L);
    const int il = in_lanes(L);
    const int lpw = 32 / L.width;
    const int full = il / lpw;
    const int left = il % lpw;
    const int wpp_in = (il + lpw - 1) / lpw;
    const int kk = g.k * g.k;
    const std::vector<int8_t> lanes = weight_lanes(L);
    const std::vector<int64_t> sumw = weight_position_sums(lanes, L.cout, kk, il);
    const int out_lpw = 32 / L.out_width;
    const int wpp_out = (L.cout + out_lpw - 1) / out_lpw;
    const int8_t out_pad = static_cast<int8_t>(clamp_to_lane(L.zp_out, L.out_width));

    e.li(BIN, in_addr);
    e.li(BW, w_addr);
    e.li(BOUT, out_addr);
    for (int oy = 0; oy < g.h; ++oy) {
        for (int ox = 0; ox < g.w; ++ox) {
            const int64_t pos_byte_base = (static_cast<int64_t>(oy) * g.w + ox) * wpp_out * 4;
            for (int oc = 0; oc < L.cout; ++oc) {
                int64_t bias = L.bias_q[oc];
                for (int ky = 0; ky < g.k; ++ky) {
                    const int iy = oy - g.pad + ky;
                    if (iy < 0 || iy >= g.h) continue;
                    for (int kx = 0; kx < g.k; ++kx) {
                        const int ix = ox - g.pad + kx;
                        if (ix < 0 || ix >= g.w) continue;
                        bias -= static_cast<int64_t>(L.zp_in) * sumw[static_cast<size_t>(oc) * kk + ky * g.k + kx];
                    }
                }
                e.li(ACC, bias);
                for (int ky = 0; ky < g.k; ++ky) {
                    const int iy = oy - g.pad + ky;
                    if (iy < 0 || iy >= g.h) continue;
                    for (int kx = 0; kx < g.k; ++kx) {
                        const int ix = ox - g.pad + kx;
                        if (ix < 0 || ix >= g.w) continue;
                        const int ki = ky * g.k + kx;
                        const int64_t wword = (static_cast<int64_t>(oc) * kk + ki) * wpp_in;
                        const int64_t xword = (static_cast<int64_t>(iy) * g.w + ix) * wpp_in;
                        for (int chunk = 0; chunk < full; ++chunk) {
                            e.lw(RW, BW, static_cast<int32_t>(4 * (wword + chunk)));
                            e.lw(RX, BIN, static_cast<int32_t>(4 * (xword + chunk)));
                            e.sdotp_acc(L.width, ACC, RW, RX);
                        }
                        for (int l = 0; l < left; ++l) {
                            const int byte_in_word = L.width == 8 ? l : l / 2;
                            e.load_lane(T1, BW, L.width, 4 * (wword + full) + byte_in_word, l % 2);
                            e.load_lane(T0, BIN, L.width, 4 * (xword + full) + byte_in_word, l % 2);
                            e.op(Opcode::MUL, T0, T0, T1);
                            e.op(Opcode::ADD, ACC, ACC, T0);
                        }
                    }
                }
                if (L.relu) e.relu(ACC);
                e.requant(L);
                e.store_out(L.out_width, L.cout, oc, pos_byte_base, out_pad);
            }
        }
    }
}

void emit_pool(Emitter& e, int c, int h, int w, int width, int8_t pad_code, uint32_t in_addr, uint32_t out_addr) {
    const int lpw = 32 / width;
    const int wpp = (c + lpw - 1) / lpw;
    const int oh = h / 2, ow = w / 2;
    e.li(BIN, in_addr);
    e.li(BOUT, out_addr);
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const int64_t pos_byte_base = (static_cast<int64_t>(oy) * ow + ox) * wpp * 4;
            for (int ci = 0; ci < c; ++ci) {
                const int byte_in_word = width == 8 ? ci % lpw : (ci % lpw) / 2;
                bool first = true;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const int64_t in_pos = static_cast<int64_t>(2 * oy + dy) * w + (2 * ox + dx);
                        const int64_t off = in_pos * wpp * 4 + (ci / lpw) * 4 + byte_in_word;
                        if (first) {
                            e.load_lane(ACC, BIN, width, off, ci % 2);
                            first = false;
                            continue;
                        }
                        e.load_lane(T0, BIN, width, off, ci % 2);
                        // ACC = max(ACC, T0)
                        e.op(Opcode::SLT, T1, ACC, T0);
                        e.op(Opcode::SUB, T1, 0, T1);
                        e.op(Opcode::XOR, T2, ACC, T0);
                        e.op(Opcode::AND, T2, T2, T1);
                        e.op(Opcode::XOR, ACC, ACC, T2);
                    }
                }
                e.store_out(width, c, ci, pos_byte_base, pad_code);
            }
        }
    }
}

uint32_t words_of(const PackedTensor& t) { return static_cast<uint32_t>(t.word_count()); }

uint32_t act_words(int c, int h, int w, int width) {
    const int lpw = 32 / width;
    const int wpp = (c + lpw - 1) / lpw;
    return static_cast<uint32_t>(h) * w * wpp;
}

}  // namespace

KernelProgram build_conv_program(const QuantLayerInt& layer) {
    const Geom g = geom_of(layer);
    const int il = in_lanes(layer);
    KernelProgram kp;
    const uint32_t in_words = act_words(layer.kind == QuantLayerInt::Kind::kConv ? layer.cin : il, g.h, g.w, layer.width);
    const std::vector<uint32_t> blob = pack_weight_blob(layer);
    const uint32_t out_words = act_words(layer.cout, g.h, g.w, layer.out_width);
    const uint32_t in_addr = 0;
    const uint32_t w_addr = in_words * 4;
    const uint32_t out_addr = w_addr + static_cast<uint32_t>(blob.size()) * 4;
    kp.regions = {{"in", in_addr, in_words},
                  {"weights", w_addr, static_cast<uint32_t>(blob.size())},
                  {"out", out_addr, out_words}};
    kp.in_addr = in_addr;
    kp.out_addr = out_addr;
    kp.out_c = layer.cout;
    kp.out_h = g.h;
    kp.out_w = g.w;
    kp.out_width = layer.out_width;
    kp.out_pad = static_cast<int8_t>(clamp_to_lane(layer.zp_out, layer.out_width));
    kp.image.assign(in_words + blob.size() + out_words, 0);
    std::copy(blob.begin(), blob.end(), kp.image.begin() + in_words);
    std::fill(kp.image.begin() + in_words + blob.size(), kp.image.end(), pad_word(layer.out_width, kp.out_pad));
    Emitter e;
    emit_conv(e, layer, in_addr, w_addr, out_addr);
    kp.prog = std::move(e.prog);
    kp.sdotp_count = e.sdotp;
    kp.expected_cycles = kp.prog.size();
    return kp;
}

KernelProgram build_pool_program(int c, int h, int w, int width, int8_t pad_code) {
    KernelProgram kp;
    const uint32_t in_words = act_words(c, h, w, width);
    const uint32_t out_words = act_words(c, h / 2, w / 2, width);
    kp.in_addr = 0;
    kp.out_addr = in_words * 4;
    kp.regions = {{"in", 0, in_words}, {"out", kp.out_addr, out_words}};
    kp.out_c = c;
    kp.out_h = h / 2;
    kp.out_w = w / 2;
    kp.out_width = width;
    kp.out_pad = pad_code;
    kp.image.assign(in_words + out_words, 0);
    std::fill(kp.image.begin() + in_words, kp.image.end(), pad_word(width, pad_code));
    Emitter e;
    emit_pool(e, c, h, w, width, pad_code, kp.in_addr, kp.out_addr);
    kp.prog = std::move(e.prog);
    kp.sdotp_count = 0;
    kp.expected_cycles = kp.prog.size();
    return kp;
}

PackedTensor run_kernel_program(const KernelProgram& kp, const PackedTensor& in, const isa::EnergyModel& energy) {
    const Region& rin = kp.regions.front();
    require(words_of(in) == rin.words, "run_kernel_program: input word count mismatch");
    isa::Machine m(kp.image.size() * 4);
    for (size_t i = 0; i < kp.image.size(); ++i) m.store_word(static_cast<uint32_t>(4 * i), kp.image[i]);
    for (size_t i = 0; i < in.words.size(); ++i) m.store_word(kp.in_addr + static_cast<uint32_t>(4 * i), in.words[i]);
    isa::ExecOptions opts;
    opts.energy = energy;
    isa::execute_or_throw(m, kp.prog, opts);
    require(m.cycles == kp.expected_cycles, "run_kernel_program: cycle count deviates from the static program size");
    PackedTensor out;
    out.c = kp.out_c;
    out.h = kp.out_h;
    out.w = kp.out_w;
    out.width = kp.out_width;
    out.pad_code = kp.out_pad;
    out.words.resize(act_words(kp.out_c, kp.out_h, kp.out_w, kp.out_width));
    for (size_t i = 0; i < out.words.size(); ++i) out.words[i] = m.load_word(kp.out_addr + static_cast<uint32_t>(4 * i));
    return out;
}

double NetworkProgram::energy_estimate(const isa::EnergyModel& e) const {
    return static_cast<double>(prog.size() - sdotp_count) * e.base + static_cast<double>(sdotp_count) * e.sdotp;
}

NetworkProgram build_network_program(const QuantizedNetwork& qnet) {
    NetworkProgram np;
    const SeedConfig& cfg = qnet.cfg;
    struct Buf {
        uint32_t addr;
        uint32_t words;
        int8_t pad;
        int width;
    };
    uint32_t cursor = 0;
    auto alloc = [&](const std::string& name, uint32_t words) {
        np.regions.push_back({name, cursor, words});
        const uint32_t addr = cursor;
        cursor += words * 4;
        return addr;
    };

    const uint32_t in_words = act_words(1, cfg.in_h, cfg.in_w, qnet.input.width);
    const int8_t in_pad = static_cast<int8_t>(clamp_to_lane(qnet.input.zp, qnet.input.width));
    np.input_addr = alloc("input", in_words);
    np.input_c = 1;
    np.input_h = cfg.in_h;
    np.input_w = cfg.in_w;
    np.input_width = qnet.input.width;
    np.input_pad = in_pad;

    const std::vector<const QuantLayerInt*> layers = {&qnet.conv1, &qnet.conv2, &qnet.fc1, &qnet.fc2};
    std::vector<uint32_t> w_addrs;
    std::vector<std::vector<uint32_t>> blobs;
    for (const QuantLayerInt* l : layers) {
        blobs.push_back(pack_weight_blob(*l));
        w_addrs.push_back(alloc(l->name + ".w", static_cast<uint32_t>(blobs.back().size())));
    }
    const Buf act1{alloc("act1", act_words(cfg.c1, cfg.in_h, cfg.in_w, qnet.conv1.out_width)),
                   act_words(cfg.c1, cfg.in_h, cfg.in_w, qnet.conv1.out_width),
                   static_cast<int8_t>(clamp_to_lane(qnet.conv1.zp_out, qnet.conv1.out_width)), qnet.conv1.out_width};
    const Buf pooled{alloc("pooled", act_words(cfg.c1, cfg.pooled_h(), cfg.pooled_w(), qnet.conv1.out_width)),
                     act_words(cfg.c1, cfg.pooled_h(), cfg.pooled_w(), qnet.conv1.out_width), act1.pad, act1.width};
    const Buf act2{alloc("act2", act_words(cfg.c2, cfg.pooled_h(), cfg.pooled_w(), qnet.conv2.out_width)),
                   act_words(cfg.c2, cfg.pooled_h(), cfg.pooled_w(), qnet.conv2.out_width),
                   static_cast<int8_t>(clamp_to_lane(qnet.conv2.zp_out, qnet.conv2.out_width)), qnet.conv2.out_width};
    const Buf act3{alloc("act3", act_words(cfg.f1, 1, 1, qnet.fc1.out_width)),
                   act_words(cfg.f1, 1, 1, qnet.fc1.out_width),
                   static_cast<int8_t>(clamp_to_lane(qnet.fc1.zp_out, qnet.fc1.out_width)), qnet.fc1.out_width};
    const Buf logits{alloc("logits", act_words(cfg.classes, 1, 1, 8)), act_words(cfg.classes, 1, 1, 8),
                     static_cast<int8_t>(clamp_to_lane(qnet.fc2.zp_out, 8)), 8};
    np.output_addr = logits.addr;
    np.out_c = cfg.classes;
    np.out_width = 8;
    np.out_pad = logits.pad;
    np.mem_bytes = cursor;

    // static memory image: weight blobs plus pad-initialized buffers
    np.image.assign(cursor / 4, 0);
    for (size_t i = 0; i < layers.size(); ++i) {
        std::copy(blobs[i].begin(), blobs[i].end(), np.image.begin() + w_addrs[i] / 4);
    }
    for (uint32_t i = 0; i < in_words; ++i) np.image[np.input_addr / 4 + i] = pad_word(qnet.input.width, in_pad);
    for (const Buf* b : {&act1, &pooled, &act2, &act3, &logits}) {
        for (uint32_t i = 0; i < b->words; ++i) np.image[b->addr / 4 + i] = pad_word(b->width, b->pad);
    }

    Emitter e;
    auto mark = [&](const std::string& name, auto&& emit_fn) {
        LayerProgramInfo info;
        info.name = name;
        info.begin = e.prog.size();
        const uint64_t sd0 = e.sdotp;
        emit_fn();
        info.end = e.prog.size();
        info.sdotp = e.sdotp - sd0;
        np.layers.push_back(info);
    };
    mark("conv1", [&] { emit_conv(e, qnet.conv1, np.input_addr, w_addrs[0], act1.addr); });
    mark("pool", [&] {
        emit_pool(e, cfg.c1, cfg.in_h, cfg.in_w, qnet.conv1.out_width, act1.pad, act1.addr, pooled.addr);
    });
    mark("conv2", [&] { emit_conv(e, qnet.conv2, pooled.addr, w_addrs[1], act2.addr); });
    mark("fc1", [&] { emit_conv(e, qnet.fc1, act2.addr, w_addrs[2], act3.addr); });
    mark("fc2", [&] { emit_conv(e, qnet.fc2, act3.addr, w_addrs[3], logits.addr); });
    np.prog = std::move(e.prog);
    np.sdotp_count = e.sdotp;
    return np;
}

int argmax_codes(const std::vector<int8_t>& codes) {
    int best = 0;
    for (size_t i = 1; i < codes.size(); ++i) {
        if (codes[i] > codes[best]) best = static_cast<int>(i);
    }
    return best;
}

std::vector<int8_t> host_logits_codes(const QuantizedNetwork& qnet, const std::vector<int8_t>& frame_codes) {
    const SeedConfig& cfg = qnet.cfg;
    const int8_t in_pad = static_cast<int8_t>(clamp_to_lane(qnet.input.zp, qnet.input.width));
    PackedTensor t = pack_codes(frame_codes, 1, cfg.in_h, cfg.in_w, qnet.input.width, in_pad);
    t = conv2d_int(t, qnet.conv1);
    t = maxpool_int(t);
    t = conv2d_int(t, qnet.conv2);
    t = linear_int(t, qnet.fc1);
    t = linear_int(t, qnet.fc2);
    return unpack_codes(t);
}

RunResult run_network_int_host(const QuantizedNetwork& qnet, const std::vector<int8_t>& frame_codes) {
    RunResult r;
    r.logits = host_logits_codes(qnet, frame_codes);
    r.prediction = argmax_codes(r.logits);
    const NetworkProgram np = build_network_program(qnet);
    r.cycles = np.prog.size();
    r.energy_units = np.energy_estimate();
    for (const auto& l : np.layers) r.layer_cycles.emplace_back(l.name, l.cycle_count());
    return r;
}

SimRunner::SimRunner(const QuantizedNetwork& qnet, const isa::EnergyModel& energy)
    : np_(build_network_program(qnet)), energy_(energy) {}

RunResult SimRunner::run(const std::vector<int8_t>& frame_codes) {
    require(frame_codes.size() == static_cast<size_t>(np_.input_c) * np_.input_h * np_.input_w,
            "sim run: bad frame size");
    isa::Machine m(np_.mem_bytes);
    for (size_t i = 0; i < np_.image.size(); ++i) m.store_word(static_cast<uint32_t>(4 * i), np_.image[i]);
    const PackedTensor in =
        pack_codes(frame_codes, np_.input_c, np_.input_h, np_.input_w, np_.input_width, np_.input_pad);
    for (size_t i = 0; i < in.words.size(); ++i) {
        m.store_word(np_.input_addr + static_cast<uint32_t>(4 * i), in.words[i]);
    }
    isa::ExecOptions opts;
    opts.energy = energy_;
    isa::execute_or_throw(m, np_.prog, opts);
    require(m.cycles == np_.prog.size(), "sim run: cycle count deviates from the static program size");
    PackedTensor out;
    out.c = np_.out_c;
    out.h = 1;
    out.w = 1;
    out.width = np_.out_width;
    out.pad_code = np_.out_pad;
    out.words.resize(act_words(np_.out_c, 1, 1, np_.out_width));
    for (size_t i = 0; i < out.words.size(); ++i) {
        out.words[i] = m.load_word(np_.output_addr + static_cast<uint32_t>(4 * i));
    }
    RunResult r;
    r.logits = unpack_codes(out);
    r.prediction = argmax_codes(r.logits);
    r.cycles = m.cycles;
    r.energy_units = m.energy_units;
    for (const auto& l : np_.layers) r.layer_cycles.emplace_back(l.name, l.cycle_count());
    return r;
}

}  // namespace ircount::kern
