#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ircount/isa.hpp"
#include "ircount/quant.hpp"

namespace ircount::kern {

/// Activation tensor packed for the SIMD datapath: positions (y,x) in
/// row-major order, channels innermost, each position's channel run padded
/// to a word boundary. Padding lanes hold the (lane-clamped) zero-point
/// code; they are never consumed by the compute paths.
struct PackedTensor {
    int c = 0, h = 0, w = 0;
    int width = 8;
    int8_t pad_code = 0;
    std::vector<uint32_t> words;

    int lanes_per_word() const { return 32 / width; }
    int words_per_pos() const { return (c + lanes_per_word() - 1) / lanes_per_word(); }
    size_t word_count() const { return static_cast<size_t>(h) * w * words_per_pos(); }
    size_t word_index(int y, int x, int chunk) const {
        return (static_cast<size_t>(y) * w + x) * words_per_pos() + chunk;
    }
    int code(int ci, int y, int x) const;
    void set_code(int ci, int y, int x, int v);
};

uint32_t pad_word(int width, int8_t pad_code);

/// Logical (C,H,W) row-major codes <-> packed words.
PackedTensor pack_codes(const std::vector<int8_t>& logical, int c, int h, int w, int width, int8_t pad_code);
std::vector<int8_t> unpack_codes(const PackedTensor& t);

/// Lane-space input width of a layer: conv layers use their channel count;
/// a linear layer fed by a conv output sees the word-aligned flattened run.
int in_lanes(const QuantLayerInt& layer);

/// Weight values in kernel lane order (oc, ky, kx, input lane); linear
/// layers get the flatten permutation applied and zeros on padding lanes.
std::vector<int8_t> weight_lanes(const QuantLayerInt& layer);

/// Packed weight blob: per (oc, ky, kx) a word-aligned lane run. This is
/// the normative byte layout shared by the model file and the simulator
/// memory image.
std::vector<uint32_t> pack_weight_blob(const QuantLayerInt& layer);

/// Reinterpret a (C,H,W) packed tensor as the (H*W*Cpad, 1, 1) input of a
/// 1x1 layer. No data movement: the flattened run is already contiguous.
PackedTensor flatten_view(const PackedTensor& t);

/// Host fast path. Bit-exact with the generated simulator programs.
PackedTensor conv2d_int(const PackedTensor& in, const QuantLayerInt& layer);
PackedTensor maxpool_int(const PackedTensor& in);
/// Flattens if needed, then delegates to conv2d_int (k=1, 1x1 maps).
PackedTensor linear_int(const PackedTensor& in, const QuantLayerInt& layer);

struct LayerProgramInfo {
    std::string name;
    size_t begin = 0, end = 0;  // [begin, end) instruction range
    uint64_t sdotp = 0;

    uint64_t cycle_count() const { return end - begin; }
};

struct Region {
    std::string name;
    uint32_t addr = 0;
    uint32_t words = 0;
};

/// Straight-line program for one layer (or the pooling stage) plus its
/// memory map. Cycle counts equal instruction counts and never depend on
/// the data.
struct KernelProgram {
    isa::Program prog;
    std::vector<Region> regions;  // in / weights / out
    std::vector<uint32_t> image;  // preloaded memory words (weights)
    uint32_t image_addr = 0;
    uint32_t in_addr = 0, out_addr = 0;
    int out_c = 0, out_h = 0, out_w = 0, out_width = 8;
    int8_t out_pad = 0;
    uint64_t expected_cycles = 0;
    uint64_t sdotp_count = 0;
};

KernelProgram build_conv_program(const QuantLayerInt& layer);
KernelProgram build_pool_program(int c, int h, int w, int width, int8_t pad_code);

/// Runs a single-layer program on the simulator and unpacks the result.
PackedTensor run_kernel_program(const KernelProgram& kp, const PackedTensor& in,
                                const isa::EnergyModel& energy = {});

/// Whole-network program: all layers concatenated over a static memory
/// image with per-layer instruction ranges.
struct NetworkProgram {
    isa::Program prog;
    std::vector<LayerProgramInfo> layers;
    std::vector<Region> regions;
    std::vector<uint32_t> image;
    uint32_t input_addr = 0;
    uint32_t output_addr = 0;
    int input_c = 0, input_h = 0, input_w = 0, input_width = 8;
    int out_c = 0, out_width = 8;
    int8_t input_pad = 0, out_pad = 0;
    size_t mem_bytes = 0;
    uint64_t sdotp_count = 0;
    double energy_estimate(const isa::EnergyModel& e = {}) const;
};

NetworkProgram build_network_program(const QuantizedNetwork& qnet);

struct RunResult {
    std::vector<int8_t> logits;  // output codes
    int prediction = 0;          // argmax, lowest index on ties
    uint64_t cycles = 0;
    double energy_units = 0.0;
    std::vector<std::pair<std::string, uint64_t>> layer_cycles;
};

/// Host layer chain only: frame codes in, logits codes out.
std::vector<int8_t> host_logits_codes(const QuantizedNetwork& qnet, const std::vector<int8_t>& frame_codes);

/// Host execution; cycle/energy figures are the static program costs.
RunResult run_network_int_host(const QuantizedNetwork& qnet, const std::vector<int8_t>& frame_codes);

/// Simulator execution over a prebuilt program.
class SimRunner {
public:
    explicit SimRunner(const QuantizedNetwork& qnet, const isa::EnergyModel& energy = {});
    RunResult run(const std::vector<int8_t>& frame_codes);
    const NetworkProgram& program() const { return np_; }

private:
    NetworkProgram np_;
    isa::EnergyModel energy_;
};

int argmax_codes(const std::vector<int8_t>& codes);

}  // namespace ircount::kern
