#pragma once

#include <array>
#include <string>
#include <vector>

#include "ircount/network.hpp"

namespace ircount {

/// Per-layer bit-width assignment. One width covers both the weights and
/// the input activations of that layer.
struct QuantSpec {
    std::array<int, 4> bits{8, 8, 8, 8};

    std::string to_string() const;               // "8-8-4-8"
    static QuantSpec from_string(const std::string& s);
    bool operator==(const QuantSpec&) const = default;
};

/// All 2^4 layer-wise INT4/INT8 assignments in deterministic order, or the
/// 8 with the first layer pinned to 8 bits.
std::vector<QuantSpec> enumerate_specs(bool first_fixed_8);

/// Dequantized image of v under the affine transform
///   q = round_half_up((clamp(v,a,b) - a) / (b - a) * (2^bits - 1)),
/// i.e. clamp, quantize, map back to a + q*step.
double fake_quant_value(double v, double alpha, double beta, int bits);
/// Quantization step (beta - alpha) / (2^bits - 1).
double quant_step(double alpha, double beta, int bits);
/// Elementwise fake quantization (no gradient tracking).
Tensor fake_quant_tensor(const Tensor& t, double alpha, double beta, int bits);

/// Range policy for weights: a min/max-derived grid whose zero sits exactly
/// on the code center, so stored signed codes represent w = code * step.
struct WeightRange {
    double step;   // quantization step (also the scale of stored codes)
    double alpha;  // -2^(bits-1) * step
    double beta;   // (2^(bits-1)-1) * step
};
WeightRange weight_range(const Tensor& w, int bits);

/// Folds batch-norm statistics into the preceding convolution weights and
/// biases; the returned network has no BN stages.
SeedNetwork fold_bn(const SeedNetwork& net);

/// Learnable clipping range of one activation tensor.
struct ActQuantizer {
    float alpha = 0.0f;
    float beta = 1.0f;
    int bits = 8;
    float galpha = 0.0f;
    float gbeta = 0.0f;
    bool calibrated = false;
};

/// Fake quantization with learned-range gradients: the forward records per
/// element whether it was in range or clipped; the backward passes in-range
/// gradients straight through and routes clipped ones to alpha/beta.
Tensor act_quant_forward(const ActQuantizer& q, const Tensor& t, std::vector<int8_t>& region);
Tensor act_quant_backward(ActQuantizer& q, const Tensor& g, const std::vector<int8_t>& region);

/// BN-folded network trained with fake quantization on every weight tensor
/// and inter-layer activation. Quantizer sites: q0 input, q1..q3 after each
/// ReLU, q4 on the logits (always 8 bits).
struct QatNetwork {
    SeedNetwork net;  // with_bn == false
    QuantSpec spec;
    std::array<ActQuantizer, 5> acts;

    QatNetwork() = default;
    QatNetwork(const SeedNetwork& folded, const QuantSpec& spec_);

    /// Min/max calibration pass for the activation ranges.
    void calibrate(const Tensor& x);
    /// Re-derives the logits quantizer range from the trained model. The
    /// loss never sees quantized logits; this range exists for deployment.
    void recalibrate_logits(const Tensor& x);
    Tensor forward(const Tensor& batch, bool training);
    double loss_backward(const Tensor& logits, const std::vector<int>& labels);
    void zero_grads();

private:
    struct FqState {
        std::vector<int8_t> region;  // 0 in-range, 1 clipped low, 2 clipped high
    };
    Tensor act_forward(int qi, const Tensor& t);
    Tensor act_backward(int qi, const Tensor& g);
    std::array<FqState, 5> fq_;
    std::vector<std::vector<float>> saved_w_;
    bool weights_swapped_ = false;
    bool forward_done_ = false;
    void swap_in_quantized_weights();
    void restore_weights();
};

struct QatConfig {
    int epochs = 8;
    int batch = 32;
    double lr = 1e-3;
    uint64_t seed = 1;
};

/// Quantization-aware training; calibrates first if needed.
void qat_train(QatNetwork& qnet, const Tensor& x, const std::vector<int>& labels, const QatConfig& cfg);

/// One integer layer: signed weight codes, 32-bit bias, fixed-point
/// requantization (multiplier + right shift, round half up) and stored-code
/// zero points. Zero points may exceed the lane range; they only enter
/// 32-bit folds.
struct QuantLayerInt {
    enum class Kind { kConv, kFc };
    Kind kind = Kind::kConv;
    std::string name;
    int cin = 0, cout = 0, k = 1, pad = 0, h_in = 1, w_in = 1;
    int up_channels = 0, up_spatial = 1;  // fc only: flatten origin (C, H*W)
    int width = 8;      // lane width of weights and input activations
    int out_width = 8;  // lane width of the requantized output
    bool relu = false;
    std::vector<int8_t> w;        // (cout, cin, k, k) for conv; (cout, cin) for fc
    std::vector<int32_t> bias_q;  // per output channel
    int32_t mult = 0;
    int shift = 31;
    int32_t zp_in = 0, zp_out = 0;
    double s_w = 1.0, s_in = 1.0, s_out = 1.0;

    int lane_lo() const { return width == 8 ? -128 : -8; }
    int lane_hi() const { return width == 8 ? 127 : 7; }
    int out_lane_lo() const { return out_width == 8 ? -128 : -8; }
    int out_lane_hi() const { return out_width == 8 ? 127 : 7; }
};

struct InputQuant {
    double scale = 1.0;
    int32_t zp = 0;  // stored-code zero point
    int width = 8;
};

struct QuantizedNetwork {
    SeedConfig cfg;
    QuantSpec spec;
    InputQuant input;
    QuantLayerInt conv1, conv2, fc1, fc2;

    long long weight_bits() const;
    /// Model memory: packed weights plus 32-bit biases.
    long long memory_bytes() const;
};

/// Derives the pure-integer network from a trained fake-quantized one.
/// Activation ranges are nudged to integer zero points and biases are
/// quantized on the s_w*s_in grid; from there on the (mult, shift) pair is
/// the layer's output quantization.
QuantizedNetwork lower_to_integer(const QatNetwork& qat, const QuantSpec& spec);

/// Frame floats -> stored conv1 input codes (row-major 8x8).
std::vector<int8_t> quantize_frame(const QuantizedNetwork& qnet, const float* frame, size_t n);

/// Double-precision reference of one integer layer: dequantize codes, run
/// the float layer, requantize with the frozen constants. Input/output are
/// logical code arrays in (C,H,W) row-major order.
std::vector<int8_t> reference_layer_codes(const QuantLayerInt& layer, const std::vector<int8_t>& in);

/// Reference logits codes for a full network (includes the code-domain
/// max pool between the convolutions).
std::vector<int8_t> reference_logits_codes(const QuantizedNetwork& qnet, const std::vector<int8_t>& in_codes);

}  // namespace ircount
