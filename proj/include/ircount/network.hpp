#pragma once

#include <string>
#include <vector>

#include "ircount/layers.hpp"

namespace ircount {

/// Widths of the fixed 4-layer topology. The layer sequence never changes:
/// conv(3x3,pad1) -> bn -> relu -> pool(2x2) -> conv(3x3,pad1) -> bn -> relu
/// -> fc -> relu -> fc(classes). Only the channel/feature counts vary.
struct SeedConfig {
    int c1 = 64;
    int c2 = 64;
    int f1 = 64;
    int classes = 4;
    int in_h = 8;
    int in_w = 8;
    bool with_bn = true;

    int pooled_h() const { return in_h / 2; }
    int pooled_w() const { return in_w / 2; }
    int flat_features() const { return c2 * pooled_h() * pooled_w(); }
    long long param_count() const;
    long long mac_count() const;
};

struct ParamRef {
    Tensor* tensor;
    std::string name;
    bool is_weight;  // weights get Kaiming init; biases/bn handled separately
};

/// The fixed-topology CNN. Forward caches every intermediate so
/// loss_backward can fill all parameter gradients.
struct SeedNetwork {
    SeedConfig cfg;
    ConvLayer conv1, conv2;
    BatchNorm bn1, bn2;
    Linear fc1, fc2;
    MaxPool2x2 pool;
    ReLU relu1, relu2, relu3;
    SoftmaxCrossEntropy ce;

    SeedNetwork() = default;
    explicit SeedNetwork(const SeedConfig& cfg_);

    void init_params(Rng& rng);

    /// Batch (N,1,8,8) -> logits (N,classes).
    Tensor forward(const Tensor& batch, bool training);
    /// Requires a prior forward. Returns the mean cross-entropy and fills
    /// parameter gradients (accumulating; call zero_grads first).
    double loss_backward(const Tensor& logits, const std::vector<int>& labels);

    std::vector<ParamRef> params();
    void zero_grads();

private:
    bool forward_done_ = false;
};

/// Predicted class of one logits row; ties resolve to the lowest index.
int argmax_row(const Tensor& logits, int row);

}  // namespace ircount
