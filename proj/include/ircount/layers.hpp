#pragma once

#include <vector>

#include "ircount/rng.hpp"
#include "ircount/tensor.hpp"

namespace ircount {

/// 2-D convolution, stride 1, square kernel, zero padding.
struct ConvLayer {
    int in_c = 0, out_c = 0, k = 0, pad = 0;
    Tensor w;  // (out_c, in_c, k, k)
    Tensor b;  // (out_c)

    ConvLayer() = default;
    ConvLayer(int in_c_, int out_c_, int k_, int pad_);

    void init_params(Rng& rng);
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);

    bool has_cache() const { return cached_; }

private:
    Tensor x_;
    bool cached_ = false;
};

/// Per-channel batch normalization. Training mode normalizes with batch
/// statistics and updates the running estimates; eval mode uses the
/// running estimates.
struct BatchNorm {
    int channels = 0;
    float eps = 1e-5f;
    float momentum = 0.1f;
    Tensor gamma, beta;
    Tensor running_mean, running_var;

    BatchNorm() = default;
    explicit BatchNorm(int channels_);

    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& gy);

private:
    Tensor x_hat_;
    std::vector<float> inv_std_;
    bool training_ = false;
    bool cached_ = false;
    size_t count_ = 0;
};

/// 2x2 max pooling with stride 2. Backward routes the gradient to the
/// first (lowest linear index) argmax of each window.
struct MaxPool2x2 {
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);

private:
    std::vector<size_t> argmax_;
    std::array<int, 4> in_shape_{};
    bool cached_ = false;
};

struct ReLU {
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);

private:
    std::vector<uint8_t> mask_;
    bool cached_ = false;
};

/// Fully connected layer on (N, in, 1, 1) tensors.
struct Linear {
    int in_f = 0, out_f = 0;
    Tensor w;  // (out_f, in_f)
    Tensor b;  // (out_f)

    Linear() = default;
    Linear(int in_f_, int out_f_);

    void init_params(Rng& rng);
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);

private:
    Tensor x_;
    bool cached_ = false;
};

/// Softmax + mean cross-entropy over class indices.
struct SoftmaxCrossEntropy {
    /// Returns the mean loss; caches softmax probabilities.
    double forward(const Tensor& logits, const std::vector<int>& labels);
    /// Gradient w.r.t. logits, already divided by the batch size.
    Tensor backward();

private:
    Tensor probs_;
    std::vector<int> labels_;
    bool cached_ = false;
};

}  // namespace ircount
