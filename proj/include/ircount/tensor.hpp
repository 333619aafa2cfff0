#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace ircount {

/// Dense 4-D float32 array in NCHW order with an optional gradient buffer
/// of identical shape. This is the unit of all training-side math.
struct Tensor {
    std::array<int, 4> shape{0, 0, 0, 0};
    std::vector<float> data;
    std::vector<float> grad;  // empty when gradients are not tracked

    Tensor() = default;
    Tensor(int n, int c, int h, int w) : shape{n, c, h, w}, data(static_cast<size_t>(n) * c * h * w, 0.0f) {}

    static Tensor zeros(int n, int c, int h, int w) { return Tensor(n, c, h, w); }
    /// 1-D parameter vector stored as shape (n,1,1,1).
    static Tensor vec(int n) { return Tensor(n, 1, 1, 1); }

    size_t numel() const { return data.size(); }
    int n() const { return shape[0]; }
    int c() const { return shape[1]; }
    int h() const { return shape[2]; }
    int w() const { return shape[3]; }

    size_t index(int n_, int c_, int h_, int w_) const {
        return ((static_cast<size_t>(n_) * shape[1] + c_) * shape[2] + h_) * shape[3] + w_;
    }
    float& at(int n_, int c_, int h_, int w_) { return data[index(n_, c_, h_, w_)]; }
    const float& at(int n_, int c_, int h_, int w_) const { return data[index(n_, c_, h_, w_)]; }
    float& gat(int n_, int c_, int h_, int w_) { return grad[index(n_, c_, h_, w_)]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0f);
    }
    void zero_grad() {
        if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0f);
    }
    void fill(float v) { std::fill(data.begin(), data.end(), v); }

    /// Copy with a new shape; element count must match.
    Tensor reshaped(int n_, int c_, int h_, int w_) const;

    float min_value() const;
    float max_value() const;
    bool all_finite() const;
    /// Throws std::runtime_error naming `what` if any element is NaN/Inf.
    void check_finite(const std::string& what) const;
};

}  // namespace ircount
