#include "ircount/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ircount {

Tensor Tensor::reshaped(int n_, int c_, int h_, int w_) const {
    const size_t want = static_cast<size_t>(n_) * c_ * h_ * w_;
    if (want != data.size()) throw std::runtime_error("tensor reshape: element count mismatch");
    Tensor out;
    out.shape = {n_, c_, h_, w_};
    out.data = data;
    return out;
}

float Tensor::min_value() const {
    return data.empty() ? 0.0f : *std::min_element(data.begin(), data.end());
}

float Tensor::max_value() const {
    return data.empty() ? 0.0f : *std::max_element(data.begin(), data.end());
}

bool Tensor::all_finite() const {
    for (float v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::check_finite(const std::string& what) const {
    if (!all_finite()) throw std::runtime_error("non-finite values in " + what);
}

}  // namespace ircount
