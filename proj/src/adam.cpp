#include "ircount/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace ircount {

void Adam::add_param(float* data, const float* grad, size_t n, double lr) {
    if (data == nullptr || grad == nullptr) throw std::runtime_error("adam: null parameter buffer");
    Slot s;
    s.data = data;
    s.grad = grad;
    s.n = n;
    s.lr = lr;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    slots_.push_back(std::move(s));
}

void Adam::step() {
    ++step_;
    const double b1 = hyper.beta1, b2 = hyper.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (auto& s : slots_) {
        for (size_t i = 0; i < s.n; ++i) {
            const double g = s.grad[i];
            s.m[i] = b1 * s.m[i] + (1.0 - b1) * g;
            s.v[i] = b2 * s.v[i] + (1.0 - b2) * g * g;
            const double mhat = s.m[i] / bc1;
            const double vhat = s.v[i] / bc2;
            s.data[i] = static_cast<float>(s.data[i] - s.lr * mhat / (std::sqrt(vhat) + hyper.eps));
        }
    }
}

}  // namespace ircount
