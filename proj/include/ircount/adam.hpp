#pragma once

#include <cstddef>
#include <vector>

namespace ircount {

/// Adam with bias correction over raw float buffers. Parameters register
/// in groups so e.g. architecture masks can train at their own rate.
class Adam {
public:
    struct Hyper {
        double lr = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
    };

    /// Registers a parameter buffer with its gradient buffer. The learning
    /// rate is per slot; other constants are shared.
    void add_param(float* data, const float* grad, size_t n, double lr);

    Hyper hyper;
    long long step_count() const { return step_; }

    /// One update over every registered slot. Gradients are read as-is.
    void step();

private:
    struct Slot {
        float* data;
        const float* grad;
        size_t n;
        double lr;
        std::vector<double> m, v;
    };
    std::vector<Slot> slots_;
    long long step_ = 0;
};

}  // namespace ircount
