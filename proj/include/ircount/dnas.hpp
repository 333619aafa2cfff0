#pragma once

#include <string>
#include <vector>

#include "ircount/network.hpp"

namespace ircount {

enum class CostMetric { kParams, kMacs };

CostMetric cost_metric_from_string(const std::string& s);

/// Seed network decorated with one trainable mask value per output
/// channel/feature of conv1, conv2 and fc1. A channel is active while its
/// mask value is >= 0; the output layer is never masked.
struct MaskedNetwork {
    SeedNetwork net;
    Tensor theta1, theta2, theta3;

    MaskedNetwork() = default;
    explicit MaskedNetwork(const SeedNetwork& seed);

    static bool active(float theta_value) { return theta_value >= 0.0f; }

    int active_count(const Tensor& theta) const;

    /// Forward with binarized masks multiplied onto the activation of each
    /// maskable layer. Equivalent to running the plain network with the
    /// masked channels' parameter slices zeroed.
    Tensor forward(const Tensor& batch, bool training);
    /// Mean cross-entropy; fills gradients of weights and (via the
    /// straight-through window |theta| <= 1) of the mask values.
    double loss_backward(const Tensor& logits, const std::vector<int>& labels);

    /// Differentiable cost evaluated at the binarized masks. At any fully
    /// binarized point this equals the integer count of the extracted
    /// architecture.
    double cost(CostMetric metric) const;
    /// Adds scale * dCost/dtheta into the mask gradients.
    void cost_backward(CostMetric metric, double scale);

    void zero_grads();

private:
    Tensor z1_, z2_, z3_;  // pre-mask activations cached for mask gradients
    bool warned_empty_ = false;
    bool forward_done_ = false;
};

struct SearchConfig {
    double lambda = 0.0;
    CostMetric metric = CostMetric::kParams;
    int epochs = 18;
    int batch = 16;
    double lr = 1e-3;
    double mask_lr = 5e-2;
    uint64_t seed = 1;
};

/// Joint training of weights and masks minimizing
/// cross_entropy + lambda * cost / full_cost.
MaskedNetwork search(const SeedNetwork& seed, const Tensor& x, const std::vector<int>& labels,
                     const SearchConfig& cfg);

struct ExtractResult {
    SeedNetwork net;
    std::vector<int> kept1, kept2, kept3;
};

/// Materializes the pruned architecture: masked channels are physically
/// removed from each layer's outputs and the next layer's inputs. Forward
/// results are float-exact equal to the masked forward.
/// With keep_alive, a fully masked layer retains its largest-theta channel;
/// otherwise it is an error suggesting a smaller lambda.
ExtractResult extract(const MaskedNetwork& mnet, bool keep_alive = true);

}  // namespace ircount
