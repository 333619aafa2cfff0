#include "ircount/network.hpp"

#include <stdexcept>

namespace ircount {

long long SeedConfig::param_count() const {
    long long total = 0;
    total += static_cast<long long>(c1) * 1 * 9 + c1;
    total += static_cast<long long>(c2) * c1 * 9 + c2;
    total += static_cast<long long>(f1) * flat_features() + f1;
    total += static_cast<long long>(classes) * f1 + classes;
    return total;
}

long long SeedConfig::mac_count() const {
    long long total = 0;
    total += static_cast<long long>(c1) * 1 * 9 * in_h * in_w;
    total += static_cast<long long>(c2) * c1 * 9 * pooled_h() * pooled_w();
    total += static_cast<long long>(f1) * flat_features();
    total += static_cast<long long>(classes) * f1;
    return total;
}

SeedNetwork::SeedNetwork(const SeedConfig& cfg_)
    : cfg(cfg_),
      conv1(1, cfg_.c1, 3, 1),
      conv2(cfg_.c1, cfg_.c2, 3, 1),
      bn1(cfg_.c1),
      bn2(cfg_.c2),
      fc1(cfg_.flat_features(), cfg_.f1),
      fc2(cfg_.f1, cfg_.classes) {}

void SeedNetwork::init_params(Rng& rng) {
    conv1.init_params(rng);
    conv2.init_params(rng);
    fc1.init_params(rng);
    fc2.init_params(rng);
}

Tensor SeedNetwork::forward(const Tensor& batch, bool training) {
    if (batch.c() != 1 || batch.h() != cfg.in_h || batch.w() != cfg.in_w) {
        throw std::runtime_error("forward: batch shape must be (N,1,8,8)");
    }
    batch.check_finite("input batch");
    Tensor t = conv1.forward(batch);
    if (cfg.with_bn) t = bn1.forward(t, training);
    t = relu1.forward(t);
    t = pool.forward(t);
    t = conv2.forward(t);
    if (cfg.with_bn) t = bn2.forward(t, training);
    t = relu2.forward(t);
    t = t.reshaped(t.n(), cfg.flat_features(), 1, 1);
    t = fc1.forward(t);
    t = relu3.forward(t);
    t = fc2.forward(t);
    t.check_finite("logits");
    forward_done_ = true;
    return t;
}

double SeedNetwork::loss_backward(const Tensor& logits, const std::vector<int>& labels) {
    if (!forward_done_) throw std::runtime_error("loss_backward: missing forward cache");
    const double loss = ce.forward(logits, labels);
    Tensor g = ce.backward();
    g = fc2.backward(g);
    g = relu3.backward(g);
    g = fc1.backward(g);
    g = g.reshaped(g.n(), cfg.c2, cfg.pooled_h(), cfg.pooled_w());
    g = relu2.backward(g);
    if (cfg.with_bn) g = bn2.backward(g);
    g = conv2.backward(g);
    g = pool.backward(g);
    g = relu1.backward(g);
    if (cfg.with_bn) g = bn1.backward(g);
    conv1.backward(g);
    return loss;
}

std::vector<ParamRef> SeedNetwork::params() {
    std::vector<ParamRef> out;
    out.push_back({&conv1.w, "conv1.weight", true});
    out.push_back({&conv1.b, "conv1.bias", false});
    if (cfg.with_bn) {
        out.push_back({&bn1.gamma, "bn1.gamma", false});
        out.push_back({&bn1.beta, "bn1.beta", false});
    }
    out.push_back({&conv2.w, "conv2.weight", true});
    out.push_back({&conv2.b, "conv2.bias", false});
    if (cfg.with_bn) {
        out.push_back({&bn2.gamma, "bn2.gamma", false});
        out.push_back({&bn2.beta, "bn2.beta", false});
    }
    out.push_back({&fc1.w, "fc1.weight", true});
    out.push_back({&fc1.b, "fc1.bias", false});
    out.push_back({&fc2.w, "fc2.weight", true});
    out.push_back({&fc2.b, "fc2.bias", false});
    return out;
}

void SeedNetwork::zero_grads() {
    for (auto& p : params()) {
        p.tensor->ensure_grad();
        p.tensor->zero_grad();
    }
}

int argmax_row(const Tensor& logits, int row) {
    int best = 0;
    for (int i = 1; i < logits.c(); ++i) {
        if (logits.at(row, i, 0, 0) > logits.at(row, best, 0, 0)) best = i;
    }
    return best;
}

}  // namespace ircount
