#include "ircount/dnas.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "ircount/adam.hpp"

namespace ircount {

namespace {

double ste_window(float theta) { return std::fabs(theta) <= 1.0f ? 1.0 : 0.0; }

void apply_mask(Tensor& t, const Tensor& theta) {
    const int n = t.n(), c = t.c();
    const size_t plane = static_cast<size_t>(t.h()) * t.w();
    for (int ni = 0; ni < n; ++ni) {
        for (int ci = 0; ci < c; ++ci) {
            if (MaskedNetwork::active(theta.data[ci])) continue;
            float* p = &t.at(ni, ci, 0, 0);
            for (size_t i = 0; i < plane; ++i) p[i] = 0.0f;
        }
    }
}

/// Mask gradient contribution: dL/dtheta_c = sum(g * pre_mask) * ste.
void mask_backward(Tensor& g, const Tensor& pre_mask, Tensor& theta) {
    theta.ensure_grad();
    const int n = g.n(), c = g.c();
    const size_t plane = static_cast<size_t>(g.h()) * g.w();
    for (int ci = 0; ci < c; ++ci) {
        const double ste = ste_window(theta.data[ci]);
        double acc = 0.0;
        const bool keep = MaskedNetwork::active(theta.data[ci]);
        for (int ni = 0; ni < n; ++ni) {
            const float* gp = &g.at(ni, ci, 0, 0);
            const float* zp = &pre_mask.at(ni, ci, 0, 0);
            float* gw = &g.at(ni, ci, 0, 0);
            for (size_t i = 0; i < plane; ++i) {
                acc += static_cast<double>(gp[i]) * zp[i];
                if (!keep) gw[i] = 0.0f;
            }
        }
        theta.grad[ci] += static_cast<float>(ste * acc);
    }
}

struct CostTerms {
    double dn1, dn2, dn3;
    double value;
};

CostTerms cost_terms(const SeedConfig& cfg, double n1, double n2, double n3, CostMetric metric) {
    const double p = cfg.pooled_h() * cfg.pooled_w();
    const double cls = cfg.classes;
    CostTerms t{};
    if (metric == CostMetric::kParams) {
        t.value = 10.0 * n1 + n2 * (9.0 * n1 + 1.0) + n3 * (p * n2 + 1.0) + cls * n3 + cls;
        t.dn1 = 10.0 + 9.0 * n2;
        t.dn2 = 9.0 * n1 + 1.0 + p * n3;
        t.dn3 = p * n2 + 1.0 + cls;
    } else {
        const double s1 = cfg.in_h * cfg.in_w;
        t.value = 9.0 * n1 * s1 + 9.0 * n1 * n2 * p + n3 * n2 * p + cls * n3;
        t.dn1 = 9.0 * s1 + 9.0 * n2 * p;
        t.dn2 = 9.0 * n1 * p + n3 * p;
        t.dn3 = n2 * p + cls;
    }
    return t;
}

}  // namespace

CostMetric cost_metric_from_string(const std::string& s) {
    if (s == "params") return CostMetric::kParams;
    if (s == "macs") return CostMetric::kMacs;
    throw std::runtime_error("unknown cost metric: " + s);
}

MaskedNetwork::MaskedNetwork(const SeedNetwork& seed) : net(seed) {
    theta1 = Tensor::vec(net.cfg.c1);
    theta2 = Tensor::vec(net.cfg.c2);
    theta3 = Tensor::vec(net.cfg.f1);
    theta1.fill(1.0f);
    theta2.fill(1.0f);
    theta3.fill(1.0f);
    theta1.ensure_grad();
    theta2.ensure_grad();
    theta3.ensure_grad();
}

int MaskedNetwork::active_count(const Tensor& theta) const {
    int n = 0;
    for (float v : theta.data) n += active(v) ? 1 : 0;
    return n;
}

Tensor MaskedNetwork::forward(const Tensor& batch, bool training) {
    if (!warned_empty_ && (active_count(theta1) == 0 || active_count(theta2) == 0 || active_count(theta3) == 0)) {
        std::fprintf(stderr, "warning: a maskable layer has no active channels during search\n");
        warned_empty_ = true;
    }
    Tensor t = net.conv1.forward(batch);
    if (net.cfg.with_bn) t = net.bn1.forward(t, training);
    t = net.relu1.forward(t);
    z1_ = t;
    apply_mask(t, theta1);
    t = net.pool.forward(t);
    t = net.conv2.forward(t);
    if (net.cfg.with_bn) t = net.bn2.forward(t, training);
    t = net.relu2.forward(t);
    z2_ = t;
    apply_mask(t, theta2);
    t = t.reshaped(t.n(), net.cfg.flat_features(), 1, 1);
    t = net.fc1.forward(t);
    t = net.relu3.forward(t);
    z3_ = t;
    apply_mask(t, theta3);
    t = net.fc2.forward(t);
    t.check_finite("masked logits");
    forward_done_ = true;
    return t;
}

double MaskedNetwork::loss_backward(const Tensor& logits, const std::vector<int>& labels) {
    if (!forward_done_) throw std::runtime_error("masked loss_backward: missing forward cache");
    const double loss = net.ce.forward(logits, labels);
    Tensor g = net.ce.backward();
    g = net.fc2.backward(g);
    mask_backward(g, z3_, theta3);
    g = net.relu3.backward(g);
    g = net.fc1.backward(g);
    g = g.reshaped(g.n(), net.cfg.c2, net.cfg.pooled_h(), net.cfg.pooled_w());
    mask_backward(g, z2_, theta2);
    g = net.relu2.backward(g);
    if (net.cfg.with_bn) g = net.bn2.backward(g);
    g = net.conv2.backward(g);
    g = net.pool.backward(g);
    mask_backward(g, z1_, theta1);
    g = net.relu1.backward(g);
    if (net.cfg.with_bn) g = net.bn1.backward(g);
    net.conv1.backward(g);
    return loss;
}

double MaskedNetwork::cost(CostMetric metric) const {
    const double n1 = active_count(theta1);
    const double n2 = active_count(theta2);
    const double n3 = active_count(theta3);
    return cost_terms(net.cfg, n1, n2, n3, metric).value;
}

void MaskedNetwork::cost_backward(CostMetric metric, double scale) {
    const double n1 = active_count(theta1);
    const double n2 = active_count(theta2);
    const double n3 = active_count(theta3);
    const CostTerms t = cost_terms(net.cfg, n1, n2, n3, metric);
    theta1.ensure_grad();
    theta2.ensure_grad();
    theta3.ensure_grad();
    for (int i = 0; i < theta1.n(); ++i) theta1.grad[i] += static_cast<float>(scale * t.dn1 * ste_window(theta1.data[i]));
    for (int i = 0; i < theta2.n(); ++i) theta2.grad[i] += static_cast<float>(scale * t.dn2 * ste_window(theta2.data[i]));
    for (int i = 0; i < theta3.n(); ++i) theta3.grad[i] += static_cast<float>(scale * t.dn3 * ste_window(theta3.data[i]));
}

void MaskedNetwork::zero_grads() {
    net.zero_grads();
    theta1.ensure_grad();
    theta2.ensure_grad();
    theta3.ensure_grad();
    theta1.zero_grad();
    theta2.zero_grad();
    theta3.zero_grad();
}

MaskedNetwork search(const SeedNetwork& seed, const Tensor& x, const std::vector<int>& labels,
                     const SearchConfig& cfg) {
    if (cfg.lambda < 0.0) throw std::runtime_error("search: lambda must be non-negative");
    MaskedNetwork mnet(seed);
    const double full_cost = mnet.cost(cfg.metric);
    Adam opt;
    opt.hyper.lr = cfg.lr;
    for (auto& p : mnet.net.params()) {
        p.tensor->ensure_grad();
        opt.add_param(p.tensor->data.data(), p.tensor->grad.data(), p.tensor->numel(), cfg.lr);
    }
    for (Tensor* th : {&mnet.theta1, &mnet.theta2, &mnet.theta3}) {
        opt.add_param(th->data.data(), th->grad.data(), th->numel(), cfg.mask_lr);
    }

    Rng rng(cfg.seed);
    const int n = x.n();
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (int start = 0; start < n; start += cfg.batch) {
            const int bn = std::min(cfg.batch, n - start);
            Tensor xb(bn, 1, x.h(), x.w());
            std::vector<int> yb(bn);
            for (int i = 0; i < bn; ++i) {
                const int src = order[start + i];
                std::copy(&x.at(src, 0, 0, 0), &x.at(src, 0, 0, 0) + x.h() * x.w(), &xb.at(i, 0, 0, 0));
                yb[i] = labels[src];
            }
            mnet.zero_grads();
            Tensor logits = mnet.forward(xb, true);
            const double ce = mnet.loss_backward(logits, yb);
            mnet.cost_backward(cfg.metric, cfg.lambda / full_cost);
            const double total = ce + cfg.lambda * mnet.cost(cfg.metric) / full_cost;
            if (!std::isfinite(total)) {
                throw std::runtime_error("search: non-finite loss at epoch " + std::to_string(epoch));
            }
            opt.step();
            // keep mask values inside the straight-through window so the
            // architecture gradient never dies
            for (Tensor* th : {&mnet.theta1, &mnet.theta2, &mnet.theta3}) {
                for (auto& v : th->data) v = std::clamp(v, -1.0f, 1.0f);
            }
        }
    }
    return mnet;
}

ExtractResult extract(const MaskedNetwork& mnet, bool keep_alive) {
    auto kept_of = [&](const Tensor& theta, const char* name) {
        std::vector<int> kept;
        for (int i = 0; i < theta.n(); ++i) {
            if (MaskedNetwork::active(theta.data[i])) kept.push_back(i);
        }
        if (kept.empty()) {
            if (!keep_alive) {
                throw std::runtime_error(std::string("extract: no active channels in ") + name +
                                         "; reduce lambda");
            }
            int best = 0;
            for (int i = 1; i < theta.n(); ++i) {
                if (theta.data[i] > theta.data[best]) best = i;
            }
            kept.push_back(best);
        }
        return kept;
    };

    ExtractResult r;
    r.kept1 = kept_of(mnet.theta1, "conv1");
    r.kept2 = kept_of(mnet.theta2, "conv2");
    r.kept3 = kept_of(mnet.theta3, "fc1");

    const SeedNetwork& src = mnet.net;
    SeedConfig cfg = src.cfg;
    cfg.c1 = static_cast<int>(r.kept1.size());
    cfg.c2 = static_cast<int>(r.kept2.size());
    cfg.f1 = static_cast<int>(r.kept3.size());
    SeedNetwork out(cfg);

    const int p = cfg.pooled_h() * cfg.pooled_w();
    for (size_t a = 0; a < r.kept1.size(); ++a) {
        const int sa = r.kept1[a];
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) out.conv1.w.at(static_cast<int>(a), 0, ky, kx) = src.conv1.w.at(sa, 0, ky, kx);
        }
        out.conv1.b.data[a] = src.conv1.b.data[sa];
        if (cfg.with_bn) {
            out.bn1.gamma.data[a] = src.bn1.gamma.data[sa];
            out.bn1.beta.data[a] = src.bn1.beta.data[sa];
            out.bn1.running_mean.data[a] = src.bn1.running_mean.data[sa];
            out.bn1.running_var.data[a] = src.bn1.running_var.data[sa];
        }
    }
    for (size_t a = 0; a < r.kept2.size(); ++a) {
        const int sa = r.kept2[a];
        for (size_t b = 0; b < r.kept1.size(); ++b) {
            const int sb = r.kept1[b];
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    out.conv2.w.at(static_cast<int>(a), static_cast<int>(b), ky, kx) = src.conv2.w.at(sa, sb, ky, kx);
                }
            }
        }
        out.conv2.b.data[a] = src.conv2.b.data[sa];
        if (cfg.with_bn) {
            out.bn2.gamma.data[a] = src.bn2.gamma.data[sa];
            out.bn2.beta.data[a] = src.bn2.beta.data[sa];
            out.bn2.running_mean.data[a] = src.bn2.running_mean.data[sa];
            out.bn2.running_var.data[a] = src.bn2.running_var.data[sa];
        }
    }
    for (size_t a = 0; a < r.kept3.size(); ++a) {
        const int sa = r.kept3[a];
        for (size_t b = 0; b < r.kept2.size(); ++b) {
            const int sb = r.kept2[b];
            for (int pi = 0; pi < p; ++pi) {
                out.fc1.w.at(static_cast<int>(a), static_cast<int>(b) * p + pi, 0, 0) =
                    src.fc1.w.at(sa, sb * p + pi, 0, 0);
            }
        }
        out.fc1.b.data[a] = src.fc1.b.data[sa];
    }
    for (int cls = 0; cls < cfg.classes; ++cls) {
        for (size_t b = 0; b < r.kept3.size(); ++b) {
            out.fc2.w.at(cls, static_cast<int>(b), 0, 0) = src.fc2.w.at(cls, r.kept3[b], 0, 0);
        }
        out.fc2.b.data[cls] = src.fc2.b.data[cls];
    }
    r.net = std::move(out);
    return r;
}

}  // namespace ircount
