#include "ircount/quant.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "ircount/adam.hpp"
#include "ircount/rng.hpp"

namespace ircount {

namespace {

double round_half_up(double v) { return std::floor(v + 0.5); }

int64_t rhu_i64(double v) { return static_cast<int64_t>(round_half_up(v)); }

double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::runtime_error(msg);
}

}  // namespace

std::string QuantSpec::to_string() const {
    std::string out;
    for (int i = 0; i < 4; ++i) {
        if (i > 0) out += "-";
        out += std::to_string(bits[i]);
    }
    return out;
}

QuantSpec QuantSpec::from_string(const std::string& s) {
    QuantSpec spec;
    int layer = 0;
    size_t pos = 0;
    while (layer < 4 && pos < s.size()) {
        size_t next = s.find('-', pos);
        if (next == std::string::npos) next = s.size();
        const std::string tok = s.substr(pos, next - pos);
        if (tok != "4" && tok != "8") throw std::runtime_error("bad quant spec '" + s + "'");
        spec.bits[layer++] = tok == "4" ? 4 : 8;
        pos = next + 1;
    }
    if (layer != 4) throw std::runtime_error("quant spec must name 4 layers: '" + s + "'");
    return spec;
}

std::vector<QuantSpec> enumerate_specs(bool first_fixed_8) {
    std::vector<QuantSpec> out;
    for (int i = 0; i < 16; ++i) {
        QuantSpec s;
        for (int layer = 0; layer < 4; ++layer) {
            s.bits[layer] = ((i >> (3 - layer)) & 1) != 0 ? 8 : 4;
        }
        if (first_fixed_8 && s.bits[0] != 8) continue;
        out.push_back(s);
    }
    return out;
}

double quant_step(double alpha, double beta, int bits) {
    return (beta - alpha) / static_cast<double>((1 << bits) - 1);
}

double fake_quant_value(double v, double alpha, double beta, int bits) {
    require(beta > alpha, "fake_quant: degenerate range");
    const int levels = (1 << bits) - 1;
    const double step = (beta - alpha) / levels;
    const double vv = clampd(v, alpha, beta);
    double q = round_half_up((vv - alpha) / step);
    q = clampd(q, 0.0, static_cast<double>(levels));
    return alpha + q * step;
}

Tensor fake_quant_tensor(const Tensor& t, double alpha, double beta, int bits) {
    Tensor out = t;
    for (auto& v : out.data) v = static_cast<float>(fake_quant_value(v, alpha, beta, bits));
    return out;
}

WeightRange weight_range(const Tensor& w, int bits) {
    const double half = static_cast<double>(1 << (bits - 1));
    const double wmin = w.min_value();
    const double wmax = w.max_value();
    double step = std::max(wmax / (half - 1.0), -wmin / half);
    step = std::max(step, 1e-12);
    return WeightRange{step, -half * step, (half - 1.0) * step};
}

SeedNetwork fold_bn(const SeedNetwork& net) {
    require(net.cfg.with_bn, "fold_bn: network has no batch-norm stages");
    SeedNetwork out = net;
    out.cfg.with_bn = false;
    auto fold = [](ConvLayer& conv, const BatchNorm& bn) {
        for (int oc = 0; oc < conv.out_c; ++oc) {
            const double var = bn.running_var.data[oc];
            const double denom = var + bn.eps;
            require(denom > 0.0, "fold_bn: non-positive variance");
            const double inv = bn.gamma.data[oc] / std::sqrt(denom);
            for (int ci = 0; ci < conv.in_c; ++ci) {
                for (int ky = 0; ky < conv.k; ++ky) {
                    for (int kx = 0; kx < conv.k; ++kx) {
                        conv.w.at(oc, ci, ky, kx) = static_cast<float>(conv.w.at(oc, ci, ky, kx) * inv);
                    }
                }
            }
            conv.b.data[oc] = static_cast<float>((conv.b.data[oc] - bn.running_mean.data[oc]) * inv +
                                                 bn.beta.data[oc]);
        }
    };
    fold(out.conv1, net.bn1);
    fold(out.conv2, net.bn2);
    return out;
}

QatNetwork::QatNetwork(const SeedNetwork& folded, const QuantSpec& spec_) : net(folded), spec(spec_) {
    require(!net.cfg.with_bn, "qat: fold batch-norm before quantization-aware training");
    for (int i = 0; i < 4; ++i) acts[i].bits = spec.bits[i];
    acts[4].bits = 8;  // logits quantizer
}

void QatNetwork::calibrate(const Tensor& x) {
    auto observe = [&](ActQuantizer& q, const Tensor& t) {
        float lo = t.min_value();
        float hi = t.max_value();
        if (q.calibrated) {
            lo = std::min(lo, q.alpha);
            hi = std::max(hi, q.beta);
        }
        if (hi <= lo + 1e-4f) hi = lo + 1e-4f;
        q.alpha = lo;
        q.beta = hi;
        q.calibrated = true;
    };
    observe(acts[0], x);
    Tensor t = net.conv1.forward(x);
    t = net.relu1.forward(t);
    observe(acts[1], t);
    t = net.pool.forward(t);
    t = net.conv2.forward(t);
    t = net.relu2.forward(t);
    observe(acts[2], t);
    t = t.reshaped(t.n(), net.cfg.flat_features(), 1, 1);
    t = net.fc1.forward(t);
    t = net.relu3.forward(t);
    observe(acts[3], t);
    t = net.fc2.forward(t);
    observe(acts[4], t);
}

Tensor act_quant_forward(const ActQuantizer& q, const Tensor& t, std::vector<int8_t>& region) {
    require(q.beta > q.alpha, "fake_quant: degenerate activation range");
    const int levels = (1 << q.bits) - 1;
    const double step = (static_cast<double>(q.beta) - q.alpha) / levels;
    // the grid is nudged so zero sits on an integer code, exactly as the
    // frozen integer network will see it
    const double z = round_half_up(-static_cast<double>(q.alpha) / step);
    const double a = -z * step;
    const double b = a + levels * step;
    Tensor out = t;
    region.assign(t.numel(), 0);
    for (size_t i = 0; i < t.numel(); ++i) {
        const double v = t.data[i];
        if (v <= a) {
            out.data[i] = static_cast<float>(a);
            region[i] = 1;
        } else if (v >= b) {
            out.data[i] = static_cast<float>(b);
            region[i] = 2;
        } else {
            const double qc = clampd(round_half_up((v - a) / step), 0.0, levels);
            out.data[i] = static_cast<float>(a + qc * step);
        }
    }
    return out;
}

Tensor act_quant_backward(ActQuantizer& q, const Tensor& g, const std::vector<int8_t>& region) {
    require(region.size() == g.numel(), "fake_quant backward: missing forward cache");
    Tensor out = g;
    double da = 0.0, db = 0.0;
    for (size_t i = 0; i < g.numel(); ++i) {
        if (region[i] == 1) {
            da += g.data[i];
            out.data[i] = 0.0f;
        } else if (region[i] == 2) {
            db += g.data[i];
            out.data[i] = 0.0f;
        }
    }
    q.galpha += static_cast<float>(da);
    q.gbeta += static_cast<float>(db);
    return out;
}

Tensor QatNetwork::act_forward(int qi, const Tensor& t) {
    return act_quant_forward(acts[qi], t, fq_[qi].region);
}

Tensor QatNetwork::act_backward(int qi, const Tensor& g) {
    return act_quant_backward(acts[qi], g, fq_[qi].region);
}

void QatNetwork::swap_in_quantized_weights() {
    require(!weights_swapped_, "qat forward: weights already swapped");
    saved_w_.clear();
    Tensor* ws[4] = {&net.conv1.w, &net.conv2.w, &net.fc1.w, &net.fc2.w};
    for (int i = 0; i < 4; ++i) {
        saved_w_.push_back(ws[i]->data);
        const WeightRange wr = weight_range(*ws[i], spec.bits[i]);
        const double half = static_cast<double>(1 << (spec.bits[i] - 1));
        for (auto& v : ws[i]->data) {
            double code = round_half_up(v / wr.step);
            code = clampd(code, -half, half - 1.0);
            v = static_cast<float>(code * wr.step);
        }
    }
    weights_swapped_ = true;
}

void QatNetwork::restore_weights() {
    if (!weights_swapped_) return;
    Tensor* ws[4] = {&net.conv1.w, &net.conv2.w, &net.fc1.w, &net.fc2.w};
    for (int i = 0; i < 4; ++i) ws[i]->data = saved_w_[i];
    weights_swapped_ = false;
}

Tensor QatNetwork::forward(const Tensor& batch, bool training) {
    for (int i = 0; i < 4; ++i) require(acts[i].calibrated, "qat forward: quantizers not calibrated");
    restore_weights();
    Tensor t = act_forward(0, batch);
    swap_in_quantized_weights();
    t = net.conv1.forward(t);
    t = net.relu1.forward(t);
    t = act_forward(1, t);
    t = net.pool.forward(t);
    t = net.conv2.forward(t);
    t = net.relu2.forward(t);
    t = act_forward(2, t);
    t = t.reshaped(t.n(), net.cfg.flat_features(), 1, 1);
    t = net.fc1.forward(t);
    t = net.relu3.forward(t);
    t = act_forward(3, t);
    t = net.fc2.forward(t);
    // the logits quantizer only matters for deployment; training the loss on
    // clipped logits would stall confident predictions, so q4 stays out of
    // the training graph and is recalibrated when ranges freeze
    t.check_finite("qat logits");
    if (!training) restore_weights();
    forward_done_ = training;
    return t;
}

void QatNetwork::recalibrate_logits(const Tensor& x) {
    const Tensor logits = forward(x, false);
    float lo = logits.min_value();
    float hi = logits.max_value();
    if (hi <= lo + 1e-4f) hi = lo + 1e-4f;
    acts[4].alpha = lo;
    acts[4].beta = hi;
    acts[4].calibrated = true;
}

double QatNetwork::loss_backward(const Tensor& logits, const std::vector<int>& labels) {
    require(forward_done_ && weights_swapped_, "qat loss_backward: missing training forward");
    const double loss = net.ce.forward(logits, labels);
    Tensor g = net.ce.backward();
    g = net.fc2.backward(g);
    g = act_backward(3, g);
    g = net.relu3.backward(g);
    g = net.fc1.backward(g);
    g = g.reshaped(g.n(), net.cfg.c2, net.cfg.pooled_h(), net.cfg.pooled_w());
    g = act_backward(2, g);
    g = net.relu2.backward(g);
    g = net.conv2.backward(g);
    g = net.pool.backward(g);
    g = act_backward(1, g);
    g = net.relu1.backward(g);
    g = net.conv1.backward(g);
    restore_weights();
    forward_done_ = false;
    return loss;
}

void QatNetwork::zero_grads() {
    net.zero_grads();
    for (auto& q : acts) {
        q.galpha = 0.0f;
        q.gbeta = 0.0f;
    }
}

void qat_train(QatNetwork& qnet, const Tensor& x, const std::vector<int>& labels, const QatConfig& cfg) {
    if (!qnet.acts[0].calibrated) qnet.calibrate(x);
    Adam opt;
    opt.hyper.lr = cfg.lr;
    for (auto& p : qnet.net.params()) {
        p.tensor->ensure_grad();
        opt.add_param(p.tensor->data.data(), p.tensor->grad.data(), p.tensor->numel(), cfg.lr);
    }
    for (int i = 0; i < 4; ++i) {  // the logits quantizer is calibrated, not trained
        opt.add_param(&qnet.acts[i].alpha, &qnet.acts[i].galpha, 1, cfg.lr);
        opt.add_param(&qnet.acts[i].beta, &qnet.acts[i].gbeta, 1, cfg.lr);
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
            qnet.zero_grads();
            Tensor logits = qnet.forward(xb, true);
            const double loss = qnet.loss_backward(logits, yb);
            if (!std::isfinite(loss)) {
                throw std::runtime_error("qat: non-finite loss at epoch " + std::to_string(epoch));
            }
            opt.step();
            for (auto& q : qnet.acts) {
                if (q.beta < q.alpha + 1e-4f) q.beta = q.alpha + 1e-4f;
            }
        }
    }
    qnet.recalibrate_logits(x);
}

namespace {

struct FrozenAct {
    double scale;
    int32_t zp;  // stored-code zero point
    int bits;
};

FrozenAct freeze_act(const ActQuantizer& q) {
    const double s = quant_step(q.alpha, q.beta, q.bits);
    require(s > 0.0, "lower_to_integer: degenerate activation range");
    const int64_t z_u = rhu_i64(-static_cast<double>(q.alpha) / s);
    const int64_t half = 1ll << (q.bits - 1);
    return FrozenAct{s, static_cast<int32_t>(z_u - half), q.bits};
}

void choose_requant(double ratio, int32_t& mult, int& shift) {
    require(ratio > 0.0, "lower_to_integer: non-positive requant ratio");
    int sh = 30 - static_cast<int>(std::floor(std::log2(ratio)));
    sh = std::clamp(sh, 1, 62);
    int64_t m = rhu_i64(ratio * std::ldexp(1.0, sh));
    while (m >= (1ll << 31) && sh > 1) {
        --sh;
        m = rhu_i64(ratio * std::ldexp(1.0, sh));
    }
    require(m < (1ll << 31), "lower_to_integer: requant ratio too large");
    mult = static_cast<int32_t>(m);
    shift = sh;
}

void check_accumulator(const QuantLayerInt& layer) {
    // Worst-case |sum w*(x - zp)| + |bias| must fit a signed 32-bit word,
    // and so must the requantized value before clamping.
    const int64_t levels = (1ll << layer.width) - 1;
    const int64_t z_u = static_cast<int64_t>(layer.zp_in) + (1ll << (layer.width - 1));
    const int64_t ax = std::max(std::llabs(-z_u), std::llabs(levels - z_u));
    const size_t per_out = layer.w.size() / static_cast<size_t>(layer.cout);
    for (int oc = 0; oc < layer.cout; ++oc) {
        int64_t sum_abs = 0;
        for (size_t i = 0; i < per_out; ++i) sum_abs += std::abs(static_cast<int>(layer.w[oc * per_out + i]));
        const int64_t bound = sum_abs * ax + std::llabs(layer.bias_q[oc]);
        require(bound < (1ll << 31),
                "lower_to_integer: accumulator overflow risk in " + layer.name);
        const int64_t requant_bound = ((bound * layer.mult) >> layer.shift) + std::llabs(layer.zp_out) + 2;
        require(requant_bound < (1ll << 31),
                "lower_to_integer: requantization overflow risk in " + layer.name);
    }
}

void lower_layer(QuantLayerInt& L, const Tensor& w, const Tensor& b, const FrozenAct& in_q,
                 const FrozenAct& out_q, int bits) {
    L.width = bits;
    L.out_width = out_q.bits;
    L.s_in = in_q.scale;
    L.zp_in = in_q.zp;
    L.s_out = out_q.scale;
    L.zp_out = out_q.zp;
    const WeightRange wr = weight_range(w, bits);
    L.s_w = wr.step;
    const double half = static_cast<double>(1 << (bits - 1));
    L.w.resize(w.numel());
    for (size_t i = 0; i < w.numel(); ++i) {
        const double code = clampd(round_half_up(w.data[i] / wr.step), -half, half - 1.0);
        L.w[i] = static_cast<int8_t>(code);
    }
    L.bias_q.resize(b.numel());
    for (size_t i = 0; i < b.numel(); ++i) {
        const int64_t bq = rhu_i64(b.data[i] / (L.s_w * L.s_in));
        require(std::llabs(bq) < (1ll << 31), "lower_to_integer: bias overflow in " + L.name);
        L.bias_q[i] = static_cast<int32_t>(bq);
    }
    try {
        choose_requant(L.s_w * L.s_in / L.s_out, L.mult, L.shift);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string(e.what()) + " (layer " + L.name + ")");
    }
    check_accumulator(L);
}

/// Frozen requantization shared by the reference path: the accumulator
/// estimate scales by mult*2^-shift, rounds half up, recenters, clamps.
int8_t reference_requant(double acc_estimate, const QuantLayerInt& L) {
    const double t = acc_estimate * static_cast<double>(L.mult) * std::ldexp(1.0, -L.shift);
    const double q = round_half_up(t) + L.zp_out;
    return static_cast<int8_t>(clampd(q, L.out_lane_lo(), L.out_lane_hi()));
}

}  // namespace

long long QuantizedNetwork::weight_bits() const {
    long long bits = 0;
    for (const QuantLayerInt* l : {&conv1, &conv2, &fc1, &fc2}) {
        bits += static_cast<long long>(l->w.size()) * l->width;
    }
    return bits;
}

long long QuantizedNetwork::memory_bytes() const {
    long long bytes = (weight_bits() + 7) / 8;
    for (const QuantLayerInt* l : {&conv1, &conv2, &fc1, &fc2}) {
        bytes += static_cast<long long>(l->bias_q.size()) * 4;
    }
    return bytes;
}

QuantizedNetwork lower_to_integer(const QatNetwork& qat, const QuantSpec& spec) {
    require(qat.spec == spec, "lower_to_integer: spec does not match the trained network");
    require(!qat.net.cfg.with_bn, "lower_to_integer: network must be BN-folded");
    const SeedConfig& cfg = qat.net.cfg;
    QuantizedNetwork out;
    out.cfg = cfg;
    out.spec = spec;

    FrozenAct fa[5];
    for (int i = 0; i < 5; ++i) fa[i] = freeze_act(qat.acts[i]);
    out.input = InputQuant{fa[0].scale, fa[0].zp, fa[0].bits};

    out.conv1.kind = QuantLayerInt::Kind::kConv;
    out.conv1.name = "conv1";
    out.conv1.cin = 1;
    out.conv1.cout = cfg.c1;
    out.conv1.k = 3;
    out.conv1.pad = 1;
    out.conv1.h_in = cfg.in_h;
    out.conv1.w_in = cfg.in_w;
    out.conv1.relu = true;
    lower_layer(out.conv1, qat.net.conv1.w, qat.net.conv1.b, fa[0], fa[1], spec.bits[0]);

    out.conv2.kind = QuantLayerInt::Kind::kConv;
    out.conv2.name = "conv2";
    out.conv2.cin = cfg.c1;
    out.conv2.cout = cfg.c2;
    out.conv2.k = 3;
    out.conv2.pad = 1;
    out.conv2.h_in = cfg.pooled_h();
    out.conv2.w_in = cfg.pooled_w();
    out.conv2.relu = true;
    lower_layer(out.conv2, qat.net.conv2.w, qat.net.conv2.b, fa[1], fa[2], spec.bits[1]);

    out.fc1.kind = QuantLayerInt::Kind::kFc;
    out.fc1.name = "fc1";
    out.fc1.cin = cfg.flat_features();
    out.fc1.cout = cfg.f1;
    out.fc1.up_channels = cfg.c2;
    out.fc1.up_spatial = cfg.pooled_h() * cfg.pooled_w();
    out.fc1.relu = true;
    lower_layer(out.fc1, qat.net.fc1.w, qat.net.fc1.b, fa[2], fa[3], spec.bits[2]);

    out.fc2.kind = QuantLayerInt::Kind::kFc;
    out.fc2.name = "fc2";
    out.fc2.cin = cfg.f1;
    out.fc2.cout = cfg.classes;
    out.fc2.up_channels = cfg.f1;
    out.fc2.up_spatial = 1;
    out.fc2.relu = false;
    lower_layer(out.fc2, qat.net.fc2.w, qat.net.fc2.b, fa[3], fa[4], spec.bits[3]);

    return out;
}

std::vector<int8_t> quantize_frame(const QuantizedNetwork& qnet, const float* frame, size_t n) {
    const int lo = qnet.input.width == 8 ? -128 : -8;
    const int hi = qnet.input.width == 8 ? 127 : 7;
    std::vector<int8_t> out(n);
    for (size_t i = 0; i < n; ++i) {
        const double c = round_half_up(frame[i] / qnet.input.scale) + qnet.input.zp;
        out[i] = static_cast<int8_t>(clampd(c, lo, hi));
    }
    return out;
}

std::vector<int8_t> reference_layer_codes(const QuantLayerInt& L, const std::vector<int8_t>& in) {
    if (L.kind == QuantLayerInt::Kind::kFc) {
        require(in.size() == static_cast<size_t>(L.cin), "reference: fc input size mismatch");
        std::vector<int8_t> out(L.cout);
        for (int oc = 0; oc < L.cout; ++oc) {
            double v = static_cast<double>(L.bias_q[oc]) * (L.s_w * L.s_in);
            for (int i = 0; i < L.cin; ++i) {
                const double wv = static_cast<double>(L.w[static_cast<size_t>(oc) * L.cin + i]) * L.s_w;
                const double xv = L.s_in * (static_cast<double>(in[i]) - L.zp_in);
                v += wv * xv;
            }
            if (L.relu) v = std::max(v, 0.0);
            out[oc] = reference_requant(v / (L.s_w * L.s_in), L);
        }
        return out;
    }
    const int h = L.h_in, w = L.w_in;
    require(in.size() == static_cast<size_t>(L.cin) * h * w, "reference: conv input size mismatch");
    std::vector<int8_t> out(static_cast<size_t>(L.cout) * h * w);
    auto in_at = [&](int c, int y, int x) { return static_cast<double>(in[(static_cast<size_t>(c) * h + y) * w + x]); };
    for (int oc = 0; oc < L.cout; ++oc) {
        for (int oy = 0; oy < h; ++oy) {
            for (int ox = 0; ox < w; ++ox) {
                double v = static_cast<double>(L.bias_q[oc]) * (L.s_w * L.s_in);
                for (int ky = 0; ky < L.k; ++ky) {
                    const int iy = oy - L.pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < L.k; ++kx) {
                        const int ix = ox - L.pad + kx;
                        if (ix < 0 || ix >= w) continue;
                        for (int ci = 0; ci < L.cin; ++ci) {
                            const size_t wi = ((static_cast<size_t>(oc) * L.cin + ci) * L.k + ky) * L.k + kx;
                            const double wv = static_cast<double>(L.w[wi]) * L.s_w;
                            const double xv = L.s_in * (in_at(ci, iy, ix) - L.zp_in);
                            v += wv * xv;
                        }
                    }
                }
                if (L.relu) v = std::max(v, 0.0);
                out[(static_cast<size_t>(oc) * h + oy) * w + ox] = reference_requant(v / (L.s_w * L.s_in), L);
            }
        }
    }
    return out;
}

namespace {

std::vector<int8_t> maxpool_codes(const std::vector<int8_t>& in, int c, int h, int w) {
    const int oh = h / 2, ow = w / 2;
    std::vector<int8_t> out(static_cast<size_t>(c) * oh * ow);
    for (int ci = 0; ci < c; ++ci) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                int8_t best = in[(static_cast<size_t>(ci) * h + 2 * oy) * w + 2 * ox];
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const int8_t v = in[(static_cast<size_t>(ci) * h + 2 * oy + dy) * w + 2 * ox + dx];
                        if (v > best) best = v;
                    }
                }
                out[(static_cast<size_t>(ci) * oh + oy) * ow + ox] = best;
            }
        }
    }
    return out;
}

}  // namespace

std::vector<int8_t> reference_logits_codes(const QuantizedNetwork& qnet, const std::vector<int8_t>& in_codes) {
    std::vector<int8_t> t = reference_layer_codes(qnet.conv1, in_codes);
    t = maxpool_codes(t, qnet.cfg.c1, qnet.cfg.in_h, qnet.cfg.in_w);
    t = reference_layer_codes(qnet.conv2, t);
    t = reference_layer_codes(qnet.fc1, t);
    t = reference_layer_codes(qnet.fc2, t);
    return t;
}

}  // namespace ircount
