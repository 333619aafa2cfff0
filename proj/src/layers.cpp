#include "ircount/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ircount {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::runtime_error(msg);
}

}  // namespace

ConvLayer::ConvLayer(int in_c_, int out_c_, int k_, int pad_)
    : in_c(in_c_), out_c(out_c_), k(k_), pad(pad_), w(out_c_, in_c_, k_, k_), b(Tensor::vec(out_c_)) {
    w.ensure_grad();
    b.ensure_grad();
}

void ConvLayer::init_params(Rng& rng) {
    // Kaiming-uniform with ReLU gain; bias from the usual fan-in bound.
    const double fan_in = static_cast<double>(in_c) * k * k;
    const double wb = std::sqrt(6.0 / fan_in);
    for (auto& v : w.data) v = static_cast<float>(rng.uniform(-wb, wb));
    const double bb = 1.0 / std::sqrt(fan_in);
    for (auto& v : b.data) v = static_cast<float>(rng.uniform(-bb, bb));
}

Tensor ConvLayer::forward(const Tensor& x) {
    require(x.c() == in_c, "conv forward: input channel mismatch");
    const int n = x.n(), ih = x.h(), iw = x.w();
    const int oh = ih + 2 * pad - k + 1;
    const int ow = iw + 2 * pad - k + 1;
    require(oh > 0 && ow > 0, "conv forward: kernel larger than padded input");
    Tensor y(n, out_c, oh, ow);
    for (int ni = 0; ni < n; ++ni) {
        for (int co = 0; co < out_c; ++co) {
            float* yp = &y.at(ni, co, 0, 0);
            const float bias = b.data[co];
            for (int i = 0; i < oh * ow; ++i) yp[i] = bias;
            for (int ci = 0; ci < in_c; ++ci) {
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        const float wv = w.at(co, ci, ky, kx);
                        if (wv == 0.0f) continue;
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy - pad + ky;
                            if (iy < 0 || iy >= ih) continue;
                            const float* xp = &x.at(ni, ci, iy, 0);
                            float* yrow = yp + static_cast<size_t>(oy) * ow;
                            const int x0 = std::max(0, pad - kx);
                            const int x1 = std::min(ow, iw + pad - kx);
                            for (int ox = x0; ox < x1; ++ox) {
                                yrow[ox] += wv * xp[ox - pad + kx];
                            }
                        }
                    }
                }
            }
        }
    }
    x_ = x;
    cached_ = true;
    return y;
}

Tensor ConvLayer::backward(const Tensor& gy) {
    require(cached_, "conv backward: missing forward cache");
    w.ensure_grad();
    b.ensure_grad();
    const Tensor& x = x_;
    const int n = x.n(), ih = x.h(), iw = x.w();
    const int oh = gy.h(), ow = gy.w();
    Tensor gx(n, in_c, ih, iw);
    for (int ni = 0; ni < n; ++ni) {
        for (int co = 0; co < out_c; ++co) {
            const float* gp = &gy.at(ni, co, 0, 0);
            double gb = 0.0;
            for (int i = 0; i < oh * ow; ++i) gb += gp[i];
            b.grad[co] += static_cast<float>(gb);
            for (int ci = 0; ci < in_c; ++ci) {
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        const float wv = w.at(co, ci, ky, kx);
                        double gw = 0.0;
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy - pad + ky;
                            if (iy < 0 || iy >= ih) continue;
                            const float* xp = &x.at(ni, ci, iy, 0);
                            float* gxp = &gx.at(ni, ci, iy, 0);
                            const float* grow = gp + static_cast<size_t>(oy) * ow;
                            const int x0 = std::max(0, pad - kx);
                            const int x1 = std::min(ow, iw + pad - kx);
                            for (int ox = x0; ox < x1; ++ox) {
                                const float g = grow[ox];
                                gw += static_cast<double>(g) * xp[ox - pad + kx];
                                gxp[ox - pad + kx] += wv * g;
                            }
                        }
                        w.gat(co, ci, ky, kx) += static_cast<float>(gw);
                    }
                }
            }
        }
    }
    return gx;
}

BatchNorm::BatchNorm(int channels_)
    : channels(channels_),
      gamma(Tensor::vec(channels_)),
      beta(Tensor::vec(channels_)),
      running_mean(Tensor::vec(channels_)),
      running_var(Tensor::vec(channels_)) {
    gamma.fill(1.0f);
    running_var.fill(1.0f);
    gamma.ensure_grad();
    beta.ensure_grad();
}

Tensor BatchNorm::forward(const Tensor& x, bool training) {
    require(x.c() == channels, "batchnorm: channel mismatch");
    const int n = x.n(), h = x.h(), w = x.w();
    const size_t count = static_cast<size_t>(n) * h * w;
    Tensor y(n, channels, h, w);
    x_hat_ = Tensor(n, channels, h, w);
    inv_std_.assign(channels, 0.0f);
    training_ = training;
    count_ = count;
    for (int c = 0; c < channels; ++c) {
        double mean, var;
        if (training) {
            double s = 0.0;
            for (int ni = 0; ni < n; ++ni) {
                const float* xp = &x.at(ni, c, 0, 0);
                for (size_t i = 0; i < static_cast<size_t>(h) * w; ++i) s += xp[i];
            }
            mean = s / static_cast<double>(count);
            double sq = 0.0;
            for (int ni = 0; ni < n; ++ni) {
                const float* xp = &x.at(ni, c, 0, 0);
                for (size_t i = 0; i < static_cast<size_t>(h) * w; ++i) {
                    const double d = xp[i] - mean;
                    sq += d * d;
                }
            }
            var = sq / static_cast<double>(count);
            // running stats keep the unbiased estimate
            const double unbiased = count > 1 ? sq / static_cast<double>(count - 1) : var;
            running_mean.data[c] = static_cast<float>((1.0 - momentum) * running_mean.data[c] + momentum * mean);
            running_var.data[c] = static_cast<float>((1.0 - momentum) * running_var.data[c] + momentum * unbiased);
        } else {
            mean = running_mean.data[c];
            var = running_var.data[c];
        }
        require(var + eps > 0.0, "batchnorm: non-positive variance");
        const double inv = 1.0 / std::sqrt(var + eps);
        inv_std_[c] = static_cast<float>(inv);
        const float g = gamma.data[c], bt = beta.data[c];
        for (int ni = 0; ni < n; ++ni) {
            const float* xp = &x.at(ni, c, 0, 0);
            float* hp = &x_hat_.at(ni, c, 0, 0);
            float* yp = &y.at(ni, c, 0, 0);
            for (size_t i = 0; i < static_cast<size_t>(h) * w; ++i) {
                const float xh = static_cast<float>((xp[i] - mean) * inv);
                hp[i] = xh;
                yp[i] = g * xh + bt;
            }
        }
    }
    cached_ = true;
    return y;
}

Tensor BatchNorm::backward(const Tensor& gy) {
    require(cached_, "batchnorm backward: missing forward cache");
    gamma.ensure_grad();
    beta.ensure_grad();
    const int n = gy.n(), h = gy.h(), w = gy.w();
    const double m = static_cast<double>(count_);
    Tensor gx(n, channels, h, w);
    for (int c = 0; c < channels; ++c) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (int ni = 0; ni < n; ++ni) {
            const float* gp = &gy.at(ni, c, 0, 0);
            const float* hp = &x_hat_.at(ni, c, 0, 0);
            for (size_t i = 0; i < static_cast<size_t>(h) * w; ++i) {
                sum_g += gp[i];
                sum_gx += static_cast<double>(gp[i]) * hp[i];
            }
        }
        gamma.grad[c] += static_cast<float>(sum_gx);
        beta.grad[c] += static_cast<float>(sum_g);
        const double g = gamma.data[c];
        const double inv = inv_std_[c];
        for (int ni = 0; ni < n; ++ni) {
            const float* gp = &gy.at(ni, c, 0, 0);
            const float* hp = &x_hat_.at(ni, c, 0, 0);
            float* gxp = &gx.at(ni, c, 0, 0);
            for (size_t i = 0; i < static_cast<size_t>(h) * w; ++i) {
                if (training_) {
                    gxp[i] = static_cast<float>(g * inv / m * (m * gp[i] - sum_g - hp[i] * sum_gx));
                } else {
                    gxp[i] = static_cast<float>(g * inv * gp[i]);
                }
            }
        }
    }
    return gx;
}

Tensor MaxPool2x2::forward(const Tensor& x) {
    require(x.h() % 2 == 0 && x.w() % 2 == 0, "maxpool: input extent must be even");
    const int n = x.n(), c = x.c(), oh = x.h() / 2, ow = x.w() / 2;
    Tensor y(n, c, oh, ow);
    argmax_.assign(y.numel(), 0);
    in_shape_ = x.shape;
    size_t oi = 0;
    for (int ni = 0; ni < n; ++ni) {
        for (int ci = 0; ci < c; ++ci) {
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox, ++oi) {
                    float best = x.at(ni, ci, 2 * oy, 2 * ox);
                    size_t best_idx = x.index(ni, ci, 2 * oy, 2 * ox);
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            const float v = x.at(ni, ci, 2 * oy + dy, 2 * ox + dx);
                            if (v > best) {  // strict: first argmax wins
                                best = v;
                                best_idx = x.index(ni, ci, 2 * oy + dy, 2 * ox + dx);
                            }
                        }
                    }
                    y.data[oi] = best;
                    argmax_[oi] = best_idx;
                }
            }
        }
    }
    cached_ = true;
    return y;
}

Tensor MaxPool2x2::backward(const Tensor& gy) {
    require(cached_, "maxpool backward: missing forward cache");
    Tensor gx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
    for (size_t i = 0; i < gy.numel(); ++i) gx.data[argmax_[i]] += gy.data[i];
    return gx;
}

Tensor ReLU::forward(const Tensor& x) {
    Tensor y = x;
    mask_.assign(x.numel(), 0);
    for (size_t i = 0; i < x.numel(); ++i) {
        if (x.data[i] > 0.0f) {
            mask_[i] = 1;
        } else {
            y.data[i] = 0.0f;  // canonicalizes -0.0 as well
        }
    }
    cached_ = true;
    return y;
}

Tensor ReLU::backward(const Tensor& gy) {
    require(cached_, "relu backward: missing forward cache");
    Tensor gx = gy;
    for (size_t i = 0; i < gy.numel(); ++i) {
        if (!mask_[i]) gx.data[i] = 0.0f;
    }
    return gx;
}

Linear::Linear(int in_f_, int out_f_) : in_f(in_f_), out_f(out_f_), w(out_f_, in_f_, 1, 1), b(Tensor::vec(out_f_)) {
    w.ensure_grad();
    b.ensure_grad();
}

void Linear::init_params(Rng& rng) {
    const double wb = std::sqrt(6.0 / in_f);
    for (auto& v : w.data) v = static_cast<float>(rng.uniform(-wb, wb));
    const double bb = 1.0 / std::sqrt(static_cast<double>(in_f));
    for (auto& v : b.data) v = static_cast<float>(rng.uniform(-bb, bb));
}

Tensor Linear::forward(const Tensor& x) {
    require(x.c() == in_f && x.h() == 1 && x.w() == 1, "linear forward: feature mismatch");
    const int n = x.n();
    Tensor y(n, out_f, 1, 1);
    for (int ni = 0; ni < n; ++ni) {
        const float* xp = &x.at(ni, 0, 0, 0);
        for (int f = 0; f < out_f; ++f) {
            const float* wp = &w.at(f, 0, 0, 0);
            float acc = b.data[f];
            for (int i = 0; i < in_f; ++i) acc += wp[i] * xp[i];
            y.at(ni, f, 0, 0) = acc;
        }
    }
    x_ = x;
    cached_ = true;
    return y;
}

Tensor Linear::backward(const Tensor& gy) {
    require(cached_, "linear backward: missing forward cache");
    w.ensure_grad();
    b.ensure_grad();
    const int n = x_.n();
    Tensor gx(n, in_f, 1, 1);
    for (int ni = 0; ni < n; ++ni) {
        const float* xp = &x_.at(ni, 0, 0, 0);
        float* gxp = &gx.at(ni, 0, 0, 0);
        for (int f = 0; f < out_f; ++f) {
            const float g = gy.at(ni, f, 0, 0);
            b.grad[f] += g;
            const float* wp = &w.at(f, 0, 0, 0);
            float* gwp = &w.grad[w.index(f, 0, 0, 0)];
            for (int i = 0; i < in_f; ++i) {
                gwp[i] += g * xp[i];
                gxp[i] += g * wp[i];
            }
        }
    }
    return gx;
}

double SoftmaxCrossEntropy::forward(const Tensor& logits, const std::vector<int>& labels) {
    require(static_cast<size_t>(logits.n()) == labels.size(), "cross-entropy: batch size mismatch");
    const int n = logits.n(), c = logits.c();
    for (int lbl : labels) require(lbl >= 0 && lbl < c, "cross-entropy: label out of range");
    probs_ = Tensor(n, c, 1, 1);
    labels_ = labels;
    double loss = 0.0;
    for (int ni = 0; ni < n; ++ni) {
        const float* lp = &logits.at(ni, 0, 0, 0);
        float m = lp[0];
        for (int i = 1; i < c; ++i) m = std::max(m, lp[i]);
        double z = 0.0;
        for (int i = 0; i < c; ++i) z += std::exp(static_cast<double>(lp[i]) - m);
        for (int i = 0; i < c; ++i) {
            probs_.at(ni, i, 0, 0) = static_cast<float>(std::exp(static_cast<double>(lp[i]) - m) / z);
        }
        loss += -(static_cast<double>(lp[labels[ni]]) - m - std::log(z));
    }
    cached_ = true;
    return loss / n;
}

Tensor SoftmaxCrossEntropy::backward() {
    require(cached_, "cross-entropy backward: missing forward cache");
    const int n = probs_.n(), c = probs_.c();
    Tensor g(n, c, 1, 1);
    for (int ni = 0; ni < n; ++ni) {
        for (int i = 0; i < c; ++i) {
            const float onehot = (i == labels_[ni]) ? 1.0f : 0.0f;
            g.at(ni, i, 0, 0) = (probs_.at(ni, i, 0, 0) - onehot) / n;
        }
    }
    return g;
}

}  // namespace ircount
