#include "also/surrogate.hpp"

#include <algorithm>
#include <cmath>

#include "also/errors.hpp"

namespace also {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double act(double x, Activation a) {
    if (a == Activation::Relu) return x > 0.0 ? x : 0.0;
    return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
}

double act_deriv(double x, Activation a) {
    if (a == Activation::Relu) return x > 0.0 ? 1.0 : 0.0;
    return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * std::exp(-0.5 * x * x) * kInvSqrt2Pi;
}

// Parameter layout offsets; see the header for the per-arch formulas.
struct Layout {
    int d = 0, h = 0;
    size_t g1 = 0, be1 = 0, W1 = 0, b1 = 0;
    size_t g2 = 0, be2 = 0, W2 = 0, b2 = 0;
    size_t w_out = 0, b_out = 0;
    size_t total = 0;
};

Layout layout_of(const NetworkConfig& cfg) {
    Layout L;
    L.d = cfg.input_dim;
    L.h = cfg.hidden;
    const size_t d = static_cast<size_t>(L.d), h = static_cast<size_t>(L.h);
    switch (cfg.arch) {
        case Architecture::Linear:
            L.w_out = 0;
            L.b_out = d;
            L.total = d + 1;
            break;
        case Architecture::Mlp1:
            L.W1 = 0;
            L.b1 = h * d;
            L.w_out = h * d + h;
            L.b_out = h * d + 2 * h;
            L.total = h * d + 2 * h + 1;
            break;
        case Architecture::Mlp2PreLn:
            L.g1 = 0;
            L.be1 = d;
            L.W1 = 2 * d;
            L.b1 = 2 * d + h * d;
            L.g2 = L.b1 + h;
            L.be2 = L.g2 + h;
            L.W2 = L.be2 + h;
            L.b2 = L.W2 + h * h;
            L.w_out = L.b2 + h;
            L.b_out = L.w_out + h;
            L.total = L.b_out + 1;
            break;
    }
    return L;
}

struct LnState {
    std::vector<double> xhat;
    double inv_s = 0.0;
};

void ln_forward(std::span<const double> z, const double* gamma, const double* beta,
                std::vector<double>& out, LnState& st) {
    const size_t n = z.size();
    double mu = 0.0;
    for (double v : z) mu += v;
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (double v : z) var += (v - mu) * (v - mu);
    var /= static_cast<double>(n);
    const double inv_s = 1.0 / std::sqrt(var + kLnEps);
    st.inv_s = inv_s;
    st.xhat.resize(n);
    out.resize(n);
    for (size_t i = 0; i < n; ++i) {
        st.xhat[i] = (z[i] - mu) * inv_s;
        out[i] = gamma[i] * st.xhat[i] + beta[i];
    }
}

// Given d loss/d out, accumulates gamma/beta gradients and writes
// d loss/d z into dz.
void ln_backward(std::span<const double> dout, const double* gamma, const LnState& st,
                 double* dgamma, double* dbeta, std::vector<double>& dz) {
    const size_t n = dout.size();
    double m1 = 0.0, m2 = 0.0;
    dz.resize(n);
    for (size_t i = 0; i < n; ++i) {
        dgamma[i] += dout[i] * st.xhat[i];
        dbeta[i] += dout[i];
        const double g = gamma[i] * dout[i];
        dz[i] = g;   // temporarily holds gamma*dout
        m1 += g;
        m2 += g * st.xhat[i];
    }
    m1 /= static_cast<double>(n);
    m2 /= static_cast<double>(n);
    for (size_t i = 0; i < n; ++i)
        dz[i] = (dz[i] - m1 - st.xhat[i] * m2) * st.inv_s;
}

struct Scratch {
    std::vector<double> u;      // LN1 output (mlp2)
    LnState ln1;
    std::vector<double> z1, h1;
    std::vector<double> v;      // LN2 output (mlp2)
    LnState ln2;
    std::vector<double> z2, h2;
    // backward temporaries
    std::vector<double> dz2, dv, dh1, dz1, du;
};

double forward(const NetworkConfig& cfg, const Layout& L, const double* th,
               std::span<const double> x, Scratch* s) {
    switch (cfg.arch) {
        case Architecture::Linear: {
            double y = th[L.b_out];
            for (int j = 0; j < L.d; ++j) y += th[L.w_out + j] * x[j];
            return y;
        }
        case Architecture::Mlp1: {
            Scratch local;
            Scratch& sc = s ? *s : local;
            sc.z1.resize(L.h);
            sc.h1.resize(L.h);
            for (int i = 0; i < L.h; ++i) {
                const double* row = th + L.W1 + static_cast<size_t>(i) * L.d;
                double z = th[L.b1 + i];
                for (int j = 0; j < L.d; ++j) z += row[j] * x[j];
                sc.z1[i] = z;
                sc.h1[i] = act(z, cfg.activation);
            }
            double y = th[L.b_out];
            for (int i = 0; i < L.h; ++i) y += th[L.w_out + i] * sc.h1[i];
            return y;
        }
        case Architecture::Mlp2PreLn: {
            Scratch local;
            Scratch& sc = s ? *s : local;
            ln_forward(x, th + L.g1, th + L.be1, sc.u, sc.ln1);
            sc.z1.resize(L.h);
            sc.h1.resize(L.h);
            for (int i = 0; i < L.h; ++i) {
                const double* row = th + L.W1 + static_cast<size_t>(i) * L.d;
                double z = th[L.b1 + i];
                for (int j = 0; j < L.d; ++j) z += row[j] * sc.u[j];
                sc.z1[i] = z;
                sc.h1[i] = act(z, cfg.activation);
            }
            ln_forward(sc.h1, th + L.g2, th + L.be2, sc.v, sc.ln2);
            sc.z2.resize(L.h);
            sc.h2.resize(L.h);
            for (int i = 0; i < L.h; ++i) {
                const double* row = th + L.W2 + static_cast<size_t>(i) * L.h;
                double z = th[L.b2 + i];
                for (int j = 0; j < L.h; ++j) z += row[j] * sc.v[j];
                sc.z2[i] = z;
                sc.h2[i] = act(z, cfg.activation);
            }
            double y = th[L.b_out];
            for (int i = 0; i < L.h; ++i) y += th[L.w_out + i] * sc.h2[i];
            return y;
        }
    }
    throw ConfigError("unknown architecture");
}

// Accumulates upstream * d y / d theta into grad. Requires the scratch
// filled by a preceding forward() on the same x.
void backward(const NetworkConfig& cfg, const Layout& L, const double* th,
              std::span<const double> x, Scratch& sc, double upstream, double* grad) {
    switch (cfg.arch) {
        case Architecture::Linear: {
            grad[L.b_out] += upstream;
            for (int j = 0; j < L.d; ++j) grad[L.w_out + j] += upstream * x[j];
            return;
        }
        case Architecture::Mlp1: {
            grad[L.b_out] += upstream;
            for (int i = 0; i < L.h; ++i) {
                grad[L.w_out + i] += upstream * sc.h1[i];
                const double dz = upstream * th[L.w_out + i] * act_deriv(sc.z1[i], cfg.activation);
                grad[L.b1 + i] += dz;
                double* wrow = grad + L.W1 + static_cast<size_t>(i) * L.d;
                for (int j = 0; j < L.d; ++j) wrow[j] += dz * x[j];
            }
            return;
        }
        case Architecture::Mlp2PreLn: {
            grad[L.b_out] += upstream;
            sc.dz2.resize(L.h);
            for (int i = 0; i < L.h; ++i) {
                grad[L.w_out + i] += upstream * sc.h2[i];
                sc.dz2[i] = upstream * th[L.w_out + i] * act_deriv(sc.z2[i], cfg.activation);
            }
            sc.dv.assign(L.h, 0.0);
            for (int i = 0; i < L.h; ++i) {
                grad[L.b2 + i] += sc.dz2[i];
                const double* wrow = th + L.W2 + static_cast<size_t>(i) * L.h;
                double* grow = grad + L.W2 + static_cast<size_t>(i) * L.h;
                for (int j = 0; j < L.h; ++j) {
                    grow[j] += sc.dz2[i] * sc.v[j];
                    sc.dv[j] += sc.dz2[i] * wrow[j];
                }
            }
            ln_backward(sc.dv, th + L.g2, sc.ln2, grad + L.g2, grad + L.be2, sc.dh1);
            sc.dz1.resize(L.h);
            for (int i = 0; i < L.h; ++i)
                sc.dz1[i] = sc.dh1[i] * act_deriv(sc.z1[i], cfg.activation);
            sc.du.assign(L.d, 0.0);
            for (int i = 0; i < L.h; ++i) {
                grad[L.b1 + i] += sc.dz1[i];
                const double* wrow = th + L.W1 + static_cast<size_t>(i) * L.d;
                double* grow = grad + L.W1 + static_cast<size_t>(i) * L.d;
                for (int j = 0; j < L.d; ++j) {
                    grow[j] += sc.dz1[i] * sc.u[j];
                    sc.du[j] += sc.dz1[i] * wrow[j];
                }
            }
            // LN1 gamma/beta; the input itself carries no parameters.
            for (int j = 0; j < L.d; ++j) {
                grad[L.g1 + j] += sc.du[j] * sc.ln1.xhat[j];
                grad[L.be1 + j] += sc.du[j];
            }
            return;
        }
    }
}

void check_input_dim(const NetworkConfig& cfg, std::span<const double> x) {
    if (static_cast<int>(x.size()) != cfg.input_dim)
        throw DimensionMismatchError("feature length " + std::to_string(x.size()) +
                                     " does not match network input_dim " +
                                     std::to_string(cfg.input_dim));
}

} // namespace

const char* to_string(Architecture a) {
    switch (a) {
        case Architecture::Linear: return "linear";
        case Architecture::Mlp1: return "mlp1";
        case Architecture::Mlp2PreLn: return "mlp2_preln";
    }
    return "?";
}

Architecture architecture_from_string(const std::string& s) {
    if (s == "linear") return Architecture::Linear;
    if (s == "mlp1") return Architecture::Mlp1;
    if (s == "mlp2_preln") return Architecture::Mlp2PreLn;
    throw ConfigError("unknown architecture: '" + s + "'");
}

const char* to_string(Activation a) {
    return a == Activation::Gelu ? "gelu" : "relu";
}

Activation activation_from_string(const std::string& s) {
    if (s == "gelu") return Activation::Gelu;
    if (s == "relu") return Activation::Relu;
    throw ConfigError("unknown activation: '" + s + "'");
}

size_t parameter_count(const NetworkConfig& cfg) {
    if (cfg.input_dim < 1) throw ConfigError("input_dim must be >= 1");
    if (cfg.hidden < 1) throw ConfigError("hidden must be >= 1");
    return layout_of(cfg).total;
}

ValueNetwork ValueNetwork::init(const NetworkConfig& cfg) {
    const Layout L = layout_of(cfg);   // validates via parameter_count below
    if (cfg.input_dim < 1) throw ConfigError("input_dim must be >= 1");
    if (cfg.hidden < 1) throw ConfigError("hidden must be >= 1");
    std::vector<double> theta(L.total, 0.0);
    Rng rng(derive_seed(cfg.init_seed, 0x6e657477ULL));
    auto fill_gaussian = [&](size_t off, size_t n, int fan_in) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (size_t i = 0; i < n; ++i) theta[off + i] = rng.gaussian() * scale;
    };
    const size_t d = static_cast<size_t>(cfg.input_dim), h = static_cast<size_t>(cfg.hidden);
    switch (cfg.arch) {
        case Architecture::Linear:
            fill_gaussian(L.w_out, d, cfg.input_dim);
            break;
        case Architecture::Mlp1:
            fill_gaussian(L.W1, h * d, cfg.input_dim);
            fill_gaussian(L.w_out, h, cfg.hidden);
            break;
        case Architecture::Mlp2PreLn:
            std::fill_n(theta.begin() + static_cast<long>(L.g1), d, 1.0);
            fill_gaussian(L.W1, h * d, cfg.input_dim);
            std::fill_n(theta.begin() + static_cast<long>(L.g2), h, 1.0);
            fill_gaussian(L.W2, h * h, cfg.hidden);
            fill_gaussian(L.w_out, h, cfg.hidden);
            break;
    }
    return ValueNetwork(cfg, std::move(theta));
}

double ValueNetwork::predict_one(std::span<const double> x) const {
    check_input_dim(cfg_, x);
    const double y = forward(cfg_, layout_of(cfg_), theta_.data(), x, nullptr);
    if (!std::isfinite(y)) throw NumericError("value network produced a non-finite prediction");
    return y;
}

std::vector<double> ValueNetwork::predict(const std::vector<FeatureVector>& features) const {
    std::vector<double> out;
    out.reserve(features.size());
    const Layout L = layout_of(cfg_);
    for (const auto& x : features) {
        check_input_dim(cfg_, x);
        const double y = forward(cfg_, L, theta_.data(), x, nullptr);
        if (!std::isfinite(y)) throw NumericError("value network produced a non-finite prediction");
        out.push_back(y);
    }
    return out;
}

std::vector<double> ValueNetwork::prediction_gradient(std::span<const double> x) const {
    check_input_dim(cfg_, x);
    const Layout L = layout_of(cfg_);
    Scratch sc;
    forward(cfg_, L, theta_.data(), x, &sc);
    std::vector<double> grad(theta_.size(), 0.0);
    backward(cfg_, L, theta_.data(), x, sc, 1.0, grad.data());
    return grad;
}

double ValueNetwork::mse_and_grad(std::span<const FeatureVector> xs, std::span<const double> rs,
                                  std::vector<double>* grad) const {
    if (xs.size() != rs.size() || xs.empty())
        throw DimensionMismatchError("mse_and_grad needs equally many inputs and targets");
    if (grad && grad->size() != theta_.size())
        throw DimensionMismatchError("gradient accumulator has wrong size");
    const Layout L = layout_of(cfg_);
    const double inv_n = 1.0 / static_cast<double>(xs.size());
    Scratch sc;
    double loss = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        check_input_dim(cfg_, xs[i]);
        const double y = forward(cfg_, L, theta_.data(), xs[i], grad ? &sc : nullptr);
        const double e = y - rs[i];
        loss += e * e * inv_n;
        if (grad) backward(cfg_, L, theta_.data(), xs[i], sc, 2.0 * e * inv_n, grad->data());
    }
    return loss;
}

void ReplayBuffer::push(FeatureVector x, double r) {
    if (!(r >= 0.0 && r <= 1.0))
        throw RangeError("replay reward " + std::to_string(r) + " outside [0,1]");
    for (double v : x)
        if (!std::isfinite(v)) throw NumericError("replay feature contains a non-finite value");
    if (!samples_.empty() && samples_.front().x.size() != x.size())
        throw DimensionMismatchError("replay sample dimension differs from buffer contents");
    samples_.push_back(Sample{std::move(x), r});
    if (capacity_ && samples_.size() > *capacity_) samples_.pop_front();
}

double dynamic_weight_decay(size_t buffer_size) {
    return std::min(0.01, 0.01 / static_cast<double>(buffer_size));
}

namespace {

double full_buffer_mse(const ValueNetwork& net, const ReplayBuffer& buffer, const Layout& L) {
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(buffer.size());
    for (const Sample& s : buffer) {
        const double y = forward(net.config(), L, net.parameters().data(), s.x, nullptr);
        const double e = y - s.r;
        loss += e * e * inv_n;
    }
    return loss;
}

} // namespace

TrainReport train_step(ValueNetwork& net, const ReplayBuffer& buffer,
                       const TrainHyper& hyper, Rng& rng) {
    if (buffer.empty()) throw ConfigError("train_step called with an empty replay buffer");
    if (hyper.lr < 0.0) throw ConfigError("learning rate must be >= 0");
    if (hyper.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    const Layout L = layout_of(net.config());
    const size_t n = buffer.size();
    const double wd = hyper.weight_decay_override.value_or(dynamic_weight_decay(n));

    TrainReport report;
    report.initial_mse = full_buffer_mse(net, buffer, L);
    double prev = report.initial_mse;
    report.final_mse = prev;

    std::vector<double>& theta = net.mutable_parameters();
    std::vector<double> grad(theta.size());
    Scratch sc;
    int bad_epochs = 0;
    for (int epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
        const std::vector<size_t> perm = rng.permutation(n);
        for (size_t start = 0; start < n; start += static_cast<size_t>(hyper.batch_size)) {
            const size_t stop = std::min(n, start + static_cast<size_t>(hyper.batch_size));
            const double inv_b = 1.0 / static_cast<double>(stop - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (size_t i = start; i < stop; ++i) {
                const Sample& s = buffer.at(perm[i]);
                const double y = forward(net.config(), L, theta.data(), s.x, &sc);
                const double e = y - s.r;
                batch_loss += e * e * inv_b;
                backward(net.config(), L, theta.data(), s.x, sc, 2.0 * e * inv_b, grad.data());
            }
            if (!std::isfinite(batch_loss))
                throw NumericError("training loss became non-finite; aborting train_step");
            for (size_t i = 0; i < theta.size(); ++i)
                theta[i] -= hyper.lr * (grad[i] + wd * theta[i]);
        }
        report.epochs_run = epoch;
        const double mse = full_buffer_mse(net, buffer, L);
        if (!std::isfinite(mse))
            throw NumericError("full-buffer MSE became non-finite; aborting train_step");
        report.final_mse = mse;
        if (prev - mse < hyper.early_stop_tol)
            ++bad_epochs;
        else
            bad_epochs = 0;
        prev = mse;
        if (bad_epochs >= hyper.early_stop_patience) {
            report.stopped_early = true;
            break;
        }
    }
    net.set_step_count(net.step_count() + 1);
    return report;
}

CheckReport gradient_check(const ValueNetwork& net, const FeatureVector& x,
                           double eps, double tol) {
    if (!(eps > 0.0)) throw RangeError("gradient_check eps must be > 0");
    check_input_dim(net.config(), x);
    const Layout L = layout_of(net.config());
    constexpr double kTarget = 0.5;

    // Analytic d/d theta of (f(x) - target)^2.
    Scratch sc;
    std::vector<double> theta(net.parameters().begin(), net.parameters().end());
    const double y0 = forward(net.config(), L, theta.data(), x, &sc);
    std::vector<double> analytic(theta.size(), 0.0);
    backward(net.config(), L, theta.data(), x, sc, 2.0 * (y0 - kTarget), analytic.data());

    CheckReport report;
    for (size_t i = 0; i < theta.size(); ++i) {
        const double saved = theta[i];
        theta[i] = saved + eps;
        const double yp = forward(net.config(), L, theta.data(), x, nullptr);
        theta[i] = saved - eps;
        const double ym = forward(net.config(), L, theta.data(), x, nullptr);
        theta[i] = saved;
        const double lp = (yp - kTarget) * (yp - kTarget);
        const double lm = (ym - kTarget) * (ym - kTarget);
        const double numeric = (lp - lm) / (2.0 * eps);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
        report.max_rel_error = std::max(report.max_rel_error,
                                        std::abs(analytic[i] - numeric) / denom);
    }
    report.passed = report.max_rel_error <= tol;
    return report;
}

} // namespace also
