#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "also/featurizer.hpp"
#include "also/rng.hpp"

namespace also {

enum class Architecture { Linear, Mlp1, Mlp2PreLn };
enum class Activation { Gelu, Relu };

const char* to_string(Architecture a);
Architecture architecture_from_string(const std::string& s);
const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct NetworkConfig {
    Architecture arch = Architecture::Mlp1;
    int hidden = 512;
    Activation activation = Activation::Gelu;
    int input_dim = 0;
    uint64_t init_seed = 0;
};

size_t parameter_count(const NetworkConfig& cfg);

// Trainable scalar-output value network f_theta over a flat parameter
// vector. All arithmetic is double precision; gradients are analytic and
// validated by gradient_check.
//
//   linear      y = w.x + b
//   mlp1        y = w2.act(W1 x + b1) + b2
//   mlp2_preln  y = w3.act(W2 LN2(act(W1 LN1(x) + b1)) + b2) + b3
class ValueNetwork {
public:
    static ValueNetwork init(const NetworkConfig& cfg);

    const NetworkConfig& config() const { return cfg_; }
    std::span<const double> parameters() const { return theta_; }
    std::vector<double>& mutable_parameters() { return theta_; }
    long step_count() const { return step_count_; }
    void set_step_count(long n) { step_count_ = n; }

    double predict_one(std::span<const double> x) const;
    // v-hat per arm, in input order. Pure; raw (unclipped) outputs.
    std::vector<double> predict(const std::vector<FeatureVector>& features) const;

    // d f_theta(x) / d theta, one entry per parameter.
    std::vector<double> prediction_gradient(std::span<const double> x) const;

    // Mean squared error over (xs, rs); accumulates d mse / d theta into
    // *grad when non-null (grad must be parameter-sized and zeroed).
    double mse_and_grad(std::span<const FeatureVector> xs, std::span<const double> rs,
                        std::vector<double>* grad) const;

private:
    ValueNetwork(NetworkConfig cfg, std::vector<double> theta)
        : cfg_(cfg), theta_(std::move(theta)) {}

    NetworkConfig cfg_;
    std::vector<double> theta_;
    long step_count_ = 0;
};

struct Sample {
    FeatureVector x;
    double r = 0.0;
};

// Ordered (x, r) store with optional FIFO capacity.
class ReplayBuffer {
public:
    ReplayBuffer() = default;
    explicit ReplayBuffer(std::optional<size_t> capacity) : capacity_(capacity) {}

    size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    const Sample& at(size_t i) const { return samples_.at(i); }
    std::optional<size_t> capacity() const { return capacity_; }
    auto begin() const { return samples_.begin(); }
    auto end() const { return samples_.end(); }

    void push(FeatureVector x, double r);

private:
    std::deque<Sample> samples_;
    std::optional<size_t> capacity_;
};

inline void push_sample(ReplayBuffer& buffer, FeatureVector x, double r) {
    buffer.push(std::move(x), r);
}

// min(0.01, 0.01 / N) where N is the buffer size.
double dynamic_weight_decay(size_t buffer_size);

struct TrainHyper {
    double lr = 0.001;
    int batch_size = 8;
    int max_epochs = 100;
    int early_stop_patience = 5;
    double early_stop_tol = 1e-5;
    std::optional<double> weight_decay_override;   // unset -> dynamic rule
};

struct TrainReport {
    int epochs_run = 0;
    double initial_mse = 0.0;
    double final_mse = 0.0;
    bool stopped_early = false;
};

// Minibatch gradient descent on MSE with decoupled weight decay. Stops
// early once the epoch-over-epoch improvement of the full-buffer MSE stays
// below early_stop_tol for early_stop_patience consecutive epochs.
TrainReport train_step(ValueNetwork& net, const ReplayBuffer& buffer,
                       const TrainHyper& hyper, Rng& rng);

struct CheckReport {
    double max_rel_error = 0.0;
    bool passed = false;
};

// Central finite differences vs analytic gradient on a single-sample MSE
// (target 0.5). Relative error per component uses max(|a|, |n|, 1e-6).
CheckReport gradient_check(const ValueNetwork& net, const FeatureVector& x,
                           double eps, double tol);

} // namespace also
