#include "also/selector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "also/errors.hpp"

namespace also {

namespace {

void check_finite(std::span<const double> v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw NumericError(std::string(what) + " contains a non-finite value");
}

size_t argmax_lowest(std::span<const double> v) {
    size_t best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

} // namespace

AlsoState AlsoState::init(size_t num_arms, double eta, double lambda, double gamma_floor) {
    if (num_arms == 0) throw ConfigError("selector needs at least one arm");
    if (!(eta > 0.0)) throw ConfigError("eta must be > 0");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("lambda must be in (0,1]");
    if (!(gamma_floor >= 0.0 && gamma_floor <= 1.0)) throw ConfigError("gamma floor must be in [0,1]");
    AlsoState s;
    s.scores.assign(num_arms, 0.0);
    s.eta = eta;
    s.lambda = lambda;
    s.gamma_floor = gamma_floor;
    return s;
}

AlsoState AlsoState::resized(size_t new_k) const {
    if (new_k < scores.size()) throw ConfigError("cannot shrink selector state");
    AlsoState s = *this;
    s.scores.resize(new_k, 0.0);
    return s;
}

AlsoState smooth_scores(const AlsoState& state, std::span<const double> predictions) {
    if (predictions.size() != state.scores.size())
        throw DimensionMismatchError("predictions length " + std::to_string(predictions.size()) +
                                     " != number of arms " + std::to_string(state.scores.size()));
    check_finite(predictions, "predictions");
    AlsoState next = state;
    for (size_t k = 0; k < next.scores.size(); ++k)
        next.scores[k] = state.lambda * state.scores[k] + predictions[k];
    return next;
}

std::vector<double> softmax_weights(std::span<const double> values, double eta,
                                    double gamma_floor) {
    check_finite(values, "scores");
    const size_t k = values.size();
    double m = values[0];
    for (double v : values) m = std::max(m, v);
    std::vector<double> pi(k);
    double sum = 0.0;
    for (size_t i = 0; i < k; ++i) {
        pi[i] = std::exp(eta * (values[i] - m));
        sum += pi[i];
    }
    for (double& p : pi) p /= sum;
    if (gamma_floor > 0.0) {
        const double u = gamma_floor / static_cast<double>(k);
        for (double& p : pi) p = (1.0 - gamma_floor) * p + u;
    }
    return pi;
}

std::vector<double> selection_distribution(const AlsoState& state) {
    return softmax_weights(state.scores, state.eta, state.gamma_floor);
}

size_t sample_arm(std::span<const double> pi, Rng& rng) {
    if (pi.empty()) throw ConfigError("empty distribution");
    double sum = 0.0;
    for (double p : pi) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw RangeError("invalid probability entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw RangeError("distribution does not sum to 1");
    const double u = rng.uniform01() * sum;
    double acc = 0.0;
    size_t last_positive = 0;
    for (size_t i = 0; i < pi.size(); ++i) {
        if (pi[i] > 0.0) last_positive = i;
        acc += pi[i];
        if (u < acc) return i;
    }
    return last_positive;
}

size_t select_epsilon_greedy(std::span<const double> predictions, double epsilon, Rng& rng) {
    if (predictions.empty()) throw ConfigError("empty prediction vector");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw RangeError("epsilon must be in [0,1]");
    check_finite(predictions, "predictions");
    if (rng.uniform01() < epsilon)
        return static_cast<size_t>(rng.uniform_int(predictions.size()));
    return argmax_lowest(predictions);
}

Exp3State Exp3State::init(size_t num_arms, double eta, double gamma) {
    if (num_arms == 0) throw ConfigError("selector needs at least one arm");
    if (!(eta > 0.0)) throw ConfigError("eta must be > 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in [0,1]");
    Exp3State s;
    s.cum_estimates.assign(num_arms, 0.0);
    s.eta = eta;
    s.gamma = gamma;
    return s;
}

std::vector<double> exp3_distribution(const Exp3State& state) {
    return softmax_weights(state.cum_estimates, state.eta, state.gamma);
}

Exp3Choice select_exp3(const Exp3State& state, Rng& rng) {
    Exp3Choice choice;
    choice.pi = exp3_distribution(state);
    choice.arm = sample_arm(choice.pi, rng);
    return choice;
}

Exp3State update_exp3(const Exp3State& state, size_t arm, double reward, double pi_arm) {
    if (arm >= state.cum_estimates.size()) throw RangeError("arm index out of range");
    if (!(pi_arm > 0.0)) throw RangeError("pi for the played arm must be > 0");
    if (!(reward >= 0.0 && reward <= 1.0)) throw RangeError("EXP3 reward must be in [0,1]");
    Exp3State next = state;
    next.cum_estimates[arm] += reward / pi_arm;
    return next;
}

NeuralUcbState NeuralUcbState::init(size_t param_count, double lambda_reg, double nu) {
    if (param_count == 0) throw ConfigError("NeuralUCB state needs at least one parameter");
    if (!(lambda_reg > 0.0)) throw ConfigError("lambda_reg must be > 0");
    if (!(nu >= 0.0)) throw ConfigError("nu must be >= 0");
    NeuralUcbState s;
    s.grad_cov_diag.assign(param_count, lambda_reg);
    s.lambda_reg = lambda_reg;
    s.nu = nu;
    return s;
}

double ucb_bonus(std::span<const double> grad, std::span<const double> cov_diag,
                 double lambda_reg, double nu) {
    if (grad.size() != cov_diag.size())
        throw DimensionMismatchError("gradient and covariance diagonal differ in length");
    double acc = 0.0;
    for (size_t i = 0; i < grad.size(); ++i) {
        if (!(cov_diag[i] > 0.0)) throw RangeError("covariance diagonal entries must be > 0");
        acc += lambda_reg * grad[i] * grad[i] / cov_diag[i];
    }
    return nu * std::sqrt(acc);
}

size_t select_neural_ucb(const ValueNetwork& net, const std::vector<FeatureVector>& features,
                         const NeuralUcbState& state) {
    if (features.empty()) throw ConfigError("NeuralUCB selection needs at least one arm");
    if (state.grad_cov_diag.size() != net.parameters().size())
        throw DimensionMismatchError("NeuralUCB state does not match network parameter count");
    size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (size_t a = 0; a < features.size(); ++a) {
        const double mu = net.predict_one(features[a]);
        const std::vector<double> g = net.prediction_gradient(features[a]);
        const double score = mu + ucb_bonus(g, state.grad_cov_diag, state.lambda_reg, state.nu);
        if (score > best_score) {
            best_score = score;
            best = a;
        }
    }
    return best;
}

NeuralUcbState update_neural_ucb(const NeuralUcbState& state, std::span<const double> grad) {
    if (grad.size() != state.grad_cov_diag.size())
        throw DimensionMismatchError("gradient length does not match NeuralUCB state");
    NeuralUcbState next = state;
    for (size_t i = 0; i < grad.size(); ++i) next.grad_cov_diag[i] += grad[i] * grad[i];
    return next;
}

} // namespace also
