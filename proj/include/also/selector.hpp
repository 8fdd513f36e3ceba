#pragma once

#include <span>
#include <vector>

#include "also/rng.hpp"
#include "also/surrogate.hpp"

namespace also {

// Decayed cumulative scores driving the exponential-weights distribution.
struct AlsoState {
    std::vector<double> scores;   // S_k, init 0
    double eta = 10.0;            // exploration temperature
    double lambda = 0.9;          // score decay, in (0,1]
    double gamma_floor = 0.0;     // optional uniform mixing, default off

    static AlsoState init(size_t num_arms, double eta = 10.0, double lambda = 0.9,
                          double gamma_floor = 0.0);
    // Same state extended to new_k arms; new arms start at S = 0.
    AlsoState resized(size_t new_k) const;
};

// S'_k = lambda * S_k + v_k for every arm. Pure.
AlsoState smooth_scores(const AlsoState& state, std::span<const double> predictions);

// pi_k proportional to exp(eta * S_k), max-subtracted for stability, then
// mixed with gamma_floor/K when a floor is configured. Sums to 1.
std::vector<double> selection_distribution(const AlsoState& state);

// Softmax over eta * values; shared by the ALSO distribution and the
// no-smoothing ablation (which feeds instantaneous predictions).
std::vector<double> softmax_weights(std::span<const double> values, double eta,
                                    double gamma_floor = 0.0);

// Categorical draw via inverse CDF on one uniform variate.
size_t sample_arm(std::span<const double> pi, Rng& rng);

// With probability 1-epsilon the argmax (lowest index on ties), otherwise a
// uniform arm.
size_t select_epsilon_greedy(std::span<const double> predictions, double epsilon, Rng& rng);

// Classical EXP3 over importance-weighted realized rewards.
struct Exp3State {
    std::vector<double> cum_estimates;
    double gamma = 0.05;   // uniform-mixing floor in [0,1]
    double eta = 0.1;

    static Exp3State init(size_t num_arms, double eta = 0.1, double gamma = 0.05);
};

struct Exp3Choice {
    size_t arm = 0;
    std::vector<double> pi;
};

std::vector<double> exp3_distribution(const Exp3State& state);
Exp3Choice select_exp3(const Exp3State& state, Rng& rng);

// Feeds back (k_t, r, pi_{k_t}): adds r / pi to cum_estimates[k_t] only.
Exp3State update_exp3(const Exp3State& state, size_t arm, double reward, double pi_arm);

// Diagonal-covariance neural UCB (one entry of U per network parameter).
struct NeuralUcbState {
    std::vector<double> grad_cov_diag;
    double lambda_reg = 0.1;
    double nu = 1.0;

    static NeuralUcbState init(size_t param_count, double lambda_reg = 0.1, double nu = 1.0);
};

// nu * sqrt(sum_i lambda_reg * g_i^2 / U_i).
double ucb_bonus(std::span<const double> grad, std::span<const double> cov_diag,
                 double lambda_reg, double nu);

// argmax_a mu(a) + bonus(a); lowest index on ties. Does not mutate state.
size_t select_neural_ucb(const ValueNetwork& net, const std::vector<FeatureVector>& features,
                         const NeuralUcbState& state);

// U_i += g_i(k_t)^2 for the pulled arm's prediction gradient.
NeuralUcbState update_neural_ucb(const NeuralUcbState& state, std::span<const double> grad);

} // namespace also
