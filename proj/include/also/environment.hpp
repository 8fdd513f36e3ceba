#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "also/rng.hpp"

namespace also {

// The seven social reward dimensions and their fixed score ranges.
struct DimensionSpec {
    const char* name;
    double min;
    double max;
};

inline constexpr std::array<DimensionSpec, 7> kDimensions{{
    {"BEL", 0.0, 10.0},
    {"REL", -5.0, 5.0},
    {"KNO", 0.0, 10.0},
    {"SEC", -10.0, 0.0},
    {"SOC", -10.0, 0.0},
    {"FIN", -5.0, 5.0},
    {"GOAL", 0.0, 10.0},
}};

using RawDims = std::array<double, 7>;

// r = (1/7) * sum_m (d_m - d_min) / (d_max - d_min). Throws RangeError
// naming the offending dimension if any value is outside its range.
double normalize_reward(const RawDims& dims);

// Inverse map from per-dimension unit scores in [0,1] to raw scores.
RawDims raw_from_unit(const std::array<double, 7>& unit);

enum class EnvKind { Stationary, Drifting, AbruptSwitch, AdaptiveAdversary, Remote };
enum class OpponentKind { Static, Drifting, BestResponse };

const char* to_string(EnvKind k);
EnvKind env_kind_from_string(const std::string& s);
const char* to_string(OpponentKind k);
OpponentKind opponent_kind_from_string(const std::string& s);

struct EnvConfig {
    EnvKind kind = EnvKind::Drifting;
    int num_arms = 12;
    int turns_per_episode = 20;
    // Target band for per-arm normalized-reward variance (drifting kind).
    std::array<double, 2> drift_variance_range{0.004, 0.015};
    int switch_period = 50;         // abrupt_switch
    int adversary_memory = 5;       // adaptive_adversary
    double adversary_penalty = 0.15;
    uint64_t seed = 0;
    // Arm base means on the normalized reward scale. Empty -> seeded draws.
    std::vector<double> arm_means;
    // Arm quality layout seed; 0 derives it from `seed`. Environments that
    // share means_seed share which arms are good (an environment "family").
    uint64_t means_seed = 0;
    // Observation noise on the normalized reward scale (kind defaults apply
    // when <= 0 is given and the kind needs noise).
    double noise_std = -1.0;
    // Context-linked regimes (drifting kind): regime_count > 0 gives the
    // current regime's preferred arm a +regime_bonus latent mean and stamps
    // a regime marker into the opponent utterance so that dialogue history
    // carries the signal.
    int regime_count = 0;
    int regime_period = 50;
    double regime_bonus = 0.3;
    // Opponent model; unset -> kind default (best_response only for
    // adaptive_adversary, static otherwise).
    std::optional<OpponentKind> opponent;
    double opponent_step = 0.01;    // drifting opponent random-walk step
    // Remote kind.
    std::string endpoint;
    int timeout_ms = 5000;
    int retries = 2;
};

struct TurnRecord {
    int turn = 0;                      // 1-based
    std::optional<int> agent_arm;      // nullopt = no strategy (vanilla)
    std::optional<int> opponent_arm;
    std::string agent_utterance;       // synthetic placeholder token
    std::string opponent_utterance;
    RawDims raw_dims{};
    double reward = 0.0;               // == normalize_reward(raw_dims)
};

// Counterpart behavior model. best_response depresses the latent mean of
// the agent's modal recent arm; drifting random-walks per-arm offsets.
struct OpponentModel {
    OpponentKind kind = OpponentKind::Static;
    int memory = 5;
    double penalty = 0.15;
    double step = 0.01;
    std::deque<int> recent_arms;
    std::vector<double> offsets;   // drifting kind, one per arm
    Rng rng{0};
};

// Feeds one observed agent arm into the model and advances its state.
void opponent_act(OpponentModel& model, int observed_agent_arm);

// Modal arm of the memory window; ties broken uniformly at random from the
// model's own stream (lowest-index tie-breaking would skew the long-run
// penalty distribution under uniform play). nullopt when window empty.
std::optional<int> opponent_modal_arm(OpponentModel& model);

class Environment {
public:
    virtual ~Environment() = default;

    // Emits the turn record for the agent's (optional) arm, advances the
    // latent processes and the opponent model. persona_text is forwarded to
    // remote environments only.
    virtual TurnRecord step(std::optional<int> agent_arm,
                            std::optional<int> opponent_arm = std::nullopt,
                            const std::string& persona_text = {}) = 0;

    virtual int num_arms() const = 0;
    virtual int turns_per_episode() const = 0;
    virtual int turn() const = 0;    // completed turns
    bool done() const { return turn() >= turns_per_episode(); }

    // Realized counterfactual rewards for every arm at the last completed
    // turn (simulated kinds), and the same for the opponent side in
    // bilateral play. Empty when unavailable (remote).
    virtual const std::vector<double>& last_arm_rewards() const = 0;
    virtual const std::vector<double>& last_opponent_arm_rewards() const = 0;

    // Raw dimension scores behind the opponent arm's reward at the last
    // step, when an opponent arm was supplied (bilateral play).
    virtual std::optional<RawDims> last_opponent_raw() const { return std::nullopt; }

    // Current latent mean reward per arm, before noise (simulated kinds).
    virtual std::vector<double> expected_rewards() const = 0;
};

std::unique_ptr<Environment> create_environment(const EnvConfig& config);

} // namespace also
