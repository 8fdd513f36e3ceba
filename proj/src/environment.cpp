#include "also/environment.hpp"

#include <algorithm>
#include <cmath>

#include "also/errors.hpp"

namespace also {

std::unique_ptr<Environment> create_remote_environment(const EnvConfig& config);

double normalize_reward(const RawDims& dims) {
    double acc = 0.0;
    for (size_t m = 0; m < kDimensions.size(); ++m) {
        const DimensionSpec& spec = kDimensions[m];
        const double d = dims[m];
        if (!std::isfinite(d) || d < spec.min || d > spec.max)
            throw RangeError(std::string("dimension ") + spec.name + " value " +
                             std::to_string(d) + " outside [" + std::to_string(spec.min) +
                             ", " + std::to_string(spec.max) + "]");
        acc += (d - spec.min) / (spec.max - spec.min);
    }
    return acc / 7.0;
}

RawDims raw_from_unit(const std::array<double, 7>& unit) {
    RawDims out;
    for (size_t m = 0; m < kDimensions.size(); ++m)
        out[m] = kDimensions[m].min + unit[m] * (kDimensions[m].max - kDimensions[m].min);
    return out;
}

const char* to_string(EnvKind k) {
    switch (k) {
        case EnvKind::Stationary: return "stationary";
        case EnvKind::Drifting: return "drifting";
        case EnvKind::AbruptSwitch: return "abrupt_switch";
        case EnvKind::AdaptiveAdversary: return "adaptive_adversary";
        case EnvKind::Remote: return "remote";
    }
    return "?";
}

EnvKind env_kind_from_string(const std::string& s) {
    if (s == "stationary") return EnvKind::Stationary;
    if (s == "drifting") return EnvKind::Drifting;
    if (s == "abrupt_switch") return EnvKind::AbruptSwitch;
    if (s == "adaptive_adversary") return EnvKind::AdaptiveAdversary;
    if (s == "remote") return EnvKind::Remote;
    throw ConfigError("unknown environment kind: '" + s + "'");
}

const char* to_string(OpponentKind k) {
    switch (k) {
        case OpponentKind::Static: return "static";
        case OpponentKind::Drifting: return "drifting";
        case OpponentKind::BestResponse: return "best_response";
    }
    return "?";
}

OpponentKind opponent_kind_from_string(const std::string& s) {
    if (s == "static") return OpponentKind::Static;
    if (s == "drifting") return OpponentKind::Drifting;
    if (s == "best_response") return OpponentKind::BestResponse;
    throw ConfigError("unknown opponent kind: '" + s + "'");
}

void opponent_act(OpponentModel& model, int observed_agent_arm) {
    switch (model.kind) {
        case OpponentKind::Static:
            return;
        case OpponentKind::Drifting:
            for (double& off : model.offsets) {
                off += model.step * model.rng.gaussian();
                off = std::clamp(off, -0.15, 0.15);
            }
            return;
        case OpponentKind::BestResponse:
            if (observed_agent_arm < 0) throw RangeError("opponent observed an invalid arm");
            model.recent_arms.push_back(observed_agent_arm);
            while (static_cast<int>(model.recent_arms.size()) > model.memory)
                model.recent_arms.pop_front();
            return;
    }
}

std::optional<int> opponent_modal_arm(OpponentModel& model) {
    if (model.kind != OpponentKind::BestResponse) return std::nullopt;
    if (static_cast<int>(model.recent_arms.size()) < model.memory) return std::nullopt;
    std::vector<int> count;
    for (int arm : model.recent_arms) {
        if (arm >= static_cast<int>(count.size())) count.resize(arm + 1, 0);
        ++count[arm];
    }
    int best = *std::max_element(count.begin(), count.end());
    std::vector<int> ties;
    for (size_t k = 0; k < count.size(); ++k)
        if (count[k] == best) ties.push_back(static_cast<int>(k));
    if (ties.size() == 1) return ties[0];
    return ties[model.rng.uniform_int(ties.size())];
}

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

void validate(const EnvConfig& c) {
    if (c.num_arms < 1) throw ConfigError("num_arms must be >= 1");
    if (c.turns_per_episode < 1) throw ConfigError("turns_per_episode must be >= 1");
    if (!(c.drift_variance_range[0] > 0.0) || c.drift_variance_range[0] > c.drift_variance_range[1])
        throw ConfigError("drift_variance_range must satisfy 0 < low <= high");
    if (c.switch_period < 1) throw ConfigError("switch_period must be >= 1");
    if (c.adversary_memory < 1) throw ConfigError("adversary_memory must be >= 1");
    if (c.adversary_penalty < 0.0) throw ConfigError("adversary_penalty must be >= 0");
    if (!c.arm_means.empty()) {
        if (static_cast<int>(c.arm_means.size()) != c.num_arms)
            throw ConfigError("arm_means must have one entry per arm");
        for (double m : c.arm_means)
            if (!(m >= 0.0 && m <= 1.0)) throw ConfigError("arm_means entries must be in [0,1]");
    }
    if (c.regime_count < 0 || c.regime_count > c.num_arms)
        throw ConfigError("regime_count must be in [0, num_arms]");
    if (c.regime_period < 1) throw ConfigError("regime_period must be >= 1");
    if (c.kind == EnvKind::Remote && c.endpoint.empty())
        throw ConfigError("remote environment requires an endpoint");
}

// All simulated kinds share one emission pipeline over K+1 latent rows
// (row K is the no-strategy baseline used when agent_arm is nullopt).
class SyntheticEnvironment final : public Environment {
public:
    explicit SyntheticEnvironment(const EnvConfig& cfg)
        : cfg_(cfg),
          K_(cfg.num_arms),
          emit_rng_(derive_seed(cfg.seed, 0x656d6974ULL)),
          drift_rng_(derive_seed(cfg.seed, 0x64726966ULL)) {
        const uint64_t means_seed = cfg.means_seed ? cfg.means_seed : cfg.seed;
        Rng means_rng(derive_seed(means_seed, 0x6d65616eULL));

        opponent_.kind = cfg.opponent.value_or(cfg.kind == EnvKind::AdaptiveAdversary
                                                   ? OpponentKind::BestResponse
                                                   : OpponentKind::Static);
        opponent_.memory = cfg.adversary_memory;
        opponent_.penalty = cfg.adversary_penalty;
        opponent_.step = cfg.opponent_step;
        opponent_.offsets.assign(K_, 0.0);
        opponent_.rng = Rng(derive_seed(cfg.seed, 0x6f70706fULL));

        const int rows = K_ + 1;
        anchors_.assign(rows, {});
        switch (cfg.kind) {
            case EnvKind::Stationary: {
                bern_means_.resize(rows);
                double total = 0.0;
                for (int k = 0; k < K_; ++k) {
                    bern_means_[k] = cfg.arm_means.empty() ? means_rng.uniform(0.2, 0.8)
                                                           : cfg.arm_means[k];
                    total += bern_means_[k];
                }
                bern_means_[K_] = total / K_;   // baseline: average arm quality
                break;
            }
            case EnvKind::Drifting: {
                const double lo = cfg.drift_variance_range[0];
                const double hi = cfg.drift_variance_range[1];
                delta_.assign(rows, 0.0);
                sig_noise_.resize(rows);
                sig_w_.resize(rows);
                for (int k = 0; k < rows; ++k) {
                    // Per-arm target variance, inset 10% from the band so the
                    // 2000-turn sample variance stays inside it.
                    const double v = means_rng.uniform(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo));
                    const double v_drift = 0.35 * v;
                    const double v_noise = 0.65 * v;
                    sig_noise_[k] = std::sqrt(std::max(v_noise - jitter_std_ * jitter_std_ / 7.0, 1e-9));
                    sig_w_[k] = std::sqrt(v_drift * (1.0 - (1.0 - phi_) * (1.0 - phi_)));
                    delta_[k] = means_rng.gaussian(0.0, std::sqrt(v_drift));
                    const double quality = (k < K_ && !cfg.arm_means.empty())
                                               ? cfg.arm_means[k] - 0.5
                                               : means_rng.uniform(-0.12, 0.12);
                    for (auto& a : anchors_[k])
                        a = clamp01(means_rng.uniform(0.4, 0.6) + quality);
                }
                if (cfg.regime_count > 0) {
                    regime_arm_ = means_rng.permutation(static_cast<size_t>(K_));
                    regime_seed_ = derive_seed(means_seed, 0x7265676dULL);
                }
                break;
            }
            case EnvKind::AbruptSwitch: {
                auto perm = means_rng.permutation(static_cast<size_t>(K_));
                switch_perm_.assign(perm.begin(), perm.end());
                switch_lo_.resize(rows);
                for (int k = 0; k < K_; ++k) switch_lo_[k] = 0.35 + 0.08 * means_rng.uniform01();
                switch_lo_[K_] = 0.40;
                noise_std_ = cfg.noise_std > 0.0 ? cfg.noise_std : 0.10;
                break;
            }
            case EnvKind::AdaptiveAdversary: {
                adv_means_.resize(rows);
                for (int k = 0; k < K_; ++k)
                    adv_means_[k] = cfg.arm_means.empty() ? means_rng.uniform(0.50, 0.60)
                                                          : cfg.arm_means[k];
                adv_means_[K_] = 0.52;
                noise_std_ = cfg.noise_std > 0.0 ? cfg.noise_std : 0.08;
                break;
            }
            case EnvKind::Remote:
                throw ConfigError("remote kind is not a synthetic environment");
        }
    }

    TurnRecord step(std::optional<int> agent_arm, std::optional<int> opponent_arm,
                    const std::string&) override {
        if (done())
            throw EpisodeExhaustedError("episode exhausted after " +
                                        std::to_string(cfg_.turns_per_episode) + " turns");
        check_arm(agent_arm);
        check_arm(opponent_arm);
        const int t = turn_ + 1;   // 1-based

        std::vector<double> mean_shift(K_ + 1, 0.0);
        latent_shifts(t, mean_shift);

        last_rewards_.assign(K_, 0.0);
        opp_raw_.reset();
        RawDims played_raw{};
        double played_reward = 0.0;
        const int played_row = agent_arm ? *agent_arm : K_;
        for (int k = 0; k <= K_; ++k) {
            std::array<double, 7> unit{};
            if (cfg_.kind == EnvKind::Stationary) {
                const double draw = emit_rng_.uniform01() < bern_means_[k] ? 1.0 : 0.0;
                unit.fill(draw);
            } else {
                const double eps = emit_rng_.gaussian(0.0, row_noise(k));
                for (int d = 0; d < 7; ++d)
                    unit[d] = clamp01(row_anchor(k, d) + mean_shift[k] + eps +
                                      emit_rng_.gaussian(0.0, jitter_std_));
            }
            const RawDims raw = raw_from_unit(unit);
            const double r = normalize_reward(raw);
            if (k < K_) last_rewards_[k] = r;
            if (k == played_row) {
                played_raw = raw;
                played_reward = r;
            }
            if (opponent_arm && k == *opponent_arm) opp_raw_ = raw;
        }
        last_opp_rewards_ = last_rewards_;

        if (cfg_.kind == EnvKind::Drifting)
            for (int k = 0; k <= K_; ++k)
                delta_[k] = (1.0 - phi_) * delta_[k] + drift_rng_.gaussian(0.0, sig_w_[k]);

        if (opponent_.kind == OpponentKind::Drifting)
            opponent_act(opponent_, agent_arm.value_or(0));
        else if (agent_arm)
            opponent_act(opponent_, *agent_arm);
        modal_ = opponent_modal_arm(opponent_);

        TurnRecord rec;
        rec.turn = t;
        rec.agent_arm = agent_arm;
        rec.opponent_arm = opponent_arm;
        rec.agent_utterance = agent_arm ? "arm" + std::to_string(*agent_arm) : "base";
        rec.opponent_utterance =
            cfg_.regime_count > 0 ? "reply tone" + std::to_string(regime_of(t)) : "reply";
        rec.raw_dims = played_raw;
        rec.reward = played_reward;
        ++turn_;
        return rec;
    }

    int num_arms() const override { return K_; }
    int turns_per_episode() const override { return cfg_.turns_per_episode; }
    int turn() const override { return turn_; }
    const std::vector<double>& last_arm_rewards() const override { return last_rewards_; }
    const std::vector<double>& last_opponent_arm_rewards() const override {
        return last_opp_rewards_;
    }
    std::optional<RawDims> last_opponent_raw() const override { return opp_raw_; }

    std::vector<double> expected_rewards() const override {
        const int t = turn_ + 1;
        std::vector<double> shift(K_ + 1, 0.0);
        latent_shifts(t, shift);
        std::vector<double> out(K_);
        for (int k = 0; k < K_; ++k) {
            if (cfg_.kind == EnvKind::Stationary) {
                out[k] = bern_means_[k];
            } else {
                double a = 0.0;
                for (int d = 0; d < 7; ++d) a += row_anchor(k, d);
                out[k] = a / 7.0 + shift[k];
            }
        }
        return out;
    }

    const OpponentModel& opponent() const { return opponent_; }

private:
    void check_arm(const std::optional<int>& arm) const {
        if (arm && (*arm < 0 || *arm >= K_))
            throw RangeError("arm index " + std::to_string(*arm) + " out of range [0," +
                             std::to_string(K_) + ")");
    }

    double row_noise(int k) const {
        return cfg_.kind == EnvKind::Drifting ? sig_noise_[k] : noise_std_;
    }

    double row_anchor(int k, int d) const {
        switch (cfg_.kind) {
            case EnvKind::Drifting: return anchors_[k][d];
            case EnvKind::AbruptSwitch: return switch_lo_[k];
            case EnvKind::AdaptiveAdversary: return adv_means_[k];
            default: return 0.0;
        }
    }

    int regime_of(int turn_1based) const {
        const int phase = (turn_1based - 1) / cfg_.regime_period;
        while (static_cast<int>(regime_seq_.size()) <= phase) {
            const int p = static_cast<int>(regime_seq_.size());
            int z = static_cast<int>(mix64(regime_seed_ + static_cast<uint64_t>(p)) %
                                     static_cast<uint64_t>(cfg_.regime_count));
            if (p > 0 && cfg_.regime_count > 1 && z == regime_seq_.back())
                z = (z + 1) % cfg_.regime_count;
            regime_seq_.push_back(z);
        }
        return regime_seq_[phase];
    }

    // Additive latent-mean shift per row: drift, regime bonus, abrupt-switch
    // plateau, opponent offsets and the best-response penalty.
    void latent_shifts(int turn_1based, std::vector<double>& shift) const {
        for (int k = 0; k <= K_; ++k) {
            double s = 0.0;
            if (cfg_.kind == EnvKind::Drifting) {
                s += delta_[k];
                if (cfg_.regime_count > 0 && k < K_ &&
                    regime_arm_[static_cast<size_t>(regime_of(turn_1based))] ==
                        static_cast<size_t>(k))
                    s += cfg_.regime_bonus;
            } else if (cfg_.kind == EnvKind::AbruptSwitch) {
                const int phase = turn_1based / cfg_.switch_period;
                if (k < K_ && switch_perm_[phase % K_] == k) s += switch_hi_ - switch_lo_[k];
            }
            if (k < K_) {
                s += opponent_.offsets[k];
                if (modal_ && *modal_ == k) s -= opponent_.penalty;
            }
            shift[k] = s;
        }
    }

    EnvConfig cfg_;
    int K_;
    Rng emit_rng_, drift_rng_;
    OpponentModel opponent_;
    std::optional<int> modal_;
    int turn_ = 0;
    double phi_ = 0.1;
    double jitter_std_ = 0.02;
    double noise_std_ = 0.1;
    double switch_hi_ = 0.75;
    std::vector<std::array<double, 7>> anchors_;
    std::vector<double> bern_means_;
    std::vector<double> delta_, sig_noise_, sig_w_;
    std::vector<int> switch_perm_;
    std::vector<double> switch_lo_;
    std::vector<double> adv_means_;
    std::vector<size_t> regime_arm_;
    mutable std::vector<int> regime_seq_;
    uint64_t regime_seed_ = 0;
    std::vector<double> last_rewards_, last_opp_rewards_;
    std::optional<RawDims> opp_raw_;
};

} // namespace

std::unique_ptr<Environment> create_environment(const EnvConfig& config) {
    validate(config);
    if (config.kind == EnvKind::Remote) return create_remote_environment(config);
    return std::make_unique<SyntheticEnvironment>(config);
}

} // namespace also
