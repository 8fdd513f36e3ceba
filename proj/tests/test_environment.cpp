#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "also/environment.hpp"
#include "also/errors.hpp"

using namespace also;

namespace {

EnvConfig base_cfg(EnvKind kind, int arms, int turns, uint64_t seed) {
    EnvConfig cfg;
    cfg.kind = kind;
    cfg.num_arms = arms;
    cfg.turns_per_episode = turns;
    cfg.seed = seed;
    return cfg;
}

double unbiased_variance(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return acc / static_cast<double>(xs.size() - 1);
}

} // namespace

TEST_CASE("normalize_reward at the range extremes") {
    CHECK(normalize_reward({10, 5, 10, 0, 0, 5, 10}) == 1.0);
    CHECK(normalize_reward({0, -5, 0, -10, -10, -5, 0}) == 0.0);
}

TEST_CASE("normalize_reward hand-evaluated fixture") {
    const double r = normalize_reward({8, 0, 5, -2, 0, 1, 7});
    CHECK(r == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("normalize_reward names the offending dimension") {
    CHECK_THROWS_WITH_AS(normalize_reward({11, 0, 0, -1, -1, 0, 0}),
                         doctest::Contains("BEL"), RangeError);
    CHECK_THROWS_WITH_AS(normalize_reward({5, 0, 0, 1, -1, 0, 0}),
                         doctest::Contains("SEC"), RangeError);
}

TEST_CASE("raw_from_unit inverts normalization") {
    const std::array<double, 7> unit{0.8, 0.5, 0.5, 0.8, 1.0, 0.6, 0.7};
    const RawDims raw = raw_from_unit(unit);
    CHECK(raw[0] == doctest::Approx(8.0));
    CHECK(raw[1] == doctest::Approx(0.0));
    CHECK(raw[3] == doctest::Approx(-2.0));
    double mean_unit = 0.0;
    for (double u : unit) mean_unit += u / 7.0;
    CHECK(normalize_reward(raw) == doctest::Approx(mean_unit).epsilon(1e-12));
}

TEST_CASE("stationary environment keeps a fixed best arm") {
    EnvConfig cfg = base_cfg(EnvKind::Stationary, 2, 50, 7);
    cfg.arm_means = {0.9, 0.1};
    auto env = create_environment(cfg);
    for (int t = 0; t < 50; ++t) {
        const auto means = env->expected_rewards();
        CHECK(means[0] == doctest::Approx(0.9));
        CHECK(means[1] == doctest::Approx(0.1));
        const TurnRecord rec = env->step(t % 2);
        CHECK((rec.reward == 0.0 || rec.reward == 1.0));
    }
}

TEST_CASE("episode exhaustion after turns_per_episode") {
    auto env = create_environment(base_cfg(EnvKind::Stationary, 3, 20, 1));
    for (int t = 0; t < 20; ++t) env->step(0);
    CHECK(env->done());
    CHECK_THROWS_AS(env->step(0), EpisodeExhaustedError);
}

TEST_CASE("arm indices are validated") {
    auto env = create_environment(base_cfg(EnvKind::Drifting, 4, 10, 1));
    CHECK_THROWS_AS(env->step(4), RangeError);
    CHECK_THROWS_AS(env->step(-1), RangeError);
    CHECK_THROWS_AS(env->step(0, 17), RangeError);
}

TEST_CASE("identical (config, seed, actions) give identical streams") {
    for (auto kind : {EnvKind::Stationary, EnvKind::Drifting, EnvKind::AbruptSwitch,
                      EnvKind::AdaptiveAdversary}) {
        auto a = create_environment(base_cfg(kind, 5, 40, 11));
        auto b = create_environment(base_cfg(kind, 5, 40, 11));
        for (int t = 0; t < 40; ++t) {
            const TurnRecord ra = a->step(t % 5);
            const TurnRecord rb = b->step(t % 5);
            CHECK(ra.reward == rb.reward);
            CHECK(ra.raw_dims == rb.raw_dims);
            CHECK(a->last_arm_rewards() == b->last_arm_rewards());
        }
    }
}

TEST_CASE("emitted values respect dimension ranges") {
    for (auto kind : {EnvKind::Drifting, EnvKind::AbruptSwitch, EnvKind::AdaptiveAdversary}) {
        auto env = create_environment(base_cfg(kind, 6, 200, 3));
        for (int t = 0; t < 200; ++t) {
            const TurnRecord rec = env->step(t % 6);
            for (size_t m = 0; m < 7; ++m) {
                CHECK(rec.raw_dims[m] >= kDimensions[m].min);
                CHECK(rec.raw_dims[m] <= kDimensions[m].max);
            }
            CHECK(rec.reward >= 0.0);
            CHECK(rec.reward <= 1.0);
            CHECK(rec.reward == normalize_reward(rec.raw_dims));
            for (double r : env->last_arm_rewards()) {
                CHECK(r >= 0.0);
                CHECK(r <= 1.0);
            }
        }
    }
}

TEST_CASE("abrupt switch changes the best arm exactly at the period") {
    EnvConfig cfg = base_cfg(EnvKind::AbruptSwitch, 12, 160, 21);
    cfg.switch_period = 50;
    auto env = create_environment(cfg);
    std::set<int> change_turns;
    int prev_best = -1;
    for (int t = 1; t <= 160; ++t) {
        const auto means = env->expected_rewards();
        const int best = static_cast<int>(
            std::max_element(means.begin(), means.end()) - means.begin());
        if (prev_best >= 0 && best != prev_best) change_turns.insert(t);
        prev_best = best;
        env->step(0);
    }
    CHECK(change_turns == std::set<int>{50, 100, 150});
}

TEST_CASE("drifting per-arm reward variance stays in the configured band") {
    EnvConfig cfg = base_cfg(EnvKind::Drifting, 6, 2000, 5);
    auto env = create_environment(cfg);
    std::vector<std::vector<double>> per_arm(6);
    for (int t = 0; t < 2000; ++t) {
        env->step(t % 6);
        const auto& rewards = env->last_arm_rewards();
        for (int k = 0; k < 6; ++k) per_arm[k].push_back(rewards[k]);
    }
    for (int k = 0; k < 6; ++k) {
        const double var = unbiased_variance(per_arm[k]);
        CHECK(var >= 0.8 * cfg.drift_variance_range[0]);
        CHECK(var <= 1.2 * cfg.drift_variance_range[1]);
    }
}

TEST_CASE("context-linked regimes stamp the opponent utterance and move the bonus") {
    EnvConfig cfg = base_cfg(EnvKind::Drifting, 6, 300, 9);
    cfg.regime_count = 3;
    cfg.regime_period = 50;
    cfg.regime_bonus = 0.3;
    auto env = create_environment(cfg);
    std::set<std::string> tones;
    std::set<int> best_arms;
    for (int t = 0; t < 300; ++t) {
        const auto means = env->expected_rewards();
        best_arms.insert(static_cast<int>(
            std::max_element(means.begin(), means.end()) - means.begin()));
        const TurnRecord rec = env->step(0);
        tones.insert(rec.opponent_utterance);
    }
    CHECK(tones.size() >= 2);
    CHECK(best_arms.size() >= 2);
    for (const auto& tone : tones) CHECK(tone.rfind("reply tone", 0) == 0);
}

TEST_CASE("best-response opponent depresses the modal arm after the window fills") {
    EnvConfig cfg = base_cfg(EnvKind::AdaptiveAdversary, 4, 50, 13);
    cfg.adversary_memory = 5;
    cfg.adversary_penalty = 0.15;
    auto env = create_environment(cfg);
    const auto base = env->expected_rewards();
    for (int t = 1; t <= 5; ++t) {
        const auto means = env->expected_rewards();
        CHECK(means[2] == doctest::Approx(base[2]));   // no penalty while window fills
        env->step(2);
    }
    const auto depressed = env->expected_rewards();
    CHECK(depressed[2] == doctest::Approx(base[2] - 0.15));
    for (int k : {0, 1, 3}) CHECK(depressed[k] == doctest::Approx(base[k]));
}

TEST_CASE("under uniform play no arm is persistently depressed") {
    const int arms = 6;
    EnvConfig cfg = base_cfg(EnvKind::AdaptiveAdversary, arms, 2000, 17);
    auto env = create_environment(cfg);
    Rng play(23);
    // Baseline means before any penalty can apply.
    const auto base = env->expected_rewards();
    std::vector<int> penalized(arms, 0);
    int penalized_total = 0;
    for (int t = 0; t < 2000; ++t) {
        const auto means = env->expected_rewards();
        for (int k = 0; k < arms; ++k)
            if (means[k] < base[k] - 1e-9) {
                ++penalized[k];
                ++penalized_total;
            }
        env->step(static_cast<int>(play.uniform_int(arms)));
    }
    REQUIRE(penalized_total > 0);
    const double uniform_share = penalized_total / static_cast<double>(arms);
    for (int k = 0; k < arms; ++k) {
        CHECK(penalized[k] <= 2.0 * uniform_share);
        CHECK(penalized[k] >= 0.5 * uniform_share);
    }
}

TEST_CASE("drifting opponent with zero step equals the static opponent") {
    EnvConfig a = base_cfg(EnvKind::Drifting, 4, 30, 3);
    a.opponent = OpponentKind::Drifting;
    a.opponent_step = 0.0;
    EnvConfig b = base_cfg(EnvKind::Drifting, 4, 30, 3);
    b.opponent = OpponentKind::Static;
    auto ea = create_environment(a);
    auto eb = create_environment(b);
    for (int t = 0; t < 30; ++t) {
        const TurnRecord ra = ea->step(t % 4);
        const TurnRecord rb = eb->step(t % 4);
        CHECK(ra.reward == rb.reward);
    }
}

TEST_CASE("static opponent model ignores observations") {
    OpponentModel model;
    model.kind = OpponentKind::Static;
    model.offsets.assign(3, 0.0);
    opponent_act(model, 1);
    opponent_act(model, 2);
    CHECK(model.recent_arms.empty());
    for (double off : model.offsets) CHECK(off == 0.0);
}

TEST_CASE("fixed-arm play loses to uniform play against the adversary") {
    const int arms = 6;
    std::vector<double> diffs;
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        EnvConfig cfg = base_cfg(EnvKind::AdaptiveAdversary, arms, 500, seed);
        // Best fixed arm in hindsight of the base means.
        auto probe = create_environment(cfg);
        const auto base = probe->expected_rewards();
        const int best = static_cast<int>(
            std::max_element(base.begin(), base.end()) - base.begin());

        auto fixed_env = create_environment(cfg);
        double fixed_total = 0.0;
        for (int t = 0; t < 500; ++t) fixed_total += fixed_env->step(best).reward;

        auto uniform_env = create_environment(cfg);
        Rng play(derive_seed(seed, 2));
        double uniform_total = 0.0;
        for (int t = 0; t < 500; ++t)
            uniform_total += uniform_env->step(static_cast<int>(play.uniform_int(arms))).reward;

        diffs.push_back(uniform_total - fixed_total);
    }
    std::sort(diffs.begin(), diffs.end());
    const double median = 0.5 * (diffs[9] + diffs[10]);
    CHECK(median > 0.0);
}

TEST_CASE("invalid environment configs are rejected") {
    EnvConfig cfg = base_cfg(EnvKind::Drifting, 0, 10, 1);
    CHECK_THROWS_AS(create_environment(cfg), ConfigError);
    cfg = base_cfg(EnvKind::Drifting, 3, 10, 1);
    cfg.drift_variance_range = {0.02, 0.01};
    CHECK_THROWS_AS(create_environment(cfg), ConfigError);
    cfg = base_cfg(EnvKind::Stationary, 3, 10, 1);
    cfg.arm_means = {0.5, 0.5};
    CHECK_THROWS_AS(create_environment(cfg), ConfigError);
    cfg = base_cfg(EnvKind::Remote, 3, 10, 1);
    CHECK_THROWS_AS(create_environment(cfg), ConfigError);
}
