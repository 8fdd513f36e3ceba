#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "also/errors.hpp"
#include "also/evaluation.hpp"
#include "also/rng.hpp"

using namespace also;

namespace {

EpisodeLog log_with_arm_rewards(const std::vector<double>& rewards_by_arm,
                                const std::vector<int>& plays) {
    EpisodeLog log;
    for (size_t t = 0; t < plays.size(); ++t) {
        TurnRecord rec;
        rec.turn = static_cast<int>(t + 1);
        rec.agent_arm = plays[t];
        rec.reward = rewards_by_arm[static_cast<size_t>(plays[t])];
        log.records.push_back(rec);
    }
    return log;
}

} // namespace

TEST_CASE("pseudo-regret basics") {
    const std::vector<std::vector<double>> rewards{{1.0, 0.0}, {1.0, 0.0}};
    CHECK(pseudo_regret(rewards, std::vector<int>{0, 0}) == 0.0);
    CHECK(pseudo_regret(rewards, std::vector<int>{1, 1}) == doctest::Approx(2.0));
    CHECK(pseudo_regret(rewards, std::vector<int>{0, 1}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(pseudo_regret(rewards, std::vector<int>{0}), DimensionMismatchError);
    CHECK_THROWS_AS(pseudo_regret(rewards, std::vector<int>{0, 5}), RangeError);
}

TEST_CASE("pseudo-regret is invariant to constant reward shifts") {
    Rng rng(4);
    std::vector<std::vector<double>> rewards(50, std::vector<double>(4));
    std::vector<int> plays(50);
    for (auto& row : rewards)
        for (auto& x : row) x = rng.uniform01();
    for (auto& p : plays) p = static_cast<int>(rng.uniform_int(4));
    const double base = pseudo_regret(rewards, plays);
    auto shifted = rewards;
    for (auto& row : shifted)
        for (auto& x : row) x += 3.7;
    CHECK(pseudo_regret(shifted, plays) == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("uniform play on a (0.9, 0.1) instance has expected regret 0.4T") {
    // Analytic: best arm collects 0.9 per round in expectation, uniform play
    // collects (0.9+0.1)/2; the gap is 0.4 per round.
    const int T = 1000;
    double total = 0.0;
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        std::vector<std::vector<double>> rewards;
        std::vector<int> plays;
        for (int t = 0; t < T; ++t) {
            rewards.push_back({rng.uniform01() < 0.9 ? 1.0 : 0.0,
                               rng.uniform01() < 0.1 ? 1.0 : 0.0});
            plays.push_back(static_cast<int>(rng.uniform_int(2)));
        }
        total += pseudo_regret(rewards, plays);
    }
    const double mean = total / 20.0;
    CHECK(mean > 0.9 * 0.4 * T);
    CHECK(mean < 1.1 * 0.4 * T);
}

TEST_CASE("budget report reproduces every accounting row") {
    const BudgetReport also = budget_report(BudgetMethod::Also, 20);
    CHECK(also.agent_calls == 40);
    CHECK(also.evaluator_calls == 20);
    CHECK(also.optimizer_calls == 0);

    CHECK(budget_report(BudgetMethod::Vanilla, 20).optimizer_calls == 0);
    CHECK(budget_report(BudgetMethod::Instinct, 20).optimizer_calls == 0);
    CHECK(budget_report(BudgetMethod::Opro, 20).optimizer_calls == 4);
    CHECK(budget_report(BudgetMethod::Evoprompt, 21).optimizer_calls == 25);
    CHECK(budget_report(BudgetMethod::Evoprompt, 20).optimizer_calls == 20);
    CHECK(budget_report(BudgetMethod::Opro, 1).optimizer_calls == 1);
    CHECK_THROWS_AS(budget_report(BudgetMethod::Also, 0), ConfigError);
    CHECK_THROWS_AS(budget_method_from_string("unknown"), ConfigError);
}

TEST_CASE("budget formulas match a direct schedule count for T in [1,100]") {
    for (int t = 1; t <= 100; ++t) {
        // Oracle: one optimizer round fires on every 5th turn boundary.
        long rounds = 0;
        for (int turn = 1; turn <= t; ++turn)
            if ((turn - 1) % 5 == 0) ++rounds;
        CHECK(budget_report(BudgetMethod::Opro, t).optimizer_calls == rounds);
        CHECK(budget_report(BudgetMethod::Evoprompt, t).optimizer_calls == 5 * rounds);
        CHECK(budget_report(BudgetMethod::Also, t).agent_calls == 2 * t);
        CHECK(budget_report(BudgetMethod::Also, t).evaluator_calls == t);
    }
}

TEST_CASE("drift stats: constant stream, two-point variance, sparse arms") {
    EpisodeLog constant = log_with_arm_rewards({0.4}, std::vector<int>(10, 0));
    auto stats = drift_stats(std::vector<EpisodeLog>{constant});
    CHECK(stats.at(0).variance <= 1e-30);
    CHECK(stats.at(0).mean == doctest::Approx(0.4));

    EpisodeLog two;
    for (int t = 0; t < 2; ++t) {
        TurnRecord rec;
        rec.turn = t + 1;
        rec.agent_arm = 0;
        rec.reward = t == 0 ? 0.0 : 1.0;
        two.records.push_back(rec);
    }
    TurnRecord lone;
    lone.turn = 3;
    lone.agent_arm = 1;
    lone.reward = 0.5;
    two.records.push_back(lone);
    stats = drift_stats(std::vector<EpisodeLog>{two});
    CHECK(stats.at(0).variance == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(stats.count(1) == 0);   // observed once -> absent
}

TEST_CASE("drift stats prefer the counterfactual matrix and ignore order") {
    EpisodeLog log;
    Rng rng(9);
    for (int t = 0; t < 64; ++t) {
        log.per_arm_rewards.push_back({rng.uniform01(), rng.uniform01()});
        TurnRecord rec;
        rec.turn = t + 1;
        rec.agent_arm = 0;
        rec.reward = log.per_arm_rewards.back()[0];
        log.records.push_back(rec);
        log.selected_arms.push_back(0);
    }
    const auto stats = drift_stats(std::vector<EpisodeLog>{log});
    CHECK(stats.at(0).count == 64);
    CHECK(stats.at(1).count == 64);

    EpisodeLog shuffled = log;
    std::reverse(shuffled.per_arm_rewards.begin(), shuffled.per_arm_rewards.end());
    const auto stats2 = drift_stats(std::vector<EpisodeLog>{shuffled});
    CHECK(std::abs(stats.at(1).mean - stats2.at(1).mean) <= 1e-12);
    CHECK(std::abs(stats.at(1).variance - stats2.at(1).variance) <= 1e-12);
}

TEST_CASE("turns CSV carries one row per turn with regret-so-far") {
    EpisodeLog log;
    log.scenario_id = "s";
    log.agent_id = "agent1";
    log.method = "also";
    log.seed = 1;
    for (int t = 0; t < 3; ++t) {
        TurnRecord rec;
        rec.turn = t + 1;
        rec.agent_arm = 1;
        rec.reward = 0.0;
        log.records.push_back(rec);
        log.selected_arms.push_back(1);
        log.per_arm_rewards.push_back({1.0, 0.0});
        log.pi_per_turn.push_back({0.5, 0.5});
    }
    std::ostringstream out;
    write_turns_csv(out, std::vector<EpisodeLog>{log});
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "scenario,agent,method,seed,turn,arm,reward,regret_so_far,pi0,pi1");
    int rows = 0;
    std::string last;
    while (std::getline(in, line))
        if (!line.empty()) {
            ++rows;
            last = line;
        }
    CHECK(rows == 3);
    CHECK(last.find("s,agent1,also,1,3,1,0,3") == 0);
}

TEST_CASE("episode log JSON serialization is deterministic") {
    EpisodeLog log = log_with_arm_rewards({0.25, 0.75}, {0, 1, 1});
    log.scenario_id = "x";
    log.method = "also";
    const std::string a = episode_log_to_json(log);
    const std::string b = episode_log_to_json(log);
    CHECK(a == b);
    CHECK(a.find("\"records\"") != std::string::npos);
}
