#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "also/environment.hpp"

namespace also {

struct BudgetCounters {
    long agent_calls = 0;
    long evaluator_calls = 0;
    long optimizer_calls = 0;
    long env_steps = 0;
    long embed_calls = 0;
};

// Full trace of one episode for one agent. predictions/pi are T x K; both
// are empty for methods that carry no per-arm values (vanilla). When the
// environment is simulated, per_arm_rewards holds the realized
// counterfactual reward of every arm at every turn (T x K) - the input
// pseudo-regret needs; it stays empty for remote environments.
struct EpisodeLog {
    std::string scenario_id;
    std::string agent_id;
    std::string method;
    uint64_t seed = 0;
    bool incomplete = false;
    std::string failure;
    std::vector<TurnRecord> records;
    std::vector<std::vector<double>> predictions_per_turn;
    std::vector<std::vector<double>> pi_per_turn;
    std::vector<int> selected_arms;
    std::vector<std::vector<double>> per_arm_rewards;
    BudgetCounters counters;
};

// Eq-style pseudo-regret: max_k sum_t r_k(t) - sum_t r_{k_t}(t).
double pseudo_regret(const std::vector<std::vector<double>>& per_arm_rewards,
                     std::span<const int> selected);

// Convenience over a log; nullopt when the log has no counterfactuals.
std::optional<double> pseudo_regret(const EpisodeLog& log);

enum class BudgetMethod { Vanilla, Instinct, Also, Opro, Evoprompt };

const char* to_string(BudgetMethod m);
BudgetMethod budget_method_from_string(const std::string& s);

struct BudgetReport {
    BudgetMethod method = BudgetMethod::Also;
    long agent_calls = 0;
    long evaluator_calls = 0;
    long optimizer_calls = 0;
};

// Per-episode LLM call budget for a two-agent episode of T turns:
//   vanilla / instinct / also -> (2T, T, 0)
//   opro                      -> (2T, T, ceil(T/5))
//   evoprompt                 -> (2T, T, 5*ceil(T/5))
BudgetReport budget_report(BudgetMethod method, int turns);

struct ArmStats {
    double mean = 0.0;
    double variance = 0.0;   // unbiased, n-1 denominator
    size_t count = 0;
};

// Per-arm mean/variance of normalized reward over one or more logs. Uses
// the counterfactual reward matrix when present (every arm observed every
// turn); otherwise groups realized records by played arm. Arms observed
// fewer than twice are omitted.
std::map<int, ArmStats> drift_stats(std::span<const EpisodeLog> logs);

// Flat trace: one row per turn with episode, turn, method, arm, reward,
// regret-so-far and the pi entries.
void write_turns_csv(std::ostream& out, std::span<const EpisodeLog> logs);

// Structured JSON dump of a log (deterministic; used for byte-identical
// reproducibility checks and tooling).
std::string episode_log_to_json(const EpisodeLog& log);

} // namespace also
