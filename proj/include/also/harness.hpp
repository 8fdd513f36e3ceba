#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "also/environment.hpp"
#include "also/evaluation.hpp"
#include "also/featurizer.hpp"
#include "also/selector.hpp"
#include "also/strategy.hpp"
#include "also/surrogate.hpp"

namespace also {

inline constexpr const char* kCodeVersion = "also 0.1.0";

enum class Method { Also, EpsilonGreedy, Exp3, NeuralUcb, Vanilla };

const char* to_string(Method m);
Method method_from_string(const std::string& s);
BudgetMethod budget_method_for(Method m);

enum class RoundGranularity { PerTurn, PerEpisode };

struct AblationFlags {
    bool no_smoothing = false;
    bool no_context = false;
    bool no_surrogate = false;
    bool epsilon_greedy_selector = false;

    bool any() const {
        return no_smoothing || no_context || no_surrogate || epsilon_greedy_selector;
    }
};

struct SelectorParams {
    double eta = 10.0;          // exploration temperature
    double lambda = 0.9;        // score decay
    double gamma_floor = 0.0;   // optional uniform mixing for ALSO
    double epsilon = 0.1;       // epsilon-greedy
    double exp3_eta = 0.1;
    double exp3_gamma = 0.05;
    double nu = 1.0;            // NeuralUCB exploration
    double lambda_reg = 0.1;    // NeuralUCB regularization
};

struct RunConfig {
    std::string pool_path = "data/default_pool.json";
    std::string persona_text =
        "An experienced negotiator with clear goals who adapts tone and tactics "
        "to the situation at hand.";
    std::string persona2_text;   // bilateral counterpart; empty -> persona_text
    std::string scenario_id = "synthetic";
    EnvConfig env;
    Method method = Method::Also;
    bool bilateral = false;
    AblationFlags ablation;
    NetworkConfig network;       // input_dim 0 -> derived as 2 * embedding.dim
    TrainHyper train;
    SelectorParams selector;
    EmbeddingProvider embedding;
    int context_window = 0;      // 0 = full history
    RoundGranularity granularity = RoundGranularity::PerTurn;
    int train_interval = 1;
    std::optional<size_t> replay_capacity;
    std::string init_checkpoint;   // warm-start the surrogate when non-empty
    std::vector<uint64_t> seeds{1, 2, 3, 4, 5};
    uint64_t agent2_seed = 0;      // 0 -> derived from the episode seed
    std::string output_dir = "out";
    int max_parallel = 0;          // 0 = hardware concurrency
};

// Surrogate snapshot that round-trips bit-exactly through checkpoints.
struct AgentState {
    NetworkConfig config;
    std::vector<double> theta;
    long step_count = 0;
    ReplayBuffer buffer;
};

void save_checkpoint(const AgentState& state, const std::string& path);
AgentState load_checkpoint(const std::string& path);

struct EpisodeResult {
    EpisodeLog agent1;
    std::optional<EpisodeLog> agent2;
    AgentState final_state1;   // empty theta for surrogate-free methods
};

// One episode: precompute arm embeddings, then per turn encode context,
// predict all arms, select, step the environment, feed the replay buffer,
// train, and smooth scores. Module errors during the turn loop abort the
// episode with a partial log flagged incomplete.
EpisodeResult run_episode_full(const RunConfig& config, uint64_t seed);
EpisodeLog run_episode(const RunConfig& config, uint64_t seed);

struct VariantSpec {
    std::string name;
    Method method = Method::Also;
    AblationFlags ablation;
};

// The component-wise ablation matrix: full, w/o randomized selector
// (epsilon-greedy), w/o smoothing, w/o context, w/o surrogate.
std::vector<VariantSpec> ablation_matrix();

struct VariantResult {
    std::string name;
    std::vector<EpisodeLog> logs;        // one per seed (focal agent)
    std::vector<double> per_seed_mean;   // mean reward per seed
    double mean_reward = 0.0;
    double se = 0.0;                     // standard error over seeds
    std::optional<double> mean_pseudo_regret;
    BudgetReport budget;
    bool incomplete = false;
};

struct ExperimentReport {
    std::vector<VariantResult> variants;
    // win_rate[i][j]: fraction of seeds where variant i strictly beats j
    // on per-seed mean reward.
    std::vector<std::vector<double>> win_rate;
    std::vector<uint64_t> seeds;
    uint64_t config_digest = 0;
    std::string code_version = kCodeVersion;
    bool incomplete = false;
};

ExperimentReport run_experiment(const RunConfig& base, std::span<const VariantSpec> variants);

std::string experiment_report_to_json(const ExperimentReport& report);
std::string run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::string& path);
uint64_t config_digest(const RunConfig& config);

// Writes manifest.json, report.json, turns.csv and per-episode logs.
void write_experiment_outputs(const ExperimentReport& report, const RunConfig& base,
                              const std::string& out_dir);

} // namespace also
