#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "also/errors.hpp"
#include "also/harness.hpp"

using namespace also;
using nlohmann::json;

namespace {

struct Overrides {
    std::string config_path;
    std::string pool;
    std::string method;
    std::string env_kind;
    std::string output;
    std::string granularity;
    std::string ablation;   // comma-separated flags
    std::vector<uint64_t> seeds;
    int arms = -1;
    int turns = -1;
    int dim = -1;
    int hidden = -1;
    int max_epochs = -1;
    int regime_count = -1;
    int max_parallel = -1;
    long replay_capacity = -1;
    double eta = -1.0;
    double lambda = -1.0;
    double epsilon = -1.0;
    std::string arch;
    bool bilateral = false;
};

void add_common_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "JSON run config (flags override it)");
    cmd->add_option("--pool", o.pool, "strategy pool file");
    cmd->add_option("--method", o.method, "also|epsilon_greedy|exp3|neural_ucb|vanilla");
    cmd->add_option("--env-kind", o.env_kind,
                    "stationary|drifting|abrupt_switch|adaptive_adversary|remote");
    cmd->add_option("--arms", o.arms, "number of arms (synthetic envs)");
    cmd->add_option("--turns", o.turns, "turns per episode");
    cmd->add_option("--seeds", o.seeds, "seed list")->delimiter(',');
    cmd->add_option("--dim", o.dim, "embedding dimension");
    cmd->add_option("--arch", o.arch, "linear|mlp1|mlp2_preln");
    cmd->add_option("--hidden", o.hidden, "surrogate hidden width");
    cmd->add_option("--max-epochs", o.max_epochs, "training epochs per turn");
    cmd->add_option("--replay-capacity", o.replay_capacity, "FIFO replay cap (0 = unbounded)");
    cmd->add_option("--eta", o.eta, "exploration temperature");
    cmd->add_option("--lambda", o.lambda, "score decay");
    cmd->add_option("--epsilon", o.epsilon, "epsilon for epsilon-greedy");
    cmd->add_option("--ablation", o.ablation,
                    "comma list: no_smoothing,no_context,no_surrogate,epsilon_greedy_selector");
    cmd->add_option("--regime-count", o.regime_count, "context-linked regimes (drifting)");
    cmd->add_option("--granularity", o.granularity, "per_turn|per_episode");
    cmd->add_flag("--bilateral", o.bilateral, "both agents optimize independently");
    cmd->add_option("--max-parallel", o.max_parallel, "worker threads for sweeps");
    cmd->add_option("--output", o.output, "output directory")->envname("ALSO_OUTPUT_DIR");
}

RunConfig resolve_config(const Overrides& o) {
    RunConfig cfg;
    if (!o.config_path.empty()) cfg = load_run_config(o.config_path);
    if (!o.pool.empty()) cfg.pool_path = o.pool;
    if (!o.method.empty()) cfg.method = method_from_string(o.method);
    if (!o.env_kind.empty()) cfg.env.kind = env_kind_from_string(o.env_kind);
    if (o.arms > 0) cfg.env.num_arms = o.arms;
    if (o.turns > 0) cfg.env.turns_per_episode = o.turns;
    if (!o.seeds.empty()) cfg.seeds = o.seeds;
    if (o.dim > 0) cfg.embedding.dim = o.dim;
    if (!o.arch.empty()) cfg.network.arch = architecture_from_string(o.arch);
    if (o.hidden > 0) cfg.network.hidden = o.hidden;
    if (o.max_epochs > 0) cfg.train.max_epochs = o.max_epochs;
    if (o.replay_capacity == 0) cfg.replay_capacity.reset();
    if (o.replay_capacity > 0) cfg.replay_capacity = static_cast<size_t>(o.replay_capacity);
    if (o.eta > 0) cfg.selector.eta = o.eta;
    if (o.lambda > 0) cfg.selector.lambda = o.lambda;
    if (o.epsilon >= 0) cfg.selector.epsilon = o.epsilon;
    if (!o.ablation.empty()) {
        AblationFlags flags;
        std::stringstream ss(o.ablation);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item == "no_smoothing") flags.no_smoothing = true;
            else if (item == "no_context") flags.no_context = true;
            else if (item == "no_surrogate") flags.no_surrogate = true;
            else if (item == "epsilon_greedy_selector") flags.epsilon_greedy_selector = true;
            else throw ConfigError("unknown ablation flag: '" + item + "'");
        }
        cfg.ablation = flags;
    }
    if (o.regime_count >= 0) cfg.env.regime_count = o.regime_count;
    if (!o.granularity.empty()) {
        if (o.granularity == "per_turn") cfg.granularity = RoundGranularity::PerTurn;
        else if (o.granularity == "per_episode") cfg.granularity = RoundGranularity::PerEpisode;
        else throw ConfigError("granularity must be per_turn or per_episode");
    }
    if (o.bilateral) cfg.bilateral = true;
    if (o.max_parallel >= 0) cfg.max_parallel = o.max_parallel;
    if (!o.output.empty()) cfg.output_dir = o.output;
    return cfg;
}

// Optional "variants" array in the experiment config file.
std::vector<VariantSpec> variants_from_config(const std::string& path, const RunConfig& base) {
    std::vector<VariantSpec> variants;
    if (!path.empty()) {
        std::ifstream in(path);
        std::ostringstream buf;
        buf << in.rdbuf();
        json j = json::parse(buf.str(), nullptr, false);
        if (!j.is_discarded() && j.contains("variants")) {
            for (const auto& v : j["variants"]) {
                VariantSpec spec;
                spec.name = v.at("name").get<std::string>();
                spec.method = method_from_string(v.value("method", std::string("also")));
                if (v.contains("ablation"))
                    for (const auto& f : v["ablation"]) {
                        const std::string s = f.get<std::string>();
                        if (s == "no_smoothing") spec.ablation.no_smoothing = true;
                        else if (s == "no_context") spec.ablation.no_context = true;
                        else if (s == "no_surrogate") spec.ablation.no_surrogate = true;
                        else if (s == "epsilon_greedy_selector")
                            spec.ablation.epsilon_greedy_selector = true;
                        else throw ConfigError("unknown ablation flag: '" + s + "'");
                    }
                variants.push_back(std::move(spec));
            }
        }
    }
    if (variants.empty())
        variants.push_back({std::string(to_string(base.method)), base.method, base.ablation});
    return variants;
}

void print_variant_summary(const ExperimentReport& report) {
    for (const auto& v : report.variants) {
        std::cout << v.name << ": mean_reward=" << v.mean_reward << " se=" << v.se;
        if (v.mean_pseudo_regret) std::cout << " pseudo_regret=" << *v.mean_pseudo_regret;
        if (v.incomplete) std::cout << " [incomplete]";
        std::cout << "\n";
    }
    if (report.variants.size() > 1) {
        std::cout << "win-rate (row beats column):\n";
        for (size_t a = 0; a < report.variants.size(); ++a) {
            std::cout << "  " << report.variants[a].name << ":";
            for (size_t b = 0; b < report.variants.size(); ++b)
                std::cout << " " << report.win_rate[a][b];
            std::cout << "\n";
        }
    }
}

int run_cmd(const Overrides& o) {
    RunConfig cfg = resolve_config(o);
    const uint64_t seed = cfg.seeds.empty() ? 1 : cfg.seeds.front();
    EpisodeResult result = run_episode_full(cfg, seed);
    const EpisodeLog& log = result.agent1;
    double mean = 0.0;
    for (const auto& rec : log.records) mean += rec.reward;
    if (!log.records.empty()) mean /= static_cast<double>(log.records.size());
    std::cout << "episode: method=" << log.method << " seed=" << seed
              << " turns=" << log.records.size() << " mean_reward=" << mean;
    if (auto regret = pseudo_regret(log)) std::cout << " pseudo_regret=" << *regret;
    if (log.incomplete) std::cout << " [incomplete: " << log.failure << "]";
    std::cout << "\n";

    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    std::ofstream ep(fs::path(cfg.output_dir) /
                     ("episode_seed" + std::to_string(seed) + ".json"));
    ep << episode_log_to_json(log) << "\n";
    std::ofstream csv(fs::path(cfg.output_dir) / "turns.csv");
    std::vector<EpisodeLog> logs{log};
    if (result.agent2) logs.push_back(*result.agent2);
    write_turns_csv(csv, logs);
    return log.incomplete ? 2 : 0;
}

int experiment_cmd(const Overrides& o, bool ablate) {
    RunConfig cfg = resolve_config(o);
    const std::vector<VariantSpec> variants =
        ablate ? ablation_matrix() : variants_from_config(o.config_path, cfg);
    ExperimentReport report = run_experiment(cfg, variants);
    print_variant_summary(report);
    write_experiment_outputs(report, cfg, cfg.output_dir);
    std::cout << "outputs written to " << cfg.output_dir << "\n";
    return report.incomplete ? 2 : 0;
}

int calibrate_cmd(const Overrides& o) {
    RunConfig cfg = resolve_config(o);
    cfg.env.kind = EnvKind::Drifting;
    cfg.method = Method::Exp3;   // cheap trace collector; stats use counterfactuals
    if (o.turns <= 0) cfg.env.turns_per_episode = 2000;

    std::vector<EpisodeLog> logs;
    for (uint64_t seed : cfg.seeds) logs.push_back(run_episode(cfg, seed));
    const auto stats = drift_stats(logs);
    const double lo = cfg.env.drift_variance_range[0] * 0.8;
    const double hi = cfg.env.drift_variance_range[1] * 1.2;
    bool ok = true;
    std::cout << "per-arm normalized-reward stats over " << cfg.env.turns_per_episode
              << " turns x " << cfg.seeds.size() << " seeds\n";
    for (const auto& [arm, st] : stats) {
        const bool in_band = st.variance >= lo && st.variance <= hi;
        ok = ok && in_band;
        std::cout << "arm " << arm << ": mean=" << st.mean << " variance=" << st.variance
                  << " n=" << st.count << (in_band ? "" : "  <-- outside band") << "\n";
    }
    std::cout << "band [" << lo << ", " << hi << "]: " << (ok ? "PASS" : "FAIL") << "\n";
    return ok ? 0 : 2;
}

int budget_cmd(const std::string& method, int turns) {
    const BudgetReport r = budget_report(budget_method_from_string(method), turns);
    std::cout << "method=" << to_string(r.method) << " turns=" << turns
              << " agent_calls=" << r.agent_calls << " evaluator_calls=" << r.evaluator_calls
              << " optimizer_calls=" << r.optimizer_calls << "\n";
    return 0;
}

int checkpoint_export_cmd(const Overrides& o, const std::string& out_path) {
    RunConfig cfg = resolve_config(o);
    const uint64_t seed = cfg.seeds.empty() ? 1 : cfg.seeds.front();
    EpisodeResult result = run_episode_full(cfg, seed);
    if (result.final_state1.theta.empty())
        throw ConfigError("method '" + std::string(to_string(cfg.method)) +
                          "' trains no surrogate; nothing to export");
    save_checkpoint(result.final_state1, out_path);
    std::cout << "checkpoint written to " << out_path << " (params="
              << result.final_state1.theta.size()
              << ", buffer=" << result.final_state1.buffer.size() << ")\n";
    return result.agent1.incomplete ? 2 : 0;
}

int checkpoint_import_cmd(const Overrides& o, const std::string& in_path) {
    const AgentState state = load_checkpoint(in_path);
    std::cout << "checkpoint: arch=" << to_string(state.config.arch)
              << " hidden=" << state.config.hidden << " input_dim=" << state.config.input_dim
              << " params=" << state.theta.size() << " step_count=" << state.step_count
              << " buffer=" << state.buffer.size() << "\n";
    if (!o.config_path.empty() || !o.env_kind.empty()) {
        RunConfig cfg = resolve_config(o);
        cfg.init_checkpoint = in_path;
        const uint64_t seed = cfg.seeds.empty() ? 1 : cfg.seeds.front();
        const EpisodeLog log = run_episode(cfg, seed);
        double mean = 0.0;
        for (const auto& rec : log.records) mean += rec.reward;
        if (!log.records.empty()) mean /= static_cast<double>(log.records.size());
        std::cout << "evaluation episode: mean_reward=" << mean << "\n";
        return log.incomplete ? 2 : 0;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ALSO: adversarial online strategy optimization harness"};
    app.require_subcommand(1);

    Overrides run_o, exp_o, abl_o, cal_o, ck_o;
    std::string budget_method = "also", ck_out = "checkpoint.bin", ck_in;
    int budget_turns = 20;

    add_common_flags(app.add_subcommand("run", "run a single episode"), run_o);
    add_common_flags(app.add_subcommand("experiment", "run a (variant x seed) sweep"), exp_o);
    add_common_flags(app.add_subcommand("ablate", "run the component ablation matrix"), abl_o);
    add_common_flags(
        app.add_subcommand("calibrate-drift", "measure per-arm reward variance"), cal_o);

    auto* budget = app.add_subcommand("budget", "per-episode LLM call budget");
    budget->add_option("--method", budget_method, "vanilla|instinct|also|opro|evoprompt");
    budget->add_option("--turns", budget_turns, "episode horizon T");

    auto* ck = app.add_subcommand("checkpoint", "surrogate checkpoint export/import");
    ck->require_subcommand(1);
    auto* ck_export = ck->add_subcommand("export", "train one episode and save the surrogate");
    add_common_flags(ck_export, ck_o);
    ck_export->add_option("--out", ck_out, "checkpoint path");
    auto* ck_import = ck->add_subcommand("import", "load a checkpoint (and evaluate with --config)");
    add_common_flags(ck_import, ck_o);
    ck_import->add_option("--in", ck_in, "checkpoint path")->required();

    try {
        app.parse(argc, argv);
        if (app.got_subcommand("run")) return run_cmd(run_o);
        if (app.got_subcommand("experiment")) return experiment_cmd(exp_o, false);
        if (app.got_subcommand("ablate")) return experiment_cmd(abl_o, true);
        if (app.got_subcommand("calibrate-drift")) return calibrate_cmd(cal_o);
        if (app.got_subcommand("budget")) return budget_cmd(budget_method, budget_turns);
        if (ck->got_subcommand("export")) return checkpoint_export_cmd(ck_o, ck_out);
        if (ck->got_subcommand("import")) return checkpoint_import_cmd(ck_o, ck_in);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
