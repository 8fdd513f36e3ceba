// Acceptance suite: one criterion per command-line tag (AC1..AC11), every
// criterion prints a single PASS/FAIL line. Run with no arguments to execute
// all of them.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "also/environment.hpp"
#include "also/errors.hpp"
#include "also/evaluation.hpp"
#include "also/harness.hpp"
#include "also/selector.hpp"
#include "also/surrogate.hpp"

using namespace also;

namespace {

const char* kDefaultPool = ALSO_SOURCE_DIR "/data/default_pool.json";

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

RunConfig desk_config() {
    RunConfig cfg;
    cfg.pool_path = kDefaultPool;
    cfg.embedding.dim = 16;
    cfg.network.arch = Architecture::Mlp1;
    cfg.network.hidden = 16;
    cfg.train.lr = 0.01;
    cfg.train.max_epochs = 4;
    cfg.train.early_stop_patience = 2;
    cfg.replay_capacity = 128;
    cfg.context_window = 6;
    cfg.max_parallel = 0;
    return cfg;
}

std::vector<uint64_t> seed_range(uint64_t count, uint64_t base = 1) {
    std::vector<uint64_t> seeds;
    for (uint64_t s = 0; s < count; ++s) seeds.push_back(base + s);
    return seeds;
}

int count_variant_wins(const ExperimentReport& report, size_t a, size_t b) {
    int wins = 0;
    for (size_t s = 0; s < report.seeds.size(); ++s)
        if (report.variants[a].per_seed_mean[s] > report.variants[b].per_seed_mean[s]) ++wins;
    return wins;
}

// --- AC1 -------------------------------------------------------------------

bool ac1(std::string& detail) {
    if (normalize_reward({10, 5, 10, 0, 0, 5, 10}) != 1.0) {
        detail = "upper extreme is not exactly 1.0";
        return false;
    }
    if (normalize_reward({0, -5, 0, -10, -10, -5, 0}) != 0.0) {
        detail = "lower extreme is not exactly 0.0";
        return false;
    }
    Rng rng(101);
    double max_err = 0.0;
    for (int i = 0; i < 1000; ++i) {
        RawDims dims;
        double expected = 0.0;
        for (size_t m = 0; m < 7; ++m) {
            dims[m] = rng.uniform(kDimensions[m].min, kDimensions[m].max);
            expected += (dims[m] - kDimensions[m].min) /
                        (kDimensions[m].max - kDimensions[m].min);
        }
        expected /= 7.0;
        max_err = std::max(max_err, std::abs(normalize_reward(dims) - expected));
    }
    std::ostringstream os;
    os << "max |err| = " << max_err << " over 1000 random vectors";
    detail = os.str();
    return max_err <= 1e-12;
}

// --- AC2 -------------------------------------------------------------------

bool ac2(std::string& detail) {
    Rng rng(202);
    double worst_shift = 0.0, worst_closed = 0.0;

    for (int trial = 0; trial < 50; ++trial) {
        AlsoState s = AlsoState::init(12, 10.0, 0.9);
        for (auto& x : s.scores) x = rng.uniform(-3.0, 3.0);
        const auto pi = selection_distribution(s);
        for (double c : {-7.0, 0.5, 400.0}) {
            AlsoState shifted = s;
            for (auto& x : shifted.scores) x += c;
            const auto pi2 = selection_distribution(shifted);
            for (size_t k = 0; k < pi.size(); ++k)
                worst_shift = std::max(worst_shift, std::abs(pi[k] - pi2[k]));
        }
    }

    const auto uniform = selection_distribution(AlsoState::init(12));
    for (double p : uniform)
        worst_shift = std::max(worst_shift, std::abs(p - 1.0 / 12.0));

    for (int trial = 0; trial < 20; ++trial) {
        const double lambda = 0.55 + 0.45 * rng.uniform01();
        AlsoState s = AlsoState::init(6, 10.0, lambda);
        std::vector<std::vector<double>> vs;
        for (int t = 0; t < 100; ++t) {
            std::vector<double> v(6);
            for (auto& x : v) x = rng.uniform(-1.0, 1.0);
            vs.push_back(v);
            s = smooth_scores(s, v);
        }
        for (size_t k = 0; k < 6; ++k) {
            double direct = 0.0;
            for (size_t t = 0; t < vs.size(); ++t)
                direct += std::pow(lambda, static_cast<double>(vs.size() - 1 - t)) * vs[t][k];
            worst_closed = std::max(worst_closed, std::abs(s.scores[k] - direct));
        }
    }

    std::ostringstream os;
    os << "shift invariance err = " << worst_shift << ", closed-form err = " << worst_closed;
    detail = os.str();
    return worst_shift <= 1e-12 && worst_closed <= 1e-10;
}

// --- AC3 -------------------------------------------------------------------

bool ac3(std::string& detail) {
    double worst = 0.0;
    for (auto arch : {Architecture::Linear, Architecture::Mlp1, Architecture::Mlp2PreLn}) {
        for (int input_dim : {4, 64}) {
            for (uint64_t seed = 1; seed <= 10; ++seed) {
                NetworkConfig cfg;
                cfg.arch = arch;
                cfg.input_dim = input_dim;
                cfg.hidden = 16;
                cfg.init_seed = seed;
                const ValueNetwork net = ValueNetwork::init(cfg);
                Rng rng(derive_seed(seed, static_cast<uint64_t>(input_dim)));
                FeatureVector x(static_cast<size_t>(input_dim));
                for (auto& v : x) v = rng.uniform(-1.0, 1.0);
                const CheckReport rep = gradient_check(net, x, 1e-5, 1e-4);
                worst = std::max(worst, rep.max_rel_error);
            }
        }
    }
    std::ostringstream os;
    os << "max relative error = " << worst
       << " (linear, mlp1, mlp2_preln at input_dim 4 and 64, 10 seeds each)";
    detail = os.str();
    return worst <= 1e-4;
}

// --- AC4 -------------------------------------------------------------------

bool ac4(std::string& detail, ExperimentReport* out_report = nullptr) {
    RunConfig cfg = desk_config();
    cfg.env.kind = EnvKind::AbruptSwitch;
    cfg.env.turns_per_episode = 1000;
    cfg.env.switch_period = 50;
    cfg.env.noise_std = 0.15;
    cfg.seeds = seed_range(20);

    std::vector<VariantSpec> variants;
    variants.push_back({"full", Method::Also, {}});
    VariantSpec ns{"wo_score_smoothing", Method::Also, {}};
    ns.ablation.no_smoothing = true;
    variants.push_back(ns);

    const ExperimentReport report = run_experiment(cfg, variants);
    if (out_report) *out_report = report;
    const int wins = count_variant_wins(report, 0, 1);
    std::ostringstream os;
    os << "full beats no-smoothing in " << wins << "/20 seeds (mean "
       << report.variants[0].mean_reward << " vs " << report.variants[1].mean_reward
       << ") on abrupt_switch K=12 period=50 T=1000";
    detail = os.str();
    return wins >= 15;
}

// --- AC5 -------------------------------------------------------------------

bool ac5(std::string& detail) {
    RunConfig cfg = desk_config();
    cfg.env.kind = EnvKind::Drifting;
    cfg.env.turns_per_episode = 1000;
    cfg.env.regime_count = 3;
    cfg.env.regime_period = 50;
    cfg.env.regime_bonus = 0.3;
    cfg.network.hidden = 32;
    cfg.train.max_epochs = 6;
    cfg.replay_capacity = 256;
    cfg.seeds = seed_range(20);

    std::vector<VariantSpec> variants;
    variants.push_back({"full", Method::Also, {}});
    VariantSpec nn{"wo_neural_surrogate", Method::Also, {}};
    nn.ablation.no_surrogate = true;
    variants.push_back(nn);

    const ExperimentReport report = run_experiment(cfg, variants);
    const int wins = count_variant_wins(report, 0, 1);
    std::ostringstream os;
    os << "full beats no-surrogate in " << wins << "/20 seeds (mean "
       << report.variants[0].mean_reward << " vs " << report.variants[1].mean_reward
       << ") on context-linked drifting T=1000";
    detail = os.str();
    return wins >= 15;
}

// --- AC6 -------------------------------------------------------------------

bool ac6(std::string& detail) {
    RunConfig cfg = desk_config();
    cfg.env.kind = EnvKind::AdaptiveAdversary;
    cfg.env.turns_per_episode = 1000;
    cfg.env.adversary_memory = 5;
    cfg.env.adversary_penalty = 0.15;
    cfg.selector.epsilon = 0.1;
    cfg.seeds = seed_range(20);

    std::vector<VariantSpec> variants;
    variants.push_back({"also", Method::Also, {}});
    variants.push_back({"epsilon_greedy", Method::EpsilonGreedy, {}});

    const ExperimentReport report = run_experiment(cfg, variants);
    const int wins = count_variant_wins(report, 0, 1);
    std::ostringstream os;
    os << "ALSO beats epsilon-greedy in " << wins << "/20 seeds (mean "
       << report.variants[0].mean_reward << " vs " << report.variants[1].mean_reward
       << ") on the best-response adversary T=1000";
    detail = os.str();
    return wins >= 15;
}

// --- AC7 -------------------------------------------------------------------

bool ac7(std::string& detail) {
    // Table rows, exact integers.
    struct Row {
        BudgetMethod method;
        int t;
        long agent, eval, opt;
    };
    std::vector<Row> rows;
    for (int t : {1, 5, 19, 20, 21, 100}) {
        const long opt_rounds = (t + 4) / 5;
        rows.push_back({BudgetMethod::Vanilla, t, 2L * t, static_cast<long>(t), 0});
        rows.push_back({BudgetMethod::Instinct, t, 2L * t, static_cast<long>(t), 0});
        rows.push_back({BudgetMethod::Also, t, 2L * t, static_cast<long>(t), 0});
        rows.push_back({BudgetMethod::Opro, t, 2L * t, static_cast<long>(t), opt_rounds});
        rows.push_back({BudgetMethod::Evoprompt, t, 2L * t, static_cast<long>(t),
                        5 * opt_rounds});
    }
    for (const Row& row : rows) {
        const BudgetReport r = budget_report(row.method, row.t);
        if (r.agent_calls != row.agent || r.evaluator_calls != row.eval ||
            r.optimizer_calls != row.opt) {
            std::ostringstream os;
            os << "mismatch for " << to_string(row.method) << " T=" << row.t;
            detail = os.str();
            return false;
        }
    }

    // Instrumented counters in run_episode match the same arithmetic.
    for (int t : {1, 5, 19, 20, 21}) {
        for (Method m : {Method::Also, Method::Vanilla, Method::Exp3, Method::NeuralUcb}) {
            RunConfig cfg = desk_config();
            cfg.embedding.dim = 8;
            cfg.network.hidden = 4;
            cfg.train.max_epochs = 1;
            cfg.method = m;
            cfg.env.kind = EnvKind::Drifting;
            cfg.env.turns_per_episode = t;
            const EpisodeLog log = run_episode(cfg, 1);
            const BudgetReport expected = budget_report(budget_method_for(m), t);
            if (log.counters.agent_calls != expected.agent_calls ||
                log.counters.evaluator_calls != expected.evaluator_calls ||
                log.counters.optimizer_calls != expected.optimizer_calls) {
                std::ostringstream os;
                os << "instrumented counters diverge for " << to_string(m) << " T=" << t;
                detail = os.str();
                return false;
            }
        }
    }
    detail = "all accounting rows exact for T in {1,5,19,20,21,100}; counters match";
    return true;
}

// --- AC8 -------------------------------------------------------------------

bool ac8(std::string& detail) {
    RunConfig cfg = desk_config();
    cfg.method = Method::Exp3;   // lightweight trace collector
    cfg.env.kind = EnvKind::Drifting;
    cfg.env.turns_per_episode = 2000;
    cfg.seeds = seed_range(5);

    const double lo = cfg.env.drift_variance_range[0] * 0.8;
    const double hi = cfg.env.drift_variance_range[1] * 1.2;
    double min_var = 1e9, max_var = 0.0;
    for (uint64_t seed : cfg.seeds) {
        const EpisodeLog log = run_episode(cfg, seed);
        const auto stats = drift_stats(std::vector<EpisodeLog>{log});
        if (stats.size() != 12) {
            detail = "expected stats for all 12 arms";
            return false;
        }
        for (const auto& [arm, st] : stats) {
            min_var = std::min(min_var, st.variance);
            max_var = std::max(max_var, st.variance);
        }
    }
    std::ostringstream os;
    os << "per-arm variance in [" << min_var << ", " << max_var << "], band [" << lo << ", "
       << hi << "], 12 arms x 5 seeds x 2000 turns";
    detail = os.str();
    return min_var >= lo && max_var <= hi;
}

// --- AC9 -------------------------------------------------------------------

bool ac9(std::string& detail) {
    RunConfig base = desk_config();
    base.env.kind = EnvKind::Stationary;
    base.env.turns_per_episode = 1000;
    base.env.arm_means = {0.9, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.3, 0.35};
    const double best_mean = 0.9;

    auto final_window_mean = [](const EpisodeLog& log) {
        double acc = 0.0;
        for (size_t t = 800; t < 1000; ++t) acc += log.records[t].reward;
        return acc / 200.0;
    };

    std::vector<double> also_means, exp3_means;
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        RunConfig also_cfg = base;
        also_cfg.method = Method::Also;
        also_means.push_back(final_window_mean(run_episode(also_cfg, seed)));

        RunConfig exp3_cfg = base;
        exp3_cfg.method = Method::Exp3;
        exp3_means.push_back(final_window_mean(run_episode(exp3_cfg, seed)));
    }
    const double also_med = median(also_means);
    const double exp3_med = median(exp3_means);
    std::ostringstream os;
    os << "final-200 median mean reward: ALSO " << also_med << ", EXP3 " << exp3_med
       << ", target >= " << 0.95 * best_mean;
    detail = os.str();
    return also_med >= 0.95 * best_mean && exp3_med >= 0.95 * best_mean;
}

// --- AC10 ------------------------------------------------------------------

bool ac10(std::string& detail) {
    // Family A and held-out family B share the arm-quality layout
    // (means_seed) but differ in drift parameters and episode seeds.
    RunConfig train_cfg = desk_config();
    train_cfg.env.kind = EnvKind::Drifting;
    train_cfg.env.means_seed = 4242;
    train_cfg.env.turns_per_episode = 300;
    train_cfg.ablation.no_context = true;

    RunConfig eval_cfg = train_cfg;
    eval_cfg.env.drift_variance_range = {0.006, 0.012};
    eval_cfg.env.turns_per_episode = 100;

    double transfer_total = 0.0, fresh_total = 0.0;
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        const EpisodeResult trained = run_episode_full(train_cfg, seed);
        const std::string ck = (std::filesystem::temp_directory_path() /
                                ("also_ac10_ck_" + std::to_string(seed) + ".bin"))
                                   .string();
        save_checkpoint(trained.final_state1, ck);

        RunConfig warm = eval_cfg;
        warm.init_checkpoint = ck;
        const EpisodeLog warm_log = run_episode(warm, 1000 + seed);
        const EpisodeLog fresh_log = run_episode(eval_cfg, 1000 + seed);

        auto mean_of = [](const EpisodeLog& log) {
            double acc = 0.0;
            for (const auto& rec : log.records) acc += rec.reward;
            return acc / static_cast<double>(log.records.size());
        };
        transfer_total += mean_of(warm_log);
        fresh_total += mean_of(fresh_log);
        std::remove(ck.c_str());
    }
    const double transfer_mean = transfer_total / 20.0;
    const double fresh_mean = fresh_total / 20.0;
    std::ostringstream os;
    os << "zero-shot transfer mean " << transfer_mean << " vs fresh-init " << fresh_mean
       << " on held-out family (20 seeds)";
    detail = os.str();
    return transfer_mean > fresh_mean;
}

// --- AC11 ------------------------------------------------------------------

bool ac11(std::string& detail) {
    RunConfig cfg = desk_config();
    cfg.env.kind = EnvKind::AbruptSwitch;
    cfg.env.turns_per_episode = 300;
    cfg.seeds = seed_range(5);
    cfg.max_parallel = 2;

    std::vector<VariantSpec> variants;
    variants.push_back({"full", Method::Also, {}});
    VariantSpec ns{"wo_score_smoothing", Method::Also, {}};
    ns.ablation.no_smoothing = true;
    variants.push_back(ns);

    const ExperimentReport a = run_experiment(cfg, variants);
    const ExperimentReport b = run_experiment(cfg, variants);
    if (experiment_report_to_json(a) != experiment_report_to_json(b)) {
        detail = "report JSON differs between identical runs";
        return false;
    }
    for (size_t v = 0; v < a.variants.size(); ++v)
        for (size_t s = 0; s < a.variants[v].logs.size(); ++s)
            if (episode_log_to_json(a.variants[v].logs[s]) !=
                episode_log_to_json(b.variants[v].logs[s])) {
                detail = "an episode log differs between identical runs";
                return false;
            }
    detail = "reports and all episode logs byte-identical across reruns (2 variants x 5 seeds)";
    return true;
}

} // namespace

int main(int argc, char** argv) {
    struct Criterion {
        const char* name;
        std::function<bool(std::string&)> run;
    };
    const std::vector<Criterion> criteria{
        {"AC1", [](std::string& d) { return ac1(d); }},
        {"AC2", [](std::string& d) { return ac2(d); }},
        {"AC3", [](std::string& d) { return ac3(d); }},
        {"AC4", [](std::string& d) { return ac4(d); }},
        {"AC5", [](std::string& d) { return ac5(d); }},
        {"AC6", [](std::string& d) { return ac6(d); }},
        {"AC7", [](std::string& d) { return ac7(d); }},
        {"AC8", [](std::string& d) { return ac8(d); }},
        {"AC9", [](std::string& d) { return ac9(d); }},
        {"AC10", [](std::string& d) { return ac10(d); }},
        {"AC11", [](std::string& d) { return ac11(d); }},
    };

    int failures = 0;
    bool matched = false;
    for (const auto& c : criteria) {
        if (argc > 1 && std::strcmp(argv[1], c.name) != 0) continue;
        matched = true;
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::cout << c.name << ": " << (ok ? "PASS" : "FAIL") << " - " << detail << std::endl;
        if (!ok) ++failures;
    }
    if (argc > 1 && !matched) {
        std::cerr << "unknown criterion: " << argv[1] << "\n";
        return 2;
    }
    return failures == 0 ? 0 : 1;
}
