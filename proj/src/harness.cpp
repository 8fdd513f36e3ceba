#include "also/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "also/errors.hpp"

namespace also {

using nlohmann::json;

namespace {

constexpr uint64_t kEnvTag = 0x656e7669726f6eULL;
constexpr uint64_t kAgent2Tag = 0x6167656e743200ULL;
constexpr uint64_t kSelectTag = 0x73656c656374ULL;
constexpr uint64_t kTrainTag = 0x747261696e00ULL;
constexpr uint64_t kNetTag = 0x6e6574696e6974ULL;

} // namespace

const char* to_string(Method m) {
    switch (m) {
        case Method::Also: return "also";
        case Method::EpsilonGreedy: return "epsilon_greedy";
        case Method::Exp3: return "exp3";
        case Method::NeuralUcb: return "neural_ucb";
        case Method::Vanilla: return "vanilla";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    if (s == "also") return Method::Also;
    if (s == "epsilon_greedy") return Method::EpsilonGreedy;
    if (s == "exp3") return Method::Exp3;
    if (s == "neural_ucb") return Method::NeuralUcb;
    if (s == "vanilla") return Method::Vanilla;
    throw ConfigError("unknown method: '" + s + "'");
}

BudgetMethod budget_method_for(Method m) {
    switch (m) {
        case Method::Vanilla: return BudgetMethod::Vanilla;
        case Method::NeuralUcb: return BudgetMethod::Instinct;
        default: return BudgetMethod::Also;
    }
}

namespace {

std::string method_label(Method m, const AblationFlags& f) {
    std::string label = to_string(m);
    std::vector<std::string> flags;
    if (f.epsilon_greedy_selector) flags.push_back("epsilon_greedy_selector");
    if (f.no_smoothing) flags.push_back("no_smoothing");
    if (f.no_context) flags.push_back("no_context");
    if (f.no_surrogate) flags.push_back("no_surrogate");
    if (!flags.empty()) {
        label += "[";
        for (size_t i = 0; i < flags.size(); ++i) label += (i ? "," : "") + flags[i];
        label += "]";
    }
    return label;
}

void validate_config(const RunConfig& cfg) {
    if (cfg.ablation.any() && cfg.method != Method::Also)
        throw ConfigError("ablation flags apply to method=also only");
    if (cfg.ablation.no_surrogate &&
        (cfg.ablation.no_smoothing || cfg.ablation.epsilon_greedy_selector))
        throw ConfigError("no_surrogate cannot combine with no_smoothing or "
                          "epsilon_greedy_selector");
    if (!(cfg.selector.eta > 0.0)) throw ConfigError("selector.eta must be > 0");
    if (!(cfg.selector.lambda > 0.0 && cfg.selector.lambda <= 1.0))
        throw ConfigError("selector.lambda must be in (0,1]");
    if (!(cfg.selector.epsilon >= 0.0 && cfg.selector.epsilon <= 1.0))
        throw ConfigError("selector.epsilon must be in [0,1]");
    if (!(cfg.selector.gamma_floor >= 0.0 && cfg.selector.gamma_floor <= 1.0))
        throw ConfigError("selector.gamma_floor must be in [0,1]");
    if (cfg.train_interval < 1) throw ConfigError("train_interval must be >= 1");
    if (cfg.context_window < 0) throw ConfigError("context_window must be >= 0");
    if (cfg.embedding.dim < 1) throw ConfigError("embedding.dim must be >= 1");
    if (cfg.bilateral && cfg.env.kind == EnvKind::Remote)
        throw ConfigError("bilateral play is not supported on remote environments");
    if (cfg.bilateral && cfg.method == Method::Vanilla)
        throw ConfigError("bilateral play requires a strategy-selecting method");
    if (cfg.network.input_dim != 0 && cfg.network.input_dim != 2 * cfg.embedding.dim)
        throw ConfigError("network.input_dim must be 0 (derived) or 2 * embedding.dim");
}

// Per-agent pipeline state: featurizer table, surrogate, selector and log.
struct AgentCtx {
    const RunConfig& cfg;
    Method method;
    AblationFlags flags;
    const StrategyPool& pool;
    size_t K;
    Persona persona;
    EmbeddingProvider embedding;
    ArmEmbeddingTable table;
    std::optional<ValueNetwork> net;
    ReplayBuffer buffer;
    AlsoState also_state;
    Exp3State exp3_state;
    NeuralUcbState ucb_state;
    Rng select_rng;
    Rng train_rng;
    std::vector<TurnRecord> history;
    EpisodeLog log;

    std::vector<FeatureVector> features;
    std::vector<double> vhat;
    std::vector<double> pi;
    std::vector<double> ucb_grad;
    int chosen = -1;

    AgentCtx(const RunConfig& config, const StrategyPool& p, uint64_t seed, int agent_index,
             const std::string& persona_text)
        : cfg(config),
          method(config.method),
          flags(config.ablation),
          pool(p),
          K(p.size()),
          persona{persona_text, "agent" + std::to_string(agent_index)},
          embedding(config.embedding),
          buffer(config.replay_capacity),
          select_rng(derive_seed(seed, kSelectTag)),
          train_rng(derive_seed(seed, kTrainTag)) {
        if (method == Method::EpsilonGreedy) {
            method = Method::Also;
            flags.epsilon_greedy_selector = true;
        }
        log.scenario_id = cfg.scenario_id;
        log.agent_id = persona.agent_id;
        log.method = method_label(cfg.method, cfg.ablation);
        log.seed = seed;

        if (uses_embeddings()) {
            table = precompute_arm_embeddings(embedding, persona, pool);
            log.counters.embed_calls += static_cast<long>(K);
        }
        if (uses_surrogate()) {
            NetworkConfig net_cfg = cfg.network;
            if (net_cfg.input_dim == 0) net_cfg.input_dim = 2 * embedding.dim;
            if (net_cfg.init_seed == 0) net_cfg.init_seed = derive_seed(seed, kNetTag);
            if (!cfg.init_checkpoint.empty()) {
                AgentState state = load_checkpoint(cfg.init_checkpoint);
                if (state.config.input_dim != net_cfg.input_dim ||
                    state.config.arch != net_cfg.arch || state.config.hidden != net_cfg.hidden)
                    throw ConfigError("checkpoint network shape does not match the run config");
                net = ValueNetwork::init(state.config);
                net->mutable_parameters() = state.theta;
                net->set_step_count(state.step_count);
                buffer = ReplayBuffer(cfg.replay_capacity);
                for (const Sample& s : state.buffer) buffer.push(s.x, s.r);
            } else {
                net = ValueNetwork::init(net_cfg);
            }
        }
        if (method == Method::Also)
            also_state = AlsoState::init(K, cfg.selector.eta, cfg.selector.lambda,
                                         cfg.selector.gamma_floor);
        if (method == Method::Exp3)
            exp3_state = Exp3State::init(K, cfg.selector.exp3_eta, cfg.selector.exp3_gamma);
        if (method == Method::NeuralUcb)
            ucb_state = NeuralUcbState::init(net->parameters().size(), cfg.selector.lambda_reg,
                                             cfg.selector.nu);
    }

    bool uses_embeddings() const { return method != Method::Exp3 && method != Method::Vanilla &&
                                          !flags.no_surrogate; }
    bool uses_surrogate() const { return uses_embeddings(); }
    bool uses_context() const { return uses_embeddings() && !flags.no_context; }

    std::optional<int> act(int turn) {
        if (method == Method::Vanilla) return std::nullopt;
        const bool hold = cfg.granularity == RoundGranularity::PerEpisode && turn > 1;

        if (method == Method::Exp3) {
            if (!hold) {
                Exp3Choice choice = select_exp3(exp3_state, select_rng);
                pi = std::move(choice.pi);
                chosen = static_cast<int>(choice.arm);
            }
            log.pi_per_turn.push_back(pi);
            return chosen;
        }

        if (uses_surrogate()) {
            FeatureVector context;
            if (uses_context() && !history.empty()) {
                context = encode_context(embedding, history, cfg.context_window);
                ++log.counters.embed_calls;
            } else {
                context.assign(static_cast<size_t>(embedding.dim), 0.0);
            }
            features = build_features(table, context);
            vhat = net->predict(features);
            log.predictions_per_turn.push_back(vhat);
        }

        if (!hold) {
            if (method == Method::NeuralUcb) {
                chosen = static_cast<int>(select_neural_ucb(*net, features, ucb_state));
                pi.assign(K, 0.0);
                pi[static_cast<size_t>(chosen)] = 1.0;
            } else if (flags.epsilon_greedy_selector) {
                chosen = static_cast<int>(
                    select_epsilon_greedy(vhat, cfg.selector.epsilon, select_rng));
                size_t greedy = 0;
                for (size_t a = 1; a < K; ++a)
                    if (vhat[a] > vhat[greedy]) greedy = a;
                pi.assign(K, cfg.selector.epsilon / static_cast<double>(K));
                pi[greedy] += 1.0 - cfg.selector.epsilon;
            } else if (flags.no_surrogate) {
                pi = selection_distribution(also_state);
                chosen = static_cast<int>(sample_arm(pi, select_rng));
            } else if (flags.no_smoothing) {
                pi = softmax_weights(vhat, cfg.selector.eta, cfg.selector.gamma_floor);
                chosen = static_cast<int>(sample_arm(pi, select_rng));
            } else {
                pi = selection_distribution(also_state);
                chosen = static_cast<int>(sample_arm(pi, select_rng));
            }
        }
        if (method == Method::NeuralUcb)
            ucb_grad = net->prediction_gradient(features[static_cast<size_t>(chosen)]);
        log.pi_per_turn.push_back(pi);
        return chosen;
    }

    void observe(int turn, const TurnRecord& rec, double reward) {
        history.push_back(rec);
        log.records.push_back(rec);
        if (method == Method::Vanilla) return;
        log.selected_arms.push_back(chosen);

        if (uses_surrogate()) {
            buffer.push(features[static_cast<size_t>(chosen)], reward);
            if (turn % cfg.train_interval == 0) train_step(*net, buffer, cfg.train, train_rng);
        }
        switch (method) {
            case Method::Also:
                if (flags.no_surrogate) {
                    std::vector<double> update(K, 0.0);
                    update[static_cast<size_t>(chosen)] = reward;
                    also_state = smooth_scores(also_state, update);
                    log.predictions_per_turn.push_back(std::move(update));
                } else if (!flags.no_smoothing && !flags.epsilon_greedy_selector) {
                    also_state = smooth_scores(also_state, vhat);
                }
                break;
            case Method::Exp3:
                exp3_state = update_exp3(exp3_state, static_cast<size_t>(chosen), reward,
                                         pi[static_cast<size_t>(chosen)]);
                break;
            case Method::NeuralUcb:
                ucb_state = update_neural_ucb(ucb_state, ucb_grad);
                break;
            default:
                break;
        }
    }

    AgentState final_state() const {
        AgentState state;
        if (net) {
            state.config = net->config();
            state.theta.assign(net->parameters().begin(), net->parameters().end());
            state.step_count = net->step_count();
            state.buffer = buffer;
        }
        return state;
    }
};

TurnRecord mirror_record(const TurnRecord& rec, int arm2, double reward2,
                         const std::optional<RawDims>& raw2) {
    TurnRecord m;
    m.turn = rec.turn;
    m.agent_arm = arm2;
    m.opponent_arm = rec.agent_arm;
    m.agent_utterance = "arm" + std::to_string(arm2);
    m.opponent_utterance = rec.opponent_utterance;
    m.raw_dims = raw2.value_or(rec.raw_dims);
    m.reward = reward2;
    return m;
}

} // namespace

EpisodeResult run_episode_full(const RunConfig& config, uint64_t seed) {
    validate_config(config);
    const StrategyPool pool = load_pool(config.pool_path);

    EnvConfig env_cfg = config.env;
    env_cfg.num_arms = static_cast<int>(pool.size());
    env_cfg.seed = derive_seed(seed, kEnvTag);
    auto env = create_environment(env_cfg);

    AgentCtx a1(config, pool, seed, 1, config.persona_text);
    std::optional<AgentCtx> a2;
    if (config.bilateral) {
        const uint64_t seed2 =
            config.agent2_seed ? config.agent2_seed : derive_seed(seed, kAgent2Tag);
        a2.emplace(config, pool, seed2, 2,
                   config.persona2_text.empty() ? config.persona_text : config.persona2_text);
    }

    const int turns = env->turns_per_episode();
    try {
        for (int t = 1; t <= turns && !env->done(); ++t) {
            const std::optional<int> arm1 = a1.act(t);
            std::optional<int> arm2;
            if (a2) arm2 = a2->act(t);

            std::string persona_text;
            if (config.env.kind == EnvKind::Remote)
                persona_text = arm1 ? augment_persona(a1.persona, pool.at(*arm1)).text
                                    : a1.persona.text;

            const TurnRecord rec = env->step(arm1, arm2, persona_text);
            if (!env->last_arm_rewards().empty())
                a1.log.per_arm_rewards.push_back(env->last_arm_rewards());
            a1.observe(t, rec, rec.reward);
            a1.log.counters.env_steps += 1;
            a1.log.counters.agent_calls += 2;
            a1.log.counters.evaluator_calls += 1;

            if (a2) {
                const double r2 = env->last_opponent_arm_rewards().at(static_cast<size_t>(*arm2));
                const TurnRecord rec2 = mirror_record(rec, *arm2, r2, env->last_opponent_raw());
                if (!env->last_opponent_arm_rewards().empty())
                    a2->log.per_arm_rewards.push_back(env->last_opponent_arm_rewards());
                a2->observe(t, rec2, r2);
                a2->log.counters.env_steps += 1;
                a2->log.counters.agent_calls += 2;
                a2->log.counters.evaluator_calls += 1;
            }
        }
    } catch (const Error& e) {
        a1.log.incomplete = true;
        a1.log.failure = e.what();
        if (a2) {
            a2->log.incomplete = true;
            a2->log.failure = e.what();
        }
    }

    EpisodeResult out;
    out.final_state1 = a1.final_state();
    out.agent1 = std::move(a1.log);
    if (a2) out.agent2 = std::move(a2->log);
    return out;
}

EpisodeLog run_episode(const RunConfig& config, uint64_t seed) {
    return run_episode_full(config, seed).agent1;
}

std::vector<VariantSpec> ablation_matrix() {
    std::vector<VariantSpec> variants;
    variants.push_back({"full", Method::Also, {}});
    VariantSpec eg{"wo_exp3_epsilon_greedy", Method::Also, {}};
    eg.ablation.epsilon_greedy_selector = true;
    variants.push_back(eg);
    VariantSpec ns{"wo_score_smoothing", Method::Also, {}};
    ns.ablation.no_smoothing = true;
    variants.push_back(ns);
    VariantSpec nc{"wo_context_embedding", Method::Also, {}};
    nc.ablation.no_context = true;
    variants.push_back(nc);
    VariantSpec nn{"wo_neural_surrogate", Method::Also, {}};
    nn.ablation.no_surrogate = true;
    variants.push_back(nn);
    return variants;
}

namespace {

void parallel_cells(size_t n, int max_parallel, const std::function<void(size_t)>& fn) {
    unsigned hw = std::thread::hardware_concurrency();
    size_t workers = max_parallel > 0 ? static_cast<size_t>(max_parallel) : (hw ? hw : 1);
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (size_t w = 0; w < workers; ++w)
        threads.emplace_back([&]() {
            for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : threads) t.join();
}

double mean_reward_of(const EpisodeLog& log) {
    if (log.records.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& rec : log.records) acc += rec.reward;
    return acc / static_cast<double>(log.records.size());
}

} // namespace

ExperimentReport run_experiment(const RunConfig& base, std::span<const VariantSpec> variants) {
    if (base.seeds.empty()) throw ConfigError("run_experiment needs at least one seed");
    if (variants.empty()) throw ConfigError("run_experiment needs at least one variant");

    ExperimentReport report;
    report.seeds = base.seeds;
    report.config_digest = config_digest(base);

    const size_t num_seeds = base.seeds.size();
    const size_t cells = variants.size() * num_seeds;
    std::vector<std::optional<EpisodeLog>> logs(cells);
    std::vector<std::string> failures(cells);

    parallel_cells(cells, base.max_parallel, [&](size_t i) {
        const size_t v = i / num_seeds;
        const size_t s = i % num_seeds;
        RunConfig cfg = base;
        cfg.method = variants[v].method;
        cfg.ablation = variants[v].ablation;
        try {
            logs[i] = run_episode(cfg, base.seeds[s]);
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });

    for (size_t v = 0; v < variants.size(); ++v) {
        VariantResult res;
        res.name = variants[v].name;
        res.budget = budget_report(budget_method_for(variants[v].method),
                                   base.env.turns_per_episode);
        double regret_acc = 0.0;
        size_t regret_n = 0;
        for (size_t s = 0; s < num_seeds; ++s) {
            const size_t i = v * num_seeds + s;
            if (!logs[i] || logs[i]->incomplete) {
                res.incomplete = true;
                report.incomplete = true;
                res.per_seed_mean.push_back(std::numeric_limits<double>::quiet_NaN());
                if (logs[i]) res.logs.push_back(std::move(*logs[i]));
                continue;
            }
            res.per_seed_mean.push_back(mean_reward_of(*logs[i]));
            if (auto r = pseudo_regret(*logs[i])) {
                regret_acc += *r;
                ++regret_n;
            }
            res.logs.push_back(std::move(*logs[i]));
        }
        std::vector<double> ok;
        for (double m : res.per_seed_mean)
            if (std::isfinite(m)) ok.push_back(m);
        if (!ok.empty()) {
            for (double m : ok) res.mean_reward += m;
            res.mean_reward /= static_cast<double>(ok.size());
            if (ok.size() > 1) {
                double var = 0.0;
                for (double m : ok) var += (m - res.mean_reward) * (m - res.mean_reward);
                var /= static_cast<double>(ok.size() - 1);
                res.se = std::sqrt(var / static_cast<double>(ok.size()));
            }
        }
        if (regret_n > 0) res.mean_pseudo_regret = regret_acc / static_cast<double>(regret_n);
        report.variants.push_back(std::move(res));
    }

    const size_t nv = report.variants.size();
    report.win_rate.assign(nv, std::vector<double>(nv, 0.0));
    for (size_t a = 0; a < nv; ++a) {
        for (size_t b = 0; b < nv; ++b) {
            if (a == b) {
                report.win_rate[a][b] = 1.0;
                continue;
            }
            size_t wins = 0, total = 0;
            for (size_t s = 0; s < num_seeds; ++s) {
                const double ma = report.variants[a].per_seed_mean[s];
                const double mb = report.variants[b].per_seed_mean[s];
                if (!std::isfinite(ma) || !std::isfinite(mb)) continue;
                ++total;
                if (ma > mb) ++wins;
            }
            report.win_rate[a][b] =
                total ? static_cast<double>(wins) / static_cast<double>(total) : 0.0;
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Checkpoints: platform-native binary dump, bit-exact round trip.

namespace {

constexpr char kCheckpointMagic[8] = {'A', 'L', 'S', 'O', 'C', 'K', 'P', 'T'};
constexpr uint32_t kCheckpointVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw CheckpointError("checkpoint truncated");
    return value;
}

} // namespace

void save_checkpoint(const AgentState& state, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot open checkpoint for writing: '" + path + "'");
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_pod(out, kCheckpointVersion);
    write_pod(out, static_cast<uint8_t>(state.config.arch));
    write_pod(out, static_cast<uint8_t>(state.config.activation));
    write_pod(out, static_cast<int32_t>(state.config.hidden));
    write_pod(out, static_cast<int32_t>(state.config.input_dim));
    write_pod(out, static_cast<uint64_t>(state.config.init_seed));
    write_pod(out, static_cast<int64_t>(state.step_count));
    write_pod(out, static_cast<uint64_t>(state.theta.size()));
    out.write(reinterpret_cast<const char*>(state.theta.data()),
              static_cast<std::streamsize>(state.theta.size() * sizeof(double)));
    const uint8_t has_cap = state.buffer.capacity().has_value() ? 1 : 0;
    write_pod(out, has_cap);
    write_pod(out, static_cast<uint64_t>(state.buffer.capacity().value_or(0)));
    write_pod(out, static_cast<uint64_t>(state.buffer.size()));
    for (const Sample& s : state.buffer) {
        write_pod(out, static_cast<uint64_t>(s.x.size()));
        out.write(reinterpret_cast<const char*>(s.x.data()),
                  static_cast<std::streamsize>(s.x.size() * sizeof(double)));
        write_pod(out, s.r);
    }
    if (!out) throw CheckpointError("failed writing checkpoint: '" + path + "'");
}

AgentState load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint: '" + path + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw CheckpointError("not a checkpoint file: '" + path + "'");
    const auto version = read_pod<uint32_t>(in);
    if (version != kCheckpointVersion)
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));

    try {
        AgentState state;
        state.config.arch = static_cast<Architecture>(read_pod<uint8_t>(in));
        state.config.activation = static_cast<Activation>(read_pod<uint8_t>(in));
        state.config.hidden = read_pod<int32_t>(in);
        state.config.input_dim = read_pod<int32_t>(in);
        state.config.init_seed = read_pod<uint64_t>(in);
        state.step_count = read_pod<int64_t>(in);
        const auto theta_len = read_pod<uint64_t>(in);
        if (theta_len != parameter_count(state.config))
            throw CheckpointError("parameter count does not match architecture");
        state.theta.resize(theta_len);
        in.read(reinterpret_cast<char*>(state.theta.data()),
                static_cast<std::streamsize>(theta_len * sizeof(double)));
        if (!in) throw CheckpointError("checkpoint truncated");
        const auto has_cap = read_pod<uint8_t>(in);
        const auto cap = read_pod<uint64_t>(in);
        state.buffer = ReplayBuffer(has_cap ? std::optional<size_t>(cap) : std::nullopt);
        const auto n_samples = read_pod<uint64_t>(in);
        for (uint64_t i = 0; i < n_samples; ++i) {
            const auto x_len = read_pod<uint64_t>(in);
            FeatureVector x(x_len);
            in.read(reinterpret_cast<char*>(x.data()),
                    static_cast<std::streamsize>(x_len * sizeof(double)));
            if (!in) throw CheckpointError("checkpoint truncated");
            state.buffer.push(std::move(x), read_pod<double>(in));
        }
        return state;
    } catch (const CheckpointError&) {
        throw;
    } catch (const Error& e) {
        throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Config serialization.

namespace {

json env_to_json(const EnvConfig& e) {
    json j;
    j["kind"] = to_string(e.kind);
    j["num_arms"] = e.num_arms;
    j["turns_per_episode"] = e.turns_per_episode;
    j["drift_variance_range"] = e.drift_variance_range;
    j["switch_period"] = e.switch_period;
    j["adversary_memory"] = e.adversary_memory;
    j["adversary_penalty"] = e.adversary_penalty;
    j["seed"] = e.seed;
    j["arm_means"] = e.arm_means;
    j["means_seed"] = e.means_seed;
    j["noise_std"] = e.noise_std;
    j["regime_count"] = e.regime_count;
    j["regime_period"] = e.regime_period;
    j["regime_bonus"] = e.regime_bonus;
    if (e.opponent) j["opponent"] = to_string(*e.opponent);
    j["opponent_step"] = e.opponent_step;
    j["endpoint"] = e.endpoint;
    j["timeout_ms"] = e.timeout_ms;
    j["retries"] = e.retries;
    return j;
}

EnvConfig env_from_json(const json& j) {
    EnvConfig e;
    e.kind = env_kind_from_string(j.value("kind", std::string(to_string(e.kind))));
    e.num_arms = j.value("num_arms", e.num_arms);
    e.turns_per_episode = j.value("turns_per_episode", e.turns_per_episode);
    if (j.contains("drift_variance_range")) {
        const auto& r = j["drift_variance_range"];
        if (!r.is_array() || r.size() != 2)
            throw ConfigError("drift_variance_range must be [low, high]");
        e.drift_variance_range = {r[0].get<double>(), r[1].get<double>()};
    }
    e.switch_period = j.value("switch_period", e.switch_period);
    e.adversary_memory = j.value("adversary_memory", e.adversary_memory);
    e.adversary_penalty = j.value("adversary_penalty", e.adversary_penalty);
    e.seed = j.value("seed", e.seed);
    e.arm_means = j.value("arm_means", e.arm_means);
    e.means_seed = j.value("means_seed", e.means_seed);
    e.noise_std = j.value("noise_std", e.noise_std);
    e.regime_count = j.value("regime_count", e.regime_count);
    e.regime_period = j.value("regime_period", e.regime_period);
    e.regime_bonus = j.value("regime_bonus", e.regime_bonus);
    if (j.contains("opponent") && !j["opponent"].is_null())
        e.opponent = opponent_kind_from_string(j["opponent"].get<std::string>());
    e.opponent_step = j.value("opponent_step", e.opponent_step);
    e.endpoint = j.value("endpoint", e.endpoint);
    e.timeout_ms = j.value("timeout_ms", e.timeout_ms);
    e.retries = j.value("retries", e.retries);
    return e;
}

std::vector<std::string> ablation_to_list(const AblationFlags& f) {
    std::vector<std::string> out;
    if (f.no_smoothing) out.push_back("no_smoothing");
    if (f.no_context) out.push_back("no_context");
    if (f.no_surrogate) out.push_back("no_surrogate");
    if (f.epsilon_greedy_selector) out.push_back("epsilon_greedy_selector");
    return out;
}

AblationFlags ablation_from_list(const std::vector<std::string>& list) {
    AblationFlags f;
    for (const auto& s : list) {
        if (s == "no_smoothing")
            f.no_smoothing = true;
        else if (s == "no_context")
            f.no_context = true;
        else if (s == "no_surrogate")
            f.no_surrogate = true;
        else if (s == "epsilon_greedy_selector")
            f.epsilon_greedy_selector = true;
        else
            throw ConfigError("unknown ablation flag: '" + s + "'");
    }
    return f;
}

} // namespace

std::string run_config_to_json(const RunConfig& c) {
    json j;
    j["pool_path"] = c.pool_path;
    j["persona_text"] = c.persona_text;
    j["persona2_text"] = c.persona2_text;
    j["scenario_id"] = c.scenario_id;
    j["env"] = env_to_json(c.env);
    j["method"] = to_string(c.method);
    j["bilateral"] = c.bilateral;
    j["ablation"] = ablation_to_list(c.ablation);
    j["network"] = {{"arch", to_string(c.network.arch)},
                    {"hidden", c.network.hidden},
                    {"activation", to_string(c.network.activation)},
                    {"input_dim", c.network.input_dim},
                    {"init_seed", c.network.init_seed}};
    j["train"] = {{"lr", c.train.lr},
                  {"batch_size", c.train.batch_size},
                  {"max_epochs", c.train.max_epochs},
                  {"early_stop_patience", c.train.early_stop_patience},
                  {"early_stop_tol", c.train.early_stop_tol}};
    if (c.train.weight_decay_override)
        j["train"]["weight_decay"] = *c.train.weight_decay_override;
    else
        j["train"]["weight_decay"] = nullptr;
    j["selector"] = {{"eta", c.selector.eta},
                     {"lambda", c.selector.lambda},
                     {"gamma_floor", c.selector.gamma_floor},
                     {"epsilon", c.selector.epsilon},
                     {"exp3_eta", c.selector.exp3_eta},
                     {"exp3_gamma", c.selector.exp3_gamma},
                     {"nu", c.selector.nu},
                     {"lambda_reg", c.selector.lambda_reg}};
    j["embedding"] = {{"kind", c.embedding.kind == ProviderKind::Synthetic ? "synthetic" : "remote"},
                      {"dim", c.embedding.dim},
                      {"seed", c.embedding.seed},
                      {"endpoint", c.embedding.endpoint},
                      {"model", c.embedding.model},
                      {"timeout_ms", c.embedding.timeout_ms},
                      {"retries", c.embedding.retries}};
    j["context_window"] = c.context_window;
    j["granularity"] = c.granularity == RoundGranularity::PerTurn ? "per_turn" : "per_episode";
    j["train_interval"] = c.train_interval;
    if (c.replay_capacity)
        j["replay_capacity"] = *c.replay_capacity;
    else
        j["replay_capacity"] = nullptr;
    j["init_checkpoint"] = c.init_checkpoint;
    j["seeds"] = c.seeds;
    j["agent2_seed"] = c.agent2_seed;
    j["output_dir"] = c.output_dir;
    j["max_parallel"] = c.max_parallel;
    return j.dump(2);
}

RunConfig run_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    c.pool_path = j.value("pool_path", c.pool_path);
    c.persona_text = j.value("persona_text", c.persona_text);
    c.persona2_text = j.value("persona2_text", c.persona2_text);
    c.scenario_id = j.value("scenario_id", c.scenario_id);
    if (j.contains("env")) c.env = env_from_json(j["env"]);
    c.method = method_from_string(j.value("method", std::string(to_string(c.method))));
    c.bilateral = j.value("bilateral", c.bilateral);
    if (j.contains("ablation"))
        c.ablation = ablation_from_list(j["ablation"].get<std::vector<std::string>>());
    if (j.contains("network")) {
        const auto& n = j["network"];
        c.network.arch =
            architecture_from_string(n.value("arch", std::string(to_string(c.network.arch))));
        c.network.hidden = n.value("hidden", c.network.hidden);
        c.network.activation = activation_from_string(
            n.value("activation", std::string(to_string(c.network.activation))));
        c.network.input_dim = n.value("input_dim", c.network.input_dim);
        c.network.init_seed = n.value("init_seed", c.network.init_seed);
    }
    if (j.contains("train")) {
        const auto& t = j["train"];
        c.train.lr = t.value("lr", c.train.lr);
        c.train.batch_size = t.value("batch_size", c.train.batch_size);
        c.train.max_epochs = t.value("max_epochs", c.train.max_epochs);
        c.train.early_stop_patience = t.value("early_stop_patience", c.train.early_stop_patience);
        c.train.early_stop_tol = t.value("early_stop_tol", c.train.early_stop_tol);
        if (t.contains("weight_decay") && !t["weight_decay"].is_null())
            c.train.weight_decay_override = t["weight_decay"].get<double>();
    }
    if (j.contains("selector")) {
        const auto& s = j["selector"];
        c.selector.eta = s.value("eta", c.selector.eta);
        c.selector.lambda = s.value("lambda", c.selector.lambda);
        c.selector.gamma_floor = s.value("gamma_floor", c.selector.gamma_floor);
        c.selector.epsilon = s.value("epsilon", c.selector.epsilon);
        c.selector.exp3_eta = s.value("exp3_eta", c.selector.exp3_eta);
        c.selector.exp3_gamma = s.value("exp3_gamma", c.selector.exp3_gamma);
        c.selector.nu = s.value("nu", c.selector.nu);
        c.selector.lambda_reg = s.value("lambda_reg", c.selector.lambda_reg);
    }
    if (j.contains("embedding")) {
        const auto& e = j["embedding"];
        const std::string kind = e.value("kind", std::string("synthetic"));
        if (kind == "synthetic")
            c.embedding.kind = ProviderKind::Synthetic;
        else if (kind == "remote")
            c.embedding.kind = ProviderKind::Remote;
        else
            throw ConfigError("unknown embedding kind: '" + kind + "'");
        c.embedding.dim = e.value("dim", c.embedding.dim);
        c.embedding.seed = e.value("seed", c.embedding.seed);
        c.embedding.endpoint = e.value("endpoint", c.embedding.endpoint);
        c.embedding.model = e.value("model", c.embedding.model);
        c.embedding.timeout_ms = e.value("timeout_ms", c.embedding.timeout_ms);
        c.embedding.retries = e.value("retries", c.embedding.retries);
    }
    c.context_window = j.value("context_window", c.context_window);
    const std::string gran = j.value("granularity", std::string("per_turn"));
    if (gran == "per_turn")
        c.granularity = RoundGranularity::PerTurn;
    else if (gran == "per_episode")
        c.granularity = RoundGranularity::PerEpisode;
    else
        throw ConfigError("granularity must be per_turn or per_episode");
    c.train_interval = j.value("train_interval", c.train_interval);
    if (j.contains("replay_capacity") && !j["replay_capacity"].is_null())
        c.replay_capacity = j["replay_capacity"].get<size_t>();
    c.init_checkpoint = j.value("init_checkpoint", c.init_checkpoint);
    c.seeds = j.value("seeds", c.seeds);
    c.agent2_seed = j.value("agent2_seed", c.agent2_seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.max_parallel = j.value("max_parallel", c.max_parallel);
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return run_config_from_json(buf.str());
}

uint64_t config_digest(const RunConfig& config) {
    return fnv1a(run_config_to_json(config));
}

std::string experiment_report_to_json(const ExperimentReport& report) {
    json j;
    j["code_version"] = report.code_version;
    j["config_digest"] = report.config_digest;
    j["seeds"] = report.seeds;
    j["incomplete"] = report.incomplete;
    json variants = json::array();
    for (const auto& v : report.variants) {
        json jv;
        jv["name"] = v.name;
        json per_seed = json::array();
        for (double m : v.per_seed_mean) {
            if (std::isfinite(m))
                per_seed.push_back(m);
            else
                per_seed.push_back(nullptr);
        }
        jv["per_seed_mean_reward"] = std::move(per_seed);
        jv["mean_reward"] = v.mean_reward;
        jv["se"] = v.se;
        if (v.mean_pseudo_regret) jv["mean_pseudo_regret"] = *v.mean_pseudo_regret;
        jv["budget"] = {{"method", to_string(v.budget.method)},
                        {"agent_calls", v.budget.agent_calls},
                        {"evaluator_calls", v.budget.evaluator_calls},
                        {"optimizer_calls", v.budget.optimizer_calls}};
        jv["incomplete"] = v.incomplete;
        variants.push_back(std::move(jv));
    }
    j["variants"] = std::move(variants);
    j["win_rate"] = report.win_rate;
    return j.dump(2);
}

void write_experiment_outputs(const ExperimentReport& report, const RunConfig& base,
                              const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "episodes");

    std::ofstream manifest(fs::path(out_dir) / "manifest.json");
    json m;
    m["code_version"] = report.code_version;
    m["config_digest"] = report.config_digest;
    m["seeds"] = report.seeds;
    m["resolved_config"] = json::parse(run_config_to_json(base));
    {
        json names = json::array();
        for (const auto& v : report.variants) names.push_back(v.name);
        m["variants"] = std::move(names);
    }
    manifest << m.dump(2) << "\n";

    std::ofstream rep(fs::path(out_dir) / "report.json");
    rep << experiment_report_to_json(report) << "\n";

    std::vector<EpisodeLog> all_logs;
    for (const auto& v : report.variants)
        for (const auto& log : v.logs) all_logs.push_back(log);
    std::ofstream csv(fs::path(out_dir) / "turns.csv");
    write_turns_csv(csv, all_logs);

    for (const auto& v : report.variants)
        for (const auto& log : v.logs) {
            std::ofstream ep(fs::path(out_dir) / "episodes" /
                             (v.name + "_seed" + std::to_string(log.seed) + ".json"));
            ep << episode_log_to_json(log) << "\n";
        }
}

} // namespace also
