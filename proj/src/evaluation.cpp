#include "also/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "also/errors.hpp"

namespace also {

using nlohmann::json;

double pseudo_regret(const std::vector<std::vector<double>>& per_arm_rewards,
                     std::span<const int> selected) {
    if (per_arm_rewards.size() != selected.size())
        throw DimensionMismatchError("reward matrix rows != selected arm count");
    if (per_arm_rewards.empty()) return 0.0;
    const size_t k = per_arm_rewards.front().size();
    std::vector<double> arm_totals(k, 0.0);
    double played_total = 0.0;
    for (size_t t = 0; t < per_arm_rewards.size(); ++t) {
        const auto& row = per_arm_rewards[t];
        if (row.size() != k) throw DimensionMismatchError("ragged reward matrix");
        for (size_t a = 0; a < k; ++a) {
            if (!std::isfinite(row[a])) throw NumericError("non-finite reward entry");
            arm_totals[a] += row[a];
        }
        const int sel = selected[t];
        if (sel < 0 || static_cast<size_t>(sel) >= k)
            throw RangeError("selected arm out of range");
        played_total += row[static_cast<size_t>(sel)];
    }
    return *std::max_element(arm_totals.begin(), arm_totals.end()) - played_total;
}

std::optional<double> pseudo_regret(const EpisodeLog& log) {
    if (log.per_arm_rewards.empty()) return std::nullopt;
    return pseudo_regret(log.per_arm_rewards, log.selected_arms);
}

const char* to_string(BudgetMethod m) {
    switch (m) {
        case BudgetMethod::Vanilla: return "vanilla";
        case BudgetMethod::Instinct: return "instinct";
        case BudgetMethod::Also: return "also";
        case BudgetMethod::Opro: return "opro";
        case BudgetMethod::Evoprompt: return "evoprompt";
    }
    return "?";
}

BudgetMethod budget_method_from_string(const std::string& s) {
    if (s == "vanilla") return BudgetMethod::Vanilla;
    if (s == "instinct") return BudgetMethod::Instinct;
    if (s == "also" || s == "ours") return BudgetMethod::Also;
    if (s == "opro") return BudgetMethod::Opro;
    if (s == "evoprompt") return BudgetMethod::Evoprompt;
    throw ConfigError("unknown budget method: '" + s + "'");
}

BudgetReport budget_report(BudgetMethod method, int turns) {
    if (turns < 1) throw ConfigError("budget_report needs turns >= 1");
    const long t = turns;
    const long opt_rounds = (t + 4) / 5;   // ceil(T/5), one optimizer round per 5 turns
    BudgetReport r;
    r.method = method;
    r.agent_calls = 2 * t;
    r.evaluator_calls = t;
    switch (method) {
        case BudgetMethod::Vanilla:
        case BudgetMethod::Instinct:
        case BudgetMethod::Also:
            r.optimizer_calls = 0;
            break;
        case BudgetMethod::Opro:
            r.optimizer_calls = opt_rounds;
            break;
        case BudgetMethod::Evoprompt:
            r.optimizer_calls = 5 * opt_rounds;
            break;
    }
    return r;
}

std::map<int, ArmStats> drift_stats(std::span<const EpisodeLog> logs) {
    std::map<int, std::vector<double>> samples;
    for (const auto& log : logs) {
        if (!log.per_arm_rewards.empty()) {
            for (const auto& row : log.per_arm_rewards)
                for (size_t a = 0; a < row.size(); ++a)
                    samples[static_cast<int>(a)].push_back(row[a]);
        } else {
            for (const auto& rec : log.records)
                if (rec.agent_arm) samples[*rec.agent_arm].push_back(rec.reward);
        }
    }
    std::map<int, ArmStats> out;
    for (auto& [arm, xs] : samples) {
        if (xs.size() < 2) continue;
        ArmStats st;
        st.count = xs.size();
        for (double x : xs) st.mean += x;
        st.mean /= static_cast<double>(xs.size());
        for (double x : xs) st.variance += (x - st.mean) * (x - st.mean);
        st.variance /= static_cast<double>(xs.size() - 1);
        out[arm] = st;
    }
    return out;
}

void write_turns_csv(std::ostream& out, std::span<const EpisodeLog> logs) {
    size_t max_k = 0;
    for (const auto& log : logs)
        for (const auto& row : log.pi_per_turn) max_k = std::max(max_k, row.size());
    out << "scenario,agent,method,seed,turn,arm,reward,regret_so_far";
    for (size_t a = 0; a < max_k; ++a) out << ",pi" << a;
    out << "\n";
    for (const auto& log : logs) {
        std::vector<double> arm_totals;
        double played_total = 0.0;
        for (size_t t = 0; t < log.records.size(); ++t) {
            const TurnRecord& rec = log.records[t];
            double regret_so_far = 0.0;
            if (t < log.per_arm_rewards.size()) {
                const auto& row = log.per_arm_rewards[t];
                arm_totals.resize(row.size(), 0.0);
                for (size_t a = 0; a < row.size(); ++a) arm_totals[a] += row[a];
                played_total += rec.reward;
                regret_so_far =
                    *std::max_element(arm_totals.begin(), arm_totals.end()) - played_total;
            }
            out << log.scenario_id << ',' << log.agent_id << ',' << log.method << ','
                << log.seed << ',' << rec.turn << ','
                << (rec.agent_arm ? std::to_string(*rec.agent_arm) : std::string("-")) << ','
                << rec.reward << ',' << regret_so_far;
            for (size_t a = 0; a < max_k; ++a) {
                out << ',';
                if (t < log.pi_per_turn.size() && a < log.pi_per_turn[t].size())
                    out << log.pi_per_turn[t][a];
            }
            out << "\n";
        }
    }
}

std::string episode_log_to_json(const EpisodeLog& log) {
    json j;
    j["scenario_id"] = log.scenario_id;
    j["agent_id"] = log.agent_id;
    j["method"] = log.method;
    j["seed"] = log.seed;
    j["incomplete"] = log.incomplete;
    if (!log.failure.empty()) j["failure"] = log.failure;
    j["counters"] = {{"agent_calls", log.counters.agent_calls},
                     {"evaluator_calls", log.counters.evaluator_calls},
                     {"optimizer_calls", log.counters.optimizer_calls},
                     {"env_steps", log.counters.env_steps},
                     {"embed_calls", log.counters.embed_calls}};
    json records = json::array();
    for (const auto& rec : log.records) {
        json r;
        r["turn"] = rec.turn;
        if (rec.agent_arm)
            r["agent_arm"] = *rec.agent_arm;
        else
            r["agent_arm"] = nullptr;
        if (rec.opponent_arm)
            r["opponent_arm"] = *rec.opponent_arm;
        else
            r["opponent_arm"] = nullptr;
        r["agent_utterance"] = rec.agent_utterance;
        r["opponent_utterance"] = rec.opponent_utterance;
        r["raw_dims"] = rec.raw_dims;
        r["reward"] = rec.reward;
        records.push_back(std::move(r));
    }
    j["records"] = std::move(records);
    j["predictions_per_turn"] = log.predictions_per_turn;
    j["pi_per_turn"] = log.pi_per_turn;
    j["selected_arms"] = log.selected_arms;
    j["per_arm_rewards"] = log.per_arm_rewards;
    if (auto regret = pseudo_regret(log)) j["pseudo_regret"] = *regret;
    return j.dump(2);
}

} // namespace also
