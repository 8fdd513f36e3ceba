#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "also/environment.hpp"
#include "also/evaluation.hpp"
#include "also/featurizer.hpp"
#include "also/harness.hpp"
#include "also/selector.hpp"
#include "also/strategy.hpp"
#include "also/surrogate.hpp"

namespace py = pybind11;
using namespace also;

PYBIND11_MODULE(_also_core, m) {
    m.doc() = "Adversarial online strategy optimization: core operations";

    m.def("normalize_reward",
          [](const std::array<double, 7>& dims) { return normalize_reward(dims); },
          py::arg("dims"),
          "Average of per-dimension min-max normalized scores, in [0,1]");

    m.def("dimension_specs", []() {
        std::vector<std::tuple<std::string, double, double>> out;
        for (const auto& d : kDimensions) out.emplace_back(d.name, d.min, d.max);
        return out;
    });

    m.def("load_pool_ids", [](const std::string& path) {
        const StrategyPool pool = load_pool(path);
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& s : pool.strategies()) out.emplace_back(s.id, to_string(s.category));
        return out;
    }, py::arg("path"), "List of (id, category) in arm order");

    m.def("augment_text",
          [](const std::string& base, const std::string& strategy_description) {
              Strategy s{"s", Category::Cooperative, strategy_description, Origin::Base};
              return augment_persona(Persona{base, "a"}, s).text;
          },
          py::arg("persona"), py::arg("strategy_description"));

    m.def("embed_text",
          [](const std::string& text, int dim, uint64_t seed) {
              EmbeddingProvider p;
              p.dim = dim;
              p.seed = seed;
              return embed_text(p, text);
          },
          py::arg("text"), py::arg("dim") = 64, py::arg("seed") = 0,
          "Deterministic hashing featurizer, L2-normalized");

    m.def("selection_distribution",
          [](const std::vector<double>& scores, double eta, double gamma_floor) {
              return softmax_weights(scores, eta, gamma_floor);
          },
          py::arg("scores"), py::arg("eta") = 10.0, py::arg("gamma_floor") = 0.0);

    m.def("smooth_scores",
          [](const std::vector<double>& scores, const std::vector<double>& predictions,
             double lam, double eta) {
              AlsoState st;
              st.scores = scores;
              st.eta = eta;
              st.lambda = lam;
              return smooth_scores(st, predictions).scores;
          },
          py::arg("scores"), py::arg("predictions"), py::arg("lambda_") = 0.9,
          py::arg("eta") = 10.0);

    m.def("sample_arm",
          [](const std::vector<double>& pi, uint64_t seed) {
              Rng rng(seed);
              return sample_arm(pi, rng);
          },
          py::arg("pi"), py::arg("seed") = 0);

    m.def("budget_report",
          [](const std::string& method, int turns) {
              const BudgetReport r = budget_report(budget_method_from_string(method), turns);
              return std::make_tuple(r.agent_calls, r.evaluator_calls, r.optimizer_calls);
          },
          py::arg("method"), py::arg("turns"),
          "(agent_calls, evaluator_calls, optimizer_calls)");

    m.def("pseudo_regret",
          [](const std::vector<std::vector<double>>& per_arm_rewards,
             const std::vector<int>& selected) {
              return pseudo_regret(per_arm_rewards, selected);
          },
          py::arg("per_arm_rewards"), py::arg("selected"));

    m.def("default_config_json", []() { return run_config_to_json(RunConfig{}); });

    m.def("run_episode_json",
          [](const std::string& config_json, uint64_t seed) {
              const RunConfig cfg = run_config_from_json(config_json);
              return episode_log_to_json(run_episode(cfg, seed));
          },
          py::arg("config_json"), py::arg("seed"),
          "Run one episode; returns the episode log as a JSON string");

    m.def("run_ablation_json", [](const std::string& config_json) {
        const RunConfig cfg = run_config_from_json(config_json);
        const auto variants = ablation_matrix();
        return experiment_report_to_json(run_experiment(cfg, variants));
    }, py::arg("config_json"), "Run the component ablation matrix; returns the report JSON");

    m.def("gradient_check",
          [](const std::string& arch, int input_dim, int hidden, uint64_t seed, double eps) {
              NetworkConfig cfg;
              cfg.arch = architecture_from_string(arch);
              cfg.input_dim = input_dim;
              cfg.hidden = hidden;
              cfg.init_seed = seed;
              ValueNetwork net = ValueNetwork::init(cfg);
              Rng rng(derive_seed(seed, 77));
              FeatureVector x(static_cast<size_t>(input_dim));
              for (auto& v : x) v = rng.uniform(-1.0, 1.0);
              const CheckReport rep = gradient_check(net, x, eps, 1e-4);
              return std::make_tuple(rep.max_rel_error, rep.passed);
          },
          py::arg("arch"), py::arg("input_dim") = 8, py::arg("hidden") = 16,
          py::arg("seed") = 1, py::arg("eps") = 1e-5);
}
