#include <cmath>

#include <httplib.h>
#include <json.hpp>

#include "also/environment.hpp"
#include "also/errors.hpp"

namespace also {

using nlohmann::json;

namespace {

// Client side of the remote-environment wire protocol (see README).
// Request:  {"version":1,"type":"step","episode_id":...,"turn":...,
//            "agent_arm":k|null,"augmented_persona_text":...}
// Response: {"raw_dims":[7 reals],"opponent_utterance":...,"done":bool}
class RemoteEnvironment final : public Environment {
public:
    explicit RemoteEnvironment(const EnvConfig& cfg) : cfg_(cfg) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(cfg.seed));
        episode_id_ = buf;
        const auto slash = cfg.endpoint.find('/', cfg.endpoint.find("//") + 2);
        if (cfg.endpoint.rfind("http", 0) != 0)
            throw ConfigError("remote environment endpoint must be an http(s) URL");
        host_ = slash == std::string::npos ? cfg.endpoint : cfg.endpoint.substr(0, slash);
        path_ = slash == std::string::npos ? "/" : cfg.endpoint.substr(slash);
    }

    TurnRecord step(std::optional<int> agent_arm, std::optional<int> opponent_arm,
                    const std::string& persona_text) override {
        if (done())
            throw EpisodeExhaustedError("episode exhausted after " +
                                        std::to_string(cfg_.turns_per_episode) + " turns");
        if (agent_arm && (*agent_arm < 0 || *agent_arm >= cfg_.num_arms))
            throw RangeError("arm index out of range");

        json req;
        req["version"] = 1;
        req["type"] = "step";
        req["episode_id"] = episode_id_;
        req["turn"] = turn_ + 1;
        if (agent_arm)
            req["agent_arm"] = *agent_arm;
        else
            req["agent_arm"] = nullptr;
        req["augmented_persona_text"] = persona_text;
        const json res = post(req.dump());

        if (!res.contains("raw_dims") || !res["raw_dims"].is_array() ||
            res["raw_dims"].size() != 7)
            throw TransportError("remote step response must carry a 7-element raw_dims array");
        TurnRecord rec;
        rec.turn = turn_ + 1;
        rec.agent_arm = agent_arm;
        rec.opponent_arm = opponent_arm;
        rec.agent_utterance = agent_arm ? "arm" + std::to_string(*agent_arm) : "base";
        rec.opponent_utterance = res.value("opponent_utterance", std::string());
        for (size_t d = 0; d < 7; ++d) rec.raw_dims[d] = res["raw_dims"][d].get<double>();
        rec.reward = normalize_reward(rec.raw_dims);   // re-validates ranges
        if (res.value("done", false)) remote_done_ = true;
        ++turn_;
        return rec;
    }

    int num_arms() const override { return cfg_.num_arms; }
    int turns_per_episode() const override {
        return remote_done_ ? turn_ : cfg_.turns_per_episode;
    }
    int turn() const override { return turn_; }
    const std::vector<double>& last_arm_rewards() const override { return empty_; }
    const std::vector<double>& last_opponent_arm_rewards() const override { return empty_; }
    std::vector<double> expected_rewards() const override { return {}; }

private:
    json post(const std::string& body) {
        std::string last_error = "no attempt made";
        for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
            httplib::Client client(host_);
            client.set_connection_timeout(0, cfg_.timeout_ms * 1000);
            client.set_read_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);
            auto res = client.Post(path_, body, "application/json");
            if (!res) {
                last_error = "transport failure: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status != 200) {
                last_error = "HTTP status " + std::to_string(res->status);
                continue;
            }
            try {
                return json::parse(res->body);
            } catch (const json::parse_error& e) {
                throw TransportError(std::string("remote step response is not valid JSON: ") +
                                     e.what());
            }
        }
        throw TransportError("remote environment step failed after " +
                             std::to_string(cfg_.retries + 1) + " attempts: " + last_error);
    }

    EnvConfig cfg_;
    std::string episode_id_, host_, path_;
    int turn_ = 0;
    bool remote_done_ = false;
    std::vector<double> empty_;
};

} // namespace

std::unique_ptr<Environment> create_remote_environment(const EnvConfig& config) {
    return std::make_unique<RemoteEnvironment>(config);
}

} // namespace also
