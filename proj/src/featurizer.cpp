#include "also/featurizer.hpp"

#include <cctype>
#include <cmath>
#include <regex>

#include <httplib.h>
#include <json.hpp>

#include "also/errors.hpp"

namespace also {

using nlohmann::json;

namespace {

void accumulate_token(std::vector<double>& acc, uint64_t token_hash, uint64_t seed) {
    // One xorshift-style state walk per output index; cheap and stable.
    uint64_t state = mix64(token_hash ^ mix64(seed));
    for (double& slot : acc) {
        state = mix64(state);
        slot += (state & 1u) ? 1.0 : -1.0;
    }
}

FeatureVector synthetic_embed(const EmbeddingProvider& p, const std::string& text) {
    FeatureVector acc(static_cast<size_t>(p.dim), 0.0);
    size_t line = 0;
    size_t i = 0;
    const size_t n = text.size();
    bool any_token = false;
    while (i < n) {
        if (text[i] == '\n') {
            ++line;
            ++i;
            continue;
        }
        if (!std::isalnum(static_cast<unsigned char>(text[i])) && text[i] != '_') {
            ++i;
            continue;
        }
        size_t start = i;
        while (i < n && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_'))
            ++i;
        // Positional hashing: the line index salts the token so that
        // permuting turn order changes the context vector.
        uint64_t h = fnv1a(text.data() + start, i - start);
        accumulate_token(acc, mix64(h ^ mix64(line + 0x51ed2701ULL)), p.seed);
        any_token = true;
    }
    if (!any_token) return acc;   // zero vector for empty/blank text
    double norm2 = 0.0;
    for (double v : acc) norm2 += v * v;
    if (norm2 > 0.0) {
        double inv = 1.0 / std::sqrt(norm2);
        for (double& v : acc) v *= inv;
    }
    return acc;
}

struct ParsedUrl {
    std::string scheme_host_port;
    std::string path;
};

ParsedUrl split_endpoint(const std::string& endpoint) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(endpoint, m, re))
        throw ConfigError("remote embedding endpoint must look like http://host:port/path, got '" +
                          endpoint + "'");
    ParsedUrl out;
    out.scheme_host_port = m[1];
    out.path = m[2].matched ? m[2].str() : "/";
    return out;
}

FeatureVector remote_embed(const EmbeddingProvider& p, const std::string& text) {
    if (p.endpoint.empty()) throw ConfigError("remote embedding provider requires an endpoint");
    ParsedUrl url = split_endpoint(p.endpoint);

    json req;
    if (!p.model.empty()) req["model"] = p.model;
    req["input"] = json::array({text});
    const std::string body = req.dump();

    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= p.retries; ++attempt) {
        httplib::Client client(url.scheme_host_port);
        client.set_connection_timeout(0, p.timeout_ms * 1000);
        client.set_read_timeout(p.timeout_ms / 1000, (p.timeout_ms % 1000) * 1000);
        auto res = client.Post(url.path, body, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP status " + std::to_string(res->status);
            continue;
        }
        json doc;
        try {
            doc = json::parse(res->body);
        } catch (const json::parse_error& e) {
            throw TransportError(std::string("embedding response is not valid JSON: ") + e.what());
        }
        if (!doc.contains("vectors") || !doc["vectors"].is_array() || doc["vectors"].size() != 1)
            throw TransportError("embedding response must carry a 1-element 'vectors' array");
        const auto& vec = doc["vectors"][0];
        if (!vec.is_array() || static_cast<int>(vec.size()) != p.dim)
            throw TransportError("embedding dimension mismatch: expected " +
                                 std::to_string(p.dim) + ", got " + std::to_string(vec.size()));
        FeatureVector out;
        out.reserve(vec.size());
        for (const auto& v : vec) {
            double x = v.get<double>();
            if (!std::isfinite(x))
                throw TransportError("embedding response contains a non-finite value");
            out.push_back(x);
        }
        return out;
    }
    throw TransportError("remote embedding failed after " + std::to_string(p.retries + 1) +
                         " attempts: " + last_error);
}

} // namespace

FeatureVector embed_text(const EmbeddingProvider& provider, const std::string& text) {
    if (provider.dim < 1) throw ConfigError("embedding dim must be >= 1");
    if (provider.kind == ProviderKind::Synthetic) return synthetic_embed(provider, text);
    return remote_embed(provider, text);
}

ArmEmbeddingTable precompute_arm_embeddings(const EmbeddingProvider& provider,
                                            const Persona& base,
                                            const StrategyPool& pool) {
    if (pool.size() == 0) throw ConfigError("cannot embed an empty strategy pool");
    ArmEmbeddingTable table;
    table.dim = provider.dim;
    table.embeddings.reserve(pool.size());
    for (size_t k = 0; k < pool.size(); ++k) {
        try {
            table.embeddings.push_back(
                embed_text(provider, augment_persona(base, pool.at(k)).text));
        } catch (const Error& e) {
            throw TransportError("embedding arm " + std::to_string(k) + " ('" +
                                 pool.at(k).id + "'): " + e.what());
        }
    }
    uint64_t h = pool.digest();
    h = fnv1a(base.text, h);
    h = fnv1a(&provider.dim, sizeof(provider.dim), h);
    h = fnv1a(&provider.seed, sizeof(provider.seed), h);
    table.pool_hash = h;
    return table;
}

std::string serialize_history(std::span<const TurnRecord> history, int window) {
    size_t first = 0;
    if (window > 0 && history.size() > static_cast<size_t>(window))
        first = history.size() - static_cast<size_t>(window);
    std::string out;
    for (size_t i = first; i < history.size(); ++i) {
        if (!out.empty()) out += '\n';
        out += "agent: " + history[i].agent_utterance;
        out += '\n';
        out += "opponent: " + history[i].opponent_utterance;
    }
    return out;
}

FeatureVector encode_context(const EmbeddingProvider& provider,
                             std::span<const TurnRecord> history,
                             int window) {
    if (history.empty()) return FeatureVector(static_cast<size_t>(provider.dim), 0.0);
    return embed_text(provider, serialize_history(history, window));
}

std::vector<FeatureVector> build_features(const ArmEmbeddingTable& table,
                                          const FeatureVector& context) {
    std::vector<FeatureVector> out;
    out.reserve(table.embeddings.size());
    for (const auto& b : table.embeddings) {
        if (static_cast<int>(b.size()) != table.dim)
            throw DimensionMismatchError("arm embedding length does not match table dim");
        FeatureVector x;
        x.reserve(b.size() + context.size());
        x.insert(x.end(), b.begin(), b.end());
        x.insert(x.end(), context.begin(), context.end());
        out.push_back(std::move(x));
    }
    return out;
}

} // namespace also
