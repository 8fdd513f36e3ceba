#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "also/environment.hpp"
#include "also/strategy.hpp"

namespace also {

using FeatureVector = std::vector<double>;

enum class ProviderKind { Synthetic, Remote };

// Frozen text embedding g(.). The synthetic provider is a deterministic
// hashing featurizer: positional token hashing into a bag of features,
// projected through a seeded pseudo-random sign sequence per token, then
// L2-normalized. The remote provider speaks the HTTP protocol described in
// the README and validates dimension and finiteness of every response.
struct EmbeddingProvider {
    ProviderKind kind = ProviderKind::Synthetic;
    int dim = 64;
    uint64_t seed = 0;            // synthetic
    std::string endpoint;         // remote, e.g. http://host:port/embed
    std::string model;            // remote, optional model tag
    int timeout_ms = 5000;
    int retries = 2;
};

// Embeds one text. Empty text yields the zero vector. Synthetic output is a
// pure function of (seed, text); remote failures raise TransportError.
FeatureVector embed_text(const EmbeddingProvider& provider, const std::string& text);

// Precomputed per-arm embeddings b_k = g(b0 (+) sigma_k), immutable after
// construction. pool_hash binds the table to (provider, persona, pool).
struct ArmEmbeddingTable {
    std::vector<FeatureVector> embeddings;
    int dim = 0;
    uint64_t pool_hash = 0;
};

ArmEmbeddingTable precompute_arm_embeddings(const EmbeddingProvider& provider,
                                            const Persona& base,
                                            const StrategyPool& pool);

// Canonical textual rendering of a dialogue history: per turn one
// "agent: ..." line and one "opponent: ..." line, newline-joined.
// window > 0 keeps only the most recent `window` turns.
std::string serialize_history(std::span<const TurnRecord> history, int window = 0);

// c = g(serialized history). Empty history yields the zero vector.
FeatureVector encode_context(const EmbeddingProvider& provider,
                             std::span<const TurnRecord> history,
                             int window = 0);

// x_k = [b_k; c] for every arm, in arm order.
std::vector<FeatureVector> build_features(const ArmEmbeddingTable& table,
                                          const FeatureVector& context);

} // namespace also
