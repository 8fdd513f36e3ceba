#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace also {

enum class Category {
    Cooperative,
    Competitive,
    Strategic,
    Rational,
    Reciprocation,
    Exploratory,
};

enum class Origin { Base, Paraphrase };

const char* to_string(Category c);
const char* to_string(Origin o);
Category category_from_string(const std::string& s);
Origin origin_from_string(const std::string& s);

// One selectable strategy arm: an instruction body plus metadata.
struct Strategy {
    std::string id;
    Category category = Category::Cooperative;
    std::string description;
    Origin origin = Origin::Base;
};

// Fixed identity text of an agent.
struct Persona {
    std::string text;
    std::string agent_id;
};

// Base persona with one strategy instruction appended.
struct AugmentedPersona {
    Persona base;
    std::string strategy_id;
    std::string text;
};

// Separator used between persona text and strategy instruction.
inline constexpr const char* kAugmentSeparator = "\n\n";

// Ordered, immutable set of strategy arms. Arm index = position in the
// source file; appending never reorders existing arms.
class StrategyPool {
public:
    StrategyPool() = default;
    explicit StrategyPool(std::vector<Strategy> strategies);

    size_t size() const { return strategies_.size(); }
    const Strategy& at(size_t k) const { return strategies_.at(k); }
    const std::vector<Strategy>& strategies() const { return strategies_; }
    bool contains(const std::string& id) const;

    // New pool with s appended at the end; throws DuplicateIdError.
    StrategyPool with_appended(Strategy s) const;

    // Content digest over ids, categories, descriptions and origins.
    uint64_t digest() const;

private:
    std::vector<Strategy> strategies_;
};

// Parses the JSON pool file (see README for the schema). Rejects the whole
// file on a missing/unreadable path, malformed record or duplicate id.
StrategyPool load_pool(const std::string& path);
StrategyPool parse_pool(const std::string& json_text, const std::string& origin_name);

// b0 + separator + strategy description. Pure and deterministic.
AugmentedPersona augment_persona(const Persona& base, const Strategy& s);

} // namespace also
