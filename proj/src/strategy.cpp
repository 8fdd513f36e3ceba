#include "also/strategy.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "also/errors.hpp"
#include "also/rng.hpp"

namespace also {

using nlohmann::json;

const char* to_string(Category c) {
    switch (c) {
        case Category::Cooperative: return "cooperative";
        case Category::Competitive: return "competitive";
        case Category::Strategic: return "strategic";
        case Category::Rational: return "rational";
        case Category::Reciprocation: return "reciprocation";
        case Category::Exploratory: return "exploratory";
    }
    return "?";
}

const char* to_string(Origin o) {
    return o == Origin::Base ? "base" : "paraphrase";
}

Category category_from_string(const std::string& s) {
    if (s == "cooperative") return Category::Cooperative;
    if (s == "competitive") return Category::Competitive;
    if (s == "strategic") return Category::Strategic;
    if (s == "rational") return Category::Rational;
    if (s == "reciprocation") return Category::Reciprocation;
    if (s == "exploratory") return Category::Exploratory;
    throw ConfigError("unknown strategy category: '" + s + "'");
}

Origin origin_from_string(const std::string& s) {
    if (s == "base") return Origin::Base;
    if (s == "paraphrase") return Origin::Paraphrase;
    throw ConfigError("unknown strategy origin: '" + s + "'");
}

StrategyPool::StrategyPool(std::vector<Strategy> strategies)
    : strategies_(std::move(strategies)) {
    std::unordered_set<std::string> seen;
    for (const auto& s : strategies_) {
        if (s.id.empty()) throw ConfigError("strategy with empty id");
        if (s.description.empty())
            throw ConfigError("strategy '" + s.id + "' has empty description");
        if (!seen.insert(s.id).second)
            throw DuplicateIdError("duplicate strategy id: '" + s.id + "'");
    }
}

bool StrategyPool::contains(const std::string& id) const {
    for (const auto& s : strategies_)
        if (s.id == id) return true;
    return false;
}

StrategyPool StrategyPool::with_appended(Strategy s) const {
    if (contains(s.id))
        throw DuplicateIdError("duplicate strategy id: '" + s.id + "'");
    std::vector<Strategy> next = strategies_;
    next.push_back(std::move(s));
    return StrategyPool(std::move(next));
}

uint64_t StrategyPool::digest() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& s : strategies_) {
        h = fnv1a(s.id, h);
        h = fnv1a("\x1f", 1, h);
        h = fnv1a(to_string(s.category), h);
        h = fnv1a("\x1f", 1, h);
        h = fnv1a(s.description, h);
        h = fnv1a("\x1f", 1, h);
        h = fnv1a(to_string(s.origin), h);
        h = fnv1a("\x1e", 1, h);
    }
    return h;
}

StrategyPool parse_pool(const std::string& json_text, const std::string& origin_name) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("pool file '" + origin_name + "' is not valid JSON: " + e.what());
    }
    if (!doc.is_object() || !doc.contains("strategies") || !doc["strategies"].is_array())
        throw ConfigError("pool file '" + origin_name + "' must be an object with a 'strategies' array");

    std::vector<Strategy> out;
    for (const auto& rec : doc["strategies"]) {
        if (!rec.is_object() || !rec.contains("id") || !rec.contains("category") ||
            !rec.contains("description"))
            throw ConfigError("pool file '" + origin_name +
                              "': each record needs id, category, description");
        Strategy s;
        s.id = rec["id"].get<std::string>();
        s.category = category_from_string(rec["category"].get<std::string>());
        s.description = rec["description"].get<std::string>();
        s.origin = origin_from_string(rec.value("origin", std::string("base")));
        out.push_back(std::move(s));
    }
    if (out.empty())
        throw ConfigError("pool file '" + origin_name + "' contains no strategies");
    return StrategyPool(std::move(out));
}

StrategyPool load_pool(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open pool file: '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_pool(buf.str(), path);
}

AugmentedPersona augment_persona(const Persona& base, const Strategy& s) {
    if (base.text.empty()) throw ConfigError("persona text must be non-empty");
    AugmentedPersona out;
    out.base = base;
    out.strategy_id = s.id;
    out.text = base.text + kAugmentSeparator + s.description;
    return out;
}

} // namespace also
