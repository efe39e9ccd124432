#include "gamici/config.hpp"

#include "gamici/error.hpp"

namespace gamici {

namespace {

constexpr std::string_view challenge_type_names[] = {
    "Build", "Test", "ClassCoverage", "MethodCoverage", "LineCoverage", "BranchCoverage",
    "Mutation", "Smell",
};

[[noreturn]] void bad(const std::string& what)
{
    throw Error(ErrorCode::bad_request, "config: " + what);
}

int positive(const Json& doc, const char* key, int fallback, int minimum)
{
    auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) {
        return fallback;
    }
    if (!it->is_number_integer() || it->get<std::int64_t>() < minimum ||
        it->get<std::int64_t>() > 1'000'000) {
        bad(std::string(key) + " must be an integer >= " + std::to_string(minimum));
    }
    return it->get<int>();
}

}  // namespace

std::string_view to_string(ChallengeType t) noexcept
{
    return challenge_type_names[static_cast<std::size_t>(t)];
}

std::optional<ChallengeType> challenge_type_from_string(std::string_view name) noexcept
{
    for (std::size_t i = 0; i < std::size(challenge_type_names); ++i) {
        if (challenge_type_names[i] == name) {
            return static_cast<ChallengeType>(i);
        }
    }
    return std::nullopt;
}

GameConfig config_from_json(const Json& doc, GameConfig base)
{
    if (!doc.is_object()) {
        bad("document must be an object");
    }
    GameConfig c = base;
    c.max_active_challenges = positive(doc, "max_active_challenges", c.max_active_challenges, 1);
    c.max_stored_challenges = positive(doc, "max_stored_challenges", c.max_stored_challenges, 0);
    c.quest_target_default = positive(doc, "quest_target_default", c.quest_target_default, 1);
    c.quest_points = positive(doc, "quest_points", c.quest_points, 1);

    if (auto it = doc.find("attribution"); it != doc.end() && !it->is_null()) {
        if (*it == "strict") {
            c.attribution = Attribution::strict;
        } else if (*it == "lenient") {
            c.attribution = Attribution::lenient;
        } else {
            bad("attribution must be 'strict' or 'lenient'");
        }
    }
    if (auto it = doc.find("rng_seed"); it != doc.end()) {
        if (it->is_null()) {
            c.rng_seed.reset();
        } else if (it->is_number_integer()) {
            c.rng_seed = it->get<std::int64_t>();
        } else {
            bad("rng_seed must be an integer or null");
        }
    }
    if (auto it = doc.find("points"); it != doc.end()) {
        if (!it->is_object()) {
            bad("points must be an object");
        }
        for (const auto& [name, value] : it->items()) {
            auto type = challenge_type_from_string(name);
            if (!type) {
                bad("unknown challenge type '" + name + "' in points");
            }
            if (!value.is_number_integer() || value.get<std::int64_t>() < 1) {
                bad("points for " + name + " must be a positive integer");
            }
            c.points[static_cast<std::size_t>(*type)] = value.get<int>();
        }
    }
    return c;
}

Json config_to_json(const GameConfig& c)
{
    Json points = Json::object();
    for (auto t : all_challenge_types) {
        points[std::string(to_string(t))] = c.points_for(t);
    }
    Json doc = Json::object();
    doc["max_active_challenges"] = c.max_active_challenges;
    doc["max_stored_challenges"] = c.max_stored_challenges;
    doc["attribution"] = c.attribution == Attribution::strict ? "strict" : "lenient";
    doc["rng_seed"] = c.rng_seed ? Json(*c.rng_seed) : Json(nullptr);
    doc["points"] = std::move(points);
    doc["quest_target_default"] = c.quest_target_default;
    doc["quest_points"] = c.quest_points;
    return doc;
}

}  // namespace gamici
