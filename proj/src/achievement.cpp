#include "gamici/achievement.hpp"

#include <algorithm>
#include <set>

#include "gamici/digest.hpp"
#include "gamici/error.hpp"
#include "gamici/state.hpp"

namespace gamici {

namespace {

constexpr std::pair<std::string_view, Metric> metric_names[] = {
    {"challenges_solved_total", Metric::challenges_solved_total},
    {"challenges_solved_of_type", Metric::challenges_solved_of_type},
    {"quests_completed", Metric::quests_completed},
    {"tests_total", Metric::tests_total},
    {"project_line_coverage", Metric::project_line_coverage},
    {"project_branch_coverage", Metric::project_branch_coverage},
    {"mutants_killed_total", Metric::mutants_killed_total},
    {"smells_removed_total", Metric::smells_removed_total},
    {"builds_fixed_total", Metric::builds_fixed_total},
};

bool is_coverage(Metric m)
{
    return m == Metric::project_line_coverage || m == Metric::project_branch_coverage;
}

bool allowed_in(Metric m, AchievementScope scope)
{
    if (m == Metric::tests_total) {
        return true;
    }
    return (scope == AchievementScope::project) == is_coverage(m);
}

[[noreturn]] void malformed(const std::string& id, const std::string& why)
{
    throw Error(ErrorCode::malformed_condition, "achievement '" + id + "': " + why);
}

std::string required_string(const Json& obj, const char* key, const std::string& id)
{
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw Error(ErrorCode::syntax_error,
                    "achievement '" + id + "': field '" + key + "' must be a string");
    }
    return it->get<std::string>();
}

}  // namespace

std::string_view to_string(Metric m) noexcept
{
    for (const auto& [name, value] : metric_names) {
        if (value == m) {
            return name;
        }
    }
    return "challenges_solved_total";
}

Catalog load_catalog(std::string_view text)
{
    if (trim(text).empty()) {
        return {};
    }
    Json doc;
    try {
        doc = Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::syntax_error,
                    "catalog syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    if (!doc.is_array()) {
        throw Error(ErrorCode::syntax_error, "catalog must be an array of definitions");
    }

    Catalog catalog;
    std::set<std::string> ids;
    for (const auto& entry : doc) {
        if (!entry.is_object()) {
            throw Error(ErrorCode::syntax_error, "catalog entries must be objects");
        }
        AchievementDef def;
        def.id = required_string(entry, "id", "?");
        if (def.id.empty()) {
            throw Error(ErrorCode::syntax_error, "achievement id must be non-empty");
        }
        if (!ids.insert(def.id).second) {
            throw Error(ErrorCode::duplicate_achievement_id, "duplicate achievement id '" + def.id + "'");
        }
        def.title = required_string(entry, "title", def.id);
        def.description = required_string(entry, "description", def.id);
        def.icon_id = required_string(entry, "icon_id", def.id);
        if (!entry.contains("hidden") || !entry["hidden"].is_boolean()) {
            throw Error(ErrorCode::syntax_error, "achievement '" + def.id + "': 'hidden' must be a boolean");
        }
        def.hidden = entry["hidden"].get<bool>();
        std::string scope = required_string(entry, "scope", def.id);
        if (scope == "user") {
            def.scope = AchievementScope::user;
        } else if (scope == "project") {
            def.scope = AchievementScope::project;
        } else {
            throw Error(ErrorCode::syntax_error,
                        "achievement '" + def.id + "': scope must be 'user' or 'project'");
        }

        if (!entry.contains("condition") || !entry["condition"].is_object()) {
            malformed(def.id, "missing condition object");
        }
        const Json& cond = entry["condition"];
        std::string metric = cond.value("metric", "");
        auto found = std::find_if(std::begin(metric_names), std::end(metric_names),
                                  [&](const auto& p) { return p.first == metric; });
        if (found == std::end(metric_names)) {
            malformed(def.id, "unknown metric '" + metric + "'");
        }
        def.condition.metric = found->second;
        if (cond.value("comparator", "") != ">=") {
            malformed(def.id, "only the '>=' comparator is supported");
        }
        if (!cond.contains("threshold") || !cond["threshold"].is_number()) {
            malformed(def.id, "threshold must be a number");
        }
        def.condition.threshold = cond["threshold"].get<double>();
        if (!(def.condition.threshold > 0)) {
            malformed(def.id, "threshold must be positive");
        }
        if (is_coverage(def.condition.metric) && def.condition.threshold > 1.0) {
            malformed(def.id, "coverage thresholds are fractions <= 1.0");
        }
        if (def.condition.metric == Metric::challenges_solved_of_type) {
            auto type = challenge_type_from_string(cond.value("challenge_type", ""));
            if (!type) {
                malformed(def.id, "challenges_solved_of_type needs a valid challenge_type");
            }
            def.condition.challenge_type = type;
        }
        if (!allowed_in(def.condition.metric, def.scope)) {
            malformed(def.id, "metric '" + metric + "' is not available for " + scope + " scope");
        }
        catalog.push_back(std::move(def));
    }
    return catalog;
}

Json catalog_to_json(const Catalog& catalog)
{
    Json doc = Json::array();
    for (const auto& d : catalog) {
        Json cond = {{"metric", to_string(d.condition.metric)}};
        if (d.condition.challenge_type) {
            cond["challenge_type"] = to_string(*d.condition.challenge_type);
        }
        cond["comparator"] = ">=";
        cond["threshold"] = d.condition.threshold;
        doc.push_back({{"id", d.id},
                       {"title", d.title},
                       {"description", d.description},
                       {"icon_id", d.icon_id},
                       {"hidden", d.hidden},
                       {"scope", d.scope == AchievementScope::user ? "user" : "project"},
                       {"condition", std::move(cond)}});
    }
    return doc;
}

bool condition_met(const Condition& c, const UserCounters& u, const ProjectMetrics& p,
                   AchievementScope scope) noexcept
{
    double value = 0;
    switch (c.metric) {
    case Metric::challenges_solved_total: value = static_cast<double>(u.challenges_solved_total); break;
    case Metric::challenges_solved_of_type:
        value = static_cast<double>(
            u.solved_by_type[static_cast<std::size_t>(c.challenge_type.value_or(ChallengeType::Test))]);
        break;
    case Metric::quests_completed: value = static_cast<double>(u.quests_completed); break;
    case Metric::tests_total:
        value = static_cast<double>(scope == AchievementScope::project ? p.tests_total : u.tests_added_total);
        break;
    case Metric::project_line_coverage: value = p.line_coverage; break;
    case Metric::project_branch_coverage: value = p.branch_coverage; break;
    case Metric::mutants_killed_total: value = static_cast<double>(u.mutants_killed_total); break;
    case Metric::smells_removed_total: value = static_cast<double>(u.smells_removed_total); break;
    case Metric::builds_fixed_total: value = static_cast<double>(u.builds_fixed_total); break;
    }
    return value >= c.threshold;
}

std::vector<EarnedAchievement> evaluate_achievements(ProjectState& state, const Catalog& catalog,
                                                     const ProjectMetrics& metrics,
                                                     std::int64_t build, std::int64_t timestamp)
{
    auto has = [&](const std::string& def, const std::string* user) {
        return std::any_of(state.earned.begin(), state.earned.end(), [&](const EarnedAchievement& e) {
            return e.achievement_id == def && (user == nullptr || e.user_id == *user);
        });
    };

    std::vector<EarnedAchievement> fresh;
    for (const auto& def : catalog) {
        std::vector<EarnedAchievement> now;
        if (def.scope == AchievementScope::project) {
            // Project-wide earns happen once; later members do not catch up.
            if (has(def.id, nullptr) || !condition_met(def.condition, {}, metrics, def.scope)) {
                continue;
            }
            for (const auto& [id, user] : state.users) {
                now.push_back({def.id, id, timestamp, build});
            }
        } else {
            for (const auto& [id, user] : state.users) {
                if (!has(def.id, &id) && condition_met(def.condition, user.counters, metrics, def.scope)) {
                    now.push_back({def.id, id, timestamp, build});
                }
            }
        }
        state.earned.insert(state.earned.end(), now.begin(), now.end());
        fresh.insert(fresh.end(), now.begin(), now.end());
    }
    return fresh;
}

std::vector<VisibleAchievement> visible_achievements(const ProjectState& state,
                                                     const Catalog& catalog, const std::string& user)
{
    std::vector<VisibleAchievement> out;
    for (const auto& def : catalog) {
        std::optional<EarnedAchievement> earned;
        for (const auto& e : state.earned) {
            if (e.achievement_id == def.id && e.user_id == user) {
                earned = e;
                break;
            }
        }
        if (def.hidden && !earned) {
            continue;
        }
        out.push_back({def, earned});
    }
    return out;
}

}  // namespace gamici
