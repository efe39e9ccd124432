#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gamici/config.hpp"
#include "gamici/snapshot.hpp"

namespace gamici {

struct ProjectState;

enum class Metric {
    challenges_solved_total,
    challenges_solved_of_type,
    quests_completed,
    tests_total,
    project_line_coverage,
    project_branch_coverage,
    mutants_killed_total,
    smells_removed_total,
    builds_fixed_total,
};

std::string_view to_string(Metric m) noexcept;

enum class AchievementScope { user, project };

struct Condition {
    Metric metric = Metric::challenges_solved_total;
    /// Only for challenges_solved_of_type.
    std::optional<ChallengeType> challenge_type;
    double threshold = 1;

    bool operator==(const Condition&) const = default;
};

struct AchievementDef {
    std::string id;
    std::string title;
    std::string description;
    std::string icon_id;
    bool hidden = false;
    AchievementScope scope = AchievementScope::user;
    Condition condition;

    bool operator==(const AchievementDef&) const = default;
};

using Catalog = std::vector<AchievementDef>;

struct EarnedAchievement {
    std::string achievement_id;
    std::string user_id;
    std::int64_t earned_at = 0;
    std::int64_t build_number = 0;

    bool operator==(const EarnedAchievement&) const = default;
};

/// Cumulative per-user numbers that user-scope conditions read.
struct UserCounters {
    std::int64_t challenges_solved_total = 0;
    std::array<std::int64_t, 8> solved_by_type{};
    std::int64_t quests_completed = 0;
    std::int64_t tests_added_total = 0;
    std::int64_t mutants_killed_total = 0;
    std::int64_t smells_removed_total = 0;
    std::int64_t builds_fixed_total = 0;

    bool operator==(const UserCounters&) const = default;
};

/// Parses a catalog document: a JSON array of definitions. User-scope
/// conditions read user counters (tests_total meaning tests the user added);
/// project-scope conditions read project metrics (coverage, tests_total).
Catalog load_catalog(std::string_view text);
Json catalog_to_json(const Catalog& catalog);

/// data/achievements.json, embedded at build time.
std::string_view default_catalog_text() noexcept;

/// True when `value` satisfies the condition (comparator is always >=).
bool condition_met(const Condition& c, const UserCounters& counters, const ProjectMetrics& metrics,
                   AchievementScope scope) noexcept;

/// Checks every unearned definition. User-scope defs are checked for every
/// member; project-scope defs earn for all members at once. Earned records are
/// appended to `state` and returned. Calling again with unchanged inputs earns
/// nothing.
std::vector<EarnedAchievement> evaluate_achievements(ProjectState& state, const Catalog& catalog,
                                                     const ProjectMetrics& metrics,
                                                     std::int64_t build, std::int64_t timestamp);

struct VisibleAchievement {
    AchievementDef def;
    std::optional<EarnedAchievement> earned;
};

/// Every non-hidden def, plus hidden defs this user has earned.
std::vector<VisibleAchievement> visible_achievements(const ProjectState& state,
                                                     const Catalog& catalog,
                                                     const std::string& user);

}  // namespace gamici
