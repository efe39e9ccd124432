#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gamici/config.hpp"
#include "gamici/rng.hpp"
#include "gamici/snapshot.hpp"

namespace gamici {

struct ProjectState;

enum class QuestType {
    AddTests,
    CoverBranches,
    CoverLines,
    ReceiveChallenges,
    SendChallenges,
    SolveAchievements,
    SolveChallenges,
    SolveChallengesWithoutRejection,
};

inline constexpr std::array<QuestType, 8> all_quest_types = {
    QuestType::AddTests,          QuestType::CoverBranches,     QuestType::CoverLines,
    QuestType::ReceiveChallenges, QuestType::SendChallenges,    QuestType::SolveAchievements,
    QuestType::SolveChallenges,   QuestType::SolveChallengesWithoutRejection,
};

std::string_view to_string(QuestType t) noexcept;
std::optional<QuestType> quest_type_from_string(std::string_view name) noexcept;

enum class QuestState { active, completed };

struct Quest {
    std::string id;
    QuestType type = QuestType::AddTests;
    std::string assignee;
    int target = 1;
    int progress = 0;
    QuestState state = QuestState::active;
    std::optional<ChallengeType> challenge_type_filter;
    std::int64_t created_build = 0;
    int points = 1;
    std::optional<std::int64_t> completed_build;
    /// Cycles in which a rejection wiped non-zero progress.
    int resets = 0;

    std::string description() const;
    bool operator==(const Quest&) const = default;
};

/// What happened to one user during a build cycle.
struct CycleEvents {
    std::vector<ChallengeType> challenges_solved;
    int challenges_rejected = 0;
    int challenges_sent = 0;
    int challenges_received = 0;
    int achievements_earned = 0;
    SnapshotDelta delta;
};

/// Throws Error{quest_already_active}.
Quest generate_quest(ProjectState& state, const std::string& user, Rng& rng, std::int64_t build);

/// Advances every active quest of the users in `events`; returns the quests
/// completed in this cycle.
std::vector<Quest> apply_cycle_to_quests(ProjectState& state,
                                         const std::map<std::string, CycleEvents>& events,
                                         std::int64_t build);

double quest_progress_fraction(const Quest& quest) noexcept;

}  // namespace gamici
