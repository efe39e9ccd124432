#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gamici/config.hpp"
#include "gamici/quest.hpp"

namespace gamici {

struct ProjectState;

enum class ScoreSource { challenge, quest };

/// Append-only record of awarded points.
struct ScoreEvent {
    std::int64_t seq = 0;
    std::string user_id;
    std::optional<std::string> team_id;
    int amount = 0;
    ScoreSource source = ScoreSource::challenge;
    std::string source_id;
    /// ChallengeType or QuestType name.
    std::string source_type;
    std::int64_t build_number = 0;
    std::int64_t timestamp = 0;

    bool operator==(const ScoreEvent&) const = default;
};

int points_for(ChallengeType type, const GameConfig& config) noexcept;
int points_for(QuestType type, const GameConfig& config) noexcept;

enum class LeaderboardScope { users, teams };

struct LeaderboardRow {
    std::string subject;
    std::string display_name;
    std::int64_t points = 0;
    std::int64_t challenges_solved = 0;
    std::int64_t quests_completed = 0;
    std::int64_t achievements_earned = 0;
    std::optional<int> avatar_id;
    std::optional<std::int64_t> last_earned_at;

    bool operator==(const LeaderboardRow&) const = default;
};

/// Points descending; ties go to the subject that reached its total first,
/// then to the lexicographically smaller id. Subjects without points sort
/// after every subject that has some.
std::vector<LeaderboardRow> leaderboard(const ProjectState& state, LeaderboardScope scope);

inline constexpr int avatar_count = 50;

/// Throws Error{avatar_out_of_range} or Error{unknown_user}.
void set_avatar(ProjectState& state, const std::string& user, int avatar_id);

}  // namespace gamici
