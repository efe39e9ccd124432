#include "gamici/scoring.hpp"

#include <algorithm>
#include <map>

#include "gamici/error.hpp"
#include "gamici/state.hpp"

namespace gamici {

int points_for(ChallengeType type, const GameConfig& config) noexcept
{
    return config.points_for(type);
}

int points_for(QuestType, const GameConfig& config) noexcept
{
    return config.quest_points;
}

namespace {

void fold(LeaderboardRow& row, const ScoreEvent& e)
{
    row.points += e.amount;
    if (e.source == ScoreSource::challenge) {
        ++row.challenges_solved;
    } else {
        ++row.quests_completed;
    }
    row.last_earned_at = std::max(row.last_earned_at.value_or(e.timestamp), e.timestamp);
}

bool ranks_before(const LeaderboardRow& a, const LeaderboardRow& b)
{
    if (a.points != b.points) {
        return a.points > b.points;
    }
    if (a.last_earned_at != b.last_earned_at) {
        if (!a.last_earned_at || !b.last_earned_at) {
            return a.last_earned_at.has_value();
        }
        return *a.last_earned_at < *b.last_earned_at;
    }
    return a.subject < b.subject;
}

}  // namespace

std::vector<LeaderboardRow> leaderboard(const ProjectState& state, LeaderboardScope scope)
{
    std::map<std::string, LeaderboardRow> rows;
    if (scope == LeaderboardScope::users) {
        for (const auto& [id, user] : state.users) {
            auto& row = rows[id];
            row.subject = id;
            row.display_name = user.display_name;
            row.avatar_id = user.avatar_id;
        }
        for (const auto& e : state.score_events) {
            if (auto it = rows.find(e.user_id); it != rows.end()) {
                fold(it->second, e);
            }
        }
        for (const auto& earned : state.earned) {
            if (auto it = rows.find(earned.user_id); it != rows.end()) {
                ++it->second.achievements_earned;
            }
        }
    } else {
        for (const auto& [id, team] : state.teams) {
            auto& row = rows[id];
            row.subject = id;
            row.display_name = team.display_name;
        }
        for (const auto& e : state.score_events) {
            if (!e.team_id) {
                continue;
            }
            if (auto it = rows.find(*e.team_id); it != rows.end()) {
                fold(it->second, e);
            }
        }
        for (const auto& earned : state.earned) {
            const UserProfile* u = state.find_user(earned.user_id);
            if (u != nullptr && u->team_id) {
                if (auto it = rows.find(*u->team_id); it != rows.end()) {
                    ++it->second.achievements_earned;
                }
            }
        }
    }

    std::vector<LeaderboardRow> out;
    for (auto& [id, row] : rows) {
        out.push_back(std::move(row));
    }
    std::sort(out.begin(), out.end(), ranks_before);
    return out;
}

void set_avatar(ProjectState& state, const std::string& user, int avatar_id)
{
    if (avatar_id < 1 || avatar_id > avatar_count) {
        throw Error(ErrorCode::avatar_out_of_range,
                    "avatar id must be between 1 and " + std::to_string(avatar_count));
    }
    UserProfile* u = state.find_user(user);
    if (u == nullptr) {
        throw Error(ErrorCode::unknown_user, "unknown user '" + user + "'");
    }
    u->avatar_id = avatar_id;
}

}  // namespace gamici
