#pragma once

// Everything the server keeps about one project, and its document form.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gamici/achievement.hpp"
#include "gamici/challenge.hpp"
#include "gamici/config.hpp"
#include "gamici/json.hpp"
#include "gamici/quest.hpp"
#include "gamici/scoring.hpp"
#include "gamici/snapshot.hpp"

namespace gamici {

/// Player interactions since the last build cycle; consumed by the quest
/// update of the next cycle.
struct PendingActions {
    int rejected = 0;
    int sent = 0;
    int received = 0;

    bool operator==(const PendingActions&) const = default;
};

struct UserProfile {
    std::string id;
    std::string display_name;
    std::string email;
    std::optional<int> avatar_id;
    std::optional<std::string> team_id;
    std::string password_salt;
    std::string password_digest;
    /// SHA-256 of every live session token.
    std::vector<std::string> token_digests;
    UserCounters counters;
    PendingActions pending;

    bool operator==(const UserProfile&) const = default;
};

struct Team {
    std::string id;
    std::string display_name;

    bool operator==(const Team&) const = default;
};

enum class NotificationKind {
    build_finished,
    challenge_solved,
    challenge_generated,
    challenge_received,
    quest_completed,
    quest_generated,
    achievement_earned,
};

enum class DashboardPage { challenges, quests, achievements, leaderboard };

std::string_view to_string(NotificationKind k) noexcept;
std::string_view to_string(DashboardPage p) noexcept;

struct Notification {
    std::int64_t id = 0;
    std::string user_id;
    NotificationKind kind = NotificationKind::build_finished;
    std::string message;
    DashboardPage page = DashboardPage::challenges;
    std::optional<std::string> entity_id;
    std::int64_t created_at = 0;

    bool operator==(const Notification&) const = default;
};

struct ProjectState {
    std::string project_id;
    GameConfig config;
    std::string ingest_token_digest;
    std::map<std::string, UserProfile> users;
    std::map<std::string, Team> teams;
    std::vector<Challenge> challenges;
    std::vector<Quest> quests;
    std::vector<EarnedAchievement> earned;
    std::vector<ScoreEvent> score_events;
    std::vector<Notification> notifications;
    /// Build number of the last processed snapshot; its archived copy is the
    /// "previous" snapshot of the next cycle.
    std::optional<std::int64_t> last_build;
    ProjectMetrics metrics;
    std::int64_t next_challenge_id = 1;
    std::int64_t next_quest_id = 1;
    std::int64_t next_notification_id = 1;

    UserProfile* find_user(const std::string& id);
    const UserProfile* find_user(const std::string& id) const;
    const UserProfile* user_by_email(const std::string& email) const;
    Challenge* find_challenge(const std::string& id);
    const Challenge* find_challenge(const std::string& id) const;
    const Quest* active_quest(const std::string& user) const;

    int count_challenges(const std::string& user, ChallengeState s) const;

    Notification& notify(const std::string& user, NotificationKind kind, std::string message,
                         DashboardPage page, std::optional<std::string> entity,
                         std::int64_t created_at);

    bool operator==(const ProjectState&) const = default;
};

Json state_to_json(const ProjectState& state);
/// Throws Error{corrupt_state} on any schema or referential-integrity problem.
ProjectState state_from_json(const Json& doc);

Json challenge_to_json(const Challenge& c);
Json quest_to_json(const Quest& q);
Json notification_to_json(const Notification& n);
Json score_event_to_json(const ScoreEvent& e);

/// The state document without credentials (password salts and digests,
/// session and ingest token digests); used for goldens and inspection.
Json credential_free_json(const ProjectState& state);

/// Every assignee, event owner and team reference must resolve.
void check_integrity(const ProjectState& state);

}  // namespace gamici
