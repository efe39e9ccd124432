#include "gamici/quest.hpp"

#include <algorithm>

#include "gamici/error.hpp"
#include "gamici/state.hpp"

namespace gamici {

namespace {

constexpr std::string_view quest_type_names[] = {
    "AddTests",       "CoverBranches",     "CoverLines",      "ReceiveChallenges",
    "SendChallenges", "SolveAchievements", "SolveChallenges", "SolveChallengesWithoutRejection",
};

bool single_step(QuestType t)
{
    return t == QuestType::ReceiveChallenges || t == QuestType::SendChallenges ||
           t == QuestType::SolveAchievements;
}

std::string plural(int n, const std::string& noun)
{
    return std::to_string(n) + " " + noun + (n == 1 ? "" : "s");
}

}  // namespace

std::string_view to_string(QuestType t) noexcept
{
    return quest_type_names[static_cast<std::size_t>(t)];
}

std::optional<QuestType> quest_type_from_string(std::string_view name) noexcept
{
    for (std::size_t i = 0; i < std::size(quest_type_names); ++i) {
        if (quest_type_names[i] == name) {
            return static_cast<QuestType>(i);
        }
    }
    return std::nullopt;
}

std::string Quest::description() const
{
    switch (type) {
    case QuestType::AddTests: return "Add " + plural(target, "new test") + ".";
    case QuestType::CoverBranches: return "Cover " + plural(target, "additional branch") + ".";
    case QuestType::CoverLines: return "Cover " + plural(target, "additional line") + ".";
    case QuestType::ReceiveChallenges: return "Receive a challenge from another developer.";
    case QuestType::SendChallenges: return "Send a challenge to another developer.";
    case QuestType::SolveAchievements: return "Earn a new achievement.";
    case QuestType::SolveChallenges:
        return "Solve " + plural(target, std::string(to_string(*challenge_type_filter)) + " challenge") + ".";
    case QuestType::SolveChallengesWithoutRejection:
        return "Solve " + plural(target, "challenge") + " without rejecting one in between.";
    }
    return {};
}

Quest generate_quest(ProjectState& state, const std::string& user, Rng& rng, std::int64_t build)
{
    if (state.find_user(user) == nullptr) {
        throw Error(ErrorCode::unknown_user, "unknown user '" + user + "'");
    }
    if (state.active_quest(user) != nullptr) {
        throw Error(ErrorCode::quest_already_active, "user '" + user + "' already has an active quest");
    }
    Quest q;
    q.id = "q-" + std::to_string(state.next_quest_id++);
    q.type = all_quest_types[rng.index(all_quest_types.size())];
    q.assignee = user;
    q.target = single_step(q.type) ? 1 : state.config.quest_target_default;
    if (q.type == QuestType::SolveChallenges) {
        q.challenge_type_filter = all_challenge_types[rng.index(all_challenge_types.size())];
    }
    q.created_build = build;
    q.points = state.config.quest_points;
    state.quests.push_back(q);
    return q;
}

std::vector<Quest> apply_cycle_to_quests(ProjectState& state,
                                         const std::map<std::string, CycleEvents>& events,
                                         std::int64_t build)
{
    std::vector<Quest> completed;
    for (auto& q : state.quests) {
        if (q.state != QuestState::active) {
            continue;
        }
        auto it = events.find(q.assignee);
        if (it == events.end()) {
            continue;
        }
        const CycleEvents& e = it->second;
        const auto solved = static_cast<std::int64_t>(e.challenges_solved.size());

        std::int64_t gain = 0;
        switch (q.type) {
        case QuestType::AddTests: gain = std::max<std::int64_t>(0, e.delta.tests_added); break;
        case QuestType::CoverBranches: gain = e.delta.newly_covered_branch_count; break;
        case QuestType::CoverLines:
            gain = static_cast<std::int64_t>(e.delta.newly_covered_lines.size());
            break;
        case QuestType::ReceiveChallenges: gain = e.challenges_received; break;
        case QuestType::SendChallenges: gain = e.challenges_sent; break;
        case QuestType::SolveAchievements: gain = e.achievements_earned; break;
        case QuestType::SolveChallenges:
            gain = std::count(e.challenges_solved.begin(), e.challenges_solved.end(),
                              q.challenge_type_filter.value_or(ChallengeType::Test));
            break;
        case QuestType::SolveChallengesWithoutRejection:
            if (e.challenges_rejected > 0) {
                if (q.progress > 0) {
                    ++q.resets;
                }
                q.progress = 0;
                continue;
            }
            gain = solved;
            break;
        }
        q.progress = static_cast<int>(std::min<std::int64_t>(q.target, q.progress + gain));
        if (q.progress == q.target) {
            q.state = QuestState::completed;
            q.completed_build = build;
            completed.push_back(q);
        }
    }
    return completed;
}

double quest_progress_fraction(const Quest& quest) noexcept
{
    if (quest.target <= 0) {
        return 1.0;
    }
    return static_cast<double>(quest.progress) / static_cast<double>(quest.target);
}

}  // namespace gamici
