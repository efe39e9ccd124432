#include "gamici/orchestrator.hpp"

#include <algorithm>
#include <map>

#include "gamici/challenge.hpp"
#include "gamici/digest.hpp"
#include "gamici/error.hpp"
#include "gamici/quest.hpp"

namespace gamici {

Rng cycle_rng(const ProjectState& state, std::int64_t build_number)
{
    std::uint64_t seed = state.config.rng_seed ? static_cast<std::uint64_t>(*state.config.rng_seed)
                                               : fnv1a64(state.project_id);
    return Rng(seed, static_cast<std::uint64_t>(build_number));
}

namespace {

std::string count_of(std::size_t n, const char* noun)
{
    return std::to_string(n) + " " + noun + (n == 1 ? "" : "s");
}

}  // namespace

CycleResult run_build_cycle(const ProjectState& before, const BuildSnapshot* prev,
                            const BuildSnapshot& cur, const Catalog& catalog, Rng& rng)
{
    validate(cur);
    if (cur.project_id != before.project_id) {
        throw Error(ErrorCode::project_mismatch, "snapshot is for project '" + cur.project_id +
                                                     "', not '" + before.project_id + "'");
    }
    if (before.last_build && cur.build_number <= *before.last_build) {
        throw Error(ErrorCode::stale_build, "stale build: build " + std::to_string(cur.build_number) +
                                                " is not newer than " + std::to_string(*before.last_build));
    }

    CycleResult out;
    out.state = before;
    ProjectState& s = out.state;
    const std::int64_t build = cur.build_number;
    const std::int64_t now = cur.timestamp;
    const UserProfile* author_profile = s.user_by_email(cur.commit.author_email);
    const std::string author = author_profile != nullptr ? author_profile->id : std::string();

    // (1) delta
    if (prev != nullptr) {
        out.delta = diff_snapshots(*prev, cur);
    }

    // (2) evaluate every open challenge
    std::map<std::string, std::vector<Challenge>> solved_by_user;
    if (prev != nullptr) {
        for (auto& c : s.challenges) {
            if (c.state != ChallengeState::active && c.state != ChallengeState::stored) {
                continue;
            }
            switch (evaluate_challenge(c, *prev, cur, s.config, c.assignee == author)) {
            case Evaluation::solved:
                c.state = ChallengeState::solved;
                c.closed_build = build;
                out.solved.push_back(c.id);
                break;
            case Evaluation::invalidated:
                c.state = ChallengeState::invalidated;
                c.closed_build = build;
                out.invalidated.push_back(c.id);
                break;
            case Evaluation::pending:
                break;
            }
        }
        for (const auto& id : out.solved) {
            const Challenge* c = s.find_challenge(id);
            solved_by_user[c->assignee].push_back(*c);
        }
    }

    // (3) counters and metrics
    for (const auto& [user, list] : solved_by_user) {
        UserCounters& k = s.find_user(user)->counters;
        for (const Challenge& c : list) {
            ++k.challenges_solved_total;
            ++k.solved_by_type[static_cast<std::size_t>(c.type)];
        }
    }
    if (!author.empty()) {
        UserCounters& k = s.find_user(author)->counters;
        k.tests_added_total += std::max<std::int64_t>(0, out.delta.tests_added);
        k.mutants_killed_total += static_cast<std::int64_t>(out.delta.mutants_killed.size());
        k.smells_removed_total += static_cast<std::int64_t>(out.delta.smells_removed.size());
        k.builds_fixed_total += out.delta.build_fixed ? 1 : 0;
    }
    s.metrics = project_metrics(cur);

    // (4) achievements
    out.earned = evaluate_achievements(s, catalog, s.metrics, build, now);

    // (5) quests
    std::map<std::string, CycleEvents> events;
    for (auto& [id, user] : s.users) {
        CycleEvents& e = events[id];
        for (const Challenge& c : solved_by_user[id]) {
            e.challenges_solved.push_back(c.type);
        }
        e.challenges_rejected = user.pending.rejected;
        e.challenges_sent = user.pending.sent;
        e.challenges_received = user.pending.received;
        e.achievements_earned = static_cast<int>(std::count_if(
            out.earned.begin(), out.earned.end(), [&](const EarnedAchievement& a) { return a.user_id == id; }));
        if (id == author) {
            e.delta = out.delta;
        }
        user.pending = {};
    }
    std::vector<Quest> completed = apply_cycle_to_quests(s, events, build);
    for (const auto& q : completed) {
        ++s.find_user(q.assignee)->counters.quests_completed;
        out.quests_completed.push_back(q.id);
    }

    // (6) points
    auto award = [&](const std::string& user, int amount, ScoreSource source, const std::string& id,
                     std::string_view type) {
        ScoreEvent e;
        e.seq = static_cast<std::int64_t>(s.score_events.size()) + 1;
        e.user_id = user;
        e.team_id = s.find_user(user)->team_id;
        e.amount = amount;
        e.source = source;
        e.source_id = id;
        e.source_type = std::string(type);
        e.build_number = build;
        e.timestamp = now;
        s.score_events.push_back(std::move(e));
    };
    for (const auto& id : out.solved) {
        const Challenge* c = s.find_challenge(id);
        award(c->assignee, points_for(c->type, s.config), ScoreSource::challenge, c->id, to_string(c->type));
    }
    for (const auto& q : completed) {
        award(q.assignee, points_for(q.type, s.config), ScoreSource::quest, q.id, to_string(q.type));
    }

    // (7) refill
    std::map<std::string, std::vector<Challenge>> generated;
    std::map<std::string, Quest> new_quests;
    std::vector<std::string> user_ids;
    for (const auto& [id, user] : s.users) {
        user_ids.push_back(id);
    }
    for (const auto& id : user_ids) {
        generated[id] = generate_challenges(s, cur, id, rng);
        for (const auto& c : generated[id]) {
            out.generated.push_back(c.id);
        }
        if (s.active_quest(id) == nullptr) {
            new_quests.emplace(id, generate_quest(s, id, rng, build));
        }
    }

    // (8) notifications
    const std::size_t first_note = s.notifications.size();
    if (!author.empty()) {
        std::string msg = "Build #" + std::to_string(build) + " finished (" +
                          std::string(to_string(cur.build_result)) + "): " +
                          count_of(solved_by_user[author].size(), "challenge") + " solved.";
        s.notify(author, NotificationKind::build_finished, std::move(msg), DashboardPage::challenges,
                 std::nullopt, now);
    }
    for (const auto& id : user_ids) {
        for (const Challenge& c : solved_by_user[id]) {
            s.notify(id, NotificationKind::challenge_solved,
                     std::string(to_string(c.type)) + " challenge solved: " + c.detail + " (+" +
                         std::to_string(c.points) + ")",
                     DashboardPage::challenges, c.id, now);
        }
        for (const auto& e : out.earned) {
            if (e.user_id != id) {
                continue;
            }
            auto def = std::find_if(catalog.begin(), catalog.end(),
                                    [&](const AchievementDef& d) { return d.id == e.achievement_id; });
            s.notify(id, NotificationKind::achievement_earned, "Achievement unlocked: " + def->title,
                     DashboardPage::achievements, e.achievement_id, now);
        }
        for (const auto& q : completed) {
            if (q.assignee == id) {
                s.notify(id, NotificationKind::quest_completed,
                         "Quest completed: " + q.description() + " (+" + std::to_string(q.points) + ")",
                         DashboardPage::quests, q.id, now);
            }
        }
        for (const auto& c : generated[id]) {
            s.notify(id, NotificationKind::challenge_generated,
                     "New " + std::string(to_string(c.type)) + " challenge: " + c.detail,
                     DashboardPage::challenges, c.id, now);
        }
        if (auto it = new_quests.find(id); it != new_quests.end()) {
            s.notify(id, NotificationKind::quest_generated, "New quest: " + it->second.description(),
                     DashboardPage::quests, it->second.id, now);
        }
    }
    out.notifications.assign(s.notifications.begin() + static_cast<std::ptrdiff_t>(first_note),
                             s.notifications.end());

    // (9) this snapshot becomes the previous one
    s.last_build = build;
    return out;
}

}  // namespace gamici
