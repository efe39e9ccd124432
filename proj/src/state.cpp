#include "gamici/state.hpp"

#include <algorithm>
#include <set>

#include "gamici/error.hpp"

namespace gamici {

std::string_view to_string(NotificationKind k) noexcept
{
    switch (k) {
    case NotificationKind::build_finished: return "build_finished";
    case NotificationKind::challenge_solved: return "challenge_solved";
    case NotificationKind::challenge_generated: return "challenge_generated";
    case NotificationKind::challenge_received: return "challenge_received";
    case NotificationKind::quest_completed: return "quest_completed";
    case NotificationKind::quest_generated: return "quest_generated";
    case NotificationKind::achievement_earned: return "achievement_earned";
    }
    return "build_finished";
}

std::string_view to_string(DashboardPage p) noexcept
{
    switch (p) {
    case DashboardPage::challenges: return "challenges";
    case DashboardPage::quests: return "quests";
    case DashboardPage::achievements: return "achievements";
    case DashboardPage::leaderboard: return "leaderboard";
    }
    return "challenges";
}

UserProfile* ProjectState::find_user(const std::string& id)
{
    auto it = users.find(id);
    return it == users.end() ? nullptr : &it->second;
}

const UserProfile* ProjectState::find_user(const std::string& id) const
{
    auto it = users.find(id);
    return it == users.end() ? nullptr : &it->second;
}

const UserProfile* ProjectState::user_by_email(const std::string& email) const
{
    for (const auto& [id, u] : users) {
        if (u.email == email) {
            return &u;
        }
    }
    return nullptr;
}

Challenge* ProjectState::find_challenge(const std::string& id)
{
    auto it = std::find_if(challenges.begin(), challenges.end(),
                           [&](const Challenge& c) { return c.id == id; });
    return it == challenges.end() ? nullptr : &*it;
}

const Challenge* ProjectState::find_challenge(const std::string& id) const
{
    auto it = std::find_if(challenges.begin(), challenges.end(),
                           [&](const Challenge& c) { return c.id == id; });
    return it == challenges.end() ? nullptr : &*it;
}

const Quest* ProjectState::active_quest(const std::string& user) const
{
    for (const auto& q : quests) {
        if (q.assignee == user && q.state == QuestState::active) {
            return &q;
        }
    }
    return nullptr;
}

int ProjectState::count_challenges(const std::string& user, ChallengeState s) const
{
    return static_cast<int>(std::count_if(challenges.begin(), challenges.end(), [&](const Challenge& c) {
        return c.assignee == user && c.state == s;
    }));
}

Notification& ProjectState::notify(const std::string& user, NotificationKind kind, std::string message,
                                   DashboardPage page, std::optional<std::string> entity,
                                   std::int64_t created_at)
{
    Notification n;
    n.id = next_notification_id++;
    n.user_id = user;
    n.kind = kind;
    n.message = std::move(message);
    n.page = page;
    n.entity_id = std::move(entity);
    n.created_at = created_at;
    notifications.push_back(std::move(n));
    return notifications.back();
}

// ---------------------------------------------------------------------------
// Document form

namespace {

template <typename T>
Json opt(const std::optional<T>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

template <typename T>
std::optional<T> get_opt(const Json& obj, const char* key)
{
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    return it->get<T>();
}

template <typename Enum, typename Lookup>
Enum enum_at(const Json& obj, const char* key, Lookup lookup)
{
    auto name = obj.at(key).get<std::string>();
    auto value = lookup(name);
    if (!value) {
        throw Error(ErrorCode::corrupt_state, std::string("unknown value '") + name + "' for " + key);
    }
    return *value;
}

std::optional<NotificationKind> notification_kind_from(std::string_view s)
{
    for (auto k : {NotificationKind::build_finished, NotificationKind::challenge_solved,
                   NotificationKind::challenge_generated, NotificationKind::challenge_received,
                   NotificationKind::quest_completed, NotificationKind::quest_generated,
                   NotificationKind::achievement_earned}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    return std::nullopt;
}

std::optional<DashboardPage> page_from(std::string_view s)
{
    for (auto p : {DashboardPage::challenges, DashboardPage::quests, DashboardPage::achievements,
                   DashboardPage::leaderboard}) {
        if (to_string(p) == s) {
            return p;
        }
    }
    return std::nullopt;
}

Json anchor_to_json(const CodeAnchor& a)
{
    return {{"path", a.path},          {"line", opt(a.line_number)},  {"end_line", opt(a.end_line)},
            {"hash", opt(a.content_hash)}, {"class", opt(a.class_name)}, {"method", opt(a.method_name)}};
}

CodeAnchor anchor_from_json(const Json& j)
{
    CodeAnchor a;
    a.path = j.at("path").get<std::string>();
    a.line_number = get_opt<int>(j, "line");
    a.end_line = get_opt<int>(j, "end_line");
    a.content_hash = get_opt<std::string>(j, "hash");
    a.class_name = get_opt<std::string>(j, "class");
    a.method_name = get_opt<std::string>(j, "method");
    return a;
}

Json counters_to_json(const UserCounters& c)
{
    Json by_type = Json::object();
    for (auto t : all_challenge_types) {
        by_type[std::string(to_string(t))] = c.solved_by_type[static_cast<std::size_t>(t)];
    }
    return {{"challenges_solved_total", c.challenges_solved_total},
            {"solved_by_type", std::move(by_type)},
            {"quests_completed", c.quests_completed},
            {"tests_added_total", c.tests_added_total},
            {"mutants_killed_total", c.mutants_killed_total},
            {"smells_removed_total", c.smells_removed_total},
            {"builds_fixed_total", c.builds_fixed_total}};
}

UserCounters counters_from_json(const Json& j)
{
    UserCounters c;
    c.challenges_solved_total = j.at("challenges_solved_total").get<std::int64_t>();
    for (const auto& [name, value] : j.at("solved_by_type").items()) {
        auto t = challenge_type_from_string(name);
        if (!t) {
            throw Error(ErrorCode::corrupt_state, "unknown challenge type '" + name + "' in counters");
        }
        c.solved_by_type[static_cast<std::size_t>(*t)] = value.get<std::int64_t>();
    }
    c.quests_completed = j.at("quests_completed").get<std::int64_t>();
    c.tests_added_total = j.at("tests_added_total").get<std::int64_t>();
    c.mutants_killed_total = j.at("mutants_killed_total").get<std::int64_t>();
    c.smells_removed_total = j.at("smells_removed_total").get<std::int64_t>();
    c.builds_fixed_total = j.at("builds_fixed_total").get<std::int64_t>();
    return c;
}

Challenge challenge_from_json(const Json& j)
{
    Challenge c;
    c.id = j.at("id").get<std::string>();
    c.type = enum_at<ChallengeType>(j, "type", challenge_type_from_string);
    c.assignee = j.at("assignee").get<std::string>();
    c.created_build = j.at("created_build").get<std::int64_t>();
    c.state = enum_at<ChallengeState>(j, "state", challenge_state_from_string);
    c.anchor = anchor_from_json(j.at("anchor"));
    const Json& b = j.at("baseline");
    c.baseline.tests_total = b.at("tests_total").get<std::int64_t>();
    c.baseline.covered_lines = get_opt<int>(b, "covered_lines");
    c.baseline.covered_branches = get_opt<int>(b, "covered_branches");
    if (auto it = b.find("mutant"); it != b.end() && !it->is_null()) {
        c.baseline.mutant = MutantKey{it->at("file").get<std::string>(), it->at("line").get<int>(),
                                      it->at("mutator").get<std::string>(), it->at("index").get<int>()};
    }
    if (auto it = b.find("smell"); it != b.end() && !it->is_null()) {
        c.baseline.smell = SmellKey{it->at("file").get<std::string>(), it->at("start").get<int>(),
                                    it->at("rule").get<std::string>()};
    }
    c.points = j.at("points").get<int>();
    c.rejection_reason = get_opt<std::string>(j, "rejection_reason");
    c.sent_by = get_opt<std::string>(j, "sent_by");
    c.detail = j.at("detail").get<std::string>();
    c.extra = j.at("extra").get<std::string>();
    if (auto it = j.find("branch_info"); it != j.end() && !it->is_null()) {
        c.branch_info = std::make_pair(it->at("covered").get<int>(), it->at("total").get<int>());
    }
    c.closed_build = get_opt<std::int64_t>(j, "closed_build");
    return c;
}

Quest quest_from_json(const Json& j)
{
    Quest q;
    q.id = j.at("id").get<std::string>();
    q.type = enum_at<QuestType>(j, "type", quest_type_from_string);
    q.assignee = j.at("assignee").get<std::string>();
    q.target = j.at("target").get<int>();
    q.progress = j.at("progress").get<int>();
    auto state = j.at("state").get<std::string>();
    if (state != "active" && state != "completed") {
        throw Error(ErrorCode::corrupt_state, "unknown quest state '" + state + "'");
    }
    q.state = state == "active" ? QuestState::active : QuestState::completed;
    if (auto f = get_opt<std::string>(j, "challenge_type_filter")) {
        q.challenge_type_filter = challenge_type_from_string(*f);
        if (!q.challenge_type_filter) {
            throw Error(ErrorCode::corrupt_state, "unknown challenge type filter '" + *f + "'");
        }
    }
    q.created_build = j.at("created_build").get<std::int64_t>();
    q.points = j.at("points").get<int>();
    q.completed_build = get_opt<std::int64_t>(j, "completed_build");
    q.resets = j.at("resets").get<int>();
    return q;
}

}  // namespace

Json challenge_to_json(const Challenge& c)
{
    Json baseline = {{"tests_total", c.baseline.tests_total},
                     {"covered_lines", opt(c.baseline.covered_lines)},
                     {"covered_branches", opt(c.baseline.covered_branches)},
                     {"mutant", nullptr},
                     {"smell", nullptr}};
    if (c.baseline.mutant) {
        const auto& m = *c.baseline.mutant;
        baseline["mutant"] = {{"file", m.file}, {"line", m.line_number}, {"mutator", m.mutator_id},
                              {"index", m.index}};
    }
    if (c.baseline.smell) {
        const auto& s = *c.baseline.smell;
        baseline["smell"] = {{"file", s.file}, {"start", s.start_line}, {"rule", s.rule_id}};
    }
    Json j = Json::object();
    j["id"] = c.id;
    j["type"] = to_string(c.type);
    j["assignee"] = c.assignee;
    j["created_build"] = c.created_build;
    j["state"] = to_string(c.state);
    j["anchor"] = anchor_to_json(c.anchor);
    j["baseline"] = std::move(baseline);
    j["points"] = c.points;
    j["rejection_reason"] = opt(c.rejection_reason);
    j["sent_by"] = opt(c.sent_by);
    j["detail"] = c.detail;
    j["extra"] = c.extra;
    j["branch_info"] = c.branch_info ? Json{{"covered", c.branch_info->first}, {"total", c.branch_info->second}}
                                     : Json(nullptr);
    j["closed_build"] = opt(c.closed_build);
    return j;
}

Json quest_to_json(const Quest& q)
{
    Json j = Json::object();
    j["id"] = q.id;
    j["type"] = to_string(q.type);
    j["assignee"] = q.assignee;
    j["target"] = q.target;
    j["progress"] = q.progress;
    j["state"] = q.state == QuestState::active ? "active" : "completed";
    j["challenge_type_filter"] =
        q.challenge_type_filter ? Json(to_string(*q.challenge_type_filter)) : Json(nullptr);
    j["created_build"] = q.created_build;
    j["points"] = q.points;
    j["completed_build"] = opt(q.completed_build);
    j["resets"] = q.resets;
    return j;
}

Json notification_to_json(const Notification& n)
{
    return {{"id", n.id},
            {"user", n.user_id},
            {"kind", to_string(n.kind)},
            {"message", n.message},
            {"link", {{"page", to_string(n.page)}, {"entity", opt(n.entity_id)}}},
            {"created_at", n.created_at}};
}

Json score_event_to_json(const ScoreEvent& e)
{
    return {{"seq", e.seq},
            {"user", e.user_id},
            {"team", opt(e.team_id)},
            {"amount", e.amount},
            {"source", e.source == ScoreSource::challenge ? "challenge" : "quest"},
            {"source_id", e.source_id},
            {"source_type", e.source_type},
            {"build", e.build_number},
            {"timestamp", e.timestamp}};
}

Json state_to_json(const ProjectState& s)
{
    Json users = Json::array();
    for (const auto& [id, u] : s.users) {
        users.push_back({{"id", u.id},
                         {"display_name", u.display_name},
                         {"email", u.email},
                         {"avatar_id", opt(u.avatar_id)},
                         {"team", opt(u.team_id)},
                         {"password_salt", u.password_salt},
                         {"password_digest", u.password_digest},
                         {"token_digests", u.token_digests},
                         {"counters", counters_to_json(u.counters)},
                         {"pending", {{"rejected", u.pending.rejected},
                                      {"sent", u.pending.sent},
                                      {"received", u.pending.received}}}});
    }
    Json teams = Json::array();
    for (const auto& [id, t] : s.teams) {
        teams.push_back({{"id", t.id}, {"display_name", t.display_name}});
    }
    Json challenges = Json::array();
    for (const auto& c : s.challenges) {
        challenges.push_back(challenge_to_json(c));
    }
    Json quests = Json::array();
    for (const auto& q : s.quests) {
        quests.push_back(quest_to_json(q));
    }
    Json earned = Json::array();
    for (const auto& e : s.earned) {
        earned.push_back({{"achievement", e.achievement_id},
                          {"user", e.user_id},
                          {"earned_at", e.earned_at},
                          {"build", e.build_number}});
    }
    Json scores = Json::array();
    for (const auto& e : s.score_events) {
        scores.push_back(score_event_to_json(e));
    }
    Json notes = Json::array();
    for (const auto& n : s.notifications) {
        notes.push_back(notification_to_json(n));
    }

    Json doc = Json::object();
    doc["format"] = "gamici-state/1";
    doc["project"] = s.project_id;
    doc["config"] = config_to_json(s.config);
    doc["ingest_token_digest"] = s.ingest_token_digest;
    doc["last_build"] = opt(s.last_build);
    doc["metrics"] = {{"line_coverage", s.metrics.line_coverage},
                      {"branch_coverage", s.metrics.branch_coverage},
                      {"tests_total", s.metrics.tests_total},
                      {"surviving_mutants", s.metrics.surviving_mutants},
                      {"smell_count", s.metrics.smell_count}};
    doc["next_ids"] = {{"challenge", s.next_challenge_id},
                       {"quest", s.next_quest_id},
                       {"notification", s.next_notification_id}};
    doc["users"] = std::move(users);
    doc["teams"] = std::move(teams);
    doc["challenges"] = std::move(challenges);
    doc["quests"] = std::move(quests);
    doc["earned"] = std::move(earned);
    doc["score_events"] = std::move(scores);
    doc["notifications"] = std::move(notes);
    return doc;
}

Json credential_free_json(const ProjectState& s)
{
    Json doc = state_to_json(s);
    doc.erase("ingest_token_digest");
    for (auto& u : doc["users"]) {
        u.erase("password_salt");
        u.erase("password_digest");
        u.erase("token_digests");
    }
    return doc;
}

ProjectState state_from_json(const Json& doc)
{
    try {
        if (!doc.is_object() || doc.value("format", "") != "gamici-state/1") {
            throw Error(ErrorCode::corrupt_state, "not a state document");
        }
        ProjectState s;
        s.project_id = doc.at("project").get<std::string>();
        s.config = config_from_json(doc.at("config"));
        s.ingest_token_digest = doc.at("ingest_token_digest").get<std::string>();
        s.last_build = get_opt<std::int64_t>(doc, "last_build");
        const Json& m = doc.at("metrics");
        s.metrics.line_coverage = m.at("line_coverage").get<double>();
        s.metrics.branch_coverage = m.at("branch_coverage").get<double>();
        s.metrics.tests_total = m.at("tests_total").get<std::int64_t>();
        s.metrics.surviving_mutants = m.at("surviving_mutants").get<std::int64_t>();
        s.metrics.smell_count = m.at("smell_count").get<std::int64_t>();
        const Json& ids = doc.at("next_ids");
        s.next_challenge_id = ids.at("challenge").get<std::int64_t>();
        s.next_quest_id = ids.at("quest").get<std::int64_t>();
        s.next_notification_id = ids.at("notification").get<std::int64_t>();

        for (const auto& j : doc.at("users")) {
            UserProfile u;
            u.id = j.at("id").get<std::string>();
            u.display_name = j.at("display_name").get<std::string>();
            u.email = j.at("email").get<std::string>();
            u.avatar_id = get_opt<int>(j, "avatar_id");
            u.team_id = get_opt<std::string>(j, "team");
            u.password_salt = j.at("password_salt").get<std::string>();
            u.password_digest = j.at("password_digest").get<std::string>();
            u.token_digests = j.at("token_digests").get<std::vector<std::string>>();
            u.counters = counters_from_json(j.at("counters"));
            const Json& p = j.at("pending");
            u.pending = {p.at("rejected").get<int>(), p.at("sent").get<int>(), p.at("received").get<int>()};
            std::string id = u.id;
            s.users.emplace(std::move(id), std::move(u));
        }
        for (const auto& j : doc.at("teams")) {
            Team t{j.at("id").get<std::string>(), j.at("display_name").get<std::string>()};
            s.teams.emplace(t.id, t);
        }
        for (const auto& j : doc.at("challenges")) {
            s.challenges.push_back(challenge_from_json(j));
        }
        for (const auto& j : doc.at("quests")) {
            s.quests.push_back(quest_from_json(j));
        }
        for (const auto& j : doc.at("earned")) {
            s.earned.push_back({j.at("achievement").get<std::string>(), j.at("user").get<std::string>(),
                                j.at("earned_at").get<std::int64_t>(), j.at("build").get<std::int64_t>()});
        }
        for (const auto& j : doc.at("score_events")) {
            ScoreEvent e;
            e.seq = j.at("seq").get<std::int64_t>();
            e.user_id = j.at("user").get<std::string>();
            e.team_id = get_opt<std::string>(j, "team");
            e.amount = j.at("amount").get<int>();
            auto source = j.at("source").get<std::string>();
            if (source != "challenge" && source != "quest") {
                throw Error(ErrorCode::corrupt_state, "unknown score source '" + source + "'");
            }
            e.source = source == "challenge" ? ScoreSource::challenge : ScoreSource::quest;
            e.source_id = j.at("source_id").get<std::string>();
            e.source_type = j.at("source_type").get<std::string>();
            e.build_number = j.at("build").get<std::int64_t>();
            e.timestamp = j.at("timestamp").get<std::int64_t>();
            s.score_events.push_back(std::move(e));
        }
        for (const auto& j : doc.at("notifications")) {
            Notification n;
            n.id = j.at("id").get<std::int64_t>();
            n.user_id = j.at("user").get<std::string>();
            n.kind = enum_at<NotificationKind>(j, "kind", notification_kind_from);
            n.message = j.at("message").get<std::string>();
            n.page = enum_at<DashboardPage>(j.at("link"), "page", page_from);
            n.entity_id = get_opt<std::string>(j.at("link"), "entity");
            n.created_at = j.at("created_at").get<std::int64_t>();
            s.notifications.push_back(std::move(n));
        }
        check_integrity(s);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::corrupt_state, std::string("state document: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::corrupt_state) {
            throw;
        }
        throw Error(ErrorCode::corrupt_state, std::string("state document: ") + e.what());
    }
}

void check_integrity(const ProjectState& s)
{
    auto need_user = [&](const std::string& id, std::string_view what) {
        if (s.users.find(id) == s.users.end()) {
            throw Error(ErrorCode::corrupt_state,
                        std::string(what) + " references unknown user '" + id + "'");
        }
    };
    for (const auto& [id, u] : s.users) {
        if (u.team_id && s.teams.find(*u.team_id) == s.teams.end()) {
            throw Error(ErrorCode::corrupt_state, "user '" + id + "' is in unknown team '" + *u.team_id + "'");
        }
    }
    std::set<std::string> ids;
    for (const auto& c : s.challenges) {
        need_user(c.assignee, "challenge " + c.id);
        if (!ids.insert(c.id).second) {
            throw Error(ErrorCode::corrupt_state, "duplicate challenge id '" + c.id + "'");
        }
        if ((c.state == ChallengeState::rejected) != (c.rejection_reason && !c.rejection_reason->empty())) {
            throw Error(ErrorCode::corrupt_state, "challenge " + c.id + ": rejection reason without rejection");
        }
    }
    for (const auto& q : s.quests) {
        need_user(q.assignee, "quest " + q.id);
        if (q.progress < 0 || q.progress > q.target || (q.progress == q.target) != (q.state == QuestState::completed)) {
            throw Error(ErrorCode::corrupt_state, "quest " + q.id + ": progress out of range");
        }
    }
    for (const auto& e : s.earned) {
        need_user(e.user_id, "achievement " + e.achievement_id);
    }
    for (const auto& e : s.score_events) {
        need_user(e.user_id, "score event " + std::to_string(e.seq));
    }
    for (const auto& n : s.notifications) {
        need_user(n.user_id, "notification " + std::to_string(n.id));
    }
}

}  // namespace gamici
