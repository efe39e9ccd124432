#include "gamici/api.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>
#include <iostream>

#include "gamici/achievement.hpp"
#include "gamici/scoring.hpp"

namespace gamici {

int http_status(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::bad_credentials:
    case ErrorCode::unauthorized: return 401;
    case ErrorCode::not_owner: return 403;
    case ErrorCode::unknown_project:
    case ErrorCode::unknown_user:
    case ErrorCode::unknown_team:
    case ErrorCode::unknown_challenge:
    case ErrorCode::recipient_unknown:
    case ErrorCode::not_found: return 404;
    case ErrorCode::shelf_full:
    case ErrorCode::no_free_slot:
    case ErrorCode::stale_build:
    case ErrorCode::illegal_transition:
    case ErrorCode::self_send:
    case ErrorCode::duplicate_challenge:
    case ErrorCode::undo_not_class_coverage:
    case ErrorCode::quest_already_active:
    case ErrorCode::project_exists:
    case ErrorCode::user_exists:
    case ErrorCode::team_exists:
    case ErrorCode::lock_busy: return 409;
    case ErrorCode::corrupt_state:
    case ErrorCode::storage_error:
    case ErrorCode::lock_not_held: return 500;
    default: return 400;
    }
}

namespace {

ApiResponse error_response(const Error& e)
{
    return {http_status(e.code()), {{"error", {{"code", to_string(e.code())}, {"message", e.what()}}}}};
}

[[noreturn]] void bad_request(const std::string& message)
{
    throw Error(ErrorCode::bad_request, message);
}

Json parse_body(const ApiRequest& req)
{
    if (req.body.empty()) {
        return Json::object();
    }
    try {
        Json j = Json::parse(req.body);
        if (!j.is_object()) {
            bad_request("request body must be an object");
        }
        return j;
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::bad_request, "request body is not valid JSON (byte " + std::to_string(e.byte) + ")");
    }
}

std::string string_field(const Json& body, const char* key)
{
    auto it = body.find(key);
    if (it == body.end() || !it->is_string()) {
        bad_request(std::string("field '") + key + "' must be a string");
    }
    return it->get<std::string>();
}

std::string bearer(const ApiRequest& req)
{
    auto it = req.headers.find("authorization");
    if (it == req.headers.end() || it->second.rfind("Bearer ", 0) != 0 || it->second.size() <= 7) {
        throw Error(ErrorCode::unauthorized, "missing 'Authorization: Bearer <token>' header");
    }
    return it->second.substr(7);
}

std::optional<std::string> query(const ApiRequest& req, const std::string& key)
{
    auto it = req.query.find(key);
    return it == req.query.end() ? std::nullopt : std::optional<std::string>(it->second);
}

std::optional<std::int64_t> parse_int(const std::string& s)
{
    std::int64_t v = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size() || s.empty()) {
        return std::nullopt;
    }
    return v;
}

Json opt_json(const std::optional<std::string>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

Json challenge_view(const Challenge& c)
{
    Json anchor = nullptr;
    if (!c.anchor.empty()) {
        anchor = {{"path", c.anchor.path},
                  {"line", c.anchor.line_number ? Json(*c.anchor.line_number) : Json(nullptr)},
                  {"end_line", c.anchor.end_line ? Json(*c.anchor.end_line) : Json(nullptr)},
                  {"class", opt_json(c.anchor.class_name)},
                  {"method", opt_json(c.anchor.method_name)}};
    }
    Json v = {{"id", c.id},
              {"type", to_string(c.type)},
              {"state", to_string(c.state)},
              {"description", c.detail},
              {"details", c.extra},
              {"points", c.points},
              {"anchor", std::move(anchor)},
              {"branches", nullptr},
              {"created_build", c.created_build},
              {"closed_build", c.closed_build ? Json(*c.closed_build) : Json(nullptr)},
              {"rejection_reason", opt_json(c.rejection_reason)},
              {"sent_by", opt_json(c.sent_by)},
              {"undo_allowed", c.type == ChallengeType::ClassCoverage && c.state == ChallengeState::rejected}};
    if (c.branch_info) {
        v["branches"] = {{"covered", c.branch_info->first},
                         {"uncovered", c.branch_info->second - c.branch_info->first},
                         {"total", c.branch_info->second}};
    }
    return v;
}

Json quest_view(const Quest& q)
{
    return {{"id", q.id},
            {"type", to_string(q.type)},
            {"state", q.state == QuestState::active ? "active" : "completed"},
            {"description", q.description()},
            {"progress", q.progress},
            {"target", q.target},
            {"fraction", quest_progress_fraction(q)},
            {"points", q.points},
            {"challenge_type_filter",
             q.challenge_type_filter ? Json(to_string(*q.challenge_type_filter)) : Json(nullptr)},
            {"created_build", q.created_build},
            {"completed_build", q.completed_build ? Json(*q.completed_build) : Json(nullptr)}};
}

Json row_view(const LeaderboardRow& r, std::size_t rank)
{
    return {{"rank", rank},
            {"subject", r.subject},
            {"display_name", r.display_name},
            {"points", r.points},
            {"challenges_solved", r.challenges_solved},
            {"quests_completed", r.quests_completed},
            {"achievements_earned", r.achievements_earned},
            {"avatar_id", r.avatar_id ? Json(*r.avatar_id) : Json(nullptr)}};
}

Json me_view(const ProjectState& s, const std::string& user)
{
    const UserProfile& u = *s.find_user(user);
    std::int64_t points = 0;
    for (const auto& e : s.score_events) {
        if (e.user_id == user) {
            points += e.amount;
        }
    }
    Json colleagues = Json::array();
    for (const auto& [id, other] : s.users) {
        if (id != user) {
            colleagues.push_back({{"id", id}, {"display_name", other.display_name}});
        }
    }
    return {{"id", u.id},
            {"display_name", u.display_name},
            {"email", u.email},
            {"project", s.project_id},
            {"avatar_id", u.avatar_id ? Json(*u.avatar_id) : Json(nullptr)},
            {"team", opt_json(u.team_id)},
            {"points", points},
            {"active_challenges", s.count_challenges(user, ChallengeState::active)},
            {"stored_challenges", s.count_challenges(user, ChallengeState::stored)},
            {"max_active_challenges", s.config.max_active_challenges},
            {"max_stored_challenges", s.config.max_stored_challenges},
            {"last_build", s.last_build ? Json(*s.last_build) : Json(nullptr)},
            {"colleagues", std::move(colleagues)}};
}

std::vector<std::string> split_path(const std::string& path)
{
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        std::size_t next = path.find('/', pos);
        if (next == std::string::npos) {
            next = path.size();
        }
        if (next > pos) {
            parts.push_back(path.substr(pos, next - pos));
        }
        pos = next + 1;
    }
    return parts;
}

}  // namespace

ApiService::ApiService(GameService& service, std::function<std::int64_t()> clock)
    : service_(service), clock_(std::move(clock))
{
}

ApiResponse ApiService::handle(const ApiRequest& req)
{
    try {
        const auto parts = split_path(req.path);
        if (parts.size() < 2 || parts[0] != "api") {
            throw Error(ErrorCode::not_found, "no endpoint " + req.path);
        }
        const std::string& ep = parts[1];
        const bool get = req.method == "GET";
        const bool post = req.method == "POST";
        auto route = [&](bool method_ok, std::size_t n) { return method_ok && parts.size() == n; };

        if (ep == "login" && route(post, 2)) {
            Json body = parse_body(req);
            std::string project = string_field(body, "project");
            std::string user = string_field(body, "username");
            std::string password = string_field(body, "password");
            std::string token = service_.login(project, user, password);
            return {200, {{"token", token}, {"user", user}, {"project", project}}};
        }
        if (ep == "builds" && route(post, 2)) {
            std::string token = bearer(req);
            BuildSnapshot snapshot = parse_snapshot(req.body);
            if (!service_.ingest_token_valid(snapshot.project_id, token)) {
                throw Error(ErrorCode::unauthorized, "invalid ingest token for project '" + snapshot.project_id + "'");
            }
            CycleResult r = service_.ingest(snapshot);
            return {200,
                    {{"project", snapshot.project_id},
                     {"build", snapshot.build_number},
                     {"solved", r.solved},
                     {"invalidated", r.invalidated},
                     {"generated", r.generated},
                     {"quests_completed", r.quests_completed},
                     {"achievements_earned", r.earned.size()},
                     {"notifications", r.notifications.size()}}};
        }

        // Everything below acts for the token's user.
        const std::string token = bearer(req);
        const std::string project = GameService::token_project(token);
        const std::string user = service_.authenticate(token, project);

        if (ep == "logout" && route(post, 2)) {
            service_.logout(token);
            return {200, {{"ok", true}}};
        }
        if (ep == "me" && route(get, 2)) {
            return {200, me_view(service_.load(project).state, user)};
        }
        if (ep == "avatar" && route(post, 2)) {
            Json body = parse_body(req);
            auto it = body.find("avatar_id");
            if (it == body.end() || !it->is_number_integer()) {
                bad_request("field 'avatar_id' must be an integer");
            }
            std::int64_t id = it->get<std::int64_t>();
            if (id < 1 || id > avatar_count) {
                throw Error(ErrorCode::avatar_out_of_range,
                            "avatar_id must be in [1, " + std::to_string(avatar_count) + "]");
            }
            service_.set_avatar(project, user, static_cast<int>(id));
            return {200, me_view(service_.load(project).state, user)};
        }
        if (ep == "challenges" && route(get, 2)) {
            auto filter = query(req, "state");
            std::vector<ChallengeState> wanted;
            if (!filter) {
                wanted = {ChallengeState::active, ChallengeState::stored, ChallengeState::solved,
                          ChallengeState::rejected, ChallengeState::invalidated};
            } else if (*filter == "active") {
                wanted = {ChallengeState::active};
            } else if (*filter == "stored") {
                wanted = {ChallengeState::stored};
            } else if (*filter == "rejected") {
                wanted = {ChallengeState::rejected};
            } else if (*filter == "completed") {
                wanted = {ChallengeState::solved, ChallengeState::invalidated};
            } else {
                bad_request("state must be one of active, completed, rejected, stored");
            }
            const ProjectState s = service_.load(project).state;
            Json list = Json::array();
            for (const auto& c : s.challenges) {
                if (c.assignee == user && std::find(wanted.begin(), wanted.end(), c.state) != wanted.end()) {
                    list.push_back(challenge_view(c));
                }
            }
            return {200, {{"challenges", std::move(list)}}};
        }
        if (ep == "challenges" && route(post, 4)) {
            const std::string& id = parts[2];
            const std::string& verb = parts[3];
            PlayerAction action;
            action.challenge_id = id;
            Json body = parse_body(req);
            if (verb == "reject") {
                action.kind = ActionKind::reject;
                auto it = body.find("reason");
                if (it != body.end() && !it->is_string()) {
                    bad_request("field 'reason' must be a string");
                }
                action.reason = body.value("reason", "");
            } else if (verb == "undo") {
                action.kind = ActionKind::undo_reject;
            } else if (verb == "store") {
                action.kind = ActionKind::store;
            } else if (verb == "activate") {
                action.kind = ActionKind::activate;
            } else if (verb == "send") {
                action.kind = ActionKind::send;
                action.recipient = string_field(body, "recipient");
            } else {
                throw Error(ErrorCode::not_found, "no endpoint " + req.path);
            }
            service_.act(project, user, action, clock_());
            const ProjectState s = service_.load(project).state;
            return {200, {{"challenge", challenge_view(*s.find_challenge(id))}}};
        }
        if (ep == "quests" && route(get, 2)) {
            auto filter = query(req, "state");
            if (filter && *filter != "active" && *filter != "completed") {
                bad_request("state must be active or completed");
            }
            const ProjectState s = service_.load(project).state;
            Json list = Json::array();
            for (const auto& q : s.quests) {
                bool state_ok = !filter || (*filter == "active") == (q.state == QuestState::active);
                if (q.assignee == user && state_ok) {
                    list.push_back(quest_view(q));
                }
            }
            return {200, {{"quests", std::move(list)}}};
        }
        if (ep == "achievements" && route(get, 2)) {
            const ProjectState s = service_.load(project).state;
            Json list = Json::array();
            for (const auto& v : visible_achievements(s, service_.catalog(project), user)) {
                list.push_back({{"id", v.def.id},
                                {"title", v.def.title},
                                {"description", v.def.description},
                                {"icon_id", v.def.icon_id},
                                {"hidden", v.def.hidden},
                                {"scope", v.def.scope == AchievementScope::user ? "user" : "project"},
                                {"earned", v.earned.has_value()},
                                {"earned_at", v.earned ? Json(v.earned->earned_at) : Json(nullptr)},
                                {"earned_build", v.earned ? Json(v.earned->build_number) : Json(nullptr)}});
            }
            return {200, {{"achievements", std::move(list)}}};
        }
        if (ep == "leaderboard" && route(get, 2)) {
            auto scope = query(req, "scope").value_or("users");
            if (scope != "users" && scope != "teams") {
                bad_request("scope must be users or teams");
            }
            const ProjectState s = service_.load(project).state;
            auto rows = leaderboard(s, scope == "users" ? LeaderboardScope::users : LeaderboardScope::teams);
            Json list = Json::array();
            for (std::size_t i = 0; i < rows.size(); ++i) {
                list.push_back(row_view(rows[i], i + 1));
            }
            return {200, {{"scope", scope}, {"rows", std::move(list)}}};
        }
        if (ep == "notifications" && route(get, 2)) {
            std::int64_t since = 0;
            if (auto raw = query(req, "since"); raw && !raw->empty()) {
                auto v = parse_int(*raw);
                if (!v || *v < 0) {
                    bad_request("since must be a cursor returned by this endpoint");
                }
                since = *v;
            }
            const ProjectState s = service_.load(project).state;
            Json list = Json::array();
            std::int64_t cursor = since;
            for (const auto& n : s.notifications) {
                if (n.user_id == user && n.id > since) {
                    list.push_back({{"id", n.id},
                                    {"kind", to_string(n.kind)},
                                    {"message", n.message},
                                    {"link", {{"page", to_string(n.page)}, {"entity", opt_json(n.entity_id)}}},
                                    {"created_at", n.created_at}});
                    cursor = std::max(cursor, n.id);
                }
            }
            return {200, {{"notifications", std::move(list)}, {"cursor", std::to_string(cursor)}}};
        }
        if (ep == "source" && route(get, 2)) {
            auto path = query(req, "path");
            if (!path || path->empty()) {
                bad_request("path is required");
            }
            const ProjectState s = service_.load(project).state;
            std::optional<std::int64_t> build = s.last_build;
            if (auto raw = query(req, "build")) {
                build = parse_int(*raw);
                if (!build) {
                    bad_request("build must be an integer");
                }
            }
            std::optional<BuildSnapshot> snap;
            if (build) {
                snap = service_.snapshot(project, *build);
            }
            if (!snap || snap->sources.count(*path) == 0) {
                throw Error(ErrorCode::not_found, "no source for '" + *path + "'");
            }
            return {200, {{"path", *path}, {"build", *build}, {"text", snap->sources.at(*path)}}};
        }
        throw Error(ErrorCode::not_found, "no endpoint " + req.method + " " + req.path);
    } catch (const Error& e) {
        return error_response(e);
    } catch (const std::exception& e) {
        return {500, {{"error", {{"code", "internal"}, {"message", e.what()}}}}};
    }
}

bool serve(GameService& service, const ServeOptions& options)
{
    ApiService api(service);
    httplib::Server server;

    auto handler = [&api](const httplib::Request& hreq, httplib::Response& hres) {
        ApiRequest req;
        req.method = hreq.method;
        req.path = hreq.path;
        for (const auto& [k, v] : hreq.params) {
            req.query.emplace(k, v);
        }
        for (const auto& [k, v] : hreq.headers) {
            std::string key = k;
            std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
            req.headers.emplace(std::move(key), v);
        }
        req.body = hreq.body;
        ApiResponse res = api.handle(req);
        hres.status = res.status;
        hres.set_content(res.body.dump(), "application/json; charset=utf-8");
    };
    server.Get(R"(/api/.*)", handler);
    server.Post(R"(/api/.*)", handler);
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Authorization, Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    if (!options.web_root.empty() && !server.set_mount_point("/", options.web_root)) {
        std::cerr << "gamici: web root " << options.web_root << " is not a directory\n";
        return false;
    }
    if (!server.bind_to_port(options.host, options.port)) {
        return false;
    }
    std::cerr << "gamici: listening on " << options.host << ":" << options.port << "\n";
    return server.listen_after_bind();
}

}  // namespace gamici
