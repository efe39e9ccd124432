#include "gamici/service.hpp"

#include <algorithm>
#include <chrono>

#include "gamici/digest.hpp"
#include "gamici/error.hpp"

namespace gamici {

std::int64_t unix_now()
{
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

namespace {

std::optional<ActionKind> action_kind_from(std::string_view s)
{
    for (auto k : {ActionKind::reject, ActionKind::undo_reject, ActionKind::store, ActionKind::activate,
                   ActionKind::send}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    return std::nullopt;
}

UserProfile& need_user(ProjectState& s, const std::string& id)
{
    UserProfile* u = s.find_user(id);
    if (u == nullptr) {
        throw Error(ErrorCode::unknown_user, "unknown user '" + id + "'");
    }
    return *u;
}

void check_name(const std::string& value, const char* what)
{
    bool ok = !value.empty() && value.size() <= 64 &&
              std::all_of(value.begin(), value.end(), [](char c) {
                  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' || c == '@';
              });
    if (!ok) {
        throw Error(ErrorCode::bad_request, std::string("invalid ") + what + " '" + value + "'");
    }
}

}  // namespace

ProjectState initial_state(const Json& cmd)
{
    ProjectState s;
    s.project_id = cmd.at("project").get<std::string>();
    s.config = config_from_json(cmd.at("config"));
    s.ingest_token_digest = cmd.at("ingest_token_digest").get<std::string>();
    return s;
}

CommandOutcome apply_command(ProjectState& s, const Json& cmd, const CommandContext& ctx)
{
    CommandOutcome out;
    const std::string op = cmd.at("op").get<std::string>();

    if (op == "create_project") {
        throw Error(ErrorCode::project_exists, "project '" + s.project_id + "' already exists");
    }
    if (op == "add_user") {
        std::string id = cmd.at("user").get<std::string>();
        std::string email = cmd.at("email").get<std::string>();
        if (s.find_user(id) != nullptr) {
            throw Error(ErrorCode::user_exists, "user '" + id + "' already exists");
        }
        if (s.user_by_email(email) != nullptr) {
            throw Error(ErrorCode::user_exists, "another user already has email '" + email + "'");
        }
        UserProfile u;
        u.id = id;
        u.display_name = cmd.at("display_name").get<std::string>();
        u.email = email;
        u.password_salt = cmd.at("salt").get<std::string>();
        u.password_digest = cmd.at("password_digest").get<std::string>();
        s.users.emplace(id, std::move(u));
    } else if (op == "add_team") {
        std::string id = cmd.at("team").get<std::string>();
        if (s.teams.count(id) != 0) {
            throw Error(ErrorCode::team_exists, "team '" + id + "' already exists");
        }
        s.teams.emplace(id, Team{id, cmd.at("display_name").get<std::string>()});
    } else if (op == "assign_team") {
        std::string team = cmd.at("team").get<std::string>();
        if (s.teams.count(team) == 0) {
            throw Error(ErrorCode::unknown_team, "unknown team '" + team + "'");
        }
        need_user(s, cmd.at("user").get<std::string>()).team_id = team;
    } else if (op == "build") {
        const std::int64_t build = cmd.at("build").get<std::int64_t>();
        auto cur = ctx.snapshot(build);
        if (!cur) {
            throw Error(ErrorCode::corrupt_state, "snapshot of build " + std::to_string(build) + " is not archived");
        }
        std::optional<BuildSnapshot> prev;
        if (s.last_build) {
            prev = ctx.snapshot(*s.last_build);
            if (!prev) {
                throw Error(ErrorCode::corrupt_state,
                            "snapshot of build " + std::to_string(*s.last_build) + " is not archived");
            }
        }
        Rng rng = cycle_rng(s, build);
        CycleResult r = run_build_cycle(s, prev ? &*prev : nullptr, *cur, ctx.catalog, rng);
        s = r.state;
        out.cycle = std::move(r);
    } else if (op == "action") {
        auto kind = action_kind_from(cmd.at("action").get<std::string>());
        if (!kind) {
            throw Error(ErrorCode::bad_request, "unknown action '" + cmd.at("action").get<std::string>() + "'");
        }
        PlayerAction a;
        a.kind = *kind;
        a.challenge_id = cmd.at("challenge").get<std::string>();
        a.reason = cmd.value("reason", "");
        a.recipient = cmd.value("recipient", "");
        const std::string actor = cmd.at("user").get<std::string>();
        const std::int64_t now = cmd.at("now").get<std::int64_t>();
        out.events = apply_player_action(s, actor, a);
        for (const auto& e : out.events) {
            if (e.kind == ActionEventKind::challenge_received) {
                const Challenge* c = s.find_challenge(e.challenge_id);
                s.notify(e.user, NotificationKind::challenge_received,
                         s.find_user(actor)->display_name + " sent you a challenge: " + c->detail,
                         DashboardPage::challenges, c->id, now);
            }
        }
    } else if (op == "avatar") {
        set_avatar(s, cmd.at("user").get<std::string>(), cmd.at("avatar").get<int>());
    } else if (op == "login") {
        need_user(s, cmd.at("user").get<std::string>()).token_digests.push_back(cmd.at("token_digest").get<std::string>());
    } else if (op == "logout") {
        auto& tokens = need_user(s, cmd.at("user").get<std::string>()).token_digests;
        tokens.erase(std::remove(tokens.begin(), tokens.end(), cmd.at("token_digest").get<std::string>()),
                     tokens.end());
    } else {
        throw Error(ErrorCode::corrupt_state, "unknown command '" + op + "'");
    }
    return out;
}

ProjectState replay(const std::vector<LogEntry>& entries, const CommandContext& ctx)
{
    if (entries.empty() || entries.front().command.value("op", "") != "create_project") {
        throw Error(ErrorCode::corrupt_state, "log does not start with project creation");
    }
    ProjectState s = initial_state(entries.front().command);
    for (std::size_t i = 1; i < entries.size(); ++i) {
        apply_command(s, entries[i].command, ctx);
    }
    return s;
}

CommandContext archive_context(const fs::path& data_dir, const std::string& project)
{
    CommandContext ctx;
    ctx.snapshot = [data_dir, project](std::int64_t build) { return load_snapshot(data_dir, project, build); };
    ctx.catalog = load_project_catalog(data_dir, project);
    return ctx;
}

// ---------------------------------------------------------------------------

GameService::GameService(fs::path data_dir) : data_dir_(std::move(data_dir)) {}

CommandOutcome GameService::mutate(const std::string& project, const Json& command,
                                   std::optional<BuildSnapshot> incoming)
{
    ProjectLock lock = ProjectLock::acquire(data_dir_, project);
    LoadedProject loaded = load_project(data_dir_, project);
    CommandContext ctx = archive_context(data_dir_, project);

    if (incoming) {
        validate(*incoming);
        if (incoming->project_id != project) {
            throw Error(ErrorCode::project_mismatch, "snapshot is for project '" + incoming->project_id + "'");
        }
        const auto& last = loaded.state.last_build;
        if (last && incoming->build_number <= *last) {
            throw Error(ErrorCode::stale_build, "stale build: build " + std::to_string(incoming->build_number) +
                                                    " is not newer than " + std::to_string(*last));
        }
        archive_snapshot(data_dir_, lock, *incoming);
        auto from_archive = ctx.snapshot;
        ctx.snapshot = [&incoming, from_archive](std::int64_t build) -> std::optional<BuildSnapshot> {
            if (build == incoming->build_number) {
                return *incoming;
            }
            return from_archive(build);
        };
    }

    ProjectState next = loaded.state;
    CommandOutcome out = apply_command(next, command, ctx);
    commit_state(data_dir_, lock, loaded.generation, next, {command});
    return out;
}

std::string GameService::create_project(const std::string& project, const GameConfig& config)
{
    std::string token = random_hex(16);
    Json cmd = {{"op", "create_project"},
                {"project", project},
                {"config", config_to_json(config)},
                {"ingest_token_digest", sha256_hex(token)}};
    create_project_files(data_dir_, initial_state(cmd), cmd);
    return token;
}

NewUser GameService::add_user(const std::string& project, const std::string& user,
                              const std::string& display_name, const std::string& email,
                              const std::string& password)
{
    check_name(user, "user id");
    if (email.find('@') == std::string::npos) {
        throw Error(ErrorCode::bad_request, "invalid email '" + email + "'");
    }
    NewUser out{user, password.empty() ? random_hex(6) : password};
    std::string salt = random_hex(16);
    mutate(project, {{"op", "add_user"},
                     {"user", user},
                     {"display_name", display_name.empty() ? user : display_name},
                     {"email", email},
                     {"salt", salt},
                     {"password_digest", password_digest(out.password, salt)}});
    return out;
}

void GameService::add_team(const std::string& project, const std::string& team, const std::string& display_name)
{
    check_name(team, "team id");
    mutate(project, {{"op", "add_team"}, {"team", team}, {"display_name", display_name.empty() ? team : display_name}});
}

void GameService::assign_team(const std::string& project, const std::string& user, const std::string& team)
{
    mutate(project, {{"op", "assign_team"}, {"user", user}, {"team", team}});
}

CycleResult GameService::ingest(const BuildSnapshot& snapshot)
{
    Json cmd = {{"op", "build"}, {"build", snapshot.build_number}};
    return *mutate(snapshot.project_id, cmd, snapshot).cycle;
}

std::string GameService::login(const std::string& project, const std::string& user, const std::string& password)
{
    LoadedProject loaded = load(project);
    const UserProfile* u = loaded.state.find_user(user);
    if (u == nullptr || password_digest(password, u->password_salt) != u->password_digest) {
        throw Error(ErrorCode::bad_credentials, "wrong username or password");
    }
    std::string token = project + "." + random_hex(16);
    mutate(project, {{"op", "login"}, {"user", user}, {"token_digest", sha256_hex(token)}});
    return token;
}

void GameService::logout(const std::string& token)
{
    std::string project = token_project(token);
    std::string user = authenticate(token, project);
    mutate(project, {{"op", "logout"}, {"user", user}, {"token_digest", sha256_hex(token)}});
}

std::string GameService::token_project(const std::string& token)
{
    auto dot = token.rfind('.');
    if (dot == std::string::npos || dot == 0 || token.size() - dot - 1 != 32 ||
        !is_hex(std::string_view(token).substr(dot + 1))) {
        return {};
    }
    return token.substr(0, dot);
}

std::string GameService::authenticate(const std::string& token, const std::string& project) const
{
    if (project.empty() || token_project(token) != project) {
        throw Error(ErrorCode::unauthorized, "invalid token");
    }
    LoadedProject loaded;
    try {
        loaded = load(project);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::unknown_project || e.code() == ErrorCode::bad_request) {
            throw Error(ErrorCode::unauthorized, "invalid token");
        }
        throw;
    }
    const std::string digest = sha256_hex(token);
    for (const auto& [id, u] : loaded.state.users) {
        if (std::find(u.token_digests.begin(), u.token_digests.end(), digest) != u.token_digests.end()) {
            return id;
        }
    }
    throw Error(ErrorCode::unauthorized, "invalid token");
}

bool GameService::ingest_token_valid(const std::string& project, const std::string& token) const
{
    return !token.empty() && sha256_hex(token) == load(project).state.ingest_token_digest;
}

std::vector<ActionEvent> GameService::act(const std::string& project, const std::string& user,
                                          const PlayerAction& action, std::int64_t now)
{
    Json cmd = {{"op", "action"},
                {"user", user},
                {"action", to_string(action.kind)},
                {"challenge", action.challenge_id},
                {"reason", action.reason},
                {"recipient", action.recipient},
                {"now", now}};
    return mutate(project, cmd).events;
}

void GameService::set_avatar(const std::string& project, const std::string& user, int avatar_id)
{
    mutate(project, {{"op", "avatar"}, {"user", user}, {"avatar", avatar_id}});
}

LoadedProject GameService::load(const std::string& project) const
{
    return load_project(data_dir_, project);
}

Catalog GameService::catalog(const std::string& project) const
{
    return load_project_catalog(data_dir_, project);
}

std::optional<BuildSnapshot> GameService::snapshot(const std::string& project, std::int64_t build) const
{
    return load_snapshot(data_dir_, project, build);
}

}  // namespace gamici
