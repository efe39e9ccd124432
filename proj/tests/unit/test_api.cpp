#include <doctest.h>

#include <httplib.h>

#include <chrono>
#include <thread>

#include "gamici/api.hpp"
#include "gamici/error.hpp"
#include "support.hpp"

using namespace gamici;
using namespace gamici::testing;

namespace {

/// Project "p": alice (team core) and bob, one build whose only coverage
/// targets are eight half-covered branch lines.
struct Api {
    TempDir dir;
    GameService service{dir.path()};
    ApiService api{service, [] { return std::int64_t{5000}; }};
    std::string ingest_token;
    std::string alice;
    std::string bob;

    Api()
    {
        ingest_token = service.create_project("p", GameConfig{});
        service.add_user("p", "alice", "Alice", "alice@example.com", "pw-alice");
        service.add_user("p", "bob", "Bob", "bob@example.com", "pw-bob");
        service.add_team("p", "core", "Core");
        service.assign_team("p", "alice", "core");
        ingest(build(1));
        alice = login("alice", "pw-alice");
        bob = login("bob", "pw-bob");
    }

    static BuildSnapshot build(std::int64_t n)
    {
        BuildSnapshot s = base_snapshot(n);
        auto& f = add_file(s, "src/A.java", {1, 1, 1, 1, 1, 1, 1, 1, 1});
        for (int i = 0; i < 8; ++i) {
            f.lines[static_cast<std::size_t>(i)].covered_branches = 1;
            f.lines[static_cast<std::size_t>(i)].total_branches = 2;
        }
        s.sources["src/A.java"] = "a\nb\nc\nd\ne\nf\ng\nh\ni\n";
        return s;
    }

    ApiResponse ingest(const BuildSnapshot& s, const std::string& token = {})
    {
        return call("POST", "/api/builds", serialize_snapshot(s), token.empty() ? ingest_token : token);
    }

    ApiResponse call(const std::string& method, const std::string& path, const std::string& body = {},
                     const std::string& token = {}, std::map<std::string, std::string> query = {})
    {
        ApiRequest req;
        req.method = method;
        req.path = path;
        req.body = body;
        req.query = std::move(query);
        if (!token.empty()) {
            req.headers["authorization"] = "Bearer " + token;
        }
        return api.handle(req);
    }

    std::string login(const std::string& user, const std::string& password)
    {
        ApiResponse r = call("POST", "/api/login",
                             Json{{"project", "p"}, {"username", user}, {"password", password}}.dump());
        REQUIRE(r.status == 200);
        return r.body.at("token").get<std::string>();
    }

    Json challenges(const std::string& token, const std::string& state = {})
    {
        std::map<std::string, std::string> q;
        if (!state.empty()) {
            q["state"] = state;
        }
        ApiResponse r = call("GET", "/api/challenges", "", token, q);
        REQUIRE(r.status == 200);
        return r.body.at("challenges");
    }

    std::vector<std::string> ids(const std::string& token, const std::string& state)
    {
        std::vector<std::string> out;
        for (const auto& c : challenges(token, state)) {
            out.push_back(c.at("id").get<std::string>());
        }
        return out;
    }
};

std::string error_code(const ApiResponse& r)
{
    return r.body.at("error").at("code").get<std::string>();
}

}  // namespace

TEST_CASE("login")
{
    Api a;
    CHECK(GameService::token_project(a.alice) == "p");
    ApiResponse bad = a.call("POST", "/api/login", R"({"project": "p", "username": "alice", "password": "x"})");
    CHECK(bad.status == 401);
    CHECK(error_code(bad) == "bad_credentials");
    CHECK(a.call("POST", "/api/login", R"({"project": "p", "username": "alice"})").status == 400);
    CHECK(a.call("POST", "/api/login", "not json").status == 400);
    CHECK(a.call("POST", "/api/login", "[1]").status == 400);
}

TEST_CASE("requests without a live session are 401")
{
    Api a;
    CHECK(a.call("GET", "/api/me").status == 401);
    CHECK(a.call("GET", "/api/me", "", "p." + std::string(32, '0')).status == 401);
    CHECK(a.call("GET", "/api/me", "", "nonsense").status == 401);
    ApiResponse me = a.call("GET", "/api/me", "", a.alice);
    REQUIRE(me.status == 200);
    CHECK(me.body.at("id") == "alice");
    CHECK(me.body.at("team") == "core");
    CHECK(me.body.at("colleagues").size() == 1);
    CHECK(a.call("POST", "/api/logout", "", a.alice).status == 200);
    CHECK(a.call("GET", "/api/me", "", a.alice).status == 401);
    CHECK(a.call("GET", "/api/me", "", a.bob).status == 200);
}

TEST_CASE("branch challenges expose covered, uncovered and total branches")
{
    Api a;
    Json list = a.challenges(a.alice, "active");
    REQUIRE(list.size() == 3);
    int branch = 0;
    for (const auto& c : list) {
        CHECK(c.at("undo_allowed") == false);
        if (c.at("type") != "BranchCoverage") {
            CHECK(c.at("branches").is_null());
            continue;
        }
        ++branch;
        CHECK(c.at("branches") == Json{{"covered", 1}, {"uncovered", 1}, {"total", 2}});
        CHECK(c.at("anchor").at("path") == "src/A.java");
    }
    CHECK(branch >= 2);
}

TEST_CASE("action errors map to 400, 403, 404 and 409")
{
    Api a;
    auto mine = a.ids(a.alice, "active");
    REQUIRE(mine.size() == 3);
    const std::string base = "/api/challenges/";

    ApiResponse r = a.call("POST", base + mine[0] + "/reject", R"({"reason": "   "})", a.alice);
    CHECK(r.status == 400);
    CHECK(error_code(r) == "reason_empty");
    CHECK(a.call("POST", base + mine[0] + "/reject", R"({"reason": 5})", a.alice).status == 400);
    CHECK(a.call("POST", base + mine[0] + "/store", "", a.bob).status == 403);
    CHECK(a.call("POST", base + "ch-999/store", "", a.alice).status == 404);
    CHECK(a.call("POST", base + mine[0] + "/explode", "", a.alice).status == 404);
    CHECK(a.call("GET", "/api/nowhere", "", a.alice).status == 404);
    CHECK(a.call("GET", "/elsewhere", "", a.alice).status == 404);

    CHECK(a.call("POST", base + mine[0] + "/store", "", a.alice).status == 200);
    CHECK(a.call("POST", base + mine[1] + "/store", "", a.alice).status == 200);
    r = a.call("POST", base + mine[2] + "/store", "", a.alice);
    CHECK(r.status == 409);
    CHECK(error_code(r) == "shelf_full");

    r = a.call("POST", base + mine[0] + "/send", R"({"recipient": "carol"})", a.alice);
    CHECK(r.status == 404);
    CHECK(a.call("POST", base + mine[0] + "/send", R"({"recipient": "alice"})", a.alice).status == 409);
    CHECK(a.call("POST", base + mine[0] + "/send", "{}", a.alice).status == 400);

    r = a.call("POST", base + mine[2] + "/reject", R"({"reason": "unreachable"})", a.alice);
    REQUIRE(r.status == 200);
    CHECK(r.body.at("challenge").at("state") == "rejected");
    CHECK(r.body.at("challenge").at("rejection_reason") == "unreachable");
    r = a.call("POST", base + mine[2] + "/undo", "", a.alice);
    CHECK(r.status == 409);
    CHECK(error_code(r) == "undo_not_class_coverage");

    // the next build refills three active slots, so activating is refused
    REQUIRE(a.ingest(Api::build(2)).status == 200);
    r = a.call("POST", base + mine[0] + "/activate", "", a.alice);
    CHECK(r.status == 409);
    CHECK(error_code(r) == "no_free_slot");
}

TEST_CASE("sending shows up on the colleague's shelf and in their notifications")
{
    Api a;
    auto mine = a.ids(a.alice, "active");
    REQUIRE(a.call("POST", "/api/challenges/" + mine[0] + "/store", "", a.alice).status == 200);
    ApiResponse r = a.call("POST", "/api/challenges/" + mine[0] + "/send", R"({"recipient": "bob"})", a.alice);
    REQUIRE(r.status == 200);
    CHECK(r.body.at("challenge").at("sent_by") == "alice");
    CHECK(a.ids(a.bob, "stored") == std::vector<std::string>{mine[0]});
    CHECK(a.ids(a.alice, "stored").empty());

    Json notes = a.call("GET", "/api/notifications", "", a.bob).body.at("notifications");
    REQUIRE_FALSE(notes.empty());
    CHECK(notes.back().at("kind") == "challenge_received");
    CHECK(notes.back().at("link").at("entity") == mine[0]);
    CHECK(notes.back().at("created_at") == 5000);
}

TEST_CASE("notifications cursor returns only newer entries")
{
    Api a;
    ApiResponse first = a.call("GET", "/api/notifications", "", a.alice);
    REQUIRE(first.status == 200);
    CHECK_FALSE(first.body.at("notifications").empty());
    std::string cursor = first.body.at("cursor");
    ApiResponse again = a.call("GET", "/api/notifications", "", a.alice, {{"since", cursor}});
    CHECK(again.body.at("notifications").empty());
    CHECK(again.body.at("cursor") == cursor);

    BuildSnapshot next = Api::build(2);
    next.files[0].lines[0].covered_branches = 2;
    REQUIRE(a.ingest(next).status == 200);
    Json fresh = a.call("GET", "/api/notifications", "", a.alice, {{"since", cursor}}).body.at("notifications");
    REQUIRE_FALSE(fresh.empty());
    for (const auto& n : fresh) {
        CHECK(n.at("id").get<std::int64_t>() > std::stoll(cursor));
    }
    CHECK(fresh.front().at("kind") == "build_finished");
    CHECK(a.call("GET", "/api/notifications", "", a.alice, {{"since", "-1"}}).status == 400);
    CHECK(a.call("GET", "/api/notifications", "", a.alice, {{"since", "x"}}).status == 400);
}

TEST_CASE("build ingestion over the API")
{
    Api a;
    ApiRequest req;
    req.method = "POST";
    req.path = "/api/builds";
    req.body = serialize_snapshot(Api::build(2));
    CHECK(a.api.handle(req).status == 401);
    CHECK(a.ingest(Api::build(2), "wrong").status == 401);
    CHECK(a.ingest(Api::build(2), a.alice).status == 401);

    ApiResponse stale = a.ingest(Api::build(1));
    CHECK(stale.status == 409);
    CHECK(error_code(stale) == "stale_build");
    CHECK(stale.body.at("error").at("message").get<std::string>().find("stale build") != std::string::npos);

    CHECK(a.call("POST", "/api/builds", "{\"project\": 1}", a.ingest_token).status == 400);

    BuildSnapshot bad = Api::build(2);
    bad.files[0].lines[0].covered_branches = 3;
    CHECK(a.ingest(bad).status == 400);

    ApiResponse ok = a.ingest(Api::build(2));
    CHECK(ok.status == 200);
    CHECK(ok.body.at("build") == 2);
}

TEST_CASE("quests, achievements, leaderboard, avatar and source")
{
    Api a;
    Json quests = a.call("GET", "/api/quests", "", a.alice, {{"state", "active"}}).body.at("quests");
    REQUIRE(quests.size() == 1);
    CHECK(quests[0].at("fraction") == 0.0);
    CHECK(a.call("GET", "/api/quests", "", a.alice, {{"state", "done"}}).status == 400);

    Json achievements = a.call("GET", "/api/achievements", "", a.alice).body.at("achievements");
    std::set<std::string> seen;
    for (const auto& x : achievements) {
        seen.insert(x.at("id").get<std::string>());
        if (x.at("hidden") == true) {
            CHECK(x.at("earned") == true);
        }
    }
    CHECK(seen.count("coverage-100") == 1);
    CHECK(seen.count("build-fixer") == 0);
    CHECK(seen.count("first-solve") == 1);

    ApiResponse board = a.call("GET", "/api/leaderboard", "", a.alice, {{"scope", "teams"}});
    REQUIRE(board.status == 200);
    CHECK(board.body.at("rows").size() == 1);
    CHECK(board.body.at("rows")[0].at("rank") == 1);
    CHECK(a.call("GET", "/api/leaderboard", "", a.alice, {{"scope", "planets"}}).status == 400);

    CHECK(a.call("POST", "/api/avatar", R"({"avatar_id": 51})", a.alice).status == 400);
    CHECK(a.call("POST", "/api/avatar", R"({"avatar_id": "7"})", a.alice).status == 400);
    ApiResponse avatar = a.call("POST", "/api/avatar", R"({"avatar_id": 50})", a.alice);
    CHECK(avatar.status == 200);
    CHECK(avatar.body.at("avatar_id") == 50);

    ApiResponse src = a.call("GET", "/api/source", "", a.alice, {{"path", "src/A.java"}});
    REQUIRE(src.status == 200);
    CHECK(src.body.at("text") == "a\nb\nc\nd\ne\nf\ng\nh\ni\n");
    CHECK(a.call("GET", "/api/source", "", a.alice, {{"path", "src/B.java"}}).status == 404);
    CHECK(a.call("GET", "/api/source", "", a.alice, {{"path", "src/A.java"}, {"build", "9"}}).status == 404);
    CHECK(a.call("GET", "/api/source", "", a.alice).status == 400);
}

TEST_CASE("every error code has an HTTP status")
{
    CHECK(http_status(ErrorCode::unauthorized) == 401);
    CHECK(http_status(ErrorCode::not_owner) == 403);
    CHECK(http_status(ErrorCode::unknown_challenge) == 404);
    CHECK(http_status(ErrorCode::stale_build) == 409);
    CHECK(http_status(ErrorCode::reason_empty) == 400);
    CHECK(http_status(ErrorCode::corrupt_state) == 500);
    for (int c = 0; c <= static_cast<int>(ErrorCode::not_found); ++c) {
        int s = http_status(static_cast<ErrorCode>(c));
        CHECK((s == 400 || s == 401 || s == 403 || s == 404 || s == 409 || s == 500));
        CHECK_FALSE(to_string(static_cast<ErrorCode>(c)).empty());
    }
}

TEST_CASE("the HTTP listener serves the endpoint table")
{
    // The listener never returns, so the service and the thread live until exit.
    auto* dir = new TempDir();
    auto* service = new GameService(dir->path());
    service->create_project("p", GameConfig{});
    int port = 18000 + static_cast<int>(std::chrono::steady_clock::now().time_since_epoch().count() % 2000);
    std::thread([service, port] { serve(*service, {"127.0.0.1", port, ""}); }).detach();

    httplib::Client client("127.0.0.1", port);
    httplib::Result res;
    for (int attempt = 0; attempt < 100 && !res; ++attempt) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        res = client.Get("/api/me");
    }
    REQUIRE(res);
    CHECK(res->status == 401);
    CHECK(Json::parse(res->body).at("error").at("code") == "unauthorized");
    CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
    auto login = client.Post("/api/login", R"({"project": "p", "username": "x", "password": "y"})", "application/json");
    REQUIRE(login);
    CHECK(login->status == 401);
}
