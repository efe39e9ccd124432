#include <doctest.h>

#include <thread>

#include "gamici/error.hpp"
#include "gamici/service.hpp"
#include "gamici/store.hpp"
#include "support.hpp"

using namespace gamici;
using namespace gamici::testing;

namespace {

ErrorCode code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::bad_request;
}

/// Project "p" with alice and bob and one processed build.
void seed_project(GameService& service)
{
    service.create_project("p", GameConfig{});
    service.add_user("p", "alice", "Alice", "alice@example.com", "pw-alice");
    service.add_user("p", "bob", "Bob", "bob@example.com", "pw-bob");
    BuildSnapshot first = base_snapshot(1);
    add_file(first, "src/A.java", {0, 1, 0, 1});
    service.ingest(first);
}

BuildSnapshot second_build()
{
    BuildSnapshot s = base_snapshot(2, "bob@example.com");
    add_file(s, "src/A.java", {1, 1, 0, 1});
    s.tests = {2, 2, 0, {}};
    return s;
}

}  // namespace

TEST_CASE("commit then load round trips the state")
{
    TempDir dir;
    GameService service(dir.path());
    seed_project(service);
    LoadedProject loaded = load_project(dir.path(), "p");
    CHECK(loaded.recovery.empty());
    CHECK(loaded.orphaned.empty());
    CHECK(loaded.state.users.size() == 2);
    CHECK(loaded.state.last_build == 1);
    CHECK(state_from_json(state_to_json(loaded.state)) == loaded.state);

    ProjectLock lock = ProjectLock::acquire(dir.path(), "p");
    std::int64_t gen = commit_state(dir.path(), lock, loaded.generation, loaded.state, {Json{{"op", "noop"}}});
    CHECK(gen == loaded.generation + 1);
    CHECK(load_project(dir.path(), "p").state == loaded.state);
}

TEST_CASE("only the two newest generations are kept")
{
    TempDir dir;
    GameService service(dir.path());
    seed_project(service);
    int states = 0;
    for (const auto& e : fs::directory_iterator(dir.path() / "p")) {
        states += e.path().filename().string().rfind("state.", 0) == 0 ? 1 : 0;
    }
    CHECK(states == 2);
}

TEST_CASE("unknown and invalid projects")
{
    TempDir dir;
    CHECK(code_of([&] { load_project(dir.path(), "missing"); }) == ErrorCode::unknown_project);
    CHECK(code_of([&] { load_project(dir.path(), "../etc"); }) == ErrorCode::bad_request);
    GameService service(dir.path());
    service.create_project("p", GameConfig{});
    CHECK(code_of([&] { service.create_project("p", GameConfig{}); }) == ErrorCode::project_exists);
}

TEST_CASE("a truncated newest generation falls back to the previous one")
{
    TempDir dir;
    GameService service(dir.path());
    seed_project(service);
    LoadedProject good = load_project(dir.path(), "p");
    fs::path newest = dir.path() / "p" / ("state." + std::to_string(good.generation));
    std::string text = read_file(newest);
    write_file(newest, text.substr(0, text.size() / 2));

    LoadedProject loaded = load_project(dir.path(), "p");
    CHECK(loaded.generation == good.generation - 1);
    REQUIRE_FALSE(loaded.recovery.empty());
    CHECK(loaded.recovery[0].find("skipped damaged state." + std::to_string(good.generation)) != std::string::npos);

    write_file(dir.path() / "p" / ("state." + std::to_string(good.generation - 1)), "{");
    CHECK(code_of([&] { load_project(dir.path(), "p"); }) == ErrorCode::corrupt_state);
}

TEST_CASE("a crash between log append and rename leaves an orphaned command")
{
    TempDir dir;
    GameService service(dir.path());
    seed_project(service);
    LoadedProject before = load_project(dir.path(), "p");
    ProjectLock lock = ProjectLock::acquire(dir.path(), "p");
    BuildSnapshot next_build = second_build();
    archive_snapshot(dir.path(), lock, next_build);
    CommandContext ctx = archive_context(dir.path(), "p");
    Json cmd = {{"op", "build"}, {"build", 2}};
    ProjectState next = before.state;
    apply_command(next, cmd, ctx);

    // the log line costs its bytes; one more unit would be the state temp file
    std::string line = Json{{"gen", before.generation + 1}, {"base", before.generation}, {"cmd", cmd}}.dump() + "\n";
    FaultPlan plan{static_cast<std::int64_t>(line.size()), 0};
    CHECK_THROWS_AS(commit_state(dir.path(), lock, before.generation, next, {cmd}, &plan), InjectedFault);

    LoadedProject after = load_project(dir.path(), "p");
    CHECK(after.generation == before.generation);
    CHECK(after.state == before.state);
    REQUIRE(after.orphaned.size() == 1);
    CHECK(after.orphaned[0].command == cmd);
    CHECK(replay(committed_history(read_log(dir.path(), "p"), after.generation), ctx) == after.state);

    // replaying the orphan on top reproduces what the crashed commit meant to install
    std::vector<LogEntry> with_orphan = committed_history(read_log(dir.path(), "p"), after.generation);
    with_orphan.push_back(after.orphaned[0]);
    CHECK(replay(with_orphan, ctx) == next);

    // a retry skips the orphan's generation and its history excludes the orphan
    std::int64_t gen = commit_state(dir.path(), lock, after.generation, next, {cmd});
    CHECK(gen == before.generation + 2);
    LoadedProject retried = load_project(dir.path(), "p");
    CHECK(retried.orphaned.empty());
    CHECK(replay(committed_history(read_log(dir.path(), "p"), gen), ctx) == next);
}

TEST_CASE("every crash point leaves the old or the new state")
{
    TempDir dir;
    GameService service(dir.path());
    service.create_project("p", GameConfig{});
    service.add_user("p", "alice", "Alice", "alice@example.com", "pw-alice");
    LoadedProject before = load_project(dir.path(), "p");
    CommandContext ctx = archive_context(dir.path(), "p");
    Json cmd = {{"op", "add_team"}, {"team", "core"}, {"display_name", "Core"}};
    ProjectState next = before.state;
    apply_command(next, cmd, ctx);

    CrashSweep sweep = crash_sweep(dir.path(), "p", next, cmd, ctx, 13);
    for (const auto& f : sweep.failures) {
        INFO(f);
    }
    CHECK(sweep.failures.empty());
    CHECK(sweep.points > static_cast<std::int64_t>(state_to_json(next).dump(1).size()));
    CHECK(sweep.loaded_old + sweep.loaded_new == sweep.points);
    CHECK(sweep.loaded_new >= 1);
    CHECK(sweep.retries > 10);
}

TEST_CASE("a torn log tail is reported and repaired by the next commit")
{
    TempDir dir;
    GameService service(dir.path());
    seed_project(service);
    fs::path log = dir.path() / "p" / "events.log";
    std::string text = read_file(log);
    write_file(log, text + "{\"gen\": 99, \"ba");
    LoadedProject loaded = load_project(dir.path(), "p");
    REQUIRE(loaded.recovery.size() == 1);
    CHECK(loaded.recovery[0].find("incomplete line") != std::string::npos);
    service.set_avatar("p", "alice", 7);
    CHECK(load_project(dir.path(), "p").recovery.empty());
    CHECK(read_log(dir.path(), "p").size() == 5);
}

TEST_CASE("committing without the lock is refused")
{
    TempDir dir;
    GameService service(dir.path());
    seed_project(service);
    LoadedProject loaded = load_project(dir.path(), "p");
    ProjectLock none;
    CHECK(code_of([&] { commit_state(dir.path(), none, loaded.generation, loaded.state, {}); }) ==
          ErrorCode::lock_not_held);
    ProjectLock released = ProjectLock::acquire(dir.path(), "p");
    released.release();
    CHECK(code_of([&] { commit_state(dir.path(), released, loaded.generation, loaded.state, {}); }) ==
          ErrorCode::lock_not_held);
    CHECK(code_of([&] { archive_snapshot(dir.path(), none, second_build()); }) == ErrorCode::lock_not_held);
}

TEST_CASE("a held lock excludes other writers")
{
    TempDir dir;
    GameService service(dir.path());
    seed_project(service);
    ProjectLock held = ProjectLock::acquire(dir.path(), "p");
    ErrorCode busy = ErrorCode::bad_request;
    std::thread other([&] { busy = code_of([&] { ProjectLock::acquire(dir.path(), "p", false); }); });
    other.join();
    CHECK(busy == ErrorCode::lock_busy);
    held.release();
    CHECK_NOTHROW(ProjectLock::acquire(dir.path(), "p", false));
}

TEST_CASE("concurrent writers serialise")
{
    TempDir dir;
    GameService service(dir.path());
    seed_project(service);
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&, i] { service.set_avatar("p", i % 2 == 0 ? "alice" : "bob", 1 + i); });
    }
    for (auto& t : threads) {
        t.join();
    }
    LoadedProject loaded = load_project(dir.path(), "p");
    CHECK(loaded.recovery.empty());
    CHECK(read_log(dir.path(), "p").size() == 4 + 8);
    CHECK(replay(committed_history(read_log(dir.path(), "p"), loaded.generation),
                 archive_context(dir.path(), "p")) == loaded.state);
}

TEST_CASE("archived snapshots round trip")
{
    TempDir dir;
    GameService service(dir.path());
    seed_project(service);
    auto s = load_snapshot(dir.path(), "p", 1);
    REQUIRE(s);
    CHECK(s->build_number == 1);
    CHECK_FALSE(load_snapshot(dir.path(), "p", 5));
}

TEST_CASE("a project catalog overrides the shipped one")
{
    TempDir dir;
    GameService service(dir.path());
    seed_project(service);
    CHECK(load_project_catalog(dir.path(), "p").size() == 17);
    write_file(dir.path() / "p" / "achievements.json", "[]");
    CHECK(load_project_catalog(dir.path(), "p").empty());
}
