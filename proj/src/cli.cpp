#include "gamici/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gamici/api.hpp"
#include "gamici/demo.hpp"
#include "gamici/error.hpp"
#include "gamici/ingest.hpp"
#include "gamici/scoring.hpp"
#include "gamici/service.hpp"

namespace gamici {

namespace {

std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::not_found, "cannot read " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string default_data_dir()
{
    const char* env = std::getenv("GAMICI_DATA_DIR");
    return env != nullptr && *env != '\0' ? env : "gamici-data";
}

struct ConvertArgs {
    std::string coverage;
    std::string mutants;
    std::string smells;
    std::string src_root;
    std::string project = "project";
    std::int64_t build = 1;
    std::int64_t timestamp = 0;
    std::string result = "success";
    std::string sha = std::string(40, '0');
    std::string author = "ci@localhost";
    std::vector<std::string> changed;
    std::int64_t tests_total = 0;
    std::int64_t tests_failed = 0;
};

BuildSnapshot convert(const ConvertArgs& a, std::ostream& err)
{
    SnapshotMeta meta;
    meta.project_id = a.project;
    meta.build_number = a.build;
    meta.timestamp = a.timestamp;
    if (a.result != "success" && a.result != "failure") {
        throw Error(ErrorCode::bad_request, "--result must be success or failure");
    }
    meta.build_result = a.result == "success" ? BuildResult::success : BuildResult::failure;
    meta.commit = {a.sha, a.author, a.changed};
    meta.tests.total = a.tests_total;
    meta.tests.failed = a.tests_failed;
    meta.tests.passed = a.tests_total - a.tests_failed;

    BuildSnapshot base = convert_lcov(read_text(a.coverage), meta);
    std::optional<std::vector<MutantRecord>> mutants;
    std::optional<std::vector<SmellRecord>> smells;
    if (!a.mutants.empty()) {
        mutants = parse_mutation_report(read_text(a.mutants), base);
    }
    if (!a.smells.empty()) {
        smells = parse_smell_report(read_text(a.smells));
    }
    std::map<std::string, std::string> sources;
    if (!a.src_root.empty()) {
        std::set<std::string> paths;
        for (const auto& f : base.files) {
            paths.insert(f.path);
        }
        for (const auto& m : mutants.value_or(std::vector<MutantRecord>{})) {
            paths.insert(m.file);
        }
        for (const auto& s : smells.value_or(std::vector<SmellRecord>{})) {
            paths.insert(s.file);
        }
        for (const auto& p : paths) {
            fs::path full = fs::path(a.src_root) / p;
            if (fs::is_regular_file(full)) {
                sources[p] = read_text(full.string());
            } else {
                err << "gamici: warning: no source for " << p << " under " << a.src_root << "\n";
            }
        }
    }
    MergeResult merged = merge_reports(base, mutants, smells, sources);
    for (const auto& w : merged.warnings) {
        err << "gamici: warning: " << w << "\n";
    }
    return merged.snapshot;
}

Json leaderboard_json(const ProjectState& s, LeaderboardScope scope)
{
    Json rows = Json::array();
    std::size_t rank = 0;
    for (const auto& r : leaderboard(s, scope)) {
        rows.push_back({{"rank", ++rank},
                        {"subject", r.subject},
                        {"display_name", r.display_name},
                        {"points", r.points},
                        {"challenges_solved", r.challenges_solved},
                        {"quests_completed", r.quests_completed},
                        {"achievements_earned", r.achievements_earned}});
    }
    return rows;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"gamici: a CI-agnostic gamification server for software testing", "gamici"};
    app.require_subcommand(1);
    std::string data_dir = default_data_dir();
    app.add_option("--data-dir", data_dir, "Data directory (default: $GAMICI_DATA_DIR or ./gamici-data)");

    // serve
    ServeOptions serve_opts;
    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
    serve_cmd->add_option("--port", serve_opts.port, "TCP port")->check(CLI::Range(1, 65535));
    serve_cmd->add_option("--host", serve_opts.host, "Listen address");
    serve_cmd->add_option("--web-root", serve_opts.web_root, "Directory with a built dashboard to serve at /");

    // project create
    std::string project;
    std::optional<std::int64_t> seed;
    std::string config_file;
    auto* project_cmd = app.add_subcommand("project", "Manage projects");
    project_cmd->require_subcommand(1);
    auto* project_create = project_cmd->add_subcommand("create", "Create a project and print its ingest token");
    project_create->add_option("id", project, "Project id")->required();
    project_create->add_option("--seed", seed, "Fixed seed for challenge and quest generation");
    project_create->add_option("--config", config_file, "Game config file (JSON); defaults to the shipped config");

    // user add
    std::string user, email, display_name, password;
    auto* user_cmd = app.add_subcommand("user", "Manage users");
    user_cmd->require_subcommand(1);
    auto* user_add = user_cmd->add_subcommand("add", "Register a user and print the initial password");
    user_add->add_option("id", user, "User id (login name)")->required();
    user_add->add_option("--project", project, "Project id")->required();
    user_add->add_option("--email", email, "Commit author email used for attribution")->required();
    user_add->add_option("--name", display_name, "Display name");
    user_add->add_option("--password", password, "Initial password (random when omitted)");

    // team add / assign
    std::string team;
    auto* team_cmd = app.add_subcommand("team", "Manage teams");
    team_cmd->require_subcommand(1);
    auto* team_add = team_cmd->add_subcommand("add", "Create a team");
    team_add->add_option("id", team, "Team id")->required();
    team_add->add_option("--project", project, "Project id")->required();
    team_add->add_option("--name", display_name, "Display name");
    auto* team_assign = team_cmd->add_subcommand("assign", "Put a user into a team");
    team_assign->add_option("user", user, "User id")->required();
    team_assign->add_option("team", team, "Team id")->required();
    team_assign->add_option("--project", project, "Project id")->required();

    // ingest
    std::string snapshot_file;
    auto* ingest_cmd = app.add_subcommand("ingest", "Run a build cycle for a canonical snapshot file");
    ingest_cmd->add_option("snapshot", snapshot_file, "Snapshot file ('-' for stdin)")->required();
    ingest_cmd->add_option("--project", project, "Project id")->required();

    // convert lcov
    ConvertArgs conv;
    auto* convert_cmd = app.add_subcommand("convert", "Convert reports to a canonical snapshot");
    convert_cmd->require_subcommand(1);
    auto* lcov_cmd = convert_cmd->add_subcommand("lcov", "LCOV tracefile (+ PIT / SonarQube reports)");
    lcov_cmd->add_option("--coverage", conv.coverage, "LCOV tracefile")->required();
    lcov_cmd->add_option("--mutants", conv.mutants, "PIT mutations.xml or canonical mutant array");
    lcov_cmd->add_option("--smells", conv.smells, "SonarQube issues export or canonical smell array");
    lcov_cmd->add_option("--src-root", conv.src_root, "Source root for line hashes and source text");
    lcov_cmd->add_option("--project", conv.project, "Project id");
    lcov_cmd->add_option("--build", conv.build, "Build number")->check(CLI::PositiveNumber);
    lcov_cmd->add_option("--timestamp", conv.timestamp, "Build time (unix seconds)");
    lcov_cmd->add_option("--result", conv.result, "success or failure");
    lcov_cmd->add_option("--sha", conv.sha, "Commit sha (40 hex chars)");
    lcov_cmd->add_option("--author", conv.author, "Commit author email");
    lcov_cmd->add_option("--changed-file", conv.changed, "Changed file (repeatable)");
    lcov_cmd->add_option("--tests-total", conv.tests_total, "Number of tests");
    lcov_cmd->add_option("--tests-failed", conv.tests_failed, "Number of failed tests");

    // leaderboard
    std::string scope = "users";
    bool table = false;
    auto* board_cmd = app.add_subcommand("leaderboard", "Print a leaderboard");
    board_cmd->add_option("--project", project, "Project id")->required();
    board_cmd->add_option("--scope", scope, "users or teams")->check(CLI::IsMember({"users", "teams"}));
    board_cmd->add_flag("--table", table, "Human-readable table instead of JSON");

    // seed-demo
    DemoOptions demo;
    auto* demo_cmd = app.add_subcommand("seed-demo", "Create a demo project with a synthetic build history");
    demo_cmd->add_option("--project", demo.project, "Project id")->required();
    demo_cmd->add_option("--builds", demo.builds, "Number of builds")->check(CLI::PositiveNumber);
    demo_cmd->add_option("--seed", demo.seed, "Seed");

    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        GameService service{fs::path(data_dir)};
        if (serve_cmd->parsed()) {
            std::error_code ec;
            fs::create_directories(data_dir, ec);
            if (!serve(service, serve_opts)) {
                err << "gamici: cannot listen on " << serve_opts.host << ":" << serve_opts.port << "\n";
                return 1;
            }
            return 0;
        }
        if (project_create->parsed()) {
            GameConfig config = config_from_json(Json::parse(shipped_config_text()));
            if (!config_file.empty()) {
                Json doc;
                try {
                    doc = Json::parse(read_text(config_file));
                } catch (const nlohmann::json::parse_error& e) {
                    throw Error(ErrorCode::syntax_error, config_file + ": " + e.what());
                }
                config = config_from_json(doc, config);
            }
            if (seed) {
                config.rng_seed = *seed;
            }
            std::string token = service.create_project(project, config);
            out << Json{{"project", project}, {"ingest_token", token}}.dump(2) << "\n";
            return 0;
        }
        if (user_add->parsed()) {
            NewUser u = service.add_user(project, user, display_name, email, password);
            out << Json{{"project", project}, {"user", u.id}, {"password", u.password}}.dump(2) << "\n";
            return 0;
        }
        if (team_add->parsed()) {
            service.add_team(project, team, display_name);
            return 0;
        }
        if (team_assign->parsed()) {
            service.assign_team(project, user, team);
            return 0;
        }
        if (ingest_cmd->parsed()) {
            std::string text;
            if (snapshot_file == "-") {
                std::ostringstream buf;
                buf << std::cin.rdbuf();
                text = buf.str();
            } else {
                text = read_text(snapshot_file);
            }
            BuildSnapshot snapshot = parse_snapshot(text);
            if (snapshot.project_id != project) {
                throw Error(ErrorCode::project_mismatch,
                            "snapshot is for project '" + snapshot.project_id + "', not '" + project + "'");
            }
            CycleResult r = service.ingest(snapshot);
            out << Json{{"project", project},
                        {"build", snapshot.build_number},
                        {"solved", r.solved},
                        {"invalidated", r.invalidated},
                        {"generated", r.generated},
                        {"quests_completed", r.quests_completed},
                        {"achievements_earned", r.earned.size()},
                        {"notifications", r.notifications.size()}}
                       .dump(2)
                << "\n";
            return 0;
        }
        if (lcov_cmd->parsed()) {
            out << serialize_snapshot(convert(conv, err));
            return 0;
        }
        if (board_cmd->parsed()) {
            ProjectState s = service.load(project).state;
            auto which = scope == "users" ? LeaderboardScope::users : LeaderboardScope::teams;
            if (table) {
                for (const auto& row : leaderboard_json(s, which)) {
                    out << row["rank"].get<int>() << ". " << row["display_name"].get<std::string>() << "  "
                        << row["points"].get<std::int64_t>() << " pts  " << row["challenges_solved"].get<std::int64_t>()
                        << " challenges  " << row["quests_completed"].get<std::int64_t>() << " quests  "
                        << row["achievements_earned"].get<std::int64_t>() << " achievements\n";
                }
            } else {
                out << Json{{"project", project}, {"scope", scope}, {"rows", leaderboard_json(s, which)}}.dump(2)
                    << "\n";
            }
            return 0;
        }
        if (demo_cmd->parsed()) {
            DemoReport r = run_demo(service, demo);
            Json users = Json::array();
            for (const auto& u : r.users) {
                users.push_back({{"user", u.id}, {"password", u.password}});
            }
            out << Json{{"project", r.project}, {"ingest_token", r.ingest_token}, {"users", users}, {"builds", r.builds}}
                       .dump(2)
                << "\n";
            return 0;
        }
    } catch (const Error& e) {
        err << "gamici: " << e.what() << " [" << to_string(e.code()) << "]\n";
        return 1;
    } catch (const std::exception& e) {
        err << "gamici: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace gamici
