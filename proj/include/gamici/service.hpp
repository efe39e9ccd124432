#pragma once

// Every mutation of a project is a logged command. The same apply_command
// runs live (under the project lock) and when replaying events.log, so a
// replayed log reproduces the committed state.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gamici/challenge.hpp"
#include "gamici/json.hpp"
#include "gamici/orchestrator.hpp"
#include "gamici/state.hpp"
#include "gamici/store.hpp"

namespace gamici {

struct CommandContext {
    std::function<std::optional<BuildSnapshot>(std::int64_t build)> snapshot;
    Catalog catalog;
};

struct CommandOutcome {
    std::optional<CycleResult> cycle;
    std::vector<ActionEvent> events;
};

/// State right after a create_project command.
ProjectState initial_state(const Json& create_command);

/// Applies one logged command. Engine errors propagate unchanged.
CommandOutcome apply_command(ProjectState& state, const Json& command, const CommandContext& ctx);

/// Rebuilds a state from scratch out of `entries` (the first must create the
/// project).
ProjectState replay(const std::vector<LogEntry>& entries, const CommandContext& ctx);

/// Context reading snapshots from the project archive.
CommandContext archive_context(const fs::path& data_dir, const std::string& project);

struct NewUser {
    std::string id;
    std::string password;
};

/// Transactional front door used by both the CLI and the HTTP API.
class GameService {
public:
    explicit GameService(fs::path data_dir);

    const fs::path& data_dir() const noexcept { return data_dir_; }

    /// Returns the ingest token (shown once).
    std::string create_project(const std::string& project, const GameConfig& config);
    /// Returns the initial password; a random one when `password` is empty.
    NewUser add_user(const std::string& project, const std::string& user, const std::string& display_name,
                     const std::string& email, const std::string& password = {});
    void add_team(const std::string& project, const std::string& team, const std::string& display_name);
    void assign_team(const std::string& project, const std::string& user, const std::string& team);

    /// Validates, archives and runs one build cycle, then commits.
    CycleResult ingest(const BuildSnapshot& snapshot);

    /// Throws bad_credentials or unknown_project. Returns "<project>.<32 hex>".
    std::string login(const std::string& project, const std::string& user, const std::string& password);
    void logout(const std::string& token);
    /// User id behind a session token; throws unauthorized.
    std::string authenticate(const std::string& token, const std::string& project) const;
    bool ingest_token_valid(const std::string& project, const std::string& token) const;

    std::vector<ActionEvent> act(const std::string& project, const std::string& user, const PlayerAction& action,
                                 std::int64_t now);
    void set_avatar(const std::string& project, const std::string& user, int avatar_id);

    LoadedProject load(const std::string& project) const;
    Catalog catalog(const std::string& project) const;
    std::optional<BuildSnapshot> snapshot(const std::string& project, std::int64_t build) const;

    /// Project id encoded in a session token, or empty.
    static std::string token_project(const std::string& token);

private:
    CommandOutcome mutate(const std::string& project, const Json& command,
                          std::optional<BuildSnapshot> incoming = std::nullopt);

    fs::path data_dir_;
};

/// Current wall-clock time in seconds.
std::int64_t unix_now();

}  // namespace gamici
