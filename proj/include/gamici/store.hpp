#pragma once

// Plain-file persistence for one data directory:
//
//   <data>/<project>/state.<gen>        full state documents (last two kept)
//   <data>/<project>/events.log         one JSON line per committed command
//   <data>/<project>/snapshots/<n>.json archived build snapshots
//   <data>/<project>/achievements.json  optional catalog override
//   <data>/<project>/.lock              advisory writer lock

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gamici/achievement.hpp"
#include "gamici/json.hpp"
#include "gamici/snapshot.hpp"
#include "gamici/state.hpp"

namespace gamici {

namespace fs = std::filesystem;

/// Exclusive writer lock on one project (flock on <project>/.lock). Also
/// excludes other threads of the same process, since every lock opens its own
/// file description.
class ProjectLock {
public:
    ProjectLock() = default;
    /// Blocks until the lock is free, or throws lock_busy when `wait` is false.
    /// Throws unknown_project when the project directory does not exist.
    static ProjectLock acquire(const fs::path& data_dir, const std::string& project, bool wait = true);

    ProjectLock(ProjectLock&& other) noexcept;
    ProjectLock& operator=(ProjectLock&& other) noexcept;
    ProjectLock(const ProjectLock&) = delete;
    ProjectLock& operator=(const ProjectLock&) = delete;
    ~ProjectLock();

    bool holds(const fs::path& data_dir, const std::string& project) const;
    void release() noexcept;

private:
    int fd_ = -1;
    fs::path dir_;
    std::string project_;
};

/// Thrown by the write path when a FaultPlan runs out; simulates the process
/// dying at that point.
class InjectedFault : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Byte budget for one commit. Every byte written costs one unit, the rename
/// and the cleanup of old generations one unit each.
struct FaultPlan {
    std::int64_t budget = INT64_MAX;
    std::int64_t used = 0;
};

struct LogEntry {
    std::int64_t generation = 0;
    /// Generation the command was applied on top of.
    std::int64_t base = 0;
    Json command;
};

struct LoadedProject {
    ProjectState state;
    std::int64_t generation = 0;
    /// Human-readable notes about anything skipped on the way (damaged
    /// generations, torn log tail). Empty on a clean load.
    std::vector<std::string> recovery;
    /// Logged commands whose state generation never landed, oldest first.
    std::vector<LogEntry> orphaned;
};

fs::path project_dir(const fs::path& data_dir, const std::string& project);
bool project_exists(const fs::path& data_dir, const std::string& project);

/// Creates the directory and commits generation 1. Throws project_exists.
void create_project_files(const fs::path& data_dir, const ProjectState& initial, const Json& command);

/// Highest loadable generation. Throws unknown_project, or corrupt_state when
/// no generation loads (never repairs anything).
LoadedProject load_project(const fs::path& data_dir, const std::string& project);

/// Appends `events` to the log, then atomically installs `state` as a new
/// generation (temp file, fsync, rename, directory fsync) and prunes all but
/// the two newest generations. Returns the new generation number. Throws
/// lock_not_held, storage_error, or InjectedFault under a FaultPlan.
std::int64_t commit_state(const fs::path& data_dir, const ProjectLock& lock, std::int64_t base_generation,
                          const ProjectState& state, const std::vector<Json>& events,
                          FaultPlan* faults = nullptr);

/// Complete log lines in order; a torn last line is skipped.
std::vector<LogEntry> read_log(const fs::path& data_dir, const std::string& project);

/// The entries that lead to `head`, following base links backwards.
std::vector<LogEntry> committed_history(const std::vector<LogEntry>& log, std::int64_t head);

void archive_snapshot(const fs::path& data_dir, const ProjectLock& lock, const BuildSnapshot& snapshot);
std::optional<BuildSnapshot> load_snapshot(const fs::path& data_dir, const std::string& project,
                                           std::int64_t build);

/// The project's achievements.json when present, else the shipped catalog.
Catalog load_project_catalog(const fs::path& data_dir, const std::string& project);

}  // namespace gamici
