#pragma once

// Fixtures, random generators and independent oracles shared by the unit
// tests and the acceptance binary. The oracles are deliberately naive: they
// recompute everything from scratch with plain loops and never call the
// engine function they check.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gamici/achievement.hpp"
#include "gamici/challenge.hpp"
#include "gamici/rng.hpp"
#include "gamici/scoring.hpp"
#include "gamici/service.hpp"
#include "gamici/snapshot.hpp"
#include "gamici/state.hpp"

namespace gamici::testing {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const noexcept { return path_; }

private:
    fs::path path_;
};

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, const std::string& text);

/// Directory holding the checked-in fixtures (tests/data).
fs::path data_dir();

/// Project "p" with users alice/bob (alice@example.com, bob@example.com) in
/// team "core"; default config.
ProjectState two_user_state();

/// Smallest valid snapshot for project "p".
BuildSnapshot base_snapshot(std::int64_t build = 1, const std::string& author = "alice@example.com");

/// Adds a file whose lines are given as hit counts (line numbers 1..n).
FileCoverage& add_file(BuildSnapshot& s, const std::string& path, const std::vector<std::int64_t>& hits);

std::string random_sha(Rng& rng);

/// File stem, e.g. "src/a/Cart.java" -> "Cart".
std::string class_name_for(const std::string& path);

/// A valid snapshot with random files, lines, branches, hashes, methods,
/// mutants, smells, tests and sources.
BuildSnapshot random_snapshot(Rng& rng, std::int64_t build = 1);

/// A random snapshot with sources (hence line hashes) for every file.
BuildSnapshot world_snapshot(Rng& rng, const std::string& project, const std::string& author);

/// Mutates a world snapshot into a plausible next build: lines shift, gain or
/// lose coverage, methods and files disappear, mutants get killed or vanish,
/// smells move or go away, tests come and go, builds break and get fixed.
BuildSnapshot evolve(const BuildSnapshot& prev, Rng& rng, const std::vector<std::string>& authors);

// ---------------------------------------------------------------------------
// Oracles

SnapshotDelta naive_delta(const BuildSnapshot& prev, const BuildSnapshot& cur);
ProjectMetrics naive_metrics(const BuildSnapshot& s);
Evaluation naive_evaluate(const Challenge& c, const BuildSnapshot& prev, const BuildSnapshot& cur,
                          const GameConfig& config, const std::string& assignee_email);

/// Leaderboard computed by folding score events from scratch.
std::vector<LeaderboardRow> naive_leaderboard(const ProjectState& state, LeaderboardScope scope);

/// Per-user point totals recomputed from the raw state document: solved
/// challenges at their type's configured points plus completed quests at the
/// configured quest points.
std::map<std::string, std::int64_t> points_from_outcomes(const Json& state_doc);

/// Every (achievement, user) pair whose condition held after some prefix of
/// the counter history, with the first index at which it held.
struct CounterStep {
    std::map<std::string, UserCounters> users;
    ProjectMetrics metrics;
};
std::map<std::pair<std::string, std::string>, std::size_t>
naive_earn_history(const Catalog& catalog, const std::vector<CounterStep>& steps);

// ---------------------------------------------------------------------------
// Crash simulation

struct CrashSweep {
    /// Fault points tried (every byte of the commit plus rename and cleanup).
    std::int64_t points = 0;
    std::int64_t loaded_old = 0;
    std::int64_t loaded_new = 0;
    /// Fault points after which a retried commit was checked.
    std::int64_t retries = 0;
    /// Crashes that left partial bytes behind and were reported on load.
    std::int64_t reported = 0;
    std::vector<std::string> failures;
};

/// Commits `next` (the result of applying `command` to the project's current
/// state) once per fault point, dying after 0, 1, 2, ... units, and restores
/// the directory between attempts. After each crash the project must load
/// either the old or the new state, its committed log history must replay to
/// what loaded, a crash that left the old state beside a changed log must be
/// reported by the loader, and every `retry_every`-th crash that left the old
/// state is followed by a clean retry whose result must replay to `next`.
CrashSweep crash_sweep(const fs::path& data, const std::string& project, const ProjectState& next,
                       const Json& command, const CommandContext& ctx, std::int64_t retry_every = 97);

}  // namespace gamici::testing
