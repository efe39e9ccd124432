#pragma once

// The per-build game cycle.

#include <cstdint>
#include <string>
#include <vector>

#include "gamici/achievement.hpp"
#include "gamici/rng.hpp"
#include "gamici/snapshot.hpp"
#include "gamici/state.hpp"

namespace gamici {

struct CycleResult {
    ProjectState state;
    /// Notifications created by this cycle, in emission order.
    std::vector<Notification> notifications;
    SnapshotDelta delta;
    std::vector<std::string> solved;
    std::vector<std::string> invalidated;
    std::vector<std::string> generated;
    std::vector<std::string> quests_completed;
    std::vector<EarnedAchievement> earned;
};

/// The generator a cycle draws from: config.rng_seed (or a hash of the
/// project id) with the build number as stream.
Rng cycle_rng(const ProjectState& state, std::int64_t build_number);

/// Runs one cycle against a copy of `state`; `state` itself is never touched.
/// `prev` is the snapshot of the last processed build (null on the first).
/// Throws stale_build, project_mismatch or invariant_violation.
CycleResult run_build_cycle(const ProjectState& state, const BuildSnapshot* prev,
                            const BuildSnapshot& cur, const Catalog& catalog, Rng& rng);

}  // namespace gamici
