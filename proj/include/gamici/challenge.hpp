#pragma once

// Challenge generation, evaluation and the player-facing lifecycle.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gamici/config.hpp"
#include "gamici/rng.hpp"
#include "gamici/snapshot.hpp"

namespace gamici {

struct ProjectState;

enum class ChallengeState { active, stored, solved, rejected, invalidated };

std::string_view to_string(ChallengeState s) noexcept;
std::optional<ChallengeState> challenge_state_from_string(std::string_view name) noexcept;

/// Where in the code a challenge points. Build/Test challenges carry an empty
/// anchor.
struct CodeAnchor {
    std::string path;
    std::optional<int> line_number;
    /// Last highlighted line for multi-line targets (smells, methods).
    std::optional<int> end_line;
    std::optional<std::string> content_hash;
    std::optional<std::string> class_name;
    std::optional<std::string> method_name;

    bool empty() const noexcept;
    bool operator==(const CodeAnchor&) const = default;
};

/// Numbers captured at creation that the solve condition compares against.
struct ChallengeBaseline {
    std::int64_t tests_total = 0;
    std::optional<int> covered_lines;
    std::optional<int> covered_branches;
    std::optional<MutantKey> mutant;
    std::optional<SmellKey> smell;

    bool operator==(const ChallengeBaseline&) const = default;
};

struct Challenge {
    std::string id;
    ChallengeType type = ChallengeType::Test;
    std::string assignee;
    std::int64_t created_build = 0;
    ChallengeState state = ChallengeState::active;
    CodeAnchor anchor;
    ChallengeBaseline baseline;
    int points = 1;
    std::optional<std::string> rejection_reason;
    std::optional<std::string> sent_by;
    /// One-line description shown in lists and tooltips.
    std::string detail;
    /// Expandable extra text (mutant or smell description).
    std::string extra;
    /// (covered, total) branches of the anchored line at creation.
    std::optional<std::pair<int, int>> branch_info;
    /// Build in which the challenge was solved or invalidated.
    std::optional<std::int64_t> closed_build;

    bool operator==(const Challenge&) const = default;
};

enum class Evaluation { solved, pending, invalidated };

std::string_view to_string(Evaluation e) noexcept;

/// Coverage challenge kinds only. Classes and methods are weighted by
/// uncovered lines + 1, lines uniformly; one rng draw picks by inverting the
/// cumulative weights. nullopt when the snapshot offers no eligible target.
std::optional<CodeAnchor> pick_coverage_target(const BuildSnapshot& snapshot, ChallengeType kind,
                                               Rng& rng);

/// Fills the user's active slots. Appends the new challenges to `state` and
/// returns copies of them.
std::vector<Challenge> generate_challenges(ProjectState& state, const BuildSnapshot& snapshot,
                                           const std::string& user, Rng& rng);

/// Decides what `cur` means for one challenge. `author_is_assignee` gates
/// solving under strict attribution.
Evaluation evaluate_challenge(const Challenge& challenge, const BuildSnapshot& prev,
                              const BuildSnapshot& cur, const GameConfig& config,
                              bool author_is_assignee);

enum class ActionKind { reject, undo_reject, store, activate, send };

std::string_view to_string(ActionKind k) noexcept;

struct PlayerAction {
    ActionKind kind = ActionKind::store;
    std::string challenge_id;
    std::string reason;
    std::string recipient;
};

enum class ActionEventKind { challenge_rejected, challenge_restored, challenge_stored,
                             challenge_activated, challenge_sent, challenge_received };

struct ActionEvent {
    ActionEventKind kind;
    std::string user;
    std::string challenge_id;
};

/// Applies one player action on behalf of `actor`. Violated preconditions
/// throw distinct Error codes and leave `state` untouched. Rejections, sends
/// and receives are counted for the next build cycle.
std::vector<ActionEvent> apply_player_action(ProjectState& state, const std::string& actor,
                                             const PlayerAction& action);

}  // namespace gamici
