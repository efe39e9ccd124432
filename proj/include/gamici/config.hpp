#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "gamici/json.hpp"

namespace gamici {

enum class ChallengeType {
    Build,
    Test,
    ClassCoverage,
    MethodCoverage,
    LineCoverage,
    BranchCoverage,
    Mutation,
    Smell,
};

inline constexpr std::array<ChallengeType, 8> all_challenge_types = {
    ChallengeType::Build,          ChallengeType::Test,           ChallengeType::ClassCoverage,
    ChallengeType::MethodCoverage, ChallengeType::LineCoverage,   ChallengeType::BranchCoverage,
    ChallengeType::Mutation,       ChallengeType::Smell,
};

std::string_view to_string(ChallengeType t) noexcept;
std::optional<ChallengeType> challenge_type_from_string(std::string_view name) noexcept;

enum class Attribution { strict, lenient };

struct GameConfig {
    int max_active_challenges = 3;
    int max_stored_challenges = 2;
    Attribution attribution = Attribution::strict;
    std::optional<std::int64_t> rng_seed;
    /// Indexed by ChallengeType.
    std::array<int, 8> points = {1, 1, 2, 2, 2, 3, 4, 2};
    int quest_target_default = 3;
    int quest_points = 5;

    int points_for(ChallengeType t) const noexcept { return points[static_cast<std::size_t>(t)]; }

    bool operator==(const GameConfig&) const = default;
};

/// Reads a config document. Keys absent from `doc` keep the value in `base`.
/// Throws Error{bad_request} on out-of-range values.
GameConfig config_from_json(const Json& doc, GameConfig base = {});
Json config_to_json(const GameConfig& config);

/// The config file shipped in data/config.json, embedded at build time.
std::string_view shipped_config_text() noexcept;

}  // namespace gamici
