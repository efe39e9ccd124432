#pragma once

// Synthetic project history for demos and end-to-end scenarios: a small Java
// shop with two developers taking turns committing and working on their
// challenges.

#include <cstdint>
#include <string>
#include <vector>

#include "gamici/service.hpp"

namespace gamici {

struct DemoOptions {
    std::string project = "demo";
    int builds = 6;
    std::uint64_t seed = 0;
    std::int64_t start_time = 1700000000;
};

struct DemoReport {
    std::string project;
    std::string ingest_token;
    std::vector<NewUser> users;
    int builds = 0;
};

/// Creates the project (rng_seed = options.seed, users alice and bob in team
/// "core") and runs `builds` cycles through `service`. The game outcome
/// depends only on the options.
DemoReport run_demo(GameService& service, const DemoOptions& options);

}  // namespace gamici
