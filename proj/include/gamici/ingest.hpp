#pragma once

// Conversion of external report formats into the canonical snapshot.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gamici/snapshot.hpp"

namespace gamici {

/// Build-level fields that coverage reports do not carry.
struct SnapshotMeta {
    std::string project_id;
    std::int64_t build_number = 1;
    std::int64_t timestamp = 0;
    BuildResult build_result = BuildResult::success;
    CommitInfo commit;
    TestSummary tests;
};

/// LCOV tracefile -> snapshot. Handles TN/SF/FN/DA/BRDA/end_of_record; other
/// record types (FNDA, FNF, LF, ...) are skipped. Malformed records raise
/// Error{malformed_record} with the 1-based input line.
BuildSnapshot convert_lcov(std::string_view lcov_text, const SnapshotMeta& meta);

/// Accepts PIT's mutations.xml or a JSON array of canonical mutant objects.
std::vector<MutantRecord> parse_mutation_report(std::string_view text,
                                                const BuildSnapshot& base);

/// Accepts a SonarQube issues export ({"issues": [...]}) or a JSON array of
/// canonical smell objects.
std::vector<SmellRecord> parse_smell_report(std::string_view text);

struct MergeResult {
    BuildSnapshot snapshot;
    std::vector<std::string> warnings;
};

/// Replaces mutants/smells/sources of `base` with the given ones (absent
/// arguments keep the base values) and stamps content hashes on every
/// coverage line whose source text is known. A report entry on a path with
/// neither coverage nor source gets a warning and an empty coverage entry for
/// that path, so the result still validates.
MergeResult merge_reports(const BuildSnapshot& base,
                          const std::optional<std::vector<MutantRecord>>& mutants,
                          const std::optional<std::vector<SmellRecord>>& smells,
                          const std::map<std::string, std::string>& sources);

/// Default class name for a coverage path: the file stem.
std::string class_name_for_path(std::string_view path);

}  // namespace gamici
