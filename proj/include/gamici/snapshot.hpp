#pragma once

// Canonical per-build record consumed by the game engine, plus the pure
// functions that compare two builds and summarize one.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "gamici/json.hpp"

namespace gamici {

enum class BuildResult { success, failure };
enum class MutantStatus { killed, survived, no_coverage };
enum class Severity { info, minor, major, critical };

std::string_view to_string(BuildResult r) noexcept;
std::string_view to_string(MutantStatus s) noexcept;
std::string_view to_string(Severity s) noexcept;

struct CommitInfo {
    std::string sha;
    std::string author_email;
    std::vector<std::string> changed_files;

    bool operator==(const CommitInfo&) const = default;
};

struct TestSummary {
    std::int64_t total = 0;
    std::int64_t passed = 0;
    std::int64_t failed = 0;
    /// Empty means "not reported"; otherwise one entry per test.
    std::vector<std::string> names;

    bool operator==(const TestSummary&) const = default;
};

struct MethodRange {
    std::string name;
    int first_line = 1;
    int last_line = 1;

    bool operator==(const MethodRange&) const = default;
};

struct LineCoverage {
    int line_number = 1;
    std::int64_t hits = 0;
    int covered_branches = 0;
    int total_branches = 0;
    std::optional<std::string> content_hash;

    bool covered() const noexcept { return hits > 0; }
    bool operator==(const LineCoverage&) const = default;
};

struct FileCoverage {
    std::string path;
    std::string class_name;
    std::vector<MethodRange> methods;
    std::vector<LineCoverage> lines;

    const LineCoverage* line(int line_number) const noexcept;
    const MethodRange* method(std::string_view name) const noexcept;
    int covered_line_count() const noexcept;
    int uncovered_line_count() const noexcept;
    /// Covered lines within [first, last].
    int covered_in_range(int first, int last) const noexcept;
    int uncovered_in_range(int first, int last) const noexcept;

    bool operator==(const FileCoverage&) const = default;
};

struct MutantKey {
    std::string file;
    int line_number = 0;
    std::string mutator_id;
    int index = 0;

    auto operator<=>(const MutantKey&) const = default;
    bool operator==(const MutantKey&) const = default;
};

struct MutantRecord {
    std::string file;
    int line_number = 1;
    std::string mutator_id;
    int index = 0;
    MutantStatus status = MutantStatus::survived;
    std::string description;

    MutantKey key() const { return {file, line_number, mutator_id, index}; }
    bool operator==(const MutantRecord&) const = default;
};

struct SmellKey {
    std::string file;
    int start_line = 0;
    std::string rule_id;

    auto operator<=>(const SmellKey&) const = default;
    bool operator==(const SmellKey&) const = default;
};

struct SmellRecord {
    std::string file;
    int start_line = 1;
    int end_line = 1;
    std::string rule_id;
    Severity severity = Severity::minor;
    std::string message;

    SmellKey key() const { return {file, start_line, rule_id}; }
    bool operator==(const SmellRecord&) const = default;
};

struct BuildSnapshot {
    std::string project_id;
    std::int64_t build_number = 1;
    std::int64_t timestamp = 0;
    BuildResult build_result = BuildResult::success;
    CommitInfo commit;
    TestSummary tests;
    std::vector<FileCoverage> files;
    std::vector<MutantRecord> mutants;
    std::vector<SmellRecord> smells;
    /// path -> full file text; empty when no sources were attached.
    std::map<std::string, std::string> sources;

    const FileCoverage* file(std::string_view path) const noexcept;
    /// True when the path has coverage or attached source text.
    bool knows_path(std::string_view path) const noexcept;
    const MutantRecord* mutant(const MutantKey& key) const noexcept;

    bool operator==(const BuildSnapshot&) const = default;
};

struct CoveredLine {
    std::string path;
    int line_number = 0;

    auto operator<=>(const CoveredLine&) const = default;
    bool operator==(const CoveredLine&) const = default;
};

struct SnapshotDelta {
    std::int64_t tests_added = 0;
    std::vector<CoveredLine> newly_covered_lines;
    std::int64_t newly_covered_branch_count = 0;
    std::vector<MutantKey> mutants_killed;
    std::vector<SmellKey> smells_removed;
    bool build_fixed = false;

    bool empty() const noexcept;
    bool operator==(const SnapshotDelta&) const = default;
};

struct ProjectMetrics {
    double line_coverage = 1.0;
    double branch_coverage = 1.0;
    std::int64_t tests_total = 0;
    std::int64_t surviving_mutants = 0;
    std::int64_t smell_count = 0;

    bool operator==(const ProjectMetrics&) const = default;
};

/// Lines may drift this far between builds and still count as the same line
/// when their content hashes agree.
inline constexpr int reanchor_window = 5;

/// Throws Error{invariant_violation} naming the first broken invariant and the
/// entity that breaks it.
void validate(const BuildSnapshot& snapshot);

/// Parses and validates a canonical snapshot document.
BuildSnapshot parse_snapshot(std::string_view text);
BuildSnapshot snapshot_from_json(const Json& doc);
Json snapshot_to_json(const BuildSnapshot& snapshot);
MutantRecord mutant_from_json(const Json& obj, const std::string& ctx = "mutant.");
SmellRecord smell_from_json(const Json& obj, const std::string& ctx = "smell.");
std::string serialize_snapshot(const BuildSnapshot& snapshot);

/// Finds the line in `file` that corresponds to a line recorded earlier.
/// With a recorded hash: the closest line within the window carrying the same
/// hash wins (lower line number on ties); failing that, the line with the
/// exact number is accepted only if it carries no hash. Without a recorded
/// hash: exact line number.
const LineCoverage* match_line(const FileCoverage& file, int line_number,
                               const std::optional<std::string>& hash) noexcept;

/// True when a smell in `cur` still matches `key` (same file and rule, start
/// line within the window of `reference_line`).
bool smell_present(const BuildSnapshot& cur, const SmellKey& key, int reference_line) noexcept;

SnapshotDelta diff_snapshots(const BuildSnapshot& prev, const BuildSnapshot& cur);

ProjectMetrics project_metrics(const BuildSnapshot& snapshot) noexcept;

/// Counts covered lines of class / method in `snapshot`; nullopt when the
/// anchored entity is gone.
std::optional<int> class_covered_lines(const BuildSnapshot& snapshot, std::string_view path,
                                       std::string_view class_name) noexcept;
std::optional<int> method_covered_lines(const BuildSnapshot& snapshot, std::string_view path,
                                        std::string_view method_name) noexcept;

}  // namespace gamici
