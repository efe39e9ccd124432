#include "gamici/snapshot.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "gamici/digest.hpp"
#include "gamici/error.hpp"

namespace gamici {

std::string_view to_string(BuildResult r) noexcept
{
    return r == BuildResult::success ? "success" : "failure";
}

std::string_view to_string(MutantStatus s) noexcept
{
    switch (s) {
    case MutantStatus::killed: return "killed";
    case MutantStatus::survived: return "survived";
    case MutantStatus::no_coverage: return "no_coverage";
    }
    return "survived";
}

std::string_view to_string(Severity s) noexcept
{
    switch (s) {
    case Severity::info: return "info";
    case Severity::minor: return "minor";
    case Severity::major: return "major";
    case Severity::critical: return "critical";
    }
    return "minor";
}

// ---------------------------------------------------------------------------
// Lookups

const LineCoverage* FileCoverage::line(int line_number) const noexcept
{
    for (const auto& l : lines) {
        if (l.line_number == line_number) {
            return &l;
        }
    }
    return nullptr;
}

const MethodRange* FileCoverage::method(std::string_view name) const noexcept
{
    for (const auto& m : methods) {
        if (m.name == name) {
            return &m;
        }
    }
    return nullptr;
}

int FileCoverage::covered_line_count() const noexcept
{
    return static_cast<int>(std::count_if(lines.begin(), lines.end(),
                                          [](const LineCoverage& l) { return l.covered(); }));
}

int FileCoverage::uncovered_line_count() const noexcept
{
    return static_cast<int>(lines.size()) - covered_line_count();
}

int FileCoverage::covered_in_range(int first, int last) const noexcept
{
    int n = 0;
    for (const auto& l : lines) {
        if (l.line_number >= first && l.line_number <= last && l.covered()) {
            ++n;
        }
    }
    return n;
}

int FileCoverage::uncovered_in_range(int first, int last) const noexcept
{
    int n = 0;
    for (const auto& l : lines) {
        if (l.line_number >= first && l.line_number <= last && !l.covered()) {
            ++n;
        }
    }
    return n;
}

const FileCoverage* BuildSnapshot::file(std::string_view path) const noexcept
{
    for (const auto& f : files) {
        if (f.path == path) {
            return &f;
        }
    }
    return nullptr;
}

bool BuildSnapshot::knows_path(std::string_view path) const noexcept
{
    return file(path) != nullptr || sources.find(std::string(path)) != sources.end();
}

const MutantRecord* BuildSnapshot::mutant(const MutantKey& key) const noexcept
{
    for (const auto& m : mutants) {
        if (m.file == key.file && m.line_number == key.line_number &&
            m.mutator_id == key.mutator_id && m.index == key.index) {
            return &m;
        }
    }
    return nullptr;
}

bool SnapshotDelta::empty() const noexcept
{
    return tests_added == 0 && newly_covered_lines.empty() && newly_covered_branch_count == 0 &&
           mutants_killed.empty() && smells_removed.empty() && !build_fixed;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

[[noreturn]] void violated(std::string_view type, std::string_view invariant,
                           const std::string& entity)
{
    std::ostringstream os;
    os << type << " invariant violated: " << invariant << " (" << entity << ")";
    throw Error(ErrorCode::invariant_violation, os.str());
}

std::string where(const std::string& path, int line)
{
    return path + ":" + std::to_string(line);
}

}  // namespace

void validate(const BuildSnapshot& s)
{
    if (s.project_id.empty()) {
        violated("BuildSnapshot", "project non-empty", "project");
    }
    if (s.build_number < 1) {
        violated("BuildSnapshot", "build_number positive", std::to_string(s.build_number));
    }
    if (s.timestamp < 0) {
        violated("BuildSnapshot", "timestamp non-negative", std::to_string(s.timestamp));
    }
    if (s.commit.sha.size() != 40 || !is_hex(s.commit.sha)) {
        violated("CommitInfo", "sha is 40 hex chars", s.commit.sha);
    }
    if (s.commit.author_email.empty()) {
        violated("CommitInfo", "author_email non-empty", s.commit.sha);
    }

    const auto& t = s.tests;
    if (t.total < 0 || t.passed < 0 || t.failed < 0) {
        violated("TestSummary", "counts non-negative", "tests");
    }
    if (t.total != t.passed + t.failed) {
        violated("TestSummary", "total = passed + failed",
                 std::to_string(t.total) + " != " + std::to_string(t.passed) + " + " +
                     std::to_string(t.failed));
    }
    if (!t.names.empty() && static_cast<std::int64_t>(t.names.size()) != t.total) {
        violated("TestSummary", "length(test_names) = total", std::to_string(t.names.size()));
    }

    std::set<std::string> paths;
    for (const auto& f : s.files) {
        if (f.path.empty()) {
            violated("FileCoverage", "path non-empty", f.class_name);
        }
        if (!paths.insert(f.path).second) {
            violated("FileCoverage", "path unique within snapshot", f.path);
        }
        std::vector<MethodRange> methods = f.methods;
        std::sort(methods.begin(), methods.end(),
                  [](const MethodRange& a, const MethodRange& b) { return a.first_line < b.first_line; });
        for (std::size_t i = 0; i < methods.size(); ++i) {
            const auto& m = methods[i];
            if (m.first_line < 1 || m.last_line < m.first_line) {
                violated("FileCoverage", "method range 1-based and first <= last",
                         f.path + "#" + m.name);
            }
            if (i > 0 && methods[i - 1].last_line >= m.first_line) {
                violated("FileCoverage", "method ranges non-overlapping",
                         f.path + "#" + methods[i - 1].name + "/" + m.name);
            }
        }
        std::set<int> numbers;
        for (const auto& l : f.lines) {
            if (l.line_number < 1) {
                violated("LineCoverage", "line_number positive", where(f.path, l.line_number));
            }
            if (!numbers.insert(l.line_number).second) {
                violated("LineCoverage", "line_number unique within file", where(f.path, l.line_number));
            }
            if (l.hits < 0 || l.covered_branches < 0 || l.total_branches < 0) {
                violated("LineCoverage", "counters non-negative", where(f.path, l.line_number));
            }
            if (l.covered_branches > l.total_branches) {
                violated("LineCoverage", "covered_branches <= total_branches",
                         where(f.path, l.line_number));
            }
            if (l.content_hash && (l.content_hash->size() != 16 || !is_hex(*l.content_hash))) {
                violated("LineCoverage", "content_hash is 16 hex chars", where(f.path, l.line_number));
            }
        }
    }

    std::set<MutantKey> mutant_keys;
    for (const auto& m : s.mutants) {
        if (m.line_number < 1) {
            violated("MutantRecord", "line_number positive", where(m.file, m.line_number));
        }
        if (m.index < 0) {
            violated("MutantRecord", "index non-negative", where(m.file, m.line_number));
        }
        if (!mutant_keys.insert(m.key()).second) {
            violated("MutantRecord", "(file, line, mutator, index) unique",
                     where(m.file, m.line_number) + " " + m.mutator_id + "#" + std::to_string(m.index));
        }
        if (!s.knows_path(m.file)) {
            violated("MutantRecord", "file appears in coverage or sources", m.file);
        }
    }
    for (const auto& sm : s.smells) {
        if (sm.start_line < 1) {
            violated("SmellRecord", "start_line positive", where(sm.file, sm.start_line));
        }
        if (sm.start_line > sm.end_line) {
            violated("SmellRecord", "start_line <= end_line",
                     sm.file + ":" + std::to_string(sm.start_line) + "-" + std::to_string(sm.end_line));
        }
        if (!s.knows_path(sm.file)) {
            violated("SmellRecord", "file appears in coverage or sources", sm.file);
        }
    }
}

// ---------------------------------------------------------------------------
// Canonical document

namespace {

[[noreturn]] void schema_error(const std::string& field, std::string_view expected)
{
    throw Error(ErrorCode::syntax_error, "field '" + field + "': expected " + std::string(expected));
}

const Json& member(const Json& obj, const char* key, const std::string& ctx)
{
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw Error(ErrorCode::syntax_error, "missing field '" + ctx + key + "'");
    }
    return *it;
}

std::int64_t get_int(const Json& obj, const char* key, const std::string& ctx)
{
    const Json& v = member(obj, key, ctx);
    if (!v.is_number_integer()) {
        schema_error(ctx + key, "integer");
    }
    return v.get<std::int64_t>();
}

int get_int32(const Json& obj, const char* key, const std::string& ctx)
{
    auto v = get_int(obj, key, ctx);
    if (v < INT32_MIN || v > INT32_MAX) {
        schema_error(ctx + key, "32-bit integer");
    }
    return static_cast<int>(v);
}

std::string get_string(const Json& obj, const char* key, const std::string& ctx)
{
    const Json& v = member(obj, key, ctx);
    if (!v.is_string()) {
        schema_error(ctx + key, "string");
    }
    return v.get<std::string>();
}

const Json& get_array(const Json& obj, const char* key, const std::string& ctx)
{
    const Json& v = member(obj, key, ctx);
    if (!v.is_array()) {
        schema_error(ctx + key, "array");
    }
    return v;
}

const Json& get_object(const Json& obj, const char* key, const std::string& ctx)
{
    const Json& v = member(obj, key, ctx);
    if (!v.is_object()) {
        schema_error(ctx + key, "object");
    }
    return v;
}

std::vector<std::string> get_strings(const Json& obj, const char* key, const std::string& ctx)
{
    std::vector<std::string> out;
    for (const auto& v : get_array(obj, key, ctx)) {
        if (!v.is_string()) {
            schema_error(ctx + key, "array of strings");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

template <typename Enum, std::size_t N>
Enum get_enum(const Json& obj, const char* key, const std::string& ctx,
              const std::pair<std::string_view, Enum> (&table)[N])
{
    std::string s = get_string(obj, key, ctx);
    for (const auto& [name, value] : table) {
        if (name == s) {
            return value;
        }
    }
    schema_error(ctx + key, "one of the documented enum values, got '" + s + "'");
}

constexpr std::pair<std::string_view, BuildResult> result_names[] = {
    {"success", BuildResult::success}, {"failure", BuildResult::failure}};
constexpr std::pair<std::string_view, MutantStatus> status_names[] = {
    {"killed", MutantStatus::killed},
    {"survived", MutantStatus::survived},
    {"no_coverage", MutantStatus::no_coverage}};
constexpr std::pair<std::string_view, Severity> severity_names[] = {
    {"info", Severity::info}, {"minor", Severity::minor}, {"major", Severity::major},
    {"critical", Severity::critical}};

}  // namespace

MutantRecord mutant_from_json(const Json& m, const std::string& ctx)
{
    if (!m.is_object()) {
        schema_error(ctx, "object");
    }
    return {get_string(m, "file", ctx),       get_int32(m, "line", ctx),
            get_string(m, "mutator", ctx),    get_int32(m, "index", ctx),
            get_enum(m, "status", ctx, status_names), get_string(m, "description", ctx)};
}

SmellRecord smell_from_json(const Json& m, const std::string& ctx)
{
    if (!m.is_object()) {
        schema_error(ctx, "object");
    }
    return {get_string(m, "file", ctx),  get_int32(m, "start", ctx),
            get_int32(m, "end", ctx),    get_string(m, "rule", ctx),
            get_enum(m, "severity", ctx, severity_names), get_string(m, "message", ctx)};
}

BuildSnapshot snapshot_from_json(const Json& doc)
{
    if (!doc.is_object()) {
        throw Error(ErrorCode::syntax_error, "snapshot document must be an object");
    }
    BuildSnapshot s;
    s.project_id = get_string(doc, "project", "");
    s.build_number = get_int(doc, "build", "");
    s.build_result = get_enum(doc, "result", "", result_names);
    s.timestamp = get_int(doc, "timestamp", "");

    const Json& commit = get_object(doc, "commit", "");
    s.commit.sha = get_string(commit, "sha", "commit.");
    s.commit.author_email = get_string(commit, "author", "commit.");
    s.commit.changed_files = get_strings(commit, "changed_files", "commit.");

    const Json& tests = get_object(doc, "tests", "");
    s.tests.total = get_int(tests, "total", "tests.");
    s.tests.passed = get_int(tests, "passed", "tests.");
    s.tests.failed = get_int(tests, "failed", "tests.");
    s.tests.names = get_strings(tests, "names", "tests.");

    const Json& coverage = get_array(doc, "coverage", "");
    for (std::size_t i = 0; i < coverage.size(); ++i) {
        const Json& f = coverage[i];
        std::string ctx = "coverage[" + std::to_string(i) + "].";
        if (!f.is_object()) {
            schema_error(ctx, "object");
        }
        FileCoverage fc;
        fc.path = get_string(f, "path", ctx);
        fc.class_name = get_string(f, "class", ctx);
        const Json& methods = get_array(f, "methods", ctx);
        for (std::size_t j = 0; j < methods.size(); ++j) {
            std::string mctx = ctx + "methods[" + std::to_string(j) + "].";
            fc.methods.push_back({get_string(methods[j], "name", mctx),
                                  get_int32(methods[j], "first", mctx),
                                  get_int32(methods[j], "last", mctx)});
        }
        const Json& lines = get_array(f, "lines", ctx);
        for (std::size_t j = 0; j < lines.size(); ++j) {
            std::string lctx = ctx + "lines[" + std::to_string(j) + "].";
            const Json& l = lines[j];
            if (!l.is_object()) {
                schema_error(lctx, "object");
            }
            LineCoverage lc;
            lc.line_number = get_int32(l, "line", lctx);
            lc.hits = get_int(l, "hits", lctx);
            lc.covered_branches = get_int32(l, "cb", lctx);
            lc.total_branches = get_int32(l, "tb", lctx);
            if (auto it = l.find("hash"); it != l.end() && !it->is_null()) {
                lc.content_hash = get_string(l, "hash", lctx);
            }
            fc.lines.push_back(std::move(lc));
        }
        s.files.push_back(std::move(fc));
    }

    const Json& mutants = get_array(doc, "mutants", "");
    for (std::size_t i = 0; i < mutants.size(); ++i) {
        std::string ctx = "mutants[" + std::to_string(i) + "].";
        s.mutants.push_back(mutant_from_json(mutants[i], ctx));
    }

    const Json& smells = get_array(doc, "smells", "");
    for (std::size_t i = 0; i < smells.size(); ++i) {
        std::string ctx = "smells[" + std::to_string(i) + "].";
        s.smells.push_back(smell_from_json(smells[i], ctx));
    }

    if (auto it = doc.find("sources"); it != doc.end()) {
        if (!it->is_object()) {
            schema_error("sources", "object");
        }
        for (const auto& [path, text] : it->items()) {
            if (!text.is_string()) {
                schema_error("sources." + path, "string");
            }
            s.sources.emplace(path, text.get<std::string>());
        }
    }

    validate(s);
    return s;
}

BuildSnapshot parse_snapshot(std::string_view text)
{
    Json doc;
    try {
        doc = Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::syntax_error,
                    "syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    return snapshot_from_json(doc);
}

Json snapshot_to_json(const BuildSnapshot& s)
{
    Json doc = Json::object();
    doc["project"] = s.project_id;
    doc["build"] = s.build_number;
    doc["result"] = to_string(s.build_result);
    doc["timestamp"] = s.timestamp;
    doc["commit"] = {{"sha", s.commit.sha},
                     {"author", s.commit.author_email},
                     {"changed_files", s.commit.changed_files}};
    doc["tests"] = {{"total", s.tests.total},
                    {"passed", s.tests.passed},
                    {"failed", s.tests.failed},
                    {"names", s.tests.names}};
    Json coverage = Json::array();
    for (const auto& f : s.files) {
        Json methods = Json::array();
        for (const auto& m : f.methods) {
            methods.push_back({{"name", m.name}, {"first", m.first_line}, {"last", m.last_line}});
        }
        Json lines = Json::array();
        for (const auto& l : f.lines) {
            Json line = {{"line", l.line_number},
                         {"hits", l.hits},
                         {"cb", l.covered_branches},
                         {"tb", l.total_branches}};
            if (l.content_hash) {
                line["hash"] = *l.content_hash;
            }
            lines.push_back(std::move(line));
        }
        coverage.push_back({{"path", f.path},
                            {"class", f.class_name},
                            {"methods", std::move(methods)},
                            {"lines", std::move(lines)}});
    }
    doc["coverage"] = std::move(coverage);
    Json mutants = Json::array();
    for (const auto& m : s.mutants) {
        mutants.push_back({{"file", m.file},
                           {"line", m.line_number},
                           {"mutator", m.mutator_id},
                           {"index", m.index},
                           {"status", to_string(m.status)},
                           {"description", m.description}});
    }
    doc["mutants"] = std::move(mutants);
    Json smells = Json::array();
    for (const auto& m : s.smells) {
        smells.push_back({{"file", m.file},
                          {"start", m.start_line},
                          {"end", m.end_line},
                          {"rule", m.rule_id},
                          {"severity", to_string(m.severity)},
                          {"message", m.message}});
    }
    doc["smells"] = std::move(smells);
    Json sources = Json::object();
    for (const auto& [path, text] : s.sources) {
        sources[path] = text;
    }
    doc["sources"] = std::move(sources);
    return doc;
}

std::string serialize_snapshot(const BuildSnapshot& snapshot)
{
    return snapshot_to_json(snapshot).dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Cross-build matching

const LineCoverage* match_line(const FileCoverage& file, int line_number,
                               const std::optional<std::string>& hash) noexcept
{
    if (hash) {
        const LineCoverage* best = nullptr;
        for (const auto& l : file.lines) {
            if (!l.content_hash || *l.content_hash != *hash) {
                continue;
            }
            int dist = std::abs(l.line_number - line_number);
            if (dist > reanchor_window) {
                continue;
            }
            if (best == nullptr) {
                best = &l;
                continue;
            }
            int best_dist = std::abs(best->line_number - line_number);
            if (dist < best_dist || (dist == best_dist && l.line_number < best->line_number)) {
                best = &l;
            }
        }
        if (best != nullptr) {
            return best;
        }
        const LineCoverage* exact = file.line(line_number);
        return exact != nullptr && !exact->content_hash ? exact : nullptr;
    }
    return file.line(line_number);
}

namespace {

// Where a line recorded in `prev` sits in `cur`, falling back to its old number.
int reanchor(const BuildSnapshot& prev, const BuildSnapshot& cur, const std::string& path, int line)
{
    const FileCoverage* pf = prev.file(path);
    const FileCoverage* cf = cur.file(path);
    if (pf == nullptr || cf == nullptr) {
        return line;
    }
    const LineCoverage* pl = pf->line(line);
    if (pl == nullptr || !pl->content_hash) {
        return line;
    }
    const LineCoverage* cl = match_line(*cf, line, pl->content_hash);
    return cl != nullptr ? cl->line_number : line;
}

}  // namespace

bool smell_present(const BuildSnapshot& cur, const SmellKey& key, int reference_line) noexcept
{
    for (const auto& s : cur.smells) {
        if (s.file == key.file && s.rule_id == key.rule_id &&
            std::abs(s.start_line - reference_line) <= reanchor_window) {
            return true;
        }
    }
    return false;
}

SnapshotDelta diff_snapshots(const BuildSnapshot& prev, const BuildSnapshot& cur)
{
    if (prev.project_id != cur.project_id) {
        throw Error(ErrorCode::project_mismatch,
                    "cannot diff snapshots of '" + prev.project_id + "' and '" + cur.project_id + "'");
    }
    SnapshotDelta d;
    d.tests_added = cur.tests.total - prev.tests.total;
    d.build_fixed = prev.build_result == BuildResult::failure && cur.build_result == BuildResult::success;

    for (const auto& cf : cur.files) {
        const FileCoverage* pf = prev.file(cf.path);
        for (const auto& cl : cf.lines) {
            const LineCoverage* pl =
                pf != nullptr ? match_line(*pf, cl.line_number, cl.content_hash) : nullptr;
            if (cl.covered() && (pl == nullptr || !pl->covered())) {
                d.newly_covered_lines.push_back({cf.path, cl.line_number});
            }
            if (pl != nullptr && cl.covered_branches > pl->covered_branches) {
                d.newly_covered_branch_count += cl.covered_branches - pl->covered_branches;
            }
        }
    }
    std::sort(d.newly_covered_lines.begin(), d.newly_covered_lines.end());

    std::set<MutantKey> killed;
    for (const auto& pm : prev.mutants) {
        if (pm.status != MutantStatus::survived) {
            continue;
        }
        const MutantRecord* cm = cur.mutant(pm.key());
        if (cm != nullptr && cm->status == MutantStatus::killed) {
            killed.insert(pm.key());
        }
    }
    d.mutants_killed.assign(killed.begin(), killed.end());

    std::set<SmellKey> removed;
    for (const auto& ps : prev.smells) {
        int ref = reanchor(prev, cur, ps.file, ps.start_line);
        if (!smell_present(cur, ps.key(), ref)) {
            removed.insert(ps.key());
        }
    }
    d.smells_removed.assign(removed.begin(), removed.end());
    return d;
}

ProjectMetrics project_metrics(const BuildSnapshot& s) noexcept
{
    std::int64_t lines = 0;
    std::int64_t covered = 0;
    std::int64_t branches = 0;
    std::int64_t covered_branches = 0;
    for (const auto& f : s.files) {
        for (const auto& l : f.lines) {
            ++lines;
            covered += l.covered() ? 1 : 0;
            branches += l.total_branches;
            covered_branches += l.covered_branches;
        }
    }
    ProjectMetrics m;
    m.line_coverage = lines == 0 ? 1.0 : static_cast<double>(covered) / static_cast<double>(lines);
    m.branch_coverage =
        branches == 0 ? 1.0 : static_cast<double>(covered_branches) / static_cast<double>(branches);
    m.tests_total = s.tests.total;
    m.surviving_mutants = std::count_if(s.mutants.begin(), s.mutants.end(), [](const MutantRecord& r) {
        return r.status == MutantStatus::survived;
    });
    m.smell_count = static_cast<std::int64_t>(s.smells.size());
    return m;
}

std::optional<int> class_covered_lines(const BuildSnapshot& snapshot, std::string_view path,
                                       std::string_view class_name) noexcept
{
    const FileCoverage* f = snapshot.file(path);
    if (f == nullptr || f->class_name != class_name) {
        return std::nullopt;
    }
    return f->covered_line_count();
}

std::optional<int> method_covered_lines(const BuildSnapshot& snapshot, std::string_view path,
                                        std::string_view method_name) noexcept
{
    const FileCoverage* f = snapshot.file(path);
    if (f == nullptr) {
        return std::nullopt;
    }
    const MethodRange* m = f->method(method_name);
    if (m == nullptr) {
        return std::nullopt;
    }
    return f->covered_in_range(m->first_line, m->last_line);
}

}  // namespace gamici
