#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gamici/digest.hpp"

#ifndef GAMICI_TEST_DATA_DIR
#error "GAMICI_TEST_DATA_DIR must point at tests/data"
#endif

namespace gamici::testing {

TempDir::TempDir()
{
    fs::path base = fs::temp_directory_path();
    for (int attempt = 0;; ++attempt) {
        fs::path candidate = base / ("gamici-test-" + random_hex(8));
        if (fs::create_directory(candidate)) {
            path_ = candidate;
            return;
        }
        if (attempt > 100) {
            throw std::runtime_error("cannot create a temp directory");
        }
    }
}

TempDir::~TempDir()
{
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& text)
{
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

fs::path data_dir()
{
    return fs::path(GAMICI_TEST_DATA_DIR);
}

ProjectState two_user_state()
{
    ProjectState s;
    s.project_id = "p";
    s.teams["core"] = {"core", "Core"};
    for (const char* id : {"alice", "bob"}) {
        UserProfile u;
        u.id = id;
        u.display_name = std::string(1, static_cast<char>(id[0] - 'a' + 'A')) + (id + 1);
        u.email = std::string(id) + "@example.com";
        u.team_id = "core";
        s.users[id] = u;
    }
    return s;
}

BuildSnapshot base_snapshot(std::int64_t build, const std::string& author)
{
    BuildSnapshot s;
    s.project_id = "p";
    s.build_number = build;
    s.timestamp = 1000 + build * 60;
    s.commit.sha = std::string(40, 'a');
    s.commit.author_email = author;
    return s;
}

FileCoverage& add_file(BuildSnapshot& s, const std::string& path, const std::vector<std::int64_t>& hits)
{
    FileCoverage f;
    f.path = path;
    f.class_name = class_name_for(path);
    for (std::size_t i = 0; i < hits.size(); ++i) {
        LineCoverage l;
        l.line_number = static_cast<int>(i) + 1;
        l.hits = hits[i];
        f.lines.push_back(l);
    }
    s.files.push_back(std::move(f));
    return s.files.back();
}

std::string class_name_for(const std::string& path)
{
    auto slash = path.find_last_of('/');
    std::string stem = slash == std::string::npos ? path : path.substr(slash + 1);
    auto dot = stem.find('.');
    return dot == std::string::npos ? stem : stem.substr(0, dot);
}

std::string random_sha(Rng& rng)
{
    static const char hex[] = "0123456789abcdef";
    std::string out;
    for (int i = 0; i < 40; ++i) {
        out += hex[rng.index(16)];
    }
    return out;
}

namespace {

bool chance(Rng& rng, double p)
{
    return rng.draw() < p;
}

int between(Rng& rng, int lo, int hi)
{
    return lo + static_cast<int>(rng.index(static_cast<std::size_t>(hi - lo + 1)));
}

const char* const text_pool[] = {
    "}", "return x;", "int y = x + 1;", "if (a > b) {", "  log(\"é ∑ \\\"q\\\"\");", "",
    "for (int i = 0; i < n; ++i) {", "  total += i;", "else {", "throw new IllegalStateException();",
};

std::string random_text(Rng& rng, int serial)
{
    if (chance(rng, 0.35)) {
        return text_pool[rng.index(std::size(text_pool))];
    }
    return "stmt_" + std::to_string(serial) + "(" + std::to_string(rng.index(1000)) + ");";
}

std::vector<std::string> split_lines(const std::string& text)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) {
        out.push_back(cur);
    }
    return out;
}

std::string join_lines(const std::vector<std::string>& lines)
{
    std::string out;
    for (const auto& l : lines) {
        out += l + "\n";
    }
    return out;
}

void set_tests(BuildSnapshot& s, Rng& rng, std::int64_t total)
{
    s.tests = {};
    s.tests.total = std::max<std::int64_t>(0, total);
    s.tests.failed = s.build_result == BuildResult::failure && s.tests.total > 0
                         ? between(rng, 1, static_cast<int>(std::min<std::int64_t>(3, s.tests.total)))
                         : 0;
    s.tests.passed = s.tests.total - s.tests.failed;
}

void stamp_hashes(BuildSnapshot& s)
{
    for (auto& f : s.files) {
        auto it = s.sources.find(f.path);
        if (it == s.sources.end()) {
            continue;
        }
        auto lines = split_lines(it->second);
        for (auto& l : f.lines) {
            if (l.line_number <= static_cast<int>(lines.size())) {
                l.content_hash = content_hash(lines[static_cast<std::size_t>(l.line_number - 1)]);
            } else {
                l.content_hash.reset();
            }
        }
    }
}

}  // namespace

BuildSnapshot random_snapshot(Rng& rng, std::int64_t build)
{
    BuildSnapshot s;
    s.project_id = chance(rng, 0.2) ? "proj-ü" : "p";
    s.build_number = build;
    s.timestamp = static_cast<std::int64_t>(rng.index(2000000000));
    s.build_result = chance(rng, 0.3) ? BuildResult::failure : BuildResult::success;
    s.commit.sha = random_sha(rng);
    if (chance(rng, 0.2)) {
        std::transform(s.commit.sha.begin(), s.commit.sha.end(), s.commit.sha.begin(), ::toupper);
    }
    s.commit.author_email = chance(rng, 0.5) ? "alice@example.com" : "bob \"b\" <bob@example.com>";

    int serial = 0;
    const int nfiles = between(rng, 0, 4);
    for (int fi = 0; fi < nfiles; ++fi) {
        FileCoverage f;
        f.path = "src/pkg/F" + std::to_string(fi) + (chance(rng, 0.5) ? ".java" : ".cpp");
        f.class_name = chance(rng, 0.8) ? class_name_for(f.path) : "Other" + std::to_string(fi);
        const int length = between(rng, 1, 30);
        std::vector<std::string> text;
        for (int i = 0; i < length; ++i) {
            text.push_back(random_text(rng, serial++));
        }
        for (int n = 1; n <= length; ++n) {
            if (!chance(rng, 0.6)) {
                continue;
            }
            LineCoverage l;
            l.line_number = n;
            l.hits = chance(rng, 0.4) ? 0 : between(rng, 1, 1000);
            l.total_branches = chance(rng, 0.7) ? 0 : 2 * between(rng, 1, 2);
            l.covered_branches = l.hits > 0 ? between(rng, 0, l.total_branches) : 0;
            if (chance(rng, 0.5)) {
                l.content_hash = content_hash(text[static_cast<std::size_t>(n - 1)]);
            }
            f.lines.push_back(l);
        }
        for (int first = 1; first <= length;) {
            int last = std::min(length, first + between(rng, 0, 6));
            if (chance(rng, 0.5)) {
                f.methods.push_back({"m" + std::to_string(first), first, last});
            }
            first = last + 1 + between(rng, 0, 2);
        }
        if (chance(rng, 0.6)) {
            s.sources[f.path] = join_lines(text);
        }
        for (int m = between(rng, 0, 3); m > 0; --m) {
            MutantRecord r;
            r.file = f.path;
            r.line_number = between(rng, 1, length);
            r.mutator_id = chance(rng, 0.5) ? "MATH" : "NEGATE_CONDITIONALS";
            r.index = between(rng, 0, 3);
            r.status = static_cast<MutantStatus>(rng.index(3));
            r.description = chance(rng, 0.5) ? "" : "replaced \"+\" with \"-\"";
            if (s.mutant(r.key()) == nullptr) {
                s.mutants.push_back(r);
            }
        }
        for (int m = between(rng, 0, 2); m > 0; --m) {
            SmellRecord r;
            r.file = f.path;
            r.start_line = between(rng, 1, length);
            r.end_line = r.start_line + between(rng, 0, 5);
            r.rule_id = chance(rng, 0.5) ? "java:S1172" : "cpp:S125";
            r.severity = static_cast<Severity>(rng.index(4));
            r.message = "Remove this\tthing";
            s.smells.push_back(r);
        }
        s.files.push_back(std::move(f));
    }
    if (chance(rng, 0.3)) {
        s.sources["docs/README.md"] = "# notes\nno coverage here\n";
        SmellRecord r{"docs/README.md", 1, 2, "md:S1", Severity::info, "heading"};
        s.smells.push_back(r);
    }
    for (const auto& f : s.files) {
        if (chance(rng, 0.5)) {
            s.commit.changed_files.push_back(f.path);
        }
    }
    set_tests(s, rng, between(rng, 0, 40));
    if (chance(rng, 0.3)) {
        for (std::int64_t i = 0; i < s.tests.total; ++i) {
            s.tests.names.push_back("suite.test_" + std::to_string(i));
        }
    }
    return s;
}

BuildSnapshot evolve(const BuildSnapshot& prev, Rng& rng, const std::vector<std::string>& authors)
{
    BuildSnapshot s = prev;
    s.build_number = prev.build_number + 1;
    s.timestamp = prev.timestamp + between(rng, 60, 7200);
    s.build_result = chance(rng, 0.2) ? BuildResult::failure : BuildResult::success;
    s.commit.sha = random_sha(rng);
    s.commit.author_email = authors[rng.index(authors.size())];
    s.commit.changed_files.clear();

    static int serial = 100000;
    std::vector<std::string> removed_files;
    for (auto& f : s.files) {
        auto src = s.sources.find(f.path);
        if (src == s.sources.end()) {
            continue;
        }
        auto text = split_lines(src->second);

        // insert or delete a block of lines, moving everything below it
        if (chance(rng, 0.4) && !text.empty()) {
            int at = between(rng, 1, static_cast<int>(text.size()));
            int k = between(rng, 1, 7);
            bool insert = chance(rng, 0.6) || static_cast<int>(text.size()) <= k + 1;
            if (insert) {
                for (int i = 0; i < k; ++i) {
                    text.insert(text.begin() + (at - 1), random_text(rng, serial++));
                }
            } else {
                k = std::min(k, static_cast<int>(text.size()) - at);
                text.erase(text.begin() + (at - 1), text.begin() + (at - 1 + k));
            }
            const int shift = insert ? k : -k;
            auto moved = [&](int n) -> std::optional<int> {
                if (n < at) {
                    return n;
                }
                if (!insert && n < at + k) {
                    return std::nullopt;
                }
                return n + shift;
            };
            std::vector<LineCoverage> lines;
            for (auto l : f.lines) {
                if (auto n = moved(l.line_number)) {
                    l.line_number = *n;
                    lines.push_back(l);
                }
            }
            f.lines = lines;
            std::vector<MethodRange> methods;
            for (auto m : f.methods) {
                auto a = moved(m.first_line);
                auto b = moved(m.last_line);
                if (a && b) {
                    methods.push_back({m.name, *a, *b});
                }
            }
            f.methods = methods;
            for (auto& m : s.mutants) {
                if (m.file == f.path) {
                    m.line_number = moved(m.line_number).value_or(std::max(1, at - 1));
                }
            }
            for (auto& m : s.smells) {
                if (m.file == f.path) {
                    int a = moved(m.start_line).value_or(std::max(1, at - 1));
                    int b = moved(m.end_line).value_or(a);
                    m.start_line = a;
                    m.end_line = std::max(a, b);
                }
            }
            std::set<MutantKey> seen;
            s.mutants.erase(std::remove_if(s.mutants.begin(), s.mutants.end(),
                                           [&](const MutantRecord& m) { return !seen.insert(m.key()).second; }),
                            s.mutants.end());
            src->second = join_lines(text);
            s.commit.changed_files.push_back(f.path);
        }

        // new coverage lines for text that had none
        for (int n = 1; n <= static_cast<int>(text.size()); ++n) {
            if (f.line(n) == nullptr && chance(rng, 0.1)) {
                LineCoverage l;
                l.line_number = n;
                l.total_branches = chance(rng, 0.7) ? 0 : 2;
                f.lines.push_back(l);
            }
        }
        std::sort(f.lines.begin(), f.lines.end(),
                  [](const LineCoverage& a, const LineCoverage& b) { return a.line_number < b.line_number; });
        if (chance(rng, 0.1) && !f.methods.empty()) {
            f.methods.erase(f.methods.begin() + static_cast<std::ptrdiff_t>(rng.index(f.methods.size())));
        }
        if (chance(rng, 0.04)) {
            f.class_name += "Renamed";
        }
        if (chance(rng, 0.04)) {
            removed_files.push_back(f.path);
        }
    }

    for (auto& f : s.files) {
        for (auto& l : f.lines) {
            if (l.hits == 0 && chance(rng, 0.25)) {
                l.hits = between(rng, 1, 9);
            } else if (l.hits > 0 && chance(rng, 0.05)) {
                l.hits = 0;
                l.covered_branches = 0;
            }
            if (l.hits > 0 && l.covered_branches < l.total_branches && chance(rng, 0.3)) {
                ++l.covered_branches;
            }
        }
    }
    for (const auto& path : removed_files) {
        s.files.erase(std::remove_if(s.files.begin(), s.files.end(),
                                     [&](const FileCoverage& f) { return f.path == path; }),
                      s.files.end());
        s.sources.erase(path);
        s.mutants.erase(std::remove_if(s.mutants.begin(), s.mutants.end(),
                                       [&](const MutantRecord& m) { return m.file == path; }),
                        s.mutants.end());
        s.smells.erase(std::remove_if(s.smells.begin(), s.smells.end(),
                                      [&](const SmellRecord& m) { return m.file == path; }),
                       s.smells.end());
    }
    stamp_hashes(s);

    for (auto it = s.mutants.begin(); it != s.mutants.end();) {
        if (chance(rng, 0.08)) {
            it = s.mutants.erase(it);
            continue;
        }
        if (it->status == MutantStatus::survived && chance(rng, 0.2)) {
            it->status = MutantStatus::killed;
        }
        ++it;
    }
    if (!s.files.empty() && chance(rng, 0.3)) {
        const FileCoverage& f = s.files[rng.index(s.files.size())];
        if (!f.lines.empty()) {
            MutantRecord r;
            r.file = f.path;
            r.line_number = f.lines[rng.index(f.lines.size())].line_number;
            r.mutator_id = "VOID_METHOD_CALLS";
            r.index = serial++ % 4;
            r.status = MutantStatus::survived;
            if (s.mutant(r.key()) == nullptr) {
                s.mutants.push_back(r);
            }
        }
    }
    for (auto it = s.smells.begin(); it != s.smells.end();) {
        if (chance(rng, 0.12)) {
            it = s.smells.erase(it);
            continue;
        }
        if (chance(rng, 0.1)) {
            int d = between(rng, -8, 8);
            it->start_line = std::max(1, it->start_line + d);
            it->end_line = std::max(it->start_line, it->end_line + d);
        }
        ++it;
    }
    if (!s.files.empty() && chance(rng, 0.2)) {
        const FileCoverage& f = s.files[rng.index(s.files.size())];
        int start = f.lines.empty() ? 1 : f.lines[rng.index(f.lines.size())].line_number;
        s.smells.push_back({f.path, start, start + between(rng, 0, 3), "java:S3776", Severity::critical,
                            "Cognitive complexity too high"});
    }

    set_tests(s, rng, s.tests.total + between(rng, -2, 4));
    return s;
}

BuildSnapshot world_snapshot(Rng& rng, const std::string& project, const std::string& author)
{
    BuildSnapshot s = random_snapshot(rng, 1);
    s.project_id = project;
    s.commit.author_email = author;
    s.tests.names.clear();
    for (const auto& f : s.files) {
        if (s.sources.find(f.path) == s.sources.end()) {
            int length = 0;
            for (const auto& l : f.lines) {
                length = std::max(length, l.line_number);
            }
            for (const auto& m : f.methods) {
                length = std::max(length, m.last_line);
            }
            for (const auto& m : s.mutants) {
                if (m.file == f.path) {
                    length = std::max(length, m.line_number);
                }
            }
            std::vector<std::string> text;
            for (int i = 0; i < length; ++i) {
                text.push_back("line_" + f.path + "_" + std::to_string(i) + ";");
            }
            s.sources[f.path] = join_lines(text);
        }
    }
    stamp_hashes(s);
    return s;
}

// ---------------------------------------------------------------------------
// Oracles

namespace {

const FileCoverage* find_file(const BuildSnapshot& s, const std::string& path)
{
    for (const auto& f : s.files) {
        if (f.path == path) {
            return &f;
        }
    }
    return nullptr;
}

const LineCoverage* find_line(const FileCoverage& f, int n)
{
    for (const auto& l : f.lines) {
        if (l.line_number == n) {
            return &l;
        }
    }
    return nullptr;
}

/// Identity of a recorded line in another file version: all lines carrying
/// the same hash within +-5 are candidates, nearest first, then lowest line.
const LineCoverage* naive_match(const FileCoverage& f, int line, const std::optional<std::string>& hash)
{
    if (!hash) {
        return find_line(f, line);
    }
    std::vector<const LineCoverage*> candidates;
    for (const auto& l : f.lines) {
        if (l.content_hash == hash && std::abs(l.line_number - line) <= 5) {
            candidates.push_back(&l);
        }
    }
    if (!candidates.empty()) {
        std::sort(candidates.begin(), candidates.end(), [&](const LineCoverage* a, const LineCoverage* b) {
            int da = std::abs(a->line_number - line);
            int db = std::abs(b->line_number - line);
            return da != db ? da < db : a->line_number < b->line_number;
        });
        return candidates.front();
    }
    const LineCoverage* exact = find_line(f, line);
    return exact != nullptr && !exact->content_hash ? exact : nullptr;
}

bool knows(const BuildSnapshot& s, const std::string& path)
{
    return find_file(s, path) != nullptr || s.sources.count(path) > 0;
}

}  // namespace

SnapshotDelta naive_delta(const BuildSnapshot& prev, const BuildSnapshot& cur)
{
    SnapshotDelta d;
    d.tests_added = cur.tests.total - prev.tests.total;
    d.build_fixed = prev.build_result == BuildResult::failure && cur.build_result == BuildResult::success;

    std::set<std::pair<std::string, int>> newly;
    for (const auto& cf : cur.files) {
        for (const auto& cl : cf.lines) {
            const FileCoverage* pf = find_file(prev, cf.path);
            const LineCoverage* pl = pf != nullptr ? naive_match(*pf, cl.line_number, cl.content_hash) : nullptr;
            bool was_covered = pl != nullptr && pl->hits > 0;
            if (cl.hits > 0 && !was_covered) {
                newly.insert({cf.path, cl.line_number});
            }
            if (pl != nullptr && cl.covered_branches > pl->covered_branches) {
                d.newly_covered_branch_count += cl.covered_branches - pl->covered_branches;
            }
        }
    }
    for (const auto& [path, line] : newly) {
        d.newly_covered_lines.push_back({path, line});
    }

    std::set<MutantKey> killed;
    for (const auto& pm : prev.mutants) {
        for (const auto& cm : cur.mutants) {
            if (pm.status == MutantStatus::survived && cm.status == MutantStatus::killed &&
                pm.file == cm.file && pm.line_number == cm.line_number && pm.mutator_id == cm.mutator_id &&
                pm.index == cm.index) {
                killed.insert(pm.key());
            }
        }
    }
    d.mutants_killed.assign(killed.begin(), killed.end());

    std::set<SmellKey> removed;
    for (const auto& ps : prev.smells) {
        int reference = ps.start_line;
        const FileCoverage* pf = find_file(prev, ps.file);
        const FileCoverage* cf = find_file(cur, ps.file);
        if (pf != nullptr && cf != nullptr) {
            const LineCoverage* pl = find_line(*pf, ps.start_line);
            if (pl != nullptr && pl->content_hash) {
                if (const LineCoverage* cl = naive_match(*cf, ps.start_line, pl->content_hash)) {
                    reference = cl->line_number;
                }
            }
        }
        bool still_there = false;
        for (const auto& cs : cur.smells) {
            still_there = still_there || (cs.file == ps.file && cs.rule_id == ps.rule_id &&
                                          std::abs(cs.start_line - reference) <= 5);
        }
        if (!still_there) {
            removed.insert(ps.key());
        }
    }
    d.smells_removed.assign(removed.begin(), removed.end());
    return d;
}

ProjectMetrics naive_metrics(const BuildSnapshot& s)
{
    double lines = 0;
    double covered = 0;
    double branches = 0;
    double covered_branches = 0;
    for (const auto& f : s.files) {
        for (const auto& l : f.lines) {
            lines += 1;
            covered += l.hits > 0 ? 1 : 0;
            branches += l.total_branches;
            covered_branches += l.covered_branches;
        }
    }
    ProjectMetrics m;
    m.line_coverage = lines > 0 ? covered / lines : 1.0;
    m.branch_coverage = branches > 0 ? covered_branches / branches : 1.0;
    m.tests_total = s.tests.total;
    for (const auto& r : s.mutants) {
        m.surviving_mutants += r.status == MutantStatus::survived ? 1 : 0;
    }
    m.smell_count = static_cast<std::int64_t>(s.smells.size());
    return m;
}

Evaluation naive_evaluate(const Challenge& c, const BuildSnapshot& prev, const BuildSnapshot& cur,
                          const GameConfig& config, const std::string& assignee_email)
{
    const bool may_solve = config.attribution == Attribution::lenient || cur.commit.author_email == assignee_email;
    const Evaluation win = may_solve ? Evaluation::solved : Evaluation::pending;
    const bool green = cur.build_result == BuildResult::success;
    const FileCoverage* f = c.anchor.path.empty() ? nullptr : find_file(cur, c.anchor.path);

    auto count_covered = [](const FileCoverage& file, int lo, int hi) {
        int n = 0;
        for (const auto& l : file.lines) {
            n += l.line_number >= lo && l.line_number <= hi && l.hits > 0 ? 1 : 0;
        }
        return n;
    };

    switch (c.type) {
    case ChallengeType::Build:
        return green ? win : Evaluation::pending;
    case ChallengeType::Test:
        return green && cur.tests.total > c.baseline.tests_total ? win : Evaluation::pending;
    case ChallengeType::ClassCoverage:
        if (f == nullptr || f->class_name != c.anchor.class_name) {
            return Evaluation::invalidated;
        }
        return count_covered(*f, 1, 1 << 30) > *c.baseline.covered_lines ? win : Evaluation::pending;
    case ChallengeType::MethodCoverage: {
        if (f == nullptr) {
            return Evaluation::invalidated;
        }
        for (const auto& m : f->methods) {
            if (m.name == c.anchor.method_name) {
                return count_covered(*f, m.first_line, m.last_line) > *c.baseline.covered_lines ? win
                                                                                                 : Evaluation::pending;
            }
        }
        return Evaluation::invalidated;
    }
    case ChallengeType::LineCoverage:
    case ChallengeType::BranchCoverage: {
        const LineCoverage* l = f != nullptr ? naive_match(*f, *c.anchor.line_number, c.anchor.content_hash) : nullptr;
        if (l == nullptr) {
            return Evaluation::invalidated;
        }
        if (c.type == ChallengeType::LineCoverage) {
            return l->hits > 0 ? win : Evaluation::pending;
        }
        return l->covered_branches > *c.baseline.covered_branches ? win : Evaluation::pending;
    }
    case ChallengeType::Mutation: {
        const MutantKey& k = *c.baseline.mutant;
        for (const auto& m : cur.mutants) {
            if (m.file == k.file && m.line_number == k.line_number && m.mutator_id == k.mutator_id &&
                m.index == k.index) {
                return m.status == MutantStatus::killed ? win : Evaluation::pending;
            }
        }
        return cur.tests.total > prev.tests.total ? win : Evaluation::invalidated;
    }
    case ChallengeType::Smell: {
        if (!knows(cur, c.anchor.path)) {
            return Evaluation::invalidated;
        }
        int reference = c.baseline.smell->start_line;
        if (f != nullptr) {
            if (const LineCoverage* l = naive_match(*f, *c.anchor.line_number, c.anchor.content_hash)) {
                reference = l->line_number;
            }
        }
        for (const auto& sm : cur.smells) {
            if (sm.file == c.baseline.smell->file && sm.rule_id == c.baseline.smell->rule_id &&
                std::abs(sm.start_line - reference) <= 5) {
                return Evaluation::pending;
            }
        }
        return win;
    }
    }
    return Evaluation::pending;
}

std::vector<LeaderboardRow> naive_leaderboard(const ProjectState& state, LeaderboardScope scope)
{
    std::vector<LeaderboardRow> rows;
    auto subject_of = [&](const std::string& user, const std::optional<std::string>& team) -> std::optional<std::string> {
        if (scope == LeaderboardScope::users) {
            return user;
        }
        return team;
    };
    if (scope == LeaderboardScope::users) {
        for (const auto& [id, u] : state.users) {
            LeaderboardRow r;
            r.subject = id;
            r.display_name = u.display_name;
            r.avatar_id = u.avatar_id;
            rows.push_back(r);
        }
    } else {
        for (const auto& [id, t] : state.teams) {
            LeaderboardRow r;
            r.subject = id;
            r.display_name = t.display_name;
            rows.push_back(r);
        }
    }
    for (auto& r : rows) {
        for (const auto& e : state.score_events) {
            if (subject_of(e.user_id, e.team_id) != r.subject) {
                continue;
            }
            r.points += e.amount;
            (e.source == ScoreSource::challenge ? r.challenges_solved : r.quests_completed) += 1;
            if (!r.last_earned_at || e.timestamp > *r.last_earned_at) {
                r.last_earned_at = e.timestamp;
            }
        }
        for (const auto& a : state.earned) {
            auto u = state.users.find(a.user_id);
            if (u != state.users.end() && subject_of(a.user_id, u->second.team_id) == r.subject) {
                ++r.achievements_earned;
            }
        }
    }
    // selection sort by (points desc, reached-first, id)
    std::vector<LeaderboardRow> out;
    while (!rows.empty()) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto& a = rows[i];
            const auto& b = rows[best];
            bool better = false;
            if (a.points != b.points) {
                better = a.points > b.points;
            } else if (a.last_earned_at && b.last_earned_at && *a.last_earned_at != *b.last_earned_at) {
                better = *a.last_earned_at < *b.last_earned_at;
            } else if (a.last_earned_at.has_value() != b.last_earned_at.has_value()) {
                better = a.last_earned_at.has_value();
            } else {
                better = a.subject < b.subject;
            }
            if (better) {
                best = i;
            }
        }
        out.push_back(rows[best]);
        rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return out;
}

std::map<std::string, std::int64_t> points_from_outcomes(const Json& doc)
{
    std::map<std::string, std::int64_t> points;
    for (const auto& u : doc.at("users")) {
        points[u.at("id").get<std::string>()] = 0;
    }
    const Json& cfg = doc.at("config");
    for (const auto& c : doc.at("challenges")) {
        if (c.at("state") == "solved") {
            const std::string type = c.at("type").get<std::string>();
            points[c.at("assignee").get<std::string>()] += cfg.at("points").at(type).get<std::int64_t>();
        }
    }
    for (const auto& q : doc.at("quests")) {
        if (q.at("state") == "completed") {
            points[q.at("assignee").get<std::string>()] += cfg.at("quest_points").get<std::int64_t>();
        }
    }
    return points;
}

std::map<std::pair<std::string, std::string>, std::size_t>
naive_earn_history(const Catalog& catalog, const std::vector<CounterStep>& steps)
{
    std::map<std::pair<std::string, std::string>, std::size_t> first;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        for (const auto& def : catalog) {
            for (const auto& [user, k] : steps[i].users) {
                double v = 0;
                const ProjectMetrics& p = steps[i].metrics;
                bool project = def.scope == AchievementScope::project;
                switch (def.condition.metric) {
                case Metric::challenges_solved_total: v = static_cast<double>(k.challenges_solved_total); break;
                case Metric::challenges_solved_of_type:
                    v = static_cast<double>(k.solved_by_type[static_cast<std::size_t>(*def.condition.challenge_type)]);
                    break;
                case Metric::quests_completed: v = static_cast<double>(k.quests_completed); break;
                case Metric::tests_total:
                    v = static_cast<double>(project ? p.tests_total : k.tests_added_total);
                    break;
                case Metric::project_line_coverage: v = p.line_coverage; break;
                case Metric::project_branch_coverage: v = p.branch_coverage; break;
                case Metric::mutants_killed_total: v = static_cast<double>(k.mutants_killed_total); break;
                case Metric::smells_removed_total: v = static_cast<double>(k.smells_removed_total); break;
                case Metric::builds_fixed_total: v = static_cast<double>(k.builds_fixed_total); break;
                }
                if (v >= def.condition.threshold) {
                    first.emplace(std::make_pair(def.id, user), i);
                }
            }
        }
    }
    return first;
}

// ---------------------------------------------------------------------------

namespace {

std::optional<std::int64_t> state_generation(const fs::path& file)
{
    std::string name = file.filename().string();
    if (name.rfind("state.", 0) != 0 || name.size() == 6) {
        return std::nullopt;
    }
    std::string digits = name.substr(6);
    if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        return std::nullopt;
    }
    return std::stoll(digits);
}

}  // namespace

CrashSweep crash_sweep(const fs::path& data, const std::string& project, const ProjectState& next,
                       const Json& command, const CommandContext& ctx, std::int64_t retry_every)
{
    CrashSweep out;
    const fs::path dir = project_dir(data, project);
    const LoadedProject before = load_project(data, project);
    const std::int64_t g = before.generation;
    const std::string log_text = read_file(dir / "events.log");
    const std::string next_text = state_to_json(next).dump();
    const std::string before_text = state_to_json(before.state).dump();
    std::map<std::int64_t, std::string> replayed;
    std::map<fs::path, std::string> originals;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (state_generation(entry.path())) {
            originals[entry.path()] = read_file(entry.path());
        }
    }

    auto restore = [&] {
        for (const auto& entry : fs::directory_iterator(dir)) {
            auto gen = state_generation(entry.path());
            bool tmp = entry.path().extension() == ".tmp";
            if (tmp || (gen && *gen > g)) {
                fs::remove(entry.path());
            }
        }
        for (const auto& [path, text] : originals) {
            if (!fs::exists(path)) {
                write_file(path, text);
            }
        }
        write_file(dir / "events.log", log_text);
    };
    auto fail = [&](std::int64_t budget, const std::string& what) {
        if (out.failures.size() < 20) {
            out.failures.push_back("after " + std::to_string(budget) + " units: " + what);
        }
    };
    auto check_replay = [&](std::int64_t budget, const LoadedProject& loaded) {
        auto it = replayed.find(loaded.generation);
        if (it == replayed.end()) {
            auto history = committed_history(read_log(data, project), loaded.generation);
            it = replayed.emplace(loaded.generation, state_to_json(replay(history, ctx)).dump()).first;
        }
        if (it->second != (loaded.generation == g ? before_text : next_text)) {
            fail(budget, "log history does not replay to the loaded state");
        }
    };

    ProjectLock lock = ProjectLock::acquire(data, project);
    for (std::int64_t budget = 0;; ++budget) {
        restore();
        FaultPlan plan{budget, 0};
        bool crashed = false;
        try {
            commit_state(data, lock, g, next, {command}, &plan);
        } catch (const InjectedFault&) {
            crashed = true;
        }
        if (!crashed) {
            LoadedProject loaded = load_project(data, project);
            if (state_to_json(loaded.state).dump() != next_text) {
                fail(budget, "a complete commit does not load the new state");
            }
            check_replay(budget, loaded);
            break;
        }
        ++out.points;
        LoadedProject loaded;
        try {
            loaded = load_project(data, project);
        } catch (const std::exception& e) {
            fail(budget, std::string("load failed: ") + e.what());
            continue;
        }
        if (loaded.generation == g && loaded.state == before.state) {
            ++out.loaded_old;
        } else if (loaded.generation > g && loaded.state == next) {
            ++out.loaded_new;
        } else {
            fail(budget, "loaded generation " + std::to_string(loaded.generation) + " is neither old nor new");
            continue;
        }
        check_replay(budget, loaded);
        if (loaded.generation == g && read_file(dir / "events.log") != log_text) {
            if (loaded.recovery.empty()) {
                fail(budget, "partial commit left no recovery report");
            } else {
                ++out.reported;
            }
        }

        if (loaded.generation == g && (out.loaded_old - 1) % retry_every == 0) {
            ++out.retries;
            try {
                std::int64_t gen = commit_state(data, lock, g, next, {command});
                LoadedProject again = load_project(data, project);
                if (again.generation != gen || state_to_json(again.state).dump() != next_text ||
                    !again.orphaned.empty()) {
                    fail(budget, "retried commit did not install the new state");
                }
                auto history = committed_history(read_log(data, project), gen);
                if (state_to_json(replay(history, ctx)).dump() != next_text) {
                    fail(budget, "retried history does not replay to the new state");
                }
            } catch (const std::exception& e) {
                fail(budget, std::string("retry failed: ") + e.what());
            }
        }
    }
    restore();
    return out;
}

}  // namespace gamici::testing
