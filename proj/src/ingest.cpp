#include "gamici/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "gamici/digest.hpp"
#include "gamici/error.hpp"

namespace gamici {

std::string class_name_for_path(std::string_view path)
{
    auto slash = path.find_last_of('/');
    std::string_view name = slash == std::string_view::npos ? path : path.substr(slash + 1);
    auto dot = name.find_last_of('.');
    if (dot != std::string_view::npos && dot > 0) {
        name = name.substr(0, dot);
    }
    return std::string(name);
}

// ---------------------------------------------------------------------------
// LCOV

namespace {

struct LcovFile {
    std::string path;
    struct Fn {
        int first = 0;
        std::optional<int> last;
        std::string name;
    };
    std::vector<Fn> functions;
    std::map<int, std::int64_t> hits;
    // line -> (block, branch) -> taken
    std::map<int, std::map<std::pair<std::string, std::string>, std::int64_t>> branches;
};

template <typename T>
bool parse_number(std::string_view text, T& out)
{
    text = trim(text);
    if (text.empty()) {
        return false;
    }
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

std::vector<std::string_view> split(std::string_view text, char sep, std::size_t max_parts)
{
    std::vector<std::string_view> parts;
    while (parts.size() + 1 < max_parts) {
        auto pos = text.find(sep);
        if (pos == std::string_view::npos) {
            break;
        }
        parts.push_back(text.substr(0, pos));
        text.remove_prefix(pos + 1);
    }
    parts.push_back(text);
    return parts;
}

[[noreturn]] void malformed(std::size_t line_no, std::string_view record, std::string_view why)
{
    throw Error(ErrorCode::malformed_record, "lcov line " + std::to_string(line_no) + ": " +
                                                 std::string(why) + " in '" + std::string(record) + "'");
}

FileCoverage finish(const LcovFile& in)
{
    FileCoverage out;
    out.path = in.path;
    out.class_name = class_name_for_path(in.path);

    std::map<int, LineCoverage> lines;
    for (const auto& [line, hits] : in.hits) {
        lines[line].line_number = line;
        lines[line].hits = hits;
    }
    for (const auto& [line, per_branch] : in.branches) {
        auto& l = lines[line];
        l.line_number = line;
        for (const auto& [id, taken] : per_branch) {
            ++l.total_branches;
            if (taken > 0) {
                ++l.covered_branches;
            }
        }
    }
    for (auto& [n, l] : lines) {
        out.lines.push_back(l);
    }

    // One range per distinct first line; ranges end where the next one starts
    // or at the last line with data.
    std::vector<LcovFile::Fn> fns;
    std::set<int> seen;
    for (const auto& fn : in.functions) {
        if (seen.insert(fn.first).second) {
            fns.push_back(fn);
        }
    }
    std::stable_sort(fns.begin(), fns.end(),
                     [](const LcovFile::Fn& a, const LcovFile::Fn& b) { return a.first < b.first; });
    int data_end = lines.empty() ? 0 : lines.rbegin()->first;
    for (std::size_t i = 0; i < fns.size(); ++i) {
        int last = i + 1 < fns.size() ? fns[i + 1].first - 1 : data_end;
        if (fns[i].last) {
            last = std::min(last, *fns[i].last);
        }
        out.methods.push_back({fns[i].name, fns[i].first, std::max(last, fns[i].first)});
    }
    return out;
}

}  // namespace

BuildSnapshot convert_lcov(std::string_view text, const SnapshotMeta& meta)
{
    BuildSnapshot s;
    s.project_id = meta.project_id;
    s.build_number = meta.build_number;
    s.timestamp = meta.timestamp;
    s.build_result = meta.build_result;
    s.commit = meta.commit;
    s.tests = meta.tests;

    std::vector<LcovFile> files;
    std::map<std::string, std::size_t> index_of;
    LcovFile* current = nullptr;

    std::size_t line_no = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        std::string_view raw = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;

        std::string_view record = trim(raw);
        if (record.empty()) {
            continue;
        }
        if (record == "end_of_record") {
            if (current == nullptr) {
                malformed(line_no, record, "end_of_record without SF");
            }
            current = nullptr;
            continue;
        }
        auto colon = record.find(':');
        if (colon == std::string_view::npos) {
            malformed(line_no, record, "missing ':'");
        }
        std::string_view type = record.substr(0, colon);
        std::string_view payload = record.substr(colon + 1);

        if (type == "SF") {
            if (current != nullptr) {
                malformed(line_no, record, "SF inside an open record");
            }
            std::string path(trim(payload));
            if (path.empty()) {
                malformed(line_no, record, "empty source path");
            }
            auto [it, inserted] = index_of.emplace(path, files.size());
            if (inserted) {
                files.push_back(LcovFile{path, {}, {}, {}});
            }
            current = &files[it->second];
            continue;
        }
        if (type != "DA" && type != "FN" && type != "BRDA") {
            continue;
        }
        if (current == nullptr) {
            malformed(line_no, record, "record outside SF block");
        }

        if (type == "DA") {
            auto parts = split(payload, ',', 3);
            int line = 0;
            std::int64_t hits = 0;
            if (parts.size() < 2 || !parse_number(parts[0], line) || line < 1 ||
                !parse_number(parts[1], hits) || hits < 0) {
                malformed(line_no, record, "expected DA:<line>,<hits>");
            }
            current->hits[line] += hits;
        } else if (type == "FN") {
            auto parts = split(payload, ',', 2);
            LcovFile::Fn fn;
            if (parts.size() < 2 || !parse_number(parts[0], fn.first) || fn.first < 1) {
                malformed(line_no, record, "expected FN:<line>,<name>");
            }
            // lcov 2.x writes FN:<first>,<last>,<name>
            std::string_view rest = parts[1];
            auto comma = rest.find(',');
            int last = 0;
            if (comma != std::string_view::npos && parse_number(rest.substr(0, comma), last)) {
                if (last < fn.first) {
                    malformed(line_no, record, "function end before start");
                }
                fn.last = last;
                rest = rest.substr(comma + 1);
            }
            fn.name = std::string(trim(rest));
            if (fn.name.empty()) {
                malformed(line_no, record, "empty function name");
            }
            current->functions.push_back(std::move(fn));
        } else {
            auto parts = split(payload, ',', 4);
            int line = 0;
            if (parts.size() != 4 || !parse_number(parts[0], line) || line < 1) {
                malformed(line_no, record, "expected BRDA:<line>,<block>,<branch>,<taken>");
            }
            std::int64_t taken = 0;
            std::string_view taken_text = trim(parts[3]);
            if (taken_text != "-" && (!parse_number(taken_text, taken) || taken < 0)) {
                malformed(line_no, record, "branch taken count must be '-' or a count");
            }
            auto& slot = current->branches[line][{std::string(trim(parts[1])), std::string(trim(parts[2]))}];
            slot += taken;
        }
    }

    for (const auto& f : files) {
        s.files.push_back(finish(f));
    }
    validate(s);
    return s;
}

// ---------------------------------------------------------------------------
// Mutation and smell reports

namespace {

bool ends_with(std::string_view s, std::string_view suffix)
{
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool path_matches(std::string_view path, std::string_view rel)
{
    return path == rel || (ends_with(path, rel) && path.size() > rel.size() &&
                           path[path.size() - rel.size() - 1] == '/');
}

std::string resolve_pit_path(const BuildSnapshot& base, const std::string& mutated_class,
                             const std::string& source_file)
{
    std::string cls = mutated_class.substr(0, mutated_class.find('$'));
    std::string rel = cls;
    std::replace(rel.begin(), rel.end(), '.', '/');
    auto dot = source_file.find_last_of('.');
    rel += dot == std::string::npos ? std::string(".java") : source_file.substr(dot);

    for (const auto& f : base.files) {
        if (path_matches(f.path, rel)) {
            return f.path;
        }
    }
    for (const auto& f : base.files) {
        if (!source_file.empty() && path_matches(f.path, source_file)) {
            return f.path;
        }
    }
    return cls.empty() ? source_file : rel;
}

MutantStatus pit_status(const std::string& status)
{
    if (status == "SURVIVED") {
        return MutantStatus::survived;
    }
    if (status == "NO_COVERAGE") {
        return MutantStatus::no_coverage;
    }
    if (status == "KILLED" || status == "TIMED_OUT" || status == "MEMORY_ERROR" ||
        status == "RUN_ERROR") {
        return MutantStatus::killed;
    }
    return MutantStatus::survived;
}

std::vector<MutantRecord> parse_pit_xml(std::string_view text, const BuildSnapshot& base)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::read_xml(in, tree);
    } catch (const pt::xml_parser_error& e) {
        throw Error(ErrorCode::syntax_error,
                    "mutation report line " + std::to_string(e.line()) + ": " + e.message());
    }

    std::vector<MutantRecord> out;
    std::set<MutantKey> keys;
    auto root = tree.get_child_optional("mutations");
    if (!root) {
        throw Error(ErrorCode::syntax_error, "mutation report: missing <mutations> root");
    }
    for (const auto& [tag, node] : *root) {
        if (tag != "mutation") {
            continue;
        }
        std::string status = node.get<std::string>("<xmlattr>.status", "");
        if (status == "NON_VIABLE") {
            continue;
        }
        MutantRecord m;
        auto line = node.get_optional<int>("lineNumber");
        if (!line) {
            throw Error(ErrorCode::syntax_error, "mutation report: <mutation> without <lineNumber>");
        }
        m.line_number = *line;
        m.file = resolve_pit_path(base, node.get<std::string>("mutatedClass", ""),
                                  node.get<std::string>("sourceFile", ""));
        m.mutator_id = node.get<std::string>("mutator", "");
        m.index = node.get_optional<int>("index").value_or(node.get<int>("indexes.index", 0));
        m.status = pit_status(status);
        if (status.empty()) {
            m.status = node.get<std::string>("<xmlattr>.detected", "false") == "true"
                           ? MutantStatus::killed
                           : MutantStatus::survived;
        }
        m.description = node.get<std::string>("description", "");
        while (!keys.insert(m.key()).second) {
            ++m.index;
        }
        out.push_back(std::move(m));
    }
    return out;
}

Json parse_json_report(std::string_view text, std::string_view what)
{
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::syntax_error, std::string(what) + " syntax error at byte " +
                                                 std::to_string(e.byte) + ": " + e.what());
    }
}

Severity sonar_severity(const std::string& s)
{
    if (s == "BLOCKER" || s == "CRITICAL") {
        return Severity::critical;
    }
    if (s == "MAJOR") {
        return Severity::major;
    }
    if (s == "INFO") {
        return Severity::info;
    }
    return Severity::minor;
}

}  // namespace

std::vector<MutantRecord> parse_mutation_report(std::string_view text, const BuildSnapshot& base)
{
    std::string_view body = trim(text);
    if (!body.empty() && body.front() == '<') {
        return parse_pit_xml(body, base);
    }
    Json doc = parse_json_report(body, "mutation report");
    if (!doc.is_array()) {
        throw Error(ErrorCode::syntax_error, "mutation report: expected PIT XML or a JSON array");
    }
    std::vector<MutantRecord> out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        out.push_back(mutant_from_json(doc[i], "mutants[" + std::to_string(i) + "]."));
    }
    return out;
}

std::vector<SmellRecord> parse_smell_report(std::string_view text)
{
    Json doc = parse_json_report(text, "smell report");
    std::vector<SmellRecord> out;
    if (doc.is_array()) {
        for (std::size_t i = 0; i < doc.size(); ++i) {
            out.push_back(smell_from_json(doc[i], "smells[" + std::to_string(i) + "]."));
        }
        return out;
    }
    if (!doc.is_object() || !doc.contains("issues") || !doc["issues"].is_array()) {
        throw Error(ErrorCode::syntax_error,
                    "smell report: expected {\"issues\": [...]} or a JSON array");
    }
    for (const auto& issue : doc["issues"]) {
        if (!issue.is_object()) {
            throw Error(ErrorCode::syntax_error, "smell report: issue must be an object");
        }
        SmellRecord s;
        std::string component = issue.value("component", "");
        auto colon = component.find(':');
        s.file = colon == std::string::npos ? component : component.substr(colon + 1);
        s.rule_id = issue.value("rule", "");
        s.severity = sonar_severity(issue.value("severity", "MINOR"));
        s.message = issue.value("message", "");
        if (issue.contains("textRange") && issue["textRange"].is_object()) {
            s.start_line = issue["textRange"].value("startLine", 1);
            s.end_line = issue["textRange"].value("endLine", s.start_line);
        } else {
            s.start_line = issue.value("line", 1);
            s.end_line = s.start_line;
        }
        if (s.file.empty() || s.rule_id.empty()) {
            throw Error(ErrorCode::syntax_error, "smell report: issue without component or rule");
        }
        out.push_back(std::move(s));
    }
    return out;
}

MergeResult merge_reports(const BuildSnapshot& base,
                          const std::optional<std::vector<MutantRecord>>& mutants,
                          const std::optional<std::vector<SmellRecord>>& smells,
                          const std::map<std::string, std::string>& sources)
{
    MergeResult result{base, {}};
    BuildSnapshot& s = result.snapshot;
    if (mutants) {
        s.mutants = *mutants;
    }
    if (smells) {
        s.smells = *smells;
    }
    if (!sources.empty()) {
        s.sources = sources;
    }

    for (auto& f : s.files) {
        auto src = s.sources.find(f.path);
        if (src == s.sources.end()) {
            continue;
        }
        std::vector<std::string_view> text_lines;
        std::string_view text = src->second;
        while (!text.empty()) {
            auto nl = text.find('\n');
            text_lines.push_back(text.substr(0, nl));
            text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        }
        for (auto& l : f.lines) {
            if (l.line_number >= 1 && static_cast<std::size_t>(l.line_number) <= text_lines.size()) {
                l.content_hash = content_hash(text_lines[static_cast<std::size_t>(l.line_number) - 1]);
            }
        }
    }

    auto require_path = [&](const std::string& path, std::string_view what) {
        if (s.knows_path(path)) {
            return;
        }
        result.warnings.push_back(std::string(what) + " references '" + path +
                                  "' which has no coverage entry and no source text");
        s.files.push_back({path, class_name_for_path(path), {}, {}});
    };
    for (const auto& m : s.mutants) {
        require_path(m.file, "mutant");
    }
    for (const auto& sm : s.smells) {
        require_path(sm.file, "smell");
    }

    validate(s);
    return result;
}

}  // namespace gamici
