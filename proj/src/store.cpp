#include "gamici/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "gamici/error.hpp"

namespace gamici {

namespace {

[[noreturn]] void storage_failure(const std::string& what, const fs::path& path)
{
    throw Error(ErrorCode::storage_error, what + " " + path.string() + ": " + std::strerror(errno));
}

void check_project_id(const std::string& project)
{
    bool ok = !project.empty() && project.size() <= 64 && project.front() != '.' &&
              std::all_of(project.begin(), project.end(), [](char c) {
                  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
              });
    if (!ok) {
        throw Error(ErrorCode::bad_request, "invalid project id '" + project + "'");
    }
}

class Fd {
public:
    explicit Fd(int fd) : fd_(fd) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    ~Fd()
    {
        if (fd_ >= 0) {
            ::close(fd_);
        }
    }
    int get() const { return fd_; }

private:
    int fd_;
};

void spend(FaultPlan* faults)
{
    if (faults == nullptr) {
        return;
    }
    if (faults->used >= faults->budget) {
        throw InjectedFault("injected fault after " + std::to_string(faults->used) + " units");
    }
    ++faults->used;
}

void write_all(int fd, std::string_view data, const fs::path& path, FaultPlan* faults)
{
    std::size_t allowed = data.size();
    if (faults != nullptr) {
        auto left = std::max<std::int64_t>(0, faults->budget - faults->used);
        allowed = static_cast<std::size_t>(std::min<std::int64_t>(left, static_cast<std::int64_t>(data.size())));
    }
    std::size_t done = 0;
    while (done < allowed) {
        ssize_t n = ::write(fd, data.data() + done, allowed - done);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            storage_failure("cannot write", path);
        }
        done += static_cast<std::size_t>(n);
    }
    if (faults != nullptr) {
        faults->used += static_cast<std::int64_t>(allowed);
        if (allowed < data.size()) {
            throw InjectedFault("injected fault after " + std::to_string(faults->used) + " units");
        }
    }
}

void sync_fd(int fd, const fs::path& path)
{
    if (::fsync(fd) != 0) {
        storage_failure("cannot sync", path);
    }
}

void sync_dir(const fs::path& dir)
{
    Fd fd(::open(dir.c_str(), O_RDONLY | O_DIRECTORY));
    if (fd.get() < 0) {
        storage_failure("cannot open directory", dir);
    }
    ::fsync(fd.get());
}

std::optional<std::string> read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Writes `text` to `path` through a temp file and rename.
void replace_file(const fs::path& path, std::string_view text, FaultPlan* faults)
{
    fs::path tmp = path;
    tmp += ".tmp";
    {
        Fd fd(::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644));
        if (fd.get() < 0) {
            storage_failure("cannot create", tmp);
        }
        write_all(fd.get(), text, tmp, faults);
        sync_fd(fd.get(), tmp);
    }
    spend(faults);
    if (::rename(tmp.c_str(), path.c_str()) != 0) {
        storage_failure("cannot rename", tmp);
    }
    sync_dir(path.parent_path());
}

std::vector<std::int64_t> generations(const fs::path& dir)
{
    std::vector<std::int64_t> gens;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        std::string name = entry.path().filename().string();
        if (name.rfind("state.", 0) != 0) {
            continue;
        }
        std::string digits = name.substr(6);
        if (digits.empty() || digits.size() > 18 ||
            !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            continue;
        }
        gens.push_back(std::stoll(digits));
    }
    std::sort(gens.begin(), gens.end());
    return gens;
}

fs::path state_path(const fs::path& dir, std::int64_t gen)
{
    return dir / ("state." + std::to_string(gen));
}

struct ParsedLog {
    std::vector<LogEntry> entries;
    /// Byte length of the complete-line prefix.
    std::size_t complete_bytes = 0;
    bool torn_tail = false;
    std::vector<std::string> bad_lines;
};

ParsedLog parse_log(const std::string& text)
{
    ParsedLog out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) {
            out.torn_tail = true;
            break;
        }
        ++line_no;
        std::string_view line(text.data() + pos, nl - pos);
        pos = nl + 1;
        out.complete_bytes = pos;
        try {
            Json j = Json::parse(line);
            out.entries.push_back({j.at("gen").get<std::int64_t>(), j.at("base").get<std::int64_t>(), j.at("cmd")});
        } catch (const nlohmann::json::exception& e) {
            out.bad_lines.push_back("events.log line " + std::to_string(line_no) + " unreadable: " + e.what());
        }
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Lock

ProjectLock ProjectLock::acquire(const fs::path& data_dir, const std::string& project, bool wait)
{
    check_project_id(project);
    fs::path dir = project_dir(data_dir, project);
    if (!fs::is_directory(dir)) {
        throw Error(ErrorCode::unknown_project, "unknown project '" + project + "'");
    }
    fs::path path = dir / ".lock";
    int fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) {
        storage_failure("cannot open", path);
    }
    while (::flock(fd, LOCK_EX | (wait ? 0 : LOCK_NB)) != 0) {
        if (errno == EINTR) {
            continue;
        }
        int err = errno;
        ::close(fd);
        if (err == EWOULDBLOCK) {
            throw Error(ErrorCode::lock_busy, "project '" + project + "' is locked by another writer");
        }
        errno = err;
        storage_failure("cannot lock", path);
    }
    ProjectLock lock;
    lock.fd_ = fd;
    lock.dir_ = fs::absolute(data_dir).lexically_normal();
    lock.project_ = project;
    return lock;
}

ProjectLock::ProjectLock(ProjectLock&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), dir_(std::move(other.dir_)), project_(std::move(other.project_))
{
}

ProjectLock& ProjectLock::operator=(ProjectLock&& other) noexcept
{
    if (this != &other) {
        release();
        fd_ = std::exchange(other.fd_, -1);
        dir_ = std::move(other.dir_);
        project_ = std::move(other.project_);
    }
    return *this;
}

ProjectLock::~ProjectLock()
{
    release();
}

bool ProjectLock::holds(const fs::path& data_dir, const std::string& project) const
{
    return fd_ >= 0 && project_ == project && dir_ == fs::absolute(data_dir).lexically_normal();
}

void ProjectLock::release() noexcept
{
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
        fd_ = -1;
    }
}

// ---------------------------------------------------------------------------
// Project files

fs::path project_dir(const fs::path& data_dir, const std::string& project)
{
    return data_dir / project;
}

bool project_exists(const fs::path& data_dir, const std::string& project)
{
    check_project_id(project);
    return !generations(project_dir(data_dir, project)).empty();
}

void create_project_files(const fs::path& data_dir, const ProjectState& initial, const Json& command)
{
    check_project_id(initial.project_id);
    fs::path dir = project_dir(data_dir, initial.project_id);
    std::error_code ec;
    fs::create_directories(dir / "snapshots", ec);
    if (ec) {
        throw Error(ErrorCode::storage_error, "cannot create " + dir.string() + ": " + ec.message());
    }
    ProjectLock lock = ProjectLock::acquire(data_dir, initial.project_id);
    if (!generations(dir).empty()) {
        throw Error(ErrorCode::project_exists, "project '" + initial.project_id + "' already exists");
    }
    commit_state(data_dir, lock, 0, initial, {command});
}

LoadedProject load_project(const fs::path& data_dir, const std::string& project)
{
    check_project_id(project);
    fs::path dir = project_dir(data_dir, project);
    auto gens = generations(dir);
    if (!fs::is_directory(dir) || gens.empty()) {
        throw Error(ErrorCode::unknown_project, "unknown project '" + project + "'");
    }

    LoadedProject out;
    std::vector<std::string> failures;
    for (auto it = gens.rbegin(); it != gens.rend(); ++it) {
        fs::path path = state_path(dir, *it);
        try {
            auto text = read_file(path);
            if (!text) {
                throw Error(ErrorCode::corrupt_state, "cannot read file");
            }
            Json doc;
            try {
                doc = Json::parse(*text);
            } catch (const nlohmann::json::parse_error& e) {
                throw Error(ErrorCode::corrupt_state, "syntax error at byte " + std::to_string(e.byte));
            }
            ProjectState state = state_from_json(doc);
            if (state.project_id != project) {
                throw Error(ErrorCode::corrupt_state, "document belongs to project '" + state.project_id + "'");
            }
            out.state = std::move(state);
            out.generation = *it;
            break;
        } catch (const Error& e) {
            failures.push_back(path.filename().string() + ": " + e.what());
        }
    }
    if (out.generation == 0) {
        std::string detail;
        for (const auto& f : failures) {
            detail += "; " + f;
        }
        throw Error(ErrorCode::corrupt_state, "project '" + project + "' has no loadable state" + detail);
    }
    for (const auto& f : failures) {
        out.recovery.push_back("skipped damaged " + f + "; loaded state." + std::to_string(out.generation));
    }

    if (auto text = read_file(dir / "events.log")) {
        ParsedLog log = parse_log(*text);
        out.recovery.insert(out.recovery.end(), log.bad_lines.begin(), log.bad_lines.end());
        if (log.torn_tail) {
            out.recovery.push_back("events.log ends in an incomplete line (" +
                                   std::to_string(text->size() - log.complete_bytes) + " bytes ignored)");
        }
        for (auto& e : log.entries) {
            if (e.generation > out.generation) {
                out.orphaned.push_back(std::move(e));
            }
        }
        if (!out.orphaned.empty()) {
            out.recovery.push_back(std::to_string(out.orphaned.size()) +
                                   " logged command(s) newer than state." + std::to_string(out.generation) +
                                   " were never committed");
        }
    }
    return out;
}

std::int64_t commit_state(const fs::path& data_dir, const ProjectLock& lock, std::int64_t base_generation,
                          const ProjectState& state, const std::vector<Json>& events, FaultPlan* faults)
{
    if (!lock.holds(data_dir, state.project_id)) {
        throw Error(ErrorCode::lock_not_held, "commit of project '" + state.project_id +
                                                  "' without holding its lock");
    }
    check_integrity(state);
    fs::path dir = project_dir(data_dir, state.project_id);
    fs::path log_path = dir / "events.log";

    std::int64_t gen = base_generation;
    auto gens = generations(dir);
    if (!gens.empty()) {
        gen = std::max(gen, gens.back());
    }
    std::string log_text = read_file(log_path).value_or("");
    ParsedLog log = parse_log(log_text);
    for (const auto& e : log.entries) {
        gen = std::max(gen, e.generation);
    }
    ++gen;

    // Events first, so a state generation never exists without its log line.
    {
        Fd fd(::open(log_path.c_str(), O_WRONLY | O_CREAT | O_CLOEXEC, 0644));
        if (fd.get() < 0) {
            storage_failure("cannot open", log_path);
        }
        if (log.torn_tail && ::ftruncate(fd.get(), static_cast<off_t>(log.complete_bytes)) != 0) {
            storage_failure("cannot truncate", log_path);
        }
        if (::lseek(fd.get(), 0, SEEK_END) < 0) {
            storage_failure("cannot seek", log_path);
        }
        std::string lines;
        for (const auto& cmd : events) {
            Json line = {{"gen", gen}, {"base", base_generation}, {"cmd", cmd}};
            lines += line.dump() + "\n";
        }
        write_all(fd.get(), lines, log_path, faults);
        sync_fd(fd.get(), log_path);
    }

    replace_file(state_path(dir, gen), state_to_json(state).dump(1) + "\n", faults);

    spend(faults);
    for (auto g : generations(dir)) {
        if (g < gen - 1) {
            std::error_code ec;
            fs::remove(state_path(dir, g), ec);
        }
    }
    return gen;
}

std::vector<LogEntry> read_log(const fs::path& data_dir, const std::string& project)
{
    check_project_id(project);
    auto text = read_file(project_dir(data_dir, project) / "events.log");
    if (!text) {
        return {};
    }
    return parse_log(*text).entries;
}

std::vector<LogEntry> committed_history(const std::vector<LogEntry>& log, std::int64_t head)
{
    std::vector<LogEntry> chain;
    std::int64_t want = head;
    for (auto it = log.rbegin(); it != log.rend() && want > 0;) {
        if (it->generation != want) {
            ++it;
            continue;
        }
        std::vector<LogEntry> group;
        std::int64_t base = it->base;
        while (it != log.rend() && it->generation == want) {
            group.push_back(*it);
            ++it;
        }
        chain.insert(chain.end(), group.begin(), group.end());
        want = base;
    }
    std::reverse(chain.begin(), chain.end());
    return chain;
}

void archive_snapshot(const fs::path& data_dir, const ProjectLock& lock, const BuildSnapshot& snapshot)
{
    if (!lock.holds(data_dir, snapshot.project_id)) {
        throw Error(ErrorCode::lock_not_held, "archive without holding the project lock");
    }
    fs::path dir = project_dir(data_dir, snapshot.project_id) / "snapshots";
    std::error_code ec;
    fs::create_directories(dir, ec);
    replace_file(dir / (std::to_string(snapshot.build_number) + ".json"), serialize_snapshot(snapshot), nullptr);
}

std::optional<BuildSnapshot> load_snapshot(const fs::path& data_dir, const std::string& project,
                                           std::int64_t build)
{
    check_project_id(project);
    auto text = read_file(project_dir(data_dir, project) / "snapshots" / (std::to_string(build) + ".json"));
    if (!text) {
        return std::nullopt;
    }
    try {
        return parse_snapshot(*text);
    } catch (const Error& e) {
        throw Error(ErrorCode::corrupt_state, "archived snapshot " + std::to_string(build) + ": " + e.what());
    }
}

Catalog load_project_catalog(const fs::path& data_dir, const std::string& project)
{
    check_project_id(project);
    if (auto text = read_file(project_dir(data_dir, project) / "achievements.json")) {
        return load_catalog(*text);
    }
    return load_catalog(default_catalog_text());
}

}  // namespace gamici
