#include "gamici/demo.hpp"

#include <algorithm>
#include <cstdio>

#include "gamici/digest.hpp"
#include "gamici/error.hpp"

namespace gamici {

namespace {

constexpr std::uint64_t demo_stream = 0x64656d6f;  // "demo"
constexpr int methods_per_class = 3;
constexpr int method_span = 5;  // header, body, branch, body, closing brace
constexpr int first_method_line = 4;

struct SimLine {
    int number = 0;
    std::int64_t hits = 0;
    int covered_branches = 0;
    int total_branches = 0;
};

struct SimClass {
    std::string name;
    std::string path;
    std::vector<std::string> text;
    std::vector<SimLine> lines;
    std::vector<MethodRange> methods;

    SimLine* line(int n)
    {
        auto it = std::find_if(lines.begin(), lines.end(), [n](const SimLine& l) { return l.number == n; });
        return it == lines.end() ? nullptr : &*it;
    }
};

struct World {
    std::vector<SimClass> classes;
    std::vector<MutantRecord> mutants;
    std::vector<SmellRecord> smells;
    std::int64_t tests = 12;

    SimClass* find(const std::string& path)
    {
        auto it = std::find_if(classes.begin(), classes.end(), [&](const SimClass& c) { return c.path == path; });
        return it == classes.end() ? nullptr : &*it;
    }
};

void cover(SimLine& l, bool all_branches)
{
    l.hits = std::max<std::int64_t>(l.hits, 1) + 1;
    if (l.total_branches > 0) {
        l.covered_branches = all_branches ? l.total_branches : std::max(l.covered_branches, 1);
    }
}

World make_world(Rng& rng)
{
    World w;
    const char* names[] = {"Cart", "Inventory", "Order", "Payment"};
    const char* mnames[] = {"total", "apply", "check"};
    for (int ci = 0; ci < 4; ++ci) {
        SimClass c;
        c.name = names[ci];
        c.path = "src/main/java/shop/" + c.name + ".java";
        c.text = {"package shop;", "", "public class " + c.name + " {"};
        for (int m = 0; m < methods_per_class; ++m) {
            int first = first_method_line + m * method_span;
            std::string tag = std::to_string(ci * 100 + m * 10);
            c.text.push_back("    public int " + std::string(mnames[m]) + "(int x) {");
            c.text.push_back("        int base = x * " + tag + ";");
            c.text.push_back("        if (base > " + tag + ") { base -= " + std::to_string(m + 1) + "; }");
            c.text.push_back("        return base + " + std::to_string(ci + m) + ";");
            c.text.push_back("    }");
            c.methods.push_back({mnames[m], first, first + 3});
            for (int k = 0; k < 4; ++k) {
                SimLine l;
                l.number = first + k;
                l.total_branches = k == 2 ? 2 : 0;
                if (rng.draw() < 0.6) {
                    l.hits = 1 + static_cast<std::int64_t>(rng.index(5));
                    l.covered_branches = l.total_branches > 0 ? 1 + static_cast<int>(rng.index(2)) : 0;
                }
                c.lines.push_back(l);
            }
        }
        c.text.push_back("}");

        for (int m : {0, 2}) {
            MutantRecord mu;
            mu.file = c.path;
            mu.line_number = first_method_line + m * method_span + 1;
            mu.mutator_id = m == 0 ? "MATH" : "CONDITIONALS_BOUNDARY";
            mu.status = rng.draw() < 0.5 ? MutantStatus::survived : MutantStatus::killed;
            mu.description = m == 0 ? "Replaced integer multiplication with division"
                                    : "changed conditional boundary";
            w.mutants.push_back(mu);
        }
        SmellRecord sm;
        sm.file = c.path;
        sm.start_line = first_method_line + method_span;
        sm.end_line = sm.start_line + 3;
        sm.rule_id = "java:S1172";
        sm.severity = Severity::major;
        sm.message = "Remove this unused method parameter \"x\".";
        w.smells.push_back(sm);
        w.classes.push_back(std::move(c));
    }
    return w;
}

/// The developer's commit makes `c` pass.
void work_on(World& w, const Challenge& c)
{
    SimClass* cls = c.anchor.path.empty() ? nullptr : w.find(c.anchor.path);
    switch (c.type) {
    case ChallengeType::Build: break;
    case ChallengeType::Test: ++w.tests; break;
    case ChallengeType::ClassCoverage:
    case ChallengeType::MethodCoverage: {
        if (cls == nullptr) {
            break;
        }
        int lo = c.anchor.line_number.value_or(0);
        int hi = c.anchor.end_line.value_or(lo);
        for (auto& l : cls->lines) {
            if (l.number >= lo && l.number <= hi && l.hits == 0) {
                cover(l, false);
                ++w.tests;
                break;
            }
        }
        break;
    }
    case ChallengeType::LineCoverage:
    case ChallengeType::BranchCoverage:
        if (cls != nullptr) {
            if (SimLine* l = cls->line(c.anchor.line_number.value_or(0))) {
                cover(*l, c.type == ChallengeType::BranchCoverage);
                ++w.tests;
            }
        }
        break;
    case ChallengeType::Mutation:
        for (auto& m : w.mutants) {
            if (c.baseline.mutant && m.key() == *c.baseline.mutant) {
                m.status = MutantStatus::killed;
                ++w.tests;
            }
        }
        break;
    case ChallengeType::Smell:
        w.smells.erase(std::remove_if(w.smells.begin(), w.smells.end(),
                                      [&](const SmellRecord& s) { return c.baseline.smell && s.key() == *c.baseline.smell; }),
                       w.smells.end());
        break;
    }
}

BuildSnapshot snapshot_of(const World& w, const std::string& project, std::int64_t build, std::int64_t timestamp,
                          bool failed, const std::string& author, Rng& rng)
{
    BuildSnapshot s;
    s.project_id = project;
    s.build_number = build;
    s.timestamp = timestamp;
    s.build_result = failed ? BuildResult::failure : BuildResult::success;
    char sha[41];
    std::snprintf(sha, sizeof sha, "%016llx%016llx%08llx", static_cast<unsigned long long>(rng.next_u64()),
                  static_cast<unsigned long long>(rng.next_u64()),
                  static_cast<unsigned long long>(rng.next_u64() & 0xffffffffULL));
    s.commit.sha = sha;
    s.commit.author_email = author;
    s.tests.total = w.tests;
    s.tests.failed = failed ? 1 : 0;
    s.tests.passed = w.tests - s.tests.failed;
    for (const auto& c : w.classes) {
        FileCoverage f;
        f.path = c.path;
        f.class_name = c.name;
        f.methods = c.methods;
        std::string text;
        for (const auto& t : c.text) {
            text += t + "\n";
        }
        s.sources[c.path] = text;
        for (const auto& l : c.lines) {
            f.lines.push_back({l.number, l.hits, l.covered_branches, l.total_branches,
                               content_hash(c.text[static_cast<std::size_t>(l.number - 1)])});
        }
        s.commit.changed_files.push_back(c.path);
        s.files.push_back(std::move(f));
    }
    s.mutants = w.mutants;
    s.smells = w.smells;
    return s;
}

std::vector<Challenge> open_challenges(const ProjectState& s, const std::string& user)
{
    std::vector<Challenge> out;
    for (const auto& c : s.challenges) {
        if (c.assignee == user && (c.state == ChallengeState::active || c.state == ChallengeState::stored)) {
            out.push_back(c);
        }
    }
    return out;
}

const Challenge* first_active(const ProjectState& s, const std::string& user, bool allow_class = true)
{
    for (const auto& c : s.challenges) {
        if (c.assignee == user && c.state == ChallengeState::active &&
            (allow_class || c.type != ChallengeType::ClassCoverage)) {
            return &c;
        }
    }
    return nullptr;
}

void cover_some(World& w, int n)
{
    for (auto& c : w.classes) {
        for (auto& l : c.lines) {
            if (n > 0 && l.hits == 0) {
                cover(l, false);
                --n;
            }
        }
    }
    ++w.tests;
}

/// Shelves one of `from`'s active challenges and sends it to `to`.
bool try_send(GameService& service, const ProjectState& s, const std::string& project, const std::string& from,
              const std::string& to, std::int64_t now)
{
    const int cap = s.config.max_stored_challenges;
    if (s.count_challenges(from, ChallengeState::stored) >= cap || s.count_challenges(to, ChallengeState::stored) >= cap) {
        return false;
    }
    const Challenge* c = first_active(s, from);
    if (c == nullptr) {
        return false;
    }
    std::string id = c->id;
    try {
        service.act(project, from, {ActionKind::store, id, "", ""}, now);
        service.act(project, from, {ActionKind::send, id, "", to}, now);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::duplicate_challenge) {
            throw;
        }
        return false;
    }
    return true;
}

}  // namespace

DemoReport run_demo(GameService& service, const DemoOptions& options)
{
    if (options.builds < 1) {
        throw Error(ErrorCode::bad_request, "--builds must be at least 1");
    }
    GameConfig config;
    config.rng_seed = static_cast<std::int64_t>(options.seed & 0x7fffffffffffffffULL);

    DemoReport report;
    report.project = options.project;
    report.builds = options.builds;
    report.ingest_token = service.create_project(options.project, config);
    report.users.push_back(service.add_user(options.project, "alice", "Alice", "alice@example.com"));
    report.users.push_back(service.add_user(options.project, "bob", "Bob", "bob@example.com"));
    service.add_team(options.project, "core", "Core Team");
    service.assign_team(options.project, "alice", "core");
    service.assign_team(options.project, "bob", "core");

    const std::vector<std::pair<std::string, std::string>> devs = {{"alice", "alice@example.com"},
                                                                   {"bob", "bob@example.com"}};
    Rng rng(options.seed, demo_stream);
    World world = make_world(rng);
    bool sent = false;
    bool rejected = false;
    bool reset_done = false;

    for (int b = 1; b <= options.builds; ++b) {
        // Developers take turns, except that someone chasing a streak quest
        // takes the next commit so the streak can start.
        std::size_t turn = static_cast<std::size_t>(b - 1) % devs.size();
        if (b > 1 && !reset_done) {
            ProjectState s = service.load(options.project).state;
            for (std::size_t i = 0; i < devs.size(); ++i) {
                const Quest* q = s.active_quest(devs[i].first);
                if (q != nullptr && q->type == QuestType::SolveChallengesWithoutRejection && q->progress == 0 &&
                    first_active(s, devs[i].first) != nullptr) {
                    turn = i;
                    break;
                }
            }
        }
        const auto& [author, email] = devs[turn];
        const std::int64_t ts = options.start_time + static_cast<std::int64_t>(b) * 3600;
        const std::int64_t action_time = ts - 1800;
        const bool last = b == options.builds;
        const bool breaks = b == 3 && !last;

        if (b > 1) {
            ProjectState s = service.load(options.project).state;

            // Player interactions between builds, mostly driven by quests.
            for (std::size_t i = 0; i < devs.size(); ++i) {
                const std::string& me = devs[i].first;
                const std::string& other = devs[(i + 1) % devs.size()].first;
                s = service.load(options.project).state;
                const Quest* mine = s.active_quest(me);
                const Quest* theirs = s.active_quest(other);
                bool wants_send = mine != nullptr && mine->type == QuestType::SendChallenges;
                bool feeds_colleague = theirs != nullptr && theirs->type == QuestType::ReceiveChallenges;
                if (wants_send || feeds_colleague || (!sent && me == "alice")) {
                    sent = try_send(service, s, options.project, me, other, action_time) || sent;
                    s = service.load(options.project).state;
                    mine = s.active_quest(me);
                }
                bool reset_due = mine != nullptr && mine->type == QuestType::SolveChallengesWithoutRejection &&
                                 mine->progress > 0;
                bool fallback = b == 4 && me == "bob" && !rejected;
                if ((reset_due && !reset_done) || fallback) {
                    if (const Challenge* c = first_active(s, me, false)) {
                        service.act(options.project, me,
                                    {ActionKind::reject, c->id, "Already covered by the integration suite.", ""},
                                    action_time);
                        rejected = true;
                        reset_done = reset_done || reset_due;
                    }
                }
            }

            // The committing developer works on most of their challenges.
            s = service.load(options.project).state;
            const Quest* focus = s.active_quest(author);
            const bool streak = !reset_done && focus != nullptr &&
                                focus->type == QuestType::SolveChallengesWithoutRejection;
            for (const auto& c : open_challenges(s, author)) {
                bool quest_type = focus != nullptr && focus->challenge_type_filter == c.type;
                if (rng.draw() < 0.75 || quest_type) {
                    work_on(world, c);
                    if (streak) {
                        break;
                    }
                }
            }
            if (rng.draw() < 0.5) {
                ++world.tests;
            }
            if (const Quest* q = s.active_quest(author); q != nullptr && q->type == QuestType::AddTests) {
                world.tests += 2;
            }
            if (const Quest* q = s.active_quest(author); q != nullptr && q->type == QuestType::CoverLines) {
                cover_some(world, 2);
            }
        }
        if (last) {
            for (auto& c : world.classes) {
                for (auto& l : c.lines) {
                    cover(l, true);
                }
            }
            ++world.tests;
        }
        service.ingest(snapshot_of(world, options.project, b, ts, breaks, email, rng));
    }
    return report;
}

}  // namespace gamici
