#include "gamici/challenge.hpp"

#include <algorithm>

#include "gamici/digest.hpp"
#include "gamici/error.hpp"
#include "gamici/state.hpp"

namespace gamici {

std::string_view to_string(ChallengeState s) noexcept
{
    switch (s) {
    case ChallengeState::active: return "active";
    case ChallengeState::stored: return "stored";
    case ChallengeState::solved: return "solved";
    case ChallengeState::rejected: return "rejected";
    case ChallengeState::invalidated: return "invalidated";
    }
    return "active";
}

std::optional<ChallengeState> challenge_state_from_string(std::string_view name) noexcept
{
    for (auto s : {ChallengeState::active, ChallengeState::stored, ChallengeState::solved,
                   ChallengeState::rejected, ChallengeState::invalidated}) {
        if (to_string(s) == name) {
            return s;
        }
    }
    return std::nullopt;
}

std::string_view to_string(Evaluation e) noexcept
{
    switch (e) {
    case Evaluation::solved: return "solved";
    case Evaluation::pending: return "pending";
    case Evaluation::invalidated: return "invalidated";
    }
    return "pending";
}

std::string_view to_string(ActionKind k) noexcept
{
    switch (k) {
    case ActionKind::reject: return "reject";
    case ActionKind::undo_reject: return "undo";
    case ActionKind::store: return "store";
    case ActionKind::activate: return "activate";
    case ActionKind::send: return "send";
    }
    return "store";
}

bool CodeAnchor::empty() const noexcept
{
    return path.empty() && !line_number && !class_name && !method_name;
}

// ---------------------------------------------------------------------------
// Target selection

namespace {

std::vector<const FileCoverage*> files_by_path(const BuildSnapshot& s)
{
    std::vector<const FileCoverage*> files;
    for (const auto& f : s.files) {
        files.push_back(&f);
    }
    std::sort(files.begin(), files.end(),
              [](const FileCoverage* a, const FileCoverage* b) { return a->path < b->path; });
    return files;
}

std::vector<const LineCoverage*> lines_by_number(const FileCoverage& f)
{
    std::vector<const LineCoverage*> lines;
    for (const auto& l : f.lines) {
        lines.push_back(&l);
    }
    std::sort(lines.begin(), lines.end(), [](const LineCoverage* a, const LineCoverage* b) {
        return a->line_number < b->line_number;
    });
    return lines;
}

std::size_t pick_weighted(const std::vector<std::int64_t>& weights, Rng& rng)
{
    std::int64_t total = 0;
    for (auto w : weights) {
        total += w;
    }
    double x = rng.draw() * static_cast<double>(total);
    std::int64_t cumulative = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        cumulative += weights[i];
        if (x < static_cast<double>(cumulative)) {
            return i;
        }
    }
    return weights.size() - 1;
}

std::optional<std::string> hash_at(const FileCoverage& f, int line)
{
    const LineCoverage* l = f.line(line);
    return l != nullptr ? l->content_hash : std::nullopt;
}

CodeAnchor line_anchor(const FileCoverage& f, const LineCoverage& l)
{
    CodeAnchor a;
    a.path = f.path;
    a.line_number = l.line_number;
    a.content_hash = l.content_hash;
    a.class_name = f.class_name;
    return a;
}

}  // namespace

std::optional<CodeAnchor> pick_coverage_target(const BuildSnapshot& snapshot, ChallengeType kind,
                                               Rng& rng)
{
    auto files = files_by_path(snapshot);

    switch (kind) {
    case ChallengeType::ClassCoverage: {
        std::vector<const FileCoverage*> candidates;
        std::vector<std::int64_t> weights;
        bool eligible = false;
        for (const auto* f : files) {
            if (f->lines.empty()) {
                continue;
            }
            int uncovered = f->uncovered_line_count();
            eligible = eligible || uncovered > 0;
            candidates.push_back(f);
            weights.push_back(uncovered + 1);
        }
        if (!eligible) {
            return std::nullopt;
        }
        const FileCoverage& f = *candidates[pick_weighted(weights, rng)];
        auto lines = lines_by_number(f);
        CodeAnchor a;
        a.path = f.path;
        a.class_name = f.class_name;
        a.line_number = lines.front()->line_number;
        a.end_line = lines.back()->line_number;
        return a;
    }
    case ChallengeType::MethodCoverage: {
        std::vector<std::pair<const FileCoverage*, const MethodRange*>> candidates;
        std::vector<std::int64_t> weights;
        bool eligible = false;
        for (const auto* f : files) {
            std::vector<const MethodRange*> methods;
            for (const auto& m : f->methods) {
                methods.push_back(&m);
            }
            std::sort(methods.begin(), methods.end(), [](const MethodRange* a, const MethodRange* b) {
                return a->first_line < b->first_line;
            });
            for (const auto* m : methods) {
                int uncovered = f->uncovered_in_range(m->first_line, m->last_line);
                eligible = eligible || uncovered > 0;
                candidates.emplace_back(f, m);
                weights.push_back(uncovered + 1);
            }
        }
        if (!eligible) {
            return std::nullopt;
        }
        auto [f, m] = candidates[pick_weighted(weights, rng)];
        CodeAnchor a;
        a.path = f->path;
        a.class_name = f->class_name;
        a.method_name = m->name;
        a.line_number = m->first_line;
        a.end_line = m->last_line;
        a.content_hash = hash_at(*f, m->first_line);
        return a;
    }
    case ChallengeType::LineCoverage:
    case ChallengeType::BranchCoverage: {
        std::vector<std::pair<const FileCoverage*, const LineCoverage*>> candidates;
        for (const auto* f : files) {
            for (const auto* l : lines_by_number(*f)) {
                bool ok = kind == ChallengeType::LineCoverage
                              ? !l->covered()
                              : l->covered() && l->covered_branches < l->total_branches;
                if (ok) {
                    candidates.emplace_back(f, l);
                }
            }
        }
        if (candidates.empty()) {
            return std::nullopt;
        }
        auto [f, l] = candidates[rng.index(candidates.size())];
        return line_anchor(*f, *l);
    }
    default:
        return std::nullopt;
    }
}

// ---------------------------------------------------------------------------
// Generation

namespace {

constexpr ChallengeType drawable_types[] = {
    ChallengeType::ClassCoverage, ChallengeType::MethodCoverage, ChallengeType::LineCoverage,
    ChallengeType::BranchCoverage, ChallengeType::Mutation, ChallengeType::Smell,
};

constexpr int max_redraws = 10;

struct Candidate {
    ChallengeType type = ChallengeType::Test;
    CodeAnchor anchor;
    const MutantRecord* mutant = nullptr;
    const SmellRecord* smell = nullptr;
};

std::optional<Candidate> draw_target(const BuildSnapshot& s, ChallengeType type, Rng& rng)
{
    Candidate c;
    c.type = type;
    if (type == ChallengeType::Mutation) {
        std::vector<const MutantRecord*> survived;
        for (const auto& m : s.mutants) {
            if (m.status == MutantStatus::survived) {
                survived.push_back(&m);
            }
        }
        if (survived.empty()) {
            return std::nullopt;
        }
        std::sort(survived.begin(), survived.end(),
                  [](const MutantRecord* a, const MutantRecord* b) { return a->key() < b->key(); });
        c.mutant = survived[rng.index(survived.size())];
        c.anchor.path = c.mutant->file;
        c.anchor.line_number = c.mutant->line_number;
        if (const FileCoverage* f = s.file(c.mutant->file)) {
            c.anchor.class_name = f->class_name;
            c.anchor.content_hash = hash_at(*f, c.mutant->line_number);
        }
        return c;
    }
    if (type == ChallengeType::Smell) {
        std::vector<const SmellRecord*> smells;
        for (const auto& sm : s.smells) {
            smells.push_back(&sm);
        }
        if (smells.empty()) {
            return std::nullopt;
        }
        std::sort(smells.begin(), smells.end(), [](const SmellRecord* a, const SmellRecord* b) {
            return std::tie(a->file, a->start_line, a->rule_id, a->end_line) <
                   std::tie(b->file, b->start_line, b->rule_id, b->end_line);
        });
        c.smell = smells[rng.index(smells.size())];
        c.anchor.path = c.smell->file;
        c.anchor.line_number = c.smell->start_line;
        c.anchor.end_line = c.smell->end_line;
        if (const FileCoverage* f = s.file(c.smell->file)) {
            c.anchor.class_name = f->class_name;
            c.anchor.content_hash = hash_at(*f, c.smell->start_line);
        }
        return c;
    }
    auto anchor = pick_coverage_target(s, type, rng);
    if (!anchor) {
        return std::nullopt;
    }
    c.anchor = std::move(*anchor);
    return c;
}

bool holds(const ProjectState& state, const std::string& user, ChallengeType type,
           const CodeAnchor& anchor)
{
    return std::any_of(state.challenges.begin(), state.challenges.end(), [&](const Challenge& c) {
        return c.assignee == user &&
               (c.state == ChallengeState::active || c.state == ChallengeState::stored) &&
               c.type == type && c.anchor == anchor;
    });
}

Challenge materialize(const ProjectState& state, const BuildSnapshot& s, const std::string& user,
                      const Candidate& cand)
{
    Challenge c;
    c.id = "ch-" + std::to_string(state.next_challenge_id);
    c.type = cand.type;
    c.assignee = user;
    c.created_build = s.build_number;
    c.state = ChallengeState::active;
    c.anchor = cand.anchor;
    c.points = state.config.points_for(cand.type);
    c.baseline.tests_total = s.tests.total;

    const FileCoverage* f = cand.anchor.path.empty() ? nullptr : s.file(cand.anchor.path);
    const std::string where =
        cand.anchor.path + (cand.anchor.line_number ? ":" + std::to_string(*cand.anchor.line_number) : "");

    switch (cand.type) {
    case ChallengeType::Build:
        c.detail = "The build failed on the CI. Fix it.";
        c.extra = "Commit " + s.commit.sha + " (build " + std::to_string(s.build_number) + ")";
        break;
    case ChallengeType::Test:
        c.detail = "Write a new test.";
        c.extra = "The project currently has " + std::to_string(s.tests.total) + " tests.";
        break;
    case ChallengeType::ClassCoverage: {
        c.baseline.covered_lines = f->covered_line_count();
        c.detail = "Cover more lines in class " + f->class_name + " (" + f->path + ").";
        c.extra = std::to_string(f->covered_line_count()) + " of " + std::to_string(f->lines.size()) +
                  " lines covered.";
        break;
    }
    case ChallengeType::MethodCoverage: {
        const MethodRange* m = f->method(*cand.anchor.method_name);
        c.baseline.covered_lines = f->covered_in_range(m->first_line, m->last_line);
        c.detail = "Cover more lines in method " + m->name + " of class " + f->class_name + ".";
        c.extra = "Lines " + std::to_string(m->first_line) + "-" + std::to_string(m->last_line) +
                  " of " + f->path + ".";
        break;
    }
    case ChallengeType::LineCoverage:
        c.detail = "Cover line " + std::to_string(*cand.anchor.line_number) + " of " + f->path + ".";
        break;
    case ChallengeType::BranchCoverage: {
        const LineCoverage* l = f->line(*cand.anchor.line_number);
        c.baseline.covered_branches = l->covered_branches;
        c.branch_info = std::make_pair(l->covered_branches, l->total_branches);
        c.detail = "Cover more branches of line " + std::to_string(l->line_number) + " of " +
                   f->path + ".";
        c.extra = std::to_string(l->covered_branches) + " of " + std::to_string(l->total_branches) +
                  " branches covered.";
        break;
    }
    case ChallengeType::Mutation:
        c.baseline.mutant = cand.mutant->key();
        c.detail = "Write a test that detects the mutant at " + where + ".";
        c.extra = cand.mutant->description + " [" + cand.mutant->mutator_id + "]";
        break;
    case ChallengeType::Smell:
        c.baseline.smell = cand.smell->key();
        c.detail = "Remove the smell at " + where + ".";
        c.extra = cand.smell->message + " [" + cand.smell->rule_id + ", " +
                  std::string(to_string(cand.smell->severity)) + "]";
        break;
    }
    return c;
}

}  // namespace

std::vector<Challenge> generate_challenges(ProjectState& state, const BuildSnapshot& snapshot,
                                           const std::string& user, Rng& rng)
{
    const UserProfile* profile = state.find_user(user);
    if (profile == nullptr) {
        throw Error(ErrorCode::unknown_user, "unknown user '" + user + "'");
    }
    const bool build_broken_by_user = snapshot.build_result == BuildResult::failure &&
                                      snapshot.commit.author_email == profile->email;

    std::vector<Challenge> made;
    while (state.count_challenges(user, ChallengeState::active) < state.config.max_active_challenges) {
        std::optional<Candidate> chosen;
        Candidate build;
        build.type = ChallengeType::Build;
        if (build_broken_by_user && !holds(state, user, ChallengeType::Build, build.anchor)) {
            chosen = build;
        } else {
            for (int attempt = 0; attempt <= max_redraws && !chosen; ++attempt) {
                ChallengeType type = drawable_types[rng.index(std::size(drawable_types))];
                Candidate cand;
                if (auto drawn = draw_target(snapshot, type, rng)) {
                    cand = std::move(*drawn);
                }
                if (!holds(state, user, cand.type, cand.anchor)) {
                    chosen = std::move(cand);
                }
            }
            if (!chosen && !holds(state, user, ChallengeType::Test, CodeAnchor{})) {
                chosen = Candidate{};
            }
        }
        if (!chosen) {
            break;
        }
        Challenge c = materialize(state, snapshot, user, *chosen);
        ++state.next_challenge_id;
        state.challenges.push_back(c);
        made.push_back(std::move(c));
    }
    return made;
}

// ---------------------------------------------------------------------------
// Evaluation

Evaluation evaluate_challenge(const Challenge& ch, const BuildSnapshot& prev, const BuildSnapshot& cur,
                              const GameConfig& config, bool author_is_assignee)
{
    const Evaluation solved = config.attribution == Attribution::lenient || author_is_assignee
                                  ? Evaluation::solved
                                  : Evaluation::pending;
    const bool green = cur.build_result == BuildResult::success;
    const CodeAnchor& a = ch.anchor;

    switch (ch.type) {
    case ChallengeType::Build:
        return green ? solved : Evaluation::pending;
    case ChallengeType::Test:
        return green && cur.tests.total > ch.baseline.tests_total ? solved : Evaluation::pending;
    case ChallengeType::ClassCoverage: {
        auto n = class_covered_lines(cur, a.path, a.class_name.value_or(""));
        if (!n) {
            return Evaluation::invalidated;
        }
        return *n > ch.baseline.covered_lines.value_or(0) ? solved : Evaluation::pending;
    }
    case ChallengeType::MethodCoverage: {
        auto n = method_covered_lines(cur, a.path, a.method_name.value_or(""));
        if (!n) {
            return Evaluation::invalidated;
        }
        return *n > ch.baseline.covered_lines.value_or(0) ? solved : Evaluation::pending;
    }
    case ChallengeType::LineCoverage:
    case ChallengeType::BranchCoverage: {
        const FileCoverage* f = cur.file(a.path);
        const LineCoverage* l =
            f != nullptr && a.line_number ? match_line(*f, *a.line_number, a.content_hash) : nullptr;
        if (l == nullptr) {
            return Evaluation::invalidated;
        }
        bool done = ch.type == ChallengeType::LineCoverage
                        ? l->covered()
                        : l->covered_branches > ch.baseline.covered_branches.value_or(0);
        return done ? solved : Evaluation::pending;
    }
    case ChallengeType::Mutation: {
        if (!ch.baseline.mutant) {
            return Evaluation::invalidated;
        }
        const MutantRecord* m = cur.mutant(*ch.baseline.mutant);
        if (m == nullptr) {
            return cur.tests.total > prev.tests.total ? solved : Evaluation::invalidated;
        }
        return m->status == MutantStatus::killed ? solved : Evaluation::pending;
    }
    case ChallengeType::Smell: {
        if (!ch.baseline.smell || !cur.knows_path(a.path)) {
            return Evaluation::invalidated;
        }
        int reference = ch.baseline.smell->start_line;
        if (const FileCoverage* f = cur.file(a.path); f != nullptr && a.line_number) {
            if (const LineCoverage* l = match_line(*f, *a.line_number, a.content_hash)) {
                reference = l->line_number;
            }
        }
        return smell_present(cur, *ch.baseline.smell, reference) ? Evaluation::pending : solved;
    }
    }
    return Evaluation::pending;
}

// ---------------------------------------------------------------------------
// Player actions

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& message)
{
    throw Error(code, message);
}

}  // namespace

std::vector<ActionEvent> apply_player_action(ProjectState& state, const std::string& actor,
                                             const PlayerAction& action)
{
    UserProfile* me = state.find_user(actor);
    if (me == nullptr) {
        fail(ErrorCode::unknown_user, "unknown user '" + actor + "'");
    }
    Challenge* c = state.find_challenge(action.challenge_id);
    if (c == nullptr) {
        fail(ErrorCode::unknown_challenge, "no challenge '" + action.challenge_id + "'");
    }
    if (c->assignee != actor) {
        fail(ErrorCode::not_owner, "challenge " + c->id + " belongs to another user");
    }
    const GameConfig& cfg = state.config;
    auto illegal = [&](std::string_view wanted) {
        fail(ErrorCode::illegal_transition, std::string(to_string(action.kind)) + " needs a " +
                                                std::string(wanted) + " challenge, " + c->id +
                                                " is " + std::string(to_string(c->state)));
    };

    switch (action.kind) {
    case ActionKind::reject: {
        if (trim(action.reason).empty()) {
            fail(ErrorCode::reason_empty, "a rejection needs an explanation");
        }
        if (c->state != ChallengeState::active) {
            illegal("active");
        }
        c->state = ChallengeState::rejected;
        c->rejection_reason = std::string(trim(action.reason));
        ++me->pending.rejected;
        return {{ActionEventKind::challenge_rejected, actor, c->id}};
    }
    case ActionKind::undo_reject: {
        if (c->type != ChallengeType::ClassCoverage) {
            fail(ErrorCode::undo_not_class_coverage,
                 "only Class Coverage challenges can be restored, " + c->id + " is " +
                     std::string(to_string(c->type)));
        }
        if (c->state != ChallengeState::rejected) {
            illegal("rejected");
        }
        if (state.count_challenges(actor, ChallengeState::active) >= cfg.max_active_challenges) {
            fail(ErrorCode::no_free_slot, "no free active slot");
        }
        if (holds(state, actor, c->type, c->anchor)) {
            fail(ErrorCode::duplicate_challenge, "an equivalent challenge is already open");
        }
        c->state = ChallengeState::active;
        c->rejection_reason.reset();
        return {{ActionEventKind::challenge_restored, actor, c->id}};
    }
    case ActionKind::store: {
        if (c->state != ChallengeState::active) {
            illegal("active");
        }
        if (state.count_challenges(actor, ChallengeState::stored) >= cfg.max_stored_challenges) {
            fail(ErrorCode::shelf_full, "stored shelf is full (" +
                                            std::to_string(cfg.max_stored_challenges) + ")");
        }
        c->state = ChallengeState::stored;
        return {{ActionEventKind::challenge_stored, actor, c->id}};
    }
    case ActionKind::activate: {
        if (c->state != ChallengeState::stored) {
            illegal("stored");
        }
        if (state.count_challenges(actor, ChallengeState::active) >= cfg.max_active_challenges) {
            fail(ErrorCode::no_free_slot, "no free active slot");
        }
        c->state = ChallengeState::active;
        return {{ActionEventKind::challenge_activated, actor, c->id}};
    }
    case ActionKind::send: {
        if (c->state != ChallengeState::stored) {
            illegal("stored");
        }
        if (action.recipient == actor) {
            fail(ErrorCode::self_send, "cannot send a challenge to yourself");
        }
        UserProfile* other = state.find_user(action.recipient);
        if (other == nullptr) {
            fail(ErrorCode::recipient_unknown, "no user '" + action.recipient + "' in this project");
        }
        if (state.count_challenges(other->id, ChallengeState::stored) >= cfg.max_stored_challenges) {
            fail(ErrorCode::shelf_full, "recipient's stored shelf is full");
        }
        if (holds(state, other->id, c->type, c->anchor)) {
            fail(ErrorCode::duplicate_challenge, "recipient already holds an equivalent challenge");
        }
        c->assignee = other->id;
        c->sent_by = actor;
        ++me->pending.sent;
        ++other->pending.received;
        return {{ActionEventKind::challenge_sent, actor, c->id},
                {ActionEventKind::challenge_received, other->id, c->id}};
    }
    }
    return {};
}

}  // namespace gamici
