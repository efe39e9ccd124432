#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gamici {

/// Machine-readable error codes. Each engine precondition has its own code so
/// clients (and the HTTP layer) can react without parsing messages.
enum class ErrorCode {
    syntax_error,
    invariant_violation,
    malformed_record,
    project_mismatch,
    unknown_project,
    project_exists,
    unknown_user,
    user_exists,
    unknown_team,
    team_exists,
    unknown_challenge,
    not_owner,
    reason_empty,
    undo_not_class_coverage,
    illegal_transition,
    shelf_full,
    no_free_slot,
    recipient_unknown,
    self_send,
    duplicate_challenge,
    quest_already_active,
    duplicate_achievement_id,
    malformed_condition,
    avatar_out_of_range,
    stale_build,
    corrupt_state,
    lock_not_held,
    lock_busy,
    storage_error,
    bad_credentials,
    unauthorized,
    bad_request,
    not_found,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace gamici
