#include "gamici/error.hpp"

namespace gamici {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::syntax_error: return "syntax_error";
    case ErrorCode::invariant_violation: return "invariant_violation";
    case ErrorCode::malformed_record: return "malformed_record";
    case ErrorCode::project_mismatch: return "project_mismatch";
    case ErrorCode::unknown_project: return "unknown_project";
    case ErrorCode::project_exists: return "project_exists";
    case ErrorCode::unknown_user: return "unknown_user";
    case ErrorCode::user_exists: return "user_exists";
    case ErrorCode::unknown_team: return "unknown_team";
    case ErrorCode::team_exists: return "team_exists";
    case ErrorCode::unknown_challenge: return "unknown_challenge";
    case ErrorCode::not_owner: return "not_owner";
    case ErrorCode::reason_empty: return "reason_empty";
    case ErrorCode::undo_not_class_coverage: return "undo_not_class_coverage";
    case ErrorCode::illegal_transition: return "illegal_transition";
    case ErrorCode::shelf_full: return "shelf_full";
    case ErrorCode::no_free_slot: return "no_free_slot";
    case ErrorCode::recipient_unknown: return "recipient_unknown";
    case ErrorCode::self_send: return "self_send";
    case ErrorCode::duplicate_challenge: return "duplicate_challenge";
    case ErrorCode::quest_already_active: return "quest_already_active";
    case ErrorCode::duplicate_achievement_id: return "duplicate_achievement_id";
    case ErrorCode::malformed_condition: return "malformed_condition";
    case ErrorCode::avatar_out_of_range: return "avatar_out_of_range";
    case ErrorCode::stale_build: return "stale_build";
    case ErrorCode::corrupt_state: return "corrupt_state";
    case ErrorCode::lock_not_held: return "lock_not_held";
    case ErrorCode::lock_busy: return "lock_busy";
    case ErrorCode::storage_error: return "storage_error";
    case ErrorCode::bad_credentials: return "bad_credentials";
    case ErrorCode::unauthorized: return "unauthorized";
    case ErrorCode::bad_request: return "bad_request";
    case ErrorCode::not_found: return "not_found";
    }
    return "unknown";
}

}  // namespace gamici
