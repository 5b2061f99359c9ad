#include "tsagrid/error.hpp"

namespace tsagrid {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::parameter: return "parameter";
        case ErrorCode::degenerate_scenario: return "degenerate_scenario";
        case ErrorCode::indeterminate_location: return "indeterminate_location";
        case ErrorCode::singular_attack: return "singular_attack";
        case ErrorCode::degenerate_measurement: return "degenerate_measurement";
        case ErrorCode::solver_failure: return "solver_failure";
        case ErrorCode::frame_degenerate: return "frame_degenerate";
        case ErrorCode::no_solution: return "no_solution";
        case ErrorCode::sensitivity_undefined: return "sensitivity_undefined";
        case ErrorCode::alignment_conflict: return "alignment_conflict";
        case ErrorCode::island: return "island";
        case ErrorCode::scenario: return "scenario";
        case ErrorCode::io: return "io";
    }
    return "unknown";
}

}  // namespace tsagrid
