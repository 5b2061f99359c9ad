#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tsagrid {

enum class ErrorCode {
    parameter,
    degenerate_scenario,
    indeterminate_location,
    singular_attack,
    degenerate_measurement,
    solver_failure,
    frame_degenerate,
    no_solution,
    sensitivity_undefined,
    alignment_conflict,
    island,
    scenario,
    io,
};

/// Stable snake_case name, used as the error-code column in result tables.
std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace tsagrid
