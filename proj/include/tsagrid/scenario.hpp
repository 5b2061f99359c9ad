#pragma once

#include <yaml-cpp/yaml.h>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsagrid/error.hpp"
#include "tsagrid/result_table.hpp"

namespace tsagrid {

inline constexpr std::string_view kVersion = "0.1.0";

enum class ScenarioKind { line_fault, voltage_stability, event_location, gps_spoof };

std::string_view to_string(ScenarioKind kind) noexcept;
std::optional<ScenarioKind> parse_scenario_kind(std::string_view name) noexcept;
std::span<const ScenarioKind> all_scenario_kinds() noexcept;

/// Scenario problems: parse errors, schema violations, unknown kinds. Messages
/// carry `source:line:column: field: ...` when the position is known.
class ScenarioError : public Error {
public:
    explicit ScenarioError(const std::string& message) : Error(ErrorCode::scenario, message) {}
};

/// One swept parameter, addressed by a dotted path into the scenario document
/// (`attack.receiving.dtheta_deg`, `anchors.0.x`).
struct SweepAxis {
    std::string parameter;
    double start = 0.0;
    double stop = 0.0;
    std::size_t steps = 1;
    /// false: the grid is (start, stop] with `steps` equal intervals, which
    /// avoids sampling both -180 and 180 degrees.
    bool include_start = true;

    std::vector<double> values() const;
};

struct OutputSpec {
    std::string path;
    OutputFormat format = OutputFormat::csv;
    std::string trajectory_path;  ///< gps_spoof only: per-step tracked phase dump
};

struct Scenario {
    ScenarioKind kind = ScenarioKind::line_fault;
    std::string name;
    std::string source;  ///< file name used in diagnostics
    std::string hash;    ///< hex SHA-256 of the scenario text
    YAML::Node document;
    std::vector<SweepAxis> sweep;
    OutputSpec output;

    std::size_t grid_size() const;
};

/// Parses and fully validates a scenario. Throws ScenarioError, or Error(io) when unreadable.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(std::string_view text, std::string source = "<scenario>");

/// Result columns for the scenario: sweep parameters first, then the kind's columns.
std::vector<std::string> result_columns(const Scenario& scenario);

/**
 * Evaluates every grid point (lexicographic, first axis slowest). Points may
 * run on up to `threads` workers; rows are assembled in grid order, so the
 * table does not depend on the thread count. Failures at a point become
 * error rows.
 */
ResultTable run_sweep(const Scenario& scenario, unsigned threads = 1);

/// gps_spoof only, single grid point: columns (step, tracked_phase_chips).
ResultTable spoof_trajectory(const Scenario& scenario);

std::string sha256_hex(std::string_view data);

}  // namespace tsagrid
