#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace tsagrid {

enum class OutputFormat { csv, jsonl };

std::string_view to_string(OutputFormat format) noexcept;
std::optional<OutputFormat> parse_output_format(std::string_view name) noexcept;

struct Provenance {
    std::string scenario_hash;  ///< hex SHA-256 of the scenario text
    std::string version;
};

/// One row: a cell per column (empty cells allowed) plus an error code, empty when clean.
struct ResultRow {
    std::vector<std::optional<double>> values;
    std::string error;
};

/**
 * Rectangular numeric table. Non-finite values are never stored: a row that
 * carries one is turned into a `non_finite` error row on insertion.
 */
class ResultTable {
public:
    ResultTable() = default;
    explicit ResultTable(std::vector<std::string> columns, Provenance provenance = {});

    const std::vector<std::string>& columns() const noexcept { return columns_; }
    const std::vector<ResultRow>& rows() const noexcept { return rows_; }
    const Provenance& provenance() const noexcept { return provenance_; }
    void set_provenance(Provenance p) { provenance_ = std::move(p); }

    void add_row(std::vector<std::optional<double>> values, std::string error = {});
    void add_error_row(std::string error);
    /// Appends rows of a table with identical columns.
    void append(const ResultTable& other);

    std::size_t column_index(std::string_view name) const;

private:
    std::vector<std::string> columns_;
    std::vector<ResultRow> rows_;
    Provenance provenance_;
};

/// Shortest round-trip decimal rendering ('.' separator, locale independent).
std::string format_number(double value);

void write_csv(const ResultTable& table, std::ostream& out);
void write_jsonl(const ResultTable& table, std::ostream& out);

/// Writes the table to `path`; throws Error(io) naming the path on failure.
void emit(const ResultTable& table, const std::filesystem::path& path, OutputFormat format);

}  // namespace tsagrid
