#include "tsagrid/result_table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "tsagrid/error.hpp"

namespace tsagrid {

namespace {

constexpr std::string_view kErrorColumn = "error";

std::string csv_field(std::string_view text) {
    if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
    std::string quoted = "\"";
    for (char c : text) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

}  // namespace

std::string_view to_string(OutputFormat format) noexcept {
    return format == OutputFormat::csv ? "csv" : "jsonl";
}

std::optional<OutputFormat> parse_output_format(std::string_view name) noexcept {
    if (name == "csv") return OutputFormat::csv;
    if (name == "jsonl") return OutputFormat::jsonl;
    return std::nullopt;
}

ResultTable::ResultTable(std::vector<std::string> columns, Provenance provenance)
    : columns_(std::move(columns)), provenance_(std::move(provenance)) {}

void ResultTable::add_row(std::vector<std::optional<double>> values, std::string error) {
    if (values.size() != columns_.size())
        throw Error(ErrorCode::parameter, "row has " + std::to_string(values.size()) +
                                              " cells, table has " + std::to_string(columns_.size()) +
                                              " columns");
    for (const auto& v : values) {
        if (v && !std::isfinite(*v)) {
            add_error_row("non_finite");
            return;
        }
    }
    rows_.push_back(ResultRow{std::move(values), std::move(error)});
}

void ResultTable::add_error_row(std::string error) {
    rows_.push_back(ResultRow{std::vector<std::optional<double>>(columns_.size()), std::move(error)});
}

void ResultTable::append(const ResultTable& other) {
    if (other.columns_ != columns_) throw Error(ErrorCode::parameter, "appending a table with other columns");
    rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end());
}

std::size_t ResultTable::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i] == name) return i;
    throw Error(ErrorCode::parameter, "no column named " + std::string(name));
}

std::string format_number(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

void write_csv(const ResultTable& table, std::ostream& out) {
    const auto& prov = table.provenance();
    if (!prov.version.empty()) out << "# tsagrid " << prov.version << '\n';
    if (!prov.scenario_hash.empty()) out << "# scenario-sha256 " << prov.scenario_hash << '\n';
    for (const auto& c : table.columns()) out << csv_field(c) << ',';
    out << kErrorColumn << '\n';
    for (const auto& row : table.rows()) {
        for (const auto& v : row.values) {
            if (v) out << format_number(*v);
            out << ',';
        }
        out << csv_field(row.error) << '\n';
    }
}

void write_jsonl(const ResultTable& table, std::ostream& out) {
    const auto& prov = table.provenance();
    nlohmann::ordered_json header;
    header["provenance"] = {{"version", prov.version}, {"scenario_sha256", prov.scenario_hash}};
    header["columns"] = table.columns();
    out << header.dump() << '\n';
    for (const auto& row : table.rows()) {
        nlohmann::ordered_json obj;
        for (std::size_t i = 0; i < row.values.size(); ++i) {
            const auto& v = row.values[i];
            obj[table.columns()[i]] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
        }
        obj[std::string(kErrorColumn)] = row.error.empty() ? nlohmann::ordered_json(nullptr)
                                                           : nlohmann::ordered_json(row.error);
        out << obj.dump() << '\n';
    }
}

void emit(const ResultTable& table, const std::filesystem::path& path, OutputFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
    if (format == OutputFormat::csv)
        write_csv(table, out);
    else
        write_jsonl(table, out);
    out.flush();
    if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

}  // namespace tsagrid
