#pragma once

#include "dynqr/quantile_core.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynqr::cli {

/// Malformed input file; the message names the row and column.
class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a named column; throws CsvError if absent.
    [[nodiscard]] std::size_t column(const std::string& name) const;
    /// Parses a column as finite doubles.
    [[nodiscard]] std::vector<double> numeric_column(const std::string& name) const;
};

[[nodiscard]] CsvTable parse_csv(const std::string& text, const std::string& source = "<input>");
[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path);

/// Series with a required `y` column and the named exogenous columns. A `t`
/// or `date` column, if present, is kept as timestamps.
[[nodiscard]] SeriesData read_series_csv(const std::filesystem::path& path,
                                         const std::vector<std::string>& exog_columns);

/// 17 significant digits, so values survive a text round trip.
[[nodiscard]] std::string format_number(double v);

/// Writes rows of already-formatted cells.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace dynqr::cli
