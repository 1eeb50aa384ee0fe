#include "dynqr/cli/csv.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dynqr::cli {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return cells;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    throw CsvError("missing column '" + name + "'");
}

std::vector<double> CsvTable::numeric_column(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::string& cell = rows[r][c];
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
            // row numbers are 1-based data rows; the header is row 0
            throw CsvError("row " + std::to_string(r + 1) + ", column '" + name + "': '" + cell +
                           "' is not a finite number");
        }
        out[r] = v;
    }
    return out;
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    CsvTable table;
    bool have_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        auto cells = split(line);
        if (!have_header) {
            table.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw CsvError(source + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                           " fields, header has " + std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    if (!have_header) {
        throw CsvError(source + ": empty file (a header row is required)");
    }
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), path.string());
}

SeriesData read_series_csv(const std::filesystem::path& path, const std::vector<std::string>& exog_columns) {
    const CsvTable table = read_csv(path);
    SeriesData data;
    try {
        data.y = table.numeric_column("y");
        data.exog = Matrix(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(exog_columns.size()));
        for (std::size_t j = 0; j < exog_columns.size(); ++j) {
            const auto col = table.numeric_column(exog_columns[j]);
            for (std::size_t t = 0; t < col.size(); ++t) {
                data.exog(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = col[t];
            }
        }
    } catch (const CsvError& e) {
        throw CsvError(path.string() + ": " + e.what());
    }
    data.exog_names = exog_columns;
    for (const char* name : {"t", "date"}) {
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            if (table.header[c] == name && data.timestamps.empty()) {
                for (const auto& row : table.rows) {
                    data.timestamps.push_back(row[c]);
                }
            }
        }
    }
    return data;
}

std::string format_number(double v) { return fmt::format("{:.17g}", v); }

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    out << text;
    if (!out) {
        throw std::runtime_error("write failed for '" + path.string() + "'");
    }
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::string text;
    auto append_row = [&text](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) {
                text += ',';
            }
            text += cells[i];
        }
        text += '\n';
    };
    append_row(header);
    for (const auto& r : rows) {
        append_row(r);
    }
    write_text(path, text);
}

}  // namespace dynqr::cli
