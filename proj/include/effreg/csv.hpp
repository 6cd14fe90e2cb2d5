#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace effreg {

// Numeric table with a named header row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_cols() const { return header.size(); }

    // Column index by name; throws InputError listing available columns.
    std::size_t col(const std::string& name) const;

    // One column as a contiguous vector.
    std::vector<double> column(std::size_t index) const;
};

// Strict numeric CSV reader: first row is the header, every later row holds
// one finite number per column. Errors carry line and column positions.
CsvTable read_csv(const std::string& path);

// Deterministic round-trip double formatting (%.17g).
std::string format_double(double x);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace effreg
