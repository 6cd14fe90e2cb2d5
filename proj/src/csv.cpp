#include "effreg/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "effreg/error.hpp"

namespace effreg {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r'))
        --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

} // namespace

std::size_t CsvTable::col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    std::ostringstream os;
    os << "column '" << name << "' not found; available columns:";
    for (const auto& h : header) os << " '" << h << "'";
    throw InputError(os.str());
}

std::vector<double> CsvTable::column(std::size_t index) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.at(index));
    return out;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "' for reading");
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            table.header = split_fields(line);
            if (table.header.size() == 1 && table.header[0].empty())
                throw InputError(path + ":1: empty header row");
            continue;
        }
        if (trim(line).empty()) continue; // blank separator lines
        const auto fields = split_fields(line);
        if (fields.size() != table.header.size()) {
            std::ostringstream os;
            os << path << ":" << line_no << ": expected "
               << table.header.size() << " fields, found " << fields.size();
            throw InputError(os.str());
        }
        std::vector<double> row(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const std::string& f = fields[c];
            char* end = nullptr;
            const double val = std::strtod(f.c_str(), &end);
            if (f.empty() || end != f.c_str() + f.size() ||
                !std::isfinite(val)) {
                std::ostringstream os;
                os << path << ":" << line_no << ": column " << (c + 1) << " ('"
                   << table.header[c] << "'): cannot parse '" << f
                   << "' as a finite number";
                throw InputError(os.str());
            }
            row[c] = val;
        }
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty())
        throw InputError(path + ": empty input");
    return table;
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw InputError("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "' for reading");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace effreg
