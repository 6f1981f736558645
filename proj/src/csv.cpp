#include "qmem/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qmem/errors.hpp"

namespace qmem {

namespace {

std::string strip_ws(const std::string& s) {
    std::string out;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) out += c;
    return out;
}

std::size_t count_columns(const std::string& header) {
    return static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
}

}  // namespace

std::vector<std::vector<double>> read_csv(std::istream& in, const std::string& expected_header) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("csv: empty stream");
    if (strip_ws(line) != strip_ws(expected_header))
        throw InvalidInput("csv: expected header '" + expected_header + "', got '" + line + "'");
    const std::size_t ncol = count_columns(expected_header);

    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (strip_ws(line).empty()) continue;
        std::vector<double> row;
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                row.push_back(std::stod(cell, &pos));
            } catch (const std::exception&) {
                throw InvalidInput("csv: non-numeric cell '" + cell + "' at line " +
                                   std::to_string(lineno));
            }
        }
        if (row.size() != ncol)
            throw InvalidInput("csv: expected " + std::to_string(ncol) + " columns at line " +
                               std::to_string(lineno) + ", got " + std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<std::vector<double>> read_csv_file(const std::string& path,
                                               const std::string& expected_header) {
    std::ifstream f(path);
    if (!f) throw InvalidInput("cannot open: " + path);
    return read_csv(f, expected_header);
}

void write_csv(std::ostream& out, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
    out << header << "\n";
    char buf[40];
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
            out << buf << (i + 1 == row.size() ? "\n" : ",");
        }
    }
}

void write_csv_file(const std::string& path, const std::string& header,
                    const std::vector<std::vector<double>>& rows) {
    std::ofstream f(path);
    if (!f) throw InvalidInput("cannot open for writing: " + path);
    write_csv(f, header, rows);
}

}  // namespace qmem
