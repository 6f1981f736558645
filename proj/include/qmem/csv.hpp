#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qmem {

// Numeric CSV with a mandatory header. The header is matched with all
// whitespace stripped; rows must have exactly as many columns as the header.
std::vector<std::vector<double>> read_csv(std::istream& in, const std::string& expected_header);
std::vector<std::vector<double>> read_csv_file(const std::string& path,
                                               const std::string& expected_header);

// Rows are written with %.17g so identical inputs give identical bytes.
void write_csv(std::ostream& out, const std::string& header,
               const std::vector<std::vector<double>>& rows);
void write_csv_file(const std::string& path, const std::string& header,
                    const std::vector<std::vector<double>>& rows);

}  // namespace qmem
