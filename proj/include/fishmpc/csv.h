#ifndef FISHMPC_CSV_H_
#define FISHMPC_CSV_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace fishmpc {

// Numeric CSV with a fixed header line.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// Reads a numeric CSV and checks that its header equals `expected_header`.
// Throws std::runtime_error with the offending line number on malformed
// input.
CsvTable read_csv(std::istream& in,
                  const std::vector<std::string>& expected_header);

// Joins values with commas using shortest round-trip formatting.
std::string csv_row(const std::vector<double>& values);

}  // namespace fishmpc

#endif  // FISHMPC_CSV_H_
