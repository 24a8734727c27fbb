#include "fishmpc/csv.h"

#include <charconv>
#include <istream>
#include <stdexcept>

#include <fmt/format.h>

namespace fishmpc {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

CsvTable read_csv(std::istream& in,
                  const std::vector<std::string>& expected_header) {
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty input");
  table.header = split(line);
  if (table.header != expected_header) {
    throw std::runtime_error(fmt::format("csv: unexpected header '{}'", line));
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line);
    if (fields.size() != expected_header.size()) {
      throw std::runtime_error(fmt::format(
          "csv: line {} has {} fields, expected {}", line_no, fields.size(),
          expected_header.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const std::string& f = fields[i];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), row[i]);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw std::runtime_error(
            fmt::format("csv: line {} field {} is not a number: '{}'",
                        line_no, i + 1, f));
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string csv_row(const std::vector<double>& values) {
  return fmt::format("{}", fmt::join(values, ","));
}

}  // namespace fishmpc
