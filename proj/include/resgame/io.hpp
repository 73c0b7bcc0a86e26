#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace resgame {

// Shortest round-trip decimal form, '.' separator, independent of locale.
std::string format_double(double x);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  // Index of a header column; throws kInvalidArgument if absent.
  std::size_t column(std::string_view name) const;
};

// Numeric CSV with one header row. Throws kInvalidArgument on malformed input.
CsvTable parse_csv(std::string_view text);

void write_csv(std::ostream& os, const CsvTable& table);

}  // namespace resgame
