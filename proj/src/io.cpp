#include "resgame/io.hpp"

#include <charconv>
#include <ostream>

#include "resgame/error.hpp"

namespace resgame {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return k;
  }
  throw SolverError(ErrorCode::kInvalidArgument, "no CSV column " + std::string(name));
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

}  // namespace

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t pos = 0;
  bool first = true;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const std::vector<std::string_view> cells = split(line);
    if (first) {
      for (std::string_view c : cells) table.header.emplace_back(c);
      first = false;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw SolverError(ErrorCode::kInvalidArgument,
                        "CSV line " + std::to_string(line_no) + ": wrong column count");
    }
    std::vector<double> row;
    for (std::string_view c : cells) {
      double v = 0.0;
      const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (res.ec != std::errc() || res.ptr != c.data() + c.size()) {
        throw SolverError(ErrorCode::kInvalidArgument,
                          "CSV line " + std::to_string(line_no) + ": bad number '" +
                              std::string(c) + "'");
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (first) throw SolverError(ErrorCode::kInvalidArgument, "CSV has no header");
  return table;
}

void write_csv(std::ostream& os, const CsvTable& table) {
  for (std::size_t k = 0; k < table.header.size(); ++k) {
    os << (k ? "," : "") << table.header[k];
  }
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      os << (k ? "," : "") << format_double(row[k]);
    }
    os << '\n';
  }
}

}  // namespace resgame
