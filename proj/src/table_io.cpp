#include "beam/table_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

namespace beam {

namespace {

constexpr std::size_t kMaxListedCells = 20;

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool is_missing(std::string_view cell) {
  std::string lower(cell);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower.empty() || lower == "na" || lower == "nan" || lower == "null" || lower == "?";
}

std::optional<double> parse_number(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

char pick_delimiter(Delimiter d, std::string_view first_line) {
  switch (d) {
    case Delimiter::tab: return '\t';
    case Delimiter::comma: return ',';
    case Delimiter::automatic: break;
  }
  return first_line.find('\t') != std::string_view::npos ? '\t' : ',';
}

}  // namespace

RawTable parse_table(const std::string& text, const TableReadOptions& options) {
  std::vector<std::pair<std::size_t, std::string_view>> lines;  // (1-based line number, content)
  {
    std::size_t start = 0, number = 0;
    const std::string_view all(text);
    while (start <= all.size()) {
      std::size_t end = all.find('\n', start);
      if (end == std::string_view::npos) end = all.size();
      ++number;
      std::string_view line = all.substr(start, end - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!trim(line).empty()) lines.emplace_back(number, line);
      if (end == all.size()) break;
      start = end + 1;
    }
  }
  if (lines.empty()) throw InputError("input is empty");

  const char delim = pick_delimiter(options.delimiter, lines.front().second);
  const std::vector<std::string_view> first = split(lines.front().second, delim);
  bool header = false;
  if (options.has_header) {
    header = *options.has_header;
  } else {
    header = std::any_of(first.begin(), first.end(), [](std::string_view c) {
      const std::string_view t = trim(c);
      return !is_missing(t) && !parse_number(t);
    });
  }

  RawTable table;
  const std::size_t width = first.size();
  if (header) {
    for (std::string_view c : first) table.names.emplace_back(trim(c));
  }
  const std::size_t data_begin = header ? 1 : 0;
  const std::size_t rows = lines.size() - data_begin;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));

  std::vector<std::string> missing;
  std::size_t missing_total = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& [line_no, line] = lines[data_begin + r];
    const std::vector<std::string_view> cells = split(line, delim);
    if (cells.size() != width) {
      throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                       " fields, found " + std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < width; ++c) {
      const std::string_view cell = trim(cells[c]);
      if (is_missing(cell)) {
        if (missing.size() < kMaxListedCells) {
          missing.push_back("line " + std::to_string(line_no) + " column " + std::to_string(c + 1));
        }
        ++missing_total;
        continue;
      }
      const std::optional<double> v = parse_number(cell);
      if (!v) {
        throw InputError("line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                         ": not a finite number: '" + std::string(cell) + "'");
      }
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *v;
    }
  }
  if (missing_total > 0) {
    std::ostringstream msg;
    msg << missing_total << " missing value(s); missing values are not accepted:";
    for (const std::string& m : missing) msg << "\n  " << m;
    if (missing_total > missing.size()) msg << "\n  ...";
    throw InputError(msg.str());
  }

  if (options.transpose) {
    // Header cells would name observations, not variables.
    table.values = values.transpose();
    table.names.clear();
  } else {
    table.values = std::move(values);
  }
  return table;
}

RawTable read_table(const std::string& path, const TableReadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open input file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (!options.transpose) return parse_table(buffer.str(), options);

  // Genes-as-rows layout: optional header row of sample ids, optional first
  // column of variable names.
  const std::string text = buffer.str();
  TableReadOptions inner = options;
  inner.transpose = false;
  inner.has_header = false;
  std::istringstream lines(text);
  std::string line;
  std::ostringstream numeric;
  std::vector<std::string> names;
  std::size_t line_no = 0;
  bool first = true;
  char delim = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (delim == 0) delim = pick_delimiter(options.delimiter, line);
    std::vector<std::string_view> cells = split(line, delim);
    if (first) {
      first = false;
      const bool header_row = options.has_header.value_or(std::any_of(
          cells.begin() + 1, cells.end(), [](std::string_view c) {
            const std::string_view t = trim(c);
            return !is_missing(t) && !parse_number(t);
          }));
      if (header_row) continue;
    }
    const std::string_view lead = trim(cells.front());
    std::size_t skip = 0;
    if (!is_missing(lead) && !parse_number(lead)) {
      names.emplace_back(lead);
      skip = 1;
    }
    for (std::size_t c = skip; c < cells.size(); ++c) {
      if (c > skip) numeric << delim;
      numeric << cells[c];
    }
    numeric << '\n';
  }
  RawTable rows = parse_table(numeric.str(), inner);
  RawTable out;
  out.values = rows.values.transpose();
  if (!names.empty()) {
    if (static_cast<Eigen::Index>(names.size()) != out.values.cols()) {
      throw InputError("either every row or no row must start with a variable name");
    }
    out.names = std::move(names);
  }
  return out;
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  TableReadOptions options;
  options.has_header = false;
  return read_table(path, options).values;
}

std::string format_real(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_sci(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

}  // namespace beam
