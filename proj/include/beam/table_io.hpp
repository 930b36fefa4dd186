#pragma once

// Delimited text input and the TSV/JSON writers used by the command line.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "beam/core_model.hpp"

namespace beam {

enum class Delimiter { tab, comma, automatic };

struct TableReadOptions {
  Delimiter delimiter = Delimiter::automatic;
  /// nullopt: treat the first row as a header when any of its cells is not numeric.
  std::optional<bool> has_header;
  /// Input stores variables in rows and observations in columns.
  bool transpose = false;
};

struct RawTable {
  /// Observations in rows, variables in columns.
  Eigen::MatrixXd values;
  /// Empty when the input had no header.
  std::vector<std::string> names;
};

/// Throws InputError with a line-numbered message on malformed input; missing
/// cells (empty, NA, NaN, null) are all listed in one error.
RawTable read_table(const std::string& path, const TableReadOptions& options = {});
RawTable parse_table(const std::string& text, const TableReadOptions& options = {});

/// Square numeric matrix without header (used for explicit prior matrices).
Eigen::MatrixXd read_matrix(const std::string& path);

/// 17 significant digits, round-trippable.
std::string format_real(double x);
/// Scientific notation with 17 significant digits.
std::string format_sci(double x);

}  // namespace beam
