#pragma once

// Comma-separated tables with censored target cells.
//
// A target cell is a plain number (observed), `<v` (window (-inf, v]), `>v`
// (window [v, +inf)) or `[a,b]` (window [a, b]). Other columns must be plain
// numbers. A header row is required. Numbers use `.` as the decimal separator;
// scientific notation is accepted. Whitespace inside a cell is rejected.
//
// Commas inside brackets do not split fields, so `[1,2]` needs no quoting.
// Double-quoted fields are accepted and unquoted on input.

#include <string>
#include <string_view>
#include <vector>

#include "mttm/core.hpp"

namespace mttm::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // raw cell text

  std::size_t column(const std::string& name) const;  // npos when absent
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Throws ParseError with a line number on malformed input.
Table parse(std::string_view text);
Table read_file(const std::string& path);

/// Serializes cells verbatim; fields holding a quote or an unbracketed comma
/// are quoted.
std::string serialize(const Table& table);

/// Strict decimal parse of the whole string. Throws ParseError.
double parse_number(std::string_view cell);

/// Throws ParseError.
TargetEntry parse_target_cell(std::string_view cell);

/// Canonical text of an entry: numbers in shortest round-trip form.
std::string format_number(double v);
std::string format_target_cell(const TargetEntry& entry);

/// Targets in the given order, every other column a feature in file order,
/// plus a constant intercept column when requested. Unknown or repeated
/// target names raise ValidationError; bad cells raise ParseError.
Dataset to_dataset(const Table& table, const std::vector<std::string>& targets, bool intercept);

/// As to_dataset, but with the feature columns named explicitly. A name equal
/// to kInterceptName selects the constant column.
Dataset to_dataset(const Table& table, const std::vector<std::string>& targets,
                   const std::vector<std::string>& features);

}  // namespace mttm::csv
