#include "mttm/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mttm::csv {

namespace {

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

std::vector<std::string> split_record(std::string_view rec, std::size_t line) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  bool quoted = false;
  for (std::size_t p = 0; p < rec.size(); ++p) {
    const char c = rec[p];
    if (quoted) {
      if (c == '"') {
        if (p + 1 < rec.size() && rec[p + 1] == '"') {
          cur += '"';
          ++p;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
      continue;
    }
    if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == '[') {
      ++depth;
      cur += c;
    } else if (c == ']') {
      --depth;
      cur += c;
    } else if (c == ',' && depth <= 0) {
      out.push_back(std::move(cur));
      cur.clear();
      depth = 0;
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError(at_line(line) + "unterminated quoted field");
  out.push_back(std::move(cur));
  return out;
}

bool needs_quotes(const std::string& cell) {
  if (cell.find('"') != std::string::npos) return true;
  int depth = 0;
  for (char c : cell) {
    if (c == '[') ++depth;
    if (c == ']') --depth;
    if (c == ',' && depth <= 0) return true;
  }
  return depth != 0 || (!cell.empty() && cell.front() == '"');
}

bool has_marker(std::string_view cell) {
  return !cell.empty() && (cell.front() == '<' || cell.front() == '>' || cell.front() == '[');
}

std::string where(const Table& t, std::size_t row, std::size_t col) {
  // data rows start on line 2
  return at_line(row + 2) + "column '" + t.header[col] + "': ";
}

Dataset build(const Table& table, const std::vector<std::string>& targets,
              const std::vector<std::string>& features, bool require_all_numeric) {
  if (targets.empty()) throw ValidationError("at least one target column is required");
  std::vector<std::size_t> target_cols;
  std::set<std::string> seen;
  for (const auto& name : targets) {
    if (!seen.insert(name).second) throw ValidationError("target column '" + name + "' listed twice");
    const std::size_t c = table.column(name);
    if (c == Table::npos) throw ValidationError("target column '" + name + "' not found in header");
    target_cols.push_back(c);
  }

  std::vector<std::size_t> feature_cols;  // npos = intercept
  for (const auto& name : features) {
    if (name == kInterceptName) {
      feature_cols.push_back(Table::npos);
      continue;
    }
    if (seen.count(name)) throw ValidationError("column '" + name + "' is both target and feature");
    const std::size_t c = table.column(name);
    if (c == Table::npos) throw ValidationError("feature column '" + name + "' not found in header");
    feature_cols.push_back(c);
  }

  const std::size_t n = table.rows.size();
  Dataset data;
  data.target_names = targets;
  data.feature_names = features;
  data.y = TargetMatrix(targets.size(), n);
  data.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(features.size()));

  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    for (std::size_t k = 0; k < target_cols.size(); ++k) {
      try {
        data.y(k, i) = parse_target_cell(row[target_cols[k]]);
      } catch (const ParseError& e) {
        throw ParseError(where(table, i, target_cols[k]) + e.what());
      }
    }
    if (require_all_numeric) {
      for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (std::find(target_cols.begin(), target_cols.end(), c) != target_cols.end()) continue;
        if (has_marker(row[c]))
          throw ParseError(where(table, i, c) + "censoring marker in non-target column");
        try {
          parse_number(row[c]);
        } catch (const ParseError& e) {
          throw ParseError(where(table, i, c) + e.what());
        }
      }
    }
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const auto r = static_cast<Eigen::Index>(i);
      const auto cj = static_cast<Eigen::Index>(j);
      if (feature_cols[j] == Table::npos) {
        data.x(r, cj) = 1.0;
      } else {
        if (has_marker(row[feature_cols[j]]))
          throw ParseError(where(table, i, feature_cols[j]) + "censoring marker in non-target column");
        data.x(r, cj) = parse_number(row[feature_cols[j]]);
      }
    }
  }
  return data;
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? npos : static_cast<std::size_t>(it - header.begin());
}

Table parse(std::string_view text) {
  Table t;
  std::size_t line = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view rec = text.substr(pos, end - pos);
    pos = end + 1;
    ++line;
    if (!rec.empty() && rec.back() == '\r') rec.remove_suffix(1);
    if (rec.empty()) {
      if (pos >= text.size()) break;
      throw ParseError(at_line(line) + "empty line");
    }
    auto fields = split_record(rec, line);
    if (!have_header) {
      for (const auto& h : fields)
        if (h.empty()) throw ParseError(at_line(line) + "empty column name in header");
      std::set<std::string> uniq(fields.begin(), fields.end());
      if (uniq.size() != fields.size()) throw ParseError(at_line(line) + "duplicate column name in header");
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ParseError(at_line(line) + "expected " + std::to_string(t.header.size()) +
                       " fields, found " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (!have_header) throw ParseError("missing header row");
  return t;
}

Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string serialize(const Table& table) {
  std::string out;
  auto emit = [&out](const std::vector<std::string>& fields) {
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c) out += ',';
      const std::string& f = fields[c];
      if (needs_quotes(f)) {
        out += '"';
        for (char ch : f) {
          if (ch == '"') out += '"';
          out += ch;
        }
        out += '"';
      } else {
        out += f;
      }
    }
    out += '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
  return out;
}

double parse_number(std::string_view cell) {
  if (cell.empty()) throw ParseError("empty cell");
  for (char c : cell)
    if (std::isspace(static_cast<unsigned char>(c))) throw ParseError("whitespace in cell '" + std::string(cell) + "'");
  std::string_view body = cell;
  if (body.front() == '+') body.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v,
                                         std::chars_format::general);
  if (ec != std::errc() || ptr != body.data() + body.size() || body.empty())
    throw ParseError("not a number: '" + std::string(cell) + "'");
  if (!std::isfinite(v)) throw ParseError("non-finite number: '" + std::string(cell) + "'");
  return v;
}

TargetEntry parse_target_cell(std::string_view cell) {
  if (cell.empty()) throw ParseError("empty cell");
  if (cell.front() == '<') return Censored{CensoringBound::left(parse_number(cell.substr(1)))};
  if (cell.front() == '>') return Censored{CensoringBound::right(parse_number(cell.substr(1)))};
  if (cell.front() == '[') {
    if (cell.back() != ']') throw ParseError("unterminated interval '" + std::string(cell) + "'");
    const std::string_view body = cell.substr(1, cell.size() - 2);
    const std::size_t comma = body.find(',');
    if (comma == std::string_view::npos || body.find(',', comma + 1) != std::string_view::npos)
      throw ParseError("interval needs exactly two bounds: '" + std::string(cell) + "'");
    const double lo = parse_number(body.substr(0, comma));
    const double hi = parse_number(body.substr(comma + 1));
    if (!(lo < hi)) throw ParseError("interval lower bound must be below upper: '" + std::string(cell) + "'");
    return Censored{CensoringBound::interval(lo, hi)};
  }
  return Observed{parse_number(cell)};
}

std::string format_number(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_target_cell(const TargetEntry& entry) {
  if (const auto* o = std::get_if<Observed>(&entry)) return format_number(o->value);
  const CensoringBound& b = std::get<Censored>(entry).bound;
  if (b.lower == -kInf) return "<" + format_number(b.upper);
  if (b.upper == kInf) return ">" + format_number(b.lower);
  return "[" + format_number(b.lower) + "," + format_number(b.upper) + "]";
}

Dataset to_dataset(const Table& table, const std::vector<std::string>& targets, bool intercept) {
  std::vector<std::string> features;
  for (const auto& h : table.header)
    if (std::find(targets.begin(), targets.end(), h) == targets.end()) features.push_back(h);
  if (intercept) features.emplace_back(kInterceptName);
  return build(table, targets, features, true);
}

Dataset to_dataset(const Table& table, const std::vector<std::string>& targets,
                   const std::vector<std::string>& features) {
  return build(table, targets, features, true);
}

}  // namespace mttm::csv
