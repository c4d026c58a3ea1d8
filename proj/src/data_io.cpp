#include "combfit/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "combfit/errors.hpp"

namespace combfit {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& cell, long row, int col) {
  const std::string t = trim(cell);
  if (t.empty())
    throw ParseError("load_claims: missing value at row " + std::to_string(row) + ", column " +
                     std::to_string(col));
  double v = 0.0;
  const auto* begin = t.data();
  const auto* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw ParseError("load_claims: cannot parse value '" + t + "' at row " + std::to_string(row));
  return v;
}

}  // namespace

ClaimSeries parse_claims_csv(std::istream& in, const LoadOptions& opts) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("load_claims: empty file");
  const std::vector<std::string> header = split_csv_line(line);
  int date_col = -1;
  std::vector<int> value_cols;
  std::vector<std::string> labels;
  for (size_t c = 0; c < header.size(); ++c) {
    const std::string name = trim(header[c]);
    if (name == opts.date_column && date_col < 0) {
      date_col = static_cast<int>(c);
    } else {
      value_cols.push_back(static_cast<int>(c));
      labels.push_back(name.empty() ? "x" + std::to_string(value_cols.size()) : name);
    }
  }
  if (value_cols.empty()) throw ParseError("load_claims: no claim columns in header");

  ClaimSeries series;
  series.n_cols = static_cast<int>(value_cols.size());
  series.labels = labels;
  const double scale = opts.unit == ClaimUnit::kDkk ? 1e-6 : 1.0;

  long row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("load_claims: ragged row " + std::to_string(row + 1) + " (" +
                       std::to_string(cells.size()) + " cells, header has " +
                       std::to_string(header.size()) + ")");
    for (size_t k = 0; k < value_cols.size(); ++k) {
      const double v = parse_number(cells[value_cols[k]], row + 1, static_cast<int>(k));
      if (v < 0.0)
        throw DomainError("load_claims: negative claim at row " + std::to_string(row + 1));
      series.values.push_back(v * scale);
    }
    ++row;
  }
  if (row == 0) throw ParseError("load_claims: no data rows");
  series.n_rows = row;
  series.validate();
  return series;
}

ClaimSeries load_claims(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_claims: cannot open '" + path + "'");
  return parse_claims_csv(in, opts);
}

void write_claims_csv(const ClaimSeries& series, std::ostream& out) {
  for (int c = 0; c < series.n_cols; ++c) {
    if (c) out << ',';
    out << (series.labels.empty() ? "x" + std::to_string(c + 1) : series.labels[c]);
  }
  out << '\n';
  out.precision(17);
  for (long r = 0; r < series.n_rows; ++r) {
    for (int c = 0; c < series.n_cols; ++c) {
      if (c) out << ',';
      out << series.at(r, c);
    }
    out << '\n';
  }
}

void write_claims_csv(const ClaimSeries& series, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("write_claims_csv: cannot open '" + path + "' for writing");
  write_claims_csv(series, out);
}

void write_events_csv(const std::vector<LevyEvent>& events, int dim, std::ostream& out) {
  out << "time";
  for (int c = 0; c < dim; ++c) out << ",x" << (c + 1);
  out << '\n';
  out.precision(17);
  for (const LevyEvent& ev : events) {
    out << ev.time;
    for (int c = 0; c < dim; ++c) out << ',' << (c < static_cast<int>(ev.losses.size()) ? ev.losses[c] : 0.0);
    out << '\n';
  }
}

DatasetSummary summarize(const ClaimSeries& series) {
  series.validate();
  const int d = series.n_cols;
  DatasetSummary s;
  s.n_days = series.n_rows;
  s.columns.resize(d);
  for (int c = 0; c < d; ++c) {
    ColumnSummary& col = s.columns[c];
    col.label = series.labels.empty() ? "x" + std::to_string(c + 1) : series.labels[c];
    col.min = std::numeric_limits<double>::infinity();
    col.max = -std::numeric_limits<double>::infinity();
  }
  s.pair_co_jumps.assign(d, std::vector<long>(d, 0));
  s.pair_no_jumps.assign(d, std::vector<long>(d, 0));
  if (d <= 16) s.active_set_counts.assign(1u << d, 0);

  for (long r = 0; r < series.n_rows; ++r) {
    std::uint32_t mask = 0;
    bool all_pos = true, all_zero = true;
    for (int c = 0; c < d; ++c) {
      const double v = series.at(r, c);
      if (v > 0.0) {
        mask |= (1u << c);
        all_zero = false;
        ColumnSummary& col = s.columns[c];
        ++col.n_positive;
        col.mean += v;
        col.min = std::min(col.min, v);
        col.max = std::max(col.max, v);
      } else {
        all_pos = false;
      }
    }
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        const bool pi = (mask >> i) & 1u, pj = (mask >> j) & 1u;
        if (pi && pj) {
          ++s.pair_co_jumps[i][j];
          ++s.pair_co_jumps[j][i];
        } else if (!pi && !pj) {
          ++s.pair_no_jumps[i][j];
          ++s.pair_no_jumps[j][i];
        }
      }
    if (all_pos) ++s.joint_co_jumps;
    if (all_zero) ++s.joint_no_jumps;
    if (!s.active_set_counts.empty()) ++s.active_set_counts[mask];
  }
  for (int c = 0; c < d; ++c) {
    ColumnSummary& col = s.columns[c];
    col.share = static_cast<double>(col.n_positive) / s.n_days;
    if (col.n_positive > 0) {
      col.mean /= col.n_positive;
    } else {
      col.mean = 0.0;
      col.min = 0.0;
      col.max = 0.0;
    }
  }
  return s;
}

ClaimSeries select_columns(const ClaimSeries& series, const std::vector<std::string>& labels) {
  std::vector<int> cols;
  for (const std::string& want : labels) {
    const auto it = std::find(series.labels.begin(), series.labels.end(), want);
    if (it == series.labels.end())
      throw DomainError("select_columns: no column named '" + want + "'");
    cols.push_back(static_cast<int>(it - series.labels.begin()));
  }
  if (cols.empty()) throw DomainError("select_columns: no columns selected");
  ClaimSeries out;
  out.n_rows = series.n_rows;
  out.n_cols = static_cast<int>(cols.size());
  out.labels = labels;
  out.values.reserve(static_cast<size_t>(out.n_rows) * out.n_cols);
  for (long r = 0; r < series.n_rows; ++r)
    for (int c : cols) out.values.push_back(series.at(r, c));
  return out;
}

}  // namespace combfit
