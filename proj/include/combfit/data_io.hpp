#pragma once

// CSV ingestion for claim series plus the descriptive statistics used to
// sanity-check a dataset (per-column counts and moments, pairwise and joint
// no-jump / co-jump counts).

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "combfit/levy.hpp"
#include "combfit/model.hpp"

namespace combfit {

enum class ClaimUnit { kMillions, kDkk };  // kDkk divides by 1e6 at ingestion

struct LoadOptions {
  ClaimUnit unit = ClaimUnit::kMillions;
  // Column treated as an opaque date label when present (by header name).
  std::string date_column = "date";
};

ClaimSeries load_claims(const std::string& path, const LoadOptions& opts = {});
ClaimSeries parse_claims_csv(std::istream& in, const LoadOptions& opts);

void write_claims_csv(const ClaimSeries& series, std::ostream& out);
void write_claims_csv(const ClaimSeries& series, const std::string& path);

// Event lists serialize as: time,x_1,...,x_d.
void write_events_csv(const std::vector<LevyEvent>& events, int dim, std::ostream& out);

struct ColumnSummary {
  std::string label;
  long n_positive = 0;
  double share = 0.0;  // n_positive / n_days
  double mean = 0.0;   // over positives
  double min = 0.0;    // over positives
  double max = 0.0;
};

struct DatasetSummary {
  long n_days = 0;
  std::vector<ColumnSummary> columns;
  // Pairwise counts, symmetric with zero diagonal.
  std::vector<std::vector<long>> pair_co_jumps;  // both strictly positive
  std::vector<std::vector<long>> pair_no_jumps;  // both zero
  long joint_co_jumps = 0;  // all columns strictly positive
  long joint_no_jumps = 0;  // all columns zero
  // Exact-active-set counts keyed by bitmask (size 2^d for d <= 16).
  std::vector<long> active_set_counts;
};

DatasetSummary summarize(const ClaimSeries& series);

// Restriction to a subset of columns by label.
ClaimSeries select_columns(const ClaimSeries& series, const std::vector<std::string>& labels);

}  // namespace combfit
