#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "combfit/data_io.hpp"
#include "combfit/errors.hpp"
#include "combfit/model.hpp"
#include "combfit/rng.hpp"

using namespace combfit;

TEST_CASE("csv parsing: header, date column, values") {
  std::istringstream in(
      "date,building,contents,profits\n"
      "1980-01-03,1.5,0,0.2\n"
      "1980-01-04,0,0,0\n"
      "1980-01-05,2.25,0.5,0\n");
  const ClaimSeries s = parse_claims_csv(in, {});
  CHECK(s.n_rows == 3);
  CHECK(s.n_cols == 3);
  CHECK(s.labels == std::vector<std::string>{"building", "contents", "profits"});
  CHECK(s.at(0, 0) == 1.5);
  CHECK(s.at(1, 2) == 0.0);
  CHECK(s.at(2, 1) == 0.5);
}

TEST_CASE("csv parsing errors") {
  {
    std::istringstream empty("");
    CHECK_THROWS_AS(parse_claims_csv(empty, {}), ParseError);
  }
  {
    std::istringstream header_only("x1,x2\n");
    CHECK_THROWS_AS(parse_claims_csv(header_only, {}), ParseError);
  }
  {
    std::istringstream ragged("x1,x2\n1.0,2.0\n1.0\n");
    CHECK_THROWS_AS(parse_claims_csv(ragged, {}), ParseError);
  }
  {
    std::istringstream negative("x1,x2\n1.0,-2.0\n");
    CHECK_THROWS_AS(parse_claims_csv(negative, {}), DomainError);
  }
  {
    std::istringstream missing("x1,x2\n1.0,\n");
    CHECK_THROWS_AS(parse_claims_csv(missing, {}), ParseError);
  }
}

TEST_CASE("unit conversion: raw currency equals the millions load") {
  std::istringstream raw("x1\n2500000\n0\n750000\n");
  LoadOptions dkk;
  dkk.unit = ClaimUnit::kDkk;
  const ClaimSeries s = parse_claims_csv(raw, dkk);
  CHECK(s.at(0, 0) == doctest::Approx(2.5));
  CHECK(s.at(1, 0) == 0.0);
  CHECK(s.at(2, 0) == doctest::Approx(0.75));
}

TEST_CASE("write then load round trip is value identical") {
  CombBernoulliModel m{{make_lognormal_marginal(0.4, 0.0, 1.0),
                        make_lognormal_marginal(0.3, 0.5, 0.7)},
                       GaussianCopula{CorrelationMatrix::from_upper(2, std::vector<double>{0.5}),
                                      1e-7, 0}};
  const ClaimSeries s = simulate(m, 200, 10);
  std::ostringstream out;
  write_claims_csv(s, out);
  std::istringstream in(out.str());
  const ClaimSeries back = parse_claims_csv(in, {});
  CHECK(back.n_rows == s.n_rows);
  CHECK(back.values == s.values);
  CHECK(back.labels == s.labels);
}

TEST_CASE("summarize counts and moments") {
  std::istringstream in(
      "building,contents,profits\n"
      "1.0,2.0,0\n"
      "0,0,0\n"
      "3.0,0,0\n"
      "2.0,1.0,4.0\n");
  const ClaimSeries s = parse_claims_csv(in, {});
  const DatasetSummary sum = summarize(s);
  CHECK(sum.n_days == 4);
  CHECK(sum.columns[0].n_positive == 3);
  CHECK(sum.columns[0].mean == doctest::Approx(2.0));
  CHECK(sum.columns[0].min == 1.0);
  CHECK(sum.columns[0].max == 3.0);
  CHECK(sum.columns[2].n_positive == 1);
  CHECK(sum.pair_co_jumps[0][1] == 2);
  CHECK(sum.pair_no_jumps[1][2] == 2);
  CHECK(sum.joint_co_jumps == 1);
  CHECK(sum.joint_no_jumps == 1);
  // exact-pattern counts close under summation
  long total = 0;
  for (long c : sum.active_set_counts) total += c;
  CHECK(total == sum.n_days);
}

TEST_CASE("summarize: single all-zero row") {
  ClaimSeries s;
  s.n_rows = 1;
  s.n_cols = 3;
  s.values = {0.0, 0.0, 0.0};
  const DatasetSummary sum = summarize(s);
  CHECK(sum.joint_no_jumps == 1);
  CHECK(sum.joint_co_jumps == 0);
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      CHECK(sum.pair_no_jumps[i][j] == 1);
      CHECK(sum.pair_co_jumps[i][j] == 0);
    }
}

TEST_CASE("summarize is permutation invariant over rows") {
  CombBernoulliModel m{{make_lognormal_marginal(0.4, 0.0, 1.0),
                        make_lognormal_marginal(0.3, 0.5, 0.7)},
                       GaussianCopula{CorrelationMatrix::from_upper(2, std::vector<double>{0.4}),
                                      1e-7, 0}};
  ClaimSeries s = simulate(m, 300, 4);
  const DatasetSummary a = summarize(s);
  // rotate rows
  std::vector<double> rotated(s.values.end() - s.n_cols, s.values.end());
  rotated.insert(rotated.end(), s.values.begin(), s.values.end() - s.n_cols);
  s.values = rotated;
  const DatasetSummary b = summarize(s);
  CHECK(a.columns[0].n_positive == b.columns[0].n_positive);
  CHECK(a.pair_co_jumps == b.pair_co_jumps);
  CHECK(a.pair_no_jumps == b.pair_no_jumps);
  CHECK(a.active_set_counts == b.active_set_counts);
}

TEST_CASE("column selection by label") {
  std::istringstream in("a,b,c\n1,2,3\n0,5,6\n");
  const ClaimSeries s = parse_claims_csv(in, {});
  const ClaimSeries sel = select_columns(s, {"c", "a"});
  CHECK(sel.n_cols == 2);
  CHECK(sel.at(0, 0) == 3.0);
  CHECK(sel.at(0, 1) == 1.0);
  CHECK(sel.at(1, 0) == 6.0);
  CHECK_THROWS_AS(select_columns(s, {"nope"}), DomainError);
}

TEST_CASE("event csv serialization") {
  std::vector<LevyEvent> events;
  LevyEvent e1;
  e1.time = 0.5;
  e1.mask = 1;
  e1.losses = {1.25, 0.0};
  events.push_back(e1);
  std::ostringstream out;
  write_events_csv(events, 2, out);
  CHECK(out.str() == "time,x1,x2\n0.5,1.25,0\n");
}
