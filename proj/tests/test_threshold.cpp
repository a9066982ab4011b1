#include "combcast/threshold.hpp"

#include <cmath>

#include "combcast/rng.hpp"
#include "doctest.h"

using combcast::CostParams;
using combcast::ThresholdReport;
using combcast::ZipfModel;

namespace {

CostParams paper_params(double alpha, int subscribers = 500) {
  return CostParams{subscribers, 1.0, 1.0, 3.0, 1.0, ZipfModel(alpha, 100)};
}

}  // namespace

TEST_CASE("endpoint costs at the reference parameters") {
  CostParams p = paper_params(1.1);
  CHECK(combcast::total_time(p, 1) == doctest::Approx(500.0 / 3.0).epsilon(1e-12));
  CHECK(combcast::total_time(p, 101) == 100.0);
  CHECK_THROWS_AS(combcast::total_time(p, 0), std::out_of_range);
  CHECK_THROWS_AS(combcast::total_time(p, 102), std::out_of_range);
}

TEST_CASE("single subscriber prefers pure unicast") {
  CostParams p = paper_params(1.1, 1);
  ThresholdReport report = combcast::argmin_discrete(p);
  CHECK(report.best_threshold == 1);
  CHECK(combcast::time_increment(p, 1) >= 0.0);
  CHECK(report.improvement_vs_unicast == 0.0);
}

TEST_CASE("huge subscriber count prefers pure broadcast") {
  CostParams p = paper_params(1.1, 1000000000);
  ThresholdReport report = combcast::argmin_discrete(p);
  CHECK(report.best_threshold == 101);
}

TEST_CASE("exhaustive argmin matches the increment sign change") {
  combcast::CounterRng rng(21);
  uint64_t c = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const double alpha = rng.uniform(c++, 0.0, 3.0);
    const int k = 1 + static_cast<int>(std::pow(10.0, rng.uniform(c++, 0.0, 6.0)));
    const double ratio = std::pow(10.0, rng.uniform(c++, -1.0, 2.0));
    CostParams p{k, 1.0, 1.0, ratio, 1.0, ZipfModel(alpha, 100)};
    ThresholdReport report = combcast::argmin_discrete(p);
    CHECK(report.methods_agree);
    CHECK(report.best_threshold == report.sign_change_threshold);
  }
}

TEST_CASE("argmin minimizes the whole curve and dominates endpoints") {
  CostParams p = paper_params(1.1);
  ThresholdReport report = combcast::argmin_discrete(p);
  for (double t : report.total_time) CHECK(report.time_at_best <= t);
  CHECK(report.time_at_best <= report.total_time.front());
  CHECK(report.time_at_best <= report.total_time.back());
  CHECK(report.improvement_vs_unicast >= 0.0);
  CHECK(report.improvement_vs_unicast < 1.0);
  CHECK(report.improvement_vs_broadcast >= 0.0);
  CHECK(report.improvement_vs_broadcast < 1.0);
}

TEST_CASE("closed form requires a heavy-tailed shape") {
  CHECK_THROWS_AS(combcast::closed_form_threshold(paper_params(1.0)),
                  std::domain_error);
  CHECK_THROWS_AS(combcast::closed_form_threshold(paper_params(0.5)),
                  std::domain_error);
}

TEST_CASE("closed form depends only on the efficiency ratio") {
  CostParams a = paper_params(1.1);
  CostParams b = a;
  b.spf_unicast *= 2.0;
  b.spf_broadcast *= 2.0;
  CHECK(combcast::closed_form_threshold(a) ==
        doctest::Approx(combcast::closed_form_threshold(b)).epsilon(1e-12));
}

TEST_CASE("closed form lands inside the catalog at reference parameters") {
  CostParams p = paper_params(1.1);
  ThresholdReport report = combcast::argmin_discrete(p);
  REQUIRE(report.closed_form.has_value());
  REQUIRE(report.closed_form_rounded.has_value());
  CHECK(*report.closed_form > 1.0);
  CHECK(*report.closed_form < 101.0);
  // The continuous relaxation is an approximation; its cost must still be
  // in the neighborhood of the discrete optimum.
  const double t_cf = report.total_time[*report.closed_form_rounded - 1];
  CHECK(t_cf < report.total_time.front());
  CHECK(t_cf < report.total_time.back());
}

TEST_CASE("cost scale invariance in file size and bandwidth") {
  CostParams base = paper_params(1.3);
  CostParams both = base;
  both.file_size_bits *= 7.0;
  both.bandwidth_hz *= 7.0;
  CostParams only_s = base;
  only_s.file_size_bits *= 3.0;
  for (int i : {1, 17, 50, 101}) {
    CHECK(combcast::total_time(both, i) ==
          doctest::Approx(combcast::total_time(base, i)).epsilon(1e-12));
    CHECK(combcast::total_time(only_s, i) ==
          doctest::Approx(3.0 * combcast::total_time(base, i)).epsilon(1e-12));
  }
  CHECK(combcast::argmin_discrete(only_s).best_threshold ==
        combcast::argmin_discrete(base).best_threshold);
}

TEST_CASE("more users or better broadcast efficiency favor broadcasting") {
  int prev = 1;
  for (int k : {50, 200, 500, 2000, 10000}) {
    const int best = combcast::argmin_discrete(paper_params(1.1, k)).best_threshold;
    CHECK(best >= prev);
    prev = best;
  }
  prev = 1;
  for (double spf_bc : {0.25, 0.5, 1.0, 2.0}) {
    CostParams p = paper_params(1.1);
    p.spf_broadcast = spf_bc;
    const int best = combcast::argmin_discrete(p).best_threshold;
    CHECK(best >= prev);
    prev = best;
  }
  int prev_hi = 102;
  for (double spf_uni : {1.0, 2.0, 3.0, 6.0, 12.0}) {
    CostParams p = paper_params(1.1);
    p.spf_unicast = spf_uni;
    const int best = combcast::argmin_discrete(p).best_threshold;
    CHECK(best <= prev_hi);
    prev_hi = best;
  }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(
      combcast::total_time(CostParams{0, 1.0, 1.0, 3.0, 1.0, ZipfModel(1.1, 100)}, 1),
      std::invalid_argument);
  CHECK_THROWS_AS(
      combcast::total_time(CostParams{5, -1.0, 1.0, 3.0, 1.0, ZipfModel(1.1, 100)}, 1),
      std::invalid_argument);
  CHECK_THROWS_AS(
      combcast::total_time(CostParams{5, 1.0, 1.0, 0.0, 1.0, ZipfModel(1.1, 100)}, 1),
      std::invalid_argument);
}
