// Acceptance gate: every release-blocking requirement checked end to end,
// one PASS/FAIL line per criterion. Exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "combcast/beamforming.hpp"
#include "combcast/rng.hpp"
#include "combcast/sim.hpp"
#include "combcast/threshold.hpp"
#include "combcast/traffic.hpp"
#include "oracles.hpp"

namespace bf = combcast::beamforming;
using combcast::CostParams;
using combcast::RngStream;
using combcast::ThresholdReport;
using combcast::ZipfModel;
using combcast::derive_key;

namespace {

struct Criterion {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double rel_gap(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

Eigen::MatrixXcd random_channel(int rows, int cols, std::uint64_t key) {
  RngStream stream(derive_key(0xACCE5500ull, key));
  Eigen::MatrixXcd h(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) h(r, c) = stream.complex_gaussian();
  }
  return h;
}

bf::BroadcastProblem broadcast_instance(int k, int n, std::uint64_t key) {
  bf::BroadcastProblem p;
  p.channel = random_channel(k, n, key);
  p.sinr_weights = Eigen::VectorXd::Ones(k);
  p.power_limits = Eigen::VectorXd::Ones(n);
  p.noise_power = Eigen::VectorXd::Ones(k);
  return p;
}

bf::UnicastProblem unicast_instance(int n, std::uint64_t key) {
  bf::UnicastProblem p;
  p.channel = random_channel(n, n, key);
  p.sinr_weights = Eigen::VectorXd::Ones(n);
  p.power_limits = Eigen::VectorXd::Ones(n);
  p.noise_power = Eigen::VectorXd::Ones(n);
  return p;
}

CostParams paper_params(double alpha) {
  return CostParams{500, 1.0, 1.0, 3.0, 1.0, ZipfModel(alpha, 100)};
}

// Independent exhaustive argmin, smallest index on ties.
int exhaustive_argmin(const CostParams& params, int i_max) {
  int best = 1;
  double best_time = combcast::total_time(params, 1);
  for (int i = 2; i <= i_max + 1; ++i) {
    const double t = combcast::total_time(params, i);
    if (t < best_time) {
      best_time = t;
      best = i;
    }
  }
  return best;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::map<std::string, std::string> parse_report(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::string strip_timing(const std::string& text) {
  std::stringstream ss(text);
  std::string line, out;
  while (std::getline(ss, line)) {
    if (line.rfind("timing_", 0) != 0) out += line + "\n";
  }
  return out;
}

Criterion criterion_1_endpoints() {
  Criterion c;
  const CostParams params = paper_params(1.1);
  const double t1 = combcast::total_time(params, 1);
  const double t101 = combcast::total_time(params, 101);
  if (rel_gap(t1, 500.0 / 3.0) > 1e-9) {
    c.fail("T(1)=" + num(t1) + " expected 166.667");
  }
  if (rel_gap(t101, 100.0) > 1e-9) {
    c.fail("T(101)=" + num(t101) + " expected 100.000");
  }
  c.note("T(1)=" + num(t1) + " T(101)=" + num(t101));
  return c;
}

Criterion criterion_2_convexity_oracle() {
  Criterion c;
  RngStream stream(0xC0417EC5ull);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double alpha = 3.0 * stream.uniform01();
    const int subscribers =
        1 + static_cast<int>(stream.below(1000000));
    const double ratio = 0.1 * std::pow(10.0, 3.0 * stream.uniform01());
    const int i_max = 1 + static_cast<int>(stream.below(200));
    const CostParams params{subscribers, 1.0, 1.0, ratio, 1.0,
                            ZipfModel(alpha, i_max)};
    const ThresholdReport report = combcast::argmin_discrete(params);
    const int oracle = exhaustive_argmin(params, i_max);
    if (report.best_threshold != oracle ||
        report.sign_change_threshold != oracle || !report.methods_agree) {
      c.fail("trial " + std::to_string(trial) + ": sign-change " +
             std::to_string(report.sign_change_threshold) + " exhaustive " +
             std::to_string(oracle));
      break;
    }
    ++checked;
  }
  c.note(std::to_string(checked) + "/1000 parameter sets agree");
  return c;
}

Criterion criterion_3_closed_form() {
  Criterion c;
  for (double alpha : {1.1, 1.5, 2.0}) {
    const CostParams params = paper_params(alpha);
    const ThresholdReport report = combcast::argmin_discrete(params);
    if (!report.closed_form_rounded.has_value()) {
      c.fail("alpha " + num(alpha) + ": no closed form");
      continue;
    }
    const double at_rounded =
        combcast::total_time(params, *report.closed_form_rounded);
    const double gap = at_rounded / report.time_at_best - 1.0;
    c.note("alpha " + num(alpha) + ": rounded " +
           std::to_string(*report.closed_form_rounded) + " vs best " +
           std::to_string(report.best_threshold) + ", time gap " +
           num(100.0 * gap) + "%");
    if (gap > 0.10) c.fail("gap above 10%");
  }
  return c;
}

Criterion criterion_4_improvement() {
  Criterion c;
  const ThresholdReport at_ref = combcast::argmin_discrete(paper_params(1.1));
  c.note("alpha 1.1 improvement vs unicast " +
         num(100.0 * at_ref.improvement_vs_unicast) + "%");
  if (at_ref.improvement_vs_unicast < 0.5) {
    c.fail("below the 50% floor");
  }
  double best = 0.0, best_alpha = 0.8;
  for (int i = 8; i <= 25; ++i) {
    const double alpha = i / 10.0;
    const ThresholdReport report =
        combcast::argmin_discrete(paper_params(alpha));
    if (report.improvement_vs_unicast > best) {
      best = report.improvement_vs_unicast;
      best_alpha = alpha;
    }
  }
  c.note("max over alpha grid " + num(100.0 * best) + "% at alpha " +
         num(best_alpha) + " (reference claim: up to 80%)");
  return c;
}

Criterion criterion_5_brute_force() {
  Criterion c;
  const Eigen::Vector2d power(1.0, 1.0);
  int done = 0;
  for (int i = 0; i < 10; ++i) {
    const int k = 1 + i % 2;
    bf::BroadcastProblem prob = broadcast_instance(k, 2, 500 + i);
    const bf::BeamformingResult res =
        bf::solve_broadcast_maxmin(prob, 3000, 1000 + i);
    const double grid = oracle::broadcast_maxmin_grid(
        prob.channel, prob.power_limits, prob.noise_power, prob.sinr_weights);
    if (res.status != bf::SolveOutcome::Optimal ||
        rel_gap(res.t_star, grid) > 0.02) {
      c.fail("broadcast seed " + std::to_string(500 + i) + ": solver " +
             num(res.t_star) + " grid " + num(grid));
    }
    ++done;
  }
  for (int i = 0; i < 10; ++i) {
    bf::UnicastProblem prob = unicast_instance(2, 600 + i);
    const bf::BeamformingResult res = bf::solve_unicast_maxmin(prob, 1e-6);
    const double grid = oracle::unicast_maxmin_grid(
        prob.channel, prob.power_limits, prob.noise_power, prob.sinr_weights);
    if (res.status != bf::SolveOutcome::Optimal ||
        rel_gap(res.t_star, grid) > 0.02) {
      c.fail("unicast seed " + std::to_string(600 + i) + ": solver " +
             num(res.t_star) + " grid " + num(grid));
    }
    ++done;
  }
  c.note(std::to_string(done) + " instances vs exhaustive precoder grids");
  return c;
}

Criterion criterion_6_contract_suite() {
  Criterion c;
  RngStream shapes(0x5C07111ull);
  int bad = 0;
  for (int i = 0; i < 200; ++i) {
    const int n = 2 + static_cast<int>(shapes.below(5));
    const int k = 1 + static_cast<int>(shapes.below(20));
    bf::BroadcastProblem prob = broadcast_instance(k, n, 7000 + i);
    const bf::BeamformingResult res =
        bf::solve_broadcast_maxmin(prob, 300, 9000 + i);
    bool ok = res.status == bf::SolveOutcome::Optimal;
    if (ok) {
      const Eigen::VectorXd radiated = bf::per_antenna_power(res.precoders);
      for (int a = 0; a < n; ++a) {
        ok = ok && radiated(a) <= prob.power_limits(a) * (1.0 + 1e-6);
      }
      ok = ok && res.t_star <= res.relaxation_bound * (1.0 + 1e-9);
      double replay = std::numeric_limits<double>::infinity();
      for (int u = 0; u < k; ++u) {
        replay = std::min(replay,
                          bf::sinr(res.precoders, prob.channel.row(u).transpose(),
                                   prob.noise_power(u), u) /
                              prob.sinr_weights(u));
      }
      ok = ok && rel_gap(res.t_star, replay) <= 1e-9;
    }
    if (!ok && ++bad == 1) c.fail("broadcast instance " + std::to_string(i));
  }
  for (int i = 0; i < 200; ++i) {
    const int n = 1 + static_cast<int>(shapes.below(4));
    bf::UnicastProblem prob = unicast_instance(n, 20000 + i);
    const bf::BeamformingResult res = bf::solve_unicast_maxmin(prob);
    bool ok = res.status == bf::SolveOutcome::Optimal;
    if (ok) {
      const Eigen::VectorXd radiated = bf::per_antenna_power(res.precoders);
      for (int a = 0; a < n; ++a) {
        ok = ok && radiated(a) <= prob.power_limits(a) * (1.0 + 1e-6);
      }
      ok = ok && res.rank_residual.maxCoeff() <= 1e-5;
      ok = ok && res.t_star >= res.relaxation_bound * (1.0 - 1e-3);
      ok = ok && res.t_star <= res.relaxation_bound * (1.0 + 1e-9);
    }
    if (!ok && ++bad == 1) c.fail("unicast instance " + std::to_string(i));
  }
  if (bad > 1) c.note(std::to_string(bad) + " contract violations");
  if (bad == 0) c.note("400 instances satisfy the solver contract");
  return c;
}

Criterion criterion_7_monotonicity() {
  Criterion c;
  int violations = 0;
  for (int i = 0; i < 25; ++i) {
    bf::BroadcastProblem prob = broadcast_instance(1 + i % 6, 2 + i % 4,
                                                   30000 + i);
    const bf::BeamformingResult base =
        bf::solve_broadcast_maxmin(prob, 300, 31000 + i);
    prob.power_limits *= 2.0;
    const bf::BeamformingResult boosted =
        bf::solve_broadcast_maxmin(prob, 300, 31000 + i);
    if (boosted.t_star < base.t_star - 1e-9 * std::max(1.0, base.t_star)) {
      ++violations;
    }
  }
  for (int i = 0; i < 25; ++i) {
    bf::UnicastProblem prob = unicast_instance(1 + i % 4, 40000 + i);
    const bf::BeamformingResult base = bf::solve_unicast_maxmin(prob, 1e-6);
    prob.power_limits *= 2.0;
    const bf::BeamformingResult boosted = bf::solve_unicast_maxmin(prob, 1e-6);
    if (boosted.t_star < base.t_star - 1e-9 * std::max(1.0, base.t_star)) {
      ++violations;
    }
  }
  if (violations > 0) {
    c.fail(std::to_string(violations) + " power monotonicity violations");
  }

  int nested_violations = 0;
  for (int i = 0; i < 50; ++i) {
    const int n = 2 + i % 3;
    const Eigen::MatrixXcd full = random_channel(6, n, 50000 + i);
    double prev_bound = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 6; ++k) {
      bf::BroadcastProblem prob;
      prob.channel = full.topRows(k);
      prob.sinr_weights = Eigen::VectorXd::Ones(k);
      prob.power_limits = Eigen::VectorXd::Ones(n);
      prob.noise_power = Eigen::VectorXd::Ones(k);
      const bf::BeamformingResult res =
          bf::solve_broadcast_maxmin(prob, 300, 51000 + i);
      if (res.relaxation_bound >
          prev_bound + 1e-9 * std::max(1.0, prev_bound)) {
        ++nested_violations;
      }
      prev_bound = res.relaxation_bound;
    }
  }
  if (nested_violations > 0) {
    c.fail(std::to_string(nested_violations) + " nested-user bound increases");
  }
  if (c.pass) c.note("100 scaled and 50 nested families, zero violations");
  return c;
}

Criterion criterion_8_reference_experiment(double* runtime) {
  Criterion c;
  const auto t0 = std::chrono::steady_clock::now();
  combcast::sim::SimConfig config;
  config.out_dir = "acceptance_run_a";
  try {
    combcast::sim::run_simulate(config, 1);
  } catch (const std::exception& e) {
    c.fail(std::string("simulate aborted: ") + e.what());
    *runtime = elapsed_since(t0);
    return c;
  }
  *runtime = elapsed_since(t0);
  const auto kv = parse_report(read_file("acceptance_run_a/run_report.txt"));
  const double mean_uni = std::atof(kv.at("mean_spf_unicast").c_str());
  const double mean_bc = std::atof(kv.at("mean_spf_broadcast").c_str());
  const double ratio =
      std::atof(kv.at("spf_ratio_unicast_over_broadcast").c_str());
  c.note("spf_uni=" + num(mean_uni) + " spf_bc=" + num(mean_bc) + " ratio=" +
         num(ratio) + " (se " + kv.at("se_spf_unicast") + ", " +
         kv.at("se_spf_broadcast") + ")");
  if (!(mean_uni > 0.0) || !std::isfinite(mean_uni) || !(mean_bc > 0.0) ||
      !std::isfinite(mean_bc)) {
    c.fail("means must be positive and finite");
  }
  if (!(ratio >= 1.5 && ratio <= 6.0)) {
    c.fail("ratio outside [1.5, 6]");
  }
  return c;
}

Criterion criterion_9_determinism() {
  Criterion c;
  combcast::sim::SimConfig config;
  config.out_dir = "acceptance_run_b";
  combcast::sim::run_simulate(config, 1);
  config.out_dir = "acceptance_run_c";
  combcast::sim::run_simulate(config, 4);

  for (const char* file :
       {"spf_samples.csv", "cost_curves.csv", "demand_profile.csv"}) {
    const std::string a = read_file(std::string("acceptance_run_a/") + file);
    const std::string b = read_file(std::string("acceptance_run_b/") + file);
    const std::string d = read_file(std::string("acceptance_run_c/") + file);
    if (a.empty() || a != b) {
      c.fail(std::string(file) + " differs between identical runs");
    }
    if (a != d) {
      c.fail(std::string(file) + " differs between serial and parallel");
    }
  }
  const std::string ra =
      strip_timing(read_file("acceptance_run_a/run_report.txt"));
  const std::string rb =
      strip_timing(read_file("acceptance_run_b/run_report.txt"));
  const std::string rc =
      strip_timing(read_file("acceptance_run_c/run_report.txt"));
  if (ra.empty() || ra != rb) c.fail("run_report differs between runs");
  if (ra != rc) c.fail("run_report differs between serial and parallel");
  if (c.pass) c.note("byte-identical CSVs and reports across runs and threads");
  return c;
}

}  // namespace

int main() {
  struct Entry {
    const char* name;
    Criterion result;
    double seconds;
  };
  std::vector<Entry> entries;
  double c8_runtime = 0.0;

  auto run = [&](const char* name, double budget_s, auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Criterion result = fn();
    const double seconds = elapsed_since(t0);
    if (seconds > budget_s) {
      result.fail("over the " + num(budget_s) + "s runtime budget");
    }
    entries.push_back({name, std::move(result), seconds});
  };

  run("1 threshold endpoints", 1.0, criterion_1_endpoints);
  run("2 sign-change vs exhaustive argmin", 10.0,
      criterion_2_convexity_oracle);
  run("3 closed form within 10% of the discrete optimum", 1.0,
      criterion_3_closed_form);
  run("4 improvement claim", 1.0, criterion_4_improvement);
  run("5 solver vs brute-force grids", 120.0, criterion_5_brute_force);
  run("6 solver contract suite", 300.0, criterion_6_contract_suite);
  run("7 monotonicity properties", 120.0, criterion_7_monotonicity);
  run("8 reference experiment ratio band", 600.0,
      [&] { return criterion_8_reference_experiment(&c8_runtime); });
  run("9 end-to-end determinism", 1200.0, criterion_9_determinism);

  int failures = 0;
  for (const Entry& e : entries) {
    if (!e.result.pass) ++failures;
    std::printf("%s  criterion %s [%.1fs]%s%s\n",
                e.result.pass ? "PASS" : "FAIL", e.name, e.seconds,
                e.result.detail.empty() ? "" : ": ",
                e.result.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(entries.size()) - failures,
              entries.size());
  return failures;
}
