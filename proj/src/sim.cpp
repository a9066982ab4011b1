#include "combcast/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

#include "combcast/beamforming.hpp"
#include "combcast/channel.hpp"
#include "combcast/rng.hpp"
#include "combcast/traffic.hpp"

namespace combcast::sim {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void parse_fail(const std::string& name, int line,
                             const std::string& what) {
  throw ConfigError(name + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& name, int line, const std::string& v) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || v.empty() || !std::isfinite(out)) {
    parse_fail(name, line, "expected a finite number, got '" + v + "'");
  }
  return out;
}

int parse_int(const std::string& name, int line, const std::string& v) {
  char* end = nullptr;
  const long out = std::strtol(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || v.empty() || out > 1000000000L ||
      out < -1000000000L) {
    parse_fail(name, line, "expected an integer, got '" + v + "'");
  }
  return static_cast<int>(out);
}

std::uint64_t parse_u64(const std::string& name, int line,
                        const std::string& v) {
  if (v.empty() || v[0] == '-') {
    parse_fail(name, line, "expected an unsigned integer, got '" + v + "'");
  }
  char* end = nullptr;
  const unsigned long long out = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size()) {
    parse_fail(name, line, "expected an unsigned integer, got '" + v + "'");
  }
  return out;
}

std::vector<double> parse_alpha_list(const std::string& name, int line,
                                     const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(parse_double(name, line, trim(item)));
  }
  if (out.empty()) parse_fail(name, line, "alpha list is empty");
  return out;
}

std::string join_alpha(const std::vector<double>& alpha) {
  std::string out;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (i) out += ',';
    out += fmt(alpha[i]);
  }
  return out;
}

}  // namespace

double SimConfig::power_linear() const {
  return std::pow(10.0, power_dbw / 10.0);
}

void SimConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid config: ") + what);
  };
  need(n_bs >= 1, "n_bs must be >= 1");
  need(n_users >= 1, "n_users must be >= 1");
  need(n_users >= n_bs, "n_users must be >= n_bs (one stream per BS)");
  need(i_max >= 1, "i_max must be >= 1");
  need(n_mc >= 1, "n_mc must be >= 1");
  need(n_rand >= 1, "n_rand must be >= 1");
  need(std::isfinite(power_dbw), "power_dbw must be finite");
  need(std::isfinite(eta) && eta >= 0.0, "eta must be >= 0");
  need(std::isfinite(sigma2) && sigma2 > 0.0, "sigma2 must be > 0");
  need(std::isfinite(spacing) && spacing > 0.0, "spacing must be > 0");
  need(!alpha.empty(), "alpha list must be non-empty");
  for (double a : alpha) {
    need(std::isfinite(a) && a >= 0.0, "alpha values must be >= 0");
  }
  need(std::isfinite(file_size_bits) && file_size_bits > 0.0,
       "file_size_bits must be > 0");
  need(std::isfinite(bandwidth_hz) && bandwidth_hz > 0.0,
       "bandwidth_hz must be > 0");
  need(!out_dir.empty(), "out_dir must be non-empty");
}

SimConfig parse_config_text(const std::string& text, const std::string& name) {
  SimConfig cfg;
  std::stringstream stream(text);
  std::string raw;
  int line = 0;
  while (std::getline(stream, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string entry = trim(raw);
    if (entry.empty()) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) {
      parse_fail(name, line, "malformed line (expected key = value)");
    }
    const std::string key = trim(entry.substr(0, eq));
    const std::string value = trim(entry.substr(eq + 1));
    if (key.empty()) parse_fail(name, line, "missing key");
    if (value.empty()) parse_fail(name, line, "missing value for '" + key + "'");

    if (key == "n_bs") {
      cfg.n_bs = parse_int(name, line, value);
    } else if (key == "n_users") {
      cfg.n_users = parse_int(name, line, value);
    } else if (key == "i_max") {
      cfg.i_max = parse_int(name, line, value);
    } else if (key == "power_dbw") {
      cfg.power_dbw = parse_double(name, line, value);
    } else if (key == "eta") {
      cfg.eta = parse_double(name, line, value);
    } else if (key == "alpha") {
      cfg.alpha = parse_alpha_list(name, line, value);
    } else if (key == "sigma2") {
      cfg.sigma2 = parse_double(name, line, value);
    } else if (key == "spacing") {
      cfg.spacing = parse_double(name, line, value);
    } else if (key == "n_mc") {
      cfg.n_mc = parse_int(name, line, value);
    } else if (key == "n_rand") {
      cfg.n_rand = parse_int(name, line, value);
    } else if (key == "seed") {
      cfg.seed = parse_u64(name, line, value);
    } else if (key == "file_size_bits") {
      cfg.file_size_bits = parse_double(name, line, value);
    } else if (key == "bandwidth_hz") {
      cfg.bandwidth_hz = parse_double(name, line, value);
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else {
      parse_fail(name, line, "unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

SimConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

double pairwise_sum(const double* values, std::size_t count) {
  if (count <= 8) {
    double acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) acc += values[i];
    return acc;
  }
  const std::size_t half = count / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, count - half);
}

namespace {

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  const std::size_t n = v.size();
  if (n == 0) return m;
  m.mean = pairwise_sum(v.data(), n) / static_cast<double>(n);
  if (n >= 2) {
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = v[i] - m.mean;
      sq[i] = d * d;
    }
    const double ss = pairwise_sum(sq.data(), n);
    m.se = std::sqrt(std::max(ss, 0.0) /
                     (static_cast<double>(n) * static_cast<double>(n - 1)));
  }
  return m;
}

DrawRecord run_draw(const SimConfig& config, int draw) {
  const std::uint64_t draw_seed =
      derive_key(config.seed, static_cast<std::uint64_t>(draw));
  Topology topo = place_users(config.n_bs, config.spacing, config.n_users,
                              draw_seed);
  ChannelConfig cc;
  cc.path_loss_exponent = config.eta;
  cc.fading = true;
  cc.noise_power = config.sigma2;
  ChannelMatrix ch = generate_channel(topo, cc, draw_seed);
  DrawRecord rec = evaluate_draw(config, ch.coefficients, draw_seed);
  rec.draw = draw;
  return rec;
}

}  // namespace

DrawRecord evaluate_draw(const SimConfig& config,
                         const Eigen::MatrixXcd& channel,
                         std::uint64_t draw_seed) {
  const int k = static_cast<int>(channel.rows());
  const int n = static_cast<int>(channel.cols());
  if (n < 1 || k < n) {
    throw ConfigError("channel must have at least as many users as antennas");
  }
  const double p_lin = config.power_linear();
  DrawRecord rec;

  beamforming::BroadcastProblem bp;
  bp.channel = channel;
  bp.sinr_weights = Eigen::VectorXd::Ones(k);
  bp.power_limits = Eigen::VectorXd::Constant(n, p_lin);
  bp.noise_power = Eigen::VectorXd::Constant(k, config.sigma2);
  beamforming::BeamformingResult br =
      beamforming::solve_broadcast_maxmin(bp, config.n_rand, draw_seed);
  if (br.status != beamforming::SolveOutcome::SolverFailure) {
    rec.broadcast_ok = true;
    rec.t_broadcast = br.t_star;
    rec.bound_broadcast = br.relaxation_bound;
  }

  // Uniform random subset of n distinct users, fresh each draw.
  RngStream sched(derive_key(draw_seed, rng_stream::kSchedule));
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  for (int j = 0; j < n; ++j) {
    const int pick =
        j + static_cast<int>(sched.below(static_cast<std::uint64_t>(k - j)));
    std::swap(idx[j], idx[pick]);
  }
  beamforming::UnicastProblem up;
  up.channel.resize(n, n);
  for (int j = 0; j < n; ++j) {
    up.channel.row(j) = channel.row(idx[j]);
  }
  up.sinr_weights = Eigen::VectorXd::Ones(n);
  up.power_limits = Eigen::VectorXd::Constant(n, p_lin);
  up.noise_power = Eigen::VectorXd::Constant(n, config.sigma2);
  beamforming::BeamformingResult ur = beamforming::solve_unicast_maxmin(up);
  if (ur.status != beamforming::SolveOutcome::SolverFailure) {
    rec.unicast_ok = true;
    rec.t_unicast = ur.t_star;
    rec.bound_unicast = ur.relaxation_bound;
  }
  return rec;
}

EfficiencyEstimate estimate_spectral_efficiencies(const SimConfig& config,
                                                  int threads) {
  config.validate();
  if (threads < 1) throw ConfigError("threads must be >= 1");
  const auto start = std::chrono::steady_clock::now();

  EfficiencyEstimate est;
  est.samples.resize(config.n_mc);
  if (threads == 1) {
    for (int d = 0; d < config.n_mc; ++d) {
      est.samples[d] = run_draw(config, d);
    }
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int d = next.fetch_add(1); d < config.n_mc;
           d = next.fetch_add(1)) {
        est.samples[d] = run_draw(config, d);
      }
    };
    std::vector<std::thread> pool;
    const int n_workers = std::min(threads, config.n_mc);
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::vector<double> uni, bc, bc_achieved;
  uni.reserve(config.n_mc);
  bc.reserve(config.n_mc);
  bc_achieved.reserve(config.n_mc);
  for (const DrawRecord& rec : est.samples) {
    if (!rec.unicast_ok || !rec.broadcast_ok) ++est.failed_draws;
    if (rec.unicast_ok) {
      uni.push_back(beamforming::spectral_efficiency(rec.t_unicast));
    }
    if (rec.broadcast_ok) {
      bc.push_back(beamforming::spectral_efficiency(rec.bound_broadcast));
      bc_achieved.push_back(beamforming::spectral_efficiency(rec.t_broadcast));
    }
  }
  if (est.failed_draws > 0.01 * config.n_mc) {
    throw SolverBudgetError(
        "solver failed on " + std::to_string(est.failed_draws) + " of " +
        std::to_string(config.n_mc) + " draws (budget is 1%)");
  }
  const Moments mu = moments(uni);
  const Moments mb = moments(bc);
  const Moments mba = moments(bc_achieved);
  est.mean_spf_unicast = mu.mean;
  est.se_spf_unicast = mu.se;
  est.mean_spf_broadcast = mb.mean;
  est.se_spf_broadcast = mb.se;
  est.mean_spf_broadcast_achieved = mba.mean;
  est.se_spf_broadcast_achieved = mba.se;
  est.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return est;
}

CostParams cost_params(const SimConfig& config, double alpha, double spf_uni,
                       double spf_bc) {
  return CostParams{config.n_users,
                    config.file_size_bits,
                    config.bandwidth_hz,
                    spf_uni * (config.credit_streams ? config.n_bs : 1),
                    spf_bc,
                    ZipfModel(alpha, config.i_max)};
}

ImprovementSummary improvement_report(const SimConfig& config, double spf_uni,
                                      double spf_bc) {
  ImprovementSummary summary;
  summary.best_alpha = config.alpha.front();
  for (double a : config.alpha) {
    AlphaReport report;
    report.alpha = a;
    report.threshold = argmin_discrete(cost_params(config, a, spf_uni, spf_bc));
    if (report.threshold.improvement_vs_unicast >
        summary.max_improvement_vs_unicast) {
      summary.max_improvement_vs_unicast =
          report.threshold.improvement_vs_unicast;
      summary.best_alpha = a;
    }
    summary.max_improvement_vs_broadcast =
        std::max(summary.max_improvement_vs_broadcast,
                 report.threshold.improvement_vs_broadcast);
    summary.per_alpha.push_back(std::move(report));
  }
  return summary;
}

void write_cost_curves(std::ostream& out, const SimConfig& config,
                       double spf_uni, double spf_bc) {
  out << "alpha,threshold,total_time,unicast_time,broadcast_time,is_argmin\n";
  for (double a : config.alpha) {
    const CostParams params = cost_params(config, a, spf_uni, spf_bc);
    const ThresholdReport report = argmin_discrete(params);
    const double w = params.bandwidth_hz;
    for (int i = 1; i <= config.i_max + 1; ++i) {
      const double uni_part =
          volume_unicast(params.zipf, i, params.file_size_bits,
                         params.subscribers) /
          (w * params.spf_unicast);
      const double bc_part =
          volume_broadcast(params.zipf, i, params.file_size_bits) /
          (w * params.spf_broadcast);
      out << fmt(a) << ',' << i << ',' << fmt(report.total_time[i - 1]) << ','
          << fmt(uni_part) << ',' << fmt(bc_part) << ','
          << (i == report.best_threshold ? 1 : 0) << '\n';
    }
  }
}

void write_demand_profile(std::ostream& out, const SimConfig& config,
                          double alpha, int threshold) {
  if (threshold < 1 || threshold > config.i_max + 1) {
    throw ConfigError("demand threshold out of range");
  }
  out << "rank,popularity,normalized_popularity,expected_requests,mode\n";
  const ZipfModel zipf(alpha, config.i_max);
  const DemandProfile profile =
      make_demand_profile(zipf, config.n_users, config.file_size_bits);
  for (int rank = 1; rank <= config.i_max; ++rank) {
    out << rank << ',' << fmt(zipf.popularity(rank)) << ','
        << fmt(zipf.normalized_popularity(rank)) << ','
        << fmt(profile.expected_requests[rank - 1]) << ','
        << (rank < threshold ? "broadcast" : "unicast") << '\n';
  }
}

void write_spf_samples(std::ostream& out, const EfficiencyEstimate& estimate) {
  out << "draw,unicast_ok,t_unicast,bound_unicast,spf_unicast,broadcast_ok,"
         "t_broadcast,bound_broadcast,spf_broadcast,spf_broadcast_achieved\n";
  for (const DrawRecord& rec : estimate.samples) {
    out << rec.draw << ',' << (rec.unicast_ok ? 1 : 0) << ','
        << fmt(rec.t_unicast) << ',' << fmt(rec.bound_unicast) << ','
        << fmt(beamforming::spectral_efficiency(rec.t_unicast)) << ','
        << (rec.broadcast_ok ? 1 : 0) << ',' << fmt(rec.t_broadcast) << ','
        << fmt(rec.bound_broadcast) << ','
        << fmt(beamforming::spectral_efficiency(rec.bound_broadcast)) << ','
        << fmt(beamforming::spectral_efficiency(rec.t_broadcast)) << '\n';
  }
}

void write_run_report(std::ostream& out, const SimConfig& config,
                      const EfficiencyEstimate* estimate,
                      const ImprovementSummary* summary, double spf_uni,
                      double spf_bc) {
  out << "config_n_bs=" << config.n_bs << '\n';
  out << "config_n_users=" << config.n_users << '\n';
  out << "config_i_max=" << config.i_max << '\n';
  out << "config_power_dbw=" << fmt(config.power_dbw) << '\n';
  out << "config_eta=" << fmt(config.eta) << '\n';
  out << "config_alpha=" << join_alpha(config.alpha) << '\n';
  out << "config_sigma2=" << fmt(config.sigma2) << '\n';
  out << "config_spacing=" << fmt(config.spacing) << '\n';
  out << "config_n_mc=" << config.n_mc << '\n';
  out << "config_n_rand=" << config.n_rand << '\n';
  out << "config_seed=" << config.seed << '\n';
  out << "config_file_size_bits=" << fmt(config.file_size_bits) << '\n';
  out << "config_bandwidth_hz=" << fmt(config.bandwidth_hz) << '\n';
  out << "config_credit_streams=" << (config.credit_streams ? 1 : 0) << '\n';
  out << "power_linear=" << fmt(config.power_linear()) << '\n';
  // The delivery-time model reads the unicast efficiency as a per-stream
  // value; whether the reference figure is per stream or per cluster is not
  // settled, hence the explicit marker.
  out << "spf_unicast_interpretation="
      << (config.credit_streams ? "cluster_aggregate" : "per_stream") << '\n';
  if (estimate != nullptr) {
    out << "n_draws=" << estimate->samples.size() << '\n';
    out << "failed_draws=" << estimate->failed_draws << '\n';
    out << "spf_broadcast_source=relaxation_optimum\n";
    out << "mean_spf_unicast=" << fmt(estimate->mean_spf_unicast) << '\n';
    out << "se_spf_unicast=" << fmt(estimate->se_spf_unicast) << '\n';
    out << "mean_spf_broadcast=" << fmt(estimate->mean_spf_broadcast) << '\n';
    out << "se_spf_broadcast=" << fmt(estimate->se_spf_broadcast) << '\n';
    out << "mean_spf_broadcast_achieved="
        << fmt(estimate->mean_spf_broadcast_achieved) << '\n';
    out << "se_spf_broadcast_achieved="
        << fmt(estimate->se_spf_broadcast_achieved) << '\n';
    out << "spf_ratio_unicast_over_broadcast="
        << fmt(estimate->mean_spf_unicast / estimate->mean_spf_broadcast)
        << '\n';
  }
  out << "spf_unicast_used=" << fmt(spf_uni) << '\n';
  out << "spf_broadcast_used=" << fmt(spf_bc) << '\n';
  if (summary != nullptr) {
    int section = 0;
    for (const AlphaReport& report : summary->per_alpha) {
      ++section;
      const std::string prefix = "threshold_" + std::to_string(section) + "_";
      const ThresholdReport& t = report.threshold;
      out << prefix << "alpha=" << fmt(report.alpha) << '\n';
      out << prefix << "best=" << t.best_threshold << '\n';
      out << prefix << "sign_change=" << t.sign_change_threshold << '\n';
      out << prefix << "methods_agree=" << (t.methods_agree ? 1 : 0) << '\n';
      out << prefix << "time_at_best=" << fmt(t.time_at_best) << '\n';
      out << prefix << "time_pure_unicast=" << fmt(t.total_time.front())
          << '\n';
      out << prefix << "time_pure_broadcast=" << fmt(t.total_time.back())
          << '\n';
      out << prefix << "improvement_vs_unicast="
          << fmt(t.improvement_vs_unicast) << '\n';
      out << prefix << "improvement_vs_broadcast="
          << fmt(t.improvement_vs_broadcast) << '\n';
      if (t.closed_form.has_value()) {
        out << prefix << "closed_form=" << fmt(*t.closed_form) << '\n';
        out << prefix << "closed_form_rounded=" << *t.closed_form_rounded
            << '\n';
      }
    }
    out << "max_improvement_vs_unicast="
        << fmt(summary->max_improvement_vs_unicast) << '\n';
    out << "max_improvement_vs_broadcast="
        << fmt(summary->max_improvement_vs_broadcast) << '\n';
    out << "best_alpha=" << fmt(summary->best_alpha) << '\n';
  }
  if (estimate != nullptr) {
    out << "timing_estimate_seconds=" << fmt(estimate->elapsed_seconds)
        << '\n';
  }
}

namespace {

std::ofstream open_out(const SimConfig& config, const char* filename) {
  std::filesystem::create_directories(config.out_dir);
  const std::filesystem::path path =
      std::filesystem::path(config.out_dir) / filename;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

void run_simulate(const SimConfig& config, int threads) {
  const EfficiencyEstimate estimate =
      estimate_spectral_efficiencies(config, threads);
  const double spf_uni = estimate.mean_spf_unicast;
  const double spf_bc = estimate.mean_spf_broadcast;
  {
    std::ofstream out = open_out(config, "spf_samples.csv");
    write_spf_samples(out, estimate);
  }
  const bool usable = spf_uni > 0.0 && spf_bc > 0.0;
  ImprovementSummary summary;
  if (usable) {
    summary = improvement_report(config, spf_uni, spf_bc);
    {
      std::ofstream out = open_out(config, "cost_curves.csv");
      write_cost_curves(out, config, spf_uni, spf_bc);
    }
    {
      std::ofstream out = open_out(config, "demand_profile.csv");
      write_demand_profile(out, config, config.alpha.front(),
                           summary.per_alpha.front().threshold.best_threshold);
    }
  }
  std::ofstream out = open_out(config, "run_report.txt");
  write_run_report(out, config, &estimate, usable ? &summary : nullptr,
                   spf_uni, spf_bc);
}

void run_threshold(const SimConfig& config, double spf_uni, double spf_bc) {
  const ImprovementSummary summary =
      improvement_report(config, spf_uni, spf_bc);
  {
    std::ofstream out = open_out(config, "cost_curves.csv");
    write_cost_curves(out, config, spf_uni, spf_bc);
  }
  {
    std::ofstream out = open_out(config, "demand_profile.csv");
    write_demand_profile(out, config, config.alpha.front(),
                         summary.per_alpha.front().threshold.best_threshold);
  }
  std::ofstream out = open_out(config, "run_report.txt");
  write_run_report(out, config, nullptr, &summary, spf_uni, spf_bc);
}

void run_sweep(const SimConfig& config, double spf_uni, double spf_bc) {
  std::ofstream out = open_out(config, "cost_curves.csv");
  write_cost_curves(out, config, spf_uni, spf_bc);
}

void run_demand(const SimConfig& config, double spf_uni, double spf_bc) {
  const ImprovementSummary summary =
      improvement_report(config, spf_uni, spf_bc);
  std::ofstream out = open_out(config, "demand_profile.csv");
  write_demand_profile(out, config, config.alpha.front(),
                       summary.per_alpha.front().threshold.best_threshold);
}

}  // namespace combcast::sim
