#include "combcast/threshold.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace combcast {

void CostParams::validate() const {
  if (subscribers < 1) {
    throw std::invalid_argument("CostParams: subscribers must be >= 1");
  }
  if (!(file_size_bits > 0.0) || !std::isfinite(file_size_bits)) {
    throw std::invalid_argument("CostParams: file size must be positive");
  }
  if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz)) {
    throw std::invalid_argument("CostParams: bandwidth must be positive");
  }
  if (!(spf_unicast > 0.0) || !std::isfinite(spf_unicast)) {
    throw std::invalid_argument("CostParams: unicast spectral efficiency must be positive");
  }
  if (!(spf_broadcast > 0.0) || !std::isfinite(spf_broadcast)) {
    throw std::invalid_argument("CostParams: broadcast spectral efficiency must be positive");
  }
}

double total_time(const CostParams& params, int threshold) {
  params.validate();
  const int last = params.zipf.catalog_size() + 1;
  if (threshold < 1 || threshold > last) {
    throw std::out_of_range("total_time: threshold outside [1, catalog_size + 1]");
  }
  const double unicast_volume_norm =
      volume_unicast(params.zipf, threshold, 1.0, 1) /* tail mass */;
  const double t_uni =
      params.subscribers * unicast_volume_norm / params.spf_unicast;
  const double t_bc = (threshold - 1) / params.spf_broadcast;
  return params.file_size_bits / params.bandwidth_hz * (t_uni + t_bc);
}

double time_increment(const CostParams& params, int threshold) {
  params.validate();
  if (threshold < 1 || threshold > params.zipf.catalog_size()) {
    throw std::out_of_range("time_increment: threshold outside [1, catalog_size]");
  }
  const double unicast_saving = params.subscribers *
                                params.zipf.normalized_popularity(threshold) /
                                params.spf_unicast;
  return params.file_size_bits / params.bandwidth_hz *
         (1.0 / params.spf_broadcast - unicast_saving);
}

ThresholdReport argmin_discrete(const CostParams& params) {
  params.validate();
  const int last = params.zipf.catalog_size() + 1;

  ThresholdReport report;
  report.total_time.reserve(last);
  int best = 1;
  for (int i = 1; i <= last; ++i) {
    report.total_time.push_back(total_time(params, i));
    if (report.total_time[i - 1] < report.total_time[best - 1]) {
      best = i;
    }
  }
  report.best_threshold = best;
  report.time_at_best = report.total_time[best - 1];

  // Sign-change rule: first threshold whose increment is nonnegative; if
  // every increment is negative the pure-broadcast endpoint wins.
  int sign_change = last;
  for (int i = 1; i < last; ++i) {
    if (time_increment(params, i) >= 0.0) {
      sign_change = i;
      break;
    }
  }
  report.sign_change_threshold = sign_change;
  report.methods_agree = (sign_change == best);

  report.improvement_vs_unicast =
      1.0 - report.time_at_best / report.total_time.front();
  report.improvement_vs_broadcast =
      1.0 - report.time_at_best / report.total_time.back();

  if (params.zipf.alpha() > 1.0) {
    const double raw = closed_form_threshold(params);
    report.closed_form = raw;
    int rounded = static_cast<int>(std::lround(raw));
    rounded = std::max(1, std::min(last, rounded));
    report.closed_form_rounded = rounded;
  }
  return report;
}

double closed_form_threshold(const CostParams& params) {
  params.validate();
  if (!(params.zipf.alpha() > 1.0)) {
    throw std::domain_error(
        "closed_form_threshold: requires alpha > 1; use argmin_discrete instead");
  }
  const double k_bc = params.subscribers * params.spf_broadcast;
  const double denom =
      params.spf_unicast * params.zipf.normalization() +
      k_bc * params.zipf.popularity(params.zipf.catalog_size());
  return std::pow(k_bc / denom, 1.0 / params.zipf.alpha());
}

}  // namespace combcast
