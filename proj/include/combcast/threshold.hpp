#pragma once

#include <optional>
#include <vector>

#include "combcast/traffic.hpp"

namespace combcast {

// Inputs of the delivery-time cost T_tot(i) = T_uni(i) + T_bc(i).
struct CostParams {
  int subscribers = 0;          // K
  double file_size_bits = 0.0;  // s
  double bandwidth_hz = 0.0;    // W
  double spf_unicast = 0.0;     // b/s/Hz
  double spf_broadcast = 0.0;   // b/s/Hz
  ZipfModel zipf;

  void validate() const;  // throws std::invalid_argument
};

struct ThresholdReport {
  // T_tot(i) for i = 1 .. catalog_size + 1; index i-1.
  std::vector<double> total_time;
  int best_threshold = 1;         // exhaustive argmin, smallest i on ties
  int sign_change_threshold = 1;  // first i with nonnegative increment
  bool methods_agree = false;
  double time_at_best = 0.0;
  double improvement_vs_unicast = 0.0;    // 1 - T(i*)/T(1)
  double improvement_vs_broadcast = 0.0;  // 1 - T(i*)/T(i_max+1)
  std::optional<double> closed_form;      // unrounded, alpha > 1 only
  std::optional<int> closed_form_rounded; // nearest int clamped to range
};

// Total delivery time when ranks < threshold are broadcast and ranks >=
// threshold are unicast:
//   s/W * ( K * sum_{j=threshold}^{i_max} f(j) / (C * spf_uni)
//           + (threshold - 1) / spf_bc ).
// Threshold range [1, catalog_size + 1]; out of range throws.
double total_time(const CostParams& params, int threshold);

// Cost increment T_tot(i+1) - T_tot(i), evaluated analytically:
//   s/W * ( 1/spf_bc - K f(i) / (C * spf_uni) ).
// Non-decreasing in i because f is non-increasing, so T_tot is discretely
// convex and its argmin is the first i with a nonnegative increment.
double time_increment(const CostParams& params, int threshold);

// Evaluates T_tot over the whole threshold range, finds the exhaustive
// argmin, cross-checks it against the increment sign-change rule, and
// attaches the closed-form estimate when alpha > 1.
ThresholdReport argmin_discrete(const CostParams& params);

// Continuous-relaxation threshold
//   ( K spf_bc / (spf_uni C + K spf_bc f(i_max)) )^(1/alpha).
// Only valid for alpha > 1; throws std::domain_error otherwise.
double closed_form_threshold(const CostParams& params);

}  // namespace combcast
