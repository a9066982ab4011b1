#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace combcast::beamforming {

// Problem UC: N scheduled users, one precoder each, per-antenna power
// limits. The channel is square by construction (row i = user i).
struct UnicastProblem {
  Eigen::MatrixXcd channel;      // N x N, row i is h_i
  Eigen::VectorXd sinr_weights;  // gamma_i > 0
  Eigen::VectorXd power_limits;  // P_n > 0, linear units
  Eigen::VectorXd noise_power;   // sigma_i^2 > 0, linear units

  void validate() const;
};

// Problem BC: one common precoder serving all K users.
struct BroadcastProblem {
  Eigen::MatrixXcd channel;      // K x N, row i is h_i
  Eigen::VectorXd sinr_weights;  // gamma_i > 0
  Eigen::VectorXd power_limits;  // P_n > 0
  Eigen::VectorXd noise_power;   // sigma_i^2 > 0

  void validate() const;
};

enum class Mode { Unicast, Broadcast };

// One column per precoder: K columns in unicast, one in broadcast.
struct PrecoderSet {
  Mode mode = Mode::Broadcast;
  Eigen::MatrixXcd weights;
};

enum class SolveOutcome {
  Optimal,
  // A zero channel row makes the served set unservable; t_star = 0.
  DegenerateChannel,
  SolverFailure,
};

struct BeamformingResult {
  SolveOutcome status = SolveOutcome::SolverFailure;
  PrecoderSet precoders;
  double t_star = 0.0;            // achieved min_i SINR_i / gamma_i
  double relaxation_bound = 0.0;  // >= t_star up to 1e-9 relative
  Eigen::VectorXd achieved_sinr;
  // Second-to-first eigenvalue ratio of each relaxation variable at the
  // solution; near zero when the relaxation is tight.
  Eigen::VectorXd rank_residual;
  int randomization_count = 0;  // broadcast only
  int solver_iterations = 0;
};

// |w_k^H h_i|^2 / (sum_{l != k} |w_l^H h_i|^2 + sigma_i^2); the
// interference sum is empty in broadcast mode.
double sinr(const PrecoderSet& precoders, const Eigen::VectorXcd& channel_row,
            double noise_power, int user_index);

// P_n = [sum_k w_k w_k^H]_nn.
Eigen::VectorXd per_antenna_power(const PrecoderSet& precoders);

// Shannon mapping log2(1 + t), bits/s/Hz.
double spectral_efficiency(double t_star);

// Semidefinite relaxation of problem BC followed by Gaussian
// randomization (n_rand draws from the optimal covariance, plus its
// principal eigenvector), every candidate scaled to the per-antenna
// power boundary.
BeamformingResult solve_broadcast_maxmin(const BroadcastProblem& problem,
                                         int n_rand, std::uint64_t seed);

// Bisection on the balanced level t; each probe is a feasibility solve of
// the relaxation with per-user covariances. Precoders come from a
// power-minimization solve at the final feasible t, whose variables are
// rank one for this problem class.
BeamformingResult solve_unicast_maxmin(const UnicastProblem& problem,
                                       double bisection_tol = 1e-4);

}  // namespace combcast::beamforming
