#include "combcast/beamforming.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "combcast/conic.hpp"
#include "combcast/rng.hpp"

namespace combcast::beamforming {

namespace {

void check_positive(const Eigen::VectorXd& v, const char* name) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v(i) > 0.0) || !std::isfinite(v(i))) {
      throw std::invalid_argument(std::string(name) +
                                  " entries must be positive and finite");
    }
  }
}

void check_common(const Eigen::MatrixXcd& channel,
                  const Eigen::VectorXd& gamma, const Eigen::VectorXd& power,
                  const Eigen::VectorXd& noise) {
  if (channel.rows() < 1 || channel.cols() < 1) {
    throw std::invalid_argument("channel must be nonempty");
  }
  if (!channel.allFinite()) {
    throw std::invalid_argument("channel entries must be finite");
  }
  if (gamma.size() != channel.rows() || noise.size() != channel.rows() ||
      power.size() != channel.cols()) {
    throw std::invalid_argument("problem dimensions disagree");
  }
  check_positive(gamma, "sinr_weights");
  check_positive(power, "power_limits");
  check_positive(noise, "noise_power");
}

bool has_zero_row(const Eigen::MatrixXcd& channel) {
  for (Eigen::Index i = 0; i < channel.rows(); ++i) {
    if (channel.row(i).norm() == 0.0) return true;
  }
  return false;
}

BeamformingResult degenerate_result(Mode mode, int n, int n_precoders,
                                    int n_users) {
  BeamformingResult r;
  r.status = SolveOutcome::DegenerateChannel;
  r.precoders.mode = mode;
  r.precoders.weights = Eigen::MatrixXcd::Zero(n, n_precoders);
  r.t_star = 0.0;
  r.relaxation_bound = 0.0;
  r.achieved_sinr = Eigen::VectorXd::Zero(n_users);
  r.rank_residual = Eigen::VectorXd();
  return r;
}

// Largest and second eigenvalue ratio plus the scaled top eigenvector of a
// Hermitian psd matrix.
struct TopEig {
  Eigen::VectorXcd scaled_vector;  // sqrt(lambda_1) * u_1
  double ratio = 0.0;              // lambda_2 / lambda_1
};

TopEig top_eigenvector(const Eigen::MatrixXcd& x) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (x + x.adjoint()));
  const Eigen::Index n = x.rows();
  TopEig out;
  const double l1 = std::max(es.eigenvalues()(n - 1), 0.0);
  const double l2 = n >= 2 ? std::max(es.eigenvalues()(n - 2), 0.0) : 0.0;
  out.scaled_vector = std::sqrt(l1) * es.eigenvectors().col(n - 1);
  out.ratio = l1 > 0.0 ? l2 / l1 : 0.0;
  return out;
}

}  // namespace

void UnicastProblem::validate() const {
  check_common(channel, sinr_weights, power_limits, noise_power);
  if (channel.rows() != channel.cols()) {
    throw std::invalid_argument("unicast channel must be square");
  }
}

void BroadcastProblem::validate() const {
  check_common(channel, sinr_weights, power_limits, noise_power);
}

double sinr(const PrecoderSet& precoders, const Eigen::VectorXcd& channel_row,
            double noise_power, int user_index) {
  const Eigen::Index k = precoders.weights.cols();
  if (precoders.weights.rows() != channel_row.size()) {
    throw std::invalid_argument("precoder and channel dimensions disagree");
  }
  if (user_index < 0 ||
      (precoders.mode == Mode::Unicast && user_index >= k)) {
    throw std::invalid_argument("user index out of range");
  }
  const Eigen::VectorXcd proj = precoders.weights.adjoint() * channel_row;
  if (precoders.mode == Mode::Broadcast) {
    return std::norm(proj(0)) / noise_power;
  }
  double interference = 0.0;
  for (Eigen::Index l = 0; l < k; ++l) {
    if (l != user_index) interference += std::norm(proj(l));
  }
  return std::norm(proj(user_index)) / (interference + noise_power);
}

Eigen::VectorXd per_antenna_power(const PrecoderSet& precoders) {
  return precoders.weights.cwiseAbs2().rowwise().sum();
}

double spectral_efficiency(double t_star) {
  if (!(t_star >= 0.0)) {
    throw std::invalid_argument("t_star must be nonnegative");
  }
  return std::log2(1.0 + t_star);
}

namespace {

// Relaxation of problem BC restricted to a subset of users: maximize t with
// <h_i h_i^H, X> >= t*gamma_i*sigma_i^2 for i in the subset, X_nn <= P_n.
// Solved down a tolerance ladder, tightest first, so the reported bound is
// stable to ~1e-9 relative (monotonicity consumers compare bounds of
// neighbouring problems); degenerate instances that cannot certify the
// tightest gap settle one notch looser, and the stock tolerance is the
// last resort.
conic::Solution solve_broadcast_relaxation(const BroadcastProblem& problem,
                                           const std::vector<int>& users) {
  const int n = static_cast<int>(problem.channel.cols());
  conic::Program p({n}, true);
  p.set_scalar_objective(1.0);
  for (int i : users) {
    const Eigen::VectorXcd h = problem.channel.row(i).transpose();
    p.add_constraint({{0, conic::HermitianMatrix::outer(h)}},
                     -problem.sinr_weights(i) * problem.noise_power(i),
                     conic::Sense::GreaterEqual, 0.0);
  }
  for (int a = 0; a < n; ++a) {
    p.add_constraint({{0, conic::HermitianMatrix::unit_diagonal(n, a)}}, 0.0,
                     conic::Sense::LessEqual, problem.power_limits(a));
  }
  for (double tol : {1e-10, 1e-9}) {
    conic::Solution tight = conic::solve(p, tol);
    if (tight.status == conic::SolveStatus::Optimal ||
        tight.status == conic::SolveStatus::Infeasible ||
        tight.status == conic::SolveStatus::Unbounded) {
      return tight;
    }
  }
  return conic::solve(p);
}

}  // namespace

BeamformingResult solve_broadcast_maxmin(const BroadcastProblem& problem,
                                         int n_rand, std::uint64_t seed) {
  problem.validate();
  if (n_rand < 1) throw std::invalid_argument("n_rand must be >= 1");
  const int k = static_cast<int>(problem.channel.rows());
  const int n = static_cast<int>(problem.channel.cols());

  if (has_zero_row(problem.channel)) {
    return degenerate_result(Mode::Broadcast, n, 1, k);
  }

  // With many users most SINR constraints are slack at the optimum; solve
  // over a working set of the weakest users and grow it until the reduced
  // optimum satisfies every user. The final value equals the full solve.
  std::vector<int> active(k);
  std::iota(active.begin(), active.end(), 0);
  constexpr int kDirectLimit = 40;
  conic::Solution sol;
  int iterations = 0;
  bool solved = false;
  if (k > kDirectLimit) {
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    Eigen::VectorXd strength(k);
    for (int i = 0; i < k; ++i) {
      strength(i) = problem.channel.row(i).squaredNorm() /
                    (problem.sinr_weights(i) * problem.noise_power(i));
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return strength(a) < strength(b);
    });
    std::vector<int> working(order.begin(), order.begin() + 24);
    std::vector<bool> in_working(k, false);
    for (int i : working) in_working[i] = true;

    for (int round = 0; round < 20; ++round) {
      std::vector<int> sorted = working;
      std::sort(sorted.begin(), sorted.end());
      sol = solve_broadcast_relaxation(problem, sorted);
      iterations += sol.iterations;
      if (sol.status != conic::SolveStatus::Optimal) break;
      const Eigen::MatrixXcd& x = sol.variables[0];
      std::vector<std::pair<double, int>> violated;
      for (int i = 0; i < k; ++i) {
        if (in_working[i]) continue;
        const Eigen::VectorXcd h = problem.channel.row(i).transpose();
        const double level = (h.adjoint() * x * h).real()(0) /
                             (problem.sinr_weights(i) * problem.noise_power(i));
        if (level < sol.scalar_value * (1.0 - 1e-9) - 1e-15) {
          violated.push_back({level, i});
        }
      }
      if (violated.empty()) {
        solved = true;
        break;
      }
      std::stable_sort(violated.begin(), violated.end());
      const int add = std::min<int>(16, static_cast<int>(violated.size()));
      for (int j = 0; j < add; ++j) {
        working.push_back(violated[j].second);
        in_working[violated[j].second] = true;
      }
    }
  }
  if (!solved) {
    sol = solve_broadcast_relaxation(problem, active);
    iterations += sol.iterations;
  }

  BeamformingResult result;
  result.precoders.mode = Mode::Broadcast;
  result.randomization_count = n_rand;
  result.solver_iterations = iterations;
  if (sol.status != conic::SolveStatus::Optimal) {
    result.status = SolveOutcome::SolverFailure;
    result.precoders.weights = Eigen::MatrixXcd::Zero(n, 1);
    result.achieved_sinr = Eigen::VectorXd::Zero(k);
    return result;
  }
  result.relaxation_bound = sol.scalar_value;

  // Candidate precoders: principal eigenvector of X, then Gaussian draws
  // with covariance X, each scaled to the tightest per-antenna limit.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
      0.5 * (sol.variables[0] + sol.variables[0].adjoint()).eval());
  Eigen::VectorXd lambda = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXcd sqrt_x =
      es.eigenvectors() * lambda.cwiseSqrt().asDiagonal();

  CounterRng rng(derive_key(seed, rng_stream::kRandomization));
  const Eigen::VectorXd limits = problem.power_limits;
  Eigen::VectorXcd best_w = Eigen::VectorXcd::Zero(n);
  double best_val = -1.0;
  auto consider = [&](const Eigen::VectorXcd& w) {
    double scale_sq = std::numeric_limits<double>::infinity();
    for (int a = 0; a < n; ++a) {
      const double pw = std::norm(w(a));
      if (pw > 0.0) scale_sq = std::min(scale_sq, limits(a) / pw);
    }
    if (!std::isfinite(scale_sq)) return;
    const Eigen::VectorXcd scaled = std::sqrt(scale_sq) * w;
    const Eigen::VectorXcd proj = problem.channel * scaled.conjugate();
    double val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < k; ++i) {
      val = std::min(val, std::norm(proj(i)) / (problem.sinr_weights(i) *
                                                problem.noise_power(i)));
    }
    if (val > best_val) {
      best_val = val;
      best_w = scaled;
    }
  };

  consider(es.eigenvectors().col(n - 1));
  Eigen::VectorXcd xi(n);
  for (int r = 0; r < n_rand; ++r) {
    for (int a = 0; a < n; ++a) {
      xi(a) = rng.complex_gaussian(static_cast<uint64_t>(r) * n + a);
    }
    consider(sqrt_x * xi);
  }

  result.status = SolveOutcome::Optimal;
  result.precoders.weights = best_w;
  result.achieved_sinr.resize(k);
  for (int i = 0; i < k; ++i) {
    result.achieved_sinr(i) =
        sinr(result.precoders, problem.channel.row(i).transpose(),
             problem.noise_power(i), i);
  }
  result.t_star =
      (result.achieved_sinr.array() / problem.sinr_weights.array()).minCoeff();
  // best_w scaled to the power boundary makes w w^H feasible for the
  // relaxation, so t_star is itself a lower bound on the relaxation optimum;
  // taking the max absorbs the solver's duality-gap-sized underestimate.
  result.relaxation_bound = std::max(result.relaxation_bound, result.t_star);
  const double l1 = lambda(n - 1);
  result.rank_residual = Eigen::VectorXd::Constant(
      1, l1 > 0.0 && n >= 2 ? lambda(n - 2) / l1 : 0.0);
  return result;
}

namespace {

// Feasibility probe of the unicast relaxation at level t: maximize the
// common margin mu over covariances X_k subject to
//   <H_i, X_i> - t*gamma_i * sum_{l!=i} <H_i, X_l> - mu >= t*gamma_i*sigma_i^2
// and per-antenna sums below P_n. Feasible iff the optimal mu is (almost)
// nonnegative.
conic::Program unicast_margin_program(const UnicastProblem& problem,
                                      double t) {
  const int n = static_cast<int>(problem.channel.rows());
  conic::Program p(std::vector<int>(n, n), true);
  p.set_scalar_objective(1.0);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXcd h = problem.channel.row(i).transpose();
    const double tg = t * problem.sinr_weights(i);
    std::vector<conic::Program::Term> terms;
    terms.push_back({i, conic::HermitianMatrix::outer(h)});
    for (int l = 0; l < n; ++l) {
      if (l == i) continue;
      terms.push_back(
          {l, conic::HermitianMatrix((-tg * h * h.adjoint()).eval())});
    }
    p.add_constraint(std::move(terms), -1.0, conic::Sense::GreaterEqual,
                     tg * problem.noise_power(i));
  }
  for (int a = 0; a < n; ++a) {
    std::vector<conic::Program::Term> terms;
    for (int kvar = 0; kvar < n; ++kvar) {
      terms.push_back({kvar, conic::HermitianMatrix::unit_diagonal(n, a)});
    }
    p.add_constraint(std::move(terms), 0.0, conic::Sense::LessEqual,
                     problem.power_limits(a));
  }
  return p;
}

// Rank-one promoting extraction: minimize total transmit power at fixed t.
conic::Program unicast_power_min_program(const UnicastProblem& problem,
                                         double t) {
  const int n = static_cast<int>(problem.channel.rows());
  conic::Program p(std::vector<int>(n, n));
  for (int kvar = 0; kvar < n; ++kvar) {
    p.set_objective(kvar, conic::HermitianMatrix(
                              (-Eigen::MatrixXcd::Identity(n, n)).eval()));
  }
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXcd h = problem.channel.row(i).transpose();
    const double tg = t * problem.sinr_weights(i);
    std::vector<conic::Program::Term> terms;
    terms.push_back({i, conic::HermitianMatrix::outer(h)});
    for (int l = 0; l < n; ++l) {
      if (l == i) continue;
      terms.push_back(
          {l, conic::HermitianMatrix((-tg * h * h.adjoint()).eval())});
    }
    p.add_constraint(std::move(terms), 0.0, conic::Sense::GreaterEqual,
                     tg * problem.noise_power(i));
  }
  for (int a = 0; a < n; ++a) {
    std::vector<conic::Program::Term> terms;
    for (int kvar = 0; kvar < n; ++kvar) {
      terms.push_back({kvar, conic::HermitianMatrix::unit_diagonal(n, a)});
    }
    p.add_constraint(std::move(terms), 0.0, conic::Sense::LessEqual,
                     problem.power_limits(a));
  }
  return p;
}

}  // namespace

BeamformingResult solve_unicast_maxmin(const UnicastProblem& problem,
                                       double bisection_tol) {
  problem.validate();
  if (!(bisection_tol > 0.0) || bisection_tol > 1e-2) {
    throw std::invalid_argument("bisection_tol must be in (0, 1e-2]");
  }
  const int n = static_cast<int>(problem.channel.rows());

  if (has_zero_row(problem.channel)) {
    return degenerate_result(Mode::Unicast, n, n, n);
  }

  // Single-user upper bound per user; max over users bounds the balanced
  // level of the relaxation as well.
  double t_up = 0.0;
  for (int i = 0; i < n; ++i) {
    const double amp =
        (problem.power_limits.cwiseSqrt().array() *
         problem.channel.row(i).transpose().cwiseAbs().array())
            .sum();
    t_up = std::max(t_up, amp * amp / (problem.sinr_weights(i) *
                                       problem.noise_power(i)));
  }

  const double margin_scale =
      1.0 + (problem.sinr_weights.array() * problem.noise_power.array())
                .maxCoeff();
  int iterations = 0;
  bool solver_failed = false;
  auto feasible_at = [&](double t, conic::Solution* out) {
    conic::Solution sol = conic::solve(unicast_margin_program(problem, t));
    iterations += sol.iterations;
    if (sol.status != conic::SolveStatus::Optimal) {
      solver_failed = true;
      return false;
    }
    const bool ok = sol.scalar_value >= -1e-7 * margin_scale * (1.0 + t);
    if (ok && out) *out = std::move(sol);
    return ok;
  };

  double t_lo = 0.0;
  double t_hi = t_up * (1.0 + 1e-6) + 1e-300;
  conic::Solution last_feasible;
  bool have_feasible = false;
  for (int iter = 0; iter < 100; ++iter) {
    const bool wide_abs = (t_hi - t_lo) > bisection_tol * (1.0 + t_up);
    const bool wide_rel = t_lo > 0.0 && (t_hi - t_lo) > 2e-4 * t_lo;
    if (!wide_abs && !wide_rel) break;
    if (solver_failed) break;
    const double mid = 0.5 * (t_lo + t_hi);
    if (feasible_at(mid, &last_feasible)) {
      t_lo = mid;
      have_feasible = true;
    } else {
      t_hi = mid;
    }
  }

  BeamformingResult result;
  result.precoders.mode = Mode::Unicast;
  result.solver_iterations = iterations;
  result.relaxation_bound = t_hi;
  if (solver_failed) {
    result.status = SolveOutcome::SolverFailure;
    result.precoders.weights = Eigen::MatrixXcd::Zero(n, n);
    result.achieved_sinr = Eigen::VectorXd::Zero(n);
    return result;
  }

  std::vector<Eigen::MatrixXcd> covariances;
  if (t_lo > 0.0) {
    conic::Solution extraction =
        conic::solve(unicast_power_min_program(problem, t_lo));
    iterations += extraction.iterations;
    result.solver_iterations = iterations;
    if (extraction.status == conic::SolveStatus::Optimal) {
      covariances = std::move(extraction.variables);
    } else if (have_feasible) {
      covariances = std::move(last_feasible.variables);
    }
  } else if (have_feasible) {
    covariances = std::move(last_feasible.variables);
  }

  result.precoders.weights = Eigen::MatrixXcd::Zero(n, n);
  result.rank_residual = Eigen::VectorXd::Zero(n);
  if (!covariances.empty()) {
    for (int kvar = 0; kvar < n; ++kvar) {
      TopEig top = top_eigenvector(covariances[kvar]);
      result.precoders.weights.col(kvar) = top.scaled_vector;
      result.rank_residual(kvar) = top.ratio;
    }
  }
  result.achieved_sinr.resize(n);
  for (int i = 0; i < n; ++i) {
    result.achieved_sinr(i) =
        sinr(result.precoders, problem.channel.row(i).transpose(),
             problem.noise_power(i), i);
  }
  result.t_star =
      (result.achieved_sinr.array() / problem.sinr_weights.array()).minCoeff();
  result.status = SolveOutcome::Optimal;
  return result;
}

}  // namespace combcast::beamforming
