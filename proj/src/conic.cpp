#include "combcast/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

namespace combcast::conic {

HermitianMatrix::HermitianMatrix(Eigen::MatrixXcd m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw std::invalid_argument("hermitian matrix must be square, nonempty");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("matrix is not Hermitian within 1e-12");
  }
  matrix_ = 0.5 * (m + m.adjoint());
}

HermitianMatrix HermitianMatrix::outer(const Eigen::VectorXcd& v) {
  return HermitianMatrix(v * v.adjoint());
}

HermitianMatrix HermitianMatrix::identity(int n) {
  return HermitianMatrix(Eigen::MatrixXcd::Identity(n, n));
}

HermitianMatrix HermitianMatrix::unit_diagonal(int n, int index) {
  if (index < 0 || index >= n) {
    throw std::invalid_argument("unit_diagonal index out of range");
  }
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  m(index, index) = 1.0;
  return HermitianMatrix(std::move(m));
}

double HermitianMatrix::inner(const Eigen::MatrixXcd& x) const {
  return (matrix_.conjugate().cwiseProduct(x)).sum().real();
}

Eigen::MatrixXd embed_complex(const HermitianMatrix& m) {
  const int n = m.dimension();
  Eigen::MatrixXd e(2 * n, 2 * n);
  const Eigen::MatrixXd re = m.matrix().real();
  const Eigen::MatrixXd im = m.matrix().imag();
  e.topLeftCorner(n, n) = re;
  e.topRightCorner(n, n) = -im;
  e.bottomLeftCorner(n, n) = im;
  e.bottomRightCorner(n, n) = re;
  return e;
}

Program::Program(std::vector<int> dimensions, bool with_scalar)
    : dimensions_(std::move(dimensions)), with_scalar_(with_scalar) {
  if (dimensions_.empty() && !with_scalar_) {
    throw std::invalid_argument("program needs at least one variable");
  }
  for (int d : dimensions_) {
    if (d < 1) throw std::invalid_argument("variable dimension must be >= 1");
  }
  for (int d : dimensions_) {
    objective_.push_back(
        HermitianMatrix(Eigen::MatrixXcd::Zero(d, d)));
  }
}

void Program::set_objective(int variable, HermitianMatrix coefficient) {
  if (variable < 0 || variable >= num_variables()) {
    throw std::invalid_argument("objective variable index out of range");
  }
  if (coefficient.dimension() != dimensions_[variable]) {
    throw std::invalid_argument("objective coefficient dimension mismatch");
  }
  objective_[variable] = std::move(coefficient);
}

void Program::set_scalar_objective(double coefficient) {
  if (!with_scalar_) {
    throw std::invalid_argument("program has no scalar variable");
  }
  if (!std::isfinite(coefficient)) {
    throw std::invalid_argument("scalar objective must be finite");
  }
  scalar_objective_ = coefficient;
}

void Program::add_constraint(std::vector<Term> terms, double scalar_coeff,
                             Sense sense, double rhs) {
  if (!std::isfinite(scalar_coeff) || !std::isfinite(rhs)) {
    throw std::invalid_argument("constraint data must be finite");
  }
  if (scalar_coeff != 0.0 && !with_scalar_) {
    throw std::invalid_argument("scalar coefficient on scalar-free program");
  }
  for (const Term& t : terms) {
    if (t.variable < 0 || t.variable >= num_variables()) {
      throw std::invalid_argument("constraint variable index out of range");
    }
    if (t.coefficient.dimension() != dimensions_[t.variable]) {
      throw std::invalid_argument("constraint coefficient dimension mismatch");
    }
  }
  constraints_.push_back(Constraint{std::move(terms), scalar_coeff, sense, rhs});
}

namespace {

constexpr int kMaxIterations = 200;
constexpr double kStepFraction = 0.98;

struct Factor {
  double lambda;
  Eigen::VectorXd v;
};

struct BlockTerm {
  int block;
  Eigen::MatrixXd dense;
  std::vector<Factor> factors;
};

struct InternalRow {
  std::vector<BlockTerm> terms;
  double free_coeff = 0.0;
  double rhs = 0.0;
};

std::vector<Factor> eigen_factors(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  std::vector<Factor> out;
  const double cutoff = 1e-12 * es.eigenvalues().cwiseAbs().maxCoeff();
  for (int i = 0; i < a.rows(); ++i) {
    const double lam = es.eigenvalues()(i);
    if (std::abs(lam) > cutoff) out.push_back({lam, es.eigenvectors().col(i)});
  }
  return out;
}

// Internal standard form: minimize sum_b <C_b, Y_b> + cf*t subject to
// A(Y) + a*t = b, Y_b >= 0 block-diagonal real symmetric, t free. Public
// inequalities carry 1x1 slack blocks; rows are normalized, then b and C
// get one global scale each.
struct Standardized {
  std::vector<int> block_dim;
  std::vector<InternalRow> rows;
  std::vector<Eigen::MatrixXd> c_block;
  double c_free = 0.0;
  Eigen::VectorXd b;
  bool has_free = false;
  double b_scale = 1.0;
  double c_scale = 1.0;
  int num_public = 0;
  // Rows dropped as trivially satisfied keep public indexing out of the
  // internal problem; public checks rerun on the original program anyway.
  bool trivially_infeasible = false;
};

Standardized standardize(const Program& p) {
  Standardized s;
  s.num_public = p.num_variables();
  s.has_free = p.with_scalar();
  for (int v = 0; v < p.num_variables(); ++v) {
    s.block_dim.push_back(2 * p.dimension(v));
  }

  std::vector<double> rhs_list;
  for (const Program::Constraint& c : p.constraints()) {
    std::map<int, Eigen::MatrixXd> acc;
    for (const Program::Term& t : c.terms) {
      Eigen::MatrixXd e = 0.5 * embed_complex(t.coefficient);
      auto it = acc.find(t.variable);
      if (it == acc.end()) {
        acc.emplace(t.variable, std::move(e));
      } else {
        it->second += e;
      }
    }
    double row_scale = std::abs(c.scalar_coeff);
    for (const auto& [v, a] : acc) {
      row_scale = std::max(row_scale, a.norm());
    }
    if (row_scale < 1e-300) {
      const bool ok = (c.sense == Sense::LessEqual && 0.0 <= c.rhs) ||
                      (c.sense == Sense::GreaterEqual && 0.0 >= c.rhs) ||
                      (c.sense == Sense::Equal && c.rhs == 0.0);
      if (!ok) s.trivially_infeasible = true;
      continue;
    }

    InternalRow row;
    for (const auto& [v, a] : acc) {
      Eigen::MatrixXd scaled = a / row_scale;
      if (scaled.norm() < 1e-300) continue;
      std::vector<Factor> f = eigen_factors(scaled);
      row.terms.push_back(BlockTerm{v, std::move(scaled), std::move(f)});
    }
    row.free_coeff = c.scalar_coeff / row_scale;
    row.rhs = c.rhs / row_scale;
    if (c.sense != Sense::Equal) {
      const double sign = (c.sense == Sense::LessEqual) ? 1.0 : -1.0;
      const int slack = static_cast<int>(s.block_dim.size());
      s.block_dim.push_back(1);
      Eigen::MatrixXd one(1, 1);
      one(0, 0) = sign;
      row.terms.push_back(BlockTerm{slack, one, {Factor{sign, Eigen::VectorXd::Ones(1)}}});
    }
    rhs_list.push_back(row.rhs);
    s.rows.push_back(std::move(row));
  }

  s.b_scale = 1.0;
  for (double r : rhs_list) s.b_scale = std::max(s.b_scale, std::abs(r));
  s.b.resize(static_cast<Eigen::Index>(s.rows.size()));
  for (size_t j = 0; j < s.rows.size(); ++j) {
    s.rows[j].rhs /= s.b_scale;
    s.b(static_cast<Eigen::Index>(j)) = s.rows[j].rhs;
  }

  for (size_t b = 0; b < s.block_dim.size(); ++b) {
    s.c_block.push_back(Eigen::MatrixXd::Zero(s.block_dim[b], s.block_dim[b]));
  }
  for (int v = 0; v < p.num_variables(); ++v) {
    s.c_block[v] = -0.5 * embed_complex(p.objective()[v]);
  }
  s.c_free = s.has_free ? -p.scalar_objective() : 0.0;
  s.c_scale = std::max(1.0, std::abs(s.c_free));
  for (const Eigen::MatrixXd& cb : s.c_block) {
    s.c_scale = std::max(s.c_scale, cb.norm());
  }
  for (Eigen::MatrixXd& cb : s.c_block) cb /= s.c_scale;
  s.c_free /= s.c_scale;
  return s;
}

// The interior-point machinery below is templated on the working scalar.
// Double handles the stock 1e-8 tolerance; tighter requests run in x87
// extended precision, whose 64-bit mantissa keeps the Schur solves useful
// at duality gaps far below what double can certify.
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// tr(A * G) for symmetric A and general G.
template <typename Scalar>
Scalar trace_dot(const Mat<Scalar>& a, const Mat<Scalar>& g) {
  return (a.array() * g.transpose().array()).sum();
}

// Largest step alpha with X + alpha*D psd, given the Cholesky factor of X.
template <typename Scalar>
Scalar max_step(const Eigen::LLT<Mat<Scalar>>& llt, const Mat<Scalar>& d) {
  Mat<Scalar> w = llt.matrixL().solve(d);
  w = llt.matrixL().solve(w.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(
      Scalar(0.5) * (w + w.transpose()), Eigen::EigenvaluesOnly);
  const Scalar lmin = es.eigenvalues().minCoeff();
  if (lmin >= Scalar(-1e-300)) return std::numeric_limits<Scalar>::infinity();
  return Scalar(-1) / lmin;
}

// Results of one interior-point run, narrowed to double for the caller.
struct IpmOutcome {
  SolveStatus status = SolveStatus::MaxIterations;
  std::vector<Eigen::MatrixXd> primal;
  double t = 0.0;
  double pobj = 0.0;
  double dobj = 0.0;
  int iterations = 0;
  double cert_margin = 0.0;
};

template <typename Scalar>
class IpmSolver {
 public:
  explicit IpmSolver(const Standardized& s) {
    m_ = static_cast<int>(s.rows.size());
    nb_ = static_cast<int>(s.block_dim.size());
    block_dim_ = s.block_dim;
    has_free_ = s.has_free;
    nu_ = 0;
    for (int d : block_dim_) nu_ += d;

    b_ = s.b.cast<Scalar>();
    c_free_ = Scalar(s.c_free);
    c_block_.reserve(nb_);
    for (const Eigen::MatrixXd& cb : s.c_block) {
      c_block_.push_back(cb.cast<Scalar>());
    }

    // Per-block flattened factor table for the Schur complement, and the
    // list of rows whose dense coefficients touch the block.
    factor_u_.resize(nb_);
    factor_lam_.resize(nb_);
    factor_row_.resize(nb_);
    block_rows_.resize(nb_);
    std::vector<std::vector<const Factor*>> tmp(nb_);
    std::vector<std::vector<int>> tmp_row(nb_);
    for (int j = 0; j < m_; ++j) {
      for (const BlockTerm& t : s.rows[j].terms) {
        block_rows_[t.block].push_back({j, t.dense.cast<Scalar>()});
        for (const Factor& f : t.factors) {
          tmp[t.block].push_back(&f);
          tmp_row[t.block].push_back(j);
        }
      }
    }
    for (int b = 0; b < nb_; ++b) {
      const int n = block_dim_[b];
      const int nf = static_cast<int>(tmp[b].size());
      factor_u_[b].resize(n, nf);
      factor_lam_[b].resize(nf);
      factor_row_[b].resize(nf);
      for (int f = 0; f < nf; ++f) {
        factor_u_[b].col(f) = tmp[b][f]->v.cast<Scalar>();
        factor_lam_[b](f) = Scalar(tmp[b][f]->lambda);
        factor_row_[b][f] = tmp_row[b][f];
      }
    }

    a_free_.resize(m_);
    for (int j = 0; j < m_; ++j) a_free_(j) = Scalar(s.rows[j].free_coeff);

    x_.resize(nb_);
    z_.resize(nb_);
    const Scalar xi = Scalar(10);
    for (int b = 0; b < nb_; ++b) {
      x_[b] = xi * Mat<Scalar>::Identity(block_dim_[b], block_dim_[b]);
      z_[b] = xi * Mat<Scalar>::Identity(block_dim_[b], block_dim_[b]);
    }
    y_ = Vec<Scalar>::Zero(m_);
    t_ = Scalar(0);
  }

  SolveStatus run(double gap_tol, int* iterations, double* cert_margin);

  const std::vector<Mat<Scalar>>& primal() const { return x_; }
  Scalar free_value() const { return t_; }
  Scalar primal_objective() const {
    Scalar p = c_free_ * t_;
    for (int b = 0; b < nb_; ++b) p += x_[b].cwiseProduct(c_block_[b]).sum();
    return p;
  }
  Scalar dual_objective() const { return b_.dot(y_); }

 private:
  struct RowTerm {
    int row;
    Mat<Scalar> dense;
  };

  Vec<Scalar> apply_a(const std::vector<Mat<Scalar>>& g) const {
    Vec<Scalar> out = Vec<Scalar>::Zero(m_);
    for (int b = 0; b < nb_; ++b) {
      for (const RowTerm& rt : block_rows_[b]) {
        out(rt.row) += trace_dot<Scalar>(rt.dense, g[b]);
      }
    }
    return out;
  }

  void apply_a_adjoint(const Vec<Scalar>& y,
                       std::vector<Mat<Scalar>>& out) const {
    for (int b = 0; b < nb_; ++b) {
      out[b].setZero(block_dim_[b], block_dim_[b]);
      for (const RowTerm& rt : block_rows_[b]) {
        out[b] += y(rt.row) * rt.dense;
      }
    }
  }

  // The factorization may carry jitter, and near the central-path boundary
  // the Schur complement conditioning eats most of the working-precision
  // digits. Refining against the unjittered matrix wins them back.
  Vec<Scalar> solve_schur(const Vec<Scalar>& rhs) {
    const Scalar refine_cut =
        Scalar(100) * std::numeric_limits<Scalar>::epsilon();
    Vec<Scalar> sol = schur_llt_.solve(rhs);
    for (int pass = 0; pass < 2; ++pass) {
      const Vec<Scalar> residual = rhs - schur_mat_ * sol;
      if (residual.cwiseAbs().maxCoeff() <=
          refine_cut * (rhs.cwiseAbs().maxCoeff() + Scalar(1))) {
        break;
      }
      sol += schur_llt_.solve(residual);
    }
    return sol;
  }

  // Solves the Newton system for the complementarity target rc, reusing the
  // factored Schur complement. Outputs dy, dt, dx, dz.
  void newton_step(const std::vector<Mat<Scalar>>& rc, const Vec<Scalar>& rp,
                   const std::vector<Mat<Scalar>>& rd, Scalar rf,
                   Vec<Scalar>& dy, Scalar& dt, std::vector<Mat<Scalar>>& dx,
                   std::vector<Mat<Scalar>>& dz) {
    Vec<Scalar> g = rp;
    for (int b = 0; b < nb_; ++b) {
      scratch_[b] = rc[b] - x_[b] * rd[b];
      scratch_[b] = z_llt_[b].solve(scratch_[b].transpose()).transpose().eval();
      for (const RowTerm& rt : block_rows_[b]) {
        g(rt.row) -= trace_dot<Scalar>(rt.dense, scratch_[b]);
      }
    }
    const Vec<Scalar> u = solve_schur(g);
    if (has_free_ && free_active_) {
      dt = (a_free_.dot(u) - rf) / free_denom_;
      dy = u - dt * schur_inv_a_;
    } else {
      dt = Scalar(0);
      dy = u;
    }
    for (int b = 0; b < nb_; ++b) {
      dz[b] = rd[b];
      for (const RowTerm& rt : block_rows_[b]) {
        dz[b] -= dy(rt.row) * rt.dense;
      }
      dx[b] = rc[b] - x_[b] * dz[b];
      dx[b] = z_llt_[b].solve(dx[b].transpose()).transpose().eval();
      dx[b] = Scalar(0.5) * (dx[b] + dx[b].transpose()).eval();
    }
  }

  int m_ = 0;
  int nb_ = 0;
  Scalar nu_ = Scalar(0);
  std::vector<int> block_dim_;
  bool has_free_ = false;

  Vec<Scalar> b_;
  Scalar c_free_ = Scalar(0);
  std::vector<Mat<Scalar>> c_block_;
  std::vector<Mat<Scalar>> factor_u_;
  std::vector<Vec<Scalar>> factor_lam_;
  std::vector<std::vector<int>> factor_row_;
  std::vector<std::vector<RowTerm>> block_rows_;
  Vec<Scalar> a_free_;

  std::vector<Mat<Scalar>> x_, z_;
  Vec<Scalar> y_;
  Scalar t_ = Scalar(0);

  std::vector<Eigen::LLT<Mat<Scalar>>> z_llt_;
  Eigen::LLT<Mat<Scalar>> schur_llt_;
  Mat<Scalar> schur_mat_;
  Vec<Scalar> schur_inv_a_;
  Scalar free_denom_ = Scalar(1);
  bool free_active_ = false;
  std::vector<Mat<Scalar>> scratch_;
};

template <typename Scalar>
SolveStatus IpmSolver<Scalar>::run(double gap_tol, int* iterations,
                                   double* cert_margin) {
  const double feas_tol = 1e-10;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  *cert_margin = 0.0;

  std::vector<Mat<Scalar>> rd(nb_), rc(nb_), dx(nb_), dz(nb_), dxa(nb_),
      dza(nb_), astar(nb_);
  scratch_.resize(nb_);
  z_llt_.resize(nb_);
  std::vector<Eigen::LLT<Mat<Scalar>>> x_llt(nb_);
  Vec<Scalar> dy(m_), dya(m_);
  Mat<Scalar> schur(m_, m_);
  std::vector<Mat<Scalar>> xu(nb_), zu(nb_), g1(nb_), g2(nb_);
  int tiny_steps = 0;

  // Once the Schur system turns singular the computed directions can move
  // the iterate away from an already-converged state, so the best iterate
  // seen is kept aside. Numerical breakdown (singular Schur complement,
  // collapsed complementarity, vanishing steps, stagnation) then counts as
  // successful termination whenever that iterate meets a mildly relaxed
  // tolerance; the caller re-checks the public contract on the unscaled
  // data anyway.
  std::vector<Mat<Scalar>> best_x, best_z;
  Vec<Scalar> best_y;
  Scalar best_t = Scalar(0);
  Scalar best_score = std::numeric_limits<Scalar>::infinity();
  bool best_ok = false;
  int stagnant = 0;
  auto stall = [&] {
    if (best_ok) {
      x_ = best_x;
      z_ = best_z;
      y_ = best_y;
      t_ = best_t;
      return SolveStatus::Optimal;
    }
    return SolveStatus::MaxIterations;
  };

  for (int iter = 0; iter < kMaxIterations; ++iter) {
    *iterations = iter;

    Vec<Scalar> rp = b_ - apply_a(x_);
    rp -= t_ * a_free_;
    apply_a_adjoint(y_, astar);
    Scalar dual_res = Scalar(0);
    for (int b = 0; b < nb_; ++b) {
      rd[b] = c_block_[b] - astar[b] - z_[b];
      dual_res = std::max(dual_res, rd[b].cwiseAbs().maxCoeff());
    }
    const Scalar rf = has_free_ ? c_free_ - a_free_.dot(y_) : Scalar(0);
    dual_res = std::max(dual_res, std::abs(rf));

    Scalar mu = Scalar(0);
    for (int b = 0; b < nb_; ++b) mu += x_[b].cwiseProduct(z_[b]).sum();
    mu /= nu_;

    const Scalar pobj = primal_objective();
    const Scalar dobj = dual_objective();
    const Scalar prim_res =
        rp.cwiseAbs().maxCoeff() / (Scalar(1) + b_.cwiseAbs().maxCoeff());
    const Scalar gap = std::abs(pobj - dobj) /
                       (Scalar(1) + std::max(std::abs(pobj), std::abs(dobj)));

    if (prim_res <= feas_tol && dual_res <= feas_tol && gap <= gap_tol) {
      return SolveStatus::Optimal;
    }
    const Scalar score = std::max({prim_res, dual_res, gap});
    const double accept_cut = std::max(10.0 * gap_tol, 1e-9);
    const bool acceptable = prim_res <= accept_cut && dual_res <= accept_cut &&
                            gap <= accept_cut;
    // An acceptable iterate is never evicted by a lower-score iterate that
    // misses the acceptability thresholds, otherwise a late near-miss could
    // shadow a restorable solution.
    const bool keep = best_ok ? (acceptable && score < best_score)
                              : (acceptable || score < best_score);
    if (keep) {
      best_score = score;
      best_x = x_;
      best_z = z_;
      best_y = y_;
      best_t = t_;
      best_ok = acceptable;
      stagnant = 0;
    } else if (++stagnant >= 12) {
      return stall();
    }

    // Dual improving ray: y with b'y = 1, A*(y) <= 0, a'y = 0 certifies
    // primal infeasibility.
    const Scalar bty = dobj;
    if (bty > 1e-2 && prim_res > 1e3 * feas_tol) {
      const Vec<Scalar> yhat = y_ / bty;
      Scalar viol = has_free_ ? std::abs(a_free_.dot(yhat)) : Scalar(0);
      for (int b = 0; b < nb_; ++b) {
        Mat<Scalar> zb = Mat<Scalar>::Zero(block_dim_[b], block_dim_[b]);
        for (const RowTerm& rt : block_rows_[b]) zb += yhat(rt.row) * rt.dense;
        Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(zb,
                                                      Eigen::EigenvaluesOnly);
        viol = std::max(viol, es.eigenvalues().maxCoeff());
      }
      if (viol / (Scalar(1) + yhat.template lpNorm<1>()) <= 1e-9) {
        *cert_margin = static_cast<double>(viol);
        return SolveStatus::Infeasible;
      }
    }

    // Primal improving ray: X with A(X) + a*t = 0, <C,X> + cf*t < 0
    // certifies dual infeasibility (objective unbounded below).
    Scalar trx = std::abs(t_);
    for (int b = 0; b < nb_; ++b) trx += x_[b].trace();
    if (pobj < -1e4 || trx > 1e7) {
      std::vector<Mat<Scalar>> xhat(nb_);
      for (int b = 0; b < nb_; ++b) xhat[b] = x_[b] / trx;
      const Scalar that = t_ / trx;
      Vec<Scalar> ares = apply_a(xhat) + that * a_free_;
      Scalar cobj = c_free_ * that;
      for (int b = 0; b < nb_; ++b) {
        cobj += xhat[b].cwiseProduct(c_block_[b]).sum();
      }
      const Scalar resn = ares.cwiseAbs().maxCoeff();
      if (resn <= 1e-9 && cobj < -1e-10) {
        *cert_margin = static_cast<double>(resn);
        return SolveStatus::Unbounded;
      }
    }

    if (mu < Scalar(10) * eps && iter > 5) return stall();

    for (int b = 0; b < nb_; ++b) {
      z_llt_[b].compute(z_[b]);
      if (z_llt_[b].info() != Eigen::Success) {
        z_llt_[b].compute(z_[b] + Scalar(1e4) * eps * z_[b].trace() *
                                      Mat<Scalar>::Identity(block_dim_[b],
                                                            block_dim_[b]));
        if (z_llt_[b].info() != Eigen::Success) return stall();
      }
      x_llt[b].compute(x_[b]);
      if (x_llt[b].info() != Eigen::Success) return stall();
    }

    // Schur complement via the rank factors of each coefficient:
    // M(j,k) = sum over factor pairs l1*l2 * (v1' X v2)(v1' Z^-1 v2).
    schur.setZero();
    for (int b = 0; b < nb_; ++b) {
      const int nf = static_cast<int>(factor_lam_[b].size());
      if (nf == 0) continue;
      xu[b].noalias() = x_[b] * factor_u_[b];
      zu[b] = z_llt_[b].solve(factor_u_[b]);
      g1[b].noalias() = factor_u_[b].transpose() * xu[b];
      g2[b].noalias() = factor_u_[b].transpose() * zu[b];
      const auto& lam = factor_lam_[b];
      const auto& row = factor_row_[b];
      for (int f1 = 0; f1 < nf; ++f1) {
        const Scalar l1 = lam(f1);
        const int r1 = row[f1];
        for (int f2 = 0; f2 < nf; ++f2) {
          schur(r1, row[f2]) += l1 * lam(f2) * g1[b](f1, f2) * g2[b](f1, f2);
        }
      }
    }
    schur_mat_ = schur;
    schur_llt_.compute(schur);
    const Scalar schur_scale =
        Scalar(1) + schur.diagonal().cwiseAbs().maxCoeff();
    Scalar jitter = Scalar(1e3) * eps * schur_scale;
    while (schur_llt_.info() != Eigen::Success &&
           jitter < Scalar(1e-4) * schur_scale) {
      schur_llt_.compute(schur + jitter * Mat<Scalar>::Identity(m_, m_));
      jitter *= Scalar(100);
    }
    if (schur_llt_.info() != Eigen::Success) return stall();

    free_active_ = false;
    if (has_free_) {
      schur_inv_a_ = solve_schur(a_free_);
      free_denom_ = a_free_.dot(schur_inv_a_);
      free_active_ = free_denom_ > Scalar(1e-300);
    }

    // Predictor: aim at complementarity zero.
    for (int b = 0; b < nb_; ++b) rc[b] = -(x_[b] * z_[b]);
    Scalar dt_aff = Scalar(0);
    newton_step(rc, rp, rd, rf, dya, dt_aff, dxa, dza);

    Scalar ap = std::numeric_limits<Scalar>::infinity();
    Scalar ad = ap;
    for (int b = 0; b < nb_; ++b) {
      ap = std::min(ap, max_step<Scalar>(x_llt[b], dxa[b]));
      ad = std::min(ad, max_step<Scalar>(z_llt_[b], dza[b]));
    }
    const Scalar ap_aff = std::min(Scalar(1), Scalar(kStepFraction) * ap);
    const Scalar ad_aff = std::min(Scalar(1), Scalar(kStepFraction) * ad);

    Scalar mu_aff = Scalar(0);
    for (int b = 0; b < nb_; ++b) {
      mu_aff += (x_[b] + ap_aff * dxa[b])
                    .cwiseProduct(z_[b] + ad_aff * dza[b])
                    .sum();
    }
    mu_aff = std::max(mu_aff / nu_, Scalar(0));
    Scalar sigma = std::pow(mu_aff / mu, Scalar(3));
    sigma = std::clamp(sigma, Scalar(1e-8), Scalar(1));

    // Corrector with Mehrotra second-order term.
    for (int b = 0; b < nb_; ++b) {
      rc[b] = sigma * mu * Mat<Scalar>::Identity(block_dim_[b], block_dim_[b]) -
              x_[b] * z_[b] - dxa[b] * dza[b];
    }
    Scalar dt = Scalar(0);
    newton_step(rc, rp, rd, rf, dy, dt, dx, dz);

    ap = std::numeric_limits<Scalar>::infinity();
    ad = ap;
    for (int b = 0; b < nb_; ++b) {
      ap = std::min(ap, max_step<Scalar>(x_llt[b], dx[b]));
      ad = std::min(ad, max_step<Scalar>(z_llt_[b], dz[b]));
    }
    ap = std::min(Scalar(1), Scalar(kStepFraction) * ap);
    ad = std::min(Scalar(1), Scalar(kStepFraction) * ad);

    for (int b = 0; b < nb_; ++b) {
      x_[b] += ap * dx[b];
      x_[b] = (Scalar(0.5) * (x_[b] + x_[b].transpose())).eval();
      z_[b] += ad * dz[b];
      z_[b] = (Scalar(0.5) * (z_[b] + z_[b].transpose())).eval();
    }
    y_ += ad * dy;
    t_ += ap * dt;

    if (ap < Scalar(1e-6) && ad < Scalar(1e-6)) {
      if (++tiny_steps >= 3) return stall();
    } else {
      tiny_steps = 0;
    }
  }
  return stall();
}

// One full solve at the requested working precision, narrowed to doubles.
template <typename Scalar>
IpmOutcome run_ipm(const Standardized& s, double gap_tol) {
  IpmSolver<Scalar> ipm(s);
  IpmOutcome out;
  out.status = ipm.run(gap_tol, &out.iterations, &out.cert_margin);
  out.primal.reserve(ipm.primal().size());
  for (const Mat<Scalar>& xb : ipm.primal()) {
    out.primal.push_back(xb.template cast<double>());
  }
  out.t = static_cast<double>(ipm.free_value());
  out.pobj = static_cast<double>(ipm.primal_objective());
  out.dobj = static_cast<double>(ipm.dual_objective());
  return out;
}

// Pulls the complex variable out of its real embedding. The congruence
// [I iI] Y [I; -iI] / 2 maps any symmetric psd Y to a Hermitian psd X with
// the same inner products against embedded coefficients.
Eigen::MatrixXcd recover_complex(const Eigen::MatrixXd& y) {
  const int n = static_cast<int>(y.rows()) / 2;
  const std::complex<double> im(0.0, 1.0);
  Eigen::MatrixXcd x =
      0.5 * (y.topLeftCorner(n, n) + y.bottomRightCorner(n, n)) +
      0.5 * im * (y.bottomLeftCorner(n, n) - y.topRightCorner(n, n));
  return 0.5 * (x + x.adjoint());
}

double constraint_violation(const Program::Constraint& c,
                            const std::vector<Eigen::MatrixXcd>& x, double t,
                            double* activity = nullptr) {
  double lhs = c.scalar_coeff * t;
  for (const Program::Term& term : c.terms) {
    lhs += term.coefficient.inner(x[term.variable]);
  }
  if (activity != nullptr) *activity = std::abs(lhs);
  switch (c.sense) {
    case Sense::LessEqual:
      return std::max(0.0, lhs - c.rhs);
    case Sense::GreaterEqual:
      return std::max(0.0, c.rhs - lhs);
    case Sense::Equal:
      return std::abs(lhs - c.rhs);
  }
  return 0.0;
}

}  // namespace

Solution solve(const Program& program, double tolerance) {
  if (!(tolerance > 0.0) || tolerance > 1e-2) {
    throw std::invalid_argument("tolerance must be in (0, 1e-2]");
  }

  Solution sol;
  sol.variables.reserve(program.num_variables());
  for (int v = 0; v < program.num_variables(); ++v) {
    sol.variables.push_back(
        Eigen::MatrixXcd::Zero(program.dimension(v), program.dimension(v)));
  }

  // No constraints: the maximum is 0 at X = 0 unless some objective
  // direction is improving, which makes the program unbounded.
  if (program.constraints().empty()) {
    bool unbounded = program.with_scalar() && program.scalar_objective() != 0.0;
    for (int v = 0; v < program.num_variables() && !unbounded; ++v) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
          program.objective()[v].matrix(), Eigen::EigenvaluesOnly);
      if (es.eigenvalues().maxCoeff() > 0.0) unbounded = true;
    }
    sol.status = unbounded ? SolveStatus::Unbounded : SolveStatus::Optimal;
    return sol;
  }

  Standardized s = standardize(program);
  if (s.trivially_infeasible) {
    sol.status = SolveStatus::Infeasible;
    return sol;
  }
  if (s.rows.empty()) {
    // Every constraint was trivially satisfied; same as unconstrained.
    bool unbounded = program.with_scalar() && program.scalar_objective() != 0.0;
    for (int v = 0; v < program.num_variables() && !unbounded; ++v) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
          program.objective()[v].matrix(), Eigen::EigenvaluesOnly);
      if (es.eigenvalues().maxCoeff() > 0.0) unbounded = true;
    }
    sol.status = unbounded ? SolveStatus::Unbounded : SolveStatus::Optimal;
    return sol;
  }
  if (s.has_free) {
    bool free_in_rows = false;
    for (const InternalRow& r : s.rows) {
      if (r.free_coeff != 0.0) free_in_rows = true;
    }
    if (!free_in_rows && program.scalar_objective() != 0.0) {
      sol.status = SolveStatus::Unbounded;
      return sol;
    }
  }
  if (s.block_dim.empty()) {
    // Scalar-only program whose constraints are all equalities: a one
    // dimensional linear system, solved directly.
    double t = 0.0;
    bool have_t = false;
    bool consistent = true;
    for (const InternalRow& r : s.rows) {
      const double cand = r.rhs / r.free_coeff;
      if (!have_t) {
        t = cand;
        have_t = true;
      } else if (std::abs(cand - t) > 1e-9 * (1.0 + std::abs(t))) {
        consistent = false;
      }
    }
    if (!consistent) {
      sol.status = SolveStatus::Infeasible;
      return sol;
    }
    sol.scalar_value = t * s.b_scale;
    sol.objective = program.scalar_objective() * sol.scalar_value;
    sol.status = SolveStatus::Optimal;
    return sol;
  }

  // Recovers the public-data solution from an interior-point outcome and
  // re-checks the reported contract on it before trusting the internal
  // convergence test.
  auto finish = [&](const IpmOutcome& ipm) {
    sol.iterations = ipm.iterations;
    sol.certificate_margin = ipm.cert_margin;
    for (int v = 0; v < program.num_variables(); ++v) {
      sol.variables[v] = s.b_scale * recover_complex(ipm.primal[v]);
    }
    sol.scalar_value = program.with_scalar() ? s.b_scale * ipm.t : 0.0;
    double obj = program.with_scalar()
                     ? program.scalar_objective() * sol.scalar_value
                     : 0.0;
    for (int v = 0; v < program.num_variables(); ++v) {
      obj += program.objective()[v].inner(sol.variables[v]);
    }
    sol.objective = obj;
    sol.duality_gap = std::abs(ipm.pobj - ipm.dobj) * s.b_scale * s.c_scale;

    if (ipm.status != SolveStatus::Optimal) return ipm.status;
    bool ok = sol.duality_gap <=
              std::max(1e-6, tolerance) * (1.0 + std::abs(sol.objective));
    for (const Program::Constraint& c : program.constraints()) {
      // The allowance follows the row's own magnitude: a constraint whose
      // sides sit at 1e3 cannot be met to an absolute 1e-7 in doubles.
      double activity = 0.0;
      const double violation =
          constraint_violation(c, sol.variables, sol.scalar_value, &activity);
      if (violation > 1e-7 * (1.0 + std::abs(c.rhs) + activity)) {
        ok = false;
      }
    }
    for (const Eigen::MatrixXcd& xv : sol.variables) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(xv,
                                                         Eigen::EigenvaluesOnly);
      const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
      if (es.eigenvalues().minCoeff() < -1e-7 * std::max(1.0, lmax)) ok = false;
    }
    return ok ? SolveStatus::Optimal : SolveStatus::MaxIterations;
  };

  // Stock requests run in double. Tighter ones switch to extended precision,
  // the only way the Schur solves stay meaningful at duality gaps below 1e-8.
  const double gap_tol = std::min(tolerance, 1e-8);
  SolveStatus status =
      finish(tolerance < 1e-8 ? run_ipm<long double>(s, tolerance)
                              : run_ipm<double>(s, gap_tol));
  if (status == SolveStatus::MaxIterations && tolerance >= 1e-8) {
    // A double run near its precision floor can stall on an iterate that
    // misses the contract above; one retry with more headroom settles the
    // instance one way or the other.
    status = finish(run_ipm<long double>(s, gap_tol));
  }
  sol.status = status;
  return sol;
}

}  // namespace combcast::conic
