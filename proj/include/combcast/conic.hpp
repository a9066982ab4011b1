#pragma once

#include <Eigen/Core>
#include <vector>

namespace combcast::conic {

// Hermitian matrix with validated symmetry (1e-12 absolute) and dimension.
// Stored exactly Hermitian: the constructor averages M and its adjoint.
class HermitianMatrix {
 public:
  explicit HermitianMatrix(Eigen::MatrixXcd m);

  static HermitianMatrix outer(const Eigen::VectorXcd& v);  // v v^H
  static HermitianMatrix identity(int n);
  static HermitianMatrix unit_diagonal(int n, int index);   // e_k e_k^H

  int dimension() const { return static_cast<int>(matrix_.rows()); }
  const Eigen::MatrixXcd& matrix() const { return matrix_; }

  // Re tr(A X); real for Hermitian arguments.
  double inner(const Eigen::MatrixXcd& x) const;

 private:
  Eigen::MatrixXcd matrix_;
};

// Standard real embedding [[Re M, -Im M], [Im M, Re M]]. Positive
// semidefinite iff M is; eigenvalues of M each appear twice.
Eigen::MatrixXd embed_complex(const HermitianMatrix& m);

enum class Sense { LessEqual, GreaterEqual, Equal };

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIterations };

// Linear program over Hermitian positive-semidefinite matrix variables and
// an optional free scalar:
//   maximize   sum_v <C_v, X_v> + c * t
//   subject to sum_v <A_jv, X_v> + a_j * t  (<=, >=, =)  b_j
//              X_v >= 0.
class Program {
 public:
  struct Term {
    int variable;
    HermitianMatrix coefficient;
  };

  struct Constraint {
    std::vector<Term> terms;
    double scalar_coeff = 0.0;
    Sense sense = Sense::LessEqual;
    double rhs = 0.0;
  };

  explicit Program(std::vector<int> dimensions, bool with_scalar = false);

  void set_objective(int variable, HermitianMatrix coefficient);
  void set_scalar_objective(double coefficient);
  void add_constraint(std::vector<Term> terms, double scalar_coeff,
                      Sense sense, double rhs);

  int num_variables() const { return static_cast<int>(dimensions_.size()); }
  int dimension(int v) const { return dimensions_.at(v); }
  bool with_scalar() const { return with_scalar_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::vector<HermitianMatrix>& objective() const { return objective_; }
  double scalar_objective() const { return scalar_objective_; }

 private:
  std::vector<int> dimensions_;
  bool with_scalar_;
  std::vector<HermitianMatrix> objective_;
  double scalar_objective_ = 0.0;
  std::vector<Constraint> constraints_;
};

struct Solution {
  SolveStatus status = SolveStatus::MaxIterations;
  std::vector<Eigen::MatrixXcd> variables;
  double scalar_value = 0.0;
  double objective = 0.0;
  double duality_gap = 0.0;   // |primal - dual|, >= 0
  int iterations = 0;
  // For Infeasible/Unbounded: residual norm of the improving ray that
  // certifies the status (smaller = cleaner certificate).
  double certificate_margin = 0.0;
};

// Primal-dual path-following interior-point solve. Tolerance is the target
// relative duality gap, in (0, 1e-2]. Deterministic.
Solution solve(const Program& program, double tolerance = 1e-8);

}  // namespace combcast::conic
