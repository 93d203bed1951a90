#pragma once
// Canonical conic form shared by the two interior-point backends:
//
//   minimize c'x  s.t.  A x = b,  s = h - G x in K,
//
// where K is a product of one nonnegative orthant block, second-order cones
// and exponential cones (rows ordered in that order).

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <vector>

#include "uavnet/cvx.hpp"

namespace uavnet::cvx::detail {

struct SparseRow {
  std::vector<int> cols;
  std::vector<double> vals;
};

struct Block {
  ConeKind kind = ConeKind::nonneg;
  int offset = 0;
  int dim = 0;
  // Dense restriction of G to the columns this block touches.
  std::vector<int> cols;
  Eigen::MatrixXd gsub;
  // soc only: gsub' diag(-1, 1, .., 1) gsub, the constant part of the reduced Hessian.
  Eigen::MatrixXd gdg;
};

struct Canonical {
  int n = 0;
  Eigen::VectorXd c;
  std::vector<SparseRow> a_rows;
  Eigen::VectorXd b;
  std::vector<SparseRow> g_rows;
  Eigen::VectorXd h;
  std::vector<Block> blocks;
  double degree = 0.0;
  int num_nonneg = 0;

  int m() const { return static_cast<int>(g_rows.size()); }
  int p() const { return static_cast<int>(a_rows.size()); }

  Eigen::VectorXd slack(const Eigen::VectorXd& x) const;   // h - G x
  Eigen::VectorXd g_mul(const Eigen::VectorXd& x) const;   // G x
  Eigen::VectorXd gt_mul(const Eigen::VectorXd& z) const;  // G' z
  Eigen::VectorXd a_mul(const Eigen::VectorXd& x) const;
  Eigen::VectorXd at_mul(const Eigen::VectorXd& y) const;

  void finalize_blocks();
};

/// Builds the minimization form of a program (objective negated).
Canonical canonicalize(const ConvexProgram& prog);

/// Appends a variable sigma with G column -e (cone identity direction), the
/// row sigma + 1 >= 0 and the ball ||x|| <= radius; the objective becomes
/// "minimize sigma".
Canonical phase_one(const Canonical& prob, double radius);

/// Cone identity-like interior direction e for the stacked cone.
Eigen::VectorXd interior_direction(const Canonical& prob);

bool primal_interior(const Canonical& prob, const Eigen::VectorXd& s);
bool dual_interior(const Canonical& prob, const Eigen::VectorXd& z);

/// F(s); +inf outside the interior.
double barrier_value(const Canonical& prob, const Eigen::VectorXd& s);
Eigen::VectorXd barrier_gradient(const Canonical& prob, const Eigen::VectorXd& s);

/// Returns G' * Hess F(s) * G (dense n x n).
Eigen::MatrixXd reduced_hessian(const Canonical& prob, const Eigen::VectorXd& s);

/// Largest violation of the cone constraints by s (0 if s in K).
double cone_violation(const Canonical& prob, const Eigen::VectorXd& s);

/// Solves [H A'; A 0][dx; dy] = [r1; r2] with a small regularization and
/// iterative refinement. Returns false when the system is numerically singular.
bool solve_kkt(const Canonical& prob, const Eigen::MatrixXd& hess, const Eigen::VectorXd& r1,
               const Eigen::VectorXd& r2, Eigen::VectorXd& dx, Eigen::VectorXd& dy);

/// Sparse factorization of the same system with H = G' Hess F(s) G. The
/// pattern of H is fixed by the problem, so the ordering is computed once.
class KktSystem {
 public:
  explicit KktSystem(const Canonical& prob);
  bool factor(const Eigen::VectorXd& s);
  bool solve(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2, Eigen::VectorXd& dx, Eigen::VectorXd& dy) const;

 private:
  void fill(const Eigen::VectorXd& s);
  bool factor_schur();

  static constexpr int kDenseMax = 200;

  const Canonical& prob_;
  std::vector<Eigen::Triplet<double>> trip_;
  std::vector<int> slot_;  // value index of every contribution, fixed after the first fill
  std::vector<int> diag_;
  std::vector<double> vals_;
  Eigen::MatrixXd local_;
  Eigen::SparseMatrix<double> h_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
  bool analyzed_ = false;
  bool dense_ = false;
  Eigen::MatrixXd hd_;
  Eigen::LLT<Eigen::MatrixXd> dllt_;
  Eigen::MatrixXd a_, at_;
  Eigen::MatrixXd hinv_at_;
  Eigen::LDLT<Eigen::MatrixXd> schur_;
};

/// Hess F(s) v, block by block.
Eigen::VectorXd barrier_hess_mul(const Canonical& prob, const Eigen::VectorXd& s, const Eigen::VectorXd& v);

/// Minimum-norm solution of A x = b, or false if inconsistent.
bool equality_point(const Canonical& prob, Eigen::VectorXd& x);

struct StartPoint {
  bool feasible = false;
  Eigen::VectorXd x;
  Eigen::VectorXd certificate;  // Farkas multipliers on cone rows when infeasible
  int iterations = 0;
};

SolveReport solve_barrier(const Canonical& prob, const SolveOptions& opts);
SolveReport solve_primal_dual(const Canonical& prob, const SolveOptions& opts);

}  // namespace uavnet::cvx::detail
