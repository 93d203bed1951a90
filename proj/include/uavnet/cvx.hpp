#pragma once
// Convex program builder and interior-point solvers.
//
// Programs are stated as: maximize a linear objective subject to affine
// equalities, affine inequalities, second-order cones and exponential cones.
// Two backends are available: a primal-dual path-following method (default)
// and a textbook dense log-barrier method used as a cross-check.

#include <string>
#include <vector>

namespace uavnet::cvx {

using VarId = int;

struct Term {
  VarId var = 0;
  double coef = 0.0;
};

/// sum_i coef_i * x_{var_i} + constant
struct Affine {
  std::vector<Term> terms;
  double constant = 0.0;

  Affine() = default;
  Affine(double c) : constant(c) {}  // NOLINT(google-explicit-constructor)
  static Affine var(VarId v, double coef = 1.0) {
    Affine a;
    a.terms.push_back({v, coef});
    return a;
  }

  Affine& operator+=(const Affine& o);
  Affine& operator-=(const Affine& o);
  Affine& operator*=(double s);
  friend Affine operator+(Affine a, const Affine& b) { return a += b; }
  friend Affine operator-(Affine a, const Affine& b) { return a -= b; }
  friend Affine operator*(double s, Affine a) { return a *= s; }
  friend Affine operator-(Affine a) { return a *= -1.0; }

  double eval(const std::vector<double>& x) const;
};

enum class ConeKind { nonneg, soc, exp };

/// One constraint. For `nonneg` the single row must be >= 0 (equalities are
/// stored separately). For `soc` rows = (t, x_1..x_k) meaning ||x|| <= t.
/// For `exp` rows = (u, v, w) meaning v * exp(u / v) <= w, v > 0.
struct Constraint {
  ConeKind kind = ConeKind::nonneg;
  std::vector<Affine> rows;
  std::string label;
};

class ConvexProgram {
 public:
  VarId add_variable(std::string name);
  int num_variables() const { return static_cast<int>(names_.size()); }
  const std::string& name(VarId v) const { return names_.at(v); }

  void maximize(Affine objective);
  void add_equality(Affine expr, std::string label = {});  // expr == 0
  void add_less_equal(Affine expr, std::string label = {});  // expr <= 0
  void add_bounds(VarId v, double lo, double hi, std::string label = {});
  /// ||xs|| <= t
  void add_soc(Affine t, std::vector<Affine> xs, std::string label = {});
  /// ||xs||^2 <= 2 * a * b with a, b >= 0 (rotated cone, stored as a plain SOC).
  void add_rotated_soc(Affine a, Affine b, std::vector<Affine> xs, std::string label = {});
  /// v * exp(u / v) <= w
  void add_exp_cone(Affine u, Affine v, Affine w, std::string label = {});

  const Affine& objective() const { return objective_; }
  const std::vector<Affine>& equalities() const { return equalities_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }

  /// Largest violation of any constraint at x (0 when feasible).
  double max_violation(const std::vector<double>& x) const;

  /// Human-readable text form (one constraint per line) for offline debugging.
  std::string dump() const;

 private:
  void check(const Affine& a) const;

  std::vector<std::string> names_;
  Affine objective_;
  std::vector<Affine> equalities_;
  std::vector<Constraint> constraints_;
};

enum class Status { optimal, infeasible, max_iters };

const char* to_string(Status s);

struct SolveReport {
  Status status = Status::max_iters;
  std::vector<double> x;
  double objective_value = 0.0;
  double primal_residual = 0.0;  // equality residual plus cone violation
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
  /// Farkas multipliers on the cone rows when status == infeasible.
  std::vector<double> certificate;

  double operator[](VarId v) const { return x.at(static_cast<std::size_t>(v)); }
};

enum class Backend { primal_dual, barrier };

struct SolveOptions {
  double tol = 1e-9;
  int max_iters = 400;
  Backend backend = Backend::primal_dual;
};

SolveReport solve(const ConvexProgram& prog, const SolveOptions& opts = {});

}  // namespace uavnet::cvx
