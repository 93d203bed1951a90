#include "uavnet/cvx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "cvx_internal.hpp"

namespace uavnet::cvx {

Affine& Affine::operator+=(const Affine& o) {
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  constant += o.constant;
  return *this;
}

Affine& Affine::operator-=(const Affine& o) {
  for (const auto& t : o.terms) terms.push_back({t.var, -t.coef});
  constant -= o.constant;
  return *this;
}

Affine& Affine::operator*=(double s) {
  for (auto& t : terms) t.coef *= s;
  constant *= s;
  return *this;
}

double Affine::eval(const std::vector<double>& x) const {
  double v = constant;
  for (const auto& t : terms) v += t.coef * x.at(static_cast<std::size_t>(t.var));
  return v;
}

VarId ConvexProgram::add_variable(std::string name) {
  names_.push_back(std::move(name));
  return static_cast<VarId>(names_.size() - 1);
}

void ConvexProgram::check(const Affine& a) const {
  for (const auto& t : a.terms) {
    if (t.var < 0 || t.var >= num_variables())
      throw std::invalid_argument("constraint references undeclared variable " + std::to_string(t.var));
    if (!std::isfinite(t.coef)) throw std::invalid_argument("non-finite coefficient");
  }
  if (!std::isfinite(a.constant)) throw std::invalid_argument("non-finite constant");
}

void ConvexProgram::maximize(Affine objective) {
  check(objective);
  objective_ = std::move(objective);
}

void ConvexProgram::add_equality(Affine expr, std::string label) {
  check(expr);
  (void)label;
  equalities_.push_back(std::move(expr));
}

void ConvexProgram::add_less_equal(Affine expr, std::string label) {
  check(expr);
  constraints_.push_back({ConeKind::nonneg, {-expr}, std::move(label)});
}

void ConvexProgram::add_bounds(VarId v, double lo, double hi, std::string label) {
  if (std::isfinite(lo)) add_less_equal(Affine(lo) - Affine::var(v), label);
  if (std::isfinite(hi)) add_less_equal(Affine::var(v) - Affine(hi), label);
}

void ConvexProgram::add_soc(Affine t, std::vector<Affine> xs, std::string label) {
  check(t);
  for (const auto& x : xs) check(x);
  Constraint c{ConeKind::soc, {}, std::move(label)};
  c.rows.reserve(xs.size() + 1);
  c.rows.push_back(std::move(t));
  for (auto& x : xs) c.rows.push_back(std::move(x));
  constraints_.push_back(std::move(c));
}

void ConvexProgram::add_rotated_soc(Affine a, Affine b, std::vector<Affine> xs, std::string label) {
  // ||x||^2 <= 2ab  <=>  ||(sqrt2 x, a - b)|| <= a + b
  std::vector<Affine> rows;
  rows.reserve(xs.size() + 1);
  for (auto& x : xs) rows.push_back(std::sqrt(2.0) * std::move(x));
  rows.push_back(a - b);
  add_soc(a + b, std::move(rows), std::move(label));
}

void ConvexProgram::add_exp_cone(Affine u, Affine v, Affine w, std::string label) {
  check(u);
  check(v);
  check(w);
  constraints_.push_back({ConeKind::exp, {std::move(u), std::move(v), std::move(w)}, std::move(label)});
}

double ConvexProgram::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (const auto& e : equalities_) worst = std::max(worst, std::abs(e.eval(x)));
  for (const auto& c : constraints_) {
    std::vector<double> r;
    r.reserve(c.rows.size());
    for (const auto& row : c.rows) r.push_back(row.eval(x));
    switch (c.kind) {
      case ConeKind::nonneg:
        worst = std::max(worst, -r[0]);
        break;
      case ConeKind::soc: {
        double s = 0.0;
        for (std::size_t i = 1; i < r.size(); ++i) s += r[i] * r[i];
        worst = std::max(worst, std::sqrt(s) - r[0]);
        break;
      }
      case ConeKind::exp: {
        const double u = r[0], v = r[1], w = r[2];
        if (v > 0.0)
          worst = std::max(worst, v * std::exp(u / v) - w);
        else
          worst = std::max({worst, -v, u, -w});
        break;
      }
    }
  }
  return std::max(worst, 0.0);
}

namespace {

void print_affine(std::ostream& os, const ConvexProgram& p, const Affine& a) {
  bool first = true;
  for (const auto& t : a.terms) {
    os << (first ? "" : " + ") << t.coef << "*" << p.name(t.var);
    first = false;
  }
  if (first || a.constant != 0.0) os << (first ? "" : " + ") << a.constant;
}

}  // namespace

std::string ConvexProgram::dump() const {
  std::ostringstream os;
  os.precision(17);
  os << "variables " << num_variables() << "\n";
  for (int i = 0; i < num_variables(); ++i) os << "var " << i << " " << names_[i] << "\n";
  os << "maximize ";
  print_affine(os, *this, objective_);
  os << "\n";
  for (const auto& e : equalities_) {
    os << "eq ";
    print_affine(os, *this, e);
    os << " == 0\n";
  }
  for (const auto& c : constraints_) {
    switch (c.kind) {
      case ConeKind::nonneg: os << "nonneg"; break;
      case ConeKind::soc: os << "soc"; break;
      case ConeKind::exp: os << "exp"; break;
    }
    if (!c.label.empty()) os << " [" << c.label << "]";
    for (const auto& r : c.rows) {
      os << " | ";
      print_affine(os, *this, r);
    }
    os << "\n";
  }
  return os.str();
}

const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::max_iters: return "max_iters";
  }
  return "unknown";
}

namespace detail {

namespace {

SparseRow to_row(const Affine& a, double sign) {
  std::map<int, double> merged;
  for (const auto& t : a.terms) merged[t.var] += sign * t.coef;
  SparseRow r;
  for (auto [c, v] : merged) {
    if (v == 0.0) continue;
    r.cols.push_back(c);
    r.vals.push_back(v);
  }
  return r;
}

}  // namespace

Canonical canonicalize(const ConvexProgram& prog) {
  Canonical p;
  p.n = prog.num_variables();
  p.c = Eigen::VectorXd::Zero(p.n);
  for (const auto& t : prog.objective().terms) p.c[t.var] -= t.coef;

  p.b.resize(static_cast<Eigen::Index>(prog.equalities().size()));
  for (std::size_t i = 0; i < prog.equalities().size(); ++i) {
    p.a_rows.push_back(to_row(prog.equalities()[i], 1.0));
    p.b[static_cast<Eigen::Index>(i)] = -prog.equalities()[i].constant;
  }

  std::vector<double> h;
  auto emit = [&](const Affine& a) {
    p.g_rows.push_back(to_row(a, -1.0));
    h.push_back(a.constant);
  };
  for (const auto& c : prog.constraints())
    if (c.kind == ConeKind::nonneg) emit(c.rows[0]);
  p.num_nonneg = static_cast<int>(h.size());
  if (p.num_nonneg > 0) p.blocks.push_back({ConeKind::nonneg, 0, p.num_nonneg, {}, {}, {}});
  for (ConeKind kind : {ConeKind::soc, ConeKind::exp}) {
    for (const auto& c : prog.constraints()) {
      if (c.kind != kind) continue;
      Block blk{kind, static_cast<int>(h.size()), static_cast<int>(c.rows.size()), {}, {}, {}};
      for (const auto& r : c.rows) emit(r);
      p.blocks.push_back(std::move(blk));
    }
  }
  p.h = Eigen::Map<Eigen::VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()));
  p.finalize_blocks();
  return p;
}

void Canonical::finalize_blocks() {
  degree = 0.0;
  for (auto& blk : blocks) {
    switch (blk.kind) {
      case ConeKind::nonneg: degree += blk.dim; break;
      case ConeKind::soc: degree += 2.0; break;
      case ConeKind::exp: degree += 3.0; break;
    }
    if (blk.kind == ConeKind::nonneg) continue;
    std::vector<int> cols;
    for (int r = blk.offset; r < blk.offset + blk.dim; ++r)
      cols.insert(cols.end(), g_rows[r].cols.begin(), g_rows[r].cols.end());
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    blk.cols = cols;
    blk.gsub = Eigen::MatrixXd::Zero(blk.dim, static_cast<Eigen::Index>(cols.size()));
    for (int r = 0; r < blk.dim; ++r) {
      const auto& row = g_rows[blk.offset + r];
      for (std::size_t k = 0; k < row.cols.size(); ++k) {
        const auto pos = std::lower_bound(cols.begin(), cols.end(), row.cols[k]) - cols.begin();
        blk.gsub(r, pos) += row.vals[k];
      }
    }
    if (blk.kind == ConeKind::soc) {
      Eigen::MatrixXd dg = blk.gsub;
      dg.row(0) *= -1.0;
      blk.gdg = blk.gsub.transpose() * dg;
    }
  }
}

Eigen::VectorXd Canonical::g_mul(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(m());
  for (int r = 0; r < m(); ++r) {
    double v = 0.0;
    const auto& row = g_rows[r];
    for (std::size_t k = 0; k < row.cols.size(); ++k) v += row.vals[k] * x[row.cols[k]];
    out[r] = v;
  }
  return out;
}

Eigen::VectorXd Canonical::slack(const Eigen::VectorXd& x) const { return h - g_mul(x); }

Eigen::VectorXd Canonical::gt_mul(const Eigen::VectorXd& z) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < m(); ++r) {
    const auto& row = g_rows[r];
    for (std::size_t k = 0; k < row.cols.size(); ++k) out[row.cols[k]] += row.vals[k] * z[r];
  }
  return out;
}

Eigen::VectorXd Canonical::a_mul(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(p());
  for (int r = 0; r < p(); ++r) {
    double v = 0.0;
    const auto& row = a_rows[r];
    for (std::size_t k = 0; k < row.cols.size(); ++k) v += row.vals[k] * x[row.cols[k]];
    out[r] = v;
  }
  return out;
}

Eigen::VectorXd Canonical::at_mul(const Eigen::VectorXd& y) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < p(); ++r) {
    const auto& row = a_rows[r];
    for (std::size_t k = 0; k < row.cols.size(); ++k) out[row.cols[k]] += row.vals[k] * y[r];
  }
  return out;
}

Eigen::VectorXd interior_direction(const Canonical& prob) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(prob.m());
  for (const auto& blk : prob.blocks) {
    switch (blk.kind) {
      case ConeKind::nonneg: e.segment(blk.offset, blk.dim).setOnes(); break;
      case ConeKind::soc: e[blk.offset] = 1.0; break;
      case ConeKind::exp:
        e[blk.offset] = -1.0;
        e[blk.offset + 1] = 1.0;
        e[blk.offset + 2] = 1.0;
        break;
    }
  }
  return e;
}

Canonical phase_one(const Canonical& prob, double radius) {
  Canonical q = prob;
  const int sigma = prob.n;
  q.n = prob.n + 1;
  q.c = Eigen::VectorXd::Zero(q.n);
  q.c[sigma] = 1.0;
  const Eigen::VectorXd e = interior_direction(prob);
  for (int r = 0; r < prob.m(); ++r) {
    if (e[r] == 0.0) continue;
    q.g_rows[r].cols.push_back(sigma);
    q.g_rows[r].vals.push_back(-e[r]);
  }
  // sigma + 1 >= 0 joins the orthant block (row inserted at the block end).
  SparseRow lb;
  lb.cols.push_back(sigma);
  lb.vals.push_back(-1.0);
  q.g_rows.insert(q.g_rows.begin() + prob.num_nonneg, lb);
  Eigen::VectorXd h(prob.m() + 1);
  h.head(prob.num_nonneg) = prob.h.head(prob.num_nonneg);
  h[prob.num_nonneg] = 1.0;
  h.tail(prob.m() - prob.num_nonneg) = prob.h.tail(prob.m() - prob.num_nonneg);
  q.h = h;
  q.num_nonneg = prob.num_nonneg + 1;
  q.blocks.clear();
  q.blocks.push_back({ConeKind::nonneg, 0, q.num_nonneg, {}, {}, {}});
  for (const auto& blk : prob.blocks) {
    if (blk.kind == ConeKind::nonneg) continue;
    q.blocks.push_back({blk.kind, blk.offset + 1, blk.dim, {}, {}, {}});
  }
  // ||x|| <= radius keeps the search bounded when the feasible set is not
  const int off = q.m();
  q.g_rows.emplace_back();
  for (int i = 0; i < prob.n; ++i) q.g_rows.push_back({{i}, {-1.0}});
  Eigen::VectorXd hb = Eigen::VectorXd::Zero(off + prob.n + 1);
  hb.head(off) = q.h;
  hb[off] = radius;
  q.h = hb;
  q.blocks.push_back({ConeKind::soc, off, prob.n + 1, {}, {}, {}});
  q.finalize_blocks();
  return q;
}

namespace {

bool soc_interior(const double* s, int dim) {
  double x2 = 0.0;
  for (int i = 1; i < dim; ++i) x2 += s[i] * s[i];
  return s[0] > 0.0 && s[0] * s[0] - x2 > 0.0;
}

bool exp_interior(const double* s) {
  const double u = s[0], v = s[1], w = s[2];
  if (!(v > 0.0 && w > 0.0)) return false;
  return v * std::log(w / v) - u > 0.0;
}

bool exp_dual_interior(const double* z) {
  const double u = z[0], v = z[1], w = z[2];
  if (!(u < 0.0 && w > 0.0)) return false;
  return std::log(-u) + v / u < 1.0 + std::log(w);
}

}  // namespace

bool primal_interior(const Canonical& prob, const Eigen::VectorXd& s) {
  for (const auto& blk : prob.blocks) {
    const double* p = s.data() + blk.offset;
    switch (blk.kind) {
      case ConeKind::nonneg:
        for (int i = 0; i < blk.dim; ++i)
          if (!(p[i] > 0.0)) return false;
        break;
      case ConeKind::soc:
        if (!soc_interior(p, blk.dim)) return false;
        break;
      case ConeKind::exp:
        if (!exp_interior(p)) return false;
        break;
    }
  }
  return true;
}

bool dual_interior(const Canonical& prob, const Eigen::VectorXd& z) {
  for (const auto& blk : prob.blocks) {
    const double* p = z.data() + blk.offset;
    switch (blk.kind) {
      case ConeKind::nonneg:
        for (int i = 0; i < blk.dim; ++i)
          if (!(p[i] > 0.0)) return false;
        break;
      case ConeKind::soc:
        if (!soc_interior(p, blk.dim)) return false;
        break;
      case ConeKind::exp:
        if (!exp_dual_interior(p)) return false;
        break;
    }
  }
  return true;
}

double barrier_value(const Canonical& prob, const Eigen::VectorXd& s) {
  if (!primal_interior(prob, s)) return std::numeric_limits<double>::infinity();
  double f = 0.0;
  for (const auto& blk : prob.blocks) {
    const double* p = s.data() + blk.offset;
    switch (blk.kind) {
      case ConeKind::nonneg:
        for (int i = 0; i < blk.dim; ++i) f -= std::log(p[i]);
        break;
      case ConeKind::soc: {
        double x2 = 0.0;
        for (int i = 1; i < blk.dim; ++i) x2 += p[i] * p[i];
        f -= std::log(p[0] * p[0] - x2);
        break;
      }
      case ConeKind::exp: {
        const double u = p[0], v = p[1], w = p[2];
        f -= std::log(v * std::log(w / v) - u) + std::log(v) + std::log(w);
        break;
      }
    }
  }
  return f;
}

namespace {

void exp_derivatives(const double* p, Eigen::Vector3d& grad, Eigen::Matrix3d* hess) {
  const double u = p[0], v = p[1], w = p[2];
  const double lg = std::log(w / v);
  const double psi = v * lg - u;
  const Eigen::Vector3d dpsi(-1.0, lg - 1.0, v / w);
  grad = -dpsi / psi;
  grad[1] -= 1.0 / v;
  grad[2] -= 1.0 / w;
  if (hess) {
    Eigen::Matrix3d d2 = Eigen::Matrix3d::Zero();
    d2(1, 1) = -1.0 / v;
    d2(1, 2) = d2(2, 1) = 1.0 / w;
    d2(2, 2) = -v / (w * w);
    *hess = -d2 / psi + dpsi * dpsi.transpose() / (psi * psi);
    (*hess)(1, 1) += 1.0 / (v * v);
    (*hess)(2, 2) += 1.0 / (w * w);
  }
}

void soc_derivatives(const double* p, int dim, Eigen::VectorXd& grad, Eigen::MatrixXd* hess) {
  double x2 = 0.0;
  for (int i = 1; i < dim; ++i) x2 += p[i] * p[i];
  const double d = p[0] * p[0] - x2;
  grad.resize(dim);
  grad[0] = -2.0 * p[0] / d;
  for (int i = 1; i < dim; ++i) grad[i] = 2.0 * p[i] / d;
  if (hess) {
    *hess = grad * grad.transpose();
    (*hess)(0, 0) -= 2.0 / d;
    for (int i = 1; i < dim; ++i) (*hess)(i, i) += 2.0 / d;
  }
}

}  // namespace

Eigen::VectorXd barrier_gradient(const Canonical& prob, const Eigen::VectorXd& s) {
  Eigen::VectorXd g(prob.m());
  for (const auto& blk : prob.blocks) {
    const double* p = s.data() + blk.offset;
    switch (blk.kind) {
      case ConeKind::nonneg:
        for (int i = 0; i < blk.dim; ++i) g[blk.offset + i] = -1.0 / p[i];
        break;
      case ConeKind::soc: {
        Eigen::VectorXd gb;
        soc_derivatives(p, blk.dim, gb, nullptr);
        g.segment(blk.offset, blk.dim) = gb;
        break;
      }
      case ConeKind::exp: {
        Eigen::Vector3d gb;
        exp_derivatives(p, gb, nullptr);
        g.segment<3>(blk.offset) = gb;
        break;
      }
    }
  }
  return g;
}

Eigen::MatrixXd reduced_hessian(const Canonical& prob, const Eigen::VectorXd& s) {
  Eigen::MatrixXd hx = Eigen::MatrixXd::Zero(prob.n, prob.n);
  for (const auto& blk : prob.blocks) {
    const double* p = s.data() + blk.offset;
    if (blk.kind == ConeKind::nonneg) {
      for (int i = 0; i < blk.dim; ++i) {
        const auto& row = prob.g_rows[blk.offset + i];
        const double w = 1.0 / (p[i] * p[i]);
        for (std::size_t a = 0; a < row.cols.size(); ++a)
          for (std::size_t b = 0; b < row.cols.size(); ++b)
            hx(row.cols[a], row.cols[b]) += w * row.vals[a] * row.vals[b];
      }
      continue;
    }
    Eigen::MatrixXd hb;
    if (blk.kind == ConeKind::soc) {
      Eigen::VectorXd gb;
      soc_derivatives(p, blk.dim, gb, &hb);
    } else {
      Eigen::Vector3d gb;
      Eigen::Matrix3d h3;
      exp_derivatives(p, gb, &h3);
      hb = h3;
    }
    const Eigen::MatrixXd local = blk.gsub.transpose() * hb * blk.gsub;
    for (std::size_t a = 0; a < blk.cols.size(); ++a)
      for (std::size_t b = 0; b < blk.cols.size(); ++b)
        hx(blk.cols[a], blk.cols[b]) += local(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  }
  return hx;
}

double cone_violation(const Canonical& prob, const Eigen::VectorXd& s) {
  double worst = 0.0;
  for (const auto& blk : prob.blocks) {
    const double* p = s.data() + blk.offset;
    switch (blk.kind) {
      case ConeKind::nonneg:
        for (int i = 0; i < blk.dim; ++i) worst = std::max(worst, -p[i]);
        break;
      case ConeKind::soc: {
        double x2 = 0.0;
        for (int i = 1; i < blk.dim; ++i) x2 += p[i] * p[i];
        worst = std::max(worst, std::sqrt(x2) - p[0]);
        break;
      }
      case ConeKind::exp: {
        const double u = p[0], v = p[1], w = p[2];
        if (v > 0.0)
          worst = std::max(worst, v * std::exp(u / v) - w);
        else
          worst = std::max({worst, -v, u, -w});
        break;
      }
    }
  }
  return worst;
}

namespace {

Eigen::MatrixXd dense_a(const Canonical& prob) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(prob.p(), prob.n);
  for (int r = 0; r < prob.p(); ++r) {
    const auto& row = prob.a_rows[r];
    for (std::size_t k = 0; k < row.cols.size(); ++k) a(r, row.cols[k]) += row.vals[k];
  }
  return a;
}

}  // namespace

bool solve_kkt(const Canonical& prob, const Eigen::MatrixXd& hess, const Eigen::VectorXd& r1,
               const Eigen::VectorXd& r2, Eigen::VectorXd& dx, Eigen::VectorXd& dy) {
  const int n = prob.n;
  const int p = prob.p();
  const double scale = std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
  Eigen::MatrixXd a = p > 0 ? dense_a(prob) : Eigen::MatrixXd(0, n);

  double reg = 1e-13 * scale;
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (int attempt = 0; attempt < 8; ++attempt) {
    llt.compute(hess + reg * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) break;
    reg *= 100.0;
  }
  if (llt.info() != Eigen::Success) return false;

  Eigen::LDLT<Eigen::MatrixXd> schur;
  Eigen::MatrixXd hinv_at;
  if (p > 0) {
    hinv_at = llt.solve(a.transpose());
    Eigen::MatrixXd s = a * hinv_at;
    s.diagonal().array() += 1e-14 * std::max(1.0, s.diagonal().cwiseAbs().maxCoeff());
    schur.compute(s);
    if (schur.info() != Eigen::Success) return false;
  }

  auto apply = [&](const Eigen::VectorXd& q1, const Eigen::VectorXd& q2, Eigen::VectorXd& x,
                   Eigen::VectorXd& y) {
    const Eigen::VectorXd hq = llt.solve(q1);
    if (p > 0) {
      y = schur.solve(a * hq - q2);
      x = hq - hinv_at * y;
    } else {
      y.resize(0);
      x = hq;
    }
  };

  apply(r1, r2, dx, dy);
  for (int it = 0; it < 2; ++it) {
    Eigen::VectorXd e1 = r1 - hess * dx;
    if (p > 0) e1 -= a.transpose() * dy;
    Eigen::VectorXd e2 = p > 0 ? Eigen::VectorXd(r2 - a * dx) : Eigen::VectorXd(0);
    Eigen::VectorXd cx, cy;
    apply(e1, e2, cx, cy);
    dx += cx;
    if (p > 0) dy += cy;
  }
  return dx.allFinite() && (p == 0 || dy.allFinite());
}

bool equality_point(const Canonical& prob, Eigen::VectorXd& x) {
  x = Eigen::VectorXd::Zero(prob.n);
  if (prob.p() == 0) return true;
  const Eigen::MatrixXd a = dense_a(prob);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  x = cod.solve(prob.b);
  const double res = (a * x - prob.b).norm();
  return res <= 1e-9 * std::max(1.0, prob.b.norm());
}

}  // namespace detail

SolveReport solve(const ConvexProgram& prog, const SolveOptions& opts) {
  const detail::Canonical canon = detail::canonicalize(prog);
  SolveReport rep = opts.backend == Backend::barrier ? detail::solve_barrier(canon, opts)
                                                     : detail::solve_primal_dual(canon, opts);
  rep.objective_value = -rep.objective_value;
  return rep;
}

}  // namespace uavnet::cvx
