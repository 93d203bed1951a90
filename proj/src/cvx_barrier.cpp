// Dense primal log-barrier method (sequential unconstrained minimization with
// equality-constrained Newton centering). Slow and simple; used as the
// reference backend.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "cvx_internal.hpp"

namespace uavnet::cvx::detail {

namespace {

struct Centering {
  bool ok = true;
  Eigen::VectorXd y;  // equality multipliers scaled by 1/t
};

Centering center(const Canonical& prob, Eigen::VectorXd& x, double t, int& budget,
                 const std::function<bool(const Eigen::VectorXd&)>& stop_early) {
  Centering out;
  out.y = Eigen::VectorXd::Zero(prob.p());
  const Eigen::VectorXd zero_p = Eigen::VectorXd::Zero(prob.p());
  for (int step = 0; step < 100; ++step) {
    if (budget-- <= 0) {
      out.ok = false;
      return out;
    }
    const Eigen::VectorXd s = prob.slack(x);
    const Eigen::VectorXd grad = t * prob.c - prob.gt_mul(barrier_gradient(prob, s));
    const Eigen::MatrixXd hess = reduced_hessian(prob, s);
    Eigen::VectorXd dx, w;
    if (!solve_kkt(prob, hess, -grad, zero_p, dx, w)) {
      out.ok = false;
      return out;
    }
    out.y = w / t;
    const double lambda2 = -grad.dot(dx);
    if (lambda2 <= 2e-12) return out;

    const double f0 = barrier_value(prob, s);
    const double lin = t * prob.c.dot(dx);
    const Eigen::VectorXd gdx = prob.g_mul(dx);
    double alpha = 1.0;
    while (alpha > 1e-14) {
      const Eigen::VectorXd s_new = s - alpha * gdx;
      const double f1 = barrier_value(prob, s_new);
      if (std::isfinite(f1) && alpha * lin + (f1 - f0) <= -0.25 * alpha * lambda2) break;
      alpha *= 0.5;
    }
    if (alpha <= 1e-14) return out;  // no further progress at this precision
    x += alpha * dx;
    if (stop_early && stop_early(x)) return out;
  }
  return out;
}

}  // namespace

SolveReport solve_barrier(const Canonical& prob, const SolveOptions& opts) {
  SolveReport rep;
  int budget = opts.max_iters;
  constexpr double kMu = 10.0;

  Eigen::VectorXd x;
  if (!equality_point(prob, x)) {
    rep.status = Status::infeasible;
    rep.x.assign(x.data(), x.data() + x.size());
    return rep;
  }

  if (!primal_interior(prob, prob.slack(x))) {
    const Canonical q = phase_one(prob, std::max(1e4, 10.0 * x.norm()));
    const Eigen::VectorXd s0 = prob.slack(x);
    const Eigen::VectorXd e = interior_direction(prob);
    double sigma = 1.0;
    while (!primal_interior(prob, s0 + sigma * e)) sigma *= 2.0;
    Eigen::VectorXd xa(q.n);
    xa.head(prob.n) = x;
    xa[prob.n] = sigma;
    const int si = prob.n;
    auto feasible = [si](const Eigen::VectorXd& v) { return v[si] < 0.0; };
    double t = 1.0;
    bool found = false;
    Centering last;
    while (budget > 0) {
      last = center(q, xa, t, budget, feasible);
      if (feasible(xa)) {
        found = true;
        break;
      }
      if (q.degree / t < opts.tol) break;
      t *= kMu;
    }
    if (!found) {
      rep.status = budget > 0 ? Status::infeasible : Status::max_iters;
      rep.iterations = opts.max_iters - budget;
      const Eigen::VectorXd za = -barrier_gradient(q, q.slack(xa)) / t;
      rep.certificate.resize(static_cast<std::size_t>(prob.m()));
      for (int r = 0; r < prob.m(); ++r) {
        const int src = r < prob.num_nonneg ? r : r + 1;
        rep.certificate[static_cast<std::size_t>(r)] = za[src];
      }
      x = xa.head(prob.n);
      rep.x.assign(x.data(), x.data() + x.size());
      rep.objective_value = prob.c.dot(x);
      return rep;
    }
    x = xa.head(prob.n);
  }

  double t = 1.0;
  Centering last;
  bool converged = false;
  while (budget > 0) {
    last = center(prob, x, t, budget, nullptr);
    const double gap = prob.degree / t;
    if (gap <= opts.tol * std::max(1.0, std::abs(prob.c.dot(x)))) {
      converged = last.ok;
      break;
    }
    if (!last.ok) break;
    t *= kMu;
  }

  const Eigen::VectorXd s = prob.slack(x);
  const Eigen::VectorXd z = -barrier_gradient(prob, s) / t;
  rep.status = converged ? Status::optimal : Status::max_iters;
  rep.iterations = opts.max_iters - budget;
  rep.x.assign(x.data(), x.data() + x.size());
  rep.objective_value = prob.c.dot(x);
  rep.gap = prob.degree / t;
  rep.primal_residual =
      std::max(prob.p() > 0 ? (prob.a_mul(x) - prob.b).lpNorm<Eigen::Infinity>() : 0.0, cone_violation(prob, s));
  Eigen::VectorXd rd = prob.c + prob.gt_mul(z);
  if (prob.p() > 0) rd += prob.at_mul(last.y);
  rep.dual_residual = rd.lpNorm<Eigen::Infinity>();
  return rep;
}

}  // namespace uavnet::cvx::detail
