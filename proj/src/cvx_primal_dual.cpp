// Long-step path-following method for the canonical conic form.
//
// Primal iterates stay strictly inside K and follow the central path of
// t c'x + F(h - Gx) with damped Newton steps; t grows once the Newton
// decrement is small. Every Newton step also yields a dual point satisfying
// c + G'z + A'y = 0; when it lies inside K* its gap s'z certifies optimality.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "cvx_internal.hpp"

namespace uavnet::cvx::detail {

namespace {

struct PdState {
  Eigen::VectorXd x, y, z;
  int iterations = 0;
  bool converged = false;
  bool stalled = false;
};

PdState run(const Canonical& prob, Eigen::VectorXd x, double tol, int& budget,
            const std::function<bool(const Eigen::VectorXd&)>& stop_early) {
  PdState st;
  const double nu = prob.degree;
  const Eigen::VectorXd zero_p = Eigen::VectorXd::Zero(prob.p());
  constexpr double kGrow = 50.0;
  constexpr double kCentred = 0.25;  // lambda^2 below which t is raised

  Eigen::VectorXd s = prob.slack(x);
  KktSystem kkt(prob);
  double t = 1.0;
  {
    // t minimizing the Newton decrement: lambda^2(t) = t^2 c'u - 2 t c'v + const
    Eigen::VectorXd u, v, w;
    if (kkt.factor(s) && kkt.solve(prob.c, zero_p, u, w) &&
        kkt.solve(prob.gt_mul(barrier_gradient(prob, s)), zero_p, v, w)) {
      const double cu = prob.c.dot(u), cv = prob.c.dot(v);
      if (cu > 0.0 && cv > 0.0) t = std::clamp(cv / cu, 1e-8, 1e8);
    }
  }
  st.z = -barrier_gradient(prob, s) / t;
  st.y = Eigen::VectorXd::Zero(prob.p());

  while (budget > 0) {
    --budget;
    ++st.iterations;
    const Eigen::VectorXd grad_f = barrier_gradient(prob, s);
    const Eigen::VectorXd g = t * prob.c - prob.gt_mul(grad_f);
    Eigen::VectorXd dx, w;
    if (!kkt.factor(s) || !kkt.solve(-g, zero_p, dx, w)) {
      st.stalled = true;
      break;
    }
    const double lam2 = std::max(0.0, -g.dot(dx));
    const Eigen::VectorXd ds = -prob.g_mul(dx);
    // the Newton step gives a dual point with c + G'z + A'y = 0
    const Eigen::VectorXd z = -(grad_f + barrier_hess_mul(prob, s, ds)) / t;
    if (dual_interior(prob, z)) {
      st.z = z;
      st.y = w / t;
      if (s.dot(z) <= tol * std::max(1.0, std::abs(prob.c.dot(x)))) {
        st.converged = true;
        break;
      }
    }

    if (lam2 <= kCentred) {
      // inside the Dikin ellipsoid in exact arithmetic; round-off can still leave the cone
      double alpha = 1.0;
      while (alpha > 1e-3 && !primal_interior(prob, s + alpha * ds)) alpha *= 0.5;
      if (alpha <= 1e-3) {
        st.stalled = true;
        break;
      }
      x += alpha * dx;
      t *= kGrow;
      if (t * nu > 1e18) {
        st.stalled = true;
        break;
      }
    } else {
      const double f0 = t * prob.c.dot(x) + barrier_value(prob, s);
      const double lin = t * prob.c.dot(dx);
      const double floor = 1.0 / (1.0 + std::sqrt(lam2));
      double alpha = 1.0;
      for (; alpha > floor; alpha *= 0.5) {
        const double f1 = t * prob.c.dot(x) + alpha * lin + barrier_value(prob, s + alpha * ds);
        if (std::isfinite(f1) && f1 - f0 <= -0.25 * alpha * lam2) break;
      }
      // 1 / (1 + lambda) always decreases a self-concordant barrier
      alpha = std::max(alpha, floor);
      while (alpha > 1e-12 && !primal_interior(prob, s + alpha * ds)) alpha *= 0.5;
      if (alpha <= 1e-12) {
        st.stalled = true;
        break;
      }
      x += alpha * dx;
    }
    s = prob.slack(x);
    if (stop_early && stop_early(x)) break;
  }
  st.x = std::move(x);
  return st;
}

}  // namespace

SolveReport solve_primal_dual(const Canonical& prob, const SolveOptions& opts) {
  SolveReport rep;
  int budget = opts.max_iters;
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
    PdState ph = run(q, xa, 1e-10, budget, [si](const Eigen::VectorXd& v) { return v[si] < 0.0; });
    rep.iterations += ph.iterations;
    if (!(ph.x[si] < 0.0)) {
      rep.status = ph.converged ? Status::infeasible : Status::max_iters;
      rep.certificate.resize(static_cast<std::size_t>(prob.m()));
      for (int r = 0; r < prob.m(); ++r) {
        const int src = r < prob.num_nonneg ? r : r + 1;
        rep.certificate[static_cast<std::size_t>(r)] = ph.z[src];
      }
      x = ph.x.head(prob.n);
      rep.x.assign(x.data(), x.data() + x.size());
      rep.objective_value = prob.c.dot(x);
      return rep;
    }
    x = ph.x.head(prob.n);
  }

  PdState st = run(prob, x, opts.tol, budget, nullptr);
  rep.iterations += st.iterations;
  const Eigen::VectorXd s = prob.slack(st.x);
  rep.status = st.converged ? Status::optimal : Status::max_iters;
  rep.x.assign(st.x.data(), st.x.data() + st.x.size());
  rep.objective_value = prob.c.dot(st.x);
  rep.gap = s.dot(st.z);
  rep.primal_residual = std::max(prob.p() > 0 ? (prob.a_mul(st.x) - prob.b).lpNorm<Eigen::Infinity>() : 0.0,
                                 cone_violation(prob, s));
  Eigen::VectorXd rd = prob.c + prob.gt_mul(st.z);
  if (prob.p() > 0) rd += prob.at_mul(st.y);
  rep.dual_residual = rd.lpNorm<Eigen::Infinity>();
  return rep;
}

}  // namespace uavnet::cvx::detail
