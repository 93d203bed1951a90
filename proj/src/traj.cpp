#include "uavnet/traj.hpp"

#include <algorithm>
#include <cmath>

#include "uavnet/cvx.hpp"

namespace uavnet {

namespace {

constexpr double kLen = 10.0;   // solver length unit, m
constexpr double kRate = 1e6;   // solver rate unit, bit/s

Vec2 clamp_box(const ScenarioConfig& cfg, Vec2 p) { return {cfg.area_x.clamp(p.x), cfg.area_y.clamp(p.y)}; }

Vec2 into_disc(Vec2 p, Vec2 c, double r) {
  const double d = norm(p - c);
  if (d <= r) return p;
  if (r <= 0.0) return c;
  return c + (r / d) * (p - c);
}

bool in_box(const ScenarioConfig& cfg, Vec2 p) { return cfg.area_x.contains(p.x) && cfg.area_y.contains(p.y); }

}  // namespace

double TaylorExpansion::value(double u) const { return c2 > 0.0 ? std::log2(1.0 + c2 / u) : 0.0; }

double TaylorExpansion::surrogate(double u) const { return f0 + grad * (u - c1); }

TaylorExpansion expand(const ScenarioConfig& cfg, const UavPose& pose, Vec2 user, double h_norm_sq, double b,
                       double p) {
  TaylorExpansion e;
  const LinkGeometry g = geometry(pose, user);
  e.c1 = g.dist_3d * g.dist_3d;
  e.regime = regime_for(g.elevation_deg, cfg);
  if (b <= 0.0 || p <= 0.0) return e;
  const double k = free_space_factor(1.0, cfg.carrier_freq);
  e.c2 = p * h_norm_sq / (eta_for(e.regime, cfg) * k * b * cfg.noise_psd);
  e.f0 = std::log2(1.0 + e.c2 / e.c1);
  e.grad = -e.c2 / (std::log(2.0) * e.c1 * (e.c1 + e.c2));
  return e;
}

Grid<TaylorExpansion> taylor_bound(const ScenarioConfig& cfg, const ClusterView& view, const Trajectory& traj0,
                                   const AssociationMatrix& assoc, const AllocationTable& alloc) {
  Grid<TaylorExpansion> out(view.size(), view.slots());
  for (int n = 0; n < view.size(); ++n)
    for (int t = 0; t < view.slots(); ++t) {
      const bool on = assoc(n, t) != 0;
      out(n, t) = expand(cfg, traj0.poses[t], view.positions(n, t), view.fading(n, t), on ? alloc.b(n, t) : 0.0,
                         on ? alloc.p(n, t) : 0.0);
    }
  return out;
}

Trajectory circle_trajectory(const ScenarioConfig& cfg, Vec2 centre, double rho_u, int slots) {
  Trajectory tr;
  const double z = 0.5 * (cfg.altitude.lo + cfg.altitude.hi);
  const double rho_max = cfg.s_xy_max * slots / (2.0 * kPi);
  double rho = std::min(rho_max, rho_u / 2.0);
  if (slots < 2 || 2.0 * rho * std::sin(kPi / (slots - 1)) > cfg.s_xy_max) rho = 0.0;
  for (int t = 0; t < slots; ++t) {
    const double th = slots > 1 ? 2.0 * kPi * t / (slots - 1) : 0.0;
    tr.poses.push_back({clamp_box(cfg, centre + rho * Vec2{std::cos(th), std::sin(th)}), z});
  }
  // clamping can only shorten chords of a circle inside a convex box
  return tr;
}

Trajectory project_flight(const ScenarioConfig& cfg, const std::vector<UavPose>& targets, const FlightLimits& lim) {
  Trajectory tr;
  const int n = static_cast<int>(targets.size());
  UavPose prev = lim.prev;
  for (int t = 0; t < n; ++t) {
    const double rem = n - 1 - t;
    const double r_ret = cfg.s_xy_max * rem;
    Vec2 p = targets[t].xy;
    auto ok = [&](Vec2 q) {
      const double tol = 1e-9;
      if (!in_box(cfg, q) || norm(q - prev.xy) > cfg.s_xy_max + tol) return false;
      return !lim.has_closure || norm(q - lim.closure.xy) <= r_ret + tol;
    };
    for (int k = 0; k < 200 && !ok(p); ++k) {
      p = into_disc(clamp_box(cfg, p), prev.xy, cfg.s_xy_max);
      if (lim.has_closure) p = into_disc(p, lim.closure.xy, r_ret);
    }
    if (!ok(p)) {
      if (!lim.has_closure) throw InfeasibleError("flight: no reachable position in slot " + std::to_string(t));
      const Vec2 d = lim.closure.xy - prev.xy;
      const double len = norm(d);
      if (len > cfg.s_xy_max * (rem + 1) + 1e-7)
        throw InfeasibleError("flight: return pose out of reach in slot " + std::to_string(t));
      p = len > 0.0 ? prev.xy + (std::min(cfg.s_xy_max, len) / len) * d : prev.xy;
    }
    if (lim.has_closure && rem == 0) p = lim.closure.xy;

    double h = targets[t].h;
    if (lim.fixed_altitude) {
      h = lim.altitude;
    } else {
      double lo = std::max(cfg.altitude.lo, prev.h - cfg.s_h_max);
      double hi = std::min(cfg.altitude.hi, prev.h + cfg.s_h_max);
      if (lim.has_closure) {
        lo = std::max(lo, lim.closure.h - cfg.s_h_max * rem);
        hi = std::min(hi, lim.closure.h + cfg.s_h_max * rem);
      }
      if (lo > hi + 1e-7) throw InfeasibleError("flight: no reachable altitude in slot " + std::to_string(t));
      h = std::clamp(h, lo, std::max(lo, hi));
      if (lim.has_closure && rem == 0) h = lim.closure.h;
    }
    prev = {p, h};
    tr.poses.push_back(prev);
  }
  return tr;
}

Trajectory initial_trajectory(const ScenarioConfig& cfg, const ClusterView& view, const FlightLimits& lim) {
  Vec2 c{};
  for (int n = 0; n < view.size(); ++n) c = c + view.positions(n, 0);
  if (view.size() > 0) c = (1.0 / view.size()) * c;
  double rho_u = 0.0;
  for (int n = 0; n < view.size(); ++n) rho_u = std::max(rho_u, norm(view.positions(n, 0) - c));
  Trajectory circle = circle_trajectory(cfg, c, rho_u, view.slots());
  if (lim.fixed_altitude)
    for (auto& p : circle.poses) p.h = lim.altitude;
  return project_flight(cfg, circle.poses, lim);
}

TrajStep solve_trajectory_step(const ScenarioConfig& cfg, const ClusterView& view, const Trajectory& traj0,
                               const AssociationMatrix& assoc, const AllocationTable& alloc,
                               const FlightLimits& lim) {
  using cvx::Affine;
  TrajStep res{traj0, 0.0, true};
  const int nl = view.size(), tl = view.slots();
  if (nl == 0 || tl == 0) return res;
  const auto exp = taylor_bound(cfg, view, traj0, assoc, alloc);

  cvx::ConvexProgram prog;
  const bool move_xy = cfg.s_xy_max > 0.0;
  const bool move_h = cfg.s_h_max > 0.0 && !lim.fixed_altitude;
  std::vector<Affine> x(tl), y(tl), h(tl);
  for (int t = 0; t < tl; ++t) {
    if (move_xy) {
      x[t] = Affine::var(prog.add_variable("x" + std::to_string(t)));
      y[t] = Affine::var(prog.add_variable("y" + std::to_string(t)));
      prog.add_bounds(x[t].terms[0].var, cfg.area_x.lo / kLen, cfg.area_x.hi / kLen);
      prog.add_bounds(y[t].terms[0].var, cfg.area_y.lo / kLen, cfg.area_y.hi / kLen);
    } else {
      x[t] = Affine(traj0.poses[t].xy.x / kLen);
      y[t] = Affine(traj0.poses[t].xy.y / kLen);
    }
    if (move_h) {
      h[t] = Affine::var(prog.add_variable("h" + std::to_string(t)));
      prog.add_bounds(h[t].terms[0].var, cfg.altitude.lo / kLen, cfg.altitude.hi / kLen);
    } else {
      h[t] = Affine(traj0.poses[t].h / kLen);
    }
  }
  const double sxy = cfg.s_xy_max / kLen, sh = cfg.s_h_max / kLen;
  for (int t = 0; t < tl; ++t) {
    const Affine px = t ? x[t - 1] : Affine(lim.prev.xy.x / kLen);
    const Affine py = t ? y[t - 1] : Affine(lim.prev.xy.y / kLen);
    const Affine ph = t ? h[t - 1] : Affine(lim.prev.h / kLen);
    if (move_xy) prog.add_soc(Affine(sxy), {x[t] - px, y[t] - py}, "speed_xy");
    if (move_h) {
      prog.add_less_equal(h[t] - ph - sh, "climb");
      prog.add_less_equal(ph - h[t] - sh, "descend");
    }
  }
  if (lim.has_closure) {
    if (move_xy) {
      prog.add_equality(x[tl - 1] - lim.closure.xy.x / kLen, "closure_x");
      prog.add_equality(y[tl - 1] - lim.closure.xy.y / kLen, "closure_y");
    }
    if (move_h) prog.add_equality(h[tl - 1] - lim.closure.h / kLen, "closure_h");
  }

  const auto gamma = prog.add_variable("gamma");
  for (int n = 0; n < nl; ++n) {
    Affine lb;
    for (int t = 0; t < tl; ++t) {
      const TaylorExpansion& e = exp(n, t);
      if (e.c2 <= 0.0) continue;
      const auto u = prog.add_variable("u" + std::to_string(n) + "_" + std::to_string(t));
      const Vec2 q = view.positions(n, t);
      prog.add_rotated_soc(Affine::var(u), Affine(0.5), {x[t] - q.x / kLen, y[t] - q.y / kLen, h[t]}, "dist");
      const double bm = alloc.b(n, t) / kRate;
      lb += Affine(bm * (e.f0 - e.grad * e.c1) / tl);
      lb += Affine::var(u, bm * e.grad * kLen * kLen / tl);
    }
    prog.add_less_equal(Affine::var(gamma) - lb, "rate_lb");
  }
  prog.maximize(Affine::var(gamma));

  const cvx::SolveReport rep = cvx::solve(prog);
  const bool usable = rep.status == cvx::Status::optimal ||
                      (rep.status == cvx::Status::max_iters && prog.max_violation(rep.x) < 1e-6);
  if (!usable) return res;

  std::vector<UavPose> targets(tl);
  for (int t = 0; t < tl; ++t)
    targets[t] = {{x[t].eval(rep.x) * kLen, y[t].eval(rep.x) * kLen}, h[t].eval(rep.x) * kLen};
  try {
    res.traj = project_flight(cfg, targets, lim);
  } catch (const InfeasibleError&) {
    return res;
  }
  res.gamma_lb = rep[gamma] * kRate;
  res.stalled = false;
  return res;
}

Trajectory sca_trajectory(const ScenarioConfig& cfg, const ClusterView& view, const Trajectory& init,
                          const AssociationMatrix& assoc, const AllocationTable& alloc, const FlightLimits& lim,
                          ScaTrace* trace) {
  ScaTrace local;
  ScaTrace& tr = trace ? *trace : local;
  tr = {};
  Trajectory best = init;
  double f_best = min_rate(cfg, view, best, assoc, alloc);
  tr.objective.push_back(f_best);
  const double eps = cfg.sca_tol * kRate;
  for (int it = 0; it < cfg.sca_max_iters; ++it) {
    const TrajStep step = solve_trajectory_step(cfg, view, best, assoc, alloc, lim);
    if (step.stalled) {
      tr.stalled = true;
      tr.converged = true;
      break;
    }
    ++tr.iterations;
    tr.surrogate.push_back(step.gamma_lb);
    Trajectory cand = step.traj;
    double f = min_rate(cfg, view, cand, assoc, alloc);
    // the surrogate ignores regime changes; pull back toward the iterate when they cost rate
    for (double a = 0.5; f < f_best && a > 1e-3; a *= 0.5) {
      std::vector<UavPose> mix(best.poses.size());
      for (std::size_t t = 0; t < mix.size(); ++t)
        mix[t] = {best.poses[t].xy + a * (step.traj.poses[t].xy - best.poses[t].xy),
                  best.poses[t].h + a * (step.traj.poses[t].h - best.poses[t].h)};
      cand = project_flight(cfg, mix, lim);
      f = min_rate(cfg, view, cand, assoc, alloc);
    }
    if (f < f_best) {
      tr.objective.push_back(f_best);
      tr.converged = true;
      break;
    }
    const double gain = f - f_best;
    best = std::move(cand);
    f_best = f;
    tr.objective.push_back(f_best);
    if (gain < eps) {
      tr.converged = true;
      break;
    }
  }
  return best;
}

}  // namespace uavnet
