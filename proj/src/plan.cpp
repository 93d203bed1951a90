#include "uavnet/plan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace uavnet {

double slot_rate(const ScenarioConfig& cfg, const ClusterView& view, const Trajectory& traj,
                 const AssociationMatrix& assoc, const AllocationTable& alloc, int n, int t) {
  if (!assoc(n, t)) return 0.0;
  const double g = link_gain(traj.poses[t], view.positions(n, t), view.fading(n, t), cfg);
  return rate(alloc.b(n, t), alloc.p(n, t), g, cfg);
}

std::vector<double> user_rates(const ScenarioConfig& cfg, const ClusterView& view, const Trajectory& traj,
                               const AssociationMatrix& assoc, const AllocationTable& alloc) {
  const int tl = view.slots();
  std::vector<double> r(static_cast<std::size_t>(view.size()), 0.0);
  for (int n = 0; n < view.size(); ++n) {
    double s = 0.0;
    for (int t = 0; t < tl; ++t) s += slot_rate(cfg, view, traj, assoc, alloc, n, t);
    r[n] = s / tl;
  }
  return r;
}

double min_rate(const ScenarioConfig& cfg, const ClusterView& view, const Trajectory& traj,
                const AssociationMatrix& assoc, const AllocationTable& alloc) {
  const auto r = user_rates(cfg, view, traj, assoc, alloc);
  return r.empty() ? 0.0 : *std::min_element(r.begin(), r.end());
}

Grid<double> link_gains(const ScenarioConfig& cfg, const ClusterView& view, const Trajectory& traj) {
  Grid<double> g(view.size(), view.slots());
  for (int n = 0; n < view.size(); ++n)
    for (int t = 0; t < view.slots(); ++t) g(n, t) = link_gain(traj.poses[t], view.positions(n, t), view.fading(n, t), cfg);
  return g;
}

std::vector<double> user_rates(const ScenarioConfig& cfg, const Grid<double>& gains, const AssociationMatrix& assoc,
                               const AllocationTable& alloc) {
  std::vector<double> r(static_cast<std::size_t>(assoc.users()), 0.0);
  for (int n = 0; n < assoc.users(); ++n) {
    double s = 0.0;
    for (int t = 0; t < assoc.slots(); ++t)
      if (assoc(n, t)) s += rate(alloc.b(n, t), alloc.p(n, t), gains(n, t), cfg);
    r[n] = s / assoc.slots();
  }
  return r;
}

double flight_violation(const ScenarioConfig& cfg, const Trajectory& traj, const FlightLimits& lim) {
  double v = 0.0;
  auto out = [](double x, const Bounds& b) { return std::max({0.0, b.lo - x, x - b.hi}); };
  UavPose prev = lim.prev;
  for (const auto& p : traj.poses) {
    v = std::max({v, out(p.xy.x, cfg.area_x), out(p.xy.y, cfg.area_y), out(p.h, cfg.altitude)});
    v = std::max(v, norm(p.xy - prev.xy) - cfg.s_xy_max);
    v = std::max(v, std::abs(p.h - prev.h) - cfg.s_h_max);
    if (lim.fixed_altitude) v = std::max(v, std::abs(p.h - lim.altitude));
    prev = p;
  }
  if (lim.has_closure && !traj.poses.empty()) {
    const UavPose& e = traj.poses.back();
    v = std::max({v, norm(e.xy - lim.closure.xy), std::abs(e.h - lim.closure.h)});
  }
  return v;
}

double allocation_violation(const ScenarioConfig& cfg, const AssociationMatrix& assoc, const AllocationTable& alloc) {
  double v = 0.0;
  const int nl = assoc.users(), tl = assoc.slots();
  for (int t = 0; t < tl; ++t) {
    double bs = 0.0, ps = 0.0;
    for (int n = 0; n < nl; ++n) {
      const double b = alloc.b(n, t), p = alloc.p(n, t);
      v = std::max({v, -b / cfg.b_total_max, -p / cfg.p_total_max});
      if (!assoc(n, t)) v = std::max({v, std::abs(b) / cfg.b_total_max, std::abs(p) / cfg.p_total_max});
      v = std::max(v, (p - cfg.p_user_max) / cfg.p_user_max);
      v = std::max(v, (b - cfg.b_total_max) / cfg.b_total_max);
      bs += b;
      ps += p;
    }
    v = std::max({v, (bs - cfg.b_total_max) / cfg.b_total_max, (ps - cfg.p_total_max) / cfg.p_total_max});
  }
  return v;
}

}  // namespace uavnet
