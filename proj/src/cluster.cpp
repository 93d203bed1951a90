#include "uavnet/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uavnet/channel.hpp"

namespace uavnet {

double capacity_reference_distance(const ScenarioConfig& cfg) {
  const double half_diag = 0.5 * std::hypot(cfg.area_x.width(), cfg.area_y.width());
  return std::hypot(half_diag, cfg.altitude.lo);
}

double estimate_lambda(const ScenarioConfig& cfg, int mc_samples, Rng& rng) {
  if (mc_samples < 1) throw ValidationError("capacity_mc_samples", "must be >= 1");
  const double pl = cfg.eta_los * free_space_factor(capacity_reference_distance(cfg), cfg.carrier_freq);
  const double sigma2 = cfg.b_total_max * cfg.noise_psd;
  const double scale = cfg.p_total_max / (cfg.carrier_freq * sigma2);
  double acc = 0.0;
  for (int i = 0; i < mc_samples; ++i) {
    const double hh = draw_fading_norm_sq(rng, cfg.antennas);  // |h^H h| = ||h||^2
    acc += std::log2(1.0 + scale * hh * hh / pl);
  }
  return acc / mc_samples;
}

CapacityEstimate capacity_from_rmax(double r_max, const ScenarioConfig& cfg) {
  CapacityEstimate e;
  e.r_max = r_max;
  e.lambda_se = r_max / cfg.b_total_max;
  const double per_slot = r_max * cfg.slot_duration;
  const double ratio = cfg.qos_bits / per_slot;
  const double tau_d = std::ceil(ratio);
  if (cfg.tau_override > 0) {
    e.tau = cfg.tau_override;
    e.tau_overridden = true;
  } else {
    if (!(per_slot > 0.0) || tau_d > cfg.horizon_slots())
      throw InfeasibleError("qos_bits: need " + std::to_string(ratio) + " slots at R^max = " + std::to_string(r_max) +
                            " bit/s, flight has " + std::to_string(cfg.horizon_slots()));
    e.tau = std::max(1, static_cast<int>(tau_d));
  }
  if (cfg.c_max_override > 0) {
    e.c_max = cfg.c_max_override;
    e.c_max_overridden = true;
  } else {
    const double c = std::floor(e.tau * per_slot / cfg.qos_bits);
    e.c_max = static_cast<int>(std::clamp(c, 1.0, static_cast<double>(cfg.n_users)));
  }
  e.n_clusters = (cfg.n_users + e.c_max - 1) / e.c_max;
  return e;
}

CapacityEstimate estimate_capacity(const ScenarioConfig& cfg, int mc_samples, Rng& rng) {
  const double lambda = estimate_lambda(cfg, mc_samples, rng);
  CapacityEstimate e = capacity_from_rmax(cfg.b_total_max * lambda, cfg);
  e.lambda_se = lambda;
  return e;
}

std::vector<int> ClusterPlan::members(int cluster) const {
  std::vector<int> out;
  for (int n = 0; n < static_cast<int>(assignments.size()); ++n)
    if (assignments[n] == cluster) out.push_back(n);
  return out;
}

double within_cluster_ss(const std::vector<Vec2>& positions, const std::vector<int>& assignments, int k) {
  std::vector<Vec2> c(static_cast<std::size_t>(k));
  std::vector<int> cnt(static_cast<std::size_t>(k), 0);
  for (std::size_t n = 0; n < positions.size(); ++n) {
    c[assignments[n]] = c[assignments[n]] + positions[n];
    ++cnt[assignments[n]];
  }
  for (int g = 0; g < k; ++g)
    if (cnt[g] > 0) c[g] = (1.0 / cnt[g]) * c[g];
  double s = 0.0;
  for (std::size_t n = 0; n < positions.size(); ++n) s += norm_sq(positions[n] - c[assignments[n]]);
  return s;
}

namespace {

ClusterPlan lloyd(const std::vector<Vec2>& pts, int k, Rng& rng) {
  const int n = static_cast<int>(pts.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // k-means++ seeding
  std::vector<Vec2> cent;
  cent.push_back(pts[std::uniform_int_distribution<int>(0, n - 1)(rng)]);
  std::vector<double> d2(static_cast<std::size_t>(n));
  while (static_cast<int>(cent.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : cent) best = std::min(best, norm_sq(pts[i] - c));
      total += d2[i] = best;
    }
    int pick = n - 1;
    if (total > 0.0) {
      double r = u(rng) * total;
      for (int i = 0; i < n; ++i) {
        r -= d2[i];
        if (r < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = std::uniform_int_distribution<int>(0, n - 1)(rng);
    }
    cent.push_back(pts[pick]);
  }

  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 200; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = norm_sq(pts[i] - cent[0]);
      for (int g = 1; g < k; ++g) {
        const double d = norm_sq(pts[i] - cent[g]);
        if (d < bd) {
          bd = d;
          best = g;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    // Repair empty clusters with the point farthest from its centroid.
    for (int g = 0; g < k; ++g) {
      if (std::count(assign.begin(), assign.end(), g) > 0) continue;
      int far = -1;
      double fd = -1.0;
      for (int i = 0; i < n; ++i) {
        if (std::count(assign.begin(), assign.end(), assign[i]) < 2) continue;
        const double d = norm_sq(pts[i] - cent[assign[i]]);
        if (d > fd) {
          fd = d;
          far = i;
        }
      }
      assign[far] = g;
      cent[g] = pts[far];
      changed = true;
    }
    std::vector<Vec2> sum(static_cast<std::size_t>(k));
    std::vector<int> cnt(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      sum[assign[i]] = sum[assign[i]] + pts[i];
      ++cnt[assign[i]];
    }
    for (int g = 0; g < k; ++g) cent[g] = (1.0 / cnt[g]) * sum[g];
    if (!changed) break;
  }
  ClusterPlan p;
  p.assignments = assign;
  p.centroids = cent;
  p.wcss = within_cluster_ss(pts, assign, k);
  return p;
}

}  // namespace

ClusterPlan kmeans_clusters(const std::vector<Vec2>& positions, int k, std::uint64_t seed, int restarts) {
  const int n = static_cast<int>(positions.size());
  if (k < 1 || k > n) throw ValidationError("n_clusters", "need 1 <= L <= N");
  if (restarts < 1) throw ValidationError("kmeans_restarts", "must be >= 1");
  ClusterPlan best;
  for (int r = 0; r < restarts; ++r) {
    Rng rng = sub_stream(seed, 0x6b6d0000ULL + static_cast<std::uint64_t>(r));
    ClusterPlan p = lloyd(positions, k, rng);
    if (r == 0 || p.wcss < best.wcss - 1e-12 * std::max(1.0, best.wcss)) best = std::move(p);
  }
  return best;
}

int nearest_cluster(const UavPose& pose, const std::vector<Vec2>& centroids, const std::set<int>& served) {
  int best = -1;
  double bd = std::numeric_limits<double>::infinity();
  for (int g = 0; g < static_cast<int>(centroids.size()); ++g) {
    if (served.count(g)) continue;
    const double d = norm_sq(pose.xy - centroids[g]) + pose.h * pose.h;
    if (d < bd) {
      bd = d;
      best = g;
    }
  }
  if (best < 0) throw Error("nearest_cluster: every cluster has been served");
  return best;
}

int serving_time(int n_users, double distance, int c_max, int tau, double s_xy_max) {
  if (n_users < 1 || c_max < 1 || tau < 1) throw ValidationError("serving_time", "need N_l, C_max, tau >= 1");
  int travel = 0;
  if (distance > 0.0) {
    if (!(s_xy_max > 0.0)) throw InfeasibleError("serving_time: cluster is away and s_xy_max is 0");
    // Tolerate rounding so an exact multiple of s_xy_max does not gain a slot.
    travel = static_cast<int>(std::ceil(distance / s_xy_max - 1e-9));
  }
  return (n_users + c_max - 1) / c_max * tau + travel;
}

std::vector<int> plan_serve_times(const ClusterPlan& plan, const UavPose& pose, const std::set<int>& served,
                                  int c_max, int tau, double s_xy_max, int budget) {
  std::vector<int> t(static_cast<std::size_t>(plan.n_clusters()), 0);
  long long total = 0;
  for (int g = 0; g < plan.n_clusters(); ++g) {
    if (served.count(g)) continue;
    const int nl = static_cast<int>(plan.members(g).size());
    t[g] = serving_time(nl, norm(pose.xy - plan.centroids[g]), c_max, tau, s_xy_max);
    total += t[g];
  }
  if (total > budget) {
    // Keep tau slots per cluster and scale down (floor) only the excess.
    long long open = 0, excess = 0;
    for (int g = 0; g < plan.n_clusters(); ++g) {
      if (served.count(g)) continue;
      ++open;
      excess += t[g] - tau;
    }
    const long long spare = budget - open * tau;
    if (spare < 0)
      throw InfeasibleError("remaining budget of " + std::to_string(budget) + " slots cannot give " +
                            std::to_string(open) + " clusters tau = " + std::to_string(tau) + " slots each");
    for (int g = 0; g < plan.n_clusters(); ++g) {
      if (served.count(g)) continue;
      t[g] = tau + static_cast<int>(excess > 0 ? (t[g] - tau) * spare / excess : 0);
    }
  }
  return t;
}

}  // namespace uavnet
