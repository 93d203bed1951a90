#pragma once
// Capacity heuristic (connectivity time, per-slot capacity, cluster count),
// k-means grouping, nearest-cluster selection and serving-time budgets.

#include <set>
#include <vector>

#include "uavnet/scenario.hpp"

namespace uavnet {

struct CapacityEstimate {
  double lambda_se = 0.0;  // bit/s/Hz
  double r_max = 0.0;      // bit/s
  int tau = 1;             // slots
  int c_max = 1;           // users per slot
  int n_clusters = 1;
  bool tau_overridden = false;
  bool c_max_overridden = false;
};

/// Reference link for the spectral-efficiency estimate: half the area
/// diagonal horizontally, at minimum altitude, LoS.
double capacity_reference_distance(const ScenarioConfig& cfg);

/// Monte-Carlo estimate of the average spectral efficiency, taken over fading.
double estimate_lambda(const ScenarioConfig& cfg, int mc_samples, Rng& rng);

/// tau = ceil(r_on / (R^max delta)), C_max = floor(tau R^max delta / r_on),
/// L = ceil(N / C_max), then the scenario overrides. Throws InfeasibleError
/// when the derived tau does not fit in the flight.
CapacityEstimate capacity_from_rmax(double r_max, const ScenarioConfig& cfg);

CapacityEstimate estimate_capacity(const ScenarioConfig& cfg, int mc_samples, Rng& rng);

struct ClusterPlan {
  std::vector<int> assignments;  // user -> cluster
  std::vector<Vec2> centroids;
  std::vector<int> serve_times;  // slots, filled by plan_serve_times
  std::vector<int> order;        // visiting order, filled as clusters are served
  double wcss = 0.0;

  int n_clusters() const { return static_cast<int>(centroids.size()); }
  std::vector<int> members(int cluster) const;
};

/// Lloyd iterations from k-means++ seeds, best of `restarts` by within-cluster
/// sum of squares. Restart r draws from sub_stream(seed, r).
ClusterPlan kmeans_clusters(const std::vector<Vec2>& positions, int k, std::uint64_t seed, int restarts = 20);

double within_cluster_ss(const std::vector<Vec2>& positions, const std::vector<int>& assignments, int k);

/// Unserved cluster whose ground-level centroid is nearest in 3D.
int nearest_cluster(const UavPose& pose, const std::vector<Vec2>& centroids, const std::set<int>& served);

/// ceil(N_l / C_max) tau + ceil(D_l / s_xy_max).
int serving_time(int n_users, double distance, int c_max, int tau, double s_xy_max);

/// Serving times of every unserved cluster measured from `pose`. When their sum
/// exceeds `budget` the part above tau is scaled down (floor). Throws
/// InfeasibleError when the budget cannot give every cluster tau slots.
std::vector<int> plan_serve_times(const ClusterPlan& plan, const UavPose& pose, const std::set<int>& served,
                                  int c_max, int tau, double s_xy_max, int budget);

}  // namespace uavnet
