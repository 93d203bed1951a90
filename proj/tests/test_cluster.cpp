#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "uavnet/channel.hpp"
#include "uavnet/cluster.hpp"

using namespace uavnet;

namespace {

// Reference Lloyd with uniformly random distinct initial centers.
double lloyd_random_init(const std::vector<Vec2>& pts, int k, std::mt19937_64& rng) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<Vec2> c(idx.begin(), idx.begin() + 0);
  for (int g = 0; g < k; ++g) c.push_back(pts[idx[g]]);
  std::vector<int> a(n, 0);
  for (int it = 0; it < 100; ++it) {
    for (int i = 0; i < n; ++i) {
      double bd = 1e300;
      for (int g = 0; g < k; ++g) {
        const double d = (pts[i].x - c[g].x) * (pts[i].x - c[g].x) + (pts[i].y - c[g].y) * (pts[i].y - c[g].y);
        if (d < bd) {
          bd = d;
          a[i] = g;
        }
      }
    }
    std::vector<Vec2> s(k);
    std::vector<int> m(k, 0);
    for (int i = 0; i < n; ++i) {
      s[a[i]] = s[a[i]] + pts[i];
      ++m[a[i]];
    }
    for (int g = 0; g < k; ++g)
      if (m[g]) c[g] = (1.0 / m[g]) * s[g];
  }
  double w = 0;
  for (int i = 0; i < n; ++i) w += norm_sq(pts[i] - c[a[i]]);
  return w;
}

}  // namespace

TEST_CASE("capacity formulas") {
  ScenarioConfig cfg;
  cfg.qos_bits = 200e6;
  // r_on / (R^max delta) = 2 exactly.
  const CapacityEstimate e = capacity_from_rmax(100e6, cfg);
  CHECK(e.tau == 2);
  CHECK(e.c_max == 1);
  CHECK(e.n_clusters == 10);
  // Overrides reproduce the evaluation setting: C_max = 3, tau = 4, L = 4.
  cfg.c_max_override = 3;
  cfg.tau_override = 4;
  const CapacityEstimate o = capacity_from_rmax(100e6, cfg);
  CHECK(o.c_max == 3);
  CHECK(o.tau == 4);
  CHECK(o.n_clusters == 4);
  // QoS beyond the flight is infeasible without overrides.
  ScenarioConfig hard;
  hard.qos_bits = 1e15;
  CHECK_THROWS_AS(capacity_from_rmax(1e6, hard), InfeasibleError);
}

TEST_CASE("spectral efficiency estimate") {
  ScenarioConfig cfg;
  Rng rng = seeded_rng(1);
  const double lam = estimate_lambda(cfg, 4000, rng);
  // Small-SNR regime: E[log2(1+a X^2)] ~ a E[X^2] / ln 2, X ~ Gamma(M, 1), E[X^2] = M (M + 1).
  const double pl = free_space_factor(capacity_reference_distance(cfg), cfg.carrier_freq);
  const double a = cfg.p_total_max / (cfg.carrier_freq * cfg.b_total_max * cfg.noise_psd) / pl;
  CHECK(lam == doctest::Approx(a * 20.0 / std::log(2.0)).epsilon(0.05));
  CHECK(capacity_reference_distance(cfg) == doctest::Approx(std::hypot(50 * std::sqrt(2.0), 21.0)));
}

TEST_CASE("k-means separable groups and singletons") {
  std::vector<Vec2> pts{{0, 0}, {1, 0}, {0, 1}, {100, 100}, {101, 100}, {100, 101}};
  const ClusterPlan p = kmeans_clusters(pts, 2, 7);
  CHECK(p.assignments[0] == p.assignments[1]);
  CHECK(p.assignments[1] == p.assignments[2]);
  CHECK(p.assignments[3] == p.assignments[4]);
  CHECK(p.assignments[0] != p.assignments[3]);
  const ClusterPlan s = kmeans_clusters(pts, 6, 7);
  for (int n = 0; n < 6; ++n) CHECK(s.centroids[s.assignments[n]] == pts[n]);
  CHECK(s.wcss == 0.0);
  // Duplicated points still produce non-empty clusters.
  std::vector<Vec2> dup(5, Vec2{3, 3});
  const ClusterPlan d = kmeans_clusters(dup, 3, 1);
  for (int g = 0; g < 3; ++g) CHECK(!d.members(g).empty());
  CHECK_THROWS(kmeans_clusters(pts, 7, 1));
}

TEST_CASE("k-means quality against many random restarts") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 100);
  for (int inst = 0; inst < 5; ++inst) {
    std::vector<Vec2> pts(10);
    for (auto& p : pts) p = {u(rng), u(rng)};
    const ClusterPlan p = kmeans_clusters(pts, 4, 100 + inst, 20);
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < 1000; ++r) best = std::min(best, lloyd_random_init(pts, 4, rng));
    CHECK(p.wcss <= best + 1e-6);
    CHECK(p.wcss == doctest::Approx(within_cluster_ss(pts, p.assignments, 4)));
  }
  std::vector<Vec2> pts{{1, 2}, {5, 5}, {9, 1}, {3, 8}, {7, 7}};
  CHECK(kmeans_clusters(pts, 2, 3).assignments == kmeans_clusters(pts, 2, 3).assignments);
}

TEST_CASE("nearest cluster") {
  const std::vector<Vec2> c{{100, 0}, {10, 0}, {0, 10}};
  const UavPose pose{{0, 0}, 50};
  CHECK(nearest_cluster(pose, c, {}) == 1);  // tie between 1 and 2 -> lower index
  CHECK(nearest_cluster(pose, c, {1}) == 2);
  CHECK(nearest_cluster(pose, c, {1, 2}) == 0);
  CHECK_THROWS(nearest_cluster(pose, c, {0, 1, 2}));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 100);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec2> cs(6);
    for (auto& v : cs) v = {u(rng), u(rng)};
    const UavPose p{{u(rng), u(rng)}, 21 + u(rng) * 0.79};
    int best = 0;
    double bd = 1e300;
    for (int g = 0; g < 6; ++g) {
      const double d = std::sqrt(std::pow(p.xy.x - cs[g].x, 2) + std::pow(p.xy.y - cs[g].y, 2) + p.h * p.h);
      if (d < bd) {
        bd = d;
        best = g;
      }
    }
    CHECK(nearest_cluster(p, cs, {}) == best);
  }
}

TEST_CASE("serving time") {
  CHECK(serving_time(3, 0.0, 3, 4, 30.0) == 4);
  CHECK(serving_time(6, 0.0, 3, 4, 30.0) == 8);
  CHECK(serving_time(3, 75.0, 3, 4, 30.0) == 7);
  CHECK(serving_time(3, 60.0, 3, 4, 30.0) == 6);
  for (int n = 1; n < 10; ++n)
    for (double d = 0; d < 200; d += 7.5) {
      CHECK(serving_time(n + 1, d, 3, 4, 30.0) >= serving_time(n, d, 3, 4, 30.0));
      CHECK(serving_time(n, d + 7.5, 3, 4, 30.0) >= serving_time(n, d, 3, 4, 30.0));
    }
}

TEST_CASE("serve-time budget") {
  ClusterPlan plan;
  plan.assignments = {0, 0, 0, 1, 1, 1, 2, 2, 2};
  plan.centroids = {{0, 0}, {60, 0}, {0, 90}};
  const UavPose pose{{0, 0}, 50};
  const auto t = plan_serve_times(plan, pose, {}, 3, 4, 30.0, 100);
  CHECK(t == std::vector<int>{4, 6, 7});
  // Excess over tau is {0, 2, 3}; 2 spare slots -> floor({0, 4/5, 6/5}).
  const auto s = plan_serve_times(plan, pose, {}, 3, 4, 30.0, 14);
  CHECK(s == std::vector<int>{4, 4, 5});
  for (int budget = 12; budget <= 17; ++budget) {
    const auto b = plan_serve_times(plan, pose, {}, 3, 4, 30.0, budget);
    CHECK(b[0] + b[1] + b[2] <= budget);
    for (int v : b) CHECK(v >= 4);
    CHECK(b[0] <= b[1]);
    CHECK(b[1] <= b[2]);
  }
  CHECK_THROWS_AS(plan_serve_times(plan, pose, {}, 3, 4, 30.0, 11), InfeasibleError);
  const auto r = plan_serve_times(plan, pose, {0}, 3, 4, 30.0, 100);
  CHECK(r[0] == 0);
}
