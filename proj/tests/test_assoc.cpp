#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "uavnet/assoc.hpp"
#include "uavnet/scenario.hpp"

using namespace uavnet;

namespace {

// Exhaustive search over every binary users x slots matrix that respects the
// per-slot capacity, one slot column at a time.
struct Brute {
  const Grid<double>& r;
  int tau, c_max;
  std::vector<int> count;
  std::vector<double> sum;
  double best = -1.0;

  void walk(int s) {
    const int n = r.rows, t = r.cols;
    if (s == t) {
      double g = std::numeric_limits<double>::infinity();
      for (int u = 0; u < n; ++u) {
        if (count[u] < tau) return;
        g = std::min(g, sum[u] / t);
      }
      best = std::max(best, g);
      return;
    }
    for (int u = 0; u < n; ++u)
      if (count[u] + (t - s) < tau) return;  // nothing below can be feasible
    for (std::uint32_t col = 0; col < (1u << n); ++col) {
      if (std::popcount(col) > c_max) continue;
      for (int u = 0; u < n; ++u)
        if ((col >> u) & 1) ++count[u], sum[u] += r(u, s);
      walk(s + 1);
      for (int u = 0; u < n; ++u)
        if ((col >> u) & 1) --count[u], sum[u] -= r(u, s);
    }
  }
};

double brute_gamma(const Grid<double>& r, int tau, int c_max) {
  Brute b{r, tau, c_max, std::vector<int>(r.rows, 0), std::vector<double>(r.rows, 0.0)};
  b.walk(0);
  return b.best;
}

Grid<double> random_rates(std::mt19937_64& rng, int n, int t) {
  std::uniform_real_distribution<double> u(1.0, 10.0);
  Grid<double> r(n, t);
  for (double& v : r.data) v = std::round(u(rng) * 4) / 4 * 1e7;  // coarse values create ties
  return r;
}

}  // namespace

TEST_CASE("single user takes every slot") {
  Grid<double> r(1, 3);
  r.data = {5, 1, 3};
  const AssocResult a = solve_association(r, 2, 1, 0.0, 1.0);
  CHECK(a.gamma == doctest::Approx(3.0));
  CHECK(a.gamma == doctest::Approx(brute_gamma(r, 2, 1)));
  CHECK(a.assoc.count_user(0) == 3);
}

TEST_CASE("uniform rates with N = C_max") {
  Grid<double> r(3, 5, 7.0);
  const AssocResult a = solve_association(r, 4, 3, 0.0, 1.0);
  for (int n = 0; n < 3; ++n) CHECK(a.assoc.count_user(n) == 5);
  CHECK(a.gamma == doctest::Approx(7.0));
}

TEST_CASE("3 users x 6 slots, C_max = 2, tau = 2") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const Grid<double> r = random_rates(rng, 3, 6);
    const AssocResult a = solve_association(r, 2, 2, 0.0, 1.0);
    CHECK(a.gamma == doctest::Approx(brute_gamma(r, 2, 2)).epsilon(1e-12));
    CHECK(a.gamma == doctest::Approx(association_gamma(r, a.assoc.j)).epsilon(1e-15));
    for (int n = 0; n < 3; ++n) CHECK(a.assoc.count_user(n) >= 2);
    for (int t = 0; t < 6; ++t) CHECK(a.assoc.count_slot(t) <= 2);
  }
}

TEST_CASE("exact on all small instances") {
  std::mt19937_64 rng(23);
  int checked = 0;
  for (int n = 1; n <= 20; ++n)
    for (int t = 1; n * t <= 20; ++t)
      for (int c = 1; c <= n; ++c)
        for (int tau = 0; tau <= t; ++tau) {
          if (n * tau > c * t) continue;
          const Grid<double> r = random_rates(rng, n, t);
          const AssocResult a = solve_association(r, tau, c, 0.0, 1.0);
          INFO("n=" << n << " t=" << t << " c=" << c << " tau=" << tau);
          CHECK(a.gamma == doctest::Approx(brute_gamma(r, tau, c)).epsilon(1e-12));
          ++checked;
        }
  MESSAGE(checked << " instances checked");
}

TEST_CASE("removing a user never lowers gamma") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    const Grid<double> r = random_rates(rng, 4, 6);
    const double full = solve_association(r, 2, 2, 0.0, 1.0).gamma;
    for (int drop = 0; drop < 4; ++drop) {
      Grid<double> s(3, 6);
      for (int n = 0, m = 0; n < 4; ++n) {
        if (n == drop) continue;
        for (int t = 0; t < 6; ++t) s(m, t) = r(n, t);
        ++m;
      }
      CHECK(solve_association(s, 2, 2, 0.0, 1.0).gamma >= full * (1 - 1e-12));
    }
  }
}

TEST_CASE("infeasible counts and QoS flag") {
  Grid<double> r(4, 3, 1e6);
  CHECK_THROWS_AS(solve_association(r, 2, 2, 0.0, 1.0), InfeasibleError);
  CHECK_THROWS_AS(solve_association(r, 4, 4, 0.0, 1.0), InfeasibleError);
  Grid<double> q(1, 4, 1e6);
  CHECK(solve_association(q, 2, 1, 4e6, 1.0).qos_met);
  CHECK_FALSE(solve_association(q, 2, 1, 4.1e6, 1.0).qos_met);
}

TEST_CASE("larger cluster solves quickly and deterministically") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(20e6, 120e6);
  Grid<double> r(5, 14);
  for (double& v : r.data) v = u(rng);
  const AssocResult a = solve_association(r, 4, 3, 0.0, 1.0);
  const AssocResult b = solve_association(r, 4, 3, 0.0, 1.0);
  CHECK(a.assoc.j == b.assoc.j);
  MESSAGE("nodes " << a.nodes);
}
