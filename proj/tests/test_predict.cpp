#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "uavnet/predict.hpp"

using namespace uavnet;

namespace {

// Reference: exhaustive scan over states with explicit distance formula.
int brute_nearest(Vec2 d, const StateSpace& s) {
  int best = -1;
  double bd = 1e300;
  for (int k = 0; k < s.size(); ++k) {
    const double dx = d.x - s.states[k].x, dy = d.y - s.states[k].y;
    const double dist = std::sqrt(dx * dx + dy * dy);
    if (dist < bd) {
      bd = dist;
      best = k;
    }
  }
  return best;
}

// Dense K^3 evolution.
std::vector<double> dense_evolve(const std::vector<double>& pi, int prev, const std::vector<double>& omega, int k) {
  std::vector<double> out(k, 0.0);
  for (int j = 0; j < k; ++j)
    for (int s = 0; s < k; ++s) out[s] += pi[j] * omega[(prev * k + j) * k + s];
  double tot = 0.0;
  for (double v : out) tot += v;
  if (tot > 0)
    for (double& v : out) v /= tot;
  return out;
}

TransitionTensor random_tensor(std::mt19937_64& rng, int k, double density, std::vector<double>& dense) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::tuple<int, int, int, double>> counts;
  dense.assign(static_cast<std::size_t>(k) * k * k, 0.0);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      double tot = 0.0;
      std::vector<double> row(k, 0.0);
      for (int s = 0; s < k; ++s)
        if (u(rng) < density) tot += row[s] = 1.0 + std::floor(10 * u(rng));
      for (int s = 0; s < k; ++s)
        if (row[s] > 0) {
          counts.emplace_back(i, j, s, row[s]);
          dense[(i * k + j) * k + s] = row[s] / tot;
        }
    }
  return TransitionTensor::from_counts(k, counts);
}

ScenarioConfig wide() {
  ScenarioConfig c;
  c.area_x = {-1000, 1000};
  c.area_y = {-1000, 1000};
  return c;
}

}  // namespace

TEST_CASE("compass state space") {
  const StateSpace s = StateSpace::compass(9, 2.0);
  REQUIRE(s.size() == 9);
  CHECK(s.states[0] == Vec2{0, 0});
  CHECK(s.states[1].x == doctest::Approx(2.0));
  CHECK(s.states[3].y == doctest::Approx(2.0));
  CHECK(s.states[5].x == doctest::Approx(-2.0));
  CHECK(s.states[7].y == doctest::Approx(-2.0));
  ScenarioConfig c;
  c.gm.mean_speed = 0.0;
  c.gm.speed_std = 0.0;
  CHECK(StateSpace::for_scenario(c).step_length == 1.0);
}

TEST_CASE("quantize") {
  const StateSpace s = StateSpace::compass(9, 1.5);
  UserTrack still;
  still.positions.assign(6, {3, 4});
  for (int k : quantize_track(still, s)) CHECK(k == 0);
  UserTrack right;
  for (int t = 0; t < 6; ++t) right.positions.push_back({1.5 * t, 0});
  for (int k : quantize_track(right, s)) CHECK(k == 1);
  UserTrack tiny;
  tiny.positions.assign(2, {0, 0});
  CHECK_THROWS(quantize_track(tiny, s));

  ScenarioConfig cfg;
  const auto tracks = generate_tracks(cfg, cfg.gm, 42, 300);
  for (const auto& tr : tracks) {
    const auto q = quantize_track(tr, s);
    for (int t = 1; t < tr.length(); ++t) CHECK(q[t - 1] == brute_nearest(tr.positions[t] - tr.positions[t - 1], s));
  }
  // Exact tie between stay and east: lowest index wins.
  CHECK(nearest_state({0.75, 0}, s) == 0);
}

TEST_CASE("fit small sequences") {
  const TransitionTensor a = fit_tensor({{0, 1, 2}}, 3);
  CHECK(a.prob(0, 1, 2) == 1.0);
  CHECK(a.nonzeros() == 1);
  CHECK(a.row_begin(0, 1)->count == 1.0);
  const TransitionTensor b = fit_tensor({{0, 1, 2, 0, 1, 3}}, 4);
  CHECK(b.prob(0, 1, 2) == 0.5);
  CHECK(b.prob(0, 1, 3) == 0.5);
  CHECK(b.prob(1, 2, 0) == 1.0);
  CHECK_FALSE(b.row_observed(3, 3));
  CHECK(b.rows_observed() == 3);
  CHECK_THROWS_AS(fit_tensor({{0, 1, 5}}, 4), ValidationError);
  CHECK_THROWS_AS(fit_tensor({{0, 1}}, 4), ValidationError);
}

TEST_CASE("fit recovers a known tensor") {
  // Ground truth over K = 2 states; 1000 samples.
  const double truth[2][2][2] = {{{0.8, 0.2}, {0.3, 0.7}}, {{0.5, 0.5}, {0.1, 0.9}}};
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u;
  std::vector<int> seq{0, 1};
  while (seq.size() < 1000) {
    const int i = seq[seq.size() - 2], j = seq.back();
    seq.push_back(u(rng) < truth[i][j][0] ? 0 : 1);
  }
  const TransitionTensor t = fit_tensor({seq}, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) CHECK(std::abs(t.prob(i, j, k) - truth[i][j][k]) <= 0.05);
}

TEST_CASE("evolve matches dense evolution") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 10);
    std::vector<double> dense;
    const TransitionTensor t = random_tensor(rng, k, 0.3, dense);
    std::vector<double> pi(k);
    double tot = 0;
    for (double& v : pi) tot += v = u(rng) < 0.3 ? 0.0 : u(rng);
    if (tot == 0) pi[0] = tot = 1;
    for (double& v : pi) v /= tot;
    const int prev = static_cast<int>(rng() % k);
    const EvolveResult r = evolve(pi, prev, t);
    const auto d = dense_evolve(pi, prev, dense, k);
    double dsum = 0;
    for (double v : d) dsum += v;
    if (dsum == 0) {
      CHECK(r.fallback);
      CHECK(r.dist[0] == 1.0);
    } else {
      CHECK_FALSE(r.fallback);
      for (int s = 0; s < k; ++s) CHECK(std::abs(r.dist[s] - d[s]) <= 1e-12);
    }
    CHECK(r.operations <= static_cast<std::uint64_t>(t.nonzeros()));
  }
}

TEST_CASE("evolve special tensors") {
  // Deterministic chain 0 -> 1 -> 2 -> 0 on context (prev, curr).
  std::vector<std::tuple<int, int, int, double>> c;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c.emplace_back(i, j, (j + 1) % 3, 1.0);
  const TransitionTensor det = TransitionTensor::from_counts(3, c);
  std::vector<double> pi{1, 0, 0};
  int prev = 2, curr = 0;
  for (int step = 0; step < 7; ++step) {
    const EvolveResult r = evolve(pi, prev, det);
    const int next = decode_map(r.dist);
    CHECK(next == (curr + 1) % 3);
    CHECK(r.dist[next] == 1.0);
    pi = r.dist;
    prev = curr;
    curr = next;
  }
  std::vector<std::tuple<int, int, int, double>> uc;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) uc.emplace_back(i, j, k, 3.0);
  const TransitionTensor uni = TransitionTensor::from_counts(4, uc);
  const EvolveResult r = evolve({0.1, 0.2, 0.3, 0.4}, 2, uni);
  for (double v : r.dist) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  // Row normalization invariant.
  std::mt19937_64 rng(5);
  std::vector<double> dense;
  const TransitionTensor t = random_tensor(rng, 9, 0.4, dense);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) {
      if (!t.row_observed(i, j)) continue;
      double s = 0;
      for (auto* e = t.row_begin(i, j); e != t.row_end(i, j); ++e) s += e->prob;
      CHECK(std::abs(s - 1.0) <= 1e-9);
    }
  // Long runs stay probability vectors.
  std::vector<double> p(9, 1.0 / 9);
  for (int step = 0; step < 1000; ++step) {
    const EvolveResult e = evolve(p, step % 9, t);
    p = e.dist;
    double s = 0;
    for (double v : p) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
}

TEST_CASE("MAP decode") {
  std::vector<double> one(9, 0.0);
  one[3] = 1.0;
  CHECK(decode_map(one) == 3);
  CHECK(decode_map(std::vector<double>(9, 1.0 / 9)) == 0);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> ui(0, 4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> d(9);
    for (double& v : d) v = ui(rng);  // many ties on purpose
    int best = 0;
    for (int k = 0; k < 9; ++k)
      if (d[k] > d[best]) best = k;
    CHECK(decode_map(d) == best);
  }
}

TEST_CASE("predict locations") {
  const StateSpace s = StateSpace::compass(9, 1.0);
  std::vector<std::tuple<int, int, int, double>> c{{1, 1, 1, 1.0}};
  const TransitionTensor right = TransitionTensor::from_counts(9, c);
  const PredictedTrack p = predict_locations({10, 20}, 1, 1, right, s, 5, wide());
  REQUIRE(p.positions.size() == 6);
  REQUIRE(p.decoded_states.size() == 5);
  for (int t = 1; t <= 5; ++t) {
    CHECK(p.positions[t].x == doctest::Approx(10.0 + t));
    CHECK(p.positions[t].y == doctest::Approx(20.0));
  }
  CHECK(p.fallbacks == 0);
  const TransitionTensor stay = TransitionTensor::from_counts(9, {{0, 0, 0, 1.0}});
  const PredictedTrack q = predict_locations({10, 20}, 0, 0, stay, s, 1, wide());
  CHECK(q.positions.back() == Vec2{10, 20});
  // Unseen context falls back to staying put.
  const PredictedTrack f = predict_locations({10, 20}, 4, 4, right, s, 3, wide());
  CHECK(f.fallbacks == 3);
  CHECK(f.positions.back() == Vec2{10, 20});
  // Clamped to the area.
  ScenarioConfig box;
  const PredictedTrack cl = predict_locations({99.5, 50}, 1, 1, right, s, 5, box);
  CHECK(cl.positions.back().x == 100.0);
  CHECK_THROWS(predict_locations({0, 0}, 0, 0, stay, s, 0, box));
}

TEST_CASE("prediction beats the stationary baseline") {
  ScenarioConfig cfg;
  const int history = cfg.history_slots;
  const int horizon = 30;
  const auto tracks = generate_tracks(cfg, cfg.gm, 42, history + horizon);
  std::vector<UserTrack> hist, fut;
  for (const auto& tr : tracks) {
    auto [h, f] = split_history_future(tr, history);
    hist.push_back(h);
    fut.push_back(f);
  }
  const StateSpace s = StateSpace::for_scenario(cfg);
  const auto pred = predict_users(hist, s, horizon, cfg);
  double err_pred = 0, err_still = 0;
  for (std::size_t n = 0; n < tracks.size(); ++n)
    for (int t = 0; t < horizon; ++t) {
      err_pred += norm(pred[n].positions[t + 1] - fut[n].positions[t]);
      err_still += norm(hist[n].positions.back() - fut[n].positions[t]);
    }
  MESSAGE("mean error predicted " << err_pred / (10 * horizon) << " m, stationary " << err_still / (10 * horizon));
  CHECK(err_pred < err_still);
}

TEST_CASE("tensor CSV round trip") {
  std::mt19937_64 rng(12);
  std::vector<double> dense;
  const TransitionTensor t = random_tensor(rng, 9, 0.3, dense);
  std::stringstream ss;
  t.write_csv(ss);
  const TransitionTensor back = TransitionTensor::read_csv(ss);
  CHECK(back.nonzeros() == t.nonzeros());
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j)
      for (int k = 0; k < 9; ++k) CHECK(back.prob(i, j, k) == doctest::Approx(t.prob(i, j, k)).epsilon(1e-8));
}
