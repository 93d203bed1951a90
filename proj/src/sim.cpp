#include "uavnet/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <set>
#include <thread>

namespace uavnet {

namespace {

constexpr std::uint64_t kFadingStream = 0x66616465ULL;
constexpr std::uint64_t kCapacityStream = 0x63617061ULL;
constexpr std::uint64_t kClusterStream = 0x636c7573ULL;

constexpr std::array<std::string_view, 7> kNames{"proposed",      "upper_bound",    "no_prediction",
                                                 "fixed_resources", "time_dividend", "traj_2d",
                                                 "traj_2d_prediction"};

enum class Knowledge { truth, predicted, frozen };

Knowledge knowledge_of(SchemeId s) {
  switch (s) {
    case SchemeId::upper_bound:
      return Knowledge::truth;
    case SchemeId::no_prediction:
    case SchemeId::traj_2d:
      return Knowledge::frozen;
    default:
      return Knowledge::predicted;
  }
}

bool optimizes_resources(SchemeId s) { return s != SchemeId::fixed_resources && s != SchemeId::time_dividend; }
bool flies_2d(SchemeId s) { return s == SchemeId::traj_2d || s == SchemeId::traj_2d_prediction; }

double min_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
}

int slots_for(double dist, double step) {
  if (dist <= 0.0) return 0;
  if (step <= 0.0) throw InfeasibleError("cannot travel " + std::to_string(dist) + " m with a zero speed limit");
  return static_cast<int>(std::ceil(dist / step - 1e-9));
}

struct Planner {
  const ScenarioConfig& cfg;
  const World& w;
  Knowledge know;

  Vec2 at(int user, int slot) const {
    switch (know) {
      case Knowledge::truth:
        return w.true_position(user, slot);
      case Knowledge::frozen:
        return w.true_position(user, 0);
      case Knowledge::predicted:
        break;
    }
    return w.predicted[user].positions[slot];
  }
};

ClusterView make_view(const std::vector<int>& users, int start, int slots, const World& w, bool planned,
                      const Planner& pl) {
  ClusterView v;
  v.users = users;
  const int n = static_cast<int>(users.size());
  v.positions = Grid<Vec2>(n, slots);
  v.fading = Grid<double>(n, slots);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < slots; ++t) {
      v.positions(i, t) = planned ? pl.at(users[i], start + t) : w.true_position(users[i], start + t);
      v.fading(i, t) = w.fading.at(users[i], start + t);
    }
  return v;
}

// Rates the association sees: the current allocation where a user already
// holds resources, an equal share of the slot otherwise.
Grid<double> association_rates(const ScenarioConfig& cfg, const Grid<double>& gains, const AllocationTable* alloc,
                               int c_max) {
  const int k = std::max(1, std::min(c_max, gains.rows));
  const double b_eq = cfg.b_total_max / k;
  const double p_eq = std::min(cfg.p_user_max, cfg.p_total_max / k);
  Grid<double> r(gains.rows, gains.cols);
  for (int n = 0; n < gains.rows; ++n)
    for (int t = 0; t < gains.cols; ++t) {
      const bool held = alloc && alloc->b(n, t) > 0.0;
      r(n, t) = held ? rate(alloc->b(n, t), alloc->p(n, t), gains(n, t), cfg) : rate(b_eq, p_eq, gains(n, t), cfg);
    }
  return r;
}

AssociationMatrix cyclic_association(int users, int slots) {
  AssociationMatrix a;
  a.j = Grid<std::uint8_t>(users, slots, 0);
  for (int t = 0; t < slots; ++t) a.j(t % users, t) = 1;
  a.tau_req = slots / users;
  return a;
}

}  // namespace

std::string_view scheme_name(SchemeId s) { return kNames[static_cast<std::size_t>(s)]; }

SchemeId parse_scheme(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return kAllSchemes[i];
  throw ValidationError("scheme", "unknown scheme '" + std::string(name) + "'");
}

Vec2 World::true_position(int user, int slot) const { return truth[user].positions[history_end + slot]; }

World make_world(const ScenarioConfig& cfg) {
  cfg.validate();
  World w;
  w.seed = cfg.rng_seed;
  w.horizon = cfg.horizon_slots();
  w.history_end = cfg.history_slots;
  w.truth = generate_tracks(cfg, cfg.gm, w.seed, cfg.history_slots + w.horizon);
  std::vector<UserTrack> histories;
  histories.reserve(w.truth.size());
  for (const auto& tr : w.truth) histories.push_back(split_history_future(tr, w.history_end).first);
  w.predicted = predict_users(histories, StateSpace::for_scenario(cfg), w.horizon, cfg, &w.tensor);
  Rng fr = sub_stream(w.seed, kFadingStream);
  w.fading = FadingField(cfg.n_users, w.horizon, cfg.antennas, fr);
  Rng cr = sub_stream(w.seed, kCapacityStream);
  w.capacity = estimate_capacity(cfg, cfg.capacity_mc_samples, cr);
  return w;
}

int SchemeRun::slots_used() const {
  int s = 0;
  for (const auto& r : rounds) s += r.slots();
  return s;
}

std::vector<UavPose> SchemeRun::flight_path() const {
  std::vector<UavPose> out{start};
  for (const auto& r : rounds) out.insert(out.end(), r.flight.poses.begin(), r.flight.poses.end());
  return out;
}

bool bcd_converged(double f_prev, double f_curr, double eps) { return std::abs(f_prev - f_curr) < eps; }

UavPose start_pose(const ScenarioConfig& cfg) {
  return {{0.5 * (cfg.area_x.lo + cfg.area_x.hi), 0.5 * (cfg.area_y.lo + cfg.area_y.hi)},
          0.5 * (cfg.altitude.lo + cfg.altitude.hi)};
}

SchemeRun run_scheme(const ScenarioConfig& cfg, SchemeId scheme, const RunOptions& opts) {
  return run_scheme(cfg, scheme, make_world(cfg), opts);
}

SchemeRun run_scheme(const ScenarioConfig& cfg, SchemeId scheme, const World& w, const RunOptions& opts) {
  SchemeRun run;
  run.scheme = scheme;
  run.seed = w.seed;
  run.start = start_pose(cfg);
  run.c_max = w.capacity.c_max;
  run.tau = w.capacity.tau;
  run.horizon = w.horizon;

  const Planner pl{cfg, w, knowledge_of(scheme)};
  const int c_max = w.capacity.c_max;
  const int tau = w.capacity.tau;
  const double eps = cfg.sca_tol * 1e6;

  std::vector<int> remaining(cfg.n_users);
  std::iota(remaining.begin(), remaining.end(), 0);
  UavPose pose = run.start;
  int slot = 0;
  int k = std::min(w.capacity.n_clusters, cfg.n_users);

  while (!remaining.empty()) {
    const int round = static_cast<int>(run.rounds.size());
    const std::string where = "round " + std::to_string(round) + " at slot " + std::to_string(slot);
    if (slot >= w.horizon) throw InfeasibleError(where + ": flight time exhausted");

    // Every scheme clusters on the positions reported at take-off; the
    // schemes differ only in what the BCD of a round sees.
    std::vector<Vec2> pts;
    for (int u : remaining) pts.push_back(w.true_position(u, 0));
    k = std::clamp(k, 1, static_cast<int>(remaining.size()));
    const ClusterPlan plan = kmeans_clusters(pts, k, w.seed ^ (kClusterStream + round), cfg.kmeans_restarts);
    const bool last = plan.n_clusters() == 1;
    const int l = nearest_cluster(pose, plan.centroids, {});

    RoundResult r;
    r.cluster = round;
    r.start_slot = slot;
    for (int i : plan.members(l)) r.users.push_back(remaining[i]);
    const int nl = static_cast<int>(r.users.size());
    const Vec2 centre = plan.centroids[l];
    {
      Vec2 c;
      for (int u : r.users) c = c + (1.0 / nl) * w.true_position(u, 0);
      r.reach = norm(c - run.start.xy);
    }

    // Serving time: the planner's rule, or a fixed service part plus travel.
    int tl = 0;
    try {
      int reserve = 0;
      for (const Vec2& c : plan.centroids) reserve = std::max(reserve, slots_for(norm(c - run.start.xy), cfg.s_xy_max));
      const auto times = plan_serve_times(plan, pose, {}, c_max, tau, cfg.s_xy_max, w.horizon - slot - reserve);
      r.travel_slots = slots_for(norm(centre - pose.xy), cfg.s_xy_max);
      tl = opts.service_slots > 0 ? opts.service_slots + r.travel_slots : times[l];
    } catch (const InfeasibleError& e) {
      throw InfeasibleError(where + ": " + e.what());
    }
    if (last) tl += slots_for(norm(centre - run.start.xy), cfg.s_xy_max);
    tl = std::min(tl, w.horizon - slot);
    r.tau_req = std::min({tau, tl, c_max * tl / nl});
    if (scheme == SchemeId::time_dividend) r.tau_req = tl / nl;

    const ClusterView vplan = make_view(r.users, slot, tl, w, true, pl);
    const ClusterView vtrue = make_view(r.users, slot, tl, w, false, pl);
    FlightLimits lim;
    lim.prev = pose;
    lim.has_closure = last;
    lim.closure = run.start;
    lim.fixed_altitude = flies_2d(scheme);
    lim.altitude = run.start.h;

    Trajectory traj;
    try {
      traj = initial_trajectory(cfg, vplan, lim);
    } catch (const InfeasibleError& e) {
      throw InfeasibleError(where + ": " + e.what());
    }

    struct Point {
      Trajectory traj;
      AssociationMatrix assoc;
      AllocationTable alloc;
      double f = -1.0;
    } best;
    AssociationMatrix assoc;
    AllocationTable alloc;
    bool have = false;
    double f_prev = 0.0;
    for (int it = 0; it < cfg.sca_max_iters; ++it) {
      Grid<double> gains = link_gains(cfg, vplan, traj);
      AssociationMatrix next;
      if (scheme == SchemeId::time_dividend) {
        next = cyclic_association(nl, tl);
      } else {
        try {
          next = solve_association(association_rates(cfg, gains, have ? &alloc : nullptr, c_max), r.tau_req, c_max,
                                   cfg.qos_bits, cfg.slot_duration)
                     .assoc;
        } catch (const InfeasibleError& e) {
          throw InfeasibleError(where + ": " + e.what());
        }
      }
      if (!have || !(next.j == assoc.j)) alloc = init_allocation(cfg, next);
      assoc = std::move(next);
      have = true;

      ScaTrace tt;
      traj = sca_trajectory(cfg, vplan, traj, assoc, alloc, lim, &tt);
      r.traj_traces.push_back(std::move(tt));
      gains = link_gains(cfg, vplan, traj);
      if (optimizes_resources(scheme)) {
        ScaTrace at;
        alloc = sca_allocation(cfg, assoc, gains, alloc, &at);
        r.alloc_traces.push_back(std::move(at));
      }
      const double f = min_of(user_rates(cfg, gains, assoc, alloc));
      ++r.bcd_iters;
      if (f < best.f) {
        // A new association lowered the objective: keep the previous point.
        r.bcd_converged = true;
        break;
      }
      best = {traj, assoc, alloc, f};
      r.bcd_objective.push_back(f);
      if (bcd_converged(f_prev, f, eps)) {
        r.bcd_converged = true;
        break;
      }
      f_prev = f;
    }

    r.flight = std::move(best.traj);
    r.assoc = std::move(best.assoc);
    r.alloc = std::move(best.alloc);
    r.planned_rates = user_rates(cfg, vplan, r.flight, r.assoc, r.alloc);
    r.per_user_rates = user_rates(cfg, vtrue, r.flight, r.assoc, r.alloc);
    r.min_rate = min_of(r.per_user_rates);
    for (double rt : r.per_user_rates)
      if (rt * tl * cfg.slot_duration < cfg.qos_bits) ++r.outage_slots;
    r.planned_positions = vplan.positions;
    r.true_positions = vtrue.positions;

    pose = r.flight.poses.back();
    slot += tl;
    std::vector<int> rest;
    for (int u : remaining)
      if (std::find(r.users.begin(), r.users.end(), u) == r.users.end()) rest.push_back(u);
    remaining = std::move(rest);
    const int by_capacity = (static_cast<int>(remaining.size()) + c_max - 1) / c_max;
    k = std::min(plan.n_clusters() - 1, by_capacity);
    run.rounds.push_back(std::move(r));
  }
  return run;
}

MetricsReport collect_metrics(const ScenarioConfig& cfg, const SchemeRun& run) {
  MetricsReport m;
  m.min_rate = std::numeric_limits<double>::infinity();
  double ex = 0.0, ey = 0.0;
  long samples = 0;
  double spread = 0.0;
  for (const auto& r : run.rounds) {
    m.cluster_min_rates.push_back(r.min_rate);
    m.min_rate = std::min(m.min_rate, r.min_rate);
    m.users += static_cast<int>(r.users.size());
    m.outage_users += r.outage_slots;
    for (int n = 0; n < r.true_positions.rows; ++n)
      for (int t = 0; t < r.true_positions.cols; ++t) {
        const Vec2 d = r.planned_positions(n, t) - r.true_positions(n, t);
        ex += d.x * d.x;
        ey += d.y * d.y;
        ++samples;
      }
    const auto& pr = r.planned_rates;
    const double mean = std::accumulate(pr.begin(), pr.end(), 0.0) / static_cast<double>(pr.size());
    if (mean > 0.0) spread += (*std::max_element(pr.begin(), pr.end()) - min_of(pr)) / mean;
    m.bcd_iters_max = std::max(m.bcd_iters_max, r.bcd_iters);
    for (const auto& tr : r.traj_traces) m.sca_iters_max = std::max(m.sca_iters_max, tr.iterations);
    for (const auto& tr : r.alloc_traces) m.sca_iters_max = std::max(m.sca_iters_max, tr.iterations);
  }
  if (run.rounds.empty()) m.min_rate = 0.0;
  for (std::size_t i = 0; i < run.rounds.size(); ++i) {
    const auto& r = run.rounds[i];
    if (m.far_cluster < 0 || r.reach > run.rounds[static_cast<std::size_t>(m.far_cluster)].reach) {
      m.far_cluster = static_cast<int>(i);
      m.far_min_rate = r.min_rate;
    }
    if (m.near_cluster < 0 || r.reach < run.rounds[static_cast<std::size_t>(m.near_cluster)].reach) {
      m.near_cluster = static_cast<int>(i);
      m.near_min_rate = r.min_rate;
    }
  }
  m.outage_probability = m.users ? static_cast<double>(m.outage_users) / m.users : 0.0;
  if (samples) {
    m.rmse_x = std::sqrt(ex / samples);
    m.rmse_y = std::sqrt(ey / samples);
    m.rmse = std::sqrt((ex + ey) / samples);
  }
  if (!run.rounds.empty()) spread /= static_cast<double>(run.rounds.size());
  m.planned_spread = spread;

  const auto path = run.flight_path();
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec2 d = path[i + 1].xy - path[i].xy;
    const double dh = path[i + 1].h - path[i].h;
    m.speed_xy.push_back(norm(d) / cfg.slot_duration);
    m.speed.push_back(std::sqrt(norm_sq(d) + dh * dh) / cfg.slot_duration);
    m.max_speed = std::max(m.max_speed, m.speed.back());
  }
  m.slots_used = run.slots_used();
  return m;
}

std::vector<std::string> check_run(const ScenarioConfig& cfg, const SchemeRun& run, double tol) {
  std::vector<std::string> out;
  auto fail = [&](const std::string& what) { out.push_back(what); };
  std::vector<int> seen(cfg.n_users, 0);
  UavPose prev = run.start;
  for (std::size_t i = 0; i < run.rounds.size(); ++i) {
    const auto& r = run.rounds[i];
    const std::string tag = "round " + std::to_string(i) + ": ";
    FlightLimits lim;
    lim.prev = prev;
    lim.has_closure = i + 1 == run.rounds.size();
    lim.closure = run.start;
    lim.fixed_altitude = flies_2d(run.scheme);
    lim.altitude = run.start.h;
    const double fv = flight_violation(cfg, r.flight, lim);
    if (fv > tol) fail(tag + "flight limits violated by " + std::to_string(fv) + " m");
    for (int u : r.users) ++seen[u];
    if (r.assoc.users() != static_cast<int>(r.users.size()) || r.assoc.slots() != r.slots())
      fail(tag + "association has the wrong shape");
    for (int n = 0; n < r.assoc.users(); ++n)
      if (r.assoc.count_user(n) < r.tau_req) fail(tag + "user " + std::to_string(r.users[n]) + " below tau slots");
    for (int t = 0; t < r.assoc.slots(); ++t)
      if (r.assoc.count_slot(t) > run.c_max) fail(tag + "slot " + std::to_string(t) + " above C_max users");
    const double av = allocation_violation(cfg, r.assoc, r.alloc);
    if (av > tol) fail(tag + "resource limits violated by " + std::to_string(av) + " (relative)");
    if (!r.flight.poses.empty()) prev = r.flight.poses.back();
  }
  for (int u = 0; u < cfg.n_users; ++u)
    if (seen[u] != 1) fail("user " + std::to_string(u) + " served " + std::to_string(seen[u]) + " times");
  if (run.slots_used() > run.horizon) fail("serving times exceed the flight horizon");
  return out;
}

std::vector<SchemeRun> run_batch(const ScenarioConfig& cfg, const std::vector<SchemeId>& schemes,
                                 const std::vector<std::uint64_t>& seeds, const RunOptions& opts, unsigned threads) {
  if (schemes.empty() || seeds.empty()) return {};
  std::vector<World> worlds(seeds.size());
  std::vector<SchemeRun> out(seeds.size() * schemes.size());
  std::vector<std::exception_ptr> errors(out.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

  auto pool = [&](std::size_t count, auto&& job) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> ts;
    const unsigned n = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    for (unsigned i = 1; i < n; ++i) ts.emplace_back(worker);
    worker();
    for (auto& t : ts) t.join();
  };

  pool(seeds.size(), [&](std::size_t i) {
    ScenarioConfig c = cfg;
    c.rng_seed = seeds[i];
    worlds[i] = make_world(c);
  });
  for (std::size_t i = 0; i < seeds.size(); ++i)
    if (errors[i]) std::rethrow_exception(errors[i]);

  pool(out.size(), [&](std::size_t i) {
    const std::size_t s = i / schemes.size();
    ScenarioConfig c = cfg;
    c.rng_seed = seeds[s];
    out[i] = run_scheme(c, schemes[i % schemes.size()], worlds[s], opts);
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace uavnet
