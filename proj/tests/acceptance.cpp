// Acceptance run: one PASS/FAIL line per criterion, details indented below.
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "test_paths.hpp"
#include "uavnet/sim.hpp"

using namespace uavnet;

namespace {

// Tolerances and thresholds.
constexpr double kMonoTol = 1e-6;       // relative drop allowed in an accepted min-rate sequence
constexpr int kMaxIters = 15;           // per SCA run and per BCD loop
constexpr double kRuntimeBudget = 300;  // s, one proposed run on the evaluation scenario
constexpr double kSpreadMax = 0.05;     // planned min-rate spread with resource optimization
constexpr double kSpreadRatio = 3.0;    // equal split must be at least this much worse
constexpr double kOutageGain4 = 0.10;   // tau = 4
constexpr double kOutageGain8 = 0.20;   // tau = 8
constexpr int kMaxServiceSlots = 40;
constexpr double kFarGap = 0.08;
constexpr double kRowTol = 1e-9;
constexpr double kOracleBudget = 60;  // s

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
const std::vector<double> kPowers{10, 15, 20, 25, 30};
const std::vector<SchemeId> kSweep{SchemeId::upper_bound, SchemeId::proposed, SchemeId::no_prediction,
                                   SchemeId::traj_2d_prediction, SchemeId::traj_2d};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool report(int id, bool ok, const std::string& what) {
  std::printf("%s %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  return ok;
}

bool non_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[i - 1] - kMonoTol * std::abs(v[i - 1])) return false;
  return true;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

ScenarioConfig at_power(const ScenarioConfig& base, double dbm) {
  ScenarioConfig c = base;
  c.p_total_max = c.p_user_max = dbm_to_watts(dbm);
  c.validate();
  return c;
}

struct Case {
  ScenarioConfig cfg;
  SchemeRun run;
  MetricsReport m;
};

// Hard re-check failures, collected over every run executed here.
struct Audit {
  int runs = 0;
  int bad_runs = 0;
  int over_budget = 0;
  std::vector<std::string> first;

  void add(const ScenarioConfig& cfg, const SchemeRun& run) {
    ++runs;
    const auto issues = check_run(cfg, run);
    if (!issues.empty()) {
      ++bad_runs;
      if (first.size() < 5)
        first.push_back(std::string(scheme_name(run.scheme)) + " seed " + std::to_string(run.seed) + ": " +
                        issues.front());
    }
    if (run.slots_used() > cfg.horizon_slots()) ++over_budget;
  }
};

Audit audit;

std::vector<Case> run_cases(const ScenarioConfig& cfg, const std::vector<SchemeId>& schemes,
                            const RunOptions& opts = {}) {
  std::vector<Case> out;
  for (auto& run : run_batch(cfg, schemes, kSeeds, opts, 0)) {
    ScenarioConfig c = cfg;
    c.rng_seed = run.seed;
    audit.add(c, run);
    MetricsReport m = collect_metrics(c, run);
    out.push_back({c, std::move(run), std::move(m)});
  }
  return out;
}

// ---------------------------------------------------------------- criterion 1

bool criterion1(const ScenarioConfig& base, const std::vector<Case>& cases) {
  int traces = 0, mono_bad = 0, iter_bad = 0, unconverged = 0, bcd_bad = 0, worst = 0;
  for (const auto& c : cases) {
    if (c.run.scheme != SchemeId::proposed) continue;
    for (const auto& r : c.run.rounds) {
      if (r.bcd_iters > kMaxIters || !non_decreasing(r.bcd_objective)) ++bcd_bad;
      for (const auto* set : {&r.traj_traces, &r.alloc_traces})
        for (const auto& t : *set) {
          ++traces;
          mono_bad += !non_decreasing(t.objective);
          iter_bad += t.iterations > kMaxIters;
          unconverged += !(t.converged || t.stalled);
          worst = std::max(worst, t.iterations);
        }
    }
  }
  const auto t0 = Clock::now();
  const SchemeRun one = run_scheme(base, SchemeId::proposed);
  const double secs = seconds_since(t0);
  audit.add(base, one);

  const bool ok = traces > 0 && mono_bad == 0 && iter_bad == 0 && unconverged == 0 && bcd_bad == 0 &&
                  secs < kRuntimeBudget;
  report(1, ok, "SCA monotonicity and convergence");
  std::printf("  %d SCA runs (trajectory + resources) over %zu seeds at 10 dBm\n", traces, kSeeds.size());
  std::printf("  decreasing sequences %d, over %d iterations %d, not converged %d, max iterations %d\n", mono_bad,
              kMaxIters, iter_bad, unconverged, worst);
  std::printf("  BCD loops over budget or decreasing: %d\n", bcd_bad);
  std::printf("  single proposed run, seed %llu: %.2f s (budget %.0f s)\n",
              static_cast<unsigned long long>(base.rng_seed), secs, kRuntimeBudget);
  return ok;
}

// ---------------------------------------------------------------- criterion 2

bool criterion2(const std::vector<Case>& cases) {
  std::vector<double> prop, fixed, prop_true, fixed_true;
  auto true_spread = [](const SchemeRun& run) {
    std::vector<double> s;
    for (const auto& r : run.rounds) {
      const auto [lo, hi] = std::minmax_element(r.per_user_rates.begin(), r.per_user_rates.end());
      const double mu = mean(r.per_user_rates);
      s.push_back(mu > 0 ? (*hi - *lo) / mu : 0.0);
    }
    return mean(s);
  };
  for (const auto& c : cases) {
    if (c.run.scheme == SchemeId::proposed) {
      prop.push_back(c.m.planned_spread);
      prop_true.push_back(true_spread(c.run));
    } else if (c.run.scheme == SchemeId::fixed_resources) {
      fixed.push_back(c.m.planned_spread);
      fixed_true.push_back(true_spread(c.run));
    }
  }
  const double p = mean(prop), f = mean(fixed);
  const bool ok = !prop.empty() && prop.size() == fixed.size() && p <= kSpreadMax && f >= kSpreadRatio * p;
  report(2, ok, "fairness flattening");
  std::printf("  planned per-user rate spread (max - min) / mean, mean over rounds and %zu seeds\n", prop.size());
  std::printf("  proposed %.4f (limit %.2f), fixed_resources %.4f, ratio %.1f (limit %.1f)\n", p, kSpreadMax, f,
              p > 0 ? f / p : INFINITY, kSpreadRatio);
  std::printf("  info: same spread on true rates: proposed %.4f, fixed_resources %.4f\n", mean(prop_true),
              mean(fixed_true));
  return ok;
}

// ---------------------------------------------------------------- criterion 3

// Smallest serving-slot budget with zero outage, scanning upward.
int zero_outage_budget(const ScenarioConfig& cfg, SchemeId s, const World& w) {
  for (int S = 1; S <= kMaxServiceSlots; ++S) {
    RunOptions o;
    o.service_slots = S;
    try {
      const SchemeRun run = run_scheme(cfg, s, w, o);
      audit.add(cfg, run);
      if (collect_metrics(cfg, run).outage_users == 0) return S;
    } catch (const InfeasibleError&) {
    }
  }
  return kMaxServiceSlots + 1;
}

struct OutageResult {
  double gain = 0.0;
  double mean_p = 0.0, mean_td = 0.0;
  std::vector<int> p, td;
};

OutageResult outage_speed(const ScenarioConfig& base, int tau, double qos_scale) {
  OutageResult r;
  for (std::uint64_t seed : kSeeds) {
    ScenarioConfig cfg = base;
    cfg.rng_seed = seed;
    cfg.tau_override = tau;
    cfg.qos_bits *= qos_scale;
    const World w = make_world(cfg);
    r.p.push_back(zero_outage_budget(cfg, SchemeId::proposed, w));
    r.td.push_back(zero_outage_budget(cfg, SchemeId::time_dividend, w));
  }
  r.mean_p = std::accumulate(r.p.begin(), r.p.end(), 0.0) / r.p.size();
  r.mean_td = std::accumulate(r.td.begin(), r.td.end(), 0.0) / r.td.size();
  r.gain = r.mean_td > 0 ? (r.mean_td - r.mean_p) / r.mean_td : 0.0;
  return r;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (int x : v) s += (s.empty() ? "" : " ") + std::to_string(x);
  return s;
}

bool criterion3(const ScenarioConfig& base) {
  // tau = 8 keeps the per-slot throughput need of tau = 4 by doubling the bits
  const OutageResult a = outage_speed(base, 4, 1.0);
  const OutageResult b = outage_speed(base, 8, 2.0);
  const bool ok = a.gain >= kOutageGain4 && b.gain >= kOutageGain8;
  report(3, ok, "zero-outage serving-slot budget, proposed vs time_dividend");
  std::printf("  tau = 4: proposed %.1f, time_dividend %.1f, %.1f%% smaller (need %.0f%%)\n", a.mean_p, a.mean_td,
              100 * a.gain, 100 * kOutageGain4);
  std::printf("    per seed  proposed [%s]  time_dividend [%s]\n", join(a.p).c_str(), join(a.td).c_str());
  std::printf("  tau = 8: proposed %.1f, time_dividend %.1f, %.1f%% smaller (need %.0f%%)\n", b.mean_p, b.mean_td,
              100 * b.gain, 100 * kOutageGain8);
  std::printf("    per seed  proposed [%s]  time_dividend [%s]\n", join(b.p).c_str(), join(b.td).c_str());
  return ok;
}

// ---------------------------------------------------------------- criterion 4

struct Sums {
  double min_rate = 0, far = 0, near = 0, last = 0;
  int n = 0;
};

bool criterion4(const std::map<double, std::vector<Case>>& by_power) {
  bool order = true;
  double far_p = 0, far_q = 0, far_u = 0;
  std::vector<std::string> lines;
  for (const auto& [dbm, cases] : by_power) {
    std::map<SchemeId, Sums> s;
    for (const auto& c : cases) {
      Sums& x = s[c.run.scheme];
      x.min_rate += c.m.min_rate;
      x.far += c.m.far_min_rate;
      x.near += c.m.near_min_rate;
      x.last += c.m.cluster_min_rates.back();
      ++x.n;
    }
    for (auto& [id, x] : s) {
      x.min_rate /= x.n, x.far /= x.n, x.near /= x.n, x.last /= x.n;
    }
    const Sums &u = s[SchemeId::upper_bound], &p = s[SchemeId::proposed], &q = s[SchemeId::no_prediction],
               &p2 = s[SchemeId::traj_2d_prediction], &q2 = s[SchemeId::traj_2d];
    const bool ok = u.min_rate >= p.min_rate && p.min_rate >= p2.min_rate && p2.min_rate >= q2.min_rate;
    order = order && ok;
    far_p += p.far, far_q += q.far, far_u += u.far;
    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "  %2.0f dBm  ub %.2f  proposed %.2f  2d_pred %.2f  2d %.2f  no_pred %.2f Mb/s  %s\n"
                  "          far gap %.1f%%  near gap %.1f%%  last-served gap %.1f%%  far ub-no_pred %.1f%%",
                  dbm, u.min_rate / 1e6, p.min_rate / 1e6, p2.min_rate / 1e6, q2.min_rate / 1e6, q.min_rate / 1e6,
                  ok ? "ordered" : "OUT OF ORDER", 100 * (p.far - q.far) / p.far, 100 * (p.near - q.near) / p.near,
                  100 * (p.last - q.last) / p.last, 100 * (u.far - q.far) / u.far);
    lines.emplace_back(buf);
  }
  const double gap = far_p > 0 ? (far_p - far_q) / far_p : 0.0;
  const bool ok = order && gap >= kFarGap;
  report(4, ok, "scheme ordering over the power sweep and farthest-cluster prediction gain");
  std::printf("  ordering upper_bound >= proposed >= traj_2d_prediction >= traj_2d on mean min-rate: %s\n",
              order ? "holds at every power" : "violated");
  std::printf("  farthest cluster (largest take-off distance from the start pose), %zu powers x %zu seeds:\n",
              by_power.size(), kSeeds.size());
  std::printf("  (proposed - no_prediction) / proposed = %.1f%% (need %.0f%%); perfect-knowledge ceiling "
              "(upper_bound - no_prediction) / upper_bound = %.1f%%\n",
              100 * gap, 100 * kFarGap, 100 * (far_u - far_q) / far_u);
  for (const auto& l : lines) std::printf("%s\n", l.c_str());
  return ok;
}

// ---------------------------------------------------------------- criterion 5

bool criterion5() {
  struct Suite {
    const char* binary;
    const char* filter;
  };
  const Suite suites[] = {
      {kTestAssoc, "exact on all small instances"},
      {kTestPredict, "evolve matches dense evolution"},
      {kTestTraj, "taylor expansion: tangency and finite-difference gradient"},
      {kTestTraj, "surrogate never exceeds the frozen-regime rate"},
      {kTestAlloc, "linearized throughput constraint"},
      {kTestCvx, "backends agree on random SOCPs"},
  };
  const auto t0 = Clock::now();
  int failed = 0;
  std::vector<std::string> lines;
  for (const auto& s : suites) {
    const auto t1 = Clock::now();
    const std::string cmd = std::string("\"") + s.binary + "\" \"-tc=" + s.filter + "\" -nv > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    failed += rc != 0;
    char buf[256];
    std::snprintf(buf, sizeof buf, "  %-4s %-58s %6.2f s", rc == 0 ? "ok" : "FAIL", s.filter, seconds_since(t1));
    lines.emplace_back(buf);
  }
  const double secs = seconds_since(t0);
  const bool ok = failed == 0 && secs < kOracleBudget;
  report(5, ok, "oracle equivalence suites");
  for (const auto& l : lines) std::printf("%s\n", l.c_str());
  std::printf("  total %.2f s (budget %.0f s)\n", secs, kOracleBudget);
  return ok;
}

// ---------------------------------------------------------------- criterion 6

bool criterion6(const ScenarioConfig& base) {
  double worst_row = 0.0;
  int rows = 0;
  for (std::uint64_t seed : kSeeds) {
    ScenarioConfig cfg = base;
    cfg.rng_seed = seed;
    const World w = make_world(cfg);
    const TransitionTensor& t = w.tensor;
    for (int i = 0; i < t.states(); ++i)
      for (int j = 0; j < t.states(); ++j) {
        if (!t.row_observed(i, j)) continue;
        double sum = 0.0;
        for (const auto* e = t.row_begin(i, j); e != t.row_end(i, j); ++e) sum += e->prob;
        worst_row = std::max(worst_row, std::abs(sum - 1.0));
        ++rows;
      }
  }

  ScenarioConfig still = base;
  still.gm.mean_speed = 0.0;
  still.gm.speed_std = 0.0;
  const World w = make_world(still);
  const SchemeRun p = run_scheme(still, SchemeId::proposed, w);
  const SchemeRun q = run_scheme(still, SchemeId::no_prediction, w);
  audit.add(still, p);
  audit.add(still, q);
  bool same = p.rounds.size() == q.rounds.size();
  for (std::size_t i = 0; same && i < p.rounds.size(); ++i) {
    const auto &x = p.rounds[i], &y = q.rounds[i];
    same = x.users == y.users && x.flight.poses == y.flight.poses && x.assoc.j == y.assoc.j &&
           x.alloc.b.data == y.alloc.b.data && x.alloc.p.data == y.alloc.p.data &&
           x.per_user_rates == y.per_user_rates;
  }

  const bool ok = audit.bad_runs == 0 && audit.over_budget == 0 && rows > 0 && worst_row <= kRowTol && same;
  report(6, ok, "structural invariants");
  std::printf("  hard re-check: %d of %d runs with violations\n", audit.bad_runs, audit.runs);
  for (const auto& f : audit.first) std::printf("    %s\n", f.c_str());
  std::printf("  flight budget exceeded: %d runs\n", audit.over_budget);
  std::printf("  transition rows: %d observed, worst |sum - 1| = %.2e (limit %.0e)\n", rows, worst_row, kRowTol);
  std::printf("  static users: proposed and no_prediction %s\n", same ? "identical" : "DIFFER");
  return ok;
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  const ScenarioConfig base = load_scenario(kEvalScenario);
  std::printf("scenario %s: %d users, %d slots, seeds %llu..%llu\n", kEvalScenario, base.n_users,
              base.horizon_slots(), static_cast<unsigned long long>(kSeeds.front()),
              static_cast<unsigned long long>(kSeeds.back()));
  std::fflush(stdout);

  std::map<double, std::vector<Case>> sweep;
  for (double dbm : kPowers) sweep[dbm] = run_cases(at_power(base, dbm), kSweep);
  const std::vector<Case> fixed = run_cases(at_power(base, 10), {SchemeId::fixed_resources});
  std::vector<Case> at10 = sweep[10];
  at10.insert(at10.end(), fixed.begin(), fixed.end());

  int failed = 0;
  failed += !criterion1(base, at10);
  failed += !criterion2(at10);
  failed += !criterion3(base);
  failed += !criterion4(sweep);
  failed += !criterion5();
  failed += !criterion6(base);
  std::printf("%d of 6 criteria passed in %.0f s\n", 6 - failed, seconds_since(t0));
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
