#pragma once
// Whole-flight simulation: clustering, per-cluster block coordinate descent
// over association, trajectory and resources, service on the true user
// tracks, re-clustering between rounds, and the benchmark schemes.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "uavnet/alloc.hpp"
#include "uavnet/assoc.hpp"
#include "uavnet/channel.hpp"
#include "uavnet/cluster.hpp"
#include "uavnet/mobility.hpp"
#include "uavnet/plan.hpp"
#include "uavnet/predict.hpp"
#include "uavnet/traj.hpp"

namespace uavnet {

enum class SchemeId { proposed, upper_bound, no_prediction, fixed_resources, time_dividend, traj_2d, traj_2d_prediction };

inline constexpr std::array<SchemeId, 7> kAllSchemes{SchemeId::proposed,        SchemeId::upper_bound,
                                                     SchemeId::no_prediction,   SchemeId::fixed_resources,
                                                     SchemeId::time_dividend,   SchemeId::traj_2d,
                                                     SchemeId::traj_2d_prediction};

std::string_view scheme_name(SchemeId s);
/// Throws ValidationError("scheme", ...) for unknown names.
SchemeId parse_scheme(std::string_view name);

/// Everything a seed fixes before the flight: true tracks (history followed
/// by the flight), the fading field, the predictions made at take-off and the
/// capacity estimate. Shared by all schemes of that seed.
struct World {
  std::uint64_t seed = 0;
  int history_end = 0;  // track index of flight slot 0
  int horizon = 0;      // flight slots
  std::vector<UserTrack> truth;
  std::vector<PredictedTrack> predicted;  // positions[s] for flight slot s
  FadingField fading;                     // users x flight slots
  CapacityEstimate capacity;
  TransitionTensor tensor;

  Vec2 true_position(int user, int slot) const;
};

World make_world(const ScenarioConfig& cfg);

struct RunOptions {
  int service_slots = 0;  // > 0: service part of every T_l, travel slots are added on top
};

struct RoundResult {
  int cluster = 0;  // position in service order
  std::vector<int> users;
  int start_slot = 0;
  int travel_slots = 0;
  int tau_req = 0;
  double reach = 0.0;  // m, take-off centroid of the users to the start pose
  Trajectory flight;
  AssociationMatrix assoc;
  AllocationTable alloc;
  double min_rate = 0.0;               // bit/s, true positions
  std::vector<double> per_user_rates;  // bit/s, true positions
  std::vector<double> planned_rates;   // bit/s, positions the planner used
  int outage_slots = 0;  // users of the round below r_on bits
  int bcd_iters = 0;
  std::vector<double> bcd_objective;  // accepted planned min-rate per iteration
  bool bcd_converged = false;
  std::vector<ScaTrace> traj_traces;   // one per BCD iteration
  std::vector<ScaTrace> alloc_traces;  // empty for schemes with fixed resources
  Grid<Vec2> planned_positions;
  Grid<Vec2> true_positions;

  int slots() const { return flight.slots(); }
};

struct SchemeRun {
  SchemeId scheme = SchemeId::proposed;
  std::uint64_t seed = 0;
  UavPose start;
  int c_max = 1;
  int tau = 1;
  int horizon = 0;  // flight slots available
  std::vector<RoundResult> rounds;

  int slots_used() const;
  /// Start pose followed by every slot pose of every round.
  std::vector<UavPose> flight_path() const;
};

/// Absolute test |f_prev - f_curr| < eps.
bool bcd_converged(double f_prev, double f_curr, double eps);

/// Area centre at mid altitude.
UavPose start_pose(const ScenarioConfig& cfg);

SchemeRun run_scheme(const ScenarioConfig& cfg, SchemeId scheme, const World& world, const RunOptions& opts = {});
/// Builds the world from cfg.rng_seed first.
SchemeRun run_scheme(const ScenarioConfig& cfg, SchemeId scheme, const RunOptions& opts = {});

struct MetricsReport {
  double min_rate = 0.0;                  // bit/s over every served user
  std::vector<double> cluster_min_rates;  // bit/s, service order
  int near_cluster = -1;                  // round with the smallest reach
  double near_min_rate = 0.0;             // bit/s
  int far_cluster = -1;                   // round with the largest reach
  double far_min_rate = 0.0;              // bit/s
  int users = 0;
  int outage_users = 0;
  double outage_probability = 0.0;
  double rmse_x = 0.0;  // m, planner positions vs truth over served slots
  double rmse_y = 0.0;
  double rmse = 0.0;
  std::vector<double> speed;     // m/s per flight slot transition, 3D
  std::vector<double> speed_xy;  // m/s, horizontal part
  double max_speed = 0.0;
  int slots_used = 0;
  double planned_spread = 0.0;  // mean over rounds of (max - min) / mean planned rate
  int bcd_iters_max = 0;
  int sca_iters_max = 0;
};

MetricsReport collect_metrics(const ScenarioConfig& cfg, const SchemeRun& run);

/// Hard re-check of every flight, association and allocation limit plus the
/// flight budget and the return to the start pose. Empty when all hold.
std::vector<std::string> check_run(const ScenarioConfig& cfg, const SchemeRun& run, double tol = 1e-9);

/// Runs every scheme for every seed, one world per seed, on up to `threads`
/// workers (0: hardware concurrency). Results are ordered seed-major, then
/// by the order of `schemes`, independently of scheduling.
std::vector<SchemeRun> run_batch(const ScenarioConfig& cfg, const std::vector<SchemeId>& schemes,
                                 const std::vector<std::uint64_t>& seeds, const RunOptions& opts = {},
                                 unsigned threads = 0);

}  // namespace uavnet
