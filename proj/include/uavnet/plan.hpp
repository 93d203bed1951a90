#pragma once
// Per-round planning data shared by the trajectory and allocation solvers:
// the cluster's users as the planner sees them, the UAV flight and the
// per-slot resources, plus rate evaluation on top of them.

#include <vector>

#include "uavnet/assoc.hpp"
#include "uavnet/channel.hpp"
#include "uavnet/grid.hpp"
#include "uavnet/scenario.hpp"

namespace uavnet {

struct Trajectory {
  std::vector<UavPose> poses;  // one per slot of the round

  int slots() const { return static_cast<int>(poses.size()); }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct AllocationTable {
  Grid<double> b;  // Hz
  Grid<double> p;  // W

  friend bool operator==(const AllocationTable&, const AllocationTable&) = default;
};

/// Users of one service round: positions per slot and the realized fading.
struct ClusterView {
  std::vector<int> users;  // global user ids
  Grid<Vec2> positions;    // users x slots
  Grid<double> fading;     // users x slots, ||h||^2

  int size() const { return static_cast<int>(users.size()); }
  int slots() const { return positions.cols; }
};

/// Where the flight of a round may go: the pose before slot 0, an optional
/// pose the last slot must equal, and an optional fixed altitude.
struct FlightLimits {
  UavPose prev;
  bool has_closure = false;
  UavPose closure;
  bool fixed_altitude = false;
  double altitude = 0.0;
};

/// Rate of user n in slot t (bit/s), zero when unassociated.
double slot_rate(const ScenarioConfig& cfg, const ClusterView& view, const Trajectory& traj,
                 const AssociationMatrix& assoc, const AllocationTable& alloc, int n, int t);

/// Per-user (1/T_l) sum_t rate, bit/s.
std::vector<double> user_rates(const ScenarioConfig& cfg, const ClusterView& view, const Trajectory& traj,
                               const AssociationMatrix& assoc, const AllocationTable& alloc);

double min_rate(const ScenarioConfig& cfg, const ClusterView& view, const Trajectory& traj,
                const AssociationMatrix& assoc, const AllocationTable& alloc);

/// Link gain ||h||^2 / PL per (user, slot) for a given flight.
Grid<double> link_gains(const ScenarioConfig& cfg, const ClusterView& view, const Trajectory& traj);

/// Per-user (1/T_l) sum_t b log2(1 + p g / (b N_o)) over associated slots.
std::vector<double> user_rates(const ScenarioConfig& cfg, const Grid<double>& gains, const AssociationMatrix& assoc,
                               const AllocationTable& alloc);

/// Largest violation of box, speed, entry, closure and altitude limits (m).
double flight_violation(const ScenarioConfig& cfg, const Trajectory& traj, const FlightLimits& lim);

/// Largest violation of per-user/per-slot/total power and bandwidth limits,
/// relative to the corresponding maximum; unassociated entries must be 0.
double allocation_violation(const ScenarioConfig& cfg, const AssociationMatrix& assoc, const AllocationTable& alloc);

}  // namespace uavnet
