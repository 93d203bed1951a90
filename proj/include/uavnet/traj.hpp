#pragma once
// Trajectory optimization for one service round by successive convex
// approximation: the rate of each associated user-slot is replaced by its
// tangent in the squared UAV-user distance, which is a global under-estimator
// because log2(1 + c/u) is convex in u.

#include <vector>

#include "uavnet/plan.hpp"

namespace uavnet {

struct TaylorExpansion {
  double c1 = 0.0;    // m^2, squared 3D distance at the expansion point
  double c2 = 0.0;    // m^2, SNR * squared distance (regime frozen)
  double grad = 0.0;  // d f / d(dist^2), bit/s/Hz per m^2
  double f0 = 0.0;    // bit/s/Hz at the expansion point
  Regime regime = Regime::los;

  /// Spectral efficiency with the regime frozen, at squared distance u.
  double value(double u) const;
  /// f0 + grad (u - c1).
  double surrogate(double u) const;
};

/// Expansion per (user, slot); unassociated or zero-resource entries have
/// c2 = grad = f0 = 0.
Grid<TaylorExpansion> taylor_bound(const ScenarioConfig& cfg, const ClusterView& view, const Trajectory& traj0,
                                   const AssociationMatrix& assoc, const AllocationTable& alloc);

TaylorExpansion expand(const ScenarioConfig& cfg, const UavPose& pose, Vec2 user, double h_norm_sq, double b,
                       double p);

/// Circle of radius min(V T_l delta / 2pi, rho_u / 2) around centre at mid
/// altitude, clamped to the area; hovering at centre when consecutive
/// waypoints are further apart than one slot allows.
Trajectory circle_trajectory(const ScenarioConfig& cfg, Vec2 centre, double rho_u, int slots);

/// Circle around the users' centre at slot 0, then made reachable from
/// lim.prev (and able to reach lim.closure) by per-slot projection.
Trajectory initial_trajectory(const ScenarioConfig& cfg, const ClusterView& view, const FlightLimits& lim);

/// Walks the targets slot by slot, moving each as little as possible so the
/// result satisfies box, speed, entry, closure and altitude limits. Throws
/// InfeasibleError when the closure pose cannot be reached in time.
Trajectory project_flight(const ScenarioConfig& cfg, const std::vector<UavPose>& targets, const FlightLimits& lim);

struct TrajStep {
  Trajectory traj;
  double gamma_lb = 0.0;  // bit/s, surrogate optimum
  bool stalled = false;
};

TrajStep solve_trajectory_step(const ScenarioConfig& cfg, const ClusterView& view, const Trajectory& traj0,
                               const AssociationMatrix& assoc, const AllocationTable& alloc,
                               const FlightLimits& lim);

struct ScaTrace {
  std::vector<double> objective;  // accepted true min-rate per iteration, bit/s; [0] is the start
  std::vector<double> surrogate;  // surrogate optimum per iteration, bit/s
  int iterations = 0;
  bool converged = false;
  bool stalled = false;
};

/// Repeats expansion and convex step until the accepted min-rate changes by
/// less than sca_tol or sca_max_iters is reached. Steps that lower the true
/// min-rate are backtracked toward the current iterate.
Trajectory sca_trajectory(const ScenarioConfig& cfg, const ClusterView& view, const Trajectory& init,
                          const AssociationMatrix& assoc, const AllocationTable& alloc, const FlightLimits& lim,
                          ScaTrace* trace = nullptr);

}  // namespace uavnet
