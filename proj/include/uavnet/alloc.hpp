#pragma once
// Bandwidth and power allocation for one service round by successive convex
// approximation. Slack variables split the rate b log2(1 + SNR) into
// psi <= log2(1 + Psi) (exponential cone) and Psi <= p g / (b N_o), and the
// per-user throughput sum_t b psi is inner-approximated by a difference of
// convex functions linearized at the previous iterate.

#include <span>
#include <vector>

#include "uavnet/plan.hpp"
#include "uavnet/traj.hpp"

namespace uavnet {

struct SlackState {
  Grid<double> snr;  // Psi
  Grid<double> se;   // psi, bit/s/Hz
  AllocationTable expansion;
};

/// Equal split of B and P_t among the users associated in each slot.
AllocationTable init_allocation(const ScenarioConfig& cfg, const AssociationMatrix& assoc);

/// Slacks tight at alloc: Psi = p g / (b N_o), psi = log2(1 + Psi).
SlackState tight_slacks(const ScenarioConfig& cfg, const AssociationMatrix& assoc, const Grid<double>& gains,
                        const AllocationTable& alloc);

/// sum_t [2 (Bh + sh)(B + s) - (Bh + sh)^2] - sum_t (B^2 + s^2) - 2 T Gamma: the
/// linearized throughput constraint of one user is "margin >= 0". Units must
/// agree (B in Hz with Gamma in bit/s, or MHz with Mbit/s).
double dc_bandwidth_margin(std::span<const double> b_hat, std::span<const double> se_hat, std::span<const double> b,
                           std::span<const double> se, int slots, double gamma);

struct AllocStep {
  AllocationTable alloc;
  SlackState state;
  double gamma = 0.0;            // bit/s, true min-rate of the tightened point
  double gamma_surrogate = 0.0;  // bit/s, optimum of the convex step
  bool qos_met = false;          // gamma T_l delta >= r_on
  bool stalled = false;
};

AllocStep solve_allocation_step(const ScenarioConfig& cfg, const SlackState& state, const AssociationMatrix& assoc,
                                const Grid<double>& gains);

/// Iterates from the equal split until the min-rate gain drops below sca_tol
/// or sca_max_iters steps were made; returns the best point.
AllocationTable sca_allocation(const ScenarioConfig& cfg, const AssociationMatrix& assoc, const Grid<double>& gains,
                               ScaTrace* trace = nullptr);

/// Same, starting from `init`; falls back to the equal split when `init` does
/// not fit the association (missing bandwidth on an associated entry or a
/// violated limit).
AllocationTable sca_allocation(const ScenarioConfig& cfg, const AssociationMatrix& assoc, const Grid<double>& gains,
                               const AllocationTable& init, ScaTrace* trace = nullptr);

}  // namespace uavnet
