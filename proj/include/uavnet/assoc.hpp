#pragma once
// Exact per-cluster user association: binary J maximizing the minimum
// average associated rate under connectivity and per-slot capacity limits.

#include <cstdint>

#include "uavnet/grid.hpp"

namespace uavnet {

struct AssociationMatrix {
  Grid<std::uint8_t> j;  // users x slots
  int tau_req = 0;

  int users() const { return j.rows; }
  int slots() const { return j.cols; }
  bool operator()(int n, int t) const { return j(n, t) != 0; }
  int count_user(int n) const;
  int count_slot(int t) const;
};

struct AssocResult {
  AssociationMatrix assoc;
  double gamma = 0.0;     // bit/s, min_n (1/T_l) sum_t j rate
  bool qos_met = false;   // gamma * T_l * delta >= r_on
  long nodes = 0;         // branch-and-bound nodes explored
  bool proven_optimal = true;
  double bound_gap = 0.0; // bit/s between the best open bound and gamma when not proven
};

/// Connectivity needs N_l tau <= C_max T_l; throws InfeasibleError naming the
/// constraint otherwise. Exact up to `max_nodes` search nodes; past that the
/// best solution found is returned with proven_optimal = false. Among optimal
/// solutions the first met in the fixed search order is kept.
AssocResult solve_association(const Grid<double>& rates, int tau, int c_max, double r_on, double slot_duration,
                              long max_nodes = 20000);

/// min_n (1/T_l) sum_t j(n,t) rate(n,t)
double association_gamma(const Grid<double>& rates, const Grid<std::uint8_t>& j);

}  // namespace uavnet
