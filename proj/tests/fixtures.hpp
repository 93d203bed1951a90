#pragma once

#include <vector>

#include "uavnet/plan.hpp"

namespace fx {

using namespace uavnet;

inline ClusterView static_view(const std::vector<Vec2>& users, int slots, double h2 = 4.0) {
  ClusterView v;
  const int n = static_cast<int>(users.size());
  v.positions = Grid<Vec2>(n, slots);
  v.fading = Grid<double>(n, slots, h2);
  for (int i = 0; i < n; ++i) {
    v.users.push_back(i);
    for (int t = 0; t < slots; ++t) v.positions(i, t) = users[i];
  }
  return v;
}

inline AssociationMatrix full_assoc(int users, int slots) {
  AssociationMatrix a;
  a.j = Grid<std::uint8_t>(users, slots, 1);
  a.tau_req = slots;
  return a;
}

inline AllocationTable equal_split(const ScenarioConfig& cfg, const AssociationMatrix& a) {
  AllocationTable r{Grid<double>(a.users(), a.slots()), Grid<double>(a.users(), a.slots())};
  for (int t = 0; t < a.slots(); ++t) {
    const int k = a.count_slot(t);
    for (int n = 0; n < a.users(); ++n)
      if (a(n, t)) {
        r.b(n, t) = cfg.b_total_max / k;
        r.p(n, t) = std::min(cfg.p_user_max, cfg.p_total_max / k);
      }
  }
  return r;
}

inline Trajectory hover(UavPose p, int slots) { return Trajectory{std::vector<UavPose>(slots, p)}; }

}  // namespace fx
