#pragma once
// Air-to-ground channel: probabilistic LoS, free-space path loss with a hard
// LoS/NLoS excess factor, MRT gain and the Shannon rate.

#include <complex>
#include <span>
#include <vector>

#include "uavnet/scenario.hpp"

namespace uavnet {

struct LinkGeometry {
  double horizontal_dist = 0.0;  // m
  double dist_3d = 0.0;          // m
  double elevation_deg = 0.0;
};

enum class Regime { los, nlos };

struct LinkBudget {
  double p_los = 0.0;
  double path_loss = 0.0;  // linear
  double gain = 0.0;       // linear, ||h||^2 / PL
  Regime regime = Regime::los;
};

LinkGeometry geometry(const UavPose& pose, Vec2 user);

/// 1 / (1 + b1 exp(-b2 (theta - b1))), theta in degrees.
double los_probability(double elevation_deg, double b1, double b2);

Regime regime_for(double elevation_deg, const ScenarioConfig& cfg);
double eta_for(Regime r, const ScenarioConfig& cfg);

/// (4 pi f_c d / c)^2
double free_space_factor(double dist_3d, double carrier_freq);

LinkBudget effective_gain(const LinkGeometry& geom, const ScenarioConfig& cfg, double h_norm_sq);
LinkBudget effective_gain(const LinkGeometry& geom, const ScenarioConfig& cfg,
                          std::span<const std::complex<double>> h);

/// b log2(1 + p g / (b N_o)) in bit/s; 0 when b == 0.
double rate(double b, double p, double gain, const ScenarioConfig& cfg);

/// ||h||^2 for one draw of h ~ CN(0, I_M).
double draw_fading_norm_sq(Rng& rng, int antennas);

/// Realized small-scale fading ||h||^2 per user and absolute slot. Drawn once
/// per scenario from its own sub-stream so every scheme sees the same channel.
class FadingField {
 public:
  FadingField() = default;
  FadingField(int users, int slots, int antennas, Rng& rng);
  /// Constant field (all entries equal), useful for tests.
  static FadingField constant(int users, int slots, double value);

  double at(int user, int slot) const;
  int users() const { return users_; }
  int slots() const { return slots_; }

 private:
  int users_ = 0;
  int slots_ = 0;
  std::vector<double> values_;
};

/// Gain of the link between pose and user for a given fading draw.
double link_gain(const UavPose& pose, Vec2 user, double h_norm_sq, const ScenarioConfig& cfg);

}  // namespace uavnet
