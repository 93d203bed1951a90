#include "uavnet/channel.hpp"

#include <cmath>

namespace uavnet {

LinkGeometry geometry(const UavPose& pose, Vec2 user) {
  LinkGeometry g;
  g.horizontal_dist = norm(pose.xy - user);
  g.dist_3d = std::hypot(g.horizontal_dist, pose.h);
  g.elevation_deg = g.dist_3d > 0.0 ? std::asin(pose.h / g.dist_3d) * 180.0 / kPi : 90.0;
  return g;
}

double los_probability(double elevation_deg, double b1, double b2) {
  return 1.0 / (1.0 + b1 * std::exp(-b2 * (elevation_deg - b1)));
}

Regime regime_for(double elevation_deg, const ScenarioConfig& cfg) {
  return los_probability(elevation_deg, cfg.los_b1, cfg.los_b2) >= cfg.los_threshold ? Regime::los : Regime::nlos;
}

double eta_for(Regime r, const ScenarioConfig& cfg) { return r == Regime::los ? cfg.eta_los : cfg.eta_nlos; }

double free_space_factor(double dist_3d, double carrier_freq) {
  const double a = 4.0 * kPi * carrier_freq * dist_3d / kSpeedOfLight;
  return a * a;
}

LinkBudget effective_gain(const LinkGeometry& geom, const ScenarioConfig& cfg, double h_norm_sq) {
  LinkBudget lb;
  lb.p_los = los_probability(geom.elevation_deg, cfg.los_b1, cfg.los_b2);
  lb.regime = lb.p_los >= cfg.los_threshold ? Regime::los : Regime::nlos;
  lb.path_loss = eta_for(lb.regime, cfg) * free_space_factor(geom.dist_3d, cfg.carrier_freq);
  lb.gain = h_norm_sq / lb.path_loss;
  return lb;
}

LinkBudget effective_gain(const LinkGeometry& geom, const ScenarioConfig& cfg,
                          std::span<const std::complex<double>> h) {
  double n2 = 0.0;
  for (const auto& v : h) n2 += std::norm(v);
  return effective_gain(geom, cfg, n2);
}

double rate(double b, double p, double gain, const ScenarioConfig& cfg) {
  if (b <= 0.0) return 0.0;
  return b * std::log2(1.0 + p * gain / (b * cfg.noise_psd));
}

double draw_fading_norm_sq(Rng& rng, int antennas) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  double acc = 0.0;
  for (int m = 0; m < antennas; ++m) {
    const double re = nd(rng);
    const double im = nd(rng);
    acc += re * re + im * im;
  }
  return acc;
}

FadingField::FadingField(int users, int slots, int antennas, Rng& rng)
    : users_(users), slots_(slots), values_(static_cast<std::size_t>(users) * slots) {
  for (auto& v : values_) v = draw_fading_norm_sq(rng, antennas);
}

FadingField FadingField::constant(int users, int slots, double value) {
  FadingField f;
  f.users_ = users;
  f.slots_ = slots;
  f.values_.assign(static_cast<std::size_t>(users) * slots, value);
  return f;
}

double FadingField::at(int user, int slot) const {
  if (user < 0 || user >= users_ || slot < 0 || slot >= slots_) throw Error("fading index out of range");
  return values_[static_cast<std::size_t>(user) * slots_ + slot];
}

double link_gain(const UavPose& pose, Vec2 user, double h_norm_sq, const ScenarioConfig& cfg) {
  return effective_gain(geometry(pose, user), cfg, h_norm_sq).gain;
}

}  // namespace uavnet
