#pragma once
// Scenario configuration, physical constants, seeded randomness and the
// geometry vocabulary shared by every module.

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>

namespace uavnet {

inline constexpr double kSpeedOfLight = 3.0e8;  // rounded, as in the usual link-budget form
inline constexpr double kPi = 3.14159265358979323846;

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario file could not be parsed.
class FormatError : public Error {
 public:
  FormatError(const std::string& msg, int line)
      : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// A value violates a documented invariant.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& msg)
      : Error(field + ": " + msg), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// The requested service cannot be scheduled or solved.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// File-system failures (missing files, unwritable directories).
class IoError : public Error {
 public:
  using Error::Error;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

double norm(Vec2 v);
double norm_sq(Vec2 v);

struct Bounds {
  double lo = 0.0;
  double hi = 0.0;

  double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
  bool contains(double v) const { return v >= lo && v <= hi; }
  double width() const { return hi - lo; }
  friend bool operator==(const Bounds&, const Bounds&) = default;
};

/// Gauss-Markov mobility parameters. Stored with the scenario so a single
/// file reproduces a run.
struct GmParams {
  double memory_alpha = 0.85;
  double mean_speed = 1.5;   // m/s
  double speed_std = 0.3;    // m/s
  double mean_heading_drift = 0.0;  // rad per slot
  double heading_std = 0.3;  // rad
  double speed_max = 3.0;    // m/s

  void validate() const;
  friend bool operator==(const GmParams&, const GmParams&) = default;
};

struct ScenarioConfig {
  Bounds area_x{0.0, 100.0};
  Bounds area_y{0.0, 100.0};
  Bounds altitude{21.0, 100.0};
  int n_users = 10;
  double total_flight_time = 210.0;  // s
  double slot_duration = 1.0;        // s
  double s_xy_max = 30.0;            // m per slot
  double s_h_max = 15.0;             // m per slot
  double p_total_max = 0.01;         // W
  double p_user_max = 0.01;          // W
  double b_total_max = 20e6;         // Hz
  double carrier_freq = 900e6;       // Hz
  double noise_psd = 1.5848931924611108e-20;  // W/Hz (-168 dBm/Hz)
  int antennas = 4;
  double qos_bits = 200e6;           // bits per user per service round
  double los_b1 = 9.61;
  double los_b2 = 0.16;
  double los_threshold = 0.8;
  double eta_los = 1.0;
  double eta_nlos = 20.0;
  std::uint64_t rng_seed = 42;
  double sca_tol = 0.1;  // Mbit/s, absolute change of the min-rate
  int sca_max_iters = 15;

  // Artifact parameters the scenario needs beyond the radio model.
  GmParams gm{};
  int history_slots = 600;
  int predictor_states = 9;
  int c_max_override = 0;  // 0: derive from the capacity estimate
  int tau_override = 0;    // 0: derive from the capacity estimate
  int capacity_mc_samples = 2000;
  int kmeans_restarts = 20;

  /// Number of slots in the whole flight, T / delta.
  int horizon_slots() const;
  /// Throws ValidationError naming the first offending field.
  void validate() const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// 3D UAV position: horizontal coordinates plus altitude.
struct UavPose {
  Vec2 xy;
  double h = 0.0;

  bool within(const ScenarioConfig& cfg) const;
  friend bool operator==(const UavPose&, const UavPose&) = default;
};

struct SlotIndex {
  int cluster = 0;
  int slot = 0;
};

/// Parses the key/value scenario format. Throws FormatError with the line
/// number on syntax problems and ValidationError on invariant violations.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::filesystem::path& path);
/// Writes every key in linear SI units with round-trip precision.
std::string serialize_scenario(const ScenarioConfig& cfg);

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

using Rng = std::mt19937_64;

/// Deterministic stream for a seed.
Rng seeded_rng(std::uint64_t seed);
/// Independent sub-stream derived from a parent seed and a stream tag.
Rng sub_stream(std::uint64_t seed, std::uint64_t stream);

}  // namespace uavnet
