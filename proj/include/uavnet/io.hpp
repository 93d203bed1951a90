#pragma once
// Run directories: manifest, per-case results and the figure data series.
//
// Layout of a run directory:
//   manifest.json, scenario.cfg, summary.csv
//   [power-<dBm>/][slots-<n>/]<scheme>/seed-<n>/
//       metrics.json, trajectory.csv, convergence.csv, rounds/round-<i>.csv

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uavnet/sim.hpp"

namespace uavnet {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunManifest {
  std::string scenario;  // path as given
  std::vector<std::string> schemes;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  std::string version = kToolVersion;
  std::string timestamp;  // UTC, ISO 8601
  std::vector<double> power_dbm;  // empty: scenario power
  std::vector<int> service_slots;  // empty: planner serving times

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

std::string manifest_json(const RunManifest& m);
/// Throws IoError when missing, FormatError when malformed.
RunManifest read_manifest(const std::filesystem::path& run_dir);

/// SOURCE_DATE_EPOCH when set, otherwise the wall clock.
std::string utc_timestamp();

/// "7..9" -> {7, 8, 9}; "1,4,5" -> {1, 4, 5}; mixes allowed. Throws ValidationError.
std::vector<std::uint64_t> parse_seed_list(const std::string& text, const std::string& field = "seeds");
/// Same syntax for integers >= 0.
std::vector<int> parse_int_list(const std::string& text, const std::string& field);
std::vector<double> parse_real_list(const std::string& text, const std::string& field);

/// One executed scheme x seed (x power x serving-slot) combination.
struct CaseKey {
  std::optional<double> power_dbm;
  std::optional<int> service_slots;
  SchemeId scheme = SchemeId::proposed;
  std::uint64_t seed = 0;
};

std::filesystem::path case_dir(const CaseKey& key);

/// Writes metrics.json, trajectory.csv, convergence.csv and rounds/ under dir.
void write_case(const std::filesystem::path& dir, const ScenarioConfig& cfg, const CaseKey& key,
                const SchemeRun& run);

struct SummaryRow {
  CaseKey key;
  MetricsReport metrics;
  std::vector<int> round_sizes;
  int violations = 0;
};

inline constexpr const char* kSummaryHeader =
    "power_dbm,service_slots,scheme,seed,min_rate_bps,near_min_rate_bps,far_min_rate_bps,last_min_rate_bps,"
    "users,outage_users,outage_probability,slots_used,rounds,rmse_m,max_speed_mps,planned_spread,bcd_iters_max,"
    "sca_iters_max,violations";

std::string summary_line(const SummaryRow& row);
void write_summary(const std::filesystem::path& file, const std::vector<SummaryRow>& rows);

/// Figure data series derived from a completed run directory.
struct PlotdataOptions {
  std::optional<SchemeId> scheme;  // convergence/trajectory/speed case; default: first of the manifest
  std::optional<std::uint64_t> seed;
};

/// Writes convergence.csv, trajectory_3d.csv, speed.csv, outage_vs_slots.csv and
/// min_rate_vs_power.csv into out_dir; returns their paths. Throws IoError
/// naming every missing input.
std::vector<std::filesystem::path> write_plotdata(const std::filesystem::path& run_dir,
                                                  const std::filesystem::path& out_dir,
                                                  const PlotdataOptions& opts = {});

std::string read_text(const std::filesystem::path& file);
void write_text(const std::filesystem::path& file, const std::string& text);

}  // namespace uavnet
