#include "uavnet/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

namespace uavnet {

double norm(Vec2 v) { return std::hypot(v.x, v.y); }
double norm_sq(Vec2 v) { return v.x * v.x + v.y * v.y; }

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

namespace {

void require(bool ok, const char* field, const std::string& msg) {
  if (!ok) throw ValidationError(field, msg);
}

bool finite_all(std::initializer_list<double> vs) {
  for (double v : vs)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

void GmParams::validate() const {
  require(memory_alpha >= 0.0 && memory_alpha <= 1.0, "gm_alpha", "must lie in [0, 1]");
  require(speed_std >= 0.0, "gm_speed_std", "must be >= 0");
  require(heading_std >= 0.0, "gm_heading_std", "must be >= 0");
  require(mean_speed >= 0.0 && mean_speed <= speed_max, "gm_mean_speed",
          "must satisfy 0 <= mean_speed <= speed_max");
  require(speed_max > 0.0, "gm_speed_max", "must be > 0");
  require(finite_all({memory_alpha, mean_speed, speed_std, mean_heading_drift, heading_std, speed_max}),
          "gm", "parameters must be finite");
}

int ScenarioConfig::horizon_slots() const {
  return static_cast<int>(std::llround(total_flight_time / slot_duration));
}

void ScenarioConfig::validate() const {
  require(finite_all({area_x.lo, area_x.hi}) && area_x.lo < area_x.hi, "area_x_bounds",
          "need finite x_min < x_max");
  require(finite_all({area_y.lo, area_y.hi}) && area_y.lo < area_y.hi, "area_y_bounds",
          "need finite y_min < y_max");
  require(finite_all({altitude.lo, altitude.hi}) && altitude.lo < altitude.hi, "altitude_bounds",
          "need finite H_min < H_max");
  require(altitude.lo > 0.0, "altitude_bounds", "H_min must be > 0");
  require(n_users >= 1, "n_users", "must be >= 1");
  require(std::isfinite(slot_duration) && slot_duration > 0.0, "slot_duration", "must be > 0");
  require(std::isfinite(total_flight_time) && total_flight_time >= slot_duration, "total_flight_time",
          "must be >= slot_duration");
  {
    const double ratio = total_flight_time / slot_duration;
    require(std::abs(ratio - std::round(ratio)) <= 1e-9 * ratio, "total_flight_time",
            "must be an integer multiple of slot_duration");
  }
  require(antennas >= 1, "antennas", "must be >= 1");
  require(std::isfinite(s_xy_max) && s_xy_max >= 0.0, "s_xy_max", "must be >= 0");
  require(std::isfinite(s_h_max) && s_h_max >= 0.0, "s_h_max", "must be >= 0");
  require(std::isfinite(p_total_max) && p_total_max > 0.0, "p_total_max", "must be > 0");
  require(std::isfinite(p_user_max) && p_user_max > 0.0, "p_user_max", "must be > 0");
  require(p_user_max <= p_total_max, "p_user_max", "must not exceed p_total_max");
  require(std::isfinite(b_total_max) && b_total_max > 0.0, "b_total_max", "must be > 0");
  require(std::isfinite(carrier_freq) && carrier_freq > 0.0, "carrier_freq", "must be > 0");
  require(std::isfinite(noise_psd) && noise_psd > 0.0, "noise_psd", "must be > 0");
  require(std::isfinite(qos_bits) && qos_bits > 0.0, "qos_bits", "must be > 0");
  require(std::isfinite(los_b1) && std::isfinite(los_b2), "los_b1", "must be finite");
  require(los_threshold > 0.0 && los_threshold < 1.0, "los_threshold", "must lie in (0, 1)");
  require(std::isfinite(eta_los) && eta_los > 0.0, "eta_los", "must be > 0");
  require(std::isfinite(eta_nlos) && eta_nlos > 0.0, "eta_nlos", "must be > 0");
  require(eta_los <= eta_nlos, "eta_los", "LoS must not attenuate more than NLoS");
  require(std::isfinite(sca_tol) && sca_tol > 0.0, "sca_tol", "must be > 0");
  require(sca_max_iters >= 1, "sca_max_iters", "must be >= 1");
  require(history_slots >= 3, "history_slots", "must be >= 3");
  require(predictor_states >= 2, "predictor_states", "must be >= 2");
  require(c_max_override >= 0, "c_max_override", "must be >= 0");
  require(tau_override >= 0, "tau_override", "must be >= 0");
  require(capacity_mc_samples >= 1, "capacity_mc_samples", "must be >= 1");
  require(kmeans_restarts >= 1, "kmeans_restarts", "must be >= 1");
  gm.validate();
}

bool UavPose::within(const ScenarioConfig& cfg) const {
  return cfg.area_x.contains(xy.x) && cfg.area_y.contains(xy.y) && cfg.altitude.contains(h);
}

namespace {

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_values(const std::string& v) {
  std::string s = v;
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& tok, int line) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw FormatError("expected a number, got '" + tok + "'", line);
  return v;
}

long long parse_int(const std::string& tok, int line) {
  long long v = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw FormatError("expected an integer, got '" + tok + "'", line);
  return v;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Field {
  std::string key;
  std::function<void(ScenarioConfig&, const std::vector<std::string>&, int)> set;
  std::function<std::string(const ScenarioConfig&)> get;  // empty: input-only alias
};

void want(const std::vector<std::string>& vals, std::size_t n, const std::string& key, int line) {
  if (vals.size() != n)
    throw FormatError(key + " expects " + std::to_string(n) + " value(s), got " + std::to_string(vals.size()),
                      line);
}

Field real(std::string key, double ScenarioConfig::*m) {
  return {key,
          [m, key](ScenarioConfig& c, const std::vector<std::string>& v, int line) {
            want(v, 1, key, line);
            c.*m = parse_double(v[0], line);
          },
          [m](const ScenarioConfig& c) { return fmt_double(c.*m); }};
}

Field integer(std::string key, int ScenarioConfig::*m) {
  return {key,
          [m, key](ScenarioConfig& c, const std::vector<std::string>& v, int line) {
            want(v, 1, key, line);
            c.*m = static_cast<int>(parse_int(v[0], line));
          },
          [m](const ScenarioConfig& c) { return std::to_string(c.*m); }};
}

Field bounds(std::string key, Bounds ScenarioConfig::*m) {
  return {key,
          [m, key](ScenarioConfig& c, const std::vector<std::string>& v, int line) {
            want(v, 2, key, line);
            c.*m = Bounds{parse_double(v[0], line), parse_double(v[1], line)};
          },
          [m](const ScenarioConfig& c) { return fmt_double((c.*m).lo) + ", " + fmt_double((c.*m).hi); }};
}

Field gm_real(std::string key, double GmParams::*m) {
  return {key,
          [m, key](ScenarioConfig& c, const std::vector<std::string>& v, int line) {
            want(v, 1, key, line);
            c.gm.*m = parse_double(v[0], line);
          },
          [m](const ScenarioConfig& c) { return fmt_double(c.gm.*m); }};
}

Field dbm_alias(std::string key, double ScenarioConfig::*m, double offset_db = 0.0) {
  return {key,
          [m, key, offset_db](ScenarioConfig& c, const std::vector<std::string>& v, int line) {
            want(v, 1, key, line);
            c.*m = dbm_to_watts(parse_double(v[0], line) + offset_db);
          },
          {}};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(bounds("area_x_bounds", &ScenarioConfig::area_x));
    f.push_back(bounds("area_y_bounds", &ScenarioConfig::area_y));
    f.push_back(bounds("altitude_bounds", &ScenarioConfig::altitude));
    f.push_back(integer("n_users", &ScenarioConfig::n_users));
    f.push_back(real("total_flight_time", &ScenarioConfig::total_flight_time));
    f.push_back(real("slot_duration", &ScenarioConfig::slot_duration));
    f.push_back(real("s_xy_max", &ScenarioConfig::s_xy_max));
    f.push_back(real("s_h_max", &ScenarioConfig::s_h_max));
    f.push_back(real("p_total_max", &ScenarioConfig::p_total_max));
    f.push_back(real("p_user_max", &ScenarioConfig::p_user_max));
    f.push_back(real("b_total_max", &ScenarioConfig::b_total_max));
    f.push_back(real("carrier_freq", &ScenarioConfig::carrier_freq));
    f.push_back(real("noise_psd", &ScenarioConfig::noise_psd));
    f.push_back(integer("antennas", &ScenarioConfig::antennas));
    f.push_back(real("qos_bits", &ScenarioConfig::qos_bits));
    f.push_back(real("los_b1", &ScenarioConfig::los_b1));
    f.push_back(real("los_b2", &ScenarioConfig::los_b2));
    f.push_back(real("los_threshold", &ScenarioConfig::los_threshold));
    f.push_back(real("eta_los", &ScenarioConfig::eta_los));
    f.push_back(real("eta_nlos", &ScenarioConfig::eta_nlos));
    f.push_back({"rng_seed",
                 [](ScenarioConfig& c, const std::vector<std::string>& v, int line) {
                   want(v, 1, "rng_seed", line);
                   std::uint64_t s = 0;
                   const auto* end = v[0].data() + v[0].size();
                   auto [ptr, ec] = std::from_chars(v[0].data(), end, s);
                   if (ec != std::errc{} || ptr != end)
                     throw FormatError("rng_seed must be a non-negative integer, got '" + v[0] + "'", line);
                   c.rng_seed = s;
                 },
                 [](const ScenarioConfig& c) { return std::to_string(c.rng_seed); }});
    f.push_back(real("sca_tol", &ScenarioConfig::sca_tol));
    f.push_back(integer("sca_max_iters", &ScenarioConfig::sca_max_iters));
    f.push_back(gm_real("gm_alpha", &GmParams::memory_alpha));
    f.push_back(gm_real("gm_mean_speed", &GmParams::mean_speed));
    f.push_back(gm_real("gm_speed_std", &GmParams::speed_std));
    f.push_back(gm_real("gm_heading_drift", &GmParams::mean_heading_drift));
    f.push_back(gm_real("gm_heading_std", &GmParams::heading_std));
    f.push_back(gm_real("gm_speed_max", &GmParams::speed_max));
    f.push_back(integer("history_slots", &ScenarioConfig::history_slots));
    f.push_back(integer("predictor_states", &ScenarioConfig::predictor_states));
    f.push_back(integer("c_max_override", &ScenarioConfig::c_max_override));
    f.push_back(integer("tau_override", &ScenarioConfig::tau_override));
    f.push_back(integer("capacity_mc_samples", &ScenarioConfig::capacity_mc_samples));
    f.push_back(integer("kmeans_restarts", &ScenarioConfig::kmeans_restarts));
    // Logarithmic aliases accepted on input only.
    f.push_back(dbm_alias("p_total_max_dbm", &ScenarioConfig::p_total_max));
    f.push_back(dbm_alias("p_user_max_dbm", &ScenarioConfig::p_user_max));
    f.push_back(dbm_alias("noise_psd_dbm_hz", &ScenarioConfig::noise_psd));
    return f;
  }();
  return table;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text) {
  ScenarioConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw FormatError("expected 'key = value'", line);
    const std::string key = trim(std::string_view(s).substr(0, eq));
    const std::string value = trim(std::string_view(s).substr(eq + 1));
    if (key.empty()) throw FormatError("empty key", line);
    const auto& table = fields();
    auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
    if (it == table.end()) throw FormatError("unknown key '" + key + "'", line);
    it->set(cfg, split_values(value), line);
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string serialize_scenario(const ScenarioConfig& cfg) {
  std::string out = "# uavnet scenario (SI units, linear scale)\n";
  for (const auto& f : fields()) {
    if (!f.get) continue;
    out += f.key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng seeded_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

Rng sub_stream(std::uint64_t seed, std::uint64_t stream) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

}  // namespace uavnet
