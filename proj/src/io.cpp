#include "uavnet/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "csv.hpp"
#include "json.hpp"

namespace uavnet {

namespace csv {

std::string num(double v) {
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace csv

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

// Comma-separated items, each a single value or an inclusive "a..b" range.
template <class T, class Parse>
std::vector<T> parse_list(const std::string& text, const std::string& field, Parse parse, bool ranges) {
  std::vector<T> out;
  if (trim(text).empty()) throw ValidationError(field, "empty list");
  for (const std::string& raw : csv::split(text)) {
    const std::string item = trim(raw);
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse(item));
      continue;
    }
    if (!ranges) throw ValidationError(field, "ranges are not allowed: '" + item + "'");
    const T lo = parse(item.substr(0, dots));
    const T hi = parse(item.substr(dots + 2));
    if (hi < lo) throw ValidationError(field, "empty range '" + item + "'");
    if (hi - lo > 100000) throw ValidationError(field, "range too long '" + item + "'");
    for (T v = lo; v <= hi; ++v) out.push_back(v);
  }
  return out;
}

std::uint64_t parse_u64(const std::string& s, const std::string& field) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ValidationError(field, "not a non-negative integer: '" + s + "'");
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ValidationError(field, "out of range: '" + s + "'");
  }
}

json rates_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

std::string metrics_text(const ScenarioConfig& cfg, const CaseKey& key, const SchemeRun& run) {
  const MetricsReport m = collect_metrics(cfg, run);
  json j;
  j["scheme"] = std::string(scheme_name(run.scheme));
  j["seed"] = run.seed;
  j["power_dbm"] = watts_to_dbm(cfg.p_total_max);
  j["service_slots"] = key.service_slots.value_or(0);
  j["c_max"] = run.c_max;
  j["tau"] = run.tau;
  j["horizon_slots"] = run.horizon;
  j["slots_used"] = m.slots_used;
  j["min_rate_bps"] = m.min_rate;
  j["near_cluster"] = m.near_cluster;
  j["near_min_rate_bps"] = m.near_min_rate;
  j["far_cluster"] = m.far_cluster;
  j["far_min_rate_bps"] = m.far_min_rate;
  j["cluster_min_rates_bps"] = rates_json(m.cluster_min_rates);
  j["users"] = m.users;
  j["outage_users"] = m.outage_users;
  j["outage_probability"] = m.outage_probability;
  j["rmse_m"] = {{"x", m.rmse_x}, {"y", m.rmse_y}, {"total", m.rmse}};
  j["max_speed_mps"] = m.max_speed;
  j["planned_spread"] = m.planned_spread;
  j["bcd_iters_max"] = m.bcd_iters_max;
  j["sca_iters_max"] = m.sca_iters_max;
  json rounds = json::array();
  for (const auto& r : run.rounds) {
    json o;
    o["cluster"] = r.cluster;
    o["users"] = r.users;
    o["start_slot"] = r.start_slot;
    o["slots"] = r.slots();
    o["travel_slots"] = r.travel_slots;
    o["tau_req"] = r.tau_req;
    o["reach_m"] = r.reach;
    o["min_rate_bps"] = r.min_rate;
    o["per_user_rates_bps"] = rates_json(r.per_user_rates);
    o["planned_rates_bps"] = rates_json(r.planned_rates);
    o["outage_users"] = r.outage_slots;
    o["bcd_iters"] = r.bcd_iters;
    o["bcd_converged"] = r.bcd_converged;
    rounds.push_back(std::move(o));
  }
  j["rounds"] = std::move(rounds);
  j["violations"] = check_run(cfg, run);
  return j.dump(2) + "\n";
}

std::string trajectory_text(const ScenarioConfig& cfg, const SchemeRun& run) {
  std::string out = "slot,round,x_m,y_m,h_m,speed_mps,speed_xy_mps\n";
  const auto path = run.flight_path();
  std::vector<int> owner{-1};
  for (std::size_t i = 0; i < run.rounds.size(); ++i)
    for (int t = 0; t < run.rounds[i].slots(); ++t) owner.push_back(static_cast<int>(i));
  for (std::size_t i = 0; i < path.size(); ++i) {
    double v = 0.0, vxy = 0.0;
    if (i > 0) {
      const Vec2 d = path[i].xy - path[i - 1].xy;
      const double dh = path[i].h - path[i - 1].h;
      vxy = norm(d) / cfg.slot_duration;
      v = std::sqrt(norm_sq(d) + dh * dh) / cfg.slot_duration;
    }
    out += std::to_string(i) + "," + std::to_string(owner[i]) + "," + csv::num(path[i].xy.x) + "," +
           csv::num(path[i].xy.y) + "," + csv::num(path[i].h) + "," + csv::num(v) + "," + csv::num(vxy) + "\n";
  }
  return out;
}

std::string convergence_text(const SchemeRun& run) {
  std::string out = "round,stage,bcd_iter,iteration,objective_bps\n";
  auto line = [&](std::size_t r, const char* stage, std::size_t b, std::size_t i, double v) {
    out += std::to_string(r) + "," + stage + "," + std::to_string(b) + "," + std::to_string(i) + "," + csv::num(v) + "\n";
  };
  for (std::size_t r = 0; r < run.rounds.size(); ++r) {
    const auto& rr = run.rounds[r];
    for (std::size_t b = 0; b < rr.bcd_objective.size(); ++b) line(r, "bcd", b, b, rr.bcd_objective[b]);
    for (std::size_t b = 0; b < rr.traj_traces.size(); ++b)
      for (std::size_t i = 0; i < rr.traj_traces[b].objective.size(); ++i)
        line(r, "traj", b, i, rr.traj_traces[b].objective[i]);
    for (std::size_t b = 0; b < rr.alloc_traces.size(); ++b)
      for (std::size_t i = 0; i < rr.alloc_traces[b].objective.size(); ++i)
        line(r, "alloc", b, i, rr.alloc_traces[b].objective[i]);
  }
  return out;
}

std::string round_text(const RoundResult& r) {
  std::string out = "slot,round_slot,user,assoc,bandwidth_hz,power_w,planned_x_m,planned_y_m,true_x_m,true_y_m\n";
  for (int t = 0; t < r.slots(); ++t)
    for (std::size_t n = 0; n < r.users.size(); ++n) {
      const int i = static_cast<int>(n);
      out += std::to_string(r.start_slot + t) + "," + std::to_string(t) + "," + std::to_string(r.users[n]) + "," +
             std::to_string(static_cast<int>(r.assoc(i, t))) + "," + csv::num(r.alloc.b(i, t)) + "," +
             csv::num(r.alloc.p(i, t)) + "," + csv::num(r.planned_positions(i, t).x) + "," +
             csv::num(r.planned_positions(i, t).y) + "," + csv::num(r.true_positions(i, t).x) + "," +
             csv::num(r.true_positions(i, t).y) + "\n";
    }
  return out;
}

// Header-indexed CSV table.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int col(const std::string& name, const fs::path& file) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw IoError(file.string() + ": missing column '" + name + "'");
    return static_cast<int>(it - header.begin());
  }
};

Table read_table(const fs::path& file) {
  std::istringstream in(read_text(file));
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw IoError(file.string() + ": empty file");
  t.header = csv::split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = csv::split(line);
    if (row.size() != t.header.size()) throw IoError(file.string() + ": ragged row '" + line + "'");
    t.rows.push_back(std::move(row));
  }
  return t;
}

double to_real(const std::string& s, const fs::path& file) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw IoError(file.string() + ": not a number '" + s + "'");
  return v;
}

}  // namespace

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read '" + file.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& file, const std::string& text) {
  std::error_code ec;
  if (file.has_parent_path()) fs::create_directories(file.parent_path(), ec);
  if (ec) throw IoError("cannot create '" + file.parent_path().string() + "': " + ec.message());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + file.string() + "'");
  out << text;
  out.close();
  if (!out) throw IoError("write failed for '" + file.string() + "'");
}

std::string utc_timestamp() {
  std::time_t t = 0;
  if (const char* e = std::getenv("SOURCE_DATE_EPOCH"); e && *e) {
    t = static_cast<std::time_t>(parse_u64(e, "SOURCE_DATE_EPOCH"));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text, const std::string& field) {
  return parse_list<std::uint64_t>(text, field, [&](const std::string& s) { return parse_u64(s, field); }, true);
}

std::vector<int> parse_int_list(const std::string& text, const std::string& field) {
  return parse_list<int>(
      text, field,
      [&](const std::string& s) {
        const std::uint64_t v = parse_u64(s, field);
        if (v > 1000000) throw ValidationError(field, "too large: '" + s + "'");
        return static_cast<int>(v);
      },
      true);
}

std::vector<double> parse_real_list(const std::string& text, const std::string& field) {
  return parse_list<double>(
      text, field,
      [&](const std::string& s) {
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || *end != '\0' || !std::isfinite(v)) throw ValidationError(field, "not a number: '" + s + "'");
        return v;
      },
      false);
}

std::string manifest_json(const RunManifest& m) {
  json j;
  j["scenario"] = m.scenario;
  j["schemes"] = m.schemes;
  j["seeds"] = m.seeds;
  j["out_dir"] = m.out_dir;
  j["version"] = m.version;
  j["timestamp"] = m.timestamp;
  j["power_dbm"] = m.power_dbm;
  j["service_slots"] = m.service_slots;
  return j.dump(2) + "\n";
}

RunManifest read_manifest(const fs::path& run_dir) {
  const fs::path file = run_dir / "manifest.json";
  const std::string text = read_text(file);
  RunManifest m;
  try {
    const json j = json::parse(text);
    m.scenario = j.at("scenario").get<std::string>();
    m.schemes = j.at("schemes").get<std::vector<std::string>>();
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    m.out_dir = j.at("out_dir").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.timestamp = j.at("timestamp").get<std::string>();
    m.power_dbm = j.value("power_dbm", std::vector<double>{});
    m.service_slots = j.value("service_slots", std::vector<int>{});
  } catch (const json::exception& e) {
    throw FormatError(file.string() + ": " + e.what(), 0);
  }
  return m;
}

fs::path case_dir(const CaseKey& key) {
  fs::path p;
  if (key.power_dbm) p /= "power-" + csv::num(*key.power_dbm);
  if (key.service_slots) p /= "slots-" + std::to_string(*key.service_slots);
  char seed[32];
  std::snprintf(seed, sizeof seed, "seed-%04llu", static_cast<unsigned long long>(key.seed));
  return p / std::string(scheme_name(key.scheme)) / seed;
}

void write_case(const fs::path& dir, const ScenarioConfig& cfg, const CaseKey& key, const SchemeRun& run) {
  write_text(dir / "metrics.json", metrics_text(cfg, key, run));
  write_text(dir / "trajectory.csv", trajectory_text(cfg, run));
  write_text(dir / "convergence.csv", convergence_text(run));
  for (std::size_t i = 0; i < run.rounds.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "round-%02zu.csv", i);
    write_text(dir / "rounds" / name, round_text(run.rounds[i]));
  }
}

std::string summary_line(const SummaryRow& row) {
  const MetricsReport& m = row.metrics;
  const double last = m.cluster_min_rates.empty() ? 0.0 : m.cluster_min_rates.back();
  std::string out = row.key.power_dbm ? csv::num(*row.key.power_dbm) : "";
  out += ",";
  out += row.key.service_slots ? std::to_string(*row.key.service_slots) : "";
  out += "," + std::string(scheme_name(row.key.scheme)) + "," + std::to_string(row.key.seed);
  for (double v : {m.min_rate, m.near_min_rate, m.far_min_rate, last}) out += "," + csv::num(v);
  out += "," + std::to_string(m.users) + "," + std::to_string(m.outage_users) + "," + csv::num(m.outage_probability);
  out += "," + std::to_string(m.slots_used) + "," + std::to_string(m.cluster_min_rates.size());
  out += "," + csv::num(m.rmse) + "," + csv::num(m.max_speed) + "," + csv::num(m.planned_spread);
  out += "," + std::to_string(m.bcd_iters_max) + "," + std::to_string(m.sca_iters_max) + "," +
         std::to_string(row.violations);
  return out;
}

void write_summary(const fs::path& file, const std::vector<SummaryRow>& rows) {
  std::string text = std::string(kSummaryHeader) + "\n";
  for (const auto& r : rows) text += summary_line(r) + "\n";
  write_text(file, text);
}

std::vector<fs::path> write_plotdata(const fs::path& run_dir, const fs::path& out_dir, const PlotdataOptions& opts) {
  {
    std::vector<std::string> missing;
    for (const char* f : {"manifest.json", "summary.csv", "scenario.cfg"})
      if (!fs::is_regular_file(run_dir / f)) missing.push_back((run_dir / f).string());
    if (!missing.empty()) {
      std::string msg = "run directory '" + run_dir.string() + "' is incomplete; missing:";
      for (const auto& m : missing) msg += " " + m;
      throw IoError(msg);
    }
  }
  const RunManifest man = read_manifest(run_dir);
  if (man.schemes.empty() || man.seeds.empty()) throw IoError((run_dir / "manifest.json").string() + ": no cases");
  const ScenarioConfig cfg = load_scenario(run_dir / "scenario.cfg");

  CaseKey key;
  key.scheme = opts.scheme ? *opts.scheme : parse_scheme(man.schemes.front());
  key.seed = opts.seed ? *opts.seed : man.seeds.front();
  if (!man.power_dbm.empty()) key.power_dbm = man.power_dbm.front();
  if (!man.service_slots.empty()) key.service_slots = man.service_slots.front();
  const fs::path cdir = run_dir / case_dir(key);
  {
    std::vector<std::string> missing;
    for (const char* f : {"convergence.csv", "trajectory.csv"})
      if (!fs::is_regular_file(cdir / f)) missing.push_back((cdir / f).string());
    if (!missing.empty()) {
      std::string msg = "case inputs missing:";
      for (const auto& m : missing) msg += " " + m;
      throw IoError(msg);
    }
  }

  std::vector<fs::path> written;
  auto emit = [&](const char* name, const std::string& text) {
    write_text(out_dir / name, text);
    written.push_back(out_dir / name);
  };

  {
    const fs::path f = cdir / "convergence.csv";
    const Table t = read_table(f);
    const int cr = t.col("round", f), cs = t.col("stage", f), cb = t.col("bcd_iter", f), ci = t.col("iteration", f),
              cv = t.col("objective_bps", f);
    std::string out = "cluster,stage,bcd_iter,iteration,gamma_bps\n";
    for (const auto& r : t.rows) out += r[cr] + "," + r[cs] + "," + r[cb] + "," + r[ci] + "," + r[cv] + "\n";
    emit("convergence.csv", out);
  }
  {
    const fs::path f = cdir / "trajectory.csv";
    const Table t = read_table(f);
    const int cs = t.col("slot", f), cx = t.col("x_m", f), cy = t.col("y_m", f), ch = t.col("h_m", f);
    const int cv = t.col("speed_mps", f), cvx = t.col("speed_xy_mps", f);
    std::string traj = "t_s,x_m,y_m,h_m\n", speed = "t_s,v_mps,v_xy_mps\n";
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& r = t.rows[i];
      const std::string ts = csv::num(to_real(r[cs], f) * cfg.slot_duration);
      traj += ts + "," + r[cx] + "," + r[cy] + "," + r[ch] + "\n";
      if (i > 0) speed += ts + "," + r[cv] + "," + r[cvx] + "\n";
    }
    emit("trajectory_3d.csv", traj);
    emit("speed.csv", speed);
  }
  {
    const fs::path f = run_dir / "summary.csv";
    const Table t = read_table(f);
    const int cp = t.col("power_dbm", f), cl = t.col("service_slots", f), cs = t.col("scheme", f);
    const int cm = t.col("min_rate_bps", f), cn = t.col("near_min_rate_bps", f), cfar = t.col("far_min_rate_bps", f);
    const int co = t.col("outage_probability", f), cu = t.col("outage_users", f);
    struct Acc {
      int n = 0;
      double min_rate = 0, near = 0, far = 0, outage = 0, outage_users = 0;
    };
    // grouped in manifest order: scheme, then power, then serving slots
    const double scen_dbm = watts_to_dbm(cfg.p_total_max);
    std::map<std::tuple<std::size_t, double, int>, Acc> groups;
    for (const auto& r : t.rows) {
      const auto it = std::find(man.schemes.begin(), man.schemes.end(), r[cs]);
      if (it == man.schemes.end()) throw IoError(f.string() + ": scheme '" + r[cs] + "' not in the manifest");
      const double p = r[cp].empty() ? scen_dbm : to_real(r[cp], f);
      const int sl = r[cl].empty() ? 0 : static_cast<int>(to_real(r[cl], f));
      Acc& a = groups[{static_cast<std::size_t>(it - man.schemes.begin()), p, sl}];
      ++a.n;
      a.min_rate += to_real(r[cm], f);
      a.near += to_real(r[cn], f);
      a.far += to_real(r[cfar], f);
      a.outage += to_real(r[co], f);
      a.outage_users += to_real(r[cu], f);
    }
    std::string outage = "scheme,power_dbm,service_slots,seeds,outage_probability,outage_users\n";
    std::string power = "scheme,power_dbm,service_slots,seeds,min_rate_bps,near_min_rate_bps,far_min_rate_bps\n";
    for (const auto& [k, a] : groups) {
      const std::string head = man.schemes[std::get<0>(k)] + "," + csv::num(std::get<1>(k)) + "," +
                               std::to_string(std::get<2>(k)) + "," + std::to_string(a.n);
      outage += head + "," + csv::num(a.outage / a.n) + "," + csv::num(a.outage_users / a.n) + "\n";
      power += head + "," + csv::num(a.min_rate / a.n) + "," + csv::num(a.near / a.n) + "," + csv::num(a.far / a.n) + "\n";
    }
    emit("outage_vs_slots.csv", outage);
    emit("min_rate_vs_power.csv", power);
  }
  return written;
}

}  // namespace uavnet
