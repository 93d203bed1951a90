#include "uavnet/mobility.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "csv.hpp"

namespace uavnet {

namespace {

void reflect(double& pos, double& heading, double& mean_heading, const Bounds& b, bool x_axis) {
  auto flip = [x_axis](double a) { return x_axis ? kPi - a : -a; };
  for (int guard = 0; guard < 4 && !b.contains(pos); ++guard) {
    pos = pos < b.lo ? 2.0 * b.lo - pos : 2.0 * b.hi - pos;
    heading = flip(heading);
    mean_heading = flip(mean_heading);
  }
  pos = b.clamp(pos);
}

}  // namespace

UserTrack generate_track(int user_id, const ScenarioConfig& cfg, const GmParams& gm, Rng& rng, Vec2 start,
                         double speed0, double heading0, int steps) {
  gm.validate();
  if (steps < 0) throw ValidationError("steps", "must be nonnegative");
  UserTrack tr;
  tr.user_id = user_id;
  tr.positions.reserve(static_cast<std::size_t>(steps) + 1);
  std::normal_distribution<double> nd;
  const double a = gm.memory_alpha;
  const double w = std::sqrt(std::max(0.0, 1.0 - a * a));
  double speed = std::clamp(speed0, 0.0, gm.speed_max);
  double heading = heading0;
  double mean_heading = heading0;
  Vec2 pos{cfg.area_x.clamp(start.x), cfg.area_y.clamp(start.y)};
  tr.positions.push_back(pos);
  tr.speeds.push_back(speed);
  tr.headings.push_back(heading);
  for (int t = 0; t < steps; ++t) {
    pos.x += speed * cfg.slot_duration * std::cos(heading);
    pos.y += speed * cfg.slot_duration * std::sin(heading);
    reflect(pos.x, heading, mean_heading, cfg.area_x, true);
    reflect(pos.y, heading, mean_heading, cfg.area_y, false);
    tr.positions.push_back(pos);

    // Noise is drawn even when its scale is zero to keep streams aligned.
    const double es = nd(rng);
    const double eh = nd(rng);
    mean_heading += gm.mean_heading_drift;
    speed = a * speed + (1.0 - a) * gm.mean_speed + w * gm.speed_std * es;
    speed = std::clamp(speed, 0.0, gm.speed_max);
    heading = a * heading + (1.0 - a) * mean_heading + w * gm.heading_std * eh;
    tr.speeds.push_back(speed);
    tr.headings.push_back(heading);
  }
  return tr;
}

std::vector<UserTrack> generate_tracks(const ScenarioConfig& cfg, const GmParams& gm, std::uint64_t seed, int steps) {
  std::vector<UserTrack> out;
  out.reserve(static_cast<std::size_t>(cfg.n_users));
  for (int n = 0; n < cfg.n_users; ++n) {
    Rng rng = sub_stream(seed, 1000 + static_cast<std::uint64_t>(n));
    std::uniform_real_distribution<double> ux(cfg.area_x.lo, cfg.area_x.hi);
    std::uniform_real_distribution<double> uy(cfg.area_y.lo, cfg.area_y.hi);
    std::uniform_real_distribution<double> uh(-kPi, kPi);
    const Vec2 start{ux(rng), uy(rng)};
    const double heading = uh(rng);
    out.push_back(generate_track(n, cfg, gm, rng, start, gm.mean_speed, heading, steps));
  }
  return out;
}

std::vector<UserTrack> generate_tracks(const ScenarioConfig& cfg, const GmParams& gm, std::uint64_t seed) {
  return generate_tracks(cfg, gm, seed, cfg.horizon_slots());
}

std::pair<UserTrack, UserTrack> split_history_future(const UserTrack& track, int split_slot) {
  // Both halves must be non-empty.
  if (split_slot <= 0 || split_slot >= track.length() - 1)
    throw ValidationError("split_slot", "must lie in (0, " + std::to_string(track.length() - 1) + ")");
  auto cut = [&](int lo, int hi) {
    UserTrack t;
    t.user_id = track.user_id;
    t.positions.assign(track.positions.begin() + lo, track.positions.begin() + hi);
    if (!track.speeds.empty()) t.speeds.assign(track.speeds.begin() + lo, track.speeds.begin() + hi);
    if (!track.headings.empty()) t.headings.assign(track.headings.begin() + lo, track.headings.begin() + hi);
    return t;
  };
  return {cut(0, split_slot + 1), cut(split_slot + 1, track.length())};
}

UserTrack concatenate(const UserTrack& a, const UserTrack& b) {
  UserTrack t = a;
  t.positions.insert(t.positions.end(), b.positions.begin(), b.positions.end());
  t.speeds.insert(t.speeds.end(), b.speeds.begin(), b.speeds.end());
  t.headings.insert(t.headings.end(), b.headings.begin(), b.headings.end());
  return t;
}

void write_tracks_csv(std::ostream& os, const std::vector<UserTrack>& tracks) {
  os << "user_id,slot,x,y\n";
  for (const auto& tr : tracks)
    for (int t = 0; t < tr.length(); ++t)
      os << tr.user_id << ',' << t << ',' << csv::num(tr.positions[t].x) << ',' << csv::num(tr.positions[t].y) << '\n';
}

std::vector<UserTrack> read_tracks_csv(std::istream& is) {
  std::map<int, std::map<int, Vec2>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || (lineno == 1 && line.rfind("user_id", 0) == 0)) continue;
    const auto f = csv::split(line);
    if (f.size() != 4) throw FormatError("expected 4 fields", lineno);
    try {
      rows[std::stoi(f[0])][std::stoi(f[1])] = {std::stod(f[2]), std::stod(f[3])};
    } catch (const std::exception&) {
      throw FormatError("bad number", lineno);
    }
  }
  std::vector<UserTrack> out;
  for (const auto& [id, slots] : rows) {
    UserTrack tr;
    tr.user_id = id;
    int expect = 0;
    for (const auto& [t, p] : slots) {
      if (t != expect++) throw FormatError("user " + std::to_string(id) + " has a gap at slot " + std::to_string(t), 0);
      tr.positions.push_back(p);
    }
    out.push_back(std::move(tr));
  }
  return out;
}

}  // namespace uavnet
