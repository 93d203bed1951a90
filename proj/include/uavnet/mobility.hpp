#pragma once
// Gauss-Markov user mobility with reflecting area boundaries.

#include <iosfwd>
#include <utility>
#include <vector>

#include "uavnet/scenario.hpp"

namespace uavnet {

struct UserTrack {
  int user_id = 0;
  std::vector<Vec2> positions;
  std::vector<double> speeds;    // m/s
  std::vector<double> headings;  // rad

  int length() const { return static_cast<int>(positions.size()); }
};

/// One track of `steps` moves (steps + 1 positions) from an explicit start.
UserTrack generate_track(int user_id, const ScenarioConfig& cfg, const GmParams& gm, Rng& rng, Vec2 start,
                         double speed0, double heading0, int steps);

/// N tracks with uniform initial positions and headings, `steps` moves each.
/// Each user draws from its own sub-stream of `seed`.
std::vector<UserTrack> generate_tracks(const ScenarioConfig& cfg, const GmParams& gm, std::uint64_t seed, int steps);

/// Tracks covering the flight horizon: T / delta moves.
std::vector<UserTrack> generate_tracks(const ScenarioConfig& cfg, const GmParams& gm, std::uint64_t seed);

/// history = samples [0, split], future = samples (split, end].
std::pair<UserTrack, UserTrack> split_history_future(const UserTrack& track, int split_slot);
UserTrack concatenate(const UserTrack& a, const UserTrack& b);

/// CSV with header user_id,slot,x,y (speeds and headings are not stored).
void write_tracks_csv(std::ostream& os, const std::vector<UserTrack>& tracks);
std::vector<UserTrack> read_tracks_csv(std::istream& is);

}  // namespace uavnet
