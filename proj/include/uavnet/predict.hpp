#pragma once
// Sparse second-order Markov predictor of user movement.

#include <cstdint>
#include <iosfwd>
#include <tuple>
#include <vector>

#include "uavnet/mobility.hpp"

namespace uavnet {

/// Movement states: index 0 is "stay", the rest are equally spaced compass
/// directions starting at east and turning counter-clockwise.
struct StateSpace {
  std::vector<Vec2> states;
  double step_length = 1.0;

  int size() const { return static_cast<int>(states.size()); }
  static constexpr int stay = 0;

  /// K states: stay plus K-1 directions. K = 9 gives E, NE, N, NW, W, SW, S, SE.
  static StateSpace compass(int k, double step_length);
  /// step_length = mean_speed * delta (1 m if that is zero).
  static StateSpace for_scenario(const ScenarioConfig& cfg);
};

/// Nearest state for every consecutive displacement; ties to the lowest index.
std::vector<int> quantize_track(const UserTrack& track, const StateSpace& space);
int nearest_state(Vec2 displacement, const StateSpace& space);

using StateDistribution = std::vector<double>;

/// Row-normalized transition frequencies Omega(i, j, k) = P(k | i, j), stored
/// as compressed rows keyed by the context pair (i, j).
class TransitionTensor {
 public:
  struct Entry {
    int k;
    double prob;
    double count;
  };

  TransitionTensor() = default;
  explicit TransitionTensor(int k);

  int states() const { return k_; }
  int nonzeros() const { return static_cast<int>(entries_.size()); }
  bool row_observed(int i, int j) const;
  int rows_observed() const;
  double prob(int i, int j, int k) const;
  /// Entries of context (i, j) in increasing k.
  const Entry* row_begin(int i, int j) const;
  const Entry* row_end(int i, int j) const;

  /// Builds from raw counts (i, j, k, count); counts of a row are normalized.
  static TransitionTensor from_counts(int k, const std::vector<std::tuple<int, int, int, double>>& counts);

  /// Sparse triple list i,j,k,prob (count column kept for refits).
  void write_csv(std::ostream& os) const;
  static TransitionTensor read_csv(std::istream& is);

 private:
  int k_ = 0;
  std::vector<int> row_start_;  // size k*k + 1
  std::vector<Entry> entries_;
};

TransitionTensor fit_tensor(const std::vector<std::vector<int>>& state_seqs, int k);

struct EvolveResult {
  StateDistribution dist;
  bool fallback = false;      // no outgoing mass: collapsed to "stay"
  std::uint64_t operations = 0;  // multiply-adds over stored entries
};

/// pi'(k) = sum_j pi(j) Omega(prev, j, k), touching stored entries only.
EvolveResult evolve(const StateDistribution& dist, int prev_state, const TransitionTensor& tensor);

/// Argmax, lowest index on ties.
int decode_map(const StateDistribution& dist);

struct PredictedTrack {
  int user_id = 0;
  std::vector<Vec2> positions;   // initial position followed by horizon predictions
  std::vector<int> decoded_states;
  int fallbacks = 0;
};

PredictedTrack predict_locations(Vec2 initial_pos, int prev_state, int curr_state, const TransitionTensor& tensor,
                                 const StateSpace& space, int horizon, const ScenarioConfig& cfg);

/// Fits on the histories and predicts `horizon` slots past each history end.
std::vector<PredictedTrack> predict_users(const std::vector<UserTrack>& histories, const StateSpace& space,
                                          int horizon, const ScenarioConfig& cfg, TransitionTensor* fitted = nullptr);

}  // namespace uavnet
