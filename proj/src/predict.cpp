#include "uavnet/predict.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "csv.hpp"

namespace uavnet {

StateSpace StateSpace::compass(int k, double step_length) {
  if (k < 2) throw ValidationError("predictor_states", "need at least 2 states");
  if (!(step_length > 0.0)) throw ValidationError("step_length", "must be positive");
  StateSpace s;
  s.step_length = step_length;
  s.states.push_back({0.0, 0.0});
  const int dirs = k - 1;
  for (int d = 0; d < dirs; ++d) {
    const double a = 2.0 * kPi * d / dirs;
    s.states.push_back({step_length * std::cos(a), step_length * std::sin(a)});
  }
  return s;
}

StateSpace StateSpace::for_scenario(const ScenarioConfig& cfg) {
  const double step = cfg.gm.mean_speed * cfg.slot_duration;
  return compass(cfg.predictor_states, step > 0.0 ? step : 1.0);
}

int nearest_state(Vec2 displacement, const StateSpace& space) {
  int best = 0;
  double best_d = norm_sq(displacement - space.states[0]);
  for (int k = 1; k < space.size(); ++k) {
    const double d = norm_sq(displacement - space.states[k]);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

std::vector<int> quantize_track(const UserTrack& track, const StateSpace& space) {
  if (track.length() < 3) throw ValidationError("track", "need at least 3 positions");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(track.length()) - 1);
  for (int t = 1; t < track.length(); ++t) out.push_back(nearest_state(track.positions[t] - track.positions[t - 1], space));
  return out;
}

TransitionTensor::TransitionTensor(int k) : k_(k), row_start_(static_cast<std::size_t>(k) * k + 1, 0) {}

bool TransitionTensor::row_observed(int i, int j) const { return row_end(i, j) != row_begin(i, j); }

int TransitionTensor::rows_observed() const {
  int n = 0;
  for (int r = 0; r < k_ * k_; ++r) n += row_start_[r + 1] > row_start_[r];
  return n;
}

const TransitionTensor::Entry* TransitionTensor::row_begin(int i, int j) const {
  return entries_.data() + row_start_[static_cast<std::size_t>(i) * k_ + j];
}

const TransitionTensor::Entry* TransitionTensor::row_end(int i, int j) const {
  return entries_.data() + row_start_[static_cast<std::size_t>(i) * k_ + j + 1];
}

double TransitionTensor::prob(int i, int j, int k) const {
  for (auto* e = row_begin(i, j); e != row_end(i, j); ++e)
    if (e->k == k) return e->prob;
  return 0.0;
}

TransitionTensor TransitionTensor::from_counts(int k, const std::vector<std::tuple<int, int, int, double>>& counts) {
  TransitionTensor t(k);
  std::vector<std::vector<double>> dense(static_cast<std::size_t>(k) * k);
  for (const auto& [i, j, s, c] : counts) {
    if (i < 0 || j < 0 || s < 0 || i >= k || j >= k || s >= k)
      throw ValidationError("K", "state index " + std::to_string(std::max({i, j, s})) + " out of range for K=" +
                                     std::to_string(k));
    if (c < 0.0) throw ValidationError("count", "negative count");
    auto& row = dense[static_cast<std::size_t>(i) * k + j];
    if (row.empty()) row.assign(static_cast<std::size_t>(k), 0.0);
    row[s] += c;
  }
  for (int r = 0; r < k * k; ++r) {
    const auto& row = dense[r];
    double total = 0.0;
    for (double c : row) total += c;
    if (total > 0.0)
      for (int s = 0; s < k; ++s)
        if (row[s] > 0.0) t.entries_.push_back({s, row[s] / total, row[s]});
    t.row_start_[r + 1] = static_cast<int>(t.entries_.size());
  }
  return t;
}

void TransitionTensor::write_csv(std::ostream& os) const {
  os << "i,j,k,prob,count\n";
  for (int i = 0; i < k_; ++i)
    for (int j = 0; j < k_; ++j)
      for (auto* e = row_begin(i, j); e != row_end(i, j); ++e)
        os << i << ',' << j << ',' << e->k << ',' << csv::num(e->prob) << ',' << csv::num(e->count) << '\n';
}

TransitionTensor TransitionTensor::read_csv(std::istream& is) {
  std::vector<std::tuple<int, int, int, double>> counts;
  std::string line;
  int lineno = 0;
  int kmax = -1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line.rfind("i,", 0) == 0) continue;
    const auto f = csv::split(line);
    if (f.size() < 4) throw FormatError("expected i,j,k,prob[,count]", lineno);
    try {
      const int i = std::stoi(f[0]), j = std::stoi(f[1]), k = std::stoi(f[2]);
      // Without counts the probability itself is a valid relative weight.
      const double w = f.size() >= 5 ? std::stod(f[4]) : std::stod(f[3]);
      counts.emplace_back(i, j, k, w);
      kmax = std::max({kmax, i, j, k});
    } catch (const std::exception&) {
      throw FormatError("bad number", lineno);
    }
  }
  return from_counts(kmax + 1, counts);
}

TransitionTensor fit_tensor(const std::vector<std::vector<int>>& state_seqs, int k) {
  std::vector<std::tuple<int, int, int, double>> counts;
  for (const auto& seq : state_seqs) {
    if (seq.size() < 3) throw ValidationError("state_seqs", "every sequence needs at least 3 states");
    for (std::size_t t = 2; t < seq.size(); ++t) counts.emplace_back(seq[t - 2], seq[t - 1], seq[t], 1.0);
  }
  return TransitionTensor::from_counts(k, counts);
}

EvolveResult evolve(const StateDistribution& dist, int prev_state, const TransitionTensor& tensor) {
  const int k = tensor.states();
  if (static_cast<int>(dist.size()) != k) throw ValidationError("dist", "size differs from K");
  if (prev_state < 0 || prev_state >= k) throw ValidationError("prev_state", "out of range");
  EvolveResult r;
  r.dist.assign(static_cast<std::size_t>(k), 0.0);
  for (int j = 0; j < k; ++j) {
    const double pj = dist[j];
    if (pj == 0.0) continue;
    for (auto* e = tensor.row_begin(prev_state, j); e != tensor.row_end(prev_state, j); ++e) {
      r.dist[e->k] += pj * e->prob;
      ++r.operations;
    }
  }
  double total = 0.0;
  for (double v : r.dist) total += v;
  if (total <= 0.0) {
    std::fill(r.dist.begin(), r.dist.end(), 0.0);
    r.dist[StateSpace::stay] = 1.0;
    r.fallback = true;
    return r;
  }
  for (double& v : r.dist) v /= total;
  return r;
}

int decode_map(const StateDistribution& dist) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(dist.size()); ++k)
    if (dist[k] > dist[best]) best = k;
  return best;
}

PredictedTrack predict_locations(Vec2 initial_pos, int prev_state, int curr_state, const TransitionTensor& tensor,
                                 const StateSpace& space, int horizon, const ScenarioConfig& cfg) {
  if (horizon < 1) throw ValidationError("horizon", "must be at least 1");
  PredictedTrack out;
  out.positions.push_back(initial_pos);
  Vec2 pos = initial_pos;
  StateDistribution dist(static_cast<std::size_t>(space.size()), 0.0);
  for (int t = 0; t < horizon; ++t) {
    std::fill(dist.begin(), dist.end(), 0.0);
    dist[curr_state] = 1.0;
    const EvolveResult r = evolve(dist, prev_state, tensor);
    out.fallbacks += r.fallback;
    const int next = decode_map(r.dist);
    pos = pos + space.states[next];
    pos = {cfg.area_x.clamp(pos.x), cfg.area_y.clamp(pos.y)};
    out.positions.push_back(pos);
    out.decoded_states.push_back(next);
    prev_state = curr_state;
    curr_state = next;
  }
  return out;
}

std::vector<PredictedTrack> predict_users(const std::vector<UserTrack>& histories, const StateSpace& space,
                                          int horizon, const ScenarioConfig& cfg, TransitionTensor* fitted) {
  std::vector<std::vector<int>> seqs;
  seqs.reserve(histories.size());
  for (const auto& h : histories) seqs.push_back(quantize_track(h, space));
  const TransitionTensor tensor = fit_tensor(seqs, space.size());
  std::vector<PredictedTrack> out;
  for (std::size_t n = 0; n < histories.size(); ++n) {
    const auto& s = seqs[n];
    PredictedTrack p = predict_locations(histories[n].positions.back(), s[s.size() - 2], s.back(), tensor, space,
                                         horizon, cfg);
    p.user_id = histories[n].user_id;
    out.push_back(std::move(p));
  }
  if (fitted) *fitted = tensor;
  return out;
}

}  // namespace uavnet
