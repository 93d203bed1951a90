#include "uavnet/assoc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "uavnet/scenario.hpp"

namespace uavnet {

int AssociationMatrix::count_user(int n) const {
  int c = 0;
  for (int t = 0; t < j.cols; ++t) c += j(n, t);
  return c;
}

int AssociationMatrix::count_slot(int t) const {
  int c = 0;
  for (int n = 0; n < j.rows; ++n) c += j(n, t);
  return c;
}

double association_gamma(const Grid<double>& rates, const Grid<std::uint8_t>& j) {
  double g = std::numeric_limits<double>::infinity();
  for (int n = 0; n < rates.rows; ++n) {
    double s = 0.0;
    for (int t = 0; t < rates.cols; ++t)
      if (j(n, t)) s += rates(n, t);
    g = std::min(g, s / rates.cols);
  }
  return rates.rows > 0 ? g : 0.0;
}

namespace {

bool feasible(const Grid<std::uint8_t>& j, int tau, int c_max) {
  for (int n = 0; n < j.rows; ++n) {
    int c = 0;
    for (int t = 0; t < j.cols; ++t) c += j(n, t);
    if (c < tau) return false;
  }
  for (int t = 0; t < j.cols; ++t) {
    int c = 0;
    for (int n = 0; n < j.rows; ++n) c += j(n, t);
    if (c > c_max) return false;
  }
  return true;
}

// Depth-first search over slots; each slot receives exactly C_max users
// (associating more never lowers gamma, so full slots lose no optimum).
// Nodes are bounded with the Lagrangian dual of the relaxation: for weights
// lambda on the simplex,
//   T gamma <= sum_n lambda_n S_n + sum_{open t} top_C { lambda_n r(n,t) },
// with lambda refined by a few mirror-descent steps per node.
class BranchAndBound {
 public:
  BranchAndBound(const Grid<double>& rates, int tau, int c_max, long max_nodes)
      : r_(rates), tau_(tau), c_(c_max), n_(rates.rows), t_(rates.cols), max_nodes_(max_nodes) {
    double mx = 0.0;
    for (double v : rates.data) mx = std::max(mx, v);
    scale_ = mx > 0.0 ? 1.0 / mx : 1.0;
    rs_ = Grid<double>(n_, t_);
    for (std::size_t k = 0; k < rates.data.size(); ++k) rs_.data[k] = rates.data[k] * scale_;
    for (unsigned m = 0; m < (1u << n_); ++m)
      if (std::popcount(m) == c_) subsets_.push_back(m);
    // Slots with the widest rate spread first: their choice matters most.
    order_.resize(static_cast<std::size_t>(t_));
    std::iota(order_.begin(), order_.end(), 0);
    auto spread = [&](int t) {
      double lo = 1e300, hi = -1e300;
      for (int n = 0; n < n_; ++n) {
        lo = std::min(lo, rs_(n, t));
        hi = std::max(hi, rs_(n, t));
      }
      return hi - lo;
    };
    std::stable_sort(order_.begin(), order_.end(), [&](int a, int b) { return spread(a) > spread(b); });
  }

  void run(AssocResult& out) {
    greedy();
    sum_.assign(static_cast<std::size_t>(n_), 0.0);
    cnt_.assign(static_cast<std::size_t>(n_), 0);
    cur_ = Grid<std::uint8_t>(n_, t_, 0);
    std::vector<double> lam(static_cast<std::size_t>(n_), 1.0 / n_);
    std::vector<double> root_lam = lam;
    root_bound_ = bound(0, root_lam, 200);
    dfs(0, root_lam, 0);
    out.proven_optimal = !truncated_;
    out.bound_gap = truncated_ ? std::max(0.0, open_bound_ - best_val_) / scale_ : 0.0;
    out.assoc.j = best_;
    out.nodes = nodes_;
    if (truncated_) {
      Grid<std::uint8_t> j = best_;
      improve(j);
      best_ = j;
    }
  }

 private:
  void offer(const Grid<std::uint8_t>& j) {
    if (!feasible(j, tau_, c_)) return;
    const double v = association_gamma(rs_, j);
    if (!have_ || v > best_val_ * (1.0 + 1e-12)) {
      have_ = true;
      best_val_ = v;
      best_ = j;
    }
  }

  void greedy() {
    Grid<std::uint8_t> j(n_, t_, 0);
    std::vector<double> sum(static_cast<std::size_t>(n_), 0.0);
    std::vector<int> cnt(static_cast<std::size_t>(n_), 0), load(static_cast<std::size_t>(t_), 0);
    for (;;) {
      int who = -1;
      for (int n = 0; n < n_; ++n) {
        bool has_slot = false;
        for (int t = 0; t < t_ && !has_slot; ++t) has_slot = !j(n, t) && load[t] < c_;
        if (!has_slot) continue;
        auto key = [&](int m) { return std::make_pair(cnt[m] >= tau_, sum[m]); };
        if (who < 0 || key(n) < key(who)) who = n;
      }
      if (who < 0) break;
      int slot = -1;
      for (int t = 0; t < t_; ++t)
        if (!j(who, t) && load[t] < c_ && (slot < 0 || rs_(who, t) > rs_(who, slot))) slot = t;
      j(who, slot) = 1;
      ++load[slot];
      ++cnt[who];
      sum[who] += rs_(who, slot);
    }
    improve(j);
    offer(j);
  }

  // Sorted per-user sums, compared lexicographically (leximin).
  std::vector<double> profile(const Grid<std::uint8_t>& j) const {
    std::vector<double> v(static_cast<std::size_t>(n_), 0.0);
    for (int n = 0; n < n_; ++n)
      for (int t = 0; t < t_; ++t)
        if (j(n, t)) v[n] += rs_(n, t);
    std::sort(v.begin(), v.end());
    return v;
  }

  static bool better(const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] > b[i] * (1.0 + 1e-12) + 1e-15) return true;
      if (a[i] < b[i] * (1.0 - 1e-12) - 1e-15) return false;
    }
    return false;
  }

  // First-improvement swaps (user in <-> user out of one slot) under leximin.
  void improve(Grid<std::uint8_t>& j) const {
    if (!feasible(j, tau_, c_)) return;
    std::vector<double> cur = profile(j);
    bool moved = true;
    for (int pass = 0; moved && pass < 50; ++pass) {
      moved = false;
      for (int t = 0; t < t_; ++t)
        for (int a = 0; a < n_; ++a) {
          if (!j(a, t)) continue;
          for (int b = 0; b < n_; ++b) {
            if (j(b, t)) continue;
            j(a, t) = 0;
            j(b, t) = 1;
            if (feasible(j, tau_, c_)) {
              std::vector<double> nxt = profile(j);
              if (better(nxt, cur)) {
                cur = std::move(nxt);
                moved = true;
                break;
              }
            }
            j(a, t) = 1;
            j(b, t) = 0;
          }
        }
    }
  }

  // Upper bound on T gamma for weights lam; g receives a subgradient.
  double dual_value(int depth, const std::vector<double>& lam, std::vector<double>* g) const {
    double v = 0.0;
    for (int n = 0; n < n_; ++n) v += lam[n] * sum_[n];
    if (g) *g = sum_;
    std::vector<int> idx(static_cast<std::size_t>(n_));
    for (int d = depth; d < t_; ++d) {
      const int t = order_[d];
      std::iota(idx.begin(), idx.end(), 0);
      std::partial_sort(idx.begin(), idx.begin() + c_, idx.end(),
                        [&](int a, int b) { return lam[a] * rs_(a, t) > lam[b] * rs_(b, t); });
      for (int k = 0; k < c_; ++k) {
        v += lam[idx[k]] * rs_(idx[k], t);
        if (g) (*g)[idx[k]] += rs_(idx[k], t);
      }
    }
    return v;
  }

  double bound(int depth, std::vector<double>& lam, int iters) const {
    std::vector<double> g, trial = lam;
    double best = dual_value(depth, lam, &g);
    double step = 2.0 / std::max(1, t_);
    for (int it = 0; it < iters; ++it) {
      double z = 0.0;
      for (int n = 0; n < n_; ++n) z += trial[n] *= std::exp(-step * g[n]);
      for (double& v : trial) v = std::max(v / z, 1e-12);
      const double val = dual_value(depth, trial, &g);
      if (val < best) {
        best = val;
        lam = trial;
      } else {
        step *= 0.7;
      }
    }
    return best / t_;
  }

  void dfs(int depth, std::vector<double> lam, int iters) {
    if (iters == 0) iters = 8;
    ++nodes_;
    const int left = t_ - depth;
    int deficit = 0;
    for (int n = 0; n < n_; ++n) {
      const int need = std::max(0, tau_ - cnt_[n]);
      if (need > left) return;
      deficit += need;
    }
    if (deficit > c_ * left) return;
    if (depth == t_) {
      Grid<std::uint8_t> leaf = cur_;
      offer(leaf);
      return;
    }
    const double b = bound(depth, lam, iters);
    if (have_ && b <= best_val_ * (1.0 + 1e-12)) return;
    if (nodes_ >= max_nodes_) {
      truncated_ = true;
      open_bound_ = std::max(open_bound_, b);
      return;
    }

    const int t = order_[depth];
    std::vector<std::pair<double, unsigned>> kids;
    for (unsigned m : subsets_) {
      double w = 0.0;
      for (int n = 0; n < n_; ++n)
        if (m >> n & 1u) w += lam[n] * rs_(n, t);
      kids.emplace_back(-w, m);
    }
    std::stable_sort(kids.begin(), kids.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [w, m] : kids) {
      for (int n = 0; n < n_; ++n)
        if (m >> n & 1u) {
          cur_(n, t) = 1;
          sum_[n] += rs_(n, t);
          ++cnt_[n];
        }
      dfs(depth + 1, lam, 8);
      for (int n = 0; n < n_; ++n)
        if (m >> n & 1u) {
          cur_(n, t) = 0;
          sum_[n] -= rs_(n, t);
          --cnt_[n];
        }
    }
  }

  const Grid<double>& r_;
  int tau_, c_, n_, t_;
  double scale_ = 1.0;
  Grid<double> rs_;
  std::vector<unsigned> subsets_;
  std::vector<int> order_;
  std::vector<double> sum_;
  std::vector<int> cnt_;
  Grid<std::uint8_t> cur_;
  bool have_ = false;
  double best_val_ = 0.0;
  Grid<std::uint8_t> best_;
  long max_nodes_;
  long nodes_ = 0;
  bool truncated_ = false;
  double root_bound_ = 0.0;
  double open_bound_ = 0.0;
};

}  // namespace

AssocResult solve_association(const Grid<double>& rates, int tau, int c_max, double r_on, double slot_duration,
                              long max_nodes) {
  const int n = rates.rows, t = rates.cols;
  if (n < 1 || t < 1) throw ValidationError("rates", "need at least one user and one slot");
  if (tau < 0 || c_max < 1) throw ValidationError("assoc", "need tau >= 0 and C_max >= 1");
  for (double v : rates.data)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("rates", "must be finite and nonnegative");
  if (tau > t) throw InfeasibleError("connectivity: tau = " + std::to_string(tau) + " exceeds T_l = " +
                                     std::to_string(t));
  if (static_cast<long long>(n) * tau > static_cast<long long>(c_max) * t)
    throw InfeasibleError("per-slot capacity: N_l tau = " + std::to_string(n * tau) + " exceeds C_max T_l = " +
                          std::to_string(c_max * t));
  AssocResult out;
  out.assoc.tau_req = tau;
  if (n <= c_max) {
    // Capacity never binds: associating everyone everywhere dominates.
    out.assoc.j = Grid<std::uint8_t>(n, t, 1);
  } else {
    BranchAndBound bb(rates, tau, c_max, max_nodes);
    bb.run(out);
  }
  out.gamma = association_gamma(rates, out.assoc.j);
  out.qos_met = out.gamma * t * slot_duration >= r_on;
  return out;
}

}  // namespace uavnet
