#include "uavnet/alloc.hpp"

#include <algorithm>
#include <cmath>

#include "uavnet/cvx.hpp"

namespace uavnet {

namespace {

constexpr double kMHz = 1e6;     // solver bandwidth unit
constexpr double kMw = 1e-3;     // solver power unit
constexpr double kBFloor = 1e3;  // Hz, keeps SNR finite for associated users

double min_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end()); }

// Scales a slot's column down when solver round-off pushes its sum over the cap.
void fit_column(Grid<double>& g, int t, double cap) {
  double s = 0.0;
  for (int n = 0; n < g.rows; ++n) s += g(n, t);
  if (s <= cap) return;
  const double f = cap / s;
  for (int n = 0; n < g.rows; ++n) g(n, t) *= f;
}

}  // namespace

AllocationTable init_allocation(const ScenarioConfig& cfg, const AssociationMatrix& assoc) {
  AllocationTable a{Grid<double>(assoc.users(), assoc.slots()), Grid<double>(assoc.users(), assoc.slots())};
  for (int t = 0; t < assoc.slots(); ++t) {
    const int k = assoc.count_slot(t);
    for (int n = 0; n < assoc.users(); ++n)
      if (assoc(n, t)) {
        a.b(n, t) = cfg.b_total_max / k;
        a.p(n, t) = std::min(cfg.p_user_max, cfg.p_total_max / k);
      }
  }
  return a;
}

SlackState tight_slacks(const ScenarioConfig& cfg, const AssociationMatrix& assoc, const Grid<double>& gains,
                        const AllocationTable& alloc) {
  SlackState s{Grid<double>(assoc.users(), assoc.slots()), Grid<double>(assoc.users(), assoc.slots()), alloc};
  for (int n = 0; n < assoc.users(); ++n)
    for (int t = 0; t < assoc.slots(); ++t) {
      if (!assoc(n, t) || alloc.b(n, t) <= 0.0) continue;
      s.snr(n, t) = alloc.p(n, t) * gains(n, t) / (alloc.b(n, t) * cfg.noise_psd);
      s.se(n, t) = std::log2(1.0 + s.snr(n, t));
    }
  return s;
}

double dc_bandwidth_margin(std::span<const double> b_hat, std::span<const double> se_hat, std::span<const double> b,
                           std::span<const double> se, int slots, double gamma) {
  double m = -2.0 * slots * gamma;
  for (std::size_t t = 0; t < b.size(); ++t) {
    const double a = b_hat[t] + se_hat[t];
    m += 2.0 * a * (b[t] + se[t]) - a * a - b[t] * b[t] - se[t] * se[t];
  }
  return m;
}

AllocStep solve_allocation_step(const ScenarioConfig& cfg, const SlackState& state, const AssociationMatrix& assoc,
                                const Grid<double>& gains) {
  using cvx::Affine;
  const int nl = assoc.users(), tl = assoc.slots();
  AllocStep res{state.expansion, state, min_of(user_rates(cfg, gains, assoc, state.expansion)), 0.0, false, true};

  cvx::ConvexProgram prog;
  Grid<int> bv(nl, tl, -1), pv(nl, tl, -1), ev(nl, tl, -1);
  const double ln2 = std::log(2.0);
  for (int n = 0; n < nl; ++n)
    for (int t = 0; t < tl; ++t) {
      if (!assoc(n, t)) continue;
      const std::string tag = std::to_string(n) + "_" + std::to_string(t);
      const auto b = bv(n, t) = prog.add_variable("B" + tag);
      const auto p = pv(n, t) = prog.add_variable("P" + tag);
      const auto snr = prog.add_variable("Psi" + tag);
      const auto e = ev(n, t) = prog.add_variable("psi" + tag);
      prog.add_bounds(b, kBFloor / kMHz, cfg.b_total_max / kMHz);
      prog.add_bounds(p, 0.0, cfg.p_user_max / kMw);
      prog.add_less_equal(-Affine::var(snr), "snr_nonneg");
      prog.add_less_equal(-Affine::var(e), "se_nonneg");

      // Psi = s * snr keeps the solver's SNR variable near 1
      const double s_hat = state.snr(n, t);
      const double s = std::max(s_hat, 1e-6);
      // 2^psi <= 1 + Psi
      prog.add_exp_cone(Affine::var(e, ln2) - std::log(s), Affine(1.0), Affine::var(snr) + 1.0 / s, "log_rate");
      // Psi B <= (kappa Psi^2 + B^2 / kappa) / 2 <= p g / N_o, tight at the expansion point
      const double gam = gains(n, t) * kMw / (kMHz * cfg.noise_psd) / s;
      const double kappa = std::max(state.expansion.b(n, t) / kMHz, kBFloor / kMHz) / std::max(s_hat / s, 1e-9);
      const double rk = std::sqrt(kappa);
      prog.add_rotated_soc(Affine::var(p, gam), Affine(1.0), {Affine::var(snr, rk), Affine::var(b, 1.0 / rk)},
                           "snr_product");
    }
  for (int t = 0; t < tl; ++t) {
    Affine bs, ps;
    for (int n = 0; n < nl; ++n)
      if (assoc(n, t)) {
        bs += Affine::var(bv(n, t));
        ps += Affine::var(pv(n, t));
      }
    if (bs.terms.empty()) continue;
    prog.add_less_equal(bs - cfg.b_total_max / kMHz, "bandwidth");
    prog.add_less_equal(ps - cfg.p_total_max / kMw, "power");
  }
  const auto gamma = prog.add_variable("gamma");
  for (int n = 0; n < nl; ++n) {
    Affine lin = Affine::var(gamma, -2.0 * tl);
    std::vector<Affine> sq;
    for (int t = 0; t < tl; ++t) {
      if (!assoc(n, t)) continue;
      const double bh = std::max(state.expansion.b(n, t) / kMHz, kBFloor / kMHz);
      const double snr = state.snr(n, t);
      // B psi = (al B)(psi / al); al^2 = -d psi / dB at fixed power makes the
      // linearization error vanish along bandwidth trades
      const double al = std::sqrt(std::max(snr / ((1.0 + snr) * bh * ln2), 1e-6));
      const double a = al * bh + state.se(n, t) / al;
      lin += Affine::var(bv(n, t), 2.0 * a * al) + Affine::var(ev(n, t), 2.0 * a / al) - a * a;
      sq.push_back(Affine::var(bv(n, t), al));
      sq.push_back(Affine::var(ev(n, t), 1.0 / al));
    }
    if (sq.empty())
      prog.add_less_equal(Affine::var(gamma), "no_slots");
    else
      prog.add_rotated_soc(lin, Affine(0.5), sq, "throughput");
  }
  prog.maximize(Affine::var(gamma));

  const cvx::SolveReport rep = cvx::solve(prog);
  const bool usable = rep.status == cvx::Status::optimal ||
                      (rep.status == cvx::Status::max_iters && prog.max_violation(rep.x) < 1e-6);
  if (!usable) return res;

  AllocationTable out{Grid<double>(nl, tl), Grid<double>(nl, tl)};
  for (int n = 0; n < nl; ++n)
    for (int t = 0; t < tl; ++t) {
      if (!assoc(n, t)) continue;
      out.b(n, t) = std::clamp(rep[bv(n, t)] * kMHz, kBFloor, cfg.b_total_max);
      out.p(n, t) = std::clamp(rep[pv(n, t)] * kMw, 0.0, cfg.p_user_max);
    }
  for (int t = 0; t < tl; ++t) {
    fit_column(out.b, t, cfg.b_total_max);
    fit_column(out.p, t, cfg.p_total_max);
  }
  res.alloc = out;
  res.state = tight_slacks(cfg, assoc, gains, out);
  res.gamma = min_of(user_rates(cfg, gains, assoc, out));
  res.gamma_surrogate = rep[gamma] * kMHz;
  res.qos_met = res.gamma * tl * cfg.slot_duration >= cfg.qos_bits;
  res.stalled = false;
  return res;
}

AllocationTable sca_allocation(const ScenarioConfig& cfg, const AssociationMatrix& assoc, const Grid<double>& gains,
                               ScaTrace* trace) {
  return sca_allocation(cfg, assoc, gains, init_allocation(cfg, assoc), trace);
}

AllocationTable sca_allocation(const ScenarioConfig& cfg, const AssociationMatrix& assoc, const Grid<double>& gains,
                               const AllocationTable& init, ScaTrace* trace) {
  ScaTrace local;
  ScaTrace& tr = trace ? *trace : local;
  tr = {};
  bool usable = init.b.rows == assoc.users() && init.b.cols == assoc.slots() &&
                allocation_violation(cfg, assoc, init) <= 1e-9;
  for (int n = 0; usable && n < assoc.users(); ++n)
    for (int t = 0; t < assoc.slots(); ++t)
      if (assoc(n, t) && init.b(n, t) <= 0.0) usable = false;
  AllocationTable best = usable ? init : init_allocation(cfg, assoc);
  double f_best = min_of(user_rates(cfg, gains, assoc, best));
  tr.objective.push_back(f_best);
  const double eps = cfg.sca_tol * kMHz;
  for (int it = 0; it < cfg.sca_max_iters; ++it) {
    const AllocStep step = solve_allocation_step(cfg, tight_slacks(cfg, assoc, gains, best), assoc, gains);
    if (step.stalled) {
      tr.stalled = true;
      tr.converged = true;
      break;
    }
    ++tr.iterations;
    tr.surrogate.push_back(step.gamma_surrogate);
    if (step.gamma < f_best) {
      tr.objective.push_back(f_best);
      tr.converged = true;
      break;
    }
    const double gain = step.gamma - f_best;
    best = step.alloc;
    f_best = step.gamma;
    tr.objective.push_back(f_best);
    if (gain < eps) {
      tr.converged = true;
      break;
    }
  }
  return best;
}

}  // namespace uavnet
