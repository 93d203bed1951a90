#include <algorithm>
#include <cmath>

#include "cvx_internal.hpp"

namespace uavnet::cvx::detail {

namespace {

double soc_det(const double* p, int dim) {
  double x2 = 0.0;
  for (int i = 1; i < dim; ++i) x2 += p[i] * p[i];
  return p[0] * p[0] - x2;
}

Eigen::Matrix3d exp_hessian(const double* p) {
  const double u = p[0], v = p[1], w = p[2];
  const double lg = std::log(w / v);
  const double psi = v * lg - u;
  const Eigen::Vector3d dpsi(-1.0, lg - 1.0, v / w);
  Eigen::Matrix3d d2 = Eigen::Matrix3d::Zero();
  d2(1, 1) = -1.0 / v;
  d2(1, 2) = d2(2, 1) = 1.0 / w;
  d2(2, 2) = -v / (w * w);
  Eigen::Matrix3d h = -d2 / psi + dpsi * dpsi.transpose() / (psi * psi);
  h(1, 1) += 1.0 / (v * v);
  h(2, 2) += 1.0 / (w * w);
  return h;
}

}  // namespace

Eigen::VectorXd barrier_hess_mul(const Canonical& prob, const Eigen::VectorXd& s, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(prob.m());
  for (const auto& blk : prob.blocks) {
    const double* p = s.data() + blk.offset;
    const double* q = v.data() + blk.offset;
    double* o = out.data() + blk.offset;
    switch (blk.kind) {
      case ConeKind::nonneg:
        for (int i = 0; i < blk.dim; ++i) o[i] = q[i] / (p[i] * p[i]);
        break;
      case ConeKind::soc: {
        // Hess = g g' + (2/d) diag(-1, 1, .., 1), g = 2 (-p0, p1, ..) / d
        const double d = soc_det(p, blk.dim);
        double gv = -p[0] * q[0];
        for (int i = 1; i < blk.dim; ++i) gv += p[i] * q[i];
        gv *= 2.0 / d;
        o[0] = -2.0 * p[0] / d * gv - 2.0 / d * q[0];
        for (int i = 1; i < blk.dim; ++i) o[i] = 2.0 * p[i] / d * gv + 2.0 / d * q[i];
        break;
      }
      case ConeKind::exp: {
        Eigen::Map<Eigen::Vector3d> om(o);
        om = exp_hessian(p) * Eigen::Map<const Eigen::Vector3d>(q);
        break;
      }
    }
  }
  return out;
}

KktSystem::KktSystem(const Canonical& prob) : prob_(prob), h_(prob.n, prob.n), dense_(prob.n <= kDenseMax) {
  a_ = Eigen::MatrixXd::Zero(prob.p(), prob.n);
  for (int r = 0; r < prob.p(); ++r) {
    const auto& row = prob.a_rows[r];
    for (std::size_t k = 0; k < row.cols.size(); ++k) a_(r, row.cols[k]) += row.vals[k];
  }
  at_ = a_.transpose();
}

void KktSystem::fill(const Eigen::VectorXd& s) {
  std::size_t k = 0;
  auto put = [&](int r, int c, double v) {
    if (dense_)
      hd_(r, c) += v;
    else if (analyzed_)
      vals_[slot_[k++]] += v;
    else
      trip_.emplace_back(r, c, v);
  };
  for (const auto& blk : prob_.blocks) {
    const double* p = s.data() + blk.offset;
    if (blk.kind == ConeKind::nonneg) {
      for (int i = 0; i < blk.dim; ++i) {
        const auto& row = prob_.g_rows[blk.offset + i];
        const double w = 1.0 / (p[i] * p[i]);
        for (std::size_t a = 0; a < row.cols.size(); ++a)
          for (std::size_t b = 0; b < row.cols.size(); ++b) put(row.cols[a], row.cols[b], w * row.vals[a] * row.vals[b]);
      }
      continue;
    }
    if (blk.kind == ConeKind::soc) {
      const double d = soc_det(p, blk.dim);
      Eigen::VectorXd g(blk.dim);
      g[0] = -2.0 * p[0] / d;
      for (int i = 1; i < blk.dim; ++i) g[i] = 2.0 * p[i] / d;
      const Eigen::VectorXd q = blk.gsub.transpose() * g;
      local_.noalias() = q * q.transpose();
      local_ += (2.0 / d) * blk.gdg;
    } else {
      local_.noalias() = blk.gsub.transpose() * exp_hessian(p) * blk.gsub;
    }
    for (std::size_t a = 0; a < blk.cols.size(); ++a)
      for (std::size_t b = 0; b < blk.cols.size(); ++b)
        put(blk.cols[a], blk.cols[b], local_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
  }
}

bool KktSystem::factor(const Eigen::VectorXd& s) {
  if (dense_) {
    hd_.setZero(prob_.n, prob_.n);
    fill(s);
    double scale = std::max(1.0, hd_.diagonal().cwiseAbs().maxCoeff());
    double reg = 1e-13 * scale;
    bool ok = false;
    for (int attempt = 0; attempt < 8 && !ok; ++attempt, reg *= 100.0) {
      Eigen::MatrixXd m = hd_;
      m.diagonal().array() += reg;
      dllt_.compute(m);
      ok = dllt_.info() == Eigen::Success;
    }
    if (!ok) return false;
    return factor_schur();
  }
  if (!analyzed_) {
    trip_.clear();
    fill(s);
    const std::size_t nt = trip_.size();
    for (int i = 0; i < prob_.n; ++i) trip_.emplace_back(i, i, 0.0);
    // tag every triplet with its index so the compressed slot of each can be found
    Eigen::SparseMatrix<double> tag(prob_.n, prob_.n);
    std::vector<Eigen::Triplet<double>> pos;
    pos.reserve(trip_.size());
    for (const auto& t : trip_) pos.emplace_back(t.row(), t.col(), 0.0);
    tag.setFromTriplets(pos.begin(), pos.end());
    tag.makeCompressed();
    slot_.resize(nt);
    for (std::size_t k = 0; k < nt; ++k) {
      const int r = trip_[k].row(), c = trip_[k].col();
      const int* first = tag.innerIndexPtr() + tag.outerIndexPtr()[c];
      const int* last = tag.innerIndexPtr() + tag.outerIndexPtr()[c + 1];
      slot_[k] = static_cast<int>(std::lower_bound(first, last, r) - tag.innerIndexPtr());
    }
    diag_.resize(static_cast<std::size_t>(prob_.n));
    for (int i = 0; i < prob_.n; ++i) {
      const int* first = tag.innerIndexPtr() + tag.outerIndexPtr()[i];
      const int* last = tag.innerIndexPtr() + tag.outerIndexPtr()[i + 1];
      diag_[static_cast<std::size_t>(i)] = static_cast<int>(std::lower_bound(first, last, i) - tag.innerIndexPtr());
    }
    h_ = tag;
    vals_.assign(static_cast<std::size_t>(h_.nonZeros()), 0.0);
    llt_.analyzePattern(h_);
    analyzed_ = true;
    trip_.clear();
    trip_.shrink_to_fit();
  }
  std::fill(vals_.begin(), vals_.end(), 0.0);
  fill(s);
  std::copy(vals_.begin(), vals_.end(), h_.valuePtr());

  double scale = 1.0;
  for (int d : diag_) scale = std::max(scale, std::abs(vals_[static_cast<std::size_t>(d)]));
  double reg = 1e-13 * scale;
  bool ok = false;
  for (int attempt = 0; attempt < 8 && !ok; ++attempt, reg *= 100.0) {
    for (int d : diag_) h_.valuePtr()[d] = vals_[static_cast<std::size_t>(d)] + reg;
    llt_.factorize(h_);
    ok = llt_.info() == Eigen::Success;
  }
  std::copy(vals_.begin(), vals_.end(), h_.valuePtr());
  if (!ok) return false;
  return factor_schur();
}

bool KktSystem::factor_schur() {
  if (prob_.p() > 0) {
    hinv_at_ = dense_ ? Eigen::MatrixXd(dllt_.solve(at_)) : Eigen::MatrixXd(llt_.solve(at_));
    Eigen::MatrixXd sc = a_ * hinv_at_;
    sc.diagonal().array() += 1e-14 * std::max(1.0, sc.diagonal().cwiseAbs().maxCoeff());
    schur_.compute(sc);
    if (schur_.info() != Eigen::Success) return false;
  }
  return true;
}

bool KktSystem::solve(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2, Eigen::VectorXd& dx,
                      Eigen::VectorXd& dy) const {
  const int p = prob_.p();
  auto apply = [&](const Eigen::VectorXd& q1, const Eigen::VectorXd& q2, Eigen::VectorXd& x, Eigen::VectorXd& y) {
    const Eigen::VectorXd hq = dense_ ? Eigen::VectorXd(dllt_.solve(q1)) : Eigen::VectorXd(llt_.solve(q1));
    if (p > 0) {
      y = schur_.solve(a_ * hq - q2);
      x = hq - hinv_at_ * y;
    } else {
      y.resize(0);
      x = hq;
    }
  };
  apply(r1, r2, dx, dy);
  for (int it = 0; it < 2; ++it) {
    Eigen::VectorXd e1 = dense_ ? Eigen::VectorXd(r1 - hd_ * dx) : Eigen::VectorXd(r1 - h_ * dx);
    if (p > 0) e1 -= a_.transpose() * dy;
    Eigen::VectorXd e2 = p > 0 ? Eigen::VectorXd(r2 - a_ * dx) : Eigen::VectorXd(0);
    Eigen::VectorXd cx, cy;
    apply(e1, e2, cx, cy);
    dx += cx;
    if (p > 0) dy += cy;
  }
  return dx.allFinite() && (p == 0 || dy.allFinite());
}

}  // namespace uavnet::cvx::detail
