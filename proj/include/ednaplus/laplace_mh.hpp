#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "ednaplus/random.hpp"

namespace ednaplus {

template <int D>
using FixedVec = Eigen::Matrix<double, D, 1>;
template <int D>
using FixedMat = Eigen::Matrix<double, D, D>;

// Value, gradient and Hessian of a log target.
template <int D>
struct Derivs {
  double value = 0.0;
  FixedVec<D> grad = FixedVec<D>::Zero();
  FixedMat<D> hess = FixedMat<D>::Zero();
};

// Robbins-Monro tuned random-walk scale.
struct AdaptiveScale {
  double log_scale = std::log(0.5);
  double target = 0.44;
  long count = 0;

  double scale() const { return std::exp(log_scale); }
  void adapt(bool accepted) {
    ++count;
    log_scale += ((accepted ? 1.0 : 0.0) - target) / std::pow(static_cast<double>(count), 0.6);
    log_scale = std::clamp(log_scale, -12.0, 6.0);
  }
};

template <int D>
struct MhResult {
  FixedVec<D> value;
  bool accepted = false;
  bool fallback = false;
};

namespace detail {

template <int D>
struct NewtonResult {
  bool ok = false;
  FixedVec<D> mode;
  Eigen::LLT<FixedMat<D>> neg_hess;  // Cholesky of -H at the mode
};

template <int D, class F>
NewtonResult<D> newton_mode(F& f, const FixedVec<D>& x0, int max_iter) {
  NewtonResult<D> out;
  FixedVec<D> x = x0;
  Derivs<D> d = f(x);
  if (!std::isfinite(d.value)) return out;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::LLT<FixedMat<D>> llt(-d.hess);
    if (llt.info() != Eigen::Success || !d.hess.allFinite()) return out;
    const FixedVec<D> step = llt.solve(d.grad);
    double t = 1.0;
    bool moved = false;
    for (int h = 0; h < 30; ++h, t *= 0.5) {
      const FixedVec<D> xn = x + t * step;
      Derivs<D> dn = f(xn);
      if (std::isfinite(dn.value) && dn.value >= d.value) {
        x = xn;
        d = dn;
        moved = true;
        break;
      }
    }
    if (!moved || (t * step).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + x.cwiseAbs().maxCoeff()))
      break;
  }
  out.neg_hess.compute(-d.hess);
  if (out.neg_hess.info() != Eigen::Success || !d.hess.allFinite()) return out;
  out.mode = x;
  out.ok = true;
  return out;
}

// log N(y; mode, (-H)^{-1})
template <int D>
double laplace_log_density(const NewtonResult<D>& nr, const FixedVec<D>& y) {
  const FixedVec<D> diff = y - nr.mode;
  const FixedMat<D> L = nr.neg_hess.matrixL();
  const FixedVec<D> z = L.transpose() * diff;
  return -0.5 * (static_cast<double>(diff.size()) * dens::kLogTwoPi + z.squaredNorm()) +
         L.diagonal().array().log().sum();
}

}  // namespace detail

// One Metropolis-Hastings step with a Gaussian proposal at the Newton mode
// of `f`. When the mode cannot be found, a random walk with the adapted
// `fallback` scale is used instead. The reverse proposal density is computed
// from the proposed point, so the move is exact for any target.
template <int D, class F>
MhResult<D> laplace_mh_step(F&& f, const FixedVec<D>& current, Rng& rng, AdaptiveScale& fallback,
                            bool adapt, int max_iter = 20) {
  MhResult<D> res;
  res.value = current;
  const Derivs<D> dc = f(current);
  const double sc = fallback.scale();

  auto rw_log_density = [&](const FixedVec<D>& to, const FixedVec<D>& from) {
    return -0.5 * ((to - from).squaredNorm() / (sc * sc)) - static_cast<double>(to.size()) * std::log(sc);
  };

  const auto fwd = detail::newton_mode<D>(f, current, max_iter);
  FixedVec<D> prop;
  double log_q_fwd;
  if (fwd.ok) {
    FixedVec<D> z;
    for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
    const FixedMat<D> L = fwd.neg_hess.matrixL();
    prop = fwd.mode + L.transpose().template triangularView<Eigen::Upper>().solve(z);
    log_q_fwd = detail::laplace_log_density<D>(fwd, prop);
  } else {
    res.fallback = true;
    for (int i = 0; i < prop.size(); ++i) prop[i] = current[i] + sc * rng.normal();
    log_q_fwd = rw_log_density(prop, current);
  }
  const Derivs<D> dp = f(prop);
  bool accept = false;
  if (std::isfinite(dp.value)) {
    const auto rev = detail::newton_mode<D>(f, prop, max_iter);
    const double log_q_rev =
        rev.ok ? detail::laplace_log_density<D>(rev, current) : rw_log_density(current, prop);
    const double log_alpha = dp.value - dc.value + log_q_rev - log_q_fwd;
    accept = std::isfinite(dc.value) ? (log_alpha >= 0.0 || std::log(rng.uniform()) < log_alpha)
                                     : true;
  }
  if (res.fallback && adapt) fallback.adapt(accept);
  if (accept) res.value = prop;
  res.accepted = accept;
  return res;
}

// Scalar convenience wrapper: f returns Derivs<1>.
template <class F>
MhResult<1> laplace_mh_scalar(F&& f, double current, Rng& rng, AdaptiveScale& fallback, bool adapt,
                              int max_iter = 20) {
  FixedVec<1> x;
  x[0] = current;
  return laplace_mh_step<1>(f, x, rng, fallback, adapt, max_iter);
}

// Random-walk Metropolis step on a scalar with log target `logf`.
template <class F>
bool rw_mh_step(F&& logf, double& x, Rng& rng, AdaptiveScale& scale, bool adapt) {
  const double cur = logf(x);
  const double prop = x + scale.scale() * rng.normal();
  const double lp = logf(prop);
  bool accept = false;
  if (std::isfinite(lp)) {
    const double la = lp - cur;
    accept = !std::isfinite(cur) || la >= 0.0 || std::log(rng.uniform()) < la;
  }
  if (adapt) scale.adapt(accept);
  if (accept) x = prop;
  return accept;
}

}  // namespace ednaplus
