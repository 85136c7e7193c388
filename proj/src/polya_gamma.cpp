#include "ednaplus/polya_gamma.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ednaplus {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTrunc = 0.64;

// Coefficients of the alternating series for the J*(1, z) density.
double series_coef(int n, double x) {
  const double k = (n + 0.5) * kPi;
  if (x > kTrunc) return k * std::exp(-0.5 * k * k * x);
  if (x <= 0.0) return 0.0;
  const double expnt = -1.5 * (std::log(0.5 * kPi) + std::log(x)) + std::log(k) -
                       2.0 * (n + 0.5) * (n + 0.5) / x;
  return std::exp(expnt);
}

// Probability of drawing from the exponential piece of the proposal.
double mass_texpon(double z) {
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double b = std::sqrt(1.0 / kTrunc) * (kTrunc * z - 1.0);
  const double a = -std::sqrt(1.0 / kTrunc) * (kTrunc * z + 1.0);
  const double x0 = std::log(fz) + fz * kTrunc;
  const double xb = x0 - z + dens::normal_log_cdf(b);
  const double xa = x0 + z + dens::normal_log_cdf(a);
  const double q_over_p = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + q_over_p);
}

// Inverse-Gaussian(1/z, 1) truncated to (0, kTrunc).
double truncated_inv_gauss(double z, Rng& rng) {
  double x = kTrunc + 1.0;
  if (1.0 / kTrunc > z) {
    double alpha = 0.0;
    while (rng.uniform() > alpha) {
      double e1 = rng.exponential(1.0);
      double e2 = rng.exponential(1.0);
      while (e1 * e1 > 2.0 * e2 / kTrunc) {
        e1 = rng.exponential(1.0);
        e2 = rng.exponential(1.0);
      }
      x = 1.0 + e1 * kTrunc;
      x = kTrunc / (x * x);
      alpha = std::exp(-0.5 * z * z * x);
    }
  } else {
    const double mu = 1.0 / z;
    while (x > kTrunc) {
      double y = rng.normal();
      y *= y;
      const double half_mu = 0.5 * mu;
      const double mu_y = mu * y;
      x = mu + half_mu * mu_y - half_mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
      if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
    }
  }
  return x;
}

double pg1(Rng& rng, double c) {
  const double z = std::fabs(c) * 0.5;
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  for (;;) {
    double x;
    if (rng.uniform() < mass_texpon(z))
      x = kTrunc + rng.exponential(1.0) / fz;
    else
      x = truncated_inv_gauss(z, rng);
    double s = series_coef(0, x);
    const double y = rng.uniform() * s;
    for (int n = 1;; ++n) {
      if (n % 2 == 1) {
        s -= series_coef(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += series_coef(n, x);
        if (y > s) break;
      }
    }
  }
}

}  // namespace

double polya_gamma_sample(Rng& rng, int b, double c) {
  if (b < 1) throw std::invalid_argument("polya_gamma_sample: b must be >= 1");
  double total = 0.0;
  for (int i = 0; i < b; ++i) total += pg1(rng, c);
  return total;
}

double polya_gamma_mean(double c) {
  if (std::fabs(c) < 1e-6) return 0.25 - c * c / 48.0;
  return std::tanh(0.5 * c) / (2.0 * c);
}

}  // namespace ednaplus
