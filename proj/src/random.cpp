#include "ednaplus/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ednaplus {

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finaliser applied twice
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(seed) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

double Rng::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::exponential(double rate) { return -std::log(uniform()) / rate; }

double Rng::gamma(double shape, double rate) {
  std::gamma_distribution<double> g(shape, 1.0);
  return g(engine_) / rate;
}

double Rng::beta(double a, double b) {
  const double x = gamma(a, 1.0);
  const double y = gamma(b, 1.0);
  if (x + y <= 0.0) return a / (a + b);
  return x / (x + y);
}

std::int64_t Rng::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::int64_t> p(mean);
  return p(engine_);
}

std::int64_t Rng::neg_binomial(double mu, double size) {
  if (!(mu > 0.0)) return 0;
  return poisson(gamma(size, size / mu));
}

int Rng::categorical_log(const double* logw, int n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) mx = std::max(mx, logw[i]);
  if (!std::isfinite(mx)) throw std::runtime_error("categorical_log: no finite weight");
  double total = 0.0;
  double w[64];
  std::vector<double> big;
  double* ws = w;
  if (n > 64) {
    big.resize(n);
    ws = big.data();
  }
  for (int i = 0; i < n; ++i) {
    ws[i] = std::exp(logw[i] - mx);
    total += ws[i];
  }
  double u = uniform() * total;
  for (int i = 0; i < n; ++i) {
    u -= ws[i];
    if (u <= 0.0) return i;
  }
  for (int i = n - 1; i >= 0; --i)
    if (ws[i] > 0.0) return i;
  return n - 1;
}

Eigen::VectorXd Rng::gaussian_from_precision(const Eigen::MatrixXd& P, const Eigen::VectorXd& b) {
  Eigen::LLT<Eigen::MatrixXd> llt(P);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gaussian_from_precision: precision not positive definite");
  Eigen::VectorXd mean = llt.solve(b);
  Eigen::VectorXd z(b.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal();
  return mean + llt.matrixU().solve(z);
}

namespace dens {

double normal_log(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLogTwoPi + std::log(var) + d * d / var);
}

double gamma_log(double x, double shape, double rate) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double inv_gamma_log(double x, double shape, double scale) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

double beta_log(double x, double a, double b) {
  if (!(x > 0.0 && x < 1.0)) return -std::numeric_limits<double>::infinity();
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(x) +
         (b - 1.0) * std::log1p(-x);
}

double poisson_log(std::int64_t y, double mean) {
  if (mean <= 0.0) return y == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  const double yd = static_cast<double>(y);
  return yd * std::log(mean) - mean - std::lgamma(yd + 1.0);
}

double neg_binomial_log(std::int64_t y, double mu, double size) {
  const double yd = static_cast<double>(y);
  if (mu <= 0.0) return y == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  const double lt = std::log(size + mu);
  return std::lgamma(yd + size) - std::lgamma(size) - std::lgamma(yd + 1.0) +
         size * (std::log(size) - lt) + yd * (std::log(mu) - lt);
}

double log_logistic(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double logistic(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_log_cdf(double x) {
  if (x > -30.0) return std::log(normal_cdf(x));
  // asymptotic expansion of the lower tail
  const double x2 = x * x;
  return -0.5 * x2 - std::log(-x) - 0.5 * kLogTwoPi + std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

}  // namespace dens

}  // namespace ednaplus
