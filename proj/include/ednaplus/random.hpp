#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace ednaplus {

// Derives a well-mixed 64-bit seed for substream `index` of `seed`.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // (0, 1)
  double normal() { return std_normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double exponential(double rate);
  // Gamma with shape and rate.
  double gamma(double shape, double rate);
  double beta(double a, double b);
  // Inverse gamma with shape a and scale b (density prop. x^{-a-1} e^{-b/x}).
  double inv_gamma(double shape, double scale) { return scale / gamma(shape, 1.0); }
  bool bernoulli(double p) { return uniform() < p; }
  std::int64_t poisson(double mean);
  // Negative binomial with mean mu and size r.
  std::int64_t neg_binomial(double mu, double size);
  // Index drawn proportionally to exp(logw).
  int categorical_log(const double* logw, int n);

  // Draw from N(P^{-1} b, P^{-1}) given precision P.
  Eigen::VectorXd gaussian_from_precision(const Eigen::MatrixXd& P, const Eigen::VectorXd& b);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> std_normal_;
};

namespace dens {

inline constexpr double kLogTwoPi = 1.8378770664093454836;

double normal_log(double x, double mean, double var);
double gamma_log(double x, double shape, double rate);
double inv_gamma_log(double x, double shape, double scale);
double beta_log(double x, double a, double b);
double poisson_log(std::int64_t y, double mean);
double neg_binomial_log(std::int64_t y, double mu, double size);
double log_logistic(double x);  // log(1 / (1 + e^{-x}))
double logistic(double x);
double log_sum_exp(double a, double b);
double normal_cdf(double x);
double normal_log_cdf(double x);

}  // namespace dens

}  // namespace ednaplus
