#include <doctest.h>

#include <cmath>
#include <vector>

#include "ednaplus/laplace_mh.hpp"
#include "support.hpp"

using namespace ednaplus;

namespace {

Derivs<1> gaussian_target(double x, double mean, double sd) {
  Derivs<1> d;
  const double z = (x - mean) / sd;
  d.value = -0.5 * z * z;
  d.grad[0] = -z / sd;
  d.hess(0, 0) = -1.0 / (sd * sd);
  return d;
}

// Student t with 5 degrees of freedom around 3: convex beyond |x-3| > sqrt(5).
Derivs<1> t5_target(double x) {
  const double a = x - 3.0, u = 1.0 + a * a / 5.0;
  Derivs<1> d;
  d.value = -3.0 * std::log(u);
  d.grad[0] = -6.0 * a / (5.0 * u);
  d.hess(0, 0) = -6.0 / 5.0 * (1.0 / u - 2.0 * a * a / (5.0 * u * u));
  return d;
}

}  // namespace

TEST_SUITE("laplace_mh") {

TEST_CASE("gaussian targets are accepted with probability one") {
  Rng rng(1);
  AdaptiveScale fb;
  double x = -4.0;
  for (int t = 0; t < 2000; ++t) {
    auto f = [](const FixedVec<1>& v) { return gaussian_target(v[0], 1.5, 0.7); };
    const auto r = laplace_mh_scalar(f, x, rng, fb, false);
    REQUIRE(r.accepted);
    REQUIRE_FALSE(r.fallback);
    x = r.value[0];
  }
}

TEST_CASE("long run recovers the mean of N(3, 0.5^2)") {
  Rng rng(2);
  AdaptiveScale fb;
  double x = 0.0;
  const int N = 20000;
  std::vector<double> xs(N);
  for (int t = 0; t < N; ++t) {
    auto f = [](const FixedVec<1>& v) { return gaussian_target(v[0], 3.0, 0.5); };
    x = laplace_mh_scalar(f, x, rng, fb, false).value[0];
    xs[t] = x;
  }
  CHECK(std::abs(testsupport::mean_of(xs) - 3.0) < 3 * testsupport::batch_se(xs));
  CHECK(std::sqrt(testsupport::var_of(xs)) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("two-dimensional gaussian is proposed exactly") {
  Rng rng(3);
  AdaptiveScale fb;
  FixedMat<2> P;
  P << 2.0, 0.6, 0.6, 1.0;
  FixedVec<2> mu(1.0, -2.0);
  auto f = [&](const FixedVec<2>& x) {
    Derivs<2> d;
    const FixedVec<2> e = x - mu;
    d.value = -0.5 * e.dot(P * e);
    d.grad = -P * e;
    d.hess = -P;
    return d;
  };
  FixedVec<2> x(5.0, 5.0);
  for (int t = 0; t < 200; ++t) {
    const auto r = laplace_mh_step<2>(f, x, rng, fb, false);
    REQUIRE(r.accepted);
    x = r.value;
  }
}

TEST_CASE("non-concave start falls back to the random walk and stays ergodic") {
  Rng rng(4);
  AdaptiveScale fb;
  double x = 12.0;
  auto f = [](const FixedVec<1>& v) { return t5_target(v[0]); };
  const auto first = laplace_mh_scalar(f, x, rng, fb, true);
  CHECK(first.fallback);
  const int N = 60000;
  std::vector<double> xs(N);
  int fallbacks = 0;
  for (int t = 0; t < N; ++t) {
    const auto r = laplace_mh_scalar(f, x, rng, fb, t < 5000);
    fallbacks += r.fallback;
    x = r.value[0];
    xs[t] = x;
  }
  CHECK(fallbacks > 0);
  std::vector<double> kept(xs.begin() + 5000, xs.end());
  CHECK(std::abs(testsupport::mean_of(kept) - 3.0) < 3 * testsupport::batch_se(kept));
}

TEST_CASE("adaptive scale moves toward the target acceptance") {
  AdaptiveScale s;
  const double start = s.log_scale;
  for (int i = 0; i < 50; ++i) s.adapt(true);
  CHECK(s.log_scale > start);
  AdaptiveScale r;
  for (int i = 0; i < 50; ++i) r.adapt(false);
  CHECK(r.log_scale < start);
}

TEST_CASE("random-walk step keeps the target invariant") {
  Rng rng(5);
  AdaptiveScale sc;
  double x = 0.0;
  const int N = 100000;
  std::vector<double> xs(N);
  auto logf = [](double v) { return v > 0 ? -2.0 * v : -INFINITY; };  // Exp(2)
  for (int t = 0; t < N; ++t) {
    rw_mh_step(logf, x, rng, sc, t < 2000);
    xs[t] = x;
  }
  std::vector<double> kept(xs.begin() + 2000, xs.end());
  CHECK(std::abs(testsupport::mean_of(kept) - 0.5) < 3 * testsupport::batch_se(kept));
}

}  // TEST_SUITE
