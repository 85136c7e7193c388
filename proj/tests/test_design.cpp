#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ednaplus/design.hpp"
#include "ednaplus/random.hpp"

using namespace ednaplus;

namespace {

DesignSpec unit_spec(int n, int M, int K, int S, int Ss) {
  DesignSpec d;
  d.n = n;
  d.M = M;
  d.K = K;
  d.S = S;
  d.S_star = Ss;
  return d;
}

DesignSpec random_spec(Rng& rng) {
  DesignSpec d;
  d.n = 4;
  d.M = 1 + static_cast<int>(rng.uniform() * 3);
  d.K = 1 + static_cast<int>(rng.uniform() * 3);
  d.S = 1 + static_cast<int>(rng.uniform() * 3);
  d.S_star = static_cast<int>(rng.uniform() * 3);
  d.sigma_sq = std::exp(rng.normal(0.0, 0.7));
  d.sigma_y_sq = std::exp(rng.normal(0.0, 0.7));
  d.sigma_u_sq = std::exp(rng.normal(0.0, 0.7));
  d.tau_sq = std::exp(rng.normal(0.0, 0.7));
  return d;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_SUITE("design") {

TEST_CASE("biomass-difference examples") {
  CHECK(var_biomass_diff(unit_spec(2, 1, 1, 1, 0)) == doctest::Approx(3.0).epsilon(1e-14));
  DesignSpec d = unit_spec(2, 2, 2, 1, 0);
  d.sigma_u_sq = 0.0;
  CHECK(var_biomass_diff(d) == doctest::Approx(0.75).epsilon(1e-14));
  d = unit_spec(2, 2, 3, 1, 1000000);
  d.sigma_sq = 0.7;
  d.sigma_y_sq = 1.9;
  CHECK(std::abs(var_biomass_diff(d) - (0.7 + 1.9 / 3) / 2) < 1e-5);
}

TEST_CASE("coefficient variance example with no pipeline noise") {
  DesignSpec d = unit_spec(11, 1, 1, 1, 0);
  d.sigma_u_sq = 0.0;
  CHECK(var_beta(d) == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("closed forms shrink with more replication and grow with every noise source") {
  Rng rng(41);
  for (int rep = 0; rep < 300; ++rep) {
    DesignSpec d = random_spec(rng);
    d.n = 2 + static_cast<int>(rng.uniform() * 20);
    const double v6 = var_biomass_diff(d), v7 = var_beta(d);
    auto more = [&](auto field) {
      DesignSpec e = d;
      ++(e.*field);
      return e;
    };
    for (auto f : {&DesignSpec::M, &DesignSpec::K, &DesignSpec::S_star}) {
      const DesignSpec e = more(f);
      CHECK(var_biomass_diff(e) <= v6 * (1 + 1e-14));
      CHECK(var_beta(e) <= v7 * (1 + 1e-14));
    }
    for (auto f : {&DesignSpec::sigma_sq, &DesignSpec::sigma_y_sq, &DesignSpec::sigma_u_sq}) {
      DesignSpec e = d;
      e.*f *= 1.5;
      CHECK(var_biomass_diff(e) >= v6 * (1 - 1e-14));
    }
    if (d.M < 3 && d.K < 3) {
      CHECK(var_biomass_diff(more(&DesignSpec::M)) < v6);
      CHECK(var_biomass_diff(more(&DesignSpec::K)) < v6);
    }
  }
}

TEST_CASE("oracle difference mode reduces to independent noise without a pipeline effect") {
  DesignSpec d = unit_spec(3, 1, 1, 1, 0);
  d.sigma_sq = 0.8;
  d.sigma_y_sq = 1.7;
  d.sigma_u_sq = 0.0;
  CHECK(gaussian_design_oracle(d, OracleMode::Diff) == doctest::Approx(0.8 + 1.7).epsilon(1e-8));
  d.sigma_u_sq = 1e-10;
  CHECK(gaussian_design_oracle(d, OracleMode::Diff) == doctest::Approx(0.8 + 1.7).epsilon(1e-6));
}

TEST_CASE("oracle difference mode is half the variance of the difference") {
  const DesignSpec d = unit_spec(4, 2, 2, 3, 1);
  CHECK(oracle_difference_variance(d) == doctest::Approx(2 * gaussian_design_oracle(d, OracleMode::Diff)));
}

TEST_CASE("biomass-difference closed form agrees with the oracle on random specs") {
  Rng rng(42);
  for (int rep = 0; rep < 40; ++rep) {
    const DesignSpec d = random_spec(rng);
    const double c = var_biomass_diff(d), o = gaussian_design_oracle(d, OracleMode::Diff);
    CHECK_MESSAGE(rel(c, o) <= 1e-4, "M=", d.M, " K=", d.K, " S=", d.S, " S*=", d.S_star, " closed ", c,
                  " oracle ", o);
  }
}

TEST_CASE("coefficient closed form is exact for a single species") {
  for (int Ss : {0, 1, 3})
    for (int M : {1, 2}) {
      DesignSpec d = unit_spec(10, M, 2, 1, Ss);
      d.sigma_u_sq = 2.0;
      d.tau_sq = 0.5;
      const double c = var_beta(d), o = gaussian_design_oracle(d, OracleMode::Beta);
      CHECK_MESSAGE(rel(c, o) <= 1e-4, "M=", M, " S*=", Ss, " closed ", c, " oracle ", o);
    }
}

TEST_CASE("coefficient closed form agrees with the oracle for several species") {
  for (int Ss : {0, 1, 2}) {
    const DesignSpec d = unit_spec(10, 2, 2, 3, Ss);
    const double c = var_beta(d), o = gaussian_design_oracle(d, OracleMode::Beta);
    CHECK_MESSAGE(rel(c, o) <= 0.02, "S*=", Ss, " closed ", c, " oracle ", o, " rel ", rel(c, o));
  }
}

TEST_CASE("oracle refuses oversized or degenerate designs") {
  const DesignSpec big = unit_spec(60, 4, 4, 3, 2);
  OracleOptions opt;
  opt.max_dimension = 500;
  CHECK(oracle_dimension(big, OracleMode::Diff) > 500);
  CHECK_THROWS_WITH_AS(gaussian_design_oracle(big, OracleMode::Diff, opt), doctest::Contains("exceeds cap"),
                       std::invalid_argument);
  CHECK_THROWS_AS(gaussian_design_oracle(unit_spec(1, 1, 1, 1, 0), OracleMode::Diff), std::invalid_argument);
  CHECK_THROWS_AS(var_beta(unit_spec(1, 1, 1, 1, 0)), std::invalid_argument);
  DesignSpec bad = unit_spec(3, 1, 1, 1, 0);
  bad.sigma_y_sq = 0.0;
  CHECK_THROWS_WITH_AS(var_biomass_diff(bad), doctest::Contains("sigma_y_sq"), std::invalid_argument);
}

}  // TEST_SUITE
