#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ednaplus/likelihood.hpp"
#include "ednaplus/simulator.hpp"
#include "support.hpp"

using namespace ednaplus;
using testsupport::iid_se;
using testsupport::mean_of;

namespace {

SimSettings quiet_settings() {
  SimSettings cfg;
  cfg.n_sites = 50;
  cfg.n_species = 2;
  cfg.lambda_mean = 7.0;
  cfg.lambda_sd = 0.0;
  cfg.tau = 1e-4;
  cfg.sigma = 1e-4;
  cfg.sigma_u = 1e-4;
  cfg.r = 1e6;
  cfg.p = 1.0;
  cfg.q = 0.0;
  cfg.zeta = 0.0;
  cfg.theta_override = 1.0;
  return cfg;
}

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("reads average exp(lambda) when every noise source is switched off") {
  const auto sim = simulate_dataset(quiet_settings(), 3);
  std::vector<double> y;
  for (int p = 0; p < sim.data.reads.rows(); ++p)
    for (int s = 0; s < 2; ++s) y.push_back(static_cast<double>(sim.data.reads(p, s)));
  CHECK(y.size() == 400);
  CHECK(std::abs(mean_of(y) - std::exp(7.0)) < 4 * iid_se(y));
  // Poisson dispersion only.
  CHECK(testsupport::var_of(y) == doctest::Approx(std::exp(7.0)).epsilon(0.2));
}

TEST_CASE("absent species with no false positives and certain zeros give all-zero reads") {
  SimSettings cfg = quiet_settings();
  cfg.theta_override = 1e-300;
  cfg.pi = 1.0;
  const auto sim = simulate_dataset(cfg, 4);
  CHECK(sim.data.reads.maxCoeff() == 0);
  CHECK(sim.truth.delta.maxCoeff() == 0);
  CHECK(sim.truth.c.maxCoeff() == 0);
}

TEST_CASE("simulated surveys are valid, reproducible and consistent with their truth") {
  const auto a = testsupport::tiny_survey(12, 6, 3, 2, 3);
  const auto b = testsupport::tiny_survey(12, 6, 3, 2, 3);
  CHECK(validate_dataset(a.data).ok());
  CHECK(a.data.reads == b.data.reads);
  CHECK(check_state_invariants(a.truth, a.data).empty());
  const ModelContext ctx(a.data, HyperParams{}, false);
  CHECK(std::isfinite(log_joint(ctx, a.truth)));
  CHECK(a.data.coordinates.rows() == 6);
  CHECK(a.data.negative_control.back() == 1);
  CHECK(a.data.samples_per_site.back() == 3);
  const auto c = testsupport::tiny_survey(13, 6, 3, 2, 3);
  CHECK_FALSE(a.data.reads == c.data.reads);
}

TEST_CASE("detection and contamination frequencies follow their probabilities") {
  SimSettings cfg;
  cfg.n_sites = 400;
  cfg.n_species = 2;
  cfg.theta_override = 0.3;
  cfg.zeta = 0.2;
  cfg.p = 0.9;
  cfg.q = 0.1;
  const auto sim = simulate_dataset(cfg, 5);
  const auto& t = sim.truth;
  double on = 0, off = 0, gam = 0, c1 = 0, cells_on = 0, c2 = 0, cells_off = 0;
  for (int j = 0; j < t.delta.rows(); ++j)
    for (int s = 0; s < 2; ++s) {
      on += t.delta(j, s);
      if (!t.delta(j, s)) {
        ++off;
        gam += t.gamma(j, s);
      }
      const bool present = t.delta(j, s) || t.gamma(j, s);
      for (int k = 0; k < 2; ++k) {
        const int c = t.c(2 * j + k, s);
        if (present) {
          ++cells_on;
          c1 += c == 1;
        } else {
          ++cells_off;
          c2 += c == 2;
        }
      }
    }
  const double J = static_cast<double>(t.delta.rows()) * 2;
  auto se = [](double p, double n) { return std::sqrt(p * (1 - p) / n); };
  CHECK(std::abs(on / J - 0.3) < 4 * se(0.3, J));
  CHECK(std::abs(gam / off - 0.2) < 4 * se(0.2, off));
  CHECK(std::abs(c1 / cells_on - 0.9) < 4 * se(0.9, cells_on));
  CHECK(std::abs(c2 / cells_off - 0.1) < 4 * se(0.1, cells_off));
}

TEST_CASE("reads given latents follow the three outcome laws") {
  auto sim = testsupport::tiny_survey(6, 30, 2, 2, 2);
  ModelState st = sim.truth;
  st.pi = 0.6;
  st.mu0 = 4.0;
  st.n0 = 3.0;
  st.mu_tilde = 7.0;
  Rng rng(7);
  std::vector<double> zero_cells, noise_reads, shifted;
  for (int rep = 0; rep < 50; ++rep) {
    simulate_reads_given_latents(sim.data, st, rng);
    for (int p = 0; p < st.c.rows(); ++p)
      for (int s = 0; s < st.c.cols(); ++s) {
        const double y = static_cast<double>(sim.data.reads(p, s));
        if (st.c(p, s) == 0) {
          zero_cells.push_back(y == 0);
          if (y > 0) shifted.push_back(y - 1);
        } else if (st.c(p, s) == 2) {
          noise_reads.push_back(y);
        }
      }
  }
  REQUIRE(noise_reads.size() > 100);
  CHECK(std::abs(mean_of(zero_cells) - 0.6) < 4 * iid_se(zero_cells));
  CHECK(std::abs(mean_of(noise_reads) - 7.0) < 4 * iid_se(noise_reads));
  CHECK(std::abs(mean_of(shifted) - 4.0) < 4 * iid_se(shifted));
}

TEST_CASE("PCR replicates of a sample are exchangeable") {
  std::vector<double> first, second;
  for (int rep = 0; rep < 200; ++rep) {
    const auto sim = testsupport::tiny_survey(1000 + rep, 4, 2, 2, 2);
    for (int p = 0; p + 1 < sim.data.reads.rows(); p += 2)
      for (int s = 0; s < 2; ++s) {
        first.push_back(std::log1p(static_cast<double>(sim.data.reads(p, s))));
        second.push_back(std::log1p(static_cast<double>(sim.data.reads(p + 1, s))));
      }
  }
  std::vector<double> diff(first.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = first[i] - second[i];
  CHECK(std::abs(mean_of(diff)) < 4 * iid_se(diff));
  CHECK(testsupport::var_of(first) == doctest::Approx(testsupport::var_of(second)).epsilon(0.1));
}

TEST_CASE("the high/low split separates odd and even sites") {
  SimSettings cfg;
  cfg.n_sites = 200;
  cfg.n_species = 3;
  cfg.high_low_split = true;
  const auto sim = simulate_dataset(cfg, 8);
  std::vector<double> high, low;
  for (int i = 0; i < 200; ++i)
    for (int s = 0; s < 3; ++s) (i % 2 == 0 ? high : low).push_back(sim.log_biomass(i, s));
  CHECK(mean_of(high) - mean_of(low) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(std::sqrt(testsupport::var_of(low)) == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("invalid settings name the offending field") {
  SimSettings cfg;
  cfg.n_sites = 1;
  CHECK_THROWS_WITH_AS(simulate_dataset(cfg, 1), doctest::Contains("n_sites"), std::invalid_argument);
  cfg = SimSettings{};
  cfg.p = 0.0;
  CHECK_THROWS_WITH_AS(simulate_dataset(cfg, 1), doctest::Contains("p"), std::invalid_argument);
  cfg = SimSettings{};
  cfg.error_free = true;
  cfg.n_negative_controls = 1;
  CHECK_THROWS_WITH_AS(simulate_dataset(cfg, 1), doctest::Contains("n_negative_controls"), std::invalid_argument);
}

TEST_CASE("Brier score examples") {
  CHECK(brier_score(1.0, true) == 0.0);
  CHECK(brier_score(0.5, true) == 0.25);
  CHECK(brier_score(0.5, false) == 0.25);
  CHECK(brier_score(0.0, true) == 1.0);
  CHECK(brier_score(0.2, false) == doctest::Approx(0.04));
}

TEST_CASE("dropping spike-ins keeps the leading columns") {
  SimSettings cfg;
  cfg.n_sites = 3;
  cfg.n_species = 2;
  cfg.n_spikes = 3;
  cfg.spike_log_amount = 1.5;
  const auto sim = simulate_dataset(cfg, 9);
  const OtuDataset d = drop_spikes(sim.data, 1);
  CHECK(d.n_spikes == 1);
  CHECK(d.reads.cols() == 3);
  CHECK(d.reads == sim.data.reads.leftCols(3));
  CHECK(d.spike_log_amounts.cols() == 1);
  CHECK(d.species_names.back() == "spike1");
  CHECK(validate_dataset(d).ok());
  CHECK(drop_spikes(sim.data, 0).n_total_species() == 2);
  CHECK_THROWS_AS(drop_spikes(sim.data, 4), std::invalid_argument);
}

TEST_CASE("Brier study returns one cell per design on a small grid") {
  SimSettings cfg;
  cfg.n_sites = 6;
  cfg.n_species = 2;
  StudyFitConfig fit;
  fit.n_iter = 60;
  fit.n_burnin = 30;
  const auto cells = brier_study({1, 2}, {1, 2}, cfg, 2, 3, fit);
  REQUIRE(cells.size() == 4);
  CHECK(cells[3].M == 2);
  CHECK(cells[3].K == 2);
  for (const auto& c : cells) {
    CHECK(c.n_rep == 2);
    CHECK(c.mean_brier >= 0.0);
    CHECK(c.mean_brier <= 1.0);
  }
}

TEST_CASE("spike-in study normalises to the no-spike cell") {
  SimSettings cfg;
  cfg.n_sites = 4;
  cfg.n_species = 2;
  StudyFitConfig fit;
  fit.n_iter = 60;
  fit.n_burnin = 30;
  const auto cells = spikein_study({2}, {1}, {0, 1}, {0.5}, {0.5}, cfg, 1, 5, fit);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].rel_error == 1.0);
  CHECK(cells[0].rel_variance == 1.0);
  CHECK(cells[1].S_star == 1);
  CHECK(cells[1].abs_variance > 0.0);
  CHECK_THROWS_AS(spikein_study({2}, {1}, {1}, {0.5}, {0.5}, cfg, 1, 5, fit), std::invalid_argument);
}

}  // TEST_SUITE
