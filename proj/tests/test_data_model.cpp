#include <doctest.h>

#include "ednaplus/data_model.hpp"
#include "support.hpp"

using namespace ednaplus;

namespace {

OtuDataset grid_dataset(int n, int M, int K, int S, int Ss) {
  OtuDataset d;
  d.n_sites = n;
  d.n_species = S;
  d.n_spikes = Ss;
  d.samples_per_site.assign(n, M);
  d.pcrs_per_sample.assign(n * M, K);
  d.reads = CountMatrix::Constant(n * M * K, S + Ss, 3);
  d.offsets = Vector::Zero(n * M * K);
  d.spike_log_amounts = Matrix::Zero(n * M, Ss);
  return d;
}

bool has_warning(const ValidationReport& r, const std::string& needle) {
  for (const auto& w : r.warnings)
    if (w.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_SUITE("data_model") {

TEST_CASE("single species without spike-ins warns about the pipeline effect") {
  const auto rep = validate_dataset(grid_dataset(3, 2, 2, 1, 0));
  CHECK(rep.ok());
  CHECK(has_warning(rep, "u confounded with r_s"));
}

TEST_CASE("balanced design with three species has no warnings") {
  const auto rep = validate_dataset(grid_dataset(3, 2, 2, 3, 0));
  CHECK(rep.ok());
  CHECK(rep.warnings.empty());
}

TEST_CASE("replicate pathologies are reported") {
  CHECK(has_warning(validate_dataset(grid_dataset(3, 2, 1, 3, 0)), "all K_im=1"));
  CHECK(has_warning(validate_dataset(grid_dataset(3, 1, 2, 3, 0)), "all M_i=1"));
  // A spike-in breaks the pipeline confound.
  CHECK_FALSE(has_warning(validate_dataset(grid_dataset(3, 2, 2, 1, 1)), "u confounded"));
}

TEST_CASE("negative read counts are fatal") {
  auto d = grid_dataset(2, 2, 2, 2, 0);
  d.reads(3, 1) = -1;
  const auto rep = validate_dataset(d);
  CHECK_FALSE(rep.ok());
}

TEST_CASE("dimension mismatches and non-finite inputs are fatal") {
  auto d = grid_dataset(2, 2, 2, 2, 1);
  SUBCASE("reads rows") { d.reads.conservativeResize(d.reads.rows() - 1, Eigen::NoChange); }
  SUBCASE("offsets") { d.offsets[0] = std::nan(""); }
  SUBCASE("missing spike amounts") { d.spike_log_amounts.resize(0, 0); }
  SUBCASE("site covariate rows") { d.site_covariates = Matrix::Zero(5, 1); }
  SUBCASE("coordinates") {
    d.coordinates = Matrix::Zero(2, 2);
    d.coordinates(1, 0) = INFINITY;
  }
  SUBCASE("ragged counts") { d.pcrs_per_sample.pop_back(); }
  CHECK_FALSE(validate_dataset(d).ok());
}

TEST_CASE("validation is idempotent") {
  const auto d = testsupport::tiny_survey(3).data;
  const auto a = validate_dataset(d);
  const auto b = validate_dataset(d);
  CHECK(a.errors == b.errors);
  CHECK(a.warnings == b.warnings);
}

TEST_CASE("simulated datasets always validate") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SimSettings cfg;
    cfg.n_sites = 3 + static_cast<int>(seed % 4);
    cfg.n_species = 1 + static_cast<int>(seed % 3);
    cfg.n_spikes = static_cast<int>(seed % 2);
    cfg.n_negative_controls = static_cast<int>(seed % 2);
    cfg.n_site_covariates = static_cast<int>(seed % 3);
    cfg.spatial = seed % 2 == 0;
    const auto rep = validate_dataset(simulate_dataset(cfg, seed).data);
    CHECK_MESSAGE(rep.ok(), "seed ", seed);
  }
}

TEST_CASE("ragged layout indexes samples site-major") {
  OtuDataset d;
  d.n_sites = 2;
  d.samples_per_site = {1, 2};
  d.pcrs_per_sample = {3, 1, 2};
  const auto lay = SurveyLayout::from(d);
  CHECK(lay.n_samples == 3);
  CHECK(lay.n_pcrs == 6);
  CHECK(lay.sample_site == std::vector<int>{0, 1, 1});
  CHECK(lay.sample_first_pcr == std::vector<int>{0, 3, 4});
  CHECK(lay.pcr_sample == std::vector<int>{0, 0, 0, 1, 2, 2});
  CHECK(lay.site_first_sample == std::vector<int>{0, 1});
}

TEST_CASE("coordinates rescale onto the unit square with a shared scale") {
  Matrix c(3, 2);
  c << 100, 50, 300, 50, 200, 150;
  const auto r = CoordinateRescale::fit(c);
  const Matrix u = r.apply(c);
  CHECK(u.minCoeff() == doctest::Approx(0.0));
  CHECK(u.col(0).maxCoeff() == doctest::Approx(1.0));
  CHECK(u(2, 1) == doctest::Approx(0.5));
  // Distances keep their ratios.
  const double d01 = (c.row(0) - c.row(1)).norm(), d02 = (c.row(0) - c.row(2)).norm();
  CHECK((u.row(0) - u.row(1)).norm() / (u.row(0) - u.row(2)).norm() == doctest::Approx(d01 / d02));
}

TEST_CASE("hyperparameter validation names the offending field") {
  HyperParams h;
  CHECK_NOTHROW(h.validate());
  h.b_q = 0.0;
  try {
    h.validate();
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("b_q") != std::string::npos);
  }
  HyperParams g;
  g.lambda_GH = -1.0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

}  // TEST_SUITE
