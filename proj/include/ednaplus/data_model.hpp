#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ednaplus {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// Observed survey. Samples are numbered site-major (all samples of site 0
// first), PCR replicates sample-major. Row p of `reads` is one PCR replicate,
// columns are the S target species followed by the S* spike-ins.
struct OtuDataset {
  int n_sites = 0;
  int n_species = 0;
  int n_spikes = 0;
  std::vector<int> samples_per_site;
  std::vector<int> pcrs_per_sample;
  CountMatrix reads;
  Vector offsets;
  Matrix site_covariates;
  Matrix sample_covariates;
  Matrix coordinates;  // n_sites x 2, raw units
  Matrix spike_log_amounts;  // n_samples x n_spikes
  std::vector<std::uint8_t> negative_control;  // per sample

  std::vector<std::string> species_names;  // size S + S*
  std::vector<std::string> site_names;
  std::vector<std::string> sample_names;
  std::vector<std::string> site_covariate_names;
  std::vector<std::string> sample_covariate_names;

  int n_samples() const;
  int n_pcrs() const;
  int n_total_species() const { return n_species + n_spikes; }
  int n_site_covariates() const { return static_cast<int>(site_covariates.cols()); }
  int n_sample_covariates() const { return static_cast<int>(sample_covariates.cols()); }

  // Fills missing name vectors with generated labels.
  void fill_default_names();
};

struct HyperParams {
  double sigma_beta_sq = 1.0;
  double l_Sigma = 0.05;
  double a_zeta = 1.0, b_zeta = 50.0;
  double sigma_mu = 1.0;
  double nu_fixed = 1.0;
  double a_p = 20.0, b_p = 1.0;
  double a_q = 1.0, b_q = 100.0;
  double mu_r = 100.0, sigma_r = 100.0;
  double a_sigma = 2.0, b_sigma = 1.0;
  double a_u = 2.0, b_u = 1.0;
  double a_pi = 1.0, b_pi = 1.0;
  double sigma_phi_sq = 1.0;
  double lambda_GH = 1.0;
  // Rates of the exponential priors on the noise-read parameters.
  double rate_mu_tilde = 0.01;
  double rate_mu0 = 0.1;
  double rate_n0 = 0.1;
  // Prior variance of lambda_s for target species; infinity means flat.
  double sigma_lambda_sq = std::numeric_limits<double>::infinity();
  // Prior variance of the amplification effect of spike-in species.
  double sigma_spike_sq = 100.0;

  // Throws std::invalid_argument naming the first non-positive field.
  void validate() const;
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

ValidationReport validate_dataset(const OtuDataset& raw);

// Index maps derived from the ragged sample / PCR structure.
struct SurveyLayout {
  int n_sites = 0;
  int n_samples = 0;
  int n_pcrs = 0;
  std::vector<int> sample_site;
  std::vector<int> sample_first_pcr;
  std::vector<int> sample_n_pcr;
  std::vector<int> site_first_sample;
  std::vector<int> site_n_samples;
  std::vector<int> pcr_sample;

  static SurveyLayout from(const OtuDataset& data);
};

// Affine map of raw coordinates onto the unit square. Both axes share one
// scale so distances keep their shape.
struct CoordinateRescale {
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  double scale = 1.0;

  static CoordinateRescale fit(const Matrix& coords);
  Matrix apply(const Matrix& coords) const;
};

}  // namespace ednaplus
