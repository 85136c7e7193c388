#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ednaplus/data_model.hpp"
#include "ednaplus/model_state.hpp"
#include "ednaplus/random.hpp"

namespace ednaplus {

// Generative settings. Defaults reproduce the biomass-difference study:
// S=40, tau=.5, sigma=.5, sigma_u=1, beta0=0, lambda_s ~ N(7,1), r_s=100,
// phi0_s ~ N(-1.5, .001), contamination probability .02 with spread 1,
// p=.95, q=.05, mu0=5, n0=5, pi=.9, mu_tilde=100.
struct SimSettings {
  int n_sites = 100;
  int samples_per_site = 2;  // M
  int pcrs_per_sample = 2;   // K
  int n_species = 40;        // S
  int n_spikes = 0;          // S*
  int n_site_covariates = 0;
  int n_sample_covariates = 0;
  int n_negative_controls = 0;  // extra negative-control samples at the last site

  double tau = 0.5;      // between-site sd
  double sigma = 0.5;    // between-sample sd
  double sigma_u = 1.0;  // pipeline-effect sd
  double beta0 = 0.0;
  double beta_sd = 1.0;    // sd of the site-covariate coefficients
  double beta_w_sd = 0.0;  // sd of the sample-covariate coefficients
  double lambda_mean = 7.0;
  double lambda_sd = 1.0;
  double spike_lambda_mean = 7.0;
  double spike_lambda_sd = 1.0;
  double spike_log_amount = 0.0;
  double r = 100.0;

  double phi0_mean = -1.5;
  double phi0_var = 0.001;
  double phi1 = 1.0;
  double phi_w_sd = 0.0;
  // Contamination: zeta is P(gamma=1 | delta=0); the contaminant log amount
  // is N(mu_contam, nu^2).
  double zeta = 0.02;
  double mu_contam = 0.0;
  double nu = 1.0;

  double p = 0.95;
  double q = 0.05;
  double mu0 = 5.0;
  double n0 = 5.0;
  double pi = 0.9;
  double mu_tilde = 100.0;

  // Site mean log-biomass N(1, tau^2) at odd sites (1-based) and N(0, tau^2)
  // at even sites, no covariates.
  bool high_low_split = false;
  // Sites at uniform coordinates on the unit square with the kernel row
  // covariance; otherwise sites are independent.
  bool spatial = false;
  double l_Sigma = 0.05;
  // Error-free variant: theta = p = 1, q = zeta = 0.
  bool error_free = false;
  // When > 0, every theta is fixed at this value instead of the logistic model.
  double theta_override = -1.0;

  void validate() const;
};

struct SimulationResult {
  OtuDataset data;
  ModelState truth;  // centred parameterisation, phi0 folded out
  Matrix log_biomass;  // l, n x S, without the amplification effect
  Vector phi0;         // per-species detection intercepts used
};

SimulationResult simulate_dataset(const SimSettings& settings, std::uint64_t seed);

// Draws reads given the PCR outcomes, eta and the noise-read parameters of
// `st`, writing into `data.reads`.
void simulate_reads_given_latents(OtuDataset& data, const ModelState& st, Rng& rng);

// Brier score of a posterior probability against the binary truth.
double brier_score(double posterior_prob, bool truth);

struct StudyFitConfig {
  int n_iter = 1200;
  int n_burnin = 600;
  int thin = 1;
};

struct BrierCell {
  int M = 0, K = 0;
  double mean_brier = 0.0;
  double se = 0.0;
  int n_rep = 0;
};

// Mean Brier score per (M, K) cell on data with the high/low biomass split;
// pairs span low-biomass (even) sites vs high-biomass (odd) sites.
std::vector<BrierCell> brier_study(const std::vector<int>& Ms, const std::vector<int>& Ks,
                                   const SimSettings& settings, int n_rep, std::uint64_t seed,
                                   const StudyFitConfig& fit);

struct SpikeinCell {
  int M = 0, K = 0, S_star = 0;
  double sigma = 0.0, tau = 0.0;
  double rel_error = 1.0;
  double rel_variance = 1.0;
  double abs_error = 0.0;
  double abs_variance = 0.0;
};

// Posterior relative error / variance of within-species biomass differences
// for S* spike-ins, normalised to the S*=0 cell of each configuration. Uses
// the error-free model; the same simulated survey (with max(S*) spike-ins)
// is reused across S* by dropping spike-in columns.
std::vector<SpikeinCell> spikein_study(const std::vector<int>& Ms, const std::vector<int>& Ks,
                                       const std::vector<int>& S_stars,
                                       const std::vector<double>& sigmas,
                                       const std::vector<double>& taus, const SimSettings& settings,
                                       int n_rep, std::uint64_t seed, const StudyFitConfig& fit);

// Keeps only the first `keep` spike-in species of a dataset.
OtuDataset drop_spikes(const OtuDataset& data, int keep);

}  // namespace ednaplus
