#pragma once

#include <cstdint>

namespace ednaplus {

// Gaussian study-design model: n sites, M samples per site, K PCRs per
// sample, S target species and S* spike-ins.
struct DesignSpec {
  int n = 2;
  int M = 1;
  int K = 1;
  int S = 1;
  int S_star = 0;
  double sigma_sq = 1.0;    // sample noise
  double sigma_y_sq = 1.0;  // PCR/sequencing noise
  double sigma_u_sq = 1.0;  // pipeline effect (may be 0)
  double tau_sq = 1.0;      // between-site variance (regression case)
  // Prior variance of the species effects; 0 selects 1e6 * max variance.
  double sigma_lambda_sq = 0.0;

  void validate() const;
  double effective_sigma_lambda_sq() const;
};

// Closed-form posterior variance for a within-species biomass change
// between two sites (flat prior on site biomass).
double var_biomass_diff(const DesignSpec& spec);

// Closed-form posterior variance of a covariate coefficient, averaged over
// i.i.d. N(0,1) covariates. Requires n >= 2.
double var_beta(const DesignSpec& spec);

enum class OracleMode { Diff, Beta };

struct OracleOptions {
  int n_covariate_draws = 200;  // beta mode
  std::uint64_t seed = 1;
  int max_dimension = 5000;
};

// Brute-force reference: builds the joint Gaussian precision over every
// latent of the design model, conditions on the data and reads off the
// requested posterior variance. Diff mode returns half of
// Var(l_1 - l_2 | y) for species 1, the scale the closed form is written on.
// Beta mode averages the posterior precision of species 1's coefficient
// over covariate draws (with control variates on X'X and (1'X)^2) and
// returns its inverse. Throws std::invalid_argument above max_dimension.
double gaussian_design_oracle(const DesignSpec& spec, OracleMode mode,
                              const OracleOptions& opt = {});

// Full Var(l_1 - l_2 | y) from the brute-force model.
double oracle_difference_variance(const DesignSpec& spec, const OracleOptions& opt = {});

// Posterior variance of species 1's coefficient for one covariate vector.
double oracle_beta_variance_given(const DesignSpec& spec, const double* x, const OracleOptions& opt = {});

// Number of latent Gaussian coordinates the oracle forms.
int oracle_dimension(const DesignSpec& spec, OracleMode mode);

}  // namespace ednaplus
