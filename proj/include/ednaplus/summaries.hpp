#pragma once

#include <string>
#include <vector>

#include "ednaplus/data_model.hpp"
#include "ednaplus/model_state.hpp"

namespace ednaplus {

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double lower = 0.0;   // 2.5%
  double median = 0.0;
  double upper = 0.0;   // 97.5%
  double ess = 0.0;
  double rhat = 1.0;    // split-chain scale reduction
};

struct SummaryReport {
  int n_draws = 0;   // per chain
  int n_chains = 0;
  std::vector<ParamSummary> rows;

  const ParamSummary* find(const std::string& name) const;
};

// Minimum number of draws per chain accepted by the summaries.
inline constexpr int kMinSummaryDraws = 100;

// Type-7 (linear interpolation) quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double prob);

// Effective sample size from the autocorrelation sum, truncated at the first
// pair of consecutive lags whose sum is negative. Clamped to [1, N].
double effective_sample_size(const std::vector<double>& x);

// Split-chain potential scale reduction over one or more chains.
double split_rhat(const std::vector<std::vector<double>>& chains);

// Summaries of every stored scalar plus derived sqrt(T_ss) rows. Throws
// std::invalid_argument with fewer than kMinSummaryDraws draws.
SummaryReport summarize_draws(const Draws& draws);
SummaryReport summarize_draws(const std::vector<Draws>& chains);

// Posterior mean of the correlation matrix implied by the T draws (each row
// of the table is one S x S matrix in column-major order).
Matrix species_correlation(const DrawTable& T, int S);

struct BiomassSurface {
  Matrix grid;              // points x 2, raw coordinates
  Matrix mean_log_biomass;  // points x S
  std::vector<std::string> species;
  int n_extrapolated = 0;   // grid points outside the site bounding box
};

// Posterior mean log-biomass (centred scale) at new locations. Each draw
// contributes the row-conditional mean beta0_bar + g B + k' Sigma^{-1} R,
// where R is the site residual of that draw; species are handled one at a
// time, which gives the exact conditional mean of the matrix-normal.
// `grid_covariates` must have one column per site covariate of the model.
BiomassSurface predict_biomass_grid(const Draws& draws, const OtuDataset& data,
                                    const HyperParams& hyper, const Matrix& grid_coords,
                                    const Matrix& grid_covariates);

// Min-max rescales each species' surface to [0, 1] and sums across species.
// Species with a flat surface contribute 0.
Vector biodiversity_index(const BiomassSurface& surface);

}  // namespace ednaplus
