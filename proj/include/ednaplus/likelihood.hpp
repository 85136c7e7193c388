#pragma once

#include <atomic>

#include "ednaplus/data_model.hpp"
#include "ednaplus/model_state.hpp"

namespace ednaplus {

// Everything the sampler precomputes from the dataset and hyperparameters.
struct ModelContext {
  const OtuDataset* data = nullptr;
  SurveyLayout layout;
  HyperParams hyper;
  bool error_free = false;

  CoordinateRescale rescale;
  Matrix coords_unit;  // n x 2
  Matrix Sigma;        // kernel row covariance
  Matrix Sigma_inv;
  double Sigma_logdet = 0.0;
  double kernel_jitter = 0.0;
  Matrix Xbar;  // n x (1 + n_z), leading column of ones

  ModelContext(const OtuDataset& data, const HyperParams& hyper, bool error_free);

  int S() const { return data->n_species; }
  int St() const { return data->n_total_species(); }
  int n_w() const { return data->n_sample_covariates(); }
  int n_z() const { return data->n_site_covariates(); }
  bool negctl(int j) const { return !data->negative_control.empty() && data->negative_control[j] != 0; }
  bool is_spike(int s) const { return s >= data->n_species; }

  // log of the expected read count of a c=1 cell before the Gamma noise:
  // v_bar + u + o (+ lambda for spike-ins), clamped to [-30, 30].
  double log_mean(const ModelState& st, int p, int s) const;
  // Same without the clamp; used to build likelihood targets.
  double log_mean_raw(const ModelState& st, int p, int s) const;
  // Logit of the collection probability theta.
  double theta_logit(const ModelState& st, int j, int s) const;
  // Prior mean of v_bar(j, s) for delta = 1.
  double v_delta_mean(const ModelState& st, int j, int s) const;
  // log P(y | c = 0): point mass at zero or 1 + NB(mu0, n0).
  double zero_model_log(std::int64_t y, const ModelState& st) const;
};

// Clamp used for every exponentiated linear predictor. Counts clamps.
double clamp_log_mean(double m);
long clamp_events();

// Log of Gamma(eta | r, r e^{-m}) as a function of m, with first and second
// derivatives in m; derivatives vanish outside the clamp range.
double gamma_noise_log(double m, double r, double eta, double* grad, double* hess);

// Full joint log density of the centred model (data, latents, parameters).
double log_joint(const ModelContext& ctx, const ModelState& st);

// Uncentred parameters that the identifiability transform acts on.
struct UncentredParams {
  Vector beta0;        // S
  Vector lambda;       // S + S*
  Vector eta_collect;  // S, collection effect
  Vector phi0;         // S
  Vector mu;           // S, contamination mean
  Matrix L;            // n x S, log biomass l
  Matrix V;            // n_samples x (S + S*), NaN when absent
};

UncentredParams to_uncentred(const ModelContext& ctx, const ModelState& st);

// Joint log-likelihood of the uncentred hierarchy: matrix-normal l, sample
// noise, collection, contamination, PCR outcome and read terms. Parameter
// priors are excluded. Shared parameters come from `st`.
double uncentred_log_likelihood(const ModelContext& ctx, const ModelState& st,
                                const UncentredParams& up);

// beta0 += c + d, lambda -= c, eta_collect -= d, phi0 -= phi1 (c + d); the
// latent l, v and the contamination mean move accordingly.
void apply_shift_transform(UncentredParams& up, const ModelState& st, const Vector& c,
                           const Vector& d);

}  // namespace ednaplus
