#pragma once

#include <cstdint>
#include <vector>

#include "ednaplus/laplace_mh.hpp"
#include "ednaplus/likelihood.hpp"
#include "ednaplus/model_state.hpp"
#include "ednaplus/random.hpp"

namespace ednaplus {

// Counting statistics behind the Beta updates of p, q, zeta and pi.
struct BernoulliCounts {
  std::vector<long> n_p, m_p;  // per species incl. spike-ins: c=1 / on cells
  std::vector<long> n_q, m_q;  // per target species: c=2 / off cells
  std::vector<long> n_zeta, m_zeta;  // per target species: gamma=1 / delta=0 samples
  long N0 = 0, M0 = 0;         // c=0 cells with zero reads / all c=0 cells
};

BernoulliCounts count_bernoulli_stats(const ModelContext& ctx, const ModelState& st);

struct SweepOptions {
  bool adapt = true;            // tune random-walk scales
  bool indicator_gibbs = true;  // exact Gibbs for indicator blocks (burn-in)
};

// Encoding of one indicator block (delta, gamma, c_1..c_K) at a sample and
// target species: class 0 is delta=1, class 1 gamma=1, class 2 both off; bit
// k of the low part marks c_k=1 (on classes) or c_k=2 (off class).
int indicator_state_code(const ModelState& st, const SurveyLayout& lay, int j, int s);

// Exhaustive log full conditional of all 3 * 2^K block states given the
// rest of the state, with eta integrated out and v_bar evaluated at `v`
// for the on classes (the off classes carry no v).
std::vector<double> indicator_block_log_weights(const ModelContext& ctx, const ModelState& st,
                                                int j, int s, double v);

class Sampler {
 public:
  Sampler(const OtuDataset& data, const HyperParams& hyper, const ChainConfig& cfg);

  const ModelContext& context() const { return ctx_; }
  const ChainConfig& config() const { return cfg_; }

  ModelState initial_state() const;

  // One full sweep in the documented order:
  // eta, v/u block, L_bar, (beta0_bar, B), beta_w, sigma_s, mu_bar, lambda,
  // r (with eta refresh), phi, indicators, (p, q, zeta, pi), noise
  // parameters, sigma_u, graphical horseshoe.
  void sweep(ModelState& st, Rng& rng, const SweepOptions& opt);

  void update_eta(ModelState& st, Rng& rng) const;
  void refresh_eta_species(ModelState& st, Rng& rng, int s) const;
  void refresh_eta_cell(ModelState& st, Rng& rng, int p, int s) const;
  // `factor_move` = false skips the joint factor-mean step (single-site only).
  void update_v_u_block(ModelState& st, Rng& rng, bool adapt, bool factor_move = true);
  void update_lbar(ModelState& st, Rng& rng, bool adapt);
  void update_lbar_cell(ModelState& st, Rng& rng, int i, int s, bool adapt);
  void update_B0_B(ModelState& st, Rng& rng) const;
  void update_beta_w(ModelState& st, Rng& rng) const;
  void update_sigma_s(ModelState& st, Rng& rng) const;
  void update_mu_bar(ModelState& st, Rng& rng) const;
  void update_lambda(ModelState& st, Rng& rng, bool adapt);
  void update_r(ModelState& st, Rng& rng, bool adapt);
  void update_phi(ModelState& st, Rng& rng) const;
  void update_indicators(ModelState& st, Rng& rng, bool gibbs);
  void update_indicators_block(ModelState& st, Rng& rng, int j, int s, bool gibbs);
  void update_bernoulli_probs(ModelState& st, Rng& rng) const;
  void update_noise_params(ModelState& st, Rng& rng, bool adapt);
  void update_sigma_u(ModelState& st, Rng& rng) const;
  void update_gh(ModelState& st, Rng& rng) const;

  // Adaptive indicator proposal bookkeeping.
  void record_indicator_states(const ModelState& st);
  void refresh_indicator_proposal();
  const std::vector<double>& indicator_proposal(int j, int s) const;

  // Per-cell log targets exposed for oracle tests.
  double lbar_log_target(const ModelState& st, int i, int s, double value) const;
  double lambda_log_target(const ModelState& st, int s, double value) const;
  double r_log_target(const ModelState& st, int s, double r) const;

 private:
  ModelContext ctx_;
  ChainConfig cfg_;

  std::vector<AdaptiveScale> lambda_scale_, r_scale_;
  AdaptiveScale mu_tilde_scale_, mu0_scale_, n0_scale_;
  AdaptiveScale laplace_fallback_;

  // Indicator proposal tables for (sample, target species) blocks.
  std::vector<std::vector<std::uint32_t>> block_counts_;
  std::vector<std::vector<double>> block_phat_;
  std::vector<double> empty_;

  int block_index(int j, int s) const { return j * ctx_.S() + s; }
  void update_spike_lambda(ModelState& st, Rng& rng, int s, bool adapt);
  Matrix lbar_row_residual(const ModelState& st) const;
  void lbar_step(ModelState& st, Rng& rng, int i, int s, Matrix& PD, bool adapt);
  void update_pcr_outcome_only(ModelState& st, Rng& rng, int j, int s);
};

// Runs a single chain and returns its thinned post-burn-in draws.
Draws run_chain(const OtuDataset& data, const HyperParams& hyper, const ChainConfig& config);

// Same, also returning the final state.
Draws run_chain(const OtuDataset& data, const HyperParams& hyper, const ChainConfig& config,
                ModelState* final_state);

// Appends the configured draw groups of `st` to `draws`.
void record_draws(Draws& draws, const ModelContext& ctx, const ModelState& st,
                  const std::vector<std::string>& groups, long iteration);

}  // namespace ednaplus
