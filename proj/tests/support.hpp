#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ednaplus/sampler.hpp"
#include "ednaplus/simulator.hpp"

namespace testsupport {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

// Mean and variance of exp(logf) on [lo, hi] by the trapezoid rule.
inline Moments grid_moments(const std::function<double(double)>& logf, double lo, double hi,
                            int n = 20001) {
  std::vector<double> x(n), lf(n);
  double mx = -INFINITY;
  for (int i = 0; i < n; ++i) {
    x[i] = lo + (hi - lo) * i / (n - 1);
    lf[i] = logf(x[i]);
    mx = std::max(mx, lf[i]);
  }
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = std::exp(lf[i] - mx) * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
    z += w;
    m1 += w * x[i];
    m2 += w * x[i] * x[i];
  }
  Moments m;
  m.mean = m1 / z;
  m.var = m2 / z - m.mean * m.mean;
  return m;
}

inline double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double var_of(const std::vector<double>& x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

// Standard error of the mean of independent draws.
inline double iid_se(const std::vector<double>& x) { return std::sqrt(var_of(x) / x.size()); }

// Batch-means standard error of the mean of a correlated chain.
inline double batch_se(const std::vector<double>& x, int n_batches = 40) {
  const std::size_t len = x.size() / n_batches;
  std::vector<double> bm(n_batches);
  for (int b = 0; b < n_batches; ++b) {
    double s = 0.0;
    for (std::size_t t = 0; t < len; ++t) s += x[b * len + t];
    bm[b] = s / static_cast<double>(len);
  }
  return std::sqrt(var_of(bm) / n_batches);
}

// Small simulated survey with every model component switched on.
inline ednaplus::SimulationResult tiny_survey(std::uint64_t seed, int n = 4, int S = 2, int M = 2,
                                              int K = 2) {
  ednaplus::SimSettings cfg;
  cfg.n_sites = n;
  cfg.n_species = S;
  cfg.samples_per_site = M;
  cfg.pcrs_per_sample = K;
  cfg.n_spikes = 1;
  cfg.n_site_covariates = 1;
  cfg.n_sample_covariates = 1;
  cfg.n_negative_controls = 1;
  cfg.spatial = true;
  cfg.lambda_mean = 4.0;
  cfg.spike_lambda_mean = 4.0;
  cfg.beta_w_sd = 0.5;
  cfg.phi_w_sd = 0.5;
  cfg.zeta = 0.2;
  cfg.q = 0.2;
  cfg.p = 0.8;
  cfg.pi = 0.7;
  cfg.mu_tilde = 5.0;
  cfg.r = 20.0;
  return ednaplus::simulate_dataset(cfg, seed);
}

// Minimal balanced dataset with constant reads and no covariates.
inline ednaplus::OtuDataset plain_dataset(int n, int M, int K, int S, std::int64_t y = 5) {
  ednaplus::OtuDataset d;
  d.n_sites = n;
  d.n_species = S;
  d.samples_per_site.assign(n, M);
  d.pcrs_per_sample.assign(n * M, K);
  d.reads = ednaplus::CountMatrix::Constant(n * M * K, S, y);
  d.offsets = ednaplus::Vector::Zero(n * M * K);
  d.fill_default_names();
  return d;
}

// Simulated survey, a sampler over it and its true state. Not copyable: the
// sampler points into `sim.data`.
struct SamplerFixture {
  ednaplus::SimulationResult sim;
  ednaplus::Sampler smp;
  ednaplus::ModelState st;

  explicit SamplerFixture(std::uint64_t seed, const ednaplus::HyperParams& h = {})
      : sim(tiny_survey(seed)), smp(sim.data, h, ednaplus::ChainConfig{}), st(sim.truth) {}
  SamplerFixture(const SamplerFixture&) = delete;
  SamplerFixture& operator=(const SamplerFixture&) = delete;
  const ednaplus::ModelContext& ctx() const { return smp.context(); }
  const ednaplus::OtuDataset& data() const { return sim.data; }
};

}  // namespace testsupport
