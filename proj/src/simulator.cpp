#include "ednaplus/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ednaplus/matnorm.hpp"
#include "ednaplus/sampler.hpp"

namespace ednaplus {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("SimSettings: invalid ") + what);
}

}  // namespace

void SimSettings::validate() const {
  require(n_sites >= 2, "n_sites");
  require(samples_per_site >= 1, "samples_per_site");
  require(pcrs_per_sample >= 1 && pcrs_per_sample <= 16, "pcrs_per_sample");
  require(n_species >= 1, "n_species");
  require(n_spikes >= 0, "n_spikes");
  require(n_site_covariates >= 0, "n_site_covariates");
  require(n_sample_covariates >= 0, "n_sample_covariates");
  require(n_negative_controls >= 0, "n_negative_controls");
  require(tau > 0, "tau");
  require(sigma > 0, "sigma");
  require(sigma_u >= 0, "sigma_u");
  require(beta_sd >= 0, "beta_sd");
  require(beta_w_sd >= 0, "beta_w_sd");
  require(lambda_sd >= 0, "lambda_sd");
  require(spike_lambda_sd >= 0, "spike_lambda_sd");
  require(r > 0, "r");
  require(phi0_var >= 0, "phi0_var");
  require(phi_w_sd >= 0, "phi_w_sd");
  require(zeta >= 0 && zeta < 1, "zeta");
  require(nu > 0, "nu");
  require(p > 0 && p <= 1, "p");
  require(q >= 0 && q < 1, "q");
  require(mu0 > 0, "mu0");
  require(n0 > 0, "n0");
  require(pi >= 0 && pi <= 1, "pi");
  require(mu_tilde > 0, "mu_tilde");
  require(l_Sigma > 0, "l_Sigma");
  require(theta_override <= 1, "theta_override");
  if (error_free) require(n_negative_controls == 0, "n_negative_controls (error-free variant)");
}

SimulationResult simulate_dataset(const SimSettings& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const int n = cfg.n_sites, M = cfg.samples_per_site, K = cfg.pcrs_per_sample;
  const int S = cfg.n_species, Ss = cfg.n_spikes, St = S + Ss;
  const int nz = cfg.n_site_covariates, nw = cfg.n_sample_covariates;

  OtuDataset d;
  d.n_sites = n;
  d.n_species = S;
  d.n_spikes = Ss;
  d.samples_per_site.assign(n, M);
  d.samples_per_site[n - 1] += cfg.n_negative_controls;
  const int J = n * M + cfg.n_negative_controls;
  d.pcrs_per_sample.assign(J, K);
  const int P = J * K;
  d.negative_control.assign(J, 0);
  for (int j = n * M; j < J; ++j) d.negative_control[j] = 1;
  d.offsets = Vector::Zero(P);

  d.site_covariates = Matrix(n, nz);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < nz; ++c) d.site_covariates(i, c) = rng.normal();
  d.sample_covariates = Matrix(J, nw);
  for (int j = 0; j < J; ++j)
    for (int c = 0; c < nw; ++c) d.sample_covariates(j, c) = rng.normal();

  Matrix row_chol = Matrix::Identity(n, n);
  if (cfg.spatial) {
    d.coordinates = Matrix(n, 2);
    for (int i = 0; i < n; ++i) {
      d.coordinates(i, 0) = rng.uniform();
      d.coordinates(i, 1) = rng.uniform();
    }
    const KernelCovariance kc =
        kernel_covariance(CoordinateRescale::fit(d.coordinates).apply(d.coordinates), cfg.l_Sigma);
    row_chol = kc.cov.llt().matrixL();
  }

  // Species-level parameters.
  Vector lambda(St), phi0(S);
  for (int s = 0; s < S; ++s) lambda[s] = rng.normal(cfg.lambda_mean, cfg.lambda_sd);
  for (int s = S; s < St; ++s) lambda[s] = rng.normal(cfg.spike_lambda_mean, cfg.spike_lambda_sd);
  for (int s = 0; s < S; ++s) phi0[s] = rng.normal(cfg.phi0_mean, std::sqrt(cfg.phi0_var));
  Matrix B(nz, S), beta_w(nw, S), phi_w(nw, S);
  for (int s = 0; s < S; ++s) {
    for (int c = 0; c < nz; ++c) B(c, s) = rng.normal(0.0, cfg.beta_sd);
    for (int c = 0; c < nw; ++c) beta_w(c, s) = rng.normal(0.0, cfg.beta_w_sd);
    for (int c = 0; c < nw; ++c) phi_w(c, s) = rng.normal(0.0, cfg.phi_w_sd);
  }

  // Site log-biomass l (without the amplification effect).
  Matrix l(n, S);
  Matrix z(n, S);
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < S; ++s) z(i, s) = rng.normal();
  const Matrix E = row_chol * z * cfg.tau;
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < S; ++s) {
      if (cfg.high_low_split)
        l(i, s) = (i % 2 == 0 ? 1.0 : 0.0) + E(i, s);
      else
        l(i, s) = cfg.beta0 + (nz > 0 ? d.site_covariates.row(i).dot(B.col(s)) : 0.0) + E(i, s);
    }

  const double p_on = cfg.error_free ? 1.0 : cfg.p;
  const double q_off = cfg.error_free ? 0.0 : cfg.q;
  const double zeta = cfg.error_free ? 0.0 : cfg.zeta;

  ModelState t;
  t.lambda = lambda;
  t.beta0_bar = Vector(S);
  t.B = B;
  t.L_bar = Matrix(n, S);
  t.v_bar = Matrix::Constant(J, St, kNaN);
  t.delta = IntMatrix::Zero(J, St);
  t.gamma = IntMatrix::Zero(J, St);
  t.c = IntMatrix::Zero(P, St);
  t.eta = Matrix::Constant(P, St, kNaN);
  t.u = Vector(P);
  t.r = Vector::Constant(St, cfg.r);
  t.beta_w = beta_w;
  t.sigma_s_sq = Vector::Constant(S, cfg.sigma * cfg.sigma);
  t.mu_bar = Vector(S);
  t.nu_sq = Vector::Constant(S, cfg.nu * cfg.nu);
  t.phi1 = Vector::Constant(S, cfg.phi1);
  t.phi = phi_w;
  t.zeta = Vector::Constant(S, zeta);
  t.p = Vector::Constant(St, p_on);
  t.q = Vector::Constant(S, q_off);
  t.pi = cfg.pi;
  t.mu0 = cfg.mu0;
  t.n0 = cfg.n0;
  t.mu_tilde = cfg.mu_tilde;
  t.omega = Matrix::Constant(J, S, 0.25);
  t.sigma_u_sq = cfg.sigma_u * cfg.sigma_u;
  t.gh = GhState::initial(S);
  t.gh.Q = Matrix::Identity(S, S) / (cfg.tau * cfg.tau);

  for (int s = 0; s < S; ++s) {
    t.L_bar.col(s) = l.col(s).array() + lambda[s];
    t.beta0_bar[s] = (cfg.high_low_split ? 0.5 : cfg.beta0) + lambda[s];
    t.mu_bar[s] = cfg.mu_contam + lambda[s];
  }

  d.spike_log_amounts = Matrix::Constant(J, Ss, cfg.spike_log_amount);

  int pcr = 0;
  for (int j = 0; j < J; ++j) {
    const int i = std::min(j / M, n - 1);
    const bool ctl = d.negative_control[j] != 0;
    for (int s = 0; s < St; ++s) {
      bool on;
      double v = kNaN;  // uncentred v
      if (s >= S) {
        on = true;
        t.delta(j, s) = 1;
        t.v_bar(j, s) = d.spike_log_amounts(j, s - S);
      } else if (ctl) {
        on = false;
      } else {
        double theta;
        if (cfg.error_free)
          theta = 1.0;
        else if (cfg.theta_override > 0)
          theta = cfg.theta_override;
        else
          theta = dens::logistic(phi0[s] + cfg.phi1 * l(i, s) +
                                 (nw > 0 ? d.sample_covariates.row(j).dot(phi_w.col(s)) : 0.0));
        const bool del = rng.bernoulli(theta);
        const bool gam = !del && rng.bernoulli(zeta);
        t.delta(j, s) = del;
        t.gamma(j, s) = gam;
        on = del || gam;
        if (del)
          v = l(i, s) + (nw > 0 ? d.sample_covariates.row(j).dot(beta_w.col(s)) : 0.0) +
              rng.normal(0.0, cfg.sigma);
        else if (gam)
          v = rng.normal(cfg.mu_contam, cfg.nu);
        if (on) t.v_bar(j, s) = v + lambda[s];
      }
      for (int k = 0; k < K; ++k) {
        const int p = pcr + k;
        if (on)
          t.c(p, s) = rng.bernoulli(p_on) ? 1 : 0;
        else
          t.c(p, s) = rng.bernoulli(q_off) ? 2 : 0;
      }
    }
    for (int k = 0; k < K; ++k) t.u[pcr + k] = rng.normal(0.0, cfg.sigma_u);
    pcr += K;
  }

  // Gamma noise around the expected count of each c=1 cell.
  for (int p = 0; p < P; ++p) {
    const int j = p / K;
    for (int s = 0; s < St; ++s) {
      if (t.c(p, s) != 1) continue;
      double m = t.v_bar(j, s) + t.u[p] + d.offsets[p];
      if (s >= S) m += lambda[s];
      m = std::clamp(m, -30.0, 30.0);
      t.eta(p, s) = rng.gamma(cfg.r, cfg.r * std::exp(-m));
    }
  }
  d.reads = CountMatrix::Zero(P, St);
  simulate_reads_given_latents(d, t, rng);

  // Fold phi0 into the target amplification effects: the fitted model has no
  // detection intercept, so lambda absorbs -phi0 / phi1.
  if (cfg.phi1 != 0.0 && !cfg.error_free && cfg.theta_override <= 0)
    for (int s = 0; s < S; ++s) t.lambda[s] = lambda[s] - phi0[s] / cfg.phi1;

  d.fill_default_names();
  SimulationResult res;
  res.data = std::move(d);
  res.truth = std::move(t);
  res.log_biomass = l;
  res.phi0 = phi0;
  return res;
}

void simulate_reads_given_latents(OtuDataset& data, const ModelState& st, Rng& rng) {
  const int P = static_cast<int>(st.c.rows()), St = static_cast<int>(st.c.cols());
  data.reads.resize(P, St);
  for (int p = 0; p < P; ++p)
    for (int s = 0; s < St; ++s) {
      std::int64_t y;
      switch (st.c(p, s)) {
        case 1:
          y = rng.poisson(st.eta(p, s));
          break;
        case 2:
          y = rng.poisson(st.mu_tilde);
          break;
        default:
          y = rng.bernoulli(st.pi) ? 0 : 1 + rng.neg_binomial(st.mu0, st.n0);
      }
      data.reads(p, s) = y;
    }
}

double brier_score(double posterior_prob, bool truth) {
  const double e = posterior_prob - (truth ? 1.0 : 0.0);
  return e * e;
}

namespace {

Draws fit_for_study(const OtuDataset& data, const StudyFitConfig& fit, std::uint64_t seed,
                    bool error_free) {
  ChainConfig cc;
  cc.n_iter = fit.n_iter;
  cc.n_burnin = fit.n_burnin;
  cc.thin = fit.thin;
  cc.seed = seed;
  cc.error_free = error_free;
  cc.monitored = {"L_bar"};
  return run_chain(data, HyperParams{}, cc);
}

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

}  // namespace

std::vector<BrierCell> brier_study(const std::vector<int>& Ms, const std::vector<int>& Ks,
                                   const SimSettings& settings, int n_rep, std::uint64_t seed,
                                   const StudyFitConfig& fit) {
  std::vector<BrierCell> out;
  std::uint64_t cell_id = 0;
  for (int M : Ms)
    for (int K : Ks) {
      SimSettings cfg = settings;
      cfg.samples_per_site = M;
      cfg.pcrs_per_sample = K;
      cfg.high_low_split = true;
      std::vector<double> scores;
      for (int rep = 0; rep < n_rep; ++rep) {
        // Replicate r of every cell uses the same simulation stream so cells
        // differ only in their design.
        const SimulationResult sim = simulate_dataset(cfg, substream_seed(seed, 2 * rep));
        const Draws dr = fit_for_study(sim.data, fit, substream_seed(seed, 1000 * ++cell_id + rep),
                                       cfg.error_free);
        const Matrix Ld = dr.groups.at("L_bar").as_matrix();  // draws x (n*S), site-major per species
        const int n = cfg.n_sites, S = cfg.n_species;
        const int N = static_cast<int>(Ld.rows());
        double tot = 0.0;
        long cnt = 0;
        for (int s = 0; s < S; ++s)
          for (int lo = 1; lo < n; lo += 2)
            for (int hi = 0; hi < n; hi += 2) {
              const int clo = s * n + lo, chi = s * n + hi;
              int above = 0;
              for (int t = 0; t < N; ++t) above += Ld(t, clo) > Ld(t, chi);
              const bool truth = sim.log_biomass(lo, s) > sim.log_biomass(hi, s);
              tot += brier_score(static_cast<double>(above) / N, truth);
              ++cnt;
            }
        scores.push_back(tot / cnt);
      }
      BrierCell c;
      c.M = M;
      c.K = K;
      c.n_rep = n_rep;
      c.mean_brier = mean_of(scores);
      double ss = 0.0;
      for (double v : scores) ss += (v - c.mean_brier) * (v - c.mean_brier);
      c.se = n_rep > 1 ? std::sqrt(ss / (n_rep - 1) / n_rep) : 0.0;
      out.push_back(c);
    }
  return out;
}

OtuDataset drop_spikes(const OtuDataset& data, int keep) {
  if (keep < 0 || keep > data.n_spikes) throw std::invalid_argument("drop_spikes: keep out of range");
  OtuDataset d = data;
  const int S = data.n_species;
  d.n_spikes = keep;
  d.reads = data.reads.leftCols(S + keep);
  d.spike_log_amounts = data.spike_log_amounts.leftCols(keep);
  if (static_cast<int>(d.species_names.size()) > S + keep) d.species_names.resize(S + keep);
  return d;
}

std::vector<SpikeinCell> spikein_study(const std::vector<int>& Ms, const std::vector<int>& Ks,
                                       const std::vector<int>& S_stars,
                                       const std::vector<double>& sigmas,
                                       const std::vector<double>& taus, const SimSettings& settings,
                                       int n_rep, std::uint64_t seed, const StudyFitConfig& fit) {
  if (S_stars.empty() || S_stars.front() != 0)
    throw std::invalid_argument("spikein_study: S_stars must start with 0");
  const int max_spikes = *std::max_element(S_stars.begin(), S_stars.end());
  std::vector<SpikeinCell> out;
  std::uint64_t stream = 0;
  for (int M : Ms)
    for (int K : Ks)
      for (double sg : sigmas)
        for (double tu : taus) {
          SimSettings cfg = settings;
          cfg.samples_per_site = M;
          cfg.pcrs_per_sample = K;
          cfg.sigma = sg;
          cfg.tau = tu;
          cfg.n_spikes = max_spikes;
          cfg.error_free = true;
          std::vector<double> err(S_stars.size(), 0.0), var(S_stars.size(), 0.0);
          for (int rep = 0; rep < n_rep; ++rep) {
            const SimulationResult sim = simulate_dataset(cfg, substream_seed(seed, ++stream));
            const int n = cfg.n_sites, S = cfg.n_species;
            for (std::size_t a = 0; a < S_stars.size(); ++a) {
              const OtuDataset d = drop_spikes(sim.data, S_stars[a]);
              const Draws dr = fit_for_study(d, fit, substream_seed(seed, 1000000 + stream), true);
              const Matrix Ld = dr.groups.at("L_bar").as_matrix();
              const int N = static_cast<int>(Ld.rows());
              double e_sum = 0.0, v_sum = 0.0;
              long cnt = 0;
              for (int s = 0; s < S; ++s)
                for (int i1 = 0; i1 < n; ++i1)
                  for (int i2 = i1 + 1; i2 < n; ++i2) {
                    const Vector diff = Ld.col(s * n + i1) - Ld.col(s * n + i2);
                    const double m = diff.mean();
                    const double v = (diff.array() - m).square().sum() / (N - 1);
                    const double truth = sim.log_biomass(i1, s) - sim.log_biomass(i2, s);
                    e_sum += std::abs(m - truth);
                    v_sum += v;
                    ++cnt;
                  }
              err[a] += e_sum / cnt / n_rep;
              var[a] += v_sum / cnt / n_rep;
            }
          }
          for (std::size_t a = 0; a < S_stars.size(); ++a) {
            SpikeinCell c;
            c.M = M;
            c.K = K;
            c.S_star = S_stars[a];
            c.sigma = sg;
            c.tau = tu;
            c.abs_error = err[a];
            c.abs_variance = var[a];
            c.rel_error = err[a] / err[0];
            c.rel_variance = var[a] / var[0];
            out.push_back(c);
          }
        }
  return out;
}

}  // namespace ednaplus
