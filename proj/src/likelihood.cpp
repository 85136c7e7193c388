#include "ednaplus/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace ednaplus {

namespace {

constexpr double kClamp = 30.0;
std::atomic<long> g_clamps{0};

double bern_log(int x, double logit) {
  return x ? dens::log_logistic(logit) : dens::log_logistic(-logit);
}

}  // namespace

double clamp_log_mean(double m) {
  if (m > kClamp || m < -kClamp) {
    if (g_clamps.fetch_add(1) == 0)
      std::cerr << "warning: linear predictor " << m << " clamped to [-30, 30]\n";
    return std::clamp(m, -kClamp, kClamp);
  }
  return m;
}

long clamp_events() { return g_clamps.load(); }

double gamma_noise_log(double m, double r, double eta, double* grad, double* hess) {
  const double mc = clamp_log_mean(m);
  const double e = r * eta * std::exp(-mc);
  const bool inside = mc == m;
  if (grad) *grad = inside ? -r + e : 0.0;
  if (hess) *hess = inside ? -e : 0.0;
  return -r * mc - e;
}

ModelContext::ModelContext(const OtuDataset& d, const HyperParams& h, bool ef)
    : data(&d), layout(SurveyLayout::from(d)), hyper(h), error_free(ef) {
  const int n = d.n_sites;
  if (d.coordinates.rows() == n && d.coordinates.cols() == 2) {
    rescale = CoordinateRescale::fit(d.coordinates);
    coords_unit = rescale.apply(d.coordinates);
    KernelCovariance k = kernel_covariance(coords_unit, h.l_Sigma);
    Sigma = k.cov;
    kernel_jitter = k.jitter;
  } else {
    coords_unit = Matrix::Zero(n, 2);
    Sigma = Matrix::Identity(n, n);
  }
  Eigen::LLT<Matrix> llt(Sigma);
  Sigma_inv = llt.solve(Matrix::Identity(n, n));
  Sigma_logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  Xbar.resize(n, 1 + d.n_site_covariates());
  Xbar.col(0).setOnes();
  if (d.n_site_covariates() > 0) Xbar.rightCols(d.n_site_covariates()) = d.site_covariates;
}

double ModelContext::log_mean_raw(const ModelState& st, int p, int s) const {
  const int j = layout.pcr_sample[p];
  double m = st.v_bar(j, s) + st.u[p] + data->offsets[p];
  if (is_spike(s)) m += st.lambda[s];
  return m;
}

double ModelContext::log_mean(const ModelState& st, int p, int s) const {
  return clamp_log_mean(log_mean_raw(st, p, s));
}

double ModelContext::theta_logit(const ModelState& st, int j, int s) const {
  const int i = layout.sample_site[j];
  double x = st.phi1[s] * (st.L_bar(i, s) - st.lambda[s]);
  if (n_w() > 0) x += data->sample_covariates.row(j).dot(st.phi.col(s));
  return x;
}

double ModelContext::v_delta_mean(const ModelState& st, int j, int s) const {
  const int i = layout.sample_site[j];
  double m = st.L_bar(i, s);
  if (n_w() > 0) m += data->sample_covariates.row(j).dot(st.beta_w.col(s));
  return m;
}

double ModelContext::zero_model_log(std::int64_t y, const ModelState& st) const {
  if (y == 0) return std::log(st.pi);
  return std::log1p(-st.pi) + dens::neg_binomial_log(y - 1, st.mu0, st.n0);
}

double log_joint(const ModelContext& ctx, const ModelState& st) {
  const OtuDataset& d = *ctx.data;
  const HyperParams& h = ctx.hyper;
  const SurveyLayout& lay = ctx.layout;
  const int S = ctx.S(), St = ctx.St(), n = d.n_sites;
  double lp = 0.0;

  for (int s = 0; s < St; ++s) {
    if (ctx.is_spike(s))
      lp += dens::normal_log(st.lambda[s], 0.0, h.sigma_spike_sq);
    else if (std::isfinite(h.sigma_lambda_sq))
      lp += dens::normal_log(st.lambda[s], 0.0, h.sigma_lambda_sq);
  }
  for (int s = 0; s < S; ++s) {
    lp += dens::normal_log(st.beta0_bar[s], st.lambda[s], h.sigma_beta_sq);
    for (int k = 0; k < st.B.rows(); ++k) lp += dens::normal_log(st.B(k, s), 0.0, h.sigma_beta_sq);
    for (int k = 0; k < st.beta_w.rows(); ++k)
      lp += dens::normal_log(st.beta_w(k, s), 0.0, h.sigma_beta_sq);
    lp += dens::inv_gamma_log(st.sigma_s_sq[s], h.a_sigma, h.b_sigma);
    lp += dens::normal_log(st.mu_bar[s], st.lambda[s], h.sigma_mu * h.sigma_mu);
    if (!ctx.error_free) {
      lp += dens::normal_log(st.phi1[s], 0.0, h.sigma_phi_sq);
      for (int k = 0; k < st.phi.rows(); ++k) lp += dens::normal_log(st.phi(k, s), 0.0, h.sigma_phi_sq);
      lp += dens::beta_log(st.zeta[s], h.a_zeta, h.b_zeta);
      lp += dens::beta_log(st.q[s], h.a_q, h.b_q);
    }
  }

  // Matrix-normal site-level biomass.
  {
    Matrix M = ctx.Xbar.col(0) * st.beta0_bar.transpose();
    if (st.B.rows() > 0) M += ctx.Xbar.rightCols(st.B.rows()) * st.B;
    const Matrix D = st.L_bar - M;
    Eigen::LLT<Matrix> lq(st.gh.Q);
    const double logdet_q = 2.0 * lq.matrixLLT().diagonal().array().log().sum();
    const double quad = (ctx.Sigma_inv * D * st.gh.Q).cwiseProduct(D).sum();
    lp += -0.5 * (n * S * dens::kLogTwoPi + S * ctx.Sigma_logdet - n * logdet_q + quad);
  }
  lp += gh_log_prior(st.gh, h.lambda_GH);

  lp += dens::inv_gamma_log(st.sigma_u_sq, h.a_u, h.b_u);
  for (int p = 0; p < lay.n_pcrs; ++p) lp += dens::normal_log(st.u[p], 0.0, st.sigma_u_sq);
  for (int s = 0; s < St; ++s) {
    if (!(st.r[s] > 0.0)) return -std::numeric_limits<double>::infinity();
    lp += dens::normal_log(st.r[s], h.mu_r, h.sigma_r * h.sigma_r);
    if (!ctx.error_free) lp += dens::beta_log(st.p[s], h.a_p, h.b_p);
  }
  if (!ctx.error_free) {
    lp += dens::beta_log(st.pi, h.a_pi, h.b_pi);
    lp += std::log(h.rate_mu_tilde) - h.rate_mu_tilde * st.mu_tilde;
    lp += std::log(h.rate_mu0) - h.rate_mu0 * st.mu0;
    lp += std::log(h.rate_n0) - h.rate_n0 * st.n0;
  }

  for (int j = 0; j < lay.n_samples; ++j) {
    const bool nc = ctx.negctl(j);
    for (int s = 0; s < St; ++s) {
      const int del = st.delta(j, s), gam = st.gamma(j, s);
      const bool on = del + gam >= 1;
      if (s < S) {
        if (!nc && !ctx.error_free) {
          lp += bern_log(del, ctx.theta_logit(st, j, s));
          if (!del) lp += bern_log(gam, std::log(st.zeta[s]) - std::log1p(-st.zeta[s]));
        }
        if (del)
          lp += dens::normal_log(st.v_bar(j, s), ctx.v_delta_mean(st, j, s), st.sigma_s_sq[s]);
        else if (gam)
          lp += dens::normal_log(st.v_bar(j, s), st.mu_bar[s], st.nu_sq[s]);
      }
      for (int k = 0; k < lay.sample_n_pcr[j]; ++k) {
        const int p = lay.sample_first_pcr[j] + k;
        const std::int64_t y = d.reads(p, s);
        const int c = st.c(p, s);
        if (!ctx.error_free) {
          if (on)
            lp += c == 1 ? std::log(st.p[s]) : std::log1p(-st.p[s]);
          else
            lp += c == 2 ? std::log(st.q[s]) : std::log1p(-st.q[s]);
        }
        if (c == 1) {
          const double m = ctx.log_mean(st, p, s);
          lp += dens::gamma_log(st.eta(p, s), st.r[s], st.r[s] * std::exp(-m));
          lp += dens::poisson_log(y, st.eta(p, s));
        } else if (c == 2) {
          lp += dens::poisson_log(y, st.mu_tilde);
        } else {
          lp += ctx.zero_model_log(y, st);
        }
      }
    }
  }
  return lp;
}

UncentredParams to_uncentred(const ModelContext& ctx, const ModelState& st) {
  const int S = ctx.S();
  UncentredParams up;
  up.lambda = st.lambda;
  up.beta0 = st.beta0_bar - st.lambda.head(S);
  up.eta_collect = Vector::Zero(S);
  up.phi0 = Vector::Zero(S);
  up.mu = st.mu_bar - st.lambda.head(S);
  up.L = st.L_bar;
  for (int s = 0; s < S; ++s) up.L.col(s).array() -= st.lambda[s];
  up.V = st.v_bar;
  for (int s = 0; s < S; ++s) up.V.col(s).array() -= st.lambda[s];
  return up;
}

double uncentred_log_likelihood(const ModelContext& ctx, const ModelState& st,
                                const UncentredParams& up) {
  const OtuDataset& d = *ctx.data;
  const SurveyLayout& lay = ctx.layout;
  const int S = ctx.S(), St = ctx.St(), n = d.n_sites;
  double ll = 0.0;
  {
    Matrix M = ctx.Xbar.col(0) * up.beta0.transpose();
    if (st.B.rows() > 0) M += ctx.Xbar.rightCols(st.B.rows()) * st.B;
    const Matrix D = up.L - M;
    Eigen::LLT<Matrix> lq(st.gh.Q);
    const double logdet_q = 2.0 * lq.matrixLLT().diagonal().array().log().sum();
    const double quad = (ctx.Sigma_inv * D * st.gh.Q).cwiseProduct(D).sum();
    ll += -0.5 * (n * S * dens::kLogTwoPi + S * ctx.Sigma_logdet - n * logdet_q + quad);
  }
  for (int j = 0; j < lay.n_samples; ++j) {
    const int i = lay.sample_site[j];
    const bool nc = ctx.negctl(j);
    for (int s = 0; s < St; ++s) {
      const int del = st.delta(j, s), gam = st.gamma(j, s);
      const bool on = del + gam >= 1;
      if (s < S) {
        double wb = 0.0, wphi = 0.0;
        if (ctx.n_w() > 0) {
          wb = d.sample_covariates.row(j).dot(st.beta_w.col(s));
          wphi = d.sample_covariates.row(j).dot(st.phi.col(s));
        }
        if (!nc && !ctx.error_free) {
          ll += bern_log(del, up.phi0[s] + st.phi1[s] * up.L(i, s) + wphi);
          if (!del) ll += bern_log(gam, std::log(st.zeta[s]) - std::log1p(-st.zeta[s]));
        }
        if (del)
          ll += dens::normal_log(up.V(j, s), up.L(i, s) + up.eta_collect[s] + wb, st.sigma_s_sq[s]);
        else if (gam)
          ll += dens::normal_log(up.V(j, s), up.mu[s], st.nu_sq[s]);
      }
      for (int k = 0; k < lay.sample_n_pcr[j]; ++k) {
        const int p = lay.sample_first_pcr[j] + k;
        const std::int64_t y = d.reads(p, s);
        const int c = st.c(p, s);
        if (!ctx.error_free) {
          if (on)
            ll += c == 1 ? std::log(st.p[s]) : std::log1p(-st.p[s]);
          else
            ll += c == 2 ? std::log(st.q[s]) : std::log1p(-st.q[s]);
        }
        if (c == 1) {
          const double m = clamp_log_mean(up.V(j, s) + up.lambda[s] + st.u[p] + d.offsets[p]);
          ll += dens::gamma_log(st.eta(p, s), st.r[s], st.r[s] * std::exp(-m));
          ll += dens::poisson_log(y, st.eta(p, s));
        } else if (c == 2) {
          ll += dens::poisson_log(y, st.mu_tilde);
        } else {
          ll += ctx.zero_model_log(y, st);
        }
      }
    }
  }
  return ll;
}

void apply_shift_transform(UncentredParams& up, const ModelState& st, const Vector& c,
                           const Vector& d) {
  const int S = static_cast<int>(up.beta0.size());
  for (int s = 0; s < S; ++s) {
    const double cd = c[s] + d[s];
    up.beta0[s] += cd;
    up.lambda[s] -= c[s];
    up.eta_collect[s] -= d[s];
    up.phi0[s] -= st.phi1[s] * cd;
    up.mu[s] += c[s];
    up.L.col(s).array() += cd;
    up.V.col(s).array() += c[s];
  }
}

}  // namespace ednaplus
