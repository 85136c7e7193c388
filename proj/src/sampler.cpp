#include "ednaplus/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ednaplus/polya_gamma.hpp"

namespace ednaplus {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double prior_mean_ig(double a, double b) { return a > 1.0 ? b / (a - 1.0) : b; }

Derivs<1> d1(double v, double g, double h) {
  Derivs<1> d;
  d.value = v;
  d.grad[0] = g;
  d.hess(0, 0) = h;
  return d;
}

// Adds log N(x; mean, var) and its derivatives in x.
inline void add_normal(double x, double mean, double var, double& v, double& g, double& h) {
  const double d = x - mean;
  v += -0.5 * d * d / var;
  g += -d / var;
  h += -1.0 / var;
}

// Adds the Bernoulli(delta; logistic(a x + b)) term and derivatives in x.
inline void add_bernoulli(int delta, double a, double b, double x, double& v, double& g, double& h) {
  const double psi = a * x + b;
  const double th = dens::logistic(psi);
  v += delta ? dens::log_logistic(psi) : dens::log_logistic(-psi);
  g += a * (delta - th);
  h += -a * a * th * (1.0 - th);
}

}  // namespace

BernoulliCounts count_bernoulli_stats(const ModelContext& ctx, const ModelState& st) {
  const int S = ctx.S(), St = ctx.St();
  const SurveyLayout& lay = ctx.layout;
  BernoulliCounts bc;
  bc.n_p.assign(St, 0);
  bc.m_p.assign(St, 0);
  bc.n_q.assign(S, 0);
  bc.m_q.assign(S, 0);
  bc.n_zeta.assign(S, 0);
  bc.m_zeta.assign(S, 0);
  for (int j = 0; j < lay.n_samples; ++j) {
    const bool nc = ctx.negctl(j);
    for (int s = 0; s < St; ++s) {
      const bool on = st.delta(j, s) + st.gamma(j, s) >= 1;
      if (s < S && !nc && st.delta(j, s) == 0) {
        ++bc.m_zeta[s];
        bc.n_zeta[s] += st.gamma(j, s);
      }
      for (int k = 0; k < lay.sample_n_pcr[j]; ++k) {
        const int p = lay.sample_first_pcr[j] + k;
        const int c = st.c(p, s);
        if (on) {
          ++bc.m_p[s];
          bc.n_p[s] += c == 1;
        } else if (s < S) {
          ++bc.m_q[s];
          bc.n_q[s] += c == 2;
        }
        if (c == 0) {
          ++bc.M0;
          bc.N0 += ctx.data->reads(p, s) == 0;
        }
      }
    }
  }
  return bc;
}

Sampler::Sampler(const OtuDataset& data, const HyperParams& hyper, const ChainConfig& cfg)
    : ctx_(data, hyper, cfg.error_free), cfg_(cfg) {
  hyper.validate();
  cfg.validate();
  const ValidationReport rep = validate_dataset(data);
  if (!rep.ok()) throw std::invalid_argument("invalid dataset: " + rep.errors.front());
  if (cfg.error_free) {
    for (int j = 0; j < ctx_.layout.n_samples; ++j)
      if (ctx_.negctl(j))
        throw std::invalid_argument("the error-free variant does not accept negative-control samples");
  }
  AdaptiveScale base;
  base.target = cfg.target_accept;
  lambda_scale_.assign(ctx_.St(), base);
  r_scale_.assign(ctx_.St(), base);
  mu_tilde_scale_ = mu0_scale_ = n0_scale_ = laplace_fallback_ = base;
  block_counts_.resize(static_cast<std::size_t>(ctx_.layout.n_samples) * ctx_.S());
  block_phat_.resize(block_counts_.size());
}

ModelState Sampler::initial_state() const {
  const OtuDataset& d = *ctx_.data;
  const SurveyLayout& lay = ctx_.layout;
  const HyperParams& h = ctx_.hyper;
  const int S = ctx_.S(), St = ctx_.St(), n = d.n_sites, J = lay.n_samples, P = lay.n_pcrs;
  const int nz = ctx_.n_z(), nw = ctx_.n_w();
  ModelState st;

  auto corrected = [&](int p, int s) {
    return static_cast<double>(d.reads(p, s)) * std::exp(-d.offsets[p]);
  };

  st.lambda = Vector::Zero(St);
  for (int s = 0; s < St; ++s) {
    double tot = 0.0;
    for (int p = 0; p < P; ++p) tot += corrected(p, s);
    st.lambda[s] = std::log(tot / P + 0.1);
    if (s >= S) st.lambda[s] -= d.spike_log_amounts.col(s - S).mean();
  }

  st.L_bar = Matrix::Zero(n, S);
  for (int i = 0; i < n; ++i)
    for (int s = 0; s < S; ++s) {
      double tot = 0.0;
      int cnt = 0;
      for (int j = lay.site_first_sample[i]; j < lay.site_first_sample[i] + lay.site_n_samples[i]; ++j) {
        if (ctx_.negctl(j)) continue;
        for (int k = 0; k < lay.sample_n_pcr[j]; ++k) {
          tot += corrected(lay.sample_first_pcr[j] + k, s);
          ++cnt;
        }
      }
      st.L_bar(i, s) = cnt > 0 ? std::log(tot / cnt + 0.1) : st.lambda[s];
    }
  st.beta0_bar = st.L_bar.colwise().mean().transpose();
  st.B = Matrix::Zero(nz, S);
  st.gh = GhState::initial(S);
  st.sigma_u_sq = prior_mean_ig(h.a_u, h.b_u);
  st.u = Vector::Zero(P);

  st.v_bar = Matrix::Constant(J, St, kNaN);
  st.delta = IntMatrix::Zero(J, St);
  st.gamma = IntMatrix::Zero(J, St);
  st.c = IntMatrix::Zero(P, St);
  st.eta = Matrix::Constant(P, St, kNaN);
  for (int j = 0; j < J; ++j) {
    for (int s = 0; s < St; ++s) {
      bool any = false;
      double tot = 0.0;
      for (int k = 0; k < lay.sample_n_pcr[j]; ++k) {
        const int p = lay.sample_first_pcr[j] + k;
        any = any || d.reads(p, s) > 0;
        tot += corrected(p, s);
      }
      bool on;
      if (s >= S) {
        on = true;
        st.v_bar(j, s) = d.spike_log_amounts(j, s - S);
      } else {
        on = !ctx_.negctl(j) && (any || cfg_.error_free);
        if (on) st.v_bar(j, s) = std::log(tot / lay.sample_n_pcr[j] + 0.1);
      }
      st.delta(j, s) = on ? 1 : 0;
      for (int k = 0; k < lay.sample_n_pcr[j]; ++k) {
        const int p = lay.sample_first_pcr[j] + k;
        const std::int64_t y = d.reads(p, s);
        int c;
        if (cfg_.error_free)
          c = 1;
        else if (on)
          c = y >= 1 ? 1 : 0;
        else
          c = y >= 1 ? 2 : 0;
        st.c(p, s) = c;
        if (c == 1) st.eta(p, s) = static_cast<double>(y) + 0.5;
      }
    }
  }

  st.r = Vector::Constant(St, h.mu_r);
  st.beta_w = Matrix::Zero(nw, S);
  st.sigma_s_sq = Vector::Constant(S, prior_mean_ig(h.a_sigma, h.b_sigma));
  st.mu_bar = st.lambda.head(S);
  st.nu_sq = Vector::Constant(S, h.nu_fixed * h.nu_fixed);
  st.phi1 = Vector::Zero(S);
  st.phi = Matrix::Zero(nw, S);
  if (cfg_.error_free) {
    st.zeta = Vector::Zero(S);
    st.p = Vector::Ones(St);
    st.q = Vector::Zero(S);
  } else {
    st.zeta = Vector::Constant(S, h.a_zeta / (h.a_zeta + h.b_zeta));
    st.p = Vector::Constant(St, h.a_p / (h.a_p + h.b_p));
    st.q = Vector::Constant(S, h.a_q / (h.a_q + h.b_q));
  }
  st.pi = h.a_pi / (h.a_pi + h.b_pi);
  st.mu0 = 1.0 / h.rate_mu0;
  st.n0 = 1.0 / h.rate_n0;
  st.mu_tilde = 1.0 / h.rate_mu_tilde;
  st.omega = Matrix::Constant(J, S, 0.25);
  for (int j = 0; j < J; ++j)
    if (ctx_.negctl(j)) st.omega.row(j).setConstant(kNaN);
  return st;
}

void Sampler::sweep(ModelState& st, Rng& rng, const SweepOptions& opt) {
  update_eta(st, rng);
  update_v_u_block(st, rng, opt.adapt);
  update_lbar(st, rng, opt.adapt);
  update_B0_B(st, rng);
  if (ctx_.n_w() > 0) update_beta_w(st, rng);
  update_sigma_s(st, rng);
  update_mu_bar(st, rng);
  update_lambda(st, rng, opt.adapt);
  update_r(st, rng, opt.adapt);
  if (!ctx_.error_free) {
    update_phi(st, rng);
    update_indicators(st, rng, opt.indicator_gibbs);
    update_bernoulli_probs(st, rng);
    update_noise_params(st, rng, opt.adapt);
  }
  update_sigma_u(st, rng);
  update_gh(st, rng);
}

// ---------------------------------------------------------------- eta

void Sampler::refresh_eta_cell(ModelState& st, Rng& rng, int p, int s) const {
  if (st.c(p, s) != 1) {
    st.eta(p, s) = kNaN;
    return;
  }
  const double m = ctx_.log_mean(st, p, s);
  const double y = static_cast<double>(ctx_.data->reads(p, s));
  const double r = st.r[s];
  st.eta(p, s) = rng.gamma(r + y, 1.0 + r * std::exp(-m));
}

void Sampler::refresh_eta_species(ModelState& st, Rng& rng, int s) const {
  for (int p = 0; p < ctx_.layout.n_pcrs; ++p)
    if (st.c(p, s) == 1) refresh_eta_cell(st, rng, p, s);
}

void Sampler::update_eta(ModelState& st, Rng& rng) const {
  for (int p = 0; p < ctx_.layout.n_pcrs; ++p)
    for (int s = 0; s < ctx_.St(); ++s)
      if (st.c(p, s) == 1) refresh_eta_cell(st, rng, p, s);
}

// ------------------------------------------------------------ v / u block

void Sampler::update_v_u_block(ModelState& st, Rng& rng, bool adapt, bool factor_move) {
  const SurveyLayout& lay = ctx_.layout;
  const int S = ctx_.S(), St = ctx_.St();
  const int max_it = cfg_.laplace_max_iter;
  std::vector<int> targets;
  std::vector<double> prior_mean, prior_var;
  struct Cell {
    int k;
    int s;
    double m0;
    bool target;
  };
  std::vector<Cell> cells;

  for (int j = 0; j < lay.n_samples; ++j) {
    const int K = lay.sample_n_pcr[j];
    const int p0 = lay.sample_first_pcr[j];
    targets.clear();
    prior_mean.clear();
    prior_var.clear();
    for (int s = 0; s < S; ++s) {
      if (st.delta(j, s)) {
        targets.push_back(s);
        prior_mean.push_back(ctx_.v_delta_mean(st, j, s));
        prior_var.push_back(st.sigma_s_sq[s]);
      } else if (st.gamma(j, s)) {
        targets.push_back(s);
        prior_mean.push_back(st.mu_bar[s]);
        prior_var.push_back(st.nu_sq[s]);
      }
    }
    cells.clear();
    for (int k = 0; k < K; ++k)
      for (int s = 0; s < St; ++s)
        if (st.c(p0 + k, s) == 1)
          cells.push_back({k, s, ctx_.log_mean_raw(st, p0 + k, s), s < S});

    // Joint move of the two factor means given the increments.
    const double su2 = st.sigma_u_sq;
    if (factor_move && !targets.empty()) {
      auto f = [&](const FixedVec<2>& x) {
        Derivs<2> d;
        const double a = x[0], b = x[1];
        for (std::size_t t = 0; t < targets.size(); ++t) {
          const double v = st.v_bar(j, targets[t]) + a;
          const double dv = v - prior_mean[t];
          d.value += -0.5 * dv * dv / prior_var[t];
          d.grad[0] += -dv / prior_var[t];
          d.hess(0, 0) += -1.0 / prior_var[t];
        }
        for (int k = 0; k < K; ++k) {
          const double u = st.u[p0 + k] + b;
          d.value += -0.5 * u * u / su2;
          d.grad[1] += -u / su2;
          d.hess(1, 1) += -1.0 / su2;
        }
        for (const Cell& c : cells) {
          double g, h;
          const double m = c.m0 + (c.target ? a : 0.0) + b;
          d.value += gamma_noise_log(m, st.r[c.s], st.eta(p0 + c.k, c.s), &g, &h);
          if (c.target) {
            d.grad[0] += g;
            d.hess(0, 0) += h;
            d.hess(0, 1) += h;
            d.hess(1, 0) += h;
          }
          d.grad[1] += g;
          d.hess(1, 1) += h;
        }
        return d;
      };
      const auto res = laplace_mh_step<2>(f, FixedVec<2>::Zero(), rng, laplace_fallback_, adapt, max_it);
      if (res.accepted) {
        for (int s : targets) st.v_bar(j, s) += res.value[0];
        for (int k = 0; k < K; ++k) st.u[p0 + k] += res.value[1];
      }
    } else if (factor_move) {
      auto f = [&](const FixedVec<1>& x) {
        double v = 0.0, g = 0.0, h = 0.0;
        for (int k = 0; k < K; ++k) add_normal(st.u[p0 + k] + x[0], 0.0, su2, v, g, h);
        for (const Cell& c : cells) {
          double gg, hh;
          v += gamma_noise_log(c.m0 + x[0], st.r[c.s], st.eta(p0 + c.k, c.s), &gg, &hh);
          g += gg;
          h += hh;
        }
        return d1(v, g, h);
      };
      const auto res = laplace_mh_step<1>(f, FixedVec<1>::Zero(), rng, laplace_fallback_, adapt, max_it);
      if (res.accepted)
        for (int k = 0; k < K; ++k) st.u[p0 + k] += res.value[0];
    }

    // Per-element v_bar updates.
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const int s = targets[t];
      const double pm = prior_mean[t], pv = prior_var[t];
      auto f = [&](const FixedVec<1>& x) {
        double v = 0.0, g = 0.0, h = 0.0;
        add_normal(x[0], pm, pv, v, g, h);
        for (int k = 0; k < K; ++k) {
          const int p = p0 + k;
          if (st.c(p, s) != 1) continue;
          double gg, hh;
          v += gamma_noise_log(x[0] + st.u[p] + ctx_.data->offsets[p], st.r[s], st.eta(p, s), &gg, &hh);
          g += gg;
          h += hh;
        }
        return d1(v, g, h);
      };
      const auto res = laplace_mh_scalar(f, st.v_bar(j, s), rng, laplace_fallback_, adapt, max_it);
      st.v_bar(j, s) = res.value[0];
    }

    // Per-element u updates.
    for (int k = 0; k < K; ++k) {
      const int p = p0 + k;
      auto f = [&](const FixedVec<1>& x) {
        double v = 0.0, g = 0.0, h = 0.0;
        add_normal(x[0], 0.0, su2, v, g, h);
        for (int s = 0; s < St; ++s) {
          if (st.c(p, s) != 1) continue;
          double m = st.v_bar(j, s) + x[0] + ctx_.data->offsets[p];
          if (s >= S) m += st.lambda[s];
          double gg, hh;
          v += gamma_noise_log(m, st.r[s], st.eta(p, s), &gg, &hh);
          g += gg;
          h += hh;
        }
        return d1(v, g, h);
      };
      const auto res = laplace_mh_scalar(f, st.u[p], rng, laplace_fallback_, adapt, max_it);
      st.u[p] = res.value[0];
    }
  }
}

// ------------------------------------------------------------------ L_bar

double Sampler::lbar_log_target(const ModelState& st, int i, int s, double value) const {
  const SurveyLayout& lay = ctx_.layout;
  const Matrix PD = lbar_row_residual(st);
  const ScalarConditional cond =
      matnorm_conditional_precision(i, s, st.L_bar, PD.row(i), ctx_.Sigma_inv, st.gh.Q);
  double v = dens::normal_log(value, cond.mean, cond.var), g = 0.0, h = 0.0;
  for (int j = lay.site_first_sample[i]; j < lay.site_first_sample[i] + lay.site_n_samples[i]; ++j) {
    if (ctx_.negctl(j)) continue;
    const double wb = ctx_.v_delta_mean(st, j, s) - st.L_bar(i, s);
    if (st.delta(j, s)) v += dens::normal_log(st.v_bar(j, s), value + wb, st.sigma_s_sq[s]);
    if (!ctx_.error_free) {
      const double off = ctx_.theta_logit(st, j, s) - st.phi1[s] * st.L_bar(i, s);
      add_bernoulli(st.delta(j, s), st.phi1[s], off, value, v, g, h);
    }
  }
  return v;
}

Matrix Sampler::lbar_row_residual(const ModelState& st) const {
  Matrix M = ctx_.Xbar.col(0) * st.beta0_bar.transpose();
  if (ctx_.n_z() > 0) M += ctx_.Xbar.rightCols(ctx_.n_z()) * st.B;
  return ctx_.Sigma_inv * (st.L_bar - M);
}

void Sampler::lbar_step(ModelState& st, Rng& rng, int i, int s, Matrix& PD, bool adapt) {
  const SurveyLayout& lay = ctx_.layout;
  const ScalarConditional cond =
      matnorm_conditional_precision(i, s, st.L_bar, PD.row(i), ctx_.Sigma_inv, st.gh.Q);
  const double cur = st.L_bar(i, s);
  auto f = [&](const FixedVec<1>& x) {
    const double l = x[0];
    double v = 0.0, g = 0.0, h = 0.0;
    add_normal(l, cond.mean, cond.var, v, g, h);
    for (int j = lay.site_first_sample[i]; j < lay.site_first_sample[i] + lay.site_n_samples[i]; ++j) {
      if (ctx_.negctl(j)) continue;
      if (st.delta(j, s)) {
        const double wb = ctx_.v_delta_mean(st, j, s) - cur;
        add_normal(st.v_bar(j, s), l + wb, st.sigma_s_sq[s], v, g, h);
      }
      if (!ctx_.error_free) {
        const double off = ctx_.theta_logit(st, j, s) - st.phi1[s] * cur;
        add_bernoulli(st.delta(j, s), st.phi1[s], off, l, v, g, h);
      }
    }
    return d1(v, g, h);
  };
  const auto res = laplace_mh_scalar(f, cur, rng, laplace_fallback_, adapt, cfg_.laplace_max_iter);
  const double delta = res.value[0] - cur;
  if (delta != 0.0) {
    st.L_bar(i, s) = res.value[0];
    PD.col(s) += delta * ctx_.Sigma_inv.col(i);
  }
}

void Sampler::update_lbar(ModelState& st, Rng& rng, bool adapt) {
  Matrix PD = lbar_row_residual(st);
  for (int i = 0; i < ctx_.data->n_sites; ++i)
    for (int s = 0; s < ctx_.S(); ++s) lbar_step(st, rng, i, s, PD, adapt);
}

void Sampler::update_lbar_cell(ModelState& st, Rng& rng, int i, int s, bool adapt) {
  Matrix PD = lbar_row_residual(st);
  lbar_step(st, rng, i, s, PD, adapt);
}

// ------------------------------------------------------ conjugate updates

void Sampler::update_B0_B(ModelState& st, Rng& rng) const {
  const int S = ctx_.S();
  const int pz = static_cast<int>(ctx_.Xbar.cols());
  const Matrix& Q = st.gh.Q;
  const Matrix XtP = ctx_.Xbar.transpose() * ctx_.Sigma_inv;
  const Matrix A = XtP * ctx_.Xbar;
  const Matrix C = XtP * st.L_bar * Q;
  const int dim = pz * S;
  Matrix prec(dim, dim);
  Vector b(dim);
  const double ib = 1.0 / ctx_.hyper.sigma_beta_sq;
  for (int s = 0; s < S; ++s)
    for (int t = 0; t < S; ++t) prec.block(pz * s, pz * t, pz, pz) = Q(s, t) * A;
  prec.diagonal().array() += ib;
  for (int s = 0; s < S; ++s)
    for (int k = 0; k < pz; ++k) b[k + pz * s] = C(k, s) + (k == 0 ? st.lambda[s] * ib : 0.0);
  const Vector x = rng.gaussian_from_precision(prec, b);
  for (int s = 0; s < S; ++s) {
    st.beta0_bar[s] = x[pz * s];
    for (int k = 1; k < pz; ++k) st.B(k - 1, s) = x[k + pz * s];
  }
}

void Sampler::update_beta_w(ModelState& st, Rng& rng) const {
  const SurveyLayout& lay = ctx_.layout;
  const int nw = ctx_.n_w();
  const Matrix& W = ctx_.data->sample_covariates;
  for (int s = 0; s < ctx_.S(); ++s) {
    Matrix prec = Matrix::Identity(nw, nw) / ctx_.hyper.sigma_beta_sq;
    Vector b = Vector::Zero(nw);
    const double is2 = 1.0 / st.sigma_s_sq[s];
    for (int j = 0; j < lay.n_samples; ++j) {
      if (!st.delta(j, s) || ctx_.negctl(j)) continue;
      const double resp = st.v_bar(j, s) - st.L_bar(lay.sample_site[j], s);
      prec.noalias() += is2 * W.row(j).transpose() * W.row(j);
      b.noalias() += is2 * resp * W.row(j).transpose();
    }
    st.beta_w.col(s) = rng.gaussian_from_precision(prec, b);
  }
}

void Sampler::update_sigma_s(ModelState& st, Rng& rng) const {
  const SurveyLayout& lay = ctx_.layout;
  for (int s = 0; s < ctx_.S(); ++s) {
    long nd = 0;
    double sd = 0.0;
    for (int j = 0; j < lay.n_samples; ++j) {
      if (!st.delta(j, s)) continue;
      const double e = st.v_bar(j, s) - ctx_.v_delta_mean(st, j, s);
      ++nd;
      sd += e * e;
    }
    st.sigma_s_sq[s] = rng.inv_gamma(ctx_.hyper.a_sigma + 0.5 * nd, ctx_.hyper.b_sigma + 0.5 * sd);
  }
}

void Sampler::update_mu_bar(ModelState& st, Rng& rng) const {
  const SurveyLayout& lay = ctx_.layout;
  const double sm2 = ctx_.hyper.sigma_mu * ctx_.hyper.sigma_mu;
  for (int s = 0; s < ctx_.S(); ++s) {
    long ng = 0;
    double sum = 0.0;
    for (int j = 0; j < lay.n_samples; ++j)
      if (st.gamma(j, s)) {
        ++ng;
        sum += st.v_bar(j, s);
      }
    const double prec = ng / st.nu_sq[s] + 1.0 / sm2;
    const double mean = (sum / st.nu_sq[s] + st.lambda[s] / sm2) / prec;
    st.mu_bar[s] = rng.normal(mean, std::sqrt(1.0 / prec));
  }
}

// ---------------------------------------------------------------- lambda

double Sampler::lambda_log_target(const ModelState& st, int s, double value) const {
  const HyperParams& h = ctx_.hyper;
  const SurveyLayout& lay = ctx_.layout;
  double lp = dens::normal_log(st.beta0_bar[s], value, h.sigma_beta_sq) +
              dens::normal_log(st.mu_bar[s], value, h.sigma_mu * h.sigma_mu);
  if (std::isfinite(h.sigma_lambda_sq)) lp += dens::normal_log(value, 0.0, h.sigma_lambda_sq);
  if (!ctx_.error_free) {
    for (int j = 0; j < lay.n_samples; ++j) {
      if (ctx_.negctl(j)) continue;
      const double psi = ctx_.theta_logit(st, j, s) - st.phi1[s] * (value - st.lambda[s]);
      lp += st.delta(j, s) ? dens::log_logistic(psi) : dens::log_logistic(-psi);
    }
  }
  return lp;
}

void Sampler::update_spike_lambda(ModelState& st, Rng& rng, int s, bool adapt) {
  const SurveyLayout& lay = ctx_.layout;
  const double cur = st.lambda[s];
  std::vector<int> pcrs;
  std::vector<double> base;
  for (int p = 0; p < lay.n_pcrs; ++p)
    if (st.c(p, s) == 1) {
      pcrs.push_back(p);
      base.push_back(ctx_.log_mean_raw(st, p, s) - cur);
    }
  auto f = [&](const FixedVec<1>& x) {
    double v = 0.0, g = 0.0, h = 0.0;
    add_normal(x[0], 0.0, ctx_.hyper.sigma_spike_sq, v, g, h);
    for (std::size_t t = 0; t < pcrs.size(); ++t) {
      double gg, hh;
      v += gamma_noise_log(base[t] + x[0], st.r[s], st.eta(pcrs[t], s), &gg, &hh);
      g += gg;
      h += hh;
    }
    return d1(v, g, h);
  };
  st.lambda[s] = laplace_mh_scalar(f, cur, rng, laplace_fallback_, adapt, cfg_.laplace_max_iter).value[0];
}

void Sampler::update_lambda(ModelState& st, Rng& rng, bool adapt) {
  for (int s = 0; s < ctx_.St(); ++s) {
    if (ctx_.is_spike(s)) {
      update_spike_lambda(st, rng, s, adapt);
      continue;
    }
    double x = st.lambda[s];
    auto logf = [&](double v) { return lambda_log_target(st, s, v); };
    rw_mh_step(logf, x, rng, lambda_scale_[s], adapt);
    st.lambda[s] = x;
  }
}

// --------------------------------------------------------------------- r

double Sampler::r_log_target(const ModelState& st, int s, double r) const {
  if (!(r > 0.0)) return -std::numeric_limits<double>::infinity();
  const HyperParams& h = ctx_.hyper;
  double lp = dens::normal_log(r, h.mu_r, h.sigma_r * h.sigma_r);
  for (int p = 0; p < ctx_.layout.n_pcrs; ++p) {
    if (st.c(p, s) != 1) continue;
    lp += dens::neg_binomial_log(ctx_.data->reads(p, s), std::exp(ctx_.log_mean(st, p, s)), r);
  }
  return lp;
}

void Sampler::update_r(ModelState& st, Rng& rng, bool adapt) {
  for (int s = 0; s < ctx_.St(); ++s) {
    double lr = std::log(st.r[s]);
    auto logf = [&](double x) { return r_log_target(st, s, std::exp(x)) + x; };
    const bool acc = rw_mh_step(logf, lr, rng, r_scale_[s], adapt);
    if (acc) st.r[s] = std::exp(lr);
    refresh_eta_species(st, rng, s);
  }
}

// -------------------------------------------------------------------- phi

void Sampler::update_phi(ModelState& st, Rng& rng) const {
  const SurveyLayout& lay = ctx_.layout;
  const int nw = ctx_.n_w();
  const int dim = 1 + nw;
  const Matrix& W = ctx_.data->sample_covariates;
  Vector z(dim), coef(dim);
  for (int s = 0; s < ctx_.S(); ++s) {
    coef[0] = st.phi1[s];
    if (nw > 0) coef.tail(nw) = st.phi.col(s);
    Matrix prec = Matrix::Identity(dim, dim) / ctx_.hyper.sigma_phi_sq;
    Vector b = Vector::Zero(dim);
    for (int j = 0; j < lay.n_samples; ++j) {
      if (ctx_.negctl(j)) {
        st.omega(j, s) = kNaN;
        continue;
      }
      z[0] = st.L_bar(lay.sample_site[j], s) - st.lambda[s];
      if (nw > 0) z.tail(nw) = W.row(j).transpose();
      const double w = polya_gamma_sample(rng, 1, z.dot(coef));
      st.omega(j, s) = w;
      prec.noalias() += w * z * z.transpose();
      b += (st.delta(j, s) - 0.5) * z;
    }
    coef = rng.gaussian_from_precision(prec, b);
    st.phi1[s] = coef[0];
    if (nw > 0) st.phi.col(s) = coef.tail(nw);
  }
}

// ---------------------------------------------------- Bernoulli and noise

void Sampler::update_bernoulli_probs(ModelState& st, Rng& rng) const {
  const HyperParams& h = ctx_.hyper;
  const BernoulliCounts bc = count_bernoulli_stats(ctx_, st);
  for (int s = 0; s < ctx_.St(); ++s)
    st.p[s] = rng.beta(h.a_p + bc.n_p[s], h.b_p + bc.m_p[s] - bc.n_p[s]);
  for (int s = 0; s < ctx_.S(); ++s) {
    st.q[s] = rng.beta(h.a_q + bc.n_q[s], h.b_q + bc.m_q[s] - bc.n_q[s]);
    st.zeta[s] = rng.beta(h.a_zeta + bc.n_zeta[s], h.b_zeta + bc.m_zeta[s] - bc.n_zeta[s]);
  }
  st.pi = rng.beta(h.a_pi + bc.N0, h.b_pi + bc.M0 - bc.N0);
}

void Sampler::update_noise_params(ModelState& st, Rng& rng, bool adapt) {
  const HyperParams& h = ctx_.hyper;
  const SurveyLayout& lay = ctx_.layout;
  long n2 = 0;
  double y2 = 0.0;
  std::vector<std::int64_t> shifted;
  for (int p = 0; p < lay.n_pcrs; ++p)
    for (int s = 0; s < ctx_.St(); ++s) {
      const std::int64_t y = ctx_.data->reads(p, s);
      if (st.c(p, s) == 2) {
        ++n2;
        y2 += static_cast<double>(y);
      } else if (st.c(p, s) == 0 && y > 0) {
        shifted.push_back(y - 1);
      }
    }

  double lm = std::log(st.mu_tilde);
  auto f_mt = [&](double x) {
    const double mu = std::exp(x);
    return y2 * x - n2 * mu - h.rate_mu_tilde * mu + x;
  };
  rw_mh_step(f_mt, lm, rng, mu_tilde_scale_, adapt);
  st.mu_tilde = std::exp(lm);

  auto nb_sum = [&](double mu, double size) {
    double t = 0.0;
    for (std::int64_t y : shifted) t += dens::neg_binomial_log(y, mu, size);
    return t;
  };
  double l0 = std::log(st.mu0);
  auto f_mu0 = [&](double x) {
    const double mu = std::exp(x);
    return nb_sum(mu, st.n0) - h.rate_mu0 * mu + x;
  };
  rw_mh_step(f_mu0, l0, rng, mu0_scale_, adapt);
  st.mu0 = std::exp(l0);

  double ln = std::log(st.n0);
  auto f_n0 = [&](double x) {
    const double sz = std::exp(x);
    return nb_sum(st.mu0, sz) - h.rate_n0 * sz + x;
  };
  rw_mh_step(f_n0, ln, rng, n0_scale_, adapt);
  st.n0 = std::exp(ln);
}

void Sampler::update_sigma_u(ModelState& st, Rng& rng) const {
  st.sigma_u_sq = rng.inv_gamma(ctx_.hyper.a_u + 0.5 * st.u.size(), ctx_.hyper.b_u + 0.5 * st.u.squaredNorm());
}

void Sampler::update_gh(ModelState& st, Rng& rng) const {
  Matrix M = ctx_.Xbar.col(0) * st.beta0_bar.transpose();
  if (ctx_.n_z() > 0) M += ctx_.Xbar.rightCols(ctx_.n_z()) * st.B;
  gh_update_precision(st.gh, st.L_bar - M, ctx_.Sigma_inv, ctx_.hyper.lambda_GH, rng);
}

// ------------------------------------------------------------- run_chain

namespace {

std::vector<std::string> columns_for(const std::string& g, const ModelContext& ctx) {
  const OtuDataset& d = *ctx.data;
  const int S = ctx.S(), St = ctx.St();
  std::vector<std::string> cols;
  auto sp = [&](int s) { return d.species_names[s]; };
  if (g == "B") {
    for (int s = 0; s < S; ++s)
      for (int k = 0; k < ctx.n_z(); ++k) cols.push_back("B[" + d.site_covariate_names[k] + "," + sp(s) + "]");
  } else if (g == "beta_w" || g == "phi") {
    for (int s = 0; s < S; ++s)
      for (int k = 0; k < ctx.n_w(); ++k)
        cols.push_back(g + "[" + d.sample_covariate_names[k] + "," + sp(s) + "]");
  } else if (g == "L_bar") {
    for (int s = 0; s < S; ++s)
      for (int i = 0; i < d.n_sites; ++i) cols.push_back("L_bar[" + d.site_names[i] + "," + sp(s) + "]");
  } else if (g == "T") {
    for (int s = 0; s < S; ++s)
      for (int t = 0; t < S; ++t) cols.push_back("T[" + sp(t) + "," + sp(s) + "]");
  } else if (g == "lambda" || g == "r" || g == "p") {
    for (int s = 0; s < St; ++s) cols.push_back(g + "[" + sp(s) + "]");
  } else if (g == "beta0_bar" || g == "sigma_s" || g == "phi1" || g == "zeta" || g == "q" ||
             g == "mu_bar") {
    for (int s = 0; s < S; ++s) cols.push_back(g + "[" + sp(s) + "]");
  } else if (g == "sigma_u" || g == "pi" || g == "mu_tilde" || g == "mu0" || g == "n0") {
    cols.push_back(g);
  } else {
    throw std::invalid_argument("unknown draw group " + g);
  }
  return cols;
}

void values_for(const std::string& g, const ModelContext& ctx, const ModelState& st,
                std::vector<double>& out) {
  out.clear();
  const int S = ctx.S(), St = ctx.St();
  auto push_mat = [&](const Matrix& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(m(r, c));
  };
  if (g == "B") push_mat(st.B);
  else if (g == "beta_w") push_mat(st.beta_w);
  else if (g == "phi") push_mat(st.phi);
  else if (g == "L_bar") push_mat(st.L_bar);
  else if (g == "T") push_mat(st.T());
  else if (g == "lambda") for (int s = 0; s < St; ++s) out.push_back(st.lambda[s]);
  else if (g == "r") for (int s = 0; s < St; ++s) out.push_back(st.r[s]);
  else if (g == "p") for (int s = 0; s < St; ++s) out.push_back(st.p[s]);
  else if (g == "beta0_bar") for (int s = 0; s < S; ++s) out.push_back(st.beta0_bar[s]);
  else if (g == "sigma_s") for (int s = 0; s < S; ++s) out.push_back(std::sqrt(st.sigma_s_sq[s]));
  else if (g == "phi1") for (int s = 0; s < S; ++s) out.push_back(st.phi1[s]);
  else if (g == "zeta") for (int s = 0; s < S; ++s) out.push_back(st.zeta[s]);
  else if (g == "q") for (int s = 0; s < S; ++s) out.push_back(st.q[s]);
  else if (g == "mu_bar") for (int s = 0; s < S; ++s) out.push_back(st.mu_bar[s]);
  else if (g == "sigma_u") out.push_back(std::sqrt(st.sigma_u_sq));
  else if (g == "pi") out.push_back(st.pi);
  else if (g == "mu_tilde") out.push_back(st.mu_tilde);
  else if (g == "mu0") out.push_back(st.mu0);
  else if (g == "n0") out.push_back(st.n0);
}

}  // namespace

void record_draws(Draws& draws, const ModelContext& ctx, const ModelState& st,
                  const std::vector<std::string>& groups, long iteration) {
  draws.iterations.push_back(iteration);
  std::vector<double> vals;
  for (const std::string& g : groups) {
    DrawTable& tab = draws.groups[g];
    if (tab.columns.empty() && tab.rows.empty()) tab.columns = columns_for(g, ctx);
    values_for(g, ctx, st, vals);
    tab.rows.push_back(vals);
  }
}

Draws run_chain(const OtuDataset& data, const HyperParams& hyper, const ChainConfig& config) {
  return run_chain(data, hyper, config, nullptr);
}

Draws run_chain(const OtuDataset& data, const HyperParams& hyper, const ChainConfig& config,
                ModelState* final_state) {
  OtuDataset named = data;
  named.fill_default_names();
  Sampler smp(named, hyper, config);
  Rng rng(config.seed);
  ModelState st = smp.initial_state();
  const std::vector<std::string> groups =
      config.monitored.empty() ? default_draw_groups() : config.monitored;
  Draws draws;
  for (int it = 0; it < config.n_iter; ++it) {
    const bool burn = it < config.n_burnin;
    smp.sweep(st, rng, SweepOptions{burn, burn});
    if (!config.error_free) {
      smp.record_indicator_states(st);
      const int post = it + 1 - config.n_burnin;
      if (post == 0 || (post > 0 && post % config.adapt_interval == 0)) smp.refresh_indicator_proposal();
    }
    if (!burn && (it + 1 - config.n_burnin) % config.thin == 0)
      record_draws(draws, smp.context(), st, groups, it + 1);
  }
  if (final_state) *final_state = st;
  return draws;
}

}  // namespace ednaplus
