#include <cmath>
#include <limits>

#include "ednaplus/sampler.hpp"

namespace ednaplus {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInformedSd = 0.5;

// Per-block pieces of the extended target for a fixed value v.
struct BlockTerms {
  int K = 0;
  double class_prior[3] = {0, 0, 0};
  double v_term[3] = {0, 0, 0};  // on classes: prior density of v; off: log g(v)
  std::vector<double> on0, on1, off0, off2;
};

double informed_mean(const ModelContext& ctx, const ModelState& st, int j, int s) {
  const SurveyLayout& lay = ctx.layout;
  const int K = lay.sample_n_pcr[j];
  bool any = false;
  for (int k = 0; k < K; ++k) any = any || ctx.data->reads(lay.sample_first_pcr[j] + k, s) > 0;
  double tot = 0.0;
  for (int k = 0; k < K; ++k) {
    const int p = lay.sample_first_pcr[j] + k;
    const double y = any ? static_cast<double>(ctx.data->reads(p, s)) : 0.5;
    tot += y * std::exp(-(st.u[p] + ctx.data->offsets[p]));
  }
  return std::log(tot / K);
}

BlockTerms block_terms(const ModelContext& ctx, const ModelState& st, int j, int s, double v,
                       double g_mean) {
  const SurveyLayout& lay = ctx.layout;
  BlockTerms bt;
  bt.K = lay.sample_n_pcr[j];
  const double psi = ctx.theta_logit(st, j, s);
  const double lz = std::log(st.zeta[s]), l1z = std::log1p(-st.zeta[s]);
  bt.class_prior[0] = dens::log_logistic(psi);
  bt.class_prior[1] = dens::log_logistic(-psi) + lz;
  bt.class_prior[2] = dens::log_logistic(-psi) + l1z;
  bt.v_term[0] = dens::normal_log(v, ctx.v_delta_mean(st, j, s), st.sigma_s_sq[s]);
  bt.v_term[1] = dens::normal_log(v, st.mu_bar[s], st.nu_sq[s]);
  bt.v_term[2] = dens::normal_log(v, g_mean, kInformedSd * kInformedSd);
  const double lp = std::log(st.p[s]), l1p = std::log1p(-st.p[s]);
  const double lq = std::log(st.q[s]), l1q = std::log1p(-st.q[s]);
  bt.on0.resize(bt.K);
  bt.on1.resize(bt.K);
  bt.off0.resize(bt.K);
  bt.off2.resize(bt.K);
  for (int k = 0; k < bt.K; ++k) {
    const int p = lay.sample_first_pcr[j] + k;
    const std::int64_t y = ctx.data->reads(p, s);
    const double z = ctx.zero_model_log(y, st);
    const double m = clamp_log_mean(v + st.u[p] + ctx.data->offsets[p]);
    bt.on0[k] = l1p + z;
    bt.on1[k] = lp + dens::neg_binomial_log(y, std::exp(m), st.r[s]);
    bt.off0[k] = l1q + z;
    bt.off2[k] = lq + dens::poisson_log(y, st.mu_tilde);
  }
  return bt;
}

double code_log_weight(const BlockTerms& bt, int code) {
  const int cls = code >> bt.K;
  double w = bt.class_prior[cls] + bt.v_term[cls];
  for (int k = 0; k < bt.K; ++k) {
    const bool bit = (code >> k) & 1;
    if (cls < 2)
      w += bit ? bt.on1[k] : bt.on0[k];
    else
      w += bit ? bt.off2[k] : bt.off0[k];
  }
  return w;
}

}  // namespace

int indicator_state_code(const ModelState& st, const SurveyLayout& lay, int j, int s) {
  const int K = lay.sample_n_pcr[j];
  const int cls = st.delta(j, s) ? 0 : (st.gamma(j, s) ? 1 : 2);
  int bits = 0;
  for (int k = 0; k < K; ++k) {
    const int c = st.c(lay.sample_first_pcr[j] + k, s);
    if (c != 0) bits |= 1 << k;
  }
  return (cls << K) | bits;
}

std::vector<double> indicator_block_log_weights(const ModelContext& ctx, const ModelState& st,
                                                int j, int s, double v) {
  const BlockTerms bt = block_terms(ctx, st, j, s, v, informed_mean(ctx, st, j, s));
  const int n = 3 << bt.K;
  std::vector<double> w(n);
  for (int code = 0; code < n; ++code) w[code] = code_log_weight(bt, code);
  return w;
}

void Sampler::update_pcr_outcome_only(ModelState& st, Rng& rng, int j, int s) {
  const SurveyLayout& lay = ctx_.layout;
  const bool on = st.delta(j, s) + st.gamma(j, s) >= 1;
  for (int k = 0; k < lay.sample_n_pcr[j]; ++k) {
    const int p = lay.sample_first_pcr[j] + k;
    const std::int64_t y = ctx_.data->reads(p, s);
    const double z = ctx_.zero_model_log(y, st);
    double w[2];
    if (on) {
      w[0] = std::log1p(-st.p[s]) + z;
      w[1] = std::log(st.p[s]) + dens::neg_binomial_log(y, std::exp(ctx_.log_mean(st, p, s)), st.r[s]);
    } else {
      w[0] = std::log1p(-st.q[s]) + z;
      w[1] = std::log(st.q[s]) + dens::poisson_log(y, st.mu_tilde);
    }
    const int pick = rng.categorical_log(w, 2);
    st.c(p, s) = pick == 0 ? 0 : (on ? 1 : 2);
    refresh_eta_cell(st, rng, p, s);
  }
}

void Sampler::update_indicators(ModelState& st, Rng& rng, bool gibbs) {
  const SurveyLayout& lay = ctx_.layout;
  for (int j = 0; j < lay.n_samples; ++j)
    for (int s = 0; s < ctx_.St(); ++s) {
      if (ctx_.is_spike(s) || ctx_.negctl(j))
        update_pcr_outcome_only(st, rng, j, s);
      else
        update_indicators_block(st, rng, j, s, gibbs);
    }
}

void Sampler::update_indicators_block(ModelState& st, Rng& rng, int j, int s, bool gibbs) {
  const SurveyLayout& lay = ctx_.layout;
  const int K = lay.sample_n_pcr[j];
  const int n_states = 3 << K;
  const int cur = indicator_state_code(st, lay, j, s);
  const bool cur_on = (cur >> K) < 2;
  const double g_mean = informed_mean(ctx_, st, j, s);
  const double v = cur_on ? st.v_bar(j, s) : rng.normal(g_mean, kInformedSd);
  const BlockTerms bt = block_terms(ctx_, st, j, s, v, g_mean);

  int next;
  if (gibbs) {
    double cls_w[3];
    for (int cls = 0; cls < 3; ++cls) {
      double w = bt.class_prior[cls] + bt.v_term[cls];
      for (int k = 0; k < K; ++k)
        w += cls < 2 ? dens::log_sum_exp(bt.on0[k], bt.on1[k]) : dens::log_sum_exp(bt.off0[k], bt.off2[k]);
      cls_w[cls] = w;
    }
    const int cls = rng.categorical_log(cls_w, 3);
    int bits = 0;
    for (int k = 0; k < K; ++k) {
      double w[2];
      w[0] = cls < 2 ? bt.on0[k] : bt.off0[k];
      w[1] = cls < 2 ? bt.on1[k] : bt.off2[k];
      if (rng.categorical_log(w, 2) == 1) bits |= 1 << k;
    }
    next = (cls << K) | bits;
  } else {
    const std::vector<double>& phat = block_phat_[block_index(j, s)];
    const double eps = cfg_.indicator_floor;
    const bool have = !phat.empty();
    auto q_of = [&](int code) {
      return have ? (1.0 - eps) * phat[code] + eps / n_states : 1.0 / n_states;
    };
    int prop;
    if (!have || rng.uniform() < eps) {
      prop = static_cast<int>(rng.uniform() * n_states);
      if (prop >= n_states) prop = n_states - 1;
    } else {
      double u = rng.uniform();
      prop = n_states - 1;
      for (int code = 0; code < n_states; ++code) {
        u -= phat[code];
        if (u <= 0.0) {
          prop = code;
          break;
        }
      }
    }
    if (prop == cur) return;
    const double la = code_log_weight(bt, prop) - code_log_weight(bt, cur) + std::log(q_of(cur)) -
                      std::log(q_of(prop));
    if (!(la >= 0.0 || std::log(rng.uniform()) < la)) return;
    next = prop;
  }

  const int cls = next >> K;
  st.delta(j, s) = cls == 0;
  st.gamma(j, s) = cls == 1;
  st.v_bar(j, s) = cls < 2 ? v : kNaN;
  for (int k = 0; k < K; ++k) {
    const int p = lay.sample_first_pcr[j] + k;
    const bool bit = (next >> k) & 1;
    st.c(p, s) = bit ? (cls < 2 ? 1 : 2) : 0;
    refresh_eta_cell(st, rng, p, s);
  }
}

void Sampler::record_indicator_states(const ModelState& st) {
  const SurveyLayout& lay = ctx_.layout;
  for (int j = 0; j < lay.n_samples; ++j) {
    if (ctx_.negctl(j)) continue;
    const int n_states = 3 << lay.sample_n_pcr[j];
    for (int s = 0; s < ctx_.S(); ++s) {
      auto& cnt = block_counts_[block_index(j, s)];
      if (cnt.empty()) cnt.assign(n_states, 0);
      ++cnt[indicator_state_code(st, lay, j, s)];
    }
  }
}

void Sampler::refresh_indicator_proposal() {
  for (std::size_t b = 0; b < block_counts_.size(); ++b) {
    const auto& cnt = block_counts_[b];
    if (cnt.empty()) continue;
    double tot = 0.0;
    for (auto c : cnt) tot += c;
    if (tot <= 0.0) continue;
    auto& ph = block_phat_[b];
    ph.resize(cnt.size());
    for (std::size_t k = 0; k < cnt.size(); ++k) ph[k] = cnt[k] / tot;
  }
}

const std::vector<double>& Sampler::indicator_proposal(int j, int s) const {
  const auto& ph = block_phat_[block_index(j, s)];
  return ph.empty() ? empty_ : ph;
}

}  // namespace ednaplus
