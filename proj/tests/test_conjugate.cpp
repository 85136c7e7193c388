#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "ednaplus/sampler.hpp"
#include "support.hpp"

using namespace ednaplus;
using testsupport::grid_moments;
using testsupport::iid_se;
using testsupport::mean_of;

namespace {

using Slot = std::function<double&(ModelState&)>;

using Fixture = testsupport::SamplerFixture;
using testsupport::plain_dataset;

double lj_with(const ModelContext& ctx, ModelState st, const Slot& slot, double x) {
  slot(st) = x;
  return log_joint(ctx, st);
}

// The full conditional read off log_joint must equal the hand-derived
// density up to a constant.
void check_shape(const ModelContext& ctx, const ModelState& st, const Slot& slot,
                 const std::function<double(double)>& hand, const std::vector<double>& xs) {
  const double x0 = xs.front();
  const double l0 = lj_with(ctx, st, slot, x0), h0 = hand(x0);
  for (double x : xs) {
    const double a = lj_with(ctx, st, slot, x) - l0;
    const double b = hand(x) - h0;
    CHECK_MESSAGE(std::abs(a - b) <= 1e-8, "x=", x, " log_joint diff ", a, " hand diff ", b);
  }
}

// Monte Carlo mean of repeated single updates from the same state vs the
// grid-normalised log_joint conditional.
void check_mc(const ModelContext& ctx, const ModelState& st, const Slot& slot,
              const std::function<void(ModelState&, Rng&)>& update, double lo, double hi,
              std::uint64_t seed, int N = 4000) {
  const auto ref = grid_moments([&](double x) { return lj_with(ctx, st, slot, x); }, lo, hi);
  Rng rng(seed);
  std::vector<double> xs(N);
  for (int t = 0; t < N; ++t) {
    ModelState s = st;
    update(s, rng);
    xs[t] = slot(s);
  }
  CHECK_MESSAGE(std::abs(mean_of(xs) - ref.mean) < 3 * iid_se(xs), "MC mean ", mean_of(xs),
                " grid mean ", ref.mean, " se ", iid_se(xs));
}

// Gaussian oracle for a block of coordinates on which log_joint is
// quadratic: unit-step central differences are exact there.
struct GaussOracle {
  Matrix prec;
  Vector b;
  Vector mean;
};

GaussOracle quadratic_oracle(const ModelContext& ctx, ModelState st, const std::vector<Slot>& slots) {
  const int D = static_cast<int>(slots.size());
  for (const auto& s : slots) s(st) = 0.0;
  auto f = [&](const Vector& x) {
    ModelState t = st;
    for (int k = 0; k < D; ++k) slots[k](t) = x[k];
    return log_joint(ctx, t);
  };
  const Vector z = Vector::Zero(D);
  const double f0 = f(z);
  GaussOracle o;
  o.prec.resize(D, D);
  o.b.resize(D);
  for (int a = 0; a < D; ++a) {
    Vector ea = z;
    ea[a] = 1.0;
    const double fp = f(ea), fm = f(-ea);
    o.b[a] = 0.5 * (fp - fm);
    o.prec(a, a) = -(fp - 2 * f0 + fm);
    for (int c = 0; c < a; ++c) {
      Vector ec = z;
      ec[c] = 1.0;
      const double h = 0.25 * (f(ea + ec) - f(ea - ec) - f(-ea + ec) + f(-ea - ec));
      o.prec(a, c) = o.prec(c, a) = -h;
    }
  }
  o.mean = o.prec.ldlt().solve(o.b);
  return o;
}

Slot beta0_slot(int s) { return [s](ModelState& m) -> double& { return m.beta0_bar[s]; }; }
Slot B_slot(int k, int s) { return [k, s](ModelState& m) -> double& { return m.B(k, s); }; }
Slot betaw_slot(int k, int s) { return [k, s](ModelState& m) -> double& { return m.beta_w(k, s); }; }

}  // namespace

TEST_SUITE("conjugate") {

TEST_CASE("eta: example substitutions") {
  // r=2, y=3, linear predictor 0 gives Gamma(5, 3).
  auto d = plain_dataset(2, 1, 1, 1, 3);
  Sampler smp(d, HyperParams{}, ChainConfig{});
  ModelState st = smp.initial_state();
  st.r[0] = 2.0;
  st.v_bar(0, 0) = 0.0;
  st.u[0] = 0.0;
  st.c(0, 0) = 1;
  Rng a(3), b(3);
  smp.refresh_eta_cell(st, a, 0, 0);
  CHECK(st.eta(0, 0) == b.gamma(5.0, 3.0));
  // y=0 gives Gamma(r, 1 + r e^{-m}).
  d.reads(1, 0) = 0;
  st.c(1, 0) = 1;
  st.v_bar(1, 0) = 1.3;
  st.u[1] = 0.0;
  smp.refresh_eta_cell(st, a, 1, 0);
  CHECK(st.eta(1, 0) == b.gamma(2.0, 1.0 + 2.0 * std::exp(-1.3)));
}

TEST_CASE("eta: marginalising recovers the negative binomial") {
  for (double r : {0.7, 5.0, 60.0}) {
    for (double m : {-0.5, 2.0, 4.5}) {
      for (int y : {0, 3, 40}) {
        // Integrate in t = log(eta) with the trapezoid rule.
        const int n = 40001;
        const double lo = -40.0, hi = 10.0, h = (hi - lo) / (n - 1);
        double tot = 0.0;
        for (int i = 0; i < n; ++i) {
          const double t = lo + i * h;
          const double e = std::exp(t);
          const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
          tot += w * std::exp(dens::gamma_log(e, r, r * std::exp(-m)) + dens::poisson_log(y, e) + t);
        }
        tot *= h;
        CHECK(std::abs(tot - std::exp(dens::neg_binomial_log(y, std::exp(m), r))) <= 1e-8);
      }
    }
  }
}

TEST_CASE("eta: draw matches the log_joint conditional") {
  Fixture f(11);
  const auto& lay = f.ctx().layout;
  int p = -1, s = -1;
  for (int pp = 0; pp < lay.n_pcrs && p < 0; ++pp)
    for (int ss = 0; ss < f.data().n_species; ++ss)
      if (f.st.c(pp, ss) == 1 && f.data().reads(pp, ss) > 0) {
        p = pp;
        s = ss;
        break;
      }
  REQUIRE(p >= 0);
  const Slot slot = [p, s](ModelState& m) -> double& { return m.eta(p, s); };
  const double y = static_cast<double>(f.data().reads(p, s));
  const double m = f.st.v_bar(lay.pcr_sample[p], s) + f.st.u[p] + f.data().offsets[p];
  const double r = f.st.r[s];
  const double shape = r + y, rate = 1.0 + r * std::exp(-m);
  const double mean = shape / rate, sd = std::sqrt(shape) / rate;
  check_shape(f.ctx(), f.st, slot, [&](double x) { return dens::gamma_log(x, shape, rate); },
              {mean, 0.5 * mean, mean + sd, mean + 3 * sd});
  check_mc(f.ctx(), f.st, slot, [&](ModelState& st, Rng& rng) { f.smp.refresh_eta_cell(st, rng, p, s); },
           std::max(1e-9, mean - 12 * sd), mean + 12 * sd, 12);
  Rng a(13), b(13);
  ModelState st = f.st;
  f.smp.refresh_eta_cell(st, a, p, s);
  CHECK(std::abs(st.eta(p, s) - b.gamma(shape, rate)) <= 1e-8);
}

TEST_CASE("B0/B: textbook conjugate example") {
  auto d = plain_dataset(4, 1, 1, 1);
  Sampler smp(d, HyperParams{}, ChainConfig{});
  ModelState st = smp.initial_state();
  st.lambda[0] = 0.0;
  st.L_bar.col(0) << 1.0, 2.0, 3.0, 2.0;  // column sum 8
  st.gh.Q = Matrix::Identity(1, 1);
  Rng rng(5);
  const int N = 100000;
  std::vector<double> xs(N);
  for (int t = 0; t < N; ++t) {
    smp.update_B0_B(st, rng);
    xs[t] = st.beta0_bar[0];
  }
  CHECK(std::abs(mean_of(xs) - 1.6) < 3 * std::sqrt(0.2 / N));
  CHECK(testsupport::var_of(xs) == doctest::Approx(0.2).epsilon(0.02));
}

TEST_CASE("B0/B: joint draw equals the dense Gaussian oracle") {
  Fixture f(21);
  const int S = f.data().n_species, nz = f.data().n_site_covariates();
  f.st.gh.Q << 2.0, 0.7, 0.7, 1.5;
  std::vector<Slot> slots;
  for (int s = 0; s < S; ++s) {
    slots.push_back(beta0_slot(s));
    for (int k = 0; k < nz; ++k) slots.push_back(B_slot(k, s));
  }
  const GaussOracle o = quadratic_oracle(f.ctx(), f.st, slots);
  // Exact draw: same random stream through the oracle precision.
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Rng a(seed), b(seed);
    ModelState st = f.st;
    f.smp.update_B0_B(st, a);
    const Vector ref = b.gaussian_from_precision(o.prec, o.b);
    for (std::size_t k = 0; k < slots.size(); ++k) CHECK(std::abs(slots[k](st) - ref[k]) <= 1e-8);
  }
  // Moments by Monte Carlo.
  Rng rng(4);
  const int N = 20000;
  std::vector<std::vector<double>> xs(slots.size(), std::vector<double>(N));
  for (int t = 0; t < N; ++t) {
    ModelState st = f.st;
    f.smp.update_B0_B(st, rng);
    for (std::size_t k = 0; k < slots.size(); ++k) xs[k][t] = slots[k](st);
  }
  const Matrix cov = o.prec.inverse();
  for (std::size_t k = 0; k < slots.size(); ++k) {
    CHECK(std::abs(mean_of(xs[k]) - o.mean[k]) < 3 * std::sqrt(cov(k, k) / N));
    CHECK(testsupport::var_of(xs[k]) == doctest::Approx(cov(k, k)).epsilon(0.05));
  }
}

TEST_CASE("B0/B: diagonal T factorises across species") {
  Fixture f(22);
  f.st.gh.Q = Matrix::Identity(2, 2) * 3.0;
  const int nz = f.data().n_site_covariates();
  std::vector<Slot> all;
  for (int s = 0; s < 2; ++s) {
    all.push_back(beta0_slot(s));
    for (int k = 0; k < nz; ++k) all.push_back(B_slot(k, s));
  }
  const GaussOracle o = quadratic_oracle(f.ctx(), f.st, all);
  const int pz = 1 + nz;
  CHECK(o.prec.block(0, pz, pz, pz).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("beta_w: draw equals the dense Bayesian regression oracle") {
  Fixture f(23);
  const int S = f.data().n_species, nw = f.data().n_sample_covariates();
  REQUIRE(nw == 1);
  std::vector<GaussOracle> oracles;
  for (int s = 0; s < S; ++s) {
    std::vector<Slot> slots;
    for (int k = 0; k < nw; ++k) slots.push_back(betaw_slot(k, s));
    oracles.push_back(quadratic_oracle(f.ctx(), f.st, slots));
  }
  Rng a(6), b(6);
  ModelState st = f.st;
  f.smp.update_beta_w(st, a);
  for (int s = 0; s < S; ++s) {
    const Vector ref = b.gaussian_from_precision(oracles[s].prec, oracles[s].b);
    for (int k = 0; k < nw; ++k) CHECK(std::abs(st.beta_w(k, s) - ref[k]) <= 1e-8);
  }
  // Flat-prior limit is least squares of v_bar - l_bar on the covariate.
  HyperParams flat;
  flat.sigma_beta_sq = 1e12;
  Sampler wide(f.data(), flat, ChainConfig{});
  const auto& lay = f.ctx().layout;
  double sxx = 0.0, sxy = 0.0;
  for (int j = 0; j < lay.n_samples; ++j) {
    if (!f.st.delta(j, 0)) continue;
    const double x = f.data().sample_covariates(j, 0);
    sxx += x * x;
    sxy += x * (f.st.v_bar(j, 0) - f.st.L_bar(lay.sample_site[j], 0));
  }
  Rng c(7);
  std::vector<double> xs(20000);
  for (double& x : xs) {
    ModelState t = f.st;
    wide.update_beta_w(t, c);
    x = t.beta_w(0, 0);
  }
  CHECK(std::abs(mean_of(xs) - sxy / sxx) < 3 * iid_se(xs));
}

TEST_CASE("beta_w: no delta cells returns the prior") {
  Fixture f(24);
  f.st.delta.setZero();
  for (int j = 0; j < f.st.delta.rows(); ++j)
    for (int s = 0; s < f.data().n_species; ++s) f.st.gamma(j, s) = 0;
  Rng rng(8);
  std::vector<double> xs(40000);
  for (double& x : xs) {
    ModelState t = f.st;
    f.smp.update_beta_w(t, rng);
    x = t.beta_w(0, 1);
  }
  CHECK(std::abs(mean_of(xs)) < 3 * iid_se(xs));
  CHECK(testsupport::var_of(xs) == doctest::Approx(HyperParams{}.sigma_beta_sq).epsilon(0.03));
}

TEST_CASE("sigma_s: inverse gamma with halved counts") {
  Fixture f(31);
  const HyperParams& h = f.ctx().hyper;
  const auto& lay = f.ctx().layout;
  const int S = f.data().n_species;
  std::vector<double> shape(S), scale(S);
  for (int s = 0; s < S; ++s) {
    long nd = 0;
    double sd = 0.0;
    for (int j = 0; j < lay.n_samples; ++j) {
      if (!f.st.delta(j, s)) continue;
      const double mean = f.st.L_bar(lay.sample_site[j], s) +
                          f.data().sample_covariates(j, 0) * f.st.beta_w(0, s);
      sd += (f.st.v_bar(j, s) - mean) * (f.st.v_bar(j, s) - mean);
      ++nd;
    }
    shape[s] = h.a_sigma + 0.5 * nd;
    scale[s] = h.b_sigma + 0.5 * sd;
  }
  const Slot slot = [](ModelState& m) -> double& { return m.sigma_s_sq[0]; };
  const double mode = scale[0] / (shape[0] + 1);
  check_shape(f.ctx(), f.st, slot, [&](double x) { return dens::inv_gamma_log(x, shape[0], scale[0]); },
              {mode, 0.3 * mode, 2 * mode, 7 * mode});
  check_mc(f.ctx(), f.st, slot, [&](ModelState& st, Rng& rng) { f.smp.update_sigma_s(st, rng); }, 1e-6,
           60 * mode, 32);
  Rng a(33), b(33);
  ModelState st = f.st;
  f.smp.update_sigma_s(st, a);
  for (int s = 0; s < S; ++s) CHECK(std::abs(st.sigma_s_sq[s] - b.inv_gamma(shape[s], scale[s])) <= 1e-8);
}

TEST_CASE("sigma_s: example substitutions") {
  auto d = plain_dataset(2, 2, 1, 1);
  Sampler smp(d, HyperParams{}, ChainConfig{});
  ModelState st = smp.initial_state();
  const HyperParams& h = smp.context().hyper;
  st.delta.setOnes();
  st.L_bar.setZero();
  st.v_bar.col(0) << 1.0, -1.0, 0.0, 0.0;  // n_delta = 4, s_delta = 2
  Rng a(1), b(1);
  smp.update_sigma_s(st, a);
  CHECK(st.sigma_s_sq[0] == b.inv_gamma(h.a_sigma + 2.0, h.b_sigma + 1.0));
  st.delta.setZero();
  st.v_bar.setConstant(NAN);
  smp.update_sigma_s(st, a);
  CHECK(st.sigma_s_sq[0] == b.inv_gamma(h.a_sigma, h.b_sigma));
}

TEST_CASE("mu_bar: normal conjugate over contaminated samples") {
  Fixture f(41);
  const HyperParams& h = f.ctx().hyper;
  const int S = f.data().n_species;
  // Force some contamination cells so the likelihood is not empty.
  f.st.delta(0, 0) = 0;
  f.st.gamma(0, 0) = 1;
  f.st.delta(2, 0) = 0;
  f.st.gamma(2, 0) = 1;
  f.st.v_bar(0, 0) = 2.5;
  f.st.v_bar(2, 0) = 1.1;
  const auto& lay = f.ctx().layout;
  std::vector<double> mean(S), var(S);
  for (int s = 0; s < S; ++s) {
    double prec = 1.0 / (h.sigma_mu * h.sigma_mu), b = f.st.lambda[s] / (h.sigma_mu * h.sigma_mu);
    for (int j = 0; j < lay.n_samples; ++j)
      if (f.st.gamma(j, s)) {
        prec += 1.0 / f.st.nu_sq[s];
        b += f.st.v_bar(j, s) / f.st.nu_sq[s];
      }
    mean[s] = b / prec;
    var[s] = 1.0 / prec;
  }
  const Slot slot = [](ModelState& m) -> double& { return m.mu_bar[0]; };
  const double sd = std::sqrt(var[0]);
  check_shape(f.ctx(), f.st, slot, [&](double x) { return dens::normal_log(x, mean[0], var[0]); },
              {mean[0], mean[0] - sd, mean[0] + 2.5 * sd});
  check_mc(f.ctx(), f.st, slot, [&](ModelState& st, Rng& rng) { f.smp.update_mu_bar(st, rng); },
           mean[0] - 12 * sd, mean[0] + 12 * sd, 42);
  Rng a(43), b(43);
  ModelState st = f.st;
  f.smp.update_mu_bar(st, a);
  for (int s = 0; s < S; ++s) CHECK(std::abs(st.mu_bar[s] - b.normal(mean[s], std::sqrt(var[s]))) <= 1e-12);
}

TEST_CASE("mu_bar: flat-prior example and prior-only case") {
  auto d = plain_dataset(3, 1, 1, 1);
  HyperParams h;
  h.sigma_mu = 1e6;
  Sampler smp(d, h, ChainConfig{});
  ModelState st = smp.initial_state();
  st.delta.setZero();
  st.gamma.setOnes();
  st.v_bar.col(0) << 1.0, 2.0, 3.0;
  st.lambda[0] = 0.0;
  Rng rng(2);
  const int N = 100000;
  std::vector<double> xs(N);
  for (double& x : xs) {
    smp.update_mu_bar(st, rng);
    x = st.mu_bar[0];
  }
  CHECK(std::abs(mean_of(xs) - 2.0) < 3 * std::sqrt(1.0 / 3.0 / N));
  CHECK(testsupport::var_of(xs) == doctest::Approx(1.0 / 3.0).epsilon(0.02));

  Sampler plain(d, HyperParams{}, ChainConfig{});
  st.gamma.setZero();
  st.lambda[0] = 1.5;
  Rng a(3), b(3);
  plain.update_mu_bar(st, a);
  CHECK(st.mu_bar[0] == b.normal(1.5, HyperParams{}.sigma_mu));
}

TEST_CASE("p, q, zeta, pi: Beta draws from brute-force counts") {
  Fixture f(51);
  const HyperParams& h = f.ctx().hyper;
  const auto& lay = f.ctx().layout;
  const OtuDataset& d = f.data();
  const int S = d.n_species, St = d.n_total_species();
  // Brute-force recount over every cell.
  std::vector<double> np(St), mp(St), nq(S), mq(S), nz(S), mz(S);
  double N0 = 0, M0 = 0;
  for (int p = 0; p < lay.n_pcrs; ++p) {
    const int j = lay.pcr_sample[p];
    for (int s = 0; s < St; ++s) {
      const bool on = f.st.delta(j, s) == 1 || f.st.gamma(j, s) == 1;
      if (on) {
        mp[s] += 1;
        np[s] += f.st.c(p, s) == 1;
      } else if (s < S) {
        mq[s] += 1;
        nq[s] += f.st.c(p, s) == 2;
      }
      if (f.st.c(p, s) == 0) {
        M0 += 1;
        N0 += d.reads(p, s) == 0;
      }
    }
  }
  for (int j = 0; j < lay.n_samples; ++j) {
    if (d.negative_control[j]) continue;
    for (int s = 0; s < S; ++s)
      if (!f.st.delta(j, s)) {
        mz[s] += 1;
        nz[s] += f.st.gamma(j, s);
      }
  }
  const BernoulliCounts bc = count_bernoulli_stats(f.ctx(), f.st);
  for (int s = 0; s < St; ++s) {
    CHECK(bc.n_p[s] == np[s]);
    CHECK(bc.m_p[s] == mp[s]);
  }
  for (int s = 0; s < S; ++s) {
    CHECK(bc.n_q[s] == nq[s]);
    CHECK(bc.m_q[s] == mq[s]);
    CHECK(bc.n_zeta[s] == nz[s]);
    CHECK(bc.m_zeta[s] == mz[s]);
  }
  CHECK(bc.N0 == N0);
  CHECK(bc.M0 == M0);

  // Shapes against log_joint.
  const Slot sp = [](ModelState& m) -> double& { return m.p[0]; };
  const Slot sq = [](ModelState& m) -> double& { return m.q[0]; };
  const Slot sz = [](ModelState& m) -> double& { return m.zeta[1]; };
  const Slot spi = [](ModelState& m) -> double& { return m.pi; };
  const std::vector<double> pts = {0.5, 0.05, 0.2, 0.8, 0.97};
  check_shape(f.ctx(), f.st, sp, [&](double x) { return dens::beta_log(x, h.a_p + np[0], h.b_p + mp[0] - np[0]); }, pts);
  check_shape(f.ctx(), f.st, sq, [&](double x) { return dens::beta_log(x, h.a_q + nq[0], h.b_q + mq[0] - nq[0]); }, pts);
  check_shape(f.ctx(), f.st, sz, [&](double x) { return dens::beta_log(x, h.a_zeta + nz[1], h.b_zeta + mz[1] - nz[1]); }, pts);
  check_shape(f.ctx(), f.st, spi, [&](double x) { return dens::beta_log(x, h.a_pi + N0, h.b_pi + M0 - N0); }, pts);
  auto upd = [&](ModelState& st, Rng& rng) { f.smp.update_bernoulli_probs(st, rng); };
  check_mc(f.ctx(), f.st, sp, upd, 1e-9, 1 - 1e-9, 52);
  check_mc(f.ctx(), f.st, sq, upd, 1e-9, 1 - 1e-9, 53);
  check_mc(f.ctx(), f.st, sz, upd, 1e-9, 1 - 1e-9, 54);
  check_mc(f.ctx(), f.st, spi, upd, 1e-9, 1 - 1e-9, 55);

  // Exact replay in the documented order: p (all species), then q and zeta
  // per target species, then pi.
  Rng a(56), b(56);
  ModelState st = f.st;
  f.smp.update_bernoulli_probs(st, a);
  for (int s = 0; s < St; ++s) CHECK(std::abs(st.p[s] - b.beta(h.a_p + np[s], h.b_p + mp[s] - np[s])) <= 1e-12);
  for (int s = 0; s < S; ++s) {
    CHECK(std::abs(st.q[s] - b.beta(h.a_q + nq[s], h.b_q + mq[s] - nq[s])) <= 1e-12);
    CHECK(std::abs(st.zeta[s] - b.beta(h.a_zeta + nz[s], h.b_zeta + mz[s] - nz[s])) <= 1e-12);
  }
  CHECK(std::abs(st.pi - b.beta(h.a_pi + N0, h.b_pi + M0 - N0)) <= 1e-12);
}

TEST_CASE("p: default prior example gives Beta(25, 6)") {
  auto d = plain_dataset(5, 1, 2, 1);
  Sampler smp(d, HyperParams{}, ChainConfig{});
  ModelState st = smp.initial_state();
  st.delta.setOnes();
  for (int p = 0; p < 10; ++p) st.c(p, 0) = p < 5 ? 1 : 0;  // n_p = 5, m_p = 10
  Rng a(9), b(9);
  smp.update_bernoulli_probs(st, a);
  CHECK(st.p[0] == b.beta(25.0, 6.0));
  // No off cells: q is a prior draw.
  CHECK(st.q[0] == b.beta(HyperParams{}.a_q, HyperParams{}.b_q));
}

TEST_CASE("sigma_u: inverse gamma over the pipeline effects") {
  Fixture f(61);
  const HyperParams& h = f.ctx().hyper;
  const double shape = h.a_u + 0.5 * f.st.u.size(), scale = h.b_u + 0.5 * f.st.u.squaredNorm();
  const Slot slot = [](ModelState& m) -> double& { return m.sigma_u_sq; };
  const double mode = scale / (shape + 1);
  check_shape(f.ctx(), f.st, slot, [&](double x) { return dens::inv_gamma_log(x, shape, scale); },
              {mode, 0.4 * mode, 3 * mode});
  check_mc(f.ctx(), f.st, slot, [&](ModelState& st, Rng& rng) { f.smp.update_sigma_u(st, rng); }, 1e-6,
           30 * mode, 62);
}

TEST_CASE("sigma_u: example substitution") {
  auto d = plain_dataset(2, 1, 2, 1);
  Sampler smp(d, HyperParams{}, ChainConfig{});
  ModelState st = smp.initial_state();
  st.u << 1.0, -1.0, 0.0, 0.0;  // sum of squares 2 over 4 cells
  Rng a(4), b(4);
  smp.update_sigma_u(st, a);
  CHECK(st.sigma_u_sq == b.inv_gamma(HyperParams{}.a_u + 2.0, HyperParams{}.b_u + 1.0));
}

}  // TEST_SUITE
