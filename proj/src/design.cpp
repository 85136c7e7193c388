#include "ednaplus/design.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ednaplus/random.hpp"

namespace ednaplus {

void DesignSpec::validate() const {
  auto bad = [](const std::string& f) { throw std::invalid_argument("DesignSpec: invalid " + f); };
  if (n < 1) bad("n");
  if (M < 1) bad("M");
  if (K < 1) bad("K");
  if (S < 1) bad("S");
  if (S_star < 0) bad("S_star");
  if (!(sigma_sq > 0)) bad("sigma_sq");
  if (!(sigma_y_sq > 0)) bad("sigma_y_sq");
  if (!(sigma_u_sq >= 0)) bad("sigma_u_sq");
  if (!(tau_sq > 0)) bad("tau_sq");
  if (!(sigma_lambda_sq >= 0)) bad("sigma_lambda_sq");
}

double DesignSpec::effective_sigma_lambda_sq() const {
  if (sigma_lambda_sq > 0) return sigma_lambda_sq;
  return 1e6 * std::max({sigma_sq, sigma_y_sq, sigma_u_sq, tau_sq});
}

double var_biomass_diff(const DesignSpec& d) {
  d.validate();
  const double ratio = d.sigma_u_sq / d.sigma_y_sq;
  return (d.sigma_sq + d.sigma_y_sq / d.K * (1.0 + ratio / (ratio * d.S_star + 1.0))) / d.M;
}

double var_beta(const DesignSpec& d) {
  d.validate();
  if (d.n < 2) throw std::invalid_argument("var_beta: n must be at least 2");
  const double base = (d.tau_sq + (d.sigma_sq + d.sigma_y_sq / d.K) / d.M) / (d.n - 1);
  const double denom = d.sigma_y_sq +
                       (d.M * d.tau_sq + d.sigma_sq) * d.K * (1.0 + d.S_star * d.sigma_u_sq / d.sigma_y_sq) +
                       d.sigma_u_sq * (d.S + d.S_star - 1);
  return base * (1.0 + d.sigma_u_sq / denom);
}

namespace {

// Coordinate layout of the latent vector (l, v, u, lambda[, beta]).
struct Layout {
  int n, M, K, S, Ss;
  bool with_u, with_beta;
  int nl, nv, nu, nlam, nb;

  Layout(const DesignSpec& d, OracleMode mode)
      : n(d.n), M(d.M), K(d.K), S(d.S), Ss(d.S_star), with_u(d.sigma_u_sq > 0),
        with_beta(mode == OracleMode::Beta) {
    nl = n * S;
    nv = n * M * S;
    nu = with_u ? n * M * K : 0;
    nlam = S + Ss;
    nb = with_beta ? S : 0;
  }
  int dim() const { return nl + nv + nu + nlam + nb; }
  int l(int i, int s) const { return s * n + i; }
  int v(int i, int m, int s) const { return nl + (s * n + i) * M + m; }
  int u(int i, int m, int k) const { return nl + nv + (i * M + m) * K + k; }
  int lam(int s) const { return nl + nv + nu + s; }
  int beta(int s) const { return nl + nv + nu + nlam + s; }
};

// Adds prec * (sum_a coef_a x_{idx_a})^2 to the precision.
void add_square(Eigen::MatrixXd& P, std::initializer_list<std::pair<int, double>> terms, double prec) {
  for (const auto& a : terms)
    for (const auto& b : terms) P(a.first, b.first) += prec * a.second * b.second;
}

Eigen::MatrixXd build_precision(const DesignSpec& d, const Layout& L, const double* x) {
  const int N = L.dim();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(N, N);
  for (int s = 0; s < L.S; ++s)
    for (int i = 0; i < L.n; ++i) {
      for (int m = 0; m < L.M; ++m) add_square(P, {{L.v(i, m, s), 1.0}, {L.l(i, s), -1.0}}, 1.0 / d.sigma_sq);
      if (L.with_beta) add_square(P, {{L.l(i, s), 1.0}, {L.beta(s), -x[i]}}, 1.0 / d.tau_sq);
    }
  for (int i = 0; i < L.n; ++i)
    for (int m = 0; m < L.M; ++m)
      for (int k = 0; k < L.K; ++k) {
        if (L.with_u) add_square(P, {{L.u(i, m, k), 1.0}}, 1.0 / d.sigma_u_sq);
        for (int s = 0; s < L.S + L.Ss; ++s) {
          // Each observation y ~ N(u + lambda_s + v, sigma_y^2) contributes
          // the same quadratic form in the latents regardless of y.
          const int iu = L.with_u ? L.u(i, m, k) : -1;
          const double cu = L.with_u ? 1.0 : 0.0;
          if (s < L.S) {
            if (iu >= 0)
              add_square(P, {{iu, cu}, {L.lam(s), 1.0}, {L.v(i, m, s), 1.0}}, 1.0 / d.sigma_y_sq);
            else
              add_square(P, {{L.lam(s), 1.0}, {L.v(i, m, s), 1.0}}, 1.0 / d.sigma_y_sq);
          } else {
            if (iu >= 0)
              add_square(P, {{iu, cu}, {L.lam(s), 1.0}}, 1.0 / d.sigma_y_sq);
            else
              add_square(P, {{L.lam(s), 1.0}}, 1.0 / d.sigma_y_sq);
          }
        }
      }
  const double slam = d.effective_sigma_lambda_sq();
  for (int s = 0; s < L.S + L.Ss; ++s) add_square(P, {{L.lam(s), 1.0}}, 1.0 / slam);
  return P;
}

void check_dimension(const Layout& L, const OracleOptions& opt) {
  if (L.dim() > opt.max_dimension)
    throw std::invalid_argument("design oracle: dimension " + std::to_string(L.dim()) +
                                " exceeds cap " + std::to_string(opt.max_dimension));
}

double quad_inverse(const Eigen::MatrixXd& P, const Eigen::VectorXd& a) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(P);
  return a.dot(ldlt.solve(a));
}

}  // namespace

int oracle_dimension(const DesignSpec& spec, OracleMode mode) { return Layout(spec, mode).dim(); }

double oracle_difference_variance(const DesignSpec& spec, const OracleOptions& opt) {
  spec.validate();
  if (spec.n < 2) throw std::invalid_argument("design oracle: diff mode needs n >= 2");
  const Layout L(spec, OracleMode::Diff);
  check_dimension(L, opt);
  const Eigen::MatrixXd P = build_precision(spec, L, nullptr);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(L.dim());
  a[L.l(0, 0)] = 1.0;
  a[L.l(1, 0)] = -1.0;
  return quad_inverse(P, a);
}

double oracle_beta_variance_given(const DesignSpec& spec, const double* x, const OracleOptions& opt) {
  spec.validate();
  const Layout L(spec, OracleMode::Beta);
  check_dimension(L, opt);
  const Eigen::MatrixXd P = build_precision(spec, L, x);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(L.dim());
  a[L.beta(0)] = 1.0;
  return quad_inverse(P, a);
}

double gaussian_design_oracle(const DesignSpec& spec, OracleMode mode, const OracleOptions& opt) {
  if (mode == OracleMode::Diff) return 0.5 * oracle_difference_variance(spec, opt);

  spec.validate();
  if (spec.n < 2) throw std::invalid_argument("design oracle: beta mode needs n >= 2");
  check_dimension(Layout(spec, mode), opt);
  const int R = opt.n_covariate_draws;
  if (R < 3) throw std::invalid_argument("design oracle: need at least 3 covariate draws");
  Rng rng(opt.seed);
  std::vector<double> x(spec.n);
  Eigen::MatrixXd A(R, 3);
  Eigen::VectorXd prec(R);
  for (int r = 0; r < R; ++r) {
    double ss = 0.0, sum = 0.0;
    for (int i = 0; i < spec.n; ++i) {
      x[i] = rng.normal();
      ss += x[i] * x[i];
      sum += x[i];
    }
    prec[r] = 1.0 / oracle_beta_variance_given(spec, x.data(), opt);
    // Control variates with known expectation n.
    A(r, 0) = 1.0;
    A(r, 1) = ss - spec.n;
    A(r, 2) = sum * sum - spec.n;
  }
  const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(prec);
  return 1.0 / coef[0];
}

}  // namespace ednaplus
