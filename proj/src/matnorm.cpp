#include "ednaplus/matnorm.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace ednaplus {

namespace {

Matrix drop_index(const Matrix& A, int i) {
  const int n = static_cast<int>(A.rows());
  Matrix out(n - 1, n - 1);
  for (int r = 0, rr = 0; r < n; ++r) {
    if (r == i) continue;
    for (int c = 0, cc = 0; c < n; ++c) {
      if (c == i) continue;
      out(rr, cc++) = A(r, c);
    }
    ++rr;
  }
  return out;
}

Vector drop_entry(const Vector& v, int i) {
  Vector out(v.size() - 1);
  for (Eigen::Index r = 0, rr = 0; r < v.size(); ++r)
    if (r != i) out(rr++) = v(r);
  return out;
}

}  // namespace

KernelCovariance kernel_covariance(const Matrix& coords, double l_sigma) {
  if (!(l_sigma > 0.0)) throw std::invalid_argument("kernel_covariance: l_Sigma must be > 0");
  if (!coords.allFinite()) throw std::invalid_argument("kernel_covariance: non-finite coordinates");
  KernelCovariance out;
  out.cov = kernel_cross_covariance(coords, coords, l_sigma);
  out.cov.diagonal().setOnes();
  Eigen::LLT<Matrix> llt(out.cov);
  if (llt.info() == Eigen::Success) return out;
  for (double jitter = 1e-8; jitter <= 1e-4 * 1.0000001; jitter *= 10.0) {
    Matrix c = out.cov;
    c.diagonal().array() += jitter;
    llt.compute(c);
    if (llt.info() == Eigen::Success) {
      out.cov = c;
      out.jitter = jitter;
      return out;
    }
  }
  throw std::runtime_error("kernel_covariance: not positive definite even with jitter 1e-4");
}

Matrix kernel_cross_covariance(const Matrix& a, const Matrix& b, double l_sigma) {
  Matrix k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      const double d2 = (a.row(i) - b.row(j)).squaredNorm();
      k(i, j) = std::exp(-d2 / (2.0 * l_sigma));
    }
  return k;
}

double matnorm_logpdf(const Matrix& X, const MatrixNormalParams& p) {
  const Eigen::Index n = X.rows(), S = X.cols();
  if (p.mean.rows() != n || p.mean.cols() != S || p.row_cov.rows() != n || p.col_cov.rows() != S)
    throw std::invalid_argument("matnorm_logpdf: dimension mismatch");
  Eigen::LLT<Matrix> lu(p.row_cov), lv(p.col_cov);
  if (lu.info() != Eigen::Success || lv.info() != Eigen::Success)
    throw std::invalid_argument("matnorm_logpdf: covariance not positive definite");
  const Matrix D = X - p.mean;
  const double ldu = 2.0 * lu.matrixLLT().diagonal().array().log().sum();
  const double ldv = 2.0 * lv.matrixLLT().diagonal().array().log().sum();
  const Matrix UiD = lu.solve(D);                       // U^{-1} D
  const Matrix DtViT = lv.solve(D.transpose());          // V^{-1} D^T
  const double quad = (UiD.array() * DtViT.transpose().array()).sum();
  return -0.5 * (static_cast<double>(n * S) * dens::kLogTwoPi + static_cast<double>(S) * ldu +
                 static_cast<double>(n) * ldv + quad);
}

ScalarConditional matnorm_conditional_scalar(int i, int j, const Matrix& X,
                                             const MatrixNormalParams& p) {
  const int n = static_cast<int>(X.rows());
  const int S = static_cast<int>(X.cols());
  if (i < 0 || i >= n || j < 0 || j >= S)
    throw std::out_of_range("matnorm_conditional_scalar: index out of range");
  const Matrix& U = p.row_cov;
  const Matrix& V = p.col_cov;
  const Matrix D = X - p.mean;

  // Column step: tv2 = V_{j,-j} V_{-j,-j}^{-1}, tv = tv2 V_{-j,j}.
  Vector tv2 = Vector::Zero(S - 1);
  double tv = 0.0;
  if (S > 1) {
    const Vector vj = drop_entry(V.col(j), j);
    Eigen::LLT<Matrix> lv(drop_index(V, j));
    if (lv.info() != Eigen::Success)
      throw std::runtime_error("matnorm_conditional_scalar: V_{-j,-j} singular");
    tv2 = lv.solve(vj);
    tv = tv2.dot(vj);
  }
  const double vcond = V(j, j) - tv;

  // Row step: x1 solves U_{-i,-i} x1 = U_{-i,i}.
  Vector x1 = Vector::Zero(n - 1);
  double ucond = U(i, i);
  if (n > 1) {
    const Vector ui = drop_entry(U.col(i), i);
    Eigen::LLT<Matrix> lu(drop_index(U, i));
    if (lu.info() != Eigen::Success)
      throw std::runtime_error("matnorm_conditional_scalar: U_{-i,-i} singular (kernel degeneracy)");
    x1 = lu.solve(ui);
    ucond -= ui.dot(x1);
  }

  ScalarConditional out;
  out.var = std::max(vcond * ucond, 1e-12);

  // D_{i,-j} tv2 and the residual of the other rows after column conditioning.
  auto row_without_j = [&](int r) {
    Vector v(S - 1);
    for (int c = 0, cc = 0; c < S; ++c)
      if (c != j) v(cc++) = D(r, c);
    return v;
  };
  double mean = p.mean(i, j);
  if (S > 1) mean += row_without_j(i).dot(tv2);
  if (n > 1) {
    Vector resid(n - 1);
    for (int r = 0, rr = 0; r < n; ++r) {
      if (r == i) continue;
      double val = D(r, j);
      if (S > 1) val -= row_without_j(r).dot(tv2);
      resid(rr++) = val;
    }
    mean += x1.dot(resid);
  }
  out.mean = mean;
  return out;
}

ScalarConditional matnorm_conditional_precision(int i, int j, const Matrix& X,
                                                const Eigen::RowVectorXd& pd_row,
                                                const Matrix& row_prec, const Matrix& col_prec) {
  const double lam = row_prec(i, i) * col_prec(j, j);
  ScalarConditional out;
  out.var = std::max(1.0 / lam, 1e-12);
  out.mean = X(i, j) - pd_row.dot(col_prec.col(j)) / lam;
  return out;
}

Matrix equicorrelated_inverse(double a1, double a2, int n) {
  Matrix out = Matrix::Constant(n, n, -a2 / (a1 * (a1 + n * a2)));
  out.diagonal().array() += 1.0 / a1;
  return out;
}

GhState GhState::initial(int S) {
  GhState g;
  g.Q = Matrix::Identity(S, S);
  g.lambda_sq = Matrix::Ones(S, S);
  g.nu = Matrix::Ones(S, S);
  g.tau_sq = 1.0;
  g.xi = 1.0;
  return g;
}

bool gh_sweep(GhState& gh, const Matrix& scatter, int n_rows, double lambda_gh, Rng& rng) {
  const int S = static_cast<int>(gh.Q.rows());
  GhState prev = gh;
  Matrix& Q = gh.Q;
  for (int i = 0; i < S; ++i) {
    const double s22 = scatter(i, i);
    const double gamma = rng.gamma(0.5 * n_rows + 1.0, 0.5 * (s22 + lambda_gh));
    if (S == 1) {
      Q(0, 0) = gamma;
      continue;
    }
    const Matrix Q11 = drop_index(Q, i);
    const Vector s12 = drop_entry(scatter.col(i), i);
    Eigen::LLT<Matrix> l11(Q11);
    if (l11.info() != Eigen::Success) {
      gh = prev;
      std::cerr << "warning: graphical-horseshoe sweep rejected (Q11 not SPD)\n";
      return false;
    }
    const Matrix Q11inv = l11.solve(Matrix::Identity(S - 1, S - 1));
    Matrix Cinv = (s22 + lambda_gh) * Q11inv;
    for (int a = 0, aa = 0; a < S; ++a) {
      if (a == i) continue;
      Cinv(aa, aa) += 1.0 / (gh.lambda_sq(a, i) * gh.tau_sq);
      ++aa;
    }
    const Vector beta = rng.gaussian_from_precision(Cinv, -s12);
    const double w22 = gamma + beta.dot(Q11inv * beta);
    for (int a = 0, aa = 0; a < S; ++a) {
      if (a == i) continue;
      Q(a, i) = beta(aa);
      Q(i, a) = beta(aa);
      ++aa;
    }
    Q(i, i) = w22;
  }
  if (S > 1) {
    double ssum = 0.0;
    for (int a = 0; a < S; ++a)
      for (int b = a + 1; b < S; ++b) {
        const double w2 = Q(a, b) * Q(a, b);
        const double l2 = rng.inv_gamma(1.0, 1.0 / gh.nu(a, b) + w2 / (2.0 * gh.tau_sq));
        const double nu = rng.inv_gamma(1.0, 1.0 + 1.0 / l2);
        gh.lambda_sq(a, b) = gh.lambda_sq(b, a) = l2;
        gh.nu(a, b) = gh.nu(b, a) = nu;
        ssum += w2 / (2.0 * l2);
      }
    const double m = 0.5 * S * (S - 1);
    gh.tau_sq = rng.inv_gamma(0.5 * (m + 1.0), 1.0 / gh.xi + ssum);
    gh.xi = rng.inv_gamma(1.0, 1.0 + 1.0 / gh.tau_sq);
  }
  Eigen::LLT<Matrix> check(Q);
  if (check.info() != Eigen::Success || !Q.allFinite()) {
    gh = prev;
    std::cerr << "warning: graphical-horseshoe sweep rejected (Q lost positive definiteness)\n";
    return false;
  }
  return true;
}

bool gh_update_precision(GhState& gh, const Matrix& residual, const Matrix& row_prec,
                         double lambda_gh, Rng& rng) {
  const Matrix scatter = residual.transpose() * row_prec * residual;
  return gh_sweep(gh, scatter, static_cast<int>(residual.rows()), lambda_gh, rng);
}

double gh_log_prior(const GhState& gh, double lambda_gh) {
  const int S = static_cast<int>(gh.Q.rows());
  double lp = 0.0;
  for (int a = 0; a < S; ++a) lp += std::log(0.5 * lambda_gh) - 0.5 * lambda_gh * gh.Q(a, a);
  for (int a = 0; a < S; ++a)
    for (int b = a + 1; b < S; ++b) {
      lp += dens::normal_log(gh.Q(a, b), 0.0, gh.lambda_sq(a, b) * gh.tau_sq);
      lp += dens::inv_gamma_log(gh.lambda_sq(a, b), 0.5, 1.0 / gh.nu(a, b));
      lp += dens::inv_gamma_log(gh.nu(a, b), 0.5, 1.0);
    }
  if (S > 1) {
    lp += dens::inv_gamma_log(gh.tau_sq, 0.5, 1.0 / gh.xi);
    lp += dens::inv_gamma_log(gh.xi, 0.5, 1.0);
  }
  return lp;
}

GhState gh_sample_prior(int S, double lambda_gh, Rng& rng) {
  GhState g = GhState::initial(S);
  for (;;) {
    if (S > 1) {
      g.xi = rng.inv_gamma(0.5, 1.0);
      g.tau_sq = rng.inv_gamma(0.5, 1.0 / g.xi);
    }
    for (int a = 0; a < S; ++a) g.Q(a, a) = rng.exponential(0.5 * lambda_gh);
    for (int a = 0; a < S; ++a)
      for (int b = a + 1; b < S; ++b) {
        const double nu = rng.inv_gamma(0.5, 1.0);
        const double l2 = rng.inv_gamma(0.5, 1.0 / nu);
        g.nu(a, b) = g.nu(b, a) = nu;
        g.lambda_sq(a, b) = g.lambda_sq(b, a) = l2;
        g.Q(a, b) = g.Q(b, a) = rng.normal(0.0, std::sqrt(l2 * g.tau_sq));
      }
    Eigen::LLT<Matrix> llt(g.Q);
    if (llt.info() == Eigen::Success && g.Q.allFinite()) return g;
  }
}

}  // namespace ednaplus
