#pragma once

#include "ednaplus/data_model.hpp"
#include "ednaplus/random.hpp"

namespace ednaplus {

struct KernelCovariance {
  Matrix cov;
  double jitter = 0.0;  // diagonal jitter that was needed for Cholesky
};

// Squared-exponential kernel exp(-d^2 / (2 l)) on coordinates already mapped
// to the unit square. Adds 1e-8 I, escalating x10 up to 1e-4, if Cholesky fails.
KernelCovariance kernel_covariance(const Matrix& coords, double l_sigma);

// Cross-kernel between two coordinate sets (rows of a vs rows of b).
Matrix kernel_cross_covariance(const Matrix& a, const Matrix& b, double l_sigma);

struct MatrixNormalParams {
  Matrix mean;     // n x S
  Matrix row_cov;  // U, n x n
  Matrix col_cov;  // V, S x S
};

double matnorm_logpdf(const Matrix& X, const MatrixNormalParams& params);

struct ScalarConditional {
  double mean = 0.0;
  double var = 0.0;
};

// Moments of X(i,j) given all other entries, by the partitioned solve
// algorithm. Never forms V (x) U.
ScalarConditional matnorm_conditional_scalar(int i, int j, const Matrix& X,
                                             const MatrixNormalParams& params);

// Same conditional written in terms of the precisions P = U^{-1}, Q = V^{-1}.
// `pd_row` must hold row i of P * (X - M).
ScalarConditional matnorm_conditional_precision(int i, int j, const Matrix& X,
                                                const Eigen::RowVectorXd& pd_row,
                                                const Matrix& row_prec, const Matrix& col_prec);

// (a1 I_n + a2 11^T)^{-1} in closed form.
Matrix equicorrelated_inverse(double a1, double a2, int n);

// Graphical-horseshoe state over the S x S precision Q = T^{-1}.
struct GhState {
  Matrix Q;
  Matrix lambda_sq;  // local scales, used for s != t (symmetric)
  Matrix nu;         // auxiliaries of the local scales
  double tau_sq = 1.0;
  double xi = 1.0;

  static GhState initial(int S);
};

// One Gibbs sweep over the columns of Q and all scale auxiliaries given the
// scatter matrix `scatter` = R^T Sigma^{-1} R of `n_rows` matrix-normal rows.
// On loss of positive definiteness the previous state is kept and false is
// returned.
bool gh_sweep(GhState& gh, const Matrix& scatter, int n_rows, double lambda_gh, Rng& rng);

// Convenience form taking the residual matrix and the row precision Sigma^{-1}.
bool gh_update_precision(GhState& gh, const Matrix& residual, const Matrix& row_prec,
                         double lambda_gh, Rng& rng);

// Log density of the horseshoe hierarchy, up to the positive-definiteness
// truncation constant.
double gh_log_prior(const GhState& gh, double lambda_gh);

// Exact draw from the (truncated) hierarchy by rejection.
GhState gh_sample_prior(int S, double lambda_gh, Rng& rng);

}  // namespace ednaplus
