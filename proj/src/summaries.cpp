#include "ednaplus/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ednaplus/likelihood.hpp"
#include "ednaplus/matnorm.hpp"

namespace ednaplus {

const ParamSummary* SummaryReport::find(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return &r;
  return nullptr;
}

double quantile_sorted(const std::vector<double>& x, double prob) {
  if (x.empty()) throw std::invalid_argument("quantile of empty sample");
  const double h = (static_cast<double>(x.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double effective_sample_size(const std::vector<double>& x) {
  const std::size_t N = x.size();
  if (N < 4) return static_cast<double>(N);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(N);
  std::vector<double> c(N);
  for (std::size_t i = 0; i < N; ++i) c[i] = x[i] - mean;
  double c0 = 0.0;
  for (double v : c) c0 += v * v;
  if (c0 <= 0.0) return static_cast<double>(N);
  auto rho = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < N; ++i) s += c[i] * c[i + lag];
    return s / c0;
  };
  double tau = -1.0;
  for (std::size_t k = 0; 2 * k + 1 < N; ++k) {
    const double pair = rho(2 * k) + rho(2 * k + 1);
    if (pair < 0.0) break;
    tau += 2.0 * pair;
  }
  const double ess = static_cast<double>(N) / std::max(tau, 1e-12);
  return std::clamp(ess, 1.0, static_cast<double>(N));
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& ch : chains) {
    const std::size_t h = ch.size() / 2;
    if (h < 2) continue;
    halves.emplace_back(ch.begin(), ch.begin() + h);
    halves.emplace_back(ch.end() - h, ch.end());
  }
  const std::size_t m = halves.size();
  if (m < 2) return 1.0;
  const double n = static_cast<double>(halves[0].size());
  std::vector<double> means(m);
  double W = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    double s = 0.0;
    for (double v : halves[k]) s += v;
    means[k] = s / n;
    double ss = 0.0;
    for (double v : halves[k]) ss += (v - means[k]) * (v - means[k]);
    W += ss / (n - 1.0);
  }
  W /= static_cast<double>(m);
  double grand = 0.0;
  for (double v : means) grand += v;
  grand /= static_cast<double>(m);
  double B = 0.0;
  for (double v : means) B += (v - grand) * (v - grand);
  B *= n / (static_cast<double>(m) - 1.0);
  if (W <= 0.0) return B <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * W + B / n;
  return std::sqrt(var_plus / W);
}

namespace {

ParamSummary summarize_scalar(const std::string& name, const std::vector<std::vector<double>>& chains) {
  std::vector<double> all;
  double ess = 0.0;
  for (const auto& ch : chains) {
    all.insert(all.end(), ch.begin(), ch.end());
    ess += effective_sample_size(ch);
  }
  ParamSummary r;
  r.name = name;
  const double N = static_cast<double>(all.size());
  double mean = 0.0;
  for (double v : all) mean += v;
  mean /= N;
  double ss = 0.0;
  for (double v : all) ss += (v - mean) * (v - mean);
  r.mean = mean;
  r.sd = all.size() > 1 ? std::sqrt(ss / (N - 1.0)) : 0.0;
  std::sort(all.begin(), all.end());
  r.lower = quantile_sorted(all, 0.025);
  r.median = quantile_sorted(all, 0.5);
  r.upper = quantile_sorted(all, 0.975);
  r.ess = ess;
  r.rhat = split_rhat(chains);
  return r;
}

}  // namespace

SummaryReport summarize_draws(const Draws& draws) { return summarize_draws(std::vector<Draws>{draws}); }

SummaryReport summarize_draws(const std::vector<Draws>& chains) {
  if (chains.empty()) throw std::invalid_argument("summarize_draws: no chains");
  SummaryReport rep;
  rep.n_chains = static_cast<int>(chains.size());
  rep.n_draws = static_cast<int>(chains[0].n_draws());
  for (const auto& ch : chains) {
    if (static_cast<int>(ch.n_draws()) < kMinSummaryDraws)
      throw std::invalid_argument("summarize_draws: need at least " + std::to_string(kMinSummaryDraws) +
                                  " draws, got " + std::to_string(ch.n_draws()));
    if (ch.groups.size() != chains[0].groups.size())
      throw std::invalid_argument("summarize_draws: chains store different groups");
  }
  for (const auto& [gname, tab0] : chains[0].groups) {
    for (std::size_t c = 0; c < tab0.columns.size(); ++c) {
      std::vector<std::vector<double>> per_chain;
      for (const auto& ch : chains) {
        const DrawTable& tab = ch.groups.at(gname);
        std::vector<double> v(tab.rows.size());
        for (std::size_t t = 0; t < tab.rows.size(); ++t) v[t] = tab.rows[t][c];
        per_chain.push_back(std::move(v));
      }
      rep.rows.push_back(summarize_scalar(tab0.columns[c], per_chain));
    }
    if (gname == "T") {
      const int S = static_cast<int>(std::lround(std::sqrt(static_cast<double>(tab0.columns.size()))));
      for (int s = 0; s < S; ++s) {
        const std::size_t c = static_cast<std::size_t>(s) * S + s;
        std::vector<std::vector<double>> per_chain;
        for (const auto& ch : chains) {
          const DrawTable& tab = ch.groups.at(gname);
          std::vector<double> v(tab.rows.size());
          for (std::size_t t = 0; t < tab.rows.size(); ++t) v[t] = std::sqrt(tab.rows[t][c]);
          per_chain.push_back(std::move(v));
        }
        // "T[a,a]" -> "sqrt_T[a]"
        const std::string& col = tab0.columns[c];
        const std::string sp = col.substr(2, col.find(',') - 2);
        rep.rows.push_back(summarize_scalar("sqrt_T[" + sp + "]", per_chain));
      }
    }
  }
  return rep;
}

Matrix species_correlation(const DrawTable& T, int S) {
  if (T.rows.empty()) throw std::invalid_argument("species_correlation: no draws");
  Matrix acc = Matrix::Zero(S, S);
  for (const auto& row : T.rows) {
    if (static_cast<int>(row.size()) != S * S)
      throw std::invalid_argument("species_correlation: T draw has wrong size");
    const Eigen::Map<const Matrix> t(row.data(), S, S);
    const Vector d = t.diagonal().cwiseSqrt().cwiseInverse();
    acc += d.asDiagonal() * t * d.asDiagonal();
  }
  acc /= static_cast<double>(T.rows.size());
  acc = 0.5 * (acc + acc.transpose());
  acc.diagonal().setOnes();
  return acc;
}

BiomassSurface predict_biomass_grid(const Draws& draws, const OtuDataset& data,
                                    const HyperParams& hyper, const Matrix& grid_coords,
                                    const Matrix& grid_covariates) {
  if (data.coordinates.rows() != data.n_sites || data.coordinates.cols() != 2)
    throw std::invalid_argument("predict_biomass_grid: dataset has no site coordinates");
  if (grid_coords.cols() != 2 || grid_coords.rows() == 0)
    throw std::invalid_argument("predict_biomass_grid: grid must be a non-empty G x 2 matrix");
  const int nz = data.n_site_covariates();
  if (nz > 0 && (grid_covariates.cols() != nz || grid_covariates.rows() != grid_coords.rows()))
    throw std::invalid_argument("predict_biomass_grid: grid covariates required, one column per site covariate");
  for (const char* g : {"L_bar", "beta0_bar"})
    if (!draws.groups.count(g)) throw std::invalid_argument(std::string("predict_biomass_grid: draws lack ") + g);
  if (nz > 0 && !draws.groups.count("B")) throw std::invalid_argument("predict_biomass_grid: draws lack B");

  OtuDataset named = data;
  named.fill_default_names();
  const ModelContext ctx(named, hyper, false);
  const int n = data.n_sites, S = data.n_species, G = static_cast<int>(grid_coords.rows());

  BiomassSurface out;
  out.grid = grid_coords;
  out.species.assign(named.species_names.begin(), named.species_names.begin() + S);
  const Eigen::Vector2d lo = data.coordinates.colwise().minCoeff();
  const Eigen::Vector2d hi = data.coordinates.colwise().maxCoeff();
  for (int g = 0; g < G; ++g)
    if (grid_coords(g, 0) < lo[0] || grid_coords(g, 0) > hi[0] || grid_coords(g, 1) < lo[1] ||
        grid_coords(g, 1) > hi[1])
      ++out.n_extrapolated;

  const Matrix grid_unit = ctx.rescale.apply(grid_coords);
  const Matrix cross = kernel_cross_covariance(grid_unit, ctx.coords_unit, hyper.l_Sigma);  // G x n
  Eigen::LLT<Matrix> llt(ctx.Sigma);
  if (llt.info() != Eigen::Success) throw std::runtime_error("predict_biomass_grid: kernel not positive definite");
  const Matrix W = llt.solve(cross.transpose()).transpose();  // G x n, k' Sigma^{-1}

  const DrawTable& Lt = draws.groups.at("L_bar");
  const DrawTable& b0t = draws.groups.at("beta0_bar");
  const DrawTable* Bt = nz > 0 ? &draws.groups.at("B") : nullptr;
  const std::size_t N = Lt.rows.size();
  if (N == 0) throw std::invalid_argument("predict_biomass_grid: no draws");

  Matrix acc = Matrix::Zero(G, S);
  Matrix L(n, S), site_mean(n, S), grid_mean(G, S);
  for (std::size_t t = 0; t < N; ++t) {
    L = Eigen::Map<const Matrix>(Lt.rows[t].data(), n, S);
    const Eigen::Map<const Vector> b0(b0t.rows[t].data(), S);
    site_mean = Vector::Ones(n) * b0.transpose();
    grid_mean = Vector::Ones(G) * b0.transpose();
    if (nz > 0) {
      const Eigen::Map<const Matrix> B(Bt->rows[t].data(), nz, S);
      site_mean += data.site_covariates * B;
      grid_mean += grid_covariates * B;
    }
    acc += grid_mean + W * (L - site_mean);
  }
  out.mean_log_biomass = acc / static_cast<double>(N);
  return out;
}

Vector biodiversity_index(const BiomassSurface& surface) {
  const Matrix& m = surface.mean_log_biomass;
  if (m.rows() == 0) throw std::invalid_argument("biodiversity_index: empty grid");
  Vector idx = Vector::Zero(m.rows());
  for (Eigen::Index s = 0; s < m.cols(); ++s) {
    const double lo = m.col(s).minCoeff(), hi = m.col(s).maxCoeff();
    const double range = hi - lo;
    if (!(range > 0.0)) continue;
    idx += ((m.col(s).array() - lo) / range).matrix();
  }
  return idx;
}

}  // namespace ednaplus
