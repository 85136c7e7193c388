#include "ednaplus/model_state.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ednaplus {

Matrix ModelState::T() const {
  const Matrix t = gh.Q.llt().solve(Matrix::Identity(gh.Q.rows(), gh.Q.cols()));
  return 0.5 * (t + t.transpose());
}

std::string check_state_invariants(const ModelState& st, const OtuDataset& data) {
  const SurveyLayout lay = SurveyLayout::from(data);
  const int S = data.n_species;
  const int St = data.n_total_species();
  std::ostringstream os;
  auto in01 = [](double x) { return x > 0.0 && x < 1.0; };
  for (int s = 0; s < St; ++s) {
    if (!(st.r[s] > 0.0)) return "r must be positive";
    if (!in01(st.p[s]) && st.p[s] != 1.0) return "p outside (0,1)";
  }
  for (int s = 0; s < S; ++s) {
    if (!(st.sigma_s_sq[s] > 0.0)) return "sigma_s_sq must be positive";
    if (!(st.nu_sq[s] > 0.0)) return "nu_sq must be positive";
  }
  if (!(st.sigma_u_sq > 0.0)) return "sigma_u_sq must be positive";
  if (!(st.mu_tilde > 0.0 && st.mu0 > 0.0 && st.n0 > 0.0)) return "noise parameters must be positive";
  for (int j = 0; j < lay.n_samples; ++j) {
    const bool negctl = !data.negative_control.empty() && data.negative_control[j];
    for (int s = 0; s < St; ++s) {
      const int d = st.delta(j, s), g = st.gamma(j, s);
      if (g == 1 && d == 1) return "gamma=1 with delta=1";
      const bool on = d + g >= 1;
      if (on != std::isfinite(st.v_bar(j, s))) {
        os << "v_bar storage mismatch at sample " << j << " species " << s;
        return os.str();
      }
      if (s >= S) {
        if (d != 1 || g != 0) return "spike-in indicators not clamped";
        if (st.v_bar(j, s) != data.spike_log_amounts(j, s - S)) return "spike-in v_bar altered";
      } else if (negctl && on) {
        return "negative-control sample has delta or gamma set";
      }
      for (int k = 0; k < lay.sample_n_pcr[j]; ++k) {
        const int p = lay.sample_first_pcr[j] + k;
        const int c = st.c(p, s);
        if (c < 0 || c > 2) return "c outside {0,1,2}";
        if (c == 2 && on) return "c=2 with delta or gamma set";
        if (c == 1 && !on) return "c=1 without delta or gamma";
        if ((c == 1) != std::isfinite(st.eta(p, s))) {
          os << "eta storage mismatch at pcr " << p << " species " << s;
          return os.str();
        }
        if (c == 1 && !(st.eta(p, s) > 0.0)) return "eta must be positive";
      }
    }
  }
  return {};
}

void ChainConfig::validate() const {
  if (n_iter < 1) throw std::invalid_argument("n_iter must be >= 1");
  if (n_burnin < 0 || n_burnin >= n_iter) throw std::invalid_argument("n_burnin must satisfy 0 <= n_burnin < n_iter");
  if (thin < 1) throw std::invalid_argument("thin must be >= 1");
  if (adapt_interval < 1) throw std::invalid_argument("adapt_interval must be >= 1");
  if (!(indicator_floor > 0.0 && indicator_floor < 0.5))
    throw std::invalid_argument("indicator_floor must lie in (0, 0.5)");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    throw std::invalid_argument("target_accept must lie in (0, 1)");
  if (laplace_max_iter < 1) throw std::invalid_argument("laplace_max_iter must be >= 1");
}

std::vector<std::string> default_draw_groups() {
  return {"B", "beta0_bar", "L_bar", "T", "lambda", "r", "sigma_s", "sigma_u",
          "phi1", "phi", "zeta", "p", "q", "pi", "mu_tilde"};
}

Matrix DrawTable::as_matrix() const {
  Matrix m(rows.size(), columns.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < columns.size(); ++j) m(i, j) = rows[i][j];
  return m;
}

Vector DrawTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] != name) continue;
    Vector v(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) v[i] = rows[i][j];
    return v;
  }
  throw std::out_of_range("no draw column named " + name);
}

int expected_draw_count(const ChainConfig& cfg) { return (cfg.n_iter - cfg.n_burnin) / cfg.thin; }

}  // namespace ednaplus
