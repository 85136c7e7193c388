#include "ednaplus/data_model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ednaplus {

int OtuDataset::n_samples() const {
  return std::accumulate(samples_per_site.begin(), samples_per_site.end(), 0);
}

int OtuDataset::n_pcrs() const {
  return std::accumulate(pcrs_per_sample.begin(), pcrs_per_sample.end(), 0);
}

void OtuDataset::fill_default_names() {
  auto fill = [](std::vector<std::string>& names, int n, const char* prefix) {
    if (static_cast<int>(names.size()) == n) return;
    names.clear();
    for (int i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i + 1));
  };
  std::vector<std::string> sp = species_names;
  if (static_cast<int>(sp.size()) != n_total_species()) {
    sp.clear();
    for (int s = 0; s < n_species; ++s) sp.push_back("sp" + std::to_string(s + 1));
    for (int s = 0; s < n_spikes; ++s) sp.push_back("spike" + std::to_string(s + 1));
  }
  species_names = sp;
  fill(site_names, n_sites, "site");
  fill(sample_names, n_samples(), "sample");
  fill(site_covariate_names, n_site_covariates(), "z");
  fill(sample_covariate_names, n_sample_covariates(), "w");
}

void HyperParams::validate() const {
  const std::pair<const char*, double> fields[] = {
      {"sigma_beta_sq", sigma_beta_sq}, {"l_Sigma", l_Sigma},
      {"a_zeta", a_zeta}, {"b_zeta", b_zeta},
      {"sigma_mu", sigma_mu}, {"nu_fixed", nu_fixed},
      {"a_p", a_p}, {"b_p", b_p}, {"a_q", a_q}, {"b_q", b_q},
      {"mu_r", mu_r}, {"sigma_r", sigma_r},
      {"a_sigma", a_sigma}, {"b_sigma", b_sigma},
      {"a_u", a_u}, {"b_u", b_u}, {"a_pi", a_pi}, {"b_pi", b_pi},
      {"sigma_phi_sq", sigma_phi_sq}, {"lambda_GH", lambda_GH},
      {"rate_mu_tilde", rate_mu_tilde}, {"rate_mu0", rate_mu0}, {"rate_n0", rate_n0},
      {"sigma_lambda_sq", sigma_lambda_sq}, {"sigma_spike_sq", sigma_spike_sq}};
  for (const auto& [name, value] : fields) {
    if (!(value > 0.0) || std::isnan(value))
      throw std::invalid_argument(std::string("hyperparameter ") + name + " must be > 0");
  }
}

namespace {

bool all_finite(const Matrix& m) { return m.size() == 0 || m.allFinite(); }

}  // namespace

ValidationReport validate_dataset(const OtuDataset& d) {
  ValidationReport rep;
  auto err = [&](const std::string& m) { rep.errors.push_back(m); };

  if (d.n_sites < 1) err("n_sites must be >= 1");
  if (d.n_species < 1) err("n_species must be >= 1");
  if (d.n_spikes < 0) err("n_spikes must be >= 0");
  if (static_cast<int>(d.samples_per_site.size()) != d.n_sites) {
    err("samples_per_site has " + std::to_string(d.samples_per_site.size()) +
        " entries, expected n_sites=" + std::to_string(d.n_sites));
    return rep;
  }
  for (int i = 0; i < d.n_sites; ++i)
    if (d.samples_per_site[i] < 1) err("site " + std::to_string(i) + " has no samples");
  const int J = d.n_samples();
  if (static_cast<int>(d.pcrs_per_sample.size()) != J) {
    err("pcrs_per_sample has " + std::to_string(d.pcrs_per_sample.size()) +
        " entries, expected " + std::to_string(J) + " samples");
    return rep;
  }
  for (int j = 0; j < J; ++j)
    if (d.pcrs_per_sample[j] < 1) err("sample " + std::to_string(j) + " has no PCR replicates");
  if (!rep.ok()) return rep;

  const int P = d.n_pcrs();
  const int St = d.n_total_species();
  if (d.reads.rows() != P || d.reads.cols() != St) {
    std::ostringstream os;
    os << "reads is " << d.reads.rows() << "x" << d.reads.cols() << ", expected " << P << "x"
       << St << " (PCR replicates x species)";
    err(os.str());
  } else if (P > 0 && d.reads.minCoeff() < 0) {
    err("reads contain negative counts");
  }
  if (d.offsets.size() != P) err("offsets has " + std::to_string(d.offsets.size()) +
                                 " entries, expected " + std::to_string(P));
  else if (!all_finite(d.offsets)) err("offsets contain non-finite values");

  if (d.site_covariates.cols() > 0 && d.site_covariates.rows() != d.n_sites)
    err("site_covariates must have one row per site");
  if (!all_finite(d.site_covariates)) err("site_covariates contain non-finite values");
  if (d.sample_covariates.cols() > 0 && d.sample_covariates.rows() != J)
    err("sample_covariates must have one row per sample");
  if (!all_finite(d.sample_covariates)) err("sample_covariates contain non-finite values");

  if (d.coordinates.size() > 0) {
    if (d.coordinates.rows() != d.n_sites || d.coordinates.cols() != 2)
      err("coordinates must be n_sites x 2");
    else if (!all_finite(d.coordinates))
      err("coordinates contain non-finite values");
  }
  if (d.n_spikes > 0) {
    if (d.spike_log_amounts.rows() != J || d.spike_log_amounts.cols() != d.n_spikes)
      err("spike_log_amounts must be n_samples x n_spikes");
    else if (!all_finite(d.spike_log_amounts))
      err("spike_log_amounts contain non-finite values");
  }
  if (!d.negative_control.empty() && static_cast<int>(d.negative_control.size()) != J)
    err("negative_control must have one flag per sample");
  if (!rep.ok()) return rep;

  if (d.n_species == 1 && d.n_spikes == 0)
    rep.warnings.push_back("S=1 without spike-ins: pipeline effect u confounded with r_s");
  bool all_k1 = true;
  for (int k : d.pcrs_per_sample) all_k1 = all_k1 && k == 1;
  if (all_k1)
    rep.warnings.push_back("all K_im=1: PCR variance r_s confounded with sample noise sigma_s");
  bool all_m1 = true;
  for (int m : d.samples_per_site) all_m1 = all_m1 && m == 1;
  if (all_m1)
    rep.warnings.push_back("all M_i=1: sample noise sigma_s confounded with site noise");
  return rep;
}

SurveyLayout SurveyLayout::from(const OtuDataset& d) {
  SurveyLayout l;
  l.n_sites = d.n_sites;
  l.n_samples = d.n_samples();
  l.n_pcrs = d.n_pcrs();
  int j = 0, p = 0;
  for (int i = 0; i < d.n_sites; ++i) {
    l.site_first_sample.push_back(j);
    l.site_n_samples.push_back(d.samples_per_site[i]);
    for (int m = 0; m < d.samples_per_site[i]; ++m, ++j) {
      l.sample_site.push_back(i);
      l.sample_first_pcr.push_back(p);
      l.sample_n_pcr.push_back(d.pcrs_per_sample[j]);
      for (int k = 0; k < d.pcrs_per_sample[j]; ++k, ++p) l.pcr_sample.push_back(j);
    }
  }
  return l;
}

CoordinateRescale CoordinateRescale::fit(const Matrix& coords) {
  CoordinateRescale r;
  if (coords.rows() == 0) return r;
  r.origin = coords.colwise().minCoeff().transpose();
  const Eigen::Vector2d range = coords.colwise().maxCoeff().transpose() - r.origin;
  const double span = range.maxCoeff();
  r.scale = span > 0.0 ? 1.0 / span : 1.0;
  return r;
}

Matrix CoordinateRescale::apply(const Matrix& coords) const {
  Matrix out = coords;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    out.row(i) = (coords.row(i) - origin.transpose()) * scale;
  return out;
}

}  // namespace ednaplus
