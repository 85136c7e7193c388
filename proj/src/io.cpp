#include "ednaplus/io.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ednaplus/likelihood.hpp"
#include "ednaplus/sampler.hpp"

namespace ednaplus {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Splits on `sep` outside double quotes; "" inside quotes is a literal quote.
std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false, was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = was_quoted = true;
    } else if (ch == sep) {
      out.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur += ch;
    }
  }
  out.push_back(was_quoted ? cur : trim(cur));
  return out;
}

std::string where(const std::string& path, int line) { return path + ":" + std::to_string(line); }

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  return os;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

bool parse_bool(const std::string& s, bool& out) {
  if (s == "1" || s == "true" || s == "TRUE" || s == "yes") return out = true, true;
  if (s == "0" || s == "false" || s == "FALSE" || s == "no") return out = false, true;
  return false;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return static_cast<int>(c);
  return -1;
}

int CsvTable::require_column(const std::string& name) const {
  const int c = column(name);
  if (c < 0) throw IoError(path + ": missing column '" + name + "'");
  return c;
}

double CsvTable::number(std::size_t row, int col) const {
  double v;
  if (!parse_double(rows[row][col], v))
    throw IoError(where(path, line_numbers[row]) + ": column '" + header[col] + "' is not a number: '" +
                  rows[row][col] + "'");
  return v;
}

CsvTable read_csv(const std::string& path, const std::string& kind) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  CsvTable t;
  t.path = path;
  std::string line;
  int ln = 0;
  bool tagged = false;
  while (std::getline(is, line)) {
    ++ln;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (ln == 1 && line.rfind("#ednaplus ", 0) == 0) {
      std::istringstream tag(line.substr(10));
      std::string k, v;
      tag >> k >> v;
      if (!kind.empty() && k != kind)
        throw IoError(where(path, ln) + ": expected a '" + kind + "' file, found '" + k + "'");
      if (v != "v" + std::to_string(kFormatVersion))
        throw IoError(where(path, ln) + ": unsupported format version '" + v + "'");
      tagged = true;
      continue;
    }
    if (trim(line).empty() || line[0] == '#') continue;
    auto cells = split(line, ',');
    if (t.header.empty()) {
      t.header = cells;
      continue;
    }
    if (cells.size() != t.header.size())
      throw IoError(where(path, ln) + ": expected " + std::to_string(t.header.size()) + " fields, found " +
                    std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(ln);
  }
  if (!kind.empty() && !tagged) throw IoError(path + ": missing '#ednaplus " + kind + "' version tag");
  if (t.header.empty()) throw IoError(path + ": empty file");
  return t;
}

OtuDataset read_dataset(const InputPaths& paths) {
  const CsvTable r = read_csv(paths.reads);
  const int c_site = r.require_column("site_id"), c_sample = r.require_column("sample_id");
  const int c_pcr = r.require_column("pcr_id"), c_sp = r.require_column("species_id");
  const int c_reads = r.require_column("reads"), c_off = r.require_column("offset");

  // Spike-in species and their amounts.
  std::vector<std::string> spike_ids;
  std::map<std::pair<std::string, std::string>, double> spike_amount;
  if (!paths.spikes.empty()) {
    const CsvTable sp = read_csv(paths.spikes);
    const int a = sp.require_column("sample_id"), b = sp.require_column("species_id");
    const int c = sp.require_column("log_amount");
    for (std::size_t i = 0; i < sp.rows.size(); ++i) {
      const std::string& sid = sp.rows[i][b];
      if (std::find(spike_ids.begin(), spike_ids.end(), sid) == spike_ids.end()) spike_ids.push_back(sid);
      spike_amount[{sp.rows[i][a], sid}] = sp.number(i, c);
    }
  }
  const std::set<std::string> spike_set(spike_ids.begin(), spike_ids.end());

  std::vector<std::string> sites, targets;
  std::unordered_map<std::string, int> site_idx, target_idx;
  std::unordered_map<std::string, std::string> sample_site;
  std::map<std::string, std::vector<std::string>> site_samples;  // by site id
  std::map<std::string, std::vector<std::string>> sample_pcrs;
  struct Cell {
    std::int64_t reads;
    int line;
  };
  std::map<std::tuple<std::string, std::string, std::string>, Cell> cells;  // sample, pcr, species
  std::map<std::pair<std::string, std::string>, double> pcr_offset;

  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    const int ln = r.line_numbers[i];
    const std::string &site = row[c_site], &sample = row[c_sample], &pcr = row[c_pcr], &sp = row[c_sp];
    if (!site_idx.count(site)) {
      site_idx[site] = static_cast<int>(sites.size());
      sites.push_back(site);
    }
    auto it = sample_site.find(sample);
    if (it == sample_site.end()) {
      sample_site[sample] = site;
      site_samples[site].push_back(sample);
    } else if (it->second != site) {
      throw ValidationError(where(r.path, ln) + ": sample '" + sample + "' appears under sites '" + it->second +
                            "' and '" + site + "'");
    }
    auto& pcrs = sample_pcrs[sample];
    if (std::find(pcrs.begin(), pcrs.end(), pcr) == pcrs.end()) pcrs.push_back(pcr);
    if (!spike_set.count(sp) && !target_idx.count(sp)) {
      target_idx[sp] = static_cast<int>(targets.size());
      targets.push_back(sp);
    }
    const double y = r.number(i, c_reads);
    if (y < 0 || y != std::floor(y))
      throw ValidationError(where(r.path, ln) + ": reads must be a non-negative integer");
    const double off = r.number(i, c_off);
    auto [oit, fresh] = pcr_offset.try_emplace({sample, pcr}, off);
    if (!fresh && oit->second != off)
      throw ValidationError(where(r.path, ln) + ": offset differs between rows of PCR '" + pcr + "' in sample '" +
                            sample + "'");
    if (!cells.try_emplace({sample, pcr, sp}, Cell{static_cast<std::int64_t>(y), ln}).second)
      throw ValidationError(where(r.path, ln) + ": duplicate row for sample '" + sample + "', PCR '" + pcr +
                            "', species '" + sp + "'");
  }
  if (targets.empty()) throw ValidationError(r.path + ": no target species");

  OtuDataset d;
  d.n_sites = static_cast<int>(sites.size());
  d.n_species = static_cast<int>(targets.size());
  d.n_spikes = static_cast<int>(spike_ids.size());
  d.site_names = sites;
  d.species_names = targets;
  d.species_names.insert(d.species_names.end(), spike_ids.begin(), spike_ids.end());
  std::vector<std::pair<std::string, std::string>> pcr_keys;
  for (const auto& site : sites) {
    const auto& samples = site_samples[site];
    d.samples_per_site.push_back(static_cast<int>(samples.size()));
    for (const auto& s : samples) {
      d.sample_names.push_back(s);
      const auto& pcrs = sample_pcrs[s];
      d.pcrs_per_sample.push_back(static_cast<int>(pcrs.size()));
      for (const auto& p : pcrs) pcr_keys.emplace_back(s, p);
    }
  }
  const int J = static_cast<int>(d.sample_names.size()), P = static_cast<int>(pcr_keys.size());
  const int St = d.n_total_species();
  d.reads = CountMatrix::Zero(P, St);
  d.offsets = Vector(P);
  for (int p = 0; p < P; ++p) {
    d.offsets[p] = pcr_offset.at(pcr_keys[p]);
    for (int s = 0; s < St; ++s) {
      auto it = cells.find({pcr_keys[p].first, pcr_keys[p].second, d.species_names[s]});
      if (it == cells.end())
        throw ValidationError(r.path + ": no reads row for sample '" + pcr_keys[p].first + "', PCR '" +
                              pcr_keys[p].second + "', species '" + d.species_names[s] + "'");
      d.reads(p, s) = it->second.reads;
    }
  }
  d.spike_log_amounts = Matrix(J, d.n_spikes);
  for (int j = 0; j < J; ++j)
    for (int s = 0; s < d.n_spikes; ++s) {
      auto it = spike_amount.find({d.sample_names[j], spike_ids[s]});
      if (it == spike_amount.end())
        throw ValidationError(paths.spikes + ": no log_amount for spike-in '" + spike_ids[s] + "' in sample '" +
                              d.sample_names[j] + "'");
      d.spike_log_amounts(j, s) = it->second;
    }

  d.negative_control.assign(J, 0);
  d.sample_covariates = Matrix(J, 0);
  if (!paths.samples.empty()) {
    const CsvTable t = read_csv(paths.samples);
    const int cid = t.require_column("sample_id"), cneg = t.require_column("is_negative_control");
    std::vector<int> cov_cols;
    for (int c = 0; c < static_cast<int>(t.header.size()); ++c)
      if (c != cid && c != cneg) {
        cov_cols.push_back(c);
        d.sample_covariate_names.push_back(t.header[c]);
      }
    d.sample_covariates = Matrix(J, static_cast<int>(cov_cols.size()));
    std::vector<char> seen(J, 0);
    std::unordered_map<std::string, int> sidx;
    for (int j = 0; j < J; ++j) sidx[d.sample_names[j]] = j;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      auto it = sidx.find(t.rows[i][cid]);
      if (it == sidx.end()) continue;  // sample without reads
      const int j = it->second;
      bool neg;
      if (!parse_bool(t.rows[i][cneg], neg))
        throw IoError(where(t.path, t.line_numbers[i]) + ": is_negative_control must be 0/1");
      d.negative_control[j] = neg;
      for (std::size_t c = 0; c < cov_cols.size(); ++c) d.sample_covariates(j, c) = t.number(i, cov_cols[c]);
      seen[j] = 1;
    }
    for (int j = 0; j < J; ++j)
      if (!seen[j]) throw ValidationError(t.path + ": sample '" + d.sample_names[j] + "' not listed");
  }

  d.site_covariates = Matrix(d.n_sites, 0);
  if (!paths.sites.empty()) {
    const CsvTable t = read_csv(paths.sites);
    const int cid = t.require_column("site_id");
    const int cx = t.column("x"), cy = t.column("y");
    if ((cx < 0) != (cy < 0)) throw IoError(t.path + ": coordinates need both 'x' and 'y' columns");
    std::vector<int> cov_cols;
    for (int c = 0; c < static_cast<int>(t.header.size()); ++c)
      if (c != cid && c != cx && c != cy) {
        cov_cols.push_back(c);
        d.site_covariate_names.push_back(t.header[c]);
      }
    d.site_covariates = Matrix(d.n_sites, static_cast<int>(cov_cols.size()));
    if (cx >= 0) d.coordinates = Matrix(d.n_sites, 2);
    std::vector<char> seen(d.n_sites, 0);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      auto it = site_idx.find(t.rows[i][cid]);
      if (it == site_idx.end()) continue;
      const int s = it->second;
      if (cx >= 0) {
        d.coordinates(s, 0) = t.number(i, cx);
        d.coordinates(s, 1) = t.number(i, cy);
      }
      for (std::size_t c = 0; c < cov_cols.size(); ++c) d.site_covariates(s, c) = t.number(i, cov_cols[c]);
      seen[s] = 1;
    }
    for (int s = 0; s < d.n_sites; ++s)
      if (!seen[s]) throw ValidationError(t.path + ": site '" + d.site_names[s] + "' not listed");
  }
  d.fill_default_names();
  return d;
}

void write_dataset(const OtuDataset& raw, const InputPaths& paths) {
  OtuDataset d = raw;
  d.fill_default_names();
  const SurveyLayout lay = SurveyLayout::from(d);
  {
    auto os = open_out(paths.reads);
    os << "#ednaplus reads v" << kFormatVersion << "\n";
    os << "site_id,sample_id,pcr_id,species_id,reads,offset\n";
    for (int p = 0; p < lay.n_pcrs; ++p) {
      const int j = lay.pcr_sample[p];
      const int k = p - lay.sample_first_pcr[j];
      for (int s = 0; s < d.n_total_species(); ++s)
        os << csv_field(d.site_names[lay.sample_site[j]]) << ',' << csv_field(d.sample_names[j]) << ",pcr" << (k + 1)
           << ',' << csv_field(d.species_names[s]) << ',' << d.reads(p, s) << ',' << format_double(d.offsets[p]) << '\n';
    }
  }
  if (!paths.samples.empty()) {
    auto os = open_out(paths.samples);
    os << "#ednaplus samples v" << kFormatVersion << "\n";
    os << "sample_id,is_negative_control";
    for (const auto& n : d.sample_covariate_names) os << ',' << csv_field(n);
    os << '\n';
    for (int j = 0; j < lay.n_samples; ++j) {
      os << csv_field(d.sample_names[j]) << ',' << (d.negative_control.empty() ? 0 : int(d.negative_control[j]));
      for (int c = 0; c < d.n_sample_covariates(); ++c) os << ',' << format_double(d.sample_covariates(j, c));
      os << '\n';
    }
  }
  if (!paths.sites.empty()) {
    auto os = open_out(paths.sites);
    const bool xy = d.coordinates.rows() == d.n_sites && d.coordinates.cols() == 2;
    os << "#ednaplus sites v" << kFormatVersion << "\n";
    os << "site_id" << (xy ? ",x,y" : "");
    for (const auto& n : d.site_covariate_names) os << ',' << csv_field(n);
    os << '\n';
    for (int i = 0; i < d.n_sites; ++i) {
      os << csv_field(d.site_names[i]);
      if (xy) os << ',' << format_double(d.coordinates(i, 0)) << ',' << format_double(d.coordinates(i, 1));
      for (int c = 0; c < d.n_site_covariates(); ++c) os << ',' << format_double(d.site_covariates(i, c));
      os << '\n';
    }
  }
  if (!paths.spikes.empty() && d.n_spikes > 0) {
    auto os = open_out(paths.spikes);
    os << "#ednaplus spikes v" << kFormatVersion << "\n";
    os << "sample_id,species_id,log_amount\n";
    for (int j = 0; j < lay.n_samples; ++j)
      for (int s = 0; s < d.n_spikes; ++s)
        os << csv_field(d.sample_names[j]) << ',' << csv_field(d.species_names[d.n_species + s]) << ','
           << format_double(d.spike_log_amounts(j, s)) << '\n';
  }
}

KeyValueConfig read_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  KeyValueConfig cfg;
  cfg.path = path;
  std::string line;
  int ln = 0;
  while (std::getline(is, line)) {
    ++ln;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError(where(path, ln) + ": expected 'key = value'");
    cfg.entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    cfg.line_numbers.push_back(ln);
  }
  return cfg;
}

namespace {

struct FieldTable {
  std::map<std::string, double*> reals;
  std::map<std::string, int*> ints;
  std::map<std::string, bool*> bools;
  std::map<std::string, std::uint64_t*> u64s;
};

void apply_fields(const KeyValueConfig& cfg, const FieldTable& f,
                  const std::map<std::string, std::vector<std::string>*>& lists = {}) {
  for (std::size_t e = 0; e < cfg.entries.size(); ++e) {
    const auto& [key, value] = cfg.entries[e];
    const std::string at = where(cfg.path, cfg.line_numbers[e]);
    if (auto it = f.reals.find(key); it != f.reals.end()) {
      double v;
      if (value == "inf" || value == "infinity")
        v = std::numeric_limits<double>::infinity();
      else if (!parse_double(value, v))
        throw IoError(at + ": '" + key + "' expects a number");
      *it->second = v;
    } else if (auto it = f.ints.find(key); it != f.ints.end()) {
      double v;
      if (!parse_double(value, v) || v != std::floor(v)) throw IoError(at + ": '" + key + "' expects an integer");
      *it->second = static_cast<int>(v);
    } else if (auto it = f.u64s.find(key); it != f.u64s.end()) {
      try {
        std::size_t used = 0;
        *it->second = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw IoError(at + ": '" + key + "' expects a non-negative integer");
      }
    } else if (auto it = f.bools.find(key); it != f.bools.end()) {
      if (!parse_bool(value, *it->second)) throw IoError(at + ": '" + key + "' expects true/false");
    } else if (auto it = lists.find(key); it != lists.end()) {
      it->second->clear();
      for (auto& item : split(value, ','))
        if (!item.empty()) it->second->push_back(item);
    } else {
      throw ValidationError(at + ": unknown key '" + key + "'");
    }
  }
}

FieldTable fit_fields(HyperParams& h, ChainConfig& c) {
  FieldTable f;
  f.reals = {{"sigma_beta_sq", &h.sigma_beta_sq}, {"l_Sigma", &h.l_Sigma},
             {"a_zeta", &h.a_zeta}, {"b_zeta", &h.b_zeta},
             {"sigma_mu", &h.sigma_mu}, {"nu_fixed", &h.nu_fixed},
             {"a_p", &h.a_p}, {"b_p", &h.b_p}, {"a_q", &h.a_q}, {"b_q", &h.b_q},
             {"mu_r", &h.mu_r}, {"sigma_r", &h.sigma_r},
             {"a_sigma", &h.a_sigma}, {"b_sigma", &h.b_sigma},
             {"a_u", &h.a_u}, {"b_u", &h.b_u}, {"a_pi", &h.a_pi}, {"b_pi", &h.b_pi},
             {"sigma_phi_sq", &h.sigma_phi_sq}, {"lambda_GH", &h.lambda_GH},
             {"rate_mu_tilde", &h.rate_mu_tilde}, {"rate_mu0", &h.rate_mu0}, {"rate_n0", &h.rate_n0},
             {"sigma_lambda_sq", &h.sigma_lambda_sq}, {"sigma_spike_sq", &h.sigma_spike_sq},
             {"target_accept", &c.target_accept}, {"indicator_floor", &c.indicator_floor}};
  f.ints = {{"n_iter", &c.n_iter}, {"n_burnin", &c.n_burnin}, {"thin", &c.thin},
            {"adapt_interval", &c.adapt_interval}, {"laplace_max_iter", &c.laplace_max_iter}};
  f.u64s = {{"seed", &c.seed}};
  f.bools = {{"error_free", &c.error_free}};
  return f;
}

}  // namespace

void apply_fit_config(const KeyValueConfig& cfg, HyperParams& hyper, ChainConfig& chain) {
  apply_fields(cfg, fit_fields(hyper, chain), {{"monitored", &chain.monitored}});
}

void apply_sim_config(const KeyValueConfig& cfg, SimSettings& s) {
  FieldTable f;
  f.ints = {{"n_sites", &s.n_sites}, {"samples_per_site", &s.samples_per_site},
            {"pcrs_per_sample", &s.pcrs_per_sample}, {"n_species", &s.n_species},
            {"n_spikes", &s.n_spikes}, {"n_site_covariates", &s.n_site_covariates},
            {"n_sample_covariates", &s.n_sample_covariates},
            {"n_negative_controls", &s.n_negative_controls}};
  f.reals = {{"tau", &s.tau}, {"sigma", &s.sigma}, {"sigma_u", &s.sigma_u}, {"beta0", &s.beta0},
             {"beta_sd", &s.beta_sd}, {"beta_w_sd", &s.beta_w_sd},
             {"lambda_mean", &s.lambda_mean}, {"lambda_sd", &s.lambda_sd},
             {"spike_lambda_mean", &s.spike_lambda_mean}, {"spike_lambda_sd", &s.spike_lambda_sd},
             {"spike_log_amount", &s.spike_log_amount}, {"r", &s.r},
             {"phi0_mean", &s.phi0_mean}, {"phi0_var", &s.phi0_var}, {"phi1", &s.phi1},
             {"phi_w_sd", &s.phi_w_sd}, {"zeta", &s.zeta}, {"mu_contam", &s.mu_contam}, {"nu", &s.nu},
             {"p", &s.p}, {"q", &s.q}, {"mu0", &s.mu0}, {"n0", &s.n0}, {"pi", &s.pi},
             {"mu_tilde", &s.mu_tilde}, {"l_Sigma", &s.l_Sigma}, {"theta_override", &s.theta_override}};
  f.bools = {{"high_low_split", &s.high_low_split}, {"spatial", &s.spatial}, {"error_free", &s.error_free}};
  apply_fields(cfg, f);
}

std::string canonical_fit_config(const HyperParams& hyper, const ChainConfig& chain) {
  HyperParams h = hyper;
  ChainConfig c = chain;
  const FieldTable f = fit_fields(h, c);
  std::ostringstream os;
  for (const auto& [k, v] : f.reals) os << k << '=' << format_double(*v) << '\n';
  for (const auto& [k, v] : f.ints) os << k << '=' << *v << '\n';
  for (const auto& [k, v] : f.u64s) os << k << '=' << *v << '\n';
  for (const auto& [k, v] : f.bools) os << k << '=' << (*v ? "true" : "false") << '\n';
  os << "monitored=";
  for (std::size_t i = 0; i < c.monitored.size(); ++i) os << (i ? "," : "") << c.monitored[i];
  os << '\n';
  return os.str();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return fnv1a64(ss.str());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_draws(const std::string& dir, const std::vector<Draws>& chains) {
  if (chains.empty()) return;
  fs::create_directories(dir);
  for (const auto& [g, tab0] : chains[0].groups) {
    auto os = open_out((fs::path(dir) / ("draws_" + g + ".csv")).string());
    os << "#ednaplus draws v" << kFormatVersion << "\n";
    os << "chain,iteration";
    for (const auto& c : tab0.columns) os << ',' << csv_field(c);
    os << '\n';
    for (std::size_t ch = 0; ch < chains.size(); ++ch) {
      const DrawTable& tab = chains[ch].groups.at(g);
      for (std::size_t t = 0; t < tab.rows.size(); ++t) {
        os << (ch + 1) << ',' << chains[ch].iterations[t];
        for (double v : tab.rows[t]) os << ',' << format_double(v);
        os << '\n';
      }
    }
  }
}

std::vector<Draws> read_draws(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("draws_", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError(dir + ": no draws_*.csv files");
  std::vector<Draws> chains;
  bool first = true;
  for (const auto& f : files) {
    const CsvTable t = read_csv(f.string(), "draws");
    if (t.header.size() < 2 || t.header[0] != "chain" || t.header[1] != "iteration")
      throw IoError(t.path + ": header must start with chain,iteration");
    const std::string g = f.stem().string().substr(6);
    std::vector<std::string> cols(t.header.begin() + 2, t.header.end());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const int ch = static_cast<int>(t.number(i, 0));
      if (ch < 1) throw IoError(where(t.path, t.line_numbers[i]) + ": chain index must be >= 1");
      if (static_cast<int>(chains.size()) < ch) chains.resize(ch);
      Draws& d = chains[ch - 1];
      DrawTable& tab = d.groups[g];
      tab.columns = cols;
      std::vector<double> row(cols.size());
      for (std::size_t c = 0; c < cols.size(); ++c) row[c] = t.number(i, static_cast<int>(c + 2));
      tab.rows.push_back(std::move(row));
      if (first) d.iterations.push_back(static_cast<long>(t.number(i, 1)));
    }
    first = false;
  }
  for (const auto& d : chains)
    for (const auto& [g, tab] : d.groups)
      if (tab.rows.size() != d.iterations.size())
        throw IoError(dir + ": group '" + g + "' has a different number of draws");
  return chains;
}

void write_summary(const std::string& path, const SummaryReport& rep) {
  auto os = open_out(path);
  os << "#ednaplus summary v" << kFormatVersion << "\n";
  os << "parameter,mean,sd,q2.5,median,q97.5,ess,rhat\n";
  for (const auto& r : rep.rows)
    os << csv_field(r.name) << ',' << format_double(r.mean) << ',' << format_double(r.sd) << ','
       << format_double(r.lower) << ',' << format_double(r.median) << ',' << format_double(r.upper) << ','
       << format_double(r.ess) << ',' << format_double(r.rhat) << '\n';
}

void write_matrix_csv(const std::string& path, const std::string& kind, const Matrix& m,
                      const std::vector<std::string>& names) {
  auto os = open_out(path);
  os << "#ednaplus " << kind << " v" << kFormatVersion << "\n";
  os << "species";
  for (const auto& n : names) os << ',' << csv_field(n);
  os << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << csv_field(names[i]);
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << ',' << format_double(m(i, j));
    os << '\n';
  }
}

void write_surface(const std::string& dir, const BiomassSurface& s, const Vector& index) {
  fs::create_directories(dir);
  {
    auto os = open_out((fs::path(dir) / "surface.csv").string());
    os << "#ednaplus surface v" << kFormatVersion << "\n";
    os << "point_id,x,y,species_id,mean_log_biomass\n";
    for (Eigen::Index g = 0; g < s.grid.rows(); ++g)
      for (std::size_t sp = 0; sp < s.species.size(); ++sp)
        os << (g + 1) << ',' << format_double(s.grid(g, 0)) << ',' << format_double(s.grid(g, 1)) << ','
           << csv_field(s.species[sp]) << ',' << format_double(s.mean_log_biomass(g, sp)) << '\n';
  }
  auto os = open_out((fs::path(dir) / "index.csv").string());
  os << "#ednaplus index v" << kFormatVersion << "\n";
  os << "point_id,x,y,index\n";
  for (Eigen::Index g = 0; g < s.grid.rows(); ++g)
    os << (g + 1) << ',' << format_double(s.grid(g, 0)) << ',' << format_double(s.grid(g, 1)) << ','
       << format_double(index[g]) << '\n';
}

void write_truth(const std::string& path, const OtuDataset& raw, const ModelState& truth) {
  OtuDataset d = raw;
  d.fill_default_names();
  const ModelContext ctx(d, HyperParams{}, false);
  std::vector<std::string> groups = default_draw_groups();
  for (const char* g : {"beta_w", "mu_bar", "mu0", "n0"})
    if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
  Draws dr;
  record_draws(dr, ctx, truth, groups, 0);
  auto os = open_out(path);
  os << "#ednaplus truth v" << kFormatVersion << "\n";
  os << "parameter,value\n";
  for (const auto& g : groups) {
    const DrawTable& tab = dr.groups.at(g);
    for (std::size_t c = 0; c < tab.columns.size(); ++c)
      os << csv_field(tab.columns[c]) << ',' << format_double(tab.rows[0][c]) << '\n';
  }
}

std::map<std::string, double> read_truth(const std::string& path) {
  const CsvTable t = read_csv(path, "truth");
  const int cp = t.require_column("parameter"), cv = t.require_column("value");
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) out[t.rows[i][cp]] = t.number(i, cv);
  return out;
}

void write_manifest(const std::string& path, const RunManifest& m) {
  auto os = open_out(path);
  os << "#ednaplus manifest v" << kFormatVersion << "\n";
  os << "software_version=" << kSoftwareVersion << "\n";
  os << "command=" << m.command << "\n";
  os << "seed=" << m.seed << "\n";
  os << "chains=" << m.chains << "\n";
  os << "config_hash=" << m.config_hash << "\n";
  for (const auto& [p, h] : m.inputs) os << "input=" << p << " fnv1a64:" << h << "\n";
  for (const auto& c : m.clamps) os << "clamp=" << c << "\n";
  for (const auto& [k, v] : m.extra) os << k << '=' << v << "\n";
}

std::map<std::string, std::string> read_manifest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  std::string line;
  std::getline(is, line);
  if (line != "#ednaplus manifest v" + std::to_string(kFormatVersion))
    throw IoError(path + ": unsupported manifest version");
  std::map<std::string, std::string> out;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
    if (out.count(k))
      out[k] += ";" + v;
    else
      out[k] = v;
  }
  return out;
}

}  // namespace ednaplus
