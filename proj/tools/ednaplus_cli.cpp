#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "ednaplus/data_model.hpp"
#include "ednaplus/design.hpp"
#include "ednaplus/io.hpp"
#include "ednaplus/sampler.hpp"
#include "ednaplus/simulator.hpp"
#include "ednaplus/summaries.hpp"

namespace fs = std::filesystem;
using namespace ednaplus;

namespace {

struct FitArgs {
  InputPaths inputs;
  std::string config;
  std::string out = "fit_out";
  int chains = 1;
  long long seed = -1;
};

struct SimArgs {
  std::string config;
  std::string out = "sim_out";
  std::uint64_t seed = 1;
};

struct DesignArgs {
  std::vector<int> n{10}, M{1, 2, 3}, K{1, 2, 3}, S_star{0, 1, 2};
  int S = 1;
  double sigma_sq = 1, sigma_y_sq = 1, sigma_u_sq = 1, tau_sq = 1;
  bool oracle = false;
  int draws = 200;
  std::uint64_t seed = 1;
  std::string out;
};

struct SummarizeArgs {
  std::string draws;
  std::string grid;
  std::string out;
};

void write_model_sites(const std::string& path, const OtuDataset& d) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os << "#ednaplus sites v" << kFormatVersion << "\n";
  const bool xy = d.coordinates.rows() == d.n_sites && d.coordinates.cols() == 2;
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

int cmd_fit(const FitArgs& a) {
  HyperParams hyper;
  ChainConfig chain;
  if (!a.config.empty()) apply_fit_config(read_config(a.config), hyper, chain);
  if (a.seed >= 0) chain.seed = static_cast<std::uint64_t>(a.seed);
  if (a.chains < 1) throw ValidationError("--chains must be >= 1");
  hyper.validate();
  chain.validate();

  const OtuDataset data = read_dataset(a.inputs);
  const ValidationReport rep = validate_dataset(data);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  if (!rep.ok()) {
    std::string msg;
    for (const auto& e : rep.errors) msg += (msg.empty() ? "" : "; ") + e;
    throw ValidationError(msg);
  }

  std::vector<Draws> draws(a.chains);
  std::vector<std::exception_ptr> errors(a.chains);
  std::vector<std::thread> pool;
  for (int c = 0; c < a.chains; ++c)
    pool.emplace_back([&, c] {
      try {
        ChainConfig cc = chain;
        cc.seed = chain.seed + static_cast<std::uint64_t>(c);
        draws[c] = run_chain(data, hyper, cc);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  fs::create_directories(a.out);
  write_draws(a.out, draws);
  if (static_cast<int>(draws[0].n_draws()) >= kMinSummaryDraws) {
    const SummaryReport report = summarize_draws(draws);
    write_summary((fs::path(a.out) / "summary.csv").string(), report);
  } else {
    std::cerr << "warning: fewer than " << kMinSummaryDraws << " draws; summary skipped\n";
  }
  if (draws[0].groups.count("T")) {
    DrawTable all = draws[0].groups.at("T");
    for (int c = 1; c < a.chains; ++c)
      for (const auto& r : draws[c].groups.at("T").rows) all.rows.push_back(r);
    std::vector<std::string> names(data.species_names.begin(), data.species_names.begin() + data.n_species);
    write_matrix_csv((fs::path(a.out) / "correlation.csv").string(), "correlation",
                     species_correlation(all, data.n_species), names);
  }
  write_model_sites((fs::path(a.out) / "model_sites.csv").string(), data);

  RunManifest m;
  m.command = "fit";
  m.seed = chain.seed;
  m.chains = a.chains;
  m.config_hash = hex64(fnv1a64(canonical_fit_config(hyper, chain)));
  for (const std::string* p : {&a.inputs.reads, &a.inputs.samples, &a.inputs.sites, &a.inputs.spikes})
    if (!p->empty()) m.inputs.emplace_back(*p, hex64(hash_file(*p)));
  for (int j = 0; j < data.n_samples(); ++j)
    if (data.negative_control[j]) m.clamps.push_back(data.sample_names[j] + ":delta=0,gamma=0");
  m.extra = {{"l_Sigma", format_double(hyper.l_Sigma)},
             {"n_species", std::to_string(data.n_species)},
             {"n_iter", std::to_string(chain.n_iter)},
             {"n_burnin", std::to_string(chain.n_burnin)},
             {"thin", std::to_string(chain.thin)},
             {"error_free", chain.error_free ? "true" : "false"},
             {"clamp_events", std::to_string(clamp_events())}};
  write_manifest((fs::path(a.out) / "manifest.txt").string(), m);
  std::cout << "wrote " << draws[0].n_draws() * a.chains << " draws to " << a.out << "\n";
  return 0;
}

int cmd_simulate(const SimArgs& a) {
  SimSettings s;
  if (!a.config.empty()) apply_sim_config(read_config(a.config), s);
  s.validate();
  const SimulationResult sim = simulate_dataset(s, a.seed);
  fs::create_directories(a.out);
  const fs::path o(a.out);
  InputPaths p{(o / "reads.csv").string(), (o / "samples.csv").string(), (o / "sites.csv").string(),
               s.n_spikes > 0 ? (o / "spikes.csv").string() : ""};
  write_dataset(sim.data, p);
  write_truth((o / "truth.csv").string(), sim.data, sim.truth);
  RunManifest m;
  m.command = "simulate";
  m.seed = a.seed;
  if (!a.config.empty()) m.inputs.emplace_back(a.config, hex64(hash_file(a.config)));
  write_manifest((o / "manifest.txt").string(), m);
  std::cout << "wrote simulated survey to " << a.out << "\n";
  return 0;
}

int cmd_design(const DesignArgs& a) {
  std::vector<int> ns = a.n, Ms = a.M, Ks = a.K, Ss = a.S_star;
  for (auto* v : {&ns, &Ms, &Ks, &Ss}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  std::ostringstream os;
  os << "#ednaplus design v" << kFormatVersion << "\n";
  os << "n,M,K,S,S_star,var_biomass_diff,var_beta";
  if (a.oracle) os << ",oracle_biomass_diff,oracle_beta";
  os << "\n";
  OracleOptions opt;
  opt.n_covariate_draws = a.draws;
  opt.seed = a.seed;
  for (int n : ns)
    for (int M : Ms)
      for (int K : Ks)
        for (int S_star : Ss) {
          DesignSpec d;
          d.n = n;
          d.M = M;
          d.K = K;
          d.S = a.S;
          d.S_star = S_star;
          d.sigma_sq = a.sigma_sq;
          d.sigma_y_sq = a.sigma_y_sq;
          d.sigma_u_sq = a.sigma_u_sq;
          d.tau_sq = a.tau_sq;
          os << n << ',' << M << ',' << K << ',' << a.S << ',' << S_star << ','
             << format_double(var_biomass_diff(d)) << ','
             << (n >= 2 ? format_double(var_beta(d)) : std::string("nan"));
          if (a.oracle) {
            if (oracle_dimension(d, OracleMode::Beta) > opt.max_dimension)
              throw ValidationError("design oracle: dimension cap exceeded for n=" + std::to_string(n) +
                                    ", M=" + std::to_string(M) + ", K=" + std::to_string(K));
            os << ',' << format_double(gaussian_design_oracle(d, OracleMode::Diff, opt)) << ','
               << format_double(gaussian_design_oracle(d, OracleMode::Beta, opt));
          }
          os << "\n";
        }
  if (a.out.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream f(a.out, std::ios::binary);
    if (!f) throw IoError("cannot write " + a.out);
    f << os.str();
  }
  return 0;
}

int cmd_summarize(const SummarizeArgs& a) {
  const std::string out = a.out.empty() ? a.draws : a.out;
  const std::vector<Draws> chains = read_draws(a.draws);
  fs::create_directories(out);
  const SummaryReport rep = summarize_draws(chains);
  write_summary((fs::path(out) / "summary.csv").string(), rep);
  if (a.grid.empty()) return 0;

  const auto manifest = read_manifest((fs::path(a.draws) / "manifest.txt").string());
  const CsvTable sites = read_csv((fs::path(a.draws) / "model_sites.csv").string(), "sites");
  if (sites.column("x") < 0) throw ValidationError("grid prediction needs site coordinates");
  OtuDataset d;
  d.n_sites = static_cast<int>(sites.rows.size());
  d.n_species = std::stoi(manifest.at("n_species"));
  d.samples_per_site.assign(d.n_sites, 0);
  d.coordinates = Matrix(d.n_sites, 2);
  std::vector<int> cov_cols;
  for (int c = 0; c < static_cast<int>(sites.header.size()); ++c)
    if (sites.header[c] != "site_id" && sites.header[c] != "x" && sites.header[c] != "y") {
      cov_cols.push_back(c);
      d.site_covariate_names.push_back(sites.header[c]);
    }
  d.site_covariates = Matrix(d.n_sites, static_cast<int>(cov_cols.size()));
  for (int i = 0; i < d.n_sites; ++i) {
    d.site_names.push_back(sites.rows[i][0]);
    d.coordinates(i, 0) = sites.number(i, sites.column("x"));
    d.coordinates(i, 1) = sites.number(i, sites.column("y"));
    for (std::size_t c = 0; c < cov_cols.size(); ++c) d.site_covariates(i, c) = sites.number(i, cov_cols[c]);
  }
  const DrawTable& b0 = chains[0].groups.at("beta0_bar");
  for (const auto& col : b0.columns) d.species_names.push_back(col.substr(10, col.size() - 11));

  const CsvTable grid = read_csv(a.grid);
  const int gx = grid.require_column("x"), gy = grid.require_column("y");
  Matrix gc(grid.rows.size(), 2), gz(grid.rows.size(), d.n_site_covariates());
  for (std::size_t g = 0; g < grid.rows.size(); ++g) {
    gc(g, 0) = grid.number(g, gx);
    gc(g, 1) = grid.number(g, gy);
    for (int c = 0; c < d.n_site_covariates(); ++c) {
      const int col = grid.column(d.site_covariate_names[c]);
      if (col < 0)
        throw ValidationError(grid.path + ": grid covariate '" + d.site_covariate_names[c] + "' is required");
      gz(g, c) = grid.number(g, col);
    }
  }
  HyperParams h;
  h.l_Sigma = std::stod(manifest.at("l_Sigma"));
  Draws merged = chains[0];
  for (std::size_t c = 1; c < chains.size(); ++c)
    for (auto& [g, tab] : merged.groups)
      for (const auto& r : chains[c].groups.at(g).rows) tab.rows.push_back(r);
  const BiomassSurface surf = predict_biomass_grid(merged, d, h, gc, gz);
  if (surf.n_extrapolated > 0)
    std::cerr << "warning: " << surf.n_extrapolated << " grid points lie outside the surveyed area\n";
  write_surface(out, surf, biodiversity_index(surf));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical model of DNA metabarcoding read counts"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Run MCMC on an observed survey");
  f->add_option("--reads", fit.inputs.reads, "Long-format reads table")->required();
  f->add_option("--samples", fit.inputs.samples, "Sample sidecar (negative controls, covariates)");
  f->add_option("--sites", fit.inputs.sites, "Site sidecar (coordinates, covariates)");
  f->add_option("--spikes", fit.inputs.spikes, "Spike-in log amounts");
  f->add_option("--config", fit.config, "key = value settings file");
  f->add_option("--out", fit.out, "Output directory");
  f->add_option("--chains", fit.chains, "Number of chains run concurrently");
  f->add_option("--seed", fit.seed, "Overrides the configured seed");

  SimArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate a survey from the generative model");
  s->add_option("--config", sim.config, "Simulation settings file");
  s->add_option("--seed", sim.seed, "Random seed");
  s->add_option("--out", sim.out, "Output directory");

  DesignArgs des;
  auto* d = app.add_subcommand("design", "Tabulate closed-form design variances");
  d->add_option("--n", des.n, "Number of sites")->delimiter(',');
  d->add_option("--M", des.M, "Samples per site")->delimiter(',');
  d->add_option("--K", des.K, "PCR replicates per sample")->delimiter(',');
  d->add_option("--S", des.S, "Target species");
  d->add_option("--S-star", des.S_star, "Spike-ins")->delimiter(',');
  d->add_option("--sigma-sq", des.sigma_sq, "Sample noise variance");
  d->add_option("--sigma-y-sq", des.sigma_y_sq, "PCR noise variance");
  d->add_option("--sigma-u-sq", des.sigma_u_sq, "Pipeline effect variance");
  d->add_option("--tau-sq", des.tau_sq, "Between-site variance");
  d->add_flag("--oracle", des.oracle, "Add brute-force Gaussian columns");
  d->add_option("--covariate-draws", des.draws, "Covariate draws for the oracle");
  d->add_option("--seed", des.seed, "Oracle seed");
  d->add_option("--out", des.out, "Output file (default stdout)");

  SummarizeArgs sum;
  auto* m = app.add_subcommand("summarize", "Summarise stored draws");
  m->add_option("--draws", sum.draws, "Directory written by fit")->required();
  m->add_option("--grid", sum.grid, "Prediction grid: x,y plus site covariates");
  m->add_option("--out", sum.out, "Output directory (default: the draws directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*f) return cmd_fit(fit);
    if (*s) return cmd_simulate(sim);
    if (*d) return cmd_design(des);
    if (*m) return cmd_summarize(sum);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
