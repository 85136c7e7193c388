#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ednaplus/data_model.hpp"
#include "ednaplus/matnorm.hpp"

namespace ednaplus {

using IntMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

// Centred parameterisation. Species index s runs over the S targets and then
// the S* spike-ins; per-sample arrays are n_samples x (S + S*), per-PCR
// arrays n_pcrs x (S + S*). Absent v_bar / eta entries hold NaN.
struct ModelState {
  Vector lambda;      // S + S*; for spike-ins the amplification effect
  Vector beta0_bar;   // S
  Matrix B;           // n_z x S
  Matrix L_bar;       // n x S
  GhState gh;
  double sigma_u_sq = 1.0;
  Vector u;           // n_pcrs
  Matrix v_bar;       // n_samples x (S + S*)
  IntMatrix delta;    // n_samples x (S + S*)
  IntMatrix gamma;    // n_samples x (S + S*)
  IntMatrix c;        // n_pcrs x (S + S*), values in {0, 1, 2}
  Matrix eta;         // n_pcrs x (S + S*)
  Vector r;           // S + S*
  Matrix beta_w;      // n_w x S
  Vector sigma_s_sq;  // S
  Vector mu_bar;      // S
  Vector nu_sq;       // S
  Vector phi1;        // S
  Matrix phi;         // n_w x S
  Vector zeta;        // S
  Vector p;           // S + S*
  Vector q;           // S
  double pi = 0.5;
  double mu0 = 10.0;
  double n0 = 10.0;
  double mu_tilde = 100.0;
  Matrix omega;       // n_samples x S

  // T = Q^{-1}.
  Matrix T() const;
};

// Returns a description of the first violated structural invariant, or an
// empty string when the state is consistent with the dataset.
std::string check_state_invariants(const ModelState& st, const OtuDataset& data);

struct ChainConfig {
  int n_iter = 3000;
  int n_burnin = 1500;
  int thin = 1;
  std::uint64_t seed = 1;
  int adapt_interval = 200;  // p-hat refresh interval B
  double target_accept = 0.44;
  int laplace_max_iter = 20;
  double indicator_floor = 0.05;  // epsilon
  // Error-free variant: theta = p = 1, q = zeta = 0; indicators fixed.
  bool error_free = false;
  // Draw groups to store; empty means the default set.
  std::vector<std::string> monitored;

  void validate() const;
};

std::vector<std::string> default_draw_groups();

// Stored draws of one parameter group.
struct DrawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  Matrix as_matrix() const;
  Vector column(const std::string& name) const;
};

struct Draws {
  std::vector<long> iterations;
  std::map<std::string, DrawTable> groups;

  std::size_t n_draws() const { return iterations.size(); }
};

// Expected number of stored draws for a configuration.
int expected_draw_count(const ChainConfig& cfg);

}  // namespace ednaplus
