#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ednaplus/data_model.hpp"
#include "ednaplus/model_state.hpp"
#include "ednaplus/simulator.hpp"
#include "ednaplus/summaries.hpp"

namespace ednaplus {

inline constexpr const char* kSoftwareVersion = "0.1.0";
inline constexpr int kFormatVersion = 1;

// Malformed or unreadable files (exit code 2).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs that parse but are inconsistent (exit code 1).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Minimal comma-separated table: header plus string cells, with the line
// number of each row kept for error messages.
struct CsvTable {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;

  int column(const std::string& name) const;           // -1 when absent
  int require_column(const std::string& name) const;   // throws IoError
  double number(std::size_t row, int col) const;       // throws IoError
};

// Reads a table. Lines starting with '#' are comments, except that a first
// line "#ednaplus <kind> v<N>" is a version tag: when `kind` is non-empty the
// tag must be present and match, and N must equal kFormatVersion.
CsvTable read_csv(const std::string& path, const std::string& kind = "");

struct InputPaths {
  std::string reads;    // site_id,sample_id,pcr_id,species_id,reads,offset
  std::string samples;  // sample_id,is_negative_control[,covariates...]
  std::string sites;    // site_id,x,y[,covariates...] (x,y optional)
  std::string spikes;   // sample_id,species_id,log_amount
};

// Assembles a dataset from the long-format reads and its sidecar files.
// Every (PCR, species) pair needs a reads row.
OtuDataset read_dataset(const InputPaths& paths);

// Writes a dataset in the same formats. Empty spikes path skips that file.
void write_dataset(const OtuDataset& data, const InputPaths& paths);

// Flat "key = value" configuration with '#' comments.
struct KeyValueConfig {
  std::string path;
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<int> line_numbers;
};

KeyValueConfig read_config(const std::string& path);

// Apply recognised keys; unknown keys raise ValidationError with the line.
void apply_fit_config(const KeyValueConfig& cfg, HyperParams& hyper, ChainConfig& chain);
void apply_sim_config(const KeyValueConfig& cfg, SimSettings& settings);

// Canonical text of all fit settings, hashed into the manifest.
std::string canonical_fit_config(const HyperParams& hyper, const ChainConfig& chain);
std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t hash_file(const std::string& path);
std::string hex64(std::uint64_t v);

// Quotes a cell containing ',' or '"'.
std::string csv_field(const std::string& s);

// Shortest round-tripping decimal form used in every output table.
std::string format_double(double x);

// One file per parameter group, rows tagged by chain and iteration.
void write_draws(const std::string& dir, const std::vector<Draws>& chains);
std::vector<Draws> read_draws(const std::string& dir);

void write_summary(const std::string& path, const SummaryReport& report);
void write_matrix_csv(const std::string& path, const std::string& kind, const Matrix& m,
                      const std::vector<std::string>& names);
void write_surface(const std::string& dir, const BiomassSurface& surface, const Vector& index);
// Truth of a simulation as name,value rows using the draw column names.
void write_truth(const std::string& path, const OtuDataset& data, const ModelState& truth);
std::map<std::string, double> read_truth(const std::string& path);

struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  int chains = 1;
  std::string config_hash;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, hash
  std::vector<std::string> clamps;  // negative-control samples with delta = gamma = 0
  std::vector<std::pair<std::string, std::string>> extra;
};

void write_manifest(const std::string& path, const RunManifest& manifest);
std::map<std::string, std::string> read_manifest(const std::string& path);

}  // namespace ednaplus
