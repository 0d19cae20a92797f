#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "missmult/gibbs.hpp"
#include "missmult/replicate.hpp"
#include "missmult/simulate.hpp"

// File formats and artifact persistence. This module (together with the
// command-line tool) is the only place in the library that touches the
// filesystem.
//
// Dataset directory layout (fixed names inside a directory):
//   records.csv                site_id,visit_id,individual_id,
//                              observed_class,validated_class (may be empty)
//   classes.csv                class_label, one row per category, in order
//   site_covariates.csv        site_id,<name>...            (optional)
//   visit_covariates.csv       site_id,visit_id,<name>...   (optional)
//   individual_covariates.csv  site_id,visit_id,individual_id,<name>...
//                                                           (optional)
// Ids are matched as exact strings; indices are assigned in order of first
// appearance in records.csv. Covariate files must cover exactly the ids that
// appear in records.
//
// Fit artifact directory layout:
//   manifest.json       format version, model, dims, run/prior echo, files
//   config_echo.txt     effective configuration, re-parseable
//   chain_<k>.csv       retained draws, one column per scalar (%.17g)
//   chain_<k>.bin       optional little-endian binary mirror of the csv
//   summary.csv         name,mean,q025,q975 over pooled chains
//   diagnostics.csv     metric,chain,name,value (acceptance rates; psrf when
//                       two or more chains were run)
// All files are written atomically (temp + rename).

namespace missmult {

inline constexpr int kFormatVersion = 1;

// Standardization bookkeeping for one covariate file; persisted so a fit can
// be applied to new data on the same scale.
struct CovariateInfo {
  std::vector<std::string> names;  // user columns, intercept not included
  bool standardized = false;
  std::vector<double> mean, sd;  // per user column, when standardized
};

struct LoadedData {
  Dataset data;
  std::vector<std::string> site_ids;   // file id per site index
  std::vector<std::string> visit_ids;  // file id per global visit index
  CovariateInfo site_cov, visit_cov, indiv_cov;
};

LoadedData load_dataset(const std::string& dir, bool standardize);
void write_dataset(const std::string& dir, const Dataset& data);

// One key = value per line, '#' comments, blank lines ignored. Every
// run-control, prior, scenario, and study field is addressable; unknown or
// duplicate keys are usage errors. The grammar is documented in the README
// and in render_config's output, which parses back to the same settings.
struct FileConfig {
  RunConfig run;
  Hyperparameters hyper;
  std::vector<double> nu_values;  // row-major T x T when provided

  bool standardize_covariates = true;
  bool write_binary = false;

  int scenario = 1;
  Scenario1Config scenario1;
  Scenario2Config scenario2;

  std::vector<Variant> variants{Variant::MissZIDM, Variant::MissDM,
                                Variant::ZIDM, Variant::DMDM};
  int replicates = 10;
  int threads = 0;
  bool use_scenario_priors = true;
};

FileConfig parse_config_text(const std::string& text,
                             const std::string& origin);
FileConfig parse_config_file(const std::string& path);
std::string render_config(const FileConfig& cfg);

// Shapes nu_values into hyper.nu once the category count is known.
void apply_nu(FileConfig& cfg, int n_categories);

// Writes content to path via a temporary file in the same directory followed
// by an atomic rename.
void write_file_atomic(const std::string& path, const std::string& content);

// Ground truth sidecar written by simulate and consumed by summarize/score.
// kept_sites / kept_visits map record rows back to generator rows when the
// generator produced visits with no individuals (which cannot appear in
// records.csv); empty maps mean identity.
struct TruthArtifact {
  int scenario = 1;
  std::uint64_t seed = 0;
  std::uint32_t replicate = 0;
  GroundTruth truth;
  std::vector<int> kept_sites, kept_visits;
  int n_validated = 0;
  int resampled_sites = 0;
  int empty_visits = 0;
};

void write_ground_truth(const std::string& path, const TruthArtifact& art);
TruthArtifact load_ground_truth(const std::string& path);

struct FitArtifact {
  std::vector<ChainOutput> chains;
  Hyperparameters hyper;  // as finalized for the run
  CovariateInfo site_cov, visit_cov, indiv_cov;
  std::vector<std::string> class_labels;
  bool write_binary = false;
  int n_dropped_empty_visits = 0;
};

void save_fit(const std::string& dir, const FitArtifact& art);
FitArtifact load_fit(const std::string& dir);

// Draw-table readers (column order and counts come from the manifest).
Eigen::MatrixXd load_draws_csv(const std::string& path);
Eigen::MatrixXd load_draws_binary(const std::string& path);

}  // namespace missmult
