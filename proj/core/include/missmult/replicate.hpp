#pragma once
#include <limits>
#include <string>
#include <vector>

#include "missmult/gibbs.hpp"
#include "missmult/metrics.hpp"
#include "missmult/simulate.hpp"

namespace missmult {

// A simulation study: R generated datasets, each fitted by every requested
// variant, each fit scored against the generator's ground truth.
struct StudyConfig {
  int scenario = 1;
  Scenario1Config scenario1;
  Scenario2Config scenario2;

  std::vector<Variant> variants{Variant::MissZIDM, Variant::MissDM,
                                Variant::ZIDM, Variant::DMDM};
  RunConfig run;  // per-fit controls; run.seed seeds the whole study

  // Prior means default to the scenario-matched settings; flip the switch to
  // supply explicit hyperparameters instead.
  bool use_scenario_priors = true;
  Hyperparameters hyper;

  int replicates = 10;
  int threads = 0;  // fit workers; 0 means one per hardware thread

  void validate() const;
};

// Scores for one parameter block of one fit. Coverage needs at least 100
// pooled draws and is NaN below that floor; absent blocks stay NaN with
// present = false.
struct BlockMetrics {
  bool present = false;
  double abs = std::numeric_limits<double>::quiet_NaN();
  double frob = std::numeric_limits<double>::quiet_NaN();
  double cov = std::numeric_limits<double>::quiet_NaN();
};

struct FitScore {
  bool ok = false;
  std::string error;  // set when the fit threw
  BlockMetrics eta;         // site-level at-risk probabilities
  BlockMetrics psi;         // mean guess rates per category
  BlockMetrics Theta;       // per-visit compositions (scenario 1 only)
  BlockMetrics theta_star;  // composed classification matrix
  double runtime_seconds = 0.0;
};

struct StudyResult {
  StudyConfig config;  // as run, scenario defaults filled in
  // scores[variant_index][replicate]
  std::vector<std::vector<FitScore>> scores;
  int n_failures = 0;
  std::vector<std::string> failure_log;
  double runtime_seconds = 0.0;
};

// Runs the study: generates the replicate datasets sequentially (so they are
// identical no matter how fits are scheduled), then fans the fits out over a
// worker pool. Every fit draws from its own (replicate, variant, chain)
// random stream, making the result deterministic for a given configuration.
// Fits that throw are logged and excluded from averages.
StudyResult replicate_study(const StudyConfig& cfg);

// Scores one fitted chain set against ground truth; used by replicate_study
// and by the CLI when truth is available on disk. kept_sites/kept_visits map
// the fitted dataset's rows back to generator rows after empty visits were
// dropped (identity when empty).
FitScore score_fit(const std::vector<ChainOutput>& chains,
                   const GroundTruth& truth, int scenario,
                   const std::vector<int>& kept_sites = {},
                   const std::vector<int>& kept_visits = {});

// Mean of one block's metrics over successful fits of one variant.
struct BlockAverage {
  bool present = false;
  int n = 0;  // successful fits that scored the block
  double abs = std::numeric_limits<double>::quiet_NaN();
  double frob = std::numeric_limits<double>::quiet_NaN();
  double cov = std::numeric_limits<double>::quiet_NaN();
};

BlockAverage average_block(const StudyResult& result, size_t variant_index,
                           BlockMetrics FitScore::* block);

// Aligned text table: one row per variant, one column per block x metric,
// "-" where a variant does not own a block. The companion CSV carries the
// same cells with full precision plus a metadata comment line.
std::string study_table(const StudyResult& result);
std::string study_csv(const StudyResult& result);

}  // namespace missmult
