#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "missmult/hyper.hpp"
#include "missmult/rng.hpp"
#include "missmult/types.hpp"

namespace missmult {

// Synthetic-study generators. Both scenarios are pure functions of
// (config, seed, replicate) and bit-reproducible; the replicate index keeps
// data streams disjoint from every fitting stream.

// Scenario 1: one classification round per site. Per-site at-risk sets are
// Bernoulli draws (resampled while empty), true compositions are Dirichlet
// over the at-risk set with total concentration (1 - overdispersion) /
// overdispersion, individuals are misclassified with fixed probability, and
// misclassified labels come from a shared classification matrix whose row
// concentrations equal the column index except for a unit diagonal.
struct Scenario1Config {
  int n_sites = 50;
  int visits_per_site = 1;
  int individuals_per_visit = 100;
  int n_categories = 10;
  double at_risk_prob = 0.25;
  double misclass_prob = 0.25;
  double overdispersion = 0.01;
  double validation_fraction = 0.0;

  void validate() const;
};

// Scenario 2: multi-visit sites with species-style counts. Site-level
// occupancy flags gate per-visit negative-binomial counts (variance
// m + m^2 / sigma); every individual's label is drawn straight from a
// row-renormalized confusion matrix with uniform diagonal in (0.5, 0.95)
// and off-diagonal entries in (0.01, 0.2). The covariate mode replaces the
// constant occupancy and encounter rates with logistic / log-linear models
// over standard-normal covariates.
struct Scenario2Config {
  int n_sites = 50;
  int visits_per_site = 5;
  int n_categories = 10;
  Eigen::VectorXd lambda;          // encounter rates; empty -> defaults
  Eigen::VectorXd occupancy_prob;  // empty -> defaults
  double sigma = 1.0;              // count overdispersion
  double validation_fraction = 0.25;
  bool with_covariates = false;
  int n_covariates = 5;  // per level, when with_covariates is on

  // Fills the default rate/occupancy vectors (10 categories) and validates.
  void finalize();
  void validate() const;
};

// Generating values recorded alongside each dataset so fits can be scored.
// Blocks a scenario does not define are left empty.
struct GroundTruth {
  Eigen::MatrixXd eta_site;  // N x T at-risk / occupancy probabilities
  double psi = 0.0;          // guess probability
  bool has_psi = false;
  Eigen::VectorXd lambda;     // encounter rates
  Eigen::MatrixXd Theta;      // V x T true visit compositions
  Eigen::MatrixXd theta;      // classification rows behind guesses
  Eigen::MatrixXd theta_star; // confusion matrix (observed | true)
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> zeta;  // N x T
  std::vector<int> z;              // true class per individual
  std::vector<std::uint8_t> tau;   // guess flag per individual
  Eigen::MatrixXd beta_eta;    // generating coefficients (covariate mode)
  Eigen::MatrixXd beta_gamma;
};

struct SimulatedData {
  Dataset data;
  GroundTruth truth;
  int resampled_sites = 0;  // scenario 1: empty at-risk sets redrawn
  int empty_visits = 0;     // scenario 2: visits generated with no individuals
  int n_validated = 0;
};

SimulatedData gen_scenario1(const Scenario1Config& cfg, std::uint64_t seed,
                            std::uint32_t replicate = 0);
SimulatedData gen_scenario2(const Scenario2Config& cfg, std::uint64_t seed,
                            std::uint32_t replicate = 0);

// Marks a subset of individuals as validated (validated_class = true_z).
// PerIndividual picks round(fraction * M) individuals without replacement;
// PerVisit validates every individual in round(fraction * V) visits.
// Returns the number of individuals validated.
enum class ValidationMode { PerIndividual, PerVisit };
int attach_validation(Dataset& data, const std::vector<int>& true_z,
                      double fraction, ValidationMode mode, Rng& rng);

// Study-default priors: intercept prior means set from the generating
// process (guess and at-risk rates on the logit scale for scenario 1; mean
// occupancy and the hit-miss rate implied by the confusion-diagonal mean
// for scenario 2). Probabilities are clamped to [0.01, 0.99] before the
// logit so degenerate corners stay finite.
Hyperparameters scenario1_prior(const Scenario1Config& cfg);
Hyperparameters scenario2_prior(const Scenario2Config& cfg);

}  // namespace missmult
