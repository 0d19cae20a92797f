#pragma once
#include <Eigen/Dense>
#include <string>
#include <vector>

namespace missmult {

// Ragged panel layout: sites own visits, visits own classified individuals.
// All index spaces are 0-based internally; file formats use 1-based ids.
struct Dimensions {
  int n_sites = 0;
  int n_categories = 0;
  std::vector<int> visits_per_site;        // length n_sites
  std::vector<int> individuals_per_visit;  // length total_visits()

  // Prefix sums, rebuilt by finalize().
  std::vector<int> visit_offset;  // length n_sites + 1
  std::vector<int> indiv_offset;  // length total_visits() + 1

  void finalize();

  int total_visits() const { return visit_offset.back(); }
  int total_individuals() const { return indiv_offset.back(); }
  int visit_index(int site, int visit_within_site) const {
    return visit_offset[site] + visit_within_site;
  }
  // Validates the ragged shape; throws DataError on nonsense.
  void validate() const;
};

// A complete classified-count dataset plus design matrices.
// Covariate matrices carry an intercept in column 0.
struct Dataset {
  Dimensions dims;

  std::vector<int> observed;   // length total_individuals; class in [0, C)
  std::vector<int> validated;  // same length; true class, or -1 if unknown

  std::vector<int> site_of_visit;       // length total_visits
  std::vector<int> visit_of_individual; // length total_individuals (global visit id)

  Eigen::MatrixXd x_site;   // n_sites x P_eta
  Eigen::MatrixXd x_visit;  // total_visits x P_gamma
  Eigen::MatrixXd x_indiv;  // total_individuals x P_psi

  std::vector<std::string> class_labels;  // length n_categories

  // Rebuilds site_of_visit / visit_of_individual from dims and validates
  // that every stored index is in range. Throws DataError on violations.
  void finalize();
  void validate() const;

  // Tallies of observed classes per visit (total_visits x C).
  Eigen::MatrixXi observed_counts_per_visit() const;
};

// Removes visits with zero classified individuals (they carry no likelihood
// contribution and the sampler requires at least one individual per visit).
// Returns the number of visits dropped. Sites left with zero visits are
// removed as well; n_dropped_sites reports how many, if non-null.
int drop_empty_visits(Dataset& data, int* n_dropped_sites = nullptr);

// Original indices of the visits (and the sites keeping at least one visit)
// that survive drop_empty_visits, in order. Computed from the pre-drop
// dimensions so downstream consumers can align per-site / per-visit
// quantities with the reduced dataset. Both lists come back empty when no
// visit is empty (identity mapping).
struct KeptMaps {
  std::vector<int> sites;
  std::vector<int> visits;
};
KeptMaps kept_after_drop(const Dimensions& dims);

}  // namespace missmult
