#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "missmult/hyper.hpp"
#include "missmult/rng.hpp"
#include "missmult/types.hpp"

namespace missmult {

// Full latent configuration for one chain. Indexing: individuals are global
// (length M), visit-level blocks are V x T, classification blocks T x C.
struct LatentState {
  // Per individual.
  std::vector<int> z;                // true class
  std::vector<std::uint8_t> tau;     // 1 = classification was a guess
  Eigen::VectorXd omega_tau;         // logistic augmentation for beta_psi

  // Per visit x category.
  std::vector<std::uint8_t> zeta;    // at-risk flags, flat index v * T + t
  Eigen::MatrixXd alpha;             // gamma factors behind the composition
  Eigen::MatrixXd omega_zeta;        // logistic augmentation for beta_eta
  Eigen::VectorXd mu;                // per-visit normalization augmentation

  // Global classification block.
  Eigen::MatrixXd a;  // T x C gamma factors behind classification rows
  Eigen::VectorXd u;  // per-row normalization augmentation (0 for empty rows)

  // Regression coefficients, one row per category.
  Eigen::MatrixXd beta_psi;    // T x P_psi   (individual covariates)
  Eigen::MatrixXd beta_eta;    // T x P_eta   (site covariates)
  Eigen::MatrixXd beta_gamma;  // T x P_gamma (visit covariates)

  std::uint8_t zeta_at(int v, int t) const {
    return zeta[static_cast<size_t>(v) * alpha.cols() + t];
  }
  void set_zeta(int v, int t, std::uint8_t val) {
    zeta[static_cast<size_t>(v) * alpha.cols() + t] = val;
  }

  // Row-normalized classification matrix theta(t,c) = a(t,c) / sum_c a(t,c).
  Eigen::MatrixXd theta() const;
  // Visit-level compositions Theta(v,t) = alpha(v,t) / sum_t alpha(v,t).
  Eigen::MatrixXd visit_composition() const;
};

// Deterministic-plus-diffuse starting point: true classes start at the
// observations (validated labels override), every category starts at risk,
// augmentation scales start at 1 or an exponential draw, and regression
// coefficients start at their prior means.
LatentState initial_state(const Dataset& data, const Hyperparameters& hyper,
                          const RunConfig& config, Rng& rng);

// Tally of current true classes per visit (V x T): n_vt = #{l in v : z_l = t}.
Eigen::MatrixXi z_counts_per_visit(const LatentState& state,
                                   const Dataset& data);

// Tally feeding the classification rows (T x C):
// m_tc = #{l : tau_l = 1, z_l = t, y_l = c}.
Eigen::MatrixXi misclassification_tallies(const LatentState& state,
                                          const Dataset& data);

// Structural sanity checks; throws NumericalError with a description of the
// first violated invariant. Intended for tests and debug builds.
void check_state_invariants(const LatentState& state, const Dataset& data,
                            Variant variant);

}  // namespace missmult
