#pragma once
#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>

#include "missmult/errors.hpp"
#include "missmult/transforms.hpp"

namespace missmult {

// Model variants. MissZIDM is the full hit-miss zero-inflated model; the
// others are pared-down comparators sharing the same sampler skeleton.
enum class Variant : int {
  MissZIDM = 0,  // false negatives + false positives
  MissDM = 1,    // false positives only (all categories at risk)
  ZIDM = 2,      // false negatives only (classifications taken at face value)
  DMDM = 3,      // neither; plain Dirichlet-multinomial with a lucky-guess
                 // classification prior
};

inline Variant variant_from_string(const std::string& s) {
  if (s == "misszidm") return Variant::MissZIDM;
  if (s == "missdm") return Variant::MissDM;
  if (s == "zidm") return Variant::ZIDM;
  if (s == "dmdm") return Variant::DMDM;
  throw UsageError("unknown variant '" + s +
                   "' (expected misszidm, missdm, zidm, or dmdm)");
}

inline std::string variant_to_string(Variant v) {
  switch (v) {
    case Variant::MissZIDM: return "misszidm";
    case Variant::MissDM: return "missdm";
    case Variant::ZIDM: return "zidm";
    case Variant::DMDM: return "dmdm";
  }
  throw UsageError("unknown variant code");
}

inline bool variant_models_misclassification(Variant v) {
  return v == Variant::MissZIDM || v == Variant::MissDM ||
         v == Variant::DMDM;  // DMDM carries the machinery with tau pinned to 1
}

inline bool variant_models_zero_inflation(Variant v) {
  return v == Variant::MissZIDM || v == Variant::ZIDM;
}

// Prior settings. Regression priors are N(mu, sigma2 I) with a shared mean
// on the intercept and zero mean on slopes; nu are the Gamma shapes behind
// the classification rows.
struct Hyperparameters {
  Eigen::MatrixXd nu;  // T x C; empty until finalize() fills defaults

  double mu_psi = 0.0;    // prior mean, misclassification intercepts
  double mu_eta = 0.0;    // prior mean, at-risk intercepts
  double mu_gamma = 0.0;  // prior mean, concentration intercepts

  double sigma2_psi = 1.0;
  double sigma2_eta = 1.0;
  double sigma2_gamma = 1.0;

  // When set, pins the diagonal of nu to zero (the classifier never gets the
  // true class right "for free"); incompatible with the DMDM variant, whose
  // diagonal rule assumes lucky guesses happen.
  bool no_lucky_guess = false;

  // Fills nu with the variant's defaults for a T x T classification problem
  // and validates every field. Call once dimensions are known.
  void finalize(int n_categories, Variant variant) {
    if (n_categories < 1) {
      throw DataError("hyperparameters: need at least one category");
    }
    if (no_lucky_guess && variant == Variant::DMDM) {
      throw UsageError(
          "no_lucky_guess cannot be combined with the dmdm variant");
    }
    const int t = n_categories;
    if (nu.size() == 0) {
      nu = Eigen::MatrixXd::Ones(t, t);
      if (variant == Variant::DMDM) {
        const double diag = dmdm_nu_diagonal(mu_psi, t);
        for (int r = 0; r < t; ++r) nu(r, r) = diag;
      }
      if (no_lucky_guess) {
        for (int r = 0; r < t; ++r) nu(r, r) = 0.0;
      }
    }
    if (nu.rows() != t || nu.cols() != t) {
      throw DataError("hyperparameters: nu must be T x T");
    }
    for (int r = 0; r < t; ++r) {
      double row_sum = 0.0;
      for (int c = 0; c < t; ++c) {
        if (!(nu(r, c) >= 0.0) || !std::isfinite(nu(r, c))) {
          throw DataError("hyperparameters: nu entries must be nonnegative");
        }
        if (nu(r, c) == 0.0 && !(r == c && no_lucky_guess)) {
          throw DataError(
              "hyperparameters: zero nu entries are only allowed on the "
              "diagonal under no_lucky_guess");
        }
        row_sum += nu(r, c);
      }
      if (!(row_sum > 0.0)) {
        throw DataError("hyperparameters: each nu row needs positive mass");
      }
    }
    if (!(sigma2_psi > 0.0) || !(sigma2_eta > 0.0) || !(sigma2_gamma > 0.0)) {
      throw DataError("hyperparameters: prior variances must be positive");
    }
    if (!std::isfinite(mu_psi) || !std::isfinite(mu_eta) ||
        !std::isfinite(mu_gamma)) {
      throw DataError("hyperparameters: prior means must be finite");
    }
  }
};

// Sampler run controls.
struct RunConfig {
  int iterations = 5000;
  int burn_in = 2500;
  int thin = 2;
  int chains = 1;
  std::uint64_t seed = 0;
  Variant variant = Variant::MissZIDM;

  double mh_step_size = 0.1;  // initial random-walk scale for gamma coefficients
  bool adapt_mh = true;       // Robbins-Monro tuning during burn-in only

  // Test hooks / minor switches.
  bool pin_zeta = false;  // force every category at risk (debug/testing)
  // Route every individual through the classification tallies instead of
  // only the flagged guesses (a deliberately simplified tally for
  // comparison runs; the default is the exact conditional).
  bool count_all_individuals = false;

  int retained() const {
    int kept = 0;
    for (int m = 1; m <= iterations; ++m) {
      if (m > burn_in && (m - burn_in) % thin == 0) ++kept;
    }
    return kept;
  }

  void validate() const {
    if (iterations < 1) throw UsageError("iterations must be positive");
    if (burn_in < 0 || burn_in >= iterations) {
      throw UsageError("burn_in must lie in [0, iterations)");
    }
    if (thin < 1) throw UsageError("thin must be positive");
    if (chains < 1) throw UsageError("chains must be positive");
    if (!(mh_step_size > 0.0)) throw UsageError("mh_step_size must be positive");
    if (retained() < 1) {
      throw UsageError("no draws would be retained; reduce burn_in or thin");
    }
  }
};

}  // namespace missmult
