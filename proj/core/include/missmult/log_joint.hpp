#pragma once
#include "missmult/hyper.hpp"
#include "missmult/state.hpp"
#include "missmult/types.hpp"

namespace missmult {

// Log density (up to an additive constant) of the model's joint over data
// and latent state -- the distribution the sampler targets. Conventions:
//  - Point-mass branches contribute 0 when satisfied and -infinity when
//    violated (a guess flag of 0 with disagreeing labels, mass on a
//    switched-off category, and so on), so differences of this function give
//    the exact odds behind every discrete update and the exact ratio behind
//    the random-walk update of the concentration coefficients.
//  - Augmentation variables (omega, mu, u) are internal to the sampler's
//    exact-draw machinery and do not appear in this density.
// Blocks disabled by the variant (for example the at-risk machinery under
// missdm) are omitted entirely.
double log_joint(const Dataset& data, const LatentState& state,
                 const Hyperparameters& hyper, Variant variant);

// Stable log cosh(x): |x| + log1p(exp(-2|x|)) - log 2.
double log_cosh(double x);

// Stable log logistic(v).
double log_logistic(double v);

}  // namespace missmult
