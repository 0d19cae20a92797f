#pragma once
#include "missmult/rng.hpp"

namespace missmult {

// Exact draw from the Polya-Gamma distribution PG(1, c). Devroye-style
// alternating-series rejection sampler; see Polson, Scott & Windle (2013),
// arXiv:1205.0310, and Algorithm 6 of Windle's 2013 PhD thesis. The
// distribution depends on c only through |c|. No approximation is involved,
// so the draws are valid inside exact Gibbs updates.
double draw_polya_gamma(Rng& rng, double c);

}  // namespace missmult
