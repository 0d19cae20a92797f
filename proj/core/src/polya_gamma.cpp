#include "missmult/polya_gamma.hpp"

#include <cmath>

namespace missmult {
namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kPiSq = kPi * kPi;
constexpr double kHalfPi = 0.5 * kPi;
constexpr double kTwoOverPi = 2.0 / kPi;          // series truncation point t
constexpr double kSqrtHalfPi = 1.2533141373155003;  // sqrt(pi/2)
constexpr double kLogPi = 1.1447298858494001741;
constexpr double kLogTwoOverPi = -0.45158270528945486473;

// log of the standard normal CDF, stable in the far lower tail.
double log_norm_cdf(double x) {
  if (x > -37.0) {
    return std::log(0.5 * std::erfc(-x * 0.70710678118654752440));
  }
  double x2 = x * x;
  return -0.5 * x2 - std::log(-x) - 0.91893853320467274178 +
         std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

// Piecewise coefficients a_n(x) of the alternating series; equations (12) and
// (13) of Polson, Scott & Windle (2013).
double aterm(int n, double x, double t) {
  double f = kLogPi + std::log(n + 0.5);
  if (x <= t) {
    f += 1.5 * (kLogTwoOverPi - std::log(x)) - 2.0 * (n + 0.5) * (n + 0.5) / x;
  } else {
    f += -0.5 * x * kPiSq * (n + 0.5) * (n + 0.5);
  }
  return std::exp(f);
}

// Inverse-Gaussian(mu, 1) via Michael, Schucany & Haas.
double rand_inv_gauss(Rng& rng, double mu) {
  double u = rng.normal();
  double v = u * u;
  double out = mu + 0.5 * mu * (mu * v - std::sqrt(4.0 * mu * v + mu * mu * v * v));
  if (rng.uniform() > mu / (mu + out)) out = mu * mu / out;
  return out;
}

// Gamma(1/2) truncated to (pi/2, inf); Chung (1998).
double trunc_gamma_half(Rng& rng) {
  for (;;) {
    double x = 2.0 * rng.exponential() + kHalfPi;
    if (rng.uniform() <= kSqrtHalfPi / std::sqrt(x)) return x;
  }
}

// Inverse-Gaussian(1/z, 1) truncated to (0, t); Algorithms 3 and 4 of the
// Windle (2013) thesis.
double trunc_inv_gauss(Rng& rng, double z, double t) {
  double mu = 1.0 / z;
  if (!(mu <= t)) {
    // includes z == 0, where mu is infinite
    for (;;) {
      double x = 1.0 / trunc_gamma_half(rng);
      if (std::log(rng.uniform()) < -0.5 * z * z * x) return x;
    }
  }
  for (;;) {
    double x = rand_inv_gauss(rng, mu);
    if (x < t) return x;
  }
}

}  // namespace

double draw_polya_gamma(Rng& rng, double c) {
  // PG(b, c) = J*(b, c/2) / 4
  double z = std::fabs(c) * 0.5;
  const double t = kTwoOverPi;

  // Mixture weights of the two proposal pieces (exponential right tail,
  // inverse-Gaussian body), expressed through the IG CDF at t.
  double K = 0.5 * z * z + 0.125 * kPiSq;
  double log_a = std::log(4.0) - kLogPi - z;
  double log_k = std::log(K);
  double kt = K * t;
  double w = kSqrtHalfPi;
  double logf1 = log_a + log_norm_cdf(w * (t * z - 1.0)) + log_k + kt;
  double logf2 = log_a + 2.0 * z + log_norm_cdf(-w * (t * z + 1.0)) + log_k + kt;
  double q_over_p = std::exp(logf1) + std::exp(logf2);
  double ratio = 1.0 / (1.0 + q_over_p);

  for (;;) {
    double x;
    if (rng.uniform() < ratio) {
      x = t + rng.exponential() / K;
    } else {
      x = trunc_inv_gauss(rng, z, t);
    }
    // Alternating-series accept/reject: accept when the partial sum first
    // drops below the target on an odd term, reject on an even one.
    double s = aterm(0, x, t);
    double y = rng.uniform() * s;
    int n = 1;
    double sign = -1.0;
    bool even = false;
    for (;;) {
      s += sign * aterm(n, x, t);
      if (!even && y <= s) return 0.25 * x;
      if (even && y > s) break;
      even = !even;
      sign = -sign;
      ++n;
    }
  }
}

}  // namespace missmult
