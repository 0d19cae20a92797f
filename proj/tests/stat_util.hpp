#pragma once
// Statistical helpers used by the test suites. Deliberately independent of
// the library under test: everything here is computed from first principles
// so it can serve as an oracle.
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace statutil {

// Regularized upper incomplete gamma Q(a, x): series for x < a+1,
// continued fraction otherwise.
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad args");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 1000; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 1000; ++i) {
    double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Upper tail of the chi-square distribution.
inline double chi2_sf(double stat, int dof) {
  return gamma_q(0.5 * dof, 0.5 * stat);
}

// Kolmogorov distribution tail.
inline double ks_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::fabs(term) < 1e-14) break;
    sign = -sign;
  }
  double q = 2.0 * sum;
  return q < 0.0 ? 0.0 : (q > 1.0 ? 1.0 : q);
}

// Two-sample Kolmogorov-Smirnov p-value (asymptotic, with the usual
// effective-sample-size correction).
inline double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs(double(i) / a.size() - double(j) / b.size()));
  }
  double ne = double(a.size()) * double(b.size()) / double(a.size() + b.size());
  double sq = std::sqrt(ne);
  return ks_q((sq + 0.12 + 0.11 / sq) * d);
}

// Chi-square goodness of fit p-value for counts vs expected probabilities.
inline double chi2_gof_p(const std::vector<long>& obs,
                         const std::vector<double>& prob) {
  if (obs.size() != prob.size()) throw std::invalid_argument("chi2: size");
  long n = 0;
  for (long o : obs) n += o;
  double stat = 0.0;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    double e = prob[k] * double(n);
    if (e <= 0.0) throw std::invalid_argument("chi2: zero expected count");
    double diff = double(obs[k]) - e;
    stat += diff * diff / e;
  }
  return chi2_sf(stat, int(obs.size()) - 1);
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

inline double variance(const std::vector<double>& v) {
  double m = mean(v), s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size() - 1);
}

}  // namespace statutil
