#include "missmult/rng.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "missmult/errors.hpp"

namespace missmult {

namespace {
constexpr unsigned __int128 kPcgMult =
    (static_cast<unsigned __int128>(2549297995355413924ULL) << 64) |
    4865540595714422341ULL;
constexpr double kTwoPi = 6.283185307179586476925286766559;
}  // namespace

void Rng::reseed(std::uint64_t seed, std::uint64_t stream) {
  inc_ = (static_cast<unsigned __int128>(stream) << 1) | 1u;
  state_ = 0;
  state_ = state_ * kPcgMult + inc_;
  state_ += seed;
  state_ = state_ * kPcgMult + inc_;
}

std::uint64_t Rng::next_u64() {
  state_ = state_ * kPcgMult + inc_;
  std::uint64_t hi = static_cast<std::uint64_t>(state_ >> 64);
  std::uint64_t lo = static_cast<std::uint64_t>(state_);
  unsigned rot = static_cast<unsigned>(state_ >> 122);
  return std::rotr(hi ^ lo, static_cast<int>(rot));
}

double Rng::uniform() {
  // 53-bit mantissa, offset half a ulp so 0 and 1 are unreachable.
  return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  double u1 = uniform(), u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double Rng::exponential() { return -std::log(uniform()); }

double Rng::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw NumericalError("gamma draw requires positive shape and rate");
  }
  if (shape < 1.0) {
    // Boost to shape+1 and scale back down.
    double u = uniform();
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    double u = uniform();
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

int Rng::categorical(const double* w, int n) {
  if (n <= 0) throw NumericalError("categorical: no weights");
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    if (!(w[k] >= 0.0) || !std::isfinite(w[k])) {
      throw NumericalError("categorical: weights must be finite and >= 0");
    }
    total += w[k];
  }
  if (!(total > 0.0)) {
    throw NumericalError("categorical: all weights are zero");
  }
  double target = uniform() * total;
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    acc += w[k];
    if (target <= acc) return k;
  }
  return n - 1;  // guard against rounding on the last edge
}

void Rng::dirichlet(const double* conc, int n, double* out) {
  for (int attempt = 0; attempt < 16; ++attempt) {
    double total = 0.0;
    for (int k = 0; k < n; ++k) {
      out[k] = gamma(conc[k], 1.0);
      total += out[k];
    }
    if (total > 0.0) {
      for (int k = 0; k < n; ++k) out[k] /= total;
      return;
    }
  }
  throw NumericalError("dirichlet: gamma draws underflowed to zero");
}

std::vector<double> Rng::dirichlet(const std::vector<double>& conc) {
  std::vector<double> out(conc.size());
  dirichlet(conc.data(), int(conc.size()), out.data());
  return out;
}

long Rng::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw NumericalError("poisson: mean must be finite and >= 0");
  }
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    // Knuth's product-of-uniforms method.
    double limit = std::exp(-mean), prod = 1.0;
    long k = 0;
    do {
      ++k;
      prod *= uniform();
    } while (prod > limit);
    return k - 1;
  }
  // Hoermann's PTRS transformed rejection, exact for mean >= ~10.
  double b = 0.931 + 2.53 * std::sqrt(mean);
  double a = -0.059 + 0.02483 * b;
  double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  double v_r = 0.9277 - 3.6224 / (b - 2.0);
  double log_mean = std::log(mean);
  for (;;) {
    double u = uniform() - 0.5;
    double v = uniform();
    double us = 0.5 - std::fabs(u);
    long k = long(std::floor((2.0 * a / us + b) * u + mean + 0.43));
    if (us >= 0.07 && v <= v_r) return k;
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        double(k) * log_mean - mean - std::lgamma(double(k) + 1.0)) {
      return k;
    }
  }
}

long Rng::negative_binomial(double mean, double size) {
  if (!(mean >= 0.0)) throw NumericalError("negative_binomial: mean < 0");
  if (!(size > 0.0)) throw NumericalError("negative_binomial: size <= 0");
  if (mean == 0.0) return 0;
  double lambda = gamma(size, size / mean);
  return poisson(lambda);
}

Eigen::VectorXd Rng::mvnormal(const Eigen::VectorXd& mean,
                              const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols() || cov.rows() != mean.size()) {
    throw NumericalError("mvnormal: dimension mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("mvnormal: covariance is not positive definite");
  }
  Eigen::VectorXd z(mean.size());
  for (int i = 0; i < z.size(); ++i) z(i) = normal();
  return mean + llt.matrixL() * z;
}

}  // namespace missmult
