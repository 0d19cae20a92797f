#pragma once
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace missmult {

// Identifies one reproducible random sequence. Distinct stream values under
// the same seed give statistically independent sequences, so parallel chains
// and replicates can be seeded without coordination.
struct RngHandle {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

// PCG64 (XSL-RR 128/64, "setseq" stream variant) plus the variate generators
// the samplers need. Every variate is produced from the uniform source by
// explicit algorithms rather than <random> distributions, so sequences are
// bit-reproducible across standard libraries and platforms.
class Rng {
 public:
  Rng() { reseed(0, 0); }
  explicit Rng(RngHandle h) { reseed(h.seed, h.stream); }
  Rng(std::uint64_t seed, std::uint64_t stream) { reseed(seed, stream); }

  void reseed(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();

  // Strictly inside (0,1) so logs of uniforms are always finite.
  double uniform();
  double normal();
  double exponential();  // rate one
  // Marsaglia-Tsang; shape and rate must be positive.
  double gamma(double shape, double rate);
  int bernoulli(double p) { return uniform() < p ? 1 : 0; }
  // Weights must be nonnegative, finite, with a positive sum.
  int categorical(const double* w, int n);
  int categorical(const std::vector<double>& w) {
    return categorical(w.data(), int(w.size()));
  }
  void dirichlet(const double* conc, int n, double* out);
  std::vector<double> dirichlet(const std::vector<double>& conc);
  long poisson(double mean);
  // Gamma-Poisson mixture: variance = mean + mean^2 / size.
  long negative_binomial(double mean, double size);
  Eigen::VectorXd mvnormal(const Eigen::VectorXd& mean,
                           const Eigen::MatrixXd& cov);

 private:
  unsigned __int128 state_ = 0;
  unsigned __int128 inc_ = 0;
};

}  // namespace missmult
