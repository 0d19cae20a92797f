#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <missmult/rng.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "stat_util.hpp"

using missmult::Rng;
using missmult::RngHandle;

TEST_CASE("identical (seed, stream) reproduces the sequence bit for bit") {
  Rng a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(RngHandle{42, 7}), d(42, 7);
  for (int i = 0; i < 100; ++i) CHECK(c.uniform() == d.uniform());
}

TEST_CASE("distinct streams from one seed do not collide") {
  Rng a(42, 0), b(42, 1);
  int same = 0;
  for (int i = 0; i < 1000; ++i) same += (a.next_u64() == b.next_u64());
  CHECK(same == 0);
}

TEST_CASE("uniform is strictly inside (0,1) with the right first moments") {
  Rng r(1, 0);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double u = r.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    s += u;
    s2 += u * u;
  }
  double m = s / n, v = s2 / n - m * m;
  CHECK(m == doctest::Approx(0.5).epsilon(0.01));
  CHECK(v == doctest::Approx(1.0 / 12.0).epsilon(0.02));
}

TEST_CASE("normal moments") {
  Rng r(2, 0);
  const int n = 200000;
  std::vector<double> x(n);
  for (auto& xi : x) xi = r.normal();
  CHECK(statutil::mean(x) == doctest::Approx(0.0).epsilon(1).scale(0.01));
  CHECK(statutil::variance(x) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("gamma(shape 3, rate 2): mean 1.5, variance 0.75") {
  Rng r(3, 0);
  const int n = 100000;
  std::vector<double> x(n);
  for (auto& xi : x) xi = r.gamma(3.0, 2.0);
  CHECK(statutil::mean(x) == doctest::Approx(1.5).epsilon(0.02));
  CHECK(statutil::variance(x) == doctest::Approx(0.75).epsilon(0.05));
}

TEST_CASE("gamma handles shape below one") {
  Rng r(4, 0);
  const int n = 200000;
  std::vector<double> x(n);
  for (auto& xi : x) {
    xi = r.gamma(0.3, 1.5);
    REQUIRE(xi >= 0.0);
  }
  CHECK(statutil::mean(x) == doctest::Approx(0.2).epsilon(0.03));
  CHECK(statutil::variance(x) == doctest::Approx(0.3 / 2.25).epsilon(0.06));
}

TEST_CASE("gamma rejects nonpositive shape or rate") {
  Rng r(5, 0);
  CHECK_THROWS(r.gamma(0.0, 1.0));
  CHECK_THROWS(r.gamma(1.0, -1.0));
}

TEST_CASE("dirichlet draws live on the simplex with the right marginals") {
  Rng r(6, 0);
  const int n = 50000;
  std::vector<double> conc{2.0, 3.0, 5.0};
  std::vector<double> first(n);
  for (int i = 0; i < n; ++i) {
    auto d = r.dirichlet(conc);
    double s = d[0] + d[1] + d[2];
    REQUIRE(s == doctest::Approx(1.0).epsilon(1e-12));
    first[i] = d[0];
  }
  // Dirichlet(2,3,5): E[p1] = 0.2, Var[p1] = 0.2*0.8/11
  CHECK(statutil::mean(first) == doctest::Approx(0.2).epsilon(0.02));
  CHECK(statutil::variance(first) ==
        doctest::Approx(0.2 * 0.8 / 11.0).epsilon(0.05));
}

TEST_CASE("categorical frequencies match the weights (chi-square)") {
  Rng r(7, 0);
  std::vector<double> w{1.0, 2.0, 3.0, 4.0};
  std::vector<long> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts[r.categorical(w)]++;
  std::vector<double> prob{0.1, 0.2, 0.3, 0.4};
  CHECK(statutil::chi2_gof_p(counts, prob) > 1e-3);
}

TEST_CASE("categorical rejects degenerate weights") {
  Rng r(8, 0);
  std::vector<double> zero{0.0, 0.0};
  std::vector<double> neg{0.5, -0.1};
  CHECK_THROWS(r.categorical(zero));
  CHECK_THROWS(r.categorical(neg));
}

TEST_CASE("mvnormal recovers mean and covariance") {
  Rng r(9, 0);
  Eigen::VectorXd mu(2);
  mu << 1.0, -2.0;
  Eigen::MatrixXd cov(2, 2);
  cov << 2.0, 0.6, 0.6, 1.0;
  const int n = 100000;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(2, 2);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x = r.mvnormal(mu, cov);
    s += x;
    s2 += x * x.transpose();
  }
  Eigen::VectorXd m = s / n;
  Eigen::MatrixXd c = s2 / n - m * m.transpose();
  CHECK(m(0) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(m(1) == doctest::Approx(-2.0).epsilon(0.02));
  CHECK(c(0, 0) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(c(0, 1) == doctest::Approx(0.6).epsilon(0.1));
  CHECK(c(1, 1) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("mvnormal rejects a covariance that is not positive definite") {
  Rng r(10, 0);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS(r.mvnormal(mu, bad));
}

TEST_CASE("poisson moments at small and large mean") {
  Rng r(11, 0);
  for (double lambda : {3.0, 80.0}) {
    const int n = 100000;
    std::vector<double> x(n);
    for (auto& xi : x) xi = double(r.poisson(lambda));
    CHECK(statutil::mean(x) == doctest::Approx(lambda).epsilon(0.02));
    CHECK(statutil::variance(x) == doctest::Approx(lambda).epsilon(0.05));
  }
}

TEST_CASE("negative binomial: mean 10, size 1 gives variance near 110") {
  // Var = mean + mean^2 / size = 10 + 100 = 110
  Rng r(12, 0);
  const int n = 1000000;
  std::vector<double> x(n);
  for (auto& xi : x) xi = double(r.negative_binomial(10.0, 1.0));
  CHECK(statutil::mean(x) == doctest::Approx(10.0).epsilon(0.02));
  CHECK(statutil::variance(x) == doctest::Approx(110.0).epsilon(5.0 / 110.0));
}

TEST_CASE("negative binomial: large size approaches Poisson") {
  Rng r(13, 0);
  const int n = 200000;
  std::vector<double> x(n);
  for (auto& xi : x) xi = double(r.negative_binomial(4.0, 100.0));
  // Var = 4 + 16/100 = 4.16
  CHECK(statutil::variance(x) == doctest::Approx(4.16).epsilon(0.05));
}

TEST_CASE("negative binomial with zero mean is the point mass at zero") {
  Rng r(14, 0);
  for (int i = 0; i < 100; ++i) CHECK(r.negative_binomial(0.0, 1.0) == 0);
}
