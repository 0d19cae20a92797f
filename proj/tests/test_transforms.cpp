#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <missmult/transforms.hpp>

#include <cmath>

using namespace missmult;

TEST_CASE("logistic is stable across the double range and inverts logit") {
  CHECK(logistic(0.0) == 0.5);
  CHECK(logistic(700.0) == 1.0);
  CHECK(logistic(-700.0) == doctest::Approx(0.0));
  CHECK(logistic(-700.0) > 0.0);  // tiny but not flushed to an exact zero yet
  CHECK(std::isfinite(logistic(-1e308)));
  for (double p : {0.01, 0.25, 0.5, 0.9, 0.999}) {
    CHECK(logistic(logit(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK_THROWS(logit(0.0));
  CHECK_THROWS(logit(1.0));
}

TEST_CASE("normalize_rows returns stochastic rows and rejects zero rows") {
  Eigen::MatrixXd m(2, 3);
  m << 2.0, 1.0, 1.0, 0.5, 0.5, 0.0;
  Eigen::MatrixXd p = normalize_rows(m);
  CHECK(p(0, 0) == doctest::Approx(0.5));
  CHECK(p(0, 1) == doctest::Approx(0.25));
  CHECK(p.row(1).sum() == doctest::Approx(1.0));

  Eigen::MatrixXd zero_row(2, 2);
  zero_row << 1.0, 1.0, 0.0, 0.0;
  CHECK_THROWS(normalize_rows(zero_row));

  Eigen::MatrixXd negative(1, 2);
  negative << 0.5, -0.1;
  CHECK_THROWS(normalize_rows(negative));
}

TEST_CASE("compose_confusion mixes the identity with theta") {
  // psi = (0.5, 0.5), theta = [[.2,.8],[.6,.4]] -> [[.6,.4],[.3,.7]]
  Eigen::VectorXd psi(2);
  psi << 0.5, 0.5;
  Eigen::MatrixXd theta(2, 2);
  theta << 0.2, 0.8, 0.6, 0.4;
  Eigen::MatrixXd star = compose_confusion(psi, theta);
  CHECK(star(0, 0) == doctest::Approx(0.6));
  CHECK(star(0, 1) == doctest::Approx(0.4));
  CHECK(star(1, 0) == doctest::Approx(0.3));
  CHECK(star(1, 1) == doctest::Approx(0.7));
  // rows stay stochastic
  CHECK(star.row(0).sum() == doctest::Approx(1.0));
  CHECK(star.row(1).sum() == doctest::Approx(1.0));
}

TEST_CASE("compose_confusion with psi = 1 returns theta itself") {
  Eigen::VectorXd psi = Eigen::VectorXd::Ones(2);
  Eigen::MatrixXd theta(2, 2);
  theta << 0.2, 0.8, 0.6, 0.4;
  Eigen::MatrixXd star = compose_confusion(psi, theta);
  CHECK((star - theta).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("dmdm_nu_diagonal matches the diagonal-matching rule") {
  // frozen: mu_psi=0, T=10 -> 11; mu_psi=logit(.25), T=4 -> 13;
  // saturated mu_psi -> 1
  CHECK(dmdm_nu_diagonal(0.0, 10) == doctest::Approx(11.0).epsilon(1e-12));
  CHECK(dmdm_nu_diagonal(std::log(0.25 / 0.75), 4) ==
        doctest::Approx(13.0).epsilon(1e-12));
  CHECK(dmdm_nu_diagonal(40.0, 10) == doctest::Approx(1.0).epsilon(1e-12));
}
