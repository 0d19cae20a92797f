// Metric and summary checks against hand-computed oracles: error metrics,
// type-7 quantiles, equal-tailed coverage, the potential-scale-reduction
// fixture, and posterior summaries recomputed from raw draw columns.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include <missmult/metrics.hpp>
#include <missmult/rng.hpp>

using namespace missmult;

TEST_CASE("error metrics match hand values and each other") {
  Eigen::MatrixXd est(1, 2), truth(1, 2);
  est << 0.2, 0.8;
  truth << 0.4, 0.6;
  CHECK(abs_metric(est, est) == 0.0);
  CHECK(abs_metric(est, truth) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(frob_metric(est, est) == 0.0);

  Eigen::MatrixXd a(1, 1), b(1, 1);
  a << 0.9;
  b << 0.6;
  CHECK(frob_metric(a, b) == doctest::Approx(0.3).epsilon(1e-14));

  Eigen::MatrixXd c(2, 1), d(2, 1);
  c << 0.3, 0.4;
  d << 0.0, 0.0;
  CHECK(frob_metric(c, d) == doctest::Approx(0.5).epsilon(1e-14));

  // mean |diff| never exceeds the norm, and frob^2 recovers the sum of squares
  Rng rng(4, 4);
  Eigen::MatrixXd x(3, 4), y(3, 4);
  for (int i = 0; i < 12; ++i) {
    x(i / 4, i % 4) = rng.uniform();
    y(i / 4, i % 4) = rng.uniform();
  }
  CHECK(abs_metric(x, y) <= frob_metric(x, y));
  CHECK(frob_metric(x, y) * frob_metric(x, y) ==
        doctest::Approx((x - y).squaredNorm()).epsilon(1e-12));

  Eigen::MatrixXd wrong(2, 2);
  CHECK_THROWS_AS(abs_metric(est, wrong), DataError);
  CHECK_THROWS_AS(frob_metric(est, wrong), DataError);
}

TEST_CASE("type-7 quantiles interpolate linearly") {
  std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(quantile_type7(v, 0.025) == doctest::Approx(1.225).epsilon(1e-14));
  CHECK(quantile_type7(v, 0.975) == doctest::Approx(9.775).epsilon(1e-14));
  CHECK(quantile_type7(v, 0.0) == 1.0);
  CHECK(quantile_type7(v, 1.0) == 10.0);
  std::vector<double> w{4, 2, 3, 1};  // unsorted input is fine
  CHECK(quantile_type7(w, 0.5) == doctest::Approx(2.5).epsilon(1e-14));
  std::vector<double> one{7.0};
  CHECK(quantile_type7(one, 0.025) == 7.0);
  CHECK(quantile_type7(one, 0.975) == 7.0);
  CHECK_THROWS_AS(quantile_type7(std::vector<double>{}, 0.5), DataError);
}

TEST_CASE("coverage counts equal-tailed interval hits") {
  const int n = 150, k = 20;
  Rng rng(12, 34);
  Eigen::MatrixXd draws(n, k);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < k; ++c) draws(r, c) = rng.normal();
  }
  CHECK(coverage_metric(draws, Eigen::VectorXd::Zero(k)) == 1.0);
  CHECK(coverage_metric(draws, Eigen::VectorXd::Constant(k, 3.0)) <= 0.05);

  // Degenerate draws still cover their own value (inclusive bounds).
  Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(120, 3, 0.7);
  CHECK(coverage_metric(flat, Eigen::VectorXd::Constant(3, 0.7)) == 1.0);
  CHECK(coverage_metric(flat, Eigen::VectorXd::Constant(3, 0.6)) == 0.0);

  CHECK_THROWS_AS(coverage_metric(Eigen::MatrixXd::Zero(99, 2),
                                  Eigen::VectorXd::Zero(2)),
                  DataError);
  CHECK_THROWS_AS(coverage_metric(draws, Eigen::VectorXd::Zero(k + 1)),
                  DataError);
}

TEST_CASE("potential scale reduction matches the two-chain fixture") {
  Eigen::MatrixXd fix(4, 2);
  fix << 1, 2, 2, 3, 3, 4, 4, 5;
  // W = 5/3, B = 2, V = 3/4 * 5/3 + 3/8 * 2 = 2, rhat = sqrt(1.2)
  CHECK(gelman_rubin_scalar(fix) ==
        doctest::Approx(1.0954451150103321).epsilon(1e-14));

  SUBCASE("identical non-constant chains sit at one within 1/n") {
    Eigen::MatrixXd m(6, 2);
    for (int r = 0; r < 6; ++r) m(r, 0) = m(r, 1) = r * 0.5;
    CHECK(std::abs(gelman_rubin_scalar(m) - 1.0) <= 1.0 / 6.0);
  }
  SUBCASE("identical constant chains converge by definition") {
    CHECK(gelman_rubin_scalar(Eigen::MatrixXd::Constant(5, 2, 3.3)) == 1.0);
  }
  SUBCASE("disjoint supports blow past the threshold") {
    Eigen::MatrixXd m(5, 2);
    for (int r = 0; r < 5; ++r) {
      m(r, 0) = 0.1 * r;
      m(r, 1) = 10.0 + 0.1 * r;
    }
    CHECK(gelman_rubin_scalar(m) > 3.0);
  }
  SUBCASE("degenerate inputs are rejected") {
    CHECK_THROWS_AS(gelman_rubin_scalar(Eigen::MatrixXd::Zero(5, 1)),
                    UsageError);
    CHECK_THROWS_AS(gelman_rubin_scalar(Eigen::MatrixXd::Zero(1, 2)),
                    UsageError);
  }
}

namespace {

// Minimal two-category chain pair exercising every monitored block.
std::vector<ChainOutput> tiny_chains() {
  std::vector<ChainOutput> chains(2);
  for (int k = 0; k < 2; ++k) {
    ChainOutput& c = chains[static_cast<size_t>(k)];
    c.config.variant = Variant::MissZIDM;
    c.chain_index = k;
    c.n_retained = 4;
    c.n_categories = 2;
    c.n_sites = 1;
    c.n_visits = 1;
    c.p_indiv = c.p_site = c.p_visit = 1;
    c.beta_psi.resize(4, 2);
    c.beta_eta.resize(4, 2);
    c.beta_gamma.resize(4, 2);
    c.theta.resize(4, 4);
    c.theta_star.resize(4, 4);
    c.psi_bar.resize(4, 2);
    c.a.resize(4, 4);
    c.u.resize(4, 2);
    c.eta.resize(4, 2);
    c.Theta.resize(4, 2);
    c.zeta.resize(4, 2);
    for (int r = 0; r < 4; ++r) {
      const double base = r + 1.0 + k;  // {1,2,3,4} then {2,3,4,5}
      c.beta_psi.row(r).setConstant(base);
      c.beta_eta.row(r).setConstant(0.1);
      c.beta_gamma.row(r).setConstant(base);
      c.theta.row(r).setConstant(0.25);
      c.theta_star.row(r).setConstant(0.25);
      c.psi_bar.row(r).setConstant(base);
      c.a.row(r).setConstant(1.0);
      c.u.row(r).setConstant(1.0);
      c.eta.row(r).setConstant(0.5);
      c.Theta.row(r).setConstant(0.5);
      c.zeta.row(r).setConstant(1);
    }
  }
  return chains;
}

}  // namespace

TEST_CASE("block-level scale reduction walks every monitored scalar") {
  const auto chains = tiny_chains();
  const auto rows = gelman_rubin(chains);
  // beta_psi (2), beta_eta (2), beta_gamma (2), theta (4), theta_star (4),
  // psi_bar (2)
  CHECK(rows.size() == 16);
  int fixture_hits = 0, converged = 0;
  for (const auto& row : rows) {
    if (row.name == "beta_gamma[1][1]" || row.name == "psi_bar[2]" ||
        row.name == "beta_psi[2][1]") {
      CHECK(row.rhat == doctest::Approx(1.0954451150103321).epsilon(1e-13));
      ++fixture_hits;
    }
    if (row.name == "theta[1][2]" || row.name == "beta_eta[1][1]") {
      CHECK(row.rhat == 1.0);
      ++converged;
    }
  }
  CHECK(fixture_hits == 3);
  CHECK(converged == 2);
  CHECK_THROWS_AS(gelman_rubin({chains[0]}), UsageError);
}

TEST_CASE("posterior summaries recompute from raw draw columns") {
  auto chains = tiny_chains();
  SUBCASE("single chain with a 1..4 column") {
    const PosteriorSummary s = posterior_summary({chains[0]});
    REQUIRE(!s.rows.empty());
    bool found = false;
    for (const auto& row : s.rows) {
      if (row.name == "psi_bar[1]") {
        found = true;
        CHECK(row.mean == doctest::Approx(2.5).epsilon(1e-14));
        // type-7 quantiles of {1,2,3,4}
        CHECK(row.q025 == doctest::Approx(1.075).epsilon(1e-12));
        CHECK(row.q975 == doctest::Approx(3.925).epsilon(1e-12));
      }
      if (row.name == "theta[2][2]") {
        found = found && true;
        CHECK(row.mean == 0.25);
        CHECK(row.q025 == 0.25);
        CHECK(row.q975 == 0.25);
      }
    }
    CHECK(found);
  }
  SUBCASE("pooling concatenates chains") {
    const PosteriorSummary s = posterior_summary(chains);
    for (const auto& row : s.rows) {
      if (row.name == "beta_gamma[2][1]") {
        CHECK(row.mean == doctest::Approx(3.0).epsilon(1e-14));  // {1..4, 2..5}
      }
      if (row.name == "zeta[1][1]") {
        CHECK(row.mean == 1.0);  // inclusion frequency
      }
    }
  }
  SUBCASE("empty chain list is rejected") {
    CHECK_THROWS_AS(posterior_summary(std::vector<ChainOutput>{}), UsageError);
  }
}
