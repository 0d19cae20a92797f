// Replicate-study harness checks: block ownership per variant, determinism
// across runs and worker counts, failure accounting, and report formatting.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include <missmult/replicate.hpp>

using namespace missmult;

namespace {

StudyConfig tiny_study() {
  StudyConfig cfg;
  cfg.scenario = 1;
  cfg.scenario1.n_sites = 8;
  cfg.scenario1.visits_per_site = 1;
  cfg.scenario1.individuals_per_visit = 12;
  cfg.scenario1.n_categories = 3;
  cfg.scenario1.at_risk_prob = 0.6;
  cfg.scenario1.misclass_prob = 0.25;
  cfg.scenario1.validation_fraction = 0.25;
  cfg.run.iterations = 260;
  cfg.run.burn_in = 40;
  cfg.run.thin = 2;  // 110 retained, enough for coverage intervals
  cfg.run.seed = 7;
  cfg.replicates = 2;
  cfg.threads = 1;
  return cfg;
}

bool finite_metrics(const BlockMetrics& b) {
  return b.present && std::isfinite(b.abs) && b.abs >= 0.0 &&
         std::isfinite(b.frob) && b.frob >= 0.0 && std::isfinite(b.cov) &&
         b.cov >= 0.0 && b.cov <= 1.0;
}

}  // namespace

TEST_CASE("scenario 1 study scores the blocks each variant owns") {
  const StudyResult res = replicate_study(tiny_study());
  REQUIRE(res.scores.size() == 4);
  REQUIRE(res.scores[0].size() == 2);
  CHECK(res.n_failures == 0);

  for (size_t vi = 0; vi < 4; ++vi) {
    for (const FitScore& s : res.scores[vi]) {
      REQUIRE(s.ok);
      const Variant v = res.config.variants[vi];
      const bool zi = variant_models_zero_inflation(v);
      const bool mc = variant_models_misclassification(v);
      const bool guessy = v == Variant::MissZIDM || v == Variant::MissDM;
      CHECK(s.eta.present == zi);
      CHECK(s.psi.present == guessy);
      CHECK(s.Theta.present);
      CHECK(s.theta_star.present == mc);
      if (zi) CHECK(finite_metrics(s.eta));
      if (guessy) CHECK(finite_metrics(s.psi));
      CHECK(finite_metrics(s.Theta));
      if (mc) CHECK(finite_metrics(s.theta_star));
      CHECK(!s.eta.present ? !std::isfinite(s.eta.abs) : true);
    }
  }
}

TEST_CASE("studies are deterministic, including across worker counts") {
  StudyConfig cfg = tiny_study();
  cfg.variants = {Variant::MissZIDM, Variant::DMDM};
  const StudyResult a = replicate_study(cfg);
  cfg.threads = 3;
  const StudyResult b = replicate_study(cfg);
  REQUIRE(a.scores.size() == b.scores.size());
  for (size_t vi = 0; vi < a.scores.size(); ++vi) {
    for (size_t r = 0; r < a.scores[vi].size(); ++r) {
      const FitScore &x = a.scores[vi][r], &y = b.scores[vi][r];
      CHECK(x.ok == y.ok);
      CHECK(x.Theta.abs == y.Theta.abs);
      CHECK(x.Theta.frob == y.Theta.frob);
      CHECK(x.Theta.cov == y.Theta.cov);
      CHECK(x.theta_star.abs == y.theta_star.abs);
      if (x.eta.present) CHECK(x.eta.abs == y.eta.abs);
    }
  }
}

TEST_CASE("scenario 2 scores eta and theta_star only") {
  StudyConfig cfg;
  cfg.scenario = 2;
  cfg.scenario2.n_sites = 6;
  cfg.scenario2.visits_per_site = 2;
  cfg.scenario2.validation_fraction = 0.25;
  cfg.variants = {Variant::MissZIDM, Variant::DMDM};
  cfg.run.iterations = 140;
  cfg.run.burn_in = 40;
  cfg.run.thin = 2;  // 50 retained: too few for coverage, so cov is NaN
  cfg.run.seed = 11;
  cfg.replicates = 1;
  cfg.threads = 1;
  const StudyResult res = replicate_study(cfg);
  REQUIRE(res.scores.size() == 2);
  CHECK(res.n_failures == 0);

  const FitScore& full = res.scores[0][0];
  REQUIRE(full.ok);
  CHECK(full.eta.present);
  CHECK(!full.psi.present);
  CHECK(!full.Theta.present);
  CHECK(full.theta_star.present);
  CHECK(std::isfinite(full.eta.abs));
  CHECK(std::isfinite(full.theta_star.frob));
  CHECK(!std::isfinite(full.eta.cov));  // below the 100-draw floor

  const FitScore& plain = res.scores[1][0];
  REQUIRE(plain.ok);
  CHECK(!plain.eta.present);
  CHECK(!plain.psi.present);
  CHECK(!plain.Theta.present);
  CHECK(plain.theta_star.present);
}

TEST_CASE("failed fits are excluded and counted") {
  StudyConfig cfg = tiny_study();
  cfg.variants = {Variant::DMDM};
  cfg.use_scenario_priors = false;
  cfg.hyper.no_lucky_guess = true;  // incompatible with dmdm: every fit fails
  const StudyResult res = replicate_study(cfg);
  CHECK(res.n_failures == 2);
  REQUIRE(res.failure_log.size() == 2);
  CHECK(res.failure_log[0].find("dmdm") != std::string::npos);
  for (const FitScore& s : res.scores[0]) {
    CHECK(!s.ok);
    CHECK(!s.error.empty());
    CHECK(!s.Theta.present);
  }
  const BlockAverage avg = average_block(res, 0, &FitScore::Theta);
  CHECK(!avg.present);
  CHECK(avg.n == 0);

  const std::string table = study_table(res);
  CHECK(table.find("failures: 2") != std::string::npos);
  CHECK(table.find("0/2") != std::string::npos);
}

TEST_CASE("reports stay aligned and machine-readable") {
  StudyConfig cfg = tiny_study();
  cfg.run.iterations = 120;
  cfg.run.burn_in = 40;  // 40 retained: coverage cells become dashes
  const StudyResult res = replicate_study(cfg);

  const std::string table = study_table(res);
  CHECK(table.find("misszidm") != std::string::npos);
  CHECK(table.find("dmdm") != std::string::npos);
  CHECK(table.find(" - ") != std::string::npos);  // unowned blocks dashed
  CHECK(table.find("2/2") != std::string::npos);

  const std::string csv = study_csv(res);
  CHECK(csv.find("variant,n_ok") == csv.find('\n') + 1);  // header after meta
  CHECK(csv.find("abs_theta_star") != std::string::npos);
  // one meta line, one header, one row per variant
  int lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 2 + 4);
  // dmdm owns no eta block: its row carries empty eta cells
  const size_t dm = csv.find("\ndmdm,");
  REQUIRE(dm != std::string::npos);
  const std::string row = csv.substr(dm + 1, csv.find('\n', dm + 1) - dm - 1);
  CHECK(row.find(",,") != std::string::npos);

  // averages over present blocks agree with hand pooling
  const BlockAverage avg = average_block(res, 0, &FitScore::Theta);
  CHECK(avg.present);
  CHECK(avg.n == 2);
  const double hand =
      0.5 * (res.scores[0][0].Theta.abs + res.scores[0][1].Theta.abs);
  CHECK(avg.abs == doctest::Approx(hand).epsilon(1e-15));
}
