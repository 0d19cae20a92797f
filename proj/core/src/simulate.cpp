#include "missmult/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "missmult/errors.hpp"
#include "missmult/gibbs.hpp"
#include "missmult/transforms.hpp"

namespace missmult {

namespace {

int draw_row_categorical(Rng& rng, const Eigen::MatrixXd& m, int row) {
  std::vector<double> w(static_cast<size_t>(m.cols()));
  for (int c = 0; c < m.cols(); ++c) w[static_cast<size_t>(c)] = m(row, c);
  return rng.categorical(w.data(), static_cast<int>(w.size()));
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw UsageError(std::string(name) + " must lie in [0, 1]");
  }
}

double clamped_logit(double p) {
  return logit(std::min(0.99, std::max(0.01, p)));
}

std::vector<std::string> numeric_labels(int t_count) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<size_t>(t_count));
  for (int t = 0; t < t_count; ++t) labels.push_back(std::to_string(t + 1));
  return labels;
}

double uniform_in(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.uniform();
}

}  // namespace

void Scenario1Config::validate() const {
  if (n_sites < 1) throw UsageError("scenario 1: n_sites must be positive");
  if (visits_per_site < 1) {
    throw UsageError("scenario 1: visits_per_site must be positive");
  }
  if (individuals_per_visit < 1) {
    throw UsageError("scenario 1: individuals_per_visit must be positive");
  }
  if (n_categories < 2) {
    throw UsageError("scenario 1: need at least two categories");
  }
  check_probability(at_risk_prob, "at_risk_prob");
  check_probability(misclass_prob, "misclass_prob");
  check_probability(validation_fraction, "validation_fraction");
  if (!(overdispersion > 0.0) || !(overdispersion < 1.0)) {
    throw UsageError("scenario 1: overdispersion must lie in (0, 1)");
  }
}

void Scenario2Config::finalize() {
  if (lambda.size() == 0) {
    if (n_categories != 10) {
      throw UsageError(
          "scenario 2: default encounter rates cover exactly 10 categories; "
          "set lambda explicitly");
    }
    lambda.resize(10);
    lambda << 3.5, 3.1, 12.4, 4.5, 2.9, 1.7, 25.9, 2.7, 5.0, 0.98;
  }
  if (occupancy_prob.size() == 0) {
    if (n_categories != 10) {
      throw UsageError(
          "scenario 2: default occupancy probabilities cover exactly 10 "
          "categories; set occupancy_prob explicitly");
    }
    occupancy_prob.resize(10);
    occupancy_prob << 0.34, 0.35, 0.66, 0.46, 0.17, 0.37, 0.74, 0.41, 0.31,
        0.23;
  }
  validate();
}

void Scenario2Config::validate() const {
  if (n_sites < 1) throw UsageError("scenario 2: n_sites must be positive");
  if (visits_per_site < 1) {
    throw UsageError("scenario 2: visits_per_site must be positive");
  }
  if (n_categories < 2) {
    throw UsageError("scenario 2: need at least two categories");
  }
  if (lambda.size() != n_categories) {
    throw UsageError("scenario 2: lambda must have one rate per category");
  }
  for (int t = 0; t < lambda.size(); ++t) {
    if (!(lambda(t) > 0.0) || !std::isfinite(lambda(t))) {
      throw UsageError("scenario 2: encounter rates must be positive");
    }
  }
  if (occupancy_prob.size() != n_categories) {
    throw UsageError(
        "scenario 2: occupancy_prob must have one probability per category");
  }
  for (int t = 0; t < occupancy_prob.size(); ++t) {
    if (!(occupancy_prob(t) > 0.0 && occupancy_prob(t) <= 1.0)) {
      throw UsageError(
          "scenario 2: occupancy probabilities must lie in (0, 1]");
    }
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw UsageError("scenario 2: sigma must be positive");
  }
  check_probability(validation_fraction, "validation_fraction");
  if (with_covariates && n_covariates < 1) {
    throw UsageError("scenario 2: n_covariates must be positive");
  }
}

int attach_validation(Dataset& data, const std::vector<int>& true_z,
                      double fraction, ValidationMode mode, Rng& rng) {
  check_probability(fraction, "validation fraction");
  const int m_total = data.dims.total_individuals();
  if (static_cast<int>(true_z.size()) != m_total) {
    throw DataError("attach_validation: true class vector length mismatch");
  }
  if (mode == ValidationMode::PerIndividual) {
    const int k = static_cast<int>(std::llround(fraction * m_total));
    std::vector<int> idx(static_cast<size_t>(m_total));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k; ++i) {
      const int j =
          i + static_cast<int>(rng.uniform() * static_cast<double>(m_total - i));
      std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
      const int l = idx[static_cast<size_t>(i)];
      data.validated[static_cast<size_t>(l)] = true_z[static_cast<size_t>(l)];
    }
    return k;
  }
  const int v_total = data.dims.total_visits();
  const int kv = static_cast<int>(std::llround(fraction * v_total));
  std::vector<int> idx(static_cast<size_t>(v_total));
  std::iota(idx.begin(), idx.end(), 0);
  int marked = 0;
  for (int i = 0; i < kv; ++i) {
    const int j =
        i + static_cast<int>(rng.uniform() * static_cast<double>(v_total - i));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    const int v = idx[static_cast<size_t>(i)];
    const int l_begin = data.dims.indiv_offset[static_cast<size_t>(v)];
    const int l_end =
        l_begin + data.dims.individuals_per_visit[static_cast<size_t>(v)];
    for (int l = l_begin; l < l_end; ++l) {
      data.validated[static_cast<size_t>(l)] = true_z[static_cast<size_t>(l)];
      ++marked;
    }
  }
  return marked;
}

SimulatedData gen_scenario1(const Scenario1Config& cfg, std::uint64_t seed,
                            std::uint32_t replicate) {
  cfg.validate();
  Rng rng(seed, make_stream(replicate, 0, 0));

  const int t_count = cfg.n_categories;
  const int n_sites = cfg.n_sites;
  const int j_count = cfg.visits_per_site;
  const int l_count = cfg.individuals_per_visit;
  const int v_total = n_sites * j_count;
  const int m_total = v_total * l_count;
  const double rho = (1.0 - cfg.overdispersion) / cfg.overdispersion;

  SimulatedData out;
  GroundTruth& truth = out.truth;

  // Shared classification rows: concentrations equal the (1-based) column
  // index except for a unit diagonal, scaled to the study's overdispersion.
  truth.theta.resize(t_count, t_count);
  {
    std::vector<double> conc(static_cast<size_t>(t_count));
    std::vector<double> draw(static_cast<size_t>(t_count));
    for (int t = 0; t < t_count; ++t) {
      double total = 0.0;
      for (int c = 0; c < t_count; ++c) {
        conc[static_cast<size_t>(c)] = (c == t) ? 1.0 : static_cast<double>(c + 1);
        total += conc[static_cast<size_t>(c)];
      }
      for (int c = 0; c < t_count; ++c) {
        conc[static_cast<size_t>(c)] *= rho / total;
      }
      rng.dirichlet(conc.data(), t_count, draw.data());
      for (int c = 0; c < t_count; ++c) {
        truth.theta(t, c) = draw[static_cast<size_t>(c)];
      }
    }
  }

  // Per-site at-risk sets (resampled while empty) and compositions.
  truth.zeta.setZero(n_sites, t_count);
  Eigen::MatrixXd site_theta = Eigen::MatrixXd::Zero(n_sites, t_count);
  for (int i = 0; i < n_sites; ++i) {
    std::vector<int> at_risk;
    while (true) {
      at_risk.clear();
      for (int t = 0; t < t_count; ++t) {
        if (rng.bernoulli(cfg.at_risk_prob)) at_risk.push_back(t);
      }
      if (!at_risk.empty()) break;
      ++out.resampled_sites;
    }
    for (int t : at_risk) truth.zeta(i, t) = 1;
    std::vector<double> conc(at_risk.size(),
                             rho / static_cast<double>(at_risk.size()));
    std::vector<double> draw(at_risk.size());
    rng.dirichlet(conc.data(), static_cast<int>(at_risk.size()), draw.data());
    for (size_t k = 0; k < at_risk.size(); ++k) {
      site_theta(i, at_risk[k]) = draw[k];
    }
  }

  // Individuals: true class from the site composition, guess flag, label.
  Dataset& d = out.data;
  d.dims.n_sites = n_sites;
  d.dims.n_categories = t_count;
  d.dims.visits_per_site.assign(static_cast<size_t>(n_sites), j_count);
  d.dims.individuals_per_visit.assign(static_cast<size_t>(v_total), l_count);
  d.observed.assign(static_cast<size_t>(m_total), 0);
  d.validated.assign(static_cast<size_t>(m_total), -1);
  d.x_site = Eigen::MatrixXd::Ones(n_sites, 1);
  d.x_visit = Eigen::MatrixXd::Ones(v_total, 1);
  d.x_indiv = Eigen::MatrixXd::Ones(m_total, 1);
  d.class_labels = numeric_labels(t_count);
  d.finalize();

  truth.z.assign(static_cast<size_t>(m_total), 0);
  truth.tau.assign(static_cast<size_t>(m_total), 0);
  for (int l = 0; l < m_total; ++l) {
    const int v = d.visit_of_individual[static_cast<size_t>(l)];
    const int i = d.site_of_visit[static_cast<size_t>(v)];
    const int z = draw_row_categorical(rng, site_theta, i);
    const int guess = rng.bernoulli(cfg.misclass_prob);
    truth.z[static_cast<size_t>(l)] = z;
    truth.tau[static_cast<size_t>(l)] = static_cast<std::uint8_t>(guess);
    d.observed[static_cast<size_t>(l)] =
        guess ? draw_row_categorical(rng, truth.theta, z) : z;
  }

  truth.eta_site =
      Eigen::MatrixXd::Constant(n_sites, t_count, cfg.at_risk_prob);
  truth.psi = cfg.misclass_prob;
  truth.has_psi = true;
  truth.theta_star = compose_confusion(
      Eigen::VectorXd::Constant(t_count, cfg.misclass_prob), truth.theta);
  truth.Theta.resize(v_total, t_count);
  for (int v = 0; v < v_total; ++v) {
    truth.Theta.row(v) = site_theta.row(d.site_of_visit[static_cast<size_t>(v)]);
  }

  out.n_validated =
      attach_validation(d, truth.z, cfg.validation_fraction,
                        ValidationMode::PerIndividual, rng);
  return out;
}

SimulatedData gen_scenario2(const Scenario2Config& raw_cfg, std::uint64_t seed,
                            std::uint32_t replicate) {
  Scenario2Config cfg = raw_cfg;
  cfg.finalize();
  Rng rng(seed, make_stream(replicate, 0, 0));

  const int t_count = cfg.n_categories;
  const int n_sites = cfg.n_sites;
  const int j_count = cfg.visits_per_site;
  const int v_total = n_sites * j_count;
  const int p_cov = cfg.with_covariates ? cfg.n_covariates : 0;

  SimulatedData out;
  GroundTruth& truth = out.truth;

  // Confusion matrix: strong diagonal, weak off-diagonal, rows renormalized.
  truth.theta_star.resize(t_count, t_count);
  for (int t = 0; t < t_count; ++t) {
    for (int c = 0; c < t_count; ++c) {
      truth.theta_star(t, c) = (c == t) ? uniform_in(rng, 0.5, 0.95)
                                        : uniform_in(rng, 0.01, 0.2);
    }
  }
  truth.theta_star = normalize_rows(truth.theta_star);

  // Covariate-mode generating blocks (intercept first, then slopes).
  Eigen::MatrixXd x_site = Eigen::MatrixXd::Ones(n_sites, 1 + p_cov);
  Eigen::MatrixXd x_visit = Eigen::MatrixXd::Ones(v_total, 1 + p_cov);
  if (cfg.with_covariates) {
    truth.beta_eta.resize(t_count, 1 + p_cov);
    truth.beta_gamma.resize(t_count, 1 + p_cov);
    const double lo = logit(0.25), hi = logit(0.95);
    for (int t = 0; t < t_count; ++t) {
      truth.beta_eta(t, 0) = uniform_in(rng, lo, hi);
      for (int p = 1; p <= p_cov; ++p) {
        truth.beta_eta(t, p) = rng.bernoulli(0.5) ? 1.0 : -1.0;
      }
    }
    for (int t = 0; t < t_count; ++t) {
      truth.beta_gamma(t, 0) = uniform_in(rng, 0.0, std::log(10.0));
      for (int p = 1; p <= p_cov; ++p) {
        truth.beta_gamma(t, p) = rng.bernoulli(0.5) ? 0.2 : -0.2;
      }
    }
    for (int i = 0; i < n_sites; ++i) {
      for (int p = 1; p <= p_cov; ++p) x_site(i, p) = rng.normal();
    }
    for (int v = 0; v < v_total; ++v) {
      for (int p = 1; p <= p_cov; ++p) x_visit(v, p) = rng.normal();
    }
  }

  // Site-level occupancy and expected encounter rates.
  truth.eta_site.resize(n_sites, t_count);
  truth.zeta.setZero(n_sites, t_count);
  for (int i = 0; i < n_sites; ++i) {
    for (int t = 0; t < t_count; ++t) {
      const double eta =
          cfg.with_covariates
              ? logistic(x_site.row(i).dot(truth.beta_eta.row(t)))
              : cfg.occupancy_prob(t);
      truth.eta_site(i, t) = eta;
      truth.zeta(i, t) = static_cast<std::uint8_t>(rng.bernoulli(eta));
    }
  }

  // Per-visit counts, then individuals expanded in category order.
  Eigen::MatrixXi counts(v_total, t_count);
  std::vector<int> per_visit(static_cast<size_t>(v_total), 0);
  Eigen::MatrixXd rate(v_total, t_count);
  for (int v = 0; v < v_total; ++v) {
    const int i = v / j_count;
    int total = 0;
    for (int t = 0; t < t_count; ++t) {
      const double lam = cfg.with_covariates
                             ? std::exp(x_visit.row(v).dot(truth.beta_gamma.row(t)))
                             : cfg.lambda(t);
      const double mean = truth.zeta(i, t) ? lam : 0.0;
      rate(v, t) = mean;
      const int n =
          mean > 0.0
              ? static_cast<int>(rng.negative_binomial(mean, cfg.sigma))
              : 0;
      counts(v, t) = n;
      total += n;
    }
    per_visit[static_cast<size_t>(v)] = total;
    if (total == 0) ++out.empty_visits;
  }

  Dataset& d = out.data;
  d.dims.n_sites = n_sites;
  d.dims.n_categories = t_count;
  d.dims.visits_per_site.assign(static_cast<size_t>(n_sites), j_count);
  d.dims.individuals_per_visit = per_visit;
  const int m_total =
      std::accumulate(per_visit.begin(), per_visit.end(), 0);
  d.observed.assign(static_cast<size_t>(m_total), 0);
  d.validated.assign(static_cast<size_t>(m_total), -1);
  truth.z.assign(static_cast<size_t>(m_total), 0);
  int l = 0;
  for (int v = 0; v < v_total; ++v) {
    for (int t = 0; t < t_count; ++t) {
      for (int k = 0; k < counts(v, t); ++k, ++l) {
        truth.z[static_cast<size_t>(l)] = t;
        d.observed[static_cast<size_t>(l)] =
            draw_row_categorical(rng, truth.theta_star, t);
      }
    }
  }

  d.x_site = x_site;
  d.x_visit = x_visit;
  d.x_indiv = Eigen::MatrixXd::Ones(m_total, 1 + p_cov);
  if (cfg.with_covariates) {
    for (int m = 0; m < m_total; ++m) {
      for (int p = 1; p <= p_cov; ++p) d.x_indiv(m, p) = rng.normal();
    }
  }
  d.class_labels = numeric_labels(t_count);
  d.finalize();

  if (!cfg.with_covariates) truth.lambda = cfg.lambda;
  truth.Theta.resize(v_total, t_count);
  for (int v = 0; v < v_total; ++v) {
    const double total = rate.row(v).sum();
    truth.Theta.row(v) =
        total > 0.0 ? (rate.row(v) / total).eval()
                    : Eigen::RowVectorXd::Zero(t_count).eval();
  }

  out.n_validated =
      attach_validation(d, truth.z, cfg.validation_fraction,
                        ValidationMode::PerIndividual, rng);
  return out;
}

Hyperparameters scenario1_prior(const Scenario1Config& cfg) {
  cfg.validate();
  Hyperparameters h;
  h.mu_psi = clamped_logit(cfg.misclass_prob);
  h.mu_eta = clamped_logit(cfg.at_risk_prob);
  h.mu_gamma = 0.0;
  return h;
}

Hyperparameters scenario2_prior(const Scenario2Config& raw_cfg) {
  Scenario2Config cfg = raw_cfg;
  cfg.finalize();
  Hyperparameters h;
  h.mu_eta = clamped_logit(cfg.occupancy_prob.mean());
  // Hit-miss rate implied by the mean confusion diagonal (0.725) under a
  // uniform classification prior mean: (1 - psi) + psi / T = 0.725.
  const double mean_diag = 0.5 * (0.5 + 0.95);
  const double psi_bar =
      (1.0 - mean_diag) / (1.0 - 1.0 / static_cast<double>(cfg.n_categories));
  h.mu_psi = clamped_logit(psi_bar);
  h.mu_gamma = 0.0;
  return h;
}

}  // namespace missmult
