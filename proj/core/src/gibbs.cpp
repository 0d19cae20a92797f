#include "missmult/gibbs.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>
#include <vector>

#include "missmult/errors.hpp"
#include "missmult/polya_gamma.hpp"
#include "missmult/transforms.hpp"

namespace missmult {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Gamma draws for at-risk factors are floored so log(alpha) stays finite in
// the concentration random-walk target; at model-relevant shapes the floor
// is hit with probability below 1e-30.
constexpr double kAlphaFloor = 1e-300;

// Draws beta ~ N(prec^{-1} shift, prec^{-1}) from the natural parameters,
// without forming the covariance: beta = mean + U^{-1} xi with prec = U'U.
Eigen::VectorXd draw_gaussian_from_precision(const Eigen::MatrixXd& prec,
                                             const Eigen::VectorXd& shift,
                                             Rng& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("regression update: precision matrix is not "
                         "positive definite");
  }
  Eigen::VectorXd xi(prec.rows());
  for (int p = 0; p < xi.size(); ++p) xi(p) = rng.normal();
  return llt.solve(shift) + llt.matrixU().solve(xi);
}

int draw_row_categorical(Rng& rng, const Eigen::MatrixXd& m, int row) {
  std::vector<double> w(static_cast<size_t>(m.cols()));
  for (int c = 0; c < m.cols(); ++c) w[static_cast<size_t>(c)] = m(row, c);
  return rng.categorical(w.data(), static_cast<int>(w.size()));
}

bool intercept_only(const Eigen::MatrixXd& x) {
  return x.cols() == 1 && (x.array() == 1.0).all();
}

}  // namespace

std::uint64_t make_stream(std::uint32_t replicate, std::uint16_t role,
                          std::uint16_t chain) {
  return (static_cast<std::uint64_t>(replicate) << 32) |
         (static_cast<std::uint64_t>(role) << 16) |
         static_cast<std::uint64_t>(chain);
}

std::uint16_t fit_role(Variant variant) {
  return static_cast<std::uint16_t>(1 + static_cast<int>(variant));
}

GibbsSampler::GibbsSampler(const Dataset& data, const Hyperparameters& hyper,
                           const RunConfig& config)
    : data_(&data), hyper_(hyper), config_(config) {
  config_.validate();
  data_->validate();
  for (int l_count : data.dims.individuals_per_visit) {
    if (l_count == 0) {
      throw DataError(
          "empty visits must be dropped before fitting (the per-visit "
          "normalization update needs at least one individual)");
    }
  }
  hyper_.finalize(data.dims.n_categories, config_.variant);
  const Variant v = config_.variant;
  with_psi_ = (v == Variant::MissZIDM || v == Variant::MissDM);
  with_misclass_ = variant_models_misclassification(v);
  with_zero_inflation_ = variant_models_zero_inflation(v) && !config_.pin_zeta;
}

void GibbsSampler::update_mu(int v, LatentState& s, Rng& rng) const {
  const double alpha_bar = s.alpha.row(v).sum();
  if (!(alpha_bar > 0.0)) {
    throw NumericalError("state invariant violated: visit " +
                         std::to_string(v) + " has no at-risk mass");
  }
  const int l_count = data_->dims.individuals_per_visit[static_cast<size_t>(v)];
  s.mu(v) = rng.gamma(static_cast<double>(l_count), alpha_bar);
}

void GibbsSampler::update_tau(int l, LatentState& s, Rng& rng) const {
  const int y = data_->observed[static_cast<size_t>(l)];
  const int t = s.z[static_cast<size_t>(l)];
  if (y != t) {  // disagreement is only possible for a guessed label
    s.tau[static_cast<size_t>(l)] = 1;
    return;
  }
  const double theta_tt = s.a(t, t) / s.a.row(t).sum();
  const double psi =
      with_psi_ ? logistic(data_->x_indiv.row(l).dot(s.beta_psi.row(t))) : 1.0;
  const double guess_mass = psi * theta_tt;
  if (guess_mass == 0.0) {  // a lucky guess is impossible
    s.tau[static_cast<size_t>(l)] = 0;
    return;
  }
  const double p = guess_mass / (guess_mass + 1.0 - psi);
  s.tau[static_cast<size_t>(l)] = static_cast<std::uint8_t>(rng.bernoulli(p));
}

void GibbsSampler::update_z(int l, LatentState& s, Rng& rng) const {
  std::vector<double> w;
  update_z_with(l, s, rng, w);
}

void GibbsSampler::update_z_with(int l, LatentState& s, Rng& rng,
                                 std::vector<double>& w) const {
  if (data_->validated[static_cast<size_t>(l)] >= 0) return;  // pinned
  const int y = data_->observed[static_cast<size_t>(l)];
  if (!s.tau[static_cast<size_t>(l)]) {  // a non-guess is necessarily right
    s.z[static_cast<size_t>(l)] = y;
    return;
  }
  const int t_count = data_->dims.n_categories;
  const int v = data_->visit_of_individual[static_cast<size_t>(l)];
  w.resize(static_cast<size_t>(t_count));
  for (int t = 0; t < t_count; ++t) {
    double weight = s.alpha(v, t);
    if (weight > 0.0) {
      weight *= s.a(t, y) / s.a.row(t).sum();
      if (with_psi_ && weight > 0.0) {
        weight *= logistic(data_->x_indiv.row(l).dot(s.beta_psi.row(t)));
      }
    }
    w[static_cast<size_t>(t)] = weight;
  }
  s.z[static_cast<size_t>(l)] = rng.categorical(w.data(), t_count);
}

void GibbsSampler::update_omega_tau(int l, LatentState& s, Rng& rng) const {
  const int t = s.z[static_cast<size_t>(l)];
  const double lin = data_->x_indiv.row(l).dot(s.beta_psi.row(t));
  s.omega_tau(l) = draw_polya_gamma(rng, lin);
}

void GibbsSampler::update_zeta_alpha(int v, int t, int n_vt, LatentState& s,
                                     Rng& rng) const {
  const double gam = std::exp(data_->x_visit.row(v).dot(s.beta_gamma.row(t)));
  if (!std::isfinite(gam) || !(gam > 0.0)) {
    throw NumericalError("concentration overflowed for visit " +
                         std::to_string(v) + ", category " + std::to_string(t));
  }
  if (n_vt > 0 || !with_zero_inflation_) {
    // Observed support forces the category on (or the variant pins it);
    // the factor refresh is the conjugate gamma draw.
    s.set_zeta(v, t, 1);
    s.alpha(v, t) = std::max(
        rng.gamma(static_cast<double>(n_vt) + gam, 1.0 + s.mu(v)),
        kAlphaFloor);
    return;
  }
  // No individual carries the category: integrate the factor out of the
  // two-point conditional, then refresh it only if the category stays on.
  const int i = data_->site_of_visit[static_cast<size_t>(v)];
  const double lin_eta = data_->x_site.row(i).dot(s.beta_eta.row(t));
  const double logit_on = lin_eta - gam * std::log1p(s.mu(v));
  const std::uint8_t on =
      static_cast<std::uint8_t>(rng.bernoulli(logistic(logit_on)));
  s.set_zeta(v, t, on);
  s.alpha(v, t) =
      on ? std::max(rng.gamma(gam, 1.0 + s.mu(v)), kAlphaFloor) : 0.0;
}

void GibbsSampler::update_omega_zeta(int v, int t, LatentState& s,
                                     Rng& rng) const {
  const int i = data_->site_of_visit[static_cast<size_t>(v)];
  const double lin = data_->x_site.row(i).dot(s.beta_eta.row(t));
  s.omega_zeta(v, t) = draw_polya_gamma(rng, lin);
}

void GibbsSampler::update_u(int t, int guess_count, LatentState& s,
                            Rng& rng) const {
  // The normalization augmentation exists only when the row carries data:
  // integrating u against Gamma(m_t, a_bar) reproduces the a_bar^{-m_t}
  // likelihood factor for m_t >= 1, while an empty row has no such factor,
  // so its u is pinned at 0 and the factor draws fall back to the prior.
  // (Drawing u ~ Gamma(1, a_bar) here instead would silently tilt empty
  // rows away from their prior: that u-density carries an a_bar factor the
  // conjugate factor update does not account for.)
  if (guess_count <= 0) {
    s.u(t) = 0.0;
    return;
  }
  const double a_bar = s.a.row(t).sum();
  if (!(a_bar > 0.0)) {
    throw NumericalError("state invariant violated: classification row " +
                         std::to_string(t) + " has no mass");
  }
  s.u(t) = rng.gamma(static_cast<double>(guess_count), a_bar);
}

void GibbsSampler::update_a(int t, int c, int guess_count_tc, LatentState& s,
                            Rng& rng) const {
  const double nu = hyper_.nu(t, c);
  if (nu == 0.0) {  // forced off (no-lucky-guess diagonal)
    s.a(t, c) = 0.0;
    return;
  }
  s.a(t, c) =
      rng.gamma(static_cast<double>(guess_count_tc) + nu, s.u(t) + 1.0);
}

void GibbsSampler::update_beta_psi(int t, LatentState& s, Rng& rng) const {
  const int p_dim = static_cast<int>(data_->x_indiv.cols());
  Eigen::MatrixXd prec =
      Eigen::MatrixXd::Identity(p_dim, p_dim) / hyper_.sigma2_psi;
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(p_dim);
  shift(0) = hyper_.mu_psi / hyper_.sigma2_psi;
  const int m_total = data_->dims.total_individuals();
  for (int l = 0; l < m_total; ++l) {
    if (s.z[static_cast<size_t>(l)] != t) continue;
    const auto x = data_->x_indiv.row(l);
    prec.noalias() += s.omega_tau(l) * (x.transpose() * x);
    shift.noalias() +=
        (static_cast<double>(s.tau[static_cast<size_t>(l)]) - 0.5) *
        x.transpose();
  }
  s.beta_psi.row(t) = draw_gaussian_from_precision(prec, shift, rng);
}

void GibbsSampler::update_beta_eta(int t, LatentState& s, Rng& rng) const {
  const int p_dim = static_cast<int>(data_->x_site.cols());
  Eigen::MatrixXd prec =
      Eigen::MatrixXd::Identity(p_dim, p_dim) / hyper_.sigma2_eta;
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(p_dim);
  shift(0) = hyper_.mu_eta / hyper_.sigma2_eta;
  const int v_total = data_->dims.total_visits();
  for (int v = 0; v < v_total; ++v) {
    const auto x = data_->x_site.row(data_->site_of_visit[static_cast<size_t>(v)]);
    prec.noalias() += s.omega_zeta(v, t) * (x.transpose() * x);
    shift.noalias() +=
        (static_cast<double>(s.zeta_at(v, t)) - 0.5) * x.transpose();
  }
  s.beta_eta.row(t) = draw_gaussian_from_precision(prec, shift, rng);
}

int GibbsSampler::update_beta_gamma(int t, LatentState& s, Rng& rng,
                                    const double* steps) const {
  return update_beta_gamma_impl(t, s, rng, steps, nullptr);
}

int GibbsSampler::update_beta_gamma_impl(int t, LatentState& s, Rng& rng,
                                         const double* steps,
                                         std::uint8_t* accepted) const {
  const int p_dim = static_cast<int>(data_->x_visit.cols());
  const int v_total = data_->dims.total_visits();

  // At-risk visits are the only ones contributing likelihood terms.
  std::vector<int> vis;
  vis.reserve(static_cast<size_t>(v_total));
  for (int v = 0; v < v_total; ++v) {
    if (s.zeta_at(v, t)) vis.push_back(v);
  }
  const int n_vis = static_cast<int>(vis.size());

  // Log-factor cache; the log-concentrations change only on acceptance.
  Eigen::VectorXd log_alpha(n_vis), lin(n_vis);
  for (int k = 0; k < n_vis; ++k) {
    log_alpha(k) = std::log(s.alpha(vis[static_cast<size_t>(k)], t));
    lin(k) = data_->x_visit.row(vis[static_cast<size_t>(k)])
                 .dot(s.beta_gamma.row(t));
  }
  const bool flat = intercept_only(data_->x_visit);
  const double sum_log_alpha = flat ? log_alpha.sum() : 0.0;

  int n_accepted = 0;
  for (int p = 0; p < p_dim; ++p) {
    const double delta = steps[p] * rng.normal();
    const double cur = s.beta_gamma(t, p);
    const double prop = cur + delta;
    double log_ratio = 0.0;
    if (flat) {
      const double g_old = std::exp(cur);
      const double g_new = std::exp(prop);
      if (!std::isfinite(g_new)) {
        log_ratio = -kInf;
      } else {
        log_ratio = (g_new - g_old) * sum_log_alpha -
                    n_vis * (std::lgamma(g_new) - std::lgamma(g_old));
      }
    } else {
      for (int k = 0; k < n_vis; ++k) {
        const double x_kp = data_->x_visit(vis[static_cast<size_t>(k)], p);
        const double g_old = std::exp(lin(k));
        const double g_new = std::exp(lin(k) + x_kp * delta);
        if (!std::isfinite(g_new)) {
          log_ratio = -kInf;
          break;
        }
        log_ratio += (g_new - g_old) * log_alpha(k) -
                     (std::lgamma(g_new) - std::lgamma(g_old));
      }
    }
    const double prior_mean = (p == 0) ? hyper_.mu_gamma : 0.0;
    log_ratio += ((cur - prior_mean) * (cur - prior_mean) -
                  (prop - prior_mean) * (prop - prior_mean)) /
                 (2.0 * hyper_.sigma2_gamma);
    // Always consume exactly one uniform per component so proposal streams
    // do not depend on the acceptance pattern.
    const bool take = std::log(rng.uniform()) < log_ratio;
    if (take) {
      s.beta_gamma(t, p) = prop;
      if (!flat) {
        for (int k = 0; k < n_vis; ++k) {
          lin(k) += data_->x_visit(vis[static_cast<size_t>(k)], p) * delta;
        }
      }
      ++n_accepted;
    }
    if (accepted != nullptr) accepted[p] = take ? 1 : 0;
  }
  return n_accepted;
}

void GibbsSampler::sweep(LatentState& s, Rng& rng) const {
  const Eigen::MatrixXd steps = Eigen::MatrixXd::Constant(
      data_->dims.n_categories, data_->x_visit.cols(), config_.mh_step_size);
  sweep_impl(s, rng, steps, nullptr);
}

void GibbsSampler::sweep_impl(LatentState& s, Rng& rng,
                              const Eigen::MatrixXd& steps,
                              Eigen::ArrayXXd* accept_tally) const {
  const Dataset& d = *data_;
  const int v_total = d.dims.total_visits();
  const int t_count = d.dims.n_categories;
  const bool face_value = (config_.variant == Variant::ZIDM);
  const bool all_guesses = (config_.variant == Variant::DMDM);

  std::vector<double> weight_buf;
  std::vector<int> n_vt(static_cast<size_t>(t_count));

  for (int v = 0; v < v_total; ++v) {
    update_mu(v, s, rng);
    const int l_begin = d.dims.indiv_offset[static_cast<size_t>(v)];
    const int l_end = l_begin + d.dims.individuals_per_visit[static_cast<size_t>(v)];
    if (!face_value) {
      for (int l = l_begin; l < l_end; ++l) {
        if (!all_guesses) update_tau(l, s, rng);
        update_z_with(l, s, rng, weight_buf);
        if (with_psi_) update_omega_tau(l, s, rng);
      }
    }
    std::fill(n_vt.begin(), n_vt.end(), 0);
    for (int l = l_begin; l < l_end; ++l) ++n_vt[static_cast<size_t>(s.z[static_cast<size_t>(l)])];
    for (int t = 0; t < t_count; ++t) {
      update_zeta_alpha(v, t, n_vt[static_cast<size_t>(t)], s, rng);
      if (with_zero_inflation_) update_omega_zeta(v, t, s, rng);
    }
  }

  // Global block: tallies are fixed for the whole phase because no
  // individual-level variable changes below.
  Eigen::MatrixXi m;
  if (with_misclass_) {
    m = Eigen::MatrixXi::Zero(t_count, t_count);
    const int m_total = d.dims.total_individuals();
    for (int l = 0; l < m_total; ++l) {
      if (config_.count_all_individuals || s.tau[static_cast<size_t>(l)]) {
        ++m(s.z[static_cast<size_t>(l)], d.observed[static_cast<size_t>(l)]);
      }
    }
  }
  std::vector<double> step_row(static_cast<size_t>(d.x_visit.cols()));
  std::vector<std::uint8_t> acc_row(step_row.size());
  for (int t = 0; t < t_count; ++t) {
    if (with_misclass_) update_u(t, m.row(t).sum(), s, rng);
    if (with_psi_) update_beta_psi(t, s, rng);
    if (with_zero_inflation_) update_beta_eta(t, s, rng);
    for (size_t p = 0; p < step_row.size(); ++p) {
      step_row[p] = steps(t, static_cast<int>(p));
    }
    update_beta_gamma_impl(t, s, rng, step_row.data(),
                           accept_tally ? acc_row.data() : nullptr);
    if (accept_tally != nullptr) {
      for (size_t p = 0; p < acc_row.size(); ++p) {
        (*accept_tally)(t, static_cast<int>(p)) = acc_row[p];
      }
    }
    if (with_misclass_) {
      for (int c = 0; c < t_count; ++c) update_a(t, c, m(t, c), s, rng);
    }
  }
}

void GibbsSampler::record_draw(const LatentState& s, int row,
                               ChainOutput& out) const {
  const Dataset& d = *data_;
  const int t_count = d.dims.n_categories;
  const int n_sites = d.dims.n_sites;
  const int v_total = d.dims.total_visits();
  const int p_psi = static_cast<int>(d.x_indiv.cols());
  const int p_eta = static_cast<int>(d.x_site.cols());
  const int p_gamma = static_cast<int>(d.x_visit.cols());

  for (int t = 0; t < t_count; ++t) {
    for (int p = 0; p < p_gamma; ++p) {
      out.beta_gamma(row, t * p_gamma + p) = s.beta_gamma(t, p);
    }
  }
  const Eigen::MatrixXd composition = s.visit_composition();
  for (int v = 0; v < v_total; ++v) {
    for (int t = 0; t < t_count; ++t) {
      out.Theta(row, v * t_count + t) = composition(v, t);
    }
  }

  if (with_psi_) {
    for (int t = 0; t < t_count; ++t) {
      for (int p = 0; p < p_psi; ++p) {
        out.beta_psi(row, t * p_psi + p) = s.beta_psi(t, p);
      }
    }
  }
  if (with_misclass_) {
    const Eigen::MatrixXd theta = s.theta();
    for (int t = 0; t < t_count; ++t) {
      out.u(row, t) = s.u(t);
      for (int c = 0; c < t_count; ++c) {
        out.a(row, t * t_count + c) = s.a(t, c);
        out.theta(row, t * t_count + c) = theta(t, c);
      }
    }
    if (with_psi_) {
      Eigen::VectorXd psi_bar(t_count);
      if (intercept_only(d.x_indiv)) {
        for (int t = 0; t < t_count; ++t) psi_bar(t) = logistic(s.beta_psi(t, 0));
      } else {
        for (int t = 0; t < t_count; ++t) {
          psi_bar(t) = (d.x_indiv * s.beta_psi.row(t).transpose())
                           .unaryExpr([](double v) { return logistic(v); })
                           .mean();
        }
      }
      const Eigen::MatrixXd star = compose_confusion(psi_bar, theta);
      for (int t = 0; t < t_count; ++t) {
        out.psi_bar(row, t) = psi_bar(t);
        for (int c = 0; c < t_count; ++c) {
          out.theta_star(row, t * t_count + c) = star(t, c);
        }
      }
    } else {
      // Every classification is a guess, so the confusion matrix is the
      // classification matrix itself.
      out.theta_star.row(row) = out.theta.row(row);
    }
  }
  if (with_zero_inflation_) {
    for (int t = 0; t < t_count; ++t) {
      for (int p = 0; p < p_eta; ++p) {
        out.beta_eta(row, t * p_eta + p) = s.beta_eta(t, p);
      }
    }
    for (int i = 0; i < n_sites; ++i) {
      for (int t = 0; t < t_count; ++t) {
        out.eta(row, i * t_count + t) =
            logistic(d.x_site.row(i).dot(s.beta_eta.row(t)));
      }
    }
    for (int v = 0; v < v_total; ++v) {
      for (int t = 0; t < t_count; ++t) {
        out.zeta(row, v * t_count + t) = s.zeta_at(v, t);
      }
    }
  }
}

ChainOutput GibbsSampler::run_chain(int chain_index, std::uint64_t stream,
                                    const DrawCallback& callback) const {
  const Dataset& d = *data_;
  const int t_count = d.dims.n_categories;
  const int n_sites = d.dims.n_sites;
  const int v_total = d.dims.total_visits();
  const int p_psi = static_cast<int>(d.x_indiv.cols());
  const int p_eta = static_cast<int>(d.x_site.cols());
  const int p_gamma = static_cast<int>(d.x_visit.cols());
  const int kept = config_.retained();

  ChainOutput out;
  out.config = config_;
  out.chain_index = chain_index;
  out.stream = stream;
  out.n_retained = kept;
  out.n_categories = t_count;
  out.n_sites = n_sites;
  out.n_visits = v_total;
  out.p_indiv = p_psi;
  out.p_site = p_eta;
  out.p_visit = p_gamma;
  out.beta_gamma.resize(kept, t_count * p_gamma);
  out.Theta.resize(kept, v_total * t_count);
  if (with_psi_) {
    out.beta_psi.resize(kept, t_count * p_psi);
    out.psi_bar.resize(kept, t_count);
  }
  if (with_misclass_) {
    out.a.resize(kept, t_count * t_count);
    out.u.resize(kept, t_count);
    out.theta.resize(kept, t_count * t_count);
    out.theta_star.resize(kept, t_count * t_count);
  }
  if (with_zero_inflation_) {
    out.beta_eta.resize(kept, t_count * p_eta);
    out.eta.resize(kept, n_sites * t_count);
    out.zeta.resize(kept, v_total * t_count);
  }

  const auto t_start = std::chrono::steady_clock::now();
  Rng rng(config_.seed, stream);
  LatentState s = initial_state(d, hyper_, config_, rng);

  Eigen::ArrayXXd log_steps = Eigen::ArrayXXd::Constant(
      t_count, p_gamma, std::log(config_.mh_step_size));
  Eigen::MatrixXd steps =
      Eigen::MatrixXd::Constant(t_count, p_gamma, config_.mh_step_size);
  Eigen::ArrayXXd tally(t_count, p_gamma);
  Eigen::ArrayXXd accept_total = Eigen::ArrayXXd::Zero(t_count, p_gamma);
  constexpr double kTargetAcceptance = 0.44;

  int row = 0;
  long post_sweeps = 0;
  for (int it = 1; it <= config_.iterations; ++it) {
    tally.setZero();
    sweep_impl(s, rng, steps, &tally);
    if (it <= config_.burn_in) {
      if (config_.adapt_mh) {
        const double gain = 1.0 / std::pow(static_cast<double>(it), 0.6);
        log_steps += gain * (tally - kTargetAcceptance);
        steps = log_steps.exp().matrix();
      }
    } else {
      accept_total += tally;
      ++post_sweeps;
      if ((it - config_.burn_in) % config_.thin == 0) {
        record_draw(s, row, out);
        if (callback) callback(row, s);
        ++row;
      }
    }
  }
  out.accept_rate_beta_gamma.resize(t_count);
  for (int t = 0; t < t_count; ++t) {
    out.accept_rate_beta_gamma(t) =
        accept_total.row(t).sum() /
        (static_cast<double>(p_gamma) * static_cast<double>(post_sweeps));
  }
  out.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return out;
}

std::vector<ChainOutput> run_chains(const Dataset& data,
                                    const Hyperparameters& hyper,
                                    const RunConfig& config,
                                    std::uint32_t replicate,
                                    const GibbsSampler::DrawCallback& cb,
                                    int threads) {
  const GibbsSampler sampler(data, hyper, config);
  const std::uint16_t role = fit_role(config.variant);
  const size_t n_chains = static_cast<size_t>(config.chains);
  std::vector<ChainOutput> chains(n_chains);
  auto run_one = [&](size_t k) {
    chains[k] = sampler.run_chain(
        static_cast<int>(k),
        make_stream(replicate, role, static_cast<std::uint16_t>(k)), cb);
  };

  size_t n_workers = threads > 0 ? static_cast<size_t>(threads)
                                 : std::thread::hardware_concurrency();
  n_workers = std::min(std::max<size_t>(n_workers, 1), n_chains);
  if (cb || n_workers <= 1) {
    for (size_t k = 0; k < n_chains; ++k) run_one(k);
    return chains;
  }

  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  std::vector<std::exception_ptr> errors(n_workers);
  for (size_t w = 0; w < n_workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (size_t k = next.fetch_add(1); k < n_chains;
             k = next.fetch_add(1)) {
          run_one(k);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return chains;
}

LatentState draw_prior_state(Dataset& data, const Hyperparameters& hyper,
                             const RunConfig& config, Rng& rng) {
  for (int v : data.validated) {
    if (v >= 0) {
      throw UsageError(
          "prior simulation requires a dataset without validated labels");
    }
  }
  Hyperparameters h = hyper;
  h.finalize(data.dims.n_categories, config.variant);
  const Variant variant = config.variant;
  const bool with_psi =
      (variant == Variant::MissZIDM || variant == Variant::MissDM);
  const bool with_misclass = variant_models_misclassification(variant);
  const bool with_zi =
      variant_models_zero_inflation(variant) && !config.pin_zeta;

  const int t_count = data.dims.n_categories;
  const int v_total = data.dims.total_visits();
  const int m_total = data.dims.total_individuals();
  const int p_psi = static_cast<int>(data.x_indiv.cols());
  const int p_eta = static_cast<int>(data.x_site.cols());
  const int p_gamma = static_cast<int>(data.x_visit.cols());

  LatentState s;
  s.z.assign(static_cast<size_t>(m_total), 0);
  s.tau.assign(static_cast<size_t>(m_total), 0);
  s.omega_tau = Eigen::VectorXd::Ones(m_total);
  s.zeta.assign(static_cast<size_t>(v_total) * static_cast<size_t>(t_count), 1);
  s.alpha = Eigen::MatrixXd::Zero(v_total, t_count);
  s.omega_zeta = Eigen::MatrixXd::Ones(v_total, t_count);
  s.mu = Eigen::VectorXd::Ones(v_total);
  s.a = Eigen::MatrixXd::Ones(t_count, t_count);
  s.u = Eigen::VectorXd::Ones(t_count);
  s.beta_psi = Eigen::MatrixXd::Zero(t_count, p_psi);
  s.beta_eta = Eigen::MatrixXd::Zero(t_count, p_eta);
  s.beta_gamma = Eigen::MatrixXd::Zero(t_count, p_gamma);
  s.beta_psi.col(0).setConstant(h.mu_psi);
  s.beta_eta.col(0).setConstant(h.mu_eta);
  s.beta_gamma.col(0).setConstant(h.mu_gamma);

  // Regression blocks from their Gaussian priors.
  const double sd_psi = std::sqrt(h.sigma2_psi);
  const double sd_eta = std::sqrt(h.sigma2_eta);
  const double sd_gamma = std::sqrt(h.sigma2_gamma);
  if (with_psi) {
    for (int t = 0; t < t_count; ++t) {
      for (int p = 0; p < p_psi; ++p) {
        s.beta_psi(t, p) = (p == 0 ? h.mu_psi : 0.0) + sd_psi * rng.normal();
      }
    }
  }
  for (int t = 0; t < t_count; ++t) {
    for (int p = 0; p < p_gamma; ++p) {
      s.beta_gamma(t, p) = (p == 0 ? h.mu_gamma : 0.0) + sd_gamma * rng.normal();
    }
  }

  // Classification rows.
  if (with_misclass) {
    for (int t = 0; t < t_count; ++t) {
      for (int c = 0; c < t_count; ++c) {
        s.a(t, c) = h.nu(t, c) > 0.0 ? rng.gamma(h.nu(t, c), 1.0) : 0.0;
      }
    }
  }

  // At-risk flags. A visit with all categories off has zero likelihood for
  // any true-class assignment, so the sampler can never reach that state;
  // its stationary law is the joint density restricted to "every visit has
  // an at-risk category", which tilts the beta_eta marginal by the
  // probability of that event. Match it by rejection on the *whole*
  // (beta_eta, zeta) block rather than per visit.
  if (with_zi) {
    bool valid = false;
    while (!valid) {
      for (int t = 0; t < t_count; ++t) {
        for (int p = 0; p < p_eta; ++p) {
          s.beta_eta(t, p) = (p == 0 ? h.mu_eta : 0.0) + sd_eta * rng.normal();
        }
      }
      valid = true;
      for (int v = 0; v < v_total; ++v) {
        const int i = data.site_of_visit[static_cast<size_t>(v)];
        bool any_on = false;
        for (int t = 0; t < t_count; ++t) {
          const double eta_it =
              logistic(data.x_site.row(i).dot(s.beta_eta.row(t)));
          const std::uint8_t on =
              static_cast<std::uint8_t>(rng.bernoulli(eta_it));
          s.set_zeta(v, t, on);
          any_on = any_on || on;
        }
        valid = valid && any_on;
      }
    }
  }

  for (int v = 0; v < v_total; ++v) {
    for (int t = 0; t < t_count; ++t) {
      if (s.zeta_at(v, t)) {
        const double gam =
            std::exp(data.x_visit.row(v).dot(s.beta_gamma.row(t)));
        s.alpha(v, t) = std::max(rng.gamma(gam, 1.0), kAlphaFloor);
      } else {
        s.alpha(v, t) = 0.0;
      }
    }
  }

  // True classes, guess flags, observed labels.
  for (int l = 0; l < m_total; ++l) {
    const int v = data.visit_of_individual[static_cast<size_t>(l)];
    s.z[static_cast<size_t>(l)] = draw_row_categorical(rng, s.alpha, v);
    const int t = s.z[static_cast<size_t>(l)];
    std::uint8_t guess = 1;
    if (variant == Variant::ZIDM) {
      guess = 0;
    } else if (with_psi) {
      const double psi = logistic(data.x_indiv.row(l).dot(s.beta_psi.row(t)));
      guess = static_cast<std::uint8_t>(rng.bernoulli(psi));
    }
    s.tau[static_cast<size_t>(l)] = guess;
    data.observed[static_cast<size_t>(l)] =
        guess ? draw_row_categorical(rng, s.a, t) : t;
  }

  // Augmentation variables from their full conditionals.
  for (int v = 0; v < v_total; ++v) {
    const double alpha_bar = s.alpha.row(v).sum();
    s.mu(v) = rng.gamma(
        static_cast<double>(data.dims.individuals_per_visit[static_cast<size_t>(v)]),
        alpha_bar);
  }
  if (with_misclass) {
    Eigen::VectorXi m_t = Eigen::VectorXi::Zero(t_count);
    for (int l = 0; l < m_total; ++l) {
      if (config.count_all_individuals || s.tau[static_cast<size_t>(l)]) {
        ++m_t(s.z[static_cast<size_t>(l)]);
      }
    }
    for (int t = 0; t < t_count; ++t) {
      // Matches update_u: rows without routed individuals carry no
      // normalization augmentation.
      s.u(t) = m_t(t) > 0
                   ? rng.gamma(static_cast<double>(m_t(t)), s.a.row(t).sum())
                   : 0.0;
    }
  }
  if (with_psi) {
    for (int l = 0; l < m_total; ++l) {
      const int t = s.z[static_cast<size_t>(l)];
      s.omega_tau(l) = draw_polya_gamma(
          rng, data.x_indiv.row(l).dot(s.beta_psi.row(t)));
    }
  }
  if (with_zi) {
    for (int v = 0; v < v_total; ++v) {
      const int i = data.site_of_visit[static_cast<size_t>(v)];
      for (int t = 0; t < t_count; ++t) {
        s.omega_zeta(v, t) = draw_polya_gamma(
            rng, data.x_site.row(i).dot(s.beta_eta.row(t)));
      }
    }
  }
  return s;
}

void regenerate_observed(const LatentState& s, Dataset& data, Rng& rng) {
  const int m_total = data.dims.total_individuals();
  for (int l = 0; l < m_total; ++l) {
    const int t = s.z[static_cast<size_t>(l)];
    data.observed[static_cast<size_t>(l)] =
        s.tau[static_cast<size_t>(l)] ? draw_row_categorical(rng, s.a, t) : t;
  }
}

}  // namespace missmult
