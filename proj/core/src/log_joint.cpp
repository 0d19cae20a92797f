#include "missmult/log_joint.hpp"

#include <cmath>
#include <limits>

#include "missmult/transforms.hpp"

namespace missmult {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogTwoPi = 1.8378770664093453;

double normal_block(const Eigen::MatrixXd& beta, double intercept_mean,
                    double sigma2) {
  double total = 0.0;
  for (Eigen::Index t = 0; t < beta.rows(); ++t) {
    for (Eigen::Index p = 0; p < beta.cols(); ++p) {
      const double m = (p == 0) ? intercept_mean : 0.0;
      const double r = beta(t, p) - m;
      total += -0.5 * r * r / sigma2 - 0.5 * (kLogTwoPi + std::log(sigma2));
    }
  }
  return total;
}
}  // namespace

double log_cosh(double x) {
  const double ax = std::fabs(x);
  return ax + std::log1p(std::exp(-2.0 * ax)) - 0.6931471805599453;
}

double log_logistic(double v) {
  return v >= 0.0 ? -std::log1p(std::exp(-v)) : v - std::log1p(std::exp(v));
}

double log_joint(const Dataset& data, const LatentState& state,
                 const Hyperparameters& hyper, Variant variant) {
  const int t_count = data.dims.n_categories;
  const int v_total = data.dims.total_visits();
  const int m_total = data.dims.total_individuals();
  const bool with_misclass = variant_models_misclassification(variant);
  const bool with_psi =
      variant == Variant::MissZIDM || variant == Variant::MissDM;
  const bool with_zero_inflation = variant_models_zero_inflation(variant);

  double total = 0.0;

  // Classification rows: prior on the gamma factors a.
  Eigen::MatrixXd theta;
  if (with_misclass) {
    theta = state.theta();
    for (int t = 0; t < t_count; ++t) {
      for (int c = 0; c < t_count; ++c) {
        const double nu = hyper.nu(t, c);
        const double a = state.a(t, c);
        if (nu == 0.0) {
          if (a != 0.0) return kNegInf;
          continue;
        }
        if (!(a > 0.0)) return kNegInf;
        total += (nu - 1.0) * std::log(a) - a - std::lgamma(nu);
      }
    }
  }

  // Per individual: observed label given the guess flag, the guess flag
  // itself, and the true-class draw from the visit composition.
  for (int l = 0; l < m_total; ++l) {
    const int v = data.visit_of_individual[l];
    const int z = state.z[l];
    const int y = data.observed[l];
    if (state.tau[l]) {
      if (!with_misclass) return kNegInf;
      const double th = theta(z, y);
      if (!(th > 0.0)) return kNegInf;
      total += std::log(th);
    } else if (y != z) {
      return kNegInf;
    }
    if (with_psi) {
      const double lin = data.x_indiv.row(l).dot(state.beta_psi.row(z));
      total += log_logistic(state.tau[l] ? lin : -lin);
    } else if (variant == Variant::DMDM && !state.tau[l]) {
      return kNegInf;  // dmdm treats every classification as a guess
    } else if (variant == Variant::ZIDM && state.tau[l]) {
      return kNegInf;  // zidm takes classifications at face value
    }
    const double alpha_z = state.alpha(v, z);
    const double alpha_bar = state.alpha.row(v).sum();
    if (!(alpha_z > 0.0) || !(alpha_bar > 0.0)) return kNegInf;
    total += std::log(alpha_z / alpha_bar);
  }

  // Per visit: at-risk flags and composition factors.
  for (int v = 0; v < v_total; ++v) {
    const int site = data.site_of_visit[v];
    for (int t = 0; t < t_count; ++t) {
      const bool at_risk = state.zeta_at(v, t) != 0;
      if (with_zero_inflation) {
        const double lin = data.x_site.row(site).dot(state.beta_eta.row(t));
        total += log_logistic(at_risk ? lin : -lin);
      } else if (!at_risk) {
        return kNegInf;  // this variant keeps every category at risk
      }
      const double alpha = state.alpha(v, t);
      if (at_risk) {
        if (!(alpha > 0.0)) return kNegInf;
        const double gamma =
            std::exp(data.x_visit.row(v).dot(state.beta_gamma.row(t)));
        total += (gamma - 1.0) * std::log(alpha) - alpha - std::lgamma(gamma);
      } else if (alpha != 0.0) {
        return kNegInf;
      }
    }
  }

  // Regression priors for the blocks the variant owns.
  if (with_psi) {
    total += normal_block(state.beta_psi, hyper.mu_psi, hyper.sigma2_psi);
  }
  if (with_zero_inflation) {
    total += normal_block(state.beta_eta, hyper.mu_eta, hyper.sigma2_eta);
  }
  total += normal_block(state.beta_gamma, hyper.mu_gamma, hyper.sigma2_gamma);
  return total;
}

}  // namespace missmult
