#include "missmult/state.hpp"

#include <cmath>

#include "missmult/errors.hpp"
#include "missmult/transforms.hpp"

namespace missmult {

Eigen::MatrixXd LatentState::theta() const { return normalize_rows(a); }

Eigen::MatrixXd LatentState::visit_composition() const {
  return normalize_rows(alpha);
}

LatentState initial_state(const Dataset& data, const Hyperparameters& hyper,
                          const RunConfig& config, Rng& rng) {
  const int t_count = data.dims.n_categories;
  const int v_total = data.dims.total_visits();
  const int m_total = data.dims.total_individuals();
  const Variant variant = config.variant;

  LatentState s;
  s.z.resize(m_total);
  s.tau.resize(m_total);
  for (int l = 0; l < m_total; ++l) {
    int z_init = data.observed[l];
    if (variant != Variant::ZIDM && data.validated[l] >= 0) {
      z_init = data.validated[l];
    }
    s.z[l] = z_init;
    if (variant == Variant::DMDM || variant == Variant::MissDM ||
        variant == Variant::MissZIDM) {
      s.tau[l] = (variant == Variant::DMDM)
                     ? std::uint8_t{1}
                     : static_cast<std::uint8_t>(z_init != data.observed[l]);
    } else {
      s.tau[l] = 0;  // classifications taken at face value
    }
  }
  s.omega_tau = Eigen::VectorXd::Ones(m_total);

  s.zeta.assign(static_cast<size_t>(v_total) * t_count, 1);
  s.alpha = Eigen::MatrixXd::Ones(v_total, t_count);
  s.omega_zeta = Eigen::MatrixXd::Ones(v_total, t_count);
  s.mu.resize(v_total);
  for (int v = 0; v < v_total; ++v) s.mu(v) = rng.exponential();

  s.a.resize(t_count, t_count);
  for (int t = 0; t < t_count; ++t) {
    for (int c = 0; c < t_count; ++c) {
      s.a(t, c) = hyper.nu(t, c) > 0.0 ? std::max(hyper.nu(t, c), 1e-3) : 0.0;
    }
  }
  s.u.resize(t_count);
  for (int t = 0; t < t_count; ++t) s.u(t) = rng.exponential();

  s.beta_psi = Eigen::MatrixXd::Zero(t_count, data.x_indiv.cols());
  s.beta_psi.col(0).setConstant(hyper.mu_psi);
  s.beta_eta = Eigen::MatrixXd::Zero(t_count, data.x_site.cols());
  s.beta_eta.col(0).setConstant(hyper.mu_eta);
  s.beta_gamma = Eigen::MatrixXd::Zero(t_count, data.x_visit.cols());
  s.beta_gamma.col(0).setConstant(hyper.mu_gamma);
  return s;
}

Eigen::MatrixXi z_counts_per_visit(const LatentState& state,
                                   const Dataset& data) {
  Eigen::MatrixXi counts =
      Eigen::MatrixXi::Zero(data.dims.total_visits(), data.dims.n_categories);
  for (size_t l = 0; l < state.z.size(); ++l) {
    counts(data.visit_of_individual[l], state.z[l]) += 1;
  }
  return counts;
}

Eigen::MatrixXi misclassification_tallies(const LatentState& state,
                                          const Dataset& data) {
  Eigen::MatrixXi tallies =
      Eigen::MatrixXi::Zero(data.dims.n_categories, data.dims.n_categories);
  for (size_t l = 0; l < state.z.size(); ++l) {
    if (state.tau[l]) tallies(state.z[l], data.observed[l]) += 1;
  }
  return tallies;
}

namespace {
void require(bool ok, const char* what) {
  if (!ok) throw NumericalError(std::string("state invariant violated: ") + what);
}
}  // namespace

void check_state_invariants(const LatentState& state, const Dataset& data,
                            Variant variant) {
  const int t_count = data.dims.n_categories;
  const int v_total = data.dims.total_visits();
  const int m_total = data.dims.total_individuals();

  require(static_cast<int>(state.z.size()) == m_total, "z length");
  require(static_cast<int>(state.tau.size()) == m_total, "tau length");
  require(state.omega_tau.size() == m_total, "omega_tau length");
  require(static_cast<int>(state.zeta.size()) ==
              static_cast<long>(v_total) * t_count,
          "zeta length");
  require(state.alpha.rows() == v_total && state.alpha.cols() == t_count,
          "alpha shape");
  require(state.omega_zeta.rows() == v_total &&
              state.omega_zeta.cols() == t_count,
          "omega_zeta shape");
  require(state.mu.size() == v_total, "mu length");
  require(state.a.rows() == t_count && state.a.cols() == t_count, "a shape");
  require(state.u.size() == t_count, "u length");

  for (int l = 0; l < m_total; ++l) {
    require(state.z[l] >= 0 && state.z[l] < t_count, "z range");
    require(state.tau[l] == 0 || state.tau[l] == 1, "tau binary");
    if (!state.tau[l]) {
      require(state.z[l] == data.observed[l],
              "tau = 0 forces z to match the observation");
    }
    if (variant != Variant::ZIDM && data.validated[l] >= 0) {
      require(state.z[l] == data.validated[l], "validated class pins z");
    }
    if (variant == Variant::ZIDM) {
      require(state.tau[l] == 0 && state.z[l] == data.observed[l],
              "zidm takes classifications at face value");
    }
    if (variant == Variant::DMDM) {
      require(state.tau[l] == 1, "dmdm treats every classification as a guess");
    }
    require(state.omega_tau(l) > 0.0 && std::isfinite(state.omega_tau(l)),
            "omega_tau positive");
  }

  Eigen::MatrixXi n_vt = z_counts_per_visit(state, data);
  for (int v = 0; v < v_total; ++v) {
    int at_risk = 0;
    for (int t = 0; t < t_count; ++t) {
      const std::uint8_t zf = state.zeta_at(v, t);
      require(zf == 0 || zf == 1, "zeta binary");
      at_risk += zf;
      if (zf) {
        require(state.alpha(v, t) > 0.0 && std::isfinite(state.alpha(v, t)),
                "alpha positive where at risk");
      } else {
        require(state.alpha(v, t) == 0.0, "alpha zero where not at risk");
        require(n_vt(v, t) == 0, "observed individuals force at-risk");
      }
      if (variant == Variant::MissDM || variant == Variant::DMDM) {
        require(zf == 1, "variant keeps every category at risk");
      }
      require(state.omega_zeta(v, t) > 0.0 &&
                  std::isfinite(state.omega_zeta(v, t)),
              "omega_zeta positive");
    }
    require(at_risk >= 1, "each visit needs at least one category at risk");
    require(state.mu(v) > 0.0 && std::isfinite(state.mu(v)), "mu positive");
  }

  for (int t = 0; t < t_count; ++t) {
    double row_sum = 0.0;
    for (int c = 0; c < t_count; ++c) {
      require(state.a(t, c) >= 0.0 && std::isfinite(state.a(t, c)),
              "a nonnegative");
      row_sum += state.a(t, c);
    }
    require(row_sum > 0.0, "a rows must have positive mass");
    // u is exactly zero for rows no individual routes through (they carry no
    // normalization augmentation) and strictly positive otherwise.
    require(state.u(t) >= 0.0 && std::isfinite(state.u(t)),
            "u nonnegative");
  }
  require(state.beta_psi.allFinite() && state.beta_eta.allFinite() &&
              state.beta_gamma.allFinite(),
          "regression coefficients finite");
}

}  // namespace missmult
