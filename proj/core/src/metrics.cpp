#include "missmult/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace missmult {

namespace {

void require_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                        const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%s: shape mismatch (%ld x %ld vs %ld x %ld)", what,
                  static_cast<long>(a.rows()), static_cast<long>(a.cols()),
                  static_cast<long>(b.rows()), static_cast<long>(b.cols()));
    throw DataError(buf);
  }
}

// Splits a flattened column index back into (row, col) given the inner width.
std::pair<int, int> unflatten(int col, int inner) {
  return {col / inner, col % inner};
}

}  // namespace

std::string scalar_name(const char* block, int index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s[%d]", block, index + 1);
  return buf;
}

std::string scalar_name(const char* block, int outer, int inner) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s[%d][%d]", block, outer + 1, inner + 1);
  return buf;
}

double abs_metric(const Eigen::MatrixXd& estimate,
                  const Eigen::MatrixXd& truth) {
  require_same_shape(estimate, truth, "abs_metric");
  if (estimate.size() == 0) throw DataError("abs_metric: empty input");
  return (estimate - truth).array().abs().mean();
}

double frob_metric(const Eigen::MatrixXd& estimate,
                   const Eigen::MatrixXd& truth) {
  require_same_shape(estimate, truth, "frob_metric");
  if (estimate.size() == 0) throw DataError("frob_metric: empty input");
  return (estimate - truth).norm();
}

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw DataError("quantile_type7: empty sample");
  p = std::clamp(p, 0.0, 1.0);
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - std::floor(h);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double coverage_metric(const Eigen::MatrixXd& draws,
                       const Eigen::VectorXd& truth) {
  if (draws.size() == 0) throw DataError("coverage_metric: no draws");
  if (draws.cols() != truth.size()) {
    throw DataError("coverage_metric: draw columns and truth length differ");
  }
  if (draws.rows() < 100) {
    throw DataError(
        "coverage_metric: need at least 100 draws per scalar for a stable "
        "95% interval");
  }
  std::vector<double> column(static_cast<size_t>(draws.rows()));
  int hits = 0;
  for (int k = 0; k < draws.cols(); ++k) {
    Eigen::VectorXd::Map(column.data(), draws.rows()) = draws.col(k);
    const double lo = quantile_type7(column, 0.025);
    const double hi = quantile_type7(column, 0.975);
    if (truth[k] >= lo && truth[k] <= hi) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(draws.cols());
}

double gelman_rubin_scalar(const Eigen::MatrixXd& draws) {
  const auto n = draws.rows();
  const auto m = draws.cols();
  if (m < 2) {
    throw UsageError(
        "gelman_rubin: need at least two chains to compare between-chain "
        "and within-chain variation");
  }
  if (n < 2) throw UsageError("gelman_rubin: need at least two draws");

  const Eigen::RowVectorXd means = draws.colwise().mean();
  const double grand = means.mean();
  double w = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    w += (draws.col(j).array() - means[j]).square().sum() /
         static_cast<double>(n - 1);
  }
  w /= static_cast<double>(m);
  const double b = static_cast<double>(n) *
                   (means.array() - grand).square().sum() /
                   static_cast<double>(m - 1);
  if (w <= 0.0) {
    return b <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  const double nd = static_cast<double>(n);
  const double md = static_cast<double>(m);
  const double v = (nd - 1.0) / nd * w + (md + 1.0) / (md * nd) * b;
  return std::sqrt(v / w);
}

namespace {

// Pulls one scalar's draws from every chain into an n x m matrix.
Eigen::MatrixXd stack_scalar(const std::vector<ChainOutput>& chains,
                             const Eigen::MatrixXd ChainOutput::* block,
                             int col) {
  const auto n = (chains.front().*block).rows();
  Eigen::MatrixXd out(n, static_cast<Eigen::Index>(chains.size()));
  for (size_t j = 0; j < chains.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = (chains[j].*block).col(col);
  }
  return out;
}

void check_chain_set(const std::vector<ChainOutput>& chains, int min_chains) {
  if (static_cast<int>(chains.size()) < min_chains) {
    throw UsageError(min_chains >= 2
                         ? "diagnostics need at least two chains"
                         : "no chains given");
  }
  const ChainOutput& ref = chains.front();
  for (const ChainOutput& c : chains) {
    if (c.n_categories != ref.n_categories || c.n_visits != ref.n_visits ||
        c.n_sites != ref.n_sites || c.beta_gamma.cols() != ref.beta_gamma.cols() ||
        c.beta_psi.cols() != ref.beta_psi.cols() ||
        c.beta_eta.cols() != ref.beta_eta.cols()) {
      throw UsageError("chains describe different models and cannot be pooled");
    }
  }
}

}  // namespace

std::vector<DiagnosticRow> gelman_rubin(const std::vector<ChainOutput>& chains) {
  check_chain_set(chains, 2);
  const ChainOutput& ref = chains.front();
  for (const ChainOutput& c : chains) {
    if (c.n_retained != ref.n_retained) {
      throw UsageError("gelman_rubin: chains have different retained counts");
    }
  }

  std::vector<DiagnosticRow> rows;
  const int t_count = std::max(ref.n_categories, 1);

  auto add_pair = [&](const Eigen::MatrixXd ChainOutput::* block,
                      const char* name, int inner) {
    for (int k = 0; k < (ref.*block).cols(); ++k) {
      const auto [i, j] = unflatten(k, inner);
      rows.push_back(
          {scalar_name(name, i, j), gelman_rubin_scalar(stack_scalar(chains, block, k))});
    }
  };
  auto add_single = [&](const Eigen::MatrixXd ChainOutput::* block,
                        const char* name) {
    for (int k = 0; k < (ref.*block).cols(); ++k) {
      rows.push_back(
          {scalar_name(name, k), gelman_rubin_scalar(stack_scalar(chains, block, k))});
    }
  };

  add_pair(&ChainOutput::beta_psi, "beta_psi", std::max(ref.p_indiv, 1));
  add_pair(&ChainOutput::beta_eta, "beta_eta", std::max(ref.p_site, 1));
  add_pair(&ChainOutput::beta_gamma, "beta_gamma", std::max(ref.p_visit, 1));
  add_pair(&ChainOutput::theta, "theta", t_count);
  add_pair(&ChainOutput::theta_star, "theta_star", t_count);
  add_single(&ChainOutput::psi_bar, "psi_bar");
  return rows;
}

PosteriorSummary posterior_summary(const std::vector<ChainOutput>& chains) {
  check_chain_set(chains, 1);
  const ChainOutput& ref = chains.front();
  const int t_count = std::max(ref.n_categories, 1);

  PosteriorSummary out;
  std::vector<double> pooled;
  auto summarize_column = [&](const std::string& name) {
    SummaryRow row;
    row.name = name;
    double sum = 0.0;
    for (double x : pooled) sum += x;
    row.mean = sum / static_cast<double>(pooled.size());
    row.q025 = quantile_type7(pooled, 0.025);
    row.q975 = quantile_type7(pooled, 0.975);
    out.rows.push_back(std::move(row));
  };

  auto pool_real = [&](const Eigen::MatrixXd ChainOutput::* block, int col) {
    pooled.clear();
    for (const ChainOutput& c : chains) {
      const Eigen::MatrixXd& m = c.*block;
      for (Eigen::Index r = 0; r < m.rows(); ++r) pooled.push_back(m(r, col));
    }
  };

  auto add_pair = [&](const Eigen::MatrixXd ChainOutput::* block,
                      const char* name, int inner) {
    for (int k = 0; k < (ref.*block).cols(); ++k) {
      pool_real(block, k);
      if (pooled.empty()) continue;
      const auto [i, j] = unflatten(k, inner);
      summarize_column(scalar_name(name, i, j));
    }
  };
  auto add_single = [&](const Eigen::MatrixXd ChainOutput::* block,
                        const char* name) {
    for (int k = 0; k < (ref.*block).cols(); ++k) {
      pool_real(block, k);
      if (pooled.empty()) continue;
      summarize_column(scalar_name(name, k));
    }
  };

  add_pair(&ChainOutput::beta_psi, "beta_psi", std::max(ref.p_indiv, 1));
  add_pair(&ChainOutput::beta_eta, "beta_eta", std::max(ref.p_site, 1));
  add_pair(&ChainOutput::beta_gamma, "beta_gamma", std::max(ref.p_visit, 1));
  add_pair(&ChainOutput::a, "a", t_count);
  add_single(&ChainOutput::u, "u");
  add_pair(&ChainOutput::theta, "theta", t_count);
  add_pair(&ChainOutput::theta_star, "theta_star", t_count);
  add_single(&ChainOutput::psi_bar, "psi_bar");
  add_pair(&ChainOutput::eta, "eta", t_count);
  add_pair(&ChainOutput::Theta, "Theta", t_count);

  for (int k = 0; k < ref.zeta.cols(); ++k) {
    pooled.clear();
    for (const ChainOutput& c : chains) {
      for (Eigen::Index r = 0; r < c.zeta.rows(); ++r) {
        pooled.push_back(static_cast<double>(c.zeta(r, k)));
      }
    }
    if (pooled.empty()) continue;
    const auto [v, t] = unflatten(k, t_count);
    summarize_column(scalar_name("zeta", v, t));
  }
  return out;
}

}  // namespace missmult
