#include "missmult/transforms.hpp"

#include <cmath>

#include "missmult/errors.hpp"

namespace missmult {

double logistic(double v) {
  if (v >= 0.0) {
    return 1.0 / (1.0 + std::exp(-v));
  }
  const double e = std::exp(v);
  return e / (1.0 + e);
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw NumericalError("logit: argument must lie strictly inside (0,1)");
  }
  return std::log(p) - std::log1p(-p);
}

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      if (v < 0.0 || !std::isfinite(v)) {
        throw NumericalError("normalize_rows: entries must be finite and nonnegative");
      }
      sum += v;
    }
    if (!(sum > 0.0)) {
      throw NumericalError("normalize_rows: row sums must be positive");
    }
    out.row(r) = m.row(r) / sum;
  }
  return out;
}

Eigen::MatrixXd compose_confusion(const Eigen::VectorXd& psi_bar,
                                  const Eigen::MatrixXd& theta) {
  if (psi_bar.size() != theta.rows() || theta.rows() != theta.cols()) {
    throw NumericalError("compose_confusion: dimension mismatch");
  }
  Eigen::MatrixXd star = theta;
  for (Eigen::Index t = 0; t < theta.rows(); ++t) {
    star.row(t) *= psi_bar(t);
    star(t, t) += 1.0 - psi_bar(t);
  }
  return star;
}

double dmdm_nu_diagonal(double mu_psi, int n_categories) {
  if (n_categories < 1) {
    throw NumericalError("dmdm_nu_diagonal: need at least one category");
  }
  const double p = logistic(mu_psi);
  const double t = static_cast<double>(n_categories);
  return (p / t + (1.0 - p)) * t / p;
}

}  // namespace missmult
