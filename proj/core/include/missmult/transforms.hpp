#pragma once
#include <Eigen/Dense>

namespace missmult {

// Numerically stable inverse logit.
double logistic(double v);

// Log-odds; p must lie strictly inside (0,1).
double logit(double p);

// Row-normalize a nonnegative matrix; throws NumericalError on a negative
// entry or a row that sums to zero.
Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& m);

// Observed-classification probabilities implied by per-class
// misclassification probabilities psi and classification matrix theta:
//   star(t,c) = (1 - psi_t) * 1{t==c} + psi_t * theta(t,c).
Eigen::MatrixXd compose_confusion(const Eigen::VectorXd& psi_bar,
                                  const Eigen::MatrixXd& theta);

// Diagonal concentration for the DMDM comparator chosen so its prior
// probability of a correct classification matches the hit-miss models:
//   (p/T + (1-p)) * T / p with p = logistic(mu_psi).
double dmdm_nu_diagonal(double mu_psi, int n_categories);

}  // namespace missmult
