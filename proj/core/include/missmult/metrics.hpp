#pragma once
#include <Eigen/Dense>
#include <string>
#include <vector>

#include "missmult/errors.hpp"
#include "missmult/gibbs.hpp"

namespace missmult {

// Mean absolute deviation over all entries. Shapes must match.
double abs_metric(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth);

// Frobenius norm of the difference. Shapes must match.
double frob_metric(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth);

// Empirical quantile with linear interpolation between order statistics
// (the "type 7" rule: index h = (n - 1) p on the sorted sample). Takes the
// sample by value and sorts the copy; p is clamped to [0, 1].
double quantile_type7(std::vector<double> values, double p);

// Fraction of scalars whose equal-tailed 95% credible interval
// [q_.025, q_.975] of the draw column contains the true value, bounds
// inclusive. draws has one row per retained draw and one column per scalar;
// at least 100 rows are required for the interval to mean anything.
double coverage_metric(const Eigen::MatrixXd& draws,
                       const Eigen::VectorXd& truth);

// Potential scale reduction factor for one scalar. draws has one column per
// chain and one row per retained iteration (all chains equal length, at
// least two chains of at least two draws). Uses the classic between/within
// form with the (m + 1) / m inflation:
//   W = mean within-chain variance, B = n * variance of chain means,
//   rhat = sqrt(((n - 1) / n * W + (m + 1) / (m n) * B) / W).
// A scalar that is constant and identical across chains converges by
// definition (returns 1); constant chains that disagree return +infinity.
double gelman_rubin_scalar(const Eigen::MatrixXd& draws);

// Display names for flattened draw columns ("u[3]", "theta[2][1]");
// indices are 1-based. Shared by summaries, diagnostics, and draw files.
std::string scalar_name(const char* block, int index);
std::string scalar_name(const char* block, int outer, int inner);

struct DiagnosticRow {
  std::string name;
  double rhat = 0.0;
};

// Scale reduction for every monitored scalar: the regression blocks, the
// classification matrix and its composed version, and the mean guess rates.
// Per-visit and per-site latent blocks are deliberately not monitored.
// Requires >= 2 chains with identical shapes and retained counts.
std::vector<DiagnosticRow> gelman_rubin(const std::vector<ChainOutput>& chains);

struct SummaryRow {
  std::string name;
  double mean = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

struct PosteriorSummary {
  std::vector<SummaryRow> rows;
};

// Mean and equal-tailed 95% interval per scalar, pooling all chains'
// retained draws. Covers every recorded block, including per-site and
// per-visit ones; at-risk indicators summarize to inclusion frequencies.
PosteriorSummary posterior_summary(const std::vector<ChainOutput>& chains);

}  // namespace missmult
