#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "missmult/hyper.hpp"
#include "missmult/rng.hpp"
#include "missmult/state.hpp"
#include "missmult/types.hpp"

namespace missmult {

// Thinned post-burn-in draws of one chain plus derived quantities. Draw
// matrices have one row per retained sweep; blocks a variant does not own
// are left empty. Flattened column layouts:
//   beta_*      (t, p) -> t * P + p
//   a, theta,
//   theta_star  (t, c) -> t * C + c
//   eta         (i, t) -> i * T + t
//   Theta, zeta (v, t) -> v * T + t
struct ChainOutput {
  RunConfig config;
  int chain_index = 0;
  std::uint64_t stream = 0;
  int n_retained = 0;

  // Problem dimensions, so draws stay interpretable standalone.
  int n_categories = 0;  // T
  int n_sites = 0;       // N
  int n_visits = 0;      // V
  int p_indiv = 0;       // design widths including the intercept
  int p_site = 0;
  int p_visit = 0;

  Eigen::MatrixXd beta_psi;
  Eigen::MatrixXd beta_eta;
  Eigen::MatrixXd beta_gamma;
  Eigen::MatrixXd a;
  Eigen::MatrixXd u;
  Eigen::MatrixXd theta;
  Eigen::MatrixXd theta_star;
  Eigen::MatrixXd psi_bar;
  Eigen::MatrixXd eta;
  Eigen::MatrixXd Theta;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> zeta;

  Eigen::VectorXd accept_rate_beta_gamma;  // per category, post burn-in
  double runtime_seconds = 0.0;
};

// Stream-id layout shared by every seeded task: one 64-bit stream per
// (replicate, role, chain) triple. Role 0 is data generation; fits use
// 1 + variant code so different variants never share a stream.
std::uint64_t make_stream(std::uint32_t replicate, std::uint16_t role,
                          std::uint16_t chain);
std::uint16_t fit_role(Variant variant);

// The Metropolis-Hastings-within-Gibbs sampler. The object is an immutable
// view of (data, hyperparameters, run controls); all mutable state lives in
// LatentState and the caller's Rng, so chains and replicates can share one
// sampler across threads.
//
// Unit updates are exposed for tests and the correctness harness; each is
// one step of the sweep and reads whatever it conditions on live from the
// state and data.
class GibbsSampler {
 public:
  GibbsSampler(const Dataset& data, const Hyperparameters& hyper,
               const RunConfig& config);

  const Dataset& data() const { return *data_; }
  const Hyperparameters& hyper() const { return hyper_; }
  const RunConfig& config() const { return config_; }

  // --- per-visit phase -------------------------------------------------
  void update_mu(int v, LatentState& s, Rng& rng) const;
  void update_tau(int l, LatentState& s, Rng& rng) const;
  void update_z(int l, LatentState& s, Rng& rng) const;
  void update_omega_tau(int l, LatentState& s, Rng& rng) const;
  // n_vt = #{l in visit v : z_l = t}; pass the current count.
  void update_zeta_alpha(int v, int t, int n_vt, LatentState& s,
                         Rng& rng) const;
  void update_omega_zeta(int v, int t, LatentState& s, Rng& rng) const;

  // --- global phase ----------------------------------------------------
  // guess_count = tally of individuals routed through classification row t
  // (or cell (t, c)); the sweep computes them from the state.
  void update_u(int t, int guess_count, LatentState& s, Rng& rng) const;
  void update_a(int t, int c, int guess_count_tc, LatentState& s,
                Rng& rng) const;
  void update_beta_psi(int t, LatentState& s, Rng& rng) const;
  void update_beta_eta(int t, LatentState& s, Rng& rng) const;
  // Componentwise Gaussian random walk; steps points at P_gamma scales for
  // category t. Returns the number of accepted components.
  int update_beta_gamma(int t, LatentState& s, Rng& rng,
                        const double* steps) const;

  // One full sweep in the model's update order with fixed proposal scales
  // (config.mh_step_size everywhere). Used by tests and the correctness
  // harness; run_chain drives the adaptive version internally.
  void sweep(LatentState& s, Rng& rng) const;

  // Full run: initialize, burn in (with optional Robbins-Monro step-size
  // adaptation frozen at the end of burn-in), then collect thinned draws.
  // The callback, when set, sees every retained state.
  using DrawCallback = std::function<void(int retained_index,
                                          const LatentState& state)>;
  ChainOutput run_chain(int chain_index, std::uint64_t stream,
                        const DrawCallback& callback = nullptr) const;

 private:
  void sweep_impl(LatentState& s, Rng& rng, const Eigen::MatrixXd& steps,
                  Eigen::ArrayXXd* accept_tally) const;
  void update_z_with(int l, LatentState& s, Rng& rng,
                     std::vector<double>& weights) const;
  // As update_beta_gamma, optionally reporting per-component acceptance
  // indicators (needed by the burn-in step-size tuner).
  int update_beta_gamma_impl(int t, LatentState& s, Rng& rng,
                             const double* steps,
                             std::uint8_t* accepted) const;
  void record_draw(const LatentState& s, int row, ChainOutput& out) const;

  const Dataset* data_;
  Hyperparameters hyper_;
  RunConfig config_;
  bool with_psi_;             // misclassification regression present
  bool with_misclass_;        // classification rows present
  bool with_zero_inflation_;  // at-risk machinery present and not pinned
};

// Runs config.chains independent chains with per-chain streams derived from
// (replicate, variant, chain); chains are deterministic given their stream,
// so the result is identical whether they run sequentially or on a worker
// pool (threads > 1). A draw callback forces sequential execution since it
// would otherwise fire concurrently.
std::vector<ChainOutput> run_chains(const Dataset& data,
                                    const Hyperparameters& hyper,
                                    const RunConfig& config,
                                    std::uint32_t replicate = 0,
                                    const GibbsSampler::DrawCallback& cb = nullptr,
                                    int threads = 1);

// Draws a complete joint configuration from the model: regression blocks
// from their priors, at-risk flags with per-visit rejection of the all-off
// state, compositions, true classes, guess flags, observed labels (written
// into data.observed), and the augmentation variables from their
// conditionals. Requires a dataset without validated labels. This is the
// marginal-conditional simulator of the correctness harness.
LatentState draw_prior_state(Dataset& data, const Hyperparameters& hyper,
                             const RunConfig& config, Rng& rng);

// Redraws every observed label given the latent state (y = z for hits,
// a classification-row draw for misses); the successive-conditional
// simulator alternates this with sweeps.
void regenerate_observed(const LatentState& s, Dataset& data, Rng& rng);

}  // namespace missmult
