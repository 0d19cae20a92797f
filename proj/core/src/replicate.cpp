#include "missmult/replicate.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <thread>

namespace missmult {

namespace {

bool scores_psi(Variant v) {
  return v == Variant::MissZIDM || v == Variant::MissDM;
}

// Stacks one block's retained draws from every chain into a single matrix.
Eigen::MatrixXd stack_block(const std::vector<ChainOutput>& chains,
                            const Eigen::MatrixXd ChainOutput::* block) {
  Eigen::Index rows = 0;
  for (const ChainOutput& c : chains) rows += (c.*block).rows();
  Eigen::MatrixXd out(rows, (chains.front().*block).cols());
  Eigen::Index at = 0;
  for (const ChainOutput& c : chains) {
    out.middleRows(at, (c.*block).rows()) = c.*block;
    at += (c.*block).rows();
  }
  return out;
}

BlockMetrics score_block(const Eigen::MatrixXd& draws,
                         const Eigen::RowVectorXd& truth_row) {
  BlockMetrics m;
  m.present = true;
  const Eigen::RowVectorXd est = draws.colwise().mean();
  m.abs = abs_metric(est, truth_row);
  m.frob = frob_metric(est, truth_row);
  if (draws.rows() >= 100) {
    m.cov = coverage_metric(draws, truth_row.transpose());
  }
  return m;
}

// Flattens selected matrix rows in row-major order, matching the draw
// matrices' (outer, inner) column layout.
Eigen::RowVectorXd flatten_rows(const Eigen::MatrixXd& m,
                                const std::vector<int>& keep) {
  const auto inner = m.cols();
  if (keep.empty()) {
    Eigen::RowVectorXd flat(m.size());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      flat.segment(r * inner, inner) = m.row(r);
    }
    return flat;
  }
  Eigen::RowVectorXd flat(static_cast<Eigen::Index>(keep.size()) * inner);
  for (size_t k = 0; k < keep.size(); ++k) {
    flat.segment(static_cast<Eigen::Index>(k) * inner, inner) = m.row(keep[k]);
  }
  return flat;
}

}  // namespace

void StudyConfig::validate() const {
  if (scenario != 1 && scenario != 2) {
    throw UsageError("scenario must be 1 or 2");
  }
  if (variants.empty()) throw UsageError("study needs at least one variant");
  for (size_t i = 0; i < variants.size(); ++i) {
    for (size_t j = i + 1; j < variants.size(); ++j) {
      if (variants[i] == variants[j]) {
        throw UsageError("duplicate variant in study: " +
                         variant_to_string(variants[i]));
      }
    }
  }
  if (replicates < 1) throw UsageError("replicates must be positive");
  if (threads < 0) throw UsageError("threads must be nonnegative");
  run.validate();
  if (scenario == 1) {
    scenario1.validate();
  } else {
    Scenario2Config copy = scenario2;
    copy.finalize();  // also validates
  }
}

FitScore score_fit(const std::vector<ChainOutput>& chains,
                   const GroundTruth& truth, int scenario,
                   const std::vector<int>& kept_sites,
                   const std::vector<int>& kept_visits) {
  if (chains.empty()) throw UsageError("score_fit: no chains");
  const Variant v = chains.front().config.variant;

  FitScore s;
  s.ok = true;
  for (const ChainOutput& c : chains) s.runtime_seconds += c.runtime_seconds;

  if (variant_models_zero_inflation(v) && truth.eta_site.size() > 0) {
    s.eta = score_block(stack_block(chains, &ChainOutput::eta),
                        flatten_rows(truth.eta_site, kept_sites));
  }
  if (scores_psi(v) && truth.has_psi) {
    const auto t_count = chains.front().psi_bar.cols();
    s.psi = score_block(stack_block(chains, &ChainOutput::psi_bar),
                        Eigen::RowVectorXd::Constant(t_count, truth.psi));
  }
  if (scenario == 1 && truth.Theta.size() > 0) {
    s.Theta = score_block(stack_block(chains, &ChainOutput::Theta),
                          flatten_rows(truth.Theta, kept_visits));
  }
  if (variant_models_misclassification(v) && truth.theta_star.size() > 0) {
    s.theta_star = score_block(stack_block(chains, &ChainOutput::theta_star),
                               flatten_rows(truth.theta_star, {}));
  }
  return s;
}

StudyResult replicate_study(const StudyConfig& cfg_in) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg_in.validate();

  StudyResult result;
  result.config = cfg_in;
  if (cfg_in.scenario == 2) result.config.scenario2.finalize();
  const StudyConfig& cfg = result.config;

  const Hyperparameters hyper =
      !cfg.use_scenario_priors ? cfg.hyper
      : cfg.scenario == 1      ? scenario1_prior(cfg.scenario1)
                               : scenario2_prior(cfg.scenario2);

  // Generate every replicate up front, sequentially: datasets are then
  // independent of how the fits get scheduled.
  struct Prepared {
    Dataset fit_data;
    GroundTruth truth;
    std::vector<int> kept_sites, kept_visits;  // empty when nothing dropped
  };
  std::vector<Prepared> reps(static_cast<size_t>(cfg.replicates));
  for (int r = 0; r < cfg.replicates; ++r) {
    SimulatedData sim =
        cfg.scenario == 1
            ? gen_scenario1(cfg.scenario1, cfg.run.seed,
                            static_cast<std::uint32_t>(r))
            : gen_scenario2(cfg.scenario2, cfg.run.seed,
                            static_cast<std::uint32_t>(r));
    Prepared& p = reps[static_cast<size_t>(r)];
    p.truth = std::move(sim.truth);
    if (sim.empty_visits > 0) {
      KeptMaps maps = kept_after_drop(sim.data.dims);
      p.kept_sites = std::move(maps.sites);
      p.kept_visits = std::move(maps.visits);
      drop_empty_visits(sim.data);
    }
    p.fit_data = std::move(sim.data);
  }

  const size_t n_variants = cfg.variants.size();
  result.scores.assign(n_variants,
                       std::vector<FitScore>(static_cast<size_t>(cfg.replicates)));

  struct Task {
    size_t variant_index;
    int replicate;
  };
  std::vector<Task> tasks;
  tasks.reserve(n_variants * static_cast<size_t>(cfg.replicates));
  for (size_t vi = 0; vi < n_variants; ++vi) {
    for (int r = 0; r < cfg.replicates; ++r) tasks.push_back({vi, r});
  }

  auto run_task = [&](const Task& task) {
    FitScore& slot = result.scores[task.variant_index][static_cast<size_t>(task.replicate)];
    const Prepared& p = reps[static_cast<size_t>(task.replicate)];
    try {
      RunConfig run = cfg.run;
      run.variant = cfg.variants[task.variant_index];
      const auto f0 = std::chrono::steady_clock::now();
      const std::vector<ChainOutput> chains = run_chains(
          p.fit_data, hyper, run, static_cast<std::uint32_t>(task.replicate));
      slot = score_fit(chains, p.truth, cfg.scenario, p.kept_sites,
                       p.kept_visits);
      slot.runtime_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - f0)
              .count();
    } catch (const std::exception& e) {
      slot = FitScore{};
      slot.error = e.what();
    }
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const size_t n_workers =
      std::min(tasks.size(),
               static_cast<size_t>(cfg.threads > 0
                                       ? static_cast<unsigned>(cfg.threads)
                                       : hw));
  if (n_workers <= 1) {
    for (const Task& t : tasks) run_task(t);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (size_t w = 0; w < n_workers; ++w) {
      pool.emplace_back([&] {
        for (size_t i; (i = next.fetch_add(1)) < tasks.size();) {
          run_task(tasks[i]);
        }
      });
    }
    for (std::thread& th : pool) th.join();
  }

  for (size_t vi = 0; vi < n_variants; ++vi) {
    for (int r = 0; r < cfg.replicates; ++r) {
      const FitScore& s = result.scores[vi][static_cast<size_t>(r)];
      if (!s.ok) {
        ++result.n_failures;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "replicate %d, %s: ", r,
                      variant_to_string(cfg.variants[vi]).c_str());
        result.failure_log.push_back(buf + s.error);
      }
    }
  }
  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

BlockAverage average_block(const StudyResult& result, size_t variant_index,
                           BlockMetrics FitScore::* block) {
  BlockAverage avg;
  double abs_sum = 0.0, frob_sum = 0.0, cov_sum = 0.0;
  int cov_n = 0;
  for (const FitScore& s : result.scores.at(variant_index)) {
    if (!s.ok || !(s.*block).present) continue;
    ++avg.n;
    abs_sum += (s.*block).abs;
    frob_sum += (s.*block).frob;
    if (std::isfinite((s.*block).cov)) {
      cov_sum += (s.*block).cov;
      ++cov_n;
    }
  }
  if (avg.n > 0) {
    avg.present = true;
    avg.abs = abs_sum / avg.n;
    avg.frob = frob_sum / avg.n;
    if (cov_n > 0) avg.cov = cov_sum / cov_n;
  }
  return avg;
}

namespace {

constexpr BlockMetrics FitScore::* kBlocks[] = {
    &FitScore::eta, &FitScore::psi, &FitScore::Theta, &FitScore::theta_star};
constexpr const char* kBlockNames[] = {"eta", "psi", "Theta", "theta_star"};
// Shorter labels for the fixed-width table; csv columns keep the full names.
constexpr const char* kBlockDisplay[] = {"eta", "psi", "Theta", "theta*"};
constexpr const char* kMetricNames[] = {"ABS", "FROB", "COV"};

std::string fixed_cell(double value, int width) {
  char buf[48];
  if (std::isfinite(value)) {
    std::snprintf(buf, sizeof(buf), "%*.4f", width, value);
  } else {
    std::snprintf(buf, sizeof(buf), "%*s", width, "-");
  }
  return buf;
}

double pick(const BlockAverage& a, int metric) {
  return metric == 0 ? a.abs : metric == 1 ? a.frob : a.cov;
}

}  // namespace

std::string study_table(const StudyResult& result) {
  const StudyConfig& cfg = result.config;
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line),
                "scenario %d study: %d replicates, seed %llu, failures: %d\n",
                cfg.scenario, cfg.replicates,
                static_cast<unsigned long long>(cfg.run.seed),
                result.n_failures);
  out += line;

  const int name_w = 10, cell_w = 14, fits_w = 7;
  std::snprintf(line, sizeof(line), "%-*s", name_w, "variant");
  out += line;
  for (int b = 0; b < 4; ++b) {
    for (const char* m : kMetricNames) {
      char head[48];
      std::snprintf(head, sizeof(head), "%s(%s)", m, kBlockDisplay[b]);
      std::snprintf(line, sizeof(line), "%*s", cell_w, head);
      out += line;
    }
  }
  std::snprintf(line, sizeof(line), "%*s\n", fits_w, "fits");
  out += line;

  for (size_t vi = 0; vi < cfg.variants.size(); ++vi) {
    std::snprintf(line, sizeof(line), "%-*s", name_w,
                  variant_to_string(cfg.variants[vi]).c_str());
    out += line;
    int ok = 0;
    for (const FitScore& s : result.scores[vi]) ok += s.ok ? 1 : 0;
    for (int b = 0; b < 4; ++b) {
      const BlockAverage avg = average_block(result, vi, kBlocks[b]);
      for (int m = 0; m < 3; ++m) {
        out += fixed_cell(avg.present ? pick(avg, m)
                                      : std::numeric_limits<double>::quiet_NaN(),
                          cell_w);
      }
    }
    std::snprintf(line, sizeof(line), "%*d/%d\n", fits_w - 2, ok,
                  cfg.replicates);
    out += line;
  }
  return out;
}

std::string study_csv(const StudyResult& result) {
  const StudyConfig& cfg = result.config;
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line),
                "# scenario=%d replicates=%d seed=%llu failures=%d\n",
                cfg.scenario, cfg.replicates,
                static_cast<unsigned long long>(cfg.run.seed),
                result.n_failures);
  out += line;

  out += "variant,n_ok";
  for (int b = 0; b < 4; ++b) {
    for (const char* m : kMetricNames) {
      char head[48];
      std::snprintf(head, sizeof(head), ",%s_%s", m, kBlockNames[b]);
      for (char* p = head; *p; ++p) {
        *p = static_cast<char>(std::tolower(static_cast<unsigned char>(*p)));
      }
      out += head;
    }
  }
  out += '\n';

  for (size_t vi = 0; vi < cfg.variants.size(); ++vi) {
    out += variant_to_string(cfg.variants[vi]);
    int ok = 0;
    for (const FitScore& s : result.scores[vi]) ok += s.ok ? 1 : 0;
    std::snprintf(line, sizeof(line), ",%d", ok);
    out += line;
    for (int b = 0; b < 4; ++b) {
      const BlockAverage avg = average_block(result, vi, kBlocks[b]);
      for (int m = 0; m < 3; ++m) {
        const double v =
            avg.present ? pick(avg, m) : std::numeric_limits<double>::quiet_NaN();
        if (std::isfinite(v)) {
          std::snprintf(line, sizeof(line), ",%.17g", v);
          out += line;
        } else {
          out += ',';
        }
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace missmult
