#include "missmult/io.hpp"

#include <algorithm>
#include <cerrno>
#include <climits>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "missmult/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace missmult {

namespace {

// ---------------------------------------------------------------- plumbing

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  size_t start = 0;
  while (start <= text.size()) {
    const size_t pos = text.find('\n', start);
    if (pos == std::string::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    std::string line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = pos + 1;
  }
  return lines;
}

double parse_double(const std::string& cell, const std::string& where) {
  const std::string s = trim(cell);
  if (s.empty()) throw DataError(where + ": empty numeric cell");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    throw DataError(where + ": '" + s + "' is not a finite number");
  }
  return v;
}

long long parse_int(const std::string& cell, const std::string& where) {
  const std::string s = trim(cell);
  if (s.empty()) throw DataError(where + ": empty integer cell");
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw DataError(where + ": '" + s + "' is not an integer");
  }
  return v;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw DataError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    throw DataError("cannot rename " + tmp.string() + " to " + path + ": " +
                    ec.message());
  }
}

// ------------------------------------------------------------ dataset load

namespace {

struct RawRecord {
  std::string indiv_id;
  int observed = -1;
  int validated = -1;
  int row = 0;  // 1-based file line for error messages
};

std::vector<std::string> load_class_labels(const std::string& path) {
  const auto lines = split_lines(read_file(path));
  if (lines.empty() || trim(lines[0]) != "class_label") {
    throw DataError(path + ": expected header 'class_label'");
  }
  std::vector<std::string> labels;
  std::set<std::string> seen;
  for (size_t i = 1; i < lines.size(); ++i) {
    const std::string label = trim(lines[i]);
    if (label.empty()) continue;
    if (!seen.insert(label).second) {
      throw DataError(path + " row " + std::to_string(i + 1) +
                      ": duplicate class label '" + label + "'");
    }
    labels.push_back(label);
  }
  if (labels.empty()) throw DataError(path + ": no class labels");
  return labels;
}

// Covariate table keyed by an id tuple; one row per key, all keys required.
Eigen::MatrixXd load_covariate_file(
    const std::string& path, int key_cols,
    const std::vector<std::string>& expected_keys, const char* level,
    std::vector<std::string>* names_out) {
  const auto lines = split_lines(read_file(path));
  if (lines.empty()) throw DataError(path + ": empty file");
  const auto header = split(lines[0], ',');
  if (static_cast<int>(header.size()) <= key_cols) {
    throw DataError(path + ": no covariate columns after the id columns");
  }
  const int q = static_cast<int>(header.size()) - key_cols;
  for (int c = 0; c < q; ++c) {
    names_out->push_back(trim(header[static_cast<size_t>(key_cols + c)]));
  }

  std::map<std::string, std::vector<double>> rows;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cells = split(lines[i], ',');
    const std::string where = path + " row " + std::to_string(i + 1);
    if (cells.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) +
                      " cells, found " + std::to_string(cells.size()));
    }
    std::string key;
    for (int k = 0; k < key_cols; ++k) {
      key += trim(cells[static_cast<size_t>(k)]);
      key += '\x1f';
    }
    std::vector<double> values(static_cast<size_t>(q));
    for (int c = 0; c < q; ++c) {
      values[static_cast<size_t>(c)] =
          parse_double(cells[static_cast<size_t>(key_cols + c)], where);
    }
    if (!rows.emplace(key, std::move(values)).second) {
      throw DataError(where + ": duplicate " + level + " id");
    }
  }

  if (rows.size() != expected_keys.size()) {
    for (const auto& [key, unused] : rows) {
      (void)unused;
      if (std::find(expected_keys.begin(), expected_keys.end(), key) ==
          expected_keys.end()) {
        std::string shown = key;
        std::replace(shown.begin(), shown.end(), '\x1f', '/');
        throw DataError(path + ": " + level + " id '" + shown +
                        "' does not appear in records.csv");
      }
    }
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(expected_keys.size()), q);
  for (size_t r = 0; r < expected_keys.size(); ++r) {
    const auto it = rows.find(expected_keys[r]);
    if (it == rows.end()) {
      std::string shown = expected_keys[r];
      std::replace(shown.begin(), shown.end(), '\x1f', '/');
      throw DataError(path + ": missing row for " + std::string(level) +
                      " '" + shown + "'");
    }
    for (int c = 0; c < q; ++c) x(static_cast<Eigen::Index>(r), c) = it->second[static_cast<size_t>(c)];
  }
  return x;
}

// Standardizes user columns in place (sample sd) and prepends the intercept.
Eigen::MatrixXd finish_covariates(Eigen::MatrixXd x, bool standardize,
                                  const std::string& path,
                                  CovariateInfo* info) {
  const auto n = x.rows();
  const auto q = x.cols();
  if (standardize) {
    info->standardized = true;
    for (Eigen::Index c = 0; c < q; ++c) {
      const double mean = x.col(c).mean();
      const double ss = (x.col(c).array() - mean).square().sum();
      const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
      if (!(sd > 0.0)) {
        throw DataError(path + ": column '" +
                        info->names[static_cast<size_t>(c)] +
                        "' is constant and cannot be standardized");
      }
      x.col(c) = (x.col(c).array() - mean) / sd;
      info->mean.push_back(mean);
      info->sd.push_back(sd);
    }
  }
  Eigen::MatrixXd full(n, q + 1);
  full.col(0).setOnes();
  full.rightCols(q) = x;
  return full;
}

}  // namespace

LoadedData load_dataset(const std::string& dir, bool standardize) {
  const fs::path base(dir);
  const std::string records_path = (base / "records.csv").string();
  const std::string classes_path = (base / "classes.csv").string();

  LoadedData out;
  out.data.class_labels = load_class_labels(classes_path);
  std::map<std::string, int> label_index;
  for (size_t i = 0; i < out.data.class_labels.size(); ++i) {
    label_index[out.data.class_labels[i]] = static_cast<int>(i);
  }

  const auto lines = split_lines(read_file(records_path));
  if (lines.empty()) throw DataError(records_path + ": empty file");
  {
    const auto header = split(lines[0], ',');
    const std::vector<std::string> want{"site_id", "visit_id", "individual_id",
                                        "observed_class", "validated_class"};
    if (header.size() != want.size()) {
      throw DataError(records_path + ": expected 5 header columns");
    }
    for (size_t i = 0; i < want.size(); ++i) {
      if (trim(header[i]) != want[i]) {
        throw DataError(records_path + ": header column " +
                        std::to_string(i + 1) + " must be '" + want[i] + "'");
      }
    }
  }

  // First pass: group records by site and visit in order of appearance.
  std::vector<std::string> site_ids;
  std::map<std::string, int> site_index;
  std::vector<std::vector<std::string>> visit_ids_by_site;
  std::vector<std::map<std::string, int>> visit_index_by_site;
  std::vector<std::vector<std::vector<RawRecord>>> records;  // [site][visit]
  std::vector<std::vector<std::set<std::string>>> seen_indiv;

  int n_rows = 0;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const std::string where =
        records_path + " row " + std::to_string(i + 1);
    const auto cells = split(lines[i], ',');
    if (cells.size() != 5) {
      throw DataError(where + ": expected 5 cells, found " +
                      std::to_string(cells.size()));
    }
    const std::string site = trim(cells[0]);
    const std::string visit = trim(cells[1]);
    const std::string indiv = trim(cells[2]);
    const std::string obs_label = trim(cells[3]);
    const std::string val_label = trim(cells[4]);
    if (site.empty() || visit.empty() || indiv.empty()) {
      throw DataError(where + ": empty id cell");
    }

    auto [site_it, site_new] =
        site_index.emplace(site, static_cast<int>(site_ids.size()));
    if (site_new) {
      site_ids.push_back(site);
      visit_ids_by_site.emplace_back();
      visit_index_by_site.emplace_back();
      records.emplace_back();
      seen_indiv.emplace_back();
    }
    const int si = site_it->second;

    auto [visit_it, visit_new] = visit_index_by_site[static_cast<size_t>(si)].emplace(
        visit, static_cast<int>(visit_ids_by_site[static_cast<size_t>(si)].size()));
    if (visit_new) {
      visit_ids_by_site[static_cast<size_t>(si)].push_back(visit);
      records[static_cast<size_t>(si)].emplace_back();
      seen_indiv[static_cast<size_t>(si)].emplace_back();
    }
    const int vi = visit_it->second;

    if (!seen_indiv[static_cast<size_t>(si)][static_cast<size_t>(vi)].insert(indiv).second) {
      throw DataError(where + ": duplicate record for (site " + site +
                      ", visit " + visit + ", individual " + indiv + ")");
    }

    RawRecord rec;
    rec.indiv_id = indiv;
    rec.row = static_cast<int>(i + 1);
    const auto obs_it = label_index.find(obs_label);
    if (obs_it == label_index.end()) {
      throw DataError(where + ": observed class label '" + obs_label +
                      "' is not in classes.csv");
    }
    rec.observed = obs_it->second;
    if (!val_label.empty()) {
      const auto val_it = label_index.find(val_label);
      if (val_it == label_index.end()) {
        throw DataError(where + ": validated class label '" + val_label +
                        "' is not in classes.csv");
      }
      rec.validated = val_it->second;
    }
    records[static_cast<size_t>(si)][static_cast<size_t>(vi)].push_back(
        std::move(rec));
    ++n_rows;
  }
  if (n_rows == 0) throw DataError(records_path + ": no data rows");

  // Second pass: assemble the ragged panel in appearance order.
  Dataset& d = out.data;
  d.dims.n_sites = static_cast<int>(site_ids.size());
  d.dims.n_categories = static_cast<int>(d.class_labels.size());
  std::vector<std::string> site_keys, visit_keys, indiv_keys;
  for (size_t s = 0; s < site_ids.size(); ++s) {
    d.dims.visits_per_site.push_back(
        static_cast<int>(visit_ids_by_site[s].size()));
    site_keys.push_back(site_ids[s] + '\x1f');
    for (size_t v = 0; v < visit_ids_by_site[s].size(); ++v) {
      out.visit_ids.push_back(visit_ids_by_site[s][v]);
      visit_keys.push_back(site_ids[s] + '\x1f' + visit_ids_by_site[s][v] +
                           '\x1f');
      d.dims.individuals_per_visit.push_back(
          static_cast<int>(records[s][v].size()));
      for (const RawRecord& rec : records[s][v]) {
        d.observed.push_back(rec.observed);
        d.validated.push_back(rec.validated);
        indiv_keys.push_back(site_ids[s] + '\x1f' + visit_ids_by_site[s][v] +
                             '\x1f' + rec.indiv_id + '\x1f');
      }
    }
  }
  d.dims.finalize();
  out.site_ids = std::move(site_ids);

  // Covariates: optional files, intercept-only otherwise.
  const auto try_load = [&](const char* file, int key_cols,
                            const std::vector<std::string>& keys,
                            const char* level, CovariateInfo* info) {
    const fs::path p = base / file;
    if (!fs::exists(p)) {
      return Eigen::MatrixXd(
          Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(keys.size()), 1));
    }
    Eigen::MatrixXd raw =
        load_covariate_file(p.string(), key_cols, keys, level, &info->names);
    return finish_covariates(std::move(raw), standardize, p.string(), info);
  };
  d.x_site = try_load("site_covariates.csv", 1, site_keys, "site",
                      &out.site_cov);
  d.x_visit = try_load("visit_covariates.csv", 2, visit_keys, "visit",
                       &out.visit_cov);
  d.x_indiv = try_load("individual_covariates.csv", 3, indiv_keys,
                       "individual", &out.indiv_cov);

  d.finalize();
  d.validate();
  return out;
}

void write_dataset(const std::string& dir, const Dataset& data) {
  fs::create_directories(dir);
  const fs::path base(dir);

  std::string classes = "class_label\n";
  for (const std::string& label : data.class_labels) {
    classes += label;
    classes += '\n';
  }
  write_file_atomic((base / "classes.csv").string(), classes);

  std::string records =
      "site_id,visit_id,individual_id,observed_class,validated_class\n";
  int m = 0;
  for (int i = 0; i < data.dims.n_sites; ++i) {
    for (int w = 0; w < data.dims.visits_per_site[static_cast<size_t>(i)];
         ++w) {
      const int v = data.dims.visit_index(i, w);
      const int l_count =
          data.dims.individuals_per_visit[static_cast<size_t>(v)];
      for (int l = 0; l < l_count; ++l, ++m) {
        records += std::to_string(i + 1);
        records += ',';
        records += std::to_string(w + 1);
        records += ',';
        records += std::to_string(l + 1);
        records += ',';
        records += data.class_labels[static_cast<size_t>(
            data.observed[static_cast<size_t>(m)])];
        records += ',';
        const int val = data.validated[static_cast<size_t>(m)];
        if (val >= 0) {
          records += data.class_labels[static_cast<size_t>(val)];
        }
        records += '\n';
      }
    }
  }
  write_file_atomic((base / "records.csv").string(), records);

  // Covariate files only when there is more than the intercept.
  const auto write_cov = [&](const char* file, const Eigen::MatrixXd& x,
                             int level) {
    if (x.cols() <= 1) return;
    std::string text = level == 0   ? "site_id"
                       : level == 1 ? "site_id,visit_id"
                                    : "site_id,visit_id,individual_id";
    for (Eigen::Index c = 1; c < x.cols(); ++c) {
      text += ",x" + std::to_string(c);
    }
    text += '\n';
    Eigen::Index row = 0;
    for (int i = 0; i < data.dims.n_sites; ++i) {
      const int visits = data.dims.visits_per_site[static_cast<size_t>(i)];
      if (level == 0) {
        text += std::to_string(i + 1);
        for (Eigen::Index c = 1; c < x.cols(); ++c) {
          text += ',';
          text += format_g17(x(row, c));
        }
        text += '\n';
        ++row;
        continue;
      }
      for (int w = 0; w < visits; ++w) {
        const int v = data.dims.visit_index(i, w);
        if (level == 1) {
          text += std::to_string(i + 1) + ',' + std::to_string(w + 1);
          for (Eigen::Index c = 1; c < x.cols(); ++c) {
            text += ',';
            text += format_g17(x(row, c));
          }
          text += '\n';
          ++row;
          continue;
        }
        const int l_count =
            data.dims.individuals_per_visit[static_cast<size_t>(v)];
        for (int l = 0; l < l_count; ++l) {
          text += std::to_string(i + 1) + ',' + std::to_string(w + 1) + ',' +
                  std::to_string(l + 1);
          for (Eigen::Index c = 1; c < x.cols(); ++c) {
            text += ',';
            text += format_g17(x(row, c));
          }
          text += '\n';
          ++row;
        }
      }
    }
    write_file_atomic((base / file).string(), text);
  };
  write_cov("site_covariates.csv", data.x_site, 0);
  write_cov("visit_covariates.csv", data.x_visit, 1);
  write_cov("individual_covariates.csv", data.x_indiv, 2);
}

// ---------------------------------------------------------------- config

namespace {

bool parse_bool(const std::string& value, const std::string& where) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw UsageError(where + ": expected true/false, got '" + value + "'");
}

std::vector<double> parse_double_list(const std::string& value,
                                      const std::string& where) {
  std::vector<double> out;
  for (const std::string& cell : split(value, ',')) {
    try {
      out.push_back(parse_double(cell, where));
    } catch (const DataError& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

double config_double(const std::string& value, const std::string& where) {
  try {
    return parse_double(value, where);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
}

int config_int(const std::string& value, const std::string& where) {
  try {
    const long long v = parse_int(value, where);
    if (v < INT_MIN || v > INT_MAX) {
      throw UsageError(where + ": integer out of range");
    }
    return static_cast<int>(v);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
}

std::uint64_t config_u64(const std::string& value, const std::string& where) {
  const std::string s = trim(value);
  if (s.empty()) throw UsageError(where + ": empty integer");
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw UsageError(where + ": '" + s + "' is not an unsigned integer");
  }
  return v;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

}  // namespace

FileConfig parse_config_text(const std::string& text,
                             const std::string& origin) {
  FileConfig cfg;
  std::set<std::string> seen;
  const auto lines = split_lines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + " line " + std::to_string(i + 1);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(where + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw UsageError(where + ": empty key");
    if (value.empty()) throw UsageError(where + ": empty value for " + key);
    if (!seen.insert(key).second) {
      throw UsageError(where + ": duplicate key '" + key + "'");
    }

    // Run controls.
    if (key == "iterations") cfg.run.iterations = config_int(value, where);
    else if (key == "burn_in") cfg.run.burn_in = config_int(value, where);
    else if (key == "thin") cfg.run.thin = config_int(value, where);
    else if (key == "chains") cfg.run.chains = config_int(value, where);
    else if (key == "seed") cfg.run.seed = config_u64(value, where);
    else if (key == "model") cfg.run.variant = variant_from_string(value);
    else if (key == "mh_step_size") cfg.run.mh_step_size = config_double(value, where);
    else if (key == "adapt_mh") cfg.run.adapt_mh = parse_bool(value, where);
    else if (key == "pin_zeta") cfg.run.pin_zeta = parse_bool(value, where);
    else if (key == "count_all_individuals")
      cfg.run.count_all_individuals = parse_bool(value, where);
    // Priors.
    else if (key == "mu_psi") cfg.hyper.mu_psi = config_double(value, where);
    else if (key == "mu_eta") cfg.hyper.mu_eta = config_double(value, where);
    else if (key == "mu_gamma") cfg.hyper.mu_gamma = config_double(value, where);
    else if (key == "sigma2_psi") cfg.hyper.sigma2_psi = config_double(value, where);
    else if (key == "sigma2_eta") cfg.hyper.sigma2_eta = config_double(value, where);
    else if (key == "sigma2_gamma")
      cfg.hyper.sigma2_gamma = config_double(value, where);
    else if (key == "no_lucky_guess")
      cfg.hyper.no_lucky_guess = parse_bool(value, where);
    else if (key == "nu") cfg.nu_values = parse_double_list(value, where);
    else if (key == "gamma_prior") {
      // Convenience alias: a prior mean for the concentration itself; the
      // log-linear model wants it on the log scale.
      const double g = config_double(value, where);
      if (!(g > 0.0)) throw UsageError(where + ": gamma_prior must be positive");
      cfg.hyper.mu_gamma = std::log(g);
    }
    // Fit-time switches.
    else if (key == "standardize_covariates")
      cfg.standardize_covariates = parse_bool(value, where);
    else if (key == "write_binary") cfg.write_binary = parse_bool(value, where);
    // Scenario selection and knobs.
    else if (key == "scenario") cfg.scenario = config_int(value, where);
    else if (key == "scenario1_n_sites")
      cfg.scenario1.n_sites = config_int(value, where);
    else if (key == "scenario1_visits_per_site")
      cfg.scenario1.visits_per_site = config_int(value, where);
    else if (key == "scenario1_individuals_per_visit")
      cfg.scenario1.individuals_per_visit = config_int(value, where);
    else if (key == "scenario1_n_categories")
      cfg.scenario1.n_categories = config_int(value, where);
    else if (key == "scenario1_at_risk_prob")
      cfg.scenario1.at_risk_prob = config_double(value, where);
    else if (key == "scenario1_misclass_prob")
      cfg.scenario1.misclass_prob = config_double(value, where);
    else if (key == "scenario1_overdispersion")
      cfg.scenario1.overdispersion = config_double(value, where);
    else if (key == "scenario1_validation_fraction")
      cfg.scenario1.validation_fraction = config_double(value, where);
    else if (key == "scenario2_n_sites")
      cfg.scenario2.n_sites = config_int(value, where);
    else if (key == "scenario2_visits_per_site")
      cfg.scenario2.visits_per_site = config_int(value, where);
    else if (key == "scenario2_n_categories")
      cfg.scenario2.n_categories = config_int(value, where);
    else if (key == "scenario2_lambda")
      cfg.scenario2.lambda = to_vector(parse_double_list(value, where));
    else if (key == "scenario2_occupancy_prob")
      cfg.scenario2.occupancy_prob = to_vector(parse_double_list(value, where));
    else if (key == "scenario2_sigma")
      cfg.scenario2.sigma = config_double(value, where);
    else if (key == "scenario2_validation_fraction")
      cfg.scenario2.validation_fraction = config_double(value, where);
    else if (key == "scenario2_with_covariates")
      cfg.scenario2.with_covariates = parse_bool(value, where);
    else if (key == "scenario2_n_covariates")
      cfg.scenario2.n_covariates = config_int(value, where);
    // Study controls.
    else if (key == "variants") {
      cfg.variants.clear();
      for (const std::string& cell : split(value, ',')) {
        cfg.variants.push_back(variant_from_string(trim(cell)));
      }
    } else if (key == "replicates") {
      cfg.replicates = config_int(value, where);
    } else if (key == "threads") {
      cfg.threads = config_int(value, where);
    } else if (key == "use_scenario_priors") {
      cfg.use_scenario_priors = parse_bool(value, where);
    } else {
      throw UsageError(where + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

FileConfig parse_config_file(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  return parse_config_text(text, path);
}

void apply_nu(FileConfig& cfg, int n_categories) {
  if (cfg.nu_values.empty()) return;
  const size_t want =
      static_cast<size_t>(n_categories) * static_cast<size_t>(n_categories);
  if (cfg.nu_values.size() != want) {
    throw UsageError("nu needs " + std::to_string(want) +
                     " entries (row-major " + std::to_string(n_categories) +
                     "x" + std::to_string(n_categories) + "), got " +
                     std::to_string(cfg.nu_values.size()));
  }
  cfg.hyper.nu.resize(n_categories, n_categories);
  for (int r = 0; r < n_categories; ++r) {
    for (int c = 0; c < n_categories; ++c) {
      cfg.hyper.nu(r, c) =
          cfg.nu_values[static_cast<size_t>(r) * static_cast<size_t>(n_categories) +
                        static_cast<size_t>(c)];
    }
  }
}

std::string render_config(const FileConfig& cfg) {
  std::string out = "# missmult configuration (effective values)\n";
  auto kv = [&out](const char* key, const std::string& value) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  };
  auto kd = [&](const char* key, double v) { kv(key, format_g17(v)); };
  auto ki = [&](const char* key, long long v) { kv(key, std::to_string(v)); };
  auto kb = [&](const char* key, bool v) { kv(key, v ? "true" : "false"); };
  auto klist = [&](const char* key, const Eigen::VectorXd& v) {
    if (v.size() == 0) return;
    std::string joined;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i) joined += ',';
      joined += format_g17(v[i]);
    }
    kv(key, joined);
  };

  ki("iterations", cfg.run.iterations);
  ki("burn_in", cfg.run.burn_in);
  ki("thin", cfg.run.thin);
  ki("chains", cfg.run.chains);
  kv("seed", std::to_string(cfg.run.seed));
  kv("model", variant_to_string(cfg.run.variant));
  kd("mh_step_size", cfg.run.mh_step_size);
  kb("adapt_mh", cfg.run.adapt_mh);
  kb("pin_zeta", cfg.run.pin_zeta);
  kb("count_all_individuals", cfg.run.count_all_individuals);
  kd("mu_psi", cfg.hyper.mu_psi);
  kd("mu_eta", cfg.hyper.mu_eta);
  kd("mu_gamma", cfg.hyper.mu_gamma);
  kd("sigma2_psi", cfg.hyper.sigma2_psi);
  kd("sigma2_eta", cfg.hyper.sigma2_eta);
  kd("sigma2_gamma", cfg.hyper.sigma2_gamma);
  kb("no_lucky_guess", cfg.hyper.no_lucky_guess);
  if (!cfg.nu_values.empty()) {
    std::string joined;
    for (size_t i = 0; i < cfg.nu_values.size(); ++i) {
      if (i) joined += ',';
      joined += format_g17(cfg.nu_values[i]);
    }
    kv("nu", joined);
  }
  kb("standardize_covariates", cfg.standardize_covariates);
  kb("write_binary", cfg.write_binary);
  ki("scenario", cfg.scenario);
  ki("scenario1_n_sites", cfg.scenario1.n_sites);
  ki("scenario1_visits_per_site", cfg.scenario1.visits_per_site);
  ki("scenario1_individuals_per_visit", cfg.scenario1.individuals_per_visit);
  ki("scenario1_n_categories", cfg.scenario1.n_categories);
  kd("scenario1_at_risk_prob", cfg.scenario1.at_risk_prob);
  kd("scenario1_misclass_prob", cfg.scenario1.misclass_prob);
  kd("scenario1_overdispersion", cfg.scenario1.overdispersion);
  kd("scenario1_validation_fraction", cfg.scenario1.validation_fraction);
  ki("scenario2_n_sites", cfg.scenario2.n_sites);
  ki("scenario2_visits_per_site", cfg.scenario2.visits_per_site);
  ki("scenario2_n_categories", cfg.scenario2.n_categories);
  klist("scenario2_lambda", cfg.scenario2.lambda);
  klist("scenario2_occupancy_prob", cfg.scenario2.occupancy_prob);
  kd("scenario2_sigma", cfg.scenario2.sigma);
  kd("scenario2_validation_fraction", cfg.scenario2.validation_fraction);
  kb("scenario2_with_covariates", cfg.scenario2.with_covariates);
  ki("scenario2_n_covariates", cfg.scenario2.n_covariates);
  {
    std::string joined;
    for (size_t i = 0; i < cfg.variants.size(); ++i) {
      if (i) joined += ',';
      joined += variant_to_string(cfg.variants[i]);
    }
    kv("variants", joined);
  }
  ki("replicates", cfg.replicates);
  ki("threads", cfg.threads);
  kb("use_scenario_priors", cfg.use_scenario_priors);
  return out;
}

// ------------------------------------------------------------ ground truth

namespace {

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const ordered_json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string(what) + ": expected array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return {};
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[static_cast<size_t>(r)].size()) != cols) {
      throw DataError(std::string(what) + ": ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = j[static_cast<size_t>(r)][static_cast<size_t>(c)].get<double>();
    }
  }
  return m;
}

}  // namespace

void write_ground_truth(const std::string& path, const TruthArtifact& art) {
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["scenario"] = art.scenario;
  j["seed"] = art.seed;
  j["replicate"] = art.replicate;
  j["n_validated"] = art.n_validated;
  j["resampled_sites"] = art.resampled_sites;
  j["empty_visits"] = art.empty_visits;
  j["kept_sites"] = art.kept_sites;
  j["kept_visits"] = art.kept_visits;

  ordered_json t;
  t["psi"] = art.truth.psi;
  t["has_psi"] = art.truth.has_psi;
  t["eta_site"] = matrix_to_json(art.truth.eta_site);
  {
    std::vector<double> lambda;
    for (Eigen::Index i = 0; i < art.truth.lambda.size(); ++i) {
      lambda.push_back(art.truth.lambda[i]);
    }
    t["lambda"] = std::move(lambda);
  }
  t["Theta"] = matrix_to_json(art.truth.Theta);
  t["theta"] = matrix_to_json(art.truth.theta);
  t["theta_star"] = matrix_to_json(art.truth.theta_star);
  {
    ordered_json zeta = ordered_json::array();
    for (Eigen::Index r = 0; r < art.truth.zeta.rows(); ++r) {
      ordered_json row = ordered_json::array();
      for (Eigen::Index c = 0; c < art.truth.zeta.cols(); ++c) {
        row.push_back(static_cast<int>(art.truth.zeta(r, c)));
      }
      zeta.push_back(std::move(row));
    }
    t["zeta"] = std::move(zeta);
  }
  t["z"] = art.truth.z;
  t["tau"] = std::vector<int>(art.truth.tau.begin(), art.truth.tau.end());
  t["beta_eta"] = matrix_to_json(art.truth.beta_eta);
  t["beta_gamma"] = matrix_to_json(art.truth.beta_gamma);
  j["truth"] = std::move(t);

  write_file_atomic(path, j.dump(2) + "\n");
}

TruthArtifact load_ground_truth(const std::string& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  try {
    TruthArtifact art;
    if (j.at("format_version").get<int>() != kFormatVersion) {
      throw DataError(path + ": unsupported format version");
    }
    art.scenario = j.at("scenario").get<int>();
    art.seed = j.at("seed").get<std::uint64_t>();
    art.replicate = j.at("replicate").get<std::uint32_t>();
    art.n_validated = j.at("n_validated").get<int>();
    art.resampled_sites = j.at("resampled_sites").get<int>();
    art.empty_visits = j.at("empty_visits").get<int>();
    art.kept_sites = j.at("kept_sites").get<std::vector<int>>();
    art.kept_visits = j.at("kept_visits").get<std::vector<int>>();

    const ordered_json& t = j.at("truth");
    art.truth.psi = t.at("psi").get<double>();
    art.truth.has_psi = t.at("has_psi").get<bool>();
    art.truth.eta_site = matrix_from_json(t.at("eta_site"), "eta_site");
    const auto lambda = t.at("lambda").get<std::vector<double>>();
    art.truth.lambda = to_vector(lambda);
    art.truth.Theta = matrix_from_json(t.at("Theta"), "Theta");
    art.truth.theta = matrix_from_json(t.at("theta"), "theta");
    art.truth.theta_star = matrix_from_json(t.at("theta_star"), "theta_star");
    {
      const Eigen::MatrixXd zeta = matrix_from_json(t.at("zeta"), "zeta");
      art.truth.zeta.resize(zeta.rows(), zeta.cols());
      for (Eigen::Index r = 0; r < zeta.rows(); ++r) {
        for (Eigen::Index c = 0; c < zeta.cols(); ++c) {
          art.truth.zeta(r, c) = static_cast<std::uint8_t>(zeta(r, c) != 0.0);
        }
      }
    }
    art.truth.z = t.at("z").get<std::vector<int>>();
    const auto tau = t.at("tau").get<std::vector<int>>();
    art.truth.tau.assign(tau.begin(), tau.end());
    art.truth.beta_eta = matrix_from_json(t.at("beta_eta"), "beta_eta");
    art.truth.beta_gamma = matrix_from_json(t.at("beta_gamma"), "beta_gamma");
    return art;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": malformed ground truth: " + e.what());
  }
}

// ------------------------------------------------------------ fit artifact

namespace {

// Blocks in draw-file column order, with their naming scheme.
struct BlockSpec {
  const char* name;
  Eigen::MatrixXd ChainOutput::* block;
  bool paired;  // two-index names
};

const BlockSpec kDrawBlocks[] = {
    {"beta_psi", &ChainOutput::beta_psi, true},
    {"beta_eta", &ChainOutput::beta_eta, true},
    {"beta_gamma", &ChainOutput::beta_gamma, true},
    {"a", &ChainOutput::a, true},
    {"u", &ChainOutput::u, false},
    {"theta", &ChainOutput::theta, true},
    {"theta_star", &ChainOutput::theta_star, true},
    {"psi_bar", &ChainOutput::psi_bar, false},
    {"eta", &ChainOutput::eta, true},
    {"Theta", &ChainOutput::Theta, true},
};

int block_inner(const ChainOutput& c, const std::string& name) {
  if (name == "beta_psi") return std::max(c.p_indiv, 1);
  if (name == "beta_eta") return std::max(c.p_site, 1);
  if (name == "beta_gamma") return std::max(c.p_visit, 1);
  return std::max(c.n_categories, 1);  // a, theta, theta_star, eta, Theta, zeta
}

std::string draw_header(const ChainOutput& c) {
  std::string header;
  auto append = [&header](const std::string& name) {
    if (!header.empty()) header += ',';
    header += name;
  };
  for (const BlockSpec& spec : kDrawBlocks) {
    const Eigen::MatrixXd& m = c.*spec.block;
    const int inner = block_inner(c, spec.name);
    for (int k = 0; k < m.cols(); ++k) {
      append(spec.paired ? scalar_name(spec.name, k / inner, k % inner)
                         : scalar_name(spec.name, k));
    }
  }
  const int inner = block_inner(c, "zeta");
  for (int k = 0; k < c.zeta.cols(); ++k) {
    append(scalar_name("zeta", k / inner, k % inner));
  }
  return header;
}

Eigen::Index total_draw_cols(const ChainOutput& c) {
  Eigen::Index cols = 0;
  for (const BlockSpec& spec : kDrawBlocks) cols += (c.*spec.block).cols();
  return cols + c.zeta.cols();
}

std::string render_draws_csv(const ChainOutput& c) {
  std::string out = draw_header(c);
  out += '\n';
  const Eigen::Index rows = c.n_retained;
  for (Eigen::Index r = 0; r < rows; ++r) {
    bool first = true;
    auto emit = [&](double v) {
      if (!first) out += ',';
      first = false;
      out += format_g17(v);
    };
    for (const BlockSpec& spec : kDrawBlocks) {
      const Eigen::MatrixXd& m = c.*spec.block;
      for (Eigen::Index k = 0; k < m.cols(); ++k) emit(m(r, k));
    }
    for (Eigen::Index k = 0; k < c.zeta.cols(); ++k) {
      emit(static_cast<double>(c.zeta(r, k)));
    }
    out += '\n';
  }
  return out;
}

constexpr char kBinaryMagic[8] = {'M', 'M', 'D', 'R', 'A', 'W', 'S', '1'};

std::string render_draws_binary(const ChainOutput& c) {
  const std::uint32_t rows = static_cast<std::uint32_t>(c.n_retained);
  const std::uint32_t cols = static_cast<std::uint32_t>(total_draw_cols(c));
  std::string out;
  out.reserve(16 + static_cast<size_t>(rows) * cols * 8);
  out.append(kBinaryMagic, sizeof(kBinaryMagic));
  auto put_u32 = [&out](std::uint32_t v) {
    for (int b = 0; b < 4; ++b) {
      out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
    }
  };
  put_u32(rows);
  put_u32(cols);
  auto put_f64 = [&out](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int b = 0; b < 8; ++b) {
      out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
    }
  };
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (const BlockSpec& spec : kDrawBlocks) {
      const Eigen::MatrixXd& m = c.*spec.block;
      for (Eigen::Index k = 0; k < m.cols(); ++k) put_f64(m(r, k));
    }
    for (Eigen::Index k = 0; k < c.zeta.cols(); ++k) {
      put_f64(static_cast<double>(c.zeta(r, k)));
    }
  }
  return out;
}

ordered_json covariate_info_json(const CovariateInfo& info) {
  ordered_json j;
  j["names"] = info.names;
  j["standardized"] = info.standardized;
  j["mean"] = info.mean;
  j["sd"] = info.sd;
  return j;
}

CovariateInfo covariate_info_from_json(const ordered_json& j) {
  CovariateInfo info;
  info.names = j.at("names").get<std::vector<std::string>>();
  info.standardized = j.at("standardized").get<bool>();
  info.mean = j.at("mean").get<std::vector<double>>();
  info.sd = j.at("sd").get<std::vector<double>>();
  return info;
}

std::string chain_csv_name(int k) {
  return "chain_" + std::to_string(k) + ".csv";
}

}  // namespace

void save_fit(const std::string& dir, const FitArtifact& art) {
  if (art.chains.empty()) throw UsageError("save_fit: no chains");
  fs::create_directories(dir);
  const fs::path base(dir);
  const ChainOutput& ref = art.chains.front();

  ordered_json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["tool"] = "missmult";
  manifest["model"] = variant_to_string(ref.config.variant);
  manifest["chains"] = static_cast<int>(art.chains.size());
  manifest["seed"] = ref.config.seed;
  manifest["n_retained"] = ref.n_retained;
  manifest["dims"] = {{"n_sites", ref.n_sites},
                      {"n_visits", ref.n_visits},
                      {"n_categories", ref.n_categories},
                      {"p_indiv", ref.p_indiv},
                      {"p_site", ref.p_site},
                      {"p_visit", ref.p_visit}};
  manifest["run"] = {{"iterations", ref.config.iterations},
                     {"burn_in", ref.config.burn_in},
                     {"thin", ref.config.thin},
                     {"mh_step_size", ref.config.mh_step_size},
                     {"adapt_mh", ref.config.adapt_mh},
                     {"pin_zeta", ref.config.pin_zeta},
                     {"count_all_individuals", ref.config.count_all_individuals}};
  manifest["hyper"] = {{"mu_psi", art.hyper.mu_psi},
                       {"mu_eta", art.hyper.mu_eta},
                       {"mu_gamma", art.hyper.mu_gamma},
                       {"sigma2_psi", art.hyper.sigma2_psi},
                       {"sigma2_eta", art.hyper.sigma2_eta},
                       {"sigma2_gamma", art.hyper.sigma2_gamma},
                       {"no_lucky_guess", art.hyper.no_lucky_guess},
                       {"nu", matrix_to_json(art.hyper.nu)}};
  {
    ordered_json blocks;
    for (const BlockSpec& spec : kDrawBlocks) {
      blocks[spec.name] = static_cast<int>((ref.*spec.block).cols());
    }
    blocks["zeta"] = static_cast<int>(ref.zeta.cols());
    manifest["blocks"] = std::move(blocks);
  }
  manifest["class_labels"] = art.class_labels;
  manifest["n_dropped_empty_visits"] = art.n_dropped_empty_visits;
  manifest["standardization"] = {{"site", covariate_info_json(art.site_cov)},
                                 {"visit", covariate_info_json(art.visit_cov)},
                                 {"individual", covariate_info_json(art.indiv_cov)}};

  ordered_json chain_files = ordered_json::array();
  ordered_json binary_files = ordered_json::array();
  ordered_json streams = ordered_json::array();
  ordered_json accepts = ordered_json::array();
  ordered_json runtimes = ordered_json::array();
  for (size_t k = 0; k < art.chains.size(); ++k) {
    const ChainOutput& c = art.chains[k];
    if (c.n_retained != ref.n_retained ||
        total_draw_cols(c) != total_draw_cols(ref)) {
      throw UsageError("save_fit: chains disagree on draw shape");
    }
    const std::string csv_name = chain_csv_name(static_cast<int>(k));
    write_file_atomic((base / csv_name).string(), render_draws_csv(c));
    chain_files.push_back(csv_name);
    if (art.write_binary) {
      const std::string bin_name =
          "chain_" + std::to_string(k) + ".bin";
      write_file_atomic((base / bin_name).string(), render_draws_binary(c));
      binary_files.push_back(bin_name);
    }
    streams.push_back(c.stream);
    accepts.push_back(std::vector<double>(
        c.accept_rate_beta_gamma.data(),
        c.accept_rate_beta_gamma.data() + c.accept_rate_beta_gamma.size()));
    runtimes.push_back(c.runtime_seconds);
  }
  manifest["chain_files"] = std::move(chain_files);
  manifest["binary_files"] = std::move(binary_files);
  manifest["streams"] = std::move(streams);
  manifest["accept_rate_beta_gamma"] = std::move(accepts);
  manifest["runtime_seconds"] = std::move(runtimes);
  write_file_atomic((base / "manifest.json").string(),
                    manifest.dump(2) + "\n");

  {
    FileConfig echo;
    echo.run = ref.config;
    echo.hyper = art.hyper;
    // nu is stored column-major in Eigen; serialize row-major.
    for (Eigen::Index r = 0; r < art.hyper.nu.rows(); ++r) {
      for (Eigen::Index c = 0; c < art.hyper.nu.cols(); ++c) {
        echo.nu_values.push_back(art.hyper.nu(r, c));
      }
    }
    echo.write_binary = art.write_binary;
    echo.standardize_covariates = art.site_cov.standardized ||
                                  art.visit_cov.standardized ||
                                  art.indiv_cov.standardized;
    write_file_atomic((base / "config_echo.txt").string(),
                      render_config(echo));
  }

  // Summary over pooled chains.
  {
    const PosteriorSummary summary = posterior_summary(art.chains);
    std::string text = "name,mean,q025,q975\n";
    for (const SummaryRow& row : summary.rows) {
      text += row.name;
      text += ',';
      text += format_g17(row.mean);
      text += ',';
      text += format_g17(row.q025);
      text += ',';
      text += format_g17(row.q975);
      text += '\n';
    }
    write_file_atomic((base / "summary.csv").string(), text);
  }

  // Diagnostics: acceptance rates always, scale reduction when comparable.
  {
    std::string text = "metric,chain,name,value\n";
    for (size_t k = 0; k < art.chains.size(); ++k) {
      const ChainOutput& c = art.chains[k];
      for (Eigen::Index t = 0; t < c.accept_rate_beta_gamma.size(); ++t) {
        text += "accept_rate_beta_gamma," + std::to_string(k) + ',' +
                scalar_name("beta_gamma", static_cast<int>(t)) + ',' +
                format_g17(c.accept_rate_beta_gamma[t]) + '\n';
      }
    }
    if (art.chains.size() >= 2) {
      for (const DiagnosticRow& row : gelman_rubin(art.chains)) {
        text += "rhat,," + row.name + ',' + format_g17(row.rhat) + '\n';
      }
    }
    write_file_atomic((base / "diagnostics.csv").string(), text);
  }
}

Eigen::MatrixXd load_draws_csv(const std::string& path) {
  const auto lines = split_lines(read_file(path));
  if (lines.size() < 2) throw DataError(path + ": no draw rows");
  const auto header = split(lines[0], ',');
  const auto cols = static_cast<Eigen::Index>(header.size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(lines.size()) - 1, cols);
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i], ',');
    if (static_cast<Eigen::Index>(cells.size()) != cols) {
      throw DataError(path + " row " + std::to_string(i + 1) +
                      ": ragged draw row");
    }
    const std::string where = path + " row " + std::to_string(i + 1);
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(i) - 1, c) =
          parse_double(cells[static_cast<size_t>(c)], where);
    }
  }
  return m;
}

Eigen::MatrixXd load_draws_binary(const std::string& path) {
  const std::string raw = read_file(path);
  if (raw.size() < 16 || std::memcmp(raw.data(), kBinaryMagic, 8) != 0) {
    throw DataError(path + ": not a missmult draw file");
  }
  auto get_u32 = [&raw](size_t at) {
    std::uint32_t v = 0;
    for (int b = 3; b >= 0; --b) {
      v = (v << 8) | static_cast<unsigned char>(raw[at + static_cast<size_t>(b)]);
    }
    return v;
  };
  const std::uint32_t rows = get_u32(8);
  const std::uint32_t cols = get_u32(12);
  if (raw.size() != 16 + static_cast<size_t>(rows) * cols * 8) {
    throw DataError(path + ": truncated draw file");
  }
  Eigen::MatrixXd m(rows, cols);
  size_t at = 16;
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c, at += 8) {
      std::uint64_t bits = 0;
      for (int b = 7; b >= 0; --b) {
        bits = (bits << 8) |
               static_cast<unsigned char>(raw[at + static_cast<size_t>(b)]);
      }
      double v;
      std::memcpy(&v, &bits, 8);
      m(r, c) = v;
    }
  }
  return m;
}

FitArtifact load_fit(const std::string& dir) {
  const fs::path base(dir);
  ordered_json manifest;
  try {
    manifest = ordered_json::parse(read_file((base / "manifest.json").string()));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(dir + "/manifest.json: invalid JSON: " + e.what());
  }

  try {
    FitArtifact art;
    if (manifest.at("format_version").get<int>() != kFormatVersion) {
      throw DataError(dir + ": unsupported fit format version");
    }
    const Variant variant =
        variant_from_string(manifest.at("model").get<std::string>());
    const int n_chains = manifest.at("chains").get<int>();
    const int n_retained = manifest.at("n_retained").get<int>();
    const ordered_json& dims = manifest.at("dims");
    const ordered_json& run = manifest.at("run");
    const ordered_json& hyper = manifest.at("hyper");
    const ordered_json& blocks = manifest.at("blocks");

    art.hyper.mu_psi = hyper.at("mu_psi").get<double>();
    art.hyper.mu_eta = hyper.at("mu_eta").get<double>();
    art.hyper.mu_gamma = hyper.at("mu_gamma").get<double>();
    art.hyper.sigma2_psi = hyper.at("sigma2_psi").get<double>();
    art.hyper.sigma2_eta = hyper.at("sigma2_eta").get<double>();
    art.hyper.sigma2_gamma = hyper.at("sigma2_gamma").get<double>();
    art.hyper.no_lucky_guess = hyper.at("no_lucky_guess").get<bool>();
    art.hyper.nu = matrix_from_json(hyper.at("nu"), "nu");
    art.class_labels =
        manifest.at("class_labels").get<std::vector<std::string>>();
    art.n_dropped_empty_visits =
        manifest.at("n_dropped_empty_visits").get<int>();
    art.write_binary = !manifest.at("binary_files").empty();
    const ordered_json& st = manifest.at("standardization");
    art.site_cov = covariate_info_from_json(st.at("site"));
    art.visit_cov = covariate_info_from_json(st.at("visit"));
    art.indiv_cov = covariate_info_from_json(st.at("individual"));

    const auto chain_files =
        manifest.at("chain_files").get<std::vector<std::string>>();
    if (static_cast<int>(chain_files.size()) != n_chains) {
      throw DataError(dir + ": manifest chain count mismatch");
    }
    const auto streams = manifest.at("streams").get<std::vector<std::uint64_t>>();
    const auto accepts =
        manifest.at("accept_rate_beta_gamma").get<std::vector<std::vector<double>>>();
    const auto runtimes =
        manifest.at("runtime_seconds").get<std::vector<double>>();

    for (int k = 0; k < n_chains; ++k) {
      ChainOutput c;
      c.chain_index = k;
      c.stream = streams.at(static_cast<size_t>(k));
      c.n_retained = n_retained;
      c.config.variant = variant;
      c.config.seed = manifest.at("seed").get<std::uint64_t>();
      c.config.iterations = run.at("iterations").get<int>();
      c.config.burn_in = run.at("burn_in").get<int>();
      c.config.thin = run.at("thin").get<int>();
      c.config.chains = n_chains;
      c.config.mh_step_size = run.at("mh_step_size").get<double>();
      c.config.adapt_mh = run.at("adapt_mh").get<bool>();
      c.config.pin_zeta = run.at("pin_zeta").get<bool>();
      c.config.count_all_individuals =
          run.at("count_all_individuals").get<bool>();
      c.n_sites = dims.at("n_sites").get<int>();
      c.n_visits = dims.at("n_visits").get<int>();
      c.n_categories = dims.at("n_categories").get<int>();
      c.p_indiv = dims.at("p_indiv").get<int>();
      c.p_site = dims.at("p_site").get<int>();
      c.p_visit = dims.at("p_visit").get<int>();

      const Eigen::MatrixXd table = load_draws_csv(
          (base / chain_files[static_cast<size_t>(k)]).string());
      if (table.rows() != n_retained) {
        throw DataError(dir + ": draw file row count mismatch");
      }
      Eigen::Index at = 0;
      auto take = [&](int want) {
        if (at + want > table.cols()) {
          throw DataError(dir + ": draw file has too few columns");
        }
        Eigen::MatrixXd m = table.middleCols(at, want);
        at += want;
        return m;
      };
      for (const BlockSpec& spec : kDrawBlocks) {
        c.*spec.block = take(blocks.at(spec.name).get<int>());
      }
      {
        const Eigen::MatrixXd z = take(blocks.at("zeta").get<int>());
        c.zeta.resize(z.rows(), z.cols());
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
          for (Eigen::Index col = 0; col < z.cols(); ++col) {
            c.zeta(r, col) = static_cast<std::uint8_t>(z(r, col) != 0.0);
          }
        }
      }
      if (at != table.cols()) {
        throw DataError(dir + ": draw file has extra columns");
      }
      const auto& acc = accepts.at(static_cast<size_t>(k));
      c.accept_rate_beta_gamma =
          Eigen::Map<const Eigen::VectorXd>(acc.data(),
                                            static_cast<Eigen::Index>(acc.size()));
      c.runtime_seconds = runtimes.at(static_cast<size_t>(k));
      art.chains.push_back(std::move(c));
    }
    return art;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(dir + "/manifest.json: malformed manifest: " + e.what());
  }
}

}  // namespace missmult
