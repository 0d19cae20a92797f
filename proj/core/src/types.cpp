#include "missmult/types.hpp"

#include <numeric>

#include "missmult/errors.hpp"

namespace missmult {

void Dimensions::finalize() {
  if (n_sites < 0 || n_categories < 0) {
    throw DataError("dimensions: negative counts");
  }
  if (static_cast<int>(visits_per_site.size()) != n_sites) {
    throw DataError("dimensions: visits_per_site length mismatch");
  }
  visit_offset.assign(n_sites + 1, 0);
  for (int i = 0; i < n_sites; ++i) {
    if (visits_per_site[i] < 0) {
      throw DataError("dimensions: negative visit count");
    }
    visit_offset[i + 1] = visit_offset[i] + visits_per_site[i];
  }
  const int v_total = visit_offset[n_sites];
  if (static_cast<int>(individuals_per_visit.size()) != v_total) {
    throw DataError("dimensions: individuals_per_visit length mismatch");
  }
  indiv_offset.assign(v_total + 1, 0);
  for (int v = 0; v < v_total; ++v) {
    if (individuals_per_visit[v] < 0) {
      throw DataError("dimensions: negative individual count");
    }
    indiv_offset[v + 1] = indiv_offset[v] + individuals_per_visit[v];
  }
}

void Dimensions::validate() const {
  if (n_sites <= 0) throw DataError("dimensions: need at least one site");
  if (n_categories <= 0) throw DataError("dimensions: need at least one category");
  if (visit_offset.size() != static_cast<size_t>(n_sites) + 1 ||
      indiv_offset.size() != static_cast<size_t>(total_visits()) + 1) {
    throw DataError("dimensions: finalize() has not been run");
  }
}

void Dataset::finalize() {
  dims.finalize();
  const int v_total = dims.total_visits();
  const int m_total = dims.total_individuals();

  site_of_visit.assign(v_total, 0);
  for (int i = 0; i < dims.n_sites; ++i) {
    for (int v = dims.visit_offset[i]; v < dims.visit_offset[i + 1]; ++v) {
      site_of_visit[v] = i;
    }
  }
  visit_of_individual.assign(m_total, 0);
  for (int v = 0; v < v_total; ++v) {
    for (int l = dims.indiv_offset[v]; l < dims.indiv_offset[v + 1]; ++l) {
      visit_of_individual[l] = v;
    }
  }
  validate();
}

void Dataset::validate() const {
  dims.validate();
  const int v_total = dims.total_visits();
  const int m_total = dims.total_individuals();
  const int c = dims.n_categories;

  if (static_cast<int>(observed.size()) != m_total) {
    throw DataError("dataset: observed length mismatch");
  }
  if (static_cast<int>(validated.size()) != m_total) {
    throw DataError("dataset: validated length mismatch");
  }
  for (int l = 0; l < m_total; ++l) {
    if (observed[l] < 0 || observed[l] >= c) {
      throw DataError("dataset: observed class out of range");
    }
    if (validated[l] < -1 || validated[l] >= c) {
      throw DataError("dataset: validated class out of range");
    }
  }
  if (x_site.rows() != dims.n_sites || x_site.cols() < 1) {
    throw DataError("dataset: site covariate shape mismatch");
  }
  if (x_visit.rows() != v_total || x_visit.cols() < 1) {
    throw DataError("dataset: visit covariate shape mismatch");
  }
  if (x_indiv.rows() != m_total || x_indiv.cols() < 1) {
    throw DataError("dataset: individual covariate shape mismatch");
  }
  if (!class_labels.empty() && static_cast<int>(class_labels.size()) != c) {
    throw DataError("dataset: class label count mismatch");
  }
}

Eigen::MatrixXi Dataset::observed_counts_per_visit() const {
  Eigen::MatrixXi counts =
      Eigen::MatrixXi::Zero(dims.total_visits(), dims.n_categories);
  for (size_t l = 0; l < observed.size(); ++l) {
    counts(visit_of_individual[l], observed[l]) += 1;
  }
  return counts;
}

KeptMaps kept_after_drop(const Dimensions& dims) {
  KeptMaps maps;
  bool any_empty = false;
  for (int i = 0; i < dims.n_sites; ++i) {
    bool alive = false;
    for (int v = dims.visit_offset[i]; v < dims.visit_offset[i + 1]; ++v) {
      if (dims.individuals_per_visit[static_cast<size_t>(v)] > 0) {
        maps.visits.push_back(v);
        alive = true;
      } else {
        any_empty = true;
      }
    }
    if (alive) {
      maps.sites.push_back(i);
    } else {
      any_empty = true;
    }
  }
  if (!any_empty) {
    maps.sites.clear();
    maps.visits.clear();
  }
  return maps;
}

int drop_empty_visits(Dataset& data, int* n_dropped_sites) {
  const Dimensions& d = data.dims;
  const int v_total = d.total_visits();

  int dropped_visits = 0;
  for (int v = 0; v < v_total; ++v) {
    if (d.individuals_per_visit[v] == 0) ++dropped_visits;
  }
  if (n_dropped_sites != nullptr) *n_dropped_sites = 0;
  if (dropped_visits == 0) return 0;

  Dataset out;
  out.dims.n_categories = d.n_categories;
  out.class_labels = data.class_labels;

  std::vector<Eigen::Index> kept_site_rows;
  std::vector<Eigen::Index> kept_visit_rows;
  for (int i = 0; i < d.n_sites; ++i) {
    int kept_here = 0;
    for (int v = d.visit_offset[i]; v < d.visit_offset[i + 1]; ++v) {
      if (d.individuals_per_visit[v] > 0) {
        ++kept_here;
        kept_visit_rows.push_back(v);
        out.dims.individuals_per_visit.push_back(d.individuals_per_visit[v]);
      }
    }
    if (kept_here > 0) {
      out.dims.visits_per_site.push_back(kept_here);
      kept_site_rows.push_back(i);
    }
  }
  out.dims.n_sites = static_cast<int>(out.dims.visits_per_site.size());
  if (n_dropped_sites != nullptr) {
    *n_dropped_sites = d.n_sites - out.dims.n_sites;
  }

  // Individuals are untouched: empty visits own none.
  out.observed = data.observed;
  out.validated = data.validated;

  out.x_site.resize(static_cast<Eigen::Index>(kept_site_rows.size()),
                    data.x_site.cols());
  for (size_t r = 0; r < kept_site_rows.size(); ++r) {
    out.x_site.row(static_cast<Eigen::Index>(r)) = data.x_site.row(kept_site_rows[r]);
  }
  out.x_visit.resize(static_cast<Eigen::Index>(kept_visit_rows.size()),
                     data.x_visit.cols());
  for (size_t r = 0; r < kept_visit_rows.size(); ++r) {
    out.x_visit.row(static_cast<Eigen::Index>(r)) =
        data.x_visit.row(kept_visit_rows[r]);
  }
  out.x_indiv = data.x_indiv;

  out.finalize();
  data = std::move(out);
  return dropped_visits;
}

}  // namespace missmult
