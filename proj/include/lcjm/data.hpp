#ifndef LCJM_DATA_HPP
#define LCJM_DATA_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lcjm/error.hpp"

namespace lcjm {

struct LongRecord {
  std::string subject_id;
  double time = 0.0;
  double y = 0.0;
  std::vector<double> x_covariates;

  bool operator==(const LongRecord&) const = default;
};

struct SurvRecord {
  std::string subject_id;
  double event_time = 0.0;
  int event_indicator = 0;
  std::vector<double> w_covariates;

  bool operator==(const SurvRecord&) const = default;
};

/// One subject after validation. Longitudinal rows keep their input order.
struct Subject {
  std::string id;
  std::vector<double> times;
  std::vector<double> y;
  std::vector<std::vector<double>> x;  // one covariate row per observation
  double event_time = 0.0;
  int event = 0;
  std::vector<double> w;

  std::size_t n_obs() const { return times.size(); }

  /// Longitudinal covariates carried forward to time `s` (first row before the first visit).
  const std::vector<double>& covariates_at(double s) const {
    std::size_t best = 0;
    double best_time = -1.0;
    for (std::size_t j = 0; j < times.size(); ++j) {
      if (times[j] <= s && times[j] >= best_time) {
        best = j;
        best_time = times[j];
      }
    }
    if (best_time < 0.0) {
      best = static_cast<std::size_t>(
          std::min_element(times.begin(), times.end()) - times.begin());
    }
    return x[best];
  }

  bool operator==(const Subject&) const = default;
};

struct Dataset {
  std::vector<std::string> long_covariates;
  std::vector<std::string> surv_covariates;
  std::vector<Subject> subjects;

  std::size_t n() const { return subjects.size(); }

  std::size_t total_obs() const {
    std::size_t total = 0;
    for (const auto& s : subjects) total += s.n_obs();
    return total;
  }

  bool operator==(const Dataset&) const = default;
};

inline constexpr double kEventTimeTolerance = 1e-9;

namespace detail {

inline std::string row_context(const std::string& table, std::size_t row,
                               const std::string& id) {
  return table + " row " + std::to_string(row + 1) + " (subject '" + id + "')";
}

inline void require_finite(double value, const char* what, const std::string& table,
                           std::size_t row, const std::string& id) {
  if (!std::isfinite(value)) {
    throw DataError("non-finite " + std::string(what) + " at " + row_context(table, row, id));
  }
}

}  // namespace detail

/// Groups records by subject and checks every dataset invariant. Subjects are
/// indexed densely in order of first appearance in the longitudinal records.
inline Dataset validate_dataset(const std::vector<LongRecord>& longitudinal,
                                const std::vector<SurvRecord>& survival,
                                std::vector<std::string> long_covariates = {},
                                std::vector<std::string> surv_covariates = {}) {
  if (longitudinal.empty()) throw DataError("no longitudinal records");
  if (survival.empty()) throw DataError("no survival records");

  const std::size_t nx = longitudinal.front().x_covariates.size();
  const std::size_t nw = survival.front().w_covariates.size();
  if (long_covariates.empty() && nx > 0) {
    for (std::size_t k = 0; k < nx; ++k) long_covariates.push_back("x" + std::to_string(k + 1));
  }
  if (surv_covariates.empty() && nw > 0) {
    for (std::size_t k = 0; k < nw; ++k) surv_covariates.push_back("w" + std::to_string(k + 1));
  }
  if (long_covariates.size() != nx) throw DataError("longitudinal covariate names do not match row width");
  if (surv_covariates.size() != nw) throw DataError("survival covariate names do not match row width");

  std::unordered_map<std::string, std::size_t> surv_row;
  for (std::size_t r = 0; r < survival.size(); ++r) {
    const auto& s = survival[r];
    const auto ctx = [&] { return detail::row_context("survival", r, s.subject_id); };
    if (!surv_row.emplace(s.subject_id, r).second) {
      throw DataError("duplicate survival record at " + ctx());
    }
    detail::require_finite(s.event_time, "event_time", "survival", r, s.subject_id);
    if (s.event_time <= 0.0) throw DataError("event_time must be positive at " + ctx());
    if (s.event_indicator != 0 && s.event_indicator != 1) {
      throw DataError("event_indicator must be 0 or 1 at " + ctx());
    }
    if (s.w_covariates.size() != nw) throw DataError("covariate count mismatch at " + ctx());
    for (double w : s.w_covariates) detail::require_finite(w, "covariate", "survival", r, s.subject_id);
  }

  Dataset data;
  data.long_covariates = std::move(long_covariates);
  data.surv_covariates = std::move(surv_covariates);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < longitudinal.size(); ++r) {
    const auto& rec = longitudinal[r];
    const auto ctx = [&] { return detail::row_context("longitudinal", r, rec.subject_id); };
    detail::require_finite(rec.time, "time", "longitudinal", r, rec.subject_id);
    detail::require_finite(rec.y, "y", "longitudinal", r, rec.subject_id);
    if (rec.time < 0.0) throw DataError("negative time at " + ctx());
    if (rec.x_covariates.size() != nx) throw DataError("covariate count mismatch at " + ctx());
    for (double x : rec.x_covariates) detail::require_finite(x, "covariate", "longitudinal", r, rec.subject_id);

    auto found = surv_row.find(rec.subject_id);
    if (found == surv_row.end()) {
      throw DataError("missing survival record for subject '" + rec.subject_id + "' (longitudinal row " +
                      std::to_string(r + 1) + ")");
    }
    const SurvRecord& surv = survival[found->second];
    if (rec.time > surv.event_time + kEventTimeTolerance) {
      throw DataError("observation after event time at " + ctx());
    }

    auto [it, inserted] = index.emplace(rec.subject_id, data.subjects.size());
    if (inserted) {
      Subject s;
      s.id = rec.subject_id;
      s.event_time = surv.event_time;
      s.event = surv.event_indicator;
      s.w = surv.w_covariates;
      data.subjects.push_back(std::move(s));
    }
    Subject& s = data.subjects[it->second];
    s.times.push_back(rec.time);
    s.y.push_back(rec.y);
    s.x.push_back(rec.x_covariates);
  }

  for (std::size_t r = 0; r < survival.size(); ++r) {
    if (!index.contains(survival[r].subject_id)) {
      throw DataError("subject has no longitudinal records at " +
                      detail::row_context("survival", r, survival[r].subject_id));
    }
  }
  return data;
}

/// Flattens a dataset back into record lists (subject order, then row order).
inline std::pair<std::vector<LongRecord>, std::vector<SurvRecord>> to_records(const Dataset& data) {
  std::vector<LongRecord> longitudinal;
  std::vector<SurvRecord> survival;
  for (const auto& s : data.subjects) {
    for (std::size_t j = 0; j < s.n_obs(); ++j) {
      longitudinal.push_back({s.id, s.times[j], s.y[j], s.x[j]});
    }
    survival.push_back({s.id, s.event_time, s.event, s.w});
  }
  return {std::move(longitudinal), std::move(survival)};
}

inline Dataset validate_dataset(const Dataset& data) {
  auto [longitudinal, survival] = to_records(data);
  return validate_dataset(longitudinal, survival, data.long_covariates, data.surv_covariates);
}

inline std::ptrdiff_t covariate_index(const std::vector<std::string>& names, const std::string& name) {
  auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : it - names.begin();
}

// Standardization ------------------------------------------------------------

struct ColumnScaling {
  std::string name;
  double center = 0.0;
  double scale = 1.0;
};

struct Standardization {
  bool outcome = false;
  bool covariates = false;
  ColumnScaling y{"y"};
  std::vector<ColumnScaling> long_columns;
  std::vector<ColumnScaling> surv_columns;
};

namespace detail {

inline bool is_binary(const std::vector<double>& values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

inline ColumnScaling column_scaling(std::string name, const std::vector<double>& values, bool apply,
                                    bool skip_binary = true) {
  ColumnScaling c{std::move(name)};
  if (!apply || values.size() < 2 || (skip_binary && is_binary(values))) return c;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  if (sd > 0.0) {
    c.center = mean;
    c.scale = sd;
  }
  return c;
}

}  // namespace detail

/// Centers and scales the outcome and/or the continuous (non 0/1) covariates.
/// Survival covariates are summarized over subjects, longitudinal ones over rows.
inline std::pair<Dataset, Standardization> standardize(Dataset data, bool outcome, bool covariates) {
  Standardization info;
  info.outcome = outcome;
  info.covariates = covariates;

  std::vector<double> ys;
  for (const auto& s : data.subjects) ys.insert(ys.end(), s.y.begin(), s.y.end());
  info.y = detail::column_scaling("y", ys, outcome, false);

  for (std::size_t k = 0; k < data.long_covariates.size(); ++k) {
    std::vector<double> col;
    for (const auto& s : data.subjects) {
      for (const auto& row : s.x) col.push_back(row[k]);
    }
    info.long_columns.push_back(detail::column_scaling(data.long_covariates[k], col, covariates));
  }
  for (std::size_t k = 0; k < data.surv_covariates.size(); ++k) {
    std::vector<double> col;
    for (const auto& s : data.subjects) col.push_back(s.w[k]);
    info.surv_columns.push_back(detail::column_scaling(data.surv_covariates[k], col, covariates));
  }

  for (auto& s : data.subjects) {
    for (double& y : s.y) y = (y - info.y.center) / info.y.scale;
    for (auto& row : s.x) {
      for (std::size_t k = 0; k < row.size(); ++k) {
        row[k] = (row[k] - info.long_columns[k].center) / info.long_columns[k].scale;
      }
    }
    for (std::size_t k = 0; k < s.w.size(); ++k) {
      s.w[k] = (s.w[k] - info.surv_columns[k].center) / info.surv_columns[k].scale;
    }
  }
  return {std::move(data), std::move(info)};
}

}  // namespace lcjm

#endif  // LCJM_DATA_HPP
