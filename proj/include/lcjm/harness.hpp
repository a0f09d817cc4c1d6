#ifndef LCJM_HARNESS_HPP
#define LCJM_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "lcjm/config.hpp"
#include "lcjm/error.hpp"
#include "lcjm/io.hpp"
#include "lcjm/pipeline.hpp"
#include "lcjm/random.hpp"
#include "lcjm/selection.hpp"
#include "lcjm/simulator.hpp"

namespace lcjm {

// Truth files -----------------------------------------------------------------------

/// Components ordered by ascending longitudinal intercept, the default relabeling order.
inline std::vector<int> truth_class_order(const ScenarioConfig& cfg) {
  std::vector<int> order(cfg.components.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return cfg.components[static_cast<std::size_t>(a)].beta_intercept <
           cfg.components[static_cast<std::size_t>(b)].beta_intercept;
  });
  return order;
}

inline json component_json(const ComponentParams& c) {
  return {{"beta_intercept", c.beta_intercept}, {"beta_male", c.beta_male},     {"beta_time", c.beta_time},
          {"sigma_y", c.sigma_y},               {"Sigma_b_diag", c.Sigma_b_diag}, {"xi", c.xi},
          {"mu_c", c.mu_c},                     {"gamma_intercept", c.gamma_intercept},
          {"gamma_age", c.gamma_age},           {"alpha", c.alpha},             {"N", c.N}};
}

/// Generating values keyed by draws-CSV column names for the simulation layout
/// (intercept, time, male; random intercept and slope; age in the hazard).
/// The Weibull baseline has no spline counterpart, so gamma_h0 is absent.
inline json truth_json(const SimulatedData& sim) {
  const ScenarioConfig& cfg = sim.config;
  const auto order = truth_class_order(cfg);
  std::vector<int> rank(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) rank[static_cast<std::size_t>(order[k])] = static_cast<int>(k);

  json params = json::object();
  const double n = static_cast<double>(cfg.n());
  const auto cls = [](std::size_t g) { return "[" + std::to_string(g + 1) + "]"; };
  for (std::size_t g = 0; g < order.size(); ++g) {
    const auto& c = cfg.components[static_cast<std::size_t>(order[g])];
    params["beta" + cls(g) + "[1]"] = c.beta_intercept;
    params["beta" + cls(g) + "[2]"] = c.beta_time;
    params["beta" + cls(g) + "[3]"] = c.beta_male;
  }
  params["sigma_y2"] = cfg.components.front().sigma_y * cfg.components.front().sigma_y;
  for (std::size_t g = 0; g < order.size(); ++g) {
    const auto& c = cfg.components[static_cast<std::size_t>(order[g])];
    params["Sigma_b" + cls(g) + "[1][1]"] = c.Sigma_b_diag[0];
    params["Sigma_b" + cls(g) + "[2][1]"] = 0.0;
    params["Sigma_b" + cls(g) + "[2][2]"] = c.Sigma_b_diag[1];
  }
  for (std::size_t g = 0; g < order.size(); ++g) {
    params["gamma" + cls(g) + "[1]"] = cfg.components[static_cast<std::size_t>(order[g])].gamma_age;
  }
  for (std::size_t g = 0; g < order.size(); ++g) {
    params["alpha" + cls(g)] = cfg.components[static_cast<std::size_t>(order[g])].alpha;
  }
  for (std::size_t g = 0; g < order.size(); ++g) {
    params["pi" + cls(g)] = cfg.components[static_cast<std::size_t>(order[g])].N / n;
  }

  json components = json::array();
  for (int o : order) components.push_back(component_json(cfg.components[static_cast<std::size_t>(o)]));
  json membership = json::object();
  for (std::size_t i = 0; i < sim.data.subjects.size(); ++i) {
    membership[sim.data.subjects[i].id] = rank[static_cast<std::size_t>(sim.true_class[i])] + 1;
  }
  return {{"scenario", cfg.name},
          {"seed", sim.seed},
          {"true_classes", cfg.true_classes()},
          {"subjects", cfg.n()},
          {"censoring_rate", sim.censoring_rate},
          {"censoring_scale", sim.censoring_scale},
          {"parameters", params},
          {"components", components},
          {"class", membership}};
}

inline void write_simulation(const std::filesystem::path& dir, const SimulatedData& sim) {
  write_dataset(sim.data, dir / "longitudinal.csv", dir / "survival.csv");
  write_text(dir / "truth.json", dump(truth_json(sim)));
}

// Parameter recovery ------------------------------------------------------------------

struct RecoveryRow {
  std::string name;
  double truth = 0.0, mean = 0.0, sd = 0.0, bias = 0.0, lower = 0.0, upper = 0.0;
  int covered = 0;
};

/// Scores a relabeled draws table against a truth document. Rows follow the
/// draws column order; columns without a truth value are skipped.
inline std::vector<RecoveryRow> score_fit(const DrawTable& relabeled, const json& truth) {
  if (!truth.contains("parameters") || !truth.at("parameters").is_object()) {
    throw DataError("truth document lacks a 'parameters' object");
  }
  if (truth.contains("true_classes")) {
    const int G = truth.at("true_classes").get<int>();
    if (G != relabeled.classes()) {
      throw DataError("class-count mismatch: fit has G = " + std::to_string(relabeled.classes()) +
                      ", truth has G = " + std::to_string(G));
    }
  }
  if (relabeled.rows.empty()) throw DataError("draws table has no rows");
  const json& params = truth.at("parameters");
  std::vector<RecoveryRow> rows;
  for (const auto& s : summarize_draws(relabeled)) {
    if (!params.contains(s.name)) continue;
    RecoveryRow r;
    r.name = s.name;
    r.truth = params.at(s.name).get<double>();
    r.mean = s.mean;
    r.sd = s.sd;
    r.bias = s.mean - r.truth;
    r.lower = s.lower;
    r.upper = s.upper;
    r.covered = (r.lower <= r.truth && r.truth <= r.upper) ? 1 : 0;
    rows.push_back(r);
  }
  if (rows.empty()) throw DataError("no draws column matches a truth parameter");
  return rows;
}

inline std::vector<RecoveryRow> score_fit(const ModelSpec& spec, const ChainOutput& relabeled, const json& truth) {
  return score_fit(draw_table(spec, relabeled), truth);
}

inline std::string recovery_csv(const std::vector<RecoveryRow>& rows) {
  std::string text = "parameter,truth,mean,sd,bias,q2.5,q97.5,covered\n";
  for (const auto& r : rows) {
    text += r.name + "," + format_number(r.truth) + "," + format_number(r.mean) + "," + format_number(r.sd) + "," +
            format_number(r.bias) + "," + format_number(r.lower) + "," + format_number(r.upper) + "," +
            std::to_string(r.covered) + "\n";
  }
  return text;
}

// Replications ----------------------------------------------------------------------

inline std::uint64_t replication_seed(std::uint64_t master, int rep, std::uint64_t role) {
  Rng rng = make_rng(master, {0x7265706cULL, static_cast<std::uint64_t>(rep), role});
  return rng();
}

/// Acceptance rates in (low, high) for every block that proposed anything.
inline bool acceptance_in_range(const ChainOutput& out, double low = 0.05, double high = 0.95) {
  for (const auto& [name, a] : out.acceptance) {
    if (a.proposed == 0) continue;
    const double r = a.rate();
    if (!(r > low && r < high)) return false;
  }
  return true;
}

struct ReplicationRecord {
  int replication = 0;  // 1-based
  std::uint64_t data_seed = 0;
  std::uint64_t chain_seed = 0;
  bool completed = false;
  bool converged = false;
  std::string error;
  double censoring_rate = std::numeric_limits<double>::quiet_NaN();
  std::vector<PsiSummary> sweep;  // per psi: posterior mode and distribution
  std::map<std::string, double> acceptance;

  std::optional<int> mode_at(double psi) const {
    for (const auto& s : sweep) {
      if (std::abs(s.psi - psi) < 1e-12) return s.mode;
    }
    return std::nullopt;
  }
};

struct PsiRow {
  double psi = 0.0;
  double percent_correct = 0.0;
  std::optional<int> mode;        // mode of the per-replication selected counts
  std::map<int, int> selections;  // selected count -> replications
};

struct ReplicationReport {
  std::string scenario;
  int reps = 0;
  std::uint64_t seed = 0;
  int true_classes = 0;
  int G_max = 0;
  double psi = 0.0;
  int failed = 0;
  int not_converged = 0;
  int included = 0;
  std::vector<PsiRow> table;
  std::vector<ReplicationRecord> replications;
};

struct ReplicationOptions {
  int jobs = 1;
  bool write_draws = true;
};

inline ReplicationRecord run_replication(const ScenarioConfig& scenario, int rep, const RunConfig& cfg,
                                         std::uint64_t seed, const std::filesystem::path& out_dir,
                                         const ReplicationOptions& opt) {
  ReplicationRecord rec;
  rec.replication = rep + 1;
  rec.data_seed = replication_seed(seed, rep, 0);
  rec.chain_seed = replication_seed(seed, rep, 1);
  char name[32];
  std::snprintf(name, sizeof name, "rep_%03d", rep + 1);
  const std::filesystem::path dir = out_dir.empty() ? out_dir : out_dir / name;
  try {
    const SimulatedData sim = simulate(scenario, rec.data_seed);
    rec.censoring_rate = sim.censoring_rate;
    RunConfig run = cfg;
    run.chain.seed = rec.chain_seed;
    PreparedData prepared;
    const SelectionResult sel = select(sim.data, run, &prepared);
    rec.completed = true;
    rec.sweep = sel.sweep;
    for (const auto& [block, a] : sel.chain.acceptance) rec.acceptance[block] = a.rate();
    rec.converged = acceptance_in_range(sel.chain);
    if (!dir.empty()) {
      write_simulation(dir, sim);
      json m = manifest("replicate", run, prepared, {});
      m["replication"] = rec.replication;
      m["data_seed"] = rec.data_seed;
      if (opt.write_draws) {
        write_selection(dir, sel, prepared, m);
      } else {
        write_text(dir / "selection.json", dump(selection_json(sel)));
        write_text(dir / "occupancy.csv", occupancy_csv(sel.chain));
        m["acceptance"] = acceptance_json(sel.chain);
        write_text(dir / "manifest.json", dump(m));
      }
    }
  } catch (const NumericalError& e) {
    rec.error = std::string("numerical: ") + e.what();
  } catch (const DataError& e) {
    rec.error = std::string("data: ") + e.what();
  }
  return rec;
}

/// Simulates and selects classes `reps` times. Replications run on `opt.jobs`
/// threads; the report is assembled in replication order.
inline ReplicationReport run_replications(const ScenarioConfig& scenario, int reps, const RunConfig& cfg,
                                          std::uint64_t seed, const std::filesystem::path& out_dir = {},
                                          const ReplicationOptions& opt = {}) {
  if (reps < 1) throw DataError("reps must be at least 1");
  scenario.validate();
  cfg.chain.validate();

  std::vector<ReplicationRecord> records(static_cast<std::size_t>(reps));
  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int r = next++; r < reps; r = next++) {
      records[static_cast<std::size_t>(r)] = run_replication(scenario, r, cfg, seed, out_dir, opt);
    }
  };
  const int jobs = std::clamp(opt.jobs, 1, reps);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  ReplicationReport rep;
  rep.scenario = scenario.name;
  rep.reps = reps;
  rep.seed = seed;
  rep.true_classes = scenario.true_classes();
  rep.G_max = cfg.selection.G_max;
  rep.psi = cfg.selection.psi;
  for (const auto& r : records) {
    if (!r.completed) ++rep.failed;
    else if (!r.converged) ++rep.not_converged;
    else ++rep.included;
  }
  for (double psi : cfg.selection.psi_sweep) {
    PsiRow row;
    row.psi = psi;
    int correct = 0;
    std::map<int, long> counts;
    for (const auto& r : records) {
      if (!r.completed || !r.converged) continue;
      const auto m = r.mode_at(psi);
      if (!m) continue;
      ++row.selections[*m];
      ++counts[*m];
      if (*m == rep.true_classes) ++correct;
    }
    row.percent_correct = rep.included > 0 ? 100.0 * correct / rep.included : 0.0;
    if (!counts.empty()) row.mode = posterior_mode_classes(counts);
    rep.table.push_back(row);
  }
  rep.replications = std::move(records);
  return rep;
}

inline json report_json(const ReplicationReport& r) {
  json table = json::array();
  for (const auto& row : r.table) {
    json sel = json::object();
    for (const auto& [g, c] : row.selections) sel[std::to_string(g)] = c;
    table.push_back({{"psi", row.psi},
                     {"percent_correct", row.percent_correct},
                     {"mode", row.mode ? json(*row.mode) : json(nullptr)},
                     {"selections", sel}});
  }
  json reps = json::array();
  for (const auto& rec : r.replications) {
    json modes = json::object();
    for (const auto& s : rec.sweep) modes[format_number(s.psi)] = s.mode;
    json acc = json::object();
    for (const auto& [k, v] : rec.acceptance) acc[k] = v;
    reps.push_back({{"replication", rec.replication},
                    {"data_seed", rec.data_seed},
                    {"chain_seed", rec.chain_seed},
                    {"completed", rec.completed},
                    {"converged", rec.converged},
                    {"error", rec.error},
                    {"censoring_rate", std::isfinite(rec.censoring_rate) ? json(rec.censoring_rate) : json(nullptr)},
                    {"mode", modes},
                    {"acceptance", acc}});
  }
  return {{"scenario", r.scenario},   {"reps", r.reps},
          {"seed", r.seed},           {"true_classes", r.true_classes},
          {"G_max", r.G_max},         {"psi", r.psi},
          {"failed", r.failed},       {"not_converged", r.not_converged},
          {"included", r.included},   {"table", table},
          {"replications", reps}};
}

/// psi, percent correct and mode over included replications.
inline std::string report_csv(const ReplicationReport& r) {
  std::string text = "psi,percent_correct,mode,included\n";
  for (const auto& row : r.table) {
    text += format_number(row.psi) + "," + format_number(row.percent_correct) + "," +
            (row.mode ? std::to_string(*row.mode) : std::string("NA")) + "," + std::to_string(r.included) + "\n";
  }
  return text;
}

inline std::string replications_csv(const ReplicationReport& r) {
  std::string text = "replication,data_seed,chain_seed,completed,converged,censoring_rate";
  for (const auto& row : r.table) text += ",mode_psi_" + format_number(row.psi);
  text += "\n";
  for (const auto& rec : r.replications) {
    text += std::to_string(rec.replication) + "," + std::to_string(rec.data_seed) + "," +
            std::to_string(rec.chain_seed) + "," + (rec.completed ? "1" : "0") + "," + (rec.converged ? "1" : "0") +
            "," + (std::isfinite(rec.censoring_rate) ? format_number(rec.censoring_rate) : std::string("NA"));
    for (const auto& row : r.table) {
      const auto m = rec.mode_at(row.psi);
      text += "," + (m ? std::to_string(*m) : std::string("NA"));
    }
    text += "\n";
  }
  return text;
}

inline void write_report(const std::filesystem::path& dir, const ReplicationReport& r) {
  write_text(dir / "report.json", dump(report_json(r)));
  write_text(dir / "report.csv", report_csv(r));
  write_text(dir / "replications.csv", replications_csv(r));
}

}  // namespace lcjm

#endif  // LCJM_HARNESS_HPP
