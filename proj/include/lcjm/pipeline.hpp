#ifndef LCJM_PIPELINE_HPP
#define LCJM_PIPELINE_HPP

#include <filesystem>
#include <map>
#include <string>
#include <utility>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "lcjm/config.hpp"
#include "lcjm/data.hpp"
#include "lcjm/io.hpp"
#include "lcjm/model.hpp"
#include "lcjm/relabel.hpp"
#include "lcjm/sampler.hpp"
#include "lcjm/selection.hpp"

namespace lcjm {

inline constexpr const char* kVersion = "0.1.0";

inline json build_info() {
  return {{"lcjm", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                                "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}};
}

inline json standardization_json(const Standardization& s) {
  const auto col = [](const ColumnScaling& c) { return json{{"name", c.name}, {"center", c.center}, {"scale", c.scale}}; };
  json lc = json::array(), sc = json::array();
  for (const auto& c : s.long_columns) lc.push_back(col(c));
  for (const auto& c : s.surv_columns) sc.push_back(col(c));
  return {{"outcome", s.outcome}, {"covariates", s.covariates}, {"y", col(s.y)}, {"longitudinal", lc}, {"survival", sc}};
}

inline json hazard_basis_json(const BSplineSpec& b) {
  return {{"degree", b.degree}, {"internal_knots", b.internal_knots}, {"boundary", {b.boundary.first, b.boundary.second}}};
}

inline json step_sizes_json(const ChainOutput& out) {
  json j = json::object();
  for (const auto& [name, v] : out.final_step_sizes) j[name] = v;
  return j;
}

/// A prepared fit: possibly standardized data plus the spec bound to it.
struct PreparedData {
  Dataset data;
  Standardization standardization;
  ModelSpec spec;
};

inline PreparedData prepare(const Dataset& raw, const RunConfig& cfg) {
  auto [data, info] = standardize(raw, cfg.standardize_outcome, cfg.standardize_covariates);
  ModelSpec spec = cfg.resolve(data);
  return {std::move(data), std::move(info), std::move(spec)};
}

struct FitResult {
  PreparedData prepared;
  ChainOutput chain;
  RelabelResult relabeled;
};

inline FitResult fit(const Dataset& raw, const RunConfig& cfg) {
  FitResult r;
  r.prepared = prepare(raw, cfg);
  const JointModel model(r.prepared.spec, r.prepared.data, cfg.quadrature.rule());
  r.chain = run_chain(model, cfg.chain);
  r.relabeled = relabel_draws(r.chain, cfg.relabel);
  return r;
}

inline json manifest(const std::string& command, const RunConfig& cfg, const PreparedData& p,
                     const std::map<std::string, std::filesystem::path>& inputs) {
  json in = json::object();
  for (const auto& [role, path] : inputs) in[role] = {{"path", path.string()}, {"fnv1a64", file_digest(path)}};
  return {{"command", command},
          {"build", build_info()},
          {"seed", cfg.chain.seed},
          {"config", to_json(cfg)},
          {"inputs", in},
          {"data", {{"subjects", p.data.n()}, {"observations", p.data.total_obs()}}},
          {"hazard_basis", hazard_basis_json(p.spec.hazard_basis)},
          {"standardization", standardization_json(p.standardization)}};
}

/// Writes draws (sampler labels and relabeled), permutations, occupancy, summary and manifest.
inline void write_fit(const std::filesystem::path& dir, const FitResult& r, json manifest_doc) {
  const ModelSpec& spec = r.prepared.spec;
  write_text(dir / "draws.csv", draws_csv(spec, r.chain));
  write_text(dir / "draws_relabeled.csv", draws_csv(spec, r.relabeled.output));
  write_text(dir / "permutations.csv", permutation_csv(r.relabeled));
  write_text(dir / "occupancy.csv", occupancy_csv(r.chain));
  write_text(dir / "summary.csv", summary_csv(summarize_draws(draw_table(spec, r.relabeled.output))));
  manifest_doc["fixed_effects"] = spec.fixed_names();
  manifest_doc["random_effects"] = spec.random_names();
  manifest_doc["retained_draws"] = r.chain.draw_iterations.size();
  manifest_doc["acceptance"] = acceptance_json(r.chain);
  manifest_doc["final_step_sizes"] = step_sizes_json(r.chain);
  manifest_doc["relabel_ties"] = r.relabeled.tied_draws.size();
  write_text(dir / "manifest.json", dump(manifest_doc));
}

inline SelectionResult select(const Dataset& raw, const RunConfig& cfg, PreparedData* prepared_out = nullptr) {
  PreparedData p = prepare(raw, cfg);
  SelectionResult r = select_num_classes(p.spec, p.data, cfg.chain, cfg.selection, cfg.quadrature.rule());
  if (prepared_out) *prepared_out = std::move(p);
  return r;
}

inline void write_selection(const std::filesystem::path& dir, const SelectionResult& r, const PreparedData& p,
                            json manifest_doc) {
  write_text(dir / "selection.json", dump(selection_json(r)));
  write_text(dir / "occupancy.csv", occupancy_csv(r.chain));
  SelectionConfig sel;
  sel.G_max = r.chain.occupancy.empty() ? 1 : static_cast<int>(r.chain.occupancy.front().size());
  sel.a = r.a;
  write_text(dir / "draws.csv", draws_csv(overfitted_spec(p.spec, sel), r.chain));
  manifest_doc["acceptance"] = acceptance_json(r.chain);
  manifest_doc["final_step_sizes"] = step_sizes_json(r.chain);
  write_text(dir / "manifest.json", dump(manifest_doc));
}

}  // namespace lcjm

#endif  // LCJM_PIPELINE_HPP
