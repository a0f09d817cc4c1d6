#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lcjm/lcjm.hpp"

namespace fs = std::filesystem;

namespace {

struct ChainOverrides {
  std::optional<long> iterations, burn_in, thin;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* app) {
    app->add_option("--iterations", iterations, "Override chain.iterations");
    app->add_option("--burn-in", burn_in, "Override chain.burn_in");
    app->add_option("--thin", thin, "Override chain.thin");
    app->add_option("--seed", seed, "Override chain.seed");
  }

  void apply(lcjm::RunConfig& c) const {
    if (iterations) c.chain.iterations = *iterations;
    if (burn_in) c.chain.burn_in = *burn_in;
    if (thin) c.chain.thin = *thin;
    if (seed) c.chain.seed = *seed;
    c.chain.validate();
  }
};

lcjm::RunConfig load(const std::string& path) {
  return path.empty() ? lcjm::RunConfig::simulation_defaults() : lcjm::load_config(path);
}

int run_simulate(const std::string& scenario, std::uint64_t seed, int per_component, const fs::path& out) {
  const auto which = lcjm::parse_scenario(scenario);
  const auto sim = lcjm::simulate_scenario(which, seed, per_component);
  lcjm::write_simulation(out, sim);
  lcjm::json m = {{"command", "simulate"},
                  {"build", lcjm::build_info()},
                  {"scenario", lcjm::to_string(which)},
                  {"seed", seed},
                  {"per_component", per_component},
                  {"outputs",
                   {{"longitudinal.csv", lcjm::file_digest(out / "longitudinal.csv")},
                    {"survival.csv", lcjm::file_digest(out / "survival.csv")}}}};
  lcjm::write_text(out / "manifest.json", lcjm::dump(m));
  std::cout << "simulated " << sim.data.n() << " subjects, censoring " << sim.censoring_rate << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian latent-class joint models for longitudinal and time-to-event data"};
  app.require_subcommand(1);

  std::string scenario = "II", config_path, long_path, surv_path, draws_path, truth_path, relabel_stat;
  fs::path out;
  std::uint64_t sim_seed = 1;
  int per_component = 0, gmax = 0, reps = 10, jobs = 1;
  std::optional<double> psi;
  bool no_draws = false;
  ChainOverrides fit_over, sel_over, rep_over;

  auto* simulate = app.add_subcommand("simulate", "Simulate a scenario from the generating design");
  simulate->add_option("--scenario", scenario, "I, II or III")->required();
  simulate->add_option("--seed", sim_seed, "Simulation seed")->required();
  simulate->add_option("--out", out, "Output directory")->required();
  simulate->add_option("--per-component", per_component, "Subjects per component (default: design size)");

  auto* fit = app.add_subcommand("fit", "Fit the joint model with a fixed number of classes");
  fit->add_option("--long", long_path, "Longitudinal CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--surv", surv_path, "Survival CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--config", config_path, "Config JSON")->check(CLI::ExistingFile);
  fit->add_option("--out", out, "Output directory")->required();
  fit_over.add(fit);

  auto* select = app.add_subcommand("select", "Choose the number of classes with an overfitted mixture");
  select->add_option("--long", long_path, "Longitudinal CSV")->required()->check(CLI::ExistingFile);
  select->add_option("--surv", surv_path, "Survival CSV")->required()->check(CLI::ExistingFile);
  select->add_option("--config", config_path, "Config JSON")->check(CLI::ExistingFile);
  select->add_option("--gmax", gmax, "Number of classes in the overfitted fit");
  select->add_option("--psi", psi, "Emptiness threshold");
  select->add_option("--out", out, "Output directory")->required();
  sel_over.add(select);

  auto* replicate = app.add_subcommand("replicate", "Repeat simulate + select and tabulate the selected counts");
  replicate->add_option("--scenario", scenario, "I, II or III")->required();
  replicate->add_option("--reps", reps, "Replications")->check(CLI::PositiveNumber);
  replicate->add_option("--config", config_path, "Config JSON")->check(CLI::ExistingFile);
  replicate->add_option("--out", out, "Output directory")->required();
  replicate->add_option("--per-component", per_component, "Subjects per component (default: config)");
  replicate->add_option("--jobs", jobs, "Concurrent replications")->check(CLI::PositiveNumber);
  replicate->add_flag("--no-draws", no_draws, "Skip per-replication draws files");
  rep_over.add(replicate);

  auto* summarize = app.add_subcommand("summarize", "Posterior summaries of a draws CSV");
  summarize->add_option("--draws", draws_path, "Draws CSV")->required()->check(CLI::ExistingFile);
  summarize->add_option("--relabel", relabel_stat, "Relabel first, by intercept or alpha")
      ->expected(0, 1)
      ->default_str("intercept");
  summarize->add_option("--truth", truth_path, "Truth JSON: report bias and coverage")->check(CLI::ExistingFile);
  summarize->add_option("--out", out, "Directory for summary files (default: stdout)");

  auto* schema = app.add_subcommand("config-schema", "Print the default configuration with descriptions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*simulate) return run_simulate(scenario, sim_seed, per_component, out);

    if (*fit) {
      auto cfg = load(config_path);
      fit_over.apply(cfg);
      const auto data = lcjm::read_dataset(long_path, surv_path);
      const auto r = lcjm::fit(data, cfg);
      std::map<std::string, fs::path> inputs{{"longitudinal", long_path}, {"survival", surv_path}};
      if (!config_path.empty()) inputs["config"] = config_path;
      lcjm::write_fit(out, r, lcjm::manifest("fit", cfg, r.prepared, inputs));
      std::cout << "fit G = " << r.prepared.spec.G << ", " << r.chain.draws.size() << " draws written to "
                << out.string() << "\n";
      return 0;
    }

    if (*select) {
      auto cfg = load(config_path);
      sel_over.apply(cfg);
      if (gmax > 0) cfg.selection.G_max = gmax;
      if (psi) cfg.selection.psi = *psi;
      const auto data = lcjm::read_dataset(long_path, surv_path);
      lcjm::PreparedData prepared;
      const auto r = lcjm::select(data, cfg, &prepared);
      std::map<std::string, fs::path> inputs{{"longitudinal", long_path}, {"survival", surv_path}};
      if (!config_path.empty()) inputs["config"] = config_path;
      lcjm::write_selection(out, r, prepared, lcjm::manifest("select", cfg, prepared, inputs));
      std::cout << "selected " << r.G_opt << " classes at psi = " << r.psi << "\n";
      return 0;
    }

    if (*replicate) {
      auto cfg = load(config_path);
      rep_over.apply(cfg);
      if (per_component > 0) cfg.per_component = per_component;
      // --seed on replicate is the master seed
      const std::uint64_t master = rep_over.seed.value_or(1);
      const auto sc = lcjm::scenario_config(lcjm::parse_scenario(scenario), cfg.per_component);
      lcjm::ReplicationOptions opt;
      opt.jobs = jobs;
      opt.write_draws = !no_draws;
      const auto report = lcjm::run_replications(sc, reps, cfg, master, out, opt);
      lcjm::write_report(out, report);
      lcjm::json m = {{"command", "replicate"},
                      {"build", lcjm::build_info()},
                      {"scenario", sc.name},
                      {"reps", reps},
                      {"seed", master},
                      {"config", lcjm::to_json(cfg)}};
      if (!config_path.empty()) m["inputs"] = {{"config", {{"path", config_path}, {"fnv1a64", lcjm::file_digest(config_path)}}}};
      lcjm::write_text(out / "manifest.json", lcjm::dump(m));
      std::cout << lcjm::report_csv(report);
      if (report.failed > 0) std::cout << report.failed << " replication(s) failed\n";
      return 0;
    }

    if (*summarize) {
      auto draws = lcjm::read_draws(draws_path);
      std::optional<lcjm::RelabelResult> relabeled;
      if (summarize->count("--relabel") > 0) {
        auto [table, r] = lcjm::relabel_table(draws, lcjm::parse_relabel_statistic(relabel_stat.empty() ? "intercept" : relabel_stat));
        draws = std::move(table);
        relabeled = std::move(r);
      }
      const std::string summary = lcjm::summary_csv(lcjm::summarize_draws(draws));
      std::string recovery;
      if (!truth_path.empty()) {
        lcjm::json truth;
        try {
          truth = lcjm::json::parse(lcjm::read_text(truth_path));
        } catch (const nlohmann::json::parse_error& e) {
          throw lcjm::DataError("truth file is not valid JSON: " + std::string(e.what()));
        }
        recovery = lcjm::recovery_csv(lcjm::score_fit(draws, truth));
      }
      if (out.empty()) {
        std::cout << (recovery.empty() ? summary : recovery);
      } else {
        lcjm::write_text(out / "summary.csv", summary);
        if (!recovery.empty()) lcjm::write_text(out / "recovery.csv", recovery);
        if (relabeled) {
          lcjm::write_text(out / "draws_relabeled.csv", lcjm::draws_csv(draws));
          lcjm::write_text(out / "permutations.csv", lcjm::permutation_csv(*relabeled));
        }
      }
      return 0;
    }

    if (*schema) {
      std::cout << lcjm::dump(lcjm::config_schema());
      return 0;
    }
  } catch (const lcjm::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const lcjm::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
