#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eslqr/averaging_lab.hpp"
#include "eslqr/config.hpp"
#include "eslqr/dfim.hpp"
#include "eslqr/riccati.hpp"
#include "eslqr/sim_oracle.hpp"

namespace {

using eslqr::ConfigError;
using nlohmann::json;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  bool dump_config = false;
};

void add_common_options(CLI::App* cmd, CommonArgs& args, bool config_needed) {
  auto* config =
      cmd->add_option("--config", args.config_path, "JSON config file");
  if (config_needed) {
    config->required();
  }
  cmd->add_option("--out", args.out_dir, "Output directory (default: .)");
  cmd->add_option("--seed", args.seed,
                  "Replace the seed of every random source in the config");
  cmd->add_flag("--dump-config", args.dump_config,
                "Print the normalized config and exit without running");
}

json load_config(const CommonArgs& args) {
  if (args.config_path.empty()) {
    return json::object();
  }
  std::ifstream in(args.config_path);
  if (!in) {
    throw ConfigError("cannot open config file: " + args.config_path);
  }
  return json::parse(in);  // parse_error maps to the config exit code
}

std::filesystem::path output_path(const CommonArgs& args,
                                  const std::string& name) {
  const std::filesystem::path dir(args.out_dir);
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot open output file: " + path.string());
  }
  out << text;
  if (!out) {
    throw ConfigError("failed writing output file: " + path.string());
  }
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

const json* find_key(const json& j, const char* key) {
  if (!j.is_object()) {
    return nullptr;
  }
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double number_or(const json& section, const char* key, double fallback,
                 const std::string& what) {
  const json* v = find_key(section, key);
  if (v == nullptr) {
    return fallback;
  }
  if (!v->is_number() || !std::isfinite(v->get<double>())) {
    throw ConfigError(what + "." + key + " must be a finite number");
  }
  return v->get<double>();
}

long integer_or(const json& section, const char* key, long fallback,
                const std::string& what) {
  const json* v = find_key(section, key);
  if (v == nullptr) {
    return fallback;
  }
  if (!v->is_number_integer()) {
    throw ConfigError(what + "." + key + " must be an integer");
  }
  return v->get<long>();
}

// --- dare ----------------------------------------------------------------

int cmd_dare(const CommonArgs& args) {
  const json normalized =
      eslqr::normalize_plant_cost_config(load_config(args), args.seed);
  if (args.dump_config) {
    print_json(normalized);
    return 0;
  }
  const eslqr::LtiPlant plant = eslqr::resolve_plant(normalized.at("plant"));
  const eslqr::CostSpec cost =
      eslqr::resolve_cost(normalized.at("cost"), plant.n(), plant.m());
  eslqr::log_info("solving the Riccati fixed point");
  const eslqr::DareSolution solution = eslqr::solve_dare(plant, cost);
  const json out = eslqr::dare_to_json(solution);
  write_text_file(output_path(args, "dare.json"), out.dump(2) + "\n");
  print_json(out);
  return 0;
}

// --- run-esc / run-dfim --------------------------------------------------

int cmd_run_esc(const CommonArgs& args, bool with_dfim_preset) {
  json config = load_config(args);
  if (with_dfim_preset) {
    config = eslqr::deep_merge(eslqr::dfim_experiment_preset(), config);
  }
  const json normalized =
      eslqr::normalize_experiment_config(config, args.seed);
  if (args.dump_config) {
    print_json(normalized);
    return 0;
  }
  eslqr::ResolvedExperiment experiment =
      eslqr::resolve_experiment(normalized);

  std::optional<double> j_star;
  eslqr::RunProbes probes;
  if (experiment.probe_dare) {
    eslqr::log_info("solving the reference Riccati problem for error probes");
    const eslqr::DareSolution reference =
        eslqr::solve_dare(experiment.plant, experiment.cost);
    j_star = reference.J_star;
    const eslqr::LtiPlant* plant = &experiment.plant;
    const eslqr::CostSpec* cost = &experiment.cost;
    const double j_opt = reference.J_star;
    probes.rel_err = [plant, cost, j_opt](const Eigen::MatrixXd& K) {
      try {
        return (eslqr::infinite_cost(*plant, *cost, K) - j_opt) / j_opt;
      } catch (const eslqr::UnstableError&) {
        return std::numeric_limits<double>::infinity();
      }
    };
  }
  if (experiment.probe_sigma) {
    const eslqr::LtiPlant* plant = &experiment.plant;
    probes.sigma_max = [plant](const Eigen::MatrixXd& probed) {
      return eslqr::spectral_radius(eslqr::closed_loop(*plant, probed));
    };
  }

  eslqr::TruncatedCostOracle oracle(experiment.plant, experiment.cost,
                                    experiment.esc.T);
  {
    std::ostringstream msg;
    msg << "running " << experiment.esc.iterations
        << " optimizer iterations (gamma " << experiment.esc.gamma
        << ", delta " << experiment.esc.delta << ", T " << experiment.esc.T
        << ", dither period " << experiment.esc.dither.k_prd << ")";
    eslqr::log_info(msg.str());
  }
  const auto t0 = std::chrono::steady_clock::now();
  const eslqr::RunLog log = eslqr::run(experiment.esc, oracle, probes);
  const double wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  if (experiment.csv_name.has_value()) {
    const auto path = output_path(args, *experiment.csv_name);
    eslqr::write_run_csv(path.string(), log, experiment.plant.m(),
                         experiment.plant.n());
    eslqr::log_info("wrote " + path.string());
  }
  const json summary = eslqr::run_summary_json(
      log, experiment.esc.iterations, wall_s, j_star);
  if (experiment.summary_name.has_value()) {
    const auto path = output_path(args, *experiment.summary_name);
    write_text_file(path, summary.dump(2) + "\n");
    eslqr::log_info("wrote " + path.string());
  }
  print_json(summary);
  return log.status == eslqr::RunStatus::completed ? 0 : 3;
}

// --- check-dither --------------------------------------------------------

json normalize_dither_check(const json& config) {
  if (!config.is_object()) {
    throw ConfigError("check-dither config must be a JSON object");
  }
  const json* dither = find_key(config, "dither");
  if (dither == nullptr) {
    throw ConfigError("check-dither config needs a \"dither\" entry");
  }
  json out = json::object();
  const double tol = number_or(config, "tol", 1e-9, "config");
  if (!(tol > 0.0)) {
    throw ConfigError("config.tol must be strictly positive");
  }
  out["tol"] = tol;
  if (dither->is_string()) {
    if (*dither != "canonical") {
      throw ConfigError("dither string form must be \"canonical\"");
    }
    const long rows = integer_or(config, "rows", 0, "config");
    const long cols = integer_or(config, "cols", 0, "config");
    if (rows < 1 || cols < 1) {
      throw ConfigError(
          "canonical dither checks need \"rows\" and \"cols\" >= 1");
    }
    out["dither"] = "canonical";
    out["rows"] = rows;
    out["cols"] = cols;
    return out;
  }
  if (!dither->is_object()) {
    throw ConfigError("dither must be \"canonical\" or {periods, phases}");
  }
  const json* periods = find_key(*dither, "periods");
  const json* phases = find_key(*dither, "phases");
  if (periods == nullptr || phases == nullptr) {
    throw ConfigError("explicit dither needs \"periods\" and \"phases\"");
  }
  out["dither"] = json{{"periods", *periods}, {"phases", *phases}};
  return out;
}

eslqr::DitherSpec build_checked_dither(const json& normalized) {
  const json& dither = normalized.at("dither");
  if (dither.is_string()) {
    return eslqr::canonical_dither_spec(
        static_cast<int>(normalized.at("rows").get<long>()),
        static_cast<int>(normalized.at("cols").get<long>()));
  }
  const Eigen::MatrixXd P =
      eslqr::parse_matrix(dither.at("periods"), "dither.periods");
  const Eigen::MatrixXd F =
      eslqr::parse_matrix(dither.at("phases"), "dither.phases");
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> periods(
      P.rows(), P.cols());
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      if (std::nearbyint(P(i, j)) != P(i, j)) {
        throw ConfigError("dither.periods must contain integers");
      }
      periods(i, j) = static_cast<std::int64_t>(P(i, j));
    }
  }
  try {
    return eslqr::make_dither_spec(periods, F);
  } catch (const eslqr::Error& e) {
    throw ConfigError(std::string("invalid dither: ") + e.what());
  }
}

int cmd_check_dither(const CommonArgs& args) {
  const json normalized = normalize_dither_check(load_config(args));
  if (args.dump_config) {
    print_json(normalized);
    return 0;
  }
  const eslqr::DitherSpec spec = build_checked_dither(normalized);
  const eslqr::OrthonormalityReport report =
      eslqr::verify_orthonormality(spec, normalized.at("tol").get<double>());
  print_json(eslqr::orthonormality_report_json(report));
  return report.pass() ? 0 : 2;
}

// --- avg-check -----------------------------------------------------------

json normalize_avg_check(const json& config,
                         std::optional<std::uint64_t> seed) {
  json normalized = eslqr::normalize_plant_cost_config(config, seed);
  const json* avg = find_key(config, "avg");
  json section = json::object();
  if (avg != nullptr && !avg->is_object()) {
    throw ConfigError("avg must be a JSON object");
  }
  const json empty = json::object();
  const json& in = avg ? *avg : empty;
  section["K"] = eslqr::normalize_gain(
      find_key(in, "K") ? *find_key(in, "K") : json("zero"), "avg.K");
  section["T"] = integer_or(in, "T", 50, "avg");
  if (section["T"].get<long>() < 1) {
    throw ConfigError("avg.T must be >= 1");
  }
  section["delta"] = number_or(in, "delta", 0.1, "avg");
  if (!(section["delta"].get<double>() > 0.0)) {
    throw ConfigError("avg.delta must be strictly positive");
  }
  if (const json* deltas = find_key(in, "deltas")) {
    if (!deltas->is_array() || deltas->size() < 3) {
      throw ConfigError("avg.deltas must list at least three amplitudes");
    }
    section["deltas"] = *deltas;
  } else {
    section["deltas"] = json::array({0.2, 0.1, 0.05});
  }
  std::vector<double> delta_grid;
  for (const json& d : section["deltas"]) {
    if (!d.is_number() || !(d.get<double>() > 0.0)) {
      throw ConfigError("avg.deltas entries must be positive numbers");
    }
    delta_grid.push_back(d.get<double>());
  }
  for (std::size_t i = 1; i < delta_grid.size(); ++i) {
    const double expected = 0.5 * delta_grid[i - 1];
    if (std::abs(delta_grid[i] - expected) > 1e-12 * delta_grid[i - 1]) {
      throw ConfigError(
          "avg.deltas must halve at each step; the quadratic-scaling window "
          "is calibrated for consecutive halvings");
    }
  }
  section["gamma0"] = number_or(in, "gamma0", 0.02, "avg");
  if (!(section["gamma0"].get<double>() > 0.0)) {
    throw ConfigError("avg.gamma0 must be strictly positive");
  }
  section["grid_points"] = integer_or(in, "grid_points", 4, "avg");
  if (section["grid_points"].get<long>() < 2) {
    throw ConfigError("avg.grid_points must be >= 2");
  }
  section["theta"] = number_or(in, "theta", 10.0, "avg");
  if (!(section["theta"].get<double>() > 0.0)) {
    throw ConfigError("avg.theta must be strictly positive");
  }
  normalized["avg"] = section;
  return normalized;
}

int cmd_avg_check(const CommonArgs& args) {
  const json normalized = normalize_avg_check(load_config(args), args.seed);
  if (args.dump_config) {
    print_json(normalized);
    return 0;
  }
  const eslqr::LtiPlant plant = eslqr::resolve_plant(normalized.at("plant"));
  const eslqr::CostSpec cost =
      eslqr::resolve_cost(normalized.at("cost"), plant.n(), plant.m());
  const json& avg = normalized.at("avg");
  const Eigen::MatrixXd K =
      eslqr::resolve_gain(avg.at("K"), plant, "avg.K");
  const eslqr::DitherSpec dither =
      eslqr::canonical_dither_spec(plant.m(), plant.n());

  // Quadratic amplitude scaling of the gradient-estimate error: halving the
  // dither amplitude should cut the error by roughly four.
  eslqr::log_info("measuring gradient-estimate error across amplitudes");
  json grad = json::object();
  grad["deltas"] = avg.at("deltas");
  json errors = json::array();
  std::vector<double> error_values;
  for (const json& d : avg.at("deltas")) {
    const double err = eslqr::gradient_estimate_error(
        plant, cost, K, d.get<double>(), dither, /*use_infinite=*/true);
    errors.push_back(err);
    error_values.push_back(err);
  }
  grad["errors"] = errors;
  json ratios = json::array();
  bool grad_pass = true;
  for (std::size_t i = 1; i < error_values.size(); ++i) {
    const double ratio = error_values[i] / error_values[i - 1];
    ratios.push_back(eslqr::finite_or_null(ratio));
    if (!(ratio >= 0.15 && ratio <= 0.4)) {
      grad_pass = false;
    }
  }
  grad["ratios"] = ratios;
  grad["window"] = json::array({0.15, 0.4});
  grad["pass"] = grad_pass;

  // Step-size scaling of the live-vs-averaged trajectory deviation at a
  // fixed continuous horizon.
  eslqr::log_info("running the trajectory-closeness scaling study");
  eslqr::TruncatedCostOracle oracle(plant, cost, avg.at("T").get<long>());
  eslqr::EscParams field_params;
  field_params.gamma = 1.0;  // unused by the field; steps scale it outside
  field_params.delta = avg.at("delta").get<double>();
  field_params.T = avg.at("T").get<long>();
  field_params.dither = dither;
  field_params.K0 = K;
  const eslqr::PeriodicField field =
      eslqr::make_esc_field(oracle, field_params);
  Eigen::VectorXd chi0(1 + K.size());
  chi0(0) = oracle.query(K);
  chi0.tail(K.size()) = eslqr::flatten_row_major(K);
  std::vector<double> gamma_grid;
  double gamma = avg.at("gamma0").get<double>();
  for (long i = 0; i < avg.at("grid_points").get<long>(); ++i) {
    gamma_grid.push_back(gamma);
    gamma *= 0.5;
  }
  const eslqr::ScalingReport scaling = eslqr::closeness_scaling(
      field, chi0, gamma_grid, avg.at("theta").get<double>());
  json closeness = json::object();
  closeness["gammas"] = scaling.gammas;
  closeness["sup_deviations"] = scaling.sup_deviations;
  json sratios = json::array();
  for (double r : scaling.ratios) {
    sratios.push_back(eslqr::finite_or_null(r));
  }
  closeness["ratios"] = sratios;
  closeness["aborted"] = scaling.aborted;
  closeness["pass"] = scaling.pass;

  json report;
  report["gradient_scaling"] = grad;
  report["closeness"] = closeness;
  report["pass"] = grad_pass && scaling.pass;
  print_json(report);
  return report["pass"].get<bool>() ? 0 : 2;
}

// --- rollout -------------------------------------------------------------

json normalize_rollout(const json& config,
                       std::optional<std::uint64_t> seed) {
  json normalized = eslqr::normalize_plant_cost_config(config, seed);
  const json* rollout = find_key(config, "rollout");
  if (rollout == nullptr || !rollout->is_object()) {
    throw ConfigError("rollout config needs a \"rollout\" object");
  }
  json section = json::object();
  const json* gain = find_key(*rollout, "K");
  if (gain == nullptr) {
    throw ConfigError("rollout needs a gain \"K\"");
  }
  section["K"] = eslqr::normalize_gain(*gain, "rollout.K");
  section["T"] = integer_or(*rollout, "T", 20, "rollout");
  if (section["T"].get<long>() < 1) {
    throw ConfigError("rollout.T must be >= 1");
  }
  const json* csv = find_key(*rollout, "csv");
  if (csv != nullptr &&
      (!csv->is_string() || csv->get<std::string>().empty())) {
    throw ConfigError("rollout.csv must be a nonempty file name");
  }
  section["csv"] = csv ? *csv : json("rollout.csv");
  normalized["rollout"] = section;
  return normalized;
}

int cmd_rollout(const CommonArgs& args) {
  const json normalized = normalize_rollout(load_config(args), args.seed);
  if (args.dump_config) {
    print_json(normalized);
    return 0;
  }
  const eslqr::LtiPlant plant = eslqr::resolve_plant(normalized.at("plant"));
  const eslqr::CostSpec cost =
      eslqr::resolve_cost(normalized.at("cost"), plant.n(), plant.m());
  const json& section = normalized.at("rollout");
  const Eigen::MatrixXd K =
      eslqr::resolve_gain(section.at("K"), plant, "rollout.K");
  const long T = section.at("T").get<long>();

  std::string csv = "i,t,norm_x,stage_cost\n";
  char buf[64];
  for (int i = 0; i < plant.n(); ++i) {
    const eslqr::Rollout rollout = eslqr::simulate_rollout(
        plant, cost, K, Eigen::VectorXd::Unit(plant.n(), i), T);
    for (std::size_t t = 0; t < rollout.states.size(); ++t) {
      csv += std::to_string(i);
      csv += ',';
      csv += std::to_string(t);
      csv += ',';
      std::snprintf(buf, sizeof(buf), "%.17g", rollout.states[t].norm());
      csv += buf;
      csv += ',';
      if (t < rollout.stage_costs.size()) {
        std::snprintf(buf, sizeof(buf), "%.17g", rollout.stage_costs[t]);
        csv += buf;
      }
      csv += '\n';
    }
  }
  const auto path =
      output_path(args, section.at("csv").get<std::string>());
  write_text_file(path, csv);
  json out;
  out["csv"] = path.string();
  out["initial_conditions"] = plant.n();
  out["T"] = T;
  print_json(out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Data-driven LQR gain synthesis by dither-based extremum seeking, "
      "with verification oracles"};
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* dare =
      app.add_subcommand("dare", "Solve the reference Riccati problem");
  add_common_options(dare, args, /*config_needed=*/true);
  CLI::App* run_esc = app.add_subcommand(
      "run-esc", "Run the extremum-seeking gain optimizer");
  add_common_options(run_esc, args, /*config_needed=*/true);
  CLI::App* run_dfim = app.add_subcommand(
      "run-dfim", "Run the tuned induction-motor experiment preset");
  add_common_options(run_dfim, args, /*config_needed=*/false);
  CLI::App* check_dither = app.add_subcommand(
      "check-dither", "Verify a dither schedule's orthonormality sums");
  add_common_options(check_dither, args, /*config_needed=*/true);
  CLI::App* avg_check = app.add_subcommand(
      "avg-check",
      "Run the averaging diagnostics: gradient-estimate amplitude scaling "
      "and live-vs-averaged trajectory closeness");
  add_common_options(avg_check, args, /*config_needed=*/true);
  CLI::App* rollout = app.add_subcommand(
      "rollout", "Simulate closed-loop responses from canonical initial "
                 "conditions at a fixed gain");
  add_common_options(rollout, args, /*config_needed=*/true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (dare->parsed()) {
      return cmd_dare(args);
    }
    if (run_esc->parsed()) {
      return cmd_run_esc(args, /*with_dfim_preset=*/false);
    }
    if (run_dfim->parsed()) {
      return cmd_run_esc(args, /*with_dfim_preset=*/true);
    }
    if (check_dither->parsed()) {
      return cmd_check_dither(args);
    }
    if (avg_check->parsed()) {
      return cmd_avg_check(args);
    }
    if (rollout->parsed()) {
      return cmd_rollout(args);
    }
  } catch (const json::exception& e) {
    eslqr::log_error(std::string("config parse failure: ") + e.what());
    return 1;
  } catch (const ConfigError& e) {
    eslqr::log_error(e.what());
    return 1;
  } catch (const eslqr::Error& e) {
    eslqr::log_error(e.what());
    return 2;
  } catch (const std::exception& e) {
    eslqr::log_error(std::string("unexpected failure: ") + e.what());
    return 2;
  }
  return 1;
}
