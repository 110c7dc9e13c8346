#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "eslqr/dither.hpp"
#include "eslqr/esc_solver.hpp"
#include "eslqr/lti_cost.hpp"
#include "eslqr/riccati.hpp"

// Experiment configuration (single JSON document), preset resolution, and
// the machine-readable output writers used by the command-line runner. The
// schema is documented in the README; every config is first normalized
// (defaults filled in, seeds baked) so that a dumped config re-runs
// identically.

namespace eslqr {

// --- logging -------------------------------------------------------------

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

// Level parsed once from the ESLQR_LOG_LEVEL environment variable
// (error|warn|info|debug, default warn).
LogLevel log_level();

void log_message(LogLevel level, const std::string& message);

inline void log_error(const std::string& m) { log_message(LogLevel::error, m); }
inline void log_warn(const std::string& m) { log_message(LogLevel::warn, m); }
inline void log_info(const std::string& m) { log_message(LogLevel::info, m); }
inline void log_debug(const std::string& m) { log_message(LogLevel::debug, m); }

// --- JSON helpers --------------------------------------------------------

// Rectangular array-of-arrays -> matrix; throws ConfigError with the field
// name on malformed input.
Eigen::MatrixXd parse_matrix(const nlohmann::json& j, const std::string& what);

// Matrix -> array of row arrays (lossless round-trip numbers).
nlohmann::json matrix_to_json(const Eigen::MatrixXd& M);

// Finite double -> JSON number; NaN/Inf -> JSON null (JSON has no Inf).
nlohmann::json finite_or_null(double v);

// --- configuration -------------------------------------------------------

// Fully resolved experiment, ready to run.
struct ResolvedExperiment {
  LtiPlant plant;
  CostSpec cost;
  EscParams esc;
  bool probe_dare = true;
  bool probe_sigma = true;
  std::optional<std::string> csv_name;
  std::optional<std::string> summary_name;
};

// Base config of the tuned motor-benchmark experiment (preset behind the
// run-dfim command); user configs deep-merge on top of it.
nlohmann::json dfim_experiment_preset();

// Recursive merge: object values merge key-by-key, everything else is
// replaced by `overlay`.
nlohmann::json deep_merge(const nlohmann::json& base,
                          const nlohmann::json& overlay);

// Fills in defaults, validates the shape of every field, and bakes seeds
// (seed_override replaces the seed of every "random" source; a random
// source with no seed and no override is an error). The result re-resolves
// to itself, which is what makes --dump-config round-trip exactly.
nlohmann::json normalize_experiment_config(
    const nlohmann::json& config, std::optional<std::uint64_t> seed_override);

// Builds the runnable experiment from a normalized config. Explicit dither
// schedules are checked against the orthonormality conditions at 1e-9 and
// rejected (ConfigError) when they fail.
ResolvedExperiment resolve_experiment(const nlohmann::json& normalized);

// Plant/cost-only resolution for commands that do not run the optimizer.
// Normalizes shapes and bakes seeds like normalize_experiment_config.
nlohmann::json normalize_plant_cost_config(
    const nlohmann::json& config, std::optional<std::uint64_t> seed_override);
LtiPlant resolve_plant(const nlohmann::json& normalized_plant);
CostSpec resolve_cost(const nlohmann::json& normalized_cost, int n, int m);

// Gain specification used by esc.K0 and by the rollout/avg-check commands:
// "zero" | matrix | {"damp": c}. The damp form solves B K = cI − A in the
// least-squares sense, placing the closed loop near c·I when B has full
// column action.
nlohmann::json normalize_gain(const nlohmann::json& gain,
                              const std::string& what);
Eigen::MatrixXd resolve_gain(const nlohmann::json& normalized_gain,
                             const LtiPlant& plant, const std::string& what);

// --- output writers ------------------------------------------------------

// One row per optimizer iteration, header exactly:
// k,J_probe,f,rel_err,sigma_max,K_0_0,...  (gain flattened row-major).
// NaN probe values (probe not configured) serialize as empty cells; all
// numbers use 17 significant digits.
void write_run_csv(const std::string& path, const RunLog& log, int m, int n);

nlohmann::json run_summary_json(const RunLog& log, long iterations_requested,
                                double wall_time_s,
                                const std::optional<double>& j_star);

nlohmann::json dare_to_json(const DareSolution& solution);

nlohmann::json orthonormality_report_json(const OrthonormalityReport& report);

}  // namespace eslqr
