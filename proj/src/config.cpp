#include "eslqr/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "eslqr/dfim.hpp"

namespace eslqr {

namespace {

using nlohmann::json;

[[noreturn]] void config_fail(const std::string& message) {
  throw ConfigError(message);
}

double get_number(const json& j, const std::string& what) {
  if (!j.is_number()) {
    config_fail(what + " must be a number");
  }
  const double v = j.get<double>();
  if (!std::isfinite(v)) {
    config_fail(what + " must be finite");
  }
  return v;
}

double get_positive(const json& j, const std::string& what) {
  const double v = get_number(j, what);
  if (!(v > 0.0)) {
    config_fail(what + " must be strictly positive");
  }
  return v;
}

long get_long(const json& j, const std::string& what) {
  if (j.is_number_integer()) {
    return j.get<long>();
  }
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isfinite(v) && std::nearbyint(v) == v &&
        std::abs(v) < 9.0e15) {
      return static_cast<long>(v);
    }
  }
  config_fail(what + " must be an integer");
}

std::uint64_t get_seed(const json& j, const std::string& what) {
  if (j.is_number_unsigned()) {
    return j.get<std::uint64_t>();
  }
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  config_fail(what + " must be a nonnegative integer seed");
}

const json* find(const json& j, const char* key) {
  if (!j.is_object()) {
    return nullptr;
  }
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& what) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      config_fail(what + " has unknown key \"" + item.key() + "\"");
    }
  }
}

json normalize_plant(const json* plant,
                     std::optional<std::uint64_t> seed_override) {
  if (plant == nullptr || !plant->is_object()) {
    config_fail("config requires a \"plant\" object");
  }
  const bool has_preset = find(*plant, "preset") != nullptr;
  const bool has_inline =
      find(*plant, "A") != nullptr || find(*plant, "B") != nullptr;
  const bool has_random = find(*plant, "random") != nullptr;
  if (int(has_preset) + int(has_inline) + int(has_random) != 1) {
    config_fail(
        "plant must have exactly one source: \"preset\", inline \"A\"/\"B\", "
        "or \"random\"");
  }
  json out = json::object();
  if (has_preset) {
    require_keys(*plant, {"preset"}, "plant");
    const json& preset = *find(*plant, "preset");
    if (!preset.is_string() ||
        (preset != "scalar" && preset != "dfim")) {
      config_fail("plant.preset must be \"scalar\" or \"dfim\"");
    }
    out["preset"] = preset;
    return out;
  }
  if (has_inline) {
    require_keys(*plant, {"A", "B"}, "plant");
    const json* A = find(*plant, "A");
    const json* B = find(*plant, "B");
    if (A == nullptr || B == nullptr) {
      config_fail("inline plant needs both \"A\" and \"B\"");
    }
    // Parse now so shape errors surface at config time.
    const Eigen::MatrixXd Am = parse_matrix(*A, "plant.A");
    const Eigen::MatrixXd Bm = parse_matrix(*B, "plant.B");
    try {
      LtiPlant probe(Am, Bm);
    } catch (const Error& e) {
      config_fail(std::string("invalid inline plant: ") + e.what());
    }
    out["A"] = *A;
    out["B"] = *B;
    return out;
  }
  const json& r = *find(*plant, "random");
  if (!r.is_object()) {
    config_fail("plant.random must be an object");
  }
  require_keys(r, {"n", "m", "seed", "spectral_radius", "input_scale"},
               "plant.random");
  json rn = json::object();
  const json* n = find(r, "n");
  const json* m = find(r, "m");
  if (n == nullptr || m == nullptr) {
    config_fail("plant.random needs \"n\" and \"m\"");
  }
  rn["n"] = get_long(*n, "plant.random.n");
  rn["m"] = get_long(*m, "plant.random.m");
  if (rn["n"].get<long>() < 1 || rn["m"].get<long>() < 1) {
    config_fail("plant.random dimensions must be >= 1");
  }
  if (seed_override.has_value()) {
    rn["seed"] = *seed_override;
  } else if (const json* seed = find(r, "seed")) {
    rn["seed"] = get_seed(*seed, "plant.random.seed");
  } else {
    config_fail(
        "plant.random needs a \"seed\" (or pass --seed) so runs are "
        "reproducible");
  }
  const json* rho = find(r, "spectral_radius");
  rn["spectral_radius"] =
      rho ? get_positive(*rho, "plant.random.spectral_radius") : 0.5;
  const json* scale = find(r, "input_scale");
  rn["input_scale"] =
      scale ? get_positive(*scale, "plant.random.input_scale") : 0.5;
  out["random"] = rn;
  return out;
}

json normalize_cost(const json* cost,
                    std::optional<std::uint64_t> seed_override) {
  if (cost == nullptr) {
    return json("identity");
  }
  if (cost->is_string()) {
    if (*cost != "identity") {
      config_fail("cost string form must be \"identity\"");
    }
    return *cost;
  }
  if (!cost->is_object()) {
    config_fail("cost must be \"identity\" or an object");
  }
  const bool has_inline =
      find(*cost, "Q") != nullptr || find(*cost, "R") != nullptr;
  const bool has_random = find(*cost, "random") != nullptr;
  if (int(has_inline) + int(has_random) != 1) {
    config_fail(
        "cost must have exactly one source: inline \"Q\"/\"R\" or "
        "\"random\"");
  }
  if (has_inline) {
    require_keys(*cost, {"Q", "R"}, "cost");
    const json* Q = find(*cost, "Q");
    const json* R = find(*cost, "R");
    if (Q == nullptr || R == nullptr) {
      config_fail("inline cost needs both \"Q\" and \"R\"");
    }
    parse_matrix(*Q, "cost.Q");
    parse_matrix(*R, "cost.R");
    json out = json::object();
    out["Q"] = *Q;
    out["R"] = *R;
    return out;
  }
  const json& r = *find(*cost, "random");
  if (!r.is_object()) {
    config_fail("cost.random must be an object");
  }
  require_keys(r, {"seed", "lo", "hi"}, "cost.random");
  json rn = json::object();
  if (seed_override.has_value()) {
    rn["seed"] = *seed_override;
  } else if (const json* seed = find(r, "seed")) {
    rn["seed"] = get_seed(*seed, "cost.random.seed");
  } else {
    config_fail(
        "cost.random needs a \"seed\" (or pass --seed) so runs are "
        "reproducible");
  }
  const json* lo = find(r, "lo");
  const json* hi = find(r, "hi");
  rn["lo"] = lo ? get_number(*lo, "cost.random.lo") : 0.0;
  rn["hi"] = hi ? get_number(*hi, "cost.random.hi") : 2.0;
  if (!(rn["lo"].get<double>() >= 0.0) ||
      !(rn["hi"].get<double>() > rn["lo"].get<double>())) {
    config_fail("cost.random eigenvalue range must satisfy 0 <= lo < hi");
  }
  json out = json::object();
  out["random"] = rn;
  return out;
}

json normalize_dither(const json& dither) {
  if (dither.is_string()) {
    if (dither != "canonical") {
      config_fail("esc.dither string form must be \"canonical\"");
    }
    return dither;
  }
  if (!dither.is_object()) {
    config_fail("esc.dither must be \"canonical\" or an object");
  }
  require_keys(dither, {"periods", "phases"}, "esc.dither");
  const json* periods = find(dither, "periods");
  const json* phases = find(dither, "phases");
  if (periods == nullptr || phases == nullptr) {
    config_fail("explicit esc.dither needs \"periods\" and \"phases\"");
  }
  const Eigen::MatrixXd P = parse_matrix(*periods, "esc.dither.periods");
  const Eigen::MatrixXd F = parse_matrix(*phases, "esc.dither.phases");
  if (P.rows() != F.rows() || P.cols() != F.cols()) {
    config_fail("esc.dither periods and phases must have matching shapes");
  }
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      if (std::nearbyint(P(i, j)) != P(i, j)) {
        config_fail("esc.dither.periods must contain integers");
      }
    }
  }
  json out = json::object();
  out["periods"] = *periods;
  out["phases"] = *phases;
  return out;
}


DitherSpec build_dither(const json& normalized, int m, int n) {
  if (normalized.is_string()) {
    return canonical_dither_spec(m, n);
  }
  const Eigen::MatrixXd P =
      parse_matrix(normalized.at("periods"), "esc.dither.periods");
  const Eigen::MatrixXd F =
      parse_matrix(normalized.at("phases"), "esc.dither.phases");
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> periods(
      P.rows(), P.cols());
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      periods(i, j) = static_cast<std::int64_t>(P(i, j));
    }
  }
  DitherSpec spec;
  try {
    spec = make_dither_spec(periods, F);
  } catch (const Error& e) {
    config_fail(std::string("invalid esc.dither: ") + e.what());
  }
  if (spec.rows() != m || spec.cols() != n) {
    std::ostringstream msg;
    msg << "esc.dither shape " << spec.rows() << "x" << spec.cols()
        << " does not match the gain shape " << m << "x" << n;
    config_fail(msg.str());
  }
  const OrthonormalityReport report = verify_orthonormality(spec, 1e-9);
  if (!report.pass()) {
    std::ostringstream msg;
    msg << "explicit esc.dither fails the orthonormality conditions at 1e-9 "
           "(max deviations: mean "
        << report.max_dev_mean << ", pair " << report.max_dev_pair
        << ", triple " << report.max_dev_triple
        << "); use check-dither for the full report";
    config_fail(msg.str());
  }
  return spec;
}

}  // namespace

// --- logging -------------------------------------------------------------

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("ESLQR_LOG_LEVEL");
    if (env == nullptr) {
      return LogLevel::warn;
    }
    const std::string value(env);
    if (value == "error") return LogLevel::error;
    if (value == "warn") return LogLevel::warn;
    if (value == "info") return LogLevel::info;
    if (value == "debug") return LogLevel::debug;
    std::fprintf(stderr,
                 "[warn] unknown ESLQR_LOG_LEVEL \"%s\"; using warn\n",
                 value.c_str());
    return LogLevel::warn;
  }();
  return level;
}

void log_message(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) {
    return;
  }
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[%s] %s\n", names[static_cast<int>(level)],
               message.c_str());
}

// --- JSON helpers --------------------------------------------------------

Eigen::MatrixXd parse_matrix(const nlohmann::json& j,
                             const std::string& what) {
  if (!j.is_array() || j.empty()) {
    config_fail(what + " must be a nonempty array of row arrays");
  }
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].empty()) {
      config_fail(what + " must contain nonempty row arrays");
    }
    if (i == 0) {
      cols = j[i].size();
    } else if (j[i].size() != cols) {
      config_fail(what + " rows have inconsistent lengths");
    }
  }
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows),
                    static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < cols; ++c) {
      const json& cell = j[i][c];
      if (!cell.is_number()) {
        config_fail(what + " entries must be numbers");
      }
      const double v = cell.get<double>();
      if (!std::isfinite(v)) {
        config_fail(what + " entries must be finite");
      }
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return M;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      row.push_back(M(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) {
    return json(v);
  }
  return json(nullptr);
}

// --- configuration -------------------------------------------------------

nlohmann::json dfim_experiment_preset() {
  json preset;
  preset["plant"] = {{"preset", "dfim"}};
  preset["cost"] = "identity";
  preset["esc"] = {
      {"gamma", 4e-8},     {"delta", 1e-2},        {"T", 20},
      {"iterations", 2400000}, {"dither", "canonical"}, {"f0", 1220.0},
      {"K0", {{"damp", 0.5}}}};
  preset["probes"] = {{"compute_dare", true}, {"log_spectral_radius", true}};
  preset["output"] = {{"summary", "summary.json"}};
  return preset;
}

nlohmann::json deep_merge(const nlohmann::json& base,
                          const nlohmann::json& overlay) {
  if (!base.is_object() || !overlay.is_object()) {
    return overlay;
  }
  json merged = base;
  for (const auto& item : overlay.items()) {
    const auto it = merged.find(item.key());
    if (it != merged.end()) {
      *it = deep_merge(*it, item.value());
    } else {
      merged[item.key()] = item.value();
    }
  }
  return merged;
}

nlohmann::json normalize_experiment_config(
    const nlohmann::json& config,
    std::optional<std::uint64_t> seed_override) {
  if (!config.is_object()) {
    config_fail("experiment config must be a JSON object");
  }
  require_keys(config, {"plant", "cost", "esc", "probes", "output"},
               "config");
  json out = json::object();
  out["plant"] = normalize_plant(find(config, "plant"), seed_override);
  out["cost"] = normalize_cost(find(config, "cost"), seed_override);

  const json* esc = find(config, "esc");
  if (esc == nullptr || !esc->is_object()) {
    config_fail("config requires an \"esc\" object");
  }
  require_keys(*esc, {"gamma", "delta", "T", "iterations", "dither", "f0",
                      "K0"},
               "esc");
  json esc_out = json::object();
  const json* gamma = find(*esc, "gamma");
  const json* delta = find(*esc, "delta");
  const json* T = find(*esc, "T");
  const json* iterations = find(*esc, "iterations");
  if (gamma == nullptr || delta == nullptr || T == nullptr ||
      iterations == nullptr) {
    config_fail("esc needs \"gamma\", \"delta\", \"T\", and \"iterations\"");
  }
  esc_out["gamma"] = get_positive(*gamma, "esc.gamma");
  esc_out["delta"] = get_positive(*delta, "esc.delta");
  esc_out["T"] = get_long(*T, "esc.T");
  if (esc_out["T"].get<long>() < 1) {
    config_fail("esc.T must be >= 1");
  }
  esc_out["iterations"] = get_long(*iterations, "esc.iterations");
  if (esc_out["iterations"].get<long>() < 0) {
    config_fail("esc.iterations must be >= 0");
  }
  const json* dither = find(*esc, "dither");
  esc_out["dither"] =
      dither ? normalize_dither(*dither) : json("canonical");
  const json* f0 = find(*esc, "f0");
  if (f0 == nullptr) {
    esc_out["f0"] = "first-measurement";
  } else if (f0->is_string()) {
    if (*f0 != "first-measurement") {
      config_fail("esc.f0 string form must be \"first-measurement\"");
    }
    esc_out["f0"] = *f0;
  } else {
    esc_out["f0"] = get_number(*f0, "esc.f0");
  }
  const json* k0 = find(*esc, "K0");
  esc_out["K0"] = k0 ? normalize_gain(*k0, "esc.K0") : json("zero");
  out["esc"] = esc_out;

  const json* probes = find(config, "probes");
  json probes_out = json::object();
  if (probes != nullptr) {
    if (!probes->is_object()) {
      config_fail("probes must be an object");
    }
    require_keys(*probes, {"compute_dare", "log_spectral_radius"}, "probes");
  }
  const json* dare = probes ? find(*probes, "compute_dare") : nullptr;
  const json* sigma = probes ? find(*probes, "log_spectral_radius") : nullptr;
  if (dare != nullptr && !dare->is_boolean()) {
    config_fail("probes.compute_dare must be a boolean");
  }
  if (sigma != nullptr && !sigma->is_boolean()) {
    config_fail("probes.log_spectral_radius must be a boolean");
  }
  probes_out["compute_dare"] = dare ? dare->get<bool>() : true;
  probes_out["log_spectral_radius"] = sigma ? sigma->get<bool>() : true;
  out["probes"] = probes_out;

  const json* output = find(config, "output");
  json output_out = json::object();
  if (output != nullptr) {
    if (!output->is_object()) {
      config_fail("output must be an object");
    }
    require_keys(*output, {"csv", "summary"}, "output");
    if (const json* csv = find(*output, "csv")) {
      if (!csv->is_string() || csv->get<std::string>().empty()) {
        config_fail("output.csv must be a nonempty file name");
      }
      output_out["csv"] = *csv;
    }
    if (const json* summary = find(*output, "summary")) {
      if (!summary->is_string() || summary->get<std::string>().empty()) {
        config_fail("output.summary must be a nonempty file name");
      }
      output_out["summary"] = *summary;
    }
  }
  out["output"] = output_out;
  return out;
}

ResolvedExperiment resolve_experiment(const nlohmann::json& normalized) {
  LtiPlant plant = resolve_plant(normalized.at("plant"));
  CostSpec cost =
      resolve_cost(normalized.at("cost"), plant.n(), plant.m());

  const json& esc = normalized.at("esc");
  EscParams params;
  params.gamma = esc.at("gamma").get<double>();
  params.delta = esc.at("delta").get<double>();
  params.T = esc.at("T").get<long>();
  params.iterations = esc.at("iterations").get<long>();
  params.dither = build_dither(esc.at("dither"), plant.m(), plant.n());

  const json& f0 = esc.at("f0");
  if (f0.is_number()) {
    params.f0 = f0.get<double>();
  }
  params.K0 = resolve_gain(esc.at("K0"), plant, "esc.K0");

  ResolvedExperiment resolved{
      std::move(plant),
      std::move(cost),
      std::move(params),
      normalized.at("probes").at("compute_dare").get<bool>(),
      normalized.at("probes").at("log_spectral_radius").get<bool>(),
      std::nullopt,
      std::nullopt};
  const json& output = normalized.at("output");
  if (const json* csv = find(output, "csv")) {
    resolved.csv_name = csv->get<std::string>();
  }
  if (const json* summary = find(output, "summary")) {
    resolved.summary_name = summary->get<std::string>();
  }
  return resolved;
}

nlohmann::json normalize_plant_cost_config(
    const nlohmann::json& config,
    std::optional<std::uint64_t> seed_override) {
  if (!config.is_object()) {
    config_fail("config must be a JSON object");
  }
  json out = json::object();
  out["plant"] = normalize_plant(find(config, "plant"), seed_override);
  out["cost"] = normalize_cost(find(config, "cost"), seed_override);
  return out;
}

LtiPlant resolve_plant(const nlohmann::json& normalized_plant) {
  if (const json* preset = find(normalized_plant, "preset")) {
    if (*preset == "scalar") {
      Eigen::MatrixXd A(1, 1), B(1, 1);
      A << 0.5;
      B << 1.0;
      return LtiPlant(A, B);
    }
    return build_dfim();
  }
  if (const json* random = find(normalized_plant, "random")) {
    return random_plant(static_cast<int>(random->at("n").get<long>()),
                        static_cast<int>(random->at("m").get<long>()),
                        random->at("seed").get<std::uint64_t>(),
                        random->at("spectral_radius").get<double>(),
                        random->at("input_scale").get<double>());
  }
  return LtiPlant(parse_matrix(normalized_plant.at("A"), "plant.A"),
                  parse_matrix(normalized_plant.at("B"), "plant.B"));
}

nlohmann::json normalize_gain(const nlohmann::json& gain,
                              const std::string& what) {
  if (gain.is_string()) {
    if (gain != "zero") {
      config_fail(what + " string form must be \"zero\"");
    }
    return gain;
  }
  if (gain.is_array()) {
    parse_matrix(gain, what);
    return gain;
  }
  if (gain.is_object()) {
    require_keys(gain, {"damp"}, what);
    const json* damp = find(gain, "damp");
    if (damp == nullptr) {
      config_fail(what + " object form needs \"damp\"");
    }
    json out = json::object();
    out["damp"] = get_number(*damp, what + ".damp");
    return out;
  }
  config_fail(what + " must be \"zero\", a matrix, or {\"damp\": c}");
}

Eigen::MatrixXd resolve_gain(const nlohmann::json& normalized_gain,
                             const LtiPlant& plant, const std::string& what) {
  if (normalized_gain.is_string()) {
    return Eigen::MatrixXd::Zero(plant.m(), plant.n());
  }
  if (normalized_gain.is_array()) {
    Eigen::MatrixXd K = parse_matrix(normalized_gain, what);
    if (K.rows() != plant.m() || K.cols() != plant.n()) {
      std::ostringstream msg;
      msg << what << " must be " << plant.m() << "x" << plant.n()
          << ", got " << K.rows() << "x" << K.cols();
      config_fail(msg.str());
    }
    return K;
  }
  const double c = normalized_gain.at("damp").get<double>();
  const Eigen::MatrixXd target =
      c * Eigen::MatrixXd::Identity(plant.n(), plant.n()) - plant.A;
  return plant.B.completeOrthogonalDecomposition().solve(target);
}

CostSpec resolve_cost(const nlohmann::json& normalized_cost, int n, int m) {
  if (normalized_cost.is_string()) {
    return CostSpec(Eigen::MatrixXd::Identity(n, n),
                    Eigen::MatrixXd::Identity(m, m));
  }
  if (const json* random = find(normalized_cost, "random")) {
    return random_cost(n, m, random->at("seed").get<std::uint64_t>(),
                       random->at("lo").get<double>(),
                       random->at("hi").get<double>());
  }
  const Eigen::MatrixXd Q = parse_matrix(normalized_cost.at("Q"), "cost.Q");
  const Eigen::MatrixXd R = parse_matrix(normalized_cost.at("R"), "cost.R");
  if (Q.rows() != n || R.rows() != m) {
    std::ostringstream msg;
    msg << "cost dimensions (" << Q.rows() << ", " << R.rows()
        << ") do not match the plant (" << n << ", " << m << ")";
    config_fail(msg.str());
  }
  try {
    return CostSpec(Q, R);
  } catch (const Error& e) {
    config_fail(std::string("invalid cost: ") + e.what());
  }
}

// --- output writers ------------------------------------------------------

namespace {

void append_cell(std::string& line, double value) {
  if (std::isnan(value)) {
    return;  // probe not configured: empty cell
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  line += buf;
}

}  // namespace

void write_run_csv(const std::string& path, const RunLog& log, int m, int n) {
  std::FILE* file = std::fopen(path.c_str(), "w");
  if (file == nullptr) {
    throw ConfigError("cannot open CSV output file: " + path);
  }
  std::string header = "k,J_probe,f,rel_err,sigma_max";
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      header += ",K_" + std::to_string(i) + "_" + std::to_string(j);
    }
  }
  header += '\n';
  std::fputs(header.c_str(), file);

  std::string line;
  for (const RunRecord& record : log.records) {
    line.clear();
    line += std::to_string(record.k);
    line += ',';
    append_cell(line, record.J_probe);
    line += ',';
    append_cell(line, record.f);
    line += ',';
    append_cell(line, record.rel_err);
    line += ',';
    append_cell(line, record.sigma_max);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        line += ',';
        append_cell(line, record.K(i, j));
      }
    }
    line += '\n';
    std::fputs(line.c_str(), file);
  }
  if (std::fclose(file) != 0) {
    throw ConfigError("failed to finish writing CSV output: " + path);
  }
}

nlohmann::json run_summary_json(const RunLog& log, long iterations_requested,
                                double wall_time_s,
                                const std::optional<double>& j_star) {
  json summary;
  summary["status"] =
      log.status == RunStatus::completed ? "completed" : "diverged";
  summary["diverged_at"] =
      log.diverged_at >= 0 ? json(log.diverged_at) : json(nullptr);
  summary["iterations_requested"] = iterations_requested;
  summary["records"] = log.records.size();
  summary["wall_time_s"] = wall_time_s;
  summary["j_star"] = j_star.has_value() ? finite_or_null(*j_star)
                                         : json(nullptr);
  summary["final_f"] = finite_or_null(log.final_state.f);
  summary["final_K"] = matrix_to_json(log.final_state.K);
  double initial_rel = std::numeric_limits<double>::quiet_NaN();
  double final_rel = std::numeric_limits<double>::quiet_NaN();
  double max_sigma = std::numeric_limits<double>::quiet_NaN();
  if (!log.records.empty()) {
    initial_rel = log.records.front().rel_err;
    final_rel = log.records.back().rel_err;
    for (const RunRecord& record : log.records) {
      if (!std::isnan(record.sigma_max) &&
          !(record.sigma_max <= max_sigma)) {
        max_sigma = record.sigma_max;
      }
    }
  }
  summary["initial_rel_err"] = finite_or_null(initial_rel);
  summary["final_rel_err"] = finite_or_null(final_rel);
  summary["max_sigma_max"] = finite_or_null(max_sigma);
  return summary;
}

nlohmann::json dare_to_json(const DareSolution& solution) {
  json out;
  out["P_star"] = matrix_to_json(solution.P_star);
  out["K_star"] = matrix_to_json(solution.K_star);
  out["J_star"] = solution.J_star;
  out["residual"] = solution.residual;
  out["iterations"] = solution.iterations;
  return out;
}

nlohmann::json orthonormality_report_json(
    const OrthonormalityReport& report) {
  json out;
  out["k_prd"] = report.k_prd;
  out["tol"] = report.tol;
  out["max_deviation"] = {{"mean", report.max_dev_mean},
                          {"pair", report.max_dev_pair},
                          {"triple", report.max_dev_triple}};
  out["pass"] = {{"mean", report.pass_mean},
                 {"pair", report.pass_pair},
                 {"triple", report.pass_triple},
                 {"all", report.pass()}};
  json failures = json::array();
  for (const OrthonormalityIssue& issue : report.failures) {
    json f;
    f["condition"] = std::string(1, issue.condition);
    f["p"] = issue.p;
    if (issue.q > 0) {
      f["q"] = issue.q;
    }
    if (issue.r > 0) {
      f["r"] = issue.r;
    }
    f["deviation"] = issue.deviation;
    failures.push_back(std::move(f));
  }
  out["failures"] = std::move(failures);
  return out;
}

}  // namespace eslqr
