#include "robustalloc/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "robustalloc/geometry.hpp"
#include "robustalloc/meancvar.hpp"
#include "robustalloc/meanvar.hpp"
#include "robustalloc/oracles.hpp"
#include "robustalloc/parallel.hpp"
#include "robustalloc/simulation.hpp"
#include "robustalloc/solver.hpp"
#include "robustalloc/util.hpp"

namespace robustalloc {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ── Config loading and schema checks ────────────────────────────────

struct ConfigDoc {
  json root;
  std::string text;  // raw file, for line-anchored messages
  std::string path;

  int line_of_key(const std::string& key) const {
    const std::string needle = "\"" + key + "\"";
    const auto pos = text.find(needle);
    if (pos == std::string::npos) return -1;
    return 1 + static_cast<int>(std::count(text.begin(),
                                           text.begin() + static_cast<long>(pos),
                                           '\n'));
  }

  [[noreturn]] void fail(const std::string& msg, const std::string& key) const {
    const int line = line_of_key(key);
    std::ostringstream os;
    os << path;
    if (line > 0) os << ":" << line;
    os << ": " << msg;
    throw ConfigError(os.str());
  }
};

ConfigDoc load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  ConfigDoc doc;
  doc.text = buffer.str();
  doc.path = path;
  try {
    doc.root = json::parse(doc.text);
  } catch (const json::parse_error& e) {
    // byte offset -> line for a readable anchor
    const std::size_t at = std::min(e.byte, doc.text.size());
    const int line = 1 + static_cast<int>(std::count(
                             doc.text.begin(),
                             doc.text.begin() + static_cast<long>(at), '\n'));
    throw ConfigError(path + ":" + std::to_string(line) + ": " + e.what());
  }
  if (!doc.root.is_object()) throw ConfigError(path + ": top level must be an object");
  return doc;
}

void check_keys(const ConfigDoc& doc, const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) {
        ok = true;
        break;
      }
    }
    if (!ok) doc.fail("unknown key \"" + key + "\" in " + where, key);
  }
}

double get_number(const ConfigDoc& doc, const json& obj, const std::string& key,
                  const std::string& where) {
  if (!obj.contains(key)) doc.fail("missing \"" + key + "\" in " + where, key);
  if (!obj[key].is_number()) doc.fail("\"" + key + "\" must be a number", key);
  return obj[key].get<double>();
}

double get_number_or(const ConfigDoc& doc, const json& obj,
                     const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) doc.fail("\"" + key + "\" must be a number", key);
  return obj[key].get<double>();
}

int get_int(const ConfigDoc& doc, const json& obj, const std::string& key,
            const std::string& where) {
  if (!obj.contains(key)) doc.fail("missing \"" + key + "\" in " + where, key);
  if (!obj[key].is_number_integer()) doc.fail("\"" + key + "\" must be an integer", key);
  return obj[key].get<int>();
}

int get_int_or(const ConfigDoc& doc, const json& obj, const std::string& key,
               int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) doc.fail("\"" + key + "\" must be an integer", key);
  return obj[key].get<int>();
}

std::string get_string(const ConfigDoc& doc, const json& obj,
                       const std::string& key, const std::string& where) {
  if (!obj.contains(key)) doc.fail("missing \"" + key + "\" in " + where, key);
  if (!obj[key].is_string()) doc.fail("\"" + key + "\" must be a string", key);
  return obj[key].get<std::string>();
}

Vector get_vector(const ConfigDoc& doc, const json& arr, const std::string& key) {
  if (!arr.is_array() || arr.empty()) doc.fail("\"" + key + "\" must be a nonempty array", key);
  Vector v(static_cast<Eigen::Index>(arr.size()));
  Eigen::Index i = 0;
  for (const auto& e : arr) {
    if (!e.is_number()) doc.fail("\"" + key + "\" must contain numbers", key);
    v[i++] = e.get<double>();
  }
  return v;
}

Matrix get_matrix(const ConfigDoc& doc, const json& arr, const std::string& key) {
  if (!arr.is_array() || arr.empty()) doc.fail("\"" + key + "\" must be a nonempty 2-d array", key);
  const auto rows = static_cast<Eigen::Index>(arr.size());
  Eigen::Index cols = -1;
  Matrix m;
  Eigen::Index r = 0;
  for (const auto& row : arr) {
    const Vector v = get_vector(doc, row, key);
    if (cols < 0) {
      cols = v.size();
      m.resize(rows, cols);
    } else if (v.size() != cols) {
      doc.fail("\"" + key + "\" rows have inconsistent lengths", key);
    }
    m.row(r++) = v.transpose();
  }
  return m;
}

RowMatrix get_row_matrix(const ConfigDoc& doc, const json& arr,
                         const std::string& key) {
  return get_matrix(doc, arr, key);
}

StressParameterization get_stress_par(const ConfigDoc& doc, const json& obj) {
  const std::string s = obj.contains("stress_parameterization")
                            ? get_string(doc, obj, "stress_parameterization", "model")
                            : "scale";
  if (s == "scale") return StressParameterization::Scale;
  if (s == "covariance") return StressParameterization::Covariance;
  doc.fail("stress_parameterization must be \"scale\" or \"covariance\"",
           "stress_parameterization");
}

AmbiguitySpec parse_ambiguity(const ConfigDoc& doc, const json& obj) {
  check_keys(doc, obj, "ambiguity", {"q0", "epsilon", "c", "M"});
  const double q0 = get_number(doc, obj, "q0", "ambiguity");
  const double eps = get_number(doc, obj, "epsilon", "ambiguity");
  const double c = get_number(doc, obj, "c", "ambiguity");
  const double conc = get_number_or(doc, obj, "M", 10.0);
  return AmbiguitySpec::make(q0, eps,
                             c == 0.0 ? RadiusFunction::powers(0.0, 2.0, 2.0)
                                      : RadiusFunction::beta_shaped(c, conc, q0));
}

SolverConfig parse_solver(const ConfigDoc& doc, const json& obj,
                          std::uint64_t seed) {
  check_keys(doc, obj, "solver",
             {"iterations", "schedule", "averaging", "x0", "aux0",
              "constant_samples"});
  SolverConfig cfg;
  cfg.seed = seed;
  cfg.iterations = get_int(doc, obj, "iterations", "solver");
  cfg.constant_samples = get_int_or(doc, obj, "constant_samples", 256);

  if (!obj.contains("schedule")) doc.fail("missing \"schedule\" in solver", "schedule");
  const json& sch = obj["schedule"];
  check_keys(doc, sch, "schedule", {"type", "eta", "radius", "lipschitz", "alpha"});
  const std::string type = get_string(doc, sch, "type", "schedule");
  if (type == "fixed") {
    cfg.schedule = StepSchedule::fixed(get_number(doc, sch, "eta", "schedule"));
  } else if (type == "lipschitz") {
    cfg.schedule = StepSchedule::lipschitz(
        get_number_or(doc, sch, "radius", std::numeric_limits<double>::quiet_NaN()),
        get_number_or(doc, sch, "lipschitz", std::numeric_limits<double>::quiet_NaN()));
  } else if (type == "strongly_convex") {
    cfg.schedule = StepSchedule::strongly_convex(
        get_number_or(doc, sch, "alpha", std::numeric_limits<double>::quiet_NaN()));
  } else if (type == "smooth_geometric") {
    cfg.schedule = StepSchedule::smooth_geometric();
  } else {
    doc.fail("unknown schedule type \"" + type + "\"", "type");
  }

  if (obj.contains("averaging")) {
    const std::string avg = get_string(doc, obj, "averaging", "solver");
    if (avg == "last_iterate") {
      cfg.averaging = Averaging::LastIterate;
    } else if (avg == "uniform") {
      cfg.averaging = Averaging::Uniform;
    } else if (avg == "weighted") {
      cfg.averaging = Averaging::WeightedK;
    } else {
      doc.fail("averaging must be last_iterate, uniform or weighted", "averaging");
    }
  }
  if (obj.contains("x0")) cfg.x0 = get_vector(doc, obj["x0"], "x0");
  if (obj.contains("aux0")) cfg.aux0 = get_number(doc, obj, "aux0", "solver");
  return cfg;
}

MomentSpec parse_moments(const ConfigDoc& doc, const json& obj,
                         const std::string& where) {
  check_keys(doc, obj, where, {"mean", "cov"});
  if (!obj.contains("mean")) doc.fail("missing \"mean\" in " + where, "mean");
  if (!obj.contains("cov")) doc.fail("missing \"cov\" in " + where, "cov");
  return MomentSpec::make(get_vector(doc, obj["mean"], "mean"),
                          get_matrix(doc, obj["cov"], "cov"));
}

struct ParsedProblem {
  std::optional<MeanVarProblem> meanvar;
  std::optional<MeanCVaRProblem> meancvar;
  SolverConfig solver;
  int reference_factor = 10;
};

ParsedProblem parse_problem(const ConfigDoc& doc, std::uint64_t seed) {
  const json& root = doc.root;
  check_keys(doc, root, "config",
             {"model", "gamma", "rho", "p", "normal", "stress",
              "moments_from_model", "normal_samples", "stress_samples",
              "data_from_model", "ambiguity", "solver", "reference_factor"});
  const std::string model = get_string(doc, root, "model", "config");
  if (!root.contains("ambiguity")) doc.fail("missing \"ambiguity\"", "ambiguity");
  const AmbiguitySpec ambiguity = parse_ambiguity(doc, root["ambiguity"]);
  if (!root.contains("solver")) doc.fail("missing \"solver\"", "solver");

  ParsedProblem out;
  out.solver = parse_solver(doc, root["solver"], seed);
  out.reference_factor = get_int_or(doc, root, "reference_factor", 10);

  if (model == "meanvar") {
    const double gamma = get_number(doc, root, "gamma", "config");
    MomentSpec normal;
    MomentSpec stress;
    if (root.contains("moments_from_model")) {
      const json& mm = root["moments_from_model"];
      check_keys(doc, mm, "moments_from_model",
                 {"d", "q_true", "stress_parameterization"});
      RegimeModel rm = RegimeModel::standard(
          get_int(doc, mm, "d", "moments_from_model"),
          get_number_or(doc, mm, "q_true", 0.03));
      rm.stress_par = get_stress_par(doc, mm);
      normal = rm.normal_moments();
      stress = rm.stress_moments();
    } else {
      if (!root.contains("normal") || !root.contains("stress")) {
        doc.fail("meanvar needs \"normal\"/\"stress\" moments or "
                 "\"moments_from_model\"",
                 "model");
      }
      normal = parse_moments(doc, root["normal"], "normal");
      stress = parse_moments(doc, root["stress"], "stress");
    }
    out.meanvar = MeanVarProblem::make(gamma, std::move(normal),
                                       std::move(stress), ambiguity);
  } else if (model == "meancvar") {
    const double rho = get_number(doc, root, "rho", "config");
    const double p = get_number(doc, root, "p", "config");
    SampleSet normal;
    SampleSet stress;
    if (root.contains("data_from_model")) {
      const json& dm = root["data_from_model"];
      check_keys(doc, dm, "data_from_model",
                 {"d", "n", "q_true", "seed", "stress_parameterization"});
      RegimeModel rm = RegimeModel::standard(
          get_int(doc, dm, "d", "data_from_model"),
          get_number_or(doc, dm, "q_true", 0.03));
      rm.stress_par = get_stress_par(doc, dm);
      const auto data_seed = dm.contains("seed")
                                 ? static_cast<std::uint64_t>(
                                       get_int(doc, dm, "seed", "data_from_model"))
                                 : derive_seed(seed, 0xDA7Aull, 0);
      const GeneratedDataset data =
          sample_mixture(rm, get_int(doc, dm, "n", "data_from_model"), data_seed);
      out.meancvar = fit_meancvar(data, rho, p, ambiguity);
      return out;
    }
    if (!root.contains("normal_samples") || !root.contains("stress_samples")) {
      doc.fail("meancvar needs \"normal_samples\"/\"stress_samples\" or "
               "\"data_from_model\"",
               "model");
    }
    normal = SampleSet::make(get_row_matrix(doc, root["normal_samples"],
                                            "normal_samples"));
    stress = SampleSet::make(get_row_matrix(doc, root["stress_samples"],
                                            "stress_samples"));
    out.meancvar = MeanCVaRProblem::make(rho, p, std::move(normal),
                                         std::move(stress), ambiguity);
  } else {
    doc.fail("model must be \"meanvar\" or \"meancvar\"", "model");
  }
  return out;
}

// ── Output helpers ──────────────────────────────────────────────────

fs::path ensure_outdir(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  if (fs::exists(dir, ec)) {
    if (!fs::is_directory(dir, ec)) {
      throw ConfigError(out + ": output path exists and is not a directory");
    }
    return dir;
  }
  const fs::path parent = dir.has_parent_path() ? dir.parent_path() : fs::path(".");
  if (!fs::exists(parent, ec)) {
    throw ConfigError(out + ": parent directory does not exist");
  }
  if (!fs::create_directory(dir, ec) || ec) {
    throw ConfigError(out + ": cannot create output directory");
  }
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError(path.string() + ": cannot open for writing");
  return os;
}

std::string cell_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string sanitize_csv(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  }
  return s;
}

json weights_json(const Vector& w) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < w.size(); ++i) arr.push_back(w[i]);
  return arr;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const ConfigDoc& doc, std::uint64_t seed, int jobs,
                    const std::vector<std::string>& outputs,
                    double elapsed_sec, const json& extra = json::object()) {
  json manifest;
  manifest["command"] = command;
  manifest["version"] = kVersion;
  manifest["seed"] = seed;
  manifest["jobs"] = jobs;
  manifest["config_path"] = doc.path;
  manifest["config"] = doc.root;
  manifest["outputs"] = outputs;
  manifest["elapsed_sec"] = elapsed_sec;
  if (!extra.empty()) manifest["details"] = extra;
  auto os = open_output(dir / "manifest.json");
  os << manifest.dump(2) << '\n';
}

// ── Commands ────────────────────────────────────────────────────────

int cmd_solve(const std::string& config_path, std::uint64_t seed,
              const std::string& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const ConfigDoc doc = load_config(config_path);
  const ParsedProblem parsed = parse_problem(doc, seed);
  const fs::path dir = ensure_outdir(out);

  SolveResult result = parsed.meanvar ? solve(*parsed.meanvar, parsed.solver)
                                      : solve(*parsed.meancvar, parsed.solver);

  // Gap column baseline: the best objective seen in this run.
  double best = result.objective;
  for (const TracePoint& t : result.trace) best = std::min(best, t.objective);

  {
    auto os = open_output(dir / "trace.csv");
    write_trace_csv(os, result, best);
  }
  {
    json sol;
    sol["model"] = parsed.meanvar ? "meanvar" : "meancvar";
    sol["x"] = weights_json(result.x.weights);
    sol["aux"] = result.aux;
    sol["objective"] = result.objective;
    sol["warnings"] = result.warnings;
    sol["iterations"] = parsed.solver.iterations;
    sol["averaging"] = result.averaging == Averaging::LastIterate ? "last_iterate"
                       : result.averaging == Averaging::Uniform   ? "uniform"
                                                                  : "weighted";
    auto os = open_output(dir / "solution.json");
    os << sol.dump(2) << '\n';
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(dir, "solve", doc, seed, par::jobs(),
                 {"solution.json", "trace.csv"}, elapsed);
  std::cout << "solve: J = " << format_g17(result.objective) << ", outputs in "
            << dir.string() << "\n";
  return 0;
}

int cmd_convergence(const std::string& config_path, std::uint64_t seed,
                    const std::string& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const ConfigDoc doc = load_config(config_path);
  const ParsedProblem parsed = parse_problem(doc, seed);
  const fs::path dir = ensure_outdir(out);

  const GapTrace trace =
      parsed.meanvar
          ? run_convergence(*parsed.meanvar, parsed.solver, parsed.reference_factor)
          : run_convergence(*parsed.meancvar, parsed.solver,
                            parsed.reference_factor);

  {
    auto os = open_output(dir / "convergence.csv");
    os << "k,J,gap\n";
    for (std::size_t k = 0; k < trace.objective.size(); ++k) {
      os << k << ',' << format_g17(trace.objective[k]) << ','
         << format_g17(trace.gap[k]) << '\n';
    }
  }
  json extra;
  extra["reference_objective"] = trace.reference;
  extra["warnings"] = trace.warnings;
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(dir, "convergence", doc, seed, par::jobs(),
                 {"convergence.csv"}, elapsed, extra);
  std::cout << "convergence: reference J = " << format_g17(trace.reference)
            << ", trace rows = " << trace.objective.size() << "\n";
  return 0;
}

ExperimentGrid parse_experiment(const ConfigDoc& doc, std::uint64_t seed) {
  const json& root = doc.root;
  check_keys(doc, root, "config",
             {"model", "gamma", "rho", "p", "epsilons", "cs", "replications",
              "train_n", "test_n", "true_best_n", "q0", "M", "d", "q_true",
              "stress_parameterization", "solver"});
  ExperimentGrid grid;
  const std::string model = get_string(doc, root, "model", "config");
  if (model == "meanvar") {
    grid.disutility.kind = DisutilityParams::Kind::MeanVar;
    grid.disutility.gamma = get_number(doc, root, "gamma", "config");
  } else if (model == "meancvar") {
    grid.disutility.kind = DisutilityParams::Kind::MeanCVaR;
    grid.disutility.rho = get_number(doc, root, "rho", "config");
    grid.disutility.p = get_number(doc, root, "p", "config");
  } else {
    doc.fail("model must be \"meanvar\" or \"meancvar\"", "model");
  }

  if (root.contains("epsilons")) {
    grid.epsilons.clear();
    for (const auto& e : root["epsilons"]) {
      if (!e.is_number()) doc.fail("epsilons must be numbers", "epsilons");
      grid.epsilons.push_back(e.get<double>());
    }
  }
  if (!root.contains("cs")) doc.fail("missing \"cs\"", "cs");
  for (const auto& c : root["cs"]) {
    if (!c.is_number()) doc.fail("cs must be numbers", "cs");
    grid.cs.push_back(c.get<double>());
  }
  if (grid.cs.empty()) doc.fail("\"cs\" must be nonempty", "cs");
  if (grid.epsilons.empty()) doc.fail("\"epsilons\" must be nonempty", "epsilons");

  grid.replications = get_int(doc, root, "replications", "config");
  grid.train_n = get_int_or(doc, root, "train_n", 1000);
  grid.test_n = get_int_or(doc, root, "test_n", 200000);
  grid.true_best_n = get_int_or(doc, root, "true_best_n", 200000);
  grid.q0 = get_number_or(doc, root, "q0", 0.024);
  grid.concentration = get_number_or(doc, root, "M", 10.0);
  grid.model = RegimeModel::standard(get_int_or(doc, root, "d", 10),
                                     get_number_or(doc, root, "q_true", 0.03));
  grid.model.stress_par = get_stress_par(doc, root);
  if (!root.contains("solver")) doc.fail("missing \"solver\"", "solver");
  grid.solver = parse_solver(doc, root["solver"], seed);
  if (grid.replications < 1) doc.fail("replications must be >= 1", "replications");
  return grid;
}

int cmd_experiment(const std::string& config_path, std::uint64_t seed,
                   const std::string& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const ConfigDoc doc = load_config(config_path);
  const ExperimentGrid grid = parse_experiment(doc, seed);
  const fs::path dir = ensure_outdir(out);

  const SweepResult sweep = run_sweep(grid, seed);
  const std::string model_name =
      grid.disutility.kind == DisutilityParams::Kind::MeanVar ? "meanvar"
                                                              : "meancvar";
  std::vector<std::string> outputs;

  {
    auto os = open_output(dir / "summary.csv");
    outputs.push_back("summary.csv");
    os << "epsilon,c,completed,replications,dro_mean,dro_p20,dro_p80,"
          "saa_mean,saa_p20,saa_p80,true_best\n";
    for (const CellSummary& cell : sweep.cells) {
      os << format_g17(cell.epsilon) << ',' << format_g17(cell.c) << ','
         << cell.completed << ',' << grid.replications << ','
         << format_g17(cell.dro_mean) << ',' << format_g17(cell.dro_p20) << ','
         << format_g17(cell.dro_p80) << ',' << format_g17(cell.saa_mean) << ','
         << format_g17(cell.saa_p20) << ',' << format_g17(cell.saa_p80) << ','
         << format_g17(sweep.true_best) << '\n';
    }
  }
  {
    auto os = open_output(dir / "allocations.csv");
    outputs.push_back("allocations.csv");
    os << "epsilon,c,asset,dro_weight,saa_weight,true_best_weight\n";
    for (const CellSummary& cell : sweep.cells) {
      for (int j = 0; j < grid.model.d; ++j) {
        os << format_g17(cell.epsilon) << ',' << format_g17(cell.c) << ','
           << (j + 1) << ',' << format_g17(cell.dro_mean_weights[j]) << ','
           << format_g17(cell.saa_mean_weights[j]) << ','
           << format_g17(sweep.true_best_weights[j]) << '\n';
      }
    }
  }
  for (const CellSummary& cell : sweep.cells) {
    const std::string name = model_name + "_" + cell_label(cell.epsilon) + "_" +
                             cell_label(cell.c) + ".csv";
    auto os = open_output(dir / name);
    outputs.push_back(name);
    os << "rep,seed,ok,dro_oos,saa_oos";
    for (int j = 0; j < grid.model.d; ++j) os << ",dro_w_" << (j + 1);
    for (int j = 0; j < grid.model.d; ++j) os << ",saa_w_" << (j + 1);
    os << ",error\n";
    for (const ReplicationRecord& rec : cell.replications) {
      os << rec.rep << ',' << rec.seed << ',' << (rec.ok ? 1 : 0) << ',';
      if (rec.ok) {
        os << format_g17(rec.dro_oos) << ',' << format_g17(rec.saa_oos);
        for (int j = 0; j < grid.model.d; ++j) {
          os << ',' << format_g17(rec.dro_weights[j]);
        }
        for (int j = 0; j < grid.model.d; ++j) {
          os << ',' << format_g17(rec.saa_weights[j]);
        }
        os << ',';
      } else {
        os << ',';
        for (int j = 0; j < 2 * grid.model.d; ++j) os << ',';
        os << ',' << sanitize_csv(rec.error);
      }
      os << '\n';
    }
  }

  json extra;
  extra["test_seed"] = sweep.test_seed;
  extra["true_best"] = sweep.true_best;
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(dir, "experiment", doc, seed, par::jobs(), outputs, elapsed,
                 extra);
  std::cout << "experiment: " << sweep.cells.size() << " cells x "
            << grid.replications << " replications, outputs in " << dir.string()
            << "\n";
  return 0;
}

// ── Selftest: oracle cross-checks ───────────────────────────────────

int cmd_selftest() {
  int failures = 0;
  const auto report = [&](const char* name, bool ok, const std::string& detail) {
    std::cout << "selftest: " << name << " ... " << (ok ? "ok" : "FAIL");
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
    if (!ok) ++failures;
  };

  std::mt19937_64 rng(20240817ull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  {
    double worst = 0.0;
    for (const int d : {2, 5, 10}) {
      for (int rep = 0; rep < 200; ++rep) {
        Vector y(d);
        for (int i = 0; i < d; ++i) y[i] = 3.0 * gauss(rng);
        const Vector fast = project_simplex(y).weights;
        const Vector slow = oracles::projection_by_enumeration(y);
        worst = std::max(worst, (fast - slow).lpNorm<Eigen::Infinity>());
      }
    }
    report("simplex projection vs support enumeration", worst <= 1e-9,
           "max dev " + format_g17(worst));
  }
  {
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
      const double r = 0.5 * unif(rng);
      const double xn = 0.2 + unif(rng);
      const double base = 0.01 + unif(rng);
      const double closed = (r * xn + std::sqrt(base)) * (r * xn + std::sqrt(base));
      const double numeric = oracles::dual_worst_case_value(r, xn, base);
      worst = std::max(worst,
                       std::abs(closed - numeric) / std::max(1.0, std::abs(numeric)));
    }
    report("worst-case closed form vs dual minimization", worst <= 1e-7,
           "max rel err " + format_g17(worst));
  }
  {
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      const int n = 17 + rep;
      std::vector<double> losses(static_cast<std::size_t>(n));
      for (auto& l : losses) l = gauss(rng);
      const double p = 0.5 + 0.45 * unif(rng);
      const double exact = cvar_empirical(losses, p);
      // Independent scan: Rockafellar objective on samples plus a fine grid.
      std::vector<double> taus = losses;
      const auto [lo_it, hi_it] = std::minmax_element(losses.begin(), losses.end());
      for (int g = 0; g <= 10 * n; ++g) {
        taus.push_back(*lo_it + (*hi_it - *lo_it) * g / (10.0 * n));
      }
      double best = std::numeric_limits<double>::infinity();
      for (const double tau : taus) {
        double hinge = 0.0;
        for (const double l : losses) hinge += std::max(l - tau, 0.0);
        best = std::min(best, tau + hinge / ((1.0 - p) * n));
      }
      worst = std::max(worst, std::abs(exact - best));
    }
    report("empirical CVaR vs objective scan", worst <= 1e-9,
           "max dev " + format_g17(worst));
  }
  {
    // Kernel parity: the OpenMP paths must reproduce the serial reference
    // bit for bit.
    bool ok = true;
    for (const int n : {1, 100, 5000, 100000}) {
      RowMatrix rows(n, 4);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 4; ++j) rows(i, j) = gauss(rng);
      }
      Vector x(4);
      x << 0.1, 0.4, 0.3, 0.2;
      std::vector<double> a(static_cast<std::size_t>(n));
      std::vector<double> b(static_cast<std::size_t>(n));
      par::portfolio_losses_serial(rows, x, a.data());
      par::portfolio_losses_parallel(rows, x, b.data());
      ok = ok && a == b;
      ok = ok && par::block_sum_serial(a.data(), n) == par::block_sum_parallel(a.data(), n);
      const auto ts = par::tail_stats_serial(rows, a.data(), 0.0);
      const auto tp = par::tail_stats_parallel(rows, a.data(), 0.0);
      ok = ok && ts.loss_sum == tp.loss_sum && ts.hinge_sum == tp.hinge_sum &&
           ts.tail_count == tp.tail_count && ts.tail_row_sum == tp.tail_row_sum;
    }
    report("parallel kernels match serial reference", ok, "");
  }
  {
    // Subgradient vs central differences on a smooth random instance.
    const int d = 3;
    Matrix g(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) g(i, j) = gauss(rng);
    }
    const Matrix cov = g * g.transpose() + 0.5 * Matrix::Identity(d, d);
    Vector mu(d);
    for (int i = 0; i < d; ++i) mu[i] = 0.1 * gauss(rng);
    const auto spec = AmbiguitySpec::make(0.2, 0.05,
                                          RadiusFunction::beta_shaped(0.2, 10.0, 0.2));
    const MeanVarProblem p = MeanVarProblem::make(
        0.1, MomentSpec::make(mu, cov), MomentSpec::make(0.5 * mu, 0.8 * cov), spec);
    double worst = 0.0;
    int checked = 0;
    for (int rep = 0; rep < 200 && checked < 20; ++rep) {
      Vector raw(d);
      for (int i = 0; i < d; ++i) raw[i] = unif(rng);
      const Vector x = project_simplex(raw).weights;
      const double a = -0.5 + unif(rng);
      const WorstWeight w = worst_weight(p, x, a);
      // Accept only points whose worst weight is stable under small moves;
      // a jumping maximizer means J has a kink there.
      bool stable = true;
      for (int i = 0; i <= d && stable; ++i) {
        Vector xp = x;
        double ap = a;
        if (i < d) {
          xp[i] += 1e-5;
        } else {
          ap += 1e-5;
        }
        stable = std::abs(worst_weight(p, xp, ap).q - w.q) < 1e-3;
      }
      if (!stable) continue;
      const SubgradientXA grad = robust_subgradient(p, x, a);
      Vector z(d + 1);
      z.head(d) = x;
      z[d] = a;
      Vector gz(d + 1);
      gz.head(d) = grad.x;
      gz[d] = grad.aux;
      const double err = oracles::finite_difference_check(
          [&](const Vector& v) {
            return robust_disutility(p, v.head(d), v[d]);
          },
          gz, z, 1e-6);
      worst = std::max(worst, err);
      ++checked;
    }
    report("robust subgradient vs finite differences",
           checked >= 10 && worst <= 1e-5,
           "checked " + std::to_string(checked) + ", max rel err " +
               format_g17(worst));
  }

  return failures == 0 ? 0 : 3;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Distributionally robust portfolio allocation under partial "
               "mixture ambiguity"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 12345;
  int jobs = 0;

  const auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config) {
      cmd->add_option("--config", config_path, "JSON run configuration")
          ->required();
      cmd->add_option("--out", out_dir, "output directory");
      cmd->add_option("--seed", seed, "master seed");
    }
    cmd->add_option("--jobs", jobs, "worker threads (0 = all)");
  };

  CLI::App* solve_cmd = app.add_subcommand("solve", "run one robust solve");
  add_common(solve_cmd, true);
  CLI::App* exp_cmd =
      app.add_subcommand("experiment", "robust-vs-SAA benchmark sweep");
  add_common(exp_cmd, true);
  CLI::App* conv_cmd =
      app.add_subcommand("convergence", "suboptimality-gap trace");
  add_common(conv_cmd, true);
  CLI::App* self_cmd =
      app.add_subcommand("selftest", "run the oracle cross-checks");
  add_common(self_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (jobs == 0) {
    if (const char* env = std::getenv("ROBUST_ALLOC_JOBS")) {
      jobs = std::atoi(env);
    }
  }
  if (jobs > 0) par::set_jobs(jobs);

  try {
    if (solve_cmd->parsed()) return cmd_solve(config_path, seed, out_dir);
    if (exp_cmd->parsed()) return cmd_experiment(config_path, seed, out_dir);
    if (conv_cmd->parsed()) return cmd_convergence(config_path, seed, out_dir);
    if (self_cmd->parsed()) return cmd_selftest();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidInputError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InsufficientDataError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << " (trace length "
              << e.trace().size() << ")\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace robustalloc
