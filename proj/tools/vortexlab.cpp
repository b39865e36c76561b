#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "vortexlab/analysis.hpp"
#include "vortexlab/dimred.hpp"
#include "vortexlab/io.hpp"
#include "vortexlab/stability.hpp"

using namespace vortexlab;
namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
using std::numbers::pi;

namespace {

enum Exit { kOk = 0, kConfig = 2, kSolver = 3, kVerify = 4 };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw ConfigError("ConfigInvalid: field '" + field + "': " + why);
}

template <class T>
T get(const json& j, const std::string& field, const std::string& path = "") {
  const std::string name = path.empty() ? field : path + "." + field;
  if (!j.contains(field)) bad(name, "is required");
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    bad(name, "has the wrong type");
  }
}

template <class T>
T get_or(const json& j, const std::string& field, T fallback, const std::string& path = "") {
  return j.contains(field) ? get<T>(j, field, path) : fallback;
}

const std::vector<std::string> kExperiments{"solve-vortex",    "solve-coupled", "embed-coupled",
                                            "check-dimred",    "tau-sweep",     "density-profile",
                                            "concentration",   "stability",     "el-residual"};

struct Config {
  json raw;
  std::string experiment;
  GeometryPtr geom;
  fs::path output;
  std::uint64_t seed = 1;
  SolveOptions solver;
};

GeometryPtr parse_geometry(const json& j) {
  if (!j.contains("geometry")) bad("geometry", "is required");
  const auto& g = j["geometry"];
  auto periods = get<std::vector<double>>(g, "periods", "geometry");
  auto grid = get<std::vector<int>>(g, "grid", "geometry");
  try {
    return build_torus(periods, grid, get_or<double>(g, "kahler_scale", 1.0, "geometry"));
  } catch (const Error& e) {
    bad("geometry", e.what());
  }
}

BundleSpec parse_bundle(const json& j, const std::string& field) {
  if (!j.contains(field)) bad(field, "is required");
  const auto& b = j[field];
  BundleSpec s{get_or<int>(b, "rank", 1, field), get<int>(b, "degree", field),
               get_or<std::string>(b, "label", field == "bundle" ? "E1" : "E2", field)};
  if (s.rank < 1) bad(field + ".rank", "must be positive");
  return s;
}

// "tau" directly, or "tau_hat" in units of 4 pi / Vol
double parse_tau(const json& j, const TorusGeometry& g) {
  if (j.contains("tau")) return get<double>(j, "tau");
  if (j.contains("tau_hat")) return 4.0 * pi * get<double>(j, "tau_hat") / g.volume();
  bad("tau", "is required (or tau_hat)");
}

std::vector<double> parse_tau_range(const json& j, const TorusGeometry& g) {
  std::string field = j.contains("tau_range") ? "tau_range" : "tau_hat_range";
  if (!j.contains(field)) bad("tau_range", "is required (or tau_hat_range)");
  const auto& r = j[field];
  if (r.is_array()) {
    auto v = r.get<std::vector<double>>();
    if (v.empty()) bad(field, "must not be empty");
    if (field == "tau_hat_range")
      for (double& t : v) t *= 4.0 * pi / g.volume();
    return v;
  }
  const double a = get<double>(r, "from", field), b = get<double>(r, "to", field);
  const int n = get<int>(r, "steps", field);
  if (n < 1) bad(field + ".steps", "must be at least 1");
  if (n > 1 && !(b > a)) bad(field + ".to", "must exceed from");
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    double t = n == 1 ? a : a + (b - a) * i / (n - 1);
    if (field == "tau_hat_range") t *= 4.0 * pi / g.volume();
    out.push_back(t);
  }
  return out;
}

Config parse_config(const fs::path& path, const std::string& output_override) {
  Config c;
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    throw ConfigError(std::string("ConfigInvalid: ") + e.what());
  }
  try {
    c.raw = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("ConfigInvalid: not valid JSON: ") + e.what());
  }
  if (!c.raw.is_object()) throw ConfigError("ConfigInvalid: config must be a JSON object");
  c.experiment = get<std::string>(c.raw, "experiment");
  if (std::find(kExperiments.begin(), kExperiments.end(), c.experiment) == kExperiments.end())
    bad("experiment", "unknown experiment '" + c.experiment + "'");
  c.geom = parse_geometry(c.raw);
  c.output = output_override.empty() ? fs::path(get<std::string>(c.raw, "output")) : fs::path(output_override);
  c.seed = get_or<std::uint64_t>(c.raw, "seed", 1);
  if (c.raw.contains("solver")) {
    try {
      c.solver = solve_options_from_json(c.raw["solver"].dump());
    } catch (const Error& e) {
      bad("solver", e.what());
    } catch (const json::exception& e) {
      bad("solver", e.what());
    }
  }
  c.solver.seed = c.seed;
  return c;
}

std::optional<BundleSpec> maybe_bundle2(const json& j) {
  if (!j.contains("bundle2")) return std::nullopt;
  return parse_bundle(j, "bundle2");
}

std::vector<int> parse_charges(const json& j) {
  return get_or<std::vector<int>>(j, "charges", {});
}

void write_solution(const Config& c, const std::string& stem, const VortexSolution& sol) {
  io::save_state(c.output / (stem + ".bin"), sol.state, *c.geom, c.seed);
  io::write_atomic(c.output / (stem + ".cert.json"),
                   io::certificate_json(sol, *c.geom, c.seed, c.solver.residual_tol));
}

void write_json(const Config& c, const std::string& name, const std::string& body) {
  io::write_atomic(c.output / name, body.back() == '\n' ? body : body + "\n");
}

int solver_failure(const Config& c, const Error& e) {
  ojson j;
  j["experiment"] = c.experiment;
  j["status"] = to_string(e.code());
  j["message"] = e.what();
  write_json(c, "failure.json", j.dump(2));
  std::cerr << e.what() << "\n";
  return kSolver;
}

int run_solve_vortex(const Config& c) {
  const auto b = parse_bundle(c.raw, "bundle");
  const double tau = parse_tau(c.raw, *c.geom);
  auto sol = solve_abelian_vortex(b, tau, *c.geom, c.solver, nullptr, parse_charges(c.raw));
  write_solution(c, "solution", sol);
  std::cout << "converged in " << sol.iterations << " iterations, residual "
            << io::format_double(sol.residuals.max()) << ", energy "
            << io::format_double(sol.energy.total) << "\n";
  return kOk;
}

int run_solve_coupled(const Config& c) {
  const auto b1 = parse_bundle(c.raw, "bundle");
  const auto b2 = maybe_bundle2(c.raw).value_or(BundleSpec{1, 0, "E2"});
  const double tau = parse_tau(c.raw, *c.geom);
  const auto p = derive_parameters(b1, b2, tau, *c.geom);
  FieldState init;
  if (c.raw.contains("initial_state")) {
    auto loaded = io::load_state(get<std::string>(c.raw, "initial_state"));
    if (!(*loaded.geometry == *c.geom)) bad("initial_state", "geometry differs from the config");
    init = loaded.state;
  } else {
    init = random_state(c.seed, get_or<double>(c.raw, "decay", 4.0), b1, b2, *c.geom);
  }
  auto sol = gradient_flow(init, p, *c.geom, c.solver);
  write_solution(c, "solution", sol);
  std::cout << "gradient flow " << sol.status << " after " << sol.iterations
            << " iterations, residual " << io::format_double(sol.residuals.max()) << "\n";
  return sol.status == "converged" ? kOk : kSolver;
}

int run_embed_coupled(const Config& c) {
  const auto b = parse_bundle(c.raw, "bundle");
  const double tau = parse_tau(c.raw, *c.geom);
  auto v = solve_abelian_vortex(b, tau, *c.geom, c.solver, nullptr, parse_charges(c.raw));
  write_solution(c, "vortex", v);
  auto t = embed_vortex_as_coupled(v, *c.geom, c.solver);
  write_solution(c, "solution", t);
  std::cout << "coupled residual " << io::format_double(t.residuals.max()) << "\n";
  return kOk;
}

int run_check_dimred(const Config& c) {
  const auto b1 = parse_bundle(c.raw, "bundle");
  const auto b2 = maybe_bundle2(c.raw).value_or(BundleSpec{1, 0, "E2"});
  const double tau = parse_tau(c.raw, *c.geom);
  const int samples = get_or<int>(c.raw, "samples", 10);
  if (samples < 1) bad("samples", "must be at least 1");
  const double density_tol = get_or<double>(c.raw, "density_tol", 1e-10);
  const double integral_tol = get_or<double>(c.raw, "integral_tol", 1e-8);
  const auto p = derive_parameters(b1, b2, tau, *c.geom);

  ojson j;
  j["params"] = ojson::parse(to_json(p));
  j["sigma_gap"] = std::abs(4.0 * pi / p.sigma - 0.5 * (p.tau - p.tau_prime)) /
                   std::max(1.0, std::abs(4.0 * pi / p.sigma));
  j["samples"] = ojson::array();
  double worst_density = 0.0, worst_gap = 0.0;
  for (int i = 0; i < samples; ++i) {
    auto s = random_state(c.seed + static_cast<std::uint64_t>(i),
                          get_or<double>(c.raw, "decay", 4.0), b1, b2, *c.geom);
    const double d = verify_density_identity(s, p, *c.geom);
    const auto ii = verify_integral_identity(s, p, *c.geom);
    worst_density = std::max(worst_density, d);
    worst_gap = std::max(worst_gap, ii.gap);
    j["samples"].push_back({{"density_residual", d}, {"lhs", ii.lhs}, {"rhs", ii.rhs}, {"gap", ii.gap}});
  }
  j["max_density_residual"] = worst_density;
  j["max_integral_gap"] = worst_gap;
  const bool ok = worst_density <= density_tol && worst_gap <= integral_tol;
  j["pass"] = ok;
  write_json(c, "dimred.json", j.dump(2));
  std::cout << "density residual " << io::format_double(worst_density) << ", integral gap "
            << io::format_double(worst_gap) << (ok ? "" : " (FAILED)") << "\n";
  return ok ? kOk : kVerify;
}

int run_tau_sweep(const Config& c) {
  const auto b = parse_bundle(c.raw, "bundle");
  const auto taus = parse_tau_range(c.raw, *c.geom);
  const auto charges = parse_charges(c.raw);
  SolveOptions forced = c.solver;
  forced.force = true;
  std::vector<io::SweepRow> rows;
  for (double tau : taus) {
    io::SweepRow r;
    r.tau = tau;
    r.threshold = to_string(check_threshold(b, tau, *c.geom));
    try {
      auto sol = solve_abelian_vortex(b, tau, *c.geom, forced, nullptr, charges);
      r.status = "converged";
      r.has_energy = true;
      r.energy = sol.energy;
    } catch (const Error& e) {
      r.status = to_string(e.code());
    }
    std::cout << io::format_double(tau) << " " << r.threshold << " " << r.status << "\n";
    rows.push_back(r);
  }
  io::write_atomic(c.output / "sweep.csv", io::sweep_csv(rows));
  return kOk;
}

int run_density_profile(const Config& c) {
  const auto center = get<std::vector<double>>(c.raw, "center");
  const auto radii = get<std::vector<double>>(c.raw, "radii");
  const std::string kind = get_or<std::string>(c.raw, "density", "ymh");
  if (kind != "ymh" && kind != "curvature") bad("density", "must be 'ymh' or 'curvature'");
  FieldState s;
  if (c.raw.contains("state")) {
    auto loaded = io::load_state(get<std::string>(c.raw, "state"));
    if (!(*loaded.geometry == *c.geom)) bad("state", "geometry differs from the config");
    s = loaded.state;
  } else {
    // the constant-curvature connection of the bundle with phi = 0
    const auto b = parse_bundle(c.raw, "bundle");
    s.a1 = background_connection(b, *c.geom, parse_charges(c.raw));
    s.phi = mat::zeros(b.rank, 1, c.geom->size());
  }
  RealField q;
  if (kind == "curvature") {
    q = curvature_norm2(curvature(s.a1, *c.geom), *c.geom);
  } else {
    const auto p = derive_parameters(s.a1.bundle, s.a2 ? std::optional(s.a2->bundle) : std::nullopt,
                                     parse_tau(c.raw, *c.geom), *c.geom);
    q = ymh_density(s, p, *c.geom);
  }
  DensityProfile prof;
  try {
    prof = scaled_energy_profile(q, center, radii, *c.geom);
  } catch (const Error& e) {
    bad("radii", e.what());
  }
  auto v = monotonicity_check(prof, get_or<double>(c.raw, "tol", 1e-3),
                              get_or<bool>(c.raw, "stationary", true));
  io::write_atomic(c.output / "profile.csv", profile_csv(prof));
  write_json(c, "profile.json", to_json(prof, v));
  std::cout << (v.monotone ? "nondecreasing" : "decreasing") << ", worst violation "
            << io::format_double(v.worst_violation) << "\n";
  return kOk;
}

int run_concentration(const Config& c) {
  const auto& g = *c.geom;
  const double eps = get<double>(c.raw, "epsilon");
  const auto points = get<std::vector<std::vector<double>>>(c.raw, "points");
  const auto masses = get<std::vector<double>>(c.raw, "masses");
  const auto lambdas = get<std::vector<double>>(c.raw, "lambdas");
  const auto radii = get<std::vector<double>>(c.raw, "radii");
  if (points.size() != masses.size()) bad("masses", "must match points");
  for (const auto& x : points)
    if (static_cast<int>(x.size()) != g.real_dim()) bad("points", "wrong coordinate count");
  if (lambdas.empty()) bad("lambdas", "must not be empty");
  RealField bg(g.size(), 0.0);
  if (c.raw.contains("background")) {
    const auto& b = c.raw["background"];
    std::mt19937_64 rng(c.seed);
    bg = random_periodic(rng, get_or<double>(b, "decay", 6.0, "background"),
                         get_or<double>(b, "amplitude", 0.1, "background"), g);
    const double offset = get_or<double>(b, "offset", 1.0, "background");
    for (auto& v : bg) v += offset;
  }
  std::vector<RealField> family;
  for (double lam : lambdas) family.push_back(synthetic_bump_density(points, masses, lam, bg, g));
  ConcentrationReport rep;
  try {
    rep = concentration_detect(family, eps, radii, g, get_or<std::size_t>(c.raw, "tail", 0));
  } catch (const Error& e) {
    bad("radii", e.what());
  }
  write_json(c, "concentration.json", to_json(rep, g));
  std::cout << rep.clusters.size() << " concentration point(s)\n";
  return kOk;
}

int run_stability(const Config& c) {
  if (!c.raw.contains("model")) bad("model", "is required");
  const auto& m = c.raw["model"];
  SplitModel model{get<std::vector<int>>(m, "degrees", "model"),
                   get_or<std::vector<int>>(m, "phi_support", {}, "model"),
                   get_or<double>(m, "vol", c.geom->volume(), "model")};
  try {
    validate(model);
  } catch (const Error& e) {
    bad("model", e.what());
  }
  std::vector<double> taus;
  if (c.raw.contains("tau") || c.raw.contains("tau_hat"))
    taus.push_back(parse_tau(c.raw, *c.geom));
  else
    taus = parse_tau_range(c.raw, *c.geom);
  const bool smoke = get_or<bool>(c.raw, "correspondence", false);

  ojson j;
  j["walls"] = ojson::parse(to_json(tau_walls(model)));
  j["verdicts"] = ojson::array();
  bool consistent = true;
  for (double tau : taus) {
    ojson row;
    row["tau"] = tau;
    row["result"] = ojson::parse(to_json(pair_is_stable(model, tau)));
    if (smoke) {
      auto rep = correspondence_smoke_test(model, tau, *c.geom, c.solver);
      row["solver_converged"] = rep.solver_converged;
      row["solver_status"] = rep.solver_status;
      row["consistent"] = rep.consistent;
      consistent = consistent && rep.consistent;
    }
    std::cout << io::format_double(tau) << " " << row["result"]["verdict"].get<std::string>() << "\n";
    j["verdicts"].push_back(row);
  }
  if (smoke) j["consistent"] = consistent;
  write_json(c, "stability.json", j.dump(2));
  return consistent ? kOk : kVerify;
}

int run_el_residual(const Config& c) {
  const auto b = parse_bundle(c.raw, "bundle");
  const double tau = parse_tau(c.raw, *c.geom);
  auto v = solve_abelian_vortex(b, tau, *c.geom, c.solver, nullptr, parse_charges(c.raw));
  auto t = embed_vortex_as_coupled(v, *c.geom, c.solver);
  write_solution(c, "solution", t);
  auto r = euler_lagrange_residual(t.state, t.params, *c.geom);
  write_json(c, "el.json", to_json(r));
  std::cout << "Euler-Lagrange residual " << io::format_double(r.max()) << "\n";
  return kOk;
}

int dispatch(const Config& c) {
  fs::create_directories(c.output);
  const std::string& e = c.experiment;
  if (e == "solve-vortex") return run_solve_vortex(c);
  if (e == "solve-coupled") return run_solve_coupled(c);
  if (e == "embed-coupled") return run_embed_coupled(c);
  if (e == "check-dimred") return run_check_dimred(c);
  if (e == "tau-sweep") return run_tau_sweep(c);
  if (e == "density-profile") return run_density_profile(c);
  if (e == "concentration") return run_concentration(c);
  if (e == "stability") return run_stability(c);
  return run_el_residual(c);
}

bool is_config_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::NonPositivePeriod:
    case ErrorCode::UnsupportedDimension:
    case ErrorCode::InvalidGrid:
    case ErrorCode::NonIntegralCharge:
    case ErrorCode::NonpositiveSigmaDenominator:
    case ErrorCode::BidegreeMismatch:
    case ErrorCode::RadiusTooLarge:
    case ErrorCode::BundleMismatch:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::HypothesisUnmet:
    case ErrorCode::EmptySubobject:
    case ErrorCode::RankTwoSecondFactor:
      return true;
    default:
      return false;
  }
}

int run_command(const fs::path& config, const std::string& output, bool sweep_only) {
  Config c;
  try {
    c = parse_config(config, output);
    if (sweep_only && c.experiment != "tau-sweep") bad("experiment", "sweep needs a tau-sweep config");
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kConfig;
  }
  try {
    return dispatch(c);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kConfig;
  } catch (const Error& e) {
    if (is_config_code(e.code())) {
      std::cerr << e.what() << "\n";
      return kConfig;
    }
    if (e.code() == ErrorCode::ArtifactMissing || e.code() == ErrorCode::ArtifactCorrupt) {
      std::cerr << e.what() << "\n";
      return kVerify;
    }
    return solver_failure(c, e);
  }
}

// ---- report ----

int report_one(const fs::path& bin, bool verify) {
  fs::path cert_path = bin;
  cert_path.replace_extension(".cert.json");
  auto loaded = io::load_state(bin);
  if (!fs::exists(cert_path))
    throw Error(ErrorCode::ArtifactMissing, "no certificate next to " + bin.string());
  json cert;
  try {
    cert = json::parse(io::read_file(cert_path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ArtifactCorrupt, cert_path.string() + ": " + e.what());
  }
  if (cert.value("geometry_hash", "") != loaded.geometry->hash())
    throw Error(ErrorCode::ArtifactCorrupt, cert_path.string() + ": geometry hash mismatch");

  const auto& e = cert.at("energy");
  std::cout << bin.filename().string() << ": " << cert.at("status").get<std::string>() << ", "
            << cert.at("iterations").get<int>() << " iterations\n"
            << "  energy   " << io::format_double(e.at("total").get<double>()) << "  minimum "
            << io::format_double(e.at("topological_minimum").get<double>()) << "  defect "
            << io::format_double(e.at("defect").get<double>()) << "\n"
            << "  gap      " << io::format_double(cert.at("certificate_gap").get<double>()) << "\n";
  for (const auto& [name, v] : cert.at("residuals").items())
    std::cout << "  residual " << name << " " << io::format_double(v.get<double>()) << "\n";
  if (!verify) return kOk;

  const auto& s = loaded.state;
  const double tau = cert.at("params").at("tau").get<double>();
  const auto p = derive_parameters(s.a1.bundle, s.a2 ? std::optional(s.a2->bundle) : std::nullopt,
                                   tau, *loaded.geometry);
  const auto r = vortex_residuals(s, p, *loaded.geometry);
  const double tol = cert.at("residual_tol").get<double>();
  const bool converged = cert.at("status") == "converged";
  const double recorded = cert.at("residual_max").get<double>();
  bool ok = std::abs(r.max() - recorded) <= 1e-9 * std::max(1.0, recorded);
  if (converged) ok = ok && r.max() <= tol;
  std::cout << "  verify   residual " << io::format_double(r.max()) << " (tol "
            << io::format_double(tol) << ") " << (ok ? "ok" : "FAILED") << "\n";
  return ok ? kOk : kVerify;
}

int report_command(const fs::path& dir, bool verify) {
  try {
    if (!fs::is_directory(dir)) throw Error(ErrorCode::ArtifactMissing, dir.string() + " is not a directory");
    std::vector<fs::path> bins, others;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const auto& p = entry.path();
      if (p.extension() == ".bin")
        bins.push_back(p);
      else if (p.extension() == ".json" || p.extension() == ".csv")
        others.push_back(p);
    }
    std::sort(bins.begin(), bins.end());
    std::sort(others.begin(), others.end());
    if (bins.empty() && others.empty())
      throw Error(ErrorCode::ArtifactMissing, "no artifacts in " + dir.string());
    int status = kOk;
    for (const auto& b : bins) status = std::max(status, report_one(b, verify));
    for (const auto& o : others) {
      if (o.string().ends_with(".cert.json")) continue;
      std::cout << o.filename().string() << ": " << fs::file_size(o) << " bytes\n";
    }
    return status;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kVerify;
  }
}

int thread_cap() {
  const char* env = std::getenv("VORTEXLAB_THREADS");
  if (!env) return 1;
  try {
    const int n = std::stoi(env);
    if (n >= 1) return n;
  } catch (const std::exception&) {
  }
  throw ConfigError("ConfigInvalid: VORTEXLAB_THREADS must be a positive integer");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vortexlab: vortex and coupled-vortex experiments on flat tori"};
  app.require_subcommand(1);

  std::string config_path, output;
  auto* run = app.add_subcommand("run", "run the experiment described by a JSON config");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("-o,--output", output, "override the output directory");

  std::string sweep_path;
  auto* sweep = app.add_subcommand("sweep", "run a tau-sweep config");
  sweep->add_option("config", sweep_path, "config file")->required();
  sweep->add_option("-o,--output", output, "override the output directory");

  std::string dir;
  bool verify = false;
  auto* report = app.add_subcommand("report", "summarize the artifacts in a directory");
  report->add_flag("--verify", verify, "recompute residuals from the stored states");
  report->add_option("dir", dir, "artifact directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfig;
  }

  try {
    // FFTW plans are single-threaded, so any cap >= 1 is honored trivially
    thread_cap();
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kConfig;
  }

  if (*run) return run_command(config_path, output, false);
  if (*sweep) return run_command(sweep_path, output, true);
  return report_command(dir, verify);
}
