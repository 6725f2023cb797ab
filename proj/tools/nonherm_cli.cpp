// nonherm: command-line front end for spectra, pseudospectra, pseudomodes and metrics.
//
// Every option may also be given in a key = value config file (--config);
// flags override the file. Outputs begin with a comment header that records
// the schema version and the resolved configuration. The worker count is not
// part of the header since results do not depend on it.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "nonherm/nonherm.hpp"

using namespace nonherm;

namespace {

constexpr int kSchemaVersion = 1;
constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raw option values as strings; typed parsing happens in resolve().
struct RawOptions {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

const std::vector<std::pair<std::string, std::string>> kOptionSpecs{
    {"potential", "potential polynomial, e.g. \"i*x^3\" or \"x^2 + 0.5*i*x\""},
    {"scheme", "discretization scheme: fd | hermite"},
    {"n", "discretization dimension N"},
    {"half-width", "finite-difference box half-width L"},
    {"hermite-scale", "Hermite collocation scale alpha"},
    {"h", "semiclassical parameter h"},
    {"grid", "pseudospectrum grid re0,re1,im0,im1,nx,ny"},
    {"sigmas", "rbound sigma list, strictly increasing"},
    {"hs", "pseudomode h list, strictly decreasing"},
    {"k-list", "list of truncation ranks K"},
    {"weights", "metric weight rule: geometric | kappa"},
    {"workers", "worker threads (default: NONHERM_WORKERS, else 1)"},
    {"out", "output path (default: standard output)"},
    {"seed", "seed for sampled quantities"},
    {"z", "spectral parameter re,im for rbound and pseudomode"},
    {"eps", "pseudospectrum contour levels written to <out>.contours.json"},
};

const std::map<std::string, std::string> kDefaults{
    {"potential", "i*x^3"}, {"scheme", "hermite"},     {"n", "200"},
    {"half-width", "10"},   {"hermite-scale", "1"},    {"h", "1"},
    {"grid", "0,30,0,15,60,30"},
    {"sigmas", "10,20,40,80"},
    {"hs", "0.1,0.05,0.025,0.0125"},
    {"k-list", "4,6,8,10"},   {"weights", "geometric"}, {"seed", "1"},
    {"z", "1,1"},           {"eps", "0.1,0.01,0.001,0.0001"},
    {"k", "10"},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size() || !std::isfinite(d)) {
    throw UsageError("--" + key + ": '" + v + "' is not a finite number");
  }
  return d;
}

long long to_integer(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long n = 0;
  try {
    n = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw UsageError("--" + key + ": '" + v + "' is not an integer");
  return n;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split(v, ',')) out.push_back(to_double(key, item));
  if (out.empty()) throw UsageError("--" + key + ": empty list");
  return out;
}

Complex to_complex(const std::string& key, const std::string& v) {
  const auto p = to_doubles(key, v);
  if (p.size() != 2) throw UsageError("--" + key + ": expected re,im");
  return {p[0], p[1]};
}

// key = value lines; '#' starts a comment.
std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("--config: cannot open '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("--config: line " + std::to_string(lineno) + " is not 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key != "k" && std::none_of(kOptionSpecs.begin(), kOptionSpecs.end(),
                                   [&](const auto& s) { return s.first == key; })) {
      throw UsageError("--config: unknown key '" + key + "' on line " + std::to_string(lineno));
    }
    out[key] = value;
  }
  return out;
}

struct RunConfig {
  std::string command;
  std::string potential_text;
  PolynomialPotential potential;
  Discretization disc;
  GridSpec grid;
  std::vector<double> sigmas;
  std::vector<double> hs;
  std::vector<std::size_t> k_list;
  WeightRule weights = WeightRule::geometric;
  std::size_t k = 10;
  int workers = 1;
  std::string out;
  std::uint64_t seed = 1;
  Complex z{1.0, 1.0};
  std::vector<double> eps;

  // Resolved values as printed in the header, in a fixed order.
  std::vector<std::pair<std::string, std::string>> header;
};

RunConfig resolve(const std::string& command, RawOptions& raw, const std::string& config_path) {
  std::map<std::string, std::string> merged = kDefaults;
  if (!config_path.empty()) {
    for (const auto& [k, v] : read_config_file(config_path)) merged[k] = v;
  }
  for (const auto& [k, opt] : raw.options) {
    if (opt->count() > 0) merged[k] = raw.values[k];
  }

  RunConfig c;
  c.command = command;
  c.potential_text = merged["potential"];
  try {
    c.potential = parse_potential(c.potential_text);
  } catch (const Error& e) {
    throw UsageError(std::string("--potential: ") + e.what());
  }
  const std::string scheme = merged["scheme"];
  if (scheme != "fd" && scheme != "hermite") throw UsageError("--scheme: expected fd or hermite, got '" + scheme + "'");
  const long long n = to_integer("n", merged["n"]);
  if (n < 4 || n > 20000) throw UsageError("--n: must lie in [4, 20000]");
  const double h = to_double("h", merged["h"]);
  if (!(h > 0.0)) throw UsageError("--h: must be positive");
  if (scheme == "fd") {
    const double l = to_double("half-width", merged["half-width"]);
    if (!(l > 0.0)) throw UsageError("--half-width: must be positive");
    c.disc = Discretization::finite_difference(static_cast<int>(n), l, h);
  } else {
    const double a = to_double("hermite-scale", merged["hermite-scale"]);
    if (!(a > 0.0)) throw UsageError("--hermite-scale: must be positive");
    c.disc = Discretization::hermite(static_cast<int>(n), a, h);
  }

  const auto g = to_doubles("grid", merged["grid"]);
  if (g.size() != 6) throw UsageError("--grid: expected re0,re1,im0,im1,nx,ny");
  c.grid = GridSpec{g[0], g[1], g[2], g[3], static_cast<int>(g[4]), static_cast<int>(g[5])};
  if (g[4] != std::floor(g[4]) || g[5] != std::floor(g[5])) throw UsageError("--grid: nx and ny must be integers");
  try {
    c.grid.validate();
  } catch (const Error& e) {
    throw UsageError(std::string("--grid: ") + e.what());
  }

  c.sigmas = to_doubles("sigmas", merged["sigmas"]);
  c.hs = to_doubles("hs", merged["hs"]);
  for (const auto& item : split(merged["k-list"], ',')) {
    const long long k = to_integer("k-list", item);
    if (k < 1) throw UsageError("--k-list: entries must be positive");
    c.k_list.push_back(static_cast<std::size_t>(k));
  }
  if (c.k_list.empty()) throw UsageError("--k-list: empty list");
  try {
    c.weights = parse_weight_rule(merged["weights"]);
  } catch (const Error& e) {
    throw UsageError(std::string("--weights: ") + e.what());
  }
  const long long k = to_integer("k", merged["k"]);
  if (k < 1) throw UsageError("-k: must be positive");
  c.k = static_cast<std::size_t>(k);
  c.seed = static_cast<std::uint64_t>(to_integer("seed", merged["seed"]));
  c.z = to_complex("z", merged["z"]);
  c.eps = to_doubles("eps", merged["eps"]);
  for (double e : c.eps) {
    if (!(e > 0.0)) throw UsageError("--eps: levels must be positive");
  }
  c.out = merged.count("out") ? merged["out"] : "";

  if (merged.count("workers")) {
    const long long w = to_integer("workers", merged["workers"]);
    if (w < 1) throw UsageError("--workers: must be at least 1");
    c.workers = static_cast<int>(w);
  } else {
    c.workers = workers_from_env(1);
  }

  c.header = {{"subcommand", command},
              {"potential", c.potential.to_string()},
              {"scheme", scheme},
              {"n", std::to_string(n)}};
  if (scheme == "fd") {
    c.header.emplace_back("half-width", merged["half-width"]);
  } else {
    c.header.emplace_back("hermite-scale", merged["hermite-scale"]);
  }
  c.header.emplace_back("h", merged["h"]);
  const std::map<std::string, std::vector<std::string>> extra{
      {"eigs", {"k"}},
      {"riesz", {"k-list", "seed"}},
      {"pseudospectrum", {"grid", "eps"}},
      {"rbound", {"z", "sigmas"}},
      {"pseudomode", {"z", "hs"}},
      {"metric", {"k-list", "weights"}},
  };
  if (auto it = extra.find(command); it != extra.end()) {
    for (const auto& key : it->second) c.header.emplace_back(key, merged[key]);
  }
  if (command == "jordan-demo" || command == "validate") c.header.resize(1);
  return c;
}

// Output sink: the --out file, or standard output.
class Sink {
 public:
  explicit Sink(const RunConfig& c) {
    if (!c.out.empty()) {
      file_ = std::make_unique<std::ofstream>(c.out);
      if (!*file_) throw UsageError("--out: cannot open '" + c.out + "' for writing");
    }
    auto& os = stream();
    os << "# nonherm schema_version = " << kSchemaVersion << '\n';
    for (const auto& [k, v] : c.header) os << "# " << k << " = " << v << '\n';
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

int run_eigs(const RunConfig& c) {
  const auto sys = gated_biorthogonal_system(c.potential, c.disc, c.k);
  Sink sink(c);
  write_eigenpairs_csv(sink.stream(), sys);
  return 0;
}

int run_riesz(const RunConfig& c) {
  const std::size_t kmax = *std::max_element(c.k_list.begin(), c.k_list.end());
  const auto sys = gated_biorthogonal_system(c.potential, c.disc, kmax);
  Sink sink(c);
  auto& os = sink.stream();
  os.precision(17);
  os << "K,frame_lower,frame_upper,frame_ratio,sampled_min,sampled_max,max_kappa,converged\n";
  for (std::size_t k : c.k_list) {
    if (k < 2) throw InputError("riesz: K must be at least 2 for frame bounds");
    const auto fb = frame_bounds(sys.right.leftCols(static_cast<Eigen::Index>(k)), 200, c.seed);
    const double kmax_k = *std::max_element(sys.condition_numbers.begin(),
                                            sys.condition_numbers.begin() + static_cast<std::ptrdiff_t>(k));
    const bool conv = std::all_of(sys.converged.begin(), sys.converged.begin() + static_cast<std::ptrdiff_t>(k),
                                  [](bool b) { return b; });
    os << k << ',' << fb.lower << ',' << fb.upper << ',' << fb.ratio() << ',' << fb.sampled_min << ','
       << fb.sampled_max << ',' << kmax_k << ',' << (conv ? 1 : 0) << '\n';
  }
  return 0;
}

int run_pseudospectrum(const RunConfig& c) {
  const auto m = build_matrix(c.potential, c.disc);
  const auto f = pseudospectrum_grid(m, c.grid, c.workers);
  Sink sink(c);
  write_field_csv(sink.stream(), f);
  if (!c.out.empty()) {
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    for (const auto& [k, v] : c.header) j["config"][k] = v;
    j["levels"] = nlohmann::ordered_json::array();
    for (double e : c.eps) {
      nlohmann::ordered_json level;
      level["eps"] = e;
      level["polylines"] = level_set_polylines(f, e);
      j["levels"].push_back(level);
    }
    std::ofstream js(c.out + ".contours.json");
    if (!js) throw UsageError("--out: cannot write '" + c.out + ".contours.json'");
    js << j.dump(1) << '\n';
  }
  return 0;
}

int run_rbound(const RunConfig& c) {
  const auto m = build_matrix(c.potential, c.disc);
  RboundOptions o;
  o.workers = c.workers;
  const auto recs = rbound_scan(m, c.z, c.sigmas, o);
  const auto v = rbound_violation(recs);
  Sink sink(c);
  auto& os = sink.stream();
  os.precision(17);
  os << "sigma,resolvent_norm,kappa,flagged\n";
  for (const auto& r : recs) os << r.sigma << ',' << r.norm << ',' << r.kappa << ',' << (r.flagged ? 1 : 0) << '\n';
  os << "# strictly_increasing = " << (v.strictly_increasing ? 1 : 0) << '\n'
     << "# mean_log_slope = " << v.mean_log_slope << '\n'
     << "# violated = " << (v.violated ? 1 : 0) << '\n';
  return 0;
}

int run_pseudomode(const RunConfig& c) {
  const auto s = lbound_exponent_scan(c.potential, c.z, c.hs, c.disc, 0.0, c.workers);
  Sink sink(c);
  auto& os = sink.stream();
  write_residuals_csv(os, s);
  os.precision(17);
  os << "# fitted_exponent = " << s.fitted_exponent << '\n'
     << "# kappa_growth_exponent = " << s.kappa_growth_exponent << '\n'
     << "# exceeds_six_fifths = " << (s.exceeds_six_fifths ? 1 : 0) << '\n'
     << "# rbound_violated = " << (s.rbound_violated ? 1 : 0) << '\n';
  return 0;
}

int run_metric(const RunConfig& c) {
  const std::size_t kmax = *std::max_element(c.k_list.begin(), c.k_list.end());
  const auto m = build_matrix(c.potential, c.disc);
  auto sys = biorthogonal_system(m, kmax);
  apply_convergence_gate(sys, build_matrix(c.potential, c.disc.with_n(2 * c.disc.n)).matrix);
  std::vector<MetricRow> rows;
  for (std::size_t k : c.k_list) {
    const auto t = build_metric(sys, k, c.weights);
    const auto s = metric_spectrum(t);
    MetricRow row;
    row.cond = {k, s.lambda_min, s.lambda_max, s.ratio()};
    row.subspace_residual = quasi_hermiticity_residual(t, m).subspace;
    row.rule = c.weights;
    rows.push_back(row);
  }
  Sink sink(c);
  write_metric_csv(sink.stream(), rows);
  return 0;
}

int run_jordan(const RunConfig& c) {
  Sink sink(c);
  sink.stream() << jordan_demo().to_text();
  return 0;
}

// Closed-form self-checks; exit 0 iff all pass.
int run_validate(const RunConfig& c) {
  Sink sink(c);
  auto& os = sink.stream();
  os.precision(6);
  int failures = 0;
  auto report = [&](const std::string& name, bool pass, double value, double limit) {
    os << (pass ? "PASS " : "FAIL ") << name << ": " << value << " (limit " << limit << ")\n";
    failures += pass ? 0 : 1;
  };

  EigOptions values_only;
  values_only.vectors = false;
  const auto osc = build_matrix(parse_potential("x^2"), Discretization::hermite(200));
  const auto ev = eig_dense(osc.matrix, values_only).eigenvalues;
  double worst = 0.0;
  for (int k = 0; k < 8; ++k) worst = std::max(worst, std::abs(ev[static_cast<std::size_t>(k)] - (2.0 * k + 1.0)) / (2.0 * k + 1.0));
  report("harmonic oscillator, 8 lowest levels, relative error", worst <= 1e-8, worst, 1e-8);

  const auto cubic = build_matrix(PolynomialPotential::imaginary_cubic(), Discretization::finite_difference(400, 6.0));
  const auto r = symmetry_residuals(cubic);
  const double sym = std::max({r.pt_commutator, r.p_selfadjoint, r.t_selfadjoint});
  report("i x^3 symmetry residuals", sym <= 1e-12, sym, 1e-12);

  const auto small = build_matrix(parse_potential("x^2"), Discretization::hermite(60));
  const GridSpec g{0.0, 20.0, -3.0, 3.0, 20, 10};
  const double dev = normal_equality_deviation(pseudospectrum_grid(small, g, c.workers),
                                               eig_dense(small.matrix, values_only).eigenvalues);
  report("normal pseudospectrum equality", dev <= 1e-8, dev, 1e-8);

  const auto j = jordan_demo();
  const double jr = std::max(j.theta_residual, j.intertwining_residual);
  report("Jordan metric identities", jr == 0.0 && j.theta_determinant == 0.0, jr, 0.0);

  os << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed") << '\n';
  return failures == 0 ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical study of non-self-adjoint Schrodinger operators"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print this help and exit");  // --h is the semiclassical parameter
  app.fallthrough();

  RawOptions raw;
  for (const auto& [key, help] : kOptionSpecs) {
    raw.values[key];
    raw.options[key] = app.add_option("--" + key, raw.values[key], help);
  }
  raw.values["k"];
  raw.options["k"] = app.add_option("-k", raw.values["k"], "number of eigenpairs for eigs");
  std::string config_path;
  app.add_option("--config", config_path, "key = value config file; flags take precedence");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"eigs", "lowest eigenpairs with condition numbers (CSV)"},
      {"riesz", "frame bounds of eigenvector families (CSV)"},
      {"pseudospectrum", "resolvent norm on a grid (CSV, JSON contours)"},
      {"rbound", "kappa(sigma) scan along a ray (CSV)"},
      {"pseudomode", "WKB pseudomode residual scan (CSV)"},
      {"metric", "truncated metric conditioning sweep (CSV)"},
      {"jordan-demo", "Jordan block metric demonstration (text)"},
      {"validate", "closed-form self-checks"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  RunConfig cfg;
  try {
    cfg = resolve(command, raw, config_path);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (command == "eigs") return run_eigs(cfg);
    if (command == "riesz") return run_riesz(cfg);
    if (command == "pseudospectrum") return run_pseudospectrum(cfg);
    if (command == "rbound") return run_rbound(cfg);
    if (command == "pseudomode") return run_pseudomode(cfg);
    if (command == "metric") return run_metric(cfg);
    if (command == "jordan-demo") return run_jordan(cfg);
    return run_validate(cfg);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return kExitNumerical;
  }
}
