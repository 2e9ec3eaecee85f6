#include "cli.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "opval/io.hpp"
#include "opval/rmt.hpp"
#include "opval/solver.hpp"
#include "opval/sweep.hpp"

namespace opval::cli {

namespace {

using nlohmann::json;

struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> eta;
  std::optional<std::string> z;
  std::optional<std::string> method;
  std::optional<double> theta;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<int> newton_max_iter;
  std::optional<double> newton_switch_tol;
  std::optional<std::string> initial;
  std::optional<double> t_min;
  std::optional<double> t_max;
  std::optional<double> step;
  std::optional<double> im_offset;
  std::optional<double> center;
  std::optional<std::uint64_t> n;
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> bins;
  std::optional<std::string> profile;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
  std::optional<double> threshold;
  std::optional<std::string> curve;
  std::optional<std::string> histogram;
};

const std::map<std::string, std::vector<std::string>>& schema() {
  static const std::map<std::string, std::vector<std::string>> blocks{
      {"sweep", {"t_min", "t_max", "step", "im_offset", "center"}},
      {"solver", {"method", "theta", "tol", "max_iter", "newton_max_iter", "newton_switch_tol", "initial"}},
      {"oracle", {"N", "trials", "seed", "bins", "profile"}},
      {"output", {"path"}},
      {"compare", {"curve", "histogram", "threshold"}},
  };
  return blocks;
}

const std::vector<std::string>& scalar_keys() {
  static const std::vector<std::string> keys{"dim", "eta", "z", "threads"};
  return keys;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

json defaults() {
  const SolverConfig s;
  const SweepGrid g;
  return json{
      {"eta", "toeplitz3"},
      {"threads", 0},
      {"sweep", {{"t_min", g.t_min}, {"t_max", g.t_max}, {"step", g.step}, {"im_offset", g.im_offset},
                 {"center", g.center}}},
      {"solver", {{"method", std::string(to_string(s.method))},
                  {"theta", s.theta},
                  {"tol", s.tol},
                  {"max_iter", s.max_iter},
                  {"newton_max_iter", s.newton_max_iter},
                  {"newton_switch_tol", s.newton_switch_tol},
                  {"initial", "identity"}}},
      {"oracle", {{"N", 300}, {"trials", 50}, {"seed", 1}, {"bins", 80}, {"profile", "toeplitz3"}}},
      {"output", json::object()},
      {"compare", {{"threshold", 0.05}}},
  };
}

void check_keys(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (contains(scalar_keys(), key)) continue;
    const auto it = schema().find(key);
    if (it == schema().end()) throw ConfigError("config: unknown key '" + key + "'");
    if (!value.is_object()) throw ConfigError("config: '" + key + "' must be an object");
    for (const auto& [sub, v] : value.items()) {
      if (!contains(it->second, sub)) throw ConfigError("config: unknown key '" + key + "." + sub + "'");
    }
  }
}

void merge_into(json& base, const json& overlay) {
  for (const auto& [key, value] : overlay.items()) {
    if (value.is_object() && schema().count(key)) {
      for (const auto& [sub, v] : value.items()) base[key][sub] = v;
    } else {
      base[key] = value;
    }
  }
}

json read_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::string(what) + ": cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + ": malformed JSON in '" + path + "': " + e.what());
  }
}

// A manifest written by a previous run is accepted in place of a config file.
json load_config_file(const std::string& path, const std::string& command) {
  json j = read_json_file(path, "config");
  if (j.is_object() && j.contains("command") && j.contains("config")) {
    if (j["command"] != command) {
      throw ConfigError("config: manifest was written by '" + j["command"].get<std::string>() + "', not '" +
                        command + "'");
    }
    j = j["config"];
  }
  check_keys(j);
  return j;
}

std::uint64_t parse_seed(const std::string& text) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (text.empty() || text[0] == '-' || errno != 0 || end != text.c_str() + text.size()) {
    throw ConfigError("OPVAL_SEED: '" + text + "' is not an unsigned integer");
  }
  return v;
}

void apply_flags(json& c, const Flags& f) {
  if (f.eta) {
    if (*f.eta == "toeplitz3" || *f.eta == "semicircle") {
      c["eta"] = *f.eta;
    } else {
      c["eta"] = read_json_file(*f.eta, "eta");
    }
  }
  if (f.z) c["z"] = *f.z;
  if (f.threads) c["threads"] = *f.threads;
  if (f.method) c["solver"]["method"] = *f.method;
  if (f.theta) c["solver"]["theta"] = *f.theta;
  if (f.tol) c["solver"]["tol"] = *f.tol;
  if (f.max_iter) c["solver"]["max_iter"] = *f.max_iter;
  if (f.newton_max_iter) c["solver"]["newton_max_iter"] = *f.newton_max_iter;
  if (f.newton_switch_tol) c["solver"]["newton_switch_tol"] = *f.newton_switch_tol;
  if (f.initial) c["solver"]["initial"] = *f.initial;
  if (f.t_min) c["sweep"]["t_min"] = *f.t_min;
  if (f.t_max) c["sweep"]["t_max"] = *f.t_max;
  if (f.step) c["sweep"]["step"] = *f.step;
  if (f.im_offset) c["sweep"]["im_offset"] = *f.im_offset;
  if (f.center) c["sweep"]["center"] = *f.center;
  if (f.n) c["oracle"]["N"] = *f.n;
  if (f.trials) c["oracle"]["trials"] = *f.trials;
  if (f.seed) c["oracle"]["seed"] = *f.seed;
  if (f.bins) c["oracle"]["bins"] = *f.bins;
  if (f.profile) c["oracle"]["profile"] = *f.profile;
  if (f.out) c["output"]["path"] = *f.out;
  if (f.threshold) c["compare"]["threshold"] = *f.threshold;
  if (f.curve) c["compare"]["curve"] = *f.curve;
  if (f.histogram) c["compare"]["histogram"] = *f.histogram;
}

// defaults < config file < OPVAL_SEED < flags
json resolve(const std::string& command, const Flags& flags) {
  json c = defaults();
  if (flags.config) merge_into(c, load_config_file(*flags.config, command));
  if (const char* env = std::getenv("OPVAL_SEED"); env != nullptr && *env != '\0') {
    c["oracle"]["seed"] = parse_seed(env);
  }
  apply_flags(c, flags);
  check_keys(c);
  return c;
}

double number(const json& c, const std::string& block, const std::string& key) {
  const json& v = c.at(block).at(key);
  if (!v.is_number()) throw ConfigError("config: '" + block + "." + key + "' must be a number");
  return v.get<double>();
}

template <class Int>
Int positive_int(const json& v, const std::string& name) {
  if (!v.is_number_integer() || v.get<long long>() <= 0) {
    throw ConfigError("config: '" + name + "' must be a positive integer");
  }
  return v.get<Int>();
}

template <class Int>
Int nonneg_int(const json& v, const std::string& name) {
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0)) {
    throw ConfigError("config: '" + name + "' must be a non-negative integer");
  }
  return v.get<Int>();
}

std::string string_at(const json& c, const std::string& block, const std::string& key) {
  const json& v = c.at(block).at(key);
  if (!v.is_string()) throw ConfigError("config: '" + block + "." + key + "' must be a string");
  return v.get<std::string>();
}

EtaMap eta_of(const json& c) {
  const json& e = c.at("eta");
  EtaMap eta = [&] {
    if (e.is_string()) {
      const auto name = e.get<std::string>();
      if (name == "toeplitz3") return EtaMap::toeplitz3();
      if (name == "semicircle") return EtaMap::kraus(1, {CMat::identity(1)});
      throw ConfigError("config: unknown eta preset '" + name + "' (toeplitz3, semicircle or an object)");
    }
    return eta_from_json(e);
  }();
  if (c.contains("dim") && positive_int<std::size_t>(c["dim"], "dim") != eta.dim()) {
    throw ConfigError("config: 'dim' does not match the eta dimension " + std::to_string(eta.dim()));
  }
  return eta;
}

unsigned threads_of(const json& c) {
  return nonneg_int<unsigned>(c.at("threads"), "threads");
}

SolverConfig solver_of(const json& c, std::size_t dim) {
  SolverConfig s;
  const auto method = parse_method(string_at(c, "solver", "method"));
  if (!method) throw ConfigError("config: solver.method must be plain, averaged, newton or hybrid");
  s.method = *method;
  s.theta = number(c, "solver", "theta");
  s.tol = number(c, "solver", "tol");
  s.max_iter = positive_int<int>(c["solver"]["max_iter"], "solver.max_iter");
  s.newton_max_iter = positive_int<int>(c["solver"]["newton_max_iter"], "solver.newton_max_iter");
  s.newton_switch_tol = number(c, "solver", "newton_switch_tol");
  if (!(s.theta > 0.0 && s.theta <= 1.0)) throw ConfigError("config: solver.theta must lie in (0, 1]");
  if (!(s.tol > 0.0)) throw ConfigError("config: solver.tol must be positive");
  if (!(s.newton_switch_tol > 0.0)) throw ConfigError("config: solver.newton_switch_tol must be positive");
  if (s.method == Method::hybrid && !(s.tol < s.newton_switch_tol)) {
    throw ConfigError("config: hybrid needs solver.tol < solver.newton_switch_tol");
  }
  const json& init = c["solver"]["initial"];
  if (init.is_string()) {
    s.initial = initial_preset(init.get<std::string>(), dim);
    if (!s.initial) {
      throw ConfigError("config: initial preset '" + init.get<std::string>() + "' is not available for dim " +
                        std::to_string(dim));
    }
  } else {
    s.initial = matrix_from_json(init, dim);
  }
  return s;
}

SweepGrid grid_of(const json& c) {
  SweepGrid g;
  g.t_min = number(c, "sweep", "t_min");
  g.t_max = number(c, "sweep", "t_max");
  g.step = number(c, "sweep", "step");
  g.im_offset = number(c, "sweep", "im_offset");
  g.center = number(c, "sweep", "center");
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return g;
}

Complex z_of(const json& c) {
  if (!c.contains("z")) throw ConfigError("solve: --z is required");
  const json& v = c["z"];
  Complex z;
  if (v.is_string()) {
    z = parse_complex(v.get<std::string>());
  } else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    z = {v[0].get<double>(), v[1].get<double>()};
  } else {
    throw ConfigError("config: 'z' must be a string like \"0+1e-6i\" or [re, im]");
  }
  if (!(z.imag() > 0.0)) throw ConfigError("solve: Im z must be positive");
  return z;
}

std::optional<std::string> out_path(const json& c) {
  const json& o = c.at("output");
  if (!o.contains("path")) return std::nullopt;
  if (!o["path"].is_string()) throw ConfigError("config: output.path must be a string");
  return o["path"].get<std::string>();
}

std::string manifest_path(const std::string& path) { return path + ".manifest.json"; }

// Writes to the --out path (plus its manifest) or to `out`.
void emit(const std::string& command, const json& config, std::ostream& out,
          const std::function<void(std::ostream&)>& write) {
  const auto path = out_path(config);
  if (!path) {
    write(out);
    return;
  }
  {
    std::ofstream file(*path, std::ios::binary);
    if (!file) throw ConfigError("cannot write '" + *path + "'");
    write(file);
  }
  std::ofstream manifest(manifest_path(*path), std::ios::binary);
  if (!manifest) throw ConfigError("cannot write '" + manifest_path(*path) + "'");
  manifest << json{{"command", command}, {"version", kVersion}, {"config", config}}.dump(2) << '\n';
}

int cmd_solve(const json& c, std::ostream& out, std::ostream& err) {
  const EtaMap eta = eta_of(c);
  const SolverConfig solver = solver_of(c, eta.dim());
  const Complex z = z_of(c);
  const auto at = solve_at(z, eta, solver);
  const auto& r = at.result;
  json report = solve_result_to_json(r, z, at.g);
  emit("solve", c, out, [&](std::ostream& os) { os << report.dump(2) << '\n'; });

  if (!r.converged) {
    err << "not converged after " << r.iterations << " iterations (residual " << r.residual << ")\n";
    return kExitFailed;
  }
  if (!r.certificate.holds()) {
    err << "converged to a root outside A_+: lambda_min(Re W) = " << r.certificate.measured_lambda_min_re
        << ", required >= " << r.certificate.re_lower_bound << "\n";
    return kExitWrongRoot;
  }
  return kExitOk;
}

int cmd_sweep(const json& c, std::ostream& out, std::ostream& err) {
  SweepConfig cfg{eta_of(c), grid_of(c), {}, threads_of(c)};
  cfg.solver = solver_of(c, cfg.eta.dim());
  const DensityCurve curve = sweep(cfg);
  emit("sweep", c, out, [&](std::ostream& os) { write_curve_csv(curve, os); });

  std::size_t failed = 0;
  double worst = 0.0;
  double peak = 0.0;
  for (const auto& r : curve.rows) {
    if (!r.positivity_ok) {
      ++failed;
      continue;
    }
    worst = std::max(worst, r.residual);
    peak = std::max(peak, r.density);
  }
  double lo = NAN;
  double hi = NAN;
  for (const auto& r : curve.rows) {
    if (r.positivity_ok && r.density > 1e-3 * peak) {
      if (std::isnan(lo)) lo = r.t;
      hi = r.t;
    }
  }
  err << "rows " << curve.rows.size() << ", failed " << failed << ", support ~ [" << lo << ", " << hi
      << "], integral " << std::setprecision(10) << integrate_density(curve) << ", worst residual "
      << std::setprecision(3) << worst << "\n";
  return failed == 0 ? kExitOk : kExitFailed;
}

int cmd_sample(const json& c, std::ostream& out, std::ostream& err) {
  const auto n = positive_int<std::size_t>(c["oracle"]["N"], "oracle.N");
  const auto trials = positive_int<std::size_t>(c["oracle"]["trials"], "oracle.trials");
  const auto bins = positive_int<std::size_t>(c["oracle"]["bins"], "oracle.bins");
  const auto seed = nonneg_int<std::uint64_t>(c["oracle"]["seed"], "oracle.seed");
  if (bins < 10) throw ConfigError("config: oracle.bins must be >= 10");
  const std::string profile_name = string_at(c, "oracle", "profile");
  BlockProfile profile;
  if (profile_name == "toeplitz3") {
    profile = BlockProfile::toeplitz3(n);
  } else if (profile_name == "wigner") {
    profile = BlockProfile::wigner(n);
  } else {
    throw ConfigError("config: oracle.profile must be toeplitz3 or wigner");
  }

  const auto sample = empirical_spectrum(profile, trials, seed, bins, threads_of(c));
  emit("sample", c, out, [&](std::ostream& os) { write_histogram_csv(sample.histogram, os); });

  double mean = 0.0;
  double second = 0.0;
  for (double x : sample.eigenvalues) {
    mean += x;
    second += x * x;
  }
  const double count = static_cast<double>(sample.eigenvalues.size());
  err << "eigenvalues " << sample.eigenvalues.size() << ", range [" << sample.histogram.edges.front() << ", "
      << sample.histogram.edges.back() << "], mean " << mean / count << ", second moment " << second / count
      << "\n";
  return kExitOk;
}

std::string input_path(const json& c, const char* key) {
  const json& v = c.at("compare");
  if (!v.contains(key) || !v[key].is_string()) {
    throw ConfigError(std::string("compare: missing ") + key + " path");
  }
  return v[key].get<std::string>();
}

template <class Reader>
auto read_data(const std::string& path, Reader reader) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return reader(in);
}

int cmd_compare(const json& c, std::ostream& out, std::ostream& err) {
  const std::string curve_path = input_path(c, "curve");
  const std::string hist_path = input_path(c, "histogram");
  const json& thr = c["compare"]["threshold"];
  if (!thr.is_number() || !(thr.get<double>() >= 0.0)) {
    throw ConfigError("config: compare.threshold must be a non-negative number");
  }
  const double threshold = thr.get<double>();

  const DensityCurve curve = read_data(curve_path, read_curve_csv);
  const Histogram hist = read_data(hist_path, read_histogram_csv);
  if (curve.rows.size() < 2) throw DataError("compare: curve needs at least two rows");
  const Comparison cmp = compare(curve, hist);

  json report{{"l1", cmp.l1}, {"ks", cmp.ks}, {"trials", nullptr}, {"N", nullptr}, {"seed", nullptr},
              {"threshold", threshold}, {"pass", cmp.l1 <= threshold}};
  if (std::filesystem::exists(manifest_path(hist_path))) {
    const json m = read_json_file(manifest_path(hist_path), "histogram manifest");
    if (m.is_object() && m.contains("config") && m["config"].contains("oracle")) {
      const json& o = m["config"]["oracle"];
      for (const char* key : {"trials", "N", "seed"})
        if (o.contains(key)) report[key] = o[key];
    }
  }
  emit("compare", c, out, [&](std::ostream& os) { os << report.dump(2) << '\n'; });
  if (cmp.l1 > threshold) {
    err << "l1 " << cmp.l1 << " exceeds threshold " << threshold << "\n";
    return kExitFailed;
  }
  return kExitOk;
}

void add_config(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run config or a manifest from a previous run");
  sub->add_option("--out", f.out, "output file; a manifest is written next to it");
}

void add_eta(CLI::App* sub, Flags& f) {
  sub->add_option("--eta", f.eta, "toeplitz3, semicircle, or a path to an eta JSON file");
}

void add_solver(CLI::App* sub, Flags& f) {
  sub->add_option("--method", f.method, "plain | averaged | newton | hybrid");
  sub->add_option("--theta", f.theta, "averaging weight in (0, 1]");
  sub->add_option("--tol", f.tol, "residual and step tolerance");
  sub->add_option("--max-iter", f.max_iter, "iteration cap");
  sub->add_option("--newton-max-iter", f.newton_max_iter, "Newton step cap inside hybrid");
  sub->add_option("--newton-switch-tol", f.newton_switch_tol, "hybrid switch residual");
  sub->add_option("--initial", f.initial, "identity | toeplitz3-start");
}

void add_threads(CLI::App* sub, Flags& f) {
  sub->add_option("--threads", f.threads, "worker cap (0 = available parallelism)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Operator-valued fixed-point solver and random-matrix oracle", "opval"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Flags f;

  auto* solve_cmd = app.add_subcommand("solve", "solve at one spectral parameter z");
  add_config(solve_cmd, f);
  add_eta(solve_cmd, f);
  add_solver(solve_cmd, f);
  solve_cmd->add_option("--z", f.z, "spectral parameter, e.g. 0+1e-6i");

  auto* sweep_cmd = app.add_subcommand("sweep", "density curve along t + i*eps");
  add_config(sweep_cmd, f);
  add_eta(sweep_cmd, f);
  add_solver(sweep_cmd, f);
  add_threads(sweep_cmd, f);
  sweep_cmd->add_option("--t-min", f.t_min, "left end of the grid");
  sweep_cmd->add_option("--t-max", f.t_max, "right end of the grid");
  sweep_cmd->add_option("--step", f.step, "grid spacing");
  sweep_cmd->add_option("--im-offset", f.im_offset, "imaginary offset eps > 0");
  sweep_cmd->add_option("--center", f.center, "grid point where the two warm-started passes begin");

  auto* sample_cmd = app.add_subcommand("sample", "Monte Carlo eigenvalue histogram");
  add_config(sample_cmd, f);
  add_threads(sample_cmd, f);
  sample_cmd->add_option("--N", f.n, "inner block size");
  sample_cmd->add_option("--trials", f.trials, "number of sampled matrices");
  sample_cmd->add_option("--seed", f.seed, "overrides OPVAL_SEED and the config");
  sample_cmd->add_option("--bins", f.bins, "histogram bins");
  sample_cmd->add_option("--profile", f.profile, "toeplitz3 | wigner");

  auto* compare_cmd = app.add_subcommand("compare", "L1 and KS distance of a curve to a histogram");
  add_config(compare_cmd, f);
  compare_cmd->add_option("curve", f.curve, "density curve CSV");
  compare_cmd->add_option("histogram", f.histogram, "histogram CSV");
  compare_cmd->add_option("--threshold", f.threshold, "pass when l1 <= threshold (default 0.05)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return kExitUsage;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  try {
    const json config = resolve(command, f);
    if (command == "solve") return cmd_solve(config, out, err);
    if (command == "sweep") return cmd_sweep(config, out, err);
    if (command == "sample") return cmd_sample(config, out, err);
    return cmd_compare(config, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const SupportMismatch& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const json::exception& e) {
    err << "error: config: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::logic_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailed;
  }
}

}  // namespace opval::cli
