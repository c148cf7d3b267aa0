#include "qst/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <Eigen/SVD>
#include <json.hpp>

#include "qst/channel.hpp"
#include "qst/dualrail.hpp"
#include "qst/endgate.hpp"
#include "qst/fidelity.hpp"
#include "qst/multirail.hpp"
#include "qst/rng.hpp"
#include "qst/spinbath.hpp"

namespace qst {

using json = nlohmann::json;

namespace {

const std::map<std::string, std::set<std::string>>& protocol_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"transfer", {}},
      {"snapshots", {"t_step"}},
      {"dualrail", {"target_failure", "window", "tol", "max_steps"}},
      {"multirail", {"m_chains", "k_excitations", "interval", "steps"}},
      {"valve", {"horizon", "interval", "steps"}},
      {"memoryswap", {"slots", "interval"}},
      {"noise", {"g", "points"}},
      {"mixing", {"example", "steps", "dim"}},
      {"disorder-table", {"delta", "c", "target_failure", "window", "max_steps"}},
      {"fit-scaling", {"window_factor"}},
      {"recurrence-scan", {}},
  };
  return keys;
}

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw ConfigError("config field '" + path + "': " + what);
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) field_error(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) field_error(path.empty() ? key : path + "." + key, "unknown key");
  }
}

double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) field_error(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) field_error(path, "must be finite");
  return x;
}

long get_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) field_error(path, "expected an integer");
  return v.get<long>();
}

std::vector<double> get_list(const json& v, const std::string& path) {
  if (!v.is_array()) field_error(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / xs.size();
}

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / (xs.size() - 1));
}

CsvTable make_table(const ExperimentConfig& cfg) {
  CsvTable t;
  t.comments.push_back(std::string("qst ") + kVersion);
  t.comments.push_back("experiment: " + cfg.experiment);
  t.comments.push_back("config: " + resolved_json(cfg));
  t.columns = csv_columns(cfg.experiment);
  return t;
}

int positive_int(const ExperimentConfig& cfg, const std::string& key, double fallback) {
  const double v = cfg.param(key, fallback);
  if (v < 1.0 || v != std::floor(v)) field_error("protocol." + key, "expected a positive integer");
  return static_cast<int>(v);
}

}  // namespace

ChainSpec ExperimentConfig::chain() const {
  if (preset == "heisenberg") return ChainSpec::heisenberg(n, j, b);
  if (preset == "xy") return ChainSpec::xy(n, j);
  if (preset == "engineered") return ChainSpec::engineered_chain(n, j);
  if (preset == "custom") return ChainSpec::custom(hops, onsite);
  field_error("chain.preset", "unknown preset '" + preset + "'");
}

double ExperimentConfig::param(const std::string& key, double fallback) const {
  const auto it = protocol.find(key);
  return it == protocol.end() ? fallback : it->second;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"transfer",   "snapshots", "dualrail",       "multirail",
                                                 "valve",      "memoryswap", "noise",         "mixing",
                                                 "disorder-table", "fit-scaling", "recurrence-scan"};
  return names;
}

ExperimentConfig default_config(const std::string& experiment) {
  if (!protocol_keys().count(experiment)) throw ConfigError("unknown experiment '" + experiment + "'");
  ExperimentConfig c;
  c.experiment = experiment;
  if (experiment == "transfer") {
    c.n = 50;
  } else if (experiment == "snapshots") {
    c.n = 50;
    c.t_max = 50.0;
  } else if (experiment == "multirail") {
    c.preset = "xy";
    c.n = 4;
  } else if (experiment == "valve") {
    c.preset = "xy";
    c.n = 20;
  } else if (experiment == "memoryswap") {
    c.preset = "xy";
    c.n = 8;
  } else if (experiment == "noise") {
    c.preset = "xy";
    c.n = 10;
    c.t_max = 40.0;
  } else if (experiment == "recurrence-scan") {
    c.preset = "xy";
    c.n = 5;
    c.t_max = 1e4;
  }
  return c;
}

ExperimentConfig parse_config(const std::string& text, const std::string& experiment_hint) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError("config parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                      e.what());
  }
  check_keys(doc, "", {"experiment", "chain", "protocol", "ensemble", "seed", "output", "grid"});

  std::string name = experiment_hint;
  if (doc.contains("experiment")) {
    if (!doc["experiment"].is_string()) field_error("experiment", "expected a string");
    const std::string given = doc["experiment"].get<std::string>();
    if (!name.empty() && given != name) field_error("experiment", "'" + given + "' does not match subcommand '" + name + "'");
    name = given;
  }
  if (name.empty()) field_error("experiment", "missing");
  if (!protocol_keys().count(name)) field_error("experiment", "unknown experiment '" + name + "'");
  ExperimentConfig cfg = default_config(name);

  if (doc.contains("chain")) {
    const json& ch = doc["chain"];
    check_keys(ch, "chain", {"preset", "n", "j", "b", "hops", "onsite"});
    if (ch.contains("preset")) {
      if (!ch["preset"].is_string()) field_error("chain.preset", "expected a string");
      cfg.preset = ch["preset"].get<std::string>();
      if (cfg.preset != "heisenberg" && cfg.preset != "xy" && cfg.preset != "engineered" && cfg.preset != "custom") {
        field_error("chain.preset", "unknown preset '" + cfg.preset + "'");
      }
    }
    if (ch.contains("n")) {
      const long n = get_integer(ch["n"], "chain.n");
      if (n < 2 || n > 4096) field_error("chain.n", "must lie in [2, 4096]");
      cfg.n = static_cast<int>(n);
    }
    if (ch.contains("j")) cfg.j = get_number(ch["j"], "chain.j");
    if (ch.contains("b")) cfg.b = get_number(ch["b"], "chain.b");
    if (ch.contains("hops")) cfg.hops = get_list(ch["hops"], "chain.hops");
    if (ch.contains("onsite")) cfg.onsite = get_list(ch["onsite"], "chain.onsite");
    if (cfg.preset == "custom") {
      if (cfg.onsite.size() < 2 || cfg.hops.size() + 1 != cfg.onsite.size()) {
        field_error("chain.hops", "custom chains need n onsite terms and n-1 hops");
      }
      cfg.n = static_cast<int>(cfg.onsite.size());
    }
  }
  if (doc.contains("protocol")) {
    const json& p = doc["protocol"];
    check_keys(p, "protocol", protocol_keys().at(name));
    for (const auto& [key, value] : p.items()) cfg.protocol[key] = get_number(value, "protocol." + key);
  }
  if (doc.contains("ensemble")) {
    check_keys(doc["ensemble"], "ensemble", {"samples"});
    if (doc["ensemble"].contains("samples")) {
      const long s = get_integer(doc["ensemble"]["samples"], "ensemble.samples");
      if (s < 1) field_error("ensemble.samples", "must be >= 1");
      cfg.samples = static_cast<int>(s);
    }
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<long>() >= 0)) {
      field_error("seed", "expected a non-negative integer");
    }
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("output")) {
    if (!doc["output"].is_string()) field_error("output", "expected a string");
    cfg.output = doc["output"].get<std::string>();
  }
  if (doc.contains("grid")) {
    check_keys(doc["grid"], "grid", {"dt", "t_max"});
    if (doc["grid"].contains("dt")) {
      cfg.dt = get_number(doc["grid"]["dt"], "grid.dt");
      if (!(cfg.dt > 0.0)) field_error("grid.dt", "must be > 0");
    }
    if (doc["grid"].contains("t_max")) {
      cfg.t_max = get_number(doc["grid"]["t_max"], "grid.t_max");
      if (!(cfg.t_max > 0.0)) field_error("grid.t_max", "must be > 0");
    }
  }
  cfg.raw = resolved_json(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::string& experiment_hint) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), experiment_hint);
}

std::string resolved_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = cfg.experiment;
  j["chain"] = {{"preset", cfg.preset}, {"n", cfg.n}, {"j", cfg.j}, {"b", cfg.b}};
  if (cfg.preset == "custom") {
    j["chain"]["hops"] = cfg.hops;
    j["chain"]["onsite"] = cfg.onsite;
  }
  j["protocol"] = json::object();
  for (const auto& [k, v] : cfg.protocol) j["protocol"][k] = v;
  j["ensemble"] = {{"samples", cfg.samples}};
  j["seed"] = cfg.seed;
  j["grid"] = {{"dt", cfg.dt}, {"t_max", cfg.t_max}};
  if (!cfg.output.empty()) j["output"] = cfg.output;
  return j.dump();
}

void write_csv(std::ostream& os, const CsvTable& table) {
  for (const auto& c : table.comments) os << "# " << c << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
  os << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw std::logic_error("write_csv: row width mismatch");
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << fmt(row[i]);
    os << '\n';
  }
}

CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  bool have_header = false;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (have_header) throw std::runtime_error("csv line " + std::to_string(lineno) + ": comment after header");
      t.comments.push_back(line.size() > 2 ? line.substr(2) : "");
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!have_header) {
      t.columns = cells;
      have_header = true;
      continue;
    }
    if (cells.size() != t.columns.size()) {
      throw std::runtime_error("csv line " + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size()) +
                               " fields");
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      double v = 0.0;
      const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (res.ec != std::errc() || res.ptr != c.data() + c.size()) {
        // from_chars does not accept "inf"/"nan" spellings from printf on every platform.
        if (c == "inf") v = INFINITY;
        else if (c == "-inf") v = -INFINITY;
        else throw std::runtime_error("csv line " + std::to_string(lineno) + ": bad number '" + c + "'");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (!have_header) throw std::runtime_error("csv: missing header line");
  return t;
}

std::vector<std::string> csv_columns(const std::string& experiment) {
  static const std::map<std::string, std::vector<std::string>> cols = {
      {"transfer", {"t", "p"}},
      {"snapshots", {"t", "site", "prob"}},
      {"dualrail", {"step", "t_cum", "p_cond", "P_cum", "bias", "phase"}},
      {"multirail", {"q", "p_cond", "P_cum", "rho_bound"}},
      {"valve", {"step", "t_cum", "p_success", "c_abs", "eta"}},
      {"memoryswap", {"step", "t_cum", "p_success", "c_abs", "eta"}},
      {"noise", {"t", "re_f", "im_f", "abs_exact", "abs_approx"}},
      {"mixing", {"step", "trace_distance", "envelope"}},
      {"disorder-table", {"index", "seed", "t", "m", "failure", "reached"}},
      {"fit-scaling", {"n", "p", "t", "m"}},
      {"recurrence-scan", {"t", "p_max"}},
  };
  const auto it = cols.find(experiment);
  if (it == cols.end()) throw ConfigError("unknown experiment '" + experiment + "'");
  return it->second;
}

FitResult fit_scaling(const std::vector<ScalingPoint>& points) {
  std::set<int> lengths;
  for (const auto& p : points) {
    if (p.n < 2 || !(p.p > 0.0 && p.p < 1.0) || !(p.t > 0.0)) {
      throw std::invalid_argument("fit_scaling: need N >= 2, 0 < P < 1, t > 0");
    }
    lengths.insert(p.n);
  }
  if (points.size() < 6 || lengths.size() < 3) {
    throw std::invalid_argument("fit_scaling: need >= 6 points spanning >= 3 chain lengths");
  }
  Eigen::MatrixXd a(points.size(), 2);
  Eigen::VectorXd y(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = std::log(double(points[i].n));
    y(i) = std::log(points[i].t) - std::log(std::abs(std::log(points[i].p)));
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues().minCoeff() < 1e-12 * svd.singularValues().maxCoeff()) {
    throw std::invalid_argument("fit_scaling: degenerate design matrix");
  }
  const Eigen::VectorXd coef = svd.solve(y);
  FitResult r;
  r.a = std::exp(coef(0));
  r.b = coef(1);
  r.residual_rms = std::sqrt((a * coef - y).squaredNorm() / points.size());
  r.n_min = *lengths.begin();
  r.n_max = *lengths.rbegin();
  r.points = points.size();
  return r;
}

DisorderStats disorder_table(const DisorderOptions& opt) {
  if (opt.samples < 1) throw std::invalid_argument("disorder_table: samples must be >= 1");
  if (opt.n < 2) throw std::invalid_argument("disorder_table: n must be >= 2");
  DisorderStats st;
  st.runs.resize(opt.samples);
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto worker = [&] {
    for (int i = next++; i < opt.samples; i = next++) {
      try {
        Realization r;
        r.seed = derive_seed(opt.seed, static_cast<std::uint64_t>(i));
        Rng rng(r.seed);
        const auto h1 = sample_disorder(opt.j, opt.delta, opt.c, opt.n - 1, rng);
        const auto h2 = sample_disorder(opt.j, opt.delta, opt.c, opt.n - 1, rng);
        const DualRailSystem sys(eigensystem(build_sector(ChainSpec::heisenberg_bonds(h1))),
                                 eigensystem(build_sector(ChainSpec::heisenberg_bonds(h2))));
        OptimizeOptions o;
        o.target_failure = opt.target_failure;
        o.window = opt.window > 0.0 ? opt.window : opt.n / std::abs(opt.j);
        o.max_steps = opt.max_steps;
        const auto res = optimize_schedule(sys, o);
        r.t = res.trace.total_time;
        r.m = res.trace.steps_used();
        r.failure = res.trace.final_failure;
        r.reached = res.trace.reached_target;
        st.runs[i] = r;
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  const int nw = std::clamp(opt.workers, 1, opt.samples);
  std::vector<std::thread> pool;
  for (int w = 1; w < nw; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);

  std::vector<double> ts, ms;
  for (const auto& r : st.runs) {
    if (r.reached) {
      ts.push_back(r.t);
      ms.push_back(r.m);
    } else {
      ++st.unreached;
    }
  }
  st.mean_t = mean_of(ts);
  st.std_t = sample_std(ts);
  st.mean_m = mean_of(ms);
  st.std_m = sample_std(ms);
  return st;
}

Realization clean_dual_rail(int n, double target_failure, double window) {
  const Eigensystem e = eigensystem(build_sector(ChainSpec::heisenberg(n)));
  const DualRailSystem sys(e, e);
  OptimizeOptions o;
  o.target_failure = target_failure;
  o.window = window > 0.0 ? window : double(n);
  const auto res = optimize_schedule(sys, o);
  Realization r;
  r.t = res.trace.total_time;
  r.m = res.trace.steps_used();
  r.failure = res.trace.final_failure;
  r.reached = res.trace.reached_target;
  return r;
}

RunResult run_experiment(const ExperimentConfig& cfg, int workers) {
  RunResult out;
  out.table = make_table(cfg);
  auto& rows = out.table.rows;
  const std::string& ex = cfg.experiment;

  if (ex == "mixing") {
    const int which = static_cast<int>(cfg.param("example", 1));
    const int steps = positive_int(cfg, "steps", 50);
    Rng rng(cfg.seed);
    const QuantumChannel ch = which == 0   ? fixtures::ergodic_example()
                              : which == 1 ? fixtures::mixing_example()
                                           : random_channel_pure_fixed_point(positive_int(cfg, "dim", 3), 2, rng);
    const Classification cl = classify(ch);
    out.table.comments.push_back("ergodic: " + std::string(cl.ergodic ? "true" : "false") +
                                 ", mixing: " + (cl.mixing ? "true" : "false") + ", kappa: " + fmt(cl.kappa));
    if (!cl.mixing) {
      out.message = "channel is not mixing; no trajectory";
      return out;
    }
    DensityMatrix rho0 = MatrixXcd::Zero(ch.dim(), ch.dim());
    rho0(ch.dim() - 1, ch.dim() - 1) = 1.0;
    const auto d1 = iterate(ch, rho0, steps);
    for (std::size_t k = 0; k < d1.size(); ++k) {
      rows.push_back({double(k), d1[k], std::pow(double(k), ch.dim()) * std::pow(cl.kappa, double(k))});
    }
    return out;
  }
  if (ex == "disorder-table") {
    DisorderOptions o;
    o.n = cfg.n;
    o.j = cfg.j;
    o.delta = cfg.param("delta", 0.05);
    o.c = cfg.param("c", 0.5);
    o.samples = cfg.samples;
    o.target_failure = cfg.param("target_failure", 0.01);
    o.window = cfg.param("window", 0.0);
    o.max_steps = positive_int(cfg, "max_steps", 2000);
    o.seed = cfg.seed;
    o.workers = workers;
    const DisorderStats st = disorder_table(o);
    for (std::size_t i = 0; i < st.runs.size(); ++i) {
      const auto& r = st.runs[i];
      rows.push_back({double(i), double(r.seed), r.t, double(r.m), r.failure, r.reached ? 1.0 : 0.0});
    }
    out.table.comments.push_back("mean_t: " + fmt(st.mean_t) + ", std_t: " + fmt(st.std_t) + ", mean_m: " +
                                 fmt(st.mean_m) + ", std_m: " + fmt(st.std_m) + ", unreached: " +
                                 std::to_string(st.unreached));
    if (st.unreached > 0) {
      out.exit_code = 3;
      out.message = std::to_string(st.unreached) + " realization(s) did not reach the target";
    }
    return out;
  }
  if (ex == "fit-scaling") {
    const std::vector<int> lengths = {10, 15, 20, 30, 40};
    const std::vector<double> targets = {0.1, 0.01};
    std::vector<ScalingPoint> pts;
    for (int n : lengths) {
      for (double p : targets) {
        const Realization r = clean_dual_rail(n, p, cfg.param("window_factor", 1.0) * n);
        rows.push_back({double(n), p, r.t, double(r.m)});
        if (!r.reached) out.exit_code = 3;
        pts.push_back({n, p, r.t});
      }
    }
    const FitResult f = fit_scaling(pts);
    out.table.comments.push_back("fit: a = " + fmt(f.a) + ", b = " + fmt(f.b) + ", residual_rms = " + fmt(f.residual_rms));
    if (out.exit_code == 3) out.message = "some runs did not reach the target";
    return out;
  }

  const ChainSpec spec = cfg.chain();
  const Eigensystem eig = eigensystem(build_sector(spec));
  const double dt = cfg.dt > 0.0 ? cfg.dt : default_dt(eig, std::abs(cfg.j));

  if (ex == "transfer") {
    const double t_max = cfg.t_max > 0.0 ? cfg.t_max : 2.0 * cfg.n / std::abs(cfg.j);
    const auto steps = static_cast<long>(std::floor(t_max / dt));
    for (long i = 0; i <= steps; ++i) rows.push_back({i * dt, min_fidelity(eig, i * dt)});
  } else if (ex == "snapshots") {
    const double t_max = cfg.t_max > 0.0 ? cfg.t_max : double(cfg.n);
    const double t_step = cfg.param("t_step", t_max / 5.0);
    if (!(t_step > 0.0)) field_error("protocol.t_step", "must be > 0");
    const VectorXcd init = basis_state(eig.dim(), 1);
    for (double t = 0.0; t <= t_max + 1e-9; t += t_step) {
      const VectorXcd v = propagate(eig, init, t);
      for (int s = 0; s < eig.dim(); ++s) rows.push_back({t, double(s + 1), std::norm(v(s))});
    }
  } else if (ex == "dualrail") {
    const DualRailSystem sys(eig, eig);
    OptimizeOptions o;
    o.target_failure = cfg.param("target_failure", 0.01);
    o.window = cfg.param("window", cfg.n / std::abs(cfg.j));
    o.tol = cfg.param("tol", 1e-6);
    o.max_steps = positive_int(cfg, "max_steps", 2000);
    o.dt = cfg.dt;
    const auto res = optimize_schedule(sys, o);
    for (const auto& s : res.trace.steps) rows.push_back({double(s.step), s.t_cum, s.p_cond, s.failure, s.bias, s.phase});
    if (!res.trace.reached_target) {
      out.exit_code = 3;
      out.message = "target failure not reached; best " + fmt(res.trace.final_failure);
    }
  } else if (ex == "multirail") {
    MultiRailConfig mc;
    mc.m_chains = positive_int(cfg, "m_chains", 4);
    mc.k_excitations = positive_int(cfg, "k_excitations", 2);
    mc.chain = eig;
    const double interval = cfg.param("interval", 1.0 / std::abs(cfg.j));
    const int steps = positive_int(cfg, "steps", 50);
    const auto trace = simulate_multirail(mc, std::vector<double>(steps, interval));
    for (const auto& s : trace.steps) rows.push_back({double(s.q), s.p_cond, s.p_cum, s.rho_bound});
  } else if (ex == "valve") {
    const double interval = cfg.param("interval", 0.0);
    const ValveTrace tr = interval > 0.0
                              ? valve_protocol(eig, std::vector<double>(positive_int(cfg, "steps", 50), interval))
                              : valve_optimize(eig, cfg.param("horizon", 4.0 * cfg.n / std::abs(cfg.j)), dt);
    for (const auto& s : tr.steps) rows.push_back({double(s.step), s.t_cum, s.p_success, s.c_abs, s.eta});
  } else if (ex == "memoryswap") {
    const MemoryReadResult r =
        memory_read(eig, positive_int(cfg, "slots", 40), cfg.param("interval", 1.0 / std::abs(cfg.j)));
    for (const auto& s : r.steps) rows.push_back({double(s.step), s.t_cum, s.p_success, s.c_abs, s.eta});
  } else if (ex == "noise") {
    const double g = cfg.param("g", 4.0);
    if (!(g >= 0.0)) field_error("protocol.g", "must be >= 0");
    const int points = positive_int(cfg, "points", 4000);
    const double t_max = cfg.t_max > 0.0 ? cfg.t_max : 40.0;
    for (int i = 0; i < points; ++i) {
      const double t = t_max * i / (points - 1 > 0 ? points - 1 : 1);
      const cplx f = noisy_transfer(eig, g, t);
      rows.push_back({t, f.real(), f.imag(), std::abs(f), std::abs(strong_coupling_approx(eig, g, t))});
    }
  } else if (ex == "recurrence-scan") {
    const double t_max = cfg.t_max > 0.0 ? cfg.t_max : 1e4;
    for (const auto& p : long_time_recurrence_scan(eig, t_max, dt)) rows.push_back({p.t, p.p_max});
  } else {
    throw ConfigError("unknown experiment '" + ex + "'");
  }
  return out;
}

}  // namespace qst
