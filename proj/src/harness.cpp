#include "enda/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "enda/errors.hpp"
#include "enda/rng.hpp"

namespace enda::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("invalid number for '" + key + "': " + v);
  }
  if (pos != v.size()) {
    throw ConfigError("invalid number for '" + key + "': " + v);
  }
  return out;
}

int parse_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long out;
  try {
    out = std::stol(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("invalid integer for '" + key + "': " + v);
  }
  if (pos != v.size()) {
    throw ConfigError("invalid integer for '" + key + "': " + v);
  }
  return static_cast<int>(out);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  std::uint64_t out;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("invalid seed for '" + key + "': " + v);
  }
  if (pos != v.size()) {
    throw ConfigError("invalid seed for '" + key + "': " + v);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("invalid boolean for '" + key + "': " + v);
}

filter::Variant parse_variant(const std::string& v) {
  if (v == "vanilla") return filter::Variant::vanilla;
  if (v == "cg") return filter::Variant::cg;
  if (v == "ns") return filter::Variant::ns;
  throw ConfigError("unknown filter variant '" + v +
                    "' (expected vanilla, cg, or ns)");
}

void apply_key(ParsedConfig& pc, const std::string& section,
               const std::string& key, const std::string& value) {
  ExperimentConfig& cfg = pc.config;
  const std::string full = section.empty() ? key : section + "." + key;

  if (section.empty()) {
    if (key == "seed") {
      cfg.seed = parse_u64(full, value);
      return;
    }
    throw ConfigError("unknown top-level key '" + key + "'");
  }

  if (section == "system") {
    if (key == "dimension") cfg.dimension = parse_int(full, value);
    else if (key == "forcing") cfg.forcing = parse_double(full, value);
    else if (key == "dt") cfg.dt = parse_double(full, value);
    else if (key == "spin_up_seconds") cfg.spin_up_seconds = parse_double(full, value);
    else if (key == "n_cycles") cfg.n_cycles = parse_int(full, value);
    else throw ConfigError("unknown key '" + full + "'");
    return;
  }

  if (section == "observation") {
    auto& noise = cfg.observation.noise;
    if (key == "map") {
      if (value == "linear") cfg.observation.map = observation::ObservationMap::linear_identity;
      else if (value == "cubic") cfg.observation.map = observation::ObservationMap::cubic;
      else throw ConfigError("unknown observation map '" + value + "'");
    } else if (key == "noise") {
      if (value == "gaussian") noise.kind = observation::NoiseKind::gaussian;
      else if (value == "exponential") noise.kind = observation::NoiseKind::exponential;
      else if (value == "bimodal") noise.kind = observation::NoiseKind::bimodal;
      else if (value == "pareto") noise.kind = observation::NoiseKind::generalized_pareto;
      else if (value == "none") noise.kind = observation::NoiseKind::none;
      else throw ConfigError("unknown noise kind '" + value + "'");
    } else if (key == "noise_mean") noise.mean = parse_double(full, value);
    else if (key == "noise_std") noise.std = parse_double(full, value);
    else if (key == "exp_mean") noise.exp_mean = parse_double(full, value);
    else if (key == "mode_offset") noise.mode_offset = parse_double(full, value);
    else if (key == "component_std") noise.component_std = parse_double(full, value);
    else if (key == "pareto_shape") noise.shape = parse_double(full, value);
    else if (key == "pareto_scale") noise.scale = parse_double(full, value);
    else if (key == "pareto_location") noise.location = parse_double(full, value);
    else throw ConfigError("unknown key '" + full + "'");
    return;
  }

  if (section == "filter") {
    auto& f = cfg.filter;
    if (key == "variant") {
      f.variant = parse_variant(value);
      pc.variant_set = true;
    } else if (key == "ensemble_size") f.ensemble_size = parse_int(full, value);
    else if (key == "inflation") {
      f.inflation = parse_double(full, value);
      pc.inflation_set = true;
    } else if (key == "localization_radius") f.localization_radius = parse_double(full, value);
    else if (key == "obs_noise_var") {
      f.obs_noise_var = parse_double(full, value);
      pc.obs_noise_var_set = true;
    } else if (key == "jitter") f.jitter = parse_double(full, value);
    else if (key == "allow_misspecified") f.allow_misspecified = parse_bool(full, value);
    else if (key == "assimilation_interval") f.assimilation_interval = parse_int(full, value);
    else if (key == "initial_offset") cfg.initial_offset = parse_double(full, value);
    else if (key == "initial_spread") cfg.initial_spread = parse_double(full, value);
    else throw ConfigError("unknown key '" + full + "'");
    return;
  }

  if (section == "output") {
    if (key == "csv_path") cfg.csv_path = value;
    else if (key == "summary_path") cfg.summary_path = value;
    else if (key == "window_begin") cfg.window_begin = parse_int(full, value);
    else if (key == "window_end") cfg.window_end = parse_int(full, value);
    else throw ConfigError("unknown key '" + full + "'");
    return;
  }

  throw ConfigError("unknown section '[" + section + "]'");
}

}  // namespace

ParsedConfig parse_config(const std::string& text) {
  ParsedConfig pc;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError("malformed section header at line " +
                          std::to_string(line_no) + ": " + line);
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value' at line " +
                        std::to_string(line_no) + ": " + line);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("expected 'key = value' at line " +
                        std::to_string(line_no) + ": " + line);
    }
    apply_key(pc, section, key, value);
  }
  return pc;
}

ParsedConfig preset(const std::string& name) {
  ParsedConfig pc;
  ExperimentConfig& cfg = pc.config;
  cfg.preset_name = name;
  using observation::NoiseDistribution;
  using observation::ObservationMap;

  if (name == "cubic-sf-comparison" || name == "linear-sf-comparison") {
    cfg.n_cycles = 100;
    cfg.observation.map = name == "cubic-sf-comparison"
                              ? ObservationMap::cubic
                              : ObservationMap::linear_identity;
    cfg.observation.noise = NoiseDistribution::gaussian(0.0, 1.0);
    cfg.filter.inflation = 1.05;  // both filters used 1.05 in this experiment
    pc.inflation_set = true;
    return pc;
  }

  const auto long_run = [&cfg] {
    cfg.n_cycles = 5500;
    cfg.observation.map = ObservationMap::linear_identity;
    cfg.observation.noise = NoiseDistribution::gaussian(0.0, 1.0);
  };
  if (name == "long-run" || name == "linear-long") {
    long_run();
    return pc;
  }
  if (name == "exponential-long") {
    long_run();
    cfg.observation.noise = NoiseDistribution::exponential(1.0);
    return pc;
  }
  if (name == "bimodal-long") {
    long_run();
    cfg.observation.noise = NoiseDistribution::bimodal(5.0, 1.0);
    cfg.filter.inflation = 1.0;  // every variant ran uninflated here
    pc.inflation_set = true;
    return pc;
  }
  if (name == "cubic-long") {
    long_run();
    cfg.observation.map = ObservationMap::cubic;
    return pc;
  }
  if (name == "pareto-long") {
    long_run();
    cfg.observation.noise = NoiseDistribution::generalized_pareto(0.5, 1.0, 2.0);
    return pc;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
  return {"cubic-sf-comparison", "linear-sf-comparison", "long-run",
          "linear-long",         "exponential-long",     "bimodal-long",
          "cubic-long",          "pareto-long"};
}

ExperimentConfig finalize(const ParsedConfig& parsed) {
  ExperimentConfig cfg = parsed.config;
  using observation::NoiseKind;
  using observation::ObservationMap;

  if (!parsed.variant_set) {
    throw ConfigError("filter.variant is required (vanilla, cg, or ns)");
  }
  if (!parsed.inflation_set) {
    cfg.filter.inflation = cfg.filter.variant == filter::Variant::ns ? 1.05 : 1.0;
  }
  if (!parsed.obs_noise_var_set) {
    cfg.filter.obs_noise_var =
        cfg.observation.noise.kind == NoiseKind::gaussian &&
                cfg.observation.noise.std > 0.0
            ? cfg.observation.noise.std * cfg.observation.noise.std
            : 1.0;
  }

  if (cfg.dimension < 4) throw ConfigError("system.dimension must be >= 4");
  if (!std::isfinite(cfg.forcing)) throw ConfigError("system.forcing must be finite");
  if (!(cfg.dt > 0.0)) throw ConfigError("system.dt must be > 0");
  if (cfg.spin_up_seconds < 0.0) throw ConfigError("system.spin_up_seconds must be >= 0");
  if (cfg.n_cycles < 1) throw ConfigError("system.n_cycles must be >= 1");

  const auto& noise = cfg.observation.noise;
  switch (noise.kind) {
    case NoiseKind::none:
      break;
    case NoiseKind::gaussian:
      if (!(noise.std >= 0.0)) throw ConfigError("observation.noise_std must be >= 0");
      break;
    case NoiseKind::exponential:
      if (!(noise.exp_mean > 0.0)) throw ConfigError("observation.exp_mean must be > 0");
      break;
    case NoiseKind::bimodal:
      if (!(noise.component_std > 0.0)) throw ConfigError("observation.component_std must be > 0");
      break;
    case NoiseKind::generalized_pareto:
      if (!(noise.shape > 0.0) || !(noise.scale > 0.0)) {
        throw ConfigError("observation.pareto_shape and pareto_scale must be > 0");
      }
      break;
  }

  auto& f = cfg.filter;
  if (f.ensemble_size < 2) throw ConfigError("filter.ensemble_size must be >= 2");
  if (!(f.inflation >= 1.0)) throw ConfigError("filter.inflation must be >= 1");
  if (!(f.localization_radius > 0.0)) throw ConfigError("filter.localization_radius must be > 0");
  if (!(f.jitter >= 0.0)) throw ConfigError("filter.jitter must be >= 0");
  if (f.assimilation_interval < 1) throw ConfigError("filter.assimilation_interval must be >= 1");
  if (!(cfg.initial_spread >= 0.0)) throw ConfigError("filter.initial_spread must be >= 0");

  if (f.variant == filter::Variant::vanilla) {
    if (!(f.obs_noise_var > 0.0)) {
      throw ConfigError("filter.obs_noise_var must be > 0 for the vanilla variant");
    }
    const bool linear_gaussian =
        cfg.observation.map == ObservationMap::linear_identity &&
        (noise.kind == NoiseKind::gaussian || noise.kind == NoiseKind::none);
    if (!linear_gaussian && !f.allow_misspecified) {
      throw ConfigError(
          "the vanilla variant assumes linear-identity observations with "
          "Gaussian noise; pass --allow-misspecified to run it anyway");
    }
  }

  if (cfg.window_begin < 1) throw ConfigError("output.window_begin must be >= 1");
  if (cfg.window_end == 0) cfg.window_end = cfg.n_cycles;
  if (cfg.window_end < cfg.window_begin || cfg.window_end > cfg.n_cycles) {
    throw ConfigError("output window must satisfy 1 <= begin <= end <= n_cycles");
  }
  return cfg;
}

model::Trajectory make_truth(const ExperimentConfig& cfg) {
  // Conventional chaotic initialization: the constant-forcing fixed point
  // nudged in the first dimension, then the spin-up.
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(cfg.dimension, cfg.forcing);
  x0[0] += 0.01;
  const long spin_steps = std::lround(cfg.spin_up_seconds / cfg.dt);
  for (long s = 0; s < spin_steps; ++s) {
    x0 = model::rk4_step(x0, cfg.dt, cfg.forcing);
  }
  const double t0 = double(spin_steps) * cfg.dt;
  return model::generate_truth(x0, cfg.dt, cfg.n_cycles, cfg.forcing, t0);
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  RunReport report;
  report.config = cfg;

  const auto start = std::chrono::steady_clock::now();

  const model::Trajectory truth = make_truth(cfg);

  RngStream init_rng(cfg.seed, RngStreamId::initial_ensemble);
  Eigen::MatrixXd ens(cfg.dimension, cfg.filter.ensemble_size);
  const Eigen::VectorXd& start_state = truth.states.front();
  for (int j = 0; j < cfg.filter.ensemble_size; ++j) {
    for (int i = 0; i < cfg.dimension; ++i) {
      ens(i, j) = start_state[i] + cfg.initial_offset +
                  cfg.initial_spread * init_rng.standard_normal();
    }
  }

  RngStream truth_obs(cfg.seed, RngStreamId::truth_observations);
  RngStream member_obs(cfg.seed, RngStreamId::member_observations);
  filter::FilterResult res = filter::run_filter(
      truth, cfg.filter, cfg.observation, ens, cfg.forcing, truth_obs,
      member_obs);

  report.metrics = std::move(res.metrics);
  if (res.status == filter::RunStatus::diverged) {
    report.status = RunOutcome::diverged;
    report.diverged_cycle = res.diverged_cycle.value();
  }

  // Summary over the configured window, clamped to the recorded cycles.
  const std::size_t recorded = report.metrics.cycles.size();
  const std::size_t begin = std::min<std::size_t>(cfg.window_begin - 1, recorded);
  const std::size_t end = std::min<std::size_t>(cfg.window_end, recorded);
  if (begin < end) {
    report.metrics.summary = metrics::summarize(report.metrics.cycles, begin, end);
  }

  const auto stop = std::chrono::steady_clock::now();
  report.metrics.wallclock_seconds =
      std::chrono::duration<double>(stop - start).count();
  return report;
}

void emit_csv(const RunReport& report, std::ostream& out) {
  out << "cycle,time,frmse,armse,fcrps,acrps\n";
  char buf[160];
  for (const auto& c : report.metrics.cycles) {
    std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                  c.cycle, c.time, c.frmse, c.armse, c.fcrps, c.acrps);
    out << buf;
  }
}

void emit_csv(const RunReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  emit_csv(report, out);
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

std::string variant_name(filter::Variant v) {
  switch (v) {
    case filter::Variant::vanilla: return "V-EnKF";
    case filter::Variant::cg: return "CG-EnKF";
    case filter::Variant::ns: return "NS-EnKF";
  }
  return "?";
}

std::string observation_name(const observation::ObservationModel& m) {
  using observation::NoiseKind;
  using observation::ObservationMap;
  std::string noise;
  switch (m.noise.kind) {
    case NoiseKind::none: noise = "noiseless"; break;
    case NoiseKind::gaussian: noise = "gaussian"; break;
    case NoiseKind::exponential: noise = "exponential"; break;
    case NoiseKind::bimodal: noise = "bimodal"; break;
    case NoiseKind::generalized_pareto: noise = "pareto"; break;
  }
  if (m.map == ObservationMap::cubic) {
    return m.noise.kind == NoiseKind::gaussian ? "cubic" : "cubic+" + noise;
  }
  return m.noise.kind == NoiseKind::gaussian ? "linear" : noise;
}

namespace {

int observation_order(const observation::ObservationModel& m) {
  const std::string name = observation_name(m);
  if (name == "linear") return 0;
  if (name == "exponential") return 1;
  if (name == "bimodal") return 2;
  if (name == "cubic") return 3;
  if (name == "pareto") return 4;
  return 5;
}

int variant_order(filter::Variant v) {
  switch (v) {
    case filter::Variant::cg: return 0;
    case filter::Variant::ns: return 1;
    case filter::Variant::vanilla: return 2;
  }
  return 3;
}

std::vector<const RunReport*> sorted_reports(
    const std::vector<RunReport>& reports) {
  std::vector<const RunReport*> ptrs;
  ptrs.reserve(reports.size());
  for (const auto& r : reports) ptrs.push_back(&r);
  std::stable_sort(ptrs.begin(), ptrs.end(),
                   [](const RunReport* a, const RunReport* b) {
                     const int oa = observation_order(a->config.observation);
                     const int ob = observation_order(b->config.observation);
                     if (oa != ob) return oa < ob;
                     return variant_order(a->config.filter.variant) <
                            variant_order(b->config.filter.variant);
                   });
  return ptrs;
}

std::string metric_cell(const RunReport& r, double value) {
  char buf[48];
  if (r.status == RunOutcome::diverged) {
    std::snprintf(buf, sizeof buf, "diverged@%d", r.diverged_cycle);
  } else {
    std::snprintf(buf, sizeof buf, "%.4f", value);
  }
  return buf;
}

}  // namespace

std::string summary_table(const std::vector<RunReport>& reports) {
  if (reports.empty()) {
    throw std::invalid_argument("summary_table: no reports");
  }
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-13s %-9s %11s %11s %11s %11s %10s %10s\n",
                "Observation", "Experiment", "Mean FCRPS", "Mean ACRPS",
                "FRMSE", "ARMSE", "Inflation", "Time (s)");
  out << buf;
  for (const RunReport* r : sorted_reports(reports)) {
    const auto& s = r->metrics.summary;
    std::snprintf(buf, sizeof buf, "%-13s %-9s %11s %11s %11s %11s %10.2f %10.3f\n",
                  observation_name(r->config.observation).c_str(),
                  variant_name(r->config.filter.variant).c_str(),
                  metric_cell(*r, s.mean_fcrps).c_str(),
                  metric_cell(*r, s.mean_acrps).c_str(),
                  metric_cell(*r, s.mean_frmse).c_str(),
                  metric_cell(*r, s.mean_armse).c_str(),
                  r->config.filter.inflation,
                  r->metrics.wallclock_seconds);
    out << buf;
  }
  return out.str();
}

std::string summary_csv(const std::vector<RunReport>& reports) {
  if (reports.empty()) {
    throw std::invalid_argument("summary_csv: no reports");
  }
  std::ostringstream out;
  out << "observation,variant,inflation,mean_fcrps,mean_acrps,frmse,armse,"
         "time_s,status\n";
  char buf[320];
  for (const RunReport* r : sorted_reports(reports)) {
    const auto& s = r->metrics.summary;
    std::string status = "completed";
    if (r->status == RunOutcome::diverged) {
      status = "diverged@" + std::to_string(r->diverged_cycle);
    }
    std::snprintf(buf, sizeof buf,
                  "%s,%s,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%s\n",
                  observation_name(r->config.observation).c_str(),
                  variant_name(r->config.filter.variant).c_str(),
                  r->config.filter.inflation, s.mean_fcrps, s.mean_acrps,
                  s.mean_frmse, s.mean_armse, r->metrics.wallclock_seconds,
                  status.c_str());
    out << buf;
  }
  return out.str();
}

void emit_summary(const std::vector<RunReport>& reports,
                  const std::string& table_path, const std::string& csv_path) {
  {
    std::ofstream out(table_path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + table_path);
    out << summary_table(reports);
    out.flush();
    if (!out) throw IoError("write failed: " + table_path);
  }
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + csv_path);
    out << summary_csv(reports);
    out.flush();
    if (!out) throw IoError("write failed: " + csv_path);
  }
}

void emit_trajectory_csv(const model::Trajectory& traj, std::ostream& out) {
  const Eigen::Index d = traj.states.empty() ? 0 : traj.states.front().size();
  out << "time";
  for (Eigen::Index i = 1; i <= d; ++i) out << ",x" << i;
  out << "\n";
  char buf[40];
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.12g", traj.times[k]);
    out << buf;
    for (Eigen::Index i = 0; i < d; ++i) {
      std::snprintf(buf, sizeof buf, ",%.12g", traj.states[k][i]);
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace enda::harness
