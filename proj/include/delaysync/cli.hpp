#pragma once

// Command implementations behind the `delaysync` executable. Each returns
// a process exit code; see ExitCode.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "delaysync/errors.hpp"
#include "delaysync/graph.hpp"
#include "delaysync/io.hpp"
#include "delaysync/parallel.hpp"
#include "delaysync/plant.hpp"
#include "delaysync/sim.hpp"
#include "delaysync/verify.hpp"

namespace delaysync::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,           // bad flags, unreadable or malformed files
  kInfeasible = 2,      // y_r outside the attainable set
  kModelAssumption = 3, // weak instability / stabilizability / detectability
  kNotConverged = 4,    // simulation or sweep did not meet thresholds
  kUnrooted = 5,        // some agent unreachable from the root set
  kDiverged = 6,        // non-finite state during simulation
  kVerifyFailed = 7,    // a stability scan failed
};

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 digest failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return os.str();
}

/// Rank tolerance, overridable through DELAYSYNC_TOLERANCE.
inline Tolerances tolerances_from_env() {
  Tolerances tol;
  if (const char* env = std::getenv("DELAYSYNC_TOLERANCE"); env && *env) {
    char* end = nullptr;
    const double eps = std::strtod(env, &end);
    if (end == env || *end != '\0') {
      throw ConfigError(std::string("DELAYSYNC_TOLERANCE is not a number: ") + env);
    }
    tol.rank = RankTolerance(eps);
  }
  return tol;
}

inline std::string utc_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde && *sde) {
    t = static_cast<std::time_t>(std::strtoll(sde, nullptr, 10));
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// Records what went in and what came out of one command invocation.
class RunManifest {
 public:
  explicit RunManifest(std::string command) : command_(std::move(command)) {}

  void add_input(const std::string& path) {
    inputs_.push_back({{"path", path}, {"sha256", sha256_hex(io::read_text(path))}});
  }
  void add_output(const std::string& name, const std::string& contents) {
    outputs_.push_back({{"path", name}, {"sha256", sha256_hex(contents)}});
  }
  void set(const std::string& key, io::json value) { extra_[key] = std::move(value); }

  io::json to_json(const Tolerances& tol) const {
    io::json j = {{"tool", "delaysync"},
                  {"version", kVersion},
                  {"command", command_},
                  {"inputs", inputs_},
                  {"outputs", outputs_},
                  {"tolerances", io::tolerances_to_json(tol)},
                  {"timestamp", utc_timestamp()}};
    for (auto& [k, v] : extra_.items()) j[k] = v;
    return j;
  }

 private:
  std::string command_;
  io::json inputs_ = io::json::array();
  io::json outputs_ = io::json::array();
  io::json extra_ = io::json::object();
};

namespace internal {

inline std::filesystem::path prepare_out_dir(const std::string& dir) {
  std::filesystem::path p(dir.empty() ? "." : dir);
  std::filesystem::create_directories(p);
  return p;
}

// Writes a file into the output directory and registers it in the manifest.
inline void emit(const std::filesystem::path& dir, const std::string& name,
                 const std::string& contents, RunManifest& manifest) {
  io::write_text((dir / name).string(), contents);
  manifest.add_output(name, contents);
}

inline void finish(const std::filesystem::path& dir, const RunManifest& manifest,
                   const Tolerances& tol) {
  io::write_text((dir / "manifest.json").string(), manifest.to_json(tol).dump(2) + "\n");
}

// SplitMix64 finalizer; derives independent per-trial seeds.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace internal

/// Parses "5" or "1,1" or "[1, 1]".
inline Vec parse_vector(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (c != '[' && c != ']' && c != ' ') s += c;
  }
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    char* end = nullptr;
    const double x = std::strtod(tok.c_str(), &end);
    if (tok.empty() || *end != '\0' || !std::isfinite(x)) {
      throw ConfigError("not a numeric vector: '" + text + "'");
    }
    vals.push_back(x);
  }
  if (vals.empty()) throw ConfigError("empty vector: '" + text + "'");
  return Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

inline std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> vals;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    char* end = nullptr;
    const long x = std::strtol(tok.c_str(), &end, 10);
    if (tok.empty() || *end != '\0' || x < 0) {
      throw ConfigError("not a list of nonnegative integers: '" + text + "'");
    }
    vals.push_back(static_cast<int>(x));
  }
  return vals;
}

// ---------------------------------------------------------------------------

struct SynthesizeOptions {
  std::string model_path;
  std::string yr;
  std::string out_dir = ".";
};

inline int cmd_synthesize(const SynthesizeOptions& opt, std::ostream& out,
                          std::ostream& err) {
  try {
    const Tolerances tol = tolerances_from_env();
    const AgentModel model = io::model_from_json(io::parse_file(opt.model_path));
    const Vec y_r = parse_vector(opt.yr);
    const SynthesisResult s = synthesize(model, y_r, tol);
    const auto dir = internal::prepare_out_dir(opt.out_dir);
    RunManifest manifest("synthesize");
    manifest.add_input(opt.model_path);
    manifest.set("y_r", io::to_json(y_r));
    internal::emit(dir, "protocol.json", io::protocol_to_json(s).dump(2) + "\n", manifest);
    internal::finish(dir, manifest, tol);
    out << "synthesized protocol: n=" << s.n() << " m=" << s.m() << " p=" << s.p()
        << " v=" << s.v() << " q=" << s.reg.R.cols()
        << " rho(Abar-BbarK)=" << s.checks.radii.controller
        << " rho(Abar-FCbar)=" << s.checks.radii.observer << "\n";
    return kOk;
  } catch (const InfeasibleReferenceError& e) {
    err << "infeasible reference: " << e.what() << "\n";
    return kInfeasible;
  } catch (const ModelAssumptionError& e) {
    err << "model assumption failed [" << e.check() << "]: " << e.what() << "\n";
    return kModelAssumption;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

struct SimulateOptions {
  std::string protocol_path;
  std::string graph_path;
  long steps = 5000;
  std::uint64_t seed = 2022;
  std::string out_dir = ".";
  bool plot = false;
  std::string prefill = "hold";
  long stride = 1;
  double eps_sync = 1e-2;
  double eps_reg = 1e-2;
};

inline Prefill parse_prefill(const std::string& s) {
  if (s == "hold") return Prefill::kHoldInitial;
  if (s == "zero") return Prefill::kZero;
  throw ConfigError("prefill must be 'hold' or 'zero'");
}

inline int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const Tolerances tol = tolerances_from_env();
    const SynthesisResult synth = io::protocol_from_json(io::parse_file(opt.protocol_path));
    const NetworkSpec net = io::network_from_json(io::parse_file(opt.graph_path));
    for (const auto& w : net.warnings) err << "warning: " << w << "\n";
    SimConfig cfg;
    cfg.steps = opt.steps;
    cfg.seed = opt.seed;
    cfg.prefill = parse_prefill(opt.prefill);
    cfg.record_stride = opt.stride;
    cfg.eps_sync = opt.eps_sync;
    cfg.eps_reg = opt.eps_reg;
    SimState state = init(synth, net, cfg);
    const Trajectory traj = run(state, cfg);

    const auto dir = internal::prepare_out_dir(opt.out_dir);
    RunManifest manifest("simulate");
    manifest.add_input(opt.protocol_path);
    manifest.add_input(opt.graph_path);
    manifest.set("seed", opt.seed);
    manifest.set("steps", opt.steps);
    manifest.set("prefill", opt.prefill);
    internal::emit(dir, "traj.csv",
                   io::trajectory_csv(traj, synth.n(), synth.v(), synth.p()), manifest);
    if (opt.plot) internal::emit(dir, "plot.svg", io::trajectory_svg(traj), manifest);
    internal::finish(dir, manifest, tol);

    out << "converged=" << (traj.converged ? "yes" : "no")
        << " convergence_tick=" << traj.convergence_tick
        << " final_tick=" << traj.final_tick
        << " sync_error=" << io::format_double(traj.final_metrics.sync_error)
        << " reg_error=" << io::format_double(traj.final_metrics.reg_error) << "\n";
    return traj.converged ? kOk : kNotConverged;
  } catch (const UnrootedGraphError& e) {
    err << "unrooted graph: " << e.what() << "\n";
    return kUnrooted;
  } catch (const DivergenceError& e) {
    err << "diverged: " << e.what() << "\n";
    return kDiverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

struct VerifyOptions {
  std::string protocol_path;
  std::string graph_path;
  int grid = 256;
  std::string delays = "0,1,2,3,5,10,50";
  std::size_t budget = 512;
  std::string out_dir = ".";
};

inline int cmd_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const Tolerances tol = tolerances_from_env();
    const SynthesisResult synth = io::protocol_from_json(io::parse_file(opt.protocol_path));
    const NetworkSpec net = io::network_from_json(io::parse_file(opt.graph_path));
    for (const auto& w : net.warnings) err << "warning: " << w << "\n";
    if (net.roots.empty() || !check_rooted(net)) {
      throw UnrootedGraphError("graph is not rooted");
    }
    const auto omegas = omega_grid(opt.grid);
    const auto samples =
        default_delay_samples(net, parse_int_list(opt.delays), opt.budget);
    const DelayFreeReport free = delay_free_closed_loop(synth, net);
    const ScanReport scan = closed_loop_frequency_scan(synth, net, omegas, samples);
    // The scan already evaluated rho(Dbar_jw) at every sampled point.
    Lemma2Report l2;
    l2.beta = dbar_beta(network_matrices(net).Dbar);
    l2.max_modulus = scan.max_coupling_radius;
    l2.passed = l2.max_modulus <= l2.beta + 1e-9 && l2.max_modulus < 1.0;
    const bool passed = free.passed && scan.passed && l2.passed;
    io::json report = io::scan_report_to_json(scan);
    report["passed"] = passed;
    report["frequency_scan"] = io::scan_report_to_json(scan);
    report["delay_free"] = io::delay_free_to_json(free);
    report["lemma2"] = io::lemma2_to_json(l2);

    const auto dir = internal::prepare_out_dir(opt.out_dir);
    RunManifest manifest("verify");
    manifest.add_input(opt.protocol_path);
    manifest.add_input(opt.graph_path);
    manifest.set("grid", opt.grid);
    manifest.set("delays", opt.delays);
    internal::emit(dir, "report.json", report.dump(2) + "\n", manifest);
    internal::finish(dir, manifest, tol);
    out << (passed ? "PASS" : "FAIL") << " delay_free_radius=" << free.spectral_radius
        << " scan_min_margin=" << scan.min_margin << " lemma2_max=" << l2.max_modulus
        << " samples=" << scan.samples << " grid=" << scan.omega_grid_size << "\n";
    return passed ? kOk : kVerifyFailed;
  } catch (const UnrootedGraphError& e) {
    err << "unrooted graph: " << e.what() << "\n";
    return kUnrooted;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

struct SweepOptions {
  std::string protocol_path;
  std::string graph_path;
  int delay_max = 10;
  int trials = 20;
  std::uint64_t seed = 2022;
  long steps = 20000;
  std::string out_dir = ".";
  unsigned threads = 0;
};

struct SweepRow {
  int trial = 0;
  std::uint64_t seed = 0;
  std::string delays;
  std::string status;
  bool converged = false;
  long convergence_tick = -1;
  long final_tick = 0;
  double sync_error = 0.0;
  double reg_error = 0.0;
};

/// Runs one trial per delay draw; initial states are shared across trials
/// so that delay-max 0 reproduces the delay-free run in every row.
inline std::vector<SweepRow> run_sweep(const SynthesisResult& synth, const NetworkSpec& net,
                                       const SweepOptions& opt) {
  if (opt.trials < 1) throw ConfigError("trials must be at least 1");
  if (opt.delay_max < 0) throw ConfigError("delay-max must be nonnegative");
  if (net.roots.empty() || !check_rooted(net)) {
    throw UnrootedGraphError("graph is not rooted");
  }
  const std::vector<Edge> es = edges(net.graph);
  std::vector<SweepRow> rows(opt.trials);
  parallel_for(
      rows.size(),
      [&](std::size_t t) {
        SweepRow& row = rows[t];
        row.trial = static_cast<int>(t);
        row.seed = internal::mix_seed(opt.seed, t);
        std::mt19937_64 rng(row.seed);
        std::uniform_int_distribution<int> draw(0, opt.delay_max);
        DelayMatrix kappa = DelayMatrix::Zero(net.size(), net.size());
        for (const Edge& e : es) {
          kappa(e.to, e.from) = draw(rng);
          if (!row.delays.empty()) row.delays += ';';
          row.delays += std::to_string(e.from + 1) + ">" + std::to_string(e.to + 1) + ":" +
                        std::to_string(kappa(e.to, e.from));
        }
        const NetworkSpec trial_net = NetworkSpec::make(net.graph, net.roots, kappa);
        SimConfig cfg;
        cfg.steps = opt.steps;
        cfg.seed = opt.seed;
        cfg.record_stride = opt.steps;
        try {
          SimState state = init(synth, trial_net, cfg);
          const Trajectory traj = run(state, cfg);
          row.status = traj.converged ? "converged" : "not_converged";
          row.converged = traj.converged;
          row.convergence_tick = traj.convergence_tick;
          row.final_tick = traj.final_tick;
          row.sync_error = traj.final_metrics.sync_error;
          row.reg_error = traj.final_metrics.reg_error;
        } catch (const DivergenceError& e) {
          row.status = "diverged";
          row.final_tick = e.tick();
          row.sync_error = row.reg_error = std::numeric_limits<double>::infinity();
        }
      },
      opt.threads);
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "trial,seed,delays,status,converged,convergence_tick,final_tick,sync_error,reg_error\n";
  for (const auto& r : rows) {
    out += std::to_string(r.trial) + "," + std::to_string(r.seed) + "," + r.delays + "," +
           r.status + "," + (r.converged ? "1" : "0") + "," +
           std::to_string(r.convergence_tick) + "," + std::to_string(r.final_tick) + "," +
           io::format_double(r.sync_error) + "," + io::format_double(r.reg_error) + "\n";
  }
  return out;
}

inline int cmd_sweep(const SweepOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const Tolerances tol = tolerances_from_env();
    const SynthesisResult synth = io::protocol_from_json(io::parse_file(opt.protocol_path));
    const NetworkSpec net = io::network_from_json(io::parse_file(opt.graph_path));
    for (const auto& w : net.warnings) err << "warning: " << w << "\n";
    const auto rows = run_sweep(synth, net, opt);
    const auto dir = internal::prepare_out_dir(opt.out_dir);
    RunManifest manifest("sweep");
    manifest.add_input(opt.protocol_path);
    manifest.add_input(opt.graph_path);
    manifest.set("seed", opt.seed);
    manifest.set("trials", opt.trials);
    manifest.set("delay_max", opt.delay_max);
    manifest.set("steps", opt.steps);
    internal::emit(dir, "sweep.csv", sweep_csv(rows), manifest);
    internal::finish(dir, manifest, tol);
    int converged = 0;
    for (const auto& r : rows) converged += r.converged ? 1 : 0;
    out << "trials=" << rows.size() << " converged=" << converged << "\n";
    return converged == static_cast<int>(rows.size()) ? kOk : kNotConverged;
  } catch (const UnrootedGraphError& e) {
    err << "unrooted graph: " << e.what() << "\n";
    return kUnrooted;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace delaysync::cli
