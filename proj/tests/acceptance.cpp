// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "delaysync/io.hpp"
#include "delaysync/sim.hpp"
#include "delaysync/verify.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace delaysync;

namespace {

const std::string kData = DELAYSYNC_DATA_DIR;

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int id, const std::string& name, double limit_s,
               const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.ok = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(secs < limit_s, "runtime limit " + std::to_string(limit_s) + " s");
  if (!o.ok) ++failures;
  std::printf("%s %2d %-36s %6.2fs%s\n", o.ok ? "PASS" : "FAIL", id, name.c_str(), secs,
              o.detail.str().c_str());
  std::fflush(stdout);
}

NetworkSpec load_network(const std::string& file) {
  return io::network_from_json(io::parse_file(kData + "/" + file));
}

// Largest absolute deviation between a matrix and its two-decimal print.
double print_gap(const Mat& M, const Mat& printed) {
  return (M - printed).cwiseAbs().maxCoeff();
}

Mat rows4(std::initializer_list<double> v) {
  Mat M(4, 4);
  auto it = v.begin();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) M(i, j) = *it++;
  return M;
}

std::vector<NetworkSpec> random_graphs() {
  std::mt19937_64 rng(7007);
  std::vector<NetworkSpec> nets;
  nets.reserve(500);
  for (int t = 0; t < 500; ++t) nets.push_back(testing::random_rooted_network(rng, 12, 20));
  return nets;
}

}  // namespace

int main() {
  const auto graphs = random_graphs();

  criterion(1, "regulator fixture", 1.0, [](Outcome& o) {
    const AgentModel model = testing::example_model();
    const RegulatorReport pub = validate_regulator(model, Mat::Ones(1, 1), testing::example_pi(),
                                                   testing::example_gamma());
    o.detail << " reference: state " << pub.state_residual << " output "
             << pub.output_residual;
    o.require(pub.state_residual <= 1e-12 && pub.output_residual <= 1e-12,
              "reference residuals");
    const RegulatorSolution own = solve_regulator(model, Mat::Ones(1, 1));
    const RegulatorReport rep = validate_regulator(model, own.R, own.Pi, own.Gamma);
    o.detail << "; solved: state " << rep.state_residual << " output "
             << rep.output_residual;
    o.require(rep.state_residual <= 1e-12 && rep.output_residual <= 1e-12,
              "solved residuals");
    o.require(rep.rank_condition, "rank condition");
  });

  criterion(2, "protocol matrix reconstruction", 1.0, [](Outcome& o) {
    const SynthesisResult s = testing::example_protocol();
    const Mat& Ab = s.comp.Abar;
    const Mat BK = s.comp.Bbar * s.gains.K;
    const Mat FC = s.gains.F * s.comp.Cbar;
    const double gaps[] = {
        print_gap(Ab, rows4({-1, 0, 0, -1, 0, 0.5, 0.86, -1.73, 0, -0.86, 0.5, 0, 0, 0, 0, 1})),
        print_gap(BK, rows4({0, 0, 0, 0, 0.54, 0.87, 0.62, -1.12, 0, 0, 0, 0, -0.89, -0.35,
                             0.15, 0.12})),
        print_gap(Ab - FC, rows4({-0.54, 0, 0.45, -1, 0.19, 0.5, 1.05, -1.73, -1.05, -0.86,
                                  -0.55, 0, -0.34, 0, -0.34, 1})),
        print_gap(Ab - BK, rows4({-1, 0, 0, -1, -0.54, -0.37, 0.24, -0.61, 0, -0.86, 0.5, 0,
                                  0.89, 0.35, -0.15, 0.87})),
    };
    double worst = 0.0;
    for (double g : gaps) worst = std::max(worst, g);
    o.detail << " max deviation " << worst;
    o.require(worst <= 0.02, "entry deviation above 0.02");
  });

  criterion(3, "reference gains are Schur", 1.0, [](Outcome& o) {
    const SynthesisResult s = testing::example_protocol();
    const double rc = spectral_radius(Mat(s.comp.Abar - s.comp.Bbar * s.gains.K));
    const double ro = spectral_radius(Mat(s.comp.Abar - s.gains.F * s.comp.Cbar));
    o.detail << " controller " << rc << " observer " << ro;
    o.require(rc < 1.0 && ro < 1.0, "radius not below 1");
  });

  const SynthesisResult proto = io::protocol_from_json(io::protocol_to_json(synthesize(
      io::model_from_json(io::parse_file(kData + "/agent_model.json")), Vec::Constant(1, 5.0))));

  criterion(4, "convergence on the three fixtures", 10.0, [&](Outcome& o) {
    for (const char* file : {"graph_n3.json", "graph_n5.json", "graph_n10.json"}) {
      SimConfig cfg;
      cfg.steps = 5000;
      cfg.seed = 2022;
      cfg.record_stride = cfg.steps;
      SimState st = init(proto, load_network(file), cfg);
      const Trajectory t = run(st, cfg);
      o.detail << " " << file << ":" << t.convergence_tick;
      o.require(t.converged, std::string(file) + " did not converge");
    }
  });

  criterion(5, "all delays 50 on the chain", 10.0, [&](Outcome& o) {
    SimConfig cfg;
    cfg.steps = 20000;
    cfg.record_stride = cfg.steps;
    SimState st = init(proto, load_network("graph_n3_delay50.json"), cfg);
    const Trajectory t = run(st, cfg);
    o.detail << " convergence tick " << t.convergence_tick;
    o.require(t.converged, "did not converge");
  });

  criterion(6, "delay-free oracle equivalence", 5.0, [&](Outcome& o) {
    const NetworkSpec net = load_network("graph_n3_nodelay.json");
    SimState st = init(proto, net, SimConfig{});
    const auto oracle = testing::StackedClosedLoop::build(proto, net.graph.a, net.roots);
    Vec z = oracle.pack(st.agents);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      step(st);
      z = oracle.step(z);
      worst = std::max(worst, (oracle.pack(st.agents) - z).cwiseAbs().maxCoeff());
    }
    o.detail << " max deviation " << worst;
    o.require(worst <= 1e-9, "deviation above 1e-9");
  });

  criterion(7, "coupling radius bound on 500 graphs", 60.0, [&](Outcome& o) {
    const auto grid = omega_grid(128);
    double worst_slack = -1.0, worst_rho = 0.0;
    for (const NetworkSpec& net : graphs) {
      const Mat Dbar = network_matrices(net).Dbar;
      const double beta = dbar_beta(Dbar);
      for (double w : grid) {
        const double rho = spectral_radius(dbar_jomega(Dbar, net.kappa, w));
        worst_slack = std::max(worst_slack, rho - beta);
        worst_rho = std::max(worst_rho, rho);
      }
    }
    o.detail << " max rho " << worst_rho << " max rho-beta " << worst_slack;
    o.require(worst_slack <= 1e-9, "radius above max row sum");
    o.require(worst_rho < 1.0, "radius not below 1");
  });

  criterion(8, "Dbar invariants on 500 graphs", 5.0, [&](Outcome& o) {
    double min_entry = 0.0, max_row = 0.0, root_gap = 0.0;
    for (const NetworkSpec& net : graphs) {
      const Mat Dbar = network_matrices(net).Dbar;
      const Vec din = in_degrees(net.graph);
      min_entry = std::min(min_entry, Dbar.minCoeff());
      max_row = std::max(max_row, Dbar.rowwise().sum().maxCoeff());
      for (int r : net.roots) {
        root_gap = std::max(root_gap,
                            std::abs(Dbar.row(r).sum() - (1.0 - 1.0 / (2.0 + din(r)))));
      }
    }
    o.detail << " min entry " << min_entry << " max row sum " << max_row << " root gap "
             << root_gap;
    o.require(min_entry >= 0.0, "negative entry");
    o.require(max_row <= 1.0 + 1e-12, "row sum above 1");
    o.require(root_gap <= 1e-12, "root row sum");
  });

  criterion(9, "attainable reference necessity", 5.0, [](Outcome& o) {
    const AgentModel model =
        io::model_from_json(io::parse_file(kData + "/non_right_invertible_model.json"));
    const SynthesisResult s = synthesize(model, (Vec(2) << 1, 1).finished());
    bool rejected = false;
    try {
      synthesize(model, (Vec(2) << 1, 0).finished());
    } catch (const InfeasibleReferenceError& e) {
      rejected = true;
      o.detail << " (1,0) distance " << e.distance();
    }
    o.require(rejected, "(1,0) accepted");
    SimConfig cfg;
    cfg.record_stride = cfg.steps;
    SimState st = init(s, testing::network_n3(), cfg);
    const Trajectory t = run(st, cfg);
    o.detail << "; chain convergence tick " << t.convergence_tick;
    o.require(t.converged, "chain did not converge");
  });

  criterion(10, "frequency scan consistency", 30.0, [&](Outcome& o) {
    const auto grid = omega_grid(256);
    for (const char* file : {"graph_n3.json", "graph_n5.json", "graph_n10.json"}) {
      const NetworkSpec net = load_network(file);
      const ScanReport r = closed_loop_frequency_scan(
          proto, net, grid, default_delay_samples(net, {0, 1, 2, 3, 5, 10, 50}, 64));
      o.detail << " " << file << " margin " << r.min_margin << ";";
      o.require(r.passed, std::string(file) + " scan failed");
    }
    std::mt19937_64 rng(1010);
    const auto coarse = omega_grid(33);
    double worst = 0.0;
    for (int trial = 0; trial < 12; ++trial) {
      const NetworkSpec net = testing::random_rooted_network(rng, 4, 6);
      const Mat Dbar = network_matrices(net).Dbar;
      for (double w : coarse) {
        const ScanReport r = closed_loop_frequency_scan(proto, net, {w});
        const double dense =
            spectral_radius(frequency_block_matrix(proto, Dbar, net.kappa, w));
        worst = std::max(worst, std::abs(1.0 - r.min_margin - dense));
      }
    }
    o.detail << " dense gap " << worst << ";";
    o.require(worst <= 1e-8, "structured and dense radii disagree");
    SynthesisResult zeroed = proto;
    zeroed.gains.K.setZero();
    const ScanReport bad =
        closed_loop_frequency_scan(zeroed, load_network("graph_n3.json"), omega_grid(64));
    o.detail << " zeroed-K margin " << bad.min_margin;
    o.require(!bad.passed, "zeroed K passed");
  });

  std::printf("%s: %d failure(s)\n", failures == 0 ? "ALL PASS" : "FAILED", failures);
  return failures == 0 ? 0 : 1;
}
