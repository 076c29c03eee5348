#pragma once

// Deterministic discrete-time execution of the networked closed loop:
// agent plant, integrator precompensator and observer-based protocol, with
// per-edge FIFO channels realizing the communication delays.

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "delaysync/errors.hpp"
#include "delaysync/graph.hpp"
#include "delaysync/numerics.hpp"
#include "delaysync/plant.hpp"

namespace delaysync {

struct AgentRuntime {
  Vec x;     // plant state
  Vec p;     // precompensator (integrator) state
  Vec xhat;  // protocol observer state
  Vec chi;   // protocol state, also the exchanged signal
};

enum class Prefill { kHoldInitial, kZero };

struct SimConfig {
  long steps = 5000;
  Prefill prefill = Prefill::kHoldInitial;
  // Explicit initial states; when absent x and p are drawn uniformly from
  // [-init_range, init_range] and xhat, chi start at zero.
  std::optional<std::vector<AgentRuntime>> initial;
  std::uint64_t seed = 2022;
  double init_range = 5.0;
  double eps_sync = 1e-2;
  double eps_reg = 1e-2;
  int early_stop_window = 50;
  bool early_stop = true;
  long record_stride = 1;
  bool log_channels = false;

  void validate() const {
    if (steps < 1) throw ConfigError("steps must be at least 1");
    if (!(eps_sync > 0.0) || !(eps_reg > 0.0)) {
      throw ConfigError("convergence thresholds must be positive");
    }
    if (early_stop_window < 1) throw ConfigError("early-stop window must be >= 1");
    if (record_stride < 1) throw ConfigError("record stride must be >= 1");
    if (!(init_range >= 0.0)) throw ConfigError("init range must be >= 0");
  }
};

/// One directed link j -> i. Buffers hold exactly `delay` samples; the head
/// is the value the source emitted `delay` ticks ago.
struct DelayedChannel {
  int source = 0;
  int sink = 0;
  int delay = 0;
  std::deque<Vec> buffer_y;
  std::deque<Vec> buffer_xi;
};

struct ChannelLog {
  std::vector<Vec> sent;      // source output y_j(k) at each tick
  std::vector<Vec> received;  // y_j(k - delay) as read by the sink
};

struct SimState {
  SynthesisResult synth;
  NetworkSpec net;
  NetworkMatrices mats;
  Vec y_r;
  std::vector<AgentRuntime> agents;
  std::vector<DelayedChannel> channels;
  Eigen::MatrixXi channel_index;  // (i, j) -> channel or -1
  std::vector<ChannelLog> logs;
  bool log_channels = false;
  long k = 0;

  Eigen::Index size() const { return static_cast<Eigen::Index>(agents.size()); }
};

/// x = Pi z, p = W z, xhat = chi = 0: an equilibrium of every agent for
/// every rooted graph and every delay assignment.
inline AgentRuntime regulated_equilibrium(const SynthesisResult& s) {
  AgentRuntime a;
  a.x = s.reg.Pi * s.z;
  a.p = s.comp.W * s.z;
  a.xhat = Vec::Zero(s.nbar());
  a.chi = Vec::Zero(s.nbar());
  return a;
}

inline SimState init(const SynthesisResult& synth, const NetworkSpec& net,
                     const SimConfig& cfg) {
  cfg.validate();
  if (net.roots.empty() || !check_rooted(net)) {
    throw UnrootedGraphError(
        "graph is not rooted: some agent is unreachable from the root set");
  }
  const auto N = net.size();
  const auto n = synth.n(), v = synth.v(), nbar = synth.nbar();

  SimState s{synth, net, network_matrices(net), synth.y_r, {}, {}, {}, {}, cfg.log_channels, 0};
  s.agents.resize(N);
  if (cfg.initial) {
    if (static_cast<Eigen::Index>(cfg.initial->size()) != N) {
      throw DimensionError("initial states: one entry per agent required");
    }
    for (Eigen::Index i = 0; i < N; ++i) {
      const AgentRuntime& a = (*cfg.initial)[i];
      if (a.x.size() != n || a.p.size() != v || a.xhat.size() != nbar ||
          a.chi.size() != nbar) {
        throw DimensionError("initial state of agent " + std::to_string(i + 1) +
                             " has wrong dimensions");
      }
      s.agents[i] = a;
    }
  } else {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> dist(-cfg.init_range, cfg.init_range);
    for (auto& a : s.agents) {
      a.x = Vec(n);
      for (Eigen::Index c = 0; c < n; ++c) a.x(c) = dist(rng);
      a.p = Vec(v);
      for (Eigen::Index c = 0; c < v; ++c) a.p(c) = dist(rng);
      a.xhat = Vec::Zero(nbar);
      a.chi = Vec::Zero(nbar);
    }
  }

  s.channel_index = Eigen::MatrixXi::Constant(N, N, -1);
  for (const Edge& e : edges(net.graph)) {
    DelayedChannel ch{e.from, e.to, net.kappa(e.to, e.from), {}, {}};
    const AgentRuntime& src = s.agents[e.from];
    const Vec y0 = synth.model.C * src.x;
    for (int d = 0; d < ch.delay; ++d) {
      if (cfg.prefill == Prefill::kHoldInitial) {
        ch.buffer_y.push_back(y0);
        ch.buffer_xi.push_back(src.chi);
      } else {
        ch.buffer_y.push_back(Vec::Zero(y0.size()));
        ch.buffer_xi.push_back(Vec::Zero(nbar));
      }
    }
    s.channel_index(e.to, e.from) = static_cast<int>(s.channels.size());
    s.channels.push_back(std::move(ch));
  }
  if (s.log_channels) s.logs.resize(s.channels.size());
  return s;
}

namespace internal {

inline std::vector<Vec> outputs(const SimState& s) {
  std::vector<Vec> y;
  y.reserve(s.agents.size());
  for (const auto& a : s.agents) y.push_back(s.synth.model.C * a.x);
  return y;
}

// Value agent i receives from agent j at the current tick.
inline const Vec& delayed_y(const SimState& s, const std::vector<Vec>& y,
                            Eigen::Index i, Eigen::Index j) {
  const int c = s.channel_index(i, j);
  const DelayedChannel& ch = s.channels[c];
  return ch.delay == 0 ? y[j] : ch.buffer_y.front();
}

inline const Vec& delayed_xi(const SimState& s, Eigen::Index i, Eigen::Index j) {
  const int c = s.channel_index(i, j);
  const DelayedChannel& ch = s.channels[c];
  return ch.delay == 0 ? s.agents[j].chi : ch.buffer_xi.front();
}

}  // namespace internal

/// Network measurement of agent i:
///   (1 / (2 + d_in(i))) sum_j lbar_ij (y_j(k - kappa_ij) - y_r).
inline Vec compute_zeta_bar(Eigen::Index i, const SimState& s,
                            const std::vector<Vec>& y, const Vec& y_r) {
  const Mat& Lbar = s.mats.Lbar;
  Vec acc = Lbar(i, i) * (y[i] - y_r);
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (j == i || s.channel_index(i, j) < 0) continue;
    acc += Lbar(i, j) * (internal::delayed_y(s, y, i, j) - y_r);
  }
  return acc / (2.0 + s.mats.din(i));
}

inline Vec compute_zeta_bar(Eigen::Index i, const SimState& s) {
  return compute_zeta_bar(i, s, internal::outputs(s), s.y_r);
}

/// Localized exchange: (1 / (2 + d_in(i))) sum_j lbar_ij chi_j(k - kappa_ij).
inline Vec compute_zeta_hat(Eigen::Index i, const SimState& s) {
  const Mat& Lbar = s.mats.Lbar;
  Vec acc = Lbar(i, i) * s.agents[i].chi;
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (j == i || s.channel_index(i, j) < 0) continue;
    acc += Lbar(i, j) * internal::delayed_xi(s, i, j);
  }
  return acc / (2.0 + s.mats.din(i));
}

/// One synchronous tick. Every agent reads the tick-k snapshot.
inline void step(SimState& s) {
  const SynthesisResult& syn = s.synth;
  const Mat& A = syn.model.A;
  const Mat& B = syn.model.B;
  const Mat& Abar = syn.comp.Abar;
  const Mat& Bbar = syn.comp.Bbar;
  const Mat& Cbar = syn.comp.Cbar;
  const Mat& K = syn.gains.K;
  const Mat& F = syn.gains.F;
  const auto m = syn.m(), v = syn.v();
  const auto N = s.size();

  const std::vector<Vec> y = internal::outputs(s);
  std::vector<Vec> zeta_bar(N), zeta_hat(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    zeta_bar[i] = compute_zeta_bar(i, s, y, s.y_r);
    zeta_hat[i] = compute_zeta_hat(i, s);
  }

  std::vector<AgentRuntime> next(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const AgentRuntime& a = s.agents[i];
    const Vec vin = -K * a.chi;
    const Vec u = syn.pre.Gamma1 * a.p + syn.pre.Gamma2 * vin.head(m - v);
    AgentRuntime& b = next[i];
    b.xhat = Abar * a.xhat - Bbar * (K * zeta_hat[i]) +
             F * (zeta_bar[i] - Cbar * a.xhat);
    b.chi = Abar * a.chi + Bbar * vin + Abar * (a.xhat - zeta_hat[i]);
    b.p = a.p + vin.tail(v);
    b.x = A * a.x + B * u;
  }

  for (std::size_t c = 0; c < s.channels.size(); ++c) {
    DelayedChannel& ch = s.channels[c];
    if (s.log_channels) {
      s.logs[c].sent.push_back(y[ch.source]);
      s.logs[c].received.push_back(ch.delay == 0 ? y[ch.source]
                                                 : ch.buffer_y.front());
    }
    if (ch.delay == 0) continue;
    ch.buffer_y.pop_front();
    ch.buffer_xi.pop_front();
    ch.buffer_y.push_back(y[ch.source]);
    ch.buffer_xi.push_back(s.agents[ch.source].chi);
  }

  for (Eigen::Index i = 0; i < N; ++i) {
    const AgentRuntime& b = next[i];
    if (!all_finite(b.x) || !all_finite(b.p) || !all_finite(b.xhat) ||
        !all_finite(b.chi)) {
      std::ostringstream os;
      os << "state of agent " << i + 1 << " became non-finite at tick " << s.k;
      throw DivergenceError(os.str(), s.k);
    }
  }
  s.agents = std::move(next);
  ++s.k;
}

struct Metrics {
  double sync_error = 0.0;  // max_{i,j} |x_i - x_j|_inf
  double reg_error = 0.0;   // max_i |y_i - y_r|_inf
};

inline Metrics metrics(const SimState& s) {
  Metrics m;
  const auto N = s.size();
  for (Eigen::Index i = 0; i < N; ++i) {
    const Vec& xi = s.agents[i].x;
    for (Eigen::Index j = i + 1; j < N; ++j) {
      m.sync_error = std::max(m.sync_error,
                              (xi - s.agents[j].x).lpNorm<Eigen::Infinity>());
    }
    const Vec e = s.synth.model.C * xi - s.y_r;
    if (e.size() > 0) m.reg_error = std::max(m.reg_error, e.lpNorm<Eigen::Infinity>());
  }
  return m;
}

struct TrajectoryRecord {
  long k = 0;
  std::vector<AgentRuntime> agents;
  std::vector<Vec> y;
  Metrics metrics;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  bool converged = false;
  bool early_stopped = false;
  long convergence_tick = -1;  // start of the final sub-threshold window
  long final_tick = 0;
  Metrics final_metrics;
};

/// Runs until cfg.steps ticks elapse or both metrics have stayed below
/// their thresholds for early_stop_window consecutive ticks.
inline Trajectory run(SimState& s, const SimConfig& cfg) {
  cfg.validate();
  Trajectory traj;
  long streak = 0;
  const long end = s.k + cfg.steps;
  while (true) {
    const Metrics m = metrics(s);
    const bool below = m.sync_error < cfg.eps_sync && m.reg_error < cfg.eps_reg;
    streak = below ? streak + 1 : 0;
    const bool window_met = streak >= cfg.early_stop_window;
    const bool stop = s.k >= end || (cfg.early_stop && window_met);
    if (s.k % cfg.record_stride == 0 || stop) {
      traj.records.push_back({s.k, s.agents, internal::outputs(s), m});
    }
    if (stop) {
      traj.converged = window_met;
      traj.early_stopped = cfg.early_stop && window_met && s.k < end;
      traj.convergence_tick = window_met ? s.k - streak + 1 : -1;
      traj.final_tick = s.k;
      traj.final_metrics = m;
      break;
    }
    step(s);
  }
  return traj;
}

}  // namespace delaysync
