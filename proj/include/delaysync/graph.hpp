#pragma once

// Communication topology: weighted digraph, (expanded) Laplacian, the
// normalized coupling matrix Dbar, root reachability, and the phase-rotated
// Dbar used in delay-robustness arguments.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "delaysync/errors.hpp"
#include "delaysync/numerics.hpp"

namespace delaysync {

using DelayMatrix = Eigen::MatrixXi;

/// a(i, j) is the weight of the edge j -> i (agent i listens to agent j).
struct WeightedDigraph {
  Mat a;

  Eigen::Index size() const { return a.rows(); }

  static WeightedDigraph make(Mat a) {
    require_square(a.rows(), a.cols(), "adjacency");
    require_finite(a, "adjacency");
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (a(i, i) != 0.0) throw DimensionError("adjacency: self loop");
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        if (a(i, j) < 0.0) throw DimensionError("adjacency: negative weight");
      }
    }
    return WeightedDigraph{std::move(a)};
  }
};

struct Edge {
  int from = 0;  // j
  int to = 0;    // i
  double weight = 1.0;
};

/// Edges in (to, from) lexicographic order.
inline std::vector<Edge> edges(const WeightedDigraph& g) {
  std::vector<Edge> out;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      if (i != j && g.a(i, j) > 0.0) {
        out.push_back({static_cast<int>(j), static_cast<int>(i), g.a(i, j)});
      }
    }
  }
  return out;
}

/// Graph, root set (0-based), and per-channel delays in samples.
struct NetworkSpec {
  WeightedDigraph graph;
  std::vector<int> roots;
  DelayMatrix kappa;
  std::vector<std::string> warnings;

  Eigen::Index size() const { return graph.size(); }

  static NetworkSpec make(WeightedDigraph g, std::vector<int> roots,
                          DelayMatrix kappa) {
    const auto N = g.size();
    if (kappa.size() == 0) kappa = DelayMatrix::Zero(N, N);
    if (kappa.rows() != N || kappa.cols() != N) {
      throw DimensionError("delay matrix does not match the graph size");
    }
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
    for (int r : roots) {
      if (r < 0 || r >= N) {
        throw DimensionError("root index " + std::to_string(r + 1) +
                             " out of range");
      }
    }
    NetworkSpec net{std::move(g), std::move(roots), std::move(kappa), {}};
    for (Eigen::Index i = 0; i < N; ++i) {
      for (Eigen::Index j = 0; j < N; ++j) {
        if (net.kappa(i, j) < 0) throw DimensionError("negative delay");
        if (net.kappa(i, j) == 0) continue;
        if (i == j || net.graph.a(i, j) == 0.0) {
          std::ostringstream os;
          os << "delay " << net.kappa(i, j) << " on non-edge " << j + 1
             << " -> " << i + 1 << " ignored";
          net.warnings.push_back(os.str());
          net.kappa(i, j) = 0;
        }
      }
    }
    return net;
  }

  Vec root_indicator() const {
    Vec iota = Vec::Zero(size());
    for (int r : roots) iota(r) = 1.0;
    return iota;
  }
};

inline Mat laplacian(const WeightedDigraph& g) {
  const auto N = g.size();
  Mat L = -g.a;
  for (Eigen::Index i = 0; i < N; ++i) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < N; ++k) s += g.a(i, k);
    L(i, i) = s;
  }
  return L;
}

inline Vec in_degrees(const WeightedDigraph& g) { return g.a.rowwise().sum(); }

inline Mat expanded_laplacian(const Mat& L, const std::vector<int>& roots) {
  if (roots.empty()) throw ConfigError("expanded Laplacian: empty root set");
  Mat Lbar = L;
  for (int r : roots) {
    if (r < 0 || r >= L.rows()) throw DimensionError("root index out of range");
    Lbar(r, r) += 1.0;
  }
  return Lbar;
}

/// Dbar = I - (2I + Din)^{-1} Lbar. Entrywise nonnegative, row sums <= 1.
inline Mat dbar(const Mat& Lbar, const Vec& din) {
  const auto N = Lbar.rows();
  if (Lbar.cols() != N || din.size() != N) {
    throw DimensionError("dbar: inconsistent dimensions");
  }
  Mat D = Mat::Identity(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    D.row(i) -= Lbar.row(i) / (2.0 + din(i));
  }
  for (Eigen::Index i = 0; i < N; ++i) {
    double row_sum = 0.0;
    for (Eigen::Index j = 0; j < N; ++j) {
      if (D(i, j) < -1e-12) {
        throw SynthesisIntegrityError("dbar: negative entry");
      }
      row_sum += D(i, j);
    }
    if (row_sum > 1.0 + 1e-12) {
      throw SynthesisIntegrityError("dbar: row sum exceeds one");
    }
  }
  return D;
}

struct NetworkMatrices {
  Mat L;
  Mat Lbar;
  Vec din;
  Mat Dbar;
};

inline NetworkMatrices network_matrices(const NetworkSpec& net) {
  NetworkMatrices m;
  m.L = laplacian(net.graph);
  m.Lbar = expanded_laplacian(m.L, net.roots);
  m.din = in_degrees(net.graph);
  m.Dbar = dbar(m.Lbar, m.din);
  return m;
}

/// Every node reachable along edge direction j -> i from some root.
inline bool check_rooted(const WeightedDigraph& g, const std::vector<int>& roots) {
  const auto N = g.size();
  std::vector<char> seen(N, 0);
  std::queue<Eigen::Index> frontier;
  for (int r : roots) {
    if (r >= 0 && r < N && !seen[r]) {
      seen[r] = 1;
      frontier.push(r);
    }
  }
  while (!frontier.empty()) {
    const Eigen::Index j = frontier.front();
    frontier.pop();
    for (Eigen::Index i = 0; i < N; ++i) {
      if (!seen[i] && g.a(i, j) > 0.0) {
        seen[i] = 1;
        frontier.push(i);
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](char s) { return s != 0; });
}

inline bool check_rooted(const NetworkSpec& net) {
  return check_rooted(net.graph, net.roots);
}

/// For a rooted graph every eigenvalue of Lbar lies in the open right half
/// plane. Returns false if `rooted` holds and that fails.
inline bool verify_remark1(const Mat& Lbar, bool rooted) {
  if (!rooted) return true;
  const CVec ev = eigenvalues(Lbar);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (!(ev(i).real() > 0.0)) return false;
  }
  return true;
}

/// Entry (i, j) = dbar_ij * exp(-j omega kappa_ij).
inline CMat dbar_jomega(const Mat& Dbar, const DelayMatrix& kappa, double omega) {
  const auto N = Dbar.rows();
  if (kappa.rows() != N || kappa.cols() != N) {
    throw DimensionError("dbar_jomega: delay matrix size");
  }
  CMat out(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) {
      const int k = i == j ? 0 : kappa(i, j);
      out(i, j) = k == 0 ? Complex(Dbar(i, j), 0.0)
                         : Dbar(i, j) * std::polar(1.0, -omega * k);
    }
  }
  return out;
}

/// `count` evenly spaced frequencies covering [-pi, pi] inclusive.
inline std::vector<double> omega_grid(int count) {
  if (count < 1) throw ConfigError("omega grid needs at least one point");
  std::vector<double> w(count);
  if (count == 1) {
    w[0] = 0.0;
    return w;
  }
  for (int i = 0; i < count; ++i) {
    w[i] = -std::numbers::pi + 2.0 * std::numbers::pi * i / (count - 1);
  }
  return w;
}

/// Max absolute row sum of Dbar; bounds every eigenvalue modulus.
inline double dbar_beta(const Mat& Dbar) {
  return Dbar.size() == 0 ? 0.0 : Dbar.cwiseAbs().rowwise().sum().maxCoeff();
}

struct Lemma2Report {
  bool passed = false;
  double beta = 0.0;
  double max_modulus = 0.0;
  double worst_omega = 0.0;
};

/// Sweeps the spectral radius of dbar_jomega over the grid. Passes when it
/// never exceeds beta and, for rooted graphs, stays inside the unit disc.
inline Lemma2Report lemma2_check(const Mat& Dbar, const DelayMatrix& kappa,
                                 const std::vector<double>& omegas,
                                 bool rooted = true) {
  Lemma2Report r;
  r.beta = dbar_beta(Dbar);
  for (double w : omegas) {
    const double rho = spectral_radius(dbar_jomega(Dbar, kappa, w));
    if (rho > r.max_modulus) {
      r.max_modulus = rho;
      r.worst_omega = w;
    }
  }
  r.passed = r.max_modulus <= r.beta + 1e-9 && (!rooted || r.max_modulus < 1.0);
  return r;
}

}  // namespace delaysync
