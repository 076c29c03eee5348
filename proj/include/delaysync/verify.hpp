#pragma once

// Frequency-domain stability scans for delayed linear systems and for the
// networked closed loop. These sample frequencies and delay assignments;
// a pass is evidence, not a proof.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "delaysync/errors.hpp"
#include "delaysync/graph.hpp"
#include "delaysync/numerics.hpp"
#include "delaysync/parallel.hpp"
#include "delaysync/plant.hpp"

namespace delaysync {

/// x(k+1) = A0 x(k) + sum_i A_i x(k - kappa_i)
struct DelaySystem {
  struct Term {
    Mat A;
    int kappa = 0;
  };
  Mat A0;
  std::vector<Term> terms;

  void validate() const {
    require_square(A0.rows(), A0.cols(), "delay system A0");
    for (const auto& t : terms) {
      if (t.A.rows() != A0.rows() || t.A.cols() != A0.cols()) {
        throw DimensionError("delay system: term dimension mismatch");
      }
      if (t.kappa < 0) throw DimensionError("delay system: negative delay");
    }
  }
};

struct ScanReport {
  bool passed = false;
  bool precondition_failed = false;
  int omega_grid_size = 0;
  int samples = 0;
  // Signed, inward-positive. Smallest pencil singular value for the delay
  // system scan; 1 - spectral radius for the closed-loop scan.
  double min_margin = std::numeric_limits<double>::infinity();
  double threshold = 0.0;
  double worst_omega = 0.0;
  int worst_sample = -1;
  // Closed-loop scan only: largest rho(Dbar_jw(kappa)) seen.
  double max_coupling_radius = 0.0;
  std::string message;
};

namespace internal {

struct PointResult {
  double margin = std::numeric_limits<double>::infinity();
  double omega = 0.0;
  double aux = 0.0;  // max of a side quantity over the grid
};

// Smallest margin over the grid for one delay sample; first minimum wins.
template <typename MarginFn>
PointResult sweep_grid(const std::vector<double>& omegas, MarginFn&& fn) {
  PointResult best;
  for (double w : omegas) {
    const double m = fn(w);
    if (m < best.margin) best = {m, w};
  }
  return best;
}

inline void reduce_into(ScanReport& r, const std::vector<PointResult>& per_sample) {
  for (std::size_t s = 0; s < per_sample.size(); ++s) {
    if (per_sample[s].margin < r.min_margin) {
      r.min_margin = per_sample[s].margin;
      r.worst_omega = per_sample[s].omega;
      r.worst_sample = static_cast<int>(s);
    }
  }
  r.passed = r.min_margin > r.threshold;
}

}  // namespace internal

/// Scans |det(e^{jw} I - A0 - sum e^{-jw kappa_i} A_i)| through the smallest
/// singular value of the pencil. `delay_samples[s][i]` is the delay of term
/// i in sample s; an empty list scans the system's own delays.
inline ScanReport lemma1_scan(const DelaySystem& sys,
                              const std::vector<double>& omegas,
                              std::vector<std::vector<int>> delay_samples = {}) {
  sys.validate();
  const auto d = sys.A0.rows();
  if (delay_samples.empty()) {
    std::vector<int> own;
    for (const auto& t : sys.terms) own.push_back(t.kappa);
    delay_samples.push_back(std::move(own));
  }
  for (const auto& tuple : delay_samples) {
    if (tuple.size() != sys.terms.size()) {
      throw DimensionError("delay sample length does not match term count");
    }
  }
  ScanReport r;
  r.omega_grid_size = static_cast<int>(omegas.size());
  r.samples = static_cast<int>(delay_samples.size());
  r.threshold = 1e-8;

  Mat sum = sys.A0;
  for (const auto& t : sys.terms) sum += t.A;
  const double rho = spectral_radius(sum);
  if (!(rho < 1.0)) {
    std::ostringstream os;
    os << "undelayed system A0 + sum A_i is not Schur stable (spectral radius "
       << rho << ")";
    r.precondition_failed = true;
    r.passed = false;
    r.min_margin = 1.0 - rho;
    r.message = os.str();
    return r;
  }

  const CMat I = CMat::Identity(d, d);
  std::vector<internal::PointResult> per_sample(delay_samples.size());
  parallel_for(delay_samples.size(), [&](std::size_t s) {
    per_sample[s] = internal::sweep_grid(omegas, [&](double w) {
      CMat pencil = std::polar(1.0, w) * I - sys.A0.cast<Complex>();
      for (std::size_t i = 0; i < sys.terms.size(); ++i) {
        pencil -= std::polar(1.0, -w * delay_samples[s][i]) *
                  sys.terms[i].A.cast<Complex>();
      }
      return sigma_min(pencil);
    });
  });
  internal::reduce_into(r, per_sample);
  r.message = r.passed ? "pencil nonsingular on every scanned point"
                       : "pencil (near) singular at a scanned point";
  return r;
}

/// Delay assignments for a network scan: the network's own delays, every
/// uniform assignment over `values`, then either the full product (when it
/// fits the budget) or seeded random draws, then `extra`.
inline std::vector<DelayMatrix> default_delay_samples(
    const NetworkSpec& net, const std::vector<int>& values = {0, 1, 2, 3, 5, 10, 50},
    std::size_t budget = 512, std::uint64_t seed = 1,
    const std::vector<DelayMatrix>& extra = {}) {
  const auto N = net.size();
  const std::vector<Edge> es = edges(net.graph);
  std::vector<DelayMatrix> out;
  out.push_back(net.kappa);
  auto from_tuple = [&](const std::vector<int>& t) {
    DelayMatrix k = DelayMatrix::Zero(N, N);
    for (std::size_t e = 0; e < es.size(); ++e) k(es[e].to, es[e].from) = t[e];
    return k;
  };
  if (!values.empty() && !es.empty()) {
    for (int val : values) {
      if (out.size() >= budget) break;
      out.push_back(from_tuple(std::vector<int>(es.size(), val)));
    }
    const double combos = std::pow(static_cast<double>(values.size()),
                                   static_cast<double>(es.size()));
    if (combos <= static_cast<double>(budget - std::min(budget, out.size()))) {
      std::vector<std::size_t> digit(es.size(), 0);
      while (true) {
        std::vector<int> t(es.size());
        for (std::size_t e = 0; e < es.size(); ++e) t[e] = values[digit[e]];
        out.push_back(from_tuple(t));
        std::size_t e = 0;
        while (e < es.size() && ++digit[e] == values.size()) digit[e++] = 0;
        if (e == es.size()) break;
      }
    } else {
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
      while (out.size() < budget) {
        std::vector<int> t(es.size());
        for (auto& x : t) x = values[pick(rng)];
        out.push_back(from_tuple(t));
      }
    }
  }
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

/// Dense frequency-domain matrix of the reduced closed loop
///   [[I (x) (Abar - Bbar K), I (x) Bbar K], [0, Dbar_jw(kappa) (x) Abar]].
inline CMat frequency_block_matrix(const SynthesisResult& s, const Mat& Dbar,
                                   const DelayMatrix& kappa, double omega) {
  const auto N = Dbar.rows();
  const auto nb = s.nbar();
  const Mat IN = Mat::Identity(N, N);
  const Mat BK = s.comp.Bbar * s.gains.K;
  CMat M = CMat::Zero(2 * N * nb, 2 * N * nb);
  M.topLeftCorner(N * nb, N * nb) = kron(IN, Mat(s.comp.Abar - BK)).cast<Complex>();
  M.topRightCorner(N * nb, N * nb) = kron(IN, BK).cast<Complex>();
  M.bottomRightCorner(N * nb, N * nb) =
      kron(dbar_jomega(Dbar, kappa, omega), s.comp.Abar.cast<Complex>());
  return M;
}

/// Structured scan: the block-triangular matrix has spectral radius
/// max(rho(Abar - Bbar K), rho(Dbar_jw) * rho(Abar)).
inline ScanReport closed_loop_frequency_scan(
    const SynthesisResult& s, const NetworkSpec& net,
    const std::vector<double>& omegas,
    std::vector<DelayMatrix> delay_samples = {}) {
  if (net.roots.empty() || !check_rooted(net)) {
    throw UnrootedGraphError("closed-loop scan requires a rooted graph");
  }
  if (delay_samples.empty()) delay_samples.push_back(net.kappa);
  const Mat Dbar = network_matrices(net).Dbar;
  ScanReport r;
  r.omega_grid_size = static_cast<int>(omegas.size());
  r.samples = static_cast<int>(delay_samples.size());
  r.threshold = 1e-9;
  const double rho_ctrl =
      spectral_radius(Mat(s.comp.Abar - s.comp.Bbar * s.gains.K));
  const double rho_abar = spectral_radius(s.comp.Abar);

  std::vector<internal::PointResult> per_sample(delay_samples.size());
  parallel_for(delay_samples.size(), [&](std::size_t k) {
    double coupling = 0.0;
    per_sample[k] = internal::sweep_grid(omegas, [&](double w) {
      const double rho_d = spectral_radius(dbar_jomega(Dbar, delay_samples[k], w));
      coupling = std::max(coupling, rho_d);
      return 1.0 - std::max(rho_ctrl, rho_d * rho_abar);
    });
    per_sample[k].aux = coupling;
  });
  internal::reduce_into(r, per_sample);
  for (const auto& ps : per_sample) {
    r.max_coupling_radius = std::max(r.max_coupling_radius, ps.aux);
  }
  std::ostringstream os;
  os << "max closed-loop eigenvalue modulus " << 1.0 - r.min_margin
     << " (controller block " << rho_ctrl << ")";
  r.message = os.str();
  return r;
}

struct DelayFreeReport {
  double spectral_radius = 0.0;
  double controller_radius = 0.0;  // rho(Abar - Bbar K)
  double coupling_radius = 0.0;    // rho(Dbar (x) Abar)
  bool passed = false;
};

/// Eigenvalues of [[I (x) (Abar - Bbar K), I (x) Bbar K], [0, Dbar (x) Abar]].
inline DelayFreeReport delay_free_closed_loop(const SynthesisResult& s,
                                              const NetworkSpec& net) {
  const auto N = net.size();
  const auto nb = s.nbar();
  const Mat Dbar = network_matrices(net).Dbar;
  const Mat IN = Mat::Identity(N, N);
  const Mat BK = s.comp.Bbar * s.gains.K;
  Mat M = Mat::Zero(2 * N * nb, 2 * N * nb);
  M.topLeftCorner(N * nb, N * nb) = kron(IN, Mat(s.comp.Abar - BK));
  M.topRightCorner(N * nb, N * nb) = kron(IN, BK);
  const Mat coupling = kron(Dbar, s.comp.Abar);
  M.bottomRightCorner(N * nb, N * nb) = coupling;
  DelayFreeReport r;
  // Dbar is often defective (chains give Jordan blocks), hence the clustering.
  r.spectral_radius = clustered_spectral_radius(M);
  r.controller_radius = clustered_spectral_radius(Mat(s.comp.Abar - BK));
  r.coupling_radius = clustered_spectral_radius(coupling);
  r.passed = r.spectral_radius < 1.0 - 1e-9;
  return r;
}

}  // namespace delaysync
