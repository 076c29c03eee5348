#pragma once

// Agent-model validation and the precompensator synthesis step: attainable
// reference set, regulator equations with rank repair, precompensator,
// compensated model, and the stabilizing gain pair.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "delaysync/errors.hpp"
#include "delaysync/numerics.hpp"

namespace delaysync {

/// Numerical thresholds shared by the synthesis pipeline.
struct Tolerances {
  RankTolerance rank{};
  double membership = 1e-8;   // reference-set membership (least squares)
  double residual = 1e-9;     // regulator / compensated-model identities
  double unit_circle = 1e-9;  // slack on |z| <= 1 and PBH mode selection
};

inline double max_abs(const Mat& M) {
  return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff();
}

/// Identical agent x(k+1) = A x(k) + B u(k), y(k) = C x(k).
struct AgentModel {
  Mat A;
  Mat B;
  Mat C;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index p() const { return C.rows(); }

  static AgentModel make(Mat A, Mat B, Mat C) {
    if (A.rows() == 0) throw DimensionError("agent model: empty A");
    require_square(A.rows(), A.cols(), "agent model A");
    if (B.rows() != A.rows()) {
      throw DimensionError("agent model: B must have as many rows as A");
    }
    if (C.cols() != A.cols()) {
      throw DimensionError("agent model: C must have as many columns as A");
    }
    if (B.cols() == 0 || C.rows() == 0) {
      throw DimensionError("agent model: need at least one input and output");
    }
    require_finite(A, "A");
    require_finite(B, "B");
    require_finite(C, "C");
    return AgentModel{std::move(A), std::move(B), std::move(C)};
  }
};

struct Assumption1Result {
  bool ok = false;
  double worst_modulus = 0.0;
};

/// All eigenvalues of A in the closed unit disc (up to rounding slack).
inline Assumption1Result check_assumption1(const AgentModel& model,
                                           const Tolerances& tol = {}) {
  const double rho = spectral_radius(model.A);
  return {rho <= 1.0 + tol.unit_circle, rho};
}

inline bool check_stabilizable(const Mat& A, const Mat& B,
                               const Tolerances& tol = {}) {
  return pbh_stabilizable(A, B, tol.rank, tol.unit_circle);
}

inline bool check_detectable(const Mat& A, const Mat& C,
                             const Tolerances& tol = {}) {
  return pbh_detectable(A, C, tol.rank, tol.unit_circle);
}

struct ModelChecks {
  Assumption1Result assumption1;
  bool stabilizable = false;
  bool detectable = false;
  bool right_invertible_no_zero_at_one = false;

  bool ok() const { return assumption1.ok && stabilizable && detectable; }
};

// [[A - zI, B], [C, 0]] for complex z.
inline CMat system_matrix(const AgentModel& model, Complex z) {
  const auto n = model.n(), m = model.m(), p = model.p();
  CMat S = CMat::Zero(n + p, n + m);
  S.topLeftCorner(n, n) = model.A.cast<Complex>() - z * CMat::Identity(n, n);
  S.topRightCorner(n, m) = model.B.cast<Complex>();
  S.bottomLeftCorner(p, n) = model.C.cast<Complex>();
  return S;
}

// [[A - I, B], [C, 0]]
inline Mat regulator_matrix(const AgentModel& model) {
  const auto n = model.n(), m = model.m(), p = model.p();
  Mat S = Mat::Zero(n + p, n + m);
  S.topLeftCorner(n, n) = model.A - Mat::Identity(n, n);
  S.topRightCorner(n, m) = model.B;
  S.bottomLeftCorner(p, n) = model.C;
  return S;
}

/// Full row rank of the system matrix at z = 1, confirmed at generic points.
inline bool check_right_invertible_no_zero_at_one(const AgentModel& model,
                                                  const Tolerances& tol = {}) {
  const auto full = model.n() + model.p();
  if (rank_of(regulator_matrix(model), tol.rank) != full) return false;
  // Normal rank: the rank at a point that is neither a pole nor a zero.
  // Taking the max over a few fixed off-axis points avoids a coincidence.
  const Complex probes[] = {{0.3183, 0.7071}, {-0.5772, 0.1414},
                            {1.6180, -0.4142}};
  int normal_rank = 0;
  for (const Complex z : probes) {
    normal_rank = std::max(normal_rank, rank_of(system_matrix(model, z),
                                                tol.rank));
  }
  return normal_rank == full;
}

inline ModelChecks check_model(const AgentModel& model,
                               const Tolerances& tol = {}) {
  ModelChecks c;
  c.assumption1 = check_assumption1(model, tol);
  c.stabilizable = check_stabilizable(model.A, model.B, tol);
  c.detectable = check_detectable(model.A, model.C, tol);
  c.right_invertible_no_zero_at_one =
      check_right_invertible_no_zero_at_one(model, tol);
  return c;
}

/// Throws ModelAssumptionError naming the first failed hypothesis.
inline ModelChecks require_valid_model(const AgentModel& model,
                                       const Tolerances& tol = {}) {
  const ModelChecks c = check_model(model, tol);
  if (!c.assumption1.ok) {
    std::ostringstream os;
    os << "Assumption 1 violated: A has an eigenvalue of modulus "
       << c.assumption1.worst_modulus << " outside the closed unit disc";
    throw ModelAssumptionError("assumption1", os.str());
  }
  if (!c.stabilizable) {
    throw ModelAssumptionError("stabilizable", "(A, B) is not stabilizable");
  }
  if (!c.detectable) {
    throw ModelAssumptionError("detectable", "(A, C) is not detectable");
  }
  return c;
}

/// Basis R (p x q, orthonormal columns) of the outputs attainable as
/// equilibria: C * { x : (A - I) x in im B }.
inline Mat compute_yr_basis(const AgentModel& model,
                            const Tolerances& tol = {}) {
  const auto n = model.n(), m = model.m();
  Mat AB(n, n + m);
  AB << model.A - Mat::Identity(n, n), model.B;
  const Mat N = kernel_basis(AB, tol.rank);
  if (N.cols() == 0) return Mat(model.p(), 0);
  const Mat Y = model.C * N.topRows(n);
  // Threshold against ||C|| as well as ||Y||: when C X vanishes exactly,
  // a purely relative cut would promote round-off to signal.
  Eigen::JacobiSVD<Mat> svd(Y, Eigen::ComputeFullU);
  const double cut = tol.rank.relative_epsilon *
                     std::max(svd.singularValues()(0), sigma_max(model.C));
  int q = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()(i) > cut) ++q;
  }
  return svd.matrixU().leftCols(q);
}

/// Least-squares distance of (0, y) from the image of the regulator matrix.
inline double reference_distance(const AgentModel& model, const Vec& y,
                                 const Tolerances& tol = {}) {
  const Mat S = regulator_matrix(model);
  Vec rhs = Vec::Zero(S.rows());
  rhs.tail(model.p()) = y;
  const Mat sol = lstsq(S, rhs, tol.rank);
  return (S * sol - rhs).norm();
}

struct RegulatorSolution {
  Mat R;      // p x q
  Mat Pi;     // n x q
  Mat Gamma;  // m x q
  int repair_passes = 0;
  std::vector<int> gamma_rank_history;  // rank(Gamma) before each pass, then final
};

struct RegulatorReport {
  double state_residual = 0.0;   // max |(A - I) Pi + B Gamma|
  double output_residual = 0.0;  // max |C Pi - R|
  int rank_lhs = 0;              // rank [[A - I, B Gamma], [C, 0]]
  int rank_rhs = 0;              // n + rank(Gamma)
  bool rank_condition = false;
  bool ok = false;
};

// [[A - I, B Gamma], [C, 0]]
inline Mat repair_matrix(const AgentModel& model, const Mat& Gamma) {
  const auto n = model.n(), p = model.p(), q = Gamma.cols();
  Mat S = Mat::Zero(n + p, n + q);
  S.topLeftCorner(n, n) = model.A - Mat::Identity(n, n);
  S.topRightCorner(n, q) = model.B * Gamma;
  S.bottomLeftCorner(p, n) = model.C;
  return S;
}

// rank(Gamma) against the absolute cut used for [[A - I, B Gamma], [C, 0]],
// so both sides of the rank condition are judged on one scale. A Gamma made
// of rounding noise has rank zero here, not one.
inline int gamma_rank(const AgentModel& model, const Mat& Gamma,
                      const Tolerances& tol = {}) {
  if (Gamma.size() == 0) return 0;
  const double cut = tol.rank.relative_epsilon *
                     std::max(sigma_max(repair_matrix(model, Gamma)), sigma_max(Gamma));
  Eigen::JacobiSVD<Mat> svd(Gamma);
  int r = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()(i) > cut) ++r;
  }
  return r;
}

// Nearest matrix of rank r (truncated SVD).
inline Mat truncate_rank(const Mat& M, int r) {
  if (r == 0) return Mat::Zero(M.rows(), M.cols());
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
         svd.matrixV().leftCols(r).transpose();
}

inline RegulatorReport validate_regulator(const AgentModel& model, const Mat& R,
                                          const Mat& Pi, const Mat& Gamma,
                                          const Tolerances& tol = {}) {
  const auto n = model.n();
  if (Pi.rows() != n || Gamma.rows() != model.m() || R.rows() != model.p() ||
      Pi.cols() != R.cols() || Gamma.cols() != R.cols()) {
    throw DimensionError("regulator solution: inconsistent dimensions");
  }
  RegulatorReport r;
  r.state_residual =
      max_abs((model.A - Mat::Identity(n, n)) * Pi + model.B * Gamma);
  r.output_residual = max_abs(model.C * Pi - R);
  r.rank_lhs = rank_of(repair_matrix(model, Gamma), tol.rank);
  r.rank_rhs = static_cast<int>(n) + gamma_rank(model, Gamma, tol);
  r.rank_condition = r.rank_lhs == r.rank_rhs;
  const double scale = std::max({1.0, max_abs(R), max_abs(Pi), max_abs(Gamma)});
  r.ok = r.rank_condition && r.state_residual <= tol.residual * scale &&
         r.output_residual <= tol.residual * scale;
  return r;
}

/// Removes directions of Gamma that break
/// rank [[A - I, B Gamma], [C, 0]] = n + rank(Gamma), one kernel direction
/// per pass. Each pass must lower rank(Gamma).
inline void repair_regulator(const AgentModel& model, RegulatorSolution& out,
                             Mat Pi, Mat Gamma, const Tolerances& tol = {}) {
  const auto n = model.n(), q = Gamma.cols();
  out.repair_passes = 0;
  out.gamma_rank_history.clear();
  int rank = gamma_rank(model, Gamma, tol);
  Gamma = truncate_rank(Gamma, rank);
  out.gamma_rank_history.push_back(rank);
  while (rank_of(repair_matrix(model, Gamma), tol.rank) < n + rank) {
    const Mat Kb = kernel_basis(repair_matrix(model, Gamma), tol.rank);
    // Pick the kernel direction along which Gamma v is largest, then drop the
    // ker(Gamma) part of v: (0, w) lies in the kernel for every w in ker(Gamma),
    // and only v in the row space of Gamma lowers rank(Gamma (I - v v^T)).
    const Mat Gv = Gamma * Kb.bottomRows(q);
    Eigen::JacobiSVD<Mat> svd(Gv, Eigen::ComputeFullV);
    Vec dir = Kb * svd.matrixV().col(0);
    const Mat rows = image_basis(Gamma.transpose(), tol.rank);
    dir.tail(q) = rows * (rows.transpose() * dir.tail(q));
    const double scale = dir.tail(q).norm();
    if (!(svd.singularValues()(0) > tol.rank.relative_epsilon *
                                        std::max(1.0, sigma_max(Gamma))) ||
        scale == 0.0) {
      throw SynthesisIntegrityError(
          "rank repair: no kernel direction with Gamma v != 0");
    }
    dir /= scale;
    const Vec x = dir.head(n);
    const Vec v = dir.tail(q);
    Pi -= x * v.transpose();
    Gamma = Gamma * (Mat::Identity(q, q) - v * v.transpose());
    const int next_rank = gamma_rank(model, Gamma, tol);
    if (next_rank >= rank) {
      throw SynthesisIntegrityError(
          "rank repair: rank(Gamma) failed to decrease");
    }
    rank = next_rank;
    Gamma = truncate_rank(Gamma, rank);
    out.gamma_rank_history.push_back(rank);
    ++out.repair_passes;
  }
  out.Pi = std::move(Pi);
  out.Gamma = std::move(Gamma);
}

/// Solves (A - I) Pi + B Gamma = 0, C Pi = R, then removes directions of
/// Gamma that break rank [[A - I, B Gamma], [C, 0]] = n + rank(Gamma).
inline RegulatorSolution solve_regulator(const AgentModel& model, const Mat& R,
                                         const Tolerances& tol = {}) {
  const auto n = model.n(), m = model.m(), p = model.p(), q = R.cols();
  if (R.rows() != p) throw DimensionError("solve_regulator: R must have p rows");
  RegulatorSolution out;
  out.R = R;
  if (q == 0) {
    out.Pi = Mat(n, 0);
    out.Gamma = Mat(m, 0);
    out.gamma_rank_history = {0};
    return out;
  }

  const Mat S = regulator_matrix(model);
  Mat rhs = Mat::Zero(n + p, q);
  rhs.bottomRows(p) = R;
  const Mat sol = lstsq(S, rhs, tol.rank);
  for (Eigen::Index j = 0; j < q; ++j) {
    const double dist = (S * sol.col(j) - rhs.col(j)).norm();
    if (dist > tol.membership * std::max(1.0, R.col(j).norm())) {
      std::ostringstream os;
      os << "reference column " << j << " is not an attainable equilibrium "
         << "output (distance " << dist << ")";
      throw InfeasibleReferenceError(os.str(), static_cast<int>(j), dist);
    }
  }
  repair_regulator(model, out, sol.topRows(n), sol.bottomRows(m), tol);

  const RegulatorReport rep = validate_regulator(model, R, out.Pi, out.Gamma, tol);
  if (!rep.ok) {
    std::ostringstream os;
    os << "regulator solution failed validation (residuals "
       << rep.state_residual << ", " << rep.output_residual << "; rank "
       << rep.rank_lhs << " vs " << rep.rank_rhs << ")";
    throw SynthesisIntegrityError(os.str());
  }
  return out;
}

/// Integrator precompensator
///   p(k+1) = p(k) + [0 I] v(k),  u(k) = Gamma1 p(k) + [Gamma2 0] v(k).
struct Precompensator {
  Mat Gamma1;  // m x v, injective, im Gamma1 = im Gamma
  Mat Gamma2;  // m x (m - v), [Gamma1 Gamma2] invertible
  Eigen::Index v() const { return Gamma1.cols(); }
};

inline Precompensator build_precompensator(const Mat& Gamma,
                                           const Tolerances& tol = {}) {
  return {image_basis(Gamma, tol.rank), cokernel_basis(Gamma, tol.rank)};
}

/// Accepts any (Gamma1, Gamma2) meeting the structural requirements, not
/// only the orthonormal construction.
inline bool validate_precompensator(const Mat& Gamma, const Precompensator& pre,
                                    const Tolerances& tol = {}) {
  const auto m = Gamma.rows();
  if (pre.Gamma1.rows() != m || pre.Gamma2.rows() != m ||
      pre.Gamma1.cols() + pre.Gamma2.cols() != m) {
    return false;
  }
  const int v = rank_of(Gamma, tol.rank);
  if (pre.v() != v || rank_of(pre.Gamma1, tol.rank) != v) return false;
  Mat both(m, Gamma.cols() + pre.Gamma1.cols());
  both << Gamma, pre.Gamma1;
  if (rank_of(both, tol.rank) != v) return false;
  Mat square(m, m);
  square << pre.Gamma1, pre.Gamma2;
  return rank_of(square, tol.rank) == m;
}

struct CompensatedModel {
  Mat Abar;   // (n+v) x (n+v)
  Mat Bbar;   // (n+v) x m
  Mat Cbar;   // p x (n+v)
  Mat W;      // v x q with Gamma1 W = Gamma
  Mat PiBar;  // (n+v) x q = [Pi; W]
};

/// Abar = [[A, B Gamma1], [0, I]], Bbar = [[B Gamma2, 0], [0, I]], Cbar = [C 0].
inline CompensatedModel compensated_matrices(const AgentModel& model,
                                             const Precompensator& pre) {
  const auto n = model.n(), m = model.m(), p = model.p(), v = pre.v();
  CompensatedModel c;
  c.Abar = Mat::Zero(n + v, n + v);
  c.Abar.topLeftCorner(n, n) = model.A;
  c.Abar.topRightCorner(n, v) = model.B * pre.Gamma1;
  c.Abar.bottomRightCorner(v, v).setIdentity();
  c.Bbar = Mat::Zero(n + v, m);
  c.Bbar.topLeftCorner(n, m - v) = model.B * pre.Gamma2;
  c.Bbar.bottomRightCorner(v, v).setIdentity();
  c.Cbar = Mat::Zero(p, n + v);
  c.Cbar.leftCols(n) = model.C;
  return c;
}

inline CompensatedModel compensate(const AgentModel& model,
                                   const Precompensator& pre,
                                   const RegulatorSolution& reg,
                                   const Tolerances& tol = {}) {
  const auto n = model.n(), v = pre.v(), q = reg.R.cols();
  if (pre.Gamma1.rows() != model.m() || reg.Gamma.rows() != model.m()) {
    throw DimensionError("compensate: precompensator does not match B");
  }
  CompensatedModel c = compensated_matrices(model, pre);
  c.W = lstsq(pre.Gamma1, reg.Gamma, tol.rank);
  if (v == 0) c.W = Mat(0, q);
  c.PiBar = Mat(n + v, q);
  c.PiBar << reg.Pi, c.W;

  const double scale = std::max({1.0, max_abs(c.PiBar), max_abs(reg.Gamma)});
  const double w_res = max_abs(pre.Gamma1 * c.W - reg.Gamma);
  const double fix_res = max_abs(c.Abar * c.PiBar - c.PiBar);
  const double out_res = max_abs(c.Cbar * c.PiBar - reg.R);
  if (w_res > tol.residual * scale || fix_res > tol.residual * scale ||
      out_res > tol.residual * scale) {
    std::ostringstream os;
    os << "compensated model: PiBar identities fail (Gamma1 W - Gamma: "
       << w_res << ", Abar PiBar - PiBar: " << fix_res
       << ", Cbar PiBar - R: " << out_res << ")";
    throw SynthesisIntegrityError(os.str());
  }
  if (!check_stabilizable(c.Abar, c.Bbar, tol)) {
    throw SynthesisIntegrityError("compensated pair (Abar, Bbar) not stabilizable");
  }
  if (!check_detectable(c.Abar, c.Cbar, tol)) {
    throw SynthesisIntegrityError("compensated pair (Abar, Cbar) not detectable");
  }
  return c;
}

struct GainPair {
  Mat K;  // m x (n+v)
  Mat F;  // (n+v) x p
};

struct GainRadii {
  double controller = 0.0;  // rho(Abar - Bbar K)
  double observer = 0.0;    // rho(Abar - F Cbar)
  bool ok() const { return controller < 1.0 && observer < 1.0; }
};

inline GainRadii gain_radii(const CompensatedModel& comp, const GainPair& g) {
  return {spectral_radius(Mat(comp.Abar - comp.Bbar * g.K)),
          spectral_radius(Mat(comp.Abar - g.F * comp.Cbar))};
}

inline GainPair design_gains(const CompensatedModel& comp,
                             const Tolerances& tol = {}) {
  GainPair g;
  g.K = design_stabilizing_gain(comp.Abar, comp.Bbar, tol.rank);
  g.F = design_stabilizing_gain(comp.Abar.transpose(), comp.Cbar.transpose(),
                                tol.rank)
            .transpose();
  return g;
}

struct SynthesisChecks {
  ModelChecks model;
  RegulatorReport regulator;
  bool precompensator_valid = false;
  bool compensated_stabilizable = false;
  bool compensated_detectable = false;
  GainRadii radii;
};

/// Everything an agent needs to run the protocol, plus the evidence that
/// each synthesis identity holds.
struct SynthesisResult {
  AgentModel model;
  Tolerances tol;
  Vec y_r;
  Vec z;  // R z = y_r
  RegulatorSolution reg;
  Precompensator pre;
  CompensatedModel comp;
  GainPair gains;
  SynthesisChecks checks;

  Eigen::Index n() const { return model.n(); }
  Eigen::Index m() const { return model.m(); }
  Eigen::Index p() const { return model.p(); }
  Eigen::Index v() const { return pre.v(); }
  Eigen::Index nbar() const { return model.n() + pre.v(); }
};

namespace internal {

inline Vec reference_coordinates(const Mat& R, const Vec& y_r,
                                 const Tolerances& tol) {
  Vec z = Vec::Zero(R.cols());
  if (R.cols() > 0) z = lstsq(R, y_r, tol.rank);
  const Vec res = R * z - y_r;
  const double dist = res.norm();
  if (dist > tol.membership * std::max(1.0, y_r.norm())) {
    Eigen::Index worst = 0;
    res.cwiseAbs().maxCoeff(&worst);
    std::ostringstream os;
    os << "reference y_r is not attainable: component " << worst + 1
       << " is off the attainable set (distance " << dist << ")";
    throw InfeasibleReferenceError(os.str(), static_cast<int>(worst), dist);
  }
  return z;
}

inline SynthesisChecks collect_checks(const SynthesisResult& s,
                                      const ModelChecks& model_checks) {
  SynthesisChecks c;
  c.model = model_checks;
  c.regulator = validate_regulator(s.model, s.reg.R, s.reg.Pi, s.reg.Gamma, s.tol);
  c.precompensator_valid = validate_precompensator(s.reg.Gamma, s.pre, s.tol);
  c.compensated_stabilizable = check_stabilizable(s.comp.Abar, s.comp.Bbar, s.tol);
  c.compensated_detectable = check_detectable(s.comp.Abar, s.comp.Cbar, s.tol);
  c.radii = gain_radii(s.comp, s.gains);
  return c;
}

}  // namespace internal

/// Builds a protocol from externally chosen parts (for instance reference
/// gains). The structural identities are verified; gains are only measured.
inline SynthesisResult assemble_protocol(const AgentModel& model, const Vec& y_r,
                                         RegulatorSolution reg,
                                         Precompensator pre, GainPair gains,
                                         const Tolerances& tol = {}) {
  if (y_r.size() != model.p()) {
    throw DimensionError("reference has wrong length");
  }
  SynthesisResult s{model, tol, y_r, Vec(), std::move(reg), std::move(pre),
                    {}, std::move(gains), {}};
  s.z = internal::reference_coordinates(s.reg.R, y_r, tol);
  s.comp = compensate(model, s.pre, s.reg, tol);
  const auto nbar = s.nbar();
  if (s.gains.K.rows() != model.m() || s.gains.K.cols() != nbar ||
      s.gains.F.rows() != nbar || s.gains.F.cols() != model.p()) {
    throw DimensionError("gain matrices do not match the compensated model");
  }
  s.checks = internal::collect_checks(s, check_model(model, tol));
  return s;
}

/// End-to-end synthesis from the agent model and the constant reference.
inline SynthesisResult synthesize(const AgentModel& model, const Vec& y_r,
                                  const Tolerances& tol = {}) {
  if (y_r.size() != model.p()) {
    std::ostringstream os;
    os << "reference has " << y_r.size() << " components, model has "
       << model.p() << " outputs";
    throw DimensionError(os.str());
  }
  require_finite(y_r, "y_r");
  const ModelChecks model_checks = require_valid_model(model, tol);
  const Mat R = model_checks.right_invertible_no_zero_at_one
                    ? Mat(Mat::Identity(model.p(), model.p()))
                    : compute_yr_basis(model, tol);
  SynthesisResult s;
  s.model = model;
  s.tol = tol;
  s.y_r = y_r;
  s.z = internal::reference_coordinates(R, y_r, tol);
  s.reg = solve_regulator(model, R, tol);
  s.pre = build_precompensator(s.reg.Gamma, tol);
  s.comp = compensate(model, s.pre, s.reg, tol);
  s.gains = design_gains(s.comp, tol);
  s.checks = internal::collect_checks(s, model_checks);
  if (!s.checks.radii.ok()) {
    throw SynthesisIntegrityError("designed gains are not Schur stabilizing");
  }
  return s;
}

}  // namespace delaysync
