#pragma once

// File formats: agent model, graph and protocol JSON; trajectory CSV;
// scan reports; a minimal SVG plot.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "delaysync/errors.hpp"
#include "delaysync/graph.hpp"
#include "delaysync/plant.hpp"
#include "delaysync/sim.hpp"
#include "delaysync/verify.hpp"

namespace delaysync::io {

using nlohmann::json;

class FormatError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Scalars and matrices

/// Shortest decimal form that round-trips the double exactly.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline json to_json(const Mat& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline double read_number(const json& j, const std::string& what) {
  if (!j.is_number()) throw FormatError(what + ": expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw FormatError(what + ": non-finite value");
  return x;
}

/// Nested row arrays; a bare number reads as 1x1. A negative hint means the
/// dimension is taken from the data. Hints also size empty matrices.
inline Mat read_mat(const json& j, const std::string& name, Eigen::Index rows = -1,
                    Eigen::Index cols = -1) {
  Mat M;
  if (j.is_number()) {
    M = Mat::Constant(1, 1, read_number(j, name));
  } else {
    if (!j.is_array()) throw FormatError(name + ": expected an array of rows");
    const auto r = static_cast<Eigen::Index>(j.size());
    Eigen::Index c = -1;
    for (const auto& row : j) {
      if (!row.is_array()) throw FormatError(name + ": each row must be an array");
      if (c < 0) c = static_cast<Eigen::Index>(row.size());
      if (static_cast<Eigen::Index>(row.size()) != c) {
        throw FormatError(name + ": ragged rows");
      }
    }
    if (r == 0) {
      M = Mat(rows < 0 ? 0 : rows, cols < 0 ? 0 : cols);
      if (M.size() != 0) throw FormatError(name + ": unexpected empty matrix");
      return M;
    }
    M = Mat(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index k = 0; k < c; ++k) {
        M(i, k) = read_number(j[i][k], name);
      }
    }
    if (c == 0 && cols > 0) throw FormatError(name + ": unexpected empty rows");
    if (c == 0) M = Mat(r, 0);
  }
  if ((rows >= 0 && M.rows() != rows) || (cols >= 0 && M.cols() != cols)) {
    std::ostringstream os;
    os << name << ": expected " << rows << "x" << cols << ", got " << M.rows()
       << "x" << M.cols();
    throw FormatError(os.str());
  }
  return M;
}

inline Vec read_vec(const json& j, const std::string& name, Eigen::Index size = -1) {
  Vec v;
  if (j.is_number()) {
    v = Vec::Constant(1, read_number(j, name));
  } else {
    if (!j.is_array()) throw FormatError(name + ": expected an array");
    v = Vec(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = read_number(j[i], name);
  }
  if (size >= 0 && v.size() != size) {
    throw FormatError(name + ": expected " + std::to_string(size) + " entries");
  }
  return v;
}

inline const json& field(const json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key)) {
    throw FormatError("missing field '" + key + "'");
  }
  return j.at(key);
}

inline json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << text;
}

// ---------------------------------------------------------------------------
// Agent model: {"A": [[...]], "B": [[...]], "C": [[...]]}

inline AgentModel model_from_json(const json& j) {
  try {
    return AgentModel::make(read_mat(field(j, "A"), "A"), read_mat(field(j, "B"), "B"),
                            read_mat(field(j, "C"), "C"));
  } catch (const DimensionError& e) {
    throw FormatError(e.what());
  }
}

inline json model_to_json(const AgentModel& m) {
  return {{"A", to_json(m.A)}, {"B", to_json(m.B)}, {"C", to_json(m.C)}};
}

// ---------------------------------------------------------------------------
// Graph: {"N": int, "edges": [{"from": j, "to": i, "weight": w, "delay": k}],
//         "roots": [i, ...]}, 1-based node indices.

inline NetworkSpec network_from_json(const json& j) {
  const json& jn = field(j, "N");
  if (!jn.is_number_integer() || jn.get<long>() < 1) {
    throw FormatError("N must be a positive integer");
  }
  const auto N = static_cast<Eigen::Index>(jn.get<long>());
  Mat a = Mat::Zero(N, N);
  DelayMatrix kappa = DelayMatrix::Zero(N, N);
  auto node = [&](const json& v, const char* what) {
    if (!v.is_number_integer()) throw FormatError(std::string(what) + " must be an integer");
    const long idx = v.get<long>();
    if (idx < 1 || idx > N) {
      throw FormatError(std::string(what) + " index " + std::to_string(idx) +
                        " out of range 1.." + std::to_string(N));
    }
    return static_cast<Eigen::Index>(idx - 1);
  };
  const json& je = j.contains("edges") ? j.at("edges") : json::array();
  if (!je.is_array()) throw FormatError("edges must be an array");
  for (const auto& e : je) {
    const auto from = node(field(e, "from"), "from");
    const auto to = node(field(e, "to"), "to");
    if (from == to) throw FormatError("self loop on node " + std::to_string(from + 1));
    const double w = e.contains("weight") ? read_number(e.at("weight"), "weight") : 1.0;
    if (!(w > 0.0)) throw FormatError("edge weights must be positive");
    long d = 0;
    if (e.contains("delay")) {
      if (!e.at("delay").is_number_integer()) {
        throw FormatError("delay must be a nonnegative integer");
      }
      d = e.at("delay").get<long>();
      if (d < 0) throw FormatError("delay must be a nonnegative integer");
    }
    if (a(to, from) != 0.0) {
      throw FormatError("duplicate edge " + std::to_string(from + 1) + " -> " +
                        std::to_string(to + 1));
    }
    a(to, from) = w;
    kappa(to, from) = static_cast<int>(d);
  }
  std::vector<int> roots;
  const json& jr = j.contains("roots") ? j.at("roots") : json::array();
  if (!jr.is_array()) throw FormatError("roots must be an array");
  for (const auto& r : jr) roots.push_back(static_cast<int>(node(r, "root")));
  try {
    return NetworkSpec::make(WeightedDigraph::make(std::move(a)), std::move(roots),
                             std::move(kappa));
  } catch (const DimensionError& e) {
    throw FormatError(e.what());
  }
}

inline json network_to_json(const NetworkSpec& net) {
  json es = json::array();
  for (const Edge& e : edges(net.graph)) {
    es.push_back({{"from", e.from + 1},
                  {"to", e.to + 1},
                  {"weight", e.weight},
                  {"delay", net.kappa(e.to, e.from)}});
  }
  json roots = json::array();
  for (int r : net.roots) roots.push_back(r + 1);
  return {{"N", net.size()}, {"edges", es}, {"roots", roots}};
}

// ---------------------------------------------------------------------------
// Protocol (synthesis result)

inline json tolerances_to_json(const Tolerances& t) {
  return {{"rank", t.rank.relative_epsilon},
          {"membership", t.membership},
          {"residual", t.residual},
          {"unit_circle", t.unit_circle}};
}

inline json protocol_to_json(const SynthesisResult& s) {
  const auto& c = s.checks;
  return {
      {"format", "delaysync-protocol"},
      {"version", 1},
      {"model", model_to_json(s.model)},
      {"y_r", to_json(s.y_r)},
      {"z", to_json(s.z)},
      {"regulator",
       {{"R", to_json(s.reg.R)},
        {"Pi", to_json(s.reg.Pi)},
        {"Gamma", to_json(s.reg.Gamma)},
        {"repair_passes", s.reg.repair_passes}}},
      {"precompensator",
       {{"v", s.v()}, {"Gamma1", to_json(s.pre.Gamma1)}, {"Gamma2", to_json(s.pre.Gamma2)}}},
      {"compensated",
       {{"Abar", to_json(s.comp.Abar)},
        {"Bbar", to_json(s.comp.Bbar)},
        {"Cbar", to_json(s.comp.Cbar)},
        {"W", to_json(s.comp.W)},
        {"PiBar", to_json(s.comp.PiBar)}}},
      {"gains", {{"K", to_json(s.gains.K)}, {"F", to_json(s.gains.F)}}},
      {"tolerances", tolerances_to_json(s.tol)},
      {"checks",
       {{"assumption1",
         {{"ok", c.model.assumption1.ok},
          {"worst_modulus", c.model.assumption1.worst_modulus}}},
        {"stabilizable", c.model.stabilizable},
        {"detectable", c.model.detectable},
        {"right_invertible_no_zero_at_one", c.model.right_invertible_no_zero_at_one},
        {"regulator",
         {{"ok", c.regulator.ok},
          {"state_residual", c.regulator.state_residual},
          {"output_residual", c.regulator.output_residual},
          {"rank_condition", c.regulator.rank_condition}}},
        {"precompensator_valid", c.precompensator_valid},
        {"compensated_stabilizable", c.compensated_stabilizable},
        {"compensated_detectable", c.compensated_detectable},
        {"controller_radius", c.radii.controller},
        {"observer_radius", c.radii.observer}}},
  };
}

/// Rebuilds and re-verifies a protocol. Stored compensated matrices must
/// agree with the ones implied by the model and precompensator.
inline SynthesisResult protocol_from_json(const json& j) {
  const AgentModel model = model_from_json(field(j, "model"));
  const auto n = model.n(), m = model.m(), p = model.p();
  Tolerances tol;
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    if (t.contains("rank")) tol.rank = RankTolerance(read_number(t.at("rank"), "rank"));
    if (t.contains("membership")) tol.membership = read_number(t.at("membership"), "membership");
    if (t.contains("residual")) tol.residual = read_number(t.at("residual"), "residual");
    if (t.contains("unit_circle")) tol.unit_circle = read_number(t.at("unit_circle"), "unit_circle");
  }
  const Vec y_r = read_vec(field(j, "y_r"), "y_r", p);
  const json& jreg = field(j, "regulator");
  RegulatorSolution reg;
  reg.R = read_mat(field(jreg, "R"), "R", p);
  const auto q = reg.R.cols();
  reg.Pi = read_mat(field(jreg, "Pi"), "Pi", n, q);
  reg.Gamma = read_mat(field(jreg, "Gamma"), "Gamma", m, q);
  const json& jpre = field(j, "precompensator");
  Precompensator pre;
  pre.Gamma1 = read_mat(field(jpre, "Gamma1"), "Gamma1", m);
  pre.Gamma2 = read_mat(field(jpre, "Gamma2"), "Gamma2", m, m - pre.Gamma1.cols());
  const auto nbar = n + pre.Gamma1.cols();
  const json& jg = field(j, "gains");
  GainPair gains{read_mat(field(jg, "K"), "K", m, nbar),
                 read_mat(field(jg, "F"), "F", nbar, p)};
  SynthesisResult s = [&] {
    try {
      return assemble_protocol(model, y_r, std::move(reg), std::move(pre),
                               std::move(gains), tol);
    } catch (const DimensionError& e) {
      throw FormatError(e.what());
    }
  }();
  if (j.contains("compensated")) {
    const json& jc = j.at("compensated");
    const double drift = std::max(
        {max_abs(read_mat(field(jc, "Abar"), "Abar", nbar, nbar) - s.comp.Abar),
         max_abs(read_mat(field(jc, "Bbar"), "Bbar", nbar, m) - s.comp.Bbar),
         max_abs(read_mat(field(jc, "Cbar"), "Cbar", p, nbar) - s.comp.Cbar)});
    if (drift > 1e-9) {
      throw FormatError("stored compensated model disagrees with model and precompensator");
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Trajectory CSV: k,agent,x1..xn,p1..pv,y1..yp,sync_error,reg_error

inline std::string trajectory_csv_header(Eigen::Index n, Eigen::Index v, Eigen::Index p) {
  std::string h = "k,agent";
  for (Eigen::Index i = 1; i <= n; ++i) h += ",x" + std::to_string(i);
  for (Eigen::Index i = 1; i <= v; ++i) h += ",p" + std::to_string(i);
  for (Eigen::Index i = 1; i <= p; ++i) h += ",y" + std::to_string(i);
  h += ",sync_error,reg_error";
  return h;
}

inline std::string trajectory_csv(const Trajectory& traj, Eigen::Index n,
                                  Eigen::Index v, Eigen::Index p) {
  std::string out = trajectory_csv_header(n, v, p);
  out += '\n';
  for (const auto& rec : traj.records) {
    const std::string tail = "," + format_double(rec.metrics.sync_error) + "," +
                             format_double(rec.metrics.reg_error) + "\n";
    for (std::size_t a = 0; a < rec.agents.size(); ++a) {
      out += std::to_string(rec.k) + "," + std::to_string(a + 1);
      const auto& ag = rec.agents[a];
      for (Eigen::Index i = 0; i < ag.x.size(); ++i) out += "," + format_double(ag.x(i));
      for (Eigen::Index i = 0; i < ag.p.size(); ++i) out += "," + format_double(ag.p(i));
      for (Eigen::Index i = 0; i < rec.y[a].size(); ++i) {
        out += "," + format_double(rec.y[a](i));
      }
      out += tail;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

inline json nullable(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json scan_report_to_json(const ScanReport& r) {
  return {{"passed", r.passed},
          {"grid", r.omega_grid_size},
          {"samples", r.samples},
          {"min_margin", nullable(r.min_margin)},
          {"threshold", r.threshold},
          {"worst_point", {{"omega", r.worst_omega}, {"sample", r.worst_sample}}},
          {"precondition_failed", r.precondition_failed},
          {"message", r.message}};
}

inline json delay_free_to_json(const DelayFreeReport& r) {
  return {{"passed", r.passed},
          {"spectral_radius", r.spectral_radius},
          {"controller_radius", r.controller_radius},
          {"coupling_radius", r.coupling_radius}};
}

inline json lemma2_to_json(const Lemma2Report& r) {
  return {{"passed", r.passed},
          {"beta", r.beta},
          {"max_modulus", r.max_modulus},
          {"worst_omega", r.worst_omega}};
}

// ---------------------------------------------------------------------------
// SVG: outputs y_i(k) on top, log10 sync_error(k) below.

inline std::string trajectory_svg(const Trajectory& traj) {
  constexpr double W = 800, H = 600, pad = 50, gap = 40;
  const double panel_h = (H - 2 * pad - gap) / 2;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (traj.records.empty()) {
    os << "</svg>\n";
    return os.str();
  }
  const double k0 = static_cast<double>(traj.records.front().k);
  const double k1 = std::max(k0 + 1, static_cast<double>(traj.records.back().k));
  auto xpos = [&](double k) { return pad + (k - k0) / (k1 - k0) * (W - 2 * pad); };

  double ylo = 0, yhi = 0;
  bool first = true;
  for (const auto& r : traj.records) {
    for (const auto& y : r.y) {
      for (Eigen::Index c = 0; c < y.size(); ++c) {
        if (first) ylo = yhi = y(c);
        first = false;
        ylo = std::min(ylo, y(c));
        yhi = std::max(yhi, y(c));
      }
    }
  }
  if (yhi - ylo < 1e-12) { yhi += 1; ylo -= 1; }
  auto ypos = [&](double y) { return pad + (yhi - y) / (yhi - ylo) * panel_h; };

  const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  const std::size_t agents = traj.records.front().y.size();
  const Eigen::Index outs = agents ? traj.records.front().y[0].size() : 0;
  for (std::size_t a = 0; a < agents; ++a) {
    for (Eigen::Index c = 0; c < outs; ++c) {
      os << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" << palette[a % 10]
         << "\" points=\"";
      for (const auto& r : traj.records) os << xpos(r.k) << "," << ypos(r.y[a](c)) << " ";
      os << "\"/>\n";
    }
  }
  os << "<text x=\"" << pad << "\" y=\"" << pad - 10 << "\" font-size=\"14\">outputs y_i(k)</text>\n";

  const double top2 = pad + panel_h + gap;
  double elo = 0, ehi = 0;
  first = true;
  for (const auto& r : traj.records) {
    const double e = std::log10(std::max(r.metrics.sync_error, 1e-16));
    if (first) elo = ehi = e;
    first = false;
    elo = std::min(elo, e);
    ehi = std::max(ehi, e);
  }
  if (ehi - elo < 1e-12) { ehi += 1; elo -= 1; }
  os << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"black\" points=\"";
  for (const auto& r : traj.records) {
    const double e = std::log10(std::max(r.metrics.sync_error, 1e-16));
    os << xpos(r.k) << "," << top2 + (ehi - e) / (ehi - elo) * panel_h << " ";
  }
  os << "\"/>\n<text x=\"" << pad << "\" y=\"" << top2 - 10
     << "\" font-size=\"14\">log10 sync_error(k)</text>\n</svg>\n";
  return os.str();
}

}  // namespace delaysync::io
