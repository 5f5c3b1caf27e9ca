#pragma once

// CSV / JSON serialisation of traces, curves and reports. Doubles are written
// with 17 significant digits so that files round-trip exactly.

#include "ris/diagnostics.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace ris {

using json = nlohmann::json;

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes `content` to `path` through a temporary file and a rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

inline std::string vec_header(const char* prefix, Eigen::Index n) {
  std::string h;
  for (Eigen::Index j = 0; j < n; ++j) h += std::string(",") + prefix + "_" + std::to_string(j);
  return h;
}

inline void put_vec(std::string& line, const Vec& v) {
  for (Eigen::Index j = 0; j < v.size(); ++j) line += "," + fmt_double(v[j]);
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw TraceError("malformed number '" + s + "'");
  }
}

inline int parse_int(const std::string& s) {
  try {
    size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw TraceError("malformed integer '" + s + "'");
  }
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  size_t col(const std::string& name) const {
    for (size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return j;
    }
    throw TraceError("missing column '" + name + "'");
  }
  Eigen::Index count_prefix(const std::string& prefix) const {
    Eigen::Index n = 0;
    while (std::find(header.begin(), header.end(), prefix + "_" + std::to_string(n)) != header.end()) ++n;
    return n;
  }
  Vec vec(const std::vector<std::string>& row, const std::string& prefix, Eigen::Index n) const {
    Vec v(n);
    for (Eigen::Index j = 0; j < n; ++j) v[j] = parse_double(row[col(prefix + "_" + std::to_string(j))]);
    return v;
  }
};

inline Table parse_csv(const std::string& text) {
  Table t;
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line)) throw TraceError("empty CSV");
  t.header = split(line);
  while (std::getline(ss, line)) {
    if (line.empty() || line == "\r") continue;
    auto row = split(line);
    if (row.size() != t.header.size()) throw TraceError("CSV row has wrong number of fields");
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace detail

/// Columns: k,i,t,z_0..,u_0..,lambda,innerIters,energy
inline std::string trace_to_csv(const RunTrace& tr) {
  const Eigen::Index nz = tr.nodes.empty() ? 0 : tr.nodes.front().z.size();
  const Eigen::Index nu = tr.nodes.empty() ? 0 : tr.nodes.front().u.size();
  std::string out = "k,i,t" + detail::vec_header("z", nz) + detail::vec_header("u", nu) + ",lambda,innerIters,energy\n";
  for (const auto& n : tr.nodes) {
    std::string line = std::to_string(n.k) + "," + std::to_string(n.i) + "," + fmt_double(n.t);
    detail::put_vec(line, n.z);
    detail::put_vec(line, n.u);
    line += "," + fmt_double(n.lambda) + "," + std::to_string(n.innerIters) + "," + fmt_double(n.energy) + "\n";
    out += line;
  }
  return out;
}

/// Reads the node columns back; sigmaBar and dissIncrement are recomputed from z.
inline RunTrace trace_from_csv(const std::string& text, const SchemeConfig& cfg, double T, const Dissipation& d,
                               const Metric& mV) {
  const auto tab = detail::parse_csv(text);
  const Eigen::Index nz = tab.count_prefix("z");
  const Eigen::Index nu = tab.count_prefix("u");
  if (nz == 0) throw TraceError("trace has no state columns");
  RunTrace tr;
  tr.kind = cfg.kind;
  tr.config = cfg;
  tr.tFinal = T;
  for (const auto& row : tab.rows) {
    TraceNode n;
    n.k = detail::parse_int(row[tab.col("k")]);
    n.i = detail::parse_int(row[tab.col("i")]);
    n.t = detail::parse_double(row[tab.col("t")]);
    n.z = tab.vec(row, "z", nz);
    if (nu > 0) n.u = tab.vec(row, "u", nu);
    n.lambda = detail::parse_double(row[tab.col("lambda")]);
    n.innerIters = detail::parse_int(row[tab.col("innerIters")]);
    n.energy = detail::parse_double(row[tab.col("energy")]);
    if (!tr.nodes.empty()) {
      const Vec dz = n.z - tr.nodes.back().z;
      n.sigmaBar = mV.norm(dz);
      n.dissIncrement = eval_R(d, dz);
    }
    tr.nodes.push_back(std::move(n));
  }
  return tr;
}

/// Columns: k,i,s,t,z_0..,u_0..,segKind,sigmaBar,lambda. Segment fields sit on
/// the segment's right node; the first row leaves segKind empty.
inline std::string curve_to_csv(const ParametrizedCurve& c) {
  const Eigen::Index nz = c.z.empty() ? 0 : c.z.front().size();
  const Eigen::Index nu = c.has_u() ? c.u.front().size() : 0;
  std::string out =
      "k,i,s,t" + detail::vec_header("z", nz) + detail::vec_header("u", nu) + ",segKind,sigmaBar,lambda\n";
  for (size_t j = 0; j < c.nodes(); ++j) {
    std::string line = std::to_string(c.k[j]) + "," + std::to_string(c.i[j]) + "," + fmt_double(c.s[j]) + "," +
                       fmt_double(c.t[j]);
    detail::put_vec(line, c.z[j]);
    if (c.has_u()) detail::put_vec(line, c.u[j]);
    if (j == 0) {
      line += ",,0,0\n";
    } else {
      line += std::string(",") + to_string(c.segKind[j - 1]) + "," + fmt_double(c.sigmaBar[j - 1]) + "," +
              fmt_double(c.lambda[j - 1]) + "\n";
    }
    out += line;
  }
  return out;
}

/// Node and segment arrays only; run metadata is left at defaults.
inline ParametrizedCurve curve_from_csv(const std::string& text) {
  const auto tab = detail::parse_csv(text);
  const Eigen::Index nz = tab.count_prefix("z");
  const Eigen::Index nu = tab.count_prefix("u");
  if (nz == 0) throw TraceError("curve has no state columns");
  ParametrizedCurve c;
  c.metricKind = nu > 0 ? CurveMetric::UplusV : CurveMetric::V;
  for (size_t j = 0; j < tab.rows.size(); ++j) {
    const auto& row = tab.rows[j];
    c.k.push_back(detail::parse_int(row[tab.col("k")]));
    c.i.push_back(detail::parse_int(row[tab.col("i")]));
    c.s.push_back(detail::parse_double(row[tab.col("s")]));
    c.t.push_back(detail::parse_double(row[tab.col("t")]));
    c.z.push_back(tab.vec(row, "z", nz));
    if (nu > 0) c.u.push_back(tab.vec(row, "u", nu));
    if (j > 0) {
      c.segKind.push_back(segkind_from_string(row[tab.col("segKind")]));
      c.sigmaBar.push_back(detail::parse_double(row[tab.col("sigmaBar")]));
      c.lambda.push_back(detail::parse_double(row[tab.col("lambda")]));
    }
  }
  c.validate();
  return c;
}

inline json to_json(const DiagnosticsReport& r) {
  return json{{"energyResidual", r.energyResidual},
              {"remainderIntegral", r.remainderIntegral},
              {"complementarityIntegral", r.complementarityIntegral},
              {"dissTotal", r.dissTotal},
              {"viscousDissTotal", r.viscousDissTotal},
              {"maxStationarityAtNodes", r.maxStationarityAtNodes},
              {"etaDeltaProduct", r.etaDeltaProduct},
              {"S", r.S},
              {"loadWork", r.loadWork},
              {"uWork", r.uWork},
              {"initialEnergy", r.initialEnergy},
              {"finalEnergy", r.finalEnergy},
              {"initialDefect", r.initialDefect},
              {"innerTol", r.innerTol},
              {"quadratureOrder", r.quadratureOrder},
              {"segments", r.segments},
              {"degenerateSegments", r.degenerateSegments},
              {"steps", r.steps}};
}

inline json to_json(const FixedEtaReport& r) {
  return json{{"complementarityRight", r.complementarityRight},
              {"crossTerm", r.crossTerm},
              {"timeGapIntegral", r.timeGapIntegral},
              {"stateGapIntegral", r.stateGapIntegral},
              {"fixedEtaEnergyResidual", r.energyResidual}};
}

inline json to_json(const BVClassification& c) {
  json per = json::object();
  for (const auto& [k, v] : c.perCondition) per[k] = v;
  return json{{"isParametrizedSolution", c.isParametrizedSolution},
              {"worstViolation", c.worstViolation},
              {"degenerateSegments", c.degenerateSegments},
              {"perCondition", per}};
}

/// Indented JSON; doubles keep full precision.
inline std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

}  // namespace ris
