#pragma once

// Arc-length parametrised interpolants (t̂, ẑ[, û]) built from a RunTrace.
// Nodes carry (s, t, z[, u]); segment j joins node j and node j+1 affinely.

#include "ris/schemes.hpp"

#include <optional>
#include <vector>

namespace ris {

enum class SegKind { TimeUpdate, StateUpdate, Mixed };
enum class CurveMetric { V, Z, UplusV };

inline const char* to_string(SegKind k) {
  switch (k) {
    case SegKind::TimeUpdate: return "time";
    case SegKind::StateUpdate: return "state";
    case SegKind::Mixed: return "mixed";
  }
  return "?";
}

inline SegKind segkind_from_string(const std::string& s) {
  if (s == "time") return SegKind::TimeUpdate;
  if (s == "state") return SegKind::StateUpdate;
  if (s == "mixed") return SegKind::Mixed;
  throw TraceError("unknown segment kind '" + s + "'");
}

inline const char* to_string(CurveMetric k) {
  switch (k) {
    case CurveMetric::V: return "V";
    case CurveMetric::Z: return "Z";
    case CurveMetric::UplusV: return "U+V";
  }
  return "?";
}

struct ParametrizedCurve {
  // per node
  std::vector<double> s;
  std::vector<double> t;
  std::vector<Vec> z;
  std::vector<Vec> u;  // empty unless UplusV
  std::vector<int> k;
  std::vector<int> i;
  // per segment
  std::vector<SegKind> segKind;
  std::vector<double> sigmaBar;
  std::vector<double> lambda;

  CurveMetric metricKind = CurveMetric::V;
  std::optional<SchemeKind> scheme;  // empty for analytic curves
  double eta = 0.0;
  double tau = 0.0;
  double h = 0.0;
  double delta = 0.0;
  double innerTol = 0.0;
  double tFinal = 0.0;
  bool completed = true;
  std::vector<int> innerCounts;  // M_k, indexed by k

  size_t nodes() const { return s.size(); }
  size_t segments() const { return s.empty() ? 0 : s.size() - 1; }
  double S() const { return s.empty() ? 0.0 : s.back(); }
  bool has_u() const { return !u.empty(); }

  void validate() const {
    const size_t n = s.size();
    if (n == 0) throw TraceError("curve has no nodes");
    if (t.size() != n || z.size() != n || k.size() != n || i.size() != n || (has_u() && u.size() != n)) {
      throw TraceError("curve node arrays have inconsistent lengths");
    }
    if (segKind.size() != n - 1 || sigmaBar.size() != n - 1 || lambda.size() != n - 1) {
      throw TraceError("curve segment arrays have inconsistent lengths");
    }
    if (s.front() != 0.0) throw TraceError("curve must start at s = 0");
    for (size_t j = 0; j + 1 < n; ++j) {
      if (!(s[j + 1] > s[j])) throw TraceError("curve s must be strictly increasing");
      if (t[j + 1] < t[j]) throw TraceError("curve t must be nondecreasing");
    }
  }
};

namespace detail {

struct CurveBuilder {
  ParametrizedCurve c;

  void start(double t, const Vec& z, const Vec* u) {
    c.s.push_back(0.0);
    c.t.push_back(t);
    c.z.push_back(z);
    if (u) c.u.push_back(*u);
    c.k.push_back(0);
    c.i.push_back(0);
  }

  void add(double ds, double t, const Vec& z, const Vec* u, int k, int i, SegKind kind, double sigma,
           double lambda) {
    c.s.push_back(c.s.back() + ds);
    c.t.push_back(t);
    c.z.push_back(z);
    if (u) c.u.push_back(*u);
    c.k.push_back(k);
    c.i.push_back(i);
    c.segKind.push_back(kind);
    c.sigmaBar.push_back(sigma);
    c.lambda.push_back(lambda);
  }
};

inline void copy_run_info(ParametrizedCurve& c, const RunTrace& tr) {
  c.scheme = tr.kind;
  c.eta = tr.config.effective_eta(tr.tFinal);
  c.tau = tr.config.N > 0 ? tr.tFinal / tr.config.N : 0.0;
  c.h = tr.config.h;
  c.delta = tr.config.delta;
  c.innerTol = tr.config.inner.tol;
  c.tFinal = tr.tFinal;
  c.completed = tr.terminated == Termination::ReachedT;
  c.innerCounts = tr.inner_counts();
}

inline void require_trace(const RunTrace& tr) {
  if (tr.nodes.empty()) throw TraceError("empty trace");
  const auto& n0 = tr.nodes.front();
  if (n0.k != 0 || n0.i != 0 || n0.t != 0.0) throw TraceError("trace must start with node (0,0,t=0)");
  for (size_t j = 1; j < tr.nodes.size(); ++j) {
    const auto& a = tr.nodes[j - 1];
    const auto& b = tr.nodes[j];
    if (b.z.size() != n0.z.size()) throw TraceError("trace state dimension changes");
    if (b.t < a.t) throw TraceError("trace times decrease");
    if (b.k < a.k || b.k > a.k + 1) throw TraceError("trace step index not consecutive");
    if (b.k == a.k && b.i != a.i + 1) throw TraceError("trace inner index not consecutive");
    if (b.k == a.k + 1 && b.i != 1) throw TraceError("trace inner index must restart at 1");
  }
}

}  // namespace detail

/// Local minimisation: segment k joins (t_{k-1}, z_{k-1}) and (t_k, z_k) with
/// Δs = Δt + ‖Δz‖_V, which equals h except on a final step capped at T.
inline ParametrizedCurve parametrize_local_min(const RunTrace& tr, const Metric& m) {
  if (tr.kind != SchemeKind::LocalMin) throw KindError("parametrize_local_min: trace is not LocalMin");
  detail::require_trace(tr);
  detail::CurveBuilder b;
  b.start(0.0, tr.nodes.front().z, nullptr);
  for (size_t j = 1; j < tr.nodes.size(); ++j) {
    const auto& a = tr.nodes[j - 1];
    const auto& n = tr.nodes[j];
    if (n.i != 1) throw TraceError("LocalMin trace has inner nodes");
    const double dt = n.t - a.t;
    const double dz = m.norm(n.z - a.z);
    const double ds = dt + dz;
    if (ds <= 0.0) continue;
    const SegKind kind = dz == 0.0 ? SegKind::TimeUpdate : (dt == 0.0 ? SegKind::StateUpdate : SegKind::Mixed);
    b.add(ds, n.t, n.z, nullptr, n.k, n.i, kind, ds, n.lambda);
  }
  b.c.metricKind = CurveMetric::V;
  detail::copy_run_info(b.c, tr);
  return b.c;
}

/// Relaxed family (also Viscous, ViscoEnergetic, GlobalIncremental): each step
/// contributes a time segment of length τ and then one state segment per
/// nonzero inner increment, of length ‖Δz‖ in `m` (V, or Z when zNorm).
inline ParametrizedCurve parametrize_relaxed(const RunTrace& tr, const Metric& m, bool zNorm = false) {
  switch (tr.kind) {
    case SchemeKind::RelaxedLocalMin:
    case SchemeKind::Viscous:
    case SchemeKind::ViscoEnergetic:
    case SchemeKind::GlobalIncremental: break;
    default: throw KindError("parametrize_relaxed: unsupported trace kind");
  }
  if (zNorm && m.kind() != MetricKind::Z) throw ParameterError("parametrize_relaxed: zNorm requires a Z metric");
  detail::require_trace(tr);
  detail::CurveBuilder b;
  detail::copy_run_info(b.c, tr);
  const double eta = b.c.eta;
  b.start(0.0, tr.nodes.front().z, nullptr);
  for (size_t j = 1; j < tr.nodes.size(); ++j) {
    const auto& a = tr.nodes[j - 1];
    const auto& n = tr.nodes[j];
    if (n.i == 1) {
      const double dt = n.t - a.t;
      if (dt > 0.0) b.add(dt, n.t, a.z, nullptr, n.k, 0, SegKind::TimeUpdate, dt, 0.0);
    }
    const double sigma = m.norm(n.z - a.z);
    if (sigma > 0.0) b.add(sigma, n.t, n.z, nullptr, n.k, n.i, SegKind::StateUpdate, sigma, eta * sigma);
  }
  b.c.metricKind = zNorm ? CurveMetric::Z : CurveMetric::V;
  return b.c;
}

/// Alternate minimisation: state segments have length ‖Δu‖_U + ‖Δz‖_V; a
/// segment with Δz = 0 but Δu ≠ 0 is kept.
inline ParametrizedCurve parametrize_alternate(const RunTrace& tr, const Metric& mV, const Metric& mU) {
  if (tr.kind != SchemeKind::AlternateMin) throw KindError("parametrize_alternate: trace is not AlternateMin");
  detail::require_trace(tr);
  for (const auto& n : tr.nodes) {
    if (n.u.size() != mU.dim()) throw TraceError("AlternateMin trace lacks u states");
  }
  detail::CurveBuilder b;
  detail::copy_run_info(b.c, tr);
  const double eta = b.c.eta;
  b.start(0.0, tr.nodes.front().z, &tr.nodes.front().u);
  for (size_t j = 1; j < tr.nodes.size(); ++j) {
    const auto& a = tr.nodes[j - 1];
    const auto& n = tr.nodes[j];
    if (n.i == 1) {
      const double dt = n.t - a.t;
      if (dt > 0.0) b.add(dt, n.t, a.z, &a.u, n.k, 0, SegKind::TimeUpdate, dt, 0.0);
    }
    const double sigma = mU.norm(n.u - a.u) + mV.norm(n.z - a.z);
    if (sigma > 0.0) b.add(sigma, n.t, n.z, &n.u, n.k, n.i, SegKind::StateUpdate, sigma, eta * sigma);
  }
  b.c.metricKind = CurveMetric::UplusV;
  return b.c;
}

struct TimeGraphPoint {
  double t = 0.0;
  Vec zFirst;  // ẑ at the first s with t̂(s) = t
  Vec zLast;   // ẑ at the last such s
};

/// Inverts t̂: for each query time, the states at the first and last arc
/// length with that time (equal unless the curve jumps there).
inline std::vector<TimeGraphPoint> reconstruct_time_graph(const ParametrizedCurve& c,
                                                          const std::vector<double>& tGrid) {
  c.validate();
  const double t_end = c.t.back();
  std::vector<TimeGraphPoint> out;
  out.reserve(tGrid.size());
  const size_t n = c.nodes();
  auto lerp = [&](size_t j, double t) -> Vec {
    const double span = c.t[j + 1] - c.t[j];
    const double a = span > 0.0 ? (t - c.t[j]) / span : 0.0;
    return c.z[j] + a * (c.z[j + 1] - c.z[j]);
  };
  for (double tq : tGrid) {
    if (!(tq >= c.t.front() && tq <= t_end)) {
      throw TimeDomainError("reconstruct_time_graph: t outside [0, t(S)]");
    }
    TimeGraphPoint p;
    p.t = tq;
    // first node with t >= tq
    const auto first = static_cast<size_t>(std::lower_bound(c.t.begin(), c.t.end(), tq) - c.t.begin());
    p.zFirst = (c.t[first] == tq || first == 0) ? c.z[first] : lerp(first - 1, tq);
    // last node with t <= tq
    const auto after = static_cast<size_t>(std::upper_bound(c.t.begin(), c.t.end(), tq) - c.t.begin());
    const size_t last = after - 1;
    p.zLast = (c.t[last] == tq || last + 1 >= n) ? c.z[last] : lerp(last, tq);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace ris
