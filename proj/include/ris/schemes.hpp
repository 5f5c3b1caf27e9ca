#pragma once

// Time-discretisation drivers. Each produces a RunTrace whose node 0 is
// (k=0, i=0, t=0, z0); schemes with an inner loop record every inner iterate
// (k, i) with i = 1..M_k at the frozen time t_k.

#include "ris/prox.hpp"

#include <memory>
#include <string>
#include <vector>

namespace ris {

enum class SchemeKind { GlobalIncremental, Viscous, ViscoEnergetic, LocalMin, RelaxedLocalMin, AlternateMin };

inline const char* to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::GlobalIncremental: return "global";
    case SchemeKind::Viscous: return "viscous";
    case SchemeKind::ViscoEnergetic: return "visco-energetic";
    case SchemeKind::LocalMin: return "local-min";
    case SchemeKind::RelaxedLocalMin: return "relaxed";
    case SchemeKind::AlternateMin: return "alternate";
  }
  return "?";
}

inline SchemeKind scheme_from_string(const std::string& s) {
  for (auto k : {SchemeKind::GlobalIncremental, SchemeKind::Viscous, SchemeKind::ViscoEnergetic,
                 SchemeKind::LocalMin, SchemeKind::RelaxedLocalMin, SchemeKind::AlternateMin}) {
    if (s == to_string(k)) return k;
  }
  throw ParameterError("unknown scheme '" + s + "'");
}

struct SchemeConfig {
  SchemeKind kind = SchemeKind::LocalMin;
  int N = 0;              // uniform grid τ = T/N
  double h = 0.0;         // LocalMin ball radius
  double eta = 0.0;       // RelaxedLocalMin / AlternateMin penalty
  double delta = 0.0;     // inner stopping threshold
  double mu = 0.0;        // Viscous: μ; ViscoEnergetic: the ratio μ/τ
  long maxOuterIters = 0; // LocalMin cap; 0 selects the default
  double expectedArcLength = 0.0;  // used by the default cap; 0 selects T + 10·max(1, ‖z0‖_V)
  int maxInnerIters = 100000;      // per time step, relaxed / alternate
  bool zParametrization = false;
  InnerSolverConfig inner;
  GlobalGrid grid;

  void validate() const {
    inner.validate();
    auto need_N = [&] {
      if (N < 1) throw ParameterError("missing parameter N");
    };
    switch (kind) {
      case SchemeKind::GlobalIncremental:
        need_N();
        break;
      case SchemeKind::Viscous:
      case SchemeKind::ViscoEnergetic:
        need_N();
        if (!(mu > 0.0)) throw ParameterError("missing parameter mu");
        break;
      case SchemeKind::LocalMin:
        if (!(h > 0.0)) throw ParameterError("missing parameter h");
        if (maxOuterIters < 0) throw ParameterError("maxOuterIters must be >= 0");
        break;
      case SchemeKind::RelaxedLocalMin:
      case SchemeKind::AlternateMin:
        need_N();
        if (!(eta > 0.0)) throw ParameterError("missing parameter eta");
        if (!(delta > 0.0)) throw ParameterError("missing parameter delta");
        if (maxInnerIters < 1) throw ParameterError("maxInnerIters must be >= 1");
        break;
    }
  }

  /// Penalty η of the incremental problem for uniform-grid schemes.
  double effective_eta(double T) const {
    switch (kind) {
      case SchemeKind::Viscous: return mu / (T / N);
      case SchemeKind::ViscoEnergetic: return mu;
      case SchemeKind::RelaxedLocalMin:
      case SchemeKind::AlternateMin: return eta;
      default: return 0.0;
    }
  }
};

struct TraceNode {
  int k = 0;
  int i = 0;
  double t = 0.0;
  Vec z;
  Vec u;                  // empty unless AlternateMin
  double lambda = 0.0;    // LocalMin ball multiplier
  double sigmaBar = 0.0;  // ‖z - z_prev‖_V
  int innerIters = 0;
  double energy = 0.0;
  double dissIncrement = 0.0;
};

enum class Termination { ReachedT, CapHit };

inline const char* to_string(Termination t) { return t == Termination::ReachedT ? "ReachedT" : "CapHit"; }

struct RunTrace {
  SchemeKind kind = SchemeKind::LocalMin;
  SchemeConfig config;
  double tFinal = 0.0;
  std::vector<TraceNode> nodes;
  Termination terminated = Termination::CapHit;

  int steps() const { return nodes.empty() ? 0 : nodes.back().k; }
  /// Number of recorded incremental minimisations (nodes after the initial one).
  int minimizations() const { return nodes.empty() ? 0 : static_cast<int>(nodes.size()) - 1; }
  /// Inner iteration count M_k per time step, indexed by k (entry 0 unused).
  std::vector<int> inner_counts() const {
    std::vector<int> m(static_cast<size_t>(steps()) + 1, 0);
    for (const auto& n : nodes) {
      if (n.k > 0) m[static_cast<size_t>(n.k)] = std::max(m[static_cast<size_t>(n.k)], n.i);
    }
    return m;
  }
  double dissipation() const {
    double s = 0.0;
    for (const auto& n : nodes) s += n.dissIncrement;
    return s;
  }
};

/// A run failed part-way; the trace up to the failure is kept.
class SchemeFailure : public Error {
 public:
  SchemeFailure(const std::string& what, RunTrace partial)
      : Error(what), trace_(std::make_shared<RunTrace>(std::move(partial))) {}
  const RunTrace& trace() const { return *trace_; }

 private:
  std::shared_ptr<RunTrace> trace_;
};

namespace detail {

inline double grid_time(int k, int N, double T) { return k == N ? T : T * static_cast<double>(k) / N; }

inline RunTrace start_trace(const SchemeConfig& cfg, double T, const Vec& z0, double energy) {
  RunTrace tr;
  tr.kind = cfg.kind;
  tr.config = cfg;
  tr.tFinal = T;
  TraceNode n0;
  n0.z = z0;
  n0.energy = energy;
  tr.nodes.push_back(std::move(n0));
  return tr;
}

inline void push_node(RunTrace& tr, const Dissipation& d, const Metric& m, int k, int i, double t, Vec z,
                      double energy, int iters, double lambda = 0.0, Vec u = {}) {
  const Vec& prev = tr.nodes.back().z;
  TraceNode n;
  n.k = k;
  n.i = i;
  n.t = t;
  n.sigmaBar = m.norm(z - prev);
  n.dissIncrement = eval_R(d, z - prev);
  n.z = std::move(z);
  n.u = std::move(u);
  n.lambda = lambda;
  n.innerIters = iters;
  n.energy = energy;
  tr.nodes.push_back(std::move(n));
}

inline void check_inputs(const EnergyModel& e, const Dissipation& d, const Metric& m, const Vec& z0) {
  detail::require_dim(z0.size(), e.dim(), "scheme(z0)");
  detail::require_dim(d.dim(), e.dim(), "scheme(dissipation)");
  detail::require_dim(m.dim(), e.dim(), "scheme(metric)");
  if (!z0.allFinite()) throw NumericalError("scheme: non-finite initial state");
}

template <class Step>
RunTrace run_uniform(const EnergyModel& e, const Dissipation& d, const Metric& m, const Vec& z0,
                     const SchemeConfig& cfg, Step step) {
  const double T = e.t_final();
  RunTrace tr = start_trace(cfg, T, z0, e.value(0.0, z0));
  for (int k = 1; k <= cfg.N; ++k) {
    const double t = grid_time(k, cfg.N, T);
    StepResult r;
    try {
      r = step(t, tr.nodes.back().z);
    } catch (const Error& err) {
      throw SchemeFailure(std::string(to_string(cfg.kind)) + " step " + std::to_string(k) + ": " + err.what(),
                          tr);
    }
    const double energy = e.value(t, r.z);
    push_node(tr, d, m, k, 1, t, r.z, energy, r.innerIters);
  }
  tr.terminated = Termination::ReachedT;
  return tr;
}

}  // namespace detail

/// z_k ∈ argmin I(t_k,v) + R(v - z_{k-1}) on t_k = kT/N.
inline RunTrace run_global_incremental(const EnergyModel& e, const Dissipation& d, const Vec& z0,
                                       const SchemeConfig& cfg) {
  cfg.validate();
  const Metric m(e.dim());
  detail::check_inputs(e, d, m, z0);
  if (e.dim() > 3) throw UnsupportedDimension("run_global_incremental: dim must be <= 3");
  return detail::run_uniform(e, d, m, z0, cfg, [&](double t, const Vec& w) {
    return global_step(e, d, t, w, cfg.inner, cfg.grid);
  });
}

/// One prox step per t_k with η = μ/τ (Viscous) or η = μ/τ held fixed (ViscoEnergetic).
inline RunTrace run_viscous(const EnergyModel& e, const Dissipation& d, const Metric& m, const Vec& z0,
                            const SchemeConfig& cfg) {
  cfg.validate();
  if (cfg.kind != SchemeKind::Viscous && cfg.kind != SchemeKind::ViscoEnergetic) {
    throw KindError("run_viscous: config kind must be Viscous or ViscoEnergetic");
  }
  detail::check_inputs(e, d, m, z0);
  const double eta = cfg.effective_eta(e.t_final());
  return detail::run_uniform(e, d, m, z0, cfg, [&](double t, const Vec& w) {
    return prox_step(e, d, m, t, w, eta, cfg.inner);
  });
}

/// Ball-constrained minimisation at t_{k-1} followed by
///   t_k = min(t_{k-1} + h - ‖z_k - z_{k-1}‖_V, T).
inline RunTrace run_local_min(const EnergyModel& e, const Dissipation& d, const Metric& m, const Vec& z0,
                              const SchemeConfig& cfg) {
  cfg.validate();
  detail::check_inputs(e, d, m, z0);
  const double T = e.t_final();
  const double h = cfg.h;
  long cap = cfg.maxOuterIters;
  if (cap == 0) {
    const double arc = cfg.expectedArcLength > 0.0 ? cfg.expectedArcLength
                                                   : T + 10.0 * std::max(1.0, m.norm(z0));
    const double guess = 10.0 * (T / h + arc / h);
    cap = static_cast<long>(std::min(1e6, std::ceil(guess)));
  }
  RunTrace tr = detail::start_trace(cfg, T, z0, e.value(0.0, z0));
  double t = 0.0;
  int k = 0;
  while (t < T) {
    if (k >= cap) {
      tr.terminated = Termination::CapHit;
      return tr;
    }
    ++k;
    const Vec& w = tr.nodes.back().z;
    StepResult r;
    try {
      r = ball_step(e, d, m, t, w, h, cfg.inner);
    } catch (const Error& err) {
      throw SchemeFailure("local-min step " + std::to_string(k) + ": " + err.what(), tr);
    }
    // an active step uses the whole radius; rounding in ‖Δz‖ must not advance t
    const double moved = r.active ? h : std::min(m.norm(r.z - w), h);
    double t_next = std::min(t + (h - moved), T);
    if (T - t_next <= 1e-9 * h) t_next = T;
    const double energy = e.value(t_next, r.z);
    detail::push_node(tr, d, m, k, 1, t_next, r.z, energy, r.innerIters, r.lambda);
    t = t_next;
  }
  tr.terminated = Termination::ReachedT;
  return tr;
}

/// At each t_k = kT/N, repeat prox steps with penalty η until ‖z_{k,i} - z_{k,i-1}‖_V ≤ δ.
inline RunTrace run_relaxed_local_min(const EnergyModel& e, const Dissipation& d, const Metric& m, const Vec& z0,
                                      const SchemeConfig& cfg) {
  cfg.validate();
  detail::check_inputs(e, d, m, z0);
  const double T = e.t_final();
  RunTrace tr = detail::start_trace(cfg, T, z0, e.value(0.0, z0));
  for (int k = 1; k <= cfg.N; ++k) {
    const double t = detail::grid_time(k, cfg.N, T);
    for (int i = 1;; ++i) {
      if (i > cfg.maxInnerIters) {
        tr.terminated = Termination::CapHit;
        return tr;
      }
      const Vec& w = tr.nodes.back().z;
      StepResult r;
      try {
        r = prox_step(e, d, m, t, w, cfg.eta, cfg.inner);
      } catch (const Error& err) {
        throw SchemeFailure("relaxed step (" + std::to_string(k) + "," + std::to_string(i) + "): " + err.what(), tr);
      }
      const double inc = m.norm(r.z - w);
      detail::push_node(tr, d, m, k, i, t, r.z, e.value(t, r.z), r.innerIters);
      if (inc <= cfg.delta) break;
    }
  }
  tr.terminated = Termination::ReachedT;
  return tr;
}

/// Staggered scheme: u_{k,i} = argmin E(t_k,·,z_{k,i-1}), then a prox step in z
/// with penalty η, until ‖z_{k,i} - z_{k,i-1}‖_V ≤ δ. u0 solves D_uE(0,u0,z0) = 0.
inline RunTrace run_alternate_min(const CoupledEnergyModel& ce, const Dissipation& d, const Metric& mV,
                                  const Metric& mU, const Vec& z0, const SchemeConfig& cfg) {
  cfg.validate();
  detail::require_dim(z0.size(), ce.dim_z(), "run_alternate_min(z0)");
  detail::require_dim(d.dim(), ce.dim_z(), "run_alternate_min(dissipation)");
  detail::require_dim(mV.dim(), ce.dim_z(), "run_alternate_min(metric V)");
  detail::require_dim(mU.dim(), ce.dim_u(), "run_alternate_min(metric U)");
  const double T = ce.t_final();
  const Vec u0 = ce.solve_u(0.0, z0);
  RunTrace tr = detail::start_trace(cfg, T, z0, ce.value(0.0, u0, z0));
  tr.nodes.back().u = u0;
  for (int k = 1; k <= cfg.N; ++k) {
    const double t = detail::grid_time(k, cfg.N, T);
    for (int i = 1;; ++i) {
      if (i > cfg.maxInnerIters) {
        tr.terminated = Termination::CapHit;
        return tr;
      }
      const Vec w = tr.nodes.back().z;
      const Vec u = ce.solve_u(t, w);
      StepResult r;
      try {
        r = prox_step(ce.z_slice(u), d, mV, t, w, cfg.eta, cfg.inner);
      } catch (const Error& err) {
        throw SchemeFailure("alternate step (" + std::to_string(k) + "," + std::to_string(i) + "): " + err.what(),
                            tr);
      }
      const double inc = mV.norm(r.z - w);
      detail::push_node(tr, d, mV, k, i, t, r.z, ce.value(t, u, r.z), r.innerIters, 0.0, u);
      if (inc <= cfg.delta) break;
    }
  }
  tr.terminated = Termination::ReachedT;
  return tr;
}

}  // namespace ris
