#pragma once

// Discrete energy-dissipation identities, complementarity and stationarity
// measured on parametrised curves.
//
// Conventions per segment [s_j, s_{j+1}] (affine t̂, ẑ, û; primes are d/ds):
//   t_l = t̂(s_j), z_r = ẑ(s_{j+1}), u_r = û(s_{j+1})  (piecewise-constant arguments)
//   r   = ⟨D_zI(t̂,ẑ) - D_zI(t_l,z_r), ẑ'⟩
// LocalMin:   I(end) + ∫ R(ẑ') + ‖ẑ'‖_V dist(ξ) = I(0) + ∫ ∂_tI t̂' + ∫ r,   ξ = -D_zI(t_l,z_r)
// Relaxed:    I(end) + ∫ R_μ(ẑ') + R*_μ(ξ)      = I(0) + ∫ ∂_tI t̂' + ∫ r,   μ = η σ̄
//             with ξ = -D_zI(t_l,z_r) - J on time segments, J = ηV(z_{k-1,M} - z_{k-1,M-1});
//             the initial time segment instead uses the projection of -D_zI(0,z0)
//             onto ∂R(0), its distance being reported as initialDefect.
// Alternate:  as Relaxed with E(t,u,z), plus ∫ ⟨D_uE, û'⟩ on the right.

#include "ris/parametrize.hpp"

#include <array>
#include <functional>
#include <map>
#include <string>

namespace ris {

struct EnergyBalance {
  double initialEnergy = 0.0;
  double finalEnergy = 0.0;
  double dissipation = 0.0;   // ∫ R(ẑ')
  double viscous = 0.0;       // ∫ ‖ẑ'‖ dist  or  ∫ R_μ - R + R*_μ
  double loadWork = 0.0;      // ∫ ∂_tI t̂'
  double uWork = 0.0;         // ∫ ⟨D_uE, û'⟩
  double remainder = 0.0;     // ∫ r
  double initialDefect = 0.0; // dist(-D_zI(0,z0), ∂R(0)) absorbed by the first time segment
  double residual = 0.0;      // LHS - RHS, remainder included
  double scale = 1.0;         // 1 + |I(0,z0)|
};

struct DiagnosticsReport {
  double energyResidual = 0.0;
  double remainderIntegral = 0.0;
  double complementarityIntegral = 0.0;
  double dissTotal = 0.0;
  double viscousDissTotal = 0.0;
  double maxStationarityAtNodes = 0.0;
  double etaDeltaProduct = 0.0;
  double S = 0.0;
  double loadWork = 0.0;
  double uWork = 0.0;
  double initialEnergy = 0.0;
  double finalEnergy = 0.0;
  double initialDefect = 0.0;
  double innerTol = 0.0;
  int quadratureOrder = 5;
  int segments = 0;
  int degenerateSegments = 0;  // t̂' = 0 and ẑ' = 0 (û-only motion)
  int steps = 0;
};

namespace detail {

inline constexpr std::array<double, 5> kGaussX = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                                  0.5384693101056831, 0.9061798459386640};
inline constexpr std::array<double, 5> kGaussW = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                                  0.4786286704993665, 0.2369268850561891};

/// Uniform access to I(t,z) or E(t,u,z); u is ignored for uncoupled models.
struct ModelView {
  std::function<double(double, const Vec&, const Vec&)> value;
  std::function<double(double, const Vec&, const Vec&)> dt;
  std::function<Vec(double, const Vec&, const Vec&)> gz;
  std::function<Vec(double, const Vec&, const Vec&)> gu;  // empty for uncoupled models
};

inline ModelView view_of(const EnergyModel& e) {
  const EnergyModel* p = &e;
  return {[p](double t, const Vec&, const Vec& z) { return p->value(t, z); },
          [p](double t, const Vec&, const Vec& z) { return p->dt(t, z); },
          [p](double t, const Vec&, const Vec& z) { return p->grad(t, z); },
          {}};
}

inline ModelView view_of(const CoupledEnergyModel& ce) {
  const CoupledEnergyModel* p = &ce;
  return {[p](double t, const Vec& u, const Vec& z) { return p->value(t, u, z); },
          [p](double t, const Vec& u, const Vec& z) { return p->dt(t, u, z); },
          [p](double t, const Vec& u, const Vec& z) { return p->grad_z(t, u, z); },
          [p](double t, const Vec& u, const Vec& z) { return p->grad_u(t, u, z); }};
}

/// Affine segment j of a curve.
struct Segment {
  double ds, tl, tr;
  const Vec* zl;
  const Vec* zr;
  const Vec* ul;
  const Vec* ur;
  Vec dz, du;
  double tp() const { return (tr - tl) / ds; }
  Vec zp() const { return dz / ds; }
  double t_at(double a) const { return tl + a * (tr - tl); }
  Vec z_at(double a) const { return *zl + a * dz; }
  Vec u_at(double a) const { return ul ? Vec(*ul + a * du) : Vec(); }
};

inline Segment segment(const ParametrizedCurve& c, size_t j) {
  static const Vec kEmpty;
  Segment g;
  g.ds = c.s[j + 1] - c.s[j];
  g.tl = c.t[j];
  g.tr = c.t[j + 1];
  g.zl = &c.z[j];
  g.zr = &c.z[j + 1];
  g.dz = c.z[j + 1] - c.z[j];
  if (c.has_u()) {
    g.ul = &c.u[j];
    g.ur = &c.u[j + 1];
    g.du = c.u[j + 1] - c.u[j];
  } else {
    g.ul = nullptr;
    g.ur = &kEmpty;
  }
  return g;
}

template <class F>
double gauss_rule(F& f, double lo, double hi) {
  double s = 0.0;
  for (size_t q = 0; q < kGaussX.size(); ++q) s += kGaussW[q] * f(lo + 0.5 * (hi - lo) * (kGaussX[q] + 1.0));
  return 0.5 * (hi - lo) * s;
}

template <class F>
double gauss_adaptive(F& f, double lo, double hi, double whole, int depth) {
  const double mid = 0.5 * (lo + hi);
  const double left = gauss_rule(f, lo, mid);
  const double right = gauss_rule(f, mid, hi);
  const double both = left + right;
  if (depth == 0 || std::abs(both - whole) <= 1e-14 * (1.0 + std::abs(both))) return both;
  return gauss_adaptive(f, lo, mid, left, depth - 1) + gauss_adaptive(f, mid, hi, right, depth - 1);
}

/// ∫ over the segment of f(a) ds, a ∈ [0,1] the affine coordinate. Composite
/// Gauss-5, bisected until halving no longer changes the value.
template <class F>
double gauss(const Segment& g, F f) {
  return g.ds * gauss_adaptive(f, 0.0, 1.0, gauss_rule(f, 0.0, 1.0), 20);
}

inline bool relaxed_family(SchemeKind k) {
  return k == SchemeKind::RelaxedLocalMin || k == SchemeKind::Viscous || k == SchemeKind::ViscoEnergetic ||
         k == SchemeKind::GlobalIncremental || k == SchemeKind::AlternateMin;
}

inline void check_kind(const ParametrizedCurve& c, SchemeKind kind) {
  if (!c.scheme) throw KindError("curve has no scheme (analytic curve)");
  const SchemeKind ck = *c.scheme;
  const bool ok = ck == kind || (relaxed_family(ck) && relaxed_family(kind) &&
                                 (ck == SchemeKind::AlternateMin) == (kind == SchemeKind::AlternateMin));
  if (!ok) throw KindError(std::string("curve of kind ") + to_string(ck) + " checked as " + to_string(kind));
  if ((kind == SchemeKind::AlternateMin) != (c.metricKind == CurveMetric::UplusV)) {
    throw KindError("curve metric does not match scheme kind");
  }
}

/// J on the time segment j, or nullopt for the initial time segment.
inline std::optional<Vec> j_term(const ParametrizedCurve& c, size_t j, const Metric& mV) {
  const int k = c.k[j + 1];
  if (j == 0 || k <= 1) return std::nullopt;
  const Vec zero = Vec::Zero(c.z[j].size());
  if (c.segKind[j - 1] != SegKind::StateUpdate) return zero;
  const auto km = static_cast<size_t>(k - 1);
  if (c.k[j] != k - 1 || km >= c.innerCounts.size() || c.i[j] != c.innerCounts[km]) return zero;
  return Vec(c.eta * mV.apply(c.z[j] - c.z[j - 1]));
}

inline EnergyBalance balance(const ParametrizedCurve& c, const ModelView& mv, const Dissipation& d,
                             const Metric& mV, SchemeKind kind) {
  c.validate();
  check_kind(c, kind);
  const bool local = kind == SchemeKind::LocalMin;
  EnergyBalance b;
  const Vec u0 = c.has_u() ? c.u.front() : Vec();
  const Vec uN = c.has_u() ? c.u.back() : Vec();
  b.initialEnergy = mv.value(c.t.front(), u0, c.z.front());
  b.finalEnergy = mv.value(c.t.back(), uN, c.z.back());
  b.scale = 1.0 + std::abs(b.initialEnergy);
  for (size_t j = 0; j < c.segments(); ++j) {
    const Segment g = segment(c, j);
    const Vec zp = g.zp();
    const double tp = g.tp();
    Vec xi = -mv.gz(g.tl, *g.ur, *g.zr);
    b.dissipation += eval_R(d, g.dz);
    if (tp != 0.0) {
      b.loadWork += gauss(g, [&](double a) { return mv.dt(g.t_at(a), g.u_at(a), g.z_at(a)) * tp; });
    }
    if (g.dz.size() > 0 && g.dz.squaredNorm() > 0.0) {
      b.remainder += gauss(g, [&](double a) { return (mv.gz(g.t_at(a), g.u_at(a), g.z_at(a)) + xi).dot(zp); });
    }
    if (mv.gu && g.du.squaredNorm() > 0.0) {
      const Vec up = g.du / g.ds;
      b.uWork += gauss(g, [&](double a) { return mv.gu(g.t_at(a), g.u_at(a), g.z_at(a)).dot(up); });
    }
    if (local) {
      b.viscous += mV.norm(g.dz) * dist_to_stable(d, mV, xi);
      continue;
    }
    const double mu = c.eta * c.sigmaBar[j];
    if (c.segKind[j] == SegKind::TimeUpdate) {
      const auto J = j_term(c, j, mV);
      if (!J) {
        b.initialDefect = std::max(b.initialDefect, dist_to_stable(d, mV, xi));
        continue;
      }
      xi -= *J;
    } else {
      b.viscous += 0.5 * mu * zp.dot(mV.apply(zp)) * g.ds;
    }
    if (mu > 0.0) b.viscous += conj_R_mu(d, mV, mu, xi) * g.ds;
  }
  b.residual = (b.finalEnergy + b.dissipation + b.viscous) -
               (b.initialEnergy + b.loadWork + b.uWork + b.remainder);
  return b;
}

/// Piecewise-constant stationarity argument of segment j, without J.
inline Vec pc_xi(const ParametrizedCurve& c, const ModelView& mv, size_t j) {
  const Vec u = c.has_u() ? c.u[j + 1] : Vec();
  return -mv.gz(c.t[j], u, c.z[j + 1]);
}

inline double complementarity(const ParametrizedCurve& c, const ModelView& mv, const Dissipation& d,
                              const Metric& mV) {
  c.validate();
  double total = 0.0;
  for (size_t j = 0; j < c.segments(); ++j) {
    const double dt = c.t[j + 1] - c.t[j];
    if (dt <= 0.0) continue;
    const bool initial = j == 0 && c.segKind[0] == SegKind::TimeUpdate && c.scheme &&
                         *c.scheme != SchemeKind::LocalMin;
    if (initial) continue;  // reported as initialDefect
    total += dt * dist_to_stable(d, mV, pc_xi(c, mv, j));
  }
  return total;
}

inline double max_stationarity(const ParametrizedCurve& c, const ModelView& mv, const Dissipation& d,
                               const Metric& mV) {
  double worst = 0.0;
  if (c.scheme && *c.scheme == SchemeKind::LocalMin) {
    for (size_t j = 0; j < c.segments(); ++j) {
      if (c.t[j + 1] > c.t[j]) worst = std::max(worst, dist_to_stable(d, mV, pc_xi(c, mv, j)));
    }
    return worst;
  }
  // accepted iterate of step k: last node carrying that k
  for (size_t j = 1; j < c.nodes(); ++j) {
    if (j + 1 < c.nodes() && c.k[j + 1] == c.k[j]) continue;
    const Vec u = c.has_u() ? c.u[j] : Vec();
    worst = std::max(worst, dist_to_stable(d, mV, -mv.gz(c.t[j], u, c.z[j])));
  }
  return worst;
}

inline DiagnosticsReport report(const ParametrizedCurve& c, const ModelView& mv, const Dissipation& d,
                                const Metric& mV, SchemeKind kind) {
  const EnergyBalance b = balance(c, mv, d, mV, kind);
  DiagnosticsReport r;
  r.energyResidual = b.residual;
  r.remainderIntegral = b.remainder;
  r.complementarityIntegral = complementarity(c, mv, d, mV);
  r.dissTotal = b.dissipation;
  r.viscousDissTotal = b.viscous;
  r.maxStationarityAtNodes = max_stationarity(c, mv, d, mV);
  r.etaDeltaProduct = c.eta * c.delta;
  r.S = c.S();
  r.loadWork = b.loadWork;
  r.uWork = b.uWork;
  r.initialEnergy = b.initialEnergy;
  r.finalEnergy = b.finalEnergy;
  r.initialDefect = b.initialDefect;
  r.innerTol = c.innerTol;
  r.segments = static_cast<int>(c.segments());
  for (size_t j = 0; j < c.segments(); ++j) {
    if (c.t[j + 1] == c.t[j] && c.z[j + 1] == c.z[j]) ++r.degenerateSegments;
  }
  r.steps = c.k.empty() ? 0 : c.k.back();
  return r;
}

}  // namespace detail

/// Full energy balance of the identity matching `kind`.
inline EnergyBalance energy_balance(const ParametrizedCurve& c, const EnergyModel& e, const Dissipation& d,
                                    const Metric& mV, SchemeKind kind) {
  if (kind == SchemeKind::AlternateMin) throw KindError("alternate curves need the coupled model");
  return detail::balance(c, detail::view_of(e), d, mV, kind);
}

inline EnergyBalance energy_balance(const ParametrizedCurve& c, const CoupledEnergyModel& ce,
                                    const Dissipation& d, const Metric& mV) {
  return detail::balance(c, detail::view_of(ce), d, mV, SchemeKind::AlternateMin);
}

/// LHS - RHS of the discrete energy identity, remainder included.
inline double energy_dissipation_residual(const ParametrizedCurve& c, const EnergyModel& e, const Dissipation& d,
                                          const Metric& mV, SchemeKind kind) {
  return energy_balance(c, e, d, mV, kind).residual;
}

inline double energy_dissipation_residual(const ParametrizedCurve& c, const CoupledEnergyModel& ce,
                                          const Dissipation& d, const Metric& mV) {
  return energy_balance(c, ce, d, mV).residual;
}

/// ∫ t̂' dist(-D_zI(t_l, z_r), ∂R(0)) ds over the curve.
inline double complementarity_integral(const ParametrizedCurve& c, const EnergyModel& e, const Dissipation& d,
                                       const Metric& mV) {
  if (c.metricKind == CurveMetric::UplusV) throw KindError("alternate curves need the coupled model");
  return detail::complementarity(c, detail::view_of(e), d, mV);
}

inline double complementarity_integral(const ParametrizedCurve& c, const CoupledEnergyModel& ce,
                                       const Dissipation& d, const Metric& mV) {
  if (c.metricKind != CurveMetric::UplusV) throw KindError("curve carries no u states");
  return detail::complementarity(c, detail::view_of(ce), d, mV);
}

/// Σ R(Δz) over segments.
inline double dissipation_total(const ParametrizedCurve& c, const Dissipation& d) {
  double s = 0.0;
  for (size_t j = 0; j + 1 < c.z.size(); ++j) s += eval_R(d, c.z[j + 1] - c.z[j]);
  return s;
}

inline DiagnosticsReport diagnose(const ParametrizedCurve& c, const EnergyModel& e, const Dissipation& d,
                                  const Metric& mV) {
  if (!c.scheme) throw KindError("diagnose: analytic curve");
  if (*c.scheme == SchemeKind::AlternateMin) throw KindError("alternate curves need the coupled model");
  return detail::report(c, detail::view_of(e), d, mV, *c.scheme);
}

inline DiagnosticsReport diagnose(const ParametrizedCurve& c, const CoupledEnergyModel& ce, const Dissipation& d,
                                  const Metric& mV) {
  return detail::report(c, detail::view_of(ce), d, mV, SchemeKind::AlternateMin);
}

struct BVClassification {
  bool isParametrizedSolution = false;
  double worstViolation = 0.0;
  std::map<std::string, double> perCondition;
  int degenerateSegments = 0;
};

/// Checks a curve against the parametrised BV characterisation: boundary
/// values, normalisation t̂' + ‖ẑ'‖_V ≤ 1, complementarity and the energy
/// identity with BV dissipation R(ẑ') + ‖ẑ'‖_V dist(-D_zI(t̂,ẑ), ∂R(0)),
/// all with continuous arguments.
inline BVClassification classify_bv_solution(const ParametrizedCurve& c, const EnergyModel& e,
                                             const Dissipation& d, const Metric& mV, double tol,
                                             const std::optional<Vec>& z0 = std::nullopt) {
  if (!c.completed) throw IncompleteRunError("classify_bv_solution: run did not reach T");
  c.validate();
  BVClassification out;
  const double T = e.t_final();
  auto& pc = out.perCondition;
  pc["t(0)=0"] = std::abs(c.t.front());
  pc["t(S)=T"] = std::abs(c.t.back() - T);
  pc["z(0)=z0"] = z0 ? (c.z.front() - *z0).lpNorm<Eigen::Infinity>() : 0.0;
  double norm_excess = 0.0;
  double compl_int = 0.0;
  double diss = 0.0;
  double load = 0.0;
  for (size_t j = 0; j < c.segments(); ++j) {
    const detail::Segment g = detail::segment(c, j);
    const double tp = g.tp();
    const Vec zp = g.zp();
    const double speed = mV.norm(zp);
    norm_excess = std::max(norm_excess, tp + speed - 1.0);
    if (tp == 0.0 && speed == 0.0) ++out.degenerateSegments;
    diss += eval_R(d, g.dz);
    const auto dist_at = [&](double a) { return dist_to_stable(d, mV, -e.grad(g.t_at(a), g.z_at(a))); };
    if (tp != 0.0) {
      compl_int += detail::gauss(g, [&](double a) { return tp * dist_at(a); });
      load += detail::gauss(g, [&](double a) { return tp * e.dt(g.t_at(a), g.z_at(a)); });
    }
    if (speed != 0.0) diss += detail::gauss(g, [&](double a) { return speed * dist_at(a); });
  }
  pc["normalization"] = std::max(0.0, norm_excess);
  pc["complementarity"] = compl_int;
  const double zstart_energy = e.value(c.t.front(), z0 ? *z0 : c.z.front());
  pc["energy identity"] = std::abs(e.value(c.t.back(), c.z.back()) + diss - zstart_energy - load);
  for (const auto& [name, v] : pc) out.worstViolation = std::max(out.worstViolation, v);
  out.isParametrizedSolution = out.worstViolation <= tol;
  return out;
}

struct FixedEtaReport {
  double complementarityRight = 0.0;  // ∫ t̂' dist(-D_zI(t̂, z̄))
  double crossTerm = 0.0;             // ∫ ⟨D_zI(t̂,z̄) - D_zI(t̂,ẑ), ẑ'⟩
  double timeGapIntegral = 0.0;       // ∫ t̂' (s̄ - s̲)
  double stateGapIntegral = 0.0;      // ∫ t̂' ‖z̄ - z̲‖_Z
  double energyResidual = 0.0;
  double S = 0.0;
};

/// Diagnostics for a Z-parametrised relaxed curve with fixed η; z̄ and z̲ are
/// the right and left node states of the containing segment.
inline FixedEtaReport fixed_eta_report(const ParametrizedCurve& c, const EnergyModel& e, const Dissipation& d,
                                       const Metric& mZ, const Metric& mV) {
  if (c.metricKind != CurveMetric::Z) throw KindError("fixed_eta_report: curve is not Z-parametrised");
  if (!c.scheme || *c.scheme != SchemeKind::RelaxedLocalMin) {
    throw KindError("fixed_eta_report: curve is not from the relaxed scheme");
  }
  c.validate();
  FixedEtaReport r;
  r.S = c.S();
  for (size_t j = 0; j < c.segments(); ++j) {
    const detail::Segment g = detail::segment(c, j);
    const double tp = g.tp();
    const Vec& zbar = *g.zr;
    if (tp != 0.0) {
      r.complementarityRight +=
          detail::gauss(g, [&](double a) { return tp * dist_to_stable(d, mV, -e.grad(g.t_at(a), zbar)); });
      r.timeGapIntegral += tp * g.ds * g.ds;
      r.stateGapIntegral += tp * g.ds * mZ.norm(g.dz);
    }
    if (g.dz.squaredNorm() > 0.0) {
      const Vec zp = g.zp();
      r.crossTerm += detail::gauss(g, [&](double a) {
        const double t = g.t_at(a);
        return (e.grad(t, zbar) - e.grad(t, g.z_at(a))).dot(zp);
      });
    }
  }
  r.energyResidual = energy_dissipation_residual(c, e, d, mV, SchemeKind::RelaxedLocalMin);
  return r;
}

struct StepJump {
  double t = 0.0;     // time t_k of the largest step
  double size = 0.0;  // ‖z_k - z_{k-1}‖_V between accepted states
  int k = 0;
};

/// Largest change between accepted states of consecutive time steps.
inline StepJump largest_step(const RunTrace& tr, const Metric& mV) {
  StepJump out;
  const TraceNode* prev = nullptr;
  for (size_t j = 0; j < tr.nodes.size(); ++j) {
    const bool accepted = j + 1 == tr.nodes.size() || tr.nodes[j + 1].k != tr.nodes[j].k;
    if (!accepted) continue;
    const TraceNode& n = tr.nodes[j];
    if (prev) {
      const double size = mV.norm(n.z - prev->z);
      if (size > out.size) out = {n.t, size, n.k};
    }
    prev = &n;
  }
  return out;
}

}  // namespace ris
