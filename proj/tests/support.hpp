#pragma once

// Shared fixtures for the unit tests and the acceptance binary.

#include "ris/diagnostics.hpp"
#include "ris/problems.hpp"

#include <random>

namespace ris::fixtures {

/// Random 1D quartic I(v) = b v⁴/4 + c v³/3 + a v²/2 − l v with R = κ|·|.
struct Quartic1D {
  double a, b, c, l, kappa;

  EnergyModel model() const {
    const double A = a, B = b, C = c, L = l;
    return EnergyModel::custom(
        1, 1.0,
        [=](double, const Vec& z) {
          const double x = z[0];
          return B * x * x * x * x / 4 + C * x * x * x / 3 + A * x * x / 2 - L * x;
        },
        [](double, const Vec&) { return 0.0; },
        [=](double, const Vec& z) {
          const double x = z[0];
          return Vec::Constant(1, B * x * x * x + C * x * x + A * x - L);
        },
        [=](double, const Vec& z) {
          const double x = z[0];
          return Mat::Constant(1, 1, 3 * B * x * x + 2 * C * x + A);
        });
  }
  double value(double x) const { return b * x * x * x * x / 4 + c * x * x * x / 3 + a * x * x / 2 - l * x; }
  /// Penalty above which v ↦ I(v) + (η/2)v² is strictly convex.
  double convexifying_eta() const { return std::max(0.0, c * c / (3 * b) - a); }
};

inline Quartic1D random_quartic(std::mt19937& rng) {
  std::uniform_real_distribution<double> A(-2, 2), B(0.5, 2), C(-1, 1), L(-2, 2), K(0.1, 1.5);
  return {A(rng), B(rng), C(rng), L(rng), K(rng)};
}

struct OracleMismatch {
  int instances = 0;
  int failures = 0;
  double worst = 0.0;
};

/// prox_step, ball_step and global_step against the grid oracle on random 1D
/// instances; each instance checks all three steps.
inline OracleMismatch oracle_equivalence(int instances, unsigned seed, double tol = 1e-4) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> W(-2, 2), H(0.05, 1.0), E(0.5, 3.0);
  OracleMismatch out;
  for (int n = 0; n < instances; ++n) {
    const Quartic1D q = random_quartic(rng);
    const EnergyModel e = q.model();
    const Dissipation d = Dissipation::uniform(1, q.kappa);
    const Metric m(1);
    const double w = W(rng);
    const double h = H(rng);
    const double eta = q.convexifying_eta() + E(rng);
    const Vec wv = Vec::Constant(1, w);
    auto R = [&](double v) { return q.kappa * std::abs(v - w); };

    const double zp = prox_step(e, d, m, 0.0, wv, eta).z[0];
    const double op =
        grid_oracle([&](double v) { return q.value(v) + 0.5 * eta * (v - w) * (v - w) + R(v); }, w - 8, w + 8, 1e-3, 3);
    const double zb = ball_step(e, d, m, 0.0, wv, h).z[0];
    const double ob = grid_oracle([&](double v) { return q.value(v) + R(v); }, w - h, w + h, 1e-5, 3);
    const double zg = global_step(e, d, 0.0, wv).z[0];
    const double og = grid_oracle([&](double v) { return q.value(v) + R(v); }, w - 6, w + 6, 1e-3, 3);
    const double err = std::max({std::abs(zp - op), std::abs(zb - ob), std::abs(zg - og)});
    ++out.instances;
    if (!(err <= tol)) ++out.failures;
    out.worst = std::max(out.worst, err);
  }
  return out;
}

struct Solved {
  RunTrace trace;
  ParametrizedCurve curve;
  DiagnosticsReport report;
};

/// Runs a scheme on a built-in problem and diagnoses the V-parametrised curve.
inline Solved solve(const Problem& pr, const SchemeConfig& sc) {
  Solved out;
  switch (sc.kind) {
    case SchemeKind::GlobalIncremental:
      out.trace = run_global_incremental(pr.model, pr.dissipation, pr.z0, sc);
      break;
    case SchemeKind::Viscous:
    case SchemeKind::ViscoEnergetic:
      out.trace = run_viscous(pr.model, pr.dissipation, pr.metricV, pr.z0, sc);
      break;
    case SchemeKind::LocalMin:
      out.trace = run_local_min(pr.model, pr.dissipation, pr.metricV, pr.z0, sc);
      break;
    case SchemeKind::RelaxedLocalMin:
      out.trace = run_relaxed_local_min(pr.model, pr.dissipation, pr.metricV, pr.z0, sc);
      break;
    case SchemeKind::AlternateMin:
      out.trace = run_alternate_min(*pr.coupled, pr.dissipation, pr.metricV, pr.metricU, pr.z0, sc);
      break;
  }
  if (sc.kind == SchemeKind::LocalMin) {
    out.curve = parametrize_local_min(out.trace, pr.metricV);
  } else if (sc.kind == SchemeKind::AlternateMin) {
    out.curve = parametrize_alternate(out.trace, pr.metricV, pr.metricU);
  } else {
    out.curve = parametrize_relaxed(out.trace, pr.metricV);
  }
  out.report = sc.kind == SchemeKind::AlternateMin ? diagnose(out.curve, *pr.coupled, pr.dissipation, pr.metricV)
                                                   : diagnose(out.curve, pr.model, pr.dissipation, pr.metricV);
  return out;
}

struct GridCase {
  std::string problem;
  SchemeConfig config;
};

/// Every scheme on every built-in problem it applies to.
inline std::vector<GridCase> identity_grid() {
  std::vector<GridCase> out;
  for (const std::string id : {"toy51", "toy52", "coupled:n=4", "chain:n=3"}) {
    const Problem pr = make_problem(id);
    const double T = pr.T();
    for (SchemeKind kind : {SchemeKind::GlobalIncremental, SchemeKind::Viscous, SchemeKind::ViscoEnergetic,
                            SchemeKind::LocalMin, SchemeKind::RelaxedLocalMin, SchemeKind::AlternateMin}) {
      if (kind == SchemeKind::AlternateMin && !pr.is_coupled()) continue;
      if (kind == SchemeKind::GlobalIncremental && pr.model.dim() > 3) continue;
      SchemeConfig c;
      c.kind = kind;
      c.N = 40;
      switch (kind) {
        case SchemeKind::Viscous: c.mu = 0.1 * std::sqrt(T / c.N); break;
        case SchemeKind::ViscoEnergetic: c.mu = 2.0; break;
        case SchemeKind::LocalMin: c.h = T / 60; break;
        case SchemeKind::RelaxedLocalMin:
        case SchemeKind::AlternateMin:
          c.eta = 50;
          c.delta = 1e-4;
          break;
        default: break;
      }
      if (kind == SchemeKind::GlobalIncremental && pr.model.dim() > 1) c.N = 10;
      out.push_back({id, c});
    }
  }
  return out;
}

}  // namespace ris::fixtures
