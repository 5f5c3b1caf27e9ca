#pragma once

// Inner solvers for the incremental problems every scheme reduces to:
//
//   prox_step    argmin_v I(t,v) + (η/2)‖v-w‖²_V + R(v-w)        (seeded at w)
//   ball_step    argmin_v I(t,v) + R(v-w)  s.t. ‖v-w‖_V ≤ h      (+ multiplier)
//   global_step  argmin_v I(t,v) + R(v-w)                          (grid, dim ≤ 3)
//
// All three run a proximal-gradient iteration with backtracking on the smooth
// part I(t,·) + (η/2)‖·-w‖²_V. The prox of the weighted-L1 term (plus the
// optional V-ball) is exact for diagonal V; for a full V the iteration works in
// the Euclidean geometry and the ball is handled by a Dykstra-type splitting.

#include "ris/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

namespace ris {

struct InnerSolverConfig {
  double tol = 1e-10;           // gradient-mapping stationarity
  int maxIter = 100000;
  double lipschitzGuess = 1.0;  // initial step is 1/lipschitzGuess

  void validate() const {
    if (!(tol > 0.0)) throw ParameterError("InnerSolverConfig: tol must be > 0");
    if (maxIter < 1) throw ParameterError("InnerSolverConfig: maxIter must be >= 1");
    if (!(lipschitzGuess > 0.0)) throw ParameterError("InnerSolverConfig: lipschitzGuess must be > 0");
  }
};

struct StepResult {
  Vec z;
  double lambda = 0.0;  // ball multiplier, 0 for unconstrained steps
  int innerIters = 0;
  double stationarity = 0.0;
  double objective = 0.0;
  bool active = false;  // ball constraint active
};

/// Grid used by global_step: a box of the given half width centred at w with
/// an odd number of points per axis (so w itself is a grid point).
struct GlobalGrid {
  double halfWidth = 6.0;
  int pointsPerDim = 0;  // 0 selects 4001 / 201 / 41 for dim 1 / 2 / 3
  int refineCandidates = 6;
};

namespace detail {

inline double soft_threshold(double x, double thr) {
  if (x > thr) return x - thr;
  if (x < -thr) return x + thr;
  return 0.0;
}

/// Euclidean projection onto {d : dᵀ M d ≤ r²}.
class EllipsoidProjector {
 public:
  EllipsoidProjector(const Mat& M, double radius) : radius_(radius) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(M);
    q_ = eig.eigenvectors();
    lam_ = eig.eigenvalues();
  }

  Vec operator()(const Vec& y) const {
    const Vec c = q_.transpose() * y;
    const double r2 = radius_ * radius_;
    auto excess = [&](double nu) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < c.size(); ++i) {
        const double f = c[i] / (1.0 + nu * lam_[i]);
        s += lam_[i] * f * f;
      }
      return s - r2;
    };
    if (excess(0.0) <= 0.0) return y;
    double lo = 0.0;
    double hi = 1.0;
    while (excess(hi) > 0.0) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (excess(mid) > 0.0 ? lo : hi) = mid;
    }
    Vec f(c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i) f[i] = c[i] / (1.0 + hi * lam_[i]);
    return q_ * f;
  }

 private:
  double radius_;
  Mat q_;
  Vec lam_;
};

/// Objective  I(t,v) + (η/2)‖v-w‖²_V + R(v-w)  with an optional V-ball ‖v-w‖_V ≤ radius.
class CompositeProblem {
 public:
  CompositeProblem(const EnergyModel& e, const Dissipation& d, const Metric& m, double t, Vec w,
                   double eta, double radius = std::numeric_limits<double>::infinity())
      : e_(e), d_(d), m_(m), t_(t), w_(std::move(w)), eta_(eta), radius_(radius) {
    require_dim(w_.size(), e.dim(), "CompositeProblem(w)");
    require_dim(d.dim(), e.dim(), "CompositeProblem(dissipation)");
    require_dim(m.dim(), e.dim(), "CompositeProblem(metric)");
    if (!w_.allFinite()) throw NumericalError("CompositeProblem: non-finite anchor");
    if (std::isfinite(radius_) && !m_.is_diagonal()) projector_.emplace(m_.matrix(), radius_);
  }

  const Vec& anchor() const { return w_; }
  bool constrained() const { return std::isfinite(radius_); }

  double smooth(const Vec& v) const {
    const Vec dv = v - w_;
    return e_.value(t_, v) + 0.5 * eta_ * dv.dot(m_.apply(dv));
  }
  Vec smooth_grad(const Vec& v) const { return e_.grad(t_, v) + eta_ * m_.apply(v - w_); }
  double nonsmooth(const Vec& v) const { return eval_R(d_, v - w_); }
  double objective(const Vec& v) const { return smooth(v) + nonsmooth(v); }

  /// Squared norm of the geometry the prox is taken in.
  double geo_norm2(const Vec& v) const {
    if (m_.is_diagonal()) return v.dot(m_.matrix().diagonal().cwiseProduct(v));
    return v.squaredNorm();
  }

  /// Project a point into the feasible ball around w.
  Vec feasible(const Vec& v) const {
    if (!constrained()) return v;
    const Vec dv = v - w_;
    if (m_.is_diagonal()) {
      const double n = m_.norm(dv);
      return n > radius_ ? Vec(w_ + dv * (radius_ / n)) : v;
    }
    return w_ + (*projector_)(dv);
  }

  /// v⁺ = argmin_x ⟨g, x-v⟩ + (1/2s)‖x-v‖²_G + R(x-w) [+ ball indicator].
  Vec prox_map(const Vec& v, const Vec& g, double step) const {
    const Vec& kappa = d_.weights();
    const Eigen::Index n = v.size();
    if (m_.is_diagonal()) {
      const Vec& diag = m_.matrix().diagonal();
      Vec dv(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double y = v[i] - w_[i] - step * g[i] / diag[i];
        dv[i] = soft_threshold(y, step * kappa[i] / diag[i]);
      }
      if (constrained()) {
        // joint prox of R + ball: the shrunk increment, radially scaled
        const double nrm = m_.norm(dv);
        if (nrm > radius_) dv *= radius_ / nrm;
      }
      return w_ + dv;
    }
    const Vec y = v - w_ - step * g;
    auto shrink = [&](const Vec& x) {
      Vec out(n);
      for (Eigen::Index i = 0; i < n; ++i) out[i] = soft_threshold(x[i], step * kappa[i]);
      return out;
    };
    Vec dv = shrink(y);
    if (constrained() && m_.norm(dv) > radius_) {
      // Dykstra-like splitting for prox of (R + ball indicator)
      Vec x = y;
      Vec p = Vec::Zero(n);
      Vec q = Vec::Zero(n);
      for (int it = 0; it < 5000; ++it) {
        const Vec a = shrink(x + p);
        p = x + p - a;
        const Vec b = (*projector_)(a + q);
        q = a + q - b;
        const double move = (b - x).lpNorm<Eigen::Infinity>();
        x = b;
        if (move <= 1e-15 * (1.0 + x.lpNorm<Eigen::Infinity>())) break;
      }
      dv = x;
    }
    return w_ + dv;
  }

 private:
  const EnergyModel& e_;
  const Dissipation& d_;
  const Metric& m_;
  double t_;
  Vec w_;
  double eta_;
  double radius_;
  std::optional<EllipsoidProjector> projector_;
};

struct LocalSolve {
  Vec z;
  int iters = 0;
  double stationarity = 0.0;
  double objective = 0.0;
};

/// Proximal gradient with backtracking from `start`. Stationarity is the
/// gradient-mapping norm ‖v - v⁺‖_G / s at the returned point.
inline LocalSolve solve_composite(const CompositeProblem& prob, const Vec& start,
                                  const InnerSolverConfig& cfg) {
  constexpr double kArmijo = 1e-4;
  Vec v = prob.feasible(start);
  double step = 1.0 / cfg.lipschitzGuess;
  double phi = prob.objective(v);
  if (!std::isfinite(phi)) throw NumericalError("inner solver: non-finite objective at start");
  double gm = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.maxIter; ++it) {
    const Vec g = prob.smooth_grad(v);
    if (!g.allFinite()) throw NumericalError("inner solver: non-finite gradient");
    Vec next;
    double phi_next = phi;
    double dn2 = 0.0;
    bool accepted = false;
    bool first_try = true;
    for (int bt = 0; bt < 200; ++bt) {
      next = prob.prox_map(v, g, step);
      const Vec d = next - v;
      dn2 = prob.geo_norm2(d);
      if (dn2 == 0.0) {
        return {v, it, 0.0, phi};
      }
      phi_next = prob.objective(next);
      if (!std::isfinite(phi_next)) {
        step *= 0.5;
        first_try = false;
        continue;
      }
      bool ok = phi_next <= phi - kArmijo / step * dn2;
      if (std::abs(phi_next - phi) <= 1e-12 * (1.0 + std::abs(phi))) {
        // change is below rounding: use the gradient form of the descent lemma
        const Vec g_next = prob.smooth_grad(next);
        ok = (g_next - g).dot(d) <= (1.0 - kArmijo) * dn2 / step;
      }
      if (ok) {
        accepted = true;
        break;
      }
      step *= 0.5;
      first_try = false;
    }
    if (!accepted) {
      throw NoConvergence("inner solver: line search failed", v, gm);
    }
    gm = std::sqrt(dn2) / step;
    v = next;
    phi = phi_next;
    if (gm <= cfg.tol) {
      // stationarity at the returned point; a large accepted step would hide
      // the residual behind the ball multiplier, so measure at the initial step
      const double s_check = std::min(step, 1.0 / cfg.lipschitzGuess);
      const Vec g_new = prob.smooth_grad(v);
      const Vec probe = prob.prox_map(v, g_new, s_check);
      const double gm_new = std::sqrt(prob.geo_norm2(probe - v)) / s_check;
      if (gm_new <= cfg.tol) return {v, it + 1, gm_new, phi};
      gm = gm_new;
    }
    if (first_try) step *= 2.0;
  }
  throw NoConvergence("inner solver: maximum iterations exceeded", v, gm);
}

}  // namespace detail

/// Penalised incremental step
///   z ∈ argmin I(t,v) + (η/2)‖v-w‖²_V + R(v-w),
/// computed by proximal gradient started at w. Seeding at w selects the
/// minimiser reachable from the previous state.
inline StepResult prox_step(const EnergyModel& e, const Dissipation& d, const Metric& m, double t,
                            const Vec& w, double eta, const InnerSolverConfig& cfg = {}) {
  cfg.validate();
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw ParameterError("prox_step: eta must be >= 0");
  detail::CompositeProblem prob(e, d, m, t, w, eta);
  const auto sol = detail::solve_composite(prob, w, cfg);
  StepResult r;
  r.z = sol.z;
  r.innerIters = sol.iters;
  r.stationarity = sol.stationarity;
  r.objective = sol.objective;
  return r;
}

/// Ball-constrained incremental step
///   z ∈ argmin { I(t,v) + R(v-w) : ‖v-w‖_V ≤ h }
/// with multiplier λ = dist_{V*}(-D_zI(t,z), ∂R(0)) / h when the constraint is
/// active and λ = 0 otherwise.
///
/// The projected iteration starts at w. Because the problem is posed on a
/// compact ball, a stationary point that is not a minimiser (e.g. a degenerate
/// inflection on the boundary of the stable set) is escaped by probing the
/// ball along the coordinate axes and the negative gradient, restarting from
/// any probe with strictly smaller objective.
inline StepResult ball_step(const EnergyModel& e, const Dissipation& d, const Metric& m, double t,
                            const Vec& w, double h, const InnerSolverConfig& cfg = {}) {
  cfg.validate();
  if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("ball_step: h must be > 0");
  detail::CompositeProblem prob(e, d, m, t, w, 0.0, h);
  auto sol = detail::solve_composite(prob, w, cfg);
  int total_iters = sol.iters;

  const Eigen::Index n = w.size();
  for (int restart = 0; restart < 64; ++restart) {
    const double thresh = 1e-13 * (1.0 + std::abs(sol.objective));
    Vec best;
    double best_phi = sol.objective - thresh;
    std::vector<Vec> dirs;
    for (Eigen::Index i = 0; i < n; ++i) {
      Vec ei = Vec::Unit(n, i);
      ei /= m.norm(ei);
      dirs.push_back(ei);
      dirs.push_back(-ei);
    }
    const Vec g = prob.smooth_grad(sol.z);
    if (g.norm() > 0.0) {
      Vec dg = -m.solve(g);
      dg /= m.norm(dg);
      dirs.push_back(dg);
    }
    for (double frac : {1.0, 0.5, 0.25, 0.125, 0.0625}) {
      for (const Vec& dir : dirs) {
        const Vec cand = prob.feasible(sol.z + frac * h * dir);
        const double phi = prob.objective(cand);
        if (phi < best_phi) {
          best_phi = phi;
          best = cand;
        }
      }
    }
    if (best.size() == 0) break;
    auto again = detail::solve_composite(prob, best, cfg);
    total_iters += again.iters;
    if (!(again.objective < sol.objective)) break;
    sol = again;
  }

  StepResult r;
  r.z = sol.z;
  r.innerIters = total_iters;
  r.stationarity = sol.stationarity;
  r.objective = sol.objective;
  const double active_tol = 1e-8 * h;
  r.active = m.norm(sol.z - w) >= h - active_tol;
  r.lambda = r.active ? dist_to_stable(d, m, -e.grad(t, sol.z)) / h : 0.0;
  return r;
}

/// Global incremental step z ∈ argmin I(t,v) + R(v-w) by a grid scan over a
/// box around w followed by local proximal refinement of the best cells.
/// Global only up to grid resolution; ties go to the smallest grid index.
inline StepResult global_step(const EnergyModel& e, const Dissipation& d, double t, const Vec& w,
                              const InnerSolverConfig& cfg = {}, const GlobalGrid& grid = {}) {
  cfg.validate();
  const Eigen::Index n = e.dim();
  if (n > 3) throw UnsupportedDimension("global_step: grid search supports dim <= 3");
  detail::require_dim(w.size(), n, "global_step");
  if (!(grid.halfWidth > 0.0)) throw ParameterError("global_step: halfWidth must be > 0");
  int p = grid.pointsPerDim;
  if (p <= 0) p = n == 1 ? 4001 : (n == 2 ? 201 : 41);
  if (p % 2 == 0) ++p;
  const Metric euclid(n);
  detail::CompositeProblem prob(e, d, euclid, t, w, 0.0);

  long total = 1;
  for (Eigen::Index i = 0; i < n; ++i) total *= p;
  const double spacing = 2.0 * grid.halfWidth / (p - 1);
  auto point = [&](long idx) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      v[i] = w[i] - grid.halfWidth + spacing * static_cast<double>(idx % p);
      idx /= p;
    }
    return v;
  };
  // centre point is exactly w
  const long centre = [&] {
    long idx = 0;
    long mult = 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      idx += mult * (p / 2);
      mult *= p;
    }
    return idx;
  }();

  std::vector<double> values(static_cast<size_t>(total));
  for (long idx = 0; idx < total; ++idx) {
    const Vec v = idx == centre ? w : point(idx);
    const double phi = prob.objective(v);
    values[static_cast<size_t>(idx)] = std::isfinite(phi) ? phi : std::numeric_limits<double>::infinity();
  }
  std::vector<long> order(static_cast<size_t>(total));
  std::iota(order.begin(), order.end(), 0L);
  const size_t k = std::min<size_t>(order.size(), static_cast<size_t>(std::max(1, grid.refineCandidates)));
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(k), order.end(), [&](long a, long b) {
    const double va = values[static_cast<size_t>(a)];
    const double vb = values[static_cast<size_t>(b)];
    return va < vb || (va == vb && a < b);
  });
  std::vector<long> cands(order.begin(), order.begin() + static_cast<long>(k));
  if (std::find(cands.begin(), cands.end(), centre) == cands.end()) cands.push_back(centre);
  std::sort(cands.begin(), cands.end());

  StepResult best;
  long best_idx = -1;
  int iters = 0;
  for (long idx : cands) {
    const Vec start = idx == centre ? w : point(idx);
    const auto sol = detail::solve_composite(prob, start, cfg);
    iters += sol.iters;
    const double tie = 1e-12 * (1.0 + std::abs(sol.objective));
    if (best_idx < 0 || sol.objective < best.objective - tie) {
      best.z = sol.z;
      best.objective = sol.objective;
      best.stationarity = sol.stationarity;
      best_idx = idx;
    }
  }
  best.innerIters = iters;
  return best;
}

}  // namespace ris
