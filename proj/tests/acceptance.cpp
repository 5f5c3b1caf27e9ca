// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

using namespace ris;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

SchemeConfig cfg_of(SchemeKind kind) {
  SchemeConfig c;
  c.kind = kind;
  return c;
}

Verdict c1_local_min_trajectory() {
  const auto t0 = Clock::now();
  const auto p = make_toy51(1.0);
  double worst_jump = 0.0;
  double worst_rest = 0.0;
  double worst_dt = 0.0;
  bool reached = true;
  for (double h : {0.1, 0.01}) {
    auto c = cfg_of(SchemeKind::LocalMin);
    c.h = h;
    const auto tr = run_local_min(p.model, p.dissipation, Metric(1), p.z0, c);
    reached = reached && tr.terminated == Termination::ReachedT;
    const int kstar = static_cast<int>(std::ceil(2.0 / h - 1e-9));
    for (int k = 0; k <= kstar && k < static_cast<int>(tr.nodes.size()); ++k) {
      worst_jump = std::max({worst_jump, std::abs(tr.nodes[k].t),
                             std::abs(tr.nodes[k].z[0] - (2.0 + std::min(k * h, 2.0)))});
    }
    for (size_t k = kstar + 1; k < tr.nodes.size(); ++k) {
      worst_rest = std::max(worst_rest, std::abs(tr.nodes[k].z[0] - 4.0));
      // the final step is cut at T
      if (k + 1 < tr.nodes.size()) worst_dt = std::max(worst_dt, std::abs(tr.nodes[k].t - tr.nodes[k - 1].t - h));
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = reached && worst_jump <= 1e-8 && worst_rest <= 1e-6 && worst_dt <= 1e-8 && secs < 1.0;
  return {ok, fmt("jump-phase err %.2e, rest err %.2e, dt err %.2e, %.3f s", worst_jump, worst_rest, worst_dt, secs)};
}

Verdict c2_relaxed_constant() {
  const auto p = make_toy51(1.0);
  double worst = 0.0;
  int max_inner = 0;
  bool reached = true;
  for (double eta : {1.5, 2.0, 10.0}) {
    for (int N : {10, 100}) {
      auto c = cfg_of(SchemeKind::RelaxedLocalMin);
      c.N = N;
      c.eta = eta;
      c.delta = 1e-8;
      const auto tr = run_relaxed_local_min(p.model, p.dissipation, Metric(1), p.z0, c);
      reached = reached && tr.terminated == Termination::ReachedT;
      for (const auto& n : tr.nodes) worst = std::max(worst, std::abs(n.z[0] - 2.0));
      const auto m = tr.inner_counts();
      for (size_t k = 1; k < m.size(); ++k) max_inner = std::max(max_inner, m[k]);
    }
  }
  return {reached && worst <= 1e-8 && max_inner == 1,
          fmt("max |z-2| = %.2e, max inner iterations per step = %d", worst, max_inner)};
}

Verdict c3_global_jumps() {
  double worst = 0.0;
  for (double kappa : {0.5, 1.0, 2.0}) {
    const auto p = make_toy51(kappa);
    const double oracle = grid_oracle(
        [&](double v) { return p.model.value(0, Vec::Constant(1, v)) + kappa * std::abs(v - 2.0); }, -4, 10, 1e-3, 4);
    auto c = cfg_of(SchemeKind::GlobalIncremental);
    c.N = 10;
    const auto tr = run_global_incremental(p.model, p.dissipation, p.z0, c);
    worst = std::max({worst, std::abs(tr.nodes[1].z[0] - 4.0), std::abs(oracle - 4.0)});
  }
  return {worst <= 1e-5, fmt("max |z_1 - 4| (solver and oracle) = %.2e", worst)};
}

Verdict c4_classification() {
  const auto p = make_toy51(1.0);
  double worst = 0.0;
  bool all = true;
  for (double alpha : {0.0, 0.3, 1.0, std::numeric_limits<double>::infinity()}) {
    const auto r = classify_bv_solution(exact_solutions_51(1.0, alpha), p.model, p.dissipation, Metric(1), 1e-8, p.z0);
    all = all && r.isParametrizedSolution;
    worst = std::max(worst, r.worstViolation);
  }
  const auto& base = p.model;
  const auto shifted = EnergyModel::custom(
      1, 1.0, [base](double s, const Vec& z) { return base.value(s, z) + 0.1 * s; },
      [base](double s, const Vec& z) { return base.dt(s, z); }, [base](double s, const Vec& z) { return base.grad(s, z); });
  const auto bad = classify_bv_solution(exact_solutions_51(1.0, 0.3), shifted, p.dissipation, Metric(1), 1e-8, p.z0);
  return {all && !bad.isParametrizedSolution,
          fmt("exact curves worst violation %.2e; offset curve violation %.3f (%s)", worst, bad.worstViolation,
              bad.isParametrizedSolution ? "accepted" : "rejected")};
}

Verdict c5_relaxed_counts() {
  const auto p = make_toy52();
  auto c = cfg_of(SchemeKind::RelaxedLocalMin);
  c.N = 100;
  c.eta = 100;
  c.delta = 1e-3;
  const auto tr = run_relaxed_local_min(p.model, p.dissipation, Metric(1), p.z0, c);
  const int total = tr.minimizations();
  const auto m = tr.inner_counts();
  const auto it = std::max_element(m.begin(), m.end());
  const int kmax = static_cast<int>(it - m.begin());
  const bool ok = tr.terminated == Termination::ReachedT && std::abs(total - 400) <= 20 && kmax >= 84 && kmax <= 88 &&
                  std::abs(*it - 127) <= 6.35;
  return {ok, fmt("total %d (400 +- 20), max %d (127 +- 6.35) at k = %d (want 84..88)%s", total, *it, kmax,
                  total == 400 && *it == 127 && kmax == 86 ? ", exact match" : "")};
}

Verdict c6_local_min_count() {
  const auto p = make_toy52();
  auto c = cfg_of(SchemeKind::LocalMin);
  c.h = p.T / 90;
  const auto tr = run_local_min(p.model, p.dissipation, Metric(1), p.z0, c);
  const int steps = tr.steps();
  return {tr.terminated == Termination::ReachedT && std::abs(steps - 150) <= 7.5,
          fmt("%d steps to reach T (150 +- 7.5)", steps)};
}

Verdict c7_remainder_decay() {
  const auto p = make_toy52();
  std::vector<double> lh, lr, r;
  for (int div : {90, 180, 360}) {
    auto c = cfg_of(SchemeKind::LocalMin);
    c.h = p.T / div;
    const auto curve = parametrize_local_min(run_local_min(p.model, p.dissipation, Metric(1), p.z0, c), Metric(1));
    const double rem = std::abs(diagnose(curve, p.model, p.dissipation, Metric(1)).remainderIntegral);
    r.push_back(rem);
    lh.push_back(std::log(c.h));
    lr.push_back(std::log(rem));
  }
  const double mh = (lh[0] + lh[1] + lh[2]) / 3;
  const double mr = (lr[0] + lr[1] + lr[2]) / 3;
  double num = 0.0;
  double den = 0.0;
  for (int j = 0; j < 3; ++j) {
    num += (lh[j] - mh) * (lr[j] - mr);
    den += (lh[j] - mh) * (lh[j] - mh);
  }
  const double slope = num / den;
  return {r[0] > r[1] && r[1] > r[2] && slope >= 0.8,
          fmt("|int r| = %.3e, %.3e, %.3e; slope %.3f", r[0], r[1], r[2], slope)};
}

Verdict c8_identities() {
  const auto t0 = Clock::now();
  int cases = 0;
  int bad = 0;
  double worst = 0.0;
  std::string first_bad;
  for (const auto& gc : fixtures::identity_grid()) {
    const Problem pr = make_problem(gc.problem);
    const auto s = fixtures::solve(pr, gc.config);
    const double rel = std::abs(s.report.energyResidual) / (1.0 + std::abs(s.report.initialEnergy));
    ++cases;
    worst = std::max(worst, rel);
    if (!(rel <= 1e-6) || s.trace.terminated != Termination::ReachedT) {
      if (bad++ == 0) first_bad = gc.problem + "/" + to_string(gc.config.kind);
    }
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && cases >= 12 && secs < 30.0,
          fmt("%d combinations, worst relative residual %.2e, %d failing%s%s, %.2f s", cases, worst, bad,
              bad ? " first " : "", first_bad.c_str(), secs)};
}

Verdict c9_stationarity() {
  double worst_ratio = 0.0;
  int runs = 0;
  for (const auto& gc : fixtures::identity_grid()) {
    const SchemeKind k = gc.config.kind;
    if (k != SchemeKind::RelaxedLocalMin && k != SchemeKind::AlternateMin) continue;
    const Problem pr = make_problem(gc.problem);
    const auto s = fixtures::solve(pr, gc.config);
    const double bound = gc.config.eta * gc.config.delta + 10 * gc.config.inner.tol;
    worst_ratio = std::max(worst_ratio, s.report.maxStationarityAtNodes / bound);
    ++runs;
  }
  {
    const auto p = make_toy52();
    auto c = cfg_of(SchemeKind::RelaxedLocalMin);
    c.N = 100;
    c.eta = 100;
    c.delta = 1e-3;
    const auto s = fixtures::solve(make_problem("toy52"), c);
    worst_ratio = std::max(worst_ratio, s.report.maxStationarityAtNodes / (c.eta * c.delta + 10 * c.inner.tol));
    ++runs;
  }
  return {worst_ratio <= 1.0, fmt("%d runs, worst stationarity / bound = %.3f", runs, worst_ratio)};
}

Verdict c10_alternate_contract() {
  const auto demo = make_coupled_demo(8);
  const Metric mU(demo.model->C(), MetricKind::U);
  const Metric mZ(demo.model->A(), MetricKind::Z);
  const double scale = 1.0 + demo.model->C().norm();
  double worst_gu = 0.0;
  bool stopped = true;
  std::vector<double> lengths;
  for (int N : {50, 100, 200}) {
    auto c = cfg_of(SchemeKind::AlternateMin);
    c.N = N;
    c.eta = 50;
    c.delta = 1e-4;
    const auto tr = run_alternate_min(*demo.model, demo.dissipation, Metric(8), mU, demo.z0, c);
    stopped = stopped && tr.terminated == Termination::ReachedT;
    const auto m = tr.inner_counts();
    for (size_t k = 1; k < m.size(); ++k) stopped = stopped && m[k] >= 1 && m[k] < c.maxInnerIters;
    double len = 0.0;
    for (size_t j = 1; j < tr.nodes.size(); ++j) {
      worst_gu = std::max(worst_gu, demo.model->grad_u(tr.nodes[j].t, tr.nodes[j].u, tr.nodes[j - 1].z).norm());
      len += mZ.norm(tr.nodes[j].z - tr.nodes[j - 1].z);
    }
    lengths.push_back(len);
  }
  const double lo = *std::min_element(lengths.begin(), lengths.end());
  const double hi = *std::max_element(lengths.begin(), lengths.end());
  const double spread = (hi - lo) / lo;
  return {stopped && worst_gu <= 1e-10 * scale && spread < 0.25,
          fmt("max |D_uE| = %.2e (bound %.2e), stopping %s, Z-lengths %.4f %.4f %.4f (spread %.1f%%)", worst_gu,
              1e-10 * scale, stopped ? "reached" : "missed", lengths[0], lengths[1], lengths[2], 100 * spread)};
}

Verdict c11_oracle() {
  const auto r = fixtures::oracle_equivalence(200, 20240611);
  return {r.instances == 200 && r.failures == 0,
          fmt("%d instances, %d mismatches, worst deviation %.2e", r.instances, r.failures, r.worst)};
}

Verdict c12_visco_energetic() {
  const auto p = make_toy52();
  bool complete = true;
  bool ordered = true;
  std::string rows;
  for (int N : {100, 500, 1500, 3000}) {
    double jt[2];
    int idx = 0;
    for (double ratio : {0.5, 10.0}) {
      auto c = cfg_of(SchemeKind::ViscoEnergetic);
      c.N = N;
      c.mu = ratio;
      const auto tr = run_viscous(p.model, p.dissipation, Metric(1), p.z0, c);
      complete = complete && tr.terminated == Termination::ReachedT;
      jt[idx++] = largest_step(tr, Metric(1)).t;
    }
    ordered = ordered && jt[1] <= jt[0];
    rows += fmt(" N=%d: t(0.5)=%.4f t(10)=%.4f;", N, jt[0], jt[1]);
  }
  return {complete && ordered, fmt("8 runs %s;%s", complete ? "complete" : "incomplete", rows.c_str())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"local-min trajectory on the quartic example", c1_local_min_trajectory},
      {"relaxed scheme stays at z = 2", c2_relaxed_constant},
      {"global scheme jumps to z = 4 at once", c3_global_jumps},
      {"BV classification of the exact curves", c4_classification},
      {"relaxed inner step counts on toy52", c5_relaxed_counts},
      {"local-min step count on toy52", c6_local_min_count},
      {"remainder decays linearly in h", c7_remainder_decay},
      {"discrete energy identities close", c8_identities},
      {"stationarity after acceptance", c9_stationarity},
      {"alternate minimisation contract", c10_alternate_contract},
      {"oracle equivalence", c11_oracle},
      {"visco-energetic jump ordering", c12_visco_energetic},
  };
  int failed = 0;
  for (size_t j = 0; j < criteria.size(); ++j) {
    Verdict v;
    try {
      v = criteria[j].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", j + 1, criteria[j].first, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
