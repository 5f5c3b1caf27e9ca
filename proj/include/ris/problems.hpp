#pragma once

// Built-in problems, analytic reference curves and a brute-force 1D oracle.

#include "ris/parametrize.hpp"

#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace ris {

struct Toy51 {
  EnergyModel model;
  Dissipation dissipation;
  Vec z0;
  double zStar;  // largest stable state: root > 4 of (z-2)²(z-4) = 2κ
};

/// I(t,z) = -κz + z⁴/4 - 8z³/3 + 10z² - 16z, R = κ|·|, z0 = 2.
inline Toy51 make_toy51(double kappa, double T = 1.0) {
  if (!(kappa > 0.0)) throw ParameterError("make_toy51: kappa must be > 0");
  auto value = [kappa](double, const Vec& z) {
    const double x = z[0];
    return -kappa * x + 0.25 * x * x * x * x - 8.0 / 3.0 * x * x * x + 10.0 * x * x - 16.0 * x;
  };
  auto dt = [](double, const Vec&) { return 0.0; };
  auto grad = [kappa](double, const Vec& z) {
    const double x = z[0];
    return Vec::Constant(1, -kappa + (x - 2.0) * (x - 2.0) * (x - 4.0));
  };
  auto hess = [](double, const Vec& z) {
    const double x = z[0];
    return Mat::Constant(1, 1, (x - 2.0) * (3.0 * x - 10.0));
  };
  double lo = 4.0;
  double hi = 5.0;
  auto g = [](double x) { return (x - 2.0) * (x - 2.0) * (x - 4.0); };
  while (g(hi) < 2.0 * kappa) hi *= 2.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 2.0 * kappa ? lo : hi) = mid;
  }
  return {EnergyModel::custom(1, T, value, dt, grad, hess), Dissipation::uniform(1, kappa), Vec::Constant(1, 2.0),
          0.5 * (lo + hi)};
}

struct Toy52 {
  EnergyModel model;
  Dissipation dissipation;
  Vec z0;
  double T;
};

/// I(t,z) = 5z² - t²/(2(0.1+z²)), R = 10|·|, z0 = 1, T = 1.5.
inline Toy52 make_toy52() {
  const double T = 1.5;
  auto value = [](double t, const Vec& z) {
    const double x = z[0];
    return 5.0 * x * x - t * t / (2.0 * (0.1 + x * x));
  };
  auto dt = [](double t, const Vec& z) { return -t / (0.1 + z[0] * z[0]); };
  auto grad = [](double t, const Vec& z) {
    const double x = z[0];
    const double q = 0.1 + x * x;
    return Vec::Constant(1, (10.0 + t * t / (q * q)) * x);
  };
  auto hess = [](double t, const Vec& z) {
    const double x = z[0];
    const double q = 0.1 + x * x;
    return Mat::Constant(1, 1, 10.0 + t * t * (0.1 - 3.0 * x * x) / (q * q * q));
  };
  return {EnergyModel::custom(1, T, value, dt, grad, hess), Dissipation::uniform(1, 10.0), Vec::Constant(1, 1.0), T};
}

inline Mat tridiag_spd(Eigen::Index n) {
  Mat M = 2.0 * Mat::Identity(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    M(i, i + 1) = -1.0;
    M(i + 1, i) = -1.0;
  }
  return M;
}

struct CoupledDemo {
  std::shared_ptr<const CoupledEnergyModel> model;
  Dissipation dissipation;
  Vec z0;
  Vec u0;
};

/// C = A = 2I + tridiag(-1), B = βI, F = Σ (z_i² - 1)²/4, ℓ_z = t(1..1), ℓ_u = 0,
/// κ = 1/2, z0 = (1..1), C u0 = -B z0, T = 1. β = min(1/2, λ_min(A)/2) keeps the
/// block operator positive definite for every n (β = 1/2 for n ≤ 2).
inline CoupledDemo make_coupled_demo(Eigen::Index n, double T = 1.0) {
  if (n < 1) throw ParameterError("make_coupled_demo: n must be >= 1");
  Nonlinearity F{[](const Vec& z) { return 0.25 * (z.array().square() - 1.0).square().sum(); },
                 [](const Vec& z) { return Vec(z.array().cube() - z.array()); },
                 [](const Vec& z) { return Mat((3.0 * z.array().square() - 1.0).matrix().asDiagonal()); }};
  const Mat A = tridiag_spd(n);
  const double beta = std::min(0.5, 0.5 * Eigen::SelfAdjointEigenSolver<Mat>(A).eigenvalues().minCoeff());
  auto ce = std::make_shared<const CoupledEnergyModel>(A, beta * Mat::Identity(n, n), A, F,
                                                       Load::zero(n), Load::linear(Vec::Ones(n)), T);
  const Vec z0 = Vec::Ones(n);
  const Vec u0 = ce->solve_u(0.0, z0);
  return {ce, Dissipation::uniform(n, 0.5), z0, u0};
}

/// Semilinear chain: A = 2I + tridiag(-1), F = Σ (z_i⁴/4 - z_i²),
/// ℓ_i(t) = c t (1 + i/n), κ = 1/2, z0 = 0, T = 1.
inline EnergyModel make_chain(Eigen::Index n, double c = 2.0, double T = 1.0) {
  if (n < 1) throw ParameterError("make_chain: n must be >= 1");
  Nonlinearity F{[](const Vec& z) { return (0.25 * z.array().pow(4) - z.array().square()).sum(); },
                 [](const Vec& z) { return Vec(z.array().cube() - 2.0 * z.array()); },
                 [](const Vec& z) { return Mat((3.0 * z.array().square() - 2.0).matrix().asDiagonal()); }};
  Vec dir(n);
  for (Eigen::Index i = 0; i < n; ++i) dir[i] = c * (1.0 + static_cast<double>(i) / static_cast<double>(n));
  return EnergyModel::semilinear(tridiag_spd(n), F, Load::linear(dir), T);
}

/// Analytic solutions of the quartic example, parametrised by arc length:
/// rest at z = 2 until t = α, jump 2 → 4 at frozen time, then rest at z = 4.
/// α = +∞ gives the curve that never leaves z = 2 (S = T).
inline ParametrizedCurve exact_solutions_51(double kappa, double alpha, double T = 1.0, int nodes = 1000) {
  if (!(kappa > 0.0)) throw ParameterError("exact_solutions_51: kappa must be > 0");
  const bool never = std::isinf(alpha) && alpha > 0.0;
  if (!never && !(alpha >= 0.0 && alpha <= T)) throw ParameterError("exact_solutions_51: alpha outside [0, T]");
  if (nodes < 4) throw ParameterError("exact_solutions_51: need at least 4 nodes");
  const double S = never ? T : T + 2.0;
  auto t_of = [&](double s) { return never || s <= alpha ? s : (s <= alpha + 2.0 ? alpha : s - 2.0); };
  auto z_of = [&](double s) { return never || s <= alpha ? 2.0 : (s <= alpha + 2.0 ? 2.0 + s - alpha : 4.0); };
  std::vector<double> grid;
  for (int j = 0; j < nodes; ++j) grid.push_back(S * j / (nodes - 1));
  if (!never) {
    grid.push_back(alpha);
    grid.push_back(alpha + 2.0);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(), [](double a, double b) { return std::abs(a - b) < 1e-14; }),
             grid.end());
  grid.back() = S;
  ParametrizedCurve c;
  c.tFinal = T;
  c.metricKind = CurveMetric::V;
  for (size_t j = 0; j < grid.size(); ++j) {
    const double s = grid[j];
    c.s.push_back(s);
    c.t.push_back(t_of(s));
    c.z.push_back(Vec::Constant(1, z_of(s)));
    c.k.push_back(static_cast<int>(j));
    c.i.push_back(0);
    if (j > 0) {
      const double dt = c.t[j] - c.t[j - 1];
      c.segKind.push_back(dt > 0.0 ? SegKind::TimeUpdate : SegKind::StateUpdate);
      c.sigmaBar.push_back(s - grid[j - 1]);
      // multiplier along the jump: dist(-D_zI, ∂R(0)) / ‖ẑ'‖ = (z-2)²(4-z) at the midpoint
      const double zm = 0.5 * (c.z[j][0] + c.z[j - 1][0]);
      c.lambda.push_back(dt > 0.0 ? 0.0 : (zm - 2.0) * (zm - 2.0) * (4.0 - zm));
    }
  }
  return c;
}

/// Brute-force 1D minimiser: uniform scan at the given resolution, then
/// `refineRounds` rescans of the best cell, each 10× finer.
template <class F>
double grid_oracle(F f, double lo, double hi, double resolution, int refineRounds) {
  if (!(lo < hi)) throw ParameterError("grid_oracle: need lo < hi");
  if (!(resolution > 0.0)) throw ParameterError("grid_oracle: resolution must be > 0");
  if (refineRounds < 0) throw ParameterError("grid_oracle: refineRounds must be >= 0");
  double a = lo;
  double b = hi;
  double step = resolution;
  double best = lo;
  for (int round = 0; round <= refineRounds; ++round) {
    const auto n = static_cast<long>(std::ceil((b - a) / step));
    double best_val = std::numeric_limits<double>::infinity();
    for (long j = 0; j <= n; ++j) {
      const double x = std::min(a + step * static_cast<double>(j), b);
      const double v = f(x);
      if (!std::isfinite(v)) throw NumericalError("grid_oracle: non-finite value");
      if (v < best_val) {
        best_val = v;
        best = x;
      }
    }
    a = std::max(lo, best - step);
    b = std::min(hi, best + step);
    step /= 10.0;
  }
  return best;
}

/// A problem addressable by string id, with every metric the schemes need.
struct Problem {
  std::string id;
  EnergyModel model;  // for coupled problems, the model with u eliminated
  Dissipation dissipation;
  Metric metricV;
  Metric metricZ;
  Metric metricU;
  Vec z0;
  Vec u0;  // empty unless coupled
  std::shared_ptr<const CoupledEnergyModel> coupled;

  double T() const { return model.t_final(); }
  bool is_coupled() const { return static_cast<bool>(coupled); }
};

struct ProblemInfo {
  std::string id;
  std::string parameters;
  std::string description;
};

inline std::vector<ProblemInfo> list_problems() {
  return {{"toy51", "kappa=1,T=1", "quartic with jump 2 -> 4 at t = 0, R = kappa|v|"},
          {"toy52", "", "I = 5z^2 - t^2/(2(0.1+z^2)), R = 10|v|, z0 = 1, T = 1.5"},
          {"coupled", "n=8", "quadratic u-block coupled to a double-well z-block (alternate minimisation)"},
          {"chain", "n=4,c=2", "semilinear chain with quartic F and ramp load"}};
}

namespace detail {

/// Splits "name:key=val,key=val" into the name and a parameter map.
inline std::pair<std::string, std::map<std::string, double>> parse_problem_id(const std::string& id) {
  const auto colon = id.find(':');
  std::string name = id.substr(0, colon);
  std::map<std::string, double> params;
  if (colon != std::string::npos) {
    std::stringstream ss(id.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ParameterError("problem id: expected key=value in '" + item + "'");
      const std::string key = item.substr(0, eq);
      try {
        size_t used = 0;
        const double v = std::stod(item.substr(eq + 1), &used);
        if (used != item.size() - eq - 1) throw std::invalid_argument(key);
        params[key] = v;
      } catch (const std::exception&) {
        throw ParameterError("problem id: bad value for '" + key + "'");
      }
    }
  }
  return {name, params};
}

inline double take(std::map<std::string, double>& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  if (it == p.end()) return fallback;
  const double v = it->second;
  p.erase(it);
  return v;
}

}  // namespace detail

/// Builds a problem from ids such as "toy51:kappa=1,T=1", "toy52", "coupled:n=8", "chain:n=4".
inline Problem make_problem(const std::string& id) {
  auto [name, p] = detail::parse_problem_id(id);
  auto finish = [&](Problem pr) {
    if (!p.empty()) throw ParameterError("problem '" + name + "': unknown parameter '" + p.begin()->first + "'");
    return pr;
  };
  if (name == "toy51") {
    const double kappa = detail::take(p, "kappa", 1.0);
    const double T = detail::take(p, "T", 1.0);
    auto t = make_toy51(kappa, T);
    return finish(Problem{id, t.model, t.dissipation, Metric(1, MetricKind::V), Metric(1, MetricKind::Z),
                          Metric(1, MetricKind::U), t.z0, Vec(), nullptr});
  }
  if (name == "toy52") {
    auto t = make_toy52();
    return finish(Problem{id, t.model, t.dissipation, Metric(1, MetricKind::V), Metric(1, MetricKind::Z),
                          Metric(1, MetricKind::U), t.z0, Vec(), nullptr});
  }
  if (name == "coupled") {
    const double n = detail::take(p, "n", 8.0);
    const double T = detail::take(p, "T", 1.0);
    if (n < 1 || n != std::floor(n)) throw ParameterError("coupled: n must be a positive integer");
    auto c = make_coupled_demo(static_cast<Eigen::Index>(n), T);
    const auto dim = static_cast<Eigen::Index>(n);
    return finish(Problem{id, c.model->reduced(), c.dissipation, Metric(dim, MetricKind::V),
                          Metric(c.model->A(), MetricKind::Z), Metric(c.model->C(), MetricKind::U), c.z0, c.u0,
                          c.model});
  }
  if (name == "chain") {
    const double n = detail::take(p, "n", 4.0);
    const double cc = detail::take(p, "c", 2.0);
    const double T = detail::take(p, "T", 1.0);
    if (n < 1 || n != std::floor(n)) throw ParameterError("chain: n must be a positive integer");
    const auto dim = static_cast<Eigen::Index>(n);
    EnergyModel e = make_chain(dim, cc, T);
    Metric mz(e.A(), MetricKind::Z);
    return finish(Problem{id, e, Dissipation::uniform(dim, 0.5), Metric(dim, MetricKind::V), mz,
                          Metric(dim, MetricKind::U), Vec::Zero(dim), Vec(), nullptr});
  }
  throw ParameterError("unknown problem '" + name + "'");
}

}  // namespace ris
