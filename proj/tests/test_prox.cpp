#include "support.hpp"

#include <gtest/gtest.h>

using namespace ris;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

EnergyModel quadratic(double a, double load) {
  return EnergyModel::semilinear(Mat::Constant(1, 1, a), Nonlinearity::zero(),
                                 {[load](double) { return Vec::Constant(1, load); }, [](double) { return Vec::Zero(1).eval(); }},
                                 1.0);
}

}  // namespace

TEST(ProxStep, ConstantSolutionOfQuartic) {
  const auto t = make_toy51(1.0);
  const auto r = prox_step(t.model, t.dissipation, Metric(1), 0.0, v1(2), 1.5);
  EXPECT_NEAR(r.z[0], 2.0, 1e-10);
  EXPECT_EQ(r.lambda, 0.0);
}

TEST(ProxStep, ScalarKkt) {
  // 2z − 1 + 0.3 = 0 on the branch z < 1.
  const auto e = quadratic(1.0, 0.0);
  const auto r = prox_step(e, Dissipation::uniform(1, 0.3), Metric(1), 0.0, v1(1), 1.0);
  EXPECT_NEAR(r.z[0], 0.65, 1e-9);
  const double oracle = grid_oracle([](double v) { return 0.5 * v * v + 0.5 * (v - 1) * (v - 1) + 0.3 * std::abs(v - 1); },
                                    -2, 3, 1e-4, 3);
  EXPECT_NEAR(r.z[0], oracle, 1e-6);
}

TEST(ProxStep, FixedPointStaysPut) {
  const auto e = quadratic(1.0, 0.5);
  const auto r = prox_step(e, Dissipation::uniform(1, 1.0), Metric(1), 0.0, v1(0.2), 3.0);
  EXPECT_NEAR(r.z[0], 0.2, 1e-10);
}

TEST(ProxStep, RejectsNegativeEta) {
  const auto e = quadratic(1.0, 0.0);
  EXPECT_THROW(prox_step(e, Dissipation::uniform(1, 1), Metric(1), 0.0, v1(0), -1.0), ParameterError);
}

TEST(BallStep, QuarticFirstStep) {
  const auto t = make_toy51(1.0);
  const auto r = ball_step(t.model, t.dissipation, Metric(1), 0.0, v1(2), 0.1);
  EXPECT_NEAR(r.z[0], 2.1, 1e-10);
  EXPECT_TRUE(r.active);
  // dist(−D_zI(0,2.1), [−1,1]) = 1.019 − 1 = 0.019, divided by h.
  EXPECT_NEAR(r.lambda, 0.19, 1e-8);
  const double oracle =
      grid_oracle([&](double v) { return t.model.value(0, v1(v)) + std::abs(v - 2); }, 1.9, 2.1, 1e-5, 3);
  EXPECT_NEAR(r.z[0], oracle, 1e-6);
}

TEST(BallStep, StablePointDoesNotMove) {
  const auto e = quadratic(1.0, 0.5);
  const auto r = ball_step(e, Dissipation::uniform(1, 1.0), Metric(1), 0.0, v1(0.2), 0.5);
  EXPECT_NEAR(r.z[0], 0.2, 1e-10);
  EXPECT_EQ(r.lambda, 0.0);
  EXPECT_FALSE(r.active);
  EXPECT_THROW(ball_step(e, Dissipation::uniform(1, 1.0), Metric(1), 0.0, v1(0.2), 0.0), ParameterError);
}

TEST(GlobalStep, Examples) {
  const auto t = make_toy51(1.0);
  EXPECT_NEAR(global_step(t.model, t.dissipation, 0.0, v1(2)).z[0], 4.0, 1e-6);
  EXPECT_NEAR(global_step(quadratic(1, 0), Dissipation::uniform(1, 1), 0.3, v1(0)).z[0], 0.0, 1e-10);
  EXPECT_NEAR(global_step(quadratic(1, 2), Dissipation::uniform(1, 1), 0.0, v1(0)).z[0], 1.0, 1e-8);
  const auto chain = make_chain(4);
  EXPECT_THROW(global_step(chain, Dissipation::uniform(4, 1), 0.0, Vec::Zero(4)), UnsupportedDimension);
}

TEST(Steps, VariationalInequalityAndDescent) {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> U(-1, 1), H(0.05, 0.8);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = 1 + trial % 3;
    const EnergyModel e = make_chain(n, 1.0 + U(rng));
    Vec k(n), w(n), mw(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      k[i] = 0.3 + std::abs(U(rng));
      w[i] = 1.5 * U(rng);
      mw[i] = 0.5 + std::abs(U(rng));
    }
    const Dissipation d(k);
    const Metric m = Metric::diagonal(mw);
    const double t = 0.5 + 0.4 * U(rng);
    const double eta = 4.0;
    const double h = H(rng);
    const auto rp = prox_step(e, d, m, t, w, eta);
    const auto rb = ball_step(e, d, m, t, w, h);
    auto obj_p = [&](const Vec& v) { return e.value(t, v) + 0.5 * eta * m.norm(v - w) * m.norm(v - w) + eval_R(d, v - w); };
    auto obj_b = [&](const Vec& v) { return e.value(t, v) + eval_R(d, v - w); };
    EXPECT_LE(obj_p(rp.z), obj_p(w) + 1e-10);
    EXPECT_LE(obj_b(rb.z), obj_b(w) + 1e-10);
    EXPECT_LE(m.norm(rb.z - w), h * (1 + 1e-10));
    // λ(‖z−w‖ − h) = 0
    EXPECT_LE(rb.lambda * std::abs(m.norm(rb.z - w) - h), 1e-8 * h * std::max(1.0, rb.lambda));
    const Vec xi_p = -eta * m.apply(rp.z - w) - e.grad(t, rp.z);
    const Vec xi_b = -rb.lambda * m.apply(rb.z - w) - e.grad(t, rb.z);
    for (int s = 0; s < 50; ++s) {
      Vec v(n);
      for (Eigen::Index i = 0; i < n; ++i) v[i] = U(rng);
      EXPECT_GE(eval_R(d, v) + 1e-6, xi_p.dot(v));
      EXPECT_GE(eval_R(d, v) + 1e-6 * (1 + rb.lambda), xi_b.dot(v))
          << "trial " << trial << " lambda " << rb.lambda << " stat " << rb.stationarity << " active " << rb.active
          << " |z-w| " << m.norm(rb.z - w) << " h " << h << " iters " << rb.innerIters;
    }
  }
}

TEST(Steps, NonDiagonalMetricProx) {
  Mat M(2, 2);
  M << 2, 0.5, 0.5, 1;
  const Metric m(M);
  const auto e = make_chain(2, 1.5);
  const Dissipation d = Dissipation::uniform(2, 0.4);
  const Vec w = Vec::Constant(2, 0.3);
  const double eta = 5.0;
  const auto r = prox_step(e, d, m, 0.8, w, eta);
  const Vec xi = -eta * m.apply(r.z - w) - e.grad(0.8, r.z);
  // Optimality: ξ ∈ ∂R(z − w) componentwise.
  for (int i = 0; i < 2; ++i) {
    const double dz = r.z[i] - w[i];
    if (std::abs(dz) > 1e-8) EXPECT_NEAR(xi[i], 0.4 * (dz > 0 ? 1 : -1), 1e-6);
    else EXPECT_LE(std::abs(xi[i]), 0.4 + 1e-6);
  }
  const auto rb = ball_step(e, d, m, 0.8, w, 0.05);
  EXPECT_LE(m.norm(rb.z - w), 0.05 * (1 + 1e-9));
}

TEST(Steps, AgreeWithGridOracle) {
  const auto res = fixtures::oracle_equivalence(60, 99);
  EXPECT_EQ(res.failures, 0) << "worst " << res.worst;
}

TEST(GridOracle, Examples) {
  EXPECT_NEAR(grid_oracle([](double x) { return (x - 3) * (x - 3); }, 0, 10, 1e-3, 3), 3.0, 1e-6);
  const auto t = make_toy51(1.0);
  EXPECT_NEAR(grid_oracle([&](double v) { return t.model.value(0, v1(v)) + std::abs(v - 2); }, 0, 8, 1e-3, 3), 4.0,
              1e-6);
  EXPECT_NEAR(grid_oracle([](double x) { return std::abs(x); }, -1, 1, 1e-3, 3), 0.0, 1e-12);
  EXPECT_THROW(grid_oracle([](double) { return NAN; }, 0, 1, 0.1, 0), NumericalError);
  EXPECT_THROW(grid_oracle([](double x) { return x; }, 1, 0, 0.1, 0), ParameterError);
}
