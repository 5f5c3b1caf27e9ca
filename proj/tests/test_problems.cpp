#include "ris/problems.hpp"

#include <gtest/gtest.h>

using namespace ris;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

}  // namespace

TEST(Toy51, GradientAndStableSet) {
  const auto t = make_toy51(1.0);
  EXPECT_NEAR(t.model.grad(0.3, v1(2))[0], -1.0, 1e-14);
  EXPECT_NEAR(t.model.grad(0.3, v1(4))[0], -1.0, 1e-14);
  const auto t3 = make_toy51(3.0);
  EXPECT_NEAR(t3.model.grad(0.0, v1(2))[0], -3.0, 1e-14);
  // z is stable iff |(z-2)²(z-4) - κ| ≤ κ
  for (double z : {2.0, 4.0, 4.2}) {
    EXPECT_LE(dist_to_stable(t.dissipation, Metric(1), -t.model.grad(0, v1(z))), 1e-12) << z;
  }
  EXPECT_GT(dist_to_stable(t.dissipation, Metric(1), -t.model.grad(0, v1(3))), 0.0);
  // z* solves (z-2)²(z-4) = 2κ
  EXPECT_NEAR((t.zStar - 2) * (t.zStar - 2) * (t.zStar - 4), 2.0, 1e-9);
  // I(2) - I(4) = ∫₂⁴ κ - (z-2)²(z-4) dz
  EXPECT_NEAR(t.model.value(0, v1(2)) - t.model.value(0, v1(4)), 2.0 + 4.0 / 3.0, 1e-12);
}

TEST(Toy52, CurvatureBoundedBelow) {
  const auto t = make_toy52();
  EXPECT_EQ(t.T, 1.5);
  EXPECT_EQ(t.z0[0], 1.0);
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 150; ++i) {
    for (int j = 0; j <= 400; ++j) {
      lo = std::min(lo, t.model.hessian(0.01 * i, v1(-1.0 + 0.005 * j))(0, 0));
    }
  }
  // attained at t = T, 3z² ≈ 0.5
  EXPECT_GE(lo, -46.3);
  EXPECT_LT(lo, -46.2);
  // derivative check against finite differences
  const double eps = 1e-6;
  for (double z : {-0.7, 0.1, 0.9}) {
    const double fd = (t.model.value(1.2, v1(z + eps)) - t.model.value(1.2, v1(z - eps))) / (2 * eps);
    EXPECT_NEAR(t.model.grad(1.2, v1(z))[0], fd, 1e-6);
    const double fdt = (t.model.value(1.2 + eps, v1(z)) - t.model.value(1.2 - eps, v1(z))) / (2 * eps);
    EXPECT_NEAR(t.model.dt(1.2, v1(z)), fdt, 1e-6);
  }
}

TEST(CoupledDemo, ReducedOperatorAndBlockSpectrum) {
  const auto demo = make_coupled_demo(1);
  const auto& ce = *demo.model;
  Mat block(2, 2);
  block << ce.C(), ce.B(), ce.B().transpose(), ce.A();
  Eigen::SelfAdjointEigenSolver<Mat> es(block);
  EXPECT_NEAR(es.eigenvalues()[0], 1.5, 1e-14);
  EXPECT_NEAR(es.eigenvalues()[1], 2.5, 1e-14);
  // F'' vanishes at 1/√3, leaving A - B²/C = 2 - 0.25/2
  EXPECT_NEAR(ce.reduced().hessian(0.0, v1(1.0 / std::sqrt(3.0)))(0, 0), 1.875, 1e-14);
  // C u0 = -B z0
  EXPECT_NEAR(demo.u0[0], -0.25, 1e-14);
  EXPECT_NEAR(ce.grad_u(0.0, demo.u0, demo.z0).norm(), 0.0, 1e-14);
}

TEST(CoupledDemo, BlockStaysPositiveForLargeN) {
  for (Eigen::Index n : {2, 8, 32}) {
    const auto demo = make_coupled_demo(n);
    const auto& ce = *demo.model;
    Mat block(2 * n, 2 * n);
    block << ce.C(), ce.B(), ce.B().transpose(), ce.A();
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat>(block).eigenvalues().minCoeff(), 0.0) << n;
  }
  EXPECT_THROW(make_coupled_demo(0), ParameterError);
}

TEST(ExactSolutions, Shape) {
  const auto c = exact_solutions_51(1.0, 0.3);
  EXPECT_NEAR(c.S(), 3.0, 1e-14);
  EXPECT_EQ(c.t.back(), 1.0);
  EXPECT_EQ(c.z.back()[0], 4.0);
  const auto g = reconstruct_time_graph(c, {0.2, 0.3, 0.5});
  EXPECT_EQ(g[0].zLast[0], 2.0);
  EXPECT_EQ(g[1].zFirst[0], 2.0);
  EXPECT_EQ(g[1].zLast[0], 4.0);
  EXPECT_EQ(g[2].zFirst[0], 4.0);

  const auto never = exact_solutions_51(1.0, std::numeric_limits<double>::infinity());
  EXPECT_NEAR(never.S(), 1.0, 1e-14);
  for (const auto& z : never.z) EXPECT_EQ(z[0], 2.0);

  const auto at_end = exact_solutions_51(1.0, 1.0);
  EXPECT_EQ(at_end.z.back()[0], 4.0);
  EXPECT_EQ(at_end.t.back(), 1.0);

  EXPECT_THROW(exact_solutions_51(1.0, 1.5), ParameterError);
  EXPECT_THROW(exact_solutions_51(0.0, 0.2), ParameterError);
}

TEST(MakeProblem, ParsesIds) {
  const auto a = make_problem("toy51:kappa=2,T=3");
  EXPECT_EQ(a.T(), 3.0);
  EXPECT_EQ(a.dissipation.weights()[0], 2.0);
  EXPECT_FALSE(a.is_coupled());
  const auto b = make_problem("coupled:n=3");
  EXPECT_TRUE(b.is_coupled());
  EXPECT_EQ(b.z0.size(), 3);
  EXPECT_EQ(b.u0.size(), 3);
  EXPECT_EQ(b.metricZ.kind(), MetricKind::Z);
  EXPECT_EQ(make_problem("chain").z0.size(), 4);
  EXPECT_NEAR(make_problem("toy52").T(), 1.5, 0);
  EXPECT_THROW(make_problem("nope"), ParameterError);
  EXPECT_THROW(make_problem("toy51:lambda=2"), ParameterError);
  EXPECT_THROW(make_problem("chain:n=2.5"), ParameterError);
  EXPECT_THROW(make_problem("toy51:kappa"), ParameterError);
  EXPECT_THROW(make_problem("toy51:kappa=x"), ParameterError);
  for (const auto& info : list_problems()) EXPECT_NO_THROW(make_problem(info.id)) << info.id;
}

TEST(GridOracle, FindsInteriorAndBoundaryMinima) {
  EXPECT_NEAR(grid_oracle([](double x) { return (x - 0.123456) * (x - 0.123456); }, -1, 1, 1e-2, 5), 0.123456, 1e-7);
  EXPECT_EQ(grid_oracle([](double x) { return x; }, -2, 1, 0.1, 2), -2.0);
  EXPECT_THROW(grid_oracle([](double x) { return x; }, 0, 1, 0.0, 2), ParameterError);
  EXPECT_THROW(grid_oracle([](double x) { return x; }, 0, 1, 0.1, -1), ParameterError);
}
