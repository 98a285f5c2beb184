#include <cmath>

#include <gtest/gtest.h>

#include "reference_solver.hpp"
#include "test_support.hpp"

namespace nctrl {
namespace {

using testing::diagonal_spec;
using testing::scalar_spec;
using testing::vec;

ProblemSpec free_wave(double a, double b, double horizon) {
  ProblemSpec s = scalar_spec(-1.0, horizon);
  s.history.phi = [a](double) { return vec({a}); };
  s.v0 = vec({b});
  return s;
}

TEST(MildSolver, FreeResponseMatchesCosineSine) {
  const double a = 0.7, b = -0.4;
  const ProblemSpec spec = free_wave(a, b, 1.0);
  const TimeGrid g = TimeGrid::uniform(1.0, 1e-3);
  const ResolventGrid res = build_resolvent_grid(spec, g);
  const PicardResult sol = picard_solve(spec, res, {});
  double err = 0.0;
  for (int i = 0; i <= g.last(); ++i) {
    err = std::max(err, std::abs(sol.trajectory.values[i](0) - (a * std::cos(g[i]) + b * std::sin(g[i]))));
  }
  EXPECT_LE(err, 5e-6);
  EXPECT_GE(sol.report.iterations, 1);
  EXPECT_LT(sol.report.residual, 1e-10);
}

TEST(MildSolver, ImpulseJumpsMatchShiftedSineFamily) {
  // Zero data, then ΔE = d and ΔE' = c at t_q: x = d cos(t - t_q) + c sin(t - t_q) after t_q.
  const double tq = 0.4, d = 0.3, c = -0.2;
  ProblemSpec spec = scalar_spec(-1.0, 1.0);
  spec.impulses.times = {tq};
  spec.impulses.jump_state = {[d](const Vector&) { return vec({d}); }};
  spec.impulses.jump_velocity = {[c](const Vector&) { return vec({c}); }};
  const TimeGrid g = TimeGrid::uniform(1.0, 1e-3, {tq});
  const ResolventGrid res = build_resolvent_grid(spec, g);
  const Trajectory x = picard_solve(spec, res, {}).trajectory;
  const int nq = g.impulse_nodes()[0];
  EXPECT_EQ(x.left(nq)(0), 0.0);
  EXPECT_EQ(x.right(nq)(0), d);
  double err = 0.0;
  for (int i = 0; i <= g.last(); ++i) {
    const double want = g[i] < tq ? 0.0 : d * std::cos(g[i] - tq) + c * std::sin(g[i] - tq);
    err = std::max(err, std::abs(x.right(i)(0) - want));
  }
  EXPECT_LE(err, 1e-6);
}

ProblemSpec nonlinear_impulsive() {
  ProblemSpec spec = diagonal_spec({-1.0, -4.0}, 1.0);
  spec.kernel = [](double t, double s) -> Matrix { return -0.3 * std::exp(-(t - s)) * Matrix::Identity(2, 2); };
  spec.f1 = [](double, const Vector& x) -> Vector { return 0.2 * x.array().sin().matrix(); };
  spec.f2 = [](double, const HistorySegment& seg) -> Vector { return 0.1 * seg(-0.2); };
  spec.history.memory_window = 1.0;
  spec.history.phi = [](double th) { return vec({std::cos(th), 0.5 * std::exp(th)}); };
  spec.v0 = vec({0.2, -0.1});
  spec.impulses.times = {0.3, 0.65};
  for (int q = 0; q < 2; ++q) {
    spec.impulses.jump_state.push_back(
        [](const Vector& x) -> Vector { return 0.2 * (x.array().square() / (1.0 + x.array().square())).matrix(); });
    spec.impulses.jump_velocity.push_back([](const Vector& x) -> Vector { return -0.1 * x; });
  }
  return spec;
}

TEST(MildSolver, JumpsEqualImpulseMapOfLeftLimitExactly) {
  const ProblemSpec spec = nonlinear_impulsive();
  const TimeGrid g = TimeGrid::uniform(1.0, 2e-3, spec.impulses.times);
  const ResolventGrid res = build_resolvent_grid(spec, g);
  const Trajectory x = picard_solve(spec, res, {}).trajectory;
  for (std::size_t q = 0; q < spec.impulses.size(); ++q) {
    const int n = g.impulse_nodes()[q];
    const Vector jump = x.right(n) - x.left(n);
    const Vector want = spec.impulses.jump_state[q](x.left(n));
    EXPECT_LE((jump - want).norm(), 4 * std::numeric_limits<double>::epsilon() * (1.0 + x.left(n).norm()));
  }
}

TEST(MildSolver, NeutralScenarioMatchesDirectReference) {
  const ProblemSpec spec = nonlinear_impulsive();
  const TimeGrid g = TimeGrid::uniform(1.0, 1e-3, spec.impulses.times);
  const ResolventGrid res = build_resolvent_grid(spec, g);
  const Trajectory x = picard_solve(spec, res, {}).trajectory;
  // d/dt [0.1 Φ(t - 0.2)] at t = 0.
  const Vector y1 = 0.1 * vec({-std::sin(-0.2), 0.5 * std::exp(-0.2)});
  testing::ReferenceSolver ref(spec, g, y1);
  EXPECT_LE(testing::reference_distance(x, ref.solve()), 1e-4);
}

TEST(MildSolver, SuperpositionForStateIndependentProblems) {
  ProblemSpec spec = diagonal_spec({-1.0, -2.0}, 1.0);
  spec.kernel = [](double t, double s) -> Matrix { return -0.2 * std::exp(-(t - s)) * Matrix::Identity(2, 2); };
  spec.history.phi = [](double) { return vec({0.3, -0.1}); };
  spec.b_op = Matrix::Identity(2, 2);
  const TimeGrid g = TimeGrid::uniform(1.0, 1e-2);
  const ResolventGrid res = build_resolvent_grid(spec, g);
  ControlSignal u1(g.size()), u2(g.size()), u12(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    u1[k] = vec({std::sin(3 * g[k]), 0.0});
    u2[k] = vec({0.5, g[k]});
    u12[k] = u1[k] + u2[k];
  }
  const Trajectory x0 = picard_solve(spec, res, {}).trajectory;
  const Trajectory x1 = picard_solve(spec, res, u1).trajectory;
  const Trajectory x2 = picard_solve(spec, res, u2).trajectory;
  const Trajectory x12 = picard_solve(spec, res, u12).trajectory;
  for (int i = 0; i <= g.last(); ++i) {
    const Vector lhs = x12.values[i] - x0.values[i];
    const Vector rhs = (x1.values[i] - x0.values[i]) + (x2.values[i] - x0.values[i]);
    EXPECT_LE((lhs - rhs).norm(), 1e-12);
  }
}

TEST(MildSolver, GridRefinementConverges) {
  const ProblemSpec spec = nonlinear_impulsive();
  auto endpoint = [&](double h) {
    const TimeGrid g = TimeGrid::uniform(1.0, h, spec.impulses.times);
    return picard_solve(spec, build_resolvent_grid(spec, g), {}).trajectory.values.back();
  };
  const Vector a = endpoint(8e-3), b = endpoint(4e-3), c = endpoint(2e-3);
  const double d1 = (a - b).norm(), d2 = (b - c).norm();
  EXPECT_LT(d2, d1);
  EXPECT_GT(d1 / d2, 2.5);
}

TEST(MildSolver, NeutralInitialVelocity) {
  ProblemSpec spec = scalar_spec(-1.0, 1.0);
  spec.history.memory_window = 1.0;
  spec.history.phi = [](double th) { return vec({std::cos(th)}); };
  spec.f2 = [](double, const HistorySegment& seg) -> Vector { return 0.1 * seg(-0.2); };
  EXPECT_NEAR(neutral_initial_velocity(spec, 1e-3)(0), 0.1 * std::sin(0.2), 1e-8);
  spec.v0_neutral = vec({42.0});
  EXPECT_EQ(neutral_initial_velocity(spec, 1e-3)(0), 42.0);
  spec.f2 = {};
  spec.v0_neutral.reset();
  EXPECT_EQ(neutral_initial_velocity(spec, 1e-3)(0), 0.0);
}

TEST(MildSolver, DivergentNeutralTermRaisesConvergenceError) {
  ProblemSpec spec = free_wave(1.0, 0.0, 1.0);
  spec.f2 = [](double, const HistorySegment& seg) -> Vector { return 1.5 * seg(0.0); };
  const TimeGrid g = TimeGrid::uniform(1.0, 1e-2);
  const ResolventGrid res = build_resolvent_grid(spec, g);
  try {
    picard_solve(spec, res, {}, {.tol = 1e-10, .max_iter = 30});
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    ASSERT_GE(e.distances().size(), 2u);
    EXPECT_GT(e.distances().back(), e.distances().front());
  }
}

TEST(MildSolver, NonFiniteForcingNamesTerm) {
  ProblemSpec spec = free_wave(1.0, 0.0, 1.0);
  spec.f1 = [](double t, const Vector&) -> Vector { return vec({t > 0.5 ? std::nan("") : 0.0}); };
  const TimeGrid g = TimeGrid::uniform(1.0, 1e-2);
  const ResolventGrid res = build_resolvent_grid(spec, g);
  try {
    picard_solve(spec, res, {});
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("f1"), std::string::npos);
  }
}

TEST(MildSolver, RejectsUnalignedGridAndBadControl) {
  ProblemSpec spec = nonlinear_impulsive();
  const TimeGrid off = TimeGrid::uniform(1.0, 7e-3);
  const TimeGrid bad(off.nodes(), spec.impulses.times);
  const ResolventGrid res = build_resolvent_grid(spec, bad);
  EXPECT_THROW(picard_solve(spec, res, {}), DomainError);
  const TimeGrid g = TimeGrid::uniform(1.0, 1e-2, spec.impulses.times);
  const ResolventGrid ok = build_resolvent_grid(spec, g);
  EXPECT_THROW(picard_solve(spec, ok, ControlSignal(3, vec({0.0, 0.0}))), DomainError);
  EXPECT_THROW(picard_solve(spec, ok, {}, {.tol = 0.0}), DomainError);
}

TEST(MildSolver, ContractionEstimateBelowOneOnConvergedSolve) {
  const ProblemSpec spec = nonlinear_impulsive();
  const TimeGrid g = TimeGrid::uniform(1.0, 5e-3, spec.impulses.times);
  const PicardResult sol = picard_solve(spec, build_resolvent_grid(spec, g), {});
  EXPECT_LT(sol.report.contraction_estimate, 1.0);
  EXPECT_GT(sol.report.ball_radius, 0.0);
  EXPECT_EQ(sol.report.distances.size(), static_cast<std::size_t>(sol.report.iterations) + 1);
}

}  // namespace
}  // namespace nctrl
