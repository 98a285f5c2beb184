#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace nctrl {
namespace {

using std::numbers::pi;

TEST(ModeBasis, EigenvaluesAreMinusMSquared) {
  const ModeBasis b(6);
  ASSERT_EQ(b.eigenvalues().size(), 6u);
  for (int m = 1; m <= 6; ++m) EXPECT_EQ(b.eigenvalues()[m - 1], -static_cast<double>(m * m));
  for (int m = 1; m < 6; ++m) EXPECT_GT(b.eigenvalues()[m - 1], b.eigenvalues()[m]);
  EXPECT_THROW(ModeBasis(0), DomainError);
}

TEST(ModeBasis, QuadratureResolvesProductsOfFirst2MBasisFunctions) {
  for (int modes : {1, 4, 8}) {
    const ModeBasis b(modes);
    double worst = 0.0;
    for (int i = 1; i <= 2 * modes; ++i)
      for (int j = 1; j <= 2 * modes; ++j) {
        double q = 0.0;
        for (std::size_t k = 0; k < b.nodes().size(); ++k) {
          q += b.weights()[k] * ModeBasis::basis(i, b.nodes()[k]) * ModeBasis::basis(j, b.nodes()[k]);
        }
        worst = std::max(worst, std::abs(q - (i == j ? 1.0 : 0.0)));
      }
    EXPECT_LE(worst, 1e-10) << "modes=" << modes;
  }
}

TEST(ProjectField, OrthonormalityAndLinearity) {
  const ModeBasis b(4);
  const Vector e2 = project_field(b, [](double y) { return ModeBasis::basis(2, y); });
  EXPECT_LE((e2 - testing::vec({0, 1, 0, 0})).norm(), 1e-10);
  EXPECT_EQ(project_field(b, [](double) { return 0.0; }).norm(), 0.0);
  const Vector c = project_field(b, [](double y) { return 3 * ModeBasis::basis(1, y) + 4 * ModeBasis::basis(3, y); });
  EXPECT_LE((c - testing::vec({3, 0, 4, 0})).norm(), 1e-10);
}

TEST(ProjectField, NonFiniteSampleReportsLocation) {
  const ModeBasis b(2);
  try {
    project_field(b, [](double y) { return y > 3.0 ? std::nan("") : 0.0; });
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("y="), std::string::npos);
  }
}

TEST(ReconstructField, ExamplesAndRoundTrip) {
  const ModeBasis b(3);
  EXPECT_DOUBLE_EQ(reconstruct_field(b, testing::vec({1, 0, 0}), {pi / 2})[0], ModeBasis::basis(1, pi / 2));
  for (double v : reconstruct_field(b, Vector::Zero(3), {0.1, 1.0, 5.0})) EXPECT_EQ(v, 0.0);
  auto f = [](double y) { return ModeBasis::basis(1, y) - 2 * ModeBasis::basis(2, y); };
  std::vector<double> pts;
  for (int k = 0; k < 17; ++k) pts.push_back(2 * pi * k / 16.0);
  const auto back = reconstruct_field(b, project_field(b, f), pts);
  for (std::size_t k = 0; k < pts.size(); ++k) EXPECT_NEAR(back[k], f(pts[k]), 1e-9);
  EXPECT_THROW(reconstruct_field(b, Vector::Zero(2), pts), DomainError);
}

TEST(ProjectField, ParsevalAtTruncation) {
  const ModeBasis b(8);
  const std::vector<std::function<double(double)>> fields{
      [](double y) { return y * (2 * pi - y); },
      [](double y) { return std::exp(std::sin(y)) - 1.0; },
      [](double y) { return std::cos(3 * y) + 0.5; },
  };
  const ModeBasis fine(40);
  for (const auto& f : fields) {
    double l2 = 0.0;
    for (std::size_t k = 0; k < fine.nodes().size(); ++k) l2 += fine.weights()[k] * f(fine.nodes()[k]) * f(fine.nodes()[k]);
    EXPECT_LE(project_field(b, f).norm(), std::sqrt(l2) + 1e-8);
  }
}

WaveMemoryParams base_params(int modes) {
  WaveMemoryParams p;
  p.mode_count = modes;
  p.horizon = 1.0;
  return p;
}

TEST(WaveScenario, SingleFreeModeIsScalarWave) {
  const ProblemSpec s = build_wave_memory_scenario(base_params(1));
  EXPECT_EQ(s.state_dim, 1);
  EXPECT_EQ(s.a_op(0.3)(0, 0), -1.0);
  EXPECT_FALSE(s.has_kernel());
  EXPECT_TRUE(s.state_independent());
  EXPECT_EQ(s.v0.norm(), 0.0);
  EXPECT_TRUE(validate_spec(s).empty());
}

TEST(WaveScenario, MemoryKernelEntries) {
  WaveMemoryParams p = base_params(3);
  p.kernel_h = [](double tau) { return std::exp(-tau); };
  const ProblemSpec s = build_wave_memory_scenario(p);
  ASSERT_TRUE(s.has_kernel());
  const Matrix k = s.kernel(0.7, 0.2);
  EXPECT_DOUBLE_EQ(k(1, 1), -4.0 * std::exp(-0.5));
  EXPECT_EQ(k(0, 1), 0.0);
  p.potential_F = [](double t) { return 0.5 * std::cos(t); };
  const ProblemSpec sp = build_wave_memory_scenario(p);
  EXPECT_DOUBLE_EQ(sp.a_op(0.4)(2, 2), -9.0 + 0.5 * std::cos(0.4));
}

TEST(WaveScenario, SeparableHistoryConcentratesInModeOne) {
  WaveMemoryParams p = base_params(5);
  p.memory_window = 1.0;
  p.history = [](double th, double y) { return std::sin(y) * std::exp(th); };
  const ProblemSpec s = build_wave_memory_scenario(p);
  for (double th : {-1.0, -0.3, 0.0}) {
    const Vector c = s.history(th);
    EXPECT_NEAR(c(0), std::sqrt(pi) * std::exp(th), 1e-10);
    EXPECT_LE(c.tail(4).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(WaveScenario, DiagonalWithoutMemoryOrPotential) {
  const ProblemSpec s = build_wave_memory_scenario(base_params(4));
  const TimeGrid g = TimeGrid::uniform(1.0, 1e-2);
  const ResolventGrid r = build_resolvent_grid(s, g);
  EXPECT_TRUE(r.diagonal());
  for (int i = 0; i <= g.last(); i += 9)
    for (int j = 0; j <= i; j += 4) {
      const Matrix m = r.R(i, j);
      EXPECT_EQ((m - Matrix(m.diagonal().asDiagonal())).norm(), 0.0);
    }
}

TEST(WaveScenario, IntegralImpulsesAreBounded) {
  WaveMemoryParams p = base_params(6);
  const double amp = 0.8;
  p.impulses.push_back({0.5, [amp](double xi, double y) { return amp * std::sin(xi) * std::cos(y); },
                        [amp](double xi, double y) { return amp * std::cos(xi + y); }});
  const ProblemSpec s = build_wave_memory_scenario(p);
  std::mt19937 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  const double bound = 2 * amp * std::sqrt(2 * pi);
  for (int k = 0; k < 200; ++k) {
    Vector x(6);
    for (int i = 0; i < 6; ++i) x(i) = (k / 20.0) * n(rng);
    EXPECT_LE(s.impulses.jump_state[0](x).norm(), bound);
    EXPECT_LE(s.impulses.jump_velocity[0](x).norm(), bound);
  }
}

TEST(WaveScenario, SaturationJumpMatchesDirectQuadrature) {
  // Single mode, φ(ξ,y) = sin y: ΔE_1 = ∫ g(x₁ϑ₁(ξ)) dξ · ∫ sin y ϑ₁(y) dy.
  WaveMemoryParams p = base_params(1);
  p.impulses.push_back({0.5, [](double, double y) { return std::sin(y); }, {}});
  const ProblemSpec s = build_wave_memory_scenario(p);
  const double x1 = 1.3;
  const ModeBasis fine(1, 64);
  double inner = 0.0;
  for (std::size_t k = 0; k < fine.nodes().size(); ++k) {
    const double r = x1 * ModeBasis::basis(1, fine.nodes()[k]);
    inner += fine.weights()[k] * r * r / (pi * (1 + r * r));
  }
  const double want = inner * std::sqrt(pi);  // ∫ sin y ϑ₁(y) dy = √π
  ASSERT_GT(want, 0.1);
  EXPECT_NEAR(s.impulses.jump_state[0](testing::vec({x1}))(0), want, 1e-10);
  EXPECT_EQ(s.impulses.jump_velocity[0](testing::vec({x1}))(0), 0.0);
}

TEST(WaveScenario, RejectsNonFiniteKernelAndHistory) {
  WaveMemoryParams p = base_params(2);
  p.kernel_h = [](double tau) { return tau > 0.5 ? std::nan("") : 1.0; };
  EXPECT_THROW(build_wave_memory_scenario(p), NumericError);
  WaveMemoryParams q = base_params(2);
  q.memory_window = 1.0;
  q.history = [](double th, double y) { return th < -0.5 ? std::log(-y) : 0.0; };
  EXPECT_THROW(build_wave_memory_scenario(q), NumericError);
}

}  // namespace
}  // namespace nctrl
