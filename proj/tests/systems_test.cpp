#include "hamkrr/systems.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "hamkrr/dynamics.hpp"
#include "hamkrr/finite_difference.hpp"
#include "test_support.hpp"

namespace hamkrr {
namespace {

using testing::random_point;
using testing::rel_err;

Vector v4(double a, double b, double c, double d) { return (Vector(4) << a, b, c, d).finished(); }

struct SystemBox {
  const char* name;
  double half_width;
};

// Sampling box half-widths used in the experiments for each system.
constexpr SystemBox kBoxes[] = {{"double_pendulum", 3.0},
                                {"henon_heiles", 1.0},
                                {"frenkel_kontorova", 1.0},
                                {"nonconvex", 3.0},
                                {"two_body", 1.0}};

TEST(Builtin, HenonHeilesExamples) {
  const auto hh = builtin("henon_heiles");
  EXPECT_EQ(hh.d(), 2);
  EXPECT_EQ(hh.h(v4(0, 0, 0, 0)), 0.0);
  EXPECT_NEAR(hh.h(v4(1, 1, 1, 1)), 10.0 / 3.0, 1e-15);
  EXPECT_LT((hh.field(v4(1, 0, 0, 0)) - v4(0, 0, -1, -1)).norm(), 1e-15);
}

TEST(Builtin, HandEvaluatedValues) {
  // double pendulum at the origin: kinetic 0, potential mgl(4 - 2 - 1) = 1.
  EXPECT_NEAR(builtin("double_pendulum").h(v4(0, 0, 0, 0)), 1.0, 1e-15);
  // (p1^2 + 2 p2^2 - 2 p1 p2) / 2 at q1 = q2 with p = (1, 1): 1/2, plus 1.
  EXPECT_NEAR(builtin("double_pendulum").h(v4(0.3, 0.3, 1, 1)),
              0.5 + 4 - 3 * std::cos(0.3), 1e-14);
  EXPECT_NEAR(builtin("frenkel_kontorova").h(v4(0, 1, 0, 0)), -1 - std::cos(1.0) + 0.5,
              1e-15);
  EXPECT_NEAR(builtin("frenkel_kontorova", {{"g", 3.0}}).h(v4(0, 1, 0, 0)),
              -1 - std::cos(1.0) + 1.5, 1e-15);
  EXPECT_NEAR(builtin("nonconvex").h(v4(0, 0, 0, 0)), 1.0, 1e-15);
  EXPECT_NEAR(builtin("two_body").h(v4(1, 0, 0, 1)), -0.5, 1e-15);
}

TEST(Builtin, UnknownNameAndParametersThrow) {
  EXPECT_THROW(builtin("lorenz"), ValidationError);
  EXPECT_THROW(builtin("henon_heiles", {{"g", 1.0}}), ValidationError);
  EXPECT_THROW(builtin("double_pendulum", {{"mass", 1.0}}), ValidationError);
  EXPECT_EQ(builtin_names().size(), 5u);
}

TEST(Builtin, WrongDimensionThrows) {
  EXPECT_THROW(builtin("henon_heiles").h(Vector::Zero(2)), ValidationError);
  EXPECT_THROW(builtin("two_body").field(Vector::Zero(6)), ValidationError);
}

TEST(Builtin, NonconvexSeriesBranchIsContinuous) {
  const auto nc = builtin("nonconvex");
  for (double r : {0.0, 1e-8, 1e-5, 0.999e-3, 1.001e-3, 1e-2}) {
    const Vector z = v4(r, 0, 0, 0);
    const double expected = std::sin(2 * M_PI / 3 * r) + (r == 0 ? 1.0 : std::sin(r) / r);
    EXPECT_NEAR(nc.h(z), expected, 1e-15) << r;
    // d/dr sin(r)/r = (r cos r - sin r) / r^2; the closed form cancels for
    // small r, so the oracle switches to its Taylor series there.
    const double slope = r < 1e-2 ? -r / 3 + std::pow(r, 3) / 30 - std::pow(r, 5) / 840
                                  : (r * std::cos(r) - std::sin(r)) / (r * r);
    EXPECT_NEAR(nc.grad_h(z)[0], 2 * M_PI / 3 * std::cos(2 * M_PI / 3 * r) + slope, 1e-12)
        << r;
  }
  EXPECT_EQ(nc.grad_h(Vector::Zero(4))[1], 0.0);
}

TEST(Builtin, TwoBodyIsSingularAtOrigin) {
  const Vector h = builtin("two_body").field(v4(0, 0, 1, 0));
  EXPECT_FALSE(h.allFinite());
}

TEST(SystemsProperty, GradientMatchesFiniteDifferences) {
  PortableRng rng(1);
  for (const auto& [name, w] : kBoxes) {
    const auto sys = builtin(name);
    for (int t = 0; t < 100;) {
      const Vector z = random_point(rng, 4, -w, w);
      if (std::string(name) == "two_body" && z.head(2).norm() < 0.15) continue;
      ++t;
      const Vector fd = fd::gradient([&](const Vector& x) { return sys.h(x); }, z, 1e-5);
      EXPECT_LE(rel_err(sys.grad_h(z), fd, 1e-12), 1e-6) << name;
      EXPECT_EQ(sys.field(z), apply_J(sys.grad_h(z)));
    }
  }
}

TEST(SystemsProperty, TrueFlowConservesEnergy) {
  PortableRng rng(2);
  for (const auto& [name, w] : kBoxes) {
    const auto sys = builtin(name);
    for (int t = 0; t < 5; ++t) {
      // Circular orbit for the singular two-body problem.
      const Vector z0 = std::string(name) == "two_body" ? v4(1, 0, 0, 1)
                                                        : random_point(rng, 4, -0.5, 0.5);
      const auto traj = integrate([&](const Vector& z) { return sys.field(z); }, z0, 1.0, 1e-3);
      const double h0 = sys.h(z0);
      EXPECT_LE(std::abs(sys.h(traj.final_state()) - h0), 1e-6 * (1.0 + std::abs(h0)))
          << name;
    }
  }
}

TEST(SampleDataset, NoiselessObservationsEqualField) {
  const auto sys = builtin("henon_heiles");
  const auto data = sample_dataset(sys, 50, uniform_box(4, -1, 1), 0.0, 3);
  ASSERT_EQ(data.n(), 50);
  EXPECT_EQ(data.system, "henon_heiles");
  for (std::size_t i = 0; i < data.points.size(); ++i) {
    EXPECT_EQ(data.observations[i], sys.field(data.points[i]));
    EXPECT_TRUE((data.points[i].array().abs() <= 1.0).all());
  }
}

TEST(SampleDataset, SameSeedIsBitIdentical) {
  const auto sys = builtin("nonconvex");
  const auto a = sample_dataset(sys, 30, uniform_box(4, -3, 3), 0.2, 42);
  const auto b = sample_dataset(sys, 30, uniform_box(4, -3, 3), 0.2, 42);
  const auto c = sample_dataset(sys, 30, uniform_box(4, -3, 3), 0.2, 43);
  EXPECT_EQ(a.points, b.points);
  EXPECT_EQ(a.observations, b.observations);
  EXPECT_NE(a.points, c.points);
}

TEST(SampleDataset, NoiseLevelsShareThePoints) {
  const auto sys = builtin("nonconvex");
  const auto a = sample_dataset(sys, 20, uniform_box(4, -3, 3), 0.0, 7);
  const auto b = sample_dataset(sys, 20, uniform_box(4, -3, 3), 0.5, 7);
  EXPECT_EQ(a.points, b.points);
}

TEST(SampleDataset, NoiseStandardDeviationMatchesSigma) {
  const auto sys = builtin("henon_heiles");
  const auto data = sample_dataset(sys, 10000, uniform_box(4, -1, 1), 0.1, 0);
  for (Eigen::Index k = 0; k < 4; ++k) {
    double sum = 0, sq = 0;
    for (std::size_t i = 0; i < data.points.size(); ++i) {
      const double e = data.observations[i][k] - sys.field(data.points[i])[k];
      sum += e;
      sq += e * e;
    }
    const double n = static_cast<double>(data.points.size());
    const double sd = std::sqrt((sq - sum * sum / n) / (n - 1));
    EXPECT_NEAR(sd, 0.1, 0.01) << "coordinate " << k;
  }
}

TEST(SampleDataset, ExclusionRadiusIsHonoured) {
  const auto data = sample_dataset(builtin("two_body"), 200, uniform_box(4, -1, 1), 0.0, 1,
                                   SamplingOptions{0.3});
  for (const auto& z : data.points) EXPECT_GE(z.head(2).norm(), 0.3);
}

TEST(SampleDataset, RejectsBadArguments) {
  const auto sys = builtin("henon_heiles");
  EXPECT_THROW(sample_dataset(sys, 0, uniform_box(4, -1, 1), 0.0, 0), ValidationError);
  EXPECT_THROW(sample_dataset(sys, 5, uniform_box(2, -1, 1), 0.0, 0), ValidationError);
  EXPECT_THROW(sample_dataset(sys, 5, uniform_box(4, 1, -1), 0.0, 0), ValidationError);
  EXPECT_THROW(sample_dataset(sys, 5, uniform_box(4, -1, 1), -0.1, 0), ValidationError);
}

TEST(Dataset, ValidateCatchesShapeErrors) {
  Dataset data;
  data.d = 1;
  data.points = {Vector::Zero(2)};
  data.observations = {Vector::Zero(2)};
  EXPECT_NO_THROW(data.validate());
  data.sigma = -1;
  EXPECT_THROW(data.validate(), ValidationError);
  data.sigma = 0;
  data.observations.push_back(Vector::Zero(2));
  EXPECT_THROW(data.validate(), ValidationError);
  data.points.push_back(Vector::Zero(4));
  EXPECT_THROW(data.validate(), ValidationError);
}

}  // namespace
}  // namespace hamkrr
