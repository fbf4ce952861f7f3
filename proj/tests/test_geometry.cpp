#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "drivelearn/geometry.hpp"
#include "oracles.hpp"

namespace drivelearn {
namespace {

ArcPath l_path() { return ArcPath({{0, 0}, {5, 0}, {5, 5}}); }

// Closest of n uniformly spaced samples along the path.
Projection brute_projection(const ArcPath& path, Point2 p, int n) {
  double best = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double s = path.length() * i / n;
    const double d = distance(p, point_at(path, s));
    if (d < best) {
      best = d;
      best_s = s;
    }
  }
  const Pose2 at = pose_at(path, best_s);
  const double side = cross(unit_vector(at.heading), p - at.position);
  return {best_s, side >= 0 ? best : -best};
}

TEST(ArcProject, StraightLineExamples) {
  const ArcPath path({{0, 0}, {10, 0}});
  auto p = arc_project(path, {3, 1});
  EXPECT_DOUBLE_EQ(p.s, 3.0);
  EXPECT_DOUBLE_EQ(p.lateral, 1.0);
  p = arc_project(path, {0, 0});
  EXPECT_DOUBLE_EQ(p.s, 0.0);
  EXPECT_DOUBLE_EQ(p.lateral, 0.0);
  EXPECT_LT(arc_project(path, {3, -2}).lateral, 0.0);
}

TEST(ArcProject, LPathMatchesBruteForce) {
  const ArcPath path = l_path();
  const Projection p = arc_project(path, {6, 1});
  EXPECT_NEAR(p.s, 6.0, 1e-12);
  EXPECT_NEAR(p.lateral, -1.0, 1e-12);
  const Projection oracle = brute_projection(path, {6, 1}, 10000);
  EXPECT_NEAR(p.s, oracle.s, 1e-3);
  EXPECT_NEAR(p.lateral, oracle.lateral, 1e-3);
}

TEST(ArcProject, RandomPolylinesAgreeWithDenseSampling) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> step(0.5, 3.0), turn(-0.8, 0.8), off(-4.0, 4.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Point2> pts{{0, 0}};
    double h = 0.0;
    for (int k = 0; k < 8; ++k) {
      h += turn(rng);
      pts.push_back(pts.back() + step(rng) * unit_vector(h));
    }
    const ArcPath path(pts);
    for (int q = 0; q < 20; ++q) {
      const Point2 p = point_at(path, path.length() * (q + 0.5) / 20.0) + Point2{off(rng), off(rng)};
      const Projection got = arc_project(path, p);
      const Projection oracle = brute_projection(path, p, 20000);
      // sample spacing bounds the distance error
      const double d = distance(p, point_at(path, got.s));
      EXPECT_NEAR(d, std::abs(oracle.lateral), path.length() / 20000 + 1e-9);
      EXPECT_LE(d, std::abs(oracle.lateral) + 1e-9);
      // beyond either end the offset is measured from the extended end segment
      const Pose2 at = pose_at(path, got.s);
      const Point2 rel = p - at.position;
      if (got.s > 0.0 && got.s < path.length()) {
        EXPECT_NEAR(std::abs(got.lateral), d, 1e-9);
      } else {
        EXPECT_NEAR(got.lateral, cross(unit_vector(at.heading), rel), 1e-9);
      }
      EXPECT_EQ(got.lateral >= 0.0, cross(unit_vector(at.heading), rel) >= 0.0);
    }
  }
}

TEST(PoseAt, Examples) {
  const ArcPath straight({{0, 0}, {10, 0}});
  Pose2 p = pose_at(straight, 4.0);
  EXPECT_EQ(p.position, (Point2{4, 0}));
  EXPECT_EQ(p.heading, 0.0);
  p = pose_at(straight, -1.0);
  EXPECT_EQ(p.position, (Point2{0, 0}));

  p = pose_at(l_path(), 7.0);
  EXPECT_NEAR(p.position.x, 5.0, 1e-12);
  EXPECT_NEAR(p.position.y, 2.0, 1e-12);
  EXPECT_NEAR(p.heading, std::numbers::pi / 2, 1e-12);
}

TEST(SampleAhead, RouteOnStraightPath) {
  const ArcPath path({{0, 0}, {20, 0}});
  const auto pts = sample_ahead(path, 0.0, 0.5, 30);
  ASSERT_EQ(pts.size(), 30u);
  for (int k = 0; k < 30; ++k) {
    EXPECT_NEAR(pts[k].x, 0.5 * (k + 1), 1e-12);
    EXPECT_EQ(pts[k].y, 0.0);
  }
  EXPECT_NEAR(pts.back().x, 15.0, 1e-12);
}

TEST(SampleAhead, ClampsAtEnd) {
  const ArcPath path({{0, 0}, {20, 0}});
  for (const Point2& p : sample_ahead(path, 20.0, 0.5, 5)) EXPECT_EQ(p, (Point2{20, 0}));
}

TEST(SampleAhead, AroundCorner) {
  const auto pts = sample_ahead(l_path(), 4.0, 0.5, 4);
  const std::vector<Point2> expected{{4.5, 0}, {5, 0}, {5, 0.5}, {5, 1}};
  ASSERT_EQ(pts.size(), expected.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_NEAR(pts[i].x, expected[i].x, 1e-12);
    EXPECT_NEAR(pts[i].y, expected[i].y, 1e-12);
  }
}

TEST(ArcPath, RejectsDegenerateInput) {
  EXPECT_THROW(ArcPath({{0, 0}}), std::invalid_argument);
  EXPECT_THROW(ArcPath({{0, 0}, {0, 0}}), std::invalid_argument);
  EXPECT_THROW(ArcPath({{0, 0}, {std::nan(""), 1}}), std::invalid_argument);
}

TEST(Frames, LocalGlobalRoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50, 50), a(-4, 4);
  for (int i = 0; i < 100; ++i) {
    const Pose2 frame{{u(rng), u(rng)}, a(rng)};
    const Point2 p{u(rng), u(rng)};
    const Point2 back = to_global(frame, to_local(frame, p));
    EXPECT_NEAR(back.x, p.x, 1e-9);
    EXPECT_NEAR(back.y, p.y, 1e-9);
  }
  const Pose2 frame{{1, 1}, std::numbers::pi / 2};
  const Point2 local = to_local(frame, {1, 3});
  EXPECT_NEAR(local.x, 2.0, 1e-12);
  EXPECT_NEAR(local.y, 0.0, 1e-12);
}

TEST(NormalizeAngle, WrapsIntoHalfOpenInterval) {
  EXPECT_DOUBLE_EQ(normalize_angle(std::numbers::pi), std::numbers::pi);
  EXPECT_DOUBLE_EQ(normalize_angle(-std::numbers::pi), std::numbers::pi);
  EXPECT_NEAR(normalize_angle(3 * std::numbers::pi / 2), -std::numbers::pi / 2, 1e-12);
  EXPECT_NEAR(normalize_angle(0.3 + 8 * std::numbers::pi), 0.3, 1e-12);
}

TEST(ObbOverlap, Examples) {
  const OrientedBox a{{0, 0}, 0.0, 4.0, 2.0};
  EXPECT_TRUE(obb_overlap(a, a));
  EXPECT_FALSE(obb_overlap(a, OrientedBox{{100, 0}, 0.0, 4.0, 2.0}));
  const OrientedBox b{{3, 0}, std::numbers::pi / 4, 4.0, 2.0};
  EXPECT_EQ(obb_overlap(a, b), testing::sampled_overlap(a, b, 0.0));
  EXPECT_TRUE(obb_overlap(a, b));
}

TEST(ObbOverlap, AgreesWithSamplingOracleOutsideMarginBand) {
  const auto r = testing::obb_oracle_agreement(2000, 11);
  ASSERT_GT(r.compared, 1500);
  EXPECT_GE(r.rate(), 0.999);
}

TEST(ObbOverlap, Symmetric) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(-5, 5), ang(-3.2, 3.2);
  for (int i = 0; i < 500; ++i) {
    const OrientedBox a{{pos(rng), pos(rng)}, ang(rng)};
    const OrientedBox b{{pos(rng), pos(rng)}, ang(rng)};
    EXPECT_EQ(obb_overlap(a, b), obb_overlap(b, a));
  }
}

TEST(FrontCone, Examples) {
  const Pose2 ego{{0, 0}, 0.0};
  EXPECT_TRUE(in_front_cone(ego, {5, 0}, deg_to_rad(30)));
  EXPECT_FALSE(in_front_cone(ego, {-5, 0}, deg_to_rad(30)));
  EXPECT_FALSE(in_front_cone(ego, {0, 0}, deg_to_rad(30)));
  EXPECT_TRUE(in_front_cone(ego, unit_vector(deg_to_rad(29.9)), deg_to_rad(30)));
  EXPECT_FALSE(in_front_cone(ego, unit_vector(deg_to_rad(30.1)), deg_to_rad(30)));
  EXPECT_TRUE(in_front_cone({{1, 1}, std::numbers::pi}, {-3, 1.5}, deg_to_rad(30)));
}

}  // namespace
}  // namespace drivelearn
