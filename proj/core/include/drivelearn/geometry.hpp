#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace drivelearn {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double k, Point2 a) { return {k * a.x, k * a.y}; }
  friend bool operator==(Point2 a, Point2 b) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }
inline Point2 unit_vector(double heading) { return {std::cos(heading), std::sin(heading)}; }

/// Wraps an angle into (-pi, pi].
double normalize_angle(double angle);

struct Pose2 {
  Point2 position;
  double heading = 0.0;
};

/// Expresses `p` in the frame attached to `frame` (origin at its position,
/// +x along its heading).
Point2 to_local(const Pose2& frame, Point2 p);
/// Rotates a free vector into the frame's axes (no translation).
Point2 rotate_to_local(const Pose2& frame, Point2 v);
Point2 to_global(const Pose2& frame, Point2 local);

/// Piecewise-linear path parametrized by arc length.
class ArcPath {
 public:
  ArcPath() = default;
  /// Throws std::invalid_argument on fewer than two points, non-finite
  /// coordinates, or repeated consecutive points.
  explicit ArcPath(std::vector<Point2> points);

  const std::vector<Point2>& points() const { return points_; }
  const std::vector<double>& cum_s() const { return cum_s_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  double length() const { return cum_s_.empty() ? 0.0 : cum_s_.back(); }
  Point2 front() const { return points_.front(); }
  Point2 back() const { return points_.back(); }

  /// Index of the segment [i, i+1] containing arc-length s (already clamped).
  std::size_t segment_index(double s) const;

 private:
  std::vector<Point2> points_;
  std::vector<double> cum_s_;
};

struct Projection {
  double s = 0.0;
  double lateral = 0.0;  // positive left of the travel direction
};

Projection arc_project(const ArcPath& path, Point2 p);
Pose2 pose_at(const ArcPath& path, double s);
Point2 point_at(const ArcPath& path, double s);
std::vector<Point2> sample_ahead(const ArcPath& path, double s0, double spacing, int count);

/// Concatenates paths end to start, dropping duplicated junction points.
ArcPath concatenate(std::span<const ArcPath> parts);

/// Resamples an arbitrary dense polyline at (approximately) uniform spacing,
/// keeping both endpoints.
std::vector<Point2> resample_uniform(std::span<const Point2> dense, double spacing);

struct OrientedBox {
  Point2 center;
  double heading = 0.0;
  double length = 4.5;
  double width = 1.8;

  /// Corners in order front-left, front-right, rear-right, rear-left.
  std::array<Point2, 4> corners() const;
};

/// Separating-axis test; touching boundaries count as overlap.
bool obb_overlap(const OrientedBox& a, const OrientedBox& b);

bool in_front_cone(const Pose2& ego, Point2 target, double half_angle);

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace drivelearn
