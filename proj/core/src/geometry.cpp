#include "drivelearn/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace drivelearn {

double normalize_angle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  if (a > std::numbers::pi) a -= kTwoPi;
  return a;
}

Point2 rotate_to_local(const Pose2& frame, Point2 v) {
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  return {c * v.x + s * v.y, -s * v.x + c * v.y};
}

Point2 to_local(const Pose2& frame, Point2 p) {
  return rotate_to_local(frame, p - frame.position);
}

Point2 to_global(const Pose2& frame, Point2 local) {
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  return {frame.position.x + c * local.x - s * local.y,
          frame.position.y + s * local.x + c * local.y};
}

ArcPath::ArcPath(std::vector<Point2> points) : points_(std::move(points)) {
  if (points_.size() < 2) {
    throw std::invalid_argument("ArcPath needs at least two points");
  }
  cum_s_.reserve(points_.size());
  cum_s_.push_back(0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const Point2 p = points_[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw std::invalid_argument("ArcPath point is not finite");
    }
    const double seg = distance(points_[i - 1], p);
    if (!(seg > 0.0)) {
      throw std::invalid_argument("ArcPath has repeated consecutive points at index " +
                                  std::to_string(i));
    }
    cum_s_.push_back(cum_s_.back() + seg);
  }
}

std::size_t ArcPath::segment_index(double s) const {
  const auto it = std::upper_bound(cum_s_.begin(), cum_s_.end(), s);
  std::size_t idx = it == cum_s_.begin() ? 0 : static_cast<std::size_t>(it - cum_s_.begin()) - 1;
  return std::min(idx, points_.size() - 2);
}

Projection arc_project(const ArcPath& path, Point2 p) {
  const auto& pts = path.points();
  const auto& cum = path.cum_s();
  const std::size_t nseg = pts.size() - 1;

  double best_d = std::numeric_limits<double>::infinity();
  Projection best;
  for (std::size_t i = 0; i < nseg; ++i) {
    const Point2 a = pts[i];
    const Point2 ab = pts[i + 1] - a;
    const double len = cum[i + 1] - cum[i];
    const double t = std::clamp(dot(p - a, ab) / (len * len), 0.0, 1.0);
    const Point2 closest = a + t * ab;
    const double d = distance(p, closest);
    // strict improvement keeps the smaller-s candidate on ties
    if (d < best_d - 1e-12) {
      best_d = d;
      const Point2 u = (1.0 / len) * ab;
      const double side = cross(u, p - closest);
      best.s = cum[i] + t * len;
      const bool open_end = (t <= 0.0 && i == 0) || (t >= 1.0 && i + 1 == nseg);
      if ((t > 0.0 && t < 1.0) || open_end) {
        best.lateral = side;
      } else {
        best.lateral = side >= 0.0 ? d : -d;
      }
    }
  }
  return best;
}

Pose2 pose_at(const ArcPath& path, double s) {
  const double sc = std::clamp(s, 0.0, path.length());
  const std::size_t i = path.segment_index(sc);
  const Point2 a = path.points()[i];
  const Point2 b = path.points()[i + 1];
  const double len = path.cum_s()[i + 1] - path.cum_s()[i];
  const double t = (sc - path.cum_s()[i]) / len;
  return {a + t * (b - a), std::atan2(b.y - a.y, b.x - a.x)};
}

Point2 point_at(const ArcPath& path, double s) { return pose_at(path, s).position; }

std::vector<Point2> sample_ahead(const ArcPath& path, double s0, double spacing, int count) {
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int k = 1; k <= count; ++k) {
    out.push_back(point_at(path, s0 + k * spacing));
  }
  return out;
}

ArcPath concatenate(std::span<const ArcPath> parts) {
  std::vector<Point2> pts;
  for (const ArcPath& part : parts) {
    for (const Point2& p : part.points()) {
      if (!pts.empty() && distance(pts.back(), p) < 1e-9) continue;
      pts.push_back(p);
    }
  }
  return ArcPath(std::move(pts));
}

std::vector<Point2> resample_uniform(std::span<const Point2> dense, double spacing) {
  std::vector<double> cum(dense.size(), 0.0);
  for (std::size_t i = 1; i < dense.size(); ++i) {
    cum[i] = cum[i - 1] + distance(dense[i - 1], dense[i]);
  }
  const double total = cum.back();
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(total / spacing)));
  std::vector<Point2> out;
  out.reserve(n + 1);
  std::size_t j = 0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double s = total * static_cast<double>(k) / static_cast<double>(n);
    while (j + 2 < dense.size() && cum[j + 1] < s) ++j;
    const double seg = cum[j + 1] - cum[j];
    const double t = seg > 0.0 ? std::clamp((s - cum[j]) / seg, 0.0, 1.0) : 0.0;
    out.push_back(dense[j] + t * (dense[j + 1] - dense[j]));
  }
  out.front() = dense.front();
  out.back() = dense.back();
  return out;
}

std::array<Point2, 4> OrientedBox::corners() const {
  const Point2 u = unit_vector(heading);
  const Point2 n{-u.y, u.x};
  const Point2 f = (0.5 * length) * u;
  const Point2 l = (0.5 * width) * n;
  return {center + f + l, center + f - l, center - f - l, center - f + l};
}

namespace {

double half_extent(const OrientedBox& box, Point2 axis) {
  const Point2 u = unit_vector(box.heading);
  const Point2 n{-u.y, u.x};
  return 0.5 * box.length * std::abs(dot(u, axis)) + 0.5 * box.width * std::abs(dot(n, axis));
}

}  // namespace

bool obb_overlap(const OrientedBox& a, const OrientedBox& b) {
  const Point2 ua = unit_vector(a.heading);
  const Point2 ub = unit_vector(b.heading);
  const std::array<Point2, 4> axes{ua, Point2{-ua.y, ua.x}, ub, Point2{-ub.y, ub.x}};
  const Point2 d = b.center - a.center;
  for (const Point2& axis : axes) {
    if (std::abs(dot(d, axis)) > half_extent(a, axis) + half_extent(b, axis)) return false;
  }
  return true;
}

bool in_front_cone(const Pose2& ego, Point2 target, double half_angle) {
  const Point2 d = target - ego.position;
  if (d.x == 0.0 && d.y == 0.0) return false;
  const double bearing = normalize_angle(std::atan2(d.y, d.x) - ego.heading);
  return std::abs(bearing) <= half_angle;
}

}  // namespace drivelearn
