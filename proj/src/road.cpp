#include "simcan/road.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace simcan {

namespace {

double cross(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Signed curvature of the circle through a, b, c (Menger curvature).
double menger_curvature(const Point2& a, const Point2& b, const Point2& c) {
  const double ab = (b - a).norm();
  const double bc = (c - b).norm();
  const double ca = (a - c).norm();
  const double denom = ab * bc * ca;
  if (denom == 0.0) return 0.0;
  return 2.0 * cross(b - a, c - a) / denom;
}

}  // namespace

RoadCurve::RoadCurve(std::vector<Point2> waypoints) : points_(std::move(waypoints)) {
  if (points_.size() < 2) throw std::invalid_argument("road needs at least 2 waypoints");
  cumulative_.reserve(points_.size());
  cumulative_.push_back(0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double len = (points_[i] - points_[i - 1]).norm();
    if (len == 0.0) {
      throw std::invalid_argument("duplicate consecutive waypoints at index " + std::to_string(i - 1) + " and " +
                                  std::to_string(i));
    }
    cumulative_.push_back(cumulative_.back() + len);
  }

  vertex_curvature_.assign(points_.size(), 0.0);
  for (std::size_t i = 1; i + 1 < points_.size(); ++i) {
    vertex_curvature_[i] = menger_curvature(points_[i - 1], points_[i], points_[i + 1]);
  }
  if (points_.size() > 2) {
    vertex_curvature_.front() = vertex_curvature_[1];
    vertex_curvature_.back() = vertex_curvature_[points_.size() - 2];
  }
}

std::size_t RoadCurve::segment_index(double s) const {
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  std::size_t idx = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  return std::min(idx, points_.size() - 2);
}

Point2 RoadCurve::point_at(double s) const {
  const std::size_t i = segment_index(s);
  const Point2 dir = (points_[i + 1] - points_[i]).normalized();
  return points_[i] + dir * (s - cumulative_[i]);
}

Point2 RoadCurve::tangent_at(double s) const {
  const std::size_t i = segment_index(s);
  return (points_[i + 1] - points_[i]).normalized();
}

double RoadCurve::curvature_at(double s) const {
  const std::size_t i = segment_index(s);
  const double span = cumulative_[i + 1] - cumulative_[i];
  const double u = std::clamp((s - cumulative_[i]) / span, 0.0, 1.0);
  return (1.0 - u) * vertex_curvature_[i] + u * vertex_curvature_[i + 1];
}

RoadProjection RoadCurve::project_range(const Point2& p, std::size_t first, std::size_t last) const {
  RoadProjection best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = first; i <= last; ++i) {
    const Point2 a = points_[i];
    const Point2 seg = points_[i + 1] - a;
    const double len = cumulative_[i + 1] - cumulative_[i];
    const double lo = i == 0 ? -std::numeric_limits<double>::infinity() : 0.0;
    const double hi = i + 2 == points_.size() ? std::numeric_limits<double>::infinity() : 1.0;
    const double u = std::clamp((p - a).dot(seg) / (len * len), lo, hi);
    const Point2 foot = a + u * seg;
    const double dist = (p - foot).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best.s = cumulative_[i] + u * len;
      best.foot = foot;
      const double side = cross(seg, p - foot);
      best.lateral_offset = side >= 0.0 ? dist : -dist;
    }
  }
  return best;
}

RoadProjection RoadCurve::project(const Point2& p) const { return project_range(p, 0, points_.size() - 2); }

RoadProjection RoadCurve::project(const Point2& p, double s_hint, double window) const {
  return project_range(p, segment_index(s_hint - window), segment_index(s_hint + window));
}

}  // namespace simcan
