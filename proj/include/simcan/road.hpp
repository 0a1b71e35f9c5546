#pragma once

#include <vector>

#include <Eigen/Core>

namespace simcan {

using Point2 = Eigen::Vector2d;

/// Result of projecting a position onto the centerline.
struct RoadProjection {
  double s = 0.0;               ///< arc length of the foot point
  double lateral_offset = 0.0;  ///< signed distance, positive to the left of travel
  Point2 foot = Point2::Zero();
};

/// Arc-length parameterized polyline centerline.
///
/// Curvature is estimated per vertex from the circle through the vertex and
/// its two neighbours (signed, positive for left turns), and interpolated
/// linearly in arc length between vertices. End vertices copy their
/// neighbour's estimate.
class RoadCurve {
 public:
  /// Throws std::invalid_argument for fewer than two points or duplicate
  /// consecutive points.
  explicit RoadCurve(std::vector<Point2> waypoints);

  double total_length() const { return cumulative_.back(); }
  const std::vector<Point2>& waypoints() const { return points_; }

  /// `s` outside [0, total_length] extrapolates along the end tangents.
  Point2 point_at(double s) const;
  Point2 tangent_at(double s) const;
  double curvature_at(double s) const;

  /// Global closest-point projection.
  RoadProjection project(const Point2& p) const;
  /// Closest point restricted to segments intersecting [s_hint - window, s_hint + window].
  RoadProjection project(const Point2& p, double s_hint, double window) const;

 private:
  std::size_t segment_index(double s) const;
  RoadProjection project_range(const Point2& p, std::size_t first, std::size_t last) const;

  std::vector<Point2> points_;
  std::vector<double> cumulative_;
  std::vector<double> vertex_curvature_;
};

}  // namespace simcan
