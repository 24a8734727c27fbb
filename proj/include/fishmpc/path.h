#ifndef FISHMPC_PATH_H_
#define FISHMPC_PATH_H_

#include <array>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "fishmpc/geometry.h"

namespace fishmpc {

struct PathPoint {
  double x_mm = 0.0;
  double y_mm = 0.0;
  double theta_rad = 0.0;
};

// Ordered reference points with tangent headings. At least two points,
// consecutive points distinct in position.
class TargetPath {
 public:
  TargetPath() = default;
  explicit TargetPath(std::vector<PathPoint> points);

  const std::vector<PathPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const PathPoint& operator[](std::size_t i) const { return points_[i]; }
  const PathPoint& front() const { return points_.front(); }
  const PathPoint& back() const { return points_.back(); }

 private:
  std::vector<PathPoint> points_;
};

class DegenerateCurveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using BezierControl = std::array<Vec2, 4>;

// Cubic Bernstein form. t must lie in [0, 1].
Vec2 bezier_eval(const BezierControl& ctrl, double t);

// Analytic first derivative with respect to t.
Vec2 bezier_derivative(const BezierControl& ctrl, double t);

// Heading of the tangent at t, wrapped. Throws DegenerateCurveError when the
// derivative vanishes.
double bezier_tangent_angle(const BezierControl& ctrl, double t);

// n points at t_i = i/(n-1).
TargetPath discretize(const BezierControl& ctrl, int n);

// Control polygon of the 90 degree right turn starting at `start`. The inner
// control points sit radius_scale along the entry and exit tangents; the
// end point is 2*radius_scale along the entry direction and then
// 2*radius_scale along the exit direction.
BezierControl right_turn_control(const PathPoint& start, double radius_scale);

TargetPath make_right_turn_path(const PathPoint& start, double radius_scale,
                                int n = 200);

// CSV with header `x_mm,y_mm,theta_rad`.
void write_path_csv(std::ostream& out, const TargetPath& path);
TargetPath read_path_csv(std::istream& in);

}  // namespace fishmpc

#endif  // FISHMPC_PATH_H_
