#include "fishmpc/path.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "fishmpc/csv.h"

namespace fishmpc {

TargetPath::TargetPath(std::vector<PathPoint> points)
    : points_(std::move(points)) {
  if (points_.size() < 2) {
    throw std::invalid_argument("TargetPath: need at least two points");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const PathPoint& p = points_[i];
    if (!std::isfinite(p.x_mm) || !std::isfinite(p.y_mm) ||
        !std::isfinite(p.theta_rad)) {
      throw std::invalid_argument("TargetPath: non-finite point");
    }
    if (i > 0 && p.x_mm == points_[i - 1].x_mm &&
        p.y_mm == points_[i - 1].y_mm) {
      throw std::invalid_argument(
          fmt::format("TargetPath: points {} and {} coincide", i - 1, i));
    }
  }
}

namespace {

void check_parameter(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::domain_error(fmt::format("bezier: t={} outside [0,1]", t));
  }
}

}  // namespace

Vec2 bezier_eval(const BezierControl& ctrl, double t) {
  check_parameter(t);
  const double u = 1.0 - t;
  const double b0 = u * u * u;
  const double b1 = 3.0 * u * u * t;
  const double b2 = 3.0 * u * t * t;
  const double b3 = t * t * t;
  return {b0 * ctrl[0].x + b1 * ctrl[1].x + b2 * ctrl[2].x + b3 * ctrl[3].x,
          b0 * ctrl[0].y + b1 * ctrl[1].y + b2 * ctrl[2].y + b3 * ctrl[3].y};
}

Vec2 bezier_derivative(const BezierControl& ctrl, double t) {
  check_parameter(t);
  const double u = 1.0 - t;
  const double c0 = 3.0 * u * u;
  const double c1 = 6.0 * u * t;
  const double c2 = 3.0 * t * t;
  return {c0 * (ctrl[1].x - ctrl[0].x) + c1 * (ctrl[2].x - ctrl[1].x) +
              c2 * (ctrl[3].x - ctrl[2].x),
          c0 * (ctrl[1].y - ctrl[0].y) + c1 * (ctrl[2].y - ctrl[1].y) +
              c2 * (ctrl[3].y - ctrl[2].y)};
}

double bezier_tangent_angle(const BezierControl& ctrl, double t) {
  const Vec2 d = bezier_derivative(ctrl, t);
  const double scale = std::max({std::abs(ctrl[3].x - ctrl[0].x),
                                 std::abs(ctrl[3].y - ctrl[0].y),
                                 std::abs(ctrl[1].x - ctrl[0].x),
                                 std::abs(ctrl[1].y - ctrl[0].y), 1.0});
  if (std::hypot(d.x, d.y) <= 1e-12 * scale) {
    throw DegenerateCurveError(
        fmt::format("bezier: zero tangent at t={}", t));
  }
  return wrap_angle(std::atan2(d.y, d.x));
}

TargetPath discretize(const BezierControl& ctrl, int n) {
  if (n < 2) throw std::invalid_argument("discretize: n must be >= 2");
  std::vector<PathPoint> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // Exact endpoints regardless of rounding in i/(n-1).
    const double t = i == n - 1 ? 1.0 : static_cast<double>(i) / (n - 1);
    const Vec2 p = bezier_eval(ctrl, t);
    pts.push_back({p.x, p.y, bezier_tangent_angle(ctrl, t)});
  }
  try {
    return TargetPath(std::move(pts));
  } catch (const std::invalid_argument& e) {
    throw DegenerateCurveError(e.what());
  }
}

BezierControl right_turn_control(const PathPoint& start, double radius_scale) {
  if (!(radius_scale > 0.0)) {
    throw std::invalid_argument("right turn: radius_scale must be > 0");
  }
  const Vec2 entry{std::cos(start.theta_rad), std::sin(start.theta_rad)};
  const double exit_theta = start.theta_rad - std::numbers::pi / 2.0;
  const Vec2 exit{std::cos(exit_theta), std::sin(exit_theta)};
  const Vec2 p0{start.x_mm, start.y_mm};
  const Vec2 p3{p0.x + 2.0 * radius_scale * (entry.x + exit.x),
                p0.y + 2.0 * radius_scale * (entry.y + exit.y)};
  return {p0,
          Vec2{p0.x + radius_scale * entry.x, p0.y + radius_scale * entry.y},
          Vec2{p3.x - radius_scale * exit.x, p3.y - radius_scale * exit.y},
          p3};
}

TargetPath make_right_turn_path(const PathPoint& start, double radius_scale,
                                int n) {
  return discretize(right_turn_control(start, radius_scale), n);
}

void write_path_csv(std::ostream& out, const TargetPath& path) {
  out << "x_mm,y_mm,theta_rad\n";
  for (const PathPoint& p : path.points()) {
    out << fmt::format("{},{},{}\n", p.x_mm, p.y_mm, p.theta_rad);
  }
}

TargetPath read_path_csv(std::istream& in) {
  const CsvTable table = read_csv(in, {"x_mm", "y_mm", "theta_rad"});
  std::vector<PathPoint> pts;
  pts.reserve(table.rows.size());
  for (const auto& row : table.rows) pts.push_back({row[0], row[1], row[2]});
  return TargetPath(std::move(pts));
}

}  // namespace fishmpc
