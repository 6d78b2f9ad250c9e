#pragma once

// Projective homographies, convex clipping and axis-aligned inscription.
//
// Coordinates are continuous pixel coordinates: an image of size W x H spans
// [0, W] x [0, H] with pixel centres at integer + 0.5. Polygon orientation is
// "counter-clockwise" in the sense of a positive shoelace area.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vpb/error.hpp"
#include "vpb/rng.hpp"

namespace vpb {

namespace tol {
inline constexpr double kDeterminant = 1e-9;
inline constexpr double kPointAtInfinity = 1e-12;
inline constexpr double kConvexity = 1e-7;
inline constexpr double kDuplicateVertex = 1e-9;
inline constexpr double kEmptyArea = 1e-9;
inline constexpr double kDegenerateArea = 1e-6;
inline constexpr double kConditionLimit = 1e12;
inline constexpr double kContainment = 1e-7;
inline constexpr int kMaxSamplingAttempts = 100;
}  // namespace tol

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr bool operator==(const Point2&, const Point2&) = default;
};

inline double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

/// Signed shoelace area; positive for counter-clockwise vertex order.
inline double shoelace_area(std::span<const Point2> pts) {
  double twice = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Point2& a = pts[i];
    const Point2& b = pts[(i + 1) % pts.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

/// Axis-aligned rectangle [x0, x1] x [y0, y1] with x0 < x1 and y0 < y1.
struct RectAA {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  static RectAA make(double x0, double y0, double x1, double y1) {
    if (!(x0 < x1) || !(y0 < y1)) {
      throw Error(ErrorCode::InvalidArgument, "RectAA requires x0 < x1 and y0 < y1");
    }
    return RectAA{x0, y0, x1, y1};
  }

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }

  std::array<Point2, 4> corners() const {
    return {Point2{x0, y0}, Point2{x1, y0}, Point2{x1, y1}, Point2{x0, y1}};
  }
};

/// A strictly convex polygon with positive orientation. Construction validates
/// every invariant, so a ConvexPolygon value is always well formed.
class ConvexPolygon {
 public:
  static ConvexPolygon from_vertices(std::vector<Point2> vertices) {
    if (vertices.size() < 3) {
      throw Error(ErrorCode::DegeneratePolygon, "polygon needs at least 3 vertices");
    }
    for (const auto& p : vertices) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw Error(ErrorCode::DegeneratePolygon, "non-finite vertex");
      }
    }
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      for (std::size_t j = i + 1; j < vertices.size(); ++j) {
        if (std::hypot(vertices[i].x - vertices[j].x, vertices[i].y - vertices[j].y) <
            tol::kDuplicateVertex) {
          throw Error(ErrorCode::DegeneratePolygon, "repeated vertex");
        }
      }
    }
    if (shoelace_area(vertices) <= 0.0) {
      throw Error(ErrorCode::DegeneratePolygon, "polygon must be counter-clockwise");
    }
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (cross(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]) < -tol::kConvexity) {
        throw Error(ErrorCode::DegeneratePolygon, "polygon is not convex");
      }
    }
    return ConvexPolygon(std::move(vertices));
  }

  const std::vector<Point2>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  double area() const { return shoelace_area(vertices_); }

  RectAA bounds() const {
    RectAA r{vertices_[0].x, vertices_[0].y, vertices_[0].x, vertices_[0].y};
    for (const auto& p : vertices_) {
      r.x0 = std::min(r.x0, p.x);
      r.y0 = std::min(r.y0, p.y);
      r.x1 = std::max(r.x1, p.x);
      r.y1 = std::max(r.y1, p.y);
    }
    return r;
  }

 private:
  explicit ConvexPolygon(std::vector<Point2> v) : vertices_(std::move(v)) {}
  std::vector<Point2> vertices_;
};

/// True when p lies inside `poly` or within `tolerance` (distance) of it.
inline bool point_in_convex(const ConvexPolygon& poly, const Point2& p,
                            double tolerance = tol::kContainment) {
  const auto& v = poly.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point2& a = v[i];
    const Point2& b = v[(i + 1) % v.size()];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    if (cross(a, b, p) < -tolerance * len) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Homography
// ---------------------------------------------------------------------------

using Mat3 = std::array<double, 9>;

inline Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      r[i * 3 + j] = a[i * 3 + 0] * b[0 * 3 + j] + a[i * 3 + 1] * b[1 * 3 + j] +
                     a[i * 3 + 2] * b[2 * 3 + j];
    }
  }
  return r;
}

inline double mat3_det(const Mat3& m) {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

/// Invertible 3x3 projective transform normalised so that m(2,2) == 1.
/// `alpha` records the sampling strength that produced it, if any.
class Homography {
 public:
  static Homography identity(std::optional<double> alpha = std::nullopt) {
    return Homography({1, 0, 0, 0, 1, 0, 0, 0, 1}, alpha);
  }

  static Homography translation(double tx, double ty) {
    return Homography({1, 0, tx, 0, 1, ty, 0, 0, 1}, std::nullopt);
  }

  /// Normalises by m(2,2) and checks invertibility.
  static Homography from_matrix(const Mat3& m, std::optional<double> alpha = std::nullopt) {
    for (double v : m) {
      if (!std::isfinite(v)) throw Error(ErrorCode::SingularMatrix, "non-finite matrix entry");
    }
    double scale = 0.0;
    for (double v : m) scale = std::max(scale, std::abs(v));
    if (std::abs(m[8]) <= 1e-12 * scale) {
      throw Error(ErrorCode::SingularMatrix, "m(2,2) vanishes; cannot normalise");
    }
    Mat3 n;
    for (std::size_t i = 0; i < 9; ++i) n[i] = m[i] / m[8];
    n[8] = 1.0;
    if (std::abs(mat3_det(n)) <= tol::kDeterminant) {
      throw Error(ErrorCode::SingularMatrix, "|det| <= 1e-9");
    }
    return Homography(n, alpha);
  }

  const Mat3& matrix() const { return m_; }
  double operator()(int row, int col) const { return m_[row * 3 + col]; }
  std::optional<double> alpha() const { return alpha_; }
  double det() const { return mat3_det(m_); }

  friend bool operator==(const Homography&, const Homography&) = default;

 private:
  Homography(const Mat3& m, std::optional<double> alpha) : m_(m), alpha_(alpha) {}

  Mat3 m_;
  std::optional<double> alpha_;
};

inline Point2 apply_point(const Homography& h, const Point2& p) {
  const auto& m = h.matrix();
  const double w = m[6] * p.x + m[7] * p.y + m[8];
  if (std::abs(w) <= tol::kPointAtInfinity) {
    throw Error(ErrorCode::PointAtInfinity, "point maps to infinity");
  }
  return Point2{(m[0] * p.x + m[1] * p.y + m[2]) / w, (m[3] * p.x + m[4] * p.y + m[5]) / w};
}

/// a ∘ b: apply b first, then a.
inline Homography compose(const Homography& a, const Homography& b) {
  return Homography::from_matrix(mat3_mul(a.matrix(), b.matrix()));
}

inline Homography invert(const Homography& h) {
  const auto& m = h.matrix();
  const double det = mat3_det(m);
  if (!(std::abs(det) > tol::kDeterminant)) {
    throw Error(ErrorCode::SingularMatrix, "|det| <= 1e-9");
  }
  const Mat3 adj{
      m[4] * m[8] - m[5] * m[7], m[2] * m[7] - m[1] * m[8], m[1] * m[5] - m[2] * m[4],
      m[5] * m[6] - m[3] * m[8], m[0] * m[8] - m[2] * m[6], m[2] * m[3] - m[0] * m[5],
      m[3] * m[7] - m[4] * m[6], m[1] * m[6] - m[0] * m[7], m[0] * m[4] - m[1] * m[3],
  };
  Mat3 inv;
  for (std::size_t i = 0; i < 9; ++i) inv[i] = adj[i] / det;
  return Homography::from_matrix(inv);
}

namespace detail {

inline bool strictly_convex_quad(std::span<const Point2, 4> q) {
  int sign = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double c = cross(q[i], q[(i + 1) % 4], q[(i + 2) % 4]);
    if (!(std::abs(c) > 0.0) || !std::isfinite(c)) return false;
    const int s = c > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    if (s != sign) return false;
  }
  return true;
}

// Similarity that moves the centroid to the origin and the mean distance to
// sqrt(2). Returned as a Mat3 together with its inverse.
inline std::pair<Mat3, Mat3> normalizing_transform(std::span<const Point2, 4> pts) {
  double cx = 0.0, cy = 0.0;
  for (const auto& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= 4.0;
  cy /= 4.0;
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += std::hypot(p.x - cx, p.y - cy);
  mean_dist /= 4.0;
  const double s = std::sqrt(2.0) / mean_dist;
  const Mat3 t{s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1};
  const Mat3 t_inv{1 / s, 0, cx, 0, 1 / s, cy, 0, 0, 1};
  return {t, t_inv};
}

inline Point2 transform(const Mat3& m, const Point2& p) {
  return Point2{m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]};
}

// Solves a x = b for an 8x8 system by Gauss-Jordan elimination with partial
// pivoting, also producing the inverse for a 1-norm condition estimate.
inline std::optional<std::array<double, 8>> solve8(std::array<std::array<double, 8>, 8> a,
                                                   std::array<double, 8> b,
                                                   double condition_limit) {
  constexpr int n = 8;
  double norm_a = 0.0;
  for (int j = 0; j < n; ++j) {
    double col = 0.0;
    for (int i = 0; i < n; ++i) col += std::abs(a[i][j]);
    norm_a = std::max(norm_a, col);
  }
  std::array<std::array<double, 8>, 8> inv{};
  for (int i = 0; i < n; ++i) inv[i][i] = 1.0;

  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (a[pivot][col] == 0.0) return std::nullopt;
    std::swap(a[col], a[pivot]);
    std::swap(inv[col], inv[pivot]);
    std::swap(b[col], b[pivot]);
    const double d = a[col][col];
    for (int j = 0; j < n; ++j) {
      a[col][j] /= d;
      inv[col][j] /= d;
    }
    b[col] /= d;
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
      b[r] -= f * b[col];
    }
  }
  double norm_inv = 0.0;
  for (int j = 0; j < n; ++j) {
    double col = 0.0;
    for (int i = 0; i < n; ++i) col += std::abs(inv[i][j]);
    norm_inv = std::max(norm_inv, col);
  }
  if (!(norm_a * norm_inv <= condition_limit)) return std::nullopt;
  return b;
}

}  // namespace detail

/// Four-point DLT with isotropic (Hartley) normalisation of both point sets.
inline Homography solve_projective(std::span<const Point2, 4> src, std::span<const Point2, 4> dst) {
  if (!detail::strictly_convex_quad(src) || !detail::strictly_convex_quad(dst)) {
    throw Error(ErrorCode::DegenerateCorrespondence,
                "source and destination must be strictly convex quadrilaterals");
  }
  const auto [ts, ts_inv] = detail::normalizing_transform(src);
  const auto [td, td_inv] = detail::normalizing_transform(dst);
  (void)ts_inv;
  (void)td;

  std::array<std::array<double, 8>, 8> a{};
  std::array<double, 8> b{};
  for (std::size_t i = 0; i < 4; ++i) {
    const Point2 s = detail::transform(ts, src[i]);
    const Point2 d = detail::transform(td, dst[i]);
    a[2 * i] = {s.x, s.y, 1, 0, 0, 0, -d.x * s.x, -d.x * s.y};
    b[2 * i] = d.x;
    a[2 * i + 1] = {0, 0, 0, s.x, s.y, 1, -d.y * s.x, -d.y * s.y};
    b[2 * i + 1] = d.y;
  }
  const auto h = detail::solve8(a, b, tol::kConditionLimit);
  if (!h) {
    throw Error(ErrorCode::DegenerateCorrespondence, "8x8 system is singular or ill-conditioned");
  }
  const Mat3 hn{(*h)[0], (*h)[1], (*h)[2], (*h)[3], (*h)[4], (*h)[5], (*h)[6], (*h)[7], 1.0};
  return Homography::from_matrix(mat3_mul(td_inv, mat3_mul(hn, ts)));
}

inline Homography solve_projective(const std::array<Point2, 4>& src,
                                   const std::array<Point2, 4>& dst) {
  return solve_projective(std::span<const Point2, 4>(src), std::span<const Point2, 4>(dst));
}

inline std::array<Point2, 4> canvas_corners(double width, double height) {
  return {Point2{0, 0}, Point2{width, 0}, Point2{width, height}, Point2{0, height}};
}

/// A sampled homography together with the corner correspondence behind it.
struct SampledWarp {
  Homography homography;
  std::array<Point2, 4> corners;
  std::array<Point2, 4> displaced;
};

/// Displaces each canvas corner by dx ~ U(-a*W/4, a*W/4), dy ~ U(-a*H/4, a*H/4)
/// (draw order: corner 0..3, dx then dy), rejecting non-convex results.
inline SampledWarp sample_warp(int width, int height, double alpha, Rng& rng) {
  if (width < 2 || height < 2) {
    throw Error(ErrorCode::InvalidArgument, "width and height must be >= 2");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
  }
  const auto corners = canvas_corners(width, height);
  const double rx = alpha * width / 4.0;
  const double ry = alpha * height / 4.0;
  for (int attempt = 0; attempt < tol::kMaxSamplingAttempts; ++attempt) {
    std::array<Point2, 4> displaced;
    bool moved = false;
    for (std::size_t i = 0; i < 4; ++i) {
      const double dx = rng.uniform(-rx, rx);
      const double dy = rng.uniform(-ry, ry);
      moved = moved || dx != 0.0 || dy != 0.0;
      displaced[i] = Point2{corners[i].x + dx, corners[i].y + dy};
    }
    if (!detail::strictly_convex_quad(displaced) || shoelace_area(displaced) <= 0.0) continue;
    if (!moved) return SampledWarp{Homography::identity(alpha), corners, displaced};
    const Homography h = solve_projective(corners, displaced);
    return SampledWarp{Homography::from_matrix(h.matrix(), alpha), corners, displaced};
  }
  throw Error(ErrorCode::SamplingExhausted, "no convex displacement after 100 attempts");
}

inline Homography sample_homography(int width, int height, double alpha, Rng& rng) {
  return sample_warp(width, height, alpha, rng).homography;
}

// ---------------------------------------------------------------------------
// Clipping
// ---------------------------------------------------------------------------

/// Sutherland-Hodgman clip of a convex polygon against an axis-aligned rectangle.
inline ConvexPolygon clip_to_rect(const ConvexPolygon& poly, const RectAA& rect) {
  std::vector<Point2> pts = poly.vertices();

  // Each boundary is "coordinate[axis] * sign >= limit * sign".
  struct Boundary {
    bool x_axis;
    double limit;
    double sign;
  };
  const std::array<Boundary, 4> boundaries{{
      {true, rect.x0, 1.0},
      {true, rect.x1, -1.0},
      {false, rect.y0, 1.0},
      {false, rect.y1, -1.0},
  }};

  for (const auto& bd : boundaries) {
    if (pts.empty()) break;
    const auto dist = [&](const Point2& p) { return ((bd.x_axis ? p.x : p.y) - bd.limit) * bd.sign; };
    std::vector<Point2> out;
    out.reserve(pts.size() + 1);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Point2& cur = pts[i];
      const Point2& nxt = pts[(i + 1) % pts.size()];
      const double dc = dist(cur);
      const double dn = dist(nxt);
      if (dc >= 0) out.push_back(cur);
      if ((dc >= 0) != (dn >= 0)) {
        const double t = dc / (dc - dn);
        Point2 q{cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)};
        if (bd.x_axis) {
          q.x = bd.limit;
        } else {
          q.y = bd.limit;
        }
        out.push_back(q);
      }
    }
    pts = std::move(out);
  }

  std::vector<Point2> dedup;
  for (const auto& p : pts) {
    if (dedup.empty() ||
        std::hypot(p.x - dedup.back().x, p.y - dedup.back().y) >= tol::kDuplicateVertex) {
      dedup.push_back(p);
    }
  }
  while (dedup.size() > 1 && std::hypot(dedup.front().x - dedup.back().x,
                                        dedup.front().y - dedup.back().y) < tol::kDuplicateVertex) {
    dedup.pop_back();
  }
  if (dedup.size() < 3 || shoelace_area(dedup) < tol::kEmptyArea) {
    throw Error(ErrorCode::EmptyIntersection, "clipped polygon is empty");
  }
  return ConvexPolygon::from_vertices(std::move(dedup));
}

// ---------------------------------------------------------------------------
// Maximum inscribed axis-aligned rectangle
// ---------------------------------------------------------------------------

/// Lower and upper boundary of a convex polygon along the vertical line at x:
/// lower(x) is convex, upper(x) is concave. Empty (lower > upper) outside.
struct VerticalExtent {
  double lower = std::numeric_limits<double>::infinity();
  double upper = -std::numeric_limits<double>::infinity();
};

inline VerticalExtent vertical_extent(const ConvexPolygon& poly, double x) {
  VerticalExtent e;
  const auto& v = poly.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point2& a = v[i];
    const Point2& b = v[(i + 1) % v.size()];
    const double lo = std::min(a.x, b.x);
    const double hi = std::max(a.x, b.x);
    if (x < lo || x > hi) continue;
    if (a.x == b.x) {
      e.lower = std::min({e.lower, a.y, b.y});
      e.upper = std::max({e.upper, a.y, b.y});
      continue;
    }
    const double t = (x - a.x) / (b.x - a.x);
    const double y = a.y + t * (b.y - a.y);
    e.lower = std::min(e.lower, y);
    e.upper = std::max(e.upper, y);
  }
  return e;
}

namespace detail {

struct SpanEval {
  double score;  // area when feasible, otherwise a non-positive feasibility measure
  double y0;
  double y1;
};

inline SpanEval eval_span(const ConvexPolygon& poly, double x1, double x2) {
  const VerticalExtent a = vertical_extent(poly, x1);
  const VerticalExtent b = vertical_extent(poly, x2);
  const double y0 = std::max(a.lower, b.lower);
  const double y1 = std::min(a.upper, b.upper);
  const double h = y1 - y0;
  const double w = x2 - x1;
  if (h > 0 && w > 0) return {w * h, y0, y1};
  return {std::min(h, w), y0, y1};
}

// Maximises a unimodal function on [lo, hi]; returns the arg max.
template <typename F>
double ternary_max(double lo, double hi, double tolerance, F&& f) {
  while (hi - lo > tolerance) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) < f(m2)) {
      lo = m1;
    } else {
      hi = m2;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline constexpr int kInscribeSeedGrid = 64;
inline constexpr double kInscribeRefineTolerance = 1e-9;  // relative to the x extent

/// Largest-area axis-aligned rectangle inside a convex polygon.
///
/// A rectangle spanning [x1, x2] fits iff its corners do, so its best height is
/// min(upper(x1), upper(x2)) - max(lower(x1), lower(x2)). The area over
/// (x1, x2) is log-concave where positive, so after a 64x64 grid seed the span
/// is refined by nested ternary search: outer over x1, inner over x2.
inline RectAA max_inscribed_rect(const ConvexPolygon& poly) {
  if (!(poly.area() > tol::kDegenerateArea)) {
    throw Error(ErrorCode::DegeneratePolygon, "polygon area <= 1e-6");
  }
  const RectAA box = poly.bounds();
  const double xmin = box.x0;
  const double xmax = box.x1;

  double best_x1 = xmin, best_x2 = xmax;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kInscribeSeedGrid; ++i) {
    const double x1 = xmin + (xmax - xmin) * i / (kInscribeSeedGrid - 1);
    for (int j = i + 1; j < kInscribeSeedGrid; ++j) {
      const double x2 = xmin + (xmax - xmin) * j / (kInscribeSeedGrid - 1);
      const double s = detail::eval_span(poly, x1, x2).score;
      if (s > best_score) {
        best_score = s;
        best_x1 = x1;
        best_x2 = x2;
      }
    }
  }

  const double tolerance = kInscribeRefineTolerance * std::max(1.0, xmax - xmin);
  const auto inner_best = [&](double x1) {
    return detail::ternary_max(x1, xmax, tolerance,
                               [&](double x2) { return detail::eval_span(poly, x1, x2).score; });
  };
  const double x1 = detail::ternary_max(xmin, xmax, tolerance, [&](double x1c) {
    return detail::eval_span(poly, x1c, inner_best(x1c)).score;
  });
  const double x2 = inner_best(x1);
  if (detail::eval_span(poly, x1, x2).score > best_score) {
    best_x1 = x1;
    best_x2 = x2;
  }

  const auto span = detail::eval_span(poly, best_x1, best_x2);
  if (!(span.score > 0)) {
    throw Error(ErrorCode::DegeneratePolygon, "no inscribed rectangle with positive area");
  }
  return RectAA{best_x1, span.y0, best_x2, span.y1};
}

/// Exhaustive oracle: best rectangle whose corners lie on a resolution x
/// resolution lattice over the bounding box and inside the polygon.
inline RectAA grid_inscribed_rect(const ConvexPolygon& poly, int resolution) {
  if (resolution < 8) throw Error(ErrorCode::InvalidArgument, "resolution must be >= 8");
  const RectAA box = poly.bounds();
  const double dx = (box.x1 - box.x0) / (resolution - 1);
  const double dy = (box.y1 - box.y0) / (resolution - 1);
  const auto xs = [&](int i) { return i == resolution - 1 ? box.x1 : box.x0 + dx * i; };
  const auto ys = [&](long k) { return k == resolution - 1 ? box.y1 : box.y0 + dy * k; };

  // Per grid column, the range of lattice rows whose point lies in the polygon.
  std::vector<long> row_lo(resolution), row_hi(resolution);
  for (int i = 0; i < resolution; ++i) {
    long lo = resolution, hi = -1;
    for (long k = 0; k < resolution; ++k) {
      if (point_in_convex(poly, Point2{xs(i), ys(k)}, tol::kContainment)) {
        lo = std::min(lo, k);
        hi = std::max(hi, k);
      }
    }
    row_lo[i] = lo;
    row_hi[i] = hi;
  }

  RectAA best{};
  double best_area = -1.0;
  for (int i = 0; i < resolution; ++i) {
    for (int j = i + 1; j < resolution; ++j) {
      const long lo = std::max(row_lo[i], row_lo[j]);
      const long hi = std::min(row_hi[i], row_hi[j]);
      if (hi <= lo) continue;
      const double area = (xs(j) - xs(i)) * (ys(hi) - ys(lo));
      if (area > best_area) {
        best_area = area;
        best = RectAA{xs(i), ys(lo), xs(j), ys(hi)};
      }
    }
  }
  if (best_area <= 0) throw Error(ErrorCode::DegeneratePolygon, "no lattice rectangle fits");
  return best;
}

}  // namespace vpb
