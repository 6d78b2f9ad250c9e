#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <vector>

#include "vpb/geometry.hpp"

using namespace vpb;

namespace {

// Independent oracle: solve the raw (unnormalised) 8x8 DLT system by plain
// Gaussian elimination with partial pivoting and back substitution.
Mat3 oracle_dlt(const std::array<Point2, 4>& src, const std::array<Point2, 4>& dst) {
  double a[8][9] = {};
  for (int i = 0; i < 4; ++i) {
    const double x = src[i].x, y = src[i].y, u = dst[i].x, v = dst[i].y;
    const double r0[9] = {x, y, 1, 0, 0, 0, -u * x, -u * y, u};
    const double r1[9] = {0, 0, 0, x, y, 1, -v * x, -v * y, v};
    for (int j = 0; j < 9; ++j) {
      a[2 * i][j] = r0[j];
      a[2 * i + 1][j] = r1[j];
    }
  }
  for (int c = 0; c < 8; ++c) {
    int p = c;
    for (int r = c + 1; r < 8; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    }
    for (int j = 0; j < 9; ++j) std::swap(a[c][j], a[p][j]);
    for (int r = c + 1; r < 8; ++r) {
      const double f = a[r][c] / a[c][c];
      for (int j = c; j < 9; ++j) a[r][j] -= f * a[c][j];
    }
  }
  double h[8];
  for (int r = 7; r >= 0; --r) {
    double s = a[r][8];
    for (int j = r + 1; j < 8; ++j) s -= a[r][j] * h[j];
    h[r] = s / a[r][r];
  }
  return {h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0};
}

const std::array<Point2, 4> kUnitSquare{Point2{0, 0}, Point2{1, 0}, Point2{1, 1}, Point2{0, 1}};

ConvexPolygon diamond() {
  return ConvexPolygon::from_vertices({{1, 0}, {0, 1}, {-1, 0}, {0, -1}});
}

ConvexPolygon right_triangle() { return ConvexPolygon::from_vertices({{0, 0}, {1, 0}, {0, 1}}); }

void expect_mat_near(const Mat3& a, const Mat3& b, double tol) {
  for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(a[i], b[i], tol) << "entry " << i;
}

}  // namespace

TEST(SolveProjective, IdentityForEqualSquares) {
  const auto h = solve_projective(kUnitSquare, kUnitSquare);
  expect_mat_near(h.matrix(), Homography::identity().matrix(), 1e-12);
  EXPECT_EQ(h(2, 2), 1.0);
}

TEST(SolveProjective, PureTranslation) {
  std::array<Point2, 4> dst = kUnitSquare;
  for (auto& p : dst) p.x += 5;
  const auto h = solve_projective(kUnitSquare, dst);
  expect_mat_near(h.matrix(), {1, 0, 5, 0, 1, 0, 0, 0, 1}, 1e-12);
}

TEST(SolveProjective, MatchesUnnormalisedEliminationOracle) {
  const std::array<Point2, 4> dst{Point2{0, 0}, Point2{1, 0}, Point2{1, 1}, Point2{0.5, 1}};
  const auto h = solve_projective(kUnitSquare, dst);
  expect_mat_near(h.matrix(), oracle_dlt(kUnitSquare, dst), 1e-9);
  for (int i = 0; i < 4; ++i) {
    const Point2 q = apply_point(h, kUnitSquare[i]);
    EXPECT_NEAR(q.x, dst[i].x, 1e-9);
    EXPECT_NEAR(q.y, dst[i].y, 1e-9);
  }
  const Point2 q = apply_point(h, {1, 1});
  EXPECT_NEAR(q.x, 1.0, 1e-9);
  EXPECT_NEAR(q.y, 1.0, 1e-9);
  const Point2 r = apply_point(h, {0, 1});
  EXPECT_NEAR(r.x, 0.5, 1e-9);
  EXPECT_NEAR(r.y, 1.0, 1e-9);
}

TEST(SolveProjective, PixelScaleCorrespondencesHitTargets) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto w = sample_warp(224, 224, 0.8, rng);
    expect_mat_near(w.homography.matrix(), oracle_dlt(w.corners, w.displaced), 1e-9);
  }
}

TEST(SolveProjective, RejectsCollinearSource) {
  const std::array<Point2, 4> bad{Point2{0, 0}, Point2{1, 0}, Point2{2, 0}, Point2{0, 1}};
  try {
    solve_projective(bad, kUnitSquare);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateCorrespondence);
  }
}

TEST(SampleHomography, ZeroAlphaIsIdentity) {
  Rng rng(5);
  const auto h = sample_homography(224, 224, 0.0, rng);
  expect_mat_near(h.matrix(), Homography::identity().matrix(), 0.0);
  ASSERT_TRUE(h.alpha().has_value());
  EXPECT_EQ(*h.alpha(), 0.0);

  Rng pts(99);
  for (int i = 0; i < 100; ++i) {
    const Point2 p{pts.uniform(-500, 500), pts.uniform(-500, 500)};
    const Point2 q = apply_point(h, p);
    EXPECT_NEAR(q.x, p.x, 1e-9);
    EXPECT_NEAR(q.y, p.y, 1e-9);
  }
}

TEST(SampleHomography, DisplacementBoundAtAlpha08) {
  Rng rng(42);
  const auto w = sample_warp(224, 224, 0.8, rng);
  for (int i = 0; i < 4; ++i) {
    EXPECT_LE(std::abs(w.displaced[i].x - w.corners[i].x), 44.8);
    EXPECT_LE(std::abs(w.displaced[i].y - w.corners[i].y), 44.8);
  }
}

TEST(SampleHomography, RecoveredCornersMatchSampledDisplacements) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const double alpha = 0.2 * static_cast<double>(seed % 5);
    const auto w = sample_warp(320, 200, alpha, rng);
    for (int i = 0; i < 4; ++i) {
      const Point2 q = apply_point(w.homography, w.corners[i]);
      EXPECT_NEAR(q.x, w.displaced[i].x, 1e-9);
      EXPECT_NEAR(q.y, w.displaced[i].y, 1e-9);
    }
  }
}

TEST(SampleHomography, SameSeedIsBitIdentical) {
  Rng a(123), b(123);
  const auto ha = sample_homography(224, 224, 0.6, a);
  const auto hb = sample_homography(224, 224, 0.6, b);
  EXPECT_EQ(ha, hb);
}

TEST(SampleHomography, RejectsBadArguments) {
  Rng rng(1);
  EXPECT_THROW(sample_homography(1, 10, 0.5, rng), Error);
  EXPECT_THROW(sample_homography(10, 10, 1.5, rng), Error);
}

TEST(ApplyPoint, IdentityAndTranslation) {
  const Point2 p = apply_point(Homography::identity(), {3, 7});
  EXPECT_EQ(p, (Point2{3, 7}));
  const Point2 q = apply_point(Homography::translation(5, 0), {0, 0});
  EXPECT_EQ(q, (Point2{5, 0}));
}

TEST(ApplyPoint, PointAtInfinity) {
  const auto h = Homography::from_matrix({1, 0, 0, 0, 1, 0, 1, 0, 1});
  try {
    apply_point(h, {-1, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PointAtInfinity);
  }
}

TEST(Invert, IdentityAndTranslation) {
  expect_mat_near(invert(Homography::identity()).matrix(), Homography::identity().matrix(), 0.0);
  expect_mat_near(invert(Homography::translation(5, 0)).matrix(),
                  Homography::translation(-5, 0).matrix(), 1e-15);
}

TEST(Invert, RoundTripOnSampledHomography) {
  Rng rng(7);
  const auto h = sample_homography(224, 224, 0.5, rng);
  const auto id = compose(h, invert(h));
  expect_mat_near(id.matrix(), Homography::identity().matrix(), 1e-9);
}

TEST(Invert, SingularMatrix) {
  try {
    Homography::from_matrix({1, 2, 3, 2, 4, 6, 0, 0, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularMatrix);
  }
}

TEST(ConvexPolygon, ValidatesInvariants) {
  EXPECT_THROW(ConvexPolygon::from_vertices({{0, 0}, {1, 0}}), Error);
  // clockwise
  EXPECT_THROW(ConvexPolygon::from_vertices({{0, 0}, {0, 1}, {1, 1}, {1, 0}}), Error);
  // repeated vertex
  EXPECT_THROW(ConvexPolygon::from_vertices({{0, 0}, {1, 0}, {1, 0}, {0, 1}}), Error);
  // reflex vertex
  EXPECT_THROW(ConvexPolygon::from_vertices({{0, 0}, {2, 0}, {1, 0.5}, {2, 2}, {0, 2}}), Error);
  EXPECT_NO_THROW(ConvexPolygon::from_vertices({{0, 0}, {1, 0}, {1, 1}, {0, 1}}));
}

TEST(ClipToRect, IdempotentOnContainedSquare) {
  const auto sq = ConvexPolygon::from_vertices({kUnitSquare.begin(), kUnitSquare.end()});
  const auto out = clip_to_rect(sq, RectAA::make(0, 0, 1, 1));
  EXPECT_NEAR(out.area(), 1.0, 1e-12);
  EXPECT_EQ(out.size(), 4u);
}

TEST(ClipToRect, SymmetricOverlap) {
  const auto sq = ConvexPolygon::from_vertices({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}});
  const auto out = clip_to_rect(sq, RectAA::make(0, 0, 2, 2));
  EXPECT_NEAR(out.area(), 1.0, 1e-12);
  const auto b = out.bounds();
  EXPECT_DOUBLE_EQ(b.x0, 0.0);
  EXPECT_DOUBLE_EQ(b.y0, 0.0);
  EXPECT_DOUBLE_EQ(b.x1, 1.0);
  EXPECT_DOUBLE_EQ(b.y1, 1.0);
}

TEST(ClipToRect, DiamondHalfIsTriangle) {
  const auto out = clip_to_rect(diamond(), RectAA::make(0, -2, 2, 2));
  ASSERT_EQ(out.size(), 3u);
  // shoelace oracle of the hand-built triangle (0,-1),(1,0),(0,1)
  const std::array<Point2, 3> tri{Point2{0, -1}, Point2{1, 0}, Point2{0, 1}};
  EXPECT_NEAR(out.area(), shoelace_area(tri), 1e-12);
  EXPECT_NEAR(out.area(), 1.0, 1e-12);
  for (const auto& p : tri) EXPECT_TRUE(point_in_convex(out, p, 1e-9));
}

TEST(ClipToRect, EmptyIntersection) {
  try {
    clip_to_rect(diamond(), RectAA::make(5, 5, 6, 6));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyIntersection);
  }
}

TEST(ClipToRect, OutputInsideBothInputs) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const auto w = sample_warp(100, 80, 0.9, rng);
    const auto quad = ConvexPolygon::from_vertices({w.displaced.begin(), w.displaced.end()});
    const auto rect = RectAA::make(0, 0, 100, 80);
    const auto out = clip_to_rect(quad, rect);
    EXPECT_GT(out.area(), 0.0);
    EXPECT_LE(out.area(), std::min(quad.area(), rect.area()) + 1e-9);
    const auto rc = rect.corners();
    const auto rect_poly = ConvexPolygon::from_vertices({rc.begin(), rc.end()});
    for (const auto& p : out.vertices()) {
      EXPECT_TRUE(point_in_convex(quad, p, 1e-7));
      EXPECT_TRUE(point_in_convex(rect_poly, p, 1e-7));
    }
  }
}

TEST(MaxInscribedRect, RectangleIsItsOwnInscription) {
  const auto poly = ConvexPolygon::from_vertices({{2, 3}, {7, 3}, {7, 5}, {2, 5}});
  const auto r = max_inscribed_rect(poly);
  EXPECT_NEAR(r.area(), 10.0, 1e-4);
  EXPECT_NEAR(r.x0, 2.0, 1e-6);
  EXPECT_NEAR(r.x1, 7.0, 1e-6);
}

TEST(MaxInscribedRect, RightTriangle) {
  const auto r = max_inscribed_rect(right_triangle());
  EXPECT_NEAR(r.area(), 0.25, 1e-4);
  EXPECT_NEAR(r.x0, 0.0, 1e-4);
  EXPECT_NEAR(r.y0, 0.0, 1e-4);
  EXPECT_NEAR(r.x1, 0.5, 1e-4);
  EXPECT_NEAR(r.y1, 0.5, 1e-4);
  const auto g = grid_inscribed_rect(right_triangle(), 400);
  EXPECT_GE(r.area(), g.area());
}

TEST(MaxInscribedRect, Diamond) {
  const auto r = max_inscribed_rect(diamond());
  EXPECT_NEAR(r.area(), 1.0, 1e-4);
  EXPECT_NEAR(r.x0, -0.5, 1e-4);
  EXPECT_NEAR(r.y1, 0.5, 1e-4);
  EXPECT_NEAR(r.area(), diamond().area() / 2, 1e-4);
}

TEST(MaxInscribedRect, CornersInsidePolygon) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const auto w = sample_warp(224, 224, 0.8, rng);
    const auto quad = ConvexPolygon::from_vertices({w.displaced.begin(), w.displaced.end()});
    const auto r = max_inscribed_rect(quad);
    for (const auto& c : r.corners()) EXPECT_TRUE(point_in_convex(quad, c, 1e-7));
    const auto g = grid_inscribed_rect(quad, 400);
    EXPECT_GE(r.area(), 0.98 * g.area());
  }
}

TEST(MaxInscribedRect, DegeneratePolygon) {
  const auto sliver = ConvexPolygon::from_vertices({{0, 0}, {1e-4, 0}, {1e-4, 1e-4}, {0, 1e-4}});
  try {
    max_inscribed_rect(sliver);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegeneratePolygon);
  }
}

TEST(GridInscribedRect, GranularityBounds) {
  const auto sq = ConvexPolygon::from_vertices({kUnitSquare.begin(), kUnitSquare.end()});
  EXPECT_GE(grid_inscribed_rect(sq, 8).area(), 49.0 / 64.0);

  const double tri = grid_inscribed_rect(right_triangle(), 400).area();
  EXPECT_GE(tri, 0.245);
  EXPECT_LE(tri, 0.25);

  const double dia = grid_inscribed_rect(diamond(), 400).area();
  EXPECT_GE(dia, 0.99);
  EXPECT_LE(dia, 1.0);

  EXPECT_THROW(grid_inscribed_rect(sq, 7), Error);
}
