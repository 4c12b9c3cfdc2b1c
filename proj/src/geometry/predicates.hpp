#pragma once

#include "eigentop/geometry.hpp"

namespace eigentop::geometry::predicates {

// Sign of the signed area of (a, b, c): +1 counter-clockwise, -1 clockwise, 0 collinear.
// A floating-point filter decides the common case; near-degenerate inputs fall
// back to exact rational arithmetic.
int orient2d(Point a, Point b, Point c);

// +1 when d lies strictly inside the circle through the counter-clockwise triangle
// (a, b, c), -1 outside, 0 on the circle.
int incircle(Point a, Point b, Point c, Point d);

// Circumcenter of a non-degenerate triangle.
Point circumcenter(Point a, Point b, Point c);

} // namespace eigentop::geometry::predicates
