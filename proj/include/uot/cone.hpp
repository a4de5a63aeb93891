#pragma once

#include "uot/manifold.hpp"

namespace uot {

// Point (x, r) of the cone C(M) = M x R+ with metric dr^2 + r^2 g.
// r = 0 is the apex; its base point is ignored.
struct ConePoint {
    Point base;
    double r = 0.0;

    bool is_apex() const { return r == 0.0; }
};

// Initial velocity of a cone geodesic: angular speed v_theta along the unit
// base direction `direction`, and radial speed v_r.
struct ConeTangent {
    double v_theta = 0.0;
    double v_r = 0.0;
    Tangent direction;
};

struct ConeDistance {
    double distance = 0.0;
    double squared = 0.0;
};

// d^2 = r1^2 + r2^2 - 2 r1 r2 cos(min(d(x1, x2), pi/2)).
ConeDistance cone_distance(const Space& space, const ConePoint& c1, const ConePoint& c2);

// Squared cone distance from raw radii and a base distance; no validation.
double cone_distance_squared(double r1, double r2, double base_distance);

bool same_cone_point(const Space& space, const ConePoint& c1, const ConePoint& c2, double tol = 0.0);

// Straight line of the flat development of the cone, started at c:
//   r(t)^2 = r0^2 [(1 + a t)^2 + v_theta^2 t^2],  a = v_r / r0,
//   theta(t) = atan(v_theta t / (1 + a t)).
// Requires r0 > 0 and 1 + a t > 0.
ConePoint cone_exp(const Space& space, const ConePoint& c, double t, const ConeTangent& vt);

// Squared cone cost between masses a at x and b at y, lifted to radii sqrt(a), sqrt(b):
//   a + b - 2 sqrt(ab) cos(min(d(x, y), pi/2)).
double lift_masses(const Space& space, const Point& x, double a, const Point& y, double b);
double lift_masses(double a, double b, double base_distance);

} // namespace uot
