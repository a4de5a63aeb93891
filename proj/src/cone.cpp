#include "uot/cone.hpp"

#include "uot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace uot {

double cone_distance_squared(double r1, double r2, double base_distance)
{
    const double d = std::min(base_distance, std::numbers::pi / 2.0);
    const double d2 = r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * std::cos(d);
    return std::max(0.0, d2);
}

ConeDistance cone_distance(const Space& space, const ConePoint& c1, const ConePoint& c2)
{
    if (!(c1.r >= 0.0) || !(c2.r >= 0.0) || !std::isfinite(c1.r) || !std::isfinite(c2.r))
        fail(ErrorKind::InvalidInput, "cone point radius must be finite and nonnegative");
    double d = 0.0;
    if (!c1.is_apex() && !c2.is_apex()) d = geodesic_distance(space, c1.base, c2.base);
    const double sq = cone_distance_squared(c1.r, c2.r, d);
    return {std::sqrt(sq), sq};
}

bool same_cone_point(const Space& space, const ConePoint& c1, const ConePoint& c2, double tol)
{
    if (c1.is_apex() && c2.is_apex()) return true;
    return cone_distance(space, c1, c2).distance <= tol;
}

ConePoint cone_exp(const Space& space, const ConePoint& c, double t, const ConeTangent& vt)
{
    if (!(c.r > 0.0)) fail(ErrorKind::Degenerate, "cone_exp: cannot start at the apex");
    const double a = vt.v_r / c.r;
    const double denom = 1.0 + a * t;
    if (!(denom > 0.0)) fail(ErrorKind::BranchCut, "cone_exp: path reaches the apex (1 + v_r t / r <= 0)");
    if (t == 0.0) return c;

    const double r = c.r * std::sqrt(denom * denom + vt.v_theta * vt.v_theta * t * t);
    const double theta = std::atan(vt.v_theta * t / denom);

    ConePoint out;
    out.r = r;
    if (theta == 0.0) {
        out.base = c.base;
        return out;
    }
    const double dn = norm(space, c.base, vt.direction);
    if (!(dn > 0.0)) fail(ErrorKind::InvalidInput, "cone_exp: zero base direction with nonzero angular speed");
    if (std::abs(dn - 1.0) > 1e-10) fail(ErrorKind::InvalidInput, "cone_exp: base direction must be a unit vector");
    out.base = exp_map(space, c.base, theta * vt.direction);
    return out;
}

double lift_masses(double a, double b, double base_distance)
{
    if (!(a >= 0.0) || !(b >= 0.0)) fail(ErrorKind::InvalidInput, "lift_masses: masses must be nonnegative");
    const double d = std::min(base_distance, std::numbers::pi / 2.0);
    return std::max(0.0, a + b - 2.0 * std::sqrt(a * b) * std::cos(d));
}

double lift_masses(const Space& space, const Point& x, double a, const Point& y, double b)
{
    return lift_masses(a, b, geodesic_distance(space, x, y));
}

} // namespace uot
