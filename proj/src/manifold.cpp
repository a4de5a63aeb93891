#include "uot/manifold.hpp"

#include "uot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace uot {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double minkowski(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    return -a[0] * b[0] + a.tail(a.size() - 1).dot(b.tail(b.size() - 1));
}

void check_size(const Space& space, const Eigen::VectorXd& v, const char* what)
{
    if (v.size() != space.ambient_dim())
        fail(ErrorKind::InvalidInput, std::string(what) + ": expected " + std::to_string(space.ambient_dim()) +
                                          " coordinates, got " + std::to_string(v.size()));
}

} // namespace

const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::Degenerate: return "degenerate-input";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::BranchCut: return "branch-cut";
    case ErrorKind::Admissibility: return "admissibility";
    case ErrorKind::Feasibility: return "feasibility";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Singularity: return "singularity";
    case ErrorKind::Io: return "io";
    case ErrorKind::Schema: return "schema";
    }
    return "unknown";
}

Space Space::euclidean(int dim)
{
    if (dim < 1) fail(ErrorKind::InvalidInput, "euclidean space needs dim >= 1");
    return {SpaceKind::Euclidean, dim, 1.0};
}

Space Space::circle() { return {SpaceKind::Circle, 1, 1.0}; }

Space Space::sphere(int dim, double radius)
{
    if (dim < 1) fail(ErrorKind::InvalidInput, "sphere needs dim >= 1");
    if (!(radius > 0.0) || !std::isfinite(radius)) fail(ErrorKind::InvalidInput, "sphere radius must be positive");
    return {SpaceKind::Sphere, dim, radius};
}

Space Space::hyperbolic(int dim)
{
    if (dim < 1) fail(ErrorKind::InvalidInput, "hyperbolic space needs dim >= 1");
    return {SpaceKind::Hyperbolic, dim, 1.0};
}

int Space::ambient_dim() const
{
    switch (kind) {
    case SpaceKind::Circle: return 1;
    case SpaceKind::Euclidean: return dim;
    case SpaceKind::Sphere:
    case SpaceKind::Hyperbolic: return dim + 1;
    }
    return dim;
}

double Space::injectivity_radius() const
{
    switch (kind) {
    case SpaceKind::Circle: return std::numbers::pi;
    case SpaceKind::Sphere: return std::numbers::pi * radius;
    default: return std::numeric_limits<double>::infinity();
    }
}

double Space::diameter() const { return injectivity_radius(); }

std::string to_string(SpaceKind kind)
{
    switch (kind) {
    case SpaceKind::Euclidean: return "euclidean";
    case SpaceKind::Circle: return "circle";
    case SpaceKind::Sphere: return "sphere";
    case SpaceKind::Hyperbolic: return "hyperbolic";
    }
    return "unknown";
}

void validate_point(const Space& space, const Point& p)
{
    check_size(space, p, "point");
    if (!p.allFinite()) fail(ErrorKind::InvalidInput, "point has non-finite coordinates");
    if (space.kind == SpaceKind::Sphere) {
        const double r = p.norm();
        if (std::abs(r - space.radius) > 1e-9 * space.radius)
            fail(ErrorKind::InvalidInput, "sphere point off radius: |p| = " + std::to_string(r));
    } else if (space.kind == SpaceKind::Hyperbolic) {
        if (std::abs(minkowski(p, p) + 1.0) > 1e-9 || p[0] <= 0.0)
            fail(ErrorKind::InvalidInput, "point not on the upper hyperboloid");
    }
}

double wrap_angle(double theta)
{
    double t = std::fmod(theta, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    if (t >= kTwoPi) t -= kTwoPi;
    return t;
}

double angle_difference(double a, double b)
{
    double d = std::remainder(b - a, kTwoPi);
    if (d <= -std::numbers::pi) d += kTwoPi;
    return d;
}

double geodesic_distance(const Space& space, const Point& p, const Point& q)
{
    check_size(space, p, "distance");
    check_size(space, q, "distance");
    switch (space.kind) {
    case SpaceKind::Euclidean: return (p - q).norm();
    case SpaceKind::Circle: {
        const double d = std::abs(std::fmod(p[0] - q[0], kTwoPi));
        return std::min(d, kTwoPi - d);
    }
    case SpaceKind::Sphere: {
        const double r2 = space.radius * space.radius;
        // atan2 form is accurate near 0 and pi, unlike a bare arccos.
        const double c = std::clamp(p.dot(q) / r2, -1.0, 1.0);
        const double s = (q - (p.dot(q) / r2) * p).norm() / space.radius;
        return space.radius * std::atan2(s, c);
    }
    case SpaceKind::Hyperbolic: return std::acosh(std::max(1.0, -minkowski(p, q)));
    }
    return 0.0;
}

double inner(const Space& space, const Point&, const Tangent& u, const Tangent& v)
{
    if (space.kind == SpaceKind::Hyperbolic) return minkowski(u, v);
    return u.dot(v);
}

double norm(const Space& space, const Point& p, const Tangent& v)
{
    return std::sqrt(std::max(0.0, inner(space, p, v, v)));
}

Tangent project_tangent(const Space& space, const Point& p, const Eigen::VectorXd& v)
{
    switch (space.kind) {
    case SpaceKind::Sphere: return v - (p.dot(v) / p.squaredNorm()) * p;
    case SpaceKind::Hyperbolic: return v + minkowski(p, v) * p;
    default: return v;
    }
}

Point exp_map(const Space& space, const Point& p, const Tangent& v)
{
    check_size(space, p, "exp_map");
    check_size(space, v, "exp_map tangent");
    switch (space.kind) {
    case SpaceKind::Euclidean: return p + v;
    case SpaceKind::Circle: {
        Point out(1);
        out[0] = wrap_angle(p[0] + v[0]);
        return out;
    }
    case SpaceKind::Sphere: {
        const double R = space.radius;
        const double vn = v.norm();
        if (std::abs(p.dot(v)) > 1e-10 * std::max(1.0, R * vn))
            fail(ErrorKind::InvalidInput, "exp_map: vector not tangent to the sphere");
        if (vn == 0.0) return p;
        const double a = vn / R;
        Point out = std::cos(a) * p + (R * std::sin(a) / vn) * v;
        return out * (R / out.norm());
    }
    case SpaceKind::Hyperbolic: {
        if (std::abs(minkowski(p, v)) > 1e-10 * std::max(1.0, v.norm()))
            fail(ErrorKind::InvalidInput, "exp_map: vector not tangent to the hyperboloid");
        const double vn = std::sqrt(std::max(0.0, minkowski(v, v)));
        if (vn == 0.0) return p;
        return std::cosh(vn) * p + (std::sinh(vn) / vn) * v;
    }
    }
    return p;
}

Tangent log_map(const Space& space, const Point& p, const Point& q)
{
    check_size(space, p, "log_map");
    check_size(space, q, "log_map");
    switch (space.kind) {
    case SpaceKind::Euclidean: return q - p;
    case SpaceKind::Circle: {
        const double d = angle_difference(p[0], q[0]);
        if (std::abs(std::abs(d) - std::numbers::pi) < 1e-14)
            fail(ErrorKind::Degenerate, "log_map: antipodal points on the circle");
        Tangent out(1);
        out[0] = d;
        return out;
    }
    case SpaceKind::Sphere: {
        const double R = space.radius;
        const double d = geodesic_distance(space, p, q);
        if (d >= std::numbers::pi * R * (1.0 - 1e-12))
            fail(ErrorKind::Degenerate, "log_map: point in the cut locus");
        Tangent u = q - (p.dot(q) / (R * R)) * p;
        const double un = u.norm();
        if (un == 0.0 || d == 0.0) return Tangent::Zero(p.size());
        return (d / un) * u;
    }
    case SpaceKind::Hyperbolic: {
        const double d = geodesic_distance(space, p, q);
        Tangent u = q + minkowski(p, q) * p;
        const double un = std::sqrt(std::max(0.0, minkowski(u, u)));
        if (un == 0.0 || d == 0.0) return Tangent::Zero(p.size());
        return (d / un) * u;
    }
    }
    return Tangent::Zero(p.size());
}

Grid1D Grid1D::circle(std::size_t n)
{
    if (n == 0) fail(ErrorKind::InvalidInput, "grid needs n >= 1");
    return {Space::circle(), n, 0.0, kTwoPi / static_cast<double>(n)};
}

Grid1D Grid1D::interval(double a, double b, std::size_t n)
{
    if (n < 2 || !(b > a)) fail(ErrorKind::InvalidInput, "interval grid needs n >= 2 and b > a");
    return {Space::euclidean(1), n, a, (b - a) / static_cast<double>(n - 1)};
}

std::vector<double> Grid1D::nodes() const
{
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = node(i);
    return out;
}

GridDensity::GridDensity(Grid1D g, std::vector<double> v) : grid(std::move(g)), values(std::move(v))
{
    if (values.size() != grid.n) fail(ErrorKind::InvalidInput, "grid density size does not match grid");
    for (double x : values)
        if (!std::isfinite(x)) fail(ErrorKind::InvalidInput, "grid density has non-finite values");
}

double GridDensity::mass() const
{
    double s = 0.0;
    for (double v : values) s += v;
    return s * grid.spacing;
}

std::vector<double> grid_gradient(const Grid1D& grid, std::span<const double> z)
{
    const std::size_t n = z.size();
    if (n < 3) fail(ErrorKind::InvalidInput, "grid_gradient needs n >= 3");
    if (n != grid.n) fail(ErrorKind::InvalidInput, "grid_gradient: field size does not match grid");
    const double h = grid.spacing;
    std::vector<double> g(n);
    if (grid.periodic()) {
        for (std::size_t i = 0; i < n; ++i) g[i] = (z[(i + 1) % n] - z[(i + n - 1) % n]) / (2.0 * h);
        return g;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) g[i] = (z[i + 1] - z[i - 1]) / (2.0 * h);
    g[0] = (-3.0 * z[0] + 4.0 * z[1] - z[2]) / (2.0 * h);
    g[n - 1] = (3.0 * z[n - 1] - 4.0 * z[n - 2] + z[n - 3]) / (2.0 * h);
    return g;
}

std::vector<double> grid_gradient(const GridDensity& field) { return grid_gradient(field.grid, field.values); }

std::vector<double> grid_second_derivative(const Grid1D& grid, std::span<const double> z)
{
    const std::size_t n = z.size();
    if (n != grid.n) fail(ErrorKind::InvalidInput, "grid_second_derivative: field size does not match grid");
    if (n < (grid.periodic() ? 3u : 4u)) fail(ErrorKind::InvalidInput, "grid_second_derivative: grid too small");
    const double h2 = grid.spacing * grid.spacing;
    std::vector<double> g(n);
    if (grid.periodic()) {
        for (std::size_t i = 0; i < n; ++i) g[i] = (z[(i + 1) % n] - 2.0 * z[i] + z[(i + n - 1) % n]) / h2;
        return g;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) g[i] = (z[i + 1] - 2.0 * z[i] + z[i - 1]) / h2;
    g[0] = (2.0 * z[0] - 5.0 * z[1] + 4.0 * z[2] - z[3]) / h2;
    g[n - 1] = (2.0 * z[n - 1] - 5.0 * z[n - 2] + 4.0 * z[n - 3] - z[n - 4]) / h2;
    return g;
}

} // namespace uot
