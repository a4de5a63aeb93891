#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace uot {

using Point = Eigen::VectorXd;
using Tangent = Eigen::VectorXd;

enum class SpaceKind { Euclidean, Circle, Sphere, Hyperbolic };

// Model base spaces. Spheres and hyperbolic space live in ambient
// coordinates (R^{dim+1}); the circle is parametrized by an angle in [0, 2pi).
struct Space {
    SpaceKind kind = SpaceKind::Euclidean;
    int dim = 1;
    double radius = 1.0;

    static Space euclidean(int dim);
    static Space circle();
    static Space sphere(int dim, double radius);
    static Space hyperbolic(int dim);

    int ambient_dim() const;
    // pi*R for spheres, +inf for Euclidean / hyperbolic.
    double injectivity_radius() const;
    // pi*R for spheres and the circle, +inf otherwise.
    double diameter() const;

    bool operator==(const Space&) const = default;
};

std::string to_string(SpaceKind kind);

// Throws invalid-input if p has the wrong size or leaves the model surface.
void validate_point(const Space& space, const Point& p);

double geodesic_distance(const Space& space, const Point& p, const Point& q);
Point exp_map(const Space& space, const Point& p, const Tangent& v);
Tangent log_map(const Space& space, const Point& p, const Point& q);

// Riemannian inner product of two tangent vectors at p.
double inner(const Space& space, const Point& p, const Tangent& u, const Tangent& v);
double norm(const Space& space, const Point& p, const Tangent& v);

// Orthogonal projection of an ambient vector onto the tangent space at p.
Tangent project_tangent(const Space& space, const Point& p, const Eigen::VectorXd& v);

// Wrap an angle into [0, 2pi).
double wrap_angle(double theta);
// Signed shortest angular difference b - a in (-pi, pi].
double angle_difference(double a, double b);

// Uniform 1D grid on the circle (origin 0, spacing 2pi/n, periodic) or on a
// Euclidean interval [origin, origin + (n-1)*spacing].
struct Grid1D {
    Space space = Space::circle();
    std::size_t n = 0;
    double origin = 0.0;
    double spacing = 0.0;

    static Grid1D circle(std::size_t n);
    static Grid1D interval(double a, double b, std::size_t n);

    bool periodic() const { return space.kind == SpaceKind::Circle; }
    double node(std::size_t i) const { return origin + spacing * static_cast<double>(i); }
    std::vector<double> nodes() const;
    bool operator==(const Grid1D&) const = default;
};

// Density (or scalar field) sampled at grid nodes; mass element values[i]*spacing.
struct GridDensity {
    Grid1D grid;
    std::vector<double> values;

    GridDensity() = default;
    GridDensity(Grid1D g, std::vector<double> v);

    std::size_t size() const { return values.size(); }
    double spacing() const { return grid.spacing; }
    double mass() const;
};

// d/dx of a grid field: periodic central differences on the circle,
// central differences in the interior and second-order one-sided stencils at
// the endpoints of an interval. Requires n >= 3.
std::vector<double> grid_gradient(const Grid1D& grid, std::span<const double> field);
std::vector<double> grid_gradient(const GridDensity& field);

// d^2/dx^2 with the same boundary conventions (n >= 4 on intervals).
std::vector<double> grid_second_derivative(const Grid1D& grid, std::span<const double> field);

} // namespace uot
