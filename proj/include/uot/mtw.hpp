#pragma once

#include "uot/manifold.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace uot {

enum class CostFamily { Wfr, Quadratic };

// Radial cost c(x, y) = l(d(x, y)) on a constant-curvature model space.
//
// Sphere costs live on the round unit sphere with l_R(d) = -log cos^2(R d);
// that is the WFR cost of the sphere of radius R written in unit-sphere
// coordinates, which is the normalization the coefficient formulas use.
// Euclidean and hyperbolic costs use R = 1. `diameter` is the distance beyond
// which the parameter range stops (pi for the sphere, user-supplied otherwise).
struct RadialCost {
    SpaceKind space = SpaceKind::Sphere;
    CostFamily family = CostFamily::Wfr;
    double radius = 1.0;
    double diameter = 0.0;

    static RadialCost sphere_wfr(double R);
    static RadialCost euclidean_wfr(double diameter = kInfinity);
    static RadialCost hyperbolic_wfr(double diameter = kInfinity);
    static RadialCost euclidean_quadratic(double diameter = kInfinity);

    static constexpr double kInfinity = std::numeric_limits<double>::infinity();

    double l(double d) const;
    double l_prime(double d) const;
    double l_second(double d) const;
    double h(double s) const;       // inverse of l'
    double h_prime(double s) const;
    // Largest distance at which the cost is still finite and inside the diameter.
    double effective_diameter() const;
    // min(user_bound, l'(D - 1e-6)) with D the effective diameter.
    double s_max(double user_bound) const;
    std::string describe() const;
};

struct LeeLiValues {
    double A = 0.0, A1 = 0.0, A2 = 0.0; // A and its first two derivatives
    double B = 0.0, B1 = 0.0, B2 = 0.0;
};

// A = 1/h', and B = s coth h (hyperbolic), s / h (Euclidean), s cot h (sphere).
// Closed form for the sphere WFR cost; numeric derivatives otherwise, or when
// `numeric` is set. Raises a domain error for s outside (0, s_max).
LeeLiValues lee_li_functions(const RadialCost& cost, double s, bool numeric = false);
double lee_li_A(const RadialCost& cost, double s);
double lee_li_B(const RadialCost& cost, double s);

struct MtwCoefficients {
    double s = 0.0;
    double alpha = 0.0, beta = 0.0, gamma = 0.0, delta = 0.0;
};

// alpha = [s^2 A'' + 6(A - B) - 4s(A' - B')] / s^2, beta = [s A' - 2(A - B)] / s^2,
// gamma = B'', delta = B' / s.
MtwCoefficients mtw_coefficients(const RadialCost& cost, double s, bool numeric = false);

// s -> 0 limit by Richardson extrapolation over s in {1e-2, 5e-3, 2.5e-3}.
MtwCoefficients mtw_limit_richardson(const RadialCost& cost);
// Closed-form limit where one is known (sphere WFR: all four equal (1 - 1/R^2)/3),
// Richardson otherwise.
MtwCoefficients mtw_limit(const RadialCost& cost);

struct MtwViolation {
    double s = 0.0;
    std::string inequality; // "beta<=0", "gamma<=0", "delta<=0", "alpha+delta<=2sqrt(beta*gamma)"
    double value = 0.0;     // amount by which it fails (> 0)
};

struct MtwCheck {
    bool weak = false;
    bool strong = false;
    double s_max = 0.0;
    std::vector<MtwCoefficients> samples; // samples[0] is the s -> 0 limit
    std::vector<MtwViolation> violations; // of the weak condition
};

// Samples log-spaced on [1e-2, s_max] plus the s -> 0 limit. weak: all four
// inequalities hold within 1e-9; strong: all hold strictly by more than 1e-9.
MtwCheck mtw_condition_check(const RadialCost& cost, int n_samples, double s_bound = 10.0);

// Coordinates of the model space the cost lives on: the unit sphere for sphere
// costs, R^n for Euclidean, the hyperboloid for hyperbolic.
Space mtw_space(const RadialCost& cost, int dim);

// c-exp_x(p) = exp_x(h(|p|) p / |p|).
Point radial_c_exp(const RadialCost& cost, const Space& space, const Point& x, const Tangent& p);

// MTW = -(3/2) d^2/dt^2 d^2/ds^2 c(exp_x(t u), c-exp_x(v + s w)) at t = s = 0,
// by nested 5-point second differences with step 1e-2 and one Richardson halving.
double mtw_fd_tensor(const RadialCost& cost, const Point& x, const Tangent& u, const Tangent& v, const Tangent& w);

// Mixed derivative d/dt d/ds c(exp_x(t u), c-exp_x(v + s w)) at 0.
double mtw_mixed_derivative(const RadialCost& cost, const Point& x, const Tangent& u, const Tangent& v,
                            const Tangent& w);

// w - tau u with tau chosen by root-finding so the mixed derivative vanishes
// (|mixed| <= 1e-6, else a domain error).
Tangent j_orthogonalize(const RadialCost& cost, const Point& x, const Tangent& v, const Tangent& u, const Tangent& w);

// -(3/2)(alpha |u0|^2 |w0|^2 + beta |u0|^2 |w1|^2 + gamma |u1|^2 |w0|^2 + delta |u1|^2 |w1|^2)
// with s = |v| and subscripts 0 / 1 the components along / across v. Valid for
// J-orthogonal u, w; needs |v| >= 1e-3.
double mtw_decomposition(const RadialCost& cost, const Point& x, const Tangent& u, const Tangent& v, const Tangent& w);

} // namespace uot
