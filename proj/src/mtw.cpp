#include "uot/mtw.hpp"

#include "uot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace uot {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kSlack = 1e-9;
constexpr double kSampleFloor = 1e-2;

double d1_5pt(const std::function<double(double)>& f, double s, double h)
{
    return (-f(s + 2 * h) + 8 * f(s + h) - 8 * f(s - h) + f(s - 2 * h)) / (12 * h);
}

double d2_5pt(const std::function<double(double)>& f, double s, double h)
{
    return (-f(s + 2 * h) + 16 * f(s + h) - 30 * f(s) + 16 * f(s - h) - f(s - 2 * h)) / (12 * h * h);
}

// Richardson on a fourth-order stencil: (16 D(h/2) - D(h)) / 15.
template <class D>
double richardson4(D&& stencil, double h)
{
    return (16.0 * stencil(0.5 * h) - stencil(h)) / 15.0;
}

void check_s(const RadialCost& cost, double s)
{
    const double top = cost.s_max(RadialCost::kInfinity);
    if (!(s > 0.0) || !(s < top))
        fail(ErrorKind::Domain, "s = " + std::to_string(s) + " outside (0, " + std::to_string(top) + ") for " + cost.describe());
}

MtwCoefficients from_values(double s, const LeeLiValues& v)
{
    MtwCoefficients c;
    c.s = s;
    c.alpha = (s * s * v.A2 + 6.0 * (v.A - v.B) - 4.0 * s * (v.A1 - v.B1)) / (s * s);
    c.beta = (s * v.A1 - 2.0 * (v.A - v.B)) / (s * s);
    c.gamma = v.B2;
    c.delta = v.B1 / s;
    return c;
}

int model_dim(const RadialCost& cost, const Point& x)
{
    const int n = static_cast<int>(x.size());
    return cost.space == SpaceKind::Euclidean ? n : n - 1;
}

} // namespace

RadialCost RadialCost::sphere_wfr(double R)
{
    if (!(R > 0.0) || !std::isfinite(R)) fail(ErrorKind::InvalidInput, "sphere cost needs R > 0");
    return {SpaceKind::Sphere, CostFamily::Wfr, R, std::numbers::pi};
}

RadialCost RadialCost::euclidean_wfr(double diameter) { return {SpaceKind::Euclidean, CostFamily::Wfr, 1.0, diameter}; }
RadialCost RadialCost::hyperbolic_wfr(double diameter) { return {SpaceKind::Hyperbolic, CostFamily::Wfr, 1.0, diameter}; }
RadialCost RadialCost::euclidean_quadratic(double diameter)
{
    return {SpaceKind::Euclidean, CostFamily::Quadratic, 1.0, diameter};
}

double RadialCost::l(double d) const
{
    if (family == CostFamily::Quadratic) return 0.5 * d * d;
    const double c = std::cos(radius * d);
    return -std::log(c * c);
}

double RadialCost::l_prime(double d) const
{
    return family == CostFamily::Quadratic ? d : 2.0 * radius * std::tan(radius * d);
}

double RadialCost::l_second(double d) const
{
    if (family == CostFamily::Quadratic) return 1.0;
    const double c = std::cos(radius * d);
    return 2.0 * radius * radius / (c * c);
}

double RadialCost::h(double s) const
{
    return family == CostFamily::Quadratic ? s : std::atan(s / (2.0 * radius)) / radius;
}

double RadialCost::h_prime(double s) const
{
    return family == CostFamily::Quadratic ? 1.0 : 1.0 / (2.0 * radius * radius + 0.5 * s * s);
}

double RadialCost::effective_diameter() const
{
    double D = diameter > 0.0 ? diameter : kInfinity;
    if (family == CostFamily::Wfr) D = std::min(D, kHalfPi / radius);
    return D;
}

double RadialCost::s_max(double user_bound) const
{
    const double D = effective_diameter();
    if (!std::isfinite(D)) return user_bound;
    return std::min(user_bound, l_prime(D - 1e-6));
}

std::string RadialCost::describe() const
{
    std::string out = to_string(space);
    out += family == CostFamily::Wfr ? " wfr" : " quadratic";
    if (space == SpaceKind::Sphere) out += " R=" + std::to_string(radius);
    return out;
}

double lee_li_A(const RadialCost& cost, double s) { return 1.0 / cost.h_prime(s); }

double lee_li_B(const RadialCost& cost, double s)
{
    const double h = cost.h(s);
    switch (cost.space) {
    case SpaceKind::Sphere: return s / std::tan(h);
    case SpaceKind::Hyperbolic: return s / std::tanh(h);
    default: return s / h;
    }
}

LeeLiValues lee_li_functions(const RadialCost& cost, double s, bool numeric)
{
    check_s(cost, s);
    LeeLiValues v;
    v.A = lee_li_A(cost, s);
    v.B = lee_li_B(cost, s);
    if (cost.space == SpaceKind::Sphere && cost.family == CostFamily::Wfr && !numeric) {
        const double h = cost.h(s), hp = cost.h_prime(s);
        const double cot = 1.0 / std::tan(h), csc2 = 1.0 / (std::sin(h) * std::sin(h));
        v.A1 = s;
        v.A2 = 1.0;
        v.B1 = cot - s * hp * csc2;
        v.B2 = csc2 * (-2.0 * hp + s * s * hp * hp + 2.0 * s * hp * hp * cot);
        return v;
    }
    const std::function<double(double)> A = [&](double t) { return lee_li_A(cost, t); };
    const std::function<double(double)> B = [&](double t) { return lee_li_B(cost, t); };
    // Keep the stencil inside (0, s_max): both A and B are even, but h is not
    // defined past the diameter.
    const double top = cost.s_max(RadialCost::kInfinity);
    double step = std::min({1e-2 * std::max(1.0, s), 0.4 * s});
    if (std::isfinite(top)) step = std::min(step, 0.4 * (top - s));
    v.A1 = richardson4([&](double e) { return d1_5pt(A, s, e); }, step);
    v.A2 = richardson4([&](double e) { return d2_5pt(A, s, e); }, step);
    v.B1 = richardson4([&](double e) { return d1_5pt(B, s, e); }, step);
    v.B2 = richardson4([&](double e) { return d2_5pt(B, s, e); }, step);
    return v;
}

MtwCoefficients mtw_coefficients(const RadialCost& cost, double s, bool numeric)
{
    return from_values(s, lee_li_functions(cost, s, numeric));
}

MtwCoefficients mtw_limit_richardson(const RadialCost& cost)
{
    // The coefficients are even in s, so the error expands in s^2.
    const MtwCoefficients c1 = mtw_coefficients(cost, 1e-2);
    const MtwCoefficients c2 = mtw_coefficients(cost, 5e-3);
    const MtwCoefficients c3 = mtw_coefficients(cost, 2.5e-3);
    auto extrap = [](double f1, double f2, double f3) {
        const double r1 = (4.0 * f2 - f1) / 3.0;
        const double r2 = (4.0 * f3 - f2) / 3.0;
        return (16.0 * r2 - r1) / 15.0;
    };
    MtwCoefficients out;
    out.s = 0.0;
    out.alpha = extrap(c1.alpha, c2.alpha, c3.alpha);
    out.beta = extrap(c1.beta, c2.beta, c3.beta);
    out.gamma = extrap(c1.gamma, c2.gamma, c3.gamma);
    out.delta = extrap(c1.delta, c2.delta, c3.delta);
    return out;
}

MtwCoefficients mtw_limit(const RadialCost& cost)
{
    if (cost.space == SpaceKind::Sphere && cost.family == CostFamily::Wfr) {
        const double k = (1.0 - 1.0 / (cost.radius * cost.radius)) / 3.0;
        return {0.0, k, k, k, k};
    }
    return mtw_limit_richardson(cost);
}

MtwCheck mtw_condition_check(const RadialCost& cost, int n_samples, double s_bound)
{
    if (n_samples < 50) fail(ErrorKind::InvalidInput, "mtw_condition_check needs at least 50 samples");
    if (!(s_bound > 0.0)) fail(ErrorKind::InvalidInput, "mtw_condition_check needs a positive s bound");
    MtwCheck out;
    out.s_max = cost.s_max(s_bound);
    out.samples.push_back(mtw_limit(cost));
    // Stay a hair inside the open range.
    const double hi = std::min(out.s_max, cost.s_max(RadialCost::kInfinity) * (1.0 - 1e-12));
    const double lo = std::min(kSampleFloor, 0.5 * hi);
    for (int k = 0; k < n_samples; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(n_samples - 1);
        const double s = lo * std::pow(hi / lo, t);
        out.samples.push_back(mtw_coefficients(cost, s));
    }
    out.weak = true;
    out.strong = true;
    for (const MtwCoefficients& c : out.samples) {
        auto weak_fail = [&](const char* which, double excess) {
            if (excess > kSlack) {
                out.weak = false;
                out.violations.push_back({c.s, which, excess});
            }
        };
        weak_fail("beta<=0", c.beta);
        weak_fail("gamma<=0", c.gamma);
        weak_fail("delta<=0", c.delta);
        const double bg = c.beta * c.gamma;
        const double fourth = bg >= 0.0 ? c.alpha + c.delta - 2.0 * std::sqrt(bg) : c.alpha + c.delta;
        weak_fail("alpha+delta<=2sqrt(beta*gamma)", fourth);
        const bool strict = c.beta < -kSlack && c.gamma < -kSlack && c.delta < -kSlack && bg >= 0.0 &&
                            fourth < -kSlack;
        if (!strict) out.strong = false;
    }
    return out;
}

Space mtw_space(const RadialCost& cost, int dim)
{
    switch (cost.space) {
    case SpaceKind::Sphere: return Space::sphere(dim, 1.0);
    case SpaceKind::Hyperbolic: return Space::hyperbolic(dim);
    default: return Space::euclidean(dim);
    }
}

Point radial_c_exp(const RadialCost& cost, const Space& space, const Point& x, const Tangent& p)
{
    const double pn = norm(space, x, p);
    if (!std::isfinite(pn)) fail(ErrorKind::InvalidInput, "c-exp: non-finite vector");
    if (pn == 0.0) return x;
    return exp_map(space, x, (cost.h(pn) / pn) * p);
}

namespace {

// F(t, s) = c(exp_x(t u), c-exp_x(v + s w)), with a domain check on the distance.
struct ConfigCost {
    const RadialCost& cost;
    Space space;
    const Point& x;
    const Tangent& u;
    const Tangent& v;
    const Tangent& w;

    double operator()(double t, double s) const
    {
        const Point a = exp_map(space, x, t * u);
        const Point b = radial_c_exp(cost, space, x, v + s * w);
        const double d = geodesic_distance(space, a, b);
        if (d >= cost.effective_diameter() - 1e-3)
            fail(ErrorKind::Domain, "configuration too close to the cost singularity (d = " + std::to_string(d) + ")");
        return cost.l(d);
    }
};

ConfigCost make_config(const RadialCost& cost, const Point& x, const Tangent& u, const Tangent& v, const Tangent& w)
{
    const Space space = mtw_space(cost, model_dim(cost, x));
    validate_point(space, x);
    return {cost, space, x, u, v, w};
}

} // namespace

double mtw_fd_tensor(const RadialCost& cost, const Point& x, const Tangent& u, const Tangent& v, const Tangent& w)
{
    const ConfigCost F = make_config(cost, x, u, v, w);
    auto nested = [&](double e) {
        const double c[5] = {-1.0, 16.0, -30.0, 16.0, -1.0};
        double total = 0.0;
        for (int a = 0; a < 5; ++a)
            for (int b = 0; b < 5; ++b) total += c[a] * c[b] * F((a - 2) * e, (b - 2) * e);
        return total / (144.0 * e * e * e * e);
    };
    return -1.5 * richardson4(nested, 1e-2);
}

double mtw_mixed_derivative(const RadialCost& cost, const Point& x, const Tangent& u, const Tangent& v,
                            const Tangent& w)
{
    const ConfigCost F = make_config(cost, x, u, v, w);
    const double e = 1e-3;
    const double c[5] = {1.0, -8.0, 0.0, 8.0, -1.0};
    double total = 0.0;
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b)
            if (c[a] != 0.0 && c[b] != 0.0) total += c[a] * c[b] * F((a - 2) * e, (b - 2) * e);
    return total / (144.0 * e * e);
}

Tangent j_orthogonalize(const RadialCost& cost, const Point& x, const Tangent& v, const Tangent& u, const Tangent& w)
{
    const Space space = mtw_space(cost, model_dim(cost, x));
    if (norm(space, x, u) == 0.0) fail(ErrorKind::Domain, "j_orthogonalize: u = 0");
    auto M = [&](double tau) { return mtw_mixed_derivative(cost, x, u, v, Tangent(w - tau * u)); };
    double t0 = 0.0, m0 = M(0.0);
    if (std::abs(m0) <= 1e-12) return w;
    double t1 = 1.0 / std::max(1e-12, inner(space, x, u, u)), m1 = M(t1);
    // The mixed derivative is linear in tau up to finite-difference noise
    // (~1e-10), so the secant iteration settles in a step or two.
    for (int k = 0; k < 30 && std::abs(m1) > 1e-10 && m1 != m0; ++k) {
        const double t2 = t1 - m1 * (t1 - t0) / (m1 - m0);
        t0 = t1;
        m0 = m1;
        t1 = t2;
        m1 = M(t1);
    }
    if (!(std::abs(m1) <= 1e-6)) fail(ErrorKind::Domain, "j_orthogonalize: root finding did not converge");
    return w - t1 * u;
}

double mtw_decomposition(const RadialCost& cost, const Point& x, const Tangent& u, const Tangent& v, const Tangent& w)
{
    const Space space = mtw_space(cost, model_dim(cost, x));
    const double s = norm(space, x, v);
    if (s < 1e-3) fail(ErrorKind::Domain, "mtw_decomposition: |v| < 1e-3, direction undefined");
    const double u0 = inner(space, x, u, v) / s, w0 = inner(space, x, w, v) / s;
    const double u0s = u0 * u0, w0s = w0 * w0;
    const double u1s = std::max(0.0, inner(space, x, u, u) - u0s);
    const double w1s = std::max(0.0, inner(space, x, w, w) - w0s);
    const MtwCoefficients c = mtw_coefficients(cost, s);
    return -1.5 * (c.alpha * u0s * w0s + c.beta * u0s * w1s + c.gamma * u1s * w0s + c.delta * u1s * w1s);
}

} // namespace uot
