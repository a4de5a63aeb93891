#include "uot/errors.hpp"
#include "uot/monge.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace uot;
using std::numbers::pi;

namespace {
GridDensity sampled(const Grid1D& g, double (*f)(double))
{
    std::vector<double> v;
    for (double x : g.nodes()) v.push_back(f(x));
    return GridDensity(g, v);
}
double bump(double x) { return (1 + 0.3 * std::sin(x)) / (2 * pi); }
}

TEST_CASE("c-exponential")
{
    const Space c = Space::circle();
    const Point x = Point::Constant(1, 1.0);
    CHECK(c_exp(c, x, Tangent::Zero(1))[0] == 1.0);
    CHECK(c_exp(c, x, Tangent::Constant(1, 2.0))[0] == doctest::Approx(1.0 + pi / 4));
    CHECK(c_exp(c, x, Tangent::Constant(1, -2.0))[0] == doctest::Approx(1.0 - pi / 4));
    const Space s = Space::sphere(2, 1.0);
    const Point y = c_exp(s, Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 2, 0));
    CHECK(geodesic_distance(s, Eigen::Vector3d(1, 0, 0), y) == doctest::Approx(pi / 4));
}

TEST_CASE("Monge couple from constant potentials")
{
    const Grid1D g = Grid1D::circle(64);
    const TransportCouple id = monge_couple_from_potential(g, std::vector<double>(64, 0.0));
    const TransportCouple k = monge_couple_from_potential(g, std::vector<double>(64, 0.3));
    for (std::size_t i = 0; i < g.n; ++i) {
        CHECK(id.phi[i] == doctest::Approx(g.node(i)));
        CHECK(id.lam[i] == 1.0);
        CHECK(k.phi[i] == doctest::Approx(g.node(i)));
        CHECK(k.lam[i] == doctest::Approx(std::exp(-0.3)));
    }
}

TEST_CASE("pushforward")
{
    const Grid1D g = Grid1D::circle(128);
    const GridDensity f = sampled(g, bump);
    const GridDensity same = pushforward_density(TransportCouple::identity(g), f);
    for (std::size_t i = 0; i < g.n; ++i) CHECK(same.values[i] == doctest::Approx(f.values[i]).epsilon(1e-14));

    TransportCouple scaled = TransportCouple::identity(g);
    for (double& l : scaled.lam) l = std::exp(-0.4);
    const GridDensity s = pushforward_density(scaled, f);
    for (std::size_t i = 0; i < g.n; ++i) CHECK(s.values[i] == doctest::Approx(std::exp(-0.8) * f.values[i]));

    TransportCouple shift = TransportCouple::identity(g);
    for (std::size_t i = 0; i < g.n; ++i) shift.phi[i] = wrap_angle(g.node(i) + g.spacing);
    const GridDensity r = pushforward_density(shift, f);
    for (std::size_t i = 0; i < g.n; ++i) CHECK(r.values[(i + 1) % g.n] == doctest::Approx(f.values[i]).epsilon(1e-12));

    // mass conservation for a smooth map
    std::vector<double> z;
    for (double x : g.nodes()) z.push_back(0.1 * std::sin(x));
    const TransportCouple tc = monge_couple_from_potential(g, z);
    const Pushforward pf = pushforward(tc, f);
    double expected = 0.0;
    for (std::size_t i = 0; i < g.n; ++i) expected += tc.lam[i] * tc.lam[i] * f.values[i] * g.spacing;
    CHECK(pf.density.mass() == doctest::Approx(expected).epsilon(1e-13));
    CHECK(pf.particles.total_mass() == doctest::Approx(expected).epsilon(1e-13));
    CHECK(tv_distance(f, f) == 0.0);
}

TEST_CASE("Monge objective")
{
    const Grid1D g = Grid1D::circle(64);
    const GridDensity u(g, std::vector<double>(64, 1.0 / (2 * pi)));
    CHECK(monge_objective(TransportCouple::identity(g), u) == 0.0);
    TransportCouple k = TransportCouple::identity(g);
    for (double& l : k.lam) l = std::exp(-0.5);
    CHECK(monge_objective(k, u) == doctest::Approx(std::pow(1 - std::exp(-0.5), 2)));
}

TEST_CASE("Monge-Ampere residual")
{
    const Grid1D g = Grid1D::circle(256);
    const GridDensity f = sampled(g, bump);
    const MaResidual zero = ma_residual(std::vector<double>(256, 0.0), f, f);
    CHECK(zero.max_abs <= 1e-12);
    CHECK(zero.lhs[10] == doctest::Approx(2.0));

    GridDensity h = f;
    for (double& v : h.values) v *= std::exp(-1.0);
    CHECK(ma_residual(std::vector<double>(256, 0.5), f, h).max_abs <= 1e-12);

    // self-consistent smooth case, improving with resolution
    auto self = [](std::size_t n) {
        const Grid1D grid = Grid1D::circle(n);
        const GridDensity uni(grid, std::vector<double>(n, 1.0 / (2 * pi)));
        std::vector<double> z;
        for (double x : grid.nodes()) z.push_back(0.1 * std::sin(x));
        return ma_residual(z, uni, pushforward_density(monge_couple_from_potential(grid, z), uni)).max_abs;
    };
    const double r256 = self(256), r512 = self(512);
    CHECK(r256 <= 5e-2);
    CHECK(r512 < r256);

    GridDensity hole = f;
    hole.values[100] = 0.0;
    CHECK_THROWS_AS(ma_residual(std::vector<double>(256, 0.0), f, hole), SingularityError);
}

TEST_CASE("interpolation and resampling")
{
    const Grid1D g = Grid1D::circle(8);
    std::vector<double> v(8);
    for (std::size_t i = 0; i < 8; ++i) v[i] = static_cast<double>(i);
    CHECK(interpolate(g, v, g.node(3) + 0.5 * g.spacing) == doctest::Approx(3.5));
    CHECK(interpolate(g, v, 2 * pi - 0.5 * g.spacing) == doctest::Approx(3.5));
    const std::vector<double> coords{0.0, pi}, vals{1.0, 2.0};
    const auto r = resample_to_grid(g, coords, vals);
    CHECK(r[0] == 1.0);
    CHECK(r[4] == 2.0);
    CHECK(r[1] == 1.0);
}

TEST_CASE("grid solve feeds the Monge pipeline")
{
    const Grid1D g = Grid1D::circle(128);
    const GridDensity f = sampled(g, bump);
    GridDensity target = f;
    for (std::size_t i = 0; i < g.n; ++i) target.values[i] = 1.2 * f.values[(i + 3) % g.n];
    const GridSolution gs = solve_on_grid(f, target);
    const TransportCouple tc = monge_couple_from_potential(g, gs.z0);
    CHECK(tv_distance(pushforward_density(tc, f), target) <= 2e-2);
    CHECK(gs.solution.converged);
    const double m = monge_objective(tc, f);
    CHECK(m >= gs.solution.dual_value * (1 - 2e-2));
    CHECK(m <= gs.solution.primal_value * (1 + 2e-2));
}
