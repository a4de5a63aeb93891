#include "uot/errors.hpp"
#include "uot/polar.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace uot;
using std::numbers::pi;

TEST_CASE("action of generalized automorphisms")
{
    const Grid1D g = Grid1D::circle(64);
    const GridDensity vol = volume_density(g);
    CHECK(vol.mass() == doctest::Approx(2 * pi));
    const GridDensity same = act(TransportCouple::identity(g), vol);
    CHECK(tv_distance(same, vol) <= 1e-13);
    TransportCouple dbl = TransportCouple::identity(g);
    for (double& l : dbl.lam) l = std::sqrt(2.0);
    const GridDensity twice = act(dbl, vol);
    for (double v : twice.values) CHECK(v == doctest::Approx(2.0));
}

TEST_CASE("volume preservation")
{
    const Grid1D g = Grid1D::circle(256);
    const VolumeCheck id = is_volume_preserving(TransportCouple::identity(g));
    CHECK(id.preserving);
    CHECK(id.tv_error <= 1e-13);

    TransportCouple rot = TransportCouple::identity(g);
    for (std::size_t i = 0; i < g.n; ++i) rot.phi[i] = wrap_angle(g.node(i) + 0.37);
    const VolumeCheck r = is_volume_preserving(rot);
    CHECK(r.preserving);
    CHECK(r.tv_error <= 2.0 / 256);

    TransportCouple dbl = TransportCouple::identity(g);
    for (double& l : dbl.lam) l = std::sqrt(2.0);
    const VolumeCheck d = is_volume_preserving(dbl);
    CHECK_FALSE(d.preserving);
    CHECK(d.tv_error == doctest::Approx(2 * pi));
}

TEST_CASE("composition and projection distance")
{
    const Grid1D g = Grid1D::circle(128);
    TransportCouple a = TransportCouple::identity(g);
    for (std::size_t i = 0; i < g.n; ++i) {
        a.phi[i] = wrap_angle(g.node(i) + 0.2 * std::sin(g.node(i)));
        a.lam[i] = 1.0 + 0.1 * std::cos(g.node(i));
    }
    const TransportCouple left = compose(TransportCouple::identity(g), a);
    const TransportCouple right = compose(a, TransportCouple::identity(g));
    for (std::size_t i = 0; i < g.n; ++i) {
        CHECK(std::abs(angle_difference(left.phi[i], a.phi[i])) <= 1e-12);
        CHECK(right.lam[i] == doctest::Approx(a.lam[i]));
    }
    CHECK(projection_distance(a, a) == 0.0);
    TransportCouple k = TransportCouple::identity(g);
    for (double& l : k.lam) l = std::exp(-0.3);
    CHECK(projection_distance(k, TransportCouple::identity(g)) == doctest::Approx(2 * pi * std::pow(1 - std::exp(-0.3), 2)));
}

TEST_CASE("polar factorization")
{
    const Grid1D g = Grid1D::circle(256);
    SUBCASE("identity")
    {
        const PolarFactorization pf = polar_factorize(TransportCouple::identity(g));
        CHECK(projection_distance(pf.monge_part, TransportCouple::identity(g)) <= 1e-8);
        CHECK(projection_distance(pf.stabilizer_part, TransportCouple::identity(g)) <= 1e-8);
    }
    SUBCASE("volume-preserving input is its own stabilizer")
    {
        TransportCouple s = TransportCouple::identity(g);
        for (std::size_t i = 0; i < g.n; ++i) {
            const double x = g.node(i);
            s.phi[i] = wrap_angle(x + 0.3 * std::sin(x));
            s.lam[i] = std::sqrt(1 + 0.3 * std::cos(x));
        }
        const PolarFactorization pf = polar_factorize(s);
        double zmax = 0.0;
        for (double z : pf.z0) zmax = std::max(zmax, std::abs(z));
        CHECK(zmax <= 1e-3);
        CHECK(projection_distance(pf.stabilizer_part, s) <= 1e-4);
    }
    SUBCASE("pure scaling field")
    {
        TransportCouple m = TransportCouple::identity(g);
        for (std::size_t i = 0; i < g.n; ++i) m.lam[i] = std::sqrt(1 + 0.2 * std::cos(g.node(i)));
        const PolarFactorization pf = polar_factorize(m);
        CHECK(pf.diagnostics.reconstruction_tv <= 3e-2);
        CHECK(pf.diagnostics.stabilizer_tv <= 3e-2);
        CHECK(pf.diagnostics.reconstruction_ok);
        CHECK(pf.diagnostics.stabilizer_ok);
    }
    SUBCASE("degenerate maps are refused")
    {
        TransportCouple m = TransportCouple::identity(g);
        for (std::size_t i = 100; i < 140; ++i) m.lam[i] = 0.0;
        CHECK_THROWS_AS(polar_factorize(m), Error);
    }
}
