#include "uot/polar.hpp"

#include "uot/cone.hpp"
#include "uot/errors.hpp"

#include <algorithm>
#include <cmath>

namespace uot {

namespace {

double wrapped_or_plain(const Grid1D& grid, double x)
{
    return grid.periodic() ? wrap_angle(x) : x;
}

} // namespace

GeneralizedAutomorphism compose(const GeneralizedAutomorphism& g1, const GeneralizedAutomorphism& g2)
{
    if (!(g1.grid == g2.grid)) fail(ErrorKind::InvalidInput, "compose: grids differ");
    g1.validate();
    g2.validate();
    const Grid1D& grid = g1.grid;
    std::vector<double> disp1(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) disp1[i] = g1.displacement(i);
    GeneralizedAutomorphism out{grid, std::vector<double>(grid.n), std::vector<double>(grid.n)};
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double y = g2.phi[i];
        out.phi[i] = wrapped_or_plain(grid, y + interpolate(grid, disp1, y));
        out.lam[i] = interpolate(grid, g1.lam, y) * g2.lam[i];
    }
    return out;
}

GridDensity act(const GeneralizedAutomorphism& g, const GridDensity& rho) { return pushforward_density(g, rho); }

GridDensity volume_density(const Grid1D& grid) { return GridDensity(grid, std::vector<double>(grid.n, 1.0)); }

double default_polar_tolerance(const Grid1D& grid) { return 5.0 / static_cast<double>(grid.n) + 1e-3; }

VolumeCheck is_volume_preserving(const GeneralizedAutomorphism& g, double tol)
{
    if (tol < 0.0) tol = default_polar_tolerance(g.grid);
    const GridDensity vol = volume_density(g.grid);
    VolumeCheck out;
    out.tv_error = tv_distance(act(g, vol), vol);
    out.preserving = out.tv_error <= tol;
    return out;
}

double projection_distance(const GeneralizedAutomorphism& g, const GeneralizedAutomorphism& s)
{
    if (!(g.grid == s.grid)) fail(ErrorKind::InvalidInput, "projection_distance: grids differ");
    g.validate();
    s.validate();
    double total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double d = g.grid.periodic() ? std::abs(angle_difference(g.phi[i], s.phi[i])) : std::abs(g.phi[i] - s.phi[i]);
        total += cone_distance_squared(g.lam[i], s.lam[i], d);
    }
    return total * g.grid.spacing;
}

TransportCouple inverse_couple_from_potential(const Grid1D& grid, std::span<const double> z1)
{
    // Same formula as the forward couple: the reverse problem has cost c(y, x).
    return monge_couple_from_potential(grid, z1);
}

PolarFactorization polar_factorize(const GeneralizedAutomorphism& g, const SolveOptions& options, bool debias)
{
    g.validate();
    const Grid1D& grid = g.grid;
    const GridDensity vol = volume_density(grid);
    GridDensity rho1 = act(g, vol);
    for (std::size_t i = 0; i < grid.n; ++i)
        if (!(rho1.values[i] > 0.0))
            fail(ErrorKind::Admissibility, "polar_factorize: act(g, vol) vanishes at node " + std::to_string(i));
    if (!grid.periodic()) {
        // On an interval every node must see target mass within pi/2.
        std::vector<Point> pts;
        for (std::size_t i = 0; i < grid.n; ++i) pts.push_back(Point::Constant(1, grid.node(i)));
        const CostMatrix C = cost_matrix(grid.space, CostSpec::wfr(), pts, pts);
        if (!admissibility(vol.values, rho1.values, C).admissible)
            fail(ErrorKind::Admissibility, "polar_factorize: act(g, vol) is not admissible against vol");
    }

    GridSolution gs = solve_on_grid(vol, rho1, options, debias);
    PolarFactorization out{monge_couple_from_potential(grid, gs.z0), {}, gs.z0, gs.z1, std::move(rho1), {}};
    const TransportCouple inverse = inverse_couple_from_potential(grid, gs.z1);
    out.stabilizer_part = compose(inverse, g);

    PolarDiagnostics& dg = out.diagnostics;
    const GeneralizedAutomorphism rec = compose(out.monge_part, out.stabilizer_part);
    dg.reconstruction_tv = tv_distance(act(rec, vol), out.rho1);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double dphi = grid.periodic() ? std::abs(angle_difference(g.phi[i], rec.phi[i])) : std::abs(g.phi[i] - rec.phi[i]);
        dg.reconstruction_phi = std::max(dg.reconstruction_phi, dphi);
        dg.reconstruction_lam = std::max(dg.reconstruction_lam, std::abs(g.lam[i] - rec.lam[i]));
    }
    dg.stabilizer_tv = is_volume_preserving(out.stabilizer_part).tv_error;
    dg.projection_distance = projection_distance(g, out.stabilizer_part);
    dg.wfr2_primal = gs.solution.primal_value;
    dg.wfr2_dual = gs.solution.dual_value;
    dg.monge_value = monge_objective(out.monge_part, vol);
    dg.tolerance = default_polar_tolerance(grid);
    dg.reconstruction_ok = dg.reconstruction_tv <= dg.tolerance;
    dg.stabilizer_ok = dg.stabilizer_tv <= dg.tolerance;
    dg.iterations = gs.solution.iterations;
    dg.converged = gs.solution.converged;
    return out;
}

PolarFactorization polar_factorize(const GeneralizedAutomorphism& g, bool debias)
{
    return polar_factorize(g, grid_solve_options(g.grid), debias);
}

} // namespace uot
