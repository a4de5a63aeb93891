#include "uot/monge.hpp"

#include "uot/cone.hpp"
#include "uot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace uot {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

void check_same_grid(const Grid1D& a, const Grid1D& b, const char* what)
{
    if (!(a == b)) fail(ErrorKind::InvalidInput, std::string(what) + ": grids differ");
}

} // namespace

TransportCouple TransportCouple::identity(const Grid1D& grid)
{
    return {grid, grid.nodes(), std::vector<double>(grid.n, 1.0)};
}

double TransportCouple::displacement(std::size_t i) const
{
    const double x = grid.node(i);
    return grid.periodic() ? angle_difference(x, phi[i]) : phi[i] - x;
}

void TransportCouple::validate() const
{
    if (phi.size() != grid.n || lam.size() != grid.n) fail(ErrorKind::InvalidInput, "couple size does not match grid");
    for (std::size_t i = 0; i < grid.n; ++i) {
        if (!std::isfinite(phi[i])) fail(ErrorKind::InvalidInput, "couple: non-finite map value");
        if (!(lam[i] > 0.0) || !std::isfinite(lam[i])) fail(ErrorKind::InvalidInput, "couple: lambda must be positive");
    }
}

Point c_exp(const Space& space, const Point& x, const Tangent& p)
{
    const double pn = norm(space, x, p);
    if (!std::isfinite(pn)) fail(ErrorKind::InvalidInput, "c_exp: non-finite vector");
    if (pn == 0.0) return x;
    return exp_map(space, x, (std::atan(0.5 * pn) / pn) * p);
}

TransportCouple monge_couple_from_potential(const Grid1D& grid, std::span<const double> z)
{
    for (double v : z)
        if (!std::isfinite(v)) fail(ErrorKind::InvalidInput, "monge couple: potential must be finite");
    const std::vector<double> dz = grid_gradient(grid, z);
    TransportCouple tc{grid, std::vector<double>(grid.n), std::vector<double>(grid.n)};
    for (std::size_t i = 0; i < grid.n; ++i) {
        // In 1D, c-exp_x(-z') = x - atan(z'/2).
        const double x = grid.node(i);
        const double y = x - std::atan(0.5 * dz[i]);
        tc.phi[i] = grid.periodic() ? wrap_angle(y) : y;
        tc.lam[i] = std::exp(-z[i]) * std::sqrt(1.0 + 0.25 * dz[i] * dz[i]);
    }
    return tc;
}

TransportCouple monge_couple_from_potential(const GridDensity& z) { return monge_couple_from_potential(z.grid, z.values); }

GridDensity pushforward_density(const TransportCouple& tc, const GridDensity& rho0)
{
    check_same_grid(tc.grid, rho0.grid, "pushforward");
    tc.validate();
    const Grid1D& grid = tc.grid;
    const std::size_t n = grid.n;
    const double h = grid.spacing;
    const bool periodic = grid.periodic();
    std::vector<double> disp(n);
    for (std::size_t i = 0; i < n; ++i) disp[i] = tc.displacement(i);

    // Cell [x_i - h/2, x_i + h/2] is carried to a segment whose ends move with
    // the displacement averaged over the neighbouring nodes; where neighbours
    // jump apart by more than h/2 the cell is shifted rigidly instead. The
    // mass lam_i^2 rho0_i h is spread uniformly over the segment and deposited
    // by overlap with the target cells, so lattice permutations stay exact.
    auto edge = [&](std::size_t i, std::size_t j, bool has_j) {
        if (!has_j) return disp[i];
        const double jump = periodic ? angle_difference(disp[i], disp[j]) : disp[j] - disp[i];
        return std::abs(jump) > 0.5 * h ? disp[i] : disp[i] + 0.5 * jump;
    };
    std::vector<double> mass(n, 0.0);
    const auto nn = static_cast<long long>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double m = tc.lam[i] * tc.lam[i] * rho0.values[i] * h;
        if (m == 0.0) continue;
        const bool has_l = periodic || i > 0;
        const bool has_r = periodic || i + 1 < n;
        const double x = static_cast<double>(i) * h; // relative to the origin
        double a = x - 0.5 * h + edge(i, (i + n - 1) % n, has_l);
        double b = x + 0.5 * h + edge(i, (i + 1) % n, has_r);
        if (!(b - a > 1e-9 * h)) {
            a = x - 0.5 * h + disp[i];
            b = x + 0.5 * h + disp[i];
        }
        const double len = b - a;
        const auto ka = static_cast<long long>(std::floor(a / h + 0.5));
        const auto kb = static_cast<long long>(std::floor(b / h + 0.5));
        for (long long k = ka; k <= kb; ++k) {
            const double lo = std::max(a, (static_cast<double>(k) - 0.5) * h);
            const double hi = std::min(b, (static_cast<double>(k) + 0.5) * h);
            if (hi <= lo) continue;
            const std::size_t t = periodic ? static_cast<std::size_t>(((k % nn) + nn) % nn)
                                           : static_cast<std::size_t>(std::clamp(k, 0LL, nn - 1));
            mass[t] += m * (hi - lo) / len;
        }
    }
    for (double& v : mass) v /= h;
    return GridDensity(grid, std::move(mass));
}

Pushforward pushforward(const TransportCouple& tc, const GridDensity& rho0)
{
    GridDensity density = pushforward_density(tc, rho0);
    std::vector<Point> pts;
    std::vector<double> masses;
    pts.reserve(tc.size());
    masses.reserve(tc.size());
    for (std::size_t i = 0; i < tc.size(); ++i) {
        Point p(1);
        p[0] = tc.phi[i];
        pts.push_back(std::move(p));
        masses.push_back(tc.lam[i] * tc.lam[i] * rho0.values[i] * tc.grid.spacing);
    }
    return {DiscreteMeasure(tc.grid.space, std::move(pts), std::move(masses)), std::move(density)};
}

double tv_distance(const GridDensity& a, const GridDensity& b)
{
    check_same_grid(a.grid, b.grid, "tv_distance");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.values[i] - b.values[i]);
    return s * a.grid.spacing;
}

double monge_objective(const TransportCouple& tc, const GridDensity& rho0)
{
    check_same_grid(tc.grid, rho0.grid, "monge_objective");
    tc.validate();
    double total = 0.0;
    for (std::size_t i = 0; i < tc.size(); ++i) {
        const double d = std::abs(tc.displacement(i));
        total += cone_distance_squared(tc.lam[i], 1.0, d) * rho0.values[i];
    }
    return total * tc.grid.spacing;
}

double interpolate(const Grid1D& grid, std::span<const double> values, double x)
{
    const std::size_t n = grid.n;
    if (values.size() != n) fail(ErrorKind::InvalidInput, "interpolate: size mismatch");
    const double h = grid.spacing;
    double t = (x - grid.origin) / h;
    if (grid.periodic()) {
        t = wrap_angle(x) / h;
        const double fl = std::floor(t);
        const double fr = t - fl;
        const std::size_t k0 = static_cast<std::size_t>(fl) % n;
        return (1.0 - fr) * values[k0] + fr * values[(k0 + 1) % n];
    }
    if (t <= 0.0) return values[0];
    if (t >= static_cast<double>(n - 1)) return values[n - 1];
    const double fl = std::floor(t);
    const double fr = t - fl;
    const auto k0 = static_cast<std::size_t>(fl);
    return (1.0 - fr) * values[k0] + fr * values[k0 + 1];
}

MaResidual ma_residual(std::span<const double> z, const GridDensity& f, const GridDensity& g, double singular_margin)
{
    const Grid1D& grid = f.grid;
    if (!grid.periodic()) fail(ErrorKind::InvalidInput, "ma_residual: circle grids only");
    check_same_grid(grid, g.grid, "ma_residual");
    if (z.size() != grid.n) fail(ErrorKind::InvalidInput, "ma_residual: potential size does not match grid");
    const std::vector<double> dz = grid_gradient(grid, z);
    const std::vector<double> d2z = grid_second_derivative(grid, z);

    MaResidual out;
    out.residual.resize(grid.n);
    out.lhs.resize(grid.n);
    out.rhs.resize(grid.n);
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double d = std::atan(0.5 * std::abs(dz[i])); // d(x, phi(x))
        const double y = grid.node(i) - std::atan(0.5 * dz[i]);
        const double gy = interpolate(grid, g.values, y);
        if (gy < 1e-12) throw SingularityError("ma_residual: target density vanishes at phi(x_" + std::to_string(i) + ")", i);
        const double cd = std::cos(d);
        const double cxx = 2.0 / (cd * cd);
        const double cxy = 2.0 / (cd * cd);
        out.lhs[i] = -d2z[i] + cxx;
        out.rhs[i] = cxy * std::exp(-2.0 * z[i]) * (1.0 + 0.25 * dz[i] * dz[i]) * f.values[i] / gy;
        out.residual[i] = out.lhs[i] - out.rhs[i];
        if (kHalfPi - d < singular_margin) {
            out.near_singular.push_back(i);
            continue;
        }
        out.max_abs = std::max(out.max_abs, std::abs(out.residual[i]));
        sum += std::abs(out.residual[i]);
        ++counted;
    }
    out.mean_abs = counted > 0 ? sum / static_cast<double>(counted) : 0.0;
    return out;
}

std::vector<double> resample_to_grid(const Grid1D& grid, std::span<const double> coords, std::span<const double> values)
{
    if (coords.size() != values.size() || coords.empty())
        fail(ErrorKind::InvalidInput, "resample_to_grid: need matching, nonempty coordinates and values");
    std::vector<double> out(grid.n);
    for (std::size_t k = 0; k < grid.n; ++k) {
        const double x = grid.node(k);
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t j = 0; j < coords.size(); ++j) {
            const double d = grid.periodic() ? std::abs(angle_difference(x, coords[j])) : std::abs(x - coords[j]);
            if (d < best) {
                best = d;
                arg = j;
            }
        }
        out[k] = values[arg];
    }
    return out;
}

SolveOptions grid_solve_options(const Grid1D& grid)
{
    SolveOptions o;
    o.schedule.eps_final = grid.spacing / 50.0;
    o.max_iter = 50000;
    return o;
}

namespace {

// For each outer index a: max over b of v(a, b) = za[a] + zb[b] - C(a, b),
// refined by a parabola through the discrete maximum and its two neighbours.
std::vector<double> refined_pair_peak(const Grid1D& grid, const CostMatrix& C, bool over_columns,
                                      const std::vector<double>& z0, const std::vector<double>& z1)
{
    const std::size_t n = grid.n;
    auto v = [&](std::size_t a, std::size_t b) {
        const std::size_t i = over_columns ? a : b, j = over_columns ? b : a;
        const double c = C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        return std::isinf(c) ? -std::numeric_limits<double>::infinity() : z0[i] + z1[j] - c;
    };
    std::vector<double> out(n);
    for (std::size_t a = 0; a < n; ++a) {
        std::size_t arg = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < n; ++b) {
            const double x = v(a, b);
            if (x > best) {
                best = x;
                arg = b;
            }
        }
        out[a] = best;
        const bool has_l = grid.periodic() || arg > 0;
        const bool has_r = grid.periodic() || arg + 1 < n;
        if (!has_l || !has_r || std::isinf(best)) continue;
        const double vm = v(a, (arg + n - 1) % n), vp = v(a, (arg + 1) % n);
        const double curv = vm - 2.0 * best + vp;
        if (!(curv < 0.0) || std::isinf(vm) || std::isinf(vp)) continue;
        const double p = 0.5 * (vm - vp) / curv;
        out[a] = best - 0.25 * (vm - vp) * p;
    }
    return out;
}

} // namespace

GridSolution solve_on_grid(const GridDensity& rho0, const GridDensity& rho1, const SolveOptions& options, bool debias)
{
    check_same_grid(rho0.grid, rho1.grid, "solve_on_grid");
    const Grid1D& grid = rho0.grid;
    const double h = grid.spacing;
    std::vector<double> m0(grid.n), m1(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        if (rho0.values[i] < 0.0 || rho1.values[i] < 0.0) fail(ErrorKind::InvalidInput, "solve_on_grid: negative density");
        m0[i] = rho0.values[i] * h;
        m1[i] = rho1.values[i] * h;
    }
    std::vector<Point> pts;
    pts.reserve(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) pts.push_back(Point::Constant(1, grid.node(i)));
    const CostMatrix C = cost_matrix(grid.space, CostSpec::wfr(), pts, pts);
    const EntropyFunction kl = make_kl_entropy();
    GridSolution out{solve_entropic(m0, m1, C, kl, kl, options), {}, {}};
    const PotentialPair& zp = out.solution.scaling_potentials;
    out.z0.assign(zp.z0.data(), zp.z0.data() + zp.z0.size());
    out.z1.assign(zp.z1.data(), zp.z1.data() + zp.z1.size());
    if (debias) {
        for (std::size_t i = 0; i < grid.n; ++i)
            if (!std::isfinite(out.z0[i]) || !std::isfinite(out.z1[i]))
                fail(ErrorKind::Numerical, "solve_on_grid: cannot debias non-finite potentials");
        const std::vector<double> m0 = refined_pair_peak(grid, C, true, out.z0, out.z1);
        const std::vector<double> m1 = refined_pair_peak(grid, C, false, out.z0, out.z1);
        for (std::size_t i = 0; i < grid.n; ++i) {
            out.z0[i] -= 0.5 * m0[i];
            out.z1[i] -= 0.5 * m1[i];
        }
        out.debiased = true;
    }
    return out;
}

GridSolution solve_on_grid(const GridDensity& rho0, const GridDensity& rho1, bool debias)
{
    return solve_on_grid(rho0, rho1, grid_solve_options(rho0.grid), debias);
}

} // namespace uot
