#pragma once

#include "uot/entropy.hpp"
#include "uot/manifold.hpp"
#include "uot/solver.hpp"

#include <span>
#include <vector>

namespace uot {

// Sampled couple (phi, lambda) on a 1D grid: node x_i is sent to phi[i]
// (an angle on the circle, a coordinate on an interval) and its mass is
// multiplied by lam[i]^2.
struct TransportCouple {
    Grid1D grid;
    std::vector<double> phi;
    std::vector<double> lam;

    static TransportCouple identity(const Grid1D& grid);
    std::size_t size() const { return phi.size(); }
    // phi[i] - x_i, wrapped to (-pi, pi] on the circle.
    double displacement(std::size_t i) const;
    void validate() const;
};

// c-exp_x(p) = exp_x(atan(|p|/2) p/|p|) for the WFR cost; c-exp_x(0) = x.
Point c_exp(const Space& space, const Point& x, const Tangent& p);

// phi(x) = c-exp_x(-grad z), lam = e^{-z} sqrt(1 + |grad z|^2 / 4).
TransportCouple monge_couple_from_potential(const Grid1D& grid, std::span<const double> z);
TransportCouple monge_couple_from_potential(const GridDensity& z);

// Moves the mass lam_i^2 rho0_i h from node i to phi_i. `particles` keeps the
// exact point masses; `density` bins them back onto the grid by carrying each
// cell along the map and depositing by overlap (a rigid shift where the map
// jumps). Total mass is conserved to roundoff; lattice shifts and permutations
// are reproduced exactly.
struct Pushforward {
    DiscreteMeasure particles;
    GridDensity density;
};

Pushforward pushforward(const TransportCouple& tc, const GridDensity& rho0);
GridDensity pushforward_density(const TransportCouple& tc, const GridDensity& rho0);

// sum_i |a_i - b_i| h: total variation norm of the difference of the masses.
double tv_distance(const GridDensity& a, const GridDensity& b);

// sum_i d_C^2((phi_i, lam_i), (x_i, 1)) rho0_i h.
double monge_objective(const TransportCouple& tc, const GridDensity& rho0);

struct MaResidual {
    std::vector<double> residual;
    std::vector<double> lhs;
    std::vector<double> rhs;
    std::vector<std::size_t> near_singular; // nodes with d(x, phi(x)) close to pi/2
    double max_abs = 0.0;
    double mean_abs = 0.0;
};

// Residual of the WFR Monge-Ampere equation on a circle grid,
//   [-z'' + c_xx(x, phi)] - |c_xy(x, phi)| e^{-2z} (1 + z'^2/4) f(x) / g(phi(x)),
// with c = -2 log cos d so that c_xx = |c_xy| = 2 / cos^2 d. g is evaluated at
// phi(x) by periodic linear interpolation. Nodes whose displacement is within
// `singular_margin` of pi/2 are listed and excluded from max / mean.
MaResidual ma_residual(std::span<const double> z, const GridDensity& f, const GridDensity& g,
                       double singular_margin = 1e-3);

// Periodic (circle) or clamped (interval) linear interpolation of a grid field.
double interpolate(const Grid1D& grid, std::span<const double> values, double x);

// Nearest-node injection of potentials living on arbitrary support points onto a grid.
std::vector<double> resample_to_grid(const Grid1D& grid, std::span<const double> coords, std::span<const double> values);

// Entropic WFR solve between two grid densities (masses rho * h on the nodes,
// KL marginals). The returned potentials are the smooth scaling potentials,
// which is what the grid operators above want.
//
// The scaling potentials satisfy z0_i + z1_j - C_ij = eps log gamma_ij, so on
// matched pairs they sit below the cost by a near-constant O(eps log) amount.
// With `debias`, each potential is lowered by half the peak of z0 + z1 - C over
// the other index (refined to sub-grid accuracy by a parabola through the
// discrete maximum), restoring z0 + z1 = c on matched pairs. Splitting the
// correction evenly keeps |rho0~| = |rho1~|.
struct GridSolution {
    Solution solution;
    std::vector<double> z0;
    std::vector<double> z1;
    bool debiased = false;
};

// Schedule used by the grid pipelines: eps_final = h / 50. Rebinning error is
// O(h) and the entropic blur is O(eps), so tying the two keeps the overall error
// first order in h.
SolveOptions grid_solve_options(const Grid1D& grid);

GridSolution solve_on_grid(const GridDensity& rho0, const GridDensity& rho1, const SolveOptions& options,
                           bool debias = false);
GridSolution solve_on_grid(const GridDensity& rho0, const GridDensity& rho1, bool debias = false);

} // namespace uot
