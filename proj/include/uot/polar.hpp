#pragma once

#include "uot/monge.hpp"

namespace uot {

// Element (phi, lam) of the generalized automorphism semigroup of the cone,
// sampled on a uniform grid. Same layout as a transport couple.
using GeneralizedAutomorphism = TransportCouple;

// (phi1, lam1) . (phi2, lam2) = (phi1 o phi2, (lam1 o phi2) lam2). g1 is read at
// phi2(x_i) by linear interpolation of its displacement and of lam1.
GeneralizedAutomorphism compose(const GeneralizedAutomorphism& g1, const GeneralizedAutomorphism& g2);

// phi_*(lam^2 rho), binned back onto the grid.
GridDensity act(const GeneralizedAutomorphism& g, const GridDensity& rho);

// Riemannian volume on the grid: density 1 (total mass 2 pi on the circle).
GridDensity volume_density(const Grid1D& grid);

struct VolumeCheck {
    bool preserving = false;
    double tv_error = 0.0;
};

// tv_error = TV(act(g, vol), vol). A negative tol means the default 5/n + 1e-3.
VolumeCheck is_volume_preserving(const GeneralizedAutomorphism& g, double tol = -1.0);

double default_polar_tolerance(const Grid1D& grid);

// sum_i d_C^2((phi(x_i), lam(x_i)), (s(x_i), lam_s(x_i))) h.
double projection_distance(const GeneralizedAutomorphism& g, const GeneralizedAutomorphism& s);

struct PolarDiagnostics {
    double reconstruction_tv = 0.0;    // TV(act(monge . stabilizer, vol), act(g, vol))
    double reconstruction_phi = 0.0;   // max |phi - phi_rec| (wrapped on the circle)
    double reconstruction_lam = 0.0;   // max |lam - lam_rec|
    double stabilizer_tv = 0.0;        // TV(act(stabilizer, vol), vol)
    double projection_distance = 0.0; // projection_distance(g, stabilizer)
    double wfr2_primal = 0.0;          // solver bracket on WFR^2(vol, rho1)
    double wfr2_dual = 0.0;
    double monge_value = 0.0;          // monge_objective(monge_part, vol)
    double tolerance = 0.0;
    bool reconstruction_ok = false;
    bool stabilizer_ok = false;
    int iterations = 0;
    bool converged = false;
};

struct PolarFactorization {
    TransportCouple monge_part;
    GeneralizedAutomorphism stabilizer_part;
    std::vector<double> z0;
    std::vector<double> z1;
    GridDensity rho1;
    PolarDiagnostics diagnostics;
};

// g = monge_part . stabilizer_part with monge_part the optimal couple from vol
// to rho1 = act(g, vol). The stabilizer is (phi1, lam1) . g, where the inverse
// couple (phi1, lam1) is read off the second potential z1. The construction
// needs lam0(phi1) lam1 = 1, i.e. z0 + z1 = c on matched pairs, so the grid
// potentials are debiased by default (see solve_on_grid).
PolarFactorization polar_factorize(const GeneralizedAutomorphism& g, const SolveOptions& options, bool debias = true);
PolarFactorization polar_factorize(const GeneralizedAutomorphism& g, bool debias = true);

// Couple of the reverse problem: phi1(y) = y - atan(z1'/2), lam1 = e^{-z1} sqrt(1 + z1'^2/4).
TransportCouple inverse_couple_from_potential(const Grid1D& grid, std::span<const double> z1);

} // namespace uot
