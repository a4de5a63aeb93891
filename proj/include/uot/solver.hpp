#pragma once

#include "uot/entropy.hpp"
#include "uot/manifold.hpp"

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace uot {

inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

enum class CostKind { Quadratic, Wfr };

// quadratic: c = d^2 / 2
// wfr:       c = -log cos^2(min(d, delta * pi / 2)), +inf at d >= pi/2 when delta = 1
struct CostSpec {
    CostKind kind = CostKind::Wfr;
    double delta = 1.0;

    static CostSpec quadratic() { return {CostKind::Quadratic, 1.0}; }
    static CostSpec wfr(double delta = 1.0);

    double operator()(double distance) const;
};

using CostMatrix = Eigen::MatrixXd;
using Plan = Eigen::MatrixXd;

struct PotentialPair {
    Eigen::VectorXd z0;
    Eigen::VectorXd z1;
};

struct SemiCoupling {
    Eigen::MatrixXd gamma0;
    Eigen::MatrixXd gamma1;
};

struct Schedule {
    double eps_start = 1.0;
    double eps_final = 1e-3;
    double decay = 0.7;
    int inner_iters = 200;
};

struct SolveOptions {
    Schedule schedule;
    int max_iter = 20000;
    double tol = 1e-8;
    double feas_tol = 1e-9;
};

struct Solution {
    Plan plan;
    PotentialPair potentials;         // c-transform rounded: feasible, used for the dual value
    PotentialPair scaling_potentials; // raw entropic potentials (smooth; infeasible by O(eps))
    double primal_value = 0.0;
    double dual_value = 0.0;
    double gap = 0.0;
    int iterations = 0;
    double epsilon_final = 0.0;
    bool converged = false;
};

CostMatrix cost_matrix(const Space& space, const CostSpec& cost, std::span<const Point> supp0,
                       std::span<const Point> supp1);
CostMatrix cost_matrix(const CostSpec& cost, const DiscreteMeasure& rho0, const DiscreteMeasure& rho1);

// Which index the input potential runs over. FromColumns: z over columns j,
// result over rows i, zhat[i] = min_j C[i,j] - z[j]. FromRows is the transpose.
enum class TransformSide { FromColumns, FromRows };

// c-conjugate over finite cost entries; ties resolved by the lowest index.
// A row (column) with no finite entry raises an admissibility error.
Eigen::VectorXd c_transform(const Eigen::VectorXd& z, const CostMatrix& C, TransformSide side);

// max over finite entries of z0[i] + z1[j] - C[i,j] (<= 0 when feasible).
double max_constraint_violation(const PotentialPair& zp, const CostMatrix& C);

// -sum F0*(-z0) rho0 - sum F1*(-z1) rho1. Throws FeasibilityError when the
// pair violates the constraint by more than feas_tol.
double dual_objective(const PotentialPair& zp, std::span<const double> rho0, std::span<const double> rho1,
                      const EntropyFunction& F0, const EntropyFunction& F1, const CostMatrix& C,
                      double feas_tol = 1e-9);

// D_F0(gamma_0 | rho0) + D_F1(gamma_1 | rho1) + <C, gamma>; +inf if mass sits on an infinite cost.
double primal_objective(const Plan& plan, std::span<const double> rho0, std::span<const double> rho1,
                        const EntropyFunction& F0, const EntropyFunction& F1, const CostMatrix& C);

Eigen::VectorXd row_marginal(const Plan& plan);
Eigen::VectorXd column_marginal(const Plan& plan);

// Entropy-regularized scaling iterations in log domain with geometric
// epsilon annealing. Supported marginal entropies: "kl" and "tv".
Solution solve_entropic(std::span<const double> rho0, std::span<const double> rho1, const CostMatrix& C,
                        const EntropyFunction& F0, const EntropyFunction& F1, const SolveOptions& options = {});
Solution solve_entropic(const DiscreteMeasure& rho0, const DiscreteMeasure& rho1, const CostMatrix& C,
                        const EntropyFunction& F0, const EntropyFunction& F1, const SolveOptions& options = {});

struct OracleResult {
    Plan plan;
    double value = 0.0;
    double stationarity = 0.0;
    int iterations = 0;
};

inline constexpr std::size_t kOracleMaxEntries = 16;

// Projected Newton descent on the (unregularized) primal for tiny instances,
// m0 * m1 <= 16. Infinite-cost entries are pinned to zero. Needs smooth entropies.
OracleResult convex_oracle(std::span<const double> rho0, std::span<const double> rho1, const CostMatrix& C,
                           const EntropyFunction& F0, const EntropyFunction& F1, int max_iters = 2000);

// Closed-form WFR^2(a delta_x, b delta_y) = a + b - 2 sqrt(ab) cos(min(d, pi/2)).
double wfr_two_diracs(const Space& space, double a, const Point& x, double b, const Point& y);
double wfr_two_diracs(double a, double b, double distance);

struct Admissibility {
    double c_H = 0.0;
    bool admissible = false;
};

// c_H = max(max_i min_j C, max_j min_i C) over positive-mass points.
Admissibility admissibility(std::span<const double> rho0, std::span<const double> rho1, const CostMatrix& C);

struct LinearizationReport {
    Eigen::VectorXd rho0_tilde;
    Eigen::VectorXd rho1_tilde;
    double mass0 = 0.0;
    double mass1 = 0.0;
    double mass_difference = 0.0; // |rho0~| - |rho1~|
    double relative_mass_difference = 0.0;
    std::optional<double> slackness; // max |C - z0 - z1| on plan entries carrying mass
};

// rho_i~ = F_i*'(-z_i) rho_i: the marginals of the standard OT problem the
// potentials solve. With a plan, also scores complementary slackness on the
// entries carrying at least `mass_threshold` of the plan's total mass.
LinearizationReport linearized_marginals(const PotentialPair& zp, std::span<const double> rho0,
                                         std::span<const double> rho1, const EntropyFunction& F0,
                                         const EntropyFunction& F1, const CostMatrix* C = nullptr,
                                         const Plan* plan = nullptr, double mass_threshold = 1e-6);

// sum_ij sigma(x_i, y_j, gamma0[i,j], gamma1[i,j]) with sigma the lifted cone cost;
// `distances` holds d(x_i, y_j).
double semicoupling_value(const SemiCoupling& sc, const Eigen::MatrixXd& distances);

Eigen::MatrixXd distance_matrix(const Space& space, std::span<const Point> supp0, std::span<const Point> supp1);

struct SemiCouplingResult {
    SemiCoupling coupling;
    double value = 0.0;
    double stationarity = 0.0;
    int iterations = 0;
};

inline constexpr std::size_t kSemiCouplingMaxPoints = 3;

// Minimizes the semi-coupling objective over couplings whose first / second
// factor has marginals rho0 / rho1. Supports of at most 3 points each.
SemiCouplingResult solve_semicoupling_small(const DiscreteMeasure& rho0, const DiscreteMeasure& rho1,
                                            int max_iters = 200000);

} // namespace uot
