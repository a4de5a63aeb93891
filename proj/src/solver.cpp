#include "uot/solver.hpp"

#include "uot/cone.hpp"
#include "uot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace uot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// exp(-60) ~ 1e-26: kernel entries below this relative weight are skipped.
constexpr double kLseCutoff = -60.0;

enum class MarginalRule { Kl, Tv };

MarginalRule marginal_rule(const EntropyFunction& F)
{
    if (F.name == "kl") return MarginalRule::Kl;
    if (F.name == "tv") return MarginalRule::Tv;
    fail(ErrorKind::InvalidInput, "solve_entropic: no scaling rule for entropy '" + F.name + "'");
}

// Log-domain proxdiv: new potential from log(rho) and log(K b) (both already
// multiplied out of the exponent), for marginal penalty weight 1.
double proxdiv(MarginalRule rule, double log_rho, double log_kb, double eps)
{
    const double raw = log_rho - log_kb; // log(rho / Kb)
    switch (rule) {
    case MarginalRule::Kl: return eps / (1.0 + eps) * raw;
    case MarginalRule::Tv: return std::clamp(eps * raw, -1.0, 1.0);
    }
    return 0.0;
}

// Sparse band of kernel entries per row (or column). Entries whose weight
// exp((g_j - c_j) / eps) falls below exp(-kBandWidth) times the row maximum
// are dropped; the band is rebuilt once the opposite potential has drifted
// enough that a dropped entry could come within exp(-kLseCutoff) of it.
constexpr double kBandWidth = 70.0;
constexpr double kBandDrift = 10.0;

struct Band {
    std::vector<std::size_t> start;
    std::vector<std::size_t> index;
    std::vector<double> cost;
};

// cost is laid out with `inner` entries per outer index.
void build_band(Band& band, const std::vector<double>& cost, std::size_t outer, std::size_t inner,
                const std::vector<double>& other, double eps)
{
    band.start.assign(outer + 1, 0);
    band.index.clear();
    band.cost.clear();
    for (std::size_t a = 0; a < outer; ++a) {
        const double* c = &cost[a * inner];
        double m = -kInf;
        for (std::size_t b = 0; b < inner; ++b)
            if (!std::isinf(c[b]) && !std::isinf(other[b])) m = std::max(m, other[b] - c[b]);
        if (!std::isinf(m)) {
            const double cut = m - kBandWidth * eps;
            for (std::size_t b = 0; b < inner; ++b) {
                if (std::isinf(c[b]) || std::isinf(other[b])) continue;
                if (other[b] - c[b] >= cut) {
                    band.index.push_back(b);
                    band.cost.push_back(c[b]);
                }
            }
        }
        band.start[a + 1] = band.index.size();
    }
}

// log sum_b exp((other_b - c_b) / eps) over the band of row a; -inf if empty.
double log_sum_exp_band(const Band& band, std::size_t a, const std::vector<double>& other, double eps)
{
    const std::size_t lo = band.start[a], hi = band.start[a + 1];
    if (lo == hi) return -kInf;
    double m = -kInf;
    for (std::size_t k = lo; k < hi; ++k) m = std::max(m, other[band.index[k]] - band.cost[k]);
    const double cut = kLseCutoff * eps;
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) {
        const double e = other[band.index[k]] - band.cost[k] - m;
        if (e < cut) continue;
        s += std::exp(e / eps);
    }
    return m / eps + std::log(s);
}

double spread(const std::vector<double>& now, const std::vector<double>& then)
{
    double lo = kInf, hi = -kInf;
    for (std::size_t k = 0; k < now.size(); ++k) {
        if (std::isinf(now[k]) || std::isinf(then[k])) continue;
        const double d = now[k] - then[k];
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return hi >= lo ? hi - lo : 0.0;
}

double log_sum_exp(std::span<const double> v)
{
    double m = -kInf;
    for (double x : v) m = std::max(m, x);
    if (std::isinf(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

std::vector<std::size_t> positive_indices(std::span<const double> rho)
{
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < rho.size(); ++i)
        if (rho[i] > 0.0) idx.push_back(i);
    return idx;
}

void check_masses(std::span<const double> rho, const char* what)
{
    for (double m : rho)
        if (!(m >= 0.0) || !std::isfinite(m)) fail(ErrorKind::InvalidInput, std::string(what) + ": masses must be finite and >= 0");
}

double pair_violation(double z0, double z1, double c)
{
    if (std::isinf(c)) return -kInf;
    if (z0 == -kInf || z1 == -kInf) return -kInf;
    if (std::isinf(z0) || std::isinf(z1)) return kInf;
    return z0 + z1 - c;
}

} // namespace

CostSpec CostSpec::wfr(double delta)
{
    if (!(delta > 0.0 && delta <= 1.0)) fail(ErrorKind::InvalidInput, "wfr cost needs delta in (0, 1]");
    return {CostKind::Wfr, delta};
}

double CostSpec::operator()(double d) const
{
    if (kind == CostKind::Quadratic) return 0.5 * d * d;
    const double cap = delta * std::numbers::pi / 2.0;
    if (delta == 1.0 && d >= cap) return kInfiniteCost;
    const double c = std::cos(std::min(d, cap));
    return -std::log(c * c);
}

CostMatrix cost_matrix(const Space& space, const CostSpec& cost, std::span<const Point> supp0,
                       std::span<const Point> supp1)
{
    CostMatrix C(static_cast<Eigen::Index>(supp0.size()), static_cast<Eigen::Index>(supp1.size()));
    for (std::size_t i = 0; i < supp0.size(); ++i)
        for (std::size_t j = 0; j < supp1.size(); ++j)
            C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                cost(geodesic_distance(space, supp0[i], supp1[j]));
    return C;
}

CostMatrix cost_matrix(const CostSpec& cost, const DiscreteMeasure& rho0, const DiscreteMeasure& rho1)
{
    if (!(rho0.space == rho1.space)) fail(ErrorKind::InvalidInput, "cost_matrix: measures on different spaces");
    return cost_matrix(rho0.space, cost, rho0.points, rho1.points);
}

Eigen::VectorXd c_transform(const Eigen::VectorXd& z, const CostMatrix& C, TransformSide side)
{
    const bool from_cols = side == TransformSide::FromColumns;
    const Eigen::Index n_in = from_cols ? C.cols() : C.rows();
    const Eigen::Index n_out = from_cols ? C.rows() : C.cols();
    if (z.size() != n_in) fail(ErrorKind::InvalidInput, "c_transform: potential size does not match cost matrix");
    if (!z.allFinite()) fail(ErrorKind::InvalidInput, "c_transform: potential must be finite");
    Eigen::VectorXd out(n_out);
    for (Eigen::Index k = 0; k < n_out; ++k) {
        double best = kInf;
        for (Eigen::Index l = 0; l < n_in; ++l) {
            const double c = from_cols ? C(k, l) : C(l, k);
            if (std::isinf(c)) continue;
            const double v = c - z[l];
            if (v < best) best = v;
        }
        if (std::isinf(best))
            fail(ErrorKind::Admissibility, "c_transform: " + std::string(from_cols ? "row " : "column ") +
                                               std::to_string(k) + " has no finite cost entry");
        out[k] = best;
    }
    return out;
}

double max_constraint_violation(const PotentialPair& zp, const CostMatrix& C)
{
    if (zp.z0.size() != C.rows() || zp.z1.size() != C.cols())
        fail(ErrorKind::InvalidInput, "potential sizes do not match cost matrix");
    double worst = -kInf;
    for (Eigen::Index i = 0; i < C.rows(); ++i)
        for (Eigen::Index j = 0; j < C.cols(); ++j) worst = std::max(worst, pair_violation(zp.z0[i], zp.z1[j], C(i, j)));
    return worst;
}

double dual_objective(const PotentialPair& zp, std::span<const double> rho0, std::span<const double> rho1,
                      const EntropyFunction& F0, const EntropyFunction& F1, const CostMatrix& C, double feas_tol)
{
    if (static_cast<Eigen::Index>(rho0.size()) != zp.z0.size() || static_cast<Eigen::Index>(rho1.size()) != zp.z1.size())
        fail(ErrorKind::InvalidInput, "dual_objective: size mismatch");
    const double viol = max_constraint_violation(zp, C);
    if (viol > feas_tol)
        throw FeasibilityError("dual_objective: potentials violate z0 + z1 <= c by " + std::to_string(viol), viol);
    double value = 0.0;
    for (std::size_t i = 0; i < rho0.size(); ++i)
        if (rho0[i] > 0.0) value -= F0.F_star(-zp.z0[static_cast<Eigen::Index>(i)]) * rho0[i];
    for (std::size_t j = 0; j < rho1.size(); ++j)
        if (rho1[j] > 0.0) value -= F1.F_star(-zp.z1[static_cast<Eigen::Index>(j)]) * rho1[j];
    return value;
}

Eigen::VectorXd row_marginal(const Plan& plan) { return plan.rowwise().sum(); }
Eigen::VectorXd column_marginal(const Plan& plan) { return plan.colwise().sum().transpose(); }

double primal_objective(const Plan& plan, std::span<const double> rho0, std::span<const double> rho1,
                        const EntropyFunction& F0, const EntropyFunction& F1, const CostMatrix& C)
{
    if (plan.rows() != C.rows() || plan.cols() != C.cols() || static_cast<Eigen::Index>(rho0.size()) != C.rows() ||
        static_cast<Eigen::Index>(rho1.size()) != C.cols())
        fail(ErrorKind::InvalidInput, "primal_objective: shape mismatch");
    double transport = 0.0;
    for (Eigen::Index i = 0; i < C.rows(); ++i)
        for (Eigen::Index j = 0; j < C.cols(); ++j) {
            const double g = plan(i, j);
            if (g < 0.0) fail(ErrorKind::InvalidInput, "primal_objective: negative plan entry");
            if (g == 0.0) continue;
            if (std::isinf(C(i, j))) return kInf;
            transport += C(i, j) * g;
        }
    const Eigen::VectorXd g0 = row_marginal(plan);
    const Eigen::VectorXd g1 = column_marginal(plan);
    const double d0 = csiszar_divergence(F0, std::span<const double>(g0.data(), g0.size()), rho0);
    const double d1 = csiszar_divergence(F1, std::span<const double>(g1.data(), g1.size()), rho1);
    return d0 + d1 + transport;
}

Solution solve_entropic(std::span<const double> rho0, std::span<const double> rho1, const CostMatrix& C,
                        const EntropyFunction& F0, const EntropyFunction& F1, const SolveOptions& options)
{
    const Schedule& sch = options.schedule;
    if (!(sch.eps_final > 0.0) || !(sch.eps_start >= sch.eps_final))
        fail(ErrorKind::InvalidInput, "solve_entropic: need eps_start >= eps_final > 0");
    if (!(sch.decay > 0.0 && sch.decay < 1.0)) fail(ErrorKind::InvalidInput, "solve_entropic: decay must lie in (0, 1)");
    if (static_cast<Eigen::Index>(rho0.size()) != C.rows() || static_cast<Eigen::Index>(rho1.size()) != C.cols())
        fail(ErrorKind::InvalidInput, "solve_entropic: shape mismatch");
    check_masses(rho0, "rho0");
    check_masses(rho1, "rho1");
    const MarginalRule rule0 = marginal_rule(F0);
    const MarginalRule rule1 = marginal_rule(F1);
    const bool translate = rule0 == MarginalRule::Kl && rule1 == MarginalRule::Kl;

    // Iterate on the positive-mass subproblem.
    const auto P0 = positive_indices(rho0);
    const auto P1 = positive_indices(rho1);
    CostMatrix Csub(static_cast<Eigen::Index>(P0.size()), static_cast<Eigen::Index>(P1.size()));
    for (std::size_t a = 0; a < P0.size(); ++a)
        for (std::size_t b = 0; b < P1.size(); ++b)
            Csub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                C(static_cast<Eigen::Index>(P0[a]), static_cast<Eigen::Index>(P1[b]));
    const std::size_t m0 = P0.size();
    const std::size_t m1 = P1.size();
    std::vector<double> cost_rows(m0 * m1), cost_cols(m0 * m1);
    for (std::size_t a = 0; a < m0; ++a)
        for (std::size_t b = 0; b < m1; ++b) {
            const double c = Csub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            cost_rows[a * m1 + b] = c;
            cost_cols[b * m0 + a] = c;
        }

    std::vector<double> lr0(m0), lr1(m1);
    for (std::size_t a = 0; a < m0; ++a) lr0[a] = std::log(rho0[P0[a]]);
    for (std::size_t b = 0; b < m1; ++b) lr1[b] = std::log(rho1[P1[b]]);

    std::vector<double> f(m0, 0.0), g(m1, 0.0), f_prev(m0), g_prev(m1), buf0(m0), buf1(m1);
    Band row_band, col_band;
    std::vector<double> g_at_build, f_at_build;

    Solution sol;
    double eps = sch.eps_start;
    int it = 0;
    bool converged = false;
    for (;;) {
        const bool last = eps <= sch.eps_final;
        const int stage_cap = last ? options.max_iter - it : std::min(sch.inner_iters, options.max_iter - it);
        bool rows_stale = true, cols_stale = true;
        for (int k = 0; k < stage_cap; ++k) {
            f_prev = f;
            g_prev = g;
            if (rows_stale || spread(g, g_at_build) > kBandDrift * eps) {
                build_band(row_band, cost_rows, m0, m1, g, eps);
                g_at_build = g;
                rows_stale = false;
            }
            for (std::size_t a = 0; a < m0; ++a) {
                const double lkb = log_sum_exp_band(row_band, a, g, eps);
                f[a] = std::isinf(lkb) ? kInf : proxdiv(rule0, lr0[a], lkb, eps);
            }
            if (cols_stale || spread(f, f_at_build) > kBandDrift * eps) {
                build_band(col_band, cost_cols, m1, m0, f, eps);
                f_at_build = f;
                cols_stale = false;
            }
            for (std::size_t b = 0; b < m1; ++b) {
                const double lkb = log_sum_exp_band(col_band, b, f, eps);
                g[b] = std::isinf(lkb) ? kInf : proxdiv(rule1, lr1[b], lkb, eps);
            }
            if (translate) {
                // Exact maximization of the dual along (f + t, g - t): the plan is
                // unchanged and only the marginal terms move.
                std::size_t k0 = 0, k1 = 0;
                for (std::size_t a = 0; a < m0; ++a)
                    if (!std::isinf(f[a])) buf0[k0++] = lr0[a] - f[a];
                for (std::size_t b = 0; b < m1; ++b)
                    if (!std::isinf(g[b])) buf1[k1++] = lr1[b] - g[b];
                if (k0 > 0 && k1 > 0) {
                    const double t = 0.5 * (log_sum_exp(std::span<const double>(buf0.data(), k0)) -
                                            log_sum_exp(std::span<const double>(buf1.data(), k1)));
                    for (double& v : f) v += t;
                    for (double& v : g) v -= t;
                }
            }
            ++it;
            double change = 0.0;
            for (std::size_t a = 0; a < m0; ++a) {
                if (std::isnan(f[a])) fail(ErrorKind::Numerical, "solve_entropic: NaN in row potential");
                if (!std::isinf(f[a])) change = std::max(change, std::abs(f[a] - f_prev[a]));
            }
            for (std::size_t b = 0; b < m1; ++b) {
                if (std::isnan(g[b])) fail(ErrorKind::Numerical, "solve_entropic: NaN in column potential");
                if (!std::isinf(g[b])) change = std::max(change, std::abs(g[b] - g_prev[b]));
            }
            if (change < options.tol) {
                if (last) converged = true;
                break;
            }
        }
        if (last || it >= options.max_iter) break;
        eps = std::max(eps * sch.decay, sch.eps_final);
    }

    // Plan on the full index set.
    const Eigen::Index n0 = C.rows(), n1 = C.cols();
    sol.plan = Plan::Zero(n0, n1);
    for (std::size_t a = 0; a < m0; ++a)
        for (std::size_t b = 0; b < m1; ++b) {
            const double c = cost_rows[a * m1 + b];
            if (std::isinf(c) || std::isinf(f[a]) || std::isinf(g[b])) continue;
            sol.plan(static_cast<Eigen::Index>(P0[a]), static_cast<Eigen::Index>(P1[b])) = std::exp((f[a] + g[b] - c) / eps);
        }

    // Potentials: round the scaling potentials to an exactly feasible pair by
    // c-transforms, z1 = c-conjugate of z0 over the positive-mass rows, then
    // z0 = c-conjugate of z1. Each step can only raise the dual value, and the
    // second also fills zero-mass points. Points with no finite cost entry
    // keep +inf (all of their mass is created or destroyed).
    PotentialPair& zp = sol.potentials;
    zp.z0 = Eigen::VectorXd::Constant(n0, kInf);
    zp.z1 = Eigen::VectorXd::Constant(n1, kInf);
    for (Eigen::Index j = 0; j < n1; ++j) {
        double best = kInf;
        for (std::size_t a = 0; a < m0; ++a) {
            const double c = C(static_cast<Eigen::Index>(P0[a]), j);
            if (std::isinf(c) || std::isinf(f[a])) continue;
            best = std::min(best, c - f[a]);
        }
        zp.z1[j] = best;
    }
    for (Eigen::Index i = 0; i < n0; ++i) {
        double best = kInf;
        for (Eigen::Index j = 0; j < n1; ++j)
            if (!std::isinf(C(i, j))) best = std::min(best, C(i, j) - zp.z1[j]);
        zp.z0[i] = best;
    }
    sol.scaling_potentials = zp;
    for (std::size_t a = 0; a < m0; ++a) sol.scaling_potentials.z0[static_cast<Eigen::Index>(P0[a])] = f[a];
    for (std::size_t b = 0; b < m1; ++b) sol.scaling_potentials.z1[static_cast<Eigen::Index>(P1[b])] = g[b];

    sol.iterations = it;
    sol.epsilon_final = eps;
    sol.converged = converged;
    sol.primal_value = primal_objective(sol.plan, rho0, rho1, F0, F1, C);
    sol.dual_value = dual_objective(zp, rho0, rho1, F0, F1, C, std::max(options.feas_tol, 1e-12));
    sol.gap = sol.primal_value - sol.dual_value;
    if (std::isnan(sol.primal_value) || std::isnan(sol.dual_value))
        fail(ErrorKind::Numerical, "solve_entropic: NaN objective");
    return sol;
}

Solution solve_entropic(const DiscreteMeasure& rho0, const DiscreteMeasure& rho1, const CostMatrix& C,
                        const EntropyFunction& F0, const EntropyFunction& F1, const SolveOptions& options)
{
    return solve_entropic(std::span<const double>(rho0.masses), std::span<const double>(rho1.masses), C, F0, F1,
                          options);
}

OracleResult convex_oracle(std::span<const double> rho0, std::span<const double> rho1, const CostMatrix& C,
                           const EntropyFunction& F0, const EntropyFunction& F1, int max_iters)
{
    const Eigen::Index n0 = C.rows(), n1 = C.cols();
    if (static_cast<std::size_t>(n0 * n1) > kOracleMaxEntries)
        fail(ErrorKind::InvalidInput, "convex_oracle: instance larger than 16 entries");
    if (static_cast<Eigen::Index>(rho0.size()) != n0 || static_cast<Eigen::Index>(rho1.size()) != n1)
        fail(ErrorKind::InvalidInput, "convex_oracle: shape mismatch");
    if (!F0.smooth() || !F1.smooth()) fail(ErrorKind::InvalidInput, "convex_oracle: needs twice differentiable entropies");
    check_masses(rho0, "rho0");
    check_masses(rho1, "rho1");

    // Free variables: finite-cost entries between positive-mass points.
    struct Var {
        Eigen::Index i, j;
        double c;
    };
    std::vector<Var> vars;
    for (Eigen::Index i = 0; i < n0; ++i)
        for (Eigen::Index j = 0; j < n1; ++j)
            if (!std::isinf(C(i, j)) && rho0[static_cast<std::size_t>(i)] > 0.0 && rho1[static_cast<std::size_t>(j)] > 0.0)
                vars.push_back({i, j, C(i, j)});
    const std::size_t nv = vars.size();

    auto to_plan = [&](const Eigen::VectorXd& x) {
        Plan p = Plan::Zero(n0, n1);
        for (std::size_t k = 0; k < nv; ++k) p(vars[k].i, vars[k].j) = x[static_cast<Eigen::Index>(k)];
        return p;
    };
    auto objective = [&](const Eigen::VectorXd& x) { return primal_objective(to_plan(x), rho0, rho1, F0, F1, C); };
    auto marginals = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::VectorXd& s) {
        r = Eigen::VectorXd::Zero(n0);
        s = Eigen::VectorXd::Zero(n1);
        for (std::size_t k = 0; k < nv; ++k) {
            r[vars[k].i] += x[static_cast<Eigen::Index>(k)];
            s[vars[k].j] += x[static_cast<Eigen::Index>(k)];
        }
    };

    OracleResult res;
    if (nv == 0) {
        res.plan = Plan::Zero(n0, n1);
        res.value = primal_objective(res.plan, rho0, rho1, F0, F1, C);
        return res;
    }

    Eigen::VectorXd x(static_cast<Eigen::Index>(nv));
    for (std::size_t k = 0; k < nv; ++k) {
        const double a = rho0[static_cast<std::size_t>(vars[k].i)];
        const double b = rho1[static_cast<std::size_t>(vars[k].j)];
        x[static_cast<Eigen::Index>(k)] = std::sqrt(a * b) * std::exp(-0.5 * vars[k].c) / static_cast<double>(nv);
    }

    Eigen::VectorXd r, s, grad(static_cast<Eigen::Index>(nv));
    // With infinite entropy slope at zero no optimal marginal vanishes; steps
    // that empty a row or column would make the gradient -inf, so they are refused.
    const bool keep_marginals = F0.slope_at_zero_infinite && F1.slope_at_zero_infinite;
    auto admissible_step = [&](const Eigen::VectorXd& y) {
        if (!keep_marginals) return true;
        Eigen::VectorXd ry, sy;
        marginals(y, ry, sy);
        for (const Var& v : vars)
            if (!(ry[v.i] > 0.0) || !(sy[v.j] > 0.0)) return false;
        return true;
    };
    double fx = objective(x);
    int it = 0;
    double stat = kInf;
    for (; it < max_iters; ++it) {
        marginals(x, r, s);
        for (std::size_t k = 0; k < nv; ++k) {
            const double a = rho0[static_cast<std::size_t>(vars[k].i)];
            const double b = rho1[static_cast<std::size_t>(vars[k].j)];
            grad[static_cast<Eigen::Index>(k)] = F0.F_prime(r[vars[k].i] / a) + F1.F_prime(s[vars[k].j] / b) + vars[k].c;
        }
        stat = 0.0;
        for (std::size_t k = 0; k < nv; ++k) {
            const double gk = grad[static_cast<Eigen::Index>(k)];
            const double pg = x[static_cast<Eigen::Index>(k)] > 0.0 ? gk : std::min(gk, 0.0);
            stat = std::max(stat, std::abs(pg));
        }
        if (stat < 1e-13) break;

        // Bertsekas-style projected Newton: entries at (or numerically at) the
        // bound with a positive gradient are held at zero.
        const Eigen::VectorXd proj_step = (x - grad).cwiseMax(0.0);
        const double bound_tol = std::min(1e-12, (x - proj_step).norm());
        std::vector<std::size_t> free;
        std::vector<bool> active(nv, false);
        for (std::size_t k = 0; k < nv; ++k) {
            if (x[static_cast<Eigen::Index>(k)] <= bound_tol && grad[static_cast<Eigen::Index>(k)] > 0.0)
                active[k] = true;
            else
                free.push_back(k);
        }
        Eigen::VectorXd dir = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nv));
        if (!free.empty()) {
            const Eigen::Index nf = static_cast<Eigen::Index>(free.size());
            Eigen::MatrixXd H(nf, nf);
            Eigen::VectorXd gf(nf);
            double diag_max = 0.0;
            for (Eigen::Index p = 0; p < nf; ++p) {
                const Var& vp = vars[free[static_cast<std::size_t>(p)]];
                gf[p] = grad[static_cast<Eigen::Index>(free[static_cast<std::size_t>(p)])];
                for (Eigen::Index q = 0; q < nf; ++q) {
                    const Var& vq = vars[free[static_cast<std::size_t>(q)]];
                    double h = 0.0;
                    if (vp.i == vq.i) {
                        const double a = rho0[static_cast<std::size_t>(vp.i)];
                        h += F0.F_second(r[vp.i] / a) / a;
                    }
                    if (vp.j == vq.j) {
                        const double b = rho1[static_cast<std::size_t>(vp.j)];
                        h += F1.F_second(s[vp.j] / b) / b;
                    }
                    H(p, q) = h;
                }
                diag_max = std::max(diag_max, H(p, p));
            }
            H.diagonal().array() += 1e-10 * std::max(diag_max, 1.0);
            const Eigen::VectorXd df = -H.ldlt().solve(gf);
            for (Eigen::Index p = 0; p < nf; ++p) dir[static_cast<Eigen::Index>(free[static_cast<std::size_t>(p)])] = df[p];
        }
        for (std::size_t k = 0; k < nv; ++k)
            if (active[k]) dir[static_cast<Eigen::Index>(k)] = -grad[static_cast<Eigen::Index>(k)];

        // Armijo backtracking along the projection arc.
        double alpha = 1.0;
        bool accepted = false;
        Eigen::VectorXd xn;
        double fn = fx;
        for (int ls = 0; ls < 80; ++ls, alpha *= 0.5) {
            xn = (x + alpha * dir).cwiseMax(0.0);
            fn = objective(xn);
            double decrease = 0.0;
            for (std::size_t k = 0; k < nv; ++k) {
                const Eigen::Index kk = static_cast<Eigen::Index>(k);
                decrease += grad[kk] * (x[kk] - xn[kk]);
            }
            if (std::isfinite(fn) && fn <= fx - 1e-4 * decrease && fn <= fx && admissible_step(xn)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // Fall back to a plain projected gradient step.
            alpha = 1.0;
            for (int ls = 0; ls < 80; ++ls, alpha *= 0.5) {
                xn = (x - alpha * grad).cwiseMax(0.0);
                fn = objective(xn);
                if (std::isfinite(fn) && fn < fx && admissible_step(xn)) {
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted) break; // no descent possible at double precision
        x = xn;
        fx = fn;
    }
    res.plan = to_plan(x);
    res.value = fx;
    res.stationarity = stat;
    res.iterations = it;
    return res;
}

double wfr_two_diracs(double a, double b, double distance) { return lift_masses(a, b, distance); }

double wfr_two_diracs(const Space& space, double a, const Point& x, double b, const Point& y)
{
    return lift_masses(space, x, a, y, b);
}

Admissibility admissibility(std::span<const double> rho0, std::span<const double> rho1, const CostMatrix& C)
{
    const auto P0 = positive_indices(rho0);
    const auto P1 = positive_indices(rho1);
    if (P0.empty() || P1.empty()) fail(ErrorKind::InvalidInput, "admissibility: empty support");
    double cH = -kInf;
    for (std::size_t i : P0) {
        double best = kInf;
        for (std::size_t j : P1) best = std::min(best, C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        cH = std::max(cH, best);
    }
    for (std::size_t j : P1) {
        double best = kInf;
        for (std::size_t i : P0) best = std::min(best, C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        cH = std::max(cH, best);
    }
    return {cH, std::isfinite(cH)};
}

LinearizationReport linearized_marginals(const PotentialPair& zp, std::span<const double> rho0,
                                         std::span<const double> rho1, const EntropyFunction& F0,
                                         const EntropyFunction& F1, const CostMatrix* C, const Plan* plan,
                                         double mass_threshold)
{
    LinearizationReport rep;
    rep.rho0_tilde = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rho0.size()));
    rep.rho1_tilde = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rho1.size()));
    for (std::size_t i = 0; i < rho0.size(); ++i)
        if (rho0[i] > 0.0) rep.rho0_tilde[static_cast<Eigen::Index>(i)] = F0.F_star_prime(-zp.z0[static_cast<Eigen::Index>(i)]) * rho0[i];
    for (std::size_t j = 0; j < rho1.size(); ++j)
        if (rho1[j] > 0.0) rep.rho1_tilde[static_cast<Eigen::Index>(j)] = F1.F_star_prime(-zp.z1[static_cast<Eigen::Index>(j)]) * rho1[j];
    rep.mass0 = rep.rho0_tilde.sum();
    rep.mass1 = rep.rho1_tilde.sum();
    rep.mass_difference = rep.mass0 - rep.mass1;
    const double denom = rep.mass0 + rep.mass1;
    rep.relative_mass_difference = denom > 0.0 ? std::abs(rep.mass_difference) / denom : 0.0;
    if (C && plan) {
        const double total = plan->sum();
        double worst = 0.0;
        for (Eigen::Index i = 0; i < plan->rows(); ++i)
            for (Eigen::Index j = 0; j < plan->cols(); ++j) {
                if (total <= 0.0 || (*plan)(i, j) < mass_threshold * total) continue;
                worst = std::max(worst, std::abs((*C)(i, j) - zp.z0[i] - zp.z1[j]));
            }
        rep.slackness = worst;
    }
    return rep;
}

Eigen::MatrixXd distance_matrix(const Space& space, std::span<const Point> supp0, std::span<const Point> supp1)
{
    Eigen::MatrixXd D(static_cast<Eigen::Index>(supp0.size()), static_cast<Eigen::Index>(supp1.size()));
    for (std::size_t i = 0; i < supp0.size(); ++i)
        for (std::size_t j = 0; j < supp1.size(); ++j)
            D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = geodesic_distance(space, supp0[i], supp1[j]);
    return D;
}

double semicoupling_value(const SemiCoupling& sc, const Eigen::MatrixXd& distances)
{
    if (sc.gamma0.rows() != distances.rows() || sc.gamma0.cols() != distances.cols() ||
        sc.gamma1.rows() != distances.rows() || sc.gamma1.cols() != distances.cols())
        fail(ErrorKind::InvalidInput, "semicoupling_value: shape mismatch");
    double total = 0.0;
    for (Eigen::Index i = 0; i < distances.rows(); ++i)
        for (Eigen::Index j = 0; j < distances.cols(); ++j)
            total += lift_masses(sc.gamma0(i, j), sc.gamma1(i, j), distances(i, j));
    return total;
}

SemiCouplingResult solve_semicoupling_small(const DiscreteMeasure& rho0, const DiscreteMeasure& rho1, int max_iters)
{
    if (!(rho0.space == rho1.space)) fail(ErrorKind::InvalidInput, "solve_semicoupling_small: spaces differ");
    const std::size_t n0 = rho0.size(), n1 = rho1.size();
    if (n0 > kSemiCouplingMaxPoints || n1 > kSemiCouplingMaxPoints)
        fail(ErrorKind::InvalidInput, "solve_semicoupling_small: supports limited to 3 points");
    const Eigen::Index r0 = static_cast<Eigen::Index>(n0), r1 = static_cast<Eigen::Index>(n1);
    const Eigen::MatrixXd D = distance_matrix(rho0.space, rho0.points, rho1.points);
    Eigen::MatrixXd cosd(r0, r1);
    for (Eigen::Index i = 0; i < r0; ++i)
        for (Eigen::Index j = 0; j < r1; ++j) cosd(i, j) = std::cos(std::min(D(i, j), std::numbers::pi / 2.0));

    // With gamma0 = p^2 and gamma1 = q^2 the objective is
    //   |rho0| + |rho1| - 2 sum_ij cos(d_ij) p_ij q_ij,
    // and each row of p (column of q) lies on a sphere of radius sqrt(rho).
    // Exact block minimization alternates closed-form row / column updates.
    Eigen::MatrixXd p(r0, r1), q(r0, r1);
    for (Eigen::Index i = 0; i < r0; ++i)
        for (Eigen::Index j = 0; j < r1; ++j) {
            p(i, j) = std::sqrt(rho0.masses[static_cast<std::size_t>(i)] / static_cast<double>(n1));
            q(i, j) = std::sqrt(rho1.masses[static_cast<std::size_t>(j)] / static_cast<double>(n0));
        }
    auto update_rows = [&](Eigen::MatrixXd& target, const Eigen::MatrixXd& other) {
        for (Eigen::Index i = 0; i < r0; ++i) {
            const double m = rho0.masses[static_cast<std::size_t>(i)];
            Eigen::VectorXd w = cosd.row(i).cwiseProduct(other.row(i)).transpose();
            const double wn = w.norm();
            if (m == 0.0) target.row(i).setZero();
            else if (wn > 0.0) target.row(i) = (std::sqrt(m) / wn) * w.transpose();
        }
    };
    auto update_cols = [&](Eigen::MatrixXd& target, const Eigen::MatrixXd& other) {
        for (Eigen::Index j = 0; j < r1; ++j) {
            const double m = rho1.masses[static_cast<std::size_t>(j)];
            Eigen::VectorXd w = cosd.col(j).cwiseProduct(other.col(j));
            const double wn = w.norm();
            if (m == 0.0) target.col(j).setZero();
            else if (wn > 0.0) target.col(j) = (std::sqrt(m) / wn) * w;
        }
    };
    // Stationarity in the (gamma0, gamma1) variables: on each column of gamma1
    // the partial derivatives 1 - cos(d) sqrt(gamma0 / gamma1) must agree on
    // the support (rows of gamma0 hold this exactly after a row update).
    auto stationarity = [&]() {
        double worst = 0.0;
        for (Eigen::Index j = 0; j < r1; ++j) {
            double lo = kInf, hi = -kInf;
            for (Eigen::Index i = 0; i < r0; ++i) {
                if (q(i, j) <= 0.0) continue;
                const double gdir = 1.0 - cosd(i, j) * p(i, j) / q(i, j);
                lo = std::min(lo, gdir);
                hi = std::max(hi, gdir);
            }
            if (hi >= lo) worst = std::max(worst, hi - lo);
        }
        return worst;
    };

    SemiCouplingResult res;
    int it = 0;
    double stat = kInf;
    for (; it < max_iters; ++it) {
        update_rows(p, q);
        stat = stationarity();
        if (stat < 1e-12) break;
        update_cols(q, p);
    }
    res.coupling.gamma0 = p.cwiseProduct(p);
    res.coupling.gamma1 = q.cwiseProduct(q);
    res.value = semicoupling_value(res.coupling, D);
    res.stationarity = stat;
    res.iterations = it;
    return res;
}

} // namespace uot
