// uot: command-line front end. Every command is driven by a resolved config
// object; the same object is embedded in the report, so `uot rerun report.json`
// reproduces a run exactly.

#include "io.hpp"

#include "uot/cone.hpp"
#include "uot/errors.hpp"
#include "uot/monge.hpp"
#include "uot/mtw.hpp"
#include "uot/polar.hpp"
#include "uot/solver.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

using namespace uot;
using io::json;

namespace {

unsigned worker_count()
{
    if (const char* env = std::getenv("UOT_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs job(k) for k in [0, n) on up to UOT_THREADS workers. Jobs write to their
// own slots, so results do not depend on scheduling.
template <class Job>
void parallel_for(std::size_t n, Job job)
{
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), n));
    if (workers <= 1) {
        for (std::size_t k = 0; k < n; ++k) job(k);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t k = w; k < n; k += workers) job(k);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string timestamp()
{
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

json coefficients_json(const MtwCoefficients& c)
{
    return {{"s", io::number(c.s)}, {"alpha", c.alpha}, {"beta", c.beta}, {"gamma", c.gamma}, {"delta", c.delta}};
}

SolveOptions solve_options(const json& cfg)
{
    SolveOptions o;
    o.schedule.eps_start = cfg.value("eps_start", o.schedule.eps_start);
    o.schedule.eps_final = cfg.value("eps_final", o.schedule.eps_final);
    o.schedule.decay = cfg.value("decay", o.schedule.decay);
    o.schedule.inner_iters = cfg.value("inner_iters", o.schedule.inner_iters);
    o.max_iter = cfg.value("max_iter", o.max_iter);
    o.tol = cfg.value("tol", o.tol);
    return o;
}

CostSpec cost_spec(const json& cfg)
{
    const std::string kind = cfg.value("cost", "wfr");
    if (kind == "quadratic") return CostSpec::quadratic();
    if (kind == "wfr") return CostSpec::wfr(cfg.value("delta", 1.0));
    fail(ErrorKind::InvalidInput, "unknown cost '" + kind + "' (expected wfr or quadratic)");
}

RadialCost radial_cost(const json& cfg, double radius)
{
    const std::string space = cfg.value("space", "sphere");
    const std::string cost = cfg.value("cost", "wfr");
    const double diameter = cfg.contains("diameter") ? io::to_number(cfg["diameter"]) : RadialCost::kInfinity;
    if (cost == "quadratic") {
        if (space != "euclidean") fail(ErrorKind::InvalidInput, "the quadratic radial cost is only set up on euclidean space");
        return RadialCost::euclidean_quadratic(diameter);
    }
    if (cost != "wfr") fail(ErrorKind::InvalidInput, "unknown cost '" + cost + "'");
    if (space == "sphere") return RadialCost::sphere_wfr(radius);
    if (space == "euclidean") return RadialCost::euclidean_wfr(diameter);
    if (space == "hyperbolic") return RadialCost::hyperbolic_wfr(diameter);
    fail(ErrorKind::InvalidInput, "unknown space '" + space + "'");
}

// ---- solve --------------------------------------------------------------

json run_solve(const json& cfg)
{
    const DiscreteMeasure rho0 = io::measure_from_json(io::load_json(cfg.at("rho0")));
    const DiscreteMeasure rho1 = io::measure_from_json(io::load_json(cfg.at("rho1")));
    const CostMatrix C = cost_matrix(cost_spec(cfg), rho0, rho1);
    const EntropyFunction F0 = make_entropy(cfg.value("entropy", "kl"));
    const EntropyFunction F1 = F0;
    const Solution sol = solve_entropic(rho0, rho1, C, F0, F1, solve_options(cfg));

    json r;
    r["value"] = io::number(sol.primal_value);
    r["dual_value"] = io::number(sol.dual_value);
    r["gap"] = io::number(sol.gap);
    r["iterations"] = sol.iterations;
    r["converged"] = sol.converged;
    r["epsilon_final"] = sol.epsilon_final;
    r["z0"] = io::numbers(sol.potentials.z0);
    r["z1"] = io::numbers(sol.potentials.z1);
    json s0 = json::array(), s1 = json::array();
    for (const Point& p : rho0.points) s0.push_back(io::numbers(Eigen::VectorXd(p)));
    for (const Point& p : rho1.points) s1.push_back(io::numbers(Eigen::VectorXd(p)));
    r["support0"] = s0;
    r["support1"] = s1;

    const double threshold = cfg.value("plan_threshold", 1e-12);
    json nnz = json::array();
    for (Eigen::Index i = 0; i < sol.plan.rows(); ++i)
        for (Eigen::Index j = 0; j < sol.plan.cols(); ++j)
            if (sol.plan(i, j) > threshold) nnz.push_back({i, j, sol.plan(i, j)});
    r["plan_nnz"] = nnz;

    const LinearizationReport lin =
        linearized_marginals(sol.potentials, rho0.masses, rho1.masses, F0, F1, &C, &sol.plan);
    r["marginal_masses"] = {{"rho0", rho0.total_mass()},
                            {"rho1", rho1.total_mass()},
                            {"plan0", row_marginal(sol.plan).sum()},
                            {"plan1", column_marginal(sol.plan).sum()},
                            {"linearized0", io::number(lin.mass0)},
                            {"linearized1", io::number(lin.mass1)},
                            {"linearized_relative_difference", io::number(lin.relative_mass_difference)}};
    if (lin.slackness) r["slackness"] = io::number(*lin.slackness);
    if (F0.name == "kl") {
        double v = 0.0;
        for (std::size_t i = 0; i < rho0.size(); ++i)
            if (rho0.masses[i] > 0) v += (1.0 - std::exp(-sol.potentials.z0[static_cast<Eigen::Index>(i)])) * rho0.masses[i];
        for (std::size_t j = 0; j < rho1.size(); ++j)
            if (rho1.masses[j] > 0) v += (1.0 - std::exp(-sol.potentials.z1[static_cast<Eigen::Index>(j)])) * rho1.masses[j];
        r["optimal_value_identity"] = io::number(v);
    }
    const Admissibility adm = admissibility(rho0.masses, rho1.masses, C);
    r["c_H"] = io::number(adm.c_H);
    r["admissible"] = adm.admissible;
    return r;
}

// ---- monge --------------------------------------------------------------

// Potential from a grid field, scattered {"points","values"}, or a solve report.
std::vector<double> load_potential(const json& j, const Grid1D& grid)
{
    if (j.contains("schema")) {
        io::require_valid(io::validate_report(j), "potential report");
        if (j["command"] != "solve" || !j.contains("z0") || !j.contains("support0"))
            fail(ErrorKind::Schema, "potential report must come from 'uot solve'");
        std::vector<double> coords, values;
        for (std::size_t k = 0; k < j["z0"].size(); ++k) {
            const double z = io::to_number(j["z0"][k]);
            if (!std::isfinite(z)) continue;
            coords.push_back(j["support0"][k][0].get<double>());
            values.push_back(z);
        }
        return resample_to_grid(grid, coords, values);
    }
    if (j.contains("grid")) {
        const GridDensity z = io::grid_density_from_json(j);
        if (!(z.grid == grid)) fail(ErrorKind::Schema, "potential grid does not match rho0 grid");
        return z.values;
    }
    if (j.contains("points") && j.contains("values")) {
        std::vector<double> coords, values;
        for (const json& p : j["points"]) coords.push_back(p.is_array() ? p[0].get<double>() : p.get<double>());
        for (const json& v : j["values"]) values.push_back(io::to_number(v));
        return resample_to_grid(grid, coords, values);
    }
    fail(ErrorKind::Schema, "potential must be a grid field, {points, values}, or a solve report");
}

json run_monge(const json& cfg)
{
    const GridDensity f = io::grid_density_from_json(io::load_json(cfg.at("rho0")));
    const Grid1D& grid = f.grid;
    std::optional<GridDensity> g;
    if (cfg.contains("rho1")) {
        g = io::grid_density_from_json(io::load_json(cfg["rho1"]));
        if (!(g->grid == grid)) fail(ErrorKind::Schema, "rho0 and rho1 grids differ");
    }
    json r;
    r["grid"] = io::to_json(grid);
    std::vector<double> z;
    if (cfg.contains("potential")) {
        z = load_potential(io::load_json(cfg["potential"]), grid);
    } else {
        if (!g) fail(ErrorKind::InvalidInput, "monge needs --potential or --rho1 to solve for one");
        SolveOptions o = grid_solve_options(grid);
        if (cfg.contains("eps_final")) o.schedule.eps_final = cfg["eps_final"];
        const GridSolution gs = solve_on_grid(f, *g, o, cfg.value("debias", false));
        z = gs.z0;
        r["solver"] = {{"value", io::number(gs.solution.primal_value)},
                       {"dual_value", io::number(gs.solution.dual_value)},
                       {"gap", io::number(gs.solution.gap)},
                       {"iterations", gs.solution.iterations},
                       {"converged", gs.solution.converged},
                       {"epsilon_final", gs.solution.epsilon_final},
                       {"debiased", gs.debiased}};
    }
    const TransportCouple tc = monge_couple_from_potential(grid, z);
    const GridDensity push = pushforward_density(tc, f);
    double expected = 0.0;
    for (std::size_t i = 0; i < grid.n; ++i) expected += tc.lam[i] * tc.lam[i] * f.values[i] * grid.spacing;
    r["monge_objective"] = monge_objective(tc, f);
    r["pushforward_mass"] = push.mass();
    r["transported_mass"] = expected;
    if (g) r["pushforward_tv"] = tv_distance(push, *g);
    if (cfg.value("check_ma", false)) {
        if (!g) fail(ErrorKind::InvalidInput, "--check-ma needs --rho1");
        const MaResidual ma = ma_residual(z, f, *g);
        r["ma_residual"] = {{"max_abs", ma.max_abs}, {"mean_abs", ma.mean_abs}, {"near_singular", ma.near_singular.size()}};
    }
    r["z"] = io::numbers(z);
    r["couple"] = io::to_json(tc);
    return r;
}

// ---- polar --------------------------------------------------------------

json run_polar(const json& cfg)
{
    const json doc = io::load_json(cfg.at("map"));
    std::optional<Grid1D> declared;
    if (cfg.contains("grid")) declared = Grid1D::circle(cfg["grid"].get<std::size_t>());
    const GeneralizedAutomorphism g = io::map_from_json(doc, declared ? &*declared : nullptr);
    SolveOptions o = grid_solve_options(g.grid);
    if (cfg.contains("eps_final")) o.schedule.eps_final = cfg["eps_final"];
    const PolarFactorization pf = polar_factorize(g, o, cfg.value("debias", true));
    const PolarDiagnostics& d = pf.diagnostics;

    json r;
    r["grid"] = io::to_json(g.grid);
    r["diagnostics"] = {{"reconstruction_tv", d.reconstruction_tv},
                        {"reconstruction_phi_max", d.reconstruction_phi},
                        {"reconstruction_lam_max", d.reconstruction_lam},
                        {"stabilizer_tv", d.stabilizer_tv},
                        {"projection_distance", d.projection_distance},
                        {"monge_objective", d.monge_value},
                        {"wfr2_primal", d.wfr2_primal},
                        {"wfr2_dual", d.wfr2_dual},
                        {"tolerance", d.tolerance},
                        {"reconstruction_ok", d.reconstruction_ok},
                        {"stabilizer_ok", d.stabilizer_ok},
                        {"iterations", d.iterations},
                        {"converged", d.converged}};
    json warnings = json::array();
    const double mean = pf.rho1.mass() / (static_cast<double>(g.grid.n) * g.grid.spacing);
    const double peak = *std::max_element(pf.rho1.values.begin(), pf.rho1.values.end());
    if (peak > 20.0 * mean)
        warnings.push_back("act(g, vol) is close to atomic (peak density " + std::to_string(peak / mean) +
                           "x the mean); uniqueness of the factorization may be lost");
    r["warnings"] = warnings;
    r["z0"] = io::numbers(pf.z0);
    r["z1"] = io::numbers(pf.z1);
    r["monge_part"] = io::to_json(pf.monge_part);
    r["stabilizer_part"] = io::to_json(pf.stabilizer_part);
    return r;
}

// ---- mtw ----------------------------------------------------------------

json run_mtw(const json& cfg)
{
    const double radius = cfg.value("radius", 1.0);
    const RadialCost cost = radial_cost(cfg, radius);
    const int samples = cfg.value("samples", 200);
    const double s_bound = cfg.value("s_max", 10.0);
    const MtwCheck ck = mtw_condition_check(cost, samples, s_bound);

    json r;
    r["cost"] = cost.describe();
    r["s_max"] = ck.s_max;
    r["weak"] = ck.weak;
    r["strong"] = ck.strong;
    r["limit"] = coefficients_json(ck.samples.front());
    r["limit_richardson"] = coefficients_json(mtw_limit_richardson(cost));
    json smp = json::array();
    for (const auto& c : ck.samples) smp.push_back(coefficients_json(c));
    r["samples"] = smp;
    json viol = json::array();
    for (const auto& v : ck.violations) viol.push_back({{"s", v.s}, {"inequality", v.inequality}, {"value", v.value}});
    r["violations"] = viol;

    if (cfg.contains("radii")) {
        const std::vector<double> radii = cfg["radii"];
        std::vector<MtwCheck> sweep(radii.size());
        parallel_for(radii.size(), [&](std::size_t k) {
            sweep[k] = mtw_condition_check(radial_cost(cfg, radii[k]), samples, s_bound);
        });
        json sw = json::array();
        for (std::size_t k = 0; k < radii.size(); ++k)
            sw.push_back({{"radius", radii[k]}, {"weak", sweep[k].weak}, {"strong", sweep[k].strong},
                          {"beta0", sweep[k].samples.front().beta}});
        r["sweep"] = sw;
    }
    if (cfg.contains("csv")) {
        std::ostringstream os;
        os.precision(17);
        os << "s,alpha,beta,gamma,delta\n";
        for (const auto& c : ck.samples) os << c.s << ',' << c.alpha << ',' << c.beta << ',' << c.gamma << ',' << c.delta << '\n';
        io::write_text(cfg["csv"], os.str());
    }
    return r;
}

struct FdTrial {
    Point x;
    Tangent u, v, w;
    double fd = 0.0, decomposition = 0.0, mixed = 0.0;
};

// Random point and tangent vectors on the model space of the cost.
FdTrial random_trial(const RadialCost& cost, int dim, std::mt19937_64& rng, double v_lo, double v_hi)
{
    std::normal_distribution<double> N;
    std::uniform_real_distribution<double> U(v_lo, v_hi);
    const Space space = mtw_space(cost, dim);
    const int amb = space.ambient_dim();
    auto gauss = [&](int k) {
        Eigen::VectorXd g(k);
        for (int i = 0; i < k; ++i) g[i] = N(rng);
        return g;
    };
    FdTrial t;
    if (cost.space == SpaceKind::Sphere) {
        t.x = gauss(amb).normalized();
    } else if (cost.space == SpaceKind::Hyperbolic) {
        const Eigen::VectorXd dir = gauss(dim).normalized();
        const double r = 0.5 * std::abs(N(rng));
        t.x = Eigen::VectorXd(amb);
        t.x[0] = std::cosh(r);
        t.x.tail(dim) = std::sinh(r) * dir;
    } else {
        t.x = gauss(amb);
    }
    auto tangent = [&] { return Tangent(project_tangent(space, t.x, gauss(amb))); };
    t.u = tangent();
    t.v = tangent();
    t.v *= U(rng) / norm(space, t.x, t.v);
    t.w = tangent();
    return t;
}

json run_mtw_fd(const json& cfg)
{
    const double radius = cfg.value("radius", 1.0);
    const RadialCost cost = radial_cost(cfg, radius);
    const int trials = cfg.value("trials", 20);
    const int dim = cfg.value("dim", 2);
    const std::uint64_t seed = cfg.value("seed", std::uint64_t{0});
    const double v_lo = cfg.value("v_min", 0.3), v_hi = cfg.value("v_max", 1.8);
    if (trials < 1) fail(ErrorKind::InvalidInput, "mtw-fd needs at least one trial");

    std::mt19937_64 rng(seed);
    std::vector<FdTrial> table;
    for (int k = 0; k < trials; ++k) table.push_back(random_trial(cost, dim, rng, v_lo, v_hi));
    parallel_for(table.size(), [&](std::size_t k) {
        FdTrial& t = table[k];
        t.w = j_orthogonalize(cost, t.x, t.v, t.u, t.w);
        t.mixed = mtw_mixed_derivative(cost, t.x, t.u, t.v, t.w);
        t.fd = mtw_fd_tensor(cost, t.x, t.u, t.v, t.w);
        t.decomposition = mtw_decomposition(cost, t.x, t.u, t.v, t.w);
    });

    json r;
    r["cost"] = cost.describe();
    double max_abs = 0.0, max_rel = 0.0;
    json rows = json::array();
    for (const FdTrial& t : table) {
        const double abs_err = std::abs(t.fd - t.decomposition);
        const double rel_err = std::abs(t.decomposition) > 1e-8 ? abs_err / std::abs(t.decomposition) : 0.0;
        max_abs = std::max(max_abs, abs_err);
        max_rel = std::max(max_rel, rel_err);
        rows.push_back({{"s", norm(mtw_space(cost, dim), t.x, t.v)},
                        {"fd", t.fd},
                        {"decomposition", t.decomposition},
                        {"abs_error", abs_err},
                        {"rel_error", rel_err},
                        {"mixed_after_orthogonalization", t.mixed}});
    }
    r["table"] = rows;
    r["max_abs_error"] = max_abs;
    r["max_rel_error"] = max_rel;
    if (cfg.contains("csv")) {
        std::ostringstream os;
        os.precision(17);
        os << "trial,s,fd,decomposition,abs_error,rel_error\n";
        for (std::size_t k = 0; k < rows.size(); ++k)
            os << k << ',' << rows[k]["s"].get<double>() << ',' << rows[k]["fd"].get<double>() << ','
               << rows[k]["decomposition"].get<double>() << ',' << rows[k]["abs_error"].get<double>() << ','
               << rows[k]["rel_error"].get<double>() << '\n';
        io::write_text(cfg["csv"], os.str());
    }
    return r;
}

// ---- small closed-form commands ----------------------------------------

json run_conedist(const json& cfg)
{
    const Space space = io::space_from_json(io::load_json(cfg.at("space")));
    const ConePoint p = io::cone_point_from_json(io::load_json(cfg.at("p")));
    const ConePoint q = io::cone_point_from_json(io::load_json(cfg.at("q")));
    const ConeDistance d = cone_distance(space, p, q);
    return {{"distance", d.distance}, {"squared", d.squared}, {"p_apex", p.is_apex()}, {"q_apex", q.is_apex()}};
}

json run_twodirac(const json& cfg)
{
    const double a = cfg.at("a"), b = cfg.at("b"), d = cfg.at("d");
    if (!(a >= 0.0) || !(b >= 0.0) || !(d >= 0.0)) fail(ErrorKind::InvalidInput, "twodirac needs a, b, d >= 0");
    json r;
    r["value"] = wfr_two_diracs(a, b, d);
    const double c = CostSpec::wfr()(d);
    r["cost"] = io::number(c);
    r["optimal_plan_mass"] = std::isinf(c) ? 0.0 : std::sqrt(a * b) * std::exp(-0.5 * c);
    if (cfg.value("solve", false)) {
        CostMatrix C(1, 1);
        C(0, 0) = c;
        const std::vector<double> r0{a}, r1{b};
        const EntropyFunction kl = make_kl_entropy();
        const Solution sol = solve_entropic(r0, r1, C, kl, kl, solve_options(cfg));
        r["entropic"] = {{"value", io::number(sol.primal_value)},
                         {"dual_value", io::number(sol.dual_value)},
                         {"plan_mass", sol.plan(0, 0)},
                         {"iterations", sol.iterations},
                         {"converged", sol.converged}};
    }
    return r;
}

json run_command(const json& cfg)
{
    const std::string cmd = cfg.at("command");
    if (cmd == "solve") return run_solve(cfg);
    if (cmd == "monge") return run_monge(cfg);
    if (cmd == "polar") return run_polar(cfg);
    if (cmd == "mtw") return run_mtw(cfg);
    if (cmd == "mtw-fd") return run_mtw_fd(cfg);
    if (cmd == "conedist") return run_conedist(cfg);
    if (cmd == "twodirac") return run_twodirac(cfg);
    fail(ErrorKind::Schema, "unknown command '" + cmd + "'");
}

void emit(const json& cfg, const json& doc)
{
    if (cfg.contains("out")) io::write_json(cfg["out"], doc);
    else std::cout << doc.dump(2) << '\n';
}

int report(const json& cfg, bool stamp)
{
    json doc;
    doc["schema"] = io::kSchemaVersion;
    doc["command"] = cfg.at("command");
    if (stamp) doc["created"] = timestamp();
    json results = run_command(cfg);
    doc["config"] = cfg;
    for (auto& [k, v] : results.items()) doc[k] = v;
    emit(cfg, doc);
    return 0;
}

int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Admissibility:
    case ErrorKind::Feasibility: return 2;
    default: return 1;
    }
}

json error_json(const json& cfg, const Error& e)
{
    json err{{"kind", to_string(e.kind())}, {"message", e.what()}};
    if (const auto* fe = dynamic_cast<const FeasibilityError*>(&e)) err["max_violation"] = io::number(fe->max_violation());
    if (const auto* se = dynamic_cast<const SingularityError*>(&e)) err["node"] = se->node();
    json doc;
    doc["schema"] = io::kSchemaVersion;
    doc["command"] = cfg.is_object() ? cfg.value("command", "") : "";
    doc["config"] = cfg.is_object() ? cfg : json::object();
    doc["error"] = err;
    return doc;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Unbalanced optimal transport (WFR) toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    bool no_timestamp = false;
    app.add_flag("--no-timestamp", no_timestamp, "Omit the creation time from reports");

    json cfg;
    std::string out;

    // Shared option sets -------------------------------------------------
    struct Schedule {
        double eps_start = 1.0, eps_final = 1e-3, decay = 0.7, tol = 1e-8;
        int inner_iters = 200, max_iter = 20000;
    } sch;
    auto add_schedule = [&](CLI::App* c) {
        c->add_option("--eps-start", sch.eps_start, "Initial epsilon")->capture_default_str();
        c->add_option("--eps-final", sch.eps_final, "Final epsilon")->capture_default_str();
        c->add_option("--decay", sch.decay, "Geometric epsilon decay per stage")->capture_default_str();
        c->add_option("--inner-iters", sch.inner_iters, "Iterations per annealing stage")->capture_default_str();
        c->add_option("--max-iter", sch.max_iter, "Total iteration cap")->capture_default_str();
        c->add_option("--tol", sch.tol, "Sup-norm potential change for convergence")->capture_default_str();
    };
    auto schedule_json = [&](json& j) {
        j["eps_start"] = sch.eps_start;
        j["eps_final"] = sch.eps_final;
        j["decay"] = sch.decay;
        j["inner_iters"] = sch.inner_iters;
        j["max_iter"] = sch.max_iter;
        j["tol"] = sch.tol;
    };

    // solve
    std::string rho0, rho1, cost = "wfr", entropy = "kl";
    double delta = 1.0, plan_threshold = 1e-12;
    auto* solve = app.add_subcommand("solve", "Entropic unbalanced OT between two discrete measures");
    solve->add_option("--rho0", rho0, "Source measure JSON")->required();
    solve->add_option("--rho1", rho1, "Target measure JSON")->required();
    solve->add_option("--cost", cost, "wfr or quadratic")->capture_default_str();
    solve->add_option("--delta", delta, "WFR truncation delta in (0, 1]")->capture_default_str();
    solve->add_option("--entropy", entropy, "Marginal entropy: kl or tv")->capture_default_str();
    solve->add_option("--plan-threshold", plan_threshold, "Smallest plan entry listed in plan_nnz")->capture_default_str();
    add_schedule(solve);
    solve->add_option("--out", out, "Report path (stdout if omitted)");
    solve->callback([&] {
        cfg = {{"command", "solve"}, {"rho0", rho0}, {"rho1", rho1}, {"cost", cost}, {"delta", delta}, {"entropy", entropy}};
        schedule_json(cfg);
        cfg["plan_threshold"] = plan_threshold;
    });

    // monge
    std::string potential;
    bool check_ma = false, debias = false;
    double eps_grid = 0.0;
    auto* monge = app.add_subcommand("monge", "Monge couple, pushforward and MA residual on a 1D grid");
    monge->add_option("--rho0", rho0, "Source grid density JSON")->required();
    monge->add_option("--rho1", rho1, "Target grid density JSON");
    monge->add_option("--potential", potential,
                      "Potential: grid field, {points, values} (nearest-node resampled), or a solve report; "
                      "solved on the grid from rho0/rho1 when omitted");
    monge->add_flag("--check-ma", check_ma, "Evaluate the Monge-Ampere residual (circle grids)");
    monge->add_flag("--debias", debias, "Debias the grid-solved potentials");
    monge->add_option("--eps-final", eps_grid, "Final epsilon for the grid solve (default h/50)");
    monge->add_option("--out", out, "Report path");
    monge->callback([&] {
        cfg = {{"command", "monge"}, {"rho0", rho0}};
        if (!rho1.empty()) cfg["rho1"] = rho1;
        if (!potential.empty()) cfg["potential"] = potential;
        cfg["check_ma"] = check_ma;
        cfg["debias"] = debias;
        if (eps_grid > 0) cfg["eps_final"] = eps_grid;
    });

    // polar
    std::string map;
    std::size_t grid_n = 0;
    bool no_debias = false;
    auto* polar = app.add_subcommand("polar", "Polar factorization of a generalized automorphism of the circle");
    polar->add_option("--map", map, "Map JSON {grid?, phi, lam}")->required();
    polar->add_option("--grid", grid_n, "Circle grid size when the map declares none");
    polar->add_flag("--no-debias", no_debias, "Use the raw entropic potentials");
    polar->add_option("--eps-final", eps_grid, "Final epsilon for the grid solve (default h/50)");
    polar->add_option("--out", out, "Report path");
    polar->callback([&] {
        cfg = {{"command", "polar"}, {"map", map}};
        if (grid_n) cfg["grid"] = grid_n;
        cfg["debias"] = !no_debias;
        if (eps_grid > 0) cfg["eps_final"] = eps_grid;
    });

    // mtw / mtw-fd
    std::string space = "sphere", csv;
    double radius = 1.0, s_max = 10.0, diameter = 0.0, v_min = 0.3, v_max = 1.8;
    int samples = 200, trials = 20, dim = 2;
    std::uint64_t seed = 0;
    std::vector<double> radii;
    auto* mtw = app.add_subcommand("mtw", "Lee-Li coefficients and MTW condition sweep for a radial cost");
    auto* mtwfd = app.add_subcommand("mtw-fd", "Finite-difference MTW tensor vs the coefficient decomposition");
    for (auto* c : {mtw, mtwfd}) {
        c->add_option("--space", space, "sphere, euclidean or hyperbolic")->capture_default_str();
        c->add_option("--radius", radius, "Sphere radius R (cost -log cos^2(R d) on the unit sphere)")->capture_default_str();
        c->add_option("--cost", cost, "wfr or quadratic (euclidean only)")->capture_default_str();
        c->add_option("--diameter", diameter, "Diameter bound for euclidean / hyperbolic");
        c->add_option("--csv", csv, "Also write a CSV table");
        c->add_option("--out", out, "Report path");
    }
    mtw->add_option("--s-max", s_max, "Upper bound on s")->capture_default_str();
    mtw->add_option("--samples", samples, "Log-spaced samples (>= 50)")->capture_default_str();
    mtw->add_option("--radii", radii, "Also sweep these radii (parallel, UOT_THREADS)")->delimiter(',');
    mtwfd->add_option("--trials", trials, "Random J-orthogonal configurations")->capture_default_str();
    mtwfd->add_option("--dim", dim, "Manifold dimension")->capture_default_str();
    mtwfd->add_option("--seed", seed, "RNG seed")->capture_default_str();
    mtwfd->add_option("--v-min", v_min, "Smallest |v|")->capture_default_str();
    mtwfd->add_option("--v-max", v_max, "Largest |v|")->capture_default_str();
    auto mtw_common = [&](const char* name) {
        cfg = {{"command", name}, {"space", space}, {"radius", radius}, {"cost", cost}};
        if (diameter > 0) cfg["diameter"] = diameter;
        if (!csv.empty()) cfg["csv"] = csv;
    };
    mtw->callback([&] {
        mtw_common("mtw");
        cfg["s_max"] = s_max;
        cfg["samples"] = samples;
        if (!radii.empty()) cfg["radii"] = radii;
    });
    mtwfd->callback([&] {
        mtw_common("mtw-fd");
        cfg["trials"] = trials;
        cfg["dim"] = dim;
        cfg["seed"] = seed;
        cfg["v_min"] = v_min;
        cfg["v_max"] = v_max;
    });

    // conedist
    std::string space_json, p_json, q_json;
    auto* conedist = app.add_subcommand("conedist", "Cone distance between two points of C(M)");
    conedist->add_option("--space", space_json, "Space JSON (inline or path)")->required();
    conedist->add_option("--p", p_json, "Cone point {base, r} (inline or path)")->required();
    conedist->add_option("--q", q_json, "Cone point {base, r} (inline or path)")->required();
    conedist->add_option("--out", out, "Report path");
    conedist->callback([&] { cfg = {{"command", "conedist"}, {"space", space_json}, {"p", p_json}, {"q", q_json}}; });

    // twodirac
    double a = 1.0, b = 1.0, d = 0.0;
    bool also_solve = false;
    auto* twodirac = app.add_subcommand("twodirac", "Closed-form WFR^2 between a delta_x and b delta_y");
    twodirac->add_option("--a", a, "Source mass")->required();
    twodirac->add_option("--b", b, "Target mass")->required();
    twodirac->add_option("--d", d, "Base distance d(x, y)")->required();
    twodirac->add_flag("--solve", also_solve, "Also run the entropic solver on the pair");
    add_schedule(twodirac);
    twodirac->add_option("--out", out, "Report path");
    twodirac->callback([&] {
        cfg = {{"command", "twodirac"}, {"a", a}, {"b", b}, {"d", d}, {"solve", also_solve}};
        if (also_solve) schedule_json(cfg);
    });

    // validate
    std::string target, kind;
    auto* validate = app.add_subcommand("validate", "Check an input or report file against its schema");
    validate->add_option("path", target, "File to check")->required();
    validate->add_option("--kind", kind, "measure, grid-field, map, cone-point or report (auto-detected)");

    // rerun
    std::string report_path;
    auto* rerun = app.add_subcommand("rerun", "Re-run the config embedded in a report");
    rerun->add_option("report", report_path, "Report JSON")->required();
    rerun->add_option("--out", out, "Report path (overrides the embedded one)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (validate->parsed()) {
            const json doc = io::load_json(target);
            std::vector<io::SchemaViolation> v;
            io::DocumentKind k = io::detect_kind(doc);
            if (kind == "measure") k = io::DocumentKind::Measure;
            else if (kind == "grid-field") k = io::DocumentKind::GridField;
            else if (kind == "map") k = io::DocumentKind::Map;
            else if (kind == "cone-point") k = io::DocumentKind::ConePoint;
            else if (kind == "report") k = io::DocumentKind::Report;
            else if (!kind.empty()) fail(ErrorKind::InvalidInput, "unknown --kind '" + kind + "'");
            switch (k) {
            case io::DocumentKind::Measure: v = io::validate_measure(doc); break;
            case io::DocumentKind::GridField: v = io::validate_grid_field(doc); break;
            case io::DocumentKind::Map: v = io::validate_map(doc, false); break;
            case io::DocumentKind::ConePoint: v = io::validate_cone_point(doc); break;
            case io::DocumentKind::Report: v = io::validate_report(doc); break;
            case io::DocumentKind::Unknown: v = io::validate_document(doc); break;
            }
            json res{{"path", target}, {"kind", io::to_string(k)}, {"valid", v.empty()}};
            json list = json::array();
            for (const auto& x : v) list.push_back({{"pointer", x.pointer}, {"message", x.message}});
            res["violations"] = list;
            std::cout << res.dump(2) << '\n';
            return v.empty() ? 0 : 1;
        }
        if (rerun->parsed()) {
            const json doc = io::load_json(report_path);
            io::require_valid(io::validate_report(doc), "report");
            cfg = doc["config"];
            if (!out.empty()) cfg["out"] = out;
            return report(cfg, !no_timestamp);
        }
        if (!out.empty()) cfg["out"] = out;
        return report(cfg, !no_timestamp);
    } catch (const Error& e) {
        const json doc = error_json(cfg, e);
        std::cout << doc.dump(2) << '\n';
        std::cerr << "uot: " << to_string(e.kind()) << ": " << e.what() << '\n';
        if (cfg.is_object() && cfg.contains("out")) {
            try {
                io::write_json(cfg["out"], doc);
            } catch (const Error&) {
            }
        }
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "uot: " << e.what() << '\n';
        return 1;
    }
}
