#include "uot/entropy.hpp"

#include "uot/errors.hpp"

#include <cmath>
#include <limits>

namespace uot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMergeTol = 1e-12;

double divergence_term(const EntropyFunction& F, double m, double n)
{
    if (n > 0.0) return F.F(m / n) * n;
    if (m > 0.0) return std::isinf(F.recession) ? kInf : F.recession * m;
    return 0.0;
}

} // namespace

EntropyFunction make_kl_entropy()
{
    EntropyFunction e;
    e.name = "kl";
    e.F = [](double x) {
        if (x < 0.0) return kInf;
        if (x == 0.0) return 1.0;
        return x * std::log(x) - x + 1.0;
    };
    e.F_star = [](double s) { return std::expm1(s); };
    e.F_star_prime = [](double s) { return std::exp(s); };
    e.F_prime = [](double x) { return x > 0.0 ? std::log(x) : -kInf; };
    e.F_second = [](double x) { return x > 0.0 ? 1.0 / x : kInf; };
    e.recession = kInf;
    e.slope_at_zero_infinite = true;
    return e;
}

EntropyFunction make_tv_entropy()
{
    EntropyFunction e;
    e.name = "tv";
    e.F = [](double x) { return x < 0.0 ? kInf : std::abs(x - 1.0); };
    // sup_{t >= 0} s t - |t - 1|
    e.F_star = [](double s) {
        if (s > 1.0) return kInf;
        return s < -1.0 ? -1.0 : s;
    };
    e.F_star_prime = [](double s) { return s < -1.0 ? 0.0 : 1.0; };
    e.recession = 1.0;
    e.slope_at_zero_infinite = false;
    return e;
}

EntropyFunction make_entropy(const std::string& name)
{
    if (name == "kl") return make_kl_entropy();
    if (name == "tv") return make_tv_entropy();
    fail(ErrorKind::InvalidInput, "unknown entropy '" + name + "'");
}

DiscreteMeasure::DiscreteMeasure(Space s, std::vector<Point> pts, std::vector<double> m) : space(s)
{
    if (pts.size() != m.size()) fail(ErrorKind::InvalidInput, "measure: points and masses differ in length");
    for (std::size_t k = 0; k < pts.size(); ++k) {
        validate_point(space, pts[k]);
        if (!(m[k] >= 0.0) || !std::isfinite(m[k])) fail(ErrorKind::InvalidInput, "measure: masses must be finite and >= 0");
        bool merged = false;
        for (std::size_t j = 0; j < points.size(); ++j) {
            if (geodesic_distance(space, points[j], pts[k]) <= kMergeTol) {
                masses[j] += m[k];
                merged = true;
                break;
            }
        }
        if (!merged) {
            points.push_back(std::move(pts[k]));
            masses.push_back(m[k]);
        }
    }
}

double DiscreteMeasure::total_mass() const
{
    double s = 0.0;
    for (double m : masses) s += m;
    return s;
}

DiscreteMeasure DiscreteMeasure::scaled(double factor) const
{
    DiscreteMeasure out = *this;
    for (double& m : out.masses) m *= factor;
    return out;
}

double csiszar_divergence(const EntropyFunction& F, std::span<const double> mu, std::span<const double> nu)
{
    if (mu.size() != nu.size()) fail(ErrorKind::InvalidInput, "csiszar_divergence: size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        total += divergence_term(F, mu[i], nu[i]);
        if (std::isinf(total)) return kInf;
    }
    return std::max(0.0, total);
}

double csiszar_divergence(const EntropyFunction& F, const DiscreteMeasure& mu, const DiscreteMeasure& nu)
{
    if (!(mu.space == nu.space)) fail(ErrorKind::InvalidInput, "csiszar_divergence: measures on different spaces");
    // Align both measures on the union of their supports.
    std::vector<double> a(mu.masses);
    std::vector<double> b(mu.size(), 0.0);
    for (std::size_t j = 0; j < nu.size(); ++j) {
        bool found = false;
        for (std::size_t i = 0; i < mu.size(); ++i) {
            if (geodesic_distance(mu.space, mu.points[i], nu.points[j]) <= kMergeTol) {
                b[i] += nu.masses[j];
                found = true;
                break;
            }
        }
        if (!found) {
            a.push_back(0.0);
            b.push_back(nu.masses[j]);
        }
    }
    return csiszar_divergence(F, a, b);
}

} // namespace uot
