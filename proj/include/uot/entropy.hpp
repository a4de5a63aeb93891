#pragma once

#include "uot/manifold.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace uot {

/// Entropy function F: convex, lower semi-continuous, nonnegative, F(1) = 0
/// and +inf on the negative half line, together with its Legendre transform.
///
/// `recession` is F'_inf = lim F(r)/r. `F_star` is +inf above it. The
/// optional second derivative is what the smooth convex oracle needs; it is
/// empty for entropies with a kink.
struct EntropyFunction {
    std::string name;
    std::function<double(double)> F;
    std::function<double(double)> F_star;
    std::function<double(double)> F_star_prime;
    std::function<double(double)> F_prime;
    std::function<double(double)> F_second;
    double recession = 0.0;
    bool slope_at_zero_infinite = false;

    double F_star_domain_upper() const { return recession; }
    bool smooth() const { return static_cast<bool>(F_prime) && static_cast<bool>(F_second); }
};

// F(x) = x log x - x + 1, F*(s) = e^s - 1.
EntropyFunction make_kl_entropy();
// F(x) = |x - 1|, F'_inf = 1. Exercises the finite-recession branch.
EntropyFunction make_tv_entropy();
// Lookup by name ("kl", "tv").
EntropyFunction make_entropy(const std::string& name);

// Weighted point cloud on a model space. Construction validates the points,
// rejects negative masses and merges points closer than 1e-12.
struct DiscreteMeasure {
    Space space;
    std::vector<Point> points;
    std::vector<double> masses;

    DiscreteMeasure() = default;
    DiscreteMeasure(Space s, std::vector<Point> pts, std::vector<double> m);

    std::size_t size() const { return points.size(); }
    double total_mass() const;
    DiscreteMeasure scaled(double factor) const;
};

// D_F(mu | nu) = sum F(dmu/dnu) dnu + F'_inf |mu_perp|, with the singular part
// taken as the mu-mass at points where nu has no mass. Points are matched by
// coordinates. May return +inf.
double csiszar_divergence(const EntropyFunction& F, const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// Same divergence for two mass vectors indexed over a common support.
double csiszar_divergence(const EntropyFunction& F, std::span<const double> mu, std::span<const double> nu);

} // namespace uot
