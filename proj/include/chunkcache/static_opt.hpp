#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chunkcache/catalog.hpp"

namespace chunkcache {

struct CapacityError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Static cache content: per-file stored prefix lengths eta_i in [0, 1].
// water_level is set by the waterfilling solvers and empty for heuristic or
// oracle allocations.
struct PrefixAllocation {
    std::vector<double> eta;
    std::optional<double> water_level;
    double used_capacity = 0.0;
};

struct TrafficResult {
    double absolute = 0.0;    // bytes per request
    double normalized = 0.0;  // ratio vs. the no-cache traffic
};

// Minimum bandwidth per request with no cache deployed:
// sum_i S_i p_i int_0^1 R_i.
inline double no_cache_traffic(const Catalog& catalog) {
    double b = 0.0;
    for (const auto& f : catalog.files()) b += f.size * f.popularity * f.retention.mean_watch_time();
    return b;
}

// Core traffic per request under a static prefix allocation:
// sum_i S_i p_i int_{eta_i}^1 R_i.
inline TrafficResult traffic_static(const Catalog& catalog, const PrefixAllocation& alloc) {
    if (alloc.eta.size() != catalog.size())
        throw std::invalid_argument("traffic_static: allocation size mismatch");
    double b = 0.0;
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        const double eta = alloc.eta[i];
        if (!(eta >= 0.0 && eta <= 1.0))
            throw std::invalid_argument("traffic_static: eta outside [0, 1]");
        const auto& f = catalog.file(i);
        b += f.size * f.popularity * f.retention.integral(eta, 1.0);
    }
    return {b, b / no_cache_traffic(catalog)};
}

// Closed-form optimal prefix for the trunc_exp abandonment family at water
// level mu: eta(mu) = [-(1/lambda) ln((mu/p)(1-e^-lambda) + e^-lambda)]^+.
inline double corollary2_prefix(double lambda, double mu, double p) {
    if (!(mu >= 0.0) || !(p > 0.0)) throw std::domain_error("corollary2_prefix: bad mu or p");
    if (lambda == 0.0) return std::clamp(1.0 - mu / p, 0.0, 1.0);
    const double em = -std::expm1(-lambda);  // 1 - e^-lambda
    const double arg = (mu / p) * em + (1.0 - em);
    if (arg <= 0.0) return 0.0;  // lambda < 0 and mu far above p: empty prefix
    return std::clamp(-std::log(arg) / lambda, 0.0, 1.0);
}

// Reference prefix via monotone binary search on R itself.
inline double generic_prefix(const RetentionCurve& curve, double mu, double p) {
    if (!(mu >= 0.0) || !(p > 0.0)) throw std::domain_error("generic_prefix: bad mu or p");
    return curve.inverse_generic(mu / p);
}

namespace detail {

inline std::vector<double> level_prefixes(const Catalog& catalog, double mu) {
    std::vector<double> eta(catalog.size());
    for (std::size_t i = 0; i < catalog.size(); ++i)
        eta[i] = catalog.retention(i).portion_at_least(mu / catalog.popularity(i));
    return eta;
}

inline double allocation_mass(const Catalog& catalog, const std::vector<double>& eta) {
    double used = 0.0;
    for (std::size_t i = 0; i < catalog.size(); ++i) used += catalog.file_size(i) * eta[i];
    return used;
}

}  // namespace detail

// Waterfilling by bisection on the water level: the stored mass
// sum_i S_i eta_i(mu) decreases in mu, so the level meeting the capacity is
// found by bracketing. Retention plateaus make the mass map jump; the jump
// straddling the capacity is resolved by storing a partial plateau segment,
// ties broken by file index.
inline PrefixAllocation waterfill_bisection(const Catalog& catalog, double capacity) {
    const double total = catalog.total_size();
    const std::size_t m = catalog.size();
    if (capacity > total * (1.0 + 1e-12))
        throw CapacityError("waterfill: capacity " + std::to_string(capacity) +
                            " exceeds catalog size " + std::to_string(total));
    if (capacity >= total) return {std::vector<double>(m, 1.0), 0.0, total};
    if (capacity <= 0.0) return {std::vector<double>(m, 0.0), catalog.popularity(0), 0.0};

    double lo = 0.0;                                         // mass(lo) >= capacity
    double hi = catalog.popularity(0) * (1.0 + 1e-9) + 1e-300;  // mass(hi) <= capacity
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double mass = detail::allocation_mass(catalog, detail::level_prefixes(catalog, mid));
        (mass >= capacity ? lo : hi) = mid;
    }

    // Base consumes at most the capacity; room is the (possibly larger) mass
    // just below the level. Fill the gap in file order.
    std::vector<double> eta = detail::level_prefixes(catalog, hi);
    const std::vector<double> room = detail::level_prefixes(catalog, lo);
    double deficit = capacity - detail::allocation_mass(catalog, eta);
    for (std::size_t i = 0; i < m && deficit > 0.0; ++i) {
        const double take = std::min(room[i] - eta[i], deficit / catalog.file_size(i));
        if (take > 0.0) {
            eta[i] += take;
            deficit -= take * catalog.file_size(i);
        }
    }
    return {std::move(eta), 0.5 * (lo + hi), capacity - deficit};
}

// Iterative waterfilling: solve the interior level equation on the active
// set, round out-of-box prefixes to {0, 1}, adjust the residual capacity and
// repeat. Each pass permanently fixes at least one file, so it terminates in
// at most M passes. Prefix inverses outside [0, 1] come from a strictly
// decreasing linear extension of p_i R_i with the boundary slope.
inline PrefixAllocation waterfill_appendix(const Catalog& catalog, double capacity) {
    const double total = catalog.total_size();
    const std::size_t m = catalog.size();
    if (capacity > total * (1.0 + 1e-12))
        throw CapacityError("waterfill: capacity " + std::to_string(capacity) +
                            " exceeds catalog size " + std::to_string(total));
    if (capacity >= total) return {std::vector<double>(m, 1.0), 0.0, total};

    const auto inv_ext = [&](std::size_t i, double mu) {
        const double p = catalog.popularity(i);
        const auto& curve = catalog.retention(i);
        const double top = p;                     // p R(0)
        const double bot = p * curve.eval(1.0);   // p R(1)
        if (mu > top) {
            const double s = std::min(p * curve.slope(0.0), -1e-9 * p);
            return (mu - top) / s;  // < 0
        }
        if (mu < bot) {
            const double s = std::min(p * curve.slope(1.0), -1e-9 * p);
            return 1.0 + (mu - bot) / s;  // > 1
        }
        return curve.portion_at_least(mu / p);
    };

    std::vector<std::size_t> active(m);
    std::iota(active.begin(), active.end(), 0);
    std::vector<double> eta(m, 0.0);
    double residual = capacity;
    double mu_final = 0.0;

    for (std::size_t pass = 0; pass <= m + 1; ++pass) {
        if (active.empty()) break;
        const auto excess = [&](double mu) {
            double mass = 0.0;
            for (std::size_t i : active) mass += catalog.file_size(i) * inv_ext(i, mu);
            return mass - residual;
        };
        double lo = 0.0;
        while (excess(lo) < 0.0) lo -= std::max(1.0, -2.0 * lo);  // extension admits mu < 0
        double hi = catalog.popularity(0) * (1.0 + 1e-9) + 1.0;
        while (excess(hi) > 0.0) hi *= 2.0;
        const double mu = numeric::bisect_decreasing(excess, lo, hi);
        mu_final = mu;

        std::vector<std::size_t> below, above, interior;
        double rounded_mass = 0.0;
        for (std::size_t i : active) {
            const double v = inv_ext(i, mu);
            if (v < 0.0) {
                below.push_back(i);
            } else if (v > 1.0) {
                above.push_back(i);
                rounded_mass += catalog.file_size(i);
            } else {
                interior.push_back(i);
                rounded_mass += catalog.file_size(i) * v;
            }
        }
        const double delta = rounded_mass - residual;

        if (std::abs(delta) <= 1e-12 * std::max(total, 1.0) || interior.empty()) {
            for (std::size_t i : below) eta[i] = 0.0;
            for (std::size_t i : above) eta[i] = 1.0;
            for (std::size_t i : interior) eta[i] = std::clamp(inv_ext(i, mu), 0.0, 1.0);
            active.clear();
            break;
        }
        if (delta > 0.0) {
            // rounding the below-box files up to 0 over-consumes: they are 0
            for (std::size_t i : below) eta[i] = 0.0;
            std::vector<std::size_t> next;
            next.reserve(active.size());
            for (std::size_t i : active)
                if (std::find(below.begin(), below.end(), i) == below.end()) next.push_back(i);
            active = std::move(next);
        } else {
            for (std::size_t i : above) {
                eta[i] = 1.0;
                residual -= catalog.file_size(i);
            }
            std::vector<std::size_t> next;
            next.reserve(active.size());
            for (std::size_t i : active)
                if (std::find(above.begin(), above.end(), i) == above.end()) next.push_back(i);
            active = std::move(next);
        }
    }
    if (!active.empty()) throw std::logic_error("waterfill_appendix: failed to converge");
    const double used = detail::allocation_mass(catalog, eta);
    return {std::move(eta), mu_final, used};
}

// Store whole files in decreasing-popularity order; the first file that does
// not fit receives the residual fraction.
inline PrefixAllocation most_popular_baseline(const Catalog& catalog, double capacity) {
    const double total = catalog.total_size();
    if (capacity > total * (1.0 + 1e-12))
        throw CapacityError("most_popular: capacity exceeds catalog size");
    std::vector<double> eta(catalog.size(), 0.0);
    double remaining = std::min(capacity, total);
    for (std::size_t i = 0; i < catalog.size() && remaining > 0.0; ++i) {
        const double take = std::min(1.0, remaining / catalog.file_size(i));
        eta[i] = take;
        remaining -= take * catalog.file_size(i);
    }
    return {std::move(eta), std::nullopt, std::min(capacity, total) - std::max(remaining, 0.0)};
}

// Independent oracle: discretize each file into `grid` equal slices valued at
// p_i R_i(midpoint), sort all slices by value density and fill the capacity.
// Slices of one file are picked in prefix order because R_i is non-increasing.
inline PrefixAllocation brute_force_allocation_oracle(const Catalog& catalog, double capacity,
                                                      int grid) {
    if (grid < 1) throw std::domain_error("brute force: grid must be >= 1");
    const std::size_t m = catalog.size();
    if (m * static_cast<std::size_t>(grid) > 1000000)
        throw std::length_error("brute force: M * grid exceeds 1e6 slices");
    if (capacity > catalog.total_size() * (1.0 + 1e-12))
        throw CapacityError("brute force: capacity exceeds catalog size");

    struct Slice {
        double density;
        std::uint32_t file;
        std::uint32_t index;
    };
    std::vector<Slice> slices;
    slices.reserve(m * grid);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& f = catalog.file(i);
        for (int k = 0; k < grid; ++k) {
            const double mid = (k + 0.5) / grid;
            slices.push_back({f.popularity * f.retention.eval(mid),
                              static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(k)});
        }
    }
    std::stable_sort(slices.begin(), slices.end(), [](const Slice& a, const Slice& b) {
        if (a.density != b.density) return a.density > b.density;
        if (a.file != b.file) return a.file < b.file;
        return a.index < b.index;
    });

    std::vector<double> eta(m, 0.0);
    double remaining = capacity;
    for (const auto& s : slices) {
        if (remaining <= 0.0) break;
        const double cost = catalog.file_size(s.file) / grid;
        const double take = std::min(1.0, remaining / cost);
        eta[s.file] += take / grid;
        remaining -= take * cost;
    }
    for (auto& e : eta) e = std::min(e, 1.0);
    return {std::move(eta), std::nullopt, capacity - std::max(remaining, 0.0)};
}

// Worst violation of the water-level optimality structure: full files must
// have marginal value above the level, empty ones below, and partial ones on
// it. Returns the largest violation (0 means the structure holds exactly).
inline double kkt_max_violation(const Catalog& catalog, const PrefixAllocation& alloc) {
    if (!alloc.water_level) throw std::invalid_argument("kkt: allocation has no water level");
    const double mu = *alloc.water_level;
    double worst = 0.0;
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        const double p = catalog.popularity(i);
        const auto& curve = catalog.retention(i);
        const double eta = alloc.eta[i];
        double v = 0.0;
        if (eta >= 1.0 - 1e-12) {
            v = mu - p * curve.eval(1.0);
        } else if (eta <= 1e-12) {
            v = p - mu;  // p R(0) <= mu
        } else {
            v = std::abs(p * curve.eval(eta) - mu);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

}  // namespace chunkcache
