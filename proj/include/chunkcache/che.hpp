#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "chunkcache/catalog.hpp"
#include "chunkcache/numeric.hpp"
#include "chunkcache/static_opt.hpp"

namespace chunkcache {

struct InfiniteCharacteristicTime : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Chunking shared by every file: split points 0 = x_0 <= ... <= x_N = nu.
// The first N chunks are cacheable; the tail [nu, 1] is never cached.
struct ChunkScheme {
    std::vector<double> splits;

    static ChunkScheme from_splits(std::vector<double> x) {
        if (x.size() < 2) throw std::invalid_argument("chunk scheme: need at least one chunk");
        if (x.front() != 0.0) throw std::invalid_argument("chunk scheme: x_0 must be 0");
        for (std::size_t k = 1; k < x.size(); ++k)
            if (x[k] < x[k - 1]) throw std::invalid_argument("chunk scheme: splits must increase");
        const double nu = x.back();
        if (!(nu > 0.0 && nu <= 1.0))
            throw std::invalid_argument("chunk scheme: nu must lie in (0, 1]");
        return {std::move(x)};
    }

    static ChunkScheme equal_chunks(int n, double nu) {
        if (n < 1) throw std::invalid_argument("chunk scheme: need at least one chunk");
        std::vector<double> x(n + 1);
        for (int k = 0; k <= n; ++k) x[k] = nu * k / n;
        x[0] = 0.0;
        x[n] = nu;
        return from_splits(std::move(x));
    }

    // Sub-split: insert extra cut points, keeping 0 and nu fixed.
    ChunkScheme refined_with(const std::vector<double>& extra) const {
        std::vector<double> x = splits;
        for (double e : extra)
            if (e > 0.0 && e < nu()) x.push_back(e);
        std::sort(x.begin(), x.end());
        x.erase(std::unique(x.begin(), x.end()), x.end());
        return from_splits(std::move(x));
    }

    int num_chunks() const { return static_cast<int>(splits.size()) - 1; }
    double nu() const { return splits.back(); }
    double width(int k) const { return splits[k + 1] - splits[k]; }  // k in [0, N)
};

struct ChePrediction {
    double characteristic_time = 0.0;                // request-count units
    std::vector<std::vector<double>> hit_rates;      // [chunk k][file i]
    TrafficResult traffic;
};

namespace che_detail {

inline double uniform_file_size(const Catalog& catalog) {
    if (!catalog.uniform_size())
        throw std::invalid_argument("chunk-LRU analytics requires uniform file sizes");
    return catalog.file_size(0);
}

// request rate for chunk k of file i, in units of the total request rate
inline std::vector<std::vector<double>> chunk_rates(const Catalog& catalog,
                                                    const ChunkScheme& scheme) {
    const int n = scheme.num_chunks();
    std::vector<std::vector<double>> rates(n, std::vector<double>(catalog.size()));
    for (int k = 0; k < n; ++k) {
        const double x = scheme.splits[k];
        for (std::size_t i = 0; i < catalog.size(); ++i)
            rates[k][i] = catalog.popularity(i) * catalog.retention(i).eval(x);
    }
    return rates;
}

inline double cacheable_mass(const ChunkScheme& scheme,
                             const std::vector<std::vector<double>>& rates) {
    double mass = 0.0;
    for (int k = 0; k < scheme.num_chunks(); ++k) {
        std::size_t live = 0;
        for (double r : rates[k])
            if (r > 0.0) ++live;
        mass += scheme.width(k) * static_cast<double>(live);
    }
    return mass;
}

inline double filled_mass(const ChunkScheme& scheme,
                          const std::vector<std::vector<double>>& rates, double t) {
    double mass = 0.0;
    for (int k = 0; k < scheme.num_chunks(); ++k) {
        double sum = 0.0;
        for (double r : rates[k]) sum += -std::expm1(-r * t);
        mass += scheme.width(k) * sum;
    }
    return mass;
}

inline double solve_t(const Catalog& catalog, const ChunkScheme& scheme,
                      const std::vector<std::vector<double>>& rates, double capacity) {
    const double s = uniform_file_size(catalog);
    const double target = capacity / s;
    if (target <= 0.0) return 0.0;
    const double mass = cacheable_mass(scheme, rates);
    if (target >= mass * (1.0 - 1e-12))
        throw InfiniteCharacteristicTime(
            "characteristic time is infinite: capacity " + std::to_string(target) +
            " (file units) reaches the cacheable mass " + std::to_string(mass));
    const auto g = [&](double t) { return filled_mass(scheme, rates, t) - target; };
    return numeric::solve_increasing(g, 1.0, "characteristic time bracket failed");
}

constexpr double hit_rate_cap = 1.0 - 1e-15;

}  // namespace che_detail

inline double cacheable_mass(const Catalog& catalog, const ChunkScheme& scheme) {
    return che_detail::cacheable_mass(scheme, che_detail::chunk_rates(catalog, scheme));
}

// Root of C/S = sum_k dx_k sum_i (1 - e^{-p_i R_i(x_{k-1}) t}).
inline double solve_characteristic_time(const Catalog& catalog, const ChunkScheme& scheme,
                                        double capacity) {
    return che_detail::solve_t(catalog, scheme, che_detail::chunk_rates(catalog, scheme),
                               capacity);
}

// Expected core traffic per request under chunk-LRU, with the per-chunk hit
// rates h_{k,i} = 1 - e^{-p_i R_i(x_{k-1}) t_C}. When the capacity equals the
// cacheable mass the hit rates saturate and only the tail generates traffic.
inline ChePrediction traffic_chunk_lru(const Catalog& catalog, const ChunkScheme& scheme,
                                       double capacity) {
    const double s = che_detail::uniform_file_size(catalog);
    const auto rates = che_detail::chunk_rates(catalog, scheme);
    const double target = capacity / s;
    const double mass = che_detail::cacheable_mass(scheme, rates);

    double t;
    if (target >= mass * (1.0 - 1e-12)) {
        if (target > mass * (1.0 + 1e-9))
            throw InfiniteCharacteristicTime("capacity exceeds the cacheable mass " +
                                             std::to_string(mass) + " (file units)");
        t = std::numeric_limits<double>::infinity();
    } else {
        t = che_detail::solve_t(catalog, scheme, rates, capacity);
    }

    const int n = scheme.num_chunks();
    ChePrediction out;
    out.characteristic_time = t;
    out.hit_rates.assign(n, std::vector<double>(catalog.size(), 0.0));
    double traffic = 0.0;
    for (int k = 0; k < n; ++k) {
        const double x = scheme.splits[k];
        const double dx = scheme.width(k);
        for (std::size_t i = 0; i < catalog.size(); ++i) {
            const double r = rates[k][i];
            const double h =
                r > 0.0 ? std::min(-std::expm1(-r * t), che_detail::hit_rate_cap) : 0.0;
            out.hit_rates[k][i] = h;
            traffic += catalog.popularity(i) * catalog.retention(i).eval(x) * (1.0 - h) * dx;
        }
    }
    for (std::size_t i = 0; i < catalog.size(); ++i)
        traffic += catalog.popularity(i) * catalog.retention(i).integral(scheme.nu(), 1.0);
    out.traffic = {s * traffic, s * traffic / no_cache_traffic(catalog)};
    return out;
}

// Characteristic times of the two extreme chunkings of [0, nu]: a single
// chunk (t_lower) and infinitesimal chunks (t_upper, integral fixed point).
struct CharacteristicTimeBounds {
    double lower = 0.0;
    double upper = 0.0;
};

namespace che_detail {

// sum_i int_0^nu (1 - e^{-p_i R_i(x) t}) dx by adaptive quadrature
inline double integral_filled_mass(const Catalog& catalog, double nu, double t,
                                   double quad_tol) {
    return numeric::integrate(
        [&](double x) {
            double sum = 0.0;
            for (const auto& f : catalog.files())
                sum += -std::expm1(-f.popularity * f.retention.eval(x) * t);
            return sum;
        },
        0.0, nu, quad_tol);
}

// sum_i int_0^nu p_i R_i e^{-p_i R_i t} dx
inline double integral_miss_flow(const Catalog& catalog, double nu, double t, double quad_tol) {
    return numeric::integrate(
        [&](double x) {
            double sum = 0.0;
            for (const auto& f : catalog.files()) {
                const double r = f.popularity * f.retention.eval(x);
                sum += r * std::exp(-r * t);
            }
            return sum;
        },
        0.0, nu, quad_tol);
}

inline double integral_cacheable_mass(const Catalog& catalog, double nu) {
    double mass = 0.0;
    for (const auto& f : catalog.files())
        mass += f.popularity > 0.0 ? std::min(nu, f.retention.portion_above(0.0)) : 0.0;
    return mass;
}

// Fixed point of the infinitesimal capacity constraint, solved by a
// bracketed Newton iteration (quadrature inside). Returns +inf when the
// capacity reaches the cacheable mass.
inline double solve_t_integral(const Catalog& catalog, double nu, double target,
                               double quad_tol, double hint = 1.0) {
    if (target <= 0.0) return 0.0;
    const double mass = integral_cacheable_mass(catalog, nu);
    if (target >= mass * (1.0 - 1e-12)) return std::numeric_limits<double>::infinity();

    double lo = 0.0, hi = std::max(hint, 1.0);
    while (integral_filled_mass(catalog, nu, hi, quad_tol) < target) {
        hi *= 2.0;
        if (hi > 1e18) throw InfiniteCharacteristicTime("integral fixed point bracket failed");
    }
    double t = std::min(std::max(hint, lo + 0.25 * (hi - lo)), hi);
    for (int iter = 0; iter < 100; ++iter) {
        const double g = integral_filled_mass(catalog, nu, t, quad_tol) - target;
        if (std::abs(g) <= 1e-10 * std::max(target, 1.0)) return t;
        (g < 0.0 ? lo : hi) = t;
        const double slope = integral_miss_flow(catalog, nu, t, quad_tol);
        double next = slope > 0.0 ? t - g / slope : t;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo <= 1e-12 * std::max(hi, 1.0)) return 0.5 * (lo + hi);
        t = next;
    }
    return t;
}

}  // namespace che_detail

inline CharacteristicTimeBounds characteristic_time_bounds(const Catalog& catalog, double nu,
                                                           double capacity) {
    const double s = che_detail::uniform_file_size(catalog);
    const double target = capacity / s;
    const double m = static_cast<double>(catalog.size());
    if (target >= nu * m * (1.0 - 1e-12))
        throw InfiniteCharacteristicTime("single-chunk characteristic time is infinite");

    const auto g_single = [&](double t) {
        double sum = 0.0;
        for (const auto& f : catalog.files()) sum += -std::expm1(-f.popularity * t);
        return nu * sum - target;
    };
    CharacteristicTimeBounds out;
    out.lower = numeric::solve_increasing(g_single, 1.0, "single-chunk bracket failed");
    out.upper = che_detail::solve_t_integral(catalog, nu, target, 1e-9, out.lower);
    return out;
}

// Theorem hypothesis for sub-splitting: xi_t(tau) = sum_i p_i R_i(tau)
// e^{-p_i R_i(tau) t} must strictly decrease in tau for every t between the
// characteristic-time bounds. Checked on a (tau, t) grid by finite
// differences; worst_margin is the smallest decrease found.
struct SubsplitCheck {
    bool holds = false;
    double worst_margin = 0.0;
    CharacteristicTimeBounds bounds;
};

inline SubsplitCheck check_subsplit_condition(const Catalog& catalog, double nu, double capacity,
                                              int tau_grid = 200, int t_grid = 50) {
    if (tau_grid < 2 || t_grid < 1) throw std::invalid_argument("subsplit check: bad grid");
    SubsplitCheck out;
    out.bounds = characteristic_time_bounds(catalog, nu, capacity);

    const auto xi = [&](double tau, double t) {
        double sum = 0.0;
        for (const auto& f : catalog.files()) {
            const double r = f.popularity * f.retention.eval(tau);
            sum += r * std::exp(-r * t);
        }
        return sum;
    };

    double worst = std::numeric_limits<double>::infinity();
    for (int a = 0; a < t_grid; ++a) {
        const double t =
            t_grid == 1 ? out.bounds.lower
                        : out.bounds.lower +
                              (out.bounds.upper - out.bounds.lower) * a / (t_grid - 1);
        double prev = xi(0.0, t);
        for (int j = 1; j < tau_grid; ++j) {
            const double tau = static_cast<double>(j) / (tau_grid - 1);
            const double cur = xi(tau, t);
            worst = std::min(worst, prev - cur);
            prev = cur;
        }
    }
    out.worst_margin = worst;
    out.holds = worst > 0.0;
    return out;
}

// Traffic lower bound of infinitesimal chunking (the byte-level limit),
// minimized over the tail drop factor on [C/(MS), 1] by a grid scan refined
// with golden-section search.
struct InfinitesimalBound {
    double nu_star = 1.0;
    double characteristic_time = 0.0;
    TrafficResult traffic;
};

inline InfinitesimalBound infinitesimal_bound(const Catalog& catalog, double capacity,
                                              int nu_grid = 256) {
    if (nu_grid < 2) throw std::invalid_argument("infinitesimal bound: need nu_grid >= 2");
    const double s = che_detail::uniform_file_size(catalog);
    const double target = capacity / s;
    const double m = static_cast<double>(catalog.size());
    const double nu_min = target / m;
    if (nu_min > 1.0 + 1e-12)
        throw CapacityError("infinitesimal bound: capacity exceeds the catalog mass");
    const double b_nc = no_cache_traffic(catalog);
    // per-file quadrature budget of 1e-9, capped for large catalogs
    const double quad_tol = std::clamp(1e-9 * m, 1e-9, 1e-6);

    const auto tail = [&](double nu) {
        double sum = 0.0;
        for (const auto& f : catalog.files())
            sum += f.popularity * f.retention.integral(nu, 1.0);
        return sum;
    };

    double t_warm = 1.0;
    const auto objective = [&](double nu, double* t_out) {
        const double t = che_detail::solve_t_integral(catalog, nu, target, quad_tol, t_warm);
        if (t_out) *t_out = t;
        const double head = std::isinf(t)
                                ? 0.0
                                : che_detail::integral_miss_flow(catalog, nu, t, quad_tol);
        return head + tail(nu);
    };

    const double lo = std::min(nu_min, 1.0);
    double best_nu = 1.0, best_val = std::numeric_limits<double>::infinity();
    int best_j = 0;
    std::vector<double> grid(nu_grid);
    for (int j = 0; j < nu_grid; ++j) {
        grid[j] = lo + (1.0 - lo) * j / (nu_grid - 1);
        double t = 0.0;
        const double v = objective(grid[j], &t);
        if (!std::isinf(t)) t_warm = t;
        if (v < best_val) {
            best_val = v;
            best_nu = grid[j];
            best_j = j;
        }
    }
    const double bracket_lo = grid[std::max(best_j - 1, 0)];
    const double bracket_hi = grid[std::min(best_j + 1, nu_grid - 1)];
    if (bracket_hi > bracket_lo) {
        const auto [nu_ref, val_ref] = numeric::golden_section_min(
            [&](double nu) { return objective(nu, nullptr); }, bracket_lo, bracket_hi, 1e-4);
        if (val_ref < best_val) {
            best_val = val_ref;
            best_nu = nu_ref;
        }
    }

    InfinitesimalBound out;
    out.nu_star = best_nu;
    objective(best_nu, &out.characteristic_time);
    out.traffic = {s * best_val, s * best_val / b_nc};
    return out;
}

// Best tail drop factor for an N-equal-chunk scheme at the given capacity:
// grid scan over nu refined by golden-section search.
struct TailDropResult {
    double nu_star = 1.0;
    double characteristic_time = 0.0;
    TrafficResult traffic;
};

inline TailDropResult optimize_tail_drop(const Catalog& catalog, double capacity, int num_chunks,
                                         int nu_grid = 48) {
    if (num_chunks < 1) throw std::invalid_argument("optimize_tail_drop: need chunks >= 1");
    if (nu_grid < 2) throw std::invalid_argument("optimize_tail_drop: need nu_grid >= 2");
    const double s = che_detail::uniform_file_size(catalog);
    const double m = static_cast<double>(catalog.size());
    const double nu_min = std::min(capacity / (s * m), 1.0);

    const auto traffic_at = [&](double nu) {
        return traffic_chunk_lru(catalog, ChunkScheme::equal_chunks(num_chunks, nu), capacity)
            .traffic.absolute;
    };

    double best_nu = 1.0, best_val = std::numeric_limits<double>::infinity();
    int best_j = 0;
    std::vector<double> grid(nu_grid);
    for (int j = 0; j < nu_grid; ++j) {
        grid[j] = nu_min + (1.0 - nu_min) * j / (nu_grid - 1);
        const double v = traffic_at(grid[j]);
        if (v < best_val) {
            best_val = v;
            best_nu = grid[j];
            best_j = j;
        }
    }
    const double bracket_lo = grid[std::max(best_j - 1, 0)];
    const double bracket_hi = grid[std::min(best_j + 1, nu_grid - 1)];
    if (bracket_hi > bracket_lo) {
        const auto [nu_ref, val_ref] =
            numeric::golden_section_min(traffic_at, bracket_lo, bracket_hi, 1e-4);
        if (val_ref < best_val) {
            best_val = val_ref;
            best_nu = nu_ref;
        }
    }

    const auto pred = traffic_chunk_lru(catalog, ChunkScheme::equal_chunks(num_chunks, best_nu),
                                        capacity);
    return {best_nu, pred.characteristic_time, pred.traffic};
}

// Directional derivative q(nu) of the infinitesimal objective along the
// capacity constraint; its sign diagnoses stationarity of nu*.
struct NuDerivative {
    double value = 0.0;
    double boundary_term = 0.0;  // traffic freed by shrinking the cacheable range
    double refill_term = 0.0;    // traffic re-absorbed through the relaxed constraint
};

inline NuDerivative nu_direction_derivative(const Catalog& catalog, double nu, double capacity) {
    const double s = che_detail::uniform_file_size(catalog);
    const double target = capacity / s;
    const double m = static_cast<double>(catalog.size());
    const double quad_tol = std::clamp(1e-9 * m, 1e-9, 1e-6);
    const double t = che_detail::solve_t_integral(catalog, nu, target, quad_tol);
    if (std::isinf(t))
        throw std::invalid_argument("nu_direction_derivative: no finite characteristic time");

    double boundary = 0.0, fill = 0.0;
    for (const auto& f : catalog.files()) {
        const double r = f.popularity * f.retention.eval(nu);
        const double h = -std::expm1(-r * t);
        boundary -= h * r;
        fill += h;
    }
    const double num = numeric::integrate(
        [&](double x) {
            double sum = 0.0;
            for (const auto& f : catalog.files()) {
                const double r = f.popularity * f.retention.eval(x);
                sum += r * r * std::exp(-r * t);
            }
            return sum;
        },
        0.0, nu, quad_tol);
    const double den = che_detail::integral_miss_flow(catalog, nu, t, quad_tol);

    NuDerivative out;
    out.boundary_term = boundary;
    out.refill_term = den > 0.0 ? num * fill / den : 0.0;
    out.value = out.boundary_term + out.refill_term;
    return out;
}

// Classic whole-file LRU prediction (single chunk, no tail drop), written as
// its own route: h_i = 1 - e^{-p_i t}, sum_i h_i = C/S, B = S sum_i p_i (1 - h_i).
inline TrafficResult standard_lru_traffic(const Catalog& catalog, double capacity) {
    const double s = che_detail::uniform_file_size(catalog);
    const double target = capacity / s;
    const double m = static_cast<double>(catalog.size());
    if (target >= m * (1.0 - 1e-12))
        throw InfiniteCharacteristicTime("standard LRU: capacity covers the whole catalog");
    const auto g = [&](double t) {
        double sum = 0.0;
        for (const auto& f : catalog.files()) sum += -std::expm1(-f.popularity * t);
        return sum - target;
    };
    const double t = numeric::solve_increasing(g, 1.0, "standard LRU bracket failed");
    double traffic = 0.0;
    for (const auto& f : catalog.files()) traffic += f.popularity * std::exp(-f.popularity * t);
    return {s * traffic, s * traffic / no_cache_traffic(catalog)};
}

}  // namespace chunkcache
