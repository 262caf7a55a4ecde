#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "chunkcache/numeric.hpp"

namespace chunkcache {

// Audience retention rate R(tau): fraction of viewers still watching at
// normalized position tau in [0, 1]. Non-increasing with R(0) = 1.
//
// Variants:
//   constant1   R == 1 (every viewer watches to the end)
//   trunc_exp   truncated-exponential abandonment with rate lambda (any sign);
//               lambda == 0 is the uniform limit R(tau) = 1 - tau
//   tabulated   piecewise-linear through validated knots covering [0, 1]
class RetentionCurve {
public:
    enum class Kind { constant1, trunc_exp, tabulated };

    static RetentionCurve constant1() { return RetentionCurve(Kind::constant1, 0.0, {}); }

    static RetentionCurve trunc_exp(double lambda) {
        if (!std::isfinite(lambda)) throw std::invalid_argument("retention: lambda must be finite");
        return RetentionCurve(Kind::trunc_exp, lambda, {});
    }

    static RetentionCurve tabulated(std::vector<std::pair<double, double>> knots) {
        if (knots.size() < 2) throw std::invalid_argument("retention: need at least two knots");
        if (knots.front().first != 0.0 || knots.back().first != 1.0)
            throw std::invalid_argument("retention: knots must span [0, 1]");
        if (knots.front().second != 1.0)
            throw std::invalid_argument("retention: R(0) must equal 1");
        for (std::size_t j = 0; j < knots.size(); ++j) {
            const auto [tau, r] = knots[j];
            if (!(r >= 0.0 && r <= 1.0))
                throw std::invalid_argument("retention: knot values must lie in [0, 1]");
            if (j > 0) {
                if (!(tau > knots[j - 1].first))
                    throw std::invalid_argument("retention: knot positions must increase");
                if (r > knots[j - 1].second)
                    throw std::invalid_argument("retention: knots must be non-increasing");
            }
        }
        return RetentionCurve(Kind::tabulated, 0.0, std::move(knots));
    }

    Kind kind() const { return kind_; }
    double lambda() const { return lambda_; }
    const std::vector<std::pair<double, double>>& knots() const { return knots_; }

    // R(tau), tau in [0, 1].
    double eval(double tau) const {
        if (!(tau >= 0.0 && tau <= 1.0)) throw std::domain_error("retention: tau outside [0, 1]");
        switch (kind_) {
        case Kind::constant1:
            return 1.0;
        case Kind::trunc_exp: {
            if (lambda_ == 0.0) return 1.0 - tau;
            // (e^{-l tau} - e^{-l}) / (1 - e^{-l}) = 1 - expm1(-l tau)/expm1(-l)
            const double r = 1.0 - std::expm1(-lambda_ * tau) / std::expm1(-lambda_);
            return std::clamp(r, 0.0, 1.0);
        }
        case Kind::tabulated:
            return eval_tabulated(tau);
        }
        return 0.0;  // unreachable
    }

    // Average watch-time: integral of R over [0, 1].
    double mean_watch_time() const {
        switch (kind_) {
        case Kind::constant1:
            return 1.0;
        case Kind::trunc_exp:
            return trunc_exp_mean(lambda_);
        case Kind::tabulated:
            return integral(0.0, 1.0);
        }
        return 0.0;  // unreachable
    }

    // Integral of R over [a, b] within [0, 1]. Closed form for constant1 and
    // trunc_exp; adaptive quadrature (abs tol 1e-10) for tabulated curves.
    double integral(double a, double b) const {
        if (!(a >= 0.0 && b <= 1.0 && a <= b))
            throw std::domain_error("retention: bad integration interval");
        if (a == b) return 0.0;
        switch (kind_) {
        case Kind::constant1:
            return b - a;
        case Kind::trunc_exp:
            return trunc_exp_integral(lambda_, a, b);
        case Kind::tabulated:
            return numeric::integrate([this](double t) { return eval_tabulated(t); }, a, b,
                                      1e-10);
        }
        return 0.0;  // unreachable
    }

    // Measure of {tau in [0,1] : R(tau) >= y}; for non-increasing R this is the
    // rightmost prefix end with retention at least y.
    double portion_at_least(double y) const {
        switch (kind_) {
        case Kind::constant1:
            return y <= 1.0 ? 1.0 : 0.0;
        case Kind::trunc_exp:
            return trunc_exp_inverse(y);
        case Kind::tabulated:
            return tabulated_level(y, /*strict=*/false);
        }
        return 0.0;  // unreachable
    }

    // Measure of {tau in [0,1] : R(tau) > y}.
    double portion_above(double y) const {
        switch (kind_) {
        case Kind::constant1:
            return y < 1.0 ? 1.0 : 0.0;
        case Kind::trunc_exp:
            return trunc_exp_inverse(y);
        case Kind::tabulated:
            return tabulated_level(y, /*strict=*/true);
        }
        return 0.0;  // unreachable
    }

    // Generic inverse by monotone binary search on eval(); reference path for
    // cross-checking the closed forms.
    double inverse_generic(double y) const {
        if (y >= eval(0.0)) return 0.0;
        if (y <= eval(1.0)) return 1.0;
        double lo = 0.0, hi = 1.0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            (eval(mid) >= y ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    // Inverse-CDF abandonment sample: smallest b with 1 - R(b) >= u, u in [0, 1).
    double sample_abandonment(double u) const {
        if (!(u >= 0.0 && u < 1.0)) throw std::domain_error("retention: u outside [0, 1)");
        switch (kind_) {
        case Kind::constant1:
            return 1.0;
        case Kind::trunc_exp: {
            if (lambda_ == 0.0) return u;
            const double em = -std::expm1(-lambda_);  // 1 - e^{-lambda}
            const double b = -std::log1p(-u * em) / lambda_;
            return std::clamp(b, 0.0, 1.0);
        }
        case Kind::tabulated:
            return tabulated_level(1.0 - u, /*strict=*/true);
        }
        return 1.0;  // unreachable
    }

    // Derivative dR/dtau at tau (one-sided at interval ends); used by the
    // strictly-decreasing extension in the iterative waterfilling solver.
    double slope(double tau) const {
        switch (kind_) {
        case Kind::constant1:
            return 0.0;
        case Kind::trunc_exp: {
            if (lambda_ == 0.0) return -1.0;
            return lambda_ * std::exp(-lambda_ * tau) / std::expm1(-lambda_);
        }
        case Kind::tabulated: {
            const auto& k = knots_;
            std::size_t j = segment_index(std::clamp(tau, 0.0, 1.0));
            return (k[j + 1].second - k[j].second) / (k[j + 1].first - k[j].first);
        }
        }
        return 0.0;  // unreachable
    }

    bool strictly_decreasing() const {
        switch (kind_) {
        case Kind::constant1:
            return false;
        case Kind::trunc_exp:
            return true;
        case Kind::tabulated:
            for (std::size_t j = 1; j < knots_.size(); ++j)
                if (knots_[j].second >= knots_[j - 1].second) return false;
            return true;
        }
        return false;  // unreachable
    }

    friend bool operator==(const RetentionCurve& a, const RetentionCurve& b) {
        return a.kind_ == b.kind_ && a.lambda_ == b.lambda_ && a.knots_ == b.knots_;
    }

private:
    RetentionCurve(Kind kind, double lambda, std::vector<std::pair<double, double>> knots)
        : kind_(kind), lambda_(lambda), knots_(std::move(knots)) {}

    std::size_t segment_index(double tau) const {
        // first segment [tau_j, tau_{j+1}] containing tau
        std::size_t lo = 0, hi = knots_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (knots_[mid].first <= tau ? lo : hi) = mid;
        }
        return lo;
    }

    double eval_tabulated(double tau) const {
        const std::size_t j = segment_index(tau);
        const auto [t0, r0] = knots_[j];
        const auto [t1, r1] = knots_[j + 1];
        const double w = (tau - t0) / (t1 - t0);
        return r0 + w * (r1 - r0);
    }

    // Rightmost position where retention is >= y (strict=false) or > y
    // (strict=true). Plateaus exactly at level y are included only in the
    // non-strict variant.
    double tabulated_level(double y, bool strict) const {
        const auto above = [&](double r) { return strict ? r > y : r >= y; };
        if (!above(knots_.front().second)) return 0.0;
        if (above(knots_.back().second)) return 1.0;
        std::size_t j = 0;
        while (above(knots_[j + 1].second)) ++j;
        const auto [t0, r0] = knots_[j];
        const auto [t1, r1] = knots_[j + 1];
        if (r0 == r1) return strict ? t0 : t1;
        return std::clamp(t0 + (t1 - t0) * (r0 - y) / (r0 - r1), t0, t1);
    }

    // tau with R(tau) = y for the strictly decreasing trunc_exp family,
    // clamped into [0, 1].
    double trunc_exp_inverse(double y) const {
        if (y >= 1.0) return 0.0;
        if (y <= 0.0) return 1.0;
        if (lambda_ == 0.0) return 1.0 - y;
        const double em = -std::expm1(-lambda_);  // 1 - e^{-lambda}
        const double tau = -std::log1p(-em * (1.0 - y)) / lambda_;
        return std::clamp(tau, 0.0, 1.0);
    }

    static double trunc_exp_mean(double lambda) {
        if (std::abs(lambda) < 1e-5) {
            // 1/l - 1/(e^l - 1) = 1/2 - l/12 + l^3/720 + O(l^5)
            return 0.5 - lambda / 12.0 + lambda * lambda * lambda / 720.0;
        }
        return 1.0 / lambda - 1.0 / std::expm1(lambda);
    }

    static double trunc_exp_integral(double lambda, double a, double b) {
        if (std::abs(lambda) < 1e-5) {
            // series of (b-a) - int expm1(-l t) dt / expm1(-l), O(l^3) accurate
            const double s2 = (b * b - a * a) / 2.0;
            const double s3 = (b * b * b - a * a * a) / 6.0;
            const double s4 = (b * b * b * b - a * a * a * a) / 24.0;
            const double num = s2 - lambda * s3 + lambda * lambda * s4;
            const double den = 1.0 - lambda / 2.0 + lambda * lambda / 6.0;
            return (b - a) - num / den;
        }
        const double num =
            (std::exp(-lambda * a) - std::exp(-lambda * b)) / lambda - (b - a) * std::exp(-lambda);
        return num / -std::expm1(-lambda);
    }

    Kind kind_;
    double lambda_;
    std::vector<std::pair<double, double>> knots_;
};

// lambda such that the trunc_exp mean watch-time equals target in (0, 1).
// The mean is strictly decreasing in lambda (1 as lambda -> -inf, 0 as
// lambda -> +inf), so a sign-checked bisection suffices.
inline double fit_lambda_to_watch_time(double target) {
    if (!(target > 0.0 && target < 1.0))
        throw std::domain_error("fit_lambda: target outside (0, 1)");
    const auto mean = [](double l) { return RetentionCurve::trunc_exp(l).mean_watch_time(); };
    double span = 1.0;
    while (mean(-span) < target || mean(span) > target) {
        span *= 2.0;
        if (span > 1e6) throw std::runtime_error("fit_lambda: bracket expansion failed");
    }
    return numeric::bisect_decreasing([&](double l) { return mean(l) - target; }, -span, span);
}

}  // namespace chunkcache
