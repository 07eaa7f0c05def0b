#pragma once

// Pressures (scaled cumulant generating functions) of multiplicative ergodic
// averages X_N(f) = (1/N) sum_{i<=N} T_i f for first-layer f, their Legendre
// transforms, CLT variances and Monte Carlo checks against sampled averages.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "mising/arith.hpp"
#include "mising/error.hpp"
#include "mising/gibbs.hpp"
#include "mising/ising1d.hpp"
#include "mising/observable.hpp"

namespace mising::ldp {

using arith::u64;
using gibbs::SeriesValue;
using ising1d::FirstLayerObservable;
using ising1d::ModelParams;
using ising1d::TransferData;

/// Smallest K with sum_{k>K} c (k+1) / 2^(k+2) < tol.
inline unsigned series_cutoff(double c, double tol) {
    require(tol > 0.0, "tolerance must be > 0");
    unsigned k = 0;
    while (arith::koroa_linear_tail(static_cast<int>(k), c, 0.0) >= tol) ++k;
    return k;
}

/// sum_{k=0}^{K} P^k(t f*) / 2^(k+2).
inline double scgf_truncated(const FirstLayerObservable& fstar, const TransferData& td, double t, unsigned k_max) {
    if (t == 0.0) return 0.0;
    const auto p = ising1d::tilted_layer_pressures(k_max, fstar, t, td);
    double s = 0.0;
    for (unsigned k = 0; k <= k_max; ++k) s += arith::koroa_weight(k) * p[k];
    return s;
}

/// F(t) = sum_k P^k(t f*) / 2^(k+2), truncated once the bound
/// |P^k(t f*)| <= (k+1)|t| ||f*|| makes the tail smaller than tol.
inline SeriesValue scgf(const FirstLayerObservable& fstar, const ModelParams& params, double t, double tol) {
    const auto td = ising1d::transfer(params);
    const double c = std::abs(t) * fstar.sup_norm_bound();
    const unsigned k = series_cutoff(c, tol);
    return {scgf_truncated(fstar, td, t, k), arith::koroa_linear_tail(static_cast<int>(k), c, 0.0), k + 1};
}

/// F(t) for f = sigma_1 sigma_2 as f^free(K + t) - f^free(K): layers with
/// psi2 = p carry p+1 bonds, and the site-count terms cancel in the ratio.
inline SeriesValue scgf_via_free_energy(double t, const ModelParams& params, double tol) {
    params.validate();
    const double kc = params.coupling(), hf = params.field();
    const unsigned k = series_cutoff(std::abs(t), tol);
    SeriesValue out;
    for (unsigned p = 0; p <= k; ++p) {
        const double ratio = ising1d::detail::log_chain_sum(p + 1, kc + t, hf, 0.0) -
                             ising1d::detail::log_chain_sum(p + 1, kc, hf, 0.0);
        out.value += arith::koroa_weight(p) * ratio;
    }
    out.trunc_err = arith::koroa_linear_tail(static_cast<int>(k), std::abs(t), 0.0);
    out.terms = k + 1;
    return out;
}

inline constexpr double kDerivStep = 1e-4;

/// Central difference with one Richardson step (steps h and h/2).
template <class F>
double first_derivative(F&& f, double t, double h = kDerivStep) {
    auto d = [&](double s) { return (f(t + s) - f(t - s)) / (2.0 * s); };
    return (4.0 * d(h / 2) - d(h)) / 3.0;
}

template <class F>
double second_derivative(F&& f, double t, double h) {
    const double f0 = f(t);
    auto d = [&](double s) { return (f(t + s) - 2.0 * f0 + f(t - s)) / (s * s); };
    return (4.0 * d(h / 2) - d(h)) / 3.0;
}

/// A convex pressure t -> F(t) together with its slope.
struct ScgfFunction {
    std::function<double(double)> value;
    std::function<double(double)> slope;
};

/// Exact-series F for a first-layer observable. Each evaluation fixes the
/// series cutoff from the largest |t| in its stencil so that value and
/// slope are derivatives of one smooth truncated function.
inline ScgfFunction make_scgf_function(const FirstLayerObservable& fstar, const ModelParams& params, double tol) {
    const auto td = ising1d::transfer(params);
    const double norm = fstar.sup_norm_bound();
    auto value = [fstar, td, norm, tol](double t) {
        return scgf_truncated(fstar, td, t, series_cutoff(std::abs(t) * norm, tol));
    };
    auto slope = [fstar, td, norm, tol](double t) {
        const double reach = std::abs(t) + kDerivStep;
        const unsigned k = std::max(series_cutoff(reach * norm, tol), series_cutoff(norm, tol));
        return first_derivative([&](double s) { return scgf_truncated(fstar, td, s, k); }, t);
    };
    return {value, slope};
}

struct ScgfCurve {
    std::vector<double> grid;
    std::vector<double> F;
    std::vector<double> Fprime;
    std::vector<double> trunc_err;
    double deriv_step = kDerivStep;
};

inline std::vector<double> make_grid(double lo, double hi, double step) {
    require(std::isfinite(lo) && std::isfinite(hi) && step > 0.0 && lo <= hi, "grid bounds must be finite, step > 0");
    std::vector<double> g;
    const auto n = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
    // snap lo + i*step to 15 significant digits so 3*0.1 prints as 0.3
    for (long long i = 0; i <= n; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.15g", lo + static_cast<double>(i) * step);
        g.push_back(std::strtod(buf, nullptr));
    }
    return g;
}

inline ScgfCurve scgf_curve(const FirstLayerObservable& fstar, const ModelParams& params, std::vector<double> grid,
                            double tol) {
    const auto fn = make_scgf_function(fstar, params, tol);
    ScgfCurve c;
    c.grid = std::move(grid);
    for (double t : c.grid) {
        c.F.push_back(fn.value(t));
        c.Fprime.push_back(fn.slope(t));
        c.trunc_err.push_back(scgf(fstar, params, t, tol).trunc_err);
    }
    return c;
}

/// Largest violation of convexity on the curve: negative second differences
/// of F and decreases of F'.
inline double convexity_defect(const ScgfCurve& c) {
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < c.grid.size(); ++i) {
        const double h1 = c.grid[i] - c.grid[i - 1], h2 = c.grid[i + 1] - c.grid[i];
        const double d2 = ((c.F[i + 1] - c.F[i]) / h2 - (c.F[i] - c.F[i - 1]) / h1);
        worst = std::max(worst, -d2);
    }
    for (std::size_t i = 1; i < c.grid.size(); ++i) worst = std::max(worst, c.Fprime[i - 1] - c.Fprime[i]);
    return worst;
}

enum class Domain { interior, below, above };

struct LegendrePoint {
    double x = 0.0;
    double I = 0.0;
    double t_star = 0.0;
    Domain domain = Domain::interior;
};

struct LegendreOptions {
    double t_max = 1e4;       // bracket expansion stops here: slope saturation
    double convex_slack = 1e-6;  // slope noise from differencing at large t
};

/// I(x) = sup_t (t x - F(t)) by solving F'(t*) = x on the increasing slope:
/// bracket expansion by doubling, then bisection. Outside the range of F'
/// the rate is +inf with a domain flag.
inline LegendrePoint legendre(const ScgfFunction& fn, double x, const LegendreOptions& opt = {}) {
    require(std::isfinite(x), "legendre: x must be finite");
    LegendrePoint out{x};
    const double s0 = fn.slope(0.0);
    if (x == s0) {
        out.I = -fn.value(0.0);
        return out;
    }
    const double dir = x > s0 ? 1.0 : -1.0;
    double lo = 0.0, hi = dir, slope_lo = s0;
    for (;;) {
        const double s = fn.slope(hi);
        if (dir * (s - slope_lo) < -opt.convex_slack) throw Error(ErrorKind::precondition, "legendre: pressure is not convex");
        if (dir * (s - x) >= 0.0) break;
        if (std::abs(hi) >= opt.t_max) {
            out.I = std::numeric_limits<double>::infinity();
            out.t_star = hi;
            out.domain = dir > 0 ? Domain::above : Domain::below;
            return out;
        }
        lo = hi;
        slope_lo = s;
        hi *= 2.0;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (dir * (fn.slope(mid) - x) < 0.0) lo = mid; else hi = mid;
    }
    out.t_star = 0.5 * (lo + hi);
    out.I = out.t_star * x - fn.value(out.t_star);
    return out;
}

/// Legendre transform of a tabulated curve: t* by linear interpolation of F'
/// inside the bracketing cell, F(t*) by cubic Hermite interpolation.
inline LegendrePoint legendre(const ScgfCurve& c, double x, double convex_slack = 1e-9) {
    require(c.grid.size() >= 2, "legendre: curve needs at least two points");
    require(convexity_defect(c) <= convex_slack, "legendre: pressure curve is not convex");
    LegendrePoint out{x};
    if (x < c.Fprime.front() || x > c.Fprime.back()) {
        out.I = std::numeric_limits<double>::infinity();
        out.domain = x < c.Fprime.front() ? Domain::below : Domain::above;
        out.t_star = x < c.Fprime.front() ? c.grid.front() : c.grid.back();
        return out;
    }
    std::size_t i = 0;
    while (i + 2 < c.grid.size() && c.Fprime[i + 1] < x) ++i;
    const double t0 = c.grid[i], t1 = c.grid[i + 1], h = t1 - t0;
    const double ds = c.Fprime[i + 1] - c.Fprime[i];
    const double u = ds > 0 ? (x - c.Fprime[i]) / ds : 0.0;
    const double h00 = 2 * u * u * u - 3 * u * u + 1, h10 = u * u * u - 2 * u * u + u;
    const double h01 = -2 * u * u * u + 3 * u * u, h11 = u * u * u - u * u;
    const double f = h00 * c.F[i] + h10 * h * c.Fprime[i] + h01 * c.F[i + 1] + h11 * h * c.Fprime[i + 1];
    out.t_star = t0 + u * h;
    out.I = out.t_star * x - f;
    return out;
}

struct RateCurve {
    std::vector<LegendrePoint> points;
    double x_min = 0.0, x_max = 0.0;  // closure of the slope range
};

inline RateCurve rate_curve(const ScgfFunction& fn, const std::vector<double>& xs, const LegendreOptions& opt = {}) {
    RateCurve rc;
    rc.x_min = fn.slope(-opt.t_max);
    rc.x_max = fn.slope(opt.t_max);
    for (double x : xs) rc.points.push_back(legendre(fn, x, opt));
    return rc;
}

/// sigma^2 = F''(0): central second differences with Richardson (steps h, h/2)
/// on a truncated series whose second-derivative tail,
/// sum_{k>K} (k+1)^2 ||f*||^2 / 2^(k+2), is below tol.
inline double clt_variance(const FirstLayerObservable& fstar, const ModelParams& params, double tol,
                           double step = 1e-2) {
    require(tol > 0.0, "clt_variance: tol must be > 0");
    const auto td = ising1d::transfer(params);
    const double norm = fstar.sup_norm_bound();
    unsigned k = 1;
    while (arith::koroa_polynomial_tail(static_cast<int>(k), 4.0 * norm * norm, 2.0) >= tol) ++k;
    return second_derivative([&](double s) { return scgf_truncated(fstar, td, s, k); }, 0.0, step);
}

/// (1/N) log E exp(t sum_{i<=N} T_i f) under the infinite-volume measure:
/// (1/N) sum over odd r <= N of P^{psi2(r,N)}(t f*).
inline double finite_pressure_exact(const FirstLayerObservable& fstar, double t, u64 n, const ModelParams& params) {
    require(n >= 1 && n <= (u64{1} << 20), "finite_pressure_exact: requires 1 <= N <= 2^20");
    if (t == 0.0) return 0.0;
    const auto td = ising1d::transfer(params);
    const unsigned top = arith::psi2(1, n);
    const auto p = ising1d::tilted_layer_pressures(top, fstar, t, td);
    return arith::finite_average([&](unsigned level) { return p[level]; }, n);
}

/// Per-replica X_N(f) on configurations sampled on [1, N * max index of f].
inline std::vector<double> sample_ergodic_averages(const Observable& f, const ModelParams& params, u64 n, u64 count,
                                                   u64 seed, unsigned workers = 1) {
    require(!f.empty(), "observable has no terms");
    const u64 volume = n * f.max_index();
    const auto td = ising1d::transfer(params);
    std::vector<double> xs(count);
    gibbs::for_replicas(count, workers, [&](u64 c) {
        std::vector<std::int8_t> sigma(volume);
        gibbs::sample_configuration(volume, td, seed, c, sigma);
        xs[c] = f.ergodic_average(n, sigma);
    });
    return xs;
}

struct EmpiricalRow {
    double x = 0.0;
    double emp_rate = 0.0;  // -(1/N) log P(X_N >= x); +inf when censored
    double I = 0.0;
    bool censored = false;  // no sample reached x
};

/// Diagnostic table of empirical tail decay rates next to the analytic rate.
inline std::vector<EmpiricalRow> empirical_ldp_check(const FirstLayerObservable& fstar, const ModelParams& params,
                                                     u64 n, u64 count, u64 seed, const std::vector<double>& xs,
                                                     double tol = 1e-10, unsigned workers = 1) {
    const auto samples = sample_ergodic_averages(ising1d::as_observable(fstar), params, n, count, seed, workers);
    const auto fn = make_scgf_function(fstar, params, tol);
    std::vector<EmpiricalRow> rows;
    for (double x : xs) {
        EmpiricalRow row{x};
        const auto hits = std::count_if(samples.begin(), samples.end(), [x](double v) { return v >= x; });
        row.censored = hits == 0;
        row.emp_rate = row.censored ? std::numeric_limits<double>::infinity()
                                    : -std::log(static_cast<double>(hits) / static_cast<double>(count)) /
                                          static_cast<double>(n);
        const auto lp = legendre(fn, x);
        // upper tail: P(X >= x) ~ exp(-N I(x)) for x above the mean, ~1 below
        row.I = x <= fn.slope(0.0) ? 0.0 : lp.I;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace mising::ldp
