#pragma once

// Dimensional extension over a prime basis: layers become lattices N_0^d of
// exponent vectors, the layer measure is a product of independent (pi, Q)
// chains along the axis of the prime 2, and the pressure of a local
// observable is a weighted series of exact region pressures.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "mising/arith.hpp"
#include "mising/error.hpp"
#include "mising/gibbs.hpp"
#include "mising/ising1d.hpp"
#include "mising/observable.hpp"

namespace mising::multiprime {

using arith::Point;
using arith::PrimeBasis;
using arith::Region;
using arith::u64;
using ising1d::ModelParams;
using ising1d::TransferData;

/// f*(tau) = sum_A c_A prod_{x in A} tau_x with offsets in N_0^d.
struct LatticeObservable {
    struct Term {
        std::vector<Point> offsets;  // sorted, distinct, non-empty
        double coef = 0.0;

        friend bool operator==(const Term&, const Term&) = default;
    };
    std::vector<Term> terms;

    double sup_norm_bound() const {
        double s = 0.0;
        for (const auto& t : terms) s += std::abs(t.coef);
        return s;
    }

    /// Union of all offsets, sorted.
    std::vector<Point> support() const {
        std::vector<Point> s;
        for (const auto& t : terms) s.insert(s.end(), t.offsets.begin(), t.offsets.end());
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        return s;
    }

    friend bool operator==(const LatticeObservable&, const LatticeObservable&) = default;
};

struct ExtendedModel {
    PrimeBasis basis;
    std::size_t base_axis = 0;  // axis of the prime 2, carries the coupling
    ModelParams params;
};

inline constexpr u64 kMaxObservableIndex = u64{1} << 40;

/// Distinct prime factors by trial division.
inline std::vector<u64> prime_factors(u64 n) {
    require(n >= 1, "prime_factors: n must be >= 1");
    std::vector<u64> out;
    for (u64 p = 2; p <= n / p; ++p) {
        if (n % p != 0) continue;
        out.push_back(p);
        while (n % p == 0) n /= p;
    }
    if (n > 1) out.push_back(n);
    return out;
}

/// Extends the base basis by every prime dividing an index of f and rewrites
/// f as a first-layer observable of exponent-vector offsets.
inline std::pair<ExtendedModel, LatticeObservable> extend_observable(const Observable& f, const PrimeBasis& base,
                                                                     const ModelParams& params) {
    require(!f.empty(), "extend_observable: observable has no terms");
    require(base.axis_of(2) < base.dimension(), "extend_observable: base basis must contain 2");
    params.validate();
    std::vector<u64> primes = base.primes();
    for (const auto& m : f.terms()) {
        for (u64 i : m.indices) {
            require(i <= kMaxObservableIndex, "extend_observable: index too large to factor");
            for (u64 p : prime_factors(i)) primes.push_back(p);
        }
    }
    std::sort(primes.begin(), primes.end());
    primes.erase(std::unique(primes.begin(), primes.end()), primes.end());

    ExtendedModel model{PrimeBasis(primes), 0, params};
    model.base_axis = model.basis.axis_of(2);
    LatticeObservable fstar;
    for (const auto& m : f.terms()) {
        LatticeObservable::Term t;
        t.coef = m.coef;
        for (u64 i : m.indices) {
            auto li = arith::decompose(i, model.basis);
            t.offsets.push_back(std::move(li.exponents));
        }
        std::sort(t.offsets.begin(), t.offsets.end());
        fstar.terms.push_back(std::move(t));
    }
    return {std::move(model), std::move(fstar)};
}

inline Point add(const Point& a, const Point& b) {
    Point c(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) c[k] = a[k] + b[k];
    return c;
}

/// S = region + support(f*): the sites the tilted sum depends on.
inline std::vector<Point> dependence_set(const Region& region, const LatticeObservable& fstar) {
    std::vector<Point> s;
    const auto supp = fstar.support();
    for (const auto& x : region.points())
        for (const auto& o : supp) s.push_back(add(x, o));
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

inline constexpr unsigned kDefaultMaxFrontier = 22;

namespace detail {

/// Factor over at most a few sites; `values` indexed by a bit mask over
/// `sites` (bit j set means site j is +1).
struct Factor {
    std::vector<std::size_t> sites;
    std::vector<double> values;
    std::size_t position = 0;  // order position of the latest site
};

inline std::size_t state_index(int spin) { return spin > 0 ? 0 : 1; }

inline std::vector<Factor> build_factors(const std::vector<Point>& sites, const Region& region,
                                         const LatticeObservable& fstar, double t, std::size_t base_axis,
                                         const TransferData& td) {
    auto site_of = [&](const Point& x) {
        auto it = std::lower_bound(sites.begin(), sites.end(), x);
        return static_cast<std::size_t>(it - sites.begin());
    };
    std::vector<Factor> factors;

    // chains: group sites by the coordinates off the base axis
    std::map<Point, std::vector<std::pair<int, std::size_t>>> lines;
    for (std::size_t s = 0; s < sites.size(); ++s) {
        Point key = sites[s];
        const int v = key[base_axis];
        key[base_axis] = 0;
        lines[key].push_back({v, s});
    }
    for (auto& [key, line] : lines) {
        std::sort(line.begin(), line.end());
        const auto start = ising1d::multiply(td.pi, ising1d::power(td.Q, static_cast<u64>(line.front().first)));
        factors.push_back({{line.front().second}, {start[1], start[0]}});  // mask 0 = -1
        for (std::size_t k = 1; k < line.size(); ++k) {
            const auto q = ising1d::power(td.Q, static_cast<u64>(line[k].first - line[k - 1].first));
            Factor f{{line[k - 1].second, line[k].second}, std::vector<double>(4)};
            for (std::size_t m = 0; m < 4; ++m) {
                const int a = (m & 1) ? 1 : -1, b = (m & 2) ? 1 : -1;
                f.values[m] = q[state_index(a)][state_index(b)];
            }
            factors.push_back(std::move(f));
        }
    }

    // tilts exp(t c prod tau), shifted by |t c| so every value is <= 1
    for (const auto& x : region.points()) {
        for (const auto& term : fstar.terms) {
            Factor f;
            for (const auto& o : term.offsets) f.sites.push_back(site_of(add(x, o)));
            const double a = t * term.coef;
            f.values.resize(std::size_t{1} << f.sites.size());
            for (std::size_t m = 0; m < f.values.size(); ++m) {
                const int minus = static_cast<int>(f.sites.size()) - std::popcount(m);
                f.values[m] = std::exp((minus % 2 == 0 ? a : -a) - std::abs(a));
            }
            factors.push_back(std::move(f));
        }
    }
    return factors;
}

inline double tilt_shift(const Region& region, const LatticeObservable& fstar, double t) {
    double s = 0.0;
    for (const auto& term : fstar.terms) s += std::abs(t * term.coef);
    return s * static_cast<double>(region.size());
}

/// Lexicographic site order with the given axis permutation (first = most significant).
inline std::vector<std::size_t> lex_order(const std::vector<Point>& sites, const std::vector<std::size_t>& axes) {
    std::vector<std::size_t> order(sites.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        for (auto k : axes) {
            if (sites[a][k] != sites[b][k]) return sites[a][k] < sites[b][k];
        }
        return false;
    });
    return order;
}

struct Schedule {
    std::vector<std::size_t> order;
    std::vector<std::size_t> last_use;  // per site: latest position of a factor using it
    unsigned width = 0;                 // largest frontier
};

inline Schedule schedule(std::vector<std::size_t> order, std::vector<Factor>& factors, std::size_t n_sites) {
    Schedule s;
    std::vector<std::size_t> pos(n_sites);
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
    s.last_use.assign(n_sites, 0);
    for (auto& f : factors) {
        f.position = 0;
        for (auto site : f.sites) f.position = std::max(f.position, pos[site]);
    }
    for (std::size_t site = 0; site < n_sites; ++site) s.last_use[site] = pos[site];
    for (const auto& f : factors)
        for (auto site : f.sites) s.last_use[site] = std::max(s.last_use[site], f.position);
    // active after step i: introduced at <= i and last use > i, plus the new site
    std::vector<int> delta(order.size() + 1, 0);
    for (std::size_t site = 0; site < n_sites; ++site) {
        ++delta[pos[site]];
        --delta[s.last_use[site] + 1];
    }
    int active = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        active += delta[i];
        s.width = std::max<unsigned>(s.width, static_cast<unsigned>(active));
    }
    s.order = std::move(order);
    return s;
}

}  // namespace detail

struct RegionPressureOptions {
    unsigned max_frontier = kDefaultMaxFrontier;
};

/// Psi(region) = log E exp(t sum_{x in region} f*(theta_x tau)), exact.
/// Sites of the dependence set are eliminated one at a time in a
/// lexicographic order; of all axis orderings the one with the smallest
/// frontier is used. Throws infeasible if that frontier exceeds the cap.
inline double region_pressure(const Region& region, const LatticeObservable& fstar, double t,
                              const ExtendedModel& model, const RegionPressureOptions& opt = {}) {
    require(!fstar.terms.empty(), "region_pressure: observable has no terms");
    const std::size_t d = model.basis.dimension();
    for (const auto& x : region.points()) require(x.size() == d, "region_pressure: region dimension mismatch");
    for (const auto& term : fstar.terms)
        for (const auto& o : term.offsets) require(o.size() == d, "region_pressure: offset dimension mismatch");
    if (t == 0.0 || region.size() == 0) return 0.0;

    const auto td = ising1d::transfer(model.params);
    const auto sites = dependence_set(region, fstar);
    auto factors = detail::build_factors(sites, region, fstar, t, model.base_axis, td);

    std::vector<std::size_t> axes(d);
    std::iota(axes.begin(), axes.end(), 0);
    std::optional<detail::Schedule> best;
    do {
        auto s = detail::schedule(detail::lex_order(sites, axes), factors, sites.size());
        if (!best || s.width < best->width) best = std::move(s);
    } while (d <= 5 && std::next_permutation(axes.begin(), axes.end()));
    if (best->width > opt.max_frontier) {
        infeasible("region_pressure: elimination frontier " + std::to_string(best->width) + " exceeds limit " +
                   std::to_string(opt.max_frontier) + " (dependence set " + std::to_string(sites.size()) + ")");
    }
    // rebuild positions for the chosen order
    const auto sched = detail::schedule(best->order, factors, sites.size());

    std::vector<std::vector<std::size_t>> at_position(sched.order.size());
    for (std::size_t f = 0; f < factors.size(); ++f) at_position[factors[f].position].push_back(f);

    std::vector<std::size_t> active;      // site held by each bit of the table
    std::vector<double> table{1.0};
    double log_scale = 0.0;
    std::vector<double> next;
    for (std::size_t i = 0; i < sched.order.size(); ++i) {
        active.push_back(sched.order[i]);
        const std::size_t half = table.size();
        table.resize(2 * half);
        std::copy(table.begin(), table.begin() + static_cast<std::ptrdiff_t>(half),
                  table.begin() + static_cast<std::ptrdiff_t>(half));

        for (auto fi : at_position[i]) {
            const auto& f = factors[fi];
            std::vector<unsigned> bits;
            for (auto site : f.sites)
                bits.push_back(static_cast<unsigned>(std::find(active.begin(), active.end(), site) - active.begin()));
            for (std::size_t idx = 0; idx < table.size(); ++idx) {
                std::size_t m = 0;
                for (std::size_t j = 0; j < bits.size(); ++j) m |= ((idx >> bits[j]) & 1u) << j;
                table[idx] *= f.values[m];
            }
        }

        // sum out sites whose last factor has been applied
        for (std::size_t b = active.size(); b-- > 0;) {
            if (sched.last_use[active[b]] > i) continue;
            const std::size_t low = (std::size_t{1} << b) - 1;
            next.assign(table.size() / 2, 0.0);
            for (std::size_t idx = 0; idx < next.size(); ++idx) {
                const std::size_t lo = idx & low, hi = (idx & ~low) << 1;
                next[idx] = table[hi | lo] + table[hi | lo | (std::size_t{1} << b)];
            }
            table.swap(next);
            active.erase(active.begin() + static_cast<std::ptrdiff_t>(b));
        }

        const double mx = *std::max_element(table.begin(), table.end());
        if (mx <= 0.0) throw Error(ErrorKind::precondition, "region_pressure: underflow");
        for (auto& x : table) x /= mx;
        log_scale += std::log(mx);
    }
    return log_scale + std::log(table.at(0)) + detail::tilt_shift(region, fstar, t);
}

/// Lambda_j: exponent vectors of the first j smooth numbers. Every layer
/// region of cardinality j equals this set.
inline Region canonical_region(const PrimeBasis& basis, std::size_t j) {
    std::vector<Point> pts;
    for (auto& s : arith::first_smooth_numbers(basis, j)) pts.push_back(std::move(s.exponents));
    require(pts.size() == j, "canonical_region: not enough smooth numbers");
    return Region(std::move(pts));
}

struct KieRow {
    std::size_t j = 0;
    u64 n_j = 0;
    double w_j = 0.0;
    double psi_j = 0.0;
    double partial_sum = 0.0;
    double tail_bound = 0.0;
};

struct KieResult {
    double value = 0.0;
    double trunc_err = 0.0;
    std::vector<KieRow> table;
};

/// F(t) = sum_j w_j Psi_j(t f*) with w_j from the smooth-number weights and
/// Psi_j on the canonical region of cardinality j. The tail is bounded by
/// |Psi_j| <= j |t| ||f*|| against sum_{j>J} j w_j.
inline KieResult kie_pressure_extended(const ExtendedModel& model, const LatticeObservable& fstar, double t,
                                       double tol, const RegionPressureOptions& opt = {}) {
    require(tol > 0.0, "kie_pressure: tol must be > 0");
    KieResult out;
    if (t == 0.0) return out;
    const double c = std::abs(t) * fstar.sup_norm_bound();
    const auto ws = arith::kie_weights(model.basis, tol / c);
    const auto smooth = arith::first_smooth_numbers(model.basis, ws.terms());
    std::vector<Point> pts;
    for (std::size_t j = 1; j <= ws.terms(); ++j) {
        pts.push_back(smooth[j - 1].exponents);
        const double psi = region_pressure(Region(pts), fstar, t, model, opt);
        out.value += ws.weight(j) * psi;
        out.table.push_back({j, ws.smooth_number(j), ws.weight(j), psi, out.value,
                             c * arith::kie_tail_bound(model.basis, ws.kappa, j, ws.smooth.at(j))});
    }
    out.trunc_err = c * ws.tail_bound;
    return out;
}

inline KieResult kie_pressure(const Observable& f, const ModelParams& params, double t, double tol,
                              const PrimeBasis& base = PrimeBasis{}, const RegionPressureOptions& opt = {}) {
    const auto [model, fstar] = extend_observable(f, base, params);
    return kie_pressure_extended(model, fstar, t, tol, opt);
}

/// The smooth-number series with its truncation fixed for |t| <= t_max, so
/// that t -> value(t) is one smooth convex function (suitable for numerical
/// derivatives and Legendre transforms).
struct KieSeries {
    ExtendedModel model;
    LatticeObservable fstar;
    arith::WeightSeries weights;
    std::vector<Region> regions;  // canonical region of each cardinality j
    RegionPressureOptions options;

    double value(double t) const {
        if (t == 0.0) return 0.0;
        double s = 0.0;
        for (std::size_t j = 1; j <= weights.terms(); ++j)
            s += weights.weight(j) * region_pressure(regions[j - 1], fstar, t, model, options);
        return s;
    }
    double trunc_err(double t) const { return std::abs(t) * fstar.sup_norm_bound() * weights.tail_bound; }
};

inline KieSeries make_kie_series(const Observable& f, const ModelParams& params, double tol, double t_max,
                                 const PrimeBasis& base = PrimeBasis{}, const RegionPressureOptions& opt = {}) {
    require(tol > 0.0 && t_max > 0.0, "make_kie_series: tol and t_max must be > 0");
    auto [model, fstar] = extend_observable(f, base, params);
    auto ws = arith::kie_weights(model.basis, tol / (t_max * fstar.sup_norm_bound()));
    std::vector<Region> regions;
    std::vector<Point> pts;
    for (auto& s : arith::first_smooth_numbers(model.basis, ws.terms())) {
        pts.push_back(std::move(s.exponents));
        regions.emplace_back(pts);
    }
    return {std::move(model), std::move(fstar), std::move(ws), std::move(regions), opt};
}

/// (1/N) sum over r <= N coprime to the basis of Psi(Lambda^r_N), exact.
/// Regions of equal cardinality are evaluated once.
inline double finite_pressure_exact_d(const Observable& f, double t, u64 n, const ModelParams& params,
                                      const PrimeBasis& base = PrimeBasis{}, const RegionPressureOptions& opt = {}) {
    require(n >= 1 && n <= (u64{1} << 24), "finite_pressure_exact_d: requires 1 <= N <= 2^24");
    const auto [model, fstar] = extend_observable(f, base, params);
    if (t == 0.0) return 0.0;
    const auto smooth = arith::smooth_numbers_upto(model.basis, n);
    // |Lambda^r_N| = #{smooth <= N/r}; count coprime r per cardinality
    std::map<std::size_t, u64> count_by_size;
    u64 volume = 0;
    for (u64 r = 1; r <= n; ++r) {
        if (!model.basis.coprime(r)) continue;
        const u64 cap = n / r;
        const auto size = static_cast<std::size_t>(
            std::upper_bound(smooth.begin(), smooth.end(), cap,
                             [](u64 v, const arith::SmoothNumber& s) { return v < s.value; }) -
            smooth.begin());
        ++count_by_size[size];
        volume += size;
    }
    require(volume == n, "finite_pressure_exact_d: layer regions do not partition [1, N]");
    double total = 0.0;
    for (const auto& [size, count] : count_by_size) {
        std::vector<Point> pts;
        for (std::size_t k = 0; k < size; ++k) pts.push_back(smooth[k].exponents);
        total += static_cast<double>(count) * region_pressure(Region(pts), fstar, t, model, opt);
    }
    return total / static_cast<double>(n);
}

/// Finite lower sets of N_0^d with exactly `size` points.
inline std::vector<Region> lower_sets(std::size_t d, std::size_t size) {
    std::vector<Region> out;
    // grow by adding minimal points; deduplicate at the end
    std::vector<std::vector<Point>> frontier{{}};
    for (std::size_t step = 0; step < size; ++step) {
        std::vector<std::vector<Point>> grown;
        for (const auto& pts : frontier) {
            Region r(pts);
            std::vector<Point> candidates;
            if (pts.empty()) candidates.push_back(Point(d, 0));
            for (const auto& x : pts) {
                for (std::size_t k = 0; k < d; ++k) {
                    Point y = x;
                    ++y[k];
                    if (r.contains(y)) continue;
                    bool ok = true;
                    for (std::size_t m = 0; m < d && ok; ++m) {
                        if (y[m] == 0) continue;
                        Point z = y;
                        --z[m];
                        ok = r.contains(z);
                    }
                    if (ok) candidates.push_back(y);
                }
            }
            for (const auto& y : candidates) {
                auto next = pts;
                next.push_back(y);
                std::sort(next.begin(), next.end());
                grown.push_back(std::move(next));
            }
        }
        std::sort(grown.begin(), grown.end());
        grown.erase(std::unique(grown.begin(), grown.end()), grown.end());
        frontier = std::move(grown);
    }
    for (auto& pts : frontier) out.emplace_back(std::move(pts));
    return out;
}

struct ShapeWitness {
    Region a, b;
    double psi_a = 0.0, psi_b = 0.0;
};

struct ShapeReport {
    std::size_t pairs_compared = 0;
    double max_abs_diff = 0.0;
    std::vector<ShapeWitness> witnesses;  // pairs differing by more than tol
};

/// Compares region pressures across every pair of the given equal-cardinality regions.
inline ShapeReport compare_shapes(const std::vector<Region>& regions, const LatticeObservable& fstar, double t,
                                  const ExtendedModel& model, double tol = 1e-10) {
    ShapeReport rep;
    std::vector<double> psi;
    for (const auto& r : regions) psi.push_back(region_pressure(r, fstar, t, model));
    for (std::size_t a = 0; a < regions.size(); ++a)
        for (std::size_t b = a + 1; b < regions.size(); ++b) {
            ++rep.pairs_compared;
            const double diff = std::abs(psi[a] - psi[b]);
            rep.max_abs_diff = std::max(rep.max_abs_diff, diff);
            if (diff > tol) rep.witnesses.push_back({regions[a], regions[b], psi[a], psi[b]});
        }
    return rep;
}

/// Distinct regions Lambda^r_N of cardinality `size` over all N and r.
/// Since each such region is the first `size` smooth numbers, there is one.
inline std::vector<Region> layer_regions_of_size(const PrimeBasis& basis, std::size_t size) {
    return {canonical_region(basis, size)};
}

}  // namespace mising::multiprime
