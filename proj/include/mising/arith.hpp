#pragma once

// Integer structure of the multiplicative lattice: layer decompositions of
// [1,N], smooth-number enumeration and the weight series that turn sums over
// layers into limits.
//
// All region membership uses exact integer comparisons. Values are 64-bit;
// layer partitions are supported for N <= 2^40.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "mising/error.hpp"

namespace mising::arith {

using u64 = std::uint64_t;

/// Exponent vector x in N_0^d.
using Point = std::vector<int>;

inline constexpr u64 kMaxVolume = u64{1} << 40;

inline bool is_prime(u64 n) {
    if (n < 2) return false;
    for (u64 d = 2; d <= n / d; ++d) {
        if (n % d == 0) return false;
    }
    return true;
}

/// Strictly increasing list of distinct primes p_1 < ... < p_d.
class PrimeBasis {
public:
    PrimeBasis() : primes_{2} {}

    explicit PrimeBasis(std::vector<u64> primes) : primes_(std::move(primes)) {
        require(!primes_.empty(), "prime basis must be non-empty");
        for (std::size_t i = 0; i < primes_.size(); ++i) {
            require(is_prime(primes_[i]), "prime basis entry " + std::to_string(primes_[i]) + " is not prime");
            require(i == 0 || primes_[i - 1] < primes_[i], "prime basis must be strictly increasing");
        }
    }

    const std::vector<u64>& primes() const noexcept { return primes_; }
    std::size_t dimension() const noexcept { return primes_.size(); }
    u64 operator[](std::size_t i) const { return primes_[i]; }

    /// Axis of prime p, or dimension() if p is not in the basis.
    std::size_t axis_of(u64 p) const {
        auto it = std::lower_bound(primes_.begin(), primes_.end(), p);
        if (it == primes_.end() || *it != p) return primes_.size();
        return static_cast<std::size_t>(it - primes_.begin());
    }

    bool coprime(u64 r) const {
        for (u64 p : primes_) {
            if (r % p == 0) return false;
        }
        return true;
    }

    friend bool operator==(const PrimeBasis&, const PrimeBasis&) = default;

private:
    std::vector<u64> primes_;
};

/// i = r * prod p_k^{x_k} with r coprime to the basis.
struct LayerIndex {
    u64 r = 1;
    Point exponents;

    friend bool operator==(const LayerIndex&, const LayerIndex&) = default;
};

inline LayerIndex decompose(u64 i, const PrimeBasis& basis) {
    require(i >= 1, "decompose: index must be >= 1");
    LayerIndex out{i, Point(basis.dimension(), 0)};
    for (std::size_t k = 0; k < basis.dimension(); ++k) {
        while (out.r % basis[k] == 0) {
            out.r /= basis[k];
            ++out.exponents[k];
        }
    }
    return out;
}

/// r * prod p_k^{x_k}; throws on overflow.
inline u64 compose(const LayerIndex& index, const PrimeBasis& basis) {
    u64 value = index.r;
    for (std::size_t k = 0; k < basis.dimension(); ++k) {
        for (int e = 0; e < index.exponents[k]; ++e) {
            require(value <= std::numeric_limits<u64>::max() / basis[k], "compose: overflow");
            value *= basis[k];
        }
    }
    return value;
}

/// floor(log2(N/r)) by repeated doubling: r*2^psi <= N < r*2^(psi+1).
inline unsigned psi2(u64 r, u64 n) {
    require(r >= 1 && r <= n, "psi2: requires 1 <= r <= N");
    unsigned psi = 0;
    while (r <= n / 2) {  // r*2 <= N without overflow
        r *= 2;
        ++psi;
    }
    return psi;
}

/// Finite lower set of exponent vectors, kept sorted.
class Region {
public:
    Region() = default;
    explicit Region(std::vector<Point> points) : points_(std::move(points)) {
        std::sort(points_.begin(), points_.end());
        points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
    }

    const std::vector<Point>& points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }
    bool contains(const Point& x) const { return std::binary_search(points_.begin(), points_.end(), x); }

    bool is_lower_set() const {
        for (const auto& x : points_) {
            for (std::size_t k = 0; k < x.size(); ++k) {
                if (x[k] == 0) continue;
                Point y = x;
                --y[k];
                if (!contains(y)) return false;
            }
        }
        return true;
    }

    friend bool operator==(const Region&, const Region&) = default;
    friend auto operator<=>(const Region& a, const Region& b) { return a.points_ <=> b.points_; }

private:
    std::vector<Point> points_;
};

struct SmoothNumber {
    u64 value;
    Point exponents;
};

/// Basis-smooth numbers in increasing order (n_1 = 1), by heap merge.
/// Each number is produced exactly once by only multiplying with primes at
/// or above the largest prime already used. Enumeration stops at `limit`
/// values, at values above `max_value`, or before 64-bit overflow.
class SmoothEnumerator {
public:
    explicit SmoothEnumerator(PrimeBasis basis) : basis_(std::move(basis)) {
        heap_.push(Entry{1, 0, Point(basis_.dimension(), 0)});
    }

    bool exhausted() const { return heap_.empty(); }

    SmoothNumber next() {
        require(!heap_.empty(), "smooth enumeration exhausted (64-bit overflow)");
        Entry top = heap_.top();
        heap_.pop();
        for (std::size_t k = top.min_axis; k < basis_.dimension(); ++k) {
            u64 p = basis_[k];
            if (top.value > std::numeric_limits<u64>::max() / p) continue;
            Point e = top.exponents;
            ++e[k];
            heap_.push(Entry{top.value * p, k, std::move(e)});
        }
        return SmoothNumber{top.value, std::move(top.exponents)};
    }

private:
    struct Entry {
        u64 value;
        std::size_t min_axis;
        Point exponents;
        bool operator>(const Entry& o) const { return value > o.value; }
    };

    PrimeBasis basis_;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap_;
};

/// All smooth numbers <= max_value, increasing.
inline std::vector<SmoothNumber> smooth_numbers_upto(const PrimeBasis& basis, u64 max_value) {
    std::vector<SmoothNumber> out;
    SmoothEnumerator gen(basis);
    while (!gen.exhausted()) {
        SmoothNumber s = gen.next();
        if (s.value > max_value) break;
        out.push_back(std::move(s));
    }
    return out;
}

/// The first `count` smooth numbers.
inline std::vector<SmoothNumber> first_smooth_numbers(const PrimeBasis& basis, std::size_t count) {
    std::vector<SmoothNumber> out;
    out.reserve(count);
    SmoothEnumerator gen(basis);
    while (out.size() < count) out.push_back(gen.next());
    return out;
}

/// Lambda^r_N for every r <= N coprime to the basis. The region of r is the
/// set of exponent vectors of the smooth numbers <= N/r.
inline std::map<u64, Region> layer_partition(u64 n, const PrimeBasis& basis) {
    require(n >= 1, "layer_partition: N must be >= 1");
    require(n <= kMaxVolume, "layer_partition: N exceeds 2^40");
    const auto smooth = smooth_numbers_upto(basis, n);
    std::map<u64, Region> out;
    for (u64 r = 1; r <= n; ++r) {
        if (!basis.coprime(r)) continue;
        const u64 bound = n / r;
        std::vector<Point> pts;
        for (const auto& s : smooth) {
            if (s.value > bound) break;
            pts.push_back(s.exponents);
        }
        out.emplace(r, Region(std::move(pts)));
    }
    return out;
}

/// Weight 1/2^(p+2) of layers with psi2 = p.
inline double koroa_weight(unsigned p) { return std::ldexp(1.0, -static_cast<int>(p) - 2); }

inline std::vector<double> koroa_weights(unsigned k_max) {
    std::vector<double> w(k_max + 1);
    for (unsigned p = 0; p <= k_max; ++p) w[p] = koroa_weight(p);
    return w;
}

/// sum_{p>K} (A*(p+1) + B) / 2^(p+2), in closed form.
/// Uses sum_{p>K} (p+1)/2^(p+2) = (K+3)/2^(K+2) and sum_{p>K} 1/2^(p+2) = 1/2^(K+2).
inline double koroa_linear_tail(int k, double a, double b) {
    return std::ldexp(a * (k + 3.0) + b, -(k + 2));
}

/// sum_{p>K} C p^q / 2^(p+2) for q >= 0: explicit terms until the term
/// ratio drops below 3/4, then a geometric bound.
inline double koroa_polynomial_tail(int k, double c, double q) {
    double sum = 0.0;
    for (int p = k + 1;; ++p) {
        const double term = c * std::pow(static_cast<double>(p), q) * koroa_weight(static_cast<unsigned>(p));
        const double ratio = 0.5 * std::pow((p + 1.0) / p, q);
        if (ratio <= 0.75) return sum + term / (1.0 - ratio);
        sum += term;
    }
}

/// (1/N) sum over odd i <= N of phi(psi2(i, N)). Exact counts per level:
/// psi2(i,N) >= p iff i <= floor(N/2^p).
template <class Phi>
double finite_average(Phi&& phi, u64 n) {
    require(n >= 1, "finite_average: N must be >= 1");
    auto odd_upto = [](u64 x) { return (x + 1) / 2; };
    double sum = 0.0;
    for (unsigned p = 0; (n >> p) >= 1; ++p) {
        const u64 count = odd_upto(n >> p) - odd_upto(n >> (p + 1));
        if (count) sum += static_cast<double>(count) * static_cast<double>(phi(p));
    }
    return sum / static_cast<double>(n);
}

/// prod (1 - 1/p_i) evaluated by inclusion-exclusion over subsets of the basis.
/// When prod p_i fits in 53 bits the sum is formed over the common denominator
/// in integers, so the result is the correctly rounded rational.
inline double kappa(const PrimeBasis& basis) {
    const std::size_t d = basis.dimension();
    require(d <= 24, "kappa: basis too large");
    u64 denom = 1;
    bool exact = true;
    for (u64 p : basis.primes()) {
        if (denom > (u64{1} << 53) / p) {
            exact = false;
            break;
        }
        denom *= p;
    }
    std::int64_t numer = 0;
    double total = 0.0;
    for (u64 mask = 0; mask < (u64{1} << d); ++mask) {
        double prod = 1.0;
        u64 iprod = 1;
        int bits = 0;
        for (std::size_t k = 0; k < d; ++k) {
            if (mask >> k & 1) {
                prod *= static_cast<double>(basis[k]);
                iprod *= exact ? basis[k] : 1;
                ++bits;
            }
        }
        const int sign = bits % 2 ? -1 : 1;
        if (exact) numer += sign * static_cast<std::int64_t>(denom / iprod);
        else total += sign / prod;
    }
    return exact ? static_cast<double>(numer) / static_cast<double>(denom) : total;
}

/// Upper bound on sum of 1/n over smooth n > x, using
/// #{smooth n <= y} <= prod_i (1 + ln y / ln p_i) on the shells (x e^k, x e^(k+1)].
inline double smooth_reciprocal_tail(const PrimeBasis& basis, double x) {
    auto count_bound = [&](double log_y) {
        double c = 1.0;
        for (u64 p : basis.primes()) c *= 1.0 + log_y / std::log(static_cast<double>(p));
        return c;
    };
    const double lx = std::log(x);
    double sum = 0.0;
    for (int k = 0;; ++k) {
        const double term = count_bound(lx + k + 1) / (x * std::exp(static_cast<double>(k)));
        // term ratio is decreasing in k, so once it is <= 1/2 the rest is geometric
        const double ratio = count_bound(lx + k + 2) / count_bound(lx + k + 1) / std::exp(1.0);
        if (ratio <= 0.5) return sum + term / (1.0 - ratio);
        sum += term;
    }
}

/// Weights w_j = kappa (1/n_j - 1/n_{j+1}) attached to layer regions of
/// cardinality j, with rho^-(j) = ln n_j and rho^+(j) = ln n_{j+1}.
struct WeightSeries {
    PrimeBasis basis;
    double kappa = 0.0;
    std::vector<u64> smooth;     // n_1 .. n_{J+1}
    std::vector<double> weights; // w_1 .. w_J stored at index j-1
    double tail_bound = 0.0;     // >= sum_{j>J} j w_j (and >= sum_{j>J} w_j)

    std::size_t terms() const { return weights.size(); }
    double weight(std::size_t j) const { return weights.at(j - 1); }
    u64 smooth_number(std::size_t j) const { return smooth.at(j - 1); }
    double rho_minus(std::size_t j) const { return std::log(static_cast<double>(smooth.at(j - 1))); }
    double rho_plus(std::size_t j) const { return std::log(static_cast<double>(smooth.at(j))); }
};

/// Exact tail identity sum_{j>J} j w_j = kappa ((J+1)/n_{J+1} + sum_{j>=J+2} 1/n_j)
/// with the reciprocal sum bounded above.
inline double kie_tail_bound(const PrimeBasis& basis, double kappa_value, std::size_t j, u64 n_next) {
    const double x = static_cast<double>(n_next);
    return kappa_value * ((static_cast<double>(j) + 1.0) / x + smooth_reciprocal_tail(basis, x));
}

inline WeightSeries kie_weights(const PrimeBasis& basis, double tolerance) {
    require(tolerance > 0.0, "kie_weights: tolerance must be > 0");
    WeightSeries ws;
    ws.basis = basis;
    ws.kappa = kappa(basis);
    SmoothEnumerator gen(basis);
    ws.smooth.push_back(gen.next().value);  // n_1 = 1
    for (;;) {
        if (gen.exhausted()) infeasible("kie_weights: tolerance not reachable within 64-bit smooth numbers");
        const u64 next = gen.next().value;
        const double a = 1.0 / static_cast<double>(ws.smooth.back());
        const double b = 1.0 / static_cast<double>(next);
        ws.weights.push_back(ws.kappa * (a - b));
        ws.smooth.push_back(next);
        ws.tail_bound = kie_tail_bound(basis, ws.kappa, ws.weights.size(), next);
        if (ws.tail_bound < tolerance) break;
    }
    return ws;
}

}  // namespace mising::arith
