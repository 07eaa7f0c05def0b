#pragma once

// One-dimensional nearest-neighbour layer chain on sites 0,1,2,...: transfer
// matrix, finite-volume partition functions, the Markov representation
// (pi, Q) of the infinite-volume measure with free left end, and tilted
// transfer computations for first-layer observables.
//
// Spin index convention for all 2x2 objects: index 0 is +1, index 1 is -1.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mising/error.hpp"
#include "mising/observable.hpp"

namespace mising::ising1d {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<Vec2, 2>;

constexpr int spin_of(int index) { return index == 0 ? 1 : -1; }
constexpr int index_of(int spin) { return spin > 0 ? 0 : 1; }

struct ModelParams {
    double beta = 1.0;
    double J = 1.0;
    double h = 0.0;

    double coupling() const { return beta * J; }
    double field() const { return beta * h; }

    void validate() const {
        require(std::isfinite(beta) && std::isfinite(J) && std::isfinite(h), "model parameters must be finite");
    }
};

enum class Boundary { free, plus, minus };

/// Strength of the +/- right boundary term: beta*J (coupling) or beta (unit).
enum class BoundaryCoupling { coupling, unit };

inline Mat2 multiply(const Mat2& a, const Mat2& b) {
    Mat2 c{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
    return c;
}

inline Vec2 multiply(const Vec2& v, const Mat2& m) {
    return {v[0] * m[0][0] + v[1] * m[1][0], v[0] * m[0][1] + v[1] * m[1][1]};
}

inline Mat2 identity2() { return {Vec2{1.0, 0.0}, Vec2{0.0, 1.0}}; }

inline Mat2 power(Mat2 m, std::uint64_t n) {
    Mat2 r = identity2();
    while (n) {
        if (n & 1) r = multiply(r, m);
        m = multiply(m, m);
        n >>= 1;
    }
    return r;
}

struct TransferData {
    Mat2 K{};          // K(a,b) = exp(G(a,b)), G(a,b) = beta (J a b + h b)
    double lambda = 0; // Perron eigenvalue
    Vec2 e_tilde{};    // positive right eigenvector, unit norm
    Mat2 Q{};          // Q(a,b) = K(a,b) e(b) / (lambda e(a))
    Vec2 pi{};         // law of the first spin of the chain

    double q(int a, int b) const { return Q[index_of(a)][index_of(b)]; }
    double initial(int a) const { return pi[index_of(a)]; }
};

/// Transfer data from the dimensionless coupling K = beta J and field H = beta h.
inline TransferData transfer_reduced(double coupling, double field) {
    TransferData td;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const int a = spin_of(i), b = spin_of(j);
            td.K[i][j] = std::exp(coupling * a * b + field * b);
        }
    const double ek = std::exp(coupling);
    const double sh = std::sinh(field);
    const double root = std::sqrt(ek * ek * sh * sh + std::exp(-2.0 * coupling));
    td.lambda = ek * std::cosh(field) + root;

    // Kernel of the first row of K - lambda: e ~ (K(+,-), lambda - K(+,+)),
    // with lambda - K(+,+) = root - e^K sinh H rewritten to avoid cancellation.
    const double gap = sh > 0 ? std::exp(-2.0 * coupling) / (root + ek * sh) : root - ek * sh;
    Vec2 e{td.K[0][1], gap};
    const double norm = std::hypot(e[0], e[1]);
    td.e_tilde = {e[0] / norm, e[1] / norm};

    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) td.Q[i][j] = td.K[i][j] * td.e_tilde[j] / (td.lambda * td.e_tilde[i]);

    // Limit ratio of the first-spin marginal: numerator
    // e^{+-H} sum_{a,b} e^{(+-K+H) a} e(a) e(b), denominator
    // sum_{a,b} lambda e^{H a} e(a) e(b).
    const double sum_e = td.e_tilde[0] + td.e_tilde[1];
    double den = 0.0, num_plus = 0.0, num_minus = 0.0;
    for (int i = 0; i < 2; ++i) {
        const int a = spin_of(i);
        den += td.lambda * std::exp(field * a) * td.e_tilde[i] * sum_e;
        num_plus += std::exp(coupling * a + field * a) * td.e_tilde[i] * sum_e;
        num_minus += std::exp(-coupling * a + field * a) * td.e_tilde[i] * sum_e;
    }
    td.pi = {std::exp(field) * num_plus / den, std::exp(-field) * num_minus / den};
    return td;
}

inline TransferData transfer(const ModelParams& params) {
    params.validate();
    return transfer_reduced(params.coupling(), params.field());
}

namespace detail {

/// log sum over sigma_0..sigma_n of exp(K sum sigma_i sigma_{i+1} + H sum sigma_i + B sigma_n).
inline double log_chain_sum(std::uint64_t n_bonds, double coupling, double field, double right_field) {
    Vec2 v{std::exp(field), std::exp(-field)};
    double log_scale = 0.0;
    Mat2 k{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) k[i][j] = std::exp(coupling * spin_of(i) * spin_of(j) + field * spin_of(j));
    for (std::uint64_t step = 0; step < n_bonds; ++step) {
        v = multiply(v, k);
        const double m = std::max(v[0], v[1]);
        v = {v[0] / m, v[1] / m};
        log_scale += std::log(m);
    }
    return log_scale + std::log(v[0] * std::exp(right_field) + v[1] * std::exp(-right_field));
}

inline double boundary_field(const ModelParams& params, Boundary bc, BoundaryCoupling bcc) {
    const double strength = bcc == BoundaryCoupling::coupling ? params.coupling() : params.beta;
    switch (bc) {
        case Boundary::plus: return strength;
        case Boundary::minus: return -strength;
        case Boundary::free: break;
    }
    return 0.0;
}

}  // namespace detail

/// log Z on sites 0..n_bonds with free left end and the given right boundary.
inline double log_partition(std::uint64_t n_bonds, const ModelParams& params, Boundary bc = Boundary::free,
                            BoundaryCoupling bcc = BoundaryCoupling::coupling) {
    params.validate();
    return detail::log_chain_sum(n_bonds, params.coupling(), params.field(), detail::boundary_field(params, bc, bcc));
}

/// log pi(eta_0) + sum log Q(eta_i, eta_{i+1}).
inline double cylinder_logprob(std::span<const int> values, const TransferData& td) {
    require(!values.empty(), "cylinder_logprob: empty cylinder");
    double lp = std::log(td.initial(values[0]));
    for (std::size_t i = 0; i + 1 < values.size(); ++i) lp += std::log(td.q(values[i], values[i + 1]));
    return lp;
}

inline double cylinder_logprob(std::span<const int> values, const ModelParams& params) {
    return cylinder_logprob(values, transfer(params));
}

inline double entropy_term(double p) { return p > 0.0 ? -p * std::log(p) : 0.0; }

/// Row entropies -sum_b Q(a,b) log Q(a,b).
inline Vec2 transition_entropies(const TransferData& td) {
    return {entropy_term(td.Q[0][0]) + entropy_term(td.Q[0][1]), entropy_term(td.Q[1][0]) + entropy_term(td.Q[1][1])};
}

/// Entropy of the chain cylinder (tau_0..tau_k), computed from the marginals pi Q^i.
inline double marginal_entropy(std::uint64_t k, const TransferData& td) {
    double s = entropy_term(td.pi[0]) + entropy_term(td.pi[1]);
    const Vec2 rows = transition_entropies(td);
    Vec2 m = td.pi;
    for (std::uint64_t i = 0; i < k; ++i) {
        s += m[0] * rows[0] + m[1] * rows[1];
        m = multiply(m, td.Q);
    }
    return s;
}

inline double marginal_entropy(std::uint64_t k, const ModelParams& params) {
    return marginal_entropy(k, transfer(params));
}

/// Entropy of the free-boundary finite chain on sites 0..n_bonds:
/// log Z - beta d/dbeta log Z, where d/dbeta log Z is the mean of
/// J sum sigma_i sigma_{i+1} + h sum sigma_i, propagated exactly alongside
/// the transfer product (value and beta-derivative share a scale factor).
inline double finite_volume_entropy(std::uint64_t n_bonds, const ModelParams& params) {
    params.validate();
    const double kc = params.coupling(), hf = params.field();
    Mat2 k{}, dk{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const int a = spin_of(i), b = spin_of(j);
            k[i][j] = std::exp(kc * a * b + hf * b);
            dk[i][j] = (params.J * a * b + params.h * b) * k[i][j];
        }
    Vec2 v{std::exp(hf), std::exp(-hf)};
    Vec2 dv{params.h * v[0], -params.h * v[1]};
    double log_scale = 0.0;
    for (std::uint64_t step = 0; step < n_bonds; ++step) {
        const Vec2 nv = multiply(v, k);
        const Vec2 a = multiply(dv, k), b = multiply(v, dk);
        const double m = std::max(nv[0], nv[1]);
        v = {nv[0] / m, nv[1] / m};
        dv = {(a[0] + b[0]) / m, (a[1] + b[1]) / m};
        log_scale += std::log(m);
    }
    const double z = v[0] + v[1];
    const double mean_energy = (dv[0] + dv[1]) / z;
    return log_scale + std::log(z) - params.beta * mean_energy;
}

/// f*(tau) = sum_A J_A prod_{j in A} tau_j on one layer, offsets >= 0.
struct FirstLayerObservable {
    struct Term {
        std::vector<unsigned> offsets;  // sorted, distinct, non-empty
        double coef = 0.0;
    };
    std::vector<Term> terms;

    /// 1 + max offset.
    unsigned width() const {
        unsigned w = 1;
        for (const auto& t : terms) w = std::max(w, t.offsets.back() + 1);
        return w;
    }

    double sup_norm_bound() const {
        double s = 0.0;
        for (const auto& t : terms) s += std::abs(t.coef);
        return s;
    }

    /// Value on a window; bit j of `window` set means tau_j = +1.
    double evaluate(std::uint64_t window) const {
        double v = 0.0;
        for (const auto& t : terms) {
            int prod = 1;
            for (unsigned o : t.offsets) prod *= (window >> o & 1) ? 1 : -1;
            v += t.coef * prod;
        }
        return v;
    }
};

/// First-layer form of f: every index must be a power of two, i = 2^offset.
inline std::optional<FirstLayerObservable> first_layer(const Observable& f) {
    FirstLayerObservable out;
    for (const auto& m : f.terms()) {
        FirstLayerObservable::Term t;
        t.coef = m.coef;
        for (auto i : m.indices) {
            if ((i & (i - 1)) != 0) return std::nullopt;
            t.offsets.push_back(static_cast<unsigned>(std::countr_zero(i)));
        }
        out.terms.push_back(std::move(t));
    }
    return out;
}

inline Observable as_observable(const FirstLayerObservable& f) {
    std::vector<Monomial> terms;
    for (const auto& t : f.terms) {
        Monomial m;
        m.coef = t.coef;
        for (unsigned o : t.offsets) m.indices.push_back(std::uint64_t{1} << o);
        terms.push_back(std::move(m));
    }
    return Observable(std::move(terms));
}

inline constexpr unsigned kDefaultMaxWidth = 12;

/// P^i = log E exp(t sum_{j=0}^{i} f*(theta_j tau)) under the chain (pi, Q),
/// for i = 0..k_max, in one sliding-window pass over window states {-1,+1}^w.
inline std::vector<double> tilted_layer_pressures(std::uint64_t k_max, const FirstLayerObservable& fstar, double t,
                                                  const TransferData& td, unsigned max_width = kDefaultMaxWidth) {
    require(!fstar.terms.empty(), "tilted_layer_pressure: observable has no terms");
    const unsigned w = fstar.width();
    if (w > max_width) {
        infeasible("tilted_layer_pressure: window width " + std::to_string(w) + " exceeds limit " +
                   std::to_string(max_width));
    }
    const std::size_t states = std::size_t{1} << w;

    std::vector<double> tilt(states);
    double max_tilt = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < states; ++s) {
        tilt[s] = t * fstar.evaluate(s);
        max_tilt = std::max(max_tilt, tilt[s]);
    }
    for (auto& x : tilt) x = std::exp(x - max_tilt);

    auto spin_idx = [](std::uint64_t s, unsigned j) { return (s >> j & 1) ? 0 : 1; };

    // initial window tau_0..tau_{w-1} under the chain
    std::vector<double> weight(states);
    for (std::size_t s = 0; s < states; ++s) {
        double p = td.pi[spin_idx(s, 0)];
        for (unsigned j = 1; j < w; ++j) p *= td.Q[spin_idx(s, j - 1)][spin_idx(s, j)];
        weight[s] = p * tilt[s];
    }
    double log_scale = max_tilt;

    std::vector<double> out;
    out.reserve(k_max + 1);
    std::vector<double> next(states);
    for (std::uint64_t i = 0;; ++i) {
        double total = 0.0, mx = 0.0;
        for (double x : weight) {
            total += x;
            mx = std::max(mx, x);
        }
        out.push_back(log_scale + std::log(total));
        if (i == k_max) break;
        // rescale, then slide: drop tau_i, append tau_{i+w}
        for (auto& x : weight) x /= mx;
        log_scale += std::log(mx);
        for (std::size_t s2 = 0; s2 < states; ++s2) {
            const int newest = spin_idx(s2, w - 1);
            const std::uint64_t base = (s2 << 1) & (states - 1);
            double acc = 0.0;
            for (std::uint64_t oldest = 0; oldest < 2; ++oldest) {
                const std::uint64_t s = base | oldest;
                acc += weight[s] * td.Q[spin_idx(s, w - 1)][newest];
            }
            next[s2] = acc * tilt[s2];
        }
        weight.swap(next);
        log_scale += max_tilt;
    }
    return out;
}

inline double tilted_layer_pressure(std::uint64_t k, const FirstLayerObservable& fstar, double t,
                                    const TransferData& td, unsigned max_width = kDefaultMaxWidth) {
    if (t == 0.0) return 0.0;
    return tilted_layer_pressures(k, fstar, t, td, max_width).back();
}

}  // namespace mising::ising1d
