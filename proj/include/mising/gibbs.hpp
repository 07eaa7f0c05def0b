#pragma once

// The multiplicative Ising measure on {-1,+1}^N. Layers tau^r_i = sigma_{r 2^i}
// (r odd) are independent copies of the (pi, Q) chain, which gives exact
// cylinder probabilities, free energies and entropies as weighted layer
// sums, and a sampler whose output does not depend on scheduling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mising/arith.hpp"
#include "mising/error.hpp"
#include "mising/ising1d.hpp"

namespace mising::gibbs {

using arith::u64;
using ising1d::Boundary;
using ising1d::BoundaryCoupling;
using ising1d::Mat2;
using ising1d::ModelParams;
using ising1d::TransferData;
using ising1d::Vec2;

/// Finite map site -> spin, sites >= 1.
using CylinderSpec = std::map<u64, int>;

inline void validate(const CylinderSpec& spec) {
    require(!spec.empty(), "cylinder spec must be non-empty");
    for (const auto& [site, spin] : spec) {
        require(site >= 1, "cylinder sites must be >= 1");
        require(spin == 1 || spin == -1, "cylinder spins must be +1 or -1");
    }
}

/// Exact chain marginal of spins at increasing positions of one layer.
inline double layer_marginal_logprob(std::span<const std::pair<unsigned, int>> positions, const TransferData& td) {
    using ising1d::index_of;
    const auto& [v0, a0] = positions.front();
    const Vec2 m = ising1d::multiply(td.pi, ising1d::power(td.Q, v0));
    double lp = std::log(m[index_of(a0)]);
    for (std::size_t k = 1; k < positions.size(); ++k) {
        const auto& [v_prev, a_prev] = positions[k - 1];
        const auto& [v, a] = positions[k];
        const Mat2 step = ising1d::power(td.Q, v - v_prev);
        lp += std::log(step[index_of(a_prev)][index_of(a)]);
    }
    return lp;
}

/// Sum over layers (odd parts r) of the exact chain marginals.
inline double cylinder_logprob_sigma(const CylinderSpec& spec, const TransferData& td) {
    validate(spec);
    std::map<u64, std::vector<std::pair<unsigned, int>>> layers;
    const arith::PrimeBasis two;
    for (const auto& [site, spin] : spec) {
        const auto li = arith::decompose(site, two);
        layers[li.r].emplace_back(static_cast<unsigned>(li.exponents[0]), spin);
    }
    double lp = 0.0;
    for (auto& [r, positions] : layers) {
        std::sort(positions.begin(), positions.end());
        lp += layer_marginal_logprob(positions, td);
    }
    return lp;
}

inline double cylinder_logprob_sigma(const CylinderSpec& spec, const ModelParams& params) {
    return cylinder_logprob_sigma(spec, ising1d::transfer(params));
}

/// Log-probabilities of all 2^k patterns of (sigma_{i_1}, ..., sigma_{i_k});
/// bit j of the pattern index set means sigma_{i_j} = +1.
inline std::vector<double> joint_law(std::span<const u64> indices, const TransferData& td) {
    require(!indices.empty() && indices.size() <= 20, "joint_law: need 1..20 indices");
    std::vector<double> out(std::size_t{1} << indices.size());
    for (std::size_t pattern = 0; pattern < out.size(); ++pattern) {
        CylinderSpec spec;
        for (std::size_t j = 0; j < indices.size(); ++j) {
            const bool inserted = spec.emplace(indices[j], (pattern >> j & 1) ? 1 : -1).second;
            require(inserted, "joint_law: indices must be distinct");
        }
        out[pattern] = cylinder_logprob_sigma(spec, td);
    }
    return out;
}

struct InvarianceReport {
    std::vector<double> before;  // log-law of (sigma_{p_1..p_k})
    std::vector<double> after;   // log-law of (sigma_{m p_1..m p_k})
    double max_abs_diff = 0.0;   // max |P_before - P_after| over patterns
    bool invariant = false;      // max_abs_diff <= tolerance
};

inline InvarianceReport check_mult_invariance(std::span<const u64> indices, u64 m, const ModelParams& params,
                                              double tolerance = 1e-12) {
    require(m >= 1, "multiplier must be >= 1");
    const auto td = ising1d::transfer(params);
    std::vector<u64> scaled(indices.begin(), indices.end());
    for (auto& i : scaled) i *= m;
    InvarianceReport rep;
    rep.before = joint_law(indices, td);
    rep.after = joint_law(scaled, td);
    for (std::size_t k = 0; k < rep.before.size(); ++k) {
        rep.max_abs_diff = std::max(rep.max_abs_diff, std::abs(std::exp(rep.before[k]) - std::exp(rep.after[k])));
    }
    rep.invariant = rep.max_abs_diff <= tolerance;
    return rep;
}

struct SeriesValue {
    double value = 0.0;
    double trunc_err = 0.0;  // bound on the omitted tail
    unsigned terms = 0;      // layer levels p = 0..terms-1 summed
};

/// f^b = lim (1/N) log Z^b_N over the volume [1,2N].
///
/// An odd r <= N carries a chain on r 2^i, i = 0..psi2(r,N)+1: p+2 sites and
/// p+1 bonds for p = psi2. Odd r in (N,2N] are single sites; for +/- they
/// also carry the boundary term. Per unit N these have weight 1/2.
inline SeriesValue free_energy(Boundary bc, const ModelParams& params, double tol,
                               BoundaryCoupling bcc = BoundaryCoupling::coupling) {
    require(tol > 0.0, "free_energy: tol must be > 0");
    params.validate();
    const double boundary = std::abs(ising1d::detail::boundary_field(params, bc, bcc));
    // |log Z_{p+1 bonds}| <= (p+2)(log 2 + |H|) + (p+1)|K| + |B|
    const double a = std::log(2.0) + std::abs(params.field()) + std::abs(params.coupling());
    const double b = std::log(2.0) + std::abs(params.field()) + boundary;

    SeriesValue out;
    out.value = 0.5 * ising1d::log_partition(0, params, bc, bcc);
    for (unsigned p = 0;; ++p) {
        out.value += arith::koroa_weight(p) * ising1d::log_partition(p + 1, params, bc, bcc);
        out.terms = p + 1;
        out.trunc_err = arith::koroa_linear_tail(static_cast<int>(p), a, b);
        if (out.trunc_err < tol) break;
    }
    return out;
}

enum class EntropyMode { series, formula, formula_entrywise, closed_h0 };

inline double binary_entropy(double alpha) {
    return ising1d::entropy_term(alpha) + ising1d::entropy_term(1.0 - alpha);
}

/// Kolmogorov-Sinai entropy in nats.
///
/// series:            sum_k s_{k+1} / 2^(k+2) with s_{k+1} the cylinder entropy of the chain
/// formula:           H(pi)/2 - 1/2 sum pi(a) R(a,b) Q(b,c) log Q(b,c), R = 1/2 (I - Q/2)^{-1}
///                    (matrix powers of Q inside R)
/// formula_entrywise: the same with R(a,b) = 1/2 (1 - Q(a,b)/2)^{-1} entrywise
/// closed_h0:         log(2)/2 + H(alpha)/2, alpha = (1 + e^{-2 beta J})^{-1}; h = 0 only
inline SeriesValue ks_entropy(const ModelParams& params, EntropyMode mode, double tol = 1e-12) {
    params.validate();
    const auto td = ising1d::transfer(params);
    SeriesValue out;
    switch (mode) {
        case EntropyMode::series: {
            require(tol > 0.0, "ks_entropy: tol must be > 0");
            const Vec2 rows = ising1d::transition_entropies(td);
            double s = ising1d::entropy_term(td.pi[0]) + ising1d::entropy_term(td.pi[1]);
            Vec2 m = td.pi;
            for (unsigned k = 0;; ++k) {
                out.value += arith::koroa_weight(k) * s;
                out.terms = k + 1;
                // s_{j+1} <= (j+1) log 2
                out.trunc_err = arith::koroa_linear_tail(static_cast<int>(k), std::log(2.0), 0.0);
                if (out.trunc_err < tol) break;
                s += m[0] * rows[0] + m[1] * rows[1];
                m = ising1d::multiply(m, td.Q);
            }
            return out;
        }
        case EntropyMode::formula:
        case EntropyMode::formula_entrywise: {
            Mat2 r{};
            if (mode == EntropyMode::formula) {
                const Mat2 a{Vec2{1.0 - td.Q[0][0] / 2, -td.Q[0][1] / 2}, Vec2{-td.Q[1][0] / 2, 1.0 - td.Q[1][1] / 2}};
                const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
                r = {Vec2{0.5 * a[1][1] / det, -0.5 * a[0][1] / det}, Vec2{-0.5 * a[1][0] / det, 0.5 * a[0][0] / det}};
            } else {
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j) r[i][j] = 0.5 / (1.0 - td.Q[i][j] / 2);
            }
            const Vec2 rows = ising1d::transition_entropies(td);
            double cross = 0.0;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) cross += td.pi[a] * r[a][b] * rows[b];
            out.value = 0.5 * (ising1d::entropy_term(td.pi[0]) + ising1d::entropy_term(td.pi[1])) + 0.5 * cross;
            return out;
        }
        case EntropyMode::closed_h0: {
            require(params.h == 0.0, "ks_entropy: closed_h0 requires h = 0");
            const double alpha = 1.0 / (1.0 + std::exp(-2.0 * params.coupling()));
            out.value = 0.5 * std::log(2.0) + 0.5 * binary_entropy(alpha);
            return out;
        }
    }
    return out;
}

/// SplitMix64 finalizer.
constexpr u64 mix64(u64 z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based stream for one (seed, layer, replica) triple.
class LayerStream {
public:
    LayerStream(u64 seed, u64 layer, u64 replica)
        : state_(mix64(mix64(mix64(seed) ^ layer) + 0x9e3779b97f4a7c15ULL * (replica + 1))) {}

    u64 next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    /// Uniform on [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    u64 state_;
};

/// One configuration sigma_1..sigma_N (out[i-1] = sigma_i) from independent
/// (pi, Q) chains, one per odd r, each with its own stream.
inline void sample_configuration(u64 n, const TransferData& td, u64 seed, u64 replica, std::span<std::int8_t> out) {
    require(n >= 1 && out.size() >= n, "sample_configuration: bad volume");
    for (u64 r = 1; r <= n; r += 2) {
        LayerStream rng(seed, r, replica);
        int prev = rng.uniform() < td.pi[0] ? 1 : -1;
        out[r - 1] = static_cast<std::int8_t>(prev);
        for (u64 i = 2 * r; i <= n; i *= 2) {
            const int cur = rng.uniform() < td.q(prev, 1) ? 1 : -1;
            out[i - 1] = static_cast<std::int8_t>(cur);
            prev = cur;
            if (i > n / 2) break;
        }
    }
}

/// Runs body(replica) for replica in [0,count) over `workers` threads with a
/// fixed contiguous split; callers write results by replica index only.
template <class Body>
void for_replicas(u64 count, unsigned workers, Body&& body) {
    workers = std::max(1u, workers);
    if (workers == 1 || count < 2) {
        for (u64 c = 0; c < count; ++c) body(c);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const u64 chunk = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const u64 lo = w * chunk, hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body, &err = errors[w]] {
            try {
                for (u64 c = lo; c < hi; ++c) body(c);
            } catch (...) {
                err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

struct SampleBatch {
    u64 N = 0;
    u64 seed = 0;
    ModelParams params;
    std::vector<std::vector<std::int8_t>> configurations;
};

inline SampleBatch sample(u64 n, const ModelParams& params, u64 count, u64 seed, unsigned workers = 1) {
    require(n >= 1, "sample: N must be >= 1");
    const auto td = ising1d::transfer(params);
    SampleBatch batch{n, seed, params, std::vector<std::vector<std::int8_t>>(count, std::vector<std::int8_t>(n))};
    for_replicas(count, workers, [&](u64 c) { sample_configuration(n, td, seed, c, batch.configurations[c]); });
    return batch;
}

/// log mu(sigma_[1,N]) by layer factorization. Counts initial spins and
/// transitions, then combines them with the six log-probabilities.
inline double configuration_logprob(u64 n, std::span<const std::int8_t> sigma, const TransferData& td) {
    using ising1d::index_of;
    u64 first[2] = {0, 0};
    u64 trans[2][2] = {{0, 0}, {0, 0}};
    for (u64 r = 1; r <= n; r += 2) {
        int prev = sigma[r - 1];
        ++first[index_of(prev)];
        for (u64 i = 2 * r; i <= n; i *= 2) {
            const int cur = sigma[i - 1];
            ++trans[index_of(prev)][index_of(cur)];
            prev = cur;
            if (i > n / 2) break;
        }
    }
    // merge counts of equal log-probabilities so equal-probability
    // configurations give bit-identical results
    std::map<double, u64> counts;
    for (int a = 0; a < 2; ++a) {
        if (first[a]) counts[std::log(td.pi[a])] += first[a];
        for (int b = 0; b < 2; ++b) {
            if (trans[a][b]) counts[std::log(td.Q[a][b])] += trans[a][b];
        }
    }
    double lp = 0.0;
    for (const auto& [value, count] : counts) lp += static_cast<double>(count) * value;
    return lp;
}

struct Estimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    double variance = 0.0;  // sample variance of the per-replica statistic
};

/// Mean, sample variance and standard error, reduced in replica order.
inline Estimate summarize(std::span<const double> values) {
    Estimate e;
    double m = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (double x : values) {
        ++n;
        const double d = x - m;
        m += d / static_cast<double>(n);
        m2 += d * (x - m);
    }
    e.mean = m;
    e.variance = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
    e.stderr_ = n > 0 ? std::sqrt(e.variance / static_cast<double>(n)) : 0.0;
    return e;
}

/// Per-replica values of -(1/N) log mu(sigma_[1,N]) on sampled configurations.
inline std::vector<double> smb_values(u64 n, const ModelParams& params, u64 count, u64 seed, unsigned workers = 1) {
    require(n >= 1, "smb: N must be >= 1");
    const auto td = ising1d::transfer(params);
    std::vector<double> values(count);
    for_replicas(count, workers, [&](u64 c) {
        std::vector<std::int8_t> sigma(n);
        sample_configuration(n, td, seed, c, sigma);
        values[c] = -configuration_logprob(n, sigma, td) / static_cast<double>(n);
    });
    return values;
}

inline Estimate smb_estimate(u64 n, const ModelParams& params, u64 count, u64 seed, unsigned workers = 1) {
    const auto v = smb_values(n, params, count, seed, workers);
    return summarize(v);
}

}  // namespace mising::gibbs
