#pragma once

// Reference computations by direct enumeration. These deliberately avoid the
// library's transfer-matrix code paths: chain laws come from power iteration
// on K and marginals from explicit sums over full paths.

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "mising/arith.hpp"
#include "mising/ising1d.hpp"
#include "mising/multiprime.hpp"
#include "mising/observable.hpp"

namespace mising::oracle {

using std::uint64_t;

inline int spin(uint64_t config, unsigned bit) { return (config >> bit & 1) ? 1 : -1; }

/// log sum over sigma_0..sigma_{n-1} of exp(K sum s_i s_{i+1} + H sum s_i + B s_{n-1}).
inline double log_partition(unsigned n_sites, double coupling, double field, double right_field) {
    std::vector<double> energies;
    double top = -1e300;
    for (uint64_t c = 0; c < (uint64_t{1} << n_sites); ++c) {
        double e = 0.0;
        for (unsigned i = 0; i < n_sites; ++i) {
            e += field * spin(c, i);
            if (i + 1 < n_sites) e += coupling * spin(c, i) * spin(c, i + 1);
        }
        e += right_field * spin(c, n_sites - 1);
        energies.push_back(e);
        top = std::max(top, e);
    }
    double z = 0.0;
    for (double e : energies) z += std::exp(e - top);
    return top + std::log(z);
}

/// Half-infinite chain law from the free left end: pi(a) ~ e^{Ha} v(a) and
/// Q(a,b) = K(a,b) v(b) / (K v)(a), with v = lim K^L 1 by power iteration.
struct Chain {
    double pi[2];     // index 0 = +1
    double Q[2][2];
};

inline Chain chain(double coupling, double field) {
    double k[2][2];
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const int sa = a == 0 ? 1 : -1, sb = b == 0 ? 1 : -1;
            k[a][b] = std::exp(coupling * sa * sb + field * sb);
        }
    double v[2] = {1.0, 1.0};
    for (int it = 0; it < 20000; ++it) {
        const double n0 = k[0][0] * v[0] + k[0][1] * v[1];
        const double n1 = k[1][0] * v[0] + k[1][1] * v[1];
        v[0] = n0 / (n0 + n1);
        v[1] = n1 / (n0 + n1);
    }
    Chain c{};
    const double p0 = std::exp(field) * v[0], p1 = std::exp(-field) * v[1];
    c.pi[0] = p0 / (p0 + p1);
    c.pi[1] = p1 / (p0 + p1);
    for (int a = 0; a < 2; ++a) {
        const double kv = k[a][0] * v[0] + k[a][1] * v[1];
        for (int b = 0; b < 2; ++b) c.Q[a][b] = k[a][b] * v[b] / kv;
    }
    return c;
}

inline Chain chain(const ising1d::ModelParams& p) { return chain(p.beta * p.J, p.beta * p.h); }

inline int idx(int s) { return s > 0 ? 0 : 1; }

/// Probability of a full path tau_0..tau_{n-1} (bit i of `path` set = +1).
inline double path_probability(const Chain& c, uint64_t path, unsigned n) {
    double p = c.pi[idx(spin(path, 0))];
    for (unsigned i = 1; i < n; ++i) p *= c.Q[idx(spin(path, i - 1))][idx(spin(path, i))];
    return p;
}

/// Marginal law of tau at `positions` (increasing), summing every full path
/// on 0..max position. Returned vector is indexed by the pattern bits.
inline std::vector<double> line_marginal(const Chain& c, const std::vector<unsigned>& positions) {
    const unsigned n = positions.back() + 1;
    std::vector<double> law(std::size_t{1} << positions.size(), 0.0);
    for (uint64_t path = 0; path < (uint64_t{1} << n); ++path) {
        std::size_t pattern = 0;
        for (std::size_t j = 0; j < positions.size(); ++j) pattern |= ((path >> positions[j]) & 1u) << j;
        law[pattern] += path_probability(c, path, n);
    }
    return law;
}

/// Exact law of (sigma_{i_1}, ..., sigma_{i_k}) on N by grouping sites into
/// 2-adic layers and brute-forcing each layer's marginal.
inline std::vector<double> sigma_joint_law(const std::vector<uint64_t>& indices, const ising1d::ModelParams& params) {
    const Chain c = chain(params);
    std::map<uint64_t, std::vector<std::pair<unsigned, std::size_t>>> layers;
    for (std::size_t j = 0; j < indices.size(); ++j) {
        uint64_t r = indices[j];
        unsigned v = 0;
        while (r % 2 == 0) {
            r /= 2;
            ++v;
        }
        layers[r].push_back({v, j});
    }
    std::vector<double> law(std::size_t{1} << indices.size(), 1.0);
    for (auto& [r, members] : layers) {
        std::sort(members.begin(), members.end());
        std::vector<unsigned> pos;
        for (auto& m : members) pos.push_back(m.first);
        const auto marg = line_marginal(c, pos);
        for (std::size_t pattern = 0; pattern < law.size(); ++pattern) {
            std::size_t sub = 0;
            for (std::size_t k = 0; k < members.size(); ++k) sub |= ((pattern >> members[k].second) & 1u) << k;
            law[pattern] *= marg[sub];
        }
    }
    return law;
}

/// log E exp(t sum_{j=0}^{k} f*(theta_j tau)) over all 2^(k+w) full paths.
inline double tilted_pressure(unsigned k, const ising1d::FirstLayerObservable& fstar, double t,
                              const ising1d::ModelParams& params) {
    const Chain c = chain(params);
    const unsigned n = k + fstar.width();
    double z = 0.0;
    for (uint64_t path = 0; path < (uint64_t{1} << n); ++path) {
        double s = 0.0;
        for (unsigned j = 0; j <= k; ++j) s += fstar.evaluate(path >> j);
        z += path_probability(c, path, n) * std::exp(t * s);
    }
    return std::log(z);
}

/// Region pressure by enumerating every configuration of the dependence set;
/// probabilities are products over lines of brute-force line marginals.
inline double region_pressure(const arith::Region& region, const multiprime::LatticeObservable& fstar, double t,
                              const multiprime::ExtendedModel& model) {
    const Chain c = chain(model.params);
    const auto sites = multiprime::dependence_set(region, fstar);
    auto site_of = [&](const arith::Point& x) {
        return static_cast<std::size_t>(std::lower_bound(sites.begin(), sites.end(), x) - sites.begin());
    };
    std::map<arith::Point, std::vector<std::pair<unsigned, std::size_t>>> lines;
    for (std::size_t s = 0; s < sites.size(); ++s) {
        auto key = sites[s];
        const unsigned v = static_cast<unsigned>(key[model.base_axis]);
        key[model.base_axis] = 0;
        lines[key].push_back({v, s});
    }
    std::vector<std::vector<std::pair<unsigned, std::size_t>>> members;
    std::vector<std::vector<double>> marginals;
    for (auto& [key, m] : lines) {
        std::sort(m.begin(), m.end());
        std::vector<unsigned> pos;
        for (auto& e : m) pos.push_back(e.first);
        members.push_back(m);
        marginals.push_back(line_marginal(c, pos));
    }
    std::vector<std::vector<std::size_t>> term_sites;
    std::vector<double> term_coef;
    for (const auto& x : region.points())
        for (const auto& term : fstar.terms) {
            std::vector<std::size_t> ts;
            for (const auto& o : term.offsets) ts.push_back(site_of(multiprime::add(x, o)));
            term_sites.push_back(ts);
            term_coef.push_back(term.coef);
        }
    double z = 0.0;
    for (uint64_t config = 0; config < (uint64_t{1} << sites.size()); ++config) {
        double p = 1.0;
        for (std::size_t l = 0; l < members.size(); ++l) {
            std::size_t sub = 0;
            for (std::size_t k = 0; k < members[l].size(); ++k) sub |= ((config >> members[l][k].second) & 1u) << k;
            p *= marginals[l][sub];
        }
        double s = 0.0;
        for (std::size_t q = 0; q < term_sites.size(); ++q) {
            int prod = 1;
            for (auto site : term_sites[q]) prod *= spin(config, static_cast<unsigned>(site));
            s += term_coef[q] * prod;
        }
        z += p * std::exp(t * s);
    }
    return std::log(z);
}

/// (1/N) log E exp(t sum_{i<=N} T_i f) by enumerating sigma on [1, N * max index]
/// under the exact layer-product law on N.
inline double finite_pressure_sigma(const Observable& f, double t, uint64_t n, const ising1d::ModelParams& params) {
    const uint64_t volume = n * f.max_index();
    const Chain c = chain(params);
    double z = 0.0;
    std::vector<std::int8_t> sigma(volume);
    for (uint64_t config = 0; config < (uint64_t{1} << volume); ++config) {
        double p = 1.0;
        for (uint64_t i = 1; i <= volume; ++i) sigma[i - 1] = static_cast<std::int8_t>(spin(config, static_cast<unsigned>(i - 1)));
        for (uint64_t r = 1; r <= volume; r += 2) {
            p *= c.pi[idx(sigma[r - 1])];
            for (uint64_t i = r; 2 * i <= volume; i *= 2) p *= c.Q[idx(sigma[i - 1])][idx(sigma[2 * i - 1])];
        }
        double s = 0.0;
        for (uint64_t i = 1; i <= n; ++i) s += f.shifted_value(i, sigma);
        z += p * std::exp(t * s);
    }
    return std::log(z) / static_cast<double>(n);
}

/// Smooth numbers <= limit by trial division of every integer.
inline std::vector<uint64_t> smooth_by_trial_division(const std::vector<uint64_t>& primes, uint64_t limit) {
    std::vector<uint64_t> out;
    for (uint64_t n = 1; n <= limit; ++n) {
        uint64_t m = n;
        for (auto p : primes)
            while (m % p == 0) m /= p;
        if (m == 1) out.push_back(n);
    }
    return out;
}

}  // namespace mising::oracle
