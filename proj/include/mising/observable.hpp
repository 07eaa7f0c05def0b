#pragma once

// Local observables f = sum_B J_B prod_{i in B} sigma_i on N = {1,2,...}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mising/error.hpp"
#include "mising/format.hpp"

namespace mising {

struct Monomial {
    std::vector<std::uint64_t> indices;  // sorted, distinct, >= 1
    double coef = 0.0;

    friend bool operator==(const Monomial&, const Monomial&) = default;
};

class Observable {
public:
    Observable() = default;

    /// Builds the canonical form: index sets sorted, spins squared away
    /// (sigma_i^2 = 1), like terms merged, zero coefficients dropped.
    explicit Observable(std::vector<Monomial> terms) {
        for (auto& t : terms) {
            require(std::isfinite(t.coef), "observable coefficient must be finite");
            std::sort(t.indices.begin(), t.indices.end());
            std::vector<std::uint64_t> reduced;
            for (std::size_t i = 0; i < t.indices.size();) {
                std::size_t j = i;
                while (j < t.indices.size() && t.indices[j] == t.indices[i]) ++j;
                require(t.indices[i] >= 1, "observable index must be >= 1");
                if ((j - i) % 2 == 1) reduced.push_back(t.indices[i]);
                i = j;
            }
            require(!reduced.empty(), "observable monomial reduces to a constant");
            t.indices = std::move(reduced);
        }
        std::sort(terms.begin(), terms.end(),
                  [](const Monomial& a, const Monomial& b) { return a.indices < b.indices; });
        for (auto& t : terms) {
            if (!terms_.empty() && terms_.back().indices == t.indices) {
                terms_.back().coef += t.coef;
            } else {
                terms_.push_back(std::move(t));
            }
        }
        std::erase_if(terms_, [](const Monomial& m) { return m.coef == 0.0; });
    }

    const std::vector<Monomial>& terms() const noexcept { return terms_; }
    bool empty() const noexcept { return terms_.empty(); }

    std::uint64_t max_index() const {
        std::uint64_t m = 1;
        for (const auto& t : terms_) m = std::max(m, t.indices.back());
        return m;
    }

    double sup_norm_bound() const {
        double s = 0.0;
        for (const auto& t : terms_) s += std::abs(t.coef);
        return s;
    }

    /// (T_i f)(sigma) = sum_B J_B prod_{b in B} sigma_{i b}; sigma[k-1] holds sigma_k.
    double shifted_value(std::uint64_t i, std::span<const std::int8_t> sigma) const {
        double v = 0.0;
        for (const auto& t : terms_) {
            int prod = 1;
            for (auto b : t.indices) prod *= sigma[i * b - 1];
            v += t.coef * prod;
        }
        return v;
    }

    /// X_N(f) = (1/N) sum_{i=1}^N T_i f. Needs sigma on [1, N * max_index()].
    double ergodic_average(std::uint64_t n, std::span<const std::int8_t> sigma) const {
        require(sigma.size() >= n * max_index(), "ergodic_average: configuration too short");
        double s = 0.0;
        for (std::uint64_t i = 1; i <= n; ++i) s += shifted_value(i, sigma);
        return s / static_cast<double>(n);
    }

    friend bool operator==(const Observable&, const Observable&) = default;

private:
    std::vector<Monomial> terms_;
};

inline std::string to_string(const Observable& f) {
    if (f.empty()) return "0";
    std::string out;
    for (std::size_t k = 0; k < f.terms().size(); ++k) {
        const auto& t = f.terms()[k];
        double c = t.coef;
        if (k > 0) {
            out += c < 0 ? " - " : " + ";
            c = std::abs(c);
        } else if (c < 0) {
            out += "-";
            c = -c;
        }
        if (c != 1.0) out += format_double(c) + "*";
        for (std::size_t j = 0; j < t.indices.size(); ++j) {
            if (j) out += "*";
            out += "s[" + std::to_string(t.indices[j]) + "]";
        }
    }
    return out;
}

}  // namespace mising
