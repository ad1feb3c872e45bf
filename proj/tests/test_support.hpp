#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <set>
#include <vector>

#include "bsim/fock.hpp"

namespace bsim::testing {

// Largest amplitude difference over the union of both supports.
inline double distance(const FockState& a, const FockState& b) {
    std::set<Occupation> keys;
    for (const auto& [k, v] : a.terms()) keys.insert(k);
    for (const auto& [k, v] : b.terms()) keys.insert(k);
    double d = 0.0;
    for (const auto& k : keys) d = std::max(d, std::abs(a.amplitude(k) - b.amplitude(k)));
    return d;
}

// Random normalized state on `modes` with at most `max_photons` in total.
inline FockState random_state(std::mt19937_64& gen, const std::vector<ModeId>& modes,
                              int max_photons, int cutoff = kDefaultCutoff) {
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<int> count(0, max_photons);
    FockState::Terms terms;
    const int n_terms = 1 + static_cast<int>(gen() % 6);
    for (int t = 0; t < n_terms; ++t) {
        Occupation occ(modes.size(), 0);
        int budget = count(gen);
        for (std::size_t m = 0; m < modes.size() && budget > 0; ++m) {
            const int c = static_cast<int>(gen() % (budget + 1));
            occ[m] = c;
            budget -= c;
        }
        terms[occ] += cplx(normal(gen), normal(gen));
    }
    return normalize(FockState(modes, std::move(terms), cutoff)).state;
}

}  // namespace bsim::testing
