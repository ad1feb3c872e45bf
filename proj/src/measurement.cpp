#include "bsim/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "bsim/rng.hpp"

namespace bsim {

namespace {

void require_normalized(const FockState& state) {
    const double n = state.norm();
    if (std::abs(n * n - 1.0) > 1e-10) throw std::invalid_argument("state is not normalized");
}

std::vector<std::size_t> indices_of(const FockState& state, std::span<const ModeId> measured) {
    std::set<ModeId> unique(measured.begin(), measured.end());
    if (unique.size() != measured.size()) throw std::invalid_argument("mode measured twice");
    std::vector<std::size_t> idx;
    idx.reserve(measured.size());
    for (const auto& m : measured) idx.push_back(state.index_of(m));
    return idx;
}

void require_single_mode(const FockState& state) {
    if (state.mode_count() != 1) throw std::invalid_argument("expected a single-mode state");
}

// Poisson weight e^{-mu} mu^n / n!, evaluated in log space.
double poisson(double mu, int n) {
    if (mu == 0.0) return n == 0 ? 1.0 : 0.0;
    return std::exp(-mu + n * std::log(mu) - std::lgamma(n + 1.0));
}

}  // namespace

double OutcomeDistribution::probability(const Occupation& counts) const {
    auto it = probabilities.find(counts);
    return it == probabilities.end() ? 0.0 : it->second;
}

double OutcomeDistribution::total() const {
    double s = 0.0;
    for (const auto& [counts, p] : probabilities) s += p;
    return s;
}

OutcomeDistribution photon_distribution(const FockState& state, std::span<const ModeId> measured) {
    require_normalized(state);
    const auto idx = indices_of(state, measured);
    OutcomeDistribution dist{{measured.begin(), measured.end()}, {}};
    for (const auto& [counts, amp] : state.terms()) {
        Occupation key(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) key[k] = counts[idx[k]];
        dist.probabilities[key] += std::norm(amp);
    }
    return dist;
}

PostSelection post_select(const FockState& state, const DetectionPattern& pattern) {
    require_normalized(state);
    std::vector<std::pair<std::size_t, int>> exact;
    std::set<ModeId> constrained;
    for (const auto& [m, count] : pattern.constraints) {
        const std::size_t i = state.index_of(m);
        if (!constrained.insert(m).second)
            throw std::invalid_argument("mode constrained twice: " + to_string(m));
        if (count) {
            if (*count < 0) throw std::invalid_argument("negative photon count in pattern");
            exact.emplace_back(i, *count);
        }
    }

    std::vector<ModeId> remaining;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < state.mode_count(); ++i) {
        const bool dropped = std::any_of(exact.begin(), exact.end(),
                                         [i](const auto& e) { return e.first == i; });
        if (!dropped) {
            remaining.push_back(state.modes()[i]);
            keep.push_back(i);
        }
    }

    FockState::Terms branch;
    double probability = 0.0;
    for (const auto& [counts, amp] : state.terms()) {
        const bool match = std::all_of(exact.begin(), exact.end(),
                                       [&](const auto& e) { return counts[e.first] == e.second; });
        if (!match) continue;
        Occupation reduced(keep.size());
        for (std::size_t k = 0; k < keep.size(); ++k) reduced[k] = counts[keep[k]];
        branch[std::move(reduced)] += amp;
        probability += std::norm(amp);
    }

    FockState conditional(remaining, std::move(branch), state.cutoff());
    if (conditional.is_zero()) return {FockState(remaining, state.cutoff()), 0.0};
    return {normalize(conditional).state, probability};
}

Occupation sample_outcome(const OutcomeDistribution& dist, std::uint64_t seed) {
    if (dist.probabilities.empty()) throw std::invalid_argument("empty distribution");
    Rng rng = make_rng(seed);
    const double u = uniform01(rng) * dist.total();
    double acc = 0.0;
    for (const auto& [counts, p] : dist.probabilities) {
        acc += p;
        if (u < acc) return counts;
    }
    return std::prev(dist.probabilities.end())->first;
}

Occupation sample_counts(const FockState& state, std::span<const ModeId> measured,
                         std::uint64_t seed) {
    return sample_outcome(photon_distribution(state, measured), seed);
}

double mean_photon_number(const FockState& state, const ModeId& m) {
    const std::size_t i = state.index_of(m);
    double s = 0.0;
    for (const auto& [counts, amp] : state.terms()) s += counts[i] * std::norm(amp);
    return s;
}

FockState number_state(int n, int cutoff) {
    if (n < 0) throw std::invalid_argument("photon number must be non-negative");
    return FockState::basis({mode(0)}, {n}, std::max(cutoff, n));
}

int coherent_cutoff(double mean_photons, double tail) {
    // Smallest N with sum_{n > N} p_n < tail; the tail is summed directly.
    for (int cutoff = 0;; ++cutoff) {
        double rest = 0.0;
        for (int n = cutoff + 1; n <= cutoff + 400; ++n) {
            const double p = poisson(mean_photons, n);
            rest += p;
            if (n > mean_photons && p < tail * 1e-6) break;
        }
        if (rest < tail) return cutoff;
    }
}

FockState coherent_state(cplx alpha, std::optional<int> cutoff) {
    const double mu = std::norm(alpha);
    const int n_max = cutoff.value_or(coherent_cutoff(mu));
    if (n_max < 0) throw std::invalid_argument("cutoff must be non-negative");
    FockState::Terms terms;
    cplx power(1.0, 0.0);
    for (int n = 0; n <= n_max; ++n) {
        if (n > 0) power *= alpha;
        terms.emplace(Occupation{n},
                      std::exp(-mu / 2 - 0.5 * std::lgamma(n + 1.0)) * power);
    }
    return normalize(FockState({mode(0)}, std::move(terms), n_max)).state;
}

double g2_direct(const FockState& state) {
    require_single_mode(state);
    require_normalized(state);
    double pairs = 0.0;
    double n_mean = 0.0;
    for (const auto& [counts, amp] : state.terms()) {
        const double n = counts[0];
        pairs += n * (n - 1) * std::norm(amp);
        n_mean += n * std::norm(amp);
    }
    if (n_mean <= 0.0) throw std::domain_error("g2 is undefined for the vacuum");
    return pairs / (n_mean * n_mean);
}

double g2_hbt(const FockState& state) {
    require_single_mode(state);
    require_normalized(state);
    const ModeId a = state.modes()[0];
    const ModeId b{a.spatial + 1, a.pol};
    const FockState split =
        apply_beamsplitter(tensor(state, FockState::vacuum({b}, state.cutoff())), a, b, {});
    double coincidences = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (const auto& [counts, amp] : split.terms()) {
        const double p = std::norm(amp);
        coincidences += counts[0] * counts[1] * p;
        na += counts[0] * p;
        nb += counts[1] * p;
    }
    if (na <= 0.0 || nb <= 0.0) throw std::domain_error("g2 is undefined for the vacuum");
    return coincidences / (na * nb);
}

double g2_zero(const FockState& state) {
    const double direct = g2_direct(state);
    const double hbt = g2_hbt(state);
    if (std::abs(direct - hbt) > 1e-10)
        throw std::logic_error("HBT and ladder-operator g2 disagree");
    return hbt;
}

double homodyne_mean(const FockState& state, double phi, double lo_amplitude) {
    require_single_mode(state);
    require_normalized(state);
    if (!(lo_amplitude > 0.0)) throw std::invalid_argument("LO amplitude must be positive");
    // <a> = sum_n conj(c_{n-1}) c_n sqrt(n)
    cplx a_mean{};
    for (const auto& [counts, amp] : state.terms()) {
        const int n = counts[0];
        if (n == 0) continue;
        a_mean += std::conj(state.amplitude({n - 1})) * amp * std::sqrt(static_cast<double>(n));
    }
    const double x = a_mean.real();
    const double y = a_mean.imag();
    const double angle = phi + std::numbers::pi / 2;
    return 2.0 * lo_amplitude * (x * std::cos(angle) + y * std::sin(angle));
}

}  // namespace bsim
