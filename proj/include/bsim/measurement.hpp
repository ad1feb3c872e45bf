#pragma once

// Photon counting, post-selection, seeded sampling, g2(0) and the
// strong-local-oscillator homodyne mean.
//
// Quadratures here follow X = (a + a^dag)/2, Y = (a - a^dag)/2i (vacuum
// variance 1/4). The Gaussian module uses x = sqrt(2) X instead.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "bsim/fock.hpp"

namespace bsim {

// Exact photon count per constrained mode; std::nullopt is a wildcard that
// keeps the mode in the conditional state.
struct DetectionPattern {
    std::vector<std::pair<ModeId, std::optional<int>>> constraints;
};

struct OutcomeDistribution {
    std::vector<ModeId> modes;
    std::map<Occupation, double> probabilities;

    double probability(const Occupation& counts) const;
    double total() const;
};

OutcomeDistribution photon_distribution(const FockState& state, std::span<const ModeId> measured);

struct PostSelection {
    FockState state;  // over the modes without an exact count constraint
    double probability;
};

PostSelection post_select(const FockState& state, const DetectionPattern& pattern);

// One outcome drawn from `dist`; the same seed always gives the same outcome.
Occupation sample_outcome(const OutcomeDistribution& dist, std::uint64_t seed);
Occupation sample_counts(const FockState& state, std::span<const ModeId> measured,
                         std::uint64_t seed);

double mean_photon_number(const FockState& state, const ModeId& m);

// Single-mode helpers. coherent_state picks the smallest cutoff whose
// truncated tail mass is below 1e-10 unless one is given, then renormalizes.
FockState number_state(int n, int cutoff = kDefaultCutoff);
FockState coherent_state(cplx alpha, std::optional<int> cutoff = std::nullopt);
int coherent_cutoff(double mean_photons, double tail = 1e-10);

// <a^dag a^dag a a> / <a^dag a>^2 for a single-mode state.
double g2_direct(const FockState& state);
// <n_a' n_b'> / (<n_a'><n_b'>) after splitting the mode with vacuum on a
// symmetric beamsplitter.
double g2_hbt(const FockState& state);
// Both routes; throws std::logic_error if they disagree beyond 1e-10.
double g2_zero(const FockState& state);

// 2 |alpha_LO| <X cos(phi + pi/2) + Y sin(phi + pi/2)>.
double homodyne_mean(const FockState& state, double phi, double lo_amplitude);

}  // namespace bsim
