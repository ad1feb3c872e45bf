#pragma once

// Sparse multimode Fock-space states and the passive linear-optical
// elements acting on them (beamsplitter, phase shifter, mirror, PBS).
//
// States are immutable values; every operation returns a new state.

#include <complex>
#include <compare>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bsim {

using cplx = std::complex<double>;

inline constexpr double kPruneThreshold = 1e-14;
inline constexpr int kDefaultCutoff = 6;
inline constexpr double kNormTolerance = 1e-12;

enum class Polarization : std::uint8_t { None, H, V };

struct ModeId {
    int spatial = 0;
    Polarization pol = Polarization::None;

    auto operator<=>(const ModeId&) const = default;
};

inline ModeId mode(int spatial) { return {spatial, Polarization::None}; }
inline ModeId mode_h(int spatial) { return {spatial, Polarization::H}; }
inline ModeId mode_v(int spatial) { return {spatial, Polarization::V}; }

std::string to_string(const ModeId& m);

// Photon counts, one entry per mode of the owning state.
using Occupation = std::vector<int>;

// Beamsplitter parameterization t = cos(theta), r = sin(theta) e^{i phi}.
struct BsParams {
    double theta = std::numbers::pi / 4;
    double phi = std::numbers::pi / 2;

    cplx t() const;
    cplx r() const;
};

class FockState {
public:
    using Terms = std::map<Occupation, cplx>;

    // Zero vector over `modes`.
    explicit FockState(std::vector<ModeId> modes, int cutoff = kDefaultCutoff);
    FockState(std::vector<ModeId> modes, Terms terms, int cutoff = kDefaultCutoff);

    static FockState vacuum(std::vector<ModeId> modes, int cutoff = kDefaultCutoff);
    static FockState basis(std::vector<ModeId> modes, Occupation counts,
                           int cutoff = kDefaultCutoff);

    const std::vector<ModeId>& modes() const { return modes_; }
    std::size_t mode_count() const { return modes_.size(); }
    const Terms& terms() const { return terms_; }
    int cutoff() const { return cutoff_; }

    bool has_mode(const ModeId& m) const;
    // Position of `m` in the mode list; throws std::invalid_argument if absent.
    std::size_t index_of(const ModeId& m) const;

    cplx amplitude(const Occupation& counts) const;
    double norm() const;
    bool is_zero() const { return terms_.empty(); }
    // False when the squared norm differs from 1 by more than kNormTolerance
    // (ladder-operator results, post-selected branches, the zero vector).
    bool is_normalized() const { return normalized_; }

    FockState operator+(const FockState& other) const;
    FockState operator*(cplx factor) const;

private:
    std::vector<ModeId> modes_;
    Terms terms_;
    int cutoff_;
    bool normalized_ = false;
};

inline FockState operator*(cplx factor, const FockState& s) { return s * factor; }

int total_photons(const Occupation& counts);

// Rows are the images of the creation operators of the two input modes:
// U a^dag U^dag = m(0,0) a^dag + m(0,1) b^dag, U b^dag U^dag = m(1,0) a^dag + m(1,1) b^dag.
// For the beamsplitter this is [[t, r], [-conj(r), t]], which equals the
// symmetric [[t, r], [r, t]] at phi = pi/2.
Eigen::Matrix2cd bs_mode_matrix(const BsParams& params);

// Applies the passive two-mode transform `m` (must be unitary), block by
// block in total photon number, via the binomial expansion of the
// transformed creation operators.
FockState apply_mode_transform(const FockState& state, const ModeId& a, const ModeId& b,
                               const Eigen::Matrix2cd& m);

FockState apply_beamsplitter(const FockState& state, const ModeId& a, const ModeId& b,
                             const BsParams& params);

// e^{i phi n_m} on every term.
FockState apply_phase(const FockState& state, const ModeId& m, double phi);

// Single-mode mirror (t = 0, r = i): factor i per photon, rail unchanged.
FockState apply_mirror(const FockState& state, const ModeId& m);

// e^{i phi n_a n_b}; the ideal nonlinear (cross-Kerr) controlled phase.
FockState apply_controlled_phase(const FockState& state, const ModeId& a, const ModeId& b,
                                 double phi);

// Polarizing beamsplitter between spatial ports in1 and in2: H transmits
// (in1 -> in1, in2 -> in2), V reflects into the other port with phase i.
FockState apply_pbs(const FockState& state, int in1, int in2);

FockState creation(const FockState& state, const ModeId& m);
FockState annihilation(const FockState& state, const ModeId& m);

cplx inner_product(const FockState& bra, const FockState& ket);
double fidelity(const FockState& a, const FockState& b);

struct Normalized {
    FockState state;
    double norm;
};
Normalized normalize(const FockState& state);

// Product state over the concatenated mode lists (which must be disjoint).
FockState tensor(const FockState& a, const FockState& b);

}  // namespace bsim
