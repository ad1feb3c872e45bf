#pragma once

// Discrete-variable protocols on top of the Fock engine: polarization Bell
// states and the linear-optical Bell analyzer, teleportation, entanglement
// based and measurement-device-independent QKD, photon subtraction, dual-rail
// gates, the Mach-Zehnder interferometer and the beamsplitter RNG.
//
// Spatial labels: the Bell pair lives on ports 0 (a) and 1 (b). Teleportation
// puts the input qubit on port 2 (c). QKD uses 2 and 3 for the reflected
// outputs X and Y of Alice's and Bob's beamsplitters.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "bsim/fock.hpp"
#include "bsim/measurement.hpp"

namespace bsim {

enum class BellKind { PsiPlus, PsiMinus, PhiPlus, PhiMinus };
enum class BellClass { PhiMinus, PhiPlus, Ambiguous };

const char* to_string(BellKind k);
const char* to_string(BellClass c);

inline constexpr std::array<BellKind, 4> kAllBellKinds = {
    BellKind::PsiPlus, BellKind::PsiMinus, BellKind::PhiPlus, BellKind::PhiMinus};

// Counts at detectors D1V, D2H, D3V, D4H (in that order). D1V/D4H sit behind
// the PBS on the first analyzer arm, D3V/D2H behind the PBS on the second.
using DetectorSignature = std::array<int, 4>;
inline constexpr std::array<const char*, 4> kDetectorNames = {"D1V", "D2H", "D3V", "D4H"};

struct BellOutcome {
    BellClass classification = BellClass::Ambiguous;
    DetectorSignature signature{};
};

// Counts-based: PhiMinus for {D1V, D2H} or {D3V, D4H}, PhiPlus for
// {D1V, D4H} or {D3V, D2H}, each firing exactly once; otherwise Ambiguous.
BellClass classify(const DetectorSignature& signature);

// a_H, a_V, b_H, b_V.
std::vector<ModeId> bell_modes();
FockState bell_state(BellKind kind);

// Symmetric beamsplitter between the a and b ports, per polarization.
FockState bell_transform(const FockState& state);

struct AnalyzerBranch {
    DetectorSignature signature{};
    BellClass classification = BellClass::Ambiguous;
    double probability = 0.0;
    FockState conditional;  // normalized state of the modes not on the analyzer arms
};

// PBS on each arm (into fresh spatial ports) followed by photon counting on
// the four detectors. Enumerates every signature with nonzero probability.
// The caller has already mixed the arms on the beamsplitter.
std::vector<AnalyzerBranch> analyze_arms(const FockState& state, int arm1, int arm2);

struct BellMeasurement {
    BellOutcome sampled;
    std::map<DetectorSignature, double> table;
    std::map<BellClass, double> class_probabilities;
};

// Input: the four bell_modes() with exactly two photons in every term.
BellMeasurement bell_measure(const FockState& state, std::uint64_t seed);

// ---- teleportation ---------------------------------------------------------

enum class Correction { None, Identity, PauliZ };
const char* to_string(Correction c);

// Polarization qubit alpha|H> + beta|V> on a single spatial port.
FockState polarization_qubit(cplx alpha, cplx beta, int spatial);

// Flips the sign of the V component on `spatial`.
FockState pauli_z(const FockState& state, int spatial);

struct TeleportBranch {
    DetectorSignature signature{};
    BellClass classification = BellClass::Ambiguous;
    double probability = 0.0;
    Correction correction = Correction::None;
    FockState bob_state;  // on port 1, after the correction
    double fidelity = 0.0;
};

struct TeleportResult {
    BellOutcome outcome;
    Correction correction = Correction::None;
    FockState bob_state;
    bool success = false;
    double fidelity = 0.0;
};

std::vector<TeleportBranch> teleport_dv_branches(cplx alpha, cplx beta);
double teleport_dv_success_probability(cplx alpha, cplx beta);
TeleportResult teleport_dv(cplx alpha, cplx beta, std::uint64_t seed);

// ---- QKD -------------------------------------------------------------------

enum class Basis { Rectilinear, Diagonal };
const char* to_string(Basis b);

struct QkdRoundRecord {
    std::optional<int> alice_bit;
    std::optional<int> bob_bit;
    Basis alice_basis = Basis::Rectilinear;
    Basis bob_basis = Basis::Rectilinear;
    bool kept = false;
};

struct QkdBranch {
    Occupation counts;  // over qkd_detector_modes()
    double probability = 0.0;
    QkdRoundRecord record;
};

// A_H, A_V, B_H, B_V, X_H, X_V, Y_H, Y_V.
std::vector<ModeId> qkd_detector_modes();
// |psi+> after Alice's and Bob's beamsplitters (A, X and B, Y outputs).
FockState qkd_split_state();
// qkd_split_state() after the basis change on X and Y.
FockState qkd_output_state();
std::vector<QkdBranch> qkd_branches();
QkdRoundRecord qkd_round(std::uint64_t seed);

struct Bb84Choice {
    Basis basis = Basis::Rectilinear;
    int bit = 0;
};

// H/V for the rectilinear basis, (H +- V)/sqrt2 for the diagonal one.
FockState bb84_photon(const Bb84Choice& choice, int spatial);

// Kept-round relation between Alice's and Bob's raw bits for each basis and
// announced class. True means the raw bits differ. Generated from an
// exhaustive evaluation of bell_measure on all sixteen input pairs.
bool mdi_bits_differ(Basis basis, BellClass announced);

struct MdiRound {
    BellOutcome announced;
    bool kept = false;
    std::optional<int> alice_bit;
    std::optional<int> bob_bit;  // after Bob's flip
};

MdiRound mdi_qkd_round(const Bb84Choice& alice, const Bb84Choice& bob, std::uint64_t seed);
// Exact announced-class distribution for one pair of prepared photons.
std::map<BellClass, double> mdi_class_distribution(const Bb84Choice& alice, const Bb84Choice& bob);

// ---- state engineering -----------------------------------------------------

// Mixes a single-mode state with vacuum on BS(theta, pi/2) and keeps the
// branch with exactly one photon in the ancilla output. theta in (0, pi/2).
PostSelection photon_subtract(const FockState& state, double theta);

// ---- dual-rail gates -------------------------------------------------------

struct Rails {
    ModeId rail0;
    ModeId rail1;
};

struct DualRailQubit {
    Rails rails;
    FockState state;
};

// Throws if some term does not hold exactly one photon across the rails.
void require_dual_rail(const FockState& state, const Rails& rails);
DualRailQubit make_dual_rail(cplx c0, cplx c1, const Rails& rails);

// phase(-pi/2 on rail1) . BS(pi/4, pi/2) . phase(-pi/2 on rail1)
FockState apply_hadamard(const FockState& state, const Rails& rails);
DualRailQubit hadamard_dualrail(const DualRailQubit& q);

// Hadamard gadget on the target rails, controlled-pi phase between control
// rail1 and target rail1, second Hadamard gadget. Two beamsplitters total.
FockState apply_cnot(const FockState& state, const Rails& control, const Rails& target);
FockState cnot_dualrail(const DualRailQubit& control, const DualRailQubit& target);

// Logical matrices read off by propagating the computational basis states.
Eigen::Matrix2cd hadamard_matrix();
Eigen::Matrix4cd cnot_matrix();

// BS(theta), mirror on both rails, BS(theta) applied to |1,0>.
FockState mzi(double theta);

// Exact detector distribution of one photon on a symmetric beamsplitter.
OutcomeDistribution rng_distribution();
// 0 if the detector on port 0 fires, 1 otherwise.
int rng_bit(std::uint64_t seed);

}  // namespace bsim
