#include "bsim/dv_protocols.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include "bsim/rng.hpp"

namespace bsim {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

const BsParams kSymmetric{std::numbers::pi / 4, std::numbers::pi / 2};

int max_spatial(const FockState& state) {
    int m = 0;
    for (const auto& id : state.modes()) m = std::max(m, id.spatial);
    return m;
}

// H -> (H + V)/sqrt2, V -> (H - V)/sqrt2 on one spatial port.
FockState rectilinear_to_diagonal(const FockState& state, int spatial) {
    Eigen::Matrix2cd m;
    m << kInvSqrt2, kInvSqrt2, kInvSqrt2, -kInvSqrt2;
    return apply_mode_transform(state, mode_h(spatial), mode_v(spatial), m);
}

template <typename Branch>
const Branch& pick_branch(const std::vector<Branch>& branches, std::uint64_t seed) {
    if (branches.empty()) throw std::logic_error("no outcome branches");
    Rng rng = make_rng(seed);
    double total = 0.0;
    for (const auto& b : branches) total += b.probability;
    const double u = uniform01(rng) * total;
    double acc = 0.0;
    for (const auto& b : branches) {
        acc += b.probability;
        if (u < acc) return b;
    }
    return branches.back();
}

void require_bit(int bit) {
    if (bit != 0 && bit != 1) throw std::invalid_argument("bit must be 0 or 1");
}

}  // namespace

const char* to_string(BellKind k) {
    switch (k) {
        case BellKind::PsiPlus: return "psi+";
        case BellKind::PsiMinus: return "psi-";
        case BellKind::PhiPlus: return "phi+";
        case BellKind::PhiMinus: return "phi-";
    }
    return "?";
}

const char* to_string(BellClass c) {
    switch (c) {
        case BellClass::PhiMinus: return "PhiMinus";
        case BellClass::PhiPlus: return "PhiPlus";
        case BellClass::Ambiguous: return "Ambiguous";
    }
    return "?";
}

const char* to_string(Correction c) {
    switch (c) {
        case Correction::None: return "none";
        case Correction::Identity: return "identity";
        case Correction::PauliZ: return "pauli_z";
    }
    return "?";
}

const char* to_string(Basis b) {
    return b == Basis::Rectilinear ? "rectilinear" : "diagonal";
}

BellClass classify(const DetectorSignature& s) {
    const auto only = [&](int i, int j) {
        for (int k = 0; k < 4; ++k) {
            const int want = (k == i || k == j) ? 1 : 0;
            if (s[k] != want) return false;
        }
        return true;
    };
    // indices: 0 D1V, 1 D2H, 2 D3V, 3 D4H
    if (only(0, 1) || only(2, 3)) return BellClass::PhiMinus;
    if (only(0, 3) || only(2, 1)) return BellClass::PhiPlus;
    return BellClass::Ambiguous;
}

std::vector<ModeId> bell_modes() { return {mode_h(0), mode_v(0), mode_h(1), mode_v(1)}; }

FockState bell_state(BellKind kind) {
    // Occupations over a_H, a_V, b_H, b_V.
    FockState::Terms terms;
    switch (kind) {
        case BellKind::PsiPlus:
        case BellKind::PsiMinus:
            terms[{1, 0, 1, 0}] = kInvSqrt2;
            terms[{0, 1, 0, 1}] = kind == BellKind::PsiPlus ? kInvSqrt2 : -kInvSqrt2;
            break;
        case BellKind::PhiPlus:
        case BellKind::PhiMinus:
            terms[{1, 0, 0, 1}] = kInvSqrt2;
            terms[{0, 1, 1, 0}] = kind == BellKind::PhiPlus ? kInvSqrt2 : -kInvSqrt2;
            break;
    }
    return FockState(bell_modes(), std::move(terms));
}

FockState bell_transform(const FockState& state) {
    if (state.modes() != bell_modes())
        throw std::invalid_argument("expected modes a_H, a_V, b_H, b_V");
    FockState out = apply_beamsplitter(state, mode_h(0), mode_h(1), kSymmetric);
    return apply_beamsplitter(out, mode_v(0), mode_v(1), kSymmetric);
}

std::vector<AnalyzerBranch> analyze_arms(const FockState& state, int arm1, int arm2) {
    const int port1 = max_spatial(state) + 1;
    const int port2 = port1 + 1;
    FockState routed = tensor(
        state, FockState::vacuum({mode_h(port1), mode_v(port1), mode_h(port2), mode_v(port2)},
                                 state.cutoff()));
    routed = apply_pbs(routed, arm1, port1);
    routed = apply_pbs(routed, arm2, port2);

    const std::array<ModeId, 4> detectors = {mode_v(port1), mode_h(arm2), mode_v(port2),
                                             mode_h(arm1)};
    const std::array<ModeId, 4> dark = {mode_v(arm1), mode_h(port1), mode_v(arm2),
                                        mode_h(port2)};

    const auto dist = photon_distribution(routed, detectors);
    std::vector<AnalyzerBranch> branches;
    for (const auto& [counts, p] : dist.probabilities) {
        if (p < 1e-15) continue;
        DetectionPattern pattern;
        DetectorSignature sig{};
        for (int k = 0; k < 4; ++k) {
            sig[k] = counts[k];
            pattern.constraints.emplace_back(detectors[k], counts[k]);
        }
        for (const auto& m : dark) pattern.constraints.emplace_back(m, 0);
        auto selected = post_select(routed, pattern);
        if (std::abs(selected.probability - p) > 1e-12)
            throw std::logic_error("photons left in unmonitored analyzer ports");
        branches.push_back({sig, classify(sig), selected.probability, std::move(selected.state)});
    }
    return branches;
}

BellMeasurement bell_measure(const FockState& state, std::uint64_t seed) {
    if (state.modes() != bell_modes())
        throw std::invalid_argument("expected modes a_H, a_V, b_H, b_V");
    for (const auto& [counts, amp] : state.terms()) {
        if (total_photons(counts) != 2)
            throw std::invalid_argument("Bell measurement needs exactly two photons");
    }
    const auto branches = analyze_arms(bell_transform(state), 0, 1);

    BellMeasurement result;
    for (const auto& b : branches) {
        result.table[b.signature] += b.probability;
        result.class_probabilities[b.classification] += b.probability;
    }
    const auto& picked = pick_branch(branches, seed);
    result.sampled = {picked.classification, picked.signature};
    return result;
}

FockState polarization_qubit(cplx alpha, cplx beta, int spatial) {
    FockState::Terms terms;
    terms[{1, 0}] = alpha;
    terms[{0, 1}] = beta;
    return FockState({mode_h(spatial), mode_v(spatial)}, std::move(terms));
}

FockState pauli_z(const FockState& state, int spatial) {
    return apply_phase(state, mode_v(spatial), std::numbers::pi);
}

std::vector<TeleportBranch> teleport_dv_branches(cplx alpha, cplx beta) {
    if (std::abs(std::norm(alpha) + std::norm(beta) - 1.0) > 1e-12)
        throw std::invalid_argument("|alpha|^2 + |beta|^2 must be 1");

    constexpr int c = 2;
    FockState state = tensor(polarization_qubit(alpha, beta, c), bell_state(BellKind::PhiMinus));
    state = apply_beamsplitter(state, mode_h(c), mode_h(0), kSymmetric);
    state = apply_beamsplitter(state, mode_v(c), mode_v(0), kSymmetric);

    const FockState target = polarization_qubit(alpha, beta, 1);
    std::vector<TeleportBranch> out;
    for (auto& b : analyze_arms(state, c, 0)) {
        Correction corr = Correction::None;
        FockState bob = b.conditional;
        if (b.classification == BellClass::PhiMinus) {
            corr = Correction::Identity;
        } else if (b.classification == BellClass::PhiPlus) {
            corr = Correction::PauliZ;
            bob = pauli_z(bob, 1);
        }
        const double f = fidelity(bob, target);
        out.push_back({b.signature, b.classification, b.probability, corr, std::move(bob), f});
    }
    return out;
}

double teleport_dv_success_probability(cplx alpha, cplx beta) {
    double p = 0.0;
    for (const auto& b : teleport_dv_branches(alpha, beta))
        if (b.classification != BellClass::Ambiguous) p += b.probability;
    return p;
}

TeleportResult teleport_dv(cplx alpha, cplx beta, std::uint64_t seed) {
    const auto branches = teleport_dv_branches(alpha, beta);
    const auto& b = pick_branch(branches, seed);
    return {{b.classification, b.signature},
            b.correction,
            b.bob_state,
            b.classification != BellClass::Ambiguous,
            b.fidelity};
}

std::vector<ModeId> qkd_detector_modes() {
    return {mode_h(0), mode_v(0), mode_h(1), mode_v(1),
            mode_h(2), mode_v(2), mode_h(3), mode_v(3)};
}

FockState qkd_split_state() {
    constexpr int x = 2;
    constexpr int y = 3;
    FockState state = tensor(bell_state(BellKind::PsiPlus),
                             FockState::vacuum({mode_h(x), mode_v(x), mode_h(y), mode_v(y)}));
    for (auto pol : {Polarization::H, Polarization::V}) {
        state = apply_beamsplitter(state, {0, pol}, {x, pol}, kSymmetric);
        state = apply_beamsplitter(state, {1, pol}, {y, pol}, kSymmetric);
    }
    return state;
}

FockState qkd_output_state() {
    return rectilinear_to_diagonal(rectilinear_to_diagonal(qkd_split_state(), 2), 3);
}

std::vector<QkdBranch> qkd_branches() {
    const auto modes = qkd_detector_modes();
    const auto dist = photon_distribution(qkd_output_state(), modes);
    std::vector<QkdBranch> out;
    for (const auto& [counts, p] : dist.probabilities) {
        // counts: A_H A_V B_H B_V X_H X_V Y_H Y_V
        QkdRoundRecord rec;
        const bool alice_in_a = counts[0] + counts[1] == 1;
        const bool bob_in_b = counts[2] + counts[3] == 1;
        rec.alice_basis = alice_in_a ? Basis::Rectilinear : Basis::Diagonal;
        rec.bob_basis = bob_in_b ? Basis::Rectilinear : Basis::Diagonal;
        rec.kept = rec.alice_basis == rec.bob_basis;
        if (rec.kept) {
            rec.alice_bit = alice_in_a ? counts[1] : counts[5];
            rec.bob_bit = bob_in_b ? counts[3] : counts[7];
        }
        out.push_back({counts, p, rec});
    }
    return out;
}

QkdRoundRecord qkd_round(std::uint64_t seed) {
    const auto branches = qkd_branches();
    return pick_branch(branches, seed).record;
}

FockState bb84_photon(const Bb84Choice& choice, int spatial) {
    require_bit(choice.bit);
    if (choice.basis == Basis::Rectilinear)
        return choice.bit == 0 ? polarization_qubit(1.0, 0.0, spatial)
                               : polarization_qubit(0.0, 1.0, spatial);
    return polarization_qubit(kInvSqrt2, choice.bit == 0 ? kInvSqrt2 : -kInvSqrt2, spatial);
}

bool mdi_bits_differ(Basis basis, BellClass announced) {
    if (announced == BellClass::Ambiguous)
        throw std::invalid_argument("ambiguous rounds carry no bit relation");
    if (basis == Basis::Rectilinear) return true;
    return announced == BellClass::PhiMinus;
}

std::map<BellClass, double> mdi_class_distribution(const Bb84Choice& alice, const Bb84Choice& bob) {
    const FockState state = tensor(bb84_photon(alice, 0), bb84_photon(bob, 1));
    return bell_measure(state, 0).class_probabilities;
}

MdiRound mdi_qkd_round(const Bb84Choice& alice, const Bb84Choice& bob, std::uint64_t seed) {
    const FockState state = tensor(bb84_photon(alice, 0), bb84_photon(bob, 1));
    const auto bm = bell_measure(state, seed);
    MdiRound round;
    round.announced = bm.sampled;
    const bool unambiguous = bm.sampled.classification != BellClass::Ambiguous;
    round.kept = unambiguous && alice.basis == bob.basis;
    if (round.kept) {
        round.alice_bit = alice.bit;
        // Bob always flips; where the table says the raw bits agree the
        // announcement calls for a second flip.
        const int extra = mdi_bits_differ(bob.basis, bm.sampled.classification) ? 0 : 1;
        round.bob_bit = bob.bit ^ 1 ^ extra;
    }
    return round;
}

PostSelection photon_subtract(const FockState& state, double theta) {
    if (state.mode_count() != 1) throw std::invalid_argument("expected a single-mode state");
    if (!(theta > 0.0 && theta < std::numbers::pi / 2))
        throw std::invalid_argument("theta must lie in (0, pi/2)");
    const ModeId in = state.modes()[0];
    const ModeId ancilla{in.spatial + 1, in.pol};
    const FockState mixed = apply_beamsplitter(
        tensor(state, FockState::vacuum({ancilla}, state.cutoff())), in, ancilla,
        {theta, std::numbers::pi / 2});
    DetectionPattern herald;
    herald.constraints.emplace_back(ancilla, 1);
    auto selected = post_select(mixed, herald);
    if (selected.probability == 0.0) throw std::domain_error("photon subtraction never heralds");
    return selected;
}

void require_dual_rail(const FockState& state, const Rails& rails) {
    if (rails.rail0 == rails.rail1) throw std::invalid_argument("rails must differ");
    const std::size_t i0 = state.index_of(rails.rail0);
    const std::size_t i1 = state.index_of(rails.rail1);
    for (const auto& [counts, amp] : state.terms()) {
        if (counts[i0] + counts[i1] != 1)
            throw std::invalid_argument("dual-rail qubit must hold exactly one photon");
    }
}

DualRailQubit make_dual_rail(cplx c0, cplx c1, const Rails& rails) {
    if (std::abs(std::norm(c0) + std::norm(c1) - 1.0) > 1e-12)
        throw std::invalid_argument("qubit amplitudes must be normalized");
    FockState::Terms terms;
    terms[{1, 0}] = c0;
    terms[{0, 1}] = c1;
    return {rails, FockState({rails.rail0, rails.rail1}, std::move(terms))};
}

FockState apply_hadamard(const FockState& state, const Rails& rails) {
    require_dual_rail(state, rails);
    FockState out = apply_phase(state, rails.rail1, -std::numbers::pi / 2);
    out = apply_beamsplitter(out, rails.rail0, rails.rail1, kSymmetric);
    return apply_phase(out, rails.rail1, -std::numbers::pi / 2);
}

DualRailQubit hadamard_dualrail(const DualRailQubit& q) {
    return {q.rails, apply_hadamard(q.state, q.rails)};
}

FockState apply_cnot(const FockState& state, const Rails& control, const Rails& target) {
    const std::set<ModeId> all = {control.rail0, control.rail1, target.rail0, target.rail1};
    if (all.size() != 4) throw std::invalid_argument("control and target rails overlap");
    require_dual_rail(state, control);
    FockState out = apply_hadamard(state, target);
    out = apply_controlled_phase(out, control.rail1, target.rail1, std::numbers::pi);
    return apply_hadamard(out, target);
}

FockState cnot_dualrail(const DualRailQubit& control, const DualRailQubit& target) {
    return apply_cnot(tensor(control.state, target.state), control.rails, target.rails);
}

Eigen::Matrix2cd hadamard_matrix() {
    const Rails rails{mode(0), mode(1)};
    Eigen::Matrix2cd m;
    for (int k = 0; k < 2; ++k) {
        const auto q = make_dual_rail(k == 0 ? 1.0 : 0.0, k == 1 ? 1.0 : 0.0, rails);
        const FockState out = apply_hadamard(q.state, rails);
        m(0, k) = out.amplitude({1, 0});
        m(1, k) = out.amplitude({0, 1});
    }
    return m;
}

Eigen::Matrix4cd cnot_matrix() {
    const Rails control{mode(0), mode(1)};
    const Rails target{mode(2), mode(3)};
    const auto occupation = [](int c, int t) {
        return Occupation{1 - c, c, 1 - t, t};
    };
    const std::vector<ModeId> modes = {mode(0), mode(1), mode(2), mode(3)};
    Eigen::Matrix4cd m;
    for (int col = 0; col < 4; ++col) {
        const FockState in = FockState::basis(modes, occupation(col / 2, col % 2));
        const FockState out = apply_cnot(in, control, target);
        for (int row = 0; row < 4; ++row) m(row, col) = out.amplitude(occupation(row / 2, row % 2));
    }
    return m;
}

FockState mzi(double theta) {
    if (!(theta >= 0.0 && theta <= std::numbers::pi / 2))
        throw std::invalid_argument("theta must lie in [0, pi/2]");
    const BsParams bs{theta, std::numbers::pi / 2};
    FockState s = FockState::basis({mode(0), mode(1)}, {1, 0});
    s = apply_beamsplitter(s, mode(0), mode(1), bs);
    s = apply_mirror(apply_mirror(s, mode(0)), mode(1));
    return apply_beamsplitter(s, mode(0), mode(1), bs);
}

OutcomeDistribution rng_distribution() {
    const FockState s =
        apply_beamsplitter(FockState::basis({mode(0), mode(1)}, {1, 0}), mode(0), mode(1), kSymmetric);
    const std::vector<ModeId> measured = {mode(0), mode(1)};
    return photon_distribution(s, measured);
}

int rng_bit(std::uint64_t seed) {
    const Occupation counts = sample_outcome(rng_distribution(), seed);
    return counts[0] == 1 ? 0 : 1;
}

}  // namespace bsim
