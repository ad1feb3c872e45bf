#include "bsim/fock.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace bsim {

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

double binomial(int n, int k) {
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
}

cplx ipow(cplx z, int n) {
    cplx r(1.0, 0.0);
    for (int k = 0; k < n; ++k) r *= z;
    return r;
}

void prune(FockState::Terms& terms) {
    std::erase_if(terms, [](const auto& kv) { return std::abs(kv.second) < kPruneThreshold; });
}

void require_unitary(const Eigen::Matrix2cd& m) {
    const double err = (m * m.adjoint() - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff();
    if (err > 1e-12) throw std::invalid_argument("mode transform is not unitary");
}

}  // namespace

std::string to_string(const ModeId& m) {
    std::string s = std::to_string(m.spatial);
    if (m.pol == Polarization::H) s += "H";
    if (m.pol == Polarization::V) s += "V";
    return s;
}

cplx BsParams::t() const { return {std::cos(theta), 0.0}; }
cplx BsParams::r() const { return std::sin(theta) * std::exp(cplx(0.0, phi)); }

int total_photons(const Occupation& counts) {
    int n = 0;
    for (int c : counts) n += c;
    return n;
}

FockState::FockState(std::vector<ModeId> modes, int cutoff)
    : FockState(std::move(modes), Terms{}, cutoff) {}

FockState::FockState(std::vector<ModeId> modes, Terms terms, int cutoff)
    : modes_(std::move(modes)), terms_(std::move(terms)), cutoff_(cutoff) {
    if (cutoff_ < 0) throw std::invalid_argument("cutoff must be non-negative");
    std::set<ModeId> seen(modes_.begin(), modes_.end());
    if (seen.size() != modes_.size()) throw std::invalid_argument("duplicate mode in state");
    for (const auto& [counts, amp] : terms_) {
        if (counts.size() != modes_.size())
            throw std::invalid_argument("occupation length does not match mode count");
        if (std::any_of(counts.begin(), counts.end(), [](int c) { return c < 0; }))
            throw std::invalid_argument("negative photon count");
        if (total_photons(counts) > cutoff_)
            throw std::out_of_range("term exceeds photon-number cutoff");
    }
    prune(terms_);
    normalized_ = std::abs(norm() * norm() - 1.0) <= kNormTolerance;
}

FockState FockState::vacuum(std::vector<ModeId> modes, int cutoff) {
    Occupation zero(modes.size(), 0);
    return basis(std::move(modes), std::move(zero), cutoff);
}

FockState FockState::basis(std::vector<ModeId> modes, Occupation counts, int cutoff) {
    Terms terms;
    terms.emplace(std::move(counts), cplx(1.0, 0.0));
    return FockState(std::move(modes), std::move(terms), cutoff);
}

bool FockState::has_mode(const ModeId& m) const {
    return std::find(modes_.begin(), modes_.end(), m) != modes_.end();
}

std::size_t FockState::index_of(const ModeId& m) const {
    auto it = std::find(modes_.begin(), modes_.end(), m);
    if (it == modes_.end()) throw std::invalid_argument("unknown mode " + to_string(m));
    return static_cast<std::size_t>(it - modes_.begin());
}

cplx FockState::amplitude(const Occupation& counts) const {
    auto it = terms_.find(counts);
    return it == terms_.end() ? cplx{} : it->second;
}

double FockState::norm() const {
    double s = 0.0;
    for (const auto& [counts, amp] : terms_) s += std::norm(amp);
    return std::sqrt(s);
}

FockState FockState::operator+(const FockState& other) const {
    if (other.modes_ != modes_) throw std::invalid_argument("mode lists differ");
    Terms sum = terms_;
    for (const auto& [counts, amp] : other.terms_) sum[counts] += amp;
    return FockState(modes_, std::move(sum), std::max(cutoff_, other.cutoff_));
}

FockState FockState::operator*(cplx factor) const {
    Terms scaled;
    for (const auto& [counts, amp] : terms_) scaled.emplace(counts, amp * factor);
    return FockState(modes_, std::move(scaled), cutoff_);
}

Eigen::Matrix2cd bs_mode_matrix(const BsParams& params) {
    const cplx t = params.t();
    const cplx r = params.r();
    Eigen::Matrix2cd m;
    m << t, r, -std::conj(r), t;
    return m;
}

FockState apply_mode_transform(const FockState& state, const ModeId& a, const ModeId& b,
                               const Eigen::Matrix2cd& m) {
    if (a == b) throw std::invalid_argument("transform needs two distinct modes");
    const std::size_t ia = state.index_of(a);
    const std::size_t ib = state.index_of(b);
    require_unitary(m);

    FockState::Terms out;
    for (const auto& [counts, amp] : state.terms()) {
        const int na = counts[ia];
        const int nb = counts[ib];
        const double prefactor = 1.0 / std::sqrt(factorial(na) * factorial(nb));
        // (m00 a† + m01 b†)^na (m10 a† + m11 b†)^nb |0,0>
        for (int j = 0; j <= na; ++j) {
            const cplx ca = binomial(na, j) * ipow(m(0, 0), j) * ipow(m(0, 1), na - j);
            if (ca == cplx{}) continue;
            for (int l = 0; l <= nb; ++l) {
                const cplx cb = binomial(nb, l) * ipow(m(1, 0), l) * ipow(m(1, 1), nb - l);
                if (cb == cplx{}) continue;
                const int out_a = j + l;
                const int out_b = na + nb - out_a;
                Occupation next = counts;
                next[ia] = out_a;
                next[ib] = out_b;
                out[next] += amp * prefactor * ca * cb *
                             std::sqrt(factorial(out_a) * factorial(out_b));
            }
        }
    }
    return FockState(state.modes(), std::move(out), state.cutoff());
}

FockState apply_beamsplitter(const FockState& state, const ModeId& a, const ModeId& b,
                             const BsParams& params) {
    return apply_mode_transform(state, a, b, bs_mode_matrix(params));
}

FockState apply_phase(const FockState& state, const ModeId& m, double phi) {
    const std::size_t im = state.index_of(m);
    FockState::Terms out;
    for (const auto& [counts, amp] : state.terms())
        out.emplace(counts, amp * std::exp(cplx(0.0, phi * counts[im])));
    return FockState(state.modes(), std::move(out), state.cutoff());
}

FockState apply_mirror(const FockState& state, const ModeId& m) {
    return apply_phase(state, m, std::numbers::pi / 2);
}

FockState apply_controlled_phase(const FockState& state, const ModeId& a, const ModeId& b,
                                 double phi) {
    if (a == b) throw std::invalid_argument("controlled phase needs two distinct modes");
    const std::size_t ia = state.index_of(a);
    const std::size_t ib = state.index_of(b);
    FockState::Terms out;
    for (const auto& [counts, amp] : state.terms())
        out.emplace(counts, amp * std::exp(cplx(0.0, phi * counts[ia] * counts[ib])));
    return FockState(state.modes(), std::move(out), state.cutoff());
}

FockState apply_pbs(const FockState& state, int in1, int in2) {
    if (in1 == in2) throw std::invalid_argument("PBS needs two distinct ports");
    for (int port : {in1, in2}) {
        if (!state.has_mode(mode_h(port)) || !state.has_mode(mode_v(port)))
            throw std::invalid_argument("PBS port " + std::to_string(port) +
                                        " lacks H and V modes");
    }
    Eigen::Matrix2cd reflect;
    reflect << 0.0, cplx(0.0, 1.0), cplx(0.0, 1.0), 0.0;
    return apply_mode_transform(state, mode_v(in1), mode_v(in2), reflect);
}

FockState creation(const FockState& state, const ModeId& m) {
    const std::size_t im = state.index_of(m);
    FockState::Terms out;
    for (const auto& [counts, amp] : state.terms()) {
        Occupation next = counts;
        next[im] += 1;
        if (total_photons(next) > state.cutoff())
            throw std::out_of_range("creation exceeds photon-number cutoff");
        out.emplace(std::move(next), amp * std::sqrt(static_cast<double>(counts[im] + 1)));
    }
    return FockState(state.modes(), std::move(out), state.cutoff());
}

FockState annihilation(const FockState& state, const ModeId& m) {
    const std::size_t im = state.index_of(m);
    FockState::Terms out;
    for (const auto& [counts, amp] : state.terms()) {
        if (counts[im] == 0) continue;
        Occupation next = counts;
        next[im] -= 1;
        out.emplace(std::move(next), amp * std::sqrt(static_cast<double>(counts[im])));
    }
    return FockState(state.modes(), std::move(out), state.cutoff());
}

cplx inner_product(const FockState& bra, const FockState& ket) {
    if (bra.modes() != ket.modes()) throw std::invalid_argument("mode lists differ");
    cplx s{};
    const auto& small = bra.terms().size() <= ket.terms().size() ? bra.terms() : ket.terms();
    const bool small_is_bra = &small == &bra.terms();
    for (const auto& [counts, amp] : small) {
        const cplx other = small_is_bra ? ket.amplitude(counts) : bra.amplitude(counts);
        s += small_is_bra ? std::conj(amp) * other : std::conj(other) * amp;
    }
    return s;
}

double fidelity(const FockState& a, const FockState& b) {
    return std::norm(inner_product(a, b));
}

Normalized normalize(const FockState& state) {
    const double n = state.norm();
    if (state.is_zero() || n == 0.0) throw std::domain_error("cannot normalize the zero vector");
    return {state * cplx(1.0 / n, 0.0), n};
}

FockState tensor(const FockState& a, const FockState& b) {
    std::vector<ModeId> modes = a.modes();
    modes.insert(modes.end(), b.modes().begin(), b.modes().end());
    const int cutoff = std::max(a.cutoff(), b.cutoff());
    FockState::Terms out;
    for (const auto& [ca, xa] : a.terms()) {
        for (const auto& [cb, xb] : b.terms()) {
            Occupation joined = ca;
            joined.insert(joined.end(), cb.begin(), cb.end());
            out.emplace(std::move(joined), xa * xb);
        }
    }
    return FockState(std::move(modes), std::move(out), cutoff);
}

}  // namespace bsim
