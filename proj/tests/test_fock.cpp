#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"

#include "bsim/fock.hpp"
#include "test_support.hpp"

using namespace bsim;
using bsim::testing::distance;
using bsim::testing::random_state;

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI{0.0, 1.0};
const std::vector<ModeId> kTwo = {mode(0), mode(1)};

FockState two_mode(std::initializer_list<std::pair<Occupation, cplx>> terms, int cutoff = kDefaultCutoff) {
    FockState::Terms t;
    for (const auto& [k, v] : terms) t[k] = v;
    return FockState(kTwo, std::move(t), cutoff);
}

// exp(i theta (a^dag b + a b^dag)) on the n-photon block, basis |k, n-k>,
// via the eigendecomposition of the real symmetric generator.
Eigen::MatrixXcd hamiltonian_block(int n, double theta) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int k = 0; k < n; ++k) {
        // a^dag b |k, n-k> = sqrt(k+1) sqrt(n-k) |k+1, n-k-1>
        const double v = std::sqrt((k + 1.0) * (n - k));
        h(k + 1, k) = v;
        h(k, k + 1) = v;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    Eigen::VectorXcd phases(n + 1);
    for (int i = 0; i <= n; ++i) phases(i) = std::exp(kI * theta * eig.eigenvalues()(i));
    const Eigen::MatrixXcd v = eig.eigenvectors().cast<cplx>();
    return v * phases.asDiagonal() * v.adjoint();
}

}  // namespace

TEST_CASE("symmetric beamsplitter mode matrix") {
    const auto m = bs_mode_matrix({kPi / 4, kPi / 2});
    const double h = 1.0 / std::numbers::sqrt2;
    CHECK(std::abs(m(0, 0) - h) < 1e-15);
    CHECK(std::abs(m(0, 1) - kI * h) < 1e-15);
    CHECK(std::abs(m(1, 0) - kI * h) < 1e-15);
    CHECK(std::abs(m(1, 1) - h) < 1e-15);
}

TEST_CASE("mode matrix limits") {
    CHECK((bs_mode_matrix({0.0, kPi / 2}) - Eigen::Matrix2cd::Identity()).norm() < 1e-15);
    Eigen::Matrix2cd mirror;
    mirror << 0.0, kI, kI, 0.0;
    CHECK((bs_mode_matrix({kPi / 2, kPi / 2}) - mirror).norm() < 1e-15);
}

TEST_CASE("mode matrix is unitary for any angle and phase") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> angle(-2 * kPi, 2 * kPi);
    for (int i = 0; i < 100; ++i) {
        const auto m = bs_mode_matrix({angle(gen), angle(gen)});
        CHECK((m * m.adjoint() - Eigen::Matrix2cd::Identity()).norm() < 1e-14);
    }
}

TEST_CASE("single photon splits into cos and i sin") {
    for (double theta : {0.1, 0.4, kPi / 4, 1.3}) {
        const auto out = apply_beamsplitter(FockState::basis(kTwo, {1, 0}), mode(0), mode(1), {theta, kPi / 2});
        const auto expected = two_mode({{{1, 0}, std::cos(theta)}, {{0, 1}, kI * std::sin(theta)}});
        CHECK(distance(out, expected) < 1e-15);
    }
}

TEST_CASE("Hong-Ou-Mandel coalescence") {
    const auto out = apply_beamsplitter(FockState::basis(kTwo, {1, 1}), mode(0), mode(1), {});
    const double h = 1.0 / std::numbers::sqrt2;
    const auto expected = two_mode({{{2, 0}, kI * h}, {{0, 2}, kI * h}});
    CHECK(distance(out, expected) < 1e-15);
    CHECK(std::abs(out.amplitude({1, 1})) < 1e-15);
}

TEST_CASE("vacuum is invariant") {
    const auto vac = FockState::vacuum(kTwo);
    CHECK(distance(apply_beamsplitter(vac, mode(0), mode(1), {0.77, 0.3}), vac) < 1e-15);
}

TEST_CASE("two photons in one port follow the binomial law") {
    for (double theta : {0.2, 0.9}) {
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        const auto out = apply_beamsplitter(FockState::basis(kTwo, {2, 0}), mode(0), mode(1), {theta, kPi / 2});
        const auto expected = two_mode(
            {{{2, 0}, c * c}, {{1, 1}, kI * std::numbers::sqrt2 * c * s}, {{0, 2}, -s * s}});
        CHECK(distance(out, expected) < 1e-15);
    }
}

TEST_CASE("blocks match the Hamiltonian exponential") {
    for (double theta : {0.13, kPi / 4, 1.1, -0.7}) {
        for (int n = 0; n <= 4; ++n) {
            const auto oracle = hamiltonian_block(n, theta);
            for (int k = 0; k <= n; ++k) {
                const auto out =
                    apply_beamsplitter(FockState::basis(kTwo, {k, n - k}), mode(0), mode(1), {theta, kPi / 2});
                for (int j = 0; j <= n; ++j)
                    CHECK(std::abs(out.amplitude({j, n - j}) - oracle(j, k)) < 1e-10);
            }
        }
    }
}

TEST_CASE("random-state properties of the beamsplitter") {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    for (int i = 0; i < 100; ++i) {
        const auto psi = random_state(gen, kTwo, 4);
        const auto phi = random_state(gen, kTwo, 4);
        const double t1 = angle(gen);
        const double t2 = angle(gen);
        const BsParams p1{t1, kPi / 2};
        const auto u_psi = apply_beamsplitter(psi, mode(0), mode(1), p1);
        const auto u_phi = apply_beamsplitter(phi, mode(0), mode(1), p1);

        CHECK(std::abs(inner_product(u_psi, u_phi) - inner_product(psi, phi)) < 1e-12);
        CHECK(std::abs(u_psi.norm() - 1.0) < 1e-12);

        std::set<int> before, after;
        for (const auto& [k, v] : psi.terms()) before.insert(total_photons(k));
        for (const auto& [k, v] : u_psi.terms()) after.insert(total_photons(k));
        CHECK(std::includes(before.begin(), before.end(), after.begin(), after.end()));

        const auto composed = apply_beamsplitter(u_psi, mode(0), mode(1), {t2, kPi / 2});
        const auto direct = apply_beamsplitter(psi, mode(0), mode(1), {t1 + t2, kPi / 2});
        CHECK(distance(composed, direct) < 1e-12);

        const auto undone = apply_beamsplitter(u_psi, mode(0), mode(1), {-t1, kPi / 2});
        CHECK(distance(undone, psi) < 1e-12);
    }
}

TEST_CASE("phase and PBS preserve inner products") {
    std::mt19937_64 gen(77);
    const std::vector<ModeId> pol = {mode_h(0), mode_v(0), mode_h(1), mode_v(1)};
    for (int i = 0; i < 50; ++i) {
        const auto psi = random_state(gen, pol, 4);
        const auto phi = random_state(gen, pol, 4);
        const cplx ref = inner_product(psi, phi);
        CHECK(std::abs(inner_product(apply_pbs(psi, 0, 1), apply_pbs(phi, 0, 1)) - ref) < 1e-12);
        CHECK(std::abs(inner_product(apply_phase(psi, mode_v(1), 0.7), apply_phase(phi, mode_v(1), 0.7)) - ref) <
              1e-12);
    }
}

TEST_CASE("beamsplitter preconditions") {
    const auto s = FockState::basis(kTwo, {1, 0});
    CHECK_THROWS_AS(apply_beamsplitter(s, mode(0), mode(0), {}), std::invalid_argument);
    CHECK_THROWS_AS(apply_beamsplitter(s, mode(0), mode(5), {}), std::invalid_argument);
    Eigen::Matrix2cd lossy;
    lossy << 0.5, 0.0, 0.0, 1.0;
    CHECK_THROWS_AS(apply_mode_transform(s, mode(0), mode(1), lossy), std::invalid_argument);
}

TEST_CASE("phase shifter") {
    const std::vector<ModeId> one = {mode(0)};
    CHECK(distance(apply_phase(FockState::basis(one, {1}), mode(0), kPi), -1.0 * FockState::basis(one, {1})) < 1e-15);
    CHECK(distance(apply_phase(FockState::vacuum(one), mode(0), 1.234), FockState::vacuum(one)) < 1e-15);
    const double h = 1.0 / std::numbers::sqrt2;
    const FockState in(one, {{{0}, h}, {{2}, h}});
    const FockState expected(one, {{{0}, h}, {{2}, -h}});
    CHECK(distance(apply_phase(in, mode(0), kPi / 2), expected) < 1e-15);
    CHECK_THROWS_AS(apply_phase(in, mode(3), 0.1), std::invalid_argument);
}

TEST_CASE("mirror multiplies by i per photon") {
    const std::vector<ModeId> one = {mode(0)};
    CHECK(distance(apply_mirror(FockState::basis(one, {1}), mode(0)), kI * FockState::basis(one, {1})) < 1e-15);
    CHECK(distance(apply_mirror(FockState::basis(one, {2}), mode(0)), -1.0 * FockState::basis(one, {2})) < 1e-15);
}

TEST_CASE("controlled phase acts on the product of occupations") {
    const auto s = FockState::basis(kTwo, {1, 1});
    CHECK(distance(apply_controlled_phase(s, mode(0), mode(1), kPi), -1.0 * s) < 1e-15);
    const auto t = FockState::basis(kTwo, {1, 0});
    CHECK(distance(apply_controlled_phase(t, mode(0), mode(1), kPi), t) < 1e-15);
    const auto u = FockState::basis(kTwo, {2, 1});
    CHECK(distance(apply_controlled_phase(u, mode(0), mode(1), 0.3), std::exp(kI * 0.6) * u) < 1e-15);
}

TEST_CASE("polarizing beamsplitter") {
    const std::vector<ModeId> pol = {mode_h(0), mode_v(0), mode_h(1), mode_v(1)};
    const auto h_in = FockState::basis(pol, {1, 0, 0, 0});
    CHECK(distance(apply_pbs(h_in, 0, 1), h_in) < 1e-15);
    const auto v_in = FockState::basis(pol, {0, 1, 0, 0});
    CHECK(distance(apply_pbs(v_in, 0, 1), kI * FockState::basis(pol, {0, 0, 0, 1})) < 1e-15);
    // Same as a full reflector on the V modes.
    const auto via_bs = apply_beamsplitter(v_in, mode_v(0), mode_v(1), {kPi / 2, kPi / 2});
    CHECK(distance(apply_pbs(v_in, 0, 1), via_bs) < 1e-15);
    const auto vac = FockState::vacuum(pol);
    CHECK(distance(apply_pbs(vac, 0, 1), vac) < 1e-15);
    CHECK_THROWS_AS(apply_pbs(h_in, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(apply_pbs(FockState::basis(kTwo, {1, 0}), 0, 1), std::invalid_argument);
}

TEST_CASE("ladder operators") {
    const std::vector<ModeId> one = {mode(0)};
    CHECK(distance(creation(FockState::vacuum(one), mode(0)), FockState::basis(one, {1})) < 1e-15);
    const auto zero = annihilation(FockState::vacuum(one), mode(0));
    CHECK(zero.is_zero());
    CHECK_FALSE(zero.is_normalized());
    const auto lowered = annihilation(FockState::basis(one, {2}), mode(0));
    CHECK(std::abs(lowered.amplitude({1}) - std::numbers::sqrt2) < 1e-15);
    CHECK_FALSE(lowered.is_normalized());
    CHECK_THROWS_AS(creation(FockState::basis(one, {2}, 2), mode(0)), std::out_of_range);
}

TEST_CASE("inner product, fidelity and normalization") {
    const auto a = FockState::basis(kTwo, {1, 0});
    const auto b = FockState::basis(kTwo, {0, 1});
    CHECK(std::abs(inner_product(a, a) - 1.0) < 1e-15);
    CHECK(std::abs(inner_product(a, b)) < 1e-15);
    const std::vector<ModeId> one = {mode(0)};
    const double h = 1.0 / std::numbers::sqrt2;
    CHECK(fidelity(FockState(one, {{{0}, h}, {{1}, h}}), FockState::basis(one, {0})) == doctest::Approx(0.5).epsilon(1e-14));
    const auto n = normalize(FockState(one, {{{0}, 3.0}, {{1}, cplx(0, 4.0)}}));
    CHECK(n.norm == doctest::Approx(5.0));
    CHECK(n.state.is_normalized());
    CHECK_THROWS_AS(normalize(FockState(one)), std::domain_error);
    CHECK_THROWS_AS(inner_product(a, FockState::basis(one, {1})), std::invalid_argument);
}

TEST_CASE("state construction is validated") {
    CHECK_THROWS_AS(FockState({mode(0), mode(0)}), std::invalid_argument);
    CHECK_THROWS_AS(FockState(kTwo, {{{1}, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(FockState(kTwo, {{{-1, 1}, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(FockState(kTwo, {{{4, 3}, 1.0}}, 6), std::out_of_range);
    const FockState tiny(kTwo, {{{1, 0}, 1.0}, {{0, 1}, 1e-15}});
    CHECK(tiny.terms().size() == 1);
}

TEST_CASE("tensor product concatenates modes") {
    const auto a = FockState::basis({mode(0)}, {1});
    const auto b = FockState::basis({mode(1)}, {2});
    const auto ab = tensor(a, b);
    CHECK(ab.modes() == kTwo);
    CHECK(std::abs(ab.amplitude({1, 2}) - 1.0) < 1e-15);
    CHECK_THROWS_AS(tensor(a, a), std::invalid_argument);
}
