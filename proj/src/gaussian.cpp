#include "bsim/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

#include "bsim/rng.hpp"
#include "parallel.hpp"

namespace bsim {

namespace {

using Quad = boost::multiprecision::cpp_bin_float_quad;
using QuadMatrix = Eigen::Matrix<Quad, Eigen::Dynamic, Eigen::Dynamic>;

double scale_of(const Eigen::MatrixXd& m) { return std::max(1.0, m.cwiseAbs().maxCoeff()); }

void require_symmetric(const Eigen::MatrixXd& cov) {
    if (cov.rows() != cov.cols() || cov.rows() % 2 != 0 || cov.rows() == 0)
        throw std::invalid_argument("covariance must be square with even, nonzero size");
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale_of(cov))
        throw std::invalid_argument("covariance is not symmetric");
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> select(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m, const std::vector<int>& rows,
    const std::vector<int>& cols) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
    return out;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m) {
    return Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(m).pseudoInverse();
}

// Matrix L with L L^T = cov; falls back to the eigen square root for
// singular covariances.
Eigen::MatrixXd sampling_factor(const Eigen::MatrixXd& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal();
}

Eigen::VectorXd standard_normals(Rng& rng, Eigen::Index n) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
    return z;
}

template <typename T>
Eigen::Matrix<T, 2, 2> phase_matrix(T phi) {
    using std::cos;
    using std::sin;
    Eigen::Matrix<T, 2, 2> m;
    m << cos(phi), sin(phi), -sin(phi), cos(phi);
    return m;
}

template <typename T>
Eigen::Matrix<T, 4, 4> bs_matrix(T theta, T phi) {
    using std::cos;
    using std::sin;
    const Eigen::Matrix<T, 2, 2> sp = phase_matrix<T>(phi);
    const Eigen::Matrix<T, 2, 2> id = Eigen::Matrix<T, 2, 2>::Identity();
    const T c = cos(theta);
    const T s = sin(theta);
    Eigen::Matrix<T, 4, 4> m;
    m << c * id, s * sp, -s * sp.transpose(), c * id;
    return m;
}

}  // namespace

const char* to_string(Quadrature q) { return q == Quadrature::X ? "x" : "p"; }

GaussianState::GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
    require_symmetric(cov_);
    if (mean_.size() != cov_.rows()) throw std::invalid_argument("mean and covariance sizes differ");
    cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
    const auto report = is_physical(cov_);
    if (!report.physical)
        throw std::invalid_argument("covariance violates the uncertainty principle");
}

GaussianState GaussianState::vacuum(int n_modes) {
    if (n_modes < 1) throw std::invalid_argument("need at least one mode");
    return {Eigen::VectorXd::Zero(2 * n_modes), 0.5 * Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes)};
}

Eigen::Matrix2d GaussianState::block(int i, int j) const {
    if (i < 0 || j < 0 || i >= n_modes() || j >= n_modes())
        throw std::invalid_argument("mode index out of range");
    return cov_.block<2, 2>(2 * i, 2 * j);
}

GaussianState tensor(const GaussianState& a, const GaussianState& b) {
    const auto na = a.mean().size();
    const auto nb = b.mean().size();
    Eigen::VectorXd mean(na + nb);
    mean << a.mean(), b.mean();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(na + nb, na + nb);
    cov.topLeftCorner(na, na) = a.cov();
    cov.bottomRightCorner(nb, nb) = b.cov();
    return {std::move(mean), std::move(cov)};
}

Eigen::MatrixXd omega(int n_modes) {
    if (n_modes < 1) throw std::invalid_argument("need at least one mode");
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
    for (int k = 0; k < n_modes; ++k) {
        w(2 * k, 2 * k + 1) = 1.0;
        w(2 * k + 1, 2 * k) = -1.0;
    }
    return w;
}

PhysicalityReport is_physical(const Eigen::MatrixXd& cov) {
    require_symmetric(cov);
    const int n = static_cast<int>(cov.rows() / 2);
    const Eigen::MatrixXcd h =
        cov.cast<std::complex<double>>() + std::complex<double>(0.0, 0.5) * omega(n).cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h, Eigen::EigenvaluesOnly);
    const double min_eig = eig.eigenvalues().minCoeff();
    return {min_eig >= -1e-10 * scale_of(cov), min_eig};
}

bool is_symplectic(const Eigen::MatrixXd& s, double tol) {
    if (s.rows() != s.cols() || s.rows() % 2 != 0 || s.rows() == 0) return false;
    const Eigen::MatrixXd w = omega(static_cast<int>(s.rows() / 2));
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff() * s.cwiseAbs().maxCoeff());
    return (s * w * s.transpose() - w).cwiseAbs().maxCoeff() <= tol * scale;
}

Eigen::Matrix2d symplectic_phase(double phi) { return phase_matrix<double>(phi); }

Eigen::Matrix4d symplectic_bs(double theta, double phi) { return bs_matrix<double>(theta, phi); }

Eigen::Matrix2d symplectic_squeeze(double s) {
    return Eigen::Vector2d(std::exp(-s), std::exp(s)).asDiagonal();
}

GaussianState apply_symplectic(const GaussianState& state, const Eigen::MatrixXd& s,
                               std::span<const int> modes) {
    const auto k = static_cast<Eigen::Index>(modes.size());
    if (s.rows() != 2 * k || s.cols() != 2 * k)
        throw std::invalid_argument("symplectic size does not match the mode list");
    if (!is_symplectic(s)) throw std::invalid_argument("matrix is not symplectic");
    std::set<int> seen;
    for (int m : modes) {
        if (m < 0 || m >= state.n_modes()) throw std::invalid_argument("mode index out of range");
        if (!seen.insert(m).second) throw std::invalid_argument("mode listed twice");
    }
    const auto dim = state.mean().size();
    Eigen::MatrixXd full = Eigen::MatrixXd::Identity(dim, dim);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j)
            full.block<2, 2>(2 * modes[i], 2 * modes[j]) = s.block<2, 2>(2 * i, 2 * j);
    return {full * state.mean(), full * state.cov() * full.transpose()};
}

GaussianState displace(const GaussianState& state, int mode, const Eigen::Vector2d& d) {
    if (mode < 0 || mode >= state.n_modes()) throw std::invalid_argument("mode index out of range");
    Eigen::VectorXd mean = state.mean();
    mean.segment<2>(2 * mode) += d;
    return {std::move(mean), state.cov()};
}

GaussianState squeezed_vacuum(double s) {
    Eigen::Matrix2d cov = Eigen::Vector2d(0.5 * std::exp(-2 * s), 0.5 * std::exp(2 * s)).asDiagonal();
    return {Eigen::Vector2d::Zero(), cov};
}

GaussianState tmsv(double r) {
    if (!(r >= 0.0)) throw std::invalid_argument("squeezing r must be non-negative");
    const double a = 0.5 * std::cosh(2 * r);
    const double c = 0.5 * std::sinh(2 * r);
    Eigen::Matrix4d cov;
    cov << a, 0, -c, 0,
           0, a, 0, c,
           -c, 0, a, 0,
           0, c, 0, a;
    return {Eigen::Vector4d::Zero(), cov};
}

GaussianState epr_from_squeezed(double r) {
    GaussianState s = tensor(squeezed_vacuum(r), squeezed_vacuum(-r));
    const int second[] = {1};
    const int both[] = {0, 1};
    s = apply_symplectic(s, symplectic_phase(std::numbers::pi / 2), second);
    s = apply_symplectic(s, symplectic_bs(std::numbers::pi / 4, std::numbers::pi / 2), both);
    return apply_symplectic(s, symplectic_phase(-std::numbers::pi / 2), second);
}

double quadrature_moment(const GaussianState& state, const Eigen::VectorXd& c) {
    if (c.size() != state.mean().size()) throw std::invalid_argument("coefficient size mismatch");
    const double m = c.dot(state.mean());
    return c.dot(state.cov() * c) + m * m;
}

GaussianState homodyne_condition(const GaussianState& state, int mode, Quadrature q,
                                 std::optional<double> outcome) {
    if (state.n_modes() < 2) throw std::invalid_argument("conditioning needs at least two modes");
    if (mode < 0 || mode >= state.n_modes()) throw std::invalid_argument("mode index out of range");
    const int qi = q == Quadrature::X ? 0 : 1;
    if (!(state.cov()(2 * mode + qi, 2 * mode + qi) > 0.0))
        throw std::invalid_argument("measured quadrature variance must be positive");

    std::vector<int> measured = {2 * mode, 2 * mode + 1};
    std::vector<int> rest;
    for (int i = 0; i < state.mean().size(); ++i)
        if (i / 2 != mode) rest.push_back(i);

    Eigen::Matrix2d proj = Eigen::Matrix2d::Zero();
    proj(qi, qi) = 1.0;
    const Eigen::MatrixXd a = select(state.cov(), measured, measured);
    const Eigen::MatrixXd c = select(state.cov(), rest, measured);
    const Eigen::MatrixXd b = select(state.cov(), rest, rest);
    const Eigen::MatrixXd gain = c * pseudo_inverse(proj * a * proj);

    Eigen::VectorXd mean_rest(rest.size());
    for (std::size_t i = 0; i < rest.size(); ++i) mean_rest(i) = state.mean()(rest[i]);
    Eigen::Vector2d shift = Eigen::Vector2d::Zero();
    if (outcome) shift(qi) = *outcome - state.mean()(2 * mode + qi);

    return {mean_rest + gain * shift, b - gain * c.transpose()};
}

GaussianState squeeze_channel(const GaussianState& channel, double s) {
    if (channel.n_modes() != 2) throw std::invalid_argument("channel must have two modes");
    const int bob[] = {1};
    return apply_symplectic(channel, symplectic_squeeze(s), bob);
}

Eigen::Matrix2d cv_teleport_cov(const Eigen::Matrix2d& sigma_in, const GaussianState& channel,
                                double gain) {
    if (channel.n_modes() != 2) throw std::invalid_argument("channel must have two modes");
    if (!(gain > 0.0)) throw std::invalid_argument("gain must be positive");
    GaussianState(Eigen::Vector2d::Zero(), sigma_in);  // validates the input

    // The channel's entries grow like e^{2r} while the teleportation noise
    // shrinks like e^{-2r}, so double rounding of the intermediate sums would
    // swamp the result for large r. Work in quad precision with exact angles.
    const Quad pi = boost::math::constants::pi<Quad>();
    QuadMatrix total = QuadMatrix::Zero(6, 6);
    total.topLeftCorner(2, 2) = sigma_in.cast<Quad>();
    total.bottomRightCorner(4, 4) = channel.cov().cast<Quad>();

    // modes: 0 input, 1 Alice's half, 2 Bob's half
    QuadMatrix s = QuadMatrix::Identity(6, 6);
    s.topLeftCorner(4, 4) = bs_matrix<Quad>(pi / 4, pi / 2);
    s.bottomRightCorner(2, 2) = phase_matrix<Quad>(-pi / 2);
    const QuadMatrix cov = s * total * s.transpose();

    const std::vector<int> measured = {0, 2};  // x of both beamsplitter outputs
    const std::vector<int> kept = {4, 5};
    const QuadMatrix sigma_m = select(cov, measured, measured);
    const QuadMatrix cross = select(cov, kept, measured);
    const QuadMatrix regress =
        cross * Eigen::CompleteOrthogonalDecomposition<QuadMatrix>(sigma_m).pseudoInverse();
    const QuadMatrix conditional = select(cov, kept, kept) - regress * cross.transpose();

    // Bob's output is R_B + gain * m = eps + (regress + gain I) m, with eps
    // independent of the outcomes m.
    const QuadMatrix lever = regress + Quad(gain) * QuadMatrix::Identity(2, 2);
    const QuadMatrix out = conditional + lever * sigma_m * lever.transpose();
    const Eigen::Matrix2d result = out.cast<double>();
    return 0.5 * (result + result.transpose());
}

Eigen::VectorXd sample_quadratures(const GaussianState& state, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return state.mean() + sampling_factor(state.cov()) * standard_normals(rng, state.mean().size());
}

CvTeleportStats cv_teleport_mc(double x_in, double p_in, double r, double gain,
                               std::size_t trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (!(gain > 0.0)) throw std::invalid_argument("gain must be positive");
    const Eigen::MatrixXd epr_factor = sampling_factor(tmsv(r).cov());
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    const bool unit_gain = std::abs(gain - std::numbers::sqrt2) < 1e-15;

    std::vector<Eigen::Vector2d> outputs(trials);
    std::vector<double> residuals(trials, 0.0);
    detail::parallel_for(trials, [&](std::size_t i) {
        Rng rng = make_rng(trial_seed(seed, i));
        const Eigen::VectorXd z = standard_normals(rng, 6);
        const Eigen::Vector4d epr = epr_factor * z.head<4>();
        const double xa = epr(0), pa = epr(1), xb = epr(2), pb = epr(3);
        const double x = x_in + std::sqrt(0.5) * z(4);
        const double p = p_in + std::sqrt(0.5) * z(5);
        const double x_bar = inv_sqrt2 * (x + xa);
        const double p_bar = inv_sqrt2 * (p - pa);
        const double x_out = xb + gain * x_bar;
        const double p_out = pb + gain * p_bar;
        outputs[i] = {x_out, p_out};
        if (unit_gain) {
            residuals[i] = std::max(std::abs(x_out - (x + (xa + xb))),
                                    std::abs(p_out - (p - (pa - pb))));
        }
    });

    CvTeleportStats stats;
    stats.trials = trials;
    detail::CompensatedSum sx, sp;
    for (const auto& o : outputs) {
        sx.add(o(0));
        sp.add(o(1));
    }
    stats.mean = {sx.value() / trials, sp.value() / trials};
    detail::CompensatedSum cxx, cxp, cpp;
    for (const auto& o : outputs) {
        const Eigen::Vector2d d = o - stats.mean;
        cxx.add(d(0) * d(0));
        cxp.add(d(0) * d(1));
        cpp.add(d(1) * d(1));
    }
    const double denom = trials > 1 ? static_cast<double>(trials - 1) : 1.0;
    stats.cov << cxx.value() / denom, cxp.value() / denom, cxp.value() / denom, cpp.value() / denom;
    for (double res : residuals) stats.max_identity_residual = std::max(stats.max_identity_residual, res);
    return stats;
}

CvQkdRound cv_qkd_round(double r, double s, std::uint64_t seed) {
    const GaussianState channel = squeeze_channel(tmsv(r), s);
    Rng rng = make_rng(seed);
    CvQkdRound round;
    round.alice_quadrature = uniform01(rng) < 0.5 ? Quadrature::X : Quadrature::P;
    round.bob_quadrature = uniform01(rng) < 0.5 ? Quadrature::X : Quadrature::P;
    const Eigen::VectorXd values =
        channel.mean() + sampling_factor(channel.cov()) * standard_normals(rng, 4);
    round.alice_value = values(round.alice_quadrature == Quadrature::X ? 0 : 1);
    round.bob_value = values(round.bob_quadrature == Quadrature::X ? 2 : 3);
    round.kept = round.alice_quadrature == round.bob_quadrature;
    return round;
}

}  // namespace bsim
