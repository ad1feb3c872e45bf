#pragma once

// Gaussian-state calculus: covariance matrices over R = (x1, p1, ..., xn, pn)
// with [x, p] = i and vacuum covariance I/2, symplectic maps, homodyne
// conditioning, and the continuous-variable teleportation and QKD protocols.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace bsim {

enum class Quadrature { X, P };
const char* to_string(Quadrature q);

class GaussianState {
public:
    // Throws std::invalid_argument unless cov is symmetric (1e-12, relative to
    // its largest entry) and satisfies cov + (i/2) Omega >= 0.
    GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cov);

    static GaussianState vacuum(int n_modes);

    int n_modes() const { return static_cast<int>(mean_.size() / 2); }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& cov() const { return cov_; }

    // 2x2 block between modes i and j.
    Eigen::Matrix2d block(int i, int j) const;

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
};

// Direct sum of the two states' covariances (modes of b follow those of a).
GaussianState tensor(const GaussianState& a, const GaussianState& b);

Eigen::MatrixXd omega(int n_modes);

struct PhysicalityReport {
    bool physical = false;
    double min_eigenvalue = 0.0;  // of cov + (i/2) Omega
};

// Throws std::invalid_argument for non-symmetric or odd-sized input.
PhysicalityReport is_physical(const Eigen::MatrixXd& cov);

bool is_symplectic(const Eigen::MatrixXd& s, double tol = 1e-12);

// [[cos(theta) I, sin(theta) S_P], [-sin(theta) S_P^T, cos(theta) I]]
Eigen::Matrix4d symplectic_bs(double theta, double phi);
// [[cos(phi), sin(phi)], [-sin(phi), cos(phi)]]
Eigen::Matrix2d symplectic_phase(double phi);
// diag(e^{-s}, e^{s}); s > 0 squeezes x.
Eigen::Matrix2d symplectic_squeeze(double s);

// R -> S R, cov -> S cov S^T on `modes` (S is 2k x 2k for k listed modes).
// Throws std::invalid_argument if S is not symplectic.
GaussianState apply_symplectic(const GaussianState& state, const Eigen::MatrixXd& s,
                               std::span<const int> modes);

// Displaces the selected mode by d = (dx, dp).
GaussianState displace(const GaussianState& state, int mode, const Eigen::Vector2d& d);

GaussianState squeezed_vacuum(double s);

// A = B = cosh(2r)/2 I, C = diag(-sinh(2r)/2, sinh(2r)/2).
GaussianState tmsv(double r);

// x-squeezed and p-squeezed vacua mixed on S_BS(pi/4, pi/2), with
// quarter-period phase plates S_P(+pi/2) before and S_P(-pi/2) after the
// splitter on the second mode. Equals tmsv(r).
GaussianState epr_from_squeezed(double r);

// <(c . R)^2> for a linear combination c of the quadratures.
double quadrature_moment(const GaussianState& state, const Eigen::VectorXd& c);

// Conditions on a homodyne measurement of quadrature q of `mode` and drops
// that mode. Covariance: Schur complement with the pseudo-inverse of the
// measured 1x1 block. The mean is updated for `outcome` (defaults to the
// measured quadrature's mean, which leaves it unchanged).
GaussianState homodyne_condition(const GaussianState& state, int mode, Quadrature q,
                                 std::optional<double> outcome = std::nullopt);

// Applies single-mode squeezing s to mode 1 (Bob's mode) of a two-mode channel.
GaussianState squeeze_channel(const GaussianState& channel, double s);

// Output covariance of teleporting a Gaussian input through `channel`.
// Alice mixes the input with mode A on S_BS(pi/4, pi/2) and homodynes x on
// both outputs; Bob applies S_P(-pi/2) to mode B and displaces by gain times
// the outcomes. Computed by exact conditioning plus the displacement noise.
Eigen::Matrix2d cv_teleport_cov(const Eigen::Matrix2d& sigma_in, const GaussianState& channel,
                                double gain);

struct CvTeleportStats {
    std::size_t trials = 0;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();       // (x_out, p_out)
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    double max_identity_residual = 0.0;  // |x_out - x_in - (x_A + x_B)| etc., gain = sqrt2
};

// Quadrature-level Monte Carlo: input quadratures with vacuum noise around
// (x_in, p_in), EPR pairs from tmsv(r), x_bar = (x_in + x_A)/sqrt2,
// p_bar = (p_in - p_A)/sqrt2, x_out = x_B + gain x_bar, p_out = p_B + gain p_bar.
CvTeleportStats cv_teleport_mc(double x_in, double p_in, double r, double gain,
                               std::size_t trials, std::uint64_t seed);

struct CvQkdRound {
    Quadrature alice_quadrature = Quadrature::X;
    Quadrature bob_quadrature = Quadrature::X;
    double alice_value = 0.0;
    double bob_value = 0.0;
    bool kept = false;
};

CvQkdRound cv_qkd_round(double r, double s, std::uint64_t seed);

// Draws one vector from N(mean, cov).
Eigen::VectorXd sample_quadratures(const GaussianState& state, std::uint64_t seed);

}  // namespace bsim
