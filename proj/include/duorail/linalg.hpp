#pragma once

/// Small dense linear-algebra helpers shared across the library.
///
/// Everything works on Eigen complex matrices. States live in two spaces:
/// optical mode space (dim x dim unitaries, dim >= 4) and the post-selected
/// two-qubit space (4x4 density matrices).

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace duorail {

using complexd = std::complex<double>;
using Eigen::Matrix2cd;
using Eigen::Matrix4cd;
using Eigen::MatrixXcd;
using Eigen::Vector2cd;
using Eigen::Vector4cd;
using Eigen::VectorXcd;

inline constexpr double pi = std::numbers::pi;
inline constexpr complexd iunit{0.0, 1.0};

/// Density matrix of one post-selected dual-rail qubit pair, basis
/// {|00>, |01>, |10>, |11>} with |0> = photon in the upper waveguide.
using DensityMatrix4 = Eigen::Matrix4cd;

inline bool is_unitary(const MatrixXcd& m, double tol = 1e-12) {
    if (m.rows() != m.cols()) return false;
    MatrixXcd gram = m.adjoint() * m;
    gram -= MatrixXcd::Identity(m.rows(), m.cols());
    return gram.norm() <= tol * std::sqrt(static_cast<double>(m.rows()));
}

inline bool is_hermitian(const MatrixXcd& m, double tol = 1e-12) {
    return (m - m.adjoint()).norm() <= tol;
}

inline double trace_distance(const Matrix4cd& a, const Matrix4cd& b) {
    Matrix4cd diff = a - b;
    Eigen::SelfAdjointEigenSolver<Matrix4cd> es(0.5 * (diff + diff.adjoint()));
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Eigenvalues inside -tol..0 are clipped to zero; more negative ones throw.
inline Matrix4cd sqrt_psd(const Matrix4cd& m, double tol = 1e-9) {
    Eigen::SelfAdjointEigenSolver<Matrix4cd> es(0.5 * (m + m.adjoint()));
    Eigen::Vector4d vals = es.eigenvalues();
    for (int i = 0; i < 4; ++i) {
        if (vals(i) < -tol) {
            throw std::invalid_argument("sqrt_psd: matrix is not positive semidefinite");
        }
        vals(i) = std::sqrt(std::max(vals(i), 0.0));
    }
    return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
}

/// Checks trace one, Hermiticity and positivity of a two-qubit state.
inline bool is_physical_state(const Matrix4cd& rho, double tol = 1e-9) {
    if (std::abs(rho.trace().real() - 1.0) > tol) return false;
    if (std::abs(rho.trace().imag()) > tol) return false;
    if (!is_hermitian(rho, tol)) return false;
    Eigen::SelfAdjointEigenSolver<Matrix4cd> es(0.5 * (rho + rho.adjoint()));
    return es.eigenvalues().minCoeff() >= -tol;
}

/// Projects a Hermitian matrix back onto the physical state set
/// (clip negative eigenvalues, renormalize the trace).
inline Matrix4cd clip_to_physical(const Matrix4cd& rho) {
    Eigen::SelfAdjointEigenSolver<Matrix4cd> es(0.5 * (rho + rho.adjoint()));
    Eigen::Vector4d vals = es.eigenvalues().cwiseMax(0.0);
    double total = vals.sum();
    if (total <= 0.0) throw std::invalid_argument("clip_to_physical: zero matrix");
    vals /= total;
    return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
}

/// splitmix64 step; used to derive independent seeds for sub-streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace duorail
