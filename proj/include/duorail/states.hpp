#pragma once

/// Qubit bookkeeping: Pauli operators, their eigenvectors, and the named
/// one- and two-qubit target states used by the preparation presets.
/// Two-qubit kets are ordered |q1 q2> with slot index 2*b1 + b2.

#include "linalg.hpp"

#include <stdexcept>
#include <string>

namespace duorail {

inline const Matrix2cd& pauli_i() {
    static const Matrix2cd m = Matrix2cd::Identity();
    return m;
}

inline const Matrix2cd& pauli_x() {
    static const Matrix2cd m = (Matrix2cd() << 0, 1, 1, 0).finished();
    return m;
}

inline const Matrix2cd& pauli_y() {
    static const Matrix2cd m = (Matrix2cd() << complexd(0, 0), complexd(0, -1),
                                complexd(0, 1), complexd(0, 0))
                                   .finished();
    return m;
}

inline const Matrix2cd& pauli_z() {
    static const Matrix2cd m = (Matrix2cd() << 1, 0, 0, -1).finished();
    return m;
}

/// +1 / -1 eigenvectors of X, Y, Z.
inline Vector2cd ket_zero() { return (Vector2cd() << 1, 0).finished(); }
inline Vector2cd ket_one() { return (Vector2cd() << 0, 1).finished(); }
inline Vector2cd ket_plus() { return (Vector2cd() << 1, 1).finished() / std::sqrt(2.0); }
inline Vector2cd ket_minus() { return (Vector2cd() << 1, -1).finished() / std::sqrt(2.0); }
inline Vector2cd ket_plus_i() {
    return (Vector2cd() << complexd(1, 0), complexd(0, 1)).finished() / std::sqrt(2.0);
}
inline Vector2cd ket_minus_i() {
    return (Vector2cd() << complexd(1, 0), complexd(0, -1)).finished() / std::sqrt(2.0);
}

inline Vector4cd kron(const Vector2cd& a, const Vector2cd& b) {
    Vector4cd out;
    out << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
    return out;
}

inline Matrix4cd kron(const Matrix2cd& a, const Matrix2cd& b) {
    Matrix4cd out;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
        }
    }
    return out;
}

inline Vector4cd bell_phi_plus() {
    return (Vector4cd() << 1, 0, 0, 1).finished() / std::sqrt(2.0);
}
inline Vector4cd bell_phi_minus() {
    return (Vector4cd() << 1, 0, 0, -1).finished() / std::sqrt(2.0);
}
inline Vector4cd bell_psi_plus() {
    return (Vector4cd() << 0, 1, 1, 0).finished() / std::sqrt(2.0);
}
inline Vector4cd bell_psi_minus() {
    return (Vector4cd() << 0, 1, -1, 0).finished() / std::sqrt(2.0);
}

/// Linear cluster state on two qubits: CZ |+>|+> = (|00>+|01>+|10>-|11>)/2.
inline Vector4cd cluster_state() {
    return (Vector4cd() << 1, 1, 1, -1).finished() / 2.0;
}

inline DensityMatrix4 density_from_ket(const Vector4cd& psi) {
    return psi * psi.adjoint();
}

enum class PauliBasis { X, Y, Z };

inline char basis_letter(PauliBasis b) {
    switch (b) {
        case PauliBasis::X: return 'X';
        case PauliBasis::Y: return 'Y';
        case PauliBasis::Z: return 'Z';
    }
    throw std::invalid_argument("basis_letter: bad basis");
}

inline PauliBasis basis_from_letter(char c) {
    switch (c) {
        case 'X': case 'x': return PauliBasis::X;
        case 'Y': case 'y': return PauliBasis::Y;
        case 'Z': case 'z': return PauliBasis::Z;
        default: throw std::invalid_argument(std::string("basis_from_letter: bad basis '") + c + "'");
    }
}

inline const Matrix2cd& pauli_matrix(PauliBasis b) {
    switch (b) {
        case PauliBasis::X: return pauli_x();
        case PauliBasis::Y: return pauli_y();
        case PauliBasis::Z: return pauli_z();
    }
    throw std::invalid_argument("pauli_matrix: bad basis");
}

/// (+1, -1) eigenvectors of the chosen Pauli operator.
inline std::pair<Vector2cd, Vector2cd> pauli_eigenvectors(PauliBasis b) {
    switch (b) {
        case PauliBasis::X: return {ket_plus(), ket_minus()};
        case PauliBasis::Y: return {ket_plus_i(), ket_minus_i()};
        case PauliBasis::Z: return {ket_zero(), ket_one()};
    }
    throw std::invalid_argument("pauli_eigenvectors: bad basis");
}

/// Schmidt coefficients (descending singular values of the 2x2 amplitude
/// matrix) of a two-qubit ket; (1, 0) for a normalized product state.
inline std::pair<double, double> schmidt_coefficients(const Vector4cd& psi) {
    Matrix2cd a;
    a << psi(0), psi(1), psi(2), psi(3);
    Eigen::JacobiSVD<Matrix2cd> svd(a);
    return {svd.singularValues()(0), svd.singularValues()(1)};
}

/// Splits a (near-)product two-qubit ket into per-qubit factors; the second
/// Schmidt coefficient must be <= tol times the first.
inline std::pair<Vector2cd, Vector2cd> factor_product_state(const Vector4cd& psi,
                                                            double tol = 1e-9) {
    Matrix2cd a;
    a << psi(0), psi(1), psi(2), psi(3);
    Eigen::JacobiSVD<Matrix2cd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double s0 = svd.singularValues()(0);
    const double s1 = svd.singularValues()(1);
    if (s0 <= 0.0 || s1 > tol * s0) {
        throw std::invalid_argument("factor_product_state: state is not a product state");
    }
    Vector2cd q1 = svd.matrixU().col(0);
    Vector2cd q2 = svd.matrixV().col(0).conjugate();
    return {s0 * q1, q2};
}

/// Target two-qubit ket for a preparation preset name.
inline Vector4cd target_state(const std::string& preset) {
    if (preset == "HV") return kron(ket_zero(), ket_one());
    if (preset == "PM") return kron(ket_plus(), ket_minus());
    if (preset == "PiMi") return kron(ket_plus_i(), ket_minus_i());
    if (preset == "PhiPlus") return bell_phi_plus();
    if (preset == "PhiMinus") return bell_phi_minus();
    if (preset == "PsiPlus") return bell_psi_plus();
    if (preset == "PsiMinus") return bell_psi_minus();
    if (preset == "Cluster") return cluster_state();
    throw std::invalid_argument("target_state: unknown preset '" + preset + "'");
}

}  // namespace duorail
