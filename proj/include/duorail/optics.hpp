#pragma once

/// Linear-optics core: mode unitaries, two-photon Fock evolution with
/// partial distinguishability, coincidence statistics and dual-rail
/// post-selection.
///
/// Mode convention for the standard four-mode circuit:
///   0 = qubit-1 upper rail, 1 = qubit-1 lower rail,
///   2 = qubit-2 upper rail, 3 = qubit-2 lower rail,
/// and a photon in the upper rail encodes logical |0>.  Extra modes beyond
/// the signal block behave exactly like signal modes; post-selection simply
/// never keeps a pattern that touches them, so they model loss.
///
/// A two-photon state is stored as the ordered amplitude matrix D where
/// D(j,k) multiplies a_dag(j, xi1) a_dag(k, xi2) |vac> and xi1, xi2 are the
/// internal (spectral/temporal) wave packets of the two injected photons
/// with overlap <xi1|xi2> = gamma.  The bosonic (unordered) amplitudes are
/// derived views: c(j,k) = D(j,k) + D(k,j) for j < k and c(j,j) =
/// sqrt(2) D(j,j).  Mode unitaries act as D -> U D U^T, which reproduces the
/// two-by-two permanent rule for the interfering part and keeps the
/// classical (distinguishable) part exact for any |gamma| <= 1.

#include "linalg.hpp"

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace duorail {

/// Unitary acting on optical modes; dim >= 2.
struct ModeUnitary {
    MatrixXcd entries;

    ModeUnitary() = default;
    explicit ModeUnitary(MatrixXcd m, double tol = 1e-10) : entries(std::move(m)) {
        if (entries.rows() != entries.cols()) {
            throw std::invalid_argument("ModeUnitary: matrix must be square");
        }
        if (!is_unitary(entries, tol)) {
            throw std::invalid_argument("ModeUnitary: matrix is not unitary");
        }
    }

    int dim() const { return static_cast<int>(entries.rows()); }

    static ModeUnitary identity(int dim) {
        ModeUnitary u;
        u.entries = MatrixXcd::Identity(dim, dim);
        return u;
    }
};

/// Embeds a 2x2 unitary into `dim` modes on the (distinct) target pair.
inline ModeUnitary embed_two_mode(const Matrix2cd& u, std::pair<int, int> modes, int dim) {
    auto [a, b] = modes;
    if (dim < 2) throw std::invalid_argument("embed_two_mode: dim must be >= 2");
    if (a < 0 || b < 0 || a >= dim || b >= dim) {
        throw std::invalid_argument("embed_two_mode: mode index out of range");
    }
    if (a == b) throw std::invalid_argument("embed_two_mode: modes must be distinct");
    if (!is_unitary(u, 1e-12)) {
        throw std::invalid_argument("embed_two_mode: block is not unitary");
    }
    MatrixXcd m = MatrixXcd::Identity(dim, dim);
    m(a, a) = u(0, 0);
    m(a, b) = u(0, 1);
    m(b, a) = u(1, 0);
    m(b, b) = u(1, 1);
    ModeUnitary out;
    out.entries = std::move(m);
    return out;
}

/// Products of stage unitaries in circuit order (first element acts first).
inline ModeUnitary compose(std::span<const ModeUnitary> stages) {
    if (stages.empty()) throw std::invalid_argument("compose: empty stage list");
    const int dim = stages.front().dim();
    MatrixXcd acc = MatrixXcd::Identity(dim, dim);
    for (const ModeUnitary& stage : stages) {
        if (stage.dim() != dim) throw std::invalid_argument("compose: dimension mismatch");
        acc = stage.entries * acc;
    }
    ModeUnitary out;
    out.entries = std::move(acc);
    return out;
}

inline ModeUnitary compose(const std::vector<ModeUnitary>& stages) {
    return compose(std::span<const ModeUnitary>(stages));
}

/// Two photons across `dim` modes with pairwise internal overlap `gamma`.
struct TwoPhotonState {
    MatrixXcd ordered;  // D(j,k): photon xi1 at mode j, photon xi2 at mode k
    complexd overlap{1.0, 0.0};

    int dim() const { return static_cast<int>(ordered.rows()); }

    /// One photon injected into mode_a, the second into mode_b.
    static TwoPhotonState photon_pair(int dim, int mode_a, int mode_b,
                                      complexd gamma = complexd{1.0, 0.0}) {
        if (dim < 2) throw std::invalid_argument("TwoPhotonState: dim must be >= 2");
        if (mode_a < 0 || mode_b < 0 || mode_a >= dim || mode_b >= dim) {
            throw std::invalid_argument("TwoPhotonState: input mode out of range");
        }
        if (std::abs(gamma) > 1.0 + 1e-12) {
            throw std::invalid_argument("TwoPhotonState: |overlap| must be <= 1");
        }
        TwoPhotonState s;
        s.ordered = MatrixXcd::Zero(dim, dim);
        s.ordered(mode_a, mode_b) = 1.0;
        s.overlap = gamma;
        return s;
    }

    /// Builds an indistinguishable (gamma = 1) state from unordered pattern
    /// amplitudes; entries are ((j, k), amplitude) with j <= k.
    static TwoPhotonState from_unordered(
        int dim, const std::vector<std::pair<std::pair<int, int>, complexd>>& amps) {
        TwoPhotonState s;
        s.ordered = MatrixXcd::Zero(dim, dim);
        for (const auto& [pattern, amp] : amps) {
            auto [j, k] = pattern;
            if (j < 0 || k < 0 || j >= dim || k >= dim || j > k) {
                throw std::invalid_argument("TwoPhotonState: bad unordered pattern");
            }
            if (j == k) {
                s.ordered(j, j) = amp / std::sqrt(2.0);
            } else {
                s.ordered(j, k) = 0.5 * amp;
                s.ordered(k, j) = 0.5 * amp;
            }
        }
        return s;
    }

    /// Bosonic amplitude of the unordered pattern {j, k}, j <= k.
    complexd unordered_amplitude(int j, int k) const {
        if (j > k) std::swap(j, k);
        if (j == k) return std::sqrt(2.0) * ordered(j, j);
        return ordered(j, k) + ordered(k, j);
    }

    /// Sum of |amplitude|^2 over unordered patterns; 1 for a normalized state.
    double norm_squared() const {
        double total = 0.0;
        for (int j = 0; j < dim(); ++j) {
            for (int k = j; k < dim(); ++k) {
                total += std::norm(unordered_amplitude(j, k));
            }
        }
        return total;
    }

    /// Normalization of the classical (distinguishable) branch; equals 1 for
    /// photon-pair inputs and is conserved under evolution.
    double classical_norm() const { return ordered.squaredNorm(); }
};

/// Applies a mode unitary to both photons: D -> U D U^T.
inline TwoPhotonState evolve_two_photon(const ModeUnitary& u, const TwoPhotonState& input) {
    if (u.dim() != input.dim()) {
        throw std::invalid_argument("evolve_two_photon: dimension mismatch");
    }
    TwoPhotonState out;
    out.ordered = u.entries * input.ordered * u.entries.transpose();
    out.overlap = input.overlap;
    return out;
}

/// Probability of a coincidence (or bunched, j = k) click pattern.
/// Mixes the interfering and the classical branch by |gamma|^2.
inline double coincidence_probability(const TwoPhotonState& state, std::pair<int, int> pattern) {
    auto [m, n] = pattern;
    if (m < 0 || n < 0 || m >= state.dim() || n >= state.dim()) {
        throw std::invalid_argument("coincidence_probability: pattern out of range");
    }
    const double g2 = std::norm(state.overlap);
    const double cnorm = state.classical_norm();
    if (cnorm <= 0.0) throw std::invalid_argument("coincidence_probability: empty state");
    const complexd a_mn = state.ordered(m, n);
    const complexd a_nm = state.ordered(n, m);
    if (m == n) {
        return g2 * 2.0 * std::norm(a_mn) + (1.0 - g2) * std::norm(a_mn) / cnorm;
    }
    const double p_indist = std::norm(a_mn + a_nm);
    const double p_dist = (std::norm(a_mn) + std::norm(a_nm)) / cnorm;
    return g2 * p_indist + (1.0 - g2) * p_dist;
}

/// Post-selected dual-rail qubit pair plus the probability of keeping it.
struct TwoQubitOutcome {
    DensityMatrix4 state;
    double success_probability = 0.0;
};

/// Keeps exactly one photon in each qubit's rail pair and returns the
/// normalized 4x4 state over {|00>, |01>, |10>, |11>}.  The interfering and
/// classical branches are mixed by |gamma|^2; the classical branch keeps its
/// two photon-ordering configurations as an incoherent pair.
inline TwoQubitOutcome postselect_dual_rail(const TwoPhotonState& state,
                                            std::pair<int, int> qubit1_modes,
                                            std::pair<int, int> qubit2_modes,
                                            double degenerate_threshold = 1e-12) {
    const int dim = state.dim();
    const std::array<int, 2> q1{qubit1_modes.first, qubit1_modes.second};
    const std::array<int, 2> q2{qubit2_modes.first, qubit2_modes.second};
    for (int m : q1) {
        if (m < 0 || m >= dim) throw std::invalid_argument("postselect: mode out of range");
    }
    for (int m : q2) {
        if (m < 0 || m >= dim) throw std::invalid_argument("postselect: mode out of range");
        if (m == q1[0] || m == q1[1]) {
            throw std::invalid_argument("postselect: qubit rail pairs overlap");
        }
    }
    if (q1[0] == q1[1] || q2[0] == q2[1]) {
        throw std::invalid_argument("postselect: qubit rails must be distinct");
    }

    const double g2 = std::norm(state.overlap);
    const double cnorm = state.classical_norm();
    if (cnorm <= 0.0) throw std::invalid_argument("postselect: empty state");
    const double gmag = std::sqrt(g2);
    const double dist_scale = std::sqrt((1.0 - g2) / cnorm);

    // Logical slot i = 2*b1 + b2 keeps rails (q1[b1], q2[b2]).
    Vector4cd sym = Vector4cd::Zero();      // both photons in the same packet
    Vector4cd ord_a = Vector4cd::Zero();    // photon xi1 on qubit 1
    Vector4cd ord_b = Vector4cd::Zero();    // photon xi1 on qubit 2
    for (int b1 = 0; b1 < 2; ++b1) {
        for (int b2 = 0; b2 < 2; ++b2) {
            const int slot = 2 * b1 + b2;
            const complexd d_ab = state.ordered(q1[b1], q2[b2]);
            const complexd d_ba = state.ordered(q2[b2], q1[b1]);
            sym(slot) = gmag * (d_ab + d_ba);
            ord_a(slot) = dist_scale * d_ab;
            ord_b(slot) = dist_scale * d_ba;
        }
    }

    Matrix4cd unnormalized = sym * sym.adjoint() + ord_a * ord_a.adjoint() +
                             ord_b * ord_b.adjoint();
    const double success = unnormalized.trace().real();
    if (success < degenerate_threshold) {
        throw std::runtime_error("postselect: degenerate post-selection, success below threshold");
    }
    TwoQubitOutcome out;
    out.state = unnormalized / success;
    out.success_probability = success;
    return out;
}

}  // namespace duorail
