#pragma once

/// Four-mode programmable chip model.
///
/// Topology (modes 0..3 = i10, i11, i20, i21):
///   1. preparation MZI with inner phase p11 on modes (0,1), then an outer
///      phase shifter p12 on one arm of that pair;
///   2. preparation MZI p21 on modes (2,3), then outer phase p22;
///   3. crossing MZI pcr on the inner modes (1,2);
///   4. a second qubit-2 MZI p23 on modes (2,3).
/// Two photons enter at (0, 2); keeping one photon per rail pair yields a
/// dual-rail qubit pair.
///
/// The hardware datasheet leaves sign/arm/coupler conventions open, so the
/// model carries them as ConventionFlags with a small exhaustive calibration
/// (calibrate_conventions) that pins the one assignment reproducing the
/// reference phase table.  Under the calibrated flags the chip implements,
/// for settings (p11, p12, p21, p22, pcr = 0, p23), the post-selected family
///
///   cos(p23/2)(|00> - b|11>) + sin(p23/2)(|01> + b|10>),   b = e^{i p12},
///
/// and for bar-state crossing couplers (pcr at the bar phase) the product
/// family  (sin(p11/2)|0> - e^{i p12} cos(p11/2)|1>)  per qubit.
///
/// Chip-to-fiber interfaces are modeled as per-arm attenuating compensation
/// stages plus a polarization converter with incoherent crosstalk
/// (apply_2dgc).

#include "linalg.hpp"
#include "optics.hpp"
#include "states.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace duorail {

inline constexpr double two_pi = 2.0 * pi;

/// Wraps a finite angle into [0, 2*pi).
inline double wrap_phase(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("wrap_phase: phase must be finite");
    double r = std::fmod(x, two_pi);
    if (r < 0.0) r += two_pi;
    if (r >= two_pi) r -= two_pi;
    return r;
}

/// Dialed phases of the ten on-chip shifters.  p1h..p2v drive the per-arm
/// compensation attenuators at the output interface; their default pi means
/// full transmission.
struct PhaseSettings {
    double p11 = 0.0, p12 = 0.0, p21 = 0.0, p22 = 0.0, pcr = 0.0, p23 = 0.0;
    double p1h = pi, p1v = pi, p2h = pi, p2v = pi;

    PhaseSettings canonicalized() const {
        PhaseSettings s = *this;
        for (double* p : {&s.p11, &s.p12, &s.p21, &s.p22, &s.pcr, &s.p23,
                          &s.p1h, &s.p1v, &s.p2h, &s.p2v}) {
            *p = wrap_phase(*p);
        }
        return s;
    }
};

enum class MmiConvention { symmetric_i, real_hadamard };
enum class Arm { upper, lower };
enum class MziRole { preparation, crossing, back };

/// Discrete conventions the hardware description leaves open, plus the two
/// per-qubit logical frame phases that calibration determines.  Defaults are
/// the calibrated assignment (verified by the calibration test suite).
struct ConventionFlags {
    MmiConvention mmi = MmiConvention::symmetric_i;
    int inner_phase_sign = +1;           // polarity of every MZI inner shifter
    Arm prep_inner_arm = Arm::upper;     // fixed: redundant with sign + frames
    Arm cross_inner_arm = Arm::lower;    // arm carrying pcr
    Arm back_inner_arm = Arm::upper;     // arm carrying p23
    Arm outer_arm_q1 = Arm::lower;       // arm carrying p12
    Arm outer_arm_q2 = Arm::lower;       // arm carrying p22
    bool qubit2_logical_flip = false;    // lower rail encodes |0> on qubit 2
    double bar_phase = pi;               // dialed inner phase giving bar routing
    double frame_q1 = pi;                // logical frame diag(1, e^{i frame})
    double frame_q2 = pi;
};

/// Imperfection knobs for one chip.
struct NoiseParams {
    double crosstalk_epsilon = 0.0;                    // per-coupler flip probability
    std::array<double, 4> arm_efficiencies{1.0, 1.0, 1.0, 1.0};
    double phase_error_sigma = 0.0;                    // radians, Gaussian per shifter
    complexd overlap_gamma{1.0, 0.0};                  // pairwise photon overlap

    void validate() const {
        if (!(crosstalk_epsilon >= 0.0 && crosstalk_epsilon <= 0.2)) {
            throw std::invalid_argument(
                "NoiseParams: crosstalk_epsilon must lie in [0, 0.2]");
        }
        for (double e : arm_efficiencies) {
            if (!(e > 0.0 && e <= 1.0)) {
                throw std::invalid_argument(
                    "NoiseParams: arm_efficiencies must lie in (0, 1]");
            }
        }
        if (!(phase_error_sigma >= 0.0)) {
            throw std::invalid_argument("NoiseParams: phase_error_sigma must be >= 0");
        }
        if (std::abs(overlap_gamma) > 1.0 + 1e-12) {
            throw std::invalid_argument("NoiseParams: |overlap_gamma| must be <= 1");
        }
    }
};

/// Unit-modulus phases of the post-selected two-photon family: alpha sets
/// the branch weights |1 + alpha|/2 and |1 - alpha|/2, beta the intra-branch
/// sign.
struct BellBlockParams {
    complexd alpha{1.0, 0.0};
    complexd beta{1.0, 0.0};
};

/// Calibrated mapping from dialed phases to the family parameters.
inline BellBlockParams bell_block_params(const PhaseSettings& settings) {
    const PhaseSettings s = settings.canonicalized();
    return BellBlockParams{std::exp(iunit * s.p23), std::exp(iunit * s.p12)};
}

/// 50:50 coupler matrix under the flagged convention.
inline Matrix2cd mmi_coupler(MmiConvention mmi) {
    Matrix2cd b;
    if (mmi == MmiConvention::symmetric_i) {
        b << 1.0, iunit, iunit, 1.0;
    } else {
        b << 1.0, 1.0, 1.0, -1.0;
    }
    return b / std::sqrt(2.0);
}

/// Mach-Zehnder block: coupler, single-arm inner phase, coupler.  The flags
/// choose the coupler convention, the shifter polarity, which arm carries
/// the shifter for each MZI role, and at which dialed phase the device sits
/// in the bar state (splitting ratio follows sin^2 / cos^2 of the half
/// phase).
inline Matrix2cd mzi(double inner_phase, const ConventionFlags& flags,
                     MziRole role = MziRole::preparation) {
    const Arm arm = role == MziRole::preparation ? flags.prep_inner_arm
                    : role == MziRole::crossing  ? flags.cross_inner_arm
                                                 : flags.back_inner_arm;
    const double offset = flags.mmi == MmiConvention::symmetric_i
                              ? pi - flags.bar_phase
                              : -flags.bar_phase;
    const double effective = flags.inner_phase_sign * (inner_phase + offset);
    const Matrix2cd b = mmi_coupler(flags.mmi);
    Matrix2cd p = Matrix2cd::Identity();
    p(arm == Arm::upper ? 0 : 1, arm == Arm::upper ? 0 : 1) = std::exp(iunit * effective);
    return b * p * b;
}

/// Single-mode phase shifter embedded on 4 modes.
inline ModeUnitary phase_stage(double phase, int mode) {
    MatrixXcd m = MatrixXcd::Identity(4, 4);
    m(mode, mode) = std::exp(iunit * phase);
    ModeUnitary u;
    u.entries = std::move(m);
    return u;
}

/// Full 4-mode unitary of the programmable mesh (no loss elements).
inline ModeUnitary build_chip_unitary(const PhaseSettings& settings,
                                      const ConventionFlags& flags) {
    const PhaseSettings s = settings.canonicalized();
    const int q1_outer_mode = flags.outer_arm_q1 == Arm::upper ? 0 : 1;
    const int q2_outer_mode = flags.outer_arm_q2 == Arm::upper ? 2 : 3;
    const std::vector<ModeUnitary> stages = {
        embed_two_mode(mzi(s.p11, flags, MziRole::preparation), {0, 1}, 4),
        embed_two_mode(mzi(s.p21, flags, MziRole::preparation), {2, 3}, 4),
        phase_stage(s.p12, q1_outer_mode),
        phase_stage(s.p22, q2_outer_mode),
        embed_two_mode(mzi(s.pcr, flags, MziRole::crossing), {1, 2}, 4),
        embed_two_mode(mzi(s.p23, flags, MziRole::back), {2, 3}, 4),
    };
    return compose(stages);
}

/// Compensation-shifter phases that equalize every arm to the weakest one:
/// the attenuator transmission amplitude is sin(theta/2), so
/// theta = 2 asin(sqrt(e_min / e_arm)) yields uniform net efficiency e_min.
inline std::array<double, 4> imbalance_nulling_phases(
    const std::array<double, 4>& arm_efficiencies) {
    for (double e : arm_efficiencies) {
        if (!(e > 0.0 && e <= 1.0)) {
            throw std::invalid_argument(
                "imbalance_nulling_phases: efficiencies must lie in (0, 1]");
        }
    }
    const double emin = *std::min_element(arm_efficiencies.begin(), arm_efficiencies.end());
    std::array<double, 4> out{};
    for (int i = 0; i < 4; ++i) {
        out[i] = 2.0 * std::asin(std::sqrt(emin / arm_efficiencies[i]));
    }
    return out;
}

/// Amplitude transmission of a compensation attenuator at dialed phase.
inline double attenuation_amplitude(double phase) {
    return std::sin(wrap_phase(phase) / 2.0);
}

/// Named phase-table rows.  Compensation phases default to the
/// imbalance-nulling values for the given arm efficiencies (pi when the arms
/// are already balanced).
inline PhaseSettings preset(const std::string& name,
                            const std::array<double, 4>& arm_efficiencies = {1.0, 1.0,
                                                                             1.0, 1.0}) {
    PhaseSettings s;
    const double h = pi / 2.0;
    if (name == "HV") {
        s.p11 = pi; s.p12 = 0; s.p21 = 0; s.p22 = 0; s.pcr = pi; s.p23 = pi;
    } else if (name == "PM") {
        s.p11 = h; s.p12 = pi; s.p21 = h; s.p22 = 0; s.pcr = pi; s.p23 = pi;
    } else if (name == "PiMi") {
        s.p11 = h; s.p12 = 3.0 * h; s.p21 = h; s.p22 = h; s.pcr = pi; s.p23 = pi;
    } else if (name == "PhiPlus") {
        s.p11 = h; s.p12 = pi; s.p21 = h; s.p22 = 0; s.pcr = 0; s.p23 = 0;
    } else if (name == "PhiMinus") {
        s.p11 = h; s.p12 = 0; s.p21 = h; s.p22 = 0; s.pcr = 0; s.p23 = 0;
    } else if (name == "PsiPlus") {
        s.p11 = h; s.p12 = 0; s.p21 = h; s.p22 = 0; s.pcr = 0; s.p23 = pi;
    } else if (name == "PsiMinus") {
        s.p11 = h; s.p12 = pi; s.p21 = h; s.p22 = 0; s.pcr = 0; s.p23 = pi;
    } else if (name == "Cluster") {
        s.p11 = h; s.p12 = 0; s.p21 = h; s.p22 = 0; s.pcr = 0; s.p23 = h;
    } else if (name == "XX") {
        s.p11 = h; s.p12 = 0; s.p21 = h; s.p22 = 0; s.pcr = pi; s.p23 = pi;
    } else if (name == "YY") {
        s.p11 = h; s.p12 = h; s.p21 = h; s.p22 = h; s.pcr = pi; s.p23 = pi;
    } else if (name == "ZZ") {
        s.p11 = pi; s.p12 = 0; s.p21 = pi; s.p22 = 0; s.pcr = pi; s.p23 = pi;
    } else {
        throw std::invalid_argument("preset: unknown name '" + name + "'");
    }
    const std::array<double, 4> comp = imbalance_nulling_phases(arm_efficiencies);
    s.p1h = comp[0]; s.p1v = comp[1]; s.p2h = comp[2]; s.p2v = comp[3];
    return s;
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {
        "HV", "PM", "PiMi", "PhiPlus", "PhiMinus", "PsiPlus", "PsiMinus",
        "Cluster", "XX", "YY", "ZZ"};
    return names;
}

/// Map from raw post-selected rail amplitudes to the logical qubit frame:
/// optional rail swap on qubit 2, then the per-qubit frame phases.
inline Matrix4cd logical_frame_map(const ConventionFlags& flags) {
    Matrix2cd f1 = Matrix2cd::Identity();
    f1(1, 1) = std::exp(iunit * flags.frame_q1);
    Matrix2cd f2 = Matrix2cd::Identity();
    f2(1, 1) = std::exp(iunit * flags.frame_q2);
    Matrix4cd frame = kron(f1, f2);
    if (flags.qubit2_logical_flip) {
        frame = frame * kron(pauli_i(), pauli_x());
    }
    return frame;
}

/// Noiseless post-selected pure state (logical frame) for given settings;
/// also returns the success probability.  Used by calibration and oracles.
inline std::pair<Vector4cd, double> ideal_logical_state(const PhaseSettings& settings,
                                                        const ConventionFlags& flags) {
    const ModeUnitary u = build_chip_unitary(settings, flags);
    const TwoPhotonState out =
        evolve_two_photon(u, TwoPhotonState::photon_pair(4, 0, 2));
    Vector4cd amps;
    const std::array<int, 2> q1{0, 1}, q2{2, 3};
    for (int b1 = 0; b1 < 2; ++b1) {
        for (int b2 = 0; b2 < 2; ++b2) {
            amps(2 * b1 + b2) = out.unordered_amplitude(q1[b1], q2[b2]);
        }
    }
    const double success = amps.squaredNorm();
    if (success < 1e-12) {
        throw std::runtime_error("ideal_logical_state: degenerate post-selection");
    }
    Vector4cd logical = logical_frame_map(flags) * (amps / std::sqrt(success));
    return {logical, success};
}

// ---------------------------------------------------------------------------
// Fiber interface channel
// ---------------------------------------------------------------------------

/// Result of a trace-decreasing single-qubit map: renormalized state plus
/// the retained probability weight.
template <typename MatrixT>
struct ChannelResult {
    MatrixT state;
    double weight = 1.0;
};

/// Path-to-polarization converter: incoherent crosstalk of probability eps
/// (Kraus pair sqrt(1-eps)*identity, sqrt(eps)*bit-flip) followed by
/// per-arm intensity efficiencies and renormalization.  eps = 0 and unit
/// efficiencies give the exact identity map on the amplitudes.
inline ChannelResult<Matrix2cd> apply_2dgc(const Matrix2cd& rho, double eps,
                                           std::pair<double, double> efficiencies) {
    if (!(eps >= 0.0 && eps <= 1.0)) {
        throw std::invalid_argument("apply_2dgc: eps must lie in [0, 1]");
    }
    auto [eh, ev] = efficiencies;
    if (!(eh > 0.0 && eh <= 1.0 && ev > 0.0 && ev <= 1.0)) {
        throw std::invalid_argument("apply_2dgc: efficiencies must lie in (0, 1]");
    }
    const Matrix2cd& x = pauli_x();
    Matrix2cd mixed = (1.0 - eps) * rho + eps * (x * rho * x);
    Matrix2cd k = Matrix2cd::Zero();
    k(0, 0) = std::sqrt(eh);
    k(1, 1) = std::sqrt(ev);
    Matrix2cd scaled = k * mixed * k;
    const double weight = scaled.trace().real();
    if (weight < 1e-15) {
        throw std::runtime_error("apply_2dgc: channel annihilated the state");
    }
    return {Matrix2cd(scaled / weight), weight};
}

/// Applies a single-qubit Kraus/scaling map to one qubit of a two-qubit
/// state; shared helper for the interface channels below.
inline ChannelResult<DensityMatrix4> apply_one_qubit_channel(
    const DensityMatrix4& rho, int qubit,
    const std::vector<Matrix2cd>& kraus_ops) {
    if (qubit != 0 && qubit != 1) {
        throw std::invalid_argument("apply_one_qubit_channel: qubit must be 0 or 1");
    }
    Matrix4cd out = Matrix4cd::Zero();
    for (const Matrix2cd& k : kraus_ops) {
        const Matrix4cd k4 = qubit == 0 ? kron(k, pauli_i()) : kron(pauli_i(), k);
        out += k4 * rho * k4.adjoint();
    }
    const double weight = out.trace().real();
    if (weight < 1e-15) {
        throw std::runtime_error("apply_one_qubit_channel: channel annihilated the state");
    }
    return {DensityMatrix4(out / weight), weight};
}

/// 2DGC channel on one qubit of a two-qubit state.
inline ChannelResult<DensityMatrix4> apply_2dgc_on_pair(
    const DensityMatrix4& rho, int qubit, double eps,
    std::pair<double, double> efficiencies) {
    if (!(eps >= 0.0 && eps <= 1.0)) {
        throw std::invalid_argument("apply_2dgc: eps must lie in [0, 1]");
    }
    auto [eh, ev] = efficiencies;
    if (!(eh > 0.0 && eh <= 1.0 && ev > 0.0 && ev <= 1.0)) {
        throw std::invalid_argument("apply_2dgc: efficiencies must lie in (0, 1]");
    }
    Matrix2cd k = Matrix2cd::Zero();
    k(0, 0) = std::sqrt(eh);
    k(1, 1) = std::sqrt(ev);
    const Matrix2cd& x = pauli_x();
    const std::vector<Matrix2cd> kraus = {std::sqrt(1.0 - eps) * k,
                                          std::sqrt(eps) * (k * x)};
    return apply_one_qubit_channel(rho, qubit, kraus);
}

/// Compensation attenuator pair on one qubit (amplitude factors per rail).
inline ChannelResult<DensityMatrix4> attenuate_qubit(const DensityMatrix4& rho, int qubit,
                                                     std::pair<double, double> amplitudes) {
    auto [th, tv] = amplitudes;
    if (!(th >= 0.0 && th <= 1.0 && tv >= 0.0 && tv <= 1.0)) {
        throw std::invalid_argument("attenuate_qubit: amplitudes must lie in [0, 1]");
    }
    Matrix2cd k = Matrix2cd::Zero();
    k(0, 0) = th;
    k(1, 1) = tv;
    return apply_one_qubit_channel(rho, qubit, {k});
}

// ---------------------------------------------------------------------------
// Full preparation pipeline
// ---------------------------------------------------------------------------

/// Full device pipeline: photons in at (0, 2), mesh evolution (with seeded
/// Gaussian phase-setting errors when sigma > 0), two-photon interference at
/// overlap gamma, post-selection to a dual-rail pair, logical frame map,
/// compensation attenuators, and one 2DGC per qubit.  Deterministic for
/// sigma = 0.
inline TwoQubitOutcome prepare_state(const PhaseSettings& settings,
                                     const ConventionFlags& flags,
                                     const NoiseParams& noise, std::uint64_t seed = 0) {
    noise.validate();
    PhaseSettings s = settings.canonicalized();
    if (noise.phase_error_sigma > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> err(0.0, noise.phase_error_sigma);
        for (double* p : {&s.p11, &s.p12, &s.p21, &s.p22, &s.pcr, &s.p23,
                          &s.p1h, &s.p1v, &s.p2h, &s.p2v}) {
            *p += err(rng);
        }
        s = s.canonicalized();
    }
    const ModeUnitary u = build_chip_unitary(s, flags);
    const TwoPhotonState input = TwoPhotonState::photon_pair(4, 0, 2, noise.overlap_gamma);
    TwoQubitOutcome outcome = postselect_dual_rail(evolve_two_photon(u, input), {0, 1}, {2, 3});
    const Matrix4cd frame = logical_frame_map(flags);
    outcome.state = frame * outcome.state * frame.adjoint();

    const std::array<std::pair<double, double>, 2> attenuations = {
        std::pair<double, double>{attenuation_amplitude(s.p1h), attenuation_amplitude(s.p1v)},
        std::pair<double, double>{attenuation_amplitude(s.p2h), attenuation_amplitude(s.p2v)},
    };
    for (int q = 0; q < 2; ++q) {
        auto step = attenuate_qubit(outcome.state, q, attenuations[q]);
        outcome.state = step.state;
        outcome.success_probability *= step.weight;
    }
    for (int q = 0; q < 2; ++q) {
        const std::pair<double, double> eff{noise.arm_efficiencies[2 * q],
                                            noise.arm_efficiencies[2 * q + 1]};
        auto step = apply_2dgc_on_pair(outcome.state, q, noise.crosstalk_epsilon, eff);
        outcome.state = step.state;
        outcome.success_probability *= step.weight;
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// Measurement-side (receiver) unitaries
// ---------------------------------------------------------------------------

/// Error for a receiver configuration that fails to map basis eigenstates
/// onto single detector ports.
class receiver_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Per-qubit dialed phases of a basis analysis row.
inline void basis_sub_settings(PauliBasis b, double& inner, double& outer) {
    switch (b) {
        case PauliBasis::X: inner = pi / 2.0; outer = 0.0; return;
        case PauliBasis::Y: inner = pi / 2.0; outer = pi / 2.0; return;
        case PauliBasis::Z: inner = pi; outer = 0.0; return;
    }
    throw std::invalid_argument("basis_sub_settings: bad basis");
}

/// Phase-table settings for a (possibly mixed) per-qubit basis pair: the
/// per-qubit sub-settings of the matching analysis rows with both inner-mode
/// couplers in the bar state.
inline PhaseSettings receiver_settings(PauliBasis q1, PauliBasis q2) {
    PhaseSettings s;
    basis_sub_settings(q1, s.p11, s.p12);
    basis_sub_settings(q2, s.p21, s.p22);
    s.pcr = pi;
    s.p23 = pi;
    return s;
}

/// 2x2 analysis unitary for one qubit measured in `basis`: backward
/// traversal of the chip block (reciprocity: the transposed block), the
/// logical-frame undo, and a deterministic port relabeling that sends the
/// +1 eigenstate to the upper port.  `actual` optionally substitutes
/// perturbed phases for the mesh while keeping the ideal port labeling.
inline Matrix2cd receiver_qubit_unitary(PauliBasis q1, PauliBasis q2, int qubit,
                                        const ConventionFlags& flags,
                                        const std::optional<PhaseSettings>& actual =
                                            std::nullopt,
                                        double tol = 1e-9) {
    if (qubit != 0 && qubit != 1) {
        throw std::invalid_argument("receiver_qubit_unitary: qubit must be 0 or 1");
    }
    const PhaseSettings ideal = receiver_settings(q1, q2);
    const auto block_of = [&](const PhaseSettings& settings) {
        const MatrixXcd u = build_chip_unitary(settings, flags).entries;
        const double off_block = u.block<2, 2>(0, 2).norm() + u.block<2, 2>(2, 0).norm();
        if (off_block > 1e-9) {
            throw receiver_error(
                "receiver: crossing coupler is not in the bar state under these "
                "conventions");
        }
        return Matrix2cd(u.block<2, 2>(2 * qubit, 2 * qubit).transpose());
    };

    Matrix2cd frame_undo = Matrix2cd::Identity();
    frame_undo(1, 1) =
        std::exp(-iunit * (qubit == 0 ? flags.frame_q1 : flags.frame_q2));
    Matrix2cd logical_undo = frame_undo;
    if (qubit == 1 && flags.qubit2_logical_flip) {
        logical_undo = pauli_x() * logical_undo;
    }
    // The arriving amplitudes are logical, so map them back to raw rails
    // first, then traverse the mesh backward.
    const Matrix2cd w = block_of(actual.value_or(ideal)) * logical_undo;

    const PauliBasis basis = qubit == 0 ? q1 : q2;
    const auto [plus, minus] = pauli_eigenvectors(basis);
    const Vector2cd exit_plus = block_of(ideal) * logical_undo * plus;
    const double p_up = std::norm(exit_plus(0));
    const double p_low = std::norm(exit_plus(1));
    if (std::min(p_up, p_low) > tol) {
        std::ostringstream msg;
        msg << "receiver: basis " << basis_letter(basis) << " on qubit " << (qubit + 1)
            << " is not deterministic (port probabilities " << p_up << ", " << p_low
            << ")";
        throw receiver_error(msg.str());
    }
    Matrix2cd relabel = Matrix2cd::Identity();
    if (p_low > p_up) relabel = pauli_x();
    return relabel * w;
}

/// 4-mode analysis unitary for a basis pair; block diagonal over the two
/// rail pairs.  Computational detection on the four ports then realizes the
/// basis measurement: ports (0, 2) read ++, (0, 3) +-, (1, 2) -+, (1, 3) --.
inline ModeUnitary build_receiver_unitary(PauliBasis q1, PauliBasis q2,
                                          const ConventionFlags& flags) {
    MatrixXcd r = MatrixXcd::Zero(4, 4);
    r.block<2, 2>(0, 0) = receiver_qubit_unitary(q1, q2, 0, flags);
    r.block<2, 2>(2, 2) = receiver_qubit_unitary(q1, q2, 1, flags);
    ModeUnitary out;
    out.entries = std::move(r);
    if (!is_unitary(out.entries, 1e-10)) {
        throw receiver_error("receiver: analysis matrix failed the unitarity check");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Convention calibration
// ---------------------------------------------------------------------------

/// One calibration requirement: either a labeled two-qubit target ket for a
/// settings row, or a per-qubit basis pair whose analysis must be
/// deterministic.
struct CalibrationTarget {
    std::string label;
    PhaseSettings settings;
    std::optional<Vector4cd> state;
    std::optional<std::pair<PauliBasis, PauliBasis>> basis;

    static CalibrationTarget for_state(std::string label, PhaseSettings s, Vector4cd v) {
        CalibrationTarget t;
        t.label = std::move(label);
        t.settings = s;
        t.state = v;
        return t;
    }
    static CalibrationTarget for_basis(std::string label, PauliBasis b1, PauliBasis b2) {
        CalibrationTarget t;
        t.label = std::move(label);
        t.settings = receiver_settings(b1, b2);
        t.basis = std::make_pair(b1, b2);
        return t;
    }
};

/// The eight state rows plus the three analysis rows of the phase table.
inline std::vector<CalibrationTarget> default_calibration_targets() {
    std::vector<CalibrationTarget> targets;
    for (const char* name :
         {"HV", "PM", "PiMi", "PhiPlus", "PhiMinus", "PsiPlus", "PsiMinus", "Cluster"}) {
        targets.push_back(CalibrationTarget::for_state(name, preset(name), target_state(name)));
    }
    targets.push_back(CalibrationTarget::for_basis("XX", PauliBasis::X, PauliBasis::X));
    targets.push_back(CalibrationTarget::for_basis("YY", PauliBasis::Y, PauliBasis::Y));
    targets.push_back(CalibrationTarget::for_basis("ZZ", PauliBasis::Z, PauliBasis::Z));
    return targets;
}

struct CalibrationReport {
    ConventionFlags flags;                                   // first satisfying set
    int satisfying_count = 0;                                // over the full search
    std::vector<ConventionFlags> satisfying;                 // deterministic order
    std::vector<std::pair<std::string, double>> row_fidelities;  // winner, state rows
};

/// Calibration failure carrying the best-achieving flag set and its per-row
/// fidelities; this diagnostic is itself a meaningful result.
class calibration_error : public std::runtime_error {
  public:
    calibration_error(const std::string& msg, ConventionFlags best,
                      std::vector<std::pair<std::string, double>> fidelities)
        : std::runtime_error(msg), best_flags(best), row_fidelities(std::move(fidelities)) {}
    ConventionFlags best_flags;
    std::vector<std::pair<std::string, double>> row_fidelities;
};

namespace detail {

/// Pure post-selected rail amplitudes before any logical mapping.
inline Vector4cd raw_postselected_amps(const PhaseSettings& settings,
                                       const ConventionFlags& flags) {
    const ModeUnitary u = build_chip_unitary(settings, flags);
    const TwoPhotonState out = evolve_two_photon(u, TwoPhotonState::photon_pair(4, 0, 2));
    Vector4cd amps;
    for (int b1 = 0; b1 < 2; ++b1) {
        for (int b2 = 0; b2 < 2; ++b2) {
            amps(2 * b1 + b2) = out.unordered_amplitude(b1, 2 + b2);
        }
    }
    return amps;
}

/// Tries to determine the two frame phases from the first target whose raw
/// state and labeled target are both product states with support on every
/// rail.  Returns false if no target pins the frames (they default to 0).
inline bool extract_frames(const std::vector<CalibrationTarget>& targets,
                           ConventionFlags& flags) {
    flags.frame_q1 = 0.0;
    flags.frame_q2 = 0.0;
    for (const CalibrationTarget& t : targets) {
        if (!t.state) continue;
        Vector4cd raw = raw_postselected_amps(t.settings, flags);
        const double n = raw.norm();
        if (n < 1e-9) continue;
        raw /= n;
        if (flags.qubit2_logical_flip) {
            raw = kron(pauli_i(), pauli_x()) * raw;
        }
        const Vector4cd target = t.state->normalized();
        auto [s_raw0, s_raw1] = schmidt_coefficients(raw);
        auto [s_t0, s_t1] = schmidt_coefficients(target);
        if (s_raw1 > 1e-9 * s_raw0 || s_t1 > 1e-9 * s_t0) continue;
        auto [u_raw, v_raw] = factor_product_state(raw);
        auto [u_t, v_t] = factor_product_state(target);
        const double floor = 1e-6;
        if (std::abs(u_raw(0)) < floor || std::abs(u_raw(1)) < floor ||
            std::abs(v_raw(0)) < floor || std::abs(v_raw(1)) < floor ||
            std::abs(u_t(0)) < floor || std::abs(u_t(1)) < floor ||
            std::abs(v_t(0)) < floor || std::abs(v_t(1)) < floor) {
            continue;
        }
        // diag(1, e^{i chi}) u_raw ∝ u_t  =>  e^{i chi} = (u_t1 u_raw0)/(u_t0 u_raw1)
        const complexd r1 = (u_t(1) * u_raw(0)) / (u_t(0) * u_raw(1));
        const complexd r2 = (v_t(1) * v_raw(0)) / (v_t(0) * v_raw(1));
        flags.frame_q1 = wrap_phase(std::arg(r1));
        flags.frame_q2 = wrap_phase(std::arg(r2));
        return true;
    }
    return false;
}

/// Fidelity of the labeled target to the noiseless logical state of a row.
inline double row_fidelity(const CalibrationTarget& t, const ConventionFlags& flags) {
    Vector4cd raw = raw_postselected_amps(t.settings, flags);
    const double n = raw.norm();
    if (n < 1e-9) return 0.0;
    const Vector4cd logical = logical_frame_map(flags) * (raw / n);
    const Vector4cd target = t.state->normalized();
    return std::norm(target.dot(logical));
}

/// True when both qubits' analysis for the basis pair maps each eigenstate
/// onto a single port within tol.
inline bool basis_deterministic(const std::pair<PauliBasis, PauliBasis>& basis,
                                const ConventionFlags& flags, double tol) {
    try {
        for (int qubit = 0; qubit < 2; ++qubit) {
            (void)receiver_qubit_unitary(basis.first, basis.second, qubit, flags,
                                         std::nullopt, tol);
        }
    } catch (const receiver_error&) {
        return false;
    }
    return true;
}

}  // namespace detail

/// Exhaustive search over the discrete convention space (256 assignments;
/// the preparation-MZI arm is fixed because flipping it only re-signs the
/// inner phase up to a per-photon global phase).  For each assignment the
/// two frame phases are read off the first frame-pinning product row, then
/// every state row must reach fidelity >= 1 - 1e-6 and every basis row must
/// analyze deterministically.  Deterministic order; the first satisfying
/// assignment is returned along with the full count.
inline CalibrationReport calibrate_conventions(
    const std::vector<CalibrationTarget>& targets = default_calibration_targets()) {
    if (targets.empty()) {
        throw std::invalid_argument("calibrate_conventions: no targets given");
    }
    bool any_state = false;
    for (const CalibrationTarget& t : targets) {
        if (t.state && t.basis) {
            throw std::invalid_argument(
                "calibrate_conventions: target '" + t.label +
                "' carries both a state and a basis requirement");
        }
        if (!t.state && !t.basis) {
            throw std::invalid_argument("calibrate_conventions: target '" + t.label +
                                        "' carries no requirement");
        }
        any_state |= t.state.has_value();
    }
    if (!any_state) {
        throw std::invalid_argument(
            "calibrate_conventions: at least one state target is required");
    }

    constexpr double kFidelityFloor = 1.0 - 1e-6;
    constexpr double kBasisTol = 1e-6;

    CalibrationReport report;
    double best_min_fidelity = -1.0;
    ConventionFlags best_flags;
    std::vector<std::pair<std::string, double>> best_rows;

    // Default-first orderings keep the returned winner stable.
    const std::array<MmiConvention, 2> mmis{MmiConvention::symmetric_i,
                                            MmiConvention::real_hadamard};
    const std::array<int, 2> signs{+1, -1};
    const std::array<Arm, 2> cross_arms{Arm::lower, Arm::upper};
    const std::array<Arm, 2> back_arms{Arm::upper, Arm::lower};
    const std::array<Arm, 2> outer1_arms{Arm::lower, Arm::upper};
    const std::array<Arm, 2> outer2_arms{Arm::lower, Arm::upper};
    const std::array<bool, 2> flips{false, true};
    const std::array<double, 2> bars{pi, 0.0};

    for (MmiConvention mmi : mmis)
        for (int sign : signs)
            for (Arm cross : cross_arms)
                for (Arm back : back_arms)
                    for (Arm outer1 : outer1_arms)
                        for (Arm outer2 : outer2_arms)
                            for (bool flip : flips)
                                for (double bar : bars) {
                                    ConventionFlags flags;
                                    flags.mmi = mmi;
                                    flags.inner_phase_sign = sign;
                                    flags.cross_inner_arm = cross;
                                    flags.back_inner_arm = back;
                                    flags.outer_arm_q1 = outer1;
                                    flags.outer_arm_q2 = outer2;
                                    flags.qubit2_logical_flip = flip;
                                    flags.bar_phase = bar;
                                    detail::extract_frames(targets, flags);

                                    double min_fid = 2.0;
                                    std::vector<std::pair<std::string, double>> rows;
                                    bool bases_ok = true;
                                    for (const CalibrationTarget& t : targets) {
                                        if (t.state) {
                                            const double f = detail::row_fidelity(t, flags);
                                            rows.emplace_back(t.label, f);
                                            min_fid = std::min(min_fid, f);
                                        } else if (!detail::basis_deterministic(
                                                       *t.basis, flags, kBasisTol)) {
                                            bases_ok = false;
                                        }
                                    }
                                    if (bases_ok && min_fid > best_min_fidelity) {
                                        best_min_fidelity = min_fid;
                                        best_flags = flags;
                                        best_rows = rows;
                                    }
                                    if (bases_ok && min_fid >= kFidelityFloor) {
                                        if (report.satisfying.empty()) {
                                            report.flags = flags;
                                            report.row_fidelities = rows;
                                        }
                                        report.satisfying.push_back(flags);
                                    }
                                }
    report.satisfying_count = static_cast<int>(report.satisfying.size());
    if (report.satisfying_count == 0) {
        std::ostringstream msg;
        msg << "calibrate_conventions: no convention assignment reproduces every "
               "target; best minimum fidelity "
            << best_min_fidelity << " with per-row fidelities:";
        for (const auto& [label, f] : best_rows) msg << ' ' << label << '=' << f;
        throw calibration_error(msg.str(), best_flags, best_rows);
    }
    return report;
}

}  // namespace duorail
