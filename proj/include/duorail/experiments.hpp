#pragma once

/// End-to-end experiment pipelines on the four-mode chip:
///   - two-photon interference dip scan (visibility vs arrival-time delay),
///   - on-chip state preparation followed by ideal-projector tomography,
///   - analysis-side tomography of an externally supplied state through the
///     chip running as two measurement units, with an ideal reference run
///     and the relative fidelity,
///   - two-chip cascade: prepare on one chip, fiber links, analyze on a
///     second chip.
/// Every pipeline is deterministic given (configuration, seed); independent
/// RNG streams are derived per stage so stages cannot alias.

#include "chip.hpp"
#include "tomography.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace duorail {

/// Photon coherence time implied by a 1.5 nm FWHM Gaussian bandpass at
/// 1550 nm: sigma_nu = c * d_lambda / lambda^2 / (2 sqrt(2 ln 2)), and
/// T_c = 1 / (2 pi sigma_nu), in picoseconds (about 2.0024 ps).
inline double default_coherence_time_ps() {
    const double c_m_per_s = 299792458.0;
    const double lambda_m = 1550e-9;
    const double fwhm_lambda_m = 1.5e-9;
    const double fwhm_nu_hz = c_m_per_s * fwhm_lambda_m / (lambda_m * lambda_m);
    const double sigma_nu_hz = fwhm_nu_hz / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    return 1e12 / (2.0 * pi * sigma_nu_hz);
}

/// Chip settings for the interference dip: route both photons onto the
/// inner mode pair and set the crossing coupler to 50:50 splitting.
inline PhaseSettings hom_settings(const ConventionFlags& flags) {
    PhaseSettings s;
    s.p11 = wrap_phase(flags.bar_phase + pi);       // cross: mode 0 -> 1
    s.p12 = 0.0;
    s.p21 = flags.bar_phase;                        // bar: photon stays on 2
    s.p22 = 0.0;
    s.pcr = wrap_phase(flags.bar_phase - pi / 2.0); // 50:50 splitting
    s.p23 = flags.bar_phase;
    return s;
}

struct HomCurve {
    std::vector<double> delays_ps;
    std::vector<double> coincidence_rates;
    double fitted_visibility = 0.0;
    double baseline_rate = 0.0;      // large-delay rate the fit normalizes by
    double coherence_time_ps = 0.0;
};

/// Evenly spaced symmetric delays, -max..+max inclusive.
inline std::vector<double> symmetric_delays(double max_delay_ps, int points) {
    if (points < 5) throw std::invalid_argument("symmetric_delays: need >= 5 points");
    if (!(max_delay_ps > 0.0)) {
        throw std::invalid_argument("symmetric_delays: max delay must be positive");
    }
    std::vector<double> out(points);
    for (int i = 0; i < points; ++i) {
        out[i] = -max_delay_ps + 2.0 * max_delay_ps * i / (points - 1);
    }
    return out;
}

/// Interference dip scan.  The pairwise photon overlap decays as
/// gamma(tau) = gamma0 exp(-tau^2 / (2 T_c^2)); the coincidence rate across
/// the two inner output modes is computed per delay (analytically
/// R = (1 - |gamma|^2) / 2), optionally Poisson-sampled with `shots` pairs
/// per delay.  Visibility is (R_inf - R_min) / R_inf with R_inf the mean
/// rate over the outer 10% of the delay range.
inline HomCurve run_hom_scan(const std::vector<double>& delays_ps, double gamma0,
                             double coherence_time_ps, const ConventionFlags& flags,
                             double shots = 0.0, std::uint64_t seed = 0) {
    if (delays_ps.size() < 5) {
        throw std::invalid_argument("run_hom_scan: need at least 5 delay points");
    }
    if (!(coherence_time_ps > 0.0)) {
        throw std::invalid_argument("run_hom_scan: coherence time must be positive");
    }
    if (!(gamma0 >= 0.0 && gamma0 <= 1.0)) {
        throw std::invalid_argument("run_hom_scan: gamma0 must lie in [0, 1]");
    }
    const ModeUnitary u = build_chip_unitary(hom_settings(flags), flags);
    HomCurve curve;
    curve.delays_ps = delays_ps;
    curve.coherence_time_ps = coherence_time_ps;
    curve.coincidence_rates.reserve(delays_ps.size());
    std::mt19937_64 rng(seed);
    double max_abs_delay = 0.0;
    for (double tau : delays_ps) max_abs_delay = std::max(max_abs_delay, std::abs(tau));
    for (double tau : delays_ps) {
        const double gamma =
            gamma0 * std::exp(-tau * tau / (2.0 * coherence_time_ps * coherence_time_ps));
        const TwoPhotonState state =
            evolve_two_photon(u, TwoPhotonState::photon_pair(4, 0, 2, gamma));
        double rate = coincidence_probability(state, {1, 2});
        if (shots > 0.0) {
            const double mean = shots * rate;
            if (mean > 0.0) {
                std::poisson_distribution<long long> poisson(mean);
                rate = static_cast<double>(poisson(rng)) / shots;
            } else {
                rate = 0.0;
            }
        }
        curve.coincidence_rates.push_back(rate);
    }
    double baseline = 0.0;
    int baseline_points = 0;
    double minimum = curve.coincidence_rates.front();
    for (std::size_t i = 0; i < delays_ps.size(); ++i) {
        minimum = std::min(minimum, curve.coincidence_rates[i]);
        if (std::abs(delays_ps[i]) >= 0.9 * max_abs_delay) {
            baseline += curve.coincidence_rates[i];
            ++baseline_points;
        }
    }
    if (baseline_points == 0 || baseline <= 0.0) {
        throw std::runtime_error("run_hom_scan: no usable large-delay baseline");
    }
    baseline /= baseline_points;
    curve.baseline_rate = baseline;
    curve.fitted_visibility =
        std::min(1.0, std::max(0.0, (baseline - minimum) / baseline));
    return curve;
}

/// Outcome of one tomography pipeline: the reconstruction and its metrics
/// against a target, with optional bootstrap standard deviations.
struct ExperimentReport {
    std::string label;
    DensityMatrix4 reconstructed = DensityMatrix4::Identity() / 4.0;
    double fidelity = 0.0;
    double purity = 0.0;
    double fidelity_sigma = 0.0;
    double purity_sigma = 0.0;
    double success_probability = 1.0;
    long mle_iterations = 0;
    int bootstrap_skipped = 0;
    CountsDataset counts;
    // Analysis-side runs also carry the ideal-reference comparison.
    bool has_reference_run = false;
    double reference_fidelity = 0.0;
    double reference_fidelity_sigma = 0.0;
    double reference_purity = 0.0;
    double relative = 0.0;
    double relative_sigma = 0.0;
};

namespace detail {

/// Shared tail of every tomography pipeline: counts -> reconstruction ->
/// metrics -> optional bootstrap.
inline ExperimentReport reconstruct_and_score(
    const std::string& label, const std::array<std::array<double, 4>, 9>& probabilities,
    const DensityMatrix4& target, double shots, bool exact_frequency, int resamples,
    std::uint64_t counts_seed, std::uint64_t bootstrap_seed) {
    ExperimentReport report;
    report.label = label;
    report.counts = exact_frequency
                        ? exact_counts_from_probabilities(probabilities, shots)
                        : sample_counts_from_probabilities(probabilities, shots, counts_seed);
    const MleResult mle = mle_reconstruct(report.counts);
    report.reconstructed = mle.state;
    report.mle_iterations = mle.iterations;
    report.fidelity = fidelity(mle.state, target);
    report.purity = purity(mle.state);
    if (resamples > 0) {
        const BootstrapErrors errors =
            bootstrap_errors(report.counts, target, resamples, bootstrap_seed);
        report.fidelity_sigma = errors.fidelity_sigma;
        report.purity_sigma = errors.purity_sigma;
        report.bootstrap_skipped = errors.skipped;
    }
    return report;
}

}  // namespace detail

/// On-chip preparation of a named phase-table row followed by tomography
/// with ideal polarization projectors (the external analysis bench).
inline ExperimentReport run_state_prep_experiment(const std::string& preset_name,
                                                  const ConventionFlags& flags,
                                                  const NoiseParams& noise, double shots,
                                                  int resamples, std::uint64_t seed,
                                                  bool exact_frequency) {
    const TwoQubitOutcome prepared =
        prepare_state(preset(preset_name), flags, noise, mix_seed(seed, 0));
    const DensityMatrix4 target = density_from_ket(target_state(preset_name));
    ExperimentReport report = detail::reconstruct_and_score(
        preset_name, setting_probabilities(prepared.state), target, shots, exact_frequency,
        resamples, mix_seed(seed, 1), mix_seed(seed, 2));
    report.success_probability = prepared.success_probability;
    return report;
}

/// Outcome probabilities of all nine analysis settings when the chip runs
/// as two measurement units: one receiving-direction 2DGC per qubit, then
/// the per-setting analysis unitaries with detectors on the four ports.
/// Phase-setting errors (sigma > 0) perturb each setting's dial
/// independently; the crossing coupler stays at its bar point (its shifter
/// is not part of the analysis dial).
struct ReceiverMeasurement {
    std::array<std::array<double, 4>, 9> probabilities{};
    double channel_weight = 1.0;  // success weight of the two 2DGCs
};

inline ReceiverMeasurement measure_with_receiver(const DensityMatrix4& input,
                                                 const ConventionFlags& flags,
                                                 const NoiseParams& receiver_noise,
                                                 std::uint64_t seed) {
    receiver_noise.validate();
    if (!is_physical_state(input, 1e-9)) {
        throw std::invalid_argument("measure_with_receiver: input is not a density matrix");
    }
    ReceiverMeasurement out;
    DensityMatrix4 rho = input;
    for (int q = 0; q < 2; ++q) {
        const std::pair<double, double> eff{receiver_noise.arm_efficiencies[2 * q],
                                            receiver_noise.arm_efficiencies[2 * q + 1]};
        const auto step =
            apply_2dgc_on_pair(rho, q, receiver_noise.crosstalk_epsilon, eff);
        rho = step.state;
        out.channel_weight *= step.weight;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> err(0.0, receiver_noise.phase_error_sigma);
    for (int si = 0; si < 9; ++si) {
        const MeasurementSetting setting = all_settings()[si];
        std::optional<PhaseSettings> actual;
        if (receiver_noise.phase_error_sigma > 0.0) {
            PhaseSettings dialed = receiver_settings(setting.q1, setting.q2);
            for (double* p :
                 {&dialed.p11, &dialed.p12, &dialed.p21, &dialed.p22, &dialed.p23}) {
                *p += err(rng);
            }
            actual = dialed.canonicalized();
        }
        const Matrix2cd r1 = receiver_qubit_unitary(setting.q1, setting.q2, 0, flags, actual);
        const Matrix2cd r2 = receiver_qubit_unitary(setting.q1, setting.q2, 1, flags, actual);
        const Matrix4cd r = kron(r1, r2);
        const Vector4cd diag = (r * rho * r.adjoint()).diagonal();
        for (int oi = 0; oi < 4; ++oi) {
            out.probabilities[si][oi] = std::max(0.0, diag(oi).real());
        }
    }
    return out;
}

/// Analysis-side tomography of an externally supplied state through the
/// chip, benchmarked against the ideal-projector reference run of the same
/// state; reports both reconstructions and the relative fidelity.
inline ExperimentReport run_onchip_tomography(const DensityMatrix4& input_state,
                                              const ConventionFlags& flags,
                                              const NoiseParams& receiver_noise,
                                              double shots, int resamples,
                                              std::uint64_t seed, bool exact_frequency) {
    const ReceiverMeasurement measured =
        measure_with_receiver(input_state, flags, receiver_noise, mix_seed(seed, 10));
    ExperimentReport report = detail::reconstruct_and_score(
        "onchip", measured.probabilities, input_state, shots, exact_frequency, resamples,
        mix_seed(seed, 11), mix_seed(seed, 12));
    report.success_probability = measured.channel_weight;

    const ExperimentReport reference = detail::reconstruct_and_score(
        "offchip-reference", setting_probabilities(input_state), input_state, shots,
        exact_frequency, resamples, mix_seed(seed, 13), mix_seed(seed, 14));
    report.has_reference_run = true;
    report.reference_fidelity = reference.fidelity;
    report.reference_fidelity_sigma = reference.fidelity_sigma;
    report.reference_purity = reference.purity;
    report.relative = relative_fidelity(report.fidelity, reference.fidelity);
    if (report.fidelity > 0.0 && reference.fidelity > 0.0) {
        const double a = report.fidelity_sigma / report.fidelity;
        const double b = reference.fidelity_sigma / reference.fidelity;
        report.relative_sigma = report.relative * std::sqrt(a * a + b * b);
    }
    return report;
}

/// Two-chip cascade: prepare a named row on the sender (with its 2DGCs),
/// apply static per-qubit fiber polarization unitaries, analyze on the
/// receiver chip; metrics are against the row's labeled target.
inline ExperimentReport run_chip_to_chip(const std::string& preset_name,
                                         const ConventionFlags& flags,
                                         const NoiseParams& sender_noise,
                                         const Matrix2cd& channel_q1,
                                         const Matrix2cd& channel_q2,
                                         const NoiseParams& receiver_noise, double shots,
                                         int resamples, std::uint64_t seed,
                                         bool exact_frequency) {
    if (!is_unitary(channel_q1, 1e-12) || !is_unitary(channel_q2, 1e-12)) {
        throw std::invalid_argument("run_chip_to_chip: channel matrices must be unitary");
    }
    const TwoQubitOutcome prepared =
        prepare_state(preset(preset_name), flags, sender_noise, mix_seed(seed, 20));
    const Matrix4cd link = kron(channel_q1, channel_q2);
    const DensityMatrix4 after_link = link * prepared.state * link.adjoint();
    const ReceiverMeasurement measured =
        measure_with_receiver(after_link, flags, receiver_noise, mix_seed(seed, 21));
    const DensityMatrix4 target = density_from_ket(target_state(preset_name));
    ExperimentReport report = detail::reconstruct_and_score(
        preset_name, measured.probabilities, target, shots, exact_frequency, resamples,
        mix_seed(seed, 22), mix_seed(seed, 23));
    report.success_probability = prepared.success_probability * measured.channel_weight;
    return report;
}

/// Measured value from the reference hardware that a simulated metric
/// is reported next to (value and one-sigma error, as fractions).
struct ReferenceMetric {
    double value = 0.0;
    double sigma = 0.0;
};

/// Reference-device values keyed by metric name: preset names map to the
/// measured preparation fidelity/purity, and the named experiment metrics
/// cover the dip visibility, the analysis-side run, and the two-chip run.
inline std::optional<ReferenceMetric> reference_metric(const std::string& key) {
    if (key == "HV_fidelity") return ReferenceMetric{0.99274, 0.00015};
    if (key == "HV_purity") return ReferenceMetric{0.9998, 0.0003};
    if (key == "PM_fidelity") return ReferenceMetric{0.99553, 0.00014};
    if (key == "PM_purity") return ReferenceMetric{0.9940, 0.0003};
    if (key == "PiMi_fidelity") return ReferenceMetric{0.9913, 0.0002};
    if (key == "PiMi_purity") return ReferenceMetric{0.9884, 0.0005};
    if (key == "PhiPlus_fidelity") return ReferenceMetric{0.9813, 0.0007};
    if (key == "PhiPlus_purity") return ReferenceMetric{0.9770, 0.0014};
    if (key == "PhiMinus_fidelity") return ReferenceMetric{0.9700, 0.0007};
    if (key == "PhiMinus_purity") return ReferenceMetric{0.9809, 0.0015};
    if (key == "PsiPlus_fidelity") return ReferenceMetric{0.9825, 0.0006};
    if (key == "PsiPlus_purity") return ReferenceMetric{0.9836, 0.0013};
    if (key == "PsiMinus_fidelity") return ReferenceMetric{0.9739, 0.0007};
    if (key == "PsiMinus_purity") return ReferenceMetric{0.9757, 0.0015};
    if (key == "Cluster_fidelity") return ReferenceMetric{0.900, 0.016};
    if (key == "Cluster_purity") return ReferenceMetric{0.91, 0.03};
    if (key == "hom_visibility") return ReferenceMetric{0.995, 0.004};
    if (key == "onchip_fidelity") return ReferenceMetric{0.973, 0.002};
    if (key == "onchip_purity") return ReferenceMetric{0.976, 0.005};
    if (key == "offchip_fidelity") return ReferenceMetric{0.99109, 0.00006};
    if (key == "offchip_purity") return ReferenceMetric{0.99321, 0.00015};
    if (key == "relative_fidelity") return ReferenceMetric{0.982, 0.002};
    if (key == "chip_to_chip_fidelity") return ReferenceMetric{0.900, 0.016};
    if (key == "chip_to_chip_purity") return ReferenceMetric{0.91, 0.03};
    return std::nullopt;
}

}  // namespace duorail
