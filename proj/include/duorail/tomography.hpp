#pragma once

/// Two-qubit Pauli tomography: projective settings, Poisson count
/// simulation, diluted fixed-point maximum-likelihood reconstruction, and
/// state metrics (Uhlmann fidelity, purity) with Poisson-bootstrap errors.
///
/// Counts are modeled as independent Poisson variates per projector, which
/// matches coincidence counting; because every iterate is trace-1 the sum of
/// all 36 projector probabilities is the constant 9, so the Poisson
/// log-likelihood equals the multinomial one up to a state-independent
/// constant and the reconstruction maximizes both.
///
/// Counts are stored as doubles: "exact-frequency" datasets (counts equal to
/// shots times probability, no sampling) are first-class for deterministic
/// pipelines, and Poisson draws embed exactly.

#include "linalg.hpp"
#include "states.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace duorail {

/// One tomography setting: a Pauli basis per qubit.
struct MeasurementSetting {
    PauliBasis q1 = PauliBasis::X;
    PauliBasis q2 = PauliBasis::X;
};

/// The nine settings in fixed order XX, XY, XZ, YX, ..., ZZ.
inline const std::array<MeasurementSetting, 9>& all_settings() {
    static const std::array<MeasurementSetting, 9> settings = [] {
        std::array<MeasurementSetting, 9> s{};
        const std::array<PauliBasis, 3> bases{PauliBasis::X, PauliBasis::Y, PauliBasis::Z};
        int i = 0;
        for (PauliBasis b1 : bases)
            for (PauliBasis b2 : bases) s[i++] = {b1, b2};
        return s;
    }();
    return settings;
}

inline std::string setting_label(const MeasurementSetting& s) {
    return std::string{basis_letter(s.q1), basis_letter(s.q2)};
}

/// Outcome order: ++, +-, -+, -- (first sign = qubit 1).
inline const std::array<std::string, 4>& outcome_labels() {
    static const std::array<std::string, 4> labels = {"pp", "pm", "mp", "mm"};
    return labels;
}

/// Eigenstate kets of the four outcomes of a setting, in outcome order.
inline std::array<Vector4cd, 4> projector_kets(const MeasurementSetting& s) {
    const auto [p1, m1] = pauli_eigenvectors(s.q1);
    const auto [p2, m2] = pauli_eigenvectors(s.q2);
    return {kron(p1, p2), kron(p1, m2), kron(m1, p2), kron(m1, m2)};
}

/// Rank-1 projectors of the four outcomes; they sum to the identity.
inline std::array<Matrix4cd, 4> projectors(const MeasurementSetting& s) {
    const std::array<Vector4cd, 4> kets = projector_kets(s);
    std::array<Matrix4cd, 4> out;
    for (int i = 0; i < 4; ++i) out[i] = kets[i] * kets[i].adjoint();
    return out;
}

/// Born-rule outcome probabilities of a setting; validates the state.
inline std::array<double, 4> born_probabilities(const DensityMatrix4& rho,
                                                const MeasurementSetting& s) {
    if (!is_physical_state(rho, 1e-10)) {
        throw std::invalid_argument("born_probabilities: state is not a density matrix");
    }
    const std::array<Vector4cd, 4> kets = projector_kets(s);
    std::array<double, 4> p{};
    for (int i = 0; i < 4; ++i) {
        p[i] = std::max(0.0, kets[i].dot(rho * kets[i]).real());
    }
    return p;
}

/// Coincidence counts of a full 9-setting tomography run.
struct CountsDataset {
    double shots_per_setting = 0.0;
    std::array<std::array<double, 4>, 9> counts{};  // [setting][outcome]

    double total() const {
        double t = 0.0;
        for (const auto& group : counts)
            for (double c : group) t += c;
        return t;
    }

    void validate() const {
        if (!(shots_per_setting >= 0.0) || !std::isfinite(shots_per_setting)) {
            throw std::invalid_argument("CountsDataset: bad shots_per_setting");
        }
        for (const auto& group : counts) {
            for (double c : group) {
                if (!(c >= 0.0) || !std::isfinite(c)) {
                    throw std::invalid_argument(
                        "CountsDataset: counts must be finite and non-negative");
                }
            }
        }
    }
};

/// Exact-frequency dataset from a 9x4 probability table.
inline CountsDataset exact_counts_from_probabilities(
    const std::array<std::array<double, 4>, 9>& probabilities, double shots_per_setting) {
    if (!(shots_per_setting > 0.0)) {
        throw std::invalid_argument("exact_counts: shots_per_setting must be positive");
    }
    CountsDataset data;
    data.shots_per_setting = shots_per_setting;
    for (int si = 0; si < 9; ++si)
        for (int oi = 0; oi < 4; ++oi)
            data.counts[si][oi] = shots_per_setting * probabilities[si][oi];
    return data;
}

/// Poisson-sampled dataset from a 9x4 probability table; one generator,
/// draws in (setting, outcome) order, zero mean draws exactly zero.
inline CountsDataset sample_counts_from_probabilities(
    const std::array<std::array<double, 4>, 9>& probabilities, double shots_per_setting,
    std::uint64_t seed) {
    if (!(shots_per_setting > 0.0)) {
        throw std::invalid_argument("simulate_counts: shots_per_setting must be positive");
    }
    CountsDataset data;
    data.shots_per_setting = shots_per_setting;
    std::mt19937_64 rng(seed);
    for (int si = 0; si < 9; ++si) {
        for (int oi = 0; oi < 4; ++oi) {
            const double mean = shots_per_setting * probabilities[si][oi];
            if (mean <= 0.0) {
                data.counts[si][oi] = 0.0;
                continue;
            }
            std::poisson_distribution<long long> poisson(mean);
            data.counts[si][oi] = static_cast<double>(poisson(rng));
        }
    }
    return data;
}

inline std::array<std::array<double, 4>, 9> setting_probabilities(const DensityMatrix4& rho) {
    std::array<std::array<double, 4>, 9> p{};
    for (int si = 0; si < 9; ++si) p[si] = born_probabilities(rho, all_settings()[si]);
    return p;
}

/// Counts equal to shots times the Born probabilities (no sampling).
inline CountsDataset exact_counts(const DensityMatrix4& rho, double shots_per_setting) {
    return exact_counts_from_probabilities(setting_probabilities(rho), shots_per_setting);
}

/// Independent Poisson counts with mean shots times the Born probabilities;
/// deterministic given the seed.
inline CountsDataset simulate_counts(const DensityMatrix4& rho, double shots_per_setting,
                                     std::uint64_t seed) {
    return sample_counts_from_probabilities(setting_probabilities(rho), shots_per_setting,
                                            seed);
}

/// Poisson log-likelihood of the dataset under `rho`, dropping the
/// state-independent terms (valid across trace-1 states, where the total
/// expected count is constant).  Probabilities are floored at 1e-12.
inline double log_likelihood(const DensityMatrix4& rho, const CountsDataset& data) {
    data.validate();
    double ll = 0.0;
    for (int si = 0; si < 9; ++si) {
        const std::array<double, 4> p = born_probabilities(rho, all_settings()[si]);
        for (int oi = 0; oi < 4; ++oi) {
            const double c = data.counts[si][oi];
            if (c > 0.0) ll += c * std::log(std::max(p[oi], 1e-12));
        }
    }
    return ll;
}

struct MleOptions {
    double step_tolerance = 1e-10;   // trace distance between successive iterates
    long max_iterations = 100000;
    double initial_dilution = 0.5;   // lambda, halved on likelihood decrease
};

struct MleResult {
    DensityMatrix4 state;
    long iterations = 0;
    double final_step = 0.0;      // last iterate-to-iterate trace distance
    double log_likelihood = 0.0;  // at the returned state, before clipping
};

/// Non-convergence diagnostic carrying the last iterate and its residual
/// step size.
class MleError : public std::runtime_error {
  public:
    MleError(const std::string& msg, DensityMatrix4 last, double step)
        : std::runtime_error(msg), last_iterate(std::move(last)), residual_step(step) {}
    DensityMatrix4 last_iterate;
    double residual_step = 0.0;
};

/// Maximum-likelihood reconstruction by the diluted fixed-point iteration
///   rho <- normalize((1 - lambda) rho + lambda R rho R),
///   R = sum_i (f_i / p_i) Pi_i over all 36 projectors,
/// with f_i the count fractions (so R = identity at the fixed point),
/// starting from the maximally mixed state.  lambda starts at
/// `initial_dilution`, is halved while the step would decrease the
/// log-likelihood, and resets after every accepted step; the iteration stops
/// when successive iterates are closer than `step_tolerance` in trace
/// distance (or when no improving step exists).  The result is clipped to
/// the physical cone.
inline MleResult mle_reconstruct(const CountsDataset& data, const MleOptions& options = {}) {
    data.validate();
    const double total = data.total();
    if (!(total > 0.0)) {
        throw std::invalid_argument("mle_reconstruct: dataset has no counts");
    }
    for (int si = 0; si < 9; ++si) {
        double group = 0.0;
        for (double c : data.counts[si]) group += c;
        if (group <= 0.0) {
            throw std::invalid_argument("mle_reconstruct: setting " +
                                        setting_label(all_settings()[si]) +
                                        " has no counts");
        }
    }

    std::array<Vector4cd, 36> kets;
    std::array<double, 36> fractions{};
    for (int si = 0; si < 9; ++si) {
        const std::array<Vector4cd, 4> k = projector_kets(all_settings()[si]);
        for (int oi = 0; oi < 4; ++oi) {
            kets[4 * si + oi] = k[oi];
            fractions[4 * si + oi] = data.counts[si][oi] / total;
        }
    }

    const auto probabilities = [&](const Matrix4cd& rho) {
        std::array<double, 36> p{};
        for (int i = 0; i < 36; ++i) {
            p[i] = std::max(kets[i].dot(rho * kets[i]).real(), 0.0);
        }
        return p;
    };
    const auto ll_of = [&](const std::array<double, 36>& p) {
        double ll = 0.0;
        for (int i = 0; i < 36; ++i) {
            if (fractions[i] > 0.0) {
                ll += fractions[i] * total * std::log(std::max(p[i], 1e-12));
            }
        }
        return ll;
    };

    Matrix4cd rho = Matrix4cd::Identity() / 4.0;
    std::array<double, 36> p = probabilities(rho);
    double current_ll = ll_of(p);
    double step = std::numeric_limits<double>::infinity();
    long iteration = 0;

    while (iteration < options.max_iterations) {
        ++iteration;
        Matrix4cd r_op = Matrix4cd::Zero();
        for (int i = 0; i < 36; ++i) {
            if (fractions[i] > 0.0) {
                r_op += (fractions[i] / std::max(p[i], 1e-12)) *
                        (kets[i] * kets[i].adjoint());
            }
        }
        const Matrix4cd pushed = r_op * rho * r_op;

        double lambda = options.initial_dilution;
        bool accepted = false;
        Matrix4cd candidate;
        std::array<double, 36> cand_p{};
        double cand_ll = 0.0;
        while (lambda >= 1e-15) {
            candidate = (1.0 - lambda) * rho + lambda * pushed;
            candidate = 0.5 * (candidate + candidate.adjoint().eval());
            const double tr = candidate.trace().real();
            if (tr > 0.0) {
                candidate /= tr;
                cand_p = probabilities(candidate);
                cand_ll = ll_of(cand_p);
                if (cand_ll >= current_ll - 1e-15 * std::abs(current_ll)) {
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!accepted) {
            // No improving dilution exists: the iterate is a fixed point.
            step = 0.0;
            break;
        }
        step = trace_distance(candidate, rho);
        rho = candidate;
        p = cand_p;
        current_ll = cand_ll;
        if (step < options.step_tolerance) break;
    }

    if (step >= options.step_tolerance && iteration >= options.max_iterations) {
        throw MleError("mle_reconstruct: no convergence after " +
                           std::to_string(options.max_iterations) +
                           " iterations (last step " + std::to_string(step) + ")",
                       DensityMatrix4(rho), step);
    }
    MleResult result;
    result.state = clip_to_physical(DensityMatrix4(rho));
    result.iterations = iteration;
    result.final_step = step;
    result.log_likelihood = current_ll;
    return result;
}

/// Squared Uhlmann fidelity (tr sqrt(sqrt(sigma) rho sqrt(sigma)))^2.
inline double fidelity(const DensityMatrix4& rho, const DensityMatrix4& sigma) {
    if (!is_physical_state(rho, 1e-8) || !is_physical_state(sigma, 1e-8)) {
        throw std::invalid_argument("fidelity: inputs must be density matrices");
    }
    const Matrix4cd root = sqrt_psd(sigma);
    const Matrix4cd inner = root * rho * root;
    Eigen::SelfAdjointEigenSolver<Matrix4cd> es(0.5 * (inner + inner.adjoint()));
    // Eigenvalues are clipped relative to the largest before the square
    // root: the noise floor of a rank-deficient product sits near 1e-16,
    // and sqrt(1e-16) = 1e-8 would otherwise pollute the trace.
    const double cutoff = 1e-12 * std::max(es.eigenvalues().maxCoeff(), 0.0);
    double trace_root = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double v = es.eigenvalues()(i);
        if (v > cutoff) trace_root += std::sqrt(v);
    }
    return std::min(1.0, trace_root * trace_root);
}

/// Fidelity against a pure target: <psi|rho|psi>.
inline double fidelity_to_pure(const Vector4cd& target, const DensityMatrix4& rho) {
    const Vector4cd psi = target.normalized();
    return std::min(1.0, std::max(0.0, psi.dot(rho * psi).real()));
}

/// tr(rho^2).
inline double purity(const DensityMatrix4& rho) { return (rho * rho).trace().real(); }

/// Ratio of an on-device fidelity to its reference-path fidelity.
inline double relative_fidelity(double f_on, double f_off) {
    if (!(f_off > 0.0)) {
        throw std::invalid_argument("relative_fidelity: reference fidelity must be > 0");
    }
    return f_on / f_off;
}

struct BootstrapErrors {
    double fidelity_sigma = 0.0;
    double purity_sigma = 0.0;
    int skipped = 0;
};

/// Poisson bootstrap: each resample redraws every count as
/// Poisson(observed), re-runs the reconstruction, and recomputes fidelity
/// (to `target`) and purity; returns the sample standard deviations.
/// Resample r uses an independent generator seeded from (seed, r), so the
/// schedule is deterministic and order-independent.  Resamples whose
/// reconstruction fails are skipped; more than 10% skips is an error.
inline BootstrapErrors bootstrap_errors(const CountsDataset& data,
                                        const DensityMatrix4& target, int resamples,
                                        std::uint64_t seed,
                                        const MleOptions& options = {}) {
    data.validate();
    if (resamples < 10) {
        throw std::invalid_argument("bootstrap_errors: need at least 10 resamples");
    }
    std::vector<double> fids, purs;
    fids.reserve(resamples);
    purs.reserve(resamples);
    int skipped = 0;
    for (int r = 0; r < resamples; ++r) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
        CountsDataset resample = data;
        for (int si = 0; si < 9; ++si) {
            for (int oi = 0; oi < 4; ++oi) {
                const double mean = data.counts[si][oi];
                if (mean <= 0.0) {
                    resample.counts[si][oi] = 0.0;
                    continue;
                }
                std::poisson_distribution<long long> poisson(mean);
                resample.counts[si][oi] = static_cast<double>(poisson(rng));
            }
        }
        try {
            const MleResult mle = mle_reconstruct(resample, options);
            fids.push_back(fidelity(mle.state, target));
            purs.push_back(purity(mle.state));
        } catch (const MleError&) {
            ++skipped;
        } catch (const std::invalid_argument&) {
            ++skipped;  // e.g. a resample emptied one setting group
        }
    }
    if (skipped * 10 > resamples) {
        throw std::runtime_error("bootstrap_errors: more than 10% of resamples failed (" +
                                 std::to_string(skipped) + "/" +
                                 std::to_string(resamples) + ")");
    }
    const auto sample_std = [](const std::vector<double>& xs) {
        const std::size_t n = xs.size();
        if (n < 2) return 0.0;
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        return std::sqrt(ss / static_cast<double>(n - 1));
    };
    BootstrapErrors out;
    out.fidelity_sigma = sample_std(fids);
    out.purity_sigma = sample_std(purs);
    out.skipped = skipped;
    return out;
}

}  // namespace duorail
