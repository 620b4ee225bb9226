#include <catch2/catch_amalgamated.hpp>

#include <duorail/experiments.hpp>

#include <cmath>

using namespace duorail;
using Catch::Matchers::WithinAbs;

TEST_CASE("the default coherence time matches the source bandwidth") {
    // 1.5 nm FWHM Gaussian at 1550 nm center wavelength.
    CHECK_THAT(default_coherence_time_ps(), WithinAbs(2.0023007, 1e-4));
}

TEST_CASE("dip scan with perfect photons reaches full visibility") {
    const double tc = default_coherence_time_ps();
    HomCurve curve = run_hom_scan(symmetric_delays(8.0 * tc, 81), 1.0, tc,
                                  ConventionFlags{});
    CHECK_THAT(curve.fitted_visibility, WithinAbs(1.0, 1e-12));
    // Zero delay sits at the center of an odd-length symmetric scan.
    CHECK_THAT(curve.delays_ps[40], WithinAbs(0.0, 1e-12));
    CHECK(curve.coincidence_rates[40] <= 1e-12);
    CHECK_THAT(curve.baseline_rate, WithinAbs(0.5, 1e-9));
}

TEST_CASE("dip visibility equals the squared overlap at zero delay") {
    const double tc = default_coherence_time_ps();
    HomCurve curve = run_hom_scan(symmetric_delays(8.0 * tc, 81), std::sqrt(0.995), tc,
                                  ConventionFlags{});
    CHECK_THAT(curve.fitted_visibility, WithinAbs(0.995, 1e-9));
}

TEST_CASE("dip scan is symmetric in delay and flat for orthogonal photons") {
    const double tc = default_coherence_time_ps();
    HomCurve curve =
        run_hom_scan(symmetric_delays(5.0 * tc, 41), 0.8, tc, ConventionFlags{});
    for (int i = 0; i < 41; ++i) {
        CHECK_THAT(curve.coincidence_rates[i],
                   WithinAbs(curve.coincidence_rates[40 - i], 1e-12));
    }

    HomCurve flat = run_hom_scan(symmetric_delays(5.0 * tc, 41), 0.0, tc,
                                 ConventionFlags{});
    for (double rate : flat.coincidence_rates) CHECK_THAT(rate, WithinAbs(0.5, 1e-12));
    CHECK_THAT(flat.fitted_visibility, WithinAbs(0.0, 1e-12));
}

TEST_CASE("dip scan validates its arguments and samples deterministically") {
    const double tc = default_coherence_time_ps();
    CHECK_THROWS_AS(run_hom_scan(symmetric_delays(tc, 3), 1.0, tc, ConventionFlags{}),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_hom_scan(symmetric_delays(tc, 41), 1.2, tc, ConventionFlags{}),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_hom_scan(symmetric_delays(tc, 41), 1.0, 0.0, ConventionFlags{}),
                    std::invalid_argument);
    CHECK_THROWS_AS(symmetric_delays(tc, 4), std::invalid_argument);

    HomCurve a =
        run_hom_scan(symmetric_delays(5.0 * tc, 41), 0.9, tc, ConventionFlags{}, 1e5, 3);
    HomCurve b =
        run_hom_scan(symmetric_delays(5.0 * tc, 41), 0.9, tc, ConventionFlags{}, 1e5, 3);
    HomCurve c =
        run_hom_scan(symmetric_delays(5.0 * tc, 41), 0.9, tc, ConventionFlags{}, 1e5, 4);
    CHECK(a.coincidence_rates == b.coincidence_rates);
    CHECK(a.coincidence_rates != c.coincidence_rates);
    CHECK(a.fitted_visibility > 0.7);
    CHECK(a.fitted_visibility < 0.95);
}

TEST_CASE("state preparation runs reproduce their targets without noise") {
    ExperimentReport hv = run_state_prep_experiment("HV", ConventionFlags{}, NoiseParams{},
                                                    1e6, 0, 1, true);
    CHECK(hv.fidelity >= 1.0 - 1e-6);
    CHECK(hv.purity >= 1.0 - 1e-6);
    CHECK_THAT(hv.success_probability, WithinAbs(1.0, 1e-12));

    ExperimentReport bell = run_state_prep_experiment(
        "PhiPlus", ConventionFlags{}, NoiseParams{}, 1e6, 0, 1, false);
    CHECK(bell.fidelity >= 0.999);
    CHECK_THAT(bell.success_probability, WithinAbs(0.5, 1e-12));
    CHECK(bell.counts.total() > 0);
}

TEST_CASE("rail crosstalk degrades an entangled row by the two-coupler law") {
    NoiseParams noise;
    noise.crosstalk_epsilon = 0.01;
    ExperimentReport report = run_state_prep_experiment(
        "PhiPlus", ConventionFlags{}, noise, 1e6, 0, 1, true);
    const double eps = noise.crosstalk_epsilon;
    const double expected = (1.0 - eps) * (1.0 - eps) + eps * eps;
    CHECK_THAT(report.fidelity, WithinAbs(expected, 1e-5));
}

TEST_CASE("preparation fidelity decreases monotonically with crosstalk") {
    for (const char* name : {"HV", "PhiPlus", "Cluster"}) {
        double previous = 2.0;
        for (double eps : {0.0, 0.005, 0.01}) {
            NoiseParams noise;
            noise.crosstalk_epsilon = eps;
            ExperimentReport report =
                run_state_prep_experiment(name, ConventionFlags{}, noise, 1e6, 0, 1, true);
            INFO("preset " << name << " eps " << eps);
            CHECK(report.fidelity < previous + 1e-9);
            previous = report.fidelity;
        }
        CHECK(previous < 1.0);
    }
}

TEST_CASE("analysis-side tomography agrees with the external bench when noiseless") {
    const DensityMatrix4 input = density_from_ket(bell_psi_minus());
    ExperimentReport report = run_onchip_tomography(input, ConventionFlags{},
                                                    NoiseParams{}, 1e6, 0, 1, true);
    CHECK(report.has_reference_run);
    CHECK(report.fidelity >= 1.0 - 1e-6);
    CHECK(report.reference_fidelity >= 1.0 - 1e-6);
    CHECK_THAT(report.relative, WithinAbs(1.0, 1e-6));
}

TEST_CASE("analysis-side crosstalk imprints the two-coupler law on the relative score") {
    const DensityMatrix4 input = density_from_ket(bell_psi_minus());
    NoiseParams receiver_noise;
    receiver_noise.crosstalk_epsilon = 0.01;
    ExperimentReport report = run_onchip_tomography(input, ConventionFlags{},
                                                    receiver_noise, 1e6, 0, 1, true);
    const double expected = 0.99 * 0.99 + 0.01 * 0.01;
    CHECK_THAT(report.fidelity, WithinAbs(expected, 1e-4));
    CHECK_THAT(report.relative, WithinAbs(expected, 1e-4));
    CHECK(report.success_probability < 1.0 + 1e-12);
}

TEST_CASE("analysis-side tomography handles a mixed input from sampled counts") {
    const DensityMatrix4 mixed = 0.25 * Matrix4cd::Identity();
    ExperimentReport report = run_onchip_tomography(mixed, ConventionFlags{},
                                                    NoiseParams{}, 1e6, 0, 9, false);
    CHECK(trace_distance(report.reconstructed, mixed) <= 3e-3);
}

TEST_CASE("two-chip cascade is faithful with identity links and no noise") {
    ExperimentReport report = run_chip_to_chip(
        "Cluster", ConventionFlags{}, NoiseParams{}, Matrix2cd::Identity(),
        Matrix2cd::Identity(), NoiseParams{}, 1e6, 0, 1, true);
    CHECK(report.fidelity >= 0.999);
    CHECK_THAT(report.success_probability, WithinAbs(0.5, 1e-12));

    // The cascade with trivial links must reconstruct the same state as the
    // single-chip preparation run.
    ExperimentReport prep = run_state_prep_experiment("Cluster", ConventionFlags{},
                                                      NoiseParams{}, 1e6, 0, 1, true);
    CHECK(trace_distance(report.reconstructed, prep.reconstructed) <= 1e-9);
}

TEST_CASE("a phase-flip link rotates the cluster row into an orthogonal state") {
    Matrix2cd z = Matrix2cd::Identity();
    z(1, 1) = -1.0;
    ExperimentReport report = run_chip_to_chip(
        "Cluster", ConventionFlags{}, NoiseParams{}, z, Matrix2cd::Identity(),
        NoiseParams{}, 1e6, 0, 1, true);
    CHECK(report.fidelity <= 1e-4);
}

TEST_CASE("non-unitary link matrices are rejected") {
    Matrix2cd lossy = Matrix2cd::Identity();
    lossy(1, 1) = 0.5;
    CHECK_THROWS_AS(
        run_chip_to_chip("Cluster", ConventionFlags{}, NoiseParams{}, lossy,
                         Matrix2cd::Identity(), NoiseParams{}, 1e6, 0, 1, true),
        std::invalid_argument);
}

TEST_CASE("experiment reports are bit-reproducible for a fixed seed") {
    NoiseParams noise;
    noise.crosstalk_epsilon = 0.005;
    noise.phase_error_sigma = 0.01;
    ExperimentReport a = run_state_prep_experiment("PsiMinus", ConventionFlags{}, noise,
                                                   2e4, 12, 31415, false);
    ExperimentReport b = run_state_prep_experiment("PsiMinus", ConventionFlags{}, noise,
                                                   2e4, 12, 31415, false);
    CHECK(a.fidelity == b.fidelity);
    CHECK(a.purity == b.purity);
    CHECK(a.fidelity_sigma == b.fidelity_sigma);
    CHECK(a.purity_sigma == b.purity_sigma);
    CHECK(a.success_probability == b.success_probability);
    CHECK(a.counts.counts == b.counts.counts);
    CHECK(a.fidelity_sigma > 0.0);

    ExperimentReport c = run_state_prep_experiment("PsiMinus", ConventionFlags{}, noise,
                                                   2e4, 12, 31416, false);
    CHECK(a.fidelity != c.fidelity);
}

TEST_CASE("reference metrics expose the measured device values") {
    auto hom = reference_metric("hom_visibility");
    REQUIRE(hom.has_value());
    CHECK_THAT(hom->value, WithinAbs(0.995, 1e-12));
    CHECK_THAT(hom->sigma, WithinAbs(0.004, 1e-12));

    auto cluster = reference_metric("chip_to_chip_fidelity");
    REQUIRE(cluster.has_value());
    CHECK_THAT(cluster->value, WithinAbs(0.900, 1e-12));

    auto onchip = reference_metric("relative_fidelity");
    REQUIRE(onchip.has_value());
    CHECK_THAT(onchip->value, WithinAbs(0.982, 1e-12));

    CHECK(!reference_metric("nonsense").has_value());
    auto pm = reference_metric("PM_fidelity");
    REQUIRE(pm.has_value());
    CHECK_THAT(pm->value, WithinAbs(0.99553, 1e-12));
}
