#include <catch2/catch_amalgamated.hpp>

#include <duorail/chip.hpp>
#include <duorail/states.hpp>

#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace duorail;
using Catch::Matchers::WithinAbs;

namespace {

double ket_overlap(const Vector4cd& a, const Vector4cd& b) {
    return std::abs((a.adjoint() * b)(0, 0));
}

}  // namespace

TEST_CASE("wrap_phase maps onto [0, 2pi) and rejects non-finite input") {
    CHECK_THAT(wrap_phase(0.0), WithinAbs(0.0, 0.0));
    CHECK_THAT(wrap_phase(two_pi), WithinAbs(0.0, 1e-15));
    CHECK_THAT(wrap_phase(-pi / 2.0), WithinAbs(1.5 * pi, 1e-12));
    CHECK_THAT(wrap_phase(5.0 * pi), WithinAbs(pi, 1e-12));
    CHECK_THAT(wrap_phase(-6.0 * two_pi), WithinAbs(0.0, 1e-10));
    CHECK_THROWS_AS(wrap_phase(std::numeric_limits<double>::infinity()),
                    std::invalid_argument);
    CHECK_THROWS_AS(wrap_phase(std::nan("")), std::invalid_argument);

    PhaseSettings s;
    s.p11 = -pi;
    s.p2v = 3.0 * two_pi + 0.25;
    PhaseSettings c = s.canonicalized();
    CHECK_THAT(c.p11, WithinAbs(pi, 1e-12));
    CHECK_THAT(c.p2v, WithinAbs(0.25, 1e-10));
}

TEST_CASE("NoiseParams validation enforces the documented ranges") {
    NoiseParams ok;
    CHECK_NOTHROW(ok.validate());

    NoiseParams n = ok;
    n.crosstalk_epsilon = 0.25;
    CHECK_THROWS_AS(n.validate(), std::invalid_argument);
    n = ok;
    n.crosstalk_epsilon = -0.01;
    CHECK_THROWS_AS(n.validate(), std::invalid_argument);
    n = ok;
    n.arm_efficiencies[2] = 0.0;
    CHECK_THROWS_AS(n.validate(), std::invalid_argument);
    n = ok;
    n.arm_efficiencies[0] = 1.2;
    CHECK_THROWS_AS(n.validate(), std::invalid_argument);
    n = ok;
    n.phase_error_sigma = -1.0;
    CHECK_THROWS_AS(n.validate(), std::invalid_argument);
    n = ok;
    n.overlap_gamma = complexd{1.1, 0.0};
    CHECK_THROWS_AS(n.validate(), std::invalid_argument);
}

TEST_CASE("interferometer unit routes bar / cross / balanced at the dialed offsets") {
    // Whatever the coupler convention, polarity, or arm assignment, dialing
    // the bar phase must give diagonal routing, bar - pi must fully swap the
    // rails, and bar +/- pi/2 must split 50:50.
    for (MmiConvention mmi : {MmiConvention::symmetric_i, MmiConvention::real_hadamard}) {
        for (int sign : {+1, -1}) {
            for (double bar : {pi, 0.0}) {
                ConventionFlags flags;
                flags.mmi = mmi;
                flags.inner_phase_sign = sign;
                flags.bar_phase = bar;
                for (MziRole role :
                     {MziRole::preparation, MziRole::crossing, MziRole::back}) {
                    Matrix2cd bar_m = mzi(bar, flags, role);
                    CHECK(std::abs(bar_m(0, 1)) < 1e-12);
                    CHECK(std::abs(bar_m(1, 0)) < 1e-12);
                    CHECK_THAT(std::abs(bar_m(0, 0)), WithinAbs(1.0, 1e-12));

                    Matrix2cd cross_m = mzi(bar - pi, flags, role);
                    CHECK(std::abs(cross_m(0, 0)) < 1e-12);
                    CHECK(std::abs(cross_m(1, 1)) < 1e-12);
                    CHECK_THAT(std::abs(cross_m(0, 1)), WithinAbs(1.0, 1e-12));

                    for (double split : {bar + pi / 2.0, bar - pi / 2.0}) {
                        Matrix2cd half = mzi(split, flags, role);
                        for (int r = 0; r < 2; ++r)
                            for (int c = 0; c < 2; ++c)
                                CHECK_THAT(std::abs(half(r, c)),
                                           WithinAbs(1.0 / std::sqrt(2.0), 1e-12));
                    }
                }
            }
        }
    }
}

TEST_CASE("chip unitary is unitary for arbitrary settings and flags") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> ph(0.0, two_pi);
    for (int rep = 0; rep < 50; ++rep) {
        PhaseSettings s;
        s.p11 = ph(rng);
        s.p12 = ph(rng);
        s.p21 = ph(rng);
        s.p22 = ph(rng);
        s.pcr = ph(rng);
        s.p23 = ph(rng);
        s.p1h = ph(rng);
        s.p1v = ph(rng);
        s.p2h = ph(rng);
        s.p2v = ph(rng);
        ConventionFlags flags;
        flags.mmi = (rep % 2 == 0) ? MmiConvention::symmetric_i
                                   : MmiConvention::real_hadamard;
        flags.inner_phase_sign = (rep % 3 == 0) ? -1 : +1;
        ModeUnitary u = build_chip_unitary(s, flags);
        CHECK(u.dim() == 4);
        CHECK(is_unitary(u.entries, 1e-10));
    }
}

TEST_CASE("every named settings row prepares its target state exactly") {
    const double product_success = 1.0;
    const double interfering_success = 0.5;
    for (const std::string& name : {"HV", "PM", "PiMi", "PhiPlus", "PhiMinus",
                                    "PsiPlus", "PsiMinus", "Cluster"}) {
        auto [psi, success] = ideal_logical_state(preset(name), ConventionFlags{});
        INFO("row " << name);
        CHECK_THAT(ket_overlap(psi, target_state(name)), WithinAbs(1.0, 1e-12));
        const bool product =
            (name == "HV") || (name == "PM") || (name == "PiMi");
        CHECK_THAT(success,
                   WithinAbs(product ? product_success : interfering_success, 1e-12));

        TwoQubitOutcome out = prepare_state(preset(name), ConventionFlags{}, NoiseParams{});
        const Vector4cd target = target_state(name);
        CHECK_THAT((target.adjoint() * out.state * target).real()(0, 0),
                   WithinAbs(1.0, 1e-12));
        CHECK_THAT(out.success_probability, WithinAbs(success, 1e-12));
    }
}

TEST_CASE("interfering family follows the two-branch closed form") {
    // With both preparation interferometers at 50:50 and the crossing unit
    // fully open, the post-selected family is
    //   cos(p23/2) (|00> - beta |11>) + sin(p23/2) (|01> + beta |10>),
    // beta = exp(i p12), normalized by 1/sqrt(2).
    ConventionFlags flags;
    for (double p12 : {0.0, pi / 2.0, pi, 4.0, 5.7}) {
        for (double p23 : {0.0, 0.3, pi / 2.0, 2.0, pi, 4.5}) {
            PhaseSettings s;
            s.p11 = pi / 2.0;
            s.p21 = pi / 2.0;
            s.p12 = p12;
            s.p22 = 0.0;
            s.pcr = 0.0;
            s.p23 = p23;
            auto [psi, success] = ideal_logical_state(s, flags);
            CHECK_THAT(success, WithinAbs(0.5, 1e-12));

            const complexd beta = std::exp(iunit * p12);
            Vector4cd expected;
            expected << std::cos(p23 / 2.0), std::sin(p23 / 2.0),
                beta * std::sin(p23 / 2.0), -beta * std::cos(p23 / 2.0);
            expected /= std::sqrt(2.0);
            INFO("p12=" << p12 << " p23=" << p23);
            CHECK_THAT(ket_overlap(psi, expected), WithinAbs(1.0, 1e-12));

            BellBlockParams bp = bell_block_params(s);
            CHECK_THAT(std::abs(bp.alpha - std::exp(iunit * p23)), WithinAbs(0.0, 1e-12));
            CHECK_THAT(std::abs(bp.beta - beta), WithinAbs(0.0, 1e-12));
        }
    }
}

TEST_CASE("closed crossing unit yields product states with the per-qubit closed form") {
    ConventionFlags flags;
    std::mt19937_64 rng(97);
    std::uniform_real_distribution<double> ph(0.0, two_pi);
    for (int rep = 0; rep < 200; ++rep) {
        PhaseSettings s;
        s.p11 = ph(rng);
        s.p12 = ph(rng);
        s.p21 = ph(rng);
        s.p22 = ph(rng);
        s.pcr = pi;
        s.p23 = pi;
        auto [psi, success] = ideal_logical_state(s, flags);
        CHECK_THAT(success, WithinAbs(1.0, 1e-12));

        auto [c0, c1] = schmidt_coefficients(psi);
        CHECK(c1 <= 1e-10);

        Vector2cd q1, q2;
        q1 << std::sin(s.p11 / 2.0), -std::exp(iunit * s.p12) * std::cos(s.p11 / 2.0);
        q2 << std::sin(s.p21 / 2.0), -std::exp(iunit * s.p22) * std::cos(s.p21 / 2.0);
        Vector4cd expected = kron(q1, q2);
        CHECK_THAT(ket_overlap(psi, expected), WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("imbalance nulling equalizes every arm to the weakest one") {
    std::mt19937_64 rng(113);
    std::uniform_real_distribution<double> eff(0.05, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::array<double, 4> e{eff(rng), eff(rng), eff(rng), eff(rng)};
        std::array<double, 4> theta = imbalance_nulling_phases(e);
        const double emin = *std::min_element(e.begin(), e.end());
        for (int i = 0; i < 4; ++i) {
            const double t = std::sin(theta[i] / 2.0);
            CHECK_THAT(e[i] * t * t, WithinAbs(emin, 1e-12));
        }
    }
    CHECK_THROWS_AS(imbalance_nulling_phases({1.0, 0.0, 1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(imbalance_nulling_phases({1.0, 1.5, 1.0, 1.0}), std::invalid_argument);
    CHECK_THAT(attenuation_amplitude(pi), WithinAbs(1.0, 1e-15));
    CHECK_THAT(attenuation_amplitude(0.0), WithinAbs(0.0, 1e-15));
}

TEST_CASE("rail-flip channel boundary behavior") {
    std::mt19937_64 rng(127);
    Matrix4cd rho4 = oracles::random_density(rng);
    Matrix2cd rho = rho4.block<2, 2>(0, 0);
    rho /= rho.trace().real();

    SECTION("zero flip probability is the identity channel") {
        auto out = apply_2dgc(rho, 0.0, {1.0, 1.0});
        CHECK((out.state - rho).norm() < 1e-14);
        CHECK_THAT(out.weight, WithinAbs(1.0, 1e-14));
    }
    SECTION("unit flip probability applies a full rail swap") {
        auto out = apply_2dgc(rho, 1.0, {1.0, 1.0});
        const Matrix2cd& x = pauli_x();
        CHECK((out.state - x * rho * x).norm() < 1e-14);
    }
    SECTION("arguments outside the channel's domain are rejected") {
        CHECK_THROWS_AS(apply_2dgc(rho, -0.1, {1.0, 1.0}), std::invalid_argument);
        CHECK_THROWS_AS(apply_2dgc(rho, 1.1, {1.0, 1.0}), std::invalid_argument);
        CHECK_THROWS_AS(apply_2dgc(rho, 0.1, {0.0, 1.0}), std::invalid_argument);
        CHECK_THROWS_AS(apply_2dgc(rho, 0.1, {1.0, 1.5}), std::invalid_argument);
        CHECK_THROWS_AS(apply_one_qubit_channel(rho4, 2, {pauli_x()}),
                        std::invalid_argument);
    }
    SECTION("unequal efficiencies reweight and renormalize") {
        auto out = apply_2dgc(rho, 0.0, {0.5, 1.0});
        CHECK_THAT(out.weight,
                   WithinAbs(0.5 * rho(0, 0).real() + rho(1, 1).real(), 1e-14));
        CHECK_THAT(out.state.trace().real(), WithinAbs(1.0, 1e-14));
    }
}

TEST_CASE("noisy preparation equals the noise channel applied to the ideal state") {
    ConventionFlags flags;
    NoiseParams noise;
    noise.crosstalk_epsilon = 0.07;
    noise.arm_efficiencies = {0.9, 1.0, 0.8, 0.95};
    for (const std::string& name : {"HV", "PhiPlus", "Cluster"}) {
        auto [psi, ideal_success] = ideal_logical_state(preset(name), flags);
        DensityMatrix4 rho = density_from_ket(psi);
        double weight = ideal_success;
        for (int q = 0; q < 2; ++q) {
            const std::pair<double, double> eff{noise.arm_efficiencies[2 * q],
                                                noise.arm_efficiencies[2 * q + 1]};
            auto step = apply_2dgc_on_pair(rho, q, noise.crosstalk_epsilon, eff);
            rho = step.state;
            weight *= step.weight;
        }

        TwoQubitOutcome direct = prepare_state(preset(name), flags, noise);
        INFO("row " << name);
        CHECK(trace_distance(direct.state, rho) < 1e-13);
        CHECK_THAT(direct.success_probability, WithinAbs(weight, 1e-13));
    }
}

TEST_CASE("dialed compensation restores the ideal state under arm imbalance") {
    // When the compensation phases are nulled for the true arm efficiencies
    // and no rail crosstalk is present, the prepared state matches the ideal
    // one exactly and the success probability picks up the weakest arm's
    // transmission once per photon.
    const std::array<double, 4> eff{0.8, 1.0, 0.9, 0.7};
    NoiseParams noise;
    noise.arm_efficiencies = eff;
    const double emin = 0.7;
    for (const std::string& name : {"PM", "PsiMinus"}) {
        PhaseSettings s = preset(name, eff);
        auto [psi, ideal_success] = ideal_logical_state(preset(name), ConventionFlags{});
        TwoQubitOutcome out = prepare_state(s, ConventionFlags{}, noise);
        INFO("row " << name);
        CHECK_THAT((psi.adjoint() * out.state * psi).real()(0, 0),
                   WithinAbs(1.0, 1e-12));
        CHECK_THAT(out.success_probability, WithinAbs(ideal_success * emin * emin, 1e-12));
    }
}

TEST_CASE("dial errors are reproducible per seed") {
    NoiseParams noise;
    noise.phase_error_sigma = 0.02;
    TwoQubitOutcome a = prepare_state(preset("PhiPlus"), ConventionFlags{}, noise, 42);
    TwoQubitOutcome b = prepare_state(preset("PhiPlus"), ConventionFlags{}, noise, 42);
    TwoQubitOutcome c = prepare_state(preset("PhiPlus"), ConventionFlags{}, noise, 43);
    CHECK((a.state - b.state).norm() == 0.0);
    CHECK(a.success_probability == b.success_probability);
    CHECK((a.state - c.state).norm() > 1e-9);
}

TEST_CASE("convention calibration recovers the documented flag assignment") {
    CalibrationReport report = calibrate_conventions();

    CHECK(report.satisfying_count == 8);
    CHECK(report.satisfying.size() == 8);

    const ConventionFlags d{};
    CHECK(report.flags.mmi == d.mmi);
    CHECK(report.flags.inner_phase_sign == d.inner_phase_sign);
    CHECK(report.flags.prep_inner_arm == d.prep_inner_arm);
    CHECK(report.flags.cross_inner_arm == d.cross_inner_arm);
    CHECK(report.flags.back_inner_arm == d.back_inner_arm);
    CHECK(report.flags.outer_arm_q1 == d.outer_arm_q1);
    CHECK(report.flags.outer_arm_q2 == d.outer_arm_q2);
    CHECK(report.flags.qubit2_logical_flip == d.qubit2_logical_flip);
    CHECK_THAT(report.flags.bar_phase, WithinAbs(d.bar_phase, 1e-12));
    CHECK_THAT(report.flags.frame_q1, WithinAbs(d.frame_q1, 1e-12));
    CHECK_THAT(report.flags.frame_q2, WithinAbs(d.frame_q2, 1e-12));

    REQUIRE(report.row_fidelities.size() == 8);
    for (const auto& [label, fid] : report.row_fidelities) {
        INFO("row " << label);
        CHECK(fid >= 1.0 - 1e-6);
    }

    // Every satisfying assignment shares the physically meaningful flags; the
    // remainder is gauge freedom absorbed by the frame phases.
    for (const ConventionFlags& f : report.satisfying) {
        CHECK(f.outer_arm_q1 == Arm::lower);
        CHECK(f.outer_arm_q2 == Arm::lower);
        CHECK(f.qubit2_logical_flip == false);
        CHECK_THAT(f.bar_phase, WithinAbs(pi, 1e-12));
    }
}

TEST_CASE("calibration against an inconsistent table fails with diagnostics") {
    std::vector<CalibrationTarget> targets = default_calibration_targets();
    // Mislabel the two odd-parity Bell rows: no convention assignment can
    // satisfy a table that swaps them while keeping the rest.
    for (CalibrationTarget& t : targets) {
        if (t.label == "PsiPlus") t.state = bell_psi_minus();
        if (t.label == "PsiMinus") t.state = bell_psi_plus();
    }
    try {
        calibrate_conventions(targets);
        FAIL("expected calibration to fail");
    } catch (const calibration_error& e) {
        CHECK(std::string(e.what()).size() > 0);
        REQUIRE(!e.row_fidelities.empty());
        double worst = 1.0;
        for (const auto& [label, fid] : e.row_fidelities) worst = std::min(worst, fid);
        CHECK(worst < 1.0 - 1e-6);
    }
}

TEST_CASE("analysis settings route every eigenstate to a definite port") {
    ConventionFlags flags;
    const std::array<PauliBasis, 3> bases{PauliBasis::X, PauliBasis::Y, PauliBasis::Z};
    for (PauliBasis b1 : bases) {
        for (PauliBasis b2 : bases) {
            Matrix2cd r1 = receiver_qubit_unitary(b1, b2, 0, flags);
            Matrix2cd r2 = receiver_qubit_unitary(b1, b2, 1, flags);
            CHECK(is_unitary(r1, 1e-10));
            CHECK(is_unitary(r2, 1e-10));
            auto [p1, m1] = pauli_eigenvectors(b1);
            auto [p2, m2] = pauli_eigenvectors(b2);
            const std::array<Vector2cd, 2> e1{p1, m1};
            const std::array<Vector2cd, 2> e2{p2, m2};
            for (int s1 = 0; s1 < 2; ++s1) {
                for (int s2 = 0; s2 < 2; ++s2) {
                    Vector4cd psi = kron(Vector2cd(r1 * e1[s1]), Vector2cd(r2 * e2[s2]));
                    const int slot = 2 * s1 + s2;
                    INFO("bases " << basis_letter(b1) << basis_letter(b2) << " slot "
                                  << slot);
                    CHECK_THAT(std::norm(psi(slot)), WithinAbs(1.0, 1e-12));
                }
            }
        }
    }
}

TEST_CASE("a miscalibrated analysis configuration is rejected") {
    ConventionFlags wrong;
    wrong.bar_phase = 0.0;  // the crossing unit no longer isolates the qubits
    CHECK_THROWS_AS(receiver_qubit_unitary(PauliBasis::Z, PauliBasis::Z, 0, wrong),
                    receiver_error);
}

TEST_CASE("perturbed analysis phases keep the ideal port labeling") {
    ConventionFlags flags;
    PhaseSettings actual = receiver_settings(PauliBasis::X, PauliBasis::Y);
    actual.p11 += 0.01;
    actual.p22 -= 0.02;
    Matrix2cd ideal = receiver_qubit_unitary(PauliBasis::X, PauliBasis::Y, 0, flags);
    Matrix2cd perturbed =
        receiver_qubit_unitary(PauliBasis::X, PauliBasis::Y, 0, flags, actual);
    CHECK(is_unitary(perturbed, 1e-10));
    CHECK((ideal - perturbed).norm() > 1e-4);
    CHECK((ideal - perturbed).norm() < 0.1);
}
