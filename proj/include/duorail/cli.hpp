#pragma once

/// Command-line front end: JSON configuration with strict key checking,
/// experiment dispatch, CSV/JSON artifact output, and deterministic config
/// echoes so any report can be reproduced from its own embedded config.
///
/// Exit codes: 0 success, 2 configuration error, 3 numerical
/// non-convergence, 4 I/O error (1 for anything unforeseen).

#include "experiments.hpp"
#include "io.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace duorail {

using ordered_json = nlohmann::ordered_json;

/// Invalid or inconsistent configuration (maps to exit code 2).
class config_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Fully resolved run description; every field has a deterministic default
/// so the config echo always shows effective values.
struct RunConfig {
    std::string experiment;  // hom | prepare | tomo-onchip | chip-to-chip | mle | calibrate
    std::string preset_name;
    std::string input_state_path;  // tomo-onchip: external-state matrix CSV
    double shots_per_setting = 1e6;
    int resamples = 0;
    bool exact_frequency = false;
    std::optional<std::uint64_t> seed;
    NoiseParams noise;           // preparation-side chip
    NoiseParams receiver_noise;  // analysis-side chip
    Matrix2cd channel_q1 = Matrix2cd::Identity();
    Matrix2cd channel_q2 = Matrix2cd::Identity();
    // Dip-scan block.
    double hom_gamma0 = std::sqrt(0.995);
    double hom_coherence_time_ps = default_coherence_time_ps();
    double hom_max_delay_ps = 8.0 * default_coherence_time_ps();
    int hom_points = 81;
    double hom_shots = 0.0;  // 0 = analytic rates
    bool hom_analytic = false;
    // mle subcommand inputs.
    std::string counts_path;
    std::string target_path;
    // Output directory; never echoed (reports must not depend on location).
    std::string out_dir = "duorail-out";
};

namespace detail {

inline void require_keys(const ordered_json& obj, const std::string& where,
                         const std::vector<std::string>& allowed) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const std::string& k : allowed) {
            if (item.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw config_error("unknown config key '" + where + item.key() + "'");
        }
    }
}

inline double get_number(const ordered_json& obj, const std::string& key,
                         const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_number()) {
        throw config_error("config key '" + where + key + "' must be a number");
    }
    return v.get<double>();
}

inline NoiseParams noise_from_json(const ordered_json& obj, const std::string& where) {
    require_keys(obj, where,
                 {"crosstalk_epsilon", "arm_efficiencies", "phase_error_sigma",
                  "overlap_gamma"});
    NoiseParams n;
    if (obj.contains("crosstalk_epsilon")) {
        n.crosstalk_epsilon = get_number(obj, "crosstalk_epsilon", where);
        if (!(n.crosstalk_epsilon >= 0.0 && n.crosstalk_epsilon <= 0.2)) {
            throw config_error("config key '" + where +
                               "crosstalk_epsilon' must lie in [0, 0.2]");
        }
    }
    if (obj.contains("arm_efficiencies")) {
        const auto& arr = obj.at("arm_efficiencies");
        if (!arr.is_array() || arr.size() != 4) {
            throw config_error("config key '" + where +
                               "arm_efficiencies' must be an array of 4 numbers");
        }
        for (int i = 0; i < 4; ++i) {
            if (!arr[i].is_number()) {
                throw config_error("config key '" + where +
                                   "arm_efficiencies' must be an array of 4 numbers");
            }
            n.arm_efficiencies[i] = arr[i].get<double>();
            if (!(n.arm_efficiencies[i] > 0.0 && n.arm_efficiencies[i] <= 1.0)) {
                throw config_error("config key '" + where +
                                   "arm_efficiencies' entries must lie in (0, 1]");
            }
        }
    }
    if (obj.contains("phase_error_sigma")) {
        n.phase_error_sigma = get_number(obj, "phase_error_sigma", where);
        if (!(n.phase_error_sigma >= 0.0)) {
            throw config_error("config key '" + where + "phase_error_sigma' must be >= 0");
        }
    }
    if (obj.contains("overlap_gamma")) {
        const double g = get_number(obj, "overlap_gamma", where);
        if (!(g >= 0.0 && g <= 1.0)) {
            throw config_error("config key '" + where + "overlap_gamma' must lie in [0, 1]");
        }
        n.overlap_gamma = complexd{g, 0.0};
    }
    return n;
}

inline ordered_json noise_to_json(const NoiseParams& n) {
    ordered_json obj;
    obj["crosstalk_epsilon"] = n.crosstalk_epsilon;
    obj["arm_efficiencies"] = n.arm_efficiencies;
    obj["phase_error_sigma"] = n.phase_error_sigma;
    obj["overlap_gamma"] = n.overlap_gamma.real();
    return obj;
}

inline Matrix2cd channel_from_json(const ordered_json& arr, const std::string& where) {
    if (!arr.is_array() || arr.size() != 4) {
        throw config_error("config key '" + where +
                           "' must be an array of 4 [re, im] pairs (row-major)");
    }
    Matrix2cd m;
    for (int i = 0; i < 4; ++i) {
        const auto& entry = arr[i];
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
            !entry[1].is_number()) {
            throw config_error("config key '" + where +
                               "' must be an array of 4 [re, im] pairs (row-major)");
        }
        m(i / 2, i % 2) = complexd{entry[0].get<double>(), entry[1].get<double>()};
    }
    if (!is_unitary(m, 1e-12)) {
        throw config_error("config key '" + where + "' must be unitary within 1e-12");
    }
    return m;
}

inline ordered_json channel_to_json(const Matrix2cd& m) {
    ordered_json arr = ordered_json::array();
    for (int i = 0; i < 4; ++i) {
        arr.push_back({m(i / 2, i % 2).real(), m(i / 2, i % 2).imag()});
    }
    return arr;
}

inline bool uses_receiver(const std::string& experiment) {
    return experiment == "tomo-onchip" || experiment == "chip-to-chip";
}

inline bool uses_tomography(const std::string& experiment) {
    return experiment == "prepare" || uses_receiver(experiment);
}

}  // namespace detail

/// Parses a JSON config object onto the defaults. Unknown keys are rejected
/// by name; out-of-range values are rejected naming the field and bound.
inline RunConfig config_from_json(const ordered_json& obj) {
    if (!obj.is_object()) throw config_error("config root must be a JSON object");
    detail::require_keys(
        obj, "",
        {"experiment", "preset", "input_state", "shots_per_setting", "resamples",
         "exact_frequency", "seed", "noise", "receiver_noise", "channel_q1", "channel_q2",
         "hom", "counts", "target"});
    RunConfig c;
    if (obj.contains("experiment")) {
        if (!obj.at("experiment").is_string()) {
            throw config_error("config key 'experiment' must be a string");
        }
        c.experiment = obj.at("experiment").get<std::string>();
    }
    if (obj.contains("preset")) {
        if (!obj.at("preset").is_string()) {
            throw config_error("config key 'preset' must be a string");
        }
        c.preset_name = obj.at("preset").get<std::string>();
    }
    if (obj.contains("input_state")) {
        if (!obj.at("input_state").is_string()) {
            throw config_error("config key 'input_state' must be a string");
        }
        c.input_state_path = obj.at("input_state").get<std::string>();
    }
    if (obj.contains("shots_per_setting")) {
        c.shots_per_setting = detail::get_number(obj, "shots_per_setting", "");
        if (!(c.shots_per_setting > 0.0)) {
            throw config_error("config key 'shots_per_setting' must be > 0");
        }
    }
    if (obj.contains("resamples")) {
        if (!obj.at("resamples").is_number_integer()) {
            throw config_error("config key 'resamples' must be an integer");
        }
        c.resamples = obj.at("resamples").get<int>();
        if (c.resamples < 0) throw config_error("config key 'resamples' must be >= 0");
        if (c.resamples > 0 && c.resamples < 10) {
            throw config_error("config key 'resamples' must be 0 or >= 10");
        }
    }
    if (obj.contains("exact_frequency")) {
        if (!obj.at("exact_frequency").is_boolean()) {
            throw config_error("config key 'exact_frequency' must be a boolean");
        }
        c.exact_frequency = obj.at("exact_frequency").get<bool>();
    }
    if (obj.contains("seed")) {
        if (!obj.at("seed").is_number_unsigned() && !obj.at("seed").is_number_integer()) {
            throw config_error("config key 'seed' must be a non-negative integer");
        }
        if (obj.at("seed").is_number_integer() && obj.at("seed").get<long long>() < 0) {
            throw config_error("config key 'seed' must be a non-negative integer");
        }
        c.seed = obj.at("seed").get<std::uint64_t>();
    }
    if (obj.contains("noise")) c.noise = detail::noise_from_json(obj.at("noise"), "noise.");
    if (obj.contains("receiver_noise")) {
        c.receiver_noise = detail::noise_from_json(obj.at("receiver_noise"),
                                                   "receiver_noise.");
    }
    if (obj.contains("channel_q1")) {
        c.channel_q1 = detail::channel_from_json(obj.at("channel_q1"), "channel_q1");
    }
    if (obj.contains("channel_q2")) {
        c.channel_q2 = detail::channel_from_json(obj.at("channel_q2"), "channel_q2");
    }
    if (obj.contains("hom")) {
        const auto& h = obj.at("hom");
        detail::require_keys(
            h, "hom.",
            {"gamma0", "coherence_time_ps", "max_delay_ps", "points", "shots", "analytic"});
        if (h.contains("gamma0")) {
            c.hom_gamma0 = detail::get_number(h, "gamma0", "hom.");
            if (!(c.hom_gamma0 >= 0.0 && c.hom_gamma0 <= 1.0)) {
                throw config_error("config key 'hom.gamma0' must lie in [0, 1]");
            }
        }
        if (h.contains("coherence_time_ps")) {
            c.hom_coherence_time_ps = detail::get_number(h, "coherence_time_ps", "hom.");
            if (!(c.hom_coherence_time_ps > 0.0)) {
                throw config_error("config key 'hom.coherence_time_ps' must be > 0");
            }
        }
        if (h.contains("max_delay_ps")) {
            c.hom_max_delay_ps = detail::get_number(h, "max_delay_ps", "hom.");
            if (!(c.hom_max_delay_ps > 0.0)) {
                throw config_error("config key 'hom.max_delay_ps' must be > 0");
            }
        }
        if (h.contains("points")) {
            if (!h.at("points").is_number_integer()) {
                throw config_error("config key 'hom.points' must be an integer");
            }
            c.hom_points = h.at("points").get<int>();
            if (c.hom_points < 5) {
                throw config_error("config key 'hom.points' must be >= 5");
            }
        }
        if (h.contains("shots")) {
            c.hom_shots = detail::get_number(h, "shots", "hom.");
            if (!(c.hom_shots >= 0.0)) {
                throw config_error("config key 'hom.shots' must be >= 0");
            }
        }
        if (h.contains("analytic")) {
            if (!h.at("analytic").is_boolean()) {
                throw config_error("config key 'hom.analytic' must be a boolean");
            }
            c.hom_analytic = h.at("analytic").get<bool>();
        }
    }
    if (obj.contains("counts")) {
        if (!obj.at("counts").is_string()) {
            throw config_error("config key 'counts' must be a string");
        }
        c.counts_path = obj.at("counts").get<std::string>();
    }
    if (obj.contains("target")) {
        if (!obj.at("target").is_string()) {
            throw config_error("config key 'target' must be a string");
        }
        c.target_path = obj.at("target").get<std::string>();
    }
    return c;
}

/// Serializes the fully resolved config (excluding the output directory).
/// Only sections relevant to the experiment appear, so the echo is both
/// minimal and sufficient: parsing it back reproduces the run.
inline ordered_json config_to_json(const RunConfig& c) {
    ordered_json obj;
    obj["experiment"] = c.experiment;
    const bool tomographic = detail::uses_tomography(c.experiment);
    if (c.experiment == "prepare" || c.experiment == "chip-to-chip" ||
        (c.experiment == "tomo-onchip" && c.input_state_path.empty())) {
        obj["preset"] = c.preset_name;
    }
    if (c.experiment == "tomo-onchip" && !c.input_state_path.empty()) {
        obj["input_state"] = c.input_state_path;
    }
    if (tomographic) {
        obj["shots_per_setting"] = c.shots_per_setting;
        obj["resamples"] = c.resamples;
        obj["exact_frequency"] = c.exact_frequency;
    }
    if (c.seed) obj["seed"] = *c.seed;
    if (c.experiment == "prepare" || c.experiment == "chip-to-chip") {
        obj["noise"] = detail::noise_to_json(c.noise);
    }
    if (detail::uses_receiver(c.experiment)) {
        obj["receiver_noise"] = detail::noise_to_json(c.receiver_noise);
    }
    if (c.experiment == "chip-to-chip") {
        obj["channel_q1"] = detail::channel_to_json(c.channel_q1);
        obj["channel_q2"] = detail::channel_to_json(c.channel_q2);
    }
    if (c.experiment == "hom") {
        ordered_json h;
        h["gamma0"] = c.hom_gamma0;
        h["coherence_time_ps"] = c.hom_coherence_time_ps;
        h["max_delay_ps"] = c.hom_max_delay_ps;
        h["points"] = c.hom_points;
        h["shots"] = c.hom_shots;
        h["analytic"] = c.hom_analytic;
        obj["hom"] = h;
    }
    if (c.experiment == "mle") {
        obj["counts"] = c.counts_path;
        if (!c.target_path.empty()) obj["target"] = c.target_path;
    }
    return obj;
}

namespace detail {

inline bool run_needs_rng(const RunConfig& c) {
    if (c.experiment == "hom") {
        return !c.hom_analytic && c.hom_shots > 0.0;
    }
    if (c.experiment == "mle" || c.experiment == "calibrate") return false;
    if (!c.exact_frequency) return true;
    if (c.resamples > 0) return true;
    if ((c.experiment == "prepare" || c.experiment == "chip-to-chip") &&
        c.noise.phase_error_sigma > 0.0) {
        return true;
    }
    if (uses_receiver(c.experiment) && c.receiver_noise.phase_error_sigma > 0.0) {
        return true;
    }
    return false;
}

/// Validates cross-field requirements once flags and config are merged.
inline void validate_config(const RunConfig& c) {
    static const std::vector<std::string> experiments = {
        "hom", "prepare", "tomo-onchip", "chip-to-chip", "mle", "calibrate"};
    bool known = false;
    for (const std::string& e : experiments) known |= (c.experiment == e);
    if (!known) {
        throw config_error("unknown experiment '" + c.experiment + "'");
    }
    if (c.experiment == "prepare" && c.preset_name.empty()) {
        throw config_error("'prepare' requires a preset name (--preset or config)");
    }
    if (c.experiment == "mle" && c.counts_path.empty()) {
        throw config_error("'mle' requires a counts CSV (--counts or config)");
    }
    if (!c.preset_name.empty()) {
        (void)preset(c.preset_name);  // throws on unknown names
    }
    if (run_needs_rng(c) && !c.seed) {
        throw config_error("a seed is required whenever sampling is enabled "
                           "(--seed or config key 'seed')");
    }
    c.noise.validate();
    c.receiver_noise.validate();
}

inline ordered_json metric_json(const std::string& key) {
    ordered_json obj;
    if (const auto ref = reference_metric(key)) {
        obj["value"] = ref->value;
        obj["sigma"] = ref->sigma;
    }
    return obj;
}

inline ordered_json reference_block(const RunConfig& c) {
    ordered_json ref;
    if (c.experiment == "hom") {
        ref["visibility"] = metric_json("hom_visibility");
    } else if (c.experiment == "prepare") {
        const ordered_json f = metric_json(c.preset_name + "_fidelity");
        const ordered_json p = metric_json(c.preset_name + "_purity");
        if (!f.empty()) ref["fidelity"] = f;
        if (!p.empty()) ref["purity"] = p;
    } else if (c.experiment == "tomo-onchip" && c.input_state_path.empty() &&
               c.preset_name == "PsiMinus") {
        ref["fidelity"] = metric_json("onchip_fidelity");
        ref["purity"] = metric_json("onchip_purity");
        ref["offchip_fidelity"] = metric_json("offchip_fidelity");
        ref["relative_fidelity"] = metric_json("relative_fidelity");
    } else if (c.experiment == "chip-to-chip" && c.preset_name == "Cluster") {
        ref["fidelity"] = metric_json("chip_to_chip_fidelity");
        ref["purity"] = metric_json("chip_to_chip_purity");
    }
    if (!ref.empty()) ref["note"] = "measured values of the reference device";
    return ref;
}

inline ordered_json experiment_results_json(const ExperimentReport& r, int resamples) {
    ordered_json out;
    out["fidelity"] = r.fidelity;
    out["purity"] = r.purity;
    if (resamples > 0) {
        out["fidelity_sigma"] = r.fidelity_sigma;
        out["purity_sigma"] = r.purity_sigma;
        out["bootstrap_skipped"] = r.bootstrap_skipped;
    }
    out["success_probability"] = r.success_probability;
    out["mle_iterations"] = r.mle_iterations;
    return out;
}

inline std::filesystem::path prepare_out_dir(const RunConfig& c) {
    std::filesystem::path dir(c.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error("cannot create output directory '" + c.out_dir + "'");
    return dir;
}

inline void write_report(const std::filesystem::path& dir, const ordered_json& report) {
    write_text_file((dir / "report.json").string(), report.dump(2) + "\n");
}

}  // namespace detail

/// Executes a validated config, writing artifacts into its output
/// directory; returns the report that was written.
inline ordered_json run_config(const RunConfig& config) {
    detail::validate_config(config);
    const ConventionFlags flags;  // calibrated defaults
    const std::filesystem::path dir = detail::prepare_out_dir(config);
    const std::uint64_t seed = config.seed.value_or(0);

    ordered_json report;
    report["command"] = config.experiment;

    if (config.experiment == "hom") {
        const std::vector<double> delays =
            symmetric_delays(config.hom_max_delay_ps, config.hom_points);
        const double shots = config.hom_analytic ? 0.0 : config.hom_shots;
        const HomCurve curve = run_hom_scan(delays, config.hom_gamma0,
                                            config.hom_coherence_time_ps, flags, shots,
                                            mix_seed(seed, 30));
        report["label"] = "hom";
        report["config"] = config_to_json(config);
        ordered_json results;
        results["visibility"] = curve.fitted_visibility;
        results["baseline_rate"] = curve.baseline_rate;
        results["minimum_rate"] =
            *std::min_element(curve.coincidence_rates.begin(),
                              curve.coincidence_rates.end());
        results["coherence_time_ps"] = curve.coherence_time_ps;
        report["results"] = results;
        report["reference"] = detail::reference_block(config);
        write_curve_csv((dir / "hom_curve.csv").string(), curve.delays_ps,
                        curve.coincidence_rates);
        detail::write_report(dir, report);
        return report;
    }

    if (config.experiment == "calibrate") {
        const CalibrationReport cal = calibrate_conventions();
        report["label"] = "calibrate";
        report["config"] = config_to_json(config);
        ordered_json results;
        results["satisfying_count"] = cal.satisfying_count;
        ordered_json fl;
        fl["mmi"] = cal.flags.mmi == MmiConvention::symmetric_i ? "symmetric_i"
                                                                : "real_hadamard";
        fl["inner_phase_sign"] = cal.flags.inner_phase_sign;
        fl["prep_inner_arm"] = cal.flags.prep_inner_arm == Arm::upper ? "upper" : "lower";
        fl["cross_inner_arm"] = cal.flags.cross_inner_arm == Arm::upper ? "upper" : "lower";
        fl["back_inner_arm"] = cal.flags.back_inner_arm == Arm::upper ? "upper" : "lower";
        fl["outer_arm_q1"] = cal.flags.outer_arm_q1 == Arm::upper ? "upper" : "lower";
        fl["outer_arm_q2"] = cal.flags.outer_arm_q2 == Arm::upper ? "upper" : "lower";
        fl["qubit2_logical_flip"] = cal.flags.qubit2_logical_flip;
        fl["bar_phase"] = cal.flags.bar_phase;
        fl["frame_q1"] = cal.flags.frame_q1;
        fl["frame_q2"] = cal.flags.frame_q2;
        results["flags"] = fl;
        ordered_json rows;
        for (const auto& [label, f] : cal.row_fidelities) rows[label] = f;
        results["row_fidelities"] = rows;
        report["results"] = results;
        detail::write_report(dir, report);
        return report;
    }

    if (config.experiment == "mle") {
        const CountsDataset data = read_counts_csv(config.counts_path);
        const MleResult mle = mle_reconstruct(data);
        report["label"] = "mle";
        report["config"] = config_to_json(config);
        ordered_json results;
        results["purity"] = purity(mle.state);
        if (!config.target_path.empty()) {
            Matrix4cd target = read_matrix_csv(config.target_path);
            if (!is_physical_state(target, 1e-8)) {
                throw config_error("target state in '" + config.target_path +
                                   "' is not a density matrix");
            }
            results["fidelity"] = fidelity(mle.state, clip_to_physical(target));
        }
        results["mle_iterations"] = mle.iterations;
        results["final_step"] = mle.final_step;
        report["results"] = results;
        write_matrix_csv((dir / "rho.csv").string(), mle.state);
        detail::write_report(dir, report);
        return report;
    }

    ExperimentReport result;
    if (config.experiment == "prepare") {
        result = run_state_prep_experiment(config.preset_name, flags, config.noise,
                                           config.shots_per_setting, config.resamples,
                                           seed, config.exact_frequency);
    } else if (config.experiment == "tomo-onchip") {
        DensityMatrix4 input;
        if (!config.input_state_path.empty()) {
            const Matrix4cd raw = read_matrix_csv(config.input_state_path);
            if (!is_physical_state(raw, 1e-8)) {
                throw config_error("input state in '" + config.input_state_path +
                                   "' is not a density matrix");
            }
            input = clip_to_physical(raw);
        } else {
            const std::string name =
                config.preset_name.empty() ? "PsiMinus" : config.preset_name;
            input = density_from_ket(target_state(name));
        }
        result = run_onchip_tomography(input, flags, config.receiver_noise,
                                       config.shots_per_setting, config.resamples, seed,
                                       config.exact_frequency);
    } else {  // chip-to-chip
        const std::string name =
            config.preset_name.empty() ? "Cluster" : config.preset_name;
        result = run_chip_to_chip(name, flags, config.noise, config.channel_q1,
                                  config.channel_q2, config.receiver_noise,
                                  config.shots_per_setting, config.resamples, seed,
                                  config.exact_frequency);
    }

    RunConfig echoed = config;
    if (config.experiment == "tomo-onchip" && config.input_state_path.empty() &&
        echoed.preset_name.empty()) {
        echoed.preset_name = "PsiMinus";
    }
    if (config.experiment == "chip-to-chip" && echoed.preset_name.empty()) {
        echoed.preset_name = "Cluster";
    }
    report["label"] = result.label;
    report["config"] = config_to_json(echoed);
    ordered_json results = detail::experiment_results_json(result, config.resamples);
    if (result.has_reference_run) {
        results["offchip_fidelity"] = result.reference_fidelity;
        if (config.resamples > 0) {
            results["offchip_fidelity_sigma"] = result.reference_fidelity_sigma;
        }
        results["offchip_purity"] = result.reference_purity;
        results["relative_fidelity"] = result.relative;
        if (config.resamples > 0) {
            results["relative_fidelity_sigma"] = result.relative_sigma;
        }
    }
    report["results"] = results;
    const ordered_json reference = detail::reference_block(echoed);
    if (!reference.empty()) report["reference"] = reference;
    write_counts_csv((dir / "counts.csv").string(), result.counts);
    write_matrix_csv((dir / "rho.csv").string(), result.reconstructed);
    detail::write_report(dir, report);
    return report;
}

/// Builds a RunConfig from a subcommand name, optional JSON config file,
/// and command-line overrides (already extracted by the caller).
struct CliOverrides {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> preset_name;
    std::optional<std::string> counts_path;
    std::optional<std::string> target_path;
    std::optional<double> hom_gamma0;
    bool exact_frequency = false;
    bool hom_analytic = false;
};

inline RunConfig resolve_config(const std::string& experiment, const CliOverrides& o) {
    RunConfig c;
    if (o.config_path) {
        ordered_json obj;
        try {
            obj = ordered_json::parse(read_text_file(*o.config_path));
        } catch (const nlohmann::json::parse_error& e) {
            throw config_error("config file '" + *o.config_path +
                               "' is not valid JSON: " + e.what());
        }
        c = config_from_json(obj);
        if (!c.experiment.empty() && c.experiment != experiment) {
            throw config_error("config file says experiment '" + c.experiment +
                               "' but the subcommand is '" + experiment + "'");
        }
    }
    c.experiment = experiment;
    if (o.seed) c.seed = *o.seed;
    if (o.out_dir) c.out_dir = *o.out_dir;
    if (o.preset_name) c.preset_name = *o.preset_name;
    if (o.counts_path) c.counts_path = *o.counts_path;
    if (o.target_path) c.target_path = *o.target_path;
    if (o.hom_gamma0) {
        if (!(*o.hom_gamma0 >= 0.0 && *o.hom_gamma0 <= 1.0)) {
            throw config_error("--gamma0 must lie in [0, 1]");
        }
        c.hom_gamma0 = *o.hom_gamma0;
    }
    if (o.exact_frequency) c.exact_frequency = true;
    if (o.hom_analytic) c.hom_analytic = true;
    return c;
}

/// Maps a thrown error to the documented exit code, printing a diagnostic.
inline int dispatch_config(const RunConfig& config) {
    try {
        run_config(config);
        return 0;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const MleError& e) {
        std::cerr << "non-convergence: " << e.what() << '\n';
        return 3;
    } catch (const calibration_error& e) {
        std::cerr << "non-convergence: " << e.what() << '\n';
        return 3;
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 4;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace duorail
