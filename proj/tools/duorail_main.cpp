// duorail: simulator and analysis toolkit for a programmable four-mode
// photonic chip carrying two dual-rail qubits.

#include <duorail/cli.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <optional>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"duorail: dual-rail photonic chip simulator and analysis toolkit"};
    app.require_subcommand(1);

    struct SubcommandState {
        CLI::App* cmd = nullptr;
        duorail::CliOverrides overrides;
        std::string config_path, out_dir, preset, counts, target;
        std::uint64_t seed = 0;
        double gamma0 = 0.0;
    };
    std::array<SubcommandState, 6> subs;
    const std::array<std::pair<std::string, std::string>, 6> names = {{
        {"hom", "Two-photon interference dip scan"},
        {"prepare", "Prepare a named state on chip and run tomography on it"},
        {"tomo-onchip", "Analyze an external state with the chip as tomography unit"},
        {"chip-to-chip", "Prepare on one chip, transmit, analyze on a second chip"},
        {"mle", "Reconstruct a density matrix from a counts CSV"},
        {"calibrate", "Search the hardware convention flags and report the result"},
    }};

    for (std::size_t i = 0; i < names.size(); ++i) {
        SubcommandState& s = subs[i];
        s.cmd = app.add_subcommand(names[i].first, names[i].second);
        s.cmd->add_option("--config", s.config_path, "JSON config file");
        s.cmd->add_option("--out", s.out_dir, "Output directory");
        s.cmd->add_option("--seed", s.seed, "RNG seed (required when sampling)");
        const std::string& name = names[i].first;
        if (name == "prepare" || name == "tomo-onchip" || name == "chip-to-chip") {
            s.cmd->add_option("--preset", s.preset, "Named phase-table row");
            s.cmd->add_flag("--exact-frequency", s.overrides.exact_frequency,
                            "Counts = shots x probability, no sampling");
        }
        if (name == "mle") {
            s.cmd->add_option("--counts", s.counts, "36-row counts CSV");
            s.cmd->add_option("--target", s.target,
                              "Target density matrix CSV (8 rows: real, imaginary)");
        }
        if (name == "hom") {
            s.cmd->add_option("--gamma0", s.gamma0, "Zero-delay photon overlap");
            s.cmd->add_flag("--analytic", s.overrides.hom_analytic,
                            "Exact rates instead of Poisson-sampled counts");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    for (SubcommandState& s : subs) {
        if (!s.cmd->parsed()) continue;
        const auto given = [&](const char* name) {
            const CLI::Option* opt = s.cmd->get_option_no_throw(name);
            return opt != nullptr && opt->count() > 0;
        };
        if (given("--config")) s.overrides.config_path = s.config_path;
        if (given("--out")) s.overrides.out_dir = s.out_dir;
        if (given("--seed")) s.overrides.seed = s.seed;
        if (given("--preset")) s.overrides.preset_name = s.preset;
        if (given("--counts")) s.overrides.counts_path = s.counts;
        if (given("--target")) s.overrides.target_path = s.target;
        if (given("--gamma0")) s.overrides.hom_gamma0 = s.gamma0;
        try {
            const duorail::RunConfig config =
                duorail::resolve_config(s.cmd->get_name(), s.overrides);
            return duorail::dispatch_config(config);
        } catch (const duorail::config_error& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return 2;
        } catch (const duorail::io_error& e) {
            std::cerr << "io error: " << e.what() << '\n';
            return 4;
        }
    }
    return 2;
}
