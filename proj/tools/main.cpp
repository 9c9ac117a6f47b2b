// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: `run` executes a scenario's Monte-Carlo experiment,
// `profile` dumps the attacker's pseudo-spectra for one user position, and
// `precoder` exports the defense weight table for one user position.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aoasim/harness.hpp"

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> positions;
    std::optional<double> snr_db;
};

void add_override_flags(CLI::App* cmd, Overrides* ov, bool with_positions) {
    cmd->add_option("--seed", ov->seed, "Override trials.rng_seed");
    cmd->add_option("--out", ov->out, "Override the output directory");
    if (with_positions) {
        cmd->add_option("--positions", ov->positions, "Override trials.num_positions");
    }
    cmd->add_option("--snr", ov->snr_db, "Override noise.snr_db (dB; inf = noise-free)");
}

aoasim::ScenarioConfig load_with_overrides(const std::string& path, const Overrides& ov) {
    aoasim::ScenarioConfig config = aoasim::load_scenario(path);
    if (ov.seed) {
        config.trials.rng_seed = *ov.seed;
        config.env.rng_seed = *ov.seed;
    }
    if (ov.out) config.output_dir = *ov.out;
    if (ov.positions) config.trials.num_positions = *ov.positions;
    if (ov.snr_db) config.noise.snr_db = *ov.snr_db;
    config.validate();
    return config;
}

aoasim::Vec2 parse_position(const std::string& text) {
    std::istringstream in(text);
    aoasim::Vec2 p;
    char comma = 0;
    if (!(in >> p.x >> comma >> p.y) || comma != ',' || !(in >> std::ws).eof()) {
        throw std::invalid_argument("--position must be 'x,y' in meters (got '" + text + "')");
    }
    return p;
}

std::string profile_filename(int trial, aoasim::DefenseMode mode, int ap_index) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "trial%04d_%s_ap%d.csv", trial, aoasim::to_string(mode),
                  ap_index);
    return buf;
}

int cmd_run(const std::string& config_path, const Overrides& ov, bool dump_profiles) {
    const aoasim::ScenarioConfig config = load_with_overrides(config_path, ov);
    aoasim::ProfileSink sink;
    if (dump_profiles) {
        const std::string profile_dir = config.output_dir + "/profiles";
        std::filesystem::create_directories(profile_dir);
        sink = [profile_dir](int trial, aoasim::DefenseMode mode, int ap,
                             const aoasim::ProfileGrid& grid,
                             const aoasim::AngleDistanceProfile& profile) {
            aoasim::write_profile_csv(profile_dir + "/" + profile_filename(trial, mode, ap), grid,
                                      profile);
        };
    }
    const aoasim::ExperimentResult result = aoasim::run_experiment(config, sink);
    const aoasim::Summary summary = aoasim::summarize(result);
    aoasim::emit_outputs(config, result, summary, config.output_dir);
    std::cout << "trials: " << summary.trials_ok << " ok, " << summary.trials_failed
              << " failed\n";
    for (const aoasim::PolicySummary& ps : summary.policies) {
        std::cout << aoasim::to_string(ps.mode) << ": aoa mean "
                  << (ps.aoa_errors_deg.empty() ? 0.0 : ps.aoa_mean_deg) << " deg (n="
                  << ps.aoa_errors_deg.size() << "), triangulation rmse "
                  << (ps.tri_errors_m.empty() ? 0.0 : ps.tri_rmse_m) << " m (n="
                  << ps.tri_errors_m.size() << "), rssi delta " << ps.rssi_delta_db << " dB\n";
    }
    std::cout << "outputs written to " << config.output_dir << "\n";
    return 0;
}

int cmd_profile(const std::string& config_path,
                const Overrides& ov,
                const std::string& position_str,
                const std::string& policy_str) {
    const aoasim::ScenarioConfig config = load_with_overrides(config_path, ov);
    const aoasim::Vec2 pos = parse_position(position_str);
    const aoasim::DefenseMode mode = aoasim::defense_mode_from_string(policy_str);
    std::filesystem::create_directories(config.output_dir);
    const aoasim::ProfileSink sink = [&config](int trial, aoasim::DefenseMode m, int ap,
                                               const aoasim::ProfileGrid& grid,
                                               const aoasim::AngleDistanceProfile& profile) {
        const std::string path = config.output_dir + "/profile_" +
                                 std::string(aoasim::to_string(m)) + "_ap" + std::to_string(ap) +
                                 ".csv";
        aoasim::write_profile_csv(path, grid, profile);
        std::cout << "ap " << ap << ": " << profile.peaks.size() << " peak(s)";
        for (const aoasim::ProfilePeak& p : profile.peaks) {
            std::cout << "  (" << p.angle_rad * 180.0 / kPi << " deg, " << p.distance_m << " m, "
                      << p.power_db << " dB)";
        }
        std::cout << "\n  wrote " << path << "\n";
        (void)trial;
    };
    const aoasim::TrialRecord rec = aoasim::run_single_position(config, pos, {mode}, sink);
    if (!rec.ok) {
        throw std::runtime_error(rec.error);
    }
    const aoasim::PolicyResult& pr = rec.policies.front();
    std::cout << "serving ap: " << rec.serving_ap << ", policy " << aoasim::to_string(pr.mode)
              << ", d_obf " << pr.d_obf_m << " m\n";
    for (const aoasim::ApObservation& o : pr.aps) {
        std::cout << "ap " << o.ap_index << ": ";
        if (o.ok) {
            std::cout << "estimated aoa " << o.est_aoa_rad * 180.0 / kPi << " deg at "
                      << o.est_distance_m << " m";
            if (o.has_direct) {
                std::cout << " (true bearing " << o.true_aoa_rad * 180.0 / kPi << " deg, error "
                          << o.aoa_error_rad * 180.0 / kPi << " deg)";
            } else {
                std::cout << " (no direct path)";
            }
            std::cout << ", rssi " << o.rssi_db << " dB\n";
        } else {
            std::cout << o.error << "\n";
        }
    }
    return 0;
}

int cmd_precoder(const std::string& config_path,
                 const Overrides& ov,
                 const std::string& position_str,
                 const std::string& policy_str) {
    const aoasim::ScenarioConfig config = load_with_overrides(config_path, ov);
    const aoasim::Vec2 pos = parse_position(position_str);
    const aoasim::DefenseMode mode = aoasim::defense_mode_from_string(policy_str);
    if (pos.x < 0.0 || pos.x > config.env.width || pos.y < 0.0 || pos.y > config.env.height) {
        throw std::invalid_argument("position lies outside the room");
    }
    // Same per-trial procedure as the harness: serve from the nearest AP,
    // face it, learn the path pair, build the policy's precoder.
    int serving = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < config.env.ap_poses.size(); ++i) {
        const double d = aoasim::norm(config.env.ap_poses[i].position - pos);
        if (d < best) {
            best = d;
            serving = static_cast<int>(i);
        }
    }
    const aoasim::Vec2 sp = config.env.ap_poses[static_cast<std::size_t>(serving)].position;
    const double orientation = std::atan2(sp.x - pos.x, sp.y - pos.y);
    const std::vector<aoasim::PathComponent> paths = aoasim::enumerate_paths(
        config.env, pos, orientation, static_cast<std::size_t>(serving), config.trials.max_order);
    aoasim::Rng rng = aoasim::Rng::child(config.trials.rng_seed, 0);
    const aoasim::PathKnowledge knowledge =
        aoasim::make_path_knowledge(paths, rng, config.defender.angle_error_std_rad);
    const aoasim::ObfuscationPolicy policy = config.defender.policy_for(mode);
    const double d_obf = aoasim::resolve_dobf(policy, knowledge, config.ofdm);
    const aoasim::Precoder precoder =
        aoasim::obfuscation_precoder(knowledge, policy, config.tx_array, config.ofdm);
    std::filesystem::create_directories(config.output_dir);
    const std::string path =
        config.output_dir + "/precoder_" + std::string(aoasim::to_string(mode)) + ".csv";
    aoasim::write_precoder_csv(path, precoder);
    std::cout << "serving ap: " << serving << ", theta_d " << knowledge.theta_d_rad * 180.0 / kPi
              << " deg, d_d " << knowledge.d_d_m << " m";
    if (knowledge.has_reflected) {
        std::cout << ", theta_r " << knowledge.theta_r_rad * 180.0 / kPi << " deg, d_r "
                  << knowledge.d_r_m << " m";
    }
    std::cout << ", d_obf " << d_obf << " m\n";
    std::cout << "wrote " << path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wi-Fi angle-of-arrival location-privacy simulator"};
    app.require_subcommand(1);

    std::string run_config;
    Overrides run_ov;
    bool dump_profiles = false;
    CLI::App* run = app.add_subcommand("run", "Run the Monte-Carlo experiment of a scenario file");
    run->add_option("config", run_config, "Scenario JSON file")->required();
    add_override_flags(run, &run_ov, /*with_positions=*/true);
    run->add_flag("--dump-profiles", dump_profiles,
                  "Write every attacker pseudo-spectrum under <out>/profiles/");

    std::string profile_config, profile_position, profile_policy = "none";
    Overrides profile_ov;
    CLI::App* profile =
        app.add_subcommand("profile", "Dump attacker pseudo-spectra for one user position");
    profile->add_option("config", profile_config, "Scenario JSON file")->required();
    profile->add_option("--position", profile_position, "User position 'x,y' in meters")
        ->required();
    profile->add_option("--policy", profile_policy,
                        "Defense mode: none, nulling, beam_delay, mirage");
    add_override_flags(profile, &profile_ov, /*with_positions=*/false);

    std::string precoder_config, precoder_position, precoder_policy = "none";
    Overrides precoder_ov;
    CLI::App* precoder =
        app.add_subcommand("precoder", "Export defense precoder weights for one user position");
    precoder->add_option("config", precoder_config, "Scenario JSON file")->required();
    precoder->add_option("--position", precoder_position, "User position 'x,y' in meters")
        ->required();
    precoder->add_option("--policy", precoder_policy,
                         "Defense mode: none, nulling, beam_delay, mirage");
    add_override_flags(precoder, &precoder_ov, /*with_positions=*/false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return cmd_run(run_config, run_ov, dump_profiles);
        }
        if (profile->parsed()) {
            return cmd_profile(profile_config, profile_ov, profile_position, profile_policy);
        }
        return cmd_precoder(precoder_config, precoder_ov, precoder_position, precoder_policy);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
