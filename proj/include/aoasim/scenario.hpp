// SPDX-License-Identifier: Apache-2.0
//
// Scenario configuration: a single self-contained JSON file describing the
// environment, radio parameters, attacker settings, defense policies, and
// trial plan. Unknown keys are rejected so typos fail fast.

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "aoasim/attacker.hpp"
#include "aoasim/defender.hpp"
#include "aoasim/geometry.hpp"
#include "aoasim/phy.hpp"

namespace aoasim {

/// Uniform evaluation grid bounds, in the units used by the config file.
struct GridConfig {
    double angle_min_deg = -90.0;
    double angle_max_deg = 90.0;
    double angle_step_deg = 1.0;
    double distance_min_m = 0.0;
    double distance_max_m = 60.0;
    double distance_step_m = 0.25;

    ProfileGrid build() const;
};

/// How many signal components the attacker assumes when splitting the
/// snapshot covariance into signal and noise subspaces.
enum class NumPathsMode {
    true_count,   ///< the scenario's own path count per AP (attacker-favorable)
    fixed,        ///< a fixed integer
    eigen_ratio,  ///< estimated from the eigenvalue spectrum
};

struct AttackerConfig {
    int sub_antennas = 2;
    int sub_subcarriers = 0;  ///< 0 = ceil(L/2), resolved against the OFDM config
    NumPathsMode num_paths_mode = NumPathsMode::true_count;
    int num_paths_fixed = 2;
    double eigen_ratio = 0.01;
    double peak_threshold_db = -10.0;

    int resolved_sub_subcarriers(const OfdmConfig& ofdm) const;
};

struct DefenderConfig {
    std::vector<DefenseMode> policies;  ///< "none" is always added as the baseline
    bool adaptive_dobf = true;
    double d_obf_m = 0.0;
    double adaptive_margin_m = 5.0;
    CombineRule combine_rule = CombineRule::projection;
    double angle_error_std_rad = 0.0;

    ObfuscationPolicy policy_for(DefenseMode mode) const;
};

struct NoiseConfig {
    double snr_db = std::numeric_limits<double>::infinity();  ///< +inf = noise-free
    double sfo_min_m = 0.0;
    double sfo_max_m = -1.0;  ///< < 0 = one full delay alias period

    double resolved_sfo_max(const OfdmConfig& ofdm) const;
};

struct TrialsConfig {
    int num_positions = 100;
    std::uint64_t rng_seed = 1;
    double margin_m = 2.0;      ///< positions drawn uniformly this far from walls
    int max_order = 1;          ///< reflection bounce cutoff
    double range_sigma_m = 0.0; ///< range-oracle noise for single-AP localization
};

struct ScenarioConfig {
    Environment env;
    ArrayConfig tx_array;
    ArrayConfig rx_array;
    OfdmConfig ofdm;
    GridConfig grid;
    AttackerConfig attacker;
    DefenderConfig defender;
    NoiseConfig noise;
    TrialsConfig trials;
    std::string output_dir = "out";

    /// Cross-field validation on top of each sub-config's own checks.
    /// Throws std::invalid_argument with a descriptive message.
    void validate() const;
};

/// Parse a scenario file. Throws std::runtime_error on I/O or JSON syntax
/// errors and std::invalid_argument on unknown keys, wrong types, or
/// invariant violations. The error message names the offending key.
ScenarioConfig load_scenario(const std::string& path);

/// Serialize the fully-resolved configuration (defaults filled in) as the
/// JSON text written to scenario.resolved. Deterministic key order.
std::string resolved_scenario_json(const ScenarioConfig& config);

}  // namespace aoasim
