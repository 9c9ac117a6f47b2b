// SPDX-License-Identifier: Apache-2.0
//
// Monte-Carlo experiment driver: drops users at random room positions,
// applies each defense policy toward the serving AP, runs the snooping
// attacker at every AP, and aggregates AoA-error, localization, and
// received-power metrics into CSV artifacts.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "aoasim/attacker.hpp"
#include "aoasim/defender.hpp"
#include "aoasim/scenario.hpp"

namespace aoasim {

/// Outcome of one attacker run: one (trial, policy, AP) triple.
struct ApObservation {
    int ap_index = 0;
    bool has_direct = false;       ///< geometric line-of-sight path exists within both arrays' field of view
    double true_aoa_rad = 0.0;     ///< bearing from the AP to the true user position
    bool ok = false;               ///< attacker produced an estimate
    std::string error;             ///< failure reason when !ok
    double est_aoa_rad = 0.0;
    double est_distance_m = 0.0;
    double est_power_db = 0.0;
    int num_paths_true = 0;
    int num_paths_used = 0;
    int num_peaks = 0;
    double rssi_db = 0.0;          ///< received power of the noiseless effective channel
    bool rssi_valid = false;
    double aoa_error_rad = 0.0;    ///< |wrap(est - true)|; valid when ok && has_direct
    bool single_ok = false;        ///< single-AP localization available
    Vec2 single_pos;
    double single_error_m = 0.0;
};

/// One defense policy evaluated at one user position.
struct PolicyResult {
    DefenseMode mode = DefenseMode::none;
    double d_obf_m = 0.0;
    bool fell_back = false;        ///< no reflected path known; baseline precoder used
    std::vector<ApObservation> aps;
    bool tri_ok = false;
    std::string tri_error;
    Vec2 tri_pos;
    double tri_error_m = 0.0;
    int tri_num_aps = 0;
};

/// One Monte-Carlo position.
struct TrialRecord {
    int trial_index = 0;
    bool ok = false;
    std::string error;             ///< trial-level failure reason when !ok
    Vec2 user_pos;
    double user_orientation_rad = 0.0;
    int serving_ap = 0;
    std::vector<PolicyResult> policies;
};

struct ExperimentResult {
    std::vector<DefenseMode> policies;  ///< baseline "none" first, then the configured ones
    std::vector<TrialRecord> trials;
};

/// Optional consumer for per-run pseudo-spectra (used by --dump-profiles
/// and the `profile` verb); called in deterministic trial order.
using ProfileSink = std::function<void(int trial, DefenseMode mode, int ap_index,
                                       const ProfileGrid& grid, const AngleDistanceProfile&)>;

/// Run the full experiment described by `config`. Each trial draws from an
/// independent child RNG of (rng_seed, trial index), so results do not
/// depend on execution order. Per-trial errors are recorded in the trial
/// records rather than aborting the run.
ExperimentResult run_experiment(const ScenarioConfig& config, const ProfileSink& sink = nullptr);

/// Evaluate the given policies at one fixed user position (used by the
/// `profile` and `precoder` CLI verbs). Same procedure as one experiment
/// trial, driven by the child RNG of (rng_seed, 0), except the
/// sampling-offset draw is pinned to noise.sfo_min_m so repeated
/// inspections of one position are directly comparable.
TrialRecord run_single_position(const ScenarioConfig& config,
                                Vec2 user_pos,
                                const std::vector<DefenseMode>& policies,
                                const ProfileSink& sink = nullptr);

/// Aggregates for one policy. AoA and single-AP statistics pool the
/// (trial, AP) observations where the attacker succeeded and a geometric
/// direct path exists — the only case where "error against the true direct
/// bearing" is meaningful; triangulation uses the same observation set.
struct PolicySummary {
    DefenseMode mode = DefenseMode::none;
    std::vector<double> aoa_errors_deg;        ///< pooled, unsorted (trial order)
    double aoa_mean_deg = 0.0;
    double aoa_median_deg = 0.0;
    std::vector<long> aoa_histogram;           ///< 2-degree bins spanning [0, 180]
    std::vector<double> single_errors_m;       ///< sorted ascending
    double single_rmse_m = 0.0;
    double single_median_m = 0.0;
    std::vector<double> tri_errors_m;          ///< sorted ascending
    double tri_rmse_m = 0.0;
    double tri_median_m = 0.0;
    double rssi_mean_db = 0.0;                 ///< serving-AP mean
    double rssi_delta_db = 0.0;                ///< mean per-trial delta vs baseline
    long observations_ok = 0;
    long observations_failed = 0;
};

struct Summary {
    std::vector<PolicySummary> policies;
    long trials_ok = 0;
    long trials_failed = 0;
};

/// Reduce an experiment to per-policy summary statistics.
/// Throws std::invalid_argument on an empty experiment.
Summary summarize(const ExperimentResult& result);

/// Write scenario.resolved, trials.csv, localization.csv, summary.csv,
/// aoa_histogram.csv, and localization_cdf.csv into outdir (created if
/// missing). All files are UTF-8, comma-separated, with a header row and
/// '.' as the decimal separator; row order is deterministic.
/// Throws std::runtime_error naming the file on I/O failure.
void emit_outputs(const ScenarioConfig& config,
                  const ExperimentResult& result,
                  const Summary& summary,
                  const std::string& outdir);

/// Write one pseudo-spectrum as CSV (angle_deg, distance_m, power_db
/// relative to the spectrum maximum), one row per grid cell, angle-major.
void write_profile_csv(const std::string& path,
                       const ProfileGrid& grid,
                       const AngleDistanceProfile& profile);

/// Write precoder weights as CSV (subcarrier_index, antenna_index, real,
/// imag) — the per-tone weight table a transmitting client would apply.
void write_precoder_csv(const std::string& path, const Precoder& precoder);

}  // namespace aoasim
