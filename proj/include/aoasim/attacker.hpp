// SPDX-License-Identifier: Apache-2.0
//
// Snooping access point: joint antenna-subcarrier smoothing of effective
// CSI, subspace pseudo-spectrum over (arrival angle, relative distance),
// direct-path selection, and localization from one or several APs.

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "aoasim/geometry.hpp"
#include "aoasim/phy.hpp"

namespace aoasim {

/// Evaluation grid for the angle-distance pseudo-spectrum.
struct ProfileGrid {
    std::vector<double> angles_rad;    ///< strictly increasing, within [-pi/2, pi/2]
    std::vector<double> distances_m;   ///< strictly increasing, >= 0

    /// Uniform grid helper: inclusive endpoints.
    static ProfileGrid uniform(double angle_min_rad, double angle_max_rad, double angle_step_rad,
                               double dist_min_m, double dist_max_m, double dist_step_m);

    /// Throws std::invalid_argument when a grid is empty or not strictly
    /// increasing, or when the distance span exceeds the delay alias window
    /// of `ofdm`.
    void validate(const OfdmConfig& ofdm) const;
};

/// One detected spectrum peak. power_db is relative to the global spectrum
/// maximum (0 dB = the maximum itself).
struct ProfilePeak {
    double angle_rad = 0.0;
    double distance_m = 0.0;
    double power_db = 0.0;
};

/// Pseudo-spectrum over the grid plus retained peaks, sorted by ascending
/// distance (ties: higher power, then smaller |angle|).
struct AngleDistanceProfile {
    Eigen::MatrixXd spectrum;          ///< rows = angles, cols = distances
    std::vector<ProfilePeak> peaks;
};

/// Position estimate produced by a localization method.
struct LocalizationEstimate {
    Vec2 position;
    enum class Method { single_ap, triangulation } method = Method::single_ap;
    std::vector<double> aoa_rad;       ///< contributing per-AP angle estimates
};

/// Stack all contiguous (sub_antennas x sub_subcarriers) blocks of the
/// K_rx x L effective CSI into columns of a snapshot matrix of shape
/// (sub_antennas*sub_subcarriers) x ((K_rx-sub_antennas+1)*(L-sub_subcarriers+1)).
/// Rows are antenna-major within a block; columns are antenna-shift major.
/// Throws std::invalid_argument on invalid block sizes or < 2 snapshots.
Eigen::MatrixXcd smooth_csi(const Eigen::MatrixXcd& h_eff,
                            int sub_antennas,
                            int sub_subcarriers);

/// Count of sample-covariance eigenvalues >= ratio * largest, clamped to
/// [1, rows-1]. Used when the signal count is estimated rather than given.
int estimate_num_paths(const Eigen::MatrixXcd& snapshots, double eigen_ratio);

/// Subspace pseudo-spectrum: spectrum(theta, d) = 1 / ||E_n^H v(theta, d)||^2
/// where E_n spans the noise subspace of the snapshot covariance and
/// v = spatial(theta at f_c) (x) delay(d over the sub-block tones).
/// Peaks are strict 8-neighborhood local maxima within peak_threshold_db
/// of the global maximum.
/// Throws std::invalid_argument on invalid num_paths and std::runtime_error
/// on a non-finite covariance.
AngleDistanceProfile music_profile(const Eigen::MatrixXcd& snapshots,
                                   const ProfileGrid& grid,
                                   int num_paths,
                                   const OfdmConfig& ofdm,
                                   const ArrayConfig& rx_array,
                                   int sub_antennas,
                                   int sub_subcarriers,
                                   double peak_threshold_db = -10.0);

/// The retained peak with minimum distance (the "earliest arrival").
/// Throws std::runtime_error when the profile has no peaks.
ProfilePeak select_direct(const AngleDistanceProfile& profile);

/// Position from one AP: AP position + range * direction(orientation + aoa).
/// Throws std::invalid_argument when range_est <= 0.
LocalizationEstimate localize_single_ap(const ApPose& ap, double aoa_est_rad, double range_est_m);

/// Least-squares intersection of per-AP bearing lines via the 2x2 normal
/// equations. Throws std::invalid_argument on < 2 APs or a size mismatch,
/// std::runtime_error when all bearings are parallel (singular system).
LocalizationEstimate triangulate(const std::vector<ApPose>& aps,
                                 const std::vector<double>& aoa_ests_rad);

}  // namespace aoasim
