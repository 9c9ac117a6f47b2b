// SPDX-License-Identifier: Apache-2.0
//
// Physical layer: uniform linear arrays, OFDM subcarrier grid, CSI synthesis
// from path components, precoder application, noise injection, sampling
// offset model, and received-power measurement.

#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "aoasim/geometry.hpp"

namespace aoasim {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// Uniform linear array.
struct ArrayConfig {
    int num_antennas = 4;
    double spacing_m = 0.026;

    void validate() const;  ///< throws std::invalid_argument on K < 2 or s <= 0
};

/// OFDM tone grid: f_i = f_c + (i - (L-1)/2) * (B/L).
struct OfdmConfig {
    double center_frequency_hz = 5.18e9;
    double bandwidth_hz = 20e6;
    int num_subcarriers = 52;

    void validate() const;  ///< throws std::invalid_argument on L < 2 or B/fc <= 0
    double subcarrier_spacing_hz() const;
    double subcarrier_frequency_hz(int i) const;
    /// Delay-domain alias period c / (B/L) in meters.
    double alias_window_m() const;
};

/// Per-subcarrier MIMO channel: H[i] has shape K_rx x K_tx.
struct ChannelMatrix {
    std::vector<Eigen::MatrixXcd> per_subcarrier;
    double sfo_offset_m = 0.0;
};

/// Per-subcarrier transmit weight vectors, unit norm per subcarrier.
/// Column i of `weights` is w(f_i), length K_tx.
struct Precoder {
    Eigen::MatrixXcd weights;
};

/// Deterministic random stream: uniform and Gaussian draws with a stable,
/// implementation-independent mapping so identical seeds give identical
/// simulations on any platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Derive an independent child stream; (seed, index) pairs map to
    /// distinct, reproducible streams.
    static Rng child(std::uint64_t seed, std::uint64_t index);

    double uniform();                        ///< [0, 1)
    double uniform(double lo, double hi);    ///< [lo, hi)
    double normal();                         ///< standard normal (Box-Muller)

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// ULA steering vector: element k = exp(-j*2*pi*f*k*s*sin(theta)/c).
/// Throws std::invalid_argument when |theta| > pi/2.
Eigen::VectorXcd steering_vector(const ArrayConfig& array, double theta_rad, double freq_hz);

/// H(f_i) = sum_p g_p * exp(-j*2*pi*f_i*(d_p + delta_d)/c)
///          * a_rx(aoa_p, f_i) * a_tx(aod_p, f_i)^H.
/// delta_d models the per-packet sampling-frequency-offset as one common
/// extra distance on every path. Throws std::invalid_argument on an empty
/// path list.
ChannelMatrix synthesize_csi(const std::vector<PathComponent>& paths,
                             const ArrayConfig& tx,
                             const ArrayConfig& rx,
                             const OfdmConfig& ofdm,
                             double delta_d_m);

/// Effective uplink CSI the attacker estimates: column i = H(f_i) * w(f_i).
/// Result shape K_rx x L. Throws std::invalid_argument on shape mismatch.
Eigen::MatrixXcd apply_precoder(const ChannelMatrix& H, const Precoder& w);

/// Add circularly-symmetric complex Gaussian noise per entry such that
/// mean signal power / noise power = 10^(snr_db/10). snr_db = +infinity
/// returns the input unchanged.
Eigen::MatrixXcd add_noise(const Eigen::MatrixXcd& h_eff, double snr_db, Rng& rng);

/// 10*log10(mean over subcarriers of ||h_eff(f_i)||^2) + offset.
/// Returns -infinity for an all-zero channel. Throws std::invalid_argument
/// on an empty matrix.
double rssi_db(const Eigen::MatrixXcd& h_eff, double calibration_offset_db = 0.0);

}  // namespace aoasim
