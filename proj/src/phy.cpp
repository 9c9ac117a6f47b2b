// SPDX-License-Identifier: Apache-2.0
//
// Physical-layer primitives: steering vectors, CSI synthesis, precoding,
// noise, and received power.

#include "aoasim/phy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace aoasim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

void ArrayConfig::validate() const {
    if (num_antennas < 2)
        throw std::invalid_argument("array: need at least 2 antennas");
    if (!(spacing_m > 0.0))
        throw std::invalid_argument("array: spacing must be positive");
}

void OfdmConfig::validate() const {
    if (num_subcarriers < 2)
        throw std::invalid_argument("ofdm: need at least 2 subcarriers");
    if (!(center_frequency_hz > 0.0) || !(bandwidth_hz > 0.0))
        throw std::invalid_argument("ofdm: frequencies must be positive");
}

double OfdmConfig::subcarrier_spacing_hz() const {
    return bandwidth_hz / static_cast<double>(num_subcarriers);
}

double OfdmConfig::subcarrier_frequency_hz(int i) const {
    const double mid = (num_subcarriers - 1) / 2.0;
    return center_frequency_hz + (static_cast<double>(i) - mid) * subcarrier_spacing_hz();
}

double OfdmConfig::alias_window_m() const {
    return kSpeedOfLight / subcarrier_spacing_hz();
}

Rng Rng::child(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index * 0xA24BAED4963EE407ull + 1)));
}

double Rng::uniform() {
    // Top 53 bits -> [0, 1); stable across standard library implementations.
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

Eigen::VectorXcd steering_vector(const ArrayConfig& array, double theta_rad, double freq_hz) {
    if (std::abs(theta_rad) > M_PI / 2.0 + 1e-12)
        throw std::invalid_argument("steering_vector: angle outside [-pi/2, pi/2]");
    const double k0 = -2.0 * M_PI * freq_hz * array.spacing_m * std::sin(theta_rad) / kSpeedOfLight;
    Eigen::VectorXcd v(array.num_antennas);
    for (int k = 0; k < array.num_antennas; ++k)
        v(k) = std::polar(1.0, k0 * static_cast<double>(k));
    return v;
}

ChannelMatrix synthesize_csi(const std::vector<PathComponent>& paths,
                             const ArrayConfig& tx,
                             const ArrayConfig& rx,
                             const OfdmConfig& ofdm,
                             double delta_d_m) {
    if (paths.empty())
        throw std::invalid_argument("synthesize_csi: empty path list");
    ChannelMatrix H;
    H.sfo_offset_m = delta_d_m;
    H.per_subcarrier.reserve(static_cast<std::size_t>(ofdm.num_subcarriers));
    for (int i = 0; i < ofdm.num_subcarriers; ++i) {
        const double f = ofdm.subcarrier_frequency_hz(i);
        Eigen::MatrixXcd Hi = Eigen::MatrixXcd::Zero(rx.num_antennas, tx.num_antennas);
        for (const auto& p : paths) {
            const std::complex<double> phase =
                std::polar(p.gain, -2.0 * M_PI * f * (p.length_m + delta_d_m) / kSpeedOfLight);
            Hi.noalias() += phase * (steering_vector(rx, p.aoa_rad, f) *
                                     steering_vector(tx, p.aod_rad, f).adjoint());
        }
        H.per_subcarrier.push_back(std::move(Hi));
    }
    return H;
}

Eigen::MatrixXcd apply_precoder(const ChannelMatrix& H, const Precoder& w) {
    const auto L = static_cast<Eigen::Index>(H.per_subcarrier.size());
    if (L == 0 || w.weights.cols() != L ||
        w.weights.rows() != H.per_subcarrier.front().cols())
        throw std::invalid_argument("apply_precoder: channel/precoder shape mismatch");
    Eigen::MatrixXcd h_eff(H.per_subcarrier.front().rows(), L);
    for (Eigen::Index i = 0; i < L; ++i)
        h_eff.col(i) = H.per_subcarrier[static_cast<std::size_t>(i)] * w.weights.col(i);
    return h_eff;
}

Eigen::MatrixXcd add_noise(const Eigen::MatrixXcd& h_eff, double snr_db, Rng& rng) {
    if (std::isinf(snr_db) && snr_db > 0.0) return h_eff;
    const double sig = h_eff.squaredNorm() / static_cast<double>(h_eff.size());
    const double noise_power = sig * std::pow(10.0, -snr_db / 10.0);
    const double sigma = std::sqrt(noise_power / 2.0);
    Eigen::MatrixXcd out = h_eff;
    // Column-major draw order keeps the stream layout-stable.
    for (Eigen::Index j = 0; j < out.cols(); ++j)
        for (Eigen::Index i = 0; i < out.rows(); ++i)
            out(i, j) += std::complex<double>(sigma * rng.normal(), sigma * rng.normal());
    return out;
}

double rssi_db(const Eigen::MatrixXcd& h_eff, double calibration_offset_db) {
    if (h_eff.size() == 0)
        throw std::invalid_argument("rssi_db: empty channel");
    const double mean_power = h_eff.squaredNorm() / static_cast<double>(h_eff.cols());
    if (mean_power == 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(mean_power) + calibration_offset_db;
}

}  // namespace aoasim
