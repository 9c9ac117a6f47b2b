// SPDX-License-Identifier: Apache-2.0
//
// Smoothing, subspace spectrum estimation, peak handling, and localization.

#include "aoasim/attacker.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aoasim {

ProfileGrid ProfileGrid::uniform(double angle_min_rad, double angle_max_rad, double angle_step_rad,
                                 double dist_min_m, double dist_max_m, double dist_step_m) {
    if (!(angle_step_rad > 0.0) || !(dist_step_m > 0.0))
        throw std::invalid_argument("grid: step sizes must be positive");
    ProfileGrid g;
    const int na = static_cast<int>(std::llround((angle_max_rad - angle_min_rad) / angle_step_rad)) + 1;
    const int nd = static_cast<int>(std::llround((dist_max_m - dist_min_m) / dist_step_m)) + 1;
    g.angles_rad.reserve(static_cast<std::size_t>(na));
    g.distances_m.reserve(static_cast<std::size_t>(nd));
    for (int i = 0; i < na; ++i) g.angles_rad.push_back(angle_min_rad + i * angle_step_rad);
    for (int j = 0; j < nd; ++j) g.distances_m.push_back(dist_min_m + j * dist_step_m);
    return g;
}

void ProfileGrid::validate(const OfdmConfig& ofdm) const {
    auto strictly_increasing = [](const std::vector<double>& v) {
        for (std::size_t i = 1; i < v.size(); ++i)
            if (!(v[i] > v[i - 1])) return false;
        return true;
    };
    if (angles_rad.empty() || distances_m.empty())
        throw std::invalid_argument("grid: empty axis");
    if (!strictly_increasing(angles_rad) || !strictly_increasing(distances_m))
        throw std::invalid_argument("grid: axes must be strictly increasing");
    if (distances_m.back() - distances_m.front() > ofdm.alias_window_m())
        throw std::invalid_argument("grid: distance span exceeds the delay alias window");
}

Eigen::MatrixXcd smooth_csi(const Eigen::MatrixXcd& h_eff,
                            int sub_antennas,
                            int sub_subcarriers) {
    const int krx = static_cast<int>(h_eff.rows());
    const int L = static_cast<int>(h_eff.cols());
    if (sub_antennas < 1 || sub_antennas > krx)
        throw std::invalid_argument("smooth_csi: sub_antennas out of range");
    if (sub_subcarriers < 1 || sub_subcarriers > L)
        throw std::invalid_argument("smooth_csi: sub_subcarriers out of range");
    const int na = krx - sub_antennas + 1;
    const int nf = L - sub_subcarriers + 1;
    if (na * nf < 2)
        throw std::invalid_argument("smooth_csi: fewer than 2 snapshots; reduce sub-block size");
    Eigen::MatrixXcd X(sub_antennas * sub_subcarriers, na * nf);
    for (int a0 = 0; a0 < na; ++a0)
        for (int i0 = 0; i0 < nf; ++i0) {
            const int col = a0 * nf + i0;
            for (int k = 0; k < sub_antennas; ++k)
                for (int i = 0; i < sub_subcarriers; ++i)
                    X(k * sub_subcarriers + i, col) = h_eff(a0 + k, i0 + i);
        }
    return X;
}

namespace {

/// Descending eigenvalues and vectors of the snapshot sample covariance.
void covariance_eig(const Eigen::MatrixXcd& X,
                    Eigen::VectorXd& evals,
                    Eigen::MatrixXcd& evecs) {
    const Eigen::MatrixXcd R =
        (X * X.adjoint()) / static_cast<double>(X.cols());
    if (!R.allFinite())
        throw std::runtime_error("music_profile: covariance is not finite");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(R);
    const Eigen::Index n = R.rows();
    evals.resize(n);
    evecs.resize(n, n);
    // SelfAdjointEigenSolver returns ascending order; flip to descending.
    for (Eigen::Index i = 0; i < n; ++i) {
        evals(i) = es.eigenvalues()(n - 1 - i);
        evecs.col(i) = es.eigenvectors().col(n - 1 - i);
    }
}

}  // namespace

int estimate_num_paths(const Eigen::MatrixXcd& snapshots, double eigen_ratio) {
    Eigen::VectorXd evals;
    Eigen::MatrixXcd evecs;
    covariance_eig(snapshots, evals, evecs);
    const double cut = eigen_ratio * evals(0);
    int n = 0;
    for (Eigen::Index i = 0; i < evals.size(); ++i)
        if (evals(i) >= cut) ++n;
    return std::clamp(n, 1, static_cast<int>(snapshots.rows()) - 1);
}

AngleDistanceProfile music_profile(const Eigen::MatrixXcd& snapshots,
                                   const ProfileGrid& grid,
                                   int num_paths,
                                   const OfdmConfig& ofdm,
                                   const ArrayConfig& rx_array,
                                   int sub_antennas,
                                   int sub_subcarriers,
                                   double peak_threshold_db) {
    const int rows = static_cast<int>(snapshots.rows());
    if (num_paths < 1 || num_paths >= rows)
        throw std::invalid_argument("music_profile: num_paths must be in [1, rows-1]");
    if (rows != sub_antennas * sub_subcarriers)
        throw std::invalid_argument("music_profile: snapshot rows do not match the sub-block size");
    grid.validate(ofdm);

    Eigen::VectorXd evals;
    Eigen::MatrixXcd evecs;
    covariance_eig(snapshots, evals, evecs);

    const auto ntheta = static_cast<Eigen::Index>(grid.angles_rad.size());
    const auto ndist = static_cast<Eigen::Index>(grid.distances_m.size());

    // Joint steering vector v(theta, d) = spatial(theta) (x) delay(d): the
    // spatial factor is evaluated at the center frequency (narrowband), the
    // delay factor at the sub-block tone frequencies f0 + i*df. Since v is
    // a Kronecker product of the two factors,
    //   ||E_s^H v||^2 = sum_q |S(:,theta)^H reshape(e_q) conj(D(:,d))|^2
    // which evaluates over the whole grid with two small matrix products
    // per signal eigenvector.
    Eigen::MatrixXcd S(sub_antennas, ntheta);
    const double fc = ofdm.center_frequency_hz;
    for (Eigen::Index t = 0; t < ntheta; ++t) {
        const double phase =
            -2.0 * M_PI * fc * rx_array.spacing_m * std::sin(grid.angles_rad[static_cast<std::size_t>(t)]) /
            kSpeedOfLight;
        for (int k = 0; k < sub_antennas; ++k)
            S(k, t) = std::polar(1.0, phase * static_cast<double>(k));
    }
    Eigen::MatrixXcd D(sub_subcarriers, ndist);
    const double f0 = ofdm.subcarrier_frequency_hz(0);
    const double df = ofdm.subcarrier_spacing_hz();
    for (Eigen::Index d = 0; d < ndist; ++d) {
        const double dist = grid.distances_m[static_cast<std::size_t>(d)];
        for (int i = 0; i < sub_subcarriers; ++i)
            D(i, d) = std::polar(1.0, -2.0 * M_PI * (f0 + i * df) * dist / kSpeedOfLight);
    }

    Eigen::MatrixXd signal_energy = Eigen::MatrixXd::Zero(ntheta, ndist);
    for (int q = 0; q < num_paths; ++q) {
        Eigen::MatrixXcd E(sub_antennas, sub_subcarriers);
        for (int k = 0; k < sub_antennas; ++k)
            for (int i = 0; i < sub_subcarriers; ++i)
                E(k, i) = evecs(k * sub_subcarriers + i, q);
        const Eigen::MatrixXcd G = S.adjoint() * E * D.conjugate();
        signal_energy += G.cwiseAbs2();
    }

    // ||v||^2 = rows exactly (unit-modulus entries), so the noise-subspace
    // energy is rows - signal energy; clamp to keep the spectrum finite.
    AngleDistanceProfile prof;
    prof.spectrum = (static_cast<double>(rows) - signal_energy.array())
                        .max(1e-12)
                        .inverse()
                        .matrix();

    const double smax = prof.spectrum.maxCoeff();
    for (Eigen::Index t = 0; t < ntheta; ++t) {
        for (Eigen::Index d = 0; d < ndist; ++d) {
            const double v = prof.spectrum(t, d);
            bool is_peak = true;
            for (int dt = -1; dt <= 1 && is_peak; ++dt)
                for (int dd = -1; dd <= 1; ++dd) {
                    if (dt == 0 && dd == 0) continue;
                    const Eigen::Index tt = t + dt;
                    const Eigen::Index dn = d + dd;
                    if (tt < 0 || tt >= ntheta || dn < 0 || dn >= ndist) continue;
                    if (prof.spectrum(tt, dn) >= v) {
                        is_peak = false;
                        break;
                    }
                }
            if (!is_peak) continue;
            const double rel_db = 10.0 * std::log10(v / smax);
            if (rel_db < peak_threshold_db) continue;
            prof.peaks.push_back({grid.angles_rad[static_cast<std::size_t>(t)],
                                  grid.distances_m[static_cast<std::size_t>(d)], rel_db});
        }
    }
    std::sort(prof.peaks.begin(), prof.peaks.end(), [](const ProfilePeak& a, const ProfilePeak& b) {
        if (a.distance_m != b.distance_m) return a.distance_m < b.distance_m;
        if (a.power_db != b.power_db) return a.power_db > b.power_db;
        return std::abs(a.angle_rad) < std::abs(b.angle_rad);
    });
    return prof;
}

ProfilePeak select_direct(const AngleDistanceProfile& profile) {
    if (profile.peaks.empty())
        throw std::runtime_error("select_direct: profile has no retained peaks");
    const ProfilePeak* best = &profile.peaks.front();
    for (const ProfilePeak& p : profile.peaks) {
        if (p.distance_m < best->distance_m ||
            (p.distance_m == best->distance_m &&
             (p.power_db > best->power_db ||
              (p.power_db == best->power_db &&
               std::abs(p.angle_rad) < std::abs(best->angle_rad)))))
            best = &p;
    }
    return *best;
}

LocalizationEstimate localize_single_ap(const ApPose& ap, double aoa_est_rad, double range_est_m) {
    if (!(range_est_m > 0.0))
        throw std::invalid_argument("localize_single_ap: range must be positive");
    LocalizationEstimate est;
    est.method = LocalizationEstimate::Method::single_ap;
    est.position = ap.position + range_est_m * broadside_dir(ap.orientation_rad + aoa_est_rad);
    est.aoa_rad = {aoa_est_rad};
    return est;
}

LocalizationEstimate triangulate(const std::vector<ApPose>& aps,
                                 const std::vector<double>& aoa_ests_rad) {
    if (aps.size() < 2 || aps.size() != aoa_ests_rad.size())
        throw std::invalid_argument("triangulate: need >= 2 APs with matching bearing count");
    Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
    Eigen::Vector2d b = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < aps.size(); ++i) {
        const Vec2 dir = broadside_dir(aps[i].orientation_rad + aoa_ests_rad[i]);
        const Eigen::Vector2d n(dir.y, -dir.x);  // normal of the bearing line
        const Eigen::Vector2d p(aps[i].position.x, aps[i].position.y);
        A += n * n.transpose();
        b += n * n.dot(p);
    }
    // All-parallel bearings make A rank 1; detect via the determinant
    // relative to the trace scale.
    const double scale = A.trace();
    if (std::abs(A.determinant()) < 1e-9 * scale * scale + 1e-300)
        throw std::runtime_error("triangulate: bearing lines are (near-)parallel; no unique intersection");
    const Eigen::Vector2d x = A.ldlt().solve(b);
    LocalizationEstimate est;
    est.method = LocalizationEstimate::Method::triangulation;
    est.position = {x(0), x(1)};
    est.aoa_rad = aoa_ests_rad;
    return est;
}

}  // namespace aoasim
