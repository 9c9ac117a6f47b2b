// SPDX-License-Identifier: Apache-2.0
//
// Unit tests for the snooping-AP estimator chain: smoothing, model-order
// estimation, the angle-distance pseudo-spectrum, peak selection, and
// localization. Synthetic channels are built with a first-column selection
// precoder so per-path amplitudes are constant across tones and the
// smoothed data matches the estimator's signal model exactly.

#include <doctest.h>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "aoasim/attacker.hpp"
#include "aoasim/phy.hpp"

using namespace aoasim;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg = kPi / 180.0;

ProfileGrid default_grid() {
    return ProfileGrid::uniform(-90.0 * kDeg, 90.0 * kDeg, 1.0 * kDeg, 0.0, 60.0, 0.25);
}

/// Effective CSI for the given paths through a "select antenna 0" transmit
/// weight (the leading steering element is always 1, so each path keeps a
/// tone-independent amplitude).
Eigen::MatrixXcd effective_csi(const std::vector<PathComponent>& paths,
                               double delta_d_m = 0.0) {
    ArrayConfig tx;
    ArrayConfig rx;
    OfdmConfig ofdm;
    const ChannelMatrix H = synthesize_csi(paths, tx, rx, ofdm, delta_d_m);
    Precoder w;
    w.weights = Eigen::MatrixXcd::Zero(4, 52);
    w.weights.row(0).setOnes();
    return apply_precoder(H, w);
}

const ProfilePeak& strongest(const AngleDistanceProfile& profile) {
    REQUIRE(!profile.peaks.empty());
    std::size_t best = 0;
    for (std::size_t i = 1; i < profile.peaks.size(); ++i)
        if (profile.peaks[i].power_db > profile.peaks[best].power_db) best = i;
    return profile.peaks[best];
}

bool has_peak_near(const AngleDistanceProfile& profile, double angle_rad,
                   double distance_m, double angle_tol_rad, double dist_tol_m) {
    for (const auto& p : profile.peaks)
        if (std::abs(p.angle_rad - angle_rad) <= angle_tol_rad &&
            std::abs(p.distance_m - distance_m) <= dist_tol_m)
            return true;
    return false;
}

}  // namespace

TEST_CASE("profile grid construction and validation") {
    const OfdmConfig ofdm;
    const ProfileGrid grid = default_grid();
    CHECK(grid.angles_rad.size() == 181);
    CHECK(grid.distances_m.size() == 241);
    CHECK(grid.angles_rad.front() == doctest::Approx(-90.0 * kDeg));
    CHECK(grid.angles_rad.back() == doctest::Approx(90.0 * kDeg));
    CHECK(grid.distances_m.back() == doctest::Approx(60.0));
    CHECK_NOTHROW(grid.validate(ofdm));

    ProfileGrid bad = grid;
    std::swap(bad.angles_rad[0], bad.angles_rad[1]);
    CHECK_THROWS_AS(bad.validate(ofdm), std::invalid_argument);

    bad = grid;
    bad.distances_m.clear();
    CHECK_THROWS_AS(bad.validate(ofdm), std::invalid_argument);

    // Distance span beyond the delay alias period (779.46 m here).
    ProfileGrid wide =
        ProfileGrid::uniform(-90.0 * kDeg, 90.0 * kDeg, 1.0 * kDeg, 0.0, 800.0, 10.0);
    CHECK_THROWS_AS(wide.validate(ofdm), std::invalid_argument);
}

TEST_CASE("joint smoothing block layout") {
    Eigen::MatrixXcd h(4, 52);
    for (int k = 0; k < 4; ++k)
        for (int i = 0; i < 52; ++i)
            h(k, i) = std::complex<double>(k, i);

    SUBCASE("default block sizes give 52 x 81 snapshots") {
        const Eigen::MatrixXcd s = smooth_csi(h, 2, 26);
        REQUIRE(s.rows() == 52);
        REQUIRE(s.cols() == 81);
        // Column index = antenna_shift * 27 + subcarrier_shift; row index =
        // antenna_offset * 26 + subcarrier_offset.
        CHECK(s(0, 0) == h(0, 0));
        CHECK(s(1 * 26 + 5, 1 * 27 + 3) == h(2, 8));
        CHECK(s(25, 80) == h(2, 51));
        CHECK(s(51, 80) == h(3, 51));
    }

    SUBCASE("antenna-only smoothing") {
        const Eigen::MatrixXcd s = smooth_csi(h, 2, 52);
        REQUIRE(s.rows() == 104);
        REQUIRE(s.cols() == 3);
        CHECK(s(0, 2) == h(2, 0));
    }

    SUBCASE("degenerate and invalid block sizes are rejected") {
        CHECK_THROWS_AS(smooth_csi(h, 4, 52), std::invalid_argument);  // 1 snapshot
        CHECK_THROWS_AS(smooth_csi(h, 0, 26), std::invalid_argument);
        CHECK_THROWS_AS(smooth_csi(h, 5, 26), std::invalid_argument);
        CHECK_THROWS_AS(smooth_csi(h, 2, 53), std::invalid_argument);
    }
}

TEST_CASE("smoothed single-path data is effectively rank one") {
    const std::vector<PathComponent> paths{{12.0, 0.0, 20.0 * kDeg, 1.0, 0}};
    const Eigen::MatrixXcd s = smooth_csi(effective_csi(paths), 2, 26);
    const Eigen::MatrixXcd cov = (s * s.adjoint()) / static_cast<double>(s.cols());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov);
    const auto& ev = eig.eigenvalues();  // ascending
    CHECK(ev(ev.size() - 1) / std::max(ev(ev.size() - 2), 1e-300) > 1e6);
}

TEST_CASE("model order estimation by eigenvalue ratio") {
    // Snapshots with two orthogonal directions at amplitudes 1 and 0.05:
    // eigenvalue ratio 0.0025.
    Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(4, 8);
    for (int j = 0; j < 4; ++j) {
        x(0, 2 * j) = (j % 2 == 0) ? 1.0 : -1.0;
        x(1, 2 * j + 1) = ((j % 2 == 0) ? 1.0 : -1.0) * 0.05;
    }
    CHECK(estimate_num_paths(x, 0.01) == 1);
    CHECK(estimate_num_paths(x, 0.002) == 2);

    // Clamped to rows-1 even when everything passes the threshold.
    const Eigen::MatrixXcd full = Eigen::MatrixXcd::Random(4, 32);
    CHECK(estimate_num_paths(full, 1e-30) <= 3);
    CHECK(estimate_num_paths(full, 1e-30) >= 1);
}

TEST_CASE("pseudo-spectrum localizes a single path to one grid cell") {
    const double angle = 20.0 * kDeg;
    const std::vector<PathComponent> paths{{12.0, 0.0, angle, 1.0, 0}};
    const OfdmConfig ofdm;
    const ArrayConfig rx;
    const auto profile = music_profile(smooth_csi(effective_csi(paths), 2, 26),
                                       default_grid(), 1, ofdm, rx, 2, 26);
    REQUIRE(profile.spectrum.rows() == 181);
    REQUIRE(profile.spectrum.cols() == 241);
    const ProfilePeak& top = strongest(profile);
    CHECK(top.power_db == doctest::Approx(0.0));
    CHECK(std::abs(top.angle_rad - angle) <= 1.0 * kDeg + 1e-9);
    CHECK(std::abs(top.distance_m - 12.0) <= 0.25 + 1e-9);
}

TEST_CASE("pseudo-spectrum separates two paths") {
    const std::vector<PathComponent> paths{
        {10.0, 0.0, 0.0, 0.1, 0},
        {std::sqrt(200.0), 0.0, -30.0 * kDeg, 0.6 / std::sqrt(200.0), 1}};
    const OfdmConfig ofdm;
    const ArrayConfig rx;
    const auto profile = music_profile(smooth_csi(effective_csi(paths), 2, 26),
                                       default_grid(), 2, ofdm, rx, 2, 26, -30.0);
    CHECK(has_peak_near(profile, 0.0, 10.0, 1.0 * kDeg + 1e-9, 0.25 + 1e-9));
    CHECK(has_peak_near(profile, -30.0 * kDeg, std::sqrt(200.0), 1.0 * kDeg + 1e-9,
                        0.25 + 1e-9));
}

TEST_CASE("pseudo-spectrum is invariant to complex scaling of the data") {
    const std::vector<PathComponent> paths{{15.0, 0.0, -10.0 * kDeg, 0.2, 0}};
    const Eigen::MatrixXcd snaps = smooth_csi(effective_csi(paths), 2, 26);
    const OfdmConfig ofdm;
    const ArrayConfig rx;
    const auto a = music_profile(snaps, default_grid(), 1, ofdm, rx, 2, 26);
    const Eigen::MatrixXcd scaled = std::polar(2.7, 0.3) * snaps;
    const auto b = music_profile(scaled, default_grid(), 1, ofdm, rx, 2, 26);
    REQUIRE(a.peaks.size() == b.peaks.size());
    for (std::size_t i = 0; i < a.peaks.size(); ++i) {
        CHECK(a.peaks[i].angle_rad == b.peaks[i].angle_rad);
        CHECK(a.peaks[i].distance_m == b.peaks[i].distance_m);
    }
}

TEST_CASE("sampling offset shifts distances but not angles") {
    const double angle = 20.0 * kDeg;
    const double delta_d = 7.0;
    const std::vector<PathComponent> paths{{12.0, 0.0, angle, 1.0, 0}};
    const OfdmConfig ofdm;
    const ArrayConfig rx;
    const auto profile =
        music_profile(smooth_csi(effective_csi(paths, delta_d), 2, 26),
                      default_grid(), 1, ofdm, rx, 2, 26);
    const ProfilePeak& top = strongest(profile);
    CHECK(std::abs(top.angle_rad - angle) <= 1.0 * kDeg + 1e-9);
    CHECK(std::abs(top.distance_m - 19.0) <= 0.25 + 1e-9);
}

TEST_CASE("direct-path selection takes the earliest retained peak") {
    AngleDistanceProfile profile;
    profile.peaks = {{0.1, 5.0, -3.0}, {-0.2, 3.0, -5.0}, {0.3, 9.0, 0.0}};
    const ProfilePeak sel = select_direct(profile);
    CHECK(sel.distance_m == doctest::Approx(3.0));
    CHECK(sel.angle_rad == doctest::Approx(-0.2));

    AngleDistanceProfile empty;
    CHECK_THROWS_AS(select_direct(empty), std::runtime_error);
}

TEST_CASE("single-AP localization geometry") {
    const ApPose origin{{0.0, 0.0}, 0.0};
    const auto est = localize_single_ap(origin, 0.0, 10.0);
    CHECK(est.position.x == doctest::Approx(0.0));
    CHECK(est.position.y == doctest::Approx(10.0));
    CHECK(est.method == LocalizationEstimate::Method::single_ap);
    REQUIRE(est.aoa_rad.size() == 1);
    CHECK(est.aoa_rad[0] == doctest::Approx(0.0));

    const ApPose turned{{0.0, 0.0}, kPi / 2.0};
    const auto est2 = localize_single_ap(turned, -kPi / 4.0, 10.0);
    CHECK(est2.position.x == doctest::Approx(10.0 / std::sqrt(2.0)));
    CHECK(est2.position.y == doctest::Approx(10.0 / std::sqrt(2.0)));

    // A 30 degree bearing error at 10 m range displaces the estimate by the
    // chord 2 * 10 * sin(15 deg) = 5.176380902 m.
    const auto est3 = localize_single_ap(origin, 30.0 * kDeg, 10.0);
    const Vec2 truth{0.0, 10.0};
    CHECK(norm(est3.position - truth) == doctest::Approx(5.176380902050415));

    CHECK_THROWS_AS(localize_single_ap(origin, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(localize_single_ap(origin, 0.0, -3.0), std::invalid_argument);
}

TEST_CASE("triangulation") {
    const Vec2 user{3.0, 7.0};
    const std::vector<ApPose> aps{{{0.0, 0.0}, 0.0},
                                  {{10.0, 0.0}, 0.0},
                                  {{0.0, 14.0}, kPi}};
    std::vector<double> bearings;
    for (const auto& ap : aps) bearings.push_back(bearing_to(ap, user));

    SUBCASE("exact bearings from two APs recover the position") {
        const std::vector<ApPose> two{aps[0], aps[1]};
        const std::vector<double> b2{bearings[0], bearings[1]};
        const auto est = triangulate(two, b2);
        CHECK(est.method == LocalizationEstimate::Method::triangulation);
        CHECK(norm(est.position - user) < 1e-6);
        CHECK(est.aoa_rad.size() == 2);
    }

    SUBCASE("exact bearings from three APs recover the position") {
        const auto est = triangulate(aps, bearings);
        CHECK(norm(est.position - user) < 1e-6);
    }

    SUBCASE("one-degree bearing errors stay sub-meter at room scale") {
        const std::vector<ApPose> four{{{20.0, 0.0}, 0.0},
                                       {{20.0, 30.0}, kPi},
                                       {{0.0, 15.0}, kPi / 2.0},
                                       {{40.0, 15.0}, -kPi / 2.0}};
        const Vec2 center{20.0, 15.0};
        std::vector<double> perturbed;
        const double signs[4] = {1.0, -1.0, 1.0, -1.0};
        for (std::size_t i = 0; i < four.size(); ++i)
            perturbed.push_back(bearing_to(four[i], center) + signs[i] * 1.0 * kDeg);
        const auto est = triangulate(four, perturbed);
        CHECK(norm(est.position - center) < 1.0);
    }

    SUBCASE("degenerate inputs are rejected") {
        CHECK_THROWS_AS(triangulate({aps[0]}, {bearings[0]}), std::invalid_argument);
        CHECK_THROWS_AS(triangulate(aps, {bearings[0], bearings[1]}),
                        std::invalid_argument);
        // Parallel bearing lines (both straight up) have no intersection.
        const std::vector<ApPose> par{{{0.0, 0.0}, 0.0}, {{10.0, 0.0}, 0.0}};
        CHECK_THROWS_AS(triangulate(par, {0.0, 0.0}), std::runtime_error);
    }
}
