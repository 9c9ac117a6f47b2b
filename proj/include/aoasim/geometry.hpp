// SPDX-License-Identifier: Apache-2.0
//
// Planar environment model: room, access points, reflector segments, and
// image-source enumeration of specular propagation paths between a user
// position and an access-point array.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace aoasim {

/// 2D point / vector in meters.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

Vec2 operator+(Vec2 a, Vec2 b);
Vec2 operator-(Vec2 a, Vec2 b);
Vec2 operator*(double s, Vec2 a);
double dot(Vec2 a, Vec2 b);
double norm(Vec2 a);

/// Wrap an angle to (-pi, pi].
double wrap_pi(double angle_rad);

/// Unit vector of an array's broadside direction; orientation 0 points +y.
Vec2 broadside_dir(double orientation_rad);

/// A mirror segment with field reflection coefficient gamma in [0, 1].
struct Reflector {
    Vec2 a;
    Vec2 b;
    double gamma = 1.0;
};

/// An access point: array phase-center position and array orientation.
struct ApPose {
    Vec2 position;
    double orientation_rad = 0.0;
};

/// Rectangular room with reflectors and APs. Width spans x in [0, width],
/// height spans y in [0, height].
struct Environment {
    double width = 0.0;
    double height = 0.0;
    std::vector<Reflector> reflectors;
    std::vector<ApPose> ap_poses;
    std::uint64_t rng_seed = 1;

    /// Throws std::invalid_argument when any structural invariant fails
    /// (non-positive dimensions, reflector endpoints or APs outside the
    /// room, gamma outside [0, 1]).
    void validate() const;
};

/// One propagation path between the user array and an AP array.
struct PathComponent {
    double length_m = 0.0;   ///< total propagation length d_p
    double aod_rad = 0.0;    ///< departure angle at the user array (broadside = 0)
    double aoa_rad = 0.0;    ///< arrival angle at the AP array (broadside = 0)
    double gain = 0.0;       ///< amplitude gain: (1/d_p) * product of gammas
    int order = 0;           ///< bounce count; 0 = direct
};

/// Angle of the ap->point direction in the AP array's local frame
/// (broadside = 0, clockwise-positive toward local +x).
/// Throws std::invalid_argument when point coincides with the AP position.
double bearing_to(const ApPose& ap, Vec2 point);

/// Mirror a point across the infinite line through segment (a, b).
Vec2 mirror_point(Vec2 p, Vec2 a, Vec2 b);

/// Enumerate the direct path plus all specular reflection paths up to
/// max_order bounces whose reflection points lie on their segments and
/// whose departure/arrival angles fall within +/-90 degrees of the
/// respective array broadside. Result is sorted by ascending length.
///
/// user_orientation_rad fixes the user array's broadside so departure
/// angles are well defined.
///
/// Throws std::invalid_argument for an invalid ap_index, max_order < 0,
/// a user position outside the room, or a user coinciding with the AP.
std::vector<PathComponent> enumerate_paths(const Environment& env,
                                           Vec2 user_pos,
                                           double user_orientation_rad,
                                           std::size_t ap_index,
                                           int max_order);

}  // namespace aoasim
