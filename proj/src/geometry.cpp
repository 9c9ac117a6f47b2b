// SPDX-License-Identifier: Apache-2.0
//
// Image-source path enumeration over a 2D environment.

#include "aoasim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace aoasim {

namespace {

constexpr double kHalfPlaneTol = 1e-12;  // tolerance for the +/-90 deg cut
constexpr double kGeomTol = 1e-9;        // segment-intersection parameter tolerance

/// Intersection of the infinite line through (p, q) restricted to the segment
/// p..q with the reflector segment a..b. The reflector parameter must lie in
/// [0, 1]; the path parameter strictly inside (0, 1) so the bounce happens
/// between the endpoints of the traversed leg.
std::optional<Vec2> segment_hit(Vec2 a, Vec2 b, Vec2 p, Vec2 q) {
    const Vec2 r = b - a;
    const Vec2 s = q - p;
    const double den = r.x * s.y - r.y * s.x;
    if (std::abs(den) < 1e-15) return std::nullopt;  // parallel
    const Vec2 ap = p - a;
    const double t = (ap.x * s.y - ap.y * s.x) / den;  // along reflector
    const double u = (ap.x * r.y - ap.y * r.x) / den;  // along path leg
    if (t < -kGeomTol || t > 1.0 + kGeomTol) return std::nullopt;
    if (u < kGeomTol || u > 1.0 - kGeomTol) return std::nullopt;
    return a + t * r;
}

bool inside_room(const Environment& env, Vec2 p) {
    return p.x >= 0.0 && p.x <= env.width && p.y >= 0.0 && p.y <= env.height;
}

}  // namespace

Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double norm(Vec2 a) { return std::hypot(a.x, a.y); }

double wrap_pi(double angle_rad) {
    double a = std::fmod(angle_rad - M_PI, 2.0 * M_PI);
    if (a > 0.0) a -= 2.0 * M_PI;
    return a + M_PI;
}

Vec2 broadside_dir(double orientation_rad) {
    return {std::sin(orientation_rad), std::cos(orientation_rad)};
}

void Environment::validate() const {
    if (!(width > 0.0) || !(height > 0.0))
        throw std::invalid_argument("environment: width and height must be positive");
    for (const auto& r : reflectors) {
        if (!inside_room(*this, r.a) || !inside_room(*this, r.b))
            throw std::invalid_argument("environment: reflector endpoint outside the room");
        if (r.gamma < 0.0 || r.gamma > 1.0)
            throw std::invalid_argument("environment: reflection coefficient must lie in [0, 1]");
        if (norm(r.b - r.a) <= 0.0)
            throw std::invalid_argument("environment: zero-length reflector segment");
    }
    for (const auto& ap : ap_poses) {
        if (!inside_room(*this, ap.position))
            throw std::invalid_argument("environment: AP position outside the room");
    }
}

double bearing_to(const ApPose& ap, Vec2 point) {
    const Vec2 d = point - ap.position;
    if (norm(d) == 0.0)
        throw std::invalid_argument("bearing_to: point coincides with the AP position");
    return wrap_pi(std::atan2(d.x, d.y) - ap.orientation_rad);
}

Vec2 mirror_point(Vec2 p, Vec2 a, Vec2 b) {
    Vec2 d = b - a;
    const double len = norm(d);
    d = (1.0 / len) * d;
    const Vec2 ap = p - a;
    const Vec2 foot = a + dot(ap, d) * d;
    return 2.0 * foot - p;
}

std::vector<PathComponent> enumerate_paths(const Environment& env,
                                           Vec2 user_pos,
                                           double user_orientation_rad,
                                           std::size_t ap_index,
                                           int max_order) {
    if (ap_index >= env.ap_poses.size())
        throw std::invalid_argument("enumerate_paths: ap_index out of range");
    if (max_order < 0)
        throw std::invalid_argument("enumerate_paths: max_order must be >= 0");
    if (!inside_room(env, user_pos))
        throw std::invalid_argument("enumerate_paths: user position outside the room");
    const ApPose& ap = env.ap_poses[ap_index];
    if (norm(ap.position - user_pos) == 0.0)
        throw std::invalid_argument("enumerate_paths: user coincides with the AP (degenerate geometry)");

    const ApPose user_pose{user_pos, user_orientation_rad};
    std::vector<PathComponent> out;

    // Direct path.
    {
        const double d = norm(ap.position - user_pos);
        const double aod = bearing_to(user_pose, ap.position);
        const double aoa = bearing_to(ap, user_pos);
        if (std::abs(aod) <= M_PI / 2.0 + kHalfPlaneTol &&
            std::abs(aoa) <= M_PI / 2.0 + kHalfPlaneTol) {
            out.push_back({d, aod, aoa, 1.0 / d, 0});
        }
    }

    // Reflected paths: walk reflector sequences (no immediate repeats),
    // mirroring the user successively; validity is established by
    // back-tracing the bounce points from the AP toward the user.
    struct Node {
        std::vector<std::size_t> seq;
        Vec2 image;
    };
    std::vector<Node> frontier{{{}, user_pos}};
    for (int order = 1; order <= max_order; ++order) {
        std::vector<Node> next;
        for (const auto& node : frontier) {
            for (std::size_t ri = 0; ri < env.reflectors.size(); ++ri) {
                if (!node.seq.empty() && node.seq.back() == ri) continue;
                const auto& R = env.reflectors[ri];
                Node child;
                child.seq = node.seq;
                child.seq.push_back(ri);
                child.image = mirror_point(node.image, R.a, R.b);
                next.push_back(child);

                // Back-trace: from the AP toward the deepest image, peeling
                // one bounce per reflector in reverse sequence order.
                std::vector<Vec2> images(child.seq.size() + 1);
                images[0] = user_pos;
                for (std::size_t k = 0; k < child.seq.size(); ++k) {
                    const auto& Rk = env.reflectors[child.seq[k]];
                    images[k + 1] = mirror_point(images[k], Rk.a, Rk.b);
                }
                Vec2 target = ap.position;
                std::vector<Vec2> bounces(child.seq.size());
                bool valid = true;
                for (std::size_t k = child.seq.size(); k-- > 0;) {
                    const auto& Rk = env.reflectors[child.seq[k]];
                    const auto hit = segment_hit(Rk.a, Rk.b, target, images[k + 1]);
                    if (!hit) {
                        valid = false;
                        break;
                    }
                    bounces[k] = *hit;
                    target = *hit;
                }
                if (!valid) continue;

                const double d = norm(images.back() - ap.position);
                const double aod = bearing_to(user_pose, bounces.front());
                const double aoa = bearing_to(ap, bounces.back());
                if (std::abs(aod) > M_PI / 2.0 + kHalfPlaneTol ||
                    std::abs(aoa) > M_PI / 2.0 + kHalfPlaneTol)
                    continue;
                double gain = 1.0 / d;
                for (std::size_t k : child.seq) gain *= env.reflectors[k].gamma;
                if (gain <= 0.0) continue;
                out.push_back({d, aod, aoa, gain, order});
            }
        }
        frontier = std::move(next);
    }

    std::sort(out.begin(), out.end(), [](const PathComponent& a, const PathComponent& b) {
        return a.length_m < b.length_m;
    });
    return out;
}

}  // namespace aoasim
