// SPDX-License-Identifier: Apache-2.0

#include "aoasim/defender.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>

namespace aoasim {

namespace {

constexpr double kPi = 3.14159265358979323846;
// Clearance kept between the delayed path and the delay-domain alias
// period when capping d_obf, so the artificial peak cannot sit on the
// wrap-around boundary.
constexpr double kAliasClearanceM = 1.0;

std::complex<double> delay_phasor(double freq_hz, double distance_m) {
    return std::polar(1.0, -2.0 * kPi * freq_hz * distance_m / kSpeedOfLight);
}

Eigen::VectorXcd normalized_or_throw(const Eigen::VectorXcd& v, const char* what) {
    const double n = v.norm();
    if (n < 1e-12) {
        throw std::runtime_error(std::string("degenerate precoder: ") + what);
    }
    return v / n;
}

/// Component of x orthogonal to span(y): x - y * (y^H x)/(y^H y).
Eigen::VectorXcd reject_from(const Eigen::VectorXcd& x, const Eigen::VectorXcd& y) {
    return x - y * (y.dot(x) / y.squaredNorm());
}

/// One branch vector of the combined defense at a single tone: unit-free
/// (normalization happens after the branches are combined).
Eigen::VectorXcd mirage_branch(const Eigen::VectorXcd& aim,
                               const Eigen::VectorXcd& avoid,
                               CombineRule rule,
                               bool* used_fallback) {
    if (rule == CombineRule::projection) {
        return reject_from(aim, avoid);
    }
    const std::vector<Eigen::VectorXcd> basis = null_space_basis(avoid);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(aim.size());
    std::complex<double> weight_sum = 0.0;
    for (const Eigen::VectorXcd& nb : basis) {
        const std::complex<double> w = aim.dot(nb);  // aim^H nb
        out += w * nb;
        weight_sum += w;
    }
    if (std::abs(weight_sum) < 1e-9) {
        *used_fallback = true;
        return reject_from(aim, avoid);
    }
    return out / weight_sum;
}

}  // namespace

void PathKnowledge::validate() const {
    if (d_d_m <= 0.0) {
        throw std::invalid_argument("path knowledge: direct length must be positive");
    }
    if (has_reflected) {
        if (d_r_m <= d_d_m) {
            throw std::invalid_argument(
                "path knowledge: reflected path must be longer than the direct path");
        }
        if (theta_r_rad == theta_d_rad) {
            throw std::invalid_argument(
                "path knowledge: reflected and direct departure angles must differ");
        }
    }
}

const char* to_string(DefenseMode mode) {
    switch (mode) {
        case DefenseMode::none: return "none";
        case DefenseMode::nulling: return "nulling";
        case DefenseMode::beam_delay: return "beam_delay";
        case DefenseMode::mirage: return "mirage";
    }
    return "?";
}

DefenseMode defense_mode_from_string(const std::string& name) {
    if (name == "none") return DefenseMode::none;
    if (name == "nulling") return DefenseMode::nulling;
    if (name == "beam_delay") return DefenseMode::beam_delay;
    if (name == "mirage") return DefenseMode::mirage;
    throw std::invalid_argument("unknown defense mode: " + name);
}

double resolve_dobf(const ObfuscationPolicy& policy, const PathKnowledge& k, const OfdmConfig& ofdm) {
    if (policy.mode == DefenseMode::none || policy.mode == DefenseMode::nulling) {
        return 0.0;
    }
    if (!k.has_reflected) {
        return 0.0;  // defense falls back to the undelayed baseline anyway
    }
    const double excess = k.d_r_m - k.d_d_m;
    double d_obf = 0.0;
    if (policy.adaptive_dobf) {
        d_obf = excess + policy.adaptive_margin_m;
    } else {
        d_obf = policy.d_obf_m;
        if (d_obf < 0.0) {
            throw std::invalid_argument("d_obf must be non-negative");
        }
        // d_obf == 0 is the explicit no-delay reference; any other fixed
        // value must push the artificial path beyond the real reflection.
        if (d_obf != 0.0 && d_obf <= excess) {
            throw std::invalid_argument(
                "fixed d_obf must exceed d_r - d_d (got " + std::to_string(d_obf) +
                " m, need > " + std::to_string(excess) + " m)");
        }
    }
    const double limit = ofdm.alias_window_m() - kAliasClearanceM - k.d_d_m;
    if (d_obf > limit) {
        const double capped = std::max(0.0, limit);
        std::cerr << "warning: d_obf " << d_obf << " m capped to " << capped
                  << " m to stay inside the delay alias window\n";
        d_obf = capped;
    }
    return d_obf;
}

std::vector<Eigen::VectorXcd> null_space_basis(const Eigen::VectorXcd& v) {
    const Eigen::Index n = v.size();
    if (n < 1 || v.norm() == 0.0) {
        throw std::invalid_argument("null_space_basis: zero vector");
    }
    const Eigen::VectorXcd x = v / v.norm();
    // Householder reflector H = I - 2 u u^H / (u^H u) mapping x onto
    // alpha*e0; its remaining columns span the orthogonal complement.
    const std::complex<double> x0 = x(0);
    const std::complex<double> alpha =
        (std::abs(x0) == 0.0) ? std::complex<double>(-1.0, 0.0) : -x0 / std::abs(x0);
    Eigen::VectorXcd u = x;
    u(0) -= alpha;
    const double uu = u.squaredNorm();
    std::vector<Eigen::VectorXcd> basis;
    basis.reserve(static_cast<std::size_t>(n - 1));
    for (Eigen::Index j = 1; j < n; ++j) {
        Eigen::VectorXcd col = Eigen::VectorXcd::Zero(n);
        col(j) = 1.0;
        if (uu > 0.0) {
            col -= (2.0 * std::conj(u(j)) / uu) * u;
        }
        basis.push_back(std::move(col));
    }
    return basis;
}

Precoder nulling_precoder(const PathKnowledge& k, const ArrayConfig& tx, const OfdmConfig& ofdm) {
    k.validate();
    tx.validate();
    ofdm.validate();
    if (!k.has_reflected) {
        throw std::invalid_argument("nulling defense needs a known reflected path");
    }
    Precoder p;
    p.weights.resize(tx.num_antennas, ofdm.num_subcarriers);
    for (int i = 0; i < ofdm.num_subcarriers; ++i) {
        const double f = ofdm.subcarrier_frequency_hz(i);
        const Eigen::VectorXcd ad = steering_vector(tx, k.theta_d_rad, f);
        const Eigen::VectorXcd ar = steering_vector(tx, k.theta_r_rad, f);
        p.weights.col(i) =
            normalized_or_throw(reject_from(ar, ad), "reflected direction lies in the nulled span");
    }
    return p;
}

Precoder beamform_delay_precoder(const PathKnowledge& k,
                                 const ObfuscationPolicy& policy,
                                 const ArrayConfig& tx,
                                 const OfdmConfig& ofdm) {
    k.validate();
    tx.validate();
    ofdm.validate();
    if (!k.has_reflected) {
        throw std::invalid_argument("beam_delay defense needs a known reflected path");
    }
    const double d_obf = resolve_dobf(policy, k, ofdm);
    Precoder p;
    p.weights.resize(tx.num_antennas, ofdm.num_subcarriers);
    for (int i = 0; i < ofdm.num_subcarriers; ++i) {
        const double f = ofdm.subcarrier_frequency_hz(i);
        const Eigen::VectorXcd ad = steering_vector(tx, k.theta_d_rad, f);
        const Eigen::VectorXcd ar = steering_vector(tx, k.theta_r_rad, f);
        p.weights.col(i) =
            normalized_or_throw(delay_phasor(f, d_obf) * ad + ar, "two-beam sum vanished");
    }
    return p;
}

Precoder mirage_precoder(const PathKnowledge& k,
                         const ObfuscationPolicy& policy,
                         const ArrayConfig& tx,
                         const OfdmConfig& ofdm) {
    k.validate();
    tx.validate();
    ofdm.validate();
    if (!k.has_reflected) {
        throw std::invalid_argument("mirage defense needs a known reflected path");
    }
    if (tx.num_antennas < 3) {
        throw std::invalid_argument(
            "mirage defense needs at least 3 transmit antennas (two simultaneous nulls)");
    }
    const double d_obf = resolve_dobf(policy, k, ofdm);
    bool used_fallback = false;
    Precoder p;
    p.weights.resize(tx.num_antennas, ofdm.num_subcarriers);
    for (int i = 0; i < ofdm.num_subcarriers; ++i) {
        const double f = ofdm.subcarrier_frequency_hz(i);
        const Eigen::VectorXcd ad = steering_vector(tx, k.theta_d_rad, f);
        const Eigen::VectorXcd ar = steering_vector(tx, k.theta_r_rad, f);
        const Eigen::VectorXcd bdnr = mirage_branch(ad, ar, policy.combine_rule, &used_fallback);
        const Eigen::VectorXcd brnd = mirage_branch(ar, ad, policy.combine_rule, &used_fallback);
        p.weights.col(i) =
            normalized_or_throw(delay_phasor(f, d_obf) * bdnr + brnd, "branch sum vanished");
    }
    if (used_fallback) {
        std::cerr << "warning: weighted combine denominator vanished; "
                     "fell back to the projection rule\n";
    }
    return p;
}

Precoder baseline_precoder(const PathKnowledge& k, const ArrayConfig& tx, const OfdmConfig& ofdm) {
    k.validate();
    tx.validate();
    ofdm.validate();
    Precoder p;
    p.weights.resize(tx.num_antennas, ofdm.num_subcarriers);
    for (int i = 0; i < ofdm.num_subcarriers; ++i) {
        const double f = ofdm.subcarrier_frequency_hz(i);
        Eigen::VectorXcd v = steering_vector(tx, k.theta_d_rad, f);
        if (k.has_reflected) {
            v += steering_vector(tx, k.theta_r_rad, f);
        }
        p.weights.col(i) = normalized_or_throw(v, "two-beam sum vanished");
    }
    return p;
}

Precoder obfuscation_precoder(const PathKnowledge& k,
                              const ObfuscationPolicy& policy,
                              const ArrayConfig& tx,
                              const OfdmConfig& ofdm) {
    if (policy.mode != DefenseMode::none && !k.has_reflected) {
        std::cerr << "warning: no reflected path known; " << to_string(policy.mode)
                  << " defense falls back to the undefended baseline\n";
        return baseline_precoder(k, tx, ofdm);
    }
    switch (policy.mode) {
        case DefenseMode::none:
            return baseline_precoder(k, tx, ofdm);
        case DefenseMode::nulling:
            return nulling_precoder(k, tx, ofdm);
        case DefenseMode::beam_delay:
            return beamform_delay_precoder(k, policy, tx, ofdm);
        case DefenseMode::mirage:
            return mirage_precoder(k, policy, tx, ofdm);
    }
    throw std::logic_error("unreachable defense mode");
}

PathKnowledge make_path_knowledge(const std::vector<PathComponent>& paths,
                                  Rng& rng,
                                  double angle_error_std_rad) {
    if (paths.empty()) {
        throw std::invalid_argument("make_path_knowledge: empty path list");
    }
    const PathComponent* direct = nullptr;
    const PathComponent* reflected = nullptr;
    for (const PathComponent& p : paths) {
        if (p.order == 0) {
            direct = &p;
        } else if (reflected == nullptr || std::abs(p.gain) > std::abs(reflected->gain)) {
            reflected = &p;
        }
    }
    if (direct == nullptr) {
        throw std::invalid_argument("make_path_knowledge: no direct (order-0) path");
    }
    auto perturb = [&](double angle) {
        if (angle_error_std_rad > 0.0) {
            angle += angle_error_std_rad * rng.normal();
        }
        // Keep departure angles inside the array's front half-plane.
        return std::clamp(angle, -kPi / 2.0, kPi / 2.0);
    };
    PathKnowledge k;
    k.theta_d_rad = perturb(direct->aod_rad);
    k.d_d_m = direct->length_m;
    if (reflected != nullptr) {
        k.has_reflected = true;
        k.theta_r_rad = perturb(reflected->aod_rad);
        k.d_r_m = reflected->length_m;
        if (k.theta_r_rad == k.theta_d_rad) {
            // Perturbation collapsed the two directions (e.g. both clamped
            // to the same half-plane edge): nudge the reflected angle so
            // downstream projections stay well defined.
            k.theta_r_rad = std::clamp(k.theta_r_rad + 1e-6, -kPi / 2.0, kPi / 2.0);
            if (k.theta_r_rad == k.theta_d_rad) {
                k.theta_r_rad -= 2e-6;
            }
        }
    }
    k.validate();
    return k;
}

double predict_rssi_db(const std::vector<PathComponent>& paths,
                       const PathKnowledge& k,
                       DefenseMode mode,
                       double d_obf_m,
                       const ArrayConfig& tx,
                       const ArrayConfig& rx,
                       const OfdmConfig& ofdm) {
    if (paths.empty()) {
        throw std::invalid_argument("predict_rssi_db: empty path list");
    }
    tx.validate();
    rx.validate();
    ofdm.validate();
    double mean_power = 0.0;
    for (int i = 0; i < ofdm.num_subcarriers; ++i) {
        const double f = ofdm.subcarrier_frequency_hz(i);
        const Eigen::VectorXcd ad = steering_vector(tx, k.theta_d_rad, f);
        const Eigen::VectorXcd ar =
            k.has_reflected ? steering_vector(tx, k.theta_r_rad, f) : Eigen::VectorXcd();
        // Branch vectors before per-tone normalization of their combination.
        std::vector<Eigen::VectorXcd> branches;
        double norm_sq = 0.0;
        switch (mode) {
            case DefenseMode::none: {
                Eigen::VectorXcd v = ad;
                if (k.has_reflected) v += ar;
                branches.push_back(v);
                norm_sq = v.squaredNorm();
                break;
            }
            case DefenseMode::nulling: {
                if (!k.has_reflected) {
                    throw std::invalid_argument("predict_rssi_db: nulling needs a reflected path");
                }
                const Eigen::VectorXcd v = reject_from(ar, ad);
                branches.push_back(v);
                norm_sq = v.squaredNorm();
                break;
            }
            case DefenseMode::beam_delay: {
                if (!k.has_reflected) {
                    branches.push_back(ad);
                    norm_sq = ad.squaredNorm();
                    break;
                }
                branches.push_back(ad);  // delayed branch
                branches.push_back(ar);  // undelayed branch
                norm_sq = (delay_phasor(f, d_obf_m) * ad + ar).squaredNorm();
                break;
            }
            case DefenseMode::mirage: {
                if (!k.has_reflected) {
                    branches.push_back(ad);
                    norm_sq = ad.squaredNorm();
                    break;
                }
                const Eigen::VectorXcd bdnr = reject_from(ad, ar);
                const Eigen::VectorXcd brnd = reject_from(ar, ad);
                branches.push_back(bdnr);
                branches.push_back(brnd);
                norm_sq = (delay_phasor(f, d_obf_m) * bdnr + brnd).squaredNorm();
                break;
            }
        }
        if (norm_sq < 1e-24) {
            throw std::runtime_error("predict_rssi_db: degenerate precoder at a tone");
        }
        // Within a branch the physical paths stay coherent at the receive
        // array; the delayed and undelayed branches decorrelate across the
        // band, so their tone powers add.
        double tone_power = 0.0;
        for (const Eigen::VectorXcd& w : branches) {
            Eigen::VectorXcd rx_field = Eigen::VectorXcd::Zero(rx.num_antennas);
            for (const PathComponent& p : paths) {
                const std::complex<double> tx_coef =
                    steering_vector(tx, p.aod_rad, f).dot(w);  // a_tx^H w
                const std::complex<double> c =
                    p.gain * delay_phasor(f, p.length_m) * tx_coef;
                rx_field += c * steering_vector(rx, p.aoa_rad, f);
            }
            tone_power += rx_field.squaredNorm();
        }
        mean_power += tone_power / norm_sq;
    }
    mean_power /= ofdm.num_subcarriers;
    if (mean_power <= 0.0) {
        return -std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(mean_power);
}

}  // namespace aoasim
