// SPDX-License-Identifier: Apache-2.0
//
// Transmit-side defenses: direct-path nulling, two-beam + delay, and the
// combined null + delay obfuscation precoder, built from departure angles
// the user learns from downlink measurements.

#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "aoasim/geometry.hpp"
#include "aoasim/phy.hpp"

namespace aoasim {

/// What the defender knows about its own channel: departure angle and
/// length of the direct path and of the strongest reflected path.
struct PathKnowledge {
    double theta_d_rad = 0.0;
    double d_d_m = 0.0;
    bool has_reflected = false;
    double theta_r_rad = 0.0;
    double d_r_m = 0.0;

    /// Throws std::invalid_argument when a reflected path is present but
    /// d_r <= d_d or theta_r == theta_d.
    void validate() const;
};

enum class DefenseMode { none, nulling, beam_delay, mirage };

enum class CombineRule { projection, paper_weighted };

/// Per-transmission defense settings. d_obf resolves either to the fixed
/// value or adaptively to (d_r - d_d) + adaptive_margin_m.
struct ObfuscationPolicy {
    DefenseMode mode = DefenseMode::none;
    bool adaptive_dobf = true;
    double d_obf_m = 0.0;            ///< used when adaptive_dobf == false
    double adaptive_margin_m = 5.0;
    CombineRule combine_rule = CombineRule::projection;
};

const char* to_string(DefenseMode mode);
DefenseMode defense_mode_from_string(const std::string& name);

/// Resolve the artificial path-length extension for a policy. A fixed
/// d_obf of exactly 0 disables the delay (the undelayed reference case);
/// any other fixed value must exceed d_r - d_d. The result is capped so
/// d_d + d_obf stays 1 m inside the delay alias window.
/// Throws std::invalid_argument when a fixed positive d_obf violates
/// d_obf > d_r - d_d.
double resolve_dobf(const ObfuscationPolicy& policy, const PathKnowledge& k, const OfdmConfig& ofdm);

/// Orthonormal basis of {w : v^H w = 0}, dimension K-1, deterministic
/// (Householder reflector completion). Throws std::invalid_argument on a
/// zero vector.
std::vector<Eigen::VectorXcd> null_space_basis(const Eigen::VectorXcd& v);

/// w(f_i) = normalize(P_perp(a_tx(theta_d)) * a_tx(theta_r)): zero gain
/// toward theta_d, residual power steered toward theta_r.
/// Throws std::invalid_argument when no reflected direction is known or
/// the two directions coincide.
Precoder nulling_precoder(const PathKnowledge& k, const ArrayConfig& tx, const OfdmConfig& ofdm);

/// w(f_i) = normalize(a_tx(theta_d)*exp(-j*2*pi*f_i*d_obf/c) + a_tx(theta_r)).
Precoder beamform_delay_precoder(const PathKnowledge& k,
                                 const ObfuscationPolicy& policy,
                                 const ArrayConfig& tx,
                                 const OfdmConfig& ofdm);

/// Delayed branch bdnr in NULL(a_tx(theta_r)^H) aimed at theta_d, undelayed
/// branch brnd in NULL(a_tx(theta_d)^H) aimed at theta_r, combined as
/// w = normalize(bdnr * exp(-j*2*pi*f_i*d_obf/c) + brnd).
/// Requires K_tx >= 3. Under the paper_weighted rule a vanishing weight
/// denominator falls back to the projection rule with a logged warning.
Precoder mirage_precoder(const PathKnowledge& k,
                         const ObfuscationPolicy& policy,
                         const ArrayConfig& tx,
                         const OfdmConfig& ofdm);

/// Undefended reference: equal-power two-beam toward theta_d and theta_r
/// (matched single beam toward theta_d when no reflected path is known).
/// This is the beam_delay precoder with the delay disabled, which keeps
/// received-power comparisons across defenses beam-for-beam fair.
Precoder baseline_precoder(const PathKnowledge& k, const ArrayConfig& tx, const OfdmConfig& ofdm);

/// Dispatch on policy.mode. Falls back to baseline_precoder with a logged
/// warning when the defense needs a reflected path and none is known.
Precoder obfuscation_precoder(const PathKnowledge& k,
                              const ObfuscationPolicy& policy,
                              const ArrayConfig& tx,
                              const OfdmConfig& ofdm);

/// Extract defender knowledge from an enumerated path list: direct = the
/// order-0 path, reflected = the highest-gain path of order >= 1. Angles
/// are perturbed by independent Gaussian(0, angle_error_std) draws.
/// Throws std::invalid_argument when fewer than 1 path or no order-0 path
/// is present; absence of a reflected path is reported via has_reflected.
PathKnowledge make_path_knowledge(const std::vector<PathComponent>& paths,
                                  Rng& rng,
                                  double angle_error_std_rad);

/// Closed-form received-power prediction for a defense over a known path
/// set: within each branch (delayed / undelayed) paths combine coherently
/// at the receive array; the two branches add incoherently because the
/// artificial delay decorrelates them across the band. Returns dB on the
/// same scale as rssi_db.
double predict_rssi_db(const std::vector<PathComponent>& paths,
                       const PathKnowledge& k,
                       DefenseMode mode,
                       double d_obf_m,
                       const ArrayConfig& tx,
                       const ArrayConfig& rx,
                       const OfdmConfig& ofdm);

}  // namespace aoasim
