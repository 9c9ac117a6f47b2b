// SPDX-License-Identifier: Apache-2.0

#include "aoasim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace aoasim {

namespace {

constexpr double kPi = 3.14159265358979323846;

double rad2deg(double r) { return r * 180.0 / kPi; }

int clamp_num_paths(int requested, Eigen::Index rows) {
    const int hi = static_cast<int>(rows) - 1;
    return std::clamp(requested, 1, hi);
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double rmse_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
}

const ApObservation* find_ap(const PolicyResult& pr, int ap_index) {
    for (const ApObservation& o : pr.aps) {
        if (o.ap_index == ap_index) return &o;
    }
    return nullptr;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string fmt_if(bool valid, double v) { return valid ? fmt(v) : std::string(); }

/// Keep status text CSV-safe without quoting rules.
std::string sanitize(std::string s) {
    for (char& ch : s) {
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    }
    return s;
}

std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: no newline translation
    if (!out) {
        throw std::runtime_error("cannot write output file: " + path);
    }
    return out;
}

void finish_write(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) {
        throw std::runtime_error("write failed for output file: " + path);
    }
}

}  // namespace

namespace {

/// One full trial at a fixed position: precode toward the serving AP under
/// each policy, run the attacker at every AP. When fixed_sfo is set the
/// per-packet sampling-offset draw is replaced by noise.sfo_min_m.
TrialRecord run_trial(const ScenarioConfig& config,
                      const ProfileGrid& grid,
                      int trial_index,
                      Vec2 user_pos,
                      Rng& rng,
                      const std::vector<DefenseMode>& policies,
                      const ProfileSink& sink,
                      bool fixed_sfo) {
    const int ma = config.attacker.sub_antennas;
    const int mf = config.attacker.resolved_sub_subcarriers(config.ofdm);
    const double sfo_max = config.noise.resolved_sfo_max(config.ofdm);
    const int n_aps = static_cast<int>(config.env.ap_poses.size());

    TrialRecord rec;
    rec.trial_index = trial_index;
    rec.user_pos = user_pos;
    int serving = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_aps; ++i) {
        const double d = norm(config.env.ap_poses[i].position - rec.user_pos);
        if (d < best) {
            best = d;
            serving = i;
        }
    }
    rec.serving_ap = serving;
    const Vec2 sp = config.env.ap_poses[static_cast<std::size_t>(serving)].position;
    // The user's array broadside faces its serving AP.
    rec.user_orientation_rad = std::atan2(sp.x - rec.user_pos.x, sp.y - rec.user_pos.y);

    PathKnowledge knowledge;
    try {
        const std::vector<PathComponent> serving_paths =
            enumerate_paths(config.env, rec.user_pos, rec.user_orientation_rad, serving,
                            config.trials.max_order);
        knowledge = make_path_knowledge(serving_paths, rng, config.defender.angle_error_std_rad);
        rec.ok = true;
    } catch (const std::exception& e) {
        rec.error = e.what();
        return rec;
    }

    for (DefenseMode mode : policies) {
        PolicyResult pr;
        pr.mode = mode;
        pr.fell_back = (mode != DefenseMode::none && !knowledge.has_reflected);
        const ObfuscationPolicy policy = config.defender.policy_for(mode);
        Precoder precoder;
        bool precoder_ok = false;
        std::string precoder_error;
        try {
            pr.d_obf_m = resolve_dobf(policy, knowledge, config.ofdm);
            precoder = obfuscation_precoder(knowledge, policy, config.tx_array, config.ofdm);
            precoder_ok = true;
        } catch (const std::exception& e) {
            precoder_error = std::string("precoder: ") + e.what();
        }

        for (int ia = 0; ia < n_aps; ++ia) {
            ApObservation obs;
            obs.ap_index = ia;
            obs.true_aoa_rad = bearing_to(config.env.ap_poses[ia], rec.user_pos);
            if (!precoder_ok) {
                obs.error = precoder_error;
                pr.aps.push_back(std::move(obs));
                continue;
            }
            try {
                const std::vector<PathComponent> paths_ap =
                    enumerate_paths(config.env, rec.user_pos, rec.user_orientation_rad, ia,
                                    config.trials.max_order);
                if (paths_ap.empty()) {
                    obs.error = "no propagation paths within the arrays' field of view";
                    pr.aps.push_back(std::move(obs));
                    continue;
                }
                obs.num_paths_true = static_cast<int>(paths_ap.size());
                for (const PathComponent& p : paths_ap) {
                    if (p.order == 0) obs.has_direct = true;
                }
                const double delta_d =
                    fixed_sfo ? config.noise.sfo_min_m
                              : rng.uniform(config.noise.sfo_min_m, sfo_max);
                const ChannelMatrix H = synthesize_csi(paths_ap, config.tx_array,
                                                       config.rx_array, config.ofdm, delta_d);
                const Eigen::MatrixXcd h_eff = apply_precoder(H, precoder);
                obs.rssi_db = rssi_db(h_eff);
                obs.rssi_valid = true;
                const Eigen::MatrixXcd h_noisy = add_noise(h_eff, config.noise.snr_db, rng);
                const Eigen::MatrixXcd snapshots = smooth_csi(h_noisy, ma, mf);
                int num_paths = 0;
                switch (config.attacker.num_paths_mode) {
                    case NumPathsMode::true_count:
                        num_paths = clamp_num_paths(obs.num_paths_true, snapshots.rows());
                        break;
                    case NumPathsMode::fixed:
                        num_paths =
                            clamp_num_paths(config.attacker.num_paths_fixed, snapshots.rows());
                        break;
                    case NumPathsMode::eigen_ratio:
                        num_paths = estimate_num_paths(snapshots, config.attacker.eigen_ratio);
                        break;
                }
                obs.num_paths_used = num_paths;
                const AngleDistanceProfile profile =
                    music_profile(snapshots, grid, num_paths, config.ofdm, config.rx_array, ma,
                                  mf, config.attacker.peak_threshold_db);
                obs.num_peaks = static_cast<int>(profile.peaks.size());
                if (sink) sink(trial_index, mode, ia, grid, profile);
                const ProfilePeak direct = select_direct(profile);
                obs.est_aoa_rad = direct.angle_rad;
                obs.est_distance_m = direct.distance_m;
                obs.est_power_db = direct.power_db;
                obs.ok = true;
                if (obs.has_direct) {
                    obs.aoa_error_rad = std::abs(wrap_pi(obs.est_aoa_rad - obs.true_aoa_rad));
                    double range = norm(config.env.ap_poses[ia].position - rec.user_pos);
                    if (config.trials.range_sigma_m > 0.0) {
                        range += config.trials.range_sigma_m * rng.normal();
                    }
                    if (range > 0.0) {
                        const LocalizationEstimate est = localize_single_ap(
                            config.env.ap_poses[ia], obs.est_aoa_rad, range);
                        obs.single_ok = true;
                        obs.single_pos = est.position;
                        obs.single_error_m = norm(est.position - rec.user_pos);
                    }
                }
            } catch (const std::exception& e) {
                obs.error = e.what();
            }
            pr.aps.push_back(std::move(obs));
        }

        std::vector<ApPose> tri_aps;
        std::vector<double> tri_aoas;
        for (const ApObservation& o : pr.aps) {
            if (o.ok && o.has_direct) {
                tri_aps.push_back(config.env.ap_poses[static_cast<std::size_t>(o.ap_index)]);
                tri_aoas.push_back(o.est_aoa_rad);
            }
        }
        pr.tri_num_aps = static_cast<int>(tri_aps.size());
        if (tri_aps.size() >= 2) {
            try {
                const LocalizationEstimate est = triangulate(tri_aps, tri_aoas);
                pr.tri_ok = true;
                pr.tri_pos = est.position;
                pr.tri_error_m = norm(est.position - rec.user_pos);
            } catch (const std::exception& e) {
                pr.tri_error = e.what();
            }
        } else {
            pr.tri_error = "fewer than 2 usable AP observations";
        }
        rec.policies.push_back(std::move(pr));
    }
    return rec;
}

}  // namespace

ExperimentResult run_experiment(const ScenarioConfig& config, const ProfileSink& sink) {
    config.validate();
    ExperimentResult result;
    result.policies.push_back(DefenseMode::none);
    for (DefenseMode m : config.defender.policies) {
        if (std::find(result.policies.begin(), result.policies.end(), m) == result.policies.end()) {
            result.policies.push_back(m);
        }
    }
    const ProfileGrid grid = config.grid.build();
    for (int t = 0; t < config.trials.num_positions; ++t) {
        Rng rng = Rng::child(config.trials.rng_seed, static_cast<std::uint64_t>(t));
        Vec2 pos;
        pos.x = rng.uniform(config.trials.margin_m, config.env.width - config.trials.margin_m);
        pos.y = rng.uniform(config.trials.margin_m, config.env.height - config.trials.margin_m);
        result.trials.push_back(
            run_trial(config, grid, t, pos, rng, result.policies, sink, /*fixed_sfo=*/false));
    }
    return result;
}

TrialRecord run_single_position(const ScenarioConfig& config,
                                Vec2 user_pos,
                                const std::vector<DefenseMode>& policies,
                                const ProfileSink& sink) {
    config.validate();
    if (user_pos.x < 0.0 || user_pos.x > config.env.width || user_pos.y < 0.0 ||
        user_pos.y > config.env.height) {
        throw std::invalid_argument("position lies outside the room");
    }
    const ProfileGrid grid = config.grid.build();
    Rng rng = Rng::child(config.trials.rng_seed, 0);
    return run_trial(config, grid, 0, user_pos, rng, policies, sink, /*fixed_sfo=*/true);
}

Summary summarize(const ExperimentResult& result) {
    if (result.trials.empty()) {
        throw std::invalid_argument("summarize: experiment has no trials");
    }
    Summary summary;
    for (const TrialRecord& rec : result.trials) {
        if (rec.ok) {
            ++summary.trials_ok;
        } else {
            ++summary.trials_failed;
        }
    }
    for (std::size_t pi = 0; pi < result.policies.size(); ++pi) {
        PolicySummary ps;
        ps.mode = result.policies[pi];
        ps.aoa_histogram.assign(90, 0);
        std::vector<double> rssi_vals;
        std::vector<double> rssi_deltas;
        for (const TrialRecord& rec : result.trials) {
            if (!rec.ok) continue;
            const PolicyResult& pr = rec.policies[pi];
            for (const ApObservation& o : pr.aps) {
                if (o.ok) {
                    ++ps.observations_ok;
                } else {
                    ++ps.observations_failed;
                }
                if (o.ok && o.has_direct) {
                    const double deg = rad2deg(o.aoa_error_rad);
                    ps.aoa_errors_deg.push_back(deg);
                    const int bin = std::min(static_cast<int>(deg / 2.0), 89);
                    ++ps.aoa_histogram[static_cast<std::size_t>(bin)];
                    if (o.single_ok) {
                        ps.single_errors_m.push_back(o.single_error_m);
                    }
                }
            }
            if (pr.tri_ok) {
                ps.tri_errors_m.push_back(pr.tri_error_m);
            }
            const ApObservation* sv = find_ap(pr, rec.serving_ap);
            const ApObservation* sv0 = find_ap(rec.policies[0], rec.serving_ap);
            if (sv != nullptr && sv->rssi_valid) {
                rssi_vals.push_back(sv->rssi_db);
                if (sv0 != nullptr && sv0->rssi_valid) {
                    rssi_deltas.push_back(sv->rssi_db - sv0->rssi_db);
                }
            }
        }
        ps.aoa_mean_deg = mean_of(ps.aoa_errors_deg);
        ps.aoa_median_deg = median_of(ps.aoa_errors_deg);
        std::sort(ps.single_errors_m.begin(), ps.single_errors_m.end());
        ps.single_rmse_m = rmse_of(ps.single_errors_m);
        ps.single_median_m = median_of(ps.single_errors_m);
        std::sort(ps.tri_errors_m.begin(), ps.tri_errors_m.end());
        ps.tri_rmse_m = rmse_of(ps.tri_errors_m);
        ps.tri_median_m = median_of(ps.tri_errors_m);
        ps.rssi_mean_db = mean_of(rssi_vals);
        ps.rssi_delta_db = mean_of(rssi_deltas);
        summary.policies.push_back(std::move(ps));
    }
    return summary;
}

void emit_outputs(const ScenarioConfig& config,
                  const ExperimentResult& result,
                  const Summary& summary,
                  const std::string& outdir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec) {
        throw std::runtime_error("cannot create output directory: " + outdir + " (" +
                                 ec.message() + ")");
    }

    {
        const std::string path = outdir + "/scenario.resolved";
        std::ofstream out = open_for_write(path);
        out << resolved_scenario_json(config);
        finish_write(out, path);
    }

    {
        const std::string path = outdir + "/trials.csv";
        std::ofstream out = open_for_write(path);
        out << "trial,policy,ap_index,is_serving,user_x_m,user_y_m,user_orientation_deg,"
               "d_obf_m,fell_back,num_paths,num_paths_assumed,has_direct,true_bearing_deg,"
               "status,est_aoa_deg,est_distance_m,est_peak_db,num_peaks,aoa_error_deg,rssi_db,"
               "single_ap_x_m,single_ap_y_m,single_ap_error_m\n";
        const int n_aps = static_cast<int>(config.env.ap_poses.size());
        for (const TrialRecord& rec : result.trials) {
            for (std::size_t pi = 0; pi < result.policies.size(); ++pi) {
                for (int ia = 0; ia < n_aps; ++ia) {
                    out << rec.trial_index << ',' << to_string(result.policies[pi]) << ',' << ia
                        << ',' << (ia == rec.serving_ap ? 1 : 0) << ',' << fmt(rec.user_pos.x)
                        << ',' << fmt(rec.user_pos.y) << ','
                        << fmt(rad2deg(rec.user_orientation_rad)) << ',';
                    if (!rec.ok) {
                        // One row per (policy, AP) with the trial-level failure
                        // in the status column and every result column empty.
                        out << ",,,,,," << sanitize(rec.error) << ",,,,,,,,,\n";
                        continue;
                    }
                    const PolicyResult& pr = rec.policies[pi];
                    const ApObservation& o = pr.aps[static_cast<std::size_t>(ia)];
                    out << fmt(pr.d_obf_m) << ',' << (pr.fell_back ? 1 : 0) << ','
                        << o.num_paths_true << ',' << o.num_paths_used << ','
                        << (o.has_direct ? 1 : 0) << ',' << fmt(rad2deg(o.true_aoa_rad)) << ','
                        << (o.ok ? "ok" : sanitize(o.error)) << ','
                        << fmt_if(o.ok, rad2deg(o.est_aoa_rad)) << ','
                        << fmt_if(o.ok, o.est_distance_m) << ',' << fmt_if(o.ok, o.est_power_db)
                        << ',' << o.num_peaks << ','
                        << fmt_if(o.ok && o.has_direct, rad2deg(o.aoa_error_rad)) << ','
                        << fmt_if(o.rssi_valid, o.rssi_db) << ','
                        << fmt_if(o.single_ok, o.single_pos.x) << ','
                        << fmt_if(o.single_ok, o.single_pos.y) << ','
                        << fmt_if(o.single_ok, o.single_error_m) << '\n';
                }
            }
        }
        finish_write(out, path);
    }

    {
        const std::string path = outdir + "/localization.csv";
        std::ofstream out = open_for_write(path);
        out << "trial,policy,method,num_aps,est_x_m,est_y_m,error_m,status\n";
        for (const TrialRecord& rec : result.trials) {
            if (!rec.ok) continue;
            for (std::size_t pi = 0; pi < result.policies.size(); ++pi) {
                const PolicyResult& pr = rec.policies[pi];
                out << rec.trial_index << ',' << to_string(pr.mode) << ",triangulation,"
                    << pr.tri_num_aps << ',' << fmt_if(pr.tri_ok, pr.tri_pos.x) << ','
                    << fmt_if(pr.tri_ok, pr.tri_pos.y) << ',' << fmt_if(pr.tri_ok, pr.tri_error_m)
                    << ',' << (pr.tri_ok ? "ok" : sanitize(pr.tri_error)) << '\n';
            }
        }
        finish_write(out, path);
    }

    {
        const std::string path = outdir + "/summary.csv";
        std::ofstream out = open_for_write(path);
        out << "policy,metric,value\n";
        out << "all,trials_ok," << summary.trials_ok << '\n';
        out << "all,trials_failed," << summary.trials_failed << '\n';
        for (const PolicySummary& ps : summary.policies) {
            const std::string p = to_string(ps.mode);
            const bool have_aoa = !ps.aoa_errors_deg.empty();
            const bool have_single = !ps.single_errors_m.empty();
            const bool have_tri = !ps.tri_errors_m.empty();
            out << p << ",aoa_count," << ps.aoa_errors_deg.size() << '\n';
            out << p << ",aoa_mean_deg," << fmt_if(have_aoa, ps.aoa_mean_deg) << '\n';
            out << p << ",aoa_median_deg," << fmt_if(have_aoa, ps.aoa_median_deg) << '\n';
            out << p << ",single_ap_count," << ps.single_errors_m.size() << '\n';
            out << p << ",single_ap_rmse_m," << fmt_if(have_single, ps.single_rmse_m) << '\n';
            out << p << ",single_ap_median_m," << fmt_if(have_single, ps.single_median_m) << '\n';
            out << p << ",triangulation_count," << ps.tri_errors_m.size() << '\n';
            out << p << ",triangulation_rmse_m," << fmt_if(have_tri, ps.tri_rmse_m) << '\n';
            out << p << ",triangulation_median_m," << fmt_if(have_tri, ps.tri_median_m) << '\n';
            out << p << ",rssi_mean_db," << fmt(ps.rssi_mean_db) << '\n';
            out << p << ",rssi_delta_db," << fmt(ps.rssi_delta_db) << '\n';
            out << p << ",observations_ok," << ps.observations_ok << '\n';
            out << p << ",observations_failed," << ps.observations_failed << '\n';
        }
        finish_write(out, path);
    }

    {
        const std::string path = outdir + "/aoa_histogram.csv";
        std::ofstream out = open_for_write(path);
        out << "policy,bin_low_deg,bin_high_deg,count\n";
        for (const PolicySummary& ps : summary.policies) {
            for (std::size_t b = 0; b < ps.aoa_histogram.size(); ++b) {
                out << to_string(ps.mode) << ',' << 2 * b << ',' << 2 * (b + 1) << ','
                    << ps.aoa_histogram[b] << '\n';
            }
        }
        finish_write(out, path);
    }

    {
        const std::string path = outdir + "/localization_cdf.csv";
        std::ofstream out = open_for_write(path);
        out << "policy,method,error_m,fraction\n";
        auto emit_cdf = [&out](const char* policy, const char* method,
                               const std::vector<double>& sorted_errors) {
            if (sorted_errors.empty()) return;
            const double max_err = sorted_errors.back();
            const long k_max = static_cast<long>(std::ceil(max_err / 0.1 - 1e-12));
            const double n = static_cast<double>(sorted_errors.size());
            for (long k = 0; k <= k_max; ++k) {
                const double x = 0.1 * static_cast<double>(k);
                const auto it = std::upper_bound(sorted_errors.begin(), sorted_errors.end(),
                                                 x + 1e-12);
                const double frac =
                    static_cast<double>(std::distance(sorted_errors.begin(), it)) / n;
                out << policy << ',' << method << ',' << fmt(x) << ',' << fmt(frac) << '\n';
            }
        };
        for (const PolicySummary& ps : summary.policies) {
            emit_cdf(to_string(ps.mode), "single_ap", ps.single_errors_m);
            emit_cdf(to_string(ps.mode), "triangulation", ps.tri_errors_m);
        }
        finish_write(out, path);
    }
}

void write_profile_csv(const std::string& path,
                       const ProfileGrid& grid,
                       const AngleDistanceProfile& profile) {
    std::ofstream out = open_for_write(path);
    out << "angle_deg,distance_m,power_db\n";
    const double peak = profile.spectrum.maxCoeff();
    const Eigen::Index na = profile.spectrum.rows();
    const Eigen::Index nd = profile.spectrum.cols();
    for (Eigen::Index a = 0; a < na; ++a) {
        for (Eigen::Index d = 0; d < nd; ++d) {
            const double rel_db = 10.0 * std::log10(profile.spectrum(a, d) / peak);
            out << fmt(rad2deg(grid.angles_rad[static_cast<std::size_t>(a)])) << ','
                << fmt(grid.distances_m[static_cast<std::size_t>(d)]) << ',' << fmt(rel_db)
                << '\n';
        }
    }
    finish_write(out, path);
}

void write_precoder_csv(const std::string& path, const Precoder& precoder) {
    std::ofstream out = open_for_write(path);
    out << "subcarrier_index,antenna_index,real,imag\n";
    for (Eigen::Index i = 0; i < precoder.weights.cols(); ++i) {
        for (Eigen::Index k = 0; k < precoder.weights.rows(); ++k) {
            const std::complex<double> w = precoder.weights(k, i);
            out << i << ',' << k << ',' << fmt(w.real()) << ',' << fmt(w.imag()) << '\n';
        }
    }
    finish_write(out, path);
}

}  // namespace aoasim
