// SPDX-License-Identifier: Apache-2.0

#include "aoasim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace aoasim {

namespace {

constexpr double kPi = 3.14159265358979323846;

using nlohmann::json;
using nlohmann::ordered_json;

/// Wrapper that tracks which keys were consumed so leftovers can be
/// reported as errors with their full path.
class Section {
  public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) {
            throw std::invalid_argument("config section '" + path_ + "' must be an object");
        }
    }

    bool has(const std::string& key) {
        consumed_.insert(key);
        return node_.contains(key);
    }

    const json& at(const std::string& key) {
        consumed_.insert(key);
        if (!node_.contains(key)) {
            throw std::invalid_argument("config: missing required key '" + path_ + key + "'");
        }
        return node_.at(key);
    }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        return as_number(at(key), key);
    }

    /// A number key that also accepts null as "use the fallback".
    double number_or_null(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (v.is_null()) return fallback;
        return as_number(v, key);
    }

    int integer(const std::string& key, int fallback) {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_number_integer()) {
            throw std::invalid_argument("config: '" + path_ + key + "' must be an integer");
        }
        return v.get<int>();
    }

    std::uint64_t uinteger(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0)) {
            throw std::invalid_argument("config: '" + path_ + key + "' must be a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

    std::string text(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_string()) {
            throw std::invalid_argument("config: '" + path_ + key + "' must be a string");
        }
        return v.get<std::string>();
    }

    /// Call after all expected keys were touched.
    void finish() const {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (consumed_.find(it.key()) == consumed_.end()) {
                throw std::invalid_argument("config: unknown key '" + path_ + it.key() + "'");
            }
        }
    }

    const json& raw() const { return node_; }
    const std::string& path() const { return path_; }

  private:
    double as_number(const json& v, const std::string& key) const {
        if (!v.is_number()) {
            throw std::invalid_argument("config: '" + path_ + key + "' must be a number");
        }
        return v.get<double>();
    }

    const json& node_;
    std::string path_;
    std::set<std::string> consumed_;
};

Environment parse_environment(const json& node) {
    Section s(node, "environment.");
    Environment env;
    env.width = s.number("width_m", 0.0);
    env.height = s.number("height_m", 0.0);
    if (s.has("reflectors")) {
        const json& arr = s.at("reflectors");
        if (!arr.is_array()) {
            throw std::invalid_argument("config: 'environment.reflectors' must be an array");
        }
        for (std::size_t i = 0; i < arr.size(); ++i) {
            Section r(arr[i], "environment.reflectors[" + std::to_string(i) + "].");
            Reflector refl;
            refl.a = {r.number("x1", 0.0), r.number("y1", 0.0)};
            refl.b = {r.number("x2", 0.0), r.number("y2", 0.0)};
            refl.gamma = r.number("gamma", 1.0);
            r.finish();
            env.reflectors.push_back(refl);
        }
    }
    {
        const json& arr = s.at("aps");
        if (!arr.is_array()) {
            throw std::invalid_argument("config: 'environment.aps' must be an array");
        }
        for (std::size_t i = 0; i < arr.size(); ++i) {
            Section a(arr[i], "environment.aps[" + std::to_string(i) + "].");
            ApPose ap;
            ap.position = {a.number("x", 0.0), a.number("y", 0.0)};
            ap.orientation_rad = a.number("orientation_deg", 0.0) * kPi / 180.0;
            a.finish();
            env.ap_poses.push_back(ap);
        }
    }
    s.finish();
    return env;
}

ArrayConfig parse_array(const json& node, const std::string& path) {
    Section s(node, path);
    ArrayConfig a;
    a.num_antennas = s.integer("num_antennas", a.num_antennas);
    a.spacing_m = s.number("spacing_m", a.spacing_m);
    s.finish();
    return a;
}

OfdmConfig parse_ofdm(const json& node) {
    Section s(node, "ofdm.");
    OfdmConfig o;
    o.center_frequency_hz = s.number("center_frequency_hz", o.center_frequency_hz);
    o.bandwidth_hz = s.number("bandwidth_hz", o.bandwidth_hz);
    o.num_subcarriers = s.integer("num_subcarriers", o.num_subcarriers);
    s.finish();
    return o;
}

GridConfig parse_grid(const json& node) {
    Section s(node, "grid.");
    GridConfig g;
    g.angle_min_deg = s.number("angle_min_deg", g.angle_min_deg);
    g.angle_max_deg = s.number("angle_max_deg", g.angle_max_deg);
    g.angle_step_deg = s.number("angle_step_deg", g.angle_step_deg);
    g.distance_min_m = s.number("distance_min_m", g.distance_min_m);
    g.distance_max_m = s.number("distance_max_m", g.distance_max_m);
    g.distance_step_m = s.number("distance_step_m", g.distance_step_m);
    s.finish();
    return g;
}

AttackerConfig parse_attacker(const json& node) {
    Section s(node, "attacker.");
    AttackerConfig a;
    a.sub_antennas = s.integer("sub_antennas", a.sub_antennas);
    a.sub_subcarriers = s.integer("sub_subcarriers", a.sub_subcarriers);
    if (s.has("num_paths")) {
        const json& v = s.at("num_paths");
        if (v.is_string()) {
            const std::string mode = v.get<std::string>();
            if (mode == "true_count") {
                a.num_paths_mode = NumPathsMode::true_count;
            } else if (mode == "eigen_ratio") {
                a.num_paths_mode = NumPathsMode::eigen_ratio;
            } else {
                throw std::invalid_argument(
                    "config: 'attacker.num_paths' must be \"true_count\", \"eigen_ratio\", "
                    "or an integer (got \"" + mode + "\")");
            }
        } else if (v.is_number_integer()) {
            a.num_paths_mode = NumPathsMode::fixed;
            a.num_paths_fixed = v.get<int>();
            if (a.num_paths_fixed < 1) {
                throw std::invalid_argument("config: 'attacker.num_paths' must be >= 1");
            }
        } else {
            throw std::invalid_argument(
                "config: 'attacker.num_paths' must be a string mode or an integer");
        }
    }
    a.eigen_ratio = s.number("eigen_ratio", a.eigen_ratio);
    a.peak_threshold_db = s.number("peak_threshold_db", a.peak_threshold_db);
    s.finish();
    return a;
}

DefenderConfig parse_defender(const json& node) {
    Section s(node, "defender.");
    DefenderConfig d;
    if (s.has("policies")) {
        const json& arr = s.at("policies");
        if (!arr.is_array()) {
            throw std::invalid_argument("config: 'defender.policies' must be an array of strings");
        }
        for (const json& v : arr) {
            if (!v.is_string()) {
                throw std::invalid_argument("config: 'defender.policies' entries must be strings");
            }
            d.policies.push_back(defense_mode_from_string(v.get<std::string>()));
        }
    }
    const bool has_fixed = s.has("d_obf_m");
    const bool has_margin = s.has("adaptive_margin_m");
    if (has_fixed && has_margin) {
        throw std::invalid_argument(
            "config: specify either 'defender.d_obf_m' (fixed) or "
            "'defender.adaptive_margin_m' (adaptive), not both");
    }
    if (has_fixed) {
        d.adaptive_dobf = false;
        d.d_obf_m = s.number("d_obf_m", 0.0);
    } else {
        d.adaptive_dobf = true;
        d.adaptive_margin_m = s.number("adaptive_margin_m", d.adaptive_margin_m);
        if (d.adaptive_margin_m <= 0.0) {
            throw std::invalid_argument("config: 'defender.adaptive_margin_m' must be > 0");
        }
    }
    const std::string rule = s.text("combine_rule", "projection");
    if (rule == "projection") {
        d.combine_rule = CombineRule::projection;
    } else if (rule == "paper_weighted") {
        d.combine_rule = CombineRule::paper_weighted;
    } else {
        throw std::invalid_argument(
            "config: 'defender.combine_rule' must be \"projection\" or \"paper_weighted\"");
    }
    d.angle_error_std_rad = s.number("angle_error_std_deg", 0.0) * kPi / 180.0;
    s.finish();
    return d;
}

NoiseConfig parse_noise(const json& node) {
    Section s(node, "noise.");
    NoiseConfig n;
    n.snr_db = s.number_or_null("snr_db", n.snr_db);  // null = noise-free
    n.sfo_min_m = s.number("sfo_min_m", n.sfo_min_m);
    n.sfo_max_m = s.number_or_null("sfo_max_m", n.sfo_max_m);  // null = full alias period
    s.finish();
    return n;
}

TrialsConfig parse_trials(const json& node) {
    Section s(node, "trials.");
    TrialsConfig t;
    t.num_positions = s.integer("num_positions", t.num_positions);
    t.rng_seed = s.uinteger("rng_seed", t.rng_seed);
    t.margin_m = s.number("margin_m", t.margin_m);
    t.max_order = s.integer("max_order", t.max_order);
    t.range_sigma_m = s.number("range_sigma_m", t.range_sigma_m);
    s.finish();
    return t;
}

}  // namespace

ProfileGrid GridConfig::build() const {
    return ProfileGrid::uniform(angle_min_deg * kPi / 180.0, angle_max_deg * kPi / 180.0,
                                angle_step_deg * kPi / 180.0, distance_min_m, distance_max_m,
                                distance_step_m);
}

int AttackerConfig::resolved_sub_subcarriers(const OfdmConfig& ofdm) const {
    if (sub_subcarriers > 0) return sub_subcarriers;
    return (ofdm.num_subcarriers + 1) / 2;  // ceil(L/2)
}

ObfuscationPolicy DefenderConfig::policy_for(DefenseMode mode) const {
    ObfuscationPolicy p;
    p.mode = mode;
    p.adaptive_dobf = adaptive_dobf;
    p.d_obf_m = d_obf_m;
    p.adaptive_margin_m = adaptive_margin_m;
    p.combine_rule = combine_rule;
    return p;
}

double NoiseConfig::resolved_sfo_max(const OfdmConfig& ofdm) const {
    if (sfo_max_m < 0.0) return ofdm.alias_window_m();
    return sfo_max_m;
}

void ScenarioConfig::validate() const {
    env.validate();
    tx_array.validate();
    rx_array.validate();
    ofdm.validate();
    grid.build().validate(ofdm);
    if (env.ap_poses.empty()) {
        throw std::invalid_argument("config: at least one AP is required");
    }
    if (attacker.sub_antennas < 1 || attacker.sub_antennas > rx_array.num_antennas) {
        throw std::invalid_argument("config: attacker.sub_antennas must be in [1, K_rx]");
    }
    const int mf = attacker.resolved_sub_subcarriers(ofdm);
    if (mf < 1 || mf > ofdm.num_subcarriers) {
        throw std::invalid_argument("config: attacker.sub_subcarriers must be in [1, L]");
    }
    if (attacker.eigen_ratio <= 0.0 || attacker.eigen_ratio >= 1.0) {
        throw std::invalid_argument("config: attacker.eigen_ratio must be in (0, 1)");
    }
    if (trials.num_positions < 1) {
        throw std::invalid_argument("config: trials.num_positions must be >= 1");
    }
    if (trials.max_order < 0) {
        throw std::invalid_argument("config: trials.max_order must be >= 0");
    }
    if (trials.range_sigma_m < 0.0) {
        throw std::invalid_argument("config: trials.range_sigma_m must be >= 0");
    }
    if (trials.margin_m < 0.0 || 2.0 * trials.margin_m >= env.width ||
        2.0 * trials.margin_m >= env.height) {
        throw std::invalid_argument("config: trials.margin_m must fit inside the room");
    }
    if (noise.sfo_min_m < 0.0 || noise.resolved_sfo_max(ofdm) < noise.sfo_min_m) {
        throw std::invalid_argument("config: noise SFO window must satisfy 0 <= min <= max");
    }
    if (!defender.adaptive_dobf && defender.d_obf_m < 0.0) {
        throw std::invalid_argument("config: defender.d_obf_m must be >= 0");
    }
    if (defender.angle_error_std_rad < 0.0) {
        throw std::invalid_argument("config: defender.angle_error_std_deg must be >= 0");
    }
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open scenario file: " + path);
    }
    json root;
    try {
        in >> root;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("scenario file " + path + ": " + e.what());
    }
    Section s(root, "");
    ScenarioConfig c;
    c.env = parse_environment(s.at("environment"));
    if (s.has("tx_array")) c.tx_array = parse_array(s.at("tx_array"), "tx_array.");
    if (s.has("rx_array")) c.rx_array = parse_array(s.at("rx_array"), "rx_array.");
    if (s.has("ofdm")) c.ofdm = parse_ofdm(s.at("ofdm"));
    if (s.has("grid")) c.grid = parse_grid(s.at("grid"));
    if (s.has("attacker")) c.attacker = parse_attacker(s.at("attacker"));
    if (s.has("defender")) c.defender = parse_defender(s.at("defender"));
    if (s.has("noise")) c.noise = parse_noise(s.at("noise"));
    if (s.has("trials")) c.trials = parse_trials(s.at("trials"));
    if (s.has("output")) {
        Section o(s.raw().at("output"), "output.");
        c.output_dir = o.text("directory", c.output_dir);
        o.finish();
    }
    s.finish();
    c.env.rng_seed = c.trials.rng_seed;
    c.validate();
    return c;
}

std::string resolved_scenario_json(const ScenarioConfig& c) {
    ordered_json root;
    ordered_json env;
    env["width_m"] = c.env.width;
    env["height_m"] = c.env.height;
    env["reflectors"] = ordered_json::array();
    for (const Reflector& r : c.env.reflectors) {
        env["reflectors"].push_back({{"x1", r.a.x},
                                     {"y1", r.a.y},
                                     {"x2", r.b.x},
                                     {"y2", r.b.y},
                                     {"gamma", r.gamma}});
    }
    env["aps"] = ordered_json::array();
    for (const ApPose& a : c.env.ap_poses) {
        env["aps"].push_back({{"x", a.position.x},
                              {"y", a.position.y},
                              {"orientation_deg", a.orientation_rad * 180.0 / kPi}});
    }
    root["environment"] = env;
    root["tx_array"] = {{"num_antennas", c.tx_array.num_antennas},
                        {"spacing_m", c.tx_array.spacing_m}};
    root["rx_array"] = {{"num_antennas", c.rx_array.num_antennas},
                        {"spacing_m", c.rx_array.spacing_m}};
    root["ofdm"] = {{"center_frequency_hz", c.ofdm.center_frequency_hz},
                    {"bandwidth_hz", c.ofdm.bandwidth_hz},
                    {"num_subcarriers", c.ofdm.num_subcarriers}};
    root["grid"] = {{"angle_min_deg", c.grid.angle_min_deg},
                    {"angle_max_deg", c.grid.angle_max_deg},
                    {"angle_step_deg", c.grid.angle_step_deg},
                    {"distance_min_m", c.grid.distance_min_m},
                    {"distance_max_m", c.grid.distance_max_m},
                    {"distance_step_m", c.grid.distance_step_m}};
    ordered_json att;
    att["sub_antennas"] = c.attacker.sub_antennas;
    att["sub_subcarriers"] = c.attacker.resolved_sub_subcarriers(c.ofdm);
    switch (c.attacker.num_paths_mode) {
        case NumPathsMode::true_count: att["num_paths"] = "true_count"; break;
        case NumPathsMode::fixed: att["num_paths"] = c.attacker.num_paths_fixed; break;
        case NumPathsMode::eigen_ratio: att["num_paths"] = "eigen_ratio"; break;
    }
    att["eigen_ratio"] = c.attacker.eigen_ratio;
    att["peak_threshold_db"] = c.attacker.peak_threshold_db;
    root["attacker"] = att;
    ordered_json def;
    def["policies"] = ordered_json::array();
    for (DefenseMode m : c.defender.policies) {
        def["policies"].push_back(to_string(m));
    }
    if (c.defender.adaptive_dobf) {
        def["adaptive_margin_m"] = c.defender.adaptive_margin_m;
    } else {
        def["d_obf_m"] = c.defender.d_obf_m;
    }
    def["combine_rule"] =
        c.defender.combine_rule == CombineRule::projection ? "projection" : "paper_weighted";
    def["angle_error_std_deg"] = c.defender.angle_error_std_rad * 180.0 / kPi;
    root["defender"] = def;
    ordered_json noi;
    if (std::isinf(c.noise.snr_db)) {
        noi["snr_db"] = nullptr;
    } else {
        noi["snr_db"] = c.noise.snr_db;
    }
    noi["sfo_min_m"] = c.noise.sfo_min_m;
    noi["sfo_max_m"] = c.noise.resolved_sfo_max(c.ofdm);
    root["noise"] = noi;
    root["trials"] = {{"num_positions", c.trials.num_positions},
                      {"rng_seed", c.trials.rng_seed},
                      {"margin_m", c.trials.margin_m},
                      {"max_order", c.trials.max_order},
                      {"range_sigma_m", c.trials.range_sigma_m}};
    root["output"] = {{"directory", c.output_dir}};
    return root.dump(2) + "\n";
}

}  // namespace aoasim
