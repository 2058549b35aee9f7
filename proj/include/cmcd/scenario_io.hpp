#pragma once

// Declarative scenario config: `key = value` lines plus obstacle/placement
// lists. A config describes one base scenario and optionally several obstacle
// placements; `simulate` expands each placement into its own recording.
//
//   id = offline
//   seed = 1
//   duration = 114
//   actuation_wave = 0.2 5.6 4.2        (lo hi period, triangle)
//   actuation = 0:0 2:5.5 4:0.2         (explicit knots, alternative)
//   obstacle = ellipse 4 9 6 4 1e5      (shape cx cy ax ay stiffness)
//   placement p0 = ellipse 4 9 6 4 1e5 | box -2 11 5 3 1e5

#include <map>
#include <string>
#include <vector>

#include "cmcd/sim.hpp"
#include "cmcd/util.hpp"

namespace cmcd::sim {

struct ScenarioConfig {
    Scenario base;
    std::vector<std::pair<std::string, std::vector<Obstacle>>> placements;
    std::map<std::string, ActuationProfile> placement_actuation;

    // Scenarios this config expands into: one per placement (base obstacles
    // are shared), or just the base when no placements are given. Placement
    // index offsets the noise seed so recordings are independent draws; a
    // placement may override the actuation profile (obstacles sit at
    // different reach depths, so contact needs placement-specific peaks).
    std::vector<Scenario> expand() const {
        std::vector<Scenario> out;
        if (placements.empty()) {
            out.push_back(base);
            return out;
        }
        std::uint64_t idx = 0;
        for (const auto& [name, obstacles] : placements) {
            Scenario s = base;
            s.id = base.id + "_" + name;
            s.seed = base.seed + idx++;
            s.obstacles.insert(s.obstacles.end(), obstacles.begin(), obstacles.end());
            if (const auto it = placement_actuation.find(name); it != placement_actuation.end())
                s.actuation = it->second;
            out.push_back(std::move(s));
        }
        return out;
    }
};

inline Obstacle parse_obstacle_spec(std::string_view spec) {
    const auto tok = split_ws(spec);
    if (tok.size() != 6)
        throw std::runtime_error("obstacle spec needs: shape cx cy ax ay stiffness");
    Obstacle o;
    if (tok[0] == "ellipse") o.shape = Obstacle::Shape::Ellipse;
    else if (tok[0] == "box") o.shape = Obstacle::Shape::Box;
    else throw std::runtime_error("unknown obstacle shape: " + std::string(tok[0]));
    o.center = {parse_double(tok[1]), parse_double(tok[2])};
    o.semi_axes = {parse_double(tok[3]), parse_double(tok[4])};
    o.stiffness = parse_double(tok[5]);
    o.validate();
    return o;
}

inline std::string obstacle_spec(const Obstacle& o) {
    return std::string(o.shape == Obstacle::Shape::Ellipse ? "ellipse" : "box") + " " +
           fmt_double(o.center.x) + " " + fmt_double(o.center.y) + " " +
           fmt_double(o.semi_axes.x) + " " + fmt_double(o.semi_axes.y) + " " +
           fmt_double(o.stiffness);
}

inline ScenarioConfig parse_scenario_config(const std::string& text) {
    ScenarioConfig cfg;
    Scenario& s = cfg.base;
    std::size_t line_no = 0;
    double wave[3] = {0.0, 0.0, 0.0};
    bool has_wave = false;

    for (std::string_view raw : split(text, '\n')) {
        ++line_no;
        std::string_view line = trim(raw);
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = trim(line.substr(0, hash));
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view val = trim(line.substr(eq + 1));

        try {
            if (key == "id") s.id = std::string(val);
            else if (key == "seed") s.seed = std::uint64_t(parse_int(val));
            else if (key == "calibration_seed") s.calibration_seed = std::uint64_t(parse_int(val));
            else if (key == "duration") s.duration_s = parse_double(val);
            else if (key == "sensor_rate") s.sensor_rate_hz = parse_double(val);
            else if (key == "camera_rate") s.camera_rate_hz = parse_double(val);
            else if (key == "noise_std") s.noise_std = parse_double(val);
            else if (key == "joints") s.cm.joints = int(parse_int(val));
            else if (key == "length_mm") s.cm.length_mm = parse_double(val);
            else if (key == "spring_kappa") s.cm.spring_kappa = parse_double(val);
            else if (key == "cable_offset_mm") s.cm.cable_offset_mm = parse_double(val);
            else if (key == "cable_penalty") s.cm.cable_penalty = parse_double(val);
            else if (key == "tube_radius_mm") s.cm.tube_radius_mm = parse_double(val);
            else if (key == "actuation_min_mm") s.cm.actuation_min_mm = parse_double(val);
            else if (key == "actuation_max_mm") s.cm.actuation_max_mm = parse_double(val);
            else if (key == "base_x_mm") s.cm.base_position.x = parse_double(val);
            else if (key == "base_y_mm") s.cm.base_position.y = parse_double(val);
            else if (key == "base_heading_rad") s.cm.base_heading = parse_double(val);
            else if (key == "image_width") s.raster.width = int(parse_int(val));
            else if (key == "image_height") s.raster.height = int(parse_int(val));
            else if (key == "mm_per_px") s.raster.mm_per_px = parse_double(val);
            else if (key == "actuation") {
                s.actuation.knots.clear();
                for (auto tok : split_ws(val)) {
                    const auto parts = split(tok, ':');
                    if (parts.size() != 2) throw std::runtime_error("actuation knot needs t:mm");
                    s.actuation.knots.emplace_back(parse_double(parts[0]), parse_double(parts[1]));
                }
            } else if (key == "actuation_wave") {
                const auto tok = split_ws(val);
                if (tok.size() != 3) throw std::runtime_error("actuation_wave needs: lo hi period");
                wave[0] = parse_double(tok[0]);
                wave[1] = parse_double(tok[1]);
                wave[2] = parse_double(tok[2]);
                has_wave = true;  // duration may be set on a later line; resolved at the end
            } else if (key == "obstacle") {
                s.obstacles.push_back(parse_obstacle_spec(val));
            } else if (key.starts_with("placement_actuation ")) {
                const std::string name(trim(key.substr(20)));
                if (name.empty()) throw std::runtime_error("placement_actuation needs a name");
                ActuationProfile prof;
                for (auto tok : split_ws(val)) {
                    const auto parts = split(tok, ':');
                    if (parts.size() != 2) throw std::runtime_error("actuation knot needs t:mm");
                    prof.knots.emplace_back(parse_double(parts[0]), parse_double(parts[1]));
                }
                cfg.placement_actuation[name] = std::move(prof);
            } else if (key.starts_with("placement ")) {
                const std::string name(trim(key.substr(10)));
                if (name.empty()) throw std::runtime_error("placement needs a name");
                std::vector<Obstacle> obstacles;
                for (auto part : split(val, '|')) obstacles.push_back(parse_obstacle_spec(trim(part)));
                cfg.placements.emplace_back(name, std::move(obstacles));
            } else {
                throw std::runtime_error("unknown key '" + std::string(key) + "'");
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }

    if (has_wave)
        s.actuation = ActuationProfile::triangle_wave(wave[0], wave[1], wave[2], s.duration_s);
    return cfg;
}

// Fully resolved single-scenario form, written next to each recording.
inline std::string serialize_scenario(const Scenario& s) {
    std::string out;
    out += "id = " + s.id + "\n";
    out += "seed = " + std::to_string(s.seed) + "\n";
    out += "calibration_seed = " + std::to_string(s.calibration_seed) + "\n";
    out += "duration = " + fmt_double(s.duration_s) + "\n";
    out += "sensor_rate = " + fmt_double(s.sensor_rate_hz) + "\n";
    out += "camera_rate = " + fmt_double(s.camera_rate_hz) + "\n";
    out += "noise_std = " + fmt_double(s.noise_std) + "\n";
    out += "joints = " + std::to_string(s.cm.joints) + "\n";
    out += "length_mm = " + fmt_double(s.cm.length_mm) + "\n";
    out += "spring_kappa = " + fmt_double(s.cm.spring_kappa) + "\n";
    out += "cable_offset_mm = " + fmt_double(s.cm.cable_offset_mm) + "\n";
    out += "cable_penalty = " + fmt_double(s.cm.cable_penalty) + "\n";
    out += "tube_radius_mm = " + fmt_double(s.cm.tube_radius_mm) + "\n";
    out += "actuation_min_mm = " + fmt_double(s.cm.actuation_min_mm) + "\n";
    out += "actuation_max_mm = " + fmt_double(s.cm.actuation_max_mm) + "\n";
    out += "base_x_mm = " + fmt_double(s.cm.base_position.x) + "\n";
    out += "base_y_mm = " + fmt_double(s.cm.base_position.y) + "\n";
    out += "base_heading_rad = " + fmt_double(s.cm.base_heading) + "\n";
    out += "image_width = " + std::to_string(s.raster.width) + "\n";
    out += "image_height = " + std::to_string(s.raster.height) + "\n";
    out += "mm_per_px = " + fmt_double(s.raster.mm_per_px) + "\n";
    out += "actuation =";
    for (const auto& [t, v] : s.actuation.knots) out += " " + fmt_double(t) + ":" + fmt_double(v);
    out += "\n";
    for (const auto& o : s.obstacles) out += "obstacle = " + obstacle_spec(o) + "\n";
    return out;
}

}  // namespace cmcd::sim
