// SPDX-License-Identifier: Apache-2.0
//
// qupa - beam training and tracking library for quadruple-UPA terahertz links
// Copyright (C) 2026 The qupa authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "qupa/scenario.hpp"

#include "qupa/rng.hpp"
#include "qupa/training.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qupa
{
    namespace
    {
        using nlohmann::json;

        double deg(double rad) { return rad * 180.0 / kPi; }
        double rad(double deg) { return deg * kPi / 180.0; }

        // Angles are stored in degrees, so a round trip may move them by a few ulps
        constexpr double kAngleTolerance = 1e-12;

        json direction_json(const Direction &d)
        {
            return {{"azimuth_deg", deg(d.azimuth)}, {"elevation_deg", deg(d.elevation)}};
        }

        Direction direction_from(const json &j)
        {
            return {rad(j.at("azimuth_deg").get<double>()), rad(j.at("elevation_deg").get<double>())};
        }

        json vec_json(const Eigen::Vector3d &v) { return json::array({v.x(), v.y(), v.z()}); }

        Eigen::Vector3d vec_from(const json &j)
        {
            if (!j.is_array() || j.size() != 3)
                throw std::runtime_error("expected a 3-element position array");
            return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
        }

        template <typename T>
        void read_opt(const json &j, const char *key, T &out)
        {
            if (j.contains(key))
                out = j.at(key).get<T>();
        }

        bool same_direction(const Direction &a, const Direction &b)
        {
            return std::abs(wrap_angle(a.azimuth - b.azimuth)) <= kAngleTolerance &&
                   std::abs(a.elevation - b.elevation) <= kAngleTolerance;
        }

        bool same_trajectory(const TrajectoryConfig &a, const TrajectoryConfig &b)
        {
            return a.start == b.start && a.anchor == b.anchor && a.max_speed == b.max_speed &&
                   a.mean_segment_s == b.mean_segment_s && a.horizon_s == b.horizon_s &&
                   a.timestep_s == b.timestep_s && a.yaw_rate == b.yaw_rate && a.seed == b.seed &&
                   a.confine == b.confine && a.min_range == b.min_range && a.max_range == b.max_range &&
                   std::abs(a.elevation_margin - b.elevation_margin) <= kAngleTolerance;
        }
    }

    bool LosSource::operator==(const LosSource &o) const
    {
        return kind == o.kind && same_direction(departure, o.departure) &&
               same_direction(arrival, o.arrival) && same_trajectory(trajectory, o.trajectory) &&
               trajectory_csv == o.trajectory_csv && range_dependent_loss == o.range_dependent_loss;
    }

    bool Scenario::operator==(const Scenario &o) const
    {
        const auto &t = tracking;
        const auto &u = o.tracking;
        return budget == o.budget && array.n_y == o.array.n_y && array.n_z == o.array.n_z &&
               codebook == o.codebook && los == o.los && nlos_paths == o.nlos_paths &&
               nlos_level_db == o.nlos_level_db && seed == o.seed && symbols == o.symbols &&
               noiseless == o.noiseless && t.test_ms == u.test_ms && t.block_ms == u.block_ms &&
               t.window_blocks == u.window_blocks && t.horizon_ms == u.horizon_ms &&
               t.data_symbols == u.data_symbols && tracking_symbols == o.tracking_symbols;
    }

    MeasurementModel Scenario::training_model() const { return {budget, symbols, noiseless}; }

    MeasurementModel Scenario::tracking_model() const
    {
        int m = tracking_symbols;
        if (m == 0)
            m = int(std::max(1.0, std::round(tracking.test_ms * 1e-3 * budget.bandwidth_hz)));
        return {budget, m, noiseless};
    }

    ProcedureConfig Scenario::procedure() const
    {
        ProcedureConfig p = tracking;
        p.eta_worst = eta_worst(codebook.n, array.n_y, array.n_z).eta_worst;
        return p;
    }

    void Scenario::validate() const
    {
        budget.validate();
        array.validate();
        codebook.validate();
        if (codebook.array.n_y != array.n_y || codebook.array.n_z != array.n_z)
            throw std::invalid_argument("codebook array differs from the scenario array");
        if (nlos_paths < 0)
            throw std::invalid_argument("nlos_paths must be non-negative");
        if (symbols < 1 || tracking_symbols < 0)
            throw std::invalid_argument("symbol counts must be positive");
        procedure().validate();
        if (los.kind == LosKind::Trajectory && los.trajectory_csv.empty())
            los.trajectory.validate();
    }

    Scenario default_scenario()
    {
        Scenario s;
        s.los.kind = LosKind::Trajectory;
        s.codebook.array = s.array;
        return s;
    }

    std::string scenario_to_json(const Scenario &s)
    {
        const TrajectoryConfig &tc = s.los.trajectory;
        json j;
        j["version"] = kScenarioVersion;
        j["seed"] = s.seed;
        j["budget"] = {{"carrier_hz", s.budget.carrier_hz},
                       {"bandwidth_hz", s.budget.bandwidth_hz},
                       {"tx_power_dbm", s.budget.tx_power_dbm},
                       {"noise_psd_dbm_per_hz", s.budget.noise_psd_dbm_per_hz},
                       {"propagation_loss_db", s.budget.propagation_loss_db},
                       {"distance_m", s.budget.distance_m}};
        j["array"] = {{"n_y", s.array.n_y}, {"n_z", s.array.n_z}};
        j["codebook"] = {{"n", s.codebook.n},
                         {"buffer_width", s.codebook.buffer_width},
                         {"buffer_gain", s.codebook.buffer_gain},
                         {"tikhonov", s.codebook.tikhonov},
                         {"variant", std::string(to_string(s.codebook.variant))}};
        json los;
        los["kind"] = s.los.kind == LosKind::Static ? "static" : "trajectory";
        los["departure"] = direction_json(s.los.departure);
        los["arrival"] = direction_json(s.los.arrival);
        los["range_dependent_loss"] = s.los.range_dependent_loss;
        los["trajectory_csv"] = s.los.trajectory_csv;
        los["trajectory"] = {{"start_m", vec_json(tc.start)},
                             {"anchor_m", vec_json(tc.anchor)},
                             {"max_speed_mps", tc.max_speed},
                             {"mean_segment_s", tc.mean_segment_s},
                             {"horizon_s", tc.horizon_s},
                             {"timestep_s", tc.timestep_s},
                             {"yaw_rate_rad_s", tc.yaw_rate},
                             {"seed", tc.seed},
                             {"confine", tc.confine},
                             {"min_range_m", tc.min_range},
                             {"max_range_m", tc.max_range},
                             {"elevation_margin_deg", deg(tc.elevation_margin)}};
        j["los"] = los;
        j["nlos"] = {{"paths", s.nlos_paths}, {"level_db", s.nlos_level_db}};
        j["measurement"] = {{"symbols", s.symbols}, {"noiseless", s.noiseless}};
        j["tracking"] = {{"test_ms", s.tracking.test_ms},
                         {"block_ms", s.tracking.block_ms},
                         {"window_blocks", s.tracking.window_blocks},
                         {"horizon_ms", s.tracking.horizon_ms},
                         {"data_symbols", s.tracking.data_symbols},
                         {"symbols_per_test", s.tracking_symbols}};
        const double gain = element_gain_db(s.array);
        j["derived"] = {{"noise_power_dbm", std::round(s.budget.noise_power_dbm() * 10.0) / 10.0},
                        {"antenna_gain_db", std::round(gain * 10.0) / 10.0},
                        {"reference_snr_db", std::round(reference_snr_db(s.budget, s.array) * 100.0) / 100.0},
                        {"eta_worst", eta_worst(s.codebook.n, s.array.n_y, s.array.n_z).eta_worst}};
        return j.dump(2) + "\n";
    }

    Scenario scenario_from_json(std::string_view text)
    {
        json j;
        try
        {
            j = json::parse(text);
        }
        catch (const json::parse_error &e)
        {
            throw std::runtime_error(std::string("scenario is not valid JSON: ") + e.what());
        }
        Scenario s = default_scenario();
        try
        {
            const int version = j.value("version", kScenarioVersion);
            if (version != kScenarioVersion)
                throw std::runtime_error("unsupported scenario version " + std::to_string(version));
            read_opt(j, "seed", s.seed);
            if (j.contains("budget"))
            {
                const json &b = j["budget"];
                read_opt(b, "carrier_hz", s.budget.carrier_hz);
                read_opt(b, "bandwidth_hz", s.budget.bandwidth_hz);
                read_opt(b, "tx_power_dbm", s.budget.tx_power_dbm);
                read_opt(b, "noise_psd_dbm_per_hz", s.budget.noise_psd_dbm_per_hz);
                read_opt(b, "propagation_loss_db", s.budget.propagation_loss_db);
                read_opt(b, "distance_m", s.budget.distance_m);
            }
            if (j.contains("array"))
            {
                read_opt(j["array"], "n_y", s.array.n_y);
                read_opt(j["array"], "n_z", s.array.n_z);
            }
            s.codebook.array = s.array;
            if (j.contains("codebook"))
            {
                const json &c = j["codebook"];
                read_opt(c, "n", s.codebook.n);
                read_opt(c, "buffer_width", s.codebook.buffer_width);
                read_opt(c, "buffer_gain", s.codebook.buffer_gain);
                read_opt(c, "tikhonov", s.codebook.tikhonov);
                if (c.contains("variant"))
                    s.codebook.variant = parse_variant(c["variant"].get<std::string>());
            }
            if (j.contains("los"))
            {
                const json &l = j["los"];
                const std::string kind = l.value("kind", std::string("trajectory"));
                if (kind == "static")
                    s.los.kind = LosKind::Static;
                else if (kind == "trajectory")
                    s.los.kind = LosKind::Trajectory;
                else
                    throw std::runtime_error("los.kind must be 'static' or 'trajectory'");
                if (l.contains("departure"))
                    s.los.departure = direction_from(l["departure"]);
                if (l.contains("arrival"))
                    s.los.arrival = direction_from(l["arrival"]);
                read_opt(l, "range_dependent_loss", s.los.range_dependent_loss);
                read_opt(l, "trajectory_csv", s.los.trajectory_csv);
                if (l.contains("trajectory"))
                {
                    const json &t = l["trajectory"];
                    TrajectoryConfig &tc = s.los.trajectory;
                    if (t.contains("start_m"))
                        tc.start = vec_from(t["start_m"]);
                    if (t.contains("anchor_m"))
                        tc.anchor = vec_from(t["anchor_m"]);
                    read_opt(t, "max_speed_mps", tc.max_speed);
                    read_opt(t, "mean_segment_s", tc.mean_segment_s);
                    read_opt(t, "horizon_s", tc.horizon_s);
                    read_opt(t, "timestep_s", tc.timestep_s);
                    read_opt(t, "yaw_rate_rad_s", tc.yaw_rate);
                    read_opt(t, "seed", tc.seed);
                    read_opt(t, "confine", tc.confine);
                    read_opt(t, "min_range_m", tc.min_range);
                    read_opt(t, "max_range_m", tc.max_range);
                    if (t.contains("elevation_margin_deg"))
                        tc.elevation_margin = rad(t["elevation_margin_deg"].get<double>());
                }
            }
            if (j.contains("nlos"))
            {
                read_opt(j["nlos"], "paths", s.nlos_paths);
                read_opt(j["nlos"], "level_db", s.nlos_level_db);
            }
            if (j.contains("measurement"))
            {
                read_opt(j["measurement"], "symbols", s.symbols);
                read_opt(j["measurement"], "noiseless", s.noiseless);
            }
            if (j.contains("tracking"))
            {
                const json &t = j["tracking"];
                read_opt(t, "test_ms", s.tracking.test_ms);
                read_opt(t, "block_ms", s.tracking.block_ms);
                read_opt(t, "window_blocks", s.tracking.window_blocks);
                read_opt(t, "horizon_ms", s.tracking.horizon_ms);
                read_opt(t, "data_symbols", s.tracking.data_symbols);
                read_opt(t, "symbols_per_test", s.tracking_symbols);
            }
        }
        catch (const json::exception &e)
        {
            throw std::runtime_error(std::string("invalid scenario field: ") + e.what());
        }
        s.validate();
        return s;
    }

    Scenario load_scenario(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot open scenario " + path.string());
        std::stringstream ss;
        ss << in.rdbuf();
        return scenario_from_json(ss.str());
    }

    void save_scenario(const Scenario &s, const std::filesystem::path &path)
    {
        std::ofstream out(path);
        if (!out)
            throw std::runtime_error("cannot write scenario " + path.string());
        out << scenario_to_json(s);
        if (!out)
            throw std::runtime_error("failed writing scenario " + path.string());
    }

    std::unique_ptr<ChannelSource> make_channel_source(const Scenario &s,
                                                       const std::filesystem::path &base_dir)
    {
        s.validate();
        Rng rng = make_rng(s.seed, 4, 0);
        const std::complex<double> los_gain(s.budget.los_amplitude(), 0.0);
        std::vector<PathComponent> nlos = sample_nlos(rng, s.nlos_paths, los_gain, s.nlos_level_db);
        if (s.los.kind == LosKind::Static)
        {
            ChannelRealization ch = make_los_channel(s.budget, s.array, s.los.departure, s.los.arrival);
            for (auto &p : nlos)
                ch.paths.push_back(p);
            return std::make_unique<StaticChannelSource>(std::move(ch));
        }
        std::vector<PoseSample> traj;
        if (!s.los.trajectory_csv.empty())
        {
            std::filesystem::path p = s.los.trajectory_csv;
            if (p.is_relative() && !base_dir.empty())
                p = base_dir / p;
            std::ifstream in(p);
            if (!in)
                throw std::runtime_error("cannot open trajectory " + p.string());
            traj = read_trajectory_csv(in);
        }
        else
        {
            traj = generate_trajectory(s.los.trajectory);
        }
        PoseSample alice;
        alice.position = s.los.trajectory.anchor;
        return std::make_unique<TrajectoryChannelSource>(std::move(traj), alice, s.budget, s.array,
                                                         std::move(nlos), s.los.range_dependent_loss);
    }
}
