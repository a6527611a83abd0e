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

#include "qupa/mobility.hpp"

#include "qupa/rng.hpp"

#include <Eigen/Geometry>
#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace qupa
{
    namespace
    {
        constexpr int kRedrawAttempts = 256;

        Eigen::Vector3d random_unit(Rng &rng)
        {
            std::uniform_real_distribution<double> az(-kPi, kPi);
            std::uniform_real_distribution<double> cz(-1.0, 1.0);
            const double z = cz(rng);
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double a = az(rng);
            return {r * std::cos(a), r * std::sin(a), z};
        }

        bool inside(const TrajectoryConfig &cfg, const Eigen::Vector3d &p)
        {
            const Eigen::Vector3d d = p - cfg.anchor;
            const double range = d.norm();
            if (range < cfg.min_range || range > cfg.max_range)
                return false;
            const double el = std::acos(std::clamp(d.z() / range, -1.0, 1.0));
            return el >= kPi / 4.0 + cfg.elevation_margin && el <= 3.0 * kPi / 4.0 - cfg.elevation_margin;
        }
    }

    int TrajectoryConfig::steps() const { return int(std::llround(horizon_s / timestep_s)); }

    void TrajectoryConfig::validate() const
    {
        if (!(max_speed >= 0.0) || !std::isfinite(max_speed))
            throw std::invalid_argument("max_speed must be finite and non-negative");
        if (!(mean_segment_s > 0.0) || !(horizon_s > 0.0) || !(timestep_s > 0.0))
            throw std::invalid_argument("segment, horizon and timestep durations must be positive");
        const double ratio = horizon_s / timestep_s;
        if (std::abs(ratio - std::round(ratio)) > 1e-6 * std::max(1.0, ratio))
            throw std::invalid_argument("horizon must be an integer number of timesteps");
        if (!start.allFinite() || !anchor.allFinite() || !std::isfinite(yaw_rate))
            throw std::invalid_argument("trajectory positions and yaw rate must be finite");
        if (confine)
        {
            if (!(min_range >= 0.0) || !(max_range > min_range))
                throw std::invalid_argument("confinement needs 0 <= min_range < max_range");
            if (!(elevation_margin >= 0.0) || elevation_margin >= kPi / 4.0)
                throw std::invalid_argument("elevation margin must lie in [0, pi/4)");
            if (!inside(*this, start))
                throw std::invalid_argument("start position lies outside the confinement region");
        }
    }

    std::vector<PoseSample> generate_trajectory(const TrajectoryConfig &cfg)
    {
        cfg.validate();
        Rng rng(derive_seed(cfg.seed, 0x7a11, 0));
        std::exponential_distribution<double> segment(1.0 / cfg.mean_segment_s);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        const int steps = cfg.steps();
        std::vector<PoseSample> out;
        out.reserve(std::size_t(steps) + 1);
        Eigen::Vector3d pos = cfg.start;
        Eigen::Vector3d heading = random_unit(rng);
        double speed = cfg.max_speed * (1.0 - unit(rng));
        double segment_end = segment(rng);
        out.push_back({0.0, pos, 0.0});
        for (int i = 1; i <= steps; ++i)
        {
            const double t = double(i) * cfg.timestep_s;
            if (t > segment_end)
            {
                heading = random_unit(rng);
                speed = cfg.max_speed * (1.0 - unit(rng));
                segment_end = t + segment(rng);
            }
            Eigen::Vector3d next = pos + heading * speed * cfg.timestep_s;
            if (cfg.confine && !inside(cfg, next))
            {
                bool moved = false;
                for (int attempt = 0; attempt < kRedrawAttempts && !moved; ++attempt)
                {
                    heading = random_unit(rng);
                    next = pos + heading * speed * cfg.timestep_s;
                    moved = inside(cfg, next);
                }
                segment_end = t + segment(rng);
                if (!moved)
                    next = pos;
            }
            pos = next;
            out.push_back({t, pos, cfg.yaw_rate * t});
        }
        return out;
    }

    Eigen::Vector3d to_vector(const Direction &dir)
    {
        const double s = std::sin(dir.elevation);
        return {s * std::cos(dir.azimuth), s * std::sin(dir.azimuth), std::cos(dir.elevation)};
    }

    Direction to_direction(const Eigen::Vector3d &v)
    {
        const double r = v.norm();
        if (!(r > 0.0))
            throw std::invalid_argument("cannot take the direction of a zero vector");
        return {std::atan2(v.y(), v.x()), std::acos(std::clamp(v.z() / r, -1.0, 1.0))};
    }

    LinkAngles pose_to_angles(const PoseSample &alice, const PoseSample &bob)
    {
        const Eigen::Vector3d d = bob.position - alice.position;
        if (!(d.norm() > 0.0))
            throw std::invalid_argument("pose_to_angles: coincident positions");
        const Eigen::Matrix3d alice_frame =
            Eigen::AngleAxisd(-alice.yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
        const Eigen::Matrix3d bob_frame =
            Eigen::AngleAxisd(-bob.yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
        return {to_direction(alice_frame * d), to_direction(bob_frame * (-d)), d.norm()};
    }

    void write_trajectory_csv(std::ostream &out, const std::vector<PoseSample> &samples)
    {
        out << "t,x,y,z,yaw\n";
        for (const auto &s : samples)
            out << fmt::format("{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}\n", s.t, s.position.x(),
                               s.position.y(), s.position.z(), s.yaw);
    }

    std::vector<PoseSample> read_trajectory_csv(std::istream &in)
    {
        std::string line;
        if (!std::getline(in, line))
            throw std::runtime_error("trajectory CSV is empty");
        if (line.rfind("t,x,y,z", 0) != 0)
            throw std::runtime_error("trajectory CSV must start with the header t,x,y,z,yaw");
        std::vector<PoseSample> out;
        int row = 1;
        while (std::getline(in, line))
        {
            ++row;
            if (line.empty())
                continue;
            std::stringstream ss(line);
            std::string cell;
            std::vector<double> v;
            while (std::getline(ss, cell, ','))
            {
                try
                {
                    v.push_back(std::stod(cell));
                }
                catch (const std::exception &)
                {
                    throw std::runtime_error(fmt::format("trajectory CSV row {}: bad number '{}'", row, cell));
                }
            }
            if (v.size() != 4 && v.size() != 5)
                throw std::runtime_error(fmt::format("trajectory CSV row {}: expected 5 columns", row));
            PoseSample s;
            s.t = v[0];
            s.position = {v[1], v[2], v[3]};
            s.yaw = v.size() == 5 ? v[4] : 0.0;
            if (!out.empty() && !(s.t > out.back().t))
                throw std::runtime_error(fmt::format("trajectory CSV row {}: time must increase", row));
            out.push_back(s);
        }
        if (out.empty())
            throw std::runtime_error("trajectory CSV has no samples");
        return out;
    }

    PoseSample interpolate_pose(const std::vector<PoseSample> &samples, double t)
    {
        if (samples.empty())
            throw std::invalid_argument("empty trajectory");
        if (t <= samples.front().t)
            return samples.front();
        if (t >= samples.back().t)
            return samples.back();
        const auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                         [](double x, const PoseSample &s) { return x < s.t; });
        const PoseSample &b = *it;
        const PoseSample &a = *(it - 1);
        const double w = (t - a.t) / (b.t - a.t);
        return {t, a.position + w * (b.position - a.position), a.yaw + w * (b.yaw - a.yaw)};
    }

    TrajectoryChannelSource::TrajectoryChannelSource(std::vector<PoseSample> bob, PoseSample alice,
                                                     LinkBudget budget, UpaConfig array,
                                                     std::vector<PathComponent> nlos,
                                                     bool range_dependent_loss)
        : bob_(std::move(bob)), alice_(alice), budget_(budget), array_(array), nlos_(std::move(nlos)),
          range_dependent_loss_(range_dependent_loss)
    {
        if (bob_.empty())
            throw std::invalid_argument("trajectory channel needs at least one pose");
        budget_.validate();
        array_.validate();
    }

    LinkAngles TrajectoryChannelSource::angles(double t_ms) const
    {
        return pose_to_angles(alice_, interpolate_pose(bob_, t_ms / 1000.0));
    }

    ChannelRealization TrajectoryChannelSource::at(double t_ms) const
    {
        const LinkAngles a = angles(t_ms);
        ChannelRealization ch = make_los_channel(budget_, array_, a.departure, a.arrival);
        if (range_dependent_loss_)
            ch.paths[0].gain *= budget_.distance_m / a.range;
        for (const auto &p : nlos_)
            ch.paths.push_back(p);
        return ch;
    }
}
