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

#ifndef QUPA_MOBILITY_HPP
#define QUPA_MOBILITY_HPP

#include "qupa/channel.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace qupa
{
    struct TrajectoryConfig
    {
        Eigen::Vector3d start{100.0, 0.0, 0.0}; // meters
        Eigen::Vector3d anchor{0.0, 0.0, 0.0};  // position of the fixed endpoint
        double max_speed = 100.0 / 3.6;          // m/s
        double mean_segment_s = 3.0;
        double horizon_s = 30.0;
        double timestep_s = 1e-3;
        double yaw_rate = 0.0; // rad/s, 0 keeps the mobile frame fixed
        std::uint64_t seed = 1;

        // Keep the mobile endpoint inside the elevation band seen from the anchor and
        // inside [min_range, max_range]; a step that would leave starts a new segment.
        bool confine = true;
        double min_range = 50.0;
        double max_range = 300.0;
        double elevation_margin = 5.0 * kPi / 180.0;

        int steps() const; // horizon / timestep
        void validate() const;
    };

    struct PoseSample
    {
        double t = 0.0;             // seconds
        Eigen::Vector3d position{0.0, 0.0, 0.0};
        double yaw = 0.0;           // rotation of the mobile frame about z, rad
    };

    // Piecewise-linear motion with exponential segment durations, a uniform direction on the
    // sphere and a uniform speed in (0, max_speed] per segment. steps() + 1 samples.
    std::vector<PoseSample> generate_trajectory(const TrajectoryConfig &cfg);

    // Unit vector of a direction
    Eigen::Vector3d to_vector(const Direction &dir);
    Direction to_direction(const Eigen::Vector3d &v);

    struct LinkAngles
    {
        Direction departure; // at Alice
        Direction arrival;   // at Bob, in Bob's frame
        double range = 0.0;  // meters
    };

    // Throws std::invalid_argument for coincident positions
    LinkAngles pose_to_angles(const PoseSample &alice, const PoseSample &bob);

    // CSV with header t,x,y,z,yaw
    void write_trajectory_csv(std::ostream &out, const std::vector<PoseSample> &samples);
    std::vector<PoseSample> read_trajectory_csv(std::istream &in);

    // Linear interpolation between samples; clamps outside the sampled span
    PoseSample interpolate_pose(const std::vector<PoseSample> &samples, double t);

    // Channel as a function of time in milliseconds
    class ChannelSource
    {
    public:
        virtual ~ChannelSource() = default;
        virtual ChannelRealization at(double t_ms) const = 0;
    };

    class StaticChannelSource final : public ChannelSource
    {
    public:
        explicit StaticChannelSource(ChannelRealization channel) : channel_(std::move(channel)) {}
        ChannelRealization at(double) const override { return channel_; }

    private:
        ChannelRealization channel_;
    };

    // LoS path follows the poses; NLoS paths are fixed. With range_dependent_loss the LoS
    // amplitude scales as budget.distance_m / range (free-space exponent 2 in power).
    class TrajectoryChannelSource final : public ChannelSource
    {
    public:
        TrajectoryChannelSource(std::vector<PoseSample> bob, PoseSample alice, LinkBudget budget,
                                UpaConfig array, std::vector<PathComponent> nlos,
                                bool range_dependent_loss = false);

        ChannelRealization at(double t_ms) const override;
        LinkAngles angles(double t_ms) const;
        const std::vector<PoseSample> &trajectory() const { return bob_; }

    private:
        std::vector<PoseSample> bob_;
        PoseSample alice_;
        LinkBudget budget_;
        UpaConfig array_;
        std::vector<PathComponent> nlos_;
        bool range_dependent_loss_;
    };
}

#endif
