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

#ifndef QUPA_SCENARIO_HPP
#define QUPA_SCENARIO_HPP

#include "qupa/channel.hpp"
#include "qupa/codebook.hpp"
#include "qupa/mobility.hpp"
#include "qupa/tracking.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

namespace qupa
{
    inline constexpr int kScenarioVersion = 1;

    enum class LosKind
    {
        Static,
        Trajectory,
    };

    struct LosSource
    {
        LosKind kind = LosKind::Static;
        Direction departure{0.0, kPi / 2.0};
        Direction arrival{kPi, kPi / 2.0};
        TrajectoryConfig trajectory;
        std::string trajectory_csv; // replaces the generated trajectory when set
        bool range_dependent_loss = false;

        bool operator==(const LosSource &other) const;
    };

    struct Scenario
    {
        LinkBudget budget;
        UpaConfig array;
        CodebookParams codebook;
        LosSource los;
        int nlos_paths = 0;
        double nlos_level_db = -15.0;
        std::uint64_t seed = 1;
        int symbols = 1;         // samples per training test
        bool noiseless = false;
        ProcedureConfig tracking; // eta_worst is recomputed from the codebook
        int tracking_symbols = 0; // samples per tracking test, 0 = test duration x bandwidth

        MeasurementModel training_model() const;
        MeasurementModel tracking_model() const;
        ProcedureConfig procedure() const;
        void validate() const;
        bool operator==(const Scenario &other) const;
    };

    // 0.26 THz, 20 GHz, 100 m, -124.6 dB, 25 dBm, 16 x 16 elements, N = 16
    Scenario default_scenario();

    // JSON with a "derived" block (noise power, antenna gain, reference SNR) that parsing ignores
    std::string scenario_to_json(const Scenario &s);
    Scenario scenario_from_json(std::string_view text);

    Scenario load_scenario(const std::filesystem::path &path);
    void save_scenario(const Scenario &s, const std::filesystem::path &path);

    // Channel over time. NLoS paths are drawn once from the scenario seed; a CSV trajectory is
    // resolved relative to base_dir.
    std::unique_ptr<ChannelSource> make_channel_source(const Scenario &s,
                                                       const std::filesystem::path &base_dir = {});
}

#endif
