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

#ifndef QUPA_EXPERIMENT_HPP
#define QUPA_EXPERIMENT_HPP

#include "qupa/codebook.hpp"
#include "qupa/scenario.hpp"
#include "qupa/tracking.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qupa
{
    inline constexpr int kOutputSchemaVersion = 1;

    enum class ExperimentId
    {
        Patterns,
        SnrVsN,
        WorstcaseVsTests,
        AlignVsSnr,
        TrackingTrace,
    };

    std::string_view to_string(ExperimentId id);
    ExperimentId parse_experiment(std::string_view name);

    struct ExperimentConfig
    {
        ExperimentId id = ExperimentId::SnrVsN;
        Scenario scenario = default_scenario();
        std::vector<int> ns{4, 8, 16};
        std::vector<CodebookVariant> variants{CodebookVariant::Proposed, CodebookVariant::StrictBenchmark,
                                              CodebookVariant::UniformReal, CodebookVariant::UniformVirtual};
        std::vector<double> snr_sweep_db{-10.0, 0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0};
        std::vector<int> pattern_stages{0, 1, 2, 3};
        int pattern_points = 91; // per axis over the sector
        int trials = 500;
        int max_tests = 10000;
        bool noiseless = true; // snr_vs_n and worstcase_vs_tests
        std::uint64_t seed = 1;
        std::filesystem::path out_dir = ".";
        std::filesystem::path cache_dir; // empty disables the codebook cache

        void validate() const;
    };

    // Codebooks of one parameter set, shared by training and tracking
    struct CodebookBundle
    {
        std::shared_ptr<const WideBeamSynthesizer> synth;
        HierarchicalCodebook local;
        QupaCodebook qupa;
    };

    // Loads from cache_dir when possible; builds (with a warning on stderr when a cache was
    // requested) otherwise
    CodebookBundle load_bundle(const CodebookParams &params, const std::filesystem::path &cache_dir);

    // Gain of every codeword of the listed stages over a points x points grid of the UPA-1
    // sector. Columns: stage,index,azimuth_deg,elevation_deg,gain
    void write_patterns(std::ostream &out, const HierarchicalCodebook &cb, const std::vector<int> &stages,
                        int points);

    struct SnrVsNRow
    {
        int n = 0;
        CodebookVariant variant = CodebookVariant::Proposed;
        int trials = 0;
        double mean_snr_db = 0.0;
        double min_snr_db = 0.0;
        double worst_case_snr_db = 0.0; // matched SNR + 40 log10(eta_worst)
        double mean_gain = 0.0;         // LoS normalized double-side gain
        double min_gain = 0.0;
    };

    std::vector<SnrVsNRow> snr_vs_n(const ExperimentConfig &cfg);

    struct WorstcasePoint
    {
        int tests = 0;
        double running_min_gain = 1.0; // one-side normalized gain of Alice's selected beam
        double eta_worst = 0.0;
    };

    // Running minimum at 1, 2, 5, 10, 20, 50, ... tests and at max_tests, for N = ns.back()
    std::vector<WorstcasePoint> worstcase_vs_tests(const ExperimentConfig &cfg);

    struct AlignRow
    {
        CodebookVariant variant = CodebookVariant::Proposed;
        AlignmentPoint point;
    };

    std::vector<AlignRow> align_vs_snr(const ExperimentConfig &cfg);

    // Runs the procedure for the scenario at N = ns.back()
    ProcedureResult tracking_trace(const ExperimentConfig &cfg);

    void write_timeline_csv(std::ostream &out, const std::vector<TimelineRow> &timeline);
    std::string summary_json(const ProcedureResult &result);

    // Runs the experiment and writes <id>.csv (plus <id>.json where a summary exists) into
    // out_dir. Returns the written paths.
    std::vector<std::filesystem::path> run_experiment(const ExperimentConfig &cfg);
}

#endif
