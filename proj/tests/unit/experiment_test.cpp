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

#include "qupa/experiment.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qupa;

namespace
{
    ExperimentConfig small_config(ExperimentId id, const char *dir)
    {
        ExperimentConfig cfg;
        cfg.id = id;
        cfg.scenario.array = {8, 8, 1};
        cfg.scenario.codebook.array = cfg.scenario.array;
        cfg.ns = {2, 4};
        cfg.variants = {CodebookVariant::Proposed};
        cfg.trials = 60;
        cfg.max_tests = 200;
        cfg.pattern_points = 9;
        cfg.snr_sweep_db = {0.0, 30.0};
        cfg.out_dir = std::filesystem::temp_directory_path() / "qupa_unit" / "experiment" / dir;
        std::filesystem::remove_all(cfg.out_dir);
        return cfg;
    }

    std::string slurp(const std::filesystem::path &p)
    {
        std::ifstream f(p, std::ios::binary);
        std::ostringstream s;
        s << f.rdbuf();
        return s.str();
    }
}

TEST_SUITE("experiment")
{
    TEST_CASE("experiment names")
    {
        for (auto id : {ExperimentId::Patterns, ExperimentId::SnrVsN, ExperimentId::WorstcaseVsTests,
                        ExperimentId::AlignVsSnr, ExperimentId::TrackingTrace})
            CHECK(parse_experiment(to_string(id)) == id);
        CHECK_THROWS_AS(parse_experiment("nope"), std::invalid_argument);
    }

    TEST_CASE("SNR grows with the number of narrow beams")
    {
        const ExperimentConfig cfg = small_config(ExperimentId::SnrVsN, "snr");
        const auto rows = snr_vs_n(cfg);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].n == 2);
        CHECK(rows[1].mean_snr_db > rows[0].mean_snr_db);
        for (const auto &r : rows)
        {
            CHECK(r.min_snr_db <= r.mean_snr_db);
            CHECK(r.min_gain <= r.mean_gain);
            CHECK(r.mean_gain <= 1.0);
            CHECK(r.worst_case_snr_db < reference_snr_db(cfg.scenario.budget, cfg.scenario.array));
        }
    }

    TEST_CASE("running minimum never increases")
    {
        const ExperimentConfig cfg = small_config(ExperimentId::WorstcaseVsTests, "worst");
        const auto pts = worstcase_vs_tests(cfg);
        REQUIRE(!pts.empty());
        CHECK(pts.front().tests == 1);
        CHECK(pts.back().tests == cfg.max_tests);
        for (std::size_t i = 1; i < pts.size(); ++i)
        {
            CHECK(pts[i].tests > pts[i - 1].tests);
            CHECK(pts[i].running_min_gain <= pts[i - 1].running_min_gain);
        }
    }

    TEST_CASE("pattern file layout")
    {
        HierarchicalCodebook cb = build_codebook([] {
            CodebookParams p;
            p.array = {8, 8, 1};
            p.n = 4;
            return p;
        }());
        std::ostringstream out;
        write_patterns(out, cb, {0, 1}, 5);
        std::istringstream in(out.str());
        std::string line;
        std::getline(in, line);
        CHECK(line == "stage,index,azimuth_deg,elevation_deg,gain");
        int rows = 0;
        while (std::getline(in, line))
            ++rows;
        CHECK(rows == (1 + 2) * 25);
    }

    TEST_CASE("runs are byte-identical for a fixed seed")
    {
        for (auto id : {ExperimentId::SnrVsN, ExperimentId::AlignVsSnr, ExperimentId::Patterns})
        {
            ExperimentConfig a = small_config(id, "run_a");
            ExperimentConfig b = small_config(id, "run_b");
            const auto pa = run_experiment(a);
            const auto pb = run_experiment(b);
            REQUIRE(pa.size() == pb.size());
            for (std::size_t i = 0; i < pa.size(); ++i)
            {
                const std::string body = slurp(pa[i]);
                CHECK(body.rfind("# schema: ", 0) == 0);
                CHECK(body == slurp(pb[i]));
            }
        }
    }

    TEST_CASE("tracking trace writes a timeline and a summary")
    {
        ExperimentConfig cfg = small_config(ExperimentId::TrackingTrace, "trace");
        cfg.scenario.tracking.horizon_ms = 500.0;
        cfg.scenario.los.trajectory.horizon_s = 1.0;
        const auto paths = run_experiment(cfg);
        REQUIRE(paths.size() == 2);
        const std::string csv = slurp(paths[0]);
        CHECK(csv.find("t_ms,state,alice_upa") != std::string::npos);
        CHECK(slurp(paths[1]).find("\"training\"") != std::string::npos);
    }
}
