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

#include "qupa/training.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace qupa;

namespace
{
    const QupaCodebook &codebook(int n, int elements)
    {
        static std::map<std::pair<int, int>, QupaCodebook> cache;
        auto it = cache.find({n, elements});
        if (it == cache.end())
        {
            CodebookParams p;
            p.array = {elements, elements, 1};
            p.n = n;
            it = cache.emplace(std::make_pair(n, elements), make_qupa_codebook(build_codebook(p))).first;
        }
        return it->second;
    }

    MeasurementModel noiseless(const LinkBudget &b)
    {
        return {b, 1, true};
    }
}

TEST_SUITE("training")
{
    TEST_CASE("slot counts")
    {
        CHECK(gb_slot_count(4) == 20);
        CHECK(gb_slot_count(16) == 36);
        CHECK(gb_slot_count(32) == 44);
        CHECK(exhaustive_slot_count(4) == 16L * 256);
        CHECK(exhaustive_slot_count(16) == 16L * 65536);
    }

    TEST_CASE("reference SNR of the default budget")
    {
        const LinkBudget b;
        const UpaConfig a{16, 16, 1};
        CHECK(reference_snr_db(b, a) == doctest::Approx(34.6).epsilon(0.003));
        LinkBudget moved = b;
        moved.tx_power_dbm = tx_power_for_reference_snr(b, a, 10.0);
        CHECK(reference_snr_db(moved, a) == doctest::Approx(10.0));
    }

    TEST_CASE("covered directions lie inside the elevation band")
    {
        Rng rng(5);
        for (int t = 0; t < 1000; ++t)
        {
            const Direction d = sample_covered_direction(rng);
            CHECK(std::abs(std::cos(d.elevation)) <= kSqrt2 / 2.0 + 1e-12);
            CHECK(owning_upa(d) != 0);
        }
    }

    TEST_CASE("exhaustive search finds the oracle pair and charges 16 N^4 slots")
    {
        const QupaCodebook &cb = codebook(4, 8);
        const LinkBudget b;
        Rng geo(9);
        for (int t = 0; t < 10; ++t)
        {
            ChannelRealization ch =
                make_los_channel(b, {8, 8, 1}, sample_covered_direction(geo), sample_covered_direction(geo));
            for (auto &p : sample_nlos(geo, 3, ch.paths[0].gain))
                ch.paths.push_back(p);
            const LinkEvaluator link(ch);
            Rng noise(1);
            StaticProbe probe(link, noiseless(b), noise);
            const TrainingResult r = exhaustive_train(probe, cb, cb);
            CHECK(r.measurement_slots == exhaustive_slot_count(4));
            CHECK(r.pair == oracle_pair(link, cb, cb));
            CHECK(r.measured_snr_db > 0.0);
        }
    }

    TEST_CASE("gb_train resolves beam-center directions")
    {
        const QupaCodebook &cb = codebook(16, 16);
        const LinkBudget b;
        Rng pick(3);
        std::uniform_int_distribution<int> upa(1, 4), idx(1, 256);
        for (int t = 0; t < 20; ++t)
        {
            const int ka = upa(pick), kb = upa(pick), ia = idx(pick), ib = idx(pick);
            const Direction dep = narrow_angles(16, ka)[std::size_t(ia - 1)];
            const Direction arr = narrow_angles(16, kb)[std::size_t(ib - 1)];
            const LinkEvaluator link(make_los_channel(b, {16, 16, 1}, dep, arr));
            Rng noise(1);
            const TrainingResult r =
                run_training(TrainingScheme::GridBased, link, cb, cb, noiseless(b), noise);
            CHECK(r.measurement_slots == gb_slot_count(16));
            CHECK(r.pair == BeamPair{ka, kb, ia, ib});
            CHECK(r.aligned);
            CHECK(r.norm_gain == doctest::Approx(1.0).epsilon(1e-9));
            CHECK(r.snr_db == doctest::Approx(reference_snr_db(b, {16, 16, 1})).epsilon(1e-9));
            CHECK(r.measured_snr_db == doctest::Approx(r.snr_db).epsilon(1e-9));
        }
    }

    TEST_CASE("gb_train slot count is independent of the channel")
    {
        const QupaCodebook &cb = codebook(4, 8);
        const LinkBudget b;
        Rng geo(12);
        for (int t = 0; t < 20; ++t)
        {
            const LinkEvaluator link(
                make_los_channel(b, {8, 8, 1}, sample_covered_direction(geo), sample_covered_direction(geo)));
            MeasurementModel noisy{b, 1, false};
            StaticProbe probe(link, noisy, geo);
            CHECK(gb_train(probe, cb, cb).measurement_slots == gb_slot_count(4));
        }
    }

    TEST_CASE("alignment rate rises with SNR")
    {
        const QupaCodebook &cb = codebook(4, 8);
        const std::vector<double> sweep{-20.0, 0.0, 40.0};
        const auto rates = alignment_rate(sweep, cb, LinkBudget{}, 200, 7);
        REQUIRE(rates.size() == 3);
        CHECK(rates[0].rate <= rates[1].rate);
        CHECK(rates[1].rate <= rates[2].rate);
        CHECK(rates[2].rate > 0.8);
        CHECK(rates[0].trials == 200);
    }

    TEST_CASE("weak NLoS paths rarely change the trained pair")
    {
        const QupaCodebook &cb = codebook(8, 8);
        const LinkBudget b;
        const int trials = 500;
        int same = 0;
        for (int t = 0; t < trials; ++t)
        {
            Rng geo = make_rng(21, 1, std::uint64_t(t));
            const ChannelRealization los =
                make_los_channel(b, {8, 8, 1}, sample_covered_direction(geo), sample_covered_direction(geo));
            ChannelRealization mixed = los;
            for (const auto &p : sample_nlos(geo, 3, los.paths[0].gain, -15.0))
                mixed.paths.push_back(p);
            Rng r1(1), r2(1);
            const BeamPair a = run_training(TrainingScheme::GridBased, LinkEvaluator(los), cb, cb, noiseless(b), r1).pair;
            const BeamPair c =
                run_training(TrainingScheme::GridBased, LinkEvaluator(mixed), cb, cb, noiseless(b), r2).pair;
            same += a == c ? 1 : 0;
        }
        MESSAGE("unchanged pairs: ", same, "/", trials);
        CHECK(same >= 495);
    }

    TEST_CASE("probe accounting")
    {
        const LinkBudget b;
        const LinkEvaluator link(make_los_channel(b, {4, 4, 1}, {0.0, kPi / 2.0}, {kPi, kPi / 2.0}));
        Rng rng(1);
        StaticProbe probe(link, noiseless(b), rng);
        const Beamformer f = array_response({4, 4, 1}, {0.0, kPi / 2.0});
        const Beamformer w = array_response({4, 4, 3}, {kPi, kPi / 2.0});
        const double p = probe.forward(f, w);
        CHECK(probe.slots() == 0);
        probe.consume(3);
        CHECK(probe.slots() == 3);
        CHECK(probe.reverse(w, f) == doctest::Approx(p));
        CHECK_THROWS(probe.consume(-1));
    }
}
