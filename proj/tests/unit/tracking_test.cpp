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

#include "qupa/tracking.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

using namespace qupa;

namespace
{
    constexpr int kN = 8;

    struct Books
    {
        std::shared_ptr<const WideBeamSynthesizer> synth;
        QupaCodebook narrow;
        std::unique_ptr<TrackingCodebook> tracking;
    };

    Books &books()
    {
        static Books b = [] {
            Books out;
            CodebookParams p;
            p.array = {8, 8, 1};
            p.n = kN;
            out.synth = std::make_shared<const WideBeamSynthesizer>(p.array, kN);
            out.narrow = make_qupa_codebook(build_codebook(p, out.synth.get()));
            out.tracking = std::make_unique<TrackingCodebook>(out.synth, 1, 0.5);
            return out;
        }();
        return b;
    }

    Direction center(const NarrowPosition &p)
    {
        return narrow_direction(kN, p.upa, p.row, p.col);
    }

    NarrowPosition shifted(const NarrowPosition &p, int dcol, int drow)
    {
        LatticePoint q = to_lattice(kN, p);
        q.col += dcol;
        q.row += drow;
        return from_lattice(kN, q);
    }

    LinkEvaluator los_link(const Direction &dep, const Direction &arr)
    {
        return LinkEvaluator(make_los_channel(LinkBudget{}, {8, 8, 1}, dep, arr));
    }

    double pair_power(const LinkEvaluator &link, const PairPosition &p)
    {
        const auto &cb = books().narrow;
        return std::norm(link.forward(cb[std::size_t(p.alice.upa - 1)].narrow(p.alice),
                                      cb[std::size_t(p.bob.upa - 1)].narrow(p.bob)));
    }

    // Moves the LoS one lattice column per interval on both sides
    class DriftSource final : public ChannelSource
    {
    public:
        DriftSource(NarrowPosition alice, NarrowPosition bob, double period_ms)
            : alice_(alice), bob_(bob), period_ms_(period_ms)
        {
        }
        ChannelRealization at(double t_ms) const override
        {
            const int step = int(std::floor(t_ms / period_ms_));
            return make_los_channel(LinkBudget{}, {8, 8, 1}, center(shifted(alice_, step, 0)),
                                    center(shifted(bob_, -step, 0)));
        }

    private:
        NarrowPosition alice_, bob_;
        double period_ms_;
    };
}

TEST_SUITE("tracking")
{
    TEST_CASE("threshold values")
    {
        CHECK(snr_threshold(20.0, 1.0) == doctest::Approx(20.0));
        CHECK(snr_threshold(20.0, 0.652) == doctest::Approx(12.57).epsilon(1e-3));
        CHECK_THROWS_AS(snr_threshold(20.0, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(snr_threshold(20.0, 1.5), std::invalid_argument);
    }

    TEST_CASE("edge-of-both-beams SNR equals the centered SNR times eta^4")
    {
        const int n = 16;
        CodebookParams p;
        p.array = {16, 16, 1};
        p.n = n;
        const QupaCodebook cb = make_qupa_codebook(build_codebook(p));
        const double eta = eta_worst(n, 16, 16).eta_worst;
        const LinkBudget b;
        const NarrowPosition a{1, 8, 8}, c{3, 8, 8};
        const Beamformer f = cb[0].narrow(a), w = cb[2].narrow(c);
        const VhPoint va = cb[0].narrow_vh()[std::size_t(narrow_index(n, a) - 1)];
        const VhPoint vc = cb[2].narrow_vh()[std::size_t(narrow_index(n, c) - 1)];
        // corner of each beam's cell in the (V, H) plane
        const double dv = 1.0 / double(n) / kSqrt2, dh = 1.0 / double(n) / kSqrt2;
        const Direction dep = from_vh(1, va.v + dv, va.h + dh);
        const Direction arr = from_vh(3, vc.v + dv, vc.h + dh);
        const auto snr = [&](const Direction &d, const Direction &r) {
            return snr_db_from_response(b, LinkEvaluator(make_los_channel(b, p.array, d, r)).forward(f, w));
        };
        const double centered = snr(from_vh(1, va.v, va.h), from_vh(3, vc.v, vc.h));
        const double edge = snr(dep, arr);
        CHECK(std::abs(edge - (centered + 40.0 * std::log10(eta))) <= 0.1);
    }

    TEST_CASE("extrapolation on the lattice")
    {
        CHECK(extrapolate(kN, {3, 2}, {4, 3}) == LatticePoint{5, 4});
        CHECK(extrapolate(kN, {4, 3}, {4, 3}) == LatticePoint{4, 3});
        CHECK(extrapolate(kN, {1, 2}, {0, 2}) == LatticePoint{4 * kN - 1, 2});
        CHECK(extrapolate(kN, {4 * kN - 1, 2}, {0, 2}) == LatticePoint{1, 2});
        CHECK(extrapolate(kN, {2, kN - 2}, {2, kN - 1}) == LatticePoint{2, kN - 1});
        CHECK(extrapolate(kN, {2, 1}, {2, 0}) == LatticePoint{2, 0});
    }

    TEST_CASE("stationary history predicts the same pair")
    {
        const PairPosition p{{1, 3, 4}, {3, 5, 6}};
        const std::vector<IntervalRecord> h{{1, p, 10.0}, {2, p, 10.0}};
        CHECK(mode2_predict(kN, h) == p);
        CHECK_THROWS_AS(mode2_predict(kN, std::span(h).first(1)), std::invalid_argument);
    }

    TEST_CASE("mode 1 keeps a pair whose direction did not move")
    {
        const PairPosition prev{{2, 4, 5}, {4, 3, 3}};
        const LinkEvaluator link = los_link(center(prev.alice), center(prev.bob));
        Rng rng(1);
        StaticProbe probe(link, {LinkBudget{}, 1, true}, rng);
        const TrackingOutcome o = mode1_track(probe, books().narrow, *books().tracking, prev, 0.0);
        CHECK(o.pair == prev);
        CHECK(o.slots == 12);
        CHECK(probe.slots() == 12);
        CHECK(o.success);
    }

    TEST_CASE("mode 1 follows a diagonal step")
    {
        const PairPosition prev{{1, 4, 8}, {3, 5, 1}};
        const PairPosition next{shifted(prev.alice, 1, 1), shifted(prev.bob, -1, -1)};
        CHECK(next.alice.upa == 2);
        CHECK(next.bob.upa == 2);
        const LinkEvaluator link = los_link(center(next.alice), center(next.bob));
        Rng rng(1);
        StaticProbe probe(link, {LinkBudget{}, 1, true}, rng);
        const TrackingOutcome o = mode1_track(probe, books().narrow, *books().tracking, prev, 0.0);
        CHECK(o.pair == next);
        CHECK(o.slots == 12);
    }

    TEST_CASE("mode 1 returns the best of the 81 candidates for grid-aligned motion")
    {
        const auto &cb = books().narrow;
        const std::vector<PairPosition> starts{{{1, 4, 4}, {3, 5, 5}}, {{1, 1, 8}, {4, 8, 1}}, {{2, 6, 1}, {2, 2, 8}}};
        int trials = 0, agree = 0;
        for (const auto &prev : starts)
        {
            const TrackingBeams a = books().tracking->beams(prev.alice);
            const TrackingBeams b = books().tracking->beams(prev.bob);
            for (const auto &ac : a.candidates)
                for (const auto &ap : ac)
                    for (const auto &bc : b.candidates)
                        for (const auto &bp : bc)
                        {
                            const LinkEvaluator link = los_link(center(ap), center(bp));
                            Rng noise(1);
                            StaticProbe probe(link, {LinkBudget{}, 1, true}, noise);
                            const TrackingOutcome o = mode1_track(probe, cb, *books().tracking, prev, 0.0);
                            ++trials;
                            agree += o.pair == PairPosition{ap, bp} ? 1 : 0;
                            CHECK(o.slots == 12);
                        }
        }
        CHECK(trials == 3 * 81);
        CHECK(agree == trials);
    }

    TEST_CASE("mode 1 off the grid stays within the worst-case bound of the 81-candidate argmax")
    {
        Rng rng(42);
        std::uniform_int_distribution<int> upa(1, 4), pos(1, kN);
        std::uniform_real_distribution<double> off(-1.5, 1.5);
        const auto &cb = books().narrow;
        const double eta = eta_worst(kN, 8, 8).eta_worst;
        int agree = 0;
        double worst = 1.0;
        const int trials = 200;
        for (int t = 0; t < trials; ++t)
        {
            const PairPosition prev{{upa(rng), pos(rng), pos(rng)}, {upa(rng), pos(rng), pos(rng)}};
            // LoS anywhere in the 3 x 3 neighborhood of each side
            const auto jitter = [&](const NarrowPosition &p) {
                const VhPoint c = cb[std::size_t(p.upa - 1)].narrow_vh()[std::size_t(narrow_index(kN, p) - 1)];
                const double step = kSqrt2 / double(kN);
                return from_vh(p.upa, std::clamp(c.v + off(rng) * step, -0.7, 0.7),
                               std::clamp(c.h + off(rng) * step, -0.7, 0.7));
            };
            const LinkEvaluator link = los_link(jitter(prev.alice), jitter(prev.bob));
            Rng noise(1);
            StaticProbe probe(link, {LinkBudget{}, 1, true}, noise);
            const TrackingOutcome o = mode1_track(probe, cb, *books().tracking, prev, 0.0);
            CHECK(o.slots == 12);

            const TrackingBeams a = books().tracking->beams(prev.alice);
            const TrackingBeams b = books().tracking->beams(prev.bob);
            double best = 0.0;
            for (const auto &ac : a.candidates)
                for (const auto &ap : ac)
                    for (const auto &bc : b.candidates)
                        for (const auto &bp : bc)
                            best = std::max(best, pair_power(link, {ap, bp}));
            const double ratio = best > 0.0 ? pair_power(link, o.pair) / best : 1.0;
            agree += ratio >= 1.0 - 1e-9 ? 1 : 0;
            worst = std::min(worst, ratio);
        }
        MESSAGE("off-grid agreement with the 81-candidate argmax: ", agree, " of ", trials, ", worst power ratio ",
                worst);
        CHECK(worst >= std::pow(eta, 4.0));
    }

    TEST_CASE("mode 2 follows a steady drift with one slot")
    {
        const PairPosition older{{1, 4, 3}, {3, 4, 6}};
        const PairPosition newer{shifted(older.alice, 1, 0), shifted(older.bob, -1, 0)};
        const PairPosition next{shifted(newer.alice, 1, 0), shifted(newer.bob, -1, 0)};
        const std::vector<IntervalRecord> h{{1, older, 30.0}, {2, newer, 30.0}};
        const LinkEvaluator link = los_link(center(next.alice), center(next.bob));
        Rng rng(1);
        StaticProbe probe(link, {LinkBudget{}, 1, true}, rng);
        const TrackingOutcome o = mode2_track(probe, books().narrow, h, 20.0);
        CHECK(o.pair == next);
        CHECK(o.slots == 1);
        CHECK(o.success);
    }

    TEST_CASE("abrupt turn: mode 2 fails and mode 1 recovers in 13 slots")
    {
        const PairPosition older{{1, 4, 3}, {3, 4, 6}};
        const PairPosition newer{shifted(older.alice, 1, 0), shifted(older.bob, -1, 0)};
        // motion turns to elevation instead of continuing in azimuth
        const PairPosition actual{shifted(newer.alice, 0, 1), shifted(newer.bob, 0, 1)};
        const std::vector<IntervalRecord> h{{1, older, 30.0}, {2, newer, 30.0}};
        const LinkEvaluator link = los_link(center(actual.alice), center(actual.bob));
        Rng rng(1);
        StaticProbe probe(link, {LinkBudget{}, 1, true}, rng);
        const double matched = snr_db_from_response(LinkBudget{}, link.forward(books().narrow[0].narrow(actual.alice),
                                                                                books().narrow[2].narrow(actual.bob)));
        const double threshold = snr_threshold(matched, eta_worst(kN, 8, 8).eta_worst);
        const TrackingOutcome m2 = mode2_track(probe, books().narrow, h, threshold);
        CHECK_FALSE(m2.success);
        const TrackingOutcome m1 = mode1_track(probe, books().narrow, *books().tracking, h.back().pair, threshold);
        CHECK(m1.success);
        CHECK(m1.pair == actual);
        CHECK(m2.slots + m1.slots == 13);
        CHECK(probe.slots() == 13);
    }

    TEST_CASE("static endpoints need one training and no tracking")
    {
        const PairPosition p{{1, 4, 4}, {3, 5, 5}};
        StaticChannelSource src(make_los_channel(LinkBudget{}, {8, 8, 1}, center(p.alice), center(p.bob)));
        ProcedureConfig cfg;
        cfg.horizon_ms = 2000.0;
        cfg.eta_worst = eta_worst(kN, 8, 8).eta_worst;
        Rng rng(3);
        const ProcedureResult r =
            run_procedure(src, books().narrow, *books().tracking, {LinkBudget{}, 20000, false}, cfg, rng);
        CHECK(r.summary.trainings == 1);
        CHECK(r.events.size() == 1);
        CHECK(r.summary.mode1_attempts + r.summary.mode2_attempts == 0);
        CHECK(r.summary.training_slots == gb_slot_count(kN));
        CHECK(r.summary.outages == 0);
        CHECK_FALSE(r.summary.incomplete);
        CHECK(r.summary.data_blocks == int((2000.0 - gb_slot_count(kN)) / 10.0));
    }

    TEST_CASE("procedure invariants on a drifting channel")
    {
        const PairPosition start{{1, 4, 2}, {3, 4, 7}};
        DriftSource src(start.alice, start.bob, 200.0);
        ProcedureConfig cfg;
        cfg.horizon_ms = 6000.0;
        cfg.eta_worst = eta_worst(kN, 8, 8).eta_worst;
        Rng rng(5);
        const ProcedureResult r =
            run_procedure(src, books().narrow, *books().tracking, {LinkBudget{}, 20000, false}, cfg, rng);

        for (const auto &e : r.events)
        {
            if (e.kind == ProcedureMode::Mode2)
            {
                CHECK(e.history >= 2);
                CHECK(e.slots == 1);
            }
            if (e.kind == ProcedureMode::Mode1)
                CHECK(e.slots == 12);
            if (e.kind != ProcedureMode::Training && e.success)
                CHECK(e.snr_db >= e.threshold_db);
        }
        // threshold never decreases between data blocks of one interval
        double last = kSnrFloorDb;
        for (const auto &row : r.timeline)
        {
            if (row.state != ProcedureMode::DataTx)
            {
                last = kSnrFloorDb;
                continue;
            }
            CHECK(row.threshold_db >= last);
            last = row.threshold_db;
        }
        CHECK(r.summary.mode2_attempts > 0);
        CHECK(double(r.summary.mode2_successes) > 0.5 * double(r.summary.mode2_attempts));
        long slots = 0;
        for (const auto &e : r.events)
            if (e.kind != ProcedureMode::Training)
                slots += e.slots;
        CHECK(slots == r.summary.tracking_slots);
    }

    TEST_CASE("horizon inside a search marks the run incomplete")
    {
        const PairPosition p{{1, 4, 4}, {3, 5, 5}};
        StaticChannelSource src(make_los_channel(LinkBudget{}, {8, 8, 1}, center(p.alice), center(p.bob)));
        ProcedureConfig cfg;
        cfg.horizon_ms = 10.0;
        Rng rng(3);
        const ProcedureResult r =
            run_procedure(src, books().narrow, *books().tracking, {LinkBudget{}, 1, true}, cfg, rng);
        CHECK(r.summary.incomplete);
        CHECK(r.summary.data_blocks == 0);
    }

    TEST_CASE("pair conversions")
    {
        const BeamPair bp{2, 4, 17, 33};
        CHECK(to_beam_pair(kN, to_positions(kN, bp)) == bp);
        CHECK(to_string(ProcedureMode::Mode2) == "mode2");
    }
}
