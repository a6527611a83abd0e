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

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <stdexcept>

namespace qupa
{
    namespace
    {
        struct ScenarioExhausted
        {
        };

        class TimeVaryingProbe final : public LinkProbe
        {
        public:
            TimeVaryingProbe(const ChannelSource &source, MeasurementModel model, Rng &rng,
                             double test_ms, double horizon_ms)
                : LinkProbe(std::move(model), rng), source_(&source), test_ms_(test_ms),
                  horizon_ms_(horizon_ms)
            {
            }

            const LinkEvaluator &link() const override
            {
                if (!link_ || link_t_ != t_)
                {
                    link_.emplace(source_->at(t_));
                    link_t_ = t_;
                }
                return *link_;
            }

            double now() const { return t_; }
            void set_time(double t) { t_ = t; }

        protected:
            void advance(int slots) override
            {
                t_ += double(slots) * test_ms_;
                if (t_ > horizon_ms_ + 1e-9)
                    throw ScenarioExhausted{};
            }

        private:
            const ChannelSource *source_;
            double test_ms_;
            double horizon_ms_;
            double t_ = 0.0;
            mutable std::optional<LinkEvaluator> link_;
            mutable double link_t_ = 0.0;
        };

        const HierarchicalCodebook &upa_book(const QupaCodebook &cb, int upa)
        {
            return cb.at(std::size_t(upa - 1));
        }

        Beamformer narrow_at(const QupaCodebook &cb, const NarrowPosition &pos)
        {
            return upa_book(cb, pos.upa).narrow(pos);
        }

        // Index of the strictly largest value; ties favor the first
        template <typename F>
        std::size_t pick_max(std::size_t count, F &&value)
        {
            std::size_t best = 0;
            double best_v = value(0);
            for (std::size_t i = 1; i < count; ++i)
            {
                const double v = value(i);
                if (v > best_v)
                {
                    best_v = v;
                    best = i;
                }
            }
            return best;
        }

        double upper_gain(const QupaCodebook &cb, const LinkEvaluator &link)
        {
            const PathComponent &los = link.channel().los();
            const int k = owning_upa(los.departure);
            const int m = owning_upa(los.arrival);
            if (k == 0 || m == 0)
                return 0.0;
            return upa_book(cb, k).best_narrow(los.departure).gain *
                   upa_book(cb, m).best_narrow(los.arrival).gain;
        }
    }

    double snr_threshold(double gamma_max_db, double eta_worst)
    {
        if (!(eta_worst > 0.0 && eta_worst <= 1.0))
            throw std::invalid_argument("eta_worst must lie in (0, 1]");
        return gamma_max_db + 40.0 * std::log10(eta_worst);
    }

    PairPosition to_positions(int n, const BeamPair &pair)
    {
        return {narrow_position(n, pair.tx_upa, pair.tx_index), narrow_position(n, pair.rx_upa, pair.rx_index)};
    }

    BeamPair to_beam_pair(int n, const PairPosition &pos)
    {
        return {pos.alice.upa, pos.bob.upa, narrow_index(n, pos.alice), narrow_index(n, pos.bob)};
    }

    std::string_view to_string(ProcedureMode m)
    {
        switch (m)
        {
        case ProcedureMode::Training:
            return "training";
        case ProcedureMode::DataTx:
            return "data";
        case ProcedureMode::Mode2:
            return "mode2";
        case ProcedureMode::Mode1:
            return "mode1";
        }
        return "unknown";
    }

    TrackingOutcome mode1_track(LinkProbe &probe, const QupaCodebook &codebook,
                                const TrackingCodebook &tracking, const PairPosition &previous,
                                double threshold_db)
    {
        const long start = probe.slots();
        const TrackingBeams alice = tracking.beams(previous.alice);
        const TrackingBeams bob = tracking.beams(previous.bob);

        // Step 1: Alice radiates the super-wide beam, Bob searches his neighborhood
        const std::size_t bob_col = pick_max(3, [&](std::size_t c) {
            const double p = probe.forward(alice.super_wide, bob.columns[c]);
            probe.consume(1);
            return p;
        });
        const std::size_t bob_row = pick_max(3, [&](std::size_t r) {
            const double p = probe.forward(alice.super_wide, narrow_at(codebook, bob.candidates[bob_col][r]));
            probe.consume(1);
            return p;
        });
        const NarrowPosition bob_pos = bob.candidates[bob_col][bob_row];
        const Beamformer bob_narrow = narrow_at(codebook, bob_pos);

        // Step 2: Bob radiates his narrow beam, Alice searches her neighborhood
        const std::size_t alice_col = pick_max(3, [&](std::size_t c) {
            const double p = probe.reverse(bob_narrow, alice.columns[c]);
            probe.consume(1);
            return p;
        });
        std::array<double, 3> powers{};
        const std::size_t alice_row = pick_max(3, [&](std::size_t r) {
            powers[r] = probe.reverse(bob_narrow, narrow_at(codebook, alice.candidates[alice_col][r]));
            probe.consume(1);
            return powers[r];
        });

        TrackingOutcome out;
        out.pair = {alice.candidates[alice_col][alice_row], bob_pos};
        out.snr_db = probe.model().snr_db(powers[alice_row]);
        out.slots = probe.slots() - start;
        out.success = out.snr_db >= threshold_db;
        return out;
    }

    LatticePoint extrapolate(int n, LatticePoint older, LatticePoint newer)
    {
        const int width = 4 * n;
        int dc = ((newer.col - older.col) % width + width) % width;
        if (dc > width / 2)
            dc -= width;
        const int row = std::clamp(newer.row + (newer.row - older.row), 0, n - 1);
        return {((newer.col + dc) % width + width) % width, row};
    }

    PairPosition mode2_predict(int n, std::span<const IntervalRecord> history)
    {
        if (history.size() < 2)
            throw std::invalid_argument("mode 2 needs at least two recorded intervals");
        const PairPosition &older = history[history.size() - 2].pair;
        const PairPosition &newer = history.back().pair;
        const auto side = [n](const NarrowPosition &a, const NarrowPosition &b) {
            return from_lattice(n, extrapolate(n, to_lattice(n, a), to_lattice(n, b)));
        };
        return {side(older.alice, newer.alice), side(older.bob, newer.bob)};
    }

    TrackingOutcome mode2_track(LinkProbe &probe, const QupaCodebook &codebook,
                                std::span<const IntervalRecord> history, double threshold_db)
    {
        const long start = probe.slots();
        TrackingOutcome out;
        out.pair = mode2_predict(codebook[0].n(), history);
        const double p = probe.forward(narrow_at(codebook, out.pair.alice), narrow_at(codebook, out.pair.bob));
        probe.consume(1);
        out.snr_db = probe.model().snr_db(p);
        out.slots = probe.slots() - start;
        out.success = out.snr_db >= threshold_db;
        return out;
    }

    void ProcedureConfig::validate() const
    {
        if (!(test_ms > 0.0) || !(block_ms > 0.0) || !(horizon_ms > 0.0))
            throw std::invalid_argument("procedure durations must be positive");
        if (window_blocks < 1 || data_symbols < 1)
            throw std::invalid_argument("window and data symbols must be at least 1");
        if (!(eta_worst > 0.0 && eta_worst <= 1.0))
            throw std::invalid_argument("eta_worst must lie in (0, 1]");
    }

    ProcedureResult run_procedure(const ChannelSource &source, const QupaCodebook &codebook,
                                  const TrackingCodebook &tracking, const MeasurementModel &model,
                                  const ProcedureConfig &cfg, Rng &rng)
    {
        cfg.validate();
        const int n = codebook[0].n();
        if (tracking.n() != n)
            throw std::invalid_argument("tracking codebook and narrow codebook differ in N");

        TimeVaryingProbe probe(source, model, rng, cfg.test_ms, cfg.horizon_ms);
        MeasurementModel data_model = model;
        data_model.symbols = cfg.data_symbols;

        ProcedureResult result;
        ProcedureSummary &sum = result.summary;
        ProcedureState state;
        PairPosition current;
        IntervalRecord interval;
        std::deque<double> window;

        const auto snapshot = [&](ProcedureMode mode, double snr, double threshold) {
            const LinkEvaluator &link = probe.link();
            TimelineRow row;
            row.t_ms = probe.now();
            row.state = mode;
            row.pair = current;
            row.snr_db = snr;
            row.norm_gain = link.los_double_side_gain(narrow_at(codebook, current.alice),
                                                      narrow_at(codebook, current.bob));
            row.upper_gain = upper_gain(codebook, link);
            row.threshold_db = threshold;
            result.timeline.push_back(row);
            return row;
        };

        // The test that selected the pair is the first SNR observation of the interval
        const auto start_interval = [&](const PairPosition &pair, double selected_snr) {
            current = pair;
            interval = IntervalRecord{int(state.history.size()) + 1, pair, selected_snr};
            window.clear();
            state.mode = ProcedureMode::DataTx;
            state.threshold_db = kSnrFloorDb;
        };

        const auto train = [&](double threshold) {
            state.mode = ProcedureMode::Training;
            const double t0 = probe.now();
            const long s0 = probe.slots();
            const std::size_t records = state.history.size();
            const TrainingResult tr = gb_train(probe, codebook, codebook);
            const PairPosition pair = to_positions(n, tr.pair);
            const double snr = tr.measured_snr_db;
            ++sum.trainings;
            sum.training_slots += probe.slots() - s0;
            result.events.push_back({t0, ProcedureMode::Training, probe.slots() - s0, true, snr, threshold, records});
            start_interval(pair, snr);
            snapshot(ProcedureMode::Training, snr, threshold);
        };

        try
        {
            train(kSnrFloorDb);
            while (probe.now() + cfg.block_ms <= cfg.horizon_ms + 1e-9)
            {
                // Data block: one SNR estimate for the pair in use
                const LinkEvaluator &link = probe.link();
                const Beamformer f = narrow_at(codebook, current.alice);
                const Beamformer w = narrow_at(codebook, current.bob);
                const double power = data_model.measure(link.forward(f, w), w.weights.squaredNorm(), rng);
                const double snr = data_model.snr_db(power);
                interval.gamma_max_db = std::max(interval.gamma_max_db, snr);
                state.threshold_db = snr_threshold(interval.gamma_max_db, cfg.eta_worst);
                window.push_back(from_db(snr));
                if (int(window.size()) > cfg.window_blocks)
                    window.pop_front();
                double avg = 0.0;
                for (double v : window)
                    avg += v;
                avg = to_db(avg / double(window.size()));

                const TimelineRow row = snapshot(ProcedureMode::DataTx, snr, state.threshold_db);
                ++sum.data_blocks;
                if (sum.data_blocks == 1 || row.norm_gain < sum.min_norm_gain)
                    sum.min_norm_gain = row.norm_gain;
                if (row.norm_gain < kOutageGain)
                    ++sum.outages;
                if (row.upper_gain <= 0.0 || 20.0 * std::log10(std::max(row.norm_gain, 1e-300) / row.upper_gain) >= -3.0)
                    sum.within_3db += 1.0;
                probe.set_time(probe.now() + cfg.block_ms);

                if (!(avg < state.threshold_db))
                    continue;

                // Interval ends: record it and search for a new pair
                const double threshold = state.threshold_db;
                state.history.push_back(interval);
                const std::size_t records = state.history.size();

                if (state.mode2_ready())
                {
                    state.mode = ProcedureMode::Mode2;
                    const double t0 = probe.now();
                    const TrackingOutcome o = mode2_track(probe, codebook, state.history, threshold);
                    ++sum.mode2_attempts;
                    sum.tracking_slots += o.slots;
                    result.events.push_back({t0, ProcedureMode::Mode2, o.slots, o.success, o.snr_db, threshold, records});
                    if (o.success)
                    {
                        ++sum.mode2_successes;
                        start_interval(o.pair, o.snr_db);
                        snapshot(ProcedureMode::Mode2, o.snr_db, threshold);
                        continue;
                    }
                }

                state.mode = ProcedureMode::Mode1;
                const double t1 = probe.now();
                const TrackingOutcome o = mode1_track(probe, codebook, tracking, state.history.back().pair, threshold);
                ++sum.mode1_attempts;
                sum.tracking_slots += o.slots;
                result.events.push_back({t1, ProcedureMode::Mode1, o.slots, o.success, o.snr_db, threshold, records});
                if (o.success)
                {
                    ++sum.mode1_successes;
                    start_interval(o.pair, o.snr_db);
                    snapshot(ProcedureMode::Mode1, o.snr_db, threshold);
                    continue;
                }
                train(threshold);
            }
        }
        catch (const ScenarioExhausted &)
        {
            sum.incomplete = true;
        }

        if (sum.data_blocks > 0)
            sum.within_3db /= double(sum.data_blocks);
        result.history = state.history;
        return result;
    }
}
