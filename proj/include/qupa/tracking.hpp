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

#ifndef QUPA_TRACKING_HPP
#define QUPA_TRACKING_HPP

#include "qupa/codebook.hpp"
#include "qupa/mobility.hpp"
#include "qupa/training.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace qupa
{
    // gamma_max + 40 log10(eta); throws unless eta lies in (0, 1]
    double snr_threshold(double gamma_max_db, double eta_worst);

    struct PairPosition
    {
        NarrowPosition alice;
        NarrowPosition bob;

        bool operator==(const PairPosition &) const = default;
    };

    PairPosition to_positions(int n, const BeamPair &pair);
    BeamPair to_beam_pair(int n, const PairPosition &pos);

    struct IntervalRecord
    {
        int index = 0;
        PairPosition pair;
        double gamma_max_db = kSnrFloorDb; // running max of the measured SNR
    };

    enum class ProcedureMode
    {
        Training,
        DataTx,
        Mode2,
        Mode1,
    };

    std::string_view to_string(ProcedureMode m);

    struct ProcedureState
    {
        ProcedureMode mode = ProcedureMode::Training;
        std::vector<IntervalRecord> history; // most recent last
        double threshold_db = kSnrFloorDb;

        bool mode2_ready() const { return history.size() >= 2; }
    };

    struct TrackingOutcome
    {
        PairPosition pair;
        double snr_db = kSnrFloorDb; // measured SNR of the returned pair
        long slots = 0;
        bool success = false;        // snr_db reached the threshold
    };

    // Neighborhood search around `previous`: 3 column beams then 3 narrow beams on each side.
    // Always 12 slots.
    TrackingOutcome mode1_track(LinkProbe &probe, const QupaCodebook &codebook,
                                const TrackingCodebook &tracking, const PairPosition &previous,
                                double threshold_db);

    // newer + (newer - older) on the lattice; azimuth wraps the short way, elevation clamps
    LatticePoint extrapolate(int n, LatticePoint older, LatticePoint newer);

    // Requires history.size() >= 2
    PairPosition mode2_predict(int n, std::span<const IntervalRecord> history);

    // One test of the predicted pair. Always 1 slot.
    TrackingOutcome mode2_track(LinkProbe &probe, const QupaCodebook &codebook,
                                std::span<const IntervalRecord> history, double threshold_db);

    struct ProcedureConfig
    {
        double test_ms = 1.0;     // duration of one beam test
        double block_ms = 10.0;   // data block between SNR evaluations
        int window_blocks = 1;    // moving-average window of the trigger
        double horizon_ms = 30000.0;
        int data_symbols = 1024;  // samples behind each data-block SNR estimate
        double eta_worst = 1.0;

        void validate() const;
    };

    struct TimelineRow
    {
        double t_ms = 0.0;
        ProcedureMode state = ProcedureMode::DataTx;
        PairPosition pair;
        double snr_db = kSnrFloorDb; // measured
        double norm_gain = 0.0;      // LoS normalized double-side gain of the pair in use
        double upper_gain = 0.0;     // best narrow pair for the LoS direction at this time
        double threshold_db = kSnrFloorDb;
    };

    struct TrackingEvent
    {
        double t_ms = 0.0; // start of the search
        ProcedureMode kind = ProcedureMode::Training;
        long slots = 0;
        bool success = true;
        double snr_db = kSnrFloorDb;
        double threshold_db = kSnrFloorDb;
        std::size_t history = 0; // records available when the search started
    };

    struct ProcedureSummary
    {
        int trainings = 0;
        int mode2_attempts = 0;
        int mode2_successes = 0;
        int mode1_attempts = 0;
        int mode1_successes = 0;
        long training_slots = 0;
        long tracking_slots = 0;
        int data_blocks = 0;
        double min_norm_gain = 0.0; // over data blocks
        int outages = 0;            // data blocks with norm_gain < kOutageGain
        double within_3db = 0.0;    // fraction of data blocks within 3 dB of upper_gain
        bool incomplete = false;    // horizon reached in the middle of a search
    };

    inline constexpr double kOutageGain = 0.2;

    struct ProcedureResult
    {
        std::vector<TimelineRow> timeline; // data blocks and searches in time order
        std::vector<TrackingEvent> events;
        std::vector<IntervalRecord> history;
        ProcedureSummary summary;
    };

    // Training, data transmission and hybrid tracking over a time-varying channel. Each beam
    // test advances the clock by test_ms; each data block by block_ms.
    ProcedureResult run_procedure(const ChannelSource &source, const QupaCodebook &codebook,
                                  const TrackingCodebook &tracking, const MeasurementModel &model,
                                  const ProcedureConfig &cfg, Rng &rng);
}

#endif
