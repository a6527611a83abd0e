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

#ifndef QUPA_TRAINING_HPP
#define QUPA_TRAINING_HPP

#include "qupa/channel.hpp"
#include "qupa/codebook.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace qupa
{
    // Phase 1 costs two slots per step (see README, slot accounting)
    inline constexpr int kPhase1SlotsPerStep = 2;

    // Slot count of the two-phase protocol: 4 log2(N^2) + 4
    long gb_slot_count(int n);

    // Slot count of exhaustive training: 16 N^4
    long exhaustive_slot_count(int n);

    // Beam tests against a link. Alice transmits on the forward link, Bob on the reverse link.
    // Measurements do not advance time; protocols charge slots explicitly through consume().
    class LinkProbe
    {
    public:
        LinkProbe(MeasurementModel model, Rng &rng) : model_(std::move(model)), rng_(&rng) {}
        virtual ~LinkProbe() = default;

        // Received power at Bob with Alice transmitting on every beam in tx at once
        double forward(std::span<const Beamformer> tx, const Beamformer &rx);
        double forward(const Beamformer &tx, const Beamformer &rx);

        // Received power at Alice with Bob transmitting
        double reverse(std::span<const Beamformer> tx, const Beamformer &rx);
        double reverse(const Beamformer &tx, const Beamformer &rx);

        // Power of a precomputed noiseless response
        double measure_response(std::complex<double> response, double rx_norm_sq);

        void consume(int slots);
        long slots() const { return slots_; }

        const MeasurementModel &model() const { return model_; }
        virtual const LinkEvaluator &link() const = 0;

    protected:
        virtual void advance(int slots) { (void)slots; }

    private:
        MeasurementModel model_;
        Rng *rng_;
        long slots_ = 0;
    };

    // Probe over a fixed channel
    class StaticProbe final : public LinkProbe
    {
    public:
        StaticProbe(const LinkEvaluator &link, MeasurementModel model, Rng &rng)
            : LinkProbe(std::move(model), rng), link_(&link)
        {
        }

        const LinkEvaluator &link() const override { return *link_; }

    private:
        const LinkEvaluator *link_;
    };

    struct BeamPair
    {
        int tx_upa = 0;   // Alice, A*
        int rx_upa = 0;   // Bob, B*
        int tx_index = 0; // a*, 1-based narrow index
        int rx_index = 0; // b*

        bool valid() const { return tx_upa > 0 && rx_upa > 0 && tx_index > 0 && rx_index > 0; }
        bool operator==(const BeamPair &) const = default;
    };

    struct TrainingResult
    {
        BeamPair pair;
        long measurement_slots = 0;
        double measured_snr_db = kSnrFloorDb; // last test of the selected pair, if the scheme makes one
        bool aligned = false;   // pair equals the noiseless exhaustive oracle
        double snr_db = kSnrFloorDb; // noiseless decoding SNR of the selected pair
        double norm_gain = 0.0;      // LoS normalized double-side gain of the selected pair
    };

    enum class TrainingScheme
    {
        GridBased,
        Exhaustive,
    };

    std::string_view to_string(TrainingScheme s);

    // Tests all 16 N^4 narrow pairs and returns the strongest; ties favor lower indices
    TrainingResult exhaustive_train(LinkProbe &probe, const QupaCodebook &alice,
                                    const QupaCodebook &bob);

    // Two-phase hierarchical search: UPA pair from stage-0 beams, then two descents
    TrainingResult gb_train(LinkProbe &probe, const QupaCodebook &alice, const QupaCodebook &bob);

    // Narrow pair maximizing the noiseless |w^H H f|
    BeamPair oracle_pair(const LinkEvaluator &link, const QupaCodebook &alice,
                         const QupaCodebook &bob);

    // Noiseless pair quality: decoding SNR and LoS normalized double-side gain
    void evaluate_pair(const LinkEvaluator &link, const QupaCodebook &alice, const QupaCodebook &bob,
                       TrainingResult &result);

    // Runs a scheme on a static channel and fills in alignment and pair quality
    TrainingResult run_training(TrainingScheme scheme, const LinkEvaluator &link,
                                const QupaCodebook &alice, const QupaCodebook &bob,
                                const MeasurementModel &model, Rng &rng);

    // Uniform direction inside the union of the four sectors
    Direction sample_covered_direction(Rng &rng);

    // Transmit power that makes the perfectly matched LoS link reach snr_db
    double tx_power_for_reference_snr(const LinkBudget &budget, const UpaConfig &array, double snr_db);

    // Noiseless SNR of the matched response-vector pair under budget
    double reference_snr_db(const LinkBudget &budget, const UpaConfig &array);

    struct AlignmentPoint
    {
        double snr_db = 0.0; // reference SNR of the matched LoS link
        double rate = 0.0;
        int trials = 0;
    };

    // Success rate of gb_train against the noiseless oracle per reference-SNR point.
    // Each trial fixes its channel and noise stream across all SNR points.
    std::vector<AlignmentPoint> alignment_rate(std::span<const double> snr_sweep_db,
                                               const QupaCodebook &codebook,
                                               const LinkBudget &budget, int trials,
                                               std::uint64_t seed, int nlos_paths = 0,
                                               double nlos_level_db = -15.0, int symbols = 1);
}

#endif
