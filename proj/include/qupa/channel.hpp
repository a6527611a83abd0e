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

#ifndef QUPA_CHANNEL_HPP
#define QUPA_CHANNEL_HPP

#include "qupa/geometry.hpp"
#include "qupa/rng.hpp"

#include <Eigen/Core>

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <vector>

namespace qupa
{
    // Decoding SNR reported for a zero precoder, decoder or channel
    inline constexpr double kSnrFloorDb = -300.0;

    struct LinkBudget
    {
        double carrier_hz = 0.26e12;
        double bandwidth_hz = 20e9;
        double tx_power_dbm = 25.0;
        double noise_psd_dbm_per_hz = -174.0;
        double propagation_loss_db = -124.6; // power gain of the LoS path
        double distance_m = 100.0;

        double noise_power_dbm() const;
        double tx_power_mw() const;
        double noise_power_mw() const;
        double los_amplitude() const; // |alpha_L|

        void validate() const;
        bool operator==(const LinkBudget &) const = default;
    };

    struct PathComponent
    {
        Direction departure; // at Alice, QUPA frame
        Direction arrival;   // at Bob, QUPA frame
        std::complex<double> gain{1.0, 0.0};
        bool is_los = false;
    };

    // Exactly one LoS path plus L-1 weaker NLoS paths. Both ends carry the same array.
    struct ChannelRealization
    {
        std::vector<PathComponent> paths;
        LinkBudget budget;
        UpaConfig array;

        const PathComponent &los() const;
        void validate() const;
    };

    ChannelRealization make_los_channel(const LinkBudget &budget, const UpaConfig &array,
                                        const Direction &departure, const Direction &arrival);

    // H_{k,m}: Alice UPA k transmits, Bob UPA m receives. N_a x N_a.
    Eigen::MatrixXcd render_channel(const ChannelRealization &real, int k, int m);

    // Reverse link: Bob UPA m transmits, Alice UPA k receives
    Eigen::MatrixXcd render_reverse_channel(const ChannelRealization &real, int k, int m);

    // P / sigma^2 |w^H H f|^2 in dB, kSnrFloorDb if the product vanishes
    double decoding_snr(const LinkBudget &budget, const Beamformer &w, const Eigen::MatrixXcd &h,
                        const Beamformer &f);
    double snr_db_from_response(const LinkBudget &budget, std::complex<double> response);

    // Above this many symbols per test the averaged statistic is sampled in closed form
    inline constexpr int kExactSymbolLimit = 32;

    // Received power of one beam test averaged over `symbols` samples, in mW
    struct MeasurementModel
    {
        LinkBudget budget;
        int symbols = 1;        // independent samples averaged per test
        bool noiseless = false; // return the expected signal power without noise

        // |sqrt(P) g s + w^H n|^2 with unit-power s and n ~ CN(0, sigma^2 I)
        double measure(std::complex<double> response, double combiner_norm_sq, Rng &rng) const;

        // Simultaneous transmissions from several UPAs carrying independent unit-power
        // symbols; the first term uses s = 1 so one term reduces to measure().
        double measure_sum(std::span<const std::complex<double>> responses, double combiner_norm_sq,
                           Rng &rng) const;

        double snr_db(double power_mw) const;
    };

    double measure(const LinkBudget &budget, const Beamformer &w, const Eigen::MatrixXcd &h,
                   const Beamformer &f, Rng &rng, int symbols = 1);

    // NLoS paths with directions uniform on the sphere, |alpha_N| = |los_gain| 10^(level/20)
    // and uniform phase
    std::vector<PathComponent> sample_nlos(Rng &rng, int count, std::complex<double> los_gain,
                                           double relative_level_db = -15.0);

    // Evaluates w^H H f from the path list without rendering the matrix.
    class LinkEvaluator
    {
    public:
        explicit LinkEvaluator(const ChannelRealization &channel);

        // w^H H_{k,m} f with k = f.upa, m = w.upa
        std::complex<double> forward(const Beamformer &f, const Beamformer &w) const;

        // f^H H^rev_{k,m} w for Bob transmitting w (UPA m), Alice receiving with f (UPA k)
        std::complex<double> reverse(const Beamformer &w_tx, const Beamformer &f_rx) const;

        // |a_k(dep)^H f| |a_m(arr)^H w| for the LoS path, zero outside the sectors
        double los_double_side_gain(const Beamformer &f, const Beamformer &w) const;

        // Per-path factors: forward(f, w) = sum_l coefficient_l * arrival_l(w) * departure_l(f)
        std::size_t path_count() const { return terms_.size(); }
        std::complex<double> coefficient(std::size_t path) const { return terms_.at(path).coefficient; }
        // a_k(dep_l)^H f, zero where F_k(dep_l) = 0
        Eigen::VectorXcd departure_projection(const Beamformer &f) const;
        // w^H a_m(arr_l), zero where F_m(arr_l) = 0
        Eigen::VectorXcd arrival_projection(const Beamformer &w) const;

        const ChannelRealization &channel() const { return channel_; }

    private:
        struct PathTerms
        {
            std::array<std::optional<Eigen::VectorXcd>, kUpaCount> departure; // a_k(dep) where F_k = 1
            std::array<std::optional<Eigen::VectorXcd>, kUpaCount> arrival;   // a_m(arr) where F_m = 1
            std::complex<double> coefficient; // sqrt(G_t G_r) alpha
        };

        ChannelRealization channel_;
        std::vector<PathTerms> terms_;
        std::size_t los_index_ = 0;
    };
}

#endif
