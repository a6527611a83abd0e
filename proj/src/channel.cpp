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

#include "qupa/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace qupa
{
    double LinkBudget::noise_power_dbm() const
    {
        return noise_psd_dbm_per_hz + 10.0 * std::log10(bandwidth_hz);
    }

    double LinkBudget::tx_power_mw() const { return from_db(tx_power_dbm); }

    double LinkBudget::noise_power_mw() const { return from_db(noise_power_dbm()); }

    double LinkBudget::los_amplitude() const { return std::pow(10.0, propagation_loss_db / 20.0); }

    void LinkBudget::validate() const
    {
        for (double v : {carrier_hz, bandwidth_hz, tx_power_dbm, noise_psd_dbm_per_hz, propagation_loss_db, distance_m})
            if (!std::isfinite(v))
                throw std::invalid_argument("LinkBudget: all fields must be finite");
        if (!(bandwidth_hz > 0.0) || !(carrier_hz > 0.0))
            throw std::invalid_argument("LinkBudget: carrier and bandwidth must be positive");
    }

    const PathComponent &ChannelRealization::los() const
    {
        for (const auto &p : paths)
            if (p.is_los)
                return p;
        throw std::logic_error("ChannelRealization: no LoS path");
    }

    void ChannelRealization::validate() const
    {
        int los_count = 0;
        for (const auto &p : paths)
            los_count += p.is_los ? 1 : 0;
        if (los_count != 1)
            throw std::invalid_argument("ChannelRealization: exactly one LoS path required");
        const double los_mag = std::abs(los().gain);
        for (const auto &p : paths)
            if (!p.is_los && !(std::abs(p.gain) < los_mag))
                throw std::invalid_argument("ChannelRealization: NLoS path not weaker than LoS");
        budget.validate();
        array.validate();
    }

    ChannelRealization make_los_channel(const LinkBudget &budget, const UpaConfig &array,
                                        const Direction &departure, const Direction &arrival)
    {
        ChannelRealization ch;
        ch.budget = budget;
        ch.array = array;
        ch.paths.push_back({departure, arrival, {budget.los_amplitude(), 0.0}, true});
        return ch;
    }

    namespace
    {
        double coupling(const ChannelRealization &real, const PathComponent &p, int k, int m)
        {
            const double pattern = radiation_pattern(k, p.departure) * radiation_pattern(m, p.arrival);
            return std::sqrt(element_gain(real.array) * element_gain(real.array) * pattern);
        }
    }

    Eigen::MatrixXcd render_channel(const ChannelRealization &real, int k, int m)
    {
        const int n = real.array.elements();
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
        for (const auto &p : real.paths)
        {
            const double c = coupling(real, p, k, m);
            if (c == 0.0)
                continue;
            const Beamformer at = array_response(real.array.with_upa(k), p.departure);
            const Beamformer ar = array_response(real.array.with_upa(m), p.arrival);
            h.noalias() += (c * p.gain) * ar.weights * at.weights.adjoint();
        }
        return h;
    }

    Eigen::MatrixXcd render_reverse_channel(const ChannelRealization &real, int k, int m)
    {
        const int n = real.array.elements();
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
        for (const auto &p : real.paths)
        {
            const double c = coupling(real, p, k, m);
            if (c == 0.0)
                continue;
            const Beamformer at = array_response(real.array.with_upa(k), p.departure);
            const Beamformer ar = array_response(real.array.with_upa(m), p.arrival);
            h.noalias() += (c * p.gain) * at.weights * ar.weights.adjoint();
        }
        return h;
    }

    double snr_db_from_response(const LinkBudget &budget, std::complex<double> response)
    {
        const double ratio = budget.tx_power_mw() / budget.noise_power_mw() * std::norm(response);
        return ratio > 0.0 ? std::max(to_db(ratio), kSnrFloorDb) : kSnrFloorDb;
    }

    double decoding_snr(const LinkBudget &budget, const Beamformer &w, const Eigen::MatrixXcd &h,
                        const Beamformer &f)
    {
        return snr_db_from_response(budget, w.weights.dot(h * f.weights));
    }

    double MeasurementModel::measure(std::complex<double> response, double combiner_norm_sq, Rng &rng) const
    {
        const std::complex<double> one[1] = {response};
        return measure_sum(one, combiner_norm_sq, rng);
    }

    double MeasurementModel::measure_sum(std::span<const std::complex<double>> responses,
                                         double combiner_norm_sq, Rng &rng) const
    {
        const double p = budget.tx_power_mw();
        if (noiseless)
        {
            double total = 0.0;
            for (auto g : responses)
                total += p * std::norm(g);
            return total;
        }
        const double amp = std::sqrt(p);
        const double noise_var = budget.noise_power_mw() * combiner_norm_sq;
        const double noise_std = std::sqrt(noise_var / 2.0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        if (symbols > kExactSymbolLimit)
        {
            // Mean of M samples = |a + mean noise|^2 + (spread about the mean) / M,
            // with the spread Gamma(M - 1, sigma^2) distributed. The composite signal
            // is folded into one term of the same expected power.
            double signal = 0.0;
            for (auto g : responses)
                signal += p * std::norm(g);
            const double m = double(symbols);
            const double mean_std = std::sqrt(noise_var / (2.0 * m));
            const std::complex<double> y(std::sqrt(signal) + gauss(rng) * mean_std,
                                         gauss(rng) * mean_std);
            std::gamma_distribution<double> spread(m - 1.0, noise_var);
            return std::norm(y) + spread(rng) / m;
        }
        std::uniform_real_distribution<double> phase(-kPi, kPi);
        const int count = std::max(symbols, 1);
        double acc = 0.0;
        for (int s = 0; s < count; ++s)
        {
            std::complex<double> y{0.0, 0.0};
            for (std::size_t i = 0; i < responses.size(); ++i)
            {
                std::complex<double> sym{1.0, 0.0};
                if (i > 0)
                    sym = std::polar(1.0, phase(rng));
                y += amp * responses[i] * sym;
            }
            const double re = gauss(rng);
            const double im = gauss(rng);
            y += std::complex<double>(re, im) * noise_std;
            acc += std::norm(y);
        }
        return acc / double(count);
    }

    double MeasurementModel::snr_db(double power_mw) const
    {
        const double ratio = power_mw / budget.noise_power_mw();
        return ratio > 0.0 ? std::max(to_db(ratio), kSnrFloorDb) : kSnrFloorDb;
    }

    double measure(const LinkBudget &budget, const Beamformer &w, const Eigen::MatrixXcd &h,
                   const Beamformer &f, Rng &rng, int symbols)
    {
        MeasurementModel model{budget, symbols, false};
        return model.measure(w.weights.dot(h * f.weights), w.weights.squaredNorm(), rng);
    }

    std::vector<PathComponent> sample_nlos(Rng &rng, int count, std::complex<double> los_gain,
                                           double relative_level_db)
    {
        if (count < 0)
            throw std::invalid_argument("sample_nlos: negative path count");
        std::uniform_real_distribution<double> az(-kPi, kPi);
        std::uniform_real_distribution<double> cz(-1.0, 1.0);
        std::uniform_real_distribution<double> ph(-kPi, kPi);
        const double mag = std::abs(los_gain) * std::pow(10.0, relative_level_db / 20.0);
        std::vector<PathComponent> out;
        out.reserve(std::size_t(count));
        for (int i = 0; i < count; ++i)
        {
            PathComponent p;
            const double a0 = az(rng);
            const double e0 = std::acos(cz(rng));
            const double a1 = az(rng);
            const double e1 = std::acos(cz(rng));
            p.departure = Direction(a0, e0);
            p.arrival = Direction(a1, e1);
            p.gain = std::polar(mag, ph(rng));
            p.is_los = false;
            out.push_back(p);
        }
        return out;
    }

    LinkEvaluator::LinkEvaluator(const ChannelRealization &channel) : channel_(channel)
    {
        const double gain = element_gain(channel_.array);
        terms_.reserve(channel_.paths.size());
        for (std::size_t l = 0; l < channel_.paths.size(); ++l)
        {
            const auto &p = channel_.paths[l];
            if (p.is_los)
                los_index_ = l;
            PathTerms t;
            t.coefficient = gain * p.gain; // sqrt(G_t G_r) with G_t = G_r
            for (int k = 1; k <= kUpaCount; ++k)
            {
                if (radiation_pattern(k, p.departure) > 0.0)
                    t.departure[k - 1] = array_response(channel_.array.with_upa(k), p.departure).weights;
                if (radiation_pattern(k, p.arrival) > 0.0)
                    t.arrival[k - 1] = array_response(channel_.array.with_upa(k), p.arrival).weights;
            }
            terms_.push_back(std::move(t));
        }
    }

    std::complex<double> LinkEvaluator::forward(const Beamformer &f, const Beamformer &w) const
    {
        std::complex<double> sum{0.0, 0.0};
        for (const auto &t : terms_)
        {
            const auto &dep = t.departure[f.upa - 1];
            const auto &arr = t.arrival[w.upa - 1];
            if (!dep || !arr)
                continue;
            sum += t.coefficient * w.weights.dot(*arr) * dep->dot(f.weights);
        }
        return sum;
    }

    std::complex<double> LinkEvaluator::reverse(const Beamformer &w_tx, const Beamformer &f_rx) const
    {
        std::complex<double> sum{0.0, 0.0};
        for (const auto &t : terms_)
        {
            const auto &dep = t.departure[f_rx.upa - 1];
            const auto &arr = t.arrival[w_tx.upa - 1];
            if (!dep || !arr)
                continue;
            sum += t.coefficient * f_rx.weights.dot(*dep) * arr->dot(w_tx.weights);
        }
        return sum;
    }

    Eigen::VectorXcd LinkEvaluator::departure_projection(const Beamformer &f) const
    {
        check_upa(f.upa);
        Eigen::VectorXcd out = Eigen::VectorXcd::Zero(Eigen::Index(terms_.size()));
        for (std::size_t l = 0; l < terms_.size(); ++l)
            if (const auto &dep = terms_[l].departure[f.upa - 1])
                out[Eigen::Index(l)] = dep->dot(f.weights);
        return out;
    }

    Eigen::VectorXcd LinkEvaluator::arrival_projection(const Beamformer &w) const
    {
        check_upa(w.upa);
        Eigen::VectorXcd out = Eigen::VectorXcd::Zero(Eigen::Index(terms_.size()));
        for (std::size_t l = 0; l < terms_.size(); ++l)
            if (const auto &arr = terms_[l].arrival[w.upa - 1])
                out[Eigen::Index(l)] = w.weights.dot(*arr);
        return out;
    }

    double LinkEvaluator::los_double_side_gain(const Beamformer &f, const Beamformer &w) const
    {
        if (terms_.empty())
            return 0.0;
        const auto &t = terms_[los_index_];
        const auto &dep = t.departure[f.upa - 1];
        const auto &arr = t.arrival[w.upa - 1];
        if (!dep || !arr)
            return 0.0;
        return std::abs(dep->dot(f.weights)) * std::abs(arr->dot(w.weights));
    }
}
