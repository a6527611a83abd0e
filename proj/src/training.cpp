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

#include "qupa/parallel.hpp"

#include <fmt/core.h>

#include <cmath>
#include <stdexcept>

namespace qupa
{
    namespace
    {
        struct Projections
        {
            // paths x N^2 per UPA, empty when the UPA sees no path
            std::array<Eigen::MatrixXcd, kUpaCount> per_upa;
        };

        Projections alice_projections(const LinkEvaluator &link, const QupaCodebook &cb)
        {
            Projections out;
            const int beams = cb[0].n() * cb[0].n();
            for (int k = 1; k <= kUpaCount; ++k)
            {
                const HierarchicalCodebook &c = cb[std::size_t(k - 1)];
                Eigen::MatrixXcd m(Eigen::Index(link.path_count()), beams);
                for (int a = 1; a <= beams; ++a)
                    m.col(a - 1) = link.departure_projection(c.narrow(a));
                if (m.cwiseAbs2().sum() > 0.0)
                    out.per_upa[std::size_t(k - 1)] = std::move(m);
            }
            return out;
        }

        Projections bob_projections(const LinkEvaluator &link, const QupaCodebook &cb)
        {
            Projections out;
            const int beams = cb[0].n() * cb[0].n();
            for (int m = 1; m <= kUpaCount; ++m)
            {
                const HierarchicalCodebook &c = cb[std::size_t(m - 1)];
                Eigen::MatrixXcd r(Eigen::Index(link.path_count()), beams);
                for (int b = 1; b <= beams; ++b)
                    r.col(b - 1) = link.arrival_projection(c.narrow(b));
                if (r.cwiseAbs2().sum() > 0.0)
                    out.per_upa[std::size_t(m - 1)] = std::move(r);
            }
            return out;
        }

        Eigen::VectorXcd path_coefficients(const LinkEvaluator &link)
        {
            Eigen::VectorXcd c(Eigen::Index(link.path_count()));
            for (std::size_t l = 0; l < link.path_count(); ++l)
                c[Eigen::Index(l)] = link.coefficient(l);
            return c;
        }

        // Noiseless responses of all narrow pairs for one UPA combination: N^2 x N^2
        Eigen::MatrixXcd pair_responses(const Eigen::MatrixXcd &dep, const Eigen::VectorXcd &coef,
                                        const Eigen::MatrixXcd &arr)
        {
            return dep.transpose() * coef.asDiagonal() * arr;
        }

        void check_codebooks(const QupaCodebook &alice, const QupaCodebook &bob)
        {
            for (int k = 1; k <= kUpaCount; ++k)
            {
                if (alice[std::size_t(k - 1)].upa() != k || bob[std::size_t(k - 1)].upa() != k)
                    throw std::invalid_argument("QUPA codebook entries must be ordered by UPA");
            }
            if (alice[0].n() != bob[0].n())
                throw std::invalid_argument("both ends must use the same narrow-beam count");
        }

        // Returns the selected narrow index and the power measured on it
        std::pair<int, double> descend(LinkProbe &probe, const HierarchicalCodebook &cb, auto &&measure)
        {
            int i = 1;
            double power = 0.0;
            for (int s = 1; s <= cb.stages(); ++s)
            {
                const auto [first, second] = child_beams(s - 1, i, cb.n());
                const double left = measure(cb.codeword(s, first));
                probe.consume(1);
                const double right = measure(cb.codeword(s, second));
                probe.consume(1);
                i = right > left ? second : first;
                power = right > left ? right : left;
            }
            return {i, power};
        }
    }

    long gb_slot_count(int n) { return 2L * stage_count(n) * 2 + 2L * kPhase1SlotsPerStep; }

    long exhaustive_slot_count(int n)
    {
        (void)stage_count(n);
        const long nn = long(n) * long(n);
        return 16L * nn * nn;
    }

    double LinkProbe::forward(std::span<const Beamformer> tx, const Beamformer &rx)
    {
        std::vector<std::complex<double>> responses;
        responses.reserve(tx.size());
        for (const Beamformer &f : tx)
            responses.push_back(link().forward(f, rx));
        return model_.measure_sum(responses, rx.weights.squaredNorm(), *rng_);
    }

    double LinkProbe::forward(const Beamformer &tx, const Beamformer &rx)
    {
        return forward(std::span<const Beamformer>(&tx, 1), rx);
    }

    double LinkProbe::reverse(std::span<const Beamformer> tx, const Beamformer &rx)
    {
        std::vector<std::complex<double>> responses;
        responses.reserve(tx.size());
        for (const Beamformer &w : tx)
            responses.push_back(link().reverse(w, rx));
        return model_.measure_sum(responses, rx.weights.squaredNorm(), *rng_);
    }

    double LinkProbe::reverse(const Beamformer &tx, const Beamformer &rx)
    {
        return reverse(std::span<const Beamformer>(&tx, 1), rx);
    }

    double LinkProbe::measure_response(std::complex<double> response, double rx_norm_sq)
    {
        return model_.measure(response, rx_norm_sq, *rng_);
    }

    void LinkProbe::consume(int slots)
    {
        if (slots < 0)
            throw std::invalid_argument("slot count must be non-negative");
        slots_ += slots;
        advance(slots);
    }

    std::string_view to_string(TrainingScheme s)
    {
        return s == TrainingScheme::Exhaustive ? "exhaustive" : "grid-based";
    }

    TrainingResult exhaustive_train(LinkProbe &probe, const QupaCodebook &alice,
                                    const QupaCodebook &bob)
    {
        check_codebooks(alice, bob);
        const long start = probe.slots();
        const LinkEvaluator &link = probe.link();
        const int beams = alice[0].n() * alice[0].n();
        const Projections dep = alice_projections(link, alice);
        const Projections arr = bob_projections(link, bob);
        const Eigen::VectorXcd coef = path_coefficients(link);

        TrainingResult result;
        double best = -1.0;
        for (int k = 1; k <= kUpaCount; ++k)
        {
            const Eigen::MatrixXcd &d = dep.per_upa[std::size_t(k - 1)];
            for (int m = 1; m <= kUpaCount; ++m)
            {
                const Eigen::MatrixXcd &r = arr.per_upa[std::size_t(m - 1)];
                Eigen::MatrixXcd resp = Eigen::MatrixXcd::Zero(beams, beams);
                if (d.size() > 0 && r.size() > 0)
                    resp = pair_responses(d, coef, r);
                const auto &bob_cb = bob[std::size_t(m - 1)];
                const Eigen::VectorXd norm_sq = bob_cb.stage(bob_cb.stages()).colwise().squaredNorm();
                for (int a = 1; a <= beams; ++a)
                    for (int b = 1; b <= beams; ++b)
                    {
                        const double p = probe.measure_response(resp(a - 1, b - 1), norm_sq[b - 1]);
                        probe.consume(1);
                        if (p > best)
                        {
                            best = p;
                            result.pair = {k, m, a, b};
                        }
                        result.measured_snr_db = probe.model().snr_db(best);
                    }
            }
        }
        result.measurement_slots = probe.slots() - start;
        return result;
    }

    TrainingResult gb_train(LinkProbe &probe, const QupaCodebook &alice, const QupaCodebook &bob)
    {
        check_codebooks(alice, bob);
        const long start = probe.slots();

        std::array<Beamformer, kUpaCount> alice_top, bob_top;
        for (std::size_t k = 0; k < std::size_t(kUpaCount); ++k)
        {
            alice_top[k] = alice[k].codeword(0, 1);
            bob_top[k] = bob[k].codeword(0, 1);
        }

        // Phase 1, step 1: Alice radiates from all UPAs, Bob listens on all UPAs
        int bob_upa = 1;
        double best = -1.0;
        for (int m = 1; m <= kUpaCount; ++m)
        {
            const double p = probe.forward(alice_top, bob_top[std::size_t(m - 1)]);
            if (p > best)
            {
                best = p;
                bob_upa = m;
            }
        }
        probe.consume(kPhase1SlotsPerStep);

        // Phase 1, step 2: Bob radiates from B*, Alice listens on all UPAs
        int alice_upa = 1;
        best = -1.0;
        const Beamformer &bob_wide = bob_top[std::size_t(bob_upa - 1)];
        for (int k = 1; k <= kUpaCount; ++k)
        {
            const double p = probe.reverse(bob_wide, alice_top[std::size_t(k - 1)]);
            if (p > best)
            {
                best = p;
                alice_upa = k;
            }
        }
        probe.consume(kPhase1SlotsPerStep);

        // Phase 2, step 1: Alice descends while Bob keeps his stage-0 beam
        const HierarchicalCodebook &alice_cb = alice[std::size_t(alice_upa - 1)];
        const int a = descend(probe, alice_cb,
                              [&](const Beamformer &f) { return probe.reverse(bob_wide, f); })
                          .first;

        // Phase 2, step 2: Bob descends against Alice's narrow beam
        const Beamformer alice_narrow = alice_cb.narrow(a);
        const HierarchicalCodebook &bob_cb = bob[std::size_t(bob_upa - 1)];
        const auto [b, power] = descend(probe, bob_cb,
                                        [&](const Beamformer &w) { return probe.forward(alice_narrow, w); });

        TrainingResult result;
        result.pair = {alice_upa, bob_upa, a, b};
        result.measurement_slots = probe.slots() - start;
        result.measured_snr_db = probe.model().snr_db(power);
        return result;
    }

    BeamPair oracle_pair(const LinkEvaluator &link, const QupaCodebook &alice,
                         const QupaCodebook &bob)
    {
        check_codebooks(alice, bob);
        const int beams = alice[0].n() * alice[0].n();
        const Projections dep = alice_projections(link, alice);
        const Projections arr = bob_projections(link, bob);
        const Eigen::VectorXcd coef = path_coefficients(link);

        BeamPair best_pair{1, 1, 1, 1};
        double best = -1.0;
        for (int k = 1; k <= kUpaCount; ++k)
        {
            const Eigen::MatrixXcd &d = dep.per_upa[std::size_t(k - 1)];
            if (d.size() == 0)
                continue;
            for (int m = 1; m <= kUpaCount; ++m)
            {
                const Eigen::MatrixXcd &r = arr.per_upa[std::size_t(m - 1)];
                if (r.size() == 0)
                    continue;
                const Eigen::MatrixXd power = pair_responses(d, coef, r).cwiseAbs2();
                for (int a = 0; a < beams; ++a)
                    for (int b = 0; b < beams; ++b)
                        if (power(a, b) > best)
                        {
                            best = power(a, b);
                            best_pair = {k, m, a + 1, b + 1};
                        }
            }
        }
        return best_pair;
    }

    void evaluate_pair(const LinkEvaluator &link, const QupaCodebook &alice, const QupaCodebook &bob,
                       TrainingResult &result)
    {
        const BeamPair &p = result.pair;
        if (!p.valid())
            throw std::invalid_argument("cannot evaluate an empty beam pair");
        const Beamformer f = alice[std::size_t(p.tx_upa - 1)].narrow(p.tx_index);
        const Beamformer w = bob[std::size_t(p.rx_upa - 1)].narrow(p.rx_index);
        result.snr_db = snr_db_from_response(link.channel().budget, link.forward(f, w));
        result.norm_gain = link.los_double_side_gain(f, w);
    }

    TrainingResult run_training(TrainingScheme scheme, const LinkEvaluator &link,
                                const QupaCodebook &alice, const QupaCodebook &bob,
                                const MeasurementModel &model, Rng &rng)
    {
        StaticProbe probe(link, model, rng);
        TrainingResult result = scheme == TrainingScheme::Exhaustive
                                    ? exhaustive_train(probe, alice, bob)
                                    : gb_train(probe, alice, bob);
        result.aligned = result.pair == oracle_pair(link, alice, bob);
        evaluate_pair(link, alice, bob, result);
        return result;
    }

    Direction sample_covered_direction(Rng &rng)
    {
        std::uniform_real_distribution<double> az(-kPi, kPi);
        std::uniform_real_distribution<double> cz(-kSqrt2 / 2.0, kSqrt2 / 2.0);
        const double phi = az(rng);
        const double z = cz(rng);
        return {phi, std::acos(z)};
    }

    double reference_snr_db(const LinkBudget &budget, const UpaConfig &array)
    {
        return budget.tx_power_dbm + budget.propagation_loss_db + 2.0 * element_gain_db(array) -
               budget.noise_power_dbm();
    }

    double tx_power_for_reference_snr(const LinkBudget &budget, const UpaConfig &array, double snr_db)
    {
        return budget.tx_power_dbm + snr_db - reference_snr_db(budget, array);
    }

    std::vector<AlignmentPoint> alignment_rate(std::span<const double> snr_sweep_db,
                                               const QupaCodebook &codebook,
                                               const LinkBudget &budget, int trials,
                                               std::uint64_t seed, int nlos_paths,
                                               double nlos_level_db, int symbols)
    {
        if (trials < 1)
            throw std::invalid_argument("alignment_rate needs at least one trial");
        const UpaConfig array = codebook[0].params().array;
        const std::size_t points = snr_sweep_db.size();
        std::vector<std::vector<char>> hits(std::size_t(trials), std::vector<char>(points, 0));

        parallel_for(std::size_t(trials), [&](std::size_t t) {
            Rng geo = make_rng(seed, 1, t);
            const Direction dep = sample_covered_direction(geo);
            const Direction arr = sample_covered_direction(geo);
            ChannelRealization ch = make_los_channel(budget, array, dep, arr);
            for (auto &p : sample_nlos(geo, nlos_paths, ch.paths[0].gain, nlos_level_db))
                ch.paths.push_back(p);
            const LinkEvaluator link(ch);
            const BeamPair oracle = oracle_pair(link, codebook, codebook);
            for (std::size_t i = 0; i < points; ++i)
            {
                MeasurementModel model;
                model.budget = budget;
                model.budget.tx_power_dbm = tx_power_for_reference_snr(budget, array, snr_sweep_db[i]);
                model.symbols = symbols;
                Rng noise = make_rng(seed, 2, t);
                StaticProbe probe(link, model, noise);
                hits[t][i] = gb_train(probe, codebook, codebook).pair == oracle ? 1 : 0;
            }
        });

        std::vector<AlignmentPoint> out(points);
        for (std::size_t i = 0; i < points; ++i)
        {
            int ok = 0;
            for (const auto &h : hits)
                ok += h[i];
            out[i] = {snr_sweep_db[i], double(ok) / double(trials), trials};
        }
        return out;
    }
}
