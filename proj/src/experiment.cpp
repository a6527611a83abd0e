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

#include "qupa/codebook_io.hpp"
#include "qupa/parallel.hpp"
#include "qupa/training.hpp"

#include <fmt/core.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qupa
{
    namespace
    {
        using nlohmann::json;

        std::string num(double v) { return fmt::format("{:.6f}", v); }

        void schema_line(std::ostream &out, ExperimentId id)
        {
            out << "# schema: " << to_string(id) << "/" << kOutputSchemaVersion << "\n";
        }

        ChannelRealization trial_channel(const Scenario &s, Rng &rng)
        {
            const Direction dep = sample_covered_direction(rng);
            const Direction arr = sample_covered_direction(rng);
            ChannelRealization ch = make_los_channel(s.budget, s.array, dep, arr);
            for (auto &p : sample_nlos(rng, s.nlos_paths, ch.paths[0].gain, s.nlos_level_db))
                ch.paths.push_back(p);
            return ch;
        }

        CodebookParams params_for(const ExperimentConfig &cfg, int n, CodebookVariant v)
        {
            CodebookParams p = cfg.scenario.codebook;
            p.array = cfg.scenario.array;
            p.n = n;
            p.variant = v;
            return p;
        }

        void write_file(const std::filesystem::path &path, const std::string &body)
        {
            std::ofstream out(path, std::ios::binary);
            if (!out)
                throw std::runtime_error("cannot write " + path.string());
            out << body;
            if (!out)
                throw std::runtime_error("failed writing " + path.string());
        }

        std::vector<int> checkpoints(int max_tests)
        {
            std::vector<int> out;
            for (long decade = 1; decade <= max_tests; decade *= 10)
                for (int m : {1, 2, 5})
                    if (decade * m <= max_tests)
                        out.push_back(int(decade * m));
            if (out.empty() || out.back() != max_tests)
                out.push_back(max_tests);
            return out;
        }
    }

    std::string_view to_string(ExperimentId id)
    {
        switch (id)
        {
        case ExperimentId::Patterns:
            return "patterns";
        case ExperimentId::SnrVsN:
            return "snr_vs_n";
        case ExperimentId::WorstcaseVsTests:
            return "worstcase_vs_tests";
        case ExperimentId::AlignVsSnr:
            return "align_vs_snr";
        case ExperimentId::TrackingTrace:
            return "tracking_trace";
        }
        return "unknown";
    }

    ExperimentId parse_experiment(std::string_view name)
    {
        for (ExperimentId id : {ExperimentId::Patterns, ExperimentId::SnrVsN, ExperimentId::WorstcaseVsTests,
                                ExperimentId::AlignVsSnr, ExperimentId::TrackingTrace})
            if (to_string(id) == name)
                return id;
        throw std::invalid_argument(fmt::format("unknown experiment '{}'", name));
    }

    void ExperimentConfig::validate() const
    {
        scenario.validate();
        if (trials < 1 || max_tests < 1)
            throw std::invalid_argument("trials and max_tests must be at least 1");
        if (ns.empty() || variants.empty())
            throw std::invalid_argument("experiment needs at least one N and one variant");
        for (int n : ns)
            (void)stage_count(n);
        if (pattern_points < 2)
            throw std::invalid_argument("pattern grid needs at least 2 points per axis");
        for (int s : pattern_stages)
            if (s < 0)
                throw std::invalid_argument("pattern stages must be non-negative");
        if (snr_sweep_db.empty())
            throw std::invalid_argument("SNR sweep is empty");
    }

    CodebookBundle load_bundle(const CodebookParams &params, const std::filesystem::path &cache_dir)
    {
        params.validate();
        CodebookBundle b;
        b.synth = std::make_shared<const WideBeamSynthesizer>(params.array, params.n, params.tikhonov);
        std::filesystem::path cached;
        if (!cache_dir.empty())
        {
            cached = cache_dir / cache_file_name(params);
            if (std::filesystem::exists(cached))
            {
                b.local = load_codebook(cached);
                if (!(b.local.params() == params))
                    throw std::runtime_error("cached codebook " + cached.string() + " has different parameters");
                b.qupa = make_qupa_codebook(b.local);
                return b;
            }
            fmt::print(stderr, "warning: codebook {} not cached, building it\n", cached.filename().string());
        }
        b.local = build_codebook(params, b.synth.get());
        if (!cached.empty())
        {
            std::filesystem::create_directories(cache_dir);
            save_codebook(b.local, cached);
        }
        b.qupa = make_qupa_codebook(b.local);
        return b;
    }

    void write_patterns(std::ostream &out, const HierarchicalCodebook &cb, const std::vector<int> &stages,
                        int points)
    {
        out << "stage,index,azimuth_deg,elevation_deg,gain\n";
        const UpaConfig cfg = cb.params().array.with_upa(cb.upa());
        const double center = double(cb.upa() - 1) * kPi / 2.0;
        for (int s : stages)
        {
            if (s > cb.stages())
                throw std::invalid_argument(fmt::format("stage {} exceeds S = {}", s, cb.stages()));
            for (int i = 1; i <= (1 << s); ++i)
            {
                const Beamformer w = cb.codeword(s, i);
                for (int a = 0; a < points; ++a)
                {
                    const double az = center - kPi / 4.0 + kPi / 2.0 * double(a) / double(points - 1);
                    for (int e = 0; e < points; ++e)
                    {
                        const double el = kPi / 4.0 + kPi / 2.0 * double(e) / double(points - 1);
                        const Direction dir{az, el};
                        out << s << ',' << i << ',' << num(az * 180.0 / kPi) << ',' << num(el * 180.0 / kPi)
                            << ',' << num(beam_gain(cfg, w, dir)) << '\n';
                    }
                }
            }
        }
    }

    std::vector<SnrVsNRow> snr_vs_n(const ExperimentConfig &cfg)
    {
        cfg.validate();
        const Scenario &sc = cfg.scenario;
        MeasurementModel model = sc.training_model();
        model.noiseless = model.noiseless || cfg.noiseless;
        const double matched = reference_snr_db(sc.budget, sc.array);

        std::vector<SnrVsNRow> rows;
        for (int n : cfg.ns)
        {
            const double eta = eta_worst(n, sc.array.n_y, sc.array.n_z).eta_worst;
            for (CodebookVariant v : cfg.variants)
            {
                const CodebookBundle b = load_bundle(params_for(cfg, n, v), cfg.cache_dir);
                std::vector<TrainingResult> results(std::size_t(cfg.trials));
                parallel_for(results.size(), [&](std::size_t t) {
                    Rng geo = make_rng(cfg.seed, 5, t);
                    const LinkEvaluator link(trial_channel(sc, geo));
                    Rng noise = make_rng(cfg.seed, 6, t);
                    StaticProbe probe(link, model, noise);
                    TrainingResult r = gb_train(probe, b.qupa, b.qupa);
                    evaluate_pair(link, b.qupa, b.qupa, r);
                    results[t] = r;
                });
                SnrVsNRow row;
                row.n = n;
                row.variant = v;
                row.trials = cfg.trials;
                row.min_snr_db = std::numeric_limits<double>::infinity();
                row.min_gain = std::numeric_limits<double>::infinity();
                double snr_lin = 0.0;
                for (const auto &r : results)
                {
                    snr_lin += from_db(r.snr_db);
                    row.min_snr_db = std::min(row.min_snr_db, r.snr_db);
                    row.mean_gain += r.norm_gain;
                    row.min_gain = std::min(row.min_gain, r.norm_gain);
                }
                row.mean_snr_db = to_db(snr_lin / double(cfg.trials));
                row.mean_gain /= double(cfg.trials);
                row.worst_case_snr_db = matched + 40.0 * std::log10(eta);
                rows.push_back(row);
            }
        }
        return rows;
    }

    std::vector<WorstcasePoint> worstcase_vs_tests(const ExperimentConfig &cfg)
    {
        cfg.validate();
        const Scenario &sc = cfg.scenario;
        const int n = cfg.ns.back();
        const CodebookBundle b = load_bundle(params_for(cfg, n, cfg.variants.front()), cfg.cache_dir);
        MeasurementModel model = sc.training_model();
        model.noiseless = model.noiseless || cfg.noiseless;

        std::vector<double> gains(std::size_t(cfg.max_tests));
        parallel_for(gains.size(), [&](std::size_t t) {
            Rng geo = make_rng(cfg.seed, 7, t);
            const ChannelRealization ch = trial_channel(sc, geo);
            const LinkEvaluator link(ch);
            Rng noise = make_rng(cfg.seed, 8, t);
            StaticProbe probe(link, model, noise);
            const TrainingResult r = gb_train(probe, b.qupa, b.qupa);
            const Beamformer f = b.qupa[std::size_t(r.pair.tx_upa - 1)].narrow(r.pair.tx_index);
            gains[t] = beam_gain(sc.array.with_upa(f.upa), f, ch.los().departure);
        });

        const double eta = eta_worst(n, sc.array.n_y, sc.array.n_z).eta_worst;
        std::vector<WorstcasePoint> out;
        double running = 1.0;
        std::size_t next = 0;
        const std::vector<int> marks = checkpoints(cfg.max_tests);
        for (int t = 1; t <= cfg.max_tests; ++t)
        {
            running = std::min(running, gains[std::size_t(t - 1)]);
            if (next < marks.size() && marks[next] == t)
            {
                out.push_back({t, running, eta});
                ++next;
            }
        }
        return out;
    }

    std::vector<AlignRow> align_vs_snr(const ExperimentConfig &cfg)
    {
        cfg.validate();
        const Scenario &sc = cfg.scenario;
        const int n = cfg.ns.back();
        std::vector<AlignRow> rows;
        for (CodebookVariant v : cfg.variants)
        {
            const CodebookBundle b = load_bundle(params_for(cfg, n, v), cfg.cache_dir);
            for (const AlignmentPoint &p : alignment_rate(cfg.snr_sweep_db, b.qupa, sc.budget, cfg.trials, cfg.seed,
                                                          sc.nlos_paths, sc.nlos_level_db, sc.symbols))
                rows.push_back({v, p});
        }
        return rows;
    }

    ProcedureResult tracking_trace(const ExperimentConfig &cfg)
    {
        cfg.validate();
        Scenario sc = cfg.scenario;
        sc.codebook.n = cfg.ns.back();
        const CodebookBundle b = load_bundle(params_for(cfg, sc.codebook.n, sc.codebook.variant), cfg.cache_dir);
        const auto source = make_channel_source(sc);
        const TrackingCodebook tracking(b.synth, sc.codebook.effective_buffer_width(), sc.codebook.buffer_gain);
        Rng rng = make_rng(cfg.seed, 3, 0);
        return run_procedure(*source, b.qupa, tracking, sc.tracking_model(), sc.procedure(), rng);
    }

    void write_timeline_csv(std::ostream &out, const std::vector<TimelineRow> &timeline)
    {
        out << "t_ms,state,alice_upa,alice_row,alice_col,bob_upa,bob_row,bob_col,snr_db,norm_gain,"
               "upper_gain,threshold_db\n";
        for (const auto &r : timeline)
            out << fmt::format("{:.3f},{},{},{},{},{},{},{},{},{},{},{}\n", r.t_ms, to_string(r.state),
                               r.pair.alice.upa, r.pair.alice.row, r.pair.alice.col, r.pair.bob.upa,
                               r.pair.bob.row, r.pair.bob.col, num(r.snr_db), num(r.norm_gain),
                               num(r.upper_gain), num(r.threshold_db));
    }

    std::string summary_json(const ProcedureResult &result)
    {
        const ProcedureSummary &s = result.summary;
        json j;
        j["schema_version"] = kOutputSchemaVersion;
        j["events"] = {{"training", s.trainings},
                       {"mode2_attempts", s.mode2_attempts},
                       {"mode2_successes", s.mode2_successes},
                       {"mode1_attempts", s.mode1_attempts},
                       {"mode1_successes", s.mode1_successes}};
        j["slots"] = {{"training", s.training_slots},
                      {"tracking", s.tracking_slots},
                      {"total", s.training_slots + s.tracking_slots}};
        j["data_blocks"] = s.data_blocks;
        j["min_norm_gain"] = s.min_norm_gain;
        j["outage_threshold"] = kOutageGain;
        j["outage_count"] = s.outages;
        j["within_3db_fraction"] = s.within_3db;
        j["incomplete"] = s.incomplete;
        return j.dump(2) + "\n";
    }

    std::vector<std::filesystem::path> run_experiment(const ExperimentConfig &cfg)
    {
        cfg.validate();
        std::filesystem::create_directories(cfg.out_dir);
        const std::string id(to_string(cfg.id));
        const std::filesystem::path csv = cfg.out_dir / (id + ".csv");
        std::vector<std::filesystem::path> written{csv};
        std::ostringstream out;
        schema_line(out, cfg.id);

        switch (cfg.id)
        {
        case ExperimentId::Patterns:
        {
            const CodebookBundle b =
                load_bundle(params_for(cfg, cfg.ns.back(), cfg.variants.front()), cfg.cache_dir);
            std::vector<int> stages;
            for (int s : cfg.pattern_stages)
                if (s <= b.local.stages())
                    stages.push_back(s);
            write_patterns(out, b.local, stages, cfg.pattern_points);
            break;
        }
        case ExperimentId::SnrVsN:
        {
            out << "n,variant,trials,mean_snr_db,min_snr_db,worst_case_snr_db,mean_gain,min_gain\n";
            for (const auto &r : snr_vs_n(cfg))
                out << fmt::format("{},{},{},{},{},{},{},{}\n", r.n, to_string(r.variant), r.trials,
                                   num(r.mean_snr_db), num(r.min_snr_db), num(r.worst_case_snr_db),
                                   num(r.mean_gain), num(r.min_gain));
            break;
        }
        case ExperimentId::WorstcaseVsTests:
        {
            out << "tests,running_min_gain,eta_worst\n";
            for (const auto &p : worstcase_vs_tests(cfg))
                out << fmt::format("{},{},{}\n", p.tests, num(p.running_min_gain), num(p.eta_worst));
            break;
        }
        case ExperimentId::AlignVsSnr:
        {
            out << "variant,n,snr_db,rate,trials\n";
            for (const auto &r : align_vs_snr(cfg))
                out << fmt::format("{},{},{},{},{}\n", to_string(r.variant), cfg.ns.back(), num(r.point.snr_db),
                                   num(r.point.rate), r.point.trials);
            break;
        }
        case ExperimentId::TrackingTrace:
        {
            const ProcedureResult res = tracking_trace(cfg);
            write_timeline_csv(out, res.timeline);
            const std::filesystem::path js = cfg.out_dir / (id + ".json");
            write_file(js, summary_json(res));
            written.push_back(js);
            break;
        }
        }
        write_file(csv, out.str());
        return written;
    }
}
