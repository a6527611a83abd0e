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

// Command-line front end: codebook synthesis, beam patterns, training, tracking and the
// experiment sweeps.

#include "qupa/codebook_io.hpp"
#include "qupa/experiment.hpp"
#include "qupa/parallel.hpp"
#include "qupa/scenario.hpp"
#include "qupa/tracking.hpp"
#include "qupa/training.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{
    constexpr int kPaperTrackingN = 32;

    struct Globals
    {
        std::optional<std::uint64_t> seed;
        std::string config;
        std::string out = ".";
        bool paper = false;
        std::size_t threads = 0;
    };

    struct CodebookOptions
    {
        std::optional<int> n;
        std::string variant;
        std::optional<int> buffer_width;
        std::optional<double> buffer_gain;
        std::optional<double> tikhonov;
        std::string file;

        void add(CLI::App *app, bool with_file)
        {
            app->add_option("--n", n, "Narrow beams per axis (power of two)");
            app->add_option("--variant", variant,
                            "proposed | strict-benchmark | uniform-real | uniform-virtual (train also takes exhaustive)");
            app->add_option("--buffer-width", buffer_width, "Buffer width in grid blocks");
            app->add_option("--buffer-gain", buffer_gain, "Buffer target gain in [0, 1)");
            app->add_option("--tikhonov", tikhonov, "Relative diagonal loading of the Gram matrix");
            if (with_file)
                app->add_option("--codebook", file, "Codebook file; built when missing");
        }
    };

    qupa::CodebookVariant variant_from_cli(const std::string &name)
    {
        if (name == "strict-benchmark")
            return qupa::CodebookVariant::StrictBenchmark;
        return qupa::parse_variant(name);
    }

    std::string variant_to_cli(qupa::CodebookVariant v)
    {
        return v == qupa::CodebookVariant::StrictBenchmark ? "strict-benchmark" : std::string(qupa::to_string(v));
    }

    qupa::Scenario base_scenario(const Globals &g)
    {
        qupa::Scenario s = qupa::default_scenario();
        if (!g.paper && !g.config.empty())
            s = qupa::load_scenario(g.config);
        else if (g.paper && !g.config.empty())
            fmt::print(stderr, "warning: --paper ignores --config {}\n", g.config);
        if (g.seed)
        {
            s.seed = *g.seed;
            s.los.trajectory.seed = *g.seed;
        }
        return s;
    }

    qupa::CodebookParams codebook_params(const qupa::Scenario &s, const CodebookOptions &o)
    {
        qupa::CodebookParams p = s.codebook;
        p.array = s.array;
        if (o.n)
            p.n = *o.n;
        if (!o.variant.empty())
            p.variant = variant_from_cli(o.variant);
        if (o.buffer_width)
            p.buffer_width = *o.buffer_width;
        if (o.buffer_gain)
            p.buffer_gain = *o.buffer_gain;
        if (o.tikhonov)
            p.tikhonov = *o.tikhonov;
        p.validate();
        return p;
    }

    // Loads the named codebook file, or builds and writes it when it does not exist yet
    qupa::CodebookBundle open_codebook(const qupa::CodebookParams &params, const std::string &file,
                                       const fs::path &out)
    {
        if (file.empty())
            return qupa::load_bundle(params, out / "codebooks");
        qupa::CodebookBundle b;
        if (fs::exists(file))
        {
            b.local = qupa::load_codebook(file);
            b.synth = std::make_shared<const qupa::WideBeamSynthesizer>(b.local.params().array, b.local.n(),
                                                                        b.local.params().tikhonov);
        }
        else
        {
            fmt::print(stderr, "warning: codebook {} not found, building it\n", file);
            b.synth = std::make_shared<const qupa::WideBeamSynthesizer>(params.array, params.n, params.tikhonov);
            b.local = qupa::build_codebook(params, b.synth.get());
            qupa::save_codebook(b.local, file);
        }
        b.qupa = qupa::make_qupa_codebook(b.local);
        return b;
    }

    void write_text(const fs::path &path, const std::string &body)
    {
        if (path.has_parent_path())
            fs::create_directories(path.parent_path());
        std::ofstream f(path, std::ios::binary);
        if (!f)
            throw std::runtime_error("cannot write " + path.string());
        f << body;
        if (!f)
            throw std::runtime_error("failed writing " + path.string());
    }

    std::optional<qupa::Direction> parse_direction(const std::string &text)
    {
        if (text.empty())
            return std::nullopt;
        const auto comma = text.find(',');
        if (comma == std::string::npos)
            throw CLI::ValidationError("direction", "expected AZIMUTH_DEG,ELEVATION_DEG");
        const double az = std::stod(text.substr(0, comma));
        const double el = std::stod(text.substr(comma + 1));
        return qupa::Direction{az * qupa::kPi / 180.0, el * qupa::kPi / 180.0};
    }

    json pair_json(const qupa::BeamPair &p)
    {
        return {{"alice_upa", p.tx_upa}, {"bob_upa", p.rx_upa}, {"alice_index", p.tx_index}, {"bob_index", p.rx_index}};
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"QUPA terahertz beam training and tracking simulator"};
    app.require_subcommand(1);

    Globals g;
    app.add_option("--seed", g.seed, "Master seed (overrides the scenario seed)");
    app.add_option("--config", g.config, "Scenario JSON file")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "Output directory");
    app.add_flag("--paper", g.paper, "Use the reference parameter set");
    app.add_option("--threads", g.threads, "Worker threads, 0 = all cores");

    // codebook
    CodebookOptions cb_opt;
    auto *cmd_codebook = app.add_subcommand("codebook", "Synthesize a hierarchical codebook and store it");
    cb_opt.add(cmd_codebook, false);
    std::string cb_file;
    cmd_codebook->add_option("--file", cb_file, "Output file (default: <out>/<cache name>)");

    // pattern
    CodebookOptions pat_opt;
    auto *cmd_pattern = app.add_subcommand("pattern", "Export beam gain patterns as CSV");
    pat_opt.add(cmd_pattern, true);
    std::vector<int> pat_stages{0, 1, 2, 3};
    int pat_points = 91;
    cmd_pattern->add_option("--stages", pat_stages, "Stages to export");
    cmd_pattern->add_option("--points", pat_points, "Grid points per axis")->check(CLI::Range(2, 2000));

    // train
    CodebookOptions tr_opt;
    auto *cmd_train = app.add_subcommand("train", "Run one beam training and print a JSON record");
    tr_opt.add(cmd_train, true);
    std::string tr_dep, tr_arr;
    std::string tr_bob_file;
    cmd_train->add_option("--bob-codebook", tr_bob_file, "Separate codebook file for Bob");
    cmd_train->add_option("--departure", tr_dep, "LoS departure AZ,EL in degrees");
    cmd_train->add_option("--arrival", tr_arr, "LoS arrival AZ,EL in degrees");

    // track
    CodebookOptions tk_opt;
    auto *cmd_track = app.add_subcommand("track", "Run training and tracking over a trajectory");
    tk_opt.add(cmd_track, true);
    std::optional<double> tk_horizon;
    cmd_track->add_option("--horizon-ms", tk_horizon, "Simulated duration");

    // experiment
    auto *cmd_exp = app.add_subcommand("experiment", "Run a result sweep and write CSV/JSON files");
    std::string exp_id;
    std::vector<int> exp_ns;
    std::vector<std::string> exp_variants;
    std::vector<double> exp_snr;
    std::optional<int> exp_trials, exp_max_tests;
    bool exp_noisy = false;
    std::string exp_cache;
    cmd_exp->add_option("id", exp_id, "patterns | snr_vs_n | worstcase_vs_tests | align_vs_snr | tracking_trace")
        ->required();
    cmd_exp->add_option("--ns", exp_ns, "Narrow beams per axis to sweep");
    cmd_exp->add_option("--variants", exp_variants, "Codebook variants");
    cmd_exp->add_option("--snr", exp_snr, "Reference SNR points in dB");
    cmd_exp->add_option("--trials", exp_trials, "Trials per point")->check(CLI::PositiveNumber);
    cmd_exp->add_option("--max-tests", exp_max_tests, "Directions for worstcase_vs_tests")->check(CLI::PositiveNumber);
    cmd_exp->add_flag("--noisy", exp_noisy, "Use noisy measurements in snr_vs_n and worstcase_vs_tests");
    cmd_exp->add_option("--cache-dir", exp_cache, "Codebook cache directory (default <out>/codebooks)");

    CLI11_PARSE(app, argc, argv);

    try
    {
        qupa::parallel_workers() = g.threads;
        const fs::path out = g.out;
        fs::create_directories(out);
        qupa::Scenario scenario = base_scenario(g);

        if (*cmd_codebook)
        {
            const qupa::CodebookParams p = codebook_params(scenario, cb_opt);
            const fs::path file = cb_file.empty() ? out / qupa::cache_file_name(p) : fs::path(cb_file);
            auto synth = std::make_shared<const qupa::WideBeamSynthesizer>(p.array, p.n, p.tikhonov);
            if (synth->ill_conditioned())
                fmt::print(stderr, "warning: Gram matrix is ill-conditioned at N = {}\n", p.n);
            const qupa::HierarchicalCodebook cb = qupa::build_codebook(p, synth.get());
            if (file.has_parent_path())
                fs::create_directories(file.parent_path());
            qupa::save_codebook(cb, file);
            json j{{"file", file.string()},
                   {"n", p.n},
                   {"stages", cb.stages()},
                   {"variant", variant_to_cli(p.variant)},
                   {"buffer_width", p.effective_buffer_width()},
                   {"buffer_gain", p.buffer_gain},
                   {"tikhonov", p.tikhonov},
                   {"eta_worst", qupa::eta_worst(p.n, p.array.n_y, p.array.n_z).eta_worst}};
            std::cout << j.dump(2) << "\n";
        }
        else if (*cmd_pattern)
        {
            const qupa::CodebookParams p = codebook_params(scenario, pat_opt);
            const qupa::CodebookBundle b = open_codebook(p, pat_opt.file, out);
            std::ostringstream body;
            body << "# schema: pattern/" << qupa::kOutputSchemaVersion << "\n";
            qupa::write_patterns(body, b.local, pat_stages, pat_points);
            write_text(out / "pattern.csv", body.str());
            std::cout << (out / "pattern.csv").string() << "\n";
        }
        else if (*cmd_train)
        {
            const bool exhaustive = tr_opt.variant == "exhaustive";
            if (exhaustive)
                tr_opt.variant = "proposed";
            const qupa::CodebookParams p = codebook_params(scenario, tr_opt);
            const qupa::CodebookBundle alice = open_codebook(p, tr_opt.file, out);
            const qupa::CodebookBundle bob = tr_bob_file.empty() ? alice : open_codebook(p, tr_bob_file, out);

            if (const auto d = parse_direction(tr_dep))
            {
                scenario.los.kind = qupa::LosKind::Static;
                scenario.los.departure = *d;
            }
            if (const auto a = parse_direction(tr_arr))
            {
                scenario.los.kind = qupa::LosKind::Static;
                scenario.los.arrival = *a;
            }
            const auto source = qupa::make_channel_source(scenario, g.config.empty() ? fs::path() : fs::path(g.config).parent_path());
            const qupa::LinkEvaluator link(source->at(0.0));
            qupa::Rng rng = qupa::make_rng(scenario.seed, 2, 0);
            const qupa::TrainingResult r =
                qupa::run_training(exhaustive ? qupa::TrainingScheme::Exhaustive : qupa::TrainingScheme::GridBased,
                                   link, alice.qupa, bob.qupa, scenario.training_model(), rng);
            json j{{"scheme", exhaustive ? std::string("exhaustive") : variant_to_cli(p.variant)},
                   {"n", p.n},
                   {"seed", scenario.seed},
                   {"pair", pair_json(r.pair)},
                   {"oracle_pair", pair_json(qupa::oracle_pair(link, alice.qupa, bob.qupa))},
                   {"measurement_slots", r.measurement_slots},
                   {"aligned", r.aligned},
                   {"snr_db", r.snr_db},
                   {"norm_gain", r.norm_gain},
                   {"reference_snr_db", qupa::reference_snr_db(scenario.budget, scenario.array)}};
            std::cout << j.dump(2) << "\n";
        }
        else if (*cmd_track)
        {
            if (g.paper && !tk_opt.n)
            {
                tk_opt.n = kPaperTrackingN;
                fmt::print(stderr, "warning: N = {} tracking is slow (synthesis and tracking beams)\n", kPaperTrackingN);
            }
            scenario.los.kind = qupa::LosKind::Trajectory;
            if (tk_horizon)
            {
                scenario.tracking.horizon_ms = *tk_horizon;
                scenario.los.trajectory.horizon_s = *tk_horizon / 1000.0;
            }
            const qupa::CodebookParams p = codebook_params(scenario, tk_opt);
            scenario.codebook = p;
            const qupa::CodebookBundle b = open_codebook(p, tk_opt.file, out);
            const auto source = qupa::make_channel_source(scenario, g.config.empty() ? fs::path() : fs::path(g.config).parent_path());
            const qupa::TrackingCodebook tracking(b.synth, p.effective_buffer_width(), p.buffer_gain);
            qupa::Rng rng = qupa::make_rng(scenario.seed, 3, 0);
            const qupa::ProcedureResult res =
                qupa::run_procedure(*source, b.qupa, tracking, scenario.tracking_model(), scenario.procedure(), rng);
            std::ostringstream body;
            body << "# schema: track/" << qupa::kOutputSchemaVersion << "\n";
            qupa::write_timeline_csv(body, res.timeline);
            write_text(out / "track.csv", body.str());
            write_text(out / "track.json", qupa::summary_json(res));
            std::cout << qupa::summary_json(res);
        }
        else if (*cmd_exp)
        {
            qupa::ExperimentConfig cfg;
            cfg.id = qupa::parse_experiment(exp_id);
            cfg.scenario = scenario;
            cfg.seed = scenario.seed;
            cfg.out_dir = out;
            cfg.cache_dir = exp_cache.empty() ? out / "codebooks" : fs::path(exp_cache);
            cfg.noiseless = !exp_noisy;
            if (g.paper && cfg.id == qupa::ExperimentId::TrackingTrace && exp_ns.empty())
            {
                exp_ns = {kPaperTrackingN};
                fmt::print(stderr, "warning: N = {} tracking is slow (synthesis and tracking beams)\n", kPaperTrackingN);
            }
            if (!exp_ns.empty())
                cfg.ns = exp_ns;
            if (!exp_variants.empty())
            {
                cfg.variants.clear();
                for (const auto &v : exp_variants)
                    cfg.variants.push_back(variant_from_cli(v));
            }
            else if (cfg.id == qupa::ExperimentId::AlignVsSnr)
            {
                cfg.variants = {qupa::CodebookVariant::Proposed, qupa::CodebookVariant::StrictBenchmark};
            }
            else if (cfg.id != qupa::ExperimentId::SnrVsN)
            {
                cfg.variants = {scenario.codebook.variant};
            }
            if (!exp_snr.empty())
                cfg.snr_sweep_db = exp_snr;
            if (exp_trials)
                cfg.trials = *exp_trials;
            if (exp_max_tests)
                cfg.max_tests = *exp_max_tests;
            for (const auto &path : qupa::run_experiment(cfg))
                std::cout << path.string() << "\n";
        }
    }
    catch (const std::exception &e)
    {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
