// SPDX-License-Identifier: Apache-2.0
//
// qsbf: quadratic-surface SVM digital beamformer simulation library
// Copyright (C) 2026 The qsbf Authors
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

// Command-line front end: simulate, train, doa, beamform, pattern, bench.
// Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qsbf/io.hpp"

namespace
{
    using namespace qsbf;
    using nlohmann::json;

    struct Globals
    {
        std::string config;
        std::optional<std::uint64_t> seed;
        std::string out;
    };

    bool ends_with(const std::string &s, const std::string &suffix)
    {
        return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
    }

    // "a:b:step" expands to an inclusive range, otherwise a comma list.
    std::vector<double> parse_list(const std::string &s)
    {
        std::vector<double> out;
        if (std::count(s.begin(), s.end(), ':') == 2)
        {
            const auto g = AngleGrid::parse(s);
            return g.values();
        }
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ','))
        {
            try
            {
                out.push_back(item == "inf" || item == "+inf" ? std::numeric_limits<double>::infinity() : std::stod(item));
            }
            catch (const std::exception &)
            {
                throw ConfigError("cannot parse '" + item + "' as a number");
            }
        }
        require(!out.empty(), "empty list '" + s + "'");
        return out;
    }

    // "lo..hi" or a comma list of integers.
    std::vector<int> parse_int_range(const std::string &s)
    {
        std::vector<int> out;
        const auto dots = s.find("..");
        try
        {
            if (dots != std::string::npos)
            {
                const int lo = std::stoi(s.substr(0, dots)), hi = std::stoi(s.substr(dots + 2));
                require(lo <= hi, "range '" + s + "' is empty");
                for (int v = lo; v <= hi; ++v)
                    out.push_back(v);
                return out;
            }
            for (double v : parse_list(s))
                out.push_back(static_cast<int>(v));
        }
        catch (const ConfigError &)
        {
            throw;
        }
        catch (const std::exception &)
        {
            throw ConfigError("cannot parse integer range '" + s + "'");
        }
        return out;
    }

    struct Config
    {
        std::optional<json> scenario;
        std::optional<json> train;
    };

    Config load_config(const std::string &path)
    {
        Config c;
        if (path.empty())
            return c;
        const json j = io::read_json(path);
        if (j.contains("sources"))
        {
            c.scenario = j;
            return c;
        }
        io::detail::check_keys(j, {"scenario", "train"}, "config");
        if (j.contains("scenario"))
            c.scenario = j.at("scenario");
        if (j.contains("train"))
            c.train = j.at("train");
        return c;
    }

    Scenario resolve_scenario(const Globals &g, const std::string &scenario_path, Scenario fallback)
    {
        Scenario sc = fallback;
        if (!scenario_path.empty())
            sc = io::scenario_from_json(io::read_json(scenario_path));
        else if (auto c = load_config(g.config); c.scenario)
            sc = io::scenario_from_json(*c.scenario);
        if (g.seed)
            sc.seed = *g.seed;
        return sc;
    }

    TrainConfig train_from_json(const json &j)
    {
        const std::string w = "train";
        io::detail::check_keys(j, {"per_class", "snr_lo", "snr_hi", "snapshots", "seed", "eta", "lambda"}, w);
        TrainConfig t;
        t.per_class = io::detail::get_or(j, "per_class", t.per_class, w);
        t.snr_lo = io::detail::get_or(j, "snr_lo", t.snr_lo, w);
        t.snr_hi = io::detail::get_or(j, "snr_hi", t.snr_hi, w);
        t.snapshots = io::detail::get_or(j, "snapshots", t.snapshots, w);
        t.seed = io::detail::get_or(j, "seed", t.seed, w);
        t.hyper.slack_penalty = io::detail::get_or(j, "eta", t.hyper.slack_penalty, w);
        t.hyper.quad_regularizer = io::detail::get_or(j, "lambda", t.hyper.quad_regularizer, w);
        t.validate();
        return t;
    }

    json to_json(const TrainConfig &t)
    {
        return {{"per_class", t.per_class}, {"snr_lo", t.snr_lo},   {"snr_hi", t.snr_hi},
                {"snapshots", t.snapshots}, {"seed", t.seed},       {"eta", t.hyper.slack_penalty},
                {"lambda", t.hyper.quad_regularizer}};
    }

    void emit_text(const std::string &out, const std::string &text)
    {
        if (out.empty() || out == "-")
            std::cout << text;
        else
            io::write_text(out, text);
    }

    void emit_bench(const std::string &out, const BenchResult &r)
    {
        if (ends_with(out, ".json"))
        {
            io::write_json(out, io::to_json(r));
            return;
        }
        emit_text(out, io::bench_csv(r));
        if (!out.empty() && out != "-")
            io::write_json(out + ".json", io::to_json(r));
    }

    QsSvmModel load_model(const std::string &path)
    {
        require(!path.empty(), "no model given; run `train` first and pass --model");
        return io::model_from_json(io::read_json(path));
    }

    int run(int argc, char **argv)
    {
        CLI::App app{"qsbf: QS-SVM digital beamformer simulation"};
        app.require_subcommand(1);
        app.fallthrough(); // global flags may follow the subcommand
        Globals g;
        app.add_option("--config", g.config, "JSON config: a scenario, or {\"scenario\": ..., \"train\": ...}");
        app.add_option("--seed", g.seed, "override the scenario seed");
        app.add_option("--out", g.out, "output path (stdout when omitted)");

        std::string scenario_path, model_path, method = "lcmv", grid, classes;
        TrainConfig tcfg;
        std::optional<double> eta, lambda, forgetting;

        auto *sim = app.add_subcommand("simulate", "simulate snapshots; writes <out> (binary) and <out>.json");
        sim->add_option("--scenario", scenario_path, "scenario JSON");

        auto *train = app.add_subcommand("train", "train a DoA classifier; writes model JSON");
        train->add_option("--scenario", scenario_path, "scenario JSON");
        train->add_option("--classes", classes, "class grid start:stop:step in degrees");
        train->add_option("--eta", eta, "slack penalty");
        train->add_option("--lambda", lambda, "quadratic-part regularizer");
        train->add_option("--per-class", tcfg.per_class, "training scenes per class");
        train->add_option("--train-snapshots", tcfg.snapshots, "snapshots per training scene");

        auto *doa = app.add_subcommand("doa", "estimate source directions; writes doa JSON with vote tallies");
        doa->add_option("--scenario", scenario_path, "scenario JSON");
        doa->add_option("--model", model_path, "model JSON from `train`")->required();

        auto *beam = app.add_subcommand("beamform", "beam pattern from the true source directions");
        beam->add_option("--scenario", scenario_path, "scenario JSON");
        beam->add_option("--method", method, "mvdr or lcmv")->check(CLI::IsMember({"mvdr", "lcmv"}));
        beam->add_option("--grid", grid, "azimuth grid start:stop:step in degrees");
        beam->add_option("--forgetting", forgetting, "form the covariance through the streaming QR factor with this forgetting factor");

        auto *pat = app.add_subcommand("pattern", "DoA estimation followed by the null-steered pattern");
        pat->add_option("--scenario", scenario_path, "scenario JSON");
        pat->add_option("--model", model_path, "model JSON from `train`")->required();
        pat->add_option("--grid", grid, "azimuth grid start:stop:step in degrees");
        pat->add_option("--forgetting", forgetting, "form the covariance through the streaming QR factor with this forgetting factor");

        auto *bench = app.add_subcommand("bench", "benchmarks");
        bench->require_subcommand(1);
        bench->fallthrough();
        std::string snr_list = "-10:20:5", batches = "1,4,16,64,256", gains = "bowtie,dipole", fmt = "18.12", stages = "0..8",
                    accumulation = "full";
        std::size_t trials = 200, len = 140, vectors = 1000, runs = 5;
        double snr = 5.0;
        int fanin = 2;
        bool randomize = false;

        auto *b_thr = bench->add_subcommand("throughput", "desired-source success rate vs SNR");
        b_thr->add_option("--scenario", scenario_path, "scenario JSON");
        b_thr->add_option("--model", model_path, "model JSON (trained on demand when omitted)");
        b_thr->add_option("--snr", snr_list, "SNR list: start:stop:step or comma list");
        b_thr->add_option("--trials", trials, "trials per SNR point");
        b_thr->add_flag("--randomize-desired", randomize, "draw the desired class uniformly per trial");

        auto *b_lat = bench->add_subcommand("latency", "per-sample classification latency vs batch size");
        b_lat->add_option("--scenario", scenario_path, "scenario JSON");
        b_lat->add_option("--model", model_path, "model JSON (trained on demand when omitted)");
        b_lat->add_option("--batches", batches, "comma list of batch sizes");
        b_lat->add_option("--runs", runs, "timed runs (median reported)");

        auto *b_dp = bench->add_subcommand("datapath", "fixed-point inner-product cycle and error sweep");
        b_dp->add_option("--len", len, "vector length");
        b_dp->add_option("--fmt", fmt, "fixed-point format W.F");
        b_dp->add_option("--stages", stages, "pipeline stages, lo..hi or comma list");
        b_dp->add_option("--fanin", fanin, "adder tree fan-in");
        b_dp->add_option("--vectors", vectors, "random vector pairs per point");
        b_dp->add_option("--accumulation", accumulation, "full or per-product")->check(CLI::IsMember({"full", "per-product"}));

        auto *b_eff = bench->add_subcommand("efficiency", "accuracy per element gain pattern");
        b_eff->add_option("--scenario", scenario_path, "scenario JSON");
        b_eff->add_option("--gains", gains, "comma list of gain patterns");
        b_eff->add_option("--snr", snr, "SNR in dB");
        b_eff->add_option("--trials", trials, "trials");

        try
        {
            app.parse(argc, argv);
        }
        catch (const CLI::ParseError &e)
        {
            const int code = app.exit(e);
            return code == 0 ? 0 : 2;
        }

        const Config cfg = load_config(g.config);
        if (cfg.train)
            tcfg = train_from_json(*cfg.train);
        if (eta)
            tcfg.hyper.slack_penalty = *eta;
        if (lambda)
            tcfg.hyper.quad_regularizer = *lambda;
        tcfg.validate();

        auto train_for = [&](const Scenario &sc, const ArrayLayout &layout) {
            std::cerr << "training " << sc.classes.values().size() << "-class model...\n";
            return train_doa_model(sc, layout, tcfg);
        };

        if (*sim)
        {
            const Scenario sc = resolve_scenario(g, scenario_path, Scenario::three_source_scene());
            require(!g.out.empty(), "simulate: --out is required");
            const auto layout = scenario_layout(sc);
            io::write_snapshots(g.out, g.out + ".json", simulate(sc, layout));
            return 0;
        }
        if (*train)
        {
            Scenario sc = resolve_scenario(g, scenario_path, Scenario::three_source_scene());
            if (!classes.empty())
                sc.classes = AngleGrid::parse(classes);
            sc.validate();
            const auto layout = scenario_layout(sc);
            json j = io::to_json(train_for(sc, layout));
            j["training"] = {{"config", to_json(tcfg)}, {"scenario", io::to_json(sc)}};
            emit_text(g.out, j.dump(2) + "\n");
            return 0;
        }
        if (*doa)
        {
            const Scenario sc = resolve_scenario(g, scenario_path, Scenario::three_source_scene());
            const auto layout = scenario_layout(sc);
            const auto r = run_doa(sc, layout, load_model(model_path));
            emit_text(g.out, io::to_json(r).dump(2) + "\n");
            return 0;
        }
        if (*beam || *pat)
        {
            Scenario sc = resolve_scenario(g, scenario_path, Scenario::three_source_scene());
            if (!grid.empty())
                sc.pattern_grid = AngleGrid::parse(grid);
            const auto layout = scenario_layout(sc);
            const auto X = simulate(sc, layout);
            const auto R = forgetting ? streaming_covariance(X, *forgetting, default_loading(X)) : sample_covariance(X);
            BeamPattern p;
            if (*beam)
            {
                // estimates = the true source directions
                DoaResult truth;
                for (std::size_t k = 0; k < sc.sources.size(); ++k)
                    truth.estimates.push_back({sc.sources[k].direction, 0, 0});
                truth.desired = sc.desired_index;
                if (method == "lcmv")
                    for (std::size_t k = 0; k < sc.sources.size(); ++k)
                        if (k != sc.desired_index)
                            truth.interferers.push_back(k);
                p = synthesize_pattern(sc, layout, truth, R).pattern;
            }
            else
            {
                const auto r = run_doa(sc, layout, load_model(model_path), X);
                p = synthesize_pattern(sc, layout, r, R).pattern;
            }
            emit_text(g.out, io::pattern_csv(p));
            return 0;
        }
        if (*b_thr)
        {
            const Scenario sc = resolve_scenario(g, scenario_path, bench_scene());
            const auto layout = scenario_layout(sc);
            const auto model = model_path.empty() ? train_for(sc, layout) : load_model(model_path);
            auto r = throughput_vs_snr(sc, layout, model, parse_list(snr_list), trials, randomize);
            r.config["train"] = to_json(tcfg);
            emit_bench(g.out, r);
            return 0;
        }
        if (*b_lat)
        {
            const Scenario sc = resolve_scenario(g, scenario_path, bench_scene());
            const auto layout = scenario_layout(sc);
            const auto model = model_path.empty() ? train_for(sc, layout) : load_model(model_path);
            std::vector<std::size_t> sizes;
            for (double b : parse_list(batches))
            {
                require(b >= 1.0 && b == std::floor(b), "latency: batch sizes must be positive integers");
                sizes.push_back(static_cast<std::size_t>(b));
            }
            const auto pool = feature_pool(sc, layout, model, *std::max_element(sizes.begin(), sizes.end()));
            LatencyOptions opt;
            opt.runs = runs;
            auto r = latency_vs_batch(model, pool, sizes, opt);
            r.seed = sc.seed;
            r.config["scenario"] = scenario_summary(sc);
            emit_bench(g.out, r);
            return 0;
        }
        if (*b_dp)
        {
            const auto f = FixedPointFormat::parse(fmt);
            const auto r = datapath_sweep(len, f, parse_int_range(stages), fanin, vectors, g.seed.value_or(1),
                                          accumulation == "full" ? Accumulation::full_precision : Accumulation::per_product);
            emit_bench(g.out, r);
            return 0;
        }
        if (*b_eff)
        {
            Scenario sc = resolve_scenario(g, scenario_path, bench_scene());
            sc.snr_db = snr;
            std::vector<std::string> names;
            std::stringstream ss(gains);
            for (std::string item; std::getline(ss, item, ',');)
                names.push_back(item);
            const auto r = efficiency_compare(sc, names, trials, tcfg);
            emit_bench(g.out, r);
            return 0;
        }
        return 2;
    }
}

int main(int argc, char **argv)
{
    try
    {
        return run(argc, argv);
    }
    catch (const qsbf::ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    catch (const qsbf::NumericalError &e)
    {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
