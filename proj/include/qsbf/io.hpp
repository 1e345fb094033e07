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

#pragma once

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "qsbf/bench.hpp"
#include "qsbf/doa_pipeline.hpp"

namespace qsbf::io
{
    using nlohmann::json;

    inline constexpr int schema_version = 1;

    namespace detail
    {
        inline void check_keys(const json &j, const std::set<std::string> &allowed, const std::string &where)
        {
            require(j.is_object(), where + ": expected a JSON object");
            for (const auto &item : j.items())
                require(allowed.count(item.key()) > 0, where + ": unknown key '" + item.key() + "'");
        }

        template <typename T>
        T get(const json &j, const std::string &key, const std::string &where)
        {
            try
            {
                return j.at(key).get<T>();
            }
            catch (const json::exception &e)
            {
                throw ConfigError(where + "." + key + ": " + e.what());
            }
        }

        template <typename T>
        T get_or(const json &j, const std::string &key, T fallback, const std::string &where)
        {
            return j.contains(key) ? get<T>(j, key, where) : fallback;
        }

        /// Numbers, or the strings "inf" / "+inf".
        inline double get_extended(const json &j, const std::string &key, double fallback, const std::string &where)
        {
            if (!j.contains(key))
                return fallback;
            const auto &v = j.at(key);
            if (v.is_string())
            {
                const auto s = v.get<std::string>();
                require(s == "inf" || s == "+inf", where + "." + key + ": expected a number or \"inf\"");
                return std::numeric_limits<double>::infinity();
            }
            return get<double>(j, key, where);
        }

        inline json extended(double v) { return std::isinf(v) && v > 0 ? json("inf") : json(v); }

        inline AngleGrid get_grid(const json &j, const std::string &key, AngleGrid fallback, const std::string &where)
        {
            if (!j.contains(key))
                return fallback;
            const auto &v = j.at(key);
            if (v.is_string())
                return AngleGrid::parse(v.get<std::string>());
            const auto a = get<std::vector<double>>(j, key, where);
            require(a.size() == 3, where + "." + key + ": expected [start, stop, step] or \"start:stop:step\"");
            AngleGrid g{a[0], a[1], a[2]};
            g.validate(where + "." + key);
            return g;
        }
    }

    inline json parse_json_text(const std::string &text, const std::string &what)
    {
        try
        {
            return json::parse(text);
        }
        catch (const json::parse_error &e)
        {
            throw ConfigError(what + ": invalid JSON: " + e.what());
        }
    }

    inline std::string read_text(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        require(static_cast<bool>(in), "cannot open '" + path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    inline json read_json(const std::string &path) { return parse_json_text(read_text(path), path); }

    inline void write_text(const std::string &path, const std::string &text)
    {
        std::ofstream out(path, std::ios::binary);
        require(static_cast<bool>(out), "cannot write '" + path + "'");
        out << text;
        require(static_cast<bool>(out), "write to '" + path + "' failed");
    }

    inline void write_json(const std::string &path, const json &j) { write_text(path, j.dump(2) + "\n"); }

    // ---- array -----------------------------------------------------------------

    inline ArrayParams array_from_json(const json &j)
    {
        const std::string w = "array";
        detail::check_keys(j, {"n_per_loop", "loops_per_cylinder", "n_cylinders", "circular_elements", "d_v_wavelengths",
                               "d_r_wavelengths", "carrier_freq_hz"},
                           w);
        ArrayParams p;
        p.n_per_loop = detail::get_or(j, "n_per_loop", p.n_per_loop, w);
        p.loops_per_cylinder = detail::get_or(j, "loops_per_cylinder", p.loops_per_cylinder, w);
        p.n_cylinders = detail::get_or(j, "n_cylinders", p.n_cylinders, w);
        p.circular_elements = detail::get_or(j, "circular_elements", p.circular_elements, w);
        p.d_v = detail::get_or(j, "d_v_wavelengths", p.d_v, w);
        p.d_r = detail::get_or(j, "d_r_wavelengths", p.d_r, w);
        p.carrier_freq = detail::get_or(j, "carrier_freq_hz", p.carrier_freq, w);
        p.validate();
        return p;
    }

    inline json to_json(const ArrayParams &p)
    {
        return {{"n_per_loop", p.n_per_loop},           {"loops_per_cylinder", p.loops_per_cylinder},
                {"n_cylinders", p.n_cylinders},         {"circular_elements", p.circular_elements},
                {"d_v_wavelengths", p.d_v},             {"d_r_wavelengths", p.d_r},
                {"carrier_freq_hz", p.carrier_freq}};
    }

    // ---- scenario --------------------------------------------------------------

    inline Scenario scenario_from_json(const json &j)
    {
        const std::string w = "scenario";
        detail::check_keys(j, {"array", "gain", "sources", "desired_index", "snr_db", "snapshots", "seed", "sample_rate_hz",
                               "elevation_deg", "classes", "pattern_grid", "rician_k"},
                           w);
        Scenario sc;
        if (j.contains("array"))
            sc.array = array_from_json(j.at("array"));
        sc.gain = detail::get_or<std::string>(j, "gain", sc.gain, w);
        sc.desired_index = detail::get_or<std::size_t>(j, "desired_index", sc.desired_index, w);
        sc.snr_db = detail::get_extended(j, "snr_db", sc.snr_db, w);
        sc.snapshots = detail::get_or<std::size_t>(j, "snapshots", sc.snapshots, w);
        sc.seed = detail::get_or<std::uint64_t>(j, "seed", sc.seed, w);
        sc.sample_rate = detail::get_or(j, "sample_rate_hz", sc.sample_rate, w);
        sc.classes = detail::get_grid(j, "classes", sc.classes, w);
        sc.pattern_grid = detail::get_grid(j, "pattern_grid", sc.pattern_grid, w);
        if (j.contains("rician_k") && !j.at("rician_k").is_null())
            sc.rician_k = detail::get<double>(j, "rician_k", w);

        require(j.contains("sources") && j.at("sources").is_array(), "scenario.sources: expected an array of sources");
        const auto &src = j.at("sources");
        double first_el = 45.0;
        for (std::size_t k = 0; k < src.size(); ++k)
        {
            const std::string ws = w + ".sources[" + std::to_string(k) + "]";
            detail::check_keys(src[k], {"az_deg", "el_deg", "power_db", "frequency_hz", "phase_rad"}, ws);
            const double az = detail::get<double>(src[k], "az_deg", ws);
            const double el = detail::get_or(src[k], "el_deg", 45.0, ws);
            if (k == 0)
                first_el = el;
            auto s = Scenario::make_source(el, az, detail::get_or(src[k], "power_db", 0.0, ws), k, sc.sample_rate);
            s.frequency = detail::get_or(src[k], "frequency_hz", s.frequency, ws);
            s.phase = detail::get_or(src[k], "phase_rad", 0.0, ws);
            sc.sources.push_back(s);
        }
        sc.elevation_deg = detail::get_or(j, "elevation_deg", first_el, w);
        sc.validate();
        return sc;
    }

    inline json to_json(const Scenario &sc)
    {
        json src = json::array();
        for (const auto &s : sc.sources)
            src.push_back({{"az_deg", rad2deg(s.direction.theta)},
                           {"el_deg", rad2deg(s.direction.phi)},
                           {"power_db", 20.0 * std::log10(std::max(s.amplitude, 1e-300))},
                           {"frequency_hz", s.frequency},
                           {"phase_rad", s.phase}});
        json j = {{"array", to_json(sc.array)},
                  {"gain", sc.gain},
                  {"sources", src},
                  {"desired_index", sc.desired_index},
                  {"snr_db", detail::extended(sc.snr_db)},
                  {"snapshots", sc.snapshots},
                  {"seed", sc.seed},
                  {"sample_rate_hz", sc.sample_rate},
                  {"elevation_deg", sc.elevation_deg},
                  {"classes", {sc.classes.start, sc.classes.stop, sc.classes.step}},
                  {"pattern_grid", {sc.pattern_grid.start, sc.pattern_grid.stop, sc.pattern_grid.step}}};
        j["rician_k"] = sc.rician_k ? json(*sc.rician_k) : json(nullptr);
        return j;
    }

    // ---- model -----------------------------------------------------------------

    inline json to_json(const QsSvmModel &m)
    {
        json pairs = json::array();
        for (const auto &p : m.pairs)
            pairs.push_back({{"i", p.i},
                             {"j", p.j},
                             {"w_upper", std::vector<double>(p.surface.w_upper.begin(), p.surface.w_upper.end())},
                             {"b", std::vector<double>(p.surface.b.begin(), p.surface.b.end())},
                             {"c", p.surface.c},
                             {"slacks", std::vector<double>(p.slacks.begin(), p.slacks.end())}});
        return {{"format", "qsbf-model"},
                {"schema_version", schema_version},
                {"feature_map", m.feature_map},
                {"dim", m.dim()},
                {"classes", m.classes},
                {"hyperparams", {{"eta", m.hyper.slack_penalty}, {"lambda", m.hyper.quad_regularizer}}},
                {"pairs", pairs}};
    }

    inline QsSvmModel model_from_json(const json &j)
    {
        const std::string w = "model";
        detail::check_keys(j, {"format", "schema_version", "feature_map", "dim", "classes", "hyperparams", "pairs", "training"}, w);
        require(detail::get<std::string>(j, "format", w) == "qsbf-model", "model: not a qsbf model file");
        require(detail::get<int>(j, "schema_version", w) == schema_version, "model: unsupported schema_version");
        QsSvmModel m;
        m.feature_map = detail::get<std::string>(j, "feature_map", w);
        m.classes = detail::get<std::vector<double>>(j, "classes", w);
        const auto dim = detail::get<Eigen::Index>(j, "dim", w);
        const auto &hp = j.at("hyperparams");
        m.hyper.slack_penalty = detail::get<double>(hp, "eta", w + ".hyperparams");
        m.hyper.quad_regularizer = detail::get<double>(hp, "lambda", w + ".hyperparams");
        m.hyper.validate();
        const int G = m.num_classes();
        require(G >= 2, "model: need at least two classes");
        const auto &pairs = j.at("pairs");
        require(pairs.is_array() && pairs.size() == static_cast<std::size_t>(G * (G - 1) / 2),
                "model: expected one surface per class pair");
        std::size_t k = 0;
        for (int a = 0; a < G; ++a)
            for (int b = a + 1; b < G; ++b, ++k)
            {
                const auto &p = pairs[k];
                const std::string wp = w + ".pairs[" + std::to_string(k) + "]";
                require(detail::get<int>(p, "i", wp) == a && detail::get<int>(p, "j", wp) == b, wp + ": pairs must be in (i, j) order");
                const auto wu = detail::get<std::vector<double>>(p, "w_upper", wp);
                const auto bv = detail::get<std::vector<double>>(p, "b", wp);
                const auto sl = detail::get_or<std::vector<double>>(p, "slacks", {}, wp);
                require(static_cast<Eigen::Index>(bv.size()) == dim && static_cast<Eigen::Index>(wu.size()) == vech_size(dim),
                        wp + ": surface size does not match dim");
                PairSurface ps;
                ps.i = a;
                ps.j = b;
                ps.surface.w_upper = Eigen::Map<const RVec>(wu.data(), static_cast<Eigen::Index>(wu.size()));
                ps.surface.b = Eigen::Map<const RVec>(bv.data(), static_cast<Eigen::Index>(bv.size()));
                ps.surface.c = detail::get<double>(p, "c", wp);
                ps.slacks = Eigen::Map<const RVec>(sl.data(), static_cast<Eigen::Index>(sl.size()));
                m.pairs.push_back(std::move(ps));
            }
        return m;
    }

    // ---- DoA result ------------------------------------------------------------

    inline json to_json(const DoaResult &r)
    {
        json est = json::array();
        for (const auto &e : r.estimates)
            est.push_back({{"el_deg", rad2deg(e.direction.phi)}, {"az_deg", r.classes_deg.at(static_cast<std::size_t>(e.class_index))},
                           {"class_index", e.class_index}, {"votes", e.votes}});
        json tally = json::array();
        for (std::size_t g = 0; g < r.classes_deg.size(); ++g)
            tally.push_back({{"az_deg", r.classes_deg[g]}, {"votes", r.votes[g]}});
        return {{"schema_version", schema_version}, {"estimates", est}, {"desired", r.desired},
                {"interferers", r.interferers}, {"votes", tally}};
    }

    // ---- CSV -------------------------------------------------------------------

    inline std::string fmt_double(double v, int digits = 17)
    {
        std::ostringstream ss;
        ss << std::setprecision(digits) << v;
        return ss.str();
    }

    /// Columns el_deg, az_deg, power_db.
    inline std::string pattern_csv(const BeamPattern &p)
    {
        std::ostringstream ss;
        ss << "# schema_version: " << schema_version << "\n";
        ss << "el_deg,az_deg,power_db\n";
        for (std::size_t i = 0; i < p.angles.size(); ++i)
            // 12 digits hides the degree/radian round trip
            ss << fmt_double(rad2deg(p.angles[i].phi), 12) << "," << fmt_double(rad2deg(p.angles[i].theta), 12) << ","
               << fmt_double(p.power_db[i]) << "\n";
        return ss.str();
    }

    inline std::string bench_csv(const BenchResult &r)
    {
        std::ostringstream ss;
        ss << "# schema_version: " << schema_version << "\n";
        ss << "# bench: " << r.name << "\n";
        ss << r.sweep.name << "," << r.metric.name;
        for (const auto &e : r.extra)
            ss << "," << e.name;
        ss << ",wall_time_s\n";
        for (std::size_t i = 0; i < r.sweep.values.size(); ++i)
        {
            ss << fmt_double(r.sweep.values[i]) << "," << fmt_double(r.metric.values[i]);
            for (const auto &e : r.extra)
                ss << "," << fmt_double(e.values[i]);
            ss << "," << fmt_double(r.wall_times[i]) << "\n";
        }
        return ss.str();
    }

    /// Everything except wall times, so re-running the same config reproduces it byte for byte.
    inline json deterministic_json(const BenchResult &r)
    {
        json extra = json::object();
        for (const auto &e : r.extra)
            if (r.name != "latency")
                extra[e.name] = e.values;
        json j = {{"schema_version", schema_version}, {"bench", r.name},     {"trials", r.trials}, {"seed", r.seed},
                  {"config", r.config},               {"sweep", {{"name", r.sweep.name}, {"values", r.sweep.values}}}};
        if (r.name != "latency")
        {
            j["metric"] = {{"name", r.metric.name}, {"values", r.metric.values}};
            j["extra"] = extra;
            j["summary"] = r.summary;
        }
        return j;
    }

    inline json to_json(const BenchResult &r)
    {
        json j = deterministic_json(r);
        j["metric"] = {{"name", r.metric.name}, {"values", r.metric.values}};
        json extra = json::object();
        for (const auto &e : r.extra)
            extra[e.name] = e.values;
        j["extra"] = extra;
        j["summary"] = r.summary;
        j["wall_times_s"] = r.wall_times;
        return j;
    }

    // ---- snapshot export -------------------------------------------------------

    namespace detail
    {
        inline std::uint64_t to_le(std::uint64_t v)
        {
            if constexpr (std::endian::native == std::endian::big)
                return __builtin_bswap64(v);
            return v;
        }
    }

    /// Raw little-endian float64 pairs (re, im), row-major over (element, snapshot), plus a JSON sidecar.
    inline void write_snapshots(const std::string &bin_path, const std::string &sidecar_path, const SnapshotMatrix &X)
    {
        std::ofstream out(bin_path, std::ios::binary);
        require(static_cast<bool>(out), "cannot write '" + bin_path + "'");
        std::vector<std::uint64_t> buf;
        buf.reserve(static_cast<std::size_t>(2 * X.data.size()));
        for (Eigen::Index r = 0; r < X.elements(); ++r)
            for (Eigen::Index c = 0; c < X.snapshots(); ++c)
                for (double v : {X.data(r, c).real(), X.data(r, c).imag()})
                    buf.push_back(detail::to_le(std::bit_cast<std::uint64_t>(v)));
        out.write(reinterpret_cast<const char *>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(std::uint64_t)));
        require(static_cast<bool>(out), "write to '" + bin_path + "' failed");
        write_json(sidecar_path, {{"schema_version", schema_version},
                                  {"rows", X.elements()},
                                  {"cols", X.snapshots()},
                                  {"order", "row-major"},
                                  {"dtype", "complex128, interleaved re/im float64, little-endian"},
                                  {"sample_rate_hz", X.sample_rate},
                                  {"seed", X.seed}});
    }

    inline SnapshotMatrix read_snapshots(const std::string &bin_path, const std::string &sidecar_path)
    {
        const json side = read_json(sidecar_path);
        const auto rows = detail::get<Eigen::Index>(side, "rows", "sidecar");
        const auto cols = detail::get<Eigen::Index>(side, "cols", "sidecar");
        require(rows >= 1 && cols >= 1, "sidecar: rows and cols must be >= 1");
        const std::string bytes = read_text(bin_path);
        require(bytes.size() == static_cast<std::size_t>(rows * cols) * 16, "snapshot file size does not match the sidecar dims");
        SnapshotMatrix X{CMat(rows, cols), detail::get<double>(side, "sample_rate_hz", "sidecar"),
                         detail::get<std::uint64_t>(side, "seed", "sidecar")};
        std::size_t off = 0;
        auto next = [&] {
            std::uint64_t u;
            std::memcpy(&u, bytes.data() + off, sizeof(u));
            off += sizeof(u);
            return std::bit_cast<double>(detail::to_le(u));
        };
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c)
            {
                const double re = next();
                const double im = next();
                X.data(r, c) = {re, im};
            }
        return X;
    }
}
