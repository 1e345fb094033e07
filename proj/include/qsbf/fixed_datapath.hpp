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

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qsbf/common.hpp"
#include "qsbf/error.hpp"

namespace qsbf
{
    __extension__ using i128 = __int128;

    enum class Rounding
    {
        truncate,
        half_even
    };

    enum class Overflow
    {
        saturate,
        wrap
    };

    struct FixedPointFormat
    {
        int word_bits = 18;
        int frac_bits = 12;
        bool is_signed = true;
        Rounding rounding = Rounding::half_even;
        Overflow overflow = Overflow::saturate;

        void validate() const
        {
            require(word_bits <= 64, "fixed-point format: word_bits must be <= 64");
            require(frac_bits > 0 && frac_bits < word_bits, "fixed-point format: need 0 < frac_bits < word_bits");
        }

        i128 max_raw() const { return is_signed ? (i128(1) << (word_bits - 1)) - 1 : (i128(1) << word_bits) - 1; }
        i128 min_raw() const { return is_signed ? -(i128(1) << (word_bits - 1)) : i128(0); }
        double lsb() const { return std::ldexp(1.0, -frac_bits); }

        std::string to_string() const { return std::to_string(word_bits) + "." + std::to_string(frac_bits); }

        /// "W.F", e.g. "18.12".
        static FixedPointFormat parse(const std::string &s)
        {
            const auto dot = s.find('.');
            require(dot != std::string::npos && dot > 0 && dot + 1 < s.size(), "fixed-point format must look like W.F, got '" + s + "'");
            FixedPointFormat f;
            try
            {
                std::size_t used = 0;
                f.word_bits = std::stoi(s.substr(0, dot), &used);
                require(used == dot, "bad word width in '" + s + "'");
                const std::string tail = s.substr(dot + 1);
                f.frac_bits = std::stoi(tail, &used);
                require(used == tail.size(), "bad fraction width in '" + s + "'");
            }
            catch (const std::logic_error &e)
            {
                if (dynamic_cast<const ConfigError *>(&e))
                    throw;
                throw ConfigError("fixed-point format must look like W.F, got '" + s + "'");
            }
            f.validate();
            return f;
        }
    };

    /// Raw two's-complement integers; the value is raw * 2^-frac_bits.
    struct FxComplex
    {
        std::int64_t re = 0;
        std::int64_t im = 0;
        bool operator==(const FxComplex &) const = default;
    };

    struct FxStats
    {
        std::uint64_t overflow_events = 0;
    };

    namespace detail
    {
        inline i128 floor_shift(i128 v, int s) { return v >> s; } // arithmetic shift floors

        inline i128 round_shift(i128 v, int s, Rounding mode)
        {
            if (s <= 0)
                return v << (-s);
            const i128 q = floor_shift(v, s);
            if (mode == Rounding::truncate)
                return q;
            const i128 r = v - (q << s);
            const i128 half = i128(1) << (s - 1);
            if (r > half || (r == half && (q & 1) != 0))
                return q + 1;
            return q;
        }

        inline i128 handle_overflow(i128 v, int word_bits, bool is_signed, Overflow mode, FxStats *stats)
        {
            const i128 hi = is_signed ? (i128(1) << (word_bits - 1)) - 1 : (i128(1) << word_bits) - 1;
            const i128 lo = is_signed ? -(i128(1) << (word_bits - 1)) : i128(0);
            if (v >= lo && v <= hi)
                return v;
            if (stats)
                ++stats->overflow_events;
            if (mode == Overflow::saturate)
                return v > hi ? hi : lo;
            const i128 modulus = i128(1) << word_bits;
            i128 w = v & (modulus - 1);
            if (is_signed && w > hi)
                w -= modulus;
            return w;
        }

        inline i128 fit(i128 v, const FixedPointFormat &fmt, FxStats *stats)
        {
            return handle_overflow(v, fmt.word_bits, fmt.is_signed, fmt.overflow, stats);
        }
    }

    inline std::int64_t quantize(double x, const FixedPointFormat &fmt, FxStats *stats = nullptr)
    {
        require(std::isfinite(x), "quantize: value must be finite");
        const double scaled = std::ldexp(x, fmt.frac_bits);
        const double r = fmt.rounding == Rounding::truncate ? std::floor(scaled) : std::nearbyint(scaled);
        // beyond +-2^100 every format overflows anyway; clamp before the integer conversion
        const double lim = std::ldexp(1.0, 100);
        const double c = std::min(std::max(r, -lim), lim);
        return static_cast<std::int64_t>(detail::fit(static_cast<i128>(c), fmt, stats));
    }

    inline FxComplex quantize(cplx z, const FixedPointFormat &fmt, FxStats *stats = nullptr)
    {
        return {quantize(z.real(), fmt, stats), quantize(z.imag(), fmt, stats)};
    }

    inline double to_double(std::int64_t raw, const FixedPointFormat &fmt) { return std::ldexp(static_cast<double>(raw), -fmt.frac_bits); }
    inline cplx to_complex(const FxComplex &z, const FixedPointFormat &fmt) { return {to_double(z.re, fmt), to_double(z.im, fmt)}; }

    inline std::vector<FxComplex> quantize(const CVec &v, const FixedPointFormat &fmt, FxStats *stats = nullptr)
    {
        std::vector<FxComplex> out(static_cast<std::size_t>(v.size()));
        for (Eigen::Index i = 0; i < v.size(); ++i)
            out[static_cast<std::size_t>(i)] = quantize(v[i], fmt, stats);
        return out;
    }

    inline FxComplex fx_conj(const FxComplex &z, const FixedPointFormat &fmt, FxStats *stats = nullptr)
    {
        return {z.re, static_cast<std::int64_t>(detail::fit(-i128(z.im), fmt, stats))};
    }

    /// 4-multiplier form. Each partial product is rounded back to `fmt` and overflow-handled,
    /// then re = p_rr - p_ii and im = p_ri + p_ir are overflow-handled again.
    inline FxComplex fx_complex_mul(const FxComplex &a, const FxComplex &b, const FixedPointFormat &fmt,
                                    FxStats *stats = nullptr)
    {
        auto prod = [&](std::int64_t x, std::int64_t y) {
            return detail::fit(detail::round_shift(i128(x) * i128(y), fmt.frac_bits, fmt.rounding), fmt, stats);
        };
        const i128 rr = prod(a.re, b.re), ii = prod(a.im, b.im);
        const i128 ri = prod(a.re, b.im), ir = prod(a.im, b.re);
        return {static_cast<std::int64_t>(detail::fit(rr - ii, fmt, stats)),
                static_cast<std::int64_t>(detail::fit(ri + ir, fmt, stats))};
    }

    inline std::vector<FxComplex> fx_hadamard(std::span<const FxComplex> u, std::span<const FxComplex> v,
                                              const FixedPointFormat &fmt, FxStats *stats = nullptr)
    {
        require(u.size() == v.size(), "fx_hadamard: length mismatch (" + std::to_string(u.size()) + " vs " +
                                          std::to_string(v.size()) + ")");
        std::vector<FxComplex> out(u.size());
        for (std::size_t i = 0; i < u.size(); ++i)
            out[i] = fx_complex_mul(u[i], v[i], fmt, stats);
        return out;
    }

    struct PipelineConfig
    {
        int stages = 0;
        int fanin = 2;
    };

    /// Adder levels of a fan-in tree over `len` leaves: ceil(log_fanin(len)), 0 for one leaf.
    inline int tree_depth(std::size_t len, int fanin)
    {
        int d = 0;
        std::size_t width = 1;
        while (width < len)
        {
            width *= static_cast<std::size_t>(fanin);
            ++d;
        }
        return d;
    }

    inline void validate(const PipelineConfig &cfg, std::size_t len)
    {
        require(cfg.fanin >= 2, "pipeline: fanin must be >= 2");
        require(cfg.stages >= 0, "pipeline: stages must be >= 0");
        const int d = tree_depth(len, cfg.fanin);
        require(cfg.stages <= d + 2, "pipeline: " + std::to_string(cfg.stages) + " stages exceeds tree depth " +
                                         std::to_string(d) + " + 2");
    }

    struct DatapathReport
    {
        int stages = 0;
        int tree_depth = 0;
        int cycles_latency = 0;
        int initiation_interval = 1;
        double throughput = 1.0; // results per cycle
        double max_abs_error = 0.0;
        std::uint64_t overflow_events = 0;
    };

    /// Structural cycle model. Pipeline registers add one cycle each on top of the adder levels.
    /// Once every level is registered a new vector enters each cycle; otherwise the tree is busy
    /// for its full depth.
    inline DatapathReport cycle_model(std::size_t len, const PipelineConfig &cfg)
    {
        validate(cfg, len);
        DatapathReport r;
        r.stages = cfg.stages;
        r.tree_depth = tree_depth(len, cfg.fanin);
        r.cycles_latency = cfg.stages + r.tree_depth;
        r.initiation_interval = cfg.stages >= r.tree_depth ? 1 : std::max(r.tree_depth, 1);
        r.throughput = 1.0 / r.initiation_interval;
        return r;
    }

    namespace detail
    {
        struct WideComplex
        {
            i128 re = 0;
            i128 im = 0;
        };

        /// Level-by-level reduction. Groups of `fanin` consecutive operands are summed left to right;
        /// the last group is padded with exact zeros. Every partial sum is overflow-handled.
        inline WideComplex tree_reduce(std::vector<WideComplex> level, int fanin, int word_bits, bool is_signed,
                                       Overflow mode, FxStats *stats)
        {
            const auto f = static_cast<std::size_t>(fanin);
            while (level.size() > 1)
            {
                std::vector<WideComplex> next((level.size() + f - 1) / f);
                for (std::size_t g = 0; g < next.size(); ++g)
                {
                    WideComplex acc = level[g * f];
                    for (std::size_t k = 1; k < f; ++k)
                    {
                        const std::size_t idx = g * f + k;
                        if (idx >= level.size())
                            break;
                        acc.re = handle_overflow(acc.re + level[idx].re, word_bits, is_signed, mode, stats);
                        acc.im = handle_overflow(acc.im + level[idx].im, word_bits, is_signed, mode, stats);
                    }
                    next[g] = acc;
                }
                level = std::move(next);
            }
            return level.front();
        }
    }

    struct FxResult
    {
        FxComplex value;
        DatapathReport report;
    };

    /// max_abs_error compares against the double-precision sum of the dequantized inputs.
    inline FxResult fx_tree_sum(std::span<const FxComplex> v, const FixedPointFormat &fmt, const PipelineConfig &cfg)
    {
        require(!v.empty(), "fx_tree_sum: empty vector");
        fmt.validate();
        FxResult out;
        out.report = cycle_model(v.size(), cfg);
        std::vector<detail::WideComplex> leaves(v.size());
        cplx ref = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
        {
            leaves[i] = {v[i].re, v[i].im};
            ref += to_complex(v[i], fmt);
        }
        FxStats stats;
        const auto s = detail::tree_reduce(std::move(leaves), cfg.fanin, fmt.word_bits, fmt.is_signed, fmt.overflow, &stats);
        out.value = {static_cast<std::int64_t>(s.re), static_cast<std::int64_t>(s.im)};
        out.report.overflow_events = stats.overflow_events;
        out.report.max_abs_error = std::abs(to_complex(out.value, fmt) - ref);
        return out;
    }

    enum class Accumulation
    {
        /// Products kept exact in a wide accumulator (2F fraction bits plus guard bits); one rounding at the output.
        full_precision,
        /// fx_tree_sum(fx_hadamard(u, conj(v))) with every product rounded to the operand format.
        per_product
    };

    /// sum_k u_k conj(v_k). max_abs_error is measured against the double-precision inner product of the
    /// dequantized operands.
    inline FxResult fx_inner_product(std::span<const FxComplex> u, std::span<const FxComplex> v, const FixedPointFormat &fmt,
                                     const PipelineConfig &cfg, Accumulation mode = Accumulation::full_precision)
    {
        require(u.size() == v.size(), "fx_inner_product: length mismatch (" + std::to_string(u.size()) + " vs " +
                                          std::to_string(v.size()) + ")");
        require(!u.empty(), "fx_inner_product: empty vectors");
        fmt.validate();
        cplx ref = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i)
            ref += to_complex(u[i], fmt) * std::conj(to_complex(v[i], fmt));

        FxResult out;
        FxStats stats;
        if (mode == Accumulation::per_product)
        {
            std::vector<FxComplex> vc(v.size());
            for (std::size_t i = 0; i < v.size(); ++i)
                vc[i] = fx_conj(v[i], fmt, &stats);
            const auto prods = fx_hadamard(u, vc, fmt, &stats);
            out = fx_tree_sum(prods, fmt, cfg);
            out.report.overflow_events += stats.overflow_events;
        }
        else
        {
            out.report = cycle_model(u.size(), cfg);
            const int guard = tree_depth(u.size(), 2) + 1;
            const int wide_bits = std::min(2 * fmt.word_bits + guard, 126);
            std::vector<detail::WideComplex> leaves(u.size());
            for (std::size_t i = 0; i < u.size(); ++i)
            {
                const i128 ar = u[i].re, ai = u[i].im, br = v[i].re, bi = -i128(v[i].im);
                leaves[i] = {ar * br - ai * bi, ar * bi + ai * br};
            }
            const auto s = detail::tree_reduce(std::move(leaves), cfg.fanin, wide_bits, true, fmt.overflow, &stats);
            auto narrow = [&](i128 x) {
                return static_cast<std::int64_t>(detail::fit(detail::round_shift(x, fmt.frac_bits, fmt.rounding), fmt, &stats));
            };
            out.value = {narrow(s.re), narrow(s.im)};
            out.report.overflow_events = stats.overflow_events;
        }
        out.report.max_abs_error = std::abs(to_complex(out.value, fmt) - ref);
        return out;
    }

    /// Error bound for one full inner product of length n: (ceil(log2 n) + 2) LSBs.
    inline double inner_product_error_bound(std::size_t n, const FixedPointFormat &fmt)
    {
        return (tree_depth(n, 2) + 2) * fmt.lsb();
    }
}
