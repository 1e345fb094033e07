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

// Scaled-integer reference model of the fixed-point datapath on GMP integers.

#pragma once

#include <gmp.h>

#include <cstdint>
#include <vector>

#include "qsbf/fixed_datapath.hpp"

namespace oracle
{
    class Big
    {
    public:
        Big() { mpz_init(v_); }
        explicit Big(std::int64_t x) { mpz_init_set_si(v_, x); }
        Big(const Big &o) { mpz_init_set(v_, o.v_); }
        Big &operator=(const Big &o)
        {
            mpz_set(v_, o.v_);
            return *this;
        }
        ~Big() { mpz_clear(v_); }

        mpz_ptr get() { return v_; }
        mpz_srcptr get() const { return v_; }

        friend Big operator+(const Big &a, const Big &b)
        {
            Big r;
            mpz_add(r.v_, a.v_, b.v_);
            return r;
        }
        friend Big operator-(const Big &a, const Big &b)
        {
            Big r;
            mpz_sub(r.v_, a.v_, b.v_);
            return r;
        }
        friend Big operator*(const Big &a, const Big &b)
        {
            Big r;
            mpz_mul(r.v_, a.v_, b.v_);
            return r;
        }
        std::int64_t to_i64() const { return mpz_get_si(v_); }

    private:
        mpz_t v_;
    };

    struct Counter
    {
        std::uint64_t overflows = 0;
    };

    // value * 2^-s rounded per mode
    inline Big shift_round(const Big &v, int s, qsbf::Rounding mode)
    {
        Big q, r;
        mpz_fdiv_q_2exp(q.get(), v.get(), static_cast<mp_bitcnt_t>(s));
        if (mode == qsbf::Rounding::truncate)
            return q;
        mpz_fdiv_r_2exp(r.get(), v.get(), static_cast<mp_bitcnt_t>(s));
        Big half;
        mpz_setbit(half.get(), static_cast<mp_bitcnt_t>(s - 1));
        const int c = mpz_cmp(r.get(), half.get());
        if (c > 0 || (c == 0 && mpz_odd_p(q.get())))
            mpz_add_ui(q.get(), q.get(), 1);
        return q;
    }

    inline Big fit(const Big &v, int word, bool is_signed, qsbf::Overflow mode, Counter &cnt)
    {
        Big hi, lo;
        if (is_signed)
        {
            mpz_setbit(hi.get(), static_cast<mp_bitcnt_t>(word - 1));
            mpz_neg(lo.get(), hi.get());
            mpz_sub_ui(hi.get(), hi.get(), 1);
        }
        else
        {
            mpz_setbit(hi.get(), static_cast<mp_bitcnt_t>(word));
            mpz_sub_ui(hi.get(), hi.get(), 1);
        }
        if (mpz_cmp(v.get(), lo.get()) >= 0 && mpz_cmp(v.get(), hi.get()) <= 0)
            return v;
        ++cnt.overflows;
        if (mode == qsbf::Overflow::saturate)
            return mpz_cmp(v.get(), hi.get()) > 0 ? hi : lo;
        Big m;
        mpz_fdiv_r_2exp(m.get(), v.get(), static_cast<mp_bitcnt_t>(word)); // in [0, 2^word)
        if (is_signed && mpz_cmp(m.get(), hi.get()) > 0)
        {
            Big mod;
            mpz_setbit(mod.get(), static_cast<mp_bitcnt_t>(word));
            m = m - mod;
        }
        return m;
    }

    inline Big fit(const Big &v, const qsbf::FixedPointFormat &f, Counter &cnt)
    {
        return fit(v, f.word_bits, f.is_signed, f.overflow, cnt);
    }

    inline qsbf::FxComplex complex_mul(const qsbf::FxComplex &a, const qsbf::FxComplex &b, const qsbf::FixedPointFormat &f,
                                       Counter &cnt)
    {
        auto p = [&](std::int64_t x, std::int64_t y) { return fit(shift_round(Big(x) * Big(y), f.frac_bits, f.rounding), f, cnt); };
        const Big rr = p(a.re, b.re), ii = p(a.im, b.im), ri = p(a.re, b.im), ir = p(a.im, b.re);
        return {fit(rr - ii, f, cnt).to_i64(), fit(ri + ir, f, cnt).to_i64()};
    }

    /// Leaves padded with zeros to fanin^depth, then summed group by group, left to right.
    inline qsbf::FxComplex tree_sum(const std::vector<qsbf::FxComplex> &v, const qsbf::FixedPointFormat &f, int fanin, Counter &cnt)
    {
        std::size_t width = 1;
        while (width < v.size())
            width *= static_cast<std::size_t>(fanin);
        std::vector<Big> re(width), im(width);
        for (std::size_t i = 0; i < v.size(); ++i)
        {
            re[i] = Big(v[i].re);
            im[i] = Big(v[i].im);
        }
        while (re.size() > 1)
        {
            std::vector<Big> nre, nim;
            for (std::size_t g = 0; g < re.size(); g += static_cast<std::size_t>(fanin))
            {
                Big ar = re[g], ai = im[g];
                for (int k = 1; k < fanin; ++k)
                {
                    ar = fit(ar + re[g + static_cast<std::size_t>(k)], f, cnt);
                    ai = fit(ai + im[g + static_cast<std::size_t>(k)], f, cnt);
                }
                nre.push_back(ar);
                nim.push_back(ai);
            }
            re = std::move(nre);
            im = std::move(nim);
        }
        return {re[0].to_i64(), im[0].to_i64()};
    }

    /// sum_k u_k conj(v_k) computed exactly, then rounded once to the operand format.
    inline qsbf::FxComplex exact_inner_product(const std::vector<qsbf::FxComplex> &u, const std::vector<qsbf::FxComplex> &v,
                                               const qsbf::FixedPointFormat &f, Counter &cnt)
    {
        Big re, im;
        for (std::size_t k = 0; k < u.size(); ++k)
        {
            re = re + Big(u[k].re) * Big(v[k].re) + Big(u[k].im) * Big(v[k].im);
            im = im + Big(u[k].im) * Big(v[k].re) - Big(u[k].re) * Big(v[k].im);
        }
        return {fit(shift_round(re, f.frac_bits, f.rounding), f, cnt).to_i64(),
                fit(shift_round(im, f.frac_bits, f.rounding), f, cnt).to_i64()};
    }

    /// Uniform raw value over the whole format range.
    template <typename Rng>
    inline std::int64_t random_raw(Rng &rng, const qsbf::FixedPointFormat &f)
    {
        const auto lo = static_cast<std::int64_t>(f.min_raw());
        const auto span = static_cast<std::uint64_t>(static_cast<std::int64_t>(f.max_raw()) - lo) + 1;
        return lo + static_cast<std::int64_t>(rng.next_u64() % span);
    }
}
