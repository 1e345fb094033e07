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

#include <algorithm>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qsbf/common.hpp"
#include "qsbf/error.hpp"

namespace qsbf
{
    /// Geometry of the hybrid array: `n_cylinders` cylinders, each a stack of
    /// `loops_per_cylinder` rings of `n_per_loop` elements, plus one ring of
    /// `circular_elements` elements in the h = 0 plane. Spacings are in wavelengths.
    struct ArrayParams
    {
        int n_per_loop = 20;        // N_h
        int loops_per_cylinder = 2; // P_h
        int n_cylinders = 3;        // M_h
        int circular_elements = 20;
        double d_v = 0.5; // vertical loop spacing [wavelengths]
        double d_r = 0.5; // in-ring chord spacing and cylinder surface gap [wavelengths]
        double carrier_freq = 10.0e9;

        int elements_per_cylinder() const { return n_per_loop * loops_per_cylinder; } // Q_h
        double wavelength() const { return speed_of_light / carrier_freq; }
        int total_elements() const { return n_cylinders * elements_per_cylinder() + circular_elements; }

        void validate() const
        {
            require(n_per_loop >= 1, "array: n_per_loop must be >= 1");
            require(loops_per_cylinder >= 1, "array: loops_per_cylinder must be >= 1");
            require(n_cylinders >= 1, "array: n_cylinders must be >= 1");
            require(circular_elements >= 0, "array: circular_elements must be >= 0");
            require(d_v > 0.0 && std::isfinite(d_v), "array: d_v must be positive");
            require(d_r > 0.0 && std::isfinite(d_r), "array: d_r must be positive");
            require(carrier_freq > 0.0 && std::isfinite(carrier_freq), "array: carrier_freq must be positive");
        }
    };

    /// Ring radius [wavelengths] that puts adjacent elements `chord` apart.
    inline double ring_radius(int n, double chord)
    {
        if (n <= 1)
            return 0.0;
        return chord / (2.0 * std::sin(pi / n));
    }

    /// Scalar element gain g(phi, theta) >= 0 with a name for reports and serialization.
    class GainPattern
    {
    public:
        using Fn = std::function<double(double phi, double theta)>;

        GainPattern() : GainPattern("isotropic", [](double, double) { return 1.0; }) {}
        GainPattern(std::string name, Fn fn) : name_(std::move(name)), fn_(std::make_shared<Fn>(std::move(fn))) {}

        double operator()(double phi, double theta) const { return (*fn_)(phi, theta); }
        const std::string &name() const { return name_; }

        static GainPattern isotropic() { return {}; }

        // max(0, cos(phi - boresight))^exponent; peak gain 1 on the boresight cone.
        static GainPattern cos_power(std::string name, double boresight_phi, double exponent)
        {
            require(exponent >= 0.0, "gain pattern: exponent must be non-negative");
            return {std::move(name), [=](double phi, double)
                    {
                        const double c = std::cos(phi - boresight_phi);
                        return c <= 0.0 ? 0.0 : std::pow(c, exponent);
                    }};
        }

        // Stand-ins for the bowtie and dipole elements. The bowtie proxy is a cos^2 lobe aimed at
        // the 45 deg elevation scan limit, the dipole proxy is the sin(phi) doughnut of a vertical dipole.
        static GainPattern bowtie_proxy() { return cos_power("bowtie", deg2rad(45.0), 2.0); }
        static GainPattern dipole_proxy() { return cos_power("dipole", deg2rad(90.0), 1.0); }

        // isotropic | bowtie | dipole | cos4 (zenith-pointing cos^4) | cospow:<boresight_el_deg>:<exponent>
        static GainPattern by_name(const std::string &name)
        {
            if (name == "isotropic")
                return isotropic();
            if (name == "bowtie")
                return bowtie_proxy();
            if (name == "dipole")
                return dipole_proxy();
            if (name == "cos4")
                return cos_power("cos4", 0.0, 4.0);
            if (name.rfind("cospow:", 0) == 0)
            {
                const auto rest = name.substr(7);
                const auto colon = rest.find(':');
                require(colon != std::string::npos, "gain pattern: expected cospow:<el_deg>:<exponent>");
                try
                {
                    return cos_power(name, deg2rad(std::stod(rest.substr(0, colon))), std::stod(rest.substr(colon + 1)));
                }
                catch (const std::logic_error &)
                {
                    throw ConfigError("gain pattern: cannot parse '" + name + "'");
                }
            }
            throw ConfigError("unknown gain pattern '" + name + "'");
        }

    private:
        std::string name_;
        std::shared_ptr<const Fn> fn_;
    };

    struct Element
    {
        Vec3 position = Vec3::Zero(); // meters
        double ring_angle = 0.0;      // theta_n [rad]
        GainPattern gain;
    };

    enum class SubArrayKind
    {
        cylinder,
        circular
    };

    struct SubArray
    {
        SubArrayKind kind = SubArrayKind::cylinder;
        std::size_t offset = 0;
        std::size_t count = 0;
    };

    struct ArrayLayout
    {
        ArrayParams params;
        double wavelength = 0.0;
        std::vector<Element> elements;
        std::vector<SubArray> parts;

        std::size_t size() const { return elements.size(); }

        std::span<const Element> part(std::size_t i) const
        {
            const auto &p = parts.at(i);
            return std::span<const Element>(elements).subspan(p.offset, p.count);
        }
    };

    /// Cylinder-major, loop-minor element order with the circular ring last.
    /// Cylinder centers lie on the x-axis, spaced so adjacent cylinder surfaces are d_r apart;
    /// cylinder loops sit at heights d_v, 2 d_v, ... above the circular ring at h = 0.
    inline ArrayLayout build_hybrid_layout(const ArrayParams &params, const GainPattern &gain = GainPattern::isotropic())
    {
        params.validate();
        ArrayLayout layout;
        layout.params = params;
        layout.wavelength = params.wavelength();
        const double lam = layout.wavelength;

        const double r_cyl = ring_radius(params.n_per_loop, params.d_r);
        const double pitch = 2.0 * r_cyl + params.d_r;
        layout.elements.reserve(static_cast<std::size_t>(params.total_elements()));

        for (int m = 0; m < params.n_cylinders; ++m)
        {
            const double cx = (m - 0.5 * (params.n_cylinders - 1)) * pitch;
            SubArray sub{SubArrayKind::cylinder, layout.elements.size(), 0};
            for (int p = 0; p < params.loops_per_cylinder; ++p)
            {
                const double h = (p + 1) * params.d_v;
                for (int n = 0; n < params.n_per_loop; ++n)
                {
                    const double t = 2.0 * pi * n / params.n_per_loop;
                    layout.elements.push_back({Vec3(cx + r_cyl * std::cos(t), r_cyl * std::sin(t), h) * lam, t, gain});
                }
            }
            sub.count = layout.elements.size() - sub.offset;
            layout.parts.push_back(sub);
        }

        if (params.circular_elements > 0)
        {
            const double r_circ = ring_radius(params.circular_elements, params.d_r);
            SubArray sub{SubArrayKind::circular, layout.elements.size(), 0};
            for (int n = 0; n < params.circular_elements; ++n)
            {
                const double t = 2.0 * pi * n / params.circular_elements;
                layout.elements.push_back({Vec3(r_circ * std::cos(t), r_circ * std::sin(t), 0.0) * lam, t, gain});
            }
            sub.count = layout.elements.size() - sub.offset;
            layout.parts.push_back(sub);
        }
        return layout;
    }

    /// K = (2 pi / lambda) (sin phi sin theta, sin phi cos theta, cos phi)  [rad/m]
    inline Vec3 wavevector(double phi, double theta, double wavelength)
    {
        require(wavelength > 0.0, "wavevector: wavelength must be positive");
        const double k = 2.0 * pi / wavelength;
        return k * Vec3(std::sin(phi) * std::sin(theta), std::sin(phi) * std::cos(theta), std::cos(phi));
    }

    inline double phase_shift(const Vec3 &K, const Element &element) { return K.dot(element.position); }

    /// Raw response g_n exp(-j K.r_n), no normalization.
    inline CVec element_response(std::span<const Element> elements, Direction dir, double wavelength)
    {
        const Vec3 K = wavevector(dir.phi, dir.theta, wavelength);
        CVec out(static_cast<Eigen::Index>(elements.size()));
        for (std::size_t n = 0; n < elements.size(); ++n)
        {
            const double g = elements[n].gain(dir.phi, dir.theta);
            out[static_cast<Eigen::Index>(n)] = g * std::polar(1.0, -phase_shift(K, elements[n]));
        }
        return out;
    }

    inline CVec element_response(const ArrayLayout &layout, Direction dir)
    {
        return element_response(std::span<const Element>(layout.elements), dir, layout.wavelength);
    }

    struct SteeringVector
    {
        CVec values;
        Direction direction;
    };

    namespace detail
    {
        inline SteeringVector unit_normalize(CVec v, Direction dir)
        {
            const double nrm = v.norm();
            if (!(nrm > 0.0))
                throw NumericalError("steering vector: all element gains are zero toward this direction");
            v /= nrm;
            return {std::move(v), dir};
        }
    }

    /// Unit-norm response of a sub-array. The 1/N factor of the textbook form is absorbed by the
    /// normalization, which keeps the vector a pure direction.
    inline SteeringVector sub_steering_vector(std::span<const Element> part, Direction dir, double wavelength)
    {
        require(!part.empty(), "sub_steering_vector: empty sub-array");
        return detail::unit_normalize(element_response(part, dir, wavelength), dir);
    }

    /// Direct steering vector over the physical elements (one entry per element, unit norm).
    inline SteeringVector steering_vector(const ArrayLayout &layout, Direction dir)
    {
        require(layout.size() > 0, "steering_vector: empty layout");
        return detail::unit_normalize(element_response(layout, dir), dir);
    }

    inline CVec kronecker(const CVec &u, const CVec &v)
    {
        CVec out(u.size() * v.size());
        for (Eigen::Index i = 0; i < u.size(); ++i)
            out.segment(i * v.size(), v.size()) = u[i] * v;
        return out;
    }

    /// Kronecker composition of the sub-array steering vectors (cylinders in order, then the
    /// circular ring). Its length is the product of the sub-array sizes, not the element count.
    inline SteeringVector hybrid_steering_vector(const ArrayLayout &layout, Direction dir)
    {
        require(!layout.parts.empty(), "hybrid_steering_vector: layout has no sub-arrays");
        CVec acc = CVec::Ones(1);
        for (std::size_t i = 0; i < layout.parts.size(); ++i)
            acc = kronecker(acc, sub_steering_vector(layout.part(i), dir, layout.wavelength).values);
        return detail::unit_normalize(std::move(acc), dir);
    }

    /// Unit-norm steering vectors for a list of directions, one per column.
    inline CMat steering_matrix(const ArrayLayout &layout, std::span<const Direction> dirs)
    {
        CMat A(static_cast<Eigen::Index>(layout.size()), static_cast<Eigen::Index>(dirs.size()));
        for (std::size_t k = 0; k < dirs.size(); ++k)
            A.col(static_cast<Eigen::Index>(k)) = steering_vector(layout, dirs[k]).values;
        return A;
    }
}
