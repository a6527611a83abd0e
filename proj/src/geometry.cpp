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

#include "qupa/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qupa
{
    namespace
    {
        constexpr double kAngleTol = 1e-12;
        constexpr double kDirichletGuard = 1e-9;

        // Per-axis steering factors exp(j pi m x) for symmetric indices m
        Eigen::VectorXcd axis_factors(int n, double x)
        {
            Eigen::VectorXcd out(n);
            const double center = double(n - 1) / 2.0;
            for (int i = 0; i < n; ++i)
            {
                const double phase = kPi * (double(i) - center) * x;
                out[i] = {std::cos(phase), std::sin(phase)};
            }
            return out;
        }
    }

    double wrap_angle(double rad)
    {
        double a = std::remainder(rad, 2.0 * kPi); // [-pi, pi]
        if (a <= -kPi)
            a += 2.0 * kPi;
        return a;
    }

    void check_upa(int k)
    {
        if (k < 1 || k > kUpaCount)
            throw std::invalid_argument("UPA index must be in 1..4, got " + std::to_string(k));
    }

    Direction::Direction(double azimuth_rad, double elevation_rad)
    {
        if (!std::isfinite(azimuth_rad) || !std::isfinite(elevation_rad))
            throw std::invalid_argument("Direction: non-finite angle");
        if (elevation_rad < -kAngleTol || elevation_rad > kPi + kAngleTol)
            throw std::invalid_argument("Direction: elevation outside [0, pi]");
        azimuth = wrap_angle(azimuth_rad);
        elevation = std::clamp(elevation_rad, 0.0, kPi);
    }

    bool SectorRange::contains(const Direction &dir) const
    {
        const double center = 0.5 * (azimuth_min + azimuth_max);
        const double offset = wrap_angle(dir.azimuth - center);
        const double half = 0.5 * (azimuth_max - azimuth_min);
        return std::abs(offset) <= half + kAngleTol &&
               dir.elevation >= elevation_min - kAngleTol &&
               dir.elevation <= elevation_max + kAngleTol;
    }

    SectorRange sector_range(int k)
    {
        check_upa(k);
        SectorRange r;
        r.upa = k;
        r.azimuth_min = -kPi / 4.0 + boresight_azimuth(k);
        r.azimuth_max = kPi / 4.0 + boresight_azimuth(k);
        return r;
    }

    UpaConfig UpaConfig::with_upa(int k) const
    {
        check_upa(k);
        UpaConfig c = *this;
        c.upa = k;
        return c;
    }

    void UpaConfig::validate() const
    {
        if (n_y < 1 || n_z < 1)
            throw std::invalid_argument("UpaConfig: element counts must be positive");
        check_upa(upa);
    }

    void SquintConfig::validate() const
    {
        if (!(bandwidth_hz > 0.0) || !(bandwidth_hz < carrier_hz))
            throw std::invalid_argument("SquintConfig: require 0 < bandwidth < carrier");
    }

    Eigen::VectorXcd response_vh(const UpaConfig &cfg, double v, double h)
    {
        const Eigen::VectorXcd ay = axis_factors(cfg.n_y, h);
        const Eigen::VectorXcd az = axis_factors(cfg.n_z, v);
        Eigen::VectorXcd a(cfg.elements());
        const double scale = 1.0 / std::sqrt(double(cfg.elements()));
        for (int iz = 0; iz < cfg.n_z; ++iz)
            for (int iy = 0; iy < cfg.n_y; ++iy)
                a[iz * cfg.n_y + iy] = az[iz] * ay[iy] * scale;
        return a;
    }

    Beamformer array_response(const UpaConfig &cfg, const Direction &dir)
    {
        cfg.validate();
        const VhPoint p = vh_transform(cfg.upa, dir);
        return {response_vh(cfg, p.v, p.h), cfg.upa};
    }

    double radiation_pattern(int k, const Direction &dir)
    {
        return sector_range(k).contains(dir) ? 1.0 : 0.0;
    }

    int owning_upa(const Direction &dir)
    {
        for (int k = 1; k <= kUpaCount; ++k)
            if (sector_range(k).contains(dir))
                return k;
        return 0;
    }

    double element_gain(const UpaConfig &cfg)
    {
        return 4.0 * kSqrt2 * double(cfg.elements());
    }

    double element_gain_db(const UpaConfig &cfg) { return to_db(element_gain(cfg)); }

    double beam_gain(const UpaConfig &cfg, const Beamformer &w, const Direction &dir)
    {
        if (w.weights.size() != cfg.elements())
            throw std::invalid_argument("beam_gain: weight length does not match the array");
        const Beamformer a = array_response(cfg.with_upa(w.upa), dir);
        return std::abs(a.weights.dot(w.weights)); // dot() conjugates the left operand
    }

    double dirichlet(int n, double x)
    {
        const double den = std::sin(kPi * x / 2.0);
        if (std::abs(den) < kDirichletGuard)
            return double(n);
        return std::abs(std::sin(double(n) * kPi * x / 2.0) / den);
    }

    double separable_gain(const UpaConfig &cfg, double v, double h, double v_t, double h_t)
    {
        return dirichlet(cfg.n_z, v - v_t) * dirichlet(cfg.n_y, h - h_t) / double(cfg.elements());
    }

    VhPoint vh_transform(int k, const Direction &dir)
    {
        check_upa(k);
        const double st = std::sin(dir.elevation);
        return {std::cos(dir.elevation), st * std::sin(dir.azimuth - boresight_azimuth(k))};
    }

    GridPoint grid_transform(int k, const Direction &dir)
    {
        check_upa(k);
        return {std::sin(dir.azimuth - boresight_azimuth(k)) + kSqrt2 * double(k - 1),
                -std::cos(dir.elevation)};
    }

    Direction from_vh(int k, double v, double h)
    {
        check_upa(k);
        const double theta = std::acos(std::clamp(v, -1.0, 1.0));
        const double st = std::sin(theta);
        const double rel = st > 0.0 ? std::asin(std::clamp(h / st, -1.0, 1.0)) : 0.0;
        return {rel + boresight_azimuth(k), theta};
    }

    double wideband_gain(const SquintConfig &s, int n_a, double phi)
    {
        s.validate();
        const int root = int(std::lround(std::sqrt(double(std::max(n_a, 0)))));
        if (n_a < 1 || root * root != n_a)
            throw std::invalid_argument("wideband_gain: element count must be a perfect square");
        const double x = kPi * s.bandwidth_hz / (4.0 * s.carrier_hz) * std::sin(phi);
        const double den = double(root) * std::sin(x);
        if (std::abs(den) < kDirichletGuard)
            return 1.0;
        return std::abs(std::sin(double(root) * x) / den);
    }

    double squint_reduction(const SquintConfig &s, int n_a)
    {
        const double edge = wideband_gain(s, n_a, kPi / 4.0);
        const double full = wideband_gain(s, n_a, kPi / 2.0);
        return (edge - full) / (1.0 - full);
    }
}
