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

#ifndef QUPA_GEOMETRY_HPP
#define QUPA_GEOMETRY_HPP

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <numbers>

namespace qupa
{
    inline constexpr double kPi = std::numbers::pi;
    inline constexpr double kSqrt2 = std::numbers::sqrt2;
    inline constexpr int kUpaCount = 4;

    // Wraps an angle into (-pi, pi]
    double wrap_angle(double rad);

    // Throws std::invalid_argument unless 1 <= k <= 4
    void check_upa(int k);

    // Azimuth of the boresight of UPA k, i.e. (k-1) pi/2
    inline double boresight_azimuth(int k) { return double(k - 1) * kPi / 2.0; }

    // Azimuth is measured from the x-axis, elevation from the z-axis.
    // Construction normalizes azimuth into (-pi, pi]; elevation must lie in [0, pi]
    // (values within 1e-12 outside the interval are clamped).
    struct Direction
    {
        double azimuth = 0.0;
        double elevation = kPi / 2.0;

        Direction() = default;
        Direction(double azimuth_rad, double elevation_rad);

        bool operator==(const Direction &) const = default;
    };

    // Angular range Omega_k served by UPA k. Both intervals are closed.
    struct SectorRange
    {
        int upa = 1;
        double azimuth_min = 0.0; // may exceed pi for k = 3, compare via wrapped offsets
        double azimuth_max = 0.0;
        double elevation_min = kPi / 4.0;
        double elevation_max = 3.0 * kPi / 4.0;

        bool contains(const Direction &dir) const;
    };

    SectorRange sector_range(int k);

    // Uniform planar array with elements on the y and z axes, half-wavelength spaced.
    struct UpaConfig
    {
        int n_y = 16;
        int n_z = 16;
        int upa = 1; // position in the QUPA, 1..4

        int elements() const { return n_y * n_z; }
        UpaConfig with_upa(int k) const;
        void validate() const;
    };

    // Complex weight vector of one UPA, used as precoder or decoder.
    // Element order is z-major: index = iz * n_y + iy.
    struct Beamformer
    {
        Eigen::VectorXcd weights;
        int upa = 1;

        double norm() const { return weights.norm(); }
    };

    struct SquintConfig
    {
        double carrier_hz = 0.26e12;
        double bandwidth_hz = 20e9;

        void validate() const;
    };

    // Array response a_k(phi, theta) with zero phase at the array center. Unit norm.
    Beamformer array_response(const UpaConfig &cfg, const Direction &dir);

    // Same vector, parameterized by V = cos(theta) and H = sin(theta) sin(phi - (k-1) pi/2).
    Eigen::VectorXcd response_vh(const UpaConfig &cfg, double v, double h);

    // Ideal element pattern: 1 inside Omega_k, 0 elsewhere
    double radiation_pattern(int k, const Direction &dir);

    // UPA whose sector holds dir (lowest index on shared boundaries), 0 if none does
    int owning_upa(const Direction &dir);

    // Directivity of the ideal sector element scaled by the element count: 4 sqrt(2) N_a
    double element_gain(const UpaConfig &cfg);
    double element_gain_db(const UpaConfig &cfg);

    // |a_k(dir)^H w| using the UPA index stored in w
    double beam_gain(const UpaConfig &cfg, const Beamformer &w, const Direction &dir);

    // |sin(n pi x / 2) / sin(pi x / 2)|, evaluated as n where the denominator vanishes
    double dirichlet(int n, double x);

    // (1/N_a) f_z(v - v_t) f_y(h - h_t)
    double separable_gain(const UpaConfig &cfg, double v, double h, double v_t, double h_t);

    struct VhPoint
    {
        double v = 0.0; // cos(theta)
        double h = 0.0; // sin(theta) sin(phi - (k-1) pi/2)
    };

    struct GridPoint
    {
        double phi = 0.0;   // sin(phi - (k-1) pi/2) + sqrt(2) (k-1)
        double theta = 0.0; // -cos(theta)
    };

    VhPoint vh_transform(int k, const Direction &dir);
    GridPoint grid_transform(int k, const Direction &dir);

    // Inverse of vh_transform for points in front of UPA k (|h| <= sin(theta))
    Direction from_vh(int k, double v, double h);

    // Normalized wideband beam gain A_f(phi); n_a must be a perfect square
    double wideband_gain(const SquintConfig &s, int n_a, double phi);

    // Fraction of the maximum squint loss removed by limiting deflection to pi/4
    double squint_reduction(const SquintConfig &s, int n_a);

    inline double to_db(double linear) { return 10.0 * std::log10(linear); }
    inline double from_db(double db) { return std::pow(10.0, db / 10.0); }
}

#endif
