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

#include "qupa/codebook.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <string>

namespace qupa
{
    namespace
    {
        constexpr double kIllConditionedRatio = 1e-12;

        int pow2(int e) { return 1 << e; }

        // ceil(a / 2) for possibly negative a
        int ceil_half(int a) { return a >= 0 ? (a + 1) / 2 : -((-a) / 2); }

        int positive_mod(int a, int m) { return ((a % m) + m) % m; }

        void check_n(int n)
        {
            if (n < 1)
                throw std::invalid_argument("beams per axis must be positive");
        }

        // Coordinate of grid block center: sin(phi_rel) for columns, cos(theta) for rows.
        // Both axes share the same piecewise layout.
        double grid_coordinate(int n, int idx)
        {
            const double nn = double(n);
            const double outer = 1.0 - kSqrt2 / 2.0;
            if (idx <= n)
                return outer * double(2 * idx - 1) / (2.0 * nn) - 1.0;
            if (idx <= 3 * n)
                return kSqrt2 * double(2 * (idx - n) - 1) / (4.0 * nn) - kSqrt2 / 2.0;
            return outer * double(2 * (idx - 3 * n) - 1) / (2.0 * nn) + kSqrt2 / 2.0;
        }

        double narrow_coordinate(int n, int idx)
        {
            return kSqrt2 * double(2 * idx - 1 - n) / (2.0 * double(n));
        }

        std::vector<Eigen::VectorXcd> gather(const std::vector<Beamformer> &beams)
        {
            std::vector<Eigen::VectorXcd> out;
            out.reserve(beams.size());
            for (const auto &b : beams)
                out.push_back(b.weights);
            return out;
        }

        Eigen::MatrixXcd to_matrix(const std::vector<Eigen::VectorXcd> &cols, int rows)
        {
            Eigen::MatrixXcd m(rows, Eigen::Index(cols.size()));
            for (std::size_t i = 0; i < cols.size(); ++i)
                m.col(Eigen::Index(i)) = cols[i];
            return m;
        }
    }

    int stage_count(int n)
    {
        if (n < 2 || (n & (n - 1)) != 0)
            throw std::invalid_argument(
                fmt::format("beams per axis must be a power of two >= 2, got {}", n));
        int e = 0;
        while ((1 << e) < n)
            ++e;
        return 2 * e;
    }

    int narrow_index(int n, const NarrowPosition &pos)
    {
        check_n(n);
        if (pos.row < 1 || pos.row > n || pos.col < 1 || pos.col > n)
            throw std::out_of_range("narrow position outside the N x N grid");
        return (pos.row - 1) * n + pos.col;
    }

    NarrowPosition narrow_position(int n, int upa, int index)
    {
        check_n(n);
        check_upa(upa);
        if (index < 1 || index > n * n)
            throw std::out_of_range(fmt::format("narrow index {} outside 1..{}", index, n * n));
        int col = index % n;
        if (col == 0)
            col = n;
        const int row = (index + n - 1) / n;
        return {upa, row, col};
    }

    Direction narrow_direction(int n, int k, int row, int col)
    {
        check_n(n);
        check_upa(k);
        if (row < 1 || row > n || col < 1 || col > n)
            throw std::out_of_range("narrow position outside the N x N grid");
        return {std::asin(narrow_coordinate(n, col)) + boresight_azimuth(k),
                std::acos(narrow_coordinate(n, row))};
    }

    std::vector<Direction> narrow_angles(int n, int k)
    {
        check_n(n);
        std::vector<Direction> out;
        out.reserve(std::size_t(n) * std::size_t(n));
        for (int p = 1; p <= n; ++p)
            for (int c = 1; c <= n; ++c)
                out.push_back(narrow_direction(n, k, p, c));
        return out;
    }

    Beamformer narrow_codeword(const UpaConfig &cfg, int i, int k, int n)
    {
        const NarrowPosition pos = narrow_position(n, k, i);
        const double v = narrow_coordinate(n, pos.row);
        return {response_vh(cfg, v, std::sqrt(1.0 - v * v) * narrow_coordinate(n, pos.col)), k};
    }

    Direction GridSpec::direction(int j, int l) const
    {
        if (j < 1 || j > size() || l < 1 || l > size())
            throw std::out_of_range("grid index outside 1..4N");
        return {azimuth[std::size_t(j - 1)], elevation[std::size_t(l - 1)]};
    }

    GridSpec dense_grid(int n, int k)
    {
        check_n(n);
        check_upa(k);
        GridSpec g;
        g.n = n;
        g.upa = k;
        g.azimuth.resize(std::size_t(4 * n));
        g.elevation.resize(std::size_t(4 * n));
        for (int idx = 1; idx <= 4 * n; ++idx)
        {
            const double c = grid_coordinate(n, idx);
            g.azimuth[std::size_t(idx - 1)] = std::asin(c) + boresight_azimuth(k);
            g.elevation[std::size_t(idx - 1)] = std::acos(c);
        }
        return g;
    }

    CoverageSet coverage_set(int s, int i, int n)
    {
        const int stages = stage_count(n);
        if (s < 0 || s > stages)
            throw std::out_of_range(fmt::format("stage {} outside 0..{}", s, stages));
        if (i < 1 || i > pow2(s))
            throw std::out_of_range(fmt::format("beam {} outside 1..{}", i, pow2(s)));
        CoverageSet c;
        c.stage = s;
        c.index = i;
        c.nu = pow2(ceil_half(stages - s) + 1);
        c.delta = pow2(ceil_half(stages - s - 1) + 1);
        c.mu = pow2(ceil_half(s - 1));
        const int m = (i - 1) % c.mu;
        const int q = (i + c.mu - 1) / c.mu;
        c.cols = {n + c.nu * m + 1, n + c.nu * (m + 1)};
        c.rows = {n + c.delta * (q - 1) + 1, n + c.delta * q};
        return c;
    }

    std::array<int, 2> child_beams(int s, int i, int n)
    {
        const CoverageSet parent = coverage_set(s, i, n);
        if (s >= stage_count(n))
            throw std::out_of_range("narrow beams have no children");
        const int mu_next = coverage_set(s + 1, 1, n).mu;
        const int m = (i - 1) % parent.mu;
        const int q = (i + parent.mu - 1) / parent.mu;
        if (mu_next == 2 * parent.mu)
            return {2 * i - 1, 2 * i};
        return {(2 * q - 2) * mu_next + m + 1, (2 * q - 1) * mu_next + m + 1};
    }

    namespace
    {
        // Buffer cells around a block region. Columns wrap around the grid, rows are clipped.
        std::vector<GridCell> periphery(int n, IndexRange cols, IndexRange rows, int w)
        {
            if (w < 0)
                throw std::invalid_argument("buffer width must be non-negative");
            const int size = 4 * n;
            std::set<GridCell> cells;
            for (int l = rows.first - w; l <= rows.last + w; ++l)
            {
                if (l < 1 || l > size)
                    continue;
                for (int j = cols.first - w; j <= cols.last + w; ++j)
                {
                    const int jw = positive_mod(j - 1, size) + 1;
                    if (cols.contains(jw) && rows.contains(l))
                        continue;
                    cells.insert({jw, l});
                }
            }
            return {cells.begin(), cells.end()};
        }
    }

    std::vector<GridCell> buffer_zone(int s, int i, int n, int w)
    {
        const CoverageSet c = coverage_set(s, i, n);
        return periphery(n, c.cols, c.rows, w);
    }

    TargetColumn region_target(int n, IndexRange cols, IndexRange rows, int w, double chi)
    {
        if (!(chi >= 0.0 && chi < 1.0))
            throw std::invalid_argument("buffer gain must lie in [0, 1)");
        const int size = 4 * n;
        TargetColumn col;
        for (int l = rows.first; l <= rows.last; ++l)
            for (int j = cols.first; j <= cols.last; ++j)
                col.emplace_back((l - 1) * size + (j - 1), 1.0);
        if (chi > 0.0)
            for (const GridCell &b : periphery(n, cols, rows, w))
                col.emplace_back((b.l - 1) * size + (b.j - 1), chi);
        std::sort(col.begin(), col.end());
        return col;
    }

    Eigen::SparseMatrix<double> target_matrix(int s, int n, int w, double chi)
    {
        const int beams = pow2(s);
        (void)coverage_set(s, 1, n); // validates s and n
        Eigen::SparseMatrix<double> xi(16 * n * n, beams);
        std::vector<Eigen::Triplet<double>> triplets;
        for (int i = 1; i <= beams; ++i)
        {
            const CoverageSet c = coverage_set(s, i, n);
            for (const auto &[row, value] : region_target(n, c.cols, c.rows, w, chi))
                triplets.emplace_back(row, i - 1, value);
        }
        xi.setFromTriplets(triplets.begin(), triplets.end());
        return xi;
    }

    WideBeamSynthesizer::WideBeamSynthesizer(const UpaConfig &cfg, int n, double tikhonov_rel)
        : cfg_(cfg.with_upa(1)), n_(n), grid_(dense_grid(n, 1)), tikhonov_rel_(tikhonov_rel)
    {
        cfg_.validate();
        if (!(tikhonov_rel >= 0.0) || !std::isfinite(tikhonov_rel))
            throw std::invalid_argument("Tikhonov factor must be finite and non-negative");
        const int size = grid_.size();
        vh_.resize(std::size_t(size) * std::size_t(size));
        for (int l = 1; l <= size; ++l)
        {
            const double v = grid_coordinate(n, l);
            const double st = std::sqrt(std::max(0.0, 1.0 - v * v));
            for (int j = 1; j <= size; ++j)
                vh_[std::size_t(grid_.flat_index(j, l))] = {v, st * grid_coordinate(n, j)};
        }

        // A A^H is block Toeplitz: entry (a, b) depends only on the element offsets.
        const int ny = cfg_.n_y, nz = cfg_.n_z;
        const int wy = 2 * ny - 1, wz = 2 * nz - 1;
        Eigen::MatrixXcd table = Eigen::MatrixXcd::Zero(wy, wz);
        Eigen::VectorXcd py(wy), pz(wz);
        for (const VhPoint &p : vh_)
        {
            for (int d = 0; d < wy; ++d)
                py[d] = std::polar(1.0, kPi * double(d - (ny - 1)) * p.h);
            for (int d = 0; d < wz; ++d)
                pz[d] = std::polar(1.0, kPi * double(d - (nz - 1)) * p.v);
            table.noalias() += py * pz.transpose();
        }
        const int na = cfg_.elements();
        table /= double(na);
        gram_.resize(na, na);
        for (int za = 0; za < nz; ++za)
            for (int ya = 0; ya < ny; ++ya)
                for (int zb = 0; zb < nz; ++zb)
                    for (int yb = 0; yb < ny; ++yb)
                        gram_(za * ny + ya, zb * ny + yb) =
                            table(ya - yb + ny - 1, za - zb + nz - 1);

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram_, Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        ill_conditioned_ = !(lo > kIllConditionedRatio * hi);
        if (ill_conditioned_)
            std::fprintf(stderr,
                         "warning: grid Gram matrix is ill-conditioned (eigenvalue ratio %.3g); "
                         "relying on the Tikhonov floor\n",
                         hi > 0.0 ? lo / hi : 0.0);

        tikhonov_ = std::max(tikhonov_rel_, 1e-10) * gram_.diagonal().real().sum() / double(na);
        gram_.diagonal().array() += tikhonov_;
        llt_.compute(gram_);
        if (llt_.info() != Eigen::Success)
            throw std::runtime_error("wide-beam synthesis: Cholesky factorization failed");
    }

    Eigen::VectorXcd WideBeamSynthesizer::grid_response(int flat_index) const
    {
        const VhPoint &p = vh_.at(std::size_t(flat_index));
        return response_vh(cfg_, p.v, p.h);
    }

    Eigen::VectorXcd WideBeamSynthesizer::solve_raw(const TargetColumn &column) const
    {
        Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(cfg_.elements());
        for (const auto &[row, value] : column)
            if (value != 0.0)
                rhs.noalias() += value * grid_response(row);
        if (rhs.squaredNorm() == 0.0)
            return rhs;
        return llt_.solve(rhs);
    }

    Beamformer WideBeamSynthesizer::solve(const TargetColumn &column, int upa) const
    {
        check_upa(upa);
        Eigen::VectorXcd w = solve_raw(column);
        const double norm = w.norm();
        if (norm > 0.0)
            w /= norm;
        return {std::move(w), upa};
    }

    std::vector<Beamformer> WideBeamSynthesizer::synthesize(const Eigen::SparseMatrix<double> &xi,
                                                            int upa) const
    {
        if (xi.rows() != Eigen::Index(vh_.size()))
            throw std::invalid_argument("target matrix row count does not match the grid");
        std::vector<Beamformer> out;
        out.reserve(std::size_t(xi.cols()));
        for (Eigen::Index c = 0; c < xi.cols(); ++c)
        {
            TargetColumn col;
            for (Eigen::SparseMatrix<double>::InnerIterator it(xi, c); it; ++it)
                col.emplace_back(int(it.row()), it.value());
            out.push_back(solve(col, upa));
        }
        return out;
    }

    std::vector<Beamformer> synthesize_wide_beams(const WideBeamSynthesizer &synth, int k,
                                                  const Eigen::SparseMatrix<double> &xi)
    {
        return synth.synthesize(xi, k);
    }

    WorstCaseBound eta_worst(int n, int n_y, int n_z)
    {
        check_n(n);
        if (n_y < 1 || n_z < 1)
            throw std::invalid_argument("element counts must be positive");
        WorstCaseBound b;
        b.n = n;
        b.n_y = n_y;
        b.n_z = n_z;
        b.beta = (n % 2 == 1) ? 1.0 : std::sin(std::acos(kSqrt2 / (2.0 * double(n))));
        const double unit = kSqrt2 * kPi / (4.0 * double(n));
        b.eta_worst = std::sin(double(n_z) * unit) * std::sin(double(n_y) * b.beta * unit) /
                      (double(n_y) * double(n_z) * std::sin(unit) * std::sin(b.beta * unit));
        return b;
    }

    std::vector<Beamformer> benchmark_uniform_real(const UpaConfig &cfg, int n, int k)
    {
        check_n(n);
        check_upa(k);
        std::vector<Beamformer> out;
        out.reserve(std::size_t(n) * std::size_t(n));
        const double step = kPi / (2.0 * double(n));
        for (int p = 1; p <= n; ++p)
        {
            const double theta = 3.0 * kPi / 4.0 - (double(p) - 0.5) * step;
            for (int c = 1; c <= n; ++c)
            {
                const double phi = -kPi / 4.0 + (double(c) - 0.5) * step;
                out.push_back(array_response(cfg.with_upa(k),
                                             {phi + boresight_azimuth(k), theta}));
            }
        }
        return out;
    }

    std::vector<Beamformer> benchmark_uniform_virtual(const UpaConfig &cfg, int n, int k)
    {
        check_n(n);
        check_upa(k);
        std::vector<Beamformer> out;
        out.reserve(std::size_t(n) * std::size_t(n));
        for (int p = 1; p <= n; ++p)
            for (int c = 1; c <= n; ++c)
                out.push_back({response_vh(cfg, narrow_coordinate(n, p), narrow_coordinate(n, c)), k});
        return out;
    }

    std::string_view to_string(CodebookVariant v)
    {
        switch (v)
        {
        case CodebookVariant::Proposed:
            return "proposed";
        case CodebookVariant::StrictBenchmark:
            return "strict";
        case CodebookVariant::UniformReal:
            return "uniform-real";
        case CodebookVariant::UniformVirtual:
            return "uniform-virtual";
        }
        return "proposed";
    }

    CodebookVariant parse_variant(std::string_view name)
    {
        for (auto v : {CodebookVariant::Proposed, CodebookVariant::StrictBenchmark,
                       CodebookVariant::UniformReal, CodebookVariant::UniformVirtual})
            if (to_string(v) == name)
                return v;
        throw std::invalid_argument(fmt::format("unknown codebook variant '{}'", name));
    }

    int CodebookParams::effective_buffer_width() const
    {
        return variant == CodebookVariant::StrictBenchmark ? 0 : buffer_width;
    }

    void CodebookParams::validate() const
    {
        array.validate();
        (void)stage_count(n);
        if (buffer_width < 0)
            throw std::invalid_argument("buffer width must be non-negative");
        if (!(buffer_gain >= 0.0 && buffer_gain < 1.0))
            throw std::invalid_argument("buffer gain must lie in [0, 1)");
        if (!(tikhonov >= 0.0) || !std::isfinite(tikhonov))
            throw std::invalid_argument("Tikhonov factor must be finite and non-negative");
    }

    bool CodebookParams::operator==(const CodebookParams &o) const
    {
        return array.n_y == o.array.n_y && array.n_z == o.array.n_z && n == o.n &&
               buffer_width == o.buffer_width && buffer_gain == o.buffer_gain &&
               variant == o.variant && tikhonov == o.tikhonov;
    }

    HierarchicalCodebook::HierarchicalCodebook(CodebookParams params,
                                               std::vector<Eigen::MatrixXcd> stages,
                                               std::vector<VhPoint> narrow_vh, int upa)
        : params_(std::move(params)), upa_(upa)
    {
        params_.validate();
        check_upa(upa);
        const int total = stage_count(params_.n);
        if (int(stages.size()) != total + 1)
            throw std::invalid_argument("codebook must hold S + 1 stages");
        for (int s = 0; s <= total; ++s)
            if (stages[std::size_t(s)].rows() != params_.array.elements() ||
                stages[std::size_t(s)].cols() != pow2(s))
                throw std::invalid_argument(fmt::format("codebook stage {} has the wrong shape", s));
        if (int(narrow_vh.size()) != params_.n * params_.n)
            throw std::invalid_argument("codebook needs one beam center per narrow beam");
        stages_ = std::make_shared<const std::vector<Eigen::MatrixXcd>>(std::move(stages));
        narrow_vh_ = std::make_shared<const std::vector<VhPoint>>(std::move(narrow_vh));
    }

    const Eigen::MatrixXcd &HierarchicalCodebook::stage(int s) const
    {
        if (!stages_)
            throw std::logic_error("empty codebook");
        if (s < 0 || s > stages())
            throw std::out_of_range(fmt::format("stage {} outside 0..{}", s, stages()));
        return (*stages_)[std::size_t(s)];
    }

    Beamformer HierarchicalCodebook::codeword(int s, int i) const
    {
        const Eigen::MatrixXcd &m = stage(s);
        if (i < 1 || i > m.cols())
            throw std::out_of_range(fmt::format("codeword {} outside 1..{}", i, m.cols()));
        return {m.col(i - 1), upa_};
    }

    Beamformer HierarchicalCodebook::narrow(const NarrowPosition &pos) const
    {
        return narrow(narrow_index(n(), pos));
    }

    BestBeam HierarchicalCodebook::best_narrow(const Direction &dir) const
    {
        BestBeam best;
        if (radiation_pattern(upa_, dir) == 0.0)
            return best;
        const VhPoint t = vh_transform(upa_, dir);
        const auto &centers = narrow_vh();
        for (std::size_t i = 0; i < centers.size(); ++i)
        {
            const double g = separable_gain(params_.array, t.v, t.h, centers[i].v, centers[i].h);
            if (g > best.gain)
                best = {int(i) + 1, g};
        }
        return best;
    }

    HierarchicalCodebook HierarchicalCodebook::for_upa(int k) const
    {
        check_upa(k);
        HierarchicalCodebook c = *this;
        c.upa_ = k;
        return c;
    }

    HierarchicalCodebook build_codebook(const CodebookParams &params,
                                        const WideBeamSynthesizer *synth)
    {
        params.validate();
        std::unique_ptr<WideBeamSynthesizer> owned;
        if (synth == nullptr)
        {
            owned = std::make_unique<WideBeamSynthesizer>(params.array, params.n, params.tikhonov);
            synth = owned.get();
        }
        else if (synth->n() != params.n || synth->array().n_y != params.array.n_y ||
                 synth->array().n_z != params.array.n_z ||
                 synth->tikhonov_rel() != params.tikhonov)
            throw std::invalid_argument("synthesizer does not match the codebook parameters");

        const int n = params.n;
        const int total = stage_count(n);
        const int na = params.array.elements();
        std::vector<Eigen::MatrixXcd> stages;
        stages.reserve(std::size_t(total + 1));
        for (int s = 0; s < total; ++s)
        {
            const auto xi = target_matrix(s, n, params.effective_buffer_width(), params.buffer_gain);
            stages.push_back(to_matrix(gather(synth->synthesize(xi, 1)), na));
        }

        std::vector<VhPoint> centers;
        centers.reserve(std::size_t(n) * std::size_t(n));
        std::vector<Eigen::VectorXcd> narrow;
        narrow.reserve(std::size_t(n) * std::size_t(n));
        const double step = kPi / (2.0 * double(n));
        for (int p = 1; p <= n; ++p)
            for (int c = 1; c <= n; ++c)
            {
                VhPoint vh;
                if (params.variant == CodebookVariant::UniformReal)
                {
                    const double theta = 3.0 * kPi / 4.0 - (double(p) - 0.5) * step;
                    const double phi = -kPi / 4.0 + (double(c) - 0.5) * step;
                    vh = {std::cos(theta), std::sin(theta) * std::sin(phi)};
                }
                else
                {
                    // The virtual benchmark drops the sin(theta) factor on H
                    const double v = narrow_coordinate(n, p);
                    const double u = narrow_coordinate(n, c);
                    const bool virtual_angles = params.variant == CodebookVariant::UniformVirtual;
                    vh = {v, virtual_angles ? u : std::sqrt(1.0 - v * v) * u};
                }
                centers.push_back(vh);
                narrow.push_back(response_vh(params.array, vh.v, vh.h));
            }
        stages.push_back(to_matrix(narrow, na));
        return HierarchicalCodebook(params, std::move(stages), std::move(centers), 1);
    }

    QupaCodebook make_qupa_codebook(const HierarchicalCodebook &local)
    {
        QupaCodebook out;
        for (int k = 1; k <= kUpaCount; ++k)
            out[std::size_t(k - 1)] = local.for_upa(k);
        return out;
    }

    LatticePoint to_lattice(int n, const NarrowPosition &pos)
    {
        (void)narrow_index(n, pos);
        check_upa(pos.upa);
        return {(pos.upa - 1) * n + pos.col - 1, pos.row - 1};
    }

    NarrowPosition from_lattice(int n, LatticePoint p)
    {
        check_n(n);
        if (p.row < 0 || p.row >= n)
            throw std::out_of_range("lattice row outside 0..N-1");
        const int col = positive_mod(p.col, 4 * n);
        return {col / n + 1, p.row + 1, col % n + 1};
    }

    TrackingCodebook::TrackingCodebook(std::shared_ptr<const WideBeamSynthesizer> synth,
                                       int buffer_width, double buffer_gain)
        : synth_(std::move(synth)), buffer_width_(buffer_width), buffer_gain_(buffer_gain)
    {
        if (!synth_)
            throw std::invalid_argument("tracking codebook needs a synthesizer");
        if (synth_->n() < 4)
            throw std::invalid_argument("tracking needs at least 4 beams per axis");
        if (buffer_width_ < 0 || !(buffer_gain_ >= 0.0 && buffer_gain_ < 1.0))
            throw std::invalid_argument("invalid tracking buffer parameters");
    }

    std::array<int, 3> TrackingCodebook::row_window(int row) const
    {
        const int n = synth_->n();
        if (row < 1 || row > n)
            throw std::out_of_range("narrow row outside 1..N");
        const int mid = std::clamp(row, 2, n - 1);
        return {mid - 1, mid, mid + 1};
    }

    Beamformer TrackingCodebook::region_beam(int upa, IndexRange local_cols,
                                             IndexRange local_rows) const
    {
        const auto key = std::make_tuple(local_cols.first, local_cols.last, local_rows.first,
                                         local_rows.last);
        auto it = cache_.find(key);
        if (it == cache_.end())
        {
            const int n = synth_->n();
            const IndexRange cols{n + 2 * (local_cols.first - 1) + 1, n + 2 * local_cols.last};
            const IndexRange rows{n + 2 * (local_rows.first - 1) + 1, n + 2 * local_rows.last};
            const TargetColumn target = region_target(n, cols, rows, buffer_width_, buffer_gain_);
            Eigen::VectorXcd w = synth_->solve_raw(target);
            w.normalize();
            it = cache_.emplace(key, std::move(w)).first;
        }
        return {it->second, upa};
    }

    TrackingBeams TrackingCodebook::beams(const NarrowPosition &center) const
    {
        const int n = synth_->n();
        const LatticePoint c = to_lattice(n, center);
        const std::array<int, 3> rows = row_window(center.row);
        const IndexRange row_range{rows[0], rows[2]};

        TrackingBeams out;
        std::vector<std::pair<int, IndexRange>> groups; // UPA and local column span
        for (int d = -1; d <= 1; ++d)
        {
            const NarrowPosition col = from_lattice(n, {c.col + d, 0});
            const std::size_t ci = std::size_t(d + 1);
            for (std::size_t ri = 0; ri < 3; ++ri)
                out.candidates[ci][ri] = {col.upa, rows[ri], col.col};
            out.columns[ci] = region_beam(col.upa, {col.col, col.col}, row_range);
            if (!groups.empty() && groups.back().first == col.upa)
                groups.back().second.last = col.col;
            else
                groups.push_back({col.upa, {col.col, col.col}});
        }
        for (const auto &[upa, span] : groups)
            out.super_wide.push_back(region_beam(upa, span, row_range));
        return out;
    }

    TrackingBeams tracking_codebook(const UpaConfig &cfg, int n, const NarrowPosition &center,
                                    int buffer_width, double buffer_gain)
    {
        auto synth = std::make_shared<const WideBeamSynthesizer>(cfg, n);
        return TrackingCodebook(synth, buffer_width, buffer_gain).beams(center);
    }
}
