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

#ifndef QUPA_CODEBOOK_HPP
#define QUPA_CODEBOOK_HPP

#include "qupa/geometry.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace qupa
{
    // Number of codebook stages S for N x N narrow beams (N^2 = 2^S, S even).
    // Throws unless n is a power of two >= 2.
    int stage_count(int n);

    // Narrow-beam slot of a UPA: row p indexes elevation (cos theta increasing with p),
    // col n indexes azimuth. Both 1-based.
    struct NarrowPosition
    {
        int upa = 1;
        int row = 1;
        int col = 1;

        bool operator==(const NarrowPosition &) const = default;
    };

    // i = (p - 1) N + n
    int narrow_index(int n, const NarrowPosition &pos);

    // Inverse of narrow_index. mod_N(i) = 0 maps to column N.
    NarrowPosition narrow_position(int n, int upa, int index);

    // Beam directions phi_n, theta_p for all N^2 slots of UPA k, ordered by narrow index
    std::vector<Direction> narrow_angles(int n, int k);
    Direction narrow_direction(int n, int k, int row, int col);

    // a_k(phi_n, theta_p) for narrow index i in 1..N^2
    Beamformer narrow_codeword(const UpaConfig &cfg, int i, int k, int n);

    // 4N x 4N grid of block centers spanning the front hemisphere of UPA k.
    // The middle 2N x 2N blocks tile Omega_k.
    struct GridSpec
    {
        int n = 0;
        int upa = 1;
        std::vector<double> azimuth;   // phi_grid for j = 1..4N, stored at j - 1
        std::vector<double> elevation; // theta_grid for l = 1..4N, stored at l - 1

        int size() const { return 4 * n; }
        Direction direction(int j, int l) const;
        // Row of the target matrix / column of A: (l - 1) 4N + (j - 1)
        int flat_index(int j, int l) const { return (l - 1) * size() + (j - 1); }
    };

    GridSpec dense_grid(int n, int k);

    struct IndexRange
    {
        int first = 1;
        int last = 0;

        int size() const { return last >= first ? last - first + 1 : 0; }
        bool contains(int x) const { return x >= first && x <= last; }
    };

    // Grid blocks J x L covered by beam i of stage s
    struct CoverageSet
    {
        int stage = 0;
        int index = 1;
        int nu = 0;    // blocks per elevation row
        int delta = 0; // blocks per azimuth column
        int mu = 0;    // beams per elevation row at this stage
        IndexRange cols;
        IndexRange rows;

        bool contains(int j, int l) const { return cols.contains(j) && rows.contains(l); }
    };

    CoverageSet coverage_set(int s, int i, int n);

    // Indices of the two stage-(s+1) beams whose coverage sets tile beam i of stage s.
    // Azimuth splits yield (2i-1, 2i); elevation splits yield beams one row of stage s+1 apart.
    std::array<int, 2> child_beams(int s, int i, int n);

    struct GridCell
    {
        int j = 0;
        int l = 0;

        auto operator<=>(const GridCell &) const = default;
    };

    // Periphery of width w around a coverage set, clipped to the 4N x 4N grid
    std::vector<GridCell> buffer_zone(int s, int i, int n, int w);

    // One column of the target matrix as (flat grid index, value), sorted by index
    using TargetColumn = std::vector<std::pair<int, double>>;

    TargetColumn region_target(int n, IndexRange cols, IndexRange rows, int w, double chi);

    // 16N^2 x 2^s: 1 on the coverage set, chi on its buffer, 0 elsewhere
    Eigen::SparseMatrix<double> target_matrix(int s, int n, int w, double chi);

    // Least-squares wide-beam synthesis on the dense grid of one UPA:
    // omega = (A A^H)^-1 A xi, normalized to unit norm. The grid and Gram matrix are
    // identical for every UPA in its own frame, so one instance serves all four.
    inline constexpr double kDefaultTikhonov = 1e-3;

    class WideBeamSynthesizer
    {
    public:
        // tikhonov_rel scales the diagonal loading by trace(A A^H) / N_a
        WideBeamSynthesizer(const UpaConfig &cfg, int n, double tikhonov_rel = kDefaultTikhonov);

        Eigen::VectorXcd solve_raw(const TargetColumn &column) const;
        Beamformer solve(const TargetColumn &column, int upa) const;
        std::vector<Beamformer> synthesize(const Eigen::SparseMatrix<double> &xi, int upa) const;

        // A A^H with the diagonal loading applied
        const Eigen::MatrixXcd &gram() const { return gram_; }
        Eigen::VectorXcd grid_response(int flat_index) const;

        bool ill_conditioned() const { return ill_conditioned_; }
        double tikhonov() const { return tikhonov_; }
        double tikhonov_rel() const { return tikhonov_rel_; }
        const GridSpec &grid() const { return grid_; }
        const UpaConfig &array() const { return cfg_; }
        int n() const { return n_; }

    private:
        UpaConfig cfg_;
        int n_;
        GridSpec grid_;
        std::vector<VhPoint> vh_;
        Eigen::MatrixXcd gram_;
        Eigen::LLT<Eigen::MatrixXcd> llt_;
        double tikhonov_rel_;
        double tikhonov_ = 0.0;
        bool ill_conditioned_ = false;
    };

    std::vector<Beamformer> synthesize_wide_beams(const WideBeamSynthesizer &synth, int k,
                                                  const Eigen::SparseMatrix<double> &xi);

    struct WorstCaseBound
    {
        int n = 0;
        int n_y = 0;
        int n_z = 0;
        double beta = 1.0;
        double eta_worst = 1.0; // normalized amplitude
    };

    WorstCaseBound eta_worst(int n, int n_y, int n_z);

    // Benchmark narrow codebooks, ordered like the proposed one (row = elevation slot).
    std::vector<Beamformer> benchmark_uniform_real(const UpaConfig &cfg, int n, int k);
    std::vector<Beamformer> benchmark_uniform_virtual(const UpaConfig &cfg, int n, int k);

    enum class CodebookVariant
    {
        Proposed,
        StrictBenchmark,
        UniformReal,
        UniformVirtual,
    };

    std::string_view to_string(CodebookVariant v);
    CodebookVariant parse_variant(std::string_view name);

    struct CodebookParams
    {
        UpaConfig array;
        int n = 16;
        int buffer_width = 1;
        double buffer_gain = 0.5;
        CodebookVariant variant = CodebookVariant::Proposed;
        double tikhonov = kDefaultTikhonov;

        // Buffer width used for synthesis; the strict benchmark never buffers.
        int effective_buffer_width() const;
        void validate() const;
        bool operator==(const CodebookParams &other) const;
    };

    struct BestBeam
    {
        int index = 0; // 1-based narrow index, 0 if the UPA does not see the direction
        double gain = 0.0;
    };

    // Staged codewords of one UPA. Stage s holds 2^s columns; stage S holds the narrow beams.
    // Weight storage is shared between copies and across UPAs.
    class HierarchicalCodebook
    {
    public:
        HierarchicalCodebook() = default;
        HierarchicalCodebook(CodebookParams params, std::vector<Eigen::MatrixXcd> stages,
                             std::vector<VhPoint> narrow_vh, int upa = 1);

        int upa() const { return upa_; }
        int n() const { return params_.n; }
        int stages() const { return stage_count(params_.n); }
        const CodebookParams &params() const { return params_; }

        const Eigen::MatrixXcd &stage(int s) const;
        Beamformer codeword(int s, int i) const;
        Beamformer narrow(int i) const { return codeword(stages(), i); }
        Beamformer narrow(const NarrowPosition &pos) const;

        // Beam center of each narrow codeword in this UPA's (V, H) frame
        const std::vector<VhPoint> &narrow_vh() const { return *narrow_vh_; }

        // Narrow codeword with the largest gain towards dir (ideal element pattern applied)
        BestBeam best_narrow(const Direction &dir) const;

        HierarchicalCodebook for_upa(int k) const;

    private:
        CodebookParams params_;
        std::shared_ptr<const std::vector<Eigen::MatrixXcd>> stages_;
        std::shared_ptr<const std::vector<VhPoint>> narrow_vh_;
        int upa_ = 1;
    };

    // Builds all stages for UPA 1. Reuses synth when given (must match array and n).
    HierarchicalCodebook build_codebook(const CodebookParams &params,
                                        const WideBeamSynthesizer *synth = nullptr);

    using QupaCodebook = std::array<HierarchicalCodebook, kUpaCount>;

    QupaCodebook make_qupa_codebook(const HierarchicalCodebook &local);

    // Position of a narrow slot on the QUPA-wide lattice: col in [0, 4N) runs around the
    // azimuth circle across all four UPAs, row in [0, N) follows the narrow row.
    struct LatticePoint
    {
        int col = 0;
        int row = 0;

        bool operator==(const LatticePoint &) const = default;
    };

    LatticePoint to_lattice(int n, const NarrowPosition &pos);
    NarrowPosition from_lattice(int n, LatticePoint p);

    // Beams for one tracking-mode-1 search around a narrow slot
    struct TrackingBeams
    {
        std::vector<Beamformer> super_wide;                     // one per UPA touched by the 3x3 window
        std::array<Beamformer, 3> columns;                      // 3 rows x 1 column each
        std::array<std::array<NarrowPosition, 3>, 3> candidates; // [column][row]
    };

    // Dedicated tracking beams synthesized on the dense grid. Results are cached by region,
    // so an instance must not be shared between threads.
    class TrackingCodebook
    {
    public:
        TrackingCodebook(std::shared_ptr<const WideBeamSynthesizer> synth, int buffer_width,
                         double buffer_gain);

        TrackingBeams beams(const NarrowPosition &center) const;

        // Three distinct rows around `row`, shifted inwards at the elevation edges
        std::array<int, 3> row_window(int row) const;

        int n() const { return synth_->n(); }

    private:
        Beamformer region_beam(int upa, IndexRange local_cols, IndexRange local_rows) const;

        std::shared_ptr<const WideBeamSynthesizer> synth_;
        int buffer_width_;
        double buffer_gain_;
        mutable std::map<std::tuple<int, int, int, int>, Eigen::VectorXcd> cache_;
    };

    TrackingBeams tracking_codebook(const UpaConfig &cfg, int n, const NarrowPosition &center,
                                    int buffer_width = 1, double buffer_gain = 0.5);
}

#endif
