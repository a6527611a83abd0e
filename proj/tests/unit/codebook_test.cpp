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
#include "qupa/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

using namespace qupa;

namespace
{
    const HierarchicalCodebook &proposed16()
    {
        static const HierarchicalCodebook cb = [] {
            CodebookParams p;
            p.array = {16, 16, 1};
            p.n = 16;
            return build_codebook(p);
        }();
        return cb;
    }

    double grid_gain(const HierarchicalCodebook &cb, int s, int i, const GridSpec &g, int j, int l)
    {
        return beam_gain(UpaConfig{16, 16, 1}, cb.codeword(s, i), g.direction(j, l));
    }
}

TEST_SUITE("codebook")
{
    TEST_CASE("stage count")
    {
        CHECK(stage_count(2) == 2);
        CHECK(stage_count(4) == 4);
        CHECK(stage_count(16) == 8);
        CHECK(stage_count(32) == 10);
        CHECK_THROWS_AS(stage_count(6), std::invalid_argument);
        CHECK_THROWS_AS(stage_count(1), std::invalid_argument);
    }

    TEST_CASE("narrow index round trip")
    {
        for (int n : {4, 16})
            for (int i = 1; i <= n * n; ++i)
            {
                const NarrowPosition p = narrow_position(n, 2, i);
                CHECK(p.upa == 2);
                CHECK(narrow_index(n, p) == i);
            }
        CHECK(narrow_position(4, 1, 4) == NarrowPosition{1, 1, 4});
        CHECK(narrow_position(4, 1, 5) == NarrowPosition{1, 2, 1});
        CHECK_THROWS_AS(narrow_position(4, 1, 17), std::out_of_range);
    }

    TEST_CASE("coverage sets partition the sector at every stage")
    {
        for (int n : {4, 8, 16})
        {
            const int stages = stage_count(n);
            for (int s = 0; s <= stages; ++s)
            {
                std::vector<int> owner(std::size_t(16 * n * n), 0);
                for (int i = 1; i <= (1 << s); ++i)
                {
                    const CoverageSet c = coverage_set(s, i, n);
                    for (int l = c.rows.first; l <= c.rows.last; ++l)
                        for (int j = c.cols.first; j <= c.cols.last; ++j)
                            ++owner[std::size_t((l - 1) * 4 * n + j - 1)];
                }
                for (int l = 1; l <= 4 * n; ++l)
                    for (int j = 1; j <= 4 * n; ++j)
                    {
                        const bool inside = j > n && j <= 3 * n && l > n && l <= 3 * n;
                        CHECK(owner[std::size_t((l - 1) * 4 * n + j - 1)] == (inside ? 1 : 0));
                    }
            }
        }
    }

    TEST_CASE("children tile their parent")
    {
        for (int n : {4, 8, 16})
        {
            const int stages = stage_count(n);
            for (int s = 0; s < stages; ++s)
                for (int i = 1; i <= (1 << s); ++i)
                {
                    const CoverageSet p = coverage_set(s, i, n);
                    const auto kids = child_beams(s, i, n);
                    const CoverageSet a = coverage_set(s + 1, kids[0], n);
                    const CoverageSet b = coverage_set(s + 1, kids[1], n);
                    CHECK(a.cols.size() * a.rows.size() + b.cols.size() * b.rows.size() ==
                          p.cols.size() * p.rows.size());
                    for (const CoverageSet *c : {&a, &b})
                    {
                        CHECK(c->cols.first >= p.cols.first);
                        CHECK(c->cols.last <= p.cols.last);
                        CHECK(c->rows.first >= p.rows.first);
                        CHECK(c->rows.last <= p.rows.last);
                    }
                    const bool disjoint = a.cols.last < b.cols.first || b.cols.last < a.cols.first ||
                                          a.rows.last < b.rows.first || b.rows.last < a.rows.first;
                    CHECK(disjoint);
                }
        }
    }

    TEST_CASE("narrow coverage set holds its beam center")
    {
        const int n = 8;
        for (int i = 1; i <= n * n; ++i)
        {
            const CoverageSet c = coverage_set(stage_count(n), i, n);
            CHECK(c.cols.size() == 2);
            CHECK(c.rows.size() == 2);
            const NarrowPosition p = narrow_position(n, 1, i);
            CHECK(c.cols.first == n + 2 * p.col - 1);
            CHECK(c.rows.first == n + 2 * p.row - 1);
        }
    }

    TEST_CASE("buffer zone surrounds the coverage set")
    {
        const int n = 4;
        const CoverageSet c = coverage_set(2, 1, n);
        const auto zone = buffer_zone(2, 1, n, 1);
        std::set<GridCell> cells(zone.begin(), zone.end());
        CHECK(cells.size() == zone.size());
        for (const auto &g : zone)
        {
            CHECK_FALSE(c.contains(g.j, g.l));
            CHECK(g.l >= 1);
            CHECK(g.l <= 4 * n);
        }
        const int ring = (c.cols.size() + 2) * (c.rows.size() + 2) - c.cols.size() * c.rows.size();
        CHECK(int(zone.size()) == ring);
        CHECK(buffer_zone(2, 1, n, 0).empty());
        CHECK_THROWS_AS(buffer_zone(2, 1, n, -1), std::invalid_argument);
    }

    TEST_CASE("target matrix values")
    {
        const auto xi = target_matrix(1, 4, 1, 0.5);
        CHECK(xi.rows() == 16 * 16);
        CHECK(xi.cols() == 2);
        const CoverageSet c = coverage_set(1, 2, 4);
        CHECK(xi.coeff(c.rows.first * 16 - 16 + c.cols.first - 1, 1) == 1.0);
        CHECK(xi.coeff(0, 1) == 0.0);
        const auto zone = buffer_zone(1, 2, 4, 1);
        CHECK(xi.coeff((zone[0].l - 1) * 16 + zone[0].j - 1, 1) == 0.5);
    }

    TEST_CASE("parameter validation")
    {
        CodebookParams p;
        p.buffer_gain = 1.0;
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
        p.buffer_gain = 0.5;
        p.n = 12;
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
        p.n = 16;
        p.variant = CodebookVariant::StrictBenchmark;
        CHECK(p.effective_buffer_width() == 0);
    }

    TEST_CASE("worst-case amplitude bound")
    {
        const WorstCaseBound b = eta_worst(16, 16, 16);
        CHECK(b.beta == doctest::Approx(0.999023).epsilon(1e-6));
        CHECK(b.eta_worst == doctest::Approx(0.652).epsilon(1e-3));
        CHECK(eta_worst(3, 16, 16).beta == 1.0);
        CHECK(eta_worst(8, 16, 16).eta_worst < eta_worst(16, 16, 16).eta_worst);
    }

    TEST_CASE("narrow codewords peak at their centers")
    {
        const auto &cb = proposed16();
        const auto dirs = narrow_angles(16, 1);
        for (int i = 1; i <= 256; i += 17)
        {
            const double g = beam_gain(UpaConfig{16, 16, 1}, cb.narrow(i), dirs[std::size_t(i - 1)]);
            CHECK(g == doctest::Approx(1.0).epsilon(1e-9));
            const BestBeam best = cb.best_narrow(dirs[std::size_t(i - 1)]);
            CHECK(best.index == i);
        }
    }

    TEST_CASE("free narrow codewords match the built codebook")
    {
        const auto &cb = proposed16();
        for (int i = 1; i <= 256; i += 5)
            CHECK((narrow_codeword(UpaConfig{16, 16, 1}, i, 1, 16).weights - cb.narrow(i).weights).norm() < 1e-12);
    }

    TEST_CASE("random in-sector directions keep at least the worst-case gain")
    {
        const auto &cb = proposed16();
        const double eta = eta_worst(16, 16, 16).eta_worst;
        Rng rng(17);
        std::uniform_real_distribution<double> az(-kPi / 4.0, kPi / 4.0), cz(-std::sqrt(0.5), std::sqrt(0.5));
        double worst = 1.0;
        for (int t = 0; t < 5000; ++t)
            worst = std::min(worst, cb.best_narrow(Direction{az(rng), std::acos(cz(rng))}).gain);
        CHECK(worst >= eta - 1e-9);
        CHECK(worst < eta + 0.05);
    }

    TEST_CASE("wide beams are unit norm and stage sizes double")
    {
        const auto &cb = proposed16();
        for (int s = 0; s <= cb.stages(); ++s)
        {
            CHECK(cb.stage(s).cols() == (1 << s));
            for (int i = 1; i <= (1 << s); ++i)
                CHECK(cb.codeword(s, i).norm() == doctest::Approx(1.0));
        }
        CHECK_THROWS(cb.stage(cb.stages() + 1));
    }

    TEST_CASE("stage-0 beam ripple inside its coverage set")
    {
        const auto &cb = proposed16();
        const GridSpec g = dense_grid(16, 1);
        const CoverageSet c = coverage_set(0, 1, 16);
        // ripple away from the sector border
        double lo = 1e9, hi = 0.0;
        for (int l = c.rows.first + 2; l <= c.rows.last - 2; ++l)
            for (int j = c.cols.first + 2; j <= c.cols.last - 2; ++j)
            {
                const double v = grid_gain(cb, 0, 1, g, j, l);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        CHECK(20.0 * std::log10(hi / lo) <= 3.0);
    }

    TEST_CASE("children split the parent's coverage between them")
    {
        const auto &cb = proposed16();
        const GridSpec g = dense_grid(16, 1);
        for (int s = 0; s < 4; ++s)
            for (int i = 1; i <= (1 << s); ++i)
            {
                const auto kids = child_beams(s, i, 16);
                for (int k = 0; k < 2; ++k)
                {
                    const CoverageSet c = coverage_set(s + 1, kids[std::size_t(k)], 16);
                    const int j = (c.cols.first + c.cols.last) / 2;
                    const int l = (c.rows.first + c.rows.last) / 2;
                    CHECK(grid_gain(cb, s + 1, kids[std::size_t(k)], g, j, l) >
                          grid_gain(cb, s + 1, kids[std::size_t(1 - k)], g, j, l));
                }
            }
    }

    TEST_CASE("uniform benchmarks use the lattice ordering")
    {
        const UpaConfig cfg{8, 8, 2};
        const auto real = benchmark_uniform_real(cfg, 4, 2);
        const auto virt = benchmark_uniform_virtual(cfg, 4, 2);
        CHECK(real.size() == 16);
        CHECK(virt.size() == 16);
        for (const auto &b : real)
        {
            CHECK(b.upa == 2);
            CHECK(b.norm() == doctest::Approx(1.0));
        }
        CHECK(beam_gain(cfg, real[0], Direction{boresight_azimuth(2) - 3.0 * kPi / 16.0, 5.0 * kPi / 8.0 + kPi / 16.0}) ==
              doctest::Approx(1.0));
    }

    TEST_CASE("variant names")
    {
        for (auto v : {CodebookVariant::Proposed, CodebookVariant::StrictBenchmark, CodebookVariant::UniformReal,
                       CodebookVariant::UniformVirtual})
            CHECK(parse_variant(to_string(v)) == v);
        CHECK_THROWS_AS(parse_variant("bogus"), std::invalid_argument);
    }

    TEST_CASE("qupa lattice round trip")
    {
        const int n = 8;
        for (int k = 1; k <= 4; ++k)
            for (int i = 1; i <= n * n; ++i)
            {
                const NarrowPosition p = narrow_position(n, k, i);
                const LatticePoint q = to_lattice(n, p);
                CHECK(q.col >= 0);
                CHECK(q.col < 4 * n);
                CHECK(q.row == p.row - 1);
                CHECK(from_lattice(n, q) == p);
            }
        CHECK(from_lattice(n, {-1, 0}) == NarrowPosition{4, 1, n});
        CHECK(from_lattice(n, {4 * n, 0}) == NarrowPosition{1, 1, 1});
    }

    TEST_CASE("per-UPA codebooks share weights")
    {
        const auto &cb = proposed16();
        const QupaCodebook q = make_qupa_codebook(cb);
        for (int k = 1; k <= 4; ++k)
        {
            CHECK(q[std::size_t(k - 1)].upa() == k);
            CHECK(q[std::size_t(k - 1)].narrow(5).upa == k);
            CHECK(&q[std::size_t(k - 1)].stage(0) == &cb.stage(0));
        }
    }

    TEST_CASE("tracking beams around a slot")
    {
        auto synth = std::make_shared<const WideBeamSynthesizer>(UpaConfig{8, 8, 1}, 8);
        const TrackingCodebook t(synth, 1, 0.5);
        CHECK(t.row_window(1) == std::array<int, 3>{1, 2, 3});
        CHECK(t.row_window(8) == std::array<int, 3>{6, 7, 8});
        CHECK(t.row_window(4) == std::array<int, 3>{3, 4, 5});

        const TrackingBeams inner = t.beams({2, 4, 4});
        CHECK(inner.super_wide.size() == 1);
        CHECK(inner.candidates[0][1] == NarrowPosition{2, 4, 3});
        CHECK(inner.candidates[2][2] == NarrowPosition{2, 5, 5});

        const TrackingBeams edge = t.beams({2, 1, 1});
        CHECK(edge.super_wide.size() == 2);
        CHECK(edge.super_wide[0].upa == 1);
        CHECK(edge.super_wide[1].upa == 2);
        CHECK(edge.candidates[0][0] == NarrowPosition{1, 1, 8});
        CHECK(edge.candidates[1][0] == NarrowPosition{2, 1, 1});

        // column beam points at its own column
        const UpaConfig cfg{8, 8, 2};
        const auto dirs = narrow_angles(8, 2);
        const Direction mid = dirs[std::size_t(narrow_index(8, {2, 4, 4}) - 1)];
        const double own = beam_gain(cfg, inner.columns[1], mid);
        CHECK(own > beam_gain(cfg, inner.columns[0], mid));
        CHECK(own > beam_gain(cfg, inner.columns[2], mid));
    }
}
