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

#include "qupa/codebook_io.hpp"

#include <fmt/core.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <system_error>

namespace qupa
{
    namespace
    {
        constexpr std::array<char, 8> kMagic{'Q', 'U', 'P', 'A', 'C', 'B', '0', '1'};
        constexpr std::uint32_t kMaxStages = 64;

        template <typename U>
        void put_le(std::ostream &out, U value)
        {
            std::array<char, sizeof(U)> bytes{};
            for (std::size_t i = 0; i < sizeof(U); ++i)
                bytes[i] = char((value >> (8 * i)) & 0xff);
            out.write(bytes.data(), bytes.size());
        }

        template <typename U>
        U get_le(std::istream &in)
        {
            std::array<unsigned char, sizeof(U)> bytes{};
            in.read(reinterpret_cast<char *>(bytes.data()), bytes.size());
            if (!in)
                throw std::runtime_error("codebook file is truncated");
            U value = 0;
            for (std::size_t i = 0; i < sizeof(U); ++i)
                value |= U(bytes[i]) << (8 * i);
            return value;
        }

        void put_i32(std::ostream &out, int v) { put_le(out, std::bit_cast<std::uint32_t>(std::int32_t(v))); }
        int get_i32(std::istream &in) { return std::bit_cast<std::int32_t>(get_le<std::uint32_t>(in)); }
        void put_f64(std::ostream &out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }
        double get_f64(std::istream &in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

        int variant_code(CodebookVariant v) { return int(v); }

        CodebookVariant variant_from_code(int code)
        {
            if (code < 0 || code > int(CodebookVariant::UniformVirtual))
                throw std::runtime_error(fmt::format("unknown codebook variant code {}", code));
            return CodebookVariant(code);
        }
    }

    void write_codebook(std::ostream &out, const HierarchicalCodebook &cb)
    {
        const CodebookParams &p = cb.params();
        out.write(kMagic.data(), kMagic.size());
        put_le<std::uint32_t>(out, kCodebookFormatVersion);
        put_i32(out, p.n);
        put_i32(out, p.array.n_y);
        put_i32(out, p.array.n_z);
        put_i32(out, p.buffer_width);
        put_i32(out, variant_code(p.variant));
        put_f64(out, p.buffer_gain);
        put_f64(out, p.tikhonov);
        put_le<std::uint32_t>(out, std::uint32_t(cb.stages() + 1));
        for (int s = 0; s <= cb.stages(); ++s)
        {
            const Eigen::MatrixXcd &m = cb.stage(s);
            put_le<std::uint32_t>(out, std::uint32_t(m.cols()));
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                for (Eigen::Index r = 0; r < m.rows(); ++r)
                {
                    put_f64(out, m(r, c).real());
                    put_f64(out, m(r, c).imag());
                }
        }
        for (const VhPoint &p : cb.narrow_vh())
        {
            put_f64(out, p.v);
            put_f64(out, p.h);
        }
        if (!out)
            throw std::runtime_error("failed to write codebook");
    }

    HierarchicalCodebook read_codebook(std::istream &in)
    {
        std::array<char, 8> magic{};
        in.read(magic.data(), magic.size());
        if (!in || magic != kMagic)
            throw std::runtime_error("not a codebook file");
        const auto version = get_le<std::uint32_t>(in);
        if (version != kCodebookFormatVersion)
            throw std::runtime_error(fmt::format("unsupported codebook format version {}", version));

        CodebookParams p;
        p.n = get_i32(in);
        p.array.n_y = get_i32(in);
        p.array.n_z = get_i32(in);
        p.buffer_width = get_i32(in);
        p.variant = variant_from_code(get_i32(in));
        p.buffer_gain = get_f64(in);
        p.tikhonov = get_f64(in);
        p.validate();

        const auto count = get_le<std::uint32_t>(in);
        if (count > kMaxStages || int(count) != stage_count(p.n) + 1)
            throw std::runtime_error("codebook stage count does not match its beam count");
        const int na = p.array.elements();
        std::vector<Eigen::MatrixXcd> stages;
        for (std::uint32_t s = 0; s < count; ++s)
        {
            const auto cols = get_le<std::uint32_t>(in);
            if (cols != (std::uint32_t(1) << s))
                throw std::runtime_error(fmt::format("stage {} has {} columns", s, cols));
            Eigen::MatrixXcd m(na, Eigen::Index(cols));
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                for (Eigen::Index r = 0; r < m.rows(); ++r)
                {
                    const double re = get_f64(in);
                    const double im = get_f64(in);
                    m(r, c) = {re, im};
                }
            stages.push_back(std::move(m));
        }
        std::vector<VhPoint> centers(std::size_t(p.n) * std::size_t(p.n));
        for (VhPoint &c : centers)
        {
            c.v = get_f64(in);
            c.h = get_f64(in);
        }
        return HierarchicalCodebook(p, std::move(stages), std::move(centers), 1);
    }

    void save_codebook(const HierarchicalCodebook &cb, const std::filesystem::path &path)
    {
        if (path.has_parent_path())
            std::filesystem::create_directories(path.parent_path());
        const std::filesystem::path tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out)
                throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
            write_codebook(out, cb);
        }
        std::filesystem::rename(tmp, path);
    }

    HierarchicalCodebook load_codebook(const std::filesystem::path &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw std::runtime_error(fmt::format("cannot open codebook {}", path.string()));
        return read_codebook(in);
    }

    std::string cache_file_name(const CodebookParams &p)
    {
        return fmt::format("codebook_n{}_{}x{}_w{}_chi{}_reg{}_{}.qcb", p.n, p.array.n_y, p.array.n_z,
                           p.effective_buffer_width(), p.buffer_gain, p.tikhonov, to_string(p.variant));
    }

    HierarchicalCodebook load_or_build(const CodebookParams &params,
                                       const std::filesystem::path &cache_dir, bool *built)
    {
        params.validate();
        if (built)
            *built = false;
        if (!cache_dir.empty())
        {
            const auto path = cache_dir / cache_file_name(params);
            std::error_code ec;
            if (std::filesystem::exists(path, ec))
            {
                HierarchicalCodebook cb = load_codebook(path);
                if (cb.params() == params)
                    return cb;
            }
        }
        HierarchicalCodebook cb = build_codebook(params);
        if (built)
            *built = true;
        if (!cache_dir.empty())
            save_codebook(cb, cache_dir / cache_file_name(params));
        return cb;
    }
}
