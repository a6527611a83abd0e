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

#ifndef QUPA_CODEBOOK_IO_HPP
#define QUPA_CODEBOOK_IO_HPP

#include "qupa/codebook.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace qupa
{
    inline constexpr std::uint32_t kCodebookFormatVersion = 1;

    // Binary layout, all integers and doubles little-endian:
    //   char[8]  "QUPACB01"
    //   u32      format version
    //   i32      n, n_y, n_z, buffer_width, variant
    //   f64      buffer_gain, tikhonov
    //   u32      stage count S + 1
    //   per stage: u32 columns, then columns x N_a complex values (f64 re, f64 im),
    //              column-major in element order iz * n_y + iy
    //   N^2 x (f64 v, f64 h) narrow-beam centers
    void write_codebook(std::ostream &out, const HierarchicalCodebook &cb);
    HierarchicalCodebook read_codebook(std::istream &in);

    void save_codebook(const HierarchicalCodebook &cb, const std::filesystem::path &path);
    HierarchicalCodebook load_codebook(const std::filesystem::path &path);

    // File name that identifies a parameter set inside a cache directory
    std::string cache_file_name(const CodebookParams &params);

    // Loads params from cache_dir when present, otherwise builds and stores it there.
    // An empty cache_dir disables caching.
    HierarchicalCodebook load_or_build(const CodebookParams &params,
                                       const std::filesystem::path &cache_dir,
                                       bool *built = nullptr);
}

#endif
