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

#ifndef QUPA_RNG_HPP
#define QUPA_RNG_HPP

#include <cstdint>
#include <random>

namespace qupa
{
    using Rng = std::mt19937_64;

    // SplitMix64 finalizer
    inline std::uint64_t mix64(std::uint64_t z)
    {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Seed of stream `stream`, trial `index` under a master seed. Streams separate the
    // purposes within one experiment (geometry, noise, ...); trials are numbered from 0.
    inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index)
    {
        std::uint64_t s = mix64(master + 0x9e3779b97f4a7c15ULL);
        s = mix64(s ^ (stream * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
        return mix64(s ^ (index + 0x8cb92ba72f3d8dd7ULL));
    }

    inline Rng make_rng(std::uint64_t master, std::uint64_t stream, std::uint64_t index)
    {
        return Rng(derive_seed(master, stream, index));
    }
}

#endif
