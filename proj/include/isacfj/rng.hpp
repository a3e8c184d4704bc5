// SPDX-License-Identifier: Apache-2.0
//
// isacfj - secure multicarrier ISAC simulation with sensing-guided friendly jamming
// Copyright (C) 2026 The isacfj Authors
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

#ifndef ISACFJ_RNG_HPP
#define ISACFJ_RNG_HPP

#include <complex>
#include <cstdint>
#include <limits>

namespace isacfj {

/// Mixes three words into one 64-bit key. Used to derive independent
/// substream keys from a master seed and a pair of indices.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

/// Counter-based random stream: the i-th draw is a pure function of
/// (key, i). Two streams with the same key produce identical sequences,
/// and substreams with distinct indices are statistically independent.
///
/// Satisfies UniformRandomBitGenerator so it can be handed to <random>
/// distributions, but the normal/complex-normal helpers below are
/// preferred: they are bit-reproducible across standard libraries.
class Stream {
public:
    using result_type = std::uint64_t;

    explicit Stream(std::uint64_t key, std::uint64_t counter = 0) : key_(key), counter_(counter) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();

    /// Standard normal via Box-Muller; consumes two uniforms per call.
    double normal();

    /// Circularly symmetric complex Gaussian CN(0, variance).
    std::complex<double> cnormal(double variance = 1.0);

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    Stream substream(std::uint64_t a, std::uint64_t b = 0) const { return Stream(derive_seed(key_, a, b)); }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

} // namespace isacfj

#endif
