/*
 * Copyright 2026 The dualpath Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DUALPATH_RNG_HPP
#define DUALPATH_RNG_HPP

#include <cstdint>
#include <random>

namespace dualpath {

// Seeded generator with portable helpers. The std distributions are
// implementation-defined, so traces would differ across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Derives an independent stream, e.g. one per peer.
    static Rng derive(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, bound). bound must be nonzero.
    std::uint64_t below(std::uint64_t bound);

    /// Uniform in [0, 1).
    double unit();

    bool bernoulli(double p) { return p >= 1.0 || (p > 0.0 && unit() < p); }

private:
    std::mt19937_64 engine_;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

} // namespace dualpath

#endif
