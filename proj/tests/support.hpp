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

#ifndef DUALPATH_TESTS_SUPPORT_HPP
#define DUALPATH_TESTS_SUPPORT_HPP

#include "dualpath/envelope.hpp"

#include <algorithm>
#include <map>

namespace dualpath::test {

// A set of peers with keypairs, for envelope-level tests.
struct KeyedPeers {
    TestCipher cipher;
    Rng rng{7};
    std::map<PeerId, KeyPair> keys;

    explicit KeyedPeers(PeerId count, std::uint64_t seed = 7) : rng(seed)
    {
        for (PeerId p = 1; p <= count; ++p)
            keys[p] = cipher.generate_keypair(p, rng);
    }

    KeyLookup lookup() const
    {
        return [this](PeerId p) -> const KeyHandle* {
            auto it = keys.find(p);
            return it == keys.end() ? nullptr : &it->second.public_key;
        };
    }

    std::vector<KeyHandle> ring(PeerId p) const { return {keys.at(p).private_key}; }
};

inline Bytes random_bytes(Rng& rng, std::size_t n)
{
    Bytes out(n);
    for (auto& b : out)
        b = static_cast<std::uint8_t>(rng.next());
    return out;
}

// Draws `count` distinct ids from [1, universe] excluding `avoid`.
inline std::vector<PeerId> distinct_ids(Rng& rng, PeerId universe, std::size_t count,
                                        const std::vector<PeerId>& avoid)
{
    std::vector<PeerId> pool;
    for (PeerId p = 1; p <= universe; ++p)
        if (std::find(avoid.begin(), avoid.end(), p) == avoid.end())
            pool.push_back(p);
    for (std::size_t i = 0; i < count; ++i)
        std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
    pool.resize(count);
    return pool;
}

} // namespace dualpath::test

#endif
