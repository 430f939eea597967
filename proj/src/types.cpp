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

#include "dualpath/types.hpp"
#include "dualpath/rng.hpp"

namespace dualpath {

const char* to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::duplicate_join: return "duplicate-join";
    case Errc::unknown_peer: return "unknown-peer";
    case Errc::invalid_key_use: return "invalid-key-use";
    case Errc::unknown_key: return "unknown-key";
    case Errc::payload_too_large: return "payload-too-large";
    case Errc::malformed: return "malformed";
    case Errc::not_enough_peers: return "not-enough-peers";
    case Errc::precondition: return "precondition";
    case Errc::invalid_config: return "invalid-config";
    case Errc::run_failure: return "run-failure";
    }
    return "unknown";
}

void put_u8(Bytes& out, std::uint8_t v) { out.push_back(v); }

void put_u32(Bytes& out, std::uint32_t v)
{
    for (int shift = 24; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_u64(Bytes& out, std::uint64_t v)
{
    for (int shift = 56; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_bytes(Bytes& out, ByteView v) { out.insert(out.end(), v.begin(), v.end()); }

void Reader::need(std::size_t n) const
{
    if (remaining() < n)
        throw Error(Errc::malformed, "truncated input");
}

std::uint8_t Reader::u8()
{
    need(1);
    return data_[pos_++];
}

std::uint32_t Reader::u32()
{
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v = (v << 8) | data_[pos_++];
    return v;
}

std::uint64_t Reader::u64()
{
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v = (v << 8) | data_[pos_++];
    return v;
}

ByteView Reader::take(std::size_t n)
{
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

ByteView Reader::rest() { return take(remaining()); }

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng Rng::derive(std::uint64_t seed, std::uint64_t stream)
{
    return Rng(mix64(seed ^ mix64(stream + 0x5851f42d4c957f2dULL)));
}

std::uint64_t Rng::below(std::uint64_t bound)
{
    if (bound == 0)
        throw Error(Errc::precondition, "Rng::below with zero bound");
    // Rejection sampling keeps the result unbiased.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t v;
    do {
        v = next();
    } while (v >= limit);
    return v % bound;
}

double Rng::unit()
{
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

} // namespace dualpath
