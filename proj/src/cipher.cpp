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

#include "dualpath/cipher.hpp"

#include <algorithm>

namespace dualpath {

void put_key(Bytes& out, const KeyHandle& key)
{
    put_u64(out, key.key_id);
    put_u64(out, key.owner);
    put_bytes(out, key.material);
}

KeyHandle read_key(Reader& in, KeyKind kind)
{
    KeyHandle key;
    key.kind = kind;
    key.key_id = in.u64();
    key.owner = in.u64();
    auto material = in.take(key.material.size());
    std::copy(material.begin(), material.end(), key.material.begin());
    return key;
}

Bytes SealedBlob::serialize() const
{
    Bytes out;
    out.reserve(serialized_size());
    put_u8(out, static_cast<std::uint8_t>(scheme));
    put_u64(out, required_key_id);
    put_u32(out, static_cast<std::uint32_t>(body.size()));
    put_bytes(out, body);
    return out;
}

SealedBlob SealedBlob::read(Reader& in)
{
    SealedBlob blob;
    const auto tag = in.u8();
    if (tag != static_cast<std::uint8_t>(Scheme::asymmetric) &&
        tag != static_cast<std::uint8_t>(Scheme::symmetric))
        throw Error(Errc::malformed, "unknown scheme tag");
    blob.scheme = static_cast<Scheme>(tag);
    blob.required_key_id = in.u64();
    const auto len = in.u32();
    auto body = in.take(len);
    blob.body.assign(body.begin(), body.end());
    return blob;
}

SealedBlob SealedBlob::parse(ByteView bytes)
{
    Reader in(bytes);
    auto blob = read(in);
    if (!in.done())
        throw Error(Errc::malformed, "trailing bytes after layer");
    return blob;
}

namespace {

using Words = std::array<std::uint64_t, 3>;

Words words_of(const KeyMaterial& m)
{
    Words w{};
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t b = 0; b < 8; ++b)
            w[i] = (w[i] << 8) | m[i * 8 + b];
    return w;
}

KeyMaterial material_of(const Words& w)
{
    KeyMaterial m{};
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t b = 0; b < 8; ++b)
            m[i * 8 + b] = static_cast<std::uint8_t>(w[i] >> (56 - 8 * b));
    return m;
}

// Public half of a test key pair; one-way only in spirit.
Words public_words(const Words& secret)
{
    return {mix64(secret[0] ^ 0xa5a5a5a5a5a5a5a5ULL),
            mix64(secret[1] ^ 0x3c3c3c3c3c3c3c3cULL),
            mix64(secret[2] ^ 0x0f0f0f0f0f0f0f0fULL)};
}

std::uint64_t stream_seed(KeyId key_id, const Words& w)
{
    std::uint64_t s = mix64(key_id);
    for (auto word : w)
        s = mix64(s ^ word);
    return s;
}

void apply_keystream(std::uint64_t seed, Bytes& data)
{
    std::uint64_t block = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (i % 8 == 0)
            block = mix64(seed ^ mix64(i / 8));
        data[i] ^= static_cast<std::uint8_t>(block >> (8 * (i % 8)));
    }
}

std::uint64_t tag_of(std::uint64_t seed, const Bytes& plain)
{
    std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc908ULL);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < plain.size(); ++i) {
        word = (word << 8) | plain[i];
        if (i % 8 == 7) {
            h = mix64(h ^ word);
            word = 0;
        }
    }
    h = mix64(h ^ word);
    return mix64(h ^ plain.size());
}

std::size_t padded(std::size_t n, std::size_t block)
{
    return (n + block - 1) / block * block;
}

} // namespace

KeyPair TestCipher::generate_keypair(PeerId owner, Rng& rng) const
{
    KeyPair pair;
    const KeyId id = rng.next();
    const Words secret{rng.next(), rng.next(), rng.next()};
    pair.private_key = {KeyKind::asymmetric_private, owner, id, material_of(secret)};
    pair.public_key = {KeyKind::asymmetric_public, owner, id, material_of(public_words(secret))};
    return pair;
}

KeyHandle TestCipher::generate_symmetric(PeerId owner, Rng& rng) const
{
    const KeyId id = rng.next();
    const Words secret{rng.next(), rng.next(), rng.next()};
    return {KeyKind::symmetric, owner, id, material_of(secret)};
}

std::size_t TestCipher::body_size(std::size_t plaintext_len) const
{
    return padded(4 + plaintext_len, kBlock) + kTagSize;
}

SealedBlob TestCipher::seal(const KeyHandle& key, ByteView plaintext)
{
    if (key.kind == KeyKind::asymmetric_private)
        throw Error(Errc::invalid_key_use, "cannot seal with a private key");

    Bytes plain;
    plain.reserve(padded(4 + plaintext.size(), kBlock));
    put_u32(plain, static_cast<std::uint32_t>(plaintext.size()));
    put_bytes(plain, plaintext);
    plain.resize(padded(plain.size(), kBlock), 0);

    const auto seed = stream_seed(key.key_id, words_of(key.material));
    const auto tag = tag_of(seed, plain);
    apply_keystream(seed, plain);

    SealedBlob blob;
    blob.scheme = key.kind == KeyKind::symmetric ? Scheme::symmetric : Scheme::asymmetric;
    blob.required_key_id = key.key_id;
    blob.body = std::move(plain);
    put_u64(blob.body, tag);
    return blob;
}

std::optional<Bytes> TestCipher::open(const KeyHandle& key, const SealedBlob& blob) const
{
    const bool kind_ok =
        (blob.scheme == Scheme::asymmetric && key.kind == KeyKind::asymmetric_private) ||
        (blob.scheme == Scheme::symmetric && key.kind == KeyKind::symmetric);
    if (!kind_ok || key.key_id != blob.required_key_id)
        return std::nullopt;
    if (blob.body.size() < kBlock + kTagSize || (blob.body.size() - kTagSize) % kBlock != 0)
        return std::nullopt;

    const auto words = blob.scheme == Scheme::asymmetric ? public_words(words_of(key.material))
                                                         : words_of(key.material);
    const auto seed = stream_seed(key.key_id, words);

    Bytes plain(blob.body.begin(), blob.body.end() - kTagSize);
    apply_keystream(seed, plain);

    Reader tag_in(ByteView(blob.body).last(kTagSize));
    if (tag_in.u64() != tag_of(seed, plain))
        return std::nullopt;

    Reader in(plain);
    const auto len = in.u32();
    if (len > in.remaining())
        return std::nullopt;
    auto body = in.take(len);
    return Bytes(body.begin(), body.end());
}

SealedBlob CountingCipher::seal(const KeyHandle& key, ByteView plaintext)
{
    auto blob = inner_.seal(key, plaintext);
    if (blob.scheme == Scheme::asymmetric)
        ++asymmetric_;
    else
        ++symmetric_;
    return blob;
}

} // namespace dualpath
