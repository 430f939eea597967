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

#ifndef DUALPATH_CIPHER_HPP
#define DUALPATH_CIPHER_HPP

#include "dualpath/rng.hpp"
#include "dualpath/types.hpp"

#include <array>
#include <cstddef>
#include <optional>

namespace dualpath {

enum class KeyKind : std::uint8_t {
    asymmetric_public,
    asymmetric_private,
    symmetric,
};

using KeyMaterial = std::array<std::uint8_t, 24>;

/// A key as seen by the sealing layer. Public and private halves of a pair
/// share `key_id`; a symmetric handle both seals and opens.
struct KeyHandle {
    KeyKind kind = KeyKind::symmetric;
    PeerId owner = kNoPeer;
    KeyId key_id = 0;
    KeyMaterial material{};

    bool operator==(const KeyHandle&) const = default;
};

struct KeyPair {
    KeyHandle public_key;
    KeyHandle private_key;
};

/// Serialized key size: [key_id 8][owner 8][material 24].
inline constexpr std::size_t kSerializedKeySize = 40;

void put_key(Bytes& out, const KeyHandle& key);
KeyHandle read_key(Reader& in, KeyKind kind);

/// Frame-level scheme tag, so receivers pick the opener without trial
/// decryption.
enum class Scheme : std::uint8_t {
    asymmetric = 0x01,
    symmetric = 0x02,
};

/// Header bytes of a serialized layer: [scheme 1][key_id 8][body length 4].
inline constexpr std::size_t kLayerHeaderSize = 13;

struct SealedBlob {
    Scheme scheme = Scheme::symmetric;
    KeyId required_key_id = 0;
    Bytes body;

    /// [scheme][key_id][body length, big-endian][body]
    Bytes serialize() const;
    std::size_t serialized_size() const { return kLayerHeaderSize + body.size(); }

    /// Parses exactly one layer from `in`; trailing bytes are left unread.
    static SealedBlob read(Reader& in);
    /// Parses a layer that must span all of `bytes`.
    static SealedBlob parse(ByteView bytes);

    bool operator==(const SealedBlob&) const = default;
};

/// Sealing contract. Implementations must make `open` fail for every handle
/// other than the matching opener, and for any modified body.
class CipherSuite {
public:
    virtual ~CipherSuite() = default;

    virtual KeyPair generate_keypair(PeerId owner, Rng& rng) const = 0;
    virtual KeyHandle generate_symmetric(PeerId owner, Rng& rng) const = 0;

    /// Throws Error(invalid_key_use) for an asymmetric-private handle.
    virtual SealedBlob seal(const KeyHandle& key, ByteView plaintext) = 0;

    /// nullopt means wrong key (or a tampered body); callers drop silently.
    virtual std::optional<Bytes> open(const KeyHandle& key, const SealedBlob& blob) const = 0;

    /// Body length produced by seal() for a plaintext of the given length.
    virtual std::size_t body_size(std::size_t plaintext_len) const = 0;

    std::size_t layer_size(std::size_t plaintext_len) const
    {
        return kLayerHeaderSize + body_size(plaintext_len);
    }
};

/// Deterministic stand-in cipher: key-id matching, a keyed keystream and a
/// 64-bit integrity tag. It has the structure of a real hybrid scheme but no
/// cryptographic strength.
class TestCipher final : public CipherSuite {
public:
    static constexpr std::size_t kBlock = 16;
    static constexpr std::size_t kTagSize = 8;

    KeyPair generate_keypair(PeerId owner, Rng& rng) const override;
    KeyHandle generate_symmetric(PeerId owner, Rng& rng) const override;
    SealedBlob seal(const KeyHandle& key, ByteView plaintext) override;
    std::optional<Bytes> open(const KeyHandle& key, const SealedBlob& blob) const override;
    std::size_t body_size(std::size_t plaintext_len) const override;
};

/// Forwards to another suite and counts seals per scheme.
class CountingCipher final : public CipherSuite {
public:
    explicit CountingCipher(CipherSuite& inner) : inner_(inner) {}

    KeyPair generate_keypair(PeerId owner, Rng& rng) const override
    {
        return inner_.generate_keypair(owner, rng);
    }
    KeyHandle generate_symmetric(PeerId owner, Rng& rng) const override
    {
        return inner_.generate_symmetric(owner, rng);
    }
    SealedBlob seal(const KeyHandle& key, ByteView plaintext) override;
    std::optional<Bytes> open(const KeyHandle& key, const SealedBlob& blob) const override
    {
        return inner_.open(key, blob);
    }
    std::size_t body_size(std::size_t plaintext_len) const override
    {
        return inner_.body_size(plaintext_len);
    }

    std::uint64_t asymmetric_seals() const noexcept { return asymmetric_; }
    std::uint64_t symmetric_seals() const noexcept { return symmetric_; }

private:
    CipherSuite& inner_;
    std::uint64_t asymmetric_ = 0;
    std::uint64_t symmetric_ = 0;
};

} // namespace dualpath

#endif
