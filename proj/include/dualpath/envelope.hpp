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

#ifndef DUALPATH_ENVELOPE_HPP
#define DUALPATH_ENVELOPE_HPP

#include "dualpath/cipher.hpp"

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <variant>

namespace dualpath {

/*
 * Wire layout of a DATA frame (bit-exact):
 *
 *   [scheme 1][key_id 8][body length 4, big-endian][body][zero padding to pad_size]
 *
 * Opened layer plaintexts are discriminated by their first byte:
 *
 *   0x00  request forward layer   [next PeerId 8][inner layer]
 *   0x01  request innermost layer [kind 1][piggyback flag 1][key 40]?[M len 4][M][rblock len 4][rblock]
 *   0x02  response frame          [0x02][tail len 4][tail][part len 4][part]
 *
 * A forward layer starts with zero because PeerIds stay below 2^56. There is
 * no hop counter anywhere in the format.
 */

inline constexpr std::size_t kDefaultPadSize = 2048;

enum class FrameClass : std::uint8_t { data, control };

/// A frame on a link. destination and frame_class are link-level metadata;
/// only `frame` is the transmitted byte sequence.
struct Packet {
    PeerId destination = kNoPeer;
    FrameClass frame_class = FrameClass::data;
    Bytes frame;
};

enum class PayloadKind : std::uint8_t {
    request = 0x01,
    response = 0x02,
};

struct PlainPayload {
    PayloadKind kind = PayloadKind::request;
    Bytes message;
    std::optional<KeyHandle> piggyback_key;

    bool operator==(const PlainPayload&) const = default;
};

/// Returns the public key for a peer, or nullptr when unknown.
using KeyLookup = std::function<const KeyHandle*(PeerId)>;

/// Opening keys held by one peer (private key, own symmetric, cached keys).
using KeyRing = std::span<const KeyHandle>;

const KeyHandle* find_opener(KeyRing keys, const SealedBlob& blob);

// ---------------------------------------------------------------------------
// Response path block

/// Per-hop key a response relay uses to re-blind the payload part, so that
/// no two relays that are not neighbours see the same bytes.
using BlindKey = std::array<std::uint8_t, 32>;

/// The nested "Next Peer"/"Tail" structure. The head is read by the provider
/// (it already sits inside the provider's sealed layer); each tail layer is
/// sealed to the hop that must open it. An empty tail is the terminator.
struct ResponseBlock {
    PeerId first_hop = kNoPeer;
    Bytes tail;

    Bytes serialize() const;
    static ResponseBlock parse(ByteView bytes);

    bool operator==(const ResponseBlock&) const = default;
};

struct BuiltResponseBlock {
    ResponseBlock block;
    /// One per response hop, in path order. Kept by the requester.
    std::vector<BlindKey> blinds;
};

/// Throws Error(precondition) on an empty or repeating path or one that
/// contains the requester, Error(unknown_key) when a hop has no key.
BuiltResponseBlock build_response_block(CipherSuite& cipher, std::span<const PeerId> response_path,
                                        PeerId requester, const KeyLookup& keys, Rng& rng);

struct ResponseHop {
    PeerId next = kNoPeer;
    std::optional<BlindKey> blind;
    Bytes tail;

    bool is_end() const noexcept { return tail.empty(); }
};

/// Provider side: reads the unsealed head of the block.
ResponseHop open_response_block(const ResponseBlock& rblock);

/// Relay side: opens one tail layer. nullopt on wrong key or tampering.
std::optional<ResponseHop> open_response_tail(const CipherSuite& cipher, ByteView tail,
                                              KeyRing own_keys);

// ---------------------------------------------------------------------------
// Request onion

Bytes encode_payload(const PlainPayload& payload, ByteView rblock);

/// Throws Error(precondition) on repeated hops or a provider on the path,
/// Error(unknown_key) on a missing key, Error(payload_too_large) when the
/// onion does not fit in pad_size.
Packet build_request_onion(CipherSuite& cipher, std::span<const PeerId> request_path, PeerId provider,
                           const PlainPayload& payload, const ResponseBlock& rblock,
                           const KeyLookup& keys, std::size_t pad_size);

struct WrongKey {};

struct Forward {
    PeerId next = kNoPeer;
    Packet inner;
};

struct Deliver {
    PlainPayload payload;
    ResponseBlock rblock;
};

/// An opened response frame: the relay's tail layer and the opaque part.
struct ResponseLayer {
    Bytes tail;
    Bytes part;
};

using PeelResult = std::variant<WrongKey, Forward, Deliver, ResponseLayer>;

/// Opens one DATA frame with whichever of own_keys matches. Forward results
/// are re-padded to pad_size.
PeelResult peel_layer(const CipherSuite& cipher, const Packet& packet, KeyRing own_keys,
                      std::size_t pad_size);

// ---------------------------------------------------------------------------
// Response frames

enum class ResponseMode { end_to_end, per_hop };

/// end_to_end: the part is a layer sealed with the requester's session key.
/// per_hop: the part is [session key_id 8][encoded payload] in the clear, so
/// every response relay can read it.
Bytes make_response_part(CipherSuite& cipher, ResponseMode mode, const KeyHandle& session_key,
                         const PlainPayload& payload);

/// Seals [0x02][tail][part] for one hop. Throws payload_too_large.
Packet wrap_response(CipherSuite& cipher, ByteView part, const KeyHandle& hop_key, ByteView tail,
                     PeerId destination, std::size_t pad_size);

/// XOR with a keystream derived from the blind key; applying it twice is
/// the identity.
void blind_part(Bytes& part, const BlindKey& blind);

/// Requester side, after removing all blinds. nullopt if the part was not
/// made for this session.
std::optional<PlainPayload> open_response_part(const CipherSuite& cipher, ResponseMode mode,
                                               const KeyHandle& session_key, ByteView part);

// ---------------------------------------------------------------------------
// Sizes

std::size_t response_block_size(const CipherSuite& cipher, std::size_t response_hops);

std::size_t request_onion_size(const CipherSuite& cipher, std::size_t request_hops,
                               std::size_t response_hops, std::size_t message_len, bool with_key);

/// Largest request message that fits; nullopt if even an empty one does not.
std::optional<std::size_t> max_request_message(const CipherSuite& cipher, std::size_t request_hops,
                                               std::size_t response_hops, std::size_t pad_size);

std::optional<std::size_t> max_response_message(const CipherSuite& cipher, ResponseMode mode,
                                                std::size_t response_hops, std::size_t pad_size);

// ---------------------------------------------------------------------------
// Frame schema

struct FrameField {
    const char* name;
    std::size_t offset;
    std::size_t length;
};

/// Splits a DATA frame into its visible fields. Throws Error(malformed) when
/// the frame is not exactly one layer followed by zero padding.
std::vector<FrameField> inspect_frame(ByteView frame, std::size_t pad_size);

// ---------------------------------------------------------------------------
// Key table and direct (non-anonymous) exchanges

/// Symmetric keys cached per peer. An entry is the key used when sending to
/// that peer; it was either received from it, or disclosed to it by us.
class KeyTable {
public:
    KeyTable(PeerId self, KeyHandle own_symmetric);

    PeerId self() const noexcept { return self_; }
    const KeyHandle& own_symmetric() const noexcept { return own_; }
    const std::map<PeerId, KeyHandle>& entries() const noexcept { return entries_; }

    const KeyHandle* find(PeerId peer) const;

    /// Stores a key received from `sender`; latest wins. Throws
    /// Error(invalid_key_use) for non-symmetric keys and Error(precondition)
    /// for our own id.
    void record_piggybacked_key(PeerId sender, const KeyHandle& key);

    /// After a first-contact send: the pair now shares our own key.
    void bind_disclosed(PeerId dest) { record_piggybacked_key(dest, own_); }

    /// Every key that can open a symmetric frame addressed to us.
    std::vector<KeyHandle> openers() const;

private:
    PeerId self_;
    KeyHandle own_;
    std::map<PeerId, KeyHandle> entries_;
};

struct AsymmetricScheme {
    KeyHandle key;
    KeyHandle piggyback;
};

struct SymmetricScheme {
    KeyHandle key;
};

using SchemeChoice = std::variant<AsymmetricScheme, SymmetricScheme>;

/// Empty entry: seal to dest's public key and piggyback our symmetric key.
/// Cached entry: seal with it. Throws Error(precondition) when dest is self.
SchemeChoice select_scheme(const KeyTable& table, PeerId dest, const KeyHandle& dest_public);

struct DirectMessage {
    std::uint8_t type = 0;
    Bytes body;
    std::optional<KeyHandle> piggyback_key;
};

struct DirectSend {
    Packet packet;
    Scheme scheme = Scheme::asymmetric;
};

/// Seals a control message toward a peer we talk to directly, choosing the
/// scheme from the table and binding our key on first contact.
DirectSend seal_direct(CipherSuite& cipher, KeyTable& table, PeerId dest,
                       const KeyHandle& dest_public, std::uint8_t type, ByteView body);

/// Opens a control frame and records any piggybacked key under `sender`.
std::optional<DirectMessage> open_direct(const CipherSuite& cipher, KeyTable& table,
                                         const KeyHandle& own_private, PeerId sender,
                                         ByteView frame);

} // namespace dualpath

#endif
