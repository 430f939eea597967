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

#include "dualpath/envelope.hpp"

#include <algorithm>
#include <set>

namespace dualpath {

namespace {

constexpr std::uint8_t kForwardTag = 0x00;
constexpr std::uint8_t kResponseTag = 0x02;

const KeyHandle& require_key(const KeyLookup& keys, PeerId peer)
{
    const KeyHandle* key = keys ? keys(peer) : nullptr;
    if (key == nullptr)
        throw Error(Errc::unknown_key, "no key for peer " + std::to_string(peer));
    return *key;
}

void require_peer_id(PeerId peer)
{
    if (peer == kNoPeer || peer > kMaxPeerId)
        throw Error(Errc::precondition, "peer id out of range: " + std::to_string(peer));
}

void pad_to(Bytes& frame, std::size_t pad_size)
{
    if (frame.size() > pad_size)
        throw Error(Errc::payload_too_large,
                    "frame of " + std::to_string(frame.size()) + " bytes exceeds pad size " +
                        std::to_string(pad_size));
    frame.resize(pad_size, 0);
}

std::pair<PlainPayload, Bytes> decode_payload(ByteView bytes)
{
    Reader in(bytes);
    PlainPayload payload;
    const auto kind = in.u8();
    if (kind != static_cast<std::uint8_t>(PayloadKind::request) &&
        kind != static_cast<std::uint8_t>(PayloadKind::response))
        throw Error(Errc::malformed, "bad payload kind");
    payload.kind = static_cast<PayloadKind>(kind);
    const auto flag = in.u8();
    if (flag > 1)
        throw Error(Errc::malformed, "bad piggyback flag");
    if (flag == 1)
        payload.piggyback_key = read_key(in, KeyKind::symmetric);
    auto message = in.take(in.u32());
    payload.message.assign(message.begin(), message.end());
    auto rblock = in.take(in.u32());
    if (!in.done())
        throw Error(Errc::malformed, "trailing payload bytes");
    return {std::move(payload), Bytes(rblock.begin(), rblock.end())};
}

std::uint64_t blind_seed(const BlindKey& blind)
{
    std::uint64_t s = 0x243f6a8885a308d3ULL;
    for (std::size_t i = 0; i < blind.size(); i += 8) {
        std::uint64_t word = 0;
        for (std::size_t b = 0; b < 8; ++b)
            word = (word << 8) | blind[i + b];
        s = mix64(s ^ word);
    }
    return s;
}

template <class Fn>
std::optional<std::size_t> largest_fitting(std::size_t pad_size, Fn size_for)
{
    if (size_for(0) > pad_size)
        return std::nullopt;
    std::size_t lo = 0, hi = pad_size;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo + 1) / 2;
        if (size_for(mid) <= pad_size)
            lo = mid;
        else
            hi = mid - 1;
    }
    return lo;
}

} // namespace

const KeyHandle* find_opener(KeyRing keys, const SealedBlob& blob)
{
    const KeyKind wanted =
        blob.scheme == Scheme::asymmetric ? KeyKind::asymmetric_private : KeyKind::symmetric;
    for (const auto& key : keys)
        if (key.kind == wanted && key.key_id == blob.required_key_id)
            return &key;
    return nullptr;
}

// ---------------------------------------------------------------------------

Bytes ResponseBlock::serialize() const
{
    Bytes out;
    put_u64(out, first_hop);
    put_bytes(out, tail);
    return out;
}

ResponseBlock ResponseBlock::parse(ByteView bytes)
{
    Reader in(bytes);
    ResponseBlock block;
    block.first_hop = in.u64();
    auto tail = in.rest();
    block.tail.assign(tail.begin(), tail.end());
    return block;
}

BuiltResponseBlock build_response_block(CipherSuite& cipher, std::span<const PeerId> response_path,
                                        PeerId requester, const KeyLookup& keys, Rng& rng)
{
    if (response_path.empty())
        throw Error(Errc::precondition, "response path must not be empty");
    require_peer_id(requester);
    std::set<PeerId> seen;
    for (auto hop : response_path) {
        require_peer_id(hop);
        if (hop == requester || !seen.insert(hop).second)
            throw Error(Errc::precondition, "response path hops must be distinct and exclude the requester");
    }

    BuiltResponseBlock built;
    built.blinds.resize(response_path.size());
    for (auto& blind : built.blinds)
        for (std::size_t i = 0; i < blind.size(); i += 8) {
            const auto word = rng.next();
            for (std::size_t b = 0; b < 8; ++b)
                blind[i + b] = static_cast<std::uint8_t>(word >> (56 - 8 * b));
        }

    Bytes tail;  // empty terminator
    PeerId next = requester;
    for (std::size_t i = response_path.size(); i-- > 0;) {
        Bytes plain;
        put_u64(plain, next);
        put_bytes(plain, built.blinds[i]);
        put_bytes(plain, tail);
        tail = cipher.seal(require_key(keys, response_path[i]), plain).serialize();
        next = response_path[i];
    }
    built.block.first_hop = next;
    built.block.tail = std::move(tail);
    return built;
}

ResponseHop open_response_block(const ResponseBlock& rblock)
{
    return {rblock.first_hop, std::nullopt, rblock.tail};
}

std::optional<ResponseHop> open_response_tail(const CipherSuite& cipher, ByteView tail,
                                              KeyRing own_keys)
{
    try {
        const auto blob = SealedBlob::parse(tail);
        const KeyHandle* key = find_opener(own_keys, blob);
        if (key == nullptr)
            return std::nullopt;
        auto plain = cipher.open(*key, blob);
        if (!plain)
            return std::nullopt;
        Reader in(*plain);
        ResponseHop hop;
        hop.next = in.u64();
        BlindKey blind{};
        auto raw = in.take(blind.size());
        std::copy(raw.begin(), raw.end(), blind.begin());
        hop.blind = blind;
        auto rest = in.rest();
        hop.tail.assign(rest.begin(), rest.end());
        return hop;
    } catch (const Error&) {
        return std::nullopt;
    }
}

// ---------------------------------------------------------------------------

Bytes encode_payload(const PlainPayload& payload, ByteView rblock)
{
    Bytes out;
    put_u8(out, static_cast<std::uint8_t>(payload.kind));
    put_u8(out, payload.piggyback_key ? 1 : 0);
    if (payload.piggyback_key)
        put_key(out, *payload.piggyback_key);
    put_u32(out, static_cast<std::uint32_t>(payload.message.size()));
    put_bytes(out, payload.message);
    put_u32(out, static_cast<std::uint32_t>(rblock.size()));
    put_bytes(out, rblock);
    return out;
}

Packet build_request_onion(CipherSuite& cipher, std::span<const PeerId> request_path, PeerId provider,
                           const PlainPayload& payload, const ResponseBlock& rblock,
                           const KeyLookup& keys, std::size_t pad_size)
{
    require_peer_id(provider);
    std::set<PeerId> seen;
    for (auto hop : request_path) {
        require_peer_id(hop);
        if (hop == provider || !seen.insert(hop).second)
            throw Error(Errc::precondition, "request path hops must be distinct and exclude the provider");
    }
    const Bytes inner = encode_payload(payload, rblock.serialize());
    std::size_t expected = cipher.layer_size(inner.size());
    for (std::size_t i = 0; i < request_path.size(); ++i)
        expected = cipher.layer_size(8 + expected);
    if (expected > pad_size)
        throw Error(Errc::payload_too_large, "request does not fit in pad size");

    Bytes layer = cipher.seal(require_key(keys, provider), inner).serialize();
    PeerId next = provider;
    for (std::size_t i = request_path.size(); i-- > 0;) {
        Bytes plain;
        put_u64(plain, next);
        put_bytes(plain, layer);
        layer = cipher.seal(require_key(keys, request_path[i]), plain).serialize();
        next = request_path[i];
    }

    Packet packet{next, FrameClass::data, std::move(layer)};
    pad_to(packet.frame, pad_size);
    return packet;
}

PeelResult peel_layer(const CipherSuite& cipher, const Packet& packet, KeyRing own_keys,
                      std::size_t pad_size)
{
    try {
        Reader frame(packet.frame);
        const auto blob = SealedBlob::read(frame);
        const KeyHandle* key = find_opener(own_keys, blob);
        if (key == nullptr)
            return WrongKey{};
        auto plain = cipher.open(*key, blob);
        if (!plain || plain->empty())
            return WrongKey{};

        const auto tag = plain->front();
        if (tag == kForwardTag) {
            Reader in(*plain);
            Forward fwd;
            fwd.next = in.u64();
            auto inner = in.rest();
            SealedBlob::parse(inner);  // must be exactly one layer
            fwd.inner = {fwd.next, FrameClass::data, Bytes(inner.begin(), inner.end())};
            pad_to(fwd.inner.frame, pad_size);
            return fwd;
        }
        if (tag == static_cast<std::uint8_t>(PayloadKind::request)) {
            auto [payload, rblock] = decode_payload(*plain);
            return Deliver{std::move(payload), ResponseBlock::parse(rblock)};
        }
        if (tag == kResponseTag) {
            Reader in(*plain);
            in.u8();
            ResponseLayer layer;
            auto tail = in.take(in.u32());
            layer.tail.assign(tail.begin(), tail.end());
            auto part = in.take(in.u32());
            layer.part.assign(part.begin(), part.end());
            if (!in.done())
                return WrongKey{};
            return layer;
        }
        return WrongKey{};
    } catch (const Error&) {
        return WrongKey{};
    }
}

// ---------------------------------------------------------------------------

Bytes make_response_part(CipherSuite& cipher, ResponseMode mode, const KeyHandle& session_key,
                         const PlainPayload& payload)
{
    const auto encoded = encode_payload(payload, {});
    if (mode == ResponseMode::end_to_end)
        return cipher.seal(session_key, encoded).serialize();
    Bytes out;
    put_u64(out, session_key.key_id);
    put_bytes(out, encoded);
    return out;
}

Packet wrap_response(CipherSuite& cipher, ByteView part, const KeyHandle& hop_key, ByteView tail,
                     PeerId destination, std::size_t pad_size)
{
    Bytes plain;
    put_u8(plain, kResponseTag);
    put_u32(plain, static_cast<std::uint32_t>(tail.size()));
    put_bytes(plain, tail);
    put_u32(plain, static_cast<std::uint32_t>(part.size()));
    put_bytes(plain, part);
    if (cipher.layer_size(plain.size()) > pad_size)
        throw Error(Errc::payload_too_large, "response does not fit in pad size");
    Packet packet{destination, FrameClass::data, cipher.seal(hop_key, plain).serialize()};
    pad_to(packet.frame, pad_size);
    return packet;
}

void blind_part(Bytes& part, const BlindKey& blind)
{
    const auto seed = blind_seed(blind);
    std::uint64_t block = 0;
    for (std::size_t i = 0; i < part.size(); ++i) {
        if (i % 8 == 0)
            block = mix64(seed + i / 8);
        part[i] ^= static_cast<std::uint8_t>(block >> (8 * (i % 8)));
    }
}

std::optional<PlainPayload> open_response_part(const CipherSuite& cipher, ResponseMode mode,
                                               const KeyHandle& session_key, ByteView part)
{
    try {
        if (mode == ResponseMode::end_to_end) {
            const auto blob = SealedBlob::parse(part);
            if (blob.scheme != Scheme::symmetric || blob.required_key_id != session_key.key_id)
                return std::nullopt;
            auto plain = cipher.open(session_key, blob);
            if (!plain)
                return std::nullopt;
            return decode_payload(*plain).first;
        }
        Reader in(part);
        if (in.u64() != session_key.key_id)
            return std::nullopt;
        return decode_payload(in.rest()).first;
    } catch (const Error&) {
        return std::nullopt;
    }
}

// ---------------------------------------------------------------------------

std::size_t response_block_size(const CipherSuite& cipher, std::size_t response_hops)
{
    std::size_t tail = 0;
    for (std::size_t i = 0; i < response_hops; ++i)
        tail = cipher.layer_size(8 + sizeof(BlindKey) + tail);
    return 8 + tail;
}

std::size_t request_onion_size(const CipherSuite& cipher, std::size_t request_hops,
                               std::size_t response_hops, std::size_t message_len, bool with_key)
{
    const std::size_t inner = 2 + (with_key ? kSerializedKeySize : 0) + 4 + message_len + 4 +
                              response_block_size(cipher, response_hops);
    std::size_t layer = cipher.layer_size(inner);
    for (std::size_t i = 0; i < request_hops; ++i)
        layer = cipher.layer_size(8 + layer);
    return layer;
}

std::optional<std::size_t> max_request_message(const CipherSuite& cipher, std::size_t request_hops,
                                               std::size_t response_hops, std::size_t pad_size)
{
    return largest_fitting(pad_size, [&](std::size_t m) {
        return request_onion_size(cipher, request_hops, response_hops, m, true);
    });
}

std::optional<std::size_t> max_response_message(const CipherSuite& cipher, ResponseMode mode,
                                                std::size_t response_hops, std::size_t pad_size)
{
    const std::size_t tail = response_block_size(cipher, response_hops) - 8;
    return largest_fitting(pad_size, [&](std::size_t m) {
        const std::size_t encoded = 2 + 4 + m + 4;
        const std::size_t part =
            mode == ResponseMode::end_to_end ? cipher.layer_size(encoded) : 8 + encoded;
        return cipher.layer_size(1 + 4 + tail + 4 + part);
    });
}

std::vector<FrameField> inspect_frame(ByteView frame, std::size_t pad_size)
{
    if (frame.size() != pad_size)
        throw Error(Errc::malformed, "frame length differs from pad size");
    Reader in(frame);
    SealedBlob::read(in);
    const std::size_t body_len = frame.size() - kLayerHeaderSize - in.remaining();
    auto padding = in.rest();
    if (std::any_of(padding.begin(), padding.end(), [](auto b) { return b != 0; }))
        throw Error(Errc::malformed, "nonzero padding");
    return {
        {"scheme", 0, 1},
        {"key_id", 1, 8},
        {"body_length", 9, 4},
        {"body", kLayerHeaderSize, body_len},
        {"padding", kLayerHeaderSize + body_len, padding.size()},
    };
}

// ---------------------------------------------------------------------------

KeyTable::KeyTable(PeerId self, KeyHandle own_symmetric) : self_(self), own_(own_symmetric)
{
    if (own_.kind != KeyKind::symmetric)
        throw Error(Errc::invalid_key_use, "own table key must be symmetric");
}

const KeyHandle* KeyTable::find(PeerId peer) const
{
    auto it = entries_.find(peer);
    return it == entries_.end() ? nullptr : &it->second;
}

void KeyTable::record_piggybacked_key(PeerId sender, const KeyHandle& key)
{
    if (key.kind != KeyKind::symmetric)
        throw Error(Errc::invalid_key_use, "only symmetric keys are cached");
    if (sender == self_)
        throw Error(Errc::precondition, "key table never holds its own id");
    entries_[sender] = key;
}

std::vector<KeyHandle> KeyTable::openers() const
{
    std::vector<KeyHandle> keys{own_};
    for (const auto& [peer, key] : entries_)
        keys.push_back(key);
    return keys;
}

SchemeChoice select_scheme(const KeyTable& table, PeerId dest, const KeyHandle& dest_public)
{
    if (dest == table.self())
        throw Error(Errc::precondition, "select_scheme toward self");
    if (const KeyHandle* cached = table.find(dest))
        return SymmetricScheme{*cached};
    return AsymmetricScheme{dest_public, table.own_symmetric()};
}

DirectSend seal_direct(CipherSuite& cipher, KeyTable& table, PeerId dest,
                       const KeyHandle& dest_public, std::uint8_t type, ByteView body)
{
    const auto choice = select_scheme(table, dest, dest_public);
    const auto* asym = std::get_if<AsymmetricScheme>(&choice);

    Bytes plain;
    put_u8(plain, type);
    put_u8(plain, asym ? 1 : 0);
    if (asym)
        put_key(plain, asym->piggyback);
    put_u32(plain, static_cast<std::uint32_t>(body.size()));
    put_bytes(plain, body);

    const KeyHandle& key = asym ? asym->key : std::get<SymmetricScheme>(choice).key;
    DirectSend out;
    out.packet = {dest, FrameClass::control, cipher.seal(key, plain).serialize()};
    out.scheme = asym ? Scheme::asymmetric : Scheme::symmetric;
    if (asym)
        table.bind_disclosed(dest);
    return out;
}

std::optional<DirectMessage> open_direct(const CipherSuite& cipher, KeyTable& table,
                                         const KeyHandle& own_private, PeerId sender,
                                         ByteView frame)
{
    try {
        const auto blob = SealedBlob::parse(frame);
        std::vector<KeyHandle> keys = table.openers();
        keys.push_back(own_private);
        const KeyHandle* key = find_opener(keys, blob);
        if (key == nullptr)
            return std::nullopt;
        auto plain = cipher.open(*key, blob);
        if (!plain)
            return std::nullopt;

        Reader in(*plain);
        DirectMessage msg;
        msg.type = in.u8();
        const auto flag = in.u8();
        if (flag > 1)
            return std::nullopt;
        if (flag == 1)
            msg.piggyback_key = read_key(in, KeyKind::symmetric);
        auto body = in.take(in.u32());
        msg.body.assign(body.begin(), body.end());
        if (!in.done())
            return std::nullopt;
        if (msg.piggyback_key && sender != table.self())
            table.record_piggybacked_key(sender, *msg.piggyback_key);
        return msg;
    } catch (const Error&) {
        return std::nullopt;
    }
}

} // namespace dualpath
