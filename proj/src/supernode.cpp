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

#include "dualpath/supernode.hpp"

#include <algorithm>

namespace dualpath {

Directory directory_from_records(Tick heartbeat_timeout, const std::vector<PeerRecord>& records)
{
    Directory dir(heartbeat_timeout);
    for (const auto& rec : records)
        dir.handle_join(rec.peer, rec.address, rec.public_key, rec.last_heartbeat);
    return dir;
}

Supernode::Supernode(PeerId id, CipherSuite& cipher, Rng rng, Tick heartbeat_timeout)
    : id_(id),
      cipher_(cipher),
      rng_(rng),
      keys_(cipher.generate_keypair(id, rng_)),
      table_(id, cipher.generate_symmetric(id, rng_)),
      directory_(heartbeat_timeout)
{
}

void Supernode::add_replica(PeerId id, const KeyHandle& public_key) { replicas_[id] = public_key; }

void Supernode::send(std::vector<Outgoing>& out, PeerId dest, ControlType type, ByteView body)
{
    const KeyHandle* dest_public = nullptr;
    if (auto it = replicas_.find(dest); it != replicas_.end())
        dest_public = &it->second;
    else if (const PeerRecord* rec = directory_.find(dest))
        dest_public = &rec->public_key;

    // Without a cached key or a known public key there is no way to reach it.
    if (dest_public == nullptr && table_.find(dest) == nullptr)
        return;
    const KeyHandle none{};
    auto sent = seal_direct(cipher_, table_, dest, dest_public ? *dest_public : none,
                            static_cast<std::uint8_t>(type), body);
    out.push_back({std::move(sent.packet), sent.scheme});
}

void Supernode::push(std::vector<Outgoing>& out, const std::vector<PeerId>& recipients,
                     ControlType type, ByteView body, PeerId subject)
{
    for (auto peer : recipients)
        if (peer != subject && members_.count(peer))
            send(out, peer, type, body);
}

std::vector<Outgoing> Supernode::on_control(PeerId src, const Packet& packet, Tick now)
{
    std::vector<Outgoing> out;
    auto msg = open_direct(cipher_, table_, keys_.private_key, src, packet.frame);
    if (!msg)
        return out;

    try {
        switch (static_cast<ControlType>(msg->type)) {
        case ControlType::join: {
            Reader in(msg->body);
            const auto address = in.u64();
            const auto key = read_key(in, KeyKind::asymmetric_public);
            if (directory_.contains(src))
                return out;  // duplicate join of a live peer is rejected
            auto joined = directory_.handle_join(src, address, key, now);
            members_.insert(src);
            send(out, src, ControlType::join_ack, encode_records(joined.peer_list));
            Bytes rec;
            put_record(rec, *directory_.find(src));
            push(out, joined.update.recipients, ControlType::member_added, rec, src);
            break;
        }
        case ControlType::leave: {
            auto delta = directory_.handle_leave(src);
            members_.erase(src);
            Bytes body;
            put_u64(body, src);
            push(out, delta.recipients, ControlType::member_removed, body, src);
            break;
        }
        case ControlType::heartbeat:
            if (directory_.handle_heartbeat(src, now) == HeartbeatResult::unknown_peer)
                send(out, src, ControlType::rejoin, {});
            break;
        case ControlType::sync: {
            if (!replicas_.count(src))
                break;
            const auto remote =
                directory_from_records(directory_.heartbeat_timeout(), decode_records(msg->body));
            auto merged = merge_directories(directory_, remote);
            std::vector<PeerId> added;
            for (const auto& [id, rec] : merged.records())
                if (!directory_.contains(id))
                    added.push_back(id);
            directory_ = std::move(merged);
            const auto everyone = [&] {
                std::vector<PeerId> ids;
                for (const auto& [id, rec] : directory_.records())
                    ids.push_back(id);
                return ids;
            }();
            for (auto id : added) {
                Bytes rec;
                put_record(rec, *directory_.find(id));
                push(out, everyone, ControlType::member_added, rec, id);
            }
            break;
        }
        default:
            break;
        }
    } catch (const Error&) {
        // malformed body: dropped
    }
    return out;
}

std::vector<Outgoing> Supernode::evict(Tick now)
{
    std::vector<Outgoing> out;
    auto result = directory_.evict_expired(now);
    for (auto id : result.evicted)
        members_.erase(id);
    for (auto id : result.evicted) {
        Bytes body;
        put_u64(body, id);
        push(out, result.update.recipients, ControlType::member_removed, body, id);
    }
    return out;
}

std::vector<Outgoing> Supernode::sync()
{
    std::vector<Outgoing> out;
    const auto body = encode_records(directory_.snapshot());
    for (const auto& [id, key] : replicas_)
        send(out, id, ControlType::sync, body);
    return out;
}

} // namespace dualpath
