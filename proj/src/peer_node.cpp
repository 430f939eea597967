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

#include "dualpath/peer_node.hpp"

#include <algorithm>

namespace dualpath {

DualPath select_dual_path(std::span<const PeerRecord> snapshot, PeerId self, PeerId provider,
                          std::size_t request_len, std::size_t response_len, Rng& rng)
{
    std::vector<PeerId> eligible;
    for (const auto& rec : snapshot)
        if (rec.peer != self && rec.peer != provider)
            eligible.push_back(rec.peer);
    std::sort(eligible.begin(), eligible.end());
    eligible.erase(std::unique(eligible.begin(), eligible.end()), eligible.end());

    const std::size_t need = request_len + response_len;
    if (eligible.size() < need)
        throw Error(Errc::not_enough_peers, "need " + std::to_string(need) + " relays, have " +
                                                std::to_string(eligible.size()));
    // Partial Fisher-Yates: the first `need` slots are a uniform ordered sample.
    for (std::size_t i = 0; i < need; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(eligible.size() - i));
        std::swap(eligible[i], eligible[j]);
    }
    DualPath path;
    path.request_hops.assign(eligible.begin(), eligible.begin() + request_len);
    path.response_hops.assign(eligible.begin() + request_len, eligible.begin() + need);
    return path;
}

bool rotation_due(const RotationPolicy& policy, const Session& session)
{
    if (policy.rotate_on_failure && session.previous_failed)
        return true;
    return policy.rotate_every != 0 && session.cycles_on_current_path >= policy.rotate_every;
}

Bytes default_responder(ByteView request)
{
    Bytes out(request.begin(), request.end());
    for (auto& b : out)
        b ^= 0xFF;
    return out;
}

const char* to_string(HopRole role) noexcept
{
    switch (role) {
    case HopRole::request_relay: return "request_relay";
    case HopRole::provider: return "provider";
    case HopRole::response_relay: return "response_relay";
    case HopRole::requester: return "requester";
    }
    return "unknown";
}

PeerNode::PeerNode(PeerId id, CipherSuite& cipher, Rng rng, PeerConfig config)
    : id_(id),
      cipher_(cipher),
      rng_(rng),
      config_(config),
      keys_(cipher.generate_keypair(id, rng_)),
      table_(id, cipher.generate_symmetric(id, rng_))
{
    if (id == kNoPeer || id > kMaxPeerId)
        throw Error(Errc::precondition, "peer id out of range");
}

std::vector<PeerRecord> PeerNode::snapshot() const
{
    std::vector<PeerRecord> out;
    out.reserve(view_.size());
    for (const auto& [id, rec] : view_)
        out.push_back(rec);
    return out;
}

void PeerNode::set_supernode(PeerId id, const KeyHandle& public_key)
{
    supernode_ = id;
    supernode_key_ = public_key;
}

Outgoing PeerNode::join_message()
{
    if (supernode_ == kNoPeer)
        throw Error(Errc::precondition, "no supernode configured");
    Bytes body;
    put_u64(body, id_);
    put_key(body, keys_.public_key);
    auto sent = seal_direct(cipher_, table_, supernode_, supernode_key_,
                            static_cast<std::uint8_t>(ControlType::join), body);
    return {std::move(sent.packet), sent.scheme};
}

Outgoing PeerNode::heartbeat_message()
{
    auto sent = seal_direct(cipher_, table_, supernode_, supernode_key_,
                            static_cast<std::uint8_t>(ControlType::heartbeat), {});
    return {std::move(sent.packet), sent.scheme};
}

Outgoing PeerNode::leave_message()
{
    auto sent = seal_direct(cipher_, table_, supernode_, supernode_key_,
                            static_cast<std::uint8_t>(ControlType::leave), {});
    joined_ = false;
    return {std::move(sent.packet), sent.scheme};
}

std::vector<Outgoing> PeerNode::handle_control(PeerId src, const Packet& packet)
{
    std::vector<Outgoing> out;
    if (src != supernode_)
        return out;
    auto msg = open_direct(cipher_, table_, keys_.private_key, src, packet.frame);
    if (!msg)
        return out;
    try {
        switch (static_cast<ControlType>(msg->type)) {
        case ControlType::join_ack:
            view_.clear();
            for (auto& rec : decode_records(msg->body))
                view_[rec.peer] = rec;
            joined_ = true;
            break;
        case ControlType::member_added: {
            Reader in(msg->body);
            auto rec = read_record(in);
            view_[rec.peer] = rec;
            break;
        }
        case ControlType::member_removed: {
            Reader in(msg->body);
            view_.erase(in.u64());
            break;
        }
        case ControlType::rejoin:
            joined_ = false;
            out.push_back(join_message());
            break;
        default:
            break;
        }
    } catch (const Error&) {
        // malformed body: dropped
    }
    return out;
}

const KeyHandle* PeerNode::lookup_public(PeerId peer) const
{
    auto it = view_.find(peer);
    return it == view_.end() ? nullptr : &it->second.public_key;
}

bool PeerNode::path_usable(const DualPath& path, PeerId provider) const
{
    auto live = [&](PeerId p) { return view_.count(p) != 0; };
    return live(provider) && std::all_of(path.request_hops.begin(), path.request_hops.end(), live) &&
           std::all_of(path.response_hops.begin(), path.response_hops.end(), live);
}

std::uint64_t PeerNode::fresh_cycle_id()
{
    for (;;) {
        const auto id = rng_.next();
        if (id != 0 && used_cycle_ids_.insert(id).second)
            return id;
    }
}

Packet PeerNode::build_cycle(Session& session)
{
    const KeyLookup lookup = [this](PeerId p) { return lookup_public(p); };
    auto built = build_response_block(cipher_, session.path.response_hops, id_, lookup, rng_);
    session.blinds = std::move(built.blinds);
    const PlainPayload payload{PayloadKind::request, session.message, session.session_key};
    return build_request_onion(cipher_, session.path.request_hops, session.provider, payload,
                               built.block, lookup, config_.pad_size);
}

CycleStart PeerNode::initiate_cycle(PeerId provider, Bytes message, Tick now)
{
    if (provider == id_)
        throw Error(Errc::precondition, "a peer cannot request from itself");
    if (!view_.count(provider))
        throw Error(Errc::unknown_peer, "provider " + std::to_string(provider) + " not in view");

    auto it = paths_.find(provider);
    bool fresh = it == paths_.end();
    if (!fresh) {
        Session probe;
        probe.cycles_on_current_path = it->second.cycles;
        probe.previous_failed = it->second.previous_failed;
        fresh = rotation_due(config_.rotation, probe) || !path_usable(it->second.path, provider);
    }
    if (fresh) {
        const auto snap = snapshot();
        PathState state;
        state.path = select_dual_path(snap, id_, provider, config_.request_len,
                                      config_.response_len, rng_);
        state.ttl_bound = static_cast<std::uint32_t>(
            std::max(config_.request_len, config_.response_len) + 1 + rng_.below(3));
        paths_[provider] = std::move(state);
        it = paths_.find(provider);
    }

    Session session;
    session.cycle_id = fresh_cycle_id();
    session.provider = provider;
    session.path = it->second.path;
    session.session_key = cipher_.generate_symmetric(kNoPeer, rng_);
    session.message = std::move(message);
    session.retries_left = config_.retries;
    session.deadline = now + config_.cycle_timeout;
    session.cycles_on_current_path = ++it->second.cycles;
    session.previous_failed = it->second.previous_failed;
    it->second.previous_failed = false;

    Packet packet = build_cycle(session);
    sessions_[session.cycle_id] = session;
    return {std::move(packet), std::move(session)};
}

TimeoutResult PeerNode::on_cycle_timeout(std::uint64_t cycle_id, Tick now)
{
    auto it = sessions_.find(cycle_id);
    if (it == sessions_.end() || it->second.state != SessionState::awaiting_response ||
        now < it->second.deadline)
        return NoTimeout{};

    Session old = std::move(it->second);
    sessions_.erase(it);
    if (auto p = paths_.find(old.provider); p != paths_.end())
        p->second.previous_failed = true;

    if (old.retries_left > 0 && view_.count(old.provider)) {
        try {
            auto start = initiate_cycle(old.provider, old.message, now);
            auto& fresh = sessions_[start.session.cycle_id];
            fresh.retries_left = old.retries_left - 1;
            start.session.retries_left = fresh.retries_left;
            return Retry{old.cycle_id, std::move(start.outgoing), std::move(start.session)};
        } catch (const Error&) {
            // no usable path: give up below
        }
    }
    old.state = SessionState::failed;
    return GiveUp{std::move(old)};
}

HandleResult PeerNode::handle_incoming(PeerId src, const Packet& packet, Tick now)
{
    HandleResult result;
    if (packet.frame_class != FrameClass::data) {
        result.actions.push_back(DropAction{});
        return result;
    }

    auto ring = table_.openers();
    ring.push_back(keys_.private_key);
    auto peeled = peel_layer(cipher_, packet, ring, config_.pad_size);

    if (std::holds_alternative<WrongKey>(peeled)) {
        result.actions.push_back(DropAction{});
        return result;
    }

    if (auto* fwd = std::get_if<Forward>(&peeled)) {
        result.observation = HopObservation{id_, HopRole::request_relay, src, fwd->next, false,
                                            {fwd->next}, {}};
        if (fwd->next == id_ || fwd->next == kNoPeer) {
            result.actions.push_back(DropAction{});
            return result;
        }
        result.actions.push_back(SendAction{std::move(fwd->inner)});
        return result;
    }

    if (auto* del = std::get_if<Deliver>(&peeled)) {
        const auto head = open_response_block(del->rblock);
        result.observation =
            HopObservation{id_, HopRole::provider, src, head.next, head.is_end(), {head.next}, {}};
        if (del->payload.piggyback_key)
            result.observation->session_tag = del->payload.piggyback_key->key_id;
        result.actions.push_back(DeliverRequest{del->payload.message, del->rblock});
        const KeyHandle* next_key = lookup_public(head.next);
        if (!del->payload.piggyback_key || next_key == nullptr || head.next == id_) {
            result.actions.push_back(DropAction{});
            return result;
        }
        try {
            const PlainPayload reply{PayloadKind::response, responder_(del->payload.message),
                                     std::nullopt};
            const auto part = make_response_part(cipher_, config_.response_mode,
                                                 *del->payload.piggyback_key, reply);
            result.actions.push_back(SendAction{
                wrap_response(cipher_, part, *next_key, head.tail, head.next, config_.pad_size)});
        } catch (const Error&) {
            result.actions.push_back(DropAction{});
        }
        return result;
    }

    return handle_response_layer(src, std::move(std::get<ResponseLayer>(peeled)), now);
}

HandleResult PeerNode::handle_response_layer(PeerId src, ResponseLayer layer, Tick)
{
    HandleResult result;

    if (layer.tail.empty()) {
        // We are the end of a response path: find the session this belongs to.
        result.observation = HopObservation{id_, HopRole::requester, src, kNoPeer, false, {}, {}};
        for (auto it = sessions_.begin(); it != sessions_.end(); ++it) {
            auto& session = it->second;
            if (session.state != SessionState::awaiting_response)
                continue;
            Bytes part = layer.part;
            if (config_.response_mode == ResponseMode::end_to_end)
                for (const auto& blind : session.blinds)
                    blind_part(part, blind);
            auto payload =
                open_response_part(cipher_, config_.response_mode, session.session_key, part);
            if (!payload || payload->kind != PayloadKind::response)
                continue;
            const auto cycle_id = session.cycle_id;
            sessions_.erase(it);
            result.actions.push_back(DeliverResponse{cycle_id, std::move(payload->message)});
            return result;
        }
        result.actions.push_back(DropAction{});
        return result;
    }

    const auto ring = [&] {
        auto keys = table_.openers();
        keys.push_back(keys_.private_key);
        return keys;
    }();
    auto hop = open_response_tail(cipher_, layer.tail, ring);
    if (!hop) {
        result.actions.push_back(DropAction{});
        return result;
    }
    result.observation = HopObservation{id_, HopRole::response_relay, src, hop->next,
                                        hop->is_end(), {hop->next}, {}};
    if (config_.response_mode == ResponseMode::per_hop && layer.part.size() >= 8) {
        Reader in(layer.part);
        result.observation->session_tag = in.u64();
    }
    const KeyHandle* next_key = lookup_public(hop->next);
    if (next_key == nullptr || hop->next == id_) {
        result.actions.push_back(DropAction{});
        return result;
    }
    Bytes part = std::move(layer.part);
    if (config_.response_mode == ResponseMode::end_to_end && hop->blind)
        blind_part(part, *hop->blind);
    try {
        result.actions.push_back(SendAction{
            wrap_response(cipher_, part, *next_key, hop->tail, hop->next, config_.pad_size)});
    } catch (const Error&) {
        result.actions.push_back(DropAction{});
    }
    return result;
}

} // namespace dualpath
