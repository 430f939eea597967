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

#ifndef DUALPATH_PEER_NODE_HPP
#define DUALPATH_PEER_NODE_HPP

#include "dualpath/control.hpp"

#include <functional>
#include <map>
#include <set>
#include <variant>

namespace dualpath {

/// The requester's two hop sequences. Hops are pairwise distinct and never
/// the requester or the provider.
struct DualPath {
    std::vector<PeerId> request_hops;
    std::vector<PeerId> response_hops;

    bool operator==(const DualPath&) const = default;
};

/// Samples L_req + L_resp distinct peers uniformly without replacement from
/// the snapshot (self and provider excluded); the first L_req form the
/// request path. Throws Error(not_enough_peers).
DualPath select_dual_path(std::span<const PeerRecord> snapshot, PeerId self, PeerId provider,
                          std::size_t request_len, std::size_t response_len, Rng& rng);

enum class SessionState { awaiting_response, completed, failed };

struct Session {
    std::uint64_t cycle_id = 0;
    PeerId provider = kNoPeer;
    DualPath path;
    KeyHandle session_key;
    std::vector<BlindKey> blinds;
    Bytes message;
    SessionState state = SessionState::awaiting_response;
    std::uint32_t retries_left = 0;
    Tick deadline = 0;
    std::uint32_t cycles_on_current_path = 0;
    bool previous_failed = false;
};

struct RotationPolicy {
    std::uint32_t rotate_every = 1;
    bool rotate_on_failure = true;
};

bool rotation_due(const RotationPolicy& policy, const Session& session);

struct PeerConfig {
    std::size_t request_len = 3;
    std::size_t response_len = 3;
    RotationPolicy rotation;
    std::uint32_t retries = 3;
    Tick cycle_timeout = 32;
    std::size_t pad_size = kDefaultPadSize;
    ResponseMode response_mode = ResponseMode::end_to_end;
    Tick heartbeat_period = 5;
};

/// Provider application logic: request bytes in, response bytes out.
using Responder = std::function<Bytes(ByteView)>;

Bytes default_responder(ByteView request);

enum class HopRole : std::uint8_t { request_relay, provider, response_relay, requester };

const char* to_string(HopRole role) noexcept;

/// What one peer learned from handling one DATA frame: its link neighbours
/// and every PeerId it decrypted.
struct HopObservation {
    PeerId observer = kNoPeer;
    HopRole role = HopRole::request_relay;
    PeerId pred = kNoPeer;
    PeerId succ = kNoPeer;
    /// The successor was marked final (it is the requester).
    bool end = false;
    std::vector<PeerId> decrypted_ids;
    /// Session key id when the observer can read it: always at the provider,
    /// and at response relays in per_hop mode.
    std::optional<KeyId> session_tag;

    bool operator==(const HopObservation&) const = default;
};

struct SendAction {
    Packet packet;
};
struct DeliverRequest {
    Bytes message;
    ResponseBlock rblock;
};
struct DeliverResponse {
    std::uint64_t cycle_id = 0;
    Bytes message;
};
struct DropAction {};

using Action = std::variant<SendAction, DeliverRequest, DeliverResponse, DropAction>;

struct HandleResult {
    std::vector<Action> actions;
    std::optional<HopObservation> observation;
};

struct CycleStart {
    Packet outgoing;
    Session session;
};

struct Retry {
    std::uint64_t previous_cycle_id = 0;
    Packet packet;
    Session session;
};
struct GiveUp {
    Session session;
};
struct NoTimeout {};

using TimeoutResult = std::variant<NoTimeout, Retry, GiveUp>;

/// Per-peer protocol state machine: requester, relay and provider roles plus
/// the membership client. Handles one event at a time.
class PeerNode {
public:
    PeerNode(PeerId id, CipherSuite& cipher, Rng rng, PeerConfig config);

    PeerId id() const noexcept { return id_; }
    const KeyHandle& public_key() const noexcept { return keys_.public_key; }
    const KeyTable& table() const noexcept { return table_; }
    const std::map<PeerId, PeerRecord>& view() const noexcept { return view_; }
    std::vector<PeerRecord> snapshot() const;
    bool joined() const noexcept { return joined_; }
    const std::map<std::uint64_t, Session>& sessions() const noexcept { return sessions_; }

    void set_responder(Responder responder) { responder_ = std::move(responder); }
    void set_supernode(PeerId id, const KeyHandle& public_key);
    PeerId supernode() const noexcept { return supernode_; }

    // Membership client.
    Outgoing join_message();
    Outgoing heartbeat_message();
    Outgoing leave_message();
    /// Applies JOIN_ACK / MEMBER_* / REJOIN; may answer with a new JOIN.
    std::vector<Outgoing> handle_control(PeerId src, const Packet& packet);

    /// Starts a cycle toward `provider` over a reused or fresh dual path.
    /// Throws Error(not_enough_peers).
    CycleStart initiate_cycle(PeerId provider, Bytes message, Tick now);

    HandleResult handle_incoming(PeerId src, const Packet& packet, Tick now);

    TimeoutResult on_cycle_timeout(std::uint64_t cycle_id, Tick now);

    /// Path in use toward one provider. ttl_bound is private hop budget
    /// state; it is never serialized.
    struct PathState {
        DualPath path;
        std::uint32_t cycles = 0;
        bool previous_failed = false;
        std::uint32_t ttl_bound = 0;
    };

    const std::map<PeerId, PathState>& paths() const noexcept { return paths_; }

private:
    std::uint64_t fresh_cycle_id();
    Packet build_cycle(Session& session);
    const KeyHandle* lookup_public(PeerId peer) const;
    bool path_usable(const DualPath& path, PeerId provider) const;
    HandleResult handle_response_layer(PeerId src, ResponseLayer layer, Tick now);

    PeerId id_;
    CipherSuite& cipher_;
    Rng rng_;
    PeerConfig config_;
    KeyPair keys_;
    KeyTable table_;
    Responder responder_ = default_responder;

    PeerId supernode_ = kNoPeer;
    KeyHandle supernode_key_;
    bool joined_ = false;
    std::map<PeerId, PeerRecord> view_;

    std::map<std::uint64_t, Session> sessions_;
    std::map<PeerId, PathState> paths_;
    std::set<std::uint64_t> used_cycle_ids_;
};

} // namespace dualpath

#endif
