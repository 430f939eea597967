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

#ifndef DUALPATH_SUPERNODE_HPP
#define DUALPATH_SUPERNODE_HPP

#include "dualpath/control.hpp"

#include <map>
#include <set>

namespace dualpath {

/// Trusted directory server. Answers joins with the full peer list, pushes
/// membership deltas to the peers it serves and exchanges its registry with
/// replica supernodes.
class Supernode {
public:
    Supernode(PeerId id, CipherSuite& cipher, Rng rng, Tick heartbeat_timeout);

    PeerId id() const noexcept { return id_; }
    const KeyHandle& public_key() const noexcept { return keys_.public_key; }
    const Directory& directory() const noexcept { return directory_; }
    const KeyTable& table() const noexcept { return table_; }
    /// Peers that joined through this supernode.
    const std::set<PeerId>& members() const noexcept { return members_; }

    void add_replica(PeerId id, const KeyHandle& public_key);

    std::vector<Outgoing> on_control(PeerId src, const Packet& packet, Tick now);
    std::vector<Outgoing> evict(Tick now);
    std::vector<Outgoing> sync();

private:
    void send(std::vector<Outgoing>& out, PeerId dest, ControlType type, ByteView body);
    void push(std::vector<Outgoing>& out, const std::vector<PeerId>& recipients, ControlType type,
              ByteView body, PeerId subject);

    PeerId id_;
    CipherSuite& cipher_;
    Rng rng_;
    KeyPair keys_;
    KeyTable table_;
    Directory directory_;
    std::set<PeerId> members_;
    std::map<PeerId, KeyHandle> replicas_;
};

/// Builds a registry from a received record list.
Directory directory_from_records(Tick heartbeat_timeout, const std::vector<PeerRecord>& records);

} // namespace dualpath

#endif
