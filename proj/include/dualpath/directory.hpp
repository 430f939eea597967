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

#ifndef DUALPATH_DIRECTORY_HPP
#define DUALPATH_DIRECTORY_HPP

#include "dualpath/cipher.hpp"

#include <map>
#include <vector>

namespace dualpath {

struct PeerRecord {
    PeerId peer = kNoPeer;
    std::uint64_t address = 0;
    KeyHandle public_key;
    Tick last_heartbeat = 0;

    bool operator==(const PeerRecord&) const = default;
};

/// Membership change to push. `recipients` are the members that should hear
/// about it; the supernode narrows this to the peers it serves.
struct MembershipDelta {
    std::vector<PeerId> added;
    std::vector<PeerId> removed;
    std::vector<PeerId> recipients;

    bool empty() const noexcept { return added.empty() && removed.empty(); }
};

enum class HeartbeatResult { acknowledged, unknown_peer };

/// Live-peer registry kept by a supernode. Not safe for concurrent mutation.
class Directory {
public:
    explicit Directory(Tick heartbeat_timeout) : timeout_(heartbeat_timeout) {}

    struct JoinResult {
        std::vector<PeerRecord> peer_list;
        MembershipDelta update;
    };

    struct EvictResult {
        std::vector<PeerId> evicted;
        MembershipDelta update;
    };

    /// Throws Error(duplicate_join) if the peer is already registered.
    JoinResult handle_join(PeerId peer, std::uint64_t address, const KeyHandle& public_key, Tick now);

    MembershipDelta handle_leave(PeerId peer);

    /// Liveness refresh; does not bump the version.
    HeartbeatResult handle_heartbeat(PeerId peer, Tick now);

    /// Removes every record silent for strictly longer than the timeout.
    EvictResult evict_expired(Tick now);

    /// PeerId-ascending.
    std::vector<PeerRecord> snapshot() const;

    const PeerRecord* find(PeerId peer) const;
    bool contains(PeerId peer) const { return records_.count(peer) != 0; }
    std::size_t size() const noexcept { return records_.size(); }
    Tick heartbeat_timeout() const noexcept { return timeout_; }
    std::uint64_t version() const noexcept { return version_; }
    const std::map<PeerId, PeerRecord>& records() const noexcept { return records_; }

    friend Directory merge_directories(const Directory& local, const Directory& remote);

private:
    std::map<PeerId, PeerRecord> records_;
    Tick timeout_;
    std::uint64_t version_ = 0;
};

/// Union of both record sets; for a peer in both, the later heartbeat wins
/// (ties broken on the full record so the merge stays commutative).
Directory merge_directories(const Directory& local, const Directory& remote);

bool same_records(const Directory& a, const Directory& b);

} // namespace dualpath

#endif
