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

#include "dualpath/directory.hpp"

#include <tuple>

namespace dualpath {

namespace {

std::vector<PeerId> ids_except(const std::map<PeerId, PeerRecord>& records, PeerId skip)
{
    std::vector<PeerId> out;
    out.reserve(records.size());
    for (const auto& [id, rec] : records)
        if (id != skip)
            out.push_back(id);
    return out;
}

// Total order used to break last_heartbeat ties during a merge.
bool later(const PeerRecord& a, const PeerRecord& b)
{
    return std::tie(a.last_heartbeat, a.address, a.public_key.key_id, a.public_key.material) >
           std::tie(b.last_heartbeat, b.address, b.public_key.key_id, b.public_key.material);
}

} // namespace

Directory::JoinResult Directory::handle_join(PeerId peer, std::uint64_t address,
                                             const KeyHandle& public_key, Tick now)
{
    if (records_.count(peer))
        throw Error(Errc::duplicate_join, "peer " + std::to_string(peer) + " is already registered");

    JoinResult result;
    result.update.recipients = ids_except(records_, peer);
    records_.emplace(peer, PeerRecord{peer, address, public_key, now});
    ++version_;
    result.update.added.push_back(peer);
    result.peer_list = snapshot();
    return result;
}

MembershipDelta Directory::handle_leave(PeerId peer)
{
    MembershipDelta delta;
    if (records_.erase(peer) == 0)
        return delta;
    ++version_;
    delta.removed.push_back(peer);
    delta.recipients = ids_except(records_, kNoPeer);
    return delta;
}

HeartbeatResult Directory::handle_heartbeat(PeerId peer, Tick now)
{
    auto it = records_.find(peer);
    if (it == records_.end())
        return HeartbeatResult::unknown_peer;
    if (now < it->second.last_heartbeat)
        throw Error(Errc::precondition, "heartbeat time went backwards");
    it->second.last_heartbeat = now;
    return HeartbeatResult::acknowledged;
}

Directory::EvictResult Directory::evict_expired(Tick now)
{
    EvictResult result;
    for (auto it = records_.begin(); it != records_.end();) {
        const auto& rec = it->second;
        if (now > rec.last_heartbeat && now - rec.last_heartbeat > timeout_) {
            result.evicted.push_back(it->first);
            it = records_.erase(it);
        } else {
            ++it;
        }
    }
    if (!result.evicted.empty()) {
        ++version_;
        result.update.removed = result.evicted;
        result.update.recipients = ids_except(records_, kNoPeer);
    }
    return result;
}

std::vector<PeerRecord> Directory::snapshot() const
{
    std::vector<PeerRecord> out;
    out.reserve(records_.size());
    for (const auto& [id, rec] : records_)
        out.push_back(rec);
    return out;
}

const PeerRecord* Directory::find(PeerId peer) const
{
    auto it = records_.find(peer);
    return it == records_.end() ? nullptr : &it->second;
}

Directory merge_directories(const Directory& local, const Directory& remote)
{
    if (local.heartbeat_timeout() != remote.heartbeat_timeout())
        throw Error(Errc::precondition, "cannot merge directories with different timeouts");

    Directory merged = local;
    bool changed = false;
    for (const auto& [id, rec] : remote.records_) {
        auto it = merged.records_.find(id);
        if (it == merged.records_.end()) {
            merged.records_.emplace(id, rec);
            changed = true;
        } else if (later(rec, it->second)) {
            it->second = rec;
            changed = true;
        }
    }
    if (changed)
        ++merged.version_;
    return merged;
}

bool same_records(const Directory& a, const Directory& b) { return a.records() == b.records(); }

} // namespace dualpath
