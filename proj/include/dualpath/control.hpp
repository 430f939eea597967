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

#ifndef DUALPATH_CONTROL_HPP
#define DUALPATH_CONTROL_HPP

#include "dualpath/directory.hpp"
#include "dualpath/envelope.hpp"

#include <optional>

namespace dualpath {

// Membership messages. They travel as CONTROL frames sealed with
// seal_direct(), so the key table governs their scheme.
enum class ControlType : std::uint8_t {
    join = 0x10,            // [address 8][public key 40]
    join_ack = 0x11,        // record list
    leave = 0x12,           // empty
    heartbeat = 0x13,       // empty
    member_added = 0x14,    // one record
    member_removed = 0x15,  // [peer 8]
    sync = 0x16,            // record list (replica state)
    rejoin = 0x17,          // empty; heartbeat from an unregistered peer
};

const char* to_string(ControlType type) noexcept;

void put_record(Bytes& out, const PeerRecord& rec);
PeerRecord read_record(Reader& in);

Bytes encode_records(const std::vector<PeerRecord>& records);
std::vector<PeerRecord> decode_records(ByteView bytes);

/// A frame leaving a node. direct_scheme is set for control frames so the
/// simulator can account seals per ordered pair.
struct Outgoing {
    Packet packet;
    std::optional<Scheme> direct_scheme;
};

} // namespace dualpath

#endif
