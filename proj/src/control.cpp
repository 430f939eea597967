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

#include "dualpath/control.hpp"

namespace dualpath {

const char* to_string(ControlType type) noexcept
{
    switch (type) {
    case ControlType::join: return "JOIN";
    case ControlType::join_ack: return "JOIN_ACK";
    case ControlType::leave: return "LEAVE";
    case ControlType::heartbeat: return "HEARTBEAT";
    case ControlType::member_added: return "MEMBER_ADDED";
    case ControlType::member_removed: return "MEMBER_REMOVED";
    case ControlType::sync: return "SYNC";
    case ControlType::rejoin: return "REJOIN";
    }
    return "UNKNOWN";
}

void put_record(Bytes& out, const PeerRecord& rec)
{
    put_u64(out, rec.peer);
    put_u64(out, rec.address);
    put_key(out, rec.public_key);
    put_u64(out, rec.last_heartbeat);
}

PeerRecord read_record(Reader& in)
{
    PeerRecord rec;
    rec.peer = in.u64();
    rec.address = in.u64();
    rec.public_key = read_key(in, KeyKind::asymmetric_public);
    rec.last_heartbeat = in.u64();
    return rec;
}

Bytes encode_records(const std::vector<PeerRecord>& records)
{
    Bytes out;
    put_u32(out, static_cast<std::uint32_t>(records.size()));
    for (const auto& rec : records)
        put_record(out, rec);
    return out;
}

std::vector<PeerRecord> decode_records(ByteView bytes)
{
    Reader in(bytes);
    const auto count = in.u32();
    std::vector<PeerRecord> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i)
        out.push_back(read_record(in));
    if (!in.done())
        throw Error(Errc::malformed, "trailing bytes after record list");
    return out;
}

} // namespace dualpath
