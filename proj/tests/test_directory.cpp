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

#include <doctest.h>

#include <set>

using namespace dualpath;

namespace {

KeyHandle key_for(PeerId p)
{
    KeyHandle k;
    k.kind = KeyKind::asymmetric_public;
    k.owner = p;
    k.key_id = 1000 + p;
    return k;
}

std::vector<PeerId> ids_of(const std::vector<PeerRecord>& records)
{
    std::vector<PeerId> ids;
    for (const auto& r : records)
        ids.push_back(r.peer);
    return ids;
}

Directory random_directory(Rng& rng, Tick timeout, PeerId universe)
{
    Directory dir(timeout);
    for (PeerId p = 1; p <= universe; ++p)
        if (rng.below(2) != 0)
            dir.handle_join(p, p, key_for(p), rng.below(20));
    return dir;
}

} // namespace

TEST_CASE("join")
{
    Directory dir(15);
    auto first = dir.handle_join(7, 70, key_for(7), 0);
    CHECK(ids_of(first.peer_list) == std::vector<PeerId>{7});
    CHECK(first.update.added == std::vector<PeerId>{7});
    CHECK(first.update.recipients.empty());
    CHECK(dir.version() == 1);

    Directory three(15);
    three.handle_join(3, 30, key_for(3), 0);
    three.handle_join(5, 50, key_for(5), 0);
    auto joined = three.handle_join(7, 70, key_for(7), 10);
    CHECK(ids_of(joined.peer_list) == std::vector<PeerId>{3, 5, 7});
    CHECK(joined.update.added == std::vector<PeerId>{7});
    CHECK(joined.update.recipients == std::vector<PeerId>{3, 5});
    CHECK(three.find(7)->last_heartbeat == 10);
    CHECK(three.find(7)->address == 70);

    Directory one(15);
    one.handle_join(3, 30, key_for(3), 0);
    const auto before = one.snapshot();
    const auto version = one.version();
    try {
        one.handle_join(3, 30, key_for(3), 4);
        FAIL("expected duplicate_join");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::duplicate_join);
    }
    CHECK(one.snapshot() == before);
    CHECK(one.version() == version);
}

TEST_CASE("leave")
{
    Directory dir(15);
    for (PeerId p : {3, 5, 7})
        dir.handle_join(p, p, key_for(p), 0);
    auto delta = dir.handle_leave(5);
    CHECK(ids_of(dir.snapshot()) == std::vector<PeerId>{3, 7});
    CHECK(delta.removed == std::vector<PeerId>{5});
    CHECK(delta.recipients == std::vector<PeerId>{3, 7});

    Directory one(15);
    one.handle_join(3, 3, key_for(3), 0);
    const auto version = one.version();
    CHECK(one.handle_leave(9).empty());
    CHECK(one.version() == version);
    one.handle_leave(3);
    CHECK(one.snapshot().empty());
    CHECK(one.version() == version + 1);
}

TEST_CASE("heartbeat")
{
    Directory dir(15);
    dir.handle_join(7, 7, key_for(7), 0);
    const auto version = dir.version();
    CHECK(dir.handle_heartbeat(7, 5) == HeartbeatResult::acknowledged);
    CHECK(dir.find(7)->last_heartbeat == 5);
    CHECK(dir.handle_heartbeat(7, 8) == HeartbeatResult::acknowledged);
    CHECK(dir.find(7)->last_heartbeat == 8);
    CHECK(dir.version() == version);
    CHECK(dir.handle_heartbeat(9, 5) == HeartbeatResult::unknown_peer);
}

TEST_CASE("eviction is strict")
{
    Directory dir(10);
    dir.handle_join(3, 3, key_for(3), 0);
    dir.handle_join(5, 5, key_for(5), 0);
    dir.handle_heartbeat(5, 8);
    auto early = dir.evict_expired(5);
    CHECK(early.evicted.empty());
    CHECK(early.update.empty());

    Directory boundary(10);
    boundary.handle_join(3, 3, key_for(3), 0);
    CHECK(boundary.evict_expired(10).evicted.empty());

    const auto version = dir.version();
    auto result = dir.evict_expired(11);
    CHECK(result.evicted == std::vector<PeerId>{3});
    CHECK(ids_of(dir.snapshot()) == std::vector<PeerId>{5});
    CHECK(result.update.recipients == std::vector<PeerId>{5});
    CHECK(dir.version() == version + 1);
}

TEST_CASE("snapshot is sorted and pure")
{
    Directory dir(15);
    for (PeerId p : {7, 3, 5})
        dir.handle_join(p, p, key_for(p), 0);
    CHECK(ids_of(dir.snapshot()) == std::vector<PeerId>{3, 5, 7});
    CHECK(dir.snapshot() == dir.snapshot());
    CHECK(Directory(15).snapshot().empty());
}

TEST_CASE("random operation sequences match a brute-force replay")
{
    Rng rng(101);
    for (int run = 0; run < 200; ++run) {
        const Tick timeout = 1 + rng.below(12);
        Directory dir(timeout);
        std::map<PeerId, Tick> model;  // peer -> last heartbeat
        std::uint64_t model_version = 0;
        Tick now = 0;
        for (int op = 0; op < 60; ++op) {
            now += rng.below(4);
            const PeerId p = 1 + rng.below(8);
            switch (rng.below(4)) {
            case 0: {
                const bool dup = model.count(p) != 0;
                bool threw = false;
                try {
                    dir.handle_join(p, p, key_for(p), now);
                } catch (const Error& e) {
                    threw = e.code() == Errc::duplicate_join;
                }
                CHECK(threw == dup);
                if (!dup) {
                    model[p] = now;
                    ++model_version;
                }
                break;
            }
            case 1:
                dir.handle_leave(p);
                if (model.erase(p) != 0)
                    ++model_version;
                break;
            case 2: {
                const auto r = dir.handle_heartbeat(p, now);
                CHECK((r == HeartbeatResult::unknown_peer) == (model.count(p) == 0));
                if (model.count(p))
                    model[p] = now;
                break;
            }
            default: {
                std::vector<PeerId> expected;
                for (auto it = model.begin(); it != model.end();) {
                    if (now - it->second > timeout) {
                        expected.push_back(it->first);
                        it = model.erase(it);
                    } else {
                        ++it;
                    }
                }
                if (!expected.empty())
                    ++model_version;
                CHECK(dir.evict_expired(now).evicted == expected);
                for (const auto& rec : dir.snapshot())
                    CHECK(now - rec.last_heartbeat <= timeout);
                break;
            }
            }
            std::vector<std::pair<PeerId, Tick>> got, want(model.begin(), model.end());
            for (const auto& rec : dir.snapshot())
                got.emplace_back(rec.peer, rec.last_heartbeat);
            REQUIRE(got == want);
            CHECK(dir.version() == model_version);
        }
    }
}

TEST_CASE("merge examples")
{
    Directory a(15), b(15);
    a.handle_join(3, 3, key_for(3), 4);
    b.handle_join(3, 3, key_for(3), 9);
    CHECK(merge_directories(a, b).find(3)->last_heartbeat == 9);
    CHECK(merge_directories(b, a).find(3)->last_heartbeat == 9);

    Directory c(15), d(15);
    c.handle_join(3, 3, key_for(3), 0);
    d.handle_join(5, 5, key_for(5), 0);
    CHECK(ids_of(merge_directories(c, d).snapshot()) == std::vector<PeerId>{3, 5});
}

TEST_CASE("merge is commutative, associative and idempotent")
{
    Rng rng(202);
    for (int i = 0; i < 500; ++i) {
        const auto a = random_directory(rng, 15, 10);
        const auto b = random_directory(rng, 15, 10);
        const auto c = random_directory(rng, 15, 10);
        CHECK(same_records(merge_directories(a, a), a));
        CHECK(same_records(merge_directories(a, b), merge_directories(b, a)));
        CHECK(same_records(merge_directories(merge_directories(a, b), c),
                           merge_directories(a, merge_directories(b, c))));

        // Oracle: union with the later heartbeat kept.
        std::map<PeerId, Tick> want;
        for (const auto* dir : {&a, &b})
            for (const auto& rec : dir->snapshot())
                want[rec.peer] = std::max(want[rec.peer], rec.last_heartbeat);
        std::map<PeerId, Tick> got;
        for (const auto& rec : merge_directories(a, b).snapshot())
            got[rec.peer] = rec.last_heartbeat;
        CHECK(got == want);
    }
}

TEST_CASE("two replicas with disjoint streams agree after one pairwise merge")
{
    Rng rng(303);
    for (int i = 0; i < 100; ++i) {
        Directory a(15), b(15);
        Tick now = 0;
        for (int op = 0; op < 40; ++op) {
            now += rng.below(3);
            const bool left = rng.below(2) == 0;
            Directory& dir = left ? a : b;
            const PeerId p = (left ? 0 : 100) + 1 + rng.below(20);
            if (rng.below(3) == 0)
                dir.handle_leave(p);
            else if (!dir.contains(p))
                dir.handle_join(p, p, key_for(p), now);
            else
                dir.handle_heartbeat(p, now);
        }
        const auto a2 = merge_directories(a, b);
        const auto b2 = merge_directories(b, a);
        CHECK(a2.snapshot() == b2.snapshot());
        CHECK(a2.size() == a.size() + b.size());
    }
}

TEST_CASE("directory_from_records keeps every record")
{
    Rng rng(404);
    const auto dir = random_directory(rng, 15, 12);
    const auto copy = directory_from_records(15, dir.snapshot());
    CHECK(copy.snapshot() == dir.snapshot());
}

TEST_CASE("control record codec round trip")
{
    std::vector<PeerRecord> records;
    for (PeerId p = 1; p <= 5; ++p)
        records.push_back({p, p * 11, key_for(p), p * 3});
    CHECK(decode_records(encode_records(records)) == records);
    CHECK(decode_records(encode_records({})).empty());
}
