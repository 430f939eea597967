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

#include "support.hpp"

#include <cstring>

#include <doctest.h>

using namespace dualpath;
using dualpath::test::KeyedPeers;
using dualpath::test::random_bytes;

namespace {

Bytes text(const char* s) { return Bytes(s, s + std::strlen(s)); }

// Peels an onion hop by hop, returning the sequence of next hops and the
// final delivery.
struct PeelTrace {
    std::vector<PeerId> forwards;
    std::optional<Deliver> deliver;
};

PeelTrace peel_all(const KeyedPeers& peers, Packet packet, std::size_t pad)
{
    PeelTrace trace;
    for (int guard = 0; guard < 16; ++guard) {
        const auto ring = peers.ring(packet.destination);
        auto result = peel_layer(peers.cipher, packet, ring, pad);
        if (auto* fwd = std::get_if<Forward>(&result)) {
            REQUIRE(fwd->inner.frame.size() == pad);
            REQUIRE(fwd->inner.destination == fwd->next);
            trace.forwards.push_back(fwd->next);
            packet = fwd->inner;
            continue;
        }
        if (auto* del = std::get_if<Deliver>(&result))
            trace.deliver = *del;
        return trace;
    }
    FAIL("onion did not terminate");
    return trace;
}

} // namespace

TEST_CASE("seal and open round trip")
{
    TestCipher cipher;
    Rng rng(1);
    const auto k7 = cipher.generate_keypair(7, rng);
    const auto k9 = cipher.generate_keypair(9, rng);
    const auto s = cipher.generate_symmetric(3, rng);

    const auto blob = cipher.seal(k7.public_key, text("m"));
    CHECK(cipher.open(k7.private_key, blob) == text("m"));
    CHECK_FALSE(cipher.open(k9.private_key, blob));

    const auto sym = cipher.seal(s, text("m"));
    CHECK(cipher.open(s, sym) == text("m"));
    CHECK_FALSE(cipher.open(k7.private_key, sym));

    CHECK_THROWS_AS(cipher.seal(k7.private_key, text("m")), Error);
    try {
        cipher.seal(k7.private_key, text("m"));
    } catch (const Error& e) {
        CHECK(e.code() == Errc::invalid_key_use);
    }
}

TEST_CASE("sealed body length depends only on plaintext length")
{
    TestCipher cipher;
    Rng rng(2);
    const auto a = cipher.generate_symmetric(1, rng);
    const auto b = cipher.generate_keypair(2, rng);
    for (std::size_t n = 0; n < 100; ++n) {
        const auto msg = random_bytes(rng, n);
        CHECK(cipher.seal(a, msg).body.size() == cipher.body_size(n));
        CHECK(cipher.seal(b.public_key, msg).body.size() == cipher.body_size(n));
    }
}

TEST_CASE("wrong-key opens fail across a random cross product")
{
    TestCipher cipher;
    Rng rng(3);
    std::vector<KeyHandle> sealers, openers;
    for (PeerId p = 1; p <= 6; ++p) {
        const auto kp = cipher.generate_keypair(p, rng);
        sealers.push_back(kp.public_key);
        openers.push_back(kp.private_key);
        const auto s = cipher.generate_symmetric(p, rng);
        sealers.push_back(s);
        openers.push_back(s);
    }
    for (std::size_t i = 0; i < sealers.size(); ++i) {
        const auto msg = random_bytes(rng, 1 + rng.below(200));
        const auto blob = cipher.seal(sealers[i], msg);
        for (std::size_t j = 0; j < openers.size(); ++j) {
            const auto opened = cipher.open(openers[j], blob);
            if (i == j)
                CHECK(opened == msg);
            else
                CHECK_FALSE(opened);
        }
    }
}

TEST_CASE("any flipped byte makes open fail")
{
    TestCipher cipher;
    Rng rng(4);
    const auto kp = cipher.generate_keypair(1, rng);
    const auto s = cipher.generate_symmetric(1, rng);
    for (const auto* key : {&kp.public_key, &s}) {
        const auto& opener = key == &s ? s : kp.private_key;
        const auto blob = cipher.seal(*key, random_bytes(rng, 50));
        for (std::size_t i = 0; i < blob.body.size(); ++i) {
            auto bad = blob;
            bad.body[i] ^= static_cast<std::uint8_t>(1 + rng.below(255));
            CHECK_FALSE(cipher.open(opener, bad));
        }
        auto bad_id = blob;
        bad_id.required_key_id ^= 1;
        CHECK_FALSE(cipher.open(opener, bad_id));
    }
}

TEST_CASE("serialized layer layout")
{
    TestCipher cipher;
    Rng rng(5);
    const auto s = cipher.generate_symmetric(1, rng);
    const auto blob = cipher.seal(s, text("hello"));
    const auto bytes = blob.serialize();
    REQUIRE(bytes.size() == kLayerHeaderSize + blob.body.size());
    CHECK(bytes[0] == static_cast<std::uint8_t>(Scheme::symmetric));
    Reader in(bytes);
    in.u8();
    CHECK(in.u64() == s.key_id);
    CHECK(in.u32() == blob.body.size());
    CHECK(SealedBlob::parse(bytes) == blob);
}

TEST_CASE("request onion over the three-hop example path")
{
    KeyedPeers peers(10);
    const std::vector<PeerId> path{3, 4, 5};  // P1, P2, P3
    const PeerId provider = 8, requester = 1;
    const std::vector<PeerId> response{6, 7, 9};
    auto built = build_response_block(peers.cipher, response, requester, peers.lookup(), peers.rng);
    const PlainPayload payload{PayloadKind::request, text("M"), std::nullopt};
    const auto onion =
        build_request_onion(peers.cipher, path, provider, payload, built.block, peers.lookup(), 2048);

    CHECK(onion.destination == 3);
    CHECK(onion.frame.size() == 2048);
    const auto trace = peel_all(peers, onion, 2048);
    CHECK(trace.forwards == std::vector<PeerId>{4, 5, 8});
    REQUIRE(trace.deliver);
    CHECK(trace.deliver->payload == payload);
    CHECK(trace.deliver->rblock == built.block);
}

TEST_CASE("empty request path delivers straight to the provider")
{
    KeyedPeers peers(4);
    auto built = build_response_block(peers.cipher, std::vector<PeerId>{2}, 1, peers.lookup(), peers.rng);
    const PlainPayload payload{PayloadKind::request, text("direct"), std::nullopt};
    const auto onion = build_request_onion(peers.cipher, {}, 3, payload, built.block, peers.lookup(), 512);
    CHECK(onion.destination == 3);
    const auto trace = peel_all(peers, onion, 512);
    CHECK(trace.forwards.empty());
    REQUIRE(trace.deliver);
    CHECK(trace.deliver->payload == payload);
}

TEST_CASE("onion round trip over random paths")
{
    KeyedPeers peers(14, 11);
    Rng rng(12);
    const std::size_t pad = 2048;
    int mismatches = 0;
    for (int iter = 0; iter < 300; ++iter) {
        const std::size_t req_len = rng.below(6);
        const std::size_t resp_len = 1 + rng.below(5);
        const auto ids = dualpath::test::distinct_ids(rng, 14, req_len + resp_len + 2, {});
        const PeerId requester = ids[0], provider = ids[1];
        const std::vector<PeerId> req(ids.begin() + 2, ids.begin() + 2 + static_cast<long>(req_len));
        const std::vector<PeerId> resp(ids.begin() + 2 + static_cast<long>(req_len), ids.end());

        auto built = build_response_block(peers.cipher, resp, requester, peers.lookup(), rng);
        const auto max = max_request_message(peers.cipher, req_len, resp_len, pad);
        REQUIRE(max);
        PlainPayload payload{PayloadKind::request, random_bytes(rng, rng.below(*max + 1)), std::nullopt};
        if (rng.below(2) != 0)
            payload.piggyback_key = peers.cipher.generate_symmetric(kNoPeer, rng);
        const auto onion =
            build_request_onion(peers.cipher, req, provider, payload, built.block, peers.lookup(), pad);
        REQUIRE(onion.frame.size() == pad);

        std::vector<PeerId> expected(req.begin() + (req.empty() ? 0 : 1), req.end());
        expected.push_back(provider);
        if (req.empty())
            expected.clear();
        const auto trace = peel_all(peers, onion, pad);
        const bool ok = trace.forwards == expected && trace.deliver &&
                        trace.deliver->payload == payload && trace.deliver->rblock == built.block;
        mismatches += ok ? 0 : 1;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("payload larger than the pad is rejected")
{
    KeyedPeers peers(10);
    const std::vector<PeerId> req{2, 3, 4}, resp{5, 6, 7};
    auto built = build_response_block(peers.cipher, resp, 1, peers.lookup(), peers.rng);
    const auto max = max_request_message(peers.cipher, 3, 3, 2048);
    REQUIRE(max);
    const auto session = peers.cipher.generate_symmetric(kNoPeer, peers.rng);
    PlainPayload fits{PayloadKind::request, Bytes(*max, 0xAB), session};
    CHECK_NOTHROW(build_request_onion(peers.cipher, req, 8, fits, built.block, peers.lookup(), 2048));
    PlainPayload too_big{PayloadKind::request, Bytes(*max + 1, 0xAB), session};
    try {
        build_request_onion(peers.cipher, req, 8, too_big, built.block, peers.lookup(), 2048);
        FAIL("expected payload_too_large");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::payload_too_large);
    }
}

TEST_CASE("onion preconditions")
{
    KeyedPeers peers(6);
    auto built = build_response_block(peers.cipher, std::vector<PeerId>{5}, 1, peers.lookup(), peers.rng);
    const PlainPayload payload{PayloadKind::request, text("x"), std::nullopt};
    auto code_of = [&](std::vector<PeerId> path, PeerId provider) {
        try {
            build_request_onion(peers.cipher, path, provider, payload, built.block, peers.lookup(), 2048);
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::run_failure;
    };
    CHECK(code_of({2, 2}, 3) == Errc::precondition);
    CHECK(code_of({2, 3}, 3) == Errc::precondition);
    CHECK(code_of({2, 42}, 3) == Errc::unknown_key);
}

TEST_CASE("each peeled request layer reveals exactly one peer id")
{
    KeyedPeers peers(12, 21);
    Rng rng(22);
    for (int iter = 0; iter < 100; ++iter) {
        const std::size_t req_len = 1 + rng.below(5);
        const auto ids = dualpath::test::distinct_ids(rng, 12, req_len + 5, {});
        const PeerId requester = ids[0], provider = ids[1];
        const std::vector<PeerId> req(ids.begin() + 2, ids.begin() + 2 + static_cast<long>(req_len));
        const std::vector<PeerId> resp(ids.begin() + 2 + static_cast<long>(req_len), ids.end());
        auto built = build_response_block(peers.cipher, resp, requester, peers.lookup(), rng);
        const PlainPayload payload{PayloadKind::request, random_bytes(rng, 40), std::nullopt};
        Packet packet =
            build_request_onion(peers.cipher, req, provider, payload, built.block, peers.lookup(), 2048);

        for (std::size_t hop = 0; hop < req.size(); ++hop) {
            Reader in(packet.frame);
            const auto layer = SealedBlob::read(in);
            const auto plain = peers.cipher.open(peers.keys.at(req[hop]).private_key, layer);
            REQUIRE(plain);
            // [next 8][inner layer] and nothing else.
            Reader body(*plain);
            const PeerId next = body.u64();
            const PeerId want = hop + 1 < req.size() ? req[hop + 1] : provider;
            CHECK(next == want);
            const auto inner = SealedBlob::read(body);
            CHECK(body.done());
            CHECK(plain->size() == 8 + inner.serialized_size());
            CHECK(next != requester);

            const auto peeled = peel_layer(peers.cipher, packet, peers.ring(req[hop]), 2048);
            packet = std::get<Forward>(peeled).inner;
        }
    }
}

TEST_CASE("a packet opened by the wrong peer is dropped")
{
    KeyedPeers peers(10);
    auto built = build_response_block(peers.cipher, std::vector<PeerId>{6, 7, 9}, 1, peers.lookup(), peers.rng);
    const PlainPayload payload{PayloadKind::request, text("M"), std::nullopt};
    const auto onion = build_request_onion(peers.cipher, std::vector<PeerId>{3, 4, 5}, 8, payload,
                                           built.block, peers.lookup(), 2048);
    for (PeerId p = 1; p <= 10; ++p) {
        const auto result = peel_layer(peers.cipher, onion, peers.ring(p), 2048);
        CHECK(std::holds_alternative<WrongKey>(result) == (p != 3));
    }
    auto corrupt = onion;
    corrupt.frame[kLayerHeaderSize + 5] ^= 0x40;
    CHECK(std::holds_alternative<WrongKey>(peel_layer(peers.cipher, corrupt, peers.ring(3), 2048)));
}

TEST_CASE("response block opens in path order")
{
    KeyedPeers peers(12, 31);
    Rng rng(32);
    SUBCASE("three hops")
    {
        const std::vector<PeerId> path{4, 5, 6};
        auto built = build_response_block(peers.cipher, path, 1, peers.lookup(), rng);
        CHECK(built.blinds.size() == 3);
        auto hop = open_response_block(built.block);
        CHECK(hop.next == 4);
        std::vector<PeerId> seen{hop.next};
        while (!hop.is_end()) {
            auto next = open_response_tail(peers.cipher, hop.tail, peers.ring(hop.next));
            REQUIRE(next);
            hop = *next;
            seen.push_back(hop.next);
        }
        CHECK(seen == std::vector<PeerId>{4, 5, 6, 1});
    }
    SUBCASE("single hop")
    {
        auto built = build_response_block(peers.cipher, std::vector<PeerId>{4}, 1, peers.lookup(), rng);
        auto hop = open_response_block(built.block);
        CHECK(hop.next == 4);
        auto last = open_response_tail(peers.cipher, hop.tail, peers.ring(4));
        REQUIRE(last);
        CHECK(last->next == 1);
        CHECK(last->is_end());
    }
    SUBCASE("random paths")
    {
        for (int iter = 0; iter < 200; ++iter) {
            const std::size_t len = 1 + rng.below(5);
            const auto ids = dualpath::test::distinct_ids(rng, 12, len + 1, {});
            const std::vector<PeerId> path(ids.begin() + 1, ids.end());
            auto built = build_response_block(peers.cipher, path, ids[0], peers.lookup(), rng);
            auto hop = open_response_block(built.block);
            std::vector<PeerId> seen{hop.next};
            PeerId holder = hop.next;
            while (!hop.is_end()) {
                // Nobody but the intended hop can open the layer.
                for (PeerId other = 1; other <= 12; ++other)
                    if (other != holder)
                        CHECK_FALSE(open_response_tail(peers.cipher, hop.tail, peers.ring(other)));
                auto next = open_response_tail(peers.cipher, hop.tail, peers.ring(holder));
                REQUIRE(next);
                hop = *next;
                holder = hop.next;
                seen.push_back(hop.next);
            }
            auto expected = path;
            expected.push_back(ids[0]);
            CHECK(seen == expected);
        }
    }
    SUBCASE("tampered tail")
    {
        auto built = build_response_block(peers.cipher, std::vector<PeerId>{4, 5}, 1, peers.lookup(), rng);
        auto hop = open_response_block(built.block);
        for (std::size_t i = 0; i < hop.tail.size(); i += 7) {
            auto bad = hop.tail;
            bad[i] ^= 0x01;
            CHECK_FALSE(open_response_tail(peers.cipher, bad, peers.ring(4)));
        }
    }
    SUBCASE("preconditions")
    {
        auto code_of = [&](std::vector<PeerId> path, PeerId requester) {
            try {
                build_response_block(peers.cipher, path, requester, peers.lookup(), rng);
            } catch (const Error& e) {
                return e.code();
            }
            return Errc::run_failure;
        };
        CHECK(code_of({}, 1) == Errc::precondition);
        CHECK(code_of({2, 2}, 1) == Errc::precondition);
        CHECK(code_of({2, 1}, 1) == Errc::precondition);
        CHECK(code_of({2, 99}, 1) == Errc::unknown_key);
    }
}

TEST_CASE("response travels the path with constant frame size")
{
    for (auto mode : {ResponseMode::end_to_end, ResponseMode::per_hop}) {
        CAPTURE(static_cast<int>(mode));
        KeyedPeers peers(10, 41);
        Rng rng(42);
        const PeerId requester = 1;
        const std::vector<PeerId> path{4, 5, 6};
        auto built = build_response_block(peers.cipher, path, requester, peers.lookup(), rng);
        const auto session = peers.cipher.generate_symmetric(kNoPeer, rng);
        const PlainPayload reply{PayloadKind::response, text("R"), std::nullopt};

        auto head = open_response_block(built.block);
        const auto part = make_response_part(peers.cipher, mode, session, reply);
        Packet frame = wrap_response(peers.cipher, part, peers.keys.at(head.next).public_key, head.tail,
                                     head.next, 2048);
        std::vector<Bytes> parts_seen;
        for (int hop = 0; hop < 3; ++hop) {
            REQUIRE(frame.frame.size() == 2048);
            const PeerId at = frame.destination;
            auto peeled = peel_layer(peers.cipher, frame, peers.ring(at), 2048);
            auto& layer = std::get<ResponseLayer>(peeled);
            parts_seen.push_back(layer.part);
            // A relay cannot read the reply with anything it holds.
            if (mode == ResponseMode::end_to_end)
                CHECK_FALSE(open_response_part(peers.cipher, mode, peers.cipher.generate_symmetric(at, rng),
                                               layer.part));
            auto next = open_response_tail(peers.cipher, layer.tail, peers.ring(at));
            REQUIRE(next);
            Bytes relay_part = layer.part;
            if (mode == ResponseMode::end_to_end) {
                REQUIRE(next->blind);
                blind_part(relay_part, *next->blind);
            }
            frame = wrap_response(peers.cipher, relay_part, peers.keys.at(next->next).public_key, next->tail,
                                  next->next, 2048);
        }
        CHECK(frame.destination == requester);
        auto final_layer = std::get<ResponseLayer>(peel_layer(peers.cipher, frame, peers.ring(requester), 2048));
        CHECK(final_layer.tail.empty());
        Bytes received = final_layer.part;
        if (mode == ResponseMode::end_to_end) {
            // Non-adjacent relays never see the same bytes.
            CHECK(parts_seen[0] != parts_seen[1]);
            CHECK(parts_seen[1] != parts_seen[2]);
            for (const auto& blind : built.blinds)
                blind_part(received, blind);
        }
        const auto opened = open_response_part(peers.cipher, mode, session, received);
        REQUIRE(opened);
        CHECK(opened->message == text("R"));
        CHECK(opened->kind == PayloadKind::response);
        if (mode == ResponseMode::per_hop) {
            Reader in(parts_seen[1]);
            CHECK(in.u64() == session.key_id);
        }
    }
}

TEST_CASE("frame schema has no hop counter")
{
    KeyedPeers peers(10);
    auto built = build_response_block(peers.cipher, std::vector<PeerId>{6, 7, 9}, 1, peers.lookup(), peers.rng);
    const PlainPayload payload{PayloadKind::request, text("M"), std::nullopt};
    Packet packet = build_request_onion(peers.cipher, std::vector<PeerId>{3, 4, 5}, 8, payload, built.block,
                                        peers.lookup(), 2048);
    for (int hop = 0; hop < 4; ++hop) {
        const auto fields = inspect_frame(packet.frame, 2048);
        std::vector<std::string> names;
        std::size_t covered = 0;
        for (const auto& f : fields) {
            names.emplace_back(f.name);
            CHECK(f.offset == covered);
            covered += f.length;
        }
        CHECK(covered == 2048);
        CHECK(names == std::vector<std::string>{"scheme", "key_id", "body_length", "body", "padding"});
        auto peeled = peel_layer(peers.cipher, packet, peers.ring(packet.destination), 2048);
        if (auto* fwd = std::get_if<Forward>(&peeled))
            packet = fwd->inner;
    }
    Bytes bad(2048, 0);
    CHECK_THROWS_AS(inspect_frame(bad, 1024), Error);
}

TEST_CASE("key table scheme selection")
{
    TestCipher cipher;
    Rng rng(51);
    const auto own = cipher.generate_symmetric(1, rng);
    const auto k5 = cipher.generate_keypair(5, rng);
    KeyTable table(1, own);

    const auto first = select_scheme(table, 5, k5.public_key);
    REQUIRE(std::holds_alternative<AsymmetricScheme>(first));
    CHECK(std::get<AsymmetricScheme>(first).key == k5.public_key);
    CHECK(std::get<AsymmetricScheme>(first).piggyback == own);
    CHECK(table.entries().empty());

    const auto s5 = cipher.generate_symmetric(5, rng);
    table.record_piggybacked_key(5, s5);
    const auto cached = select_scheme(table, 5, k5.public_key);
    REQUIRE(std::holds_alternative<SymmetricScheme>(cached));
    CHECK(std::get<SymmetricScheme>(cached).key == s5);

    CHECK_THROWS_AS(select_scheme(table, 1, k5.public_key), Error);
    CHECK_THROWS_AS(table.record_piggybacked_key(1, s5), Error);
    try {
        table.record_piggybacked_key(7, k5.public_key);
        FAIL("expected invalid_key_use");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::invalid_key_use);
    }
}

TEST_CASE("latest piggybacked key wins")
{
    TestCipher cipher;
    Rng rng(52);
    KeyTable table(1, cipher.generate_symmetric(1, rng));
    const auto s7 = cipher.generate_symmetric(7, rng);
    const auto s7b = cipher.generate_symmetric(7, rng);
    table.record_piggybacked_key(7, s7);
    table.record_piggybacked_key(7, s7b);
    CHECK(table.entries().size() == 1);
    const auto blob = cipher.seal(*table.find(7), text("m"));
    CHECK(cipher.open(s7b, blob) == text("m"));
    CHECK_FALSE(cipher.open(s7, blob));
}

TEST_CASE("direct exchange binds keys in both directions")
{
    TestCipher cipher;
    Rng rng(53);
    const PeerId n = 6;
    std::map<PeerId, KeyPair> pairs;
    std::map<PeerId, KeyTable> tables;
    for (PeerId p = 1; p <= n; ++p) {
        pairs[p] = cipher.generate_keypair(p, rng);
        tables.emplace(p, KeyTable(p, cipher.generate_symmetric(p, rng)));
    }
    for (PeerId x = 1; x <= n; ++x) {
        for (PeerId y = 1; y <= n; ++y) {
            if (x == y)
                continue;
            const auto msg = random_bytes(rng, 20);
            const bool known = tables.at(x).find(y) != nullptr;
            auto sent = seal_direct(cipher, tables.at(x), y, pairs[y].public_key, 0x40, msg);
            CHECK((sent.scheme == Scheme::symmetric) == known);
            auto got = open_direct(cipher, tables.at(y), pairs[y].private_key, x, sent.packet.frame);
            REQUIRE(got);
            CHECK(got->body == msg);
            CHECK(got->piggyback_key.has_value() == !known);

            // The reply is symmetric and opens at x with its own key.
            auto reply = seal_direct(cipher, tables.at(y), x, pairs[x].public_key, 0x41, msg);
            CHECK(reply.scheme == Scheme::symmetric);
            auto back = open_direct(cipher, tables.at(x), pairs[x].private_key, y, reply.packet.frame);
            REQUIRE(back);
            CHECK(back->body == msg);
        }
    }
    for (const auto& [p, table] : tables) {
        CHECK(table.entries().size() == n - 1);
        CHECK(table.find(p) == nullptr);
    }
}
