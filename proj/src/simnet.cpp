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

#include "dualpath/simnet.hpp"

#include <algorithm>
#include <cmath>

namespace dualpath {

namespace {

constexpr PeerId kSupernodeBase = 1'000'000;
constexpr PeerId kSystemEmitter = 0;

// Stream ids for Rng::derive. Above every PeerId so they never collide.
constexpr std::uint64_t kChurnStream = 0xC0FFEE0000000001ULL;
constexpr std::uint64_t kWorkloadStream = 0xC0FFEE0000000002ULL;
constexpr std::uint64_t kCoalitionStream = 0xC0FFEE0000000003ULL;

bool is_supernode(PeerId id) { return id >= kSupernodeBase; }

[[noreturn]] void bad_field(const std::string& field, const std::string& why)
{
    throw Error(Errc::invalid_config, field + ": " + why);
}

double median_of(std::vector<std::uint64_t> values)
{
    if (values.empty())
        return 0.0;
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    if (n % 2 == 1)
        return static_cast<double>(values[n / 2]);
    return (static_cast<double>(values[n / 2 - 1]) + static_cast<double>(values[n / 2])) / 2.0;
}

} // namespace

std::uint64_t frame_digest(ByteView frame) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : frame) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Config

Tick ScenarioConfig::effective_cycle_timeout() const
{
    return cycle_timeout != 0 ? cycle_timeout : 4 * (L_req + L_resp + 2);
}

Tick ScenarioConfig::effective_workload_interval() const
{
    return workload.interval != 0 ? workload.interval : L_req + L_resp + 4;
}

Tick ScenarioConfig::effective_workload_start() const
{
    return workload.start != 0 ? workload.start : 2 * sync_interval + 3;
}

void validate_config(const ScenarioConfig& c)
{
    if (c.L_resp < 1)
        bad_field("L_resp", "must be at least 1");
    if (c.n_peers < c.L_req + c.L_resp + 2)
        bad_field("n_peers", "must be at least L_req + L_resp + 2 = " +
                                 std::to_string(c.L_req + c.L_resp + 2));
    if (c.n_peers >= kSupernodeBase / 2)
        bad_field("n_peers", "too large");
    if (c.n_supernodes < 1)
        bad_field("n_supernodes", "must be at least 1");
    if (c.n_supernodes > 1000)
        bad_field("n_supernodes", "too large");
    if (c.heartbeat_period < 1)
        bad_field("heartbeat_period", "must be at least 1");
    if (c.heartbeat_timeout < 1)
        bad_field("heartbeat_timeout", "must be at least 1");
    if (c.sync_interval < 1)
        bad_field("sync_interval", "must be at least 1");
    // A replica learns about a foreign peer's heartbeat up to
    // heartbeat_period + sync_interval ticks late.
    if (c.n_supernodes > 1 && c.heartbeat_timeout < c.heartbeat_period + c.sync_interval)
        bad_field("heartbeat_timeout",
                  "must be at least heartbeat_period + sync_interval with several supernodes");
    if (c.rotate_every < 1)
        bad_field("rotate_every", "must be at least 1");
    if (c.pad_size < 64)
        bad_field("pad_size", "must be at least 64");
    auto prob = [](double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; };
    if (!prob(c.churn.leave_prob_per_interval))
        bad_field("churn.leave_prob_per_interval", "must be in [0, 1]");
    if (!std::isfinite(c.churn.join_rate) || c.churn.join_rate < 0.0 || c.churn.join_rate > 1000.0)
        bad_field("churn.join_rate", "must be in [0, 1000]");
    if (c.churn.interval < 1)
        bad_field("churn.interval", "must be at least 1");
    if (c.adversary.colluding_fraction && !prob(*c.adversary.colluding_fraction))
        bad_field("adversary.colluding", "fraction must be in [0, 1]");
    for (auto id : c.adversary.colluding)
        if (id < 1 || id > c.n_peers)
            bad_field("adversary.colluding", "peer " + std::to_string(id) + " is not an initial peer");
    if (c.workload.rule == SelectionRule::fixed) {
        if (c.workload.requester < 1 || c.workload.requester > c.n_peers)
            bad_field("workload.requester", "must be an initial peer");
        if (c.workload.provider < 1 || c.workload.provider > c.n_peers)
            bad_field("workload.provider", "must be an initial peer");
        if (c.workload.requester == c.workload.provider)
            bad_field("workload.provider", "must differ from the requester");
    }
    TestCipher cipher;
    const auto room = max_request_message(cipher, c.L_req, c.L_resp, c.pad_size);
    if (!room || *room < c.workload.message_size)
        bad_field("workload.message_size", "request does not fit in pad_size");
    const auto reply = max_response_message(cipher, c.response_payload, c.L_resp, c.pad_size);
    if (!reply || *reply < c.workload.message_size)
        bad_field("workload.message_size", "response does not fit in pad_size");
    if (c.max_ticks < 1)
        bad_field("max_ticks", "must be at least 1");
}

// ---------------------------------------------------------------------------
// World

bool World::EventOrder::operator()(const Event& a, const Event& b) const
{
    // priority_queue is a max-heap; invert for earliest-first.
    return std::tie(a.time, a.emitter, a.seq) > std::tie(b.time, b.emitter, b.seq);
}

World::World(const ScenarioConfig& config, RunHooks hooks)
    : config_(config),
      hooks_(std::move(hooks)),
      cipher_(base_cipher_),
      churn_rng_(Rng::derive(config.seed, kChurnStream)),
      workload_rng_(Rng::derive(config.seed, kWorkloadStream))
{
    validate_config(config_);
    trace_.pad_size = config_.pad_size;
    trace_.cycle_timeout = config_.effective_cycle_timeout();
    trace_.global_observer = config_.adversary.global_observer;

    if (config_.adversary.colluding_fraction) {
        Rng rng = Rng::derive(config_.seed, kCoalitionStream);
        std::vector<PeerId> pool;
        for (PeerId id = 1; id <= config_.n_peers; ++id)
            pool.push_back(id);
        const auto k = static_cast<std::size_t>(
            std::floor(*config_.adversary.colluding_fraction * static_cast<double>(pool.size())));
        for (std::size_t i = 0; i < k; ++i)
            std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
        trace_.colluding.assign(pool.begin(), pool.begin() + k);
    } else {
        trace_.colluding = config_.adversary.colluding;
    }
    std::sort(trace_.colluding.begin(), trace_.colluding.end());
    trace_.colluding.erase(std::unique(trace_.colluding.begin(), trace_.colluding.end()),
                           trace_.colluding.end());

    for (std::size_t i = 0; i < config_.n_supernodes; ++i) {
        const PeerId id = kSupernodeBase + i;
        supernodes_.push_back(std::make_unique<Supernode>(id, cipher_, Rng::derive(config_.seed, id),
                                                          config_.heartbeat_timeout));
    }
    for (auto& a : supernodes_)
        for (auto& b : supernodes_)
            if (a != b)
                a->add_replica(b->id(), b->public_key());

    for (std::size_t i = 0; i < config_.n_peers; ++i)
        add_peer(next_peer_id_++, true);

    for (auto& sn : supernodes_) {
        schedule_timer(1, sn->id(), EventKind::evict, sn->id());
        if (supernodes_.size() > 1)
            schedule_timer(config_.sync_interval, sn->id(), EventKind::sync, sn->id());
    }
    const Tick start = config_.effective_workload_start();
    const Tick interval = config_.effective_workload_interval();
    items_.assign(config_.workload.n_cycles, ItemState::pending);
    for (std::uint32_t k = 0; k < config_.workload.n_cycles; ++k)
        schedule_timer(start + k * interval, kSystemEmitter, EventKind::workload, kNoPeer, k);
    if (config_.churn.leave_prob_per_interval > 0.0 || config_.churn.join_rate > 0.0)
        schedule_timer(config_.churn.interval, kSystemEmitter, EventKind::churn, kNoPeer);
}

World::~World() = default;

PeerId World::add_peer(PeerId id, bool send_join)
{
    PeerConfig pc;
    pc.request_len = config_.L_req;
    pc.response_len = config_.L_resp;
    pc.rotation = {config_.rotate_every, true};
    pc.retries = config_.retries;
    pc.cycle_timeout = config_.effective_cycle_timeout();
    pc.pad_size = config_.pad_size;
    pc.response_mode = config_.response_payload;
    pc.heartbeat_period = config_.heartbeat_period;

    auto node = std::make_unique<PeerNode>(id, cipher_, Rng::derive(config_.seed, id), pc);
    const auto& home = supernodes_[(id - 1) % supernodes_.size()];
    node->set_supernode(home->id(), home->public_key());
    if (hooks_.responder)
        node->set_responder(hooks_.responder);
    PeerNode& ref = *node;
    peers_[id] = std::move(node);
    live_.insert(id);
    if (send_join) {
        auto join = ref.join_message();
        send(id, std::move(join.packet), 0, join.direct_scheme);
    }
    schedule_timer(now_ + config_.heartbeat_period, id, EventKind::heartbeat, id);
    return id;
}

void World::schedule(Event event)
{
    event.seq = emit_seq_[event.emitter]++;
    queue_.push(std::move(event));
}

void World::schedule_timer(Tick time, PeerId emitter, EventKind kind, PeerId node,
                           std::uint64_t arg)
{
    Event ev;
    ev.time = time;
    ev.emitter = emitter;
    ev.kind = kind;
    ev.node = node;
    ev.arg = arg;
    schedule(std::move(ev));
}

void World::send(PeerId src, Packet packet, std::uint64_t cycle_id, std::optional<Scheme> scheme)
{
    const LinkEvent link{now_, src, packet.destination, packet.frame.size(), packet.frame_class};
    if (hooks_.frame_tap)
        hooks_.frame_tap(link, packet);
    if (config_.adversary.global_observer)
        trace_.links.push_back(link);
    if (packet.frame_class == FrameClass::data) {
        ++trace_.counters.data_sent;
        ++in_flight_data_;
    } else {
        ++trace_.counters.control_sent;
    }
    if (scheme)
        trace_.direct_seals.push_back({now_, src, packet.destination, *scheme});

    Event ev;
    ev.time = now_ + 1;
    ev.emitter = src;
    ev.kind = EventKind::delivery;
    ev.src = src;
    ev.node = packet.destination;
    ev.cycle_id = cycle_id;
    ev.packet = std::move(packet);
    schedule(std::move(ev));
}

void World::send_all(PeerId src, std::vector<Outgoing> out)
{
    for (auto& o : out)
        send(src, std::move(o.packet), 0, o.direct_scheme);
}

std::vector<PeerId> World::live_peers() const { return {live_.begin(), live_.end()}; }

const PeerNode* World::peer(PeerId id) const
{
    auto it = peers_.find(id);
    return it == peers_.end() ? nullptr : it->second.get();
}

const Supernode* World::supernode(std::size_t index) const
{
    return index < supernodes_.size() ? supernodes_[index].get() : nullptr;
}

void World::record_cycle(PeerId requester, const Session& session, std::uint32_t index,
                         std::uint32_t attempt)
{
    CycleRecord rec;
    rec.cycle_id = session.cycle_id;
    rec.workload_index = index;
    rec.attempt = attempt;
    rec.requester = requester;
    rec.provider = session.provider;
    rec.path = session.path;
    rec.started = now_;
    rec.live_at_start = live_peers();
    cycle_index_[session.cycle_id] = trace_.cycles.size();
    trace_.cycles.push_back(std::move(rec));
    awaiting_[session.cycle_id] = index;
}

void World::fail_item(std::uint32_t index)
{
    if (items_[index] == ItemState::completed || items_[index] == ItemState::failed)
        return;
    items_[index] = ItemState::failed;
    ++trace_.counters.workload_failed;
}

void World::start_workload_item(std::uint32_t index)
{
    ++items_started_;
    ++trace_.counters.workload_attempted;
    items_[index] = ItemState::awaiting;

    PeerId requester = kNoPeer, provider = kNoPeer;
    if (config_.workload.rule == SelectionRule::fixed) {
        requester = config_.workload.requester;
        provider = config_.workload.provider;
    } else {
        std::vector<PeerId> ready;
        for (auto id : live_)
            if (peers_.at(id)->joined())
                ready.push_back(id);
        if (!ready.empty()) {
            requester = ready[workload_rng_.below(ready.size())];
            const auto& view = peers_.at(requester)->view();
            std::vector<PeerId> targets;
            for (auto id : ready)
                if (id != requester && view.count(id))
                    targets.push_back(id);
            if (!targets.empty())
                provider = targets[workload_rng_.below(targets.size())];
        }
    }
    Bytes message(config_.workload.message_size);
    for (auto& b : message)
        b = static_cast<std::uint8_t>(workload_rng_.next());

    if (requester == kNoPeer || provider == kNoPeer || !live_.count(requester)) {
        fail_item(index);
        return;
    }
    PeerNode& node = *peers_.at(requester);
    try {
        auto start = node.initiate_cycle(provider, std::move(message), now_);
        record_cycle(requester, start.session, index, 0);
        schedule_timer(start.session.deadline, requester, EventKind::cycle_timeout, requester,
                       start.session.cycle_id);
        send(requester, std::move(start.outgoing), start.session.cycle_id, std::nullopt);
    } catch (const Error&) {
        fail_item(index);
    }
}

ChurnOutcome World::apply_churn(Tick now)
{
    ChurnOutcome outcome;
    for (auto id : live_peers())
        if (churn_rng_.bernoulli(config_.churn.leave_prob_per_interval))
            outcome.departed.push_back(id);
    for (auto id : outcome.departed) {
        live_.erase(id);
        ++trace_.counters.departures;
        for (auto it = awaiting_.begin(); it != awaiting_.end();) {
            const auto& rec = trace_.cycles[cycle_index_.at(it->first)];
            if (rec.requester == id) {
                fail_item(it->second);
                it = awaiting_.erase(it);
            } else {
                ++it;
            }
        }
    }

    const double whole = std::floor(config_.churn.join_rate);
    std::size_t joins = static_cast<std::size_t>(whole);
    if (churn_rng_.bernoulli(config_.churn.join_rate - whole))
        ++joins;
    const Tick saved = now_;
    now_ = now;
    for (std::size_t i = 0; i < joins; ++i) {
        if (next_peer_id_ >= kSupernodeBase)
            break;
        outcome.joined.push_back(add_peer(next_peer_id_++, true));
        ++trace_.counters.joins;
    }
    now_ = saved;
    return outcome;
}

void World::deliver(const Event& ev)
{
    const bool data = ev.packet.frame_class == FrameClass::data;
    if (data)
        --in_flight_data_;

    if (is_supernode(ev.node)) {
        const auto slot = ev.node - kSupernodeBase;
        if (slot < supernodes_.size())
            send_all(ev.node, supernodes_[slot]->on_control(ev.src, ev.packet, now_));
        return;
    }
    if (!live_.count(ev.node)) {
        if (data)
            ++trace_.counters.data_lost;
        else
            ++trace_.counters.control_lost;
        return;
    }
    PeerNode& node = *peers_.at(ev.node);
    if (!data) {
        send_all(ev.node, node.handle_control(ev.src, ev.packet));
        return;
    }

    ++trace_.counters.data_delivered;
    auto result = node.handle_incoming(ev.src, ev.packet, now_);
    std::uint64_t out_digest = 0;
    for (const auto& action : result.actions)
        if (const auto* s = std::get_if<SendAction>(&action))
            out_digest = frame_digest(s->packet.frame);
    if (result.observation)
        trace_.observations.push_back(
            {now_, ev.cycle_id, *result.observation, frame_digest(ev.packet.frame), out_digest});

    for (auto& action : result.actions) {
        if (auto* s = std::get_if<SendAction>(&action)) {
            send(ev.node, std::move(s->packet), ev.cycle_id, std::nullopt);
        } else if (auto* r = std::get_if<DeliverResponse>(&action)) {
            auto it = awaiting_.find(r->cycle_id);
            if (it == awaiting_.end())
                continue;
            auto& rec = trace_.cycles[cycle_index_.at(r->cycle_id)];
            rec.completed = true;
            rec.finished = now_;
            if (items_[it->second] == ItemState::awaiting) {
                items_[it->second] = ItemState::completed;
                ++trace_.counters.workload_completed;
            }
            awaiting_.erase(it);
        }
    }
}

void World::fire_timer(const Event& ev)
{
    switch (ev.kind) {
    case EventKind::heartbeat: {
        if (!live_.count(ev.node))
            return;
        PeerNode& node = *peers_.at(ev.node);
        if (node.joined()) {
            auto hb = node.heartbeat_message();
            send(ev.node, std::move(hb.packet), 0, hb.direct_scheme);
        }
        schedule_timer(now_ + config_.heartbeat_period, ev.node, EventKind::heartbeat, ev.node);
        return;
    }
    case EventKind::evict: {
        auto& sn = *supernodes_[ev.node - kSupernodeBase];
        send_all(ev.node, sn.evict(now_));
        schedule_timer(now_ + 1, ev.node, EventKind::evict, ev.node);
        return;
    }
    case EventKind::sync: {
        auto& sn = *supernodes_[ev.node - kSupernodeBase];
        send_all(ev.node, sn.sync());
        schedule_timer(now_ + config_.sync_interval, ev.node, EventKind::sync, ev.node);
        return;
    }
    case EventKind::cycle_timeout: {
        const auto cycle_id = ev.arg;
        auto waiting = awaiting_.find(cycle_id);
        if (!live_.count(ev.node) || waiting == awaiting_.end())
            return;
        const auto index = waiting->second;
        const auto attempt = trace_.cycles[cycle_index_.at(cycle_id)].attempt;
        auto outcome = peers_.at(ev.node)->on_cycle_timeout(cycle_id, now_);
        if (std::holds_alternative<NoTimeout>(outcome))
            return;
        awaiting_.erase(waiting);
        trace_.cycles[cycle_index_.at(cycle_id)].finished = now_;
        if (auto* retry = std::get_if<Retry>(&outcome)) {
            record_cycle(ev.node, retry->session, index, attempt + 1);
            schedule_timer(retry->session.deadline, ev.node, EventKind::cycle_timeout, ev.node,
                           retry->session.cycle_id);
            send(ev.node, std::move(retry->packet), retry->session.cycle_id, std::nullopt);
        } else {
            fail_item(index);
        }
        return;
    }
    case EventKind::workload:
        start_workload_item(static_cast<std::uint32_t>(ev.arg));
        return;
    case EventKind::churn:
        apply_churn(now_);
        schedule_timer(now_ + config_.churn.interval, kSystemEmitter, EventKind::churn, kNoPeer);
        return;
    case EventKind::delivery:
        return;
    }
}

void World::end_of_tick()
{
    if (supernodes_.size() < 2)
        return;
    auto ids = [](const Supernode& sn) {
        std::vector<PeerId> out;
        for (const auto& [id, rec] : sn.directory().records())
            out.push_back(id);
        return out;
    };
    const auto first = ids(*supernodes_.front());
    bool same = true;
    for (std::size_t i = 1; i < supernodes_.size() && same; ++i)
        same = ids(*supernodes_[i]) == first;
    if (!same && !diverged_) {
        diverged_ = true;
        diverged_since_ = now_;
    } else if (same && diverged_) {
        diverged_ = false;
        trace_.counters.convergence_lag =
            std::max(trace_.counters.convergence_lag, now_ - diverged_since_);
    }
}

bool World::finished() const
{
    return items_started_ == items_.size() && awaiting_.empty() && in_flight_data_ == 0 &&
           now_ >= config_.effective_workload_start();
}

bool World::step()
{
    if (queue_.empty() || finished()) {
        end_of_tick();
        if (diverged_)
            trace_.counters.convergence_lag =
                std::max(trace_.counters.convergence_lag, now_ - diverged_since_);
        diverged_ = false;
        trace_.counters.end_time = now_;
        trace_.counters.asymmetric_seals = cipher_.asymmetric_seals();
        trace_.counters.symmetric_seals = cipher_.symmetric_seals();
        return false;
    }
    Event ev = queue_.top();
    if (ev.time > config_.max_ticks)
        throw Error(Errc::run_failure, "run exceeded max_ticks = " + std::to_string(config_.max_ticks));
    queue_.pop();
    if (ev.time != now_) {
        end_of_tick();
        now_ = ev.time;
    }
    if (ev.kind == EventKind::delivery)
        deliver(ev);
    else
        fire_timer(ev);
    return true;
}

void World::run()
{
    while (step()) {
    }
}

Trace World::take_trace() { return std::move(trace_); }

RunResult run_scenario(const ScenarioConfig& config, const RunHooks& hooks)
{
    World world(config, hooks);
    world.run();
    RunResult result;
    result.trace = world.take_trace();
    result.metrics = compute_metrics(result.trace, config);
    return result;
}

// ---------------------------------------------------------------------------
// Analysis

TraceIndex::TraceIndex(const Trace& trace) : trace_(trace)
{
    for (std::size_t i = 0; i < trace.cycles.size(); ++i)
        cycles_[trace.cycles[i].cycle_id] = i;
    for (std::size_t i = 0; i < trace.observations.size(); ++i) {
        const auto& obs = trace.observations[i];
        if (obs.hop.role == HopRole::provider && obs.cycle_id != 0)
            anchors_.emplace(obs.cycle_id, i);
        if (obs.out_digest != 0)
            sent_.emplace(std::make_pair(obs.hop.observer, obs.out_digest), i);
        received_.emplace(std::make_pair(obs.hop.observer, obs.in_digest), i);
        if (obs.hop.session_tag)
            tags_.emplace(*obs.hop.session_tag, i);
    }
    for (const auto& ev : trace.links) {
        if (ev.frame_class != FrameClass::data)
            continue;
        by_dst_.emplace(std::make_pair(ev.dst, ev.time), ev.src);
        by_src_.emplace(std::make_pair(ev.src, ev.time), ev.dst);
    }
}

const CycleRecord* TraceIndex::cycle(std::uint64_t cycle_id) const
{
    auto it = cycles_.find(cycle_id);
    return it == cycles_.end() ? nullptr : &trace_.cycles[it->second];
}

const Observation* TraceIndex::provider_observation(std::uint64_t cycle_id) const
{
    auto it = anchors_.find(cycle_id);
    return it == anchors_.end() ? nullptr : &trace_.observations[it->second];
}

const Observation* TraceIndex::sent_by(PeerId observer, std::uint64_t digest) const
{
    auto it = sent_.find({observer, digest});
    return it == sent_.end() ? nullptr : &trace_.observations[it->second];
}

const Observation* TraceIndex::received_by(PeerId observer, std::uint64_t digest) const
{
    auto it = received_.find({observer, digest});
    return it == received_.end() ? nullptr : &trace_.observations[it->second];
}

std::vector<const Observation*> TraceIndex::tagged(KeyId session_tag) const
{
    std::vector<const Observation*> out;
    auto [lo, hi] = tags_.equal_range(session_tag);
    for (auto it = lo; it != hi; ++it)
        out.push_back(&trace_.observations[it->second]);
    return out;
}

std::vector<PeerId> TraceIndex::data_senders(PeerId dst, Tick time) const
{
    std::vector<PeerId> out;
    auto [lo, hi] = by_dst_.equal_range({dst, time});
    for (auto it = lo; it != hi; ++it)
        out.push_back(it->second);
    return out;
}

std::vector<PeerId> TraceIndex::data_receivers(PeerId src, Tick time) const
{
    std::vector<PeerId> out;
    auto [lo, hi] = by_src_.equal_range({src, time});
    for (auto it = lo; it != hi; ++it)
        out.push_back(it->second);
    return out;
}

namespace {

// Nodes that may have originated (backward) or finally received (forward)
// the DATA chain through a send by `node` at `time`, bounded by the cycle
// timeout.
std::set<PeerId> causal_set(const TraceIndex& index, PeerId node, Tick time, bool backward)
{
    std::set<PeerId> reached;
    std::set<std::pair<PeerId, Tick>> seen{{node, time}};
    std::vector<std::pair<PeerId, Tick>> frontier{{node, time}};
    for (Tick depth = 0; depth <= index.trace().cycle_timeout && !frontier.empty(); ++depth) {
        std::vector<std::pair<PeerId, Tick>> next;
        for (const auto& [n, t] : frontier) {
            if (backward) {
                // n sent at t, so it either originated or received at t.
                reached.insert(n);
                if (t == 0)
                    continue;
                for (auto p : index.data_senders(n, t - 1))
                    if (seen.insert({p, t - 1}).second)
                        next.push_back({p, t - 1});
            } else {
                for (auto p : index.data_receivers(n, t)) {
                    reached.insert(p);
                    if (seen.insert({p, t + 1}).second)
                        next.push_back({p, t + 1});
                }
            }
        }
        frontier = std::move(next);
    }
    return reached;
}

} // namespace

std::vector<PeerId> linkability_analysis(const Trace& trace, std::span<const PeerId> colluding,
                                         std::uint64_t cycle_id, bool use_links)
{
    return linkability_analysis(TraceIndex(trace), colluding, cycle_id, use_links);
}

std::vector<PeerId> linkability_analysis(const TraceIndex& index, std::span<const PeerId> colluding,
                                         std::uint64_t cycle_id, bool use_links)
{
    const CycleRecord* rec = index.cycle(cycle_id);
    if (rec == nullptr)
        throw Error(Errc::precondition, "unknown cycle " + std::to_string(cycle_id));
    if (!rec->completed)
        throw Error(Errc::precondition, "cycle " + std::to_string(cycle_id) + " did not complete");

    const std::set<PeerId> coalition(colluding.begin(), colluding.end());
    auto in_c = [&](PeerId p) { return coalition.count(p) != 0; };

    if (in_c(rec->requester))
        return {rec->requester};

    std::set<PeerId> excluded(coalition.begin(), coalition.end());
    const Observation* anchor = in_c(rec->provider) ? index.provider_observation(cycle_id) : nullptr;

    if (anchor != nullptr) {
        excluded.insert(rec->provider);

        // Backward through colluding request relays that handled the same frame.
        const Observation* cur = anchor;
        while (in_c(cur->hop.pred)) {
            const auto* prev = index.sent_by(cur->hop.pred, cur->in_digest);
            if (prev == nullptr || prev->hop.role != HopRole::request_relay)
                break;
            cur = prev;
        }

        // Forward through colluding response relays.
        cur = anchor;
        for (;;) {
            if (cur->hop.end)
                return {cur->hop.succ};
            const PeerId succ = cur->hop.succ;
            if (!in_c(succ)) {
                excluded.insert(succ);
                break;
            }
            const auto* next = index.received_by(succ, cur->out_digest);
            if (next == nullptr || next->hop.role != HopRole::response_relay)
                break;
            cur = next;
        }

        // Readable response parts link every colluding response relay.
        if (anchor->hop.session_tag) {
            for (const auto* obs : index.tagged(*anchor->hop.session_tag)) {
                if (obs->hop.role != HopRole::response_relay || !in_c(obs->hop.observer))
                    continue;
                if (obs->hop.end)
                    return {obs->hop.succ};
                excluded.insert(obs->hop.succ);
                excluded.insert(obs->hop.pred);
            }
        }
    }

    std::vector<PeerId> candidates;
    for (auto p : rec->live_at_start)
        if (!excluded.count(p))
            candidates.push_back(p);

    if (use_links && anchor != nullptr && index.trace().global_observer) {
        const auto origins = causal_set(index, anchor->hop.pred, anchor->time - 1, true);
        const auto ends = causal_set(index, rec->provider, anchor->time, false);
        std::vector<PeerId> kept;
        for (auto p : candidates)
            if (origins.count(p) && ends.count(p))
                kept.push_back(p);
        candidates = std::move(kept);
    }
    return candidates;
}

Metrics compute_metrics(const Trace& trace, const ScenarioConfig& config)
{
    const auto& c = trace.counters;
    Metrics m;
    m.cycles_attempted = c.workload_attempted;
    m.cycles_completed = c.workload_completed;
    m.cycles_failed = c.workload_failed;
    m.cycle_attempts = trace.cycles.size();
    m.mean_transmissions_per_cycle =
        c.workload_attempted == 0
            ? 0.0
            : static_cast<double>(c.data_sent) / static_cast<double>(c.workload_attempted);
    m.data_frames_sent = c.data_sent;
    m.data_frames_delivered = c.data_delivered;
    m.data_frames_lost = c.data_lost;
    m.control_frames_sent = c.control_sent;
    m.asymmetric_seals = c.asymmetric_seals;
    m.symmetric_seals = c.symmetric_seals;
    for (const auto& s : trace.direct_seals)
        ++(s.scheme == Scheme::asymmetric ? m.direct_asymmetric_seals : m.direct_symmetric_seals);

    const TraceIndex index(trace);
    std::map<PeerId, std::vector<std::vector<PeerId>>> per_requester;
    for (const auto& rec : trace.cycles) {
        if (!rec.completed)
            continue;
        auto content = linkability_analysis(index, trace.colluding, rec.cycle_id, false);
        m.anonymity_content.push_back(content.size());
        per_requester[rec.requester].push_back(std::move(content));

        const PeerId provider_only[] = {rec.provider};
        m.anonymity_provider.push_back(
            linkability_analysis(index, provider_only, rec.cycle_id, false).size());

        if (config.adversary.global_observer) {
            std::vector<PeerId> coalition = trace.colluding;
            coalition.push_back(rec.provider);
            m.anonymity_observer.push_back(
                linkability_analysis(index, coalition, rec.cycle_id, true).size());
        }
    }
    m.median_anonymity_content = median_of(m.anonymity_content);
    m.median_anonymity_provider = median_of(m.anonymity_provider);
    m.median_anonymity_observer = median_of(m.anonymity_observer);

    double total = 0.0;
    std::size_t groups = 0;
    for (const auto& [requester, sets] : per_requester) {
        if (sets.size() < 2)
            continue;
        std::vector<PeerId> common = sets.front();
        for (std::size_t i = 1; i < sets.size(); ++i) {
            std::vector<PeerId> next;
            std::set_intersection(common.begin(), common.end(), sets[i].begin(), sets[i].end(),
                                  std::back_inserter(next));
            common = std::move(next);
        }
        total += static_cast<double>(common.size());
        ++groups;
    }
    m.statistical_intersection_mean = groups == 0 ? 0.0 : total / static_cast<double>(groups);

    m.directory_convergence_lag = c.convergence_lag;
    m.departures = c.departures;
    m.joins = c.joins;
    return m;
}

} // namespace dualpath
