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

#ifndef DUALPATH_SIMNET_HPP
#define DUALPATH_SIMNET_HPP

#include "dualpath/peer_node.hpp"
#include "dualpath/supernode.hpp"

#include <memory>
#include <queue>

namespace dualpath {

struct ChurnConfig {
    double leave_prob_per_interval = 0.0;
    /// Expected joins per interval: floor(join_rate) plus one more with the
    /// fractional part as probability.
    double join_rate = 0.0;
    Tick interval = 50;
};

struct AdversaryConfig {
    std::vector<PeerId> colluding;
    /// When set, that fraction of the initial peers (rounded down) is drawn
    /// at random and replaces `colluding`.
    std::optional<double> colluding_fraction;
    bool global_observer = true;
};

enum class SelectionRule { random, fixed };

struct WorkloadConfig {
    std::uint32_t n_cycles = 5;
    SelectionRule rule = SelectionRule::random;
    PeerId requester = 1;
    PeerId provider = 2;
    /// Ticks between cycle starts; 0 means L_req + L_resp + 4.
    Tick interval = 0;
    /// First cycle start; 0 means 2 * sync_interval + 3.
    Tick start = 0;
    std::size_t message_size = 64;
};

struct ScenarioConfig {
    std::size_t n_peers = 10;
    std::size_t n_supernodes = 1;
    std::size_t L_req = 3;
    std::size_t L_resp = 3;
    Tick heartbeat_period = 5;
    Tick heartbeat_timeout = 15;
    Tick sync_interval = 10;
    /// 0 means 4 * (L_req + L_resp + 2).
    Tick cycle_timeout = 0;
    std::uint32_t rotate_every = 1;
    std::uint32_t retries = 3;
    std::size_t pad_size = kDefaultPadSize;
    ChurnConfig churn;
    AdversaryConfig adversary;
    WorkloadConfig workload;
    std::uint64_t seed = 1;
    ResponseMode response_payload = ResponseMode::end_to_end;
    Tick max_ticks = 1'000'000;

    Tick effective_cycle_timeout() const;
    Tick effective_workload_interval() const;
    Tick effective_workload_start() const;
};

/// Throws Error(invalid_config) whose message starts with the offending
/// field name.
void validate_config(const ScenarioConfig& config);

struct LinkEvent {
    Tick time = 0;
    PeerId src = kNoPeer;
    PeerId dst = kNoPeer;
    std::size_t size = 0;
    FrameClass frame_class = FrameClass::data;

    bool operator==(const LinkEvent&) const = default;
};

/// One entry of a peer's knowledge log. `cycle_id` is simulator ground truth
/// and is never visible to the peer; the digests identify the frame bytes the
/// peer received and sent.
struct Observation {
    Tick time = 0;
    std::uint64_t cycle_id = 0;
    HopObservation hop;
    std::uint64_t in_digest = 0;
    std::uint64_t out_digest = 0;
};

struct CycleRecord {
    std::uint64_t cycle_id = 0;
    std::uint32_t workload_index = 0;
    std::uint32_t attempt = 0;
    PeerId requester = kNoPeer;
    PeerId provider = kNoPeer;
    DualPath path;
    Tick started = 0;
    Tick finished = 0;
    bool completed = false;
    std::vector<PeerId> live_at_start;
};

struct DirectSeal {
    Tick time = 0;
    PeerId src = kNoPeer;
    PeerId dst = kNoPeer;
    Scheme scheme = Scheme::asymmetric;
};

struct RunCounters {
    std::uint64_t workload_attempted = 0;
    std::uint64_t workload_completed = 0;
    std::uint64_t workload_failed = 0;
    std::uint64_t data_sent = 0;
    std::uint64_t data_delivered = 0;
    std::uint64_t data_lost = 0;
    std::uint64_t control_sent = 0;
    std::uint64_t control_lost = 0;
    std::uint64_t asymmetric_seals = 0;
    std::uint64_t symmetric_seals = 0;
    std::uint64_t departures = 0;
    std::uint64_t joins = 0;
    Tick convergence_lag = 0;
    Tick end_time = 0;
};

struct Trace {
    /// Interception log; empty unless the global observer is enabled.
    std::vector<LinkEvent> links;
    /// Knowledge logs of all peers (DATA frames), in processing order.
    std::vector<Observation> observations;
    std::vector<CycleRecord> cycles;
    std::vector<DirectSeal> direct_seals;
    std::vector<PeerId> colluding;
    RunCounters counters;
    std::size_t pad_size = kDefaultPadSize;
    Tick cycle_timeout = 0;
    bool global_observer = true;
};

struct Metrics {
    std::uint64_t cycles_attempted = 0;
    std::uint64_t cycles_completed = 0;
    std::uint64_t cycles_failed = 0;
    std::uint64_t cycle_attempts = 0;
    double mean_transmissions_per_cycle = 0.0;
    std::uint64_t data_frames_sent = 0;
    std::uint64_t data_frames_delivered = 0;
    std::uint64_t data_frames_lost = 0;
    std::uint64_t control_frames_sent = 0;
    std::uint64_t asymmetric_seals = 0;
    std::uint64_t symmetric_seals = 0;
    std::uint64_t direct_asymmetric_seals = 0;
    std::uint64_t direct_symmetric_seals = 0;
    /// Per completed cycle; the adversary is the configured coalition, the
    /// provider alone, and the global observer together with the coalition
    /// and the provider.
    std::vector<std::uint64_t> anonymity_content;
    std::vector<std::uint64_t> anonymity_provider;
    std::vector<std::uint64_t> anonymity_observer;
    double median_anonymity_content = 0.0;
    double median_anonymity_provider = 0.0;
    double median_anonymity_observer = 0.0;
    double statistical_intersection_mean = 0.0;
    std::uint64_t directory_convergence_lag = 0;
    std::uint64_t departures = 0;
    std::uint64_t joins = 0;

    bool operator==(const Metrics&) const = default;
};

struct RunHooks {
    /// Called for every transmitted frame, before delivery.
    std::function<void(const LinkEvent&, const Packet&)> frame_tap;
    Responder responder;
};

struct ChurnOutcome {
    std::vector<PeerId> departed;
    std::vector<PeerId> joined;
};

/// The simulated network. Events are processed in (time, emitter, per-emitter
/// sequence) order; every link has unit latency.
class World {
public:
    explicit World(const ScenarioConfig& config, RunHooks hooks = {});
    ~World();
    World(const World&) = delete;
    World& operator=(const World&) = delete;

    /// Processes the minimum pending event. Returns false once the run is
    /// finished. Throws Error(run_failure) past max_ticks.
    bool step();
    void run();

    /// Abrupt departures followed by fresh joins, drawn from the churn stream.
    ChurnOutcome apply_churn(Tick now);

    Tick now() const noexcept { return now_; }
    const Trace& trace() const noexcept { return trace_; }
    Trace take_trace();
    bool is_live(PeerId peer) const { return live_.count(peer) != 0; }
    std::vector<PeerId> live_peers() const;
    const PeerNode* peer(PeerId id) const;
    const Supernode* supernode(std::size_t index) const;
    std::size_t supernode_count() const noexcept { return supernodes_.size(); }

private:
    enum class EventKind { delivery, heartbeat, evict, sync, cycle_timeout, workload, churn };
    struct Event {
        Tick time = 0;
        PeerId emitter = kNoPeer;
        std::uint64_t seq = 0;
        EventKind kind = EventKind::delivery;
        PeerId src = kNoPeer;
        PeerId node = kNoPeer;
        Packet packet;
        std::uint64_t cycle_id = 0;
        std::uint64_t arg = 0;
    };
    struct EventOrder {
        bool operator()(const Event& a, const Event& b) const;
    };

    void schedule(Event event);
    void schedule_timer(Tick time, PeerId emitter, EventKind kind, PeerId node,
                        std::uint64_t arg = 0);
    void send(PeerId src, Packet packet, std::uint64_t cycle_id, std::optional<Scheme> scheme);
    void send_all(PeerId src, std::vector<Outgoing> out);
    void deliver(const Event& event);
    void fire_timer(const Event& event);
    void start_workload_item(std::uint32_t index);
    void fail_item(std::uint32_t index);
    void record_cycle(PeerId requester, const Session& session, std::uint32_t index,
                      std::uint32_t attempt);
    PeerId add_peer(PeerId id, bool send_join);
    void end_of_tick();
    bool finished() const;

    ScenarioConfig config_;
    RunHooks hooks_;
    TestCipher base_cipher_;
    CountingCipher cipher_;
    Rng churn_rng_;
    Rng workload_rng_;

    std::map<PeerId, std::unique_ptr<PeerNode>> peers_;
    std::set<PeerId> live_;
    std::vector<std::unique_ptr<Supernode>> supernodes_;
    PeerId next_peer_id_ = 1;

    std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
    std::map<PeerId, std::uint64_t> emit_seq_;
    Tick now_ = 0;
    std::uint64_t in_flight_data_ = 0;

    enum class ItemState { pending, awaiting, completed, failed };
    std::vector<ItemState> items_;
    std::uint32_t items_started_ = 0;
    std::map<std::uint64_t, std::size_t> cycle_index_;  // cycle_id -> trace_.cycles slot
    std::map<std::uint64_t, std::uint32_t> awaiting_;   // cycle_id -> workload item

    bool diverged_ = false;
    Tick diverged_since_ = 0;

    Trace trace_;
};

/// Runs a scenario to completion. Deterministic in the config (seed included).
struct RunResult {
    Metrics metrics;
    Trace trace;
};
RunResult run_scenario(const ScenarioConfig& config, const RunHooks& hooks = {});

/// Lookup tables over a trace, built once for repeated analyses. The trace
/// must outlive the index.
class TraceIndex {
public:
    explicit TraceIndex(const Trace& trace);

    const Trace& trace() const noexcept { return trace_; }
    const CycleRecord* cycle(std::uint64_t cycle_id) const;
    const Observation* provider_observation(std::uint64_t cycle_id) const;
    /// The observation in which `observer` sent / received the given frame.
    const Observation* sent_by(PeerId observer, std::uint64_t digest) const;
    const Observation* received_by(PeerId observer, std::uint64_t digest) const;
    std::vector<const Observation*> tagged(KeyId session_tag) const;
    /// Senders of DATA frames to `dst` at `time`, and receivers of DATA
    /// frames sent by `src` at `time`.
    std::vector<PeerId> data_senders(PeerId dst, Tick time) const;
    std::vector<PeerId> data_receivers(PeerId src, Tick time) const;

private:
    const Trace& trace_;
    std::map<std::uint64_t, std::size_t> cycles_;
    std::map<std::uint64_t, std::size_t> anchors_;
    std::map<std::pair<PeerId, std::uint64_t>, std::size_t> sent_, received_;
    std::multimap<KeyId, std::size_t> tags_;
    std::multimap<std::pair<PeerId, Tick>, PeerId> by_dst_, by_src_;
};

/// Candidate requesters of a completed cycle given the coalition's decrypted
/// views and, with use_links, the interception log. Throws Error(precondition)
/// for an unknown or uncompleted cycle.
std::vector<PeerId> linkability_analysis(const Trace& trace, std::span<const PeerId> colluding,
                                         std::uint64_t cycle_id, bool use_links);
std::vector<PeerId> linkability_analysis(const TraceIndex& index, std::span<const PeerId> colluding,
                                         std::uint64_t cycle_id, bool use_links);

Metrics compute_metrics(const Trace& trace, const ScenarioConfig& config);

/// 64-bit FNV-1a of a frame, used to match frames across knowledge logs.
std::uint64_t frame_digest(ByteView frame) noexcept;

} // namespace dualpath

#endif
