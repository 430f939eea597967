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

#include "dualpath/config.hpp"
#include "dualpath/report.hpp"

#include <doctest.h>

#include <json.hpp>

using namespace dualpath;

namespace {

std::string error_of(const std::string& json, const std::vector<std::string>& overrides = {})
{
    try {
        parse_config(json, overrides);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::invalid_config);
        return e.what();
    }
    return {};
}

Metrics random_metrics(Rng& rng)
{
    Metrics m;
    m.cycles_attempted = rng.below(1000);
    m.cycles_completed = rng.below(m.cycles_attempted + 1);
    m.cycles_failed = m.cycles_attempted - m.cycles_completed;
    m.cycle_attempts = m.cycles_attempted + rng.below(50);
    m.mean_transmissions_per_cycle = rng.unit() * 20;
    m.data_frames_sent = rng.next() >> 12;
    m.data_frames_delivered = rng.below(m.data_frames_sent + 1);
    m.data_frames_lost = m.data_frames_sent - m.data_frames_delivered;
    m.control_frames_sent = rng.next() >> 20;
    m.asymmetric_seals = rng.below(100000);
    m.symmetric_seals = rng.below(100000);
    m.direct_asymmetric_seals = rng.below(1000);
    m.direct_symmetric_seals = rng.below(1000);
    for (auto* v : {&m.anonymity_content, &m.anonymity_provider, &m.anonymity_observer}) {
        const auto n = rng.below(30);
        for (std::uint64_t i = 0; i < n; ++i)
            v->push_back(1 + rng.below(60));
    }
    m.median_anonymity_content = static_cast<double>(rng.below(120)) / 2;
    m.median_anonymity_provider = rng.unit() * 1e-3;
    m.median_anonymity_observer = 1.0 / 3.0;
    m.statistical_intersection_mean = rng.unit() * 1e6;
    m.directory_convergence_lag = rng.below(100);
    m.departures = rng.below(100);
    m.joins = rng.below(100);
    return m;
}

} // namespace

TEST_CASE("minimal config takes the defaults")
{
    const auto c = parse_config(R"({"n_peers": 10, "seed": 1})");
    CHECK(c.n_peers == 10);
    CHECK(c.seed == 1);
    CHECK(c.L_req == 3);
    CHECK(c.L_resp == 3);
    CHECK(c.pad_size == 2048);
    CHECK(c.heartbeat_period == 5);
    CHECK(c.heartbeat_timeout == 15);
    CHECK(c.sync_interval == 10);
    CHECK(c.retries == 3);
    CHECK(c.rotate_every == 1);
    CHECK(c.effective_cycle_timeout() == 32);
    CHECK(c.response_payload == ResponseMode::end_to_end);
    CHECK(c.churn.leave_prob_per_interval == 0.0);
    CHECK(c.adversary.colluding.empty());
    CHECK(c.adversary.global_observer);
    CHECK(c == ScenarioConfig{});
}

TEST_CASE("overrides apply last")
{
    const std::string base = R"({"n_peers": 10, "seed": 1})";
    auto c = parse_config(base, {"L_req=4"});
    auto expected = parse_config(base);
    expected.L_req = 4;
    CHECK(c == expected);

    c = parse_config(base, {"churn.leave_prob_per_interval=0.25", "response_payload=per_hop",
                            "adversary.colluding=[3,4]", "workload.rule=fixed"});
    CHECK(c.churn.leave_prob_per_interval == 0.25);
    CHECK(c.response_payload == ResponseMode::per_hop);
    CHECK(c.adversary.colluding == std::vector<PeerId>{3, 4});
    CHECK(c.workload.rule == SelectionRule::fixed);

    // A derived default follows the field it derives from.
    CHECK(parse_config(base, {"heartbeat_period=7"}).heartbeat_timeout == 21);
    CHECK(parse_config(R"({"heartbeat_period": 4})").heartbeat_timeout == 12);

    CHECK(error_of(base, {"L_req"}).find("key=value") != std::string::npos);
    CHECK(error_of(base, {"bogus=1"}).rfind("bogus", 0) == 0);
}

TEST_CASE("validation names the field")
{
    CHECK(error_of(R"({"churn": {"leave_prob_per_interval": 1.5}})").rfind("churn.leave_prob_per_interval", 0) ==
          0);
    CHECK(error_of(R"({"n_peers": 7})").rfind("n_peers", 0) == 0);
    CHECK(error_of(R"({"n_peers": -3})").rfind("n_peers", 0) == 0);
    CHECK(error_of(R"({"L_req": "three"})").rfind("L_req", 0) == 0);
    CHECK(error_of(R"({"churn": {"rate": 1}})").rfind("churn.rate", 0) == 0);
    CHECK(error_of(R"({"response_payload": "both"})").rfind("response_payload", 0) == 0);
    CHECK(error_of(R"({"adversary": {"colluding": 2.5}})").rfind("adversary.colluding", 0) == 0);
    CHECK(error_of("{not json").rfind("config", 0) == 0);
    CHECK(error_of("[1, 2]").rfind("config", 0) == 0);
}

TEST_CASE("config survives a json round trip")
{
    ScenarioConfig c;
    c.n_peers = 33;
    c.n_supernodes = 2;
    c.L_req = 2;
    c.churn = {0.1, 2.5, 40};
    c.adversary.colluding = {4, 9};
    c.adversary.global_observer = false;
    c.workload.rule = SelectionRule::fixed;
    c.workload.requester = 5;
    c.workload.provider = 6;
    c.response_payload = ResponseMode::per_hop;
    c.seed = 123456789012345ULL;
    CHECK(parse_config(config_to_json(c)) == c);

    ScenarioConfig f;
    f.adversary.colluding_fraction = 0.2;
    const auto back = parse_config(config_to_json(f));
    REQUIRE(back.adversary.colluding_fraction);
    CHECK(*back.adversary.colluding_fraction == 0.2);
}

TEST_CASE("load_config reports unreadable files")
{
    try {
        load_config("/nonexistent/dir/config.json");
        FAIL("expected invalid_config");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::invalid_config);
    }
}

TEST_CASE("metrics report fields")
{
    Metrics m;
    m.cycles_attempted = 5;
    m.cycles_completed = 5;
    const auto json = format_report(m, ReportFormat::json);
    CHECK(json.find("\"cycles_completed\": 5") != std::string::npos);
    const auto doc = nlohmann::json::parse(json);
    CHECK(doc.at("cycles_attempted") == 5);

    const auto csv = format_report(m, ReportFormat::csv);
    const auto header = csv.substr(0, csv.find('\n'));
    CHECK(header == metrics_csv_header());
    CHECK(header ==
          "cycles_attempted,cycles_completed,cycles_failed,cycle_attempts,mean_transmissions_per_cycle,"
          "data_frames_sent,data_frames_delivered,data_frames_lost,control_frames_sent,asymmetric_seals,"
          "symmetric_seals,direct_asymmetric_seals,direct_symmetric_seals,median_anonymity_content,"
          "median_anonymity_provider,median_anonymity_observer,statistical_intersection_mean,"
          "directory_convergence_lag,departures,joins");
    CHECK(csv.substr(csv.find('\n') + 1).rfind("5,5,0,", 0) == 0);
}

TEST_CASE("json report round trip on random metrics")
{
    Rng rng(61);
    for (int i = 0; i < 300; ++i) {
        const auto m = random_metrics(rng);
        CHECK(parse_metrics_json(format_report(m, ReportFormat::json)) == m);
    }
    CHECK_THROWS_AS(parse_metrics_json("{}"), Error);
    CHECK_THROWS_AS(parse_metrics_json("nope"), Error);
}

TEST_CASE("trace and linkability exports")
{
    const auto r = run_scenario(ScenarioConfig{});
    const auto trace = trace_csv(r.trace);
    CHECK(trace.rfind("time,src,dst,size,class\n", 0) == 0);
    const auto lines = static_cast<std::size_t>(std::count(trace.begin(), trace.end(), '\n'));
    CHECK(lines == r.trace.links.size() + 1);
    CHECK(trace.find(",2048,DATA\n") != std::string::npos);
    CHECK(trace.find(",CONTROL\n") != std::string::npos);

    const auto link = linkability_csv(r.trace, r.metrics);
    CHECK(link.rfind("cycle_id,workload_index,attempt,requester,provider,content_set,provider_set,observer_set\n",
                     0) == 0);
    CHECK(static_cast<std::size_t>(std::count(link.begin(), link.end(), '\n')) == 6);
    CHECK(completion_fraction(r.metrics) == 1.0);
}
