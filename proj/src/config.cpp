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

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace dualpath {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& why)
{
    throw Error(Errc::invalid_config, field + ": " + why);
}

std::string join(const std::string& prefix, const std::string& key)
{
    return prefix.empty() ? key : prefix + "." + key;
}

void only_keys(const json& obj, const std::string& prefix, std::initializer_list<const char*> known)
{
    if (!obj.is_object())
        fail(prefix.empty() ? "config" : prefix, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* k : known)
            ok = ok || key == k;
        if (!ok)
            fail(join(prefix, key), "unknown field");
    }
}

template <class T>
void read_uint(const json& obj, const std::string& prefix, const char* key, T& out)
{
    if (!obj.contains(key))
        return;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned())
        fail(join(prefix, key), "expected a non-negative integer");
    const auto raw = v.get<std::uint64_t>();
    if (raw > std::numeric_limits<T>::max())
        fail(join(prefix, key), "value too large");
    out = static_cast<T>(raw);
}

void read_double(const json& obj, const std::string& prefix, const char* key, double& out)
{
    if (!obj.contains(key))
        return;
    const auto& v = obj.at(key);
    if (!v.is_number())
        fail(join(prefix, key), "expected a number");
    out = v.get<double>();
}

void read_bool(const json& obj, const std::string& prefix, const char* key, bool& out)
{
    if (!obj.contains(key))
        return;
    const auto& v = obj.at(key);
    if (!v.is_boolean())
        fail(join(prefix, key), "expected true or false");
    out = v.get<bool>();
}

std::string read_string(const json& obj, const std::string& prefix, const char* key)
{
    const auto& v = obj.at(key);
    if (!v.is_string())
        fail(join(prefix, key), "expected a string");
    return v.get<std::string>();
}

ScenarioConfig from_json(const json& doc)
{
    ScenarioConfig c;
    only_keys(doc, "",
              {"n_peers", "n_supernodes", "L_req", "L_resp", "heartbeat_period", "heartbeat_timeout",
               "sync_interval", "cycle_timeout", "rotate_every", "retries", "pad_size", "churn",
               "adversary", "workload", "seed", "response_payload", "max_ticks"});
    read_uint(doc, "", "n_peers", c.n_peers);
    read_uint(doc, "", "n_supernodes", c.n_supernodes);
    read_uint(doc, "", "L_req", c.L_req);
    read_uint(doc, "", "L_resp", c.L_resp);
    read_uint(doc, "", "heartbeat_period", c.heartbeat_period);
    c.heartbeat_timeout = 3 * c.heartbeat_period;
    read_uint(doc, "", "heartbeat_timeout", c.heartbeat_timeout);
    read_uint(doc, "", "sync_interval", c.sync_interval);
    read_uint(doc, "", "cycle_timeout", c.cycle_timeout);
    read_uint(doc, "", "rotate_every", c.rotate_every);
    read_uint(doc, "", "retries", c.retries);
    read_uint(doc, "", "pad_size", c.pad_size);
    read_uint(doc, "", "seed", c.seed);
    read_uint(doc, "", "max_ticks", c.max_ticks);

    if (doc.contains("response_payload")) {
        const auto mode = read_string(doc, "", "response_payload");
        if (mode == "end_to_end")
            c.response_payload = ResponseMode::end_to_end;
        else if (mode == "per_hop")
            c.response_payload = ResponseMode::per_hop;
        else
            fail("response_payload", "expected end_to_end or per_hop");
    }

    if (doc.contains("churn")) {
        const auto& ch = doc.at("churn");
        only_keys(ch, "churn", {"leave_prob_per_interval", "join_rate", "interval"});
        read_double(ch, "churn", "leave_prob_per_interval", c.churn.leave_prob_per_interval);
        read_double(ch, "churn", "join_rate", c.churn.join_rate);
        read_uint(ch, "churn", "interval", c.churn.interval);
    }

    if (doc.contains("adversary")) {
        const auto& adv = doc.at("adversary");
        only_keys(adv, "adversary", {"colluding", "global_observer"});
        read_bool(adv, "adversary", "global_observer", c.adversary.global_observer);
        if (adv.contains("colluding")) {
            const auto& col = adv.at("colluding");
            if (col.is_array()) {
                for (const auto& id : col) {
                    if (!id.is_number_unsigned())
                        fail("adversary.colluding", "expected peer ids");
                    c.adversary.colluding.push_back(id.get<PeerId>());
                }
            } else if (col.is_number()) {
                c.adversary.colluding_fraction = col.get<double>();
            } else {
                fail("adversary.colluding", "expected a list of peer ids or a fraction");
            }
        }
    }

    if (doc.contains("workload")) {
        const auto& wl = doc.at("workload");
        only_keys(wl, "workload",
                  {"n_cycles", "rule", "requester", "provider", "interval", "start", "message_size"});
        read_uint(wl, "workload", "n_cycles", c.workload.n_cycles);
        read_uint(wl, "workload", "requester", c.workload.requester);
        read_uint(wl, "workload", "provider", c.workload.provider);
        read_uint(wl, "workload", "interval", c.workload.interval);
        read_uint(wl, "workload", "start", c.workload.start);
        read_uint(wl, "workload", "message_size", c.workload.message_size);
        if (wl.contains("rule")) {
            const auto rule = read_string(wl, "workload", "rule");
            if (rule == "random")
                c.workload.rule = SelectionRule::random;
            else if (rule == "fixed")
                c.workload.rule = SelectionRule::fixed;
            else
                fail("workload.rule", "expected random or fixed");
        }
    }

    validate_config(c);
    return c;
}

void apply_override(json& doc, const std::string& item)
{
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
        fail(item, "override must look like key=value");
    const std::string key = item.substr(0, eq);
    const std::string text = item.substr(eq + 1);

    json value = json::parse(text, nullptr, false);
    if (value.is_discarded())
        value = text;

    json* node = &doc;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot - start);
        if (part.empty())
            fail(key, "empty key segment");
        if (!node->is_object())
            fail(key.substr(0, start == 0 ? 0 : start - 1), "expected an object");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (node->is_null())
            *node = json::object();
        start = dot + 1;
    }
}

} // namespace

ScenarioConfig parse_config(std::string_view json_text, const std::vector<std::string>& overrides)
{
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded())
        fail("config", "not valid JSON");
    if (!doc.is_object())
        fail("config", "expected an object");
    for (const auto& o : overrides)
        apply_override(doc, o);
    return from_json(doc);
}

ScenarioConfig load_config(const std::string& path, const std::vector<std::string>& overrides)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail("config", "cannot read " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), overrides);
}

std::string config_to_json(const ScenarioConfig& c)
{
    nlohmann::ordered_json doc;
    doc["n_peers"] = c.n_peers;
    doc["n_supernodes"] = c.n_supernodes;
    doc["L_req"] = c.L_req;
    doc["L_resp"] = c.L_resp;
    doc["heartbeat_period"] = c.heartbeat_period;
    doc["heartbeat_timeout"] = c.heartbeat_timeout;
    doc["sync_interval"] = c.sync_interval;
    doc["cycle_timeout"] = c.cycle_timeout;
    doc["rotate_every"] = c.rotate_every;
    doc["retries"] = c.retries;
    doc["pad_size"] = c.pad_size;
    doc["churn"] = {{"leave_prob_per_interval", c.churn.leave_prob_per_interval},
                    {"join_rate", c.churn.join_rate},
                    {"interval", c.churn.interval}};
    nlohmann::ordered_json adv;
    if (c.adversary.colluding_fraction)
        adv["colluding"] = *c.adversary.colluding_fraction;
    else
        adv["colluding"] = c.adversary.colluding;
    adv["global_observer"] = c.adversary.global_observer;
    doc["adversary"] = adv;
    doc["workload"] = {{"n_cycles", c.workload.n_cycles},
                       {"rule", c.workload.rule == SelectionRule::fixed ? "fixed" : "random"},
                       {"requester", c.workload.requester},
                       {"provider", c.workload.provider},
                       {"interval", c.workload.interval},
                       {"start", c.workload.start},
                       {"message_size", c.workload.message_size}};
    doc["seed"] = c.seed;
    doc["response_payload"] = c.response_payload == ResponseMode::per_hop ? "per_hop" : "end_to_end";
    doc["max_ticks"] = c.max_ticks;
    return doc.dump(2) + "\n";
}

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b)
{
    return config_to_json(a) == config_to_json(b);
}

} // namespace dualpath
