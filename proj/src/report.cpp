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

#include "dualpath/report.hpp"

#include <json.hpp>

#include <sstream>

namespace dualpath {

namespace {

using ojson = nlohmann::ordered_json;

// One table drives the json writer, the json reader and the csv columns, so
// the three cannot drift apart.
template <class Fn>
void for_each_scalar(Metrics& m, Fn&& fn)
{
    fn("cycles_attempted", m.cycles_attempted);
    fn("cycles_completed", m.cycles_completed);
    fn("cycles_failed", m.cycles_failed);
    fn("cycle_attempts", m.cycle_attempts);
    fn("mean_transmissions_per_cycle", m.mean_transmissions_per_cycle);
    fn("data_frames_sent", m.data_frames_sent);
    fn("data_frames_delivered", m.data_frames_delivered);
    fn("data_frames_lost", m.data_frames_lost);
    fn("control_frames_sent", m.control_frames_sent);
    fn("asymmetric_seals", m.asymmetric_seals);
    fn("symmetric_seals", m.symmetric_seals);
    fn("direct_asymmetric_seals", m.direct_asymmetric_seals);
    fn("direct_symmetric_seals", m.direct_symmetric_seals);
    fn("median_anonymity_content", m.median_anonymity_content);
    fn("median_anonymity_provider", m.median_anonymity_provider);
    fn("median_anonymity_observer", m.median_anonymity_observer);
    fn("statistical_intersection_mean", m.statistical_intersection_mean);
    fn("directory_convergence_lag", m.directory_convergence_lag);
    fn("departures", m.departures);
    fn("joins", m.joins);
}

template <class Fn>
void for_each_vector(Metrics& m, Fn&& fn)
{
    fn("anonymity_content", m.anonymity_content);
    fn("anonymity_provider", m.anonymity_provider);
    fn("anonymity_observer", m.anonymity_observer);
}

std::string csv_number(std::uint64_t v) { return std::to_string(v); }

std::string csv_number(double v)
{
    // Same shortest round-trip text the json writer uses.
    return ojson(v).dump();
}

} // namespace

std::string format_report(const Metrics& metrics, ReportFormat format)
{
    Metrics m = metrics;
    if (format == ReportFormat::json) {
        ojson doc;
        for_each_scalar(m, [&](const char* name, auto& v) { doc[name] = v; });
        for_each_vector(m, [&](const char* name, auto& v) { doc[name] = v; });
        return doc.dump(2) + "\n";
    }
    std::string row;
    for_each_scalar(m, [&](const char*, auto& v) {
        if (!row.empty())
            row += ',';
        row += csv_number(v);
    });
    return metrics_csv_header() + "\n" + row + "\n";
}

const std::string& metrics_csv_header()
{
    static const std::string header = [] {
        Metrics m;
        std::string h;
        for_each_scalar(m, [&](const char* name, auto&) {
            if (!h.empty())
                h += ',';
            h += name;
        });
        return h;
    }();
    return header;
}

Metrics parse_metrics_json(std::string_view text)
{
    const auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw Error(Errc::malformed, "metrics report is not a JSON object");
    Metrics m;
    try {
        for_each_scalar(m, [&](const char* name, auto& v) {
            using T = std::decay_t<decltype(v)>;
            if (!doc.contains(name))
                throw Error(Errc::malformed, std::string("metrics report lacks ") + name);
            v = doc.at(name).get<T>();
        });
        for_each_vector(m, [&](const char* name, auto& v) {
            using T = std::decay_t<decltype(v)>;
            if (!doc.contains(name))
                throw Error(Errc::malformed, std::string("metrics report lacks ") + name);
            v = doc.at(name).get<T>();
        });
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::malformed, e.what());
    }
    return m;
}

std::string trace_csv(const Trace& trace)
{
    std::ostringstream out;
    out << "time,src,dst,size,class\n";
    for (const auto& ev : trace.links)
        out << ev.time << ',' << ev.src << ',' << ev.dst << ',' << ev.size << ','
            << (ev.frame_class == FrameClass::data ? "DATA" : "CONTROL") << '\n';
    return out.str();
}

std::string linkability_csv(const Trace& trace, const Metrics& metrics)
{
    std::ostringstream out;
    out << "cycle_id,workload_index,attempt,requester,provider,content_set,provider_set,observer_set\n";
    std::size_t i = 0;
    for (const auto& rec : trace.cycles) {
        if (!rec.completed)
            continue;
        out << rec.cycle_id << ',' << rec.workload_index << ',' << rec.attempt << ',' << rec.requester
            << ',' << rec.provider << ',';
        out << (i < metrics.anonymity_content.size() ? std::to_string(metrics.anonymity_content[i]) : "")
            << ',';
        out << (i < metrics.anonymity_provider.size() ? std::to_string(metrics.anonymity_provider[i]) : "")
            << ',';
        out << (i < metrics.anonymity_observer.size() ? std::to_string(metrics.anonymity_observer[i]) : "")
            << '\n';
        ++i;
    }
    return out.str();
}

double completion_fraction(const Metrics& metrics)
{
    if (metrics.cycles_attempted == 0)
        return 0.0;
    return static_cast<double>(metrics.cycles_completed) / static_cast<double>(metrics.cycles_attempted);
}

} // namespace dualpath
