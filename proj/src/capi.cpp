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

#include "dualpath/dualpath.h"

#include "dualpath/config.hpp"
#include "dualpath/report.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <cstring>
#include <new>

struct dp_config {
    // Overrides are re-applied to the source text so defaults that derive
    // from other fields (heartbeat_timeout) follow them.
    std::string source;
    std::vector<std::string> overrides;
    dualpath::ScenarioConfig config;
};

struct dp_result {
    dualpath::Metrics metrics;
    dualpath::Trace trace;
};

namespace {

thread_local std::string last_error;

dp_status set_error(dp_status status, const std::string& message)
{
    last_error = message;
    return status;
}

dp_status from_error(const dualpath::Error& e)
{
    switch (e.code()) {
    case dualpath::Errc::invalid_config: return set_error(DP_ERR_INVALID_CONFIG, e.what());
    case dualpath::Errc::run_failure: return set_error(DP_ERR_RUN_FAILURE, e.what());
    default: return set_error(DP_ERR_INTERNAL, e.what());
    }
}

template <class Fn>
dp_status guarded(Fn&& fn)
{
    try {
        last_error.clear();
        return fn();
    } catch (const dualpath::Error& e) {
        return from_error(e);
    } catch (const std::bad_alloc&) {
        return set_error(DP_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(DP_ERR_INTERNAL, e.what());
    }
}

dp_status copy_out(const std::string& text, char** out)
{
    char* buf = static_cast<char*>(std::malloc(text.size() + 1));
    if (buf == nullptr)
        return set_error(DP_ERR_INTERNAL, "out of memory");
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
    return DP_OK;
}

} // namespace

extern "C" {

const char* dp_version(void) { return "1.0.0"; }

const char* dp_last_error(void) { return last_error.c_str(); }

dp_status dp_config_from_json(const char* json_text, dp_config** out)
{
    if (json_text == nullptr || out == nullptr)
        return set_error(DP_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out = new dp_config{json_text, {}, dualpath::parse_config(json_text)};
        return DP_OK;
    });
}

dp_status dp_config_load(const char* path, dp_config** out)
{
    if (path == nullptr || out == nullptr)
        return set_error(DP_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        auto config = dualpath::load_config(path);
        std::ifstream in(path, std::ios::binary);
        std::ostringstream text;
        text << in.rdbuf();
        *out = new dp_config{text.str(), {}, config};
        return DP_OK;
    });
}

dp_status dp_config_override(dp_config* config, const char* key_value)
{
    if (config == nullptr || key_value == nullptr)
        return set_error(DP_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        auto overrides = config->overrides;
        overrides.emplace_back(key_value);
        config->config = dualpath::parse_config(config->source, overrides);
        config->overrides = std::move(overrides);
        return DP_OK;
    });
}

dp_status dp_config_set_seed(dp_config* config, uint64_t seed)
{
    if (config == nullptr)
        return set_error(DP_ERR_INVALID_ARGUMENT, "null argument");
    config->config.seed = seed;
    config->overrides.push_back("seed=" + std::to_string(seed));
    return DP_OK;
}

dp_status dp_config_seed(const dp_config* config, uint64_t* seed)
{
    if (config == nullptr || seed == nullptr)
        return set_error(DP_ERR_INVALID_ARGUMENT, "null argument");
    *seed = config->config.seed;
    return DP_OK;
}

dp_status dp_config_to_json(const dp_config* config, char** out)
{
    if (config == nullptr || out == nullptr)
        return set_error(DP_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] { return copy_out(dualpath::config_to_json(config->config), out); });
}

void dp_config_free(dp_config* config) { delete config; }

dp_status dp_run(const dp_config* config, dp_result** out)
{
    if (config == nullptr || out == nullptr)
        return set_error(DP_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        dualpath::World world(config->config);
        dp_status status = DP_OK;
        try {
            world.run();
        } catch (const dualpath::Error& e) {
            if (e.code() != dualpath::Errc::run_failure)
                throw;
            status = set_error(DP_ERR_RUN_FAILURE, e.what());
        }
        auto* result = new dp_result;
        result->trace = world.take_trace();
        result->metrics = dualpath::compute_metrics(result->trace, config->config);
        *out = result;
        return status;
    });
}

dp_status dp_result_metrics_json(const dp_result* result, char** out)
{
    if (result == nullptr || out == nullptr)
        return set_error(DP_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        return copy_out(dualpath::format_report(result->metrics, dualpath::ReportFormat::json), out);
    });
}

dp_status dp_result_metrics_csv(const dp_result* result, char** out)
{
    if (result == nullptr || out == nullptr)
        return set_error(DP_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        return copy_out(dualpath::format_report(result->metrics, dualpath::ReportFormat::csv), out);
    });
}

dp_status dp_result_trace_csv(const dp_result* result, char** out)
{
    if (result == nullptr || out == nullptr)
        return set_error(DP_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] { return copy_out(dualpath::trace_csv(result->trace), out); });
}

dp_status dp_result_linkability_csv(const dp_result* result, char** out)
{
    if (result == nullptr || out == nullptr)
        return set_error(DP_ERR_INVALID_ARGUMENT, "null argument");
    return guarded(
        [&] { return copy_out(dualpath::linkability_csv(result->trace, result->metrics), out); });
}

dp_status dp_result_summary(const dp_result* result, double* completion_fraction,
                            double* median_anonymity_set)
{
    if (result == nullptr || completion_fraction == nullptr || median_anonymity_set == nullptr)
        return set_error(DP_ERR_INVALID_ARGUMENT, "null argument");
    *completion_fraction = dualpath::completion_fraction(result->metrics);
    *median_anonymity_set = result->metrics.median_anonymity_content;
    return DP_OK;
}

void dp_result_free(dp_result* result) { delete result; }

void dp_string_free(char* text) { std::free(text); }

} // extern "C"
