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

// Scenario runner. Links only the C interface of libdualpath.

#include "dualpath/dualpath.h"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitUsage = 2;

struct Formats {
    bool json = false;
    bool csv = false;
};

struct SeedOutcome {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double completion = 0.0;
    double median_anonymity = 0.0;
    bool have_summary = false;
};

struct ConfigDeleter {
    void operator()(dp_config* c) const { dp_config_free(c); }
};
struct ResultDeleter {
    void operator()(dp_result* r) const { dp_result_free(r); }
};
using ConfigPtr = std::unique_ptr<dp_config, ConfigDeleter>;
using ResultPtr = std::unique_ptr<dp_result, ResultDeleter>;

std::optional<std::pair<std::uint64_t, std::uint64_t>> parse_seed_range(const std::string& text)
{
    const auto dots = text.find("..");
    try {
        std::size_t used = 0;
        if (dots == std::string::npos) {
            const auto v = std::stoull(text, &used);
            if (used != text.size())
                return std::nullopt;
            return std::make_pair(v, v);
        }
        const auto lo_text = text.substr(0, dots);
        const auto hi_text = text.substr(dots + 2);
        const auto lo = std::stoull(lo_text, &used);
        if (used != lo_text.size())
            return std::nullopt;
        const auto hi = std::stoull(hi_text, &used);
        if (used != hi_text.size() || hi < lo)
            return std::nullopt;
        return std::make_pair(lo, hi);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::optional<Formats> parse_formats(const std::string& text)
{
    Formats f;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item == "json")
            f.json = true;
        else if (item == "csv")
            f.csv = true;
        else
            return std::nullopt;
    }
    if (!f.json && !f.csv)
        return std::nullopt;
    return f;
}

bool write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    return static_cast<bool>(out);
}

// Fetches one C-API string and writes it to `path`.
bool write_export(const fs::path& path, dp_status (*get)(const dp_result*, char**), const dp_result* r)
{
    char* text = nullptr;
    if (get(r, &text) != DP_OK)
        return false;
    const bool ok = write_file(path, text);
    dp_string_free(text);
    return ok;
}

SeedOutcome run_seed(const dp_config* base, std::uint64_t seed, const fs::path& out_dir,
                     const Formats& formats)
{
    SeedOutcome outcome;
    outcome.seed = seed;

    char* json = nullptr;
    if (dp_config_to_json(base, &json) != DP_OK) {
        outcome.error = dp_last_error();
        return outcome;
    }
    dp_config* raw = nullptr;
    const auto parsed = dp_config_from_json(json, &raw);
    dp_string_free(json);
    if (parsed != DP_OK) {
        outcome.error = dp_last_error();
        return outcome;
    }
    ConfigPtr config(raw);
    dp_config_set_seed(config.get(), seed);

    dp_result* result_raw = nullptr;
    const auto status = dp_run(config.get(), &result_raw);
    ResultPtr result(result_raw);
    if (status != DP_OK)
        outcome.error = dp_last_error();
    if (!result)
        return outcome;

    const auto name = [&](const char* stem, const char* ext) {
        return out_dir / (std::string(stem) + "-" + std::to_string(seed) + ext);
    };
    bool written = true;
    if (formats.json)
        written &= write_export(name("metrics", ".json"), dp_result_metrics_json, result.get());
    if (formats.csv)
        written &= write_export(name("metrics", ".csv"), dp_result_metrics_csv, result.get());
    written &= write_export(name("trace", ".csv"), dp_result_trace_csv, result.get());
    written &= write_export(name("linkability", ".csv"), dp_result_linkability_csv, result.get());
    if (!written && outcome.error.empty())
        outcome.error = "cannot write outputs for seed " + std::to_string(seed);

    outcome.have_summary =
        dp_result_summary(result.get(), &outcome.completion, &outcome.median_anonymity) == DP_OK;
    outcome.ok = status == DP_OK && written;
    return outcome;
}

std::string format_double(double v)
{
    char buf[32];
    const auto end = std::to_chars(buf, buf + sizeof buf, v).ptr;
    return std::string(buf, end);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Dual-path anonymous peer-to-peer network simulator"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run a scenario for one seed or a seed range");
    std::string config_path;
    std::vector<std::string> overrides;
    std::string seeds_text;
    std::string out_text;
    std::string format_text = "json";
    run->add_option("config", config_path, "Scenario config (JSON)")->required();
    run->add_option("--override", overrides, "key=value applied after the file (repeatable)");
    run->add_option("--seeds", seeds_text, "Seed or inclusive range a..b; writes summary.csv");
    run->add_option("--out", out_text, "Output directory (default: $DUALPATH_OUT or ./dualpath-out)");
    run->add_option("--format", format_text, "Metrics formats: json, csv or csv,json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    const auto formats = parse_formats(format_text);
    if (!formats) {
        std::cerr << "error: --format must list json and/or csv\n";
        return kExitUsage;
    }
    std::optional<std::pair<std::uint64_t, std::uint64_t>> range;
    if (!seeds_text.empty()) {
        range = parse_seed_range(seeds_text);
        if (!range) {
            std::cerr << "error: --seeds must look like 7 or 1..20\n";
            return kExitUsage;
        }
    }

    dp_config* raw = nullptr;
    if (dp_config_load(config_path.c_str(), &raw) != DP_OK) {
        std::cerr << "error: " << dp_last_error() << "\n";
        return kExitUsage;
    }
    ConfigPtr config(raw);
    for (const auto& o : overrides) {
        if (dp_config_override(config.get(), o.c_str()) != DP_OK) {
            std::cerr << "error: " << dp_last_error() << "\n";
            return kExitUsage;
        }
    }

    fs::path out_dir = out_text;
    if (out_dir.empty()) {
        const char* env = std::getenv("DUALPATH_OUT");
        out_dir = env != nullptr && *env != '\0' ? fs::path(env) : fs::path("dualpath-out");
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        std::cerr << "error: cannot create " << out_dir << ": " << ec.message() << "\n";
        return kExitRunFailure;
    }

    std::vector<std::uint64_t> seeds;
    if (range) {
        for (auto s = range->first;; ++s) {
            seeds.push_back(s);
            if (s == range->second)
                break;
        }
    } else {
        std::uint64_t seed = 0;
        dp_config_seed(config.get(), &seed);
        seeds.push_back(seed);
    }

    std::vector<SeedOutcome> outcomes(seeds.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++)
            outcomes[i] = run_seed(config.get(), seeds[i], out_dir, *formats);
    };
    const std::size_t n_threads =
        std::min<std::size_t>(seeds.size(), std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    if (range) {
        std::string summary = "seed,completion_fraction,median_anonymity_set\n";
        for (const auto& o : outcomes) {
            summary += std::to_string(o.seed) + ",";
            summary += o.have_summary ? format_double(o.completion) + "," + format_double(o.median_anonymity)
                                      : std::string(",");
            summary += "\n";
        }
        write_file(out_dir / "summary.csv", summary);
    }

    std::string failures;
    for (const auto& o : outcomes)
        if (!o.ok)
            failures += "seed " + std::to_string(o.seed) + ": " + o.error + "\n";
    if (!failures.empty()) {
        write_file(out_dir / "FAILED", failures);
        std::cerr << failures;
        return kExitRunFailure;
    }
    return kExitOk;
}
