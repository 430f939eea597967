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

#ifndef DUALPATH_REPORT_HPP
#define DUALPATH_REPORT_HPP

#include "dualpath/simnet.hpp"

#include <string>
#include <string_view>

namespace dualpath {

enum class ReportFormat { json, csv };

/// json: one object with every Metrics field in declaration order.
/// csv: the scalar fields as one header row and one value row; the
/// per-cycle vectors are only in json and in the linkability report.
std::string format_report(const Metrics& metrics, ReportFormat format);

/// Inverse of the json report. Throws Error(malformed).
Metrics parse_metrics_json(std::string_view text);

/// Header of the csv report.
const std::string& metrics_csv_header();

/// Interception log as `time,src,dst,size,class` lines, with a header row.
std::string trace_csv(const Trace& trace);

/// One row per completed cycle with its candidate-set sizes.
std::string linkability_csv(const Trace& trace, const Metrics& metrics);

/// cycles_completed / cycles_attempted, 0 for an empty run.
double completion_fraction(const Metrics& metrics);

} // namespace dualpath

#endif
