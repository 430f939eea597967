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

/*
 * C interface of the dualpath simulator. All handles are opaque; every
 * function reports failure through dp_status and leaves a message for
 * dp_last_error() on the calling thread. Strings returned through char**
 * are owned by the caller and released with dp_string_free().
 */
#ifndef DUALPATH_H
#define DUALPATH_H

#include <stdint.h>

#if defined(_WIN32)
#define DP_API __declspec(dllexport)
#else
#define DP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dp_status {
    DP_OK = 0,
    DP_ERR_INVALID_ARGUMENT = 1,
    DP_ERR_INVALID_CONFIG = 2,
    DP_ERR_RUN_FAILURE = 3,
    DP_ERR_INTERNAL = 4
} dp_status;

typedef struct dp_config dp_config;
typedef struct dp_result dp_result;

DP_API const char* dp_version(void);

/* Message of the last failed call on this thread; "" when none. */
DP_API const char* dp_last_error(void);

DP_API dp_status dp_config_from_json(const char* json_text, dp_config** out);
DP_API dp_status dp_config_load(const char* path, dp_config** out);
/* "key=value" with a dotted key, e.g. "churn.leave_prob_per_interval=0.1". */
DP_API dp_status dp_config_override(dp_config* config, const char* key_value);
DP_API dp_status dp_config_set_seed(dp_config* config, uint64_t seed);
DP_API dp_status dp_config_seed(const dp_config* config, uint64_t* seed);
DP_API dp_status dp_config_to_json(const dp_config* config, char** out);
DP_API void dp_config_free(dp_config* config);

/*
 * Runs one scenario. On DP_ERR_RUN_FAILURE *out still receives the partial
 * result collected up to the failure.
 */
DP_API dp_status dp_run(const dp_config* config, dp_result** out);

DP_API dp_status dp_result_metrics_json(const dp_result* result, char** out);
DP_API dp_status dp_result_metrics_csv(const dp_result* result, char** out);
DP_API dp_status dp_result_trace_csv(const dp_result* result, char** out);
DP_API dp_status dp_result_linkability_csv(const dp_result* result, char** out);
DP_API dp_status dp_result_summary(const dp_result* result, double* completion_fraction,
                                   double* median_anonymity_set);
DP_API void dp_result_free(dp_result* result);

DP_API void dp_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif
