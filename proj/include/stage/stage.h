/*
 * Copyright 2026 The stage authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef STAGE_STAGE_H
#define STAGE_STAGE_H

#include <stddef.h>
#include <stdint.h>

#if defined(STAGE_BUILDING_LIBRARY)
#define STAGE_API __attribute__((visibility("default")))
#else
#define STAGE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as process exit codes. */
typedef enum {
  STAGE_OK = 0,
  STAGE_UNRESOLVED = 1, /* run finished with files not Done */
  STAGE_USAGE = 2,      /* usage, parse, config or replica conflict */
  STAGE_QUOTA = 3,
  STAGE_CREDENTIAL = 4,
  STAGE_STORAGE = 5     /* storage full, journal write or corruption */
} stage_status;

typedef struct stage_config stage_config;
typedef struct stage_fleet stage_fleet;

/* Last error of the calling thread. Valid until the next call on the thread. */
STAGE_API const char* stage_last_error_class(void);
STAGE_API const char* stage_last_error_detail(void);

/* Every char** result is heap-allocated; release with stage_string_free. */
STAGE_API void stage_string_free(char* s);

/* path may be NULL for defaults. envp is a NULL-terminated environment block
 * scanned for STAGE_* overrides; it may be NULL. */
STAGE_API stage_status stage_config_load(const char* path, const char* const* envp,
                                         stage_config** out);
STAGE_API stage_status stage_config_set(stage_config* config, const char* key, const char* value);
STAGE_API stage_status stage_config_render(const stage_config* config, char** out);
STAGE_API void stage_config_free(stage_config* config);

/* Sizes from the manifests, probing nodes for missing sizes. */
STAGE_API stage_status stage_estimate(const char* const* manifest_paths, size_t count,
                                      const stage_config* config, char** out);

/* Plans, runs and journals the transfer; calling it again resumes.
 * out receives the run report even when the status is not STAGE_OK. */
STAGE_API stage_status stage_run(const char* const* manifest_paths, size_t count,
                                 const stage_config* config, char** out);

/* Asks a running stage_run to stop after the current attempts. */
STAGE_API void stage_request_stop(void);

/* Per-state counts from the journal; manifests (optional) add Pending. */
STAGE_API stage_status stage_journal_status(const char* const* manifest_paths, size_t count,
                                            const stage_config* config, char** out);

/* Per-node totals from the recorded samples; csv != 0 selects CSV output. */
STAGE_API stage_status stage_node_report(const stage_config* config, int csv, char** out);

/* Downloads a probe object of `bytes` from each node base URL and returns
 * the rate matrix as CSV. Samples are appended to the staging samples file. */
STAGE_API stage_status stage_probe(const char* const* node_urls, size_t count, uint64_t bytes,
                                   const stage_config* config, char** out);

STAGE_API stage_status stage_fleet_start(const char* fleet_config_path, stage_fleet** out);
STAGE_API stage_status stage_fleet_describe(const stage_fleet* fleet, char** out);
STAGE_API void stage_fleet_stop(stage_fleet* fleet);

#ifdef __cplusplus
}
#endif

#endif
