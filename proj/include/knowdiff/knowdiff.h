// Copyright 2026 The knowdiff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the knowdiff planning pipeline.
 *
 * Every function returning kd_status reports failures through the return
 * value and leaves a message for kd_last_error() on the calling thread.
 * Strings returned through char** are owned by the caller and released with
 * kd_string_free(). Handles are released with their matching *_free call;
 * passing NULL to a *_free function is allowed. */

#ifndef KNOWDIFF_KNOWDIFF_H_
#define KNOWDIFF_KNOWDIFF_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define KD_API __declspec(dllexport)
#else
#define KD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kd_status {
  KD_OK = 0,
  KD_INVALID_ARGUMENT = 1,
  KD_IO = 2,
  KD_EMPTY_DATA = 3,
  KD_NUMERIC = 4,
  KD_CONFIG = 5,
  KD_INCOMPATIBLE = 6,
  KD_FORMAT = 7, /* bad magic, version, checksum or truncation */
  KD_INTERNAL = 8
} kd_status;

typedef struct kd_config kd_config;
typedef struct kd_logset kd_logset;
typedef struct kd_library kd_library;
typedef struct kd_model kd_model;
typedef struct kd_planner kd_planner;

KD_API const char* kd_version(void);
/* Message of the last failure on this thread; empty after success. */
KD_API const char* kd_last_error(void);
KD_API const char* kd_status_name(kd_status status);
KD_API void kd_string_free(char* s);
/* Outbound decision requests issued by this process. */
KD_API uint64_t kd_network_request_count(void);
/* Log verbosity: "off", "error", "warn", "info", "debug". */
KD_API kd_status kd_set_log_level(const char* level);

/* Configuration. */
KD_API kd_status kd_config_default(kd_config** out);
KD_API kd_status kd_config_load(const char* path, kd_config** out);
/* Applies a JSON merge patch and revalidates; the handle is unchanged on
 * failure. */
KD_API kd_status kd_config_merge(kd_config* cfg, const char* json_patch);
/* Effective configuration with every field. */
KD_API kd_status kd_config_dump(const kd_config* cfg, char** json_out);
KD_API void kd_config_free(kd_config* cfg);

/* Drive logs. */
KD_API kd_status kd_logset_generate(const kd_config* cfg, kd_logset** out);
KD_API kd_status kd_logset_load_dir(const char* dir, kd_logset** out);
KD_API kd_status kd_logset_load_file(const char* path, kd_logset** out);
/* Writes one file per log, named by index, creating `dir` if needed. */
KD_API kd_status kd_logset_save_dir(const kd_logset* logs, const char* dir);
KD_API size_t kd_logset_size(const kd_logset* logs);
/* {"labels": {label: count}, "distinct": n, "logs": n}. */
KD_API kd_status kd_logset_coverage(const kd_logset* logs, char** json_out);
KD_API void kd_logset_free(kd_logset* logs);

/* Prior library. */
KD_API kd_status kd_library_build(const kd_logset* logs, double window_s, kd_library** out);
KD_API kd_status kd_library_load(const char* path, kd_library** out);
KD_API kd_status kd_library_save(const kd_library* lib, const char* path);
/* {"entries": [{"label", "samples"}], "segments": n}. */
KD_API kd_status kd_library_summary(const kd_library* lib, char** json_out);
KD_API void kd_library_free(kd_library* lib);

/* Denoiser checkpoint. */
typedef void (*kd_progress_fn)(size_t step, double loss, void* user);
KD_API kd_status kd_model_create(const kd_config* cfg, kd_model** out);
KD_API kd_status kd_model_load(const char* path, kd_model** out);
KD_API kd_status kd_model_save(const kd_model* model, const char* path);
/* Trains up to the configured step count, continuing from the steps the
 * model already holds. `lib` is checked for horizon compatibility. */
KD_API kd_status kd_model_train(kd_model* model, const kd_logset* logs, const kd_library* lib,
                                const kd_config* cfg, kd_progress_fn progress, void* user);
/* Loss per completed step; the pointer stays valid until the model changes. */
KD_API kd_status kd_model_losses(const kd_model* model, const double** losses, size_t* count);
KD_API size_t kd_model_parameter_count(const kd_model* model);
KD_API void kd_model_free(kd_model* model);

/* Planners: "expert", "straight", "prior", "knowdiffuser",
 * "knowdiffuser-full". Providers: "heuristic" or "remote"; "remote" fails
 * with KD_CONFIG before any request when the API key variable is unset.
 * The planner copies what it needs from `lib` and `model`. */
KD_API kd_status kd_planner_create(const char* kind, const kd_library* lib, const kd_model* model,
                                   const kd_config* cfg, const char* provider, kd_planner** out);
/* Plans from frame `frame` of log `index`; JSON with the trajectory and the
 * decision record. */
KD_API kd_status kd_planner_plan(kd_planner* planner, const kd_logset* logs, size_t index,
                                 size_t frame, char** json_out);
KD_API void kd_planner_free(kd_planner* planner);

/* Evaluation reports as JSON. */
KD_API kd_status kd_evaluate_open_loop(kd_planner* planner, const kd_logset* logs,
                                       char** json_out);
/* `reactive` < 0 keeps the configured mode. When `trace_dir` is non-NULL a
 * trace CSV per scenario is written there. */
KD_API kd_status kd_evaluate_closed_loop(kd_planner* planner, const kd_logset* logs,
                                         const kd_config* cfg, int reactive,
                                         const char* trace_dir, char** json_out);

#ifdef __cplusplus
}
#endif

#endif /* KNOWDIFF_KNOWDIFF_H_ */
