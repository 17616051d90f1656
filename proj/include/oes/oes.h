#ifndef OES_OES_H
#define OES_OES_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define OES_API __declspec(dllexport)
#else
#define OES_API __attribute__((visibility("default")))
#endif

typedef enum oes_status {
  OES_OK = 0,
  OES_ERR_USAGE = 1,
  OES_ERR_CORRUPT = 2,
  OES_ERR_UNREACHABLE = 3,
  OES_ERR_IO = 4,
  OES_ERR_CONFIG = 5,
  OES_ERR_OVERSIZED_FRAME = 6,
  OES_ERR_INTERNAL = 7
} oes_status;

typedef enum oes_keep_reason {
  OES_KEEP_NONE = 0,
  OES_KEEP_TRIPLET_OVERFLOW = 1,
  OES_KEEP_TRACK_OVERFLOW = 2,
  OES_KEEP_COMB_OVERFLOW = 3,
  OES_KEEP_VERTEX_FOUND = 4
} oes_keep_reason;

typedef struct oes_config oes_config;
typedef struct oes_report oes_report;

/* Message of the last failed call on this thread; empty when none. */
OES_API const char* oes_last_error(void);
OES_API const char* oes_version(void);

/* Strings handed out through char** parameters are owned by the caller. */
OES_API void oes_string_free(char* s);

/* Run configuration: `section.field = value` text, see README. */
OES_API oes_status oes_config_new(oes_config** out);
OES_API oes_status oes_config_load(const char* path, oes_config** out);
OES_API oes_status oes_config_clone(const oes_config* config, oes_config** out);
OES_API oes_status oes_config_set(oes_config* config, const char* key,
                                  const char* value);
OES_API oes_status oes_config_get(const oes_config* config, const char* key,
                                  char** value);
OES_API oes_status oes_config_validate(const oes_config* config);
OES_API oes_status oes_config_save(const oes_config* config, const char* path);
OES_API oes_status oes_config_to_string(const oes_config* config, char** out);
OES_API void oes_config_free(oes_config* config);

/* Toy data: chunk file (plus `.hdr` sidecar) and JSON-lines truth file.
 * Seed and chunk capacity come from gen.seed and pipeline.chunk_capacity. */
OES_API oes_status oes_generate(const oes_config* config, uint64_t n_frames,
                                const char* chunk_path, const char* truth_path);

/* Filters `in`. `out` (kept frames) and `truth` may be NULL. */
OES_API oes_status oes_run(const oes_config* config, const char* in,
                           const char* out, const char* truth,
                           oes_report** report);

OES_API uint64_t oes_report_frames_total(const oes_report* report);
OES_API uint64_t oes_report_frames_kept(const oes_report* report);
OES_API uint64_t oes_report_kept_by_reason(const oes_report* report,
                                           oes_keep_reason reason);
OES_API int oes_report_has_truth(const oes_report* report);
/* Named metric as written in the JSON-lines report, e.g. "frames_total",
 * "funnel.pass_delta_lambda", "truth.signal_frame_efficiency". */
OES_API oes_status oes_report_metric(const oes_report* report, const char* name,
                                     double* value);
OES_API oes_status oes_report_write(const oes_report* report,
                                    const oes_config* config, const char* path);
OES_API oes_status oes_report_summary(const oes_report* report, char** out);
OES_API void oes_report_free(oes_report* report);

/* Threshold scan on truth-labelled data. A negative track_retention keeps the
 * configured fit.chi2_max. Returns OES_ERR_UNREACHABLE, with *tuned and
 * *summary still filled in, when a stage misses its target. */
OES_API oes_status oes_tune(const oes_config* base, const char* in,
                            const char* truth, double cut_retention,
                            double track_retention, double signal_retention,
                            oes_config** tuned, char** summary);

/* Throughput over `in` held in memory, `repeat` runs per worker count.
 * median_fps (may be NULL) receives n_workers values. */
OES_API oes_status oes_bench(const oes_config* config, const char* in,
                             const size_t* workers, size_t n_workers,
                             size_t repeat, double* median_fps, char** table);

/* Text description of one frame; `truth` may be NULL. */
OES_API oes_status oes_inspect(const oes_config* config, const char* in,
                               const char* truth, uint64_t frame_id, char** text);

#ifdef __cplusplus
}
#endif

#endif
