#ifndef MARSAD_H
#define MARSAD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of an FFI call.
typedef enum MarsadStatus {
  MARSAD_STATUS_OK = 0,
  // Null pointer, bad UTF-8 or an unparsable option.
  MARSAD_STATUS_INVALID_ARGUMENT = 1,
  MARSAD_STATUS_NOT_FOUND = 2,
  // Input rejected by validation.
  MARSAD_STATUS_VALIDATION = 3,
  // Conflicting state, e.g. exporting an unfinished job.
  MARSAD_STATUS_CONFLICT = 4,
  MARSAD_STATUS_INTERNAL = 5,
  // A panic was caught at the boundary.
  MARSAD_STATUS_PANIC = 6,
} MarsadStatus;

// Opaque engine handle.
typedef struct MarsadHandle MarsadHandle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Open (creating if needed) a data directory. `config_path` may be null
// for defaults; a non-null `data_dir` overrides the config's.
//
// # Safety
// String arguments are null or NUL-terminated; `out` is writable.
enum MarsadStatus marsad_open(const char *data_dir,
                              const char *config_path,
                              struct MarsadHandle **out);

// Release a handle. Null is ignored.
//
// # Safety
// `h` is null or a handle from [`marsad_open`] not yet closed.
void marsad_close(struct MarsadHandle *h);

// Validate and store `len` bytes of `format` (csv, tsv, json, jsonl).
// `schema_json` may be null for the default schema. Writes the ingest
// outcome as JSON to `out_json`.
//
// # Safety
// `data` points at `len` readable bytes; other pointers as documented.
enum MarsadStatus marsad_ingest(const struct MarsadHandle *h,
                                const char *name,
                                const uint8_t *data,
                                size_t len,
                                const char *format,
                                const char *schema_json,
                                char **out_json);

// Run an analysis synchronously. `kind` is one of subtopics, wordcloud,
// sentiment, propaganda, trends, spatial, network, post_analysis. A
// negative `seed` uses the configured default. Writes the payload JSON to
// `out_json` and the recorded job id to `out_job_id` (may be null).
//
// # Safety
// Pointers as documented.
enum MarsadStatus marsad_analyze(const struct MarsadHandle *h,
                                 const char *dataset_id,
                                 const char *kind,
                                 int64_t seed,
                                 char **out_json,
                                 char **out_job_id);

// Export a finished job as `csv` or `json`.
//
// # Safety
// Pointers as documented.
enum MarsadStatus marsad_export(const struct MarsadHandle *h,
                                const char *job_id,
                                const char *format,
                                char **out);

// Fold a dataset's sentiment annotations into the lexicon; writes the
// feedback report JSON.
//
// # Safety
// Pointers as documented.
enum MarsadStatus marsad_apply_feedback(const struct MarsadHandle *h,
                                        const char *dataset_id,
                                        char **out_json);

// Message of the last failed call on this thread, or null. Valid until the
// next call on the same thread; do not free.
const char *marsad_last_error(void);

// Release a string returned through an `out` parameter. Null is ignored.
//
// # Safety
// `s` is null or came from this library and has not been freed.
void marsad_string_free(char *s);

// Library version, static storage.
const char *marsad_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MARSAD_H */
