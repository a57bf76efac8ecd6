#ifndef CTXLAB_H
#define CTXLAB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdint.h>

typedef enum {
  CTXLAB_STATUS_OK = 0,
  CTXLAB_STATUS_NULL_ARGUMENT = 1,
  CTXLAB_STATUS_INVALID_UTF8 = 2,
  // Malformed JSON, schema violations, bad rationals.
  CTXLAB_STATUS_PARSE = 3,
  // Well-formed input that breaks a model, procedure or protocol rule.
  CTXLAB_STATUS_INVALID = 4,
  CTXLAB_STATUS_UNKNOWN_FIXTURE = 5,
  // A search hit its candidate cap.
  CTXLAB_STATUS_LIMIT = 6,
  // A bug: the library panicked.
  CTXLAB_STATUS_INTERNAL = 7,
} CtxlabStatus;

// An empirical model, possibly with a per-site reading.
typedef struct CtxlabModel CtxlabModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// The message of the last failing call on this thread, or null. Owned by
// the library; valid until the next failing call.
const char *ctxlab_last_error(void);

// Frees a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void ctxlab_string_free(char *s);

// Reads a model from JSON text: a single model document, or a workspace
// holding exactly one model.
//
// # Safety
// `json` must be a nul-terminated string; `out` must be writable.
CtxlabStatus ctxlab_model_from_json(const char *json, CtxlabModel **out);

// A named fixture (`triangle`, `pr`, `noisy_pr`, `trivial`). `lambda` is
// the noise weight for `noisy_pr` as `"n/d"` and may be null otherwise.
//
// # Safety
// `name` and a non-null `lambda` must be nul-terminated; `out` must be
// writable.
CtxlabStatus ctxlab_model_fixture(const char *name, const char *lambda, CtxlabModel **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `model` must come from this library and not have been freed.
void ctxlab_model_free(CtxlabModel *model);

// Canonical JSON for the model. Free the result with `ctxlab_string_free`.
//
// # Safety
// `model` must be a live handle; `out` must be writable.
CtxlabStatus ctxlab_model_to_json(const CtxlabModel *model, char **out);

// The noncontextual fraction as exact `"n/d"` text. Free the result with
// `ctxlab_string_free`.
//
// # Safety
// `model` must be a live handle; `out` must be writable.
CtxlabStatus ctxlab_model_ncf(const CtxlabModel *model, char **out);

// Writes 1 if the model is contextual and 0 otherwise.
//
// # Safety
// `model` must be a live handle; `out` must be writable.
CtxlabStatus ctxlab_model_is_contextual(const CtxlabModel *model, int *out);

// `a ⊗ b` for flat models, `a ⊠ b` when both carry sites.
//
// # Safety
// `a` and `b` must be live handles; `out` must be writable.
CtxlabStatus ctxlab_model_combine(const CtxlabModel *a, const CtxlabModel *b, CtxlabModel **out);

// Runs one command-line invocation in-process. `argv[0]` is the program
// name. Captured output is returned through `out_stdout` and `out_stderr`
// (free both with `ctxlab_string_free`); either may be null to discard it.
//
// # Safety
// `argv` must hold `argc` nul-terminated strings; `exit_code` must be
// writable.
CtxlabStatus ctxlab_run(int argc,
                        const char *const *argv,
                        int *exit_code,
                        char **out_stdout,
                        char **out_stderr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CTXLAB_H */
