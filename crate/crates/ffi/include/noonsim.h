#ifndef NOONSIM_H
#define NOONSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NoonsimStatus {
  NOONSIM_STATUS_OK = 0,
  NOONSIM_STATUS_NULL_POINTER = 1,
  NOONSIM_STATUS_INVALID_ARGUMENT = 2,
  NOONSIM_STATUS_INVALID_UTF8 = 3,
  NOONSIM_STATUS_PARSE_ERROR = 4,
  NOONSIM_STATUS_RUNTIME_ERROR = 5,
  NOONSIM_STATUS_PANIC = 6,
} NoonsimStatus;

/*
 Opaque parsed program.
 */
typedef struct NoonsimProgram NoonsimProgram;

/*
 Opaque state vector.
 */
typedef struct NoonsimState NoonsimState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *noonsim_version(void);

/*
 Why the most recent call on this thread failed, or NULL if it succeeded.
 Free with `noonsim_string_free`.
 */
char *noonsim_last_error(void);

/*
 Releases a string returned by this library. NULL is ignored.

 # Safety
 `s` must come from this library and not be freed twice.
 */
void noonsim_string_free(char *s);

/*
 Creates `|N,N⟩`.

 # Safety
 `out` must be a valid pointer.
 */
enum NoonsimStatus noonsim_state_dual_fock(uint32_t n, struct NoonsimState **out);

/*
 Parses a state from its JSON form
 (`{"modes": M, "terms": [{"occ": [...], "re": x, "im": y}, ...]}`).

 # Safety
 `json` must be NUL-terminated; `out` must be a valid pointer.
 */
enum NoonsimStatus noonsim_state_from_json(const char *json, struct NoonsimState **out);

/*
 Serializes a state to JSON. Free the result with `noonsim_string_free`.

 # Safety
 `state` must be a live handle; `out` must be a valid pointer.
 */
enum NoonsimStatus noonsim_state_to_json(const struct NoonsimState *state, char **out);

/*
 # Safety
 `state` must be a live handle; `out` must be a valid pointer.
 */
enum NoonsimStatus noonsim_state_mode_count(const struct NoonsimState *state, uintptr_t *out);

/*
 Releases a state handle. NULL is ignored.

 # Safety
 `state` must come from this library and not be freed twice.
 */
void noonsim_state_free(struct NoonsimState *state);

/*
 Fidelity of a two-mode state with the closest N00N state, and the phase
 `φ` of `|S,0⟩ + e^{iφ}|0,S⟩` attaining it.

 # Safety
 `state` must be a live handle; `fidelity` and `phase` must be valid pointers.
 */
enum NoonsimStatus noonsim_noon_fidelity(const struct NoonsimState *state,
                                         double *fidelity,
                                         double *phase);

/*
 Parses and validates `.qoc` source. On a parse error the message
 (with line and column) is available from `noonsim_last_error`.

 # Safety
 `source` must be NUL-terminated; `out` must be a valid pointer.
 */
enum NoonsimStatus noonsim_program_parse(const char *source, struct NoonsimProgram **out);

/*
 Source of a bundled program by file name (e.g. `"pipeline.qoc"`), or NULL.
 The string is static and must not be freed.

 # Safety
 `name` must be NUL-terminated or NULL.
 */
const char *noonsim_bundled_program(const char *name);

/*
 Releases a program handle. NULL is ignored.

 # Safety
 `program` must come from this library and not be freed twice.
 */
void noonsim_program_free(struct NoonsimProgram *program);

/*
 Runs a program on a state, following every detection outcome.

 `params_json` is a JSON object of parameter values (`{"f": 0.5}`) or NULL.
 The result is a JSON array of branches with fields `registers`,
 `probability`, `discarded` and `state`.

 # Safety
 Handles must be live; strings NUL-terminated or NULL where allowed;
 `out_json` must be a valid pointer.
 */
enum NoonsimStatus noonsim_program_run(const struct NoonsimProgram *program,
                                       const struct NoonsimState *input,
                                       const char *params_json,
                                       char **out_json);

/*
 Exhaustive generator run summarized as JSON. `p_min = 0` selects the
 default minimum output size.

 # Safety
 `out_json` must be a valid pointer.
 */
enum NoonsimStatus noonsim_generate_summary(uint32_t n, double f, uint32_t p_min, char **out_json);

/*
 Closed-form condensation probability.

 # Safety
 `out` must be a valid pointer.
 */
enum NoonsimStatus noonsim_p_cond(uint32_t n, uint32_t r, double *out);

/*
 Localized relative phase for detector counts `(l, r)`.

 # Safety
 `out` must be a valid pointer.
 */
enum NoonsimStatus noonsim_delta0(uint32_t l, uint32_t r, double *out);

/*
 Large-N cat fidelity for a ratio of detected to remaining photons.

 # Safety
 `out` must be a valid pointer.
 */
enum NoonsimStatus noonsim_asymptotic_fidelity(double ratio, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOONSIM_H */
