#ifndef FLOWLAT_H
#define FLOWLAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FlowlatStatus {
  /**
   * Success; for decisions, the property holds.
   */
  FLOWLAT_STATUS_OK = 0,
  /**
   * The judgement, check, or test does not hold.
   */
  FLOWLAT_STATUS_FALSE = 1,
  FLOWLAT_STATUS_NULL_ARGUMENT = 2,
  FLOWLAT_STATUS_INVALID_UTF8 = 3,
  FLOWLAT_STATUS_PARSE_ERROR = 4,
  FLOWLAT_STATUS_LATTICE_ERROR = 5,
  FLOWLAT_STATUS_TYPE_ERROR = 6,
  FLOWLAT_STATUS_HARNESS_ERROR = 7,
  FLOWLAT_STATUS_PANIC = 8,
} FlowlatStatus;

typedef struct FlowlatEnv FlowlatEnv;

typedef struct FlowlatLattice FlowlatLattice;

typedef struct FlowlatProgram FlowlatProgram;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message for the most recent failure on this thread, or NULL. Valid
 * until the next failing call on the same thread.
 */
const char *flowlat_last_error(void);

/**
 * Library version as a static string.
 */
const char *flowlat_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void flowlat_string_free(char *s);

/**
 * A built-in lattice: `two-point` or `diamond`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum FlowlatStatus flowlat_lattice_builtin(const char *name, struct FlowlatLattice **out);

/**
 * A lattice from spec-file text (`lattice`, `elements`, `order` lines).
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum FlowlatStatus flowlat_lattice_parse(const char *spec, struct FlowlatLattice **out);

/**
 * The powerset lattice over a comma-separated list of variables.
 *
 * # Safety
 * `universe` must be a NUL-terminated string; `out` must be writable.
 */
enum FlowlatStatus flowlat_lattice_powerset(const char *universe, struct FlowlatLattice **out);

/**
 * # Safety
 * `lattice` must be NULL or a handle from this library and not yet freed.
 */
void flowlat_lattice_free(struct FlowlatLattice *lattice);

/**
 * Element-wise order test; writes the result to `out`.
 *
 * # Safety
 * `lattice` must be a live handle, `a`/`b` NUL-terminated strings, `out`
 * writable.
 */
enum FlowlatStatus flowlat_lattice_leq(const struct FlowlatLattice *lattice,
                                       const char *a,
                                       const char *b,
                                       bool *out);

/**
 * Parses a program; with `fixed` set, `x@T` variables are accepted.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum FlowlatStatus flowlat_program_parse(const char *text, bool fixed, struct FlowlatProgram **out);

/**
 * # Safety
 * `program` must be a live handle; `out` must be writable.
 */
enum FlowlatStatus flowlat_program_to_string(const struct FlowlatProgram *program, char **out);

/**
 * # Safety
 * `program` must be NULL or a handle from this library and not yet freed.
 */
void flowlat_program_free(struct FlowlatProgram *program);

/**
 * Parses an environment over `lattice`: either inline bindings
 * (`l:L,h:H`) or environment-file text (`x : L` lines).
 *
 * # Safety
 * `lattice` must be a live handle, `text` a NUL-terminated string, `out`
 * writable.
 */
enum FlowlatStatus flowlat_env_parse(const struct FlowlatLattice *lattice,
                                     const char *text,
                                     struct FlowlatEnv **out);

/**
 * Renders an environment as environment-file text.
 *
 * # Safety
 * `env` must be a live handle; `out` must be writable.
 */
enum FlowlatStatus flowlat_env_to_string(const struct FlowlatEnv *env, char **out);

/**
 * # Safety
 * `env` must be NULL or a handle from this library and not yet freed.
 */
void flowlat_env_free(struct FlowlatEnv *env);

/**
 * The least post-environment of `program` from `pre` at `pc` (NULL for
 * bottom).
 *
 * # Safety
 * Handles must be live, `pc` NULL or a NUL-terminated string, `out`
 * writable.
 */
enum FlowlatStatus flowlat_infer(const struct FlowlatProgram *program,
                                 const struct FlowlatEnv *pre,
                                 const char *pc,
                                 struct FlowlatEnv **out);

/**
 * Decides `pc |- pre {program} post`: `FLOWLAT_STATUS_OK` when derivable,
 * `FLOWLAT_STATUS_FALSE` when not.
 *
 * # Safety
 * Handles must be live and `pc` NULL or a NUL-terminated string.
 */
enum FlowlatStatus flowlat_check(const struct FlowlatProgram *program,
                                 const struct FlowlatEnv *pre,
                                 const struct FlowlatEnv *post,
                                 const char *pc);

/**
 * The dependency sets of the principal typing, as environment-file text
 * over the powerset of the program's variables.
 *
 * # Safety
 * `program` must be a live handle; `out` must be writable.
 */
enum FlowlatStatus flowlat_principal(const struct FlowlatProgram *program, char **out);

/**
 * Translates to a fixed-variable program. `out_post` and `out_inserted`
 * may be NULL.
 *
 * # Safety
 * Handles must be live, `pc` NULL or a NUL-terminated string, non-NULL out
 * pointers writable.
 */
enum FlowlatStatus flowlat_transform(const struct FlowlatProgram *program,
                                     const struct FlowlatEnv *pre,
                                     const char *pc,
                                     struct FlowlatProgram **out_program,
                                     struct FlowlatEnv **out_post,
                                     size_t *out_inserted);

/**
 * Flow-insensitive check of a fixed-variable program at `pc`.
 *
 * # Safety
 * Handles must be live and `pc` NULL or a NUL-terminated string.
 */
enum FlowlatStatus flowlat_check_fixed(const struct FlowlatLattice *lattice,
                                       const struct FlowlatProgram *program,
                                       const char *pc);

/**
 * Exhaustive noninterference test of `pre {program} post` over `domain`
 * (NULL for {0, 1}) with the given fuel (0 for the default). Returns
 * `FLOWLAT_STATUS_OK` on pass and `FLOWLAT_STATUS_FALSE` otherwise. When
 * `report` is non-NULL it receives a JSON record with the verdict,
 * witness, and statistics.
 *
 * # Safety
 * Handles must be live; `domain` must point to `domain_len` values when
 * non-NULL; `report` must be NULL or writable.
 */
enum FlowlatStatus flowlat_test_ni(const struct FlowlatProgram *program,
                                   const struct FlowlatEnv *pre,
                                   const struct FlowlatEnv *post,
                                   const int64_t *domain,
                                   size_t domain_len,
                                   uint64_t fuel,
                                   char **report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLOWLAT_H */
