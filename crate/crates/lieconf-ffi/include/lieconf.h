/* C interface of the lieconf computer-algebra library. */

#ifndef LIECONF_H
#define LIECONF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Opaque handle to a parsed algebra definition.
 */
typedef struct LieconfAlgebra LieconfAlgebra;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread (caller frees).
 */
char *lieconf_last_error(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must have been returned by a `lieconf_*` function and not yet freed.
 */
void lieconf_string_free(char *s);

/**
 * Parse a definition file. On success writes a fresh handle to `out` and
 * returns 0.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
int32_t lieconf_parse(const char *text, struct LieconfAlgebra **out);

/**
 * The built-in counterexample vertex algebra.
 */
struct LieconfAlgebra *lieconf_example(void);

/**
 * Release an algebra handle.
 *
 * # Safety
 * `alg` must come from `lieconf_parse` or `lieconf_example` and not yet be
 * freed.
 */
void lieconf_algebra_free(struct LieconfAlgebra *alg);

/**
 * Name of the algebra (caller frees).
 *
 * # Safety
 * `alg` must be a live handle.
 */
char *lieconf_algebra_name(const struct LieconfAlgebra *alg);

/**
 * Canonical definition text of the algebra (caller frees).
 *
 * # Safety
 * `alg` must be a live handle.
 */
char *lieconf_serialize(const struct LieconfAlgebra *alg);

/**
 * Axiom check; returns 0 when all axioms hold, 2 on violations.
 *
 * # Safety
 * `alg` must be a live handle and `out` a valid pointer.
 */
int32_t lieconf_check_json(const struct LieconfAlgebra *alg, int64_t truncation, char **out);

/**
 * Classification report (solvability, nilpotence, series data, centre).
 *
 * # Safety
 * `alg` must be a live handle and `out` a valid pointer.
 */
int32_t lieconf_classify_json(const struct LieconfAlgebra *alg, uintptr_t cap, char **out);

/**
 * Derived and central series report.
 *
 * # Safety
 * `alg` must be a live handle and `out` a valid pointer.
 */
int32_t lieconf_series_json(const struct LieconfAlgebra *alg, char **out);

/**
 * Modification of an element into a nilpotent-generating one.
 *
 * # Safety
 * `alg` must be a live handle, `element` a valid NUL-terminated string,
 * and `out` a valid pointer.
 */
int32_t lieconf_modify_json(const struct LieconfAlgebra *alg,
                            const char *element,
                            uintptr_t cap,
                            uint64_t seed,
                            char **out);

/**
 * Generalized weight decomposition for the adjoint action of an element;
 * with a null `element` on a vertex algebra, the root-space decomposition.
 *
 * # Safety
 * `alg` must be a live handle, `element` null or a valid NUL-terminated
 * string, and `out` a valid pointer.
 */
int32_t lieconf_decompose_json(const struct LieconfAlgebra *alg,
                               const char *element,
                               uintptr_t cap,
                               int64_t truncation,
                               uintptr_t budget,
                               uint64_t seed,
                               char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIECONF_H */
