#ifndef REALMONO_H
#define REALMONO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RmStatus {
  RM_STATUS_OK = 0,
  RM_STATUS_NULL_POINTER = 1,
  RM_STATUS_NUMERICAL = 2,
  RM_STATUS_INVALID_INPUT = 3,
  RM_STATUS_PANIC = 4,
} RmStatus;

typedef struct RmRegionMap RmRegionMap;

typedef struct RmSolutions RmSolutions;

typedef struct RmStructure RmStructure;

typedef struct RmSystem RmSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the next failing call.
const char *rm_last_error(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must come from this library and not be freed twice.
void rm_string_free(char *s);

// Loads a builtin system by name (`ex21`, `univariate`, `modified34`, `kuramoto3`, `rpr3`).
//
// # Safety
// `name` must be a nul-terminated string; `out` must be writable.
enum RmStatus rm_system_builtin(const char *name, struct RmSystem **out);

// Parses a system from its text form.
//
// # Safety
// `text` must be a nul-terminated string; `out` must be writable.
enum RmStatus rm_system_parse(const char *text, struct RmSystem **out);

// # Safety
// `sys` must be null or a handle from `rm_system_*` not yet freed.
void rm_system_free(struct RmSystem *sys);

// Number of variables, or 0 for a null handle.
//
// # Safety
// `sys` must be null or a live handle.
uintptr_t rm_system_num_vars(const struct RmSystem *sys);

// Number of parameters, or 0 for a null handle.
//
// # Safety
// `sys` must be null or a live handle.
uintptr_t rm_system_num_params(const struct RmSystem *sys);

// Solves at the real parameter `base[0..n]` and labels the real solutions.
// Fails with `RM_STATUS_NUMERICAL` if the point is not generic.
//
// # Safety
// `sys` must be live, `base` must point to `n` doubles, `out` must be writable.
enum RmStatus rm_solve(const struct RmSystem *sys,
                       const double *base,
                       uintptr_t n,
                       uint64_t seed,
                       struct RmSolutions **out);

// # Safety
// `sol` must be null or a live handle.
void rm_solutions_free(struct RmSolutions *sol);

// Number of complex solutions, or 0 for a null handle.
//
// # Safety
// `sol` must be null or a live handle.
uintptr_t rm_solutions_degree(const struct RmSolutions *sol);

// Number of real solutions, or 0 for a null handle.
//
// # Safety
// `sol` must be null or a live handle.
uintptr_t rm_solutions_real_count(const struct RmSolutions *sol);

// Copies real solution `label` (1-based) into `out[0..len]`; `len` must equal the number of variables.
//
// # Safety
// `sol` must be live and `out` must point to `len` writable doubles.
enum RmStatus rm_solutions_real(const struct RmSolutions *sol,
                                uintptr_t label,
                                double *out,
                                uintptr_t len);

// Order of the complex monodromy group found from random loops at `sol`.
//
// # Safety
// Handles must be live; `order` must be writable.
enum RmStatus rm_monodromy_order(const struct RmSystem *sys,
                                 const struct RmSolutions *sol,
                                 uint64_t seed,
                                 uintptr_t max_loops,
                                 uint64_t *order);

// Scans the window `[lo, hi]` (each of length `n`) at `res[0..n]` nodes per axis and builds the region map.
//
// # Safety
// Handles must be live; `lo`, `hi` and `res` must point to `n` values; `out` must be writable.
enum RmStatus rm_regions(const struct RmSystem *sys,
                         const struct RmSolutions *sol,
                         const double *lo,
                         const double *hi,
                         const uintptr_t *res,
                         uintptr_t n,
                         uint64_t seed,
                         struct RmRegionMap **out);

// # Safety
// `map` must be null or a live handle.
void rm_region_map_free(struct RmRegionMap *map);

// Number of regions, or 0 for a null handle.
//
// # Safety
// `map` must be null or a live handle.
uintptr_t rm_region_map_len(const struct RmRegionMap *map);

// The region map as JSON; free with `rm_string_free`. Null on a null handle.
//
// # Safety
// `map` must be null or a live handle.
char *rm_region_map_json(const struct RmRegionMap *map);

// Computes the real monodromy structure at `sol` over `map`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum RmStatus rm_real_structure(const struct RmSystem *sys,
                                const struct RmSolutions *sol,
                                const struct RmRegionMap *map,
                                uint64_t seed,
                                struct RmStructure **out);

// # Safety
// `s` must be null or a live handle.
void rm_structure_free(struct RmStructure *s);

// Whether the real monodromy action is `k`-transitive; false for a null handle or `k` out of range.
//
// # Safety
// `s` must be null or a live handle.
bool rm_structure_is_k_transitive(const struct RmStructure *s, uintptr_t k);

// Plain-text listing of the structure; free with `rm_string_free`. Null on a null handle.
//
// # Safety
// `s` must be null or a live handle.
char *rm_structure_report(const struct RmStructure *s);

// Full result as JSON; free with `rm_string_free`. Null on a null handle.
//
// # Safety
// `s` must be null or a live handle.
char *rm_structure_json(const struct RmStructure *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REALMONO_H */
