#ifndef LEVELS_LAB_H
#define LEVELS_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LlMap {
  LL_MAP_F = 0,
  LL_MAP_G = 1,
} LlMap;

typedef enum LlPointKind {
  /**
   * `a_n`, indexed by `n`.
   */
  LL_POINT_KIND_A = 0,
  LL_POINT_KIND_B = 1,
  LL_POINT_KIND_C = 2,
  LL_POINT_KIND_U = 3,
  LL_POINT_KIND_V = 4,
} LlPointKind;

typedef enum LlSchedule {
  LL_SCHEDULE_POWERS_OF_TWO = 0,
  LL_SCHEDULE_LINEAR = 1,
} LlSchedule;

typedef enum LlStatus {
  LL_STATUS_OK = 0,
  LL_STATUS_NULL_POINTER = 1,
  LL_STATUS_PARAMETER = 2,
  LL_STATUS_RANGE = 3,
  LL_STATUS_DOMAIN = 4,
  LL_STATUS_INCONSISTENT = 5,
  LL_STATUS_CONSTRUCTION = 6,
  LL_STATUS_ESCAPE = 7,
  LL_STATUS_THRESHOLD = 8,
  LL_STATUS_INVALID_UTF8 = 9,
  LL_STATUS_PANIC = 10,
} LlStatus;

/**
 * Opaque model handle.
 */
typedef struct LlModel LlModel;

typedef struct LlCertificate {
  uint32_t k;
  uint64_t m;
  uint64_t word_length;
  double start_x;
  double end_x;
  double margin;
  double relative_margin;
} LlCertificate;

typedef struct LlParameterCheck {
  double product;
  bool product_ok;
  double inverse_tail;
  bool inverse_tail_ok;
  bool theta_ok;
  bool pass;
} LlParameterCheck;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a model with `θ = α + ε` and the default `ε` for `alpha`, and
 * `n_neg = 32`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum LlStatus ll_model_new(double alpha,
                           uint32_t k_max,
                           enum LlSchedule schedule_kind,
                           struct LlModel **out);

/**
 * Builds a model with every parameter given explicitly.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum LlStatus ll_model_new_explicit(double alpha,
                                    double epsilon,
                                    double theta,
                                    uint32_t k_max,
                                    uint32_t n_neg,
                                    enum LlSchedule schedule_kind,
                                    struct LlModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from `ll_model_new*` and not be used afterwards.
 */
void ll_model_free(struct LlModel *model);

/**
 * Global endpoints `[left, right]` of the materialized range.
 *
 * # Safety
 * Pointers must be valid; `model` must be a live handle.
 */
enum LlStatus ll_model_range(const struct LlModel *model, double *left, double *right);

/**
 * Global coordinate of a named point (`a_n`, or `b_k, c_k, u_k, v_k`).
 *
 * # Safety
 * Pointers must be valid; `model` must be a live handle.
 */
enum LlStatus ll_point(const struct LlModel *model,
                       enum LlPointKind kind,
                       int64_t index,
                       double *x);

/**
 * `f`, `g` or an inverse at the global point `x`: writes `y` and `dy/dx`.
 *
 * # Safety
 * Pointers must be valid; `model` must be a live handle.
 */
enum LlStatus ll_eval(const struct LlModel *model,
                      enum LlMap map,
                      bool inverse,
                      double x,
                      double *y,
                      double *dydx);

/**
 * Applies a word such as `"F^-2 G^3"` (first letter acts first).
 *
 * # Safety
 * `word` must be a NUL-terminated string; other pointers must be valid.
 */
enum LlStatus ll_apply_word(const struct LlModel *model,
                            const char *word,
                            double x,
                            double *y,
                            double *dydx);

/**
 * Descent certificate from `u_k` with at most `m_max` leading `g^-1` steps.
 *
 * # Safety
 * Pointers must be valid; `model` must be a live handle.
 */
enum LlStatus ll_descent_certificate(const struct LlModel *model,
                                     uint32_t k,
                                     uint64_t m_max,
                                     struct LlCertificate *out);

/**
 * The partition as a JSON document; release with [`ll_string_free`].
 *
 * # Safety
 * Pointers must be valid; `model` must be a live handle.
 */
enum LlStatus ll_table_json(const struct LlModel *model, char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void ll_string_free(char *s);

/**
 * The three parameter conditions.
 *
 * # Safety
 * `out` must be valid.
 */
enum LlStatus ll_check_parameters(double alpha,
                                  double theta,
                                  double epsilon,
                                  struct LlParameterCheck *out);

/**
 * Default `(θ, ε)` for `alpha`; fails with `Threshold` above the golden bound.
 *
 * # Safety
 * Pointers must be valid.
 */
enum LlStatus ll_default_theta_epsilon(double alpha, double *theta, double *epsilon);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`) and returns the full message length.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null with `len == 0`.
 */
size_t ll_last_error(char *buf, size_t len);

/**
 * Library version, a static NUL-terminated string.
 */
const char *ll_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEVELS_LAB_H */
