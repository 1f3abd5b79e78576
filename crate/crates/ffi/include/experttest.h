#ifndef EXPERTTEST_H
#define EXPERTTEST_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EtLossKind {
  ET_LOSS_KIND_ZERO_ONE = 0,
  ET_LOSS_KIND_SQUARED,
  ET_LOSS_KIND_WEIGHTED_BINARY,
} EtLossKind;

typedef enum EtStatus {
  ET_STATUS_OK = 0,
  ET_STATUS_NULL_POINTER,
  ET_STATUS_INVALID_DATASET,
  ET_STATUS_INVALID_CONFIG,
  ET_STATUS_INCOMPATIBLE_LOSS,
  ET_STATUS_NON_BINARY_DATA,
  ET_STATUS_TOO_MANY_PAIRS,
  ET_STATUS_INSTANCE_TOO_LARGE,
  ET_STATUS_ENUMERATION_TOO_LARGE,
  ET_STATUS_INDEX_OUT_OF_RANGE,
  ET_STATUS_INTERNAL,
} EtStatus;

// Opaque dataset handle.
typedef struct EtDataset EtDataset;

// Opaque matching handle.
typedef struct EtMatching EtMatching;

// Test configuration. `fp_cost` and `fn_cost` are read only for
// `WeightedBinary`. A null `metric_weights` selects the Euclidean metric.
typedef struct EtConfig {
  size_t pairs;
  size_t resamples;
  double alpha;
  enum EtLossKind loss;
  double fp_cost;
  double fn_cost;
  uint64_t seed;
  const double *metric_weights;
  size_t metric_weights_len;
} EtConfig;

typedef struct EtResult {
  double tau;
  double effective_p;
  bool rejected;
  size_t pairs;
  size_t resamples;
  size_t mismatch_count;
  double observed_loss;
  // When false the swap counts are zero and meaningless.
  bool has_swap_counts;
  size_t swaps_increase;
  size_t swaps_decrease;
  size_t swaps_neutral;
} EtResult;

typedef struct EtType1Bound {
  double tight;
  double union_bound;
} EtType1Bound;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null if none.
//
// The pointer stays valid until the next failing call on this thread.
const char *et_last_error_message(void);

// Defaults: 1000 resamples, alpha 0.05, squared loss, Euclidean metric, seed 0.
struct EtConfig et_config_default(size_t pairs);

// Builds a dataset from `n` row-major feature rows of width `dim` and the
// outcome and prediction columns of length `n`. The inputs are copied.
//
// # Safety
// `features` must point to `n * dim` values, `y` and `y_hat` to `n` values.
enum EtStatus et_dataset_new(const double *features,
                             size_t n,
                             size_t dim,
                             const double *y,
                             const double *y_hat,
                             struct EtDataset **out);

// # Safety
// `d` must be null or a handle from [`et_dataset_new`] not yet freed.
void et_dataset_free(struct EtDataset *d);

// Number of records, or 0 for a null handle.
//
// # Safety
// `d` must be null or a live dataset handle.
size_t et_dataset_len(const struct EtDataset *d);

// # Safety
// `d` must be null or a live dataset handle.
size_t et_dataset_dim(const struct EtDataset *d);

// Greedy matching of `pairs` closest pairs under `cfg`'s metric.
//
// # Safety
// `d` and `cfg` must be valid; `out` must be writable.
enum EtStatus et_greedy_match(const struct EtDataset *d,
                              const struct EtConfig *cfg,
                              struct EtMatching **out);

// # Safety
// `m` must be null or a handle from [`et_greedy_match`] not yet freed.
void et_matching_free(struct EtMatching *m);

// # Safety
// `m` must be null or a live matching handle.
size_t et_matching_len(const struct EtMatching *m);

// # Safety
// `m` must be null or a live matching handle.
size_t et_matching_mismatch_count(const struct EtMatching *m);

// # Safety
// `m` must be null or a live matching handle.
double et_matching_max_distance(const struct EtMatching *m);

// Pair `index` in selection order.
//
// # Safety
// `m` must be a live matching handle; the outputs must be writable.
enum EtStatus et_matching_pair(const struct EtMatching *m,
                               size_t index,
                               size_t *i,
                               size_t *j,
                               double *distance);

// Matches, resamples and decides.
//
// # Safety
// `d` and `cfg` must be valid; `out` must be writable.
enum EtStatus et_expert_test(const struct EtDataset *d,
                             const struct EtConfig *cfg,
                             struct EtResult *out);

// Runs the test on the first `cfg.pairs` pairs of an existing matching.
//
// # Safety
// `d`, `m` and `cfg` must be valid; `out` must be writable.
enum EtStatus et_expert_test_with_matching(const struct EtDataset *d,
                                           const struct EtMatching *m,
                                           const struct EtConfig *cfg,
                                           struct EtResult *out);

// Limit of `τ` for binary data as the number of resamples grows.
//
// # Safety
// `out` must be writable.
enum EtStatus et_exact_binary_p(size_t increase, size_t decrease, double *out);

// Type-I error bounds; `resamples == 0` gives the limit of infinitely many resamples.
//
// # Safety
// `out` must be writable.
enum EtStatus et_type1_bound(double alpha,
                             double epsilon_star,
                             size_t pairs,
                             size_t resamples,
                             struct EtType1Bound *out);

// Rejection threshold that keeps the type-I error at `alpha` under a smoothness constant.
//
// # Safety
// `m` must be a live matching handle; `out` must be writable.
enum EtStatus et_adjusted_threshold(double alpha,
                                    double smoothness,
                                    const struct EtMatching *m,
                                    size_t pairs,
                                    size_t resamples,
                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EXPERTTEST_H */
