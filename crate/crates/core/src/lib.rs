//! Auditing human expertise with a pair-swap conditional-independence test.
//!
//! Given records `(x, y, y_hat)` of features, outcomes and expert forecasts,
//! the test asks whether `y_hat` carries information about `y` beyond what
//! `x` already contains (`Y ⊥ Ŷ | X`). Nearby feature vectors are paired
//! greedily, the paired forecasts are swapped at random `K` times, and the
//! observed loss is ranked against the swapped losses.
//!
//! Module map:
//!
//! - [`dataset`], [`loss`], [`metric`], [`rng`]: shared domain types.
//! - [`matching`]: greedy closest-pair selection and a brute-force minimax oracle.
//! - [`engine`]: swap resampling, the `τ` statistic and the binary-outcome closed form.
//! - [`bounds`]: type-I error bounds and the adjusted rejection threshold.
//! - [`synthgen`]: synthetic generators and simulation studies.
//! - [`io`] and [`report`]: CSV ingestion, normalization and report emission.

pub mod bounds;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod io;
pub mod loss;
pub mod matching;
pub mod metric;
pub mod report;
pub mod rng;
pub mod synthgen;

pub use bounds::{
    adjusted_threshold, epsilon_star, tv_coin_bound, type1_bound, validity_bound, OddsRatioSource, Type1Bound,
    ValidityBound,
};
pub use dataset::{Dataset, Observation};
pub use engine::{
    classify_swaps, exact_binary_p, expert_test, expert_test_with_matching, resample_once, tau_statistic, SwapCounts,
    TestConfig, TestResult,
};
pub use error::{Error, Result};
pub use io::{load_csv, normalize_features, read_csv, write_csv, write_rows_csv, ColumnSpec};
pub use loss::{dataset_loss, LossSpec};
pub use matching::{brute_force_optimal_matching, greedy_match, pair_distance_summary, Matching, PairDistanceSummary};
pub use metric::DistanceMetric;
pub use report::{format_tau, run_report, Report, ReportConfig, ReportRow};
pub use rng::SeededRng;
