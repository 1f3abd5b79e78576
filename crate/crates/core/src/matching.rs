//! Disjoint closest-pair selection.
//!
//! [`greedy_match`] repeatedly takes the globally closest pair among the
//! remaining records; [`brute_force_optimal_matching`] enumerates every
//! matching of a given size and returns the best achievable maximum pair
//! distance, which bounds the greedy result from above at twice the size.

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metric::DistanceMetric;

/// Largest instance [`brute_force_optimal_matching`] will enumerate.
pub const BRUTE_FORCE_CAP: usize = 14;

/// `L` disjoint index pairs in selection order with their distances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
    distances: Vec<f64>,
    mismatch_count: usize,
}

impl Matching {
    /// Builds a matching from explicit pairs, computing distances under `metric`.
    ///
    /// Pairs must be disjoint, in range, and listed in nondecreasing distance order.
    pub fn from_pairs(d: &Dataset, pairs: Vec<(usize, usize)>, metric: &DistanceMetric) -> Result<Self> {
        metric.validate(d.dim())?;
        let mut used = vec![false; d.len()];
        for &(i, j) in &pairs {
            if i == j || i >= d.len() || j >= d.len() {
                return Err(Error::InvalidConfig(format!(
                    "invalid pair ({i}, {j}) for {} records",
                    d.len()
                )));
            }
            if used[i] || used[j] {
                return Err(Error::InvalidConfig(format!("pair ({i}, {j}) reuses an index")));
            }
            used[i] = true;
            used[j] = true;
        }
        let distances: Vec<f64> = pairs.iter().map(|&(i, j)| metric.distance(d.x(i), d.x(j))).collect();
        if distances.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidConfig(
                "pairs must be ordered by nondecreasing distance".into(),
            ));
        }
        Ok(Self::from_parts(pairs, distances))
    }

    fn from_parts(pairs: Vec<(usize, usize)>, distances: Vec<f64>) -> Self {
        let mismatch_count = distances.iter().filter(|&&v| v > 0.0).count();
        Self {
            pairs,
            distances,
            mismatch_count,
        }
    }

    pub fn empty() -> Self {
        Self::from_parts(Vec::new(), Vec::new())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    /// Number of pairs whose feature vectors differ.
    pub fn mismatch_count(&self) -> usize {
        self.mismatch_count
    }

    pub fn max_distance(&self) -> f64 {
        self.distances.last().copied().unwrap_or(0.0)
    }

    /// The first `len` selected pairs. Greedy selection is sequential, so this
    /// equals the greedy matching of size `len` on the same data.
    pub fn prefix(&self, len: usize) -> Matching {
        let len = len.min(self.len());
        Self::from_parts(self.pairs[..len].to_vec(), self.distances[..len].to_vec())
    }

    /// Checks every pair index against a dataset of `n` records.
    pub(crate) fn check_indices(&self, n: usize) -> Result<()> {
        match self.pairs.iter().find(|&&(i, j)| i >= n || j >= n) {
            Some(&(i, j)) => Err(Error::InvalidConfig(format!(
                "pair ({i}, {j}) is out of range for {n} records"
            ))),
            None => Ok(()),
        }
    }
}

fn check_pair_count(n: usize, pairs: usize) -> Result<()> {
    if pairs == 0 {
        return Err(Error::InvalidConfig("number of pairs must be at least 1".into()));
    }
    if pairs > n / 2 {
        return Err(Error::TooManyPairs {
            requested: pairs,
            max: n / 2,
        });
    }
    Ok(())
}

/// Selects `pairs` disjoint pairs, closest first.
///
/// Equivalent to removing the globally closest remaining pair `pairs` times,
/// with ties broken by the smaller `(i, j)` with `i < j`.
pub fn greedy_match(d: &Dataset, pairs: usize, metric: &DistanceMetric) -> Result<Matching> {
    metric.validate(d.dim())?;
    let n = d.len();
    check_pair_count(n, pairs)?;
    if n > u32::MAX as usize {
        return Err(Error::InvalidDataset("too many records for pairwise matching".into()));
    }

    let mut candidates: Vec<(f64, u32, u32)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let xi = d.x(i);
            (i + 1..n).map(move |j| (metric.distance(xi, d.x(j)), i as u32, j as u32))
        })
        .collect();
    // Keys are unique in (i, j), so the order is total and the result deterministic.
    candidates.par_sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut used = vec![false; n];
    let mut selected = Vec::with_capacity(pairs);
    let mut distances = Vec::with_capacity(pairs);
    for (dist, i, j) in candidates {
        let (i, j) = (i as usize, j as usize);
        if used[i] || used[j] {
            continue;
        }
        used[i] = true;
        used[j] = true;
        selected.push((i, j));
        distances.push(dist);
        if selected.len() == pairs {
            break;
        }
    }
    Ok(Matching::from_parts(selected, distances))
}

/// Minimax pair distance over every matching of exactly `pairs` pairs.
///
/// Exhaustive: walks all partial matchings, so it is limited to
/// [`BRUTE_FORCE_CAP`] records.
pub fn brute_force_optimal_matching(d: &Dataset, pairs: usize, metric: &DistanceMetric) -> Result<f64> {
    metric.validate(d.dim())?;
    let n = d.len();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::InstanceTooLarge {
            n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    check_pair_count(n, pairs)?;

    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| metric.distance(d.x(i), d.x(j))).collect())
        .collect();

    struct Search<'a> {
        dist: &'a [Vec<f64>],
        target: usize,
        best: f64,
    }

    impl Search<'_> {
        // `first` is the lowest index not yet decided; it is either left
        // unmatched or paired with some later free index.
        fn walk(&mut self, used: &mut [bool], first: usize, made: usize, worst: f64) {
            if made == self.target {
                self.best = self.best.min(worst);
                return;
            }
            let n = used.len();
            let Some(i) = (first..n).find(|&i| !used[i]) else {
                return;
            };
            let free = used[i..].iter().filter(|u| !**u).count();
            if free / 2 < self.target - made {
                return;
            }
            used[i] = true;
            for j in i + 1..n {
                if !used[j] {
                    used[j] = true;
                    self.walk(used, i + 1, made + 1, worst.max(self.dist[i][j]));
                    used[j] = false;
                }
            }
            self.walk(used, i + 1, made, worst);
            used[i] = false;
        }
    }

    let mut search = Search {
        dist: &dist,
        target: pairs,
        best: f64::INFINITY,
    };
    search.walk(&mut vec![false; n], 0, 0, 0.0);
    Ok(search.best)
}

/// Order statistics of a matching's pair distances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDistanceSummary {
    pub count: usize,
    pub zero_count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quartiles use linear interpolation between order statistics. `None` for an empty matching.
pub fn pair_distance_summary(m: &Matching) -> Option<PairDistanceSummary> {
    if m.is_empty() {
        return None;
    }
    let mut sorted = m.distances().to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let quantile = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    };
    Some(PairDistanceSummary {
        count: sorted.len(),
        zero_count: sorted.iter().filter(|&&v| v == 0.0).count(),
        min: sorted[0],
        q1: quantile(0.25),
        median: quantile(0.5),
        q3: quantile(0.75),
        max: sorted[sorted.len() - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Observation;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> Dataset {
        Dataset::new(xs.iter().map(|&x| Observation::new(vec![x], 0.0, 0.0)).collect()).unwrap()
    }

    fn points(rows: &[Vec<f64>]) -> Dataset {
        Dataset::new(rows.iter().map(|x| Observation::new(x.clone(), 0.0, 0.0)).collect()).unwrap()
    }

    #[test]
    fn greedy_on_line() {
        let d = line(&[0.0, 0.1, 1.0, 1.05]);
        let m = greedy_match(&d, 2, &DistanceMetric::Euclidean).unwrap();
        assert_eq!(m.pairs(), &[(2, 3), (0, 1)]);
        assert_abs_diff_eq!(m.distances()[0], 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(m.distances()[1], 0.1, epsilon = 1e-12);
        assert_eq!(m.mismatch_count(), 2);
    }

    #[test]
    fn duplicate_points_pair_at_zero() {
        let d = line(&[3.0, 3.0, 7.0]);
        let m = greedy_match(&d, 1, &DistanceMetric::Euclidean).unwrap();
        assert_eq!(m.pairs(), &[(0, 1)]);
        assert_eq!(m.distances(), &[0.0]);
        assert_eq!(m.mismatch_count(), 0);
    }

    #[test]
    fn ties_break_lexicographically() {
        // All four points coincide: every pair ties at distance 0.
        let d = line(&[5.0; 4]);
        let m = greedy_match(&d, 2, &DistanceMetric::Euclidean).unwrap();
        assert_eq!(m.pairs(), &[(0, 1), (2, 3)]);
    }

    #[test]
    fn too_many_pairs() {
        let d = line(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let err = greedy_match(&d, 3, &DistanceMetric::Euclidean).unwrap_err();
        assert!(matches!(err, Error::TooManyPairs { requested: 3, max: 2 }));
        // Odd n leaves one record unpaired without complaint.
        assert_eq!(greedy_match(&d, 2, &DistanceMetric::Euclidean).unwrap().len(), 2);
    }

    #[test]
    fn brute_force_on_line() {
        let d = line(&[0.0, 0.1, 1.0, 1.05]);
        let best = brute_force_optimal_matching(&d, 2, &DistanceMetric::Euclidean).unwrap();
        assert_abs_diff_eq!(best, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn brute_force_single_pair_is_closest_pair() {
        let d = line(&[0.0, 0.7, 2.0, 2.2, 5.0]);
        let best = brute_force_optimal_matching(&d, 1, &DistanceMetric::Euclidean).unwrap();
        assert_abs_diff_eq!(best, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn brute_force_cap() {
        let d = line(&(0..15).map(f64::from).collect::<Vec<_>>());
        let err = brute_force_optimal_matching(&d, 2, &DistanceMetric::Euclidean).unwrap_err();
        assert!(matches!(err, Error::InstanceTooLarge { n: 15, .. }));
    }

    #[test]
    fn summary_of_line_matching() {
        let d = line(&[0.0, 0.1, 1.0, 1.05]);
        let m = greedy_match(&d, 2, &DistanceMetric::Euclidean).unwrap();
        let s = pair_distance_summary(&m).unwrap();
        assert_abs_diff_eq!(s.min, 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(s.max, 0.1, epsilon = 1e-12);
        assert_eq!(s.count, 2);
        assert_eq!(s.zero_count, 0);
    }

    #[test]
    fn summary_of_duplicates() {
        let d = line(&[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let m = greedy_match(&d, 3, &DistanceMetric::Euclidean).unwrap();
        let s = pair_distance_summary(&m).unwrap();
        assert_eq!(s.max, 0.0);
        assert_eq!(s.zero_count, 3);
        assert!(pair_distance_summary(&Matching::empty()).is_none());
    }

    #[test]
    fn from_pairs_validates() {
        let d = line(&[0.0, 0.1, 1.0, 1.05]);
        let e = DistanceMetric::Euclidean;
        assert!(Matching::from_pairs(&d, vec![(0, 1), (1, 2)], &e).is_err());
        assert!(Matching::from_pairs(&d, vec![(0, 0)], &e).is_err());
        assert!(Matching::from_pairs(&d, vec![(0, 4)], &e).is_err());
        assert!(Matching::from_pairs(&d, vec![(0, 1), (2, 3)], &e).is_err());
        assert!(Matching::from_pairs(&d, vec![(2, 3), (0, 1)], &e).is_ok());
    }

    #[test]
    fn eight_points_greedy_vs_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<Vec<f64>> = (0..8).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let d = points(&rows);
        let greedy = greedy_match(&d, 2, &DistanceMetric::Euclidean).unwrap();
        let oracle = brute_force_optimal_matching(&d, 4, &DistanceMetric::Euclidean).unwrap();
        assert!(greedy.max_distance() <= oracle);
    }

    #[test]
    fn greedy_max_distance_shrinks_with_n() {
        use rand::{Rng, SeedableRng};
        for dim in [1usize, 2] {
            let mut medians = Vec::new();
            for n in [64usize, 128, 256, 512] {
                let mut maxes: Vec<f64> = (0..21u64)
                    .map(|seed| {
                        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed * 1000 + n as u64);
                        let rows: Vec<Vec<f64>> = (0..n)
                            .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
                            .collect();
                        greedy_match(&points(&rows), n / 8, &DistanceMetric::Euclidean)
                            .unwrap()
                            .max_distance()
                    })
                    .collect();
                maxes.sort_unstable_by(f64::total_cmp);
                medians.push(maxes[maxes.len() / 2]);
            }
            assert!(medians.windows(2).all(|w| w[1] <= w[0]), "d={dim}: {medians:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn greedy_invariants(
            rows in prop::collection::vec(prop::collection::vec(0.0..1.0f64, 2), 4..40),
            frac in 0.0..1.0f64,
        ) {
            let d = points(&rows);
            let pairs = 1 + ((d.len() / 2 - 1) as f64 * frac) as usize;
            let m = greedy_match(&d, pairs, &DistanceMetric::Euclidean).unwrap();
            prop_assert_eq!(m.len(), pairs);
            let mut seen = std::collections::HashSet::new();
            for &(i, j) in m.pairs() {
                prop_assert!(i < j);
                prop_assert!(seen.insert(i) && seen.insert(j));
            }
            prop_assert!(m.distances().windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(m.mismatch_count(), m.distances().iter().filter(|&&v| v > 0.0).count());
            let full = greedy_match(&d, d.len() / 2, &DistanceMetric::Euclidean).unwrap();
            prop_assert_eq!(full.prefix(pairs), m);
        }

        #[test]
        fn greedy_is_two_approximation(
            rows in (4usize..=12, 1usize..=3).prop_flat_map(|(n, dim)|
                prop::collection::vec(prop::collection::vec(0.0..1.0f64, dim), n)),
            frac in 0.0..1.0f64,
        ) {
            let d = points(&rows);
            let max_l = d.len() / 4;
            let pairs = 1 + ((max_l - 1) as f64 * frac) as usize;
            let greedy = greedy_match(&d, pairs, &DistanceMetric::Euclidean).unwrap();
            let oracle = brute_force_optimal_matching(&d, 2 * pairs, &DistanceMetric::Euclidean).unwrap();
            prop_assert!(greedy.max_distance() <= oracle);
        }
    }
}
