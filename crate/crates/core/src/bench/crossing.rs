use std::collections::HashMap;

use crate::data::{DatasetSpec, FeatureKind};
use crate::error::{PidError, Result};
use crate::pid::InteractionCandidate;

pub const MAX_CROSS_ORDER: usize = 4;
pub const DEFAULT_BUCKETS: usize = 100;

/// Quantile bucket index of each value: cut points are the order statistics
/// at `floor(k n / buckets)` for `k = 1..buckets`, and a value's bucket is
/// the number of cut points it reaches.
pub fn bucketize(values: &[f64], buckets: usize) -> Vec<usize> {
    let n = values.len();
    if n == 0 || buckets <= 1 {
        return vec![0; n];
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut cuts: Vec<f64> = (1..buckets).map(|k| sorted[k * n / buckets]).collect();
    cuts.dedup();
    values
        .iter()
        .map(|v| cuts.partition_point(|c| c <= v))
        .collect()
}

/// Appends one integer-coded sparse column per candidate. Dense members are
/// bucketized first; sparse members are used as-is. Codes are dense ranks in
/// order of first appearance.
pub fn cross_features(
    data: &DatasetSpec,
    candidates: &[InteractionCandidate],
    buckets: usize,
) -> Result<DatasetSpec> {
    if buckets == 0 {
        return Err(PidError::InvalidArgument(
            "bucket count must be positive".into(),
        ));
    }
    for cand in candidates {
        if cand.len() > MAX_CROSS_ORDER {
            return Err(PidError::CrossingOrder { order: cand.len() });
        }
        if cand.len() < 2 {
            return Err(PidError::InvalidArgument(format!(
                "{cand} has fewer than two features to cross"
            )));
        }
        if let Some(&f) = cand.features().iter().find(|&&f| f >= data.num_features()) {
            return Err(PidError::DimensionMismatch {
                expected: data.num_features(),
                got: f + 1,
            });
        }
    }

    let mut levels: HashMap<usize, Vec<i64>> = HashMap::new();
    let mut level_of = |j: usize| -> Vec<i64> {
        levels
            .entry(j)
            .or_insert_with(|| {
                let col = data.column(j);
                match data.kinds()[j] {
                    FeatureKind::Dense => bucketize(&col, buckets)
                        .into_iter()
                        .map(|b| b as i64)
                        .collect(),
                    FeatureKind::Sparse => col.iter().map(|v| *v as i64).collect(),
                }
            })
            .clone()
    };

    let mut out = data.clone();
    for cand in candidates {
        let cols: Vec<Vec<i64>> = cand.features().iter().map(|&j| level_of(j)).collect();
        let mut codes: HashMap<Vec<i64>, usize> = HashMap::new();
        let values: Vec<f64> = (0..data.len())
            .map(|i| {
                let key: Vec<i64> = cols.iter().map(|c| c[i]).collect();
                let next = codes.len();
                *codes.entry(key).or_insert(next) as f64
            })
            .collect();
        let name = format!(
            "cross_{}",
            cand.features()
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join("_")
        );
        out.push_column(name, FeatureKind::Sparse, &values)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn cand(f: &[usize]) -> InteractionCandidate {
        InteractionCandidate::new(f.to_vec())
    }

    #[test]
    fn two_buckets_split_at_median() {
        let v = [5.0, 1.0, 4.0, 2.0, 3.0, 6.0];
        assert_eq!(bucketize(&v, 2), vec![1, 0, 1, 0, 0, 1]);
    }

    #[test]
    fn binary_cross_has_at_most_four_codes() {
        let x: Vec<f64> = (0..40)
            .flat_map(|i| [(i % 2) as f64, (i / 2 % 2) as f64])
            .collect();
        let data = DatasetSpec::new(2, x, vec![0.0; 40]).unwrap();
        let out = cross_features(&data, &[cand(&[0, 1])], 2).unwrap();
        let distinct: HashSet<u64> = out.column(2).iter().map(|v| v.to_bits()).collect();
        assert!(distinct.len() <= 4);
        assert_eq!(out.names()[2], "cross_0_1");
        assert_eq!(out.kinds()[2], FeatureKind::Sparse);
        assert_eq!(out.column(2)[0], 0.0);
    }

    #[test]
    fn code_count_equals_distinct_tuples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 500;
        let x: Vec<f64> = (0..n * 3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let data = DatasetSpec::new(3, x, vec![0.0; n]).unwrap();
        let buckets = 7;
        let out = cross_features(&data, &[cand(&[0, 2])], buckets).unwrap();
        let b0 = bucketize(&data.column(0), buckets);
        let b2 = bucketize(&data.column(2), buckets);
        let tuples: HashSet<(usize, usize)> = b0.into_iter().zip(b2).collect();
        let codes: HashSet<u64> = out.column(3).iter().map(|v| v.to_bits()).collect();
        assert_eq!(codes.len(), tuples.len());
        let again = cross_features(&data, &[cand(&[0, 2])], buckets).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn order_limit() {
        let data = DatasetSpec::new(5, vec![0.0; 5], vec![0.0]).unwrap();
        assert!(matches!(
            cross_features(&data, &[cand(&[0, 1, 2, 3, 4])], 10),
            Err(PidError::CrossingOrder { order: 5 })
        ));
        assert!(cross_features(&data, &[cand(&[0, 1, 2, 3])], 10).is_ok());
    }
}
