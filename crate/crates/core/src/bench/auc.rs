use super::synthetic::GroundTruth;
use crate::error::{PidError, Result};

/// ROC-AUC of the upper-triangle pair scores against the true pairs.
///
/// Equals the probability that a random true pair outscores a random false
/// pair, with ties counted as one half.
pub fn roc_auc(scores: &[Vec<f64>], truth: &GroundTruth) -> Result<f64> {
    let d = scores.len();
    if scores.iter().any(|row| row.len() != d) {
        return Err(PidError::InvalidArgument(
            "score matrix must be square".into(),
        ));
    }
    if let Some(&(_, j)) = truth.pairs.iter().find(|&&(_, j)| j >= d) {
        return Err(PidError::DimensionMismatch {
            expected: d,
            got: j + 1,
        });
    }
    let mut labelled = Vec::with_capacity(d * d.saturating_sub(1) / 2);
    for (i, row) in scores.iter().enumerate() {
        for (j, &s) in row.iter().enumerate().skip(i + 1) {
            if !s.is_finite() {
                return Err(PidError::InvalidArgument(format!(
                    "score ({i},{j}) is not finite"
                )));
            }
            labelled.push((s, truth.contains(i, j)));
        }
    }
    let positives = labelled.iter().filter(|(_, t)| *t).count();
    let negatives = labelled.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(PidError::DegenerateTruth(format!(
            "{positives} true and {negatives} false pairs"
        )));
    }

    // Mann-Whitney U with midranks for ties.
    labelled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut k = 0;
    while k < labelled.len() {
        let mut end = k;
        while end + 1 < labelled.len() && labelled[end + 1].0 == labelled[k].0 {
            end += 1;
        }
        let midrank = (k + end) as f64 / 2.0 + 1.0;
        rank_sum += midrank * labelled[k..=end].iter().filter(|(_, t)| *t).count() as f64;
        k = end + 1;
    }
    let p = positives as f64;
    let u = rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}
