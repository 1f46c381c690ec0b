//! Class balancing: minority augmentation from perturbed re-extractions and
//! majority undersampling.

use dosesim_core::rng::RngStream;
use rand::seq::index::sample;

use crate::data::FeatureMatrix;
use crate::error::{MlError, Result};

/// Balances `original` to `target` rows per class. `augmented[k]` is the
/// k-th perturbed re-extraction of `original` (same row order). Minority
/// rows are taken as all originals followed by perturbed copies in
/// perturbation order, subsampled without replacement when the pool exceeds
/// the target; majority rows are undersampled without replacement.
/// `target = None` picks the largest reachable balanced size.
pub fn balance_dataset(
    original: &FeatureMatrix,
    augmented: &[FeatureMatrix],
    target: Option<usize>,
    stream: RngStream,
) -> Result<FeatureMatrix> {
    original.require_both_classes("balancing")?;
    for a in augmented {
        if a.names != original.names || a.ids != original.ids || a.labels != original.labels {
            return Err(MlError::Shape("augmented extraction does not match original rows".into()));
        }
    }
    let (neg, pos) = original.class_counts();
    let minority_label = if pos <= neg { 1u8 } else { 0 };
    let (n_min, n_maj) = (pos.min(neg), pos.max(neg));
    let reachable = n_min * (1 + augmented.len());
    let target = target.unwrap_or(reachable.min(n_maj));
    if target > reachable {
        return Err(MlError::Insufficient(format!(
            "{n_min} minority rows × {} versions cannot reach {target}",
            1 + augmented.len()
        )));
    }
    if target > n_maj {
        return Err(MlError::Insufficient(format!("{n_maj} majority rows cannot reach {target}")));
    }
    let min_idx: Vec<usize> = (0..original.n_samples()).filter(|&i| original.labels[i] == minority_label).collect();
    let maj_idx: Vec<usize> = (0..original.n_samples()).filter(|&i| original.labels[i] != minority_label).collect();

    // Pool entries (source, row): source 0 is the original matrix.
    let pool: Vec<(usize, usize)> = (0..=augmented.len()).flat_map(|s| min_idx.iter().map(move |&i| (s, i))).collect();
    let mut rng = stream.substream("minority", 0).rng();
    let mut chosen: Vec<(usize, usize)> = if pool.len() == target {
        pool
    } else {
        let mut pick = sample(&mut rng, pool.len(), target).into_vec();
        pick.sort_unstable();
        pick.into_iter().map(|k| pool[k]).collect()
    };
    let mut rng = stream.substream("majority", 0).rng();
    let mut maj = sample(&mut rng, maj_idx.len(), target).into_vec();
    maj.sort_unstable();
    chosen.extend(maj.into_iter().map(|k| (0, maj_idx[k])));
    chosen.sort_by_key(|&(s, i)| (i, s));

    let sources: Vec<&FeatureMatrix> = std::iter::once(original).chain(augmented.iter()).collect();
    let parts: Vec<FeatureMatrix> = chosen.iter().map(|&(s, i)| sources[s].select_rows(&[i])).collect();
    let refs: Vec<&FeatureMatrix> = parts.iter().collect();
    FeatureMatrix::vstack(&refs)
}
