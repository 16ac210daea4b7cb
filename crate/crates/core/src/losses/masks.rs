//! Positive-pair rules for the four contrastive terms.

use serde::{Deserialize, Serialize};

use super::{FeatureBatch, PairMask, RowMeta};
use crate::geometry::clamp_to_interval;
use crate::gridcodec::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Accessory {
    Glasses,
    Mask,
}

/// Positives: pitch labels within `s_pitch` degrees of each other.
pub fn build_pitch_mask(batch: &FeatureBatch, s_pitch: f64) -> PairMask {
    pitch_mask(batch.meta(), s_pitch)
}

pub(crate) fn pitch_mask(meta: &[RowMeta], s_pitch: f64) -> PairMask {
    PairMask::from_pairs(meta.len(), |i, j| (meta[i].pitch - meta[j].pitch).abs() <= s_pitch)
}

/// Positives: different source datasets whose labels share a grid cell on
/// both axes. Labels are clamped into the grid interval first.
pub fn build_dataset_mask(batch: &FeatureBatch, grid: &GridSpec) -> PairMask {
    dataset_mask(batch.meta(), grid)
}

pub(crate) fn dataset_mask(meta: &[RowMeta], grid: &GridSpec) -> PairMask {
    let cells: Vec<(usize, usize)> = meta
        .iter()
        .map(|m| grid.discretize(clamp_to_interval(m.gaze(), &grid.interval)).expect("clamped label lies in the grid"))
        .collect();
    PairMask::from_pairs(meta.len(), |i, j| meta[i].dataset != meta[j].dataset && cells[i] == cells[j])
}

/// Positives: views of the same source sample whose accessory state differs.
pub fn build_accessory_mask(batch: &FeatureBatch, which: Accessory) -> PairMask {
    accessory_mask(batch.meta(), which)
}

pub(crate) fn accessory_mask(meta: &[RowMeta], which: Accessory) -> PairMask {
    let flag = |m: &RowMeta| match which {
        Accessory::Glasses => m.glasses,
        Accessory::Mask => m.mask,
    };
    PairMask::from_pairs(meta.len(), |i, j| meta[i].sample_id == meta[j].sample_id && flag(&meta[i]) != flag(&meta[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::FeatureMatrix;
    use crate::manifest::DatasetId;

    fn row(id: &str, ds: DatasetId, pitch: f64, yaw: f64, glasses: bool, mask: bool) -> RowMeta {
        RowMeta {
            sample_id: id.into(),
            view_index: 0,
            dataset: ds,
            subject: "s".into(),
            glasses,
            mask,
            pitch,
            yaw,
            flip: false,
        }
    }

    fn batch(meta: Vec<RowMeta>) -> FeatureBatch {
        let n = meta.len();
        let data = (0..n).flat_map(|i| [((i + 1) as f64).cos(), ((i + 1) as f64).sin()]).collect();
        FeatureBatch::new(FeatureMatrix::new(n, 2, data).unwrap(), meta).unwrap()
    }

    #[test]
    fn pitch_rule() {
        let b = batch(vec![
            row("a", DatasetId::X, 0.0, 0.0, false, false),
            row("b", DatasetId::X, 3.0, 0.0, false, false),
            row("c", DatasetId::X, 10.0, 0.0, false, false),
        ]);
        let m = build_pitch_mask(&b, 4.0);
        assert!(m.get(0, 1) && !m.get(0, 2) && !m.get(1, 2));
        assert_eq!(m.count_pairs(), 1);

        let same = batch((0..4).map(|i| row(&i.to_string(), DatasetId::N, 5.0, 0.0, false, false)).collect());
        assert_eq!(build_pitch_mask(&same, 4.0).count_pairs(), 6);

        let single = batch(vec![row("a", DatasetId::X, 0.0, 0.0, false, false)]);
        assert_eq!(build_pitch_mask(&single, 4.0).count_pairs(), 0);
    }

    #[test]
    fn dataset_rule() {
        let g = GridSpec::default();
        let b = batch(vec![
            row("a", DatasetId::X, 1.0, 1.0, false, false),
            row("b", DatasetId::N, 1.5, 0.5, false, false),
            row("c", DatasetId::X, 1.2, 1.1, false, false),
            row("d", DatasetId::C, -20.0, 15.0, false, false),
        ]);
        let m = build_dataset_mask(&b, &g);
        assert!(m.get(0, 1), "same bin, different datasets");
        assert!(!m.get(0, 2), "same bin, same dataset");
        assert!(!m.get(0, 3) && !m.get(1, 3), "different bins");
        assert!(m.get(1, 2));
    }

    #[test]
    fn accessory_rule() {
        let b = batch(vec![
            row("7", DatasetId::X, 0.0, 0.0, true, false),
            row("7", DatasetId::X, 0.0, 0.0, false, true),
            row("8", DatasetId::X, 0.0, 0.0, false, false),
            row("7", DatasetId::X, 0.0, 0.0, true, true),
        ]);
        let g = build_accessory_mask(&b, Accessory::Glasses);
        assert!(g.get(0, 1));
        assert!(!g.get(1, 2), "different samples");
        assert!(!g.get(0, 3), "both wear glasses");
        assert!(g.get(1, 3));
        let m = build_accessory_mask(&b, Accessory::Mask);
        assert!(m.get(0, 1) && m.get(0, 3) && !m.get(1, 3));
    }

    #[test]
    fn masks_are_structurally_valid() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let g = GridSpec::default();
        for _ in 0..50 {
            let n = rng.gen_range(1..12);
            let meta: Vec<RowMeta> = (0..n)
                .map(|_| {
                    row(
                        &rng.gen_range(0..4).to_string(),
                        DatasetId::ALL[rng.gen_range(0..3)],
                        rng.gen_range(-35.0..20.0),
                        rng.gen_range(-30.0..30.0),
                        rng.gen(),
                        rng.gen(),
                    )
                })
                .collect();
            let b = batch(meta);
            for m in [
                build_pitch_mask(&b, 4.0),
                build_dataset_mask(&b, &g),
                build_accessory_mask(&b, Accessory::Glasses),
                build_accessory_mask(&b, Accessory::Mask),
            ] {
                assert!(m.is_symmetric_zero_diagonal());
            }
        }
    }
}
