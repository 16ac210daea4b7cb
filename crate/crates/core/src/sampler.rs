//! Stratified epoch planning: a fixed quota of draws per (dataset, gaze
//! cell), with optional round-robin subject balancing inside each cell.
//!
//! Every cell draws from its own generator seeded by
//! `mix(seed, dataset, cell, epoch)`, so plans do not depend on iteration
//! order or worker count.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GazeInterval;
use crate::gridcodec::GridSpec;
use crate::manifest::{DatasetId, SampleRecord};
use crate::seeding::{mix, rng_from};

#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestReport {
    pub retained: usize,
    pub dropped_gaze: usize,
    pub dropped_head_pose: usize,
    /// `(sample_id, reason)` for rejected records.
    pub malformed: Vec<(String, String)>,
}

#[derive(Debug, Clone)]
pub struct SampleRegistry {
    records: Vec<SampleRecord>,
}

impl SampleRegistry {
    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, index: usize) -> &SampleRecord {
        &self.records[index]
    }
}

/// Keeps records whose gaze lies in `gaze` and whose head pose lies in `head_pose`.
pub fn ingest(
    records: impl IntoIterator<Item = SampleRecord>,
    gaze: &GazeInterval,
    head_pose: &GazeInterval,
) -> (SampleRegistry, IngestReport) {
    let mut report = IngestReport::default();
    let mut seen = HashSet::new();
    let mut kept = Vec::new();
    for r in records {
        let finite = [r.pitch, r.yaw, r.head_pitch, r.head_yaw, r.head_roll].iter().all(|v| v.is_finite());
        if !finite {
            report.malformed.push((r.sample_id.clone(), "non-finite label".into()));
            continue;
        }
        if r.sample_id.is_empty() {
            report.malformed.push((r.sample_id.clone(), "empty sample_id".into()));
            continue;
        }
        if !seen.insert(r.sample_id.clone()) {
            report.malformed.push((r.sample_id.clone(), "duplicate sample_id".into()));
            continue;
        }
        if !gaze.contains(r.gaze()) {
            report.dropped_gaze += 1;
            continue;
        }
        if !head_pose.contains(r.head_pose()) {
            report.dropped_head_pose += 1;
            continue;
        }
        kept.push(r);
    }
    report.retained = kept.len();
    (SampleRegistry { records: kept }, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmptyCellPolicy {
    #[default]
    Error,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanOptions {
    pub quota: usize,
    #[serde(default)]
    pub empty_cell_policy: EmptyCellPolicy,
    /// Datasets whose cells are drawn round-robin over subjects.
    #[serde(default)]
    pub subject_balanced: BTreeSet<DatasetId>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            quota: 640,
            empty_cell_policy: EmptyCellPolicy::Error,
            subject_balanced: [DatasetId::C].into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub sample_id: String,
    pub epoch: u64,
    pub draw_index: usize,
    #[serde(skip)]
    pub(crate) registry_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CellKey {
    pub dataset: DatasetId,
    pub cell: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochPlan {
    pub entries: Vec<PlanEntry>,
    pub cell_counts: BTreeMap<CellKey, usize>,
    pub skipped_cells: Vec<CellKey>,
}

impl EpochPlan {
    pub fn per_dataset(&self) -> BTreeMap<DatasetId, usize> {
        let mut out = BTreeMap::new();
        for (k, v) in &self.cell_counts {
            *out.entry(k.dataset).or_insert(0) += v;
        }
        out
    }
}

pub fn plan_epoch(
    reg: &SampleRegistry,
    grid: &GridSpec,
    opts: &PlanOptions,
    seed: u64,
    epoch: u64,
) -> Result<EpochPlan> {
    if opts.quota == 0 {
        return Err(Error::invalid("quota must be positive"));
    }
    let mut cells: BTreeMap<CellKey, Vec<usize>> = BTreeMap::new();
    for (idx, r) in reg.records.iter().enumerate() {
        let (cp, cy) = grid.discretize(r.gaze())?;
        cells.entry(CellKey { dataset: r.dataset, cell: grid.cell_index(cp, cy) }).or_default().push(idx);
    }
    let datasets: BTreeSet<DatasetId> = reg.records.iter().map(|r| r.dataset).collect();

    let mut missing = Vec::new();
    for &ds in &datasets {
        for cell in 0..grid.total_bins() {
            let key = CellKey { dataset: ds, cell };
            if !cells.contains_key(&key) {
                missing.push(key);
            }
        }
    }
    if !missing.is_empty() && opts.empty_cell_policy == EmptyCellPolicy::Error {
        let listing: Vec<String> = missing.iter().map(|k| format!("{}:{}", k.dataset, k.cell)).collect();
        return Err(Error::invalid(format!("{} empty cells: {}", missing.len(), listing.join(", "))));
    }

    let mut drawn = Vec::with_capacity(cells.len() * opts.quota);
    let mut cell_counts = BTreeMap::new();
    for (key, members) in &cells {
        let cell_seed = mix(&[seed, key.dataset.index(), key.cell as u64, epoch]);
        let picks = if opts.subject_balanced.contains(&key.dataset) {
            draw_balanced(reg, members, opts.quota, cell_seed)
        } else {
            draw_cycled(members, opts.quota, cell_seed)
        };
        cell_counts.insert(key.clone(), picks.len());
        drawn.extend(picks);
    }

    let mut order_rng = rng_from(mix(&[seed, epoch, 0x000B_DEE5]));
    drawn.shuffle(&mut order_rng);
    let entries = drawn
        .into_iter()
        .enumerate()
        .map(|(i, idx)| PlanEntry {
            sample_id: reg.records[idx].sample_id.clone(),
            epoch,
            draw_index: i,
            registry_index: idx,
        })
        .collect();
    Ok(EpochPlan { entries, cell_counts, skipped_cells: missing })
}

/// `quota` draws from `members`: whole shuffled passes over the cell, so an
/// underfull cell repeats members and every member appears `⌊q/n⌋` or
/// `⌈q/n⌉` times.
fn draw_cycled(members: &[usize], quota: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from(seed);
    let mut out = Vec::with_capacity(quota);
    let mut pass = members.to_vec();
    while out.len() < quota {
        pass.shuffle(&mut rng);
        let take = (quota - out.len()).min(pass.len());
        out.extend_from_slice(&pass[..take]);
    }
    out
}

/// Round-robin over subjects (in shuffled order), cycling through each
/// subject's samples.
fn draw_balanced(reg: &SampleRegistry, members: &[usize], quota: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from(seed);
    let mut by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &m in members {
        by_subject.entry(reg.records[m].subject.as_str()).or_default().push(m);
    }
    let mut subjects: Vec<Vec<usize>> = by_subject.into_values().collect();
    subjects.shuffle(&mut rng);
    for s in &mut subjects {
        s.shuffle(&mut rng);
    }
    let mut cursors = vec![0usize; subjects.len()];
    (0..quota)
        .map(|k| {
            let s = k % subjects.len();
            let pool = &mut subjects[s];
            if cursors[s] == pool.len() {
                pool.shuffle(&mut rng);
                cursors[s] = 0;
            }
            cursors[s] += 1;
            pool[cursors[s] - 1]
        })
        .collect()
}

/// Draw counts per subject within each cell of the plan.
pub fn subject_histogram(
    plan: &EpochPlan,
    reg: &SampleRegistry,
    grid: &GridSpec,
) -> Result<BTreeMap<CellKey, BTreeMap<String, usize>>> {
    let mut out: BTreeMap<CellKey, BTreeMap<String, usize>> = BTreeMap::new();
    for e in &plan.entries {
        let r = reg
            .records
            .get(e.registry_index)
            .filter(|r| r.sample_id == e.sample_id)
            .ok_or_else(|| Error::invalid(format!("planned sample {} not in registry", e.sample_id)))?;
        let (cp, cy) = grid.discretize(r.gaze())?;
        let key = CellKey { dataset: r.dataset, cell: grid.cell_index(cp, cy) };
        *out.entry(key).or_default().entry(r.subject.clone()).or_insert(0) += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn rec(id: usize, ds: DatasetId, subject: &str, pitch: f64, yaw: f64) -> SampleRecord {
        SampleRecord {
            sample_id: format!("{ds}-{id}"),
            dataset: ds,
            subject: subject.into(),
            pitch,
            yaw,
            head_pitch: 0.0,
            head_yaw: 0.0,
            head_roll: 0.0,
            glasses: false,
            mask: false,
            image: None,
            matte: None,
            landmarks: None,
        }
    }

    fn toy_grid() -> GridSpec {
        GridSpec::new(GazeInterval::new(0.0, 8.0, 0.0, 4.0).unwrap(), 2, 1).unwrap()
    }

    #[test]
    fn ingest_filters() {
        let mut head = rec(3, DatasetId::X, "a", 0.0, 0.0);
        head.head_pitch = 35.0;
        let mut dup = rec(4, DatasetId::X, "a", 0.0, 0.0);
        dup.sample_id = "X-1".into();
        let records = vec![rec(1, DatasetId::X, "a", 0.0, 0.0), rec(2, DatasetId::X, "a", 20.0, 0.0), head, dup];
        let (reg, report) = ingest(records, &GazeInterval::DEFAULT_GAZE, &GazeInterval::DEFAULT_HEAD_POSE);
        assert_eq!(reg.len(), 1);
        assert_eq!(report.dropped_gaze, 1);
        assert_eq!(report.dropped_head_pose, 1);
        assert_eq!(report.malformed.len(), 1);
    }

    #[test]
    fn underfull_cell_repeats() {
        let mut records: Vec<_> = (0..5).map(|i| rec(i, DatasetId::X, "a", 1.0, 1.0)).collect();
        records.extend((5..7).map(|i| rec(i, DatasetId::X, "a", 5.0, 1.0)));
        let (reg, _) = ingest(records, &toy_grid().interval, &GazeInterval::DEFAULT_HEAD_POSE);
        let opts =
            PlanOptions { quota: 3, empty_cell_policy: EmptyCellPolicy::Error, subject_balanced: BTreeSet::new() };
        let plan = plan_epoch(&reg, &toy_grid(), &opts, 42, 0).unwrap();
        assert_eq!(plan.entries.len(), 6);
        let mut second: BTreeMap<&str, usize> = BTreeMap::new();
        let mut first: BTreeMap<&str, usize> = BTreeMap::new();
        for e in &plan.entries {
            let idx: usize = e.sample_id[2..].parse().unwrap();
            let m = if idx >= 5 { &mut second } else { &mut first };
            *m.entry(e.sample_id.as_str()).or_default() += 1;
        }
        let mut counts: Vec<usize> = second.values().copied().collect();
        counts.sort();
        assert_eq!(counts, vec![1, 2]);
        assert!(first.values().all(|&c| c == 1));
    }

    #[test]
    fn deterministic_for_seed() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        use rand::SeedableRng;
        let records: Vec<_> = (0..200)
            .map(|i| rec(i, DatasetId::ALL[i % 3], "s", rng.gen_range(0.0..8.0), rng.gen_range(0.0..4.0)))
            .collect();
        let (reg, _) = ingest(records, &toy_grid().interval, &GazeInterval::DEFAULT_HEAD_POSE);
        let opts = PlanOptions { quota: 17, ..PlanOptions::default() };
        let a = plan_epoch(&reg, &toy_grid(), &opts, 9, 1).unwrap();
        let b = plan_epoch(&reg, &toy_grid(), &opts, 9, 1).unwrap();
        assert_eq!(a, b);
        let c = plan_epoch(&reg, &toy_grid(), &opts, 9, 2).unwrap();
        assert_ne!(a.entries, c.entries);
        assert!(a.cell_counts.values().all(|&v| v == 17));
    }

    #[test]
    fn empty_cells_error_or_skip() {
        let records = vec![rec(0, DatasetId::X, "a", 1.0, 1.0)];
        let (reg, _) = ingest(records, &toy_grid().interval, &GazeInterval::DEFAULT_HEAD_POSE);
        let err = plan_epoch(&reg, &toy_grid(), &PlanOptions::default(), 0, 0).unwrap_err();
        assert!(err.to_string().contains("X:1"), "{err}");
        let opts =
            PlanOptions { quota: 4, empty_cell_policy: EmptyCellPolicy::Skip, subject_balanced: BTreeSet::new() };
        let plan = plan_epoch(&reg, &toy_grid(), &opts, 0, 0).unwrap();
        assert_eq!(plan.entries.len(), 4);
        assert_eq!(plan.skipped_cells.len(), 1);
    }

    fn balanced_counts(subjects: usize, per_subject: &[usize], quota: usize) -> Vec<usize> {
        let mut records = Vec::new();
        let mut id = 0;
        for (s, &count) in per_subject.iter().enumerate().take(subjects) {
            for _ in 0..count {
                records.push(rec(id, DatasetId::C, &format!("p{s}"), 1.0, 1.0));
                id += 1;
            }
        }
        let grid = GridSpec::new(GazeInterval::new(0.0, 4.0, 0.0, 4.0).unwrap(), 1, 1).unwrap();
        let (reg, _) = ingest(records, &grid.interval, &GazeInterval::DEFAULT_HEAD_POSE);
        let opts = PlanOptions { quota, ..PlanOptions::default() };
        let plan = plan_epoch(&reg, &grid, &opts, 5, 0).unwrap();
        let hist = subject_histogram(&plan, &reg, &grid).unwrap();
        let mut counts: Vec<usize> = hist.values().next().unwrap().values().copied().collect();
        counts.sort_unstable_by(|a, b| b.cmp(a));
        counts
    }

    #[test]
    fn subject_round_robin() {
        assert_eq!(balanced_counts(3, &[10, 1, 4], 6), vec![2, 2, 2]);
        assert_eq!(balanced_counts(1, &[3], 5), vec![5]);
        assert_eq!(balanced_counts(3, &[9, 2, 2], 7), vec![3, 2, 2]);
    }
}
