//! Evaluation math: classifier accuracy (overall, per class, confusion, joint
//! across heads), exact pixel-space nearest neighbours and the memorization
//! rate built on them.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dataset_io::{Head, PredictionRecord};
use crate::error::{MosaicError, Result};

pub const DEFAULT_MEMORIZATION_K: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub head: Head,
    pub overall: f64,
    pub correct: u64,
    pub n: u64,
    /// True class → (correct, total).
    pub per_class: BTreeMap<u32, (u64, u64)>,
    /// `confusion[true][predicted]`, `K x K` for the head's class count.
    pub confusion: Vec<Vec<u64>>,
    /// True class → records whose prediction was null.
    pub unreadable: BTreeMap<u32, u64>,
}

impl AccuracyReport {
    pub fn class_accuracy(&self, class: u32) -> Option<f64> {
        self.per_class.get(&class).map(|&(c, n)| c as f64 / n as f64)
    }
}

pub fn accuracy(predictions: &[PredictionRecord], head: Head) -> Result<AccuracyReport> {
    if predictions.is_empty() {
        return Err(MosaicError::Empty(format!("{head} accuracy of zero records")));
    }
    let k = head.num_classes() as usize;
    let mut confusion = vec![vec![0u64; k]; k];
    let mut per_class: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
    let mut unreadable = BTreeMap::new();
    let mut correct = 0;
    for rec in predictions {
        let truth = head
            .true_class(&rec.true_labels)
            .ok_or_else(|| MosaicError::Validation(format!("{}: label has no {head} class", rec.id)))?;
        let predicted = *rec
            .predicted
            .get(&head)
            .ok_or_else(|| MosaicError::Validation(format!("{}: no prediction for head {head}", rec.id)))?;
        let entry = per_class.entry(truth).or_default();
        entry.1 += 1;
        match predicted {
            Some(p) => {
                confusion[truth as usize][p as usize] += 1;
                if p == truth {
                    entry.0 += 1;
                    correct += 1;
                }
            }
            None => *unreadable.entry(truth).or_default() += 1,
        }
    }
    let n = predictions.len() as u64;
    Ok(AccuracyReport {
        head,
        overall: correct as f64 / n as f64,
        correct,
        n,
        per_class,
        confusion,
        unreadable,
    })
}

/// Fraction of records on which every head in `heads` is right.
pub fn joint_accuracy(predictions: &[PredictionRecord], heads: &[Head]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(MosaicError::Empty("joint accuracy of zero records".into()));
    }
    if heads.is_empty() {
        return Err(MosaicError::Validation("joint accuracy needs at least one head".into()));
    }
    let mut hits = 0u64;
    for rec in predictions {
        let mut all = true;
        for &h in heads {
            all &= rec.is_correct(h)?;
        }
        hits += u64::from(all);
    }
    Ok(hits as f64 / predictions.len() as f64)
}

/// Equally sized 8-bit images stored back to back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMatrix {
    pub ids: Vec<String>,
    pub dim: usize,
    pub data: Vec<u8>,
}

impl PixelMatrix {
    pub fn new(dim: usize) -> Self {
        Self {
            ids: Vec::new(),
            dim,
            data: Vec::new(),
        }
    }

    pub fn push(&mut self, id: impl Into<String>, pixels: &[u8]) -> Result<()> {
        if pixels.len() != self.dim {
            return Err(MosaicError::DimensionMismatch {
                expected: self.dim,
                got: pixels.len(),
            });
        }
        self.ids.push(id.into());
        self.data.extend_from_slice(pixels);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborResult {
    pub generated_id: String,
    pub nearest_index: usize,
    /// Squared distances, exact.
    pub ss1: u64,
    pub ss2: u64,
    pub d1: f64,
    pub d2: f64,
    /// `d1 / d2`, or 0 when `d2 == 0`.
    pub ratio: f64,
}

impl NeighborResult {
    fn from_squares(generated_id: String, nearest_index: usize, ss1: u64, ss2: u64) -> Self {
        let ratio = if ss2 == 0 {
            0.0
        } else {
            (ss1 as f64 / ss2 as f64).sqrt()
        };
        Self {
            generated_id,
            nearest_index,
            ss1,
            ss2,
            d1: (ss1 as f64).sqrt(),
            d2: (ss2 as f64).sqrt(),
            ratio,
        }
    }
}

/// Bytes compared between early-abandon checks.
const ABANDON_BLOCK: usize = 512;
/// Generated images sharing one pass over the training set.
const QUERY_TILE: usize = 8;

#[inline]
fn block_ss(a: &[u8], b: &[u8]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = i32::from(x) - i32::from(y);
            (d * d) as u32
        })
        .map(u64::from)
        .sum()
}

/// Squared distance, or `None` once it exceeds `bound`.
#[inline]
fn bounded_ss(a: &[u8], b: &[u8], bound: u64) -> Option<u64> {
    let mut ss = 0u64;
    for (ca, cb) in a.chunks(ABANDON_BLOCK).zip(b.chunks(ABANDON_BLOCK)) {
        ss += block_ss(ca, cb);
        if ss > bound {
            return None;
        }
    }
    Some(ss)
}

#[derive(Clone, Copy)]
struct Best {
    ss1: u64,
    idx1: usize,
    ss2: u64,
}

impl Best {
    const EMPTY: Best = Best {
        ss1: u64::MAX,
        idx1: usize::MAX,
        ss2: u64::MAX,
    };

    /// Training images arrive in ascending index order, so ties keep the lower index.
    fn offer(&mut self, ss: u64, idx: usize) {
        if ss < self.ss1 {
            self.ss2 = self.ss1;
            self.ss1 = ss;
            self.idx1 = idx;
        } else if ss < self.ss2 {
            self.ss2 = ss;
        }
    }
}

fn search_tile(queries: &[&[u8]], training: &PixelMatrix) -> Vec<Best> {
    let mut best = vec![Best::EMPTY; queries.len()];
    for t in 0..training.len() {
        let row = training.row(t);
        for (q, b) in queries.iter().zip(best.iter_mut()) {
            if let Some(ss) = bounded_ss(q, row, b.ss2) {
                b.offer(ss, t);
            }
        }
    }
    best
}

/// Exact nearest and second-nearest training image for every generated image,
/// in L2 over raw pixel values.
pub fn nn_search(generated: &PixelMatrix, training: &PixelMatrix) -> Result<Vec<NeighborResult>> {
    if generated.dim != training.dim {
        return Err(MosaicError::DimensionMismatch {
            expected: training.dim,
            got: generated.dim,
        });
    }
    if training.len() < 2 {
        return Err(MosaicError::Argument("need at least two training images".into()));
    }
    let tiles: Vec<Vec<usize>> = (0..generated.len())
        .collect::<Vec<_>>()
        .chunks(QUERY_TILE)
        .map(<[usize]>::to_vec)
        .collect();
    let run = |tile: &Vec<usize>| {
        let queries: Vec<&[u8]> = tile.iter().map(|&g| generated.row(g)).collect();
        search_tile(&queries, training)
            .into_iter()
            .zip(tile)
            .map(|(b, &g)| NeighborResult::from_squares(generated.ids[g].clone(), b.idx1, b.ss1, b.ss2))
            .collect::<Vec<_>>()
    };
    #[cfg(feature = "parallel")]
    let results = {
        use rayon::prelude::*;
        tiles.par_iter().flat_map_iter(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results = tiles.iter().flat_map(run).collect();
    Ok(results)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemorizationConfig {
    pub k: f64,
}

impl Default for MemorizationConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_MEMORIZATION_K,
        }
    }
}

impl MemorizationConfig {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0 && k < 1.0) {
            return Err(MosaicError::Argument(format!(
                "memorization threshold {k} outside (0, 1)"
            )));
        }
        Ok(Self { k })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemorizationReport {
    pub rate: f64,
    pub flags: Vec<bool>,
}

/// A sample counts as memorized when its nearest/second-nearest ratio is below `k`.
pub fn memorization_rate(results: &[NeighborResult], config: &MemorizationConfig) -> Result<MemorizationReport> {
    if results.is_empty() {
        return Err(MosaicError::Empty("memorization rate of zero samples".into()));
    }
    let flags: Vec<bool> = results.iter().map(|r| r.ratio < config.k).collect();
    let rate = flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64;
    Ok(MemorizationReport { rate, flags })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceHistograms {
    /// `bins + 1` shared edges from the smallest to the largest `d1`.
    pub edges: Vec<f64>,
    pub per_label: BTreeMap<String, Vec<u64>>,
    pub label_mean: BTreeMap<String, f64>,
    pub mean: f64,
}

/// Histograms of nearest-neighbour distance per condition label, on shared
/// bins, plus the overall mean. `labels` maps generated id → label.
pub fn distance_histograms(
    results: &[NeighborResult],
    labels: &BTreeMap<String, String>,
    bins: usize,
) -> Result<DistanceHistograms> {
    if results.is_empty() {
        return Err(MosaicError::Empty("histogram of zero samples".into()));
    }
    if bins == 0 {
        return Err(MosaicError::Argument("bins must be positive".into()));
    }
    let lo = results.iter().map(|r| r.d1).fold(f64::INFINITY, f64::min);
    let hi = results.iter().map(|r| r.d1).fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut per_label: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    let mut sums: BTreeMap<String, (f64, u64)> = BTreeMap::new();
    for r in results {
        let label = labels
            .get(&r.generated_id)
            .ok_or_else(|| MosaicError::Validation(format!("no label for generated sample {}", r.generated_id)))?;
        let bin = if width > 0.0 {
            (((r.d1 - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        per_label.entry(label.clone()).or_insert_with(|| vec![0; bins])[bin] += 1;
        let s = sums.entry(label.clone()).or_default();
        s.0 += r.d1;
        s.1 += 1;
    }
    let mean = results.iter().map(|r| r.d1).sum::<f64>() / results.len() as f64;
    let label_mean = sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect();
    Ok(DistanceHistograms {
        edges,
        per_label,
        label_mean,
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::ConditionLabel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rec(id: usize, count: u32, pred: u32) -> PredictionRecord {
        PredictionRecord {
            id: format!("r{id}"),
            true_labels: ConditionLabel::count(count),
            predicted: [(Head::Count, Some(pred - 1))].into_iter().collect(),
            image: String::new(),
        }
    }

    #[test]
    fn accuracy_basics() {
        let all: Vec<_> = (0..4).map(|i| rec(i, 2, 2)).collect();
        assert_eq!(accuracy(&all, Head::Count).unwrap().overall, 1.0);
        let mut three = all.clone();
        three[0] = rec(0, 2, 5);
        let r = accuracy(&three, Head::Count).unwrap();
        assert_eq!(r.overall, 0.75);
        assert_eq!(r.confusion[1][4], 1);
        assert_eq!(r.confusion[1][1], 3);
        assert!(accuracy(&[], Head::Count).is_err());
        assert!(accuracy(&all, Head::Color).is_err());
    }

    #[test]
    fn joint_examples() {
        let mk = |i: usize, count_ok: bool, color_ok: bool| {
            let label = ConditionLabel::count(3).with_color(crate::scene::Color::Red);
            PredictionRecord {
                id: format!("j{i}"),
                true_labels: label,
                predicted: [
                    (Head::Count, Some(if count_ok { 2 } else { 5 })),
                    (Head::Color, Some(if color_ok { 0 } else { 4 })),
                ]
                .into_iter()
                .collect(),
                image: String::new(),
            }
        };
        let heads = [Head::Count, Head::Color];
        let right: Vec<_> = (0..5).map(|i| mk(i, true, true)).collect();
        assert_eq!(joint_accuracy(&right, &heads).unwrap(), 1.0);
        let split: Vec<_> = (0..5).map(|i| mk(i, true, false)).collect();
        assert_eq!(joint_accuracy(&split, &heads).unwrap(), 0.0);
        // count right on records 1..=3, color right on 2..=4, five records
        let mixed: Vec<_> = (1..=5)
            .map(|i| mk(i, (1..=3).contains(&i), (2..=4).contains(&i)))
            .collect();
        assert_eq!(joint_accuracy(&mixed, &heads).unwrap(), 0.4);
        assert!(joint_accuracy(&mixed, &[Head::Relation]).is_err());
    }

    fn matrix(rows: &[Vec<u8>]) -> PixelMatrix {
        let mut m = PixelMatrix::new(rows[0].len());
        for (i, r) in rows.iter().enumerate() {
            m.push(format!("{i}"), r).unwrap();
        }
        m
    }

    /// Full double loop, sorted by (distance, index).
    fn naive(generated: &PixelMatrix, training: &PixelMatrix) -> Vec<(usize, u64, u64)> {
        (0..generated.len())
            .map(|g| {
                let mut d: Vec<(u64, usize)> = (0..training.len())
                    .map(|t| {
                        let ss = generated
                            .row(g)
                            .iter()
                            .zip(training.row(t))
                            .map(|(&a, &b)| (i64::from(a) - i64::from(b)).pow(2) as u64)
                            .sum();
                        (ss, t)
                    })
                    .collect();
                d.sort();
                (d[0].1, d[0].0, d[1].0)
            })
            .collect()
    }

    #[test]
    fn exact_copy_and_ties() {
        let training = matrix(&[vec![0; 12], vec![200; 12], vec![50; 12]]);
        let generated = matrix(&[vec![200; 12]]);
        let r = &nn_search(&generated, &training).unwrap()[0];
        assert_eq!((r.nearest_index, r.d1), (1, 0.0));

        let sym = matrix(&[vec![10; 4], vec![30; 4], vec![255; 4]]);
        let mid = matrix(&[vec![20; 4]]);
        let r = &nn_search(&mid, &sym).unwrap()[0];
        assert_eq!(r.d1, r.d2);
        assert_eq!(r.ratio, 1.0);
        assert_eq!(r.nearest_index, 0);
    }

    #[test]
    fn matches_double_loop_on_random_8x8() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let rand_rows = |rng: &mut ChaCha8Rng, n: usize| -> Vec<Vec<u8>> {
            (0..n).map(|_| (0..8 * 8 * 3).map(|_| rng.gen()).collect()).collect()
        };
        let generated = matrix(&rand_rows(&mut rng, 20));
        let training = matrix(&rand_rows(&mut rng, 50));
        let fast = nn_search(&generated, &training).unwrap();
        for (f, (idx, ss1, ss2)) in fast.iter().zip(naive(&generated, &training)) {
            assert_eq!((f.nearest_index, f.ss1, f.ss2), (idx, ss1, ss2));
        }
    }

    #[test]
    fn dimension_checks() {
        let a = matrix(&[vec![0; 4], vec![1; 4]]);
        let b = matrix(&[vec![0; 5]]);
        assert!(nn_search(&b, &a).is_err());
        assert!(nn_search(&a, &b).is_err());
        let mut m = PixelMatrix::new(3);
        assert!(m.push("x", &[1, 2]).is_err());
    }

    fn with_ratio(ratio: f64) -> NeighborResult {
        NeighborResult {
            generated_id: String::new(),
            nearest_index: 0,
            ss1: 0,
            ss2: 0,
            d1: 0.0,
            d2: 0.0,
            ratio,
        }
    }

    #[test]
    fn memorization_threshold() {
        let k = MemorizationConfig::default();
        let zeros: Vec<_> = (0..3).map(|_| with_ratio(0.0)).collect();
        assert_eq!(memorization_rate(&zeros, &k).unwrap().rate, 1.0);
        let ones: Vec<_> = (0..3).map(|_| with_ratio(1.0)).collect();
        assert_eq!(memorization_rate(&ones, &k).unwrap().rate, 0.0);
        let mixed: Vec<_> = [0.1, 0.5, 0.2, 0.9].into_iter().map(with_ratio).collect();
        let rep = memorization_rate(&mixed, &k).unwrap();
        assert_eq!(rep.rate, 0.5);
        assert_eq!(rep.flags, [true, false, true, false]);
        assert!(MemorizationConfig::new(1.0).is_err());
        assert!(MemorizationConfig::new(0.0).is_err());
    }

    fn with_d1(id: &str, d1: f64) -> NeighborResult {
        NeighborResult {
            generated_id: id.into(),
            d1,
            ..with_ratio(0.5)
        }
    }

    #[test]
    fn histogram_examples() {
        let rs = vec![with_d1("a", 1.0), with_d1("b", 1.0), with_d1("c", 1.0)];
        let labels: BTreeMap<_, _> = ["a", "b", "c"]
            .iter()
            .map(|s| (s.to_string(), "x".to_string()))
            .collect();
        let h = distance_histograms(&rs, &labels, 1).unwrap();
        assert_eq!(h.per_label["x"], vec![3]);
        assert_eq!(h.mean, 1.0);

        let rs = vec![
            with_d1("a", 0.0),
            with_d1("b", 1.0),
            with_d1("c", 9.0),
            with_d1("d", 10.0),
        ];
        let labels: BTreeMap<_, _> = [("a", "lo"), ("b", "lo"), ("c", "hi"), ("d", "hi")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let h = distance_histograms(&rs, &labels, 2).unwrap();
        assert_eq!(h.per_label["lo"], vec![2, 0]);
        assert_eq!(h.per_label["hi"], vec![0, 2]);
        assert_eq!(h.edges, vec![0.0, 5.0, 10.0]);

        let missing: BTreeMap<String, String> = BTreeMap::new();
        assert!(distance_histograms(&rs, &missing, 2).is_err());
    }
}
