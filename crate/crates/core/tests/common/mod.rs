#![allow(dead_code)]

pub mod stub;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use mosaic::metrics::PixelMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Nearest and second-nearest by sorting every squared distance.
/// Returns (index, ss1, ss2) per generated row.
pub fn naive_nn(generated: &PixelMatrix, training: &PixelMatrix) -> Vec<(usize, u64, u64)> {
    (0..generated.len())
        .map(|g| {
            let mut all: Vec<(u64, usize)> = (0..training.len())
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
            all.sort();
            (all[0].1, all[0].0, all[1].0)
        })
        .collect()
}

pub fn naive_rate(nn: &[(usize, u64, u64)], k: f64) -> f64 {
    let hits = nn
        .iter()
        .filter(|&&(_, s1, s2)| {
            let ratio = if s2 == 0 {
                0.0
            } else {
                (s1 as f64).sqrt() / (s2 as f64).sqrt()
            };
            ratio < k
        })
        .count();
    hits as f64 / nn.len() as f64
}

/// `rows` random images of `dim` bytes drawn from a small palette, so exact
/// ties and duplicates actually occur.
pub fn random_matrix(rng: &mut ChaCha8Rng, prefix: &str, rows: usize, dim: usize, levels: u8) -> PixelMatrix {
    let mut m = PixelMatrix::new(dim);
    for i in 0..rows {
        let px: Vec<u8> = (0..dim)
            .map(|_| rng.gen_range(0..levels) * (255 / levels.max(2)))
            .collect();
        m.push(format!("{prefix}{i}"), &px).unwrap();
    }
    m
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Expected rule-stage output per line of captions_40.txt: count pairs, relation hits.
pub type LineExpectation = (&'static [(u8, &'static str)], &'static [&'static str]);

pub const MINER_EXPECTED: [LineExpectation; 40] = [
    (&[(2, "dogs")], &[]),
    (&[(1, "car")], &[]),
    (&[(3, "boxes")], &[]),
    (&[(4, "buildings")], &[]),
    (&[(2, "ships")], &[]),
    (&[], &[]),
    (&[], &[]),
    (&[], &[]),
    (&[], &[]),
    (&[(3, "boxes")], &[]),
    (&[], &[]),
    (&[], &[]),
    (&[], &[]),
    (&[], &[]),
    (&[], &[]),
    (&[], &[]),
    (&[], &[]),
    (&[], &[]),
    (&[], &["left-of"]),
    (&[], &["in-front-of"]),
    (&[], &["behind", "next-to"]),
    (&[], &["right-of"]),
    (&[], &["above"]),
    (&[], &["below"]),
    (&[], &["above", "next-to"]),
    (&[], &["below"]),
    (&[], &["behind"]),
    (&[(7, "ducks")], &["next-to"]),
    (&[], &[]),
    (&[(6, "apples"), (2, "oranges")], &[]),
    (&[(5, "kids")], &["next-to"]),
    (&[(9, "cups"), (8, "plates")], &["above"]),
    (&[(10, "people")], &["next-to"]),
    (&[], &[]),
    (&[(2, "trees")], &["left-of", "right-of"]),
    (&[(1, "book")], &["above"]),
    (&[(2, "cats")], &[]),
    (&[], &[]),
    (&[], &[]),
    (&[], &[]),
];

/// Every file under `dir` except run.json, with contents.
pub fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().unwrap() != "run.json" {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}
