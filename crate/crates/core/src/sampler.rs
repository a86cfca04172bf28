//! Dataset configuration, class budgets, hold-out plans and the per-task scene
//! samplers.
//!
//! Sample `i` of a dataset draws from its own ChaCha stream keyed by
//! `(seed, i)`, so the output does not depend on how generation is scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MosaicError, Result};
use crate::scene::{
    angle_between, canonical, diagonal_index, direction, sector_interval, sector_of_angle, Color, ConditionLabel,
    SceneObject, SceneSpec, Shape, Task, Variant, CLASSIFIER_MAX_COUNT, DEFAULT_MAX_COUNT, NUM_SECTORS, OVERLAP_MARGIN,
    SECTOR_WIDTH_DEG,
};

pub const OBJECT_RADIUS: f64 = 0.06;
pub const MAX_ATTEMPTS: usize = 10_000;
/// Draws spent on one object before the whole scene is restarted.
const OBJECT_RETRIES: usize = 200;

pub const RELATION_DISTANCE: (f64, f64) = (0.15, 0.35);
pub const GRID_CENTER: [f64; 2] = [0.5, 0.5];
pub const GRID_RING: (f64, f64) = (0.18, 0.42);
pub const GRID_ANGLE_JITTER: f64 = 4.0;
pub const GRID_RADIAL_JITTER: f64 = 0.03;
pub const COMPLEX_TOTAL: (usize, usize) = (2, 10);

/// Skewed class weights per 100,000 samples, most frequent class first.
pub const SKEW_WEIGHTS: [u64; 10] = [22550, 17950, 14350, 11450, 9150, 7300, 5850, 4650, 3750, 3000];
const SKEW_DENOMINATOR: u64 = 100_000;

pub const CONCEPT_GRID: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    #[default]
    Uniform,
    Skewed,
}

fn default_resolution() -> u32 {
    128
}

fn default_max_count() -> u32 {
    DEFAULT_MAX_COUNT
}

fn default_count_color() -> Color {
    Color::Gray
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub task: Task,
    pub variant: Variant,
    pub size: u64,
    #[serde(default)]
    pub distribution: Distribution,
    #[serde(default)]
    pub diagonals_removed: u32,
    #[serde(default = "default_resolution")]
    pub resolution: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_count")]
    pub max_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    /// Sphere color for Base and Grid counting scenes.
    #[serde(default = "default_count_color")]
    pub base_count_color: Color,
}

impl DatasetConfig {
    pub fn new(task: Task, variant: Variant, size: u64) -> Self {
        Self {
            task,
            variant,
            size,
            distribution: Distribution::Uniform,
            diagonals_removed: 0,
            resolution: default_resolution(),
            seed: 0,
            max_count: DEFAULT_MAX_COUNT,
            output_dir: None,
            base_count_color: Color::Gray,
        }
    }

    /// True when labels form a 10x10 concept-pair grid.
    pub fn uses_concept_grid(&self) -> bool {
        self.task == Task::Attribution || self.variant == Variant::Composition
    }

    /// Number of classes of the single marginal for non-grid settings.
    pub fn num_classes(&self) -> usize {
        match self.task {
            Task::Counting => self.max_count as usize,
            _ => NUM_SECTORS as usize,
        }
    }

    /// Largest object count a scene of this config can contain.
    pub fn scene_capacity(&self) -> usize {
        match (self.task, self.variant) {
            (Task::Counting, _) => self.max_count as usize,
            (_, Variant::Complex) => COMPLEX_TOTAL.1,
            _ => 2,
        }
    }

    /// All problems with this config, in a stable order.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let variant_ok = match self.task {
            Task::Attribution => matches!(self.variant, Variant::Base | Variant::Complex),
            Task::SpatialRelations => true,
            Task::Counting => !matches!(self.variant, Variant::Complex),
        };
        if !variant_ok {
            out.push(format!(
                "variant {} is not defined for task {}",
                self.variant, self.task
            ));
        }
        if self.size == 0 {
            out.push("size must be positive".into());
        }
        if self.max_count == 0 || self.max_count > CLASSIFIER_MAX_COUNT {
            out.push(format!("max_count must lie in 1..={CLASSIFIER_MAX_COUNT}"));
        }
        if self.task == Task::Counting
            && matches!(self.variant, Variant::Grid | Variant::Composition)
            && self.max_count != DEFAULT_MAX_COUNT
        {
            out.push(format!("{} counting requires max_count 10", self.variant));
        }
        if self.diagonals_removed > 0 {
            let grid_ok = (self.task == Task::Attribution && self.variant == Variant::Base)
                || (self.task != Task::Attribution && self.variant == Variant::Composition);
            if !grid_ok {
                out.push("hold-out requires a composition grid".into());
            }
            if self.diagonals_removed as usize >= CONCEPT_GRID {
                out.push("diagonals_removed must be below 10".into());
            }
        }
        if self.distribution == Distribution::Skewed
            && (self.uses_concept_grid() || self.num_classes() != SKEW_WEIGHTS.len())
        {
            out.push("skewed distribution requires a 10-class task".into());
        }
        let classes = if self.uses_concept_grid() {
            CONCEPT_GRID * (CONCEPT_GRID - (self.diagonals_removed as usize).min(CONCEPT_GRID - 1))
        } else {
            self.num_classes().max(1)
        };
        if self.size > 0 && (self.size as usize) < classes {
            out.push(format!("size below class count ({} < {classes})", self.size));
        }
        if self.resolution == 0 || self.resolution > 1024 {
            out.push("resolution must lie in 1..=1024".into());
        }
        if self.base_count_color == Color::Brown {
            out.push("base_count_color must be a palette color".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(MosaicError::Config(v))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassAllocation {
    pub counts: Vec<u64>,
    pub total: u64,
}

/// Splits `total` samples over `num_classes` classes.
///
/// Uniform: floor division, remainder to the lowest class indices. Skewed:
/// fixed weights with largest-remainder rounding, ties to the lower index.
pub fn allocate_counts(distribution: Distribution, total: u64, num_classes: usize) -> Result<ClassAllocation> {
    if num_classes == 0 {
        return Err(MosaicError::Config(vec!["at least one class is required".into()]));
    }
    if total < num_classes as u64 {
        return Err(MosaicError::Config(vec![format!(
            "size below class count ({total} < {num_classes})"
        )]));
    }
    let counts = match distribution {
        Distribution::Uniform => {
            let base = total / num_classes as u64;
            let extra = (total % num_classes as u64) as usize;
            (0..num_classes).map(|i| base + u64::from(i < extra)).collect()
        }
        Distribution::Skewed => {
            if num_classes != SKEW_WEIGHTS.len() {
                return Err(MosaicError::Config(vec![
                    "skewed distribution requires a 10-class task".into(),
                ]));
            }
            let mut counts: Vec<u64> = SKEW_WEIGHTS.iter().map(|w| total * w / SKEW_DENOMINATOR).collect();
            let remainders: Vec<u64> = SKEW_WEIGHTS.iter().map(|w| total * w % SKEW_DENOMINATOR).collect();
            let left = total - counts.iter().sum::<u64>();
            let mut order: Vec<usize> = (0..num_classes).collect();
            order.sort_by(|&a, &b| remainders[b].cmp(&remainders[a]).then(a.cmp(&b)));
            for &i in order.iter().take(left as usize) {
                counts[i] += 1;
            }
            counts
        }
    };
    Ok(ClassAllocation { counts, total })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoldoutPlan {
    pub n: usize,
    /// Diagonals `1..=removed` are unseen.
    pub removed: usize,
    pub per_cell: u64,
    /// Row-major `n x n`; `true` means the cell appears in training.
    pub seen_mask: Vec<bool>,
    pub realized_total: u64,
}

impl HoldoutPlan {
    pub fn is_seen(&self, row: usize, col: usize) -> bool {
        self.seen_mask[row * self.n + col]
    }

    pub fn seen_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n * self.n)
            .filter(|&c| self.seen_mask[c])
            .map(|c| (c / self.n, c % self.n))
    }

    pub fn unseen_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n * self.n)
            .filter(|&c| !self.seen_mask[c])
            .map(|c| (c / self.n, c % self.n))
    }
}

/// Removes diagonals `1..=removed` from an `n x n` grid and spreads `budget`
/// evenly over the remaining cells.
pub fn build_holdout_plan(n: usize, removed: usize, budget: u64) -> Result<HoldoutPlan> {
    if n == 0 || removed >= n {
        return Err(MosaicError::Argument(format!(
            "cannot remove {removed} diagonals from a {n}x{n} grid"
        )));
    }
    let seen = (n * n - removed * n) as u64;
    if budget < seen {
        return Err(MosaicError::Config(vec![format!(
            "budget {budget} cannot cover {seen} seen cells"
        )]));
    }
    let mut seen_mask = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            seen_mask.push(diagonal_index(row, col, n)? > removed);
        }
    }
    let per_cell = budget / seen;
    Ok(HoldoutPlan {
        n,
        removed,
        per_cell,
        seen_mask,
        realized_total: per_cell * seen,
    })
}

/// Label for cell `(row, col)` of the task's concept grid.
pub fn cell_label(task: Task, row: usize, col: usize) -> Result<ConditionLabel> {
    let color = Color::from_index(col)?;
    Ok(match task {
        Task::Attribution => ConditionLabel::attribution(Color::from_index(row)?, color),
        Task::SpatialRelations => ConditionLabel::relation(row as u8 + 1).with_color(color),
        Task::Counting => ConditionLabel::count(row as u32 + 1).with_color(color),
    })
}

/// Inverse of [`cell_label`].
pub fn label_cell(label: &ConditionLabel) -> Option<(usize, usize)> {
    if let (Some(s), Some(c)) = (label.sphere_color, label.cube_color) {
        return Some((s.index()?, c.index()?));
    }
    let col = label.object_color?.index()?;
    let row = match (label.relation_sector, label.count) {
        (Some(s), None) => usize::from(s).checked_sub(1)?,
        (None, Some(c)) => (c as usize).checked_sub(1)?,
        _ => return None,
    };
    (row < CONCEPT_GRID).then_some((row, col))
}

/// The RNG stream of sample `index`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn object(shape: Shape, color: Color, center: [f64; 2]) -> SceneObject {
    SceneObject {
        shape,
        color,
        center,
        radius: OBJECT_RADIUS,
    }
}

/// Radius of the circle that bounds an object's footprint.
fn footprint(o: &SceneObject) -> f64 {
    match o.shape {
        Shape::Sphere => o.radius,
        Shape::Cube => o.radius * std::f64::consts::SQRT_2,
    }
}

fn clear_of(candidate: &SceneObject, placed: &[SceneObject]) -> bool {
    candidate.inside_canvas()
        && placed.iter().all(|p| {
            let dx = candidate.center[0] - p.center[0];
            let dy = candidate.center[1] - p.center[1];
            let min = footprint(candidate) + footprint(p) + OVERLAP_MARGIN;
            dx * dx + dy * dy >= min * min
        })
}

/// Draw budget shared by all placements of one scene.
struct Attempts {
    used: usize,
}

impl Attempts {
    fn new() -> Self {
        Self { used: 0 }
    }

    fn spend(&mut self, what: &str) -> Result<()> {
        self.used += 1;
        if self.used > MAX_ATTEMPTS {
            Err(MosaicError::Generation(format!(
                "could not place {what} within {MAX_ATTEMPTS} attempts"
            )))
        } else {
            Ok(())
        }
    }
}

fn uniform_center<R: Rng>(rng: &mut R, radius: f64) -> [f64; 2] {
    let x = canonical(rng.gen_range(radius..=1.0 - radius));
    let y = canonical(rng.gen_range(radius..=1.0 - radius));
    [x, y]
}

/// Places `shapes` one after another at uniform positions, restarting the scene
/// when an object cannot be fitted.
fn place_uniform<R: Rng>(
    rng: &mut R,
    fixed: &[SceneObject],
    shapes: &[(Shape, Color)],
    attempts: &mut Attempts,
) -> Result<Vec<SceneObject>> {
    'scene: loop {
        let mut placed = fixed.to_vec();
        for &(shape, color) in shapes {
            let mut tries = 0;
            loop {
                attempts.spend("objects")?;
                let candidate = object(shape, color, uniform_center(rng, OBJECT_RADIUS));
                if clear_of(&candidate, &placed) {
                    placed.push(candidate);
                    break;
                }
                tries += 1;
                if tries >= OBJECT_RETRIES {
                    continue 'scene;
                }
            }
        }
        return Ok(placed);
    }
}

/// A position inside sector `sector` of the grid ring around `GRID_CENTER`.
fn grid_center<R: Rng>(rng: &mut R, sector: u8) -> Result<[f64; 2]> {
    let (lo, _) = sector_interval(sector)?;
    let mid = lo + SECTOR_WIDTH_DEG / 2.0;
    let theta = mid + rng.gen_range(-GRID_ANGLE_JITTER..=GRID_ANGLE_JITTER);
    let ring = (GRID_RING.0 + GRID_RING.1) / 2.0;
    let dist = ring + rng.gen_range(-GRID_RADIAL_JITTER..=GRID_RADIAL_JITTER);
    let d = direction(theta);
    Ok([
        canonical(GRID_CENTER[0] + dist * d[0]),
        canonical(GRID_CENTER[1] + dist * d[1]),
    ])
}

fn in_sector(from: [f64; 2], to: [f64; 2], sector: u8) -> bool {
    sector_of_angle(angle_between(from, to)) == Some(sector)
}

fn complex_total<R: Rng>(rng: &mut R) -> usize {
    rng.gen_range(COMPLEX_TOTAL.0..=COMPLEX_TOTAL.1)
}

/// Attribution scene: one sphere and one cube with the labeled colors, plus
/// duplicates of either identity in the Complex variant. `total` overrides the
/// random Complex object count.
pub fn sample_attribution_scene<R: Rng>(
    config: &DatasetConfig,
    label: &ConditionLabel,
    total: Option<usize>,
    rng: &mut R,
) -> Result<SceneSpec> {
    let (Some(sphere), Some(cube)) = (label.sphere_color, label.cube_color) else {
        return Err(MosaicError::Argument(
            "attribution label needs sphere and cube colors".into(),
        ));
    };
    if sphere.index().is_none() || cube.index().is_none() {
        return Err(MosaicError::Argument(
            "attribution colors must come from the palette".into(),
        ));
    }
    let total = match config.variant {
        Variant::Complex => total.unwrap_or_else(|| complex_total(rng)),
        _ => 2,
    };
    if !(COMPLEX_TOTAL.0..=COMPLEX_TOTAL.1).contains(&total) {
        return Err(MosaicError::Argument(format!(
            "attribution scenes hold 2..=10 objects, got {total}"
        )));
    }
    let mut shapes = vec![(Shape::Sphere, sphere), (Shape::Cube, cube)];
    for _ in 2..total {
        shapes.push(if rng.gen_bool(0.5) {
            (Shape::Sphere, sphere)
        } else {
            (Shape::Cube, cube)
        });
    }
    let mut attempts = Attempts::new();
    let objects = place_uniform(rng, &[], &shapes, &mut attempts)?;
    Ok(SceneSpec {
        task: config.task,
        variant: config.variant,
        labels: *label,
        seed: config.seed,
        objects,
    })
}

/// Distractor color for relation scenes with the given target color.
pub fn distractor_color(target: Color) -> Color {
    if target == Color::Blue {
        Color::Gray
    } else {
        Color::Blue
    }
}

/// Relation scene: BROWN reference first, target second, distractors after.
pub fn sample_relation_scene<R: Rng>(
    config: &DatasetConfig,
    label: &ConditionLabel,
    total: Option<usize>,
    rng: &mut R,
) -> Result<SceneSpec> {
    let sector = label
        .relation_sector
        .ok_or_else(|| MosaicError::Argument("relation label needs a sector".into()))?;
    let (lo, hi) = sector_interval(sector)?;
    let target_color = match config.variant {
        Variant::Composition => label
            .object_color
            .filter(|c| c.index().is_some())
            .ok_or_else(|| MosaicError::Argument("composition label needs a palette color".into()))?,
        _ => Color::Red,
    };
    let mut attempts = Attempts::new();
    let (reference, target) = loop {
        attempts.spend("relation target")?;
        let (ref_center, target_center) = if config.variant == Variant::Grid {
            (GRID_CENTER, grid_center(rng, sector)?)
        } else {
            let r = uniform_center(rng, OBJECT_RADIUS);
            let theta = rng.gen_range(lo..hi);
            let d = rng.gen_range(RELATION_DISTANCE.0..=RELATION_DISTANCE.1);
            let dir = direction(theta);
            (r, [canonical(r[0] + d * dir[0]), canonical(r[1] + d * dir[1])])
        };
        let reference = object(Shape::Sphere, Color::Brown, ref_center);
        let target = object(Shape::Sphere, target_color, target_center);
        if clear_of(&target, &[reference]) && in_sector(ref_center, target_center, sector) {
            break (reference, target);
        }
    };
    let total = match config.variant {
        Variant::Complex => total.unwrap_or_else(|| complex_total(rng)),
        _ => 2,
    };
    if !(COMPLEX_TOTAL.0..=COMPLEX_TOTAL.1).contains(&total) {
        return Err(MosaicError::Argument(format!(
            "relation scenes hold 2..=10 objects, got {total}"
        )));
    }
    let distractors = vec![(Shape::Sphere, distractor_color(target_color)); total - 2];
    let objects = place_uniform(rng, &[reference, target], &distractors, &mut attempts)?;
    Ok(SceneSpec {
        task: config.task,
        variant: config.variant,
        labels: *label,
        seed: config.seed,
        objects,
    })
}

/// Counting scene: exactly `count` same-colored spheres. In the Grid variant
/// sphere `m` sits in sector `m`.
pub fn sample_counting_scene<R: Rng>(config: &DatasetConfig, label: &ConditionLabel, rng: &mut R) -> Result<SceneSpec> {
    let count = label
        .count
        .ok_or_else(|| MosaicError::Argument("counting label needs a count".into()))?;
    if count == 0 || count > config.max_count {
        return Err(MosaicError::Argument(format!(
            "count {count} outside 1..={}",
            config.max_count
        )));
    }
    let color = match config.variant {
        Variant::Composition => label
            .object_color
            .filter(|c| c.index().is_some())
            .ok_or_else(|| MosaicError::Argument("composition label needs a palette color".into()))?,
        _ => config.base_count_color,
    };
    let mut attempts = Attempts::new();
    let objects = if config.variant == Variant::Grid {
        if count > u32::from(NUM_SECTORS) {
            return Err(MosaicError::Argument(format!(
                "grid counting supports at most 10 objects, got {count}"
            )));
        }
        let mut placed: Vec<SceneObject> = Vec::with_capacity(count as usize);
        for m in 1..=count as u8 {
            loop {
                attempts.spend("grid object")?;
                let candidate = object(Shape::Sphere, color, grid_center(rng, m)?);
                if clear_of(&candidate, &placed) && in_sector(GRID_CENTER, candidate.center, m) {
                    placed.push(candidate);
                    break;
                }
            }
        }
        placed
    } else {
        let shapes = vec![(Shape::Sphere, color); count as usize];
        place_uniform(rng, &[], &shapes, &mut attempts)?
    };
    Ok(SceneSpec {
        task: config.task,
        variant: config.variant,
        labels: *label,
        seed: config.seed,
        objects,
    })
}

pub fn sample_scene<R: Rng>(config: &DatasetConfig, label: &ConditionLabel, rng: &mut R) -> Result<SceneSpec> {
    match config.task {
        Task::Attribution => sample_attribution_scene(config, label, None, rng),
        Task::SpatialRelations => sample_relation_scene(config, label, None, rng),
        Task::Counting => sample_counting_scene(config, label, rng),
    }
}

/// Labels of the training split in emission order, plus held-out conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelPlan {
    pub labels: Vec<ConditionLabel>,
    pub unseen: Vec<ConditionLabel>,
    pub holdout: Option<HoldoutPlan>,
}

pub fn plan_labels(config: &DatasetConfig) -> Result<LabelPlan> {
    config.validate()?;
    if config.uses_concept_grid() {
        let plan = build_holdout_plan(CONCEPT_GRID, config.diagonals_removed as usize, config.size)?;
        let mut labels = Vec::with_capacity(plan.realized_total as usize);
        for (row, col) in plan.seen_cells() {
            let label = cell_label(config.task, row, col)?;
            labels.extend(std::iter::repeat_n(label, plan.per_cell as usize));
        }
        let unseen = plan
            .unseen_cells()
            .map(|(row, col)| cell_label(config.task, row, col))
            .collect::<Result<_>>()?;
        Ok(LabelPlan {
            labels,
            unseen,
            holdout: Some(plan),
        })
    } else {
        let alloc = allocate_counts(config.distribution, config.size, config.num_classes())?;
        let mut labels = Vec::with_capacity(config.size as usize);
        for (class, &n) in alloc.counts.iter().enumerate() {
            let label = match config.task {
                Task::Counting => ConditionLabel::count(class as u32 + 1),
                _ => ConditionLabel::relation(class as u8 + 1),
            };
            labels.extend(std::iter::repeat_n(label, n as usize));
        }
        Ok(LabelPlan {
            labels,
            unseen: Vec::new(),
            holdout: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub index: u64,
    pub scene: SceneSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub unseen: Vec<ConditionLabel>,
    pub holdout: Option<HoldoutPlan>,
}

pub fn sample_at(config: &DatasetConfig, label: &ConditionLabel, index: u64) -> Result<Sample> {
    let mut rng = sample_rng(config.seed, index);
    let scene = sample_scene(config, label, &mut rng)?;
    Ok(Sample { index, scene })
}

/// Generates every training scene of `config`. Runs on the current rayon pool
/// when the `parallel` feature is on; results are identical either way.
pub fn build_dataset(config: &DatasetConfig) -> Result<Dataset> {
    let plan = plan_labels(config)?;
    #[cfg(feature = "parallel")]
    let samples = {
        use rayon::prelude::*;
        plan.labels
            .par_iter()
            .enumerate()
            .map(|(i, label)| sample_at(config, label, i as u64))
            .collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let samples = plan
        .labels
        .iter()
        .enumerate()
        .map(|(i, label)| sample_at(config, label, i as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        samples,
        unseen: plan.unseen,
        holdout: plan.holdout,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skewed_tables() {
        let cases: [(u64, [u64; 10]); 4] = [
            (
                100_000,
                [22550, 17950, 14350, 11450, 9150, 7300, 5850, 4650, 3750, 3000],
            ),
            (50_000, [11275, 8975, 7175, 5725, 4575, 3650, 2925, 2325, 1875, 1500]),
            (10_000, [2255, 1795, 1435, 1145, 915, 730, 585, 465, 375, 300]),
            (2_000, [451, 359, 287, 229, 183, 146, 117, 93, 75, 60]),
        ];
        for (size, want) in cases {
            assert_eq!(allocate_counts(Distribution::Skewed, size, 10).unwrap().counts, want);
        }
    }

    #[test]
    fn skewed_largest_remainder() {
        // exact rational shares rounded by largest remainder
        let a = allocate_counts(Distribution::Skewed, 7313, 10).unwrap();
        assert_eq!(a.counts, [1649, 1313, 1050, 837, 669, 534, 428, 340, 274, 219]);
        let b = allocate_counts(Distribution::Skewed, 777, 10).unwrap();
        assert_eq!(b.counts, [175, 140, 112, 89, 71, 57, 45, 36, 29, 23]);
    }

    #[test]
    fn uniform_split() {
        assert_eq!(
            allocate_counts(Distribution::Uniform, 2000, 10).unwrap().counts,
            vec![200; 10]
        );
        assert_eq!(
            allocate_counts(Distribution::Uniform, 13, 4).unwrap().counts,
            vec![4, 3, 3, 3]
        );
        assert!(allocate_counts(Distribution::Uniform, 5, 10).is_err());
        assert!(allocate_counts(Distribution::Skewed, 100, 20).is_err());
    }

    #[test]
    fn holdout_budgets() {
        for (k, per_cell, total) in [
            (0, 1000, 100_000),
            (1, 1111, 99_990),
            (3, 1428, 99_960),
            (5, 2000, 100_000),
            (8, 5000, 100_000),
        ] {
            let plan = build_holdout_plan(10, k, 100_000).unwrap();
            assert_eq!(plan.per_cell, per_cell);
            assert_eq!(plan.realized_total, total);
            assert_eq!(plan.seen_cells().count(), 100 - 10 * k);
        }
        assert!(build_holdout_plan(10, 10, 100_000).is_err());
        assert!(build_holdout_plan(10, 5, 49).is_err());
    }

    #[test]
    fn holdout_keeps_every_concept() {
        for k in 0..10 {
            let plan = build_holdout_plan(10, k, 10_000).unwrap();
            for i in 0..10 {
                assert!((0..10).any(|j| plan.is_seen(i, j)));
                assert!((0..10).any(|j| plan.is_seen(j, i)));
            }
        }
    }

    #[test]
    fn cell_labels_invert() {
        for task in [Task::Attribution, Task::SpatialRelations, Task::Counting] {
            for row in 0..10 {
                for col in 0..10 {
                    let l = cell_label(task, row, col).unwrap();
                    assert_eq!(label_cell(&l), Some((row, col)));
                }
            }
        }
    }

    #[test]
    fn config_violations() {
        let mut c = DatasetConfig::new(Task::Counting, Variant::Base, 2000);
        assert!(c.violations().is_empty());
        c.diagonals_removed = 3;
        assert_eq!(c.violations(), vec!["hold-out requires a composition grid".to_string()]);
        let mut s = DatasetConfig::new(Task::Counting, Variant::Base, 5);
        s.distribution = Distribution::Skewed;
        assert!(s.violations().iter().any(|v| v.starts_with("size below class count")));
        let a = DatasetConfig::new(Task::Attribution, Variant::Grid, 200);
        assert!(!a.violations().is_empty());
        let mut skew_grid = DatasetConfig::new(Task::Attribution, Variant::Base, 2000);
        skew_grid.distribution = Distribution::Skewed;
        assert!(!skew_grid.violations().is_empty());
    }

    #[test]
    fn attribution_base_scene() {
        let config = DatasetConfig::new(Task::Attribution, Variant::Base, 100);
        let label = ConditionLabel::attribution(Color::Black, Color::Red);
        let scene = sample_attribution_scene(&config, &label, None, &mut sample_rng(1, 0)).unwrap();
        assert_eq!(scene.objects.len(), 2);
        assert_eq!(
            (scene.objects[0].shape, scene.objects[0].color),
            (Shape::Sphere, Color::Black)
        );
        assert_eq!(
            (scene.objects[1].shape, scene.objects[1].color),
            (Shape::Cube, Color::Red)
        );
        scene.validate(10).unwrap();
    }

    #[test]
    fn complex_attribution_forced_counts() {
        let config = DatasetConfig::new(Task::Attribution, Variant::Complex, 100);
        let label = ConditionLabel::attribution(Color::Cyan, Color::Yellow);
        let two = sample_attribution_scene(&config, &label, Some(2), &mut sample_rng(3, 0)).unwrap();
        assert_eq!(two.objects.len(), 2);
        for i in 0..1000 {
            let s = sample_attribution_scene(&config, &label, Some(10), &mut sample_rng(3, i)).unwrap();
            assert_eq!(s.objects.len(), 10);
            assert!(s.objects.iter().all(|o| matches!(
                (o.shape, o.color),
                (Shape::Sphere, Color::Cyan) | (Shape::Cube, Color::Yellow)
            )));
            s.validate(10).unwrap();
        }
    }

    #[test]
    fn relation_sector_seven() {
        let config = DatasetConfig::new(Task::SpatialRelations, Variant::Base, 100);
        for i in 0..200 {
            let s = sample_relation_scene(&config, &ConditionLabel::relation(7), None, &mut sample_rng(5, i)).unwrap();
            let a = angle_between(s.objects[0].center, s.objects[1].center);
            assert!((216.0..234.0).contains(&a), "{a}");
            assert_eq!(s.objects[1].color, Color::Red);
        }
    }

    #[test]
    fn grid_relation_reference_is_centered() {
        let config = DatasetConfig::new(Task::SpatialRelations, Variant::Grid, 100);
        let s = sample_relation_scene(&config, &ConditionLabel::relation(1), None, &mut sample_rng(0, 0)).unwrap();
        assert_eq!(s.objects[0].center, [0.5, 0.5]);
        assert_eq!(s.objects[0].color, Color::Brown);
    }

    #[test]
    fn complex_relation_distractors() {
        let config = DatasetConfig::new(Task::SpatialRelations, Variant::Complex, 100);
        for i in 0..300 {
            let s = sample_relation_scene(
                &config,
                &ConditionLabel::relation((i % 10) as u8 + 1),
                Some(10),
                &mut sample_rng(9, i),
            )
            .unwrap();
            assert_eq!(s.objects.len(), 10);
            assert!(s.objects[2..].iter().all(|o| o.color == Color::Blue));
            s.validate(10).unwrap();
        }
        let mut comp = DatasetConfig::new(Task::SpatialRelations, Variant::Complex, 100);
        comp.variant = Variant::Composition;
        let s = sample_relation_scene(
            &comp,
            &ConditionLabel::relation(2).with_color(Color::Blue),
            None,
            &mut sample_rng(0, 1),
        )
        .unwrap();
        assert_eq!(s.objects[1].color, Color::Blue);
        assert_eq!(distractor_color(Color::Blue), Color::Gray);
    }

    #[test]
    fn counting_scenes() {
        let grid = DatasetConfig::new(Task::Counting, Variant::Grid, 100);
        let one = sample_counting_scene(&grid, &ConditionLabel::count(1), &mut sample_rng(0, 0)).unwrap();
        let a = angle_between(GRID_CENTER, one.objects[0].center);
        assert!((0.0..18.0).contains(&a));

        let base = DatasetConfig::new(Task::Counting, Variant::Base, 100);
        let ten = sample_counting_scene(&base, &ConditionLabel::count(10), &mut sample_rng(0, 1)).unwrap();
        assert_eq!(ten.objects.len(), 10);
        ten.validate(10).unwrap();
        assert!(ten.objects.iter().all(|o| o.color == Color::Gray));

        assert!(sample_counting_scene(&base, &ConditionLabel::count(0), &mut sample_rng(0, 2)).is_err());
        assert!(sample_counting_scene(&base, &ConditionLabel::count(11), &mut sample_rng(0, 2)).is_err());
    }

    #[test]
    fn twenty_spheres_fit() {
        let mut config = DatasetConfig::new(Task::Counting, Variant::Base, 100);
        config.max_count = 20;
        for i in 0..50 {
            let s = sample_counting_scene(&config, &ConditionLabel::count(20), &mut sample_rng(11, i)).unwrap();
            s.validate(20).unwrap();
        }
    }

    #[test]
    fn dataset_counts_per_class() {
        let mut config = DatasetConfig::new(Task::Counting, Variant::Base, 2000);
        config.seed = 7;
        let ds = build_dataset(&config).unwrap();
        assert_eq!(ds.samples.len(), 2000);
        for c in 1..=10 {
            assert_eq!(
                ds.samples.iter().filter(|s| s.scene.labels.count == Some(c)).count(),
                200
            );
        }
    }

    #[test]
    fn attribution_holdout_dataset() {
        let mut config = DatasetConfig::new(Task::Attribution, Variant::Base, 10_000);
        config.diagonals_removed = 1;
        let plan = plan_labels(&config).unwrap();
        assert_eq!(plan.labels.len(), 9990);
        assert_eq!(plan.unseen.len(), 10);
        for l in &plan.labels {
            let (r, c) = label_cell(l).unwrap();
            assert!(diagonal_index(r, c, 10).unwrap() > 1);
        }
    }
}
