//! Domain types shared by every stage of the pipeline: the color palette,
//! object and scene descriptions, condition labels, and the angular sector
//! and diagonal geometry that the sampler and the hold-out planner agree on.
//!
//! Coordinates live in the unit square with `y` growing downward. An angle
//! `theta` (degrees, counterclockwise from 3 o'clock) points along
//! `(cos theta, -sin theta)`, which is counterclockwise on screen.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{MosaicError, Result};

/// Number of angular sectors (and of palette colors).
pub const NUM_SECTORS: u8 = 10;
pub const SECTOR_WIDTH_DEG: f64 = 18.0;
pub const SECTOR_PITCH_DEG: f64 = 36.0;

/// Minimum clearance between any two objects, in canonical units.
pub const OVERLAP_MARGIN: f64 = 0.01;
pub const DEFAULT_MAX_COUNT: u32 = 10;
pub const CLASSIFIER_MAX_COUNT: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Color {
    Red,
    Green,
    Blue,
    Yellow,
    Purple,
    Orange,
    Cyan,
    Gray,
    White,
    Black,
    /// Reference color for relation scenes. Never a class label.
    Brown,
}

/// The ten class colors in canonical order.
pub const PALETTE: [Color; 10] = [
    Color::Red,
    Color::Green,
    Color::Blue,
    Color::Yellow,
    Color::Purple,
    Color::Orange,
    Color::Cyan,
    Color::Gray,
    Color::White,
    Color::Black,
];

impl Color {
    /// Palette index, `None` for BROWN.
    pub fn index(self) -> Option<usize> {
        PALETTE.iter().position(|&c| c == self)
    }

    pub fn from_index(index: usize) -> Result<Color> {
        PALETTE
            .get(index)
            .copied()
            .ok_or_else(|| MosaicError::Argument(format!("color index {index} outside 0..10")))
    }

    pub fn rgb(self) -> [u8; 3] {
        match self {
            Color::Red => [220, 50, 47],
            Color::Green => [40, 160, 60],
            Color::Blue => [30, 90, 220],
            Color::Yellow => [235, 210, 40],
            Color::Purple => [130, 60, 180],
            Color::Orange => [240, 140, 30],
            Color::Cyan => [40, 200, 210],
            Color::Gray => [128, 128, 128],
            Color::White => [245, 245, 245],
            Color::Black => [25, 25, 25],
            Color::Brown => [120, 80, 40],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "RED",
            Color::Green => "GREEN",
            Color::Blue => "BLUE",
            Color::Yellow => "YELLOW",
            Color::Purple => "PURPLE",
            Color::Orange => "ORANGE",
            Color::Cyan => "CYAN",
            Color::Gray => "GRAY",
            Color::White => "WHITE",
            Color::Black => "BLACK",
            Color::Brown => "BROWN",
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Color {
    type Err = MosaicError;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.to_ascii_uppercase();
        PALETTE
            .iter()
            .chain(std::iter::once(&Color::Brown))
            .find(|c| c.name() == upper)
            .copied()
            .ok_or_else(|| MosaicError::Argument(format!("unknown color {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Sphere,
    Cube,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Attribution,
    SpatialRelations,
    Counting,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Attribution => "attribution",
            Task::SpatialRelations => "spatial_relations",
            Task::Counting => "counting",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Base,
    Complex,
    Grid,
    Composition,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::Complex => "complex",
            Variant::Grid => "grid",
            Variant::Composition => "composition",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub shape: Shape,
    pub color: Color,
    pub center: [f64; 2],
    /// Disc radius, or half-extent for cubes.
    pub radius: f64,
}

impl SceneObject {
    pub fn inside_canvas(&self) -> bool {
        self.radius > 0.0 && self.center.iter().all(|&c| c >= self.radius && c <= 1.0 - self.radius)
    }

    /// True when the two objects keep at least `margin` clearance.
    pub fn separated_from(&self, other: &SceneObject, margin: f64) -> bool {
        let dx = self.center[0] - other.center[0];
        let dy = self.center[1] - other.center[1];
        let min = self.radius + other.radius + margin;
        dx * dx + dy * dy >= min * min
    }
}

/// The conditioning signal of one sample. Which fields are present depends on
/// the task and variant; see [`ConditionLabel::check_shape`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConditionLabel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation_sector: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sphere_color: Option<Color>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cube_color: Option<Color>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_color: Option<Color>,
}

impl ConditionLabel {
    pub fn count(count: u32) -> Self {
        Self {
            count: Some(count),
            ..Self::default()
        }
    }

    pub fn relation(sector: u8) -> Self {
        Self {
            relation_sector: Some(sector),
            ..Self::default()
        }
    }

    pub fn attribution(sphere: Color, cube: Color) -> Self {
        Self {
            sphere_color: Some(sphere),
            cube_color: Some(cube),
            ..Self::default()
        }
    }

    pub fn with_color(mut self, color: Color) -> Self {
        self.object_color = Some(color);
        self
    }

    /// Checks that exactly the fields required by `(task, variant)` are set.
    pub fn check_shape(&self, task: Task, variant: Variant) -> Result<()> {
        let composition = variant == Variant::Composition;
        let want = match task {
            Task::Attribution => [false, false, true, true, false],
            Task::SpatialRelations => [false, true, false, false, composition],
            Task::Counting => [true, false, false, false, composition],
        };
        let have = [
            self.count.is_some(),
            self.relation_sector.is_some(),
            self.sphere_color.is_some(),
            self.cube_color.is_some(),
            self.object_color.is_some(),
        ];
        if want != have {
            return Err(MosaicError::Validation(format!(
                "label {} does not fit {task}/{variant}",
                self.key()
            )));
        }
        for color in [self.sphere_color, self.cube_color, self.object_color]
            .into_iter()
            .flatten()
        {
            if color == Color::Brown {
                return Err(MosaicError::Validation("BROWN is not a class color".into()));
            }
        }
        if let Some(s) = self.relation_sector {
            if !(1..=NUM_SECTORS).contains(&s) {
                return Err(MosaicError::Validation(format!("sector {s} outside 1..10")));
            }
        }
        if self.count == Some(0) {
            return Err(MosaicError::Validation("count must be at least 1".into()));
        }
        Ok(())
    }

    /// Stable, filesystem-safe identifier such as `count3-red` or `sphere-black_cube-red`.
    pub fn key(&self) -> String {
        let mut parts = Vec::new();
        if let Some(c) = self.count {
            parts.push(format!("count{c}"));
        }
        if let Some(s) = self.relation_sector {
            parts.push(format!("sector{s}"));
        }
        if let Some(c) = self.sphere_color {
            parts.push(format!("sphere-{}", c.name().to_ascii_lowercase()));
        }
        if let Some(c) = self.cube_color {
            parts.push(format!("cube-{}", c.name().to_ascii_lowercase()));
        }
        if let Some(c) = self.object_color {
            parts.push(c.name().to_ascii_lowercase());
        }
        if parts.is_empty() {
            "unlabeled".to_string()
        } else {
            parts.join("_")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub task: Task,
    pub variant: Variant,
    pub labels: ConditionLabel,
    pub seed: u64,
    pub objects: Vec<SceneObject>,
}

impl SceneSpec {
    /// Checks canvas containment, pairwise clearance and the object count bound.
    pub fn validate(&self, max_count: usize) -> Result<()> {
        if self.objects.is_empty() || self.objects.len() > max_count {
            return Err(MosaicError::Structural(format!(
                "{} objects, expected 1..={max_count}",
                self.objects.len()
            )));
        }
        for (i, a) in self.objects.iter().enumerate() {
            if !a.inside_canvas() {
                return Err(MosaicError::Structural(format!("object {i} leaves the canvas")));
            }
            for (j, b) in self.objects.iter().enumerate().skip(i + 1) {
                if !a.separated_from(b, OVERLAP_MARGIN) {
                    return Err(MosaicError::Structural(format!("objects {i} and {j} overlap")));
                }
            }
        }
        Ok(())
    }
}

/// Half-open interval `[lo, hi)` in degrees covered by `sector` (1-based).
pub fn sector_interval(sector: u8) -> Result<(f64, f64)> {
    if !(1..=NUM_SECTORS).contains(&sector) {
        return Err(MosaicError::Argument(format!("sector {sector} outside 1..10")));
    }
    let lo = SECTOR_PITCH_DEG * f64::from(sector - 1);
    Ok((lo, lo + SECTOR_WIDTH_DEG))
}

pub fn normalize_degrees(theta: f64) -> f64 {
    let t = theta.rem_euclid(360.0);
    // rem_euclid rounds tiny negatives up to exactly 360
    if t >= 360.0 {
        0.0
    } else {
        t
    }
}

/// Sector containing `theta`, or `None` when it falls into one of the gaps.
pub fn sector_of_angle(theta: f64) -> Option<u8> {
    if !theta.is_finite() {
        return None;
    }
    let t = normalize_degrees(theta);
    let slot = (t / SECTOR_PITCH_DEG).floor();
    let offset = t - slot * SECTOR_PITCH_DEG;
    if offset < SECTOR_WIDTH_DEG && slot < f64::from(NUM_SECTORS) {
        Some(slot as u8 + 1)
    } else {
        None
    }
}

/// Unit vector for `theta` degrees in canvas coordinates (y down).
pub fn direction(theta: f64) -> [f64; 2] {
    let rad = theta.to_radians();
    [libm::cos(rad), -libm::sin(rad)]
}

/// Angle of `to` seen from `from`, degrees in `[0, 360)`.
pub fn angle_between(from: [f64; 2], to: [f64; 2]) -> f64 {
    let dx = to[0] - from[0];
    let dy = from[1] - to[1];
    normalize_degrees(libm::atan2(dy, dx).to_degrees())
}

/// Generalized diagonal of cell `(row, col)` in an `n x n` concept grid, 1-based.
/// Index 1 is the main diagonal; lower indices are held out first.
pub fn diagonal_index(row: usize, col: usize, n: usize) -> Result<usize> {
    if row >= n || col >= n {
        return Err(MosaicError::Argument(format!(
            "cell ({row}, {col}) outside a {n}x{n} grid"
        )));
    }
    Ok((col + n - row) % n + 1)
}

/// Rounds to the 9 significant digits used on disk so an in-memory scene and
/// its serialized form are identical.
pub fn canonical(x: f64) -> f64 {
    format!("{x:.8e}").parse().expect("formatted float parses")
}
