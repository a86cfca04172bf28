//! WebAssembly bindings for the browser playground in `www/`.

use mosaic::render::{measure_scene, render_scene, RenderSettings};
use mosaic::sampler::{allocate_counts, build_holdout_plan, sample_at, DatasetConfig, Distribution, CONCEPT_GRID};
use mosaic::scene::{Color, ConditionLabel, SceneSpec, Task, Variant};
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn parse_task(s: &str) -> Result<Task, JsError> {
    match s {
        "attribution" => Ok(Task::Attribution),
        "spatial_relations" => Ok(Task::SpatialRelations),
        "counting" => Ok(Task::Counting),
        _ => Err(err(format!("unknown task {s:?}"))),
    }
}

fn parse_variant(s: &str) -> Result<Variant, JsError> {
    match s {
        "base" => Ok(Variant::Base),
        "complex" => Ok(Variant::Complex),
        "grid" => Ok(Variant::Grid),
        "composition" => Ok(Variant::Composition),
        _ => Err(err(format!("unknown variant {s:?}"))),
    }
}

/// `a` is the count, sector or sphere color index; `b` is the object or cube
/// color index where the task uses one.
fn make_label(task: Task, variant: Variant, a: u32, b: u32) -> Result<ConditionLabel, JsError> {
    let color = Color::from_index(b as usize).map_err(err)?;
    let label = match (task, variant) {
        (Task::Attribution, _) => ConditionLabel::attribution(Color::from_index(a as usize).map_err(err)?, color),
        (Task::SpatialRelations, Variant::Composition) => ConditionLabel::relation(a as u8).with_color(color),
        (Task::SpatialRelations, _) => ConditionLabel::relation(a as u8),
        (Task::Counting, Variant::Composition) => ConditionLabel::count(a).with_color(color),
        (Task::Counting, _) => ConditionLabel::count(a),
    };
    label.check_shape(task, variant).map_err(err)?;
    Ok(label)
}

/// A sampled and rendered scene.
#[wasm_bindgen]
pub struct Sample {
    scene: SceneSpec,
    resolution: u32,
    rgba: Vec<u8>,
}

#[wasm_bindgen]
impl Sample {
    #[wasm_bindgen(getter)]
    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Pixels as RGBA, row-major, for `ImageData`.
    pub fn rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }

    /// One line per object plus the labels measured back from geometry.
    pub fn describe(&self) -> String {
        let mut out = format!("condition: {}\n", self.scene.labels.key());
        for (i, o) in self.scene.objects.iter().enumerate() {
            out.push_str(&format!(
                "#{i} {:?} {} at ({:.3}, {:.3}) r={}\n",
                o.shape, o.color, o.center[0], o.center[1], o.radius
            ));
        }
        match measure_scene(&self.scene) {
            Ok(m) => {
                out.push_str(&format!("measured: {} spheres, {} cubes", m.sphere_count, m.cube_count));
                if let (Some(angle), Some(sector)) = (m.relation_angle, m.relation_sector) {
                    out.push_str(&format!(", target at {angle:.2}° (sector {sector})"));
                }
            }
            Err(e) => out.push_str(&format!("measurement failed: {e}")),
        }
        out
    }
}

/// Samples scene `index` of a dataset with `seed` and renders it.
#[wasm_bindgen]
pub fn sample_scene(
    task: &str,
    variant: &str,
    a: u32,
    b: u32,
    seed: u64,
    index: u64,
    resolution: u32,
) -> Result<Sample, JsError> {
    let task = parse_task(task)?;
    let variant = parse_variant(variant)?;
    let label = make_label(task, variant, a, b)?;
    let mut config = DatasetConfig::new(task, variant, 100_000);
    config.seed = seed;
    config.resolution = resolution;
    config.validate().map_err(err)?;
    let sample = sample_at(&config, &label, index).map_err(err)?;
    let image = render_scene(&sample.scene, &RenderSettings::with_resolution(resolution)).map_err(err)?;
    let rgba = image
        .data
        .chunks_exact(3)
        .flat_map(|p| [p[0], p[1], p[2], 255])
        .collect();
    Ok(Sample {
        scene: sample.scene,
        resolution,
        rgba,
    })
}

/// Seen mask of the 10x10 concept grid after removing `diagonals` diagonals,
/// row-major, 1 = seen.
#[wasm_bindgen]
pub fn holdout_mask(diagonals: u32) -> Result<Vec<u8>, JsError> {
    let plan = build_holdout_plan(CONCEPT_GRID, diagonals as usize, 100_000).map_err(err)?;
    Ok(plan.seen_mask.iter().map(|&s| u8::from(s)).collect())
}

/// Per-cell sample count and realized total for a hold-out budget.
#[wasm_bindgen]
pub fn holdout_budget(diagonals: u32, budget: u32) -> Result<Vec<u32>, JsError> {
    let plan = build_holdout_plan(CONCEPT_GRID, diagonals as usize, u64::from(budget)).map_err(err)?;
    Ok(vec![plan.per_cell as u32, plan.realized_total as u32])
}

/// Samples per class for `size` samples over `classes` classes.
#[wasm_bindgen]
pub fn class_allocation(distribution: &str, size: u32, classes: u32) -> Result<Vec<u32>, JsError> {
    let distribution = match distribution {
        "uniform" => Distribution::Uniform,
        "skewed" => Distribution::Skewed,
        other => return Err(err(format!("unknown distribution {other:?}"))),
    };
    let alloc = allocate_counts(distribution, u64::from(size), classes as usize).map_err(err)?;
    Ok(alloc.counts.iter().map(|&c| c as u32).collect())
}
