//! On-disk formats: `config.json`, `manifest.jsonl`, `predictions.jsonl`.
//!
//! All JSON-Lines files are UTF-8 with LF endings, one record per line, keys
//! in struct declaration order. Manifests are sorted by id, so a file written
//! here re-serializes byte-for-byte after parsing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Component, Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{MosaicError, Result};
use crate::sampler::{DatasetConfig, Distribution};
use crate::scene::{Color, ConditionLabel, SceneSpec, Task, Variant, CLASSIFIER_MAX_COUNT, NUM_SECTORS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    /// Path relative to the dataset root; absent for held-out conditions.
    pub image: Option<String>,
    pub task: Task,
    pub variant: Variant,
    pub labels: ConditionLabel,
    pub seen: bool,
    pub scene: Option<SceneSpec>,
    pub seed: u64,
}

/// Relative image path for sample `index` of `split`.
pub fn image_path(task: Task, split: &str, index: u64) -> String {
    format!("{}/{split}/{index:08}.png", task.name())
}

fn ensure_unique<'a>(ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(MosaicError::Validation(format!("duplicate id {id:?}")));
        }
    }
    Ok(())
}

/// Canonical JSON-Lines text for `records`: sorted by id, one per line.
pub fn manifest_to_string(records: &[ManifestRecord]) -> Result<String> {
    ensure_unique(records.iter().map(|r| r.id.as_str()))?;
    let mut sorted: Vec<&ManifestRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut out = String::new();
    for r in sorted {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_manifest(path: &Path, records: &[ManifestRecord]) -> Result<()> {
    let text = manifest_to_string(records)?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn read_jsonl<T: DeserializeOwned>(path: &Path, text: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(line).map_err(|e| MosaicError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn parse_manifest(path: &Path, text: &str) -> Result<Vec<ManifestRecord>> {
    let records: Vec<ManifestRecord> = read_jsonl(path, text)?;
    ensure_unique(records.iter().map(|r| r.id.as_str()))?;
    Ok(records)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let text = fs::read_to_string(path)?;
    parse_manifest(path, &text)
}

/// Merges shard manifests into one canonical file.
pub fn merge_manifests(shards: &[PathBuf], output: &Path) -> Result<usize> {
    let mut all = Vec::new();
    for shard in shards {
        all.extend(read_manifest(shard)?);
    }
    write_manifest(output, &all)?;
    Ok(all.len())
}

fn is_contained(rel: &str) -> bool {
    let p = Path::new(rel);
    !rel.is_empty()
        && p.components()
            .all(|c| matches!(c, Component::Normal(_) | Component::CurDir))
}

/// Image paths that escape `root` or do not exist under it.
pub fn unresolved_images(root: &Path, records: &[ManifestRecord]) -> Vec<String> {
    records
        .iter()
        .filter_map(|r| r.image.as_deref())
        .filter(|img| !is_contained(img) || !root.join(img).is_file())
        .map(str::to_owned)
        .collect()
}

const CONFIG_KEYS: [&str; 10] = [
    "task",
    "variant",
    "size",
    "distribution",
    "diagonals_removed",
    "resolution",
    "seed",
    "max_count",
    "output_dir",
    "base_count_color",
];

fn field<T: DeserializeOwned>(map: &serde_json::Map<String, Value>, key: &str, errors: &mut Vec<String>) -> Option<T> {
    let v = map.get(key)?;
    match serde_json::from_value(v.clone()) {
        Ok(t) => Some(t),
        Err(e) => {
            errors.push(format!("{key}: {e}"));
            None
        }
    }
}

/// Parses and checks a dataset config, reporting every violation at once.
pub fn validate_config(json: &str) -> Result<DatasetConfig> {
    let value: Value =
        serde_json::from_str(json).map_err(|e| MosaicError::Config(vec![format!("not valid JSON: {e}")]))?;
    let Value::Object(map) = value else {
        return Err(MosaicError::Config(vec!["config must be a JSON object".into()]));
    };
    let mut errors = Vec::new();
    for key in map.keys() {
        if !CONFIG_KEYS.contains(&key.as_str()) {
            errors.push(format!("unknown key {key:?}"));
        }
    }
    let task: Option<Task> = field(&map, "task", &mut errors);
    let variant: Option<Variant> = field(&map, "variant", &mut errors);
    let size: Option<u64> = field(&map, "size", &mut errors);
    for (key, present) in [
        ("task", task.is_some()),
        ("variant", variant.is_some()),
        ("size", size.is_some()),
    ] {
        if !present && !map.contains_key(key) {
            errors.push(format!("missing required key {key:?}"));
        }
    }
    let defaults = DatasetConfig::new(Task::Counting, Variant::Base, 1);
    let distribution: Distribution = field(&map, "distribution", &mut errors).unwrap_or_default();
    let diagonals_removed = field(&map, "diagonals_removed", &mut errors).unwrap_or(0);
    let resolution = field(&map, "resolution", &mut errors).unwrap_or(defaults.resolution);
    let seed = field(&map, "seed", &mut errors).unwrap_or(0);
    let max_count = field(&map, "max_count", &mut errors).unwrap_or(defaults.max_count);
    let output_dir = field(&map, "output_dir", &mut errors);
    let base_count_color: Color = field(&map, "base_count_color", &mut errors).unwrap_or(defaults.base_count_color);

    match (task, variant) {
        (Some(task), Some(variant)) => {
            let config = DatasetConfig {
                task,
                variant,
                size: size.unwrap_or(0),
                distribution,
                diagonals_removed,
                resolution,
                seed,
                max_count,
                output_dir,
                base_count_color,
            };
            errors.extend(
                config
                    .violations()
                    .into_iter()
                    .filter(|v| size.is_some() || !v.contains("size")),
            );
            if errors.is_empty() {
                return Ok(config);
            }
        }
        _ => {
            // without a task only the class-count independent checks apply
            if let Some(size) = size {
                if distribution == Distribution::Skewed && size < 10 {
                    errors.push(format!("size below class count ({size} < 10)"));
                }
                if size == 0 {
                    errors.push("size must be positive".into());
                }
            }
        }
    }
    Err(MosaicError::Config(errors))
}

/// A classifier head scored by the evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    Count,
    Relation,
    Attribution,
    Color,
}

impl Head {
    pub const ALL: [Head; 4] = [Head::Count, Head::Relation, Head::Attribution, Head::Color];

    pub fn name(self) -> &'static str {
        match self {
            Head::Count => "count",
            Head::Relation => "relation",
            Head::Attribution => "attribution",
            Head::Color => "color",
        }
    }

    /// Number of classes the head predicts.
    pub fn num_classes(self) -> u32 {
        match self {
            Head::Count => CLASSIFIER_MAX_COUNT,
            Head::Relation => u32::from(NUM_SECTORS),
            Head::Attribution => 100,
            Head::Color => 10,
        }
    }

    /// Class index of the ground-truth label for this head. Counts map to
    /// `count - 1`, sectors to `sector - 1`, color pairs to `10 * sphere + cube`.
    pub fn true_class(self, label: &ConditionLabel) -> Option<u32> {
        match self {
            Head::Count => label.count.and_then(|c| c.checked_sub(1)),
            Head::Relation => label.relation_sector.and_then(|s| u32::from(s).checked_sub(1)),
            Head::Attribution => {
                let s = label.sphere_color?.index()? as u32;
                let c = label.cube_color?.index()? as u32;
                Some(10 * s + c)
            }
            Head::Color => label.object_color?.index().map(|i| i as u32),
        }
    }

    /// Heads a label of `task` can be scored on.
    pub fn for_label(label: &ConditionLabel) -> Vec<Head> {
        Head::ALL
            .into_iter()
            .filter(|h| h.true_class(label).is_some())
            .collect()
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Head {
    type Err = MosaicError;

    fn from_str(s: &str) -> Result<Self> {
        Head::ALL
            .into_iter()
            .find(|h| h.name() == s)
            .ok_or_else(|| MosaicError::Validation(format!("unknown head {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub true_labels: ConditionLabel,
    /// Head name → predicted class index; `null` when the image was unreadable.
    pub predicted: BTreeMap<Head, Option<u32>>,
    pub image: String,
}

impl PredictionRecord {
    pub fn is_correct(&self, head: Head) -> Result<bool> {
        let want = head
            .true_class(&self.true_labels)
            .ok_or_else(|| MosaicError::Validation(format!("{}: label has no {head} class", self.id)))?;
        let got = self
            .predicted
            .get(&head)
            .ok_or_else(|| MosaicError::Validation(format!("{}: no prediction for head {head}", self.id)))?;
        Ok(*got == Some(want))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionSet {
    pub records: Vec<PredictionRecord>,
    /// Records per condition key.
    pub per_condition: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

fn check_prediction(path: &Path, line: usize, rec: &PredictionRecord) -> Result<()> {
    let bad = |message: String| MosaicError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    for (head, class) in &rec.predicted {
        if let Some(c) = class {
            if *c >= head.num_classes() {
                return Err(bad(format!("{head} class {c} outside 0..{}", head.num_classes())));
            }
        }
        if head.true_class(&rec.true_labels).is_none() {
            return Err(bad(format!(
                "head {head} does not apply to label {}",
                rec.true_labels.key()
            )));
        }
    }
    Ok(())
}

pub fn parse_predictions(path: &Path, text: &str) -> Result<PredictionSet> {
    let mut set = PredictionSet::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord = serde_json::from_str(line).map_err(|e| MosaicError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        check_prediction(path, i + 1, &rec)?;
        *set.per_condition.entry(rec.true_labels.key()).or_default() += 1;
        set.records.push(rec);
    }
    ensure_unique(set.records.iter().map(|r| r.id.as_str()))?;
    if set.records.is_empty() {
        set.warnings.push(format!("{}: no prediction records", path.display()));
    }
    Ok(set)
}

pub fn read_predictions(path: &Path) -> Result<PredictionSet> {
    let text = fs::read_to_string(path)?;
    parse_predictions(path, &text)
}

pub fn write_predictions(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    let mut out = fs::File::create(path)?;
    for r in records {
        writeln!(out, "{}", serde_json::to_string(r)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{SceneObject, Shape};

    fn record(id: &str, count: u32) -> ManifestRecord {
        let labels = ConditionLabel::count(count);
        ManifestRecord {
            id: id.into(),
            image: Some(format!("counting/train/{id}.png")),
            task: Task::Counting,
            variant: Variant::Base,
            labels,
            seen: true,
            scene: Some(SceneSpec {
                task: Task::Counting,
                variant: Variant::Base,
                labels,
                seed: 3,
                objects: vec![SceneObject {
                    shape: Shape::Sphere,
                    color: Color::Gray,
                    center: [0.123456789, 0.5],
                    radius: 0.06,
                }],
            }),
            seed: 3,
        }
    }

    #[test]
    fn empty_manifest() {
        assert_eq!(manifest_to_string(&[]).unwrap(), "");
        assert!(parse_manifest(Path::new("m"), "").unwrap().is_empty());
    }

    #[test]
    fn manifest_is_sorted_and_canonical() {
        let recs = vec![record("00000002", 1), record("00000000", 2), record("00000001", 3)];
        let text = manifest_to_string(&recs).unwrap();
        let parsed = parse_manifest(Path::new("m"), &text).unwrap();
        let ids: Vec<_> = parsed.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["00000000", "00000001", "00000002"]);
        assert_eq!(manifest_to_string(&parsed).unwrap(), text);
        assert!(text.starts_with("{\"id\":\"00000000\",\"image\":"));
    }

    #[test]
    fn manifest_errors() {
        let dup = vec![record("a", 1), record("a", 2)];
        assert!(matches!(manifest_to_string(&dup), Err(MosaicError::Validation(_))));
        let good = serde_json::to_string(&record("a", 1)).unwrap();
        let text = format!("{good}\n{{not json\n");
        match parse_manifest(Path::new("m.jsonl"), &text) {
            Err(MosaicError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn config_examples() {
        let ok =
            validate_config(r#"{"task":"counting","variant":"base","size":2000,"distribution":"uniform","seed":7}"#)
                .unwrap();
        assert_eq!(ok.size, 2000);
        assert_eq!(ok.resolution, 128);

        let Err(MosaicError::Config(v)) =
            validate_config(r#"{"task":"counting","variant":"base","size":2000,"diagonals_removed":3}"#)
        else {
            panic!()
        };
        assert!(v.iter().any(|m| m == "hold-out requires a composition grid"));

        let Err(MosaicError::Config(v)) = validate_config(r#"{"distribution":"skewed","size":5}"#) else {
            panic!()
        };
        assert!(v.iter().any(|m| m.starts_with("size below class count")));
        assert!(v.iter().any(|m| m.contains("\"task\"")));
    }

    #[test]
    fn config_collects_everything() {
        let Err(MosaicError::Config(v)) =
            validate_config(r#"{"task":"counting","variant":"complex","size":"lots","bogus":1}"#)
        else {
            panic!()
        };
        assert!(v.len() >= 3, "{v:?}");
    }

    #[test]
    fn prediction_heads() {
        let line = |id: &str, count: u32, pred: u32| {
            format!(
                r#"{{"id":"{id}","true_labels":{{"count":{count}}},"predicted":{{"count":{pred}}},"image":"x.png"}}"#
            )
        };
        let text: String = (0..50).map(|i| line(&format!("g{i}"), 3, 2) + "\n").collect();
        let set = parse_predictions(Path::new("p"), &text).unwrap();
        assert_eq!(set.per_condition.get("count3"), Some(&50));
        assert!(set.records.iter().all(|r| r.is_correct(Head::Count).unwrap()));

        assert!(parse_predictions(Path::new("p"), &line("x", 3, 25)).is_err());
        let unknown = r#"{"id":"x","true_labels":{"count":1},"predicted":{"shape":0},"image":"x.png"}"#;
        assert!(parse_predictions(Path::new("p"), unknown).is_err());

        let empty = parse_predictions(Path::new("p"), "").unwrap();
        assert!(empty.records.is_empty());
        assert_eq!(empty.warnings.len(), 1);
    }

    #[test]
    fn null_prediction_is_incorrect() {
        let text = r#"{"id":"x","true_labels":{"count":1},"predicted":{"count":null},"image":"x.png"}"#;
        let set = parse_predictions(Path::new("p"), text).unwrap();
        assert!(!set.records[0].is_correct(Head::Count).unwrap());
    }

    #[test]
    fn containment() {
        assert!(is_contained("counting/train/00000001.png"));
        assert!(!is_contained("../etc/passwd"));
        assert!(!is_contained("/abs.png"));
    }
}
