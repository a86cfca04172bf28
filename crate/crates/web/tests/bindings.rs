// Error paths build a `JsError`, which needs a JS host, so only success paths
// run natively.

use mosaic_web::{class_allocation, holdout_budget, holdout_mask, sample_scene};

#[test]
fn sample_scene_renders_rgba() {
    let s = sample_scene("counting", "composition", 4, 2, 7, 3, 64).unwrap();
    assert_eq!(s.resolution(), 64);
    let rgba = s.rgba();
    assert_eq!(rgba.len(), 64 * 64 * 4);
    assert!(rgba.chunks_exact(4).all(|p| p[3] == 255));
    let text = s.describe();
    assert!(text.contains("measured: 4 spheres"), "{text}");
}

#[test]
fn sample_scene_is_deterministic() {
    let a = sample_scene("spatial_relations", "grid", 6, 0, 1, 9, 32).unwrap();
    let b = sample_scene("spatial_relations", "grid", 6, 0, 1, 9, 32).unwrap();
    assert_eq!(a.rgba(), b.rgba());
    assert!(a.describe().contains("(sector 6)"));
}

#[test]
fn holdout_matches_diagonals() {
    let mask = holdout_mask(3).unwrap();
    assert_eq!(mask.len(), 100);
    assert_eq!(mask.iter().filter(|&&m| m == 0).count(), 30);
    for i in 0..10 {
        for j in 0..10 {
            let d = (j + 10 - i) % 10 + 1;
            assert_eq!(mask[i * 10 + j] == 1, d > 3);
        }
    }
    assert_eq!(holdout_budget(3, 100_000).unwrap(), vec![1428, 99_960]);
    assert_eq!(holdout_budget(0, 100_000).unwrap(), vec![1000, 100_000]);
}

#[test]
fn allocation_sums_to_size() {
    let skewed = class_allocation("skewed", 2000, 10).unwrap();
    assert_eq!(skewed, vec![451, 359, 287, 229, 183, 146, 117, 93, 75, 60]);
    assert_eq!(class_allocation("uniform", 2000, 10).unwrap(), vec![200; 10]);
}
