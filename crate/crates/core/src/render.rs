//! Top-down rasterizer for [`SceneSpec`]s and the inverse measurement used to
//! check that a scene really shows its label.

use std::io::Cursor;

use serde::{Deserialize, Serialize};

use crate::error::{MosaicError, Result};
use crate::scene::{angle_between, sector_of_angle, Color, ConditionLabel, SceneSpec, Shape, Task, Variant};

pub const BACKGROUND: [u8; 3] = [200, 198, 195];
pub const MAX_SUPERSAMPLED: u32 = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    /// Row-major RGB8.
    pub data: Vec<u8>,
}

impl Image {
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * 3)
            .collect();
        Self { width, height, data }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Area-average downsampling to `size x size`. `size` must divide both sides.
    pub fn downsample(&self, size: u32) -> Result<Image> {
        if size == 0 || !self.width.is_multiple_of(size) || !self.height.is_multiple_of(size) {
            return Err(MosaicError::Argument(format!(
                "cannot area-average {}x{} down to {size}x{size}",
                self.width, self.height
            )));
        }
        let (fx, fy) = (self.width / size, self.height / size);
        let area = fx * fy;
        let mut data = Vec::with_capacity(size as usize * size as usize * 3);
        for y in 0..size {
            for x in 0..size {
                let mut acc = [0u32; 3];
                for sy in 0..fy {
                    for sx in 0..fx {
                        let p = self.pixel(x * fx + sx, y * fy + sy);
                        for c in 0..3 {
                            acc[c] += u32::from(p[c]);
                        }
                    }
                }
                // round half up in integer arithmetic
                data.extend(acc.iter().map(|&v| ((v + area / 2) / area) as u8));
            }
        }
        Ok(Image {
            width: size,
            height: size,
            data,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderSettings {
    pub resolution: u32,
    pub supersampling: u32,
    pub background: [u8; 3],
    pub sphere_ambient: f64,
    pub sphere_diffuse: f64,
    /// Multiplier applied to the one-pixel cube outline.
    pub cube_border: f64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            resolution: 128,
            supersampling: 4,
            background: BACKGROUND,
            sphere_ambient: 0.55,
            sphere_diffuse: 0.45,
            cube_border: 0.6,
        }
    }
}

impl RenderSettings {
    pub fn with_resolution(resolution: u32) -> Self {
        Self {
            resolution,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution == 0 || self.supersampling == 0 {
            return Err(MosaicError::Argument(
                "resolution and supersampling must be positive".into(),
            ));
        }
        if self.resolution.saturating_mul(self.supersampling) > MAX_SUPERSAMPLED {
            return Err(MosaicError::Argument(format!(
                "resolution x supersampling exceeds {MAX_SUPERSAMPLED}"
            )));
        }
        Ok(())
    }
}

/// Calls `visit(pixel_index, shaded_rgb)` for every
/// subsample covered by an object. Subsamples sit on a regular `s x s` grid
/// inside each pixel.
fn rasterize(scene: &SceneSpec, settings: &RenderSettings, mut visit: impl FnMut(usize, [f64; 3])) {
    let res = settings.resolution as i64;
    let s = settings.supersampling;
    let scale = settings.resolution as f64;
    let step = 1.0 / f64::from(s);
    let border = 1.0 / scale;
    for obj in &scene.objects {
        let rgb = obj.color.rgb().map(f64::from);
        let r = obj.radius;
        let x0 = (((obj.center[0] - r) * scale).floor() as i64).max(0);
        let x1 = (((obj.center[0] + r) * scale).ceil() as i64).min(res - 1);
        let y0 = (((obj.center[1] - r) * scale).floor() as i64).max(0);
        let y1 = (((obj.center[1] + r) * scale).ceil() as i64).min(res - 1);
        for py in y0..=y1 {
            for px in x0..=x1 {
                let idx = (py * res + px) as usize;
                for sy in 0..s {
                    let y = (py as f64 + (f64::from(sy) + 0.5) * step) / scale;
                    let dy = y - obj.center[1];
                    for sx in 0..s {
                        let x = (px as f64 + (f64::from(sx) + 0.5) * step) / scale;
                        let dx = x - obj.center[0];
                        let shade = match obj.shape {
                            Shape::Sphere => {
                                let rho2 = (dx * dx + dy * dy) / (r * r);
                                if rho2 > 1.0 {
                                    continue;
                                }
                                settings.sphere_ambient + settings.sphere_diffuse * (1.0 - rho2).max(0.0).sqrt()
                            }
                            Shape::Cube => {
                                let edge = dx.abs().max(dy.abs());
                                if edge > r {
                                    continue;
                                }
                                if r - edge < border {
                                    settings.cube_border
                                } else {
                                    1.0
                                }
                            }
                        };
                        visit(idx, rgb.map(|c| c * shade));
                    }
                }
            }
        }
    }
}

/// Renders `scene` as an RGB image. Output depends only on the inputs.
pub fn render_scene(scene: &SceneSpec, settings: &RenderSettings) -> Result<Image> {
    settings.validate()?;
    let n = (settings.resolution * settings.resolution) as usize;
    let bg = settings.background.map(f64::from);
    let mut acc = vec![[0.0f64; 3]; n];
    let mut hits = vec![0u32; n];
    rasterize(scene, settings, |i, rgb| {
        for c in 0..3 {
            acc[i][c] += rgb[c];
        }
        hits[i] += 1;
    });
    let per_pixel = f64::from(settings.supersampling * settings.supersampling);
    let mut data = Vec::with_capacity(n * 3);
    for (sum, &h) in acc.iter().zip(&hits) {
        let missing = per_pixel - f64::from(h);
        for c in 0..3 {
            let v = (sum[c] + missing * bg[c]) / per_pixel;
            data.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    Ok(Image {
        width: settings.resolution,
        height: settings.resolution,
        data,
    })
}

/// Fraction of each pixel covered by any object.
pub fn render_coverage(scene: &SceneSpec, settings: &RenderSettings) -> Result<Vec<f64>> {
    settings.validate()?;
    let n = (settings.resolution * settings.resolution) as usize;
    let mut hits = vec![0u32; n];
    rasterize(scene, settings, |i, _| hits[i] += 1);
    let per_pixel = f64::from(settings.supersampling * settings.supersampling);
    Ok(hits.into_iter().map(|h| f64::from(h) / per_pixel).collect())
}

pub fn encode_png(image: &Image) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, image.width, image.height);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        encoder.set_compression(png::Compression::Balanced);
        let mut writer = encoder.write_header().map_err(|e| MosaicError::Png(e.to_string()))?;
        writer
            .write_image_data(&image.data)
            .map_err(|e| MosaicError::Png(e.to_string()))?;
        writer.finish().map_err(|e| MosaicError::Png(e.to_string()))?;
    }
    Ok(out)
}

/// Decodes any 8-bit-reducible PNG into RGB, dropping alpha.
pub fn decode_png(bytes: &[u8]) -> Result<Image> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::normalize_to_color8());
    let mut reader = decoder.read_info().map_err(|e| MosaicError::Png(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| MosaicError::Png("image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| MosaicError::Png(e.to_string()))?;
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => return Err(MosaicError::Png("unexpanded palette image".into())),
    };
    let mut data = Vec::with_capacity(info.width as usize * info.height as usize * 3);
    for row in buf.chunks(info.line_size).take(info.height as usize) {
        for px in row[..info.width as usize * channels].chunks(channels) {
            match channels {
                1 | 2 => data.extend([px[0]; 3]),
                _ => data.extend(&px[..3]),
            }
        }
    }
    Ok(Image {
        width: info.width,
        height: info.height,
        data,
    })
}

/// What can be read back from a scene's geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedLabels {
    pub sphere_count: usize,
    pub cube_count: usize,
    pub colors: Vec<Color>,
    /// Target angle relative to the BROWN reference, degrees in `[0, 360)`.
    pub relation_angle: Option<f64>,
    pub relation_sector: Option<u8>,
    pub target_color: Option<Color>,
}

/// Measures counts, colors and, for relation scenes, the target angle. The
/// target is the first non-BROWN object.
pub fn measure_scene(scene: &SceneSpec) -> Result<DerivedLabels> {
    let sphere_count = scene.objects.iter().filter(|o| o.shape == Shape::Sphere).count();
    let colors: Vec<Color> = scene.objects.iter().map(|o| o.color).collect();
    let mut derived = DerivedLabels {
        sphere_count,
        cube_count: scene.objects.len() - sphere_count,
        colors,
        relation_angle: None,
        relation_sector: None,
        target_color: None,
    };
    if scene.task == Task::SpatialRelations {
        let mut refs = scene.objects.iter().filter(|o| o.color == Color::Brown);
        let (Some(reference), None) = (refs.next(), refs.next()) else {
            return Err(MosaicError::Structural(
                "relation scene needs exactly one BROWN reference".into(),
            ));
        };
        let target = scene
            .objects
            .iter()
            .find(|o| o.color != Color::Brown)
            .ok_or_else(|| MosaicError::Structural("relation scene has no target".into()))?;
        let angle = angle_between(reference.center, target.center);
        derived.relation_angle = Some(angle);
        derived.relation_sector = sector_of_angle(angle);
        derived.target_color = Some(target.color);
    }
    Ok(derived)
}

fn uniform_color<'a>(mut colors: impl Iterator<Item = &'a Color>, what: &str) -> Result<Color> {
    let first = *colors
        .next()
        .ok_or_else(|| MosaicError::Structural(format!("scene has no {what}")))?;
    if colors.any(|&c| c != first) {
        return Err(MosaicError::Structural(format!("{what} colors disagree")));
    }
    Ok(first)
}

/// Reconstructs the condition label a scene depicts from its geometry alone.
pub fn derive_label(scene: &SceneSpec) -> Result<ConditionLabel> {
    let m = measure_scene(scene)?;
    let composition = scene.variant == Variant::Composition;
    Ok(match scene.task {
        Task::Counting => {
            let label = ConditionLabel::count(m.sphere_count as u32);
            if composition {
                label.with_color(uniform_color(m.colors.iter(), "sphere")?)
            } else {
                label
            }
        }
        Task::SpatialRelations => {
            let sector = m
                .relation_sector
                .ok_or_else(|| MosaicError::Structural("target lies in a sector gap".into()))?;
            let label = ConditionLabel::relation(sector);
            match (composition, m.target_color) {
                (true, Some(c)) => label.with_color(c),
                _ => label,
            }
        }
        Task::Attribution => {
            let spheres = scene
                .objects
                .iter()
                .filter(|o| o.shape == Shape::Sphere)
                .map(|o| &o.color);
            let cubes = scene
                .objects
                .iter()
                .filter(|o| o.shape == Shape::Cube)
                .map(|o| &o.color);
            ConditionLabel::attribution(uniform_color(spheres, "sphere")?, uniform_color(cubes, "cube")?)
        }
    })
}
