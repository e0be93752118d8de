//! Geometry-augmented images: descriptor fields rendered in texture space.
//!
//! A resampled facet's three texture-map pixel coordinates define a triangle
//! in image space. Descriptor images fill it with the barycentric
//! interpolation of the vertex values; the gray-level image fills it with the
//! mean gray of the original texture pixels the triangle covers, which gives
//! the texture the same resolution as the resampled geometry.
//!
//! Coverage rule: a pixel is covered by a triangle when its center lies inside
//! or on the boundary. Facets are drawn in ascending index order, so later
//! facets overwrite earlier ones where they overlap.

use std::io::Cursor;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ExtendedColorType, ImageEncoder};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptors::{DescriptorField, DescriptorKind};
use crate::mesh::TexturedMesh;
use crate::resample::TextureMap;

#[derive(Error, Debug)]
pub enum GaiError {
    #[error("texture map has no facets")]
    EmptyTextureMap,

    #[error("every facet has an invalid vertex")]
    NoValidFacets,

    #[error("no finite values to normalize")]
    NoValues,

    #[error("field has {field} values but the texture map references vertex {vertex}")]
    FieldMismatch { field: usize, vertex: usize },

    #[error("image size must be positive, got {0}x{1}")]
    BadSize(u32, u32),

    #[error("gray-level images are produced by tessellated_gray, not rasterize_field")]
    GrayField,

    #[error("PNG encoding failed: {0}")]
    Png(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, GaiError>;

pub const DEFAULT_SIZE: (u32, u32) = (240, 240);
pub const BACKGROUND: u8 = 0;

/// Lower/upper percentile used for clamping before 8-bit scaling.
pub const CLAMP_PERCENTILES: (f64, f64) = (1.0, 99.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Normalization {
    /// Clamp to the image's own 1st/99th percentiles.
    PerImage,
    /// Clamp to a fixed range shared across a dataset.
    Fixed { lo: f64, hi: f64 },
}

/// Affine quantization parameters: `lo -> 0`, `hi -> 255`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub lo: f64,
    pub hi: f64,
    pub mode: String,
}

impl NormParams {
    pub fn quantize(&self, v: f64) -> u8 {
        if !(self.hi > self.lo) {
            return 128;
        }
        let t = (v.clamp(self.lo, self.hi) - self.lo) / (self.hi - self.lo) * 255.0;
        (t + 0.5).floor().clamp(0.0, 255.0) as u8
    }

    pub fn dequantize(&self, p: u8) -> f64 {
        if !(self.hi > self.lo) {
            return self.lo;
        }
        self.lo + p as f64 / 255.0 * (self.hi - self.lo)
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / 255.0
    }
}

impl NormParams {
    fn new(lo: f64, hi: f64, mode: &str) -> Self {
        Self { lo, hi, mode: mode.to_string() }
    }
}

/// Linear-interpolation percentile of sorted data, `p` in [0, 100].
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    }
}

/// Maps real values to bytes. Gray levels are rounded and clamped directly;
/// other kinds are clamped to the percentile (or fixed) range and scaled
/// affinely with round-half-up. A zero-width range maps everything to 128.
pub fn normalize_to_bytes(
    values: &[f64],
    kind: DescriptorKind,
    mode: &Normalization,
) -> Result<(Vec<u8>, Option<NormParams>)> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Err(GaiError::NoValues);
    }
    if kind == DescriptorKind::GL {
        let bytes = values.iter().map(|v| (v + 0.5).floor().clamp(0.0, 255.0) as u8).collect();
        return Ok((bytes, None));
    }
    let params = match *mode {
        Normalization::Fixed { lo, hi } => NormParams::new(lo, hi, "fixed"),
        Normalization::PerImage => {
            let mut sorted = finite;
            sorted.sort_by(f64::total_cmp);
            NormParams::new(
                percentile(&sorted, CLAMP_PERCENTILES.0),
                percentile(&sorted, CLAMP_PERCENTILES.1),
                "per-image",
            )
        }
    };
    let bytes = values.iter().map(|&v| params.quantize(v)).collect();
    Ok((bytes, Some(params)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaiProvenance {
    pub mesh_id: String,
    pub step: Option<f64>,
    pub normalization: Option<NormParams>,
}

/// Single-channel 8-bit descriptor image with its coverage mask.
#[derive(Debug, Clone, PartialEq)]
pub struct GaiImage {
    pub kind: DescriptorKind,
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
    pub coverage: Vec<bool>,
    pub background: u8,
    pub provenance: GaiProvenance,
}

impl GaiImage {
    pub fn pixel(&self, x: u32, y: u32) -> u8 {
        self.pixels[(y * self.width + x) as usize]
    }

    pub fn covered(&self, x: u32, y: u32) -> bool {
        self.coverage[(y * self.width + x) as usize]
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        encode_png(self.width, self.height, &self.pixels, ExtendedColorType::L8)
    }

    pub fn with_mesh_id(mut self, id: &str, step: Option<f64>) -> Self {
        self.provenance.mesh_id = id.to_string();
        self.provenance.step = step;
        self
    }
}

/// PNG bytes with fixed encoder settings (deterministic output).
pub fn encode_png(width: u32, height: u32, data: &[u8], color: ExtendedColorType) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    PngEncoder::new_with_quality(Cursor::new(&mut out), CompressionType::Default, FilterType::Adaptive)
        .write_image(data, width, height, color)?;
    Ok(out)
}

fn edge(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Visits every pixel whose center lies in the closed triangle `tri`
/// (coordinates `[x, y]` in pixel units), passing its barycentric weights.
pub fn rasterize_triangle(tri: [[f64; 2]; 3], width: u32, height: u32, mut visit: impl FnMut(u32, u32, [f64; 3])) {
    let [a, b, c] = tri;
    let area = edge(a, b, c);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    let min_x = a[0].min(b[0]).min(c[0]);
    let max_x = a[0].max(b[0]).max(c[0]);
    let min_y = a[1].min(b[1]).min(c[1]);
    let max_y = a[1].max(b[1]).max(c[1]);
    let x0 = (min_x - 0.5).ceil().max(0.0) as i64;
    let x1 = ((max_x - 0.5).floor() as i64).min(width as i64 - 1);
    let y0 = (min_y - 0.5).ceil().max(0.0) as i64;
    let y1 = ((max_y - 0.5).floor() as i64).min(height as i64 - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let p = [x as f64 + 0.5, y as f64 + 0.5];
            let (ea, eb, ec) = (edge(b, c, p), edge(c, a, p), edge(a, b, p));
            let inside = if area > 0.0 {
                ea >= 0.0 && eb >= 0.0 && ec >= 0.0
            } else {
                ea <= 0.0 && eb <= 0.0 && ec <= 0.0
            };
            if inside {
                visit(x as u32, y as u32, [ea / area, eb / area, ec / area]);
            }
        }
    }
}

/// Facet triangle in target-image `[x, y]` coordinates.
fn target_triangle(tmap: &TextureMap, f: usize, size: (u32, u32)) -> [[f64; 2]; 3] {
    let sx = size.0 as f64 / tmap.width as f64;
    let sy = size.1 as f64 / tmap.height as f64;
    tmap.facet_pixels[f].map(|[row, col]| [col * sx, row * sy])
}

fn check_size(size: (u32, u32)) -> Result<()> {
    if size.0 == 0 || size.1 == 0 {
        return Err(GaiError::BadSize(size.0, size.1));
    }
    Ok(())
}

/// Renders a per-vertex descriptor field into a `size` image.
pub fn rasterize_field(
    tmap: &TextureMap,
    field: &DescriptorField,
    size: (u32, u32),
    normalization: &Normalization,
) -> Result<GaiImage> {
    check_size(size)?;
    if field.kind == DescriptorKind::GL {
        return Err(GaiError::GrayField);
    }
    if tmap.is_empty() {
        return Err(GaiError::EmptyTextureMap);
    }
    let (w, h) = size;
    let mut values = vec![f64::NAN; (w * h) as usize];
    let mut coverage = vec![false; (w * h) as usize];
    let mut drawn = 0usize;
    for (fi, f) in tmap.facets.iter().enumerate() {
        if let Some(&bad) = f.iter().find(|&&v| v >= field.values.len()) {
            return Err(GaiError::FieldMismatch { field: field.values.len(), vertex: bad });
        }
        if !f.iter().all(|&v| field.valid[v]) {
            continue;
        }
        drawn += 1;
        let vals = f.map(|v| field.values[v]);
        rasterize_triangle(target_triangle(tmap, fi, size), w, h, |x, y, bary| {
            let i = (y * w + x) as usize;
            values[i] = bary[0] * vals[0] + bary[1] * vals[1] + bary[2] * vals[2];
            coverage[i] = true;
        });
    }
    if drawn == 0 {
        return Err(GaiError::NoValidFacets);
    }
    let covered: Vec<f64> = values.iter().zip(&coverage).filter(|(_, &c)| c).map(|(&v, _)| v).collect();
    let (bytes, params) = normalize_to_bytes(&covered, field.kind, normalization)?;
    let mut pixels = vec![BACKGROUND; (w * h) as usize];
    let mut it = bytes.into_iter();
    for (p, &c) in pixels.iter_mut().zip(&coverage) {
        if c {
            *p = it.next().expect("one byte per covered pixel");
        }
    }
    Ok(GaiImage {
        kind: field.kind,
        width: w,
        height: h,
        pixels,
        coverage,
        background: BACKGROUND,
        provenance: GaiProvenance { mesh_id: String::new(), step: None, normalization: params },
    })
}

fn mean_round_half_up(sum: u64, n: u64) -> u8 {
    ((2 * sum + n) / (2 * n)) as u8
}

/// Mean gray of the original texture inside each facet's texture-space
/// triangle (or of its three corner pixels when it covers no pixel center).
pub fn facet_mean_gray(original: &TexturedMesh, tmap: &TextureMap) -> Vec<u8> {
    let tex = original.texture();
    let (tw, th) = tex.dimensions();
    (0..tmap.facets.len())
        .map(|f| {
            let tri = tmap.facet_pixels[f].map(|[row, col]| [col, row]);
            let (mut sum, mut n) = (0u64, 0u64);
            rasterize_triangle(tri, tw, th, |x, y, _| {
                sum += tex.get_pixel(x, y).0[0] as u64;
                n += 1;
            });
            if n == 0 {
                for [col, row] in tri {
                    let x = (col.floor().max(0.0) as u32).min(tw - 1);
                    let y = (row.floor().max(0.0) as u32).min(th - 1);
                    sum += tex.get_pixel(x, y).0[0] as u64;
                }
                n = 3;
            }
            mean_round_half_up(sum, n)
        })
        .collect()
}

/// The tessellated gray-level image: each facet flat-filled with its mean gray.
pub fn tessellated_gray(original: &TexturedMesh, tmap: &TextureMap, size: (u32, u32)) -> Result<GaiImage> {
    check_size(size)?;
    if tmap.is_empty() {
        return Err(GaiError::EmptyTextureMap);
    }
    let means = facet_mean_gray(original, tmap);
    let (w, h) = size;
    let mut pixels = vec![BACKGROUND; (w * h) as usize];
    let mut coverage = vec![false; (w * h) as usize];
    for (fi, &g) in means.iter().enumerate() {
        rasterize_triangle(target_triangle(tmap, fi, size), w, h, |x, y, _| {
            let i = (y * w + x) as usize;
            pixels[i] = g;
            coverage[i] = true;
        });
    }
    Ok(GaiImage {
        kind: DescriptorKind::GL,
        width: w,
        height: h,
        pixels,
        coverage,
        background: BACKGROUND,
        provenance: GaiProvenance { mesh_id: String::new(), step: None, normalization: None },
    })
}
