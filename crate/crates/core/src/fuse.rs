//! Three-channel fusion of geometry-augmented images and image augmentation.

use std::fmt;
use std::str::FromStr;

use image::ExtendedColorType;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptors::DescriptorKind;
use crate::gai::{encode_png, GaiError, GaiImage, BACKGROUND};

#[derive(Error, Debug)]
pub enum FuseError {
    #[error("missing descriptor kinds: {0:?}")]
    MissingKinds(Vec<DescriptorKind>),

    #[error("duplicate descriptor kind {0}")]
    DuplicateKind(DescriptorKind),

    #[error("image sizes differ: {0:?}")]
    SizeMismatch(Vec<(u32, u32)>),

    #[error("images come from different meshes: {0:?}")]
    MeshMismatch(Vec<String>),

    #[error("bad combo '{0}'")]
    BadCombo(String),

    #[error("invalid augmentation: {0}")]
    InvalidAugment(String),

    #[error(transparent)]
    Image(#[from] GaiError),
}

pub type Result<T> = std::result::Result<T, FuseError>;

/// Three distinct kinds in channel order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Combo(pub [DescriptorKind; 3]);

impl Combo {
    /// Canonical combo: kinds sorted in the order K, H, GL, LD, SI.
    pub fn canonical(kinds: [DescriptorKind; 3]) -> Result<Self> {
        let mut k = kinds;
        k.sort();
        if k[0] == k[1] || k[1] == k[2] {
            return Err(FuseError::DuplicateKind(k[1]));
        }
        Ok(Self(k))
    }

    pub fn is_canonical(&self) -> bool {
        self.0[0] < self.0[1] && self.0[1] < self.0[2]
    }

    pub fn name(&self) -> String {
        self.0.map(DescriptorKind::name).join("-")
    }

    /// All six channel orders of the same three kinds, canonical first.
    pub fn permutations(&self) -> Vec<Combo> {
        let [a, b, c] = Self::canonical(self.0).map(|c| c.0).unwrap_or(self.0);
        vec![
            Combo([a, b, c]),
            Combo([a, c, b]),
            Combo([b, a, c]),
            Combo([b, c, a]),
            Combo([c, a, b]),
            Combo([c, b, a]),
        ]
    }
}

impl fmt::Display for Combo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Combo {
    type Err = FuseError;

    /// Parses `A-B-C`, keeping the given channel order.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split('-').collect();
        if parts.len() != 3 {
            return Err(FuseError::BadCombo(s.to_string()));
        }
        let mut kinds = [DescriptorKind::K; 3];
        for (k, p) in kinds.iter_mut().zip(&parts) {
            *k = p.parse().map_err(|_| FuseError::BadCombo(s.to_string()))?;
        }
        if kinds[0] == kinds[1] || kinds[1] == kinds[2] || kinds[0] == kinds[2] {
            return Err(FuseError::BadCombo(s.to_string()));
        }
        Ok(Self(kinds))
    }
}

/// The ten canonical 3-subsets of the five kinds, in lexicographic order
/// over the canonical kind order.
pub fn enumerate_combos(available: &[DescriptorKind]) -> Result<Vec<Combo>> {
    let missing: Vec<DescriptorKind> = DescriptorKind::ALL
        .into_iter()
        .filter(|k| !available.contains(k))
        .collect();
    if !missing.is_empty() {
        return Err(FuseError::MissingKinds(missing));
    }
    let all = DescriptorKind::ALL;
    let mut combos = Vec::with_capacity(10);
    for i in 0..5 {
        for j in i + 1..5 {
            for k in j + 1..5 {
                combos.push(Combo([all[i], all[j], all[k]]));
            }
        }
    }
    Ok(combos)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FgaiProvenance {
    pub mesh_id: String,
    pub step: Option<f64>,
    /// Source image names (`<mesh_id>.<kind>`) in channel order.
    pub sources: Vec<String>,
    pub augmentation: Option<AugmentSpec>,
}

/// Three 8-bit planes stacked in combo order.
#[derive(Debug, Clone, PartialEq)]
pub struct FgaiImage {
    pub combo: Combo,
    pub width: u32,
    pub height: u32,
    pub channels: [Vec<u8>; 3],
    pub coverage: Vec<bool>,
    pub provenance: FgaiProvenance,
}

impl FgaiImage {
    pub fn name(&self) -> String {
        self.combo.name()
    }

    /// Interleaved RGB bytes.
    pub fn interleaved(&self) -> Vec<u8> {
        let n = (self.width * self.height) as usize;
        let mut out = Vec::with_capacity(3 * n);
        for i in 0..n {
            out.extend(self.channels.iter().map(|c| c[i]));
        }
        out
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        Ok(encode_png(self.width, self.height, &self.interleaved(), ExtendedColorType::Rgb8)?)
    }
}

fn check_sources(images: [&GaiImage; 3]) -> Result<()> {
    let sizes: Vec<(u32, u32)> = images.iter().map(|g| (g.width, g.height)).collect();
    if sizes.iter().any(|s| *s != sizes[0]) {
        return Err(FuseError::SizeMismatch(sizes));
    }
    let ids: Vec<String> = images.iter().map(|g| g.provenance.mesh_id.clone()).collect();
    if ids.iter().any(|id| *id != ids[0]) {
        return Err(FuseError::MeshMismatch(ids));
    }
    for i in 0..3 {
        for j in i + 1..3 {
            if images[i].kind == images[j].kind {
                return Err(FuseError::DuplicateKind(images[i].kind));
            }
        }
    }
    Ok(())
}

fn stack(images: [&GaiImage; 3], combo: Combo) -> FgaiImage {
    let first = images[0];
    // All three share coverage when rendered from the same facets; keep the
    // union so a skipped facet in one channel does not hide the others.
    let coverage = (0..first.coverage.len())
        .map(|i| images.iter().any(|g| g.coverage[i]))
        .collect();
    FgaiImage {
        combo,
        width: first.width,
        height: first.height,
        channels: images.map(|g| g.pixels.clone()),
        coverage,
        provenance: FgaiProvenance {
            mesh_id: first.provenance.mesh_id.clone(),
            step: first.provenance.step,
            sources: images
                .iter()
                .map(|g| format!("{}.{}", g.provenance.mesh_id, g.kind))
                .collect(),
            augmentation: None,
        },
    }
}

/// Fuses three GAIs of distinct kinds; channels follow the canonical kind
/// order whatever the argument order.
pub fn fuse(a: &GaiImage, b: &GaiImage, c: &GaiImage) -> Result<FgaiImage> {
    check_sources([a, b, c])?;
    let mut images = [a, b, c];
    images.sort_by_key(|g| g.kind);
    let combo = Combo([images[0].kind, images[1].kind, images[2].kind]);
    Ok(stack(images, combo))
}

/// Fuses keeping the argument order as channel order (explicit permutations).
pub fn fuse_ordered(a: &GaiImage, b: &GaiImage, c: &GaiImage) -> Result<FgaiImage> {
    check_sources([a, b, c])?;
    Ok(stack([a, b, c], Combo([a.kind, b.kind, c.kind])))
}

/// Picks the three GAIs of `combo` out of a scan's images and fuses them in
/// the combo's channel order.
pub fn fuse_combo(gais: &[GaiImage], combo: Combo) -> Result<FgaiImage> {
    let pick = |k: DescriptorKind| {
        gais.iter()
            .find(|g| g.kind == k)
            .ok_or_else(|| FuseError::MissingKinds(vec![k]))
    };
    let [a, b, c] = combo.0;
    fuse_ordered(pick(a)?, pick(b)?, pick(c)?)
}

/// Flip, rotation and additive noise applied in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub horizontal_flip: bool,
    pub rotation_degrees: f64,
    /// Standard deviation on the 0-255 scale.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl AugmentSpec {
    pub const DEFAULT_ROTATION_DEGREES: f64 = 10.0;

    pub fn identity() -> Self {
        Self { horizontal_flip: false, rotation_degrees: 0.0, noise_sigma: 0.0, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(FuseError::InvalidAugment(format!("noise sigma {}", self.noise_sigma)));
        }
        if !self.rotation_degrees.is_finite() {
            return Err(FuseError::InvalidAugment("non-finite rotation".into()));
        }
        Ok(())
    }
}

fn flip_plane<T: Copy>(plane: &[T], w: usize) -> Vec<T> {
    plane
        .chunks(w)
        .flat_map(|row| row.iter().rev().copied())
        .collect()
}

/// Rotation about the image center (counter-clockwise on screen for positive
/// angles), bilinear for pixel values and nearest for coverage.
fn rotate(planes: &[Vec<u8>], coverage: &[bool], w: usize, h: usize, degrees: f64) -> (Vec<Vec<u8>>, Vec<bool>) {
    let theta = degrees.to_radians();
    let (sin, cos) = theta.sin_cos();
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    let mut out = vec![vec![BACKGROUND; w * h]; planes.len()];
    let mut cov = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
            // inverse map; image y points down, so screen-CCW is -theta here
            let sx = cx + cos * dx - sin * dy;
            let sy = cy + sin * dx + cos * dy;
            let (fx, fy) = (sx - 0.5, sy - 0.5);
            let (x0, y0) = (fx.floor(), fy.floor());
            let (tx, ty) = (fx - x0, fy - y0);
            let (x0, y0) = (x0 as i64, y0 as i64);
            let fetch = |plane: &[u8], xi: i64, yi: i64| -> f64 {
                if xi < 0 || yi < 0 || xi >= w as i64 || yi >= h as i64 {
                    BACKGROUND as f64
                } else {
                    plane[yi as usize * w + xi as usize] as f64
                }
            };
            for (p, o) in planes.iter().zip(out.iter_mut()) {
                let v = (1.0 - tx) * (1.0 - ty) * fetch(p, x0, y0)
                    + tx * (1.0 - ty) * fetch(p, x0 + 1, y0)
                    + (1.0 - tx) * ty * fetch(p, x0, y0 + 1)
                    + tx * ty * fetch(p, x0 + 1, y0 + 1);
                o[y * w + x] = (v + 0.5).floor().clamp(0.0, 255.0) as u8;
            }
            let (nx, ny) = (sx.floor() as i64, sy.floor() as i64);
            if nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64 {
                cov[y * w + x] = coverage[ny as usize * w + nx as usize];
            }
        }
    }
    (out, cov)
}

/// Standard-normal approximation from 12 uniform 32-bit draws (Irwin–Hall):
/// the sum is formed in integers, so the sequence is platform-independent.
fn irwin_hall(rng: &mut ChaCha8Rng) -> f64 {
    let sum: u64 = (0..12).map(|_| rng.next_u32() as u64).sum();
    sum as f64 / 4_294_967_296.0 - 6.0
}

/// Applies `spec` to a set of same-size planes.
pub fn augment_planes(
    planes: &[Vec<u8>],
    coverage: &[bool],
    width: u32,
    height: u32,
    spec: &AugmentSpec,
) -> Result<(Vec<Vec<u8>>, Vec<bool>)> {
    spec.validate()?;
    let (w, h) = (width as usize, height as usize);
    let mut planes = planes.to_vec();
    let mut coverage = coverage.to_vec();
    if spec.horizontal_flip {
        planes = planes.iter().map(|p| flip_plane(p, w)).collect();
        coverage = flip_plane(&coverage, w);
    }
    if spec.rotation_degrees != 0.0 {
        (planes, coverage) = rotate(&planes, &coverage, w, h, spec.rotation_degrees);
    }
    if spec.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for plane in &mut planes {
            for p in plane.iter_mut() {
                let v = *p as f64 + spec.noise_sigma * irwin_hall(&mut rng);
                *p = (v + 0.5).floor().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Ok((planes, coverage))
}

pub fn augment(img: &FgaiImage, spec: &AugmentSpec) -> Result<FgaiImage> {
    let (planes, coverage) = augment_planes(&img.channels, &img.coverage, img.width, img.height, spec)?;
    let mut out = img.clone();
    out.channels = [planes[0].clone(), planes[1].clone(), planes[2].clone()];
    out.coverage = coverage;
    out.provenance.augmentation = Some(*spec);
    Ok(out)
}

pub fn augment_gai(img: &GaiImage, spec: &AugmentSpec) -> Result<GaiImage> {
    let (mut planes, coverage) =
        augment_planes(std::slice::from_ref(&img.pixels), &img.coverage, img.width, img.height, spec)?;
    let mut out = img.clone();
    out.pixels = planes.remove(0);
    out.coverage = coverage;
    Ok(out)
}
