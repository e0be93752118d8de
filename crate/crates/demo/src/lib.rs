//! WebAssembly bindings behind `www/index.html`: render a synthetic scan into
//! GAIs and FGAIs, inspect curvature descriptors for a pair of principal
//! curvatures, and score a two-class feature with the discrimination criterion.

use fgai::analyze::{pair_criterion, SIGMA_FLOOR};
use fgai::descriptors::{curvature_descriptors, PrincipalCurvatures};
use fgai::fuse::{self, AugmentSpec, Combo};
use fgai::pipeline::{process_mesh, ComboSelection, PipelineConfig, ScanOutputs};
use fgai::synth::{self, Relief};
use fgai::DescriptorKind;
use wasm_bindgen::prelude::*;

fn rgba(planes: &[&[u8]], coverage: &[bool]) -> Vec<u8> {
    let mut out = Vec::with_capacity(coverage.len() * 4);
    for (i, covered) in coverage.iter().enumerate() {
        match planes {
            [g] => out.extend([g[i], g[i], g[i]]),
            [r, g, b] => out.extend([r[i], g[i], b[i]]),
            _ => unreachable!("one or three planes"),
        }
        out.push(if *covered { 255 } else { 0 });
    }
    out
}

/// One synthetic scan run through the pipeline.
#[wasm_bindgen]
pub struct Scan {
    outputs: ScanOutputs,
    size: u32,
}

#[wasm_bindgen]
impl Scan {
    /// `relief` is "bump" or "dent"; `grid` is the mesh resolution per side.
    #[wasm_bindgen(constructor)]
    pub fn new(relief: &str, grid: usize, seed: u64, size: u32) -> Result<Scan, String> {
        let relief = match relief {
            "bump" => Relief::Bump,
            "dent" => Relief::Dent,
            other => return Err(format!("unknown relief '{other}'")),
        };
        if !(8..=200).contains(&grid) {
            return Err(format!("grid {grid} outside 8..=200"));
        }
        let mesh = synth::relief_sample(relief, grid, seed);
        let cfg = PipelineConfig { size: (size, size), combos: ComboSelection::None, ..PipelineConfig::default() };
        let outputs = process_mesh("demo", &mesh, &cfg).map_err(|e| e.to_string())?;
        Ok(Scan { outputs, size })
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn gai_rgba(&self, kind: &str) -> Result<Vec<u8>, String> {
        let kind: DescriptorKind = kind.parse().map_err(|_| format!("unknown kind '{kind}'"))?;
        let g = self.outputs.gais.iter().find(|g| g.kind == kind).ok_or("kind not rendered")?;
        Ok(rgba(&[&g.pixels], &g.coverage))
    }

    /// `combo` like "H-LD-SI"; channels follow the order given.
    pub fn fgai_rgba(&self, combo: &str) -> Result<Vec<u8>, String> {
        let f = self.fused(combo)?;
        Ok(rgba(&[&f.channels[0], &f.channels[1], &f.channels[2]], &f.coverage))
    }

    pub fn augmented_rgba(&self, combo: &str, flip: bool, rotation: f64, noise: f64, seed: u64) -> Result<Vec<u8>, String> {
        let spec = AugmentSpec { horizontal_flip: flip, rotation_degrees: rotation, noise_sigma: noise, seed };
        let f = fuse::augment(&self.fused(combo)?, &spec).map_err(|e| e.to_string())?;
        Ok(rgba(&[&f.channels[0], &f.channels[1], &f.channels[2]], &f.coverage))
    }

    pub fn stats_json(&self) -> String {
        serde_json::to_string_pretty(&self.outputs.stats).unwrap_or_default()
    }

    fn fused(&self, combo: &str) -> Result<fuse::FgaiImage, String> {
        let combo: Combo = combo.parse().map_err(|e: fuse::FuseError| e.to_string())?;
        fuse::fuse_combo(&self.outputs.gais, combo).map_err(|e| e.to_string())
    }
}

/// `[K, H, SI]` for two principal curvatures given in either order.
#[wasm_bindgen]
pub fn curvature(k1: f64, k2: f64) -> Vec<f64> {
    let d = curvature_descriptors(&PrincipalCurvatures { max: k1.max(k2), min: k1.min(k2) });
    vec![d.gaussian, d.mean, d.shape_index]
}

/// Nearest of the five landmark shapes on the shape-index scale.
#[wasm_bindgen]
pub fn shape_name(shape_index: f64) -> String {
    const NAMES: [&str; 5] = ["cap", "ridge", "saddle", "rut", "cup"];
    let i = (shape_index.clamp(0.0, 1.0) * 4.0).round() as usize;
    NAMES[i].to_string()
}

/// Discrimination criterion of one feature between two classes.
#[wasm_bindgen]
pub fn fisher_pair(mean_a: f64, std_a: f64, mean_b: f64, std_b: f64) -> f64 {
    pair_criterion(&[mean_a, mean_b], &[std_a.abs().max(SIGMA_FLOOR), std_b.abs().max(SIGMA_FLOOR)])
}
