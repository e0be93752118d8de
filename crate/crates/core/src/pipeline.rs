//! Manifests, run configuration and the end-to-end driver.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::analyze::{FeatureMatrix, SampleInfo};
use crate::descriptors::{DescriptorError, DescriptorKind, DescriptorSet, NeighborhoodSpec};
use crate::fuse::{self, AugmentSpec, Combo, FgaiImage, FuseError};
use crate::gai::{self, GaiError, GaiImage, GaiProvenance, Normalization, BACKGROUND, DEFAULT_SIZE};
use crate::mesh::{self, MeshError, TexturedMesh};
use crate::resample::{self, ResampleConfig, ResampleError, SpacingRule, TextureMap};

#[derive(Error, Debug)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Mesh(#[from] MeshError),

    #[error("loading {mesh} with {texture}: {source}")]
    Load { mesh: PathBuf, texture: PathBuf, source: MeshError },

    #[error(transparent)]
    Resample(#[from] ResampleError),

    #[error(transparent)]
    Descriptor(#[from] DescriptorError),

    #[error(transparent)]
    Gai(#[from] GaiError),

    #[error(transparent)]
    Fuse(#[from] FuseError),

    #[error("image {path}: {message}")]
    Image { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, PipelineError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub scan_id: String,
    pub mesh: PathBuf,
    pub texture: PathBuf,
    pub subject_id: String,
    pub label: String,
    pub sequence_id: Option<String>,
    pub frame_index: Option<u32>,
}

impl ManifestEntry {
    pub fn sample_info(&self) -> SampleInfo {
        SampleInfo {
            sample_id: self.scan_id.clone(),
            subject_id: self.subject_id.clone(),
            label: self.label.clone(),
            sequence_id: self.sequence_id.clone(),
            frame_index: self.frame_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_HEADER: [&str; 7] =
    ["scan_id", "mesh", "texture", "subject_id", "label", "sequence_id", "frame_index"];

impl Manifest {
    /// Reads a manifest CSV; relative paths resolve against its directory.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let bad = |m: String| PipelineError::Manifest(m);
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
        for (i, name) in MANIFEST_HEADER.iter().take(5).enumerate() {
            if headers.get(i) != Some(name) {
                return Err(bad(format!("column {} should be '{name}', header is {headers:?}", i + 1)));
            }
        }
        let mut entries = Vec::new();
        let mut seen = BTreeSet::new();
        for (n, rec) in r.records().enumerate() {
            let line = n + 2;
            let rec = rec.map_err(|e| bad(format!("line {line}: {e}")))?;
            let get = |i: usize| rec.get(i).filter(|s| !s.is_empty()).map(str::to_string);
            let need = |i: usize| get(i).ok_or_else(|| bad(format!("line {line}: empty {}", MANIFEST_HEADER[i])));
            let scan_id = need(0)?;
            if !seen.insert(scan_id.clone()) {
                return Err(bad(format!("line {line}: duplicate scan_id '{scan_id}'")));
            }
            let frame_index = match get(6) {
                Some(f) => Some(f.parse().map_err(|e| bad(format!("line {line}: frame_index '{f}': {e}")))?),
                None => None,
            };
            entries.push(ManifestEntry {
                scan_id,
                mesh: base.join(need(1)?),
                texture: base.join(need(2)?),
                subject_id: need(3)?,
                label: need(4)?,
                sequence_id: get(5),
                frame_index,
            });
        }
        let m = Self { entries };
        m.check_sequences()?;
        Ok(m)
    }

    /// Frame indices within each sequence must be distinct and contiguous.
    fn check_sequences(&self) -> Result<()> {
        let mut frames: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
        for e in &self.entries {
            match (&e.sequence_id, e.frame_index) {
                (Some(s), Some(f)) => frames.entry(s).or_default().push(f),
                (None, None) => {}
                _ => {
                    return Err(PipelineError::Manifest(format!(
                        "scan '{}' has only one of sequence_id/frame_index",
                        e.scan_id
                    )))
                }
            }
        }
        for (seq, mut f) in frames {
            f.sort_unstable();
            if f.windows(2).any(|w| w[1] != w[0] + 1) {
                return Err(PipelineError::Manifest(format!("sequence '{seq}' frames are not dense: {f:?}")));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self, base: &Path) -> String {
        let rel = |p: &Path| p.strip_prefix(base).unwrap_or(p).to_string_lossy().into_owned();
        let mut s = MANIFEST_HEADER.join(",") + "\n";
        for e in &self.entries {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                e.scan_id,
                rel(&e.mesh),
                rel(&e.texture),
                e.subject_id,
                e.label,
                e.sequence_id.as_deref().unwrap_or(""),
                e.frame_index.map(|f| f.to_string()).unwrap_or_default()
            ));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ComboSelection {
    /// The ten canonical combos.
    All,
    None,
    List(Vec<Combo>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub step: f64,
    pub spacing: SpacingRule,
    /// Descriptors on the grid-resampled mesh; `false` uses the mesh as loaded.
    pub resample: bool,
    pub radius_multiplier: f64,
    pub kinds: Vec<DescriptorKind>,
    pub size: (u32, u32),
    pub combos: ComboSelection,
    /// Also emit the five non-canonical channel orders of each combo.
    pub permutations: bool,
    pub augment: Option<AugmentSpec>,
    /// `None` clamps each image to its own percentiles.
    pub fixed_ranges: Option<BTreeMap<DescriptorKind, (f64, f64)>>,
    pub out: PathBuf,
    pub workers: usize,
    pub force: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            step: ResampleConfig::default().step,
            spacing: SpacingRule::default(),
            resample: true,
            radius_multiplier: NeighborhoodSpec::default().radius_multiplier,
            kinds: DescriptorKind::ALL.to_vec(),
            size: DEFAULT_SIZE,
            combos: ComboSelection::All,
            permutations: false,
            augment: None,
            fixed_ranges: None,
            out: PathBuf::from("out"),
            workers: 0,
            force: false,
        }
    }
}

/// Keys accepted by [`PipelineConfig::set`].
pub const CONFIG_KEYS: &[&str] = &[
    "step",
    "spacing",
    "resample",
    "radius_multiplier",
    "kinds",
    "size",
    "combos",
    "permutations",
    "normalization",
    "range_K",
    "range_H",
    "range_LD",
    "range_SI",
    "augment",
    "augment_flip",
    "augment_rotation",
    "augment_noise",
    "augment_seed",
    "out",
    "workers",
    "force",
];

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Some(true),
        "0" | "false" | "no" | "off" => Some(false),
        _ => None,
    }
}

impl PipelineConfig {
    /// Parses `key = value` lines (`#` starts a comment) over the defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| PipelineError::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| PipelineError::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || PipelineError::Config(format!("bad value '{value}' for {key}"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        let flag = |v: &str| parse_bool(v).ok_or_else(bad);
        match key {
            "step" => self.step = num(value)?,
            "spacing" => {
                self.spacing = match value {
                    "vertex-density" => SpacingRule::VertexDensity,
                    "edge-length" => SpacingRule::EdgeLength,
                    _ => return Err(bad()),
                }
            }
            "resample" => self.resample = flag(value)?,
            "radius_multiplier" => self.radius_multiplier = num(value)?,
            "kinds" => {
                self.kinds = value
                    .split(',')
                    .map(|k| k.trim().parse::<DescriptorKind>().map_err(|_| bad()))
                    .collect::<Result<_>>()?;
                self.kinds.sort();
                self.kinds.dedup();
            }
            "size" => {
                let (w, h) = match value.split_once(['x', 'X', ',']) {
                    Some((w, h)) => (w.trim(), h.trim()),
                    None => (value, value),
                };
                self.size = (w.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?);
            }
            "combos" => {
                self.combos = match value.to_ascii_lowercase().as_str() {
                    "all" => ComboSelection::All,
                    "none" | "" => ComboSelection::None,
                    _ => ComboSelection::List(
                        value
                            .split(',')
                            .map(|c| c.parse::<Combo>().map_err(|_| bad()))
                            .collect::<Result<_>>()?,
                    ),
                }
            }
            "permutations" => self.permutations = flag(value)?,
            "normalization" => match value {
                "per-image" => self.fixed_ranges = None,
                "fixed" => {
                    self.fixed_ranges.get_or_insert_with(BTreeMap::new);
                }
                _ => return Err(bad()),
            },
            k if k.starts_with("range_") => {
                let kind: DescriptorKind = k["range_".len()..].parse().map_err(|_| bad())?;
                let (lo, hi) = value.split_once(',').ok_or_else(bad)?;
                self.fixed_ranges.get_or_insert_with(BTreeMap::new).insert(kind, (num(lo)?, num(hi)?));
            }
            "augment" => {
                if flag(value)? {
                    self.augment.get_or_insert(AugmentSpec {
                        rotation_degrees: AugmentSpec::DEFAULT_ROTATION_DEGREES,
                        ..AugmentSpec::identity()
                    });
                } else {
                    self.augment = None;
                }
            }
            "augment_flip" => self.augment_mut().horizontal_flip = flag(value)?,
            "augment_rotation" => self.augment_mut().rotation_degrees = num(value)?,
            "augment_noise" => self.augment_mut().noise_sigma = num(value)?,
            "augment_seed" => self.augment_mut().seed = value.parse().map_err(|_| bad())?,
            "out" => self.out = PathBuf::from(value),
            "workers" => self.workers = value.parse().map_err(|_| bad())?,
            "force" => self.force = flag(value)?,
            _ => return Err(PipelineError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    fn augment_mut(&mut self) -> &mut AugmentSpec {
        self.augment.get_or_insert(AugmentSpec {
            rotation_degrees: AugmentSpec::DEFAULT_ROTATION_DEGREES,
            ..AugmentSpec::identity()
        })
    }

    pub fn validate(&self) -> Result<()> {
        ResampleConfig { step: self.step, spacing: self.spacing }.validate()?;
        if !(self.radius_multiplier > 0.0) {
            return Err(PipelineError::Config(format!("radius_multiplier {}", self.radius_multiplier)));
        }
        if self.size.0 == 0 || self.size.1 == 0 {
            return Err(PipelineError::Config(format!("size {:?}", self.size)));
        }
        if self.kinds.is_empty() {
            return Err(PipelineError::Config("no descriptor kinds".into()));
        }
        if let Some(ranges) = &self.fixed_ranges {
            for k in self.kinds.iter().filter(|k| **k != DescriptorKind::GL) {
                match ranges.get(k) {
                    Some((lo, hi)) if lo < hi => {}
                    Some(r) => return Err(PipelineError::Config(format!("range_{k} {r:?} is empty"))),
                    None => return Err(PipelineError::Config(format!("fixed normalization needs range_{k}"))),
                }
            }
        }
        if let Some(a) = &self.augment {
            a.validate()?;
        }
        for combo in self.combo_list()? {
            if let Some(k) = combo.0.iter().find(|k| !self.kinds.contains(k)) {
                return Err(PipelineError::Config(format!("combo {combo} needs kind {k}")));
            }
        }
        Ok(())
    }

    pub fn normalization(&self, kind: DescriptorKind) -> Normalization {
        match self.fixed_ranges.as_ref().and_then(|r| r.get(&kind)) {
            Some(&(lo, hi)) => Normalization::Fixed { lo, hi },
            None => Normalization::PerImage,
        }
    }

    /// Combos to emit, permutations included.
    pub fn combo_list(&self) -> Result<Vec<Combo>> {
        let base = match &self.combos {
            ComboSelection::All => fuse::enumerate_combos(&self.kinds)?,
            ComboSelection::None => Vec::new(),
            ComboSelection::List(l) => l.clone(),
        };
        if !self.permutations {
            return Ok(base);
        }
        let mut out = Vec::new();
        for c in base {
            for p in c.permutations() {
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanStats {
    pub original_vertices: usize,
    pub original_facets: usize,
    pub degenerate_dropped: usize,
    pub unreferenced_dropped: usize,
    pub resampled_vertices: Option<usize>,
    pub resampled_facets: Option<usize>,
    pub descriptor_radius: Option<f64>,
    pub invalid_vertices: BTreeMap<String, usize>,
}

#[derive(Debug, Clone)]
pub struct ScanOutputs {
    pub gais: Vec<GaiImage>,
    pub fgais: Vec<FgaiImage>,
    pub augmented: Vec<FgaiImage>,
    pub stats: ScanStats,
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// Everything for one scan, in memory.
pub fn process_mesh(scan_id: &str, mesh: &TexturedMesh, cfg: &PipelineConfig) -> Result<ScanOutputs> {
    process_loaded(scan_id, mesh, mesh::LoadReport::default(), cfg)
}

fn process_loaded(
    scan_id: &str,
    mesh: &TexturedMesh,
    report: mesh::LoadReport,
    cfg: &PipelineConfig,
) -> Result<ScanOutputs> {
    cfg.validate()?;
    let mut stats = ScanStats {
        original_vertices: mesh.vertices().len(),
        original_facets: mesh.facets().len(),
        degenerate_dropped: report.degenerate_dropped,
        unreferenced_dropped: report.unreferenced_dropped,
        resampled_vertices: None,
        resampled_facets: None,
        descriptor_radius: None,
        invalid_vertices: BTreeMap::new(),
    };
    let resampled;
    let (geometry, tmap, step) = if cfg.resample {
        let frame = resample::principal_frame(mesh.geometry())?;
        resampled = resample::resample(mesh, &frame, &ResampleConfig { step: cfg.step, spacing: cfg.spacing })?;
        stats.resampled_vertices = Some(resampled.mesh.vertex_count());
        stats.resampled_facets = Some(resampled.mesh.facet_count());
        let tmap = resample::rebuild_texture_map(&resampled, mesh)?;
        (&resampled.mesh, tmap, Some(cfg.step))
    } else {
        (mesh.geometry(), TextureMap::from_mesh(mesh), None)
    };

    let spec = NeighborhoodSpec { radius_multiplier: cfg.radius_multiplier };
    let set = cfg
        .kinds
        .iter()
        .any(|k| *k != DescriptorKind::GL)
        .then(|| DescriptorSet::compute(geometry, &spec));
    if let Some(s) = &set {
        stats.descriptor_radius = Some(s.radius);
    }

    let mut gais = Vec::with_capacity(cfg.kinds.len());
    for &kind in &cfg.kinds {
        let img = match (&set, kind) {
            (_, DescriptorKind::GL) => gai::tessellated_gray(mesh, &tmap, cfg.size)?,
            (Some(s), _) => {
                let field = s.field(kind)?;
                stats.invalid_vertices.insert(kind.to_string(), field.invalid_count());
                gai::rasterize_field(&tmap, &field, cfg.size, &cfg.normalization(kind))?
            }
            (None, _) => unreachable!("descriptor set computed for geometric kinds"),
        };
        gais.push(img.with_mesh_id(scan_id, step));
    }

    let fgais = cfg
        .combo_list()?
        .into_iter()
        .map(|c| fuse::fuse_combo(&gais, c))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let augmented = match &cfg.augment {
        Some(a) => fgais
            .iter()
            .map(|f| {
                let spec = AugmentSpec { seed: a.seed ^ fnv1a(&format!("{scan_id}.{}", f.name())), ..*a };
                fuse::augment(f, &spec)
            })
            .collect::<std::result::Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };
    Ok(ScanOutputs { gais, fgais, augmented, stats })
}

pub fn gai_file_name(scan_id: &str, kind: DescriptorKind) -> String {
    format!("{scan_id}.{kind}.png")
}

pub fn fgai_file_name(scan_id: &str, combo: &Combo) -> String {
    format!("{scan_id}.{combo}.png")
}

pub fn augmented_file_name(scan_id: &str, combo: &Combo) -> String {
    format!("{scan_id}.{combo}.aug.png")
}

fn done_marker(out: &Path, scan_id: &str) -> PathBuf {
    out.join(format!("{scan_id}.done"))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn gai_record(file: &str, g: &GaiImage) -> serde_json::Value {
    json!({
        "image": file,
        "scan_id": g.provenance.mesh_id,
        "kind": g.kind,
        "size": [g.width, g.height],
        "step": g.provenance.step,
        "normalization": g.provenance.normalization,
    })
}

fn fgai_record(file: &str, f: &FgaiImage) -> serde_json::Value {
    json!({
        "image": file,
        "scan_id": f.provenance.mesh_id,
        "combo": f.name(),
        "size": [f.width, f.height],
        "step": f.provenance.step,
        "sources": f.provenance.sources,
        "augmentation": f.provenance.augmentation,
    })
}

/// Writes a scan's images, provenance and completion marker.
pub fn write_scan(out: &Path, scan_id: &str, outputs: &ScanOutputs) -> Result<usize> {
    let mut lines = Vec::new();
    let mut written = 0;
    for g in &outputs.gais {
        let name = gai_file_name(scan_id, g.kind);
        write(&out.join(&name), &g.to_png()?)?;
        lines.push(gai_record(&name, g));
        written += 1;
    }
    for f in &outputs.fgais {
        let name = fgai_file_name(scan_id, &f.combo);
        write(&out.join(&name), &f.to_png()?)?;
        lines.push(fgai_record(&name, f));
        written += 1;
    }
    for f in &outputs.augmented {
        let name = augmented_file_name(scan_id, &f.combo);
        write(&out.join(&name), &f.to_png()?)?;
        lines.push(fgai_record(&name, f));
        written += 1;
    }
    let mut jsonl = String::new();
    for l in lines {
        jsonl.push_str(&l.to_string());
        jsonl.push('\n');
    }
    write(&out.join(format!("{scan_id}.provenance.jsonl")), jsonl.as_bytes())?;
    let marker = serde_json::to_string_pretty(&json!({ "scan_id": scan_id, "images": written, "stats": outputs.stats }))
        .expect("marker serializes");
    write(&done_marker(out, scan_id), marker.as_bytes())?;
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ScanStatus {
    Done { images: usize },
    Skipped,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scans: Vec<(String, ScanStatus)>,
}

impl RunSummary {
    pub fn failed(&self) -> Vec<&str> {
        self.scans
            .iter()
            .filter(|(_, s)| matches!(s, ScanStatus::Failed(_)))
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn count(&self, f: impl Fn(&ScanStatus) -> bool) -> usize {
        self.scans.iter().filter(|(_, s)| f(s)).count()
    }

    pub fn success(&self) -> bool {
        self.failed().is_empty()
    }

    pub fn log_text(&self) -> String {
        let mut s = String::new();
        for (id, status) in &self.scans {
            match status {
                ScanStatus::Done { images } => s.push_str(&format!("{id}\tdone\t{images} images\n")),
                ScanStatus::Skipped => s.push_str(&format!("{id}\tskipped\talready complete\n")),
                ScanStatus::Failed(e) => s.push_str(&format!("{id}\tfailed\t{e}\n")),
            }
        }
        s.push_str(&format!(
            "total {}\tdone {}\tskipped {}\tfailed {}\n",
            self.scans.len(),
            self.count(|s| matches!(s, ScanStatus::Done { .. })),
            self.count(|s| matches!(s, ScanStatus::Skipped)),
            self.failed().len()
        ));
        s
    }
}

fn run_scan(entry: &ManifestEntry, cfg: &PipelineConfig) -> ScanStatus {
    let marker = done_marker(&cfg.out, &entry.scan_id);
    if !cfg.force && marker.exists() {
        return ScanStatus::Skipped;
    }
    let result = (|| -> Result<usize> {
        if marker.exists() {
            fs::remove_file(&marker).map_err(io_err(&marker))?;
        }
        let (mesh, report) = mesh::load_textured_mesh(&entry.mesh, &entry.texture).map_err(|source| {
            PipelineError::Load { mesh: entry.mesh.clone(), texture: entry.texture.clone(), source }
        })?;
        let outputs = process_loaded(&entry.scan_id, &mesh, report, cfg)?;
        write_scan(&cfg.out, &entry.scan_id, &outputs)
    })();
    match result {
        Ok(images) => {
            log::info!("{}: {images} images", entry.scan_id);
            ScanStatus::Done { images }
        }
        Err(e) => {
            log::error!("{}: {e}", entry.scan_id);
            ScanStatus::Failed(e.to_string())
        }
    }
}

/// Processes every manifest scan into `cfg.out`, skipping completed scans
/// unless `cfg.force`. Writes `process.log` in manifest order.
pub fn run_pipeline(cfg: &PipelineConfig, manifest: &Manifest) -> Result<RunSummary> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    let statuses = run_parallel(cfg.workers, manifest.entries.len(), |i| run_scan(&manifest.entries[i], cfg))?;
    let summary = RunSummary {
        scans: manifest.entries.iter().map(|e| e.scan_id.clone()).zip(statuses).collect(),
    };
    let log_path = cfg.out.join("process.log");
    write(&log_path, summary.log_text().as_bytes())?;
    Ok(summary)
}

#[cfg(feature = "parallel")]
fn run_parallel<T: Send>(workers: usize, n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(|| crate::par::map_range(n, f)))
}

#[cfg(not(feature = "parallel"))]
fn run_parallel<T>(_workers: usize, n: usize, f: impl Fn(usize) -> T) -> Result<Vec<T>> {
    Ok((0..n).map(f).collect())
}

/// Reads an 8-bit gray PNG written by the pipeline back as a GAI. Coverage is
/// not stored on disk, so every pixel counts as covered.
pub fn read_gai_png(path: &Path, kind: DescriptorKind, scan_id: &str) -> Result<GaiImage> {
    let img = image::open(path)
        .map_err(|e| PipelineError::Image { path: path.to_path_buf(), message: e.to_string() })?
        .into_luma8();
    let (w, h) = img.dimensions();
    Ok(GaiImage {
        kind,
        width: w,
        height: h,
        pixels: img.into_raw(),
        coverage: vec![true; (w * h) as usize],
        background: BACKGROUND,
        provenance: GaiProvenance { mesh_id: scan_id.to_string(), step: None, normalization: None },
    })
}

/// Fuses GAI PNGs already in `dir` into FGAI PNGs; returns the files written.
pub fn fuse_directory(dir: &Path, manifest: &Manifest, combos: &[Combo]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for e in &manifest.entries {
        let needed: BTreeSet<DescriptorKind> = combos.iter().flat_map(|c| c.0).collect();
        let gais = needed
            .iter()
            .map(|&k| read_gai_png(&dir.join(gai_file_name(&e.scan_id, k)), k, &e.scan_id))
            .collect::<Result<Vec<_>>>()?;
        for c in combos {
            let f = fuse::fuse_combo(&gais, *c)?;
            let path = dir.join(fgai_file_name(&e.scan_id, c));
            write(&path, &f.to_png()?)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Box-averages an interleaved 8-bit image by `block` in each direction,
/// dropping partial blocks; values are scaled to [0, 1].
pub fn downsample(pixels: &[u8], width: u32, height: u32, channels: usize, block: u32) -> Vec<f64> {
    let block = block.max(1);
    let (bw, bh) = (width / block, height / block);
    let mut out = Vec::with_capacity((bw * bh) as usize * channels);
    let norm = 255.0 * (block * block) as f64;
    for by in 0..bh {
        for bx in 0..bw {
            for c in 0..channels {
                let mut s = 0u64;
                for y in by * block..(by + 1) * block {
                    for x in bx * block..(bx + 1) * block {
                        s += pixels[((y * width + x) as usize) * channels + c] as u64;
                    }
                }
                out.push(s as f64 / norm);
            }
        }
    }
    out
}

/// Feature matrix of downsampled pixels: one row per manifest scan, the named
/// images (`<scan>.<name>.png`, e.g. a combo or kind) concatenated in order.
pub fn pixel_features(dir: &Path, manifest: &Manifest, names: &[String], block: u32) -> Result<FeatureMatrix> {
    let mut rows = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        let mut row = Vec::new();
        for name in names {
            let path = dir.join(format!("{}.{name}.png", e.scan_id));
            let img = image::open(&path)
                .map_err(|err| PipelineError::Image { path: path.clone(), message: err.to_string() })?;
            let channels = img.color().channel_count() as usize;
            let (w, h) = (img.width(), img.height());
            let raw = match channels {
                1 => img.into_luma8().into_raw(),
                _ => img.into_rgb8().into_raw(),
            };
            row.extend(downsample(&raw, w, h, channels.min(3), block));
        }
        rows.push(row);
    }
    let samples = manifest.entries.iter().map(ManifestEntry::sample_info).collect();
    FeatureMatrix::from_rows(rows, samples)
        .map(|m| m.with_layer(format!("pixels/{}", names.join("+"))))
        .map_err(|e| PipelineError::Manifest(e.to_string()))
}
