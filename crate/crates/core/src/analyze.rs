//! Feature matrices, the FMX1 interchange format and the per-feature
//! discrimination criterion J.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par;

#[derive(Error, Debug)]
pub enum AnalyzeError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("bad feature matrix file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("labels file: {0}")]
    Labels(String),

    #[error("invalid feature matrix: {0}")]
    Invalid(String),

    #[error("all features are zero")]
    AllZero,

    #[error("class '{0}' has fewer than 2 samples")]
    SmallClass(String),

    #[error("need at least 2 classes, found {0}")]
    TooFewClasses(usize),

    #[error("top_n {top} exceeds feature count {features}")]
    TopTooLarge { top: usize, features: usize },
}

pub type Result<T> = std::result::Result<T, AnalyzeError>;

pub const FMX_MAGIC: &[u8; 4] = b"FMX1";
pub const DEFAULT_TOP_N: usize = 500;

/// Per-row metadata carried in the labels CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleInfo {
    pub sample_id: String,
    pub subject_id: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_index: Option<u32>,
}

impl SampleInfo {
    pub fn new(sample_id: impl Into<String>, subject_id: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            sample_id: sample_id.into(),
            subject_id: subject_id.into(),
            label: label.into(),
            sequence_id: None,
            frame_index: None,
        }
    }
}

/// Samples × features, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    samples: Vec<SampleInfo>,
    pub layer: String,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>, samples: Vec<SampleInfo>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(AnalyzeError::Invalid(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if samples.len() != rows {
            return Err(AnalyzeError::Invalid(format!("{} labels for {rows} rows", samples.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(AnalyzeError::Invalid(format!(
                "non-finite value at row {}, column {}",
                i / cols.max(1),
                i % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, values, samples, layer: String::new() })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, samples: Vec<SampleInfo>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(AnalyzeError::Invalid("ragged rows".into()));
        }
        let n = rows.len();
        Self::new(n, cols, rows.into_iter().flatten().collect(), samples)
    }

    pub fn with_layer(mut self, layer: impl Into<String>) -> Self {
        self.layer = layer.into();
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn samples(&self) -> &[SampleInfo] {
        &self.samples
    }

    pub fn labels(&self) -> Vec<&str> {
        self.samples.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn subjects(&self) -> Vec<&str> {
        self.samples.iter().map(|s| s.subject_id.as_str()).collect()
    }

    /// Sorted distinct class labels.
    pub fn classes(&self) -> Vec<String> {
        let mut c: Vec<String> = self.samples.iter().map(|s| s.label.clone()).collect();
        c.sort();
        c.dedup();
        c
    }

    /// New matrix holding the given rows in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            values,
            samples: idx.iter().map(|&i| self.samples[i].clone()).collect(),
            layer: self.layer.clone(),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut values = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            let row = self.row(i);
            values.extend(cols.iter().map(|&j| row[j]));
        }
        Self {
            rows: self.rows,
            cols: cols.len(),
            values,
            samples: self.samples.clone(),
            layer: self.layer.clone(),
        }
    }

    /// Writes `path` (FMX1) and its sibling labels CSV.
    pub fn write(&self, path: &Path) -> Result<()> {
        let io = |source| AnalyzeError::Io { path: path.to_path_buf(), source };
        let mut buf = Vec::with_capacity(12 + 4 * self.values.len());
        buf.extend_from_slice(FMX_MAGIC);
        buf.extend_from_slice(&(self.rows as u32).to_le_bytes());
        buf.extend_from_slice(&(self.cols as u32).to_le_bytes());
        for v in &self.values {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        fs::write(path, buf).map_err(io)?;
        write_labels(&labels_path(path), &self.samples)
    }

    /// Reads an FMX1 file and its sibling labels CSV.
    pub fn read(path: &Path) -> Result<Self> {
        let (rows, cols, values) = read_fmx(path)?;
        let samples = read_labels(&labels_path(path))?;
        if samples.len() != rows {
            return Err(AnalyzeError::Labels(format!(
                "{} label rows for {rows} matrix rows",
                samples.len()
            )));
        }
        let layer = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(Self::new(rows, cols, values, samples)?.with_layer(layer))
    }
}

/// `feats.fmx` → `feats.labels.csv`.
pub fn labels_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.labels.csv"))
}

/// Raw FMX1 payload as (rows, cols, values).
pub fn read_fmx(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|source| AnalyzeError::Io { path: path.to_path_buf(), source })?;
    let bad = |message: String| AnalyzeError::Format { path: path.to_path_buf(), message };
    if bytes.len() < 12 || &bytes[..4] != FMX_MAGIC {
        return Err(bad("missing FMX1 header".into()));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| bad("size overflow".into()))?;
    if bytes.len() - 12 != expected {
        return Err(bad(format!(
            "header says {rows}x{cols} ({expected} bytes) but payload is {} bytes",
            bytes.len() - 12
        )));
    }
    let values = bytes[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok((rows, cols, values))
}

pub fn write_labels(path: &Path, samples: &[SampleInfo]) -> Result<()> {
    let with_seq = samples.iter().any(|s| s.sequence_id.is_some() || s.frame_index.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| AnalyzeError::Labels(e.to_string());
    if with_seq {
        w.write_record(["sample_id", "subject_id", "label", "sequence_id", "frame_index"]).map_err(err)?;
    } else {
        w.write_record(["sample_id", "subject_id", "label"]).map_err(err)?;
    }
    for s in samples {
        let mut rec = vec![s.sample_id.clone(), s.subject_id.clone(), s.label.clone()];
        if with_seq {
            rec.push(s.sequence_id.clone().unwrap_or_default());
            rec.push(s.frame_index.map(|f| f.to_string()).unwrap_or_default());
        }
        w.write_record(&rec).map_err(err)?;
    }
    let data = w.into_inner().map_err(|e| AnalyzeError::Labels(e.to_string()))?;
    let mut f = fs::File::create(path).map_err(|source| AnalyzeError::Io { path: path.to_path_buf(), source })?;
    f.write_all(&data).map_err(|source| AnalyzeError::Io { path: path.to_path_buf(), source })
}

pub fn read_labels(path: &Path) -> Result<Vec<SampleInfo>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| AnalyzeError::Labels(format!("{}: {e}", path.display())))?;
    let headers = r.headers().map_err(|e| AnalyzeError::Labels(e.to_string()))?.clone();
    let required = ["sample_id", "subject_id", "label"];
    for (i, name) in required.iter().enumerate() {
        if headers.get(i) != Some(name) {
            return Err(AnalyzeError::Labels(format!("expected column {i} to be '{name}', header is {headers:?}")));
        }
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| AnalyzeError::Labels(e.to_string()))?;
        let field = |i: usize| rec.get(i).filter(|s| !s.is_empty()).map(str::to_string);
        let frame_index = match field(4) {
            Some(f) => Some(f.parse::<u32>().map_err(|e| {
                AnalyzeError::Labels(format!("row {}: frame_index '{f}': {e}", line + 2))
            })?),
            None => None,
        };
        out.push(SampleInfo {
            sample_id: rec.get(0).unwrap_or_default().to_string(),
            subject_id: rec.get(1).unwrap_or_default().to_string(),
            label: rec.get(2).unwrap_or_default().to_string(),
            sequence_id: field(3),
            frame_index,
        });
    }
    Ok(out)
}

/// Stacks matrices with equal column counts; used to pool samples across
/// FGAI combos for a layer-wise analysis.
pub fn vstack(parts: &[FeatureMatrix]) -> Result<FeatureMatrix> {
    let cols = parts.first().map_or(0, |p| p.cols);
    if let Some(p) = parts.iter().find(|p| p.cols != cols) {
        return Err(AnalyzeError::Invalid(format!("column counts differ: {cols} vs {}", p.cols)));
    }
    let mut values = Vec::new();
    let mut samples = Vec::new();
    for p in parts {
        values.extend_from_slice(&p.values);
        samples.extend_from_slice(&p.samples);
    }
    let rows = samples.len();
    Ok(FeatureMatrix {
        rows,
        cols,
        values,
        samples,
        layer: parts.first().map(|p| p.layer.clone()).unwrap_or_default(),
    })
}

/// Drops columns that are exactly zero in every row. Returns the pruned
/// matrix and, for each kept column, its original index.
pub fn prune_zero_features(fm: &FeatureMatrix) -> Result<(FeatureMatrix, Vec<usize>)> {
    let kept: Vec<usize> = (0..fm.cols)
        .filter(|&j| (0..fm.rows).any(|i| fm.get(i, j) != 0.0))
        .collect();
    if kept.is_empty() {
        return Err(AnalyzeError::AllZero);
    }
    Ok((fm.select_columns(&kept), kept))
}

pub const SIGMA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscriminationReport {
    pub classes: Vec<String>,
    /// J per feature, in column order.
    pub j: Vec<f64>,
    /// Feature indices by descending J, ties by ascending index.
    pub ranking: Vec<usize>,
    /// `means[c][f]`, `stds[c][f]` (sample std, floored).
    pub means: Vec<Vec<f64>>,
    pub stds: Vec<Vec<f64>>,
    pub layer: String,
}

impl DiscriminationReport {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }
}

/// J for one feature from per-class means and (floored) standard deviations.
pub fn pair_criterion(means: &[f64], stds: &[f64]) -> f64 {
    let mut j = 0.0;
    for a in 0..means.len() {
        for b in a + 1..means.len() {
            let (va, vb) = (stds[a] * stds[a], stds[b] * stds[b]);
            let d = means[a] - means[b];
            j += 0.5 * d * d * (1.0 / va + 1.0 / vb) + 0.5 * (va / vb + vb / va - 2.0);
        }
    }
    j
}

pub fn fisher_j(fm: &FeatureMatrix) -> Result<DiscriminationReport> {
    let classes = fm.classes();
    if classes.len() < 2 {
        return Err(AnalyzeError::TooFewClasses(classes.len()));
    }
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in fm.samples.iter().enumerate() {
        members.entry(s.label.as_str()).or_default().push(i);
    }
    if let Some((c, _)) = members.iter().find(|(_, m)| m.len() < 2) {
        return Err(AnalyzeError::SmallClass(c.to_string()));
    }
    let groups: Vec<&Vec<usize>> = members.values().collect();
    let stats = par::map_range(groups.len(), |c| {
        let rows = groups[c];
        let n = rows.len() as f64;
        let mut mean = vec![0.0; fm.cols];
        for &i in rows {
            for (m, v) in mean.iter_mut().zip(fm.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; fm.cols];
        for &i in rows {
            for ((s, v), m) in var.iter_mut().zip(fm.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.iter().map(|s| (s / (n - 1.0)).sqrt().max(SIGMA_FLOOR)).collect();
        (mean, std)
    });
    let (means, stds): (Vec<Vec<f64>>, Vec<Vec<f64>>) = stats.into_iter().unzip();
    let j = par::map_range(fm.cols, |f| {
        let m: Vec<f64> = means.iter().map(|c| c[f]).collect();
        let s: Vec<f64> = stds.iter().map(|c| c[f]).collect();
        pair_criterion(&m, &s)
    });
    let mut ranking: Vec<usize> = (0..fm.cols).collect();
    ranking.sort_by(|&a, &b| j[b].total_cmp(&j[a]).then(a.cmp(&b)));
    Ok(DiscriminationReport { classes, j, ranking, means, stds, layer: fm.layer.clone() })
}

/// CSV `rank,feature_index,J` for the best `top_n` features (rank from 1).
/// `feature_index` is mapped through `index_map` when given (e.g. the
/// kept-column map from pruning).
pub fn rank_report(report: &DiscriminationReport, top_n: usize, index_map: Option<&[usize]>) -> Result<String> {
    if top_n > report.j.len() {
        return Err(AnalyzeError::TopTooLarge { top: top_n, features: report.j.len() });
    }
    let mut out = String::from("rank,feature_index,J\n");
    for (r, &f) in report.ranking.iter().take(top_n).enumerate() {
        let idx = index_map.map_or(f, |m| m[f]);
        out.push_str(&format!("{},{},{}\n", r + 1, idx, report.j[f]));
    }
    Ok(out)
}
