//! One-vs-rest linear SVMs on the squared hinge loss, subject-disjoint
//! cross-validation, accuracy/AuC, and sliding-window majority voting.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyze::FeatureMatrix;
use crate::par;

#[derive(Error, Debug, PartialEq)]
pub enum ClassifyError {
    #[error("need at least 2 classes, found {0}")]
    TooFewClasses(usize),

    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite feature value")]
    NonFinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("{folds} folds requested but only {subjects} subjects")]
    TooManyFolds { folds: usize, subjects: usize },

    #[error("fold {0}: training set has fewer than 2 classes")]
    DegenerateFold(usize),

    #[error("empty sequence")]
    EmptySequence,

    #[error("sample {0} lacks sequence_id/frame_index")]
    MissingSequence(String),
}

pub type Result<T> = std::result::Result<T, ClassifyError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    /// Penalty on the summed squared hinge losses.
    pub c: f64,
    pub max_iter: usize,
    /// Stop once the relative objective decrease falls below this.
    pub tol: f64,
    /// Value of the appended constant feature; `None` trains without bias.
    pub bias: Option<f64>,
    /// Z-score features with statistics of the training data.
    pub standardize: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { c: 1.0, max_iter: 100, tol: 1e-6, bias: Some(1.0), standardize: true }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(ClassifyError::InvalidParameter(format!("C = {}", self.c)));
        }
        if self.max_iter == 0 {
            return Err(ClassifyError::InvalidParameter("max_iter = 0".into()));
        }
        Ok(())
    }
}

/// A binary linear model; `score(x) = w·x + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub positive_class: String,
    pub c: f64,
    /// Objective after each accepted iterate, starting at w = 0.
    pub objective_history: Vec<f64>,
    pub converged: bool,
}

impl SvmModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn objective(&self) -> f64 {
        *self.objective_history.last().unwrap_or(&f64::NAN)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-major design matrix with the optional bias column appended.
struct Design<'a> {
    x: &'a [f64],
    d: usize,
    bias: Option<f64>,
}

impl Design<'_> {
    fn n(&self) -> usize {
        self.x.len() / self.d.max(1)
    }

    fn dim(&self) -> usize {
        self.d + self.bias.is_some() as usize
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    fn dot(&self, i: usize, w: &[f64]) -> f64 {
        let s = dot(&w[..self.d], self.row(i));
        match self.bias {
            Some(b) => s + w[self.d] * b,
            None => s,
        }
    }

    fn axpy(&self, i: usize, a: f64, out: &mut [f64]) {
        for (o, v) in out[..self.d].iter_mut().zip(self.row(i)) {
            *o += a * v;
        }
        if let Some(b) = self.bias {
            out[self.d] += a * b;
        }
    }
}

fn objective(design: &Design, y: &[f64], c: f64, w: &[f64]) -> f64 {
    let loss: f64 = (0..design.n())
        .map(|i| {
            let m = 1.0 - y[i] * design.dot(i, w);
            if m > 0.0 {
                m * m
            } else {
                0.0
            }
        })
        .sum();
    0.5 * dot(w, w) + c * loss
}

/// Minimizes `½‖w‖² + C Σ max(0, 1 − y wᵀx)²` by Newton steps on the
/// generalized Hessian `I + 2C X_Iᵀ X_I` (I = margin violators), solved with
/// conjugate gradients, followed by a backtracking line search that only
/// accepts decreasing objectives.
pub fn train_binary(
    x: &[f64],
    dim: usize,
    y: &[f64],
    positive_class: &str,
    cfg: &SvmConfig,
) -> Result<SvmModel> {
    cfg.validate()?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ClassifyError::NonFinite);
    }
    let design = Design { x, d: dim, bias: cfg.bias };
    let n = design.n();
    let p = design.dim();
    let c = cfg.c;
    let mut w = vec![0.0; p];
    let mut f = objective(&design, y, c, &w);
    let mut history = vec![f];
    let mut converged = false;

    for _ in 0..cfg.max_iter {
        let margins: Vec<f64> = (0..n).map(|i| 1.0 - y[i] * design.dot(i, &w)).collect();
        let active: Vec<usize> = (0..n).filter(|&i| margins[i] > 0.0).collect();
        let mut g = w.clone();
        for &i in &active {
            design.axpy(i, -2.0 * c * y[i] * margins[i], &mut g);
        }
        let gnorm = dot(&g, &g).sqrt();
        if gnorm <= 1e-12 * (1.0 + dot(&w, &w).sqrt()) {
            converged = true;
            break;
        }
        let hess = |v: &[f64]| {
            let mut out = v.to_vec();
            for &i in &active {
                let t = 2.0 * c * design.dot(i, v);
                design.axpy(i, t, &mut out);
            }
            out
        };
        let step = conjugate_gradient(hess, &g, 1e-4 * gnorm, 10 * p.max(10));
        let slope = dot(&g, &step);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<f64> = w.iter().zip(&step).map(|(a, s)| a + alpha * s).collect();
            let fc = objective(&design, y, c, &cand);
            if fc <= f + 1e-4 * alpha * slope && fc <= f {
                accepted = Some((cand, fc));
                break;
            }
            alpha *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            converged = true;
            break;
        };
        let decrease = (f - fc) / f.abs().max(f64::MIN_POSITIVE);
        w = cand;
        f = fc;
        history.push(f);
        if decrease < cfg.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("svm for class '{positive_class}' hit the iteration cap ({})", cfg.max_iter);
    }
    let bias = cfg.bias.map_or(0.0, |b| w[dim] * b);
    w.truncate(dim);
    Ok(SvmModel {
        weights: w,
        bias,
        positive_class: positive_class.to_string(),
        c,
        objective_history: history,
        converged,
    })
}

/// Solves `H s = −g` for symmetric positive definite `H`, given as a
/// matrix-vector product.
fn conjugate_gradient(h: impl Fn(&[f64]) -> Vec<f64>, g: &[f64], tol: f64, max_iter: usize) -> Vec<f64> {
    let mut s = vec![0.0; g.len()];
    let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut d = r.clone();
    let mut rr = dot(&r, &r);
    for _ in 0..max_iter {
        if rr.sqrt() <= tol {
            break;
        }
        let hd = h(&d);
        let alpha = rr / dot(&d, &hd);
        for ((si, ri), (di, hi)) in s.iter_mut().zip(r.iter_mut()).zip(d.iter().zip(&hd)) {
            *si += alpha * di;
            *ri -= alpha * hi;
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for (di, ri) in d.iter_mut().zip(&r) {
            *di = ri + beta * *di;
        }
    }
    s
}

/// Per-feature z-scoring; zero spread maps to a unit divisor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(fm: &FeatureMatrix) -> Self {
        let (n, d) = (fm.rows(), fm.cols());
        let mut mean = vec![0.0; d];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(fm.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n.max(1) as f64);
        let mut var = vec![0.0; d];
        for i in 0..n {
            for ((s, v), m) in var.iter_mut().zip(fm.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .iter()
            .map(|s| {
                let sd = (s / n.max(1) as f64).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, fm: &FeatureMatrix) -> Vec<f64> {
        let mut out = Vec::with_capacity(fm.values().len());
        for i in 0..fm.rows() {
            out.extend(fm.row(i).iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvrModel {
    pub classes: Vec<String>,
    pub models: Vec<SvmModel>,
    pub standardizer: Option<Standardizer>,
    pub config: SvmConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// `scores[sample][class]`.
    pub scores: Vec<Vec<f64>>,
    /// Index into the model's class list.
    pub labels: Vec<usize>,
}

/// One model per class (sorted label order), each against all others.
pub fn train_ovr_svm(fm: &FeatureMatrix, cfg: &SvmConfig) -> Result<OvrModel> {
    cfg.validate()?;
    let classes = fm.classes();
    if classes.len() < 2 {
        return Err(ClassifyError::TooFewClasses(classes.len()));
    }
    let standardizer = cfg.standardize.then(|| Standardizer::fit(fm));
    let x = match &standardizer {
        Some(s) => s.apply(fm),
        None => fm.values().to_vec(),
    };
    let labels = fm.labels();
    let trained = par::map_range(classes.len(), |k| {
        let y: Vec<f64> = labels.iter().map(|l| if *l == classes[k] { 1.0 } else { -1.0 }).collect();
        train_binary(&x, fm.cols(), &y, &classes[k], cfg)
    });
    let models = trained.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(OvrModel { classes, models, standardizer, config: *cfg })
}

impl OvrModel {
    pub fn dim(&self) -> usize {
        self.models.first().map_or(0, |m| m.weights.len())
    }

    pub fn predict(&self, fm: &FeatureMatrix) -> Result<Prediction> {
        if fm.cols() != self.dim() {
            return Err(ClassifyError::DimensionMismatch { expected: self.dim(), got: fm.cols() });
        }
        let x = match &self.standardizer {
            Some(s) => s.apply(fm),
            None => fm.values().to_vec(),
        };
        let d = fm.cols();
        let mut scores = Vec::with_capacity(fm.rows());
        let mut labels = Vec::with_capacity(fm.rows());
        for i in 0..fm.rows() {
            let row = &x[i * d..(i + 1) * d];
            let s: Vec<f64> = self.models.iter().map(|m| m.score(row)).collect();
            labels.push(argmax(&s));
            scores.push(s);
        }
        Ok(Prediction { scores, labels })
    }
}

/// First index of the maximum.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Area under the ROC curve via the Mann–Whitney statistic with midranks
/// (ties count ½).
pub fn auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    let np = positive.iter().filter(|p| **p).count();
    let nn = positive.len() - np;
    if np == 0 || nn == 0 {
        return Err(ClassifyError::UndefinedMetric("AuC needs both positive and negative samples".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(ClassifyError::NonFinite);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their mean
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| positive[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (np * (np + 1)) as f64 / 2.0;
    Ok(u / (np as f64 * nn as f64))
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if predicted.is_empty() {
        return 0.0;
    }
    predicted.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / predicted.len() as f64
}

/// Subject-level partition for cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub seed: u64,
    pub folds: Vec<Vec<String>>,
}

impl FoldSpec {
    /// Shuffles the sorted distinct subjects with `seed` and cuts them into
    /// `k` contiguous near-equal chunks.
    pub fn new<S: AsRef<str>>(subjects: &[S], k: usize, seed: u64) -> Result<Self> {
        let mut unique: Vec<String> = subjects
            .iter()
            .map(|s| s.as_ref().to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if k < 2 {
            return Err(ClassifyError::InvalidParameter(format!("{k} folds")));
        }
        if k > unique.len() {
            return Err(ClassifyError::TooManyFolds { folds: k, subjects: unique.len() });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        unique.shuffle(&mut rng);
        let n = unique.len();
        let folds = (0..k).map(|f| unique[f * n / k..(f + 1) * n / k].to_vec()).collect();
        Ok(Self { seed, folds })
    }

    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Fold index of each subject.
    pub fn assignment(&self) -> BTreeMap<&str, usize> {
        let mut m = BTreeMap::new();
        for (f, subjects) in self.folds.iter().enumerate() {
            for s in subjects {
                m.insert(s.as_str(), f);
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Accuracy,
    Auc,
}

impl FromStr for Metric {
    type Err = ClassifyError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "accuracy" | "acc" => Ok(Self::Accuracy),
            "auc" => Ok(Self::Auc),
            other => Err(ClassifyError::InvalidParameter(format!("metric '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub metric: Metric,
    pub svm: SvmConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { folds: 10, seed: 0, metric: Metric::Accuracy, svm: SvmConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Protocol {
    pub mode: String,
    pub folds: usize,
    pub seed: u64,
    pub metric: Metric,
    pub c: f64,
    pub standardize: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_alignment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tie_rule: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub protocol: Protocol,
    pub classes: Vec<String>,
    pub fold_subjects: Vec<Vec<String>>,
    pub per_fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// Mean one-vs-rest AuC over the classes defined in each fold.
    pub per_fold_auc: Vec<Option<f64>>,
    pub mean_auc: Option<f64>,
    /// Per class, the mean over folds where it is defined.
    pub per_class_auc: Vec<Option<f64>>,
    /// `confusion[true][predicted]`, summed over folds.
    pub confusion: Vec<Vec<usize>>,
    /// The selected metric's mean.
    pub score: Option<f64>,
    pub unconverged_models: usize,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
        let p = &self.protocol;
        let mut s = String::new();
        let _ = writeln!(s, "mode {}  folds {}  seed {}  C {}  metric {:?}", p.mode, p.folds, p.seed, p.c, p.metric);
        if let Some(w) = p.window {
            let _ = writeln!(s, "window {w} ({})", p.window_alignment.as_deref().unwrap_or(""));
        }
        let _ = writeln!(s, "{:>6} {:>10} {:>10}", "fold", "accuracy", "auc");
        for (i, (a, u)) in self.per_fold_accuracy.iter().zip(&self.per_fold_auc).enumerate() {
            let _ = writeln!(s, "{:>6} {:>10.4} {:>10}", i + 1, a, fmt(*u));
        }
        let _ = writeln!(s, "{:>6} {:>10.4} {:>10}", "mean", self.mean_accuracy, fmt(self.mean_auc));
        let _ = writeln!(s);
        let width = self.classes.iter().map(String::len).max().unwrap_or(1).max(5);
        let _ = write!(s, "{:>width$}", "true\\pred");
        for c in &self.classes {
            let _ = write!(s, " {c:>width$}");
        }
        let _ = writeln!(s);
        for (c, row) in self.classes.iter().zip(&self.confusion) {
            let _ = write!(s, "{c:>width$}");
            for v in row {
                let _ = write!(s, " {v:>width$}");
            }
            let _ = writeln!(s);
        }
        s
    }

    /// `class,auc` rows; undefined entries are left empty.
    pub fn per_class_auc_csv(&self) -> String {
        let mut s = String::from("class,auc\n");
        for (c, a) in self.classes.iter().zip(&self.per_class_auc) {
            let _ = writeln!(s, "{c},{}", a.map_or(String::new(), |v| v.to_string()));
        }
        s
    }
}

struct FoldResult {
    accuracy: f64,
    auc: Option<f64>,
    class_auc: Vec<Option<f64>>,
    confusion: Vec<Vec<usize>>,
    unconverged: usize,
}

fn mean(v: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Subject-disjoint k-fold evaluation.
pub fn cross_validate(fm: &FeatureMatrix, cfg: &CvConfig) -> Result<EvalReport> {
    let spec = FoldSpec::new(&fm.subjects(), cfg.folds, cfg.seed)?;
    evaluate(fm, &spec, cfg, None)
}

/// As [`cross_validate`], but per-frame predictions in each test sequence are
/// replaced by a trailing-window majority vote before scoring accuracy.
pub fn dynamic_cross_validate(fm: &FeatureMatrix, cfg: &CvConfig, window: usize) -> Result<EvalReport> {
    if window == 0 {
        return Err(ClassifyError::InvalidParameter("window 0".into()));
    }
    if let Some(s) = fm.samples().iter().find(|s| s.sequence_id.is_none() || s.frame_index.is_none()) {
        return Err(ClassifyError::MissingSequence(s.sample_id.clone()));
    }
    let spec = FoldSpec::new(&fm.subjects(), cfg.folds, cfg.seed)?;
    evaluate(fm, &spec, cfg, Some(window))
}

/// Evaluates on a given partition.
pub fn evaluate(fm: &FeatureMatrix, spec: &FoldSpec, cfg: &CvConfig, window: Option<usize>) -> Result<EvalReport> {
    let classes = fm.classes();
    if classes.len() < 2 {
        return Err(ClassifyError::TooFewClasses(classes.len()));
    }
    let class_index: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let assignment = spec.assignment();
    let fold_of: Vec<usize> = fm.subjects().iter().map(|s| assignment[s]).collect();
    for f in 0..spec.k() {
        for (i, &g) in fold_of.iter().enumerate() {
            let in_test = g == f;
            let subject_in_fold = spec.folds[f].iter().any(|s| s == fm.subjects()[i]);
            assert_eq!(in_test, subject_in_fold, "fold {f} is not subject-disjoint");
        }
    }

    let results = par::map_range(spec.k(), |f| -> Result<FoldResult> {
        let train_idx: Vec<usize> = (0..fm.rows()).filter(|&i| fold_of[i] != f).collect();
        let test_idx: Vec<usize> = (0..fm.rows()).filter(|&i| fold_of[i] == f).collect();
        let train = fm.select_rows(&train_idx);
        let test = fm.select_rows(&test_idx);
        if train.classes().len() < 2 {
            return Err(ClassifyError::DegenerateFold(f));
        }
        let model = train_ovr_svm(&train, &cfg.svm)?;
        let pred = model.predict(&test)?;
        let to_global: Vec<usize> = model.classes.iter().map(|c| class_index[c.as_str()]).collect();
        let truth: Vec<usize> = test.labels().iter().map(|l| class_index[l]).collect();
        let mut predicted: Vec<usize> = pred.labels.iter().map(|&k| to_global[k]).collect();

        if let Some(w) = window {
            let mut sequences: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, s) in test.samples().iter().enumerate() {
                sequences.entry(s.sequence_id.as_deref().unwrap_or("")).or_default().push(i);
            }
            for rows in sequences.values_mut() {
                rows.sort_by_key(|&i| test.samples()[i].frame_index);
                let frames: Vec<usize> = rows.iter().map(|&i| predicted[i]).collect();
                let voted = dynamic_vote(&frames, w)?;
                for (&i, v) in rows.iter().zip(voted) {
                    predicted[i] = v;
                }
            }
        }

        let mut confusion = vec![vec![0usize; classes.len()]; classes.len()];
        for (&t, &p) in truth.iter().zip(&predicted) {
            confusion[t][p] += 1;
        }
        let mut class_auc = vec![None; classes.len()];
        for (k, &g) in to_global.iter().enumerate() {
            let scores: Vec<f64> = pred.scores.iter().map(|s| s[k]).collect();
            let positive: Vec<bool> = truth.iter().map(|&t| t == g).collect();
            class_auc[g] = auc(&scores, &positive).ok();
        }
        Ok(FoldResult {
            accuracy: accuracy(&predicted, &truth),
            auc: mean(class_auc.iter().flatten().copied()),
            class_auc,
            confusion,
            unconverged: model.models.iter().filter(|m| !m.converged).count(),
        })
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;

    let per_fold_accuracy: Vec<f64> = results.iter().map(|r| r.accuracy).collect();
    let per_fold_auc: Vec<Option<f64>> = results.iter().map(|r| r.auc).collect();
    let mean_accuracy = mean(per_fold_accuracy.iter().copied()).unwrap_or(0.0);
    let mean_auc = mean(per_fold_auc.iter().flatten().copied());
    let per_class_auc = (0..classes.len())
        .map(|c| mean(results.iter().filter_map(|r| r.class_auc[c])))
        .collect();
    let mut confusion = vec![vec![0usize; classes.len()]; classes.len()];
    for r in &results {
        for (row, add) in confusion.iter_mut().zip(&r.confusion) {
            for (a, b) in row.iter_mut().zip(add) {
                *a += b;
            }
        }
    }
    let score = match cfg.metric {
        Metric::Accuracy => Some(mean_accuracy),
        Metric::Auc => mean_auc,
    };
    Ok(EvalReport {
        protocol: Protocol {
            mode: if window.is_some() { "dynamic" } else { "static" }.to_string(),
            folds: spec.k(),
            seed: spec.seed,
            metric: cfg.metric,
            c: cfg.svm.c,
            standardize: cfg.svm.standardize,
            window,
            window_alignment: window.map(|_| "trailing".to_string()),
            tie_rule: window.map(|_| "most-recent".to_string()),
        },
        classes,
        fold_subjects: spec.folds.clone(),
        per_fold_accuracy,
        mean_accuracy,
        per_fold_auc,
        mean_auc,
        per_class_auc,
        confusion,
        score,
        unconverged_models: results.iter().map(|r| r.unconverged).sum(),
    })
}

/// Majority vote over the trailing `window` labels ending at each position.
/// Ties go to whichever tied label occurs most recently.
pub fn dynamic_vote<T: PartialEq + Clone>(labels: &[T], window: usize) -> Result<Vec<T>> {
    if labels.is_empty() {
        return Err(ClassifyError::EmptySequence);
    }
    if window == 0 {
        return Err(ClassifyError::InvalidParameter("window 0".into()));
    }
    let mut out = Vec::with_capacity(labels.len());
    for i in 0..labels.len() {
        let start = (i + 1).saturating_sub(window);
        // (label, count, last position)
        let mut tally: Vec<(&T, usize, usize)> = Vec::new();
        for (j, l) in labels.iter().enumerate().take(i + 1).skip(start) {
            match tally.iter_mut().find(|(t, _, _)| *t == l) {
                Some(e) => {
                    e.1 += 1;
                    e.2 = j;
                }
                None => tally.push((l, 1, j)),
            }
        }
        let best = tally
            .iter()
            .max_by(|a, b| a.1.cmp(&b.1).then(a.2.cmp(&b.2)))
            .expect("window is non-empty");
        out.push(best.0.clone());
    }
    Ok(out)
}
