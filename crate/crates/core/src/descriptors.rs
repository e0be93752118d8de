//! Per-vertex surface descriptors: Gaussian curvature (K), mean curvature (H),
//! shape index (SI) and local depth (LD).
//!
//! Each vertex gets a neighborhood made of the vertices within a graph-geodesic
//! radius (shortest paths over edge lengths), by default three mean edge
//! lengths. Curvatures come from a least-squares quadric (Monge patch) fitted
//! to that neighborhood in the vertex's tangent frame; local depth is the
//! signed distance from the vertex to the principal plane of the neighborhood.
//!
//! Sign conventions: vertex normals are area-weighted facet normals following
//! the facet winding, and surfaces that bulge toward the normal (convex toward
//! the viewer) have positive principal curvatures, so a dome has `H > 0` and
//! `SI` near 0, a cup has `H < 0` and `SI` near 1.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{mesh_metrics, Adjacency, TriMesh};
use crate::par;
use crate::resample::{covariance, sorted_eigen};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum DescriptorError {
    #[error("vertex {0} has an empty neighborhood")]
    EmptyNeighborhood(usize),

    #[error("neighborhood of vertex {vertex} has {size} points, need at least {needed}")]
    TooFewPoints { vertex: usize, size: usize, needed: usize },

    #[error("rank-deficient fit at vertex {0}")]
    RankDeficient(usize),

    #[error("invalid fundamental forms: {0}")]
    InvalidForms(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{invalid} of {total} vertices invalid for {kind}")]
    MostlyInvalid { kind: DescriptorKind, invalid: usize, total: usize },

    #[error("{0} is not a geometric descriptor")]
    NotGeometric(DescriptorKind),

    #[error("unknown descriptor kind '{0}'")]
    UnknownKind(String),
}

pub type Result<T> = std::result::Result<T, DescriptorError>;

/// Image channel kinds, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DescriptorKind {
    K,
    H,
    GL,
    LD,
    SI,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 5] = [Self::K, Self::H, Self::GL, Self::LD, Self::SI];
    pub const GEOMETRIC: [DescriptorKind; 4] = [Self::K, Self::H, Self::LD, Self::SI];

    pub fn name(self) -> &'static str {
        match self {
            Self::K => "K",
            Self::H => "H",
            Self::GL => "GL",
            Self::LD => "LD",
            Self::SI => "SI",
        }
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DescriptorKind {
    type Err = DescriptorError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| DescriptorError::UnknownKind(s.to_string()))
    }
}

/// Neighborhood radius as a multiple of the mean edge length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborhoodSpec {
    pub radius_multiplier: f64,
}

impl Default for NeighborhoodSpec {
    fn default() -> Self {
        Self { radius_multiplier: 3.0 }
    }
}

/// Vertices whose shortest-path distance over mesh edges from `seed` is at
/// most `radius`, sorted by index. Includes the seed.
pub fn neighborhood(adj: &Adjacency, seed: usize, radius: f64) -> Result<Vec<usize>> {
    if adj.neighbors(seed).is_empty() {
        return Err(DescriptorError::EmptyNeighborhood(seed));
    }
    // Relative slack so exact-radius ties survive rigid motions and scaling.
    let limit = radius * (1.0 + 1e-9);

    #[derive(PartialEq)]
    struct Entry(f64, usize);
    impl Eq for Entry {}
    impl Ord for Entry {
        fn cmp(&self, other: &Self) -> Ordering {
            other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
        }
    }
    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }

    let mut dist: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(seed, 0.0);
    heap.push(Entry(0.0, seed));
    let mut done = Vec::new();
    while let Some(Entry(d, v)) = heap.pop() {
        if d > dist[&v] {
            continue;
        }
        done.push(v);
        for &(u, len) in adj.neighbors(v) {
            let nd = d + len;
            if nd <= limit && dist.get(&u).is_none_or(|&old| nd < old) {
                dist.insert(u, nd);
                heap.push(Entry(nd, u));
            }
        }
    }
    done.sort_unstable();
    done.dedup();
    Ok(done)
}

/// First (E, F, G) and second (L, M, N) fundamental form coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalForms {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub l: f64,
    pub m: f64,
    pub n: f64,
}

impl FundamentalForms {
    pub fn is_valid(&self) -> bool {
        let all = [self.e, self.f, self.g, self.l, self.m, self.n];
        all.iter().all(|v| v.is_finite()) && self.e > 0.0 && self.g > 0.0 && self.e * self.g - self.f * self.f > 0.0
    }

    /// Forms of the graph `z(x, y)` from its first and second partials at a point.
    pub fn from_partials(zx: f64, zy: f64, zxx: f64, zxy: f64, zyy: f64) -> Self {
        let w = (1.0 + zx * zx + zy * zy).sqrt();
        Self {
            e: 1.0 + zx * zx,
            f: zx * zy,
            g: 1.0 + zy * zy,
            l: zxx / w,
            m: zxy / w,
            n: zyy / w,
        }
    }
}

/// Orthonormal tangent pair completing `axis` to a frame.
fn tangent_basis(axis: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if axis.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let t1 = (helper - axis * axis.dot(&helper)).normalize();
    let t2 = axis.cross(&t1);
    (t1, t2)
}

/// Least-squares quadric `z = a x² + b xy + c y² + d x + f y + g` over the
/// neighborhood, expressed in the tangent frame at `vertex` whose height axis
/// is the inward normal `-normal`; forms are evaluated at the vertex.
pub fn fit_monge_patch(
    points: &[Point3<f64>],
    vertex: usize,
    normal: &Vector3<f64>,
    nbhd: &[usize],
) -> Result<FundamentalForms> {
    if nbhd.len() < 6 {
        return Err(DescriptorError::TooFewPoints { vertex, size: nbhd.len(), needed: 6 });
    }
    if !(normal.norm() > 0.0) {
        return Err(DescriptorError::RankDeficient(vertex));
    }
    let axis = -normal.normalize();
    let (t1, t2) = tangent_basis(&axis);
    let origin = points[vertex];

    let local: Vec<Vector3<f64>> = nbhd
        .iter()
        .map(|&i| {
            let d = points[i] - origin;
            Vector3::new(d.dot(&t1), d.dot(&t2), d.dot(&axis))
        })
        .collect();
    // Scale the plane coordinates to unit size to condition the fit.
    let scale = local.iter().map(|p| p.x.hypot(p.y)).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(DescriptorError::RankDeficient(vertex));
    }
    let rows = local.len();
    let mut a = DMatrix::<f64>::zeros(rows, 6);
    let mut b = DVector::<f64>::zeros(rows);
    for (r, p) in local.iter().enumerate() {
        let (x, y) = (p.x / scale, p.y / scale);
        a[(r, 0)] = x * x;
        a[(r, 1)] = x * y;
        a[(r, 2)] = y * y;
        a[(r, 3)] = x;
        a[(r, 4)] = y;
        a[(r, 5)] = 1.0;
        b[r] = p.z;
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(DescriptorError::RankDeficient(vertex));
    }
    let coef = svd
        .solve(&b, 0.0)
        .map_err(|e| DescriptorError::Internal(e.to_string()))?;
    let s2 = scale * scale;
    let forms = FundamentalForms::from_partials(
        coef[3] / scale,
        coef[4] / scale,
        2.0 * coef[0] / s2,
        coef[1] / s2,
        2.0 * coef[2] / s2,
    );
    if !forms.is_valid() {
        return Err(DescriptorError::InvalidForms(format!("{forms:?}")));
    }
    Ok(forms)
}

/// Principal curvatures, `max >= min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrincipalCurvatures {
    pub max: f64,
    pub min: f64,
}

/// Roots of `det(II - k I) = 0`, i.e. eigenvalues of the shape operator.
pub fn principal_curvatures(ff: &FundamentalForms) -> Result<PrincipalCurvatures> {
    if !ff.is_valid() {
        return Err(DescriptorError::InvalidForms(format!("{ff:?}")));
    }
    let det1 = ff.e * ff.g - ff.f * ff.f;
    let mean = (ff.e * ff.n + ff.g * ff.l - 2.0 * ff.f * ff.m) / (2.0 * det1);
    let gauss = (ff.l * ff.n - ff.m * ff.m) / det1;
    let mut disc = mean * mean - gauss;
    let scale = (mean * mean).max(gauss.abs()).max(f64::MIN_POSITIVE);
    if disc < 0.0 {
        if disc < -1e-12 * scale {
            return Err(DescriptorError::Internal(format!("negative discriminant {disc}")));
        }
        disc = 0.0;
    }
    let root = disc.sqrt();
    Ok(PrincipalCurvatures { max: mean + root, min: mean - root })
}

/// Gaussian curvature, mean curvature and shape index in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureDescriptors {
    pub gaussian: f64,
    pub mean: f64,
    pub shape_index: f64,
}

pub fn curvature_descriptors(pc: &PrincipalCurvatures) -> CurvatureDescriptors {
    let (l1, l2) = (pc.max, pc.min);
    let gaussian = l1 * l2;
    let mean = 0.5 * (l1 + l2);
    let eps = 1e-8 * l1.abs().max(l2.abs()).max(1.0);
    let shape_index = if (l1 - l2).abs() < eps {
        if mean > eps {
            0.0
        } else if mean < -eps {
            1.0
        } else {
            0.5
        }
    } else {
        (0.5 - ((l1 + l2) / (l1 - l2)).atan() / PI).clamp(0.0, 1.0)
    };
    CurvatureDescriptors { gaussian, mean, shape_index }
}

/// Signed distance from the vertex to the principal plane of its
/// neighborhood, the plane normal oriented along the vertex normal.
pub fn local_depth(
    points: &[Point3<f64>],
    vertex: usize,
    normal: &Vector3<f64>,
    nbhd: &[usize],
) -> Result<f64> {
    if nbhd.len() < 3 {
        return Err(DescriptorError::TooFewPoints { vertex, size: nbhd.len(), needed: 3 });
    }
    let (centroid, cov) = covariance(nbhd.iter().map(|&i| points[i]));
    let (values, vectors) = sorted_eigen(cov);
    if !(values[1] > 1e-12 * values[0].max(f64::MIN_POSITIVE)) {
        return Err(DescriptorError::RankDeficient(vertex));
    }
    let mut axis = vectors[2];
    if axis.dot(normal) < 0.0 {
        axis = -axis;
    }
    Ok((points[vertex] - centroid).dot(&axis))
}

/// Per-vertex values of one descriptor kind with validity flags.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorField {
    pub kind: DescriptorKind,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl DescriptorField {
    pub fn invalid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| !v).count()
    }

    /// Debug dump: `vertex_index,value,valid`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("vertex_index,value,valid\n");
        for (i, (v, ok)) in self.values.iter().zip(&self.valid).enumerate() {
            out += &format!("{i},{v},{}\n", u8::from(*ok));
        }
        out
    }
}

/// Everything computed at one vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexDescriptors {
    pub curvatures: Option<(PrincipalCurvatures, CurvatureDescriptors)>,
    pub local_depth: Option<f64>,
}

/// All four geometric fields of a mesh, computed in one sweep.
#[derive(Debug, Clone)]
pub struct DescriptorSet {
    pub radius: f64,
    pub per_vertex: Vec<VertexDescriptors>,
}

impl DescriptorSet {
    pub fn compute(mesh: &TriMesh, spec: &NeighborhoodSpec) -> Self {
        let radius = spec.radius_multiplier * mesh_metrics(mesh).mean_edge_length;
        let adj = mesh.adjacency();
        let normals = mesh.vertex_normals();
        let per_vertex = par::map_range(mesh.vertex_count(), |v| {
            let Ok(nbhd) = neighborhood(&adj, v, radius) else {
                return VertexDescriptors { curvatures: None, local_depth: None };
            };
            let curvatures = fit_monge_patch(&mesh.vertices, v, &normals[v], &nbhd)
                .and_then(|ff| principal_curvatures(&ff))
                .map(|pc| (pc, curvature_descriptors(&pc)))
                .ok();
            let local_depth = local_depth(&mesh.vertices, v, &normals[v], &nbhd).ok();
            VertexDescriptors { curvatures, local_depth }
        });
        Self { radius, per_vertex }
    }

    /// Extracts one field; fails if more than half of the vertices are invalid.
    pub fn field(&self, kind: DescriptorKind) -> Result<DescriptorField> {
        let value = |d: &VertexDescriptors| -> Option<f64> {
            match kind {
                DescriptorKind::K => d.curvatures.map(|c| c.1.gaussian),
                DescriptorKind::H => d.curvatures.map(|c| c.1.mean),
                DescriptorKind::SI => d.curvatures.map(|c| c.1.shape_index),
                DescriptorKind::LD => d.local_depth,
                DescriptorKind::GL => None,
            }
        };
        if kind == DescriptorKind::GL {
            return Err(DescriptorError::NotGeometric(kind));
        }
        let opts: Vec<Option<f64>> = self.per_vertex.iter().map(value).collect();
        let field = DescriptorField {
            kind,
            values: opts.iter().map(|v| v.unwrap_or(0.0)).collect(),
            valid: opts.iter().map(Option::is_some).collect(),
        };
        let invalid = field.invalid_count();
        if 2 * invalid > field.values.len() {
            return Err(DescriptorError::MostlyInvalid { kind, invalid, total: field.values.len() });
        }
        Ok(field)
    }
}

/// Convenience wrapper computing a single geometric field.
pub fn descriptor_field(mesh: &TriMesh, kind: DescriptorKind, spec: &NeighborhoodSpec) -> Result<DescriptorField> {
    if kind == DescriptorKind::GL {
        return Err(DescriptorError::NotGeometric(kind));
    }
    DescriptorSet::compute(mesh, spec).field(kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn forms(e: f64, f: f64, g: f64, l: f64, m: f64, n: f64) -> FundamentalForms {
        FundamentalForms { e, f, g, l, m, n }
    }

    #[test]
    fn umbilic_roots() {
        let pc = principal_curvatures(&forms(1.0, 0.0, 1.0, 0.7, 0.0, 0.7)).unwrap();
        assert_relative_eq!(pc.max, 0.7);
        assert_relative_eq!(pc.min, 0.7);
    }

    #[test]
    fn diagonal_roots() {
        let pc = principal_curvatures(&forms(1.0, 0.0, 1.0, 2.0, 0.0, -2.0)).unwrap();
        assert_eq!((pc.max, pc.min), (2.0, -2.0));
    }

    #[test]
    fn invalid_metric_rejected() {
        assert!(principal_curvatures(&forms(1.0, 1.0, 1.0, 0.0, 0.0, 0.0)).is_err());
        assert!(principal_curvatures(&forms(0.0, 0.0, 1.0, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn descriptor_closed_forms() {
        let d = curvature_descriptors(&PrincipalCurvatures { max: 1.0, min: 1.0 });
        assert_eq!((d.gaussian, d.mean, d.shape_index), (1.0, 1.0, 0.0));
        let d = curvature_descriptors(&PrincipalCurvatures { max: -1.0, min: -1.0 });
        assert_eq!(d.shape_index, 1.0);
        let d = curvature_descriptors(&PrincipalCurvatures { max: 0.0, min: 0.0 });
        assert_eq!(d.shape_index, 0.5);
        let d = curvature_descriptors(&PrincipalCurvatures { max: 2.0, min: -2.0 });
        assert_eq!((d.gaussian, d.mean, d.shape_index), (-4.0, 0.0, 0.5));
        let d = curvature_descriptors(&PrincipalCurvatures { max: 0.5, min: 0.0 });
        assert_eq!(d.gaussian, 0.0);
        assert_eq!(d.mean, 0.25);
        assert_relative_eq!(d.shape_index, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn kind_parsing_and_order() {
        assert_eq!("si".parse::<DescriptorKind>().unwrap(), DescriptorKind::SI);
        assert!("XX".parse::<DescriptorKind>().is_err());
        let mut kinds = vec![DescriptorKind::SI, DescriptorKind::K, DescriptorKind::GL];
        kinds.sort();
        assert_eq!(kinds, vec![DescriptorKind::K, DescriptorKind::GL, DescriptorKind::SI]);
    }

    #[test]
    fn isolated_vertex_has_empty_neighborhood() {
        let mesh = TriMesh::new(
            vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0), Point3::new(5.0, 5.0, 5.0)],
            vec![[0, 1, 2]],
        );
        let adj = mesh.adjacency();
        assert_eq!(neighborhood(&adj, 3, 10.0), Err(DescriptorError::EmptyNeighborhood(3)));
        assert_eq!(neighborhood(&adj, 0, 0.5).unwrap(), vec![0]);
        assert_eq!(neighborhood(&adj, 0, 1.0).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn gl_is_not_geometric() {
        let mesh = crate::synth::icosphere(1, 1.0);
        assert!(matches!(
            descriptor_field(&mesh, DescriptorKind::GL, &NeighborhoodSpec::default()),
            Err(DescriptorError::NotGeometric(_))
        ));
    }

    #[test]
    fn csv_dump_format() {
        let field = DescriptorField { kind: DescriptorKind::K, values: vec![0.5, 0.0], valid: vec![true, false] };
        assert_eq!(field.to_csv(), "vertex_index,value,valid\n0,0.5,1\n1,0,0\n");
    }
}
