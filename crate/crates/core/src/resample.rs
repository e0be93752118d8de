//! Principal-plane projection, regular-grid resampling and texture-map rebuild.
//!
//! The mesh vertices are expressed in the frame of their principal axes, the
//! depth along the least-variance axis is interpolated on a regular grid laid
//! over the two dominant axes, and the covered grid nodes are triangulated.
//! Every resampled vertex remembers its nearest original vertex, which is how
//! the texture mapping is carried over to the new mesh.

use nalgebra::{Matrix3, Point3, SymmetricEigen, Vector3};
use thiserror::Error;

use crate::mesh::{mesh_metrics, TexturedMesh, TriMesh};
use crate::par;

#[derive(Error, Debug)]
pub enum ResampleError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("resampling failed: {0}")]
    ResamplingFailed(String),

    #[error("invalid resample configuration: {0}")]
    InvalidConfig(String),

    #[error("internal consistency error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, ResampleError>;

/// Centroid plus orthonormal, right-handed principal axes (descending variance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrincipalFrame {
    pub origin: Point3<f64>,
    pub axes: [Vector3<f64>; 3],
}

impl PrincipalFrame {
    pub fn to_local(&self, p: &Point3<f64>) -> Vector3<f64> {
        let d = p - self.origin;
        Vector3::new(d.dot(&self.axes[0]), d.dot(&self.axes[1]), d.dot(&self.axes[2]))
    }

    pub fn to_world(&self, local: &Vector3<f64>) -> Point3<f64> {
        self.origin + self.axes[0] * local.x + self.axes[1] * local.y + self.axes[2] * local.z
    }
}

/// Eigen-decomposition of a symmetric 3x3 matrix, eigenvalues descending.
pub(crate) fn sorted_eigen(m: Matrix3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let eig = SymmetricEigen::new(m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.map(|i| eig.eigenvalues[i]);
    let vectors = order.map(|i| eig.eigenvectors.column(i).normalize());
    (values, vectors)
}

pub(crate) fn covariance(points: impl Iterator<Item = Point3<f64>> + Clone) -> (Point3<f64>, Matrix3<f64>) {
    let mut n = 0usize;
    let mut sum = Vector3::zeros();
    for p in points.clone() {
        sum += p.coords;
        n += 1;
    }
    let centroid = Point3::from(sum / n as f64);
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    (centroid, cov / n as f64)
}

fn largest_component_positive(v: Vector3<f64>) -> Vector3<f64> {
    let i = v.iamax();
    if v[i] < 0.0 {
        -v
    } else {
        v
    }
}

/// Principal axes of the vertex cloud.
///
/// `e3` (least variance) is oriented to agree with the mean facet normal;
/// `e1` is oriented so the third moment of the projections is positive,
/// falling back to its largest component being positive for symmetric clouds;
/// `e2 = e3 × e1`.
pub fn principal_frame(mesh: &TriMesh) -> Result<PrincipalFrame> {
    if mesh.vertices.len() < 3 {
        return Err(ResampleError::DegenerateGeometry("fewer than 3 vertices".into()));
    }
    let (origin, cov) = covariance(mesh.vertices.iter().copied());
    let (values, vectors) = sorted_eigen(cov);
    if !(values[1] > 1e-12 * values[0].max(f64::MIN_POSITIVE)) {
        return Err(ResampleError::DegenerateGeometry(
            "vertices are collinear (rank-deficient covariance)".into(),
        ));
    }

    let normal = mesh.total_normal();
    let mut e3 = vectors[2];
    let dot = normal.dot(&e3);
    if dot.abs() > 1e-12 * normal.norm() {
        if dot < 0.0 {
            e3 = -e3;
        }
    } else {
        e3 = largest_component_positive(e3);
    }

    let mut e1 = vectors[0];
    let (mut m2, mut m3) = (0.0, 0.0);
    for p in &mesh.vertices {
        let t = (p - origin).dot(&e1);
        m2 += t * t;
        m3 += t * t * t;
    }
    let n = mesh.vertices.len() as f64;
    let skew = (m3 / n) / (m2 / n).powf(1.5);
    if skew.abs() > 1e-9 {
        if skew < 0.0 {
            e1 = -e1;
        }
    } else {
        e1 = largest_component_positive(e1);
    }
    // Re-orthogonalize against rounding.
    e1 = (e1 - e3 * e3.dot(&e1)).normalize();
    let e2 = e3.cross(&e1).normalize();
    Ok(PrincipalFrame { origin, axes: [e1, e2, e3] })
}

/// How the grid spacing is derived from the step `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpacingRule {
    /// `sqrt(k * A / V)` with `A` the projected facet area and `V` the vertex
    /// count: node density is exactly `1/k` of the original vertex density.
    #[default]
    VertexDensity,
    /// `sqrt(k) * e` with `e` the mean edge length.
    EdgeLength,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleConfig {
    pub step: f64,
    pub spacing: SpacingRule,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        Self { step: 3.5, spacing: SpacingRule::VertexDensity }
    }
}

impl ResampleConfig {
    pub fn new(step: f64) -> Result<Self> {
        let cfg = Self { step, ..Self::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step >= 1.0) || !self.step.is_finite() {
            return Err(ResampleError::InvalidConfig(format!("step must be >= 1, got {}", self.step)));
        }
        Ok(())
    }
}

/// Regular grid in the principal plane, centered on the projected bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub spacing: f64,
    pub center: [f64; 2],
    pub half_counts: [usize; 2],
}

impl Grid {
    pub fn dims(&self) -> [usize; 2] {
        [2 * self.half_counts[0] + 1, 2 * self.half_counts[1] + 1]
    }

    pub fn node_xy(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.center[0] + (i as f64 - self.half_counts[0] as f64) * self.spacing,
            self.center[1] + (j as f64 - self.half_counts[1] as f64) * self.spacing,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct ResampledMesh {
    pub mesh: TriMesh,
    pub frame: PrincipalFrame,
    pub grid: Grid,
    /// Per grid node (row-major over `j` then `i`): inside the projected data support.
    pub coverage: Vec<bool>,
    /// Grid node `(i, j)` of every resampled vertex.
    pub vertex_nodes: Vec<[usize; 2]>,
    /// Nearest original vertex (3D Euclidean, ties to the lowest index).
    pub correspondence: Vec<usize>,
}

impl ResampledMesh {
    pub fn covered_count(&self) -> usize {
        self.coverage.iter().filter(|&&c| c).count()
    }
}

fn grid_spacing(mesh: &TriMesh, frame: &PrincipalFrame, cfg: &ResampleConfig) -> f64 {
    match cfg.spacing {
        SpacingRule::EdgeLength => cfg.step.sqrt() * mesh_metrics(mesh).mean_edge_length,
        SpacingRule::VertexDensity => {
            let local: Vec<Vector3<f64>> = mesh.vertices.iter().map(|p| frame.to_local(p)).collect();
            let area: f64 = mesh
                .facets
                .iter()
                .map(|f| 0.5 * cross2(&local[f[0]], &local[f[1]], &local[f[2]]).abs())
                .sum();
            (cfg.step * area / mesh.vertices.len() as f64).sqrt()
        }
    }
}

fn cross2(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Resamples the mesh's depth function over a regular grid.
///
/// Depth is interpolated linearly inside each projected original triangle;
/// where several projected triangles cover a node the one closest to the
/// viewer (largest depth along `e3`) wins. Nodes outside every projected
/// triangle stay uncovered. Covered nodes are triangulated per grid cell
/// along a fixed diagonal, which is the Delaunay triangulation of the lattice
/// with a consistent tie-break for its cocircular quadruples.
pub fn resample(mesh: &TexturedMesh, frame: &PrincipalFrame, cfg: &ResampleConfig) -> Result<ResampledMesh> {
    cfg.validate()?;
    let geom = mesh.geometry();
    let h = grid_spacing(geom, frame, cfg);
    if !(h > 0.0) || !h.is_finite() {
        return Err(ResampleError::ResamplingFailed("non-positive grid spacing".into()));
    }

    let local: Vec<Vector3<f64>> = geom.vertices.iter().map(|p| frame.to_local(p)).collect();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &local {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let grid = Grid {
        spacing: h,
        center: [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])],
        half_counts: [
            (0.5 * (hi[0] - lo[0]) / h).floor() as usize,
            (0.5 * (hi[1] - lo[1]) / h).floor() as usize,
        ],
    };
    let [nx, ny] = grid.dims();

    let mut depth = vec![f64::NEG_INFINITY; nx * ny];
    for f in &geom.facets {
        let (a, b, c) = (local[f[0]], local[f[1]], local[f[2]]);
        let area2 = cross2(&a, &b, &c);
        if area2.abs() <= 1e-14 * h * h {
            continue;
        }
        let to_index = |v: f64, axis: usize| (v - grid.center[axis]) / h + grid.half_counts[axis] as f64;
        let i0 = to_index(a.x.min(b.x).min(c.x), 0).ceil().max(0.0) as usize;
        let i1 = to_index(a.x.max(b.x).max(c.x), 0).floor().min((nx - 1) as f64);
        let j0 = to_index(a.y.min(b.y).min(c.y), 1).ceil().max(0.0) as usize;
        let j1 = to_index(a.y.max(b.y).max(c.y), 1).floor().min((ny - 1) as f64);
        if i1 < 0.0 || j1 < 0.0 {
            continue;
        }
        let (i1, j1) = (i1 as usize, j1 as usize);
        for j in j0..=j1 {
            for i in i0..=i1 {
                let [x, y] = grid.node_xy(i, j);
                let q = Vector3::new(x, y, 0.0);
                let wa = cross2(&b, &c, &q) / area2;
                let wb = cross2(&c, &a, &q) / area2;
                let wc = 1.0 - wa - wb;
                const TOL: f64 = -1e-12;
                if wa >= TOL && wb >= TOL && wc >= TOL {
                    let z = wa * a.z + wb * b.z + wc * c.z;
                    let slot = &mut depth[j * nx + i];
                    if z > *slot {
                        *slot = z;
                    }
                }
            }
        }
    }
    let coverage: Vec<bool> = depth.iter().map(|z| z.is_finite()).collect();
    if coverage.iter().filter(|&&c| c).count() < 3 {
        return Err(ResampleError::ResamplingFailed("fewer than 3 covered grid nodes".into()));
    }

    // Triangulate covered cells; vertices are the covered nodes used by a facet.
    let covered = |i: usize, j: usize| coverage[j * nx + i];
    let mut node_facets: Vec<[(usize, usize); 3]> = Vec::new();
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            let a = (i, j);
            let b = (i + 1, j);
            let c = (i + 1, j + 1);
            let d = (i, j + 1);
            let flags = [covered(a.0, a.1), covered(b.0, b.1), covered(c.0, c.1), covered(d.0, d.1)];
            match flags {
                [true, true, true, true] => {
                    node_facets.push([a, b, c]);
                    node_facets.push([a, c, d]);
                }
                [false, true, true, true] => node_facets.push([b, c, d]),
                [true, false, true, true] => node_facets.push([a, c, d]),
                [true, true, false, true] => node_facets.push([a, b, d]),
                [true, true, true, false] => node_facets.push([a, b, c]),
                _ => {}
            }
        }
    }
    if node_facets.is_empty() {
        return Err(ResampleError::ResamplingFailed("no grid cell has three covered corners".into()));
    }

    let mut node_vertex = vec![usize::MAX; nx * ny];
    for tri in &node_facets {
        for &(i, j) in tri {
            node_vertex[j * nx + i] = 0;
        }
    }
    let mut vertices = Vec::new();
    let mut vertex_nodes = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let slot = j * nx + i;
            if node_vertex[slot] == 0 {
                node_vertex[slot] = vertices.len();
                let [x, y] = grid.node_xy(i, j);
                vertices.push(frame.to_world(&Vector3::new(x, y, depth[slot])));
                vertex_nodes.push([i, j]);
            }
        }
    }
    let facets = node_facets
        .iter()
        .map(|tri| tri.map(|(i, j)| node_vertex[j * nx + i]))
        .collect();
    let mesh_out = TriMesh::new(vertices, facets);

    let index = NearestIndex::new(&local, h);
    let correspondence = par::map_range(mesh_out.vertices.len(), |v| {
        index.nearest(&geom.vertices, &mesh_out.vertices[v], &frame.to_local(&mesh_out.vertices[v]))
    });

    Ok(ResampledMesh {
        mesh: mesh_out,
        frame: *frame,
        grid,
        coverage,
        vertex_nodes,
        correspondence,
    })
}

/// Bucket grid over the projected original vertices for nearest-neighbor queries.
struct NearestIndex {
    cell: f64,
    lo: [f64; 2],
    dims: [usize; 2],
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl NearestIndex {
    fn new(local: &[Vector3<f64>], cell: f64) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in local {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let dims = [
            ((hi[0] - lo[0]) / cell).floor() as usize + 1,
            ((hi[1] - lo[1]) / cell).floor() as usize + 1,
        ];
        let bucket = |p: &Vector3<f64>| {
            let i = (((p.x - lo[0]) / cell).floor().max(0.0) as usize).min(dims[0] - 1);
            let j = (((p.y - lo[1]) / cell).floor().max(0.0) as usize).min(dims[1] - 1);
            j * dims[0] + i
        };
        let mut counts = vec![0usize; dims[0] * dims[1] + 1];
        for p in local {
            counts[bucket(p) + 1] += 1;
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0usize; local.len()];
        for (idx, p) in local.iter().enumerate() {
            let b = bucket(p);
            items[fill[b]] = idx;
            fill[b] += 1;
        }
        Self { cell, lo, dims, starts: counts, items }
    }

    fn nearest(&self, world: &[Point3<f64>], q: &Point3<f64>, q_local: &Vector3<f64>) -> usize {
        let ci = ((q_local.x - self.lo[0]) / self.cell).floor() as i64;
        let cj = ((q_local.y - self.lo[1]) / self.cell).floor() as i64;
        let mut best = (f64::INFINITY, usize::MAX);
        let max_ring = self.dims[0].max(self.dims[1]) as i64 + ci.abs().max(cj.abs()) + 1;
        for r in 0..=max_ring {
            for j in (cj - r)..=(cj + r) {
                for i in (ci - r)..=(ci + r) {
                    if (i - ci).abs() != r && (j - cj).abs() != r {
                        continue;
                    }
                    if i < 0 || j < 0 || i >= self.dims[0] as i64 || j >= self.dims[1] as i64 {
                        continue;
                    }
                    let b = j as usize * self.dims[0] + i as usize;
                    for &idx in &self.items[self.starts[b]..self.starts[b + 1]] {
                        let d2 = (world[idx] - q).norm_squared();
                        if d2 < best.0 || (d2 == best.0 && idx < best.1) {
                            best = (d2, idx);
                        }
                    }
                }
            }
            // Every point in ring r+1 is at least r cells away in the plane.
            let bound = r as f64 * self.cell;
            if best.1 != usize::MAX && best.0 < bound * bound * (1.0 - 1e-9) {
                break;
            }
        }
        best.1
    }
}

/// Pixel-space texture mapping for a set of facets.
///
/// Pixel coordinates are continuous `(row, col)` with pixel `(r, c)` covering
/// `[r, r+1) x [c, c+1)`; uv `(u, v)` maps to `row = (1 - v) * height`,
/// `col = u * width`.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureMap {
    pub width: u32,
    pub height: u32,
    pub facets: Vec<[usize; 3]>,
    pub facet_pixels: Vec<[[f64; 2]; 3]>,
    /// One pixel coordinate per vertex, when the mapping is per-vertex.
    pub vertex_pixels: Option<Vec<[f64; 2]>>,
}

pub fn uv_to_pixel(uv: [f64; 2], width: u32, height: u32) -> [f64; 2] {
    [(1.0 - uv[1]) * height as f64, uv[0] * width as f64]
}

impl TextureMap {
    /// The mesh's own per-corner mapping (no resampling).
    pub fn from_mesh(mesh: &TexturedMesh) -> Self {
        let (w, h) = mesh.texture().dimensions();
        Self {
            width: w,
            height: h,
            facets: mesh.facets().to_vec(),
            facet_pixels: mesh.corner_uv().iter().map(|c| c.map(|uv| uv_to_pixel(uv, w, h))).collect(),
            vertex_pixels: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.facets.is_empty()
    }
}

/// Carries the original texture mapping over to the resampled mesh through
/// the nearest-original-vertex correspondence.
pub fn rebuild_texture_map(resampled: &ResampledMesh, original: &TexturedMesh) -> Result<TextureMap> {
    let (w, h) = original.texture().dimensions();
    let vertex_uv = original.vertex_uv();
    let mut vertex_pixels = Vec::with_capacity(resampled.correspondence.len());
    for (v, &orig) in resampled.correspondence.iter().enumerate() {
        let uv = vertex_uv
            .get(orig)
            .copied()
            .flatten()
            .ok_or_else(|| ResampleError::Internal(format!("original vertex {orig} (for {v}) has no uv")))?;
        vertex_pixels.push(uv_to_pixel(uv, w, h));
    }
    let facet_pixels = resampled
        .mesh
        .facets
        .iter()
        .map(|f| f.map(|v| vertex_pixels[v]))
        .collect();
    Ok(TextureMap {
        width: w,
        height: h,
        facets: resampled.mesh.facets.clone(),
        facet_pixels,
        vertex_pixels: Some(vertex_pixels),
    })
}

/// Per-vertex uv of the resampled mesh (for OBJ dumps).
pub fn resampled_vertex_uv(resampled: &ResampledMesh, original: &TexturedMesh) -> Vec<[f64; 2]> {
    let uv = original.vertex_uv();
    resampled
        .correspondence
        .iter()
        .map(|&o| uv[o].unwrap_or([0.0, 0.0]))
        .collect()
}
