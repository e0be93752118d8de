//! Textured triangle meshes: Wavefront OBJ loading, validation and basic metrics.
//!
//! Only the subset of OBJ needed for geometry plus texture coordinates is
//! understood: `v`, `vt` and `f` records with `v/vt` or `v/vt/vn` corners.
//! Normals, materials, groups and everything else are skipped. Polygons with
//! more than three corners are fan-triangulated.

use std::collections::HashSet;
use std::path::Path;

use image::{DynamicImage, GrayImage};
use nalgebra::{Point3, Vector3};
use thiserror::Error;

#[derive(Error, Debug)]
pub enum MeshError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("mesh lacks texture mapping")]
    MissingTextureMapping,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid mesh: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, MeshError>;

/// Plain triangle geometry: positions and index triples.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Point3<f64>>,
    pub facets: Vec<[usize; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Point3<f64>>, facets: Vec<[usize; 3]>) -> Self {
        Self { vertices, facets }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn facet_count(&self) -> usize {
        self.facets.len()
    }

    /// Unnormalized facet normal; its length is twice the facet area.
    pub fn facet_cross(&self, f: usize) -> Vector3<f64> {
        let [a, b, c] = self.facets[f];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        (pb - pa).cross(&(pc - pa))
    }

    pub fn facet_area(&self, f: usize) -> f64 {
        0.5 * self.facet_cross(f).norm()
    }

    /// Unique undirected edges as `(min, max)` pairs, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut set = HashSet::with_capacity(self.facets.len() * 2);
        for f in &self.facets {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                set.insert((a.min(b), a.max(b)));
            }
        }
        let mut edges: Vec<_> = set.into_iter().collect();
        edges.sort_unstable();
        edges
    }

    /// Area-weighted vertex normals (unit length; zero for isolated vertices).
    pub fn vertex_normals(&self) -> Vec<Vector3<f64>> {
        let mut normals = vec![Vector3::zeros(); self.vertices.len()];
        for (fi, f) in self.facets.iter().enumerate() {
            let n = self.facet_cross(fi);
            for &v in f {
                normals[v] += n;
            }
        }
        for n in &mut normals {
            let len = n.norm();
            if len > 0.0 {
                *n /= len;
            }
        }
        normals
    }

    /// Sum of the unnormalized facet normals (twice the area-weighted mean normal times total area).
    pub fn total_normal(&self) -> Vector3<f64> {
        (0..self.facets.len()).map(|f| self.facet_cross(f)).sum()
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::build(self)
    }

    /// Applies `f` to every vertex position.
    pub fn map_vertices(&self, f: impl Fn(&Point3<f64>) -> Point3<f64>) -> Self {
        Self {
            vertices: self.vertices.iter().map(f).collect(),
            facets: self.facets.clone(),
        }
    }
}

/// Compressed vertex adjacency with edge lengths.
#[derive(Debug, Clone)]
pub struct Adjacency {
    offsets: Vec<usize>,
    neighbors: Vec<(usize, f64)>,
}

impl Adjacency {
    pub fn build(mesh: &TriMesh) -> Self {
        let n = mesh.vertices.len();
        let edges = mesh.edges();
        let mut degree = vec![0usize; n];
        for &(a, b) in &edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbors = vec![(0usize, 0.0f64); offsets[n]];
        for &(a, b) in &edges {
            let len = (mesh.vertices[a] - mesh.vertices[b]).norm();
            neighbors[fill[a]] = (b, len);
            fill[a] += 1;
            neighbors[fill[b]] = (a, len);
            fill[b] += 1;
        }
        Self { offsets, neighbors }
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshMetrics {
    pub mean_edge_length: f64,
    pub vertex_count: usize,
    pub facet_count: usize,
}

/// Mean length over the set of unique undirected edges.
pub fn mesh_metrics(mesh: &TriMesh) -> MeshMetrics {
    let edges = mesh.edges();
    let total: f64 = edges
        .iter()
        .map(|&(a, b)| (mesh.vertices[a] - mesh.vertices[b]).norm())
        .sum();
    let mean_edge_length = if edges.is_empty() { 0.0 } else { total / edges.len() as f64 };
    MeshMetrics {
        mean_edge_length,
        vertex_count: mesh.vertex_count(),
        facet_count: mesh.facet_count(),
    }
}

/// A validated triangle mesh with per-corner texture coordinates and a gray texture.
///
/// Immutable once built. Every vertex is referenced by at least one facet, so
/// every vertex has a texture coordinate.
#[derive(Debug, Clone)]
pub struct TexturedMesh {
    geometry: TriMesh,
    corner_uv: Vec<[[f64; 2]; 3]>,
    texture: GrayImage,
}

/// Counts reported while validating a mesh.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub degenerate_dropped: usize,
    pub unreferenced_dropped: usize,
}

impl TexturedMesh {
    /// Validates and builds a mesh. Zero-area facets (including facets that
    /// repeat a vertex index) are dropped and counted; unreferenced vertices
    /// are removed; uv values outside [0,1] are wrapped in repeat mode.
    pub fn new(
        vertices: Vec<Point3<f64>>,
        facets: Vec<[usize; 3]>,
        corner_uv: Vec<[[f64; 2]; 3]>,
        texture: GrayImage,
    ) -> Result<(Self, LoadReport)> {
        if facets.len() != corner_uv.len() {
            return Err(MeshError::Invalid(format!(
                "{} facets but {} corner uv triples",
                facets.len(),
                corner_uv.len()
            )));
        }
        if texture.width() == 0 || texture.height() == 0 {
            return Err(MeshError::Invalid("empty texture image".into()));
        }
        let n = vertices.len();
        if let Some(p) = vertices.iter().find(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(MeshError::Invalid(format!("non-finite vertex {p:?}")));
        }
        for (i, f) in facets.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&v| v >= n) {
                return Err(MeshError::Invalid(format!(
                    "facet {i} references vertex {bad} but the mesh has {n} vertices"
                )));
            }
        }

        let mut report = LoadReport::default();
        let mut kept_facets = Vec::with_capacity(facets.len());
        let mut kept_uv = Vec::with_capacity(facets.len());
        for (f, uv) in facets.into_iter().zip(corner_uv) {
            if is_degenerate(&vertices, f) {
                report.degenerate_dropped += 1;
                continue;
            }
            let mut wrapped = uv;
            for corner in &mut wrapped {
                for c in corner.iter_mut() {
                    if !c.is_finite() {
                        return Err(MeshError::Invalid("non-finite texture coordinate".into()));
                    }
                    *c = wrap_unit(*c);
                }
            }
            kept_facets.push(f);
            kept_uv.push(wrapped);
        }
        if report.degenerate_dropped > 0 {
            log::warn!("dropped {} zero-area facets", report.degenerate_dropped);
        }
        if kept_facets.is_empty() {
            return Err(MeshError::Invalid("no non-degenerate facets".into()));
        }

        // Compact away unreferenced vertices.
        let mut remap = vec![usize::MAX; n];
        let mut compact = Vec::with_capacity(n);
        for f in &mut kept_facets {
            for v in f.iter_mut() {
                if remap[*v] == usize::MAX {
                    remap[*v] = compact.len();
                    compact.push(*v);
                }
            }
        }
        // Keep the original relative vertex order.
        compact.sort_unstable();
        for (new, &old) in compact.iter().enumerate() {
            remap[old] = new;
        }
        for f in &mut kept_facets {
            for v in f.iter_mut() {
                *v = remap[*v];
            }
        }
        report.unreferenced_dropped = n - compact.len();
        let vertices = compact.iter().map(|&i| vertices[i]).collect();

        Ok((
            Self {
                geometry: TriMesh::new(vertices, kept_facets),
                corner_uv: kept_uv,
                texture,
            },
            report,
        ))
    }

    pub fn geometry(&self) -> &TriMesh {
        &self.geometry
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.geometry.vertices
    }

    pub fn facets(&self) -> &[[usize; 3]] {
        &self.geometry.facets
    }

    pub fn corner_uv(&self) -> &[[[f64; 2]; 3]] {
        &self.corner_uv
    }

    pub fn texture(&self) -> &GrayImage {
        &self.texture
    }

    /// One texture coordinate per vertex: the one used by the lowest-index
    /// facet that references the vertex.
    pub fn vertex_uv(&self) -> Vec<Option<[f64; 2]>> {
        let mut uv = vec![None; self.geometry.vertices.len()];
        for (f, corners) in self.geometry.facets.iter().zip(&self.corner_uv) {
            for k in 0..3 {
                uv[f[k]].get_or_insert(corners[k]);
            }
        }
        uv
    }

    /// Rigidly (or otherwise) moves the geometry, keeping texture and uv.
    pub fn with_vertices(&self, vertices: Vec<Point3<f64>>) -> Result<Self> {
        if vertices.len() != self.geometry.vertices.len() {
            return Err(MeshError::Invalid("vertex count mismatch".into()));
        }
        let (mesh, _) = Self::new(
            vertices,
            self.geometry.facets.clone(),
            self.corner_uv.clone(),
            self.texture.clone(),
        )?;
        Ok(mesh)
    }
}

fn is_degenerate(vertices: &[Point3<f64>], f: [usize; 3]) -> bool {
    if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
        return true;
    }
    let (a, b, c) = (vertices[f[0]], vertices[f[1]], vertices[f[2]]);
    let cross = (b - a).cross(&(c - a)).norm();
    let longest = (b - a).norm_squared().max((c - a).norm_squared()).max((c - b).norm_squared());
    cross <= 1e-12 * longest
}

/// Repeat-mode wrap; values already in [0,1] (including 1.0) are untouched.
fn wrap_unit(x: f64) -> f64 {
    if (0.0..=1.0).contains(&x) {
        x
    } else {
        x.rem_euclid(1.0)
    }
}

/// Integer-rounded Rec.601 luma.
pub fn to_gray(image: &DynamicImage) -> GrayImage {
    match image {
        DynamicImage::ImageLuma8(g) => g.clone(),
        other => {
            let rgb = other.to_rgb8();
            GrayImage::from_fn(rgb.width(), rgb.height(), |x, y| {
                let p = rgb.get_pixel(x, y).0;
                let y = (299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32 + 500) / 1000;
                image::Luma([y as u8])
            })
        }
    }
}

/// Raw contents of an OBJ file restricted to what we consume.
#[derive(Debug, Clone, Default)]
pub struct ObjData {
    pub positions: Vec<Point3<f64>>,
    pub texcoords: Vec<[f64; 2]>,
    pub facets: Vec<[usize; 3]>,
    pub facet_texcoords: Vec<[usize; 3]>,
}

fn parse_error(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse { line, message: message.into() }
}

fn parse_floats<const N: usize>(tokens: &[&str], line: usize, what: &str) -> Result<[f64; N]> {
    if tokens.len() < N {
        return Err(parse_error(line, format!("{what} record needs {N} numbers")));
    }
    let mut out = [0.0; N];
    for (o, t) in out.iter_mut().zip(tokens) {
        *o = t
            .parse()
            .map_err(|_| parse_error(line, format!("bad number '{t}' in {what} record")))?;
    }
    Ok(out)
}

/// Resolves a 1-based (or negative, relative) OBJ index.
fn resolve_index(token: &str, count: usize, line: usize, what: &str) -> Result<usize> {
    let raw: i64 = token
        .parse()
        .map_err(|_| parse_error(line, format!("bad {what} index '{token}'")))?;
    let idx = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        count as i64 + raw
    } else {
        return Err(parse_error(line, format!("{what} index 0 is invalid")));
    };
    if idx < 0 || idx as usize >= count {
        return Err(parse_error(
            line,
            format!("{what} index {raw} out of range ({count} defined)"),
        ));
    }
    Ok(idx as usize)
}

/// Parses the v/vt/f subset of Wavefront OBJ.
pub fn parse_obj(text: &str) -> Result<ObjData> {
    let mut obj = ObjData::default();
    let mut saw_face = false;
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        let Some(tag) = parts.next() else { continue };
        let tokens: Vec<&str> = parts.collect();
        match tag {
            "v" => {
                let [x, y, z] = parse_floats::<3>(&tokens, line_no, "v")?;
                obj.positions.push(Point3::new(x, y, z));
            }
            "vt" => {
                let [u, v] = parse_floats::<2>(&tokens, line_no, "vt")?;
                obj.texcoords.push([u, v]);
            }
            "f" => {
                saw_face = true;
                if tokens.len() < 3 {
                    return Err(parse_error(line_no, "facet needs at least 3 corners"));
                }
                let mut corners = Vec::with_capacity(tokens.len());
                for t in &tokens {
                    let mut fields = t.split('/');
                    let v = fields.next().unwrap_or("");
                    let vt = fields.next().unwrap_or("");
                    if vt.is_empty() {
                        return Err(MeshError::MissingTextureMapping);
                    }
                    corners.push((
                        resolve_index(v, obj.positions.len(), line_no, "vertex")?,
                        resolve_index(vt, obj.texcoords.len(), line_no, "texture")?,
                    ));
                }
                for k in 1..corners.len() - 1 {
                    obj.facets.push([corners[0].0, corners[k].0, corners[k + 1].0]);
                    obj.facet_texcoords.push([corners[0].1, corners[k].1, corners[k + 1].1]);
                }
            }
            _ => {}
        }
    }
    if obj.texcoords.is_empty() {
        return Err(MeshError::MissingTextureMapping);
    }
    if !saw_face {
        return Err(MeshError::Invalid("no facets".into()));
    }
    Ok(obj)
}

impl ObjData {
    pub fn into_textured(self, texture: GrayImage) -> Result<(TexturedMesh, LoadReport)> {
        let corner_uv = self
            .facet_texcoords
            .iter()
            .map(|t| [self.texcoords[t[0]], self.texcoords[t[1]], self.texcoords[t[2]]])
            .collect();
        TexturedMesh::new(self.positions, self.facets, corner_uv, texture)
    }
}

/// Loads an OBJ mesh and its texture image (RGB converted to gray).
pub fn load_textured_mesh(
    mesh_path: impl AsRef<Path>,
    texture_path: impl AsRef<Path>,
) -> Result<(TexturedMesh, LoadReport)> {
    let text = std::fs::read_to_string(mesh_path)?;
    let obj = parse_obj(&text)?;
    let texture = to_gray(&image::open(texture_path)?);
    obj.into_textured(texture)
}

/// Writes geometry (and optionally per-vertex uv) as OBJ text.
pub fn write_obj(mesh: &TriMesh, vertex_uv: Option<&[[f64; 2]]>) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    for p in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
    }
    match vertex_uv {
        Some(uv) => {
            for t in uv {
                let _ = writeln!(out, "vt {} {}", t[0], t[1]);
            }
            for f in &mesh.facets {
                let _ = writeln!(
                    out,
                    "f {0}/{0} {1}/{1} {2}/{2}",
                    f[0] + 1,
                    f[1] + 1,
                    f[2] + 1
                );
            }
        }
        None => {
            for f in &mesh.facets {
                let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
            }
        }
    }
    out
}

/// Writes a textured mesh as OBJ with per-corner texture coordinates.
pub fn write_textured_obj(mesh: &TexturedMesh) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    for p in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
    }
    for corners in mesh.corner_uv() {
        for t in corners {
            let _ = writeln!(out, "vt {} {}", t[0], t[1]);
        }
    }
    for (i, f) in mesh.facets().iter().enumerate() {
        let t = 3 * i + 1;
        let _ = writeln!(
            out,
            "f {}/{} {}/{} {}/{}",
            f[0] + 1,
            t,
            f[1] + 1,
            t + 1,
            f[2] + 1,
            t + 2
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gray(w: u32, h: u32, v: u8) -> GrayImage {
        GrayImage::from_pixel(w, h, image::Luma([v]))
    }

    const TRIANGLE: &str = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 3/3\n";

    #[test]
    fn single_triangle() {
        let obj = parse_obj(TRIANGLE).unwrap();
        let (mesh, report) = obj.into_textured(gray(4, 4, 9)).unwrap();
        assert_eq!(mesh.vertices().len(), 3);
        assert_eq!(mesh.facets().len(), 1);
        assert_eq!(report, LoadReport::default());
    }

    #[test]
    fn out_of_range_index_names_line() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 5/3\n";
        match parse_obj(text) {
            Err(MeshError::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_vt_is_reported() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
        assert!(matches!(parse_obj(text), Err(MeshError::MissingTextureMapping)));
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1//1 2//1 3//1\n";
        assert!(matches!(parse_obj(text), Err(MeshError::MissingTextureMapping)));
    }

    #[test]
    fn vn_corners_and_quads() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\nvn 0 0 1\n\
                    g grp\nusemtl m\nf 1/1/1 2/2/1 3/3/1 4/4/1\n";
        let obj = parse_obj(text).unwrap();
        assert_eq!(obj.facets, vec![[0, 1, 2], [0, 2, 3]]);
        assert_eq!(obj.facet_texcoords, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn negative_indices_are_relative() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf -3/-3 -2/-2 -1/-1\n";
        assert_eq!(parse_obj(text).unwrap().facets, vec![[0, 1, 2]]);
    }

    #[test]
    fn zero_area_facet_dropped_among_hundred() {
        // 10x5 grid of quads -> 100 triangles; collapse one triangle by
        // duplicating a vertex position.
        let mut text = String::new();
        let (nx, ny) = (11, 6);
        for j in 0..ny {
            for i in 0..nx {
                text += &format!("v {} {} 0\nvt {} {}\n", i, j, i as f64 / 10.0, j as f64 / 5.0);
            }
        }
        // extra vertex sitting exactly on vertex 1
        text += "v 0 0 0\nvt 0 0\n";
        let dup = nx * ny + 1;
        let mut faces = Vec::new();
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let a = j * nx + i + 1;
                let (b, c, d) = (a + 1, a + nx + 1, a + nx);
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            }
        }
        assert_eq!(faces.len(), 100);
        // Facet with two coincident positions and a third one.
        faces[0] = [1, dup, 2];
        for f in &faces {
            text += &format!("f {0}/{0} {1}/{1} {2}/{2}\n", f[0], f[1], f[2]);
        }
        let (mesh, report) = parse_obj(&text).unwrap().into_textured(gray(8, 8, 0)).unwrap();
        assert_eq!(mesh.facets().len(), 99);
        assert_eq!(report.degenerate_dropped, 1);
        // the duplicate vertex is no longer referenced
        assert_eq!(report.unreferenced_dropped, 1);
    }

    #[test]
    fn uv_wrapping() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 1.25 -0.25\nvt 1 0\nvt 0 2\nf 1/1 2/2 3/3\n";
        let (mesh, _) = parse_obj(text).unwrap().into_textured(gray(2, 2, 0)).unwrap();
        let uv = mesh.corner_uv()[0];
        assert_relative_eq!(uv[0][0], 0.25);
        assert_relative_eq!(uv[0][1], 0.75);
        assert_eq!(uv[1], [1.0, 0.0]);
        assert_eq!(uv[2], [0.0, 0.0]);
    }

    #[test]
    fn metrics_unit_right_triangle() {
        let obj = parse_obj(TRIANGLE).unwrap();
        let m = mesh_metrics(&TriMesh::new(obj.positions, obj.facets));
        assert_relative_eq!(m.mean_edge_length, (2.0 + 2f64.sqrt()) / 3.0, epsilon = 1e-15);
        assert_relative_eq!(m.mean_edge_length, 1.1381, epsilon = 1e-4);
    }

    #[test]
    fn shared_edges_counted_once() {
        // Unit square split along the diagonal: edges 1,1,1,1,√2.
        let mesh = TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        );
        assert_eq!(mesh.edges().len(), 5);
        assert_relative_eq!(mesh_metrics(&mesh).mean_edge_length, (4.0 + 2f64.sqrt()) / 5.0);
    }

    #[test]
    fn rec601_gray_conversion() {
        let rgb = image::RgbImage::from_fn(3, 1, |x, _| match x {
            0 => image::Rgb([255, 0, 0]),
            1 => image::Rgb([0, 255, 0]),
            _ => image::Rgb([10, 200, 30]),
        });
        let g = to_gray(&DynamicImage::ImageRgb8(rgb));
        // 0.299*255 = 76.245; 0.587*255 = 149.685; 2.99+117.4+3.42 = 123.81
        assert_eq!(g.as_raw(), &vec![76, 150, 124]);
        // idempotent on gray input
        let again = to_gray(&DynamicImage::ImageLuma8(g.clone()));
        assert_eq!(again, g);
    }

    #[test]
    fn vertex_uv_prefers_lowest_facet() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nvt 0.5 0.5\n\
                    f 1/1 2/2 3/3\nf 2/4 4/2 3/3\n";
        let (mesh, _) = parse_obj(text).unwrap().into_textured(gray(2, 2, 0)).unwrap();
        let uv = mesh.vertex_uv();
        assert_eq!(uv[1], Some([1.0, 0.0]));
        assert_eq!(uv[3], Some([1.0, 0.0]));
    }

    #[test]
    fn obj_roundtrip_is_structurally_identical() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0.5\nvt 0 0\nvt 1 0\nvt 0 1\nvt 1 1\n\
                    f 1/1 2/2 3/3\nf 2/2 4/4 3/3\n";
        let (a, _) = parse_obj(text).unwrap().into_textured(gray(2, 2, 0)).unwrap();
        let written = write_textured_obj(&a);
        let (b, _) = parse_obj(&written).unwrap().into_textured(gray(2, 2, 0)).unwrap();
        assert_eq!(a.geometry(), b.geometry());
        assert_eq!(a.corner_uv(), b.corner_uv());
    }
}
