//! Analytic and synthetic meshes: planes, height fields, spheres, cylinders,
//! a face-like relief, and bump/dent samples for end-to-end runs.

use std::collections::HashMap;
use std::f64::consts::PI;

use image::{GrayImage, Luma};
use nalgebra::{Point3, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::{TexturedMesh, TriMesh};

/// Triangulated height field over an `nx` x `ny` lattice.
///
/// Vertex `(i, j)` sits at `(i*spacing, j*spacing)` plus an optional jitter
/// (a fraction of `spacing`), lifted by `height`. Only vertices for which
/// `inside` holds are kept; cells are split along a fixed diagonal and
/// emitted counter-clockwise seen from +z. Texture coordinates normalize the
/// lattice extent to [0,1]^2.
pub struct HeightField<'a> {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub jitter: f64,
    pub seed: u64,
    pub height: &'a dyn Fn(f64, f64) -> f64,
    pub inside: &'a dyn Fn(f64, f64) -> bool,
    pub texture: &'a dyn Fn(f64, f64) -> u8,
    pub texture_size: u32,
}

impl HeightField<'_> {
    pub fn build(&self) -> TexturedMesh {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (w, h) = ((self.nx - 1) as f64 * self.spacing, (self.ny - 1) as f64 * self.spacing);
        let mut index = vec![usize::MAX; self.nx * self.ny];
        let mut vertices = Vec::new();
        let mut uvs = Vec::new();
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (jx, jy): (f64, f64) = if self.jitter > 0.0 {
                    (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                } else {
                    (0.0, 0.0)
                };
                let on_border = i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny;
                let (dx, dy) = if on_border { (0.0, 0.0) } else { (jx * self.jitter, jy * self.jitter) };
                let x = (i as f64 + dx) * self.spacing;
                let y = (j as f64 + dy) * self.spacing;
                if !(self.inside)(x, y) {
                    continue;
                }
                index[j * self.nx + i] = vertices.len();
                vertices.push(Point3::new(x, y, (self.height)(x, y)));
                uvs.push([x / w, y / h]);
            }
        }
        let mut facets = Vec::new();
        let mut corner_uv = Vec::new();
        let at = |i: usize, j: usize| index[j * self.nx + i];
        for j in 0..self.ny - 1 {
            for i in 0..self.nx - 1 {
                let (a, b, c, d) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
                for tri in [[a, b, c], [a, c, d]] {
                    if tri.iter().all(|&v| v != usize::MAX) {
                        facets.push(tri);
                        corner_uv.push(tri.map(|v| uvs[v]));
                    }
                }
            }
        }
        let size = self.texture_size;
        let texture = GrayImage::from_fn(size, size, |px, py| {
            let u = (px as f64 + 0.5) / size as f64;
            let v = 1.0 - (py as f64 + 0.5) / size as f64;
            Luma([(self.texture)(u, v)])
        });
        let (mesh, _) = TexturedMesh::new(vertices, facets, corner_uv, texture)
            .expect("synthetic height field is valid");
        mesh
    }
}

fn everywhere(_: f64, _: f64) -> bool {
    true
}

fn gradient_texture(u: f64, v: f64) -> u8 {
    (40.0 + 150.0 * u + 50.0 * v).round() as u8
}

/// Flat `nx` x `ny` grid at height `z`.
pub fn plane_grid(nx: usize, ny: usize, spacing: f64, z: f64) -> TexturedMesh {
    height_field(nx, ny, spacing, &move |_, _| z)
}

/// Regular lattice height field with a gradient texture.
pub fn height_field(nx: usize, ny: usize, spacing: f64, height: &dyn Fn(f64, f64) -> f64) -> TexturedMesh {
    HeightField {
        nx,
        ny,
        spacing,
        jitter: 0.0,
        seed: 0,
        height,
        inside: &everywhere,
        texture: &gradient_texture,
        texture_size: 128,
    }
    .build()
}

/// Lattice height field centered on the origin: `n` x `n` vertices spanning
/// `[-half, half]^2`.
pub fn centered_height_field(n: usize, half: f64, height: &dyn Fn(f64, f64) -> f64) -> TexturedMesh {
    let spacing = 2.0 * half / (n - 1) as f64;
    let shifted = move |x: f64, y: f64| height(x - half, y - half);
    let mesh = height_field(n, n, spacing, &shifted);
    let moved = mesh
        .vertices()
        .iter()
        .map(|p| Point3::new(p.x - half, p.y - half, p.z))
        .collect();
    mesh.with_vertices(moved).expect("translation keeps validity")
}

/// Icosphere: `subdivisions` rounds of 4-to-1 splitting projected onto the sphere.
/// Level 5 gives 10242 vertices.
pub fn icosphere(subdivisions: usize, radius: f64) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|v| Vector3::new(v[0], v[1], v[2]).normalize())
    .collect();
    let mut facets: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(facets.len() * 4);
        for f in &facets {
            let mut mid = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[k] = *midpoints.entry(key).or_insert_with(|| {
                    vertices.push((vertices[a] + vertices[b]).normalize());
                    vertices.len() - 1
                });
            }
            next.push([f[0], mid[0], mid[2]]);
            next.push([f[1], mid[1], mid[0]]);
            next.push([f[2], mid[2], mid[1]]);
            next.push([mid[0], mid[1], mid[2]]);
        }
        facets = next;
    }
    TriMesh::new(vertices.iter().map(|v| Point3::from(v * radius)).collect(), facets)
}

/// Open cylinder around the z axis with outward-facing winding.
pub fn cylinder(radius: f64, length: f64, around: usize, along: usize) -> TriMesh {
    let mut vertices = Vec::with_capacity(around * (along + 1));
    for j in 0..=along {
        let z = length * j as f64 / along as f64 - 0.5 * length;
        for i in 0..around {
            // offset alternate rings to avoid a purely axis-aligned lattice
            let phase = if j % 2 == 0 { 0.0 } else { 0.5 };
            let a = 2.0 * PI * (i as f64 + phase) / around as f64;
            vertices.push(Point3::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let mut facets = Vec::new();
    for j in 0..along {
        for i in 0..around {
            let a = j * around + i;
            let b = j * around + (i + 1) % around;
            let c = (j + 1) * around + (i + 1) % around;
            let d = (j + 1) * around + i;
            if j % 2 == 0 {
                facets.push([a, b, d]);
                facets.push([b, c, d]);
            } else {
                facets.push([a, b, c]);
                facets.push([a, c, d]);
            }
        }
    }
    TriMesh::new(vertices, facets)
}

/// A random proper rotation and translation, deterministic in `seed`.
pub fn random_rigid(seed: u64) -> (Rotation3<f64>, Vector3<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axis = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    let angle = rng.random_range(0.2..3.0);
    let rot = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
    let shift = Vector3::new(
        rng.random_range(-5.0..5.0),
        rng.random_range(-5.0..5.0),
        rng.random_range(-5.0..5.0),
    );
    (rot, shift)
}

/// Face-like relief on an elliptical domain of an `n` x `n` jittered lattice:
/// a dome with a nose ridge, two eye sockets and a mouth groove, textured with
/// darker eyes and mouth.
pub fn face_like(n: usize, seed: u64) -> TexturedMesh {
    let size = 160.0;
    let spacing = size / (n - 1) as f64;
    let (cx, cy) = (size / 2.0, size / 2.0);
    let inside = move |x: f64, y: f64| {
        let (u, v) = ((x - cx) / (0.5 * size), (y - cy) / (0.5 * size));
        u * u / 0.78 + v * v <= 1.0
    };
    let height = move |x: f64, y: f64| face_height((x - cx) / (0.5 * size), (y - cy) / (0.5 * size)) * 0.5 * size;
    let texture = |u: f64, v: f64| face_texture(2.0 * u - 1.0, 2.0 * v - 1.0);
    HeightField {
        nx: n,
        ny: n,
        spacing,
        jitter: 0.2,
        seed,
        height: &height,
        inside: &inside,
        texture: &texture,
        texture_size: 256,
    }
    .build()
}

fn gauss(x: f64, y: f64, sx: f64, sy: f64) -> f64 {
    (-(x * x) / (2.0 * sx * sx) - (y * y) / (2.0 * sy * sy)).exp()
}

// Height in units of the half-size, for normalized coordinates in [-1, 1].
fn face_height(u: f64, v: f64) -> f64 {
    let dome = 0.45 * (1.0 - 0.6 * u * u - 0.4 * v * v).max(0.0).sqrt();
    let nose = 0.22 * gauss(u, v + 0.05, 0.09, 0.22);
    let eyes = -0.06 * (gauss(u - 0.32, v - 0.25, 0.12, 0.08) + gauss(u + 0.32, v - 0.25, 0.12, 0.08));
    let mouth = -0.04 * gauss(u, v + 0.45, 0.25, 0.05);
    dome + nose + eyes + mouth
}

fn face_texture(u: f64, v: f64) -> u8 {
    let skin = 170.0 - 30.0 * (u * u + v * v);
    let eyes = 110.0 * (gauss(u - 0.32, v - 0.25, 0.08, 0.05) + gauss(u + 0.32, v - 0.25, 0.08, 0.05));
    let mouth = 70.0 * gauss(u, v + 0.45, 0.2, 0.04);
    (skin - eyes - mouth).clamp(0.0, 255.0).round() as u8
}

/// Shape class of a synthetic end-to-end sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relief {
    Bump,
    Dent,
}

/// A gently curved base surface carrying a single bump or dent, with mild
/// per-sample variation in amplitude, width, position and texture.
pub fn relief_sample(relief: Relief, n: usize, seed: u64) -> TexturedMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f00d);
    let amplitude: f64 = rng.random_range(0.18..0.26);
    let width: f64 = rng.random_range(0.16..0.22);
    let (ox, oy): (f64, f64) = (rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05));
    let shade: f64 = rng.random_range(-20.0..20.0);
    let sign = match relief {
        Relief::Bump => 1.0,
        Relief::Dent => -1.0,
    };
    let half = 1.0;
    let spacing = 2.0 * half / (n - 1) as f64;
    let height = move |x: f64, y: f64| {
        let (u, v) = (x - half, y - half);
        let base = -0.08 * (u * u + v * v);
        base + sign * amplitude * gauss(u - ox, v - oy, width, width)
    };
    let texture = move |u: f64, v: f64| {
        let (x, y) = (2.0 * u - 1.0, 2.0 * v - 1.0);
        (120.0 + shade + 40.0 * x - 25.0 * y).clamp(0.0, 255.0).round() as u8
    };
    HeightField {
        nx: n,
        ny: n,
        spacing,
        jitter: 0.15,
        seed,
        height: &height,
        inside: &everywhere,
        texture: &texture,
        texture_size: 128,
    }
    .build()
}
