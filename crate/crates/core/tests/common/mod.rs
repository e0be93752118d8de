// Independent reference implementations used as test oracles. None of these
// call into the library's own algorithms.
#![allow(dead_code)]

use std::collections::BTreeMap;

use fgai::mesh::TriMesh;
use image::GrayImage;
use nalgebra::{Matrix3, Point3, Vector3};

/// Floyd–Warshall over the edge graph.
pub fn all_pairs_shortest(mesh: &TriMesh) -> Vec<Vec<f64>> {
    let n = mesh.vertex_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for f in &mesh.facets {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let len = (mesh.vertices[a] - mesh.vertices[b]).norm();
            d[a][b] = d[a][b].min(len);
            d[b][a] = d[b][a].min(len);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Cyclic Jacobi eigenvalue iteration for a symmetric 3×3 matrix; values
/// sorted descending with matching unit vectors.
pub fn jacobi_eigen(m: Matrix3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let mut a = m;
    let mut v = Matrix3::<f64>::identity();
    for _ in 0..100 {
        let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        if off < 1e-30 * (a.norm_squared() + 1e-300) {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[(p, q)].abs() < 1e-300 {
                continue;
            }
            let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut r = Matrix3::<f64>::identity();
            r[(p, p)] = c;
            r[(q, q)] = c;
            r[(p, q)] = s;
            r[(q, p)] = -s;
            a = r.transpose() * a * r;
            v *= r;
        }
    }
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    (idx.map(|i| a[(i, i)]), idx.map(|i| v.column(i).into_owned()))
}

pub fn brute_nearest(points: &[Point3<f64>], q: &Point3<f64>) -> usize {
    let mut best = (f64::INFINITY, usize::MAX);
    for (i, p) in points.iter().enumerate() {
        let d2 = (p - q).norm_squared();
        if d2 < best.0 {
            best = (d2, i);
        }
    }
    best.1
}

/// Barycentric coordinates by Cramer's rule.
pub fn barycentric(tri: [[f64; 2]; 3], p: [f64; 2]) -> [f64; 3] {
    let [a, b, c] = tri;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

pub fn contains(tri: [[f64; 2]; 3], p: [f64; 2]) -> bool {
    barycentric(tri, p).iter().all(|&l| l >= 0.0)
}

/// Pixel (x, y) of a w×h image is covered when its center lies in some
/// triangle (`[x, y]` coordinates). Returns, per pixel, the last covering
/// triangle index.
pub fn brute_coverage(tris: &[[[f64; 2]; 3]], w: u32, h: u32) -> Vec<Option<usize>> {
    let mut out = vec![None; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let p = [x as f64 + 0.5, y as f64 + 0.5];
            for (t, tri) in tris.iter().enumerate() {
                if contains(*tri, p) {
                    out[(y * w + x) as usize] = Some(t);
                }
            }
        }
    }
    out
}

/// Exact rounded mean gray of the texture pixels whose centers lie in `tri`
/// (`[x, y]` in texture pixels); `None` when no center is inside.
pub fn pixel_mean(texture: &GrayImage, tri: [[f64; 2]; 3]) -> Option<u8> {
    let (mut sum, mut n) = (0u64, 0u64);
    for y in 0..texture.height() {
        for x in 0..texture.width() {
            if contains(tri, [x as f64 + 0.5, y as f64 + 0.5]) {
                sum += texture.get_pixel(x, y).0[0] as u64;
                n += 1;
            }
        }
    }
    // round half up: floor(sum / n + 1/2)
    (n > 0).then(|| ((sum as f64 / n as f64) + 0.5).floor() as u8)
}

/// Fisher-style criterion evaluated straight from the definition.
pub fn naive_fisher(rows: &[Vec<f64>], labels: &[String], feature: usize) -> f64 {
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (r, l) in rows.iter().zip(labels) {
        groups.entry(l).or_default().push(r[feature]);
    }
    let stats: Vec<(f64, f64)> = groups
        .values()
        .map(|xs| {
            let n = xs.len() as f64;
            let mu = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0);
            (mu, var.sqrt().max(1e-12))
        })
        .collect();
    let mut j = 0.0;
    for i in 0..stats.len() {
        for k in i + 1..stats.len() {
            let (mi, si) = stats[i];
            let (mk, sk) = stats[k];
            j += 0.5 * (mi - mk).powi(2) * (1.0 / (si * si) + 1.0 / (sk * sk))
                + 0.5 * ((si * si) / (sk * sk) + (sk * sk) / (si * si) - 2.0);
        }
    }
    j
}

/// Fraction of positive–negative pairs ordered correctly, ties ½.
pub fn brute_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if positive[i] && !positive[j] {
                den += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / den
}

/// Histogram per trailing window; ties to the most recent tied label.
pub fn recount_vote(labels: &[u8], window: usize) -> Vec<u8> {
    (0..labels.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let mut counts = [0usize; 256];
            for &l in &labels[lo..=i] {
                counts[l as usize] += 1;
            }
            let top = *counts.iter().max().unwrap();
            *labels[lo..=i].iter().rev().find(|&&l| counts[l as usize] == top).unwrap()
        })
        .collect()
}

pub fn zero_column_scan(rows: &[Vec<f64>]) -> Vec<usize> {
    let cols = rows[0].len();
    let mut kept = Vec::new();
    'col: for j in 0..cols {
        for r in rows {
            if r[j] != 0.0 {
                kept.push(j);
                continue 'col;
            }
        }
    }
    kept
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Vertices whose distance from every boundary vertex exceeds `margin`.
pub fn interior_vertices(mesh: &TriMesh, margin: f64) -> Vec<usize> {
    let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for f in &mesh.facets {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut boundary: Vec<usize> = edge_count
        .iter()
        .filter(|(_, &c)| c == 1)
        .flat_map(|(&(a, b), _)| [a, b])
        .collect();
    boundary.sort_unstable();
    boundary.dedup();
    (0..mesh.vertex_count())
        .filter(|&v| {
            boundary
                .iter()
                .all(|&b| (mesh.vertices[v] - mesh.vertices[b]).norm() > margin)
        })
        .collect()
}
