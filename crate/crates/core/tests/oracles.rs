mod common;

use common::*;
use fgai::analyze::{fisher_j, prune_zero_features, FeatureMatrix, SampleInfo};
use fgai::classify::{auc, dynamic_vote};
use fgai::descriptors::{
    curvature_descriptors, local_depth, neighborhood, principal_curvatures, DescriptorKind, DescriptorSet,
    FundamentalForms, NeighborhoodSpec,
};
use fgai::gai::{rasterize_field, tessellated_gray, Normalization};
use fgai::mesh::{mesh_metrics, TexturedMesh, TriMesh};
use fgai::resample::{principal_frame, rebuild_texture_map, resample, ResampleConfig, TextureMap};
use fgai::synth::{self, HeightField};
use image::{GrayImage, Luma};
use nalgebra::{Matrix3, Point3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bumpy_patch(n: usize, jitter: f64, seed: u64) -> TexturedMesh {
    let h = |x: f64, y: f64| 0.3 * (-((x - 2.0).powi(2) + (y - 2.0).powi(2)) / 2.0).exp();
    let tex = |u: f64, v: f64| ((u * 7.0).floor() as u32 + (v * 5.0).floor() as u32) as u8 % 2 * 200 + 20;
    HeightField {
        nx: n,
        ny: n,
        spacing: 4.0 / (n - 1) as f64,
        jitter,
        seed,
        height: &h,
        inside: &|_, _| true,
        texture: &tex,
        texture_size: 64,
    }
    .build()
}

#[test]
fn neighborhoods_match_all_pairs_shortest_paths() {
    // regular unit grid: radius 3 with exact ties on the boundary
    let grid = synth::plane_grid(12, 12, 1.0, 0.0);
    let adj = grid.geometry().adjacency();
    let d = all_pairs_shortest(grid.geometry());
    for seed in [0, 13, 65, 143] {
        let got = neighborhood(&adj, seed, 3.0).unwrap();
        let want: Vec<usize> = (0..grid.vertices().len()).filter(|&v| d[seed][v] <= 3.0).collect();
        assert_eq!(got, want, "seed {seed}");
    }
    // jittered, non-flat patch at the descriptor radius
    let mesh = bumpy_patch(13, 0.2, 4);
    let geom = mesh.geometry();
    let radius = 3.0 * mesh_metrics(geom).mean_edge_length;
    let adj = geom.adjacency();
    let d = all_pairs_shortest(geom);
    for seed in 0..geom.vertex_count() {
        let got = neighborhood(&adj, seed, radius).unwrap();
        let want: Vec<usize> = (0..geom.vertex_count()).filter(|&v| d[seed][v] <= radius).collect();
        assert_eq!(got, want, "seed {seed}");
    }
}

#[test]
fn neighborhood_edge_cases() {
    let grid = synth::plane_grid(5, 5, 1.0, 0.0);
    let adj = grid.geometry().adjacency();
    assert_eq!(neighborhood(&adj, 12, 0.5).unwrap(), vec![12]);

    let a = synth::plane_grid(4, 4, 1.0, 0.0);
    let mut vertices = a.vertices().to_vec();
    let mut facets = a.facets().to_vec();
    let off = vertices.len();
    vertices.extend(a.vertices().iter().map(|p| Point3::new(p.x + 3.5, p.y, p.z)));
    facets.extend(a.facets().iter().map(|f| f.map(|v| v + off)));
    let two = TriMesh::new(vertices, facets);
    let nb = neighborhood(&two.adjacency(), 3, 100.0).unwrap();
    assert!(nb.iter().all(|&v| v < off));
}

#[test]
fn principal_frame_matches_jacobi() {
    let mesh = synth::face_like(40, 7);
    let pts = mesh.vertices();
    let n = pts.len() as f64;
    let c = pts.iter().fold(Point3::origin(), |acc, p| acc + p.coords / n);
    let mut cov = Matrix3::zeros();
    for p in pts {
        let d = p - c;
        cov += d * d.transpose() / n;
    }
    let (_, vecs) = jacobi_eigen(cov);
    let frame = principal_frame(mesh.geometry()).unwrap();
    for k in 0..3 {
        assert!((frame.axes[k].dot(&vecs[k]).abs() - 1.0).abs() < 1e-9, "axis {k}");
    }
    assert!(frame.axes[2].dot(&mesh.geometry().total_normal()) > 0.0);
    assert!((frame.axes[0].cross(&frame.axes[1]) - frame.axes[2]).norm() < 1e-12);
}

#[test]
fn correspondence_is_nearest_vertex() {
    let mesh = synth::face_like(40, 7);
    let frame = principal_frame(mesh.geometry()).unwrap();
    let r = resample(&mesh, &frame, &ResampleConfig::default()).unwrap();
    for (v, &c) in r.correspondence.iter().enumerate() {
        assert_eq!(c, brute_nearest(mesh.vertices(), &r.mesh.vertices[v]), "vertex {v}");
    }
}

#[test]
fn resampled_triangulation_is_delaunay() {
    let mesh = synth::face_like(40, 7);
    let frame = principal_frame(mesh.geometry()).unwrap();
    let r = resample(&mesh, &frame, &ResampleConfig::default()).unwrap();
    let xy: Vec<[f64; 2]> = r
        .mesh
        .vertices
        .iter()
        .map(|p| {
            let l = frame.to_local(p);
            [l.x, l.y]
        })
        .collect();
    let tol = 1e-9 * r.grid.spacing * r.grid.spacing;
    for f in &r.mesh.facets {
        let [a, b, c] = f.map(|v| xy[v]);
        let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
        let sq = |p: [f64; 2]| p[0] * p[0] + p[1] * p[1];
        let ux = (sq(a) * (b[1] - c[1]) + sq(b) * (c[1] - a[1]) + sq(c) * (a[1] - b[1])) / d;
        let uy = (sq(a) * (c[0] - b[0]) + sq(b) * (a[0] - c[0]) + sq(c) * (b[0] - a[0])) / d;
        let r2 = (a[0] - ux).powi(2) + (a[1] - uy).powi(2);
        for (v, p) in xy.iter().enumerate() {
            if f.contains(&v) {
                continue;
            }
            let d2 = (p[0] - ux).powi(2) + (p[1] - uy).powi(2);
            assert!(d2 >= r2 - tol, "vertex {v} inside circumcircle of {f:?}");
        }
    }
}

/// 100-facet jittered fixture: 6 x 11 lattice.
fn hundred_facets() -> TexturedMesh {
    let tex = |u: f64, v: f64| ((u * 9.0).floor() as u32 + (v * 9.0).floor() as u32) as u8 % 2 * 180 + 30;
    HeightField {
        nx: 6,
        ny: 11,
        spacing: 1.0,
        jitter: 0.3,
        seed: 21,
        height: &|x, y| 0.1 * x * y,
        inside: &|_, _| true,
        texture: &tex,
        texture_size: 50,
    }
    .build()
}

fn target_tris(tmap: &TextureMap, size: (u32, u32)) -> Vec<[[f64; 2]; 3]> {
    let (sx, sy) = (size.0 as f64 / tmap.width as f64, size.1 as f64 / tmap.height as f64);
    tmap.facet_pixels.iter().map(|t| t.map(|[r, c]| [c * sx, r * sy])).collect()
}

#[test]
fn field_coverage_matches_point_in_triangle() {
    let mesh = hundred_facets();
    assert_eq!(mesh.facets().len(), 100);
    let tmap = TextureMap::from_mesh(&mesh);
    let set = DescriptorSet::compute(mesh.geometry(), &NeighborhoodSpec::default());
    let mut field = set.field(DescriptorKind::LD).unwrap();
    field.valid.iter_mut().for_each(|v| *v = true);
    for size in [(50, 50), (97, 61)] {
        let img = rasterize_field(&tmap, &field, size, &Normalization::PerImage).unwrap();
        let oracle = brute_coverage(&target_tris(&tmap, size), size.0, size.1);
        let want: Vec<bool> = oracle.iter().map(Option::is_some).collect();
        assert_eq!(img.coverage, want, "size {size:?}");
    }
}

#[test]
fn tessellated_gray_matches_pixel_enumeration() {
    let mesh = hundred_facets();
    let tmap = TextureMap::from_mesh(&mesh);
    let tex = mesh.texture();
    let src_tris = target_tris(&tmap, (tmap.width, tmap.height));
    let means: Vec<u8> = src_tris
        .iter()
        .map(|&t| pixel_mean(tex, t).expect("fixture triangles cover pixel centers"))
        .collect();
    for size in [(50, 50), (120, 80)] {
        let img = tessellated_gray(&mesh, &tmap, size).unwrap();
        let owner = brute_coverage(&target_tris(&tmap, size), size.0, size.1);
        for (i, o) in owner.iter().enumerate() {
            match o {
                Some(f) => assert_eq!(img.pixels[i], means[*f], "pixel {i}"),
                None => assert!(!img.coverage[i]),
            }
        }
    }
}

#[test]
fn one_large_triangle_over_checkerboard() {
    let tex = GrayImage::from_fn(32, 32, |x, y| Luma([if (x / 3 + y / 5) % 2 == 0 { 10 } else { 237 }]));
    let vertices = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)];
    let uv = vec![[[0.03, 0.05], [0.97, 0.11], [0.2, 0.93]]];
    let (mesh, _) = TexturedMesh::new(vertices, vec![[0, 1, 2]], uv, tex.clone()).unwrap();
    let tmap = TextureMap::from_mesh(&mesh);
    let img = tessellated_gray(&mesh, &tmap, (32, 32)).unwrap();
    let want = pixel_mean(&tex, target_tris(&tmap, (32, 32))[0]).unwrap();
    let covered: Vec<u8> = img.pixels.iter().zip(&img.coverage).filter(|(_, c)| **c).map(|(p, _)| *p).collect();
    assert!(!covered.is_empty());
    assert!(covered.iter().all(|&p| p == want));
}

#[test]
fn resampled_texture_map_round_trip() {
    let mesh = bumpy_patch(30, 0.2, 2);
    let frame = principal_frame(mesh.geometry()).unwrap();
    let r = resample(&mesh, &frame, &ResampleConfig::default()).unwrap();
    let tmap = rebuild_texture_map(&r, &mesh).unwrap();
    let img = tessellated_gray(&mesh, &tmap, (64, 64)).unwrap();
    let tris = target_tris(&tmap, (64, 64));
    let owner = brute_coverage(&tris, 64, 64);
    assert_eq!(img.coverage, owner.iter().map(Option::is_some).collect::<Vec<_>>());
}

#[test]
fn principal_curvatures_solve_the_quadratic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let (zx, zy) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let ff = FundamentalForms::from_partials(
            zx,
            zy,
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
        );
        let pc = principal_curvatures(&ff).unwrap();
        assert!(pc.max >= pc.min);
        for k in [pc.max, pc.min] {
            let det = (ff.l - k * ff.e) * (ff.n - k * ff.g) - (ff.m - k * ff.f).powi(2);
            let scale = 1.0 + ff.l.abs().max(ff.n.abs()).powi(2) + (k * ff.e).powi(2);
            assert!(det.abs() < 1e-9 * scale, "residual {det}");
        }
    }
}

#[test]
fn saddle_at_origin() {
    let mesh = synth::centered_height_field(41, 1.0, &|x, y| x * x - y * y);
    let origin = mesh.vertices().iter().position(|p| p.x.abs() < 1e-12 && p.y.abs() < 1e-12).unwrap();
    let set = DescriptorSet::compute(mesh.geometry(), &NeighborhoodSpec::default());
    let (pc, cd) = set.per_vertex[origin].curvatures.unwrap();
    // analytic: λ = ±2 at the origin
    assert!(cd.gaussian < 0.0);
    assert!((cd.shape_index - 0.5).abs() < 0.05);
    assert!((pc.max - 2.0).abs() < 0.1 && (pc.min + 2.0).abs() < 0.1, "{pc:?}");
}

#[test]
fn closed_form_descriptors() {
    let d = curvature_descriptors(&principal_curvatures(&FundamentalForms::from_partials(0.0, 0.0, 0.5, 0.0, 0.0)).unwrap());
    assert_eq!(d.gaussian, 0.0);
    assert_eq!(d.mean, 0.25);
    assert!((d.shape_index - 0.25).abs() < 1e-15);
}

#[test]
fn local_depth_matches_independent_pca() {
    let sphere = synth::icosphere(3, 1.0);
    let normals = sphere.vertex_normals();
    let adj = sphere.adjacency();
    let radius = 3.0 * mesh_metrics(&sphere).mean_edge_length;
    for v in [0, 17, 200, 641] {
        let nb = neighborhood(&adj, v, radius).unwrap();
        let got = local_depth(&sphere.vertices, v, &normals[v], &nb).unwrap();
        let n = nb.len() as f64;
        let c = nb.iter().fold(Point3::origin(), |acc, &i| acc + sphere.vertices[i].coords / n);
        let mut cov = Matrix3::zeros();
        for &i in &nb {
            let d = sphere.vertices[i] - c;
            cov += d * d.transpose() / n;
        }
        let (_, vecs) = jacobi_eigen(cov);
        let mut axis = vecs[2];
        if axis.dot(&normals[v]) < 0.0 {
            axis = -axis;
        }
        let want = (sphere.vertices[v] - c).dot(&axis);
        assert!((got - want).abs() < 1e-9, "vertex {v}: {got} vs {want}");
        assert!(got > 0.0);
    }
}

#[test]
fn bump_apex_has_positive_depth() {
    let mesh = synth::centered_height_field(31, 1.0, &|x, y| 0.4 * (-(x * x + y * y) / 0.1).exp());
    let apex = mesh.vertices().iter().position(|p| p.x.abs() < 1e-12 && p.y.abs() < 1e-12).unwrap();
    let set = DescriptorSet::compute(mesh.geometry(), &NeighborhoodSpec::default());
    assert!(set.per_vertex[apex].local_depth.unwrap() > 0.0);
    let (_, cd) = set.per_vertex[apex].curvatures.unwrap();
    assert!(cd.mean > 0.0 && cd.shape_index < 0.125, "{cd:?}");
}

fn random_matrix(rng: &mut ChaCha8Rng, classes: usize, per_class: usize, d: usize) -> (Vec<Vec<f64>>, Vec<String>) {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in 0..classes {
        let shift: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let spread: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..3.0)).collect();
        for _ in 0..per_class {
            // Irwin–Hall-ish gaussian from 12 uniforms
            rows.push(
                (0..d)
                    .map(|j| shift[j] + spread[j] * ((0..12).map(|_| rng.random::<f64>()).sum::<f64>() - 6.0))
                    .collect(),
            );
            labels.push(format!("c{c}"));
        }
    }
    (rows, labels)
}

fn to_fm(rows: &[Vec<f64>], labels: &[String]) -> FeatureMatrix {
    let info = labels
        .iter()
        .enumerate()
        .map(|(i, l)| SampleInfo::new(format!("s{i}"), format!("p{i}"), l.clone()))
        .collect();
    FeatureMatrix::from_rows(rows.to_vec(), info).unwrap()
}

#[test]
fn fisher_matches_naive_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..10 {
        let (rows, labels) = random_matrix(&mut rng, 3, 10 + trial, 20);
        let r = fisher_j(&to_fm(&rows, &labels)).unwrap();
        for f in 0..20 {
            let want = naive_fisher(&rows, &labels, f);
            assert!((r.j[f] - want).abs() <= 1e-9 * want.max(1.0), "{} vs {want}", r.j[f]);
        }
        for w in r.ranking.windows(2) {
            assert!(r.j[w[0]] >= r.j[w[1]]);
        }
    }
}

#[test]
fn pruning_matches_column_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let cols = 40;
        let zero: Vec<bool> = (0..cols).map(|_| rng.random_bool(0.3)).collect();
        let rows: Vec<Vec<f64>> = (0..15)
            .map(|_| {
                (0..cols)
                    .map(|j| if zero[j] || rng.random_bool(0.5) { 0.0 } else { rng.random_range(-1.0..1.0) })
                    .collect()
            })
            .collect();
        let labels: Vec<String> = (0..15).map(|i| format!("c{}", i % 3)).collect();
        let want = zero_column_scan(&rows);
        match prune_zero_features(&to_fm(&rows, &labels)) {
            Ok((fm, kept)) => {
                assert_eq!(kept, want);
                for (i, r) in rows.iter().enumerate() {
                    let expect: Vec<f64> = kept.iter().map(|&j| r[j]).collect();
                    assert_eq!(fm.row(i), expect.as_slice());
                }
            }
            Err(_) => assert!(want.is_empty()),
        }
    }
}

#[test]
fn auc_matches_pairwise_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let n = rng.random_range(2..=200);
        let scores: Vec<f64> = (0..n).map(|_| (rng.random_range(0..20) as f64) / 4.0).collect();
        let mut positive: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        positive[0] = true;
        positive[1] = false;
        let got = auc(&scores, &positive).unwrap();
        assert!((got - brute_auc(&scores, &positive)).abs() < 1e-12);
    }
}

#[test]
fn vote_matches_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..100 {
        let seq: Vec<u8> = (0..100).map(|_| rng.random_range(0..4)).collect();
        let w = rng.random_range(1..=12);
        assert_eq!(dynamic_vote(&seq, w).unwrap(), recount_vote(&seq, w));
    }
}
