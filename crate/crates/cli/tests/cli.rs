use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::SystemTime;

use fgai::analyze::{FeatureMatrix, SampleInfo};
use fgai::mesh::write_textured_obj;
use fgai::synth::{self, Relief};

fn fgai(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fgai")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_scans(root: &Path, ids: &[&str]) -> PathBuf {
    let data = root.join("data");
    fs::create_dir_all(&data).unwrap();
    let mut csv = String::from("scan_id,mesh,texture,subject_id,label,sequence_id,frame_index\n");
    for (i, id) in ids.iter().enumerate() {
        let relief = if i % 2 == 0 { Relief::Bump } else { Relief::Dent };
        let mesh = synth::relief_sample(relief, 25, i as u64);
        fs::write(data.join(format!("{id}.obj")), write_textured_obj(&mesh)).unwrap();
        mesh.texture().save(data.join(format!("{id}.png"))).unwrap();
        csv.push_str(&format!("{id},data/{id}.obj,data/{id}.png,p{i},l{},,\n", i % 2));
    }
    let path = root.join("manifest.csv");
    fs::write(&path, csv).unwrap();
    path
}

fn pngs(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".png"))
        .collect();
    v.sort();
    v
}

fn mtimes(dir: &Path) -> Vec<(String, SystemTime)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), e.metadata().unwrap().modified().unwrap())
        })
        .filter(|(n, _)| n.ends_with(".png"))
        .collect();
    v.sort();
    v
}

#[test]
fn version_prints_build_identifier() {
    let o = fgai(&["--version"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("fgai "), "{s}");
    assert!(s.contains(env!("CARGO_PKG_VERSION")) && s.contains('('), "{s}");
}

#[test]
fn every_subcommand_has_help() {
    for sub in ["process", "fuse", "pixels", "analyze", "train", "eval", "dynamic-eval"] {
        let o = fgai(&[sub, "--help"]);
        assert!(o.status.success(), "{sub}");
        assert!(stdout(&o).contains("Usage"), "{sub}");
    }
    let flags = stdout(&fgai(&["process", "--help"]));
    for f in ["--step", "--size", "--combos", "--range_K", "--augment_seed", "--force"] {
        assert!(flags.contains(f), "process --help lacks {f}");
    }
    let flags = stdout(&fgai(&["dynamic-eval", "--help"]));
    for f in ["--folds", "--seed", "--metric", "--window", "--c"] {
        assert!(flags.contains(f), "dynamic-eval --help lacks {f}");
    }
    assert!(stdout(&fgai(&["analyze", "--help"])).contains("--top"));
}

#[test]
fn one_scan_gives_five_gais_and_ten_fgais_and_reruns_are_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_scans(dir.path(), &["a"]);
    let out = dir.path().join("out");
    let args = ["process", "--manifest", manifest.to_str().unwrap(), "--out", out.to_str().unwrap(), "--size", "64"];
    let o = fgai(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let names = pngs(&out);
    assert_eq!(names.len(), 15, "{names:?}");
    for k in ["K", "H", "GL", "LD", "SI"] {
        assert!(names.contains(&format!("a.{k}.png")));
    }
    assert_eq!(names.iter().filter(|n| n.matches('-').count() == 2).count(), 10);
    let prov = fs::read_to_string(out.join("a.provenance.jsonl")).unwrap();
    assert_eq!(prov.lines().count(), 15);
    for line in prov.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["scan_id"], "a", "{line}");
    }
    let img = image::open(out.join("a.H-LD-SI.png")).unwrap();
    assert_eq!((img.width(), img.height()), (64, 64));

    let before = mtimes(&out);
    std::thread::sleep(std::time::Duration::from_millis(20));
    let o = fgai(&args);
    assert!(o.status.success());
    assert_eq!(mtimes(&out), before, "rerun rewrote images");
    assert!(fs::read_to_string(out.join("process.log")).unwrap().contains("a\tskipped"));

    let mut forced = args.to_vec();
    forced.push("--force");
    assert!(fgai(&forced).status.success());
    let after = mtimes(&out);
    assert!(after.iter().zip(&before).all(|(a, b)| a.1 > b.1), "--force left images untouched");
    assert_eq!(fs::read(out.join("a.K.png")).unwrap().len() > 0, true);
}

#[test]
fn one_bad_scan_fails_the_run_but_not_the_others() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_scans(dir.path(), &["a", "b", "c"]);
    let text = fs::read_to_string(&manifest).unwrap().replace("data/b.obj", "data/missing.obj");
    fs::write(&manifest, text).unwrap();
    let out = dir.path().join("out");
    let o = fgai(&[
        "process",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--size",
        "48",
        "--combos",
        "none",
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("failed: b"));
    let names = pngs(&out);
    assert_eq!(names.len(), 10, "{names:?}");
    assert!(names.iter().all(|n| !n.starts_with("b.")));
    let log = fs::read_to_string(out.join("process.log")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert!(lines[0].starts_with("a\tdone"));
    assert!(lines[1].starts_with("b\tfailed") && lines[1].contains("missing.obj"), "{log}");
    assert!(lines[2].starts_with("c\tdone"));
    assert!(lines[3].contains("failed 1"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_scans(dir.path(), &["a"]);
    let out = dir.path().join("out");
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        format!("# small run\nsize = 32\ncombos = H-LD-SI\nkinds = H,LD,SI\nout = {}\n", out.display()),
    )
    .unwrap();
    let o = fgai(&["process", "--manifest", manifest.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--size", "40x24"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(pngs(&out), ["a.H-LD-SI.png", "a.H.png", "a.LD.png", "a.SI.png"]);
    let img = image::open(out.join("a.H-LD-SI.png")).unwrap();
    assert_eq!((img.width(), img.height()), (40, 24));

    let o = fgai(&["process", "--manifest", manifest.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--combos", "K-H-SI"]);
    assert!(!o.status.success(), "combo needing an unlisted kind should be rejected");
}

#[test]
fn fuse_and_dump_work_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_scans(dir.path(), &["a"]);
    let out = dir.path().join("out");
    let m = manifest.to_str().unwrap();
    let o = fgai(&["process", "--manifest", m, "--out", out.to_str().unwrap(), "--size", "32", "--combos", "none", "--dump_resampled"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(pngs(&out).len(), 5);
    let obj = fs::read_to_string(out.join("a.resampled.obj")).unwrap();
    assert!(obj.lines().any(|l| l.starts_with("f ")));

    let o = fgai(&["fuse", "--dir", out.to_str().unwrap(), "--manifest", m, "--combos", "H-LD-SI,K-H-GL"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(pngs(&out).len(), 7);
    let fused = image::open(out.join("a.H-LD-SI.png")).unwrap().into_rgb8();
    let h = image::open(out.join("a.H.png")).unwrap().into_luma8();
    let si = image::open(out.join("a.SI.png")).unwrap().into_luma8();
    for (x, y, p) in fused.enumerate_pixels() {
        assert_eq!(p[0], h.get_pixel(x, y)[0]);
        assert_eq!(p[2], si.get_pixel(x, y)[0]);
    }

    let fmx = dir.path().join("px.fmx");
    let o = fgai(&["pixels", "--dir", out.to_str().unwrap(), "--manifest", m, "--images", "H-LD-SI,K", "--block", "4", "--out", fmx.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fm = FeatureMatrix::read(&fmx).unwrap();
    assert_eq!((fm.rows(), fm.cols()), (1, 8 * 8 * 3 + 8 * 8));
}

/// Two classes separated along feature 1, plus a constant column and noise;
/// 8 subjects with 5-frame sequences each.
fn write_features(path: &Path) {
    let mut rows = Vec::new();
    let mut info = Vec::new();
    for s in 0..8 {
        for (c, label) in ["happy", "sad"].iter().enumerate() {
            for f in 0..5u32 {
                let t = (s * 10 + c * 5 + f as usize) as f64;
                let signal = if c == 0 { 2.0 } else { -2.0 };
                rows.push(vec![(t * 0.7).sin(), signal + 0.3 * (t * 1.3).cos(), 0.0, (t * 0.37).cos()]);
                let mut si = SampleInfo::new(format!("s{s}{label}{f}"), format!("p{s}"), *label);
                si.sequence_id = Some(format!("p{s}-{label}"));
                si.frame_index = Some(f);
                info.push(si);
            }
        }
    }
    FeatureMatrix::from_rows(rows, info).unwrap().write(path).unwrap();
}

#[test]
fn analyze_ranks_the_separating_feature_first() {
    let dir = tempfile::tempdir().unwrap();
    let fmx = dir.path().join("feats.fmx");
    write_features(&fmx);
    let csv_path = dir.path().join("rank.csv");
    let o = fgai(&["analyze", fmx.to_str().unwrap(), "--top", "2", "--out", csv_path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "rank,feature_index,J");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,1,"), "{csv}");
    // the all-zero column is pruned but indices still refer to the input
    assert!(!csv.lines().skip(1).any(|l| l.split(',').nth(1) == Some("2")));

    // pooling two files doubles the samples without changing the ranking
    let o = fgai(&["analyze", fmx.to_str().unwrap(), fmx.to_str().unwrap(), "--top", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("1,1,"));
}

#[test]
fn train_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let fmx = dir.path().join("feats.fmx");
    write_features(&fmx);
    let f = fmx.to_str().unwrap();

    let model = dir.path().join("model.json");
    let o = fgai(&["train", f, "--out", model.to_str().unwrap(), "--c", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(v["classes"], serde_json::json!(["happy", "sad"]));
    assert_eq!(v["config"]["c"], 0.5);

    let prefix = dir.path().join("reports/static");
    let o = fgai(&["eval", f, "--folds", "4", "--seed", "3", "--metric", "auc", "--report", prefix.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("reports/static.json")).unwrap()).unwrap();
    assert_eq!(report["protocol"]["folds"], 4);
    assert_eq!(report["protocol"]["metric"], "auc");
    assert_eq!(report["mean_accuracy"], 1.0);
    assert_eq!(report["mean_auc"], 1.0);
    assert_eq!(report["fold_subjects"].as_array().unwrap().len(), 4);
    assert!(dir.path().join("reports/static.txt").exists());
    assert!(fs::read_to_string(dir.path().join("reports/static.auc.csv")).unwrap().starts_with("class,auc\n"));

    let prefix = dir.path().join("dyn");
    let o = fgai(&["dynamic-eval", f, "--folds", "4", "--window", "3", "--report", prefix.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("dyn.json")).unwrap()).unwrap();
    assert_eq!(report["protocol"]["window"], 3);
    assert_eq!(report["protocol"]["window_alignment"], "trailing");
    assert_eq!(report["mean_accuracy"], 1.0);

    let o = fgai(&["eval", f, "--folds", "1"]);
    assert!(!o.status.success());
    let o = fgai(&["eval", f, "--metric", "f1"]);
    assert!(!o.status.success());
}

#[test]
fn dynamic_eval_requires_sequences() {
    let dir = tempfile::tempdir().unwrap();
    let fmx = dir.path().join("flat.fmx");
    let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, (i % 2) as f64]).collect();
    let info = (0..8).map(|i| SampleInfo::new(format!("s{i}"), format!("p{}", i / 2), format!("c{}", i % 2))).collect();
    FeatureMatrix::from_rows(rows, info).unwrap().write(&fmx).unwrap();
    let o = fgai(&["dynamic-eval", fmx.to_str().unwrap(), "--folds", "2"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("sequence_id"));
}
