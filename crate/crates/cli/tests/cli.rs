use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use texton_core::io::{load_set, render_png, Tensor};

fn texton(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_texton"))
        .args(args)
        .env("TEXTON_THREADS", "2")
        .output()
        .expect("run texton")
}

fn ok(args: &[&str]) -> Output {
    let out = texton(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &TempDir, name: &str, k: usize, seed: u64) -> PathBuf {
    let path = dir.path().join(name);
    let seed = seed.to_string();
    ok(&[
        "synth", "--k", &k.to_string(), "--seed", &seed, "--frame", "40x32", "--nf", "4", "--out", p(&path),
    ]);
    path
}

#[test]
fn synth_and_render_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = synth(&dir, "a.json", 5, 7);
    let b = synth(&dir, "b.json", 5, 7);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(load_set(&a).unwrap().len(), 5);

    let png = dir.path().join("a.png");
    ok(&["render", p(&a), "--out", p(&png)]);
    let bytes = std::fs::read(&png).unwrap();
    assert_eq!(bytes, render_png(&load_set(&a).unwrap(), None).unwrap());

    let ppm = dir.path().join("a.ppm");
    ok(&["render", p(&a), "--out", p(&ppm)]);
    assert!(std::fs::read(&ppm).unwrap().starts_with(b"P6\n40 32\n255\n"));
}

#[test]
fn cycle_consistency_of_a_set_with_itself_is_zero() {
    let dir = TempDir::new().unwrap();
    let a = synth(&dir, "a.json", 6, 3);
    let out = ok(&["cc", p(&a), p(&a)]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "cc=0");

    let b = synth(&dir, "b.json", 6, 4);
    let out = ok(&["cc", p(&a), p(&b)]);
    let text = String::from_utf8(out.stdout).unwrap();
    let v: f64 = text.trim().strip_prefix("cc=").unwrap().parse().unwrap();
    assert!(v > 0.0);
}

#[test]
fn interpolation_at_zero_returns_the_input_bytes() {
    let dir = TempDir::new().unwrap();
    let a = synth(&dir, "a.json", 4, 1);
    let b = synth(&dir, "b.json", 6, 2);
    let out = dir.path().join("i.json");
    ok(&["interp", p(&a), p(&b), "--eta", "0", "--out", p(&out)]);
    // synth writes provenance, so compare the reloaded set
    assert_eq!(load_set(&out).unwrap(), load_set(&a).unwrap());
    let again = dir.path().join("j.json");
    ok(&["interp", p(&out), p(&b), "--eta", "0", "--out", p(&again)]);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(texton(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(texton(&["interp", "a.json"]).status.code(), Some(2));
    assert_eq!(texton(&["--help"]).status.code(), Some(0));
    let dir = TempDir::new().unwrap();
    let a = synth(&dir, "a.json", 3, 1);
    assert_eq!(texton(&["rescale", p(&a), "--s", "2", "--anchor", "nope", "--out", "x.json"]).status.code(), Some(2));
}

#[test]
fn operation_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.json");
    let out = dir.path().join("o.json");
    assert_eq!(texton(&["cc", p(&missing), p(&missing)]).status.code(), Some(1));

    let a = synth(&dir, "a.json", 3, 1);
    let r = texton(&["edit", "scale", p(&a), "--index", "9", "--s", "2", "--out", p(&out)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&r.stderr).is_empty());
    assert!(!out.exists());

    std::fs::write(&missing, "{ not json").unwrap();
    assert_eq!(texton(&["render", p(&missing), "--out", p(&out)]).status.code(), Some(1));
}

#[test]
fn estimate_recovers_the_synthetic_textons() {
    let dir = TempDir::new().unwrap();
    let truth = dir.path().join("t.json");
    let masks = dir.path().join("m.txg");
    let app = dir.path().join("a.txg");
    let dirs = dir.path().join("d.txg");
    ok(&[
        "synth", "--k", "4", "--seed", "5", "--frame", "48x40", "--nf", "3", "--out", p(&truth),
        "--masks", p(&masks), "--appearance", p(&app), "--directions", p(&dirs),
    ]);
    let m = Tensor::read(&masks).unwrap();
    assert_eq!(m.dims, vec![5, 40, 48]);

    let est = dir.path().join("e.json");
    ok(&[
        "estimate", "--masks", p(&masks), "--appearance", p(&app), "--directions", p(&dirs), "--skip", "1",
        "--out", p(&est),
    ]);
    let t = load_set(&truth).unwrap();
    let e = load_set(&est).unwrap();
    assert_eq!(e.len(), t.len());
    for (a, b) in t.gaussians.iter().zip(&e.gaussians) {
        assert!((a.mean - b.mean).norm() < 0.5, "{:?} vs {:?}", a.mean, b.mean);
    }

    let out = ok(&["metrics", "--masks", p(&masks)]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("entropy=0\n") || text.contains("entropy=-0\n"), "{text}");
    assert!(text.contains("compactness="));
}

#[test]
fn editing_commands_produce_valid_sets() {
    let dir = TempDir::new().unwrap();
    let a = synth(&dir, "a.json", 5, 11);
    let b = synth(&dir, "b.json", 5, 12);
    let o = |n: &str| dir.path().join(n);
    let cases: Vec<Vec<String>> = vec![
        vec!["reshuffle".into(), p(&a).into(), "--mode".into(), "soft".into()],
        vec!["transfer".into(), "mean".into(), p(&a).into(), p(&b).into()],
        vec!["transfer".into(), "replace".into(), p(&a).into(), p(&b).into()],
        vec!["vary".into(), p(&a).into(), "--delta-f".into(), "2".into(), "--delta-u".into(), "0.5".into()],
        vec!["morph".into(), p(&a).into(), p(&b).into()],
        vec!["edit".into(), "move".into(), p(&a).into(), "--index".into(), "1".into(), "--dx".into(), "-2".into(), "--dy".into(), "3".into()],
        vec!["edit".into(), "rotate".into(), p(&a).into(), "--index".into(), "0".into(), "--theta".into(), "0.3".into()],
        vec!["rescale".into(), p(&a).into(), "--s".into(), "0.5".into()],
        vec!["merge".into(), format!("{}@0,0", p(&a)), format!("{}@32,0", p(&b)), "--overlap".into(), "8".into()],
    ];
    for (i, case) in cases.iter().enumerate() {
        let out = o(&format!("out{i}.json"));
        let mut args: Vec<&str> = case.iter().map(String::as_str).collect();
        args.extend(["--out", p(&out)]);
        ok(&args);
        load_set(&out).unwrap().ensure_valid().unwrap();
    }
    let merged = load_set(o("out8.json")).unwrap();
    assert_eq!((merged.frame.width, merged.frame.height), (72, 32));
}

#[test]
fn splat_and_animate_write_outputs() {
    let dir = TempDir::new().unwrap();
    let a = synth(&dir, "a.json", 3, 2);
    let grid = dir.path().join("g.txg");
    ok(&["splat", p(&a), "--out", p(&grid)]);
    assert_eq!(Tensor::read(&grid).unwrap().dims, vec![32, 40, 6]);

    let frames = dir.path().join("frames");
    ok(&["animate", "vortex", p(&a), "--frames", "3", "--out", p(&frames)]);
    for k in 0..3 {
        assert!(frames.join(format!("frame_{k:04}.png")).exists());
    }
    ok(&["animate", "shear", p(&a), "--frames", "2", "--format", "ppm", "--out", p(&frames)]);
    assert!(frames.join("frame_0001.ppm").exists());
}

#[test]
fn image_metrics_are_zero_on_identical_images() {
    let dir = TempDir::new().unwrap();
    let a = synth(&dir, "a.json", 4, 9);
    let png = dir.path().join("a.png");
    ok(&["render", p(&a), "--out", p(&png)]);
    let out = ok(&["metrics", p(&png), p(&png), "--patch", "4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for key in ["l1", "perceptual", "recon", "texture"] {
        assert!(text.contains(&format!("{key}=0\n")), "{text}");
    }
}
