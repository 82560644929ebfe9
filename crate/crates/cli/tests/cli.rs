use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ufcsr::capture::Manifest;
use ufcsr::fixtures;
use ufcsr::image::ColorImage;
use ufcsr::palette::ColorCode;

fn ufcsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ufcsr"))
        .args(args)
        .output()
        .expect("spawn ufcsr")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(ufcsr(&["--help"]).status.code(), Some(0));
    assert_eq!(ufcsr(&["--version"]).status.code(), Some(0));
    assert_eq!(ufcsr(&[]).status.code(), Some(1));
    assert_eq!(
        ufcsr(&["run", "--scenario", "x.toml"]).status.code(),
        Some(1)
    );
    assert_eq!(ufcsr(&["frobnicate"]).status.code(), Some(1));
    for sub in [
        "gen-palette",
        "bake-pidt",
        "render",
        "analyze",
        "heatmap",
        "oracle-check",
        "run",
        "report",
    ] {
        assert_eq!(ufcsr(&[sub, "--help"]).status.code(), Some(0), "{sub}");
    }
}

#[test]
fn unreadable_mesh_is_a_tagged_stage_failure() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = fixtures::write_cube_scenario(dir.path(), 3).unwrap();
    fs::remove_file(dir.path().join("cube.obj")).unwrap();
    let out = ufcsr(&[
        "run",
        "--scenario",
        p(&scenario),
        "--out",
        p(&dir.path().join("out")),
        "--scale",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("load stage failed"), "{err}");
    assert!(err.contains("cube.obj"), "{err}");
}

#[test]
fn run_produces_all_artifacts_and_reuses_cache() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = fixtures::write_cube_scenario(dir.path(), 12).unwrap();
    let out = dir.path().join("out");
    let args = [
        "run",
        "--scenario",
        p(&scenario),
        "--out",
        p(&out),
        "--scale",
        "10",
        "--strict",
    ];
    let first = ufcsr(&args);
    assert_eq!(
        first.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let text = stdout(&first);
    assert!(text.contains("frames per eye: 12"), "{text}");
    assert!(text.contains("captures: 24"), "{text}");
    assert!(text.contains(&format!("tiles: {}", 12 * 2 * 25)), "{text}");
    assert!(text.contains("Front"), "{text}");
    for f in [
        "palette/fcsp.png",
        "pidt/pidt.png",
        "pidt/parts.json",
        "captures/Scube/manifest.json",
        "captures/Scube/Scube_f0000_L_r2c2.png",
        "analysis/stats.json",
        "analysis/counts.json",
        "analysis/heatmap.png",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let stats = fs::read(out.join("analysis/stats.json")).unwrap();

    let second = ufcsr(&args);
    assert_eq!(second.status.code(), Some(0));
    assert!(stdout(&second).contains("cached stages: palette, pidt, capture, analyze, heatmap"));
    assert_eq!(fs::read(out.join("analysis/stats.json")).unwrap(), stats);

    let forced = ufcsr(&[&args[..], &["--force"]].concat());
    assert_eq!(forced.status.code(), Some(0));
    assert!(!stdout(&forced).contains("cached stages"));
    assert_eq!(fs::read(out.join("analysis/stats.json")).unwrap(), stats);

    let text = String::from_utf8(stats).unwrap();
    assert!(
        !text.contains(p(dir.path())),
        "stats must not embed absolute paths"
    );
}

#[test]
fn separate_stages_match_run() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = fixtures::write_cube_scenario(dir.path(), 8).unwrap();
    let run_out = dir.path().join("run");
    let run = ufcsr(&[
        "run",
        "--scenario",
        p(&scenario),
        "--out",
        p(&run_out),
        "--scale",
        "10",
    ]);
    assert_eq!(run.status.code(), Some(0));

    let caps = dir.path().join("caps");
    let pidt = dir.path().join("pidt");
    let analysis = dir.path().join("analysis");
    let heat = dir.path().join("heat.png");
    let mesh = dir.path().join("cube.obj");
    let counts = analysis.join("counts.json");
    let steps: [Vec<&str>; 4] = [
        vec![
            "render",
            "--scenario",
            p(&scenario),
            "--out",
            p(&caps),
            "--scale",
            "10",
        ],
        vec!["bake-pidt", "--mesh", p(&mesh), "--out", p(&pidt)],
        vec![
            "analyze",
            "--captures",
            p(&caps),
            "--pidt",
            p(&pidt),
            "--out",
            p(&analysis),
            "--strict",
        ],
        vec!["heatmap", "--counts", p(&counts), "--out", p(&heat)],
    ];
    for s in &steps {
        let o = ufcsr(s);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{s:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    assert!(stdout(&ufcsr(&steps[0])).contains("tiles: 400"));
    assert_eq!(
        fs::read(analysis.join("stats.json")).unwrap(),
        fs::read(run_out.join("analysis/stats.json")).unwrap()
    );
    assert_eq!(
        fs::read(&heat).unwrap(),
        fs::read(run_out.join("analysis/heatmap.png")).unwrap()
    );

    let report = ufcsr(&["report", "--stats", p(&analysis.join("stats.json"))]);
    assert_eq!(report.status.code(), Some(0));
    let text = stdout(&report);
    // only Front is visible; zero-count ties fill the rest by name
    for part in ["Front", "Back", "Bottom", "Left", "Right"] {
        assert!(text.contains(part), "{text}");
    }
    assert!(!text.contains("Top"), "{text}");
}

#[test]
fn foreign_colors_fail_strict_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = fixtures::write_cube_scenario(dir.path(), 2).unwrap();
    let caps = dir.path().join("caps");
    let pidt = dir.path().join("pidt");
    assert_eq!(
        ufcsr(&[
            "render",
            "--scenario",
            p(&scenario),
            "--out",
            p(&caps),
            "--scale",
            "10"
        ])
        .status
        .code(),
        Some(0)
    );
    assert_eq!(
        ufcsr(&[
            "bake-pidt",
            "--mesh",
            p(&dir.path().join("cube.obj")),
            "--out",
            p(&pidt)
        ])
        .status
        .code(),
        Some(0)
    );

    // paint a color no texel owns into the center tile of the first frame
    let manifest = Manifest::read(&caps).unwrap();
    let rec = manifest
        .records
        .iter()
        .find(|r| r.row == 2 && r.col == 2)
        .unwrap();
    let path = caps.join(&rec.file);
    let mut tile = ColorImage::read_png(&path).unwrap();
    tile.set(0, 0, ColorCode::new(0xFFFFFF).unwrap());
    tile.write_png(&path).unwrap();

    let a = dir.path().join("a");
    let args = [
        "analyze",
        "--captures",
        p(&caps),
        "--pidt",
        p(&pidt),
        "--out",
        p(&a),
    ];
    assert_eq!(ufcsr(&args).status.code(), Some(0));
    let strict = ufcsr(&[&args[..], &["--strict"]].concat());
    assert_eq!(strict.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("unowned"));
}

#[test]
fn oracle_check_reports_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = fixtures::write_cube_scenario(dir.path(), 4).unwrap();
    let out = dir.path().join("oc");
    let o = ufcsr(&[
        "oracle-check",
        "--scenario",
        p(&scenario),
        "--scale",
        "10",
        "--out",
        p(&out),
        "--workers",
        "2",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    assert!(text.contains("agreement:"), "{text}");
    assert!(text.contains("foreign colors: 0"), "{text}");
    assert!(out.join("disagreement.png").exists());
}

#[test]
fn gen_palette_writes_the_full_texture() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/fcsp.png");
    assert_eq!(
        ufcsr(&["gen-palette", "--out", p(&path)]).status.code(),
        Some(0)
    );
    let img = ColorImage::read_png(&path).unwrap();
    assert_eq!((img.width(), img.height()), (4096, 4096));
    assert_eq!(img.get(4095, 4095).value(), 0xFF_FFFF);
    assert_eq!(
        ufcsr(&["--workers", "0", "gen-palette", "--out", p(&path)])
            .status
            .code(),
        Some(2)
    );
}
