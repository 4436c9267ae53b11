use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use nlm_bench::config::{ExperimentConfig, FilterKind, FilterSpec, HSetting, ImageEntry};
use nlm_bench::report::{to_csv, to_markdown, MISSING};
use nlm_bench::seed::derive_seed;
use nlm_bench::{calibrate_h, run_and_persist, run_experiment, run_filter, Status};
use nlm_core::{add_gaussian_noise, load_image, rmse, NoiseSpec};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn fixture_config(out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_file(fixtures().join("fixture.toml")).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn entry(id: &str, file: &str) -> ImageEntry {
    ImageEntry {
        id: id.into(),
        path: fixtures().join(file),
    }
}

fn small_config(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        images: vec![entry("steps", "steps.pgm")],
        noise_levels: vec![0.1],
        filters: vec![
            FilterSpec::new("NLM", FilterKind::Nlm),
            FilterSpec::new("MK-NLM", FilterKind::MkNlm),
        ],
        seed: 3,
        output_dir: out.to_path_buf(),
        emit_residuals: false,
        crop: Some(32),
    }
}

#[test]
fn one_image_one_level_two_filters() {
    let dir = tempfile::tempdir().unwrap();
    let table = run_experiment(&small_config(dir.path())).unwrap();
    assert_eq!(table.rows.len(), 2);
    assert_eq!(table.rows.iter().filter(|r| r.best_rmse).count(), 1);
    assert_eq!(table.rows.iter().filter(|r| r.best_ssim).count(), 1);
    assert!(table.rows.iter().all(|r| r.status == Status::Ok));
    assert_eq!(table.rows[0].filter_id, "NLM");
    assert_eq!(table.rows[1].filter_id, "MK-NLM");
}

#[test]
fn one_row_per_triple_and_markers_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_config(dir.path());
    let table = run_experiment(&cfg).unwrap();
    assert_eq!(table.rows.len(), 3 * 4 * 2);
    for image in &table.image_ids {
        for &level in &table.noise_levels {
            let cell: Vec<_> = table
                .rows
                .iter()
                .filter(|r| &r.image_id == image && r.noise_level == level)
                .collect();
            assert_eq!(cell.len(), 2);
            assert_eq!(cell.iter().filter(|r| r.best_rmse).count(), 1);
            assert_eq!(cell.iter().filter(|r| r.best_ssim).count(), 1);
            let best = cell.iter().find(|r| r.best_rmse).unwrap().rmse.unwrap();
            assert!(cell.iter().all(|r| r.rmse.unwrap() >= best));
            // Every filter of a cell consumed the same noisy image.
            assert_eq!(cell[0].noisy_digest, cell[1].noisy_digest);
            assert_eq!(cell[0].noisy_rmse, cell[1].noisy_rmse);
        }
    }
    let digests: std::collections::HashSet<_> =
        table.rows.iter().map(|r| r.noisy_digest.clone()).collect();
    assert_eq!(digests.len(), 12);
}

#[test]
fn filters_run_on_the_noise_the_seed_describes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let table = run_experiment(&cfg).unwrap();
    let clean = load_image(fixtures().join("steps.pgm"))
        .unwrap()
        .center_crop(32);
    let noisy = add_gaussian_noise(
        &clean,
        &NoiseSpec::new(0.1, derive_seed(3, "steps", 0.1)).unwrap(),
    );
    let spec = &cfg.filters[1];
    let out = run_filter(spec, &noisy, spec.resolve_h(0.1).h).unwrap();
    assert_eq!(table.rows[1].rmse, Some(rmse(&out, &clean).unwrap()));
    assert_eq!(
        table.rows[1].noisy_rmse,
        Some(rmse(&noisy, &clean).unwrap())
    );
}

#[test]
fn ties_go_to_the_first_listed_filter() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.filters = vec![
        FilterSpec::new("A", FilterKind::Nlm),
        FilterSpec::new("B", FilterKind::Nlm),
    ];
    let table = run_experiment(&cfg).unwrap();
    assert_eq!(table.rows[0].rmse, table.rows[1].rmse);
    assert!(table.rows[0].best_rmse && table.rows[0].best_ssim);
    assert!(!table.rows[1].best_rmse && !table.rows[1].best_ssim);
}

#[test]
fn csv_is_deterministic_and_columns_are_fixed() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_and_persist(&fixture_config(a.path())).unwrap();
    run_and_persist(&fixture_config(b.path())).unwrap();
    let x = fs::read(a.path().join("results.csv")).unwrap();
    let y = fs::read(b.path().join("results.csv")).unwrap();
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "image_id,noise_level,sigma,filter_id,status,rmse,ssim,best_rmse,best_ssim,\
         noisy_rmse,mean_abs_residual,noisy_digest,params_digest"
    );
    assert_eq!(text.lines().count(), 25);
    assert!(a.path().join("results.md").exists());
}

#[test]
fn adding_an_image_keeps_existing_cells() {
    let dir = tempfile::tempdir().unwrap();
    let base = small_config(dir.path());
    let mut wider = base.clone();
    wider.images.insert(0, entry("grad", "gradient.pgm"));
    let a = run_experiment(&base).unwrap();
    let b = run_experiment(&wider).unwrap();
    for row in &a.rows {
        let other = b
            .row(&row.image_id, row.noise_level, &row.filter_id)
            .unwrap();
        assert_eq!(row.rmse, other.rmse);
        assert_eq!(row.noisy_digest, other.noisy_digest);
    }
}

#[test]
fn failed_cells_are_recorded_and_render_as_dash() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.images.push(entry("ghost", "no_such_image.pgm"));
    let table = run_and_persist(&cfg).unwrap();
    assert_eq!(table.rows.len(), 4);
    let ghost: Vec<_> = table
        .rows
        .iter()
        .filter(|r| r.image_id == "ghost")
        .collect();
    assert_eq!(ghost.len(), 2);
    for r in &ghost {
        assert!(matches!(&r.status, Status::Failed { kind, .. } if kind == "FileNotFound"));
        assert!(!r.best_rmse && !r.best_ssim);
        assert_eq!(r.rmse, None);
    }
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let line = csv.lines().find(|l| l.starts_with("ghost,")).unwrap();
    assert!(line.contains(",error:FileNotFound,"));
    assert!(line.contains(&format!(",{MISSING},{MISSING},false,false,")));
    let md = to_markdown(&table);
    let row = md.lines().find(|l| l.starts_with("| ghost |")).unwrap();
    assert_eq!(row.matches(MISSING).count(), 2);
    assert!(md.contains("Failed cells"));
    // The healthy image is unaffected.
    assert!(table
        .rows
        .iter()
        .filter(|r| r.image_id == "steps")
        .all(|r| r.status == Status::Ok));
}

#[test]
fn markdown_grid_shape() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.crop = Some(16);
    cfg.noise_levels = vec![0.05, 0.10, 0.15, 0.20];
    cfg.images = vec![
        entry("a", "steps.pgm"),
        entry("b", "gradient.pgm"),
        entry("c", "checkerboard.pgm"),
        entry("d", "steps.pgm"),
        entry("e", "gradient.pgm"),
    ];
    let table = run_experiment(&cfg).unwrap();
    assert_eq!(table.rows.len(), 40);
    let md = to_markdown(&table);
    let lines: Vec<&str> = md.lines().filter(|l| l.starts_with('|')).collect();
    let header = lines[0];
    for level in ["5%", "10%", "15%", "20%"] {
        assert!(header.contains(&format!("{level} RMSE | {level} SSIM")));
    }
    assert_eq!(header.matches('|').count(), 2 + 8 + 1);
    let body = &lines[2..];
    assert_eq!(body.len(), 10);
    let groups: Vec<&str> = body
        .iter()
        .map(|l| l.split('|').nth(1).unwrap().trim())
        .filter(|s| !s.is_empty())
        .collect();
    assert_eq!(groups, ["a", "b", "c", "d", "e"]);
    // One bold RMSE and one bold SSIM per (image, level).
    assert_eq!(md.matches("**").count(), 2 * 5 * 4 * 2);
}

#[test]
fn params_digest_records_resolved_h() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.filters[1].h = HSetting::Factor(0.55);
    let table = run_experiment(&cfg).unwrap();
    let nlm = &table.rows[0].params_digest;
    let c = FilterKind::Nlm.default_factor(0.1);
    assert!(nlm.contains(&format!("h={:.6}", c * 25.5)), "{nlm}");
    assert!(nlm.contains(&format!("c={c}(calibrated-default)")));
    assert!(nlm.contains("rng=chacha20-ziggurat"));
    assert!(nlm.contains("seed=3"));
    assert!(nlm.contains("size=32x32"));
    let mk = &table.rows[1].params_digest;
    assert!(
        mk.contains("c=0.55(factor)") && mk.contains("form=difference"),
        "{mk}"
    );
}

#[test]
fn calibration_picks_the_better_factor() {
    let clean = load_image(fixtures().join("steps.pgm")).unwrap();
    let level = 0.1;
    let noisy = add_gaussian_noise(&clean, &NoiseSpec::new(level, 11).unwrap());
    let spec = FilterSpec::new("m", FilterKind::MkNlm);

    let single = calibrate_h(&clean, &noisy, level, &spec, &[0.7]).unwrap();
    assert_eq!(single.best, 0.7);
    assert_eq!(single.table.len(), 1);

    let c = 0.4;
    let cal = calibrate_h(&clean, &noisy, level, &spec, &[100.0 * c, c]).unwrap();
    assert_eq!(cal.best, c);
    let over = run_filter(&spec, &noisy, 100.0 * c * 25.5).unwrap();
    let good = run_filter(&spec, &noisy, c * 25.5).unwrap();
    assert!(rmse(&over, &clean).unwrap() > rmse(&good, &clean).unwrap());
    assert_eq!(cal.table[0].0, 100.0 * c);

    // Vanishing h leaves the input untouched, so both runs tie exactly.
    let tie = calibrate_h(&clean, &noisy, level, &spec, &[0.002, 0.001]).unwrap();
    assert_eq!(tie.table[0].1, tie.table[1].1);
    assert_eq!(tie.best, 0.001);

    assert!(calibrate_h(&clean, &noisy, level, &spec, &[]).is_err());
    assert!(calibrate_h(&clean, &noisy, level, &spec, &[-1.0]).is_err());
}

#[test]
fn residual_images_are_written_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.emit_residuals = true;
    run_and_persist(&cfg).unwrap();
    let images = dir.path().join("images");
    for name in [
        "steps_0.1_noisy.png",
        "steps_0.1_NLM_filtered.png",
        "steps_0.1_NLM_residual.png",
        "steps_0.1_MK-NLM_filtered.png",
        "steps_0.1_MK-NLM_residual.png",
    ] {
        let img = load_image(images.join(name)).unwrap();
        assert_eq!(img.dimensions(), (32, 32), "{name}");
    }
}

#[test]
fn csv_quotes_nothing_it_does_not_have_to() {
    let dir = tempfile::tempdir().unwrap();
    let table = run_experiment(&small_config(dir.path())).unwrap();
    let csv = to_csv(&table).unwrap();
    assert!(!csv.contains('"'));
    for line in csv.lines() {
        assert_eq!(line.split(',').count(), 13);
    }
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_nlm-bench"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn cli_metrics_and_errors() {
    let steps = fixtures().join("steps.pgm");
    let grad = fixtures().join("gradient.pgm");
    let (code, out, _) = cli(&["metrics", steps.to_str().unwrap(), steps.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "rmse=0.000000 ssim=1.000000");
    let (code, out, _) = cli(&["metrics", steps.to_str().unwrap(), grad.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.starts_with("rmse="));

    let (code, _, err) = cli(&["metrics", "/no/such.pgm", steps.to_str().unwrap()]);
    assert_ne!(code, 0);
    assert_eq!(err.lines().count(), 1);
    assert!(
        err.starts_with("error kind=FileNotFound message=\""),
        "{err}"
    );

    let (code, _, err) = cli(&[
        "denoise",
        "--image",
        steps.to_str().unwrap(),
        "--filter",
        "bm3d",
        "--out",
        "/tmp/x.png",
    ]);
    assert_ne!(code, 0);
    assert!(err.starts_with("error kind=ConfigError"), "{err}");

    let (code, _, err) = cli(&["bench", "--bogus"]);
    assert_ne!(code, 0);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error kind=UsageError"), "{err}");

    let (code, _, err) = cli(&[
        "denoise",
        "--image",
        steps.to_str().unwrap(),
        "--patch-side",
        "4",
        "--h",
        "5",
        "--out",
        "/tmp/x.png",
    ]);
    assert_ne!(code, 0);
    assert!(err.starts_with("error kind=EvenSide"), "{err}");
}

#[test]
fn cli_denoise_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("den.pgm");
    let steps = fixtures().join("steps.pgm");
    let (code, stdout, err) = cli(&[
        "denoise",
        "--image",
        steps.to_str().unwrap(),
        "--filter",
        "nlm",
        "--noise-level",
        "0.1",
        "--seed",
        "4",
        "--search-radius",
        "5",
        "--center-weight",
        "max",
        "--out",
        out.to_str().unwrap(),
        "--emit-residuals",
    ]);
    assert_eq!(code, 0, "{err}");
    let fields: Vec<f64> = stdout
        .split_whitespace()
        .map(|kv| kv.split('=').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(fields.len(), 4);
    assert!(
        fields[2] < fields[1],
        "filtered rmse should beat noisy: {stdout}"
    );
    assert_eq!(load_image(&out).unwrap().dimensions(), (64, 64));
    assert!(dir.path().join("den_residual.pgm").exists());
    assert!(dir.path().join("den_input.pgm").exists());

    let (code, _, err) = cli(&[
        "denoise",
        "--image",
        steps.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_ne!(code, 0);
    assert!(err.starts_with("error kind=ConfigError"));
}

#[test]
fn cli_bench_and_calibrate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixtures().join("fixture.toml");
    let (code, stdout, err) = cli(&[
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--noise-level",
        "0.1",
        "--filter",
        "mknlm",
        "--format",
        "csv",
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(stdout.lines().count(), 1 + 3);
    assert_eq!(
        stdout,
        fs::read_to_string(dir.path().join("results.csv")).unwrap()
    );

    let steps = fixtures().join("steps.pgm");
    let (code, stdout, err) = cli(&[
        "calibrate",
        "--image",
        steps.to_str().unwrap(),
        "--filter",
        "nlm",
        "--noise-level",
        "0.1",
        "--grid",
        "0.5,1.35,40",
        "--format",
        "csv",
    ]);
    assert_eq!(code, 0, "{err}");
    let best: Vec<&str> = stdout.lines().filter(|l| l.ends_with(",true")).collect();
    assert_eq!(best.len(), 1);
    assert!(best[0].starts_with("steps,nlm,0.1,1.35,"), "{stdout}");
}
