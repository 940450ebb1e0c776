use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use greenmask::io;
use greenmask::metrics::EvalReport;
use greenmask_cli::config::ExperimentConfig;
use greenmask_cli::manifest;
use greenmask_cli::pipeline;

fn greenmask(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_greenmask")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = greenmask(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

#[test]
fn exit_codes_by_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let bad = write_config(dir.path(), "masks.count = 0\n");
    assert_eq!(greenmask(&["simulate", "--config", s(&bad), "--out", s(&out)]).status.code(), Some(2));
    let unknown = write_config(dir.path(), "masks.colour = 1\n");
    let res = greenmask(&["simulate", "--config", s(&unknown), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("colour"));
    let missing = dir.path().join("missing.toml");
    assert_eq!(greenmask(&["simulate", "--config", s(&missing), "--out", s(&out)]).status.code(), Some(4));
    let empty = dir.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    assert_eq!(greenmask(&["reconstruct", "--input", s(&empty), "--out", s(&out)]).status.code(), Some(4));
    let unreachable = write_config(dir.path(), "size = 64\nacquisition.snr_db = 90.0\n");
    assert_eq!(greenmask(&["simulate", "--config", s(&unreachable), "--out", s(&out)]).status.code(), Some(2));
}

#[test]
fn generate_masks_writes_bitmaps_and_spectra() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "size = 200\nmasks.count = 1\n");
    let out = dir.path().join("green");
    ok(&["generate-masks", "--config", s(&cfg), "--out", s(&out)]);
    let mask = io::load_mask(&out.join("masks/mask_000.pbm")).unwrap();
    assert_eq!(mask.dims(), (200, 200));
    let rows = csv_rows(&out.join("masks.csv"));
    let eta: f64 = rows[0][6].parse().unwrap();
    assert!(eta <= 0.11, "green η {eta}");
    let spectrum = fs::read_to_string(out.join("masks/mask_000_spectrum.csv")).unwrap();
    assert!(spectrum.starts_with("bin_center,mean_power\n"));
    assert!(manifest::verify(&out).unwrap().is_empty());

    let cfg = write_config(dir.path(), "masks.kind = \"white\"\nmasks.sigma = 1.0\nmasks.count = 2\n");
    let out = dir.path().join("open");
    ok(&["generate-masks", "--config", s(&cfg), "--out", s(&out)]);
    let mask = io::load_mask(&out.join("masks/mask_001.pbm")).unwrap();
    assert!(mask.bits().iter().all(|&b| b == 1));
}

#[test]
fn simulate_calibrates_snr_and_stores_wide_graymaps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "acquisition.truncation = 0.2\nacquisition.snr_db = 26.5\n");
    let out = dir.path().join("sim");
    ok(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    for i in 0..3 {
        let map = io::read_pgm(&out.join(format!("measurements/y_{i:03}.pgm"))).unwrap();
        assert_eq!(map.maxval, 4095);
    }
    for row in csv_rows(&out.join("readout.csv")) {
        let snr: f64 = row[3].parse().unwrap();
        assert!((snr - 26.5).abs() <= 0.3, "{snr}");
    }

    let cfg = write_config(dir.path(), "sensor.enabled = false\n");
    let full = dir.path().join("full");
    ok(&["simulate", "--config", s(&cfg), "--out", s(&full)]);
    let ms = pipeline::load_measurements(&full).unwrap();
    assert_eq!(ms.truncation(), 0.0);
    assert!(ms.kept_band().iter().all(|&k| k));
}

#[test]
fn reconstruct_and_evaluate_match_in_memory_run() {
    let dir = tempfile::tempdir().unwrap();
    let text = "seed = 4\nacquisition.truncation = 0.2\nacquisition.snr_db = 24.5\nsolver.max_iters = 60\n";
    let cfg_path = write_config(dir.path(), text);
    let (sim, rec, eval) = (dir.path().join("sim"), dir.path().join("rec"), dir.path().join("eval"));
    ok(&["simulate", "--config", s(&cfg_path), "--out", s(&sim)]);
    ok(&["reconstruct", "--input", s(&sim), "--alpha", "0.05", "--out", s(&rec)]);
    ok(&["evaluate", "--input", s(&rec), "--out", s(&eval)]);

    let rec_manifest = manifest::read(&rec.join("manifest.json")).unwrap();
    assert_eq!(rec_manifest.config.solver.alpha, 0.05);
    assert_eq!(rec_manifest.input.as_deref(), Some(sim.as_path()));

    let trace = fs::read_to_string(rec.join("trace.csv")).unwrap();
    let rows: Vec<&str> = trace.lines().skip(1).collect();
    assert!(!rows.is_empty() && rows.len() <= 60);

    let mut cfg = ExperimentConfig::from_toml(text).unwrap();
    cfg.solver.alpha = 0.05;
    let in_memory = pipeline::run(&cfg).unwrap();
    let report: EvalReport = serde_json::from_str(&fs::read_to_string(eval.join("report.json")).unwrap()).unwrap();
    assert!((report.sse_amplitude_db - in_memory.report.sse_amplitude_db).abs() <= 1e-9);
    assert!((report.sse_phase_db - in_memory.report.sse_phase_db).abs() <= 1e-9);

    let header = csv::Reader::from_path(eval.join("report.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(
        header.iter().collect::<Vec<_>>(),
        ["mask_kind", "sigma", "r1", "snr_db", "m", "sse_amp_db", "sse_phase_db"]
    );
}

#[test]
fn evaluate_identical_truth_hits_floor_and_alignment_flag() {
    let dir = tempfile::tempdir().unwrap();
    let (sim, eval) = (dir.path().join("sim"), dir.path().join("eval"));
    let cfg = write_config(dir.path(), "sensor.enabled = false\n");
    ok(&["simulate", "--config", s(&cfg), "--out", s(&sim)]);
    // Score the truth against itself by pointing --input at a copy.
    let fake = dir.path().join("fake");
    fs::create_dir_all(&fake).unwrap();
    let truth = io::load_complex(&sim.join("truth.json")).unwrap();
    io::save_complex(&fake, "estimate", &truth).unwrap();
    ok(&["evaluate", "--input", s(&fake), "--truth", s(&sim.join("truth.json")), "--no-phase-align", "--out", s(&eval)]);
    let report: EvalReport = serde_json::from_str(&fs::read_to_string(eval.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.sse_amplitude_db, -120.0);
    assert_eq!(report.sse_phase_db, -120.0);
    assert!(!report.phase_aligned);
    assert!(report.floor_applied);
}

#[test]
fn sweep_grid_shapes_and_failed_cells() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "size = 64\nsolver.max_iters = 3\nacquisition.truncation = 0.2\nsweep.grid = \"kind-snr\"\n",
    );
    let out = dir.path().join("table1");
    ok(&["sweep", "--config", s(&cfg), "--jobs", "2", "--out", s(&out)]);
    let rows = csv_rows(&out.join("sweep.csv"));
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| &r[9] == "ok"));

    let cfg = write_config(
        dir.path(),
        "size = 64\nsolver.max_iters = 3\nacquisition.snr_db = 26.5\nsweep.repeats = 2\n",
    );
    let out = dir.path().join("table2");
    ok(&["sweep", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(csv_rows(&out.join("sweep.csv")).len(), 20);
    assert_eq!(csv_rows(&out.join("replicates.csv")).len(), 40);
    assert!(out.join("cells/019/rep_1/trace.csv").is_file());

    // An unreachable SNR fails its cell; the others still run.
    let cfg = write_config(
        dir.path(),
        "size = 64\nsolver.max_iters = 3\nsweep.grid = \"kind-snr\"\nsweep.kinds = [\"green\"]\nsweep.snr_db = [26.5, 90.0]\n",
    );
    let out = dir.path().join("partial");
    ok(&["sweep", "--config", s(&cfg), "--out", s(&out)]);
    let rows = csv_rows(&out.join("sweep.csv"));
    assert_eq!(&rows[0][9], "ok");
    assert_eq!(&rows[1][9], "failed");
    assert!(rows[1][10].contains("reachable"));
}

#[test]
fn single_cell_sweep_equals_pipeline_run() {
    let dir = tempfile::tempdir().unwrap();
    let text = "size = 64\nsolver.max_iters = 20\nacquisition.truncation = 0.2\nsweep.sigmas = [0.4]\nsweep.r1s = [2.0]\n";
    let cfg_path = write_config(dir.path(), text);
    let out = dir.path().join("one");
    ok(&["sweep", "--config", s(&cfg_path), "--jobs", "1", "--out", s(&out)]);
    let rows = csv_rows(&out.join("sweep.csv"));
    assert_eq!(rows.len(), 1);
    let mut cfg = ExperimentConfig::from_toml(text).unwrap();
    cfg.masks.sigma = 0.4;
    cfg.masks.r1 = 2.0;
    let direct = pipeline::run(&cfg).unwrap();
    assert_eq!(rows[0][6].parse::<f64>().unwrap(), direct.report.sse_amplitude_db);
    assert_eq!(rows[0][7].parse::<f64>().unwrap(), direct.report.sse_phase_db);
}

#[test]
fn sweep_output_does_not_depend_on_job_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "size = 64\nsolver.max_iters = 5\nsweep.sigmas = [0.3, 0.5]\nsweep.r1s = [1.0, 1.5]\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["sweep", "--config", s(&cfg), "--jobs", "1", "--out", s(&a)]);
    ok(&["sweep", "--config", s(&cfg), "--jobs", "4", "--out", s(&b)]);
    assert_eq!(fs::read(a.join("manifest.json")).unwrap(), fs::read(b.join("manifest.json")).unwrap());
}

#[test]
fn kernel_experiment_writes_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "size = 64\nsensor.enabled = false\nsolver.max_iters = 40\n");
    let out = dir.path().join("kernel");
    ok(&["kernel-experiment", "--config", s(&cfg), "--alpha", "0.02", "--out", s(&out)]);
    let m = manifest::read(&out.join("manifest.json")).unwrap();
    assert_eq!(m.config.kernel.alpha, 0.02);
    let rows = csv_rows(&out.join("kernel.csv"));
    assert_eq!(rows.iter().map(|r| r[0].to_string()).collect::<Vec<_>>(), ["green", "white", "blue"]);
    let profiles = fs::read_to_string(out.join("profiles.csv")).unwrap();
    assert!(profiles.starts_with("col,truth,green,white,blue\n"));
    assert_eq!(profiles.lines().count(), 65);
    assert!(out.join("kernel.json").is_file());
}
