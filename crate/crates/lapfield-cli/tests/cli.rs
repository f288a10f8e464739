//! End-to-end tests of the `lapfield` binary: exit-code discipline,
//! round-trips, reproducibility, and file-format failure modes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lapfield"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../lapfield/assets")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn no_arguments_prints_usage_and_exits_one() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn version_reports_format_compatibility() {
    let out = run(&["--version"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("LAPC v1"), "{text}");
    assert!(text.contains("lapfield-kernels v1"), "{text}");
}

#[test]
fn encode_decode_round_trip_reports_tiny_mse() {
    let dir = tempfile::tempdir().unwrap();
    let img = assets().join("images/natural01.png");
    let field = dir.path().join("field.lapc");
    let back = dir.path().join("back.png");

    let out = run(&[
        "encode",
        "--in",
        img.to_str().unwrap(),
        "--out",
        field.to_str().unwrap(),
        "--stencil",
        "k0",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(field.exists());

    let out = run(&[
        "decode",
        "--in",
        field.to_str().unwrap(),
        "--out",
        back.to_str().unwrap(),
        "--solver",
        "dst",
        "--reference",
        img.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let mse: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("mse "))
        .expect("mse line")
        .parse()
        .unwrap();
    assert!(mse < 1e-3, "round-trip mse {mse}");
    assert!(back.exists());
}

#[test]
fn corrupted_container_exits_two_with_bad_magic() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.lapc");
    std::fs::write(&bad, b"XXXX not a container").unwrap();
    let out_png = dir.path().join("out.png");
    let out = run(&[
        "decode",
        "--in",
        bad.to_str().unwrap(),
        "--out",
        out_png.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad magic"), "{}", stderr(&out));
    assert!(!out_png.exists(), "failed decode must not write output");
}

#[test]
fn wcnn_without_checkpoint_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "decode",
        "--in",
        dir.path().join("x.lapc").to_str().unwrap(),
        "--out",
        dir.path().join("x.png").to_str().unwrap(),
        "--solver",
        "wcnn",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--checkpoint"));
}

#[test]
fn decode_with_pretrained_checkpoint_works() {
    let dir = tempfile::tempdir().unwrap();
    let img = assets().join("images/natural02.png");
    let field = dir.path().join("f.lapc");
    let back = dir.path().join("b.png");
    let ckpt = assets().join("kernels/reference_5x5.json");

    let out = run(&[
        "encode",
        "--in",
        img.to_str().unwrap(),
        "--out",
        field.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = run(&[
        "decode",
        "--in",
        field.to_str().unwrap(),
        "--out",
        back.to_str().unwrap(),
        "--solver",
        "wcnn",
        "--checkpoint",
        ckpt.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(back.exists());
}

fn write_training_dir(dir: &Path, count: usize) {
    for i in 0..count {
        let img = lapfield::synth::natural_image(48, 48, 1, 500 + i as u64);
        lapfield::io::save_png(&dir.join(format!("img{i:02}.png")), &img).unwrap();
    }
}

#[test]
fn train_is_reproducible_and_writes_checkpoint_and_record() {
    let data = tempfile::tempdir().unwrap();
    write_training_dir(data.path(), 4);
    let out_dir = tempfile::tempdir().unwrap();
    let ckpt_a = out_dir.path().join("a.json");
    let ckpt_b = out_dir.path().join("b.json");

    let train = |ckpt: &Path| {
        let out = run(&[
            "--seed",
            "9",
            "train",
            "--data",
            data.path().to_str().unwrap(),
            "--patch-size",
            "16",
            "--patches",
            "12",
            "--batch",
            "4",
            "--lr",
            "1e-3",
            "--epochs",
            "2",
            "--kernel-size",
            "3",
            "--out",
            ckpt.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    };
    train(&ckpt_a);
    train(&ckpt_b);

    let a = std::fs::read(&ckpt_a).unwrap();
    let b = std::fs::read(&ckpt_b).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "same seed must give identical checkpoints");
    let rec = std::fs::read_to_string(ckpt_a.with_extension("csv")).unwrap();
    assert!(rec.starts_with("epoch,train_loss,heldout_loss"));
    assert_eq!(rec.lines().count(), 3); // header + 2 epochs
}

#[test]
fn eval_baseline_dst_is_nearly_lossless_and_compare_adds_a_column() {
    let data = tempfile::tempdir().unwrap();
    write_training_dir(data.path(), 2);
    let out_dir = tempfile::tempdir().unwrap();
    let csv_path = out_dir.path().join("eval.csv");

    let out = run(&[
        "eval",
        "--data",
        data.path().to_str().unwrap(),
        "--baseline-dst",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let mean: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("mean mse (dst): "))
        .expect("mean line")
        .parse()
        .unwrap();
    assert!(mean < 1e-3, "dst baseline mse {mean}");
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("image,mse\n"));

    // Comparison mode: two value columns, one per method.
    let ckpt = assets().join("kernels/reference_5x5.json");
    let out = run(&[
        "eval",
        "--data",
        data.path().to_str().unwrap(),
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--compare",
        ckpt.to_str().unwrap(),
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("image,mse,mse_compare\n"), "{csv}");
    for line in csv.lines().skip(1) {
        assert_eq!(line.split(',').count(), 3, "{line}");
    }
}

#[test]
fn eval_without_method_is_a_usage_error() {
    let out = run(&["eval", "--data", "/tmp"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn stats_writes_distribution_csv() {
    let data = tempfile::tempdir().unwrap();
    write_training_dir(data.path(), 3);
    let out_dir = tempfile::tempdir().unwrap();
    let csv_path = out_dir.path().join("dist.csv");
    let out = run(&[
        "stats",
        "--data",
        data.path().to_str().unwrap(),
        "--out",
        csv_path.to_str().unwrap(),
        "--bins",
        "33",
        "--gradients",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("bin_center,mean_density,mean_log10_density"));
    assert!(csv.contains("img003_density"));
    assert_eq!(csv.lines().count(), 34);
    let grad = std::fs::read_to_string(out_dir.path().join("dist_gradient.csv")).unwrap();
    assert!(grad.starts_with("bin_center,gradient_x_density,gradient_y_density"));
}

#[test]
fn spectrum_writes_csv_and_heatmap() {
    let out_dir = tempfile::tempdir().unwrap();
    let csv_path = out_dir.path().join("spec.csv");
    let png_path = out_dir.path().join("spec.png");
    let ckpt = assets().join("kernels/reference_5x5.json");
    let out = run(&[
        "spectrum",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--out",
        csv_path.to_str().unwrap(),
        "--fft-size",
        "16",
        "--png",
        png_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("kernel,u,v,magnitude"));
    assert_eq!(csv.lines().count(), 1 + 3 * 16 * 16);
    assert!(png_path.exists());
}

#[test]
fn bench_writes_sorted_csv() {
    let out_dir = tempfile::tempdir().unwrap();
    let csv_path = out_dir.path().join("bench.csv");
    let out = run(&[
        "bench",
        "--solvers",
        "dst,cholesky",
        "--sizes",
        "24,16",
        "--reps",
        "3",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("cholesky,16"));
    assert!(rows[1].starts_with("cholesky,24"));
    assert!(rows[2].starts_with("dst,16"));
    assert!(rows[3].starts_with("dst,24"));
}

#[test]
fn bench_wcnn_without_checkpoint_is_a_usage_error() {
    let out = run(&[
        "bench",
        "--solvers",
        "wcnn",
        "--sizes",
        "16",
        "--reps",
        "3",
        "--out",
        "/tmp/never-written.csv",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!Path::new("/tmp/never-written.csv").exists());
}
