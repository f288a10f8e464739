use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use lapfield::analytics::{
    bench_csv, benchmark_solvers, dataset_distribution, distribution_csv, gradient_histograms,
    kernel_spectrum, spectrum_csv, DEFAULT_FIELD_BINS,
};
use lapfield::codec::{decode_unclamped, deserialize, encode, serialize, StorageMode};
use lapfield::io::{list_images, load_png, save_png};
use lapfield::solvers::{SolverConfig, SolverKind};
use lapfield::train::{
    holdout_split, mse_loss, sample_patches_from, train_loop, TrainConfig,
};
use lapfield::wcnn::{default_levels, forward, kernels_to_json, load_kernels, KernelSet};
use lapfield::{laplacian, stencil, Field, StencilId};

const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\ncontainer format: LAPC v1\nkernel checkpoint: lapfield-kernels v1"
);

/// CLI failures, grouped by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Exit 1: the invocation itself is wrong.
    Usage(String),
    /// Exit 2: inputs cannot be read or are malformed.
    Data(String),
    /// Exit 3: NaN or required convergence not reached.
    Numerical(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

fn classify(err: lapfield::Error) -> CliError {
    use lapfield::Error as E;
    match err {
        E::NanLoss { .. } | E::NotPositiveDefinite { .. } | E::NonFinite { .. } => {
            CliError::Numerical(err.to_string())
        }
        other => CliError::Data(other.to_string()),
    }
}

type CliResult<T> = Result<T, CliError>;

trait Classify<T> {
    fn or_data(self) -> CliResult<T>;
}

impl<T> Classify<T> for lapfield::Result<T> {
    fn or_data(self) -> CliResult<T> {
        self.map_err(classify)
    }
}

#[derive(Parser)]
#[command(
    name = "lapfield",
    version,
    long_version = LONG_VERSION,
    about = "Sparse Laplacian-field image codec and Poisson solver bench"
)]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Encode a PNG into a .lapc Laplacian-field container.
    Encode(EncodeArgs),
    /// Decode a .lapc container back into a PNG.
    Decode(DecodeArgs),
    /// Train the shared-kernel network on patches from an image directory.
    Train(TrainArgs),
    /// Mean reconstruction MSE of a checkpoint over a directory.
    Eval(EvalArgs),
    /// Laplacian-field distribution statistics over a directory.
    Stats(StatsArgs),
    /// Frequency spectra of a checkpoint's kernels.
    Spectrum(SpectrumArgs),
    /// Wall-time benchmark of the solvers.
    Bench(BenchArgs),
}

#[derive(Args)]
pub struct EncodeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "k0")]
    pub stencil: StencilId,
    /// Dead-zone threshold: |L| <= T is dropped.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    /// Quantization step (0 = none).
    #[arg(long, default_value_t = 0.0)]
    pub quant: f64,
    #[arg(long, default_value = "sparse")]
    pub mode: StorageMode,
}

#[derive(Args)]
pub struct DecodeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "dst")]
    pub solver: SolverKind,
    /// Kernel checkpoint (required for --solver wcnn).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// SOR relaxation factor (defaults to the model-problem optimum).
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub mg_levels: Option<usize>,
    /// Multigrid pre- and post-smoothing sweeps.
    #[arg(long, default_value_t = 2)]
    pub mg_smooth: usize,
    /// Print the reconstruction MSE against this image.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long, env = "LAPFIELD_DATA")]
    pub data: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub patch_size: usize,
    #[arg(long, default_value_t = 6400)]
    pub patches: usize,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub lr: f64,
    #[arg(long, default_value_t = 2000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub kernel_size: usize,
    /// Pyramid depth (defaults from the patch size).
    #[arg(long)]
    pub levels: Option<usize>,
    /// Fraction of images held out for validation.
    #[arg(long, default_value_t = 0.2)]
    pub holdout: f64,
    #[arg(long)]
    pub no_augment: bool,
    /// Also write the checkpoint every N epochs.
    #[arg(long, default_value_t = 0)]
    pub checkpoint_every: usize,
    /// Output checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
    /// Loss record CSV (defaults to the checkpoint path with .csv).
    #[arg(long)]
    pub record: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long, env = "LAPFIELD_DATA")]
    pub data: PathBuf,
    /// Kernel checkpoint to evaluate.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Evaluate the checkpoint-free DST direct solver instead.
    #[arg(long)]
    pub baseline_dst: bool,
    /// Second checkpoint: adds a comparison column.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write |U - GT| error maps (grayscale PNGs) into this directory.
    #[arg(long)]
    pub error_maps: Option<PathBuf>,
}

#[derive(Args)]
pub struct StatsArgs {
    #[arg(long, env = "LAPFIELD_DATA")]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_FIELD_BINS)]
    pub bins: usize,
    /// Histogram half-range R: bins span [-R, R].
    #[arg(long, default_value_t = 64.0)]
    pub range: f64,
    /// Also write forward-difference gradient histograms.
    #[arg(long)]
    pub gradients: bool,
}

#[derive(Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub fft_size: usize,
    /// Also render the three spectra side by side as a grayscale PNG.
    #[arg(long)]
    pub png: Option<PathBuf>,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Comma-separated solvers (cholesky, jacobi, gauss-seidel, sor, dst,
    /// multigrid, wcnn).
    #[arg(long, default_value = "dst,multigrid")]
    pub solvers: String,
    /// Comma-separated square resolutions.
    #[arg(long, default_value = "256,512,1024")]
    pub sizes: String,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Kernel checkpoint (required when benchmarking wcnn).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Encode(args) => cmd_encode(&cli, args),
        Command::Decode(args) => cmd_decode(&cli, args),
        Command::Train(args) => cmd_train(&cli, args),
        Command::Eval(args) => cmd_eval(&cli, args),
        Command::Stats(args) => cmd_stats(&cli, args),
        Command::Spectrum(args) => cmd_spectrum(&cli, args),
        Command::Bench(args) => cmd_bench(&cli, args),
    }
}

/// Write via a sibling temp file and rename, so failures leave no partial
/// output.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let tmp = temp_sibling(path);
    std::fs::write(&tmp, bytes).map_err(|e| CliError::Data(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::Data(format!("renaming {}: {e}", path.display())))?;
    Ok(())
}

fn save_png_atomic(path: &Path, image: &Field) -> CliResult<()> {
    // Keep the extension so the format stays inferable from the name.
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("png");
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!("{stem}.tmp.{ext}"));
    save_png(&tmp, image).or_data()?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::Data(format!("renaming {}: {e}", path.display())))?;
    Ok(())
}

fn temp_sibling(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or("output");
    path.with_file_name(format!("{name}.tmp"))
}

fn load_checkpoint(path: &Path) -> CliResult<KernelSet> {
    load_kernels(path).or_data()
}

fn cmd_encode(cli: &Cli, args: &EncodeArgs) -> CliResult<()> {
    let image = load_png(&args.input).or_data()?;
    let st = stencil(args.stencil);
    let encoded = encode(&image, &st, args.threshold, args.quant, args.mode).or_data()?;
    let bytes = serialize(&encoded);
    write_atomic(&args.out, &bytes)?;
    println!(
        "encoded {}x{}x{} with {}: {} bytes, sparsity {:.4}",
        encoded.height,
        encoded.width,
        encoded.channels,
        args.stencil,
        bytes.len(),
        encoded.sparsity_ratio()
    );
    if cli.verbose {
        println!(
            "threshold {} quant {} mode {:?}",
            args.threshold, args.quant, args.mode
        );
    }
    Ok(())
}

fn cmd_decode(cli: &Cli, args: &DecodeArgs) -> CliResult<()> {
    if args.solver == SolverKind::Wcnn && args.checkpoint.is_none() {
        return Err(CliError::Usage(
            "decode --solver wcnn requires --checkpoint".into(),
        ));
    }
    let bytes = std::fs::read(&args.input)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    let encoded = deserialize(&bytes).or_data()?;

    let mut config = SolverConfig::new(args.solver)
        .with_tolerance(args.tol)
        .with_max_iterations(args.max_iter);
    config.sor_omega = args.omega;
    config.mg_levels = args.mg_levels;
    config.mg_pre_sweeps = args.mg_smooth;
    config.mg_post_sweeps = args.mg_smooth;
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let kernels = match &args.checkpoint {
        Some(path) => Some(load_checkpoint(path)?),
        None => None,
    };
    let (u, report) = decode_unclamped(&encoded, &config, kernels.as_ref()).or_data()?;
    if let Some(report) = &report {
        if cli.verbose {
            println!(
                "{}: {} iterations, residual {:.3e}",
                report.solver,
                report.iterations,
                report.final_residual()
            );
        }
        if !report.converged {
            return Err(CliError::Numerical(format!(
                "{} did not reach tolerance {:.1e} within {} iterations (residual {:.3e})",
                report.solver,
                config.tolerance,
                config.max_iterations,
                report.final_residual()
            )));
        }
    }
    save_png_atomic(&args.out, &u.clamped())?;
    if let Some(reference) = &args.reference {
        let original = load_png(reference).or_data()?;
        if original.dims() != u.dims() {
            return Err(CliError::Data(format!(
                "reference dims {:?} do not match decoded {:?}",
                original.dims(),
                u.dims()
            )));
        }
        println!("mse {}", u.clamped().mse(&original));
    }
    println!("decoded {} -> {}", args.input.display(), args.out.display());
    Ok(())
}

fn load_image_dir(dir: &Path) -> CliResult<(Vec<PathBuf>, Vec<Field>)> {
    let paths = list_images(dir).or_data()?;
    if paths.is_empty() {
        return Err(CliError::Data(format!(
            "no PNG images in {}",
            dir.display()
        )));
    }
    let mut images = Vec::with_capacity(paths.len());
    for p in &paths {
        images.push(load_png(p).or_data()?);
    }
    Ok((paths, images))
}

fn cmd_train(cli: &Cli, args: &TrainArgs) -> CliResult<()> {
    if args.holdout <= 0.0 || args.holdout >= 1.0 {
        return Err(CliError::Usage("--holdout must lie in (0, 1)".into()));
    }
    let (_, images) = load_image_dir(&args.data)?;
    let channels = images[0].channels();
    if images.iter().any(|img| img.channels() != channels) {
        return Err(CliError::Data(
            "image directory mixes grayscale and RGB images".into(),
        ));
    }

    let (train_idx, hold_idx) = holdout_split(images.len(), args.holdout, cli.seed);
    let train_images: Vec<Field> = train_idx.iter().map(|&i| images[i].clone()).collect();
    let hold_images: Vec<Field> = hold_idx.iter().map(|&i| images[i].clone()).collect();
    let augment = !args.no_augment;
    let train_set =
        sample_patches_from(&train_images, args.patch_size, args.patches, augment, cli.seed)
            .or_data()?;
    let heldout_count = (args.patches / 5).max(8);
    let heldout_set = sample_patches_from(
        &hold_images,
        args.patch_size,
        heldout_count,
        augment,
        cli.seed ^ 0x5eed,
    )
    .or_data()?;

    let config = TrainConfig {
        batch_size: args.batch,
        learning_rate: args.lr,
        epochs: args.epochs,
        seed: cli.seed,
        kernel_size: args.kernel_size,
        n_levels: args.levels,
        patch_size: args.patch_size,
        patch_count: args.patches,
        augment,
        threads: cli.threads,
        checkpoint_interval: (args.checkpoint_every > 0).then_some(args.checkpoint_every),
        checkpoint_path: Some(args.out.clone()),
        ..TrainConfig::default()
    };

    println!(
        "training k={} on {} patches ({} held out), batch {}, lr {}, {} epochs",
        args.kernel_size,
        train_set.len(),
        heldout_set.len(),
        args.batch,
        args.lr,
        args.epochs
    );
    let (kernels, record) = train_loop(&config, &train_set, &heldout_set).map_err(classify)?;

    write_atomic(&args.out, kernels_to_json(&kernels).as_bytes())?;
    let record_path = args
        .record
        .clone()
        .unwrap_or_else(|| args.out.with_extension("csv"));
    write_atomic(&record_path, record.to_csv().as_bytes())?;

    println!(
        "held-out loss {:.4} -> {:.4}; checkpoint {} ({} parameters), record {}",
        record.initial_heldout_loss,
        record.final_heldout_loss(),
        args.out.display(),
        kernels.param_count(),
        record_path.display()
    );
    Ok(())
}

enum EvalMethod {
    Network(KernelSet),
    DstBaseline,
}

impl EvalMethod {
    fn name(&self) -> &'static str {
        match self {
            EvalMethod::Network(_) => "wcnn",
            EvalMethod::DstBaseline => "dst",
        }
    }

    fn reconstruct(&self, field: &Field) -> CliResult<Field> {
        match self {
            EvalMethod::Network(kernels) => {
                let kernels = if kernels.channels() == field.channels() {
                    kernels.clone()
                } else if kernels.channels() == 1 {
                    kernels.replicate(field.channels()).or_data()?
                } else {
                    return Err(CliError::Data(format!(
                        "checkpoint has {} channels, image has {}",
                        kernels.channels(),
                        field.channels()
                    )));
                };
                let levels = default_levels(field.height(), field.width());
                forward(&kernels, field, levels).or_data()
            }
            EvalMethod::DstBaseline => {
                lapfield::solvers::solve_dst(field, &stencil(StencilId::K0)).or_data()
            }
        }
    }
}

fn cmd_eval(_cli: &Cli, args: &EvalArgs) -> CliResult<()> {
    let main = match (&args.checkpoint, args.baseline_dst) {
        (Some(path), false) => EvalMethod::Network(load_checkpoint(path)?),
        (None, true) => EvalMethod::DstBaseline,
        (Some(_), true) => {
            return Err(CliError::Usage(
                "--checkpoint and --baseline-dst are mutually exclusive".into(),
            ))
        }
        (None, false) => {
            return Err(CliError::Usage(
                "eval needs --checkpoint or --baseline-dst".into(),
            ))
        }
    };
    let compare = match &args.compare {
        Some(path) => Some(EvalMethod::Network(load_checkpoint(path)?)),
        None => None,
    };

    if let Some(dir) = &args.error_maps {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    }

    let (paths, images) = load_image_dir(&args.data)?;
    let k0 = stencil(StencilId::K0);
    let mut csv = String::from("image,mse");
    if compare.is_some() {
        csv.push_str(",mse_compare");
    }
    csv.push('\n');

    let mut total = 0.0;
    let mut total_compare = 0.0;
    for (path, image) in paths.iter().zip(&images) {
        let field = laplacian(image, &k0).or_data()?;
        let u = main.reconstruct(&field)?;
        let mse = mse_loss(&u, image).or_data()?;
        total += mse;
        let name = path.file_name().unwrap().to_string_lossy();
        csv.push_str(&format!("{name},{mse}"));
        print!("{name}: mse {mse:.6}");
        if let Some(cmp) = &compare {
            let uc = cmp.reconstruct(&field)?;
            let mc = mse_loss(&uc, image).or_data()?;
            total_compare += mc;
            csv.push_str(&format!(",{mc}"));
            print!("  compare {mc:.6}");
        }
        println!();
        csv.push('\n');

        if let Some(dir) = &args.error_maps {
            let gray = error_map(&u, image);
            let out = dir.join(format!("error_{}", name.replace(' ', "_")));
            save_png_atomic(&out, &gray)?;
        }
    }
    let mean = total / images.len() as f64;
    println!("mean mse ({}): {mean:.6}", main.name());
    if compare.is_some() {
        println!(
            "mean mse (compare): {:.6}",
            total_compare / images.len() as f64
        );
    }
    if let Some(out) = &args.out {
        write_atomic(out, csv.as_bytes())?;
    }
    Ok(())
}

/// Channel-mean |U - GT| as a grayscale image.
fn error_map(u: &Field, gt: &Field) -> Field {
    let (h, w, c) = gt.dims();
    Field::from_fn(h, w, 1, |_, i, j| {
        let mut acc = 0.0;
        for ch in 0..c {
            acc += (u.get(ch, i, j) - gt.get(ch, i, j)).abs();
        }
        acc / c as f64
    })
}

fn cmd_stats(cli: &Cli, args: &StatsArgs) -> CliResult<()> {
    if args.range <= 0.0 {
        return Err(CliError::Usage("--range must be positive".into()));
    }
    let (_, images) = load_image_dir(&args.data)?;
    let range = (-args.range, args.range);
    let dist = dataset_distribution(&images, args.bins, range).or_data()?;
    write_atomic(&args.out, distribution_csv(&dist).as_bytes())?;
    println!(
        "wrote {} ({} images, {} bins over [{}, {}])",
        args.out.display(),
        images.len(),
        args.bins,
        range.0,
        range.1
    );

    if args.gradients {
        let mut gx_mean = vec![0.0; args.bins];
        let mut gy_mean = vec![0.0; args.bins];
        let mut centers = Vec::new();
        for img in &images {
            let (gx, gy) = gradient_histograms(img, args.bins, range).or_data()?;
            if centers.is_empty() {
                centers = gx.bin_centers();
            }
            for (m, d) in gx_mean.iter_mut().zip(&gx.density) {
                *m += d;
            }
            for (m, d) in gy_mean.iter_mut().zip(&gy.density) {
                *m += d;
            }
        }
        let n = images.len() as f64;
        let mut csv = String::from("bin_center,gradient_x_density,gradient_y_density\n");
        for (i, c) in centers.iter().enumerate() {
            csv.push_str(&format!("{c},{},{}\n", gx_mean[i] / n, gy_mean[i] / n));
        }
        let stem = args.out.file_stem().and_then(|s| s.to_str()).unwrap_or("stats");
        let grad_path = args.out.with_file_name(format!("{stem}_gradient.csv"));
        write_atomic(&grad_path, csv.as_bytes())?;
        println!("wrote {}", grad_path.display());
    }
    if cli.verbose {
        let peak = dist
            .mean_density
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        println!("mean-density peak {peak:.5}");
    }
    Ok(())
}

fn cmd_spectrum(cli: &Cli, args: &SpectrumArgs) -> CliResult<()> {
    let kernels = load_checkpoint(&args.checkpoint)?;
    let k = kernels.kernel_size();
    let n = args.fft_size;
    let specs = [
        ("h", kernel_spectrum(kernels.analysis(0), k, n).or_data()?),
        ("g", kernel_spectrum(kernels.reconstruction(0), 3, n).or_data()?),
        ("k", kernel_spectrum(kernels.synthesis(0), k, n).or_data()?),
    ];

    let mut csv = String::from("kernel,u,v,magnitude\n");
    for (name, spec) in &specs {
        for line in spectrum_csv(spec, n).lines().skip(1) {
            csv.push_str(&format!("{name},{line}\n"));
        }
    }
    write_atomic(&args.out, csv.as_bytes())?;
    println!("wrote {}", args.out.display());

    if let Some(png) = &args.png {
        // H | G | K side by side, each normalized to its own peak.
        let sep = 2;
        let width = 3 * n + 2 * sep;
        let img = Field::from_fn(n, width, 1, |_, i, j| {
            let (panel, col) = (j / (n + sep), j % (n + sep));
            if col >= n || panel >= 3 {
                return 255.0;
            }
            let spec = &specs[panel].1;
            let peak = spec.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
            spec[i * n + col] / peak * 255.0
        });
        save_png_atomic(png, &img)?;
        println!("wrote {}", png.display());
    }
    if cli.verbose {
        for (name, spec) in &specs {
            let dc = spec[(n / 2) * n + n / 2];
            println!("{name}: DC magnitude {dc:.4}");
        }
    }
    Ok(())
}

fn cmd_bench(cli: &Cli, args: &BenchArgs) -> CliResult<()> {
    let mut solvers = Vec::new();
    for name in args.solvers.split(',').filter(|s| !s.is_empty()) {
        let kind: SolverKind = name
            .trim()
            .parse()
            .map_err(|e: lapfield::Error| CliError::Usage(e.to_string()))?;
        solvers.push(kind);
    }
    let mut sizes = Vec::new();
    for tok in args.sizes.split(',').filter(|s| !s.is_empty()) {
        let n: usize = tok
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad size {tok:?}")))?;
        sizes.push(n);
    }
    if solvers.is_empty() || sizes.is_empty() {
        return Err(CliError::Usage("need at least one solver and size".into()));
    }
    if solvers.contains(&SolverKind::Wcnn) && args.checkpoint.is_none() {
        return Err(CliError::Usage(
            "benchmarking wcnn requires --checkpoint".into(),
        ));
    }
    let kernels = match &args.checkpoint {
        Some(p) => Some(load_checkpoint(p)?),
        None => None,
    };
    let results =
        benchmark_solvers(&sizes, &solvers, args.reps, cli.seed, kernels.as_ref()).or_data()?;
    write_atomic(&args.out, bench_csv(&results).as_bytes())?;
    for r in &results {
        println!(
            "{:<12} {:>5}px  median {:.6}s  mse {:.3e}",
            r.solver.name(),
            r.resolution,
            r.median_seconds,
            r.mse
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}
