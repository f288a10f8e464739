//! Distribution statistics, kernel spectra, and the solver benchmark
//! harness.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::codec::{decode_unclamped, encode, StorageMode};
use crate::error::{Error, Result};
use crate::field::{laplacian, stencil, Field, ScalarField, StencilId};
use crate::solvers::{SolverConfig, SolverKind};
use crate::synth::natural_image;
use crate::timing::Stopwatch;
use crate::wcnn::KernelSet;

/// Default histogram range for Laplacian fields: zero-centered and narrow,
/// because the distribution is zero-peaked.
pub const DEFAULT_FIELD_RANGE: (f64, f64) = (-64.0, 64.0);
/// 257 uniform bins give an exact zero-centered bin over the default range.
pub const DEFAULT_FIELD_BINS: usize = 257;

/// A uniform-bin histogram with density and CDF views.
#[derive(Clone, Debug)]
pub struct Histogram {
    /// bins + 1 uniform edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// counts / (n · bin_width); integrates to 1.
    pub density: Vec<f64>,
    /// Non-decreasing, ending at exactly 1.
    pub cdf: Vec<f64>,
}

impl Histogram {
    /// Tallies values into `bins` uniform bins over `range`; values outside
    /// the range clamp into the end bins.
    pub fn tally<'a>(
        values: impl Iterator<Item = &'a f64>,
        bins: usize,
        range: (f64, f64),
    ) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidValue("a histogram needs >= 2 bins".into()));
        }
        let (lo, hi) = range;
        if !(hi > lo) {
            return Err(Error::InvalidValue(format!(
                "empty histogram range [{lo}, {hi}]"
            )));
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0u64; bins];
        let mut n = 0u64;
        for &v in values {
            let idx = (((v - lo) / width).floor() as isize).clamp(0, bins as isize - 1);
            counts[idx as usize] += 1;
            n += 1;
        }
        if n == 0 {
            return Err(Error::InvalidValue("histogram over an empty field".into()));
        }
        let density = counts
            .iter()
            .map(|&c| c as f64 / (n as f64 * width))
            .collect();
        let mut cdf = Vec::with_capacity(bins);
        let mut acc = 0u64;
        for &c in &counts {
            acc += c;
            cdf.push(acc as f64 / n as f64);
        }
        let edges = (0..=bins).map(|i| lo + i as f64 * width).collect();
        Ok(Self {
            edges,
            counts,
            density,
            cdf,
        })
    }

    pub fn sample_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }
}

/// Per-channel histograms of one field.
pub fn field_histogram(field: &Field, bins: usize, range: (f64, f64)) -> Result<Vec<Histogram>> {
    (0..field.channels())
        .map(|c| Histogram::tally(field.channel(c).iter(), bins, range))
        .collect()
}

/// Histogram over all channels merged; the per-image unit of
/// [`dataset_distribution`].
pub fn merged_histogram(field: &Field, bins: usize, range: (f64, f64)) -> Result<Histogram> {
    Histogram::tally(field.as_slice().iter(), bins, range)
}

/// Per-image k0 Laplacian histograms plus their average density curve.
pub struct DatasetDistribution {
    pub per_image: Vec<Histogram>,
    /// Mean of the per-image normalized densities.
    pub mean_density: Vec<f64>,
    pub edges: Vec<f64>,
}

pub fn dataset_distribution(
    images: &[Field],
    bins: usize,
    range: (f64, f64),
) -> Result<DatasetDistribution> {
    if images.is_empty() {
        return Err(Error::EmptyDataset("no images for statistics".into()));
    }
    let k0 = stencil(StencilId::K0);
    let mut per_image = Vec::with_capacity(images.len());
    for img in images {
        let field = laplacian(img, &k0)?;
        per_image.push(merged_histogram(&field, bins, range)?);
    }
    let mut mean_density = vec![0.0; bins];
    for h in &per_image {
        for (m, d) in mean_density.iter_mut().zip(&h.density) {
            *m += d;
        }
    }
    for m in &mut mean_density {
        *m /= per_image.len() as f64;
    }
    Ok(DatasetDistribution {
        edges: per_image[0].edges.clone(),
        per_image,
        mean_density,
    })
}

/// CSV: bin_center, mean_density, mean_log10_density, then one density
/// column per image.
pub fn distribution_csv(dist: &DatasetDistribution) -> String {
    let mut out = String::from("bin_center,mean_density,mean_log10_density");
    for i in 0..dist.per_image.len() {
        out.push_str(&format!(",img{:03}_density", i + 1));
    }
    out.push('\n');
    let centers: Vec<f64> = dist.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
    for (b, center) in centers.iter().enumerate() {
        let mean = dist.mean_density[b];
        out.push_str(&format!("{center},{mean},{}", (mean.max(1e-300)).log10()));
        for h in &dist.per_image {
            out.push_str(&format!(",{}", h.density[b]));
        }
        out.push('\n');
    }
    out
}

/// Maximum-likelihood Laplace fit: location = median, scale = mean
/// absolute deviation about the median (which is also returned under its
/// own name).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplaceFit {
    pub location: f64,
    pub scale: f64,
    pub mean_abs_deviation: f64,
}

pub fn laplace_fit(field: &ScalarField) -> LaplaceFit {
    let mut sorted: Vec<f64> = field.as_slice().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let location = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let mad = sorted.iter().map(|v| (v - location).abs()).sum::<f64>() / n as f64;
    LaplaceFit {
        location,
        scale: mad,
        mean_abs_deviation: mad,
    }
}

/// Fraction of samples inside a zero-centered band spanning `fraction` of
/// the full value range. The sparsity comparison statistic, meant for
/// zero-centered signals (Laplacian fields, mean-centered intensities):
/// a zero-peaked distribution concentrates here, a spread-out one does not.
pub fn central_band_fraction(values: &[f64], fraction: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let half_width = 0.5 * fraction * (max - min);
    values.iter().filter(|v| v.abs() <= half_width).count() as f64 / values.len() as f64
}

/// Forward-difference gradient histograms (x then y), for side-by-side
/// comparison with the Laplacian statistics.
pub fn gradient_histograms(
    image: &Field,
    bins: usize,
    range: (f64, f64),
) -> Result<(Histogram, Histogram)> {
    let (h, w, c) = image.dims();
    let mut gx = Vec::with_capacity(c * h * (w - 1));
    let mut gy = Vec::with_capacity(c * (h - 1) * w);
    for ch in 0..c {
        for i in 0..h {
            for j in 0..w - 1 {
                gx.push(image.get(ch, i, j + 1) - image.get(ch, i, j));
            }
        }
        for i in 0..h - 1 {
            for j in 0..w {
                gy.push(image.get(ch, i + 1, j) - image.get(ch, i, j));
            }
        }
    }
    Ok((
        Histogram::tally(gx.iter(), bins, range)?,
        Histogram::tally(gy.iter(), bins, range)?,
    ))
}

/// DC-centered 2D DFT magnitude of a zero-padded kernel.
pub fn kernel_spectrum(kernel: &[f64], ksize: usize, fft_size: usize) -> Result<Vec<f64>> {
    if kernel.len() != ksize * ksize {
        return Err(Error::InvalidValue(format!(
            "kernel length {} is not {ksize}x{ksize}",
            kernel.len()
        )));
    }
    if fft_size < ksize {
        return Err(Error::InvalidValue(format!(
            "fft size {fft_size} smaller than kernel size {ksize}"
        )));
    }
    let n = fft_size;
    let mut grid = vec![Complex::new(0.0, 0.0); n * n];
    for i in 0..ksize {
        for j in 0..ksize {
            grid[i * n + j] = Complex::new(kernel[i * ksize + j], 0.0);
        }
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
    for row in grid.chunks_exact_mut(n) {
        fft.process_with_scratch(row, &mut scratch);
    }
    let mut col = vec![Complex::default(); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = grid[i * n + j];
        }
        fft.process_with_scratch(&mut col, &mut scratch);
        for i in 0..n {
            grid[i * n + j] = col[i];
        }
    }
    // fftshift so DC sits at (n/2, n/2).
    let half = n / 2;
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let si = (i + half) % n;
            let sj = (j + half) % n;
            out[si * n + sj] = grid[i * n + j].norm();
        }
    }
    Ok(out)
}

/// CSV of a square spectrum: u_index, v_index, magnitude.
pub fn spectrum_csv(spectrum: &[f64], n: usize) -> String {
    let mut out = String::from("u,v,magnitude\n");
    for i in 0..n {
        for j in 0..n {
            out.push_str(&format!("{i},{j},{}\n", spectrum[i * n + j]));
        }
    }
    out
}

/// One benchmark measurement.
#[derive(Clone, Debug)]
pub struct BenchResult {
    pub solver: SolverKind,
    pub resolution: usize,
    pub repetitions: usize,
    pub median_seconds: f64,
    pub mse: f64,
}

/// Times `decode` per solver on synthetic natural images (median of
/// `reps` runs after one warm-up) and records the reconstruction MSE.
/// Results are sorted by solver name, then resolution.
pub fn benchmark_solvers(
    resolutions: &[usize],
    solvers: &[SolverKind],
    reps: usize,
    seed: u64,
    kernels: Option<&KernelSet>,
) -> Result<Vec<BenchResult>> {
    if reps < 3 {
        return Err(Error::InvalidValue("benchmark needs reps >= 3".into()));
    }
    for s in solvers {
        if *s == SolverKind::Wcnn && kernels.is_none() {
            return Err(Error::BadConfig(
                "benchmarking the wcnn solver needs a kernel checkpoint".into(),
            ));
        }
    }
    let k0 = stencil(StencilId::K0);
    let mut results = Vec::new();
    for &res in resolutions {
        let img = natural_image(res, res, 1, seed ^ res as u64);
        let enc = encode(&img, &k0, 0.0, 0.0, StorageMode::Dense)?;
        for &solver in solvers {
            let config = SolverConfig::new(solver);
            let run = || -> Result<(f64, f64)> {
                let watch = Stopwatch::start();
                let (u, _) = decode_unclamped(&enc, &config, kernels)?;
                let secs = watch.seconds();
                Ok((secs, u.mse(&img)))
            };
            let (_, mse) = run()?; // warm-up
            let mut times = Vec::with_capacity(reps);
            for _ in 0..reps {
                times.push(run()?.0);
            }
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median_seconds = times[times.len() / 2];
            results.push(BenchResult {
                solver,
                resolution: res,
                repetitions: reps,
                median_seconds,
                mse,
            });
        }
    }
    results.sort_by(|a, b| {
        a.solver
            .name()
            .cmp(b.solver.name())
            .then(a.resolution.cmp(&b.resolution))
    });
    Ok(results)
}

pub fn bench_csv(results: &[BenchResult]) -> String {
    let mut out = String::from("solver,resolution,median_seconds,mse\n");
    for r in results {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.solver, r.resolution, r.median_seconds, r.mse
        ));
    }
    out
}
