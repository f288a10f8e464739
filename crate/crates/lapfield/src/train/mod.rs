//! Training the shared-kernel network: MSE loss, hand-rolled
//! backpropagation, Adam, and the patch pipeline.

mod adam;
mod backward;
mod data;

pub use adam::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use backward::backward;
#[cfg(feature = "png")]
pub use data::sample_patches;
pub use data::{dihedral, holdout_split, sample_patches_from, TrainPair};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::timing::Stopwatch;
use crate::wcnn::{default_levels, forward, GradientSet, KernelSet};

/// `(1/(2HW)) Σ (U - GT)²` per channel, averaged over channels.
pub fn mse_loss(output: &Field, target: &Field) -> Result<f64> {
    if !output.same_dims(target) {
        return Err(Error::ShapeMismatch {
            expected: target.dims(),
            got: output.dims(),
        });
    }
    let (h, w, c) = output.dims();
    let mut total = 0.0;
    for ch in 0..c {
        let mut acc = 0.0;
        for (&u, &t) in output.channel(ch).iter().zip(target.channel(ch)) {
            let d = u - t;
            acc += d * d;
        }
        total += acc / (2.0 * h as f64 * w as f64);
    }
    Ok(total / c as f64)
}

/// Hyperparameters of a training run. Defaults follow the publication
/// protocol (batch 32, learning rate 1e-5, 2000 epochs); desk-scale runs
/// override epochs and learning rate.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub kernel_size: usize,
    /// Pyramid depth; `None` derives it from the patch dimensions.
    pub n_levels: Option<usize>,
    pub patch_size: usize,
    pub patch_count: usize,
    pub augment: bool,
    /// Worker threads for batch-element passes. Per-sample results are
    /// folded in sample order afterwards, so any thread count produces
    /// bit-identical kernels.
    pub threads: usize,
    /// Write a checkpoint every this many epochs (and on divergence).
    pub checkpoint_interval: Option<usize>,
    pub checkpoint_path: Option<std::path::PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            learning_rate: 1e-5,
            epochs: 2000,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            epsilon: ADAM_EPSILON,
            seed: 42,
            kernel_size: 5,
            n_levels: None,
            patch_size: 64,
            patch_count: 6400,
            augment: true,
            threads: 1,
            checkpoint_interval: None,
            checkpoint_path: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::BadConfig("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0) {
            return Err(Error::BadConfig("learning_rate must be >= 0".into()));
        }
        Ok(())
    }
}

/// Losses actually observed during a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainRecord {
    /// Held-out loss of the freshly initialized kernels, before any update.
    pub initial_heldout_loss: f64,
    /// Mean train loss per epoch.
    pub train_loss: Vec<f64>,
    /// Held-out loss after each epoch.
    pub heldout_loss: Vec<f64>,
    pub wall_seconds: f64,
}

impl TrainRecord {
    pub fn final_heldout_loss(&self) -> f64 {
        self.heldout_loss.last().copied().unwrap_or(self.initial_heldout_loss)
    }

    /// CSV lines: `epoch,train_loss,heldout_loss` with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,heldout_loss\n");
        for (e, (t, h)) in self.train_loss.iter().zip(&self.heldout_loss).enumerate() {
            out.push_str(&format!("{},{},{}\n", e + 1, t, h));
        }
        out
    }
}

/// Normalized 2D binomial kernel of odd size `k` (entries sum to 1).
fn binomial_kernel(k: usize) -> Vec<f64> {
    let mut row = vec![1.0f64];
    for _ in 1..k {
        let mut next = vec![0.0; row.len() + 1];
        for (i, &v) in row.iter().enumerate() {
            next[i] += v;
            next[i + 1] += v;
        }
        row = next;
    }
    let total: f64 = row.iter().sum();
    let mut kernel = Vec::with_capacity(k * k);
    for a in &row {
        for b in &row {
            kernel.push(a * b / (total * total));
        }
    }
    kernel
}

/// Smooth center-peaked starting point: H sums to 1, K to 4 (covering the
/// 1-in-4 occupancy of zero-insertion), G to 0.1.
pub fn init_kernels(channels: usize, kernel_size: usize) -> Result<KernelSet> {
    let base = binomial_kernel(kernel_size);
    let g_base = binomial_kernel(3);
    let h: Vec<f64> = base.clone();
    let k: Vec<f64> = base.iter().map(|v| 4.0 * v).collect();
    let g: Vec<f64> = g_base.iter().map(|v| 0.1 * v).collect();
    KernelSet::from_parts(
        channels,
        kernel_size,
        vec![h; channels],
        vec![g; channels],
        vec![k; channels],
    )
}

/// Runs `f` over `0..count`, possibly on several threads, and returns the
/// results in index order so any later reduction has a fixed order.
fn map_indexed<T: Send>(
    count: usize,
    threads: usize,
    f: &(impl Fn(usize) -> Result<T> + Sync),
) -> Result<Vec<T>> {
    if threads <= 1 || count <= 1 {
        return (0..count).map(f).collect();
    }
    let indices: Vec<usize> = (0..count).collect();
    let chunk = count.div_ceil(threads);
    let mut chunk_results: Vec<Result<Vec<T>>> = Vec::new();
    std::thread::scope(|s| {
        let handles: Vec<_> = indices
            .chunks(chunk)
            .map(|ch| s.spawn(move || ch.iter().map(|&i| f(i)).collect::<Result<Vec<T>>>()))
            .collect();
        for h in handles {
            chunk_results.push(h.join().expect("batch worker panicked"));
        }
    });
    let mut out = Vec::with_capacity(count);
    for r in chunk_results {
        out.extend(r?);
    }
    Ok(out)
}

/// Mean loss of `kernels` over a set of pairs.
pub fn evaluate(kernels: &KernelSet, set: &[TrainPair], n_levels: usize) -> Result<f64> {
    evaluate_threaded(kernels, set, n_levels, 1)
}

/// [`evaluate`] with worker threads; the mean is folded in sample order,
/// so the thread count never changes the result.
pub fn evaluate_threaded(
    kernels: &KernelSet,
    set: &[TrainPair],
    n_levels: usize,
    threads: usize,
) -> Result<f64> {
    if set.is_empty() {
        return Ok(0.0);
    }
    let losses = map_indexed(set.len(), threads, &|i| {
        let (field, gt) = &set[i];
        mse_loss(&forward(kernels, field, n_levels)?, gt)
    })?;
    Ok(losses.iter().sum::<f64>() / set.len() as f64)
}

/// Mini-batch Adam over the training pairs.
///
/// Kernels start from [`init_kernels`]; batches are drawn in a seeded
/// shuffled order each epoch and gradients accumulate in a fixed order, so
/// a run is bit-reproducible for a given config. A non-finite loss aborts
/// with [`Error::NanLoss`] after writing the last finite kernels to the
/// checkpoint path, if one is set.
pub fn train_loop(
    config: &TrainConfig,
    train_set: &[TrainPair],
    heldout_set: &[TrainPair],
) -> Result<(KernelSet, TrainRecord)> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyDataset("training set is empty".into()));
    }
    let watch = Stopwatch::start();
    let channels = train_set[0].0.channels();
    let n_levels = config.n_levels.unwrap_or_else(|| {
        let (h, w, _) = train_set[0].0.dims();
        default_levels(h, w)
    });

    let mut kernels = init_kernels(channels, config.kernel_size)?;
    let mut state = AdamState::new(kernels.param_count()).with_betas(
        config.beta1,
        config.beta2,
        config.epsilon,
    );
    let threads = config.threads.max(1);
    let mut record = TrainRecord {
        initial_heldout_loss: evaluate_threaded(&kernels, heldout_set, n_levels, threads)?,
        ..TrainRecord::default()
    };

    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut last_finite = kernels.clone();

    for epoch in 0..config.epochs {
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }

        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(config.batch_size) {
            let samples = map_indexed(batch.len(), threads, &|t| {
                let (field, gt) = &train_set[batch[t]];
                backward(&kernels, field, gt, n_levels)
            })?;
            let mut batch_loss = 0.0;
            let mut grads = GradientSet::zeros(channels, config.kernel_size)?;
            for (loss, sample_grads) in &samples {
                batch_loss += loss;
                accumulate(&mut grads, sample_grads);
            }
            let scale = 1.0 / batch.len() as f64;
            grads.for_each_param_mut(|v| *v *= scale);
            batch_loss *= scale;

            if !batch_loss.is_finite() {
                save_divergence_checkpoint(config, &last_finite);
                return Err(Error::NanLoss { epoch });
            }
            adam_step(&mut kernels, &grads, &mut state, config.learning_rate)?;
            epoch_loss += batch_loss;
            batches += 1;
        }

        let train_loss = epoch_loss / batches as f64;
        let heldout_loss = evaluate_threaded(&kernels, heldout_set, n_levels, threads)?;
        if !heldout_loss.is_finite() {
            save_divergence_checkpoint(config, &last_finite);
            return Err(Error::NanLoss { epoch });
        }
        record.train_loss.push(train_loss);
        record.heldout_loss.push(heldout_loss);
        last_finite = kernels.clone();

        if let (Some(interval), Some(path)) = (config.checkpoint_interval, &config.checkpoint_path)
        {
            if interval > 0 && (epoch + 1) % interval == 0 {
                crate::wcnn::save_kernels(path, &kernels)?;
            }
        }
    }

    record.wall_seconds = watch.seconds();
    Ok((kernels, record))
}

fn accumulate(into: &mut GradientSet, from: &GradientSet) {
    let flat = from.to_flat();
    let mut idx = 0;
    into.for_each_param_mut(|v| {
        *v += flat[idx];
        idx += 1;
    });
}

fn save_divergence_checkpoint(config: &TrainConfig, kernels: &KernelSet) {
    if let Some(path) = &config.checkpoint_path {
        let _ = crate::wcnn::save_kernels(path, kernels);
    }
}
