//! Reverse-mode differentiation through the shared-kernel pyramid.
//!
//! Exact gradients, assembled from the adjoints of the three primitive
//! ops: the adjoint of zero-padded correlation with W is zero-padded
//! correlation with the 180°-rotated W (input path) and a clipped
//! cross-correlation of input with output-gradient (kernel path); the
//! adjoint of zero-insertion upsampling is even-index subsampling, and
//! vice versa. A shared kernel's gradient accumulates over every level
//! where the kernel is applied.

use crate::error::Result;
use crate::field::{correlate, Field, RasterImage, ScalarField};
use crate::train::mse_loss;
use crate::wcnn::{
    build_pyramid, conv_per_channel, downsample, upsample, GradientSet, KernelSet,
};

/// dW[a][b] = Σ_{i,j} out_grad(i,j) · input(i + a - r, j + b - r), with the
/// zero exterior clipping out-of-range input samples.
fn kernel_gradient(input: &[f64], out_grad: &[f64], h: usize, w: usize, ksize: usize, dw: &mut [f64]) {
    match ksize {
        3 => kernel_gradient_fixed::<3>(input, out_grad, h, w, dw),
        5 => kernel_gradient_fixed::<5>(input, out_grad, h, w, dw),
        7 => kernel_gradient_fixed::<7>(input, out_grad, h, w, dw),
        9 => kernel_gradient_fixed::<9>(input, out_grad, h, w, dw),
        11 => kernel_gradient_fixed::<11>(input, out_grad, h, w, dw),
        _ => kernel_gradient_fixed::<0>(input, out_grad, h, w, &mut dw[..ksize * ksize]),
    }
}

fn kernel_gradient_fixed<const K: usize>(
    input: &[f64],
    out_grad: &[f64],
    h: usize,
    w: usize,
    dw: &mut [f64],
) {
    let ksize = if K == 0 { (dw.len() as f64).sqrt() as usize } else { K };
    let r = ksize / 2;
    for a in 0..ksize {
        // Rows where i + a - r stays inside the grid.
        let i0 = r.saturating_sub(a);
        let i1 = (h + r).saturating_sub(a).min(h);
        for b in 0..ksize {
            let j0 = r.saturating_sub(b);
            let j1 = (w + r).saturating_sub(b).min(w);
            let mut acc = 0.0;
            for i in i0..i1 {
                let grad_row = i * w;
                let input_row = (i + a - r) * w;
                for j in j0..j1 {
                    acc += out_grad[grad_row + j] * input[input_row + j + b - r];
                }
            }
            dw[a * ksize + b] += acc;
        }
    }
}

fn rot180(kernel: &[f64]) -> Vec<f64> {
    kernel.iter().rev().copied().collect()
}

/// Zero-padded correlation of `grad` with rot180 of each channel kernel:
/// the input-path adjoint of [`conv_per_channel`].
fn conv_transpose_per_channel(grad: &Field, kernels: &[Vec<f64>], ksize: usize) -> Field {
    let (h, w, c) = grad.dims();
    let mut out = Field::zeros(h, w, c);
    for ch in 0..c {
        let rotated = rot180(&kernels[ch]);
        correlate(grad.channel(ch), h, w, &rotated, ksize, out.channel_mut(ch));
    }
    out
}

/// Loss and exact parameter gradients for one (field, target) pair.
///
/// The loss is the per-channel `(1/(2HW)) Σ (U - GT)²` averaged over
/// channels, matching [`mse_loss`] on a single sample.
pub fn backward(
    kernels: &KernelSet,
    input: &ScalarField,
    target: &RasterImage,
    n_levels: usize,
) -> Result<(f64, GradientSet)> {
    let pyramid = build_pyramid(input, kernels, n_levels)?;
    let n = pyramid.depth();
    let ksize = kernels.kernel_size();
    let channels = kernels.channels();

    // Forward synthesis, keeping every U_i for the reverse sweep.
    let mut u_levels: Vec<Field> = vec![Field::zeros(0, 0, 0); n];
    u_levels[n - 1] = conv_per_channel_g(kernels, &pyramid.levels[n - 1]);
    for i in (0..n - 1).rev() {
        let level = &pyramid.levels[i];
        let up = upsample(&u_levels[i + 1], level.height(), level.width())?;
        let k_branch = conv_per_channel_k(kernels, &up);
        let g_branch = conv_per_channel_g(kernels, level);
        u_levels[i] = k_branch.axpy(1.0, &g_branch)?;
    }

    let loss = mse_loss(&u_levels[0], target)?;

    let mut grads = GradientSet::zeros(channels, ksize)?;
    let (h1, w1, _) = input.dims();
    let scale = 1.0 / (h1 as f64 * w1 as f64 * channels as f64);

    // d loss / d U_1
    let mut g_u = Field::from_vec(
        h1,
        w1,
        channels,
        u_levels[0]
            .as_slice()
            .iter()
            .zip(target.as_slice())
            .map(|(&u, &t)| (u - t) * scale)
            .collect(),
    )?;

    // Gradients flowing into each pyramid level's field.
    let mut g_levels: Vec<Field> = pyramid
        .levels
        .iter()
        .map(|l| Field::zeros(l.height(), l.width(), channels))
        .collect();

    // Synthesis stream, reversed: fine to coarse.
    for i in 0..n - 1 {
        let level = &pyramid.levels[i];
        let up = upsample(&u_levels[i + 1], level.height(), level.width())?;
        for c in 0..channels {
            kernel_gradient(
                up.channel(c),
                g_u.channel(c),
                level.height(),
                level.width(),
                ksize,
                grads.synthesis_mut(c),
            );
            kernel_gradient(
                level.channel(c),
                g_u.channel(c),
                level.height(),
                level.width(),
                3,
                grads.reconstruction_mut(c),
            );
        }
        let g_branch = conv_transpose_per_channel(&g_u, g_kernels(kernels), 3);
        g_levels[i] = g_levels[i].axpy(1.0, &g_branch)?;
        let g_up = conv_transpose_per_channel(&g_u, k_kernels(kernels), ksize);
        g_u = downsample(&g_up);
    }

    // Coarsest reconstruction U_n = conv(G, L_n).
    {
        let level = &pyramid.levels[n - 1];
        for c in 0..channels {
            kernel_gradient(
                level.channel(c),
                g_u.channel(c),
                level.height(),
                level.width(),
                3,
                grads.reconstruction_mut(c),
            );
        }
        let g_branch = conv_transpose_per_channel(&g_u, g_kernels(kernels), 3);
        g_levels[n - 1] = g_levels[n - 1].axpy(1.0, &g_branch)?;
    }

    // Analysis stream, reversed: coarse to fine. L_{i+1} = down(conv(H, L_i)).
    for i in (0..n - 1).rev() {
        let level = &pyramid.levels[i];
        let g_a = upsample(&g_levels[i + 1], level.height(), level.width())?;
        for c in 0..channels {
            kernel_gradient(
                level.channel(c),
                g_a.channel(c),
                level.height(),
                level.width(),
                ksize,
                grads.analysis_mut(c),
            );
        }
        let g_h = conv_transpose_per_channel(&g_a, h_kernels(kernels), ksize);
        g_levels[i] = g_levels[i].axpy(1.0, &g_h)?;
    }

    Ok((loss, grads))
}

fn conv_per_channel_g(kernels: &KernelSet, field: &Field) -> Field {
    conv_per_channel(field, g_kernels(kernels), 3)
}

fn conv_per_channel_k(kernels: &KernelSet, field: &Field) -> Field {
    conv_per_channel(field, k_kernels(kernels), kernels.kernel_size())
}

fn g_kernels(kernels: &KernelSet) -> &[Vec<f64>] {
    kernels.reconstruction_all()
}

fn k_kernels(kernels: &KernelSet) -> &[Vec<f64>] {
    kernels.synthesis_all()
}

fn h_kernels(kernels: &KernelSet) -> &[Vec<f64>] {
    kernels.analysis_all()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wcnn::forward;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_field(h: usize, w: usize, c: usize, seed: u64) -> Field {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        Field::from_fn(h, w, c, |_, _, _| rng.gen_range(-10.0..10.0))
    }

    fn random_kernels(channels: usize, k: usize, seed: u64) -> KernelSet {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut set = KernelSet::zeros(channels, k).unwrap();
        set.for_each_param_mut(|v| *v = rng.gen_range(-0.5..0.5));
        set
    }

    #[test]
    fn zero_input_and_target_gives_zero_gradients() {
        let kernels = random_kernels(2, 5, 61);
        let zero = Field::zeros(16, 16, 2);
        let (loss, grads) = backward(&kernels, &zero, &zero, 3).unwrap();
        assert_eq!(loss, 0.0);
        grads.for_each_param(|v| assert_eq!(v, 0.0));
    }

    #[test]
    fn matches_central_finite_differences() {
        let kernels = random_kernels(3, 5, 62);
        let input = random_field(16, 16, 3, 63);
        let target = random_field(16, 16, 3, 64);
        let levels = 3;

        let (_, analytic) = backward(&kernels, &input, &target, levels).unwrap();
        let analytic_flat = analytic.to_flat();

        let step = 1e-3;
        let base = kernels.to_flat();
        let mut worst = 0.0f64;
        for p in 0..base.len() {
            let mut plus = base.clone();
            plus[p] += step;
            let kp = KernelSet::from_flat(3, 5, &plus).unwrap();
            let lp = mse_loss(&forward(&kp, &input, levels).unwrap(), &target).unwrap();

            let mut minus = base.clone();
            minus[p] -= step;
            let km = KernelSet::from_flat(3, 5, &minus).unwrap();
            let lm = mse_loss(&forward(&km, &input, levels).unwrap(), &target).unwrap();

            let fd = (lp - lm) / (2.0 * step);
            let rel = (analytic_flat[p] - fd).abs() / (analytic_flat[p].abs() + 1e-8);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-3, "worst relative error {worst}");
    }

    #[test]
    fn gradient_of_loss_scales_with_residual() {
        // With U = 0 network (zero kernels), loss is mean(GT²)/2-ish and
        // gradients of G are the only nonzero path at n = 1.
        let kernels = KernelSet::zeros(1, 5).unwrap();
        let input = random_field(8, 8, 1, 65);
        let target = Field::from_fn(8, 8, 1, |_, _, _| 2.0);
        let (loss, grads) = backward(&kernels, &input, &target, 1).unwrap();
        assert!((loss - 2.0).abs() < 1e-12); // (1/2)·mean(0 - 2)² = 2
        let gh: f64 = grads.analysis(0).iter().map(|v| v.abs()).sum();
        let gk: f64 = grads.synthesis(0).iter().map(|v| v.abs()).sum();
        let gg: f64 = grads.reconstruction(0).iter().map(|v| v.abs()).sum();
        assert_eq!(gh, 0.0); // single level: H unused
        assert_eq!(gk, 0.0); // single level: K unused
        assert!(gg > 0.0);
    }

    #[test]
    fn deep_g_gradient_accumulates_beyond_the_coarsest_level() {
        // Finite-difference only the coarsest-level G occurrence by
        // evaluating an untied straight-line forward; the tied gradient
        // must differ, proving levels 1..n-1 contribute.
        let kernels = random_kernels(1, 5, 66);
        let input = random_field(16, 16, 1, 67);
        let target = random_field(16, 16, 1, 68);
        let levels = 3;
        let (_, tied) = backward(&kernels, &input, &target, levels).unwrap();

        let untied_forward = |g_coarse: &[f64]| -> f64 {
            let pyramid = build_pyramid(&input, &kernels, levels).unwrap();
            let mut u = conv_per_channel(&pyramid.levels[2], &[g_coarse.to_vec()], 3);
            for i in (0..2).rev() {
                let level = &pyramid.levels[i];
                let up = upsample(&u, level.height(), level.width()).unwrap();
                let kb = conv_per_channel(&up, &[kernels.synthesis(0).to_vec()], 5);
                let gb = conv_per_channel(level, &[kernels.reconstruction(0).to_vec()], 3);
                u = kb.axpy(1.0, &gb).unwrap();
            }
            mse_loss(&u, &target).unwrap()
        };

        let step = 1e-4;
        let mut coarse_only = vec![0.0; 9];
        for p in 0..9 {
            let mut plus = kernels.reconstruction(0).to_vec();
            plus[p] += step;
            let mut minus = kernels.reconstruction(0).to_vec();
            minus[p] -= step;
            coarse_only[p] = (untied_forward(&plus) - untied_forward(&minus)) / (2.0 * step);
        }

        let max_gap = tied
            .reconstruction(0)
            .iter()
            .zip(&coarse_only)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_gap > 1e-6, "no accumulation detected: {max_gap}");
    }
}
