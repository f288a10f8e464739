//! Direct spectral solver via the type-I discrete sine transform.
//!
//! Products of sine modes are eigenvectors of the 5-point Laplacian with a
//! zero exterior: applying -Δ to `sin(πpi/(H+1))·sin(πqj/(W+1))` multiplies
//! it by `4sin²(πp/(2(H+1))) + 4sin²(πq/(2(W+1)))`. Dividing in the
//! transform domain therefore solves the system exactly, and each DST-I is
//! realized through a length-2(n+1) FFT for O(N log N) total cost.
//!
//! Two layout tricks keep the constant flat across grid sizes: the odd
//! extension of a real row has a purely imaginary spectrum, so two rows
//! ride one complex FFT (one in the real lane, one in the imaginary lane),
//! and the column passes run on a blocked transpose instead of strided
//! gathers.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{RasterImage, ScalarField, Stencil3x3, StencilId};

/// One-dimensional DST-I of length `n`, taken as the first half-spectrum
/// of the odd extension of length m = 2(n + 1).
///
/// The m-point DFT is evaluated by the chirp-z factorization
/// `X[k] = w_k · ((a·w) ⊛ conj(w))[k]`, `w_t = exp(-iπt²/m)`, with the
/// circular convolution on a power-of-two host FFT. A host of length
/// ≥ 3m/2 − 1 keeps every bin we read free of convolution wrap-around
/// (the wrapped tail only lands on the top m/2 bins, which the DST never
/// uses). Power-of-two hosts make the cost a smooth function of size —
/// native mixed-radix plans are faster for lucky lengths but an order of
/// magnitude lumpier across sizes, because awkward lengths such as
/// 2(1024 + 1) = 2·5²·41 fall onto slow large-prime kernels.
struct Dst1 {
    n: usize,
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// w_t for t < m, with the exponent t² reduced mod 2m in integers so
    /// the angle stays fully accurate.
    chirp: Vec<Complex<f64>>,
    /// Host-length forward transform of the aliased conj-chirp kernel,
    /// pre-scaled by 1/host.
    kernel_hat: Vec<Complex<f64>>,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl Dst1 {
    fn new(planner: &mut FftPlanner<f64>, n: usize) -> Self {
        let m = 2 * (n + 1);
        let host = (3 * m / 2 - 1).next_power_of_two();
        let fwd = planner.plan_fft_forward(host);
        let inv = planner.plan_fft_inverse(host);

        let chirp: Vec<Complex<f64>> = (0..m)
            .map(|t| {
                let reduced = (t * t) % (2 * m);
                let angle = -std::f64::consts::PI * reduced as f64 / m as f64;
                Complex::new(angle.cos(), angle.sin())
            })
            .collect();

        let mut kernel = vec![Complex::default(); host];
        for l in 0..m as isize {
            kernel[l as usize] = chirp[l as usize].conj();
        }
        for l in 1..m as isize {
            kernel[host - l as usize] = chirp[l as usize].conj();
        }
        let mut scratch = vec![
            Complex::default();
            fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())
        ];
        fwd.process_with_scratch(&mut kernel, &mut scratch);
        let scale = 1.0 / host as f64;
        for v in &mut kernel {
            *v *= scale;
        }

        Self {
            n,
            m,

            fwd,
            inv,
            chirp,
            kernel_hat: kernel,
            buf: vec![Complex::default(); host],
            scratch,
        }
    }

    /// DFT bins 1..=n of the odd extension of the packed pair (x, y).
    fn convolve(&mut self) {
        self.fwd
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        for (v, &k) in self.buf.iter_mut().zip(&self.kernel_hat) {
            *v *= k;
        }
        self.inv
            .process_with_scratch(&mut self.buf, &mut self.scratch);
    }

    /// Unnormalized DST-I: X[p] = Σ_{k=1..n} x[k-1] · sin(πpk/(n+1)).
    fn transform(&mut self, x: &mut [f64]) {
        let (n, m) = (self.n, self.m);
        self.buf[0] = Complex::default();
        self.buf[n + 1] = Complex::default();
        for k in 0..n {
            // Odd extension times the chirp.
            self.buf[k + 1] = self.chirp[k + 1].scale(x[k]);
            self.buf[m - 1 - k] = self.chirp[m - 1 - k].scale(-x[k]);
        }
        self.buf[m..].fill(Complex::default());
        self.convolve();
        for p in 0..n {
            let z = self.chirp[p + 1] * self.buf[p + 1];
            x[p] = -0.5 * z.im;
        }
    }

    /// DST-I of two rows at once: x rides the real lane, y the imaginary
    /// lane. Their odd extensions have purely imaginary / purely real
    /// spectra respectively, so the lanes separate exactly:
    /// Z[p] = 2·S_y[p] − 2i·S_x[p].
    fn transform_pair(&mut self, x: &mut [f64], y: &mut [f64]) {
        let (n, m) = (self.n, self.m);
        self.buf[0] = Complex::default();
        self.buf[n + 1] = Complex::default();
        for k in 0..n {
            let v = Complex::new(x[k], y[k]);
            self.buf[k + 1] = self.chirp[k + 1] * v;
            self.buf[m - 1 - k] = self.chirp[m - 1 - k] * -v;
        }
        self.buf[m..].fill(Complex::default());
        self.convolve();
        for p in 0..n {
            let z = self.chirp[p + 1] * self.buf[p + 1];
            x[p] = -0.5 * z.im;
            y[p] = 0.5 * z.re;
        }
    }

    /// DST-I over every length-`n` row of a contiguous plane, pairing rows.
    fn transform_rows(&mut self, plane: &mut [f64], rows: usize) {
        let n = self.n;
        let mut r = 0;
        while r + 1 < rows {
            let (a, rest) = plane[r * n..].split_at_mut(n);
            self.transform_pair(a, &mut rest[..n]);
            r += 2;
        }
        if r < rows {
            self.transform(&mut plane[r * n..(r + 1) * n]);
        }
    }

    /// Transform, scale element-wise, transform again — the spectral solve
    /// step — touching each row pair only once. `scale[r*n..]` holds row
    /// r's multipliers.
    fn solve_rows(&mut self, plane: &mut [f64], rows: usize, scale: &[f64]) {
        let n = self.n;
        let mut r = 0;
        let apply = |row: &mut [f64], r: usize| {
            for (v, &m) in row.iter_mut().zip(&scale[r * n..(r + 1) * n]) {
                *v *= m;
            }
        };
        while r + 1 < rows {
            let (a, rest) = plane[r * n..].split_at_mut(n);
            let b = &mut rest[..n];
            self.transform_pair(a, b);
            apply(a, r);
            apply(b, r + 1);
            self.transform_pair(a, b);
            r += 2;
        }
        if r < rows {
            let row = &mut plane[r * n..(r + 1) * n];
            self.transform(row);
            apply(row, r);
            self.transform(row);
        }
    }
}

const TRANSPOSE_BLOCK: usize = 32;

/// Blocked out-of-place transpose: `dst[j, i] = src[i, j]` for an h x w src.
fn transpose_into(src: &[f64], h: usize, w: usize, dst: &mut [f64]) {
    for i0 in (0..h).step_by(TRANSPOSE_BLOCK) {
        let i1 = (i0 + TRANSPOSE_BLOCK).min(h);
        for j0 in (0..w).step_by(TRANSPOSE_BLOCK) {
            let j1 = (j0 + TRANSPOSE_BLOCK).min(w);
            for i in i0..i1 {
                for j in j0..j1 {
                    dst[j * h + i] = src[i * w + j];
                }
            }
        }
    }
}

/// Blocked in-place transpose of a square n x n plane; half the memory
/// traffic of the copying version and no scratch.
fn transpose_square(plane: &mut [f64], n: usize) {
    for i0 in (0..n).step_by(TRANSPOSE_BLOCK) {
        let i1 = (i0 + TRANSPOSE_BLOCK).min(n);
        for j0 in (i0..n).step_by(TRANSPOSE_BLOCK) {
            let j1 = (j0 + TRANSPOSE_BLOCK).min(n);
            for i in i0..i1 {
                let j_start = if i0 == j0 { i + 1 } else { j0 };
                for j in j_start..j1 {
                    plane.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Cached transforms and eigenvalues for repeatedly solving on one grid size.
pub struct DstPlan {
    height: usize,
    width: usize,
    row_dst: Dst1,
    col_dst: Dst1,
    /// -1/λ(p, q) with the inverse-transform normalization folded in,
    /// laid out TRANSPOSED (q-major) because the divide happens during
    /// the column pass.
    scaled_inverse_eigenvalues: Vec<f64>,
    /// Scratch for non-square transposes; square planes flip in place.
    flip: Vec<f64>,
}

impl DstPlan {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        let row_dst = Dst1::new(&mut planner, width);
        let col_dst = Dst1::new(&mut planner, height);

        let hv = eigenvalues_1d(height);
        let wv = eigenvalues_1d(width);
        // DST-I is involutory up to 2/(n+1) per axis.
        let norm = 4.0 / ((height as f64 + 1.0) * (width as f64 + 1.0));
        let mut scaled = Vec::with_capacity(height * width);
        for &b in &wv {
            for &a in &hv {
                scaled.push(-norm / (a + b));
            }
        }
        let flip = if height == width {
            Vec::new()
        } else {
            vec![0.0; height * width]
        };
        Self {
            height,
            width,
            row_dst,
            col_dst,
            scaled_inverse_eigenvalues: scaled,
            flip,
        }
    }

    /// Solves Δu = rhs for one channel plane in place.
    pub fn solve_plane(&mut self, plane: &mut [f64]) {
        let (h, w) = (self.height, self.width);
        let eigs = std::mem::take(&mut self.scaled_inverse_eigenvalues);
        // Row DSTs; transpose; per column pair: DST, eigenvalue divide,
        // inverse DST while hot; transpose back; row inverse DSTs.
        self.row_dst.transform_rows(plane, h);
        if h == w {
            transpose_square(plane, h);
            self.col_dst.solve_rows(plane, w, &eigs);
            transpose_square(plane, h);
        } else {
            transpose_into(plane, h, w, &mut self.flip);
            self.col_dst.solve_rows(&mut self.flip, w, &eigs);
            transpose_into(&self.flip, w, h, plane);
        }
        self.row_dst.transform_rows(plane, h);
        self.scaled_inverse_eigenvalues = eigs;
    }
}

/// `4 sin²(πp / (2(n+1)))` for p = 1..n — the 1-D eigenvalues of -Δ.
fn eigenvalues_1d(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|p| {
            let s = (std::f64::consts::PI * p as f64 / (2.0 * (n as f64 + 1.0))).sin();
            4.0 * s * s
        })
        .collect()
}

/// Direct O(N log N) solve of `Δu = L`; k0 only, since the sine
/// diagonalization is specific to the 5-point stencil.
pub fn solve_dst(rhs: &ScalarField, stencil: &Stencil3x3) -> Result<RasterImage> {
    if stencil.id() != StencilId::K0 {
        return Err(Error::StencilNotSupported(stencil.id().name().to_string()));
    }
    let (h, w, c) = rhs.dims();
    if h < 3 || w < 3 {
        return Err(Error::GridTooSmall {
            height: h,
            width: w,
        });
    }
    let mut plan = DstPlan::new(h, w);
    let mut out = rhs.clone();
    for ch in 0..c {
        plan.solve_plane(out.channel_mut(ch));
    }
    Ok(out)
}
