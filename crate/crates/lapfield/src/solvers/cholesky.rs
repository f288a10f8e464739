//! Dense Cholesky direct solver.
//!
//! Builds the full (H·W) x (H·W) system matrix and factorizes it. Cubic
//! cost caps it at small grids, where it serves as the ground-truth oracle
//! the other solvers are cross-checked against.

use crate::error::{Error, Result};
use crate::field::{Field, RasterImage, ScalarField, Stencil3x3};

/// Largest H·W the dense path accepts (64 x 64).
pub const DENSE_CAP: usize = 4096;

/// Dense matrix of the zero-padded stencil correlation on an `h x w` grid.
///
/// Row `i*w + j` holds the equation for pixel (i, j); neighbors outside the
/// grid are dropped, which is the Dirichlet zero exterior.
pub(crate) fn dense_laplacian_matrix(h: usize, w: usize, stencil: &Stencil3x3) -> Vec<f64> {
    let n = h * w;
    let k = stencil.coefficients();
    let mut a = vec![0.0; n * n];
    for i in 0..h {
        for j in 0..w {
            let row = i * w + j;
            for di in 0..3usize {
                for dj in 0..3usize {
                    let ii = i as isize + di as isize - 1;
                    let jj = j as isize + dj as isize - 1;
                    if ii < 0 || jj < 0 || ii >= h as isize || jj >= w as isize {
                        continue;
                    }
                    let col = ii as usize * w + jj as usize;
                    a[row * n + col] += k[di][dj];
                }
            }
        }
    }
    a
}

/// In-place lower Cholesky factorization A = G Gᵀ for SPD A (row-major n x n).
fn cholesky_factor(a: &mut [f64], n: usize) -> Result<()> {
    for col in 0..n {
        let mut diag = a[col * n + col];
        for t in 0..col {
            diag -= a[col * n + t] * a[col * n + t];
        }
        if diag <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                row: col,
                pivot: diag,
            });
        }
        let root = diag.sqrt();
        a[col * n + col] = root;
        for row in col + 1..n {
            let mut v = a[row * n + col];
            for t in 0..col {
                v -= a[row * n + t] * a[col * n + t];
            }
            a[row * n + col] = v / root;
        }
    }
    Ok(())
}

/// Solve G Gᵀ x = b given the lower factor G; b is overwritten with x.
fn cholesky_solve(g: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut v = b[i];
        for t in 0..i {
            v -= g[i * n + t] * b[t];
        }
        b[i] = v / g[i * n + i];
    }
    for i in (0..n).rev() {
        let mut v = b[i];
        for t in i + 1..n {
            v -= g[t * n + i] * b[t];
        }
        b[i] = v / g[i * n + i];
    }
}

/// Pre-factorized dense solver, reusable across right-hand sides.
pub(crate) struct DenseSolver {
    factor: Vec<f64>,
    n: usize,
}

impl DenseSolver {
    /// Factorizes the negated system matrix, which is symmetric positive
    /// definite for every published stencil under the zero exterior.
    pub fn new(h: usize, w: usize, stencil: &Stencil3x3) -> Result<Self> {
        let n = h * w;
        if n > DENSE_CAP {
            return Err(Error::DenseSizeCap {
                max: DENSE_CAP,
                got: n,
            });
        }
        Self::from_matrix(dense_laplacian_matrix(h, w, stencil), n)
    }

    /// Same factorization for an explicitly assembled (negative definite)
    /// system matrix, row-major n x n.
    pub fn from_matrix(mut a: Vec<f64>, n: usize) -> Result<Self> {
        for v in &mut a {
            *v = -*v;
        }
        cholesky_factor(&mut a, n)?;
        Ok(Self { factor: a, n })
    }

    /// Solves Δu = rhs for one channel plane (length h*w).
    pub fn solve_plane(&self, rhs: &[f64], out: &mut [f64]) {
        debug_assert_eq!(rhs.len(), self.n);
        for (o, &r) in out.iter_mut().zip(rhs) {
            *o = -r;
        }
        cholesky_solve(&self.factor, self.n, out);
    }
}

/// Direct dense solve of `Δu = L`; the oracle for grids up to 64 x 64.
pub fn solve_cholesky_dense(rhs: &ScalarField, stencil: &Stencil3x3) -> Result<RasterImage> {
    let (h, w, c) = rhs.dims();
    if h < 3 || w < 3 {
        return Err(Error::GridTooSmall {
            height: h,
            width: w,
        });
    }
    let solver = DenseSolver::new(h, w, stencil)?;
    let mut out = Field::zeros(h, w, c);
    for ch in 0..c {
        let mut plane = vec![0.0; h * w];
        solver.solve_plane(rhs.channel(ch), &mut plane);
        out.channel_mut(ch).copy_from_slice(&plane);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{laplacian, stencil, StencilId};
    use crate::solvers::relative_residual;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn zero_field_gives_zero_image() {
        let rhs = Field::zeros(8, 8, 1);
        let u = solve_cholesky_dense(&rhs, &stencil(StencilId::K0)).unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }

    #[test]
    fn recovers_random_images_for_every_stencil() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for id in StencilId::ALL {
            let s = stencil(id);
            let u0 = Field::from_fn(8, 8, 1, |_, _, _| rng.gen_range(0.0..255.0));
            let rhs = laplacian(&u0, &s).unwrap();
            let u = solve_cholesky_dense(&rhs, &s).unwrap();
            assert!(u.max_abs_diff(&u0) < 1e-6, "{id}");
        }
    }

    #[test]
    fn residual_is_tiny() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let s = stencil(StencilId::K0);
        let rhs = Field::from_fn(16, 16, 3, |_, _, _| rng.gen_range(-100.0..100.0));
        let u = solve_cholesky_dense(&rhs, &s).unwrap();
        assert!(relative_residual(&u, &rhs, &s).unwrap() < 1e-8);
    }

    #[test]
    fn center_impulse_green_function_regression() {
        // Frozen once from this oracle: the discrete Green's function value
        // at the impulse location of a 16x16 grid (impulse at (8, 8)).
        let mut rhs = Field::zeros(16, 16, 1);
        rhs.set(0, 8, 8, 1.0);
        let u = solve_cholesky_dense(&rhs, &stencil(StencilId::K0)).unwrap();
        // Cross-checked against the closed-form sine-series evaluation,
        // which agrees to 1e-15.
        let frozen = -0.60882403819587749;
        assert!(
            (u.get(0, 8, 8) - frozen).abs() < 1e-12,
            "got {}",
            u.get(0, 8, 8)
        );
    }

    #[test]
    fn rejects_oversized_grids() {
        let rhs = Field::zeros(65, 64, 1);
        assert!(matches!(
            solve_cholesky_dense(&rhs, &stencil(StencilId::K0)),
            Err(Error::DenseSizeCap { .. })
        ));
    }
}
