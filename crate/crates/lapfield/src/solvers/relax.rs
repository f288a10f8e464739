//! Stationary iterations: Jacobi, Gauss-Seidel, and SOR.
//!
//! All three exploit that every published stencil has center -4, so the
//! update for pixel p is `(neighbor_sum(p) - L(p)) / 4`, relaxed by ω for
//! SOR. Sweeps are lexicographic and strictly sequential so runs are
//! bit-reproducible.

use crate::error::Result;
use crate::field::{Field, RasterImage, ScalarField, Stencil3x3};
use crate::solvers::{
    relative_residual, sor_default_omega, SolverConfig, SolverKind, SolverReport,
};
use crate::timing::Stopwatch;

/// Off-center taps of a stencil: (row offset, col offset, coefficient).
fn neighbor_taps(stencil: &Stencil3x3) -> Vec<(isize, isize, f64)> {
    let k = stencil.coefficients();
    let mut taps = Vec::new();
    for di in 0..3isize {
        for dj in 0..3isize {
            if di == 1 && dj == 1 {
                continue;
            }
            let c = k[di as usize][dj as usize];
            if c != 0.0 {
                taps.push((di - 1, dj - 1, c));
            }
        }
    }
    taps
}

#[inline]
fn neighbor_sum(u: &[f64], h: usize, w: usize, i: usize, j: usize, taps: &[(isize, isize, f64)]) -> f64 {
    let mut acc = 0.0;
    for &(di, dj, c) in taps {
        let ii = i as isize + di;
        let jj = j as isize + dj;
        if ii < 0 || jj < 0 || ii >= h as isize || jj >= w as isize {
            continue;
        }
        acc += c * u[ii as usize * w + jj as usize];
    }
    acc
}

fn run_iteration(
    kind: SolverKind,
    rhs: &ScalarField,
    stencil: &Stencil3x3,
    config: &SolverConfig,
    omega: f64,
) -> Result<(RasterImage, SolverReport)> {
    config.validate()?;
    let watch = Stopwatch::start();
    let (h, w, c) = rhs.dims();
    let taps = neighbor_taps(stencil);
    let center = stencil.center();

    let mut u = Field::zeros(h, w, c);
    let mut history = vec![relative_residual(&u, rhs, stencil)?];
    let mut converged = history[0] <= config.tolerance;
    let mut iterations = 0;

    let mut swap = if kind == SolverKind::Jacobi {
        vec![0.0; h * w]
    } else {
        Vec::new()
    };

    while !converged && iterations < config.max_iterations {
        for ch in 0..c {
            let b = rhs.channel(ch);
            match kind {
                SolverKind::Jacobi => {
                    let src = u.channel(ch);
                    for i in 0..h {
                        for j in 0..w {
                            let p = i * w + j;
                            swap[p] = (neighbor_sum(src, h, w, i, j, &taps) - b[p]) / -center;
                        }
                    }
                    u.channel_mut(ch).copy_from_slice(&swap);
                }
                _ => {
                    let plane = u.channel_mut(ch);
                    for i in 0..h {
                        for j in 0..w {
                            let p = i * w + j;
                            let gs = (neighbor_sum(plane, h, w, i, j, &taps) - b[p]) / -center;
                            plane[p] = (1.0 - omega) * plane[p] + omega * gs;
                        }
                    }
                }
            }
        }
        iterations += 1;
        let res = relative_residual(&u, rhs, stencil)?;
        history.push(res);
        converged = res <= config.tolerance;
    }

    Ok((
        u,
        SolverReport {
            solver: kind,
            iterations,
            residual_history: history,
            wall_seconds: watch.seconds(),
            converged,
        },
    ))
}

/// Jacobi iteration from u = 0.
pub fn solve_jacobi(
    rhs: &ScalarField,
    stencil: &Stencil3x3,
    config: &SolverConfig,
) -> Result<(RasterImage, SolverReport)> {
    run_iteration(SolverKind::Jacobi, rhs, stencil, config, 1.0)
}

/// Gauss-Seidel with in-place lexicographic sweeps.
pub fn solve_gauss_seidel(
    rhs: &ScalarField,
    stencil: &Stencil3x3,
    config: &SolverConfig,
) -> Result<(RasterImage, SolverReport)> {
    run_iteration(SolverKind::GaussSeidel, rhs, stencil, config, 1.0)
}

/// Successive over-relaxation; ω defaults to the model-problem optimum.
pub fn solve_sor(
    rhs: &ScalarField,
    stencil: &Stencil3x3,
    config: &SolverConfig,
) -> Result<(RasterImage, SolverReport)> {
    let omega = config
        .sor_omega
        .unwrap_or_else(|| sor_default_omega(rhs.height(), rhs.width()));
    run_iteration(SolverKind::Sor, rhs, stencil, config, omega)
}
