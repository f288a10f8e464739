//! Geometric multigrid V-cycles for the 5-point stencil.
//!
//! Gauss-Seidel smoothing, full-weighting restriction, and bilinear
//! prolongation, with coarse-level operators formed by the Galerkin
//! product R·A·P (R = Pᵀ/4). Grids need not be dyadic: a side of n
//! coarsens to floor(n/2) with coarse point t on fine point 2t+1, and
//! coarsening stops once the short side drops below 4. The Galerkin
//! operators keep the coarse-grid correction an energy-norm projection,
//! so the cycle contracts on every grid size; rediscretizing k0 on the
//! coarse grids does not survive the boundary misalignment of
//! arbitrary sizes.
//!
//! The coarsest level is solved densely when small enough, otherwise by
//! extra smoothing.

use crate::error::{Error, Result};
use crate::field::{Field, RasterImage, ScalarField, Stencil3x3, StencilId};
use crate::solvers::cholesky::{DenseSolver, DENSE_CAP};
use crate::solvers::{relative_residual, SolverConfig, SolverKind, SolverReport};
use crate::timing::Stopwatch;

/// Sweeps used on the coarsest level when it is too large to factorize.
const COARSE_FALLBACK_SWEEPS: usize = 100;

/// A position-dependent 3x3 stencil operator: nine coefficients per pixel,
/// taps outside the grid read zero.
struct StencilField {
    h: usize,
    w: usize,
    /// h*w*9, stencil entries row-major per pixel.
    coeffs: Vec<f64>,
}

impl StencilField {
    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let (h, w) = (self.h, self.w);
        for i in 0..h {
            for j in 0..w {
                let p = i * w + j;
                let k = &self.coeffs[p * 9..p * 9 + 9];
                let mut acc = 0.0;
                for di in 0..3usize {
                    let ii = i as isize + di as isize - 1;
                    if ii < 0 || ii >= h as isize {
                        continue;
                    }
                    for dj in 0..3usize {
                        let jj = j as isize + dj as isize - 1;
                        if jj < 0 || jj >= w as isize {
                            continue;
                        }
                        acc += k[di * 3 + dj] * u[ii as usize * w + jj as usize];
                    }
                }
                out[p] = acc;
            }
        }
    }

    fn gauss_seidel(&self, u: &mut [f64], rhs: &[f64], sweeps: usize) {
        let (h, w) = (self.h, self.w);
        for _ in 0..sweeps {
            for i in 0..h {
                for j in 0..w {
                    let p = i * w + j;
                    let k = &self.coeffs[p * 9..p * 9 + 9];
                    let mut s = 0.0;
                    for di in 0..3usize {
                        let ii = i as isize + di as isize - 1;
                        if ii < 0 || ii >= h as isize {
                            continue;
                        }
                        for dj in 0..3usize {
                            if di == 1 && dj == 1 {
                                continue;
                            }
                            let jj = j as isize + dj as isize - 1;
                            if jj < 0 || jj >= w as isize {
                                continue;
                            }
                            s += k[di * 3 + dj] * u[ii as usize * w + jj as usize];
                        }
                    }
                    u[p] = (rhs[p] - s) / k[4];
                }
            }
        }
    }

    fn dense_matrix(&self) -> Vec<f64> {
        let (h, w) = (self.h, self.w);
        let n = h * w;
        let mut a = vec![0.0; n * n];
        for i in 0..h {
            for j in 0..w {
                let p = i * w + j;
                let k = &self.coeffs[p * 9..p * 9 + 9];
                for di in 0..3usize {
                    for dj in 0..3usize {
                        let ii = i as isize + di as isize - 1;
                        let jj = j as isize + dj as isize - 1;
                        if ii < 0 || jj < 0 || ii >= h as isize || jj >= w as isize {
                            continue;
                        }
                        a[p * n + (ii as usize * w + jj as usize)] += k[di * 3 + dj];
                    }
                }
            }
        }
        a
    }
}

/// The operator at one level: the finest level keeps the constant k0
/// stencil implicit; coarse levels store their Galerkin stencils.
enum LevelOp {
    FivePoint,
    Stored(StencilField),
}

impl LevelOp {
    fn coeff(&self, i: usize, j: usize, di: usize, dj: usize, w: usize) -> f64 {
        match self {
            LevelOp::FivePoint => match (di, dj) {
                (1, 1) => -4.0,
                (0, 1) | (2, 1) | (1, 0) | (1, 2) => 1.0,
                _ => 0.0,
            },
            LevelOp::Stored(s) => s.coeffs[(i * w + j) * 9 + di * 3 + dj],
        }
    }
}

/// Lexicographic Gauss-Seidel sweeps for the unit k0 operator.
fn smooth_k0(u: &mut [f64], rhs: &[f64], h: usize, w: usize, sweeps: usize) {
    for _ in 0..sweeps {
        for i in 0..h {
            for j in 0..w {
                let p = i * w + j;
                let mut s = 0.0;
                if i > 0 {
                    s += u[p - w];
                }
                if i + 1 < h {
                    s += u[p + w];
                }
                if j > 0 {
                    s += u[p - 1];
                }
                if j + 1 < w {
                    s += u[p + 1];
                }
                u[p] = (s - rhs[p]) * 0.25;
            }
        }
    }
}

/// r = rhs - K u for the unit k0 operator.
fn residual_k0(u: &[f64], rhs: &[f64], h: usize, w: usize, r: &mut [f64]) {
    for i in 0..h {
        for j in 0..w {
            let p = i * w + j;
            let mut s = -4.0 * u[p];
            if i > 0 {
                s += u[p - w];
            }
            if i + 1 < h {
                s += u[p + w];
            }
            if j > 0 {
                s += u[p - 1];
            }
            if j + 1 < w {
                s += u[p + 1];
            }
            r[p] = rhs[p] - s;
        }
    }
}

/// Bilinear anchors of fine point (fi, fj) on the coarse lattice
/// (coarse t sits on fine 2t+1); anchors beyond a wall are dropped,
/// which is the zero exterior. Returns up to four (ic, jc, weight).
#[inline]
fn anchors(fi: usize, fj: usize, ch: usize, cw: usize, out: &mut [(usize, usize, f64); 4]) -> usize {
    let odd_i = fi % 2 == 1;
    let odd_j = fj % 2 == 1;
    // fi = 2t+1 => t = (fi-1)/2; even fi sits between t_lo = fi/2 - 1 and fi/2.
    let ti = fi.wrapping_sub(1) / 2;
    let tj = fj.wrapping_sub(1) / 2;
    let mut n = 0;
    let mut push = |ic: usize, jc: usize, wgt: f64| {
        if ic < ch && jc < cw {
            out[n] = (ic, jc, wgt);
            n += 1;
        }
    };
    match (odd_i, odd_j) {
        (true, true) => push(ti, tj, 1.0),
        (true, false) => {
            let lo = if fj == 0 { usize::MAX } else { fj / 2 - 1 };
            push(ti, lo, 0.5);
            push(ti, fj / 2, 0.5);
        }
        (false, true) => {
            let lo = if fi == 0 { usize::MAX } else { fi / 2 - 1 };
            push(lo, tj, 0.5);
            push(fi / 2, tj, 0.5);
        }
        (false, false) => {
            let li = if fi == 0 { usize::MAX } else { fi / 2 - 1 };
            let lj = if fj == 0 { usize::MAX } else { fj / 2 - 1 };
            push(li, lj, 0.25);
            push(li, fj / 2, 0.25);
            push(fi / 2, lj, 0.25);
            push(fi / 2, fj / 2, 0.25);
        }
    }
    n
}

/// Full-weighting restriction (Pᵀ/4 of the bilinear prolongation).
fn restrict(r: &[f64], h: usize, w: usize, ch: usize, cw: usize, coarse: &mut [f64]) {
    coarse.fill(0.0);
    let mut buf = [(0usize, 0usize, 0f64); 4];
    for fi in 0..h {
        for fj in 0..w {
            let v = r[fi * w + fj];
            if v == 0.0 {
                continue;
            }
            let n = anchors(fi, fj, ch, cw, &mut buf);
            for &(ic, jc, wgt) in &buf[..n] {
                coarse[ic * cw + jc] += 0.25 * wgt * v;
            }
        }
    }
}

/// Bilinear prolongation added into the fine grid.
fn prolong_add(fine: &mut [f64], h: usize, w: usize, coarse: &[f64], ch: usize, cw: usize) {
    let mut buf = [(0usize, 0usize, 0f64); 4];
    for fi in 0..h {
        for fj in 0..w {
            let n = anchors(fi, fj, ch, cw, &mut buf);
            let mut acc = 0.0;
            for &(ic, jc, wgt) in &buf[..n] {
                acc += wgt * coarse[ic * cw + jc];
            }
            fine[fi * w + fj] += acc;
        }
    }
}

/// Coarse operator A_c = (Pᵀ/4) A P, stored as per-pixel stencils.
fn galerkin(fine: &LevelOp, h: usize, w: usize, ch: usize, cw: usize) -> StencilField {
    let mut coeffs = vec![0.0; ch * cw * 9];
    let mut rows = [(0usize, 0usize, 0f64); 4];
    let mut cols = [(0usize, 0usize, 0f64); 4];
    for fi in 0..h {
        for fj in 0..w {
            let nr = anchors(fi, fj, ch, cw, &mut rows);
            if nr == 0 {
                continue;
            }
            for di in 0..3usize {
                let gi = fi as isize + di as isize - 1;
                if gi < 0 || gi >= h as isize {
                    continue;
                }
                for dj in 0..3usize {
                    let gj = fj as isize + dj as isize - 1;
                    if gj < 0 || gj >= w as isize {
                        continue;
                    }
                    let a = fine.coeff(fi, fj, di, dj, w);
                    if a == 0.0 {
                        continue;
                    }
                    let nc = anchors(gi as usize, gj as usize, ch, cw, &mut cols);
                    for &(ri, rj, rw) in &rows[..nr] {
                        for &(ci, cj, pw) in &cols[..nc] {
                            let ddi = ci as isize - ri as isize;
                            let ddj = cj as isize - rj as isize;
                            debug_assert!(ddi.abs() <= 1 && ddj.abs() <= 1);
                            let slot = (ddi + 1) as usize * 3 + (ddj + 1) as usize;
                            coeffs[(ri * cw + rj) * 9 + slot] += 0.25 * rw * a * pw;
                        }
                    }
                }
            }
        }
    }
    StencilField { h: ch, w: cw, coeffs }
}

enum CoarseSolve {
    Dense(DenseSolver),
    Sweeps,
}

struct Level {
    h: usize,
    w: usize,
    op: LevelOp,
}

struct Hierarchy {
    levels: Vec<Level>,
    coarse: CoarseSolve,
    pre: usize,
    post: usize,
}

impl Hierarchy {
    fn build(h: usize, w: usize, config: &SolverConfig) -> Result<Self> {
        let max_levels = config.mg_levels.unwrap_or(usize::MAX).max(1);
        let mut levels = vec![Level {
            h,
            w,
            op: LevelOp::FivePoint,
        }];
        while levels.len() < max_levels {
            let last = levels.last().unwrap();
            if last.h.min(last.w) < 4 {
                break;
            }
            let (ch, cw) = (last.h / 2, last.w / 2);
            let op = galerkin(&last.op, last.h, last.w, ch, cw);
            levels.push(Level {
                h: ch,
                w: cw,
                op: LevelOp::Stored(op),
            });
        }
        let bottom = levels.last().unwrap();
        let coarse = if bottom.h * bottom.w <= DENSE_CAP {
            let matrix = match &bottom.op {
                LevelOp::Stored(s) => s.dense_matrix(),
                LevelOp::FivePoint => {
                    StencilField {
                        h: bottom.h,
                        w: bottom.w,
                        coeffs: {
                            let mut c = vec![0.0; bottom.h * bottom.w * 9];
                            for p in 0..bottom.h * bottom.w {
                                c[p * 9 + 4] = -4.0;
                                c[p * 9 + 1] = 1.0;
                                c[p * 9 + 7] = 1.0;
                                c[p * 9 + 3] = 1.0;
                                c[p * 9 + 5] = 1.0;
                            }
                            c
                        },
                    }
                    .dense_matrix()
                }
            };
            CoarseSolve::Dense(DenseSolver::from_matrix(
                matrix,
                bottom.h * bottom.w,
            )?)
        } else {
            CoarseSolve::Sweeps
        };
        Ok(Self {
            levels,
            coarse,
            pre: config.mg_pre_sweeps,
            post: config.mg_post_sweeps,
        })
    }

    fn smooth(&self, depth: usize, u: &mut [f64], rhs: &[f64], sweeps: usize) {
        let level = &self.levels[depth];
        match &level.op {
            LevelOp::FivePoint => smooth_k0(u, rhs, level.h, level.w, sweeps),
            LevelOp::Stored(s) => s.gauss_seidel(u, rhs, sweeps),
        }
    }

    fn vcycle(&self, depth: usize, u: &mut [f64], rhs: &[f64]) {
        let level = &self.levels[depth];
        let (h, w) = (level.h, level.w);
        if depth + 1 == self.levels.len() {
            match &self.coarse {
                CoarseSolve::Dense(solver) => solver.solve_plane(rhs, u),
                CoarseSolve::Sweeps => self.smooth(depth, u, rhs, COARSE_FALLBACK_SWEEPS),
            }
            return;
        }
        self.smooth(depth, u, rhs, self.pre);

        let mut r = vec![0.0; h * w];
        match &level.op {
            LevelOp::FivePoint => residual_k0(u, rhs, h, w, &mut r),
            LevelOp::Stored(s) => {
                s.apply(u, &mut r);
                for (rv, &bv) in r.iter_mut().zip(rhs) {
                    *rv = bv - *rv;
                }
            }
        }

        let next = &self.levels[depth + 1];
        let (ch, cw) = (next.h, next.w);
        let mut coarse_rhs = vec![0.0; ch * cw];
        restrict(&r, h, w, ch, cw, &mut coarse_rhs);

        let mut correction = vec![0.0; ch * cw];
        self.vcycle(depth + 1, &mut correction, &coarse_rhs);
        prolong_add(u, h, w, &correction, ch, cw);

        self.smooth(depth, u, rhs, self.post);
    }
}

/// Multigrid V-cycle solve of `Δu = L`; k0 only.
pub fn solve_multigrid(
    rhs: &ScalarField,
    stencil: &Stencil3x3,
    config: &SolverConfig,
) -> Result<(RasterImage, SolverReport)> {
    if stencil.id() != StencilId::K0 {
        return Err(Error::StencilNotSupported(stencil.id().name().to_string()));
    }
    config.validate()?;
    let (h, w, c) = rhs.dims();
    if h < 3 || w < 3 {
        return Err(Error::GridTooSmall {
            height: h,
            width: w,
        });
    }
    let watch = Stopwatch::start();
    let hierarchy = Hierarchy::build(h, w, config)?;

    let mut u = Field::zeros(h, w, c);
    let mut history = vec![relative_residual(&u, rhs, stencil)?];
    let mut converged = history[0] <= config.tolerance;
    let mut cycles = 0;

    while !converged && cycles < config.max_iterations {
        for ch in 0..c {
            let mut plane = u.channel(ch).to_vec();
            hierarchy.vcycle(0, &mut plane, rhs.channel(ch));
            u.channel_mut(ch).copy_from_slice(&plane);
        }
        cycles += 1;
        let res = relative_residual(&u, rhs, stencil)?;
        history.push(res);
        converged = res <= config.tolerance;
    }

    Ok((
        u,
        SolverReport {
            solver: SolverKind::Multigrid,
            iterations: cycles,
            residual_history: history,
            wall_seconds: watch.seconds(),
            converged,
        },
    ))
}
