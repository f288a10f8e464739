//! Poisson solvers for `Δu = L` with a zero Dirichlet exterior.
//!
//! The suite covers one dense direct factorization (the small-instance
//! oracle every other solver is validated against), three stationary
//! iterations, a sine-transform direct solver, and geometric multigrid.
//! All of them share the residual convention
//! `‖L − Δu‖₂ / max(‖L‖₂, 1e-12)` and start iterating from u = 0.

mod cholesky;
mod dst;
mod multigrid;
mod relax;

pub use cholesky::solve_cholesky_dense;
pub use dst::{solve_dst, DstPlan};
pub use multigrid::solve_multigrid;
pub use relax::{solve_gauss_seidel, solve_jacobi, solve_sor};

use crate::error::{Error, Result};
use crate::field::{apply_laplacian, Field, ScalarField, Stencil3x3};

/// Floor for the residual denominator, so `L = 0` does not divide by zero.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

/// Which solver to run; carried by [`SolverConfig`] and the codec header-free
/// decode path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Cholesky,
    Jacobi,
    GaussSeidel,
    Sor,
    Dst,
    Multigrid,
    /// Shared-kernel pyramid network; needs a kernel checkpoint.
    Wcnn,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Cholesky => "cholesky",
            SolverKind::Jacobi => "jacobi",
            SolverKind::GaussSeidel => "gauss-seidel",
            SolverKind::Sor => "sor",
            SolverKind::Dst => "dst",
            SolverKind::Multigrid => "multigrid",
            SolverKind::Wcnn => "wcnn",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cholesky" => Ok(SolverKind::Cholesky),
            "jacobi" => Ok(SolverKind::Jacobi),
            "gauss-seidel" | "gs" => Ok(SolverKind::GaussSeidel),
            "sor" => Ok(SolverKind::Sor),
            "dst" => Ok(SolverKind::Dst),
            "multigrid" | "mg" => Ok(SolverKind::Multigrid),
            "wcnn" => Ok(SolverKind::Wcnn),
            other => Err(Error::InvalidValue(format!("unknown solver {other:?}"))),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Tolerances and iteration limits for the iterative solvers.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub solver: SolverKind,
    /// Relative residual at which iteration stops.
    pub tolerance: f64,
    /// Iteration cap (V-cycles for multigrid).
    pub max_iterations: usize,
    /// SOR relaxation factor; `None` picks the model-problem optimum
    /// `2 / (1 + sin(π / (min(H, W) + 1)))`.
    pub sor_omega: Option<f64>,
    /// Multigrid level cap; `None` coarsens until the short side drops
    /// below 4 pixels.
    pub mg_levels: Option<usize>,
    pub mg_pre_sweeps: usize,
    pub mg_post_sweeps: usize,
}

impl SolverConfig {
    pub fn new(solver: SolverKind) -> Self {
        Self {
            solver,
            tolerance: 1e-6,
            max_iterations: 10_000,
            sor_omega: None,
            mg_levels: None,
            mg_pre_sweeps: 2,
            mg_post_sweeps: 2,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_sor_omega(mut self, omega: f64) -> Self {
        self.sor_omega = Some(omega);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::BadConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::BadConfig("max_iterations must be >= 1".into()));
        }
        if let Some(omega) = self.sor_omega {
            if !(omega > 0.0 && omega < 2.0) {
                return Err(Error::BadConfig(format!(
                    "sor omega must lie in (0, 2), got {omega}"
                )));
            }
        }
        if self.mg_pre_sweeps + self.mg_post_sweeps == 0 {
            return Err(Error::BadConfig(
                "multigrid needs at least one smoothing sweep".into(),
            ));
        }
        Ok(())
    }
}

/// What an iterative solve did: residual trace, wall time, convergence flag.
#[derive(Clone, Debug)]
pub struct SolverReport {
    pub solver: SolverKind,
    /// Iterations (or V-cycles) actually run.
    pub iterations: usize,
    /// Relative residual before each iteration and after the last one;
    /// never empty.
    pub residual_history: Vec<f64>,
    pub wall_seconds: f64,
    pub converged: bool,
}

impl SolverReport {
    pub fn final_residual(&self) -> f64 {
        *self
            .residual_history
            .last()
            .expect("residual history is never empty")
    }
}

/// `‖L − Δu‖₂ / max(‖L‖₂, RESIDUAL_FLOOR)` over all channels.
pub fn relative_residual(u: &Field, rhs: &ScalarField, stencil: &Stencil3x3) -> Result<f64> {
    let au = apply_laplacian(u, stencil)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&a, &b) in au.as_slice().iter().zip(rhs.as_slice()) {
        let d = b - a;
        num += d * d;
        den += b * b;
    }
    Ok(num.sqrt() / den.sqrt().max(RESIDUAL_FLOOR))
}

/// Model-problem optimal SOR relaxation factor for an H x W grid.
pub fn sor_default_omega(height: usize, width: usize) -> f64 {
    let n = height.min(width) as f64;
    2.0 / (1.0 + (std::f64::consts::PI / (n + 1.0)).sin())
}
