//! Images as sparse Laplacian fields.
//!
//! The discrete Laplacian of a natural image is sparse and heavy-tailed,
//! and with a zero Dirichlet exterior the image is the *unique* solution
//! of the Poisson equation `Δu = L`. This crate treats that field as the
//! image representation: [`field`] computes the forward transform,
//! [`codec`] stores fields with optional dead-zone thresholding and
//! quantization, [`solvers`] reconstructs with classical direct and
//! iterative methods, [`wcnn`] reconstructs with a 177-parameter
//! shared-kernel pyramid network, [`train`] fits that network's kernels
//! by hand-rolled backpropagation, and [`analytics`] measures the
//! distributions, spectra, and solver timings that justify the whole
//! scheme.

mod error;
mod timing;

pub mod analytics;
pub mod codec;
pub mod field;
#[cfg(feature = "png")]
pub mod io;
pub mod solvers;
pub mod synth;
pub mod train;
pub mod wcnn;

pub use error::{Error, Result};
pub use field::{
    apply_laplacian, laplacian, stencil, Field, RasterImage, ScalarField, Stencil3x3, StencilId,
};
