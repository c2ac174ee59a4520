//! Abrikosov vortex lattices near the normal state.
//!
//! The crate is `no_std` (it needs `alloc`). Modules, bottom up:
//!
//! - [`lattice`]: normalized lattices, modular reduction, Wigner–Seitz cells, cocycles.
//! - [`theta`]: n-theta functions, their zeros, products, the singular family, the Wronskian.
//! - [`landau`]: Landau levels of the constant-field magnetic Laplacian and a finite-difference reference.
//! - [`symmetry`]: rotation actions on theta functions, eigenspace classification, irreducibility.
//! - [`bifurcation`]: the Galerkin map, Lyapunov–Schmidt reduction and branch tracing.
#![no_std]

extern crate alloc;

pub mod bifurcation;
pub mod landau;
pub mod lattice;
mod linalg;
pub mod quadrature;
pub mod symmetry;
pub mod theta;

pub use num_complex::Complex64 as C64;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Errors shared by all modules.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("contour passes through a zero after {attempts} perturbations")]
    Contour { attempts: usize },
    #[error("zero resolution failed: {0}")]
    Precision(&'static str),
    #[error("collocation residual {residual:.3e} exceeds {tolerance:.1e}")]
    Collocation { residual: f64, tolerance: f64 },
    #[error("rotation of order {k} does not preserve the space (residual {residual:.3e})")]
    Incompatible { k: usize, residual: f64 },
    #[error("eigenspace dimension ambiguous: singular value {0:.3e} in guard band")]
    Ambiguous(f64),
    #[error("kernel dimension {0} in the symmetry sector, expected 1")]
    KernelDimension(usize),
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("fold detected: d(gamma)/d(lambda) = {0:.3e}")]
    Fold(f64),
    #[error("quadrature under-resolved: {0:.3e} of spectral weight in top modes")]
    Aliasing(f64),
}

pub type Result<T> = core::result::Result<T, Error>;
