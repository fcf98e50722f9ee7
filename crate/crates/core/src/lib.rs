//! Numerical laboratory for suspension foliations.
//!
//! A suspension model is a compact manifold `F x [0,1]` with the ends glued by
//! an irrational rotation; the `[0,1]` direction foliates it by one-dimensional
//! leaves whose closures stratify the space. The crate builds three such
//! models (flat torus, round sphere, product-of-circles times sphere), computes
//! the spectrum of the Laplacian restricted to basic functions (functions
//! constant on leaf closures), enumerates relatively closed transverse geodesic
//! arcs together with their sojourn times, and synthesizes the basic wave trace
//! to verify numerically that its singularities sit on those sojourn times.
//!
//! Module map:
//! - [`model`]: suspension geometry, strata, leaf closures, metric data
//! - [`grid`] / [`calculus`]: volume-weighted grids, the basic projector, full
//!   and basic Laplacians, the commutation residual
//! - [`spectral`]: analytic and numeric basic spectra plus comparison
//! - [`ode`] / [`flow`] / [`sojourn`]: transverse Hamiltonian flow, arc
//!   detection, sojourn-time catalogs
//! - [`wavetrace`]: frequency-windowed trace sums, singularity detection,
//!   cutoff traces, the Poisson-relation verdict

pub mod calculus;
pub mod error;
pub mod flow;
pub mod grid;
pub mod model;
pub mod ode;
pub mod quad;
pub mod sojourn;
pub mod spectral;
pub mod wavetrace;

pub use error::{Error, Result};
