//! Pseudo-spectral simulation and verification toolkit for stochastic
//! nonlinear Schrödinger equations on d-dimensional tori.
//!
//! The crate provides, in rough dependency order:
//!
//! * [`torus`] — discrete torus geometry, spectral/physical transforms, the
//!   free propagator and the nonlinearity;
//! * [`noise`] — smoothing operators, cylindrical Wiener sampling and the
//!   additive stochastic convolution;
//! * [`norms`] — mass, energy, Sobolev/Fourier-Lebesgue norms and the
//!   discrete X^{s,b} norm in interaction representation;
//! * [`stepper`] — split-step and exponential integrators for all noise
//!   modes, the cutoff-truncated evolution with stopping times;
//! * [`ensemble`] — deterministic Monte Carlo over independent noise paths,
//!   drift identities and stopping-time experiments;
//! * [`estimates`] — empirical constants for Strichartz, product and
//!   multilinear inequalities, plus the singular-integral identity check;
//! * [`io`] — snapshot/trajectory/operator file formats, run configuration
//!   and report serialization;
//! * [`cli`] — the `snls` command line.
//!
//! Ensemble and sweep loops run data-parallel under the default `parallel`
//! feature and fall back to sequential execution without it; results are
//! byte-identical either way.

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod estimates;
mod fft;
pub mod io;
pub mod noise;
pub mod norms;
pub mod stepper;
pub mod torus;

pub use error::{Error, Result};

pub mod exec {
    //! Execution backend for the embarrassingly parallel loops.

    /// Runs `n` independent jobs and collects their outputs in index order.
    /// Parallel under the `parallel` feature, sequential otherwise; the
    /// result does not depend on scheduling.
    pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..n).map(f).collect()
        }
    }
}

pub(crate) use exec::map_indexed;
