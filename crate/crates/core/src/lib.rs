//! Estimation of shortest-path-structured covariance matrices from Gaussian
//! samples that read only a sparse-ruler subset of entries.
//!
//! A covariance matrix is shortest-path structured over an unweighted graph
//! when `Σ[i][j] = a[dist(i, j)]`. Placing a sparse ruler along a diameter path
//! gives `O(√D)` nodes whose pairwise distances cover `0..=D`, so every `a[s]`
//! can be estimated by reading only those entries of each sample.
//!
//! Modules, bottom-up:
//!
//! - [`linalg`]: dense symmetric matrices, Jacobi eigensolver, norms, PSD root.
//! - [`ruler`]: integer sparse rulers and their per-distance pair classes.
//! - [`graph`]: graph families, BFS distances, diameter paths, graph rulers.
//! - [`spcov`]: the covariance model and star-graph block structure.
//! - [`sampling`]: seeded Gaussian draws and masked samples.
//! - [`estimator`]: the ruler estimator and error metrics.
//! - [`toeplitz`]: circulant embedding bounds and the frequency certificate.
//! - [`bench`]: sweeps and lower-bound diagnostics.
//! - [`cli`]: the `spcov` command-line front end.

pub mod bench;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod linalg;
pub mod ruler;
pub mod sampling;
pub mod spcov;
pub mod toeplitz;

mod fmt;

pub use error::{Error, Result};
