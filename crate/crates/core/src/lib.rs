//! Consensus protocols for multi-agent systems viewed as graph spectrum filters.
//!
//! A gain sequence `ε(0), ε(1), …` applied to the first-order protocol
//! `x(k+1) = (I − ε(k)L) x(k)` acts on each Laplacian eigen-component as the
//! polynomial `h(λ, T) = ∏ (1 − ε(k)λ)`. Consensus is reached exactly when this
//! filter annihilates every nonzero eigenvalue, and for an `M`-periodic sequence
//! the per-period convergence rate is `max |h(λ_i, M)|`.
//!
//! The crate is organized as:
//!
//! - [`graph`]: weighted undirected graphs, Laplacians and generators.
//! - [`spectrum`]: numerical and closed-form Laplacian spectra, spectral bands.
//! - [`filter`]: control sequences and the filter designers.
//! - [`chebyshev`]: Chebyshev polynomial machinery and closed-form worst-case rates.
//! - [`rate`]: exact and worst-case convergence rates, consensus checks.
//! - [`sim`]: discrete-time simulation of the agent dynamics.
//! - [`experiments`]: the reproducible tables, sweeps and response curves.

pub mod chebyshev;
pub mod error;
pub mod experiments;
pub mod filter;
pub mod format;
pub mod graph;
pub mod rate;
pub mod sim;
pub mod spectrum;

pub use error::{Error, Result};
pub use filter::{ControlSequence, FilterRoots, Method};
pub use graph::{Graph, GraphSpec};
pub use rate::RateReport;
pub use sim::SimulationTrace;
pub use spectrum::{LaplacianSpectrum, SpectralBand};
