//! Time-frequency continuous-variable simulation of single photons.
//!
//! The frequency and arrival time of a photon that occupies its own
//! auxiliary mode obey a canonical commutation relation, so Hermite-Gauss
//! spectra play the role of Fock states and quadratic time-frequency gates
//! act as Gaussian (symplectic) operations. The crate is organised as:
//!
//! - [`hg`]: Hermite-Gauss modes, Gauss-Hermite quadrature, spectral states
//! - [`gaussian`]: N-mode time-frequency Gaussian states, gates, phase space
//! - [`two_photon`]: joint spectral amplitudes and frequency-domain HOM
//! - [`metrology`]: the two-photon interferometer and phase sensitivity
//! - [`hafnian`]: exact hafnian kernels and repeated-index reduction
//! - [`fgbs`]: frequency-based Gaussian boson sampling
//!
//! With the default `parallel` feature the data-parallel loops (grid
//! evaluation, pattern tables, hafnian branches, quadrature) run on rayon;
//! without it the same code runs sequentially and yields identical output.

pub mod error;
pub mod fgbs;
pub mod gaussian;
pub mod hafnian;
pub mod hg;
pub mod metrology;
pub mod par;
pub mod two_photon;

mod fmt;

pub use error::{Error, Flagged, Result, Warning};
pub use fmt::sig17;
