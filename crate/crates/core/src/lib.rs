//! Collective excitations of the quasi-bosonic electron gas on the unit-cell torus.
//!
//! The crate is organized bottom-up:
//!
//! * [`lattice`]: Fermi balls, lunes and exact pair-energy histograms.
//! * [`spectral`]: the rank-one secular structure of `Ẽ_k = (h² + 2P_{h^{1/2}v})^{1/2}`.
//! * [`correlation`]: per-mode and total correlation energies, by quadrature and by trace.
//! * [`continuum`]: thermodynamic-limit closed forms.
//! * [`fockcheck`]: an exact fermionic Fock-space verifier on truncated mode sets.
//!
//! All spectral quantities are eigenvalues of `2Ẽ_k` unless a function says otherwise.

pub mod continuum;
pub mod correlation;
pub mod dense;
pub mod error;
pub mod fockcheck;
pub mod lattice;
pub mod quad;
pub mod spectral;

pub use error::{Error, Result};
pub use lattice::{FermiBall, LuneHistogram, Momentum, Potential};
