//! Exact fermionic Fock-space sandbox on a finite momentum truncation.
//!
//! Modes are the Fermi ball `|p|² ≤ R²` plus every exterior mode up to a shell cap, and
//! the admissible `k` are all particle−hole differences, so every `Σ_k` is complete on
//! the truncation. Lunes are truncated to `L_k ∩ modes`.
//!
//! **The trial profile `φ` is the top eigenvector of `2Ẽ_k` built on the truncated lune,
//! not the restriction of the full-lune eigenvector.** The operator algebra never uses
//! lune completeness, so every identity stays exact on the truncation; the full-lune
//! numbers come from the secular solver instead.
//!
//! Amplitudes are generic over [`Amplitude`]: `f64` for the physical coefficients
//! `A_l = 2(Ẽ_l − h_l)`, `BigRational` with random symmetric `A_l` and random `φ` for
//! the identities that hold for any such choice.

mod heff;
mod modes;
mod ops;
mod state;
mod suite;

pub use heff::{
    apply_error_operator, apply_heff, apply_kinetic, apply_quasi_bosonic, build_psi_m, build_psi_sequence,
    dense_coefficients, error_operator, random_coefficients, random_profile, truncated_plasmon, LuneMatrices,
    TruncatedPlasmon, TruncatedSpectra,
};
pub use modes::{ModeSet, TruncatedLune, MAX_MODES};
pub use ops::{
    anticommutator_apply, b, b_dag, b_dag_single, b_single, c, c_dag, commutator_apply, exchange_commutator_diagonal,
    exchange_commutator_formula, exchange_correction, Ladder, Operator,
};
pub use state::{Amplitude, FockState, FockVector, StateAmplitude};
pub use suite::{
    residual_scaling, verify_suite, CheckKind, CheckOutcome, FailureArtifact, ResidualPoint, ResidualScaling,
    SuiteConfig, SuiteReport,
};

use crate::error::Result;
use crate::lattice::{Potential, TORUS_VOLUME};

/// `⟨ψ_FS, H_N ψ_FS⟩` by applying the second-quantized kinetic and pair-interaction terms
/// to the Fermi state word by word.
///
/// Only terms whose created momenta lie in the ball can overlap with `ψ_FS`, so the mode
/// set is the ball itself.
pub fn fermi_state_expectation(radius_sq: i64, potential: &Potential) -> Result<f64> {
    let modes = ModeSet::new(radius_sq, radius_sq)?;
    let fs = FockVector::<f64>::basis(modes.fermi_state());
    let mut h = Operator::zero();
    for (i, p) in modes.modes().iter().enumerate() {
        h.push(p.norm_sq() as f64, vec![Ladder::Create(i), Ladder::Annihilate(i)]);
    }
    let pref = 1.0 / (2.0 * TORUS_VOLUME);
    let ms = modes.modes();
    for (ip, &p) in ms.iter().enumerate() {
        for (ipk, &pk) in ms.iter().enumerate() {
            let k = pk - p;
            if k.is_zero() {
                continue;
            }
            let vk = potential.vhat(k);
            if vk == 0.0 {
                continue;
            }
            for (iq, &q) in ms.iter().enumerate() {
                let Some(iqk) = modes.index_of(q - k) else { continue };
                // c*_{p+k} c*_{q−k} c_q c_p
                h.push(
                    pref * vk,
                    vec![Ladder::Create(ipk), Ladder::Create(iqk), Ladder::Annihilate(iq), Ladder::Annihilate(ip)],
                );
            }
        }
    }
    Ok(fs.dot(&h.apply(&fs)))
}
