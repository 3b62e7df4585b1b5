//! `H_eff = H'_kin + Σ_l Σ_{p,q∈L_l} A_l[p,q] b*_{l,p} b_{l,q}` on a truncation, and the
//! exchange term `ℰ` it leaves behind on `Ψ_M`.

use rand::Rng;

use crate::dense::DenseOneBody;
use crate::error::{Error, Result};
use crate::lattice::{Momentum, Potential, TORUS_VOLUME};

use super::modes::{ModeSet, TruncatedLune};
use super::ops::{b_dag, Operator};
use super::state::{Amplitude, FockVector};

/// One symmetric matrix `A_l` per truncated lune, row-major, aligned with [`ModeSet::lunes`].
#[derive(Clone, Debug, PartialEq)]
pub struct LuneMatrices<S: Amplitude> {
    mats: Vec<Vec<S>>,
}

impl<S: Amplitude> LuneMatrices<S> {
    pub fn new(modes: &ModeSet, mats: Vec<Vec<S>>) -> Result<Self> {
        if mats.len() != modes.lunes().len() {
            return Err(Error::InvalidInput(format!("{} matrices for {} lunes", mats.len(), modes.lunes().len())));
        }
        for (lune, m) in modes.lunes().iter().zip(&mats) {
            let n = lune.len();
            if m.len() != n * n {
                return Err(Error::SupportViolation { k: lune.k.to_string(), expected: n * n, got: m.len() });
            }
            for i in 0..n {
                for j in 0..i {
                    if m[i * n + j] != m[j * n + i] {
                        return Err(Error::InvalidInput(format!("A at k = {} is not symmetric", lune.k)));
                    }
                }
            }
        }
        Ok(LuneMatrices { mats })
    }

    pub fn get(&self, lune: usize, row: usize, col: usize, dim: usize) -> &S {
        &self.mats[lune][row * dim + col]
    }

    pub fn matrix(&self, lune: usize) -> &[S] {
        &self.mats[lune]
    }

    /// `A_l φ` for a profile on lune `l`.
    pub fn mul(&self, lune: usize, phi: &[S]) -> Vec<S> {
        let n = phi.len();
        (0..n)
            .map(|i| (0..n).fold(S::zero(), |acc, j| acc + self.mats[lune][i * n + j].clone() * phi[j].clone()))
            .collect()
    }
}

/// Dense one-body data on every truncated lune.
#[derive(Clone, Debug)]
pub struct TruncatedSpectra {
    pub dense: Vec<Option<DenseOneBody>>,
    /// `Σ_l ‖Ẽ_l − h_l‖²_HS` over the truncation.
    pub hs_sum: f64,
}

/// `A_l = 2(Ẽ_l − h_l)` with `Ẽ_l` built on the truncated lune and `w_l = V̂_l/(2(2π)³)`.
pub fn dense_coefficients(modes: &ModeSet, potential: &Potential) -> Result<(LuneMatrices<f64>, TruncatedSpectra)> {
    let mut mats = Vec::with_capacity(modes.lunes().len());
    let mut dense = Vec::with_capacity(modes.lunes().len());
    let mut hs_sum = 0.0;
    for lune in modes.lunes() {
        let n = lune.len();
        let vhat = potential.vhat(lune.k);
        if vhat == 0.0 {
            mats.push(vec![0.0; n * n]);
            dense.push(None);
            continue;
        }
        let w = vhat / (2.0 * TORUS_VOLUME);
        let lambdas: Vec<f64> = lune.two_lambda.iter().map(|&t| t as f64 / 2.0).collect();
        let d = DenseOneBody::new(&lambdas, &vec![w.sqrt(); n])?;
        let diff = d.e_minus_h();
        hs_sum += diff.norm_squared();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                // symmetrize to remove eigensolver round-off
                m[i * n + j] = diff[(i, j)] + diff[(j, i)];
            }
        }
        mats.push(m);
        dense.push(Some(d));
    }
    Ok((LuneMatrices { mats }, TruncatedSpectra { dense, hs_sum }))
}

/// Small random rational entry `a/b` with `|a| ≤ 9`, `1 ≤ b ≤ 7`.
pub fn random_ratio<S: Amplitude, R: Rng>(rng: &mut R) -> S {
    let a: i64 = rng.gen_range(-9..=9);
    let b: i64 = rng.gen_range(1..=7);
    S::int(a) / S::int(b)
}

pub fn random_profile<S: Amplitude, R: Rng>(rng: &mut R, lune: &TruncatedLune) -> Vec<S> {
    (0..lune.len()).map(|_| random_ratio(rng)).collect()
}

/// Random symmetric test matrices, one per lune.
pub fn random_coefficients<S: Amplitude, R: Rng>(modes: &ModeSet, rng: &mut R) -> LuneMatrices<S> {
    let mats = modes
        .lunes()
        .iter()
        .map(|lune| {
            let n = lune.len();
            let mut m = vec![S::zero(); n * n];
            for i in 0..n {
                for j in 0..=i {
                    let x: S = random_ratio(rng);
                    m[i * n + j] = x.clone();
                    m[j * n + i] = x;
                }
            }
            m
        })
        .collect();
    LuneMatrices { mats }
}

/// Diagonal action of `H'_kin`.
pub fn apply_kinetic<S: Amplitude>(modes: &ModeSet, v: &FockVector<S>) -> FockVector<S> {
    v.map_states(|s, a, out| out.add_term(s, S::int(modes.kinetic_offset(s)) * a.clone()))
}

/// `Σ_l Σ_{p,q∈L_l} A_l[p,q] b*_{l,p} b_{l,q}`.
///
/// `b_{l,q}` needs `q` occupied and `q − l` empty, so each state is visited through its
/// occupied exterior modes and empty interior modes instead of through all `l`.
pub fn apply_quasi_bosonic<S: Amplitude>(modes: &ModeSet, a: &LuneMatrices<S>, v: &FockVector<S>) -> FockVector<S> {
    let lunes = modes.lunes();
    v.map_states(|s, amp, out| {
        for &q in modes.exterior() {
            if !s.occupied(q) {
                continue;
            }
            for &h in modes.interior() {
                if s.occupied(h) {
                    continue;
                }
                let Some((li, qpos)) = modes.pair_lookup(q, h) else { continue };
                let lune = &lunes[li];
                // b_{l,q} = c*_h c_q
                let Some((n1, t)) = s.hop(h, q) else { continue };
                let n = lune.len();
                for ppos in 0..n {
                    let coef = a.get(li, ppos, qpos, n);
                    if coef.is_zero() {
                        continue;
                    }
                    if let Some((n2, u)) = t.hop(lune.particles[ppos], lune.holes[ppos]) {
                        out.add_signed(u, n1 ^ n2, coef.clone() * amp.clone());
                    }
                }
            }
        }
    })
}

pub fn apply_heff<S: Amplitude>(modes: &ModeSet, a: &LuneMatrices<S>, v: &FockVector<S>) -> FockVector<S> {
    apply_kinetic(modes, v).plus(&apply_quasi_bosonic(modes, a, v))
}

/// `ℰ = Σ_{p,q∈L_k} φ_p φ_q b*_l(A_l e_p) c*_q c_{p−k}` with `l = k + p − q`.
///
/// `p ∈ L_l` always holds since `p − l = q − k` is the hole of `q`, so `l` is admissible.
pub fn apply_error_operator<S: Amplitude>(
    modes: &ModeSet,
    k_lune: usize,
    phi: &[S],
    a: &LuneMatrices<S>,
    v: &FockVector<S>,
) -> FockVector<S> {
    let lunes = modes.lunes();
    let lk = &lunes[k_lune];
    assert_eq!(phi.len(), lk.len(), "profile must live on the lune");
    v.map_states(|s, amp, out| {
        for (ip, fp) in phi.iter().enumerate() {
            if fp.is_zero() {
                continue;
            }
            for (iq, fq) in phi.iter().enumerate() {
                if fq.is_zero() {
                    continue;
                }
                let Some((n1, t)) = s.hop(lk.particles[iq], lk.holes[ip]) else { continue };
                let (li, pos_p) = modes.pair_lookup(lk.particles[ip], lk.holes[iq]).expect("l = k + p − q is admissible");
                let ll = &lunes[li];
                let n = ll.len();
                let base = fp.clone() * fq.clone() * amp.clone();
                for r in 0..n {
                    let coef = a.get(li, r, pos_p, n);
                    if coef.is_zero() {
                        continue;
                    }
                    if let Some((n2, u)) = t.hop(ll.particles[r], ll.holes[r]) {
                        out.add_signed(u, n1 ^ n2, coef.clone() * base.clone());
                    }
                }
            }
        }
    })
}

/// `ℰ` assembled term by term as an operator, from the double-sum form
/// `Σ_l Σ_{p∈L_k∩L_l} Σ_{q∈L_k} δ_{p−l,q−k} φ_p φ_q b*_l(A_l e_p) c*_q c_{p−k}`.
pub fn error_operator<S: Amplitude>(modes: &ModeSet, k_lune: usize, phi: &[S], a: &LuneMatrices<S>) -> Operator<S> {
    let lunes = modes.lunes();
    let lk = &lunes[k_lune];
    let mut total = Operator::zero();
    for (li, ll) in lunes.iter().enumerate() {
        let n = ll.len();
        for (pos_l, &p) in ll.particles.iter().enumerate() {
            let Some(ip) = lk.position_of_particle(p) else { continue };
            let Some(iq) = lk.position_of_hole(ll.holes[pos_l]) else { continue };
            let column: Vec<S> = (0..n).map(|r| a.get(li, r, pos_l, n).clone()).collect();
            let hop = Operator::monomial(
                phi[ip].clone() * phi[iq].clone(),
                vec![super::ops::Ladder::Create(lk.particles[iq]), super::ops::Ladder::Annihilate(lk.holes[ip])],
            );
            total = total.plus(&b_dag(ll, &column).compose(&hop));
        }
    }
    total
}

/// Top eigenpair of `2Ẽ_k` on the truncated lune.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedPlasmon {
    pub k: Momentum,
    pub lune: usize,
    pub epsilon: f64,
    pub phi: Vec<f64>,
    pub norm_inf: f64,
    pub norm6_cubed: f64,
}

pub fn truncated_plasmon(modes: &ModeSet, spectra: &TruncatedSpectra, k: Momentum) -> Result<TruncatedPlasmon> {
    let li = modes.lune_index(k).ok_or_else(|| Error::InvalidInput(format!("k = {k} is not admissible")))?;
    let d = spectra.dense[li]
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("potential vanishes at k = {k}")))?;
    let phi = d.top_eigenvector();
    let epsilon = 2.0 * d.eigenvalues[d.dim() - 1];
    let norm_inf = phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let norm6_cubed = phi.iter().map(|x| x.powi(6)).sum::<f64>().sqrt();
    Ok(TruncatedPlasmon { k, lune: li, epsilon, phi, norm_inf, norm6_cubed })
}

/// `Ψ_M = b*_k(φ)^M ψ_FS` for `M = 0..=max_m`.
pub fn build_psi_sequence<S: Amplitude>(
    modes: &ModeSet,
    lune: &TruncatedLune,
    phi: &[S],
    max_m: u32,
) -> Result<Vec<FockVector<S>>> {
    if phi.len() != lune.len() {
        return Err(Error::SupportViolation { k: lune.k.to_string(), expected: lune.len(), got: phi.len() });
    }
    let limit = modes.interior().len().min(modes.exterior().len()) as u32;
    if max_m > limit {
        return Err(Error::InvalidInput(format!("M = {max_m} exceeds the {limit} available particle-hole pairs")));
    }
    let op = b_dag(lune, phi);
    let mut out = vec![FockVector::basis(modes.fermi_state())];
    for _ in 0..max_m {
        let next = op.apply(out.last().expect("non-empty"));
        out.push(next);
    }
    Ok(out)
}

pub fn build_psi_m<S: Amplitude>(modes: &ModeSet, lune: &TruncatedLune, phi: &[S], m: u32) -> Result<FockVector<S>> {
    Ok(build_psi_sequence(modes, lune, phi, m)?.pop().expect("non-empty"))
}
