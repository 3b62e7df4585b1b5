//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls into the library's lune builder or secular solver: lunes come from
//! a plain cube scan of the defining set, spectra from a dense eigendecomposition built
//! directly from that scan.

#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use plasmon_core::Momentum;

pub const TORUS_VOLUME: f64 = 8.0 * std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI;

/// `{p : |p−k|² ≤ R² < |p|²}` by scanning the cube that contains `B_F + k`.
pub fn brute_lune(radius_sq: i64, k: Momentum) -> Vec<Momentum> {
    let r = (radius_sq as f64).sqrt().ceil() as i64 + 1;
    let reach = r + k.x.abs().max(k.y.abs()).max(k.z.abs());
    let mut out = Vec::new();
    for x in -reach..=reach {
        for y in -reach..=reach {
            for z in -reach..=reach {
                let p = Momentum::new(x, y, z);
                if (p - k).norm_sq() <= radius_sq && p.norm_sq() > radius_sq {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Levels of `2λ = |p|² − |p−k|²` over the brute-force lune.
pub fn brute_histogram(radius_sq: i64, k: Momentum) -> Vec<(i64, u64)> {
    let mut h: BTreeMap<i64, u64> = BTreeMap::new();
    for p in brute_lune(radius_sq, k) {
        *h.entry(p.norm_sq() - (p - k).norm_sq()).or_default() += 1;
    }
    h.into_iter().collect()
}

pub fn brute_ball(radius_sq: i64) -> Vec<Momentum> {
    let r = (radius_sq as f64).sqrt().ceil() as i64 + 1;
    let mut out = Vec::new();
    for x in -r..=r {
        for y in -r..=r {
            for z in -r..=r {
                let p = Momentum::new(x, y, z);
                if p.norm_sq() <= radius_sq {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Dense `Ẽ` for the Coulomb-type problem `⟨e_p, v⟩ = √(V̂/(2(2π)³))` on the brute lune.
///
/// The spectrum comes from the full `|L_k| × |L_k|` matrix `h² + 2uuᵀ`. `Ẽ − h` is formed after
/// an orthogonal rotation inside each block of equal `λ` that takes `u` onto a single basis
/// vector: the rotated-out directions are eigenvectors of both `Ẽ` and `h` with the same value, so
/// `Ẽ − h` lives on the remaining one vector per level. Without the rotation the full matrix has
/// eigenvalue clusters a distance `O(w)` apart and f64 eigenvectors lose about `‖h²‖/w` ulps.
pub struct DenseOracle {
    pub lambdas: Vec<f64>,
    pub w: f64,
    /// Eigenvalues of `2Ẽ`, ascending.
    pub eps: Vec<f64>,
    /// `Ẽ − h` on the rotated span, one row and column per distinct level.
    pub e_minus_h: DMatrix<f64>,
}

impl DenseOracle {
    pub fn new(radius_sq: i64, k: Momentum, vhat: f64) -> Self {
        let lambdas: Vec<f64> =
            brute_lune(radius_sq, k).into_iter().map(|p| (p.norm_sq() - (p - k).norm_sq()) as f64 / 2.0).collect();
        Self::from_lambdas(lambdas, vhat / (2.0 * TORUS_VOLUME))
    }

    pub fn from_lambdas(lambdas: Vec<f64>, w: f64) -> Self {
        let n = lambdas.len();
        let h = DMatrix::from_diagonal(&DVector::from_vec(lambdas.clone()));
        let hv = DVector::from_iterator(n, lambdas.iter().map(|l| (l * w).sqrt()));
        let full = SymmetricEigen::new(&h * &h + &hv * hv.transpose() * 2.0);
        let mut eps: Vec<f64> = full.eigenvalues.iter().map(|m| 2.0 * m.max(0.0).sqrt()).collect();
        eps.sort_by(f64::total_cmp);

        // the block of level λ carries √(λw)·(1,…,1); its rotated image is √(mλw)·e₁
        let mut blocks: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
        for &l in &lambdas {
            let e = blocks.entry(l.to_bits()).or_insert((l, 0.0));
            e.1 += l * w;
        }
        let lv: Vec<f64> = blocks.values().map(|b| b.0).collect();
        let ur = DVector::from_iterator(lv.len(), blocks.values().map(|b| b.1.sqrt()));
        let m = lv.len();
        let hr = DMatrix::from_diagonal(&DVector::from_vec(lv.clone()));
        let eig = SymmetricEigen::new(&hr * &hr + &ur * ur.transpose() * 2.0);
        let q = &eig.eigenvectors;
        assert!((q.transpose() * q - DMatrix::<f64>::identity(m, m)).amax() < 1e-10, "eigenvectors not orthonormal");
        // X = Ẽ − h solves ẼX + Xh = 2uuᵀ; in Ẽ's eigenbasis the solution is entrywise and
        // free of the cancellation in Q√ΛQᵀ − h
        let qu = q.transpose() * &ur;
        let y = DMatrix::from_fn(m, m, |a, i| 2.0 * qu[a] * ur[i] / (eig.eigenvalues[a].max(0.0).sqrt() + lv[i]));
        DenseOracle { lambdas, w, eps, e_minus_h: q * y }
    }

    pub fn top(&self) -> f64 {
        *self.eps.last().unwrap()
    }

    pub fn hs_norm_sq(&self) -> f64 {
        self.e_minus_h.norm_squared()
    }

    /// `tr(Ẽ − h) − w|L_k|`.
    pub fn ecorr(&self) -> f64 {
        self.e_minus_h.trace() - self.w * self.lambdas.len() as f64
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
