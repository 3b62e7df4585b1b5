//! Correlation energy per mode `k` and summed over a cutoff ball.
//!
//! Per mode, `tr(Ẽ_k − h_k) − w|L_k| = (1/π)∫₀^∞ F(x_k(t)) dt` with `F(x) = log(1+x) − x`
//! and `x_k(t) = 2w Σ_{p∈L_k} λ/(λ² + t²)`. Both sides are implemented independently.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;

use crate::continuum::ContinuumModel;
use crate::error::{Error, Result};
use crate::lattice::{FermiBall, Momentum, Potential, TORUS_VOLUME};
use crate::quad;
use crate::spectral::{OneBodyProblem, RankOneSpectrum};

/// `log(1+x) − x`, by series below `|x| < 0.05` where the subtraction would cancel.
pub fn log1p_minus_x(x: f64) -> f64 {
    if x.abs() < 0.05 {
        // −x²/2 + x³/3 − …; 16 terms reach 0.05¹⁸ < 1e-23
        let mut term = x;
        let mut sum = 0.0;
        for n in 2..=17 {
            term *= -x;
            sum += term / n as f64;
        }
        sum
    } else {
        x.ln_1p() - x
    }
}

/// `(1/π)∫₀^∞ F(x(t)) dt` by adaptive Gauss–Kronrod in `θ` with `t = λ_max tan θ`.
pub fn ecorr_k_quadrature(problem: &OneBodyProblem, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    if problem.vhat() == 0.0 || problem.histogram().is_empty() {
        return Ok(0.0);
    }
    let w = problem.weight_per_mode();
    let levels: Vec<(f64, f64)> =
        problem.histogram().levels.iter().map(|&(t, m)| (t as f64 / 2.0, m as f64)).collect();
    let lmax = problem.lambda_max();
    let integrand = |theta: f64| {
        let tan = theta.tan();
        let t2 = (lmax * tan).powi(2);
        let x = 2.0 * w * levels.iter().map(|&(l, m)| m * l / (l * l + t2)).sum::<f64>();
        log1p_minus_x(x) * lmax * (1.0 + tan * tan)
    };
    // the π⁻¹ prefactor is applied after integration, so scale the tolerance up
    let integral = quad::integrate(integrand, 0.0, FRAC_PI_2, tol * PI)?;
    Ok(integral / PI)
}

/// `Σ_n (√μ̃_n − λ_n) − w|L_k|`.
pub fn ecorr_k_trace(spectrum: &RankOneSpectrum, problem: &OneBodyProblem) -> Result<f64> {
    if spectrum.base_levels.len() != problem.histogram().levels.len() {
        return Err(Error::InvalidInput("spectrum does not belong to this problem".into()));
    }
    Ok(spectrum.trace_e_minus_h() - problem.weight_per_mode() * problem.histogram().size as f64)
}

/// Second-order term `−w² Σ_{p,q∈L_k} 1/(λ_p + λ_q)`, i.e. `(1/π)∫ −x(t)²/2 dt`.
pub fn ecorr_k_second_order(problem: &OneBodyProblem) -> f64 {
    let w = problem.weight_per_mode();
    let lv = &problem.histogram().levels;
    let mut s = 0.0;
    for &(ti, mi) in lv {
        for &(tj, mj) in lv {
            s += (mi * mj) as f64 * 2.0 / (ti + tj) as f64;
        }
    }
    -w * w * s
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationResult {
    /// Quadrature value for every `0 < |k| ≤ k_cutoff`.
    pub per_k: BTreeMap<Momentum, f64>,
    /// `Σ per_k + tail_estimate`.
    pub total: f64,
    pub k_cutoff: u32,
    /// Estimate for `|k| > k_cutoff` from `F(x) ≈ −x²/2`; see [`ecorr_total`].
    pub tail_estimate: f64,
}

impl CorrelationResult {
    pub fn lattice_sum(&self) -> f64 {
        self.per_k.values().sum()
    }
}

/// Correlation energy summed over `0 < |k| ≤ k_cutoff`, plus a separately reported tail.
///
/// Each cubic orbit is computed once. The tail uses `F(x) ≈ −x²/2` with all `λ` on
/// `L_k` replaced by their mean `⟨v,hv⟩/‖v‖²`, which gives `−‖v‖⁴/(2λ̄)` per mode. For
/// Coulomb this is integrated radially with continuum lune volumes; for a table it is
/// summed over the support beyond the cutoff using the exact second-order term.
pub fn ecorr_total(ball: &FermiBall, potential: &Potential, k_cutoff: u32, tol: f64) -> Result<CorrelationResult> {
    if k_cutoff == 0 {
        return Err(Error::InvalidInput("k_cutoff must be at least 1".into()));
    }
    let kc = k_cutoff as i64;
    let kc2 = kc * kc;
    let within = |k: Momentum| {
        let n2 = k.norm_sq();
        n2 > 0 && n2 <= kc2
    };
    // Coulomb values depend on the cubic orbit only; a table need not be cubic-symmetric
    let reps: Vec<Momentum> = match potential {
        Potential::Coulomb { g } if *g > 0.0 => {
            let mut reps = Vec::new();
            for x in 0..=kc {
                for y in 0..=x {
                    for z in 0..=y {
                        let k = Momentum::new(x, y, z);
                        if within(k) {
                            reps.push(k);
                        }
                    }
                }
            }
            reps
        }
        Potential::Coulomb { .. } => Vec::new(),
        Potential::Table(t) => t.keys().copied().filter(|&k| within(k)).collect(),
    };
    let values: Vec<(Momentum, f64)> = reps
        .par_iter()
        .map(|&k| {
            let p = OneBodyProblem::from_potential(ball, potential, k)?;
            Ok((k, ecorr_k_quadrature(&p, tol)?))
        })
        .collect::<Result<_>>()?;
    let computed: BTreeMap<Momentum, f64> = values.into_iter().collect();
    let lookup = |k: Momentum| match potential {
        Potential::Coulomb { .. } => computed.get(&k.canonical()).copied(),
        Potential::Table(_) => computed.get(&k).copied(),
    };
    let mut per_k = BTreeMap::new();
    for x in -kc..=kc {
        for y in -kc..=kc {
            for z in -kc..=kc {
                let k = Momentum::new(x, y, z);
                if within(k) {
                    per_k.insert(k, lookup(k).unwrap_or(0.0));
                }
            }
        }
    }
    let tail_estimate = match potential {
        Potential::Coulomb { g } => coulomb_tail(ball, *g, k_cutoff as f64)?,
        Potential::Table(t) => {
            let mut s = 0.0;
            for &k in t.keys() {
                if k.norm_sq() > kc2 {
                    s += ecorr_k_second_order(&OneBodyProblem::from_potential(ball, potential, k)?);
                }
            }
            s
        }
    };
    let lattice: f64 = per_k.values().sum();
    Ok(CorrelationResult { per_k, total: lattice + tail_estimate, k_cutoff, tail_estimate })
}

// ∫_K^∞ 4πr² (−‖v‖⁴/(2λ̄)) dr with w = g/(2(2π)³r²), ‖v‖² = wNf, Σλ = Nr²/2 and
// λ̄ = r²/(2f), where f = |L|/N is the continuum lune fraction.
fn coulomb_tail(ball: &FermiBall, g: f64, cutoff: f64) -> Result<f64> {
    if g == 0.0 {
        return Ok(0.0);
    }
    let n = ball.n_particles() as f64;
    let model = (ball.radius_sq() > 0).then(|| ContinuumModel::new(g, ball.k_fermi())).transpose()?;
    let per_mode = |r: f64| {
        let w = g / (2.0 * TORUS_VOLUME * r * r);
        let f = model.as_ref().map_or(1.0, |m| m.lune_volume(r) / m.ball_volume());
        -w * w * n * n * f * f * f / (r * r)
    };
    // r = K/s maps (K, ∞) to (0, 1]
    let integrand = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let r = cutoff / s;
        4.0 * PI * r * r * per_mode(r) * cutoff / (s * s)
    };
    let scale = per_mode(cutoff).abs() * cutoff.powi(3) + f64::MIN_POSITIVE;
    quad::integrate(integrand, 0.0, 1.0, 1e-10 * scale)
}
