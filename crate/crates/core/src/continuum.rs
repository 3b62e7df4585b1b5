//! Thermodynamic-limit closed forms in units with `ħ²/2m = 1` and one spin state.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::TORUS_VOLUME;

/// Exponent of the validity window `|k| ≤ k_F^{0.45}` for the dispersion expansion.
pub const DISPERSION_WINDOW_EXPONENT: f64 = 0.45;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuumModel {
    pub g: f64,
    pub k_fermi: f64,
}

/// Both forms of the small-`k` plasmon dispersion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionEstimate {
    /// `√(ω₀² + (12/5)k_F²|k|²)`.
    pub sqrt_form: f64,
    /// `ω₀ + (6/5)k_F²|k|²/ω₀`.
    pub expanded: f64,
    /// `|k| ≤ k_F^{0.45}`; outside, both forms are reported but not trusted.
    pub in_window: bool,
}

impl ContinuumModel {
    pub fn new(g: f64, k_fermi: f64) -> Result<Self> {
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::InvalidInput(format!("coupling must be positive, got {g}")));
        }
        if !(k_fermi.is_finite() && k_fermi > 0.0) {
            return Err(Error::InvalidInput(format!("k_F must be positive, got {k_fermi}")));
        }
        Ok(ContinuumModel { g, k_fermi })
    }

    /// `n = k_F³/(6π²)`.
    pub fn density(&self) -> f64 {
        self.k_fermi.powi(3) / (6.0 * PI * PI)
    }

    /// `v_F = 2k_F`.
    pub fn fermi_velocity(&self) -> f64 {
        2.0 * self.k_fermi
    }

    pub fn ball_volume(&self) -> f64 {
        4.0 / 3.0 * PI * self.k_fermi.powi(3)
    }

    /// Volume of `B(k, k_F) \ B(0, k_F)` at `|k| = k_len`.
    pub fn lune_volume(&self, k_len: f64) -> f64 {
        let kf = self.k_fermi;
        if k_len >= 2.0 * kf {
            return self.ball_volume();
        }
        let lens = PI * (4.0 * kf + k_len) * (2.0 * kf - k_len).powi(2) / 12.0;
        self.ball_volume() - lens
    }

    /// `∫_{L_k} (k·p − |k|²/2)^β dp` over the continuum lune, for `0 < |k| ≤ 2k_F`.
    ///
    /// Slicing along `k·p` gives a disc part on `s ∈ [0, k_F − κ/2]` and an annulus-cap
    /// part on `[k_F − κ/2, k_F + κ/2]`, with `s = k·p/κ − κ/2`; both are polynomial.
    pub fn solid_lune_integral(&self, k_len: f64, beta: u32) -> Result<f64> {
        let kf = self.k_fermi;
        if !(k_len > 0.0 && k_len <= 2.0 * kf) {
            return Err(Error::Domain { value: k_len, reason: "solid lune slices need 0 < |k| ≤ 2k_F" });
        }
        let b = beta as i32;
        let bf = beta as f64;
        let kap = k_len;
        let lo = kf - 0.5 * kap;
        let hi = kf + 0.5 * kap;
        let disc = 2.0 * PI * kap.powi(b + 1) * lo.powi(b + 2) / (bf + 2.0);
        let a = kf * kf - 0.25 * kap * kap;
        let anti = |s: f64| a * s.powi(b + 1) / (bf + 1.0) + kap * s.powi(b + 2) / (bf + 2.0) - s.powi(b + 3) / (bf + 3.0);
        let cap = PI * kap.powi(b) * (anti(hi) - anti(lo));
        Ok(disc + cap)
    }

    /// `⟨v, h^β v⟩ ≈ V̂_k/(2(2π)³) ∫_{L_k} λ^β` for `β ∈ {1, 3}`.
    pub fn solid_lune_moment(&self, k_len: f64, beta: u32) -> Result<f64> {
        if beta != 1 && beta != 3 {
            return Err(Error::InvalidInput(format!("moment order must be 1 or 3, got {beta}")));
        }
        let w = self.g / (k_len * k_len) / (2.0 * TORUS_VOLUME);
        Ok(w * self.solid_lune_integral(k_len, beta)?)
    }

    /// `ω₀ = √(2gn) = √(g/(3π²)) k_F^{3/2}`.
    pub fn plasmon_frequency(&self) -> f64 {
        (2.0 * self.g * self.density()).sqrt()
    }

    pub fn dispersion_approx(&self, k_len: f64) -> Result<DispersionEstimate> {
        if !(k_len.is_finite() && k_len >= 0.0) {
            return Err(Error::Domain { value: k_len, reason: "|k| must be finite and non-negative" });
        }
        let w0 = self.plasmon_frequency();
        let q = 12.0 / 5.0 * self.k_fermi.powi(2) * k_len * k_len;
        Ok(DispersionEstimate {
            sqrt_form: (w0 * w0 + q).sqrt(),
            expanded: w0 + 0.5 * q / w0,
            in_window: k_len <= self.k_fermi.powf(DISPERSION_WINDOW_EXPONENT),
        })
    }

    /// `(12/5)k_F²/(2ω₀)`, the coefficient of `|k|²` in the expanded dispersion.
    pub fn dispersion_coefficient(&self) -> f64 {
        1.2 * self.k_fermi.powi(2) / self.plasmon_frequency()
    }

    /// `x²/8` with `x = (12/5)k_F²|k|²/ω₀²`; bounds the relative gap between the two forms.
    pub fn taylor_gap_bound(&self, k_len: f64) -> f64 {
        let w0 = self.plasmon_frequency();
        let x = 12.0 / 5.0 * self.k_fermi.powi(2) * k_len * k_len / (w0 * w0);
        x * x / 8.0
    }
}
