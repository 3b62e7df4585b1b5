//! Integer lattice geometry: Fermi balls, lunes and their pair-energy histograms.
//!
//! Pair energies are kept as the exact integer `2λ_{k,p} = 2k·p − |k|²`, so grouping
//! into levels never needs a tolerance.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default memory budget for a Fermi ball, in bytes of materialized points.
pub const DEFAULT_MEMORY_BUDGET: u128 = 16 << 30;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Momentum {
    pub x: i64,
    pub y: i64,
    pub z: i64,
}

impl Momentum {
    pub const ZERO: Momentum = Momentum { x: 0, y: 0, z: 0 };

    pub const fn new(x: i64, y: i64, z: i64) -> Self {
        Momentum { x, y, z }
    }

    /// `j` times the first unit vector.
    pub const fn axis(j: i64) -> Self {
        Momentum { x: j, y: 0, z: 0 }
    }

    pub fn norm_sq(self) -> i64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn dot(self, other: Momentum) -> i64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn is_zero(self) -> bool {
        self == Momentum::ZERO
    }

    /// Representative of the orbit under coordinate permutations and sign flips:
    /// absolute values sorted in decreasing order.
    pub fn canonical(self) -> Momentum {
        let mut c = [self.x.abs(), self.y.abs(), self.z.abs()];
        c.sort_unstable_by(|a, b| b.cmp(a));
        Momentum::new(c[0], c[1], c[2])
    }

    /// Number of distinct images under the 48-element cubic group.
    pub fn orbit_size(self) -> u64 {
        let c = self.canonical();
        let nonzero = [c.x, c.y, c.z].iter().filter(|&&v| v != 0).count() as u32;
        let perms = if c.x == c.y && c.y == c.z {
            1
        } else if c.x == c.y || c.y == c.z {
            3
        } else {
            6
        };
        perms * 2u64.pow(nonzero)
    }
}

impl Add for Momentum {
    type Output = Momentum;
    fn add(self, o: Momentum) -> Momentum {
        Momentum::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Momentum {
    type Output = Momentum;
    fn sub(self, o: Momentum) -> Momentum {
        Momentum::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Momentum {
    type Output = Momentum;
    fn neg(self) -> Momentum {
        Momentum::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Momentum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

pub(crate) fn isqrt(n: i64) -> i64 {
    debug_assert!(n >= 0);
    (n as u64).isqrt() as i64
}

/// All lattice points with `|p|² ≤ R²`, stored as z-columns over the (x, y) disc.
///
/// Column `(x, y)` holds `z ∈ [−c, c]` with `c = ⌊√(R² − x² − y²)⌋`; the table is
/// `(2r+1)²` entries for `r = ⌊√R²⌋`, so balls with 10⁹ points stay cheap.
#[derive(Clone, Debug)]
pub struct FermiBall {
    radius_sq: i64,
    r: i64,
    // -1 marks an absent column
    half_heights: Vec<i32>,
    n_particles: u64,
}

impl FermiBall {
    pub fn new(radius_sq: i64) -> Result<Self> {
        Self::with_budget(radius_sq, DEFAULT_MEMORY_BUDGET)
    }

    /// Fails with a capacity error when the point set, materialized as `Momentum`s,
    /// would exceed `budget` bytes.
    pub fn with_budget(radius_sq: i64, budget: u128) -> Result<Self> {
        if radius_sq < 0 {
            return Err(Error::InvalidInput(format!("radius_sq must be non-negative, got {radius_sq}")));
        }
        let r = isqrt(radius_sq);
        // continuum volume plus surface slack bounds the count from above
        let rf = (radius_sq as f64).sqrt() + 1.0;
        let estimate = (4.0 / 3.0 * std::f64::consts::PI * rf * rf * rf).ceil() as u128;
        let needed = estimate * std::mem::size_of::<Momentum>() as u128;
        if needed > budget {
            return Err(Error::Capacity { what: "Fermi ball points", needed, budget });
        }
        let side = (2 * r + 1) as usize;
        let mut half_heights = vec![-1i32; side * side];
        let mut n_particles = 0u64;
        for x in -r..=r {
            for y in -r..=r {
                let rest = radius_sq - x * x - y * y;
                if rest >= 0 {
                    let c = isqrt(rest);
                    half_heights[(x + r) as usize * side + (y + r) as usize] = c as i32;
                    n_particles += (2 * c + 1) as u64;
                }
            }
        }
        Ok(FermiBall { radius_sq, r, half_heights, n_particles })
    }

    pub fn radius_sq(&self) -> i64 {
        self.radius_sq
    }

    pub fn k_fermi(&self) -> f64 {
        (self.radius_sq as f64).sqrt()
    }

    pub fn n_particles(&self) -> u64 {
        self.n_particles
    }

    /// `⌊√R²⌋`, the largest coordinate of any point.
    pub fn max_coordinate(&self) -> i64 {
        self.r
    }

    pub fn contains(&self, p: Momentum) -> bool {
        p.norm_sq() <= self.radius_sq
    }

    /// Half-height of the z-column over `(x, y)`, if the column is non-empty.
    pub fn column(&self, x: i64, y: i64) -> Option<i64> {
        if x.abs() > self.r || y.abs() > self.r {
            return None;
        }
        let side = (2 * self.r + 1) as usize;
        let c = self.half_heights[(x + self.r) as usize * side + (y + self.r) as usize];
        (c >= 0).then_some(c as i64)
    }

    /// Non-empty columns `(x, y, c)` in lexicographic order of `(x, y)`.
    pub fn columns(&self) -> impl Iterator<Item = (i64, i64, i64)> + '_ {
        let r = self.r;
        (-r..=r).flat_map(move |x| (-r..=r).filter_map(move |y| self.column(x, y).map(|c| (x, y, c))))
    }

    /// Points in lexicographic order.
    pub fn points(&self) -> impl Iterator<Item = Momentum> + '_ {
        self.columns().flat_map(|(x, y, c)| (-c..=c).map(move |z| Momentum::new(x, y, z)))
    }

    /// `Σ_{p∈B_F} |p|²`, exact.
    pub fn kinetic_sum(&self) -> i128 {
        self.columns()
            .map(|(x, y, c)| {
                let c = c as i128;
                ((x * x + y * y) as i128) * (2 * c + 1) + c * (c + 1) * (2 * c + 1) / 3
            })
            .sum()
    }

    /// `|B_F ∩ (B_F + k)|`.
    pub fn overlap(&self, k: Momentum) -> u64 {
        let mut count = 0u64;
        for (x, y, c) in self.columns() {
            if let Some(cs) = self.column(x - k.x, y - k.y) {
                let lo = (-c).max(k.z - cs);
                let hi = c.min(k.z + cs);
                if hi >= lo {
                    count += (hi - lo + 1) as u64;
                }
            }
        }
        count
    }

    /// `|L_k| = N − |B_F ∩ (B_F + k)|`.
    pub fn lune_size(&self, k: Momentum) -> u64 {
        self.n_particles - self.overlap(k)
    }
}

/// Lune `L_k` compressed to distinct `2λ` levels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LuneHistogram {
    pub k: Momentum,
    /// `(2λ, multiplicity)`, strictly increasing in `2λ`.
    pub levels: Vec<(i64, u64)>,
    pub size: u64,
}

impl LuneHistogram {
    /// Assembles a histogram from arbitrary `(2λ, multiplicity)` pairs.
    pub fn from_levels(k: Momentum, levels: impl IntoIterator<Item = (i64, u64)>) -> Result<Self> {
        if k.is_zero() {
            return Err(Error::InvalidInput("k must be non-zero".into()));
        }
        let mut merged: BTreeMap<i64, u64> = BTreeMap::new();
        for (t, m) in levels {
            if t < 1 {
                return Err(Error::InvalidInput(format!("2λ must be ≥ 1, got {t}")));
            }
            if m > 0 {
                *merged.entry(t).or_default() += m;
            }
        }
        let levels: Vec<(i64, u64)> = merged.into_iter().collect();
        let size = levels.iter().map(|&(_, m)| m).sum();
        Ok(LuneHistogram { k, levels, size })
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn two_lambda_max(&self) -> Option<i64> {
        self.levels.last().map(|&(t, _)| t)
    }
}

// Permutes coordinates so that the smallest |component| ends up in z; the ball is
// invariant under the permutation, so the histogram is unchanged.
fn column_frame(k: Momentum) -> Momentum {
    let c = [k.x, k.y, k.z];
    let zi = (0..3).min_by_key(|&i| c[i].abs()).unwrap();
    let rest: Vec<i64> = (0..3).filter(|&i| i != zi).map(|i| c[i]).collect();
    Momentum::new(rest[0], rest[1], c[zi])
}

/// Histogram of `L_k = (B_F + k) \ B_F`.
///
/// Walks the z-columns of `B_F + k` and removes the part inside `B_F`; each column
/// contributes at most two intervals. Work is `O(R²)` when some component of `k`
/// vanishes and `O(R² + |L_k|)` otherwise.
pub fn build_lune(ball: &FermiBall, k: Momentum) -> Result<LuneHistogram> {
    if k.is_zero() {
        return Err(Error::InvalidInput("k must be non-zero".into()));
    }
    let kf = column_frame(k);
    let k2 = kf.norm_sq();
    let top = lambda_max(ball, k)?;
    let mut counts = vec![0u64; top as usize + 1];
    let r = ball.max_coordinate();
    for x in (kf.x - r)..=(kf.x + r) {
        for y in (kf.y - r)..=(kf.y + r) {
            let Some(cs) = ball.column(x - kf.x, y - kf.y) else { continue };
            let (a, b) = (kf.z - cs, kf.z + cs);
            let base = 2 * (kf.x * x + kf.y * y) - k2;
            let mut add = |lo: i64, hi: i64| {
                if hi < lo {
                    return;
                }
                if kf.z == 0 {
                    counts[base as usize] += (hi - lo + 1) as u64;
                } else {
                    for z in lo..=hi {
                        counts[(base + 2 * kf.z * z) as usize] += 1;
                    }
                }
            };
            match ball.column(x, y) {
                None => add(a, b),
                Some(c) => {
                    add(a, b.min(-c - 1));
                    add(a.max(c + 1), b);
                }
            }
        }
    }
    assert_eq!(counts[0], 0, "lune contains a pair with 2λ ≤ 0");
    let levels: Vec<(i64, u64)> =
        counts.iter().enumerate().filter(|(_, &m)| m > 0).map(|(t, &m)| (t as i64, m)).collect();
    let size = levels.iter().map(|&(_, m)| m).sum();
    Ok(LuneHistogram { k, levels, size })
}

/// `2λ_{k,max} = max_{p∈B_F} (2k·p + |k|²)`.
pub fn lambda_max(ball: &FermiBall, k: Momentum) -> Result<i64> {
    if k.is_zero() {
        return Err(Error::InvalidInput("k must be non-zero".into()));
    }
    let k2 = k.norm_sq();
    let best = ball
        .columns()
        .map(|(x, y, c)| 2 * (k.x * x + k.y * y) + 2 * k.z.abs() * c + k2)
        .max()
        .expect("a Fermi ball always contains the origin");
    Ok(best)
}

/// Fourier coefficients `V̂_k` of the pair interaction.
#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    /// `V̂_k = g|k|⁻²`.
    Coulomb { g: f64 },
    /// Finite support; absent momenta have `V̂ = 0`.
    Table(BTreeMap<Momentum, f64>),
}

impl Potential {
    pub fn coulomb(g: f64) -> Result<Self> {
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::InvalidInput(format!("coupling must be finite and non-negative, got {g}")));
        }
        Ok(Potential::Coulomb { g })
    }

    pub fn table(entries: BTreeMap<Momentum, f64>) -> Result<Self> {
        for (&k, &v) in &entries {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!("V̂ at {k} must be finite and non-negative, got {v}")));
            }
            if entries.get(&-k).copied().unwrap_or(0.0) != v {
                return Err(Error::InvalidInput(format!("table is not symmetric under k ↦ −k at {k}")));
            }
        }
        Ok(Potential::Table(entries.into_iter().filter(|(k, v)| !k.is_zero() && *v > 0.0).collect()))
    }

    pub fn zero() -> Self {
        Potential::Table(BTreeMap::new())
    }

    pub fn vhat(&self, k: Momentum) -> f64 {
        if k.is_zero() {
            return 0.0;
        }
        match self {
            Potential::Coulomb { g } => g / k.norm_sq() as f64,
            Potential::Table(t) => t.get(&k).copied().unwrap_or(0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::Coulomb { g } => *g == 0.0,
            Potential::Table(t) => t.is_empty(),
        }
    }
}

/// `(2π)³`, the torus volume.
pub(crate) const TORUS_VOLUME: f64 = 248.050_213_442_398_56;

/// `E_FS = Σ_{p∈B_F}|p|² + (2(2π)³)⁻¹ Σ_k V̂_k (|L_k| − N)`.
///
/// `|L_k| − N = −|B_F ∩ (B_F + k)|` vanishes once `|k| > 2k_F`, so the Coulomb sum
/// runs over `0 < |k|² ≤ 4R²`, one representative per cubic orbit.
pub fn fermi_state_energy(ball: &FermiBall, potential: &Potential) -> f64 {
    let kinetic = ball.kinetic_sum() as f64;
    let mut shift = 0.0;
    match potential {
        Potential::Coulomb { g } if *g != 0.0 => {
            let kmax_sq = 4 * ball.radius_sq();
            let beyond = Momentum::axis(isqrt(kmax_sq) + 1);
            assert_eq!(ball.overlap(beyond), 0, "overlap must vanish beyond |k| = 2k_F");
            let m = isqrt(kmax_sq);
            for x in 0..=m {
                for y in 0..=x {
                    for z in 0..=y {
                        let k = Momentum::new(x, y, z);
                        let n2 = k.norm_sq();
                        if n2 == 0 || n2 > kmax_sq {
                            continue;
                        }
                        let weight = k.orbit_size() as f64;
                        shift -= weight * potential.vhat(k) * ball.overlap(k) as f64;
                    }
                }
            }
        }
        Potential::Coulomb { .. } => {}
        Potential::Table(t) => {
            for (&k, &v) in t {
                shift -= v * ball.overlap(k) as f64;
            }
        }
    }
    kinetic + shift / (2.0 * TORUS_VOLUME)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_volume_constant() {
        let v = (2.0 * std::f64::consts::PI).powi(3);
        assert!((TORUS_VOLUME - v).abs() < 1e-12);
    }

    #[test]
    fn orbit_sizes_cover_cube() {
        let m = 3;
        let mut total = 0;
        for x in 0..=m {
            for y in 0..=x {
                for z in 0..=y {
                    total += Momentum::new(x, y, z).orbit_size();
                }
            }
        }
        assert_eq!(total, 7 * 7 * 7);
    }

    #[test]
    fn column_frame_keeps_norm() {
        let k = Momentum::new(3, 0, -2);
        let f = column_frame(k);
        assert_eq!(f.z, 0);
        assert_eq!(f.norm_sq(), k.norm_sq());
    }
}
