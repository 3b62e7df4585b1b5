//! Finite momentum truncation: the Fermi ball plus every exterior mode up to a shell cap.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lattice::{isqrt, Momentum};

use super::state::FockState;

/// Occupations are stored in a `u128`.
pub const MAX_MODES: usize = 128;

/// `L_k ∩ modes`, ordered by particle mode index.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedLune {
    pub k: Momentum,
    /// Mode index of `p`.
    pub particles: Vec<usize>,
    /// Mode index of `p − k`, aligned with `particles`.
    pub holes: Vec<usize>,
    /// `2λ_{k,p} = |p|² − |p−k|²`.
    pub two_lambda: Vec<i64>,
    by_particle: Vec<Option<u32>>,
    by_hole: Vec<Option<u32>>,
}

impl TruncatedLune {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn position_of_particle(&self, mode: usize) -> Option<usize> {
        self.by_particle[mode].map(|i| i as usize)
    }

    pub fn position_of_hole(&self, mode: usize) -> Option<usize> {
        self.by_hole[mode].map(|i| i as usize)
    }
}

#[derive(Clone, Debug)]
pub struct ModeSet {
    radius_sq: i64,
    shell_cap: i64,
    modes: Vec<Momentum>,
    interior: Vec<usize>,
    exterior: Vec<usize>,
    interior_mask: u128,
    lunes: Vec<TruncatedLune>,
    lune_index: BTreeMap<Momentum, usize>,
    /// `pair[particle·n + hole]` = (lune, position).
    pair: Vec<Option<(u32, u32)>>,
}

impl ModeSet {
    /// Modes `|p|² ≤ shell_cap` in lexicographic `(x, y, z)` order, which fixes the
    /// Jordan–Wigner signs; the interior is `|p|² ≤ radius_sq`.
    pub fn new(radius_sq: i64, shell_cap: i64) -> Result<Self> {
        if radius_sq < 0 {
            return Err(Error::InvalidInput(format!("radius_sq must be non-negative, got {radius_sq}")));
        }
        if shell_cap < radius_sq {
            return Err(Error::InvalidInput(format!("shell cap {shell_cap} is below radius_sq {radius_sq}")));
        }
        let r = isqrt(shell_cap);
        let mut modes = Vec::new();
        for x in -r..=r {
            for y in -r..=r {
                for z in -r..=r {
                    let p = Momentum::new(x, y, z);
                    if p.norm_sq() <= shell_cap {
                        modes.push(p);
                    }
                }
            }
        }
        if modes.len() > MAX_MODES {
            return Err(Error::DimensionCap { dim: modes.len(), cap: MAX_MODES });
        }
        let n = modes.len();
        let (interior, exterior): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| modes[i].norm_sq() <= radius_sq);
        let interior_mask = interior.iter().fold(0u128, |m, &i| m | 1u128 << i);

        let mut groups: BTreeMap<Momentum, Vec<(usize, usize)>> = BTreeMap::new();
        for &p in &exterior {
            for &h in &interior {
                groups.entry(modes[p] - modes[h]).or_default().push((p, h));
            }
        }
        let mut lunes = Vec::with_capacity(groups.len());
        let mut lune_index = BTreeMap::new();
        let mut pair = vec![None; n * n];
        for (li, (k, mut entries)) in groups.into_iter().enumerate() {
            entries.sort_unstable();
            let mut by_particle = vec![None; n];
            let mut by_hole = vec![None; n];
            for (pos, &(p, h)) in entries.iter().enumerate() {
                by_particle[p] = Some(pos as u32);
                by_hole[h] = Some(pos as u32);
                pair[p * n + h] = Some((li as u32, pos as u32));
            }
            lunes.push(TruncatedLune {
                k,
                particles: entries.iter().map(|e| e.0).collect(),
                holes: entries.iter().map(|e| e.1).collect(),
                two_lambda: entries.iter().map(|&(p, h)| modes[p].norm_sq() - modes[h].norm_sq()).collect(),
                by_particle,
                by_hole,
            });
            lune_index.insert(k, li);
        }
        Ok(ModeSet { radius_sq, shell_cap, modes, interior, exterior, interior_mask, lunes, lune_index, pair })
    }

    pub fn radius_sq(&self) -> i64 {
        self.radius_sq
    }

    pub fn shell_cap(&self) -> i64 {
        self.shell_cap
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Momentum] {
        &self.modes
    }

    pub fn index_of(&self, p: Momentum) -> Option<usize> {
        self.modes.binary_search(&p).ok()
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn exterior(&self) -> &[usize] {
        &self.exterior
    }

    pub fn is_interior(&self, mode: usize) -> bool {
        self.interior_mask >> mode & 1 == 1
    }

    /// Every realizable particle−hole difference, sorted.
    pub fn lunes(&self) -> &[TruncatedLune] {
        &self.lunes
    }

    pub fn lune_index(&self, k: Momentum) -> Option<usize> {
        self.lune_index.get(&k).copied()
    }

    pub fn lune(&self, k: Momentum) -> Option<&TruncatedLune> {
        self.lune_index(k).map(|i| &self.lunes[i])
    }

    /// Lune and position of the pair `(p, h)`, i.e. `k = p − h`.
    pub fn pair_lookup(&self, particle: usize, hole: usize) -> Option<(usize, usize)> {
        self.pair[particle * self.modes.len() + hole].map(|(l, p)| (l as usize, p as usize))
    }

    pub fn fermi_state(&self) -> FockState {
        FockState(self.interior_mask)
    }

    /// Occupied exterior modes.
    pub fn excitation_number(&self, s: FockState) -> u32 {
        (s.0 & !self.interior_mask).count_ones()
    }

    /// Empty interior modes.
    pub fn hole_number(&self, s: FockState) -> u32 {
        (!s.0 & self.interior_mask).count_ones()
    }

    /// `H'_kin`: `Σ_{occupied exterior} |p|² − Σ_{empty interior} |h|²`.
    pub fn kinetic_offset(&self, s: FockState) -> i64 {
        let mut e = 0;
        for &p in &self.exterior {
            if s.occupied(p) {
                e += self.modes[p].norm_sq();
            }
        }
        for &h in &self.interior {
            if !s.occupied(h) {
                e -= self.modes[h].norm_sq();
            }
        }
        e
    }

    /// `C(#interior, m)·C(#exterior, m)`.
    pub fn sector_size(&self, m: u32) -> u128 {
        binomial(self.interior.len() as u128, m as u128) * binomial(self.exterior.len() as u128, m as u128)
    }

    /// All states with `m` holes and `m` particles, in increasing bitmask order.
    pub fn sector_states(&self, m: u32, cap: u128) -> Result<Vec<FockState>> {
        let size = self.sector_size(m);
        if size > cap {
            return Err(Error::SectorOverflow { sector: m, size, cap });
        }
        let holes = combinations(&self.interior, m as usize);
        let parts = combinations(&self.exterior, m as usize);
        let mut out = Vec::with_capacity(size as usize);
        for h in &holes {
            for p in &parts {
                out.push(FockState((self.interior_mask & !h) | p));
            }
        }
        out.sort_unstable();
        Ok(out)
    }
}

pub(crate) fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r = 1u128;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

fn combinations(items: &[usize], m: usize) -> Vec<u128> {
    fn rec(items: &[usize], m: usize, start: usize, acc: u128, out: &mut Vec<u128>) {
        if m == 0 {
            out.push(acc);
            return;
        }
        for i in start..=items.len() - m {
            rec(items, m - 1, i + 1, acc | 1u128 << items[i], out);
        }
    }
    let mut out = Vec::new();
    if m <= items.len() {
        rec(items, m, 0, 0, &mut out);
    }
    out
}
