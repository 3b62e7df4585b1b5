use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt::{Debug, Display};

use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed};
use serde::Serialize;

/// Scalar field for Fock amplitudes: `f64` or exact `BigRational`.
pub trait Amplitude: Signed + FromPrimitive + Clone + Debug + Display + PartialOrd + Send + Sync {
    fn int(v: i64) -> Self {
        <Self as FromPrimitive>::from_i64(v).expect("integers embed exactly")
    }
    fn to_f64_lossy(&self) -> f64;
}

impl Amplitude for f64 {
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Amplitude for BigRational {
    fn to_f64_lossy(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Slater determinant as an occupation bitmask; bit `i` is mode `i` of the mode set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockState(pub u128);

impl FockState {
    pub fn occupied(self, mode: usize) -> bool {
        self.0 >> mode & 1 == 1
    }

    /// `(−1)^{#occupied modes below `mode`}` is negative.
    fn sign_below(self, mode: usize) -> bool {
        let below = if mode == 0 { 0 } else { self.0 & ((1u128 << mode) - 1) };
        below.count_ones() % 2 == 1
    }

    /// `c_mode`; the flag is true for a minus sign.
    pub fn annihilate(self, mode: usize) -> Option<(bool, FockState)> {
        self.occupied(mode).then(|| (self.sign_below(mode), FockState(self.0 & !(1u128 << mode))))
    }

    /// `c*_mode`; the flag is true for a minus sign.
    pub fn create(self, mode: usize) -> Option<(bool, FockState)> {
        (!self.occupied(mode)).then(|| (self.sign_below(mode), FockState(self.0 | 1u128 << mode)))
    }

    /// `c*_a c_b`.
    pub fn hop(self, a: usize, b: usize) -> Option<(bool, FockState)> {
        let (s1, t) = self.annihilate(b)?;
        let (s2, u) = t.create(a)?;
        Some((s1 ^ s2, u))
    }

    pub fn hex(self) -> String {
        format!("{:#x}", self.0)
    }
}

/// Finite linear combination of Slater determinants.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector<S: Amplitude> {
    terms: BTreeMap<FockState, S>,
}

impl<S: Amplitude> Default for FockVector<S> {
    fn default() -> Self {
        FockVector { terms: BTreeMap::new() }
    }
}

impl<S: Amplitude> FockVector<S> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(state: FockState) -> Self {
        let mut v = Self::zero();
        v.add_term(state, S::one());
        v
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (FockState, S)>) -> Self {
        let mut v = Self::zero();
        for (s, a) in terms {
            v.add_term(s, a);
        }
        v
    }

    /// Adds `amp·|state⟩`; entries that cancel exactly are dropped.
    pub fn add_term(&mut self, state: FockState, amp: S) {
        if amp.is_zero() {
            return;
        }
        match self.terms.entry(state) {
            Entry::Vacant(e) => {
                e.insert(amp);
            }
            Entry::Occupied(mut e) => {
                let v = e.get().clone() + amp;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub fn add_signed(&mut self, state: FockState, negative: bool, amp: S) {
        self.add_term(state, if negative { -amp } else { amp });
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FockState, &S)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, state: FockState) -> S {
        self.terms.get(&state).cloned().unwrap_or_else(S::zero)
    }

    pub fn scaled(&self, c: &S) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        FockVector { terms: self.terms.iter().map(|(s, a)| (*s, a.clone() * c.clone())).collect() }
    }

    pub fn axpy(&mut self, c: &S, other: &Self) {
        for (s, a) in &other.terms {
            self.add_term(*s, a.clone() * c.clone());
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut v = self.clone();
        v.axpy(&S::one(), other);
        v
    }

    pub fn minus(&self, other: &Self) -> Self {
        let mut v = self.clone();
        v.axpy(&-S::one(), other);
        v
    }

    pub fn dot(&self, other: &Self) -> S {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        let mut acc = S::zero();
        for (s, a) in &small.terms {
            if let Some(b) = large.terms.get(s) {
                acc = acc + a.clone() * b.clone();
            }
        }
        acc
    }

    pub fn norm_sq(&self) -> S {
        self.terms.values().fold(S::zero(), |acc, a| acc + a.clone() * a.clone())
    }

    pub fn norm_f64(&self) -> f64 {
        self.norm_sq().to_f64_lossy().sqrt()
    }

    /// Linear map applied state by state.
    pub fn map_states<F>(&self, mut f: F) -> Self
    where
        F: FnMut(FockState, &S, &mut FockVector<S>),
    {
        let mut out = Self::zero();
        for (s, a) in &self.terms {
            f(*s, a, &mut out);
        }
        out
    }

    /// Serializable snapshot: bitmasks in hex, amplitudes as decimal strings.
    pub fn artifact(&self) -> Vec<StateAmplitude> {
        self.terms.iter().map(|(s, a)| StateAmplitude { state: s.hex(), amplitude: a.to_string() }).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateAmplitude {
    pub state: String,
    pub amplitude: String,
}
