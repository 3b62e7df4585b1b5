//! Second-quantized operators as sums of coefficient-weighted ladder words.

use super::modes::TruncatedLune;
use super::state::{Amplitude, FockState, FockVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

/// `Σ coef · (word)`, each word written left to right and applied right to left.
#[derive(Clone, Debug)]
pub struct Operator<S: Amplitude> {
    terms: Vec<(S, Vec<Ladder>)>,
}

impl<S: Amplitude> Default for Operator<S> {
    fn default() -> Self {
        Operator { terms: Vec::new() }
    }
}

fn apply_word(state: FockState, word: &[Ladder]) -> Option<(bool, FockState)> {
    let mut neg = false;
    let mut s = state;
    for op in word.iter().rev() {
        let (n, t) = match *op {
            Ladder::Create(m) => s.create(m)?,
            Ladder::Annihilate(m) => s.annihilate(m)?,
        };
        neg ^= n;
        s = t;
    }
    Some((neg, s))
}

impl<S: Amplitude> Operator<S> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Operator { terms: vec![(S::one(), Vec::new())] }
    }

    pub fn monomial(coef: S, word: Vec<Ladder>) -> Self {
        let mut o = Self::zero();
        o.push(coef, word);
        o
    }

    pub fn push(&mut self, coef: S, word: Vec<Ladder>) {
        if !coef.is_zero() {
            self.terms.push((coef, word));
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn apply(&self, v: &FockVector<S>) -> FockVector<S> {
        v.map_states(|s, a, out| {
            for (c, word) in &self.terms {
                if let Some((neg, t)) = apply_word(s, word) {
                    out.add_signed(t, neg, c.clone() * a.clone());
                }
            }
        })
    }

    /// `self ∘ rhs`.
    pub fn compose(&self, rhs: &Self) -> Self {
        let mut o = Self::zero();
        for (a, wa) in &self.terms {
            for (b, wb) in &rhs.terms {
                let mut w = wa.clone();
                w.extend_from_slice(wb);
                o.push(a.clone() * b.clone(), w);
            }
        }
        o
    }

    pub fn plus(&self, rhs: &Self) -> Self {
        let mut o = self.clone();
        o.terms.extend(rhs.terms.iter().cloned());
        o
    }

    pub fn scaled(&self, c: &S) -> Self {
        let mut o = Self::zero();
        for (a, w) in &self.terms {
            o.push(a.clone() * c.clone(), w.clone());
        }
        o
    }

    /// Formal adjoint for real coefficients: reverse each word and swap `c ↔ c*`.
    pub fn adjoint(&self) -> Self {
        let mut o = Self::zero();
        for (a, w) in &self.terms {
            let word = w
                .iter()
                .rev()
                .map(|op| match *op {
                    Ladder::Create(m) => Ladder::Annihilate(m),
                    Ladder::Annihilate(m) => Ladder::Create(m),
                })
                .collect();
            o.push(a.clone(), word);
        }
        o
    }
}

/// `[A, B]v = A(Bv) − B(Av)`.
pub fn commutator_apply<S: Amplitude>(a: &Operator<S>, b: &Operator<S>, v: &FockVector<S>) -> FockVector<S> {
    a.apply(&b.apply(v)).minus(&b.apply(&a.apply(v)))
}

/// `{A, B}v = A(Bv) + B(Av)`.
pub fn anticommutator_apply<S: Amplitude>(a: &Operator<S>, b: &Operator<S>, v: &FockVector<S>) -> FockVector<S> {
    a.apply(&b.apply(v)).plus(&b.apply(&a.apply(v)))
}

pub fn c<S: Amplitude>(mode: usize) -> Operator<S> {
    Operator::monomial(S::one(), vec![Ladder::Annihilate(mode)])
}

pub fn c_dag<S: Amplitude>(mode: usize) -> Operator<S> {
    Operator::monomial(S::one(), vec![Ladder::Create(mode)])
}

/// `b*_{k,p} = c*_p c_{p−k}` for the lune entry at `pos`.
pub fn b_dag_single<S: Amplitude>(lune: &TruncatedLune, pos: usize) -> Operator<S> {
    Operator::monomial(S::one(), vec![Ladder::Create(lune.particles[pos]), Ladder::Annihilate(lune.holes[pos])])
}

/// `b_{k,p} = c*_{p−k} c_p`.
pub fn b_single<S: Amplitude>(lune: &TruncatedLune, pos: usize) -> Operator<S> {
    Operator::monomial(S::one(), vec![Ladder::Create(lune.holes[pos]), Ladder::Annihilate(lune.particles[pos])])
}

/// `b*_k(φ) = Σ_p φ_p b*_{k,p}`; `phi` is indexed by lune position.
pub fn b_dag<S: Amplitude>(lune: &TruncatedLune, phi: &[S]) -> Operator<S> {
    assert_eq!(phi.len(), lune.len(), "profile must live on the lune");
    let mut o = Operator::zero();
    for (i, f) in phi.iter().enumerate() {
        o.push(f.clone(), vec![Ladder::Create(lune.particles[i]), Ladder::Annihilate(lune.holes[i])]);
    }
    o
}

/// `b_k(φ) = Σ_p φ_p b_{k,p}` (real profiles).
pub fn b<S: Amplitude>(lune: &TruncatedLune, phi: &[S]) -> Operator<S> {
    assert_eq!(phi.len(), lune.len(), "profile must live on the lune");
    let mut o = Operator::zero();
    for (i, f) in phi.iter().enumerate() {
        o.push(f.clone(), vec![Ladder::Create(lune.holes[i]), Ladder::Annihilate(lune.particles[i])]);
    }
    o
}

/// Exchange correction `ε_{k,l}(φ;ψ) = −Σ_{p∈L_k, q∈L_l} φ_p ψ_q (δ_{p,q} c_{q−l} c*_{p−k} + δ_{p−k,q−l} c*_q c_p)`.
pub fn exchange_correction<S: Amplitude>(
    lune_k: &TruncatedLune,
    lune_l: &TruncatedLune,
    phi: &[S],
    psi: &[S],
) -> Operator<S> {
    let mut o = Operator::zero();
    for (i, f) in phi.iter().enumerate() {
        let p = lune_k.particles[i];
        let pk = lune_k.holes[i];
        if let Some(j) = lune_l.position_of_particle(p) {
            let coef = -(f.clone() * psi[j].clone());
            o.push(coef, vec![Ladder::Annihilate(lune_l.holes[j]), Ladder::Create(pk)]);
        }
        if let Some(j) = lune_l.position_of_hole(pk) {
            let coef = -(f.clone() * psi[j].clone());
            o.push(coef, vec![Ladder::Create(lune_l.particles[j]), Ladder::Annihilate(p)]);
        }
    }
    o
}

/// Closed form of `[ε_{l,k}(ϕ;φ), b*_k(ψ)]`:
/// `−Σ_{p∈L_k∩L_l} Σ_{q∈L_k, q−k=p−l} ϕ_p (φ_p ψ_q + φ_q ψ_p) c*_q c_{p−k}`.
pub fn exchange_commutator_formula<S: Amplitude>(
    lune_k: &TruncatedLune,
    lune_l: &TruncatedLune,
    phi_l: &[S],
    varphi_k: &[S],
    psi_k: &[S],
) -> Operator<S> {
    let mut o = Operator::zero();
    for (jl, f) in phi_l.iter().enumerate() {
        let p = lune_l.particles[jl];
        let Some(ip) = lune_k.position_of_particle(p) else { continue };
        // q − k = p − l is the hole of p in L_l
        let Some(iq) = lune_k.position_of_hole(lune_l.holes[jl]) else { continue };
        let coef = -(f.clone()
            * (varphi_k[ip].clone() * psi_k[iq].clone() + varphi_k[iq].clone() * psi_k[ip].clone()));
        o.push(coef, vec![Ladder::Create(lune_k.particles[iq]), Ladder::Annihilate(lune_k.holes[ip])]);
    }
    o
}

/// The `k = l` closed form `−2 Σ_p ϕ_p φ_p ψ_p b*_{k,p}`.
pub fn exchange_commutator_diagonal<S: Amplitude>(
    lune: &TruncatedLune,
    phi: &[S],
    varphi: &[S],
    psi: &[S],
) -> Operator<S> {
    let two = S::int(2);
    let mut o = Operator::zero();
    for i in 0..lune.len() {
        let coef = -(two.clone() * phi[i].clone() * varphi[i].clone() * psi[i].clone());
        o.push(coef, vec![Ladder::Create(lune.particles[i]), Ladder::Annihilate(lune.holes[i])]);
    }
    o
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_matches_sequential_application() {
        let a: Operator<f64> = c_dag(2);
        let b: Operator<f64> = c(0);
        let v = FockVector::basis(FockState(0b011));
        assert_eq!(a.compose(&b).apply(&v), a.apply(&b.apply(&v)));
    }

    #[test]
    fn number_operator_is_self_adjoint() {
        let n: Operator<f64> = c_dag::<f64>(1).compose(&c(1));
        let adj = n.adjoint();
        let v = FockVector::from_terms([(FockState(0b10), 2.0), (FockState(0b01), 3.0)]);
        assert_eq!(n.apply(&v), adj.apply(&v));
    }
}
