//! Aggregated exact-identity and inequality checks on one truncation.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Momentum, Potential};

use super::heff::{
    apply_error_operator, apply_heff, build_psi_sequence, dense_coefficients, error_operator, random_coefficients,
    random_profile, random_ratio, truncated_plasmon, LuneMatrices, TruncatedPlasmon, TruncatedSpectra,
};
use super::modes::ModeSet;
use super::ops::{
    anticommutator_apply, b, b_dag, b_dag_single, b_single, c, c_dag, commutator_apply, exchange_commutator_diagonal,
    exchange_commutator_formula, exchange_correction, Ladder, Operator,
};
use super::state::{Amplitude, FockState, FockVector, StateAmplitude};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    /// Interior is `|p|² ≤ radius_sq`.
    pub radius_sq: i64,
    /// Exterior modes are `radius_sq < |p|² ≤ shell_cap`.
    pub shell_cap: i64,
    /// Relative momentum of the trial state `Ψ_M`.
    pub k: Momentum,
    pub max_m: u32,
    /// Coulomb coupling `g` in `V̂_k = g|k|⁻²`.
    pub coupling: f64,
    /// Random states per sector for the inequality checks.
    pub random_states: usize,
    /// Terms per random state.
    pub random_terms: usize,
    pub seed: u64,
    pub tol: f64,
    /// Largest sector enumerated for the Hermiticity check.
    pub sector_cap: u64,
    /// Upper limit on `(k, l)` pairs in the two-lune checks; all pairs are used below it.
    pub max_pairs: usize,
    /// Repeat the identities with random rational `φ` and `A_l` in exact arithmetic.
    pub rational: bool,
    /// Pair limit for the exact-arithmetic pass.
    pub rational_max_pairs: usize,
    /// Largest sector used for Hermiticity in exact arithmetic.
    pub rational_hermiticity_max_m: u32,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            radius_sq: 1,
            shell_cap: 2,
            k: Momentum::new(1, 0, 0),
            max_m: 3,
            coupling: 4.0 * PI,
            random_states: 50,
            random_terms: 24,
            seed: 0x5eed_f0c4,
            tol: 1e-12,
            sector_cap: 1_000_000,
            max_pairs: 10_000,
            rational: true,
            rational_max_pairs: 400,
            rational_hermiticity_max_m: 2,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radius_sq < 0 {
            return Err(Error::InvalidInput(format!("radius_sq must be non-negative, got {}", self.radius_sq)));
        }
        if self.shell_cap < self.radius_sq {
            return Err(Error::InvalidInput(format!("shell_cap {} is below radius_sq {}", self.shell_cap, self.radius_sq)));
        }
        if !(self.coupling.is_finite() && self.coupling > 0.0) {
            return Err(Error::InvalidInput(format!("coupling must be positive, got {}", self.coupling)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("tol must be positive, got {}", self.tol)));
        }
        if self.k.is_zero() {
            return Err(Error::InvalidInput("k must be non-zero".into()));
        }
        if self.random_terms == 0 {
            return Err(Error::InvalidInput("random_terms must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Identity,
    Inequality,
}

/// State that violated a check; bitmasks in hex, amplitudes as decimal strings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FailureArtifact {
    pub case: String,
    pub input: Vec<StateAmplitude>,
    pub residual: Vec<StateAmplitude>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub kind: CheckKind,
    /// Exact rational arithmetic; identities must then hold with zero residual.
    pub exact: bool,
    pub cases: usize,
    /// Identities: largest relative residual. Inequalities: smallest relative margin,
    /// `None` when every case was vacuous.
    pub worst: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    pub note: Option<String>,
    pub failure: Option<FailureArtifact>,
}

struct Tally {
    out: CheckOutcome,
}

impl Tally {
    fn identity(name: &str, exact: bool, tol: f64) -> Self {
        let name = if exact { format!("{name}[exact]") } else { name.to_string() };
        Tally {
            out: CheckOutcome {
                name,
                kind: CheckKind::Identity,
                exact,
                cases: 0,
                worst: Some(0.0),
                tolerance: if exact { 0.0 } else { tol },
                passed: true,
                note: None,
                failure: None,
            },
        }
    }

    fn inequality(name: &str, tol: f64) -> Self {
        Tally {
            out: CheckOutcome {
                name: name.to_string(),
                kind: CheckKind::Inequality,
                exact: false,
                cases: 0,
                worst: None,
                tolerance: tol,
                passed: true,
                note: None,
                failure: None,
            },
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        let s = s.into();
        self.out.note = Some(match self.out.note.take() {
            Some(prev) if !prev.contains(&s) => format!("{prev}; {s}"),
            Some(prev) => prev,
            None => s,
        });
    }

    fn fail<S: Amplitude>(&mut self, case: String, input: &FockVector<S>, residual: &FockVector<S>) {
        self.out.passed = false;
        if self.out.failure.is_none() {
            self.out.failure = Some(FailureArtifact { case, input: input.artifact(), residual: residual.artifact() });
        }
    }

    fn compare<S: Amplitude>(
        &mut self,
        case: impl FnOnce() -> String,
        input: &FockVector<S>,
        lhs: &FockVector<S>,
        rhs: &FockVector<S>,
    ) {
        self.out.cases += 1;
        let diff = lhs.minus(rhs);
        if diff.is_empty() {
            return;
        }
        let scale = 1f64.max(lhs.norm_f64()).max(rhs.norm_f64());
        let dev = diff.norm_f64() / scale;
        let w = self.out.worst.get_or_insert(0.0);
        *w = w.max(dev);
        if self.out.exact || !(dev <= self.out.tolerance) {
            self.fail(case(), input, &diff);
        }
    }

    fn compare_scalar<S: Amplitude>(&mut self, case: impl FnOnce() -> String, lhs: &S, rhs: &S) {
        self.out.cases += 1;
        let diff = lhs.clone() - rhs.clone();
        if diff.is_zero() {
            return;
        }
        let scale = 1f64.max(lhs.to_f64_lossy().abs()).max(rhs.to_f64_lossy().abs());
        let dev = diff.to_f64_lossy().abs() / scale;
        let w = self.out.worst.get_or_insert(0.0);
        *w = w.max(dev);
        if self.out.exact || !(dev <= self.out.tolerance) {
            self.out.passed = false;
            if self.out.failure.is_none() {
                self.out.failure = Some(FailureArtifact {
                    case: format!("{}: lhs = {lhs}, rhs = {rhs}", case()),
                    input: Vec::new(),
                    residual: Vec::new(),
                });
            }
        }
    }

    /// Records `lhs ≤ rhs`; an infinite `rhs` is a vacuous case.
    fn bound(&mut self, case: impl FnOnce() -> String, lhs: f64, rhs: f64, input: Option<&FockVector<f64>>) {
        self.out.cases += 1;
        if rhs == f64::INFINITY {
            self.note("vacuous where the bound's denominator is non-positive");
            return;
        }
        let scale = 1f64.max(lhs.abs()).max(rhs.abs());
        let margin = (rhs - lhs) / scale;
        self.out.worst = Some(self.out.worst.map_or(margin, |w| w.min(margin)));
        if !(margin >= -self.out.tolerance) {
            self.out.passed = false;
            if self.out.failure.is_none() {
                self.out.failure = Some(FailureArtifact {
                    case: format!("{}: lhs = {lhs:e}, rhs = {rhs:e}", case()),
                    input: input.map(|v| v.artifact()).unwrap_or_default(),
                    residual: Vec::new(),
                });
            }
        }
    }

    fn finish(mut self) -> CheckOutcome {
        if self.out.cases == 0 {
            self.note("no applicable cases on this truncation");
        }
        self.out
    }
}

/// Residual of the trial state at one `M`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualPoint {
    pub m: u32,
    pub psi_norm_sq: f64,
    /// `‖(H_eff − Mε)Ψ̂_M‖`.
    pub residual: f64,
    /// `‖ℰΨ_{M−2}‖`.
    pub error_term: f64,
    /// `2M√(M−1)‖φ‖∞²√(Σ_l‖Ẽ_l−h_l‖²_HS)‖Ψ_{M−2}‖`.
    pub exchange_bound: f64,
    /// `2‖φ‖∞²√(Σ_l‖Ẽ_l−h_l‖²_HS) M^{5/2}/√(1 − M²‖φ‖₆³)`; `None` when the denominator is non-positive.
    pub spectral_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualScaling {
    pub radius_sq: i64,
    pub shell_cap: i64,
    pub k: Momentum,
    pub n_modes: usize,
    pub lune_size: usize,
    pub epsilon: f64,
    pub norm_inf: f64,
    pub norm6_cubed: f64,
    pub hs_sum: f64,
    pub points: Vec<ResidualPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub n_modes: usize,
    pub n_interior: usize,
    pub n_exterior: usize,
    pub n_admissible: usize,
    pub plasmon: Option<ResidualScaling>,
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn random_sector_vector<S: Amplitude, R: Rng>(rng: &mut R, modes: &ModeSet, m: u32, terms: usize) -> FockVector<S> {
    let mut v = FockVector::zero();
    for _ in 0..terms {
        let mut bits = modes.fermi_state().0;
        for &h in modes.interior().choose_multiple(rng, m as usize) {
            bits &= !(1u128 << h);
        }
        for &p in modes.exterior().choose_multiple(rng, m as usize) {
            bits |= 1u128 << p;
        }
        v.add_term(FockState(bits), random_ratio(rng));
    }
    v
}

fn max_sector(modes: &ModeSet) -> u32 {
    modes.interior().len().min(modes.exterior().len()) as u32
}

fn factorial(m: u32) -> f64 {
    (1..=m).map(f64::from).product()
}

fn pair_list<R: Rng>(n: usize, max_pairs: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let mut all: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    if all.len() > max_pairs {
        let diag: Vec<(usize, usize)> = (0..n).map(|a| (a, a)).collect();
        all.retain(|&(a, b)| a != b);
        all.shuffle(rng);
        all.truncate(max_pairs.saturating_sub(diag.len()));
        all.extend(diag);
        all.sort_unstable();
    }
    all
}

/// Data shared by the identity checks, generic over the scalar field.
struct Setting<'a, S: Amplitude> {
    modes: &'a ModeSet,
    a: &'a LuneMatrices<S>,
    /// Trial-state lune and profile, absent when the exterior is empty.
    trial: Option<(usize, Vec<S>)>,
    psi: Vec<FockVector<S>>,
    /// One random vector per sector `0..=max`.
    pool: Vec<FockVector<S>>,
    max_m: u32,
    exact: bool,
    tol: f64,
}

fn check_car<S: Amplitude>(st: &Setting<S>) -> CheckOutcome {
    let mut t = Tally::identity("car", st.exact, st.tol);
    let n = st.modes.len();
    let zero = FockVector::zero();
    let fs = FockVector::<S>::basis(st.modes.fermi_state());
    for v in st.pool.iter().chain(std::iter::once(&fs)) {
        for x in 0..n {
            for y in 0..n {
                let (cx, cy, dx, dy) = (c::<S>(x), c::<S>(y), c_dag::<S>(x), c_dag::<S>(y));
                let expect = if x == y { v.clone() } else { FockVector::zero() };
                t.compare(|| format!("{{c_{x}, c*_{y}}}"), v, &anticommutator_apply(&cx, &dy, v), &expect);
                t.compare(|| format!("{{c_{x}, c_{y}}}"), v, &anticommutator_apply(&cx, &cy, v), &zero);
                t.compare(|| format!("{{c*_{x}, c*_{y}}}"), v, &anticommutator_apply(&dx, &dy, v), &zero);
            }
        }
    }
    for &p in st.modes.exterior() {
        t.compare(|| format!("c_{p} ψ_FS"), &fs, &c::<S>(p).apply(&fs), &zero);
    }
    for &h in st.modes.interior() {
        t.compare(|| format!("c*_{h} ψ_FS"), &fs, &c_dag::<S>(h).apply(&fs), &zero);
    }
    t.finish()
}

fn check_pair_commutators<S: Amplitude>(st: &Setting<S>) -> CheckOutcome {
    let mut t = Tally::identity("pair_commutators_same_k", st.exact, st.tol);
    let zero = FockVector::zero();
    for lune in st.modes.lunes() {
        for v in &st.pool {
            for i in 0..lune.len() {
                for j in 0..lune.len() {
                    let (bi, bj, bdi, bdj) =
                        (b_single::<S>(lune, i), b_single::<S>(lune, j), b_dag_single::<S>(lune, i), b_dag_single::<S>(lune, j));
                    let case = || format!("k = {}, p#{i}, q#{j}", lune.k);
                    t.compare(case, v, &commutator_apply(&bi, &bj, v), &zero);
                    t.compare(case, v, &commutator_apply(&bdi, &bdj, v), &zero);
                    // δ_{pq}(1 − c*_p c_p − c_{p−k} c*_{p−k})
                    let mut rhs_op = Operator::zero();
                    if i == j {
                        let (p, h) = (lune.particles[i], lune.holes[i]);
                        rhs_op = Operator::identity();
                        rhs_op.push(-S::one(), vec![Ladder::Create(p), Ladder::Annihilate(p)]);
                        rhs_op.push(-S::one(), vec![Ladder::Annihilate(h), Ladder::Create(h)]);
                    }
                    t.compare(case, v, &commutator_apply(&bi, &bdj, v), &rhs_op.apply(v));
                }
            }
        }
    }
    t.finish()
}

fn check_ccr<S: Amplitude, R: Rng>(st: &Setting<S>, pairs: &[(usize, usize)], rng: &mut R) -> Vec<CheckOutcome> {
    let mut ccr = Tally::identity("quasi_bosonic_ccr", st.exact, st.tol);
    let mut comm = Tally::identity("exchange_commutator", st.exact, st.tol);
    let mut diag = Tally::identity("exchange_commutator_diagonal", st.exact, st.tol);
    let lunes = st.modes.lunes();
    let zero = FockVector::zero();
    for (n, &(ki, li)) in pairs.iter().enumerate() {
        let (lk, ll) = (&lunes[ki], &lunes[li]);
        let v = &st.pool[n % st.pool.len()];
        let phi: Vec<S> = random_profile(rng, lk);
        let psi: Vec<S> = random_profile(rng, ll);
        let case = || format!("k = {}, l = {}", lk.k, ll.k);
        ccr.compare(case, v, &commutator_apply(&b(lk, &phi), &b(ll, &psi), v), &zero);
        ccr.compare(case, v, &commutator_apply(&b_dag(lk, &phi), &b_dag(ll, &psi), v), &zero);
        let mut rhs = exchange_correction(lk, ll, &phi, &psi).apply(v);
        if ki == li {
            let ip = phi.iter().zip(&psi).fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone());
            rhs.axpy(&ip, v);
        }
        ccr.compare(case, v, &commutator_apply(&b(lk, &phi), &b_dag(ll, &psi), v), &rhs);

        // [ε_{l,k}(ϕ;φ), b*_k(ψ)] with ϕ on L_l and φ, ψ on L_k
        let vphi: Vec<S> = random_profile(rng, ll);
        let varphi: Vec<S> = random_profile(rng, lk);
        let psik: Vec<S> = random_profile(rng, lk);
        let eps = exchange_correction(ll, lk, &vphi, &varphi);
        let lhs = commutator_apply(&eps, &b_dag(lk, &psik), v);
        comm.compare(case, v, &lhs, &exchange_commutator_formula(lk, ll, &vphi, &varphi, &psik).apply(v));
        if ki == li {
            diag.compare(case, v, &lhs, &exchange_commutator_diagonal(lk, &vphi, &varphi, &psik).apply(v));
        }
    }
    vec![ccr.finish(), comm.finish(), diag.finish()]
}

fn check_commutation_lemma<S: Amplitude, R: Rng>(st: &Setting<S>, rng: &mut R) -> Vec<CheckOutcome> {
    let mut gen = Tally::identity("commutation_lemma", st.exact, st.tol);
    let mut diag = Tally::identity("commutation_lemma_diagonal", st.exact, st.tol);
    let Some((ki, phi)) = &st.trial else { return vec![gen.finish(), diag.finish()] };
    let lunes = st.modes.lunes();
    let lk = &lunes[*ki];
    let bphi = b_dag(lk, phi);
    for (li, ll) in lunes.iter().enumerate() {
        let vphi: Vec<S> = random_profile(rng, ll);
        let eps = exchange_correction(ll, lk, &vphi, phi);
        for m in 1..=st.max_m {
            let mu = m as usize;
            let mm = S::int(m as i64);
            let lhs = b(ll, &vphi).apply(&st.psi[mu]);
            let mut rhs = FockVector::zero();
            if li == *ki {
                let ip = vphi.iter().zip(phi).fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone());
                rhs.axpy(&(mm.clone() * ip), &st.psi[mu - 1]);
            }
            if m >= 2 {
                let half = S::int((m * (m - 1)) as i64) / S::int(2);
                rhs.axpy(&half, &commutator_apply(&eps, &bphi, &st.psi[mu - 2]));
            }
            gen.compare(|| format!("l = {}, M = {m}", ll.k), &st.psi[mu], &lhs, &rhs);
            if li == *ki {
                let ip = vphi.iter().zip(phi).fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone());
                let mut rhs2 = st.psi[mu - 1].scaled(&(mm.clone() * ip));
                if m >= 2 {
                    let cubic: Vec<S> =
                        vphi.iter().zip(phi).map(|(x, f)| x.clone() * f.clone() * f.clone()).collect();
                    let coef = -S::int((m * (m - 1)) as i64);
                    rhs2.axpy(&coef, &b_dag(lk, &cubic).apply(&st.psi[mu - 2]));
                }
                diag.compare(|| format!("M = {m}"), &st.psi[mu], &lhs, &rhs2);
            }
        }
    }
    vec![gen.finish(), diag.finish()]
}

fn check_norm_recursion<S: Amplitude>(st: &Setting<S>) -> CheckOutcome {
    let mut t = Tally::identity("norm_recursion", st.exact, st.tol);
    let Some((ki, phi)) = &st.trial else { return t.finish() };
    let lk = &st.modes.lunes()[*ki];
    let phi3: Vec<S> = phi.iter().map(|f| f.clone() * f.clone() * f.clone()).collect();
    let b3 = b_dag(lk, &phi3);
    // ⟨φ,φ⟩ is 1 for the physical profile; the random exact-mode profiles are not normalized
    let phi_sq = phi.iter().fold(S::zero(), |acc, f| acc + f.clone() * f.clone());
    for m in 1..=st.max_m {
        let mu = m as usize;
        let lhs = st.psi[mu].norm_sq();
        let mut rhs = S::int(m as i64) * phi_sq.clone() * st.psi[mu - 1].norm_sq();
        if m >= 2 {
            let cross = st.psi[mu - 1].dot(&b3.apply(&st.psi[mu - 2]));
            rhs = rhs - S::int((m * (m - 1)) as i64) * cross;
        }
        t.compare_scalar(|| format!("M = {m}"), &lhs, &rhs);
    }
    t.finish()
}

/// `H_A b*_l(u)ψ_FS = b*_l((2h_l + A_l)u)ψ_FS` on every lune.
fn check_ne1_action<S: Amplitude, R: Rng>(st: &Setting<S>, rng: &mut R) -> CheckOutcome {
    let mut t = Tally::identity("single_excitation_action", st.exact, st.tol);
    let fs = FockVector::basis(st.modes.fermi_state());
    for (li, ll) in st.modes.lunes().iter().enumerate() {
        let u: Vec<S> = random_profile(rng, ll);
        let au = st.a.mul(li, &u);
        let target: Vec<S> = (0..ll.len()).map(|i| S::int(ll.two_lambda[i]) * u[i].clone() + au[i].clone()).collect();
        let v = b_dag(ll, &u).apply(&fs);
        t.compare(|| format!("l = {}", ll.k), &v, &apply_heff(st.modes, st.a, &v), &b_dag(ll, &target).apply(&fs));
    }
    t.finish()
}

fn check_kinetic_identity<S: Amplitude>(st: &Setting<S>) -> CheckOutcome {
    let mut t = Tally::identity("kinetic_identity", st.exact, st.tol);
    let mut k_op = Operator::zero();
    for ll in st.modes.lunes() {
        for i in 0..ll.len() {
            let bd = b_dag_single::<S>(ll, i).compose(&b_single(ll, i));
            k_op = k_op.plus(&bd.scaled(&S::int(ll.two_lambda[i])));
        }
    }
    for v in &st.pool {
        let lhs = k_op.apply(v);
        let rhs = v.map_states(|s, a, out| {
            let f = st.modes.excitation_number(s) as i64 * st.modes.kinetic_offset(s);
            out.add_term(s, S::int(f) * a.clone());
        });
        t.compare(|| "random vector".into(), v, &lhs, &rhs);
    }
    t.finish()
}

fn check_hermiticity<S: Amplitude>(st: &Setting<S>, max_m: u32, cap: u64) -> CheckOutcome {
    let mut t = Tally::identity("hermiticity", st.exact, st.tol);
    for m in 0..=max_m.min(max_sector(st.modes)) {
        let states = match st.modes.sector_states(m, cap as u128) {
            Ok(s) => s,
            Err(_) => {
                t.note(format!("sector N_E = {m} exceeds the cap and was not assembled"));
                continue;
            }
        };
        let mut entries: HashMap<(FockState, FockState), S> = HashMap::new();
        for &s in &states {
            let col = apply_heff(st.modes, st.a, &FockVector::basis(s));
            for (&r, val) in col.iter() {
                if st.modes.excitation_number(r) != m || st.modes.hole_number(r) != m {
                    t.fail(format!("H_eff leaves sector {m}"), &FockVector::basis(s), &col);
                }
                entries.insert((r, s), val.clone());
            }
        }
        for (&(r, s), val) in &entries {
            let tr = entries.get(&(s, r)).cloned().unwrap_or_else(S::zero);
            let lhs = FockVector::from_terms([(r, val.clone())]);
            let rhs = FockVector::from_terms([(r, tr)]);
            t.compare(|| format!("N_E = {m}, entry ({}, {})", r.hex(), s.hex()), &FockVector::basis(s), &lhs, &rhs);
        }
    }
    t.finish()
}

/// `H_A Ψ_M = M b*_k((2h_k + A_k)φ)Ψ_{M−1} − M(M−1)ℰ_A Ψ_{M−2}` for any symmetric `A` and any `φ`.
fn check_residual_structure<S: Amplitude>(st: &Setting<S>) -> Vec<CheckOutcome> {
    let mut t = Tally::identity("residual_structure", st.exact, st.tol);
    let mut forms = Tally::identity("error_operator_forms", st.exact, st.tol);
    let Some((ki, phi)) = &st.trial else { return vec![t.finish(), forms.finish()] };
    let lk = &st.modes.lunes()[*ki];
    let aphi = st.a.mul(*ki, phi);
    let target: Vec<S> = (0..lk.len()).map(|i| S::int(lk.two_lambda[i]) * phi[i].clone() + aphi[i].clone()).collect();
    let bt = b_dag(lk, &target);
    let e_op = error_operator(st.modes, *ki, phi, st.a);
    for m in 0..=st.max_m {
        let mu = m as usize;
        let lhs = apply_heff(st.modes, st.a, &st.psi[mu]);
        let mut rhs = FockVector::zero();
        if m >= 1 {
            rhs.axpy(&S::int(m as i64), &bt.apply(&st.psi[mu - 1]));
        }
        if m >= 2 {
            let e = apply_error_operator(st.modes, *ki, phi, st.a, &st.psi[mu - 2]);
            rhs.axpy(&-S::int((m * (m - 1)) as i64), &e);
            forms.compare(|| format!("Ψ_{}", m - 2), &st.psi[mu - 2], &e, &e_op.apply(&st.psi[mu - 2]));
        }
        t.compare(|| format!("M = {m}"), &st.psi[mu], &lhs, &rhs);
    }
    for v in &st.pool {
        let direct = apply_error_operator(st.modes, *ki, phi, st.a, v);
        forms.compare(|| "random vector".into(), v, &direct, &e_op.apply(v));
    }
    vec![t.finish(), forms.finish()]
}

fn identity_checks<S: Amplitude, R: Rng>(st: &Setting<S>, max_pairs: usize, herm_max_m: u32, cap: u64, rng: &mut R) -> Vec<CheckOutcome> {
    let mut out = vec![check_car(st), check_pair_commutators(st)];
    let pairs = pair_list(st.modes.lunes().len(), max_pairs, rng);
    if !st.modes.lunes().is_empty() {
        out.extend(check_ccr(st, &pairs, rng));
    }
    out.extend(check_commutation_lemma(st, rng));
    out.push(check_norm_recursion(st));
    out.push(check_ne1_action(st, rng));
    out.push(check_kinetic_identity(st));
    out.push(check_hermiticity(st, herm_max_m, cap));
    out.extend(check_residual_structure(st));
    out
}

/// Residual norms, exchange terms and the closed-form bounds for `M = 0..=max_m`.
pub fn residual_scaling(radius_sq: i64, shell_cap: i64, k: Momentum, coupling: f64, max_m: u32) -> Result<ResidualScaling> {
    let modes = ModeSet::new(radius_sq, shell_cap)?;
    let potential = Potential::coulomb(coupling)?;
    let (a, spectra) = dense_coefficients(&modes, &potential)?;
    let plasmon = truncated_plasmon(&modes, &spectra, k)?;
    let lune = &modes.lunes()[plasmon.lune];
    let psi = build_psi_sequence(&modes, lune, &plasmon.phi, max_m.min(max_sector(&modes)))?;
    let points = residual_points(&modes, &a, &spectra, &plasmon, &psi);
    Ok(ResidualScaling {
        radius_sq,
        shell_cap,
        k,
        n_modes: modes.len(),
        lune_size: lune.len(),
        epsilon: plasmon.epsilon,
        norm_inf: plasmon.norm_inf,
        norm6_cubed: plasmon.norm6_cubed,
        hs_sum: spectra.hs_sum,
        points,
    })
}

fn residual_points(
    modes: &ModeSet,
    a: &LuneMatrices<f64>,
    spectra: &TruncatedSpectra,
    plasmon: &TruncatedPlasmon,
    psi: &[FockVector<f64>],
) -> Vec<ResidualPoint> {
    let hs = spectra.hs_sum.sqrt();
    let inf2 = plasmon.norm_inf.powi(2);
    let mut out = Vec::new();
    for (mu, v) in psi.iter().enumerate() {
        let m = mu as u32;
        let nsq = v.norm_sq();
        if nsq == 0.0 {
            break;
        }
        let mut r = apply_heff(modes, a, v);
        r.axpy(&(-(m as f64) * plasmon.epsilon), v);
        let (error_term, exchange_bound) = if m >= 2 {
            let e = apply_error_operator(modes, plasmon.lune, &plasmon.phi, a, &psi[mu - 2]);
            let mf = m as f64;
            (e.norm_f64(), 2.0 * mf * (mf - 1.0).sqrt() * inf2 * hs * psi[mu - 2].norm_f64())
        } else {
            (0.0, 0.0)
        };
        let denom = 1.0 - (m * m) as f64 * plasmon.norm6_cubed;
        let spectral_bound = (denom > 0.0).then(|| 2.0 * inf2 * hs * (m as f64).powf(2.5) / denom.sqrt());
        out.push(ResidualPoint {
            m,
            psi_norm_sq: nsq,
            residual: r.norm_f64() / nsq.sqrt(),
            error_term,
            exchange_bound,
            spectral_bound,
        });
    }
    out
}

fn float_checks(
    st: &Setting<f64>,
    spectra: &TruncatedSpectra,
    plasmon: &TruncatedPlasmon,
    cfg: &SuiteConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<CheckOutcome> {
    let modes = st.modes;
    let tol = cfg.tol;
    let fs = FockVector::basis(modes.fermi_state());
    let mut out = Vec::new();

    let mut diag = Tally::identity("single_excitation_diagonalization", false, tol);
    for (li, ll) in modes.lunes().iter().enumerate() {
        let Some(d) = &spectra.dense[li] else { continue };
        for n in 0..d.dim() {
            let u: Vec<f64> = d.eigenvectors.column(n).iter().copied().collect();
            let v = b_dag(ll, &u).apply(&fs);
            diag.compare(|| format!("l = {}, eigenvalue #{n}", ll.k), &v, &apply_heff(modes, st.a, &v), &v.scaled(&(2.0 * d.eigenvalues[n])));
        }
    }
    out.push(diag.finish());

    let eps = plasmon.epsilon;
    let mut low = Tally::identity("low_sector_eigenstate", false, tol);
    let mut resid = Tally::identity("residual_identity", false, tol);
    for (mu, v) in st.psi.iter().enumerate() {
        let m = mu as u32;
        let mut lhs = apply_heff(modes, st.a, v);
        lhs.axpy(&(-(m as f64) * eps), v);
        if m < 2 {
            low.compare(|| format!("M = {m}"), v, &lhs, &FockVector::zero());
        } else {
            let e = apply_error_operator(modes, plasmon.lune, &plasmon.phi, st.a, &st.psi[mu - 2]);
            resid.compare(|| format!("M = {m}"), v, &lhs, &e.scaled(&-((m * (m - 1)) as f64)));
        }
    }
    out.push(low.finish());
    out.push(resid.finish());

    // excitation-sum estimates on random states and random profile collections
    let mut ann = Tally::inequality("excitation_sum_annihilation", tol);
    let mut cre = Tally::inequality("excitation_sum_creation", tol);
    for m in 0..=cfg.max_m.min(max_sector(modes)) {
        for _ in 0..cfg.random_states {
            let v: FockVector<f64> = random_sector_vector(rng, modes, m, cfg.random_terms);
            let mut sum_b = Operator::zero();
            let mut sum_bd = Operator::zero();
            let mut weight = 0.0;
            for ll in modes.lunes() {
                let prof: Vec<f64> = (0..ll.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                weight += prof.iter().map(|x| x * x).sum::<f64>();
                sum_b = sum_b.plus(&b(ll, &prof));
                sum_bd = sum_bd.plus(&b_dag(ll, &prof));
            }
            let nv = v.norm_f64();
            ann.bound(|| format!("N_E = {m}"), sum_b.apply(&v).norm_f64(), weight.sqrt() * (m as f64).sqrt() * nv, Some(&v));
            cre.bound(|| format!("N_E = {m}"), sum_bd.apply(&v).norm_f64(), weight.sqrt() * (m as f64 + 1.0).sqrt() * nv, Some(&v));
        }
    }
    out.push(ann.finish());
    out.push(cre.finish());

    let points = residual_points(modes, st.a, spectra, plasmon, &st.psi);
    let s6 = plasmon.norm6_cubed;
    let inf2 = plasmon.norm_inf.powi(2);
    let hs = spectra.hs_sum.sqrt();
    let mut norm = Tally::inequality("trial_norm_two_sided", tol);
    let mut exch = Tally::inequality("exchange_term_bound", tol);
    let mut chain = Tally::inequality("residual_chain", tol);
    let mut spec = Tally::inequality("spectral_estimate", tol);
    for (mu, v) in st.psi.iter().enumerate() {
        let m = mu as u32;
        let mf = m as f64;
        let nsq = v.norm_sq();
        norm.bound(|| format!("upper, M = {m}"), nsq, factorial(m), None);
        norm.bound(|| format!("lower, M = {m}"), factorial(m) * (1.0 - mf * (mf - 1.0) / 2.0 * s6), nsq, None);
    }
    for p in &points {
        let m = p.m;
        let mf = m as f64;
        if m < 2 {
            continue;
        }
        let nm = p.psi_norm_sq.sqrt();
        let nm2 = st.psi[m as usize - 2].norm_f64();
        exch.bound(|| format!("M = {m}"), p.error_term, p.exchange_bound, None);
        // ‖(H−Mε)Ψ̂_M‖ ≤ M(M−1)‖ℰΨ_{M−2}‖/‖Ψ_M‖ ≤ 2M²(M−1)^{3/2}‖φ‖∞²√HS ‖Ψ_{M−2}‖/‖Ψ_M‖
        //   ≤ 2M^{3/2}(M−1)‖φ‖∞²√HS/√(1 − M(M−1)‖φ‖₆³/2)
        chain.bound(|| format!("first step, M = {m}"), p.residual, mf * (mf - 1.0) * p.error_term / nm, None);
        let step2 = 2.0 * mf * mf * (mf - 1.0).powf(1.5) * inf2 * hs * nm2 / nm;
        chain.bound(|| format!("second step, M = {m}"), mf * (mf - 1.0) * p.error_term / nm, step2, None);
        let d3 = 1.0 - mf * (mf - 1.0) / 2.0 * s6;
        let step3 = if d3 > 0.0 { 2.0 * mf.powf(1.5) * (mf - 1.0) * inf2 * hs / d3.sqrt() } else { f64::INFINITY };
        chain.bound(|| format!("third step, M = {m}"), step2, step3, None);
        spec.bound(|| format!("M = {m}"), p.residual, p.spectral_bound.unwrap_or(f64::INFINITY), None);
    }
    out.push(norm.finish());
    out.push(exch.finish());
    out.push(chain.finish());
    out.push(spec.finish());
    out
}

/// Runs every check on the configured truncation.
///
/// With an empty exterior only the `N_E = 0` checks apply and the plasmon section is absent.
pub fn verify_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let modes = ModeSet::new(cfg.radius_sq, cfg.shell_cap)?;
    let potential = Potential::coulomb(cfg.coupling)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let top = cfg.max_m.min(max_sector(&modes));

    let (a, spectra) = dense_coefficients(&modes, &potential)?;
    let plasmon = if modes.lunes().is_empty() { None } else { Some(truncated_plasmon(&modes, &spectra, cfg.k)?) };
    let psi = match &plasmon {
        Some(p) => build_psi_sequence(&modes, &modes.lunes()[p.lune], &p.phi, top)?,
        None => vec![FockVector::basis(modes.fermi_state())],
    };
    let pool: Vec<FockVector<f64>> = (0..=top).map(|m| random_sector_vector(&mut rng, &modes, m, cfg.random_terms)).collect();
    let st = Setting {
        modes: &modes,
        a: &a,
        trial: plasmon.as_ref().map(|p| (p.lune, p.phi.clone())),
        psi,
        pool,
        max_m: top,
        exact: false,
        tol: cfg.tol,
    };
    let mut checks = identity_checks(&st, cfg.max_pairs, top, cfg.sector_cap, &mut rng);
    let scaling = match &plasmon {
        Some(p) => {
            checks.extend(float_checks(&st, &spectra, p, cfg, &mut rng));
            Some(ResidualScaling {
                radius_sq: cfg.radius_sq,
                shell_cap: cfg.shell_cap,
                k: cfg.k,
                n_modes: modes.len(),
                lune_size: modes.lunes()[p.lune].len(),
                epsilon: p.epsilon,
                norm_inf: p.norm_inf,
                norm6_cubed: p.norm6_cubed,
                hs_sum: spectra.hs_sum,
                points: residual_points(&modes, &a, &spectra, p, &st.psi),
            })
        }
        None => {
            let mut t = Tally::identity("fermi_state_annihilated", false, cfg.tol);
            let fs = FockVector::basis(modes.fermi_state());
            t.compare(|| "H_eff ψ_FS".into(), &fs, &apply_heff(&modes, &a, &fs), &FockVector::zero());
            checks.push(t.finish());
            None
        }
    };

    if cfg.rational {
        let ra: LuneMatrices<BigRational> = random_coefficients(&modes, &mut rng);
        let trial = plasmon.as_ref().map(|p| {
            let phi: Vec<BigRational> = random_profile(&mut rng, &modes.lunes()[p.lune]);
            (p.lune, phi)
        });
        let psi = match &trial {
            Some((li, phi)) => build_psi_sequence(&modes, &modes.lunes()[*li], phi, top)?,
            None => vec![FockVector::basis(modes.fermi_state())],
        };
        let pool: Vec<FockVector<BigRational>> =
            (0..=top).map(|m| random_sector_vector(&mut rng, &modes, m, cfg.random_terms.min(8))).collect();
        let rst = Setting { modes: &modes, a: &ra, trial, psi, pool, max_m: top, exact: true, tol: 0.0 };
        checks.extend(identity_checks(
            &rst,
            cfg.rational_max_pairs,
            cfg.rational_hermiticity_max_m.min(top),
            cfg.sector_cap,
            &mut rng,
        ));
    }

    Ok(SuiteReport {
        config: cfg.clone(),
        n_modes: modes.len(),
        n_interior: modes.interior().len(),
        n_exterior: modes.exterior().len(),
        n_admissible: modes.lunes().len(),
        plasmon: scaling,
        checks,
    })
}
