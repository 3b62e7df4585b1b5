//! Spectral analysis of `Ẽ_k = (h² + 2P_{h^{1/2}v})^{1/2}` through its rank-one structure.
//!
//! On a lune histogram, `v` has equal components `√w` on every mode (`w` is the
//! weight per mode), so `Ẽ²` restricted to the span of the level indicators is
//! `diag(μ_j) + 2 z zᵀ` with `μ_j = λ_j²` and `z_j² = m_j w λ_j`. Inside each level the
//! orthogonal complement of the indicator is untouched and keeps eigenvalue `μ_j`
//! with multiplicity `m_j − 1`.
//!
//! Roots are stored as `(origin, offset)` with `μ̃ = μ_origin + offset` and the origin
//! the nearer pole, so `μ̃ − μ_i` is available without cancellation.
//!
//! Public eigenvalues are those of `2Ẽ`; [`eps_from_mu`] is the single conversion point.

use crate::dense::DenseOneBody;
use crate::error::{Error, Result};
use crate::lattice::{build_lune, isqrt, FermiBall, LuneHistogram, Momentum, Potential, TORUS_VOLUME};
use crate::quad;

/// Relative tolerance on the root offset; offsets are relative to the nearer pole,
/// so this bounds the relative error of `μ̃` as well.
pub const ROOT_TOL: f64 = 1e-13;

/// Default cap on the number of distinct levels for eigenvector reconstruction.
pub const HS_LEVEL_CAP: usize = 4096;

const MAX_ROOT_ITERATIONS: usize = 400;

// post-condition slack for comparisons between independently rounded quantities
const ASSERT_SLACK: f64 = 1e-11;

/// Eigenvalue of `2Ẽ` belonging to the eigenvalue `μ` of `Ẽ²`.
pub fn eps_from_mu(mu: f64) -> f64 {
    2.0 * mu.sqrt()
}

/// Inverse of [`eps_from_mu`].
pub fn mu_from_eps(eps: f64) -> f64 {
    0.25 * eps * eps
}

/// `h_k`, `v_k` on `ℓ²(L_k)`, held as a histogram.
#[derive(Clone, Debug)]
pub struct OneBodyProblem {
    histogram: LuneHistogram,
    vhat: f64,
    weight_per_mode: f64,
    fermi_count: Option<u64>,
}

impl OneBodyProblem {
    pub fn new(histogram: LuneHistogram, vhat: f64) -> Result<Self> {
        if !(vhat.is_finite() && vhat >= 0.0) {
            return Err(Error::InvalidInput(format!("V̂ must be finite and non-negative, got {vhat}")));
        }
        let weight_per_mode = vhat / (2.0 * TORUS_VOLUME);
        Ok(OneBodyProblem { histogram, vhat, weight_per_mode, fermi_count: None })
    }

    /// Builds the lune of `k` and records `N`, which enables the `ε ≥ √(2V̂|k|²N/(2π)³)` check.
    pub fn from_potential(ball: &FermiBall, potential: &Potential, k: Momentum) -> Result<Self> {
        let histogram = build_lune(ball, k)?;
        let mut p = Self::new(histogram, potential.vhat(k))?;
        p.fermi_count = Some(ball.n_particles());
        Ok(p)
    }

    pub fn histogram(&self) -> &LuneHistogram {
        &self.histogram
    }

    pub fn k(&self) -> Momentum {
        self.histogram.k
    }

    pub fn vhat(&self) -> f64 {
        self.vhat
    }

    /// `⟨e_p, v⟩²`, equal for every `p` in the lune.
    pub fn weight_per_mode(&self) -> f64 {
        self.weight_per_mode
    }

    pub fn fermi_count(&self) -> Option<u64> {
        self.fermi_count
    }

    /// Largest `λ` on the lune (not doubled).
    pub fn lambda_max(&self) -> f64 {
        self.histogram.two_lambda_max().map_or(0.0, |t| t as f64 / 2.0)
    }

    fn secular(&self) -> Secular {
        Secular {
            t: self.histogram.levels.iter().map(|&(t, _)| t).collect(),
            w2: self
                .histogram
                .levels
                .iter()
                .map(|&(t, m)| m as f64 * self.weight_per_mode * t as f64 / 2.0)
                .collect(),
        }
    }
}

// Grouped secular function s(τ) = 1 − 2 Σ_i z_i² / (τ − δ_i), δ_i = μ_i − μ_origin.
struct Secular {
    t: Vec<i64>,
    w2: Vec<f64>,
}

impl Secular {
    fn len(&self) -> usize {
        self.t.len()
    }

    fn mu(&self, i: usize) -> f64 {
        let t = self.t[i] as f64;
        0.25 * t * t
    }

    // exact while (2λ)² < 2⁵³
    fn delta(&self, i: usize, origin: usize) -> f64 {
        (self.t[i] * self.t[i] - self.t[origin] * self.t[origin]) as f64 * 0.25
    }

    fn eval(&self, origin: usize, tau: f64) -> (f64, f64) {
        let mut s = 0.0;
        let mut ds = 0.0;
        for i in 0..self.len() {
            let r = 1.0 / (tau - self.delta(i, origin));
            s += self.w2[i] * r;
            ds += self.w2[i] * r * r;
        }
        (1.0 - 2.0 * s, 2.0 * ds)
    }

    fn total_weight(&self) -> f64 {
        self.w2.iter().sum()
    }

    // Root of s on (lo, hi) in offset coordinates around `origin`; s(lo+) < 0 < s(hi−).
    fn solve(&self, origin: usize, mut lo: f64, mut hi: f64, gap: usize) -> Result<f64> {
        let width0 = hi - lo;
        while hi - lo > 1e-3 * width0 {
            let mid = 0.5 * (lo + hi);
            let (s, _) = self.eval(origin, mid);
            if s == 0.0 {
                return Ok(mid);
            }
            if s < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..MAX_ROOT_ITERATIONS {
            let (s, ds) = self.eval(origin, x);
            if s == 0.0 {
                return Ok(x);
            }
            if s < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let mut next = x - s / ds;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - x).abs();
            x = next;
            if step <= ROOT_TOL * x.abs() || hi - lo <= 4.0 * f64::EPSILON * x.abs() {
                return Ok(x);
            }
        }
        Err(Error::RootTolerance { gap, iterations: MAX_ROOT_ITERATIONS, width: hi - lo })
    }

    fn top_root(&self) -> Result<SecularRoot> {
        let top = self.len() - 1;
        let upper = 2.0 * self.total_weight() * (1.0 + 1e-6) + 1.0;
        let (s_hi, _) = self.eval(top, upper);
        if !(s_hi > 0.0) {
            let mu_top = self.mu(top);
            return Err(Error::Bracket { lo: mu_top, hi: mu_top + upper, value_hi: s_hi });
        }
        let offset = self.solve(top, 0.0, upper, top)?;
        Ok(SecularRoot { mu: self.mu(top) + offset, origin: top, offset })
    }

    fn interior_root(&self, j: usize) -> Result<SecularRoot> {
        let gap = self.delta(j + 1, j);
        let (s_mid, _) = self.eval(j, 0.5 * gap);
        let (origin, offset) = if s_mid >= 0.0 {
            (j, if s_mid == 0.0 { 0.5 * gap } else { self.solve(j, 0.0, 0.5 * gap, j)? })
        } else {
            (j + 1, self.solve(j + 1, -0.5 * gap, 0.0, j)?)
        };
        Ok(SecularRoot { mu: self.mu(origin) + offset, origin, offset })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaseLevel {
    pub two_lambda: i64,
    /// `λ²`.
    pub mu: f64,
    pub multiplicity: u64,
    /// `z² = m·w·λ`.
    pub group_weight: f64,
}

impl BaseLevel {
    pub fn lambda(&self) -> f64 {
        self.two_lambda as f64 / 2.0
    }
}

/// Eigenvalue `μ̃ = μ_origin + offset` of `Ẽ²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecularRoot {
    pub mu: f64,
    pub origin: usize,
    pub offset: f64,
}

/// Full spectrum of `Ẽ²`: one secular root per level (root `n` lies above level `n`),
/// plus the untouched multiplicities.
#[derive(Clone, Debug)]
pub struct RankOneSpectrum {
    pub base_levels: Vec<BaseLevel>,
    pub perturbed_roots: Vec<SecularRoot>,
    /// `(μ_j, m_j − 1)` for levels with `m_j > 1`.
    pub retained: Vec<(f64, u64)>,
}

impl RankOneSpectrum {
    fn delta(&self, i: usize, origin: usize) -> f64 {
        let ti = self.base_levels[i].two_lambda;
        let to = self.base_levels[origin].two_lambda;
        (ti * ti - to * to) as f64 * 0.25
    }

    /// `μ̃_n − μ_i`, free of cancellation.
    pub fn gap(&self, n: usize, i: usize) -> f64 {
        let r = &self.perturbed_roots[n];
        r.offset - self.delta(i, r.origin)
    }

    /// `μ̃_n − μ_n`.
    pub fn shift(&self, n: usize) -> f64 {
        self.gap(n, n)
    }

    /// `Σ_n (μ̃_n − μ_n)`, equal to `2⟨v, hv⟩`.
    pub fn trace_shift(&self) -> f64 {
        (0..self.perturbed_roots.len()).map(|n| self.shift(n)).sum()
    }

    /// `tr(Ẽ − h) = Σ_n (√μ̃_n − λ_n)`, each term evaluated as `(μ̃_n − μ_n)/(√μ̃_n + λ_n)`.
    pub fn trace_e_minus_h(&self) -> f64 {
        (0..self.perturbed_roots.len())
            .map(|n| self.shift(n) / (self.perturbed_roots[n].mu.sqrt() + self.base_levels[n].lambda()))
            .sum()
    }

    /// Top eigenvalue of `Ẽ²`.
    pub fn top(&self) -> Option<SecularRoot> {
        self.perturbed_roots.last().copied()
    }

    /// All eigenvalues of `2Ẽ` with multiplicity, ascending.
    pub fn eigenvalues_2e(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.perturbed_roots.iter().map(|r| eps_from_mu(r.mu)).collect();
        for &(mu, m) in &self.retained {
            out.extend(std::iter::repeat(eps_from_mu(mu)).take(m as usize));
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

/// Top eigenpair of `2Ẽ_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlasmonMode {
    /// Eigenvalue of `2Ẽ_k`.
    pub epsilon: f64,
    /// Eigenvalue of `Ẽ_k²`.
    pub mu: f64,
    /// Common value of `⟨e_p, φ⟩` on each level, in level order; normalized so that
    /// `Σ_j m_j φ_j² = 1`.
    pub phi_profile: Vec<f64>,
    pub norm_inf: f64,
    /// `‖φ‖₆³ = (Σ_p φ_p⁶)^{1/2}`.
    pub norm6_cubed: f64,
}

/// `(4V̂/(2π)³) Σ_{p∈L_k} λ/(ε² − 4λ²)`; eigenvalues of `2Ẽ` above the levels solve `f(ε) = 1`.
pub fn secular_value(problem: &OneBodyProblem, eps: f64) -> Result<f64> {
    let e2 = eps * eps;
    let mut sum = 0.0;
    for &(t, m) in &problem.histogram.levels {
        let t2 = (t * t) as f64;
        let d = e2 - t2;
        if d.abs() <= 64.0 * f64::EPSILON * e2.max(t2) {
            return Err(Error::Pole { eps, pole: t as f64 });
        }
        sum += m as f64 * (t as f64 / 2.0) / d;
    }
    Ok(8.0 * problem.weight_per_mode * sum)
}

/// `(2V̂/(2π)³) Σ_{p∈B_F} |k|²/((ε − 2k·p)² − |k|⁴)`, grouped by the integer `k·p`.
pub fn secular_value_fermiball(ball: &FermiBall, k: Momentum, vhat: f64, eps: f64) -> Result<f64> {
    if k.is_zero() {
        return Err(Error::InvalidInput("k must be non-zero".into()));
    }
    let k2 = k.norm_sq() as f64;
    let k4 = k2 * k2;
    let reach = ball
        .columns()
        .map(|(x, y, c)| (k.x * x + k.y * y).abs() + k.z.abs() * c)
        .max()
        .unwrap_or(0);
    let mut counts = vec![0u64; (2 * reach + 1) as usize];
    for (x, y, c) in ball.columns() {
        let base = k.x * x + k.y * y + reach;
        if k.z == 0 {
            counts[base as usize] += (2 * c + 1) as u64;
        } else {
            for z in -c..=c {
                counts[(base + k.z * z) as usize] += 1;
            }
        }
    }
    let mut sum = 0.0;
    for (i, &m) in counts.iter().enumerate() {
        if m == 0 {
            continue;
        }
        let s = 2.0 * (i as i64 - reach) as f64;
        let a = (eps - s) * (eps - s);
        let d = a - k4;
        if d.abs() <= 64.0 * f64::EPSILON * a.max(k4) {
            return Err(Error::Pole { eps, pole: s });
        }
        sum += m as f64 * k2 / d;
    }
    Ok(2.0 * vhat / TORUS_VOLUME * sum)
}

/// `⟨v, h^β v⟩ = w Σ_j m_j λ_j^β`.
pub fn moment(problem: &OneBodyProblem, beta: u32) -> Result<f64> {
    if beta > 3 {
        return Err(Error::InvalidInput(format!("moment order must be in 0..=3, got {beta}")));
    }
    let s: f64 = problem
        .histogram
        .levels
        .iter()
        .map(|&(t, m)| m as f64 * (t as f64 / 2.0).powi(beta as i32))
        .sum();
    Ok(problem.weight_per_mode * s)
}

fn require_plasmon_input(problem: &OneBodyProblem) -> Result<()> {
    if problem.histogram.is_empty() {
        return Err(Error::InvalidInput(format!("lune of {} is empty", problem.k())));
    }
    if !(problem.vhat > 0.0) {
        return Err(Error::InvalidInput(format!("V̂ at {} must be positive", problem.k())));
    }
    Ok(())
}

fn plasmon_unchecked(problem: &OneBodyProblem) -> Result<PlasmonMode> {
    require_plasmon_input(problem)?;
    let sec = problem.secular();
    let root = sec.top_root()?;
    let top = sec.len() - 1;
    let mut phi: Vec<f64> = (0..sec.len())
        .map(|j| {
            let lambda = sec.t[j] as f64 / 2.0;
            let gap = root.offset - sec.delta(j, top);
            lambda.sqrt() / gap
        })
        .collect();
    let norm_sq: f64 =
        phi.iter().zip(&problem.histogram.levels).map(|(f, &(_, m))| m as f64 * f * f).sum();
    let scale = norm_sq.sqrt().recip();
    phi.iter_mut().for_each(|f| *f *= scale);
    let norm_inf = phi.iter().copied().fold(0.0, f64::max);
    let sixth: f64 = phi.iter().zip(&problem.histogram.levels).map(|(f, &(_, m))| m as f64 * f.powi(6)).sum();
    Ok(PlasmonMode { epsilon: eps_from_mu(root.mu), mu: root.mu, phi_profile: phi, norm_inf, norm6_cubed: sixth.sqrt() })
}

/// Margins of the bounds that hold for every plasmon eigenpair (positive means satisfied).
#[derive(Clone, Debug, PartialEq)]
pub struct PlasmonBounds {
    /// `ε − 2λ_max`.
    pub above_continuum: f64,
    /// `ε² − 4(2⟨v,hv⟩ + ⟨v,h³v⟩/⟨v,hv⟩)`.
    pub variational: f64,
    /// `ε − √(2V̂|k|²N/(2π)³)`, when `N` is known.
    pub fermi_lower: Option<f64>,
    /// Smallest per-level slack of the component bound on `φ`, when `2⟨v,hv⟩ > λ_max²`.
    pub component: Option<f64>,
}

/// Evaluates the plasmon bounds for `mode` on `problem`.
pub fn plasmon_bounds(problem: &OneBodyProblem, mode: &PlasmonMode) -> Result<PlasmonBounds> {
    let m1 = moment(problem, 1)?;
    let m3 = moment(problem, 3)?;
    let lmax = problem.lambda_max();
    let est_sq = 8.0 * m1 + 4.0 * m3 / m1;
    let fermi_lower = problem.fermi_count.map(|n| {
        let k2 = problem.k().norm_sq() as f64;
        mode.epsilon - (2.0 * problem.vhat * k2 * n as f64 / TORUS_VOLUME).sqrt()
    });
    let component = (2.0 * m1 > lmax * lmax).then(|| {
        let pre = 2.0 * m1 / (2.0 * m1 - lmax * lmax);
        let v = problem.weight_per_mode.sqrt();
        problem
            .histogram
            .levels
            .iter()
            .zip(&mode.phi_profile)
            .map(|(&(t, _), &f)| pre * (t as f64 / 2.0).sqrt() / m1.sqrt() * v - f.abs())
            .fold(f64::INFINITY, f64::min)
    });
    Ok(PlasmonBounds {
        above_continuum: mode.epsilon - 2.0 * lmax,
        variational: mode.epsilon * mode.epsilon - est_sq,
        fermi_lower,
        component,
    })
}

fn check_plasmon_bounds(problem: &OneBodyProblem, mode: &PlasmonMode) -> Result<()> {
    let b = plasmon_bounds(problem, mode)?;
    let k = problem.k();
    if !(b.above_continuum > 0.0) {
        return Err(Error::Assertion(format!("ε at {k} does not exceed 2λ_max (margin {})", b.above_continuum)));
    }
    if b.variational < -ASSERT_SLACK * mode.epsilon * mode.epsilon {
        return Err(Error::Assertion(format!("variational lower bound fails at {k} (margin {})", b.variational)));
    }
    if let Some(m) = b.fermi_lower {
        if m < -ASSERT_SLACK * mode.epsilon {
            return Err(Error::Assertion(format!("ε at {k} is below √(2V̂|k|²N/(2π)³) (margin {m})")));
        }
    }
    if let Some(m) = b.component {
        if m < -ASSERT_SLACK * mode.norm_inf {
            return Err(Error::Assertion(format!("component bound on φ fails at {k} (margin {m})")));
        }
    }
    Ok(())
}

/// Plasmon eigenvalue and eigenvector profile; the bounds in [`PlasmonBounds`] are
/// asserted before returning.
pub fn plasmon_eigenvalue(problem: &OneBodyProblem) -> Result<PlasmonMode> {
    let mode = plasmon_unchecked(problem)?;
    check_plasmon_bounds(problem, &mode)?;
    Ok(mode)
}

/// All eigenvalues of `Ẽ²` via one secular root per gap plus the top root.
pub fn full_spectrum(problem: &OneBodyProblem) -> Result<RankOneSpectrum> {
    let sec = problem.secular();
    let base_levels: Vec<BaseLevel> = problem
        .histogram
        .levels
        .iter()
        .zip(&sec.w2)
        .map(|(&(t, m), &w2)| BaseLevel { two_lambda: t, mu: 0.25 * (t * t) as f64, multiplicity: m, group_weight: w2 })
        .collect();
    let retained = base_levels.iter().filter(|l| l.multiplicity > 1).map(|l| (l.mu, l.multiplicity - 1)).collect();
    let n = sec.len();
    let perturbed_roots = if n == 0 {
        Vec::new()
    } else if problem.vhat == 0.0 {
        (0..n).map(|j| SecularRoot { mu: sec.mu(j), origin: j, offset: 0.0 }).collect()
    } else {
        let mut roots = Vec::with_capacity(n);
        for j in 0..n - 1 {
            roots.push(sec.interior_root(j)?);
        }
        roots.push(sec.top_root()?);
        roots
    };
    Ok(RankOneSpectrum { base_levels, perturbed_roots, retained })
}

/// `√(8⟨v,hv⟩ + 4⟨v,h³v⟩/⟨v,hv⟩)`, with the two-sided sandwich around `ε` asserted.
pub fn theorem_estimate(problem: &OneBodyProblem) -> Result<f64> {
    let s = sandwich(problem)?;
    if s.epsilon < s.estimate * (1.0 - ASSERT_SLACK) {
        return Err(Error::Assertion(format!("estimate {} exceeds ε = {} at {}", s.estimate, s.epsilon, problem.k())));
    }
    if let Some(upper) = s.upper {
        if s.epsilon > upper * (1.0 + ASSERT_SLACK) {
            return Err(Error::Assertion(format!("ε = {} exceeds the upper bound {upper} at {}", s.epsilon, problem.k())));
        }
    }
    Ok(s.estimate)
}

/// Lower estimate, exact value and upper bound of the plasmon eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sandwich {
    pub estimate: f64,
    pub epsilon: f64,
    /// `√(estimate² + 16⟨v,h³v⟩λ_max²/(2⟨v,hv⟩ − λ_max²)²)`, when `2⟨v,hv⟩ > λ_max²`.
    pub upper: Option<f64>,
}

pub fn sandwich(problem: &OneBodyProblem) -> Result<Sandwich> {
    let m1 = moment(problem, 1)?;
    if !(m1 > 0.0) {
        return Err(Error::InvalidInput(format!("⟨v,hv⟩ vanishes at {}", problem.k())));
    }
    let m3 = moment(problem, 3)?;
    let est_sq = 8.0 * m1 + 4.0 * m3 / m1;
    let lmax = problem.lambda_max();
    let d = 2.0 * m1 - lmax * lmax;
    let upper = (d > 0.0).then(|| (est_sq + 16.0 * m3 * lmax * lmax / (d * d)).sqrt());
    let epsilon = plasmon_unchecked(problem)?.epsilon;
    Ok(Sandwich { estimate: est_sq.sqrt(), epsilon, upper })
}

/// `min{2⟨v,hv⟩, 4‖v‖⁴}`.
pub fn hs_norm_sq_bound(problem: &OneBodyProblem) -> f64 {
    let m0 = problem.weight_per_mode * problem.histogram.size as f64;
    let m1 = moment(problem, 1).expect("order 1 is valid");
    (2.0 * m1).min(4.0 * m0 * m0)
}

/// `‖Ẽ − h‖²_HS` from the secular roots with the default level cap.
pub fn hs_norm_sq_exact(problem: &OneBodyProblem) -> Result<f64> {
    hs_norm_sq_exact_with_cap(problem, HS_LEVEL_CAP)
}

/// `‖Ẽ − h‖²_HS = Σ_{n,i} c_n² z_i²/(√μ̃_n + λ_i)²`, where `c_n⁻² = Σ_i z_i²/(μ̃_n − μ_i)²`
/// normalizes the eigenvector `(μ̃_n − h²)⁻¹ h^{1/2} v` on the level span.
///
/// Work is quadratic in the number of distinct levels, which must not exceed `cap`.
pub fn hs_norm_sq_exact_with_cap(problem: &OneBodyProblem, cap: usize) -> Result<f64> {
    let n = problem.histogram.levels.len();
    if n > cap {
        return Err(Error::DimensionCap { dim: n, cap });
    }
    if problem.vhat == 0.0 || n == 0 {
        return Ok(0.0);
    }
    let spec = full_spectrum(problem)?;
    let mut total = 0.0;
    for r in 0..n {
        let sqrt_mu = spec.perturbed_roots[r].mu.sqrt();
        let mut inv_c2 = 0.0;
        let mut acc = 0.0;
        for (i, level) in spec.base_levels.iter().enumerate() {
            let g = spec.gap(r, i);
            inv_c2 += level.group_weight / (g * g);
            let s = sqrt_mu + level.lambda();
            acc += level.group_weight / (s * s);
        }
        total += acc / inv_c2;
    }
    let bound = hs_norm_sq_bound(problem);
    if total > bound * (1.0 + ASSERT_SLACK) {
        return Err(Error::Assertion(format!("‖Ẽ−h‖²_HS = {total} exceeds min{{2⟨v,hv⟩, 4‖v‖⁴}} = {bound}")));
    }
    Ok(total)
}

/// Sum of [`hs_norm_sq_bound`] over `l`, split at `|l| = 2k_F`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HsBoundSum {
    /// `Σ_{0<|l|≤2k_F}`, exact lattice sum.
    pub inside: f64,
    /// `Σ_{|l|>2k_F}`; closed-form integral comparison for Coulomb.
    pub tail: f64,
}

impl HsBoundSum {
    pub fn total(&self) -> f64 {
        self.inside + self.tail
    }
}

/// `Σ_l min{2⟨v_l,h_lv_l⟩, 4‖v_l‖⁴}` using `Σ_{p∈L_l} λ_{l,p} = N|l|²/2` and exact lune sizes.
///
/// Lune sizes for all `l` in `2B_F` come from one pass per `(l_x, l_y)` that accumulates
/// the column overlaps `|[−c, c] ∩ [l_z − c', l_z + c']|` as trapezoids in `l_z`.
pub fn hs_bound_sum(ball: &FermiBall, potential: &Potential) -> HsBoundSum {
    let n = ball.n_particles() as f64;
    let bound = |l: Momentum, size: f64| {
        let w = potential.vhat(l) / (2.0 * TORUS_VOLUME);
        let m1 = w * n * l.norm_sq() as f64 / 2.0;
        let m0 = w * size;
        (2.0 * m1).min(4.0 * m0 * m0)
    };
    let r2 = ball.radius_sq();
    match potential {
        Potential::Table(t) => {
            let mut s = HsBoundSum { inside: 0.0, tail: 0.0 };
            for &l in t.keys() {
                let b = bound(l, ball.lune_size(l) as f64);
                if l.norm_sq() <= 4 * r2 {
                    s.inside += b;
                } else {
                    s.tail += b;
                }
            }
            s
        }
        Potential::Coulomb { g } => {
            let mut inside = 0.0;
            for_each_overlap(ball, |l, overlap| {
                inside += bound(l, n - overlap as f64);
            });
            // beyond 2k_F, |L_l| = N and the minimum is 4‖v‖⁴ = 4(gN/(2(2π)³))²|l|⁻⁴
            let c = g * n / (2.0 * TORUS_VOLUME);
            let tail = 4.0 * c * c * 4.0 * std::f64::consts::PI / (2.0 * ball.k_fermi());
            HsBoundSum { inside, tail }
        }
    }
}

/// Calls `f(l, |B_F ∩ (B_F + l)|)` for every `0 < |l|² ≤ 4R²`, in no particular order.
pub fn for_each_overlap<F: FnMut(Momentum, u64)>(ball: &FermiBall, mut f: F) {
    let lmax_sq = 4 * ball.radius_sq();
    let lr = isqrt(lmax_sq);
    let width = (2 * lr + 1) as usize;
    let mut d2 = vec![0i64; width + 3];
    let cols: Vec<(i64, i64, i64)> = ball.columns().collect();
    for lx in 0..=lr {
        for ly in 0..=lx {
            if lx * lx + ly * ly > lmax_sq {
                continue;
            }
            let mult = match (lx, ly) {
                (0, 0) => 1,
                (_, 0) => 4,
                (a, b) if a == b => 4,
                _ => 8,
            };
            d2.iter_mut().for_each(|v| *v = 0);
            for &(x, y, c) in &cols {
                let Some(cs) = ball.column(x - lx, y - ly) else { continue };
                let span = c + cs;
                let plateau = (c - cs).abs();
                // slope +1 on [−span, −plateau], −1 on [plateau+1, span+1]; indices offset by lr
                let idx = |z: i64| (z + lr).clamp(0, width as i64 + 2) as usize;
                d2[idx(-span)] += 1;
                d2[idx(-plateau + 1)] -= 1;
                d2[idx(plateau + 1)] -= 1;
                d2[idx(span + 2)] += 1;
            }
            let (mut slope, mut value) = (0i64, 0i64);
            for (i, &d) in d2.iter().enumerate().take(width) {
                slope += d;
                value += slope;
                let lz = i as i64 - lr;
                let l = Momentum::new(lx, ly, lz);
                let n2 = l.norm_sq();
                if n2 == 0 || n2 > lmax_sq {
                    continue;
                }
                debug_assert!(value >= 0);
                report_images(&mut f, l, value as u64, mult);
            }
        }
    }
}

// Images of l under sign flips and exchange of the x and y coordinates share the overlap.
fn report_images<F: FnMut(Momentum, u64)>(f: &mut F, l: Momentum, overlap: u64, mult: u32) {
    let images: &[(i64, i64, bool)] = &[
        (1, 1, false),
        (-1, 1, false),
        (1, -1, false),
        (-1, -1, false),
        (1, 1, true),
        (-1, 1, true),
        (1, -1, true),
        (-1, -1, true),
    ];
    let mut seen: Vec<Momentum> = Vec::with_capacity(8);
    for &(sx, sy, swap) in images {
        let (a, b) = if swap { (l.y, l.x) } else { (l.x, l.y) };
        let img = Momentum::new(sx * a, sy * b, l.z);
        if !seen.contains(&img) {
            seen.push(img);
            f(img, overlap);
        }
    }
    debug_assert_eq!(seen.len() as u32, mult);
}

/// `√(Σ_{l∈2B_F} min{1, k_F V̂_l} V̂_l|l|² + k_F³ Σ_{l∉2B_F} V̂_l²)`.
///
/// For Coulomb the inner sum only depends on `|l|²`, so it is accumulated over the
/// positive octant with sign-flip weights; the outer tail uses `∫_{2k_F}^∞ 4πr² g² r⁻⁴ dr`.
pub fn error_prefactor(ball: &FermiBall, potential: &Potential) -> f64 {
    let kf = ball.k_fermi();
    let lmax_sq = 4 * ball.radius_sq();
    let term = |l: Momentum| {
        let v = potential.vhat(l);
        (kf * v).min(1.0) * v * l.norm_sq() as f64
    };
    let (inside, outside) = match potential {
        Potential::Table(t) => {
            let mut inside = 0.0;
            let mut outside = 0.0;
            for (&l, &v) in t {
                if l.norm_sq() <= lmax_sq {
                    inside += term(l);
                } else {
                    outside += v * v;
                }
            }
            (inside, outside)
        }
        Potential::Coulomb { g } => {
            if *g == 0.0 {
                return 0.0;
            }
            let m = isqrt(lmax_sq);
            let mut inside = 0.0;
            for x in 0..=m {
                let wx = if x == 0 { 1.0 } else { 2.0 };
                for y in 0..=m {
                    let rest = lmax_sq - x * x - y * y;
                    if rest < 0 {
                        break;
                    }
                    let wy = if y == 0 { 1.0 } else { 2.0 };
                    let c = isqrt(rest);
                    let mut col = 0.0;
                    for z in 0..=c {
                        let l = Momentum::new(x, y, z);
                        if l.is_zero() {
                            continue;
                        }
                        col += if z == 0 { 1.0 } else { 2.0 } * term(l);
                    }
                    inside += wx * wy * col;
                }
            }
            (inside, 2.0 * std::f64::consts::PI * g * g / kf)
        }
    };
    (inside + kf.powi(3) * outside).sqrt()
}

/// Comparison of `Ẽ − h` with its integral representation, entry by entry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegralRepCheck {
    /// `max_ij |(Ẽ−h)_ij − (4/π)∫₀^∞ …|`.
    pub max_deviation: f64,
    /// Smallest entry of `Ẽ − h`.
    pub min_entry: f64,
    /// `max_ij ((Ẽ−h)_ij − 2√(λ_iλ_j)/(λ_i+λ_j) v_i v_j)`; non-positive when the bound holds.
    pub max_bound_excess: f64,
}

/// Quadrature of `(4/π)∫₀^∞ t²/(1 + 2⟨v,h(h²+t²)⁻¹v⟩) P_{(h²+t²)⁻¹h^{1/2}v} dt` against dense `Ẽ − h`.
///
/// Uses `t = λ_max tan θ`; `quad_points` seeds the number of initial panels. The
/// elementwise bounds on `Ẽ − h` are asserted.
pub fn integral_rep_check(problem: &OneBodyProblem, quad_points: usize) -> Result<IntegralRepCheck> {
    if quad_points == 0 {
        return Err(Error::InvalidInput("quad_points must be positive".into()));
    }
    let zero = IntegralRepCheck { max_deviation: 0.0, min_entry: 0.0, max_bound_excess: 0.0 };
    if problem.vhat == 0.0 || problem.histogram.is_empty() {
        return Ok(zero);
    }
    let dense = DenseOneBody::from_problem(problem)?;
    let n = dense.dim();
    let lam = dense.lambdas.clone();
    let w = problem.weight_per_mode;
    let lmax = problem.lambda_max();
    let scale = 4.0 / std::f64::consts::PI;
    let integrand = |theta: f64, out: &mut [f64]| {
        let t = lmax * theta.tan();
        let sec2 = 1.0 + theta.tan().powi(2);
        let t2 = t * t;
        let denom = 1.0 + 2.0 * w * lam.iter().map(|l| l / (l * l + t2)).sum::<f64>();
        let x: Vec<f64> = lam.iter().map(|l| (l * w).sqrt() / (l * l + t2)).collect();
        let pre = scale * t2 / denom * lmax * sec2;
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = pre * x[i] * x[j];
            }
        }
    };
    let values = quad::integrate_vec(integrand, 0.0, std::f64::consts::FRAC_PI_2, n * n, 1e-11, quad_points)?;
    let diff = dense.e_minus_h();
    let mut check = IntegralRepCheck { max_deviation: 0.0, min_entry: f64::INFINITY, max_bound_excess: f64::NEG_INFINITY };
    for i in 0..n {
        for j in 0..n {
            let e = diff[(i, j)];
            check.max_deviation = check.max_deviation.max((e - values[i * n + j]).abs());
            check.min_entry = check.min_entry.min(e);
            let b = 2.0 * (lam[i] * lam[j]).sqrt() / (lam[i] + lam[j]) * w;
            check.max_bound_excess = check.max_bound_excess.max(e - b);
        }
    }
    if check.min_entry < -1e-12 {
        return Err(Error::Assertion(format!("Ẽ−h has a negative entry {}", check.min_entry)));
    }
    if check.max_bound_excess > 1e-12 {
        return Err(Error::Assertion(format!("Ẽ−h exceeds the elementwise bound by {}", check.max_bound_excess)));
    }
    Ok(check)
}
