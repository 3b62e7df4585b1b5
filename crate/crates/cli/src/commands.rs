//! One function per subcommand; each returns a finished [`Table`].
//!
//! Sweeps run in parallel and are collected back in input order, so the output does not
//! depend on the thread count.

use plasmon_core::continuum::ContinuumModel;
use plasmon_core::correlation::ecorr_total;
use plasmon_core::fockcheck::{residual_scaling, verify_suite, CheckKind, SuiteConfig};
use plasmon_core::spectral::{
    eps_from_mu, full_spectrum, hs_norm_sq_bound, hs_norm_sq_exact, moment, plasmon_bounds, plasmon_eigenvalue,
    sandwich, theorem_estimate, OneBodyProblem,
};
use plasmon_core::{FermiBall, Momentum};
use rayon::prelude::*;

use crate::config::{Command, RunConfig};
use crate::output::{Cell, Table};

pub type CmdResult = Result<Table, Box<dyn std::error::Error + Send + Sync>>;

pub fn run(cmd: Command, cfg: &RunConfig) -> CmdResult {
    match cmd {
        Command::Figure1 => figure1(cfg),
        Command::Dispersion => dispersion(cfg),
        Command::Ecorr => ecorr(cfg),
        Command::Bounds => bounds(cfg),
        Command::Verify => verify(cfg),
    }
}

fn k_cells(k: Momentum) -> [Cell; 3] {
    [Cell::Int(k.x), Cell::Int(k.y), Cell::Int(k.z)]
}

const K_COLUMNS: [(&str, &str); 3] =
    [("k_x", "x component of the pair momentum k"), ("k_y", "y component of k"), ("k_z", "z component of k")];

/// Top eigenvalue of `2Ẽ_k` and the two-moment estimate; with `V̂_k = 0` these are `2λ_max`
/// and the `g → 0` limit `2(⟨λ³⟩/⟨λ⟩)^{1/2}` of the estimate.
fn plasmon_and_estimate(problem: &OneBodyProblem) -> plasmon_core::Result<(f64, f64)> {
    if problem.vhat() == 0.0 {
        let top = full_spectrum(problem)?.top().map_or(0.0, |r| eps_from_mu(r.mu));
        let unit = OneBodyProblem::new(problem.histogram().clone(), 1.0)?;
        let est = (4.0 * moment(&unit, 3)? / moment(&unit, 1)?).sqrt();
        Ok((top, est))
    } else {
        Ok((plasmon_eigenvalue(problem)?.epsilon, theorem_estimate(problem)?))
    }
}

pub fn figure1(cfg: &RunConfig) -> CmdResult {
    let ball = FermiBall::new(cfg.radius())?;
    let potential = cfg.potential();
    let continuum = ContinuumModel::new(cfg.g, ball.k_fermi()).ok().filter(|_| !potential.is_zero());
    let rows: Vec<plasmon_core::Result<Vec<Cell>>> = cfg
        .momenta()
        .into_par_iter()
        .map(|k| {
            let p = OneBodyProblem::from_potential(&ball, &potential, k)?;
            let (eps, est) = plasmon_and_estimate(&p)?;
            let two_lmax = p.histogram().two_lambda_max().unwrap_or(0);
            let cont = match &continuum {
                Some(m) => m.dispersion_approx(k.norm())?.sqrt_form,
                None => f64::NAN,
            };
            let [x, y, z] = k_cells(k);
            Ok(vec![x, y, z, k.norm().into(), eps.into(), two_lmax.into(), est.into(), cont.into()])
        })
        .collect();
    let mut t = Table::new(
        "figure1",
        [
            K_COLUMNS.as_slice(),
            &[
                ("k_norm", "|k|"),
                ("epsilon", "plasmon eigenvalue, the largest eigenvalue of 2Ẽ_k"),
                ("two_lambda_max", "upper edge 2λ_max of the particle-hole continuum, exact integer"),
                ("theorem_estimate", "two-moment estimate (8⟨v,hv⟩ + 4⟨v,h³v⟩/⟨v,hv⟩)^{1/2}"),
                ("continuum_dispersion", "(ω₀² + (12/5)k_F²|k|²)^{1/2} with ω₀² = g k_F³/(3π²); NaN when V̂ = 0"),
            ],
        ]
        .concat(),
    );
    for r in rows {
        t.push(r?);
    }
    t.summary("k_fermi", ball.k_fermi());
    t.summary("n_particles", ball.n_particles() as i64);
    Ok(t)
}

pub fn dispersion(cfg: &RunConfig) -> CmdResult {
    let ball = FermiBall::new(cfg.radius())?;
    let potential = cfg.potential();
    let model = ContinuumModel::new(cfg.g, ball.k_fermi())?;
    let rows: Vec<plasmon_core::Result<Vec<Cell>>> = cfg
        .momenta()
        .into_par_iter()
        .map(|k| {
            let p = OneBodyProblem::from_potential(&ball, &potential, k)?;
            let eps = plasmon_eigenvalue(&p)?.epsilon;
            let d = model.dispersion_approx(k.norm())?;
            let [x, y, z] = k_cells(k);
            Ok(vec![
                x,
                y,
                z,
                k.norm().into(),
                eps.into(),
                d.sqrt_form.into(),
                d.expanded.into(),
                ((eps - d.sqrt_form) / d.sqrt_form).into(),
                d.in_window.into(),
            ])
        })
        .collect();
    let mut t = Table::new(
        "dispersion",
        [
            K_COLUMNS.as_slice(),
            &[
                ("k_norm", "|k|"),
                ("epsilon", "lattice plasmon eigenvalue of 2Ẽ_k"),
                ("continuum_sqrt", "continuum dispersion (ω₀² + (12/5)k_F²|k|²)^{1/2}"),
                ("continuum_expanded", "first-order expansion ω₀ + (6/5)k_F²|k|²/ω₀"),
                ("relative_gap", "(epsilon − continuum_sqrt)/continuum_sqrt"),
                ("in_window", "|k| ≤ k_F^0.45, where the expansion is claimed"),
            ],
        ]
        .concat(),
    );
    for r in rows {
        t.push(r?);
    }
    t.summary("omega_0", model.plasmon_frequency());
    t.summary("quadratic_coefficient", model.dispersion_coefficient());
    Ok(t)
}

pub fn ecorr(cfg: &RunConfig) -> CmdResult {
    let ball = FermiBall::new(cfg.radius())?;
    let r = ecorr_total(&ball, &cfg.potential(), cfg.k_cut, cfg.tol)?;
    let mut t = Table::new(
        "ecorr",
        [
            K_COLUMNS.as_slice(),
            &[
                ("k_norm_sq", "|k|²"),
                ("ecorr_k", "per-mode correlation energy tr(Ẽ_k − h_k) − ‖v_k‖², by quadrature"),
            ],
        ]
        .concat(),
    );
    for (&k, &v) in &r.per_k {
        let [x, y, z] = k_cells(k);
        t.push(vec![x, y, z, k.norm_sq().into(), v.into()]);
        if v > 0.0 {
            t.failures.push(format!("correlation energy at {k} is positive: {v}"));
        }
    }
    t.summary("lattice_sum", r.lattice_sum());
    t.summary("tail_estimate", r.tail_estimate);
    t.summary("total", r.total);
    t.notes.push(format!(
        "tail_estimate covers |k| > {} with the second-order term and mean pair energy; total = lattice_sum + tail_estimate",
        r.k_cutoff
    ));
    Ok(t)
}

pub fn bounds(cfg: &RunConfig) -> CmdResult {
    let ball = FermiBall::new(cfg.radius())?;
    let potential = cfg.potential();
    let mut t = Table::new(
        "bounds",
        vec![
            ("quantity", "name of the reported quantity"),
            ("k", "pair momentum, empty for k-independent quantities"),
            ("m", "number of pair excitations M, empty where not applicable"),
            ("value", "value of the quantity"),
            ("holds", "whether the associated bound is satisfied, empty for plain values"),
        ],
    );
    let row = |t: &mut Table, q: &str, k: Option<Momentum>, m: Option<u32>, v: f64, holds: Option<bool>| {
        t.push(vec![
            q.into(),
            k.map_or(Cell::Empty, |k| k.to_string().into()),
            m.map_or(Cell::Empty, |m| Cell::Int(m as i64)),
            v.into(),
            holds.map_or(Cell::Empty, Cell::Bool),
        ]);
    };

    let kf = ball.k_fermi();
    let prefactor = plasmon_core::spectral::error_prefactor(&ball, &potential);
    row(&mut t, "error_prefactor", None, None, prefactor, None);
    row(&mut t, "error_prefactor_over_k_fermi", None, None, prefactor / kf, None);

    let one_body: Vec<plasmon_core::Result<_>> = cfg
        .momenta()
        .into_par_iter()
        .map(|k| {
            let p = OneBodyProblem::from_potential(&ball, &potential, k)?;
            let mode = plasmon_eigenvalue(&p)?;
            let b = plasmon_bounds(&p, &mode)?;
            let s = sandwich(&p)?;
            let hs = hs_norm_sq_exact(&p)?;
            Ok((k, mode, b, s, hs, hs_norm_sq_bound(&p)))
        })
        .collect();
    for r in one_body {
        let (k, mode, b, s, hs, hs_bound) = r?;
        let k = Some(k);
        row(&mut t, "epsilon", k, None, mode.epsilon, None);
        row(&mut t, "theorem_estimate", k, None, s.estimate, Some(s.estimate <= s.epsilon * (1.0 + 1e-12)));
        if let Some(u) = s.upper {
            row(&mut t, "epsilon_upper_bound", k, None, u, Some(s.epsilon <= u * (1.0 + 1e-12)));
        }
        row(&mut t, "above_continuum_margin", k, None, b.above_continuum, Some(b.above_continuum > 0.0));
        row(&mut t, "variational_margin", k, None, b.variational, Some(b.variational >= -1e-12 * mode.mu * 4.0));
        if let Some(m) = b.fermi_lower {
            row(&mut t, "fermi_lower_margin", k, None, m, Some(m >= -1e-12 * mode.epsilon));
        }
        if let Some(m) = b.component {
            row(&mut t, "component_margin", k, None, m, Some(m >= -1e-12 * mode.norm_inf));
        }
        row(&mut t, "phi_norm6_cubed", k, None, mode.norm6_cubed, None);
        row(&mut t, "hs_norm_sq", k, None, hs, Some(hs <= hs_bound * (1.0 + 1e-12)));
        row(&mut t, "hs_norm_sq_bound", k, None, hs_bound, None);
    }

    // Fock-space part on the truncation, first momentum only
    let k = cfg.momenta()[0];
    let s = residual_scaling(cfg.fock_radius_sq, cfg.shell_cap, k, cfg.g, cfg.m)?;
    let kf_fock = (cfg.fock_radius_sq.max(1) as f64).sqrt();
    let mut fitted: f64 = 0.0;
    row(&mut t, "truncated_epsilon", Some(k), None, s.epsilon, None);
    row(&mut t, "truncated_phi_norm6_cubed", Some(k), None, s.norm6_cubed, None);
    row(&mut t, "truncated_hs_sum", Some(k), None, s.hs_sum, None);
    for p in s.points.iter().filter(|p| p.m >= 2) {
        let m = Some(p.m);
        let scale = kf_fock.sqrt() * (p.m as f64).powf(2.5) / k.norm();
        fitted = fitted.max(p.residual / scale);
        row(&mut t, "residual", Some(k), m, p.residual, None);
        row(&mut t, "residual_over_scale", Some(k), m, p.residual / scale, None);
        row(&mut t, "error_term", Some(k), m, p.error_term, Some(p.error_term <= p.exchange_bound * (1.0 + 1e-12)));
        row(&mut t, "exchange_bound", Some(k), m, p.exchange_bound, None);
        if let Some(b) = p.spectral_bound {
            row(&mut t, "spectral_bound", Some(k), m, b, Some(p.residual <= b * (1.0 + 1e-12)));
        }
    }
    row(&mut t, "fitted_residual_constant", Some(k), None, fitted, None);

    let failed: Vec<String> = t
        .rows
        .iter()
        .filter(|r| r[4] == Cell::Bool(false))
        .map(|r| format!("{:?} at k = {:?}, M = {:?}", r[0], r[1], r[2]))
        .collect();
    t.failures = failed;
    t.notes.push(format!(
        "one-body rows use R² = {}; truncated rows use interior |p|² ≤ {} and exterior up to {}, with scale |k|⁻¹k_F^{{1/2}}M^{{5/2}} at that k_F",
        cfg.radius(),
        cfg.fock_radius_sq,
        cfg.shell_cap
    ));
    Ok(t)
}

pub fn verify(cfg: &RunConfig) -> CmdResult {
    let suite = SuiteConfig {
        radius_sq: cfg.radius(),
        shell_cap: cfg.shell_cap,
        k: cfg.momenta()[0],
        max_m: cfg.m,
        coupling: cfg.g,
        tol: cfg.check_tol,
        ..SuiteConfig::default()
    };
    let report = verify_suite(&suite)?;
    let mut t = Table::new(
        "verify",
        vec![
            ("check", "name of the identity or inequality"),
            ("kind", "identity or inequality"),
            ("exact", "evaluated in exact rational arithmetic"),
            ("cases", "number of evaluated cases"),
            ("worst", "identities: largest relative residual; inequalities: smallest relative margin"),
            ("tolerance", "acceptance tolerance"),
            ("passed", "check outcome"),
            ("note", "free-form remark"),
            ("failure", "JSON failure artifact with hex bitmasks and decimal amplitudes"),
        ],
    );
    for c in &report.checks {
        let kind = match c.kind {
            CheckKind::Identity => "identity",
            CheckKind::Inequality => "inequality",
        };
        let failure = c.failure.as_ref().map_or(Cell::Empty, |f| serde_json::to_string(f).expect("artifact").into());
        t.push(vec![
            c.name.as_str().into(),
            kind.into(),
            c.exact.into(),
            Cell::Int(c.cases as i64),
            c.worst.into(),
            c.tolerance.into(),
            c.passed.into(),
            c.note.clone().map_or(Cell::Empty, Cell::Text),
            failure,
        ]);
        if !c.passed {
            t.failures.push(format!("check {} failed", c.name));
        }
    }
    t.summary("n_modes", report.n_modes as i64);
    t.summary("n_interior", report.n_interior as i64);
    t.summary("n_exterior", report.n_exterior as i64);
    t.summary("n_admissible", report.n_admissible as i64);
    t.summary("all_passed", report.all_passed());
    if let Some(p) = &report.plasmon {
        t.summary("plasmon_epsilon", p.epsilon);
        t.summary("plasmon_phi_norm6_cubed", p.norm6_cubed);
    }
    Ok(t)
}
