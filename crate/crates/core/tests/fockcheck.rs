use std::f64::consts::PI;

use plasmon_core::fockcheck::{
    anticommutator_apply, apply_error_operator, apply_heff, b_dag, b_dag_single, b_single, build_psi_m,
    build_psi_sequence, c, c_dag, commutator_apply, dense_coefficients, residual_scaling, truncated_plasmon,
    verify_suite, CheckKind, FockState, FockVector, ModeSet, SuiteConfig,
};
use plasmon_core::{Momentum, Potential};
use proptest::prelude::*;

fn nineteen() -> ModeSet {
    ModeSet::new(1, 2).unwrap()
}

#[test]
fn default_suite_passes_every_check() {
    let report = verify_suite(&SuiteConfig::default()).unwrap();
    assert_eq!((report.n_modes, report.n_interior, report.n_exterior), (19, 7, 12));
    for c in &report.checks {
        assert!(c.passed, "{} failed: worst {:?}, note {:?}", c.name, c.worst, c.note);
        assert!(c.failure.is_none());
    }
    let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
    for want in [
        "car",
        "quasi_bosonic_ccr",
        "exchange_commutator",
        "exchange_commutator_diagonal",
        "commutation_lemma",
        "norm_recursion",
        "kinetic_identity",
        "single_excitation_diagonalization",
        "hermiticity",
        "excitation_sum_annihilation",
        "excitation_sum_creation",
        "trial_norm_two_sided",
        "residual_chain",
        "spectral_estimate",
        "norm_recursion[exact]",
        "residual_structure[exact]",
    ] {
        assert!(names.contains(&want), "missing check {want}");
    }
    assert!(report.checks.iter().filter(|c| c.exact).all(|c| c.worst == Some(0.0)));
    let identities = report.checks.iter().filter(|c| c.kind == CheckKind::Identity);
    assert!(identities.filter(|c| !c.exact).all(|c| c.worst.unwrap_or(0.0) <= 1e-12));
}

#[test]
fn empty_exterior_degenerates_to_trivia() {
    let cfg = SuiteConfig { radius_sq: 1, shell_cap: 1, ..SuiteConfig::default() };
    let report = verify_suite(&cfg).unwrap();
    assert_eq!(report.n_exterior, 0);
    assert_eq!(report.n_admissible, 0);
    assert!(report.plasmon.is_none());
    assert!(report.all_passed());
}

#[test]
fn config_rejects_unknown_keys_and_round_trips() {
    let cfg = SuiteConfig::default();
    let json = serde_json::to_string(&cfg).unwrap();
    let back: SuiteConfig = serde_json::from_str(&json).unwrap();
    assert_eq!(back, cfg);
    assert!(serde_json::from_str::<SuiteConfig>(r#"{"shell_cap": 2, "bogus": 1}"#).is_err());
    let bad = SuiteConfig { shell_cap: 0, ..SuiteConfig::default() };
    assert!(verify_suite(&bad).is_err());
}

#[test]
fn single_mode_anticommutator_is_identity() {
    let ms = nineteen();
    for mode in 0..ms.len() {
        for s in [FockState(0), FockState(1 << mode), ms.fermi_state()] {
            let v = FockVector::<f64>::basis(s);
            let out = anticommutator_apply(&c(mode), &c_dag(mode), &v);
            assert_eq!(out, v, "mode {mode}, state {}", s.hex());
        }
    }
}

#[test]
fn exterior_modes_annihilate_the_fermi_state() {
    let ms = nineteen();
    let fs = FockVector::<f64>::basis(ms.fermi_state());
    for &p in ms.exterior() {
        assert!(c(p).apply(&fs).is_empty());
    }
    for &h in ms.interior() {
        assert!(c_dag(h).apply(&fs).is_empty());
    }
}

#[test]
fn pair_commutator_on_fermi_state() {
    let ms = nineteen();
    let fs = FockVector::<f64>::basis(ms.fermi_state());
    let lune = ms.lune(Momentum::axis(1)).unwrap();
    for i in 0..lune.len() {
        for j in 0..lune.len() {
            let out = commutator_apply(&b_single(lune, i), &b_dag_single(lune, j), &fs);
            let want = if i == j { fs.clone() } else { FockVector::zero() };
            assert_eq!(out, want);
        }
    }
}

#[test]
fn unit_lune_trial_profile_is_uniform() {
    let ms = nineteen();
    let (_, spectra) = dense_coefficients(&ms, &Potential::coulomb(4.0 * PI).unwrap()).unwrap();
    let tp = truncated_plasmon(&ms, &spectra, Momentum::axis(1)).unwrap();
    assert_eq!(tp.phi.len(), 4);
    for f in &tp.phi {
        assert!((f - 0.5).abs() < 1e-14);
    }
    assert!((tp.norm6_cubed - 0.25).abs() < 1e-14);
}

#[test]
fn trial_state_norms() {
    let ms = nineteen();
    let (_, spectra) = dense_coefficients(&ms, &Potential::coulomb(4.0 * PI).unwrap()).unwrap();
    let tp = truncated_plasmon(&ms, &spectra, Momentum::axis(1)).unwrap();
    let lune = &ms.lunes()[tp.lune];
    let psi1 = build_psi_m(&ms, lune, &tp.phi, 1).unwrap();
    assert!((psi1.norm_sq() - 1.0).abs() < 1e-14);
    let n2 = build_psi_m(&ms, lune, &tp.phi, 2).unwrap().norm_sq();
    assert!(n2 >= 2.0 * (1.0 - tp.norm6_cubed) - 1e-12 && n2 <= 2.0 + 1e-12, "‖Ψ₂‖² = {n2}");
    assert!(build_psi_m(&ms, lune, &tp.phi, 8).is_err());
}

#[test]
fn effective_hamiltonian_kills_the_fermi_state() {
    let ms = nineteen();
    let (a, _) = dense_coefficients(&ms, &Potential::coulomb(4.0 * PI).unwrap()).unwrap();
    let fs = FockVector::<f64>::basis(ms.fermi_state());
    assert!(apply_heff(&ms, &a, &fs).norm_sq() < 1e-28);
}

#[test]
fn error_term_on_the_fermi_state_is_a_two_pair_vector() {
    // ℰψ_FS itself is non-zero; it only enters the residual with the factor M(M−1)
    let ms = nineteen();
    let (a, spectra) = dense_coefficients(&ms, &Potential::coulomb(4.0 * PI).unwrap()).unwrap();
    let tp = truncated_plasmon(&ms, &spectra, Momentum::axis(1)).unwrap();
    let fs = FockVector::<f64>::basis(ms.fermi_state());
    let e = apply_error_operator(&ms, tp.lune, &tp.phi, &a, &fs);
    assert!(!e.is_empty());
    assert!(e.iter().all(|(s, _)| ms.excitation_number(*s) == 2 && ms.hole_number(*s) == 2));
    let psi2 = build_psi_m(&ms, &ms.lunes()[tp.lune], &tp.phi, 2).unwrap();
    let lhs = apply_heff(&ms, &a, &psi2).minus(&psi2.scaled(&(2.0 * tp.epsilon)));
    assert!(lhs.plus(&e.scaled(&2.0)).norm_f64() < 1e-13);
}

#[test]
fn single_excitation_is_an_eigenstate() {
    let ms = nineteen();
    let (a, spectra) = dense_coefficients(&ms, &Potential::coulomb(1.0).unwrap()).unwrap();
    let fs = FockVector::<f64>::basis(ms.fermi_state());
    let k = Momentum::new(1, 1, 0);
    let tp = truncated_plasmon(&ms, &spectra, k).unwrap();
    let lune = &ms.lunes()[tp.lune];
    let psi = b_dag(lune, &tp.phi).apply(&fs);
    let res = apply_heff(&ms, &a, &psi).minus(&psi.scaled(&tp.epsilon));
    assert!(res.norm_f64() < 1e-12, "residual {}", res.norm_f64());
}

#[test]
fn psi_sequence_matches_repeated_creation() {
    let ms = nineteen();
    let lune = ms.lune(Momentum::axis(1)).unwrap();
    let phi = vec![0.1, 0.7, -0.3, 0.2];
    let seq = build_psi_sequence(&ms, lune, &phi, 3).unwrap();
    let bd = b_dag(lune, &phi);
    let mut v = FockVector::<f64>::basis(ms.fermi_state());
    for (m, psi) in seq.iter().enumerate() {
        assert!(psi.minus(&v).norm_f64() < 1e-15, "M = {m}");
        v = bd.apply(&v);
    }
}

#[test]
fn failure_artifact_serializes_hex_and_decimal() {
    let v = FockVector::from_terms([(FockState(0x7f), -0.25), (FockState(0x80), 1.5)]);
    let json = serde_json::to_value(v.artifact()).unwrap();
    assert_eq!(json[0]["state"], "0x7f");
    assert_eq!(json[0]["amplitude"], "-0.25");
}

// Residuals ‖(H_eff − Mε)Ψ̂_M‖ at R² = 1, k = (1,0,0), g = 4π, frozen from the exact
// sparse evaluation, cross-checked against ℰ assembled as an operator inside the suite.
#[test]
fn frozen_residuals_on_the_unit_truncation() {
    let s = residual_scaling(1, 2, Momentum::axis(1), 4.0 * PI, 4).unwrap();
    assert!((s.epsilon - 1.185_447_061_057_284).abs() < 1e-12);
    let want = [(2, 0.067_069_568_204_307_4), (3, 0.194_897_036_625_698), (4, 0.386_997_193_027_398)];
    for (m, r) in want {
        let got = s.points[m].residual;
        assert!((got - r).abs() < 1e-10 * r, "M = {m}: {got} vs {r}");
    }
    assert!((s.points[2].psi_norm_sq - 1.5).abs() < 1e-12);
    assert!((s.points[3].psi_norm_sq - 2.25).abs() < 1e-12);
}

#[test]
fn residuals_grow_no_faster_than_m_to_five_halves() {
    for cap in 2..=6 {
        let s = residual_scaling(1, cap, Momentum::axis(1), 4.0 * PI, 4).unwrap();
        let r2 = s.points[2].residual;
        for m in [3u32, 4] {
            let limit = 1.5 * (m as f64 / 2.0).powf(2.5) * r2;
            assert!(s.points[m as usize].residual <= limit, "cap {cap}, M = {m}");
        }
        for p in &s.points[2..] {
            assert!(p.error_term <= p.exchange_bound);
        }
    }
}

proptest! {
    #[test]
    fn distinct_modes_anticommute(bits in any::<u32>(), a in 0usize..32, b in 0usize..32) {
        prop_assume!(a != b);
        let v = FockVector::<f64>::basis(FockState(bits as u128));
        prop_assert!(anticommutator_apply(&c(a), &c(b), &v).is_empty());
        prop_assert!(anticommutator_apply(&c_dag(a), &c_dag(b), &v).is_empty());
        prop_assert!(anticommutator_apply(&c(a), &c_dag(b), &v).is_empty());
    }

    #[test]
    fn hop_equals_create_after_annihilate(bits in any::<u32>(), a in 0usize..32, b in 0usize..32) {
        let s = FockState(bits as u128);
        let direct = s.hop(a, b);
        let seq = s.annihilate(b).and_then(|(n1, t)| t.create(a).map(|(n2, u)| (n1 ^ n2, u)));
        prop_assert_eq!(direct, seq);
    }

    #[test]
    fn creation_operators_commute(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let ms = nineteen();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let lunes = ms.lunes();
        let k = &lunes[rng.gen_range(0..lunes.len())];
        let l = &lunes[rng.gen_range(0..lunes.len())];
        let phi: Vec<f64> = (0..k.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let psi: Vec<f64> = (0..l.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = FockVector::basis(ms.fermi_state());
        let v = b_dag(k, &phi).apply(&v).plus(&v);
        prop_assert!(commutator_apply(&b_dag(k, &phi), &b_dag(l, &psi), &v).norm_f64() < 1e-14);
    }
}
