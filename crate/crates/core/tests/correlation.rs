mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use common::DenseOracle;
use plasmon_core::correlation::{
    ecorr_k_quadrature, ecorr_k_second_order, ecorr_k_trace, ecorr_total, log1p_minus_x,
};
use plasmon_core::spectral::{full_spectrum, OneBodyProblem};
use plasmon_core::{FermiBall, LuneHistogram, Momentum, Potential};
use proptest::prelude::*;

fn coulomb_problem(r2: i64, k: Momentum, g: f64) -> OneBodyProblem {
    let ball = FermiBall::new(r2).unwrap();
    OneBodyProblem::from_potential(&ball, &Potential::coulomb(g).unwrap(), k).unwrap()
}

fn trace(p: &OneBodyProblem) -> f64 {
    ecorr_k_trace(&full_spectrum(p).unwrap(), p).unwrap()
}

#[test]
fn log1p_minus_x_is_accurate_near_zero() {
    for x in [1e-12f64, 1e-6, 1e-3, 0.049, -0.049] {
        // −x²/2 + x³/3 − x⁴/4 + x⁵/5 is within x⁶ of the true value
        let series = -x * x / 2.0 + x.powi(3) / 3.0 - x.powi(4) / 4.0 + x.powi(5) / 5.0;
        let v = log1p_minus_x(x);
        assert!((v - series).abs() <= x.powi(6).abs() + 1e-17 * series.abs(), "x = {x}");
    }
    assert!((log1p_minus_x(3.0) - (4f64.ln() - 3.0)).abs() < 1e-15);
    assert_eq!(log1p_minus_x(0.0), 0.0);
}

#[test]
fn zero_potential_gives_zero() {
    let p = coulomb_problem(4, Momentum::axis(1), 0.0);
    assert_eq!(ecorr_k_quadrature(&p, 1e-10).unwrap(), 0.0);
    assert_eq!(trace(&p), 0.0);
    let r = ecorr_total(&FermiBall::new(9).unwrap(), &Potential::zero(), 3, 1e-10).unwrap();
    assert_eq!(r.total, 0.0);
    assert!(r.per_k.values().all(|&v| v == 0.0));
    assert_eq!(r.tail_estimate, 0.0);
}

#[test]
fn single_level_trace_closed_form() {
    let h = LuneHistogram::from_levels(Momentum::axis(1), [(4, 1)]).unwrap();
    let p = OneBodyProblem::new(h, 100.0).unwrap();
    let (l, w) = (2.0, p.weight_per_mode());
    let want = (l * l + 2.0 * l * w).sqrt() - l - w;
    assert!(want < 0.0);
    assert!((trace(&p) - want).abs() < 1e-15);
    assert!((ecorr_k_quadrature(&p, 1e-13).unwrap() - want).abs() < 1e-12);
}

#[test]
fn unit_lune_routes_agree() {
    let k = Momentum::axis(1);
    let p = coulomb_problem(1, k, 1.0);
    let q = ecorr_k_quadrature(&p, 1e-12).unwrap();
    let t = trace(&p);
    assert!(q < 0.0);
    assert!((q - t).abs() < 1e-8, "{q} vs {t}");
    assert!((t - DenseOracle::new(1, k, 1.0).ecorr()).abs() < 1e-12);
}

#[test]
fn radius_two_routes_agree() {
    let k = Momentum::axis(1);
    let p = coulomb_problem(4, k, 2.0);
    let q = ecorr_k_quadrature(&p, 1e-12).unwrap();
    assert!((q - trace(&p)).abs() < 1e-8);
    assert!((q - DenseOracle::new(4, k, 2.0).ecorr()).abs() < 1e-8);
}

#[test]
fn total_at_radius_twenty_matches_trace_per_k() {
    let ball = FermiBall::new(400).unwrap();
    let v = Potential::coulomb(4.0 * PI).unwrap();
    let r = ecorr_total(&ball, &v, 3, 1e-11).unwrap();
    assert_eq!(r.k_cutoff, 3);
    for k in [Momentum::axis(1), Momentum::axis(2), Momentum::new(1, 2, 2), Momentum::new(0, -3, 0)] {
        let t = trace(&OneBodyProblem::from_potential(&ball, &v, k).unwrap());
        let q = r.per_k[&k];
        assert!((q - t).abs() <= 1e-7 * (1.0 + t.abs()), "{k}: {q} vs {t}");
    }
    assert!(r.per_k.values().all(|&v| v < 0.0));
    assert!(r.tail_estimate < 0.0);
    assert!((r.total - (r.lattice_sum() + r.tail_estimate)).abs() <= 1e-12 * r.total.abs());
}

#[test]
fn total_decreases_with_cutoff() {
    let ball = FermiBall::new(25).unwrap();
    let v = Potential::coulomb(4.0 * PI).unwrap();
    let mut prev = 0.0;
    for kc in 1..=5 {
        let s = ecorr_total(&ball, &v, kc, 1e-11).unwrap().lattice_sum();
        assert!(s <= prev, "cutoff {kc}: {s} > {prev}");
        prev = s;
    }
}

#[test]
fn table_tail_uses_second_order_terms() {
    let ball = FermiBall::new(4).unwrap();
    let mut t = BTreeMap::new();
    for k in [Momentum::axis(1), Momentum::axis(3)] {
        t.insert(k, 0.5);
        t.insert(-k, 0.5);
    }
    let v = Potential::table(t).unwrap();
    let r = ecorr_total(&ball, &v, 2, 1e-12).unwrap();
    let far = ecorr_k_second_order(&OneBodyProblem::from_potential(&ball, &v, Momentum::axis(3)).unwrap());
    assert!((r.tail_estimate - 2.0 * far).abs() < 1e-15);
    let near = trace(&OneBodyProblem::from_potential(&ball, &v, Momentum::axis(1)).unwrap());
    assert!((r.lattice_sum() - 2.0 * near).abs() < 1e-9);
}

#[test]
fn second_order_term_bounds_weak_coupling() {
    // F(x) ≥ −x²/2 for x ≥ 0, and the two agree as g → 0
    let p = coulomb_problem(9, Momentum::new(1, 1, 0), 1e-4);
    let q = trace(&p);
    let s = ecorr_k_second_order(&p);
    assert!(q >= s);
    assert!((q - s).abs() < 1e-3 * s.abs());
}

fn nonzero_k(max: i64) -> impl Strategy<Value = Momentum> {
    (-max..=max, -max..=max, -max..=max)
        .prop_map(|(x, y, z)| Momentum::new(x, y, z))
        .prop_filter("0 < |k| ≤ max", move |k| !k.is_zero() && k.norm_sq() <= max * max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadrature_matches_trace(r2 in 1i64..=400, k in nonzero_k(4), strong in any::<bool>()) {
        let g = if strong { 4.0 * PI } else { 1.0 };
        let p = coulomb_problem(r2, k, g);
        let q = ecorr_k_quadrature(&p, 1e-11).unwrap();
        let t = trace(&p);
        prop_assert!(q <= 0.0 && t <= 0.0);
        prop_assert!((q - t).abs() <= 1e-7 * (1.0 + t.abs()), "{} vs {}", q, t);
    }

    #[test]
    fn stronger_coupling_lowers_the_energy(r2 in 1i64..=100, k in nonzero_k(3), g in 0.1f64..20.0) {
        let a = trace(&coulomb_problem(r2, k, g));
        let b = trace(&coulomb_problem(r2, k, 1.5 * g));
        prop_assert!(b < a);
    }
}
