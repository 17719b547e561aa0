use std::f64::consts::PI;

use neumann_widths::kernel::{EvalPolicy, KernelSpec, NeumannParams};
use neumann_widths::spline::{
    derivative_lemma1, derivative_lemma2, lambda_finite_sum, lemma3_check, verify_cy2n,
    DerivativePath, EigenModes, ShiftPoint,
};
use neumann_widths::thresholds::compute_nq;
use num_complex::Complex64;
use proptest::prelude::*;

fn p(q: f64, beta: f64) -> NeumannParams {
    NeumannParams::new(q, beta).unwrap()
}

fn admissible() -> Vec<(NeumannParams, u32)> {
    let mut out = Vec::new();
    for q in [0.1, 0.2] {
        let nq = compute_nq(q, 1000).unwrap().n as u32;
        for beta in [0.0, 0.5, 1.0, 2.7, -1.3] {
            for n in [nq, nq + 3, nq + 10, nq + 30] {
                out.push((p(q, beta), n));
            }
        }
    }
    out
}

#[test]
fn remainder_bounds_at_extremal_point() {
    for (params, n) in admissible() {
        let q = params.q;
        let u = q.powi(2 * n as i32);
        let shift = ShiftPoint::extremal(params, n).unwrap();
        let (_, ledger) = derivative_lemma2(params, n, &shift, 1).unwrap();
        let tag = format!("q={q} beta={} n={n}", params.beta);
        for j in 0..n as usize {
            let r = ledger.r_abs[j];
            assert!(r <= 0.75 * u / (1.0 - u), "{tag} j={j}: |r_j| = {r:e}");
            assert!(ledger.big_r[j].abs() <= r * (1.0 + 1e-12), "{tag} j={j}: R_j");
        }
        let r0_bound = 8.0 / (9.0 * (n * n) as f64) * q.powi(3 * n as i32) / (1.0 - u);
        assert!(ledger.r_abs[0] <= r0_bound, "{tag}: |r_0| = {:e} > {r0_bound:e}", ledger.r_abs[0]);
        assert_eq!(ledger.r_terms[0][1], Complex64::new(0.0, 0.0));
        let nf = n as f64;
        for (i, d) in ledger.delta.iter().enumerate() {
            let j = (i + 1) as f64;
            let bound = 8.0 * j * (2.0 * nf - j) / (7.0 * (nf - j).powi(2));
            assert!(d.abs() <= bound, "{tag} j={j}: delta = {d:e}");
        }
        for k in 1..=2 * n {
            let (_, l) = derivative_lemma2(params, n, &shift, k).unwrap();
            for j in 0..n as usize {
                assert!(l.z[j].abs() <= 2.0 * l.r_abs[j] * (1.0 + 1e-12), "{tag} k={k} j={j}: z_j");
            }
        }
        let modes = EigenModes::new(params, n, &shift).unwrap();
        assert!(modes.nonvanishing_margin() >= 0.9, "{tag}: margin {}", modes.nonvanishing_margin());
        let report = lemma3_check(params, n, &shift).unwrap();
        assert!(report.holds, "{tag}: {report:?}");
        assert!(report.min_bracket >= 0.0, "{tag}: {report:?}");
    }
}

#[test]
fn ledger_reconstructs_derivative() {
    let params = p(0.3, 0.4);
    let n = 6;
    let shift = ShiftPoint::extremal(params, n).unwrap();
    for k in 1..=2 * n {
        let (v, l) = derivative_lemma2(params, n, &shift, k).unwrap();
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let rebuilt = sign * PI / (4.0 * params.q.powi(n as i32)) * (l.pq * l.sign + l.gamma.iter().sum::<f64>());
        assert!((v - rebuilt).abs() <= 1e-12 * v.abs());
        let v1 = derivative_lemma1(params, n, &shift, k).unwrap();
        assert!((v - v1).abs() <= 1e-12 * v.abs(), "k={k}: {v} vs {v1}");
    }
}

#[test]
fn sign_pattern_is_consistent_with_epsilon() {
    for beta in [0.0, 0.5, 1.0] {
        let params = p(0.2, beta);
        for n in 13..=16 {
            let shift = ShiftPoint::extremal(params, n).unwrap();
            let r = verify_cy2n(params, n, &shift, DerivativePath::Lemma1).unwrap();
            assert!(r.holds);
            let eps = r.epsilon.unwrap();
            for (i, s) in r.pattern.iter().enumerate() {
                let alt = if i % 2 == 0 { 1 } else { -1 };
                assert!(*s == 0 || *s == alt * eps);
            }
        }
    }
    // below the threshold the verdict is informational only
    let params = p(0.5, 1.0);
    let shift = ShiftPoint::extremal(params, 2).unwrap();
    assert!(verify_cy2n(params, 2, &shift, DerivativePath::Direct).is_ok());
}

#[test]
fn general_spec_eigenvalues_match_neumann() {
    let q: f64 = 0.35;
    let general = KernelSpec::new(
        move |k| q.powi(k as i32) / k as f64,
        move |k| q.powi(k as i32 + 1) / ((k + 1) as f64 * (1.0 - q)),
        0.8,
    )
    .unwrap();
    let neumann = KernelSpec::neumann(p(q, 0.8)).unwrap();
    let pol = EvalPolicy::with_tol(1e-15);
    for l in 1..=4 {
        let a = lambda_finite_sum(&general, 4, l, 0.2, &pol).unwrap();
        let b = lambda_finite_sum(&neumann, 4, l, 0.2, &pol).unwrap();
        assert!((a - b).norm() <= 1e-14);
    }
}

proptest! {
    #[test]
    fn eigenvalues_invariant_under_beta_plus_four(q in 0.05f64..0.9, m in -128i32..128, n in 1u32..8, y in 0.0f64..1.0) {
        let beta = m as f64 / 32.0;
        let pol = EvalPolicy::with_tol(1e-15);
        let a = KernelSpec::neumann(p(q, beta)).unwrap();
        let b = KernelSpec::neumann(p(q, beta + 4.0)).unwrap();
        for l in 1..=n {
            let x = lambda_finite_sum(&a, n, l, y, &pol).unwrap();
            let z = lambda_finite_sum(&b, n, l, y, &pol).unwrap();
            prop_assert_eq!(x, z);
        }
    }

    #[test]
    fn middle_eigenvalue_is_real(q in 0.05f64..0.9, beta in -4.0f64..4.0, n in 1u32..10, y in 0.0f64..7.0) {
        let spec = KernelSpec::neumann(p(q, beta)).unwrap();
        let l = lambda_finite_sum(&spec, n, n, y, &EvalPolicy::default()).unwrap();
        prop_assert!(l.im.abs() <= 1e-12);
    }
}
