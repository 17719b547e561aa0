//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use neumann_widths::cvd::{det_d, known_witnesses, NeumannKernel};
use neumann_widths::kernel::{eval_pq, pq_lower_bound, EvalPolicy, KernelSpec, NeumannParams};
use neumann_widths::oracles::{nq_direct, supnorm_phi, OracleConfig};
use neumann_widths::spline::{
    derivatives_lemma1, derivative_lemma2, lambda_finite_sum, lambda_fourier, lambda_fourier_raw,
    lemma3_check, solve_fundamental_spline, verify_cy2n, DerivativePath, ShiftPoint,
};
use neumann_widths::thresholds::{compute_nq, gamma_sum_bound};
use neumann_widths::widths::{exact_width, solve_theta};
use neumann_widths::Error;

type Outcome = Result<String, String>;

fn params(q: f64, beta: f64) -> NeumannParams {
    NeumannParams::new(q, beta).unwrap()
}

fn cvd_counterexample() -> Outcome {
    let (neg, pos) = known_witnesses();
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for (beta, lo, hi) in [(0.0, -2.74e-10, 1.09e-6), (1.0, -2.26e-8, 2.09e-6)] {
        let k = NeumannKernel::new(params(0.21, beta)).unwrap();
        let a = det_d(&k, &neg, 1);
        let b = det_d(&k, &pos, 1);
        lines.push(format!("beta={beta}: D3 = {:.6e}, {:.6e}", a.det, b.det));
        if !(a.det < lo) {
            failures.push(format!("beta={beta}: D3(x1,y1) = {:.6e} is not < {lo:e}", a.det));
        }
        if !(b.det > hi) {
            failures.push(format!("beta={beta}: D3(x2,y2) = {:.6e} is not > {hi:e}", b.det));
        }
        for r in [a, b] {
            if !(r.error_estimate < 0.1 * r.det.abs()) {
                failures.push(format!("beta={beta}: error estimate {:.2e} vs det {:.2e}", r.error_estimate, r.det));
            }
        }
    }
    if failures.is_empty() {
        Ok(lines.join("; "))
    } else {
        Err(failures.join("; "))
    }
}

fn trivial_roots() -> Outcome {
    let mut count = 0;
    for beta in [0.0, 1.0, 2.0, 3.0, 4.0, -1.0] {
        let expected = if (beta as i64).rem_euclid(2) == 0 { 0.5 } else { 0.0 };
        for q in [0.1, 0.5, 0.9] {
            for n in [1, 2, 10] {
                let r = solve_theta(params(q, beta), n).map_err(|e| e.to_string())?;
                if (r.theta - expected).abs() > 1e-12 {
                    return Err(format!("q={q} beta={beta} n={n}: theta = {}", r.theta));
                }
                count += 1;
            }
        }
    }
    Ok(format!("{count} roots exact"))
}

const GRID_Q: [f64; 4] = [0.1, 0.3, 0.5, 0.8];
const GRID_BETA: [f64; 5] = [0.0, 0.5, 1.0, 1.7, 3.2];
const GRID_N: [u32; 5] = [1, 2, 5, 10, 25];

fn width_oracle() -> Outcome {
    let cfg = OracleConfig::default();
    let mut worst: f64 = 0.0;
    for q in GRID_Q {
        for beta in GRID_BETA {
            for n in GRID_N {
                let p = params(q, beta);
                let w = exact_width(p, n).map_err(|e| e.to_string())?;
                let s = supnorm_phi(p, n, &cfg).map_err(|e| e.to_string())?;
                let d = (w.width - s.value).abs();
                worst = worst.max(d);
                if d > 1e-10 {
                    return Err(format!("q={q} beta={beta} n={n}: |width - oracle| = {d:e}"));
                }
            }
        }
    }
    Ok(format!("max delta {worst:.2e}"))
}

fn sandwich() -> Outcome {
    let mut worst_gamma: f64 = 0.0;
    for q in GRID_Q {
        for beta in GRID_BETA {
            for n in GRID_N {
                let w = exact_width(params(q, beta), n).map_err(|e| e.to_string())?;
                let qn_n = q.powi(n as i32) / n as f64;
                let u = q.powi(2 * n as i32);
                let m = 4.0 / 9.0 * u / (1.0 - u);
                // when q^{2n} is below one ulp the two ends coincide in floating point
                let scaled = PI / 4.0 * w.width;
                let slack = 8.0 * f64::EPSILON;
                let inside = scaled >= qn_n * (1.0 - m) * (1.0 - slack) && scaled <= qn_n * (1.0 + m) * (1.0 + slack);
                if !inside || !w.sandwich_holds || w.gamma_n.abs() > 16.0 / (9.0 * PI) {
                    return Err(format!("q={q} beta={beta} n={n}: width {} gamma {}", w.width, w.gamma_n));
                }
                worst_gamma = worst_gamma.max(w.gamma_n.abs());
            }
        }
    }
    Ok(format!("max |gamma_n| {worst_gamma:.4}, bound {:.4}", 16.0 / (9.0 * PI)))
}

fn small_grid() -> Vec<(NeumannParams, u32, f64)> {
    let mut out = Vec::new();
    for q in [0.2, 0.5] {
        for beta in [0.0, 1.0, 0.3] {
            for n in 2..=8u32 {
                let p = params(q, beta);
                let y0 = solve_theta(p, n).unwrap().y0();
                for y in [0.0, y0, 0.3 * PI / n as f64] {
                    out.push((p, n, y));
                }
            }
        }
    }
    out
}

fn shift_for(p: NeumannParams, n: u32, y: f64) -> ShiftPoint {
    let root = solve_theta(p, n).unwrap();
    if y == root.y0() {
        ShiftPoint::from_root(&root)
    } else {
        ShiftPoint::new(p, n, y)
    }
}

fn eigen_paths() -> Outcome {
    let policy = EvalPolicy::with_tol(1e-16);
    let mut worst: f64 = 0.0;
    let mut worst_im: f64 = 0.0;
    let mut degenerate = 0;
    for (p, n, y) in small_grid() {
        let spec = KernelSpec::neumann(p).unwrap();
        for j in 0..n {
            let a = lambda_finite_sum(&spec, n, n - j, y, &policy).map_err(|e| e.to_string())?;
            let b = match lambda_fourier(p, n, j, y) {
                Ok(b) => b,
                Err(Error::SignDegenerate { .. }) => {
                    degenerate += 1;
                    lambda_fourier_raw(p, n, n - j, y).map_err(|e| e.to_string())?
                }
                Err(e) => return Err(e.to_string()),
            };
            let d = (a - b).norm();
            worst = worst.max(d);
            if d > 1e-11 {
                return Err(format!("q={} beta={} n={n} y={y} j={j}: |diff| = {d:e}", p.q, p.beta));
            }
            if j == 0 {
                worst_im = worst_im.max(a.im.abs());
                if a.im.abs() > 1e-12 {
                    return Err(format!("q={} beta={} n={n} y={y}: Im lambda_n = {:e}", p.q, p.beta, a.im));
                }
            }
        }
    }
    Ok(format!(
        "max |diff| {worst:.2e}, max |Im lambda_n| {worst_im:.2e}, {degenerate} modes at sin p = 0 via undecomposed series"
    ))
}

fn spline_paths() -> Outcome {
    let mut worst_rel: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    let mut skipped = 0;
    let mut singular = 0;
    for (p, n, y) in small_grid() {
        let spec = KernelSpec::neumann(p).unwrap();
        let direct = match solve_fundamental_spline(&spec, n, y) {
            Ok(d) => d,
            Err(Error::SingularSystem { .. }) => {
                // no fundamental spline exists exactly when some lambda_l(y) vanishes
                let lams: Vec<f64> = (1..=n)
                    .map(|l| lambda_fourier_raw(p, n, l, y).unwrap().norm())
                    .collect();
                let big = lams.iter().fold(0.0f64, |m, v| m.max(*v));
                let small = lams.iter().fold(f64::INFINITY, |m, v| m.min(*v));
                if small > 1e-13 * big {
                    return Err(format!("q={} beta={} n={n} y={y}: singular with min |lambda| {small:e}", p.q, p.beta));
                }
                singular += 1;
                continue;
            }
            Err(e) => return Err(e.to_string()),
        };
        worst_res = worst_res.max(direct.residual);
        if direct.residual > 1e-10 {
            return Err(format!("q={} beta={} n={n} y={y}: residual {:e}", p.q, p.beta, direct.residual));
        }
        let shift = shift_for(p, n, y);
        let l1 = match derivatives_lemma1(p, n, &shift) {
            Ok(v) => v,
            Err(Error::SignDegenerate { .. }) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e.to_string()),
        };
        let l2: Vec<f64> = (1..=2 * n)
            .map(|k| derivative_lemma2(p, n, &shift, k).map(|(v, _)| v))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let scale = direct.midpoint_derivs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..2 * n as usize {
            let d = direct.midpoint_derivs[k];
            let rel = ((d - l1[k]).abs()).max((d - l2[k]).abs()) / scale;
            worst_rel = worst_rel.max(rel);
            if rel > 1e-9 {
                return Err(format!(
                    "q={} beta={} n={n} y={y} k={}: direct {d}, lemma1 {}, lemma2 {}",
                    p.q, p.beta, k + 1, l1[k], l2[k]
                ));
            }
        }
    }
    Ok(format!(
        "max relative {worst_rel:.2e}, max residual {worst_res:.2e}, {singular} configurations with a vanishing eigenvalue, {skipped} at sin p = 0 checked by direct solve only"
    ))
}

fn lemma3() -> Outcome {
    let q = 0.2;
    let nq = compute_nq(q, 1000).map_err(|e| e.to_string())?.n as u32;
    let mut worst: f64 = 0.0;
    for beta in [0.0, 0.5, 1.0] {
        for n in nq..=nq + 27 {
            let p = params(q, beta);
            let shift = ShiftPoint::extremal(p, n).map_err(|e| e.to_string())?;
            let r = lemma3_check(p, n, &shift).map_err(|e| e.to_string())?;
            let bound = gamma_sum_bound(q, n as u64);
            worst = worst.max(r.lhs / bound);
            if !(r.holds && r.lhs <= bound) {
                return Err(format!("beta={beta} n={n}: sum |gamma| = {:e} > {bound:e}", r.lhs));
            }
        }
    }
    Ok(format!("n = {nq}..{}, worst ratio to bound {worst:.3e}", nq + 27))
}

fn cy2n() -> Outcome {
    let q = 0.2;
    let nq = compute_nq(q, 1000).map_err(|e| e.to_string())?.n as u32;
    for beta in [0.0, 1.0, 0.5] {
        for n in nq..=nq + 7 {
            let p = params(q, beta);
            let shift = ShiftPoint::extremal(p, n).map_err(|e| e.to_string())?;
            for path in [DerivativePath::Direct, DerivativePath::Lemma1, DerivativePath::Lemma2] {
                let r = verify_cy2n(p, n, &shift, path).map_err(|e| e.to_string())?;
                if !r.holds {
                    return Err(format!("beta={beta} n={n} path={path:?}: pattern {:?}", r.pattern));
                }
            }
        }
    }
    Ok(format!("n = {nq}..{} on all three derivative paths", nq + 7))
}

fn thresholds() -> Outcome {
    let mut lines = Vec::new();
    for (q, expected) in [(0.2, 13), (0.5, 1717)] {
        let oracle = nq_direct(q, 100_000).ok_or(format!("oracle found no n_q for q={q}"))?;
        let lib = compute_nq(q, 100_000).map_err(|e| e.to_string())?.n;
        if oracle != lib || lib != expected {
            return Err(format!("q={q}: oracle {oracle}, library {lib}, pinned {expected}"));
        }
        lines.push(format!("n_q({q}) = {lib}"));
    }
    Ok(lines.join(", "))
}

fn pq_bound() -> Outcome {
    let policy = EvalPolicy::default();
    let mut worst = f64::INFINITY;
    for i in 1..=9 {
        let q = i as f64 / 10.0;
        let lb = pq_lower_bound(q);
        for k in 0..1000 {
            let t = 2.0 * PI * k as f64 / 1000.0;
            let v = eval_pq(q, t, &policy).map_err(|e| e.to_string())?;
            worst = worst.min(v - lb);
            if v < lb {
                return Err(format!("q={q} t={t}: P_q = {v} < {lb}"));
            }
        }
    }
    Ok(format!("min margin {worst:.3e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("CVD counterexample determinants", cvd_counterexample),
        ("trivial theta roots", trivial_roots),
        ("width matches sup-norm oracle", width_oracle),
        ("width sandwich and gamma bound", sandwich),
        ("eigenvalue path equivalence", eigen_paths),
        ("spline derivative path equivalence", spline_paths),
        ("gamma-sum bound", lemma3),
        ("alternating-sign condition at y0", cy2n),
        ("threshold regression", thresholds),
        ("P_q lower bound", pq_bound),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name} ({secs:.2}s) {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name} ({secs:.2}s) {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
