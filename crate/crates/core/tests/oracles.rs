//! Worked examples checked against closed forms and direct integration.

use approx::assert_abs_diff_eq;
use liesys::group::{
    linear_action, oscillator_algebra_curve, particular_solution_curve, pinney_action, reduce_oscillator,
    reduce_pinney_from_oscillator, reduce_pinney_from_pinney, sl2_exp, solve_group_equation, tau_reparametrization,
    tau_series, ReductionParameters,
};
use liesys::integrate::{integrate, IntegrationError};
use liesys::invariants::ermakov_pair_invariants;
use liesys::superposition::{keys_from, linear_rule, pinney_rule, pinney_rule_from_solutions, quadrature_series, PinneyBranch};
use liesys::systems::{milne_pinney, oscillator_1d, pinney_triple, SystemDef};
use liesys::verify::{normwise_rel_error, pointwise_rel_error, resample};
use liesys::{FrequencyProfile, IntegrateOptions, Sl2Matrix, Sl2Vector, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn opts(tol: f64) -> IntegrateOptions {
    IntegrateOptions::with_tol(tol, tol)
}

fn unit() -> FrequencyProfile {
    FrequencyProfile::constant(1.0)
}

fn cosine(span: (f64, f64)) -> Trajectory {
    oscillator_1d(unit()).integrate(&[1.0, 0.0], span, &opts(1e-12)).unwrap()
}

/// Largest relative gap in (x, v) between `tr` and a fresh solve of `sys` from `tr`'s first sample.
fn gap_to_direct(tr: &Trajectory, sys: &SystemDef) -> f64 {
    let direct = sys.integrate(&tr.states()[0], (tr.start(), tr.end()), &opts(1e-11)).unwrap();
    tr.times()
        .iter()
        .zip(tr.states())
        .map(|(t, s)| {
            let d = direct.dense(*t).unwrap();
            ((s[0] - d[0]).abs() + (s[1] - d[1]).abs()) / (1.0 + d[0].abs() + d[1].abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn pinney_equilibrium_is_constant() {
    let tr = milne_pinney(unit(), 1.0).integrate(&[1.0, 0.0], (0.0, 10.0), &opts(1e-10)).unwrap();
    for s in tr.states() {
        assert_abs_diff_eq!(s[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s[1], 0.0, epsilon = 1e-12);
    }
}

#[test]
fn attractive_pinney_collapse_reports_last_good_time() {
    let err = milne_pinney(unit(), -1.0)
        .integrate(&[0.5, 0.0], (0.0, 5.0), &opts(1e-10))
        .unwrap_err();
    assert!(matches!(err, IntegrationError::Singularity { .. }), "{err}");
    let t = err.last_good_time().unwrap();
    assert!(t > 0.0 && t < 1.0, "{t}");
}

#[test]
fn constant_group_curve_is_the_exponential() {
    let v = Sl2Vector::new(0.4, -1.3, 0.7);
    let tol = 1e-10;
    let g = solve_group_equation(|_| v, (0.0, 3.0), tol).unwrap();
    for t in [0.5, 1.7, 3.0] {
        let diff = g.at(t).unwrap().max_abs_diff(&sl2_exp(v, t));
        assert!(diff < 10.0 * tol, "{t}: {diff}");
    }
}

#[test]
fn group_solution_carries_cosine() {
    let g = solve_group_equation(oscillator_algebra_curve(&unit()), (0.0, 20.0), 1e-10).unwrap();
    assert!(g.max_det_drift() < 1e-9, "{}", g.max_det_drift());
    for t in [0.0f64, 1.0, 4.4, 9.9] {
        let (x, v) = linear_action(&g.at(t).unwrap(), (1.0, 0.0));
        assert_abs_diff_eq!(x, t.cos(), epsilon = 1e-8);
        assert_abs_diff_eq!(v, -t.sin(), epsilon = 1e-8);
    }
}

#[test]
fn exponential_agrees_with_matrix_ode() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let v = Sl2Vector::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let s: f64 = rng.random_range(-2.0..2.0);
        let m = v.matrix();
        let tr = integrate(
            |_, g, dg| {
                dg[0] = m[0][0] * g[0] + m[0][1] * g[2];
                dg[1] = m[0][0] * g[1] + m[0][1] * g[3];
                dg[2] = m[1][0] * g[0] + m[1][1] * g[2];
                dg[3] = m[1][0] * g[1] + m[1][1] * g[3];
                Ok(())
            },
            &[1.0, 0.0, 0.0, 1.0],
            (0.0, s),
            &opts(1e-13),
        )
        .unwrap();
        let f = tr.final_state();
        let numeric = Sl2Matrix::new(f[0], f[1], f[2], f[3]);
        let diff = numeric.max_abs_diff(&sl2_exp(v, s));
        assert!(diff < 1e-9, "{v:?} s = {s}: {diff}");
    }
}

#[test]
fn tau_examples() {
    let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
    let one = Trajectory::new(times.clone(), vec![vec![1.0, 0.0]; 11], vec![vec![0.0, 0.0]; 11]).unwrap();
    assert_abs_diff_eq!(tau_reparametrization(&one, 2.2).unwrap(), 2.2, epsilon = 1e-12);

    let x1 = cosine((0.0, 1.2));
    assert_abs_diff_eq!(tau_reparametrization(&x1, 1.2).unwrap(), 1.2f64.tan(), epsilon = 1e-9);
    let tau = tau_series(&x1).unwrap();
    assert!(tau.windows(2).all(|w| w[1] > w[0]));
    assert_abs_diff_eq!(*tau.last().unwrap(), 1.2f64.tan(), epsilon = 1e-9);

    // cos t vanishes at π/2.
    assert!(tau_series(&cosine((0.0, 2.0))).is_err());
}

#[test]
fn particular_curve_maps_base_point() {
    let x1 = milne_pinney(FrequencyProfile::two_plus_sine(), 1.0)
        .integrate(&[1.3, -0.2], (0.0, 4.0), &opts(1e-10))
        .unwrap();
    let curve = particular_solution_curve(&x1).unwrap();
    for (t, s) in x1.times().iter().zip(x1.states()) {
        let g = curve.at(*t).unwrap();
        assert_eq!(linear_action(&g, (1.0, 0.0)), (s[0], s[1]));
        assert_abs_diff_eq!(g.det(), 1.0, epsilon = 1e-15);
    }
}

#[test]
fn oscillator_reduction_examples() {
    let x1 = cosine((0.0, 1.2));
    let r = reduce_oscillator(&x1, 0.0, 1.0).unwrap();
    for (t, x) in r.trajectory.times().iter().zip(&r.closed_form) {
        assert_abs_diff_eq!(*x, t.sin(), epsilon = 1e-8);
    }
    assert!(r.route_mismatch() < 1e-8);

    let r = reduce_oscillator(&x1, 0.7, 0.0).unwrap();
    for (s, x) in x1.states().iter().zip(&r.closed_form) {
        assert_abs_diff_eq!(*x, 0.7 * s[0], epsilon = 1e-15);
    }
}

#[test]
fn oscillator_reduction_matches_integration() {
    let omega = FrequencyProfile::two_plus_sine();
    let osc = oscillator_1d(omega.clone());
    let x1 = osc.integrate(&[1.0, 0.0], (0.0, 0.8), &opts(1e-10)).unwrap();
    let r = reduce_oscillator(&x1, 0.4, -1.1).unwrap();
    let direct = osc.integrate(r.trajectory.initial_state(), (0.0, 0.8), &opts(1e-10)).unwrap();
    let reference = resample(&direct, r.trajectory.times(), 0).unwrap();
    assert!(normwise_rel_error(&r.closed_form, &reference) < 1e-6);
    assert!(gap_to_direct(&r.trajectory, &osc) < 1e-7);
}

#[test]
fn quadrature_series_solves_oscillator() {
    let omega = FrequencyProfile::two_plus_sine();
    let x1 = oscillator_1d(omega.clone()).integrate(&[1.0, 0.2], (0.0, 0.9), &opts(1e-10)).unwrap();
    let x2 = quadrature_series(&x1, 0.3, 1.0).unwrap();
    assert!(gap_to_direct(&x2, &oscillator_1d(omega)) < 1e-7);
    // k = 0 only rescales.
    let x3 = quadrature_series(&x1, 2.0, 0.0).unwrap();
    for (a, b) in x3.states().iter().zip(x1.states()) {
        assert_eq!(a[0], 2.0 * b[0]);
    }
}

#[test]
fn pinney_from_oscillator_examples() {
    let x1 = cosine((0.0, 1.2));
    let r = reduce_pinney_from_oscillator(&x1, 1.0, 0.0, 1.0).unwrap();
    assert_eq!(r.parameters, Some(ReductionParameters { a: 1.0, b: 0.0 }));
    for x in &r.closed_form {
        assert_abs_diff_eq!(*x, 1.0, epsilon = 1e-8);
    }

    // τ = 0 gives x₁(0)·A.
    let r = reduce_pinney_from_oscillator(&x1, 1.7, -0.4, 1.0).unwrap();
    let a = r.parameters.unwrap().a;
    assert_abs_diff_eq!(r.closed_form[0], x1.states()[0][0] * a, epsilon = 1e-14);
    assert_abs_diff_eq!(r.trajectory.states()[0][1], -0.4, epsilon = 1e-14);
}

#[test]
fn pinney_self_reduction_examples() {
    let x1 = milne_pinney(unit(), 1.0).integrate(&[1.0, 0.0], (0.0, 5.0), &opts(1e-12)).unwrap();
    let r = reduce_pinney_from_pinney(&x1, 1.0, 0.0, 1.0).unwrap();
    for x in &r.closed_form {
        assert_abs_diff_eq!(*x, 1.0, epsilon = 1e-8);
    }
    assert!(reduce_pinney_from_pinney(&x1, 1.0, 0.0, 0.0).is_err());
}

/// The cosine coefficient carries `kA²`. Writing `A²` there instead agrees
/// at k = 1 only; at k = 2 that variant misses the integrated solution.
#[test]
fn pinney_self_reduction_coefficient() {
    let k = 2.0;
    let mp = milne_pinney(unit(), k);
    let x1 = mp.integrate(&[1.1, 0.4], (0.0, 5.0), &opts(1e-10)).unwrap();
    let (x0, v0) = (0.8, -0.3);
    let r = reduce_pinney_from_pinney(&x1, x0, v0, k).unwrap();
    let direct = mp.integrate(&[x0, v0], (0.0, 5.0), &opts(1e-10)).unwrap();
    let reference = resample(&direct, r.trajectory.times(), 0).unwrap();
    assert!(pointwise_rel_error(&r.closed_form, &reference) < 1e-6);
    assert!(gap_to_direct(&r.trajectory, &mp) < 1e-6);

    let ReductionParameters { a, b } = r.parameters.unwrap();
    let sk = k.sqrt();
    let variant: Vec<f64> = x1
        .states()
        .iter()
        .zip(&r.tau)
        .map(|(s, tau)| {
            let (c, sn) = ((2.0 * sk * tau).cos(), (2.0 * sk * tau).sin());
            let bracket = k * a * a + b * b + k / (a * a) + (a * a - b * b - k / (a * a)) * c + 2.0 * sk * a * b * sn;
            (s[0] * s[0] * bracket / (2.0 * k)).max(0.0).sqrt()
        })
        .collect();
    assert!(pointwise_rel_error(&variant, &reference) > 1e-2);
}

#[test]
fn linear_keys_are_constant() {
    let osc = oscillator_1d(FrequencyProfile::two_plus_sine());
    let o = opts(1e-12);
    let a = osc.integrate(&[1.0, 0.0], (0.0, 10.0), &o).unwrap();
    let b = osc.integrate(&[0.3, 1.0], (0.0, 10.0), &o).unwrap();
    let c = osc.integrate(&[-0.6, 0.8], (0.0, 10.0), &o).unwrap();
    for pick in [0, 1] {
        let mut keys = Vec::new();
        for (t, s) in c.times().iter().zip(c.states()) {
            let (p, q) = (a.dense(*t).unwrap(), b.dense(*t).unwrap());
            let k = keys_from(s[0], s[1], p[0], p[1], q[0], q[1]);
            keys.push(if pick == 0 { k.0 } else { k.1 });
        }
        let k0 = keys[0];
        let rel = keys.iter().map(|k| (k - k0).abs()).fold(0.0, f64::max) / k0.abs().max(1.0);
        assert!(rel < 1e-8, "{rel}");
    }
    let (x, v) = linear_rule(1.0, 0.0, 0.3, 1.0, 0.2, 0.5).unwrap();
    assert_abs_diff_eq!(x, 0.2 + 0.5 * 0.3, epsilon = 1e-15);
    assert_abs_diff_eq!(v, 0.5, epsilon = 1e-15);
}

#[test]
fn pinney_rule_reproduces_integrated_triple() {
    let omega = FrequencyProfile::two_plus_sine();
    let tr = pinney_triple(omega, 1.0)
        .integrate(&[1.2, 0.5, -0.7, 0.1, 0.9, 0.4], (0.0, 10.0), &opts(1e-10))
        .unwrap();
    let inv = ermakov_pair_invariants(tr.initial_state(), 1.0).unwrap();
    let s0 = tr.initial_state();
    let branch = [PinneyBranch::Plus, PinneyBranch::Minus]
        .into_iter()
        .min_by(|p, q| {
            let e = |b| (pinney_rule(s0[1], s0[2], inv, 1.0, b).unwrap().magnitude() - s0[0]).abs();
            e(*p).total_cmp(&e(*q))
        })
        .unwrap();
    for s in tr.states() {
        let x = pinney_rule(s[1], s[2], inv, 1.0, branch).unwrap().magnitude();
        assert!((x - s[0]).abs() / s[0] < 1e-5, "{x} vs {}", s[0]);
    }
}

#[test]
fn pinney_rule_from_solutions_solves_the_equation() {
    let omega = FrequencyProfile::two_plus_sine();
    let osc = oscillator_1d(omega.clone());
    let o = opts(1e-10);
    let y = osc.integrate(&[1.0, 0.0], (0.0, 10.0), &o).unwrap();
    let z = osc.integrate(&[0.0, 1.0], (0.0, 10.0), &o).unwrap();
    let x = pinney_rule_from_solutions(&y, &z, 0.9, -0.6, 1.0).unwrap();
    assert!(gap_to_direct(&x, &milne_pinney(omega, 1.0)) < 1e-6);
    assert_abs_diff_eq!(x.states()[0][0], 0.9, epsilon = 1e-14);
    assert_abs_diff_eq!(x.states()[0][1], -0.6, epsilon = 1e-12);
}

#[test]
fn pinney_rule_small_k_approaches_linear_combination() {
    let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    let sample = |f: fn(f64) -> [f64; 4]| {
        let rows: Vec<[f64; 4]> = times.iter().map(|&t| f(t)).collect();
        Trajectory::new(
            times.clone(),
            rows.iter().map(|r| vec![r[0], r[1]]).collect(),
            rows.iter().map(|r| vec![r[2], r[3]]).collect(),
        )
        .unwrap()
    };
    let y = sample(|t| [t.cos(), -t.sin(), -t.sin(), -t.cos()]);
    let z = sample(|t| [t.sin(), t.cos(), t.cos(), -t.sin()]);
    let (x0, v0) = (1.0, 0.2);
    let x = pinney_rule_from_solutions(&y, &z, x0, v0, 1e-12).unwrap();
    let (k1, k2) = keys_from(x0, v0, 1.0, 0.0, 0.0, 1.0);
    for (i, s) in x.states().iter().enumerate() {
        let (a, b) = (&y.states()[i], &z.states()[i]);
        let (lin, _) = linear_rule(a[0], a[1], b[0], b[1], k1, k2).unwrap();
        assert_abs_diff_eq!(s[0], lin, epsilon = 1e-6);
    }
}

#[test]
fn pinney_action_examples() {
    let img = pinney_action(&Sl2Matrix::IDENTITY, (2.0, 3.0), 1.0).unwrap();
    assert_abs_diff_eq!(img.x_bar, 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(img.v_bar_magnitude, 3.0, epsilon = 1e-12);
}
