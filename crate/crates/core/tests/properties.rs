use nalgebra::Matrix3 as NaMatrix;
use proptest::prelude::*;

use pzf::config::{parse_config, serialize_config, RunConfig};
use pzf::equilibria::{all_equilibria, interior_equilibrium};
use pzf::global::{inverse_transform, lozinskii_terms, transform_state};
use pzf::model::{jacobian, rhs, DilutionMode, EffectiveParameters, Matrix3, State};
use pzf::stability::{characteristic_coefficients, classify_equilibrium, cubic_roots, routh_hurwitz, Classification};

fn params() -> impl Strategy<Value = EffectiveParameters> {
    (
        (0.1..2.0f64, 0.01..0.5f64, 0.01..0.5f64, 0.1..5.0f64, 0.1..2.0f64),
        (1.0..20.0f64, 1.0..50.0f64, 1.0..20.0f64, 0.1..1.0f64),
    )
        .prop_map(|((m1, m2, m3, g_s, g_f), (k_p, k_z, k_f, a))| EffectiveParameters {
            m1,
            m2,
            m3,
            g_s,
            g_f,
            k_p,
            k_z,
            k_f,
            a,
        })
}

fn state() -> impl Strategy<Value = State> {
    (0.01..20.0f64, 0.01..20.0f64, 0.01..20.0f64).prop_map(|(p, z, f)| State::new(p, z, f))
}

fn matrix() -> impl Strategy<Value = Matrix3> {
    (prop::array::uniform9(-2.0..2.0f64), -1.5..1.5f64).prop_map(|(e, shift)| {
        let mut m = Matrix3([[e[0], e[1], e[2]], [e[3], e[4], e[5]], [e[6], e[7], e[8]]]);
        for i in 0..3 {
            m.0[i][i] += shift;
        }
        m
    })
}

fn nalgebra_spectrum(m: &Matrix3) -> Vec<num_complex::Complex64> {
    let n = NaMatrix::from_fn(|r, c| m.0[r][c]);
    n.complex_eigenvalues().iter().map(|z| num_complex::Complex64::new(z.re, z.im)).collect()
}

/// Fourth-order central difference of the vector field.
fn fd_jacobian(p: &EffectiveParameters, s: &State) -> Matrix3 {
    let x = s.to_array();
    let mut out = Matrix3::ZERO;
    for j in 0..3 {
        let h = 1e-3 * x[j].abs().max(1.0);
        let at = |k: f64| {
            let mut y = x;
            y[j] += k * h;
            rhs(p, &State::from_array(y))
        };
        let (m2, m1, p1, p2) = (at(-2.0), at(-1.0), at(1.0), at(2.0));
        for i in 0..3 {
            out.0[i][j] = (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn equilibria_have_tiny_residuals(p in params()) {
        for e in all_equilibria(&p) {
            // Near a*gS = m2 the boundary state is huge and infeasible; its
            // residual is then limited by rounding relative to its size.
            let size = e.state.to_array().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            let bound = if e.feasible { 1e-10 } else { 1e-10 * size * size };
            prop_assert!(e.residual < bound, "{:?} residual {:e}", e.kind, e.residual);
        }
    }

    #[test]
    fn interior_is_positive_when_present(p in params()) {
        if let Ok(e) = interior_equilibrium(&p) {
            prop_assert!(e.state.p > 0.0 && e.state.z > 0.0 && e.state.f > 0.0);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences(p in params(), s in state()) {
        let j = jacobian(&p, &s);
        let fd = fd_jacobian(&p, &s);
        let scale = j.max_abs();
        for r in 0..3 {
            for c in 0..3 {
                let rel = (j.0[r][c] - fd.0[r][c]).abs() / j.0[r][c].abs().max(1e-6 * scale);
                prop_assert!(rel < 1e-6, "entry ({r},{c}): {} vs {}", j.0[r][c], fd.0[r][c]);
            }
        }
    }

    #[test]
    fn routh_hurwitz_agrees_with_spectrum(m in matrix()) {
        let spectrum = nalgebra_spectrum(&m);
        prop_assume!(spectrum.iter().all(|l| l.re.abs() > 1e-6));
        let c = characteristic_coefficients(&m);
        let max_re = spectrum.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(routh_hurwitz(c.d1, c.d2, c.d3), max_re < 0.0);
    }

    #[test]
    fn coefficient_identities(m in matrix()) {
        let c = characteristic_coefficients(&m);
        let roots = cubic_roots(&c);
        let sum: num_complex::Complex64 = roots.iter().sum();
        let prod: num_complex::Complex64 = roots.iter().product();
        prop_assert!((c.d1 + sum.re).abs() < 1e-8 && sum.im.abs() < 1e-8);
        prop_assert!((c.d3 + prod.re).abs() < 1e-8 && prod.im.abs() < 1e-8);
        // Each root is a root of the polynomial and an eigenvalue.
        for l in roots {
            prop_assert!(c.eval(l).norm() < 1e-8 * (1.0 + c.scale()));
        }
        let oracle = nalgebra_spectrum(&m);
        for l in roots {
            let nearest = oracle.iter().map(|o| (o - l).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(nearest < 1e-5, "root {l} not in spectrum {oracle:?}");
        }
    }

    #[test]
    fn transform_is_an_involution(s in state()) {
        let back = inverse_transform(&transform_state(&s).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&s) <= 1e-15 * s.p.max(1.0));
        prop_assert_eq!((back.z, back.f), (s.z, s.f));
    }

    #[test]
    fn lozinskii_gamma_is_the_max(p in params(), s in state()) {
        let m = lozinskii_terms(&p, &s).unwrap();
        prop_assert!(m.gamma >= m.l1 && m.gamma >= m.l2);
    }

    #[test]
    fn stable_classification_survives_tiny_perturbation(p in params(), d in prop::array::uniform3(-1e-12..1e-12f64)) {
        let Ok(e) = interior_equilibrium(&p) else { return Ok(()) };
        let r = classify_equilibrium(&p, &e).unwrap();
        prop_assume!(r.margin.abs() > 1e-6 && r.d1.abs() > 1e-6 && r.d3.abs() > 1e-6);
        let mut moved = e.clone();
        moved.state = State::new(e.state.p + d[0], e.state.z + d[1], e.state.f + d[2]);
        prop_assert_eq!(classify_equilibrium(&p, &moved).unwrap().classification, r.classification);
    }

    #[test]
    fn config_round_trip(
        su in 0.0..8.0f64,
        m1 in 0.1..2.0f64,
        gs in prop::option::of(0.1..5.0f64),
        dt in 0.001..0.1f64,
        every in 1usize..50,
        mode in prop::sample::select(DilutionMode::ALL.to_vec()),
    ) {
        let text = format!(
            "su = {su:?}\nm1 = {m1}\ngs_override = {}\ndt = {dt:e}\nsample_every = {every}\ndelta_mode = {mode}\n",
            gs.map_or("none".to_string(), |g| g.to_string()),
        );
        let cfg = parse_config(&text).unwrap();
        prop_assert_eq!(parse_config(&serialize_config(&cfg)).unwrap(), cfg);
    }
}

#[test]
fn default_config_round_trips() {
    let cfg = RunConfig::default();
    assert_eq!(parse_config(&serialize_config(&cfg)).unwrap(), cfg);
}

#[test]
fn marginal_rotation() {
    let m = Matrix3([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]]);
    let c = characteristic_coefficients(&m);
    assert!(c.margin().abs() < 1e-15);
    assert!(!routh_hurwitz(c.d1, c.d2, c.d3));
    assert_eq!(pzf::stability::stability_of_matrix(&m).classification, Classification::Marginal);
}
