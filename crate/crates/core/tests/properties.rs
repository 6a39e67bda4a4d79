use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use magtorus::atlas::{predict, rational_rank};
use magtorus::dynamics::{momentum_bound, vector_field};
use magtorus::field::transport;
use magtorus::io::{real, to_canonical_json};
use magtorus::loopspace::{action, gradient, FourierLoop};
use magtorus::torus::{lift, wrap};
use magtorus::trig::{Mode2, TrigPoly2};
use magtorus::{certify_nonresonance, MagneticField, PhasePoint, Potential, TorusLoop};

fn wave_field(c0: f64, amp: f64, m: i32, n: i32) -> MagneticField {
    MagneticField::new(vec![TrigPoly2::new(c0, vec![Mode2 { m, n, c_cos: amp, c_sin: 0.3 * amp }]).unwrap()]).unwrap()
}

/// Loops `t -> x0 + t h + sum_k (u_k cos + v_k sin)(2 pi k t)` with three modes.
fn loop_strategy() -> impl Strategy<Value = ([f64; 2], [i64; 2], Vec<[f64; 4]>)> {
    (
        [0.0..1.0f64, 0.0..1.0f64],
        [-3i64..=3, -3i64..=3],
        prop::collection::vec([-0.05..0.05f64, -0.05..0.05f64, -0.05..0.05f64, -0.05..0.05f64], 3),
    )
}

fn eval_loop(x0: [f64; 2], h: [i64; 2], modes: &[[f64; 4]], t: f64) -> Vec<f64> {
    let mut x = vec![x0[0] + t * h[0] as f64, x0[1] + t * h[1] as f64];
    for (k, md) in modes.iter().enumerate() {
        let (s, c) = (TAU * (k + 1) as f64 * t).sin_cos();
        x[0] += md[0] * c + md[1] * s;
        x[1] += md[2] * c + md[3] * s;
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lift_recovers_winding_and_samples((x0, h, modes) in loop_strategy()) {
        let lp = TorusLoop::from_fn(1.0, 64, |t| eval_loop(x0, h, &modes, t)).unwrap();
        prop_assert_eq!(lp.winding(), &h[..]);
        let lifted = lift(&lp).unwrap();
        for (l, s) in lifted.iter().zip(lp.samples()) {
            prop_assert!(wrap(l).distance(s) < 1e-12);
        }
        let start = eval_loop(x0, h, &modes, 0.0);
        let shift: Vec<f64> = (0..2).map(|c| (lifted[0][c] - start[c]).round()).collect();
        for (i, l) in lifted.iter().enumerate() {
            let exact = eval_loop(x0, h, &modes, i as f64 / 64.0);
            for c in 0..2 {
                prop_assert!((l[c] - exact[c] - shift[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transport_is_orthogonal_and_bounded_away_from_identity(
        (x0, h, modes) in loop_strategy(),
        c0 in 6.5..12.0f64,
        amp in 0.0..0.2f64,
        v in [-1.0..1.0f64, -1.0..1.0f64],
    ) {
        let field = wave_field(c0, amp, 1, 1);
        let Ok(cert) = certify_nonresonance(&field, 1.0) else { return Ok(()) };
        let lp = TorusLoop::from_fn(1.0, 64, |t| eval_loop(x0, h, &modes, t)).unwrap();
        let f = transport(&field, &lp, 1.0).unwrap();
        prop_assert!((f.transpose() * &f - DMatrix::identity(2, 2)).norm() < 1e-12);
        prop_assert!((transport(&field, &lp, 0.0).unwrap() - DMatrix::identity(2, 2)).norm() < 1e-15);
        let v = DVector::from_column_slice(&v);
        prop_assume!(v.norm() > 1e-3);
        let gap = ((&f - DMatrix::identity(2, 2)) * &v).norm();
        prop_assert!(gap >= cert.epsilon * (1.0 - 1e-6) * v.norm());
    }

    #[test]
    fn constant_field_transport_rotates_by_a_t(a in -20.0..20.0f64, t in 0.0..1.0f64, (x0, h, modes) in loop_strategy()) {
        let lp = TorusLoop::from_fn(1.0, 64, |s| eval_loop(x0, h, &modes, s)).unwrap();
        let f = transport(&MagneticField::constant(&[a]), &lp, t).unwrap();
        let (s, c) = (a * t).sin_cos();
        // rotation of the plane by angle a t in the sense of j = [[0, -1], [1, 0]]
        let want = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        prop_assert!((f - want).norm() < 1e-10);
    }

    #[test]
    fn fourier_action_formula(a in -15.0..15.0f64, coeffs in prop::collection::vec(-0.3..0.3f64, 14), base in [0.0..1.0f64, 0.0..1.0f64]) {
        let k = 3usize;
        let mut c = coeffs;
        c[2 * k] = base[0];
        c[2 * k + 1] = base[1];
        let lp = FourierLoop::new(1.0, k, vec![0, 0], c).unwrap();
        let s = action(&MagneticField::constant(&[a]), &Potential::zero(2, 1.0), &lp).unwrap().total;
        let formula: f64 = (-(k as i64)..=k as i64)
            .map(|j| {
                let n2: f64 = lp.mode(j).iter().map(|x| x * x).sum();
                (2.0 * PI * PI * (j * j) as f64 - a * PI * j as f64) * n2
            })
            .sum();
        prop_assert!((s - formula).abs() < 1e-9 * (1.0 + formula.abs()));
    }

    #[test]
    fn gradient_matches_central_differences(
        coeffs in prop::collection::vec(-0.05..0.05f64, 10),
        xi in prop::collection::vec(-1.0..1.0f64, 10),
        c0 in 2.0..12.0f64,
        amp in 0.0..0.5f64,
        vamp in 0.0..0.1f64,
    ) {
        let field = wave_field(c0, amp, 1, 0);
        let v = Potential::cosine_sum(2, 1.0, vamp);
        let lp = FourierLoop::new(1.0, 2, vec![0, 0], coeffs).unwrap();
        let g = gradient(&field, &v, &lp).unwrap();
        let h = 1e-5;
        let fd = (action(&field, &v, &lp.axpy(h, &xi)).unwrap().total - action(&field, &v, &lp.axpy(-h, &xi)).unwrap().total) / (2.0 * h);
        let an = lp.pairing(&g, &xi);
        prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "fd {} analytic {}", fd, an);
    }

    #[test]
    fn ranks_sum_to_cohomology(ks in prop::collection::vec(-3i64..4, 1..4), frac in 0.05..0.95f64) {
        let a: Vec<f64> = ks.iter().map(|&k| TAU * (k as f64 + frac)).collect();
        let p = predict(&MagneticField::constant(&a), 1.0).unwrap();
        let n2 = 2 * ks.len() as u32;
        prop_assert_eq!(p.total_rank(), 2u64.pow(n2));
        prop_assert_eq!(p.min_count, n2 as u64 + 1);
        let top = *p.hf_ranks.keys().max().unwrap();
        let bottom = *p.hf_ranks.keys().min().unwrap();
        prop_assert_eq!(top - bottom, n2 as i64);
        for (&j, &r) in &p.hf_ranks {
            prop_assert_eq!(r, p.hf_ranks[&(top + bottom - j)]);
        }
    }

    #[test]
    fn momentum_bound_is_monotone(d1 in 0.0..1.0f64, d2 in 0.0..1.0f64, amp in 0.0..0.1f64) {
        let cert = certify_nonresonance(&MagneticField::constant(&[3.0 * PI]), 1.0).unwrap();
        let v = Potential::cosine_sum(2, 1.0, amp);
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(momentum_bound(&cert, &v, lo) <= momentum_bound(&cert, &v, hi));
    }

    #[test]
    fn lorentz_force_does_no_work(x in [0.0..1.0f64, 0.0..1.0f64], p in [-2.0..2.0f64, -2.0..2.0f64], c0 in -10.0..10.0f64) {
        let field = wave_field(c0, 0.4, 2, -1);
        let (_, dp) = vector_field(&field, &Potential::zero(2, 1.0), 0.0, &PhasePoint::new(&x, &p));
        prop_assert!((dp[0] * p[0] + dp[1] * p[1]).abs() < 1e-12 * (1.0 + c0.abs()));
    }

    #[test]
    fn canonical_json_round_trips_floats(xs in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 0..20)) {
        let text = to_canonical_json(&xs).unwrap();
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), xs.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(to_canonical_json(&back).unwrap(), text);
    }

    #[test]
    fn pi_multiples_parse(k in -40i32..40, d in 1i32..9) {
        let want = k as f64 * PI / d as f64;
        let got = real::parse(&format!("{k}pi/{d}")).unwrap();
        prop_assert!((got - want).abs() <= 1e-15 * want.abs().max(1.0));
    }

    #[test]
    fn integer_multiples_have_rank_one(ks in prop::collection::vec(-6i64..=6, 1..5)) {
        prop_assume!(ks.iter().any(|&k| k != 0));
        let xs: Vec<f64> = ks.iter().map(|&k| k as f64 * 3.0 * PI).collect();
        prop_assert_eq!(rational_rank(&xs), 1);
    }
}
