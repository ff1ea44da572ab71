mod common;

use proptest::prelude::*;

use common::*;
use gamedyn::dynamics::strategy_velocity;
use gamedyn::payoffs::{self, eval_payoff, eval_payoff_derivative, MatrixGame};
use gamedyn::simplex::{self, EPS_ACTIVE};
use gamedyn::{vector_field, ModelKind, ModelParams, ModelState, PayoffSource};

fn dim() -> impl Strategy<Value = usize> {
    prop_oneof![Just(2usize), Just(3usize), Just(5usize)]
}

fn vec_of(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, n)
}

/// Simplex point from positive weights, with each coordinate zeroed when
/// its flag is set (at least one survives).
fn face_point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    (vec_of(n, 0.01, 1.0), prop::collection::vec(any::<bool>(), n)).prop_map(|(w, zero)| {
        let mut x: Vec<f64> = w.iter().zip(&zero).map(|(v, z)| if *z { 0.0 } else { *v }).collect();
        if x.iter().all(|v| *v == 0.0) {
            x[0] = 1.0;
        }
        let s: f64 = x.iter().sum();
        x.iter().map(|v| v / s).collect()
    })
}

fn interior_point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    vec_of(n, 0.01, 1.0).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s).collect()
    })
}

fn kind() -> impl Strategy<Value = ModelKind> {
    prop::sample::select(ModelKind::ALL.to_vec())
}

fn state_for(kind: ModelKind, n: usize) -> impl Strategy<Value = ModelState> {
    let first = if kind.uses_scores() {
        vec_of(n, -6.0, 6.0).boxed()
    } else if kind.needs_interior_start() {
        interior_point(n).boxed()
    } else {
        face_point(n).boxed()
    };
    let second = if kind.has_aux() {
        interior_point(n).boxed()
    } else if kind.has_filtered_payoff() {
        vec_of(n, -3.0, 3.0).boxed()
    } else {
        Just(Vec::new()).boxed()
    };
    (first, second).prop_map(move |(a, b)| {
        let mut data = a;
        data.extend(b);
        ModelState::from_raw(kind, n, data).unwrap()
    })
}

fn case() -> impl Strategy<Value = (ModelKind, ModelState, Vec<f64>)> {
    (kind(), dim()).prop_flat_map(|(k, n)| (Just(k), state_for(k, n), vec_of(n, -3.0, 3.0)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn simplex_projection_matches_support_enumeration(y in dim().prop_flat_map(|n| vec_of(n, -4.0, 4.0))) {
        let got = simplex::project_simplex(&y).unwrap();
        let want = brute_simplex_projection(&y);
        prop_assert!(sup_norm(&got, &want) <= 1e-6, "{:?} vs {:?}", got, want);
        prop_assert!((got.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn tangent_cone_projection_matches_enumeration(
        (x, p) in dim().prop_flat_map(|n| (face_point(n), vec_of(n, -4.0, 4.0)))
    ) {
        let active: Vec<usize> = (0..x.len()).filter(|&i| x[i] <= EPS_ACTIVE).collect();
        let got = simplex::project_tangent_cone(&x, &p, EPS_ACTIVE).unwrap();
        let want = brute_tangent_cone(&p, &active);
        prop_assert!(sup_norm(&got, &want) <= 1e-6, "{:?} vs {:?}", got, want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn tangent_cone_variational_inequality(
        (x, p, ws) in dim().prop_flat_map(|n| (
            face_point(n),
            vec_of(n, -4.0, 4.0),
            prop::collection::vec(vec_of(n, -2.0, 2.0), 100),
        ))
    ) {
        let n = x.len();
        let active: Vec<bool> = x.iter().map(|v| *v <= EPS_ACTIVE).collect();
        let v = simplex::project_tangent_cone(&x, &p, EPS_ACTIVE).unwrap();
        prop_assert!(v.iter().sum::<f64>().abs() <= 1e-12);
        for i in 0..n {
            if active[i] {
                prop_assert!(v[i] >= 0.0);
            }
        }
        let free: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
        for u in &ws {
            // cone member: nonnegative on active coordinates, sum fixed by the free ones
            let mut w: Vec<f64> = u.iter().zip(&active).map(|(c, a)| if *a { c.abs() } else { *c }).collect();
            let s: f64 = w.iter().sum::<f64>() / free.len() as f64;
            for &i in &free {
                w[i] -= s;
            }
            let lhs: f64 = (0..n).map(|i| (p[i] - v[i]) * (w[i] - v[i])).sum();
            prop_assert!(lhs <= 1e-9, "<p - v, w - v> = {}", lhs);
        }
    }

    #[test]
    fn interior_cone_is_tangent_space(
        (x, p) in dim().prop_flat_map(|n| (interior_point(n), vec_of(n, -4.0, 4.0)))
    ) {
        let a = simplex::project_tangent_cone(&x, &p, EPS_ACTIVE).unwrap();
        let b = simplex::project_tangent_space(&p);
        prop_assert!(sup_norm(&a, &b) <= 1e-12);
    }

    #[test]
    fn softmax_is_a_positive_distribution(z in dim().prop_flat_map(|n| vec_of(n, -300.0, 300.0))) {
        let s = simplex::softmax(&z);
        prop_assert!((s.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(s.iter().all(|v| *v > 0.0));
        prop_assert!(sup_norm(&s, &softmax(&z)) <= 1e-12);
    }

    #[test]
    fn skew_symmetric_games_are_lossless(
        (b, x, y) in dim().prop_flat_map(|n| (vec_of(n * n, -1.0, 1.0), interior_point(n), face_point(n)))
    ) {
        let n = x.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| b[i * n + j] - b[j * n + i]).collect())
            .collect();
        let g = MatrixGame::from_rows(rows).unwrap();
        let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let fd: Vec<f64> = g.eval(&x).iter().zip(g.eval(&y)).map(|(a, b)| a - b).collect();
        prop_assert!(dot(&d, &fd).abs() <= 1e-12);
    }

    #[test]
    fn good_rps_pairing_is_minus_half_square((x, y) in (interior_point(3), face_point(3))) {
        let g = MatrixGame::good_rps();
        let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let fd: Vec<f64> = g.eval(&x).iter().zip(g.eval(&y)).map(|(a, b)| a - b).collect();
        prop_assert!((dot(&d, &fd) + 0.5 * dot(&d, &d)).abs() <= 1e-9);
    }

    #[test]
    fn signal_derivative_matches_central_difference(seed in 0u64..10_000, t in 0.0f64..100.0) {
        let src: PayoffSource = payoffs::random_smooth_signal(3, 3, seed).into();
        let x = [1.0 / 3.0; 3];
        let h = 1e-5;
        let up = eval_payoff(&src, t + h, &x);
        let down = eval_payoff(&src, t - h, &x);
        let d = eval_payoff_derivative(&src, t, &x, &[0.0; 3]);
        for i in 0..3 {
            let fd = (up[i] - down[i]) / (2.0 * h);
            prop_assert!((fd - d[i]).abs() <= 1e-7, "{} vs {}", fd, d[i]);
        }
    }

    #[test]
    fn strategy_field_is_tangent((k, s, p) in case()) {
        let n = s.dim();
        let f = vector_field(k, &s, &p, &ModelParams::default());
        let v = strategy_velocity(k, &s, &p, &ModelParams::default());
        prop_assert!(v.iter().sum::<f64>().abs() <= 1e-10);
        if k.has_strategy_state() {
            prop_assert!(f[..n].iter().sum::<f64>().abs() <= 1e-10);
        }
    }

    #[test]
    fn boundary_faces_are_invariant((k, s, p) in case()) {
        let n = s.dim();
        if !k.has_strategy_state() {
            return Ok(());
        }
        let f = vector_field(k, &s, &p, &ModelParams::default());
        let x = &s.as_slice()[..n];
        for i in 0..n {
            if x[i] == 0.0 {
                match k {
                    ModelKind::Rd | ModelKind::RdLatency => prop_assert_eq!(f[i], 0.0),
                    ModelKind::Bnn | ModelKind::Smith => prop_assert!(f[i] >= 0.0),
                    _ => prop_assert!(f[i] >= -1e-12),
                }
            }
        }
    }

    #[test]
    fn logit_and_tp_fields_are_bounded(
        (x, p) in dim().prop_flat_map(|n| (face_point(n), vec_of(n, -50.0, 50.0))),
        tp in any::<bool>(),
    ) {
        let k = if tp { ModelKind::Tp } else { ModelKind::Logit };
        let s = ModelState::from_raw(k, x.len(), x).unwrap();
        let f = vector_field(k, &s, &p, &ModelParams::default());
        prop_assert!(f.iter().all(|v| v.abs() <= 2.0));
    }
}
