use adaptive_ensemble::adaptive::{AdaptiveFitProblem, SquaredSystem};
use adaptive_ensemble::baselines::*;
use adaptive_ensemble::linalg::{dot, norm2};
use adaptive_ensemble::metrics::mape;
use adaptive_ensemble::panel::{ForecastPanel, TargetView};
use adaptive_ensemble::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_panel(rows: usize, m: usize, lead: usize, seed: u64) -> ForecastPanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<f64> = (0..rows).map(|_| rng.gen_range(1.0..3.0)).collect();
    let fc: Vec<Vec<f64>> =
        y.iter().map(|&v| (0..m).map(|i| v + rng.gen_range(-0.5..0.5) * (i + 1) as f64).collect()).collect();
    ForecastPanel::from_rows(&fc, y, lead).unwrap()
}

struct Overridden<'a> {
    base: &'a ForecastPanel,
    from: usize,
}

impl TargetView for Overridden<'_> {
    fn target(&self, row: usize) -> f64 {
        if row >= self.from {
            1e6
        } else {
            self.base.target(row)
        }
    }
}

#[test]
fn hindsight_picks_exact_member() {
    let y = vec![1.0, 2.0, 4.0];
    let fc = vec![vec![1.5, 1.0], vec![2.5, 2.0], vec![3.0, 4.0]];
    let p = ForecastPanel::from_rows(&fc, y, 1).unwrap();
    let (k, rep) = best_in_hindsight(&p).unwrap();
    assert_eq!(k, 1);
    assert_eq!(rep.mae, 0.0);
    assert_eq!(rep.rmse, 0.0);
}

#[test]
fn hindsight_uses_mape_not_rmse() {
    // member 0: 10% on every row, one big absolute miss on the large target;
    // member 1: 12% MAPE, smaller squared error.
    let y = vec![1.0, 1.0, 100.0];
    let fc = vec![vec![1.1, 1.18], vec![0.9, 0.82], vec![110.0, 100.0]];
    let p = ForecastPanel::from_rows(&fc, y.clone(), 1).unwrap();
    let m0 = mape(&y, &p.member(0)).unwrap();
    let m1 = mape(&y, &p.member(1)).unwrap();
    assert!((m0 - 10.0).abs() < 1e-9 && (m1 - 12.0).abs() < 1e-9);
    let (k, rep) = best_in_hindsight(&p).unwrap();
    assert_eq!(k, 0);
    assert!(rep.rmse > adaptive_ensemble::metrics::rmse(&y, &p.member(1)).unwrap());
}

#[test]
fn hindsight_tie_goes_to_lowest_index() {
    let y = vec![2.0, 4.0];
    let fc = vec![vec![3.0, 1.0, 2.5], vec![4.0, 4.0, 5.0]];
    let p = ForecastPanel::from_rows(&fc, y, 1).unwrap();
    assert_eq!(best_in_hindsight(&p).unwrap().0, 0);
}

#[test]
fn hindsight_guard_propagates() {
    let p = ForecastPanel::from_rows(&[vec![1.0]], vec![0.0], 1).unwrap();
    assert!(matches!(best_in_hindsight(&p), Err(Error::MapeGuard { .. })));
}

#[test]
fn exp3_hand_example() {
    let eta = exp3_eta(2, 8);
    assert!((eta - std::f64::consts::LN_2.sqrt()).abs() < 1e-15);
    let w = softmax_weights(&[1.0, 2.0], eta);
    // 1 / (1 + e^{−√ln 2}) = 0.696895
    assert!((w[0] - 0.696895).abs() < 5e-7, "{w:?}");
    assert!((w[1] - 0.303105).abs() < 5e-7);
    let e1 = (-eta).exp();
    let e2 = (-2.0 * eta).exp();
    assert!((w[0] - e1 / (e1 + e2)).abs() < 1e-15);
}

#[test]
fn exp3_limit_and_symmetry() {
    let w = softmax_weights(&[0.0, 1e6], 1.0);
    assert_eq!(w, vec![1.0, 0.0]);
    let fc = vec![vec![2.0, 2.0, 2.0]; 12];
    let p = ForecastPanel::from_rows(&fc, (0..12).map(|i| i as f64).collect(), 1).unwrap();
    let run = run_online(OnlineMethod::Exp3 { window: 4 }, &p, &p, 12).unwrap();
    for w in &run.weights {
        for v in w {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }
}

#[test]
fn exp3_window_follows_recent_errors() {
    // member 0 is perfect early, member 1 is perfect late
    let n = 40;
    let y: Vec<f64> = vec![1.0; n];
    let fc: Vec<Vec<f64>> = (0..n).map(|t| if t < 20 { vec![1.0, 3.0] } else { vec![3.0, 1.0] }).collect();
    let p = ForecastPanel::from_rows(&fc, y, 1).unwrap();
    let run = run_online(OnlineMethod::Exp3 { window: 5 }, &p, &p, n).unwrap();
    assert!(run.weights[19][0] > 0.99);
    assert!(run.weights[39][1] > 0.99);
    assert_eq!(run.weights[0], vec![0.5, 0.5]);
}

#[test]
fn pa_within_margin_is_passive() {
    let mut pa = PassiveAggressive::with_weights(vec![0.5, 0.5], 0.3);
    assert!(!pa.update(&[1.0, 2.0], 1.7));
    assert_eq!(pa.weights(), &[0.5, 0.5]);
}

#[test]
fn ridge_examples() {
    let y: Vec<f64> = vec![1.0, -2.0, 0.5, 3.0];
    let b = ridge_fit(&y, &y, 1, 0.0).unwrap();
    assert!((b[0] - 1.0).abs() < 1e-15);
    // consistent overdetermined system, λ = 0
    let x = vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, -1.0];
    let truth = [0.7, -1.3];
    let yy: Vec<f64> = x.chunks(2).map(|r| dot(r, &truth)).collect();
    let b = ridge_fit(&x, &yy, 2, 0.0).unwrap();
    assert!((b[0] - 0.7).abs() < 1e-12 && (b[1] + 1.3).abs() < 1e-12);
    let dup = vec![1.0, 1.0, 2.0, 2.0];
    assert!(matches!(ridge_fit(&dup, &[1.0, 2.0], 2, 0.0), Err(Error::Singular(_))));
    assert!(ridge_fit(&dup, &[1.0, 2.0], 2, 0.1).is_ok());
}

#[test]
fn ridge_satisfies_normal_equations() {
    let p = random_panel(50, 4, 1, 3);
    let lambda = 0.7;
    let b = ridge_fit_panel(&p, lambda).unwrap();
    let m = 4;
    let mut res = vec![0.0; m];
    for t in 0..p.len() {
        let x = p.row(t);
        let f = dot(x, &b) - p.targets()[t];
        for i in 0..m {
            res[i] += x[i] * f;
        }
    }
    for i in 0..m {
        res[i] += lambda * b[i];
    }
    assert!(norm2(&res) <= 1e-10 * p.len() as f64);
}

#[test]
fn adaptive_static_squared_equals_ridge() {
    let p = random_panel(70, 3, 1, 4);
    let prob = AdaptiveFitProblem::assemble(&p, 4, true).unwrap();
    let mu = 0.013;
    let sol = SquaredSystem::new(&prob).solve_static(&prob, mu).unwrap();
    let ridge = ridge_fit_panel(&p, mu * p.len() as f64).unwrap();
    for (a, b) in sol.theta[..3].iter().zip(&ridge) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn online_methods_respect_lead_time() {
    for lead in [1usize, 3] {
        let p = random_panel(30, 3, lead, 5);
        for method in [OnlineMethod::Exp3 { window: 6 }, OnlineMethod::PassiveAggressive { epsilon: 0.05 }] {
            let honest = run_online(method, &p, &p, 30).unwrap();
            for t in 0..30usize {
                // targets from t − k + 1 onwards replaced by garbage
                let view = Overridden { base: &p, from: (t + 1).saturating_sub(lead) };
                let run = run_online(method, &p, &view, t + 1).unwrap();
                assert_eq!(run.predictions[t], honest.predictions[t], "{method:?} lead {lead} row {t}");
            }
        }
    }
}

#[test]
fn online_state_carries_across_series() {
    let n = 6;
    let fc: Vec<f64> = (0..n).flat_map(|t| [1.0 + t as f64, 2.0]).collect();
    let series: Vec<String> = (0..n).map(|t| if t < 3 { "a".into() } else { "b".into() }).collect();
    let p = ForecastPanel::new(
        vec![1, 2, 3, 1, 2, 3],
        fc,
        vec![1.5; n],
        vec!["x".into(), "z".into()],
        Some(series),
        1,
    )
    .unwrap();
    let run = run_online(OnlineMethod::Exp3 { window: 2 }, &p, &p, n).unwrap();
    // first row of series b keeps the weights reached at the end of series a
    assert_eq!(run.weights[3], run.weights[2]);
    let pa = run_online(OnlineMethod::PassiveAggressive { epsilon: 0.0 }, &p, &p, n).unwrap();
    assert_ne!(pa.weights[3], vec![0.5, 0.5]);
}

proptest! {
    #[test]
    fn softmax_on_simplex_and_shift_invariant(
        regrets in proptest::collection::vec(0.0f64..50.0, 1..8),
        shift in -100.0f64..100.0,
        eta in 0.01f64..5.0,
    ) {
        let w = softmax_weights(&regrets, eta);
        prop_assert!(w.iter().all(|&v| v >= 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let shifted: Vec<f64> = regrets.iter().map(|r| r + shift).collect();
        let w2 = softmax_weights(&shifted, eta);
        for (a, b) in w.iter().zip(&w2) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn exp3_weights_on_simplex(seed in 0u64..1000, window in 1usize..20) {
        let p = random_panel(25, 4, 2, seed);
        let run = run_online(OnlineMethod::Exp3 { window }, &p, &p, 25).unwrap();
        for w in &run.weights {
            prop_assert!(w.iter().all(|&v| v >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn pa_update_lands_on_margin(
        w in proptest::collection::vec(-2.0f64..2.0, 3),
        x in proptest::collection::vec(-2.0f64..2.0, 3),
        y in -5.0f64..5.0,
        eps in 0.0f64..1.0,
    ) {
        prop_assume!(dot(&x, &x) > 1e-3);
        let mut pa = PassiveAggressive::with_weights(w.clone(), eps);
        let before = y - pa.predict(&x);
        let moved = pa.update(&x, y);
        let after = y - pa.predict(&x);
        if before.abs() <= eps {
            prop_assert!(!moved);
            prop_assert_eq!(pa.weights(), &w[..]);
        } else {
            prop_assert!((after.abs() - eps).abs() < 1e-10);
            let delta: Vec<f64> = pa.weights().iter().zip(&w).map(|(a, b)| a - b).collect();
            prop_assert!(dot(&delta, &x) * before > 0.0);
        }
    }

    #[test]
    fn ridge_norm_shrinks_with_lambda(seed in 0u64..1000) {
        let p = random_panel(30, 3, 1, seed);
        let mut last = f64::INFINITY;
        for lambda in [0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 2.0, 10.0, 100.0] {
            let n = norm2(&ridge_fit_panel(&p, lambda).unwrap());
            prop_assert!(n <= last + 1e-12);
            last = n;
        }
    }
}
