use assist_core::corpus::{default_ontology, generate_corpus, inject_noise, NoiseSpec};
use assist_core::theory::{
    approx_error, combined_error, optimal_alpha, verify_theorem, verify_with, Proxy, ProxySource, Sites, TheoremConfig,
};
use assist_core::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Golden-section minimization of the combined error over [0, 1].
fn golden_min(yv: f64, yp: f64) -> (f64, f64) {
    let f = |a: f64| a * a * yp + (1.0 - a) * (1.0 - a) * yv;
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let a = 0.5 * (lo + hi);
    (a, f(a))
}

#[test]
fn closed_forms_match_numerical_minimization() {
    let mut r = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..100 {
        let yv: f64 = r.gen_range(0.01..2.0);
        let yp: f64 = r.gen_range(0.01..2.0);
        let o = optimal_alpha(yv, yp).unwrap();
        let (a, y) = golden_min(yv, yp);
        assert!((o.alpha - a).abs() < 1e-7, "{yv} {yp}: {} vs {a}", o.alpha);
        assert!((o.y_min - y).abs() < 1e-12);
        // Stationarity of 2α·Y_p − 2(1−α)·Y_v.
        assert!((o.alpha * yp - (1.0 - o.alpha) * yv).abs() < 1e-12);
        assert!((combined_error(yv, yp, o.alpha).unwrap() - o.y_min).abs() < 1e-12);
        assert!(o.y_min < yv.min(yp));
        assert!(!o.degenerate);
    }
}

#[test]
fn closed_form_edge_cases() {
    let o = optimal_alpha(0.0, 0.5).unwrap();
    assert_eq!((o.alpha, o.y_min), (0.0, 0.0));
    let o = optimal_alpha(0.0, 0.0).unwrap();
    assert!(o.degenerate);
    assert!(optimal_alpha(-1.0, 0.5).is_err());
    assert!(optimal_alpha(f64::NAN, 0.5).is_err());
    assert!(combined_error(0.1, 0.2, 1.1).is_err());
}

#[test]
fn approx_error_by_hand() {
    // Site 0: [0.5, 0.5] vs e_0 -> 0.5. Site 1: e_1 vs e_0 -> 2. Site 2: exact -> 0.
    let draw = vec![vec![0.5, 0.5], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
    let y = approx_error(&[draw.clone(), draw], &[0, 0, 2]).unwrap();
    assert!((y.value - 2.5 / 3.0).abs() < 1e-15);
    assert!(approx_error(&[], &[0]).is_err());
    assert!(approx_error(&[vec![vec![1.0]]], &[3]).is_err());
}

#[test]
fn vanilla_error_is_twice_the_corruption_rate() {
    let o = default_ontology();
    let clean = generate_corpus(&o, 50, 5, 3).unwrap();
    let (noisy, _) = inject_noise(&clean, &NoiseSpec::high_noise(4)).unwrap();
    let sites = Sites::from_corpora(&clean, &noisy).unwrap();
    let wrong = sites.truth.iter().zip(&sites.vanilla).filter(|(a, b)| a != b).count();
    assert!((sites.vanilla_error() - 2.0 * wrong as f64 / sites.len() as f64).abs() < 1e-12);
    assert_eq!(sites.len(), clean.num_turns() * o.num_slots());
}

#[test]
fn independent_proxy_follows_the_decomposition() {
    let o = default_ontology();
    let r = verify_theorem(&TheoremConfig::independent(7), &o, Execution::default()).unwrap();
    assert_eq!(r.curve.len(), 11);
    assert!(r.within_three_stderr, "max deviation {} SE", r.max_deviation_in_stderr);
    assert!(r.argmin_within_grid_step, "{} vs {}", r.alpha_hat, r.alpha_star);
    assert_eq!(r.strict_inequality, Some(true));
    assert!(r.cross_term.abs() <= 3.0 * r.cross_term_stderr);
    // Zero bias: the pseudo error is all variance.
    assert!(r.bias_sq < 0.01 * r.y_pseudo);
}

#[test]
fn correlated_proxy_breaks_the_fit() {
    let o = default_ontology();
    let r = verify_theorem(&TheoremConfig::correlated(7), &o, Execution::default()).unwrap();
    assert!(r.cross_term.abs() > 5.0 * r.cross_term_stderr);
    assert!(!r.within_three_stderr);
}

#[test]
fn sequential_and_parallel_reports_agree() {
    let o = default_ontology();
    let clean = generate_corpus(&o, 20, 4, 8).unwrap();
    let (noisy, _) = inject_noise(&clean, &NoiseSpec::standard(9)).unwrap();
    let sites = Sites::from_corpora(&clean, &noisy).unwrap();
    let src = ProxySource { proxy: Proxy::Flip { q: 0.2 }, seed: 1 };
    let grid: Vec<f64> = (0..=4).map(|i| i as f64 / 4.0).collect();
    let a = verify_with(&sites, &src, 30, &grid, Execution::Sequential).unwrap();
    let b = verify_with(&sites, &src, 30, &grid, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    assert!(verify_with(&sites, &src, 1, &grid, Execution::Sequential).is_err());
    assert!(verify_with(&sites, &src, 30, &[0.0, 0.5], Execution::Sequential).is_err());
}
