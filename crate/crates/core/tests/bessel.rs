use driftlab_core::bessel::{
    besq_euler_outcome, besq_euler_path, bessel_dimension, classify_regime, hitting_time_cdf, sample_besq_transition,
    sample_hitting_time, sticky_threshold, BesselParams, RegimeLabel,
};
use driftlab_core::rng::{self, domain};
use driftlab_core::stats::{ks_censored, ks_two_sample, mean, median, variance, wilson};
use statrs::distribution::{ContinuousCDF, Gamma};

fn exact_draws(mu: f64, x0: f64, t: f64, n: usize, stream: u64) -> Vec<f64> {
    let p = BesselParams::new(mu, x0).unwrap();
    let mut r = rng::stream(11, domain::BESSEL, stream);
    (0..n).map(|_| sample_besq_transition(&p, t, &mut r).unwrap()).collect()
}

#[test]
fn transition_means() {
    let a = exact_draws(3.0, 0.0, 1.0, 100_000, 0);
    assert!((mean(&a) - 3.0).abs() < 0.03, "{}", mean(&a));
    let b = exact_draws(3.0, 1.0, 1.0, 100_000, 1);
    assert!((mean(&b) - 4.0).abs() < 0.04, "{}", mean(&b));
}

#[test]
fn transition_moments_within_four_standard_errors() {
    for (k, &(mu, x0, t)) in [(3.0, 1.0, 1.0), (0.7, 2.0, 0.3), (1.2679, 1.0, 0.5), (5.0, 0.0, 2.0)]
        .iter()
        .enumerate()
    {
        let s = exact_draws(mu, x0, t, 100_000, 10 + k as u64);
        let n = s.len() as f64;
        let m = mean(&s);
        let v = variance(&s);
        let m4 = s.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
        let mean_se = (v / n).sqrt();
        let var_se = ((m4 - v * v) / n).sqrt();
        assert!((m - (x0 + mu * t)).abs() < 4.0 * mean_se, "mean {m} at mu={mu}");
        let var_exact = 4.0 * x0 * t + 2.0 * mu * t * t;
        assert!((v - var_exact).abs() < 4.0 * var_se, "variance {v} vs {var_exact} at mu={mu}");
    }
}

#[test]
fn exact_transition_agrees_with_fine_euler() {
    let h = 1e-5;
    for (k, &mu) in [0.5, 1.2679, 3.0].iter().enumerate() {
        let p = BesselParams::new(mu, 1.0).unwrap();
        let exact = exact_draws(mu, 1.0, 0.5, 200_000, 20 + k as u64);
        let mut r = rng::stream(12, domain::BESSEL, k as u64);
        let euler: Vec<f64> = (0..10_000)
            .map(|_| besq_euler_outcome(&p, h, 0.5, &mut r).unwrap().terminal)
            .collect();
        let ks = ks_two_sample(&exact, &euler);
        assert!(ks < 0.02, "mu={mu}: KS {ks}");
    }
}

#[test]
fn hitting_time_median_matches_gamma_root() {
    let p = BesselParams::new(1.0, 1.0).unwrap();
    let g = Gamma::new(0.5, 1.0).unwrap();
    // T = 1/(2G) is decreasing in G, so median T = 1/(2 median G)
    let target = 1.0 / (2.0 * g.inverse_cdf(0.5));
    assert!((target - 2.1981).abs() < 1e-3, "{target}");
    let mut r = rng::stream(13, domain::BESSEL, 0);
    let s: Vec<f64> = (0..100_000).map(|_| sample_hitting_time(&p, &mut r).unwrap()).collect();
    assert!((median(&s) / target - 1.0).abs() < 0.02, "{}", median(&s));
}

#[test]
fn hitting_law_agrees_with_absorbed_euler() {
    let p = BesselParams::new(1.2679, 1.0).unwrap();
    let (h, horizon, paths) = (1e-4, 5.0, 10_000);
    let mut r = rng::stream(14, domain::BESSEL, 0);
    let hits: Vec<f64> = (0..paths)
        .filter_map(|_| besq_euler_outcome(&p, h, horizon, &mut r).unwrap().first_hit)
        .collect();
    let ks = ks_censored(&hits, paths, horizon, |t| hitting_time_cdf(&p, t).unwrap());
    assert!(ks < 0.03, "KS {ks}");
}

#[test]
fn hitting_time_pushes_to_infinity_as_mu_approaches_two() {
    let t = 10.0;
    let probs: Vec<f64> = [1.0, 1.9, 1.99, 1.999]
        .iter()
        .map(|&mu| hitting_time_cdf(&BesselParams::new(mu, 1.0).unwrap(), t).unwrap())
        .collect();
    assert!(probs.windows(2).all(|w| w[1] < w[0]), "{probs:?}");
    assert!(probs[3] < 0.01);
}

#[test]
fn sticky_absorption_matches_gamma_law_at_both_steps() {
    // for μ ≤ 0 the time to reach 0 is still x0/(2G) with G ~ Gamma(1 − μ/2)
    let mu = bessel_dimension(2, 3, 160.0);
    let p = BesselParams::new(mu, 1.0).unwrap();
    let exact = Gamma::new(1.0 - mu / 2.0, 1.0).unwrap().sf(1.0 / 40.0);
    assert!((exact - 0.982).abs() < 1e-3, "{exact}");
    for (k, h) in [1e-3, 1e-4].into_iter().enumerate() {
        let mut r = rng::stream(15, domain::BESSEL, k as u64);
        let paths = 10_000;
        let absorbed = (0..paths)
            .filter(|_| besq_euler_outcome(&p, h, 20.0, &mut r).unwrap().absorbed)
            .count();
        let (lo, hi, _) = wilson(absorbed, paths, 3.0);
        assert!(lo <= exact && exact <= hi, "h={h}: {absorbed}/{paths}, exact {exact}");
    }
}

#[test]
fn euler_mean_identity() {
    let p = BesselParams::new(3.0, 1.0).unwrap();
    let mut r = rng::stream(16, domain::BESSEL, 0);
    let t: Vec<f64> = (0..10_000)
        .map(|_| besq_euler_outcome(&p, 1e-3, 1.0, &mut r).unwrap().terminal)
        .collect();
    let se = (variance(&t) / t.len() as f64).sqrt();
    assert!((mean(&t) - 4.0).abs() < 3.0 * se);
}

#[test]
fn absorbing_start_stays_at_zero() {
    let p = BesselParams::new(0.0, 0.0).unwrap();
    let mut r = rng::stream(17, domain::BESSEL, 0);
    let path = besq_euler_path(&p, 1e-2, 1.0, &mut r).unwrap();
    assert!(path.values.iter().all(|&v| v == 0.0));
    assert!(path.outcome.absorbed);
}

#[test]
fn regime_examples() {
    assert_eq!(sticky_threshold(3), 144.0);
    assert_eq!(sticky_threshold(4), 64.0);
    assert!((sticky_threshold(100_000) - 16.0).abs() < 1e-2);
    let s = classify_regime(2, 3, 160.0).unwrap();
    assert_eq!(s.label, RegimeLabel::Sticky);
    assert!((s.mu + 0.1623).abs() < 1e-4);
    let ns = classify_regime(2, 3, 100.0).unwrap();
    assert_eq!(ns.label, RegimeLabel::NonSticky);
    assert!(ns.quoted_interval.0 < 100.0 && 100.0 < ns.quoted_interval.1);
    assert_eq!(classify_regime(2, 3, 16.0).unwrap().label, RegimeLabel::NoCollision);
}

#[test]
fn samplers_reject_out_of_scope_dimensions() {
    let mut r = rng::stream(18, domain::BESSEL, 0);
    assert!(sample_besq_transition(&BesselParams::new(0.0, 1.0).unwrap(), 1.0, &mut r).is_err());
    assert!(sample_hitting_time(&BesselParams::new(2.0, 1.0).unwrap(), &mut r).is_err());
    assert!(sample_hitting_time(&BesselParams::new(-0.5, 1.0).unwrap(), &mut r).is_err());
}
