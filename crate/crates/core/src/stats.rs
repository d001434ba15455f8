//! Small empirical-statistics toolkit: KS distances, Wilson intervals,
//! one-dimensional energy distance and least-squares slopes.

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Two-sample Kolmogorov–Smirnov statistic sup_t |F_a(t) − F_b(t)|.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 1.0;
    }
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample KS statistic of `sample` against the continuous CDF `cdf`.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    if sample.is_empty() {
        return 1.0;
    }
    let s = sorted(sample);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0, |d, (k, &x)| {
        let f = cdf(x);
        d.max((f - k as f64 / n).abs()).max(((k + 1) as f64 / n - f).abs())
    })
}

/// KS distance on [0, horizon] for right-censored event times: `times`
/// holds the observed events (all ≤ horizon), `total` counts every path
/// including the censored ones. The empirical CDF jumps 1/total per event.
pub fn ks_censored(times: &[f64], total: usize, horizon: f64, cdf: impl Fn(f64) -> f64) -> f64 {
    if total == 0 {
        return 1.0;
    }
    let s = sorted(times);
    let n = total as f64;
    let mut d: f64 = 0.0;
    for (k, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - k as f64 / n).abs()).max(((k + 1) as f64 / n - f).abs());
    }
    d.max((cdf(horizon) - s.len() as f64 / n).abs())
}

/// Wilson score interval at `z` standard deviations. Returns (lo, hi, se)
/// where `se` is the half-width divided by `z`.
pub fn wilson(successes: usize, trials: usize, z: f64) -> (f64, f64, f64) {
    if trials == 0 {
        return (0.0, 1.0, 0.5);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0), half / z)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn median(xs: &[f64]) -> f64 {
    let s = sorted(xs);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Sum over all ordered pairs |x_i − x_j| for sorted input, O(n).
fn pair_abs_sum_sorted(s: &[f64]) -> f64 {
    let n = s.len() as f64;
    2.0 * s
        .iter()
        .enumerate()
        .map(|(k, &x)| x * (2.0 * k as f64 - n + 1.0))
        .sum::<f64>()
}

/// Sum over i, j of |a_i − b_j| for sorted inputs, O(n + m).
fn cross_abs_sum_sorted(a: &[f64], b: &[f64]) -> f64 {
    let total_b: f64 = b.iter().sum();
    let mut prefix = 0.0;
    let mut j = 0;
    let nb = b.len() as f64;
    let mut acc = 0.0;
    for &x in a {
        while j < b.len() && b[j] <= x {
            prefix += b[j];
            j += 1;
        }
        let below = j as f64;
        acc += x * below - prefix + (total_b - prefix) - x * (nb - below);
    }
    acc
}

/// Energy distance 2E|X−Y| − E|X−X'| − E|Y−Y'| between two real samples
/// (V-statistic form, always ≥ 0).
pub fn energy_distance_1d(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let xy = cross_abs_sum_sorted(&a, &b) / (na * nb);
    let xx = pair_abs_sum_sorted(&a) / (na * na);
    let yy = pair_abs_sum_sorted(&b) / (nb * nb);
    (2.0 * xy - xx - yy).max(0.0)
}

/// Ordinary least-squares slope and its standard error.
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let resid: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - my - slope * (a - mx);
            e * e
        })
        .sum();
    let se = if n > 2.0 {
        (resid / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, se)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_energy(a: &[f64], b: &[f64]) -> f64 {
        let m = |u: &[f64], v: &[f64]| {
            let mut s = 0.0;
            for x in u {
                for y in v {
                    s += (x - y).abs();
                }
            }
            s / (u.len() * v.len()) as f64
        };
        2.0 * m(a, b) - m(a, a) - m(b, b)
    }

    #[test]
    fn energy_distance_matches_brute_force() {
        let a = [0.3, -1.2, 2.5, 0.0, 0.7, 0.7];
        let b = [1.1, -0.4, 3.0, 2.2];
        assert!((energy_distance_1d(&a, &b) - brute_energy(&a, &b)).abs() < 1e-12);
        assert_eq!(energy_distance_1d(&a, &a), 0.0);
    }

    #[test]
    fn ks_two_sample_known_values() {
        assert_eq!(ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert!((ks_two_sample(&[1.0, 2.0, 3.0, 4.0], &[2.5, 3.5]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_one_sample_uniform_grid() {
        let s: Vec<f64> = (0..100).map(|k| (k as f64 + 0.5) / 100.0).collect();
        let d = ks_one_sample(&s, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.005).abs() < 1e-12);
    }

    #[test]
    fn censored_ks_counts_missing_mass() {
        // no events, true CDF reaches 0.4 by the horizon
        let d = ks_censored(&[], 10, 1.0, |t| 0.4 * t);
        assert!((d - 0.4).abs() < 1e-15);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi, se) = wilson(30, 100, 1.96);
        assert!(lo < 0.3 && hi > 0.3 && se > 0.0);
        let (lo, _, _) = wilson(0, 100, 1.96);
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn slope_of_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (s, se) = ols_slope(&x, &y);
        assert!((s - 2.0).abs() < 1e-14 && se < 1e-12);
    }
}
