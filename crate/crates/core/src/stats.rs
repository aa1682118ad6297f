//! Small summary statistics for Monte Carlo output.

/// Sample mean and standard error (`sd / sqrt(len)`, with an `len - 1`
/// denominator). Deviations are taken from the first sample, so a constant
/// sample yields exactly its value and a zero standard error.
pub fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let Some(&origin) = samples.first() else {
        return (f64::NAN, f64::NAN);
    };
    let len = samples.len() as f64;
    let shift: f64 = samples.iter().map(|v| v - origin).sum::<f64>() / len;
    let mean = origin + shift;
    if samples.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = samples.iter().map(|v| (v - origin - shift).powi(2)).sum();
    (mean, (ss / (len - 1.0)).sqrt() / len.sqrt())
}

/// `(mean(b) - mean(a)) / sqrt(se(a)^2 + se(b)^2)`.
pub fn two_sample_z(a: &[f64], b: &[f64]) -> f64 {
    let (ma, sa) = mean_stderr(a);
    let (mb, sb) = mean_stderr(b);
    (mb - ma) / (sa * sa + sb * sb).sqrt()
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic p-value of the two-sample KS test, using the Kolmogorov
/// distribution with the Stephens small-sample correction.
pub fn ks_two_sample_p_value(a: &[f64], b: &[f64]) -> f64 {
    let d = ks_statistic(a, b);
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    kolmogorov_survival(lambda)
}

/// `P(K > lambda) = 2 sum_{k >= 1} (-1)^{k-1} exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
