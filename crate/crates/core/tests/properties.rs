use proptest::prelude::*;
use proptest::test_runner::Config;

use sfpa_core::diagnostics::{classify_rate_regime, decay_coefficient, destruction_report, Verdict};
use sfpa_core::io::{
    apply_preprocess, read_matrix_binary, read_matrix_csv, write_matrix_binary, write_matrix_csv, CsvOptions,
    MaskedMatrix, Preprocess, PreprocessStep,
};
use sfpa_core::pa::{run_pa_given_nulls, Comparison, NullMethod, PaConfig};
use sfpa_core::random::SeedSpec;
use sfpa_core::{monte_carlo_flip_norm, norm, singular_values, DataMatrix, NormKind, SingularSpectrum};

fn matrix(max_n: usize, max_p: usize) -> impl Strategy<Value = DataMatrix> {
    (1..=max_n, 1..=max_p).prop_flat_map(|(n, p)| {
        prop::collection::vec(-10.0..10.0f64, n * p).prop_map(move |v| DataMatrix::from_row_major(n, p, v).unwrap())
    })
}

fn pair(max_n: usize, max_p: usize) -> impl Strategy<Value = (DataMatrix, DataMatrix)> {
    (1..=max_n, 1..=max_p).prop_flat_map(|(n, p)| {
        let m = move || {
            prop::collection::vec(-10.0..10.0f64, n * p).prop_map(move |v| DataMatrix::from_row_major(n, p, v).unwrap())
        };
        (m(), m())
    })
}

/// Descending singular values of a data matrix and of `trials` nulls.
fn spectra(len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>)> {
    let sorted = move || {
        prop::collection::vec(0.0..5.0f64, len).prop_map(|mut v| {
            v.sort_by(|a, b| b.total_cmp(a));
            v
        })
    };
    (sorted(), prop::collection::vec(sorted(), 1..12))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Rho-infinity straight from the symmetric embedding `[0 X; X^T 0]`.
fn brute_force_rho(x: &DataMatrix) -> f64 {
    let (n, p) = x.shape();
    let m = n + p;
    let entry = |i: usize, j: usize| -> f64 {
        match (i < n, j < n) {
            (true, false) => x.get(i, j - n),
            (false, true) => x.get(j, i - n),
            _ => 0.0,
        }
    };
    let mut cols: Vec<f64> = (0..m)
        .map(|j| (0..m).map(|i| entry(i, j).abs()).fold(0.0, f64::max))
        .collect();
    cols.sort_by(|a, b| b.total_cmp(a));
    let mut best = 0.0f64;
    for (i, v) in cols.iter().enumerate() {
        best = best.max(v * ((i + 1) as f64).ln().sqrt());
    }
    best
}

proptest! {
    #![proptest_config(Config::with_cases(64))]

    #[test]
    fn weyl_perturbation_bound((a, b) in pair(9, 9)) {
        let sa = singular_values(&a).unwrap();
        let sab = singular_values(&a.add(&b).unwrap()).unwrap();
        let op = norm(&b, NormKind::Operator).unwrap();
        for (x, y) in sa.values.iter().zip(&sab.values) {
            prop_assert!((x - y).abs() <= op * (1.0 + 1e-8) + 1e-10, "{x} {y} {op}");
        }
    }

    #[test]
    fn necessary_norm_chain(s in matrix(9, 9)) {
        let (n, p) = (s.nrows() as f64, s.ncols() as f64);
        let two_inf = norm(&s, NormKind::TwoInf).unwrap();
        let two_inf_t = norm(&s, NormKind::TwoInfTranspose).unwrap();
        let tol = |b: f64| b * (1.0 + 1e-12) + 1e-12;
        prop_assert!(norm(&s, NormKind::InfInf).unwrap() <= tol(two_inf));
        prop_assert!(norm(&s, NormKind::Frobenius).unwrap() / p.sqrt() <= tol(two_inf));
        prop_assert!(norm(&s, NormKind::Induced1).unwrap() / n.sqrt() <= tol(two_inf));
        prop_assert!(norm(&s, NormKind::InducedInf).unwrap() / p.sqrt() <= tol(two_inf_t));
        prop_assert!(two_inf <= tol(norm(&s, NormKind::Operator).unwrap()));

        let report = destruction_report(&s, 4.0).unwrap();
        for (value, bound) in report.necessary_norms.with_bounds(report.two_inf, report.two_inf_t) {
            prop_assert!(value <= tol(bound), "{value} > {bound}");
        }
    }

    #[test]
    fn entrywise_rank_bound(s in matrix(8, 5)) {
        let r = destruction_report(&s, 4.0).unwrap();
        let bound = (r.rank as f64).powi(2) * (r.two_inf * r.two_inf_t).powi(2);
        prop_assert!(r.entrywise_k.powi(4) <= bound * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn singular_values_permutation_invariant(
        (x, rows, cols) in matrix(8, 8).prop_flat_map(|x| {
            let (n, p) = x.shape();
            (
                Just(x),
                Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
                Just((0..p).collect::<Vec<_>>()).prop_shuffle(),
            )
        })
    ) {
        let a = singular_values(&x).unwrap();
        let b = singular_values(&x.permuted(&rows, &cols).unwrap()).unwrap();
        for (u, v) in a.values.iter().zip(&b.values) {
            prop_assert!(close(*u, *v, 1e-8), "{u} {v}");
        }
    }

    #[test]
    fn rho_matches_brute_force(x in matrix(8, 8)) {
        prop_assert_eq!(decay_coefficient(&x), brute_force_rho(&x));
    }

    #[test]
    fn rho_bounded_by_max_entry(x in matrix(10, 10)) {
        let (n, p) = x.shape();
        let bound = x.max_abs() * ((n + p) as f64).ln().sqrt();
        prop_assert!(decay_coefficient(&x) <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn upper_edge_never_exceeds_pairwise((data, nulls) in spectra(6), alpha in 1.0..=100.0f64) {
        let spectrum = SingularSpectrum::new(data, 6, 6);
        let cfg = |comparison| PaConfig { comparison, alpha, trials: nulls.len(), ..PaConfig::default() };
        let pw = run_pa_given_nulls(&spectrum, &nulls, &cfg(Comparison::Pairwise)).unwrap();
        let ue = run_pa_given_nulls(&spectrum, &nulls, &cfg(Comparison::UpperEdge)).unwrap();
        prop_assert!(ue.k_hat <= pw.k_hat);
    }

    #[test]
    fn raising_alpha_never_raises_k(
        (data, nulls) in spectra(6),
        a in 1.0..=100.0f64,
        b in 1.0..=100.0f64,
        upper in any::<bool>(),
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let spectrum = SingularSpectrum::new(data, 6, 6);
        let comparison = if upper { Comparison::UpperEdge } else { Comparison::Pairwise };
        let cfg = |alpha| PaConfig { comparison, alpha, trials: nulls.len(), ..PaConfig::default() };
        let k_lo = run_pa_given_nulls(&spectrum, &nulls, &cfg(lo)).unwrap().k_hat;
        let k_hi = run_pa_given_nulls(&spectrum, &nulls, &cfg(hi)).unwrap().k_hat;
        prop_assert!(k_hi <= k_lo);
    }

    #[test]
    fn trial_order_does_not_matter(
        ((data, nulls), order) in spectra(5).prop_flat_map(|(d, n)| {
            let t = n.len();
            (Just((d, n)), Just((0..t).collect::<Vec<_>>()).prop_shuffle())
        })
    ) {
        let spectrum = SingularSpectrum::new(data, 5, 5);
        let cfg = PaConfig { trials: nulls.len(), ..PaConfig::default() };
        let shuffled: Vec<Vec<f64>> = order.iter().map(|&i| nulls[i].clone()).collect();
        let a = run_pa_given_nulls(&spectrum, &nulls, &cfg).unwrap();
        let b = run_pa_given_nulls(&spectrum, &shuffled, &cfg).unwrap();
        prop_assert_eq!(a.k_hat, b.k_hat);
        prop_assert_eq!(a.null_percentiles, b.null_percentiles);
    }

    #[test]
    fn signflip_keeps_magnitudes(x in matrix(8, 8), seed in any::<u64>()) {
        let y = NullMethod::Signflip.null_matrix(&x, SeedSpec::new(seed)).unwrap();
        prop_assert_eq!(y.abs(), x.abs());
    }

    #[test]
    fn permutation_keeps_column_multisets(x in matrix(8, 8), seed in any::<u64>()) {
        let y = NullMethod::Permutation.null_matrix(&x, SeedSpec::new(seed)).unwrap();
        for j in 0..x.ncols() {
            let mut a = x.column(j);
            let mut b = y.column(j);
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn rate_regime_monotone_in_alpha1(
        a1 in -2.0..2.0f64, step in 0.0..1.0f64, a2 in -2.0..2.0f64,
        b1 in -2.0..2.0f64, b2 in -2.0..2.0f64, n1 in -2.0..2.0f64, n2 in -2.0..2.0f64,
    ) {
        let lo = classify_rate_regime(a1, a2, b1, b2, n1, n2);
        let hi = classify_rate_regime(a1 + step, a2, b1, b2, n1, n2);
        if lo.verdict_l1 == Verdict::Converges {
            prop_assert_eq!(hi.verdict_l1, Verdict::Converges);
        }
        if lo.verdict_as == Verdict::Converges {
            prop_assert_eq!(hi.verdict_as, Verdict::Converges);
        }
    }

    #[test]
    fn centering_is_idempotent(x in matrix(8, 8), rows in any::<bool>()) {
        let step = if rows { PreprocessStep::CenterRows } else { PreprocessStep::CenterColumns };
        let pre = Preprocess { steps: vec![step] };
        let once = apply_preprocess(&MaskedMatrix::from_matrix(x), &pre).unwrap();
        let twice = apply_preprocess(&MaskedMatrix::from_matrix(once.clone()), &pre).unwrap();
        for (a, b) in once.as_slice().iter().zip(twice.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn binary_round_trip_is_exact(
        x in (1..6usize, 1..6usize).prop_flat_map(|(n, p)| {
            prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), n * p)
                .prop_map(move |v| DataMatrix::from_row_major(n, p, v).unwrap())
        })
    ) {
        let mut buf = Vec::new();
        write_matrix_binary(&mut buf, &x).unwrap();
        let y = read_matrix_binary(buf.as_slice()).unwrap();
        prop_assert_eq!(
            x.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            y.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn csv_round_trip(x in matrix(6, 6)) {
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &x, b',').unwrap();
        let y = read_matrix_csv(buf.as_slice(), &CsvOptions::default()).unwrap();
        prop_assert_eq!((y.n, y.p), x.shape());
        for (a, b) in x.as_slice().iter().zip(&y.values) {
            prop_assert!((a - b).abs() <= 1e-15 * a.abs());
        }
    }
}

proptest! {
    #![proptest_config(Config::with_cases(24))]

    /// The mean norm of a signflipped rank-2 matrix is within a factor of
    /// ten of its largest column plus largest row norm.
    #[test]
    fn flip_norm_sandwich_rank_two(
        u in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 40), 2),
        v in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 40), 2),
        theta in prop::collection::vec(0.1..10.0f64, 2),
        seed in any::<u64>(),
    ) {
        let s = DataMatrix::outer(theta[0], &u[0], &v[0]).add(&DataMatrix::outer(theta[1], &u[1], &v[1])).unwrap();
        let l = norm(&s, NormKind::TwoInf).unwrap() + norm(&s, NormKind::TwoInfTranspose).unwrap();
        let est = monte_carlo_flip_norm(&s, 20, SeedSpec::new(seed)).unwrap();
        prop_assert!(est.mean >= l / 10.0 && est.mean <= 10.0 * l, "{} vs {l}", est.mean);
    }
}
