//! Quantities that govern whether signflips destroy a signal: column and
//! row norm decay, operator-norm bounds for `R o S`, convergence-rate
//! regimes, factor-loading delocalization and perceptibility.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{norm, singular_values, DataMatrix, NormKind, SingularSpectrum};
use crate::random::{gen_rademacher, signflip, SeedSpec};
use crate::stats::mean_stderr;

/// `rho_inf(X) = max_i v_(i) sqrt(log i)`, where `v_(1) >= v_(2) >= ...`
/// are the `n + p` column sup-norms of `[0 X; X^T 0]`, that is the row and
/// column max-abs values of `X`. Natural log; the `i = 1` term is zero.
pub fn decay_coefficient(x: &DataMatrix) -> f64 {
    let mut v = x.row_max_abs();
    v.extend(x.col_max_abs());
    v.sort_by(|a, b| b.total_cmp(a));
    v.iter()
        .enumerate()
        .map(|(i, &s)| s * ((i + 1) as f64).ln().sqrt())
        .fold(0.0, f64::max)
}

/// The five norms that must vanish for signal destruction, each paired
/// with the column or row norm bound it cannot exceed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NecessaryNorms {
    /// `||S||_{inf,inf}`, at most `||S||_{2,inf}`.
    pub inf_inf: f64,
    /// `||S||_F / sqrt(p)`, at most `||S||_{2,inf}`.
    pub frobenius_over_sqrt_p: f64,
    /// `||S||_F / sqrt(n)`, at most `||S^T||_{2,inf}`.
    pub frobenius_over_sqrt_n: f64,
    /// `||S||_1 / sqrt(n)`, at most `||S||_{2,inf}`.
    pub induced_1_over_sqrt_n: f64,
    /// `||S||_inf / sqrt(p)`, at most `||S^T||_{2,inf}`.
    pub induced_inf_over_sqrt_p: f64,
}

impl NecessaryNorms {
    /// Each value with its bound.
    pub fn with_bounds(&self, two_inf: f64, two_inf_t: f64) -> [(f64, f64); 5] {
        [
            (self.inf_inf, two_inf),
            (self.frobenius_over_sqrt_p, two_inf),
            (self.frobenius_over_sqrt_n, two_inf_t),
            (self.induced_1_over_sqrt_n, two_inf),
            (self.induced_inf_over_sqrt_p, two_inf_t),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DestructionReport {
    /// Largest column norm `||S||_{2,inf}`.
    pub two_inf: f64,
    /// Largest row norm `||S^T||_{2,inf}`.
    pub two_inf_t: f64,
    pub rho_inf: f64,
    /// Count of singular values above `1e-10 sigma_1`.
    pub rank: usize,
    /// `sqrt(rank ||S||_{2,inf} ||S^T||_{2,inf})`.
    pub rank_bound_term: f64,
    /// Operator norm of the entrywise absolute value `|S|`.
    pub abs_opnorm: f64,
    /// `max(||S||_{2,inf}, ||S^T||_{2,inf}) + rho_inf`, bounding `E||R o S||`
    /// up to a universal constant.
    pub upper_bound_op: f64,
    pub necessary_norms: NecessaryNorms,
    pub k: f64,
    /// `||S||_{k,k}`.
    pub entrywise_k: f64,
    /// `||S||_{2,k}^k + ||S^T||_{2,k}^k`.
    pub two_k_sum: f64,
}

pub fn numeric_rank(s: &SingularSpectrum) -> usize {
    let top = s.leading();
    if top <= 0.0 {
        return 0;
    }
    s.values.iter().filter(|&&v| v > 1e-10 * top).count()
}

pub fn destruction_report(s: &DataMatrix, k: f64) -> Result<DestructionReport> {
    if !(k >= 2.0) || !k.is_finite() {
        return Err(Error::input(format!("entrywise exponent must be at least 2, got {k}")));
    }
    let (n, p) = (s.nrows() as f64, s.ncols() as f64);
    let two_inf = norm(s, NormKind::TwoInf)?;
    let two_inf_t = norm(s, NormKind::TwoInfTranspose)?;
    let rho_inf = decay_coefficient(s);
    let rank = numeric_rank(&singular_values(s)?);
    let frob = norm(s, NormKind::Frobenius)?;
    let necessary_norms = NecessaryNorms {
        inf_inf: norm(s, NormKind::InfInf)?,
        frobenius_over_sqrt_p: frob / p.sqrt(),
        frobenius_over_sqrt_n: frob / n.sqrt(),
        induced_1_over_sqrt_n: norm(s, NormKind::Induced1)? / n.sqrt(),
        induced_inf_over_sqrt_p: norm(s, NormKind::InducedInf)? / p.sqrt(),
    };
    Ok(DestructionReport {
        two_inf,
        two_inf_t,
        rho_inf,
        rank,
        rank_bound_term: (rank as f64 * two_inf * two_inf_t).sqrt(),
        abs_opnorm: norm(&s.abs(), NormKind::Operator)?,
        upper_bound_op: two_inf.max(two_inf_t) + rho_inf,
        necessary_norms,
        k,
        entrywise_k: norm(s, NormKind::Entrywise(k))?,
        two_k_sum: norm(s, NormKind::TwoK(k))?.powf(k) + norm(&s.transpose(), NormKind::TwoK(k))?.powf(k),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlipNormEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Monte Carlo mean and standard error of `||R o S||` over independent
/// Rademacher draws, one stream per trial.
pub fn monte_carlo_flip_norm(s: &DataMatrix, trials: usize, seed: SeedSpec) -> Result<FlipNormEstimate> {
    if trials < 2 {
        return Err(Error::input("at least two trials are needed for a standard error"));
    }
    let (n, p) = s.shape();
    let draws = (0..trials as u64)
        .into_par_iter()
        .map(|t| Ok(singular_values(&signflip(s, &gen_rademacher(seed.child(t), n, p))?)?.leading()))
        .collect::<Result<Vec<f64>>>()?;
    let (mean, stderr) = mean_stderr(&draws);
    Ok(FlipNormEstimate { mean, stderr, trials })
}

/// `sum_i theta_i (||u_i||_inf + ||v_i||_inf)`.
pub fn outer_product_condition(strengths: &[f64], u_inf_norms: &[f64], v_inf_norms: &[f64]) -> Result<f64> {
    if strengths.len() != u_inf_norms.len() || strengths.len() != v_inf_norms.len() {
        return Err(Error::input("strengths and norm lists must have equal lengths"));
    }
    if strengths
        .iter()
        .chain(u_inf_norms)
        .chain(v_inf_norms)
        .any(|&v| !(v >= 0.0))
    {
        return Err(Error::input("strengths and norms must be nonnegative"));
    }
    Ok(strengths
        .iter()
        .zip(u_inf_norms.iter().zip(v_inf_norms))
        .map(|(t, (u, v))| t * (u + v))
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converges,
    NotCovered,
}

/// Growth exponents: singular vectors delocalize as
/// `p^{-alpha1} log^{-alpha2} p`, strengths grow as `p^{beta1} log^{beta2} p`
/// and the rank as `p^{nu1} log^{nu2} p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRegime {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub verdict_l1: Verdict,
    /// Almost sure convergence, for deterministic signals.
    pub verdict_as: Verdict,
}

/// Exponents closer than this are treated as equal.
const EXPONENT_TIE: f64 = 1e-12;

pub fn classify_rate_regime(alpha1: f64, alpha2: f64, beta1: f64, beta2: f64, nu1: f64, nu2: f64) -> RateRegime {
    let lead = alpha1 - (nu1 + beta1);
    let tie = lead.abs() <= EXPONENT_TIE;
    let strict = lead > EXPONENT_TIE;
    let l1 = strict || (tie && alpha2 > nu2 + beta2 + EXPONENT_TIE);
    let verdict = |b: bool| if b { Verdict::Converges } else { Verdict::NotCovered };
    RateRegime {
        alpha1,
        alpha2,
        beta1,
        beta2,
        nu1,
        nu2,
        verdict_l1: verdict(l1),
        verdict_as: verdict(strict),
    }
}

/// `(sum_k ||f_k||_inf, n^{-1/2} (log n)^{1/2} sum_k ||f_k||_2)` for the
/// columns `f_k` of a `p x r` loading matrix.
pub fn factor_loading_check(f: &DataMatrix, n: usize) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::input("n must be at least 2"));
    }
    let sum_inf: f64 = f.col_max_abs().iter().sum();
    let sum_l2: f64 = f.col_norms().iter().sum();
    let n = n as f64;
    Ok((sum_inf, sum_l2 * (n.ln() / n).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perceptibility {
    Perceptible,
    Imperceptible,
    Marginal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerceptibilityVerdict {
    pub labels: Vec<Perceptibility>,
    pub noise_edge: f64,
    pub margin: f64,
}

pub fn perceptibility(data_sv: &SingularSpectrum, noise_edge: f64, epsilon: f64) -> Result<PerceptibilityVerdict> {
    if !(epsilon >= 0.0) {
        return Err(Error::input("margin must be nonnegative"));
    }
    let labels = data_sv
        .values
        .iter()
        .map(|&s| {
            if s > noise_edge + epsilon {
                Perceptibility::Perceptible
            } else if s < noise_edge - epsilon {
                Perceptibility::Imperceptible
            } else {
                Perceptibility::Marginal
            }
        })
        .collect();
    Ok(PerceptibilityVerdict {
        labels,
        noise_edge,
        margin: epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_matrix(seed: u64, n: usize, p: usize) -> DataMatrix {
        let mut rng = SeedSpec::new(seed).rng();
        DataMatrix::from_fn(n, p, |_, _| rng.random_range(-2.0..2.0))
    }

    #[test]
    fn decay_coefficient_examples() {
        let d = decay_coefficient(&DataMatrix::identity(8));
        assert!((d - 16f64.ln().sqrt()).abs() < 1e-12);
        assert!((d - 1.6651).abs() < 1e-4);
        let c = 2.5;
        let one = DataMatrix::from_rows(&[[c]]).unwrap();
        assert!((decay_coefficient(&one) - c * 2f64.ln().sqrt()).abs() < 1e-15);
    }

    #[test]
    fn decay_coefficient_brute_force() {
        let x = random_matrix(6, 6, 4);
        let mut cols = Vec::new();
        for i in 0..6 {
            cols.push((0..4).map(|j| x.get(i, j).abs()).fold(0.0, f64::max));
        }
        for j in 0..4 {
            cols.push((0..6).map(|i| x.get(i, j).abs()).fold(0.0, f64::max));
        }
        assert_eq!(cols.len(), 10);
        cols.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut best: f64 = 0.0;
        for (i, v) in cols.iter().enumerate() {
            best = best.max(v * ((i + 1) as f64).ln().sqrt());
        }
        assert_eq!(decay_coefficient(&x), best);
    }

    #[test]
    fn report_for_rank_one_signal() {
        let s = DataMatrix::outer(3.0, &[0.0, 1.0], &[1.0, 0.0, 0.0]);
        let r = destruction_report(&s, 4.0).unwrap();
        assert_eq!(r.two_inf, 3.0);
        assert_eq!(r.two_inf_t, 3.0);
        assert_eq!(r.rank, 1);
        assert!(r.upper_bound_op >= r.two_inf.max(r.two_inf_t));
    }

    #[test]
    fn report_for_zero_signal() {
        let r = destruction_report(&DataMatrix::zeros(4, 3), 2.0).unwrap();
        let n = &r.necessary_norms;
        let all = [
            r.two_inf,
            r.two_inf_t,
            r.rho_inf,
            r.rank_bound_term,
            r.abs_opnorm,
            r.upper_bound_op,
            r.entrywise_k,
            r.two_k_sum,
            n.inf_inf,
            n.frobenius_over_sqrt_n,
            n.frobenius_over_sqrt_p,
            n.induced_1_over_sqrt_n,
            n.induced_inf_over_sqrt_p,
        ];
        assert!(all.iter().all(|&v| v == 0.0));
        assert_eq!(r.rank, 0);
        assert!(destruction_report(&DataMatrix::zeros(4, 3), 1.5).is_err());
    }

    #[test]
    fn entrywise_norm_rank_inequality() {
        let s = random_matrix(8, 8, 5);
        let r = destruction_report(&s, 4.0).unwrap();
        let lhs = r.entrywise_k.powi(4);
        let rhs = (r.rank as f64).powi(2) * (r.two_inf * r.two_inf_t).powi(2);
        assert!(lhs <= rhs * (1.0 + 1e-12));
        for (v, bound) in r.necessary_norms.with_bounds(r.two_inf, r.two_inf_t) {
            assert!(v <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn flip_norm_examples() {
        let est = monte_carlo_flip_norm(&DataMatrix::identity(6).scale(1.7), 12, SeedSpec::new(1)).unwrap();
        assert_eq!(est.mean, 1.7);
        assert_eq!(est.stderr, 0.0);
        let est = monte_carlo_flip_norm(&DataMatrix::zeros(5, 5), 4, SeedSpec::new(1)).unwrap();
        assert_eq!((est.mean, est.stderr), (0.0, 0.0));
        assert!(monte_carlo_flip_norm(&DataMatrix::zeros(5, 5), 1, SeedSpec::new(1)).is_err());
    }

    #[test]
    fn outer_product_examples() {
        assert!((outer_product_condition(&[2.0], &[0.1], &[0.2]).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(outer_product_condition(&[], &[], &[]).unwrap(), 0.0);
        let r = outer_product_condition(&[1.0, 1.0], &[0.1; 2], &[0.1; 2]).unwrap();
        assert!((r - 0.4).abs() < 1e-15);
        assert!(outer_product_condition(&[1.0], &[], &[0.1]).is_err());
    }

    #[test]
    fn regime_examples() {
        let r = classify_rate_regime(0.3, 0.0, 0.2, 0.0, 0.0, 0.0);
        assert_eq!((r.verdict_l1, r.verdict_as), (Verdict::Converges, Verdict::Converges));
        let r = classify_rate_regime(0.2, 0.5, 0.2, 0.1, 0.0, 0.0);
        assert_eq!((r.verdict_l1, r.verdict_as), (Verdict::Converges, Verdict::NotCovered));
        let r = classify_rate_regime(0.2, 0.0, 0.3, 0.0, 0.0, 0.0);
        assert_eq!((r.verdict_l1, r.verdict_as), (Verdict::NotCovered, Verdict::NotCovered));
        // rank growth shifts the boundary
        let r = classify_rate_regime(0.3, 0.0, 0.2, 0.0, 0.1, 0.0);
        assert_eq!(r.verdict_l1, Verdict::NotCovered);
    }

    #[test]
    fn loading_examples() {
        let f = DataMatrix::from_rows(&[[1.0], [0.0], [0.0]]).unwrap();
        assert_eq!(factor_loading_check(&f, 10).unwrap().0, 1.0);
        assert_eq!(factor_loading_check(&DataMatrix::zeros(4, 2), 10).unwrap(), (0.0, 0.0));
        let n = 1000usize;
        let norm2 = (n as f64).sqrt() / (n as f64).ln();
        let f = DataMatrix::from_rows(&[[norm2], [0.0]]).unwrap();
        let (_, scaled) = factor_loading_check(&f, n).unwrap();
        assert!((scaled - (n as f64).ln().powf(-0.5)).abs() < 1e-12);
        assert!((scaled - 0.380).abs() < 1e-3);
        assert!(factor_loading_check(&f, 1).is_err());
    }

    #[test]
    fn perceptibility_examples() {
        let sv = SingularSpectrum::new(vec![2.5, 1.7], 2, 2);
        let v = perceptibility(&sv, 1.0 + 0.6f64.sqrt(), 0.05).unwrap();
        assert_eq!(
            v.labels,
            vec![Perceptibility::Perceptible, Perceptibility::Imperceptible]
        );
        let v = perceptibility(&SingularSpectrum::new(vec![2.0, 1.5, 1.0], 3, 3), 1.5, 0.0).unwrap();
        assert_eq!(
            v.labels,
            vec![
                Perceptibility::Perceptible,
                Perceptibility::Marginal,
                Perceptibility::Imperceptible
            ]
        );
        let v = perceptibility(&SingularSpectrum::new(vec![0.5, 0.2], 2, 2), 1.5, 0.1).unwrap();
        assert!(v.labels.iter().all(|&l| l == Perceptibility::Imperceptible));
        assert!(perceptibility(&sv, 1.0, -0.1).is_err());
    }
}
