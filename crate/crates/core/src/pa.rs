//! Parallel analysis: choose the number of factors by comparing the data
//! singular values with those of signflipped or column-permuted copies.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{spectrum, DataMatrix, SingularSpectrum, SvdMethod};
use crate::random::{gen_column_permutation, gen_rademacher, permute_columns, signflip, SeedSpec};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullMethod {
    #[default]
    Signflip,
    Permutation,
}

impl NullMethod {
    pub const ALL: [NullMethod; 2] = [NullMethod::Signflip, NullMethod::Permutation];

    pub fn name(self) -> &'static str {
        match self {
            NullMethod::Signflip => "signflip",
            NullMethod::Permutation => "permutation",
        }
    }

    /// Draws one null copy of `x` from `seed`.
    pub fn null_matrix(self, x: &DataMatrix, seed: SeedSpec) -> Result<DataMatrix> {
        let (n, p) = x.shape();
        match self {
            NullMethod::Signflip => signflip(x, &gen_rademacher(seed, n, p)),
            NullMethod::Permutation => permute_columns(x, &gen_column_permutation(seed, n, p)),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `sigma_k` against the percentile of the null `sigma_k`.
    #[default]
    Pairwise,
    /// Every `sigma_k` against the percentile of the null `sigma_1`.
    UpperEdge,
}

impl Comparison {
    pub const ALL: [Comparison; 2] = [Comparison::Pairwise, Comparison::UpperEdge];

    pub fn name(self) -> &'static str {
        match self {
            Comparison::Pairwise => "pairwise",
            Comparison::UpperEdge => "upper_edge",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaConfig {
    pub method: NullMethod,
    pub comparison: Comparison,
    /// Percentile in `(0, 100]`.
    pub alpha: f64,
    pub trials: usize,
    /// Largest rank that may be returned; defaults to `min(n, p) - 1`.
    pub max_rank: Option<usize>,
    pub seed: SeedSpec,
    pub svd: SvdMethod,
}

impl Default for PaConfig {
    fn default() -> Self {
        Self {
            method: NullMethod::Signflip,
            comparison: Comparison::Pairwise,
            alpha: 95.0,
            trials: 10,
            max_rank: None,
            seed: SeedSpec::new(0),
            svd: SvdMethod::Gram,
        }
    }
}

impl PaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 100.0) {
            return Err(Error::input(format!("alpha must lie in (0, 100], got {}", self.alpha)));
        }
        if self.trials == 0 {
            return Err(Error::input("at least one trial is required"));
        }
        Ok(())
    }

    fn resolve_max_rank(&self, len: usize) -> Result<usize> {
        let default = len.saturating_sub(1);
        match self.max_rank {
            None => Ok(default),
            Some(k) if k <= default => Ok(k),
            Some(k) => Err(Error::input(format!("max_rank {k} exceeds min(n, p) - 1 = {default}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub k_hat: usize,
    pub data_sv: SingularSpectrum,
    /// Thresholds compared against `data_sv[0..=max_rank]`.
    pub null_percentiles: Vec<f64>,
    /// `trace[k]` is true when `data_sv[k]` exceeded its threshold.
    pub trace: Vec<bool>,
    /// Set when no value up to `max_rank` fell to or below its threshold.
    pub capped: bool,
    pub config: PaConfig,
}

/// Nearest-rank percentile: the `ceil(alpha/100 * T)`-th smallest sample.
pub fn percentile(samples: &[f64], alpha: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::input("percentile of an empty sample"));
    }
    if !(alpha > 0.0 && alpha <= 100.0) {
        return Err(Error::input(format!("alpha must lie in (0, 100], got {alpha}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[nearest_rank(alpha, sorted.len()) - 1])
}

/// 1-based nearest rank. `alpha * T / 100` is snapped to the nearest integer
/// when within rounding error of it, so 95% of 20 is exactly rank 19.
fn nearest_rank(alpha: f64, t: usize) -> usize {
    let pos = alpha * t as f64 / 100.0;
    let snapped = pos.round();
    let rank = if (pos - snapped).abs() <= 1e-9 * pos.max(1.0) {
        snapped
    } else {
        pos.ceil()
    };
    (rank as usize).clamp(1, t)
}

/// Sequential rule: the first `k` whose value is at or below its threshold,
/// scanning `0..=max_rank`. Returns `(k_hat, trace, capped)`.
pub fn select_rank(data_sv: &[f64], thresholds: &[f64], max_rank: usize) -> (usize, Vec<bool>, bool) {
    let mut trace = Vec::with_capacity(max_rank + 1);
    for k in 0..=max_rank {
        let above = match (data_sv.get(k), thresholds.get(k)) {
            (Some(d), Some(t)) => d > t,
            _ => true,
        };
        trace.push(above);
        if !above {
            return (k, trace, false);
        }
    }
    (max_rank, trace, true)
}

/// Singular values of `trials` null copies of `x`, one seeded stream per
/// trial, in trial order. With `leading_only` each entry keeps `sigma_1`.
pub fn null_spectra(
    x: &DataMatrix,
    method: NullMethod,
    trials: usize,
    seed: SeedSpec,
    svd: SvdMethod,
    leading_only: bool,
) -> Result<Vec<Vec<f64>>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let null = method.null_matrix(x, seed.child(t))?;
            let mut values = spectrum(&null, svd)?.values;
            if leading_only {
                values.truncate(1);
            }
            Ok(values)
        })
        .collect()
}

/// Scores `data_sv` against precomputed null spectra.
pub fn run_pa_given_nulls(data_sv: &SingularSpectrum, nulls: &[Vec<f64>], cfg: &PaConfig) -> Result<SelectionResult> {
    cfg.validate()?;
    if nulls.len() != cfg.trials {
        return Err(Error::input(format!(
            "expected {} null trials, got {}",
            cfg.trials,
            nulls.len()
        )));
    }
    let max_rank = cfg.resolve_max_rank(data_sv.len())?;
    let needed = match cfg.comparison {
        Comparison::Pairwise => max_rank + 1,
        Comparison::UpperEdge => 1,
    };
    if let Some(short) = nulls.iter().find(|t| t.len() < needed) {
        return Err(Error::input(format!(
            "null trial holds {} singular values, {needed} required",
            short.len()
        )));
    }
    let null_percentiles = match cfg.comparison {
        Comparison::Pairwise => (0..=max_rank)
            .map(|k| percentile(&nulls.iter().map(|t| t[k]).collect::<Vec<_>>(), cfg.alpha))
            .collect::<Result<Vec<_>>>()?,
        Comparison::UpperEdge => {
            let edge = percentile(&nulls.iter().map(|t| t[0]).collect::<Vec<_>>(), cfg.alpha)?;
            vec![edge; max_rank + 1]
        }
    };
    let (k_hat, trace, capped) = select_rank(&data_sv.values, &null_percentiles, max_rank);
    if capped {
        warn!("selection reached max_rank {max_rank} without the stop condition triggering");
    }
    Ok(SelectionResult {
        k_hat,
        data_sv: data_sv.clone(),
        null_percentiles,
        trace,
        capped,
        config: cfg.clone(),
    })
}

pub fn run_pa(x: &DataMatrix, cfg: &PaConfig) -> Result<SelectionResult> {
    cfg.validate()?;
    let data_sv = spectrum(x, cfg.svd)?;
    let leading_only = cfg.comparison == Comparison::UpperEdge;
    let nulls = null_spectra(x, cfg.method, cfg.trials, cfg.seed, cfg.svd, leading_only)?;
    run_pa_given_nulls(&data_sv, &nulls, cfg)
}
