//! Rank-selection sweeps over the spike strength.

use std::io::Write;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sfpa_core::matrix::{spectrum, SvdMethod};
use sfpa_core::pa::{null_spectra, run_pa_given_nulls, Comparison, NullMethod, PaConfig};
use sfpa_core::random::{gen_spike_model, NoiseDist, SeedSpec};
use sfpa_core::{Error, FeatureSampleGrid, ProfileSpec, Result};

/// Tag offset separating null-trial streams from the model streams of a run.
const NULL_TAG: u64 = 1 << 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n: usize,
    pub p: usize,
    pub runs: usize,
    pub trials: usize,
    pub alpha: f64,
    pub theta_grid: Vec<f64>,
    pub seed: u64,
    pub profile: ProfileSpec,
    pub noise: NoiseDist,
}

impl SweepConfig {
    pub fn new(profile: ProfileSpec, seed: u64, runs: usize, theta_grid: Vec<f64>) -> Self {
        Self {
            n: 500,
            p: 300,
            runs,
            trials: 10,
            alpha: 95.0,
            theta_grid,
            seed,
            profile,
            noise: NoiseDist::Gaussian,
        }
    }
}

/// `0, 0.25, ..., 4`.
pub fn default_theta_grid() -> Vec<f64> {
    (0..=16).map(|k| k as f64 * 0.25).collect()
}

/// Parses `"start:stop:step"` into an inclusive grid.
pub fn parse_theta_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Input(format!("invalid grid `{s}`")))
        })
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(Error::Input(format!("grid `{s}` is not of the form start:stop:step")));
    };
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::Input(format!("invalid grid `{s}`")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: NullMethod,
    pub comparison: Comparison,
    pub mean_k: f64,
    /// `histogram[k]` counts runs that selected rank `k`.
    pub histogram: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaSummary {
    pub theta: f64,
    pub methods: Vec<MethodSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub experiment: String,
    pub config: SweepConfig,
    pub rows: Vec<ThetaSummary>,
}

/// The four method/rule combinations in reporting order.
pub fn combinations() -> [(NullMethod, Comparison); 4] {
    [
        (NullMethod::Signflip, Comparison::Pairwise),
        (NullMethod::Signflip, Comparison::UpperEdge),
        (NullMethod::Permutation, Comparison::Pairwise),
        (NullMethod::Permutation, Comparison::UpperEdge),
    ]
}

/// Selected ranks of one run at one strength, in [`combinations`] order.
/// Both rules of a method score the same null trials.
pub fn run_once(cfg: &SweepConfig, run: usize, theta_index: usize) -> Result<[usize; 4]> {
    let profile = cfg.profile.build(cfg.n, cfg.p)?;
    let run_seed = SeedSpec::new(cfg.seed).child(run as u64);
    let theta = cfg.theta_grid[theta_index];
    let strengths: &[f64] = if theta > 0.0 { &[theta] } else { &[] };
    let model = gen_spike_model(run_seed, cfg.n, cfg.p, strengths, &profile, cfg.noise)?;
    let data_sv = spectrum(&model.x, SvdMethod::Gram)?;
    let mut out = [0; 4];
    for (mi, method) in NullMethod::ALL.into_iter().enumerate() {
        let null_seed = run_seed.child(NULL_TAG + 2 * theta_index as u64 + mi as u64);
        let nulls = null_spectra(&model.x, method, cfg.trials, null_seed, SvdMethod::Gram, false)?;
        let mut pa = PaConfig {
            method,
            comparison: Comparison::Pairwise,
            alpha: cfg.alpha,
            trials: cfg.trials,
            max_rank: None,
            seed: null_seed,
            svd: SvdMethod::Gram,
        };
        let pairwise = run_pa_given_nulls(&data_sv, &nulls, &pa)?.k_hat;
        pa.comparison = Comparison::UpperEdge;
        let upper = run_pa_given_nulls(&data_sv, &nulls, &pa)?.k_hat;
        assert!(
            upper <= pairwise,
            "upper-edge selected {upper} > pairwise {pairwise} (run {run}, theta {theta})"
        );
        out[2 * mi] = pairwise;
        out[2 * mi + 1] = upper;
    }
    Ok(out)
}

pub fn run_sweep(experiment: &str, cfg: &SweepConfig) -> Result<SweepResult> {
    if cfg.runs == 0 {
        return Err(Error::Input("at least one run is required".into()));
    }
    if cfg.theta_grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::Input("spike strengths must be finite and nonnegative".into()));
    }
    cfg.profile.build(cfg.n, cfg.p)?;
    info!(
        "{experiment}: {} strengths x {} runs, n={} p={} T={} alpha={}",
        cfg.theta_grid.len(),
        cfg.runs,
        cfg.n,
        cfg.p,
        cfg.trials,
        cfg.alpha
    );
    let jobs: Vec<(usize, usize)> = (0..cfg.theta_grid.len())
        .flat_map(|t| (0..cfg.runs).map(move |r| (t, r)))
        .collect();
    let ks = jobs
        .par_iter()
        .map(|&(t, r)| run_once(cfg, r, t))
        .collect::<Result<Vec<_>>>()?;
    let max_k = ks.iter().flatten().copied().max().unwrap_or(0);
    let rows = cfg
        .theta_grid
        .iter()
        .enumerate()
        .map(|(t, &theta)| {
            let runs = &ks[t * cfg.runs..(t + 1) * cfg.runs];
            let methods = combinations()
                .into_iter()
                .enumerate()
                .map(|(c, (method, comparison))| {
                    let mut histogram = vec![0; max_k + 1];
                    for r in runs {
                        histogram[r[c]] += 1;
                    }
                    let mean_k = runs.iter().map(|r| r[c] as f64).sum::<f64>() / cfg.runs as f64;
                    MethodSummary {
                        method,
                        comparison,
                        mean_k,
                        histogram,
                    }
                })
                .collect();
            ThetaSummary { theta, methods }
        })
        .collect();
    Ok(SweepResult {
        experiment: experiment.to_string(),
        config: cfg.clone(),
        rows,
    })
}

/// i.i.d. `N(0, 1/n)` noise.
pub fn experiment_homogeneous(seed: u64, runs: usize, theta_grid: Vec<f64>) -> Result<SweepResult> {
    run_sweep(
        "homogeneous",
        &SweepConfig::new(ProfileSpec::Homogeneous(1.0), seed, runs, theta_grid),
    )
}

/// 90% of samples with variance `0.4/n`, 10% with `1/n`.
pub fn experiment_hetero_rows(seed: u64, runs: usize, theta_grid: Vec<f64>) -> Result<SweepResult> {
    run_sweep(
        "hetero_rows",
        &SweepConfig::new(ProfileSpec::hetero_rows(), seed, runs, theta_grid),
    )
}

/// Variances differ across both samples and features, with every column
/// mean square equal to one.
pub fn experiment_hetero_grid(seed: u64, runs: usize, theta_grid: Vec<f64>) -> Result<SweepResult> {
    let profile = ProfileSpec::FeatureSampleGrid(FeatureSampleGrid::default());
    run_sweep("hetero_grid", &SweepConfig::new(profile, seed, runs, theta_grid))
}

impl SweepResult {
    pub fn summary(&self, theta: f64, method: NullMethod, comparison: Comparison) -> Option<&MethodSummary> {
        self.rows
            .iter()
            .find(|r| r.theta == theta)?
            .methods
            .iter()
            .find(|m| m.method == method && m.comparison == comparison)
    }

    pub fn mean_k(&self, theta: f64, method: NullMethod, comparison: Comparison) -> Option<f64> {
        self.summary(theta, method, comparison).map(|m| m.mean_k)
    }

    /// Columns `theta, method, rule, mean_k, freq_0, ..., freq_max`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let width = self.rows.first().map_or(1, |r| r.methods[0].histogram.len());
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["theta".to_string(), "method".into(), "rule".into(), "mean_k".into()];
        header.extend((0..width).map(|k| format!("freq_{k}")));
        w.write_record(&header).map_err(to_error)?;
        for row in &self.rows {
            for m in &row.methods {
                let mut rec = vec![
                    row.theta.to_string(),
                    m.method.name().to_string(),
                    m.comparison.name().to_string(),
                    m.mean_k.to_string(),
                ];
                rec.extend(m.histogram.iter().map(|c| c.to_string()));
                w.write_record(&rec).map_err(to_error)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub(crate) fn to_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Input(format!("{other:?}")),
    }
}
