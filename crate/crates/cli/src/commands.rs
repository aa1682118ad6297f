use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use log::info;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use sfpa_core::diagnostics::{destruction_report, monte_carlo_flip_norm};
use sfpa_core::io::{apply_preprocess, read_matrix_file, write_selection_csv, CsvOptions};
use sfpa_core::law::{default_grid, density_by_inversion, InversionOptions, LawKind, SpectralLaw};
use sfpa_core::pa::{run_pa, PaConfig};
use sfpa_core::random::SeedSpec;
use sfpa_core::{DataMatrix, Error, FeatureSampleGrid, ProfileSpec};
use sfpa_sim::{homogenization_demo, noise_sv_distributions, parse_theta_grid, run_sweep, SweepConfig, SweepResult};

use crate::args::{
    Cli, Command, DiagnoseArgs, ExperimentArg, FormatArg, InputArgs, LawArg, LawArgs, ProfileArg, SelectArgs,
    SimulateArgs,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(Error),
    #[error("{0}")]
    Numeric(Error),
}

/// Classifies a failure while reading or writing files.
fn io_err(e: Error) -> CliError {
    if e.is_numeric() {
        CliError::Numeric(e)
    } else {
        CliError::Io(e)
    }
}

/// Classifies a failure of a computation on already-loaded data.
fn compute_err(e: Error) -> CliError {
    match e {
        Error::Input(msg) => CliError::Usage(msg),
        Error::Io(_) | Error::Parse { .. } | Error::Json(_) => CliError::Io(e),
        other => CliError::Numeric(other),
    }
}

/// Envelope shared by every JSON report.
#[derive(Serialize)]
struct Report<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    version: &'a str,
    seed: Option<u64>,
    config: C,
    result: R,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_seconds: Option<f64>,
}

struct Clock {
    start: Instant,
    enabled: bool,
}

impl Clock {
    fn new(enabled: bool) -> Self {
        Self {
            start: Instant::now(),
            enabled,
        }
    }

    fn elapsed(&self) -> Option<f64> {
        self.enabled.then(|| self.start.elapsed().as_secs_f64())
    }
}

fn report<C: Serialize, R: Serialize>(
    command: &str,
    seed: Option<u64>,
    config: C,
    result: R,
    clock: &Clock,
) -> Result<String, CliError> {
    let r = Report {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config,
        result,
        wall_time_seconds: clock.elapsed(),
    };
    let mut text = serde_json::to_string_pretty(&r).map_err(|e| CliError::Io(e.into()))?;
    text.push('\n');
    Ok(text)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let clock = Clock::new(cli.timing);
    match &cli.command {
        Command::Select(a) => select(a, &clock),
        Command::Simulate(a) => simulate(a, &clock),
        Command::Law(a) => law(a, &clock),
        Command::Diagnose(a) => diagnose(a, &clock),
    }
}

fn load(input: &InputArgs) -> Result<DataMatrix, CliError> {
    let opts = CsvOptions {
        delimiter: input.delimiter,
        has_header: input.has_header,
        missing_token: input.missing_token.clone(),
    };
    let raw = read_matrix_file(&input.input, &opts).map_err(io_err)?;
    info!("read {} x {} matrix from {}", raw.n, raw.p, input.input.display());
    apply_preprocess(&raw, &input.preprocess).map_err(io_err)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = BufWriter::new(File::create(path).map_err(|e| CliError::Io(e.into()))?);
    f.write_all(bytes).map_err(|e| CliError::Io(e.into()))?;
    f.flush().map_err(|e| CliError::Io(e.into()))
}

fn input_echo(input: &InputArgs) -> Value {
    json!({
        "input": input.input.display().to_string(),
        "preprocess": input.preprocess.steps,
        "delimiter": (input.delimiter as char).to_string(),
        "has_header": input.has_header,
        "missing_token": input.missing_token,
    })
}

fn select(a: &SelectArgs, clock: &Clock) -> Result<(), CliError> {
    let x = load(&a.input)?;
    let cfg = PaConfig {
        method: a.method.into(),
        comparison: a.comparison.into(),
        alpha: a.alpha,
        trials: a.trials as usize,
        max_rank: a.max_rank,
        seed: SeedSpec::new(a.seed),
        ..PaConfig::default()
    };
    let result = run_pa(&x, &cfg).map_err(compute_err)?;
    println!("{}", result.k_hat);
    if let Some(path) = &a.output {
        let bytes = match a.format {
            FormatArg::Json => {
                let config = json!({ "data": input_echo(&a.input), "shape": [x.nrows(), x.ncols()], "pa": cfg });
                report("select", Some(a.seed), config, &result, clock)?.into_bytes()
            }
            FormatArg::Csv => {
                let mut buf = Vec::new();
                write_selection_csv(&mut buf, &result).map_err(io_err)?;
                buf
            }
        };
        write_file(path, &bytes)?;
    }
    Ok(())
}

fn profile_spec(p: ProfileArg) -> ProfileSpec {
    match p {
        ProfileArg::Homogeneous => ProfileSpec::Homogeneous(1.0),
        ProfileArg::HeteroRows => ProfileSpec::hetero_rows(),
        ProfileArg::HeteroGrid => ProfileSpec::FeatureSampleGrid(FeatureSampleGrid::default()),
        ProfileArg::HalfSplit => ProfileSpec::half_split_rows(),
    }
}

fn simulate(a: &SimulateArgs, clock: &Clock) -> Result<(), CliError> {
    fs::create_dir_all(&a.out_dir).map_err(|e| CliError::Io(e.into()))?;
    let (n, p) = (a.n as usize, a.p as usize);
    let dir = &a.out_dir;
    match a.experiment {
        ExperimentArg::Homogeneous | ExperimentArg::HeteroRows | ExperimentArg::HeteroGrid => {
            let (name, profile) = match a.experiment {
                ExperimentArg::Homogeneous => ("homogeneous", ProfileArg::Homogeneous),
                ExperimentArg::HeteroRows => ("hetero_rows", ProfileArg::HeteroRows),
                _ => ("hetero_grid", ProfileArg::HeteroGrid),
            };
            let grid = parse_theta_grid(&a.theta_grid).map_err(|e| CliError::Usage(e.to_string()))?;
            let cfg = SweepConfig {
                n,
                p,
                trials: a.trials as usize,
                alpha: a.alpha,
                ..SweepConfig::new(
                    profile_spec(a.profile.unwrap_or(profile)),
                    a.seed,
                    a.runs as usize,
                    grid,
                )
            };
            let res: SweepResult = run_sweep(name, &cfg).map_err(compute_err)?;
            let mut csv = Vec::new();
            res.write_csv(&mut csv).map_err(io_err)?;
            write_file(&dir.join(format!("{name}.csv")), &csv)?;
            let text = report("simulate", Some(a.seed), &cfg, &res.rows, clock)?;
            write_file(&dir.join(format!("{name}.json")), text.as_bytes())?;
        }
        ExperimentArg::NoiseSv => {
            let profile = profile_spec(a.profile.unwrap_or(ProfileArg::HeteroRows));
            let samples = noise_sv_distributions(a.seed, a.runs as usize, &profile, n, p).map_err(compute_err)?;
            let mut csv = Vec::new();
            samples.write_csv(&mut csv).map_err(io_err)?;
            write_file(&dir.join("noise_sv.csv"), &csv)?;
            let config = json!({ "experiment": "noise_sv", "draws": a.runs, "n": n, "p": p, "profile": profile });
            let text = report("simulate", Some(a.seed), config, samples.summary(), clock)?;
            write_file(&dir.join("noise_sv.json"), text.as_bytes())?;
        }
        ExperimentArg::HomogenizationDemo => {
            let demo = homogenization_demo(a.seed, n, p).map_err(compute_err)?;
            let mut hist = Vec::new();
            demo.write_histograms(&mut hist, 60).map_err(io_err)?;
            write_file(&dir.join("homogenization_esd.csv"), &hist)?;
            for (name, law) in [("row_law", &demo.row_law), ("permuted_law", &demo.permuted_law)] {
                let mut buf = Vec::new();
                law.write_csv(&mut buf).map_err(io_err)?;
                write_file(&dir.join(format!("{name}.csv")), &buf)?;
            }
            let config = json!({ "experiment": "homogenization_demo", "n": n, "p": p, "profile": demo.profile });
            let result = json!({
                "ks": demo.ks,
                "row_law_upper_edge": demo.row_law.upper_edge,
                "permuted_law_upper_edge": demo.permuted_law.upper_edge,
                "row_law_h": demo.row_law.h,
                "permuted_law_h": demo.permuted_law.h,
            });
            let text = report("simulate", Some(a.seed), config, result, clock)?;
            write_file(&dir.join("homogenization_demo.json"), text.as_bytes())?;
        }
    }
    Ok(())
}

fn law(a: &LawArgs, clock: &Clock) -> Result<(), CliError> {
    let kind = match a.law {
        LawArg::Row => LawKind::RowVarianceLaw,
        LawArg::Permuted => LawKind::PermutedColumnLaw,
    };
    let grid = a
        .grid
        .as_ref()
        .map(|g| g.0.clone())
        .unwrap_or_else(|| default_grid(a.gamma, &a.atoms, 400));
    let span = grid[grid.len() - 1] - grid[0];
    let mut opts = InversionOptions {
        edge_threshold: a.threshold,
        ..InversionOptions::default()
    };
    if let Some(eps) = a.epsilon {
        opts.relative_epsilon = eps / span;
    }
    let law: SpectralLaw = density_by_inversion(kind, a.gamma, &a.atoms, &grid, &opts).map_err(compute_err)?;
    println!("{}", law.upper_edge);
    if let Some(path) = &a.output {
        let mut buf = Vec::new();
        law.write_csv(&mut buf).map_err(io_err)?;
        write_file(path, &buf)?;
    }
    if let Some(path) = &a.json {
        let config = json!({
            "law": kind,
            "gamma": a.gamma,
            "atoms": a.atoms.to_string(),
            "epsilon": law.epsilon,
            "threshold": a.threshold,
            "grid_points": grid.len(),
        });
        let result = json!({
            "upper_edge": law.upper_edge,
            "singular_upper_edge": law.singular_upper_edge(),
            "law": law,
        });
        write_file(path, report("law", None, config, result, clock)?.as_bytes())?;
    }
    Ok(())
}

fn diagnose(a: &DiagnoseArgs, clock: &Clock) -> Result<(), CliError> {
    let s = load(&a.input)?;
    let destruction = destruction_report(&s, a.k).map_err(compute_err)?;
    let flip = a
        .flip_trials
        .map(|t| monte_carlo_flip_norm(&s, t as usize, SeedSpec::new(a.seed)))
        .transpose()
        .map_err(compute_err)?;
    let mut result = serde_json::to_value(&destruction).map_err(|e| CliError::Io(e.into()))?;
    if let Some(f) = flip {
        result["monte_carlo_flip_norm"] = serde_json::to_value(f).map_err(|e| CliError::Io(e.into()))?;
    }
    let config = json!({
        "data": input_echo(&a.input),
        "shape": [s.nrows(), s.ncols()],
        "k": a.k,
        "flip_trials": a.flip_trials,
    });
    let text = report("diagnose", Some(a.seed), config, result, clock)?;
    match &a.output {
        Some(path) => write_file(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
