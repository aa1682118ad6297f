//! Column permutation homogenizes a row variance profile: its spectrum
//! follows the law of the column mean squares instead of the row law that
//! both the original and the signflipped noise follow.

use std::io::Write;

use serde::{Deserialize, Serialize};

use sfpa_core::law::{default_grid, density_by_inversion, InversionOptions, LawKind, MixtureH, SpectralLaw};
use sfpa_core::matrix::{spectrum, EmpiricalSpectralDistribution, SpectrumKind, SvdMethod};
use sfpa_core::pa::NullMethod;
use sfpa_core::random::{gen_noise, NoiseDist, SeedSpec};
use sfpa_core::{ProfileSpec, Result};

use crate::sweep::to_error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsDistances {
    pub noise_vs_row_law: f64,
    pub signflipped_vs_row_law: f64,
    pub permuted_vs_permuted_law: f64,
    pub permuted_vs_row_law: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogenizationDemo {
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub profile: ProfileSpec,
    /// Eigenvalue ESDs of `N^T N`, `(R o N)^T (R o N)` and `N_pi^T N_pi`.
    pub noise: EmpiricalSpectralDistribution,
    pub signflipped: EmpiricalSpectralDistribution,
    pub permuted: EmpiricalSpectralDistribution,
    pub row_law: SpectralLaw,
    pub permuted_law: SpectralLaw,
    pub ks: KsDistances,
}

/// Grid resolution of the solved densities.
const GRID_POINTS: usize = 800;

pub fn homogenization_demo(seed: u64, n: usize, p: usize) -> Result<HomogenizationDemo> {
    homogenization_demo_with(seed, n, p, &ProfileSpec::half_split_rows())
}

pub fn homogenization_demo_with(seed: u64, n: usize, p: usize, profile: &ProfileSpec) -> Result<HomogenizationDemo> {
    let prof = profile.build(n, p)?;
    let s = SeedSpec::new(seed);
    let noise = gen_noise(s.child(0), &prof, NoiseDist::Gaussian);
    let signflipped = NullMethod::Signflip.null_matrix(&noise, s.child(1))?;
    let permuted = NullMethod::Permutation.null_matrix(&noise, s.child(2))?;
    let esd = |m| -> Result<EmpiricalSpectralDistribution> {
        Ok(spectrum(&m, SvdMethod::Bidiagonal)?.esd(SpectrumKind::Eigenvalue))
    };
    let (noise, signflipped, permuted) = (esd(noise)?, esd(signflipped)?, esd(permuted)?);

    let gamma = p as f64 / n as f64;
    let h_rows = MixtureH::row_variances(&prof)?;
    let h_cols = MixtureH::column_mean_squares(&prof)?;
    let grid = default_grid(gamma, &h_rows, GRID_POINTS);
    let opts = InversionOptions::default();
    let row_law = density_by_inversion(LawKind::RowVarianceLaw, gamma, &h_rows, &grid, &opts)?;
    let permuted_law = density_by_inversion(LawKind::PermutedColumnLaw, gamma, &h_cols, &grid, &opts)?;

    let ks = KsDistances {
        noise_vs_row_law: noise.ks_distance(|x| row_law.cdf(x)),
        signflipped_vs_row_law: signflipped.ks_distance(|x| row_law.cdf(x)),
        permuted_vs_permuted_law: permuted.ks_distance(|x| permuted_law.cdf(x)),
        permuted_vs_row_law: permuted.ks_distance(|x| row_law.cdf(x)),
    };
    Ok(HomogenizationDemo {
        n,
        p,
        seed,
        profile: profile.clone(),
        noise,
        signflipped,
        permuted,
        row_law,
        permuted_law,
        ks,
    })
}

impl HomogenizationDemo {
    /// Histogram counts of the three ESDs on `bins` equal bins spanning
    /// `[0, max eigenvalue]`. Columns `lo, hi, noise, signflipped, permuted`.
    pub fn write_histograms<W: Write>(&self, writer: W, bins: usize) -> Result<()> {
        let top = [&self.noise, &self.signflipped, &self.permuted]
            .iter()
            .filter_map(|e| e.points().last().copied())
            .fold(0.0, f64::max);
        let top = if top > 0.0 { top } else { 1.0 };
        let edges: Vec<f64> = (0..=bins).map(|k| top * k as f64 / bins as f64).collect();
        let counts = [
            self.noise.histogram(&edges)?,
            self.signflipped.histogram(&edges)?,
            self.permuted.histogram(&edges)?,
        ];
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["lo", "hi", "noise", "signflipped", "permuted"])
            .map_err(to_error)?;
        for k in 0..bins {
            w.write_record([
                edges[k].to_string(),
                edges[k + 1].to_string(),
                counts[0][k].to_string(),
                counts[1][k].to_string(),
                counts[2][k].to_string(),
            ])
            .map_err(to_error)?;
        }
        w.flush()?;
        Ok(())
    }
}
