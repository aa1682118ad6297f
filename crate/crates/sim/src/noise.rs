//! Distribution of the leading noise singular value before and after
//! signflipping or column permutation.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sfpa_core::matrix::{spectrum, SvdMethod};
use sfpa_core::pa::NullMethod;
use sfpa_core::random::{gen_noise, NoiseDist, SeedSpec};
use sfpa_core::stats::{mean_stderr, two_sample_z};
use sfpa_core::{Error, ProfileSpec, Result};

use crate::sweep::to_error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSvSamples {
    pub profile: ProfileSpec,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    /// `sigma_1(N)` per trial.
    pub original: Vec<f64>,
    /// `sigma_1` of the column-permuted noise.
    pub permuted: Vec<f64>,
    /// `sigma_1(R o N)`.
    pub signflipped: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSvSummary {
    pub original: ArmSummary,
    pub permuted: ArmSummary,
    pub signflipped: ArmSummary,
    /// `(mean original - mean permuted) / combined stderr`.
    pub permuted_z: f64,
    /// `(mean signflipped - mean original) / combined stderr`.
    pub signflipped_z: f64,
}

pub fn noise_sv_distributions(
    seed: u64,
    trials: usize,
    profile: &ProfileSpec,
    n: usize,
    p: usize,
) -> Result<NoiseSvSamples> {
    if trials < 10 {
        return Err(Error::Input("at least 10 trials are required".into()));
    }
    let prof = profile.build(n, p)?;
    let draws = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = SeedSpec::new(seed).child(t);
            let noise = gen_noise(s.child(0), &prof, NoiseDist::Gaussian);
            let lead = |m| spectrum(&m, SvdMethod::Gram).map(|sv| sv.leading());
            let original = lead(noise.clone())?;
            let permuted = lead(NullMethod::Permutation.null_matrix(&noise, s.child(1))?)?;
            let flipped = lead(NullMethod::Signflip.null_matrix(&noise, s.child(2))?)?;
            Ok((original, permuted, flipped))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NoiseSvSamples {
        profile: profile.clone(),
        n,
        p,
        seed,
        original: draws.iter().map(|d| d.0).collect(),
        permuted: draws.iter().map(|d| d.1).collect(),
        signflipped: draws.iter().map(|d| d.2).collect(),
    })
}

impl NoiseSvSamples {
    pub fn summary(&self) -> NoiseSvSummary {
        let arm = |v: &[f64]| {
            let (mean, stderr) = mean_stderr(v);
            ArmSummary { mean, stderr }
        };
        NoiseSvSummary {
            original: arm(&self.original),
            permuted: arm(&self.permuted),
            signflipped: arm(&self.signflipped),
            permuted_z: two_sample_z(&self.permuted, &self.original),
            signflipped_z: two_sample_z(&self.original, &self.signflipped),
        }
    }

    /// Columns `trial, original, permuted, signflipped`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["trial", "original", "permuted", "signflipped"])
            .map_err(to_error)?;
        for (t, ((o, pm), s)) in self
            .original
            .iter()
            .zip(&self.permuted)
            .zip(&self.signflipped)
            .enumerate()
        {
            w.write_record([t.to_string(), o.to_string(), pm.to_string(), s.to_string()])
                .map_err(to_error)?;
        }
        w.flush()?;
        Ok(())
    }
}
