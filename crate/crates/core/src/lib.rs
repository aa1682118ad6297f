//! Signflip and permutation parallel analysis, limiting spectral laws for
//! noise with a variance profile, and signal-destruction diagnostics.

// Negated comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod io;
pub mod law;
pub mod matrix;
pub mod pa;
pub mod profile;
pub mod random;
pub mod stats;

pub use diagnostics::{
    classify_rate_regime, decay_coefficient, destruction_report, factor_loading_check, monte_carlo_flip_norm,
    outer_product_condition, perceptibility, DestructionReport, FlipNormEstimate, Perceptibility,
    PerceptibilityVerdict, RateRegime, Verdict,
};
pub use error::{Error, Result};
pub use io::{apply_preprocess, read_matrix_csv, CsvOptions, MaskedMatrix, Preprocess, PreprocessStep};
pub use law::{
    density_by_inversion, solve_stieltjes_permuted_law, solve_stieltjes_row_law, upper_edge, InversionOptions, LawKind,
    MixtureH, SolverOptions, SpectralLaw, StieltjesSolution,
};
pub use matrix::{
    leading_singular_value, norm, singular_values, spectrum, DataMatrix, EmpiricalSpectralDistribution, LeadingMethod,
    NormKind, SingularSpectrum, SpectrumKind, SvdMethod,
};
pub use pa::{percentile, run_pa, run_pa_given_nulls, Comparison, NullMethod, PaConfig, SelectionResult};
pub use profile::{FeatureSampleGrid, ProfileSpec, VarianceProfile};
pub use random::{
    gen_column_permutation, gen_rademacher, gen_spike_model, permute_columns, signflip, ColumnPermutation, NoiseDist,
    RademacherMatrix, SeedSpec, SpikeModel,
};
