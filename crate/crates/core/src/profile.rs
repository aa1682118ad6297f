//! Noise variance profiles: entry `(i, j)` of the noise has variance
//! `T_ij^2 / n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

/// Stores the squared profile `T^2` so that averages over rows or columns
/// are exact for the piecewise constant profiles used in experiments.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceProfile {
    variances: DataMatrix,
}

impl VarianceProfile {
    pub fn homogeneous(n: usize, p: usize, variance: f64) -> Self {
        assert!(
            variance >= 0.0 && variance.is_finite(),
            "variance must be finite and nonnegative"
        );
        Self {
            variances: DataMatrix::from_fn(n, p, |_, _| variance),
        }
    }

    /// Builds a profile from `T` (not `T^2`).
    pub fn from_t(t: &DataMatrix) -> Result<Self> {
        if t.as_slice().iter().any(|&v| v < 0.0) {
            return Err(Error::input("variance profile entries must be nonnegative"));
        }
        Ok(Self {
            variances: t.map(|v| v * v),
        })
    }

    pub fn from_variances(variances: DataMatrix) -> Result<Self> {
        if variances.as_slice().iter().any(|&v| v < 0.0) {
            return Err(Error::input("variances must be nonnegative"));
        }
        Ok(Self { variances })
    }

    /// Rows are split into consecutive blocks of the given fractions, each
    /// sharing one variance. Block boundaries round the cumulative fraction.
    pub fn row_blocks(n: usize, p: usize, blocks: &[(f64, f64)]) -> Result<Self> {
        let bounds = block_bounds(n, blocks)?;
        let mut row_var = vec![0.0; n];
        for (k, w) in bounds.windows(2).enumerate() {
            row_var[w[0]..w[1]].fill(blocks[k].1);
        }
        Ok(Self {
            variances: DataMatrix::from_fn(n, p, |i, _| row_var[i]),
        })
    }

    pub fn feature_sample_grid(n: usize, p: usize, grid: &FeatureSampleGrid) -> Result<Self> {
        grid.validate()?;
        let split_cols = (grid.feature_fraction * p as f64).round() as usize;
        let split_rows = (grid.sample_fraction * n as f64).round() as usize;
        Ok(Self {
            variances: DataMatrix::from_fn(n, p, |i, j| {
                if j >= split_cols {
                    grid.other_variance
                } else if i < split_rows {
                    grid.first_variance
                } else {
                    grid.second_variance
                }
            }),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.variances.shape()
    }

    /// `T_ij^2`.
    pub fn variance(&self, i: usize, j: usize) -> f64 {
        self.variances.get(i, j)
    }

    /// `T_ij`.
    pub fn t(&self, i: usize, j: usize) -> f64 {
        self.variances.get(i, j).sqrt()
    }

    pub fn variances(&self) -> &DataMatrix {
        &self.variances
    }

    /// `(1/n) sum_i T_ij^2` for each column.
    pub fn column_mean_squares(&self) -> Vec<f64> {
        let (n, p) = self.shape();
        let mut out = vec![0.0; p];
        for row in self.variances.rows() {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|v| *v /= n as f64);
        out
    }

    /// `(1/p) sum_j T_ij^2` for each row.
    pub fn row_mean_squares(&self) -> Vec<f64> {
        let p = self.shape().1 as f64;
        self.variances.rows().map(|r| r.iter().sum::<f64>() / p).collect()
    }

    /// Profile whose every column is replaced by its mean square.
    pub fn homogenized(&self) -> Self {
        let cols = self.column_mean_squares();
        let (n, p) = self.shape();
        Self {
            variances: DataMatrix::from_fn(n, p, |_, j| cols[j]),
        }
    }
}

fn block_bounds(n: usize, blocks: &[(f64, f64)]) -> Result<Vec<usize>> {
    if blocks.is_empty() {
        return Err(Error::input("at least one block is required"));
    }
    let mut total = 0.0;
    let mut bounds = vec![0];
    for &(frac, var) in blocks {
        if !(frac >= 0.0) || !(var >= 0.0) || !var.is_finite() {
            return Err(Error::input(format!("invalid block ({frac}, {var})")));
        }
        total += frac;
        bounds.push(((total * n as f64).round() as usize).min(n));
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::input(format!("block fractions sum to {total}, expected 1")));
    }
    *bounds.last_mut().unwrap() = n;
    Ok(bounds)
}

/// Profile varying in both samples and features: the first
/// `feature_fraction` of columns take `first_variance` on the first
/// `sample_fraction` of rows and `second_variance` on the rest; the
/// remaining columns take `other_variance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSampleGrid {
    pub feature_fraction: f64,
    pub sample_fraction: f64,
    pub first_variance: f64,
    pub second_variance: f64,
    pub other_variance: f64,
}

impl Default for FeatureSampleGrid {
    /// 80% of features at 0.5 / 1.5 split by sample halves, 20% at 1.
    fn default() -> Self {
        Self {
            feature_fraction: 0.8,
            sample_fraction: 0.5,
            first_variance: 0.5,
            second_variance: 1.5,
            other_variance: 1.0,
        }
    }
}

impl FeatureSampleGrid {
    fn validate(&self) -> Result<()> {
        let fracs = [self.feature_fraction, self.sample_fraction];
        let vars = [self.first_variance, self.second_variance, self.other_variance];
        if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) || vars.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::input("invalid feature/sample grid"));
        }
        Ok(())
    }
}

/// Declarative profile description, resolved against a shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSpec {
    Homogeneous(f64),
    RowBlocks(Vec<(f64, f64)>),
    FeatureSampleGrid(FeatureSampleGrid),
    /// `T` itself, not its square.
    #[serde(skip)]
    Custom(DataMatrix),
}

impl ProfileSpec {
    /// 90% of samples at variance 0.4, 10% at 1.
    pub fn hetero_rows() -> Self {
        ProfileSpec::RowBlocks(vec![(0.9, 0.4), (0.1, 1.0)])
    }

    /// Half the samples at variance 0.1, half at 0.9.
    pub fn half_split_rows() -> Self {
        ProfileSpec::RowBlocks(vec![(0.5, 0.1), (0.5, 0.9)])
    }

    pub fn build(&self, n: usize, p: usize) -> Result<VarianceProfile> {
        if n == 0 || p == 0 {
            return Err(Error::input("profile shape must be positive"));
        }
        match self {
            ProfileSpec::Homogeneous(v) => {
                if !(*v >= 0.0) || !v.is_finite() {
                    return Err(Error::input(format!("invalid variance {v}")));
                }
                Ok(VarianceProfile::homogeneous(n, p, *v))
            }
            ProfileSpec::RowBlocks(blocks) => VarianceProfile::row_blocks(n, p, blocks),
            ProfileSpec::FeatureSampleGrid(g) => VarianceProfile::feature_sample_grid(n, p, g),
            ProfileSpec::Custom(t) => {
                if t.shape() != (n, p) {
                    return Err(Error::Shape {
                        expected: (n, p),
                        found: t.shape(),
                    });
                }
                VarianceProfile::from_t(t)
            }
        }
    }
}
