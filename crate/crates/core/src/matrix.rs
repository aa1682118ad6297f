//! Dense matrices, the matrix norms used throughout the crate, singular value
//! computation and empirical spectral distributions.

use faer::{MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real `n x p` matrix (samples by features), stored row-major.
///
/// All entries are finite; every constructor checks this.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl DataMatrix {
    pub fn from_row_major(n: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::input(format!("matrix must be non-empty, got {n}x{p}")));
        }
        if data.len() != n * p {
            return Err(Error::input(format!(
                "expected {} entries for a {n}x{p} matrix, got {}",
                n * p,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite entry {} at ({}, {})",
                data[pos],
                pos / p,
                pos % p
            )));
        }
        Ok(Self { n, p, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * p);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != p {
                return Err(Error::input(format!("row {i} has {} entries, expected {p}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(n, p, data)
    }

    /// Builds a matrix from an index function.
    ///
    /// Panics if the shape is empty or `f` yields a non-finite value.
    pub fn from_fn(n: usize, p: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * p);
        for i in 0..n {
            for j in 0..p {
                data.push(f(i, j));
            }
        }
        Self::from_row_major(n, p, data).expect("from_fn requires a non-empty shape and finite entries")
    }

    pub fn zeros(n: usize, p: usize) -> Self {
        Self::from_fn(n, p, |_, _| 0.0)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// `theta * u v^T`.
    pub fn outer(theta: f64, u: &[f64], v: &[f64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| theta * u[i] * v[j])
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.p
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.p)
    }

    /// Aspect ratio `p / n`.
    pub fn aspect_ratio(&self) -> f64 {
        self.p as f64 / self.n as f64
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.p + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.p)
    }

    pub fn as_faer(&self) -> MatRef<'_, f64> {
        MatRef::from_row_major_slice(&self.data, self.n, self.p)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.p, self.n, |i, j| self.get(j, i))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(self.n, self.p, |i, j| f(self.get(i, j)))
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self::from_row_major(self.n, self.p, data)
    }

    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect();
        Self::from_row_major(self.n, self.p, data)
    }

    pub(crate) fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape {
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(())
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Row-permutes and column-permutes; used by invariance tests.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Result<Self> {
        if row_perm.len() != self.n || col_perm.len() != self.p {
            return Err(Error::input("permutation length does not match matrix shape"));
        }
        Ok(Self::from_fn(self.n, self.p, |i, j| self.get(row_perm[i], col_perm[j])))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Maximum absolute value of each row.
    pub fn row_max_abs(&self) -> Vec<f64> {
        self.rows()
            .map(|r| r.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
            .collect()
    }

    /// Maximum absolute value of each column.
    pub fn col_max_abs(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.p];
        for r in self.rows() {
            for (o, v) in out.iter_mut().zip(r) {
                *o = o.max(v.abs());
            }
        }
        out
    }

    /// Euclidean norm of each column.
    pub fn col_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.p];
        for r in self.rows() {
            for (o, v) in out.iter_mut().zip(r) {
                *o += v * v;
            }
        }
        out.into_iter().map(f64::sqrt).collect()
    }

    /// Euclidean norm of each row.
    pub fn row_norms(&self) -> Vec<f64> {
        self.rows()
            .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }
}

/// Descending singular values of a matrix with the source shape attached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularSpectrum {
    pub values: Vec<f64>,
    pub n: usize,
    pub p: usize,
}

impl SingularSpectrum {
    pub fn new(mut values: Vec<f64>, n: usize, p: usize) -> Self {
        for v in values.iter_mut() {
            *v = v.max(0.0);
        }
        // stable, so exact ties keep their order
        values.sort_by(|a, b| b.total_cmp(a));
        Self { values, n, p }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn leading(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn sum_squares(&self) -> f64 {
        self.values.iter().map(|s| s * s).sum()
    }

    pub fn esd(&self, kind: SpectrumKind) -> EmpiricalSpectralDistribution {
        EmpiricalSpectralDistribution::from_spectrum(self, kind)
    }
}

/// How singular values are computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvdMethod {
    /// Bidiagonalization-based SVD. Accurate for every singular value.
    #[default]
    Bidiagonal,
    /// Eigenvalues of the smaller Gram matrix. Roughly twice as fast; absolute
    /// error in `sigma_k^2` is of order `eps * sigma_1^2`, so tiny singular
    /// values lose relative accuracy.
    Gram,
}

/// Full set of `min(n, p)` singular values, descending.
pub fn singular_values(x: &DataMatrix) -> Result<SingularSpectrum> {
    spectrum(x, SvdMethod::Bidiagonal)
}

pub fn spectrum(x: &DataMatrix, method: SvdMethod) -> Result<SingularSpectrum> {
    let a = x.as_faer();
    let values = match method {
        SvdMethod::Bidiagonal => a
            .singular_values()
            .map_err(|e| Error::Decomposition(format!("{e:?}")))?,
        SvdMethod::Gram => {
            let gram = if x.p <= x.n {
                a.transpose() * a
            } else {
                a * a.transpose()
            };
            gram.self_adjoint_eigenvalues(Side::Lower)
                .map_err(|e| Error::Decomposition(format!("{e:?}")))?
                .into_iter()
                .map(|l| l.max(0.0).sqrt())
                .collect()
        }
    };
    Ok(SingularSpectrum::new(values, x.n, x.p))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LeadingMethod {
    Full,
    /// Power iteration on `X^T X`, stopped once the eigen-residual
    /// `||X^T X v - lambda v|| <= tol * lambda`.
    Iterative {
        tol: f64,
        max_iter: usize,
    },
}

impl LeadingMethod {
    pub fn iterative() -> Self {
        LeadingMethod::Iterative {
            tol: 1e-10,
            max_iter: 5000,
        }
    }
}

/// Operator norm `sigma_1(X)`.
pub fn leading_singular_value(x: &DataMatrix, method: LeadingMethod) -> Result<f64> {
    match method {
        LeadingMethod::Full => Ok(singular_values(x)?.leading()),
        LeadingMethod::Iterative { tol, max_iter } => {
            if !(tol > 0.0) {
                return Err(Error::input("iterative tolerance must be positive"));
            }
            power_iteration(x, tol, max_iter)
        }
    }
}

fn power_iteration(x: &DataMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    let (n, p) = x.shape();
    // Deterministic start with no special alignment to any coordinate axis.
    let mut v: Vec<f64> = (0..p).map(|j| 1.0 + (j as f64 * 0.618_033_988_75).fract()).collect();
    normalize(&mut v);
    let mut xv = vec![0.0; n];
    let mut w = vec![0.0; p];
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        mat_vec(x, &v, &mut xv);
        mat_t_vec(x, &xv, &mut w);
        lambda = dot(&v, &w);
        if lambda <= 0.0 {
            // X v = 0 for a unit v in the row space implies X = 0 there.
            return Ok(0.0);
        }
        residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - lambda * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol * lambda {
            return Ok(lambda.sqrt());
        }
        v.copy_from_slice(&w);
        normalize(&mut v);
    }
    Err(Error::NotConverged {
        what: "power iteration",
        iterations: max_iter,
        last: lambda.max(0.0).sqrt(),
        residual,
    })
}

fn mat_vec(x: &DataMatrix, v: &[f64], out: &mut [f64]) {
    for (o, r) in out.iter_mut().zip(x.rows()) {
        *o = dot(r, v);
    }
}

fn mat_t_vec(x: &DataMatrix, u: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for (ui, r) in u.iter().zip(x.rows()) {
        for (o, a) in out.iter_mut().zip(r) {
            *o += ui * a;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn normalize(v: &mut [f64]) -> f64 {
    let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    nrm
}

/// Matrix norms. `Entrywise(k)` and `InfInf` are entrywise norms; `Induced1`
/// and `InducedInf` are the operator norms induced by the vector 1- and
/// inf-norms; `TwoInf` is the largest column Euclidean norm and
/// `TwoInfTranspose` the largest row Euclidean norm; `TwoK(k)` is the
/// `l_k` norm of the column Euclidean norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Operator,
    Frobenius,
    Induced1,
    InducedInf,
    Entrywise(f64),
    TwoInf,
    TwoInfTranspose,
    InfInf,
    TwoK(f64),
    Schatten(f64),
}

pub fn norm(x: &DataMatrix, which: NormKind) -> Result<f64> {
    let check_k = |k: f64| {
        if k >= 1.0 && k.is_finite() {
            Ok(k)
        } else {
            Err(Error::input(format!("norm order must be a finite real >= 1, got {k}")))
        }
    };
    Ok(match which {
        NormKind::Operator => singular_values(x)?.leading(),
        NormKind::Frobenius => x.frobenius_sq().sqrt(),
        NormKind::Induced1 => {
            let mut sums = vec![0.0f64; x.p];
            for r in x.rows() {
                for (s, v) in sums.iter_mut().zip(r) {
                    *s += v.abs();
                }
            }
            max_of(&sums)
        }
        NormKind::InducedInf => x
            .rows()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max),
        NormKind::Entrywise(k) => {
            let k = check_k(k)?;
            x.data.iter().map(|v| v.abs().powf(k)).sum::<f64>().powf(1.0 / k)
        }
        NormKind::TwoInf => max_of(&x.col_norms()),
        NormKind::TwoInfTranspose => max_of(&x.row_norms()),
        NormKind::InfInf => x.max_abs(),
        NormKind::TwoK(k) => {
            let k = check_k(k)?;
            x.col_norms().iter().map(|c| c.powf(k)).sum::<f64>().powf(1.0 / k)
        }
        NormKind::Schatten(k) => {
            let k = check_k(k)?;
            singular_values(x)?
                .values
                .iter()
                .map(|s| s.powf(k))
                .sum::<f64>()
                .powf(1.0 / k)
        }
    })
}

pub(crate) fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Singular,
    /// Eigenvalues of the `p x p` Gram matrix `X^T X`; zero-padded to `p`
    /// points when `n < p`.
    Eigenvalue,
}

/// Uniform distribution on a set of spectral points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSpectralDistribution {
    points: Vec<f64>,
    pub kind: SpectrumKind,
}

impl EmpiricalSpectralDistribution {
    pub fn from_points(mut points: Vec<f64>, kind: SpectrumKind) -> Self {
        points.sort_by(f64::total_cmp);
        Self { points, kind }
    }

    pub fn from_spectrum(s: &SingularSpectrum, kind: SpectrumKind) -> Self {
        let points = match kind {
            SpectrumKind::Singular => s.values.clone(),
            SpectrumKind::Eigenvalue => {
                let mut pts: Vec<f64> = s.values.iter().map(|v| v * v).collect();
                pts.resize(pts.len().max(s.p), 0.0);
                pts
            }
        };
        Self::from_points(points, kind)
    }

    /// Sorted ascending.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Right-continuous step CDF `(1/len) #{points <= x}`.
    pub fn cdf(&self, x: f64) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        self.points.partition_point(|&v| v <= x) as f64 / self.points.len() as f64
    }

    /// Counts per bin `[edges[b], edges[b+1])`, the last bin closed.
    pub fn histogram(&self, edges: &[f64]) -> Result<Vec<usize>> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::input(
                "histogram edges must be strictly increasing with at least two entries",
            ));
        }
        let nb = edges.len() - 1;
        let mut counts = vec![0usize; nb];
        for &x in &self.points {
            if x < edges[0] || x > edges[nb] {
                continue;
            }
            let b = edges.partition_point(|&e| e <= x).saturating_sub(1).min(nb - 1);
            counts[b] += 1;
        }
        Ok(counts)
    }

    /// Kolmogorov-Smirnov distance `sup_x |F_n(x) - G(x)|` to a continuous CDF.
    pub fn ks_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let m = self.points.len() as f64;
        let mut d: f64 = 0.0;
        for (i, &x) in self.points.iter().enumerate() {
            let g = cdf(x);
            d = d.max((g - i as f64 / m).abs()).max(((i + 1) as f64 / m - g).abs());
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, p: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DataMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn rejects_non_finite() {
        assert!(DataMatrix::from_row_major(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DataMatrix::from_row_major(1, 1, vec![f64::INFINITY]).is_err());
        assert!(DataMatrix::from_row_major(0, 1, vec![]).is_err());
    }

    #[test]
    fn diagonal_singular_values() {
        let x = DataMatrix::from_rows(&[[3.0, 0.0], [0.0, 4.0]]).unwrap();
        let s = singular_values(&x).unwrap();
        assert_relative_eq!(s.values[0], 4.0, max_relative = 1e-12);
        assert_relative_eq!(s.values[1], 3.0, max_relative = 1e-12);
    }

    #[test]
    fn rank_one_singular_values() {
        let u = [0.6, 0.8, 0.0];
        let v = [0.0, 1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt(), 0.0];
        let x = DataMatrix::outer(2.0, &u, &v);
        let s = singular_values(&x).unwrap();
        assert_eq!(s.len(), 3);
        assert_relative_eq!(s.values[0], 2.0, max_relative = 1e-12);
        assert!(s.values[1..].iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn frobenius_identity() {
        let x = random(5, 3, 7);
        let s = singular_values(&x).unwrap();
        assert_relative_eq!(s.sum_squares(), x.frobenius_sq(), max_relative = 1e-8);
        assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn gram_path_matches_bidiagonal() {
        for (n, p) in [(40, 25), (25, 40), (30, 30)] {
            let x = random(n, p, (n * p) as u64);
            let a = spectrum(&x, SvdMethod::Bidiagonal).unwrap();
            let b = spectrum(&x, SvdMethod::Gram).unwrap();
            assert_eq!(a.len(), b.len());
            let top = a.leading();
            for (sa, sb) in a.values.iter().zip(&b.values) {
                // absolute error in sigma^2 is ~eps * sigma_1^2
                assert!((sa * sa - sb * sb).abs() <= 1e-12 * top * top, "{sa} vs {sb}");
            }
        }
    }

    #[test]
    fn leading_value_examples() {
        let iter = LeadingMethod::iterative();
        assert_relative_eq!(
            leading_singular_value(&DataMatrix::identity(3), LeadingMethod::Full).unwrap(),
            1.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            leading_singular_value(&DataMatrix::identity(3), iter).unwrap(),
            1.0,
            max_relative = 1e-10
        );
        let d = DataMatrix::from_rows(&[[3.0, 0.0], [0.0, 4.0]]).unwrap();
        assert_relative_eq!(leading_singular_value(&d, iter).unwrap(), 4.0, max_relative = 1e-9);
        assert_eq!(leading_singular_value(&DataMatrix::zeros(3, 2), iter).unwrap(), 0.0);
    }

    #[test]
    fn power_iteration_against_full_svd() {
        let x = random(50, 30, 11);
        let full = leading_singular_value(&x, LeadingMethod::Full).unwrap();
        let it = leading_singular_value(
            &x,
            LeadingMethod::Iterative {
                tol: 1e-8,
                max_iter: 5000,
            },
        )
        .unwrap();
        assert!((it - full).abs() <= 1e-6, "{it} vs {full}");
    }

    #[test]
    fn power_iteration_reports_last_iterate() {
        let x = random(50, 30, 12);
        match leading_singular_value(
            &x,
            LeadingMethod::Iterative {
                tol: 1e-14,
                max_iter: 3,
            },
        ) {
            Err(Error::NotConverged { last, iterations, .. }) => {
                assert_eq!(iterations, 3);
                assert!(last > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
        assert!(leading_singular_value(&x, LeadingMethod::Iterative { tol: 0.0, max_iter: 3 }).is_err());
    }

    #[test]
    fn norm_examples() {
        // ||theta u v^T||_{2,inf} = theta ||v||_inf
        let x = DataMatrix::outer(2.0, &[0.6, 0.8], &[1.0, 0.0]);
        assert_relative_eq!(norm(&x, NormKind::TwoInf).unwrap(), 2.0, max_relative = 1e-12);
        let i2 = DataMatrix::identity(2);
        assert_relative_eq!(norm(&i2, NormKind::Frobenius).unwrap(), 2f64.sqrt());
        assert_eq!(norm(&i2, NormKind::InfInf).unwrap(), 1.0);
        assert!(norm(&i2, NormKind::Entrywise(0.5)).is_err());
        assert!(norm(&i2, NormKind::Schatten(f64::INFINITY)).is_err());
    }

    #[test]
    fn norm_definitions() {
        let x = DataMatrix::from_rows(&[[1.0, -2.0, 0.0], [3.0, 0.5, -1.0]]).unwrap();
        assert_eq!(norm(&x, NormKind::Induced1).unwrap(), 4.0);
        assert_eq!(norm(&x, NormKind::InducedInf).unwrap(), 4.5);
        assert_eq!(norm(&x, NormKind::InfInf).unwrap(), 3.0);
        assert_relative_eq!(norm(&x, NormKind::TwoInf).unwrap(), 10f64.sqrt());
        assert_relative_eq!(norm(&x, NormKind::TwoInfTranspose).unwrap(), 10.25f64.sqrt());
        assert_relative_eq!(
            norm(&x, NormKind::Entrywise(2.0)).unwrap(),
            norm(&x, NormKind::Frobenius).unwrap(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            norm(&x, NormKind::Schatten(2.0)).unwrap(),
            norm(&x, NormKind::Frobenius).unwrap(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            norm(&x, NormKind::TwoK(2.0)).unwrap(),
            norm(&x, NormKind::Frobenius).unwrap(),
            max_relative = 1e-14
        );
        let ek1: f64 = x.as_slice().iter().map(|v| v.abs()).sum();
        assert_relative_eq!(norm(&x, NormKind::Entrywise(1.0)).unwrap(), ek1, max_relative = 1e-14);
    }

    #[test]
    fn operator_norm_bounded_by_induced_norms() {
        for seed in 0..10 {
            let x = random(4, 6, 100 + seed);
            let op = norm(&x, NormKind::Operator).unwrap();
            let bound = norm(&x, NormKind::Induced1).unwrap() * norm(&x, NormKind::InducedInf).unwrap();
            assert!(op * op <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn esd_examples() {
        let s = SingularSpectrum::new(vec![1.0, 3.0, 2.0], 3, 3);
        let e = s.esd(SpectrumKind::Singular);
        assert_relative_eq!(e.cdf(2.0), 2.0 / 3.0);
        assert_eq!(e.cdf(0.5), 0.0);
        assert_eq!(e.cdf(3.0), 1.0);
        assert_eq!(e.histogram(&[0.0, 1.5, 3.0]).unwrap(), vec![1, 2]);
        assert!(e.histogram(&[1.0]).is_err());
    }

    #[test]
    fn eigenvalue_esd_pads_to_feature_count() {
        let s = SingularSpectrum::new(vec![2.0, 1.0], 2, 4);
        let e = s.esd(SpectrumKind::Eigenvalue);
        assert_eq!(e.points(), &[0.0, 0.0, 1.0, 4.0]);
        assert_eq!(e.cdf(0.0), 0.5);
    }

    #[test]
    fn ks_distance_of_uniform_grid() {
        let pts: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let e = EmpiricalSpectralDistribution::from_points(pts, SpectrumKind::Singular);
        let d = e.ks_distance(|x| x.clamp(0.0, 1.0));
        assert_relative_eq!(d, 0.005, max_relative = 1e-9);
    }
}
