//! Seeded generation of signflip and permutation nulls and of the
//! signal-plus-noise models used in simulations.
//!
//! Every random quantity is drawn from a [`SeedSpec`]: a master seed plus a
//! stream id. Streams map onto ChaCha8 stream numbers, so two different
//! stream ids never share key-stream blocks and a given `(master, stream)`
//! pair always reproduces the same draws, whichever thread consumes it.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{normalize, DataMatrix};
use crate::profile::VarianceProfile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            stream_id: 0,
        }
    }

    pub fn with_stream(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    /// Derives the sub-stream tagged `tag`, e.g. a trial or run index.
    pub fn child(&self, tag: u64) -> Self {
        Self {
            master_seed: self.master_seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(tag.wrapping_add(0x5851_F42D_4C95_7F2D))),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Matrix of i.i.d. uniform `+1`/`-1` signs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RademacherMatrix {
    n: usize,
    p: usize,
    signs: Vec<i8>,
}

impl RademacherMatrix {
    pub fn from_signs(n: usize, p: usize, signs: Vec<i8>) -> Result<Self> {
        if signs.len() != n * p {
            return Err(Error::input("sign count does not match shape"));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::input("Rademacher entries must be +1 or -1"));
        }
        Ok(Self { n, p, signs })
    }

    pub fn constant(n: usize, p: usize, sign: i8) -> Result<Self> {
        Self::from_signs(n, p, vec![sign; n * p])
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.p)
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }
}

pub fn gen_rademacher(seed: SeedSpec, n: usize, p: usize) -> RademacherMatrix {
    let mut rng = seed.rng();
    let mut signs = Vec::with_capacity(n * p);
    while signs.len() < n * p {
        let bits = rng.next_u64();
        let take = (n * p - signs.len()).min(64);
        signs.extend((0..take).map(|b| if (bits >> b) & 1 == 1 { 1i8 } else { -1i8 }));
    }
    RademacherMatrix { n, p, signs }
}

/// `R o X`.
pub fn signflip(x: &DataMatrix, r: &RademacherMatrix) -> Result<DataMatrix> {
    if x.shape() != r.shape() {
        return Err(Error::Shape {
            expected: x.shape(),
            found: r.shape(),
        });
    }
    let mut out = x.clone();
    for (v, &s) in out.data_mut().iter_mut().zip(&r.signs) {
        if s < 0 {
            *v = -*v;
        }
    }
    Ok(out)
}

/// One permutation of the row indices per column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnPermutation {
    n: usize,
    perms: Vec<Vec<usize>>,
}

impl ColumnPermutation {
    /// Validates that every entry of `perms` is a bijection on `0..n`.
    pub fn new(n: usize, perms: Vec<Vec<usize>>) -> Result<Self> {
        for (j, perm) in perms.iter().enumerate() {
            if perm.len() != n {
                return Err(Error::input(format!(
                    "permutation {j} has length {}, expected {n}",
                    perm.len()
                )));
            }
            let mut seen = vec![false; n];
            for &i in perm {
                if i >= n || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::input(format!("column {j} does not carry a valid permutation")));
                }
            }
        }
        Ok(Self { n, perms })
    }

    pub fn identity(n: usize, p: usize) -> Self {
        Self {
            n,
            perms: vec![(0..n).collect(); p],
        }
    }

    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }
}

pub fn gen_column_permutation(seed: SeedSpec, n: usize, p: usize) -> ColumnPermutation {
    let mut rng = seed.rng();
    let perms = (0..p)
        .map(|_| {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            perm
        })
        .collect();
    ColumnPermutation { n, perms }
}

/// Output entry `(i, j)` is `X[pi_j(i), j]`.
pub fn permute_columns(x: &DataMatrix, pi: &ColumnPermutation) -> Result<DataMatrix> {
    if pi.n != x.nrows() || pi.perms.len() != x.ncols() {
        return Err(Error::Shape {
            expected: x.shape(),
            found: (pi.n, pi.perms.len()),
        });
    }
    Ok(DataMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
        x.get(pi.perms[j][i], j)
    }))
}

/// Zero-mean, unit-variance entry distributions with sharp sub-Gaussian
/// Laplace transforms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDist {
    #[default]
    Gaussian,
    Rademacher,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    UniformPmSqrt3,
}

impl NoiseDist {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            NoiseDist::Gaussian => rng.sample(StandardNormal),
            NoiseDist::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseDist::UniformPmSqrt3 => rng.random_range(-3f64.sqrt()..3f64.sqrt()),
        }
    }
}

/// `N = n^{-1/2} (T o E)` with `E` i.i.d. from `dist`.
pub fn gen_noise(seed: SeedSpec, profile: &VarianceProfile, dist: NoiseDist) -> DataMatrix {
    let (n, p) = profile.shape();
    let mut rng = seed.rng();
    let scale = 1.0 / (n as f64).sqrt();
    DataMatrix::from_fn(n, p, |i, j| scale * profile.t(i, j) * dist.sample(&mut rng))
}

/// Uniform point on the unit sphere in `R^dim`.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if normalize(&mut v) > 0.0 {
            return v;
        }
    }
}

/// A draw of `X = S + N` with all parts kept for oracle checks.
#[derive(Clone, Debug)]
pub struct SpikeModel {
    pub x: DataMatrix,
    pub signal: DataMatrix,
    pub noise: DataMatrix,
    pub left: Vec<Vec<f64>>,
    pub right: Vec<Vec<f64>>,
}

/// `S = sum_i theta_i u_i v_i^T` with independent uniform unit vectors,
/// plus noise drawn from `profile`.
///
/// Signal and noise use separate sub-streams of `seed`, and the `i`-th
/// spike direction does not depend on how many strengths are passed, so a
/// sweep over `strengths` at a fixed seed reuses the same noise.
pub fn gen_spike_model(
    seed: SeedSpec,
    n: usize,
    p: usize,
    strengths: &[f64],
    profile: &VarianceProfile,
    dist: NoiseDist,
) -> Result<SpikeModel> {
    if profile.shape() != (n, p) {
        return Err(Error::Shape {
            expected: (n, p),
            found: profile.shape(),
        });
    }
    if let Some(t) = strengths.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::input(format!(
            "signal strengths must be finite and nonnegative, got {t}"
        )));
    }
    let noise = gen_noise(seed.child(0), profile, dist);
    let mut left = Vec::with_capacity(strengths.len());
    let mut right = Vec::with_capacity(strengths.len());
    let mut signal = DataMatrix::zeros(n, p);
    for (k, &theta) in strengths.iter().enumerate() {
        let mut rng = seed.child(1 + k as u64).rng();
        let u = unit_vector(&mut rng, n);
        let v = unit_vector(&mut rng, p);
        signal = signal.add(&DataMatrix::outer(theta, &u, &v))?;
        left.push(u);
        right.push(v);
    }
    let x = signal.add(&noise)?;
    Ok(SpikeModel {
        x,
        signal,
        noise,
        left,
        right,
    })
}

/// Leading singular value `sqrt((1 + theta^2)(gamma + theta^2)) / theta`
/// of a rank-one spike above the threshold `gamma^{1/4}` in unit-variance
/// noise; returns the bulk edge `1 + sqrt(gamma)` below it.
pub fn spike_singular_value_limit(theta: f64, gamma: f64) -> f64 {
    if theta <= gamma.powf(0.25) {
        1.0 + gamma.sqrt()
    } else {
        ((1.0 + theta * theta) * (gamma + theta * theta)).sqrt() / theta
    }
}
