//! Limiting spectral laws of `N^T N` for noise with a variance profile.
//!
//! Two laws are solved. The row-variance law covers noise whose rows carry
//! variances distributed as `H`: its Stieltjes transform `m` solves
//! `z + 1/m = int t / (1 + gamma t m) dH(t)`. The permuted-column law covers
//! column-permuted noise, where `H` is the distribution of column mean
//! squares and `m` solves
//! `1 + 1/(gamma(zm + 1) - 1) = int gamma t / (gamma t (zm + 1) + z - t) dH(t)`.
//! Both are solved through the common form
//! `m = -1 / (z - a int t / (1 + b t m) dH(t))`; the permuted law goes through
//! the companion transform of the `n x n` matrix `N N^T`.
//!
//! Densities are recovered by Stieltjes inversion,
//! `f(x) = Im m(x + i eps) / pi`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::VarianceProfile;

/// Finite mixture of point masses on `[0, inf)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureH {
    atoms: Vec<(f64, f64)>,
}

impl MixtureH {
    /// Weights must sum to 1 within `1e-9`; they are then renormalized.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::input("mixture needs at least one atom"));
        }
        for &(t, w) in &atoms {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::input(format!(
                    "atom location must be finite and nonnegative, got {t}"
                )));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::input(format!(
                    "atom weight must be finite and nonnegative, got {w}"
                )));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::input(format!("atom weights sum to {total}, expected 1")));
        }
        let atoms = atoms
            .into_iter()
            .filter(|a| a.1 > 0.0)
            .map(|(t, w)| (t, w / total))
            .collect();
        Ok(Self { atoms })
    }

    pub fn point(t: f64) -> Result<Self> {
        Self::new(vec![(t, 1.0)])
    }

    /// Empirical distribution of `samples`, merging exact duplicates.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::input("mixture needs at least one sample"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let w = 1.0 / sorted.len() as f64;
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for t in sorted {
            match atoms.last_mut() {
                Some(last) if last.0 == t => last.1 += w,
                _ => atoms.push((t, w)),
            }
        }
        Self::new(atoms)
    }

    /// Midpoint quadrature of a density given on a sorted grid.
    pub fn from_density(grid: &[f64], density: &[f64]) -> Result<Self> {
        if grid.len() != density.len() || grid.len() < 2 {
            return Err(Error::input(
                "density needs at least two grid points of matching length",
            ));
        }
        let mut atoms = Vec::with_capacity(grid.len() - 1);
        for k in 0..grid.len() - 1 {
            let h = grid[k + 1] - grid[k];
            if !(h > 0.0) {
                return Err(Error::input("density grid must be strictly increasing"));
            }
            atoms.push((0.5 * (grid[k] + grid[k + 1]), 0.5 * h * (density[k] + density[k + 1])));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if !(total > 0.0) {
            return Err(Error::input("density has no mass"));
        }
        Self::new(atoms.into_iter().map(|(t, w)| (t, w / total)).collect())
    }

    /// Row variances of a profile whose rows are internally constant.
    pub fn row_variances(profile: &VarianceProfile) -> Result<Self> {
        Self::from_samples(&profile.row_mean_squares())
    }

    pub fn column_mean_squares(profile: &VarianceProfile) -> Result<Self> {
        Self::from_samples(&profile.column_mean_squares())
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(t, w)| t * w).sum()
    }

    pub fn max_t(&self) -> f64 {
        self.atoms.iter().map(|a| a.0).fold(0.0, f64::max)
    }

    pub fn mass_at_zero(&self) -> f64 {
        self.atoms.iter().filter(|a| a.0 == 0.0).map(|a| a.1).sum()
    }
}

impl FromStr for MixtureH {
    type Err = Error;

    /// Parses `"t1:w1,t2:w2,..."`.
    fn from_str(s: &str) -> Result<Self> {
        let atoms = s
            .split(',')
            .map(|part| {
                let (t, w) = part
                    .split_once(':')
                    .ok_or_else(|| Error::input(format!("atom `{part}` is not of the form t:w")))?;
                let parse = |v: &str| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::input(format!("invalid number `{v}` in atom `{part}`")))
                };
                Ok((parse(t)?, parse(w)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(atoms)
    }
}

impl fmt::Display for MixtureH {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.atoms.iter().map(|(t, w)| format!("{t}:{w}")).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    /// `H` is the distribution of row variances.
    RowVarianceLaw,
    /// `H` is the distribution of column mean squares.
    PermutedColumnLaw,
}

impl LawKind {
    /// Mass of the eigenvalue law at zero.
    pub fn mass_at_zero(self, gamma: f64, h: &MixtureH) -> f64 {
        let h0 = h.mass_at_zero();
        match self {
            LawKind::RowVarianceLaw => (1.0 - (1.0 - h0) / gamma).max(0.0),
            LawKind::PermutedColumnLaw => h0.max(1.0 - 1.0 / gamma),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Bound on the relative residual of the defining equation.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StieltjesSolution {
    pub z: Complex64,
    pub m: Complex64,
    pub residual: f64,
    pub iterations: usize,
}

/// `m = -1 / (z - a sum_k w_k t_k / (1 + b t_k m))`.
struct Equation<'a> {
    z: Complex64,
    a: f64,
    b: f64,
    h: &'a MixtureH,
}

impl Equation<'_> {
    fn denominator(&self, m: Complex64) -> Complex64 {
        let s: Complex64 = self.h.atoms.iter().map(|&(t, w)| w * t / (1.0 + self.b * t * m)).sum();
        self.z - self.a * s
    }

    fn map(&self, m: Complex64) -> Complex64 {
        -1.0 / self.denominator(m)
    }

    /// `F(m) = m D(m) + 1` and its derivative.
    fn newton_terms(&self, m: Complex64) -> (Complex64, Complex64) {
        let mut s = Complex64::new(0.0, 0.0);
        let mut ds = Complex64::new(0.0, 0.0);
        for &(t, w) in &self.h.atoms {
            let q = 1.0 / (1.0 + self.b * t * m);
            s += w * t * q;
            ds += w * self.b * t * t * q * q;
        }
        let d = self.z - self.a * s;
        (m * d + 1.0, d + m * self.a * ds)
    }

    fn step_size(&self, m: Complex64) -> f64 {
        (self.map(m) - m).norm() / m.norm().max(1.0)
    }
}

/// Damped fixed-point iteration; returns the iterate and iterations used.
fn fixed_point(eq: &Equation, mut m: Complex64, budget: usize, tol: f64) -> (Complex64, usize, bool) {
    let mut lambda = 0.5;
    let mut prev_step = f64::INFINITY;
    let mut growth = 0;
    for it in 0..budget {
        let g = eq.map(m);
        let step = (g - m).norm() / m.norm().max(1.0);
        if !step.is_finite() {
            return (m, it, false);
        }
        if step <= tol {
            return (g, it + 1, true);
        }
        if step > prev_step {
            growth += 1;
            if growth >= 3 && lambda > 0.1 {
                lambda = 0.1;
            }
        } else {
            growth = 0;
        }
        prev_step = step;
        m = (1.0 - lambda) * m + lambda * g;
    }
    (m, budget, false)
}

/// Newton on `F(m) = m D(m) + 1`, keeping `Im m > 0`.
fn newton(eq: &Equation, mut m: Complex64, budget: usize, tol: f64) -> (Complex64, usize, bool) {
    for it in 0..budget {
        let (f, df) = eq.newton_terms(m);
        if !f.is_finite() || !df.is_finite() || df.norm() == 0.0 {
            return (m, it, false);
        }
        let delta = f / df;
        let mut scale = 1.0;
        let mut next = m - delta;
        while next.im <= 0.0 && scale > 1e-30 {
            scale *= 0.5;
            next = m - scale * delta;
        }
        if next.im <= 0.0 {
            return (m, it + 1, false);
        }
        let moved = (next - m).norm();
        m = next;
        if moved <= tol * m.norm().max(1.0) * 1e-3 || eq.step_size(m) <= tol * 1e-3 {
            return (m, it + 1, true);
        }
    }
    (m, budget, false)
}

/// Solves the common form with fixed-point iteration, Newton polishing and,
/// as a last resort, continuation in `Im z`.
fn solve_general(eq: &Equation, m0: Complex64, opts: &SolverOptions) -> (Complex64, usize, bool) {
    let fp_budget = opts.max_iter.min(400);
    let (m, mut used, ok) = fixed_point(eq, m0, fp_budget, opts.tol * 1e-2);
    let (m, it, ok) = if ok {
        newton(eq, m, 50, opts.tol)
    } else {
        newton(eq, m, 100, opts.tol)
    };
    used += it;
    if ok && m.im > 0.0 {
        return (m, used, true);
    }

    let target = eq.z.im;
    let mut y = eq.z.norm().max(1.0);
    let mut m = Complex64::new(0.0, 0.0);
    let mut first = true;
    loop {
        let y_now = y.max(target);
        let step_eq = Equation {
            z: Complex64::new(eq.z.re, y_now),
            ..*eq
        };
        if first {
            let (mm, it, ok) = fixed_point(&step_eq, -1.0 / step_eq.z, opts.max_iter.min(2000), opts.tol);
            used += it;
            if !ok {
                return (mm, used, false);
            }
            m = mm;
            first = false;
        }
        let (mm, it, ok) = newton(&step_eq, m, 100, opts.tol);
        used += it;
        if !ok {
            return (mm, used, false);
        }
        m = mm;
        if y_now <= target || used >= opts.max_iter {
            return (m, used, y_now <= target);
        }
        y *= 0.5;
    }
}

fn check_z(z: Complex64, gamma: f64) -> Result<()> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::input(format!(
            "z must lie in the open upper half-plane, got {z}"
        )));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::input(format!("aspect ratio must be positive, got {gamma}")));
    }
    Ok(())
}

fn relative(lhs: Complex64, rhs: Complex64) -> f64 {
    (lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1.0)
}

/// Relative residual of `z + 1/m = int t / (1 + gamma t m) dH`.
pub fn row_law_residual(z: Complex64, m: Complex64, gamma: f64, h: &MixtureH) -> f64 {
    let rhs: Complex64 = h.atoms.iter().map(|&(t, w)| w * t / (1.0 + gamma * t * m)).sum();
    relative(z + 1.0 / m, rhs)
}

/// Relative residual of
/// `1 + 1/(gamma(zm + 1) - 1) = int gamma t / (gamma t (zm + 1) + z - t) dH`.
pub fn permuted_law_residual(z: Complex64, m: Complex64, gamma: f64, h: &MixtureH) -> f64 {
    let u = gamma * (z * m + 1.0);
    let lhs = 1.0 + 1.0 / (u - 1.0);
    let rhs: Complex64 = h.atoms.iter().map(|&(t, w)| w * gamma * t / (t * u + z - t)).sum();
    relative(lhs, rhs)
}

pub fn solve_stieltjes_row_law(
    z: Complex64,
    gamma: f64,
    h: &MixtureH,
    opts: &SolverOptions,
) -> Result<StieltjesSolution> {
    solve_row_from(z, gamma, h, -1.0 / z, opts)
}

/// Row law from a caller-chosen starting point in the upper half-plane.
pub fn solve_row_from(
    z: Complex64,
    gamma: f64,
    h: &MixtureH,
    m0: Complex64,
    opts: &SolverOptions,
) -> Result<StieltjesSolution> {
    check_z(z, gamma)?;
    let eq = Equation { z, a: 1.0, b: gamma, h };
    let (m, iterations, ok) = solve_general(&eq, m0, opts);
    finish(z, m, iterations, ok, row_law_residual(z, m, gamma, h), opts)
}

pub fn solve_stieltjes_permuted_law(
    z: Complex64,
    gamma: f64,
    h: &MixtureH,
    opts: &SolverOptions,
) -> Result<StieltjesSolution> {
    check_z(z, gamma)?;
    let eq = Equation { z, a: gamma, b: 1.0, h };
    let (companion, iterations, ok) = solve_general(&eq, -1.0 / z, opts);
    let m = (companion + (1.0 - gamma) / z) / gamma;
    finish(z, m, iterations, ok, permuted_law_residual(z, m, gamma, h), opts)
}

fn finish(
    z: Complex64,
    m: Complex64,
    iterations: usize,
    ok: bool,
    residual: f64,
    opts: &SolverOptions,
) -> Result<StieltjesSolution> {
    if ok && m.im > 0.0 && residual <= opts.tol {
        Ok(StieltjesSolution {
            z,
            m,
            residual,
            iterations,
        })
    } else {
        Err(Error::StieltjesNotConverged {
            z,
            iterations,
            last: m,
            residual,
        })
    }
}

/// Stieltjes transform at any non-real `z`, using `m(conj z) = conj m(z)`.
pub fn stieltjes(kind: LawKind, z: Complex64, gamma: f64, h: &MixtureH, opts: &SolverOptions) -> Result<Complex64> {
    let (zz, flip) = if z.im < 0.0 { (z.conj(), true) } else { (z, false) };
    let sol = match kind {
        LawKind::RowVarianceLaw => solve_stieltjes_row_law(zz, gamma, h, opts)?,
        LawKind::PermutedColumnLaw => solve_stieltjes_permuted_law(zz, gamma, h, opts)?,
    };
    Ok(if flip { sol.m.conj() } else { sol.m })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionOptions {
    /// Imaginary offset of the evaluation line, relative to the grid span.
    pub relative_epsilon: f64,
    /// Density level that marks the support edges.
    pub edge_threshold: f64,
    pub solver: SolverOptions,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            relative_epsilon: 1e-8,
            edge_threshold: 1e-4,
            solver: SolverOptions::default(),
        }
    }
}

/// Evaluates the continuous part of a law's eigenvalue density.
#[derive(Clone, Debug)]
struct DensityEvaluator {
    kind: LawKind,
    gamma: f64,
    h: MixtureH,
    epsilon: f64,
    atom: f64,
    solver: SolverOptions,
}

impl DensityEvaluator {
    fn at(&self, x: f64) -> Result<f64> {
        let z = Complex64::new(x, self.epsilon);
        let m = stieltjes(self.kind, z, self.gamma, &self.h, &self.solver)?;
        let atom_part = self.atom * self.epsilon / (x * x + self.epsilon * self.epsilon);
        Ok(((m.im - atom_part) / std::f64::consts::PI).max(0.0))
    }

    /// Bisects between a point below and a point above `level`.
    fn crossing(&self, mut below: f64, mut above: f64, level: f64) -> Result<f64> {
        for _ in 0..60 {
            let mid = 0.5 * (below + above);
            if self.at(mid)? > level {
                above = mid;
            } else {
                below = mid;
            }
        }
        Ok(0.5 * (below + above))
    }
}

/// Eigenvalue density of `N^T N` on a grid, with support edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralLaw {
    pub source: LawKind,
    pub gamma: f64,
    pub h: MixtureH,
    pub epsilon: f64,
    pub grid: Vec<f64>,
    /// Density of the continuous part; the atom at zero is reported apart.
    pub density: Vec<f64>,
    pub atom_at_zero: f64,
    /// Trapezoid integral of `density` plus `atom_at_zero`.
    pub mass: f64,
    pub lower_edge: f64,
    pub upper_edge: f64,
    pub edge_threshold: f64,
}

/// `points` midpoints of equal cells on `[0, 1.1 max_t (1 + sqrt gamma)^2]`,
/// which always contains the support. A mixture concentrated at zero gets
/// the unit-variance range.
pub fn default_grid(gamma: f64, h: &MixtureH, points: usize) -> Vec<f64> {
    let scale = if h.max_t() > 0.0 { h.max_t() } else { 1.0 };
    let top = 1.1 * scale * (1.0 + gamma.sqrt()).powi(2);
    let width = top / points as f64;
    (0..points).map(|k| (k as f64 + 0.5) * width).collect()
}

pub fn density_by_inversion(
    kind: LawKind,
    gamma: f64,
    h: &MixtureH,
    grid: &[f64],
    opts: &InversionOptions,
) -> Result<SpectralLaw> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::input("grid must hold at least two strictly increasing points"));
    }
    if !(opts.relative_epsilon > 0.0) || !(opts.edge_threshold > 0.0) {
        return Err(Error::input("epsilon and edge threshold must be positive"));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::input(format!("aspect ratio must be positive, got {gamma}")));
    }
    let span = grid[grid.len() - 1] - grid[0];
    let eval = DensityEvaluator {
        kind,
        gamma,
        h: h.clone(),
        epsilon: opts.relative_epsilon * span,
        atom: kind.mass_at_zero(gamma, h),
        solver: opts.solver,
    };
    let density = grid.par_iter().map(|&x| eval.at(x)).collect::<Result<Vec<_>>>()?;
    let mass = trapezoid(grid, &density) + eval.atom;
    let (lower_edge, upper_edge) = edges(&eval, grid, &density, opts.edge_threshold)?;
    Ok(SpectralLaw {
        source: kind,
        gamma,
        h: h.clone(),
        epsilon: eval.epsilon,
        grid: grid.to_vec(),
        density,
        atom_at_zero: eval.atom,
        mass,
        lower_edge,
        upper_edge,
        edge_threshold: opts.edge_threshold,
    })
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

fn edges(eval: &DensityEvaluator, grid: &[f64], density: &[f64], level: f64) -> Result<(f64, f64)> {
    let Some(last) = density.iter().rposition(|&d| d > level) else {
        if eval.atom >= 1.0 - 1e-9 {
            return Ok((0.0, 0.0));
        }
        return Err(Error::input("density never exceeds the edge threshold on the grid"));
    };
    if last + 1 == grid.len() {
        return Err(Error::input(format!(
            "density still exceeds the edge threshold at the grid end {}",
            grid[last]
        )));
    }
    let upper = eval.crossing(grid[last + 1], grid[last], level)?;
    let first = density.iter().position(|&d| d > level).unwrap();
    let lower = if first == 0 {
        grid[0]
    } else {
        eval.crossing(grid[first - 1], grid[first], level)?
    };
    Ok((lower, upper))
}

impl SpectralLaw {
    /// Upper edge on the singular value scale.
    pub fn singular_upper_edge(&self) -> f64 {
        self.upper_edge.sqrt()
    }

    /// CDF of the eigenvalue law: the atom at zero plus the cumulative
    /// trapezoid integral, rescaled so the continuous part carries exactly
    /// `1 - atom_at_zero`. Linear between grid points.
    pub fn cdf(&self, x: f64) -> f64 {
        let cumulative = self.cumulative();
        let total = *cumulative.last().unwrap();
        let scale = if total > 0.0 {
            (1.0 - self.atom_at_zero) / total
        } else {
            0.0
        };
        let atom = if x >= 0.0 { self.atom_at_zero } else { 0.0 };
        let cont = if x <= self.grid[0] {
            // density is taken as flat between zero and the first point
            let left = self.grid[0].min(0.0);
            let frac = if self.grid[0] > left {
                ((x - left) / (self.grid[0] - left)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            frac * cumulative[0]
        } else if x >= self.grid[self.grid.len() - 1] {
            total
        } else {
            let k = self.grid.partition_point(|&g| g <= x) - 1;
            let t = (x - self.grid[k]) / (self.grid[k + 1] - self.grid[k]);
            cumulative[k] + t * (cumulative[k + 1] - cumulative[k])
        };
        atom + scale * cont
    }

    /// Running integral at each grid point; the first entry holds the mass
    /// between zero and the first grid point.
    fn cumulative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.len());
        let head = if self.grid[0] > 0.0 {
            self.grid[0] * self.density[0]
        } else {
            0.0
        };
        out.push(head);
        for k in 1..self.grid.len() {
            let step = 0.5 * (self.grid[k] - self.grid[k - 1]) * (self.density[k] + self.density[k - 1]);
            out.push(out[k - 1] + step);
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "density"]).map_err(csv_error)?;
        for (x, d) in self.grid.iter().zip(&self.density) {
            w.write_record([x.to_string(), d.to_string()]).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::input(format!("{other:?}")),
    }
}

/// Upper edge of `law` recomputed at another density threshold.
pub fn upper_edge(law: &SpectralLaw, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0) {
        return Err(Error::input("threshold must be positive"));
    }
    let eval = DensityEvaluator {
        kind: law.source,
        gamma: law.gamma,
        h: law.h.clone(),
        epsilon: law.epsilon,
        atom: law.atom_at_zero,
        solver: SolverOptions::default(),
    };
    Ok(edges(&eval, &law.grid, &law.density, threshold)?.1)
}

/// Marchenko-Pastur eigenvalue density of `N^T N` for unit variance and
/// aspect ratio `gamma = p/n`, continuous part only.
pub fn marchenko_pastur_density(x: f64, gamma: f64) -> f64 {
    let (a, b) = marchenko_pastur_edges(gamma);
    if x <= a.max(0.0) || x >= b {
        return 0.0;
    }
    ((b - x) * (x - a)).sqrt() / (2.0 * std::f64::consts::PI * gamma * x)
}

pub fn marchenko_pastur_edges(gamma: f64) -> (f64, f64) {
    ((1.0 - gamma.sqrt()).powi(2), (1.0 + gamma.sqrt()).powi(2))
}

/// Closed-form root in the upper half-plane of
/// `gamma z m^2 + (z + gamma - 1) m + 1 = 0`.
pub fn marchenko_pastur_stieltjes(z: Complex64, gamma: f64) -> Complex64 {
    let b = z + gamma - 1.0;
    let disc = (b * b - 4.0 * gamma * z).sqrt();
    let r1 = (-b + disc) / (2.0 * gamma * z);
    let r2 = (-b - disc) / (2.0 * gamma * z);
    if (r1.im > 0.0) == (z.im > 0.0) {
        r1
    } else {
        r2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn mixture_validation() {
        assert!(MixtureH::new(vec![(1.0, 0.5)]).is_err());
        assert!(MixtureH::new(vec![(-1.0, 1.0)]).is_err());
        assert!(MixtureH::new(vec![]).is_err());
        let h: MixtureH = "0.1:0.5, 0.9:0.5".parse().unwrap();
        assert_eq!(h.atoms(), &[(0.1, 0.5), (0.9, 0.5)]);
        assert!((h.mean() - 0.5).abs() < 1e-15);
        assert!("1".parse::<MixtureH>().is_err());
        assert!("1:x".parse::<MixtureH>().is_err());
        let h = MixtureH::from_samples(&[0.1, 0.9, 0.1, 0.1]).unwrap();
        assert_eq!(h.atoms(), &[(0.1, 0.75), (0.9, 0.25)]);
    }

    #[test]
    fn zero_mixture_gives_minus_inverse_z() {
        let h = MixtureH::point(0.0).unwrap();
        for z in [c(1.0, 0.5), c(-2.0, 0.1), c(0.3, 3.0)] {
            let s = solve_stieltjes_row_law(z, 0.6, &h, &opts()).unwrap();
            assert_abs_diff_eq!((s.m - (-1.0 / z)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn unit_mixture_matches_closed_form() {
        let h = MixtureH::point(1.0).unwrap();
        let s = solve_stieltjes_row_law(c(0.0, 1.0), 1.0, &h, &opts()).unwrap();
        let exact = marchenko_pastur_stieltjes(c(0.0, 1.0), 1.0);
        assert!((s.m - exact).norm() <= 1e-10);
        assert!(row_law_residual(c(0.0, 1.0), exact, 1.0, &h) <= 1e-10);
        for gamma in [0.3, 0.6, 1.0, 1.7] {
            for z in [c(0.5, 0.01), c(2.0, 1e-6), c(5.0, 1e-3), c(0.01, 0.2)] {
                let exact = marchenko_pastur_stieltjes(z, gamma);
                let row = solve_stieltjes_row_law(z, gamma, &h, &opts()).unwrap();
                let perm = solve_stieltjes_permuted_law(z, gamma, &h, &opts()).unwrap();
                assert!((row.m - exact).norm() <= 1e-7 * exact.norm().max(1.0), "{gamma} {z}");
                assert!((perm.m - exact).norm() <= 1e-7 * exact.norm().max(1.0), "{gamma} {z}");
            }
        }
    }

    #[test]
    fn laws_agree_for_scalar_profiles() {
        for t in [0.5, 2.0] {
            let h = MixtureH::point(t).unwrap();
            for z in [c(0.7, 0.05), c(1.5, 0.5)] {
                let a = solve_stieltjes_row_law(z, 0.6, &h, &opts()).unwrap().m;
                let b = solve_stieltjes_permuted_law(z, 0.6, &h, &opts()).unwrap().m;
                assert!((a - b).norm() <= 1e-8);
                // scaling: m_t(z) = m_1(z / t) / t
                let exact = marchenko_pastur_stieltjes(z / t, 0.6) / t;
                assert!((a - exact).norm() <= 1e-8);
            }
        }
    }

    #[test]
    fn conjugate_symmetry_and_positivity() {
        let h: MixtureH = "0.1:0.5,0.9:0.5".parse().unwrap();
        for kind in [LawKind::RowVarianceLaw, LawKind::PermutedColumnLaw] {
            for z in [c(0.4, 0.2), c(1.1, 1e-4)] {
                let up = stieltjes(kind, z, 0.6, &h, &opts()).unwrap();
                let down = stieltjes(kind, z.conj(), 0.6, &h, &opts()).unwrap();
                assert_eq!(up.conj(), down);
                assert!(up.im > 0.0);
            }
        }
        assert!(solve_stieltjes_row_law(c(1.0, 0.0), 0.6, &h, &opts()).is_err());
    }

    #[test]
    fn distinct_starts_reach_same_solution() {
        let h: MixtureH = "0.1:0.5,0.9:0.5".parse().unwrap();
        let z = c(0.5, 0.05);
        let a = solve_row_from(z, 0.6, &h, c(0.0, 1.0), &opts()).unwrap().m;
        let b = solve_row_from(z, 0.6, &h, c(-3.0, 0.2), &opts()).unwrap().m;
        assert!((a - b).norm() <= 1e-8);
    }

    #[test]
    fn permuted_solutions_satisfy_displayed_equation() {
        let h: MixtureH = "0.3:0.2,1.0:0.5,2.5:0.3".parse().unwrap();
        for z in [c(0.2, 0.01), c(1.7, 0.3), c(6.0, 1e-5)] {
            let s = solve_stieltjes_permuted_law(z, 0.6, &h, &opts()).unwrap();
            assert!(s.residual <= 1e-10);
            assert!(s.m.im > 0.0);
        }
    }

    #[test]
    fn non_convergence_reports_last_iterate() {
        let h = MixtureH::point(1.0).unwrap();
        let tight = SolverOptions { tol: 0.0, max_iter: 5 };
        match solve_stieltjes_row_law(c(1.0, 0.5), 0.6, &h, &tight) {
            Err(Error::StieltjesNotConverged { last, iterations, .. }) => {
                assert!(last.is_finite());
                assert!(iterations > 0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn mp_support_and_mass() {
        let h = MixtureH::point(1.0).unwrap();
        let grid = default_grid(0.6, &h, 2000);
        let law = density_by_inversion(LawKind::RowVarianceLaw, 0.6, &h, &grid, &InversionOptions::default()).unwrap();
        assert!((law.lower_edge - 0.0506).abs() < 0.01, "{}", law.lower_edge);
        assert!((law.upper_edge - 3.1494).abs() < 0.01, "{}", law.upper_edge);
        assert!((0.999..=1.001).contains(&law.mass), "{}", law.mass);
        assert!((law.singular_upper_edge() - (1.0 + 0.6f64.sqrt())).abs() < 0.01);
        for (x, d) in law.grid.iter().zip(&law.density) {
            if *x > law.upper_edge + 1e-3 {
                assert!(*d < 1e-4);
            }
        }
        assert!((law.cdf(10.0) - 1.0).abs() < 1e-12);
        assert_eq!(law.cdf(-1.0), 0.0);
    }

    #[test]
    fn scaled_point_mass_edge() {
        let h = MixtureH::point(0.5).unwrap();
        let grid = default_grid(0.6, &h, 800);
        for kind in [LawKind::RowVarianceLaw, LawKind::PermutedColumnLaw] {
            let law = density_by_inversion(kind, 0.6, &h, &grid, &InversionOptions::default()).unwrap();
            assert!((law.upper_edge - 1.5747).abs() < 0.005, "{}", law.upper_edge);
        }
    }

    #[test]
    fn square_case_edge() {
        let h = MixtureH::point(1.0).unwrap();
        let grid = default_grid(1.0, &h, 400);
        let law = density_by_inversion(LawKind::RowVarianceLaw, 1.0, &h, &grid, &InversionOptions::default()).unwrap();
        assert!((law.upper_edge - 4.0).abs() < 0.02);
        assert!((upper_edge(&law, 1e-3).unwrap() - 4.0).abs() < 0.02);
    }

    #[test]
    fn atoms_at_zero() {
        let h = MixtureH::point(0.0).unwrap();
        let grid = default_grid(0.6, &h, 50);
        let law = density_by_inversion(LawKind::RowVarianceLaw, 0.6, &h, &grid, &InversionOptions::default()).unwrap();
        assert_eq!(law.upper_edge, 0.0);
        assert_eq!(law.atom_at_zero, 1.0);

        let h = MixtureH::point(1.0).unwrap();
        assert!((LawKind::RowVarianceLaw.mass_at_zero(2.0, &h) - 0.5).abs() < 1e-15);
        assert!((LawKind::PermutedColumnLaw.mass_at_zero(2.0, &h) - 0.5).abs() < 1e-15);
        let h: MixtureH = "0:0.5,1:0.5".parse().unwrap();
        assert!((LawKind::RowVarianceLaw.mass_at_zero(0.25, &h)).abs() < 1e-15);
        assert!((LawKind::PermutedColumnLaw.mass_at_zero(0.25, &h) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn grid_too_short_is_an_error() {
        let h = MixtureH::point(1.0).unwrap();
        let grid: Vec<f64> = (1..100).map(|k| k as f64 * 0.02).collect();
        assert!(density_by_inversion(LawKind::RowVarianceLaw, 0.6, &h, &grid, &InversionOptions::default()).is_err());
    }

    #[test]
    fn csv_export() {
        let h = MixtureH::point(1.0).unwrap();
        let law = density_by_inversion(
            LawKind::RowVarianceLaw,
            0.6,
            &h,
            &default_grid(0.6, &h, 20),
            &InversionOptions::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        law.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,density\n"));
        assert_eq!(text.lines().count(), 21);
        let json: serde_json::Value = serde_json::from_str(&law.to_json().unwrap()).unwrap();
        assert_eq!(json["source"], "row_variance_law");
    }
}
