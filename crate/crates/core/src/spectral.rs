//! Finite compressions of group-ring operators and their spectral densities.
//!
//! A matrix `A` over ℚ[Γ] acts on `ℓ²(Γ)^n` by right convolution, which
//! commutes with the left translation action. Restricting that operator to a
//! Følner box `X`, or pushing it forward to a finite quotient, gives a real
//! symmetric matrix whose block `(i, j)` has entry `[g, h] = A_ij(g⁻¹h)`.

use std::collections::{BTreeSet, HashMap};

use faer::{Mat, Side};
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groupring::RingMatrix;
use crate::groups::{FolnerSet, GroupElement, QuotientSpec};
use crate::io::fmt12;

pub const DEFAULT_CAP: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum CompressionScheme {
    Folner { m: u64 },
    Quotient { m: u64 },
}

#[derive(Clone, Copy, Debug)]
pub struct CompressOptions {
    pub cap: usize,
    pub require_self_adjoint: bool,
}

impl Default for CompressOptions {
    fn default() -> Self {
        CompressOptions { cap: DEFAULT_CAP, require_self_adjoint: true }
    }
}

/// A dense real matrix of dimension `rows · N` approximating a group-ring
/// operator, where `N` is the size of the Følner box or quotient.
#[derive(Clone, Debug)]
pub struct Compression {
    pub scheme: CompressionScheme,
    /// Rank `n` of the free module the operator acts on.
    pub rows: usize,
    /// `N_m`.
    pub normalization: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Compression {
    fn zeroed(scheme: CompressionScheme, rows: usize, normalization: usize, cap: usize) -> Result<Self> {
        let dim = rows
            .checked_mul(normalization)
            .ok_or(Error::CapExceeded { dim: usize::MAX, cap })?;
        if dim > cap {
            return Err(Error::CapExceeded { dim, cap });
        }
        Ok(Compression { scheme, rows, normalization, dim, data: vec![0.0; dim * dim] })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Row-major entries.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        self.data
            .chunks(self.dim.max(1))
            .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Whitespace-separated dense text, one matrix row per line.
    pub fn to_dense_text(&self) -> String {
        let mut out = String::new();
        for row in self.data.chunks(self.dim.max(1)) {
            let line: Vec<String> = row.iter().map(|x| fmt12(*x)).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub(crate) fn to_faer(&self) -> Mat<f64> {
        Mat::from_fn(self.dim, self.dim, |i, j| self.data[i * self.dim + j])
    }
}

fn check_self_adjoint(a: &RingMatrix, opts: &CompressOptions) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("compression of non-square {}x{}", a.rows(), a.cols())));
    }
    if opts.require_self_adjoint {
        if let Some((row, col)) = a.self_adjoint_violation() {
            return Err(Error::NotSelfAdjoint { row, col });
        }
    }
    Ok(())
}

/// Entry position and its terms as floats.
type CoefficientTable = Vec<(usize, usize, Vec<(GroupElement, f64)>)>;

fn coefficient_table(a: &RingMatrix) -> CoefficientTable {
    a.entries()
        .map(|(&(i, j), e)| {
            let terms = e.terms().map(|(g, c)| (g.clone(), c.to_f64().unwrap_or(f64::NAN))).collect();
            (i, j, terms)
        })
        .collect()
}

/// Restriction of `A` to `ℓ²(X)^n`.
pub fn compress_folner(a: &RingMatrix, x: &FolnerSet, opts: &CompressOptions) -> Result<Compression> {
    if a.spec() != &x.spec {
        return Err(Error::SpecMismatch(a.spec().to_string(), x.spec.to_string()));
    }
    check_self_adjoint(a, opts)?;
    let n = x.size();
    let mut c = Compression::zeroed(CompressionScheme::Folner { m: x.m }, a.rows(), n, opts.cap)?;
    let dim = c.dim;
    let spec = a.spec();
    let mut h = vec![0; spec.arity()];
    for (i, j, terms) in coefficient_table(a) {
        for (p, g) in x.elements().iter().enumerate() {
            let row = (i * n + p) * dim + j * n;
            for (s, coeff) in &terms {
                spec.compose_into(g.coords(), s.coords(), &mut h);
                if let Some(q) = x.index_of_coords(&h) {
                    c.data[row + q] += coeff;
                }
            }
        }
    }
    Ok(c)
}

/// The pushforward of `A` to `ℓ²(Γ/Γ_m)^n`. The projection must be injective
/// on the identity together with the supports of all entries; otherwise the
/// pushforward would merge distinct coefficients and the level is rejected.
pub fn compress_quotient(a: &RingMatrix, q: &QuotientSpec, opts: &CompressOptions) -> Result<Compression> {
    if a.spec() != &q.source {
        return Err(Error::SpecMismatch(a.spec().to_string(), q.source.to_string()));
    }
    check_self_adjoint(a, opts)?;
    let order = q
        .order()
        .ok_or_else(|| Error::Unsupported(format!("quotient {} is not finite", q.target)))?;
    let dim_estimate = (a.rows() as u64).saturating_mul(order);
    if dim_estimate > opts.cap as u64 {
        return Err(Error::CapExceeded { dim: usize::try_from(dim_estimate).unwrap_or(usize::MAX), cap: opts.cap });
    }

    let mut support: BTreeSet<GroupElement> = BTreeSet::new();
    support.insert(q.source.identity());
    for (_, e) in a.entries() {
        support.extend(e.support().cloned());
    }
    let mut seen: HashMap<GroupElement, GroupElement> = HashMap::new();
    let mut projected: HashMap<GroupElement, GroupElement> = HashMap::new();
    for s in &support {
        let p = q.project(s)?;
        if let Some(first) = seen.get(&p) {
            return Err(Error::SupportCollision { level: q.level, first: first.clone(), second: s.clone() });
        }
        seen.insert(p.clone(), s.clone());
        projected.insert(s.clone(), p);
    }

    let elements = q.target.elements()?;
    let index: HashMap<&[i64], usize> = elements.iter().enumerate().map(|(k, g)| (g.coords(), k)).collect();
    let n = elements.len();
    let mut c = Compression::zeroed(CompressionScheme::Quotient { m: q.level }, a.rows(), n, opts.cap)?;
    let dim = c.dim;
    let mut h = vec![0; q.target.arity()];
    for (i, j, terms) in coefficient_table(a) {
        let terms: Vec<(&GroupElement, f64)> = terms.iter().map(|(s, coeff)| (&projected[s], *coeff)).collect();
        for (p, g) in elements.iter().enumerate() {
            let row = (i * n + p) * dim + j * n;
            for (s, coeff) in &terms {
                q.target.compose_into(g.coords(), s.coords(), &mut h);
                c.data[row + index[h.as_slice()]] += coeff;
            }
        }
    }
    Ok(c)
}

fn check_finite(c: &Compression, cap: usize) -> Result<()> {
    if c.dim > cap {
        return Err(Error::CapExceeded { dim: c.dim, cap });
    }
    if let Some(k) = c.data.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(k / c.dim, k % c.dim));
    }
    Ok(())
}

fn check_trace(c: &Compression, eigenvalues: &[f64]) -> Result<()> {
    let sum: f64 = eigenvalues.iter().sum();
    let trace = c.trace();
    let tol = 1e-8 * c.dim as f64 * c.inf_norm().max(1.0);
    if (sum - trace).abs() > tol {
        return Err(Error::Numerical(format!("eigenvalue sum {sum} deviates from trace {trace}")));
    }
    Ok(())
}

/// Full symmetric eigensolve of a compression.
pub fn eigenvalues(c: &Compression, cap: usize) -> Result<SpectralDensity> {
    check_finite(c, cap)?;
    let eigs = if c.dim == 0 {
        Vec::new()
    } else {
        c.to_faer()
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Numerical(format!("eigensolver: {e:?}")))?
    };
    check_trace(c, &eigs)?;
    SpectralDensity::new(eigs, c.normalization)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors as columns.
pub(crate) fn eigen_decomposition(c: &Compression, cap: usize) -> Result<(Vec<f64>, Mat<f64>)> {
    check_finite(c, cap)?;
    if c.dim == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let evd = c
        .to_faer()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver: {e:?}")))?;
    let s = evd.S();
    let eigs: Vec<f64> = (0..c.dim).map(|k| s[k]).collect();
    check_trace(c, &eigs)?;
    Ok((eigs, evd.U().to_owned()))
}

/// The normalized eigenvalue counting function `F(λ) = ♯{λ_i ≤ λ} / N`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDensity {
    eigenvalues: Vec<f64>,
    normalization: usize,
}

impl SpectralDensity {
    pub fn new(mut eigenvalues: Vec<f64>, normalization: usize) -> Result<Self> {
        if normalization == 0 {
            return Err(Error::Dimension("normalization must be positive".into()));
        }
        if eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("non-finite eigenvalue".into()));
        }
        eigenvalues.sort_by(f64::total_cmp);
        Ok(SpectralDensity { eigenvalues, normalization })
    }

    /// Ascending, with multiplicity.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn normalization(&self) -> usize {
        self.normalization
    }

    /// The same spectrum measured against a different trace normalization.
    pub fn with_normalization(&self, normalization: usize) -> Result<Self> {
        Self::new(self.eigenvalues.clone(), normalization)
    }

    pub fn count_le(&self, lambda: f64) -> usize {
        self.eigenvalues.partition_point(|&x| x <= lambda)
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        self.count_le(lambda) as f64 / self.normalization as f64
    }

    /// `F(+∞)`, the rank of the module the operator acts on.
    pub fn total_mass(&self) -> f64 {
        self.eigenvalues.len() as f64 / self.normalization as f64
    }

    pub fn max_eigenvalue(&self) -> Option<f64> {
        self.eigenvalues.last().copied()
    }

    pub fn min_eigenvalue(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }

    /// `1e-10 · max(1, λ_max)`.
    pub fn default_threshold(&self) -> f64 {
        1e-10 * self.max_eigenvalue().unwrap_or(0.0).max(1.0)
    }

    /// Smallest eigenvalue above `threshold`.
    pub fn min_positive(&self, threshold: f64) -> Option<f64> {
        self.eigenvalues.get(self.count_le(threshold)).copied()
    }

    /// Jump points `(λ, F(λ))` of the step function, one per distinct eigenvalue.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (k, &x) in self.eigenvalues.iter().enumerate() {
            let f = (k + 1) as f64 / self.normalization as f64;
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = f,
                _ => out.push((x, f)),
            }
        }
        out
    }

    /// CSV with columns `lambda,F_m`, one row per eigenvalue.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,F_m\n");
        for &x in &self.eigenvalues {
            out.push_str(&format!("{},{}\n", fmt12(x), fmt12(self.eval(x))));
        }
        out
    }
}

/// `(1/N) Σ_{λ_i > threshold} log λ_i`.
pub fn normalized_log_det_positive(s: &SpectralDensity, threshold: f64) -> Result<f64> {
    let start = s.count_le(threshold);
    let positive = &s.eigenvalues[start..];
    if positive.is_empty() {
        return Err(Error::ZeroOperator(threshold));
    }
    Ok(positive.iter().map(|x| x.ln()).sum::<f64>() / s.normalization as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapDiagnostics {
    /// ℓ¹ bound `K₁²` on the operator norm.
    pub l1_bound: f64,
    /// Smallest eigenvalue above the kernel threshold.
    pub floor: Option<f64>,
    pub max_eigenvalue: Option<f64>,
    /// `F(λ) = F(0)` for all `λ < 1/K²`.
    pub gap: bool,
    /// Every eigenvalue lies in `[-K₁², K₁²]` up to rounding.
    pub within_bound: bool,
}

pub fn gap_check(s: &SpectralDensity, k_sq: f64, threshold: f64) -> GapDiagnostics {
    let floor = s.min_positive(threshold);
    let gap = match floor {
        Some(f) => f >= 1.0 / k_sq,
        None => true,
    };
    let tol = 1e-9 * k_sq.max(1.0);
    let within_bound = s.eigenvalues.iter().all(|x| x.abs() <= k_sq + tol);
    GapDiagnostics { l1_bound: k_sq, floor, max_eigenvalue: s.max_eigenvalue(), gap, within_bound }
}
