//! Ground truth that shares no code with the estimators.
//!
//! Over ℤ^d the determinant of a scalar operator is the Mahler measure of its
//! symbol, computed here by quadrature on the torus (and by Jensen's formula
//! in one variable). Over a finite group everything reduces to the regular
//! representation, which is expanded and eliminated in exact arithmetic.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;

use faer::Mat;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groupring::{RingElement, RingMatrix};
use crate::groups::GroupSpec;
use crate::invariants::par_map;

/// A Laurent polynomial in `d` commuting variables with rational coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPolynomial {
    d: usize,
    terms: BTreeMap<Vec<i64>, f64>,
}

impl LaurentPolynomial {
    pub fn new(d: usize, terms: impl IntoIterator<Item = (Vec<i64>, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (e, c) in terms {
            if e.len() != d {
                return Err(Error::Shape { spec: format!("ℤ^{d}"), element: e });
            }
            if !c.is_finite() {
                return Err(Error::Coefficient(format!("{c}")));
            }
            *map.entry(e).or_insert(0.0) += c;
        }
        map.retain(|_, c| *c != 0.0);
        Ok(LaurentPolynomial { d, terms: map })
    }

    pub fn from_element(a: &RingElement) -> Result<Self> {
        let d = match a.spec() {
            GroupSpec::FreeAbelian { d } => *d,
            other => return Err(Error::Unsupported(format!("Laurent polynomial over {other}"))),
        };
        let terms = a
            .terms()
            .map(|(g, c)| (g.0.clone(), c.to_f64().unwrap_or(f64::NAN)))
            .collect::<Vec<_>>();
        Self::new(d, terms)
    }

    pub fn variables(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &f64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn mul(&self, other: &LaurentPolynomial) -> Result<LaurentPolynomial> {
        if self.d != other.d {
            return Err(Error::Dimension(format!("ℤ^{} vs ℤ^{}", self.d, other.d)));
        }
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                out.push((a.iter().zip(b).map(|(i, j)| i + j).collect(), x * y));
            }
        }
        Self::new(self.d, out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MahlerReport {
    /// Jensen's formula when available, otherwise the quadrature.
    pub value: f64,
    pub quadrature: f64,
    pub jensen: Option<f64>,
    pub grid: usize,
    /// The quadrature moved by more than 1e-8 relative between `grid/2` and
    /// `grid`, which happens when the polynomial vanishes on the torus.
    pub low_precision: bool,
}

pub const MIN_GRID: usize = 64;

pub fn mahler_measure(p: &LaurentPolynomial, grid: usize) -> Result<f64> {
    Ok(mahler_report(p, grid)?.value)
}

pub fn mahler_report(p: &LaurentPolynomial, grid: usize) -> Result<MahlerReport> {
    if grid < MIN_GRID {
        return Err(Error::GridTooSmall(grid));
    }
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let fine = log_mean_on_torus(p, grid).exp();
    let coarse = log_mean_on_torus(p, grid / 2).exp();
    let jensen = if p.d == 1 { jensen(p) } else { None };
    let low_precision = jensen.is_none() && (fine - coarse).abs() > 1e-8 * fine;
    Ok(MahlerReport { value: jensen.unwrap_or(fine), quadrature: fine, jensen, grid, low_precision })
}

/// Trapezoid rule for `∫ log|p|` on the offset grid `θ_k = (k + ½)/grid`,
/// which never lands on `θ = 0` where cyclotomic factors vanish.
fn log_mean_on_torus(p: &LaurentPolynomial, grid: usize) -> f64 {
    let d = p.d;
    let angle = |k: usize| TAU * (k as f64 + 0.5) / grid as f64;
    let terms: Vec<(&Vec<i64>, f64)> = p.terms.iter().map(|(e, c)| (e, *c)).collect();
    let rest = grid.pow(d.saturating_sub(1) as u32);
    let rows: Vec<usize> = (0..grid).collect();
    let sums = par_map(&rows, |&k0| {
        let mut total = 0.0;
        let mut idx = vec![0usize; d];
        for flat in 0..rest {
            let mut r = flat;
            idx[0] = k0;
            for slot in idx.iter_mut().skip(1) {
                *slot = r % grid;
                r /= grid;
            }
            let mut value = Complex64::new(0.0, 0.0);
            for (e, c) in &terms {
                let phase: f64 = e.iter().zip(&idx).map(|(&x, &k)| x as f64 * angle(k)).sum();
                value += Complex64::from_polar(*c, phase);
            }
            total += value.norm().ln();
        }
        total
    });
    sums.into_iter().sum::<f64>() / (grid as f64).powi(d as i32)
}

/// `|leading| · ∏ max(1, |root|)` from the companion matrix.
fn jensen(p: &LaurentPolynomial) -> Option<f64> {
    let lo = p.terms.keys().map(|e| e[0]).min()?;
    let hi = p.terms.keys().map(|e| e[0]).max()?;
    let degree = (hi - lo) as usize;
    let coeff = |k: usize| p.terms.get(&vec![lo + k as i64]).copied().unwrap_or(0.0);
    let lead = coeff(degree);
    if degree == 0 {
        return Some(lead.abs());
    }
    let companion = Mat::from_fn(degree, degree, |i, j| {
        if i == 0 {
            -coeff(degree - 1 - j) / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let roots = companion.eigenvalues().ok()?;
    let product: f64 = roots.iter().map(|z| z.norm().max(1.0)).product();
    Some(lead.abs() * product)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteDet {
    pub order: u64,
    /// `|det R|^{1/q}` for the regular representation `R`; `None` if singular.
    pub det: Option<f64>,
    /// `Π λ^{1/(2q)}` over the positive eigenvalues of `RᵀR`.
    pub positive_part_det: f64,
    /// `(nq − rank R) / q`, with the rank computed exactly.
    pub kernel_dim: f64,
}

impl FiniteDet {
    pub fn invertible_det(&self) -> Result<f64> {
        self.det.ok_or(Error::Singular)
    }
}

/// Largest regular representation the exact elimination accepts.
pub const FINITE_ORACLE_CAP: usize = 512;

pub fn finite_group_det(a: &RingMatrix) -> Result<FiniteDet> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("determinant of a {}x{} matrix", a.rows(), a.cols())));
    }
    let spec = a.spec();
    let q = spec
        .order()
        .ok_or_else(|| Error::Unsupported(format!("{spec} is not finite")))?;
    let elements = spec.elements()?;
    let dim = a.rows() * elements.len();
    if dim > FINITE_ORACLE_CAP {
        return Err(Error::CapExceeded { dim, cap: FINITE_ORACLE_CAP });
    }
    let index: HashMap<_, _> = elements.iter().enumerate().map(|(k, g)| (g.clone(), k)).collect();

    // Left multiplication: (a·x)(g) = Σ_h a(g h⁻¹) x(h).
    let n = elements.len();
    let mut exact = vec![vec![BigRational::zero(); dim]; dim];
    for (&(i, j), entry) in a.entries() {
        for (gi, g) in elements.iter().enumerate() {
            for (hi, h) in elements.iter().enumerate() {
                let s = spec.compose(g, &spec.inverse(h)?)?;
                let c = entry.coefficient(&s);
                if !c.is_zero() {
                    exact[i * n + gi][j * n + hi] = c;
                }
            }
        }
    }
    debug_assert_eq!(index.len(), n);
    let floats = Mat::from_fn(dim, dim, |r, c| exact[r][c].to_f64().unwrap_or(f64::NAN));

    let (det, rank) = exact_det_and_rank(exact);
    let det = if det.is_zero() { None } else { Some((ln_abs(&det) / q as f64).exp()) };

    let gram = floats.transpose() * &floats;
    let mut eigs = gram
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver: {e:?}")))?;
    eigs.sort_by(|x, y| y.total_cmp(x));
    let log_positive: f64 = eigs.iter().take(rank).map(|x| x.ln()).sum();
    Ok(FiniteDet {
        order: q,
        det,
        positive_part_det: (log_positive / (2.0 * q as f64)).exp(),
        kernel_dim: (dim - rank) as f64 / q as f64,
    })
}

/// Fraction-free enough for the small matrices here: plain Gaussian
/// elimination over ℚ.
fn exact_det_and_rank(mut m: Vec<Vec<BigRational>>) -> (BigRational, usize) {
    let n = m.len();
    let mut det = BigRational::from_integer(BigInt::from(1));
    let mut rank = 0;
    for col in 0..n {
        let Some(pivot) = (rank..n).find(|&r| !m[r][col].is_zero()) else {
            det = BigRational::zero();
            continue;
        };
        if pivot != rank {
            m.swap(pivot, rank);
            det = -det;
        }
        let p = m[rank][col].clone();
        det *= &p;
        let (upper, lower) = m.split_at_mut(rank + 1);
        let pivot_row = &upper[rank];
        for row in lower.iter_mut() {
            if row[col].is_zero() {
                continue;
            }
            let factor = &row[col] / &p;
            for (x, y) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= &factor * y;
            }
        }
        rank += 1;
    }
    (det, rank)
}

fn ln_abs(x: &BigRational) -> f64 {
    ln_big(&x.numer().abs()) - ln_big(&x.denom().abs())
}

fn ln_big(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().unwrap_or(f64::NAN).ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * std::f64::consts::LN_2
}
