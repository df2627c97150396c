//! Estimators built on compressions: Fuglede–Kadison determinants, L² Betti
//! numbers, the determinant-class diagnostic, L² torsion, determinants of
//! explicit unit products and the mapping-cone consistency check.
//!
//! Every estimator runs over a [`Schedule`] of levels. Levels and degrees are
//! independent tasks; with the `parallel` feature they run on the current
//! rayon pool, and results are always assembled in schedule order, so the
//! output never depends on the worker count.

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::complexes::{ChainMap, CochainComplex};
use crate::error::{Error, Result};
use crate::groupring::{RingElement, RingMatrix};
use crate::groups::{GroupElement, GroupSpec};
use crate::io::fmt12;
use crate::spectral::{
    compress_folner, compress_quotient, eigen_decomposition, eigenvalues, gap_check, normalized_log_det_positive,
    CompressOptions, Compression, GapDiagnostics, SpectralDensity, DEFAULT_CAP,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Folner,
    Quotient,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Folner => "folner",
            Scheme::Quotient => "quotient",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "folner" => Ok(Scheme::Folner),
            "quotient" => Ok(Scheme::Quotient),
            other => Err(Error::Schedule(format!("unknown scheme {other:?}; expected folner or quotient"))),
        }
    }
}

/// Levels at which the limit is sampled.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Schedule {
    pub scheme: Scheme,
    pub levels: Vec<u64>,
    /// Absolute kernel threshold. `None` means `1e-10 · max(1, λ_max)` per level.
    pub kernel_threshold: Option<f64>,
    pub cap: usize,
}

impl Schedule {
    pub fn new(scheme: Scheme, levels: Vec<u64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Schedule("no levels given".into()));
        }
        if levels[0] == 0 {
            return Err(Error::Schedule("levels must be positive".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Schedule(format!("levels {levels:?} are not strictly ascending")));
        }
        Ok(Schedule { scheme, levels, kernel_threshold: None, cap: DEFAULT_CAP })
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold.is_finite() && threshold >= 0.0) {
            return Err(Error::Schedule(format!("kernel threshold {threshold} must be finite and >= 0")));
        }
        self.kernel_threshold = Some(threshold);
        Ok(self)
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn top(&self) -> u64 {
        *self.levels.last().expect("schedule is nonempty")
    }

    fn threshold_for(&self, s: &SpectralDensity) -> f64 {
        self.kernel_threshold.unwrap_or_else(|| s.default_threshold())
    }
}

/// How `Det(A)` is read off a spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluation {
    /// `Det(A) = Det(A*A)^{1/2}`; valid for any square `A`.
    Polar,
    /// `Det(A)` straight from the spectrum of a compression of `A = A* ≥ 0`.
    Direct,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRecord {
    pub m: u64,
    pub n_m: usize,
    pub dim: usize,
    /// Spectral density at the kernel threshold.
    pub f_at_0: f64,
    /// `(1/N_m) Σ_{λ > threshold} log λ` of the compressed operator.
    pub norm_log_det: f64,
    /// Estimate of `log Det` at this level (half of the above in polar mode).
    pub log_det: f64,
    pub min_pos_eig: Option<f64>,
    pub threshold: f64,
    pub gap: GapDiagnostics,
    /// Excluded from serialized reports so that they stay reproducible.
    #[serde(skip)]
    pub wall_ms: u128,
}

pub const LEVEL_CSV_HEADER: &str = "m,N_m,dim,F_at_0,norm_log_det,min_pos_eig,wall_ms";

impl LevelRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.m,
            self.n_m,
            self.dim,
            fmt12(self.f_at_0),
            fmt12(self.norm_log_det),
            self.min_pos_eig.map(fmt12).unwrap_or_default(),
            self.wall_ms
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetEstimate {
    pub evaluation: Evaluation,
    pub levels: Vec<LevelRecord>,
    /// Top-level value; no extrapolation.
    pub log_det: f64,
    pub det: f64,
    /// `log_det(top) − log_det(previous)`; `None` for a single level.
    pub slope: Option<f64>,
}

impl DetEstimate {
    fn from_levels(evaluation: Evaluation, levels: Vec<LevelRecord>) -> Result<Self> {
        let log_det = levels.last().map(|r| r.log_det).unwrap_or(0.0);
        if levels.iter().any(|r| !r.log_det.is_finite()) {
            return Err(Error::Numerical("non-finite log-determinant".into()));
        }
        let slope = match levels.as_slice() {
            [.., a, b] => Some(b.log_det - a.log_det),
            _ => None,
        };
        Ok(DetEstimate { evaluation, log_det, det: log_det.exp(), slope, levels })
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{LEVEL_CSV_HEADER},log_det\n");
        for r in &self.levels {
            out.push_str(&format!("{},{}\n", r.csv_row(), fmt12(r.log_det)));
        }
        out
    }
}

pub(crate) fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Compression of `op` at level `m` of the schedule. The cap is checked
/// before any enumeration happens.
pub fn compress_at(op: &RingMatrix, sched: &Schedule, m: u64, self_adjoint: bool) -> Result<Compression> {
    let opts = CompressOptions { cap: sched.cap, require_self_adjoint: self_adjoint };
    match sched.scheme {
        Scheme::Folner => {
            let size = op.spec().folner_size(m).unwrap_or(u64::MAX);
            let dim = size.saturating_mul(op.rows() as u64);
            if dim > sched.cap as u64 {
                return Err(Error::CapExceeded { dim: usize::try_from(dim).unwrap_or(usize::MAX), cap: sched.cap });
            }
            compress_folner(op, &op.spec().folner_set(m)?, &opts)
        }
        Scheme::Quotient => compress_quotient(op, &op.spec().quotient(m)?, &opts),
    }
}

struct Measured {
    m: u64,
    dim: usize,
    density: SpectralDensity,
    threshold: f64,
    wall_ms: u128,
}

/// Wall-clock milliseconds since the call; always 0 on wasm32, which has no clock in std.
#[cfg(not(target_arch = "wasm32"))]
fn stopwatch() -> impl FnOnce() -> u128 {
    let start = std::time::Instant::now();
    move || start.elapsed().as_millis()
}

#[cfg(target_arch = "wasm32")]
fn stopwatch() -> impl FnOnce() -> u128 {
    || 0
}

fn measure(op: &RingMatrix, sched: &Schedule, m: u64) -> Result<Measured> {
    let elapsed = stopwatch();
    let c = compress_at(op, sched, m, true)?;
    let density = eigenvalues(&c, sched.cap)?;
    let threshold = sched.threshold_for(&density);
    Ok(Measured { m, dim: c.dim(), density, threshold, wall_ms: elapsed() })
}

impl Measured {
    fn record(&self, scale: f64, k_sq: f64) -> LevelRecord {
        let nld = normalized_log_det_positive(&self.density, self.threshold).unwrap_or(0.0);
        LevelRecord {
            m: self.m,
            n_m: self.density.normalization(),
            dim: self.dim,
            f_at_0: self.density.eval(self.threshold),
            norm_log_det: nld,
            log_det: scale * nld,
            min_pos_eig: self.density.min_positive(self.threshold),
            threshold: self.threshold,
            gap: gap_check(&self.density, k_sq, self.threshold),
            wall_ms: self.wall_ms,
        }
    }

    fn has_positive_part(&self) -> bool {
        self.density.min_positive(self.threshold).is_some()
    }
}

/// Fuglede–Kadison determinant of a square matrix over the group ring.
pub fn fk_determinant(a: &RingMatrix, sched: &Schedule, evaluation: Evaluation) -> Result<DetEstimate> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("determinant of a {}x{} matrix", a.rows(), a.cols())));
    }
    let (op, scale) = match evaluation {
        Evaluation::Polar => (a.adjoint().checked_mul(a)?, 0.5),
        Evaluation::Direct => {
            if let Some((row, col)) = a.self_adjoint_violation() {
                return Err(Error::NotSelfAdjoint { row, col });
            }
            (a.clone(), 1.0)
        }
    };
    let k_sq = op.l1_bound();
    let measured = par_map(&sched.levels, |&m| measure(&op, sched, m));
    let mut levels = Vec::with_capacity(measured.len());
    for m in measured {
        let m = m?;
        if evaluation == Evaluation::Direct {
            let lowest = m.density.min_eigenvalue().unwrap_or(0.0);
            let scale = m.density.max_eigenvalue().unwrap_or(0.0).abs().max(1.0);
            if lowest < -1e-8 * scale {
                return Err(Error::NotPositive(lowest));
            }
        }
        if !m.has_positive_part() {
            return Err(Error::ZeroOperator(m.threshold));
        }
        levels.push(m.record(scale, k_sq));
    }
    DetEstimate::from_levels(evaluation, levels)
}

/// `b_j = F(threshold)` of the compressed Laplacian `Δ_j` at the top level.
pub fn l2_betti(c: &CochainComplex, sched: &Schedule) -> Result<Vec<f64>> {
    let laplacians = c.laplacians()?.laplacians;
    let top = sched.top();
    let results = par_map(&laplacians, |lap| -> Result<f64> {
        if lap.is_zero() {
            return Ok(lap.rows() as f64);
        }
        let m = measure(lap, sched, top)?;
        Ok(m.density.eval(m.threshold))
    });
    results.into_iter().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeterminantClass {
    /// `(1/N) Σ log λ` over `threshold < λ ≤ 1`, where divergence would show.
    pub partial_integral: f64,
    /// Mass of the density in `(threshold, 10·threshold]`.
    pub near_zero_mass: f64,
    pub verdict: Verdict,
}

pub fn determinant_class_diagnostic(s: &SpectralDensity, threshold: f64) -> DeterminantClass {
    let n = s.normalization() as f64;
    let eigs = s.eigenvalues();
    let start = s.count_le(threshold);
    let partial: f64 = eigs[start..].iter().take_while(|&&x| x <= 1.0).map(|x| x.ln()).sum();
    let near = s.count_le(10.0 * threshold) - start;
    let verdict = if start == eigs.len() || near > 1 { Verdict::Inconclusive } else { Verdict::Pass };
    DeterminantClass { partial_integral: partial / n, near_zero_mass: near as f64 / n, verdict }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeReport {
    pub degree: usize,
    pub rank: usize,
    /// `(−1)^j · j / 2`.
    pub exponent: f64,
    pub betti: f64,
    /// Top-level estimate of `log Det(Δ_j⁺)`.
    pub log_det: f64,
    pub contribution: f64,
    pub zero_laplacian: bool,
    pub determinant_class: DeterminantClass,
    pub levels: Vec<LevelRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorsionReport {
    pub degrees: Vec<DegreeReport>,
    /// `Σ_j (−1)^j (j/2) log Det(Δ_j⁺)`. When some Betti number is positive
    /// this is only the correction relative to the standard bases.
    pub log_torsion: f64,
    pub torsion: f64,
    /// False when some degree's determinant-class diagnostic is inconclusive.
    pub reliable: bool,
    pub euler_characteristic: i64,
    pub betti_alternating_sum: f64,
    pub schedule: Schedule,
}

impl TorsionReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("degree,{LEVEL_CSV_HEADER}\n");
        for d in &self.degrees {
            for r in &d.levels {
                out.push_str(&format!("{},{}\n", d.degree, r.csv_row()));
            }
        }
        out
    }
}

fn exponent(j: usize) -> f64 {
    let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * j as f64 / 2.0
}

pub fn l2_torsion(c: &CochainComplex, sched: &Schedule) -> Result<TorsionReport> {
    let laplacians = c.laplacians()?.laplacians;
    let tasks: Vec<(usize, u64)> = laplacians
        .iter()
        .enumerate()
        .filter(|(_, lap)| !lap.is_zero())
        .flat_map(|(j, _)| sched.levels.iter().map(move |&m| (j, m)))
        .collect();
    let measured = par_map(&tasks, |&(j, m)| measure(&laplacians[j], sched, m));
    let mut measured = measured.into_iter();

    let mut degrees = Vec::with_capacity(laplacians.len());
    for (j, lap) in laplacians.iter().enumerate() {
        let rank = lap.rows();
        if lap.is_zero() {
            degrees.push(DegreeReport {
                degree: j,
                rank,
                exponent: exponent(j),
                betti: rank as f64,
                log_det: 0.0,
                contribution: 0.0,
                zero_laplacian: true,
                determinant_class: DeterminantClass {
                    partial_integral: 0.0,
                    near_zero_mass: 0.0,
                    verdict: Verdict::Pass,
                },
                levels: Vec::new(),
            });
            continue;
        }
        let k_sq = lap.l1_bound();
        let mut levels = Vec::with_capacity(sched.levels.len());
        let mut top = None;
        for _ in &sched.levels {
            let m = measured.next().expect("one result per task")?;
            levels.push(m.record(1.0, k_sq));
            top = Some(m);
        }
        let top = top.expect("schedule is nonempty");
        let log_det = levels.last().map(|r| r.log_det).unwrap_or(0.0);
        degrees.push(DegreeReport {
            degree: j,
            rank,
            exponent: exponent(j),
            betti: top.density.eval(top.threshold),
            log_det,
            contribution: exponent(j) * log_det,
            zero_laplacian: false,
            determinant_class: determinant_class_diagnostic(&top.density, top.threshold),
            levels,
        });
    }

    let log_torsion = degrees.iter().map(|d| d.contribution).sum::<f64>();
    let betti_alternating_sum = degrees
        .iter()
        .map(|d| if d.degree % 2 == 0 { d.betti } else { -d.betti })
        .sum();
    Ok(TorsionReport {
        reliable: degrees.iter().all(|d| d.determinant_class.verdict == Verdict::Pass),
        log_torsion,
        torsion: log_torsion.exp(),
        euler_characteristic: c.euler_characteristic(),
        betti_alternating_sum,
        degrees,
        schedule: sched.clone(),
    })
}

/// One factor of an explicit product of units over `ℤ[Γ]`.
#[derive(Clone, Debug, PartialEq)]
pub enum UnitFactor {
    /// `I + entry · e_{row,col}` with `row ≠ col`.
    Elementary { row: usize, col: usize, entry: RingElement },
    /// The diagonal unit with `sign · element` at `index`.
    Unit { index: usize, sign: i64, element: GroupElement },
}

/// An invertible matrix over `ℤ[Γ]`, given as a product of elementary
/// matrices and diagonal units so that invertibility holds by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitProduct {
    spec: GroupSpec,
    size: usize,
    factors: Vec<UnitFactor>,
}

impl UnitProduct {
    pub fn new(spec: GroupSpec, size: usize, factors: Vec<UnitFactor>) -> Result<Self> {
        spec.validate()?;
        if size == 0 {
            return Err(Error::NotUnitProduct("size must be positive".into()));
        }
        for (k, f) in factors.iter().enumerate() {
            match f {
                UnitFactor::Elementary { row, col, entry } => {
                    if row == col || *row >= size || *col >= size {
                        return Err(Error::NotUnitProduct(format!(
                            "factor {k}: elementary position ({row}, {col}) in size {size}"
                        )));
                    }
                    if entry.spec() != &spec {
                        return Err(Error::SpecMismatch(spec.to_string(), entry.spec().to_string()));
                    }
                    if !entry.is_integral() {
                        return Err(Error::NotUnitProduct(format!("factor {k}: entry has non-integer coefficients")));
                    }
                }
                UnitFactor::Unit { index, sign, element } => {
                    if *index >= size {
                        return Err(Error::NotUnitProduct(format!("factor {k}: index {index} in size {size}")));
                    }
                    if sign.abs() != 1 {
                        return Err(Error::NotUnitProduct(format!("factor {k}: sign {sign} is not ±1")));
                    }
                    spec.check(element)?;
                }
            }
        }
        Ok(UnitProduct { spec, size, factors })
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn factors(&self) -> &[UnitFactor] {
        &self.factors
    }

    /// The product, left to right, expanded exactly.
    pub fn expand(&self) -> Result<RingMatrix> {
        let mut acc = RingMatrix::identity(self.spec.clone(), self.size);
        for f in &self.factors {
            let m = match f {
                UnitFactor::Elementary { row, col, entry } => {
                    RingMatrix::elementary(self.size, *row, *col, entry.clone())?
                }
                UnitFactor::Unit { index, sign, element } => {
                    RingMatrix::diagonal_unit(self.spec.clone(), self.size, *index, *sign, element.clone())?
                }
            };
            acc = acc.checked_mul(&m)?;
        }
        Ok(acc)
    }
}

/// Determinant of a unit over `ℤ[Γ]`; the expected value is 1.
pub fn whitehead_det(w: &UnitProduct, sched: &Schedule) -> Result<DetEstimate> {
    fk_determinant(&w.expand()?, sched, Evaluation::Polar)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeCheck {
    pub exact: bool,
    pub log_source: f64,
    pub log_target: f64,
    pub log_cone: f64,
    /// `Σ_j (−1)^j log Det(f*_j)` for the induced maps on harmonic
    /// cochains; zero outside exact mode.
    pub harmonic_term: f64,
    /// `|log_source − log_target − harmonic_term − log_cone|`.
    pub residual: f64,
}

/// Compares the torsion of the mapping cone with the torsions of source and
/// target. Exact mode needs a finite group and uses the whole regular
/// representation; otherwise all three torsions are estimated on `sched`.
pub fn mapping_cone_check(f: &ChainMap, sched: &Schedule, exact: bool) -> Result<ConeCheck> {
    let cone = f.mapping_cone()?;
    if !exact {
        let log_source = l2_torsion(f.source(), sched)?.log_torsion;
        let log_target = l2_torsion(f.target(), sched)?.log_torsion;
        let log_cone = l2_torsion(&cone, sched)?.log_torsion;
        let residual = (log_source - log_target - log_cone).abs();
        return Ok(ConeCheck { exact, log_source, log_target, log_cone, harmonic_term: 0.0, residual });
    }

    let spec = f.source().spec();
    let q = spec
        .order()
        .ok_or_else(|| Error::Unsupported(format!("exact mode needs a finite group, got {spec}")))?;
    let source = exact_torsion(f.source(), sched)?;
    let target = exact_torsion(f.target(), sched)?;
    let cone_data = exact_torsion(&cone, sched)?;
    if let Some((j, d)) = cone_data.degrees.iter().enumerate().find(|(_, d)| d.kernel.ncols() > 0) {
        return Err(Error::NotAcyclic { degree: j, dim: d.kernel.ncols() as f64 / q as f64 });
    }

    let mut harmonic_term = 0.0;
    for (j, map) in f.maps().iter().enumerate() {
        let (u, u_target) = (&source.degrees[j].kernel, &target.degrees[j].kernel);
        if u.ncols() != u_target.ncols() {
            return Err(Error::NotAcyclic { degree: j, dim: 0.0 });
        }
        if u.ncols() == 0 {
            continue;
        }
        let regular = regular_representation(map, sched.cap)?;
        let induced = u_target.transpose() * (&regular * u);
        let det = induced.determinant().abs();
        if det == 0.0 {
            return Err(Error::Singular);
        }
        let term = det.ln() / q as f64;
        harmonic_term += if j % 2 == 0 { term } else { -term };
    }

    let (log_source, log_target, log_cone) = (source.log_torsion, target.log_torsion, cone_data.log_torsion);
    let residual = (log_source - log_target - harmonic_term - log_cone).abs();
    Ok(ConeCheck { exact, log_source, log_target, log_cone, harmonic_term, residual })
}

struct ExactDegree {
    /// Orthonormal basis of the harmonic cochains, one column each.
    kernel: Mat<f64>,
}

struct ExactTorsion {
    log_torsion: f64,
    degrees: Vec<ExactDegree>,
}

fn exact_torsion(c: &CochainComplex, sched: &Schedule) -> Result<ExactTorsion> {
    let laplacians = c.laplacians()?.laplacians;
    let exact_sched = Schedule { scheme: Scheme::Quotient, levels: vec![1], ..sched.clone() };
    let mut log_torsion = 0.0;
    let mut degrees = Vec::with_capacity(laplacians.len());
    for (j, lap) in laplacians.iter().enumerate() {
        let comp = compress_at(lap, &exact_sched, 1, true)?;
        let (eigs, vectors) = eigen_decomposition(&comp, sched.cap)?;
        let density = SpectralDensity::new(eigs.clone(), comp.normalization)?;
        let threshold = exact_sched.threshold_for(&density);
        let kernel_size = eigs.partition_point(|&x| x <= threshold);
        if kernel_size < eigs.len() {
            log_torsion += exponent(j) * normalized_log_det_positive(&density, threshold)?;
        }
        degrees.push(ExactDegree { kernel: vectors.subcols(0, kernel_size).to_owned() });
    }
    Ok(ExactTorsion { log_torsion, degrees })
}

/// Dense regular representation of a possibly rectangular matrix over a
/// finite group, laid out like a quotient compression.
fn regular_representation(a: &RingMatrix, cap: usize) -> Result<Mat<f64>> {
    let n = a.rows().max(a.cols());
    let mut square = RingMatrix::zeros(a.spec().clone(), n, n);
    square.place(0, 0, a, false)?;
    let quotient = a.spec().quotient(1)?;
    let opts = CompressOptions { cap, require_self_adjoint: false };
    let c = compress_quotient(&square, &quotient, &opts)?;
    let block = c.normalization;
    let full = c.to_faer();
    Ok(full.submatrix(0, 0, a.rows() * block, a.cols() * block).to_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupring::integer;
    use approx::assert_relative_eq;

    fn z(d: usize) -> GroupSpec {
        GroupSpec::free_abelian(d)
    }

    fn elem(spec: &GroupSpec, terms: &[(&[i64], i64)]) -> RingElement {
        RingElement::from_ints(spec.clone(), terms).unwrap()
    }

    fn sched(scheme: Scheme, levels: &[u64]) -> Schedule {
        Schedule::new(scheme, levels.to_vec()).unwrap()
    }

    fn golden() -> f64 {
        (3.0 + 5f64.sqrt()) / 2.0
    }

    fn symbol() -> RingMatrix {
        RingMatrix::scalar(elem(&z(1), &[(&[1], 1), (&[0], 3), (&[-1], 1)]))
    }

    fn circle() -> CochainComplex {
        let d = RingMatrix::scalar(elem(&z(1), &[(&[1], 1), (&[0], -1)]));
        CochainComplex::new(z(1), vec![1, 1], vec![d]).unwrap()
    }

    fn scalar_complex(spec: &GroupSpec, d: RingElement) -> CochainComplex {
        CochainComplex::new(spec.clone(), vec![1, 1], vec![RingMatrix::scalar(d)]).unwrap()
    }

    #[test]
    fn schedule_validation() {
        assert!(Schedule::new(Scheme::Folner, vec![]).is_err());
        assert!(Schedule::new(Scheme::Folner, vec![10, 10]).is_err());
        assert!(Schedule::new(Scheme::Folner, vec![0, 3]).is_err());
        assert!(sched(Scheme::Quotient, &[1]).with_threshold(f64::NAN).is_err());
        assert_eq!("folner".parse::<Scheme>().unwrap(), Scheme::Folner);
        assert!("box".parse::<Scheme>().is_err());
    }

    #[test]
    fn scalar_multiple_of_identity() {
        let mut a = RingMatrix::zeros(z(1), 3, 3);
        for i in 0..3 {
            a.place(i, i, &RingMatrix::scalar(elem(&z(1), &[(&[0], 2)])), false).unwrap();
        }
        let est = fk_determinant(&a, &sched(Scheme::Quotient, &[5, 7]), Evaluation::Polar).unwrap();
        assert_relative_eq!(est.det, 8.0, max_relative = 1e-12);
        let z3 = GroupSpec::cyclic(3);
        let mut b = RingMatrix::zeros(z3.clone(), 3, 3);
        for i in 0..3 {
            b.place(i, i, &RingMatrix::scalar(elem(&z3, &[(&[0], 2)])), false).unwrap();
        }
        let est = fk_determinant(&b, &sched(Scheme::Folner, &[1]), Evaluation::Polar).unwrap();
        assert_relative_eq!(est.det, 8.0, max_relative = 1e-12);
    }

    #[test]
    fn symbol_determinant_on_quotients() {
        let est = fk_determinant(&symbol(), &sched(Scheme::Quotient, &[64, 128]), Evaluation::Polar).unwrap();
        assert_relative_eq!(est.det, golden(), max_relative = 1e-10);
        let direct = fk_determinant(&symbol(), &sched(Scheme::Quotient, &[64]), Evaluation::Direct).unwrap();
        assert_relative_eq!(direct.det, golden(), max_relative = 1e-10);
    }

    #[test]
    fn symbol_determinant_on_boxes() {
        let est = fk_determinant(&symbol(), &sched(Scheme::Folner, &[50, 100, 200]), Evaluation::Direct).unwrap();
        assert_eq!(est.levels.len(), 3);
        let errs: Vec<f64> = est.levels.iter().map(|r| (r.log_det.exp() - golden()).abs()).collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        assert!(errs[2] / golden() <= 1e-3);
        assert!(est.slope.unwrap().abs() < 1e-2);
    }

    #[test]
    fn shift_minus_two() {
        let a = RingMatrix::scalar(elem(&z(1), &[(&[1], 1), (&[0], -2)]));
        let q = fk_determinant(&a, &sched(Scheme::Quotient, &[32]), Evaluation::Polar).unwrap();
        assert_relative_eq!(q.det, 2.0, max_relative = 1e-10);
        let f = fk_determinant(&a, &sched(Scheme::Folner, &[100, 400]), Evaluation::Polar).unwrap();
        assert!((f.det - 2.0).abs() < 2e-2, "{}", f.det);
    }

    #[test]
    fn direct_mode_rejects_non_self_adjoint() {
        let a = RingMatrix::scalar(elem(&z(1), &[(&[1], 1)]));
        assert!(matches!(
            fk_determinant(&a, &sched(Scheme::Quotient, &[4]), Evaluation::Direct),
            Err(Error::NotSelfAdjoint { .. })
        ));
        let negative = RingMatrix::scalar(elem(&z(1), &[(&[0], -1)]));
        assert!(matches!(
            fk_determinant(&negative, &sched(Scheme::Quotient, &[4]), Evaluation::Direct),
            Err(Error::NotPositive(_))
        ));
    }

    #[test]
    fn zero_operator_and_cap() {
        let zero = RingMatrix::zeros(z(1), 1, 1);
        assert!(matches!(
            fk_determinant(&zero, &sched(Scheme::Quotient, &[4]), Evaluation::Polar),
            Err(Error::ZeroOperator(_))
        ));
        let s = sched(Scheme::Folner, &[100]).with_cap(50);
        assert!(matches!(fk_determinant(&symbol(), &s, Evaluation::Polar), Err(Error::CapExceeded { .. })));
        let huge = sched(Scheme::Folner, &[1 << 40]);
        assert!(matches!(fk_determinant(&symbol(), &huge, Evaluation::Polar), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn multiplicativity_on_commuting_positives() {
        let spec = z(2);
        let a = elem(&spec, &[(&[0, 0], 5), (&[1, 0], 1), (&[-1, 0], 1), (&[0, 1], 1), (&[0, -1], 1)]);
        let b = elem(&spec, &[(&[0, 0], 3), (&[1, 1], 1), (&[-1, -1], 1)]);
        let ab = a.checked_mul(&b).unwrap();
        let s = sched(Scheme::Quotient, &[16]);
        let det = |x: &RingElement| fk_determinant(&RingMatrix::scalar(x.clone()), &s, Evaluation::Direct).unwrap();
        assert_relative_eq!(det(&ab).log_det, det(&a).log_det + det(&b).log_det, epsilon = 1e-9);
    }

    #[test]
    fn adjoint_invariance() {
        let spec = z(2);
        let a = RingMatrix::from_entries(
            spec.clone(),
            2,
            2,
            [
                ((0, 0), elem(&spec, &[(&[1, 0], 1), (&[0, 0], 3)])),
                ((0, 1), elem(&spec, &[(&[0, 1], 1)])),
                ((1, 1), elem(&spec, &[(&[0, 0], 2), (&[-1, 1], -1)])),
            ],
        )
        .unwrap();
        // Quotient compressions respect products, so A*A and AA* have the same
        // nonzero spectrum there. Box truncation does not commute with
        // products and only agrees in the limit.
        for (scheme, levels, tol) in [(Scheme::Quotient, [6, 9], 1e-9), (Scheme::Folner, [20, 40], 2e-2)] {
            let s = sched(scheme, &levels);
            let x = fk_determinant(&a, &s, Evaluation::Polar).unwrap();
            let y = fk_determinant(&a.adjoint(), &s, Evaluation::Polar).unwrap();
            assert!((x.log_det - y.log_det).abs() < tol, "{scheme}: {} vs {}", x.log_det, y.log_det);
        }
    }

    #[test]
    fn trace_scaling() {
        let c = compress_at(&symbol(), &sched(Scheme::Quotient, &[20]), 20, true).unwrap();
        let s = eigenvalues(&c, DEFAULT_CAP).unwrap();
        let thr = s.default_threshold();
        let base = normalized_log_det_positive(&s, thr).unwrap();
        let halved = normalized_log_det_positive(&s.with_normalization(40).unwrap(), thr).unwrap();
        assert_relative_eq!(base, 2.0 * halved, max_relative = 1e-14);
    }

    #[test]
    fn betti_examples() {
        let b = l2_betti(&circle(), &sched(Scheme::Folner, &[200])).unwrap();
        assert_eq!(b, vec![0.0, 0.0]);
        let z2 = GroupSpec::cyclic(2);
        let zero = CochainComplex::zero(z2.clone(), vec![1, 1]).unwrap();
        assert_eq!(l2_betti(&zero, &sched(Scheme::Quotient, &[1])).unwrap(), vec![1.0, 1.0]);
        let half = scalar_complex(&z2, elem(&z2, &[(&[0], 1), (&[1], 1)]));
        let b = l2_betti(&half, &sched(Scheme::Quotient, &[1])).unwrap();
        assert_eq!(b, vec![0.5, 0.5]);
    }

    #[test]
    fn determinant_class_examples() {
        let s = sched(Scheme::Folner, &[200]);
        let symbol_density = eigenvalues(&compress_at(&symbol(), &s, 200, true).unwrap(), DEFAULT_CAP).unwrap();
        let dc = determinant_class_diagnostic(&symbol_density, symbol_density.default_threshold());
        assert_eq!(dc.verdict, Verdict::Pass);
        assert_eq!(dc.near_zero_mass, 0.0);

        let lap = circle().laplacian(0).unwrap();
        let lap_density = eigenvalues(&compress_at(&lap, &s, 200, true).unwrap(), DEFAULT_CAP).unwrap();
        let dc = determinant_class_diagnostic(&lap_density, lap_density.default_threshold());
        assert_eq!(dc.verdict, Verdict::Pass);
        assert!(dc.partial_integral < 0.0 && dc.partial_integral.is_finite());

        let zero = SpectralDensity::new(vec![0.0; 4], 4).unwrap();
        assert_eq!(determinant_class_diagnostic(&zero, 1e-10).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn circle_torsion() {
        let r = l2_torsion(&circle(), &sched(Scheme::Folner, &[100, 1000])).unwrap();
        // Δ₁ on a box of size m is tridiagonal with determinant m + 1.
        assert_relative_eq!(r.log_torsion, -0.5 * 1001f64.ln() / 1000.0, max_relative = 1e-6);
        assert!(r.reliable);
        assert_eq!(r.degrees[1].levels.len(), 2);
        let q = l2_torsion(&circle(), &sched(Scheme::Quotient, &[64])).unwrap();
        // The nonzero eigenvalues of the cyclic Laplacian multiply to m².
        assert_relative_eq!(q.log_torsion, -0.5 * (64f64 * 64.0).ln() / 64.0, max_relative = 1e-9);
        assert_relative_eq!(q.degrees[0].betti, 1.0 / 64.0);
    }

    #[test]
    fn torsion_of_a_single_differential() {
        let z4 = GroupSpec::cyclic(4);
        let c = scalar_complex(&z4, elem(&z4, &[(&[0], 2), (&[1], 1)]));
        let r = l2_torsion(&c, &sched(Scheme::Quotient, &[1, 2])).unwrap();
        assert_relative_eq!(r.log_torsion, -15f64.ln() / 4.0, max_relative = 1e-12);
        let total: f64 = r.degrees.iter().map(|d| d.exponent * d.log_det).sum();
        assert_eq!(total, r.log_torsion);
    }

    #[test]
    fn torsion_of_zero_complex() {
        let c = CochainComplex::zero(z(2), vec![1, 2, 1]).unwrap();
        let r = l2_torsion(&c, &sched(Scheme::Folner, &[3])).unwrap();
        assert_eq!(r.log_torsion, 0.0);
        assert_eq!(r.degrees.iter().map(|d| d.betti).collect::<Vec<_>>(), vec![1.0, 2.0, 1.0]);
        assert!(r.reliable);
        assert_eq!(r.betti_alternating_sum, r.euler_characteristic as f64);
    }

    #[test]
    fn euler_identity() {
        for c in [circle(), scalar_complex(&GroupSpec::cyclic(2), elem(&GroupSpec::cyclic(2), &[(&[0], 1), (&[1], 1)]))] {
            let r = l2_torsion(&c, &sched(Scheme::Quotient, &[100])).unwrap();
            assert!((r.betti_alternating_sum - r.euler_characteristic as f64).abs() <= 0.02 * c.len() as f64);
        }
    }

    #[test]
    fn unit_products() {
        let spec = z(2);
        let e12 = UnitProduct::new(
            spec.clone(),
            2,
            vec![UnitFactor::Elementary { row: 0, col: 1, entry: elem(&spec, &[(&[1, 0], 1), (&[0, -1], 1)]) }],
        )
        .unwrap();
        let est = whitehead_det(&e12, &sched(Scheme::Quotient, &[8])).unwrap();
        assert!(est.log_det.abs() < 1e-9, "{}", est.log_det);

        let diag = UnitProduct::new(
            spec.clone(),
            2,
            vec![UnitFactor::Unit { index: 0, sign: 1, element: GroupElement(vec![1, 0]) }],
        )
        .unwrap();
        let est = whitehead_det(&diag, &sched(Scheme::Folner, &[6])).unwrap();
        assert!(est.log_det.abs() < 1e-9, "{}", est.log_det);

        let bad = |f: UnitFactor| UnitProduct::new(spec.clone(), 2, vec![f]);
        assert!(bad(UnitFactor::Elementary { row: 1, col: 1, entry: elem(&spec, &[(&[0, 0], 1)]) }).is_err());
        assert!(bad(UnitFactor::Unit { index: 0, sign: 2, element: GroupElement(vec![0, 0]) }).is_err());
        let half = RingElement::monomial(spec.clone(), GroupElement(vec![0, 0]), crate::groupring::rational(1, 2));
        assert!(bad(UnitFactor::Elementary { row: 0, col: 1, entry: half.unwrap() }).is_err());
    }

    #[test]
    fn unit_product_trend() {
        let spec = z(2);
        let w = UnitProduct::new(
            spec.clone(),
            2,
            vec![
                UnitFactor::Elementary { row: 0, col: 1, entry: elem(&spec, &[(&[1, 0], 1), (&[0, -1], 1)]) },
                UnitFactor::Elementary { row: 1, col: 0, entry: elem(&spec, &[(&[0, 0], 1), (&[-1, 0], -1)]) },
                UnitFactor::Elementary { row: 0, col: 1, entry: elem(&spec, &[(&[0, 1], 2)]) },
            ],
        )
        .unwrap();
        let est = whitehead_det(&w, &sched(Scheme::Folner, &[5, 10, 20])).unwrap();
        let logs: Vec<f64> = est.levels.iter().map(|r| r.log_det.abs()).collect();
        assert!(logs[0] > logs[1] && logs[1] > logs[2], "{logs:?}");
        // Quotient compressions of a unit are invertible with integer determinant ±1.
        let q = whitehead_det(&w, &sched(Scheme::Quotient, &[5])).unwrap();
        assert!(q.log_det.abs() < 1e-9, "{}", q.log_det);
    }

    fn multiplication_map(c: &CochainComplex, a: &RingElement) -> ChainMap {
        let maps = c
            .ranks()
            .iter()
            .map(|&n| {
                let mut m = RingMatrix::zeros(c.spec().clone(), n, n);
                for i in 0..n {
                    m.place(i, i, &RingMatrix::scalar(a.clone()), false).unwrap();
                }
                m
            })
            .collect();
        ChainMap::new(c.clone(), c.clone(), maps).unwrap()
    }

    #[test]
    fn cone_of_identity() {
        let z3 = GroupSpec::cyclic(3);
        let c = scalar_complex(&z3, elem(&z3, &[(&[1], 1), (&[0], -1)]));
        let check = mapping_cone_check(&ChainMap::identity(&c), &sched(Scheme::Quotient, &[1]), true).unwrap();
        assert!(check.residual <= 1e-9, "{check:?}");
        assert!(check.log_cone.abs() <= 1e-9);
    }

    #[test]
    fn cone_of_multiplication_in_degree_zero() {
        let z4 = GroupSpec::cyclic(4);
        let c = CochainComplex::zero(z4.clone(), vec![1]).unwrap();
        let f = multiplication_map(&c, &elem(&z4, &[(&[0], 2), (&[1], 1)]));
        let check = mapping_cone_check(&f, &sched(Scheme::Quotient, &[1]), true).unwrap();
        assert_relative_eq!(check.log_cone, -15f64.ln() / 4.0, max_relative = 1e-12);
        assert_relative_eq!(check.harmonic_term, 15f64.ln() / 4.0, max_relative = 1e-12);
        assert!(check.residual <= 1e-9, "{check:?}");
    }

    #[test]
    fn cone_with_cohomology_in_degree_one() {
        let z4 = GroupSpec::cyclic(4);
        let c = CochainComplex::zero(z4.clone(), vec![1, 1]).unwrap();
        let maps = vec![
            RingMatrix::identity(z4.clone(), 1),
            RingMatrix::scalar(elem(&z4, &[(&[0], 2), (&[1], 1)])),
        ];
        let f = ChainMap::new(c.clone(), c, maps).unwrap();
        let check = mapping_cone_check(&f, &sched(Scheme::Quotient, &[1]), true).unwrap();
        assert_relative_eq!(check.harmonic_term, -15f64.ln() / 4.0, max_relative = 1e-12);
        assert!(check.residual <= 1e-9, "{check:?}");
    }

    #[test]
    fn cone_of_multiplication_on_circle_over_z3() {
        let z3 = GroupSpec::cyclic(3);
        let c = scalar_complex(&z3, elem(&z3, &[(&[1], 1), (&[0], -1)]));
        let f = multiplication_map(&c, &elem(&z3, &[(&[0], 2), (&[1], 1)]));
        let check = mapping_cone_check(&f, &sched(Scheme::Quotient, &[1]), true).unwrap();
        assert!(check.residual <= 1e-9, "{check:?}");
    }

    #[test]
    fn cone_rejects_non_equivalence() {
        let z2 = GroupSpec::cyclic(2);
        let c = CochainComplex::zero(z2.clone(), vec![1]).unwrap();
        let f = multiplication_map(&c, &elem(&z2, &[(&[0], 1), (&[1], 1)]));
        let err = mapping_cone_check(&f, &sched(Scheme::Quotient, &[1]), true).unwrap_err();
        assert!(matches!(err, Error::NotAcyclic { .. }), "{err}");
        let zc = CochainComplex::zero(z(1), vec![1]).unwrap();
        let id = ChainMap::identity(&zc);
        assert!(matches!(mapping_cone_check(&id, &sched(Scheme::Quotient, &[4]), true), Err(Error::Unsupported(_))));
    }

    #[test]
    fn cone_on_schedule() {
        let f = multiplication_map(&circle(), &RingElement::monomial(z(1), GroupElement(vec![0]), integer(1)).unwrap());
        let check = mapping_cone_check(&f, &sched(Scheme::Folner, &[200]), false).unwrap();
        assert!(check.residual <= 0.02, "{check:?}");
    }

    #[test]
    fn csv_tables() {
        let est = fk_determinant(&symbol(), &sched(Scheme::Quotient, &[8, 16]), Evaluation::Polar).unwrap();
        let csv = est.to_csv();
        assert!(csv.starts_with("m,N_m,dim,F_at_0,norm_log_det,min_pos_eig,wall_ms"));
        assert_eq!(csv.lines().count(), 3);
        let json = serde_json::to_string(&est).unwrap();
        assert!(!json.contains("wall_ms"));
    }
}
