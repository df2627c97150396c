//! Finite cochain complexes of free based ℚ[Γ]-modules.
//!
//! Indexing is cohomological: `d^j : C^j → C^{j+1}` is a `n_{j+1} × n_j`
//! matrix. Chain complexes are taken in by reversing the grading.

use crate::error::{Error, Result};
use crate::groupring::RingMatrix;
use crate::groups::GroupSpec;

/// Location of the first nonzero entry of some `d^{j+1} ∘ d^j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Violation {
    pub degree: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CochainComplex {
    spec: GroupSpec,
    ranks: Vec<usize>,
    differentials: Vec<RingMatrix>,
}

fn check_shapes(spec: &GroupSpec, ranks: &[usize], differentials: &[RingMatrix]) -> Result<()> {
    spec.validate()?;
    if ranks.is_empty() {
        return Err(Error::Dimension("complex needs at least one degree".into()));
    }
    if differentials.len() + 1 != ranks.len() {
        return Err(Error::Dimension(format!(
            "{} degrees need {} differentials, got {}",
            ranks.len(),
            ranks.len() - 1,
            differentials.len()
        )));
    }
    for (j, d) in differentials.iter().enumerate() {
        if d.spec() != spec {
            return Err(Error::SpecMismatch(spec.to_string(), d.spec().to_string()));
        }
        if d.rows() != ranks[j + 1] || d.cols() != ranks[j] {
            return Err(Error::Dimension(format!(
                "d^{j} is {}x{}, expected {}x{}",
                d.rows(),
                d.cols(),
                ranks[j + 1],
                ranks[j]
            )));
        }
    }
    Ok(())
}

/// Exact check of `d^{j+1} ∘ d^j = 0`; reports the first failing block.
pub fn find_violation(differentials: &[RingMatrix]) -> Result<Option<Violation>> {
    for (j, pair) in differentials.windows(2).enumerate() {
        let composite = pair[1].checked_mul(&pair[0])?;
        if let Some((row, col)) = composite.first_nonzero() {
            return Ok(Some(Violation { degree: j, row, col }));
        }
    }
    Ok(None)
}

impl CochainComplex {
    /// Builds a complex, refusing it unless shapes chain up and `d ∘ d = 0`.
    pub fn new(spec: GroupSpec, ranks: Vec<usize>, differentials: Vec<RingMatrix>) -> Result<Self> {
        Self::validate(&spec, &ranks, &differentials)?;
        Ok(CochainComplex { spec, ranks, differentials })
    }

    pub fn validate(spec: &GroupSpec, ranks: &[usize], differentials: &[RingMatrix]) -> Result<()> {
        check_shapes(spec, ranks, differentials)?;
        match find_violation(differentials)? {
            Some(Violation { degree, row, col }) => Err(Error::NotACocomplex { degree, row, col }),
            None => Ok(()),
        }
    }

    /// Complex with all differentials zero.
    pub fn zero(spec: GroupSpec, ranks: Vec<usize>) -> Result<Self> {
        let differentials = ranks.windows(2).map(|w| RingMatrix::zeros(spec.clone(), w[1], w[0])).collect();
        Self::new(spec, ranks, differentials)
    }

    /// Ingests a chain complex `C_0 ← C_1 ← ⋯ ← C_n` with `boundaries[k-1] = ∂_k`
    /// by setting `D^j = C_{n-j}` and `d^j = ∂_{n-j}`.
    pub fn from_chain(spec: GroupSpec, ranks: Vec<usize>, boundaries: Vec<RingMatrix>) -> Result<Self> {
        let ranks_rev: Vec<usize> = ranks.into_iter().rev().collect();
        let diffs_rev: Vec<RingMatrix> = boundaries.into_iter().rev().collect();
        Self::new(spec, ranks_rev, diffs_rev)
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn differentials(&self) -> &[RingMatrix] {
        &self.differentials
    }

    /// Number of degrees, `N + 1`.
    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn differential(&self, j: usize) -> Option<&RingMatrix> {
        self.differentials.get(j)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.ranks
            .iter()
            .enumerate()
            .map(|(j, &n)| if j % 2 == 0 { n as i64 } else { -(n as i64) })
            .sum()
    }

    /// `Δ_j = (d^j)* d^j + d^{j-1} (d^{j-1})*` in every degree.
    pub fn laplacians(&self) -> Result<LaplacianFamily> {
        let laplacians = (0..self.len()).map(|j| self.laplacian(j)).collect::<Result<Vec<_>>>()?;
        Ok(LaplacianFamily { spec: self.spec.clone(), laplacians })
    }

    pub fn laplacian(&self, j: usize) -> Result<RingMatrix> {
        let mut lap = RingMatrix::zeros(self.spec.clone(), self.ranks[j], self.ranks[j]);
        if let Some(d) = self.differentials.get(j) {
            lap = lap.checked_add(&d.adjoint().checked_mul(d)?)?;
        }
        if j > 0 {
            let d = &self.differentials[j - 1];
            lap = lap.checked_add(&d.checked_mul(&d.adjoint())?)?;
        }
        Ok(lap)
    }

    /// Degreewise direct sum of two complexes of equal length.
    pub fn direct_sum(&self, other: &CochainComplex) -> Result<CochainComplex> {
        if self.spec != other.spec || self.len() != other.len() {
            return Err(Error::Dimension("direct sum needs complexes of equal length over the same group".into()));
        }
        let ranks: Vec<usize> = self.ranks.iter().zip(&other.ranks).map(|(a, b)| a + b).collect();
        let mut diffs = Vec::with_capacity(self.differentials.len());
        for (j, (d, e)) in self.differentials.iter().zip(&other.differentials).enumerate() {
            let mut m = RingMatrix::zeros(self.spec.clone(), ranks[j + 1], ranks[j]);
            m.place(0, 0, d, false)?;
            m.place(d.rows(), d.cols(), e, false)?;
            diffs.push(m);
        }
        CochainComplex::new(self.spec.clone(), ranks, diffs)
    }

    /// Prepends `k` zero-rank degrees, so that `C^j` moves to degree `j + k`.
    pub fn shift_up(&self, k: usize) -> Result<CochainComplex> {
        let mut ranks = vec![0; k];
        ranks.extend_from_slice(&self.ranks);
        let mut diffs: Vec<RingMatrix> = (0..k)
            .map(|i| RingMatrix::zeros(self.spec.clone(), ranks[i + 1], ranks[i]))
            .collect();
        diffs.extend(self.differentials.iter().cloned());
        CochainComplex::new(self.spec.clone(), ranks, diffs)
    }

    /// Appends `k` zero-rank degrees at the top.
    pub fn pad_top(&self, k: usize) -> Result<CochainComplex> {
        let mut ranks = self.ranks.clone();
        let mut diffs = self.differentials.clone();
        for _ in 0..k {
            let last = *ranks.last().unwrap_or(&0);
            ranks.push(0);
            diffs.push(RingMatrix::zeros(self.spec.clone(), 0, last));
        }
        CochainComplex::new(self.spec.clone(), ranks, diffs)
    }
}

/// The combinatorial Laplacians of a validated complex.
#[derive(Clone, Debug)]
pub struct LaplacianFamily {
    pub spec: GroupSpec,
    pub laplacians: Vec<RingMatrix>,
}

impl LaplacianFamily {
    pub fn get(&self, j: usize) -> Option<&RingMatrix> {
        self.laplacians.get(j)
    }

    pub fn len(&self) -> usize {
        self.laplacians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.laplacians.is_empty()
    }
}

/// A cochain map `f : C → C'`, with `maps[j] : C^j → C'^j`.
#[derive(Clone, Debug)]
pub struct ChainMap {
    source: CochainComplex,
    target: CochainComplex,
    maps: Vec<RingMatrix>,
}

impl ChainMap {
    pub fn new(source: CochainComplex, target: CochainComplex, maps: Vec<RingMatrix>) -> Result<Self> {
        if source.spec != target.spec {
            return Err(Error::SpecMismatch(source.spec.to_string(), target.spec.to_string()));
        }
        if source.len() != target.len() || maps.len() != source.len() {
            return Err(Error::Dimension(format!(
                "chain map between complexes of length {} and {} with {} components",
                source.len(),
                target.len(),
                maps.len()
            )));
        }
        for (j, f) in maps.iter().enumerate() {
            if f.rows() != target.ranks[j] || f.cols() != source.ranks[j] {
                return Err(Error::Dimension(format!(
                    "f_{j} is {}x{}, expected {}x{}",
                    f.rows(),
                    f.cols(),
                    target.ranks[j],
                    source.ranks[j]
                )));
            }
        }
        for j in 0..source.differentials.len() {
            let lhs = maps[j + 1].checked_mul(&source.differentials[j])?;
            let rhs = target.differentials[j].checked_mul(&maps[j])?;
            if let Some((row, col)) = lhs.checked_sub(&rhs)?.first_nonzero() {
                return Err(Error::NotAChainMap { degree: j, row, col });
            }
        }
        Ok(ChainMap { source, target, maps })
    }

    pub fn identity(c: &CochainComplex) -> Self {
        let maps = c.ranks.iter().map(|&n| RingMatrix::identity(c.spec.clone(), n)).collect();
        ChainMap { source: c.clone(), target: c.clone(), maps }
    }

    pub fn source(&self) -> &CochainComplex {
        &self.source
    }

    pub fn target(&self) -> &CochainComplex {
        &self.target
    }

    pub fn maps(&self) -> &[RingMatrix] {
        &self.maps
    }

    /// The mapping cone `C_f`, with `C_f^j = C'^{j-1} ⊕ C^j` and differential
    /// `[[-d', f], [0, d]]`, sitting in `0 → C'[-1] → C_f → C → 0`.
    pub fn mapping_cone(&self) -> Result<CochainComplex> {
        let spec = self.source.spec.clone();
        let n = self.source.len();
        let src = &self.source.ranks;
        let tgt = &self.target.ranks;
        let tgt_below = |j: usize| if j == 0 { 0 } else { tgt[j - 1] };
        let src_at = |j: usize| if j < n { src[j] } else { 0 };
        let ranks: Vec<usize> = (0..=n).map(|j| tgt_below(j) + src_at(j)).collect();

        let mut diffs = Vec::with_capacity(n);
        for j in 0..n {
            let mut d = RingMatrix::zeros(spec.clone(), ranks[j + 1], ranks[j]);
            if j >= 1 {
                d.place(0, 0, &self.target.differentials[j - 1], true)?;
            }
            d.place(0, tgt_below(j), &self.maps[j], false)?;
            if j + 1 < n {
                d.place(tgt[j], tgt_below(j), &self.source.differentials[j], false)?;
            }
            diffs.push(d);
        }
        CochainComplex::new(spec, ranks, diffs)
    }
}
