//! Concrete discrete groups: free abelian groups, finite abelian groups, the
//! integer Heisenberg group and its finite reductions, and direct products.
//!
//! Elements are integer tuples in a fixed normal form. Residues are reduced
//! into `0..n`; Heisenberg triples `(a, b, c)` multiply by
//! `(a, b, c)(a', b', c') = (a + a', b + b', c + c' + a b')`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest Følner box or finite group that will be enumerated.
const MAX_ENUMERATION: u64 = 1 << 26;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(pub Vec<i64>);

impl GroupElement {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        GroupElement(coords.into())
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }
}

impl From<Vec<i64>> for GroupElement {
    fn from(v: Vec<i64>) -> Self {
        GroupElement(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupSpec {
    /// ℤ^d
    FreeAbelian { d: usize },
    /// ℤ/n
    FiniteCyclic { n: u64 },
    /// ℤ/n₁ × ⋯ × ℤ/n_k
    FiniteAbelian { factors: Vec<u64> },
    /// Integer Heisenberg group.
    Heisenberg,
    /// Heisenberg group with entries reduced mod n. Arises as a finite quotient.
    HeisenbergMod { n: u64 },
    Product { factors: Vec<GroupSpec> },
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::FreeAbelian { d } => write!(f, "Z^{d}"),
            GroupSpec::FiniteCyclic { n } => write!(f, "Z/{n}"),
            GroupSpec::FiniteAbelian { factors } => {
                let parts: Vec<String> = factors.iter().map(|n| format!("Z/{n}")).collect();
                write!(f, "{}", parts.join(" x "))
            }
            GroupSpec::Heisenberg => write!(f, "H3(Z)"),
            GroupSpec::HeisenbergMod { n } => write!(f, "H3(Z/{n})"),
            GroupSpec::Product { factors } => {
                let parts: Vec<String> = factors.iter().map(|g| format!("({g})")).collect();
                write!(f, "{}", parts.join(" x "))
            }
        }
    }
}

impl GroupSpec {
    pub fn free_abelian(d: usize) -> Self {
        GroupSpec::FreeAbelian { d }
    }

    pub fn cyclic(n: u64) -> Self {
        GroupSpec::FiniteCyclic { n }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GroupSpec::FreeAbelian { d } if *d == 0 => Err(Error::InvalidSpec("free_abelian needs d >= 1".into())),
            GroupSpec::FiniteCyclic { n } | GroupSpec::HeisenbergMod { n } if *n == 0 => {
                Err(Error::InvalidSpec("modulus must be >= 1".into()))
            }
            GroupSpec::FiniteAbelian { factors } => {
                if factors.is_empty() || factors.contains(&0) {
                    Err(Error::InvalidSpec("finite_abelian needs invariant factors >= 1".into()))
                } else {
                    Ok(())
                }
            }
            GroupSpec::Product { factors } => {
                if factors.is_empty() {
                    return Err(Error::InvalidSpec("product needs at least one factor".into()));
                }
                factors.iter().try_for_each(GroupSpec::validate)
            }
            _ => Ok(()),
        }
    }

    /// Number of integer coordinates in an element's normal form.
    pub fn arity(&self) -> usize {
        match self {
            GroupSpec::FreeAbelian { d } => *d,
            GroupSpec::FiniteCyclic { .. } => 1,
            GroupSpec::FiniteAbelian { factors } => factors.len(),
            GroupSpec::Heisenberg | GroupSpec::HeisenbergMod { .. } => 3,
            GroupSpec::Product { factors } => factors.iter().map(GroupSpec::arity).sum(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            GroupSpec::FreeAbelian { .. } | GroupSpec::Heisenberg => false,
            GroupSpec::FiniteCyclic { .. } | GroupSpec::FiniteAbelian { .. } | GroupSpec::HeisenbergMod { .. } => true,
            GroupSpec::Product { factors } => factors.iter().all(GroupSpec::is_finite),
        }
    }

    pub fn is_abelian(&self) -> bool {
        match self {
            GroupSpec::Heisenberg => false,
            GroupSpec::HeisenbergMod { n } => *n == 1,
            GroupSpec::Product { factors } => factors.iter().all(GroupSpec::is_abelian),
            _ => true,
        }
    }

    /// Group order, or `None` for infinite groups (and on overflow).
    pub fn order(&self) -> Option<u64> {
        match self {
            GroupSpec::FreeAbelian { .. } | GroupSpec::Heisenberg => None,
            GroupSpec::FiniteCyclic { n } => Some(*n),
            GroupSpec::FiniteAbelian { factors } => factors.iter().try_fold(1u64, |acc, n| acc.checked_mul(*n)),
            GroupSpec::HeisenbergMod { n } => n.checked_mul(*n)?.checked_mul(*n),
            GroupSpec::Product { factors } => factors.iter().try_fold(1u64, |acc, g| acc.checked_mul(g.order()?)),
        }
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(vec![0; self.arity()])
    }

    /// Checks that `g` is in normal form for this group.
    pub fn check(&self, g: &GroupElement) -> Result<()> {
        if g.0.len() != self.arity() || !self.in_normal_form(&g.0) {
            return Err(Error::Shape { spec: self.to_string(), element: g.0.clone() });
        }
        Ok(())
    }

    fn in_normal_form(&self, g: &[i64]) -> bool {
        let reduced = |x: i64, n: u64| x >= 0 && (x as u64) < n;
        match self {
            GroupSpec::FreeAbelian { .. } | GroupSpec::Heisenberg => true,
            GroupSpec::FiniteCyclic { n } => reduced(g[0], *n),
            GroupSpec::FiniteAbelian { factors } => g.iter().zip(factors).all(|(x, n)| reduced(*x, *n)),
            GroupSpec::HeisenbergMod { n } => g.iter().all(|x| reduced(*x, *n)),
            GroupSpec::Product { factors } => {
                let mut off = 0;
                factors.iter().all(|f| {
                    let k = f.arity();
                    let ok = f.in_normal_form(&g[off..off + k]);
                    off += k;
                    ok
                })
            }
        }
    }

    /// Reduces arbitrary integer coordinates into normal form.
    pub fn normalize(&self, g: &[i64]) -> Result<GroupElement> {
        if g.len() != self.arity() {
            return Err(Error::Shape { spec: self.to_string(), element: g.to_vec() });
        }
        let mut out = g.to_vec();
        self.reduce_in_place(&mut out);
        Ok(GroupElement(out))
    }

    fn reduce_in_place(&self, g: &mut [i64]) {
        match self {
            GroupSpec::FreeAbelian { .. } | GroupSpec::Heisenberg => {}
            GroupSpec::FiniteCyclic { n } | GroupSpec::HeisenbergMod { n } => {
                g.iter_mut().for_each(|x| *x = x.rem_euclid(*n as i64));
            }
            GroupSpec::FiniteAbelian { factors } => {
                g.iter_mut().zip(factors).for_each(|(x, n)| *x = x.rem_euclid(*n as i64));
            }
            GroupSpec::Product { factors } => {
                let mut off = 0;
                for f in factors {
                    let k = f.arity();
                    f.reduce_in_place(&mut g[off..off + k]);
                    off += k;
                }
            }
        }
    }

    pub fn compose(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        self.check(h)?;
        let mut out = vec![0; self.arity()];
        self.compose_into(&g.0, &h.0, &mut out);
        Ok(GroupElement(out))
    }

    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        let mut out = vec![0; self.arity()];
        self.inverse_into(&g.0, &mut out);
        Ok(GroupElement(out))
    }

    /// Product of two normal-form coordinate slices, written into `out`.
    pub(crate) fn compose_into(&self, g: &[i64], h: &[i64], out: &mut [i64]) {
        match self {
            GroupSpec::FreeAbelian { .. } => {
                for ((o, a), b) in out.iter_mut().zip(g).zip(h) {
                    *o = a + b;
                }
            }
            GroupSpec::FiniteCyclic { n } => out[0] = (g[0] + h[0]).rem_euclid(*n as i64),
            GroupSpec::FiniteAbelian { factors } => {
                for (i, n) in factors.iter().enumerate() {
                    out[i] = (g[i] + h[i]).rem_euclid(*n as i64);
                }
            }
            GroupSpec::Heisenberg => {
                out[0] = g[0] + h[0];
                out[1] = g[1] + h[1];
                out[2] = g[2] + h[2] + g[0] * h[1];
            }
            GroupSpec::HeisenbergMod { n } => {
                let n = *n as i64;
                out[0] = (g[0] + h[0]).rem_euclid(n);
                out[1] = (g[1] + h[1]).rem_euclid(n);
                out[2] = (g[2] + h[2] + (g[0] * h[1]).rem_euclid(n)).rem_euclid(n);
            }
            GroupSpec::Product { factors } => {
                let mut off = 0;
                for f in factors {
                    let k = f.arity();
                    f.compose_into(&g[off..off + k], &h[off..off + k], &mut out[off..off + k]);
                    off += k;
                }
            }
        }
    }

    pub(crate) fn inverse_into(&self, g: &[i64], out: &mut [i64]) {
        match self {
            GroupSpec::FreeAbelian { .. } => {
                for (o, a) in out.iter_mut().zip(g) {
                    *o = -a;
                }
            }
            GroupSpec::FiniteCyclic { n } => out[0] = (-g[0]).rem_euclid(*n as i64),
            GroupSpec::FiniteAbelian { factors } => {
                for (i, n) in factors.iter().enumerate() {
                    out[i] = (-g[i]).rem_euclid(*n as i64);
                }
            }
            GroupSpec::Heisenberg => {
                out[0] = -g[0];
                out[1] = -g[1];
                out[2] = g[0] * g[1] - g[2];
            }
            GroupSpec::HeisenbergMod { n } => {
                let n = *n as i64;
                out[0] = (-g[0]).rem_euclid(n);
                out[1] = (-g[1]).rem_euclid(n);
                out[2] = (g[0] * g[1] - g[2]).rem_euclid(n);
            }
            GroupSpec::Product { factors } => {
                let mut off = 0;
                for f in factors {
                    let k = f.arity();
                    f.inverse_into(&g[off..off + k], &mut out[off..off + k]);
                    off += k;
                }
            }
        }
    }

    /// Symmetric standard generating set of the word metric. The Heisenberg
    /// central generator is deliberately absent.
    pub fn generators(&self) -> Vec<GroupElement> {
        let unit = |k: usize, i: usize, v: i64| {
            let mut e = vec![0; k];
            e[i] = v;
            e
        };
        let mut gens: Vec<Vec<i64>> = match self {
            GroupSpec::FreeAbelian { d } => (0..*d).flat_map(|i| [unit(*d, i, 1), unit(*d, i, -1)]).collect(),
            GroupSpec::FiniteCyclic { .. } => vec![vec![1], vec![-1]],
            GroupSpec::FiniteAbelian { factors } => {
                let k = factors.len();
                (0..k).flat_map(|i| [unit(k, i, 1), unit(k, i, -1)]).collect()
            }
            GroupSpec::Heisenberg | GroupSpec::HeisenbergMod { .. } => {
                vec![unit(3, 0, 1), unit(3, 0, -1), unit(3, 1, 1), unit(3, 1, -1)]
            }
            GroupSpec::Product { factors } => {
                let total = self.arity();
                let mut off = 0;
                let mut all = Vec::new();
                for f in factors {
                    for g in f.generators() {
                        let mut e = vec![0; total];
                        e[off..off + g.0.len()].copy_from_slice(&g.0);
                        all.push(e);
                    }
                    off += f.arity();
                }
                all
            }
        };
        for g in gens.iter_mut() {
            self.reduce_in_place(g);
        }
        let identity = vec![0; self.arity()];
        let mut seen = HashSet::new();
        gens.into_iter()
            .filter(|g| *g != identity && seen.insert(g.clone()))
            .map(GroupElement)
            .collect()
    }

    /// All elements of a finite group, in lexicographic coordinate order.
    pub fn elements(&self) -> Result<Vec<GroupElement>> {
        let order = self
            .order()
            .ok_or_else(|| Error::Unsupported(format!("{self} is not finite")))?;
        if order > MAX_ENUMERATION {
            return Err(Error::Unsupported(format!("{self} has order {order}, too large to enumerate")));
        }
        Ok(cartesian(self.coordinate_ranges(0)).into_iter().map(GroupElement).collect())
    }

    /// Per-coordinate ranges whose product is the Følner box at level `m`
    /// (the whole group for finite factors).
    fn coordinate_ranges(&self, m: u64) -> Vec<u64> {
        match self {
            GroupSpec::FreeAbelian { d } => vec![m; *d],
            GroupSpec::FiniteCyclic { n } => vec![*n],
            GroupSpec::FiniteAbelian { factors } => factors.clone(),
            GroupSpec::Heisenberg => vec![m, m, m * m],
            GroupSpec::HeisenbergMod { n } => vec![*n; 3],
            GroupSpec::Product { factors } => factors.iter().flat_map(|f| f.coordinate_ranges(m)).collect(),
        }
    }

    /// `N_m`, the cardinality of the Følner box at level `m`.
    pub fn folner_size(&self, m: u64) -> Option<u64> {
        self.coordinate_ranges(m).iter().try_fold(1u64, |acc, r| acc.checked_mul(*r))
    }

    /// The Følner box `X_m`: `{0..m-1}^d` for ℤ^d, `{0..m-1}² × {0..m²-1}` for
    /// the Heisenberg group, the whole group for finite factors, and the
    /// product of factor boxes for products.
    pub fn folner_set(&self, m: u64) -> Result<FolnerSet> {
        self.validate()?;
        if m == 0 {
            return Err(Error::InvalidSpec("Følner level must be >= 1".into()));
        }
        match self.folner_size(m) {
            Some(n) if n <= MAX_ENUMERATION => {}
            _ => return Err(Error::Unsupported(format!("Følner box of {self} at level {m} is too large"))),
        }
        let elements: Vec<GroupElement> =
            cartesian(self.coordinate_ranges(m)).into_iter().map(GroupElement).collect();
        Ok(FolnerSet::from_elements(self.clone(), m, elements))
    }

    /// `♯∂_δ X_m / ♯X_m` in the word metric of [`GroupSpec::generators`].
    ///
    /// `∂_δ X = {γ : d(γ, X) < δ and d(γ, Γ∖X) ≤ δ}`; with δ = 1 this is the
    /// set of points of `X` adjacent to the complement.
    pub fn boundary_fraction(&self, m: u64, delta: u32) -> Result<Ratio<u64>> {
        if delta == 0 {
            return Err(Error::InvalidSpec("δ must be >= 1".into()));
        }
        let x = self.folner_set(m)?;
        let gens = self.generators();
        let n = self.arity();

        // Multi-source BFS: every γ with d(γ, X) ≤ δ - 1.
        let mut candidates: HashSet<Vec<i64>> = x.elements.iter().map(|g| g.0.clone()).collect();
        let mut frontier: Vec<Vec<i64>> = candidates.iter().cloned().collect();
        frontier.sort();
        for _ in 1..delta {
            let mut next = Vec::new();
            for g in &frontier {
                for s in &gens {
                    let mut h = vec![0; n];
                    self.compose_into(g, &s.0, &mut h);
                    if candidates.insert(h.clone()) {
                        next.push(h);
                    }
                }
            }
            frontier = next;
        }

        let mut count = 0u64;
        for g in &candidates {
            if self.near_complement(g, &x, &gens, delta) {
                count += 1;
            }
        }
        Ok(Ratio::new(count, x.size() as u64))
    }

    fn near_complement(&self, start: &[i64], x: &FolnerSet, gens: &[GroupElement], delta: u32) -> bool {
        let n = self.arity();
        let mut seen = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start.to_vec());
        queue.push_back((start.to_vec(), 0u32));
        while let Some((g, dist)) = queue.pop_front() {
            if x.index_of_coords(&g).is_none() {
                return true;
            }
            if dist == delta {
                continue;
            }
            for s in gens {
                let mut h = vec![0; n];
                self.compose_into(&g, &s.0, &mut h);
                if seen.insert(h.clone()) {
                    queue.push_back((h, dist + 1));
                }
            }
        }
        false
    }

    /// The finite quotient at level `m`: ℤ^d → (ℤ/m)^d, Heisenberg → Heisenberg
    /// mod m; finite groups map identically.
    pub fn quotient(&self, m: u64) -> Result<QuotientSpec> {
        self.validate()?;
        if m == 0 {
            return Err(Error::InvalidSpec("quotient level must be >= 1".into()));
        }
        Ok(QuotientSpec { source: self.clone(), level: m, target: self.quotient_target(m) })
    }

    fn quotient_target(&self, m: u64) -> GroupSpec {
        match self {
            GroupSpec::FreeAbelian { d: 1 } => GroupSpec::FiniteCyclic { n: m },
            GroupSpec::FreeAbelian { d } => GroupSpec::FiniteAbelian { factors: vec![m; *d] },
            GroupSpec::Heisenberg => GroupSpec::HeisenbergMod { n: m },
            GroupSpec::Product { factors } => {
                GroupSpec::Product { factors: factors.iter().map(|f| f.quotient_target(m)).collect() }
            }
            finite => finite.clone(),
        }
    }
}

fn cartesian(ranges: Vec<u64>) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = vec![Vec::with_capacity(ranges.len())];
    for r in ranges {
        let mut next = Vec::with_capacity(out.len() * r as usize);
        for prefix in &out {
            for v in 0..r as i64 {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// A finite subset `X_m` of the group together with its inverse index.
#[derive(Clone, Debug)]
pub struct FolnerSet {
    pub spec: GroupSpec,
    pub m: u64,
    elements: Vec<GroupElement>,
    index: HashMap<Vec<i64>, usize>,
}

impl FolnerSet {
    fn from_elements(spec: GroupSpec, m: u64, elements: Vec<GroupElement>) -> Self {
        let index = elements.iter().enumerate().map(|(i, g)| (g.0.clone(), i)).collect();
        FolnerSet { spec, m, elements, index }
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    /// `N_m`.
    pub fn size(&self) -> usize {
        self.elements.len()
    }

    pub fn index_of(&self, g: &GroupElement) -> Option<usize> {
        self.index.get(&g.0).copied()
    }

    pub(crate) fn index_of_coords(&self, g: &[i64]) -> Option<usize> {
        self.index.get(g).copied()
    }
}

/// A finite quotient `Γ → Γ/Γ_m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientSpec {
    pub source: GroupSpec,
    pub level: u64,
    pub target: GroupSpec,
}

impl QuotientSpec {
    pub fn project(&self, g: &GroupElement) -> Result<GroupElement> {
        self.source.check(g)?;
        self.target.normalize(&g.0)
    }

    pub fn order(&self) -> Option<u64> {
        self.target.order()
    }
}
