//! JSON file formats and number formatting.
//!
//! - Group: `{"kind":"free_abelian","d":2}`, `{"kind":"finite_cyclic","n":4}`,
//!   `{"kind":"finite_abelian","factors":[2,4]}`, `{"kind":"heisenberg"}`,
//!   `{"kind":"heisenberg_mod","n":3}`, `{"kind":"product","factors":[...]}`.
//! - Ring element: `[[coords, numerator, denominator], ...]`.
//! - Ring matrix: `{"rows":n,"cols":m,"entries":[[i,j,element],...]}`, 0-based.
//! - Matrix file: a ring matrix with an added `"group"` field.
//! - Complex file: `{"group":G,"ranks":[...],"differentials":[matrix,...]}`.
//! - Chain-map file: `{"group":G,"source":{"ranks":..,"differentials":..},"target":{..},"maps":[matrix,...]}`.
//! - Unit-product file: `{"group":G,"size":n,"factors":[{"type":"elementary","row":0,"col":1,"entry":element},{"type":"unit","index":0,"sign":1,"element":[..]}]}`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::complexes::{ChainMap, CochainComplex};
use crate::error::{Error, Result};
use crate::groupring::{RingElement, RingMatrix};
use crate::groups::{GroupElement, GroupSpec};
use crate::invariants::{UnitFactor, UnitProduct};

/// Rounds to 12 significant decimal digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Plain decimal rendering with at most 12 significant digits.
pub fn fmt12(x: f64) -> String {
    let r = round12(x);
    if r == 0.0 {
        return "0".into();
    }
    format!("{r}")
}

/// Rounds every non-integer number in a JSON tree to 12 significant digits.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round12(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RingElementWire(pub Vec<(Vec<i64>, i64, i64)>);

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RingMatrixWire {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, RingElementWire)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixFile {
    pub group: GroupSpec,
    #[serde(flatten)]
    pub matrix: RingMatrixWire,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexFile {
    pub group: GroupSpec,
    pub ranks: Vec<usize>,
    pub differentials: Vec<RingMatrixWire>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexBody {
    pub ranks: Vec<usize>,
    pub differentials: Vec<RingMatrixWire>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainMapFile {
    pub group: GroupSpec,
    pub source: ComplexBody,
    pub target: ComplexBody,
    pub maps: Vec<RingMatrixWire>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum UnitFactorWire {
    Elementary { row: usize, col: usize, entry: RingElementWire },
    Unit { index: usize, sign: i64, element: Vec<i64> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnitProductFile {
    pub group: GroupSpec,
    pub size: usize,
    pub factors: Vec<UnitFactorWire>,
}

impl RingElementWire {
    pub fn to_element(&self, spec: &GroupSpec) -> Result<RingElement> {
        let mut terms = Vec::with_capacity(self.0.len());
        for (coords, num, den) in &self.0 {
            if *den == 0 {
                return Err(Error::Coefficient(format!("zero denominator at {coords:?}")));
            }
            let g = GroupElement(coords.clone());
            spec.check(&g)?;
            terms.push((g, BigRational::new(BigInt::from(*num), BigInt::from(*den))));
        }
        RingElement::from_terms(spec.clone(), terms)
    }

    pub fn from_element(a: &RingElement) -> Result<Self> {
        let mut out = Vec::with_capacity(a.len());
        for (g, c) in a.terms() {
            let num = c.numer().to_i64();
            let den = c.denom().to_i64();
            match (num, den) {
                (Some(n), Some(d)) => out.push((g.0.clone(), n, d)),
                _ => return Err(Error::Coefficient(format!("coefficient {c} exceeds 64 bits"))),
            }
        }
        Ok(RingElementWire(out))
    }
}

impl RingMatrixWire {
    pub fn to_matrix(&self, spec: &GroupSpec) -> Result<RingMatrix> {
        let entries = self
            .entries
            .iter()
            .map(|(i, j, e)| Ok(((*i, *j), e.to_element(spec)?)))
            .collect::<Result<Vec<_>>>()?;
        RingMatrix::from_entries(spec.clone(), self.rows, self.cols, entries)
    }

    pub fn from_matrix(m: &RingMatrix) -> Result<Self> {
        let entries = m
            .entries()
            .map(|(&(i, j), e)| Ok((i, j, RingElementWire::from_element(e)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(RingMatrixWire { rows: m.rows(), cols: m.cols(), entries })
    }
}

pub fn parse_matrix_file(text: &str) -> Result<(GroupSpec, RingMatrix)> {
    let file: MatrixFile = serde_json::from_str(text)?;
    file.group.validate()?;
    let m = file.matrix.to_matrix(&file.group)?;
    Ok((file.group, m))
}

pub fn matrix_file_json(m: &RingMatrix) -> Result<String> {
    let file = MatrixFile { group: m.spec().clone(), matrix: RingMatrixWire::from_matrix(m)? };
    Ok(serde_json::to_string_pretty(&file)?)
}

/// Loads a complex and runs the exact `d ∘ d = 0` check.
pub fn parse_complex_file(text: &str) -> Result<CochainComplex> {
    let file: ComplexFile = serde_json::from_str(text)?;
    file.group.validate()?;
    ComplexBody { ranks: file.ranks, differentials: file.differentials }.to_complex(&file.group)
}

impl ComplexBody {
    pub fn to_complex(&self, spec: &GroupSpec) -> Result<CochainComplex> {
        let diffs = self.differentials.iter().map(|d| d.to_matrix(spec)).collect::<Result<Vec<_>>>()?;
        CochainComplex::new(spec.clone(), self.ranks.clone(), diffs)
    }
}

/// Loads a chain map and checks both complexes and the commuting squares.
pub fn parse_chain_map_file(text: &str) -> Result<ChainMap> {
    let file: ChainMapFile = serde_json::from_str(text)?;
    file.group.validate()?;
    let source = file.source.to_complex(&file.group)?;
    let target = file.target.to_complex(&file.group)?;
    let maps = file.maps.iter().map(|m| m.to_matrix(&file.group)).collect::<Result<Vec<_>>>()?;
    ChainMap::new(source, target, maps)
}

pub fn complex_file_json(c: &CochainComplex) -> Result<String> {
    let file = ComplexFile {
        group: c.spec().clone(),
        ranks: c.ranks().to_vec(),
        differentials: c.differentials().iter().map(RingMatrixWire::from_matrix).collect::<Result<_>>()?,
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn parse_unit_product_file(text: &str) -> Result<UnitProduct> {
    let file: UnitProductFile = serde_json::from_str(text)?;
    file.group.validate()?;
    let factors = file
        .factors
        .iter()
        .map(|f| match f {
            UnitFactorWire::Elementary { row, col, entry } => {
                Ok(UnitFactor::Elementary { row: *row, col: *col, entry: entry.to_element(&file.group)? })
            }
            UnitFactorWire::Unit { index, sign, element } => {
                Ok(UnitFactor::Unit { index: *index, sign: *sign, element: GroupElement(element.clone()) })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    UnitProduct::new(file.group, file.size, factors)
}

/// Parses `[[coords, num, den], ...]`; the outer brackets may be omitted.
pub fn parse_terms(text: &str) -> Result<RingElementWire> {
    let trimmed = text.trim();
    serde_json::from_str::<RingElementWire>(trimmed)
        .or_else(|_| serde_json::from_str::<RingElementWire>(&format!("[{trimmed}]")))
        .map_err(|e| Error::Parse(format!("ring element: {e}")))
}

/// Parses a ring element over ℤ^d, inferring `d` from the coordinates.
pub fn parse_laurent(text: &str) -> Result<RingElement> {
    let wire = parse_terms(text)?;
    let d = wire.0.first().map(|t| t.0.len()).ok_or(Error::ZeroPolynomial)?;
    if d == 0 {
        return Err(Error::Parse("empty exponent vector".into()));
    }
    let el = wire.to_element(&GroupSpec::free_abelian(d))?;
    if el.terms().all(|(_, c)| c.is_zero()) {
        return Err(Error::ZeroPolynomial);
    }
    Ok(el)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupring::integer;

    #[test]
    fn rounding() {
        assert_eq!(fmt12(2.0), "2");
        assert_eq!(fmt12(0.1 + 0.2), "0.3");
        assert_eq!(fmt12(2.618033988749895), "2.61803398875");
        assert_eq!(fmt12(-0.0), "0");
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
    }

    #[test]
    fn json_rounding_leaves_integers() {
        let mut v = serde_json::json!({"a": 1.23456789012345, "b": [3, 0.1], "c": "x"});
        round_json(&mut v);
        assert_eq!(v.to_string(), r#"{"a":1.23456789012,"b":[3,0.1],"c":"x"}"#);
    }

    #[test]
    fn matrix_file_round_trip() {
        let text = r#"{"group":{"kind":"free_abelian","d":1},"rows":1,"cols":1,
                       "entries":[[0,0,[[[1],1,1],[[0],3,1],[[-1],1,1]]]]}"#;
        let (spec, m) = parse_matrix_file(text).unwrap();
        assert_eq!(spec, GroupSpec::free_abelian(1));
        assert_eq!(m.get(0, 0).unwrap().coefficient(&GroupElement(vec![0])), integer(3));
        let again = parse_matrix_file(&matrix_file_json(&m).unwrap()).unwrap().1;
        assert_eq!(again, m);
    }

    #[test]
    fn bad_files() {
        assert!(matches!(parse_matrix_file("{"), Err(Error::Parse(_))));
        let zero_den = r#"{"group":{"kind":"finite_cyclic","n":2},"rows":1,"cols":1,"entries":[[0,0,[[[0],1,0]]]]}"#;
        assert!(matches!(parse_matrix_file(zero_den), Err(Error::Coefficient(_))));
        let unreduced = r#"{"group":{"kind":"finite_cyclic","n":2},"rows":1,"cols":1,"entries":[[0,0,[[[2],1,1]]]]}"#;
        assert!(matches!(parse_matrix_file(unreduced), Err(Error::Shape { .. })));
        let out_of_range = r#"{"group":{"kind":"finite_cyclic","n":2},"rows":1,"cols":1,"entries":[[1,0,[[[0],1,1]]]]}"#;
        assert!(matches!(parse_matrix_file(out_of_range), Err(Error::Dimension(_))));
    }

    #[test]
    fn complex_loader_refuses_invalid() {
        let text = r#"{"group":{"kind":"free_abelian","d":1},"ranks":[1,1,1],
            "differentials":[{"rows":1,"cols":1,"entries":[[0,0,[[[1],1,1],[[0],-1,1]]]]},
                             {"rows":1,"cols":1,"entries":[[0,0,[[[1],1,1],[[0],-1,1]]]]}]}"#;
        assert!(matches!(parse_complex_file(text), Err(Error::NotACocomplex { degree: 0, .. })));
    }

    #[test]
    fn chain_map_file() {
        let body = r#"{"ranks":[1],"differentials":[]}"#;
        let text = format!(
            r#"{{"group":{{"kind":"finite_cyclic","n":4}},"source":{body},"target":{body},
                "maps":[{{"rows":1,"cols":1,"entries":[[0,0,[[[0],2,1],[[1],1,1]]]]}}]}}"#
        );
        let f = parse_chain_map_file(&text).unwrap();
        assert_eq!(f.maps().len(), 1);
        let wrong = text.replace(r#""maps":[{"rows":1"#, r#""maps":[{"rows":2"#);
        assert!(parse_chain_map_file(&wrong).is_err());
    }

    #[test]
    fn laurent_shorthand() {
        let p = parse_laurent("[[1],1,1],[[0],-2,1]").unwrap();
        assert_eq!(p.coefficient(&GroupElement(vec![0])), integer(-2));
        let q = parse_laurent("[[[1,0],1,2]]").unwrap();
        assert_eq!(q.spec(), &GroupSpec::free_abelian(2));
        assert!(parse_laurent("[]").is_err());
    }
}
