//! JSON ring and module definitions, and serializable reports.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chain::ChainSummary;
use crate::curve_ring::{CurveRing, RingOptions, RingReport};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::lattice::{AmbVec, Lattice};
use crate::polymat::PolyMatrix;
use crate::resolver::{Certificate, Resolution, Resolver};
use crate::series::{BranchVector, LaurentPoly};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldDef {
    Rational,
    Prime { p: u64 },
}

impl From<FieldDef> for FieldSpec {
    fn from(f: FieldDef) -> Self {
        match f {
            FieldDef::Rational => FieldSpec::Rational,
            FieldDef::Prime { p } => FieldSpec::Prime { p },
        }
    }
}

impl From<FieldSpec> for FieldDef {
    fn from(f: FieldSpec) -> Self {
        match f {
            FieldSpec::Rational => FieldDef::Rational,
            FieldSpec::Prime { p } => FieldDef::Prime { p },
        }
    }
}

/// A Laurent polynomial as `[[exponent, "coefficient"], …]`.
pub type PolyDef = Vec<(i64, String)>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RingDefinition {
    Semigroup {
        semigroup: Vec<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        field: Option<FieldDef>,
    },
    Explicit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        field: Option<FieldDef>,
        branches: usize,
        generators: Vec<Vec<PolyDef>>,
    },
}

pub fn parse_poly(field: FieldSpec, def: &PolyDef) -> Result<LaurentPoly> {
    let terms = def
        .iter()
        .map(|(e, c)| Ok((*e, field.parse(c)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LaurentPoly::from_terms(terms))
}

pub fn poly_def(p: &LaurentPoly) -> PolyDef {
    p.terms().map(|(e, c)| (e, c.to_string())).collect()
}

impl RingDefinition {
    pub fn field(&self) -> FieldSpec {
        match self {
            RingDefinition::Semigroup { field, .. } | RingDefinition::Explicit { field, .. } => {
                field.clone().map(FieldSpec::from).unwrap_or_default()
            }
        }
    }

    pub fn build(&self) -> Result<Arc<CurveRing>> {
        self.build_with(RingOptions::default())
    }

    pub fn build_with(&self, options: RingOptions) -> Result<Arc<CurveRing>> {
        let field = self.field();
        match self {
            RingDefinition::Semigroup { semigroup, .. } => CurveRing::semigroup_with(field, semigroup, options),
            RingDefinition::Explicit {
                branches, generators, ..
            } => {
                let gens = generators
                    .iter()
                    .map(|g| {
                        Ok(BranchVector(
                            g.iter().map(|p| parse_poly(field, p)).collect::<Result<_>>()?,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                CurveRing::build_with(field, *branches, gens, options)
            }
        }
    }

    /// Explicit definition reproducing `ring`.
    pub fn of_ring(ring: &CurveRing) -> RingDefinition {
        RingDefinition::Explicit {
            field: Some(ring.field().into()),
            branches: ring.branches(),
            generators: ring
                .generators()
                .iter()
                .map(|g| g.0.iter().map(poly_def).collect())
                .collect(),
        }
    }
}

/// Where a module file finds its ring: a path or an inline definition.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RingRef {
    Path(String),
    Inline(RingDefinition),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModuleDefinition {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ring: Option<RingRef>,
    pub ambient_rank: Vec<usize>,
    pub generators: Vec<Vec<PolyDef>>,
    pub tail: Vec<i64>,
}

impl ModuleDefinition {
    pub fn build(&self, ring: Arc<CurveRing>) -> Result<Lattice> {
        let field = ring.field();
        let gens = self
            .generators
            .iter()
            .map(|g| g.iter().map(|p| parse_poly(field, p)).collect::<Result<AmbVec>>())
            .collect::<Result<Vec<_>>>()?;
        if let Some(g) = gens.iter().find(|g| g.len() != self.tail.len()) {
            return Err(Error::NotTorsionFree(format!(
                "generator with {} entries for ambient rank {}",
                g.len(),
                self.tail.len()
            )));
        }
        Lattice::from_definition(ring, &self.ambient_rank, &gens, &self.tail)
    }

    /// Definition reproducing `l`, with coordinates grouped by branch.
    pub fn of_lattice(l: &Lattice) -> Option<ModuleDefinition> {
        let ring = l.ring();
        let shape = l.shape();
        if shape.windows(2).any(|w| w[0] > w[1]) {
            return None;
        }
        let ambient_rank = ring
            .support()
            .iter()
            .map(|s| shape.iter().filter(|&&x| x == *s).count())
            .collect();
        Some(ModuleDefinition {
            ring: None,
            ambient_rank,
            generators: l
                .window_basis()
                .iter()
                .map(|v| v.iter().map(poly_def).collect())
                .collect(),
            tail: vec![l.hi(); l.rank()],
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RingOutput {
    pub branches: usize,
    pub field: FieldDef,
    pub local: bool,
    #[serde(flatten)]
    pub report: Option<RingReport>,
    pub conductor: Vec<i64>,
    pub delta: usize,
    pub value_semigroup: Option<Vec<i64>>,
    pub definition: RingDefinition,
}

pub fn ring_output(ring: &CurveRing) -> RingOutput {
    RingOutput {
        branches: ring.branches(),
        field: ring.field().into(),
        local: ring.is_local(),
        report: ring.report().ok(),
        conductor: ring.conductor().to_vec(),
        delta: ring.delta(),
        value_semigroup: (ring.branches() == 1).then(|| ring.value_semigroup_generators()),
        definition: RingDefinition::of_ring(ring),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainOutput {
    pub n: usize,
    pub e: usize,
    pub delta: usize,
    pub normalization_check: bool,
    pub tree: ChainSummary,
    pub family: Vec<String>,
}

pub fn matrix_strings(m: &PolyMatrix) -> Vec<Vec<String>> {
    (0..m.rows)
        .map(|r| (0..m.cols).map(|c| m.get(r, c).to_string()).collect())
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TermOutput {
    pub summands: Vec<String>,
    pub member_indices: Vec<usize>,
    pub rank: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolutionOutput {
    pub length: usize,
    pub target_rank: usize,
    pub terms: Vec<TermOutput>,
    pub maps: Vec<Vec<Vec<String>>>,
    pub certificate: Certificate,
}

pub fn resolution_output(resolver: &Resolver<'_>, res: &Resolution) -> ResolutionOutput {
    let names: Vec<String> = resolver
        .family()
        .members
        .iter()
        .map(|m| crate::chain::describe(m))
        .collect();
    ResolutionOutput {
        length: res.length(),
        target_rank: res.target.rank(),
        terms: res
            .terms
            .iter()
            .map(|t| TermOutput {
                summands: t.summands.iter().map(|&i| names[i].clone()).collect(),
                member_indices: t.summands.clone(),
                rank: t.lattice.rank(),
            })
            .collect(),
        maps: res.maps.iter().map(|m| matrix_strings(&m.matrix)).collect(),
        certificate: resolver.certify(res),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_shorthand_and_explicit() {
        let d: RingDefinition = serde_json::from_str(r#"{"semigroup":[2,5]}"#).unwrap();
        assert_eq!(d.build().unwrap().delta(), 2);
        let d: RingDefinition = serde_json::from_str(
            r#"{"field":{"kind":"prime","p":7},"branches":2,
                "generators":[[[[1,"1"]],[[1,"1"]]],[[[2,"1"]],[[2,"-1"]]]]}"#,
        )
        .unwrap();
        let r = d.build().unwrap();
        assert_eq!(r.field(), FieldSpec::Prime { p: 7 });
        assert_eq!(r.conductor(), &[2, 2]);
    }

    #[test]
    fn ring_round_trip() {
        let d: RingDefinition = serde_json::from_str(r#"{"semigroup":[3,4,5]}"#).unwrap();
        let r = d.build().unwrap();
        let json = serde_json::to_string(&ring_output(&r)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let back: RingDefinition = serde_json::from_value(v["definition"].clone()).unwrap();
        assert!(back.build().unwrap().same_ring(&r));
        assert_eq!(v["multiplicity"], 3);
    }

    #[test]
    fn module_round_trip() {
        let r = CurveRing::semigroup(FieldSpec::Rational, &[3, 4]).unwrap();
        let m: ModuleDefinition =
            serde_json::from_str(r#"{"ambient_rank":[1],"generators":[[[[0,"1"]]],[[[1,"1"]]]],"tail":[3]}"#).unwrap();
        let l = m.build(r.clone()).unwrap();
        assert_eq!(l.value_set(6), vec![0, 1, 3, 4, 5]);
        let again = ModuleDefinition::of_lattice(&l).unwrap().build(r).unwrap();
        assert_eq!(again, l);
    }

    #[test]
    fn bad_coefficient() {
        let d: RingDefinition = serde_json::from_str(r#"{"branches":1,"generators":[[[[2,"x"]]]]}"#).unwrap();
        assert!(matches!(d.build(), Err(Error::Parse(_))));
    }
}
