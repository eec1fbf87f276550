//! LOCC distinguishability verdicts: the complete decision table for `3 ⊗ 3`
//! and a conservative classifier for other dimensions.

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::analysis::{
    extension_witness, irreducible_product_subset, is_irreducible, is_upb, orthogonal_complement,
    reducibility_witness, ExtensionWitness, ReducibilityWitness, OPB_GENERAL_SIZE_LIMIT,
};
use crate::error::{Error, Result};
use crate::numerics::equal_up_to_phase;
use crate::serial::ray_to_wire;
use crate::states::{OrthogonalProductSet, Party, ProductState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Distinguishable,
    Indistinguishable,
    Unknown,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Distinguishable => "distinguishable",
            Verdict::Indistinguishable => "indistinguishable",
            Verdict::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClassTag {
    #[serde(rename = "irreducible-opb")]
    IrreducibleOpb,
    #[serde(rename = "upb")]
    Upb,
    #[serde(rename = "class3")]
    Class3,
}

impl ClassTag {
    pub fn name(self) -> &'static str {
        match self {
            ClassTag::IrreducibleOpb => "irreducible-opb",
            ClassTag::Upb => "upb",
            ClassTag::Class3 => "class3",
        }
    }
}

/// A member state sharing a local part with the complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignmentHit {
    pub index: usize,
    pub side: Party,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Witnesses {
    pub reducibility: Option<ReducibilityWitness>,
    pub extension: Option<ExtensionWitness>,
    pub complement: Option<ProductState>,
    pub alignment: Option<AlignmentHit>,
    /// An irreducible subset spanning a product space.
    pub product_subset: Option<Vec<usize>>,
}

impl Witnesses {
    /// Re-checks every attached witness against `e` from scratch.
    pub fn revalidate(&self, e: &OrthogonalProductSet) -> bool {
        let tol = e.tol();
        if let Some(w) = &self.reducibility {
            if !w.check(e) {
                return false;
            }
        }
        if let Some(w) = &self.extension {
            if w.max_overlap(e) > tol.zero_tol() {
                return false;
            }
        }
        if let Some(c) = &self.complement {
            if e.states().iter().any(|s| s.overlap(c).norm() > tol.zero_tol()) {
                return false;
            }
            if let Some(hit) = self.alignment {
                let aligned = hit.index < e.len()
                    && equal_up_to_phase(e.state(hit.index).part(hit.side), c.part(hit.side), tol)
                        .unwrap_or(false);
                if !aligned {
                    return false;
                }
            }
        }
        if let Some(subset) = &self.product_subset {
            if subset.iter().any(|&k| k >= e.len()) || !is_irreducible(&e.subset(subset)) {
                return false;
            }
            if !crate::analysis::subset_spans_product_space(e, subset).unwrap_or(false) {
                return false;
            }
        }
        true
    }

    pub fn to_json(&self, e: &OrthogonalProductSet) -> Value {
        let mut out = Map::new();
        if let Some(w) = &self.reducibility {
            let labels = |ix: &[usize]| ix.iter().map(|&k| e.state(k).label().to_string()).collect::<Vec<_>>();
            out.insert(
                "reducible".into(),
                json!({
                    "side": w.side.name(),
                    "partition": [labels(&w.partition.0), labels(&w.partition.1)],
                }),
            );
        }
        if let Some(w) = &self.extension {
            out.insert(
                "extension".into(),
                json!({
                    "a": ray_to_wire(w.state.a()),
                    "b": ray_to_wire(w.state.b()),
                    "subset": w.subset.iter().map(|&k| e.state(k).label()).collect::<Vec<_>>(),
                }),
            );
        }
        if let Some(c) = &self.complement {
            out.insert(
                "complement".into(),
                json!({"a": ray_to_wire(c.a()), "b": ray_to_wire(c.b())}),
            );
        }
        if let Some(hit) = self.alignment {
            out.insert(
                "aligned_with".into(),
                json!({"label": e.state(hit.index).label(), "side": hit.side.name()}),
            );
        }
        if let Some(subset) = &self.product_subset {
            out.insert(
                "product_subset".into(),
                json!(subset.iter().map(|&k| e.state(k).label()).collect::<Vec<_>>()),
            );
        }
        Value::Object(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub verdict: Verdict,
    pub class_tag: Option<ClassTag>,
    /// Stable identifier of the rule that decided the verdict.
    pub rationale: &'static str,
    pub witnesses: Witnesses,
}

impl ClassificationResult {
    fn new(verdict: Verdict, class_tag: Option<ClassTag>, rationale: &'static str) -> Self {
        Self {
            verdict,
            class_tag,
            rationale,
            witnesses: Witnesses::default(),
        }
    }

    fn distinguishable(rationale: &'static str) -> Self {
        Self::new(Verdict::Distinguishable, None, rationale)
    }

    fn indistinguishable(tag: ClassTag, rationale: &'static str) -> Self {
        Self::new(Verdict::Indistinguishable, Some(tag), rationale)
    }

    fn with(mut self, witnesses: Witnesses) -> Self {
        self.witnesses = witnesses;
        self
    }

    pub fn report(&self, e: &OrthogonalProductSet) -> Value {
        json!({
            "valid": true,
            "dims": [e.dim_a(), e.dim_b()],
            "size": e.len(),
            "verdict": self.verdict.name(),
            "class": self.class_tag.map(ClassTag::name),
            "rationale": self.rationale,
            "witnesses": self.witnesses.to_json(e),
        })
    }
}

/// Outcome of the class-3 test with the evidence gathered on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Class3Check {
    pub holds: bool,
    pub complement: Option<ProductState>,
    pub alignment: Option<AlignmentHit>,
    pub reducibility: Option<ReducibilityWitness>,
}

/// Irreducible, one state short of a basis, and the missing product state
/// shares no local part with any member.
pub fn class3_check(e: &OrthogonalProductSet) -> Result<Class3Check> {
    let mut out = Class3Check {
        holds: false,
        complement: None,
        alignment: None,
        reducibility: None,
    };
    if e.len() + 1 != e.dim_a() * e.dim_b() {
        return Ok(out);
    }
    if let Some(w) = reducibility_witness(e) {
        out.reducibility = Some(w);
        return Ok(out);
    }
    let c = orthogonal_complement(e)?;
    let tol = e.tol();
    out.alignment = e.states().iter().enumerate().find_map(|(k, s)| {
        [Party::A, Party::B].into_iter().find_map(|side| {
            equal_up_to_phase(s.part(side), c.part(side), tol)
                .unwrap_or(false)
                .then_some(AlignmentHit { index: k, side })
        })
    });
    out.holds = out.alignment.is_none();
    out.complement = Some(c);
    Ok(out)
}

pub fn class3_predicate(e: &OrthogonalProductSet) -> Result<bool> {
    Ok(class3_check(e)?.holds)
}

/// Complete decision for `3 ⊗ 3`; never returns [`Verdict::Unknown`].
pub fn classify_3x3(e: &OrthogonalProductSet) -> Result<ClassificationResult> {
    if e.dim_a() != 3 || e.dim_b() != 3 {
        return Err(Error::InvalidParameter(format!(
            "expected a 3x3 system, got {}x{}",
            e.dim_a(),
            e.dim_b()
        )));
    }
    let k = e.len();
    Ok(match k {
        0..=4 => ClassificationResult::distinguishable("size<=4"),
        5 => {
            if is_upb(e)? {
                ClassificationResult::indistinguishable(ClassTag::Upb, "main-theorem-class2-upb")
            } else {
                let w = extension_witness(e)?;
                ClassificationResult::distinguishable("size5-extendable").with(Witnesses {
                    extension: w,
                    ..Witnesses::default()
                })
            }
        }
        6 | 7 => ClassificationResult::distinguishable("size-6-or-7"),
        8 => class3_result(e, "main-theorem-class3", "size8-not-class3").map_err(surface_complement)?,
        _ => match reducibility_witness(e) {
            None => ClassificationResult::indistinguishable(ClassTag::IrreducibleOpb, "main-theorem-class1"),
            Some(w) => ClassificationResult::distinguishable("size9-reducible").with(Witnesses {
                reducibility: Some(w),
                ..Witnesses::default()
            }),
        },
    })
}

fn surface_complement(err: Error) -> Error {
    match err {
        Error::ComplementNotProduct { second_singular } => Error::Inconsistency(format!(
            "the orthogonal complement of an irreducible set of 8 states is not a product state \
             (second singular value {second_singular:.3e})"
        )),
        other => other,
    }
}

fn class3_result(
    e: &OrthogonalProductSet,
    yes: &'static str,
    no: &'static str,
) -> Result<ClassificationResult> {
    let check = class3_check(e)?;
    let witnesses = Witnesses {
        reducibility: check.reducibility,
        complement: check.complement,
        alignment: check.alignment,
        ..Witnesses::default()
    };
    Ok(if check.holds {
        ClassificationResult::indistinguishable(ClassTag::Class3, yes).with(witnesses)
    } else {
        ClassificationResult::distinguishable(no).with(witnesses)
    })
}

/// Classifier for arbitrary dimensions; answers only where a proven rule
/// applies and reports [`Verdict::Unknown`] otherwise.
pub fn classify_general(e: &OrthogonalProductSet) -> Result<ClassificationResult> {
    let (m, n) = (e.dim_a(), e.dim_b());
    if m.min(n) == 1 {
        return Ok(ClassificationResult::distinguishable("1xn"));
    }
    if m.min(n) == 2 {
        return Ok(ClassificationResult::distinguishable("2xn"));
    }
    if (m, n) == (3, 3) {
        return classify_3x3(e);
    }
    match is_upb(e) {
        Ok(true) => return Ok(ClassificationResult::indistinguishable(ClassTag::Upb, "class2-upb")),
        Ok(false) => {}
        Err(Error::SizeLimit { .. }) => return Ok(ClassificationResult::new(Verdict::Unknown, None, "size-limit")),
        Err(err) => return Err(err),
    }
    if e.len() + 1 == m * n {
        let result = class3_result(e, "class3", "uncharacterized").map_err(surface_complement)?;
        if result.verdict == Verdict::Indistinguishable {
            return Ok(result);
        }
        return Ok(ClassificationResult {
            verdict: Verdict::Unknown,
            ..result
        });
    }
    if e.len() == m * n {
        if m * n > OPB_GENERAL_SIZE_LIMIT {
            return Ok(ClassificationResult::new(Verdict::Unknown, None, "size-limit"));
        }
        return Ok(match irreducible_product_subset(e)? {
            Some(subset) => ClassificationResult::indistinguishable(
                ClassTag::IrreducibleOpb,
                "irreducible-product-subset",
            )
            .with(Witnesses {
                product_subset: Some(subset),
                ..Witnesses::default()
            }),
            None => ClassificationResult::distinguishable("no-irreducible-product-subset"),
        });
    }
    Ok(ClassificationResult::new(Verdict::Unknown, None, "uncharacterized"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{basis_vector, Tolerance};

    fn computational(m: usize, n: usize) -> OrthogonalProductSet {
        let tol = Tolerance::default();
        let states = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| ProductState::new(format!("e{i}{j}"), basis_vector(m, i), basis_vector(n, j), tol).unwrap())
            .collect();
        OrthogonalProductSet::new(m, n, states, tol).unwrap()
    }

    #[test]
    fn reducible_basis_is_distinguishable() {
        let r = classify_3x3(&computational(3, 3)).unwrap();
        assert_eq!(r.verdict, Verdict::Distinguishable);
        assert_eq!(r.rationale, "size9-reducible");
        assert!(r.witnesses.revalidate(&computational(3, 3)));
    }

    #[test]
    fn computational_basis_minus_one_is_not_class3() {
        let e = computational(3, 3).without("e11").unwrap();
        assert!(!class3_predicate(&e).unwrap());
        assert_eq!(classify_3x3(&e).unwrap().verdict, Verdict::Distinguishable);
    }

    #[test]
    fn low_dimensions_are_distinguishable() {
        assert_eq!(classify_general(&computational(1, 5)).unwrap().rationale, "1xn");
        assert_eq!(classify_general(&computational(2, 4)).unwrap().rationale, "2xn");
        assert_eq!(classify_general(&computational(4, 2)).unwrap().rationale, "2xn");
    }

    #[test]
    fn non_square_grid_basis_goes_through_product_subsets() {
        let r = classify_general(&computational(3, 4)).unwrap();
        assert_eq!(r.verdict, Verdict::Distinguishable);
        assert_eq!(r.rationale, "no-irreducible-product-subset");
    }
}
