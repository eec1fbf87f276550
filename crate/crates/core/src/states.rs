//! Product states, orthogonal product sets and their local structure.
//!
//! An [`OrthogonalProductSet`] can only be obtained through validation, so
//! every value of that type is a set of normalized, pairwise orthogonal,
//! pairwise distinct product states over fixed local dimensions.
//!
//! Local parts are compared with [`equal_up_to_phase`]. Because that relation
//! is tolerance-based it is not exactly transitive; side sets are formed by
//! comparing against the first representative of each class in input order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    equal_up_to_phase, kron, normalized, schmidt_factor, ComplexMatrix, ComplexVector, Tolerance,
};
use crate::serial::{ray_to_wire, vector_from_wire, WireVector};

/// One of the two parties; also used for the left (A) / right (B) side of an
/// alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::A => Party::B,
            Party::B => Party::A,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Party::A => "A",
            Party::B => "B",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    label: String,
    a: ComplexVector,
    b: ComplexVector,
}

impl ProductState {
    /// Builds `|a⟩⊗|b⟩`; both parts are normalized.
    pub fn new(
        label: impl Into<String>,
        a: ComplexVector,
        b: ComplexVector,
        tol: Tolerance,
    ) -> Result<Self> {
        Ok(Self {
            label: label.into(),
            a: normalized(&a, tol)?,
            b: normalized(&b, tol)?,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn a(&self) -> &ComplexVector {
        &self.a
    }

    pub fn b(&self) -> &ComplexVector {
        &self.b
    }

    pub fn part(&self, party: Party) -> &ComplexVector {
        match party {
            Party::A => &self.a,
            Party::B => &self.b,
        }
    }

    pub fn tensor(&self) -> ComplexVector {
        kron(&self.a, &self.b)
    }

    /// `⟨self|other⟩` of the full product vectors.
    pub fn overlap(&self, other: &ProductState) -> nalgebra::Complex<f64> {
        self.a.dotc(&other.a) * self.b.dotc(&other.b)
    }

    pub fn relabeled(&self, label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            ..self.clone()
        }
    }

    /// The same state with the parties exchanged.
    pub fn transposed(&self) -> Self {
        Self {
            label: self.label.clone(),
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }

    /// `(W_A ⊗ W_B)|a⟩|b⟩`.
    pub fn transformed(&self, w_a: &ComplexMatrix, w_b: &ComplexMatrix) -> Self {
        Self {
            label: self.label.clone(),
            a: w_a * &self.a,
            b: w_b * &self.b,
        }
    }

    pub fn to_wire(&self) -> StateEntry {
        StateEntry {
            label: Some(self.label.clone()),
            a: Some(ray_to_wire(&self.a)),
            b: Some(ray_to_wire(&self.b)),
            vec: None,
        }
    }
}

/// Row-major `a ⊗ b` of a product state.
pub fn tensor(s: &ProductState) -> ComplexVector {
    s.tensor()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalProductSet {
    dim_a: usize,
    dim_b: usize,
    states: Vec<ProductState>,
    tol: Tolerance,
}

impl OrthogonalProductSet {
    /// Validates dimensions, label uniqueness, distinctness and pairwise
    /// orthogonality.
    pub fn new(
        dim_a: usize,
        dim_b: usize,
        states: Vec<ProductState>,
        tol: Tolerance,
    ) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::MalformedInput(
                "local dimensions must be positive".into(),
            ));
        }
        for s in &states {
            if s.a.len() != dim_a {
                return Err(Error::DimensionMismatch {
                    expected: dim_a,
                    found: s.a.len(),
                });
            }
            if s.b.len() != dim_b {
                return Err(Error::DimensionMismatch {
                    expected: dim_b,
                    found: s.b.len(),
                });
            }
        }
        for (j, s) in states.iter().enumerate() {
            if states[..j].iter().any(|t| t.label == s.label) {
                return Err(Error::DuplicateLabel(s.label.clone()));
            }
        }
        for j in 0..states.len() {
            for i in 0..j {
                let (si, sj) = (&states[i], &states[j]);
                if equal_up_to_phase(&si.a, &sj.a, tol)? && equal_up_to_phase(&si.b, &sj.b, tol)? {
                    return Err(Error::DuplicateState {
                        i,
                        j,
                        label_i: si.label.clone(),
                        label_j: sj.label.clone(),
                    });
                }
                let residual = si.overlap(sj).norm();
                if residual > tol.zero_tol() {
                    return Err(Error::NotOrthogonal {
                        i,
                        j,
                        label_i: si.label.clone(),
                        label_j: sj.label.clone(),
                        residual,
                    });
                }
            }
        }
        Ok(Self {
            dim_a,
            dim_b,
            states,
            tol,
        })
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn dim(&self, party: Party) -> usize {
        match party {
            Party::A => self.dim_a,
            Party::B => self.dim_b,
        }
    }

    pub fn states(&self) -> &[ProductState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &ProductState {
        &self.states[i]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn tol(&self) -> Tolerance {
        self.tol
    }

    /// The set spans the whole space (it is an orthogonal product basis).
    pub fn is_basis(&self) -> bool {
        self.states.len() == self.dim_a * self.dim_b
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s.label == label)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.states.iter().map(|s| s.label.as_str()).collect()
    }

    /// Sub-OPS with the given state indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            dim_a: self.dim_a,
            dim_b: self.dim_b,
            states: indices.iter().map(|&i| self.states[i].clone()).collect(),
            tol: self.tol,
        }
    }

    /// Sub-OPS selected by a bit mask over state indices.
    pub fn subset_mask(&self, mask: u64) -> Self {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| mask >> i & 1 == 1).collect();
        self.subset(&idx)
    }

    pub fn without(&self, label: &str) -> Result<Self> {
        let k = self
            .index_of(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        let idx: Vec<usize> = (0..self.len()).filter(|&i| i != k).collect();
        Ok(self.subset(&idx))
    }

    /// Appends a state, revalidating the whole set.
    pub fn with_state(&self, s: ProductState) -> Result<Self> {
        let mut states = self.states.clone();
        states.push(s);
        Self::new(self.dim_a, self.dim_b, states, self.tol)
    }

    pub fn with_tolerance(&self, tol: Tolerance) -> Result<Self> {
        Self::new(self.dim_a, self.dim_b, self.states.clone(), tol)
    }

    /// Parties exchanged: an OPS of the `n ⊗ m` system.
    pub fn transposed(&self) -> Self {
        Self {
            dim_a: self.dim_b,
            dim_b: self.dim_a,
            states: self.states.iter().map(ProductState::transposed).collect(),
            tol: self.tol,
        }
    }

    /// Applies `W_A ⊗ W_B` to every state and revalidates.
    pub fn transformed(&self, w_a: &ComplexMatrix, w_b: &ComplexMatrix) -> Result<Self> {
        let states = self
            .states
            .iter()
            .map(|s| {
                let t = s.transformed(w_a, w_b);
                ProductState::new(t.label, t.a, t.b, self.tol)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.dim_a, self.dim_b, states, self.tol)
    }

    pub fn side_set(&self, side: Party) -> SideSet {
        side_set(self, side)
    }

    pub fn aligned_pairs(&self) -> Vec<AlignedPair> {
        aligned_pairs(self)
    }

    pub fn to_wire(&self) -> StatesFile {
        StatesFile {
            dims: Dims {
                a: self.dim_a,
                b: self.dim_b,
            },
            tolerance: Some(self.tol.zero_tol()),
            states: self.states.iter().map(ProductState::to_wire).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_wire()).expect("states serialize")
    }
}

/// Distinct local parts of one side, with the states carrying each.
#[derive(Debug, Clone, PartialEq)]
pub struct SideSet {
    pub side: Party,
    pub members: Vec<ComplexVector>,
    /// For each member, the indices of the states whose local part it is.
    pub occurrences: Vec<Vec<usize>>,
    /// For each state, the index of its member.
    pub member_of: Vec<usize>,
}

impl SideSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

pub fn side_set(e: &OrthogonalProductSet, side: Party) -> SideSet {
    let tol = e.tol;
    let mut members: Vec<ComplexVector> = Vec::new();
    let mut occurrences: Vec<Vec<usize>> = Vec::new();
    let mut member_of = Vec::with_capacity(e.len());
    for (k, s) in e.states.iter().enumerate() {
        let v = s.part(side);
        let hit = members
            .iter()
            .position(|m| equal_up_to_phase(m, v, tol).unwrap_or(false));
        match hit {
            Some(idx) => {
                occurrences[idx].push(k);
                member_of.push(idx);
            }
            None => {
                members.push(v.clone());
                occurrences.push(vec![k]);
                member_of.push(members.len() - 1);
            }
        }
    }
    SideSet {
        side,
        members,
        occurrences,
        member_of,
    }
}

/// Two states `i < j` whose local parts on `side` coincide up to phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct AlignedPair {
    pub i: usize,
    pub j: usize,
    pub side: Party,
}

/// All aligned pairs in lexicographic `(i, j)` order.
pub fn aligned_pairs(e: &OrthogonalProductSet) -> Vec<AlignedPair> {
    let mut out = Vec::new();
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            for side in [Party::A, Party::B] {
                let (u, v) = (e.states[i].part(side), e.states[j].part(side));
                if equal_up_to_phase(u, v, e.tol).unwrap_or(false) {
                    out.push(AlignedPair { i, j, side });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dims {
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<WireVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<WireVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vec: Option<WireVector>,
}

/// The states file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatesFile {
    pub dims: Dims,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub states: Vec<StateEntry>,
}

const FACTOR_CONSISTENCY: f64 = 1e-6;

impl StatesFile {
    /// Validates the file into an OPS. `tol_override` wins over the file's
    /// own tolerance, which wins over the default.
    pub fn into_set(self, tol_override: Option<Tolerance>) -> Result<OrthogonalProductSet> {
        let tol = match (tol_override, self.tolerance) {
            (Some(t), _) => t,
            (None, Some(x)) => Tolerance::new(x)?,
            (None, None) => Tolerance::default(),
        };
        let (m, n) = (self.dims.a, self.dims.b);
        if m == 0 || n == 0 {
            return Err(Error::MalformedInput(
                "local dimensions must be positive".into(),
            ));
        }
        let mut states = Vec::with_capacity(self.states.len());
        for (k, entry) in self.states.into_iter().enumerate() {
            let label = entry.label.unwrap_or_else(|| format!("s{k}"));
            let full = entry
                .vec
                .as_deref()
                .map(|w| vector_from_wire(w, &label))
                .transpose()?;
            if let Some(v) = &full {
                if v.len() != m * n {
                    return Err(Error::DimensionMismatch {
                        expected: m * n,
                        found: v.len(),
                    });
                }
            }
            let state = match (entry.a, entry.b) {
                (Some(a), Some(b)) => {
                    let s = ProductState::new(
                        label.clone(),
                        vector_from_wire(&a, &label)?,
                        vector_from_wire(&b, &label)?,
                        tol,
                    )?;
                    if s.a.len() != m {
                        return Err(Error::DimensionMismatch {
                            expected: m,
                            found: s.a.len(),
                        });
                    }
                    if s.b.len() != n {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            found: s.b.len(),
                        });
                    }
                    if let Some(v) = &full {
                        let v = normalized(v, tol)?;
                        if s.tensor().dotc(&v).norm() < 1.0 - FACTOR_CONSISTENCY {
                            return Err(Error::MalformedInput(format!(
                                "state {label:?}: \"vec\" disagrees with \"a\"/\"b\""
                            )));
                        }
                    }
                    s
                }
                (None, None) => {
                    let v = full.ok_or_else(|| {
                        Error::MalformedInput(format!(
                            "state {label:?}: needs \"a\" and \"b\" or \"vec\""
                        ))
                    })?;
                    let (a, b) = schmidt_factor(&v, m, n, tol)?;
                    ProductState::new(label, a, b, tol)?
                }
                _ => {
                    return Err(Error::MalformedInput(format!(
                        "state {label:?}: \"a\" and \"b\" must be given together"
                    )))
                }
            };
            states.push(state);
        }
        OrthogonalProductSet::new(m, n, states, tol)
    }
}

pub fn parse_states(text: &str) -> Result<OrthogonalProductSet> {
    parse_states_with(text, None)
}

pub fn parse_states_with(
    text: &str,
    tol_override: Option<Tolerance>,
) -> Result<OrthogonalProductSet> {
    let file: StatesFile =
        serde_json::from_str(text).map_err(|e| Error::MalformedInput(e.to_string()))?;
    file.into_set(tol_override)
}
