//! LOCC protocols as trees of local projective measurements.
//!
//! A branch node lets one party measure one copy of the unknown state; each
//! outcome is a subspace of that party's local space and leads to a child.
//! Leaves either name a state or reject. [`simulate`] walks a tree with the
//! Born rule and collapse, which is how every generated protocol is checked.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{equal_up_to_phase, ComplexVector, Subspace, Tolerance};
use crate::rectrep::{match_representation, r9, RectRepresentation};
use crate::serial::{vector_from_wire, vector_to_wire, WireVector};
use crate::states::{Dims, OrthogonalProductSet, Party, ProductState};

/// Paths whose probability drops to this value are not followed.
pub const PRUNE_PROBABILITY: f64 = 1e-15;
/// A protocol is reliable when every state is identified with probability at
/// least `1 - RELIABILITY_SLACK`.
pub const RELIABILITY_SLACK: f64 = 1e-9;
pub const SYNTHESIS_DEPTH_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub party: Party,
    pub copy: usize,
    pub outcomes: Vec<Subspace>,
}

impl Measurement {
    pub fn new(party: Party, copy: usize, outcomes: Vec<Subspace>) -> Self {
        Self {
            party,
            copy,
            outcomes,
        }
    }

    /// Outcomes are mutually orthogonal and together fill the local space.
    pub fn check(&self, dim: usize, tol: Tolerance) -> Result<()> {
        let incomplete = |msg: String| Error::IncompleteMeasurement(msg);
        if self.outcomes.is_empty() {
            return Err(incomplete("measurement without outcomes".into()));
        }
        let mut total = 0;
        for (k, o) in self.outcomes.iter().enumerate() {
            if o.ambient_dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: o.ambient_dim(),
                });
            }
            if o.dim() == 0 {
                return Err(incomplete(format!("outcome {k} is the zero subspace")));
            }
            total += o.dim();
            for (l, p) in self.outcomes.iter().enumerate().take(k) {
                let worst = o
                    .basis()
                    .iter()
                    .flat_map(|u| p.basis().iter().map(move |w| u.dotc(w).norm()))
                    .fold(0.0, f64::max);
                if worst > tol.zero_tol() {
                    return Err(incomplete(format!(
                        "outcomes {l} and {k} overlap (|<u|w>| = {worst:.3e})"
                    )));
                }
            }
        }
        if total != dim {
            return Err(incomplete(format!(
                "outcome dimensions sum to {total}, local dimension is {dim}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Leaf {
    Identify(String),
    Reject,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Branch {
        measurement: Measurement,
        children: Vec<Node>,
    },
    Leaf(Leaf),
}

impl Node {
    pub fn identify(label: impl Into<String>) -> Self {
        Node::Leaf(Leaf::Identify(label.into()))
    }

    pub fn reject() -> Self {
        Node::Leaf(Leaf::Reject)
    }

    pub fn branch(party: Party, copy: usize, outcomes: Vec<(Subspace, Node)>) -> Self {
        let (subspaces, children) = outcomes.into_iter().unzip();
        Node::Branch {
            measurement: Measurement::new(party, copy, subspaces),
            children,
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Branch { children, .. } => 1 + children.iter().map(Node::depth).max().unwrap_or(0),
        }
    }

    fn swap_parties(&mut self) {
        if let Node::Branch {
            measurement,
            children,
        } = self
        {
            measurement.party = measurement.party.other();
            children.iter_mut().for_each(Node::swap_parties);
        }
    }

    fn collect_labels<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Node::Leaf(Leaf::Identify(label)) => out.push(label),
            Node::Leaf(Leaf::Reject) => {}
            Node::Branch { children, .. } => children.iter().for_each(|c| c.collect_labels(out)),
        }
    }

    fn check(&self, dims: (usize, usize), copies: usize, tol: Tolerance) -> Result<()> {
        let Node::Branch {
            measurement,
            children,
        } = self
        else {
            return Ok(());
        };
        if measurement.copy >= copies {
            return Err(Error::InvalidParameter(format!(
                "measurement addresses copy {} of {copies}",
                measurement.copy
            )));
        }
        if children.len() != measurement.outcomes.len() {
            return Err(Error::IncompleteMeasurement(format!(
                "{} children for {} outcomes",
                children.len(),
                measurement.outcomes.len()
            )));
        }
        let dim = match measurement.party {
            Party::A => dims.0,
            Party::B => dims.1,
        };
        measurement.check(dim, tol)?;
        children.iter().try_for_each(|c| c.check(dims, copies, tol))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTree {
    dims: (usize, usize),
    copies: usize,
    root: Node,
}

impl ProtocolTree {
    pub fn new(dims: (usize, usize), copies: usize, root: Node, tol: Tolerance) -> Result<Self> {
        if copies == 0 {
            return Err(Error::InvalidParameter("a protocol needs at least one copy".into()));
        }
        root.check(dims, copies, tol)?;
        Ok(Self { dims, copies, root })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Longest chain of measurements.
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn leaf_labels(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.root.collect_labels(&mut out);
        out
    }

    /// The same protocol with the parties exchanged.
    pub fn swapped(&self) -> Self {
        let mut root = self.root.clone();
        root.swap_parties();
        Self {
            dims: (self.dims.1, self.dims.0),
            copies: self.copies,
            root,
        }
    }

    pub fn to_wire(&self) -> ProtocolFile {
        ProtocolFile {
            dims: Dims {
                a: self.dims.0,
                b: self.dims.1,
            },
            copies: self.copies,
            root: node_to_wire(&self.root),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_wire()).expect("protocol serializes")
    }

    pub fn from_json(text: &str, tol: Tolerance) -> Result<Self> {
        let file: ProtocolFile =
            serde_json::from_str(text).map_err(|e| Error::MalformedInput(e.to_string()))?;
        let dims = (file.dims.a, file.dims.b);
        let root = node_from_wire(file.root, dims, tol)?;
        Self::new(dims, file.copies, root, tol)
    }
}

/// The protocol file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolFile {
    pub dims: Dims,
    pub copies: usize,
    pub root: WireNode,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WireNode {
    Branch {
        party: Party,
        copy: usize,
        outcomes: Vec<WireOutcome>,
    },
    Identify {
        identify: String,
    },
    Reject {
        reject: bool,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireOutcome {
    pub basis: Vec<WireVector>,
    pub next: WireNode,
}

fn node_to_wire(node: &Node) -> WireNode {
    match node {
        Node::Leaf(Leaf::Identify(label)) => WireNode::Identify {
            identify: label.clone(),
        },
        Node::Leaf(Leaf::Reject) => WireNode::Reject { reject: true },
        Node::Branch {
            measurement,
            children,
        } => WireNode::Branch {
            party: measurement.party,
            copy: measurement.copy,
            outcomes: measurement
                .outcomes
                .iter()
                .zip(children)
                .map(|(o, c)| WireOutcome {
                    basis: o.basis().iter().map(vector_to_wire).collect(),
                    next: node_to_wire(c),
                })
                .collect(),
        },
    }
}

fn node_from_wire(node: WireNode, dims: (usize, usize), tol: Tolerance) -> Result<Node> {
    match node {
        WireNode::Identify { identify } => Ok(Node::identify(identify)),
        WireNode::Reject { reject: true } => Ok(Node::reject()),
        WireNode::Reject { reject: false } => Err(Error::MalformedInput(
            "leaf must be {\"identify\": label} or {\"reject\": true}".into(),
        )),
        WireNode::Branch {
            party,
            copy,
            outcomes,
        } => {
            let dim = match party {
                Party::A => dims.0,
                Party::B => dims.1,
            };
            let mut children = Vec::with_capacity(outcomes.len());
            let mut subspaces = Vec::with_capacity(outcomes.len());
            for o in outcomes {
                let basis = o
                    .basis
                    .iter()
                    .map(|w| vector_from_wire(w, "outcome basis"))
                    .collect::<Result<Vec<_>>>()?;
                subspaces.push(
                    Subspace::from_orthonormal(basis, dim, tol)
                        .map_err(|e| Error::IncompleteMeasurement(format!("outcome basis: {e}")))?,
                );
                children.push(node_from_wire(o.next, dims, tol)?);
            }
            Ok(Node::Branch {
                measurement: Measurement::new(party, copy, subspaces),
                children,
            })
        }
    }
}

/// Probability mass reaching each kind of leaf.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LeafDistribution {
    pub identified: BTreeMap<String, f64>,
    pub reject: f64,
}

impl LeafDistribution {
    pub fn total(&self) -> f64 {
        self.identified.values().sum::<f64>() + self.reject
    }

    pub fn probability_of(&self, label: &str) -> f64 {
        self.identified.get(label).copied().unwrap_or(0.0)
    }
}

/// Runs the protocol on independent copies of `s`.
pub fn simulate(p: &ProtocolTree, s: &ProductState) -> Result<LeafDistribution> {
    for (expected, found) in [(p.dims.0, s.a().len()), (p.dims.1, s.b().len())] {
        if expected != found {
            return Err(Error::DimensionMismatch { expected, found });
        }
    }
    let mut copies = vec![[s.a().clone(), s.b().clone()]; p.copies];
    let mut dist = LeafDistribution::default();
    walk(&p.root, &mut copies, 1.0, &mut dist)?;
    Ok(dist)
}

fn walk(
    node: &Node,
    copies: &mut [[ComplexVector; 2]],
    prob: f64,
    dist: &mut LeafDistribution,
) -> Result<()> {
    match node {
        Node::Leaf(Leaf::Identify(label)) => {
            *dist.identified.entry(label.clone()).or_insert(0.0) += prob;
        }
        Node::Leaf(Leaf::Reject) => dist.reject += prob,
        Node::Branch {
            measurement,
            children,
        } => {
            if children.len() != measurement.outcomes.len() {
                return Err(Error::IncompleteMeasurement("child count mismatch".into()));
            }
            let slot = match measurement.party {
                Party::A => 0,
                Party::B => 1,
            };
            let v = copies[measurement.copy][slot].clone();
            let norm2 = v.norm_squared();
            for (outcome, child) in measurement.outcomes.iter().zip(children) {
                let pv = outcome.project(&v)?;
                let q = pv.norm_squared() / norm2;
                if prob * q <= PRUNE_PROBABILITY {
                    continue;
                }
                copies[measurement.copy][slot] = pv.unscale(q.sqrt() * norm2.sqrt());
                walk(child, copies, prob * q, dist)?;
            }
            copies[measurement.copy][slot] = v;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReliabilityReport {
    pub reliable: bool,
    /// Probability of naming the right state.
    pub per_state: BTreeMap<String, f64>,
    pub reject_mass: BTreeMap<String, f64>,
    /// Largest `|Σ leaves − 1|` over the states.
    #[serde(skip)]
    pub normalization_defect: f64,
}

/// Simulates every state of `e` and checks that each is named with
/// probability one.
pub fn reliability(p: &ProtocolTree, e: &OrthogonalProductSet) -> Result<ReliabilityReport> {
    if p.dims != (e.dim_a(), e.dim_b()) {
        return Err(Error::DimensionMismatch {
            expected: p.dims.0 * p.dims.1,
            found: e.dim_a() * e.dim_b(),
        });
    }
    let mut report = ReliabilityReport {
        reliable: true,
        per_state: BTreeMap::new(),
        reject_mass: BTreeMap::new(),
        normalization_defect: 0.0,
    };
    for s in e.states() {
        let dist = simulate(p, s)?;
        let success = dist.probability_of(s.label());
        report.normalization_defect = report.normalization_defect.max((dist.total() - 1.0).abs());
        report.reliable &= success >= 1.0 - RELIABILITY_SLACK;
        report.per_state.insert(s.label().to_string(), success);
        report.reject_mass.insert(s.label().to_string(), dist.reject);
    }
    report.reliable &= report.normalization_defect <= RELIABILITY_SLACK;
    Ok(report)
}

fn ray(v: &ComplexVector, tol: Tolerance) -> Result<Subspace> {
    Subspace::from_orthonormal(vec![v.normalize()], v.len(), tol)
}

fn rays(vs: &[&ComplexVector], tol: Tolerance) -> Result<Subspace> {
    let d = vs[0].len();
    Subspace::from_orthonormal(vs.iter().map(|v| (*v).clone()).collect(), d, tol)
}

fn require_reliable(p: ProtocolTree, e: &OrthogonalProductSet, what: &str) -> Result<ProtocolTree> {
    let report = reliability(&p, e)?;
    if !report.reliable {
        let worst = report
            .per_state
            .iter()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .map(|(l, q)| format!("{l} identified with probability {q:.12}"))
            .unwrap_or_default();
        return Err(Error::UnreliableProtocol(format!("{what}: {worst}")));
    }
    Ok(p)
}

/// Protocol identifying the eight states left after removing one
/// outer-rectangle state from a pinwheel-shaped basis.
///
/// The grid is turned by quarter turns until the removed state sits in the
/// first rectangle; the protocol is then peeled rectangle by rectangle, and
/// parties are swapped back for an odd number of turns.
pub fn gen_propdist_protocol(
    e_full: &OrthogonalProductSet,
    rep: &RectRepresentation,
    removed_label: &str,
) -> Result<ProtocolTree> {
    let tol = e_full.tol();
    let removed = e_full
        .index_of(removed_label)
        .ok_or_else(|| Error::UnknownLabel(removed_label.to_string()))?;
    let rep = rep
        .aligned_to(&r9())
        .ok_or_else(|| Error::InvalidRepresentation("representation is not pinwheel-shaped".into()))?;
    let assignment = match_representation(e_full, &rep)
        .ok_or_else(|| Error::InvalidRepresentation("representation does not reproduce the set".into()))?;
    let cells = rep.cell_states();
    let position = assignment
        .iter()
        .position(|&k| k == removed)
        .expect("every state has a cell");
    let rect = cells[position].0;
    if rect == 4 {
        return Err(Error::RemovedIsCenter(removed_label.to_string()));
    }

    let turns = (4 - rect) % 4;
    let mut turned = rep;
    let mut e_turned = e_full.clone();
    for _ in 0..turns {
        turned = turned
            .rotated()
            .aligned_to(&r9())
            .expect("quarter turn preserves the pinwheel");
        e_turned = e_turned.transposed();
    }
    let assignment = match_representation(&e_turned, &turned)
        .ok_or_else(|| Error::Inconsistency("turned representation lost the set".into()))?;
    let cells = turned.cell_states();
    let label_at = |i: usize, j: usize| -> String {
        let p = cells
            .iter()
            .position(|c| c.1 == i && c.2 == j)
            .expect("cell exists");
        e_turned.state(assignment[p]).label().to_string()
    };
    let survivor = [(0, 0), (0, 1)]
        .into_iter()
        .map(|(i, j)| label_at(i, j))
        .find(|l| l != removed_label)
        .expect("one first-rectangle state survives");
    if label_at(0, 0) != removed_label && label_at(0, 1) != removed_label {
        return Err(Error::Inconsistency("removed state left the first rectangle".into()));
    }

    let a = turned.basis_a();
    let b = turned.basis_b();
    let root = Node::branch(
        Party::B,
        0,
        vec![
            (
                ray(&b[0], tol)?,
                Node::branch(
                    Party::A,
                    0,
                    vec![
                        (ray(&a[0], tol)?, Node::identify(survivor.clone())),
                        (ray(&turned.local_a(3, 1), tol)?, Node::identify(label_at(1, 0))),
                        (ray(&turned.local_a(3, 2), tol)?, Node::identify(label_at(2, 0))),
                    ],
                ),
            ),
            (
                rays(&[&b[1], &b[2]], tol)?,
                Node::branch(
                    Party::A,
                    0,
                    vec![
                        (
                            ray(&a[2], tol)?,
                            Node::branch(
                                Party::B,
                                0,
                                vec![
                                    (ray(&turned.local_b(2, 1), tol)?, Node::identify(label_at(2, 1))),
                                    (ray(&turned.local_b(2, 2), tol)?, Node::identify(label_at(2, 2))),
                                    (ray(&b[0], tol)?, Node::reject()),
                                ],
                            ),
                        ),
                        (
                            rays(&[&a[0], &a[1]], tol)?,
                            Node::branch(
                                Party::B,
                                0,
                                vec![
                                    (
                                        ray(&b[2], tol)?,
                                        Node::branch(
                                            Party::A,
                                            0,
                                            vec![
                                                (ray(&turned.local_a(1, 0), tol)?, Node::identify(label_at(0, 2))),
                                                (ray(&turned.local_a(1, 1), tol)?, Node::identify(label_at(1, 2))),
                                                (ray(&a[2], tol)?, Node::reject()),
                                            ],
                                        ),
                                    ),
                                    (
                                        rays(&[&b[0], &b[1]], tol)?,
                                        Node::branch(
                                            Party::A,
                                            0,
                                            vec![
                                                (ray(&a[0], tol)?, Node::identify(survivor)),
                                                (ray(&a[1], tol)?, Node::identify(label_at(1, 1))),
                                                (ray(&a[2], tol)?, Node::reject()),
                                            ],
                                        ),
                                    ),
                                ],
                            ),
                        ),
                    ],
                ),
            ),
        ],
    );
    let mut tree = ProtocolTree::new((3, 3), 1, root, tol)?;
    if turns % 2 == 1 {
        tree = tree.swapped();
    }
    require_reliable(tree, &e_full.without(removed_label)?, "one-removal protocol")
}

/// Two-copy protocol for a represented basis: the first copy is measured in
/// the local bases, which pins down the rectangle; the second copy is
/// measured in that rectangle's rotated bases.
pub fn gen_two_copy_protocol(e: &OrthogonalProductSet, rep: &RectRepresentation) -> Result<ProtocolTree> {
    let tol = e.tol();
    let assignment = match_representation(e, rep)
        .ok_or_else(|| Error::InvalidRepresentation("representation does not reproduce the set".into()))?;
    let cells = rep.cell_states();
    let (m, n) = rep.dims();
    let label_at = |i: usize, j: usize| -> String {
        let p = cells
            .iter()
            .position(|c| c.1 == i && c.2 == j)
            .expect("cell exists");
        e.state(assignment[p]).label().to_string()
    };
    let decomp = rep.decomposition();

    let second_copy = |i: usize, j: usize| -> Result<Node> {
        let k = decomp.rectangle_of(i, j).expect("tiling covers the cell");
        let r = &decomp.rectangles()[k];
        let mut a_outcomes = Vec::with_capacity(m);
        for &row in &r.rows {
            let mut b_outcomes = Vec::with_capacity(n);
            for &col in &r.cols {
                b_outcomes.push((ray(&rep.local_b(k, col), tol)?, Node::identify(label_at(row, col))));
            }
            for col in (0..n).filter(|c| !r.cols.contains(c)) {
                b_outcomes.push((ray(&rep.basis_b()[col], tol)?, Node::reject()));
            }
            a_outcomes.push((ray(&rep.local_a(k, row), tol)?, Node::branch(Party::B, 1, b_outcomes)));
        }
        for row in (0..m).filter(|x| !r.rows.contains(x)) {
            a_outcomes.push((ray(&rep.basis_a()[row], tol)?, Node::reject()));
        }
        Ok(Node::branch(Party::A, 1, a_outcomes))
    };

    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            cols.push((ray(&rep.basis_b()[j], tol)?, second_copy(i, j)?));
        }
        rows.push((ray(&rep.basis_a()[i], tol)?, Node::branch(Party::B, 0, cols)));
    }
    let tree = ProtocolTree::new((m, n), 2, Node::branch(Party::A, 0, rows), tol)?;
    require_reliable(tree, e, "two-copy protocol")
}

#[derive(Debug, Clone)]
struct Candidate {
    label: String,
    parts: [ComplexVector; 2],
}

/// Bounded search for a one-copy protocol using measurements built from the
/// candidates' own local vectors: `{v, v⊥}` splits and maximal sets of
/// mutually orthogonal vectors completed to a full measurement. A measurement
/// is admissible only if, in every outcome, the collapsed candidates remain
/// pairwise orthogonal. `None` means the search was exhausted, which says
/// nothing about indistinguishability.
pub fn synthesize_protocol(e: &OrthogonalProductSet, max_depth: usize) -> Result<Option<ProtocolTree>> {
    if max_depth > SYNTHESIS_DEPTH_LIMIT {
        return Err(Error::SizeLimit {
            what: "synthesis depth",
            size: max_depth,
            limit: SYNTHESIS_DEPTH_LIMIT,
        });
    }
    let tol = e.tol();
    let candidates: Vec<Candidate> = e
        .states()
        .iter()
        .map(|s| Candidate {
            label: s.label().to_string(),
            parts: [s.a().clone(), s.b().clone()],
        })
        .collect();
    let dims = (e.dim_a(), e.dim_b());
    let Some(root) = synthesize_node(&candidates, max_depth, dims, tol)? else {
        return Ok(None);
    };
    let tree = ProtocolTree::new(dims, 1, root, tol)?;
    require_reliable(tree, e, "synthesized protocol").map(Some)
}

fn synthesize_node(
    candidates: &[Candidate],
    depth: usize,
    dims: (usize, usize),
    tol: Tolerance,
) -> Result<Option<Node>> {
    match candidates {
        [] => return Ok(Some(Node::reject())),
        [only] => return Ok(Some(Node::identify(only.label.clone()))),
        _ if depth == 0 => return Ok(None),
        _ => {}
    }
    for (party, outcomes) in candidate_measurements(candidates, dims, tol)? {
        let Some(split) = split_candidates(candidates, party, &outcomes, tol)? else {
            continue;
        };
        let mut children = Vec::with_capacity(split.len());
        for part in &split {
            match synthesize_node(part, depth - 1, dims, tol)? {
                Some(child) => children.push(child),
                None => break,
            }
        }
        if children.len() == split.len() {
            return Ok(Some(Node::Branch {
                measurement: Measurement::new(party, 0, outcomes),
                children,
            }));
        }
    }
    Ok(None)
}

/// Collapses the candidates onto each outcome. `None` when the measurement
/// is useless (a single populated outcome) or destroys orthogonality.
fn split_candidates(
    candidates: &[Candidate],
    party: Party,
    outcomes: &[Subspace],
    tol: Tolerance,
) -> Result<Option<Vec<Vec<Candidate>>>> {
    let slot = match party {
        Party::A => 0,
        Party::B => 1,
    };
    let mut split = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let mut here: Vec<Candidate> = Vec::new();
        for c in candidates {
            let pv = o.project(&c.parts[slot])?;
            if pv.norm() <= tol.zero_tol() {
                continue;
            }
            let mut collapsed = c.clone();
            collapsed.parts[slot] = pv.normalize();
            let clash = here.iter().any(|h| {
                (h.parts[0].dotc(&collapsed.parts[0]) * h.parts[1].dotc(&collapsed.parts[1])).norm()
                    > tol.zero_tol()
            });
            if clash {
                return Ok(None);
            }
            here.push(collapsed);
        }
        split.push(here);
    }
    if split.iter().filter(|s| !s.is_empty()).count() < 2 {
        return Ok(None);
    }
    Ok(Some(split))
}

fn candidate_measurements(
    candidates: &[Candidate],
    dims: (usize, usize),
    tol: Tolerance,
) -> Result<Vec<(Party, Vec<Subspace>)>> {
    let mut out = Vec::new();
    for (party, slot, dim) in [(Party::A, 0, dims.0), (Party::B, 1, dims.1)] {
        let mut distinct: Vec<ComplexVector> = Vec::new();
        for c in candidates {
            let v = &c.parts[slot];
            if !distinct.iter().any(|d| equal_up_to_phase(d, v, tol).unwrap_or(false)) {
                distinct.push(v.clone());
            }
        }
        // full measurements from maximal orthogonal families first: they
        // split the most
        for clique in maximal_orthogonal_families(&distinct, tol) {
            if clique.len() < 2 {
                continue;
            }
            let vs: Vec<&ComplexVector> = clique.iter().map(|&k| &distinct[k]).collect();
            let mut outcomes = vs.iter().map(|v| ray(v, tol)).collect::<Result<Vec<_>>>()?;
            let rest = rays(&vs, tol)?.orth_complement(tol);
            if rest.dim() > 0 {
                outcomes.push(rest);
            }
            out.push((party, outcomes));
        }
        for v in &distinct {
            let line = ray(v, tol)?;
            let rest = line.orth_complement(tol);
            if rest.dim() > 0 && dim > 1 {
                out.push((party, vec![line, rest]));
            }
        }
    }
    Ok(out)
}

/// Maximal cliques of the orthogonality graph (Bron–Kerbosch with pivot).
fn maximal_orthogonal_families(vs: &[ComplexVector], tol: Tolerance) -> Vec<Vec<usize>> {
    let n = vs.len();
    let adj: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| i != j && vs[i].dotc(&vs[j]).norm() <= tol.zero_tol()).collect())
        .collect();
    let mut out = Vec::new();
    bron_kerbosch(&adj, Vec::new(), (0..n).collect(), Vec::new(), &mut out);
    out.sort_by(|x: &Vec<usize>, y| y.len().cmp(&x.len()).then_with(|| x.cmp(y)));
    out
}

fn bron_kerbosch(adj: &[Vec<bool>], r: Vec<usize>, p: Vec<usize>, x: Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if p.is_empty() && x.is_empty() {
        let mut clique = r;
        clique.sort_unstable();
        out.push(clique);
        return;
    }
    let pivot = *p.iter().chain(&x).max_by_key(|&&u| p.iter().filter(|&&v| adj[u][v]).count()).unwrap();
    let mut p = p;
    let mut x = x;
    for v in p.clone() {
        if adj[pivot][v] {
            continue;
        }
        let mut r2 = r.clone();
        r2.push(v);
        let p2 = p.iter().copied().filter(|&u| adj[v][u]).collect();
        let x2 = x.iter().copied().filter(|&u| adj[v][u]).collect();
        bron_kerbosch(adj, r2, p2, x2, out);
        p.retain(|&u| u != v);
        x.push(v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{basis_vector, real_vector};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn single_leaf_protocol_names_its_state() {
        let p = ProtocolTree::new((2, 2), 1, Node::identify("x"), tol()).unwrap();
        let s = ProductState::new("y", basis_vector(2, 0), basis_vector(2, 1), tol()).unwrap();
        let d = simulate(&p, &s).unwrap();
        assert_eq!(d.probability_of("x"), 1.0);
    }

    #[test]
    fn born_rule_splits_evenly() {
        let rest = Subspace::from_orthonormal(vec![basis_vector(3, 1), basis_vector(3, 2)], 3, tol()).unwrap();
        let root = Node::branch(
            Party::A,
            0,
            vec![(ray(&basis_vector(3, 0), tol()).unwrap(), Node::identify("first")), (rest, Node::identify("rest"))],
        );
        let p = ProtocolTree::new((3, 3), 1, root, tol()).unwrap();
        let s = ProductState::new("s", real_vector(&[1.0, 1.0, 0.0]), basis_vector(3, 2), tol()).unwrap();
        let d = simulate(&p, &s).unwrap();
        assert!((d.probability_of("first") - 0.5).abs() < 1e-15);
        assert!((d.probability_of("rest") - 0.5).abs() < 1e-15);
    }

    #[test]
    fn incomplete_measurement_is_rejected() {
        let root = Node::branch(
            Party::A,
            0,
            vec![(ray(&basis_vector(2, 0), tol()).unwrap(), Node::identify("x"))],
        );
        assert!(matches!(
            ProtocolTree::new((2, 2), 1, root, tol()),
            Err(Error::IncompleteMeasurement(_))
        ));
    }

    #[test]
    fn two_product_states_need_one_measurement() {
        let states = vec![
            ProductState::new("p", basis_vector(2, 0), basis_vector(2, 0), tol()).unwrap(),
            ProductState::new("q", basis_vector(2, 1), basis_vector(2, 1), tol()).unwrap(),
        ];
        let e = OrthogonalProductSet::new(2, 2, states, tol()).unwrap();
        let p = synthesize_protocol(&e, 3).unwrap().unwrap();
        assert_eq!(p.depth(), 1);
        assert!(reliability(&p, &e).unwrap().reliable);
    }

    #[test]
    fn depth_guard() {
        let states = vec![ProductState::new("p", basis_vector(2, 0), basis_vector(2, 0), tol()).unwrap()];
        let e = OrthogonalProductSet::new(2, 2, states, tol()).unwrap();
        assert!(matches!(synthesize_protocol(&e, 13), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn cliques_of_the_computational_basis() {
        let vs: Vec<_> = (0..3).map(|k| basis_vector(3, k)).collect();
        assert_eq!(maximal_orthogonal_families(&vs, tol()), vec![vec![0, 1, 2]]);
    }
}
