//! Rectangular decompositions and rectangular representations of orthogonal
//! product bases.
//!
//! A rectangle of the `m × n` index grid is a Cartesian product `I × J` of
//! arbitrary (not necessarily contiguous) row and column index sets. A
//! representation pairs a tiling of the grid by rectangles with orthonormal
//! local bases `α`, `β` and, for every rectangle `R`, local unitaries `U_R`,
//! `V_R` acting on `span{α_i : i ∈ I(R)}` and `span{β_j : j ∈ J(R)}`. The
//! represented basis is `{U_R α_i ⊗ V_R β_j : (i, j) ∈ R}`.
//!
//! `U_R` is stored as a `|I(R)| × |I(R)|` matrix in the coordinates of
//! `α_{I(R)}` taken in increasing index order: column `c` holds the
//! coordinates of `U_R α_{I(R)[c]}`. `V_R` likewise.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::analysis::is_irreducible;
use crate::error::{Error, Result};
use crate::numerics::{
    c64, equal_up_to_phase, unitarity_defect, ComplexMatrix, ComplexVector, Subspace, Tolerance,
};
use crate::serial::{matrix_from_wire, matrix_to_wire, vector_from_wire, vector_to_wire, WireMatrix, WireVector};
use crate::states::{side_set, Dims, OrthogonalProductSet, Party, ProductState};

/// Enumeration guard (cells) for [`enumerate_decompositions`].
pub const DECOMPOSITION_CELL_LIMIT: usize = 16;
/// Search guard (cells) for [`search_rect_rep`].
pub const SEARCH_CELL_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rectangle {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl Rectangle {
    pub fn new(mut rows: Vec<usize>, mut cols: Vec<usize>) -> Self {
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        Self { rows, cols }
    }

    pub fn area(&self) -> usize {
        self.rows.len() * self.cols.len()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.rows.contains(&i) && self.cols.contains(&j)
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .flat_map(move |&i| self.cols.iter().map(move |&j| (i, j)))
    }

    fn transposed(&self) -> Self {
        Self {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
        }
    }
}

/// A tiling of the `n_rows × n_cols` grid by rectangles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RectDecomposition {
    n_rows: usize,
    n_cols: usize,
    rectangles: Vec<Rectangle>,
}

impl RectDecomposition {
    pub fn new(n_rows: usize, n_cols: usize, rectangles: Vec<Rectangle>) -> Result<Self> {
        let d = Self {
            n_rows,
            n_cols,
            rectangles,
        };
        d.check()?;
        Ok(d)
    }

    fn check(&self) -> Result<()> {
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err(Error::InvalidRepresentation("empty grid".into()));
        }
        let mut owner = vec![None; self.n_rows * self.n_cols];
        for (k, r) in self.rectangles.iter().enumerate() {
            if r.rows.is_empty() || r.cols.is_empty() {
                return Err(Error::InvalidRepresentation(format!("rectangle {k} is empty")));
            }
            let sorted = |v: &[usize]| v.windows(2).all(|w| w[0] < w[1]);
            if !sorted(&r.rows) || !sorted(&r.cols) {
                return Err(Error::InvalidRepresentation(format!(
                    "rectangle {k}: index sets must be strictly increasing"
                )));
            }
            for (i, j) in r.cells() {
                if i >= self.n_rows || j >= self.n_cols {
                    return Err(Error::InvalidRepresentation(format!(
                        "rectangle {k}: cell ({i},{j}) outside the grid"
                    )));
                }
                let slot = &mut owner[i * self.n_cols + j];
                if let Some(other) = slot {
                    return Err(Error::InvalidRepresentation(format!(
                        "rectangles {other} and {k} overlap at ({i},{j})"
                    )));
                }
                *slot = Some(k);
            }
        }
        if let Some(cell) = owner.iter().position(Option::is_none) {
            return Err(Error::InvalidRepresentation(format!(
                "cell ({},{}) is not covered",
                cell / self.n_cols,
                cell % self.n_cols
            )));
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn rectangles(&self) -> &[Rectangle] {
        &self.rectangles
    }

    pub fn rectangle_of(&self, i: usize, j: usize) -> Option<usize> {
        self.rectangles.iter().position(|r| r.contains(i, j))
    }

    /// Same set of rectangles, in any order.
    pub fn same_tiling(&self, other: &RectDecomposition) -> bool {
        let mut x = self.rectangles.clone();
        let mut y = other.rectangles.clone();
        x.sort();
        y.sort();
        self.n_rows == other.n_rows && self.n_cols == other.n_cols && x == y
    }

    /// Relabels row `i` as `row_perm[i]` and column `j` as `col_perm[j]`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            rectangles: self
                .rectangles
                .iter()
                .map(|r| {
                    Rectangle::new(
                        r.rows.iter().map(|&i| row_perm[i]).collect(),
                        r.cols.iter().map(|&j| col_perm[j]).collect(),
                    )
                })
                .collect(),
        }
    }

    pub fn transposed(&self) -> Self {
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            rectangles: self.rectangles.iter().map(Rectangle::transposed).collect(),
        }
    }

    /// Quarter turn `(i, j) → (j, n − 1 − i)` of a square grid.
    pub fn rotated(&self) -> Self {
        let n = self.n_rows;
        let reverse: Vec<usize> = (0..n).map(|i| n - 1 - i).collect();
        let identity: Vec<usize> = (0..n).collect();
        self.transposed().permuted(&identity, &reverse)
    }
}

/// The five-rectangle pinwheel of the `3 × 3` grid:
/// `R1 = {0}×{0,1}`, `R2 = {0,1}×{2}`, `R3 = {2}×{1,2}`, `R4 = {1,2}×{0}`,
/// `R5 = {1}×{1}`.
pub fn r9() -> RectDecomposition {
    let rect = |rows: &[usize], cols: &[usize]| Rectangle::new(rows.to_vec(), cols.to_vec());
    RectDecomposition {
        n_rows: 3,
        n_cols: 3,
        rectangles: vec![
            rect(&[0], &[0, 1]),
            rect(&[0, 1], &[2]),
            rect(&[2], &[1, 2]),
            rect(&[1, 2], &[0]),
            rect(&[1], &[1]),
        ],
    }
}

/// Every tiling of the grid by combinatorial rectangles, without duplicates.
/// Each step covers the first uncovered cell (row-major) with a rectangle
/// whose index sets are tried in increasing bit-mask order.
pub fn enumerate_decompositions(n_rows: usize, n_cols: usize) -> Result<Vec<RectDecomposition>> {
    let cells = n_rows * n_cols;
    if cells > DECOMPOSITION_CELL_LIMIT {
        return Err(Error::SizeLimit {
            what: "decomposition enumeration",
            size: cells,
            limit: DECOMPOSITION_CELL_LIMIT,
        });
    }
    if cells == 0 {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    let mut out = Vec::new();
    let mut current = Vec::new();
    tile(n_rows, n_cols, 0, &mut current, &mut out);
    Ok(out)
}

fn cell_mask(n_cols: usize, rows: u32, cols: u32) -> u32 {
    let mut m = 0;
    for i in 0..32 {
        if rows >> i & 1 == 1 {
            m |= cols << (i * n_cols);
        }
    }
    m
}

fn tile(
    n_rows: usize,
    n_cols: usize,
    covered: u32,
    current: &mut Vec<Rectangle>,
    out: &mut Vec<RectDecomposition>,
) {
    let total = n_rows * n_cols;
    let Some(first) = (0..total).find(|&c| covered >> c & 1 == 0) else {
        out.push(RectDecomposition {
            n_rows,
            n_cols,
            rectangles: current.clone(),
        });
        return;
    };
    let (i, j) = (first / n_cols, first % n_cols);
    for rows in 1u32..1 << n_rows {
        if rows >> i & 1 == 0 {
            continue;
        }
        for cols in 1u32..1 << n_cols {
            if cols >> j & 1 == 0 {
                continue;
            }
            let cells = cell_mask(n_cols, rows, cols);
            if cells & covered != 0 {
                continue;
            }
            current.push(Rectangle::new(bits(rows), bits(cols)));
            tile(n_rows, n_cols, covered | cells, current, out);
            current.pop();
        }
    }
}

fn bits(mask: u32) -> Vec<usize> {
    (0..32).filter(|&k| mask >> k & 1 == 1).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RectRepresentation {
    decomp: RectDecomposition,
    basis_a: Vec<ComplexVector>,
    basis_b: Vec<ComplexVector>,
    /// `(U_R, V_R)` per rectangle, in rectangle order.
    unitaries: Vec<(ComplexMatrix, ComplexMatrix)>,
}

impl RectRepresentation {
    pub fn new(
        decomp: RectDecomposition,
        basis_a: Vec<ComplexVector>,
        basis_b: Vec<ComplexVector>,
        unitaries: Vec<(ComplexMatrix, ComplexMatrix)>,
        tol: Tolerance,
    ) -> Result<Self> {
        let rep = Self {
            decomp,
            basis_a,
            basis_b,
            unitaries,
        };
        rep.check(tol)?;
        Ok(rep)
    }

    fn check(&self, tol: Tolerance) -> Result<()> {
        self.decomp.check()?;
        let (m, n) = (self.decomp.n_rows, self.decomp.n_cols);
        for (name, basis, d) in [("basis_a", &self.basis_a, m), ("basis_b", &self.basis_b, n)] {
            if basis.len() != d {
                return Err(Error::InvalidRepresentation(format!(
                    "{name} has {} vectors, expected {d}",
                    basis.len()
                )));
            }
            Subspace::from_orthonormal(basis.clone(), d, tol)
                .map_err(|e| Error::InvalidRepresentation(format!("{name}: {e}")))?;
        }
        if self.unitaries.len() != self.decomp.rectangles.len() {
            return Err(Error::InvalidRepresentation(format!(
                "{} unitary pairs for {} rectangles",
                self.unitaries.len(),
                self.decomp.rectangles.len()
            )));
        }
        let limit = tol.zero_tol().max(1e-12);
        for (k, (r, (u, v))) in self.decomp.rectangles.iter().zip(&self.unitaries).enumerate() {
            if u.nrows() != r.rows.len() || u.ncols() != r.rows.len() {
                return Err(Error::InvalidRepresentation(format!(
                    "rectangle {k}: U is {}x{}, expected {}x{}",
                    u.nrows(),
                    u.ncols(),
                    r.rows.len(),
                    r.rows.len()
                )));
            }
            if v.nrows() != r.cols.len() || v.ncols() != r.cols.len() {
                return Err(Error::InvalidRepresentation(format!(
                    "rectangle {k}: V is {}x{}, expected {}x{}",
                    v.nrows(),
                    v.ncols(),
                    r.cols.len(),
                    r.cols.len()
                )));
            }
            let (du, dv) = (unitarity_defect(u), unitarity_defect(v));
            if du > limit || dv > limit {
                return Err(Error::InvalidRepresentation(format!(
                    "rectangle {k}: local operators are not unitary (defect {:.3e})",
                    du.max(dv)
                )));
            }
        }
        Ok(())
    }

    pub fn decomposition(&self) -> &RectDecomposition {
        &self.decomp
    }

    pub fn basis_a(&self) -> &[ComplexVector] {
        &self.basis_a
    }

    pub fn basis_b(&self) -> &[ComplexVector] {
        &self.basis_b
    }

    pub fn basis(&self, party: Party) -> &[ComplexVector] {
        match party {
            Party::A => &self.basis_a,
            Party::B => &self.basis_b,
        }
    }

    pub fn unitaries(&self) -> &[(ComplexMatrix, ComplexMatrix)] {
        &self.unitaries
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.decomp.n_rows, self.decomp.n_cols)
    }

    /// `U_R α_i` for row `i ∈ I(R)`.
    pub fn local_a(&self, rect: usize, i: usize) -> ComplexVector {
        let r = &self.decomp.rectangles[rect];
        apply_local(&self.unitaries[rect].0, &r.rows, &self.basis_a, i)
    }

    /// `V_R β_j` for column `j ∈ J(R)`.
    pub fn local_b(&self, rect: usize, j: usize) -> ComplexVector {
        let r = &self.decomp.rectangles[rect];
        apply_local(&self.unitaries[rect].1, &r.cols, &self.basis_b, j)
    }

    /// `(rectangle, row, column, state)` for every cell, rectangle by
    /// rectangle and row-major inside each rectangle.
    pub fn cell_states(&self) -> Vec<(usize, usize, usize, ComplexVector, ComplexVector)> {
        let mut out = Vec::new();
        for (k, r) in self.decomp.rectangles.iter().enumerate() {
            for (i, j) in r.cells() {
                out.push((k, i, j, self.local_a(k, i), self.local_b(k, j)));
            }
        }
        out
    }

    /// Parties exchanged: rows become columns and `U` becomes `V`.
    pub fn transposed(&self) -> Self {
        Self {
            decomp: self.decomp.transposed(),
            basis_a: self.basis_b.clone(),
            basis_b: self.basis_a.clone(),
            unitaries: self
                .unitaries
                .iter()
                .map(|(u, v)| (v.clone(), u.clone()))
                .collect(),
        }
    }

    /// Relabels basis indices: `α_i` becomes `α_{row_perm[i]}`, `β_j` becomes
    /// `β_{col_perm[j]}`. The represented basis is unchanged.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        let decomp = self.decomp.permuted(row_perm, col_perm);
        let mut basis_a = self.basis_a.clone();
        for (i, v) in self.basis_a.iter().enumerate() {
            basis_a[row_perm[i]] = v.clone();
        }
        let mut basis_b = self.basis_b.clone();
        for (j, v) in self.basis_b.iter().enumerate() {
            basis_b[col_perm[j]] = v.clone();
        }
        let unitaries = self
            .decomp
            .rectangles
            .iter()
            .zip(&decomp.rectangles)
            .zip(&self.unitaries)
            .map(|((old, new), (u, v))| {
                (
                    reindex(u, &old.rows, &new.rows, row_perm),
                    reindex(v, &old.cols, &new.cols, col_perm),
                )
            })
            .collect();
        Self {
            decomp,
            basis_a,
            basis_b,
            unitaries,
        }
    }

    /// Quarter turn of a square grid, `(i, j) → (j, n − 1 − i)`; the parties
    /// exchange roles.
    pub fn rotated(&self) -> Self {
        let n = self.decomp.n_rows;
        let reverse: Vec<usize> = (0..n).map(|i| n - 1 - i).collect();
        let identity: Vec<usize> = (0..n).collect();
        self.transposed().permuted(&identity, &reverse)
    }

    /// Puts rectangles in the order of `target`, which must be the same
    /// tiling.
    fn reordered_like(&self, target: &RectDecomposition) -> Option<Self> {
        if !self.decomp.same_tiling(target) {
            return None;
        }
        let order: Vec<usize> = target
            .rectangles
            .iter()
            .map(|t| self.decomp.rectangles.iter().position(|r| r == t))
            .collect::<Option<_>>()?;
        Some(Self {
            decomp: target.clone(),
            basis_a: self.basis_a.clone(),
            basis_b: self.basis_b.clone(),
            unitaries: order.iter().map(|&k| self.unitaries[k].clone()).collect(),
        })
    }

    /// An equivalent representation whose decomposition is exactly `target`,
    /// found by relabeling rows and columns.
    pub fn aligned_to(&self, target: &RectDecomposition) -> Option<Self> {
        let (m, n) = self.dims();
        if target.n_rows != m || target.n_cols != n || m > 4 || n > 4 {
            return None;
        }
        for rp in permutations(m) {
            for cp in permutations(n) {
                if self.decomp.permuted(&rp, &cp).same_tiling(target) {
                    return self.permuted(&rp, &cp).reordered_like(target);
                }
            }
        }
        None
    }

    pub fn to_wire(&self) -> RepresentationFile {
        RepresentationFile {
            dims: Dims {
                a: self.decomp.n_rows,
                b: self.decomp.n_cols,
            },
            rectangles: self
                .decomp
                .rectangles
                .iter()
                .zip(&self.unitaries)
                .map(|(r, (u, v))| RectangleEntry {
                    rows: r.rows.clone(),
                    cols: r.cols.clone(),
                    u: matrix_to_wire(u),
                    v: matrix_to_wire(v),
                })
                .collect(),
            basis_a: self.basis_a.iter().map(vector_to_wire).collect(),
            basis_b: self.basis_b.iter().map(vector_to_wire).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_wire()).expect("representation serializes")
    }

    pub fn from_json(text: &str, tol: Tolerance) -> Result<Self> {
        let file: RepresentationFile =
            serde_json::from_str(text).map_err(|e| Error::MalformedInput(e.to_string()))?;
        file.into_representation(tol)
    }
}

fn apply_local(
    u: &ComplexMatrix,
    index_set: &[usize],
    basis: &[ComplexVector],
    idx: usize,
) -> ComplexVector {
    let c = index_set
        .iter()
        .position(|&x| x == idx)
        .expect("index inside the rectangle");
    let mut out = ComplexVector::zeros(basis[0].len());
    for (r, &row) in index_set.iter().enumerate() {
        out += &basis[row] * u[(r, c)];
    }
    out
}

/// Rewrites a local operator after relabeling: `old` lists the rectangle's
/// indices before, `new` after, `perm` maps old labels to new ones.
fn reindex(u: &ComplexMatrix, old: &[usize], new: &[usize], perm: &[usize]) -> ComplexMatrix {
    // position in `old` of the index now sitting at position p of `new`
    let source: Vec<usize> = new
        .iter()
        .map(|&x| old.iter().position(|&o| perm[o] == x).expect("relabeled index"))
        .collect();
    ComplexMatrix::from_fn(u.nrows(), u.ncols(), |r, c| u[(source[r], source[c])])
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RectangleEntry {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub u: WireMatrix,
    pub v: WireMatrix,
}

/// The representation file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepresentationFile {
    pub dims: Dims,
    pub rectangles: Vec<RectangleEntry>,
    pub basis_a: Vec<WireVector>,
    pub basis_b: Vec<WireVector>,
}

impl RepresentationFile {
    pub fn into_representation(self, tol: Tolerance) -> Result<RectRepresentation> {
        let decomp = RectDecomposition::new(
            self.dims.a,
            self.dims.b,
            self.rectangles
                .iter()
                .map(|r| Rectangle::new(r.rows.clone(), r.cols.clone()))
                .collect(),
        )?;
        let unitaries = self
            .rectangles
            .iter()
            .map(|r| Ok((matrix_from_wire(&r.u, "u")?, matrix_from_wire(&r.v, "v")?)))
            .collect::<Result<Vec<_>>>()?;
        let basis_a = self
            .basis_a
            .iter()
            .map(|w| vector_from_wire(w, "basis_a"))
            .collect::<Result<Vec<_>>>()?;
        let basis_b = self
            .basis_b
            .iter()
            .map(|w| vector_from_wire(w, "basis_b"))
            .collect::<Result<Vec<_>>>()?;
        RectRepresentation::new(decomp, basis_a, basis_b, unitaries, tol)
    }
}

/// The represented basis, labeled `phi1, phi2, …` rectangle by rectangle and
/// row-major inside each rectangle.
pub fn realize(rep: &RectRepresentation, tol: Tolerance) -> Result<OrthogonalProductSet> {
    rep.check(tol)?;
    let (m, n) = rep.dims();
    let states = rep
        .cell_states()
        .into_iter()
        .enumerate()
        .map(|(k, (_, _, _, a, b))| ProductState::new(format!("phi{}", k + 1), a, b, tol))
        .collect::<Result<Vec<_>>>()?;
    OrthogonalProductSet::new(m, n, states, tol)
}

/// Matches the represented states to the members of `e` (equality up to
/// phase on both parts). `Some(assignment)` gives, for each cell in
/// [`RectRepresentation::cell_states`] order, the index of its state in `e`.
pub fn match_representation(e: &OrthogonalProductSet, rep: &RectRepresentation) -> Option<Vec<usize>> {
    let (m, n) = rep.dims();
    if e.dim_a() != m || e.dim_b() != n || e.len() != m * n || rep.check(e.tol()).is_err() {
        return None;
    }
    let tol = e.tol();
    let mut used = vec![false; e.len()];
    let mut assignment = Vec::with_capacity(e.len());
    for (_, _, _, a, b) in rep.cell_states() {
        let hit = (0..e.len()).find(|&k| {
            !used[k]
                && equal_up_to_phase(e.state(k).a(), &a, tol).unwrap_or(false)
                && equal_up_to_phase(e.state(k).b(), &b, tol).unwrap_or(false)
        })?;
        used[hit] = true;
        assignment.push(hit);
    }
    Some(assignment)
}

/// `rep` represents exactly the states of `e`.
pub fn verify_representation(e: &OrthogonalProductSet, rep: &RectRepresentation) -> bool {
    match_representation(e, rep).is_some()
}

/// Per state of `e`, `1 − |⟨realized|state⟩|`; `None` when the
/// representation does not match.
pub fn representation_residuals(e: &OrthogonalProductSet, rep: &RectRepresentation) -> Option<Vec<f64>> {
    let assignment = match_representation(e, rep)?;
    let mut out = vec![0.0; e.len()];
    for ((_, _, _, a, b), k) in rep.cell_states().into_iter().zip(assignment) {
        let overlap = e.state(k).a().dotc(&a) * e.state(k).b().dotc(&b);
        out[k] = 1.0 - overlap.norm();
    }
    Some(out)
}

fn violation(step: u8, detail: impl Into<String>) -> Error {
    Error::StructureViolation {
        step,
        detail: detail.into(),
    }
}

/// Builds a representation on the pinwheel [`r9`] for an irreducible
/// orthogonal product basis of `3 ⊗ 3`, by chasing aligned pairs: a pair
/// sharing its A part forces the next pair sharing its B part, and so on
/// around the four outer rectangles; the ninth state is the center.
pub fn construct_rect_rep_3x3(e: &OrthogonalProductSet) -> Result<RectRepresentation> {
    if e.dim_a() != 3 || e.dim_b() != 3 || !e.is_basis() {
        return Err(Error::InvalidParameter(
            "construction needs a product basis of 3x3".into(),
        ));
    }
    if !is_irreducible(e) {
        return Err(Error::NotIrreducible);
    }
    let first = *e
        .aligned_pairs()
        .first()
        .ok_or_else(|| violation(1, "no aligned pair"))?;
    if first.side == Party::B {
        // same chase on the exchanged parties; the transposed pinwheel is the
        // row-reversed image of R9
        let rep = construct_from_left_pair(&e.transposed(), first.i, first.j)?.transposed();
        let rep = rep
            .permuted(&[2, 1, 0], &[0, 1, 2])
            .reordered_like(&r9())
            .ok_or_else(|| violation(8, "transposed construction is not on R9"))?;
        if !verify_representation(e, &rep) {
            return Err(violation(8, "representation does not reproduce the set"));
        }
        return Ok(rep);
    }
    construct_from_left_pair(e, first.i, first.j)
}

fn construct_from_left_pair(e: &OrthogonalProductSet, s1: usize, s2: usize) -> Result<RectRepresentation> {
    let tol = e.tol();
    let overlaps = |u: &ComplexVector, v: &ComplexVector| u.dotc(v).norm() > tol.zero_tol();
    let same = |u: &ComplexVector, v: &ComplexVector| equal_up_to_phase(u, v, tol).unwrap_or(false);

    // states other than `pair` whose `side` part overlaps `v`; they must be
    // exactly two and share their other part
    let chase = |step: u8, pair: [usize; 2], v: &ComplexVector, side: Party| -> Result<[usize; 2]> {
        let hits: Vec<usize> = (0..e.len())
            .filter(|k| !pair.contains(k) && overlaps(v, e.state(*k).part(side)))
            .collect();
        if hits.len() != 2 {
            return Err(violation(
                step,
                format!("expected 2 states overlapping on side {}, found {}", side.name(), hits.len()),
            ));
        }
        let other = side.other();
        if !same(e.state(hits[0]).part(other), e.state(hits[1]).part(other)) {
            return Err(violation(
                step,
                format!(
                    "states {} and {} do not share their {} part",
                    e.state(hits[0]).label(),
                    e.state(hits[1]).label(),
                    other.name()
                ),
            ));
        }
        Ok([hits[0], hits[1]])
    };

    let a12 = e.state(s1).a().clone();
    let [s3, s4] = chase(2, [s1, s2], &a12, Party::A)?;
    let b34 = e.state(s3).b().clone();
    let [s5, s6] = chase(3, [s3, s4], &b34, Party::B)?;
    let a56 = e.state(s5).a().clone();
    let [s7, s8] = chase(4, [s5, s6], &a56, Party::A)?;
    let b78 = e.state(s7).b().clone();

    let chain = [s1, s2, s3, s4, s5, s6, s7, s8];
    let mut sorted = chain;
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(violation(5, "the chase revisited a state"));
    }
    let rest: Vec<usize> = (0..e.len()).filter(|k| !chain.contains(k)).collect();
    let [s9] = rest[..] else {
        return Err(violation(5, format!("{} states left after the chase", rest.len())));
    };

    let basis_a = vec![a12, e.state(s9).a().clone(), a56];
    let basis_b = vec![b78, e.state(s9).b().clone(), b34];
    for (name, basis) in [("A", &basis_a), ("B", &basis_b)] {
        Subspace::from_orthonormal(basis.clone(), 3, tol)
            .map_err(|err| violation(6, format!("side {name} basis: {err}")))?;
    }

    // columns are the images of the listed basis vectors
    let coords = |basis: &[ComplexVector], index_set: [usize; 2], images: [&ComplexVector; 2]| {
        ComplexMatrix::from_fn(2, 2, |r, c| basis[index_set[r]].dotc(images[c]))
    };
    let one = ComplexMatrix::from_element(1, 1, c64(1.0, 0.0));
    let v_r1 = coords(&basis_b, [0, 1], [e.state(s1).b(), e.state(s2).b()]);
    let u_r2 = coords(&basis_a, [0, 1], [e.state(s3).a(), e.state(s4).a()]);
    let v_r3 = coords(&basis_b, [1, 2], [e.state(s5).b(), e.state(s6).b()]);
    let u_r4 = coords(&basis_a, [1, 2], [e.state(s7).a(), e.state(s8).a()]);
    let unitaries = vec![
        (one.clone(), v_r1),
        (u_r2, one.clone()),
        (one.clone(), v_r3),
        (u_r4, one.clone()),
        (one.clone(), one),
    ];
    let rep = RectRepresentation::new(r9(), basis_a, basis_b, unitaries, tol)
        .map_err(|err| violation(7, err.to_string()))?;
    if !verify_representation(e, &rep) {
        return Err(violation(8, "representation does not reproduce the set"));
    }
    Ok(rep)
}

/// A set of states forming a full `p × q` grid: `p` mutually orthogonal
/// distinct A parts, `q` likewise on B, every combination present once.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGroup {
    pub states: Vec<usize>,
    /// Side-set member indices of the A parts, in first-occurrence order.
    pub a_members: Vec<usize>,
    pub b_members: Vec<usize>,
    /// `cell_of[(p, q)]` is the state carrying `a_members[p] ⊗ b_members[q]`.
    pub cell_of: HashMap<(usize, usize), usize>,
}

/// Decides whether `e` has a rectangular representation and returns one.
///
/// The basis is partitioned into grid groups; a partition admits
/// representation iff, on each side, the spans of the groups' local parts
/// pairwise commute as projectors (equivalently: refining the local space by
/// every group span yields atoms whose direct sums give back each span). The
/// atoms then supply the local bases and the group parts the unitaries.
/// Orthogonality of the basis already makes the resulting rectangles
/// disjoint. In `3 ⊗ 3`, a pinwheel result is relabeled onto [`r9`].
pub fn search_rect_rep(e: &OrthogonalProductSet) -> Result<Option<RectRepresentation>> {
    let (m, n) = (e.dim_a(), e.dim_b());
    if m * n > SEARCH_CELL_LIMIT {
        return Err(Error::SizeLimit {
            what: "representation search",
            size: m * n,
            limit: SEARCH_CELL_LIMIT,
        });
    }
    if !e.is_basis() {
        return Err(Error::InvalidParameter(format!(
            "expected a product basis of {} states, got {}",
            m * n,
            e.len()
        )));
    }
    let search = GroupSearch::new(e)?;
    let mut chosen = Vec::new();
    let found = search.cover(0, &mut chosen)?;
    Ok(found.map(|rep| {
        if (m, n) == (3, 3) {
            rep.aligned_to(&r9()).unwrap_or(rep)
        } else {
            rep
        }
    }))
}

struct GroupSearch<'a> {
    e: &'a OrthogonalProductSet,
    members_a: Vec<ComplexVector>,
    members_b: Vec<ComplexVector>,
    groups: Vec<GridGroup>,
    masks: Vec<u64>,
    spans_a: Vec<Subspace>,
    spans_b: Vec<Subspace>,
    /// `compatible[g]` has bit `h` set when groups `g` and `h` are disjoint
    /// and their spans commute on both sides.
    compatible: Vec<Vec<bool>>,
}

impl<'a> GroupSearch<'a> {
    fn new(e: &'a OrthogonalProductSet) -> Result<Self> {
        let tol = e.tol();
        let side_a = side_set(e, Party::A);
        let side_b = side_set(e, Party::B);
        let orth = |vs: &[ComplexVector], x: usize, y: usize| vs[x].dotc(&vs[y]).norm() <= tol.zero_tol();
        let k = e.len();
        let mut groups = Vec::new();
        let mut masks = Vec::new();
        for mask in 1u64..1 << k {
            let states: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
            let mut a_members: Vec<usize> = Vec::new();
            let mut b_members: Vec<usize> = Vec::new();
            for &s in &states {
                if !a_members.contains(&side_a.member_of[s]) {
                    a_members.push(side_a.member_of[s]);
                }
                if !b_members.contains(&side_b.member_of[s]) {
                    b_members.push(side_b.member_of[s]);
                }
            }
            if a_members.len() * b_members.len() != states.len() {
                continue;
            }
            let pairwise = |ms: &[usize], vs: &[ComplexVector]| {
                ms.iter()
                    .enumerate()
                    .all(|(x, &p)| ms[..x].iter().all(|&q| orth(vs, p, q)))
            };
            if !pairwise(&a_members, &side_a.members) || !pairwise(&b_members, &side_b.members) {
                continue;
            }
            let cell_of = states
                .iter()
                .map(|&s| {
                    let p = a_members.iter().position(|&x| x == side_a.member_of[s]).unwrap();
                    let q = b_members.iter().position(|&x| x == side_b.member_of[s]).unwrap();
                    ((p, q), s)
                })
                .collect();
            groups.push(GridGroup {
                states,
                a_members,
                b_members,
                cell_of,
            });
            masks.push(mask);
        }
        let span_of = |members: &[usize], vs: &[ComplexVector], d: usize| {
            let refs: Vec<&ComplexVector> = members.iter().map(|&x| &vs[x]).collect();
            Subspace::span(&refs, d, tol)
        };
        let spans_a = groups
            .iter()
            .map(|g| span_of(&g.a_members, &side_a.members, e.dim_a()))
            .collect::<Result<Vec<_>>>()?;
        let spans_b = groups
            .iter()
            .map(|g| span_of(&g.b_members, &side_b.members, e.dim_b()))
            .collect::<Result<Vec<_>>>()?;

        // commutation only depends on the member sets; cache by them
        let mut commute_cache: HashMap<(Party, Vec<usize>, Vec<usize>), bool> = HashMap::new();
        let mut commutes = |side: Party, g: usize, h: usize| -> Result<bool> {
            let (mg, mh, sg, sh) = match side {
                Party::A => (&groups[g].a_members, &groups[h].a_members, &spans_a[g], &spans_a[h]),
                Party::B => (&groups[g].b_members, &groups[h].b_members, &spans_b[g], &spans_b[h]),
            };
            let mut key_g = mg.clone();
            key_g.sort_unstable();
            let mut key_h = mh.clone();
            key_h.sort_unstable();
            let key = (side, key_g, key_h);
            if let Some(&hit) = commute_cache.get(&key) {
                return Ok(hit);
            }
            let result = spans_commute(sg, sh, tol)?;
            commute_cache.insert(key, result);
            Ok(result)
        };
        let mut compatible = vec![vec![false; groups.len()]; groups.len()];
        for g in 0..groups.len() {
            for h in 0..g {
                if masks[g] & masks[h] != 0 {
                    continue;
                }
                let ok = commutes(Party::A, g, h)? && commutes(Party::B, g, h)?;
                compatible[g][h] = ok;
                compatible[h][g] = ok;
            }
        }
        Ok(Self {
            e,
            members_a: side_a.members,
            members_b: side_b.members,
            groups,
            masks,
            spans_a,
            spans_b,
            compatible,
        })
    }

    /// Exact cover by pairwise compatible groups; larger groups first.
    fn cover(&self, covered: u64, chosen: &mut Vec<usize>) -> Result<Option<RectRepresentation>> {
        let k = self.e.len();
        let full = (1u64 << k) - 1;
        if covered == full {
            return self.assemble(chosen);
        }
        let first = (!covered).trailing_zeros();
        let mut candidates: Vec<usize> = (0..self.groups.len())
            .filter(|&g| self.masks[g] >> first & 1 == 1 && self.masks[g] & covered == 0)
            .filter(|&g| chosen.iter().all(|&h| self.compatible[g][h]))
            .collect();
        candidates.sort_by_key(|&g| (std::cmp::Reverse(self.groups[g].states.len()), self.masks[g]));
        for g in candidates {
            chosen.push(g);
            let found = self.cover(covered | self.masks[g], chosen)?;
            chosen.pop();
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }

    fn assemble(&self, chosen: &[usize]) -> Result<Option<RectRepresentation>> {
        let tol = self.e.tol();
        let spans_a: Vec<&Subspace> = chosen.iter().map(|&g| &self.spans_a[g]).collect();
        let spans_b: Vec<&Subspace> = chosen.iter().map(|&g| &self.spans_b[g]).collect();
        let Some((basis_a, index_a)) = atom_basis(&spans_a, self.e.dim_a(), tol)? else {
            return Ok(None);
        };
        let Some((basis_b, index_b)) = atom_basis(&spans_b, self.e.dim_b(), tol)? else {
            return Ok(None);
        };
        let mut rectangles = Vec::new();
        let mut unitaries = Vec::new();
        for (slot, &g) in chosen.iter().enumerate() {
            let group = &self.groups[g];
            let rows = index_a[slot].clone();
            let cols = index_b[slot].clone();
            if rows.len() != group.a_members.len() || cols.len() != group.b_members.len() {
                return Ok(None);
            }
            let u = ComplexMatrix::from_fn(rows.len(), rows.len(), |r, c| {
                basis_a[rows[r]].dotc(&self.members_a[group.a_members[c]])
            });
            let v = ComplexMatrix::from_fn(cols.len(), cols.len(), |r, c| {
                basis_b[cols[r]].dotc(&self.members_b[group.b_members[c]])
            });
            rectangles.push(Rectangle::new(rows, cols));
            unitaries.push((u, v));
        }
        let Ok(decomp) = RectDecomposition::new(self.e.dim_a(), self.e.dim_b(), rectangles) else {
            return Ok(None);
        };
        let Ok(rep) = RectRepresentation::new(decomp, basis_a, basis_b, unitaries, tol) else {
            return Ok(None);
        };
        Ok(verify_representation(self.e, &rep).then_some(rep))
    }
}

/// `P_S` and `P_T` commute: `S` splits into its parts inside `T` and
/// orthogonal to `T`.
fn spans_commute(s: &Subspace, t: &Subspace, tol: Tolerance) -> Result<bool> {
    let inside = s.intersect(t, tol)?.dim();
    let outside = s.intersect(&t.orth_complement(tol), tol)?.dim();
    Ok(inside + outside == s.dim())
}

/// Refines `C^d` by every span into atoms, numbers the atom basis vectors
/// consecutively, and reports for each span the indices of the atoms it
/// contains. `None` when the spans are not simultaneously diagonal.
#[allow(clippy::type_complexity)]
fn atom_basis(
    spans: &[&Subspace],
    d: usize,
    tol: Tolerance,
) -> Result<Option<(Vec<ComplexVector>, Vec<Vec<usize>>)>> {
    let mut atoms = vec![Subspace::full(d)];
    for s in spans {
        let complement = s.orth_complement(tol);
        let mut next = Vec::new();
        for atom in &atoms {
            let inside = atom.intersect(s, tol)?;
            let outside = atom.intersect(&complement, tol)?;
            if inside.dim() + outside.dim() != atom.dim() {
                return Ok(None);
            }
            next.extend([inside, outside].into_iter().filter(|x| x.dim() > 0));
        }
        atoms = next;
    }
    let mut basis = Vec::with_capacity(d);
    let mut ranges = Vec::with_capacity(atoms.len());
    for atom in &atoms {
        let start = basis.len();
        basis.extend(atom.basis().iter().cloned());
        ranges.push(start..basis.len());
    }
    if basis.len() != d {
        return Ok(None);
    }
    let mut index = Vec::with_capacity(spans.len());
    for s in spans {
        let mut rows = Vec::new();
        for (atom, range) in atoms.iter().zip(&ranges) {
            if atom.basis().iter().all(|v| s.contains(v, tol).unwrap_or(false)) {
                rows.extend(range.clone());
            }
        }
        index.push(rows);
    }
    Ok(Some((basis, index)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::basis_vector;

    fn identity_rep(decomp: RectDecomposition) -> RectRepresentation {
        let (m, n) = (decomp.n_rows(), decomp.n_cols());
        let unitaries = decomp
            .rectangles()
            .iter()
            .map(|r| {
                (
                    ComplexMatrix::identity(r.rows.len(), r.rows.len()),
                    ComplexMatrix::identity(r.cols.len(), r.cols.len()),
                )
            })
            .collect();
        RectRepresentation::new(
            decomp,
            (0..m).map(|i| basis_vector(m, i)).collect(),
            (0..n).map(|j| basis_vector(n, j)).collect(),
            unitaries,
            Tolerance::default(),
        )
        .unwrap()
    }

    #[test]
    fn r9_is_a_tiling_of_area_nine() {
        let d = r9();
        d.check().unwrap();
        let areas: Vec<usize> = d.rectangles().iter().map(Rectangle::area).collect();
        assert_eq!(areas, vec![2, 2, 2, 2, 1]);
    }

    #[test]
    fn r9_rotation_cycles_the_outer_rectangles() {
        let d = r9();
        let rotated = d.rotated();
        // rectangle k is carried to rectangle k+1 (mod 4); the center is fixed
        for k in 0..4 {
            assert_eq!(rotated.rectangles()[k], d.rectangles()[(k + 1) % 4]);
        }
        assert_eq!(rotated.rectangles()[4], d.rectangles()[4]);
    }

    #[test]
    fn tiling_errors() {
        let overlap = RectDecomposition::new(
            1,
            2,
            vec![Rectangle::new(vec![0], vec![0, 1]), Rectangle::new(vec![0], vec![1])],
        );
        assert!(matches!(overlap, Err(Error::InvalidRepresentation(_))));
        let gap = RectDecomposition::new(1, 2, vec![Rectangle::new(vec![0], vec![0])]);
        assert!(matches!(gap, Err(Error::InvalidRepresentation(_))));
    }

    #[test]
    fn small_grid_counts() {
        assert_eq!(enumerate_decompositions(1, 2).unwrap().len(), 2);
        assert_eq!(enumerate_decompositions(2, 2).unwrap().len(), 8);
        assert!(matches!(
            enumerate_decompositions(4, 5),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn permutation_keeps_the_represented_basis() {
        let rep = identity_rep(r9());
        let tol = Tolerance::default();
        let e = realize(&rep, tol).unwrap();
        let moved = rep.permuted(&[2, 0, 1], &[1, 2, 0]);
        assert!(verify_representation(&e, &moved));
        assert!(verify_representation(&e.transposed(), &rep.transposed()));
        assert!(verify_representation(&e.transposed(), &rep.rotated()));
    }

    #[test]
    fn representation_rejects_non_unitary() {
        let d = RectDecomposition::new(1, 1, vec![Rectangle::new(vec![0], vec![0])]).unwrap();
        let two = ComplexMatrix::from_element(1, 1, c64(2.0, 0.0));
        let one = ComplexMatrix::from_element(1, 1, c64(1.0, 0.0));
        let err = RectRepresentation::new(
            d,
            vec![basis_vector(1, 0)],
            vec![basis_vector(1, 0)],
            vec![(two, one)],
            Tolerance::default(),
        );
        assert!(matches!(err, Err(Error::InvalidRepresentation(_))));
    }

    #[test]
    fn json_round_trip() {
        let rep = identity_rep(r9());
        let back = RectRepresentation::from_json(&rep.to_json(), Tolerance::default()).unwrap();
        assert_eq!(back, rep);
    }
}
