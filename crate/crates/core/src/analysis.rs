//! Structural predicates on orthogonal product sets: irreducibility,
//! extendability, the completing state of an almost-complete set, product
//! subspaces spanned by subsets, and a random search for sets without any
//! aligned pair.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{nullspace, random_state_in, rank, schmidt_factor, ComplexMatrix, Subspace};
use crate::states::{side_set, OrthogonalProductSet, Party, ProductState};

/// Enumeration guard for [`is_extendable`].
pub const EXTENDABLE_SIZE_LIMIT: usize = 20;
/// Enumeration guard (on `m·n`) for [`opb_indistinguishable_general`].
pub const OPB_GENERAL_SIZE_LIMIT: usize = 12;

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut x = x;
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, x: usize, y: usize) {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx != ry {
            // smaller root wins so that components are deterministic
            let (lo, hi) = if rx < ry { (rx, ry) } else { (ry, rx) };
            self.parent[hi] = lo;
        }
    }
}

/// A split of one side's distinct local parts into two mutually orthogonal
/// groups (indices into that side's [`SideSet`](crate::states::SideSet)).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducibilityWitness {
    pub side: Party,
    pub partition: (Vec<usize>, Vec<usize>),
}

impl ReducibilityWitness {
    /// Largest cross-group overlap; at most `zero_tol` for a genuine witness.
    pub fn max_cross_overlap(&self, e: &OrthogonalProductSet) -> f64 {
        let members = side_set(e, self.side).members;
        let mut worst: f64 = 0.0;
        for &x in &self.partition.0 {
            for &y in &self.partition.1 {
                worst = worst.max(members[x].dotc(&members[y]).norm());
            }
        }
        worst
    }

    pub fn check(&self, e: &OrthogonalProductSet) -> bool {
        let members = side_set(e, self.side).len();
        let mut seen = vec![false; members];
        for &k in self.partition.0.iter().chain(&self.partition.1) {
            if k >= members || seen[k] {
                return false;
            }
            seen[k] = true;
        }
        !self.partition.0.is_empty()
            && !self.partition.1.is_empty()
            && seen.iter().all(|&x| x)
            && self.max_cross_overlap(e) <= e.tol().zero_tol()
    }
}

/// Connected components of the non-orthogonality graph on the distinct local
/// parts of `side`, each as a sorted list of member indices.
fn side_components(e: &OrthogonalProductSet, side: Party) -> Vec<Vec<usize>> {
    let members = side_set(e, side).members;
    let mut uf = UnionFind::new(members.len());
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            if members[i].dotc(&members[j]).norm() > e.tol().zero_tol() {
                uf.union(i, j);
            }
        }
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut root_slot: Vec<Option<usize>> = vec![None; members.len()];
    for k in 0..members.len() {
        let r = uf.find(k);
        match root_slot[r] {
            Some(slot) => comps[slot].push(k),
            None => {
                root_slot[r] = Some(comps.len());
                comps.push(vec![k]);
            }
        }
    }
    comps
}

/// `None` when the set is irreducible; otherwise a split on the first
/// reducible side (A before B).
pub fn reducibility_witness(e: &OrthogonalProductSet) -> Option<ReducibilityWitness> {
    for side in [Party::A, Party::B] {
        let comps = side_components(e, side);
        if comps.len() > 1 {
            let first = comps[0].clone();
            let mut rest: Vec<usize> = comps[1..].iter().flatten().copied().collect();
            rest.sort_unstable();
            return Some(ReducibilityWitness {
                side,
                partition: (first, rest),
            });
        }
    }
    None
}

pub fn is_irreducible(e: &OrthogonalProductSet) -> bool {
    reducibility_witness(e).is_none()
}

/// Conjugated product vectors as rows: the null space is the orthogonal
/// complement of the set in the full bipartite space.
fn conjugate_rows(e: &OrthogonalProductSet) -> ComplexMatrix {
    let d = e.dim_a() * e.dim_b();
    let tensors: Vec<_> = e.states().iter().map(|s| s.tensor()).collect();
    ComplexMatrix::from_fn(tensors.len(), d, |r, c| tensors[r][c].conj())
}

/// The unique product state completing a set of `m·n − 1` states to a basis.
pub fn orthogonal_complement(e: &OrthogonalProductSet) -> Result<ProductState> {
    let d = e.dim_a() * e.dim_b();
    if e.len() + 1 != d {
        return Err(Error::InvalidParameter(format!(
            "complement needs {} states, got {}",
            d - 1,
            e.len()
        )));
    }
    let ns = nullspace(&conjugate_rows(e), e.tol());
    if ns.dim() != 1 {
        return Err(Error::NullspaceDimension { found: ns.dim() });
    }
    let v = &ns.basis()[0];
    let (a, b) = match schmidt_factor(v, e.dim_a(), e.dim_b(), e.tol()) {
        Ok(f) => f,
        Err(Error::EntangledVector { second_singular }) => {
            return Err(Error::ComplementNotProduct { second_singular })
        }
        Err(other) => return Err(other),
    };
    ProductState::new(fresh_label(e, "perp"), a, b, e.tol())
}

fn fresh_label(e: &OrthogonalProductSet, base: &str) -> String {
    let mut label = base.to_string();
    let mut k = 1;
    while e.index_of(&label).is_some() {
        label = format!("{base}{k}");
        k += 1;
    }
    label
}

/// A product state orthogonal to every member, together with the index set
/// `S` whose members it is orthogonal to on side A (the rest on side B).
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionWitness {
    pub state: ProductState,
    pub subset: Vec<usize>,
}

impl ExtensionWitness {
    /// Largest overlap of the witness with a member of `e`.
    pub fn max_overlap(&self, e: &OrthogonalProductSet) -> f64 {
        e.states()
            .iter()
            .map(|s| s.overlap(&self.state).norm())
            .fold(0.0, f64::max)
    }
}

/// Bit masks over `0..n` in order of increasing population count, then
/// increasing value.
pub(crate) fn masks_by_size(n: usize) -> impl Iterator<Item = u64> {
    (0..=n).flat_map(move |k| masks_of_size(n, k))
}

fn masks_of_size(n: usize, k: usize) -> Box<dyn Iterator<Item = u64>> {
    if k == 0 {
        return Box::new(std::iter::once(0));
    }
    if k > n {
        return Box::new(std::iter::empty());
    }
    let limit = 1u64 << n;
    let mut cur = Some((1u64 << k) - 1);
    Box::new(std::iter::from_fn(move || {
        let m = cur?;
        if m >= limit {
            return None;
        }
        // Gosper's hack: next integer with the same popcount
        let c = m & m.wrapping_neg();
        let r = m + c;
        cur = Some((((r ^ m) >> 2) / c) | r);
        Some(m)
    }))
}

fn parts(e: &OrthogonalProductSet, mask: u64, side: Party) -> Vec<&crate::numerics::ComplexVector> {
    (0..e.len())
        .filter(|&i| mask >> i & 1 == 1)
        .map(|i| e.state(i).part(side))
        .collect()
}

/// Searches for a product state orthogonal to the whole set by trying every
/// split `S` / complement: `rank(A-parts of S) < m` and
/// `rank(B-parts of the rest) < n`. Smaller `S` are tried first.
pub fn extension_witness(e: &OrthogonalProductSet) -> Result<Option<ExtensionWitness>> {
    let (m, n, k) = (e.dim_a(), e.dim_b(), e.len());
    if k > EXTENDABLE_SIZE_LIMIT {
        return Err(Error::SizeLimit {
            what: "extendability enumeration",
            size: k,
            limit: EXTENDABLE_SIZE_LIMIT,
        });
    }
    if k >= m * n {
        return Ok(None);
    }
    let tol = e.tol();
    let full = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    for mask in masks_by_size(k) {
        let size = mask.count_ones() as usize;
        if size >= m && rank(&parts(e, mask, Party::A), m, tol)? >= m {
            continue;
        }
        let rest = full & !mask;
        if k - size >= n && rank(&parts(e, rest, Party::B), n, tol)? >= n {
            continue;
        }
        let span_a = Subspace::span(&parts(e, mask, Party::A), m, tol)?.orth_complement(tol);
        let span_b = Subspace::span(&parts(e, rest, Party::B), n, tol)?.orth_complement(tol);
        let (Some(a), Some(b)) = (span_a.basis().first(), span_b.basis().first()) else {
            continue;
        };
        let state = ProductState::new(fresh_label(e, "ext"), a.clone(), b.clone(), tol)?;
        let subset = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
        return Ok(Some(ExtensionWitness { state, subset }));
    }
    Ok(None)
}

pub fn is_extendable(e: &OrthogonalProductSet) -> Result<bool> {
    Ok(extension_witness(e)?.is_some())
}

/// Unextendable and not a full basis. In `3 ⊗ 3` a positive answer is
/// cross-checked against the fact that such sets have exactly five members.
pub fn is_upb(e: &OrthogonalProductSet) -> Result<bool> {
    if e.len() >= e.dim_a() * e.dim_b() {
        return Ok(false);
    }
    let upb = !is_extendable(e)?;
    if upb && e.dim_a() == 3 && e.dim_b() == 3 && e.len() != 5 {
        return Err(Error::Inconsistency(format!(
            "unextendable set of {} states in 3x3",
            e.len()
        )));
    }
    Ok(upb)
}

/// The states indexed by `subset` span `span(A-parts) ⊗ span(B-parts)`.
pub fn subset_spans_product_space(e: &OrthogonalProductSet, subset: &[usize]) -> Result<bool> {
    if subset.is_empty() {
        return Err(Error::InvalidParameter("empty subset".into()));
    }
    if let Some(&bad) = subset.iter().find(|&&i| i >= e.len()) {
        return Err(Error::InvalidParameter(format!("state index {bad} out of range")));
    }
    let tol = e.tol();
    let a: Vec<_> = subset.iter().map(|&i| e.state(i).a()).collect();
    let b: Vec<_> = subset.iter().map(|&i| e.state(i).b()).collect();
    let tensors: Vec<_> = subset.iter().map(|&i| e.state(i).tensor()).collect();
    let t: Vec<_> = tensors.iter().collect();
    let d_a = rank(&a, e.dim_a(), tol)?;
    let d_b = rank(&b, e.dim_b(), tol)?;
    Ok(rank(&t, e.dim_a() * e.dim_b(), tol)? == d_a * d_b)
}

/// For an orthogonal product basis: the first (smallest, then lowest mask)
/// subset of at least two states that is irreducible and spans a product
/// subspace, if any.
pub fn irreducible_product_subset(e: &OrthogonalProductSet) -> Result<Option<Vec<usize>>> {
    let d = e.dim_a() * e.dim_b();
    if d > OPB_GENERAL_SIZE_LIMIT {
        return Err(Error::SizeLimit {
            what: "product-subset enumeration",
            size: d,
            limit: OPB_GENERAL_SIZE_LIMIT,
        });
    }
    if !e.is_basis() {
        return Err(Error::InvalidParameter(format!(
            "expected a product basis of {d} states, got {}",
            e.len()
        )));
    }
    let tol = e.tol();
    let k = e.len();
    // states are linked when their parts overlap on either side; an
    // irreducible subset is connected in this graph
    let mut adjacent = vec![0u64; k];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                let (si, sj) = (e.state(i), e.state(j));
                if si.a().dotc(sj.a()).norm() > tol.zero_tol()
                    || si.b().dotc(sj.b()).norm() > tol.zero_tol()
                {
                    adjacent[i] |= 1 << j;
                }
            }
        }
    }
    for mask in masks_by_size(k).filter(|m| m.count_ones() >= 2) {
        if !connected(mask, &adjacent) {
            continue;
        }
        let idx: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
        if is_irreducible(&e.subset(&idx)) && subset_spans_product_space(e, &idx)? {
            return Ok(Some(idx));
        }
    }
    Ok(None)
}

fn connected(mask: u64, adjacent: &[u64]) -> bool {
    let start = mask.trailing_zeros() as usize;
    let mut seen = 1u64 << start;
    let mut frontier = seen;
    while frontier != 0 {
        let i = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let next = adjacent[i] & mask & !seen;
        seen |= next;
        frontier |= next;
    }
    seen == mask
}

/// A product basis is LOCC-indistinguishable iff it contains an irreducible
/// subset spanning a product subspace.
pub fn opb_indistinguishable_general(e: &OrthogonalProductSet) -> Result<bool> {
    Ok(irreducible_product_subset(e)?.is_some())
}

/// Randomized greedy search for `k` orthogonal product states in `m ⊗ n`
/// with no aligned pair. Each attempt grows a set one state at a time: a
/// random split of the current states decides which of them the new state
/// is orthogonal to on side A (the others on side B), and the new local parts
/// are drawn uniformly from the corresponding orthogonal complements.
/// Returns `None` after `trials` failed attempts; that is evidence, not proof.
pub fn find_nonaligned_set(
    m: usize,
    n: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> Option<OrthogonalProductSet> {
    use crate::numerics::{equal_up_to_phase, Tolerance};

    let tol = Tolerance::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let mut current: Vec<ProductState> = Vec::new();
        while current.len() < k {
            let len = current.len();
            let mut splits: Vec<u64> = (0..1u64 << len).collect();
            splits.shuffle(&mut rng);
            let mut next = None;
            for mask in splits {
                let a_parts: Vec<_> = (0..len)
                    .filter(|&i| mask >> i & 1 == 1)
                    .map(|i| current[i].a())
                    .collect();
                let b_parts: Vec<_> = (0..len)
                    .filter(|&i| mask >> i & 1 == 0)
                    .map(|i| current[i].b())
                    .collect();
                let (Ok(span_a), Ok(span_b)) = (
                    Subspace::span(&a_parts, m, tol),
                    Subspace::span(&b_parts, n, tol),
                ) else {
                    continue;
                };
                if span_a.dim() >= m || span_b.dim() >= n {
                    continue;
                }
                let a = random_state_in(&mut rng, &span_a.orth_complement(tol));
                let b = random_state_in(&mut rng, &span_b.orth_complement(tol));
                let (Some(a), Some(b)) = (a, b) else { continue };
                let aligned = current.iter().any(|s| {
                    equal_up_to_phase(s.a(), &a, tol).unwrap_or(true)
                        || equal_up_to_phase(s.b(), &b, tol).unwrap_or(true)
                });
                if !aligned {
                    next = ProductState::new(format!("s{len}"), a, b, tol).ok();
                    if next.is_some() {
                        break;
                    }
                }
            }
            match next {
                Some(s) => current.push(s),
                None => break,
            }
        }
        if current.len() == k {
            if let Ok(set) = OrthogonalProductSet::new(m, n, current, tol) {
                if set.aligned_pairs().is_empty() {
                    return Some(set);
                }
            }
        }
    }
    None
}
