//! Fixtures and independent oracles shared by the integration tests.
//!
//! The oracles deliberately avoid the library's linear algebra: ranks use
//! plain Gaussian elimination with partial pivoting, connectivity a direct
//! depth-first search, tilings a brute-force partition enumeration.

#![allow(dead_code)]

use locc_core::catalog::{family, random_representation, FamilySpec};
use locc_core::numerics::{c64, random_unitary, ComplexMatrix, ComplexVector, C64};
use locc_core::rectrep::{r9, realize};
use locc_core::{OrthogonalProductSet, ProductState, Tolerance};

pub fn tol() -> Tolerance {
    Tolerance::default()
}

pub fn b9() -> OrthogonalProductSet {
    family(&FamilySpec::B9).unwrap()
}

pub fn b8() -> OrthogonalProductSet {
    family(&FamilySpec::B8).unwrap()
}

pub fn tiles() -> OrthogonalProductSet {
    family(&FamilySpec::UpbExample).unwrap()
}

pub fn random_r9_basis(seed: u64) -> OrthogonalProductSet {
    realize(&random_representation(&r9(), seed), tol()).unwrap()
}

pub fn computational(m: usize, n: usize) -> OrthogonalProductSet {
    let states = (0..m * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            ProductState::new(format!("e{i}{j}"), unit(m, i), unit(n, j), tol()).unwrap()
        })
        .collect();
    OrthogonalProductSet::new(m, n, states, tol()).unwrap()
}

pub fn unit(d: usize, k: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(d);
    v[k] = c64(1.0, 0.0);
    v
}

/// `(W_A ⊗ W_B) E` with seeded Haar unitaries.
pub fn conjugated(e: &OrthogonalProductSet, seed: u64) -> OrthogonalProductSet {
    let wa = random_unitary(e.dim_a(), seed);
    let wb = random_unitary(e.dim_b(), seed ^ 0x5555_5555);
    e.transformed(&wa, &wb).unwrap()
}

pub fn local_unitaries(e: &OrthogonalProductSet, seed: u64) -> (ComplexMatrix, ComplexMatrix) {
    (
        random_unitary(e.dim_a(), seed),
        random_unitary(e.dim_b(), seed ^ 0x5555_5555),
    )
}

/// Multiplies every local part by an arbitrary phase.
pub fn rephased(e: &OrthogonalProductSet, seed: u64) -> OrthogonalProductSet {
    let states = e
        .states()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let t = (seed as f64 + 1.0) * (k as f64 + 0.37);
            let pa = C64::from_polar(1.0, t.sin() * 3.0);
            let pb = C64::from_polar(1.0, t.cos() * 5.0);
            ProductState::new(s.label(), s.a() * pa, s.b() * pb, tol()).unwrap()
        })
        .collect();
    OrthogonalProductSet::new(e.dim_a(), e.dim_b(), states, e.tol()).unwrap()
}

/// Subsets of `e` given as bit masks.
pub fn subset(e: &OrthogonalProductSet, mask: u64) -> OrthogonalProductSet {
    let ix: Vec<usize> = (0..e.len()).filter(|&k| mask >> k & 1 == 1).collect();
    e.subset(&ix)
}

/// Row-major `a ⊗ b`, written out by hand.
pub fn kron_oracle(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    let mut out = ComplexVector::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[i * b.len() + j] = a[i] * b[j];
        }
    }
    out
}

/// Rank by Gaussian elimination with partial pivoting.
pub fn rank_oracle(vectors: &[ComplexVector], eps: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let d = vectors[0].len();
    let mut rows: Vec<Vec<C64>> = vectors.iter().map(|v| v.iter().copied().collect()).collect();
    let mut rank = 0;
    for col in 0..d {
        let pivot = (rank..rows.len()).max_by(|&x, &y| rows[x][col].norm().total_cmp(&rows[y][col].norm()));
        let Some(p) = pivot else { break };
        if rows[p][col].norm() <= eps {
            continue;
        }
        rows.swap(rank, p);
        let head = rows[rank][col];
        for r in 0..rows.len() {
            if r != rank {
                let f = rows[r][col] / head;
                for c in col..d {
                    let sub = f * rows[rank][c];
                    rows[r][c] -= sub;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Irreducible: on both sides the non-orthogonality graph of the states is
/// connected.
pub fn irreducible_oracle(e: &OrthogonalProductSet) -> bool {
    let k = e.len();
    [0usize, 1].iter().all(|&side| {
        let part = |s: &ProductState| if side == 0 { s.a().clone() } else { s.b().clone() };
        let mut seen = vec![false; k];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for y in 0..k {
                if !seen[y] && part(e.state(x)).dotc(&part(e.state(y))).norm() > 1e-8 {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen.iter().all(|&s| s)
    })
}

/// A product state orthogonal to all of `e` exists iff some split `S, E∖S`
/// has the A-parts of `S` not spanning `C^m` and the B-parts of `E∖S` not
/// spanning `C^n`.
pub fn extendable_oracle(e: &OrthogonalProductSet) -> bool {
    let k = e.len();
    (0u64..1 << k).any(|mask| {
        let a: Vec<_> = (0..k).filter(|&i| mask >> i & 1 == 1).map(|i| e.state(i).a().clone()).collect();
        let b: Vec<_> = (0..k).filter(|&i| mask >> i & 1 == 0).map(|i| e.state(i).b().clone()).collect();
        rank_oracle(&a, 1e-9) < e.dim_a() && rank_oracle(&b, 1e-9) < e.dim_b()
    })
}

/// Number of ways to tile an `r × c` grid with combinatorial rectangles,
/// by enumerating all set partitions of the cells.
pub fn tiling_count_oracle(r: usize, c: usize) -> usize {
    fn is_rectangle(cells: &[usize], c: usize) -> bool {
        let mut rows: Vec<usize> = cells.iter().map(|x| x / c).collect();
        let mut cols: Vec<usize> = cells.iter().map(|x| x % c).collect();
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        rows.len() * cols.len() == cells.len()
    }
    fn rec(next: usize, total: usize, c: usize, blocks: &mut Vec<Vec<usize>>) -> usize {
        if next == total {
            return usize::from(blocks.iter().all(|b| is_rectangle(b, c)));
        }
        let mut count = 0;
        for k in 0..blocks.len() {
            blocks[k].push(next);
            count += rec(next + 1, total, c, blocks);
            blocks[k].pop();
        }
        blocks.push(vec![next]);
        count += rec(next + 1, total, c, blocks);
        blocks.pop();
        count
    }
    rec(0, r * c, c, &mut Vec::new())
}

/// `|⟨u|v⟩| ≥ (1 − eps)‖u‖‖v‖`.
pub fn same_ray(u: &ComplexVector, v: &ComplexVector, eps: f64) -> bool {
    u.dotc(v).norm() >= (1.0 - eps) * u.norm() * v.norm()
}
