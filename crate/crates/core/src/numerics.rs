//! Small dense complex linear algebra with an explicit tolerance policy.
//!
//! Everything here works on `nalgebra` dense vectors and matrices of
//! `Complex<f64>`. Bipartite vectors of an `m ⊗ n` system use the row-major
//! convention `index = i·n + j`, with `i` on party A.
//!
//! Thresholds are never global: every routine that has to decide whether a
//! number is zero takes a [`Tolerance`].

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;
pub type ComplexVector = DVector<C64>;
pub type ComplexMatrix = DMatrix<C64>;

pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

/// Absolute threshold for treating inner products as zero, and relative
/// threshold for singular-value rank cuts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    zero_tol: f64,
}

impl Tolerance {
    pub fn new(zero_tol: f64) -> Result<Self> {
        if !(0.0..1e-3).contains(&zero_tol) {
            return Err(Error::InvalidTolerance(zero_tol));
        }
        Ok(Self { zero_tol })
    }

    pub fn zero_tol(&self) -> f64 {
        self.zero_tol
    }

    /// `x` counts as zero.
    pub fn is_zero(&self, x: f64) -> bool {
        x.abs() <= self.zero_tol
    }

    fn singular_cut(&self, largest: f64) -> f64 {
        self.zero_tol * largest.max(1.0)
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            zero_tol: DEFAULT_ZERO_TOL,
        }
    }
}

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Real coordinates as a complex vector.
pub fn real_vector(entries: &[f64]) -> ComplexVector {
    ComplexVector::from_iterator(entries.len(), entries.iter().map(|&x| c64(x, 0.0)))
}

/// Computational basis vector `e_k` of dimension `dim`.
pub fn basis_vector(dim: usize, k: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(dim);
    v[k] = c64(1.0, 0.0);
    v
}

/// `⟨u|v⟩`, conjugate-linear in the first argument.
pub fn inner(u: &ComplexVector, v: &ComplexVector) -> Result<C64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    Ok(u.dotc(v))
}

pub fn normalized(v: &ComplexVector, tol: Tolerance) -> Result<ComplexVector> {
    let norm = v.norm();
    if norm <= tol.zero_tol() || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(v.unscale(norm))
}

/// `u` and `v` describe the same ray: `|⟨u|v⟩| ≥ (1 − zero_tol)·‖u‖‖v‖`.
pub fn equal_up_to_phase(u: &ComplexVector, v: &ComplexVector, tol: Tolerance) -> Result<bool> {
    let overlap = inner(u, v)?.norm();
    let (nu, nv) = (u.norm(), v.norm());
    if nu <= tol.zero_tol() || nv <= tol.zero_tol() {
        return Err(Error::ZeroVector);
    }
    Ok(overlap >= (1.0 - tol.zero_tol()) * nu * nv)
}

/// Rotates `v` so that its first entry of (numerically) largest magnitude is
/// real and positive.
pub fn canonical_phase(v: &ComplexVector) -> ComplexVector {
    let largest = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if largest == 0.0 {
        return v.clone();
    }
    let pivot = v
        .iter()
        .find(|z| z.norm() >= largest * (1.0 - 1e-9))
        .copied()
        .unwrap_or_else(|| c64(1.0, 0.0));
    let phase = pivot.conj() / pivot.norm();
    let mut out = v.map(|z| z * phase);
    // the pivot is now real up to rounding
    if let Some(z) = out.iter_mut().find(|z| z.norm() >= largest * (1.0 - 1e-9)) {
        *z = c64(z.norm(), 0.0);
    }
    out
}

/// Row-major Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    let n = b.len();
    ComplexVector::from_fn(a.len() * n, |k, _| a[k / n] * b[k % n])
}

struct Svd {
    u: ComplexMatrix,
    singular: Vec<f64>,
    v_t: ComplexMatrix,
}

/// Tries before [`svd`] settles for its most accurate factorization.
const SVD_ATTEMPTS: u64 = 6;

/// Thin SVD with singular values sorted in decreasing order.
///
/// Every factorization is checked by reconstruction and orthonormality of
/// the factors. The complex Golub–Kahan iteration in `nalgebra` occasionally
/// converges to a wrong factorization on exactly rank-deficient inputs; a
/// failed check is retried on the transpose and then on fixed unitary
/// rotations of the input, which change the iteration but not the result.
fn svd(m: &ComplexMatrix) -> Svd {
    let limit = 1e-10 * m.norm().max(1.0);
    let mut best: Option<(f64, Svd)> = None;
    for attempt in 0..SVD_ATTEMPTS {
        let dec = match attempt {
            0 => raw_svd(m),
            1 => {
                let t = raw_svd(&m.transpose());
                Svd {
                    u: t.v_t.transpose(),
                    singular: t.singular,
                    v_t: t.u.transpose(),
                }
            }
            k => {
                let w = random_unitary(m.nrows(), k);
                let r = raw_svd(&(&w * m));
                Svd {
                    u: w.adjoint() * r.u,
                    singular: r.singular,
                    v_t: r.v_t,
                }
            }
        };
        let err = svd_error(m, &dec);
        if err <= limit {
            return dec;
        }
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, dec));
        }
    }
    best.expect("at least one attempt").1
}

fn raw_svd(m: &ComplexMatrix) -> Svd {
    let raw = m.clone().svd(true, true);
    let u = raw.u.expect("requested U");
    let v_t = raw.v_t.expect("requested V^H");
    let mut order: Vec<usize> = (0..raw.singular_values.len()).collect();
    order.sort_by(|&x, &y| raw.singular_values[y].total_cmp(&raw.singular_values[x]));
    let singular = order.iter().map(|&k| raw.singular_values[k]).collect();
    let u = ComplexMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let v_t = ComplexMatrix::from_fn(order.len(), v_t.ncols(), |r, c| v_t[(order[r], c)]);
    Svd { u, singular, v_t }
}

fn svd_error(m: &ComplexMatrix, dec: &Svd) -> f64 {
    let k = dec.singular.len();
    let sigma = ComplexMatrix::from_fn(k, k, |r, c| if r == c { c64(dec.singular[r], 0.0) } else { c64(0.0, 0.0) });
    let recon = (&dec.u * sigma * &dec.v_t - m).norm();
    let eye = ComplexMatrix::identity(k, k);
    let u_defect = (dec.u.adjoint() * &dec.u - &eye).norm();
    let v_defect = (&dec.v_t * dec.v_t.adjoint() - &eye).norm();
    recon.max(u_defect).max(v_defect)
}

fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    svd(m).singular
}

/// Orthonormal basis of `{v : M v = 0}`.
pub fn nullspace(m: &ComplexMatrix, tol: Tolerance) -> Subspace {
    let cols = m.ncols();
    if m.nrows() == 0 {
        return Subspace::full(cols);
    }
    // pad to at least square so that V is complete
    let padded = if m.nrows() < cols {
        let mut p = ComplexMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let dec = svd(&padded);
    let cut = tol.singular_cut(dec.singular.first().copied().unwrap_or(0.0));
    let basis = (0..cols)
        .filter(|&k| dec.singular[k] <= cut)
        .map(|k| dec.v_t.row(k).transpose().map(|z| z.conj()))
        .collect();
    Subspace {
        basis,
        ambient_dim: cols,
    }
}

/// Matrix whose columns are the given vectors.
pub fn column_matrix(vectors: &[&ComplexVector], dim: usize) -> Result<ComplexMatrix> {
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
    }
    Ok(ComplexMatrix::from_fn(dim, vectors.len(), |r, c| vectors[c][r]))
}

/// Dimension of the span of `vectors` (all of dimension `dim`).
pub fn rank(vectors: &[&ComplexVector], dim: usize, tol: Tolerance) -> Result<usize> {
    if vectors.is_empty() {
        return Ok(0);
    }
    let m = column_matrix(vectors, dim)?;
    let s = singular_values(&m);
    let cut = tol.singular_cut(s[0]);
    Ok(s.iter().filter(|&&x| x > cut).count())
}

/// Factors a bipartite vector of an `m ⊗ n` system as `a ⊗ b`, both
/// normalized, or reports its second Schmidt coefficient.
pub fn schmidt_factor(
    v: &ComplexVector,
    m: usize,
    n: usize,
    tol: Tolerance,
) -> Result<(ComplexVector, ComplexVector)> {
    if v.len() != m * n {
        return Err(Error::DimensionMismatch {
            expected: m * n,
            found: v.len(),
        });
    }
    if v.norm() <= tol.zero_tol() {
        return Err(Error::ZeroVector);
    }
    let reshaped = ComplexMatrix::from_fn(m, n, |i, j| v[i * n + j]);
    let dec = svd(&reshaped);
    let first = dec.singular[0];
    let second = dec.singular.get(1).copied().unwrap_or(0.0);
    if second > tol.zero_tol() * first {
        return Err(Error::EntangledVector {
            second_singular: second / v.norm(),
        });
    }
    let a: ComplexVector = dec.u.column(0).into_owned();
    let b: ComplexVector = dec.v_t.row(0).transpose();
    Ok((a, b))
}

/// A subspace of `C^d`, stored as an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: Vec<ComplexVector>,
    ambient_dim: usize,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            basis: Vec::new(),
            ambient_dim,
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            basis: (0..ambient_dim)
                .map(|k| basis_vector(ambient_dim, k))
                .collect(),
            ambient_dim,
        }
    }

    /// Span of arbitrary (not necessarily independent) vectors.
    pub fn span(vectors: &[&ComplexVector], ambient_dim: usize, tol: Tolerance) -> Result<Self> {
        if vectors.is_empty() {
            return Ok(Self::zero(ambient_dim));
        }
        let m = column_matrix(vectors, ambient_dim)?;
        let dec = svd(&m);
        let cut = tol.singular_cut(dec.singular[0]);
        let basis = (0..dec.singular.len())
            .filter(|&k| dec.singular[k] > cut)
            .map(|k| dec.u.column(k).into_owned())
            .collect();
        Ok(Self { basis, ambient_dim })
    }

    /// Wraps vectors that are already orthonormal at `tol`.
    pub fn from_orthonormal(
        basis: Vec<ComplexVector>,
        ambient_dim: usize,
        tol: Tolerance,
    ) -> Result<Self> {
        for (k, v) in basis.iter().enumerate() {
            if v.len() != ambient_dim {
                return Err(Error::DimensionMismatch {
                    expected: ambient_dim,
                    found: v.len(),
                });
            }
            if (v.norm() - 1.0).abs() > tol.zero_tol().max(1e-12) * 10.0 {
                return Err(Error::InvalidParameter(format!(
                    "basis vector {k} is not normalized (norm {})",
                    v.norm()
                )));
            }
            for (l, w) in basis.iter().enumerate().take(k) {
                let ip = v.dotc(w).norm();
                if ip > tol.zero_tol() {
                    return Err(Error::InvalidParameter(format!(
                        "basis vectors {l} and {k} are not orthogonal (|<l|k>| = {ip:.3e})"
                    )));
                }
            }
        }
        if basis.len() > ambient_dim {
            return Err(Error::InvalidParameter(format!(
                "{} orthonormal vectors in dimension {ambient_dim}",
                basis.len()
            )));
        }
        Ok(Self { basis, ambient_dim })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn basis(&self) -> &[ComplexVector] {
        &self.basis
    }

    pub fn projector(&self) -> ComplexMatrix {
        let mut p = ComplexMatrix::zeros(self.ambient_dim, self.ambient_dim);
        for v in &self.basis {
            p += v * v.adjoint();
        }
        p
    }

    fn check_ambient(&self, d: usize) -> Result<()> {
        if d != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                found: d,
            });
        }
        Ok(())
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &ComplexVector) -> Result<ComplexVector> {
        self.check_ambient(v.len())?;
        let mut out = ComplexVector::zeros(self.ambient_dim);
        for w in &self.basis {
            out += w * w.dotc(v);
        }
        Ok(out)
    }

    pub fn orth_complement(&self, tol: Tolerance) -> Subspace {
        if self.basis.is_empty() {
            return Self::full(self.ambient_dim);
        }
        let rows = ComplexMatrix::from_fn(self.basis.len(), self.ambient_dim, |r, c| {
            self.basis[r][c].conj()
        });
        nullspace(&rows, tol)
    }

    pub fn intersect(&self, other: &Subspace, tol: Tolerance) -> Result<Subspace> {
        self.check_ambient(other.ambient_dim)?;
        let d = self.ambient_dim;
        let id = ComplexMatrix::identity(d, d);
        let mut stacked = ComplexMatrix::zeros(2 * d, d);
        stacked
            .view_mut((0, 0), (d, d))
            .copy_from(&(&id - self.projector()));
        stacked
            .view_mut((d, 0), (d, d))
            .copy_from(&(&id - other.projector()));
        Ok(nullspace(&stacked, tol))
    }

    /// `v` lies in the subspace: `‖Pv‖ ≥ (1 − zero_tol)·‖v‖`.
    pub fn contains(&self, v: &ComplexVector, tol: Tolerance) -> Result<bool> {
        let norm = v.norm();
        if norm <= tol.zero_tol() {
            self.check_ambient(v.len())?;
            return Ok(true);
        }
        Ok(self.project(v)?.norm() >= (1.0 - tol.zero_tol()) * norm)
    }

    /// `v` is orthogonal to the subspace: `‖Pv‖ ≤ zero_tol·‖v‖`.
    pub fn is_orthogonal_to(&self, v: &ComplexVector, tol: Tolerance) -> Result<bool> {
        Ok(self.project(v)?.norm() <= tol.zero_tol() * v.norm().max(1.0))
    }

    pub fn equal(&self, other: &Subspace, tol: Tolerance) -> Result<bool> {
        self.check_ambient(other.ambient_dim)?;
        if self.dim() != other.dim() {
            return Ok(false);
        }
        for v in &self.basis {
            if !other.contains(v, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Seeded Haar-like unitary: orthonormalized complex Gaussian matrix with the
/// phases of `R` absorbed into `Q`.
pub fn random_unitary(dim: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_unitary_with(&mut rng, dim)
}

pub fn random_unitary_with<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        for row in 0..dim {
            q[(row, k)] *= phase;
        }
    }
    q
}

/// Uniformly random unit vector in `C^dim`.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexVector {
    loop {
        let v = ComplexVector::from_fn(dim, |_, _| gaussian(rng));
        let norm = v.norm();
        if norm > 1e-6 {
            return v.unscale(norm);
        }
    }
}

/// Uniformly random unit vector inside `space`.
pub fn random_state_in<R: Rng + ?Sized>(rng: &mut R, space: &Subspace) -> Option<ComplexVector> {
    if space.dim() == 0 {
        return None;
    }
    let coeffs = random_state(rng, space.dim());
    let mut v = ComplexVector::zeros(space.ambient_dim());
    for (c, w) in coeffs.iter().zip(space.basis()) {
        v += w * *c;
    }
    Some(v.unscale(v.norm()))
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Largest entry magnitude of `U†U − I`.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    let d = u.adjoint() * u - ComplexMatrix::identity(u.nrows(), u.ncols());
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
