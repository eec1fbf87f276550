//! JSON encodings shared by the file formats: complex numbers are `[re, im]`
//! pairs, vectors are lists of pairs, matrices are lists of rows.

use crate::error::{Error, Result};
use crate::numerics::{c64, canonical_phase, ComplexMatrix, ComplexVector};

pub type WireVector = Vec<[f64; 2]>;
pub type WireMatrix = Vec<Vec<[f64; 2]>>;

pub fn vector_to_wire(v: &ComplexVector) -> WireVector {
    v.iter().map(|z| [clean(z.re), clean(z.im)]).collect()
}

/// Canonical-phase encoding used for everything that is a ray.
pub fn ray_to_wire(v: &ComplexVector) -> WireVector {
    vector_to_wire(&canonical_phase(v))
}

pub fn vector_from_wire(w: &[[f64; 2]], what: &str) -> Result<ComplexVector> {
    if w.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::MalformedInput(format!("{what}: non-finite entry")));
    }
    Ok(ComplexVector::from_iterator(
        w.len(),
        w.iter().map(|[re, im]| c64(*re, *im)),
    ))
}

pub fn matrix_to_wire(m: &ComplexMatrix) -> WireMatrix {
    (0..m.nrows())
        .map(|r| {
            (0..m.ncols())
                .map(|c| [clean(m[(r, c)].re), clean(m[(r, c)].im)])
                .collect()
        })
        .collect()
}

pub fn matrix_from_wire(w: &WireMatrix, what: &str) -> Result<ComplexMatrix> {
    let rows = w.len();
    let cols = w.first().map_or(0, Vec::len);
    if w.iter().any(|row| row.len() != cols) {
        return Err(Error::MalformedInput(format!("{what}: ragged matrix")));
    }
    if w.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(Error::MalformedInput(format!("{what}: non-finite entry")));
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |r, c| {
        c64(w[r][c][0], w[r][c][1])
    }))
}

// -0.0 and rounding dust would make golden output depend on the platform
fn clean(x: f64) -> f64 {
    if x.abs() < 1e-15 {
        0.0
    } else {
        x
    }
}
