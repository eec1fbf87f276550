//! Built-in, seedable families of orthogonal product sets.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::is_extendable;
use crate::classify::class3_predicate;
use crate::error::{Error, Result};
use crate::numerics::{basis_vector, c64, random_unitary_with, real_vector, ComplexMatrix, Tolerance};
use crate::rectrep::{r9, realize, RectDecomposition, RectRepresentation};
use crate::states::{OrthogonalProductSet, ProductState};

/// Attempts before `class3_random` gives up.
const CLASS3_ATTEMPTS: u64 = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    B9,
    B8,
    B9Minus(String),
    /// The eight-state `2 ⊗ 4` basis with angle `θ ∈ (0, π/2)`.
    Theta2x4(f64),
    RectRandom(RectDecomposition, u64),
    Class3Random(u64),
    UpbExample,
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::B9 => write!(f, "b9"),
            FamilySpec::B8 => write!(f, "b8"),
            FamilySpec::B9Minus(label) => write!(f, "b9_minus:{label}"),
            FamilySpec::Theta2x4(t) => write!(f, "theta_2x4({t})"),
            FamilySpec::RectRandom(_, seed) => write!(f, "rect_random(seed {seed})"),
            FamilySpec::Class3Random(seed) => write!(f, "class3_random(seed {seed})"),
            FamilySpec::UpbExample => write!(f, "upb_example"),
        }
    }
}

/// Family names as accepted on the command line; parameters that are not
/// part of the name (seed, angle) are filled with defaults and overridden by
/// the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyName {
    B9,
    B8,
    B9Minus,
    Theta2x4,
    RectRandom,
    Class3Random,
    UpbExample,
}

impl FromStr for FamilyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('-', "_").as_str() {
            "b9" => FamilyName::B9,
            "b8" => FamilyName::B8,
            "b9_minus" => FamilyName::B9Minus,
            "theta_2x4" | "theta" => FamilyName::Theta2x4,
            "rect_random" => FamilyName::RectRandom,
            "class3_random" => FamilyName::Class3Random,
            "upb_example" | "tiles" => FamilyName::UpbExample,
            other => return Err(Error::InvalidParameter(format!("unknown family `{other}`"))),
        })
    }
}

/// Generates the states of a family.
pub fn family(spec: &FamilySpec) -> Result<OrthogonalProductSet> {
    match spec {
        FamilySpec::B9 => realize(&b9_representation(), Tolerance::default()),
        FamilySpec::B8 => family(&FamilySpec::B9)?.without("phi9"),
        FamilySpec::B9Minus(label) => family(&FamilySpec::B9)?.without(label),
        FamilySpec::Theta2x4(theta) => theta_2x4(*theta),
        FamilySpec::RectRandom(decomp, seed) => realize(&random_representation(decomp, *seed), Tolerance::default()),
        FamilySpec::Class3Random(seed) => class3_random(*seed),
        FamilySpec::UpbExample => upb_example(),
    }
}

fn hadamard() -> ComplexMatrix {
    let h = FRAC_1_SQRT_2;
    ComplexMatrix::from_row_slice(2, 2, &[c64(h, 0.0), c64(h, 0.0), c64(h, 0.0), c64(-h, 0.0)])
}

/// The pinwheel representation with computational bases and Hadamards on
/// the free side of each outer rectangle.
pub fn b9_representation() -> RectRepresentation {
    let one = ComplexMatrix::identity(1, 1);
    let unitaries = vec![
        (one.clone(), hadamard()),
        (hadamard(), one.clone()),
        (one.clone(), hadamard()),
        (hadamard(), one.clone()),
        (one.clone(), one),
    ];
    let basis: Vec<_> = (0..3).map(|k| basis_vector(3, k)).collect();
    RectRepresentation::new(r9(), basis.clone(), basis, unitaries, Tolerance::default())
        .expect("pinwheel representation is valid")
}

/// Random local bases and random per-rectangle unitaries, all drawn from one
/// seeded stream.
pub fn random_representation(decomp: &RectDecomposition, seed: u64) -> RectRepresentation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = (decomp.n_rows(), decomp.n_cols());
    let wa = random_unitary_with(&mut rng, m);
    let wb = random_unitary_with(&mut rng, n);
    let unitaries = decomp
        .rectangles()
        .iter()
        .map(|r| {
            let u = random_unitary_with(&mut rng, r.rows.len());
            let v = random_unitary_with(&mut rng, r.cols.len());
            (u, v)
        })
        .collect();
    RectRepresentation::new(
        decomp.clone(),
        (0..m).map(|k| wa.column(k).into_owned()).collect(),
        (0..n).map(|k| wb.column(k).into_owned()).collect(),
        unitaries,
        Tolerance::default(),
    )
    .expect("random representation is valid")
}

fn class3_random(seed: u64) -> Result<OrthogonalProductSet> {
    for attempt in 0..CLASS3_ATTEMPTS {
        let rep = random_representation(&r9(), seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let e = realize(&rep, Tolerance::default())?.without("phi9")?;
        if class3_predicate(&e)? {
            return Ok(e);
        }
    }
    Err(Error::Inconsistency(format!(
        "no class-3 set after {CLASS3_ATTEMPTS} draws from seed {seed}"
    )))
}

fn theta_2x4(theta: f64) -> Result<OrthogonalProductSet> {
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie strictly between 0 and pi/2, got {theta}"
        )));
    }
    let tol = Tolerance::default();
    let (c, s) = (theta.cos(), theta.sin());
    let a = |x: [f64; 2]| real_vector(&x);
    let b = |x: [f64; 4]| real_vector(&x);
    let raw = [
        (a([1.0, 0.0]), b([1.0, 1.0, 0.0, 0.0])),
        (a([1.0, 0.0]), b([1.0, -1.0, 0.0, 0.0])),
        (a([0.0, 1.0]), b([c, s, 0.0, 0.0])),
        (a([0.0, 1.0]), b([s, -c, 0.0, 0.0])),
        (a([1.0, 1.0]), b([0.0, 0.0, 1.0, 1.0])),
        (a([1.0, 1.0]), b([0.0, 0.0, 1.0, -1.0])),
        (a([1.0, -1.0]), b([0.0, 0.0, c, s])),
        (a([1.0, -1.0]), b([0.0, 0.0, s, -c])),
    ];
    let states = raw
        .into_iter()
        .enumerate()
        .map(|(k, (x, y))| ProductState::new(format!("psi{}", k + 1), x, y, tol))
        .collect::<Result<Vec<_>>>()?;
    OrthogonalProductSet::new(2, 4, states, tol)
}

fn upb_example() -> Result<OrthogonalProductSet> {
    let tol = Tolerance::default();
    let raw = [
        ([1.0, 0.0, 0.0], [1.0, -1.0, 0.0]),
        ([0.0, 0.0, 1.0], [0.0, 1.0, -1.0]),
        ([1.0, -1.0, 0.0], [0.0, 0.0, 1.0]),
        ([0.0, 1.0, -1.0], [1.0, 0.0, 0.0]),
        ([1.0, 1.0, 1.0], [1.0, 1.0, 1.0]),
    ];
    let states = raw
        .iter()
        .enumerate()
        .map(|(k, (x, y))| ProductState::new(format!("t{}", k + 1), real_vector(x), real_vector(y), tol))
        .collect::<Result<Vec<_>>>()?;
    let e = OrthogonalProductSet::new(3, 3, states, tol)?;
    if is_extendable(&e)? {
        return Err(Error::Inconsistency("the tiles set is extendable".into()));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b9_matches_the_listed_states() {
        let e = family(&FamilySpec::B9).unwrap();
        let expected: [([f64; 3], [f64; 3]); 9] = [
            ([1.0, 0.0, 0.0], [1.0, 1.0, 0.0]),
            ([1.0, 0.0, 0.0], [1.0, -1.0, 0.0]),
            ([1.0, 1.0, 0.0], [0.0, 0.0, 1.0]),
            ([1.0, -1.0, 0.0], [0.0, 0.0, 1.0]),
            ([0.0, 0.0, 1.0], [0.0, 1.0, 1.0]),
            ([0.0, 0.0, 1.0], [0.0, 1.0, -1.0]),
            ([0.0, 1.0, 1.0], [1.0, 0.0, 0.0]),
            ([0.0, 1.0, -1.0], [1.0, 0.0, 0.0]),
            ([0.0, 1.0, 0.0], [0.0, 1.0, 0.0]),
        ];
        for (k, (a, b)) in expected.iter().enumerate() {
            let s = e.state(k);
            assert_eq!(s.label(), format!("phi{}", k + 1));
            let a = real_vector(a).normalize();
            let b = real_vector(b).normalize();
            assert!((s.a() - a).norm() < 1e-12, "phi{} A part", k + 1);
            assert!((s.b() - b).norm() < 1e-12, "phi{} B part", k + 1);
        }
    }

    #[test]
    fn theta_family_is_a_basis() {
        for theta in [0.1, 0.5, std::f64::consts::FRAC_PI_4, 1.0, 1.5] {
            assert!(family(&FamilySpec::Theta2x4(theta)).unwrap().is_basis());
        }
        assert!(matches!(
            family(&FamilySpec::Theta2x4(0.0)),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn unknown_label_is_reported() {
        assert!(family(&FamilySpec::B9Minus("phi10".into())).is_err());
    }

    #[test]
    fn family_names_parse() {
        assert_eq!("b9-minus".parse::<FamilyName>().unwrap(), FamilyName::B9Minus);
        assert!("b10".parse::<FamilyName>().is_err());
    }
}
