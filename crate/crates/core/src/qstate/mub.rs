use nalgebra::DMatrix;

use super::{Basis, PureState, C64, TOL};
use crate::error::{Error, Result};

/// A set of mutually unbiased bases; basis `θ` is the unitary `bases[θ]`
/// whose columns are the basis vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MubFamily {
    dim: usize,
    bases: Vec<DMatrix<C64>>,
}

impl MubFamily {
    /// Checks unitarity and pairwise unbiasedness.
    pub fn new(dim: usize, bases: Vec<DMatrix<C64>>) -> Result<Self> {
        let family = Self { dim, bases };
        let (unitary, unbiased) = family.deviations();
        if unitary > TOL {
            return Err(Error::NonOrthonormalBasis(unitary));
        }
        if unbiased > TOL {
            return Err(Error::OutOfRange(format!(
                "bases are not mutually unbiased (deviation {unbiased:e})"
            )));
        }
        Ok(family)
    }

    /// Builds without validation, for negative-control fixtures.
    pub fn new_unchecked(dim: usize, bases: Vec<DMatrix<C64>>) -> Self {
        Self { dim, bases }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn matrix(&self, theta: usize) -> &DMatrix<C64> {
        &self.bases[theta]
    }

    /// `|x^θ⟩`: column `x` of basis `θ`.
    pub fn state(&self, theta: usize, x: usize) -> PureState {
        PureState::from_column(&self.bases[theta], x)
    }

    pub fn basis(&self, theta: usize) -> Basis {
        Basis::from_unitary(&self.bases[theta]).expect("family bases are unitary")
    }

    /// Largest deviation from unitarity and from `|⟨b_i^θ|b_j^θ'⟩|² = 1/d`.
    pub fn deviations(&self) -> (f64, f64) {
        let id = DMatrix::<C64>::identity(self.dim, self.dim);
        let unitary = self
            .bases
            .iter()
            .map(|b| {
                if b.nrows() != self.dim || b.ncols() != self.dim {
                    return f64::INFINITY;
                }
                (b.adjoint() * b - &id).iter().map(|z| z.norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let target = 1.0 / self.dim as f64;
        let mut unbiased: f64 = 0.0;
        for (i, a) in self.bases.iter().enumerate() {
            for b in &self.bases[i + 1..] {
                let overlaps = a.adjoint() * b;
                for z in overlaps.iter() {
                    unbiased = unbiased.max((z.norm_sqr() - target).abs());
                }
            }
        }
        (unitary, unbiased)
    }

    pub fn is_valid(&self) -> bool {
        let (u, m) = self.deviations();
        u <= TOL && m <= TOL
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Hadamard `(1/√2)[[1,1],[1,−1]]`.
fn had() -> DMatrix<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
}

/// `(1/√2)[[1,1],[i,−i]]`, the Y-eigenbasis.
fn yb() -> DMatrix<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(0.0, s), c(0.0, -s)])
}

fn diag(signs: &[f64]) -> DMatrix<C64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        signs.len(),
        signs.iter().map(|&s| c(s, 0.0)),
    ))
}

fn kron3(a: &DMatrix<C64>, b: &DMatrix<C64>, c: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b).kronecker(c)
}

/// The two BB84 bases: computational and Hadamard.
pub fn bb84_family() -> MubFamily {
    MubFamily::new(2, vec![DMatrix::identity(2, 2), had()]).expect("bb84 bases")
}

/// Five mutually unbiased bases of dimension 4: `I₄, O⊗O, CZ(O⊗Y), CZ(Y⊗O), Y⊗Y`.
pub fn mub4_family() -> MubFamily {
    let (o, y) = (had(), yb());
    let cz = diag(&[1.0, 1.0, 1.0, -1.0]);
    MubFamily::new(
        4,
        vec![
            DMatrix::identity(4, 4),
            o.kronecker(&o),
            &cz * o.kronecker(&y),
            &cz * y.kronecker(&o),
            y.kronecker(&y),
        ],
    )
    .expect("mub4 bases")
}

/// Nine mutually unbiased bases of dimension 8, in the fixed order
/// `I₈, O⊗O⊗O, U(O⊗O⊗Y), V(O⊗Y⊗O), W(O⊗Y⊗Y), W(Y⊗O⊗O), V(Y⊗O⊗Y), U(Y⊗Y⊗O), Y⊗Y⊗Y`
/// with `O` the Hadamard, `Y` the Y-eigenbasis and `U, V, W` diagonal sign
/// patterns.
pub fn mub8_family() -> MubFamily {
    let (o, y) = (had(), yb());
    let u = diag(&[1.0, 1.0, 1.0, 1.0, 1.0, -1.0, -1.0, 1.0]);
    let v = diag(&[1.0, 1.0, 1.0, -1.0, 1.0, -1.0, 1.0, 1.0]);
    let w = diag(&[1.0, 1.0, 1.0, -1.0, 1.0, 1.0, -1.0, 1.0]);
    MubFamily::new(
        8,
        vec![
            DMatrix::identity(8, 8),
            kron3(&o, &o, &o),
            &u * kron3(&o, &o, &y),
            &v * kron3(&o, &y, &o),
            &w * kron3(&o, &y, &y),
            &w * kron3(&y, &o, &o),
            &v * kron3(&y, &o, &y),
            &u * kron3(&y, &y, &o),
            kron3(&y, &y, &y),
        ],
    )
    .expect("mub8 bases")
}
