//! Exact state-vector and density-matrix toolkit for dimensions 2, 4 and 8.
//!
//! Everything here is dense `f64` complex arithmetic. Algebraic identities are
//! checked to [`TOL`]; sampled quantities are the caller's business.

mod mub;

pub use mub::{bb84_family, mub4_family, mub8_family, MubFamily};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

pub type C64 = Complex64;

/// Tolerance for algebraic identities (normalisation, hermiticity, unitarity).
pub const TOL: f64 = 1e-9;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn check_dim(dim: usize) -> Result<()> {
    match dim {
        2 | 4 | 8 => Ok(()),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// A normalised state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Vec<C64>,
}

impl PureState {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        check_dim(amps.len())?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amps })
    }

    /// Builds a state and rescales it to unit norm.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Self::new(amps.into_iter().map(|a| a / norm).collect())
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis_vector(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        if index >= dim {
            return Err(Error::OutOfRange(format!("basis index {index} >= {dim}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub(crate) fn from_column(m: &DMatrix<C64>, col: usize) -> Self {
        Self {
            amps: m.column(col).iter().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨self|other⟩|²`
    pub fn overlap_sq(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Equality up to a global phase.
    pub fn same_ray(&self, other: &PureState) -> bool {
        self.dim() == other.dim() && (self.overlap_sq(other) - 1.0).abs() < TOL
    }

    pub fn projector(&self) -> DensityMatrix {
        let v = DVector::from_column_slice(&self.amps);
        DensityMatrix {
            m: &v * v.adjoint(),
        }
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates the three density-matrix invariants.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidDensityMatrix("not square".into()));
        }
        check_dim(m.nrows())?;
        let herm = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not hermitian (deviation {herm:e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TOL || tr.im.abs() > TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let min_eig = hermitian_eigenvalues(&m).into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < -TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { m })
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            m: DMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0),
        })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.m[(row, col)]
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn expectation(&self, state: &PureState) -> f64 {
        let v = DVector::from_column_slice(state.amplitudes());
        (v.adjoint() * &self.m * &v)[(0, 0)].re
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &DMatrix<C64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .map(|x| x.abs())
        .sum()
}

/// One of the four BB84 states; basis 0 is `{|0⟩,|1⟩}`, basis 1 is `{|+⟩,|−⟩}`.
pub fn bb84_state(bit: u8, basis: u8) -> Result<PureState> {
    let s = FRAC_1_SQRT_2;
    let amps = match (bit, basis) {
        (0, 0) => [1.0, 0.0],
        (1, 0) => [0.0, 1.0],
        (0, 1) => [s, s],
        (1, 1) => [s, -s],
        _ => return Err(Error::NotABit),
    };
    Ok(PureState {
        amps: amps.iter().map(|&a| C64::new(a, 0.0)).collect(),
    })
}

/// `Σ pᵢ |ψᵢ⟩⟨ψᵢ|`
pub fn mixture(states: &[(PureState, f64)]) -> Result<DensityMatrix> {
    let Some((first, _)) = states.first() else {
        return Err(Error::BadProbabilities(0.0));
    };
    let dim = first.dim();
    let total: f64 = states.iter().map(|(_, p)| *p).sum();
    if states.iter().any(|(_, p)| *p < 0.0 || !p.is_finite()) || (total - 1.0).abs() > TOL {
        return Err(Error::BadProbabilities(total));
    }
    let mut m = DMatrix::zeros(dim, dim);
    for (psi, p) in states {
        if psi.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: psi.dim(),
            });
        }
        m += psi.projector().m * C64::new(*p, 0.0);
    }
    DensityMatrix::new(m)
}

fn same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

/// `½‖a − b‖₁`
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    same_dim(a, b)?;
    Ok((0.5 * trace_norm(&(&a.m - &b.m))).clamp(0.0, 1.0))
}

fn weighted_difference(a: &DensityMatrix, b: &DensityMatrix, prior_a: f64) -> DMatrix<C64> {
    &a.m * C64::new(prior_a, 0.0) - &b.m * C64::new(1.0 - prior_a, 0.0)
}

/// Optimal success probability for telling `a` (prior `prior_a`) from `b`.
pub fn helstrom_success(a: &DensityMatrix, b: &DensityMatrix, prior_a: f64) -> Result<f64> {
    same_dim(a, b)?;
    if !(0.0..=1.0).contains(&prior_a) {
        return Err(Error::OutOfRange(format!("prior {prior_a}")));
    }
    let norm = trace_norm(&weighted_difference(a, b, prior_a));
    Ok((0.5 * (1.0 + norm)).min(1.0))
}

/// An orthonormal measurement basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    vectors: Vec<PureState>,
}

impl Basis {
    pub fn new(vectors: Vec<PureState>) -> Result<Self> {
        let dim = vectors.first().map(PureState::dim).unwrap_or(0);
        check_dim(dim)?;
        if vectors.len() != dim {
            return Err(Error::NonOrthonormalBasis(1.0));
        }
        let mut worst: f64 = 0.0;
        for (i, u) in vectors.iter().enumerate() {
            if u.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: u.dim(),
                });
            }
            for (j, v) in vectors.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((u.inner(v) - C64::new(expected, 0.0)).norm());
            }
        }
        if worst > TOL {
            return Err(Error::NonOrthonormalBasis(worst));
        }
        Ok(Self { vectors })
    }

    /// Columns of a unitary matrix.
    pub fn from_unitary(m: &DMatrix<C64>) -> Result<Self> {
        Self::new((0..m.ncols()).map(|c| PureState::from_column(m, c)).collect())
    }

    pub fn computational(dim: usize) -> Result<Self> {
        Self::new(
            (0..dim)
                .map(|i| PureState::basis_vector(dim, i))
                .collect::<Result<_>>()?,
        )
    }

    /// `{|0⟩,|1⟩}` for 0, `{|+⟩,|−⟩}` for 1.
    pub fn bb84(basis: u8) -> Result<Self> {
        Self::new(vec![bb84_state(0, basis)?, bb84_state(1, basis)?])
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[PureState] {
        &self.vectors
    }

    /// Born probabilities of each outcome for `state`.
    pub fn probabilities(&self, state: &PureState) -> Result<Vec<f64>> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: state.dim(),
            });
        }
        Ok(self.vectors.iter().map(|b| b.overlap_sq(state)).collect())
    }
}

/// Projective measurement with Born-rule sampling. The post-measurement
/// state is the basis vector of the observed outcome.
pub fn measure(state: &PureState, basis: &Basis, rng: &mut SimRng) -> Result<(usize, PureState)> {
    let probs = basis.probabilities(state)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut outcome = probs.len() - 1;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            outcome = i;
            break;
        }
    }
    Ok((outcome, basis.vectors[outcome].clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    A,
    B,
}

/// The optimal two-outcome projective measurement for discriminating a pair
/// of density matrices: eigenvectors of `π·a − (1−π)·b` with non-negative
/// eigenvalue vote for `a`, the rest for `b`. Zero eigenvalues go to `a`.
#[derive(Debug, Clone)]
pub struct HelstromMeasurement {
    basis: Basis,
    votes: Vec<Hypothesis>,
    success: f64,
}

impl HelstromMeasurement {
    pub fn new(a: &DensityMatrix, b: &DensityMatrix) -> Result<Self> {
        Self::weighted(a, b, 0.5)
    }

    pub fn weighted(a: &DensityMatrix, b: &DensityMatrix, prior_a: f64) -> Result<Self> {
        let success = helstrom_success(a, b, prior_a)?;
        let eig = SymmetricEigen::new(weighted_difference(a, b, prior_a));
        let dim = a.dim();
        // Sorting by eigenvalue keeps the outcome order deterministic.
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let vectors = order
            .iter()
            .map(|&i| PureState::normalized(eig.eigenvectors.column(i).iter().copied().collect()))
            .collect::<Result<Vec<_>>>()?;
        let votes = order
            .iter()
            .map(|&i| {
                if eig.eigenvalues[i] >= -TOL {
                    Hypothesis::A
                } else {
                    Hypothesis::B
                }
            })
            .collect();
        Ok(Self {
            basis: Basis::new(vectors)?,
            votes,
            success,
        })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    /// Analytic success probability of this measurement.
    pub fn success(&self) -> f64 {
        self.success
    }

    pub fn vote(&self, outcome: usize) -> Hypothesis {
        self.votes[outcome]
    }

    pub fn projector(&self, which: Hypothesis) -> DMatrix<C64> {
        let dim = self.basis.dim();
        let mut p = DMatrix::zeros(dim, dim);
        for (v, vote) in self.basis.vectors.iter().zip(&self.votes) {
            if *vote == which {
                p += v.projector().m;
            }
        }
        p
    }

    /// Measures `state`, returning the guessed hypothesis and the post-state.
    pub fn measure(&self, state: &PureState, rng: &mut SimRng) -> Result<(Hypothesis, PureState)> {
        let (outcome, post) = measure(state, &self.basis, rng)?;
        Ok((self.votes[outcome], post))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_abs_diff_eq;

    fn ket(bit: u8, basis: u8) -> PureState {
        bb84_state(bit, basis).unwrap()
    }

    fn value_mixtures() -> (DensityMatrix, DensityMatrix) {
        let a = mixture(&[(ket(0, 0), 0.5), (ket(0, 1), 0.5)]).unwrap();
        let b = mixture(&[(ket(1, 0), 0.5), (ket(1, 1), 0.5)]).unwrap();
        (a, b)
    }

    #[test]
    fn bb84_table() {
        assert_eq!(ket(0, 0).amplitudes()[0], C64::new(1.0, 0.0));
        let minus = ket(1, 1);
        assert_abs_diff_eq!(minus.amplitudes()[0].re, FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(minus.amplitudes()[1].re, -FRAC_1_SQRT_2, epsilon = 1e-12);
        let plus = ket(0, 1);
        assert_abs_diff_eq!(plus.amplitudes()[1].re, FRAC_1_SQRT_2, epsilon = 1e-12);
        assert!(bb84_state(2, 0).is_err());
    }

    #[test]
    fn mixture_examples() {
        let pure = mixture(&[(ket(0, 0), 1.0)]).unwrap();
        assert_eq!(pure.entry(0, 0), C64::new(1.0, 0.0));
        assert_eq!(pure.entry(1, 1), C64::new(0.0, 0.0));

        let m = mixture(&[(ket(0, 0), 0.5), (ket(0, 1), 0.5)]).unwrap();
        for (r, c, v) in [(0, 0, 0.75), (0, 1, 0.25), (1, 0, 0.25), (1, 1, 0.25)] {
            assert_abs_diff_eq!(m.entry(r, c).re, v, epsilon = 1e-12);
        }

        let mm = mixture(&[(ket(0, 0), 0.5), (ket(1, 0), 0.5)]).unwrap();
        assert_eq!(mm, DensityMatrix::maximally_mixed(2).unwrap());
    }

    #[test]
    fn mixture_rejects_bad_weights() {
        assert!(mixture(&[(ket(0, 0), 0.5)]).is_err());
        assert!(mixture(&[(ket(0, 0), 1.5), (ket(1, 0), -0.5)]).is_err());
        assert!(mixture(&[]).is_err());
    }

    #[test]
    fn density_matrix_rejects_non_hermitian() {
        let mut m = DMatrix::identity(2, 2) * C64::new(0.5, 0.0);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn trace_distance_examples() {
        let zero = ket(0, 0).projector();
        let one = ket(1, 0).projector();
        assert_abs_diff_eq!(trace_distance(&zero, &one).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(trace_distance(&zero, &zero).unwrap(), 0.0, epsilon = 1e-12);
        let (a, b) = value_mixtures();
        assert_abs_diff_eq!(trace_distance(&a, &b).unwrap(), FRAC_1_SQRT_2, epsilon = 1e-9);
        let four = DensityMatrix::maximally_mixed(4).unwrap();
        assert!(trace_distance(&zero, &four).is_err());
    }

    #[test]
    fn helstrom_examples() {
        let zero = ket(0, 0).projector();
        let one = ket(1, 0).projector();
        assert_abs_diff_eq!(helstrom_success(&zero, &one, 0.5).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(helstrom_success(&zero, &zero, 0.5).unwrap(), 0.5, epsilon = 1e-12);
        let (a, b) = value_mixtures();
        let expected = 0.5 + 0.5 * FRAC_1_SQRT_2;
        assert_abs_diff_eq!(helstrom_success(&a, &b, 0.5).unwrap(), expected, epsilon = 1e-9);
        assert!(helstrom_success(&a, &b, 1.5).is_err());
    }

    #[test]
    fn helstrom_measurement_orthogonal_case() {
        let h = HelstromMeasurement::new(&ket(0, 0).projector(), &ket(1, 0).projector()).unwrap();
        let pa = h.projector(Hypothesis::A);
        let pb = h.projector(Hypothesis::B);
        assert_abs_diff_eq!(pa[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pb[(1, 1)].re, 1.0, epsilon = 1e-12);
        let sum = pa + pb;
        assert!((sum - DMatrix::<C64>::identity(2, 2)).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn helstrom_measurement_bb84_is_breidbart_basis() {
        let (a, b) = value_mixtures();
        let h = HelstromMeasurement::new(&a, &b).unwrap();
        // Eigenvector of (Z+X)/2 for the positive eigenvalue: (cos π/8, sin π/8).
        let c = (std::f64::consts::PI / 8.0).cos();
        let s = (std::f64::consts::PI / 8.0).sin();
        let pa = h.projector(Hypothesis::A);
        assert_abs_diff_eq!(pa[(0, 0)].re, c * c, epsilon = 1e-9);
        assert_abs_diff_eq!(pa[(0, 1)].re, c * s, epsilon = 1e-9);
        assert_abs_diff_eq!(pa[(1, 1)].re, s * s, epsilon = 1e-9);
    }

    #[test]
    fn helstrom_measurement_identical_inputs_ties_to_a() {
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        let h = HelstromMeasurement::new(&rho, &rho).unwrap();
        assert_abs_diff_eq!(h.success(), 0.5, epsilon = 1e-12);
        assert!((0..2).all(|i| h.vote(i) == Hypothesis::A));
    }

    #[test]
    fn measure_examples() {
        let mut rng = seeded(11);
        let plus = ket(0, 1);
        let x = Basis::bb84(1).unwrap();
        for _ in 0..100 {
            assert_eq!(measure(&plus, &x, &mut rng).unwrap().0, 0);
        }
        let z = Basis::bb84(0).unwrap();
        let n = 100_000;
        let zeros = (0..n)
            .filter(|_| measure(&plus, &z, &mut rng).unwrap().0 == 0)
            .count();
        assert_abs_diff_eq!(zeros as f64 / n as f64, 0.5, epsilon = 0.01);

        let (a, b) = value_mixtures();
        let h = HelstromMeasurement::new(&a, &b).unwrap();
        let zero = ket(0, 0);
        let hits = (0..n)
            .filter(|_| h.measure(&zero, &mut rng).unwrap().0 == Hypothesis::A)
            .count();
        let cos2 = (std::f64::consts::PI / 8.0).cos().powi(2);
        assert_abs_diff_eq!(hits as f64 / n as f64, cos2, epsilon = 0.01);
    }

    #[test]
    fn measure_rejects_bad_basis() {
        let bad = Basis::new(vec![ket(0, 0), ket(0, 1)]);
        assert!(matches!(bad, Err(Error::NonOrthonormalBasis(_))));
    }

    #[test]
    fn post_measurement_state_is_basis_vector() {
        let mut rng = seeded(2);
        let z = Basis::bb84(0).unwrap();
        let (o, post) = measure(&ket(1, 1), &z, &mut rng).unwrap();
        assert!(post.same_ray(&ket(o as u8, 0)));
    }
}
