//! Finite-dimensional Hilbert-space vocabulary: state vectors, observables,
//! density matrices, amplitudes, relative phases and weak values.
//!
//! States are rays: nothing here assumes unit normalisation, and every
//! quotient divides by the norms explicitly.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// Numerical thresholds applied throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Modulus at or below which an amplitude is treated as vanishing.
    pub zero: f64,
    /// Largest accepted |O_ij - conj(O_ji)|.
    pub herm: f64,
    /// Angle comparison tolerance (radians).
    pub phase: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            zero: 1e-12,
            herm: 1e-10,
            phase: 1e-9,
        }
    }
}

impl Tolerances {
    pub const PHASE_ENV: &'static str = "GGP_TOL_PHASE";

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("zero", self.zero), ("herm", self.herm), ("phase", self.phase)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("tolerance must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Defaults, with `tol_phase` taken from `GGP_TOL_PHASE` when set.
    pub fn from_env() -> Result<Self> {
        let mut tol = Tolerances::default();
        if let Ok(raw) = std::env::var(Self::PHASE_ENV) {
            tol.phase = raw
                .trim()
                .parse()
                .map_err(|_| Error::invalid(Self::PHASE_ENV, format!("not a number: {raw:?}")))?;
        }
        tol.validate()?;
        Ok(tol)
    }
}

/// Maps an angle onto (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Wrapped distance |wrap(a - b)|.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

fn check_finite(values: &[Complex]) -> Result<()> {
    match values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// A nonzero ray representative in C^n. Not necessarily normalised.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(DVector<Complex>);

impl StateVector {
    pub fn new(components: Vec<Complex>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(components))
    }

    pub fn from_vector(v: DVector<Complex>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::invalid("state", "dimension must be positive"));
        }
        check_finite(v.as_slice())?;
        let norm_sq = v.norm_squared();
        if norm_sq <= Tolerances::default().zero {
            return Err(Error::ZeroVector { norm_sq });
        }
        Ok(StateVector(v))
    }

    pub fn from_real(components: &[f64]) -> Result<Self> {
        Self::new(components.iter().map(|&x| Complex::new(x, 0.0)).collect())
    }

    /// Computational basis vector |index> in `dim` dimensions.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut v = DVector::zeros(dim);
        v[index] = Complex::new(1.0, 0.0);
        Ok(StateVector(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<Complex> {
        &self.0
    }

    pub fn components(&self) -> &[Complex] {
        self.0.as_slice()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// <self|other>
    pub fn inner(&self, other: &StateVector) -> Result<Complex> {
        ensure_dim(self.dim(), other.dim())?;
        Ok(self.0.dotc(&other.0))
    }

    /// The state multiplied by e^{i angle}.
    pub fn phased(&self, angle: f64) -> StateVector {
        StateVector(&self.0 * Complex::from_polar(1.0, angle))
    }

    pub fn scaled(&self, factor: Complex) -> Result<StateVector> {
        StateVector::from_vector(&self.0 * factor)
    }

    pub fn normalized(&self) -> StateVector {
        StateVector(&self.0 / Complex::new(self.norm(), 0.0))
    }

    pub fn into_vector(self) -> DVector<Complex> {
        self.0
    }
}

pub(crate) fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// A Hermitian operator on C^n.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable(DMatrix<Complex>);

impl Observable {
    pub fn new(matrix: DMatrix<Complex>) -> Result<Self> {
        Self::with_tolerance(matrix, &Tolerances::default())
    }

    pub fn with_tolerance(matrix: DMatrix<Complex>, tol: &Tolerances) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols || rows == 0 {
            return Err(Error::NotSquare { rows, cols });
        }
        check_finite(matrix.as_slice())?;
        let deviation = hermiticity_deviation(&matrix);
        if deviation > tol.herm {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Observable(matrix))
    }

    pub fn from_rows(rows: &[Vec<Complex>]) -> Result<Self> {
        let n = rows.len();
        for row in rows {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(dim: usize) -> Self {
        Observable(DMatrix::identity(dim, dim))
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let v = DVector::from_iterator(values.len(), values.iter().map(|&x| Complex::new(x, 0.0)));
        Self::new(DMatrix::from_diagonal(&v))
    }

    /// The swap operator |1><0| + |0><1| on a qubit.
    pub fn pauli_x() -> Self {
        let o = Complex::new(0.0, 0.0);
        let l = Complex::new(1.0, 0.0);
        Observable(DMatrix::from_row_slice(2, 2, &[o, l, l, o]))
    }

    /// The Hadamard operator (|0><0| + |0><1| + |1><0| - |1><1|)/sqrt 2.
    pub fn hadamard() -> Self {
        let h = Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Observable(DMatrix::from_row_slice(2, 2, &[h, h, h, -h]))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex> {
        &self.0
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex {
        self.0[(row, col)]
    }

    pub fn apply(&self, state: &StateVector) -> Result<DVector<Complex>> {
        ensure_dim(self.dim(), state.dim())?;
        Ok(&self.0 * state.as_vector())
    }

    pub fn is_identity(&self) -> bool {
        self.0 == DMatrix::identity(self.dim(), self.dim())
    }
}

fn hermiticity_deviation(m: &DMatrix<Complex>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Pure-state projector |psi><psi| / <psi|psi>.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(DMatrix<Complex>);

impl DensityMatrix {
    pub fn from_state(state: &StateVector) -> Self {
        let v = state.as_vector();
        DensityMatrix(v * v.adjoint() / Complex::new(state.norm_sq(), 0.0))
    }

    pub fn matrix(&self) -> &DMatrix<Complex> {
        &self.0
    }

    pub fn trace(&self) -> Complex {
        self.0.trace()
    }

    /// Largest of the Hermiticity, trace and idempotency defects.
    pub fn purity_defect(&self) -> f64 {
        let herm = hermiticity_deviation(&self.0);
        let trace = (self.trace() - Complex::new(1.0, 0.0)).norm();
        let idem = (&self.0 * &self.0 - &self.0)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        herm.max(trace).max(idem)
    }
}

/// <a|O|b> = sum_ij conj(a_i) O_ij b_j.
pub fn matrix_element(a: &StateVector, o: &Observable, b: &StateVector) -> Result<Complex> {
    ensure_dim(a.dim(), o.dim())?;
    let ob = o.apply(b)?;
    Ok(a.as_vector().dotc(&ob))
}

/// Arg<a|O|b> in (-pi, pi]; with O = 1 this is Pancharatnam's relative phase.
pub fn relative_phase(a: &StateVector, b: &StateVector, o: &Observable, tol: &Tolerances) -> Result<f64> {
    let z = matrix_element(a, o, b)?;
    let modulus = z.norm();
    if modulus <= tol.zero {
        return Err(Error::UndefinedPhase { link: 0, modulus });
    }
    Ok(wrap_angle(z.arg()))
}

/// Weak value <a|O|b> / <a|b>.
pub fn weak_value(a: &StateVector, o: &Observable, b: &StateVector, tol: &Tolerances) -> Result<Complex> {
    let overlap = a.inner(b)?;
    let modulus = overlap.norm();
    if modulus <= tol.zero {
        return Err(Error::UndefinedWeakValue { modulus });
    }
    Ok(matrix_element(a, o, b)? / overlap)
}
