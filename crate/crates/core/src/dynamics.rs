//! Unitary evolution with hbar = 1, the three-step projective cycle, closed
//! two-level phases, and the Dyson series for survival amplitudes.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{ensure_dim, matrix_element, wrap_angle, Complex, Observable, StateVector, Tolerances};

const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(DMatrix<Complex>);

impl UnitaryMatrix {
    pub fn new(entries: DMatrix<Complex>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        let u = UnitaryMatrix(entries);
        let defect = u.unitarity_defect();
        if defect.is_nan() || defect > UNITARITY_TOL {
            return Err(Error::invalid(
                "unitary",
                format!("U^dagger U deviates from 1 by {defect:e}"),
            ));
        }
        Ok(u)
    }

    pub fn matrix(&self) -> &DMatrix<Complex> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// max |(U^dagger U - 1)_ij|
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        let g = self.0.adjoint() * &self.0 - DMatrix::<Complex>::identity(n, n);
        g.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        UnitaryMatrix(self.0.adjoint())
    }

    pub fn compose(&self, other: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        ensure_dim(self.dim(), other.dim())?;
        Ok(UnitaryMatrix(&self.0 * &other.0))
    }

    pub fn apply(&self, s: &StateVector) -> Result<DVector<Complex>> {
        ensure_dim(self.dim(), s.dim())?;
        Ok(&self.0 * s.as_vector())
    }

    /// `<a|U|b>`
    pub fn element(&self, a: &StateVector, b: &StateVector) -> Result<Complex> {
        ensure_dim(self.dim(), a.dim())?;
        Ok(a.as_vector().dotc(&self.apply(b)?))
    }
}

/// `exp(-i t H)` from the eigendecomposition of `H`.
pub fn evolve(h: &Observable, t: f64) -> Result<UnitaryMatrix> {
    if !t.is_finite() {
        return Err(Error::invalid("t", "must be finite"));
    }
    let eig = h.matrix().clone().symmetric_eigen();
    let phases = DVector::from_iterator(
        h.dim(),
        eig.eigenvalues.iter().map(|&e| Complex::from_polar(1.0, -e * t)),
    );
    let v = &eig.eigenvectors;
    let u = v * DMatrix::from_diagonal(&phases) * v.adjoint();
    Ok(UnitaryMatrix(u))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleResult {
    /// `<0|U|2><2|U|1><1|U|0>` with `U = exp(-i eps H)`.
    #[serde(with = "crate::json::complex")]
    pub amplitude: Complex,
    /// `wrap(Arg amplitude + 3 pi / 2)`; tends to `limit_phase` as eps -> 0.
    pub extracted_phase: f64,
    pub epsilon: f64,
    /// `Arg(<0|H|2><2|H|1><1|H|0>)`, equal to `-gamma_h`.
    pub limit_phase: f64,
    /// `Arg(<0|H|1><1|H|2><2|H|0>)`.
    pub gamma_h: f64,
}

pub fn check_orthonormal(basis: &[StateVector], tol: f64) -> Result<()> {
    for i in 0..basis.len() {
        for j in i..basis.len() {
            let target = if i == j { 1.0 } else { 0.0 };
            let deviation = (basis[i].inner(&basis[j])? - target).norm();
            if deviation > tol {
                return Err(Error::NonOrthogonalBasis {
                    first: i,
                    second: j,
                    deviation,
                });
            }
        }
    }
    Ok(())
}

/// Amplitude for preparing `|0>`, evolving for `eps` and projecting onto
/// `|1>`, `|2>` and back onto `|0>`.
pub fn projective_cycle_amplitude(
    h: &Observable,
    basis: [&StateVector; 3],
    epsilon: f64,
    tol: &Tolerances,
) -> Result<CycleResult> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid("epsilon", format!("must be positive, got {epsilon}")));
    }
    for b in basis {
        ensure_dim(h.dim(), b.dim())?;
    }
    check_orthonormal(&basis.map(Clone::clone), UNITARITY_TOL)?;
    // links <1|H|0>, <2|H|1>, <0|H|2>
    let mut links = [Complex::new(0.0, 0.0); 3];
    for (k, link) in links.iter_mut().enumerate() {
        *link = matrix_element(basis[(k + 1) % 3], h, basis[k])?;
        if link.norm() <= tol.zero {
            return Err(Error::UndefinedPhase {
                link: k,
                modulus: link.norm(),
            });
        }
    }
    let u = evolve(h, epsilon)?;
    let amplitude = u.element(basis[0], basis[2])? * u.element(basis[2], basis[1])? * u.element(basis[1], basis[0])?;
    let limit: Complex = links.iter().product();
    Ok(CycleResult {
        amplitude,
        extracted_phase: wrap_angle(amplitude.arg() + 1.5 * PI),
        epsilon,
        limit_phase: limit.arg(),
        gamma_h: limit.conj().arg(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoLevelKind {
    #[serde(alias = "SwapX", alias = "swap-x", alias = "x")]
    SwapX,
    #[serde(alias = "Hadamard")]
    Hadamard,
}

impl TwoLevelKind {
    pub fn observable(self) -> Observable {
        match self {
            TwoLevelKind::SwapX => Observable::pauli_x(),
            TwoLevelKind::Hadamard => Observable::hadamard(),
        }
    }
}

/// `|Psi(theta, phi)> = cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`
/// with `theta` in `[0, 2 pi]` and `phi` in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelParams {
    pub theta: f64,
    pub phi: f64,
}

impl TwoLevelParams {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=2.0 * PI).contains(&theta) {
            return Err(Error::invalid("theta", format!("must lie in [0, 2 pi], got {theta}")));
        }
        if !(phi > -PI && phi <= PI) {
            return Err(Error::invalid("phi", format!("must lie in (-pi, pi], got {phi}")));
        }
        Ok(TwoLevelParams { theta, phi })
    }

    pub fn state(&self) -> StateVector {
        StateVector::new(vec![
            Complex::new((self.theta / 2.0).cos(), 0.0),
            Complex::from_polar((self.theta / 2.0).sin(), self.phi),
        ])
        .expect("unit two-level state")
    }

    /// The chain `(|0>, |Psi>, |1>)`.
    pub fn chain(&self) -> [StateVector; 3] {
        [
            StateVector::basis(2, 0).expect("basis"),
            self.state(),
            StateVector::basis(2, 1).expect("basis"),
        ]
    }
}

/// Closed form of the generalised phase of `(|0>, |Psi>, |1>)`.
///
/// SwapX: the chain product is `e^{i phi} sin(theta) / 2`.
/// Hadamard: it is `(cos theta + i sin theta sin phi) / (2 sqrt 2)`.
pub fn two_level_phase(kind: TwoLevelKind, p: TwoLevelParams, tol: &Tolerances) -> Result<f64> {
    let p = TwoLevelParams::new(p.theta, p.phi)?;
    let (c, s) = ((p.theta / 2.0).cos(), (p.theta / 2.0).sin());
    match kind {
        TwoLevelKind::SwapX => {
            // links e^{i phi} sin(theta/2), cos(theta/2), 1
            let modulus = (p.theta.sin() / 2.0).abs();
            let excluded = p.theta == 0.0 || p.theta == PI || p.theta == 2.0 * PI;
            if excluded || modulus <= tol.zero {
                let link = if s.abs() < c.abs() { 0 } else { 1 };
                return Err(Error::UndefinedPhase { link, modulus });
            }
            Ok(if p.theta < PI {
                wrap_angle(p.phi)
            } else {
                wrap_angle(PI + p.phi)
            })
        }
        TwoLevelKind::Hadamard => {
            let (re, im) = (p.theta.cos(), p.theta.sin() * p.phi.sin());
            let modulus = re.hypot(im) / (2.0 * 2f64.sqrt());
            if modulus <= tol.zero {
                let first = (Complex::new(c, 0.0) + Complex::from_polar(s, p.phi)).norm();
                let second = (Complex::new(c, 0.0) - Complex::from_polar(s, -p.phi)).norm();
                let link = if first < second { 0 } else { 1 };
                return Err(Error::UndefinedPhase {
                    link,
                    modulus: first.min(second) * FRAC_1_SQRT_2,
                });
            }
            Ok(im.atan2(re))
        }
    }
}

/// Complete homogeneous symmetric polynomials `h_0..h_{order}` of `ys`.
fn complete_homogeneous(ys: &[Complex], order: usize) -> Vec<Complex> {
    let mut h = vec![Complex::new(0.0, 0.0); order + 1];
    h[0] = Complex::new(1.0, 0.0);
    for &y in ys {
        for j in 1..=order {
            let prev = h[j - 1];
            h[j] += y * prev;
        }
    }
    h
}

const SERIES_SPAN: f64 = 1.0;
const SERIES_TERMS: usize = 30;

/// Divided difference `exp[z_0, .., z_n]` for nodes within `SERIES_SPAN` of
/// each other: `e^m sum_j h_j(z - m) / (j + n)!` with `m` the node mean.
fn exp_divided_difference_series(nodes: &[Complex]) -> Complex {
    let n = nodes.len() - 1;
    let mean = nodes.iter().sum::<Complex>() / nodes.len() as f64;
    let ys: Vec<Complex> = nodes.iter().map(|z| z - mean).collect();
    let h = complete_homogeneous(&ys, SERIES_TERMS);
    let mut inv_factorial = 1.0;
    for k in 1..=n {
        inv_factorial /= k as f64;
    }
    let mut sum = Complex::new(0.0, 0.0);
    for (j, hj) in h.iter().enumerate() {
        sum += hj * inv_factorial;
        inv_factorial /= (j + n + 1) as f64;
    }
    mean.exp() * sum
}

/// `exp[z_0, .., z_n]` for nodes sorted along the imaginary axis. Spans of at
/// least `SERIES_SPAN` use the two-term recurrence, which then divides by a
/// number of modulus >= 1.
fn exp_divided_difference_sorted(nodes: &[Complex]) -> Complex {
    let n = nodes.len();
    let span = (nodes[n - 1] - nodes[0]).norm();
    if n == 1 {
        return nodes[0].exp();
    }
    if span < SERIES_SPAN {
        return exp_divided_difference_series(nodes);
    }
    let upper = exp_divided_difference_sorted(&nodes[1..]);
    let lower = exp_divided_difference_sorted(&nodes[..n - 1]);
    (upper - lower) / (nodes[n - 1] - nodes[0])
}

/// Ordered nested integral
/// `int_0^t ds_1 e^{i w_1 s_1} int_0^{s_1} ds_2 e^{i w_2 s_2} .. ` over
/// `omegas.len()` variables, as `t^k exp[0, i w_1 t, i (w_1 + w_2) t, ..]`.
pub fn nested_phase_integral(omegas: &[f64], t: f64) -> Complex {
    if t == 0.0 {
        return if omegas.is_empty() {
            Complex::new(1.0, 0.0)
        } else {
            Complex::new(0.0, 0.0)
        };
    }
    let mut nodes = Vec::with_capacity(omegas.len() + 1);
    let mut acc = 0.0;
    nodes.push(Complex::new(0.0, 0.0));
    for w in omegas {
        acc += w;
        nodes.push(Complex::new(0.0, acc * t));
    }
    nodes.sort_by(|a, b| a.im.total_cmp(&b.im));
    exp_divided_difference_sorted(&nodes) * t.powi(omegas.len() as i32)
}

/// Triple ordered integral with phases `w_1, w_2, w_3`, from time 0 to `t`.
pub fn f_mn(omega1: f64, omega2: f64, omega3: f64, t: f64) -> Complex {
    nested_phase_integral(&[omega1, omega2, omega3], t)
}

fn diagonal_energies(h0: &Observable, tol: &Tolerances) -> Result<Vec<f64>> {
    let n = h0.dim();
    for i in 0..n {
        for j in 0..n {
            if i != j && h0.entry(i, j).norm() > tol.zero {
                return Err(Error::invalid(
                    "h0",
                    format!("must be diagonal, entry ({i}, {j}) is nonzero"),
                ));
            }
        }
    }
    Ok((0..n).map(|i| h0.entry(i, i).re).collect())
}

/// Dyson series for `<i|U_I(t, 0)|i>` through `order` powers of `V`, with
/// `H0` diagonal in the computational basis.
pub fn survival_amplitude(
    h0: &Observable,
    v: &Observable,
    i: usize,
    t: f64,
    order: usize,
    tol: &Tolerances,
) -> Result<Complex> {
    if order > 3 {
        return Err(Error::invalid("order", format!("must be 0..=3, got {order}")));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::invalid("t", format!("must be finite and >= 0, got {t}")));
    }
    ensure_dim(h0.dim(), v.dim())?;
    let e = diagonal_energies(h0, tol)?;
    let n = e.len();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, dim: n });
    }
    let vm = |p: usize, q: usize| v.entry(p, q);
    let w = |p: usize, q: usize| e[p] - e[q];

    let mut total = Complex::new(1.0, 0.0);
    if order >= 1 {
        total += Complex::new(0.0, -t) * vm(i, i);
    }
    if order >= 2 {
        let mut s = Complex::new(0.0, 0.0);
        for m in 0..n {
            s += vm(i, m) * vm(m, i) * nested_phase_integral(&[w(i, m), w(m, i)], t);
        }
        total -= s;
    }
    if order >= 3 {
        let mut s = Complex::new(0.0, 0.0);
        for m in 0..n {
            for k in 0..n {
                s += f_mn(w(i, m), w(m, k), w(k, i), t) * vm(i, m) * vm(m, k) * vm(k, i);
            }
        }
        total += Complex::new(0.0, 1.0) * s;
    }
    Ok(total)
}

/// `<i|e^{i H0 t} e^{-i (H0 + V) t}|i>` by exact exponentiation.
pub fn exact_survival_amplitude(h0: &Observable, v: &Observable, i: usize, t: f64) -> Result<Complex> {
    ensure_dim(h0.dim(), v.dim())?;
    if i >= h0.dim() {
        return Err(Error::IndexOutOfRange {
            index: i,
            dim: h0.dim(),
        });
    }
    let full = Observable::new(h0.matrix() + v.matrix())?;
    let u = evolve(&full, t)?;
    let back = evolve(h0, -t)?;
    let ket = StateVector::basis(h0.dim(), i)?;
    back.compose(&u)?.element(&ket, &ket)
}
