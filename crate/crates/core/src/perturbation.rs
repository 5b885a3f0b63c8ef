//! Nondegenerate stationary perturbation theory for `H0 + lambda V` through
//! third order in the energy and second order in the state (intermediate
//! normalisation, `<n0|n> = 1`).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::check_orthonormal;
use crate::error::{Error, Result};
use crate::hilbert::{ensure_dim, wrap_angle, Complex, Observable, StateVector, Tolerances};
use crate::json::fmt_f64;

pub const DEFAULT_GAP_TOL: f64 = 1e-8;
const ORTHONORMAL_TOL: f64 = 1e-10;

/// Unperturbed spectrum, ascending, with its orthonormal eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    energies: Vec<f64>,
    basis: Vec<StateVector>,
}

impl EigenSystem {
    pub fn new(energies: Vec<f64>, basis: Vec<StateVector>, gap_tol: f64) -> Result<Self> {
        if energies.len() != basis.len() {
            return Err(Error::LengthMismatch {
                expected: energies.len(),
                found: basis.len(),
            });
        }
        if energies.is_empty() {
            return Err(Error::invalid("energies", "must not be empty"));
        }
        if let Some(index) = energies.iter().position(|e| !e.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        for b in &basis {
            ensure_dim(basis.len(), b.dim())?;
        }
        check_orthonormal(&basis, ORTHONORMAL_TOL)?;
        let mut order: Vec<usize> = (0..energies.len()).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
        let energies: Vec<f64> = order.iter().map(|&i| energies[i]).collect();
        let basis: Vec<StateVector> = order.iter().map(|&i| basis[i].clone()).collect();
        for i in 1..energies.len() {
            let gap = energies[i] - energies[i - 1];
            if gap <= gap_tol {
                return Err(Error::DegenerateSpectrum {
                    first: i - 1,
                    second: i,
                    gap,
                });
            }
        }
        Ok(EigenSystem { energies, basis })
    }

    /// Computational basis with the given diagonal energies, sorted ascending.
    pub fn from_diagonal(energies: &[f64]) -> Result<Self> {
        let n = energies.len();
        let basis = (0..n).map(|i| StateVector::basis(n, i)).collect::<Result<_>>()?;
        EigenSystem::new(energies.to_vec(), basis, DEFAULT_GAP_TOL)
    }

    /// Eigendecomposition of a Hermitian `H0`.
    pub fn from_hamiltonian(h0: &Observable) -> Result<Self> {
        let eig = h0.matrix().clone().symmetric_eigen();
        let energies = eig.eigenvalues.iter().copied().collect();
        let basis = eig
            .eigenvectors
            .column_iter()
            .map(|c| StateVector::from_vector(c.into_owned()))
            .collect::<Result<_>>()?;
        EigenSystem::new(energies, basis, DEFAULT_GAP_TOL)
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn basis(&self) -> &[StateVector] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `V_mn = <m0|V|n0>`.
    pub fn matrix_elements(&self, v: &Observable) -> Result<DMatrix<Complex>> {
        ensure_dim(self.dim(), v.dim())?;
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        for j in 0..n {
            let vj = v.apply(&self.basis[j])?;
            for i in 0..n {
                out[(i, j)] = self.basis[i].as_vector().dotc(&vj);
            }
        }
        Ok(out)
    }

    fn check_level(&self, n: usize) -> Result<()> {
        if n >= self.dim() {
            return Err(Error::IndexOutOfRange {
                index: n,
                dim: self.dim(),
            });
        }
        Ok(())
    }
}

/// `Delta(lambda) = lambda order1 + lambda^2 order2 + lambda^3 order3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftSeries {
    pub order1: f64,
    pub order2: f64,
    pub order3: f64,
    pub lambda: f64,
    /// Largest |Im| discarded from the three orders.
    pub imag_residue: f64,
}

impl ShiftSeries {
    pub fn total(&self) -> f64 {
        let l = self.lambda;
        l * self.order1 + l * l * self.order2 + l * l * l * self.order3
    }
}

/// The double sum of the third-order shift, kept complex.
fn third_order_double_sum(e: &[f64], vm: &DMatrix<Complex>, n: usize) -> Complex {
    let mut s = Complex::new(0.0, 0.0);
    for k in (0..e.len()).filter(|&k| k != n) {
        for l in (0..e.len()).filter(|&l| l != n) {
            s += vm[(n, k)] * vm[(k, l)] * vm[(l, n)] / ((e[n] - e[k]) * (e[n] - e[l]));
        }
    }
    s
}

pub fn energy_shift(sys: &EigenSystem, v: &Observable, n: usize, lambda: f64) -> Result<ShiftSeries> {
    sys.check_level(n)?;
    let vm = sys.matrix_elements(v)?;
    let e = sys.energies();
    let order1 = vm[(n, n)];
    let mut order2 = Complex::new(0.0, 0.0);
    let mut counter = Complex::new(0.0, 0.0);
    for k in (0..e.len()).filter(|&k| k != n) {
        let d = e[n] - e[k];
        order2 += vm[(n, k)] * vm[(k, n)] / d;
        counter += vm[(n, k)] * vm[(k, n)] * vm[(n, n)] / (d * d);
    }
    let order3 = third_order_double_sum(e, &vm, n) - counter;
    Ok(ShiftSeries {
        order1: order1.re,
        order2: order2.re,
        order3: order3.re,
        lambda,
        imag_residue: order1.im.abs().max(order2.im.abs()).max(order3.im.abs()),
    })
}

/// `|n0> + lambda |n1> + lambda^2 |n2>`, unnormalised.
pub fn perturbed_state(sys: &EigenSystem, v: &Observable, n: usize, lambda: f64) -> Result<StateVector> {
    sys.check_level(n)?;
    let vm = sys.matrix_elements(v)?;
    let e = sys.energies();
    let dim = sys.dim();
    let mut coeffs = DVector::<Complex>::zeros(dim);
    coeffs[n] = Complex::new(1.0, 0.0);
    for k in (0..dim).filter(|&k| k != n) {
        let dk = e[n] - e[k];
        let mut second = -vm[(k, n)] * vm[(n, n)] / (dk * dk);
        for l in (0..dim).filter(|&l| l != n) {
            second += vm[(k, l)] * vm[(l, n)] / (dk * (e[n] - e[l]));
        }
        coeffs[k] = vm[(k, n)] / dk * lambda + second * (lambda * lambda);
    }
    let mut out = DVector::<Complex>::zeros(dim);
    for (k, c) in coeffs.iter().enumerate() {
        out += sys.basis()[k].as_vector() * *c;
    }
    StateVector::from_vector(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseTermRow {
    pub k: usize,
    pub l: usize,
    /// |V_nk V_kl V_ln|
    pub modulus: f64,
    /// wrap(Arg V_nk + Arg V_kl + Arg V_ln)
    pub gamma_v: f64,
    /// (E_n - E_k)(E_n - E_l)
    pub energy_denominator: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTermTable {
    pub level: usize,
    pub rows: Vec<PhaseTermRow>,
}

impl PhaseTermTable {
    /// `sum modulus cos(gamma_v) / denominator`, the double-sum part of order 3.
    pub fn reconstruct(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.modulus * r.gamma_v.cos() / r.energy_denominator)
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,l,modulus,gamma_v,energy_denominator\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.k,
                r.l,
                fmt_f64(r.modulus),
                fmt_f64(r.gamma_v),
                fmt_f64(r.energy_denominator)
            ));
        }
        out
    }
}

/// Modulus and phase of every triple `V_nk V_kl V_ln` with `k, l != n`.
pub fn third_order_phase_terms(
    sys: &EigenSystem,
    v: &Observable,
    n: usize,
    tol: &Tolerances,
) -> Result<PhaseTermTable> {
    sys.check_level(n)?;
    let vm = sys.matrix_elements(v)?;
    let e = sys.energies();
    let mut rows = Vec::new();
    for k in (0..e.len()).filter(|&k| k != n) {
        for l in (0..e.len()).filter(|&l| l != n) {
            let (a, b, c) = (vm[(n, k)], vm[(k, l)], vm[(l, n)]);
            let modulus = a.norm() * b.norm() * c.norm();
            if modulus <= tol.zero {
                continue;
            }
            rows.push(PhaseTermRow {
                k,
                l,
                modulus,
                gamma_v: wrap_angle(a.arg() + b.arg() + c.arg()),
                energy_denominator: (e[n] - e[k]) * (e[n] - e[l]),
            });
        }
    }
    Ok(PhaseTermTable { level: n, rows })
}
