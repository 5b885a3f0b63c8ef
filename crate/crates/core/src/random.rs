//! Seeded generators for test systems. All draws go through ChaCha8 so a
//! seed fixes every number on every platform.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hilbert::{Complex, Observable, StateVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_complex<R: Rng>(rng: &mut R) -> Complex {
    Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Unnormalised state with components uniform in the unit square.
pub fn state<R: Rng>(rng: &mut R, dim: usize) -> StateVector {
    loop {
        let v: Vec<Complex> = (0..dim).map(|_| uniform_complex(rng)).collect();
        if let Ok(s) = StateVector::new(v) {
            if s.norm_sq() > 1e-6 {
                return s;
            }
        }
    }
}

pub fn unit_state<R: Rng>(rng: &mut R, dim: usize) -> StateVector {
    state(rng, dim).normalized()
}

/// (M + M^dagger)/2 with M entries uniform in the unit square.
pub fn hermitian<R: Rng>(rng: &mut R, dim: usize) -> Observable {
    let m = DMatrix::from_fn(dim, dim, |_, _| uniform_complex(rng));
    let h = (&m + m.adjoint()) * Complex::new(0.5, 0.0);
    Observable::new(h).expect("symmetrised matrix is Hermitian")
}

/// M^dagger M + shift * 1, positive definite with smallest eigenvalue >= shift.
pub fn positive_definite<R: Rng>(rng: &mut R, dim: usize, shift: f64) -> Observable {
    let m = DMatrix::from_fn(dim, dim, |_, _| uniform_complex(rng));
    let mut h = m.adjoint() * &m;
    for i in 0..dim {
        h[(i, i)] += Complex::new(shift, 0.0);
    }
    // exact symmetrisation so rounding never trips the Hermiticity check
    let h = (&h + h.adjoint()) * Complex::new(0.5, 0.0);
    Observable::new(h).expect("Gram matrix is Hermitian")
}

pub fn phase_offsets<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect()
}
