//! Discrete geometric phases of cyclic chains of states.
//!
//! For states psi_1..psi_N and a Hermitian O the chain phase is
//! `Arg prod_l <psi_l|O|psi_{l+1}> / prod_l <psi_l|psi_l>` with indices
//! taken mod N. The denominator is real and positive, so the value is
//! accumulated as a sum of link arguments and wrapped once at the end.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    ensure_dim, matrix_element, relative_phase, weak_value, wrap_angle, Complex, DensityMatrix, Observable,
    StateVector, Tolerances,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseResult {
    /// Phase in (-pi, pi].
    pub value: f64,
    /// Smallest amplitude modulus the phase depended on.
    pub min_link_modulus: f64,
    /// Number of states (or curve samples).
    pub chain_length: usize,
    /// Curve endpoints whose connection was replaced by a one-sided limit
    /// because `<psi|O|psi>` vanished there.
    #[serde(default)]
    pub extrapolated_endpoints: usize,
}

fn check_chain(states: &[StateVector], o: &Observable) -> Result<()> {
    if states.len() < 3 {
        return Err(Error::invalid(
            "states",
            format!("a chain needs at least 3 states, got {}", states.len()),
        ));
    }
    for s in states {
        ensure_dim(o.dim(), s.dim())?;
    }
    Ok(())
}

/// Cyclic links `<psi_l|O|psi_{l+1 mod N}>`.
pub fn chain_links(states: &[StateVector], o: &Observable) -> Result<Vec<Complex>> {
    check_chain(states, o)?;
    let n = states.len();
    (0..n)
        .map(|l| matrix_element(&states[l], o, &states[(l + 1) % n]))
        .collect()
}

/// Generalised (O) geometric phase of a cyclic chain of N >= 3 states.
pub fn generalized_phase_chain(states: &[StateVector], o: &Observable, tol: &Tolerances) -> Result<PhaseResult> {
    let links = chain_links(states, o)?;
    let mut sum = 0.0;
    let mut min_link_modulus = f64::INFINITY;
    for (link, z) in links.iter().enumerate() {
        let modulus = z.norm();
        if modulus <= tol.zero {
            return Err(Error::UndefinedPhase { link, modulus });
        }
        min_link_modulus = min_link_modulus.min(modulus);
        sum += z.arg();
    }
    Ok(PhaseResult {
        value: wrap_angle(sum),
        min_link_modulus,
        chain_length: states.len(),
        extrapolated_endpoints: 0,
    })
}

/// The full complex ratio `prod links / prod norms`, whose argument equals
/// the chain phase. Subject to under/overflow for long chains.
pub fn chain_product(states: &[StateVector], o: &Observable) -> Result<Complex> {
    let links = chain_links(states, o)?;
    let num = links.iter().fold(Complex::new(1.0, 0.0), |acc, z| acc * z);
    let den: f64 = states.iter().map(StateVector::norm_sq).product();
    Ok(num / den)
}

/// Pancharatnam's excess phase from bare inner products `<psi_l|psi_{l+1}>`.
pub fn pancharatnam_phase(states: &[StateVector], tol: &Tolerances) -> Result<PhaseResult> {
    if states.len() < 3 {
        return Err(Error::invalid(
            "states",
            format!("a chain needs at least 3 states, got {}", states.len()),
        ));
    }
    let n = states.len();
    let mut sum = 0.0;
    let mut min_link_modulus = f64::INFINITY;
    for link in 0..n {
        let z = states[link].inner(&states[(link + 1) % n])?;
        let modulus = z.norm();
        if modulus <= tol.zero {
            return Err(Error::UndefinedPhase { link, modulus });
        }
        min_link_modulus = min_link_modulus.min(modulus);
        sum += z.arg();
    }
    Ok(PhaseResult {
        value: wrap_angle(sum),
        min_link_modulus,
        chain_length: n,
        extrapolated_endpoints: 0,
    })
}

fn as_triple(states: &[StateVector]) -> Result<&[StateVector; 3]> {
    states
        .try_into()
        .map_err(|_| Error::invalid("states", format!("expected exactly 3 states, got {}", states.len())))
}

/// `Arg Tr(rho_1 O rho_2 O rho_3 O)` built from explicit projectors.
pub fn bargmann_density_phase(states: &[StateVector], o: &Observable, tol: &Tolerances) -> Result<PhaseResult> {
    let [a, b, c] = as_triple(states)?;
    check_chain(states, o)?;
    let op = o.matrix();
    let product = DensityMatrix::from_state(a).matrix()
        * op
        * DensityMatrix::from_state(b).matrix()
        * op
        * DensityMatrix::from_state(c).matrix()
        * op;
    let trace = product.trace();
    let modulus = trace.norm();
    if modulus <= tol.zero {
        return Err(Error::UndefinedPhase { link: 0, modulus });
    }
    Ok(PhaseResult {
        value: wrap_angle(trace.arg()),
        min_link_modulus: modulus,
        chain_length: 3,
        extrapolated_endpoints: 0,
    })
}

/// The O phase of a triple rebuilt from weak values and the plain
/// Pancharatnam phase. Requires all three states to be mutually
/// non-orthogonal.
pub fn phase_via_weak_values(states: &[StateVector], o: &Observable, tol: &Tolerances) -> Result<f64> {
    let triple = as_triple(states)?;
    check_chain(states, o)?;
    let mut product = Complex::new(1.0, 0.0);
    for first in 0..3 {
        let second = (first + 1) % 3;
        let (a, b) = (&triple[first], &triple[second]);
        let modulus = a.inner(b)?.norm();
        if modulus <= tol.zero {
            return Err(Error::IdentityNotApplicable { first, second, modulus });
        }
        let link = matrix_element(a, o, b)?.norm();
        if link <= tol.zero {
            return Err(Error::UndefinedPhase {
                link: first,
                modulus: link,
            });
        }
        product *= weak_value(a, o, b, tol)?;
    }
    let plain = pancharatnam_phase(states, tol)?.value;
    Ok(wrap_angle(product.arg() + plain))
}

/// Whether `<a|O|b>` is real and positive to within `tol.phase`.
pub fn in_phase(a: &StateVector, b: &StateVector, o: &Observable, tol: &Tolerances) -> Result<bool> {
    Ok(relative_phase(a, b, o, tol)?.abs() <= tol.phase)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::angle_distance;
    use crate::random;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn qubit(theta: f64, phi: f64) -> StateVector {
        StateVector::new(vec![
            Complex::new((theta / 2.0).cos(), 0.0),
            Complex::from_polar((theta / 2.0).sin(), phi),
        ])
        .unwrap()
    }

    fn ket(i: usize) -> StateVector {
        StateVector::basis(2, i).unwrap()
    }

    #[test]
    fn trivial_chain_is_zero() {
        let tol = Tolerances::default();
        let s = vec![ket(0); 3];
        let r = generalized_phase_chain(&s, &Observable::identity(2), &tol).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.chain_length, 3);
        assert_eq!(r.min_link_modulus, 1.0);
    }

    #[test]
    fn swap_x_examples() {
        let tol = Tolerances::default();
        let x = Observable::pauli_x();
        let s = [ket(0), qubit(PI / 2.0, PI / 3.0), ket(1)];
        let r = generalized_phase_chain(&s, &x, &tol).unwrap();
        assert!(angle_distance(r.value, PI / 3.0) < 1e-12);

        let s = [ket(0), qubit(3.0 * PI / 2.0, PI / 5.0), ket(1)];
        let r = generalized_phase_chain(&s, &x, &tol).unwrap();
        assert!(angle_distance(r.value, wrap_angle(PI + PI / 5.0)) < 1e-12);
    }

    #[test]
    fn vanishing_link_is_named() {
        let tol = Tolerances::default();
        let s = [ket(0), ket(0), ket(1)];
        match generalized_phase_chain(&s, &Observable::identity(2), &tol) {
            Err(Error::UndefinedPhase { link, .. }) => assert_eq!(link, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn short_chains_are_rejected() {
        let tol = Tolerances::default();
        assert!(generalized_phase_chain(&[ket(0), ket(0)], &Observable::identity(2), &tol).is_err());
    }

    #[test]
    fn sum_of_args_matches_arg_of_product() {
        let tol = Tolerances::default();
        let mut rng = random::rng(3);
        for _ in 0..50 {
            let o = random::hermitian(&mut rng, 4);
            let states: Vec<_> = (0..6).map(|_| random::state(&mut rng, 4)).collect();
            let by_sum = generalized_phase_chain(&states, &o, &tol).unwrap().value;
            let by_product = chain_product(&states, &o).unwrap().arg();
            assert!(angle_distance(by_sum, by_product) < 1e-12);
        }
    }

    #[test]
    fn density_route_matches_chain() {
        let tol = Tolerances::default();
        let s = vec![ket(0); 3];
        assert_eq!(
            bargmann_density_phase(&s, &Observable::identity(2), &tol)
                .unwrap()
                .value,
            0.0
        );

        let s = [ket(0), qubit(PI / 2.0, PI / 3.0), ket(1)];
        let r = bargmann_density_phase(&s, &Observable::pauli_x(), &tol).unwrap();
        assert!(angle_distance(r.value, PI / 3.0) < 1e-12);

        let mut rng = random::rng(7);
        let o = random::hermitian(&mut rng, 3);
        let s: Vec<_> = (0..3).map(|_| random::state(&mut rng, 3)).collect();
        let a = bargmann_density_phase(&s, &o, &tol).unwrap().value;
        let b = generalized_phase_chain(&s, &o, &tol).unwrap().value;
        assert!(angle_distance(a, b) < tol.phase);
    }

    #[test]
    fn weak_value_route() {
        let tol = Tolerances::default();
        let mut rng = random::rng(11);
        let s: Vec<_> = (0..3).map(|_| random::state(&mut rng, 3)).collect();

        let id = Observable::identity(3);
        let plain = pancharatnam_phase(&s, &tol).unwrap().value;
        assert!(angle_distance(phase_via_weak_values(&s, &id, &tol).unwrap(), plain) < 1e-12);

        let o = random::hermitian(&mut rng, 3);
        let via = phase_via_weak_values(&s, &o, &tol).unwrap();
        let direct = generalized_phase_chain(&s, &o, &tol).unwrap().value;
        assert!(angle_distance(via, direct) < tol.phase);

        let orth = [ket(0), qubit(PI / 2.0, PI / 3.0), ket(1)];
        assert!(matches!(
            phase_via_weak_values(&orth, &Observable::pauli_x(), &tol),
            Err(Error::IdentityNotApplicable {
                first: 2,
                second: 0,
                ..
            })
        ));
    }

    #[test]
    fn in_phase_examples() {
        let tol = Tolerances::default();
        let id = Observable::identity(2);
        let plus = StateVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert!(in_phase(&ket(0), &plus, &id, &tol).unwrap());
        assert!(!in_phase(&ket(0), &ket(0).phased(PI / 4.0), &id, &tol).unwrap());
        assert!(in_phase(&ket(0), &ket(1), &Observable::pauli_x(), &tol).unwrap());
    }

    #[test]
    fn in_phase_is_not_transitive() {
        let tol = Tolerances::default();
        let b = StateVector::from_real(&[1.0, 1.0]).unwrap();
        let c = StateVector::new(vec![Complex::new(0.0, 1.0), Complex::new(1.0, -1.0)]).unwrap();

        let id = Observable::identity(2);
        let a = ket(0);
        assert!(in_phase(&a, &b, &id, &tol).unwrap());
        assert!(in_phase(&b, &c, &id, &tol).unwrap());
        assert!(!in_phase(&a, &c, &id, &tol).unwrap());

        let x = Observable::pauli_x();
        let a = ket(1);
        assert!(in_phase(&a, &b, &x, &tol).unwrap());
        assert!(in_phase(&b, &c, &x, &tol).unwrap());
        assert!(!in_phase(&a, &c, &x, &tol).unwrap());
    }

    #[test]
    fn plain_and_operator_phases_are_independent() {
        let tol = Tolerances::default();
        let s = [
            StateVector::from_real(&[1.0, 0.0]).unwrap(),
            qubit(PI / 3.0, 0.4),
            qubit(2.0 * PI / 3.0, -1.1),
        ];
        let plain = pancharatnam_phase(&s, &tol).unwrap().value;
        let id = generalized_phase_chain(&s, &Observable::identity(2), &tol)
            .unwrap()
            .value;
        let x = generalized_phase_chain(&s, &Observable::pauli_x(), &tol).unwrap().value;
        let z = generalized_phase_chain(&s, &Observable::diagonal(&[1.0, -1.0]).unwrap(), &tol)
            .unwrap()
            .value;
        assert_eq!(plain, id);
        assert!(angle_distance(x, z) > 0.1);
    }
}
