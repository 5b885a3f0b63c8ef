//! Forward scattering in two settings.
//!
//! * [`GridModel`]: a finite momentum basis where `G0 = (E_i - H0 + i eps)^-1`
//!   is diagonal, the Lippmann-Schwinger equation is a dense linear solve and
//!   every Born term is a literal finite sum.
//! * [`SeparableModel`]: the rank-1 potential `V = lambda |chi><chi|` with
//!   `chi(p) = 1/(p^2 + beta^2)` in three dimensions, whose on-shell
//!   forward amplitude `f = -4 pi^2 m lambda chi(k)^2 / (1 - lambda I)` is
//!   exact once the loop integral `I = <chi|G0(E_k + i0)|chi>` is known.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{wrap_angle, Complex, Observable, StateVector, Tolerances};
use crate::json::fmt_f64;

/// Condition numbers above this make the Lippmann-Schwinger kernel singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumState {
    pub label: String,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridModel {
    momenta: Vec<MomentumState>,
    mass: f64,
    epsilon: f64,
    v: Observable,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    momenta: Vec<MomentumState>,
    mass: f64,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    #[serde(rename = "V")]
    v: Observable,
}

fn default_epsilon() -> f64 {
    1e-6
}

impl TryFrom<RawGrid> for GridModel {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        GridModel::new(raw.momenta, raw.mass, raw.epsilon, raw.v)
    }
}

impl From<GridModel> for RawGrid {
    fn from(g: GridModel) -> Self {
        RawGrid {
            momenta: g.momenta,
            mass: g.mass,
            epsilon: g.epsilon,
            v: g.v,
        }
    }
}

impl GridModel {
    pub fn new(momenta: Vec<MomentumState>, mass: f64, epsilon: f64, v: Observable) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::invalid("mass", format!("must be positive, got {mass}")));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid("epsilon", format!("must be positive, got {epsilon}")));
        }
        if let Some(index) = momenta.iter().position(|p| !p.energy.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if v.dim() != momenta.len() {
            return Err(Error::DimensionMismatch {
                expected: momenta.len(),
                found: v.dim(),
            });
        }
        Ok(GridModel {
            momenta,
            mass,
            epsilon,
            v,
        })
    }

    /// One-dimensional momenta `p` with kinetic energies `p^2 / 2m`.
    pub fn from_momenta(momenta: &[f64], mass: f64, epsilon: f64, v: Observable) -> Result<Self> {
        let states = momenta
            .iter()
            .map(|&p| MomentumState {
                label: format!("p={}", fmt_f64(p)),
                energy: p * p / (2.0 * mass),
            })
            .collect();
        GridModel::new(states, mass, epsilon, v)
    }

    pub fn momenta(&self) -> &[MomentumState] {
        &self.momenta
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn potential(&self) -> &Observable {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.momenta.len()
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.dim() {
            return Err(Error::IndexOutOfRange {
                index: i,
                dim: self.dim(),
            });
        }
        Ok(())
    }

    /// Diagonal of `(E_i - H0 + i eps)^-1`.
    pub fn greens_diagonal(&self, i: usize) -> Result<DVector<Complex>> {
        self.check_index(i)?;
        let e = self.momenta[i].energy;
        Ok(DVector::from_iterator(
            self.dim(),
            self.momenta
                .iter()
                .map(|p| Complex::new(1.0, 0.0) / Complex::new(e - p.energy, self.epsilon)),
        ))
    }

    /// `G0 V` as a dense matrix.
    pub fn kernel(&self, i: usize) -> Result<DMatrix<Complex>> {
        let g = self.greens_diagonal(i)?;
        let mut k = self.v.matrix().clone();
        for (r, mut row) in k.row_iter_mut().enumerate() {
            row *= g[r];
        }
        Ok(k)
    }
}

fn max_abs_vec(v: &DVector<Complex>) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spectral radius from the complex Schur form, or Gelfand's
/// `||K^k||^{1/k}` at `k = 64` if the iteration does not converge.
pub fn spectral_radius(k: &DMatrix<Complex>) -> f64 {
    if let Some(eigs) = k.clone().try_schur(1e-14, 10_000).and_then(|s| s.eigenvalues()) {
        return eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    let mut power = k.clone();
    let mut log_scale = 0.0;
    for _ in 0..6 {
        let n = power.norm();
        if n == 0.0 {
            return 0.0;
        }
        power /= Complex::new(n, 0.0);
        log_scale = 2.0 * (log_scale + n.ln());
        power = &power * &power;
    }
    ((log_scale + power.norm().ln()) / 64.0).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSolution {
    /// `|psi+>`
    pub state: StateVector,
    /// 2-norm condition number of `1 - G0 V`.
    pub condition: f64,
    /// max |psi+ - i - G0 V psi+|
    pub residual: f64,
    /// Spectral radius of `G0 V`; the Born series converges iff it is < 1.
    pub spectral_radius: f64,
    /// `<i|V|psi+>`
    #[serde(with = "crate::json::complex")]
    pub t_element: Complex,
    /// `-4 pi^2 m <i|V|psi+>`
    #[serde(with = "crate::json::complex")]
    pub forward_amplitude: Complex,
}

/// Solves `(1 - G0 V)|psi+> = |i>` by LU.
pub fn lippmann_schwinger_solve(model: &GridModel, i: usize) -> Result<ScatteringSolution> {
    let n = model.dim();
    let kernel = model.kernel(i)?;
    let a = DMatrix::<Complex>::identity(n, n) - &kernel;
    if a.iter().any(|z| !z.is_finite()) {
        return Err(Error::SingularKernel {
            condition: f64::INFINITY,
        });
    }
    let sv = a.clone().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition.is_nan() || condition > MAX_CONDITION {
        return Err(Error::SingularKernel { condition });
    }
    let ket = StateVector::basis(n, i)?;
    let psi = a
        .lu()
        .solve(ket.as_vector())
        .ok_or(Error::SingularKernel { condition })?;
    let residual = max_abs_vec(&(&psi - ket.as_vector() - &kernel * &psi));
    let t_element = model.v.matrix().row(i).transpose().dot(&psi);
    Ok(ScatteringSolution {
        state: StateVector::from_vector(psi)?,
        condition,
        residual,
        spectral_radius: spectral_radius(&kernel),
        t_element,
        forward_amplitude: t_element * (-4.0 * PI * PI * model.mass),
    })
}

/// Terms of `<i|V|psi+>` through third order in `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BornReport {
    /// `<i|V|i>`
    #[serde(with = "crate::json::complex")]
    pub term0: Complex,
    /// `<i|V G0 V|i>`, the single sum over `p`.
    #[serde(with = "crate::json::complex")]
    pub term1: Complex,
    /// `<i|V G0 V G0 V|i>`, the double sum over `(p, q)`.
    #[serde(with = "crate::json::complex")]
    pub term2: Complex,
    #[serde(with = "crate::json::complex")]
    pub total: Complex,
    /// `-4 pi^2 m total`
    #[serde(with = "crate::json::complex")]
    pub forward_amplitude: Complex,
}

/// Operator-form Born terms built from `G0 V` applied to `V|i>`.
pub fn born_forward_amplitude(model: &GridModel, i: usize) -> Result<BornReport> {
    let kernel = model.kernel(i)?;
    let g = model.greens_diagonal(i)?;
    let v = model.v.matrix();
    let first = g.component_mul(&v.column(i));
    let second = &kernel * &first;
    let bra = v.row(i).transpose();
    let term0 = v[(i, i)];
    let term1 = bra.dot(&first);
    let term2 = bra.dot(&second);
    let total = term0 + term1 + term2;
    Ok(BornReport {
        term0,
        term1,
        term2,
        total,
        forward_amplitude: total * (-4.0 * PI * PI * model.mass),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BornSeriesReport {
    pub spectral_radius: f64,
    pub convergent: bool,
    /// max |partial sum - psi+| after each added order, starting at order 0.
    pub partial_errors: Vec<f64>,
}

/// Partial sums `sum_{j<=k} (G0 V)^j |i>` against the exact solve.
pub fn born_series(model: &GridModel, i: usize, orders: usize) -> Result<BornSeriesReport> {
    let exact = lippmann_schwinger_solve(model, i)?;
    let kernel = model.kernel(i)?;
    let mut term = StateVector::basis(model.dim(), i)?.into_vector();
    let mut partial = term.clone();
    let mut partial_errors = Vec::with_capacity(orders + 1);
    partial_errors.push(max_abs_vec(&(&partial - exact.state.as_vector())));
    for _ in 0..orders {
        term = &kernel * term;
        partial += &term;
        partial_errors.push(max_abs_vec(&(&partial - exact.state.as_vector())));
    }
    Ok(BornSeriesReport {
        spectral_radius: exact.spectral_radius,
        convergent: exact.spectral_radius < 1.0,
        partial_errors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleProductRow {
    pub p: usize,
    pub q: usize,
    /// |V_ip V_pq V_qi|
    pub modulus: f64,
    /// wrap(Arg V_ip + Arg V_pq + Arg V_qi)
    pub gamma_v: f64,
    /// (E_i - E_p + i eps)(E_i - E_q + i eps)
    #[serde(with = "crate::json::complex")]
    pub denominator: Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleProductTable {
    pub incoming: usize,
    pub rows: Vec<TripleProductRow>,
}

impl TripleProductTable {
    /// `sum modulus e^{i gamma_v} / denominator`, the third-order Born term.
    pub fn reconstruct(&self) -> Complex {
        self.rows
            .iter()
            .map(|r| Complex::from_polar(r.modulus, r.gamma_v) / r.denominator)
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,q,modulus,gamma_v,denominator_re,denominator_im\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.p,
                r.q,
                fmt_f64(r.modulus),
                fmt_f64(r.gamma_v),
                fmt_f64(r.denominator.re),
                fmt_f64(r.denominator.im)
            ));
        }
        out
    }
}

/// Rows of the third-order Born double sum over intermediate momenta.
pub fn triple_product_phases(model: &GridModel, i: usize) -> Result<TripleProductTable> {
    model.check_index(i)?;
    let v = model.v.matrix();
    let e = |p: usize| model.momenta[p].energy;
    let mut rows = Vec::new();
    for p in 0..model.dim() {
        for q in 0..model.dim() {
            let (a, b, c) = (v[(i, p)], v[(p, q)], v[(q, i)]);
            let modulus = a.norm() * b.norm() * c.norm();
            // denominators reach eps^2, so only exact zeros may be dropped
            if modulus == 0.0 {
                continue;
            }
            rows.push(TripleProductRow {
                p,
                q,
                modulus,
                gamma_v: wrap_angle(a.arg() + b.arg() + c.arg()),
                denominator: Complex::new(e(i) - e(p), model.epsilon) * Complex::new(e(i) - e(q), model.epsilon),
            });
        }
    }
    Ok(TripleProductTable { incoming: i, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparableModel {
    pub coupling: f64,
    pub beta: f64,
    pub mass: f64,
}

const ROMBERG_TOL: f64 = 1e-13;
const ROMBERG_MAX_LEVEL: usize = 22;

impl SeparableModel {
    pub fn new(coupling: f64, beta: f64, mass: f64) -> Result<Self> {
        if !coupling.is_finite() {
            return Err(Error::invalid("coupling", "must be finite"));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid("beta", format!("must be positive, got {beta}")));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::invalid("mass", format!("must be positive, got {mass}")));
        }
        Ok(SeparableModel { coupling, beta, mass })
    }

    pub fn with_coupling(&self, coupling: f64) -> Self {
        SeparableModel { coupling, ..*self }
    }

    pub fn form_factor(&self, p: f64) -> f64 {
        1.0 / (p * p + self.beta * self.beta)
    }

    fn g(&self, p: f64) -> f64 {
        let c = self.form_factor(p);
        p * p * c * c
    }

    fn dg(&self, p: f64) -> f64 {
        let b2 = self.beta * self.beta;
        2.0 * p * (b2 - p * p) / (p * p + b2).powi(3)
    }

    /// `(g(p) - g(k)) / (k^2 - p^2)` with its limit `-g'(k) / 2k` at `p = k`.
    fn subtracted(&self, p: f64, k: f64) -> f64 {
        if (p - k).abs() <= 1e-7 * k {
            -self.dg(k) / (2.0 * k)
        } else {
            (self.g(p) - self.g(k)) / (k * k - p * p)
        }
    }

    fn check_momentum(k: f64) -> Result<()> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::invalid("k", format!("must be positive, got {k}")));
        }
        Ok(())
    }

    /// `I(E_k) = int d^3p chi(p)^2 / (E_k - p^2/2m + i0)`.
    ///
    /// The imaginary part is the on-shell term `-4 pi^2 m k chi(k)^2`. The real
    /// part is `8 pi m PV int_0^inf g(p) / (k^2 - p^2) dp` with
    /// `g = p^2 chi^2`; subtracting `g(k)` removes the pole because the PV
    /// integral of `1 / (k^2 - p^2)` over the half line vanishes.
    pub fn loop_integral(&self, k: f64) -> Result<Complex> {
        Self::check_momentum(k)?;
        // p = c u / (1 - u); the integrand tends to g(k) / c at u = 1
        let c = self.beta;
        let gk = self.g(k);
        let integrand = |u: f64| {
            if u >= 1.0 {
                return gk / c;
            }
            let p = c * u / (1.0 - u);
            self.subtracted(p, k) * c / ((1.0 - u) * (1.0 - u))
        };
        let pv = romberg(integrand, 0.0, 1.0, ROMBERG_TOL, ROMBERG_MAX_LEVEL);
        let chi = self.form_factor(k);
        Ok(Complex::new(
            8.0 * PI * self.mass * pv,
            -4.0 * PI * PI * self.mass * k * chi * chi,
        ))
    }

    fn prefactor(&self, k: f64) -> f64 {
        let chi = self.form_factor(k);
        -4.0 * PI * PI * self.mass * chi * chi
    }
}

/// Romberg extrapolation of the trapezoid rule until successive diagonal
/// entries agree to `tol` (relative to the magnitude of the result).
pub fn romberg<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_level: usize) -> f64 {
    let mut prev_row = vec![0.5 * (b - a) * (f(a) + f(b))];
    let mut intervals = 1usize;
    for level in 1..=max_level {
        let h = (b - a) / (2 * intervals) as f64;
        let mut mid = 0.0;
        for j in 0..intervals {
            mid += f(a + (2 * j + 1) as f64 * h);
        }
        intervals *= 2;
        let mut row = Vec::with_capacity(level + 1);
        row.push(0.5 * prev_row[0] + h * mid);
        let mut factor = 1.0;
        for j in 1..=level {
            factor *= 4.0;
            row.push(row[j - 1] + (row[j - 1] - prev_row[j - 1]) / (factor - 1.0));
        }
        let (new, old) = (row[level], prev_row[level - 1]);
        if level >= 4 && (new - old).abs() <= tol * new.abs().max(1.0) {
            return new;
        }
        prev_row = row;
    }
    prev_row[max_level]
}

/// Exact on-shell forward amplitude `f(k, k)`.
pub fn separable_tmatrix(model: &SeparableModel, k: f64, tol: &Tolerances) -> Result<Complex> {
    let i = model.loop_integral(k)?;
    let denominator = Complex::new(1.0, 0.0) - i * model.coupling;
    if denominator.norm() <= tol.zero {
        return Err(Error::PoleAtEnergy {
            modulus: denominator.norm(),
        });
    }
    Ok(model.prefactor(k) * model.coupling / denominator)
}

/// Born approximation of `f(k, k)` through `order` powers of the coupling:
/// `-4 pi^2 m chi^2 sum_{j=1..order} lambda^j I^{j-1}`.
pub fn separable_born_amplitude(model: &SeparableModel, k: f64, order: usize) -> Result<Complex> {
    let i = model.loop_integral(k)?;
    let mut sum = Complex::new(0.0, 0.0);
    let mut term = Complex::new(model.coupling, 0.0);
    for _ in 0..order {
        sum += term;
        term *= i * model.coupling;
    }
    Ok(sum * model.prefactor(k))
}

/// `|Im f - k |f|^2|`; zero for an s-wave amplitude satisfying the optical
/// theorem with `sigma_T = 4 pi |f|^2`.
pub fn optical_residual(f: Complex, k: f64) -> f64 {
    (f.im - k * f.norm_sqr()).abs()
}

/// Optical-theorem residual of the exact separable amplitude.
pub fn optical_theorem_residual(model: &SeparableModel, k: f64, tol: &Tolerances) -> Result<f64> {
    Ok(optical_residual(separable_tmatrix(model, k, tol)?, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    fn grid(seed: u64, n: usize, scale: f64) -> GridModel {
        let mut rng = random::rng(seed);
        let v = random::hermitian(&mut rng, n);
        let v = Observable::new(v.matrix() * Complex::new(scale, 0.0)).unwrap();
        let momenta: Vec<f64> = (0..n).map(|j| 0.4 + 0.3 * j as f64).collect();
        GridModel::from_momenta(&momenta, 1.0, 0.05, v).unwrap()
    }

    #[test]
    fn free_scattering() {
        let model =
            GridModel::from_momenta(&[0.5, 1.0, 1.5], 1.0, 1e-6, Observable::diagonal(&[0.0; 3]).unwrap()).unwrap();
        let sol = lippmann_schwinger_solve(&model, 1).unwrap();
        assert_eq!(sol.state, StateVector::basis(3, 1).unwrap());
        let born = born_forward_amplitude(&model, 1).unwrap();
        assert_eq!(born.total, Complex::new(0.0, 0.0));
        let table = triple_product_phases(&model, 1).unwrap();
        assert!(table.rows.is_empty());
    }

    #[test]
    fn solve_defect_and_born_iterates() {
        let model = grid(8, 8, 0.3);
        let sol = lippmann_schwinger_solve(&model, 2).unwrap();
        assert!(sol.residual < 1e-12, "{}", sol.residual);

        let distance = |scale: f64| {
            let model = grid(8, 8, scale);
            let sol = lippmann_schwinger_solve(&model, 2).unwrap();
            let k = model.kernel(2).unwrap();
            let i = StateVector::basis(8, 2).unwrap().into_vector();
            let born = &i + &k * &i + &k * (&k * &i);
            (sol.state.as_vector() - born).norm()
        };
        let ratio = distance(0.01) / distance(0.005);
        assert!((7.5..8.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn born_series_reports_convergence() {
        let weak = born_series(&grid(8, 6, 0.01), 1, 12).unwrap();
        assert!(weak.convergent);
        assert!(weak.partial_errors.last().unwrap() < &1e-12);
        let strong = born_series(&grid(8, 6, 5.0), 1, 12).unwrap();
        assert!(!strong.convergent);
        assert!(strong.partial_errors[12] > strong.partial_errors[0]);
    }

    #[test]
    fn gelfand_estimate_agrees_with_schur() {
        let model = grid(4, 5, 0.2);
        let k = model.kernel(0).unwrap();
        let schur = spectral_radius(&k);
        let mut power = k.clone();
        for _ in 0..7 {
            power = &power * &power;
        }
        let gelfand = power.norm().powf(1.0 / 128.0);
        assert!((schur - gelfand).abs() < 0.1 * schur);
    }

    #[test]
    fn diagonal_potential_keeps_single_term() {
        let v = Observable::diagonal(&[0.2, -0.1, 0.4]).unwrap();
        let model = GridModel::from_momenta(&[0.5, 1.0, 1.5], 1.0, 1e-6, v).unwrap();
        let born = born_forward_amplitude(&model, 1).unwrap();
        // only p = i survives, with E_i - E_p = 0 regulated by i eps
        let expected = Complex::new(0.01, 0.0) / Complex::new(0.0, 1e-6);
        assert!((born.term1 - expected).norm() < 1e-12 * expected.norm());
    }

    #[test]
    fn born_terms_match_brute_force_sums() {
        let model = grid(4, 4, 0.3);
        let v = model.potential().matrix();
        let i = 0;
        let e: Vec<f64> = model.momenta().iter().map(|m| m.energy).collect();
        let d = |p: usize| Complex::new(e[i] - e[p], model.epsilon());
        let mut single = Complex::new(0.0, 0.0);
        let mut double = Complex::new(0.0, 0.0);
        for p in 0..4 {
            single += v[(i, p)] * v[(p, i)] / d(p);
            for q in 0..4 {
                double += v[(i, p)] * v[(p, q)] * v[(q, i)] / (d(p) * d(q));
            }
        }
        let born = born_forward_amplitude(&model, i).unwrap();
        assert!((born.term1 - single).norm() < 1e-12);
        assert!((born.term2 - double).norm() < 1e-12);
        let table = triple_product_phases(&model, i).unwrap();
        assert!((table.reconstruct() - born.term2).norm() < 1e-12);
    }

    #[test]
    fn triple_product_examples() {
        let one = Complex::new(1.0, 0.0);
        let w = Complex::from_polar(1.0, PI / 3.0);
        let v = Observable::from_rows(&[vec![one, one, one], vec![one, one, w], vec![one, w.conj(), one]]).unwrap();
        let model = GridModel::from_momenta(&[0.5, 1.0, 1.5], 1.0, 1e-3, v).unwrap();
        let table = triple_product_phases(&model, 0).unwrap();
        let find = |p, q| table.rows.iter().find(|r| (r.p, r.q) == (p, q)).unwrap().gamma_v;
        assert!((find(1, 2) - PI / 3.0).abs() < 1e-15);
        assert!((find(2, 1) + PI / 3.0).abs() < 1e-15);
        assert_eq!(find(1, 1), 0.0);
        assert!(table
            .to_csv()
            .starts_with("p,q,modulus,gamma_v,denominator_re,denominator_im\n0,0,"));
    }

    #[test]
    fn grid_model_validation() {
        let v = Observable::identity(2);
        assert!(GridModel::from_momenta(&[1.0, 2.0], 1.0, 0.0, v.clone()).is_err());
        assert!(GridModel::from_momenta(&[1.0, 2.0], -1.0, 0.1, v.clone()).is_err());
        assert!(matches!(
            GridModel::from_momenta(&[1.0], 1.0, 0.1, v.clone()),
            Err(Error::DimensionMismatch { .. })
        ));
        let model = GridModel::from_momenta(&[1.0, 2.0], 1.0, 0.1, v).unwrap();
        assert!(matches!(
            lippmann_schwinger_solve(&model, 2),
            Err(Error::IndexOutOfRange { .. })
        ));
        let text = serde_json::to_string(&model).unwrap();
        assert!(text.contains("\"V\":"));
        assert_eq!(serde_json::from_str::<GridModel>(&text).unwrap(), model);
    }

    #[test]
    fn singular_kernel_is_reported() {
        // E_0 - E_1 = -1.5, so V_11 = -1.5 makes row 1 of G0 V equal to 1
        let v = Observable::diagonal(&[0.0, -1.5]).unwrap();
        let model = GridModel::from_momenta(&[1.0, 2.0], 1.0, 1e-20, v).unwrap();
        assert!(matches!(
            lippmann_schwinger_solve(&model, 0),
            Err(Error::SingularKernel { .. })
        ));
    }

    fn contour_loop_integral(model: &SeparableModel, k: f64) -> Complex {
        let b = Complex::new(model.beta, -k);
        Complex::new(-2.0 * PI * PI * model.mass / model.beta, 0.0) / (b * b)
    }

    #[test]
    fn loop_integral_matches_contour_result() {
        for (beta, mass, k) in [(1.0, 1.0, 0.5), (0.7, 2.0, 1.3), (2.0, 0.5, 0.1), (1.0, 1.0, 1.0)] {
            let model = SeparableModel::new(0.1, beta, mass).unwrap();
            let got = model.loop_integral(k).unwrap();
            let expected = contour_loop_integral(&model, k);
            assert!(
                (got - expected).norm() < 1e-10 * expected.norm(),
                "{beta} {mass} {k}: {got} {expected}"
            );
        }
    }

    #[test]
    fn separable_examples() {
        let tol = Tolerances::default();
        let model = SeparableModel::new(0.0, 1.0, 1.0).unwrap();
        assert_eq!(separable_tmatrix(&model, 0.5, &tol).unwrap(), Complex::new(0.0, 0.0));
        assert_eq!(optical_theorem_residual(&model, 0.5, &tol).unwrap(), 0.0);

        let model = SeparableModel::new(-0.1, 1.0, 1.0).unwrap();
        let f = separable_tmatrix(&model, 0.5, &tol).unwrap();
        // regression value from the contour-integral closed form
        let i = contour_loop_integral(&model, 0.5);
        let closed = model.prefactor(0.5) * -0.1 / (1.0 + i * 0.1);
        assert!((f - closed).norm() < 1e-12, "{f} {closed}");
        assert!((f.re - 0.083_000_052_876_389_75).abs() < 1e-12, "{}", f.re);
        assert!((f.im - 1.996_549_542_783_757_7).abs() < 1e-12, "{}", f.im);
        assert!(optical_theorem_residual(&model, 0.5, &tol).unwrap() < 1e-8);
    }

    #[test]
    fn born_approximations_converge_at_expected_order() {
        let tol = Tolerances::default();
        // |lambda I| ~ 0.16 at lambda = -0.01; at -0.1 it exceeds 1 and the
        // series is not asymptotic
        let base = SeparableModel::new(-0.01, 1.0, 1.0).unwrap();
        let error = |lambda: f64| {
            let m = base.with_coupling(lambda);
            let exact = separable_tmatrix(&m, 0.5, &tol).unwrap();
            (separable_born_amplitude(&m, 0.5, 2).unwrap() - exact).norm()
        };
        let ratio = error(-0.01) / error(-0.005);
        assert!((6.5..9.5).contains(&ratio), "{ratio}");
        let residual = |lambda: f64| {
            let m = base.with_coupling(lambda);
            optical_residual(separable_born_amplitude(&m, 0.5, 2).unwrap(), 0.5)
        };
        let ratio = residual(-0.01) / residual(-0.005);
        assert!((6.5..9.5).contains(&ratio), "{ratio}");
        assert_eq!(separable_born_amplitude(&base, 0.5, 0).unwrap(), Complex::new(0.0, 0.0));
    }

    #[test]
    fn bound_state_pole_is_reported() {
        // 1 - lambda I(E_k) = 0 needs lambda = 1 / I, complex for k > 0; a huge
        // tolerance stands in for an exact hit
        let model = SeparableModel::new(-0.1, 1.0, 1.0).unwrap();
        let tol = Tolerances {
            zero: 10.0,
            ..Tolerances::default()
        };
        assert!(matches!(
            separable_tmatrix(&model, 0.5, &tol),
            Err(Error::PoleAtEnergy { .. })
        ));
        assert!(SeparableModel::new(0.1, 0.0, 1.0).is_err());
        assert!(model.loop_integral(0.0).is_err());
    }
}
