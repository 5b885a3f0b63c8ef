//! Discretised curves in Hilbert space and the (generalised) natural
//! connection along them.
//!
//! A curve is stored as samples `psi(s_0) .. psi(s_{M-1})` on a strictly
//! increasing parameter grid. Derivatives use the three-point second-order
//! stencil (the central difference on uniform grids) in the interior and
//! first-order one-sided differences at the ends; integrals are trapezoid
//! sums accumulated left to right.
//!
//! The generalised connection is `A^O(s) = Im(<psi|O|d_s psi> / <psi|O|psi>)`;
//! with `O = 1` it is the Berry connection. The curve phase is
//! `Arg <psi(L)|O|psi(0)> + int A^O ds`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{ensure_dim, matrix_element, wrap_angle, Complex, Observable, StateVector, Tolerances};
use crate::phase::PhaseResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurve", into = "RawCurve")]
pub struct ParamCurve {
    params: Vec<f64>,
    states: Vec<StateVector>,
}

#[derive(Serialize, Deserialize)]
struct RawCurve {
    params: Vec<f64>,
    states: Vec<StateVector>,
}

impl TryFrom<RawCurve> for ParamCurve {
    type Error = Error;

    fn try_from(raw: RawCurve) -> Result<Self> {
        ParamCurve::new(raw.params, raw.states)
    }
}

impl From<ParamCurve> for RawCurve {
    fn from(c: ParamCurve) -> Self {
        RawCurve {
            params: c.params,
            states: c.states,
        }
    }
}

fn check_params(params: &[f64]) -> Result<()> {
    if let Some(index) = params.iter().position(|p| !p.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    match params.windows(2).position(|w| w[1] <= w[0]) {
        Some(i) => Err(Error::NonMonotone { index: i + 1 }),
        None => Ok(()),
    }
}

impl ParamCurve {
    pub fn new(params: Vec<f64>, states: Vec<StateVector>) -> Result<Self> {
        if params.len() != states.len() {
            return Err(Error::LengthMismatch {
                expected: params.len(),
                found: states.len(),
            });
        }
        if params.len() < 3 {
            return Err(Error::invalid(
                "curve",
                format!("need at least 3 samples, got {}", params.len()),
            ));
        }
        check_params(&params)?;
        let dim = states[0].dim();
        for s in &states {
            ensure_dim(dim, s.dim())?;
        }
        Ok(ParamCurve { params, states })
    }

    /// Samples `f` at `m` uniformly spaced parameters covering `[start, end]`.
    pub fn sample<F>(start: f64, end: f64, m: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<StateVector>,
    {
        if m < 2 {
            return Err(Error::invalid("samples", "need at least 3 samples"));
        }
        let params = uniform_grid(start, end, m);
        let states = params.iter().map(|&s| f(s)).collect::<Result<Vec<_>>>()?;
        ParamCurve::new(params, states)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn first(&self) -> &StateVector {
        &self.states[0]
    }

    pub fn last(&self) -> &StateVector {
        &self.states[self.states.len() - 1]
    }
}

pub fn uniform_grid(start: f64, end: f64, m: usize) -> Vec<f64> {
    let step = (end - start) / (m - 1) as f64;
    (0..m)
        .map(|l| if l == m - 1 { end } else { start + step * l as f64 })
        .collect()
}

/// Connection values on the curve's parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionSamples {
    pub params: Vec<f64>,
    pub values: Vec<f64>,
    /// Endpoint samples where `<psi|O|psi>` vanished and the value is a
    /// linear extrapolation from the two nearest interior samples.
    #[serde(default)]
    pub extrapolated: Vec<usize>,
    /// Smallest |<psi|O|psi>| among the samples that entered a quotient.
    pub min_expectation: f64,
}

impl ConnectionSamples {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.params, &self.values)
    }

    /// Rows `s,A_O(s)` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,A_O(s)\n");
        for (s, a) in self.params.iter().zip(&self.values) {
            out.push_str(&format!("{},{}\n", crate::json::fmt_f64(*s), crate::json::fmt_f64(*a)));
        }
        out
    }
}

/// Fixed left-to-right trapezoid sum.
pub fn trapezoid(params: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for l in 1..params.len() {
        acc += 0.5 * (params[l] - params[l - 1]) * (values[l] + values[l - 1]);
    }
    acc
}

/// Stencil weights `(index, weight)` for the derivative at sample `l`.
fn derivative_stencil(params: &[f64], l: usize) -> [(usize, f64); 3] {
    let m = params.len();
    if l == 0 {
        let h = params[1] - params[0];
        [(0, -1.0 / h), (1, 1.0 / h), (1, 0.0)]
    } else if l == m - 1 {
        let h = params[m - 1] - params[m - 2];
        [(m - 2, -1.0 / h), (m - 1, 1.0 / h), (m - 1, 0.0)]
    } else {
        let h1 = params[l] - params[l - 1];
        let h2 = params[l + 1] - params[l];
        [
            (l - 1, -h2 / (h1 * (h1 + h2))),
            (l, (h2 - h1) / (h1 * h2)),
            (l + 1, h1 / (h2 * (h1 + h2))),
        ]
    }
}

/// `<psi_l|O|psi_l>` along the curve, with the vanishing-denominator policy:
/// interior zeros or sign changes are errors, endpoint zeros are exempted.
struct ExpectationProfile {
    applied: Vec<DVector<Complex>>,
    expectation: Vec<f64>,
    exempt: Vec<usize>,
    min_expectation: f64,
}

fn expectation_profile(curve: &ParamCurve, o: &Observable, tol: &Tolerances) -> Result<ExpectationProfile> {
    ensure_dim(o.dim(), curve.dim())?;
    let m = curve.len();
    let applied: Vec<DVector<Complex>> = curve.states.iter().map(|s| o.apply(s)).collect::<Result<_>>()?;
    let expectation: Vec<f64> = curve
        .states
        .iter()
        .zip(&applied)
        .map(|(s, w)| w.dotc(s.as_vector()).re)
        .collect();

    let mut exempt = Vec::new();
    let mut min_expectation = f64::INFINITY;
    for (l, &e) in expectation.iter().enumerate() {
        if e.abs() <= tol.zero {
            if l == 0 || l == m - 1 {
                exempt.push(l);
                continue;
            }
            return Err(Error::SingularConnection { sample: l, value: e });
        }
        min_expectation = min_expectation.min(e.abs());
    }
    let first = if exempt.contains(&0) { 1 } else { 0 };
    let last = if exempt.contains(&(m - 1)) { m - 2 } else { m - 1 };
    for l in first..last {
        if expectation[l] * expectation[l + 1] < 0.0 {
            return Err(Error::SingularConnection {
                sample: l,
                value: expectation[l],
            });
        }
    }
    if first > last {
        return Err(Error::SingularConnection {
            sample: 0,
            value: expectation[0],
        });
    }
    Ok(ExpectationProfile {
        applied,
        expectation,
        exempt,
        min_expectation,
    })
}

/// Samples of `A^O(s) = Im(<psi|O|D psi> / <psi|O|psi>)`.
pub fn connection_samples(curve: &ParamCurve, o: &Observable, tol: &Tolerances) -> Result<ConnectionSamples> {
    let profile = expectation_profile(curve, o, tol)?;
    let m = curve.len();
    let mut values = vec![0.0; m];
    for (l, value) in values.iter_mut().enumerate() {
        if profile.exempt.contains(&l) {
            continue;
        }
        let w = &profile.applied[l];
        let mut num = Complex::new(0.0, 0.0);
        for (j, weight) in derivative_stencil(&curve.params, l) {
            num += w.dotc(curve.states[j].as_vector()) * weight;
        }
        *value = (num / profile.expectation[l]).im;
    }
    fill_exempt(&curve.params, &mut values, &profile.exempt);
    Ok(ConnectionSamples {
        params: curve.params.clone(),
        values,
        extrapolated: profile.exempt,
        min_expectation: profile.min_expectation,
    })
}

/// Linear extrapolation into exempted endpoints.
fn fill_exempt(params: &[f64], values: &mut [f64], exempt: &[usize]) {
    let m = params.len();
    for &l in exempt {
        let (a, b) = if l == 0 { (1, 2) } else { (m - 2, m - 3) };
        let usable = |k: usize| k > 0 && k < m - 1 || !exempt.contains(&k);
        values[l] = if b < m && usable(b) && b != l {
            let slope = (values[b] - values[a]) / (params[b] - params[a]);
            values[a] + slope * (params[l] - params[a])
        } else {
            values[a]
        };
    }
}

/// Plain Berry connection `Im(<psi|D psi> / <psi|psi>)`.
pub fn berry_connection_samples(curve: &ParamCurve) -> ConnectionSamples {
    let m = curve.len();
    let mut values = vec![0.0; m];
    let mut min_expectation = f64::INFINITY;
    for (l, value) in values.iter_mut().enumerate() {
        let psi = curve.states[l].as_vector();
        let mut num = Complex::new(0.0, 0.0);
        for (j, weight) in derivative_stencil(&curve.params, l) {
            num += psi.dotc(curve.states[j].as_vector()) * weight;
        }
        let norm_sq = curve.states[l].norm_sq();
        min_expectation = min_expectation.min(norm_sq);
        *value = (num / norm_sq).im;
    }
    ConnectionSamples {
        params: curve.params.clone(),
        values,
        extrapolated: Vec::new(),
        min_expectation,
    }
}

/// Generalised geometric phase of an open curve.
pub fn curve_phase(curve: &ParamCurve, o: &Observable, tol: &Tolerances) -> Result<PhaseResult> {
    let closing = matrix_element(curve.last(), o, curve.first())?;
    let modulus = closing.norm();
    if modulus <= tol.zero {
        return Err(Error::UndefinedPhase {
            link: curve.len() - 1,
            modulus,
        });
    }
    let conn = connection_samples(curve, o, tol)?;
    Ok(PhaseResult {
        value: wrap_angle(closing.arg() + conn.integral()),
        min_link_modulus: modulus.min(conn.min_expectation),
        chain_length: curve.len(),
        extrapolated_endpoints: conn.extrapolated.len(),
    })
}

/// Berry's geometric phase of an open curve from bare inner products.
pub fn berry_curve_phase(curve: &ParamCurve, tol: &Tolerances) -> Result<PhaseResult> {
    let closing = curve.last().inner(curve.first())?;
    let modulus = closing.norm();
    if modulus <= tol.zero {
        return Err(Error::UndefinedPhase {
            link: curve.len() - 1,
            modulus,
        });
    }
    let conn = berry_connection_samples(curve);
    Ok(PhaseResult {
        value: wrap_angle(closing.arg() + conn.integral()),
        min_link_modulus: modulus.min(conn.min_expectation),
        chain_length: curve.len(),
        extrapolated_endpoints: 0,
    })
}

fn check_null_curve_args(tau: f64, m: usize) -> Result<()> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid("tau", format!("must be positive, got {tau}")));
    }
    if m < 3 {
        return Err(Error::invalid("samples", format!("need at least 3 samples, got {m}")));
    }
    Ok(())
}

fn check_unit(index: usize, s: &StateVector) -> Result<()> {
    let norm = s.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { index, norm });
    }
    Ok(())
}

/// Null phase curve through the real span of `A` and the in-phase copy of
/// `B`, sine-interpolated:
/// `e^{-i theta x/tau} (sin(tau-x) A + e^{i theta} sin(x) B) / sin tau`
/// with `theta = Arg <B|A>`. Its Berry-connection integral is `Arg <A|B>`.
pub fn geodesic_null_curve(
    a: &StateVector,
    b: &StateVector,
    tau: f64,
    m: usize,
    tol: &Tolerances,
) -> Result<ParamCurve> {
    check_null_curve_args(tau, m)?;
    if tau >= std::f64::consts::PI {
        return Err(Error::invalid("tau", format!("must lie in (0, pi), got {tau}")));
    }
    check_unit(0, a)?;
    check_unit(1, b)?;
    let overlap = b.inner(a)?;
    let modulus = overlap.norm();
    if modulus <= tol.zero {
        return Err(Error::OrthogonalEndpoints { modulus });
    }
    let theta = overlap.arg();
    let b_in_phase = b.as_vector() * Complex::from_polar(1.0, theta);
    let sin_tau = tau.sin();
    ParamCurve::sample(0.0, tau, m, |x| {
        let v = (a.as_vector() * Complex::new((tau - x).sin(), 0.0) + &b_in_phase * Complex::new(x.sin(), 0.0))
            * Complex::from_polar(1.0 / sin_tau, -theta * x / tau);
        StateVector::from_vector(v)
    })
}

fn straight_line(a: &StateVector, b: &StateVector, theta: f64, tau: f64, m: usize) -> Result<ParamCurve> {
    let b_in_phase = b.as_vector() * Complex::from_polar(1.0, theta);
    let params = uniform_grid(0.0, tau, m);
    let mut states = Vec::with_capacity(m);
    for (sample, &x) in params.iter().enumerate() {
        let u = x / tau;
        let v = (a.as_vector() * Complex::new(1.0 - u, 0.0) + &b_in_phase * Complex::new(u, 0.0))
            * Complex::from_polar(1.0, -theta * u);
        let state = StateVector::from_vector(v).map_err(|_| Error::SingularConnection { sample, value: 0.0 })?;
        states.push(state);
    }
    ParamCurve::new(params, states)
}

/// O-null phase curve from `A` to `B`:
/// `n(x) = e^{-i theta x/tau} ((1 - x/tau) A + (x/tau) e^{i theta} B)` with
/// `theta = Arg(<B|O|A> / <B|B>)`. Its generalised-connection integral is
/// `Arg(<A|O|B> / <B|B>)`.
pub fn o_null_curve(
    a: &StateVector,
    b: &StateVector,
    o: &Observable,
    tau: f64,
    m: usize,
    tol: &Tolerances,
) -> Result<ParamCurve> {
    check_null_curve_args(tau, m)?;
    let z = matrix_element(b, o, a)?;
    let modulus = z.norm();
    if modulus <= tol.zero {
        return Err(Error::UndefinedPhase { link: 0, modulus });
    }
    let curve = straight_line(a, b, z.arg(), tau, m)?;
    expectation_profile(&curve, o, tol)?;
    Ok(curve)
}

/// The identity-observable straight-line null curve, built from the bare
/// overlap `Arg <B|A>`.
pub fn pancharatnam_null_curve(
    a: &StateVector,
    b: &StateVector,
    tau: f64,
    m: usize,
    tol: &Tolerances,
) -> Result<ParamCurve> {
    check_null_curve_args(tau, m)?;
    let z = b.inner(a)?;
    let modulus = z.norm();
    if modulus <= tol.zero {
        return Err(Error::OrthogonalEndpoints { modulus });
    }
    straight_line(a, b, z.arg(), tau, m)
}

/// `int A^O` along the curve.
pub fn line_integral(curve: &ParamCurve, o: &Observable, tol: &Tolerances) -> Result<f64> {
    Ok(connection_samples(curve, o, tol)?.integral())
}

/// Closed-loop integral of the generalised connection: along the open curve
/// and back along the O-null curve from its last to its first state.
pub fn loop_holonomy(open_curve: &ParamCurve, o: &Observable, tol: &Tolerances) -> Result<PhaseResult> {
    let closing = o_null_curve(open_curve.last(), open_curve.first(), o, 1.0, open_curve.len(), tol)?;
    let open = connection_samples(open_curve, o, tol)?;
    let back = connection_samples(&closing, o, tol)?;
    Ok(PhaseResult {
        value: wrap_angle(open.integral() + back.integral()),
        min_link_modulus: open.min_expectation.min(back.min_expectation),
        chain_length: open_curve.len() + closing.len(),
        extrapolated_endpoints: open.extrapolated.len() + back.extrapolated.len(),
    })
}

/// Generalised phase of three states as the loop integral around the
/// triangle of O-null curves `n_12`, `n_23`, `n_31`, each with `m` samples.
pub fn triangle_holonomy(states: [&StateVector; 3], o: &Observable, m: usize, tol: &Tolerances) -> Result<PhaseResult> {
    let mut total = 0.0;
    let mut min_link_modulus = f64::INFINITY;
    let mut extrapolated = 0;
    for i in 0..3 {
        let (a, b) = (states[i], states[(i + 1) % 3]);
        let link = matrix_element(a, o, b)?.norm();
        if link <= tol.zero {
            return Err(Error::UndefinedPhase { link: i, modulus: link });
        }
        let edge = o_null_curve(a, b, o, 1.0, m, tol)?;
        let conn = connection_samples(&edge, o, tol)?;
        total += conn.integral();
        min_link_modulus = min_link_modulus.min(link).min(conn.min_expectation);
        extrapolated += conn.extrapolated.len();
    }
    Ok(PhaseResult {
        value: wrap_angle(total),
        min_link_modulus,
        chain_length: 3 * m,
        extrapolated_endpoints: extrapolated,
    })
}

/// Local gauge transformation `psi(s_l) -> e^{i offsets_l} psi(s_l)`.
pub fn gauge_transform(curve: &ParamCurve, offsets: &[f64]) -> Result<ParamCurve> {
    if offsets.len() != curve.len() {
        return Err(Error::LengthMismatch {
            expected: curve.len(),
            found: offsets.len(),
        });
    }
    let states = curve
        .states
        .iter()
        .zip(offsets)
        .map(|(s, &lambda)| s.phased(lambda))
        .collect();
    ParamCurve::new(curve.params.clone(), states)
}

/// Replaces the parameter grid, keeping the sampled states.
pub fn reparametrize(curve: &ParamCurve, new_params: Vec<f64>) -> Result<ParamCurve> {
    if new_params.len() != curve.len() {
        return Err(Error::LengthMismatch {
            expected: curve.len(),
            found: new_params.len(),
        });
    }
    ParamCurve::new(new_params, curve.states.clone())
}
