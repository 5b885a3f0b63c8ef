//! Reference computations that share no code path with the library.
#![allow(dead_code)]

use ggp::Complex;
use nalgebra::DMatrix;

/// Double-double real: `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = two_sum(s, e);
        Dd { hi, lo }
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = two_sum(p, e);
        Dd { hi, lo }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DdComplex {
    pub re: Dd,
    pub im: Dd,
}

impl DdComplex {
    pub fn from(z: Complex) -> Self {
        DdComplex {
            re: Dd::from(z.re),
            im: Dd::from(z.im),
        }
    }

    pub fn zero() -> Self {
        Self::from(Complex::new(0.0, 0.0))
    }

    pub fn add(self, o: Self) -> Self {
        DdComplex {
            re: self.re.add(o.re),
            im: self.im.add(o.im),
        }
    }

    pub fn mul(self, o: Self) -> Self {
        DdComplex {
            re: self.re.mul(o.re).add(self.im.mul(o.im).neg()),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    pub fn conj(self) -> Self {
        DdComplex {
            re: self.re,
            im: self.im.neg(),
        }
    }

    /// Argument rounded to f64; the double-double parts make the rounding of
    /// the product itself negligible.
    pub fn arg(self) -> f64 {
        (self.im.hi + self.im.lo).atan2(self.re.hi + self.re.lo)
    }
}

/// `<a|M|b>` in double-double.
pub fn dd_element(a: &[Complex], m: &DMatrix<Complex>, b: &[Complex]) -> DdComplex {
    let mut total = DdComplex::zero();
    for i in 0..a.len() {
        let mut row = DdComplex::zero();
        for j in 0..b.len() {
            row = row.add(DdComplex::from(m[(i, j)]).mul(DdComplex::from(b[j])));
        }
        total = total.add(DdComplex::from(a[i]).conj().mul(row));
    }
    total
}

/// `Arg prod_l <psi_l|M|psi_{l+1}>` accumulated in double-double.
pub fn dd_chain_phase(states: &[Vec<Complex>], m: &DMatrix<Complex>) -> f64 {
    let n = states.len();
    let mut product = DdComplex::from(Complex::new(1.0, 0.0));
    for l in 0..n {
        product = product.mul(dd_element(&states[l], m, &states[(l + 1) % n]));
    }
    product.arg()
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule on [a, b] with `panels` equal panels.
pub fn composite_rule(a: f64, b: f64, panels: usize, rule: &(Vec<f64>, Vec<f64>)) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * rule.0.len());
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

/// `int_0^t ds1 e^{i w1 s1} int_0^{s1} ds2 e^{i w2 s2} int_0^{s2} ds3 e^{i w3 s3}`
/// by a product rule over the three nested intervals directly.
pub fn triple_quadrature(w: [f64; 3], t: f64, panels: usize) -> Complex {
    let rule = gauss_legendre(16);
    let phase = |w: f64, s: f64| Complex::from_polar(1.0, w * s);
    let mut total = Complex::new(0.0, 0.0);
    for (s1, w1) in composite_rule(0.0, t, panels, &rule) {
        let mut inner = Complex::new(0.0, 0.0);
        for (s2, w2) in composite_rule(0.0, s1, panels, &rule) {
            let mut innermost = Complex::new(0.0, 0.0);
            for (s3, w3) in composite_rule(0.0, s2, panels, &rule) {
                innermost += phase(w[2], s3) * w3;
            }
            inner += phase(w[1], s2) * innermost * w2;
        }
        total += phase(w[0], s1) * inner * w1;
    }
    total
}

/// Triple quadrature refined until two panel counts agree to `tol`.
pub fn adaptive_triple_quadrature(w: [f64; 3], t: f64, tol: f64) -> Complex {
    let mut panels = 1;
    let mut previous = triple_quadrature(w, t, panels);
    loop {
        panels *= 2;
        let next = triple_quadrature(w, t, panels);
        if (next - previous).norm() < tol || panels >= 4 {
            return next;
        }
        previous = next;
    }
}

/// `exp(-i t H)` by scaling and squaring a 30-term Taylor series.
pub fn expm_minus_i(h: &DMatrix<Complex>, t: f64) -> DMatrix<Complex> {
    let n = h.nrows();
    let a = h * Complex::new(0.0, -t);
    let norm: f64 = a.iter().map(|z| z.norm()).sum();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let a = a / Complex::new(2f64.powi(squarings as i32), 0.0);
    let mut result = DMatrix::<Complex>::identity(n, n);
    let mut term = DMatrix::<Complex>::identity(n, n);
    for k in 1..30 {
        term = &term * &a / Complex::new(k as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Survival amplitude `<i|e^{i H0 t} e^{-i (H0 + V) t}|i>` for diagonal H0.
pub fn survival_reference(h0: &[f64], v: &DMatrix<Complex>, i: usize, t: f64) -> Complex {
    let n = h0.len();
    let full = DMatrix::from_fn(n, n, |r, c| {
        v[(r, c)]
            + if r == c {
                Complex::new(h0[r], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
    });
    let u = expm_minus_i(&full, t);
    Complex::from_polar(1.0, h0[i] * t) * u[(i, i)]
}

/// Eigenvalues of a Hermitian matrix by Jacobi rotations on its real 2n x 2n
/// embedding; each appears twice, so every other sorted value is returned.
#[allow(clippy::needless_range_loop)]
pub fn hermitian_eigenvalues(h: &DMatrix<Complex>) -> Vec<f64> {
    let n = h.nrows();
    let m = 2 * n;
    let mut a = vec![vec![0.0; m]; m];
    for r in 0..n {
        for c in 0..n {
            let z = h[(r, c)];
            a[r][c] = z.re;
            a[r + n][c + n] = z.re;
            a[r][c + n] = -z.im;
            a[r + n][c] = z.im;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|p| (0..m).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..m).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    eig.into_iter().step_by(2).collect()
}
