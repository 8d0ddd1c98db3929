//! Truncated multivariate Taylor expansions (jets) at a base point.
//!
//! A `Jet` holds the dense coefficient vector of a scalar function expanded
//! to a fixed truncation order in a fixed number of variables. Coefficients
//! are Taylor coefficients (derivative / alpha!), stored by total degree and
//! then lexicographically within each degree. All arithmetic truncates at the
//! common order; operands with different shapes are rejected rather than
//! silently truncated.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Constant-term magnitude below which a jet is treated as a non-unit of the
/// truncated ring (division is refused).
pub const DEFAULT_PIVOT_TOL: f64 = 1e-10;

const TRUNCATED: u32 = u32::MAX;

/// Coefficient layout for a (nvars, order) pair, plus the product table used
/// by truncated multiplication. Built once and shared.
struct Shape {
    nvars: usize,
    order: usize,
    indices: Vec<Box<[u8]>>,
    rank: HashMap<Box<[u8]>, u32>,
    prod: Vec<u32>,
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Number of multi-indices alpha with |alpha| <= order in nvars variables.
pub fn term_count(nvars: usize, order: usize) -> usize {
    binomial(nvars + order, order)
}

fn gen_degree(nvars: usize, degree: usize, prefix: &mut Vec<u8>, out: &mut Vec<Box<[u8]>>) {
    if prefix.len() == nvars - 1 {
        prefix.push(degree as u8);
        out.push(prefix.clone().into_boxed_slice());
        prefix.pop();
        return;
    }
    for v in 0..=degree {
        prefix.push(v as u8);
        gen_degree(nvars, degree - v, prefix, out);
        prefix.pop();
    }
}

impl Shape {
    fn build(nvars: usize, order: usize) -> Shape {
        assert!(nvars >= 1, "jet needs at least one variable");
        let mut indices = Vec::with_capacity(term_count(nvars, order));
        for d in 0..=order {
            let mut prefix = Vec::with_capacity(nvars);
            gen_degree(nvars, d, &mut prefix, &mut indices);
        }
        let rank: HashMap<_, _> = indices
            .iter()
            .enumerate()
            .map(|(i, ix)| (ix.clone(), i as u32))
            .collect();
        let t = indices.len();
        let mut prod = vec![TRUNCATED; t * t];
        let mut sum = vec![0u8; nvars];
        for i in 0..t {
            let di: usize = indices[i].iter().map(|&v| v as usize).sum();
            for j in 0..t {
                let dj: usize = indices[j].iter().map(|&v| v as usize).sum();
                if di + dj > order {
                    continue;
                }
                for v in 0..nvars {
                    sum[v] = indices[i][v] + indices[j][v];
                }
                prod[i * t + j] = rank[&sum[..]];
            }
        }
        Shape {
            nvars,
            order,
            indices,
            rank,
            prod,
        }
    }
}

fn shape(nvars: usize, order: usize) -> Arc<Shape> {
    static REGISTRY: OnceLock<Mutex<HashMap<(usize, usize), Arc<Shape>>>> = OnceLock::new();
    let reg = REGISTRY.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = reg.lock().unwrap();
    guard
        .entry((nvars, order))
        .or_insert_with(|| Arc::new(Shape::build(nvars, order)))
        .clone()
}

/// Truncated Taylor expansion of a scalar function at a base point.
#[derive(Clone)]
pub struct Jet {
    shape: Arc<Shape>,
    coeffs: Vec<f64>,
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Jet(nvars={}, order={}, coeffs={:?})",
            self.shape.nvars, self.shape.order, self.coeffs
        )
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.shape.nvars == other.shape.nvars
            && self.shape.order == other.shape.order
            && self.coeffs == other.coeffs
    }
}

impl Jet {
    pub fn constant(nvars: usize, order: usize, value: f64) -> Jet {
        let shape = shape(nvars, order);
        let mut coeffs = vec![0.0; shape.indices.len()];
        coeffs[0] = value;
        Jet { shape, coeffs }
    }

    /// The i-th coordinate function expanded at `x0i`.
    pub fn variable(nvars: usize, order: usize, i: usize, x0i: f64) -> Jet {
        assert!(i < nvars);
        let mut jet = Jet::constant(nvars, order, x0i);
        if order >= 1 {
            // the linear block starts right after the constant term
            jet.coeffs[1 + i] = 1.0;
        }
        jet
    }

    /// The n coordinate jets at a base point.
    pub fn seed_point(x0: &[f64], order: usize) -> Vec<Jet> {
        (0..x0.len())
            .map(|i| Jet::variable(x0.len(), order, i, x0[i]))
            .collect()
    }

    pub fn nvars(&self) -> usize {
        self.shape.nvars
    }

    pub fn order(&self) -> usize {
        self.shape.order
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Constant (order-0) term.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient of the given multi-index.
    pub fn coeff(&self, alpha: &[u8]) -> f64 {
        let r = self.shape.rank[alpha];
        self.coeffs[r as usize]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn same_shape(&self, other: &Jet) -> Result<()> {
        if self.shape.nvars != other.shape.nvars || self.shape.order != other.shape.order {
            return Err(Error::ShapeMismatch {
                expected: (self.shape.nvars, self.shape.order),
                got: (other.shape.nvars, other.shape.order),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Jet) -> Result<Jet> {
        self.same_shape(other)?;
        let mut out = self.clone();
        for (c, o) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *c += o;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet> {
        self.same_shape(other)?;
        let mut out = self.clone();
        for (c, o) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *c -= o;
        }
        Ok(out)
    }

    pub fn neg(&self) -> Jet {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c = -*c;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c *= s;
        }
        out
    }

    pub fn mul(&self, other: &Jet) -> Result<Jet> {
        self.same_shape(other)?;
        let t = self.coeffs.len();
        let prod = &self.shape.prod;
        let mut out = vec![0.0; t];
        for i in 0..t {
            let a = self.coeffs[i];
            if a == 0.0 {
                continue;
            }
            let row = &prod[i * t..(i + 1) * t];
            for j in 0..t {
                let k = row[j];
                if k != TRUNCATED {
                    out[k as usize] += a * other.coeffs[j];
                }
            }
        }
        Ok(Jet {
            shape: self.shape.clone(),
            coeffs: out,
        })
    }

    pub fn div(&self, other: &Jet) -> Result<Jet> {
        self.div_with_tol(other, DEFAULT_PIVOT_TOL)
    }

    pub fn div_with_tol(&self, other: &Jet, pivot_tol: f64) -> Result<Jet> {
        self.same_shape(other)?;
        self.mul(&other.recip_with_tol(pivot_tol)?)
    }

    /// Multiplicative inverse in the truncated ring. The non-constant part is
    /// nilpotent, so 1/b = (1/b0) * sum_m (-u)^m with u = b/b0 - 1.
    pub fn recip(&self) -> Result<Jet> {
        self.recip_with_tol(DEFAULT_PIVOT_TOL)
    }

    pub fn recip_with_tol(&self, pivot_tol: f64) -> Result<Jet> {
        let b0 = self.coeffs[0];
        if b0.abs() < pivot_tol {
            return Err(Error::DivisionByNonUnit {
                magnitude: b0.abs(),
            });
        }
        let mut u = self.scale(1.0 / b0);
        u.coeffs[0] = 0.0;
        let mut acc = Jet::constant(self.shape.nvars, self.shape.order, 1.0);
        // Horner over the geometric series 1 - u + u^2 - ...
        for _ in 0..self.shape.order {
            acc = acc.mul(&u)?.neg();
            acc.coeffs[0] += 1.0;
        }
        Ok(acc.scale(1.0 / b0))
    }

    /// Compose a univariate analytic function with this jet, given the Taylor
    /// coefficients c_m = f^(m)(a0)/m! of f at the jet's constant term.
    fn compose_series(&self, series: &[f64]) -> Jet {
        let mut w = self.clone();
        w.coeffs[0] = 0.0;
        let order = self.shape.order;
        let mut acc = Jet::constant(self.shape.nvars, order, series[order]);
        for m in (0..order).rev() {
            acc = acc.mul(&w).expect("same shape by construction");
            acc.coeffs[0] += series[m];
        }
        acc
    }

    pub fn exp(&self) -> Jet {
        let a0 = self.coeffs[0];
        let e = a0.exp();
        let mut series = vec![0.0; self.shape.order + 1];
        let mut fact = 1.0;
        for (m, s) in series.iter_mut().enumerate() {
            if m > 0 {
                fact *= m as f64;
            }
            *s = e / fact;
        }
        self.compose_series(&series)
    }

    pub fn ln(&self) -> Result<Jet> {
        let a0 = self.coeffs[0];
        if a0 <= 0.0 {
            return Err(Error::DomainError {
                func: "log",
                value: a0,
            });
        }
        let mut series = vec![0.0; self.shape.order + 1];
        series[0] = a0.ln();
        for (m, s) in series.iter_mut().enumerate().skip(1) {
            let sign = if m % 2 == 0 { -1.0 } else { 1.0 };
            *s = sign / (m as f64 * a0.powi(m as i32));
        }
        Ok(self.compose_series(&series))
    }

    pub fn sin(&self) -> Jet {
        self.trig(true)
    }

    pub fn cos(&self) -> Jet {
        self.trig(false)
    }

    fn trig(&self, sine: bool) -> Jet {
        let a0 = self.coeffs[0];
        let (s, c) = a0.sin_cos();
        let cycle = if sine {
            [s, c, -s, -c]
        } else {
            [c, -s, -c, s]
        };
        let mut series = vec![0.0; self.shape.order + 1];
        let mut fact = 1.0;
        for (m, out) in series.iter_mut().enumerate() {
            if m > 0 {
                fact *= m as f64;
            }
            *out = cycle[m % 4] / fact;
        }
        self.compose_series(&series)
    }

    pub fn sqrt(&self) -> Result<Jet> {
        self.powf(0.5)
    }

    /// Real power with arbitrary exponent, via the binomial series at the
    /// constant term. Requires a strictly positive constant term.
    pub fn powf(&self, r: f64) -> Result<Jet> {
        let a0 = self.coeffs[0];
        if a0 <= 0.0 {
            return Err(Error::DomainError {
                func: "pow",
                value: a0,
            });
        }
        let mut series = vec![0.0; self.shape.order + 1];
        let mut coef = 1.0;
        for (m, s) in series.iter_mut().enumerate() {
            if m > 0 {
                coef *= (r - (m as f64 - 1.0)) / m as f64;
            }
            *s = coef * a0.powf(r - m as f64);
        }
        Ok(self.compose_series(&series))
    }

    /// Integer power by repeated squaring; negative exponents go through the
    /// ring inverse.
    pub fn powi(&self, k: i64) -> Result<Jet> {
        if k < 0 {
            return self.recip()?.powi(-k);
        }
        let mut acc = Jet::constant(self.shape.nvars, self.shape.order, 1.0);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Formal partial derivative with respect to variable `i`; the result has
    /// one order less.
    pub fn partial(&self, i: usize) -> Result<Jet> {
        assert!(i < self.shape.nvars);
        if self.shape.order == 0 {
            return Err(Error::OrderExhausted { needed: 1, have: 0 });
        }
        let target = shape(self.shape.nvars, self.shape.order - 1);
        let mut coeffs = vec![0.0; target.indices.len()];
        let mut bumped = vec![0u8; self.shape.nvars];
        for (t, beta) in target.indices.iter().enumerate() {
            bumped.copy_from_slice(beta);
            bumped[i] += 1;
            let src = self.shape.rank[&bumped[..]];
            coeffs[t] = (beta[i] as f64 + 1.0) * self.coeffs[src as usize];
        }
        Ok(Jet {
            shape: target,
            coeffs,
        })
    }

    /// Copy truncated to a lower order. The graded layout makes this a prefix.
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.shape.order);
        if order == self.shape.order {
            return self.clone();
        }
        let target = shape(self.shape.nvars, order);
        let coeffs = self.coeffs[..target.indices.len()].to_vec();
        Jet {
            shape: target,
            coeffs,
        }
    }
}

/// Operator sugar for tests and short expressions; panics on shape mismatch.
impl std::ops::Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        Jet::add(self, rhs).expect("jet shape mismatch")
    }
}

impl std::ops::Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        Jet::sub(self, rhs).expect("jet shape mismatch")
    }
}

impl std::ops::Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        Jet::mul(self, rhs).expect("jet shape mismatch")
    }
}
