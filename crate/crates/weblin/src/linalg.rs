//! Dense linear algebra over the truncated-jet ring.
//!
//! Division in the jet ring requires unit pivots (nonzero constant term), so
//! pivoting ranks candidates by constant-term magnitude only. Solving a jet
//! system simultaneously solves the pointwise system and, through the higher
//! coefficients, implicitly differentiates the solution.

use crate::error::{Error, Result};
use crate::jet::{Jet, DEFAULT_PIVOT_TOL};

/// Dense row-major matrix of jets sharing one (nvars, order).
#[derive(Clone, Debug)]
pub struct JetMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Jet>,
}

impl JetMatrix {
    pub fn from_rows(rows: Vec<Vec<Jet>>) -> Result<JetMatrix> {
        let r = rows.len();
        let c = rows.first().map(|row| row.len()).unwrap_or(0);
        if r == 0 || c == 0 {
            return Err(Error::InvalidInput("empty matrix".into()));
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::InvalidInput("ragged matrix rows".into()));
            }
            data.extend(row);
        }
        let m = JetMatrix { rows: r, cols: c, data };
        m.check_uniform()?;
        Ok(m)
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Jet,
    ) -> JetMatrix {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        JetMatrix { rows, cols, data }
    }

    fn check_uniform(&self) -> Result<()> {
        let (n, o) = (self.data[0].nvars(), self.data[0].order());
        for e in &self.data {
            if e.nvars() != n || e.order() != o {
                return Err(Error::ShapeMismatch {
                    expected: (n, o),
                    got: (e.nvars(), e.order()),
                });
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Jet) {
        self.data[i * self.cols + j] = v;
    }

    /// A · x for a jet vector x.
    pub fn mul_vec(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut acc = self.get(i, 0).mul(&x[0])?;
            for j in 1..self.cols {
                acc = acc.add(&self.get(i, j).mul(&x[j])?)?;
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Matrix product (used by the determinant multiplicativity tests).
    pub fn mul_mat(&self, other: &JetMatrix) -> Result<JetMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = self.get(i, 0).mul(other.get(0, j))?;
                for k in 1..self.cols {
                    acc = acc.add(&self.get(i, k).mul(other.get(k, j))?)?;
                }
                out.push(acc);
            }
        }
        Ok(JetMatrix {
            rows: self.rows,
            cols: other.cols,
            data: out,
        })
    }
}

/// Options for the elimination-based routines.
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub pivot_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            pivot_tol: DEFAULT_PIVOT_TOL,
        }
    }
}

/// Solve a square jet system by Gaussian elimination with partial pivoting on
/// constant-term magnitude.
pub fn lu_solve(a: &JetMatrix, b: &[Jet]) -> Result<Vec<Jet>> {
    lu_solve_with(a, b, SolveOptions::default())
}

pub fn lu_solve_with(a: &JetMatrix, b: &[Jet], opts: SolveOptions) -> Result<Vec<Jet>> {
    if a.rows != a.cols {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            got: a.cols,
        });
    }
    if b.len() != a.rows {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            got: b.len(),
        });
    }
    let n = a.rows;
    let mut work = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| {
                let v1 = work.get(r1, col).value().abs();
                let v2 = work.get(r2, col).value().abs();
                v1.total_cmp(&v2)
            })
            .unwrap();
        let pval = work.get(pivot_row, col).value().abs();
        if pval < opts.pivot_tol {
            return Err(Error::SingularAtPoint {
                detail: format!("no unit pivot in column {col} (best constant term {pval:.3e})"),
            });
        }
        if pivot_row != col {
            for j in 0..n {
                work.data.swap(col * n + j, pivot_row * n + j);
            }
            rhs.swap(col, pivot_row);
        }
        let pivot = work.get(col, col).clone();
        for r in col + 1..n {
            if work.get(r, col).max_abs() == 0.0 {
                continue;
            }
            let factor = work.get(r, col).div_with_tol(&pivot, opts.pivot_tol)?;
            for j in col..n {
                let upd = work.get(r, j).sub(&factor.mul(work.get(col, j))?)?;
                work.set(r, j, upd);
            }
            let upd = rhs[r].sub(&factor.mul(&rhs[col])?)?;
            rhs[r] = upd;
        }
    }
    back_substitute(&work, &rhs, opts)
}

fn back_substitute(u: &JetMatrix, rhs: &[Jet], opts: SolveOptions) -> Result<Vec<Jet>> {
    let n = u.rows();
    let mut x = rhs.to_vec();
    for col in (0..n).rev() {
        let mut acc = x[col].clone();
        for j in col + 1..n {
            acc = acc.sub(&u.get(col, j).mul(&x[j])?)?;
        }
        x[col] = acc.div_with_tol(u.get(col, col), opts.pivot_tol)?;
    }
    Ok(x)
}

/// Solve an overdetermined system on the square subsystem selected by
/// constant-term pivoting, then report the largest constant-term residual of
/// the remaining equations. Residual near zero means the stacked system is
/// consistent.
pub fn lsq_consistency(a: &JetMatrix, b: &[Jet]) -> Result<(Vec<Jet>, f64)> {
    lsq_consistency_with(a, b, SolveOptions::default())
}

pub fn lsq_consistency_with(
    a: &JetMatrix,
    b: &[Jet],
    opts: SolveOptions,
) -> Result<(Vec<Jet>, f64)> {
    if a.rows <= a.cols {
        return Err(Error::DimensionMismatch {
            expected: a.cols + 1,
            got: a.rows,
        });
    }
    if b.len() != a.rows {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            got: b.len(),
        });
    }
    let (rows, cols) = (a.rows, a.cols);
    let mut work = a.clone();
    let mut rhs = b.to_vec();
    // row_of[r] = index of the original equation now stored in work row r
    let mut row_of: Vec<usize> = (0..rows).collect();
    for col in 0..cols {
        let pivot_row = (col..rows)
            .max_by(|&r1, &r2| {
                let v1 = work.get(r1, col).value().abs();
                let v2 = work.get(r2, col).value().abs();
                v1.total_cmp(&v2)
            })
            .unwrap();
        let pval = work.get(pivot_row, col).value().abs();
        if pval < opts.pivot_tol {
            return Err(Error::SingularAtPoint {
                detail: format!(
                    "column {col} has no unit pivot (best constant term {pval:.3e}); \
                     system lacks full column rank at this point"
                ),
            });
        }
        if pivot_row != col {
            for j in 0..cols {
                work.data.swap(col * cols + j, pivot_row * cols + j);
            }
            rhs.swap(col, pivot_row);
            row_of.swap(col, pivot_row);
        }
        let pivot = work.get(col, col).clone();
        for r in col + 1..rows {
            if work.get(r, col).max_abs() == 0.0 {
                continue;
            }
            let factor = work.get(r, col).div_with_tol(&pivot, opts.pivot_tol)?;
            for j in col..cols {
                let upd = work.get(r, j).sub(&factor.mul(work.get(col, j))?)?;
                work.set(r, j, upd);
            }
            let upd = rhs[r].sub(&factor.mul(&rhs[col])?)?;
            rhs[r] = upd;
        }
    }
    let square = JetMatrix::from_fn(cols, cols, |i, j| work.get(i, j).clone());
    let sol = back_substitute(&square, &rhs[..cols], opts)?;
    // residuals of the equations that did not enter the square subsystem,
    // evaluated against the original rows
    let mut residual: f64 = 0.0;
    for r in cols..rows {
        let orig = row_of[r];
        let mut acc = b[orig].neg();
        for j in 0..cols {
            acc = acc.add(&a.get(orig, j).mul(&sol[j])?)?;
        }
        residual = residual.max(acc.value().abs());
    }
    Ok((sol, residual))
}

/// Determinant via elimination (product of pivots with sign). A zero constant
/// term is a legal determinant value; when elimination stalls on a column with
/// no unit pivot the routine falls back to a division-free expansion.
pub fn determinant(a: &JetMatrix) -> Result<Jet> {
    determinant_with(a, SolveOptions::default())
}

pub fn determinant_with(a: &JetMatrix, opts: SolveOptions) -> Result<Jet> {
    if a.rows != a.cols {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            got: a.cols,
        });
    }
    let n = a.rows;
    let (nv, or) = (a.data[0].nvars(), a.data[0].order());
    let mut work = a.clone();
    let mut sign = 1.0;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| {
                let v1 = work.get(r1, col).value().abs();
                let v2 = work.get(r2, col).value().abs();
                v1.total_cmp(&v2)
            })
            .unwrap();
        let pval = work.get(pivot_row, col).value().abs();
        if pval < opts.pivot_tol && col < n - 1 {
            // stalled: all remaining candidates are non-units
            return if n <= 4 {
                cofactor_det(a)
            } else {
                berkowitz_det(a)
            };
        }
        if pivot_row != col {
            for j in 0..n {
                work.data.swap(col * n + j, pivot_row * n + j);
            }
            sign = -sign;
        }
        if col == n - 1 {
            break;
        }
        let pivot = work.get(col, col).clone();
        for r in col + 1..n {
            if work.get(r, col).max_abs() == 0.0 {
                continue;
            }
            let factor = work.get(r, col).div_with_tol(&pivot, opts.pivot_tol)?;
            for j in col..n {
                let upd = work.get(r, j).sub(&factor.mul(work.get(col, j))?)?;
                work.set(r, j, upd);
            }
        }
    }
    let mut det = Jet::constant(nv, or, sign);
    for i in 0..n {
        det = det.mul(work.get(i, i))?;
    }
    Ok(det)
}

fn cofactor_det(a: &JetMatrix) -> Result<Jet> {
    let n = a.rows;
    let (nv, or) = (a.data[0].nvars(), a.data[0].order());
    if n == 1 {
        return Ok(a.get(0, 0).clone());
    }
    let mut acc = Jet::constant(nv, or, 0.0);
    for j in 0..n {
        let minor = JetMatrix::from_fn(n - 1, n - 1, |r, c| {
            a.get(r + 1, if c < j { c } else { c + 1 }).clone()
        });
        let term = a.get(0, j).mul(&cofactor_det(&minor)?)?;
        acc = if j % 2 == 0 {
            acc.add(&term)?
        } else {
            acc.sub(&term)?
        };
    }
    Ok(acc)
}

/// Division-free determinant (Berkowitz), correct over any commutative ring;
/// used when elimination has no unit pivot available.
fn berkowitz_det(a: &JetMatrix) -> Result<Jet> {
    let n = a.rows;
    let (nv, or) = (a.data[0].nvars(), a.data[0].order());
    let zero = Jet::constant(nv, or, 0.0);
    let one = Jet::constant(nv, or, 1.0);
    // coefficients of the characteristic polynomial, built up by Toeplitz
    // products; poly[k] multiplies lambda^(deg - k)
    let mut poly = vec![one.clone(), a.get(0, 0).neg()];
    for m in 1..n {
        // principal submatrix A[0..=m], row/col m split as
        // [ B  c ; r  d ] with B = A[0..m, 0..m]
        let d = a.get(m, m).clone();
        let mut powers: Vec<Vec<Jet>> = Vec::with_capacity(m + 1);
        let c: Vec<Jet> = (0..m).map(|i| a.get(i, m).clone()).collect();
        powers.push(c);
        for _ in 1..m {
            let prev = powers.last().unwrap();
            let mut next = vec![zero.clone(); m];
            for i in 0..m {
                let mut acc = zero.clone();
                for k in 0..m {
                    acc = acc.add(&a.get(i, k).mul(&prev[k])?)?;
                }
                next[i] = acc;
            }
            powers.push(next);
        }
        // Toeplitz column: t[0] = 1, t[1] = -d, t[k+2] = -(r . B^k c)
        let mut t = vec![one.clone(), d.neg()];
        for p in powers.iter().take(m) {
            let mut acc = zero.clone();
            for k in 0..m {
                acc = acc.add(&a.get(m, k).mul(&p[k])?)?;
            }
            t.push(acc.neg());
        }
        let mut next_poly = vec![zero.clone(); poly.len() + 1];
        for (i, pi) in poly.iter().enumerate() {
            for (k, tk) in t.iter().enumerate() {
                if i + k < next_poly.len() {
                    let upd = next_poly[i + k].add(&pi.mul(tk)?)?;
                    next_poly[i + k] = upd;
                }
            }
        }
        poly = next_poly;
    }
    // det = (-1)^n * characteristic-polynomial constant term
    let last = poly.pop().unwrap();
    Ok(if n % 2 == 0 { last } else { last.neg() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(v: f64) -> Jet {
        Jet::constant(2, 2, v)
    }

    fn var(i: usize, x0: f64) -> Jet {
        Jet::variable(2, 2, i, x0)
    }

    /// Independent pointwise double-precision solver (plain Gauss, used only
    /// as a test oracle).
    fn solve_f64(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
        let mut r = b.to_vec();
        for col in 0..n {
            let p = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
            m.swap(col, p);
            r.swap(col, p);
            for row in col + 1..n {
                let f = m[row][col] / m[col][col];
                for j in col..n {
                    m[row][j] -= f * m[col][j];
                }
                r[row] -= f * r[col];
            }
        }
        let mut x = vec![0.0; n];
        for col in (0..n).rev() {
            let mut acc = r[col];
            for j in col + 1..n {
                acc -= m[col][j] * x[j];
            }
            x[col] = acc / m[col][col];
        }
        x
    }

    #[test]
    fn identity_solve() {
        let a = JetMatrix::from_rows(vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]]).unwrap();
        let b = vec![var(0, 0.3), var(1, -0.2)];
        let s = lu_solve(&a, &b).unwrap();
        assert_eq!(s[0], b[0]);
        assert_eq!(s[1], b[1]);
    }

    #[test]
    fn diagonal_jet_solve() {
        // A = [[1+x, 0],[0,2]], b = (1, 1+y) -> s = (1 - x + x^2, (1+y)/2)
        let one = c(1.0);
        let a = JetMatrix::from_rows(vec![
            vec![&one + &var(0, 0.0), c(0.0)],
            vec![c(0.0), c(2.0)],
        ])
        .unwrap();
        let b = vec![c(1.0), &one + &var(1, 0.0)];
        let s = lu_solve(&a, &b).unwrap();
        assert_eq!(s[0].coeff(&[0, 0]), 1.0);
        assert_eq!(s[0].coeff(&[1, 0]), -1.0);
        assert_eq!(s[0].coeff(&[2, 0]), 1.0);
        assert_eq!(s[1].coeff(&[0, 0]), 0.5);
        assert_eq!(s[1].coeff(&[0, 1]), 0.5);
    }

    #[test]
    fn all_zero_constant_terms_is_singular() {
        let a = JetMatrix::from_rows(vec![
            vec![var(0, 0.0), var(1, 0.0)],
            vec![var(1, 0.0), var(0, 0.0)],
        ])
        .unwrap();
        let b = vec![c(1.0), c(1.0)];
        assert!(matches!(lu_solve(&a, &b), Err(Error::SingularAtPoint { .. })));
    }

    #[test]
    fn duplicated_row_is_consistent() {
        let a = JetMatrix::from_rows(vec![
            vec![c(2.0), c(1.0)],
            vec![c(1.0), c(3.0)],
            vec![c(2.0), c(1.0)],
        ])
        .unwrap();
        let b = vec![c(1.0), c(-1.0), c(1.0)];
        let (_, res) = lsq_consistency(&a, &b).unwrap();
        assert!(res < 1e-10, "residual {res}");
    }

    #[test]
    fn inconsistent_row_reported() {
        let a = JetMatrix::from_rows(vec![
            vec![c(2.0), c(1.0)],
            vec![c(1.0), c(3.0)],
            vec![c(2.0), c(1.0)],
        ])
        .unwrap();
        let b = vec![c(1.0), c(-1.0), c(1.5)];
        let (_, res) = lsq_consistency(&a, &b).unwrap();
        assert_relative_eq!(res, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn det_identity_and_small_jets() {
        let a = JetMatrix::from_rows(vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]]).unwrap();
        assert_relative_eq!(determinant(&a).unwrap().value(), 1.0);
        // det [[1+x, y],[y, 1-x]] = 1 - x^2 - y^2
        let m = JetMatrix::from_rows(vec![
            vec![&c(1.0) + &var(0, 0.0), var(1, 0.0)],
            vec![var(1, 0.0), &c(1.0) - &var(0, 0.0)],
        ])
        .unwrap();
        let d = determinant(&m).unwrap();
        assert_relative_eq!(d.coeff(&[0, 0]), 1.0, epsilon = 1e-14);
        assert_relative_eq!(d.coeff(&[2, 0]), -1.0, epsilon = 1e-14);
        assert_relative_eq!(d.coeff(&[0, 2]), -1.0, epsilon = 1e-14);
        assert_relative_eq!(d.coeff(&[1, 0]), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn det_stall_fallback_matches_expansion() {
        // constant terms all zero in the first column: elimination stalls,
        // but det = -y*(y) + x*x ... verify against the cofactor path
        let m = JetMatrix::from_rows(vec![
            vec![var(0, 0.0), c(2.0)],
            vec![var(1, 0.0), c(1.0)],
        ])
        .unwrap();
        let d = determinant(&m).unwrap();
        // det = x*1 - 2*y
        assert_relative_eq!(d.coeff(&[1, 0]), 1.0, epsilon = 1e-14);
        assert_relative_eq!(d.coeff(&[0, 1]), -2.0, epsilon = 1e-14);
        assert_relative_eq!(d.value(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn berkowitz_agrees_with_elimination() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let m = JetMatrix::from_fn(6, 6, |_, _| {
                let mut j = Jet::constant(2, 2, rng.gen_range(-2.0..2.0));
                let v: Vec<f64> = (0..j.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                for (i, jj) in v.iter().enumerate().skip(1) {
                    // rebuild with random higher coefficients
                    let _ = i;
                    let _ = jj;
                }
                let lin0 = Jet::variable(2, 2, 0, 0.0).scale(v[1]);
                let lin1 = Jet::variable(2, 2, 1, 0.0).scale(v[2]);
                j = j.add(&lin0).unwrap().add(&lin1).unwrap();
                j
            });
            let d1 = determinant(&m).unwrap();
            let d2 = berkowitz_det(&m).unwrap();
            let scale = 1.0 + d1.max_abs();
            for (a, b) in d1.coeffs().iter().zip(d2.coeffs()) {
                assert!((a - b).abs() < 1e-10 * scale, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn constant_order_solve_matches_independent_f64_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = 5;
            let af: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let bf: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a = JetMatrix::from_fn(n, n, |i, j| Jet::constant(1, 0, af[i][j]));
            let b: Vec<Jet> = bf.iter().map(|&v| Jet::constant(1, 0, v)).collect();
            match lu_solve(&a, &b) {
                Ok(s) => {
                    let oracle = solve_f64(&af, &bf);
                    for (x, y) in s.iter().zip(&oracle) {
                        assert!((x.value() - y).abs() < 1e-10 * (1.0 + y.abs()));
                    }
                }
                Err(_) => continue,
            }
        }
    }

    #[test]
    fn jet_solution_first_order_matches_finite_differences_of_pointwise_solves() {
        // A(x) s(x) = b(x) with analytic entries; d s / d x from the jet
        // solve must match central differences of pointwise solves.
        let entries = |x: f64| -> (Vec<Vec<f64>>, Vec<f64>) {
            (
                vec![vec![2.0 + x, 1.0], vec![x * x, 3.0 - x]],
                vec![1.0 + x, 2.0 * x],
            )
        };
        let x0 = 0.4;
        let a = {
            let xj = Jet::variable(1, 2, 0, x0);
            let one = Jet::constant(1, 2, 1.0);
            JetMatrix::from_rows(vec![
                vec![&Jet::constant(1, 2, 2.0) + &xj, one.clone()],
                vec![xj.mul(&xj).unwrap(), &Jet::constant(1, 2, 3.0) - &xj],
            ])
            .unwrap()
        };
        let b = {
            let xj = Jet::variable(1, 2, 0, x0);
            vec![&Jet::constant(1, 2, 1.0) + &xj, xj.scale(2.0)]
        };
        let s = lu_solve(&a, &b).unwrap();
        let h = 1e-5;
        let (ap, bp) = entries(x0 + h);
        let (am, bm) = entries(x0 - h);
        let sp = solve_f64(&ap, &bp);
        let sm = solve_f64(&am, &bm);
        for k in 0..2 {
            let fd = (sp[k] - sm[k]) / (2.0 * h);
            assert!(
                (s[k].coeffs()[1] - fd).abs() < 1e-5,
                "component {k}: jet {} fd {fd}",
                s[k].coeffs()[1]
            );
        }
    }

    fn arb_const_mat(n: usize) -> impl Strategy<Value = JetMatrix> {
        proptest::collection::vec(-2.0f64..2.0, n * n).prop_map(move |v| {
            JetMatrix::from_fn(n, n, |i, j| {
                let base = Jet::constant(2, 1, v[i * n + j]);
                let lin = Jet::variable(2, 1, (i + j) % 2, 0.0).scale(0.3 * v[(j * n + i) % (n * n)]);
                base.add(&lin).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn solve_remultiplies_to_rhs(m in arb_const_mat(4), bv in proptest::collection::vec(-1.0f64..1.0, 4)) {
            let b: Vec<Jet> = bv.iter().map(|&v| Jet::constant(2, 1, v)).collect();
            if let Ok(s) = lu_solve(&m, &b) {
                let back = m.mul_vec(&s).unwrap();
                let scale = 1.0 + b.iter().map(|j| j.max_abs()).fold(0.0, f64::max)
                    + s.iter().map(|j| j.max_abs()).fold(0.0, f64::max);
                for (x, y) in back.iter().zip(&b) {
                    for (cx, cy) in x.coeffs().iter().zip(y.coeffs()) {
                        prop_assert!((cx - cy).abs() <= 1e-9 * scale);
                    }
                }
            }
        }

        #[test]
        fn det_is_multiplicative(a in arb_const_mat(3), b in arb_const_mat(3)) {
            let ab = a.mul_mat(&b).unwrap();
            let d1 = determinant(&ab).unwrap();
            let d2 = determinant(&a).unwrap().mul(&determinant(&b).unwrap()).unwrap();
            let scale = 1.0 + d1.max_abs().max(d2.max_abs());
            for (x, y) in d1.coeffs().iter().zip(d2.coeffs()) {
                prop_assert!((x - y).abs() <= 1e-8 * scale, "{} vs {}", x, y);
            }
        }
    }
}
