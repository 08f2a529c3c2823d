//! Small dense linear algebra over jets, plus conditioning and signature checks.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::jets::Jet;

pub type Vec1 = Vec<Jet>;
pub type Mat = Vec<Vec<Jet>>;
pub type T3 = Vec<Vec<Vec<Jet>>>;
pub type T4 = Vec<Vec<Vec<Vec<Jet>>>>;

/// Condition numbers above this are rejected.
pub const COND_ERROR: f64 = 1e12;
/// Condition numbers above this are reported.
pub const COND_WARN: f64 = 1e8;

pub fn mat<F: FnMut(usize, usize) -> Jet>(r: usize, c: usize, mut f: F) -> Mat {
    (0..r).map(|i| (0..c).map(|j| f(i, j)).collect()).collect()
}

pub fn t3<F: FnMut(usize, usize, usize) -> Jet>(a: usize, b: usize, c: usize, mut f: F) -> T3 {
    (0..a).map(|i| (0..b).map(|j| (0..c).map(|k| f(i, j, k)).collect()).collect()).collect()
}

pub fn t4<F: FnMut(usize, usize, usize, usize) -> Jet>(a: usize, b: usize, c: usize, d: usize, mut f: F) -> T4 {
    (0..a).map(|i| (0..b).map(|j| (0..c).map(|k| (0..d).map(|l| f(i, j, k, l)).collect()).collect()).collect()).collect()
}

pub fn try_mat<F: FnMut(usize, usize) -> Result<Jet>>(r: usize, c: usize, mut f: F) -> Result<Mat> {
    (0..r).map(|i| (0..c).map(|j| f(i, j)).collect()).collect()
}

/// Σ_k f(k), starting from `zero`.
pub fn sum<F: FnMut(usize) -> Jet>(zero: &Jet, n: usize, mut f: F) -> Jet {
    let mut acc = zero.clone();
    for k in 0..n {
        acc = &acc + &f(k);
    }
    acc
}

pub fn values(m: &Mat) -> DMatrix<f64> {
    let r = m.len();
    let c = if r == 0 { 0 } else { m[0].len() };
    DMatrix::from_fn(r, c, |i, j| m[i][j].value())
}

pub fn truncate_mat(m: &Mat, order: usize) -> Mat {
    m.iter().map(|row| row.iter().map(|x| x.truncate(order)).collect()).collect()
}

pub fn truncate_t3(t: &T3, order: usize) -> T3 {
    t.iter().map(|m| truncate_mat(m, order)).collect()
}

pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Counts of positive, negative and (numerically) zero eigenvalues.
pub fn signature(m: &DMatrix<f64>) -> (usize, usize, usize) {
    if m.nrows() == 0 {
        return (0, 0, 0);
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |a, &x| a.max(x.abs())).max(f64::MIN_POSITIVE);
    let mut s = (0, 0, 0);
    for &l in eig.eigenvalues.iter() {
        if l.abs() <= 1e-14 * scale {
            s.2 += 1;
        } else if l > 0.0 {
            s.0 += 1;
        } else {
            s.1 += 1;
        }
    }
    s
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Rejects matrices whose condition number exceeds [`COND_ERROR`]; returns the condition number.
pub fn check_conditioning(what: &str, m: &Mat, point: &[f64]) -> Result<f64> {
    let v = values(m);
    if !v.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite(format!("{what} at {point:?}")));
    }
    let cond = condition_number(&v);
    if cond > COND_ERROR {
        return Err(Error::Singular { what: what.to_string(), point: point.to_vec(), cond });
    }
    Ok(cond)
}

/// Inverse by Gauss–Jordan elimination with partial pivoting on the values.
pub fn inverse(m: &Mat) -> Result<Mat> {
    let n = m.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a: Mat = m.to_vec();
    let one = a[0][0].lift(1.0);
    let zero = a[0][0].lift(0.0);
    let mut inv = mat(n, n, |i, j| if i == j { one.clone() } else { zero.clone() });
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].value().abs().total_cmp(&a[y][col].value().abs())).unwrap_or(col);
        if a[piv][col].value() == 0.0 {
            return Err(Error::Singular { what: "matrix".into(), point: Vec::new(), cond: f64::INFINITY });
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let r = a[col][col].recip()?;
        for j in 0..n {
            a[col][j] = &a[col][j] * &r;
            inv[col][j] = &inv[col][j] * &r;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[i][col].clone();
            if f.coeffs().iter().all(|&x| x == 0.0) {
                continue;
            }
            for j in 0..n {
                a[i][j] = &a[i][j] - &(&f * &a[col][j]);
                inv[i][j] = &inv[i][j] - &(&f * &inv[col][j]);
            }
        }
    }
    Ok(inv)
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    let zero = a[0][0].lift(0.0);
    mat(n, m, |i, j| sum(&zero, k, |l| &a[i][l] * &b[l][j]))
}

pub fn transpose(a: &Mat) -> Mat {
    let r = a.len();
    let c = if r == 0 { 0 } else { a[0].len() };
    mat(c, r, |i, j| a[j][i].clone())
}

/// Lower-triangular L with L Lᵀ = m, for symmetric positive-definite m.
pub fn cholesky(m: &Mat) -> Result<Mat> {
    let n = m.len();
    let zero = m[0][0].lift(0.0);
    let mut l = mat(n, n, |_, _| zero.clone());
    for j in 0..n {
        let d = &m[j][j] - &sum(&zero, j, |k| &l[j][k] * &l[j][k]);
        if !(d.value() > 0.0) {
            return Err(Error::Precondition("matrix is not positive definite".into()));
        }
        let s = d.sqrt()?;
        let rs = s.recip()?;
        l[j][j] = s;
        for i in j + 1..n {
            let t = &m[i][j] - &sum(&zero, j, |k| &l[i][k] * &l[j][k]);
            l[i][j] = &t * &rs;
        }
    }
    Ok(l)
}

pub fn max_abs_mat(m: &Mat) -> f64 {
    m.iter().flatten().fold(0.0_f64, |a, x| a.max(x.value().abs()))
}

pub fn max_abs_t3(t: &T3) -> f64 {
    t.iter().map(max_abs_mat).fold(0.0, f64::max)
}

pub fn max_abs_t4(t: &T4) -> f64 {
    t.iter().map(max_abs_t3).fold(0.0, f64::max)
}

pub fn max_diff_t3(a: &T3, b: &T3) -> f64 {
    let mut m = 0.0_f64;
    for (x, y) in a.iter().flatten().flatten().zip(b.iter().flatten().flatten()) {
        m = m.max((x.value() - y.value()).abs());
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_times_matrix_is_identity_with_derivatives() {
        let x = Jet::variable(2, 3, 0, 0.4);
        let y = Jet::variable(2, 3, 1, -0.7);
        let m = vec![vec![&x.exp() + 1.0, &x * &y], vec![&x * &y, &(&y * &y) + 2.0]];
        let inv = inverse(&m).unwrap();
        let p = mat_mul(&m, &inv);
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((p[i][j].value() - target).abs() < 1e-14);
                for c in &p[i][j].coeffs()[1..] {
                    assert!(c.abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn cholesky_reassembles() {
        let x = Jet::variable(1, 2, 0, 0.3);
        let m = vec![vec![&x + 4.0, x.scale(0.5)], vec![x.scale(0.5), &x.exp() + 1.0]];
        let l = cholesky(&m).unwrap();
        let back = mat_mul(&l, &transpose(&l));
        for i in 0..2 {
            for j in 0..2 {
                for (a, b) in back[i][j].coeffs().iter().zip(m[i][j].coeffs()) {
                    assert!((a - b).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn signature_counts() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0, 3.0]);
        assert_eq!(signature(&m), (2, 1, 0));
        assert!((condition_number(&m) - 3.0).abs() < 1e-12);
    }
}
