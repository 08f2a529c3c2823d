//! Sampling, quadrature and fixed-step integration helpers.

use crate::error::{Error, Result};

/// Axis-aligned box `[lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<DomainBox> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension("domain box bounds differ in length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b)) {
            return Err(Error::Validation("domain box has lo > hi".into()));
        }
        Ok(DomainBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// `count` quasi-random points (Halton sequence, skipping the origin term).
    pub fn halton(&self, count: usize, skip: usize) -> Vec<Vec<f64>> {
        (0..count)
            .map(|k| {
                (0..self.dim())
                    .map(|d| {
                        let h = radical_inverse(k + 1 + skip, PRIMES[d % PRIMES.len()]);
                        self.lo[d] + h * (self.hi[d] - self.lo[d])
                    })
                    .collect()
            })
            .collect()
    }
}

const PRIMES: [usize; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Adaptive Simpson quadrature of a vector-valued integrand, error control on the max norm.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    let fa = f(a)?;
    let fm = f(0.5 * (a + b))?;
    let fb = f(b)?;
    let whole = simpson(a, b, &fa, &fm, &fb);
    let mut evals = 3usize;
    asr(f, a, b, &fa, &fm, &fb, &whole, tol, 50, &mut evals)
}

fn simpson(a: f64, b: f64, fa: &[f64], fm: &[f64], fb: &[f64]) -> Vec<f64> {
    let h = (b - a) / 6.0;
    fa.iter().zip(fm).zip(fb).map(|((x, y), z)| h * (x + 4.0 * y + z)).collect()
}

#[allow(clippy::too_many_arguments)]
fn asr<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: &[f64],
    fm: &[f64],
    fb: &[f64],
    whole: &[f64],
    tol: f64,
    depth: usize,
    evals: &mut usize,
) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    let m = 0.5 * (a + b);
    let flm = f(0.5 * (a + m))?;
    let frm = f(0.5 * (m + b))?;
    *evals += 2;
    let left = simpson(a, m, fa, &flm, fm);
    let right = simpson(m, b, fm, &frm, fb);
    let err = left.iter().zip(&right).zip(whole).fold(0.0_f64, |e, ((l, r), w)| e.max((l + r - w).abs()));
    if err <= 15.0 * tol || (b - a).abs() < 1e-14 {
        return Ok(left.iter().zip(&right).zip(whole).map(|((l, r), w)| l + r + (l + r - w) / 15.0).collect());
    }
    if depth == 0 || *evals > 2_000_000 {
        return Err(Error::Convergence { iterations: *evals, residual: err });
    }
    let mut l = asr(f, a, m, fa, &flm, fm, &left, tol / 2.0, depth - 1, evals)?;
    let r = asr(f, m, b, fm, &frm, fb, &right, tol / 2.0, depth - 1, evals)?;
    for (x, y) in l.iter_mut().zip(r) {
        *x += y;
    }
    Ok(l)
}

/// One classical Runge–Kutta step of ẏ = f(y).
pub fn rk4_step<F>(f: &F, y: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let k1 = f(y)?;
    let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, k)| a + 0.5 * dt * k).collect();
    let k2 = f(&y2)?;
    let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, k)| a + 0.5 * dt * k).collect();
    let k3 = f(&y3)?;
    let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, k)| a + dt * k).collect();
    let k4 = f(&y4)?;
    let out: Vec<f64> = (0..y.len()).map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("integrator state".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_stays_in_box() {
        let b = DomainBox::new(vec![-1.0, 2.0], vec![1.0, 3.0]).unwrap();
        for p in b.halton(64, 0) {
            assert!(p[0] >= -1.0 && p[0] <= 1.0 && p[1] >= 2.0 && p[1] <= 3.0);
        }
    }

    #[test]
    fn simpson_integrates_exp() {
        let r = adaptive_simpson(&|t: f64| Ok(vec![t.exp(), t * t]), 0.0, 1.0, 1e-12).unwrap();
        assert!((r[0] - (1f64.exp() - 1.0)).abs() < 1e-11);
        assert!((r[1] - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn rk4_harmonic_oscillator() {
        let f = |y: &[f64]| Ok(vec![y[1], -y[0]]);
        let mut y = vec![1.0, 0.0];
        for _ in 0..1000 {
            y = rk4_step(&f, &y, 1e-3).unwrap();
        }
        assert!((y[0] - 1f64.cos()).abs() < 1e-12);
    }
}
