//! Exterior calculus over an arbitrary local frame of an algebroid.
//!
//! A [`Frame`] is a list of vector fields c_A (their anchor images, expanded over
//! coordinate derivatives) together with structure functions W^D_AB defined by
//! [c_A, c_B] = W^D_AB c_D. The bracket is part of the data because an anchor
//! need not be injective.

use crate::jets::Jet;
use crate::linalg::{Mat, T3};

#[derive(Clone, Debug)]
pub struct Frame {
    /// vf[A][μ]: coefficient of ∂_μ in the anchor image of c_A.
    pub vf: Mat,
    /// w[D][A][B]
    pub w: T3,
}

impl Frame {
    pub fn rank(&self) -> usize {
        self.vf.len()
    }

    /// c_A(f) = Σ_μ vf[A][μ] ∂_μ f, one order lower than f.
    pub fn act(&self, a: usize, f: &Jet) -> Jet {
        let mut acc: Option<Jet> = None;
        for (mu, coef) in self.vf[a].iter().enumerate() {
            if coef.coeffs().iter().all(|&x| x == 0.0) {
                continue;
            }
            let t = coef * &f.derivative(mu);
            acc = Some(match acc {
                Some(s) => &s + &t,
                None => t,
            });
        }
        acc.unwrap_or_else(|| f.derivative(0).lift(0.0))
    }

    /// Bracket of sections X = X^A c_A, Y = Y^A c_A via the Leibniz rule.
    pub fn bracket(&self, x: &[Jet], y: &[Jet]) -> Vec<Jet> {
        let r = self.rank();
        let dx: Vec<Jet> = (0..r).map(|d| self.apply(x, &y[d])).collect();
        let dy: Vec<Jet> = (0..r).map(|d| self.apply(y, &x[d])).collect();
        (0..r)
            .map(|d| {
                let mut acc = &dx[d] - &dy[d];
                for a in 0..r {
                    for b in 0..r {
                        let t = &(&x[a] * &y[b]) * &self.w[d][a][b];
                        acc = &acc + &t;
                    }
                }
                acc
            })
            .collect()
    }

    /// Derivative of f along the anchor image of X = X^A c_A.
    pub fn apply(&self, x: &[Jet], f: &Jet) -> Jet {
        let mut acc = f.derivative(0).lift(0.0);
        for (a, xa) in x.iter().enumerate() {
            acc = &acc + &(xa * &self.act(a, f));
        }
        acc
    }
}

/// A k-form stored as a full antisymmetric array over frame indices, row-major.
#[derive(Clone, Debug)]
pub struct Form {
    pub rank: usize,
    pub degree: usize,
    pub comps: Vec<Jet>,
}

fn flat(rank: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * rank + i)
}

fn unflat(rank: usize, degree: usize, mut k: usize) -> Vec<usize> {
    let mut out = vec![0; degree];
    for slot in out.iter_mut().rev() {
        *slot = k % rank;
        k /= rank;
    }
    out
}

impl Form {
    pub fn scalar(f: Jet, rank: usize) -> Form {
        Form { rank, degree: 0, comps: vec![f] }
    }

    pub fn one_form(comps: Vec<Jet>) -> Form {
        Form { rank: comps.len(), degree: 1, comps }
    }

    /// A 2-form from a full matrix (assumed antisymmetric).
    pub fn two_form(m: &Mat) -> Form {
        let rank = m.len();
        Form { rank, degree: 2, comps: m.iter().flatten().cloned().collect() }
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.comps[flat(self.rank, idx)]
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0_f64, |a, x| a.max(x.value().abs()))
    }

    /// Largest violation of antisymmetry under a transposition of adjacent slots.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for k in 0..self.comps.len() {
            let idx = unflat(self.rank, self.degree, k);
            for s in 0..self.degree.saturating_sub(1) {
                let mut t = idx.clone();
                t.swap(s, s + 1);
                let d = self.comps[k].value() + self.get(&t).value();
                worst = worst.max(d.abs());
            }
        }
        worst
    }
}

/// d of a form: alternating sum of frame derivatives plus bracket terms
/// (Chevalley–Eilenberg); drops the jet order by one.
pub fn exterior_d(frame: &Frame, w: &Form) -> Form {
    let r = frame.rank();
    let k = w.degree;
    let len = r.pow((k + 1) as u32);
    let zero = frame.act(0, &w.comps[0]).lift(0.0);
    let mut comps = Vec::with_capacity(len);
    for lin in 0..len {
        let idx = unflat(r, k + 1, lin);
        let mut acc = zero.clone();
        // repeated indices give zero by antisymmetry
        let mut distinct = true;
        for i in 0..idx.len() {
            for j in i + 1..idx.len() {
                if idx[i] == idx[j] {
                    distinct = false;
                }
            }
        }
        if !distinct {
            comps.push(acc);
            continue;
        }
        for i in 0..=k {
            let rest: Vec<usize> = idx.iter().enumerate().filter(|&(p, _)| p != i).map(|(_, &v)| v).collect();
            let t = frame.act(idx[i], w.get(&rest));
            acc = if i % 2 == 0 { &acc + &t } else { &acc - &t };
        }
        for i in 0..=k {
            for j in i + 1..=k {
                let rest: Vec<usize> = idx.iter().enumerate().filter(|&(p, _)| p != i && p != j).map(|(_, &v)| v).collect();
                let mut t = zero.clone();
                for f in 0..r {
                    let c = &frame.w[f][idx[i]][idx[j]];
                    if c.coeffs().iter().all(|&x| x == 0.0) {
                        continue;
                    }
                    let mut full = vec![f];
                    full.extend_from_slice(&rest);
                    t = &t + &(c * w.get(&full));
                }
                acc = if (i + j) % 2 == 0 { &acc + &t } else { &acc - &t };
            }
        }
        comps.push(acc);
    }
    Form { rank: r, degree: k + 1, comps }
}

/// Interior product i_X ω (contraction in the first slot).
pub fn interior(x: &[Jet], w: &Form) -> Form {
    assert!(w.degree > 0, "interior product of a function");
    let r = w.rank;
    let len = r.pow((w.degree - 1) as u32);
    let comps = (0..len)
        .map(|lin| {
            let rest = unflat(r, w.degree - 1, lin);
            let mut acc = w.comps[0].lift(0.0);
            for (a, xa) in x.iter().enumerate() {
                let mut full = vec![a];
                full.extend_from_slice(&rest);
                acc = &acc + &(xa * w.get(&full));
            }
            acc
        })
        .collect();
    Form { rank: r, degree: w.degree - 1, comps }
}

/// Lie derivative by the Cartan formula L_X = i_X d + d i_X.
pub fn lie_derivative(frame: &Frame, x: &[Jet], w: &Form) -> Form {
    let a = interior(x, &exterior_d(frame, w));
    if w.degree == 0 {
        return a;
    }
    let b = exterior_d(frame, &interior(x, w));
    Form { rank: a.rank, degree: a.degree, comps: a.comps.iter().zip(&b.comps).map(|(p, q)| p + q).collect() }
}

/// α ∧ β for one-forms: (α∧β)_AB = α_A β_B − α_B β_A.
pub fn wedge11(a: &[Jet], b: &[Jet]) -> Mat {
    let r = a.len();
    (0..r).map(|i| (0..r).map(|j| &(&a[i] * &b[j]) - &(&a[j] * &b[i])).collect()).collect()
}
