//! Lie algebroid data: anchor ρ_a^i(x) and structure functions C^f_ab(x).

use std::sync::Arc;

use crate::calculus::{exterior_d, Form, Frame};
use crate::error::{Error, Result};
use crate::field::{constant, fn_field, ScalarField};
use crate::jets::{coordinate_jets, Jet};
use crate::linalg::{mat, t3, Mat, T3};
use crate::numeric::DomainBox;

/// Relative tolerance for the antisymmetry of C checked at every evaluation.
const ANTISYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone)]
pub struct AlgebroidSpec {
    pub n: usize,
    pub m: usize,
    /// rho[a][i] = ρ_a^i, fields of x.
    pub rho: Vec<Vec<ScalarField>>,
    /// c[f][a][b] = C^f_ab, fields of x.
    pub c: Vec<Vec<Vec<ScalarField>>>,
    pub domain: Option<DomainBox>,
}

impl std::fmt::Debug for AlgebroidSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "AlgebroidSpec(n={}, m={})", self.n, self.m)
    }
}

impl AlgebroidSpec {
    pub fn new(n: usize, m: usize, rho: Vec<Vec<ScalarField>>, c: Vec<Vec<Vec<ScalarField>>>) -> Result<Self> {
        if rho.len() != m || rho.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(format!("anchor must be {m}×{n}")));
        }
        if c.len() != m || c.iter().any(|r| r.len() != m || r.iter().any(|s| s.len() != m)) {
            return Err(Error::Dimension(format!("structure functions must be {m}×{m}×{m}")));
        }
        for f in rho.iter().flatten().chain(c.iter().flatten().flatten()) {
            if f.arity() != n {
                return Err(Error::Dimension(format!("algebroid field of arity {} on a base of dimension {n}", f.arity())));
            }
        }
        Ok(AlgebroidSpec { n, m, rho, c, domain: None })
    }

    pub fn with_domain(mut self, domain: DomainBox) -> Self {
        self.domain = Some(domain);
        self
    }

    /// The tangent bundle algebroid: ρ = identity, C = 0.
    pub fn trivial(n: usize) -> Self {
        let rho = (0..n).map(|a| (0..n).map(|i| constant(n, if a == i { 1.0 } else { 0.0 })).collect()).collect();
        let c = (0..n).map(|_| (0..n).map(|_| (0..n).map(|_| constant(n, 0.0)).collect()).collect()).collect();
        AlgebroidSpec { n, m: n, rho, c, domain: None }
    }

    /// Constant anchor and structure constants.
    pub fn constant(n: usize, m: usize, rho: &[Vec<f64>], c: &[Vec<Vec<f64>>]) -> Result<Self> {
        let rf = rho.iter().map(|r| r.iter().map(|&v| constant(n, v)).collect()).collect();
        let cf = c.iter().map(|s| s.iter().map(|r| r.iter().map(|&v| constant(n, v)).collect()).collect()).collect();
        AlgebroidSpec::new(n, m, rf, cf)
    }

    /// so(3) acting on R³ by rotations: ρ_a^i = ε_{aik} x^k, C^c_ab = ε_abc.
    pub fn so3_action() -> Self {
        let rho = (0..3)
            .map(|a| {
                (0..3)
                    .map(|i| {
                        let terms: Vec<(usize, f64)> = (0..3)
                            .filter_map(|k| {
                                let e = levi_civita(a, i, k);
                                (e != 0.0).then_some((k, e))
                            })
                            .collect();
                        fn_field(3, "eps x", move |x: &[Jet]| {
                            let mut acc = x[0].lift(0.0);
                            for &(k, e) in &terms {
                                acc = &acc + &x[k].scale(e);
                            }
                            Ok(acc)
                        })
                    })
                    .collect()
            })
            .collect();
        let c = (0..3).map(|f| (0..3).map(|a| (0..3).map(|b| constant(3, levi_civita(a, b, f))).collect()).collect()).collect();
        AlgebroidSpec { n: 3, m: 3, rho, c, domain: None }
    }

    fn check_x(&self, x: &[Jet]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!("base point of length {} for n = {}", x.len(), self.n)));
        }
        Ok(())
    }

    /// ρ_a^i evaluated on base-coordinate jets (which may live in a larger space).
    pub fn rho_jets(&self, x: &[Jet]) -> Result<Mat> {
        self.check_x(x)?;
        self.rho.iter().map(|r| r.iter().map(|f| f.eval_jet(x)).collect()).collect()
    }

    /// C^f_ab on base-coordinate jets; antisymmetry in (a, b) is checked.
    pub fn c_jets(&self, x: &[Jet]) -> Result<T3> {
        self.check_x(x)?;
        let c: T3 = self
            .c
            .iter()
            .map(|s| s.iter().map(|r| r.iter().map(|f| f.eval_jet(x)).collect()).collect::<Result<Mat>>())
            .collect::<Result<T3>>()?;
        for f in 0..self.m {
            for a in 0..self.m {
                for b in 0..self.m {
                    let (p, q) = (c[f][a][b].value(), c[f][b][a].value());
                    if (p + q).abs() > ANTISYMMETRY_TOL * (1.0 + p.abs().max(q.abs())) {
                        return Err(Error::Validation(format!(
                            "structure functions not antisymmetric: C^{f}_{a}{b} = {p}, C^{f}_{b}{a} = {q}"
                        )));
                    }
                }
            }
        }
        Ok(c)
    }

    /// The algebroid itself as a frame over the base coordinates.
    pub fn base_frame(&self, x: &[f64], order: usize) -> Result<Frame> {
        let xj = coordinate_jets(x, order);
        Ok(Frame { vf: self.rho_jets(&xj)?, w: self.c_jets(&xj)? })
    }

    /// Residuals of the structure equations: anchor morphism (res1[a][b][i]) and
    /// Jacobi (res2[a][b][c][d], cyclic in a, b, c).
    pub fn structure_residuals(&self, x: &[f64]) -> Result<(Vec<Vec<Vec<f64>>>, Vec<Vec<Vec<Vec<f64>>>>)> {
        let xj = coordinate_jets(x, 1);
        let rho = self.rho_jets(&xj)?;
        let c = self.c_jets(&xj)?;
        let (n, m) = (self.n, self.m);
        let along = |a: usize, f: &Jet| -> f64 { (0..n).map(|j| rho[a][j].value() * f.derivative(j).value()).sum() };
        let res1 = (0..m)
            .map(|a| {
                (0..m)
                    .map(|b| {
                        (0..n)
                            .map(|i| {
                                let anchor: f64 = (0..m).map(|e| rho[e][i].value() * c[e][a][b].value()).sum();
                                along(a, &rho[b][i]) - along(b, &rho[a][i]) - anchor
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let term = |a: usize, b: usize, cc: usize, d: usize| -> f64 {
            let quad: f64 = (0..m).map(|f| c[d][a][f].value() * c[f][b][cc].value()).sum();
            along(a, &c[d][b][cc]) + quad
        };
        let res2 = (0..m)
            .map(|a| {
                (0..m)
                    .map(|b| (0..m).map(|cc| (0..m).map(|d| term(a, b, cc, d) + term(b, cc, a, d) + term(cc, a, b, d)).collect()).collect())
                    .collect()
            })
            .collect();
        Ok((res1, res2))
    }

    /// max |res1|, max |res2|.
    pub fn structure_residual_norms(&self, x: &[f64]) -> Result<(f64, f64)> {
        let (r1, r2) = self.structure_residuals(x)?;
        let m1 = r1.iter().flatten().flatten().fold(0.0_f64, |a, v| a.max(v.abs()));
        let m2 = r2.iter().flatten().flatten().flatten().fold(0.0_f64, |a, v| a.max(v.abs()));
        Ok((m1, m2))
    }

    /// ρ(s)^i = s^a ρ_a^i.
    pub fn anchor_apply(&self, s: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let xj = coordinate_jets(x, 0);
        let rho = self.rho_jets(&xj)?;
        Ok((0..self.n).map(|i| (0..self.m).map(|a| s[a] * rho[a][i].value()).sum()).collect())
    }

    /// d^E of a form whose components are jets over the base coordinates.
    pub fn exterior_d(&self, x: &[f64], w: &Form) -> Result<Form> {
        let order = w.comps.iter().map(|c| c.order()).max().unwrap_or(1);
        let frame = self.base_frame(x, order)?;
        Ok(exterior_d(&frame, w))
    }

    /// Vertical and complete lifts of a section s(x) at (x, u).
    pub fn lifts(&self, s: &[ScalarField], x: &[f64], u: &[f64]) -> Result<Lifts> {
        if s.len() != self.m || u.len() != self.m {
            return Err(Error::Dimension("section and fiber point must have m components".into()));
        }
        let xj = coordinate_jets(x, 1);
        let rho = self.rho_jets(&xj)?;
        let c = self.c_jets(&xj)?;
        let sj: Vec<Jet> = s.iter().map(|f| f.eval_jet(&xj)).collect::<Result<_>>()?;
        let (n, m) = (self.n, self.m);
        let base: Vec<f64> = (0..n).map(|i| (0..m).map(|a| sj[a].value() * rho[a][i].value()).sum()).collect();
        let fiber: Vec<f64> = (0..m)
            .map(|b| {
                (0..m)
                    .map(|a| {
                        let ds: f64 = (0..n).map(|i| rho[a][i].value() * sj[b].derivative(i).value()).sum();
                        let sc: f64 = (0..m).map(|d| sj[d].value() * c[b][d][a].value()).sum();
                        (ds - sc) * u[a]
                    })
                    .sum()
            })
            .collect();
        Ok(Lifts { vertical: sj.iter().map(|j| j.value()).collect(), complete_base: base, complete_fiber: fiber })
    }

    /// Frame (z̃_a, ṽ_a) of the prolongation over E with coordinates (x, u).
    pub fn prolongation_frame(&self, x: &[f64], u: &[f64], order: usize) -> Result<Frame> {
        let mut p = x.to_vec();
        p.extend_from_slice(u);
        let cj = coordinate_jets(&p, order);
        let rho = self.rho_jets(&cj[..self.n])?;
        let c = self.c_jets(&cj[..self.n])?;
        Ok(prolongation_frame_from(self.n, self.m, &rho, &c, &cj[0]))
    }

    /// Numeric expansion of the prolongation frame at p.
    pub fn prolong_frame(&self, x: &[f64], u: &[f64]) -> Result<ProlongFrame> {
        let f = self.prolongation_frame(x, u, 0)?;
        let (n, m) = (self.n, self.m);
        let mut elements = Vec::with_capacity(2 * m);
        for a in 0..2 * m {
            let mut section = vec![0.0; m];
            if a < m {
                section[a] = 1.0;
            }
            let tangent: Vec<f64> = f.vf[a].iter().map(|j| j.value()).collect();
            elements.push((section, tangent));
        }
        // coframe: z̃^a reads the E-component, ṽ^a reads the ∂/∂u^a component
        let pairing =
            (0..2 * m).map(|b| (0..2 * m).map(|a| if b < m { elements[a].0[b] } else { elements[a].1[n + b - m] }).collect()).collect();
        Ok(ProlongFrame { elements, pairing })
    }
}

/// Vertical and complete lifts of a section, numerically.
#[derive(Debug, Clone, PartialEq)]
pub struct Lifts {
    /// ^v s components along ∂/∂u^a.
    pub vertical: Vec<f64>,
    /// base part of ^c s, along ∂/∂x^i.
    pub complete_base: Vec<f64>,
    /// fiber part of ^c s, along ∂/∂u^b.
    pub complete_fiber: Vec<f64>,
}

/// Frame elements of the prolongation as (E-component, tangent vector on E) pairs.
#[derive(Debug, Clone)]
pub struct ProlongFrame {
    pub elements: Vec<(Vec<f64>, Vec<f64>)>,
    /// pairing[B][A] = c̃^B(c̃_A)
    pub pairing: Vec<Vec<f64>>,
}

pub(crate) fn prolongation_frame_from(n: usize, m: usize, rho: &Mat, c: &T3, like: &Jet) -> Frame {
    let zero = like.lift(0.0);
    let one = like.lift(1.0);
    let vf = mat(2 * m, n + m, |a, mu| {
        if a < m {
            if mu < n {
                rho[a][mu].clone()
            } else {
                zero.clone()
            }
        } else if mu == n + a - m {
            one.clone()
        } else {
            zero.clone()
        }
    });
    let w = t3(2 * m, 2 * m, 2 * m, |d, a, b| if d < m && a < m && b < m { c[d][a][b].clone() } else { zero.clone() });
    Frame { vf, w }
}

/// SODE test: ξ (components on z̃ then ṽ) is second order iff its z̃ part equals u.
pub fn sode_check(xi: &[f64], u: &[f64]) -> (bool, f64) {
    let m = u.len();
    let residual = (0..m).fold(0.0_f64, |a, i| a.max((xi[i] - u[i]).abs()));
    (residual <= 1e-12 * (1.0 + u.iter().fold(0.0_f64, |a, v| a.max(v.abs()))), residual)
}

/// Liouville section Δ = u^a ṽ_a, components on (z̃, ṽ).
pub fn liouville(u: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; u.len()];
    v.extend_from_slice(u);
    v
}

/// Vertical endomorphism S(z̃_a) = ṽ_a, S(ṽ_a) = 0, applied to components.
pub fn vertical_endomorphism(xi: &[f64]) -> Vec<f64> {
    let m = xi.len() / 2;
    let mut v = vec![0.0; m];
    v.extend_from_slice(&xi[..m]);
    v
}

pub fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

pub type SharedAlgebroid = Arc<AlgebroidSpec>;
