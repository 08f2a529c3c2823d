//! N-anholonomic charts: a horizontal frame z_a = ρ_a^i ∂_i − N^b_a ∂_b and a
//! vertical frame v_b = ∂_b over coordinates (x, y).
//!
//! One chart type covers the prolongation of an algebroid (horizontal index =
//! fiber index of E, anchor ρ, structure C), vector bundles and manifolds
//! (ρ = identity, C = 0), and the dual prolongation over E* (y = p).

use std::sync::Arc;

use crate::algebroid::{prolongation_frame_from, AlgebroidSpec};
use crate::calculus::Frame;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::jets::{coordinate_jets, Jet};
use crate::linalg::{inverse, mat, t3, Mat, T3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    Prolongation,
    Bundle,
    Manifold,
    DualProlongation,
}

/// Source of N-connection coefficients N^b_a, returned as `[b][a]`.
///
/// `eval` receives coordinate jets (x, y) of some order K and returns jets of
/// order K − `order_loss()`.
pub trait NSource: Send + Sync {
    fn eval(&self, coords: &[Jet]) -> Result<Mat>;

    fn order_loss(&self) -> usize {
        0
    }
}

/// N given by explicit fields of (x, y).
pub struct FieldN {
    /// fields[b][a]
    pub fields: Vec<Vec<ScalarField>>,
}

impl NSource for FieldN {
    fn eval(&self, coords: &[Jet]) -> Result<Mat> {
        self.fields.iter().map(|r| r.iter().map(|f| f.eval_jet(coords)).collect()).collect()
    }
}

pub struct ZeroN {
    pub mv: usize,
    pub mh: usize,
}

impl NSource for ZeroN {
    fn eval(&self, coords: &[Jet]) -> Result<Mat> {
        let z = coords[0].lift(0.0);
        Ok(mat(self.mv, self.mh, |_, _| z.clone()))
    }
}

#[derive(Clone)]
pub struct Chart {
    pub kind: ChartKind,
    /// base coordinates x
    pub n: usize,
    /// horizontal frame size
    pub mh: usize,
    /// fiber coordinates y
    pub mv: usize,
    /// anchor and structure functions; `None` means ρ = identity and C = 0
    pub algebroid: Option<Arc<AlgebroidSpec>>,
    pub ncoef: Arc<dyn NSource>,
}

impl std::fmt::Debug for Chart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Chart({:?}, n={}, mh={}, mv={})", self.kind, self.n, self.mh, self.mv)
    }
}

impl Chart {
    pub fn prolongation(alg: Arc<AlgebroidSpec>, ncoef: Arc<dyn NSource>) -> Chart {
        Chart { kind: ChartKind::Prolongation, n: alg.n, mh: alg.m, mv: alg.m, algebroid: Some(alg), ncoef }
    }

    pub fn dual(alg: Arc<AlgebroidSpec>, ncoef: Arc<dyn NSource>) -> Chart {
        Chart { kind: ChartKind::DualProlongation, n: alg.n, mh: alg.m, mv: alg.m, algebroid: Some(alg), ncoef }
    }

    /// Bundle or manifold chart with base dimension n and fiber dimension mv.
    pub fn holonomic_base(kind: ChartKind, n: usize, mv: usize, ncoef: Arc<dyn NSource>) -> Chart {
        Chart { kind, n, mh: n, mv, algebroid: None, ncoef }
    }

    pub fn dim(&self) -> usize {
        self.n + self.mv
    }

    pub fn rank(&self) -> usize {
        self.mh + self.mv
    }

    /// Anchor and structure jets over the given coordinate jets.
    pub fn anchor_jets(&self, coords: &[Jet]) -> Result<(Mat, T3)> {
        match &self.algebroid {
            Some(a) => Ok((a.rho_jets(&coords[..self.n])?, a.c_jets(&coords[..self.n])?)),
            None => {
                let z = coords[0].lift(0.0);
                let one = coords[0].lift(1.0);
                let rho = mat(self.mh, self.n, |a, i| if a == i { one.clone() } else { z.clone() });
                let c = t3(self.mh, self.mh, self.mh, |_, _, _| z.clone());
                Ok((rho, c))
            }
        }
    }

    /// N-adapted frame data at `pt` = (x, y) with jets of order `order`
    /// (N itself one order higher).
    pub fn frame(&self, pt: &[f64], order: usize) -> Result<ChartFrame> {
        if pt.len() != self.dim() {
            return Err(Error::Dimension(format!("chart point of length {} (need {})", pt.len(), self.dim())));
        }
        let coords = coordinate_jets(pt, order + 1 + self.ncoef.order_loss());
        let nn = self.ncoef.eval(&coords)?;
        if nn.len() != self.mv || nn.iter().any(|r| r.len() != self.mh) {
            return Err(Error::Dimension(format!("N must be {}×{}", self.mv, self.mh)));
        }
        let nn: Mat = nn.iter().map(|r| r.iter().map(|j| j.truncate(order + 1)).collect()).collect();
        let low: Vec<Jet> = coords.iter().map(|j| j.truncate(order + 1)).collect();
        let (rho, c) = self.anchor_jets(&low)?;
        Ok(ChartFrame::assemble(self.n, self.mh, self.mv, rho, c, nn, &low[0], order))
    }
}

/// Frame data of a chart at one point.
#[derive(Clone, Debug)]
pub struct ChartFrame {
    pub n: usize,
    pub mh: usize,
    pub mv: usize,
    pub order: usize,
    /// ρ_a^i as [a][i]
    pub rho: Mat,
    /// C^e_ab as [e][a][b]
    pub c: T3,
    /// N^b_a as [b][a], order + 1
    pub nn: Mat,
    /// ∂N^c_a/∂y^b as [c][a][b]
    pub dn: T3,
    /// Ω^d_ab = z_a(N^d_b) − z_b(N^d_a), as [d][a][b]
    pub omega: T3,
    /// N-adapted frame: anchor images and anholonomy W^D_AB
    pub frame: Frame,
    /// the frame (z̃_a, ṽ_a) with N = 0
    pub plain: Frame,
}

impl ChartFrame {
    #[allow(clippy::too_many_arguments)]
    fn assemble(n: usize, mh: usize, mv: usize, rho: Mat, c: T3, nn: Mat, like: &Jet, order: usize) -> ChartFrame {
        let zero = like.truncate(order).lift(0.0);
        let one = like.truncate(order).lift(1.0);
        let vf = mat(mh + mv, n + mv, |a, mu| {
            if a < mh {
                if mu < n {
                    rho[a][mu].truncate(order)
                } else {
                    -nn[mu - n][a].truncate(order)
                }
            } else if mu == n + a - mh {
                one.clone()
            } else {
                zero.clone()
            }
        });
        let horizontal = |a: usize, f: &Jet| -> Jet {
            let mut acc = zero.clone();
            for i in 0..n {
                acc = &acc + &(&rho[a][i] * &f.derivative(i));
            }
            for b in 0..mv {
                acc = &acc - &(&nn[b][a] * &f.derivative(n + b));
            }
            acc.truncate(order)
        };
        let dn = t3(mv, mh, mv, |cc, a, b| nn[cc][a].derivative(n + b));
        let omega = t3(mv, mh, mh, |d, a, b| &horizontal(a, &nn[d][b]) - &horizontal(b, &nn[d][a]));
        let r = mh + mv;
        let w = t3(r, r, r, |d, a, b| match (d < mh, a < mh, b < mh) {
            (true, true, true) => c[d][a][b].truncate(order),
            (false, true, true) => {
                let dd = d - mh;
                let mut acc = -&omega[dd][a][b];
                for e in 0..mh {
                    acc = &acc + &(&c[e][a][b] * &nn[dd][e]);
                }
                acc.truncate(order)
            }
            (false, true, false) => dn[d - mh][a][b - mh].clone(),
            (false, false, true) => -&dn[d - mh][b][a - mh],
            _ => zero.clone(),
        });
        let plain = prolongation_frame_general(n, mh, mv, &rho, &c, like, order);
        ChartFrame { n, mh, mv, order, rho, c, nn, dn, omega, frame: Frame { vf, w }, plain }
    }

    /// c_A(f) in the N-adapted frame.
    pub fn act(&self, a: usize, f: &Jet) -> Jet {
        self.frame.act(a, f)
    }

    pub fn z(&self, a: usize, f: &Jet) -> Jet {
        self.frame.act(a, f)
    }

    pub fn v(&self, b: usize, f: &Jet) -> Jet {
        f.derivative(self.n + b)
    }

    pub fn rank(&self) -> usize {
        self.mh + self.mv
    }

    pub fn zero(&self) -> Jet {
        self.frame.vf[0][0].lift(0.0)
    }

    /// Anholonomy recomputed from the Leibniz bracket of the plain frame, with the
    /// N-adapted vectors written as z_a = z̃_a − N^b_a ṽ_b. Returns W[D][A][B].
    pub fn anholonomy_by_bracket(&self) -> T3 {
        let (mh, mv) = (self.mh, self.mv);
        let r = mh + mv;
        let like = &self.nn[0][0];
        let zero = like.lift(0.0);
        let one = like.lift(1.0);
        let comps: Vec<Vec<Jet>> = (0..r)
            .map(|a| {
                (0..r)
                    .map(|k| {
                        if a < mh {
                            if k == a {
                                one.clone()
                            } else if k >= mh {
                                -&self.nn[k - mh][a]
                            } else {
                                zero.clone()
                            }
                        } else if k == a {
                            one.clone()
                        } else {
                            zero.clone()
                        }
                    })
                    .collect()
            })
            .collect();
        let mut out = t3(r, r, r, |_, _, _| self.zero());
        for a in 0..r {
            for b in 0..r {
                let br = self.plain.bracket(&comps[a], &comps[b]);
                // back to the adapted basis: z̃_e = z_e + N^d_e v_d
                for d in 0..r {
                    out[d][a][b] = if d < mh {
                        br[d].clone()
                    } else {
                        let mut acc = br[d].clone();
                        for e in 0..mh {
                            acc = &acc + &(&self.nn[d - mh][e] * &br[e]);
                        }
                        acc
                    };
                }
            }
        }
        out
    }

    /// max |[X_A, X_B] − W^D_AB X_D| over anchor images (morphism defect).
    pub fn anchor_commutator_defect(&self) -> f64 {
        let r = self.rank();
        let dim = self.n + self.mv;
        let vf = &self.frame.vf;
        let mut worst = 0.0_f64;
        let along = |a: usize, f: &Jet| -> f64 { (0..dim).map(|mu| vf[a][mu].value() * f.derivative(mu).value()).sum() };
        for a in 0..r {
            for b in 0..r {
                for mu in 0..dim {
                    let lhs = along(a, &vf[b][mu]) - along(b, &vf[a][mu]);
                    let rhs: f64 = (0..r).map(|d| self.frame.w[d][a][b].value() * vf[d][mu].value()).sum();
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
        worst
    }
}

pub(crate) fn prolongation_frame_general(n: usize, mh: usize, mv: usize, rho: &Mat, c: &T3, like: &Jet, order: usize) -> Frame {
    if mh == mv {
        let f = prolongation_frame_from(n, mh, rho, c, like);
        return Frame {
            vf: f.vf.iter().map(|r| r.iter().map(|j| j.truncate(order)).collect()).collect(),
            w: f.w.iter().map(|m| m.iter().map(|r| r.iter().map(|j| j.truncate(order)).collect()).collect()).collect(),
        };
    }
    let zero = like.truncate(order).lift(0.0);
    let one = like.truncate(order).lift(1.0);
    let vf = mat(mh + mv, n + mv, |a, mu| {
        if a < mh {
            if mu < n {
                rho[a][mu].truncate(order)
            } else {
                zero.clone()
            }
        } else if mu == n + a - mh {
            one.clone()
        } else {
            zero.clone()
        }
    });
    let r = mh + mv;
    let w = t3(r, r, r, |d, a, b| if d < mh && a < mh && b < mh { c[d][a][b].truncate(order) } else { zero.clone() });
    Frame { vf, w }
}

/// Numeric N-adapted frame and coframe over the plain frame (z̃, ṽ).
#[derive(Debug, Clone)]
pub struct NFrame {
    /// vectors[A][K]: component of c_A on the plain frame element K
    pub vectors: Vec<Vec<f64>>,
    /// coframe[B][K]: component of c^B on the plain coframe element K
    pub coframe: Vec<Vec<f64>>,
    /// pairing[B][A] = c^B(c_A)
    pub pairing: Vec<Vec<f64>>,
}

pub fn n_frame(chart: &Chart, pt: &[f64]) -> Result<NFrame> {
    let f = chart.frame(pt, 0)?;
    let (mh, mv) = (chart.mh, chart.mv);
    let r = mh + mv;
    let nv = |b: usize, a: usize| f.nn[b][a].value();
    let vectors: Vec<Vec<f64>> = (0..r)
        .map(|a| {
            (0..r)
                .map(|k| {
                    if a < mh {
                        if k == a {
                            1.0
                        } else if k >= mh {
                            -nv(k - mh, a)
                        } else {
                            0.0
                        }
                    } else if k == a {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let coframe: Vec<Vec<f64>> = (0..r)
        .map(|b| {
            (0..r)
                .map(|k| {
                    if b < mh {
                        if k == b {
                            1.0
                        } else {
                            0.0
                        }
                    } else if k == b {
                        1.0
                    } else if k < mh {
                        nv(b - mh, k)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let pairing = (0..r).map(|b| (0..r).map(|a| (0..r).map(|k| coframe[b][k] * vectors[a][k]).sum()).collect()).collect();
    Ok(NFrame { vectors, coframe, pairing })
}

/// Ω^d_ab at a point, as [d][a][b].
pub fn n_curvature(chart: &Chart, pt: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    let f = chart.frame(pt, 0)?;
    Ok(f.omega.iter().map(|m| m.iter().map(|r| r.iter().map(|j| j.value()).collect()).collect()).collect())
}

/// Anholonomy coefficients split into their sources.
#[derive(Debug, Clone)]
pub struct AnholonomyReport {
    /// W[D][A][B]
    pub w: Vec<Vec<Vec<f64>>>,
    /// ∂N^c_a/∂y^b
    pub dn: Vec<Vec<Vec<f64>>>,
    pub c: Vec<Vec<Vec<f64>>>,
    pub omega: Vec<Vec<Vec<f64>>>,
}

fn vals3(t: &T3) -> Vec<Vec<Vec<f64>>> {
    t.iter().map(|m| m.iter().map(|r| r.iter().map(|j| j.value()).collect()).collect()).collect()
}

pub fn anholonomy(chart: &Chart, pt: &[f64]) -> Result<AnholonomyReport> {
    let f = chart.frame(pt, 0)?;
    Ok(AnholonomyReport { w: vals3(&f.frame.w), dn: vals3(&f.dn), c: vals3(&f.c), omega: vals3(&f.omega) })
}

/// N^i_b = N^a_b ρ_a^i: the coefficients induced on the vector bundle E.
pub fn n_lift_bundle(alg: &AlgebroidSpec, n_alg: &[Vec<f64>], x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let xj = coordinate_jets(x, 0);
    let rho = alg.rho_jets(&xj)?;
    let m = alg.m;
    Ok((0..alg.n).map(|i| (0..m).map(|b| (0..m).map(|a| n_alg[a][b] * rho[a][i].value()).sum()).collect()).collect())
}

/// Inverse of [`n_lift_bundle`] for a square invertible anchor.
pub fn n_unlift_bundle(alg: &AlgebroidSpec, n_bundle: &[Vec<f64>], x: &[f64]) -> Result<Vec<Vec<f64>>> {
    if alg.n != alg.m {
        return Err(Error::Precondition("anchor has no right inverse (non-square)".into()));
    }
    let xj = coordinate_jets(x, 0);
    let rho = alg.rho_jets(&xj)?;
    let inv = inverse(&rho).map_err(|_| Error::Precondition("anchor is not invertible".into()))?;
    let m = alg.m;
    // N^a_b = N^i_b (ρ⁻¹)_i^a
    Ok((0..m).map(|a| (0..m).map(|b| (0..alg.n).map(|i| n_bundle[i][b] * inv[i][a].value()).sum()).collect()).collect())
}

/// Berwald coefficients N̄^a_cb = ∂N^a_b/∂y^c as [a][c][b].
pub fn berwald_coefficients(chart: &Chart, pt: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    let f = chart.frame(pt, 0)?;
    Ok((0..chart.mv).map(|a| (0..chart.mv).map(|c| (0..chart.mh).map(|b| f.dn[a][b][c].value()).collect()).collect()).collect())
}

/// Berwald derivative of a vertical section B along X = X^a z_a + X̄^e v_e:
/// (D̄_X B)^a = X^b (z_b B^a + ∂_c N^a_b B^c) + X̄^e v_e B^a.
pub fn berwald_derivative(chart: &Chart, xh: &[ScalarField], xv: &[ScalarField], b: &[ScalarField], pt: &[f64]) -> Result<Vec<f64>> {
    if xh.len() != chart.mh || xv.len() != chart.mv || b.len() != chart.mv {
        return Err(Error::Dimension("Berwald derivative arguments have wrong lengths".into()));
    }
    let f = chart.frame(pt, 0)?;
    let cj = coordinate_jets(pt, 1);
    let eval = |fs: &[ScalarField]| -> Result<Vec<Jet>> { fs.iter().map(|s| s.eval_jet(&cj)).collect() };
    let (xh, xv, bj) = (eval(xh)?, eval(xv)?, eval(b)?);
    Ok((0..chart.mv)
        .map(|a| {
            let mut acc = 0.0;
            for bb in 0..chart.mh {
                let mut inner = f.z(bb, &bj[a]).value();
                for c in 0..chart.mv {
                    inner += f.dn[a][bb][c].value() * bj[c].value();
                }
                acc += xh[bb].value() * inner;
            }
            for e in 0..chart.mv {
                acc += xv[e].value() * f.v(e, &bj[a]).value();
            }
            acc
        })
        .collect())
}

/// Vielbein acting on base coordinates (e_i^ī) and on fiber indices (e_b^b̄),
/// fields of (x, u).
pub struct FrameTransform {
    pub base: Option<Vec<Vec<ScalarField>>>,
    pub fiber: Vec<Vec<ScalarField>>,
}

/// Adapted anchor ρ̂_b^i, structure functions Ĉ^f_db and the residuals of the
/// transformed structure equations.
#[derive(Debug, Clone)]
pub struct AdaptedStructure {
    pub rho_hat: Vec<Vec<f64>>,
    pub c_hat: Vec<Vec<Vec<f64>>>,
    /// anchor equation with Ĉ = e e e C, derivatives acting on everything
    pub res_anchor: f64,
    /// anchor equation with the derivatives of the vielbein removed
    pub res_anchor_compensated: f64,
    /// Jacobi equation including the Q-term
    pub res_jacobi: f64,
}

/// Transforms anchor and structure functions by a vielbein; `n_bundle` gives
/// N^b_i ([b][i]) used in the adapted derivative e_j = e_j^j̄ (∂_j̄ − N^b_j̄ ∂_b).
pub fn n_adapt_structure(
    alg: &AlgebroidSpec,
    n_bundle: &dyn NSource,
    vielbein: &FrameTransform,
    x: &[f64],
    u: &[f64],
) -> Result<AdaptedStructure> {
    let (n, m) = (alg.n, alg.m);
    let mut p = x.to_vec();
    p.extend_from_slice(u);
    let cj = coordinate_jets(&p, 1 + n_bundle.order_loss());
    let nb: Mat = n_bundle.eval(&cj)?.iter().map(|r| r.iter().map(|j| j.truncate(1)).collect()).collect();
    let cj: Vec<Jet> = cj.iter().map(|j| j.truncate(1)).collect();
    let rho = alg.rho_jets(&cj[..n])?;
    let c = alg.c_jets(&cj[..n])?;
    let one = cj[0].lift(1.0);
    let zero = cj[0].lift(0.0);
    let eb: Mat = match &vielbein.base {
        Some(fs) => fs.iter().map(|r| r.iter().map(|f| f.eval_jet(&cj)).collect()).collect::<Result<_>>()?,
        None => mat(n, n, |i, j| if i == j { one.clone() } else { zero.clone() }),
    };
    let ef: Mat = vielbein.fiber.iter().map(|r| r.iter().map(|f| f.eval_jet(&cj)).collect()).collect::<Result<_>>()?;
    if ef.len() != m || ef.iter().any(|r| r.len() != m) || eb.len() != n {
        return Err(Error::Dimension("vielbein has wrong shape".into()));
    }
    let singular = |_| Error::Precondition("singular vielbein".into());
    let eb_inv = inverse(&eb).map_err(singular)?; // [ī][i] = e^i_ī
    let ef_inv = inverse(&ef).map_err(singular)?; // [b̄][b] = e^b_b̄
    let rho_hat = mat(m, n, |b, i| {
        let mut acc = zero.clone();
        for ib in 0..n {
            for bb in 0..m {
                acc = &acc + &(&(&eb_inv[ib][i] * &ef[b][bb]) * &rho[bb][ib]);
            }
        }
        acc
    });
    let c_hat = t3(m, m, m, |f, d, b| {
        let mut acc = zero.clone();
        for fb in 0..m {
            for db in 0..m {
                for bb in 0..m {
                    let k = &(&ef_inv[fb][f] * &ef[d][db]) * &ef[b][bb];
                    acc = &acc + &(&k * &c[fb][db][bb]);
                }
            }
        }
        acc
    });
    // adapted derivative of the base frame
    let ej = |j: usize, g: &Jet| -> f64 {
        (0..n)
            .map(|jb| {
                let mut d = g.derivative(jb).value();
                for b in 0..m {
                    d -= nb[b][jb].value() * g.derivative(n + b).value();
                }
                eb[j][jb].value() * d
            })
            .sum()
    };
    let along = |a: usize, g: &Jet| -> f64 { (0..n).map(|j| rho_hat[a][j].value() * ej(j, g)).sum() };

    let mut res_anchor = 0.0_f64;
    let mut res_comp = 0.0_f64;
    for a in 0..m {
        for b in 0..m {
            for i in 0..n {
                let rhs: f64 = (0..m).map(|e| rho_hat[e][i].value() * c_hat[e][a][b].value()).sum();
                let lhs = along(a, &rho_hat[b][i]) - along(b, &rho_hat[a][i]);
                res_anchor = res_anchor.max((lhs - rhs).abs());
                // derivative of the original anchor only
                let frozen = |a: usize, b: usize| -> f64 {
                    let mut s = 0.0;
                    for ib in 0..n {
                        for bb in 0..m {
                            s += eb_inv[ib][i].value() * ef[b][bb].value() * along(a, &rho[bb][ib]);
                        }
                    }
                    s
                };
                res_comp = res_comp.max((frozen(a, b) - frozen(b, a) - rhs).abs());
            }
        }
    }

    // Q^{f b' e'}_{f' b e j} = e^{b'}_b̄ e^{e'}_ē e_{f'}^f̄ e_j(e_b^b̄ e_e^ē e^f_f̄)
    let mut res_jacobi = 0.0_f64;
    let qterm = |a: usize, b: usize, e: usize, f: usize| -> f64 {
        let mut total = 0.0;
        for bb in 0..m {
            for eb_ in 0..m {
                for fb in 0..m {
                    let prod = &(&ef[b][bb] * &ef[e][eb_]) * &ef_inv[fb][f];
                    let dprod = along(a, &prod);
                    if dprod == 0.0 {
                        continue;
                    }
                    for f1 in 0..m {
                        for b1 in 0..m {
                            for e1 in 0..m {
                                total += c_hat[f1][b1][e1].value()
                                    * ef_inv[bb][b1].value()
                                    * ef_inv[eb_][e1].value()
                                    * ef[f1][fb].value()
                                    * dprod;
                            }
                        }
                    }
                }
            }
        }
        total
    };
    for a in 0..m {
        for b in 0..m {
            for e in 0..m {
                for f in 0..m {
                    let mut s = 0.0;
                    for (p, q, r) in [(a, b, e), (b, e, a), (e, a, b)] {
                        s += along(p, &c_hat[f][q][r]);
                        s += (0..m).map(|g| c_hat[f][p][g].value() * c_hat[g][q][r].value()).sum::<f64>();
                        s -= qterm(p, q, r, f);
                    }
                    res_jacobi = res_jacobi.max(s.abs());
                }
            }
        }
    }
    Ok(AdaptedStructure {
        rho_hat: rho_hat.iter().map(|r| r.iter().map(|j| j.value()).collect()).collect(),
        c_hat: vals3(&c_hat),
        res_anchor,
        res_anchor_compensated: res_comp,
        res_jacobi,
    })
}
