//! Hamilton structures on the prolongation over the dual bundle, with
//! coordinates (x, p).
//!
//! The dual frame is z̊_a = ρ_a^i ∂_i, v̊^a = ∂/∂p_a, so [z̊_a, z̊_b] = C^e_ab z̊_e.
//! The linear Poisson structure is
//! {f, w} = ρ_a^i (∂f/∂p_a ∂_i w − ∂_i f ∂w/∂p_a) + p_e C^e_ab ∂f/∂p_a ∂w/∂p_b,
//! and observables evolve by ḟ = {h, f}.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::algebroid::AlgebroidSpec;
use crate::calculus::{exterior_d, Form};
use crate::error::{Error, Result};
use crate::field::{Field, ScalarField};
use crate::geometry::{
    berwald_dconnection, canonical_dconnection, f_compatible_dconnection, nonmetricity, DConnValues, DMetric, MetricSource,
};
use crate::jets::{coordinate_jets, Jet};
use crate::linalg::{check_conditioning, inverse, mat, sum, Mat, T3};
use crate::mechanics::{compatibility, run_flow, LagrangianField, Trajectory};
use crate::nconnection::{Chart, NSource, ZeroN};

/// Poisson bracket of two functions given as jets over (x, p) coordinates.
/// `rho`, `c` and `p` may have any order; the result has the order of the
/// first derivatives.
pub fn bracket_jets(n: usize, m: usize, rho: &Mat, c: &T3, p: &[Jet], f: &Jet, w: &Jet) -> Jet {
    let fx: Vec<Jet> = (0..n).map(|i| f.derivative(i)).collect();
    let wx: Vec<Jet> = (0..n).map(|i| w.derivative(i)).collect();
    let fp: Vec<Jet> = (0..m).map(|a| f.derivative(n + a)).collect();
    let wp: Vec<Jet> = (0..m).map(|a| w.derivative(n + a)).collect();
    let k = fx.first().or(fp.first()).map(|j| j.order()).unwrap_or(0).min(wx.first().or(wp.first()).map(|j| j.order()).unwrap_or(0));
    let zero = f.lift(0.0).truncate(k);
    // {f, w} = T(f, w) − T(w, f), so antisymmetry holds bit for bit
    let half = |fp: &[Jet], wx: &[Jet], wp: &[Jet]| -> Jet {
        let mut acc = zero.clone();
        for a in 0..m {
            for i in 0..n {
                acc = &acc + &(&rho[a][i].truncate(k) * &(&fp[a] * &wx[i]));
            }
        }
        for a in 0..m {
            for b in 0..m {
                let pc = sum(&zero, m, |e| &p[e].truncate(k) * &c[e][a][b].truncate(k));
                acc = &acc + &(&pc * &(&fp[a] * &wp[b])).scale(0.5);
            }
        }
        acc
    };
    &half(&fp, &wx, &wp) - &half(&wp, &fx, &fp)
}

/// {f, w} at (x, p).
pub fn poisson_bracket(alg: &AlgebroidSpec, f: &dyn Field, w: &dyn Field, pt: &[f64]) -> Result<f64> {
    let (n, m) = (alg.n, alg.m);
    if pt.len() != n + m {
        return Err(Error::Dimension(format!("point of length {} (need {})", pt.len(), n + m)));
    }
    let cj = coordinate_jets(pt, 1);
    let rho = alg.rho_jets(&cj[..n])?;
    let c = alg.c_jets(&cj[..n])?;
    let fj = f.eval_jet(&cj)?;
    let wj = w.eval_jet(&cj)?;
    Ok(bracket_jets(n, m, &rho, &c, &cj[n..], &fj, &wj).value())
}

/// Checks on the dual frames at a point.
#[derive(Clone, Debug)]
pub struct DualFrameReport {
    /// max |[z̊_a, z̊_b] − C^e_ab z̊_e| on coordinates
    pub bracket_defect: f64,
    /// max |d d f| for the probe function
    pub d_squared: f64,
}

/// Dual frame checks at (x, p) using `probe` for (d*)² f = 0.
pub fn dual_frames(alg: Arc<AlgebroidSpec>, pt: &[f64], probe: &dyn Field) -> Result<DualFrameReport> {
    let m = alg.m;
    let chart = Chart::dual(alg, Arc::new(ZeroN { mv: m, mh: m }));
    let cf = chart.frame(pt, 2)?;
    let fj = probe.eval_jet(&coordinate_jets(pt, 2))?;
    let d1 = exterior_d(&cf.frame, &Form::scalar(fj, 2 * m));
    let d2 = exterior_d(&cf.frame, &d1);
    Ok(DualFrameReport { bracket_defect: cf.anchor_commutator_defect(), d_squared: d2.max_abs() })
}

/// Liouville section and canonical 2-section over (z̊, v̊).
#[derive(Clone, Debug)]
pub struct LiouvilleReport {
    pub theta: Vec<f64>,
    pub omega: Vec<Vec<f64>>,
    /// max |ω + dθ|
    pub exactness: f64,
    /// max |dω|
    pub closure: f64,
}

/// ω̆ = −dθ̆ with θ̆ = p_a z̊^a: ω̆(z̊_a, v̊^b) = δ_a^b, ω̆(z̊_a, z̊_b) = p_e C^e_ab.
pub fn liouville_sympletic(alg: &AlgebroidSpec, pt: &[f64]) -> Result<LiouvilleReport> {
    let (n, m) = (alg.n, alg.m);
    let cj = coordinate_jets(pt, 2);
    let c = alg.c_jets(&cj[..n])?;
    let r = 2 * m;
    let zero = cj[0].lift(0.0);
    let one = cj[0].lift(1.0);
    let omega = mat(r, r, |a, b| match (a < m, b < m) {
        (true, true) => sum(&zero, m, |e| &cj[n + e] * &c[e][a][b]),
        (true, false) if b - m == a => one.clone(),
        (false, true) if a - m == b => -&one,
        _ => zero.clone(),
    });
    let frame = alg.prolongation_frame(&pt[..n], &pt[n..], 2)?;
    let theta: Vec<Jet> = (0..r).map(|a| if a < m { cj[n + a].clone() } else { zero.clone() }).collect();
    let dtheta = exterior_d(&frame, &Form::one_form(theta));
    let om = Form::two_form(&omega);
    let exactness = om.comps.iter().zip(&dtheta.comps).fold(0.0_f64, |a, (x, y)| a.max((x.value() + y.value()).abs()));
    let closure = exterior_d(&frame, &om).max_abs();
    Ok(LiouvilleReport {
        theta: (0..r).map(|a| if a < m { pt[n + a] } else { 0.0 }).collect(),
        omega: omega.iter().map(|row| row.iter().map(|j| j.value()).collect()).collect(),
        exactness,
        closure,
    })
}

/// A regular Hamiltonian h(x, p).
#[derive(Clone)]
pub struct HamiltonianField {
    pub alg: Arc<AlgebroidSpec>,
    pub h: ScalarField,
}

/// Jets of the Hamilton data, two orders below the input coordinates.
pub struct HamiltonJets {
    pub h: Jet,
    /// ∂h/∂p_a, one order below the input
    pub dp: Vec<Jet>,
    /// ğ^ab = ½ ∂²h/∂p_a∂p_b
    pub gdual: Mat,
    /// g_ab, the inverse of ğ
    pub g: Mat,
}

impl HamiltonianField {
    pub fn new(alg: Arc<AlgebroidSpec>, h: ScalarField) -> Result<HamiltonianField> {
        if h.arity() != alg.n + alg.m {
            return Err(Error::Dimension(format!("Hamiltonian of arity {} on an algebroid with n + m = {}", h.arity(), alg.n + alg.m)));
        }
        Ok(HamiltonianField { alg, h })
    }

    /// The Legendre transform of a regular Lagrangian.
    pub fn from_lagrangian(lag: &LagrangianField) -> HamiltonianField {
        HamiltonianField { alg: lag.alg.clone(), h: Arc::new(LegendreHamiltonian { lag: lag.clone() }) }
    }

    pub fn jets(&self, coords: &[Jet]) -> Result<HamiltonJets> {
        let (n, m) = (self.alg.n, self.alg.m);
        if coords[0].order() < 2 {
            return Err(Error::Precondition("Hamilton jets need coordinate jets of order ≥ 2".into()));
        }
        let h = self.h.eval_jet(coords)?;
        let dp: Vec<Jet> = (0..m).map(|a| h.derivative(n + a)).collect();
        let gdual = mat(m, m, |a, b| dp[a].derivative(n + b).scale(0.5));
        let pt: Vec<f64> = coords.iter().map(|j| j.value()).collect();
        match check_conditioning("dual Hessian", &gdual, &pt) {
            Ok(_) => {}
            Err(Error::Singular { cond, .. }) => {
                return Err(Error::Regularity { point: pt, detail: format!("dual Hessian has condition number {cond:.3e}") })
            }
            Err(e) => return Err(e),
        }
        let gi = inverse(&gdual)?;
        let g = mat(m, m, |a, b| (&gi[a][b] + &gi[b][a]).scale(0.5));
        Ok(HamiltonJets { h, dp, gdual, g })
    }

    /// ğ^ab at (x, p).
    pub fn dual_hessian(&self, pt: &[f64]) -> Result<Vec<Vec<f64>>> {
        let hj = self.jets(&coordinate_jets(pt, 2))?;
        Ok(hj.gdual.iter().map(|r| r.iter().map(|j| j.value()).collect()).collect())
    }

    /// Hamilton vector field (ẋ, ṗ).
    pub fn vector_field(&self, pt: &[f64]) -> Result<Vec<f64>> {
        let (n, m) = (self.alg.n, self.alg.m);
        let cj = coordinate_jets(pt, 1);
        let h = self.h.eval_jet(&cj)?;
        let rho = self.alg.rho_jets(&coordinate_jets(&pt[..n], 0))?;
        let c = self.alg.c_jets(&coordinate_jets(&pt[..n], 0))?;
        let hp: Vec<f64> = (0..m).map(|a| h.derivative(n + a).value()).collect();
        let hx: Vec<f64> = (0..n).map(|i| h.derivative(i).value()).collect();
        let mut out = vec![0.0; n + m];
        for i in 0..n {
            out[i] = (0..m).map(|a| rho[a][i].value() * hp[a]).sum();
        }
        for a in 0..m {
            let mut s: f64 = (0..n).map(|i| rho[a][i].value() * hx[i]).sum();
            for e in 0..m {
                for b in 0..m {
                    s += c[e][a][b].value() * pt[n + e] * hp[b];
                }
            }
            out[n + a] = -s;
        }
        Ok(out)
    }

    /// max |ξ ⌋ ω̆ − dh| over the frame (z̊, v̊).
    pub fn contraction_residual(&self, pt: &[f64]) -> Result<f64> {
        let (n, m) = (self.alg.n, self.alg.m);
        let lv = liouville_sympletic(&self.alg, pt)?;
        let v = self.vector_field(pt)?;
        let cj = coordinate_jets(pt, 1);
        let h = self.h.eval_jet(&cj)?;
        let rho = self.alg.rho_jets(&coordinate_jets(&pt[..n], 0))?;
        let hp: Vec<f64> = (0..m).map(|a| h.derivative(n + a).value()).collect();
        let xi: Vec<f64> = hp.iter().cloned().chain(v[n..].iter().cloned()).collect();
        let mut worst = 0.0_f64;
        for b in 0..2 * m {
            let lhs: f64 = (0..2 * m).map(|a| xi[a] * lv.omega[a][b]).sum();
            let dh = if b < m { (0..n).map(|i| rho[b][i].value() * h.derivative(i).value()).sum() } else { hp[b - m] };
            worst = worst.max((lhs - dh).abs());
        }
        Ok(worst)
    }

    fn check_regular(&self, pt: &[f64]) -> Result<()> {
        self.jets(&coordinate_jets(pt, 2)).map(|_| ())
    }

    /// Hamilton flow by classical RK4 from (x0, p0).
    pub fn hamilton_flow(&self, x0: &[f64], p0: &[f64], t_end: f64, dt: f64, invariants: &[ScalarField]) -> Result<Trajectory> {
        let (n, m) = (self.alg.n, self.alg.m);
        if x0.len() != n || p0.len() != m {
            return Err(Error::Dimension("initial state does not match the algebroid".into()));
        }
        let y = [x0, p0].concat();
        self.check_regular(&y)?;
        let f = |s: &[f64]| self.vector_field(s);
        run_flow(&f, y, t_end, dt, |s| self.h.eval(s), invariants, |s| self.check_regular(s), n, 'p')
    }

    /// Dual prolongation chart with the canonical N-connection.
    pub fn chart(&self) -> Chart {
        Chart::dual(self.alg.clone(), Arc::new(DualN(self.clone())))
    }

    /// Canonical N_ab at (x, p) with its torsion τ_ab = N_ab − N_ba and
    /// curvature.
    pub fn dual_canonical_n(&self, pt: &[f64]) -> Result<DualNReport> {
        let m = self.alg.m;
        let nn = DualN(self.clone()).eval(&coordinate_jets(pt, 3))?;
        let nv: Vec<Vec<f64>> = (0..m).map(|a| (0..m).map(|b| nn[b][a].value()).collect()).collect();
        let tau = (0..m).flat_map(|a| (0..m).map(move |b| (a, b))).fold(0.0_f64, |w, (a, b)| w.max((nv[a][b] - nv[b][a]).abs()));
        let cf = self.chart().frame(pt, 0)?;
        let curvature = cf.omega.iter().map(|r| r.iter().map(|s| s.iter().map(|j| j.value()).collect()).collect()).collect();
        Ok(DualNReport { n: nv, tau, curvature })
    }

    /// Closure of the 2-section v̆_a ∧ z^a over the N-adapted dual frame, as
    /// written and with the structure-function term added.
    pub fn dual_symplectic(&self, pt: &[f64]) -> Result<DualSymplecticReport> {
        let (n, m) = (self.alg.n, self.alg.m);
        let cf = self.chart().frame(pt, 1)?;
        let cj = coordinate_jets(pt, 1);
        let c = self.alg.c_jets(&cj[..n])?;
        let r = 2 * m;
        let zero = cj[0].lift(0.0);
        let one = cj[0].lift(1.0);
        let literal = mat(r, r, |a, b| match (a < m, b < m) {
            (false, true) if a - m == b => one.clone(),
            (true, false) if b - m == a => -&one,
            _ => zero.clone(),
        });
        let completed = mat(r, r, |a, b| if a < m && b < m { sum(&zero, m, |e| &cj[n + e] * &c[e][a][b]) } else { -&literal[a][b] });
        let literal_closure = exterior_d(&cf.frame, &Form::two_form(&literal)).max_abs();
        let completed_closure = exterior_d(&cf.frame, &Form::two_form(&completed)).max_abs();
        // transport of ω̆ from (z̊, v̊) to the adapted frame, z_a = z̊_a − N_ab v̊^b
        let lv = liouville_sympletic(&self.alg, pt)?;
        let nab: Vec<Vec<f64>> = (0..m).map(|a| (0..m).map(|b| cf.nn[b][a].value()).collect()).collect();
        let basis = |a: usize| -> Vec<f64> {
            let mut v = vec![0.0; r];
            v[a] = 1.0;
            if a < m {
                for b in 0..m {
                    v[m + b] = -nab[a][b];
                }
            }
            v
        };
        let mut transport = 0.0_f64;
        for a in 0..r {
            for b in 0..r {
                let (va, vb) = (basis(a), basis(b));
                let w: f64 = (0..r).flat_map(|i| (0..r).map(move |j| (i, j))).map(|(i, j)| va[i] * lv.omega[i][j] * vb[j]).sum();
                transport = transport.max((w - completed[a][b].value()).abs());
            }
        }
        Ok(DualSymplecticReport { literal_closure, completed_closure, transport_defect: transport })
    }

    /// Dual d-metric (g_ab, ğ^ab) over the canonical N-adapted dual frame.
    pub fn dual_dmetric(&self) -> DMetric {
        DMetric::new(self.chart(), Arc::new(DualMetricSource(self.clone())))
    }

    /// Almost complex structure, d-metric, almost Kähler d-connection and
    /// Berwald connection on the dual side.
    pub fn dual_pack(&self, pt: &[f64]) -> Result<DualPack> {
        let m = self.alg.m;
        let gp = self.dual_dmetric().at(pt, 0)?;
        let f = dual_almost_complex(&gp.g, &gp.h);
        let finv = mat(2 * m, 2 * m, |i, j| -&f[i][j]);
        let r = 2 * m;
        let mut fsq = 0.0_f64;
        for i in 0..r {
            for j in 0..r {
                let s: f64 = (0..r).map(|k| f[i][k].value() * f[k][j].value()).sum();
                fsq = fsq.max((s + if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        let can = canonical_dconnection(&gp);
        let conn = f_compatible_dconnection(&can, &f, &finv, &gp);
        let (metricity, omega_parallel, f_parallel) = compatibility(&conn, &f, &gp);
        let berw = berwald_dconnection(&gp);
        let vals = |mm: &Mat| -> Vec<Vec<f64>> { mm.iter().map(|r| r.iter().map(|j| j.value()).collect()).collect() };
        Ok(DualPack {
            f: (0..r).map(|i| (0..r).map(|j| f[i][j].value()).collect()).collect(),
            f_square_defect: fsq,
            g: vals(&gp.g),
            gdual: vals(&gp.h),
            connection: conn.values(),
            metricity,
            omega_parallel,
            f_parallel,
            berwald: berw.values(),
            berwald_nonmetricity: nonmetricity(&berw, &gp).residuals(),
        })
    }
}

/// F̆(z_a) = g_ab v̆^b, F̆(v̆^a) = −ğ^ab z_b, stored as F[B][A].
pub fn dual_almost_complex(g: &Mat, gdual: &Mat) -> Mat {
    let m = g.len();
    let zero = g[0][0].lift(0.0);
    mat(2 * m, 2 * m, |b, a| match (a < m, b < m) {
        (true, false) => g[a][b - m].clone(),
        (false, true) => -&gdual[a - m][b],
        _ => zero.clone(),
    })
}

#[derive(Clone, Debug)]
pub struct DualNReport {
    /// N_ab as [a][b]
    pub n: Vec<Vec<f64>>,
    /// max |N_ab − N_ba|
    pub tau: f64,
    /// Ω[d][a][b] = z_a(N_bd) − z_b(N_ad)
    pub curvature: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug)]
pub struct DualSymplecticReport {
    /// max |dω| for v̆_a ∧ z^a alone
    pub literal_closure: f64,
    /// max |dω| after adding ½ p_a C^a_be z^b ∧ z^e
    pub completed_closure: f64,
    /// max difference between the completed form and ω̆ re-expressed in the
    /// adapted frame (vanishes when τ = 0)
    pub transport_defect: f64,
}

#[derive(Clone, Debug)]
pub struct DualPack {
    pub f: Vec<Vec<f64>>,
    pub f_square_defect: f64,
    pub g: Vec<Vec<f64>>,
    pub gdual: Vec<Vec<f64>>,
    pub connection: DConnValues,
    pub metricity: f64,
    pub omega_parallel: f64,
    pub f_parallel: f64,
    pub berwald: DConnValues,
    pub berwald_nonmetricity: [f64; 4],
}

/// Canonical dual N-connection
/// N_ab = ¼{g_ab, h} − ¼(g_ac ρ_b^i + g_bc ρ_a^i) ∂²h/∂p_c∂x^i, as fields[b][a].
pub struct DualN(pub HamiltonianField);

impl NSource for DualN {
    fn eval(&self, coords: &[Jet]) -> Result<Mat> {
        let alg = &self.0.alg;
        let (n, m) = (alg.n, alg.m);
        if coords[0].order() < 3 {
            return Err(Error::Precondition("dual N needs coordinate jets of order ≥ 3".into()));
        }
        let hj = self.0.jets(coords)?;
        let k = coords[0].order() - 3;
        let rho = alg.rho_jets(&coords[..n])?;
        let c = alg.c_jets(&coords[..n])?;
        let zero = hj.h.lift(0.0).truncate(k);
        let hpx: Vec<Vec<Jet>> = (0..m).map(|cc| (0..n).map(|i| hj.dp[cc].derivative(i).truncate(k)).collect()).collect();
        let nab = mat(m, m, |a, b| {
            let br = bracket_jets(n, m, &rho, &c, &coords[n..], &hj.g[a][b], &hj.h).truncate(k);
            let mut s = zero.clone();
            for cc in 0..m {
                for i in 0..n {
                    let t = &(&hj.g[a][cc].truncate(k) * &rho[b][i].truncate(k)) + &(&hj.g[b][cc].truncate(k) * &rho[a][i].truncate(k));
                    s = &s + &(&t * &hpx[cc][i]);
                }
            }
            (&br - &s).scale(0.25)
        });
        Ok(mat(m, m, |b, a| nab[a][b].clone()))
    }

    fn order_loss(&self) -> usize {
        3
    }
}

/// (g_ab, ğ^ab) as the horizontal and vertical blocks.
pub struct DualMetricSource(pub HamiltonianField);

impl MetricSource for DualMetricSource {
    fn eval(&self, coords: &[Jet]) -> Result<(Mat, Mat)> {
        let hj = self.0.jets(coords)?;
        Ok((hj.g, hj.gdual))
    }

    fn order_loss(&self) -> usize {
        2
    }
}

/// Legendre transform (x, u) ↦ (x, ∂l/∂u).
pub fn legendre_point(lag: &LagrangianField, pt: &[f64]) -> Result<Vec<f64>> {
    let n = lag.alg.n;
    Ok([&pt[..n], lag.momenta(pt)?.as_slice()].concat())
}

/// Solves ∂l/∂u (x, u) = p for u by Newton's method with Jacobian 2g.
pub fn inverse_legendre(lag: &LagrangianField, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    let m = p.len();
    let at = |u: &[f64]| -> Vec<f64> { [x, u].concat() };
    let two_g = |u: &[f64]| -> Result<DMatrix<f64>> {
        let g = lag.hessian(&at(u))?;
        Ok(DMatrix::from_fn(m, m, |i, j| 2.0 * g[i][j]))
    };
    let pv = DVector::from_column_slice(p);
    let mut u: Vec<f64> = match two_g(&vec![0.0; m]) {
        Ok(j) => match j.lu().solve(&pv) {
            Some(s) => s.iter().cloned().collect(),
            None => p.iter().map(|v| 0.5 * v).collect(),
        },
        Err(_) => p.iter().map(|v| 0.5 * v).collect(),
    };
    let scale = 1.0 + p.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let mut residual = f64::INFINITY;
    for _ in 0..50 {
        let r: Vec<f64> = lag.momenta(&at(&u))?.iter().zip(p).map(|(a, b)| a - b).collect();
        residual = r.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if residual <= 1e-12 * scale {
            return Ok(u);
        }
        let j = two_g(&u)?;
        let step = j
            .lu()
            .solve(&DVector::from_vec(r))
            .ok_or_else(|| Error::Regularity { point: at(&u), detail: "singular Newton Jacobian".into() })?;
        for (ui, s) in u.iter_mut().zip(step.iter()) {
            *ui -= s;
        }
    }
    Err(Error::Convergence { iterations: 50, residual })
}

/// h(x, p) = p_a u^a − l(x, u) with u solving ∂l/∂u = p; evaluable on jets by
/// refining the Taylor expansion of u(x, p) around the Newton solution.
pub struct LegendreHamiltonian {
    pub lag: LagrangianField,
}

impl Field for LegendreHamiltonian {
    fn arity(&self) -> usize {
        self.lag.alg.n + self.lag.alg.m
    }

    fn eval_jet(&self, args: &[Jet]) -> Result<Jet> {
        let (n, m) = (self.lag.alg.n, self.lag.alg.m);
        let order = args.iter().map(|j| j.order()).min().unwrap_or(0);
        let x0: Vec<f64> = args[..n].iter().map(|j| j.value()).collect();
        let p0: Vec<f64> = args[n..].iter().map(|j| j.value()).collect();
        let u0 = inverse_legendre(&self.lag, &x0, &p0)?;
        let centre = [x0.as_slice(), u0.as_slice()].concat();
        let l = self.lag.l.eval_jet(&coordinate_jets(&centre, order + 1))?;
        let pj: Vec<Jet> = (0..m).map(|a| l.derivative(n + a)).collect();
        let g = self.lag.hessian(&centre)?;
        let jinv = DMatrix::from_fn(m, m, |i, j| 2.0 * g[i][j])
            .try_inverse()
            .ok_or_else(|| Error::Regularity { point: centre.clone(), detail: "singular Legendre Jacobian".into() })?;
        let mut u: Vec<Jet> = u0.iter().map(|&v| args[0].lift(v)).collect();
        for _ in 0..=order {
            let inputs: Vec<Jet> = args[..n].iter().cloned().chain(u.iter().cloned()).collect();
            let r: Vec<Jet> = (0..m).map(|a| &pj[a].compose(&inputs) - &args[n + a]).collect();
            u = (0..m)
                .map(|a| {
                    let mut acc = u[a].clone();
                    for (b, rb) in r.iter().enumerate() {
                        acc = &acc - &rb.scale(jinv[(a, b)]);
                    }
                    acc
                })
                .collect();
        }
        let inputs: Vec<Jet> = args[..n].iter().cloned().chain(u.iter().cloned()).collect();
        let lu = l.truncate(order).compose(&inputs);
        let pu = sum(&lu.lift(0.0), m, |a| &args[n + a] * &u[a]);
        Ok(&pu - &lu)
    }

    fn describe(&self) -> String {
        format!("Legendre transform of {}", self.lag.l.describe())
    }
}
