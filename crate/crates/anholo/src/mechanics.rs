//! Lagrange, Finsler and generalized Lagrange structures on the prolongation of
//! an algebroid with coordinates (x, u).
//!
//! Sign convention for the structure-function terms: the Euler–Lagrange
//! equations read d/dt ∂l/∂u^a = ρ_a^i ∂_i l − C^e_ab u^b ∂l/∂u^e, which for the
//! so(3) action algebroid and l = ½ Σ I_a u_a² are Euler's rigid body equations.
//! The semispray follows from them with u̇ = −2G.

use std::sync::Arc;

use crate::algebroid::AlgebroidSpec;
use crate::calculus::{exterior_d, interior, Form};
use crate::error::{Error, Result};
use crate::field::{fn_field, ScalarField};
use crate::geometry::{
    berwald_dconnection, canonical_dconnection, covariant_derivative_02, covariant_derivative_endo, f_compatible_dconnection, nonmetricity,
    DConn, DConnValues, DMetric, GeomPoint, MetricSource, NonmetricityBlocks,
};
use crate::jets::{coordinate_jets, Jet};
use crate::linalg::{check_conditioning, inverse, mat, max_abs_t3, min_eigenvalue, sum, values, Mat};
use crate::nconnection::{Chart, NSource};
use crate::numeric::{rk4_step, DomainBox};

/// Jets of the Lagrange data at one point, `order` levels below the input.
#[derive(Clone, Debug)]
pub struct LagrangeJets {
    pub l: Jet,
    /// p_a = ∂l/∂u^a
    pub p: Vec<Jet>,
    /// g_ab = ½ ∂²l/∂u^a∂u^b
    pub g: Mat,
    pub ginv: Mat,
    /// G^a
    pub spray: Vec<Jet>,
}

/// A regular Lagrangian l(x, u) on an algebroid.
#[derive(Clone)]
pub struct LagrangianField {
    pub alg: Arc<AlgebroidSpec>,
    pub l: ScalarField,
    pub domain: Option<DomainBox>,
}

impl LagrangianField {
    pub fn new(alg: Arc<AlgebroidSpec>, l: ScalarField) -> Result<LagrangianField> {
        if l.arity() != alg.n + alg.m {
            return Err(Error::Dimension(format!("Lagrangian of arity {} on an algebroid with n + m = {}", l.arity(), alg.n + alg.m)));
        }
        Ok(LagrangianField { alg, l, domain: None })
    }

    pub fn with_domain(mut self, domain: DomainBox) -> Self {
        self.domain = Some(domain);
        self
    }

    fn dims(&self) -> (usize, usize) {
        (self.alg.n, self.alg.m)
    }

    /// Lagrange jets from coordinate jets of order K ≥ 2; results have order K − 2
    /// (p has K − 1 before truncation).
    pub fn jets(&self, coords: &[Jet]) -> Result<LagrangeJets> {
        let (n, m) = self.dims();
        let k0 = coords[0].order();
        if k0 < 2 {
            return Err(Error::Precondition("Lagrange jets need coordinate jets of order ≥ 2".into()));
        }
        let k = k0 - 2;
        let l = self.l.eval_jet(coords)?;
        let p1: Vec<Jet> = (0..m).map(|a| l.derivative(n + a)).collect();
        let g = mat(m, m, |a, b| p1[a].derivative(n + b).scale(0.5));
        let pt: Vec<f64> = coords.iter().map(|j| j.value()).collect();
        regularity(&g, &pt)?;
        let ginv = inverse(&g).map_err(|_| Error::Regularity { point: pt.clone(), detail: "Hessian is singular".into() })?;
        let rho = self.alg.rho_jets(&coords[..n])?;
        let c = self.alg.c_jets(&coords[..n])?;
        let zero = l.truncate(k).lift(0.0);
        let u: Vec<Jet> = (0..m).map(|a| coords[n + a].truncate(k)).collect();
        let dl: Vec<Jet> = (0..n).map(|i| l.derivative(i).truncate(k)).collect();
        let p: Vec<Jet> = p1.iter().map(|j| j.truncate(k)).collect();
        let a_vec: Vec<Jet> = (0..m)
            .map(|b| {
                let mut acc = zero.clone();
                for i in 0..n {
                    let dpb = p1[b].derivative(i);
                    let flow = sum(&zero, m, |cc| &rho[cc][i].truncate(k) * &u[cc]);
                    acc = &acc + &(&dpb * &flow);
                    acc = &acc - &(&rho[b][i].truncate(k) * &dl[i]);
                }
                for e in 0..m {
                    for cc in 0..m {
                        acc = &acc + &(&(&c[e][b][cc].truncate(k) * &u[cc]) * &p[e]);
                    }
                }
                acc
            })
            .collect();
        let spray = (0..m).map(|a| sum(&zero, m, |b| &ginv[a][b] * &a_vec[b]).scale(0.25)).collect();
        Ok(LagrangeJets { l: l.truncate(k), p: p1, g, ginv, spray })
    }

    fn at(&self, pt: &[f64], order: usize) -> Result<LagrangeJets> {
        let (n, m) = self.dims();
        if pt.len() != n + m {
            return Err(Error::Dimension(format!("point of length {} (need {})", pt.len(), n + m)));
        }
        self.jets(&coordinate_jets(pt, order + 2))
    }

    /// g_ab = ½ ∂²l/∂u^a∂u^b at (x, u).
    pub fn hessian(&self, pt: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(values2(&self.at(pt, 0)?.g))
    }

    /// Semispray coefficients G^a.
    pub fn semispray(&self, pt: &[f64]) -> Result<Vec<f64>> {
        Ok(self.at(pt, 0)?.spray.iter().map(|j| j.value()).collect())
    }

    /// Canonical N-connection N^a_b = ∂G^a/∂u^b as [a][b].
    pub fn canonical_n(&self, pt: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.alg.n;
        let lj = self.at(pt, 1)?;
        Ok(lj.spray.iter().map(|g| (0..self.alg.m).map(|b| g.derivative(n + b).value()).collect()).collect())
    }

    pub fn momenta(&self, pt: &[f64]) -> Result<Vec<f64>> {
        let l = self.l.eval_jet(&coordinate_jets(pt, 1))?;
        Ok((0..self.alg.m).map(|a| l.derivative(self.alg.n + a).value()).collect())
    }

    /// E_l = p_a u^a − l.
    pub fn energy(&self, pt: &[f64]) -> Result<f64> {
        let (n, m) = self.dims();
        let l = self.l.eval_jet(&coordinate_jets(pt, 1))?;
        Ok((0..m).map(|a| l.derivative(n + a).value() * pt[n + a]).sum::<f64>() - l.value())
    }

    /// Velocity field (ẋ, u̇) of the Euler–Lagrange flow.
    pub fn vector_field(&self, pt: &[f64]) -> Result<Vec<f64>> {
        let (n, m) = self.dims();
        let lj = self.at(pt, 0)?;
        let rho = self.alg.rho_jets(&coordinate_jets(&pt[..n], 0))?;
        let mut out = vec![0.0; n + m];
        for i in 0..n {
            out[i] = (0..m).map(|b| rho[b][i].value() * pt[n + b]).sum();
        }
        for a in 0..m {
            out[n + a] = -2.0 * lj.spray[a].value();
        }
        Ok(out)
    }

    /// Prolongation chart carrying the canonical N-connection.
    pub fn chart(&self) -> Chart {
        Chart::prolongation(self.alg.clone(), Arc::new(self.clone()))
    }

    /// Sasaki-type d-metric g ⊕ g over the canonical N-adapted frame.
    pub fn sasaki(&self) -> DMetric {
        DMetric::new(self.chart(), Arc::new(SasakiSource(self.clone())))
    }

    /// Poincaré–Cartan data at (x, u), over the frame (z̃, ṽ).
    pub fn poincare_cartan(&self, pt: &[f64]) -> Result<PoincareCartan> {
        let (n, m) = self.dims();
        let coords = coordinate_jets(pt, 3);
        let lj = self.jets(&coords)?;
        let rho = self.alg.rho_jets(&coords[..n])?;
        let c = self.alg.c_jets(&coords[..n])?;
        // θ and E keep order 2, ω order 1
        let p2 = &lj.p;
        let zero1 = lj.l.lift(0.0);
        let anchor = |a: usize, f: &Jet| -> Jet { sum(&zero1, n, |i| &rho[a][i].truncate(1) * &f.derivative(i)) };
        let r = 2 * m;
        let omega = mat(r, r, |a, b| match (a < m, b < m) {
            (true, true) => {
                let pc = sum(&zero1, m, |e| &c[e][a][b].truncate(1) * &p2[e].truncate(1));
                &(&pc - &anchor(a, &p2[b])) + &anchor(b, &p2[a])
            }
            (true, false) => lj.g[a][b - m].scale(2.0),
            (false, true) => lj.g[b][a - m].scale(-2.0),
            _ => zero1.clone(),
        });
        let frame = self.alg.prolongation_frame(&pt[..n], &pt[n..], 2)?;
        let zero2 = p2[0].lift(0.0);
        let theta_jets: Vec<Jet> = (0..r).map(|a| if a < m { p2[a].clone() } else { zero2.clone() }).collect();
        let dtheta = exterior_d(&frame, &Form::one_form(theta_jets));
        let om = Form::two_form(&omega);
        let exactness = om.comps.iter().zip(&dtheta.comps).fold(0.0_f64, |a, (x, y)| a.max((x.value() + y.value()).abs()));
        let closure = exterior_d(&frame, &om).max_abs();
        // i_ξ ω − dE with ξ = u^a z̃_a − 2G^a ṽ_a
        let l2 = self.l.eval_jet(&coordinate_jets(pt, 2))?;
        let e_jet = &sum(&l2.lift(0.0).truncate(1), m, |a| &l2.derivative(n + a) * &coords[n + a].truncate(1)) - &l2.truncate(1);
        let de = exterior_d(&frame, &Form::scalar(e_jet.clone(), r));
        let xi: Vec<Jet> =
            (0..r).map(|a| if a < m { coords[n + a].truncate(0) } else { lj.spray[a - m].truncate(0).scale(-2.0) }).collect();
        let om0 = Form::two_form(&omega.iter().map(|row| row.iter().map(|j| j.truncate(0)).collect()).collect());
        let contraction_form = interior(&xi, &om0);
        let contraction = contraction_form.comps.iter().zip(&de.comps).fold(0.0_f64, |a, (x, y)| a.max((x.value() - y.value()).abs()));
        let xi_vals: Vec<f64> = xi.iter().map(|j| j.value()).collect();
        let (sode, _) = crate::algebroid::sode_check(&xi_vals, &pt[n..]);
        Ok(PoincareCartan {
            theta: (0..r).map(|a| if a < m { p2[a].value() } else { 0.0 }).collect(),
            omega: values2(&omega),
            energy: e_jet.value(),
            xi: xi_vals,
            exactness,
            closure,
            contraction,
            sode,
        })
    }

    /// Almost complex structure, induced 2-form and Sasaki metric over the
    /// canonical N-adapted frame at (x, u).
    pub fn almost_kahler(&self, pt: &[f64]) -> Result<AlmostKahler> {
        let m = self.alg.m;
        let g = self.hessian(pt)?;
        let r = 2 * m;
        let mut metric = vec![vec![0.0; r]; r];
        for a in 0..m {
            for b in 0..m {
                metric[a][b] = g[a][b];
                metric[m + a][m + b] = g[a][b];
            }
        }
        let f = values(&almost_complex_jets(m, m, &Jet::constant(1, 0, 0.0)));
        let f_rows: Vec<Vec<f64>> = (0..r).map(|i| (0..r).map(|j| f[(i, j)]).collect()).collect();
        // ω(c_A, c_B) from the blocks: ω(v_a, z_b) = g_ab
        let mut omega = vec![vec![0.0; r]; r];
        for a in 0..m {
            for b in 0..m {
                omega[m + a][b] = g[a][b];
                omega[a][m + b] = -g[a][b];
            }
        }
        let f2 = &f * &f;
        let fsq = (f2 + nalgebra::DMatrix::identity(r, r)).amax();
        let mut anti = 0.0_f64;
        let mut compat = 0.0_f64;
        for a in 0..r {
            for b in 0..r {
                anti = anti.max((omega[a][b] + omega[b][a]).abs());
                let gf: f64 = (0..r).map(|c| f_rows[c][a] * metric[c][b]).sum();
                compat = compat.max((omega[a][b] - gf).abs());
            }
        }
        Ok(AlmostKahler { f: f_rows, omega, metric, f_square_defect: fsq, omega_antisymmetry: anti, compatibility: compat })
    }

    /// Almost Kähler d-connection (L̂, L̂, K̂, K̂) with its compatibility
    /// residuals and its distance from the canonical d-connection of the
    /// Sasaki metric.
    pub fn lagrange_dconnection(&self, pt: &[f64]) -> Result<LagrangeConnection> {
        let m = self.alg.m;
        let gp = self.sasaki().at(pt, 0)?;
        let can = canonical_dconnection(&gp);
        let like = gp.g[0][0].clone();
        let f = almost_complex_jets(m, m, &like);
        let finv = mat(2 * m, 2 * m, |i, j| -&f[i][j]);
        let conn = f_compatible_dconnection(&can, &f, &finv, &gp);
        let report = compatibility(&conn, &f, &gp);
        let diff = conn.sub(&can);
        Ok(LagrangeConnection {
            connection: conn.values(),
            canonical: can.values(),
            block_deviation: [max_abs_t3(&diff.lh), max_abs_t3(&diff.lv), max_abs_t3(&diff.kh), max_abs_t3(&diff.kv)],
            metricity: report.0,
            omega_parallel: report.1,
            f_parallel: report.2,
        })
    }

    /// Euler–Lagrange flow by classical RK4 from (x0, u0) over [0, t_end].
    pub fn integrate_el(&self, x0: &[f64], u0: &[f64], t_end: f64, dt: f64, invariants: &[ScalarField]) -> Result<Trajectory> {
        let (n, m) = self.dims();
        if x0.len() != n || u0.len() != m {
            return Err(Error::Dimension("initial state does not match the algebroid".into()));
        }
        let mut y = x0.to_vec();
        y.extend_from_slice(u0);
        self.check_regular(&y)?;
        let f = |s: &[f64]| self.vector_field(s);
        let mut traj = run_flow(&f, y, t_end, dt, |s| self.energy(s), invariants, |s| self.check_regular(s), n, 'u')?;
        traj.el_residual = Some(self.el_residual(&traj)?);
        Ok(traj)
    }

    fn check_regular(&self, pt: &[f64]) -> Result<()> {
        let g = self.at(pt, 0)?.g;
        regularity(&g, pt)
    }

    /// Max over interior samples of |d/dt p_a − ρ_a^i ∂_i l + C^e_ab u^b p_e|,
    /// with d/dt by central differences.
    pub fn el_residual(&self, traj: &Trajectory) -> Result<f64> {
        let (n, m) = self.dims();
        let states: Vec<Vec<f64>> = traj.x.iter().zip(&traj.y).map(|(x, u)| [x.as_slice(), u.as_slice()].concat()).collect();
        let ps: Vec<Vec<f64>> = states.iter().map(|s| self.momenta(s)).collect::<Result<_>>()?;
        let mut worst = 0.0_f64;
        for k in 1..states.len().saturating_sub(1) {
            let h = traj.t[k + 1] - traj.t[k - 1];
            let s = &states[k];
            let cj = coordinate_jets(s, 1);
            let l = self.l.eval_jet(&cj)?;
            let rho = self.alg.rho_jets(&coordinate_jets(&s[..n], 0))?;
            let c = self.alg.c_jets(&coordinate_jets(&s[..n], 0))?;
            for a in 0..m {
                let mut r = (ps[k + 1][a] - ps[k - 1][a]) / h;
                for i in 0..n {
                    r -= rho[a][i].value() * l.derivative(i).value();
                }
                for e in 0..m {
                    for b in 0..m {
                        r += c[e][a][b].value() * s[n + b] * ps[k][e];
                    }
                }
                worst = worst.max(r.abs());
            }
        }
        Ok(worst)
    }
}

fn values2(m: &Mat) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(|j| j.value()).collect()).collect()
}

fn regularity(g: &Mat, pt: &[f64]) -> Result<()> {
    match check_conditioning("Hessian", g, pt) {
        Ok(_) => Ok(()),
        Err(Error::Singular { cond, .. }) => {
            Err(Error::Regularity { point: pt.to_vec(), detail: format!("Hessian has condition number {cond:.3e}") })
        }
        Err(e) => Err(e),
    }
}

impl NSource for LagrangianField {
    fn eval(&self, coords: &[Jet]) -> Result<Mat> {
        let n = self.alg.n;
        let lj = self.jets(coords)?;
        Ok(lj.spray.iter().map(|g| (0..self.alg.m).map(|b| g.derivative(n + b)).collect()).collect())
    }

    fn order_loss(&self) -> usize {
        3
    }
}

/// g ⊕ g with g the Lagrange Hessian.
pub struct SasakiSource(pub LagrangianField);

impl MetricSource for SasakiSource {
    fn eval(&self, coords: &[Jet]) -> Result<(Mat, Mat)> {
        let g = self.0.jets(coords)?.g;
        Ok((g.clone(), g))
    }

    fn order_loss(&self) -> usize {
        2
    }
}

/// F over (z_a', v_a) as F[B][A] (F c_A = F^B_A c_B): F(z_a) = −v_a, F(v_a) = z_a.
pub fn almost_complex_jets(mh: usize, mv: usize, like: &Jet) -> Mat {
    let r = mh + mv;
    let one = like.lift(1.0);
    let zero = like.lift(0.0);
    mat(r, r, |b, a| {
        if a < mh && b == mh + a {
            -&one
        } else if a >= mh && b + mh == a {
            one.clone()
        } else {
            zero.clone()
        }
    })
}

/// Max residuals of (DG, Dω, DF) for ω(c_A, c_B) = G(F c_A, c_B).
pub fn compatibility(conn: &DConn, f: &Mat, gp: &GeomPoint) -> (f64, f64, f64) {
    let full = conn.full();
    let gm = gp.full_metric();
    let r = gp.rank();
    let zero = gm[0][0].lift(0.0);
    let omega = mat(r, r, |a, b| sum(&zero, r, |c| &f[c][a] * &gm[c][b]));
    (
        max_abs_t3(&covariant_derivative_02(&full, &gm, gp)),
        max_abs_t3(&covariant_derivative_02(&full, &omega, gp)),
        max_abs_t3(&covariant_derivative_endo(&full, f, gp)),
    )
}

/// Poincaré–Cartan section, 2-section and energy at a point, with the
/// identities they satisfy.
#[derive(Clone, Debug)]
pub struct PoincareCartan {
    /// θ over (z̃, ṽ)
    pub theta: Vec<f64>,
    /// ω over (z̃, ṽ)
    pub omega: Vec<Vec<f64>>,
    pub energy: f64,
    /// Euler–Lagrange section over (z̃, ṽ)
    pub xi: Vec<f64>,
    /// max |ω + dθ|
    pub exactness: f64,
    /// max |dω|
    pub closure: f64,
    /// max |i_ξ ω − dE|
    pub contraction: f64,
    pub sode: bool,
}

#[derive(Clone, Debug)]
pub struct AlmostKahler {
    pub f: Vec<Vec<f64>>,
    pub omega: Vec<Vec<f64>>,
    pub metric: Vec<Vec<f64>>,
    pub f_square_defect: f64,
    pub omega_antisymmetry: f64,
    /// max |ω − Fᵀ G|
    pub compatibility: f64,
}

#[derive(Clone, Debug)]
pub struct LagrangeConnection {
    pub connection: DConnValues,
    pub canonical: DConnValues,
    /// max deviation from the canonical d-connection per block (lh, lv, kh, kv)
    pub block_deviation: [f64; 4],
    pub metricity: f64,
    pub omega_parallel: f64,
    pub f_parallel: f64,
}

/// Sampled integral curve with diagnostics.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    /// fiber coordinates (u or p)
    pub y: Vec<Vec<f64>>,
    pub fiber_symbol: char,
    pub energy: Vec<f64>,
    /// invariants[k][j] at t[k]
    pub invariants: Vec<Vec<f64>>,
    pub el_residual: Option<f64>,
}

impl Trajectory {
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy.iter().fold(0.0_f64, |a, e| a.max((e - e0).abs()))
    }

    pub fn invariant_drift(&self) -> Vec<f64> {
        let k = self.invariants.first().map(|v| v.len()).unwrap_or(0);
        (0..k)
            .map(|j| {
                let i0 = self.invariants[0][j];
                self.invariants.iter().fold(0.0_f64, |a, v| a.max((v[j] - i0).abs()))
            })
            .collect()
    }

    pub fn final_state(&self) -> Vec<f64> {
        let k = self.t.len() - 1;
        [self.x[k].as_slice(), self.y[k].as_slice()].concat()
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn run_flow<F, E, C>(
    f: &F,
    y0: Vec<f64>,
    t_end: f64,
    dt: f64,
    energy: E,
    invariants: &[ScalarField],
    check: C,
    n: usize,
    fiber_symbol: char,
) -> Result<Trajectory>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
    E: Fn(&[f64]) -> Result<f64>,
    C: Fn(&[f64]) -> Result<()>,
{
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::Validation(format!("invalid time grid: t_end = {t_end}, dt = {dt}")));
    }
    let steps = (t_end / dt).round() as usize;
    let inv = |s: &[f64]| -> Result<Vec<f64>> { invariants.iter().map(|q| q.eval(s)).collect() };
    let mut traj = Trajectory {
        t: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
        fiber_symbol,
        energy: Vec::with_capacity(steps + 1),
        invariants: Vec::with_capacity(steps + 1),
        el_residual: None,
    };
    let mut y = y0;
    for k in 0..=steps {
        if k > 0 {
            y = rk4_step(f, &y, dt)?;
            if k % 100 == 0 {
                check(&y)?;
            }
        }
        traj.t.push(k as f64 * dt);
        traj.x.push(y[..n].to_vec());
        traj.y.push(y[n..].to_vec());
        traj.energy.push(energy(&y)?);
        traj.invariants.push(inv(&y)?);
    }
    Ok(traj)
}

/// A fundamental Finsler function f(x, u), 1-homogeneous in u.
#[derive(Clone)]
pub struct FinslerField {
    pub alg: Arc<AlgebroidSpec>,
    pub f: ScalarField,
    pub domain: DomainBox,
    lagrangian: LagrangianField,
}

/// Outcome of the homogeneity and positivity scan.
#[derive(Clone, Debug)]
pub struct FinslerChecks {
    pub samples: usize,
    pub worst_homogeneity: f64,
    pub min_value: f64,
    pub min_eigenvalue: f64,
}

impl FinslerField {
    /// Validates homogeneity on 16 sampled (x, u, λ), λ ∈ {0.5, 2, 3}, and
    /// positivity of f and of its fundamental tensor.
    pub fn new(alg: Arc<AlgebroidSpec>, f: ScalarField, domain: DomainBox) -> Result<(FinslerField, FinslerChecks)> {
        let fc = f.clone();
        let l = fn_field(f.arity(), "f^2", move |a: &[Jet]| {
            let v = fc.eval_jet(a)?;
            Ok(&v * &v)
        });
        let lagrangian = LagrangianField::new(alg.clone(), l)?.with_domain(domain.clone());
        let ff = FinslerField { alg, f, domain, lagrangian };
        let checks = ff.check(16)?;
        Ok((ff, checks))
    }

    fn check(&self, samples: usize) -> Result<FinslerChecks> {
        let n = self.alg.n;
        let lambdas = [0.5, 2.0, 3.0];
        let mut out = FinslerChecks { samples, worst_homogeneity: 0.0, min_value: f64::INFINITY, min_eigenvalue: f64::INFINITY };
        for (k, p) in self.domain.halton(samples, 0).iter().enumerate() {
            let lam = lambdas[k % 3];
            let f0 = self.f.eval(p)?;
            let mut q = p.clone();
            for v in q[n..].iter_mut() {
                *v *= lam;
            }
            let f1 = self.f.eval(&q)?;
            let rel = (f1 - lam * f0).abs() / (lam * f0.abs()).max(1e-300);
            if rel > 1e-10 {
                return Err(Error::Validation(format!("f is not 1-homogeneous: relative defect {rel:.3e} for λ = {lam} at {p:?}")));
            }
            out.worst_homogeneity = out.worst_homogeneity.max(rel);
            if !(f0 > 0.0) {
                return Err(Error::Validation(format!("f = {f0} is not positive at {p:?}")));
            }
            out.min_value = out.min_value.min(f0);
            let g = self.lagrangian.at(p, 0)?.g;
            let ev = min_eigenvalue(&values(&g));
            if !(ev > 0.0) {
                return Err(Error::Validation(format!("fundamental tensor is not positive definite at {p:?} (min eigenvalue {ev:.3e})")));
            }
            out.min_eigenvalue = out.min_eigenvalue.min(ev);
        }
        Ok(out)
    }

    /// Lagrangian f².
    pub fn lagrangian(&self) -> &LagrangianField {
        &self.lagrangian
    }

    /// Finsler objects at (x, u).
    pub fn pack(&self, pt: &[f64]) -> Result<FinslerPack> {
        let lag = &self.lagrangian;
        let g = lag.hessian(pt)?;
        let nc = lag.canonical_n(pt)?;
        let gp = lag.sasaki().at(pt, 0)?;
        let lc = lag.lagrange_dconnection(pt)?;
        let berw = berwald_dconnection(&gp);
        let q = nonmetricity(&berw, &gp);
        let res = q.residuals();
        Ok(FinslerPack {
            g,
            n: nc,
            connection: lc.connection,
            berwald: berw.values(),
            berwald_partial_metricity: (res[0], res[3]),
            berwald_nonmetricity: q,
        })
    }
}

#[derive(Clone, Debug)]
pub struct FinslerPack {
    pub g: Vec<Vec<f64>>,
    /// N^a_b as [a][b]
    pub n: Vec<Vec<f64>>,
    pub connection: DConnValues,
    pub berwald: DConnValues,
    pub berwald_nonmetricity: NonmetricityBlocks,
    /// horizontal derivative of g and vertical derivative of h under the
    /// Berwald connection (both vanish)
    pub berwald_partial_metricity: (f64, f64),
}

/// A generalized Lagrange metric g_ab(x, u).
#[derive(Clone)]
pub struct GLMetricField {
    pub alg: Arc<AlgebroidSpec>,
    pub g: Vec<Vec<ScalarField>>,
}

#[derive(Clone, Debug)]
pub struct GLPack {
    pub epsilon: f64,
    pub hessian: Vec<Vec<f64>>,
    pub semispray: Vec<f64>,
    pub n: Vec<Vec<f64>>,
}

impl GLMetricField {
    pub fn new(alg: Arc<AlgebroidSpec>, g: Vec<Vec<ScalarField>>) -> Result<GLMetricField> {
        let m = alg.m;
        if g.len() != m || g.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension(format!("GL metric must be {m}×{m}")));
        }
        Ok(GLMetricField { alg, g })
    }

    /// Absolute energy ε = g_ab u^a u^b as a Lagrangian.
    pub fn absolute_energy(&self) -> Result<LagrangianField> {
        let (n, m) = (self.alg.n, self.alg.m);
        let g = self.g.clone();
        let eps = fn_field(n + m, "epsilon", move |a: &[Jet]| {
            let mut acc = a[0].lift(0.0);
            for (i, row) in g.iter().enumerate() {
                for (j, gij) in row.iter().enumerate() {
                    acc = &acc + &(&gij.eval_jet(a)? * &(&a[n + i] * &a[n + j]));
                }
            }
            Ok(acc)
        });
        LagrangianField::new(self.alg.clone(), eps)
    }

    /// Symmetry and nondegeneracy of g at a point.
    pub fn check(&self, pt: &[f64]) -> Result<()> {
        let cj = coordinate_jets(pt, 0);
        let g: Mat = self.g.iter().map(|r| r.iter().map(|f| f.eval_jet(&cj)).collect()).collect::<Result<_>>()?;
        for i in 0..g.len() {
            for j in 0..i {
                if (g[i][j].value() - g[j][i].value()).abs() > 1e-12 {
                    return Err(Error::Validation(format!("GL metric is not symmetric at {pt:?}")));
                }
            }
        }
        regularity(&g, pt)
    }

    pub fn pack(&self, pt: &[f64]) -> Result<GLPack> {
        self.check(pt)?;
        let lag = self.absolute_energy()?;
        Ok(GLPack { epsilon: lag.l.eval(pt)?, hessian: lag.hessian(pt)?, semispray: lag.semispray(pt)?, n: lag.canonical_n(pt)? })
    }
}
